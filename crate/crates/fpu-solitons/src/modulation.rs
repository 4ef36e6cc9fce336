//! Decomposition of a lattice state into solitary waves plus a residual.
//!
//! A state near a sum of N waves is written
//!
//! ```text
//! u = sum_i u_{c_i}(. - x_i) + v
//! ```
//!
//! with the 2N parameters `(c_i, x_i)` fixed by the symplectic orthogonality
//! conditions
//!
//! ```text
//! <v, J^-1 d/dx u_{c_i}(. - x_i)> = 0,   <v, J^-1 d/dc u_{c_i}(. - x_i)> = 0.
//! ```
//!
//! Newton's method drives the 2N pairings to zero; its Jacobian is, to
//! leading order, the Gram matrix of symplectic pairings among the tangent
//! fields, which is also the quantity whose block structure the theory
//! describes: diagonal 2x2 blocks tend to
//! `B1(c) = -(c eps)^-1 theta1(c) sigma3 - eps^2 theta2(c) e21` with
//! `theta1 = dH(u_c)/dc`, sub-diagonal blocks tend to the constant
//! `B2 = -eps^2 theta3 e21`, and super-diagonal blocks decay exponentially
//! in the separation, making the matrix dominantly lower triangular.
//!
//! `track` re-runs the decomposition along a trajectory with warm starts,
//! yielding the modulation curves `c_i(t), x_i(t)` and residual norms.

use crate::error::Error;
use crate::field::LatticeField;
use crate::fit;
use crate::integrate::Trajectory;
use crate::ops::{hamiltonian, pairing};
use crate::profile::{eps_of_c, InterpolatedProfile, ProfileFamily};
use crate::weights::{weighted_norm, WeightSpec};
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// Hard ceiling on the scaled Gram condition number; beyond it the waves are
/// too entangled for the decomposition to mean anything.
pub const COND_LIMIT: f64 = 1e12;

/// Newton iteration controls.
#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    /// Orthogonality tolerance relative to the input norm.
    pub orth_tol_rel: f64,
    pub max_iter: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            orth_tol_rel: 1e-9,
            max_iter: 50,
        }
    }
}

/// The 2N x 2N matrix of symplectic pairings among the wave tangents, in raw
/// and epsilon-scaled form, together with the theta invariants its leading
/// blocks are made of.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    /// Raw pairings; block (i, j) is
    /// `[[<d_c u_j, J^-1 d_x u_i>, <d_x u_j, J^-1 d_x u_i>],
    ///   [<d_c u_j, J^-1 d_c u_i>, <d_x u_j, J^-1 d_c u_i>]]`.
    pub raw: DMatrix<f64>,
    /// Entries scaled by `eps^-1, eps^-4, eps^2, eps^-1` per block position,
    /// the normalization in which all leading entries are order one.
    pub scaled: DMatrix<f64>,
    /// Scale parameter used: `eps(min_i c_i)`.
    pub eps: f64,
    /// Condition number of the scaled matrix.
    pub cond: f64,
    /// `theta1(c_i) = dH(u_c)/dc`, by centered differencing over the family.
    pub theta1: Vec<f64>,
    /// `theta2(c_i) = <d_c p, 1> <d_c r, 1>`.
    pub theta2: Vec<f64>,
    /// Row sums `(<d_c r, 1>, <d_c p, 1>)` per wave, the ingredients of the
    /// cross-block constant `theta3`.
    pub mass_derivatives: Vec<(f64, f64)>,
    speeds: Vec<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.theta1.len()
    }

    /// Scaled 2x2 block (i, j).
    pub fn block(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        [
            [
                self.scaled[(2 * i, 2 * j)],
                self.scaled[(2 * i, 2 * j + 1)],
            ],
            [
                self.scaled[(2 * i + 1, 2 * j)],
                self.scaled[(2 * i + 1, 2 * j + 1)],
            ],
        ]
    }

    /// Predicted diagonal block `B1(c_i)` in scaled form.
    pub fn b1(&self, i: usize) -> [[f64; 2]; 2] {
        let lead = self.theta1[i] / (self.speeds[i] * self.eps);
        [
            [-lead, 0.0],
            [-self.eps.powi(2) * self.theta2[i], lead],
        ]
    }

    /// Predicted far-field sub-diagonal block `B2(c_i, c_j)` in scaled form:
    /// only the (2,1) entry survives, carrying
    /// `theta3 = <d_c p_i, 1><d_c r_j, 1> + <d_c p_j, 1><d_c r_i, 1>`.
    pub fn b2(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        let (dri, dpi) = self.mass_derivatives[i];
        let (drj, dpj) = self.mass_derivatives[j];
        let theta3 = dpi * drj + dpj * dri;
        [[0.0, 0.0], [-self.eps.powi(2) * theta3, 0.0]]
    }

    /// Largest scaled magnitude in the strictly super-diagonal blocks,
    /// relative to the largest diagonal-block magnitude: the measure of how
    /// dominantly lower-triangular the matrix is.
    pub fn upper_block_ratio(&self) -> f64 {
        let n = self.n();
        let mut diag = 0.0f64;
        let mut upper = 0.0f64;
        for i in 0..n {
            for (a, row) in self.block(i, i).iter().enumerate() {
                for (b, &val) in row.iter().enumerate() {
                    let _ = (a, b);
                    diag = diag.max(val.abs());
                }
            }
            for j in (i + 1)..n {
                for row in self.block(i, j) {
                    for val in row {
                        upper = upper.max(val.abs());
                    }
                }
            }
        }
        if n < 2 {
            0.0
        } else {
            upper / diag
        }
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Samples the wave tangents of each `(c_i, x_i)` on a window.
struct Tangents {
    sum: LatticeField,
    d_x: Vec<LatticeField>,
    d_c: Vec<LatticeField>,
}

fn sample_tangents(
    ips: &[InterpolatedProfile],
    xs: &[f64],
    lo: i64,
    hi: i64,
) -> Tangents {
    let mut sum = LatticeField::zeros(lo, hi);
    let mut d_x = Vec::with_capacity(ips.len());
    let mut d_c = Vec::with_capacity(ips.len());
    for (ip, &x) in ips.iter().zip(xs) {
        let w = ip.u.sample(lo, hi, x);
        sum.add_scaled(&w, 1.0).expect("same window");
        d_x.push(ip.du_dx.sample(lo, hi, x));
        d_c.push(ip.du_dc.sample(lo, hi, x));
    }
    Tangents { sum, d_x, d_c }
}

/// Raw pairing matrix among the tangents: the Gram matrix without scalings.
fn raw_gram(t: &Tangents) -> Result<DMatrix<f64>> {
    let n = t.d_x.len();
    let mut raw = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            raw[(2 * i, 2 * j)] = pairing(&t.d_c[j], &t.d_x[i])?;
            raw[(2 * i, 2 * j + 1)] = pairing(&t.d_x[j], &t.d_x[i])?;
            raw[(2 * i + 1, 2 * j)] = pairing(&t.d_c[j], &t.d_c[i])?;
            raw[(2 * i + 1, 2 * j + 1)] = pairing(&t.d_x[j], &t.d_c[i])?;
        }
    }
    Ok(raw)
}

fn scaled_gram(raw: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let n = raw.nrows() / 2;
    let mut scaled = raw.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(2 * i, 2 * j)] *= eps.powi(-1);
            scaled[(2 * i, 2 * j + 1)] *= eps.powi(-4);
            scaled[(2 * i + 1, 2 * j)] *= eps.powi(2);
            scaled[(2 * i + 1, 2 * j + 1)] *= eps.powi(-1);
        }
    }
    scaled
}

fn validate_params(cs: &[f64], xs: &[f64], family: &ProfileFamily) -> Result<()> {
    if cs.is_empty() || cs.len() != xs.len() {
        return Err(Error::bad_input(format!(
            "need matching nonempty parameter lists, got {} speeds and {} centers",
            cs.len(),
            xs.len()
        )));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::bad_input("centers must be strictly increasing"));
    }
    for &c in cs {
        if !family.covers(c) {
            let (lo, hi) = family.c_range();
            return Err(Error::bad_input(format!(
                "speed {c} outside the family range [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// Assembles the Gram matrix report at the given parameters, with tangents
/// sampled on the window `lo ..= hi`.
pub fn gram_matrix(
    cs: &[f64],
    xs: &[f64],
    family: &ProfileFamily,
    lo: i64,
    hi: i64,
) -> Result<GramMatrix> {
    validate_params(cs, xs, family)?;
    let ips: Vec<InterpolatedProfile> = cs
        .iter()
        .map(|&c| family.interp_at(c))
        .collect::<Result<_>>()?;
    let tangents = sample_tangents(&ips, xs, lo, hi);
    let raw = raw_gram(&tangents)?;
    let eps = eps_of_c(cs.iter().cloned().fold(f64::INFINITY, f64::min));
    let scaled = scaled_gram(&raw, eps);
    let cond = condition_number(&scaled);

    // theta invariants, computed on the family's own window so the full
    // support contributes regardless of the caller's window.
    let (flo, fhi) = family.natural_window();
    let mut theta1 = Vec::with_capacity(cs.len());
    let mut theta2 = Vec::with_capacity(cs.len());
    let mut mass_derivatives = Vec::with_capacity(cs.len());
    for (ip, &c) in ips.iter().zip(cs) {
        let dc = 1e-3 * (c - 1.0);
        let h = |cc: f64| -> Result<f64> {
            Ok(hamiltonian(
                &family.interp_at(cc)?.u.sample(flo, fhi, 0.0),
                family.potential(),
            ))
        };
        theta1.push((h(c + dc)? - h(c - dc)?) / (2.0 * dc));
        let tc = ip.du_dc.sample(flo, fhi, 0.0);
        let (dr, dp) = crate::ops::row_sums(&tc);
        theta2.push(dp * dr);
        mass_derivatives.push((dr, dp));
    }

    Ok(GramMatrix {
        raw,
        scaled,
        eps,
        cond,
        theta1,
        theta2,
        mass_derivatives,
        speeds: cs.to_vec(),
    })
}

/// A converged modulation decomposition.
#[derive(Debug, Clone)]
pub struct ModulationState {
    pub c: Vec<f64>,
    pub x: Vec<f64>,
    /// Residual `v = u - sum_i u_{c_i}(. - x_i)`.
    pub v: LatticeField,
    /// Final pairing residuals, interleaved `(x-condition, c-condition)`.
    pub orth_residuals: Vec<f64>,
    /// Tolerance the residuals were driven below.
    pub orth_tol: f64,
    pub iterations: usize,
    /// Condition number of the scaled Gram at the solution.
    pub gram_cond: f64,
}

impl ModulationState {
    pub fn max_orth_residual(&self) -> f64 {
        self.orth_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

/// Fixes the modulation parameters of `u` by Newton iteration on the
/// symplectic orthogonality conditions, starting from the given guess.
pub fn decompose(
    u: &LatticeField,
    guess_c: &[f64],
    guess_x: &[f64],
    family: &ProfileFamily,
    opts: &DecomposeOptions,
) -> Result<ModulationState> {
    validate_params(guess_c, guess_x, family)?;
    let (lo, hi) = (u.lo(), u.hi());
    let orth_tol = opts.orth_tol_rel * u.l2_norm();
    let mut cs = guess_c.to_vec();
    let mut xs = guess_x.to_vec();
    let n = cs.len();
    let mut history = Vec::new();

    for iter in 0..=opts.max_iter {
        let ips: Vec<InterpolatedProfile> = cs
            .iter()
            .map(|&c| family.interp_at(c))
            .collect::<Result<_>>()?;
        let tangents = sample_tangents(&ips, &xs, lo, hi);
        let v = u.sub(&tangents.sum)?;
        let mut f = DVector::zeros(2 * n);
        for i in 0..n {
            f[2 * i] = pairing(&v, &tangents.d_x[i])?;
            f[2 * i + 1] = pairing(&v, &tangents.d_c[i])?;
        }
        let max_res = f.amax();
        history.push(max_res);

        let raw = raw_gram(&tangents)?;
        let eps = eps_of_c(cs.iter().cloned().fold(f64::INFINITY, f64::min));
        let cond = condition_number(&scaled_gram(&raw, eps));
        if cond > COND_LIMIT {
            return Err(Error::IllConditioned { cond });
        }

        if max_res <= orth_tol {
            return Ok(ModulationState {
                c: cs,
                x: xs,
                v,
                orth_residuals: f.iter().cloned().collect(),
                orth_tol,
                iterations: iter,
                gram_cond: cond,
            });
        }
        if iter == opts.max_iter {
            break;
        }

        // Newton step: the residual map differentiates through v only, so
        // its Jacobian is the raw Gram with the c-columns negated
        // (dv/dx_j = +d_x u_j, dv/dc_j = -d_c u_j).
        let mut jac = raw;
        for j in 0..n {
            for row in 0..2 * n {
                jac[(row, 2 * j)] = -jac[(row, 2 * j)];
            }
        }
        let delta = jac.lu().solve(&(-&f)).ok_or(Error::IllConditioned {
            cond: f64::INFINITY,
        })?;
        for j in 0..n {
            cs[j] += delta[2 * j];
            xs[j] += delta[2 * j + 1];
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NoConvergence {
                what: format!(
                    "modulation Newton (centers crossed; residual history {history:?})"
                ),
                residual: max_res,
                iterations: iter,
            });
        }
    }

    Err(Error::NoConvergence {
        what: format!("modulation Newton (residual history {history:?})"),
        residual: *history.last().unwrap(),
        iterations: opts.max_iter,
    })
}

/// Initial parameter guesses by peak finding: local strain maxima at least
/// `min_sep` apart, refined by parabolic interpolation, speeds from the
/// amplitude-speed map of the family.
pub fn peak_guesses(
    u: &LatticeField,
    family: &ProfileFamily,
    min_sep: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (c_lo, c_hi) = family.c_range();
    let floor = 0.5 * family.amplitude_at(c_lo)?;
    let ceil_amp = family.amplitude_at(c_hi)?;
    let mut cands: Vec<(f64, f64)> = Vec::new(); // (amplitude, position)
    for i in 1..u.len().saturating_sub(1) {
        let (a, b, c) = (u.r[i - 1], u.r[i], u.r[i + 1]);
        if b >= a && b >= c && b >= floor {
            let denom = a - 2.0 * b + c;
            let (dx, amp) = if denom < 0.0 {
                let dx = 0.5 * (a - c) / denom;
                (dx, b - 0.25 * (a - c) * dx)
            } else {
                (0.0, b)
            };
            cands.push((amp, (u.lo() + i as i64) as f64 + dx));
        }
    }
    if cands.is_empty() {
        return Err(Error::bad_input(
            "no strain peaks above the family's amplitude floor",
        ));
    }
    // Greedy selection by amplitude keeps the tallest peak of each cluster.
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut picked: Vec<(f64, f64)> = Vec::new();
    for (amp, x) in cands {
        if picked.iter().all(|&(_, px)| (x - px).abs() >= min_sep) {
            picked.push((amp, x));
        }
    }
    picked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut cs = Vec::with_capacity(picked.len());
    let mut xs = Vec::with_capacity(picked.len());
    for (amp, x) in picked {
        cs.push(family.c_from_amplitude(amp.min(ceil_amp))?);
        xs.push(x);
    }
    Ok((cs, xs))
}

/// One decomposed snapshot of a trajectory.
#[derive(Debug, Clone)]
pub struct TrackPoint {
    pub t: f64,
    pub state: ModulationState,
}

impl TrackPoint {
    /// Residual norms: `(l2, W-weighted)` with decay scale `eps(c_1)`.
    pub fn residual_norms(&self) -> (f64, f64) {
        let a = eps_of_c(self.state.c[0]);
        let w = weighted_norm(
            &self.state.v,
            &WeightSpec::w_norm(a, self.state.x.clone()),
        );
        (self.state.v.l2_norm(), w)
    }

    /// Dual-weighted residual norm around center `i`, evaluated within
    /// `20/a` of the center so the weight's growing (left) side never
    /// amplifies rounding dust past honest signal.
    pub fn x_dual_norm(&self, i: usize) -> f64 {
        let a = eps_of_c(self.state.c[0]);
        let x = self.state.x[i];
        let clipped = crate::weights::clip_to_centers(
            &self.state.v,
            &[x],
            crate::weights::DUAL_RADIUS_SCALE / a,
        );
        weighted_norm(&clipped, &WeightSpec::x_dual(a, x))
    }
}

/// Modulation curves along a trajectory.
#[derive(Debug, Clone)]
pub struct TrackSeries {
    pub points: Vec<TrackPoint>,
    /// True when a mid-run decomposition failed and the series stops early.
    pub truncated: bool,
}

impl TrackSeries {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn speeds(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.state.c[i]).collect()
    }

    pub fn centers(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.state.x[i]).collect()
    }

    /// Fitted drift rate of `x_i(t)`.
    pub fn center_slope(&self, i: usize) -> Result<fit::LineFit> {
        fit::line_fit(&self.times(), &self.centers(i))
    }
}

/// Removes the wave-tangent component of a field: the result pairs to zero
/// against every `d/dx` and `d/dc` tangent at the given parameters.
pub fn symplectic_projection(
    w: &LatticeField,
    cs: &[f64],
    xs: &[f64],
    family: &ProfileFamily,
) -> Result<LatticeField> {
    validate_params(cs, xs, family)?;
    let ips: Vec<InterpolatedProfile> = cs
        .iter()
        .map(|&c| family.interp_at(c))
        .collect::<Result<_>>()?;
    let t = sample_tangents(&ips, xs, w.lo(), w.hi());
    let raw = raw_gram(&t)?;
    let lu = raw.clone().lu();
    let n = cs.len();
    let mut out = w.clone();
    // The raw Gram mixes entry scales (eps^-4 next to eps^2), so one solve
    // leaves a residual of order cond * machine epsilon; a refinement pass
    // brings the pairings down to rounding level.
    for _ in 0..2 {
        let mut f = DVector::zeros(2 * n);
        for i in 0..n {
            f[2 * i] = pairing(&out, &t.d_x[i])?;
            f[2 * i + 1] = pairing(&out, &t.d_c[i])?;
        }
        // Coefficients interleaved (d_c, d_x) per wave, matching the raw
        // Gram column layout.
        let y = lu.solve(&f).ok_or_else(|| {
            Error::bad_input("tangent pairing matrix is singular on this window")
        })?;
        for j in 0..n {
            out.add_scaled(&t.d_c[j], -y[2 * j])?;
            out.add_scaled(&t.d_x[j], -y[2 * j + 1])?;
        }
    }
    Ok(out)
}

/// Warm-started decomposition at every snapshot of a trajectory. The first
/// snapshot must decompose from the given guess; a later failure truncates
/// the series and sets the flag.
pub fn track(
    traj: &Trajectory,
    guess_c: &[f64],
    guess_x: &[f64],
    family: &ProfileFamily,
    opts: &DecomposeOptions,
) -> Result<TrackSeries> {
    let mut points = Vec::with_capacity(traj.states.len());
    let mut cs = guess_c.to_vec();
    let mut xs = guess_x.to_vec();
    let mut truncated = false;
    let mut prev_t: Option<f64> = None;
    for (idx, u) in traj.states.iter().enumerate() {
        let t = traj.times[idx];
        // Between observations each center advances by roughly c * dt, so
        // predict forward instead of reusing the stale positions; sparse
        // snapshots would otherwise start Newton many sites off the mark.
        if let Some(t0) = prev_t {
            for (x, c) in xs.iter_mut().zip(&cs) {
                *x += c * (t - t0);
            }
        }
        match decompose(u, &cs, &xs, family, opts) {
            Ok(state) => {
                cs.clone_from(&state.c);
                xs.clone_from(&state.x);
                prev_t = Some(t);
                points.push(TrackPoint { t, state });
            }
            Err(e) if idx == 0 => return Err(e),
            Err(_) => {
                truncated = true;
                break;
            }
        }
    }
    Ok(TrackSeries { points, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;
    use crate::potential::Potential;
    use crate::profile::GridSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::sync::LazyLock;

    static FAMILY: LazyLock<ProfileFamily> = LazyLock::new(|| {
        ProfileFamily::build(
            &Potential::toda_normalized(),
            1.0025,
            1.025,
            10,
            &GridSpec::default(),
        )
        .expect("family build")
    });

    const C1: f64 = 1.00375;
    const C2: f64 = 1.015;

    #[test]
    fn gram_diagonal_block_matches_its_closed_form() {
        let c = 1.008;
        let g = gram_matrix(&[c], &[0.0], &FAMILY, -300, 300).unwrap();
        let block = g.block(0, 0);
        let b1 = g.b1(0);
        // Leading entries come from two independent evaluations of theta1
        // (pairing versus differenced energy): 1% agreement.
        assert_relative_eq!(block[0][0], b1[0][0], max_relative = 0.01);
        assert_relative_eq!(block[1][1], b1[1][1], max_relative = 0.01);
        // The (2,1) entry is the exact pairing identity, so it is tight.
        assert_relative_eq!(block[1][0], b1[1][0], max_relative = 1e-8);
        // The (1,2) entry pairs d_x u against itself: zero mass, tiny value.
        assert!(block[0][1].abs() <= 1e-6 * block[0][0].abs());
        assert!(g.cond.is_finite());
    }

    #[test]
    fn gram_of_separated_pair_is_dominantly_lower_triangular() {
        let eps = eps_of_c(C1);
        let sep = 60.0 / eps;
        let g = gram_matrix(
            &[C1, C2],
            &[0.0, sep],
            &FAMILY,
            -350,
            sep as i64 + 350,
        )
        .unwrap();
        assert!(
            g.upper_block_ratio() <= 1e-6,
            "upper/diag = {}",
            g.upper_block_ratio()
        );
        // Sub-diagonal block: only the (2,1) entry survives, equal to the
        // mass-derivative constant theta3.
        let lower = g.block(1, 0);
        let b2 = g.b2(1, 0);
        assert_relative_eq!(lower[1][0], b2[1][0], max_relative = 1e-6);
        let diag_scale = g.block(0, 0)[0][0].abs();
        assert!(lower[0][0].abs() <= 1e-8 * diag_scale);
        assert!(lower[0][1].abs() <= 1e-8 * diag_scale);
        assert!(lower[1][1].abs() <= 1e-8 * diag_scale);
        assert!(g.cond < COND_LIMIT);
    }

    fn exact_sum(cs: &[f64], xs: &[f64], lo: i64, hi: i64) -> LatticeField {
        let mut u = LatticeField::zeros(lo, hi);
        for (&c, &x) in cs.iter().zip(xs) {
            let ip = FAMILY.interp_at(c).unwrap();
            u.add_scaled(&ip.u.sample(lo, hi, x), 1.0).unwrap();
        }
        u
    }

    #[test]
    fn exact_sum_with_exact_guess_converges_immediately() {
        let (cs, xs) = (vec![C1, C2], vec![-80.3, 120.7]);
        let u = exact_sum(&cs, &xs, -400, 450);
        let m = decompose(&u, &cs, &xs, &FAMILY, &DecomposeOptions::default()).unwrap();
        assert!(m.iterations <= 2, "iterations = {}", m.iterations);
        assert!(m.max_orth_residual() <= m.orth_tol);
        for i in 0..2 {
            assert_abs_diff_eq!(m.c[i], cs[i], epsilon = 1e-10);
            assert_abs_diff_eq!(m.x[i], xs[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn perturbed_guess_recovers_exact_parameters() {
        let (cs, xs) = (vec![C1, C2], vec![-80.3, 120.7]);
        let u = exact_sum(&cs, &xs, -400, 450);
        let guess_x = vec![xs[0] + 0.3, xs[1] - 0.3];
        let guess_c = vec![cs[0] + 0.001, cs[1] - 0.002];
        let m = decompose(&u, &guess_c, &guess_x, &FAMILY, &DecomposeOptions::default())
            .unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(m.c[i], cs[i], epsilon = 1e-8);
            assert_abs_diff_eq!(m.x[i], xs[i], epsilon = 1e-8);
        }
        assert!(m.v.l2_norm() <= 1e-8 * u.l2_norm());
    }

    #[test]
    fn small_perturbations_move_parameters_proportionally()  {
        let (cs, xs) = (vec![C1, C2], vec![-80.3, 120.7]);
        let mut u = exact_sum(&cs, &xs, -400, 450);
        // A smooth decaying bump of l2 norm 1e-3 parked between the waves.
        let mut w = LatticeField::zeros(-400, 450);
        for n in -400..=450i64 {
            let y = (n as f64 - 20.0) / 8.0;
            let g = (-0.5 * y * y).exp();
            let i = (n + 400) as usize;
            w.r[i] = g;
            w.p[i] = -0.5 * g;
        }
        w.scale(1e-3 / w.l2_norm());
        u.add_scaled(&w, 1.0).unwrap();
        let m = decompose(&u, &cs, &xs, &FAMILY, &DecomposeOptions::default()).unwrap();
        for i in 0..2 {
            assert!(
                (m.c[i] - cs[i]).abs() <= 1e-2,
                "c{} moved by {}",
                i,
                m.c[i] - cs[i]
            );
            assert!(
                (m.x[i] - xs[i]).abs() <= 1e-2,
                "x{} moved by {}",
                i,
                m.x[i] - xs[i]
            );
        }
    }

    #[test]
    fn decompose_is_idempotent() {
        let (cs, xs) = (vec![C1, C2], vec![-80.3, 120.7]);
        let mut u = exact_sum(&cs, &xs, -400, 450);
        let mut w = LatticeField::zeros(-400, 450);
        for n in -400..=450i64 {
            let y = (n as f64 - 20.0) / 8.0;
            w.r[(n + 400) as usize] = (-0.5 * y * y).exp();
        }
        w.scale(1e-4 / w.l2_norm());
        u.add_scaled(&w, 1.0).unwrap();
        let opts = DecomposeOptions::default();
        let m1 = decompose(&u, &cs, &xs, &FAMILY, &opts).unwrap();
        let m2 = decompose(&u, &m1.c, &m1.x, &FAMILY, &opts).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(m1.c[i], m2.c[i], epsilon = 1e-12);
            assert_abs_diff_eq!(m1.x[i], m2.x[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn decompose_is_translation_equivariant() {
        let (cs, xs) = (vec![C1, C2], vec![-80.3, 120.7]);
        let u = exact_sum(&cs, &xs, -400, 450);
        let shifted = u.translate(37);
        let guess_x: Vec<f64> = xs.iter().map(|x| x + 37.0).collect();
        let m = decompose(&shifted, &cs, &guess_x, &FAMILY, &DecomposeOptions::default())
            .unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(m.x[i], xs[i] + 37.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.c[i], cs[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn guesses_out_of_range_are_rejected() {
        let u = exact_sum(&[C1], &[0.0], -200, 200);
        assert!(decompose(&u, &[1.5], &[0.0], &FAMILY, &DecomposeOptions::default()).is_err());
        assert!(decompose(
            &u,
            &[C1, C2],
            &[10.0, 10.0],
            &FAMILY,
            &DecomposeOptions::default()
        )
        .is_err());
    }

    #[test]
    fn peaks_seed_the_decomposition() {
        let (cs, xs) = (vec![C1, C2], vec![-80.3, 120.7]);
        let u = exact_sum(&cs, &xs, -400, 450);
        let eps = eps_of_c(C1);
        let (gc, gx) = peak_guesses(&u, &FAMILY, 5.0 / eps).unwrap();
        assert_eq!(gc.len(), 2);
        for i in 0..2 {
            assert!((gx[i] - xs[i]).abs() <= 0.05, "x guess {} vs {}", gx[i], xs[i]);
            assert!(
                (gc[i] - cs[i]).abs() <= 0.05 * (cs[i] - 1.0),
                "c guess {} vs {}",
                gc[i],
                cs[i]
            );
        }
        let m = decompose(&u, &gc, &gx, &FAMILY, &DecomposeOptions::default()).unwrap();
        assert_abs_diff_eq!(m.x[0], xs[0], epsilon = 1e-8);
        assert_abs_diff_eq!(m.x[1], xs[1], epsilon = 1e-8);
    }

    #[test]
    fn tracking_an_exact_wave_yields_constant_speed() {
        let c = 1.008;
        let ip = FAMILY.interp_at(c).unwrap();
        let u0 = ip.u.sample(-160, 180, 0.0);
        let obs: Vec<f64> = (0..=5).map(|k| k as f64).collect();
        let traj = integrate(&u0, &Potential::toda_normalized(), 0.0, 5.0, 1e-3, &obs)
            .unwrap();
        let series = track(&traj, &[c], &[0.0], &FAMILY, &DecomposeOptions::default())
            .unwrap();
        assert!(!series.truncated);
        assert_eq!(series.points.len(), 6);
        let speeds = series.speeds(0);
        for s in &speeds {
            assert_abs_diff_eq!(*s, speeds[0], epsilon = 1e-8);
        }
        let slope = series.center_slope(0).unwrap();
        assert_abs_diff_eq!(slope.slope, c, epsilon = 1e-6);
        let (l2, w) = series.points.last().unwrap().residual_norms();
        assert!(l2 <= 1e-5, "l2 residual {l2}");
        assert!(w.is_finite());
    }

    #[test]
    fn projection_kills_tangent_pairings_and_is_idempotent() {
        let cs = [C1, C2];
        let xs = [-15.0, 25.0];
        let (lo, hi) = (-140, 160);
        // A field with deliberate tangent content plus a generic bump.
        let ips: Vec<_> = cs.iter().map(|&c| FAMILY.interp_at(c).unwrap()).collect();
        let mut w = LatticeField::zeros(lo, hi);
        w.add_scaled(&ips[0].du_dx.sample(lo, hi, xs[0]), 0.7).unwrap();
        w.add_scaled(&ips[1].du_dc.sample(lo, hi, xs[1]), -40.0).unwrap();
        for n in lo..=hi {
            let y = (n as f64 - 5.0) / 8.0;
            let i = (n - lo) as usize;
            w.r[i] += 0.02 * (-y * y).exp();
            w.p[i] += 0.01 * (-y * y / 2.0).exp();
        }

        let q = symplectic_projection(&w, &cs, &xs, &FAMILY).unwrap();
        let scale = q.l2_norm();
        for (ip, &x) in ips.iter().zip(&xs) {
            let px = pairing(&q, &ip.du_dx.sample(lo, hi, x)).unwrap();
            let pc = pairing(&q, &ip.du_dc.sample(lo, hi, x)).unwrap();
            assert!(px.abs() <= 1e-9 * scale, "d_x pairing {px}");
            assert!(pc.abs() <= 1e-9 * scale, "d_c pairing {pc}");
        }
        let q2 = symplectic_projection(&q, &cs, &xs, &FAMILY).unwrap();
        assert!(q2.sub(&q).unwrap().linf_norm() <= 1e-10 * scale.max(1.0));
        // Pure tangent content projects to (numerically) nothing.
        let mut pure = LatticeField::zeros(lo, hi);
        pure.add_scaled(&ips[0].du_dx.sample(lo, hi, xs[0]), 1.0).unwrap();
        let gone = symplectic_projection(&pure, &cs, &xs, &FAMILY).unwrap();
        assert!(gone.l2_norm() <= 1e-8 * pure.l2_norm());
    }
}
