//! Construction of asymptotic multi-wave states by backward shooting.
//!
//! An asymptotic N-wave state is a solution that converges, as `t -> +inf`,
//! to a superposition of solitary waves with prescribed speeds and phases.
//! It is built here the way the existence argument builds it: pick a
//! terminal time `n`, impose the pure superposition
//!
//! ```text
//! u^n(n) = sum_i u_{c_i}( . - x_i(n) ),    x_i(t) = c_i t + gamma_i,
//! ```
//!
//! as terminal data, integrate the lattice backward to a fixed start time
//! `T`, and repeat with larger and larger `n`. The waves separate at speed
//! differences of order `eps^2`, so the terminal superpositions disagree
//! only through exponentially small interaction tails and the sequence
//! `u^n(T)` is Cauchy; its limit, evolved forward, realizes the prescribed
//! asymptotic state. The schedule bookkeeping happens in the scaled
//! separation variable `d(t) = sigma eps^2 (t - T) + L / eps`.

use crate::error::Error;
use crate::field::LatticeField;
use crate::fit::{self, LineFit};
use crate::integrate::{integrate, Trajectory};
use crate::profile::{InterpolatedProfile, ProfileFamily};
use crate::weights::{weighted_norm, WeightSpec};
use crate::Result;
use rayon::prelude::*;

/// Default ceiling on `eps`.
pub const DEFAULT_EPS0: f64 = 0.2;

/// Default minimum scaled separation `L0`: waves must start at least
/// `L0 / eps` sites apart.
pub const DEFAULT_L0: f64 = 10.0;

/// Window margin beyond the extreme wave centers, in units of `1/(k_1 eps)`.
pub const WINDOW_MARGIN_SCALE: f64 = 40.0;

/// Speeds, phases, and admissibility limits of a prescribed asymptotic
/// N-wave state: wave `i` has speed `c_i = 1 + (k_i eps)^2 / 6` and rides
/// the path `x_i(t) = c_i t + gamma_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonParameters {
    pub eps: f64,
    pub k: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Minimum admissible scaled separation.
    pub l0: f64,
    /// Largest admissible `eps`.
    pub eps0: f64,
}

impl SolitonParameters {
    pub fn new(eps: f64, k: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        Self::with_limits(eps, k, gamma, DEFAULT_L0, DEFAULT_EPS0)
    }

    pub fn with_limits(
        eps: f64,
        k: Vec<f64>,
        gamma: Vec<f64>,
        l0: f64,
        eps0: f64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps <= eps0) {
            return Err(Error::bad_input(format!(
                "eps = {eps} must lie in (0, {eps0}]"
            )));
        }
        if k.is_empty() || k.len() != gamma.len() {
            return Err(Error::bad_input(format!(
                "need matching nonempty lists, got {} wave numbers and {} phases",
                k.len(),
                gamma.len()
            )));
        }
        if k.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::bad_input("wave numbers must be positive and finite"));
        }
        if k.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::bad_input("k must be strictly increasing"));
        }
        if !(l0 > 0.0) {
            return Err(Error::bad_input(format!("L0 = {l0} must be positive")));
        }
        Ok(SolitonParameters {
            eps,
            k,
            gamma,
            l0,
            eps0,
        })
    }

    pub fn n(&self) -> usize {
        self.k.len()
    }

    /// Asymptotic speed of wave `i`.
    pub fn speed(&self, i: usize) -> f64 {
        1.0 + (self.k[i] * self.eps).powi(2) / 6.0
    }

    pub fn speeds(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.speed(i)).collect()
    }

    /// Asymptotic center path of wave `i`.
    pub fn center(&self, i: usize, t: f64) -> f64 {
        self.speed(i) * t + self.gamma[i]
    }

    pub fn centers(&self, t: f64) -> Vec<f64> {
        (0..self.n()).map(|i| self.center(i, t)).collect()
    }

    /// Decay scale `k_1 eps` of the slowest wave.
    pub fn decay_scale(&self) -> f64 {
        self.k[0] * self.eps
    }

    /// Smallest speed gap between consecutive waves.
    pub fn min_speed_gap(&self) -> f64 {
        (1..self.n())
            .map(|i| self.speed(i) - self.speed(i - 1))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the center ordering and the separation floor `l0 / eps` at
    /// time `t`.
    pub fn validate_at(&self, t: f64) -> Result<()> {
        let xs = self.centers(t);
        let floor = self.l0 / self.eps;
        for i in 1..xs.len() {
            let sep = xs[i] - xs[i - 1];
            if sep < floor {
                return Err(Error::bad_input(format!(
                    "separation x_{}(t) - x_{}(t) = {sep:.3} at t = {t} is below L0/eps = {floor:.3}",
                    i + 1,
                    i
                )));
            }
        }
        Ok(())
    }
}

/// The scaled separation bookkeeping of a construction run.
#[derive(Debug, Clone, Copy)]
pub struct SeparationSchedule {
    /// Start time `T` of every backward run.
    pub t_start: f64,
    /// Scaled initial separation: `d(T) = L / eps`.
    pub l: f64,
    /// `sigma = eps^-2 min_i (c_i - c_{i-1}) / 2`.
    pub sigma: f64,
    eps: f64,
}

impl SeparationSchedule {
    /// Reads `L` and `sigma` off the parameters at start time `T`. For a
    /// single wave there is no separation structure and `d` is identically
    /// zero.
    pub fn new(params: &SolitonParameters, t_start: f64) -> Result<Self> {
        params.validate_at(t_start)?;
        if params.n() < 2 {
            return Ok(SeparationSchedule {
                t_start,
                l: 0.0,
                sigma: 0.0,
                eps: params.eps,
            });
        }
        let xs = params.centers(t_start);
        let min_sep = (1..xs.len())
            .map(|i| xs[i] - xs[i - 1])
            .fold(f64::INFINITY, f64::min);
        Ok(SeparationSchedule {
            t_start,
            l: params.eps * min_sep,
            sigma: 0.5 * params.min_speed_gap() / params.eps.powi(2),
            eps: params.eps,
        })
    }

    /// `d(t) = sigma eps^2 (t - T) + L / eps`.
    pub fn d(&self, t: f64) -> f64 {
        self.sigma * self.eps.powi(2) * (t - self.t_start) + self.l / self.eps
    }

    /// `h(t)`: the smallest separation path among consecutive waves.
    pub fn h(params: &SolitonParameters, t: f64) -> f64 {
        (1..params.n())
            .map(|i| params.center(i, t) - params.center(i - 1, t))
            .fold(f64::INFINITY, f64::min)
    }
}

fn interp_all(params: &SolitonParameters, family: &ProfileFamily) -> Result<Vec<InterpolatedProfile>> {
    (0..params.n())
        .map(|i| family.interp_at(params.speed(i)))
        .collect()
}

/// The pure superposition `U_+(t) = sum_i u_{c_i}(. - x_i(t))` on a window.
pub fn u_plus_sum(
    params: &SolitonParameters,
    family: &ProfileFamily,
    t: f64,
    lo: i64,
    hi: i64,
) -> Result<LatticeField> {
    let ips = interp_all(params, family)?;
    let mut u = LatticeField::zeros(lo, hi);
    for (ip, x) in ips.iter().zip(params.centers(t)) {
        u.add_scaled(&ip.u.sample(lo, hi, x), 1.0)?;
    }
    Ok(u)
}

/// Terminal data for a backward run: the superposition at time `n`, with the
/// window checked to cover every center with margin `40 / (k_1 eps)`.
pub fn terminal_data(
    params: &SolitonParameters,
    family: &ProfileFamily,
    n: f64,
    lo: i64,
    hi: i64,
) -> Result<LatticeField> {
    params.validate_at(n)?;
    let xs = params.centers(n);
    let margin = WINDOW_MARGIN_SCALE / params.decay_scale();
    let need_lo = xs.first().unwrap() - margin;
    let need_hi = xs.last().unwrap() + margin;
    if (lo as f64) > need_lo || (hi as f64) < need_hi {
        return Err(Error::bad_input(format!(
            "window [{lo}, {hi}] too small for terminal data at t = {n}: need [{:.0}, {:.0}]",
            need_lo.floor(),
            need_hi.ceil()
        )));
    }
    u_plus_sum(params, family, n, lo, hi)
}

/// A window that covers every center path on `[T, n_max]` with the standard
/// margin.
pub fn shooting_window(params: &SolitonParameters, t_start: f64, n_max: f64) -> (i64, i64) {
    let margin = WINDOW_MARGIN_SCALE / params.decay_scale();
    let lo = params
        .centers(t_start)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        - margin;
    let hi = params
        .centers(n_max)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        + margin;
    (lo.floor() as i64 - 1, hi.ceil() as i64 + 1)
}

/// One backward run: terminal data at `n`, integrated down to `T`, with the
/// deviation from the moving superposition recorded at each observation.
#[derive(Debug, Clone)]
pub struct ShootingRun {
    pub n: f64,
    pub traj: Trajectory,
    /// `||u^n(t) - U_+(t)||_{l2}` per observation time.
    pub l2_vs_sum: Vec<f64>,
    /// Same deviation in the summed decaying weighted norm around the
    /// centers.
    pub w_vs_sum: Vec<f64>,
}

impl ShootingRun {
    /// State at the earliest observed time (the start time `T` when it was
    /// observed).
    pub fn state_at_start(&self) -> &LatticeField {
        self.traj.final_state()
    }
}

/// Integrates backward from the superposition at `n` to `t_start`,
/// observing at the given times (which must include any time the caller
/// wants to read, `t_start` included).
pub fn shoot_backward(
    params: &SolitonParameters,
    family: &ProfileFamily,
    n: f64,
    t_start: f64,
    dt: f64,
    lo: i64,
    hi: i64,
    observe_at: &[f64],
) -> Result<ShootingRun> {
    if t_start >= n {
        return Err(Error::bad_input(format!(
            "start time {t_start} must precede terminal time {n}"
        )));
    }
    let terminal = terminal_data(params, family, n, lo, hi)?;
    let obs: Vec<f64> = if observe_at.is_empty() {
        vec![n, t_start]
    } else {
        observe_at.to_vec()
    };
    let traj = integrate(&terminal, family.potential(), n, t_start, dt, &obs)?;
    let a = params.decay_scale();
    let mut l2 = Vec::with_capacity(traj.times.len());
    let mut w = Vec::with_capacity(traj.times.len());
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let diff = u.sub(&u_plus_sum(params, family, *t, lo, hi)?)?;
        l2.push(diff.l2_norm());
        w.push(weighted_norm(
            &diff,
            &WeightSpec::w_norm(a, params.centers(*t)),
        ));
    }
    Ok(ShootingRun {
        n,
        traj,
        l2_vs_sum: l2,
        w_vs_sum: w,
    })
}

/// The Cauchy evidence of a construction: consecutive start-time states,
/// their distances, and the fitted decay of those distances against the
/// scaled separation `d(n)`.
#[derive(Debug, Clone)]
pub struct CauchyReport {
    /// Terminal times actually used (a prefix of the schedule on early
    /// convergence).
    pub ns: Vec<f64>,
    /// `d(n_j)` per used terminal time.
    pub d_of_n: Vec<f64>,
    /// `delta_j = ||u^{n_{j+1}}(T) - u^{n_j}(T)||_{l2}`.
    pub deltas: Vec<f64>,
    /// Exponential fit of `delta_j` against `d(n_j)`; absent for fewer than
    /// four increments or a single wave.
    pub rate_fit: Option<LineFit>,
    /// True when the tolerance stopped the schedule early.
    pub converged_early: bool,
}

impl CauchyReport {
    pub fn final_delta(&self) -> f64 {
        *self.deltas.last().unwrap()
    }
}

/// Runs the backward shots of an increasing terminal-time schedule and
/// extracts the start-time limit state.
///
/// The runs share one window sized for the largest terminal time, execute
/// concurrently, and are compared pairwise at `T`. A distance increasing by
/// more than a factor of 3 over its predecessor is treated as evidence the
/// construction is not converging at these parameters.
pub fn construct_limit(
    params: &SolitonParameters,
    family: &ProfileFamily,
    t_start: f64,
    n_schedule: &[f64],
    tol: f64,
    dt: f64,
) -> Result<(LatticeField, CauchyReport)> {
    if n_schedule.len() < 4 {
        return Err(Error::bad_input(format!(
            "terminal-time schedule needs at least 4 entries, got {}",
            n_schedule.len()
        )));
    }
    if n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::bad_input(
            "terminal-time schedule must be strictly increasing",
        ));
    }
    if n_schedule[0] <= t_start {
        return Err(Error::bad_input(format!(
            "schedule must start after t = {t_start}"
        )));
    }
    let schedule = SeparationSchedule::new(params, t_start)?;
    let (lo, hi) = shooting_window(params, t_start, *n_schedule.last().unwrap());

    let states: Vec<LatticeField> = n_schedule
        .par_iter()
        .map(|&n| {
            shoot_backward(params, family, n, t_start, dt, lo, hi, &[n, t_start])
                .map(|run| run.state_at_start().clone())
        })
        .collect::<Result<_>>()?;

    let mut ns = vec![n_schedule[0]];
    let mut d_of_n = vec![schedule.d(n_schedule[0])];
    let mut deltas = Vec::new();
    let mut converged_early = false;
    for j in 1..states.len() {
        let delta = states[j].sub(&states[j - 1])?.l2_norm();
        deltas.push(delta);
        ns.push(n_schedule[j]);
        d_of_n.push(schedule.d(n_schedule[j]));
        if let Some(prev) = deltas.get(deltas.len().wrapping_sub(2)) {
            if delta > 3.0 * prev {
                return Err(Error::NotCauchy {
                    detail: format!(
                        "distance grew from {prev:.3e} to {delta:.3e} between n = {} and {}",
                        n_schedule[j - 1],
                        n_schedule[j]
                    ),
                });
            }
        }
        if delta < tol {
            converged_early = true;
            break;
        }
    }

    let used = deltas.len();
    let rate_fit = if params.n() >= 2 && used >= fit::MIN_POINTS {
        // delta_j sits between n_j and n_{j+1}; index it by d(n_j).
        fit::exponential_fit(&d_of_n[..used], &deltas).ok()
    } else {
        None
    };
    let limit = states[used].clone();
    Ok((
        limit,
        CauchyReport {
            ns: ns[..=used].to_vec(),
            d_of_n: d_of_n[..=used].to_vec(),
            deltas,
            rate_fit,
            converged_early,
        },
    ))
}

/// Forward validation of a constructed state: evolve from `T`, measure
/// `e(t) = ||u(t) - U_+(t)||_{l2}`, and fit `log e` against `eps h(t)`.
#[derive(Debug, Clone)]
pub struct ForwardReport {
    pub times: Vec<f64>,
    /// `h(t)` per observation.
    pub h_of_t: Vec<f64>,
    pub errors: Vec<f64>,
    /// Fitted decay exponent `beta` (from slope `-beta` of `log e` against
    /// `eps h`); absent for a single wave.
    pub beta: Option<f64>,
    pub fit: Option<LineFit>,
}

impl ForwardReport {
    pub fn e_at_start(&self) -> f64 {
        self.errors[0]
    }
}

pub fn validate_forward(
    limit: &LatticeField,
    params: &SolitonParameters,
    family: &ProfileFamily,
    t_start: f64,
    horizon: f64,
    dt: f64,
    observe_every: f64,
) -> Result<ForwardReport> {
    if !(horizon > 0.0 && observe_every > 0.0) {
        return Err(Error::bad_input(
            "forward horizon and observation step must be positive",
        ));
    }
    let mut obs = Vec::new();
    let mut t = t_start;
    while t <= t_start + horizon + 1e-9 {
        obs.push(t);
        t += observe_every;
    }
    let traj = integrate(limit, family.potential(), t_start, t_start + horizon, dt, &obs)?;
    let (lo, hi) = (limit.lo(), limit.hi());
    let mut errors = Vec::with_capacity(traj.times.len());
    let mut h_of_t = Vec::with_capacity(traj.times.len());
    for (t, u) in traj.times.iter().zip(&traj.states) {
        errors.push(u.sub(&u_plus_sum(params, family, *t, lo, hi)?)?.l2_norm());
        h_of_t.push(SeparationSchedule::h(params, *t));
    }
    let (beta, fit) = if params.n() >= 2 {
        let abscissa: Vec<f64> = h_of_t.iter().map(|h| params.eps * h).collect();
        let f = fit::exponential_fit(&abscissa, &errors)?;
        if f.slope >= 0.0 {
            return Err(Error::NonPhysical(format!(
                "forward deviation from the asymptotic superposition is growing \
                 (fitted rate {:.3e} per unit eps*h, R^2 = {:.3})",
                f.slope, f.r_squared
            )));
        }
        (Some(-f.slope), Some(f))
    } else {
        (None, None)
    };
    Ok(ForwardReport {
        times: traj.times.clone(),
        h_of_t,
        errors,
        beta,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::profile::{GridSpec, ProfileFamily};
    use approx::assert_relative_eq;
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

    fn two_wave_params(l: f64) -> SolitonParameters {
        let eps = 0.15;
        SolitonParameters::with_limits(
            eps,
            vec![1.0, 2.0],
            vec![0.0, l / eps],
            l.min(DEFAULT_L0),
            DEFAULT_EPS0,
        )
        .unwrap()
    }

    #[test]
    fn parameter_validation_catches_bad_inputs() {
        assert!(SolitonParameters::new(0.15, vec![2.0, 1.0], vec![0.0, 50.0]).is_err());
        assert!(SolitonParameters::new(0.25, vec![1.0], vec![0.0]).is_err());
        assert!(SolitonParameters::new(-0.1, vec![1.0], vec![0.0]).is_err());
        assert!(SolitonParameters::new(0.15, vec![1.0, 2.0], vec![0.0]).is_err());
        // Separation floor: 5 sites apart needs L0/eps = 66.7.
        let p = SolitonParameters::new(0.15, vec![1.0, 2.0], vec![0.0, 5.0]).unwrap();
        assert!(p.validate_at(0.0).is_err());
        assert!(p.validate_at(1e4).is_ok(), "waves separate forward in time");
    }

    #[test]
    fn speeds_and_schedule_bookkeeping() {
        let p = two_wave_params(2.5);
        assert_relative_eq!(p.speed(0), 1.00375, max_relative = 1e-14);
        assert_relative_eq!(p.speed(1), 1.015, max_relative = 1e-14);
        let s = SeparationSchedule::new(&p, 0.0).unwrap();
        assert_relative_eq!(s.d(0.0), 2.5 / 0.15, max_relative = 1e-12);
        assert_relative_eq!(s.sigma, 0.5 * (p.speed(1) - p.speed(0)) / 0.15f64.powi(2),
            max_relative = 1e-12);
        assert!(s.d(100.0) > s.d(0.0));
        assert_relative_eq!(
            SeparationSchedule::h(&p, 7.0),
            p.center(1, 7.0) - p.center(0, 7.0),
            max_relative = 1e-14
        );
        // Single wave: no separation structure.
        let p1 = SolitonParameters::new(0.15, vec![1.0], vec![0.0]).unwrap();
        let s1 = SeparationSchedule::new(&p1, 0.0).unwrap();
        assert_eq!(s1.d(50.0), 0.0);
    }

    #[test]
    fn terminal_data_is_the_shifted_profile_sum() {
        let p = two_wave_params(2.5);
        let (lo, hi) = shooting_window(&p, 0.0, 40.0);
        let u = terminal_data(&p, &FAMILY, 40.0, lo, hi).unwrap();
        // Linearity: equals the sum of the two single-wave terminal data.
        let single = |i: usize| {
            let pi = SolitonParameters::new(p.eps, vec![p.k[i]], vec![p.gamma[i]]).unwrap();
            terminal_data(&pi, &FAMILY, 40.0, lo, hi).unwrap()
        };
        let mut sum = single(0);
        sum.add_scaled(&single(1), 1.0).unwrap();
        assert!(u.sub(&sum).unwrap().linf_norm() <= 1e-14);
        // Single wave: exactly the sampled profile.
        let pi = SolitonParameters::new(p.eps, vec![p.k[0]], vec![p.gamma[0]]).unwrap();
        let ip = FAMILY.interp_at(pi.speed(0)).unwrap();
        let direct = ip.u.sample(lo, hi, pi.center(0, 40.0));
        assert!(single(0).sub(&direct).unwrap().linf_norm() <= 1e-14);
    }

    #[test]
    fn undersized_windows_are_named() {
        let p = two_wave_params(2.5);
        let err = terminal_data(&p, &FAMILY, 40.0, -10, 10).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("too small"), "message: {msg}");
        assert!(msg.contains("need ["), "message: {msg}");
    }

    #[test]
    fn single_wave_shoots_backward_onto_itself() {
        let p = SolitonParameters::new(0.15, vec![1.0], vec![0.0]).unwrap();
        let (lo, hi) = shooting_window(&p, 0.0, 30.0);
        let run = shoot_backward(&p, &FAMILY, 30.0, 0.0, 1e-3, lo, hi, &[30.0, 15.0, 0.0])
            .unwrap();
        // A solitary wave is an exact solution: the backward run stays on the
        // traveling profile to integrator accuracy at every observation.
        for (t, err) in run.traj.times.iter().zip(&run.l2_vs_sum) {
            assert!(*err <= 1e-6, "deviation {err} at t = {t}");
        }
        assert!(run.traj.max_drift() <= 1e-8, "energy drift {}", run.traj.max_drift());
        assert!(run.w_vs_sum.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn single_wave_construction_sits_at_the_noise_floor() {
        let p = SolitonParameters::new(0.15, vec![1.0], vec![0.0]).unwrap();
        let (limit, report) =
            construct_limit(&p, &FAMILY, 0.0, &[10.0, 20.0, 30.0, 40.0], 0.0, 1e-3).unwrap();
        assert_eq!(report.deltas.len(), 3);
        for d in &report.deltas {
            assert!(*d <= 2e-6, "delta {d}");
        }
        assert!(report.rate_fit.is_none());
        // The limit is still the traveling wave at T.
        let ip = FAMILY.interp_at(p.speed(0)).unwrap();
        let exact = ip.u.sample(limit.lo(), limit.hi(), 0.0);
        assert!(limit.sub(&exact).unwrap().l2_norm() <= 1e-6);
    }

    #[test]
    fn construction_is_phase_translation_equivariant() {
        let p0 = SolitonParameters::new(0.15, vec![1.0], vec![0.0]).unwrap();
        let p3 = SolitonParameters::new(0.15, vec![1.0], vec![3.0]).unwrap();
        let sched = [10.0, 20.0, 30.0, 40.0];
        let (lim0, _) = construct_limit(&p0, &FAMILY, 0.0, &sched, 0.0, 1e-3).unwrap();
        let (lim3, _) = construct_limit(&p3, &FAMILY, 0.0, &sched, 0.0, 1e-3).unwrap();
        // Shifting every phase by an integer shifts the limit exactly.
        let shifted = lim0.translate(3);
        let overlap_lo = shifted.lo().max(lim3.lo());
        let overlap_hi = shifted.hi().min(lim3.hi());
        let mut worst = 0.0f64;
        for n in overlap_lo..=overlap_hi {
            worst = worst.max((shifted.r_at(n) - lim3.r_at(n)).abs());
            worst = worst.max((shifted.p_at(n) - lim3.p_at(n)).abs());
        }
        assert!(worst <= 1e-12, "translated limits differ by {worst}");
    }

    #[test]
    fn two_wave_construction_is_cauchy_at_the_interaction_rate() {
        // Small desk-scale construction; the full-depth run lives in the
        // acceptance suite.
        let p = two_wave_params(2.5);
        let sched = [150.0, 300.0, 450.0, 600.0, 750.0];
        let (limit, report) = construct_limit(&p, &FAMILY, 0.0, &sched, 0.0, 1e-3).unwrap();
        assert_eq!(report.deltas.len(), 4);
        for w in report.deltas.windows(2) {
            assert!(w[1] < w[0], "deltas not decreasing: {:?}", report.deltas);
        }
        let fit = report.rate_fit.expect("enough increments to fit");
        assert!(fit.slope < 0.0);
        assert!(fit.reliable(), "R^2 = {}", fit.r_squared);
        // The waves overlap through tails of decay rate 2 kappa(c_1) on each
        // side, and d measures half the separation growth, so the honest
        // distance rate against d is about 2 k_1 eps.
        let sharp = 2.0 * p.decay_scale();
        assert!(
            fit.slope.abs() > 0.5 * sharp && fit.slope.abs() < 2.0 * sharp,
            "rate {} vs sharp {}",
            fit.slope.abs(),
            sharp
        );
        // The limit decomposes back onto the prescribed speeds.
        let m = crate::modulation::decompose(
            &limit,
            &p.speeds(),
            &p.centers(0.0),
            &FAMILY,
            &crate::modulation::DecomposeOptions::default(),
        )
        .unwrap();
        // At the start time the waves are still close (L/eps ~ 17 sites), so
        // the fitted speeds carry a finite-separation offset that only dies
        // off as the waves separate; accept the overlap-sized discrepancy.
        assert!((m.c[0] - p.speed(0)).abs() <= 5e-4, "c1 off by {}", m.c[0] - p.speed(0));
        assert!((m.c[1] - p.speed(1)).abs() <= 5e-4, "c2 off by {}", m.c[1] - p.speed(1));
    }

    #[test]
    fn forward_validation_reports_decaying_error() {
        let p = two_wave_params(2.5);
        let sched = [150.0, 300.0, 450.0, 600.0];
        let (limit, _) = construct_limit(&p, &FAMILY, 0.0, &sched, 0.0, 1e-3).unwrap();
        let report = validate_forward(&limit, &p, &FAMILY, 0.0, 300.0, 1e-3, 30.0).unwrap();
        assert_eq!(report.times.len(), 11);
        let beta = report.beta.expect("two waves fit a rate");
        assert!(beta > 0.0);
        let f = report.fit.unwrap();
        assert!(f.reliable(), "R^2 = {}", f.r_squared);
        assert!(report.e_at_start() > 0.0);
        assert!(report.errors.last().unwrap() < &report.errors[0]);
    }
}
