//! Measurement instruments for multi-wave dynamics.
//!
//! Everything here consumes finished objects — tabulated profiles, recorded
//! trajectories, tracked modulation series — and produces numbers: how big
//! the overlap between two separated waves is, how fast residual norms die
//! off along a schedule, how much localized energy sits behind a moving
//! center, and at what rate the linearized flow around a moving background
//! contracts in exponentially weighted norms.

use crate::error::Error;
use crate::field::LatticeField;
use crate::fit::{self, LineFit};
use crate::integrate::Trajectory;
use crate::modulation::{decompose, symplectic_projection, DecomposeOptions, TrackSeries};
use crate::potential::Potential;
use crate::profile::{ProfileFamily, TabulatedPair};
use crate::shooting::SeparationSchedule;
use crate::Result;

pub use crate::weights::{virial_energy, virial_energy_summed, virial_weight};

/// Size of the pointwise product `u1(.) * u2(. - sep)` in `(l1, linf)`,
/// with the `r` and `p` component products summed sitewise.
///
/// Both tables are evaluated on the integer sites where their supports
/// overlap; an empty overlap gives `(0, 0)`.
pub fn interaction_size(u1: &TabulatedPair, u2: &TabulatedPair, sep: f64) -> (f64, f64) {
    let end = |t: &TabulatedPair| t.x0 + (t.a.len() - 1) as f64 * t.h;
    let lo = u1.x0.max(u2.x0 + sep).ceil() as i64;
    let hi = end(u1).min(end(u2) + sep).floor() as i64;
    if lo > hi {
        return (0.0, 0.0);
    }
    let f1 = u1.sample(lo, hi, 0.0);
    let f2 = u2.sample(lo, hi, sep);
    let mut l1 = 0.0;
    let mut linf = 0.0f64;
    for i in 0..f1.len() {
        let qr = (f1.r[i] * f2.r[i]).abs();
        let qp = (f1.p[i] * f2.p[i]).abs();
        l1 += qr + qp;
        linf = linf.max(qr).max(qp);
    }
    (l1, linf)
}

/// Residual norms along a tracked trajectory, against the separation
/// schedule of the underlying construction.
#[derive(Debug, Clone)]
pub struct ResidualCurves {
    pub times: Vec<f64>,
    pub d_of_t: Vec<f64>,
    pub l2: Vec<f64>,
    pub w: Vec<f64>,
    /// Dual-weighted residual around wave `i`: `x_dual[i][j]` at sample `j`.
    pub x_dual: Vec<Vec<f64>>,
    pub l2_vs_d: Option<LineFit>,
    pub w_vs_d: Option<LineFit>,
    pub l2_vs_t: Option<LineFit>,
}

/// Extracts norm curves and their exponential fits from a track series.
/// Fits are skipped (left `None`) for a single wave, for fewer than four
/// samples, or when the abscissa is degenerate.
pub fn residual_curves(
    series: &TrackSeries,
    schedule: &SeparationSchedule,
) -> Result<ResidualCurves> {
    if series.points.is_empty() {
        return Err(Error::bad_input("track series has no points"));
    }
    let waves = series.points[0].state.c.len();
    let mut times = Vec::with_capacity(series.points.len());
    let mut d_of_t = Vec::with_capacity(series.points.len());
    let mut l2 = Vec::with_capacity(series.points.len());
    let mut w = Vec::with_capacity(series.points.len());
    let mut x_dual = vec![Vec::with_capacity(series.points.len()); waves];
    for p in &series.points {
        let (l2v, wv) = p.residual_norms();
        times.push(p.t);
        d_of_t.push(schedule.d(p.t));
        l2.push(l2v);
        w.push(wv);
        for (i, col) in x_dual.iter_mut().enumerate() {
            col.push(p.x_dual_norm(i));
        }
    }
    let (l2_vs_d, w_vs_d, l2_vs_t) = if waves >= 2 {
        (
            fit::exponential_fit(&d_of_t, &l2).ok(),
            fit::exponential_fit(&d_of_t, &w).ok(),
            fit::exponential_fit(&times, &l2).ok(),
        )
    } else {
        (None, None, None)
    };
    Ok(ResidualCurves {
        times,
        d_of_t,
        l2,
        w,
        x_dual,
        l2_vs_d,
        w_vs_d,
        l2_vs_t,
    })
}

/// What the linearized flow runs around.
pub enum Background<'a> {
    /// Zero strain everywhere: constant coefficients `V''(0)`.
    Zero,
    /// A recorded trajectory; the strain is interpolated linearly in time
    /// between its snapshots.
    Path(&'a Trajectory),
}

/// Re-projection policy: at every observation the background is decomposed
/// (warm-started) and the evolving field is projected onto the complement
/// of the wave tangents.
pub struct ReprojectSpec<'a> {
    pub family: &'a ProfileFamily,
    pub guess_c: Vec<f64>,
    pub guess_x: Vec<f64>,
    pub opts: DecomposeOptions,
}

/// Snapshots of a linearized evolution.
#[derive(Debug, Clone)]
pub struct LinearizedRun {
    pub times: Vec<f64>,
    pub states: Vec<LatticeField>,
    /// Fitted wave centers at each observation when re-projection ran;
    /// empty otherwise.
    pub centers: Vec<Vec<f64>>,
}

fn bracket(times: &[f64], t: f64) -> (usize, usize, f64) {
    let n = times.len();
    if t <= times[0] {
        return (0, 0, 0.0);
    }
    if t >= times[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = times.partition_point(|&s| s <= t);
    let lo = hi - 1;
    (lo, hi, (t - times[lo]) / (times[hi] - times[lo]))
}

fn field_at(traj: &Trajectory, t: f64) -> LatticeField {
    let (i0, i1, th) = bracket(&traj.times, t);
    let s0 = &traj.states[i0];
    if i0 == i1 {
        return s0.clone();
    }
    let s1 = &traj.states[i1];
    let mut out = s0.clone();
    for i in 0..out.len() {
        out.r[i] += th * (s1.r[i] - s0.r[i]);
        out.p[i] += th * (s1.p[i] - s0.p[i]);
    }
    out
}

/// One symmetric drift–kick–drift step of the frozen-coefficient linear
/// system `dw_r(n) = w_p(n+1) - w_p(n)`, `dw_p(n) = g(n) - g(n-1)` with
/// `g = vpp * w_r`, ghost sites zero on both ends.
fn lin_step(w: &mut LatticeField, vpp: &[f64], h: f64) {
    let len = w.len();
    for i in 0..len {
        let ahead = if i + 1 < len { w.p[i + 1] } else { 0.0 };
        w.r[i] += 0.5 * h * (ahead - w.p[i]);
    }
    let mut prev = 0.0;
    for i in 0..len {
        let g = vpp[i] * w.r[i];
        w.p[i] += h * (g - prev);
        prev = g;
    }
    for i in 0..len {
        let ahead = if i + 1 < len { w.p[i + 1] } else { 0.0 };
        w.r[i] += 0.5 * h * (ahead - w.p[i]);
    }
}

/// Evolves a perturbation by the lattice flow linearized around the given
/// background, from `t0` to `t1` in either direction.
///
/// Coefficients are frozen per step at the step midpoint. Observation times
/// must be ordered in the direction of integration and sit on the step
/// grid; empty means `{t0, t1}`. With a [`ReprojectSpec`] the field is
/// projected off the background's wave tangents at every observation,
/// including the first.
pub fn linearized_evolve(
    background: &Background<'_>,
    pot: &Potential,
    seed: &LatticeField,
    t0: f64,
    t1: f64,
    dt: f64,
    observe_at: &[f64],
    mut reproject: Option<ReprojectSpec<'_>>,
) -> Result<LinearizedRun> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::bad_input(format!("dt = {dt} must be positive")));
    }
    if t0 == t1 {
        return Err(Error::bad_input("need a nonzero time span"));
    }
    let dir = (t1 - t0).signum();
    let (t_min, t_max) = (t0.min(t1), t0.max(t1));
    if let Background::Path(traj) = background {
        if traj.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::bad_input(
                "background snapshots must have strictly increasing times",
            ));
        }
        if traj.times[0] > t_min + 1e-9 || *traj.times.last().unwrap() < t_max - 1e-9 {
            return Err(Error::bad_input(format!(
                "background covers [{}, {}] but the run needs [{t_min}, {t_max}]",
                traj.times[0],
                traj.times.last().unwrap()
            )));
        }
        let b = &traj.states[0];
        if b.lo() != seed.lo() || b.hi() != seed.hi() {
            return Err(Error::bad_input(
                "seed and background live on different windows",
            ));
        }
    } else if reproject.is_some() {
        return Err(Error::bad_input(
            "re-projection needs a background with waves in it",
        ));
    }

    let span_steps = ((t1 - t0) / (dir * dt)).round() as i64;
    let obs: Vec<f64> = if observe_at.is_empty() {
        vec![t0, t1]
    } else {
        observe_at.to_vec()
    };
    let mut targets = Vec::with_capacity(obs.len());
    let mut last_k = -1i64;
    for &s in &obs {
        let k = ((s - t0) / (dir * dt)).round() as i64;
        if (t0 + k as f64 * dir * dt - s).abs() > 1e-9 * (1.0 + s.abs()) {
            return Err(Error::bad_input(format!(
                "observation time {s} is off the step grid"
            )));
        }
        if k <= last_k || k < 0 || k > span_steps {
            return Err(Error::bad_input(format!(
                "observation time {s} out of order or outside the span"
            )));
        }
        targets.push(k);
        last_k = k;
    }

    let len = seed.len();
    let mut vpp = vec![pot.d2v(0.0); len];
    let mut w = seed.clone();
    let mut run = LinearizedRun {
        times: Vec::with_capacity(obs.len()),
        states: Vec::with_capacity(obs.len()),
        centers: Vec::new(),
    };
    let mut cur = 0i64;
    for (&target, &t_obs) in targets.iter().zip(&obs) {
        while cur < target {
            if let Background::Path(traj) = background {
                let t_mid = t0 + (cur as f64 + 0.5) * dir * dt;
                let (i0, i1, th) = bracket(&traj.times, t_mid);
                let s0 = &traj.states[i0];
                if i0 == i1 {
                    for i in 0..len {
                        vpp[i] = pot.d2v(s0.r[i]);
                    }
                } else {
                    let s1 = &traj.states[i1];
                    for i in 0..len {
                        vpp[i] = pot.d2v(s0.r[i] + th * (s1.r[i] - s0.r[i]));
                    }
                }
            }
            lin_step(&mut w, &vpp, dir * dt);
            cur += 1;
        }
        if let Some(spec) = reproject.as_mut() {
            let Background::Path(traj) = background else {
                unreachable!("checked above");
            };
            let bg = field_at(traj, t_obs);
            let m = decompose(&bg, &spec.guess_c, &spec.guess_x, spec.family, &spec.opts)?;
            spec.guess_c.clone_from(&m.c);
            spec.guess_x.clone_from(&m.x);
            w = symplectic_projection(&w, &m.c, &m.x, spec.family)?;
            run.centers.push(m.x);
        }
        run.times.push(t_obs);
        run.states.push(w.clone());
    }
    Ok(run)
}

/// Sharp weighted-norm decay rate of the free lattice seen from a frame
/// moving at speed `c` with tilt `a`: `c a - 2 sinh(a/2)`.
pub fn free_decay_bound(c: f64, a: f64) -> f64 {
    c * a - 2.0 * (a / 2.0).sinh()
}

/// Fits `log norm` against `t` over the samples with `t >= fit_from` and
/// returns `(rate, fit)` where `rate = -slope` (positive means decay).
pub fn fitted_decay_rate(times: &[f64], norms: &[f64], fit_from: f64) -> Result<(f64, LineFit)> {
    if times.len() != norms.len() {
        return Err(Error::bad_input("mismatched time and norm lists"));
    }
    let mut ts = Vec::new();
    let mut ns = Vec::new();
    for (&t, &n) in times.iter().zip(norms) {
        if t >= fit_from - 1e-9 {
            ts.push(t);
            ns.push(n);
        }
    }
    let f = fit::exponential_fit(&ts, &ns)?;
    Ok((-f.slope, f))
}
