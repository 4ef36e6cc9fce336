//! Time integration of the chain, forward and backward.
//!
//! The equations of motion split exactly into two solvable pieces:
//!
//! * kick: `p(n) += dt (V'(r(n)) - V'(r(n-1)))` with `r` frozen,
//! * drift: `r(n) += dt (p(n+1) - p(n))` with `p` frozen,
//!
//! and one step is the symmetric composition kick(dt/2) drift(dt) kick(dt/2).
//! Both sub-flows are exact, so the scheme is symplectic, second order, and
//! exactly time-reversible: stepping `+dt` then `-dt` returns the input up to
//! rounding. Adjacent half-kicks are fused between steps, which matters for
//! the exponential potential where `V'` dominates the cost.
//!
//! Because `V'(0) = 0`, sites that are exactly zero stay zero until a signal
//! reaches them, and signals travel one site per sub-flow. The integrator
//! tracks the active range of nonzero sites and widens it by one site per
//! sub-step, so the cost per unit time scales with the support of the
//! solution rather than the window size.

use std::io::Write;

use crate::error::Error;
use crate::field::LatticeField;
use crate::ops::hamiltonian;
use crate::potential::Potential;
use crate::Result;

/// Largest step size accepted by the integrator.
pub const DT_MAX: f64 = 0.05;
/// Amplitude beyond which a run is declared blown up.
pub const BLOWUP_LIMIT: f64 = 1e6;
/// Relative energy drift above which a trajectory is flagged.
pub const DRIFT_TOL: f64 = 1e-8;
/// Steps between in-flight blow-up checks.
const CHECK_EVERY: usize = 1000;

/// Step size for construction runs at small amplitude `eps`: modulation
/// dynamics move on the `eps^3` time scale, and `1e-3` bounds the error for
/// order-one speeds.
pub fn default_dt(eps: f64) -> f64 {
    1e-3f64.min(eps.powi(3))
}

/// A time-ordered sequence of snapshots with energy bookkeeping.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Signed step size actually used.
    pub dt: f64,
    /// Snapshot times, uniformly increasing or uniformly decreasing.
    pub times: Vec<f64>,
    /// States at `times`.
    pub states: Vec<LatticeField>,
    /// Total energy at `times`.
    pub energies: Vec<f64>,
    /// Relative energy drift `|H(t) - H(t_0)| / max(|H(t_0)|, 1)`.
    pub drifts: Vec<f64>,
    /// Set when any snapshot drift exceeded [`DRIFT_TOL`].
    pub drift_warning: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &LatticeField {
        self.states.last().expect("trajectory has at least one snapshot")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one snapshot")
    }

    /// Snapshot at time `t` (within rounding), if one was recorded.
    pub fn state_at(&self, t: f64) -> Option<&LatticeField> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|i| &self.states[i])
    }

    /// Largest recorded relative energy drift.
    pub fn max_drift(&self) -> f64 {
        self.drifts.iter().copied().fold(0.0, f64::max)
    }

    /// Writes the energy series as CSV with header `t,energy,drift`.
    pub fn write_energy_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,energy,drift")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                self.times[i], self.energies[i], self.drifts[i]
            )?;
        }
        Ok(())
    }
}

/// In-place stepper with an expanding active range and fused kicks.
struct Stepper {
    pot: Potential,
    lo: i64,
    r: Vec<f64>,
    p: Vec<f64>,
    /// Active range `[a, b]` (inclusive indices); everything outside is
    /// exactly zero. `a > b` encodes an all-zero state.
    a: usize,
    b: usize,
    dv: Vec<f64>,
}

impl Stepper {
    fn new(u: &LatticeField, pot: Potential) -> Self {
        let nz = |v: &f64| *v != 0.0;
        let first = u
            .r
            .iter()
            .position(nz)
            .into_iter()
            .chain(u.p.iter().position(nz))
            .min();
        let last = u
            .r
            .iter()
            .rposition(nz)
            .into_iter()
            .chain(u.p.iter().rposition(nz))
            .max();
        let (a, b) = match (first, last) {
            (Some(a), Some(b)) => (a, b),
            _ => (1, 0), // all-zero state
        };
        Stepper {
            pot,
            lo: u.lo(),
            r: u.r.clone(),
            p: u.p.clone(),
            a,
            b,
            dv: Vec::new(),
        }
    }

    fn is_zero(&self) -> bool {
        self.a > self.b
    }

    /// `p(n) += dt (V'(r(n)) - V'(r(n-1)))`; widens the range right by one.
    fn kick(&mut self, dt: f64) {
        if self.is_zero() {
            return;
        }
        let (a, b) = (self.a, self.b);
        let new_b = (b + 1).min(self.r.len() - 1);
        self.dv.clear();
        self.dv.reserve(b - a + 1);
        // One dispatch per sub-step, then tight loops per potential.
        match self.pot {
            Potential::AlphaFpu => {
                for i in a..=b {
                    let r = self.r[i];
                    self.dv.push(r + r * r / 12.0);
                }
            }
            Potential::Toda { a: ta, b: tb } => {
                for i in a..=b {
                    self.dv.push(ta * tb * (self.r[i] / tb).exp_m1());
                }
            }
            Potential::Quadratic => self.dv.extend_from_slice(&self.r[a..=b]),
        }
        for n in a..=new_b {
            let here = if n <= b { self.dv[n - a] } else { 0.0 };
            let left = if n > a { self.dv[n - 1 - a] } else { 0.0 };
            self.p[n] += dt * (here - left);
        }
        self.b = new_b;
    }

    /// `r(n) += dt (p(n+1) - p(n))`; widens the range left by one.
    fn drift(&mut self, dt: f64) {
        if self.is_zero() {
            return;
        }
        let (a, b) = (self.a, self.b);
        let new_a = a.saturating_sub(1);
        for n in new_a..=b {
            let right = if n + 1 < self.p.len() { self.p[n + 1] } else { 0.0 };
            self.r[n] += dt * (right - self.p[n]);
        }
        self.a = new_a;
    }

    /// Runs `n` fused kick–drift–kick steps of size `dt`.
    fn run(&mut self, n: usize, dt: f64, t_start: f64) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        self.kick(0.5 * dt);
        for k in 0..n {
            self.drift(dt);
            if k + 1 < n {
                self.kick(dt);
            }
            if (k + 1) % CHECK_EVERY == 0 {
                self.check_amplitude(t_start + (k + 1) as f64 * dt)?;
            }
        }
        self.kick(0.5 * dt);
        self.check_amplitude(t_start + n as f64 * dt)
    }

    fn check_amplitude(&self, t: f64) -> Result<()> {
        if self.is_zero() {
            return Ok(());
        }
        let mut peak = 0.0f64;
        for i in self.a..=self.b {
            for v in [self.r[i], self.p[i]] {
                if !v.is_finite() {
                    return Err(Error::BlowUp {
                        t,
                        amplitude: f64::INFINITY,
                    });
                }
                peak = peak.max(v.abs());
            }
        }
        if peak > BLOWUP_LIMIT {
            return Err(Error::BlowUp { t, amplitude: peak });
        }
        Ok(())
    }

    fn snapshot(&self) -> LatticeField {
        LatticeField::from_rows(self.lo, self.r.clone(), self.p.clone())
            .expect("stepper rows are consistent")
    }
}

/// One symmetric kick–drift–kick step of signed size `dt`.
pub fn step(u: &LatticeField, pot: &Potential, dt: f64) -> Result<LatticeField> {
    if !(dt.abs() <= DT_MAX) {
        return Err(Error::bad_input(format!(
            "|dt| = {} exceeds DT_MAX = {DT_MAX}",
            dt.abs()
        )));
    }
    let mut s = Stepper::new(u, *pot);
    s.run(1, dt, 0.0)?;
    Ok(s.snapshot())
}

/// Integrates from `t0` to `t1` (either direction) with step `dt > 0`,
/// recording snapshots at `observe_at` (defaults to `{t0, t1}` when empty).
///
/// Observation times must lie between `t0` and `t1`, be ordered in the
/// direction of integration, and sit on the step grid within rounding.
pub fn integrate(
    u0: &LatticeField,
    pot: &Potential,
    t0: f64,
    t1: f64,
    dt: f64,
    observe_at: &[f64],
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt <= DT_MAX) {
        return Err(Error::bad_input(format!(
            "dt = {dt} must lie in (0, {DT_MAX}]"
        )));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let sdt = dir * dt;
    let mut obs: Vec<f64> = if observe_at.is_empty() {
        if (t1 - t0).abs() > 0.0 {
            vec![t0, t1]
        } else {
            vec![t0]
        }
    } else {
        observe_at.to_vec()
    };
    obs.sort_by(|x, y| (dir * x).partial_cmp(&(dir * y)).expect("finite times"));
    let span = (t1 - t0).abs();
    for &t in &obs {
        let off = dir * (t - t0);
        if off < -1e-9 || off > span + 1e-9 {
            return Err(Error::bad_input(format!(
                "observation time {t} outside [{t0}, {t1}]"
            )));
        }
    }

    let mut s = Stepper::new(u0, *pot);
    s.check_amplitude(t0)?;
    let h0 = {
        let u = s.snapshot();
        hamiltonian(&u, pot)
    };
    let h_scale = h0.abs().max(1.0);

    let mut traj = Trajectory {
        dt: sdt,
        times: Vec::with_capacity(obs.len()),
        states: Vec::with_capacity(obs.len()),
        energies: Vec::with_capacity(obs.len()),
        drifts: Vec::with_capacity(obs.len()),
        drift_warning: false,
    };

    let mut t_cur = t0;
    for &t_obs in &obs {
        let gap = (t_obs - t_cur) * dir;
        let n = (gap / dt).round() as i64;
        if n < 0 || (n as f64 * dt - gap).abs() > 1e-9 * gap.abs().max(1.0) {
            return Err(Error::bad_input(format!(
                "observation time {t_obs} is not on the dt = {dt} grid from {t_cur}"
            )));
        }
        s.run(n as usize, sdt, t_cur)?;
        t_cur = t_obs;
        let u = s.snapshot();
        let h = hamiltonian(&u, pot);
        let drift = (h - h0).abs() / h_scale;
        if drift > DRIFT_TOL {
            traj.drift_warning = true;
        }
        traj.times.push(t_obs);
        traj.states.push(u);
        traj.energies.push(h);
        traj.drifts.push(drift);
    }
    Ok(traj)
}
