//! The Hamiltonian structure of the chain: the symplectic operator `J`, its
//! right inverse, the energy and its gradient, and the equations of motion.
//!
//! The chain `(r, p)` evolves by `du/dt = J grad H(u)` with
//! `H = sum_n p(n)^2/2 + V(r(n))` and
//!
//! ```text
//! J = [ 0        S - 1 ]        (S f)(n) = f(n+1)
//!     [ 1 - S^-1     0 ]
//! ```
//!
//! so that `dr/dt = p(n+1) - p(n)` and `dp/dt = V'(r(n)) - V'(r(n-1))`.
//!
//! `J` kills constants, so it has no two-sided inverse on all sequences; the
//! operator implemented by [`apply_j_inverse`] inverts it from the right by
//! summing tails toward `+inf`:
//!
//! ```text
//! (J^-1 f)_r(n) = - sum_{k >= 1} f_p(n + k)
//! (J^-1 f)_p(n) = - sum_{k >= 0} f_r(n + k)
//! ```
//!
//! On compactly supported data `J^-1 J = 1` exactly, and `J J^-1 = 1` exactly
//! on fields whose rows sum to zero (every field in the range of `J` does).
//! For a general compactly supported field, `J^-1 f` tends to the constants
//! `(-sum f_p, -sum f_r)` toward `-inf`; the pairing `<u, J^-1 v>` against a
//! compactly supported `u` is still a finite, exact sum, which is what the
//! modulation machinery consumes.

use crate::error::Error;
use crate::field::LatticeField;
use crate::potential::Potential;
use crate::Result;

/// Applies the symplectic operator `J`. The output lives on the window
/// enlarged by one ghost site on each side, so it is exact for any input
/// (the input's own ghost cells read as zero).
pub fn apply_j(f: &LatticeField) -> LatticeField {
    let lo = f.lo() - 1;
    let hi = f.hi() + 1;
    let mut out = LatticeField::zeros(lo, hi);
    for n in lo..=hi {
        let i = (n - lo) as usize;
        out.r[i] = f.p_at(n + 1) - f.p_at(n);
        out.p[i] = f.r_at(n) - f.r_at(n - 1);
    }
    out
}

/// Applies the right inverse of `J` by tail sums toward `+inf`, truncated at
/// the window edge. Returns the field together with a bound on the per-site
/// truncation error, `tail_tol * window length`.
///
/// The input must have decayed at the right edge of its window (that is where
/// the neglected tails live); otherwise the tail sums do not converge and a
/// divergence error is returned. No decay toward `-inf` is required: the
/// result itself may tend to a nonzero constant on the left, as `J^-1` of a
/// delta does.
pub fn apply_j_inverse(f: &LatticeField, tail_tol: f64) -> Result<(LatticeField, f64)> {
    let scale = f.linf_norm().max(1.0);
    let k = f.len() - 1;
    let right_edge = f.r[k].abs().max(f.p[k].abs());
    if right_edge > tail_tol * scale {
        return Err(Error::Divergence {
            edge: right_edge,
            limit: tail_tol * scale,
        });
    }
    let mut out = LatticeField::zeros(f.lo(), f.hi());
    // Suffix sums, built right to left:
    //   out_p(n) = -(f_r(n) + f_r(n+1) + ... ),
    //   out_r(n) = -(f_p(n+1) + f_p(n+2) + ... ).
    let mut sum_r = 0.0;
    let mut sum_p = 0.0;
    for i in (0..f.len()).rev() {
        // out_r skips the k = 0 term, out_p includes it.
        out.r[i] = -sum_p;
        sum_r += f.r[i];
        sum_p += f.p[i];
        out.p[i] = -sum_r;
    }
    let bound = tail_tol * f.len() as f64;
    Ok((out, bound))
}

/// The symplectic pairing `<u, J^-1 v>` as a finite sum.
///
/// Exact (up to rounding) whenever `v` is supported inside the shared window:
/// every tail sum that multiplies a nonzero entry of `u` then lies entirely
/// inside the window. For compactly supported fields this satisfies the
/// closed form `<u, J^-1 u> = -(sum u_r)(sum u_p)`.
pub fn pairing(u: &LatticeField, v: &LatticeField) -> Result<f64> {
    u.check_same_window(v)?;
    let mut acc = 0.0;
    let mut sum_r = 0.0;
    let mut sum_p = 0.0;
    for i in (0..u.len()).rev() {
        // (J^-1 v)_r(i) = -sum_p over k >= 1; sums not yet including site i.
        acc += u.r[i] * (-sum_p);
        sum_r += v.r[i];
        sum_p += v.p[i];
        // (J^-1 v)_p(i) = -sum_r over k >= 0; sums now include site i.
        acc += u.p[i] * (-sum_r);
    }
    Ok(acc)
}

/// Total energy `H(u) = sum_n p(n)^2/2 + V(r(n))`.
pub fn hamiltonian(u: &LatticeField, pot: &Potential) -> f64 {
    let mut h = 0.0;
    for i in 0..u.len() {
        h += 0.5 * u.p[i] * u.p[i] + pot.value(u.r[i]);
    }
    h
}

/// Gradient of the energy, `grad H(u) = (V'(r), p)`, on the same window.
pub fn grad_h(u: &LatticeField, pot: &Potential) -> LatticeField {
    let mut out = LatticeField::zeros(u.lo(), u.hi());
    for i in 0..u.len() {
        out.r[i] = pot.dv(u.r[i]);
        out.p[i] = u.p[i];
    }
    out
}

/// Right-hand side of the equations of motion, `J grad H(u)`, on the same
/// window. Since `V'(0) = 0`, ghost sites contribute nothing and the result
/// is exact wherever the input has decayed one site inside the edges.
pub fn vector_field(u: &LatticeField, pot: &Potential) -> LatticeField {
    let mut out = LatticeField::zeros(u.lo(), u.hi());
    for n in u.lo()..=u.hi() {
        let i = (n - u.lo()) as usize;
        out.r[i] = u.p_at(n + 1) - u.p_at(n);
        out.p[i] = pot.dv(u.r_at(n)) - pot.dv(u.r_at(n - 1));
    }
    out
}

/// Row sums `(sum_n r(n), sum_n p(n))`; both are conserved by the flow.
pub fn row_sums(u: &LatticeField) -> (f64, f64) {
    let sr = u.r.iter().sum();
    let sp = u.p.iter().sum();
    (sr, sp)
}
