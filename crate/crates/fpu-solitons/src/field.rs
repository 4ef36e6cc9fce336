//! Lattice states on a finite window of integer sites.
//!
//! A [`LatticeField`] stores the strain row `r` and momentum row `p` over the
//! contiguous window `lo ..= hi`. Sites outside the window are implicit zeros
//! ("ghost cells"); every finite-window operator in this crate reads them as
//! such, which makes the window a faithful stand-in for the infinite lattice
//! as long as the data decays below the tail tolerance before the edges.

use std::io::{BufRead, Write};

use crate::error::Error;
use crate::Result;

/// Relative floating-point slack used when matching times and windows.
pub const EPS_TIME: f64 = 1e-9;

/// A two-row lattice state `(r, p)` on the window `lo ..= lo + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    lo: i64,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
}

impl LatticeField {
    /// Zero state on `lo ..= hi`.
    pub fn zeros(lo: i64, hi: i64) -> Self {
        assert!(hi >= lo, "empty window [{lo}, {hi}]");
        let len = (hi - lo + 1) as usize;
        LatticeField {
            lo,
            r: vec![0.0; len],
            p: vec![0.0; len],
        }
    }

    /// Builds a field from explicit rows. Both rows must share a length.
    pub fn from_rows(lo: i64, r: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if r.len() != p.len() || r.is_empty() {
            return Err(Error::bad_input(format!(
                "row lengths differ or empty: r has {}, p has {}",
                r.len(),
                p.len()
            )));
        }
        Ok(LatticeField { lo, r, p })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.r.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Index of site `n` inside the window, if any.
    #[inline]
    pub fn idx(&self, n: i64) -> Option<usize> {
        if n < self.lo || n > self.hi() {
            None
        } else {
            Some((n - self.lo) as usize)
        }
    }

    /// Strain at site `n`, zero outside the window.
    #[inline]
    pub fn r_at(&self, n: i64) -> f64 {
        self.idx(n).map_or(0.0, |i| self.r[i])
    }

    /// Momentum at site `n`, zero outside the window.
    #[inline]
    pub fn p_at(&self, n: i64) -> f64 {
        self.idx(n).map_or(0.0, |i| self.p[i])
    }

    pub fn same_window(&self, other: &Self) -> bool {
        self.lo == other.lo && self.len() == other.len()
    }

    pub(crate) fn check_same_window(&self, other: &Self) -> Result<()> {
        if self.same_window(other) {
            Ok(())
        } else {
            Err(Error::WindowMismatch {
                expected_lo: self.lo,
                expected_hi: self.hi(),
                got_lo: other.lo,
                got_hi: other.hi(),
            })
        }
    }

    /// Plain `l^2` norm over both rows.
    pub fn l2_norm(&self) -> f64 {
        let mut peak = 0.0f64;
        for v in self.r.iter().chain(self.p.iter()) {
            peak = peak.max(v.abs());
        }
        if peak == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for v in self.r.iter().chain(self.p.iter()) {
            let s = v / peak;
            acc += s * s;
        }
        peak * acc.sqrt()
    }

    /// Sup norm over both rows.
    pub fn linf_norm(&self) -> f64 {
        self.r
            .iter()
            .chain(self.p.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest amplitude on the first and last window site, used to check
    /// that a state has decayed before touching the ghost cells.
    pub fn edge_amplitude(&self) -> f64 {
        let k = self.len() - 1;
        self.r[0]
            .abs()
            .max(self.p[0].abs())
            .max(self.r[k].abs())
            .max(self.p[k].abs())
    }

    /// True when both window edges sit below `tail_tol` in amplitude.
    pub fn is_decaying(&self, tail_tol: f64) -> bool {
        self.edge_amplitude() <= tail_tol
    }

    /// Euclidean inner product `<u, v> = sum_n u_r v_r + u_p v_p`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_window(other)?;
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.r[i] * other.r[i] + self.p[i] * other.p[i];
        }
        Ok(acc)
    }

    /// `self - other` on a shared window.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_window(other)?;
        let r = self.r.iter().zip(&other.r).map(|(a, b)| a - b).collect();
        let p = self.p.iter().zip(&other.p).map(|(a, b)| a - b).collect();
        Ok(LatticeField { lo: self.lo, r, p })
    }

    /// In-place `self += scale * other` on a shared window.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) -> Result<()> {
        self.check_same_window(other)?;
        for i in 0..self.len() {
            self.r[i] += scale * other.r[i];
            self.p[i] += scale * other.p[i];
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.r.iter_mut().chain(self.p.iter_mut()) {
            *v *= s;
        }
    }

    /// Copies this field into a (possibly different) window, dropping values
    /// outside and zero-filling uncovered sites.
    pub fn embed(&self, lo: i64, hi: i64) -> Self {
        let mut out = LatticeField::zeros(lo, hi);
        let a = self.lo.max(lo);
        let b = self.hi().min(hi);
        for n in a..=b {
            let i = (n - self.lo) as usize;
            let j = (n - lo) as usize;
            out.r[j] = self.r[i];
            out.p[j] = self.p[i];
        }
        out
    }

    /// Shifts the field by an integer number of sites (window moves with it).
    pub fn translate(&self, shift: i64) -> Self {
        LatticeField {
            lo: self.lo + shift,
            r: self.r.clone(),
            p: self.p.clone(),
        }
    }

    /// First moment of `|r|`, a robust center estimate for a single bump.
    pub fn strain_centroid(&self) -> f64 {
        let mut mass = 0.0;
        let mut moment = 0.0;
        for (i, v) in self.r.iter().enumerate() {
            let a = v.abs();
            mass += a;
            moment += a * (self.lo + i as i64) as f64;
        }
        if mass == 0.0 {
            0.0
        } else {
            moment / mass
        }
    }

    /// Writes the field as CSV with header `n,r,p` and 17-significant-digit
    /// scientific values, enough to round-trip `f64` exactly.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "n,r,p")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{:.16e},{:.16e}",
                self.lo + i as i64,
                self.r[i],
                self.p[i]
            )?;
        }
        Ok(())
    }

    /// Reads a field written by [`LatticeField::write_csv`]. Sites must be
    /// contiguous and ascending.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lo = None;
        let mut next = 0i64;
        let mut r = Vec::new();
        let mut p = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || (lineno == 0 && t.starts_with('n')) {
                continue;
            }
            let mut cols = t.split(',');
            let parse = |s: Option<&str>, what: &str| -> Result<f64> {
                s.ok_or_else(|| Error::bad_input(format!("line {}: missing {what}", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::bad_input(format!("line {}: {what}: {e}", lineno + 1)))
            };
            let n = parse(cols.next(), "site")? as i64;
            let rv = parse(cols.next(), "r")?;
            let pv = parse(cols.next(), "p")?;
            match lo {
                None => lo = Some(n),
                Some(_) if n != next => {
                    return Err(Error::bad_input(format!(
                        "line {}: non-contiguous site {n}, expected {next}",
                        lineno + 1
                    )));
                }
                Some(_) => {}
            }
            next = n + 1;
            r.push(rv);
            p.push(pv);
        }
        let lo = lo.ok_or_else(|| Error::bad_input("empty field file"))?;
        LatticeField::from_rows(lo, r, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghost_cells_read_zero() {
        let mut u = LatticeField::zeros(-2, 2);
        u.r[0] = 1.5;
        u.p[4] = -0.5;
        assert_eq!(u.r_at(-2), 1.5);
        assert_eq!(u.p_at(2), -0.5);
        assert_eq!(u.r_at(-3), 0.0);
        assert_eq!(u.p_at(3), 0.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut u = LatticeField::zeros(-5, 7);
        for i in 0..u.len() {
            u.r[i] = (i as f64 * 0.7231).sin() * 1e-3;
            u.p[i] = (i as f64 * 1.1).cos() / 3.0;
        }
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let v = LatticeField::read_csv(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn embed_and_translate() {
        let mut u = LatticeField::zeros(0, 4);
        u.r[2] = 2.0;
        let big = u.embed(-3, 9);
        assert_eq!(big.r_at(2), 2.0);
        assert_eq!(big.lo(), -3);
        let moved = u.translate(10);
        assert_eq!(moved.r_at(12), 2.0);
    }

    #[test]
    fn window_mismatch_is_reported() {
        let u = LatticeField::zeros(0, 4);
        let v = LatticeField::zeros(1, 5);
        assert!(matches!(
            u.inner(&v),
            Err(Error::WindowMismatch { .. })
        ));
    }
}
