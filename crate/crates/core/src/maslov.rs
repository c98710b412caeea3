//! Winding numbers, square-root monodromy and the principal cocycle of the
//! Bargmann-side amplitude along an energy curve.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::LevelCurve;
use crate::symbol::SymbolDef;

/// Samples below this modulus (relative to the largest) count as zeros.
pub const MODULUS_TOL: f64 = 1e-12;
const ROUNDING_RESIDUAL: f64 = 0.01;
const BRANCH_SEPARATION: f64 = 10.0;

/// A closed sampled loop in `C`; the last sample connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexLoop {
    pub samples: Vec<Complex64>,
    pub times: Vec<f64>,
}

impl ComplexLoop {
    pub fn new(samples: Vec<Complex64>, times: Vec<f64>) -> Self {
        Self { samples, times }
    }

    /// `n` samples of `f` on `[0, 1)`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let times: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        let samples = times.iter().map(|&t| f(t)).collect();
        Self { samples, times }
    }

    fn check_moduli(&self) -> Result<()> {
        let scale = self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        for (k, s) in self.samples.iter().enumerate() {
            if s.norm() <= MODULUS_TOL * scale || scale == 0.0 {
                return Err(Error::ZeroCrossing { index: k, modulus: s.norm() });
            }
        }
        Ok(())
    }
}

/// Principal-branch argument increments around the loop, wrap-around included.
fn increments(lp: &ComplexLoop) -> Result<Vec<f64>> {
    lp.check_moduli()?;
    let n = lp.samples.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let a = lp.samples[k];
        let b = lp.samples[(k + 1) % n];
        let d = (b / a).arg();
        if d.abs() >= PI / 2.0 {
            return Err(Error::SamplingTooCoarse { index: k, increment: d });
        }
        out.push(d);
    }
    Ok(out)
}

pub fn winding_number(lp: &ComplexLoop) -> Result<i64> {
    if lp.samples.is_empty() {
        return Err(Error::InvalidInput("empty loop".into()));
    }
    let total: f64 = increments(lp)?.iter().sum();
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > ROUNDING_RESIDUAL {
        return Err(Error::Degenerate(format!("winding {w} is not near an integer")));
    }
    Ok(r as i64)
}

/// `sigma(t) = d_xi p + i d_x p` along the curve, i.e. `d_zeta p_Phi0` on the
/// image of the curve under `kappa0` (up to the factor `sqrt 2`).
pub fn maslov_loop(sym: &SymbolDef, curve: &LevelCurve) -> Result<ComplexLoop> {
    let n = curve.len();
    let samples: Vec<Complex64> = curve.points[..n]
        .iter()
        .map(|&(x, xi)| {
            let (gx, gxi) = sym.grad(x, xi);
            Complex64::new(gxi, gx)
        })
        .collect();
    let lp = ComplexLoop::new(samples, curve.times[..n].to_vec());
    lp.check_moduli()?;
    Ok(lp)
}

/// Winding of the tangent of the curve's image `z = (x - i xi)/sqrt 2`,
/// computed from chord directions.
pub fn orientation_index(curve: &LevelCurve) -> Result<i64> {
    let n = curve.len();
    let z: Vec<Complex64> = curve.points[..n].iter().map(|&(x, xi)| Complex64::new(x, -xi)).collect();
    let chords = (0..n).map(|k| z[(k + 1) % n] - z[k]).collect();
    winding_number(&ComplexLoop::new(chords, curve.times[..n].to_vec()))
}

/// Picks the square root of `s` continuing `prev`.
fn continue_root(s: Complex64, prev: Complex64, index: usize) -> Result<Complex64> {
    let r = s.sqrt();
    let (dp, dm) = ((r - prev).norm(), (r + prev).norm());
    let (win, near, far) = if dp <= dm { (r, dp, dm) } else { (-r, dm, dp) };
    if near * BRANCH_SEPARATION > far {
        return Err(Error::AmbiguousContinuation { index });
    }
    Ok(win)
}

/// Sign relating the continued square root after one turn to the initial one.
pub fn sqrt_holonomy(lp: &ComplexLoop) -> Result<i32> {
    lp.check_moduli()?;
    let n = lp.samples.len();
    let r0 = lp.samples[0].sqrt();
    let mut r = r0;
    for k in 1..=n {
        r = continue_root(lp.samples[k % n], r, k)?;
    }
    Ok(if (r - r0).norm() < (r + r0).norm() { 1 } else { -1 })
}

/// Product of the overlap transition signs of local branches of
/// `sigma^{-1/2}` over a cover of the curve by `m` arcs of equal flow time,
/// neighbouring arcs overlapping by a quarter of an arc.
pub fn cocycle_product(sym: &SymbolDef, curve: &LevelCurve, m: usize) -> Result<i32> {
    let lp = maslov_loop(sym, curve)?;
    Ok(cover_transitions(&lp, m)?.iter().product())
}

/// Transition sign between arc `j` and arc `j + 1` (mod `m`) for each `j`.
pub fn cover_transitions(lp: &ComplexLoop, m: usize) -> Result<Vec<i32>> {
    if m < 3 {
        return Err(Error::InvalidInput(format!("cover needs at least 3 arcs, got {m}")));
    }
    let n = lp.samples.len();
    if n < 4 * m {
        return Err(Error::InvalidInput(format!("{n} samples cannot support {m} arcs")));
    }
    let arcs: Vec<Vec<(usize, Complex64)>> = (0..m).map(|j| arc_branch(lp, m, j)).collect::<Result<_>>()?;
    let mut signs = Vec::with_capacity(m);
    for j in 0..m {
        let next = &arcs[(j + 1) % m];
        // shared sample at the nominal junction
        let junction = ((j + 1) * n / m) % n;
        let a = arcs[j].iter().find(|(k, _)| *k == junction).map(|p| p.1);
        let b = next.iter().find(|(k, _)| *k == junction).map(|p| p.1);
        let (Some(a), Some(b)) = (a, b) else {
            return Err(Error::InvalidInput("arcs do not overlap".into()));
        };
        signs.push(if (a / b).re > 0.0 { 1 } else { -1 });
    }
    Ok(signs)
}

/// Index range (mod n) of arc `j`: `[j - 1/8, j + 1 + 1/8]` in units of `n/m`.
pub fn arc_indices(n: usize, m: usize, j: usize) -> Vec<usize> {
    let unit = n as f64 / m as f64;
    let start = ((j as f64 - 0.125) * unit).floor() as i64;
    let end = ((j as f64 + 1.125) * unit).ceil() as i64;
    (start..=end).map(|k| k.rem_euclid(n as i64) as usize).collect()
}

/// Continuous branch of `sigma^{-1/2}` on arc `j`, anchored on the principal
/// root at the arc's first sample.
fn arc_branch(lp: &ComplexLoop, m: usize, j: usize) -> Result<Vec<(usize, Complex64)>> {
    let n = lp.samples.len();
    let idx = arc_indices(n, m, j);
    let mut out = Vec::with_capacity(idx.len());
    let mut arg = 0.0;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let mut r = lp.samples[idx[0]].sqrt();
    out.push((idx[0], r.inv()));
    for w in 1..idx.len() {
        let s = lp.samples[idx[w]];
        arg += (s / lp.samples[idx[w - 1]]).arg();
        lo = lo.min(arg);
        hi = hi.max(arg);
        r = continue_root(s, r, idx[w])?;
        out.push((idx[w], r.inv()));
    }
    if hi - lo >= PI / 2.0 {
        return Err(Error::CoverTooCoarse { arc: j, variation: hi - lo });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::trace_level_curve;

    fn circle(n: usize, k: f64) -> ComplexLoop {
        ComplexLoop::from_fn(n, |t| Complex64::from_polar(1.0, 2.0 * PI * k * t))
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&circle(256, 1.0)).unwrap(), 1);
        assert_eq!(winding_number(&ComplexLoop::from_fn(16, |_| Complex64::new(1.0, 0.0))).unwrap(), 0);
        assert_eq!(winding_number(&circle(256, -2.0)).unwrap(), -2);
    }

    #[test]
    fn coarse_and_zero_loops_rejected() {
        assert_eq!(winding_number(&circle(4, 1.0)).unwrap_err().code(), "SAMPLING_TOO_COARSE");
        let z = ComplexLoop::from_fn(8, |t| Complex64::new(t - 0.5, 0.0));
        assert_eq!(winding_number(&z).unwrap_err().code(), "ZERO_CROSSING");
    }

    #[test]
    fn winding_invariances() {
        let lp = ComplexLoop::from_fn(300, |t| {
            let a = 2.0 * PI * t;
            Complex64::new(2.0 * a.cos() + 0.3, a.sin()) * Complex64::from_polar(1.0, 2.0 * a)
        });
        let w = winding_number(&lp).unwrap();
        let mut rot = lp.clone();
        rot.samples.rotate_left(77);
        assert_eq!(winding_number(&rot).unwrap(), w);
        let mut sc = lp.clone();
        sc.samples.iter_mut().for_each(|s| *s *= Complex64::new(-0.3, 4.0));
        assert_eq!(winding_number(&sc).unwrap(), w);
    }

    #[test]
    fn holonomy_parity_law() {
        for k in -3..=3 {
            let lp = circle(512, k as f64);
            let w = winding_number(&lp).unwrap();
            let h = sqrt_holonomy(&lp).unwrap();
            assert_eq!(w, k);
            assert_eq!(h == -1, w.rem_euclid(2) == 1);
        }
        let c = ComplexLoop::from_fn(10, |_| Complex64::new(3.0, -1.0));
        assert_eq!(sqrt_holonomy(&c).unwrap(), 1);
    }

    #[test]
    fn harmonic_loop_is_circle_of_radius_two() {
        let h = SymbolDef::harmonic();
        let c = trace_level_curve(&h, 1.0, 1e-12).unwrap();
        let lp = maslov_loop(&h, &c).unwrap();
        for (k, s) in lp.samples.iter().enumerate() {
            let (x, xi) = c.points[k];
            assert!((s - Complex64::new(2.0 * xi, 2.0 * x)).norm() < 1e-14);
            assert!((s.norm() - 2.0).abs() < 1e-9);
        }
        assert_eq!(winding_number(&lp).unwrap().abs(), 1);
        assert_eq!(winding_number(&lp).unwrap(), orientation_index(&c).unwrap());
    }

    #[test]
    fn cocycle_matches_holonomy() {
        for (sym, m) in [(SymbolDef::harmonic(), 6), (SymbolDef::quartic(), 8)] {
            let c = trace_level_curve(&sym, 1.0, 1e-12).unwrap();
            let lp = maslov_loop(&sym, &c).unwrap();
            let hol = sqrt_holonomy(&lp).unwrap();
            assert_eq!(hol, -1);
            assert_eq!(cocycle_product(&sym, &c, m).unwrap(), hol);
            assert_eq!(cocycle_product(&sym, &c, 2 * m).unwrap(), cocycle_product(&sym, &c, m).unwrap());
        }
    }

    #[test]
    fn cover_too_coarse() {
        let h = SymbolDef::harmonic();
        let c = trace_level_curve(&h, 1.0, 1e-12).unwrap();
        assert_eq!(cocycle_product(&h, &c, 3).unwrap_err().code(), "COVER_TOO_COARSE");
    }
}
