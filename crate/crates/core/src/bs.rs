//! Bohr–Sommerfeld predictions `A(lambda) = 2 pi hbar (k + 1/2)` and their
//! comparison with a reference spectrum.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt_g17;
use crate::geometry::ActionProfile;

/// Errors below this make an order fit meaningless.
pub const DEGENERATE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsPrediction {
    pub k: i64,
    /// Quantized action `2 pi hbar (k + 1/2)`.
    pub action: f64,
    pub lambda: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub k: i64,
    pub lambda_bs: f64,
    pub lambda_ref: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub hbar: f64,
    pub pairs: Vec<MatchedPair>,
    pub unmatched_bs: Vec<f64>,
    pub unmatched_ref: Vec<f64>,
    pub max_abs_err: f64,
}

impl SpectrumReport {
    /// Rows `hbar,k,lambda_bs,lambda_ref,abs_err` without header.
    pub fn pair_rows(&self) -> String {
        let mut s = String::new();
        for p in &self.pairs {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_g17(self.hbar),
                p.k,
                fmt_g17(p.lambda_bs),
                fmt_g17(p.lambda_ref),
                fmt_g17(p.abs_err)
            ));
        }
        s
    }

    /// Row `hbar,max_abs_err,count` without header.
    pub fn summary_row(&self) -> String {
        format!("{},{},{}\n", fmt_g17(self.hbar), fmt_g17(self.max_abs_err), self.pairs.len())
    }
}

pub const PAIRS_HEADER: &str = "hbar,k,lambda_bs,lambda_ref,abs_err\n";
pub const SUMMARY_HEADER: &str = "hbar,max_abs_err,count\n";

/// Solves `A(lambda) = 2 pi hbar (k + 1/2)` for every `k` whose quantized
/// action lies strictly between `A(E1)` and `A(E2)`.
pub fn bs_eigenvalues(profile: &ActionProfile, hbar: f64, e1: f64, e2: f64) -> Result<Vec<BsPrediction>> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
    }
    let (lo, hi) = profile.lambda_range();
    if !(e1 >= lo && e2 <= hi && e1 < e2) {
        return Err(Error::ProfileRange { e1, e2 });
    }
    let a1 = profile.action_at(e1)?;
    let a2 = profile.action_at(e2)?;
    let quantum = 2.0 * PI * hbar;
    let k_min = ((a1 / quantum - 0.5).floor() as i64 + 1).max(0);
    let k_max = (a2 / quantum - 0.5).ceil() as i64 - 1;
    let mut out = Vec::new();
    for k in k_min..=k_max {
        let action = quantum * (k as f64 + 0.5);
        if action <= a1 || action >= a2 {
            continue;
        }
        let lambda = profile.inverse(action)?;
        out.push(BsPrediction { k, action, lambda, hbar });
    }
    Ok(out)
}

/// `min(pi hbar / T(lambda_mid), cap)`: half the local level spacing.
pub fn default_match_radius(profile: &ActionProfile, hbar: f64, e1: f64, e2: f64, cap: f64) -> Result<f64> {
    let t = profile.period_at(0.5 * (e1 + e2))?;
    Ok((PI * hbar / t).min(cap))
}

/// Greedy nearest-neighbour pairing inside `match_radius`, kept monotone.
pub fn compare_spectra(bs: &[BsPrediction], reference: &[f64], match_radius: f64) -> Result<SpectrumReport> {
    let hbar = bs.first().map_or(f64::NAN, |b| b.hbar);
    let mut pairs = Vec::new();
    let mut unmatched_bs = Vec::new();
    let mut used = vec![false; reference.len()];
    let mut last: Option<usize> = None;
    for b in bs {
        let nearest = reference
            .iter()
            .enumerate()
            .filter(|(_, &r)| (r - b.lambda).abs() <= match_radius)
            .min_by(|x, y| (x.1 - b.lambda).abs().total_cmp(&(y.1 - b.lambda).abs()));
        match nearest {
            None => unmatched_bs.push(b.lambda),
            Some((j, &r)) => {
                if used[j] || last.is_some_and(|l| j <= l) {
                    return Err(Error::AmbiguousMatch { reference: r });
                }
                used[j] = true;
                last = Some(j);
                pairs.push(MatchedPair {
                    k: b.k,
                    lambda_bs: b.lambda,
                    lambda_ref: r,
                    abs_err: (r - b.lambda).abs(),
                });
            }
        }
    }
    let unmatched_ref = reference.iter().zip(&used).filter(|(_, &u)| !u).map(|(&r, _)| r).collect();
    let max_abs_err = pairs.iter().map(|p| p.abs_err).fold(0.0, f64::max);
    Ok(SpectrumReport {
        hbar,
        pairs,
        unmatched_bs,
        unmatched_ref,
        max_abs_err,
    })
}

/// Least-squares slope of `log max_abs_err` against `log hbar`.
pub fn convergence_order(reports: &[SpectrumReport]) -> Result<f64> {
    let data: Vec<(f64, f64)> = reports.iter().map(|r| (r.hbar, r.max_abs_err)).collect();
    fit_order(&data)
}

/// Least-squares slope of `log err` against `log hbar` for `(hbar, err)` data.
pub fn fit_order(data: &[(f64, f64)]) -> Result<f64> {
    if data.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {}", data.len())));
    }
    for (i, a) in data.iter().enumerate() {
        if !(a.0 > 0.0) {
            return Err(Error::Degenerate(format!("non-positive hbar {}", a.0)));
        }
        if data[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::Degenerate(format!("repeated hbar {}", a.0)));
        }
        if !(a.1 >= DEGENERATE_FLOOR) {
            return Err(Error::Degenerate(format!("error {:e} at hbar {} below floor", a.1, a.0)));
        }
    }
    let n = data.len() as f64;
    let xs: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
