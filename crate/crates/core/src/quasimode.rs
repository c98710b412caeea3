//! Bargmann-side WKB quasimodes: eikonal branches, phase, principal
//! amplitude, the gauge function, partial actions and the residual of the
//! truncated good-contour operator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_to_polyline, LevelCurve};
use crate::ode::{integrate_to, OdeOptions};
use crate::quad::gauss_legendre;
use crate::symbol::{kappa0, phi0, SymbolDef};

/// Smallest admissible `|d_zeta p_Phi0|`.
pub const JACOBIAN_FLOOR: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 60;

/// Root of `p_Phi0(z, .) = lambda` reached by Newton's method from `seed`.
pub fn eikonal_solve(sym: &SymbolDef, lambda: Complex64, z: Complex64, seed: Complex64) -> Result<Complex64> {
    let tol = NEWTON_TOL * lambda.norm().max(1.0);
    let mut zeta = seed;
    for _ in 0..NEWTON_MAX {
        let f = sym.eval_complex(z, zeta) - lambda;
        if f.norm() <= tol {
            return Ok(zeta);
        }
        let d = sym.dzeta_phi0(z, zeta);
        if d.norm() < JACOBIAN_FLOOR {
            return Err(Error::JacobianSingular { z: z.to_string(), modulus: d.norm() });
        }
        zeta -= f / d;
        if !zeta.re.is_finite() || !zeta.im.is_finite() {
            break;
        }
    }
    Err(Error::NewtonDiverged { z: z.to_string() })
}

/// Point of a branch: position, eikonal root and continued `a0 = (d_zeta p)^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    z: Complex64,
    zeta: Complex64,
    a0: Complex64,
}

fn continue_inv_sqrt(s: Complex64, prev: Complex64) -> Complex64 {
    let r = s.sqrt().inv();
    if (r - prev).norm() <= (r + prev).norm() {
        r
    } else {
        -r
    }
}

/// Local solution `zeta(lambda, z)` of the eikonal equation, continued from a
/// base point on the image of the energy curve.
#[derive(Debug, Clone)]
pub struct EikonalBranch<'a> {
    sym: &'a SymbolDef,
    pub lambda: Complex64,
    pub base: Complex64,
    pub base_zeta: Complex64,
    /// Principal root at the base point; every continuation starts here.
    pub base_a0: Complex64,
    /// Image of the energy curve under `kappa0`, as `(re, im)` pairs.
    image: Vec<(f64, f64)>,
    /// Largest admissible distance from the curve image.
    pub tube: f64,
}

impl<'a> EikonalBranch<'a> {
    /// Branch anchored at sample `index` of `curve`, valid within `tube` of the curve image.
    pub fn on_curve(sym: &'a SymbolDef, curve: &LevelCurve, index: usize, tube: f64) -> Result<Self> {
        let (x, xi) = curve.points[index % curve.len()];
        let (z, zeta0) = kappa0(x, xi);
        let lambda = Complex64::new(curve.lambda, 0.0);
        let zeta = eikonal_solve(sym, lambda, z, zeta0)?;
        let d = sym.dzeta_phi0(z, zeta);
        if d.norm() < JACOBIAN_FLOOR {
            return Err(Error::ZeroDerivative { z: z.to_string() });
        }
        let image = curve.points.iter().map(|&(x, xi)| {
            let z = kappa0(x, xi).0;
            (z.re, z.im)
        }).collect();
        Ok(Self { sym, lambda, base: z, base_zeta: zeta, base_a0: d.sqrt().inv(), image, tube })
    }

    pub fn symbol(&self) -> &SymbolDef {
        self.sym
    }

    /// Distance from `z` to the polygonal curve image.
    pub fn distance_to_curve(&self, z: Complex64) -> f64 {
        distance_to_polyline(&self.image, z.re, z.im)
    }

    fn start(&self) -> State {
        State { z: self.base, zeta: self.base_zeta, a0: self.base_a0 }
    }

    fn check_tube(&self, z: Complex64) -> Result<()> {
        if self.distance_to_curve(z) > self.tube {
            return Err(Error::BranchLeftTube { z: z.to_string() });
        }
        Ok(())
    }

    fn advance(&self, s: State, z: Complex64) -> Result<State> {
        let dz = z - s.z;
        let dp = self.sym.dzeta_phi0(s.z, s.zeta);
        let predictor = s.zeta - self.sym.dz_phi0(s.z, s.zeta) / dp * dz;
        let zeta = eikonal_solve(self.sym, self.lambda, z, predictor)?;
        let d = self.sym.dzeta_phi0(z, zeta);
        if d.norm() < JACOBIAN_FLOOR {
            return Err(Error::ZeroDerivative { z: z.to_string() });
        }
        Ok(State { z, zeta, a0: continue_inv_sqrt(d, s.a0) })
    }

    /// Continues from `s` to `to` along a straight segment; returns the end
    /// state and `int zeta dz` over the segment.
    fn walk(&self, s: State, to: Complex64, rule: &(Vec<f64>, Vec<f64>)) -> Result<(State, Complex64)> {
        let len = (to - s.z).norm();
        if len == 0.0 {
            return Ok((s, Complex64::new(0.0, 0.0)));
        }
        let panels = (len / (self.tube / 8.0)).ceil().max(1.0) as usize;
        let from = s.z;
        let step = (to - from) / panels as f64;
        let mut cur = s;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let a = from + step * p as f64;
            for (x, w) in rule.0.iter().zip(&rule.1) {
                cur = self.advance(cur, a + step * (0.5 * (x + 1.0)))?;
                acc += cur.zeta * (0.5 * w) * step;
            }
            cur = self.advance(cur, a + step)?;
        }
        Ok((cur, acc))
    }

    fn walk_path(&self, path: &[Complex64]) -> Result<(State, Complex64)> {
        let rule = gauss_legendre(16);
        let mut s = self.start();
        let mut acc = Complex64::new(0.0, 0.0);
        for &z in path {
            self.check_tube(z)?;
            let (t, a) = self.walk(s, z, &rule)?;
            s = t;
            acc += a;
        }
        Ok((s, acc))
    }

    /// `zeta(lambda, z)` at the end of a polyline from the base point.
    pub fn zeta(&self, path: &[Complex64]) -> Result<Complex64> {
        Ok(self.walk_path(path)?.0.zeta)
    }

    /// `phi(z) = int_{base}^{z} zeta dz - i Phi0(base)` along a polyline from the base point.
    pub fn phase(&self, path: &[Complex64]) -> Result<Complex64> {
        let (_, acc) = self.walk_path(path)?;
        Ok(acc - Complex64::i() * phi0(self.base))
    }

    /// `a0 = (d_zeta p_Phi0)^{-1/2}` continued along a polyline from the base point.
    pub fn principal_amplitude(&self, path: &[Complex64]) -> Result<Complex64> {
        Ok(self.walk_path(path)?.0.a0)
    }

    /// Gauge `F = Im phi + Phi0` at `z`, reached by a straight path.
    pub fn gauge(&self, z: Complex64) -> Result<f64> {
        Ok(self.phase(&[z])?.im + phi0(z))
    }
}

/// Values `(F, d^2)` at each sample, each reached by a straight path from
/// the closest curve sample.
pub fn gauge_values(sym: &SymbolDef, curve: &LevelCurve, samples: &[Complex64], tube: f64) -> Result<Vec<(f64, f64)>> {
    let n = curve.len();
    samples
        .par_iter()
        .map(|&z| {
            let k = (0..n)
                .min_by(|&a, &b| {
                    let da = (kappa0(curve.points[a].0, curve.points[a].1).0 - z).norm();
                    let db = (kappa0(curve.points[b].0, curve.points[b].1).0 - z).norm();
                    da.total_cmp(&db)
                })
                .unwrap_or(0);
            let br = EikonalBranch::on_curve(sym, curve, k, tube)?;
            let d = br.distance_to_curve(z);
            Ok((br.gauge(z)?, d * d))
        })
        .collect()
}

/// Smallest and largest `F / d^2` over samples off the curve
/// (`d^2 > 1e-12` times the squared curve scale).
pub fn gauge_check(values: &[(f64, f64)], scale: f64) -> (f64, f64) {
    let floor = 1e-12 * scale * scale;
    values
        .iter()
        .filter(|(_, d2)| *d2 > floor)
        .map(|(f, d2)| f / d2)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Radial samples `z (1 +- eps)` around `count` equally spaced points of the curve image.
pub fn radial_samples(curve: &LevelCurve, count: usize, eps: f64) -> Vec<Complex64> {
    let n = curve.len();
    (0..count)
        .flat_map(|j| {
            let (x, xi) = curve.points[j * n / count];
            let z = kappa0(x, xi).0;
            [z * (1.0 - eps), z * (1.0 + eps)]
        })
        .collect()
}

/// Transport defect `max |(1/2 d_z s + s d_z) a| / max |1/2 (d_z s) a|` on the
/// sample range `[i0, i1]` of the curve, where `s = d_zeta p_Phi0` and
/// `a = s^{exponent}`; fourth-order central differences in time.
pub fn transport_residual(sym: &SymbolDef, curve: &LevelCurve, i0: usize, i1: usize, exponent: f64) -> Result<f64> {
    if i1 < i0 + 4 || i1 > curve.len() {
        return Err(Error::InvalidInput(format!("arc [{i0}, {i1}] too short or outside the curve")));
    }
    let mut s = Vec::with_capacity(i1 - i0 + 1);
    let mut zdot = Vec::with_capacity(i1 - i0 + 1);
    for k in i0..=i1 {
        let (x, xi) = curve.points[k];
        let (z, zeta) = kappa0(x, xi);
        let d = sym.dzeta_phi0(z, zeta);
        if d.norm() < JACOBIAN_FLOOR {
            return Err(Error::ZeroDerivative { z: z.to_string() });
        }
        s.push(d);
        let (vx, vxi) = curve.velocities[k];
        zdot.push(Complex64::new(vx, -vxi) / std::f64::consts::SQRT_2);
    }
    // continuous branch of s^exponent along the arc
    let mut a = Vec::with_capacity(s.len());
    let mut log_s = s[0].ln();
    a.push((log_s * exponent).exp());
    for k in 1..s.len() {
        log_s += (s[k] / s[k - 1]).ln();
        a.push((log_s * exponent).exp());
    }
    let h = curve.dt();
    let d4 = |f: &[Complex64], k: usize| (f[k - 2] - f[k - 1] * 8.0 + f[k + 1] * 8.0 - f[k + 2]) / (12.0 * h);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 2..s.len() - 2 {
        let ds = d4(&s, k) / zdot[k];
        let da = d4(&a, k) / zdot[k];
        let first = 0.5 * ds * a[k];
        worst = worst.max((first + s[k] * da).norm());
        scale = scale.max(first.norm());
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}

/// Partial actions of an `m`-arc cover of the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialActions {
    /// `A_{j,j+1} = int zeta dz - i (Phi0(z_j) - Phi0(z_{j+1}))`.
    pub actions: Vec<Complex64>,
    /// `Phi0(z_j) - Phi0(z_{j+1})`.
    pub cobords: Vec<f64>,
    pub sum: Complex64,
}

/// Partial actions between the junctions `z_j` at flow times `j T / m`,
/// each integrated along the Hamiltonian flow.
pub fn partial_actions(sym: &SymbolDef, curve: &LevelCurve, m: usize) -> Result<PartialActions> {
    if m < 1 {
        return Err(Error::InvalidInput("need at least one arc".into()));
    }
    let n = curve.len();
    let f = |y: &[f64; 4]| {
        let (gx, gxi) = sym.grad(y[0], y[1]);
        let (vx, vxi) = (gxi, -gx);
        // zeta dz with zeta = (xi - i x)/sqrt 2, dz = (vx - i vxi)/sqrt 2
        let w = Complex64::new(y[1], -y[0]) * Complex64::new(vx, -vxi) * 0.5;
        [vx, vxi, w.re, w.im]
    };
    let opts = OdeOptions { rtol: 1e-13, atol: 1e-14, ..OdeOptions::default() };
    let mut actions = Vec::with_capacity(m);
    let mut cobords = Vec::with_capacity(m);
    for j in 0..m {
        let (x, xi) = curve.points[j * n / m];
        let t0 = curve.times[j * n / m];
        let t1 = if j + 1 == m { curve.period } else { curve.times[(j + 1) * n / m] };
        let out = integrate_to(&f, [x, xi, 0.0, 0.0], &[t1 - t0], 1e-3 * curve.period, &opts)
            .ok_or_else(|| Error::InvalidInput(format!("flow integration failed on arc {j}")))?;
        let y = out[0];
        let za = kappa0(x, xi).0;
        let zb = kappa0(y[0], y[1]).0;
        let cob = phi0(za) - phi0(zb);
        cobords.push(cob);
        actions.push(Complex64::new(y[2], y[3]) - Complex64::i() * cob);
    }
    let sum = actions.iter().sum();
    Ok(PartialActions { actions, cobords, sum })
}

/// Contour parameters of the truncated operator `P_{c,delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourParams {
    pub c: f64,
    /// Truncation radius as a fraction of the curve-image scale.
    pub delta_fraction: f64,
    pub angular: usize,
    /// Branch tube as a fraction of the curve-image scale.
    pub tube_fraction: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self { c: 800.0, delta_fraction: 0.3, angular: 48, tube_fraction: 0.5 }
    }
}

/// `<w> = (1 + |w|^2)^{1/2}`.
fn bracket(w: Complex64) -> f64 {
    (1.0 + w.norm_sqr()).sqrt()
}

/// `(P_{c,delta} u)(z) / u(z)` for `u = a0 exp(i phi / hbar)` on `branch`,
/// with `p` the Bargmann-side symbol `(z, zeta) -> p_Phi0`.
fn contour_ratio(
    branch: &EikonalBranch,
    p: &(dyn Fn(Complex64, Complex64) -> Complex64 + Sync),
    hbar: f64,
    c: f64,
    delta: f64,
    angular: usize,
    refine: usize,
) -> Result<Complex64> {
    let z = branch.base;
    let width = 0.25 * (hbar / (c + 0.5)).sqrt() / refine as f64;
    let cut = (80.0 * hbar / (c + 0.5)).sqrt().min(delta);
    let mut breaks = vec![0.0];
    let near = (cut / width).ceil() as usize;
    for k in 1..=near {
        breaks.push(cut * k as f64 / near as f64);
    }
    if delta > cut {
        let far = 8 * refine;
        for k in 1..=far {
            breaks.push(cut + (delta - cut) * k as f64 / far as f64);
        }
    }
    let rule = gauss_legendre(16);
    let sub = gauss_legendre(8);
    let na = angular * refine;
    let ratio: Result<Vec<Complex64>> = (0..na)
        .into_par_iter()
        .map(|k| {
            let th = 2.0 * PI * k as f64 / na as f64;
            let dir = Complex64::from_polar(1.0, th);
            let mut s = branch.start();
            let mut dphi = Complex64::new(0.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for win in breaks.windows(2) {
                let (ra, rb) = (win[0], win[1]);
                for (x, w) in rule.0.iter().zip(&rule.1) {
                    let r = ra + 0.5 * (x + 1.0) * (rb - ra);
                    let wpt = z + dir * r;
                    let (t, a) = branch.walk(s, wpt, &sub)?;
                    s = t;
                    dphi += a;
                    let d = z - wpt;
                    let br = bracket(d);
                    let theta = -Complex64::i() * ((z + wpt) * 0.5).conj() + Complex64::i() * c * d.conj() / br;
                    let dbar = -Complex64::i() * 0.5 - Complex64::i() * c / br
                        + Complex64::i() * c * d.norm_sqr() / (2.0 * br.powi(3));
                    let jac = 2.0 * Complex64::i() * dbar;
                    let expo = Complex64::i() * (theta * d + dphi) / hbar;
                    let amp = s.a0 / branch.base_a0;
                    acc += p((z + wpt) * 0.5, theta) * expo.exp() * amp * jac * (0.5 * w * (rb - ra) * r);
                }
            }
            Ok(acc)
        })
        .collect();
    let total: Complex64 = ratio?.iter().sum();
    Ok(total * (2.0 * PI / na as f64) / (2.0 * PI * hbar))
}

/// Residuals of the truncated operator on the WKB state at one curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResidual {
    pub z: Complex64,
    /// `(P_{c,delta} u)(z) / u(z) - lambda`.
    pub defect: Complex64,
    /// `|a0(z)|`.
    pub amplitude: f64,
}

/// Pointwise residuals at `points` equally spaced sample indices of the curve.
pub fn residual_points(sym: &SymbolDef, curve: &LevelCurve, hbar: f64, params: &ContourParams, points: usize) -> Result<Vec<PointResidual>> {
    residual_points_with(sym, curve, hbar, params, points, &|z, zeta| sym.eval_complex(z, zeta))
}

/// As [`residual_points`] with an explicit Bargmann-side operator symbol.
pub fn residual_points_with(
    sym: &SymbolDef,
    curve: &LevelCurve,
    hbar: f64,
    params: &ContourParams,
    points: usize,
    p: &(dyn Fn(Complex64, Complex64) -> Complex64 + Sync),
) -> Result<Vec<PointResidual>> {
    if !(hbar > 0.0 && params.c > 0.0 && params.delta_fraction > 0.0) || points == 0 || params.angular < 8 {
        return Err(Error::InvalidInput("hbar, c, delta must be positive; need points and >= 8 angles".into()));
    }
    let n = curve.len();
    let scale = curve.scale() / std::f64::consts::SQRT_2;
    let delta = params.delta_fraction * scale;
    let tube = params.tube_fraction * scale;
    if delta >= tube {
        return Err(Error::BranchLeftTube { z: format!("disc of radius {delta} exceeds tube {tube}") });
    }
    let mut out = Vec::with_capacity(points);
    for j in 0..points {
        let br = EikonalBranch::on_curve(sym, curve, j * n / points, tube)?;
        let coarse = contour_ratio(&br, p, hbar, params.c, delta, params.angular, 1)?;
        let fine = contour_ratio(&br, p, hbar, params.c, delta, params.angular, 2)?;
        let defect = fine - br.lambda;
        let floor = 1e-9 * br.lambda.norm().max(1.0);
        let change = (fine - coarse).norm();
        if change > 0.1 * defect.norm().max(floor) {
            return Err(Error::QuadratureUnresolved { change });
        }
        out.push(PointResidual { z: br.base, defect, amplitude: br.base_a0.norm() });
    }
    Ok(out)
}

/// `max_z |defect(z) - shift| |a0(z)| / max |a0|`; `shift = 0.1` gives the
/// off-energy control at `lambda + 0.1`.
pub fn weighted_residual(points: &[PointResidual], shift: f64) -> f64 {
    let amax = points.iter().map(|p| p.amplitude).fold(0.0, f64::max);
    points
        .iter()
        .map(|p| (p.defect - shift).norm() * p.amplitude / amax)
        .fold(0.0, f64::max)
}

/// Weighted residual of `(P_{c,delta} - lambda)(a0 e^{i phi/hbar})` over `points` curve points.
pub fn quasimode_residual(sym: &SymbolDef, curve: &LevelCurve, hbar: f64, params: &ContourParams, points: usize) -> Result<f64> {
    Ok(weighted_residual(&residual_points(sym, curve, hbar, params, points)?, 0.0))
}

pub const RESIDUAL_HEADER: &str = "hbar,max_residual\n";
