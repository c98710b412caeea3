//! Closed energy curves, periods, actions and the action profile.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::symbol::SymbolDef;

/// Tracing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Integrator absolute and relative tolerance.
    pub tol: f64,
    /// Uniform-in-time samples per period.
    pub samples: usize,
    pub max_time: f64,
    pub gradient_floor: f64,
    /// Half-width of the box searched for the minimizer of `p`.
    pub seed_box: f64,
    pub seed_grid: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            samples: 1024,
            max_time: 1e3,
            gradient_floor: 1e-6,
            seed_box: 20.0,
            seed_grid: 81,
        }
    }
}

/// One period of the Hamiltonian flow on `{p = lambda}`, sampled uniformly
/// in time. `points[0]` and `points[samples]` are the same point up to the
/// closure error.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurve {
    pub lambda: f64,
    pub points: Vec<(f64, f64)>,
    /// Hamiltonian vector field at each point.
    pub velocities: Vec<(f64, f64)>,
    pub times: Vec<f64>,
    pub period: f64,
    /// Always `+1`: samples follow the Hamiltonian flow.
    pub orientation: i32,
    /// Point the seed ray starts from (minimizer of `p`).
    pub origin: (f64, f64),
    /// Unit direction of the seed ray.
    pub ray: (f64, f64),
}

impl LevelCurve {
    /// Number of distinct samples (the closing point excluded).
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dt(&self) -> f64 {
        self.period / self.len() as f64
    }

    /// Shoelace area of the sample polygon; negative for clockwise flow.
    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        let mut s = 0.0;
        for k in 0..n {
            let (x0, y0) = self.points[k];
            let (x1, y1) = self.points[(k + 1) % n];
            s += x0 * y1 - x1 * y0;
        }
        0.5 * s
    }

    pub fn closure_error(&self) -> f64 {
        let (a, b) = (self.points[0], self.points[self.len()]);
        (a.0 - b.0).hypot(a.1 - b.1)
    }

    pub fn max_energy_drift(&self, sym: &SymbolDef) -> f64 {
        self.points
            .iter()
            .map(|&(x, xi)| (sym.eval(x, xi) - self.lambda).abs())
            .fold(0.0, f64::max)
    }

    /// Largest distance of a sample from the seed origin.
    pub fn scale(&self) -> f64 {
        let (mx, mxi) = self.origin;
        self.points
            .iter()
            .map(|&(x, xi)| (x - mx).hypot(xi - mxi))
            .fold(0.0, f64::max)
    }
}

fn flow(sym: &SymbolDef) -> impl Fn(&[f64; 2]) -> [f64; 2] + '_ {
    move |y: &[f64; 2]| {
        let (gx, gxi) = sym.grad(y[0], y[1]);
        [gxi, -gx]
    }
}

pub fn trace_level_curve(sym: &SymbolDef, lambda: f64, tol: f64) -> Result<LevelCurve> {
    let opts = TraceOptions { tol, ..TraceOptions::default() };
    trace_level_curve_with(sym, lambda, &opts)
}

pub fn trace_level_curve_with(sym: &SymbolDef, lambda: f64, opts: &TraceOptions) -> Result<LevelCurve> {
    let origin = find_minimizer(sym, opts);
    let (seed, ray) = find_seed(sym, lambda, origin)?;
    let (gx, gxi) = sym.grad(seed.0, seed.1);
    let norm = gx.hypot(gxi);
    if norm < opts.gradient_floor {
        return Err(Error::GradientVanishes { x: seed.0, xi: seed.1, norm });
    }
    let f = flow(sym);
    let v0 = [gxi, -gx];
    let ode_opts = OdeOptions {
        rtol: opts.tol,
        atol: opts.tol,
        ..OdeOptions::default()
    };
    let section = |y: &[f64; 2]| (y[0] - seed.0) * v0[0] + (y[1] - seed.1) * v0[1];
    let dist = |y: &[f64; 2]| (y[0] - seed.0).hypot(y[1] - seed.1);
    let size = (seed.0 - origin.0).hypot(seed.1 - origin.1).max(1e-300);
    let h0 = 1e-3 * size / norm;

    let mut dmax: f64 = 0.0;
    let mut failure: Option<Error> = None;
    let mut event: Option<(f64, [f64; 2], f64)> = None;
    let res = ode::integrate(&f, [seed.0, seed.1], opts.max_time, h0, &ode_opts, |t0, y0, t1, y1| {
        let (ax, axi) = sym.grad(y1[0], y1[1]);
        let n = ax.hypot(axi);
        if n < opts.gradient_floor {
            failure = Some(Error::GradientVanishes { x: y1[0], xi: y1[1], norm: n });
            return false;
        }
        dmax = dmax.max(dist(y1));
        if t0 > 0.0 && section(y0) < 0.0 && section(y1) >= 0.0 && dist(y1) < 0.25 * dmax {
            event = Some((t0, *y0, t1 - t0));
            return false;
        }
        true
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let Some((t0, y0, h)) = event else {
        let _ = res;
        return Err(Error::NoClosure { lambda, max_time: opts.max_time });
    };
    // bisection on the section inside the crossing step
    let (mut a, mut b) = (0.0, h);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (ym, _) = ode::dp_step(&f, &y0, m);
        if section(&ym) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let period = t0 + 0.5 * (a + b);

    let n = opts.samples.max(8);
    let times: Vec<f64> = (0..=n).map(|k| period * k as f64 / n as f64).collect();
    let states = ode::integrate_to(&f, [seed.0, seed.1], &times, h0, &ode_opts)
        .ok_or(Error::NoClosure { lambda, max_time: opts.max_time })?;
    let points: Vec<(f64, f64)> = states.iter().map(|y| (y[0], y[1])).collect();
    let velocities = points
        .iter()
        .map(|&(x, xi)| {
            let (gx, gxi) = sym.grad(x, xi);
            (gxi, -gx)
        })
        .collect();
    let curve = LevelCurve {
        lambda,
        points,
        velocities,
        times,
        period,
        orientation: 1,
        origin,
        ray,
    };
    if curve.closure_error() > 1e-6 * (1.0 + curve.scale()) {
        return Err(Error::NoClosure { lambda, max_time: opts.max_time });
    }
    Ok(curve)
}

/// Grid minimizer of `p` followed by successive zooms.
fn find_minimizer(sym: &SymbolDef, opts: &TraceOptions) -> (f64, f64) {
    let n = opts.seed_grid.max(5);
    let r = opts.seed_box;
    let h = 2.0 * r / (n - 1) as f64;
    let mut best = (0.0, 0.0);
    let mut best_p = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let (x, xi) = (-r + i as f64 * h, -r + j as f64 * h);
            let p = sym.eval(x, xi);
            if p < best_p {
                best_p = p;
                best = (x, xi);
            }
        }
    }
    let mut w = h;
    for _ in 0..60 {
        let c = best;
        for i in -10i32..=10 {
            for j in -10i32..=10 {
                let (x, xi) = (c.0 + i as f64 * w / 10.0, c.1 + j as f64 * w / 10.0);
                let p = sym.eval(x, xi);
                if p < best_p {
                    best_p = p;
                    best = (x, xi);
                }
            }
        }
        w *= 0.3;
    }
    best
}

/// First crossing of `p = lambda` along a ray from `origin` (+x first, then
/// the other compass directions).
fn find_seed(sym: &SymbolDef, lambda: f64, origin: (f64, f64)) -> Result<((f64, f64), (f64, f64))> {
    if sym.eval(origin.0, origin.1) >= lambda {
        return Err(Error::NoSeed { lambda });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let dirs = [(1.0, 0.0), (s, s), (0.0, 1.0), (-s, s), (-1.0, 0.0), (-s, -s), (0.0, -1.0), (s, -s)];
    for &(dx, dxi) in &dirs {
        let g = |r: f64| sym.eval(origin.0 + r * dx, origin.1 + r * dxi) - lambda;
        let mut lo = 0.0;
        let mut hi = 1e-3;
        let mut found = false;
        for _ in 0..80 {
            if g(hi) > 0.0 {
                found = true;
                break;
            }
            lo = hi;
            hi *= 1.5;
            if hi > 1e8 {
                break;
            }
        }
        if !found {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if g(m) > 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        let r = if g(lo).abs() < g(hi).abs() { lo } else { hi };
        return Ok(((origin.0 + r * dx, origin.1 + r * dxi), (dx, dxi)));
    }
    Err(Error::NoSeed { lambda })
}

/// `|oint xi dx|` by the periodic trapezoid rule.
pub fn action(curve: &LevelCurve) -> f64 {
    let n = curve.len();
    let s: f64 = (0..n).map(|k| curve.points[k].1 * curve.velocities[k].0).sum();
    (s * curve.dt()).abs()
}

/// `oint zeta dz` over the image of the curve under `kappa0`.
pub fn complex_action(curve: &LevelCurve) -> Complex64 {
    let n = curve.len();
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let (x, xi) = curve.points[k];
        let (vx, vxi) = curve.velocities[k];
        let zeta = Complex64::new(xi, -x);
        let dz = Complex64::new(vx, -vxi);
        s += zeta * dz;
    }
    s * 0.5 * curve.dt()
}

/// Euclidean distance from `(x, xi)` to the closed polyline through `points`.
pub fn distance_to_polyline(points: &[(f64, f64)], x: f64, xi: f64) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for k in 0..n {
        let (ax, ay) = points[k];
        let (bx, by) = points[(k + 1) % n];
        let (ex, ey) = (bx - ax, by - ay);
        let l2 = ex * ex + ey * ey;
        let t = if l2 > 0.0 {
            (((x - ax) * ex + (xi - ay) * ey) / l2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        best = best.min((x - ax - t * ex).hypot(xi - ay - t * ey));
    }
    best
}

/// Tabulated `lambda -> A(lambda)` with `A' = T` and a shape-preserving
/// cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProfile {
    pub lambdas: Vec<f64>,
    pub actions: Vec<f64>,
    pub periods: Vec<f64>,
    slopes: Vec<f64>,
}

impl ActionProfile {
    pub fn from_table(lambdas: Vec<f64>, actions: Vec<f64>, periods: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != actions.len() || lambdas.len() != periods.len() {
            return Err(Error::InvalidInput("profile table sizes differ or are empty".into()));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("lambda grid must be strictly increasing".into()));
        }
        for k in 1..lambdas.len() {
            if actions[k] <= actions[k - 1] {
                return Err(Error::NonMonotone { lambda: lambdas[k] });
            }
        }
        let mut slopes = periods.clone();
        for k in 0..lambdas.len().saturating_sub(1) {
            let secant = (actions[k + 1] - actions[k]) / (lambdas[k + 1] - lambdas[k]);
            let a = slopes[k] / secant;
            let b = slopes[k + 1] / secant;
            let r2 = a * a + b * b;
            if a < 0.0 || b < 0.0 {
                slopes[k] = slopes[k].max(0.0);
                slopes[k + 1] = slopes[k + 1].max(0.0);
            } else if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                slopes[k] = tau * a * secant;
                slopes[k + 1] = tau * b * secant;
            }
        }
        Ok(Self { lambdas, actions, periods, slopes })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        (self.lambdas[0], *self.lambdas.last().unwrap())
    }

    pub fn action_range(&self) -> (f64, f64) {
        (self.actions[0], *self.actions.last().unwrap())
    }

    fn interval(&self, lambda: f64) -> Result<usize> {
        let (lo, hi) = self.lambda_range();
        if !(lambda >= lo && lambda <= hi) {
            return Err(Error::OutOfRange { value: lambda, lo, hi });
        }
        let k = self.lambdas.partition_point(|&l| l <= lambda);
        Ok(k.saturating_sub(1).min(self.len().saturating_sub(2)))
    }

    fn hermite(&self, k: usize, lambda: f64) -> (f64, f64) {
        let (x0, x1) = (self.lambdas[k], self.lambdas[k + 1]);
        let h = x1 - x0;
        let t = (lambda - x0) / h;
        let (y0, y1) = (self.actions[k], self.actions[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1;
        (v, d / h)
    }

    /// Interpolated `A(lambda)`.
    pub fn action_at(&self, lambda: f64) -> Result<f64> {
        if self.len() == 1 {
            return if lambda == self.lambdas[0] {
                Ok(self.actions[0])
            } else {
                Err(Error::OutOfRange { value: lambda, lo: self.lambdas[0], hi: self.lambdas[0] })
            };
        }
        let k = self.interval(lambda)?;
        Ok(self.hermite(k, lambda).0)
    }

    /// Derivative of the interpolant, an approximation of `T(lambda)`.
    pub fn period_at(&self, lambda: f64) -> Result<f64> {
        if self.len() == 1 {
            return if lambda == self.lambdas[0] {
                Ok(self.periods[0])
            } else {
                Err(Error::OutOfRange { value: lambda, lo: self.lambdas[0], hi: self.lambdas[0] })
            };
        }
        let k = self.interval(lambda)?;
        Ok(self.hermite(k, lambda).1)
    }

    /// `A^{-1}(I)` on the interpolant.
    pub fn inverse(&self, action: f64) -> Result<f64> {
        let (lo, hi) = self.action_range();
        let slack = 1e-12 * (lo.abs() + hi.abs());
        if !(action >= lo - slack && action <= hi + slack) {
            return Err(Error::OutOfRange { value: action, lo, hi });
        }
        let action = action.clamp(lo, hi);
        if let Some(k) = self.actions.iter().position(|&a| a == action) {
            return Ok(self.lambdas[k]);
        }
        if self.len() == 1 {
            return Err(Error::OutOfRange { value: action, lo, hi });
        }
        let k = (self.actions.partition_point(|&a| a <= action) - 1).min(self.len() - 2);
        let (mut a, mut b) = (self.lambdas[k], self.lambdas[k + 1]);
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let (v, d) = self.hermite(k, x);
            let r = v - action;
            if r.abs() <= 1e-14 * (1.0 + action.abs()) {
                break;
            }
            if r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let nx = x - r / d;
            x = if d > 0.0 && nx > a && nx < b { nx } else { 0.5 * (a + b) };
            if b - a <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                break;
            }
        }
        Ok(x)
    }

    /// CSV with header `lambda,action,period`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,action,period\n");
        for k in 0..self.len() {
            s.push_str(&format!(
                "{},{},{}\n",
                crate::fmt_g17(self.lambdas[k]),
                crate::fmt_g17(self.actions[k]),
                crate::fmt_g17(self.periods[k])
            ));
        }
        s
    }
}

pub fn action_profile(sym: &SymbolDef, lambda_grid: &[f64], tol: f64) -> Result<ActionProfile> {
    let opts = TraceOptions { tol, ..TraceOptions::default() };
    action_profile_with(sym, lambda_grid, &opts)
}

pub fn action_profile_with(sym: &SymbolDef, lambda_grid: &[f64], opts: &TraceOptions) -> Result<ActionProfile> {
    if lambda_grid.is_empty() || lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be non-empty and strictly increasing".into()));
    }
    let rows: Vec<Result<(f64, f64)>> = lambda_grid
        .par_iter()
        .map(|&l| {
            trace_level_curve_with(sym, l, opts)
                .map(|c| (action(&c), c.period))
                .map_err(|e| Error::TraceAt { lambda: l, source: Box::new(e) })
        })
        .collect();
    let mut actions = Vec::with_capacity(rows.len());
    let mut periods = Vec::with_capacity(rows.len());
    for r in rows {
        let (a, t) = r?;
        actions.push(a);
        periods.push(t);
    }
    ActionProfile::from_table(lambda_grid.to_vec(), actions, periods)
}

/// `A'(lambda)` by a centered difference of traced actions with step `h`.
pub fn action_derivative(sym: &SymbolDef, lambda: f64, h: f64, opts: &TraceOptions) -> Result<f64> {
    let a = action(&trace_level_curve_with(sym, lambda + h, opts)?);
    let b = action(&trace_level_curve_with(sym, lambda - h, opts)?);
    Ok((a - b) / (2.0 * h))
}

/// Largest `|det J - 1|` of `(x, xi) -> (theta, A(p))` near the curve, with
/// `theta` the normalized flow time since the seed ray.
pub fn action_angle_check(sym: &SymbolDef, curve: &LevelCurve) -> Result<f64> {
    action_angle_defect(sym, curve, &|e| {
        Ok(action(&trace_level_curve_with(sym, e, &TraceOptions::default())?))
    })
}

/// As [`action_angle_check`] with `A` replaced by an arbitrary energy coordinate.
pub fn action_angle_defect(
    sym: &SymbolDef,
    curve: &LevelCurve,
    coordinate: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<f64> {
    let n = curve.len();
    let h = 1e-5 * curve.scale();
    let probes: Vec<usize> = (0..16)
        .map(|k| (k * n) / 16 + n / 32)
        .filter(|&i| {
            let th = curve.times[i] / curve.period;
            th > 0.05 && th < 0.95
        })
        .collect();
    let dets: Vec<Result<f64>> = probes
        .par_iter()
        .map(|&i| {
            let (x, xi) = curve.points[i];
            let map = |x: f64, xi: f64| -> Result<(f64, f64)> {
                let e = sym.eval(x, xi);
                let th = angle(sym, curve, x, xi, e)?;
                Ok((th, coordinate(e)?))
            };
            let (txp, axp) = map(x + h, xi)?;
            let (txm, axm) = map(x - h, xi)?;
            let (typ, ayp) = map(x, xi + h)?;
            let (tym, aym) = map(x, xi - h)?;
            let (tx, ax) = ((txp - txm) / (2.0 * h), (axp - axm) / (2.0 * h));
            let (ty, ay) = ((typ - tym) / (2.0 * h), (ayp - aym) / (2.0 * h));
            Ok(tx * ay - ty * ax)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for d in dets {
        worst = worst.max((d? - 1.0).abs());
    }
    Ok(worst)
}

/// Normalized backward flow time from `(x, xi)` to the seed ray of `curve`.
fn angle(sym: &SymbolDef, curve: &LevelCurve, x: f64, xi: f64, energy: f64) -> Result<f64> {
    let period = trace_level_curve_with(sym, energy, &TraceOptions::default())?.period;
    let (mx, mxi) = curve.origin;
    let (dx, dxi) = curve.ray;
    let f = flow(sym);
    let back = |y: &[f64; 2]| {
        let v = f(y);
        [-v[0], -v[1]]
    };
    let cross = |y: &[f64; 2]| dx * (y[1] - mxi) - dxi * (y[0] - mx);
    let along = |y: &[f64; 2]| dx * (y[0] - mx) + dxi * (y[1] - mxi);
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-12, ..OdeOptions::default() };
    let mut hit: Option<(f64, [f64; 2], f64)> = None;
    ode::integrate(&back, [x, xi], 2.0 * period, 1e-3 * period, &opts, |t0, y0, t1, y1| {
        if (cross(y0) > 0.0) != (cross(y1) > 0.0) && along(y1) > 0.0 {
            hit = Some((t0, *y0, t1 - t0));
            return false;
        }
        true
    });
    let (t0, y0, step) = hit.ok_or(Error::NoClosure { lambda: energy, max_time: 2.0 * period })?;
    let s0 = cross(&y0) > 0.0;
    let (mut a, mut b) = (0.0, step);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (ym, _) = ode::dp_step(&back, &y0, m);
        if (cross(&ym) > 0.0) == s0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((t0 + 0.5 * (a + b)) / period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_unit_circle() {
        let c = trace_level_curve(&SymbolDef::harmonic(), 1.0, 1e-12).unwrap();
        assert!((c.period - PI).abs() < 1e-9);
        for &(x, xi) in &c.points {
            assert!((x.hypot(xi) - 1.0).abs() < 1e-9);
        }
        assert!((action(&c) - PI).abs() < 1e-9);
        assert_eq!(c.times.len(), c.points.len());
        assert!((c.times.last().unwrap() - c.period).abs() < 1e-15);
    }

    #[test]
    fn harmonic_radius_two() {
        let c = trace_level_curve(&SymbolDef::harmonic(), 4.0, 1e-12).unwrap();
        assert!((c.period - PI).abs() < 1e-9);
        assert!((action(&c) - 4.0 * PI).abs() < 1e-8);
        assert!(c.closure_error() < 1e-9);
    }

    #[test]
    fn quartic_period_and_action() {
        // 2 int_0^1 (1-x^4)^{-1/2} dx and 4 int_0^1 sqrt(1-x^4) dx
        let c = trace_level_curve(&SymbolDef::quartic(), 1.0, 1e-12).unwrap();
        assert!((c.period - 2.622_057_554_292_119).abs() < 1e-8, "{}", c.period);
        assert!((action(&c) - 3.496_076_739_056_16).abs() < 1e-8, "{}", action(&c));
        assert!(c.max_energy_drift(&SymbolDef::quartic()) < 1e-9 * 2.0);
    }

    #[test]
    fn complex_action_is_real() {
        for sym in [SymbolDef::harmonic(), SymbolDef::quartic()] {
            let c = trace_level_curve(&sym, 1.0, 1e-12).unwrap();
            let a = action(&c);
            let z = complex_action(&c);
            assert!((z.re - a).abs() <= 1e-8 * a);
            assert!(z.im.abs() <= 1e-8 * a);
        }
    }

    #[test]
    fn harmonic_profile_and_inverse() {
        let p = action_profile(&SymbolDef::harmonic(), &[0.5, 1.0, 1.5, 2.0], 1e-12).unwrap();
        for (k, &a) in p.actions.iter().enumerate() {
            assert!((a - PI * p.lambdas[k]).abs() < 1e-8);
            assert!((p.periods[k] - PI).abs() < 1e-9);
        }
        assert!((p.inverse(PI).unwrap() - 1.0).abs() < 1e-9);
        assert!((p.inverse(2.0 * PI).unwrap() - 2.0).abs() < 1e-9);
        let a1 = p.actions[1];
        assert_eq!(p.inverse(a1).unwrap(), 1.0);
        assert_eq!(p.inverse(100.0).unwrap_err().code(), "OUT_OF_RANGE");
    }

    #[test]
    fn quartic_scaling_law() {
        let grid: Vec<f64> = (0..6).map(|k| 0.5 + 0.3 * k as f64).collect();
        let p = action_profile(&SymbolDef::quartic(), &grid, 1e-12).unwrap();
        let c0 = p.actions[0] / p.lambdas[0].powf(0.75);
        for k in 1..p.len() {
            let ck = p.actions[k] / p.lambdas[k].powf(0.75);
            assert!((ck - c0).abs() <= 1e-6 * c0);
        }
    }

    #[test]
    fn singleton_profile() {
        let p = action_profile(&SymbolDef::harmonic(), &[1.0], 1e-12).unwrap();
        assert_eq!(p.inverse(p.actions[0]).unwrap(), 1.0);
        assert!(p.inverse(p.actions[0] + 0.1).is_err());
    }

    #[test]
    fn non_monotone_table_rejected() {
        let e = ActionProfile::from_table(vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 1.0]).unwrap_err();
        assert_eq!(e.code(), "NON_MONOTONE");
    }

    #[test]
    fn derivative_matches_period() {
        let o = TraceOptions::default();
        for sym in [SymbolDef::harmonic(), SymbolDef::quartic()] {
            let t = trace_level_curve_with(&sym, 1.3, &o).unwrap().period;
            let d = action_derivative(&sym, 1.3, 1e-3, &o).unwrap();
            assert!((d - t).abs() <= 1e-6 * t);
        }
    }

    #[test]
    fn no_seed_below_minimum() {
        let e = trace_level_curve(&SymbolDef::harmonic(), -1.0, 1e-12).unwrap_err();
        assert_eq!(e.code(), "NO_SEED");
    }

    #[test]
    fn orientation_consistent() {
        let sym = SymbolDef::quartic();
        let s: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&l| trace_level_curve(&sym, l, 1e-12).unwrap().signed_area().signum())
            .collect();
        assert!(s.iter().all(|&v| v == s[0]));
    }

    #[test]
    fn action_angle_defects() {
        let h = SymbolDef::harmonic();
        let c = trace_level_curve(&h, 1.0, 1e-12).unwrap();
        assert!(action_angle_check(&h, &c).unwrap() <= 1e-4);
        let control = action_angle_defect(&h, &c, &|e| Ok(e)).unwrap();
        assert!((control - (1.0 - 1.0 / PI)).abs() < 1e-3);
        let q = SymbolDef::quartic();
        let c = trace_level_curve(&q, 1.0, 1e-12).unwrap();
        assert!(action_angle_check(&q, &c).unwrap() <= 1e-3);
    }

    #[test]
    fn csv_header() {
        let p = action_profile(&SymbolDef::harmonic(), &[1.0, 2.0], 1e-12).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("lambda,action,period\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
