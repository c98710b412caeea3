//! Polynomial Hamiltonian symbols `p(x, xi)`, their holomorphic extension to
//! the Bargmann side and the standing-assumption checks (compact sublevel
//! sets, regular connected energy curves, ellipticity).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, TraceOptions};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// One monomial `coeff * x^deg_x * xi^deg_xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub deg_x: u32,
    pub deg_xi: u32,
}

impl Term {
    pub fn new(coeff: f64, deg_x: u32, deg_xi: u32) -> Self {
        Self { coeff, deg_x, deg_xi }
    }
}

/// Real-coefficient bivariate polynomial symbol.
///
/// Coefficients are held densely as `c[i][j]` for `x^i xi^j` so that both
/// real and complex evaluation run a nested Horner scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDef {
    name: String,
    terms: Vec<Term>,
    total_degree: u32,
    dense: Vec<Vec<f64>>,
}

impl SymbolDef {
    pub fn new(name: impl Into<String>, terms: Vec<Term>) -> Result<Self> {
        if terms.iter().any(|t| !t.coeff.is_finite()) {
            return Err(Error::InvalidSymbol("non-finite coefficient".into()));
        }
        let max_x = terms.iter().map(|t| t.deg_x).max().unwrap_or(0) as usize;
        let max_xi = terms.iter().map(|t| t.deg_xi).max().unwrap_or(0) as usize;
        let mut dense = vec![vec![0.0; max_xi + 1]; max_x + 1];
        for t in &terms {
            dense[t.deg_x as usize][t.deg_xi as usize] += t.coeff;
        }
        let mut merged = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    merged.push(Term::new(c, i as u32, j as u32));
                }
            }
        }
        if !merged.iter().any(|t| t.deg_x + t.deg_xi > 0) {
            return Err(Error::InvalidSymbol(
                "symbol needs a term of positive total degree".into(),
            ));
        }
        let total_degree = merged.iter().map(|t| t.deg_x + t.deg_xi).max().unwrap_or(0);
        Ok(Self {
            name: name.into(),
            terms: merged,
            total_degree,
            dense,
        })
    }

    /// `x^2 + xi^2`
    pub fn harmonic() -> Self {
        Self::new("harmonic", vec![Term::new(1.0, 2, 0), Term::new(1.0, 0, 2)]).unwrap()
    }

    /// `xi^2 + x^4`
    pub fn quartic() -> Self {
        Self::new("quartic", vec![Term::new(1.0, 0, 2), Term::new(1.0, 4, 0)]).unwrap()
    }

    /// `xi^2 + V(x)` with `V(x) = sum_k potential[k] x^k`.
    pub fn schrodinger(potential: &[f64]) -> Result<Self> {
        let mut terms = vec![Term::new(1.0, 0, 2)];
        for (k, &c) in potential.iter().enumerate() {
            if c != 0.0 {
                terms.push(Term::new(c, k as u32, 0));
            }
        }
        Self::new("schrodinger", terms)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn total_degree(&self) -> u32 {
        self.total_degree
    }

    /// Same symbol with `c` added to the constant term.
    pub fn shifted(&self, c: f64) -> Self {
        let mut terms = self.terms.clone();
        terms.push(Term::new(c, 0, 0));
        Self::new(self.name.clone(), terms).expect("shift keeps the symbol valid")
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        horner(&self.dense, x, xi)
    }

    /// Exact `(d_x p, d_xi p)`.
    pub fn grad(&self, x: f64, xi: f64) -> (f64, f64) {
        let (mut gx, mut gxi) = (0.0, 0.0);
        for t in &self.terms {
            if t.deg_x > 0 {
                gx += t.coeff * t.deg_x as f64 * x.powi(t.deg_x as i32 - 1) * xi.powi(t.deg_xi as i32);
            }
            if t.deg_xi > 0 {
                gxi += t.coeff * t.deg_xi as f64 * x.powi(t.deg_x as i32) * xi.powi(t.deg_xi as i32 - 1);
            }
        }
        (gx, gxi)
    }

    /// Exact Hessian `[[p_xx, p_xxi], [p_xxi, p_xixi]]`.
    pub fn hessian(&self, x: f64, xi: f64) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for t in &self.terms {
            let (a, b) = (t.deg_x as i32, t.deg_xi as i32);
            let c = t.coeff;
            if a >= 2 {
                h[0][0] += c * (a * (a - 1)) as f64 * x.powi(a - 2) * xi.powi(b);
            }
            if a >= 1 && b >= 1 {
                h[0][1] += c * (a * b) as f64 * x.powi(a - 1) * xi.powi(b - 1);
            }
            if b >= 2 {
                h[1][1] += c * (b * (b - 1)) as f64 * x.powi(a) * xi.powi(b - 2);
            }
        }
        h[1][0] = h[0][1];
        h
    }

    /// `p` at a complex point of `C^2` (holomorphic extension).
    pub fn eval_at(&self, x: Complex64, xi: Complex64) -> Complex64 {
        horner(&self.dense, x, xi)
    }

    /// Holomorphic partials `(d_x p, d_xi p)` at a complex point.
    pub fn grad_at(&self, x: Complex64, xi: Complex64) -> (Complex64, Complex64) {
        let (mut gx, mut gxi) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for t in &self.terms {
            let (a, b) = (t.deg_x as i32, t.deg_xi as i32);
            if a > 0 {
                gx += t.coeff * a as f64 * x.powi(a - 1) * xi.powi(b);
            }
            if b > 0 {
                gxi += t.coeff * b as f64 * x.powi(a) * xi.powi(b - 1);
            }
        }
        (gx, gxi)
    }

    /// `p_Phi0(z, zeta) = p((z + i zeta)/sqrt 2, (zeta + i z)/sqrt 2)`.
    pub fn eval_complex(&self, z: Complex64, zeta: Complex64) -> Complex64 {
        let (x, xi) = bargmann_point(z, zeta);
        self.eval_at(x, xi)
    }

    /// `d_zeta p_Phi0(z, zeta)`.
    pub fn dzeta_phi0(&self, z: Complex64, zeta: Complex64) -> Complex64 {
        let (x, xi) = bargmann_point(z, zeta);
        let (gx, gxi) = self.grad_at(x, xi);
        (Complex64::i() * gx + gxi) / SQRT_2
    }

    /// `d_z p_Phi0(z, zeta)`.
    pub fn dz_phi0(&self, z: Complex64, zeta: Complex64) -> Complex64 {
        let (x, xi) = bargmann_point(z, zeta);
        let (gx, gxi) = self.grad_at(x, xi);
        (gx + Complex64::i() * gxi) / SQRT_2
    }

    /// Order function `1 + sum |c| |x|^a |xi|^b` over the symbol's monomials.
    pub fn order_function(&self, x: f64, xi: f64) -> f64 {
        1.0 + self
            .terms
            .iter()
            .map(|t| t.coeff.abs() * x.abs().powi(t.deg_x as i32) * xi.abs().powi(t.deg_xi as i32))
            .sum::<f64>()
    }

    /// Split decomposition `g(xi) + V(x)` as coefficient lists, or `None` when
    /// a mixed monomial is present. The constant term goes to `V`.
    pub fn split_parts(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.terms.iter().any(|t| t.deg_x > 0 && t.deg_xi > 0) {
            return None;
        }
        let max_x = self.terms.iter().map(|t| t.deg_x).max().unwrap_or(0) as usize;
        let max_xi = self.terms.iter().map(|t| t.deg_xi).max().unwrap_or(0) as usize;
        let mut g = vec![0.0; max_xi + 1];
        let mut v = vec![0.0; max_x + 1];
        for t in &self.terms {
            if t.deg_xi > 0 {
                g[t.deg_xi as usize] += t.coeff;
            } else {
                v[t.deg_x as usize] += t.coeff;
            }
        }
        Some((g, v))
    }
}

fn horner<T>(dense: &[Vec<f64>], x: T, xi: T) -> T
where
    T: Copy + From<f64> + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    let mut acc = T::from(0.0);
    for row in dense.iter().rev() {
        let mut inner = T::from(0.0);
        for &c in row.iter().rev() {
            inner = inner * xi + T::from(c);
        }
        acc = acc * x + inner;
    }
    acc
}

/// Real phase-space point behind a Bargmann-side pair `(z, zeta)`.
pub fn bargmann_point(z: Complex64, zeta: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    ((z + i * zeta) / SQRT_2, (zeta + i * z) / SQRT_2)
}

/// `kappa0(x, xi) = ((x - i xi)/sqrt 2, (xi - i x)/sqrt 2)`, the map onto `Lambda_Phi0`.
pub fn kappa0(x: f64, xi: f64) -> (Complex64, Complex64) {
    (
        Complex64::new(x, -xi) / SQRT_2,
        Complex64::new(xi, -x) / SQRT_2,
    )
}

/// `Phi0(z) = |z|^2 / 2`.
pub fn phi0(z: Complex64) -> f64 {
    0.5 * z.norm_sqr()
}

/// Sampling plan for [`validate_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Half-width `R` of the bounding box `[-R, R]^2`.
    pub box_halfwidth: f64,
    /// Points per axis of each scan.
    pub resolution: usize,
    /// Scans coarser than this are refused.
    pub min_resolution: usize,
    /// Energies sampled across `[E1 - delta, E2 + delta]` for the curve checks.
    pub lambda_samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            box_halfwidth: 20.0,
            resolution: 201,
            min_resolution: 41,
            lambda_samples: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub xi: f64,
    pub lambda: Option<f64>,
    pub diagnostic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub h1_sublevel_compact: bool,
    pub h2_regular_connected: bool,
    /// Per-energy verdict of the curve checks.
    pub h2_by_lambda: Vec<(f64, bool)>,
    pub h3_elliptic: bool,
    pub witnesses: Vec<Witness>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.h1_sublevel_compact && self.h2_regular_connected && self.h3_elliptic
    }
}

const GRADIENT_FLOOR: f64 = 1e-6;
const ELLIPTIC_FLOOR: f64 = 1e-6;

pub fn validate_assumptions(
    sym: &SymbolDef,
    e1: f64,
    e2: f64,
    delta: f64,
    grid: &GridSpec,
) -> Result<AssumptionReport> {
    if !(e1 < e2) || !(delta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need E1 < E2 and delta > 0, got ({e1}, {e2}), delta = {delta}"
        )));
    }
    if grid.resolution < grid.min_resolution {
        return Err(Error::GridTooCoarse {
            resolution: grid.resolution,
            floor: grid.min_resolution,
        });
    }
    let lo = e1 - delta;
    let hi = e2 + delta;
    let mut witnesses = Vec::new();

    let scan = Scan::new(sym, -grid.box_halfwidth, grid.box_halfwidth, -grid.box_halfwidth, grid.box_halfwidth, grid.resolution);
    let h1 = check_compact(sym, &scan, hi, grid, &mut witnesses);

    let (h2, h2_by_lambda) = if h1 {
        check_regular_connected(sym, &scan, lo, hi, grid, &mut witnesses)
    } else {
        let w = Witness {
            x: 0.0,
            xi: 0.0,
            lambda: None,
            diagnostic: "curve checks skipped: sublevel set not compact".into(),
        };
        witnesses.push(w);
        (false, Vec::new())
    };

    let h3 = check_elliptic(sym, &scan, &mut witnesses);

    Ok(AssumptionReport {
        h1_sublevel_compact: h1,
        h2_regular_connected: h2,
        h2_by_lambda,
        h3_elliptic: h3,
        witnesses,
    })
}

struct Scan {
    x0: f64,
    xi0: f64,
    hx: f64,
    hxi: f64,
    n: usize,
    values: Vec<f64>,
}

impl Scan {
    fn new(sym: &SymbolDef, xa: f64, xb: f64, ya: f64, yb: f64, n: usize) -> Self {
        let hx = (xb - xa) / (n - 1) as f64;
        let hxi = (yb - ya) / (n - 1) as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(sym.eval(xa + i as f64 * hx, ya + j as f64 * hxi));
            }
        }
        Self { x0: xa, xi0: ya, hx, hxi, n, values }
    }

    fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.hx, self.xi0 + j as f64 * self.hxi)
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn boundary(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |k| [(0, k), (n - 1, k), (k, 0), (k, n - 1)])
    }

    /// Bounding box of grid points with `p <= level`, padded by two cells.
    fn sublevel_box(&self, level: f64) -> Option<(f64, f64, f64, f64)> {
        let mut bb: Option<(f64, f64, f64, f64)> = None;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.at(i, j) <= level {
                    let (x, xi) = self.point(i, j);
                    bb = Some(match bb {
                        None => (x, x, xi, xi),
                        Some((a, b, c, d)) => (a.min(x), b.max(x), c.min(xi), d.max(xi)),
                    });
                }
            }
        }
        bb.map(|(a, b, c, d)| {
            (a - 2.0 * self.hx, b + 2.0 * self.hx, c - 2.0 * self.hxi, d + 2.0 * self.hxi)
        })
    }
}

fn check_compact(sym: &SymbolDef, scan: &Scan, hi: f64, grid: &GridSpec, witnesses: &mut Vec<Witness>) -> bool {
    let mut ok = true;
    let min = scan.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > hi {
        ok = false;
        witnesses.push(Witness {
            x: 0.0,
            xi: 0.0,
            lambda: Some(hi),
            diagnostic: format!("sublevel set empty: min p on grid = {min}"),
        });
    }
    let mut worst: Option<(f64, f64, f64)> = None;
    for (i, j) in scan.boundary() {
        let (x, xi) = scan.point(i, j);
        let p = scan.at(i, j);
        let (gx, gxi) = sym.grad(x, xi);
        let radial = x * gx + xi * gxi;
        if (p <= hi || radial <= 0.0) && worst.is_none_or(|(_, _, w)| p < w) {
            worst = Some((x, xi, p));
        }
    }
    if let Some((x, xi, p)) = worst {
        ok = false;
        witnesses.push(Witness {
            x,
            xi,
            lambda: Some(hi),
            diagnostic: format!(
                "p = {p} on the boundary of [-{r}, {r}]^2 is not above E2 + delta or not growing outward",
                r = grid.box_halfwidth
            ),
        });
    }
    ok
}

fn check_regular_connected(
    sym: &SymbolDef,
    scan: &Scan,
    lo: f64,
    hi: f64,
    grid: &GridSpec,
    witnesses: &mut Vec<Witness>,
) -> (bool, Vec<(f64, bool)>) {
    let mut ok = true;
    let Some((xa, xb, ya, yb)) = scan.sublevel_box(hi) else {
        return (false, Vec::new());
    };
    let fine = Scan::new(sym, xa, xb, ya, yb, grid.resolution);

    // critical points with a critical value inside the window
    let mut critical: Vec<(f64, f64, f64)> = Vec::new();
    for (x, xi) in gradient_minima(sym, &fine) {
        if let Some((cx, cxi)) = newton_critical(sym, x, xi) {
            let (gx, gxi) = sym.grad(cx, cxi);
            let p = sym.eval(cx, cxi);
            if gx.hypot(gxi) < GRADIENT_FLOOR
                && p >= lo
                && p <= hi
                && !critical.iter().any(|&(a, b, _)| (a - cx).hypot(b - cxi) < 1e-6)
            {
                critical.push((cx, cxi, p));
            }
        }
    }
    for &(x, xi, p) in &critical {
        ok = false;
        witnesses.push(Witness {
            x,
            xi,
            lambda: Some(p),
            diagnostic: format!("critical point with value {p} inside the energy window"),
        });
    }

    let samples = grid.lambda_samples.max(2);
    let opts = TraceOptions::default();
    let mut by_lambda = Vec::with_capacity(samples);
    for k in 0..samples {
        let lambda = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        let crit_here = critical.iter().any(|&(_, _, p)| (p - lambda).abs() < 1e-9 * (1.0 + lambda.abs()));
        let mut good = !crit_here;
        match geometry::trace_level_curve_with(sym, lambda, &opts) {
            Err(e) => {
                good = false;
                witnesses.push(Witness {
                    x: f64::NAN,
                    xi: f64::NAN,
                    lambda: Some(lambda),
                    diagnostic: format!("tracing failed: {e}"),
                });
            }
            Ok(curve) => {
                let tol = 2.5 * fine.hx.hypot(fine.hxi);
                if let Some((x, xi)) = stray_crossing(&fine, lambda, &curve.points, tol) {
                    good = false;
                    witnesses.push(Witness {
                        x,
                        xi,
                        lambda: Some(lambda),
                        diagnostic: "level set has a component disjoint from the traced curve".into(),
                    });
                }
            }
        }
        ok &= good;
        by_lambda.push((lambda, good));
    }
    (ok, by_lambda)
}

fn gradient_minima(sym: &SymbolDef, scan: &Scan) -> Vec<(f64, f64)> {
    let n = scan.n;
    let g2: Vec<f64> = (0..n * n)
        .map(|k| {
            let (x, xi) = scan.point(k / n, k % n);
            let (a, b) = sym.grad(x, xi);
            a * a + b * b
        })
        .collect();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let c = g2[i * n + j];
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    (di == 0 && dj == 0) || c <= g2[(i as i64 + di) as usize * n + (j as i64 + dj) as usize]
                })
            });
            if is_min {
                out.push(scan.point(i, j));
            }
        }
    }
    out
}

fn newton_critical(sym: &SymbolDef, mut x: f64, mut xi: f64) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let (gx, gxi) = sym.grad(x, xi);
        if gx.hypot(gxi) < 1e-14 {
            break;
        }
        let h = sym.hessian(x, xi);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dx = (h[1][1] * gx - h[0][1] * gxi) / det;
        let dxi = (-h[1][0] * gx + h[0][0] * gxi) / det;
        x -= dx;
        xi -= dxi;
        if !x.is_finite() || !xi.is_finite() {
            return None;
        }
    }
    Some((x, xi))
}

/// First grid crossing of `p = lambda` farther than `tol` from the traced curve.
fn stray_crossing(scan: &Scan, lambda: f64, curve: &[(f64, f64)], tol: f64) -> Option<(f64, f64)> {
    let n = scan.n;
    for i in 0..n {
        for j in 0..n {
            let a = scan.at(i, j) - lambda;
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if ni >= n || nj >= n {
                    continue;
                }
                let b = scan.at(ni, nj) - lambda;
                if (a <= 0.0) != (b <= 0.0) {
                    let s = a / (a - b);
                    let (x0, y0) = scan.point(i, j);
                    let (x1, y1) = scan.point(ni, nj);
                    let (x, xi) = (x0 + s * (x1 - x0), y0 + s * (y1 - y0));
                    if geometry::distance_to_polyline(curve, x, xi) > tol {
                        return Some((x, xi));
                    }
                }
            }
        }
    }
    None
}

fn check_elliptic(sym: &SymbolDef, scan: &Scan, witnesses: &mut Vec<Witness>) -> bool {
    let min_p = scan.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let c = 1.0 + (-min_p).max(0.0);
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    let mut probe = |x: f64, xi: f64| {
        let ratio = (c + sym.eval(x, xi)) / sym.order_function(x, xi);
        if ratio < worst.0 {
            worst = (ratio, x, xi);
        }
    };
    for k in 0..scan.n * scan.n {
        let (x, xi) = scan.point(k / scan.n, k % scan.n);
        probe(x, xi);
    }
    let dirs = 64;
    for d in 0..dirs {
        let th = 2.0 * std::f64::consts::PI * d as f64 / dirs as f64;
        let (ct, st) = (th.cos(), th.sin());
        for e in 0..=40 {
            let r = 10f64.powf(e as f64 / 10.0);
            probe(r * ct, r * st);
        }
    }
    let ok = worst.0 >= ELLIPTIC_FLOOR;
    if !ok {
        witnesses.push(Witness {
            x: worst.1,
            xi: worst.2,
            lambda: None,
            diagnostic: format!("(C + p)/m = {:e} with C = {c}", worst.0),
        });
    }
    ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let h = SymbolDef::harmonic();
        let q = SymbolDef::quartic();
        assert_eq!(h.eval(1.0, 0.0), 1.0);
        assert_eq!(q.eval(0.0, 0.0), 0.0);
        assert_eq!(h.eval(1.0, 1.0), 2.0);
    }

    #[test]
    fn grad_examples() {
        assert_eq!(SymbolDef::harmonic().grad(1.0, 0.0), (2.0, 0.0));
        assert_eq!(SymbolDef::quartic().grad(1.0, 0.0), (4.0, 0.0));
    }

    #[test]
    fn harmonic_extension_is_two_i_z_zeta() {
        let h = SymbolDef::harmonic();
        for &(z, zeta) in &[(c(0.3, -1.2), c(2.0, 0.5)), (c(-1.0, 0.1), c(0.0, 3.0))] {
            let expect = 2.0 * Complex64::i() * z * zeta;
            assert!((h.eval_complex(z, zeta) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn quartic_on_lambda_phi0() {
        let q = SymbolDef::quartic();
        let (z, zeta) = kappa0(1.0, 0.0);
        assert!((z - c(1.0 / SQRT_2, 0.0)).norm() < 1e-15);
        assert!((zeta - c(0.0, -1.0 / SQRT_2)).norm() < 1e-15);
        assert!((q.eval_complex(z, zeta) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn dzeta_matches_finite_difference() {
        let q = SymbolDef::new("mixed", vec![Term::new(1.0, 0, 2), Term::new(1.0, 4, 0), Term::new(0.3, 1, 1)]).unwrap();
        let (z, zeta) = (c(0.4, -0.2), c(0.1, 0.7));
        let h = 1e-6;
        let fd = (q.eval_complex(z, zeta + h) - q.eval_complex(z, zeta - h)) / (2.0 * h);
        assert!((fd - q.dzeta_phi0(z, zeta)).norm() < 1e-8);
        let fdz = (q.eval_complex(z + h, zeta) - q.eval_complex(z - h, zeta)) / (2.0 * h);
        assert!((fdz - q.dz_phi0(z, zeta)).norm() < 1e-8);
    }

    #[test]
    fn rejects_bad_symbols() {
        assert!(SymbolDef::new("c", vec![Term::new(2.0, 0, 0)]).is_err());
        assert!(SymbolDef::new("nan", vec![Term::new(f64::NAN, 2, 0)]).is_err());
    }

    #[test]
    fn split_parts_detects_mixed_terms() {
        assert!(SymbolDef::harmonic().split_parts().is_some());
        let mixed = SymbolDef::new("m", vec![Term::new(1.0, 1, 1), Term::new(1.0, 2, 0)]).unwrap();
        assert!(mixed.split_parts().is_none());
    }

    #[test]
    fn harmonic_passes_all_assumptions() {
        let rep = validate_assumptions(&SymbolDef::harmonic(), 0.5, 2.0, 0.1, &GridSpec::default()).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert!(rep.witnesses.is_empty());
    }

    #[test]
    fn saddle_fails_regularity_near_origin() {
        let saddle = SymbolDef::new("saddle", vec![Term::new(1.0, 0, 2), Term::new(-1.0, 2, 0)]).unwrap();
        let rep = validate_assumptions(&saddle, -0.5, 0.5, 0.1, &GridSpec::default()).unwrap();
        assert!(!rep.h2_regular_connected);
        assert!(!rep.h1_sublevel_compact);
        assert!(!rep.h3_elliptic);
        // the saddle point itself is reported once the curve checks run on a compact window
        let grid = GridSpec { box_halfwidth: 2.0, ..GridSpec::default() };
        let scan = Scan::new(&saddle, -2.0, 2.0, -2.0, 2.0, grid.resolution);
        let mut w = Vec::new();
        let (ok, _) = check_regular_connected(&saddle, &scan, -0.6, 0.6, &grid, &mut w);
        assert!(!ok);
        assert!(w.iter().any(|w| w.x.hypot(w.xi) < 1e-6 && w.diagnostic.contains("critical")));
    }

    #[test]
    fn double_well_fails_connectedness() {
        let dw = SymbolDef::schrodinger(&[1.0, 0.0, -2.0, 0.0, 1.0]).unwrap();
        let rep = validate_assumptions(&dw, 0.1, 0.5, 0.05, &GridSpec::default()).unwrap();
        assert!(rep.h1_sublevel_compact);
        assert!(rep.h3_elliptic);
        assert!(!rep.h2_regular_connected);
        assert!(rep.witnesses.iter().any(|w| w.diagnostic.contains("disjoint")));
    }

    #[test]
    fn coarse_grid_rejected() {
        let grid = GridSpec { resolution: 11, ..GridSpec::default() };
        let err = validate_assumptions(&SymbolDef::harmonic(), 0.5, 2.0, 0.1, &grid).unwrap_err();
        assert_eq!(err.code(), "GRID_TOO_COARSE");
    }

    #[test]
    fn false_flags_carry_witnesses() {
        let saddle = SymbolDef::new("saddle", vec![Term::new(1.0, 0, 2), Term::new(-1.0, 2, 0)]).unwrap();
        let rep = validate_assumptions(&saddle, -0.5, 0.5, 0.1, &GridSpec::default()).unwrap();
        assert!(!rep.witnesses.is_empty());
    }

    #[test]
    fn validation_is_deterministic() {
        let q = SymbolDef::quartic();
        let a = validate_assumptions(&q, 0.5, 2.0, 0.1, &GridSpec::default()).unwrap();
        let b = validate_assumptions(&q, 0.5, 2.0, 0.1, &GridSpec::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.all_pass(), "{a:?}");
    }
}
