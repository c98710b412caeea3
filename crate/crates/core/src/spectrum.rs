//! Reference eigenvalues of the Weyl-quantized operator: a Fourier
//! pseudospectral discretization for split symbols, a Hermite–Galerkin
//! matrix for general polynomial symbols, and a cyclic Jacobi eigensolver.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt_g17;
use crate::symbol::SymbolDef;

/// Default Jacobi stopping tolerance, relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-15;
pub const MAX_SWEEPS: usize = 100;
/// Largest asymmetry accepted by the eigensolver.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Eigenvalue shift allowed between a resolution and its refinement.
pub const CERTIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pseudospectral,
    HermiteGalerkin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSpec {
    pub method: Method,
    /// Periodic box `[-L, L)` of the pseudospectral grid.
    pub box_halfwidth: f64,
    /// Pseudospectral grid size; a power of two.
    pub n: usize,
    /// Hermite basis size.
    pub m: usize,
    pub hbar: f64,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        Self { method: Method::Pseudospectral, box_halfwidth: 12.0, n: 512, m: 120, hbar: 0.1 }
    }
}

impl DiscretizationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {}", self.hbar)));
        }
        match self.method {
            Method::Pseudospectral => {
                if self.n < 64 || !self.n.is_power_of_two() {
                    return Err(Error::InvalidInput(format!("grid size {} must be a power of two >= 64", self.n)));
                }
                if !(self.box_halfwidth > 0.0) {
                    return Err(Error::InvalidInput("box half-width must be positive".into()));
                }
            }
            Method::HermiteGalerkin => {
                if self.m < 16 || self.m > 200 {
                    return Err(Error::InvalidInput(format!("basis size {} outside [16, 200]", self.m)));
                }
            }
        }
        Ok(())
    }

    /// The next resolution used for certification: `2N`, or `M + 32`.
    pub fn refined(&self) -> Self {
        match self.method {
            Method::Pseudospectral => Self { n: 2 * self.n, ..*self },
            Method::HermiteGalerkin => Self { m: self.m + 32, ..*self },
        }
    }
}

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                d = d.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        d
    }
}

/// Grid `x_j = -L + j 2L/N`.
pub fn grid(spec: &DiscretizationSpec) -> Vec<f64> {
    let h = 2.0 * spec.box_halfwidth / spec.n as f64;
    (0..spec.n).map(|j| -spec.box_halfwidth + j as f64 * h).collect()
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn split(sym: &SymbolDef) -> Result<(Vec<f64>, Vec<f64>)> {
    let (g, v) = sym.split_parts().ok_or(Error::NotSplit)?;
    if g.iter().enumerate().any(|(k, &c)| k % 2 == 1 && c != 0.0) {
        return Err(Error::KineticNotEven);
    }
    Ok((g, v))
}

/// `g(hbar D)` in the periodic Fourier frame plus `V` on the grid; real
/// symmetric because `g` is even.
pub fn pseudospectral_matrix(sym: &SymbolDef, spec: &DiscretizationSpec) -> Result<SymMatrix> {
    spec.validate()?;
    let (g, v) = split(sym)?;
    let n = spec.n;
    let k0 = PI / spec.box_halfwidth;
    let gk: Vec<f64> = (0..n)
        .map(|j| {
            let kappa = j as f64 - (n / 2) as f64;
            poly(&g, spec.hbar * k0 * kappa)
        })
        .collect();
    // circulant kernel t_d = (1/N) sum_k g(hbar k) cos(2 pi k d / N)
    let t: Vec<f64> = (0..n)
        .map(|d| {
            gk.iter()
                .enumerate()
                .map(|(j, &gv)| {
                    let kappa = j as f64 - (n / 2) as f64;
                    gv * (2.0 * PI * kappa * d as f64 / n as f64).cos()
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let xs = grid(spec);
    let mut a = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, t[(i + n - j) % n]);
        }
        a.data[i * n + i] += poly(&v, xs[i]);
    }
    Ok(a)
}

/// Symmetric matrices commuting with `j -> (N - j) mod N` split into
/// even and odd blocks.
fn parity_blocks(a: &SymMatrix) -> (SymMatrix, SymMatrix) {
    let n = a.n;
    let h = n / 2;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // even basis: e_0, e_h, (e_j + e_{n-j})/sqrt 2; odd basis: (e_j - e_{n-j})/sqrt 2
    let even: Vec<Vec<(usize, f64)>> = std::iter::once(vec![(0, 1.0)])
        .chain(std::iter::once(vec![(h, 1.0)]))
        .chain((1..h).map(|j| vec![(j, r), (n - j, r)]))
        .collect();
    let odd: Vec<Vec<(usize, f64)>> = (1..h).map(|j| vec![(j, r), (n - j, -r)]).collect();
    let block = |basis: &[Vec<(usize, f64)>]| {
        let m = basis.len();
        let mut b = SymMatrix::zeros(m);
        for p in 0..m {
            for q in 0..m {
                let mut s = 0.0;
                for &(i, wi) in &basis[p] {
                    for &(j, wj) in &basis[q] {
                        s += wi * wj * a.get(i, j);
                    }
                }
                b.set(p, q, s);
            }
        }
        b
    };
    (block(&even), block(&odd))
}

/// Ladder-operator matrices of `x` and `xi = hbar D` on the first `k` Hermite functions.
fn ladder(k: usize, hbar: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut x = vec![Complex64::new(0.0, 0.0); k * k];
    let mut xi = vec![Complex64::new(0.0, 0.0); k * k];
    for j in 0..k - 1 {
        let s = (hbar * (j + 1) as f64 / 2.0).sqrt();
        x[j * k + j + 1] = Complex64::new(s, 0.0);
        x[(j + 1) * k + j] = Complex64::new(s, 0.0);
        xi[j * k + j + 1] = Complex64::new(0.0, -s);
        xi[(j + 1) * k + j] = Complex64::new(0.0, s);
    }
    (x, xi)
}

/// `a * b` where `b` is tridiagonal.
fn mul_tri_right(a: &[Complex64], b: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in 0..k {
            let mut s = Complex64::new(0.0, 0.0);
            for l in j.saturating_sub(1)..(j + 2).min(k) {
                s += a[i * k + l] * b[l * k + j];
            }
            out[i * k + j] = s;
        }
    }
    out
}

/// `b * a` where `b` is tridiagonal.
fn mul_tri_left(b: &[Complex64], a: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for l in i.saturating_sub(1)..(i + 2).min(k) {
            let c = b[i * k + l];
            for j in 0..k {
                out[i * k + j] += c * a[l * k + j];
            }
        }
    }
    out
}

/// Matrix of `p^w` on the first `m` `hbar`-scaled Hermite functions, as a
/// complex Hermitian matrix (row-major) and its symmetry defect.
pub fn hermite_weyl_complex(sym: &SymbolDef, m: usize, hbar: f64) -> (Vec<Complex64>, f64) {
    let k = m + sym.total_degree() as usize + 1;
    let (x, xi) = ladder(k, hbar);
    let mut eye = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        eye[i * k + i] = Complex64::new(1.0, 0.0);
    }
    let mut total = vec![Complex64::new(0.0, 0.0); k * k];
    for t in sym.terms() {
        let (a, b) = (t.deg_x as usize, t.deg_xi as usize);
        let mut xib = eye.clone();
        for _ in 0..b {
            xib = mul_tri_left(&xi, &xib, k);
        }
        // Weyl ordering: 2^{-a} sum_j C(a, j) X^j Xi^b X^{a-j}
        let mut binom = 1.0;
        for j in 0..=a {
            let mut prod = xib.clone();
            for _ in 0..j {
                prod = mul_tri_left(&x, &prod, k);
            }
            for _ in 0..a - j {
                prod = mul_tri_right(&prod, &x, k);
            }
            let w = t.coeff * binom / 2f64.powi(a as i32);
            for (o, p) in total.iter_mut().zip(&prod) {
                *o += p * w;
            }
            binom = binom * (a - j) as f64 / (j + 1) as f64;
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    let mut defect: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = total[i * k + j];
            defect = defect.max((total[i * k + j] - total[j * k + i].conj()).norm());
        }
    }
    (out, defect)
}

/// Real symmetric matrix of `p^w` in the Hermite basis. A complex Hermitian
/// `A + iB` is returned as its real embedding `[[A, -B], [B, A]]`, whose
/// spectrum is that of `A + iB` with every eigenvalue doubled.
pub fn hermite_weyl_matrix(sym: &SymbolDef, spec: &DiscretizationSpec) -> Result<(SymMatrix, bool)> {
    spec.validate()?;
    let m = spec.m;
    let (h, defect) = hermite_weyl_complex(sym, m, spec.hbar);
    if defect > 1e-8 {
        return Err(Error::QuadratureOrderTooLow { defect });
    }
    let sym_part = |i: usize, j: usize| 0.5 * (h[i * m + j] + h[j * m + i].conj());
    let complex = (0..m * m).any(|q| sym_part(q / m, q % m).im.abs() > 0.0);
    if !complex {
        let mut a = SymMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                a.set(i, j, sym_part(i, j).re);
            }
        }
        return Ok((a, false));
    }
    let mut a = SymMatrix::zeros(2 * m);
    for i in 0..m {
        for j in 0..m {
            let v = sym_part(i, j);
            a.set(i, j, v.re);
            a.set(i + m, j + m, v.re);
            a.set(i, j + m, -v.im);
            a.set(i + m, j, v.im);
        }
    }
    Ok((a, true))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations with
/// threshold pivoting, sorted ascending.
pub fn eigensolve_sym(a: &SymMatrix, tol: f64) -> Result<Vec<f64>> {
    let n = a.n;
    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let defect = a.symmetry_defect();
    if defect > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { defect });
    }
    let mut m = a.data.clone();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let fro = a.frobenius();
    let mut off = 0.0;
    for sweep in 0..MAX_SWEEPS {
        off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        off = off.sqrt();
        if off <= tol * fro || off == 0.0 {
            let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
            ev.sort_by(f64::total_cmp);
            return Ok(ev);
        }
        // entries below (tol |A| / n)^2 cannot keep the off-diagonal mass above tol |A|
        let floor = (tol * fro / n as f64).powi(2);
        let thresh = if sweep < 3 { 0.2 * off * off / (n * n) as f64 } else { 0.0 }.max(floor);
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let (app, aqq) = (m[p * n + p], m[q * n + q]);
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() * apq.abs() <= thresh || apq == 0.0 {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                rotate(&mut m, n, p, q, s, tau);
            }
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS, off })
}

/// Applies the rotation to the upper triangle (`p < q`).
fn rotate(m: &mut [f64], n: usize, p: usize, q: usize, s: f64, tau: f64) {
    let r = |g: f64, h: f64| (g - s * (h + g * tau), h + s * (g - h * tau));
    for k in 0..p {
        let (g, h) = r(m[k * n + p], m[k * n + q]);
        m[k * n + p] = g;
        m[k * n + q] = h;
    }
    for k in p + 1..q {
        let (g, h) = r(m[p * n + k], m[k * n + q]);
        m[p * n + k] = g;
        m[k * n + q] = h;
    }
    let (head, tail) = m.split_at_mut(q * n);
    let rp = &mut head[p * n + q + 1..p * n + n];
    let rq = &mut tail[q + 1..n];
    for (g, h) in rp.iter_mut().zip(rq.iter_mut()) {
        let (a, b) = r(*g, *h);
        *g = a;
        *h = b;
    }
}

fn is_even_potential(v: &[f64]) -> bool {
    v.iter().enumerate().all(|(k, &c)| k % 2 == 0 || c == 0.0)
}

/// Full sorted spectrum of the discretization.
pub fn discrete_spectrum(sym: &SymbolDef, spec: &DiscretizationSpec) -> Result<Vec<f64>> {
    match spec.method {
        Method::Pseudospectral => {
            let a = pseudospectral_matrix(sym, spec)?;
            let (_, v) = split(sym)?;
            if is_even_potential(&v) {
                let (e, o) = parity_blocks(&a);
                let (re, ro) = rayon::join(|| eigensolve_sym(&e, JACOBI_TOL), || eigensolve_sym(&o, JACOBI_TOL));
                let mut ev = re?;
                ev.extend(ro?);
                ev.sort_by(f64::total_cmp);
                Ok(ev)
            } else {
                eigensolve_sym(&a, JACOBI_TOL)
            }
        }
        Method::HermiteGalerkin => {
            let (a, doubled) = hermite_weyl_matrix(sym, spec)?;
            let ev = eigensolve_sym(&a, JACOBI_TOL)?;
            Ok(if doubled { ev.iter().step_by(2).copied().collect() } else { ev })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSpectrum {
    /// Eigenvalues in `(E1, E2)`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Range over which the spectrum is stable under refinement.
    pub validity_window: (f64, f64),
    /// Largest refinement shift among the windowed eigenvalues.
    pub max_shift: f64,
    pub spec: DiscretizationSpec,
}

impl ReferenceSpectrum {
    /// CSV `index,eigenvalue`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue\n");
        for (k, e) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{k},{}\n", fmt_g17(*e)));
        }
        s
    }
}

/// Eigenvalues in `(e1, e2)`, certified against the refined resolution.
pub fn reference_spectrum(sym: &SymbolDef, spec: &DiscretizationSpec, e1: f64, e2: f64) -> Result<ReferenceSpectrum> {
    let (coarse, fine) = rayon::join(|| discrete_spectrum(sym, spec), || discrete_spectrum(sym, &spec.refined()));
    let (coarse, fine) = (coarse?, fine?);
    certify(&coarse, &fine, e1, e2, *spec)
}

/// Index-wise comparison of two sorted spectra.
pub fn certify(coarse: &[f64], fine: &[f64], e1: f64, e2: f64, spec: DiscretizationSpec) -> Result<ReferenceSpectrum> {
    let lo = coarse.first().copied().unwrap_or(f64::NAN);
    let mut hi = lo;
    for (k, (a, b)) in coarse.iter().zip(fine).enumerate() {
        if (a - b).abs() > CERTIFY_TOL {
            if *a < e2 {
                return Err(Error::WindowNotCertified { index: k, shift: (a - b).abs() });
            }
            break;
        }
        hi = *a;
    }
    let mut max_shift: f64 = 0.0;
    let mut eigenvalues = Vec::new();
    for (a, b) in coarse.iter().zip(fine) {
        if *a > e1 && *a < e2 {
            eigenvalues.push(*a);
            max_shift = max_shift.max((a - b).abs());
        }
    }
    Ok(ReferenceSpectrum { eigenvalues, validity_window: (lo, hi), max_shift, spec })
}
