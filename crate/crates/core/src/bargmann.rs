//! Numerical Bargmann transform `T0 v(z) = (pi hbar)^{-3/4} int exp(-(z^2/2 - sqrt2 y z + y^2/2)/hbar) v(y) dy`
//! and the weighted space `L^2(exp(-|z|^2/hbar) dL)`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt_g17;
use crate::quad::{composite, gauss_legendre};

/// Relative size allowed at the ends of a line function.
pub const DECAY_TOL: f64 = 1e-12;
/// Relative boundary mass allowed by [`phi0_norm`].
pub const BOUNDARY_TOL: f64 = 1e-14;
const GL_NODES: usize = 32;
const WINDOW: f64 = 10.0;
/// Largest sample spacing, in units of the integrand's local scale, summed directly.
const TRAPEZOID_RESOLUTION: f64 = 0.7;

/// Samples of a function on a uniform grid over `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFunction {
    pub half_width: f64,
    pub values: Vec<Complex64>,
}

impl LineFunction {
    pub fn new(half_width: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 16 || !(half_width > 0.0) {
            return Err(Error::InvalidInput("line function needs n >= 16 samples and L > 0".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self { half_width, values })
    }

    pub fn from_fn(half_width: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let h = 2.0 * half_width / (n - 1) as f64;
        Self::new(half_width, (0..n).map(|k| f(-half_width + k as f64 * h)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.len() - 1) as f64
    }

    pub fn grid(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    /// Local degree-7 Lagrange interpolation; zero outside `[-L, L]`.
    pub fn eval(&self, y: f64) -> Complex64 {
        let l = self.half_width;
        if y < -l || y > l {
            return Complex64::new(0.0, 0.0);
        }
        let h = self.spacing();
        let n = self.len();
        let s = (y + l) / h;
        let start = (s.floor() as i64 - 3).clamp(0, n as i64 - 8) as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..8 {
            let mut w = 1.0;
            let si = (start + i) as f64;
            for j in 0..8 {
                if j != i {
                    let sj = (start + j) as f64;
                    w *= (s - sj) / (si - sj);
                }
            }
            acc += self.values[start + i] * w;
        }
        acc
    }

    /// `||v||_{L^2}` by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spacing()).sqrt()
    }

    fn check_decay(&self) -> Result<()> {
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let edge = self.values[0].norm().max(self.values[self.len() - 1].norm());
        if max > 0.0 && edge > DECAY_TOL * max {
            return Err(Error::DomainTooSmall { ratio: edge / max });
        }
        Ok(())
    }
}

/// `hbar`-scaled Hermite function `h_k(y)`, normalized in `L^2(R)`.
pub fn hermite_function(k: usize, hbar: f64, y: f64) -> f64 {
    let u = y / hbar.sqrt();
    let mut p0 = (PI * hbar).powf(-0.25) * (-0.5 * u * u).exp();
    if k == 0 {
        return p0;
    }
    let mut p1 = SQRT_2 * u * p0;
    for j in 1..k {
        let p2 = (2.0 / (j + 1) as f64).sqrt() * u * p1 - (j as f64 / (j + 1) as f64).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Square lattice `[-R, R]^2` of `n x n` points in the `z` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub center: Complex64,
    pub half_width: f64,
    pub n: usize,
}

impl Lattice {
    /// 161 x 161 points over a half-width of `9 sqrt(hbar)`.
    pub fn for_hbar(hbar: f64) -> Self {
        Self { center: Complex64::new(0.0, 0.0), half_width: 9.0 * hbar.sqrt(), n: 161 }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let h = self.step();
        self.center + Complex64::new(-self.half_width + i as f64 * h, -self.half_width + j as f64 * h)
    }
}

/// Values of a transformed function on a [`Lattice`]; `values[i * n + j]`
/// sits at `lattice.point(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BargmannField {
    pub lattice: Lattice,
    pub values: Vec<Complex64>,
    pub hbar: f64,
}

impl BargmannField {
    pub fn zeros(lattice: Lattice, hbar: f64) -> Self {
        Self { lattice, values: vec![Complex64::new(0.0, 0.0); lattice.n * lattice.n], hbar }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { lattice: self.lattice, values: self.values.iter().map(|v| v * c).collect(), hbar: self.hbar }
    }

    /// CSV `re_z,im_z,re_u,im_u`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re_z,im_z,re_u,im_u\n");
        let n = self.lattice.n;
        for i in 0..n {
            for j in 0..n {
                let z = self.lattice.point(i, j);
                let u = self.values[i * n + j];
                s.push_str(&format!("{},{},{},{}\n", fmt_g17(z.re), fmt_g17(z.im), fmt_g17(u.re), fmt_g17(u.im)));
            }
        }
        s
    }
}

/// `T0 v` at one point.
pub fn transform_at(v: &LineFunction, hbar: f64, z: Complex64) -> Complex64 {
    let sq = hbar.sqrt();
    let c = SQRT_2 * z.re;
    let a = (c - WINDOW * sq).max(-v.half_width);
    let b = (c + WINDOW * sq).min(v.half_width);
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let omega = SQRT_2 * z.im.abs() / hbar;
    let zz = z * z * 0.5;
    let h = v.spacing();
    if h * omega.max(1.0 / sq) <= TRAPEZOID_RESOLUTION {
        // samples resolve the integrand: the trapezoid rule is spectrally accurate
        let lo = ((a + v.half_width) / h).ceil() as usize;
        let hi = (((b + v.half_width) / h).floor() as usize).min(v.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in lo..=hi {
            let y = v.grid(k);
            let w = if k == 0 || k == v.len() - 1 { 0.5 * h } else { h };
            acc += (-(zz - SQRT_2 * y * z + 0.5 * y * y) / hbar).exp() * v.values[k] * w;
        }
        return acc * (PI * hbar).powf(-0.75);
    }
    // resolve the Gaussian width, the kernel oscillation and the sampling of v
    let panels = ((b - a) / (0.5 * sq)).ceil().max(((b - a) * omega / 6.0).ceil()).max(((b - a) / (8.0 * v.spacing())).ceil()) as usize;
    let rule = gauss_legendre(GL_NODES);
    let mut acc = Complex64::new(0.0, 0.0);
    for (y, w) in composite(a, b, panels.max(1), &rule) {
        let e = -(zz - SQRT_2 * y * z + 0.5 * y * y) / hbar;
        acc += e.exp() * v.eval(y) * w;
    }
    acc * (PI * hbar).powf(-0.75)
}

pub fn bargmann_transform(v: &LineFunction, hbar: f64, lattice: Lattice) -> Result<BargmannField> {
    v.check_decay()?;
    let n = lattice.n;
    let values = (0..n * n)
        .into_par_iter()
        .map(|k| transform_at(v, hbar, lattice.point(k / n, k % n)))
        .collect();
    Ok(BargmannField { lattice, values, hbar })
}

fn weight(z: Complex64, hbar: f64) -> f64 {
    (-z.norm_sqr() / hbar).exp()
}

/// `<u, w>` in `L^2(exp(-|z|^2/hbar) dL)` by the 2D trapezoid rule.
pub fn phi0_inner(u: &BargmannField, w: &BargmannField) -> Complex64 {
    let n = u.lattice.n;
    let h = u.lattice.step();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let z = u.lattice.point(i, j);
            let edge = (if i == 0 || i == n - 1 { 0.5 } else { 1.0 }) * (if j == 0 || j == n - 1 { 0.5 } else { 1.0 });
            acc += u.values[i * n + j] * w.values[i * n + j].conj() * weight(z, u.hbar) * edge;
        }
    }
    acc * h * h
}

/// `||u||` in `L^2(exp(-2 Phi0/hbar) dL)`, `Phi0 = |z|^2/2`, `dL` the Lebesgue measure.
pub fn phi0_norm(u: &BargmannField) -> Result<f64> {
    let n = u.lattice.n;
    let mut max: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = u.lattice.point(i, j);
            let v = u.values[i * n + j].norm_sqr() * weight(z, u.hbar);
            max = max.max(v);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                edge = edge.max(v);
            }
        }
    }
    if max > 0.0 && edge > BOUNDARY_TOL * max {
        return Err(Error::Truncation { ratio: edge / max });
    }
    Ok(phi0_inner(u, u).re.max(0.0).sqrt())
}

/// Largest `|u(z)| exp(-Phi0(z)/hbar) / (2^{1/4} (pi hbar)^{-1/2} ||u||)` over the lattice.
pub fn uncertainty_check(u: &BargmannField) -> Result<f64> {
    let norm = phi0_norm(u)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let bound = 2f64.powf(0.25) / (PI * u.hbar).sqrt() * norm;
    let n = u.lattice.n;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = u.lattice.point(i, j);
            worst = worst.max(u.values[i * n + j].norm() * (-0.5 * z.norm_sqr() / u.hbar).exp());
        }
    }
    Ok(worst / bound)
}

/// `|d/dzbar T0 v| / |d/dz T0 v|` at `z`, by central differences of
/// pointwise transforms with step `1e-3 sqrt(hbar)`.
pub fn cauchy_riemann_residual(v: &LineFunction, hbar: f64, z: Complex64) -> f64 {
    let h = 1e-3 * hbar.sqrt();
    let dx = (transform_at(v, hbar, z + h) - transform_at(v, hbar, z - h)) / (2.0 * h);
    let dy = (transform_at(v, hbar, z + Complex64::new(0.0, h)) - transform_at(v, hbar, z - Complex64::new(0.0, h))) / (2.0 * h);
    let dbar = 0.5 * (dx + Complex64::i() * dy);
    let dz = 0.5 * (dx - Complex64::i() * dy);
    let local = dz.norm().max(transform_at(v, hbar, z).norm() / hbar.sqrt());
    if local == 0.0 {
        0.0
    } else {
        dbar.norm() / local
    }
}

/// Hermite function sampled finely enough for the transform.
pub fn hermite_line(k: usize, hbar: f64) -> LineFunction {
    let sq = hbar.sqrt();
    let l = (2.0 * k as f64 + 1.0).sqrt() * sq + 12.0 * sq;
    let n = ((2.0 * l) / (sq / 24.0)).ceil() as usize + 1;
    LineFunction::from_fn(l, n, |y| Complex64::new(hermite_function(k, hbar, y), 0.0)).expect("valid sampling")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_functions_orthonormal() {
        let hbar = 0.3;
        for a in 0..6 {
            for b in 0..6 {
                let (la, lb) = (hermite_line(a, hbar), hermite_line(b, hbar));
                let l = la.half_width.max(lb.half_width);
                let n = 4001;
                let h = 2.0 * l / (n - 1) as f64;
                let s: f64 = (0..n).map(|k| {
                    let y = -l + k as f64 * h;
                    hermite_function(a, hbar, y) * hermite_function(b, hbar, y)
                }).sum::<f64>() * h;
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-12, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn gaussian_image_is_constant() {
        let hbar = 0.5;
        let v = hermite_line(0, hbar);
        let c = (PI * hbar).powf(-0.5);
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.7, -0.4), Complex64::new(-1.1, 0.9)] {
            let e = (transform_at(&v, hbar, z) - c).norm() / c;
            assert!(e < 1e-10, "{z} {e}");
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let v = LineFunction::new(5.0, vec![Complex64::new(0.0, 0.0); 64]).unwrap();
        let f = bargmann_transform(&v, 1.0, Lattice { center: Complex64::new(0.0, 0.0), half_width: 3.0, n: 21 }).unwrap();
        assert!(f.values.iter().all(|u| u.norm() == 0.0));
        assert_eq!(phi0_norm(&f).unwrap(), 0.0);
        assert_eq!(uncertainty_check(&f).unwrap(), 0.0);
    }

    #[test]
    fn undecayed_input_rejected() {
        let v = LineFunction::from_fn(1.0, 64, |_| Complex64::new(1.0, 0.0)).unwrap();
        let e = bargmann_transform(&v, 1.0, Lattice::for_hbar(1.0)).unwrap_err();
        assert_eq!(e.code(), "DOMAIN_TOO_SMALL");
    }

    #[test]
    fn sampled_and_interpolated_quadratures_agree() {
        let hbar = 0.2;
        let fine = hermite_line(2, hbar);
        let l = fine.half_width;
        // spacing sqrt(hbar)/4 forces the interpolating panel rule
        let n = (2.0 * l / (0.25 * hbar.sqrt())).ceil() as usize + 1;
        let coarse = LineFunction::from_fn(l, n, |y| Complex64::new(hermite_function(2, hbar, y), 0.0)).unwrap();
        for z in [Complex64::new(0.3, 0.1), Complex64::new(-1.0, 2.0), Complex64::new(2.5, -2.5)] {
            let (a, b) = (transform_at(&fine, hbar, z), transform_at(&coarse, hbar, z));
            let scale = (0.5 * z.norm_sqr() / hbar).exp() * (PI * hbar).powf(-0.5);
            assert!((a - b).norm() < 1e-5 * scale, "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn gaussian_isometry_and_uncertainty() {
        let hbar = 0.5;
        let f = bargmann_transform(&hermite_line(0, hbar), hbar, Lattice::for_hbar(hbar)).unwrap();
        let n = phi0_norm(&f).unwrap();
        assert!((n - 1.0).abs() < 1e-6, "{n}");
        let r = uncertainty_check(&f).unwrap();
        assert!(r <= 1.0 + 1e-4);
        assert!((r - 2f64.powf(-0.25)).abs() < 1e-6);
        let c = Complex64::new(-2.0, 1.5);
        assert!((phi0_norm(&f.scaled(c)).unwrap() - c.norm() * n).abs() < 1e-12);
    }

    #[test]
    fn hermite_images_orthogonal() {
        let hbar = 1.0;
        let lat = Lattice { n: 81, ..Lattice::for_hbar(hbar) };
        let fields: Vec<BargmannField> = (0..4).map(|k| bargmann_transform(&hermite_line(k, hbar), hbar, lat).unwrap()).collect();
        for a in 0..4 {
            for b in 0..4 {
                let ip = phi0_inner(&fields[a], &fields[b]);
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((ip - e).norm() < 1e-6, "{a} {b} {ip}");
            }
        }
    }

    #[test]
    fn transform_is_linear_and_holomorphic() {
        let hbar = 0.5;
        let (a, b) = (hermite_line(1, hbar), hermite_line(2, hbar));
        let l = a.half_width.max(b.half_width);
        let n = 801;
        let fa = |y: f64| Complex64::new(hermite_function(1, hbar, y), 0.0);
        let fb = |y: f64| Complex64::new(hermite_function(2, hbar, y), 0.0);
        let c = Complex64::new(0.3, -1.2);
        let va = LineFunction::from_fn(l, n, fa).unwrap();
        let vb = LineFunction::from_fn(l, n, fb).unwrap();
        let vs = LineFunction::from_fn(l, n, |y| fa(y) + c * fb(y)).unwrap();
        let z = Complex64::new(0.4, 0.6);
        let lhs = transform_at(&vs, hbar, z);
        let rhs = transform_at(&va, hbar, z) + c * transform_at(&vb, hbar, z);
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(1.0));
        for z in [Complex64::new(0.4, 0.6), Complex64::new(-1.0, 0.2)] {
            assert!(cauchy_riemann_residual(&va, hbar, z) < 1e-5);
        }
    }

    #[test]
    fn csv_export() {
        let f = BargmannField::zeros(Lattice { center: Complex64::new(0.0, 0.0), half_width: 1.0, n: 3 }, 1.0);
        let csv = f.to_csv();
        assert!(csv.starts_with("re_z,im_z,re_u,im_u\n"));
        assert_eq!(csv.lines().count(), 10);
    }
}
