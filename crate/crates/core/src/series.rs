//! Truncated formal classical analytic symbols `sum_n a_n(lambda) hbar^n`,
//! with each `a_n` a polynomial in `lambda - center`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_integer::Integer;
pub use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient field used by the calculus.
pub trait Scalar: Clone + Debug + PartialEq + Send + Sync + Zero + One {
    fn from_ratio(n: i64, d: i64) -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
    fn add_ref(&self, o: &Self) -> Self;
    fn sub_ref(&self, o: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn try_inv(&self) -> Option<Self>;
    fn to_c64(&self) -> Complex64;

    /// `[h][j] = (1/j) [mu^{j-1}] L^j` for `j = 1..=k` from the table `l[h][m]`.
    fn lagrange_table(l: &[Vec<Self>], n: usize, k: usize) -> Vec<Vec<Self>> {
        let mut out = zeros::<Self>(n, k);
        let mut power = zeros::<Self>(n, k - 1);
        power[0][0] = Self::one();
        // rows above k - j and weights above k - 1 never reach a retained coefficient
        for j in 1..=k {
            power = mul_trunc_weighted(&power, l, n.min(k - j), k - 1, k - 1, |o: &mut Self, x, y| *o = o.add_ref(&x.mul_ref(y)));
            let inv_j = Self::from_ratio(1, j as i64);
            for (row, p) in out.iter_mut().zip(&power) {
                row[j] = p[j - 1].mul_ref(&inv_j);
            }
        }
        out
    }
}

/// Scalars containing the imaginary unit.
pub trait ComplexScalar: Scalar {
    fn i() -> Self;
}

macro_rules! scalar_ops {
    () => {
        fn mul_ref(&self, o: &Self) -> Self {
            self * o
        }
        fn add_ref(&self, o: &Self) -> Self {
            self + o
        }
        fn sub_ref(&self, o: &Self) -> Self {
            self - o
        }
        fn neg_ref(&self) -> Self {
            -self
        }
    };
}

impl Scalar for f64 {
    scalar_ops!();
    fn from_ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn try_inv(&self) -> Option<Self> {
        (*self != 0.0).then(|| 1.0 / self)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
}

impl Scalar for Complex64 {
    scalar_ops!();
    fn from_ratio(n: i64, d: i64) -> Self {
        Complex64::new(n as f64 / d as f64, 0.0)
    }
    fn try_inv(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.inv())
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

impl ComplexScalar for Complex64 {
    fn i() -> Self {
        Complex64::i()
    }
}

impl Scalar for BigRational {
    scalar_ops!();
    /// Integer powers of the table scaled to a common denominator.
    fn lagrange_table(l: &[Vec<Self>], n: usize, k: usize) -> Vec<Vec<Self>> {
        let den = l.iter().flatten().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let scaled: Vec<Vec<BigInt>> = l.iter().map(|r| r.iter().map(|c| c.numer() * (&den / c.denom())).collect()).collect();
        let mut out = zeros::<Self>(n, k);
        let mut power = vec![vec![BigInt::zero(); k]; n + 1];
        power[0][0] = BigInt::one();
        let mut den_j = BigInt::one();
        for j in 1..=k {
            power = mul_trunc_weighted(&power, &scaled, n.min(k - j), k - 1, k - 1, |o: &mut BigInt, x, y| *o += x * y);
            den_j *= &den;
            let d = &den_j * BigInt::from(j);
            for (row, p) in out.iter_mut().zip(&power) {
                row[j] = BigRational::new(p[j - 1].clone(), d.clone());
            }
        }
        out
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        BigRational::new(n.into(), d.into())
    }
    fn try_inv(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.recip())
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }
}

impl Scalar for Complex<BigRational> {
    scalar_ops!();
    fn from_ratio(n: i64, d: i64) -> Self {
        Complex::new(BigRational::from_ratio(n, d), BigRational::zero())
    }
    fn try_inv(&self) -> Option<Self> {
        (!Zero::is_zero(self)).then(|| <Self as One>::one() / self.clone())
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
}

impl ComplexScalar for Complex<BigRational> {
    fn i() -> Self {
        Complex::new(BigRational::zero(), BigRational::one())
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // scale down huge numerators and denominators together
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Truncated double series `a[n][d]`: `hbar^n (lambda - center)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSymbol<S> {
    pub center: S,
    pub coeffs: Vec<Vec<S>>,
    /// Certified growth constant `C` with `sup |a_n| <= C^{n+1} n^n`.
    pub growth: Option<f64>,
}

/// Tolerance for comparing floating centers.
pub const CENTER_TOL: f64 = 1e-12;

fn zeros<S: Scalar>(n: usize, d: usize) -> Vec<Vec<S>> {
    vec![vec![S::zero(); d + 1]; n + 1]
}

fn mul_trunc<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>], n_max: usize, d_max: usize) -> Vec<Vec<S>> {
    mul_trunc_weighted(a, b, n_max, d_max, n_max + d_max, |o: &mut S, x, y| *o = o.add_ref(&x.mul_ref(y)))
}

/// As `mul_trunc`, also dropping terms with `n + d > w_max`.
fn mul_trunc_weighted<T: Clone + Zero>(
    a: &[Vec<T>],
    b: &[Vec<T>],
    n_max: usize,
    d_max: usize,
    w_max: usize,
    mul_add: impl Fn(&mut T, &T, &T),
) -> Vec<Vec<T>> {
    let mut out = vec![vec![T::zero(); d_max + 1]; n_max + 1];
    for (na, ra) in a.iter().enumerate().take(n_max.min(w_max) + 1) {
        for (da, ca) in ra.iter().enumerate().take(d_max.min(w_max - na) + 1) {
            if ca.is_zero() {
                continue;
            }
            for (nb, rb) in b.iter().enumerate().take((n_max - na).min(w_max - na - da) + 1) {
                let room = (d_max - da).min(w_max - na - da - nb);
                for (db, cb) in rb.iter().enumerate().take(room + 1) {
                    if !cb.is_zero() {
                        mul_add(&mut out[na + nb][da + db], ca, cb);
                    }
                }
            }
        }
    }
    out
}

fn resize<S: Scalar>(a: &[Vec<S>], n: usize, d: usize) -> Vec<Vec<S>> {
    let mut out = zeros(n, d);
    for (i, row) in a.iter().enumerate().take(n + 1) {
        for (j, c) in row.iter().enumerate().take(d + 1) {
            out[i][j] = c.clone();
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl<S: Scalar> FormalSymbol<S> {
    pub fn new(center: S, coeffs: Vec<Vec<S>>) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0].is_empty() || coeffs.iter().any(|r| r.len() != coeffs[0].len()) {
            return Err(Error::InvalidInput("coefficient matrix must be rectangular and non-empty".into()));
        }
        Ok(Self { center, coeffs, growth: None })
    }

    pub fn zero(center: S, n: usize, d: usize) -> Self {
        Self { center, coeffs: zeros(n, d), growth: None }
    }

    /// The constant symbol `c`.
    pub fn constant(center: S, c: S, n: usize, d: usize) -> Self {
        let mut s = Self::zero(center, n, d);
        s.coeffs[0][0] = c;
        s
    }

    /// The symbol `lambda` itself.
    pub fn identity(center: S, n: usize, d: usize) -> Self {
        let mut s = Self::constant(center.clone(), center, n, d.max(1));
        s.coeffs[0][1] = S::one();
        s
    }

    /// Highest retained `hbar` order.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Degree cap of the coefficient polynomials.
    pub fn degree(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn with_growth(mut self, c: f64) -> Self {
        self.growth = Some(c);
        self
    }

    pub fn truncated(&self, n: usize, d: usize) -> Self {
        Self { center: self.center.clone(), coeffs: resize(&self.coeffs, n, d), growth: self.growth }
    }

    fn check_center(&self, other: &Self) -> Result<()> {
        if self.center.sub_ref(&other.center).to_c64().norm() > CENTER_TOL {
            return Err(Error::CenterMismatch(format!("{:?}", self.center), format!("{:?}", other.center)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let n = self.order().min(other.order());
        let d = self.degree().max(other.degree());
        let a = resize(&self.coeffs, n, d);
        let b = resize(&other.coeffs, n, d);
        let coeffs = a
            .iter()
            .zip(&b)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add_ref(y)).collect())
            .collect();
        Ok(Self { center: self.center.clone(), coeffs, growth: None })
    }

    pub fn scale(&self, c: &S) -> Self {
        let coeffs = self.coeffs.iter().map(|r| r.iter().map(|x| x.mul_ref(c)).collect()).collect();
        Self { center: self.center.clone(), coeffs, growth: None }
    }

    /// Cauchy product in `hbar`, polynomial product in `lambda`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let n = self.order().min(other.order());
        let d = self.degree() + other.degree();
        Ok(Self {
            center: self.center.clone(),
            coeffs: mul_trunc(&self.coeffs, &other.coeffs, n, d),
            growth: None,
        })
    }

    /// `a_n(lambda)` at a complex offset `mu = lambda - center`.
    pub fn coefficient_at(&self, n: usize, mu: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs[n].iter().rev() {
            acc = acc * mu + c.to_c64();
        }
        acc
    }

    /// `sup |a_n|` over the circle `|lambda - center| = radius` (64 samples).
    pub fn sup_norm(&self, n: usize, radius: f64) -> f64 {
        if self.degree() == 0 || radius == 0.0 {
            return self.coeffs[n][0].to_c64().norm();
        }
        (0..64)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                self.coefficient_at(n, Complex64::from_polar(radius, th)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Truncated Borel sum `sum_k sup|a_k| rho^k / k!`.
    pub fn pseudonorm(&self, rho: f64, radius: f64) -> PseudonormValue {
        let mut value = 0.0;
        let mut w = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                w *= rho / k as f64;
            }
            value += self.sup_norm(k, radius) * w;
        }
        PseudonormValue { rho, value, infinite: !value.is_finite() }
    }

    /// Smallest `C` with `sup |a_n| <= C^{n+1} n^n` for every retained `n`.
    pub fn growth_estimate(&self, radius: f64) -> f64 {
        (0..=self.order())
            .map(|n| {
                let s = self.sup_norm(n, radius);
                let nn = if n == 0 { 1.0 } else { (n as f64).powi(n as i32) };
                (s / nn).powf(1.0 / (n as f64 + 1.0))
            })
            .fold(0.0, f64::max)
    }

    /// Smallest `C` with `sup |a_n| <= C^{n+1} n!` for every retained `n`.
    pub fn factorial_growth_estimate(&self, radius: f64) -> f64 {
        (0..=self.order())
            .map(|n| (self.sup_norm(n, radius) / factorial(n)).powf(1.0 / (n as f64 + 1.0)))
            .fold(0.0, f64::max)
    }

    /// `sum_{n <= floor(1/(C hbar))} a_n(lambda) hbar^n`.
    pub fn resum(&self, hbar: f64, c: f64, lambda: Complex64) -> Result<Complex64> {
        if !(hbar > 0.0) || !(c > 0.0) {
            return Err(Error::InvalidInput("hbar and C must be positive".into()));
        }
        if let Some(g) = self.growth {
            if c < g * std::f64::consts::E * (1.0 - 1e-12) {
                return Err(Error::InvalidInput(format!("C = {c} below e times the certified constant {g}")));
            }
        }
        let terms = resum_count(hbar, c);
        if terms > self.order() {
            return Err(Error::TruncationExceeded { needed: terms, available: self.order() });
        }
        let mu = lambda - self.center.to_c64();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut hp = 1.0;
        for n in 0..=terms {
            sum += self.coefficient_at(n, mu) * hp;
            hp *= hbar;
        }
        Ok(sum)
    }

    /// `F(hbar, center)` as an `hbar`-series.
    fn value_at_center(&self) -> Vec<S> {
        self.coeffs.iter().map(|r| r[0].clone()).collect()
    }
}

/// `floor(1/(C hbar))`, robust to the rounding of exact quotients.
pub fn resum_count(hbar: f64, c: f64) -> usize {
    let x = 1.0 / (c * hbar);
    (x * (1.0 + 1e-12)).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PseudonormValue {
    pub rho: f64,
    pub value: f64,
    pub infinite: bool,
}

/// `G(hbar, F(hbar, lambda))`, with `G` expanded around `I0 = G.center`.
pub fn compose<S: Scalar>(g: &FormalSymbol<S>, f: &FormalSymbol<S>) -> Result<FormalSymbol<S>> {
    let f0 = &f.coeffs[0][0];
    if f0.sub_ref(&g.center).to_c64().norm() > CENTER_TOL {
        return Err(Error::CenterMismatch(format!("{:?}", g.center), format!("{f0:?}")));
    }
    let n = g.order().min(f.order());
    let d = f.degree();
    let mut delta = resize(&f.coeffs, n, d);
    delta[0][0] = delta[0][0].sub_ref(&g.center);
    let mut out = zeros::<S>(n, d);
    let mut power = zeros::<S>(n, d);
    power[0][0] = S::one();
    for k in 0..=g.degree() {
        if k > 0 {
            power = mul_trunc(&power, &delta, n, d);
        }
        // G_k(hbar) * delta^k
        for (gn, grow) in g.coeffs.iter().enumerate().take(n + 1) {
            let gk = &grow[k];
            if gk.is_zero() {
                continue;
            }
            for (pn, prow) in power.iter().enumerate().take(n + 1 - gn) {
                for (j, c) in prow.iter().enumerate() {
                    if !c.is_zero() {
                        out[gn + pn][j] = out[gn + pn][j].add_ref(&gk.mul_ref(c));
                    }
                }
            }
        }
    }
    Ok(FormalSymbol { center: f.center.clone(), coeffs: out, growth: None })
}

fn hseries_mul<S: Scalar>(a: &[S], b: &[S], n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); n + 1];
    for (i, x) in a.iter().enumerate().take(n + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] = out[i + j].add_ref(&x.mul_ref(y));
        }
    }
    out
}

fn hseries_inv<S: Scalar>(a: &[S], n: usize) -> Result<Vec<S>> {
    let a0inv = a[0].try_inv().ok_or(Error::NotInvertible)?;
    let mut out = vec![S::zero(); n + 1];
    out[0] = a0inv.clone();
    for k in 1..=n {
        let mut s = S::zero();
        for j in 1..=k.min(a.len() - 1) {
            s = s.add_ref(&a[j].mul_ref(&out[k - j]));
        }
        out[k] = s.mul_ref(&a0inv).neg_ref();
    }
    Ok(out)
}

/// Formal inverse `G` with `F(hbar, G(hbar, I)) = I`, obtained from the
/// Lagrange coefficients `alpha_j = (1/j) [mu^{j-1}] (mu / S)^j` of
/// `S = F - F(hbar, center)` and shifted by `F(hbar, center)`.
pub fn lagrange_invert<S: Scalar>(f: &FormalSymbol<S>) -> Result<FormalSymbol<S>> {
    let n = f.order();
    let d = f.degree();
    if d == 0 || f.coeffs[0][1].is_zero() {
        return Err(Error::NotInvertible);
    }
    let k = d + n;
    // t_d(hbar) = s_{d+1}(hbar): S / mu
    let t: Vec<Vec<S>> = (0..k).map(|j| f.coeffs.iter().map(|r| r.get(j + 1).cloned().unwrap_or_else(S::zero)).collect()).collect();
    // L = 1/T as a series in mu with hbar-series coefficients, up to degree k-1
    let t0inv = hseries_inv(&t[0], n)?;
    let mut l: Vec<Vec<S>> = vec![t0inv.clone()];
    for m in 1..k {
        let mut s = vec![S::zero(); n + 1];
        for j in 1..=m {
            let prod = hseries_mul(&t[j], &l[m - j], n);
            for (a, b) in s.iter_mut().zip(&prod) {
                *a = a.add_ref(b);
            }
        }
        l.push(hseries_mul(&s, &t0inv, n).into_iter().map(|x| x.neg_ref()).collect());
    }
    // as a bivariate table [hbar][mu]
    let l_tab: Vec<Vec<S>> = (0..=n).map(|h| (0..k).map(|m| l[m][h].clone()).collect()).collect();
    let inv_series = S::lagrange_table(&l_tab, n, k);
    // G(hbar, I) = center + S^{-1}(hbar, (I - I0) - c(hbar)), c = F(hbar, center) - f0
    let i0 = f.coeffs[0][0].clone();
    let mut shift = zeros::<S>(n, 1);
    shift[0][1] = S::one();
    for (h, v) in f.value_at_center().into_iter().enumerate().skip(1) {
        shift[h][0] = v.neg_ref();
    }
    let outer = FormalSymbol { center: S::zero(), coeffs: inv_series, growth: None };
    let inner = FormalSymbol { center: i0.clone(), coeffs: resize(&shift, n, d), growth: None };
    let mut g = compose(&outer, &inner)?;
    g.coeffs[0][0] = g.coeffs[0][0].add_ref(&f.center);
    g.center = i0;
    Ok(g)
}

/// Bivariate formal symbol `sum_n hbar^n sum q[n][i][j] z^i zeta^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiSymbol<S> {
    pub coeffs: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> BiSymbol<S> {
    pub fn from_terms(order: usize, terms: &[(usize, usize, usize, S)]) -> Self {
        let di = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let dj = terms.iter().map(|t| t.2).max().unwrap_or(0);
        let mut coeffs = vec![vec![vec![S::zero(); dj + 1]; di + 1]; order + 1];
        for (n, i, j, c) in terms {
            if *n <= order {
                coeffs[*n][*i][*j] = coeffs[*n][*i][*j].add_ref(c);
            }
        }
        Self { coeffs }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let di = self.coeffs[0].len().max(o.coeffs[0].len());
        let dj = self.coeffs[0][0].len().max(o.coeffs[0][0].len());
        let mut coeffs = vec![vec![vec![S::zero(); dj]; di]; n];
        for src in [self, o] {
            for (a, pa) in src.coeffs.iter().enumerate() {
                for (b, pb) in pa.iter().enumerate() {
                    for (c, v) in pb.iter().enumerate() {
                        coeffs[a][b][c] = coeffs[a][b][c].add_ref(v);
                    }
                }
            }
        }
        Self { coeffs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantization {
    Left,
    Weyl,
}

/// Left symbol `exp((hbar/i) d_z d_zeta) ^ {1/2}`-conjugate of a Weyl symbol,
/// expanded to the retained order.
pub fn weyl_to_left<S: ComplexScalar>(q: &BiSymbol<S>) -> BiSymbol<S> {
    let order = q.coeffs.len() - 1;
    let di = q.coeffs[0].len();
    let dj = q.coeffs[0][0].len();
    let mut out = vec![vec![vec![S::zero(); dj]; di]; order + 1];
    // factor -i/2 per mixed derivative and per hbar
    let half = S::from_ratio(1, 2);
    let c = S::i().mul_ref(&half).neg_ref();
    for (n, plane) in q.coeffs.iter().enumerate() {
        for (i, row) in plane.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let mut w = v.clone();
                for k in 0..=i.min(j) {
                    if n + k > order {
                        break;
                    }
                    if k > 0 {
                        // d_z d_zeta of z^{i-k+1} zeta^{j-k+1}, divided by k
                        let f = S::from_ratio(((i - k + 1) * (j - k + 1)) as i64, k as i64);
                        w = w.mul_ref(&f).mul_ref(&c);
                    }
                    out[n + k][i - k][j - k] = out[n + k][i - k][j - k].add_ref(&w);
                }
            }
        }
    }
    BiSymbol { coeffs: out }
}

/// Applies `q(z, hbar D_z)` (left or Weyl quantized, `hbar D = (hbar/i) d`)
/// to a symbol `A` polynomial in `z`.
pub fn apply_formal_pdo<S: ComplexScalar>(q: &BiSymbol<S>, a: &FormalSymbol<S>, quantization: Quantization) -> FormalSymbol<S> {
    let left = match quantization {
        Quantization::Left => q.clone(),
        Quantization::Weyl => weyl_to_left(q),
    };
    let order = a.order().min(left.coeffs.len() - 1 + a.order());
    let order = order.min(a.order());
    let di = left.coeffs[0].len() - 1;
    let deg = a.degree() + di;
    let mut out = zeros::<S>(order, deg);
    let minus_i = S::i().neg_ref();
    for (n, plane) in left.coeffs.iter().enumerate() {
        for (i, row) in plane.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let mut pf = v.clone();
                for _ in 0..j {
                    pf = pf.mul_ref(&minus_i);
                }
                for (m, arow) in a.coeffs.iter().enumerate() {
                    let h = n + m + j;
                    if h > order {
                        break;
                    }
                    for (e, c) in arow.iter().enumerate() {
                        if e < j || c.is_zero() {
                            continue;
                        }
                        // d^j z^e = e!/(e-j)! z^{e-j}
                        let mut fall = S::one();
                        for t in 0..j {
                            fall = fall.mul_ref(&S::from_ratio((e - t) as i64, 1));
                        }
                        let idx = e - j + i;
                        out[h][idx] = out[h][idx].add_ref(&pf.mul_ref(&fall).mul_ref(c));
                    }
                }
            }
        }
    }
    FormalSymbol { center: S::zero(), coeffs: out, growth: None }
}

/// Parses `"p/q"`, integers and decimals such as `"-1.25e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("not an exact number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let e = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if e >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, e as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-e) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Exact decimal when the denominator divides a power of ten, else `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r * BigRational::from_integer(num_traits::pow(BigInt::from(10), places));
    let n = scaled.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let digits = n.abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = digits.split_at(digits.len() - places);
    format!("{sign}{int}.{frac}")
}

/// On-disk form: `center`, `N`, `D` and row-major exact coefficient strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolFile {
    pub center: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub coeffs: Vec<Vec<String>>,
}

impl SymbolFile {
    pub fn from_symbol(s: &FormalSymbol<BigRational>) -> Self {
        Self {
            center: format_rational(&s.center),
            n: s.order(),
            d: s.degree(),
            coeffs: s.coeffs.iter().map(|r| r.iter().map(format_rational).collect()).collect(),
        }
    }

    pub fn to_symbol(&self) -> Result<FormalSymbol<BigRational>> {
        if self.coeffs.len() != self.n + 1 || self.coeffs.iter().any(|r| r.len() != self.d + 1) {
            return Err(Error::InvalidInput(format!(
                "coeffs must be {} rows of {} entries",
                self.n + 1,
                self.d + 1
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|r| r.iter().map(|c| parse_rational(c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        FormalSymbol::new(parse_rational(&self.center)?, coeffs)
    }
}

/// Rational-mode conversion helper.
pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Sym = FormalSymbol<BigRational>;

    fn sym(center: i64, rows: &[&[i64]]) -> Sym {
        let coeffs = rows.iter().map(|r| r.iter().map(|&c| q(c, 1)).collect()).collect();
        FormalSymbol::new(q(center, 1), coeffs).unwrap()
    }

    fn is_identity(s: &Sym) -> bool {
        s.coeffs.iter().enumerate().all(|(n, r)| {
            r.iter().enumerate().all(|(d, c)| {
                let expect = if n == 0 && d == 0 {
                    s.center.clone()
                } else if n == 0 && d == 1 {
                    q(1, 1)
                } else {
                    q(0, 1)
                };
                *c == expect
            })
        })
    }

    #[test]
    fn products() {
        let one = sym(0, &[&[1], &[0], &[0]]);
        assert_eq!(one.product(&one).unwrap().coeffs[0][0], q(1, 1));
        let a = sym(0, &[&[1], &[1], &[0]]);
        let b = sym(0, &[&[1], &[-1], &[0]]);
        let p = a.product(&b).unwrap();
        assert_eq!(p.coeffs, vec![vec![q(1, 1)], vec![q(0, 1)], vec![q(-1, 1)]]);
        assert_eq!(a.product(&sym(1, &[&[1]])).unwrap_err().code(), "CENTER_MISMATCH");
    }

    #[test]
    fn product_commutes_and_associates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rnd = || {
            let rows: Vec<Vec<BigRational>> =
                (0..4).map(|_| (0..3).map(|_| q(rng.gen_range(-5..=5), rng.gen_range(1..=4))).collect()).collect();
            FormalSymbol::new(q(0, 1), rows).unwrap()
        };
        let (a, b, c) = (rnd(), rnd(), rnd());
        assert_eq!(a.product(&b).unwrap(), b.product(&a).unwrap());
        assert_eq!(
            a.product(&b).unwrap().product(&c).unwrap(),
            a.product(&b.product(&c).unwrap()).unwrap()
        );
    }

    #[test]
    fn pseudonorm_examples() {
        let z: FormalSymbol<f64> = FormalSymbol::zero(0.0, 5, 2);
        assert_eq!(z.pseudonorm(0.7, 1.0).value, 0.0);
        let rows: Vec<Vec<f64>> = (0..=40).map(|k| vec![factorial(k)]).collect();
        let a = FormalSymbol::new(0.0, rows).unwrap();
        let v = a.pseudonorm(0.5, 1.0).value;
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn pseudonorm_sub_additive_and_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut rnd = || {
                let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
                FormalSymbol::new(0.0, rows).unwrap()
            };
            let (a, b) = (rnd(), rnd());
            let rho = 0.8;
            let (na, nb) = (a.pseudonorm(rho, 1.0).value, b.pseudonorm(rho, 1.0).value);
            assert!(a.add(&b).unwrap().pseudonorm(rho, 1.0).value <= na + nb + 1e-12);
            assert!(a.product(&b).unwrap().pseudonorm(rho, 1.0).value <= na * nb * (1.0 + 1e-9));
        }
    }

    #[test]
    fn compose_examples() {
        let f = sym(0, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 0]]); // lambda + hbar
        let id = FormalSymbol::identity(q(0, 1), 2, 2);
        assert_eq!(compose(&id, &f).unwrap().coeffs, f.coeffs);
        let g = sym(0, &[&[0, 0, 1], &[0, 0, 0], &[0, 0, 0]]); // I^2
        let c = compose(&g, &f).unwrap();
        assert_eq!(c.coeffs, sym(0, &[&[0, 0, 1], &[0, 2, 0], &[1, 0, 0]]).coeffs);
        let off = sym(0, &[&[3, 1, 0]]);
        assert_eq!(compose(&g, &off).unwrap_err().code(), "CENTER_MISMATCH");
    }

    #[test]
    fn compose_associates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rnd = |c0: i64| {
            let mut rows: Vec<Vec<BigRational>> =
                (0..4).map(|_| (0..4).map(|_| q(rng.gen_range(-3..=3), rng.gen_range(1..=3))).collect()).collect();
            rows[0][0] = q(c0, 1);
            rows
        };
        // centers chain: F: 0 -> 1, H: 1 -> 2, G: 2 -> anything
        let f = FormalSymbol::new(q(0, 1), rnd(1)).unwrap();
        let h = FormalSymbol::new(q(1, 1), rnd(2)).unwrap();
        let g = FormalSymbol::new(q(2, 1), rnd(5)).unwrap();
        let lhs = compose(&g, &compose(&h, &f).unwrap()).unwrap();
        // brute force: truncate the inner composition at a generous degree first
        let gh = compose(&g, &h.truncated(3, 9)).unwrap();
        let rhs = compose(&gh, &f).unwrap();
        assert_eq!(lhs.truncated(3, 3), rhs.truncated(3, 3));
    }

    #[test]
    fn lagrange_examples() {
        let f = FormalSymbol::identity(q(0, 1), 2, 3);
        assert!(is_identity(&lagrange_invert(&f).unwrap()));
        let f = sym(0, &[&[0, 1], &[1, 0], &[0, 0]]);
        let g = lagrange_invert(&f).unwrap();
        assert_eq!(g.coeffs, sym(0, &[&[0, 1], &[-1, 0], &[0, 0]]).coeffs);
        let f = sym(0, &[&[0, 1, 1, 0, 0, 0]]);
        let g = lagrange_invert(&f).unwrap();
        let catalan_signed = [0, 1, -1, 2, -5, 14];
        for (d, &c) in catalan_signed.iter().enumerate() {
            assert_eq!(g.coeffs[0][d], q(c, 1));
        }
        let bad = sym(0, &[&[1, 0, 1]]);
        assert_eq!(lagrange_invert(&bad).unwrap_err().code(), "NOT_INVERTIBLE");
    }

    #[test]
    fn lagrange_round_trip_nonzero_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<BigRational>> =
            (0..5).map(|_| (0..5).map(|_| q(rng.gen_range(-4..=4), rng.gen_range(1..=3))).collect()).collect();
        let mut f = FormalSymbol::new(q(1, 2), rows).unwrap();
        f.coeffs[0][1] = q(3, 2);
        let g = lagrange_invert(&f).unwrap();
        assert!(is_identity(&compose(&f, &g).unwrap()));
    }

    #[test]
    fn float_round_trip_within_tolerance() {
        let rows = vec![vec![0.3, 1.2, -0.4, 0.1], vec![0.2, 0.5, 0.0, 0.3], vec![-0.1, 0.0, 0.2, 0.0]];
        let f = FormalSymbol::new(0.25, rows).unwrap();
        let g = lagrange_invert(&f).unwrap();
        let id = compose(&f, &g).unwrap();
        for (n, r) in id.coeffs.iter().enumerate() {
            for (d, c) in r.iter().enumerate() {
                let e = match (n, d) {
                    (0, 0) => id.center,
                    (0, 1) => 1.0,
                    _ => 0.0,
                };
                assert!((c - e).abs() <= 1e-10, "({n},{d}) {c}");
            }
        }
    }

    #[test]
    fn resum_examples() {
        let rows: Vec<Vec<f64>> = (0..=12).map(|n| vec![n as f64 + 1.0]).collect();
        let a = FormalSymbol::new(0.0, rows).unwrap();
        assert_eq!(resum_count(0.1, 1.0), 10);
        let s = a.resum(0.1, 1.0, Complex64::new(0.0, 0.0)).unwrap();
        let expect: f64 = (0..=10).map(|n| (n as f64 + 1.0) * 0.1f64.powi(n)).sum();
        assert!((s.re - expect).abs() < 1e-15);
        assert_eq!(a.resum(0.05, 1.0, Complex64::new(0.0, 0.0)).unwrap_err().code(), "TRUNCATION_EXCEEDED");
        let c = FormalSymbol::constant(0.0, 4.0, 12, 1);
        for h in [0.1, 0.2, 0.5] {
            assert_eq!(c.resum(h, 1.0, Complex64::new(0.3, 0.0)).unwrap().re, 4.0);
        }
    }

    #[test]
    fn pdo_examples() {
        type C = Complex<BigRational>;
        let c = |r: i64| C::new(q(r, 1), q(0, 1));
        let zeta = BiSymbol::from_terms(3, &[(0, 0, 1, c(1))]);
        let z_sym = FormalSymbol::new(c(0), vec![vec![c(0), c(1)], vec![c(0), c(0)], vec![c(0), c(0)], vec![c(0), c(0)]]).unwrap();
        let r = apply_formal_pdo(&zeta, &z_sym, Quantization::Left);
        assert_eq!(r.coeffs[1][0], C::new(q(0, 1), q(-1, 1)));
        let zmul = BiSymbol::from_terms(3, &[(0, 1, 0, c(1))]);
        let r = apply_formal_pdo(&zmul, &z_sym, Quantization::Left);
        assert_eq!(r.coeffs[0][2], c(1));
        let zeta2 = BiSymbol::from_terms(3, &[(0, 0, 2, c(1))]);
        let z2 = FormalSymbol::new(c(0), vec![vec![c(0), c(0), c(1)], vec![c(0); 3], vec![c(0); 3], vec![c(0); 3]]).unwrap();
        let r = apply_formal_pdo(&zeta2, &z2, Quantization::Left);
        assert_eq!(r.coeffs[2][0], c(-2));
    }

    #[test]
    fn weyl_harmonic_ladder() {
        type C = Complex<BigRational>;
        let c = |r: i64| C::new(q(r, 1), q(0, 1));
        let two_i = C::new(q(0, 1), q(2, 1));
        let p = BiSymbol::from_terms(2, &[(0, 1, 1, two_i)]);
        for k in 0..5usize {
            let mut rows = vec![vec![c(0); k + 1]; 3];
            rows[0][k] = c(1);
            let a = FormalSymbol::new(c(0), rows).unwrap();
            let r = apply_formal_pdo(&p, &a, Quantization::Weyl);
            // 2 hbar (k + 1/2) z^k
            assert_eq!(r.coeffs[1][k], C::new(q(2 * k as i64 + 1, 1), q(0, 1)));
            assert!(r.coeffs[0].iter().all(|x| x.is_zero()));
        }
        let zz = BiSymbol::from_terms(2, &[(0, 1, 1, c(1))]);
        let one = FormalSymbol::constant(c(0), c(1), 2, 0);
        let r = apply_formal_pdo(&zz, &one, Quantization::Weyl);
        assert_eq!(r.coeffs[1][0], C::new(q(0, 1), q(-1, 2)));
    }

    #[test]
    fn pdo_additive_and_multiplicative() {
        let i = Complex64::i();
        let q1 = BiSymbol::from_terms(2, &[(0, 1, 2, Complex64::new(0.5, 0.0)), (1, 0, 1, i)]);
        let q2 = BiSymbol::from_terms(2, &[(0, 2, 1, Complex64::new(-1.0, 0.3))]);
        let rows = vec![vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.0)]; 3];
        let a = FormalSymbol::new(Complex64::new(0.0, 0.0), rows).unwrap();
        for quant in [Quantization::Left, Quantization::Weyl] {
            let s = apply_formal_pdo(&q1.add(&q2), &a, quant);
            let t = apply_formal_pdo(&q1, &a, quant).add(&apply_formal_pdo(&q2, &a, quant)).unwrap();
            for (r1, r2) in s.coeffs.iter().zip(&t.coeffs) {
                for (x, y) in r1.iter().zip(r2) {
                    assert!((x - y).norm() < 1e-14);
                }
            }
        }
        let zq = BiSymbol::from_terms(2, &[(0, 1, 0, Complex64::new(3.0, 0.0))]);
        let r = apply_formal_pdo(&zq, &a, Quantization::Weyl);
        for n in 0..3 {
            for d in 0..3 {
                assert!((r.coeffs[n][d + 1] - 3.0 * a.coeffs[n][d]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn growth_examples() {
        let c = FormalSymbol::constant(0.0, 5.0, 3, 0);
        assert!((c.growth_estimate(1.0) - 5.0).abs() < 1e-12);
        let rows: Vec<Vec<f64>> = (0..=10usize).map(|n| vec![if n == 0 { 1.0 } else { (n as f64).powi(n as i32) }]).collect();
        assert!((FormalSymbol::new(0.0, rows).unwrap().growth_estimate(1.0) - 1.0).abs() < 1e-12);
        let rows: Vec<Vec<f64>> = (0..=10usize)
            .map(|n| vec![2f64.powi(n as i32) * if n == 0 { 1.0 } else { (n as f64).powi(n as i32) }])
            .collect();
        let g = FormalSymbol::new(0.0, rows).unwrap().growth_estimate(1.0);
        assert!((g - 2f64.powf(10.0 / 11.0)).abs() < 1e-12);
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("1.25").unwrap(), q(5, 4));
        assert_eq!(parse_rational("-3/6").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("2e3").unwrap(), q(2000, 1));
        assert_eq!(parse_rational("-0.5e-1").unwrap(), q(-1, 20));
        assert!(parse_rational("abc").is_err());
        assert_eq!(format_rational(&q(5, 4)), "1.25");
        assert_eq!(format_rational(&q(-1, 20)), "-0.05");
        assert_eq!(format_rational(&q(1, 3)), "1/3");
        assert_eq!(format_rational(&q(-7, 1)), "-7");
        for r in [q(5, 4), q(-1, 20), q(1, 3), q(123456789, 1000)] {
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
    }

    #[test]
    fn symbol_file_round_trip() {
        let s = sym(0, &[&[1, 2], &[3, 4]]).scale(&q(1, 3));
        let f = SymbolFile::from_symbol(&s);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"N\":1"));
        let back: SymbolFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_symbol().unwrap(), s);
    }
}
