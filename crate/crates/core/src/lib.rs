//! Semiclassical spectral toolkit: Bohr–Sommerfeld predictions with Maslov
//! correction for one-dimensional polynomial Hamiltonians, the supporting
//! phase-space geometry, Bargmann-side quasimode checks, formal analytic
//! symbol calculus and reference spectra of the Weyl-quantized operator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bargmann;
pub mod bs;
pub mod error;
pub mod geometry;
pub mod maslov;
pub mod ode;
pub mod quad;
pub mod quasimode;
pub mod series;
pub mod spectrum;
pub mod symbol;

pub use error::{Error, Result};
pub use symbol::{SymbolDef, Term};

/// Shortest decimal that round-trips the double (at most 17 significant digits).
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:?}")
}
