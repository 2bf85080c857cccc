//! Arbitrary-precision toolkit for eta quotients and Rademacher sums:
//! exact q-series arithmetic, Fourier coefficients of modular functions via
//! the circle method, modular-curve and identity verification against a
//! bundled registry, two- and three-loop sunrise Feynman integrals by
//! nearest-cusp expansion, and Eichler-integral periods and L-values.

pub mod arith;
pub mod error;
pub mod num;

pub use error::{Error, Result};
pub use num::{BigComplex, BigReal};
pub mod curve;
pub mod eichler;
pub mod etaq;
pub mod expr;
pub mod modular;
pub mod qseries;
pub mod quad;
pub mod rademacher;
pub mod registry;
pub mod sunrise;
