//! Pseudospectral simulation of the fractional Fisher-KPP equation
//! `∂t u + Λ^α u = f(u)` on periodic boxes, with diagnostics for front
//! spreading, comparative derivative decay, level-set symmetrization and the
//! α-stable heat kernel.

pub mod bessel;
pub mod config;
pub mod datum;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod kernel;
pub mod levelsets;
pub mod quadrature;
pub mod reaction;
pub mod reduction;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{Field, Grid, SpectralOperator};
