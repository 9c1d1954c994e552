//! Multivariate bounded variation toolkit: Vitali / Hardy–Krause variation
//! over ladders, simple functions over set families with complexity-weighted
//! variation bounds, star discrepancy, and Koksma–Hlawka error certificates
//! for quasi-Monte Carlo integration on `[0,1]^d`.

pub mod discrepancy;
pub mod error;
pub mod function;
pub mod grid;
pub mod kh;
pub mod quadrature;
pub mod simple_fn;
pub mod suite;
pub mod sum;
pub mod variation;
pub mod zoo;

mod jsonf;

pub use error::{Error, Result};
pub use function::{from_fn, GridFunction, Tabulated};
pub use grid::{AxisSubset, BoxV, Ladder, Point};
