//! Numerical toolkit for heat kernels of higher-order elliptic operators:
//! symbols and their sharp Gaussian constants, form-based discretization,
//! Kato-class potentials, spectral heat kernels, Finsler-type distances and
//! exponentially twisted forms.

pub mod discretize;
pub mod expr;
pub mod field;
pub mod finsler;
pub mod heatkernel;
pub mod kato;
pub mod linalg;
pub mod quadrature;
pub mod sparse;
pub mod symbol;
pub mod twist;

pub use discretize::{assemble, DiscreteOperator, Grid};
pub use expr::{parse, Expr};
pub use field::{CoefficientField, DomainSpec};
pub use symbol::{sharp_constants, MultiIndex, SymbolSpec};
