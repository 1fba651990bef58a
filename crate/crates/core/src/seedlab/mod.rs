//! Solutions of the linear seed equation `phi_t + sigma * phi_xx = 0`.
//!
//! Seeds are superpositions of a constant, exponential kernels with arbitrary
//! `y`-dependent coefficients given as [`CoeffExpr`] strings, and a quadratic heat
//! polynomial. All listed partial derivatives are evaluated analytically, with
//! `y`-derivatives of the coefficients obtained by forward-mode [`Dual`] numbers.

mod dual;
mod expr;
mod seed;

pub use dual::{Dual, EvalError};
pub use expr::{BinOp, CoeffExpr, Expr, Func, ParseError};
pub use seed::{HeatPolynomial, Kernel, SeedError, SeedField, SeedPartials, SeedSpec};
