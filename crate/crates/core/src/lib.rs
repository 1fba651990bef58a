//! Exact solutions of the (2+1)-dimensional dispersive long wave system
//!
//! ```text
//! u_yt + h_xx + (u^2)_xy / 2 = 0
//! h_t + (u h + u + u_xy)_x = 0
//! ```
//!
//! built from solutions `phi` of the heat-type equation `phi_t + sigma*phi_xx = 0`
//! through `u = sigma*2*phi_x/phi`, `h = -2*phi_x*phi_y/phi^2 + 2*phi_xy/phi - 1`.
//!
//! * [`jetcalc`] and [`balance`] re-derive the transformation in exact arithmetic.
//! * [`seedlab`] builds heat solutions from user expressions.
//! * [`transform`] maps seeds to fields and evaluates the closed-form solutions.
//! * [`residual`] certifies any field sampler with finite differences.

pub mod balance;
pub mod field;
pub mod jetcalc;
pub mod residual;
pub mod seedlab;
pub mod transform;

pub use balance::{derive, BalanceExponents, BalanceReport, DerivationCheck};
pub use field::{FieldPair, FieldSampler, LineSampler, Point, SampleError};
pub use jetcalc::{Branch, CoeffSymbol, Direction, JetIndex, JetPoly};
pub use residual::{GridSpec, ResidualReport, StencilConfig};
pub use seedlab::{CoeffExpr, SeedField, SeedSpec};
pub use transform::{ExactParams, TransformOptions};
