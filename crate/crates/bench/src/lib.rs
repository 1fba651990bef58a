//! Shared fixtures for the criterion benches.

use dlw_core::seedlab::Kernel;
use dlw_core::transform::TransformSampler;
use dlw_core::{Branch, CoeffExpr, GridSpec, SeedField, SeedSpec};

fn expr(s: &str) -> CoeffExpr {
    CoeffExpr::parse(s).expect("fixture expression")
}

/// Seed `1 + exp(x + y - sigma t)`.
pub fn single_kernel(branch: Branch) -> TransformSampler {
    TransformSampler::new(
        SeedField::new(SeedSpec::single_kernel(branch, expr("1"), expr("1*y"))).expect("seed"),
    )
}

pub fn two_kernel(branch: Branch) -> TransformSampler {
    let mut spec = SeedSpec::single_kernel(branch, expr("1"), expr("0.3*y"));
    spec.kernels
        .push(Kernel::new(1.0, expr("1.6"), expr("-0.4*y")));
    TransformSampler::new(SeedField::new(spec).expect("seed"))
}

pub fn variable_coefficients(branch: Branch) -> SeedField {
    SeedField::new(SeedSpec::single_kernel(
        branch,
        expr("1 + 0.5*tanh(y)"),
        expr("0.2*y"),
    ))
    .expect("seed")
}

/// 21 x 21 x 5 points over `[-3, 3]^2 x [0, 1]`.
pub fn standard_grid() -> GridSpec {
    GridSpec {
        x0: -3.0,
        x1: 3.0,
        nx: 21,
        y0: -3.0,
        y1: 3.0,
        ny: 21,
        t0: 0.0,
        t1: 1.0,
        nt: 5,
    }
}
