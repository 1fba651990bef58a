//! From heat solutions to dispersive long wave fields.
//!
//! [`transform_point`] applies
//!
//! ```text
//! u = sigma * 2 phi_x / phi
//! h = -2 phi_x phi_y / phi^2 + 2 phi_xy / phi - 1
//! ```
//!
//! to analytic seed partials. [`exact_uh`] and [`exact_uh_const`] evaluate the
//! tanh/sech closed forms obtained from the seed `1 + exp(a x - sigma a^2 t + b)`.
//! The transform path stays in exponential form while the closed forms use
//! half-angle hyperbolic functions, so agreement between them is a real check.

use serde::{Deserialize, Serialize};

use crate::field::{FieldPair, FieldSampler, LineSampler, Point, SampleError};
use crate::jetcalc::Branch;
use crate::seedlab::{CoeffExpr, EvalError, SeedField, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformOptions {
    /// A point is a pole when `|phi| < pole_tolerance * (1 + |phi_x| + |phi_y|)`.
    pub pole_tolerance: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            pole_tolerance: 1e-12,
        }
    }
}

fn evaluation_error(p: Point, e: impl std::fmt::Display) -> SampleError {
    SampleError::Evaluation {
        point: p,
        message: e.to_string(),
    }
}

pub fn transform_point(
    field: &SeedField,
    p: Point,
    opts: &TransformOptions,
) -> Result<FieldPair, SampleError> {
    let d = field.partials(p).map_err(|e| evaluation_error(p, e))?;
    if d.phi.abs() < opts.pole_tolerance * (1.0 + d.x.abs() + d.y.abs()) {
        return Err(SampleError::Pole {
            point: p,
            phi: d.phi.abs(),
        });
    }
    let sigma = field.branch().sign_f64();
    let inv = 1.0 / d.phi;
    let u = sigma * 2.0 * d.x * inv;
    let h = -2.0 * d.x * d.y * inv * inv + 2.0 * d.xy * inv - 1.0;
    Ok(FieldPair { u, h })
}

/// Transform-path sampler over a seed.
#[derive(Debug, Clone)]
pub struct TransformSampler {
    pub field: SeedField,
    pub opts: TransformOptions,
}

impl TransformSampler {
    pub fn new(field: SeedField) -> Self {
        TransformSampler {
            field,
            opts: TransformOptions::default(),
        }
    }
}

impl FieldSampler for TransformSampler {
    fn sample(&self, p: Point) -> Result<FieldPair, SampleError> {
        transform_point(&self.field, p, &self.opts)
    }

    /// Linear estimate of how far the zero set of `phi` is: rejects the point when
    /// `phi` could change sign within `radius` along any axis combination.
    fn check_footprint(&self, p: Point, radius: f64) -> Result<(), SampleError> {
        let d = self.field.partials(p).map_err(|e| evaluation_error(p, e))?;
        let slope = d.x.abs() + d.y.abs() + d.t.abs();
        let guard = self.opts.pole_tolerance * (1.0 + d.x.abs() + d.y.abs()) + radius * slope;
        if d.phi.abs() <= guard {
            return Err(SampleError::Pole {
                point: p,
                phi: d.phi.abs(),
            });
        }
        Ok(())
    }
}

/// Parameters of the closed-form solution family.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactParams {
    /// `a(y)`, `b(y)` arbitrary.
    General {
        a: CoeffExpr,
        b: CoeffExpr,
        branch: Branch,
    },
    /// Constant `a` and `b = c y + d`.
    Constant {
        a: f64,
        c: f64,
        d: f64,
        branch: Branch,
    },
}

impl ExactParams {
    pub fn branch(&self) -> Branch {
        match self {
            ExactParams::General { branch, .. } | ExactParams::Constant { branch, .. } => *branch,
        }
    }

    /// The seed `1 + exp(a x - sigma a^2 t + b)` these closed forms come from.
    pub fn seed_spec(&self) -> SeedSpec {
        match self {
            ExactParams::General { a, b, branch } => {
                SeedSpec::single_kernel(*branch, a.clone(), b.clone())
            }
            ExactParams::Constant { a, c, d, branch } => {
                SeedSpec::single_kernel(*branch, CoeffExpr::constant(*a), CoeffExpr::linear(*c, *d))
            }
        }
    }

    pub fn eval(&self, p: Point) -> Result<FieldPair, EvalError> {
        match self {
            ExactParams::General { a, b, branch } => exact_uh(a, b, *branch, p),
            ExactParams::Constant { a, c, d, branch } => Ok(exact_uh_const(*a, *c, *d, *branch, p)),
        }
    }
}

/// Closed form for arbitrary `a(y)`, `b(y)`:
///
/// ```text
/// u = sigma a {1 + tanh(theta/2)}
/// h = a/2 [a' x - 2 sigma a a' t + b'] sech^2(theta/2) + a' tanh(theta/2) + a' - 1
/// ```
///
/// with `theta = a x - sigma a^2 t + b`.
pub fn exact_uh(
    a_expr: &CoeffExpr,
    b_expr: &CoeffExpr,
    branch: Branch,
    p: Point,
) -> Result<FieldPair, EvalError> {
    let sigma = branch.sign_f64();
    let a = a_expr.eval_dual(p.y)?;
    let b = b_expr.eval_dual(p.y)?;
    let theta = a.value * p.x - sigma * a.value * a.value * p.t + b.value;
    let half = 0.5 * theta;
    let th = half.tanh();
    let sech = 1.0 / half.cosh();
    let u = sigma * a.value * (1.0 + th);
    let slope = a.deriv * p.x - 2.0 * sigma * a.value * a.deriv * p.t + b.deriv;
    let h = 0.5 * a.value * slope * sech * sech + a.deriv * th + a.deriv - 1.0;
    Ok(FieldPair { u, h })
}

/// Constant-coefficient closed form:
/// `u = sigma a [1 + tanh(s/2)]`, `h = (a c / 2) sech^2(s/2) - 1`, `s = a x - sigma a^2 t + c y + d`.
pub fn exact_uh_const(a: f64, c: f64, d: f64, branch: Branch, p: Point) -> FieldPair {
    let sigma = branch.sign_f64();
    let s = a * p.x - sigma * a * a * p.t + c * p.y + d;
    let half = 0.5 * s;
    let sech = 1.0 / half.cosh();
    FieldPair {
        u: sigma * a * (1.0 + half.tanh()),
        h: 0.5 * a * c * sech * sech - 1.0,
    }
}

/// Travelling wave of the (1+1)-dimensional reduction, `a = c`, `z = x + y`.
pub fn reduce_1plus1(a: f64, d: f64, branch: Branch, z: f64, t: f64) -> FieldPair {
    exact_uh_const(a, a, d, branch, Point::new(z, 0.0, t))
}

/// Closed-form sampler.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    pub params: ExactParams,
}

impl FieldSampler for ExactSampler {
    fn sample(&self, p: Point) -> Result<FieldPair, SampleError> {
        self.params.eval(p).map_err(|e| evaluation_error(p, e))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReducedWave {
    pub a: f64,
    pub d: f64,
    pub branch: Branch,
}

impl LineSampler for ReducedWave {
    fn sample(&self, z: f64, t: f64) -> Result<FieldPair, SampleError> {
        Ok(reduce_1plus1(self.a, self.d, self.branch, z, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seedlab::{HeatPolynomial, Kernel};

    fn expr(s: &str) -> CoeffExpr {
        CoeffExpr::parse(s).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constant_seed_gives_vacuum() {
        let f = SeedField::new(SeedSpec::constant(Branch::Plus, 2.0)).unwrap();
        let out =
            transform_point(&f, Point::new(1.0, 2.0, 3.0), &TransformOptions::default()).unwrap();
        assert_eq!(out, FieldPair::VACUUM);
    }

    #[test]
    fn kernel_hand_values() {
        let f =
            SeedField::new(SeedSpec::single_kernel(Branch::Plus, expr("1"), expr("y"))).unwrap();
        let p = Point::new(3f64.ln(), 0.0, 0.0);
        let out = transform_point(&f, p, &TransformOptions::default()).unwrap();
        assert!(close(out.u, 1.5, 1e-14), "{out:?}");
        assert!(close(out.h, -0.625, 1e-14), "{out:?}");
        let closed = exact_uh(&expr("1"), &expr("y"), Branch::Plus, p).unwrap();
        assert!(close(closed.u, 1.5, 1e-14), "{closed:?}");
        assert!(close(closed.h, -0.625, 1e-14), "{closed:?}");
    }

    #[test]
    fn pole_is_reported() {
        let spec = SeedSpec {
            branch: Branch::Plus,
            constant_term: 0.0,
            kernels: Vec::<Kernel>::new(),
            poly: Some(HeatPolynomial {
                c2: expr("1"),
                c1: expr("0"),
                c0: expr("0"),
            }),
        };
        let f = SeedField::new(spec).unwrap();
        let err = transform_point(&f, Point::ORIGIN, &TransformOptions::default()).unwrap_err();
        assert!(matches!(err, SampleError::Pole { .. }));
        assert_eq!(err.point(), Point::ORIGIN);
        let sampler = TransformSampler::new(f);
        assert!(sampler
            .check_footprint(Point::new(0.01, 0.0, 0.0), 0.05)
            .is_err());
        assert!(sampler
            .check_footprint(Point::new(1.0, 0.0, 0.0), 0.05)
            .is_ok());
    }

    #[test]
    fn closed_form_at_theta_zero() {
        let out = exact_uh(
            &expr("1"),
            &expr("0"),
            Branch::Plus,
            Point::new(0.0, 4.0, 0.0),
        )
        .unwrap();
        assert_eq!(out, FieldPair::new(1.0, -1.0));
    }

    #[test]
    fn constant_closed_form() {
        let out = exact_uh_const(1.0, 1.0, 0.0, Branch::Plus, Point::ORIGIN);
        assert_eq!(out, FieldPair::new(1.0, -0.5));
        let minus = exact_uh_const(1.0, 1.0, 0.0, Branch::Minus, Point::ORIGIN);
        assert_eq!(minus, FieldPair::new(-1.0, -0.5));
    }

    #[test]
    fn reduction_at_origin() {
        assert_eq!(
            reduce_1plus1(1.0, 0.0, Branch::Plus, 0.0, 0.0),
            FieldPair::new(1.0, -0.5)
        );
    }

    #[test]
    fn exact_params_dispatch() {
        let p = Point::new(0.3, -0.7, 0.2);
        let general = ExactParams::General {
            a: expr("1.2"),
            b: expr("0.5*y + 0.1"),
            branch: Branch::Minus,
        };
        let constant = ExactParams::Constant {
            a: 1.2,
            c: 0.5,
            d: 0.1,
            branch: Branch::Minus,
        };
        let (g, c) = (general.eval(p).unwrap(), constant.eval(p).unwrap());
        assert!(close(g.u, c.u, 1e-14) && close(g.h, c.h, 1e-14));
        let seed = SeedField::new(constant.seed_spec()).unwrap();
        let t = transform_point(&seed, p, &TransformOptions::default()).unwrap();
        assert!(close(t.u, c.u, 1e-12) && close(t.h, c.h, 1e-12));
    }
}
