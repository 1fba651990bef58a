use thiserror::Error;

use super::dual::EvalError;
use super::expr::CoeffExpr;
use crate::field::Point;
use crate::jetcalc::{Branch, JetIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeedError {
    #[error("seed is identically zero")]
    ZeroSeed,
    #[error("partial derivative {0} is not available analytically")]
    UnsupportedIndex(JetIndex),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `amplitude * exp(a(y) x - sigma * time_factor * a(y)^2 t + b(y))`.
///
/// `time_factor` is 1 for heat solutions; any other value breaks the heat
/// equation and only exists to build negative controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub amplitude: f64,
    pub a: CoeffExpr,
    pub b: CoeffExpr,
    pub time_factor: f64,
}

impl Kernel {
    pub fn new(amplitude: f64, a: CoeffExpr, b: CoeffExpr) -> Self {
        Kernel {
            amplitude,
            a,
            b,
            time_factor: 1.0,
        }
    }
}

/// `c2(y) (x^2 - 2 sigma t) + c1(y) x + c0(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatPolynomial {
    pub c2: CoeffExpr,
    pub c1: CoeffExpr,
    pub c0: CoeffExpr,
}

/// A superposition of heat solutions for one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSpec {
    pub branch: Branch,
    pub constant_term: f64,
    pub kernels: Vec<Kernel>,
    pub poly: Option<HeatPolynomial>,
}

impl SeedSpec {
    pub fn constant(branch: Branch, value: f64) -> Self {
        SeedSpec {
            branch,
            constant_term: value,
            kernels: Vec::new(),
            poly: None,
        }
    }

    /// `1 + exp(a(y) x - sigma a(y)^2 t + b(y))`.
    pub fn single_kernel(branch: Branch, a: CoeffExpr, b: CoeffExpr) -> Self {
        SeedSpec {
            branch,
            constant_term: 1.0,
            kernels: vec![Kernel::new(1.0, a, b)],
            poly: None,
        }
    }

    /// Multiplies every component by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.constant_term *= lambda;
        for k in &mut out.kernels {
            k.amplitude *= lambda;
        }
        if let Some(p) = &mut out.poly {
            let scale = |e: &CoeffExpr| {
                CoeffExpr::from_ast(super::expr::Expr::binary(
                    super::expr::BinOp::Mul,
                    CoeffExpr::constant(lambda).ast().clone(),
                    e.ast().clone(),
                ))
            };
            *p = HeatPolynomial {
                c2: scale(&p.c2),
                c1: scale(&p.c1),
                c0: scale(&p.c0),
            };
        }
        out
    }

    fn is_structurally_zero(&self) -> bool {
        self.constant_term == 0.0
            && self.kernels.iter().all(|k| k.amplitude == 0.0)
            && self.poly.as_ref().is_none_or(|p| {
                p.c2.is_literal_zero() && p.c1.is_literal_zero() && p.c0.is_literal_zero()
            })
    }
}

/// Every analytically available partial of `phi` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeedPartials {
    pub phi: f64,
    pub x: f64,
    pub xx: f64,
    pub xxx: f64,
    pub y: f64,
    pub t: f64,
    pub xy: f64,
    pub xxy: f64,
}

impl SeedPartials {
    pub const SUPPORTED: [JetIndex; 8] = [
        JetIndex::PHI,
        JetIndex::X,
        JetIndex::XX,
        JetIndex { i: 3, j: 0, k: 0 },
        JetIndex::Y,
        JetIndex::T,
        JetIndex::XY,
        JetIndex { i: 2, j: 1, k: 0 },
    ];

    pub fn get(&self, idx: JetIndex) -> Option<f64> {
        Some(match (idx.i, idx.j, idx.k) {
            (0, 0, 0) => self.phi,
            (1, 0, 0) => self.x,
            (2, 0, 0) => self.xx,
            (3, 0, 0) => self.xxx,
            (0, 1, 0) => self.y,
            (0, 0, 1) => self.t,
            (1, 1, 0) => self.xy,
            (2, 1, 0) => self.xxy,
            _ => return None,
        })
    }

    fn accumulate(&mut self, other: &SeedPartials) {
        self.phi += other.phi;
        self.x += other.x;
        self.xx += other.xx;
        self.xxx += other.xxx;
        self.y += other.y;
        self.t += other.t;
        self.xy += other.xy;
        self.xxy += other.xxy;
    }

    fn all_finite(&self) -> bool {
        [
            self.phi, self.x, self.xx, self.xxx, self.y, self.t, self.xy, self.xxy,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// A heat solution ready for pointwise evaluation. Immutable and shareable.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedField {
    spec: SeedSpec,
}

impl SeedField {
    /// Rejects only the identically zero seed; constant seeds are allowed.
    pub fn new(spec: SeedSpec) -> Result<Self, SeedError> {
        if spec.is_structurally_zero() {
            return Err(SeedError::ZeroSeed);
        }
        Ok(SeedField { spec })
    }

    pub fn spec(&self) -> &SeedSpec {
        &self.spec
    }

    pub fn branch(&self) -> Branch {
        self.spec.branch
    }

    pub fn partials(&self, p: Point) -> Result<SeedPartials, SeedError> {
        let sigma = self.spec.branch.sign_f64();
        let mut total = SeedPartials {
            phi: self.spec.constant_term,
            ..SeedPartials::default()
        };

        for k in &self.spec.kernels {
            let a = k.a.eval_dual(p.y)?;
            let b = k.b.eval_dual(p.y)?;
            let rate = sigma * k.time_factor;
            let theta = a.value * p.x - rate * a.value * a.value * p.t + b.value;
            let theta_y = a.deriv * p.x - 2.0 * rate * a.value * a.deriv * p.t + b.deriv;
            let e = k.amplitude * theta.exp();
            let av = a.value;
            total.accumulate(&SeedPartials {
                phi: e,
                x: av * e,
                xx: av * av * e,
                xxx: av * av * av * e,
                y: theta_y * e,
                t: -rate * av * av * e,
                xy: (a.deriv + av * theta_y) * e,
                xxy: (2.0 * av * a.deriv + av * av * theta_y) * e,
            });
        }

        if let Some(poly) = &self.spec.poly {
            let c2 = poly.c2.eval_dual(p.y)?;
            let c1 = poly.c1.eval_dual(p.y)?;
            let c0 = poly.c0.eval_dual(p.y)?;
            let q = p.x * p.x - 2.0 * sigma * p.t;
            total.accumulate(&SeedPartials {
                phi: c2.value * q + c1.value * p.x + c0.value,
                x: 2.0 * c2.value * p.x + c1.value,
                xx: 2.0 * c2.value,
                xxx: 0.0,
                y: c2.deriv * q + c1.deriv * p.x + c0.deriv,
                t: -2.0 * sigma * c2.value,
                xy: 2.0 * c2.deriv * p.x + c1.deriv,
                xxy: 2.0 * c2.deriv,
            });
        }

        if !total.all_finite() {
            return Err(EvalError::NonFinite { y: p.y }.into());
        }
        Ok(total)
    }

    pub fn partial(&self, p: Point, idx: JetIndex) -> Result<f64, SeedError> {
        if !SeedPartials::SUPPORTED.contains(&idx) {
            return Err(SeedError::UnsupportedIndex(idx));
        }
        let all = self.partials(p)?;
        Ok(all.get(idx).expect("supported index"))
    }

    pub fn value(&self, p: Point) -> Result<f64, SeedError> {
        Ok(self.partials(p)?.phi)
    }

    /// `phi_t + sigma * phi_xx`; zero for a genuine heat solution.
    pub fn heat_residual(&self, p: Point) -> Result<f64, SeedError> {
        let d = self.partials(p)?;
        Ok(d.t + self.spec.branch.sign_f64() * d.xx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr(s: &str) -> CoeffExpr {
        CoeffExpr::parse(s).unwrap()
    }

    fn unit_kernel(branch: Branch) -> SeedField {
        SeedField::new(SeedSpec::single_kernel(branch, expr("1"), expr("0"))).unwrap()
    }

    #[test]
    fn constant_seed() {
        let f = SeedField::new(SeedSpec::constant(Branch::Plus, 1.0)).unwrap();
        let p = Point::new(0.3, -1.2, 0.7);
        let d = f.partials(p).unwrap();
        assert_eq!(d.phi, 1.0);
        for idx in &SeedPartials::SUPPORTED[1..] {
            assert_eq!(f.partial(p, *idx).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_seed_rejected() {
        assert_eq!(
            SeedField::new(SeedSpec::constant(Branch::Plus, 0.0)).unwrap_err(),
            SeedError::ZeroSeed
        );
    }

    #[test]
    fn kernel_at_origin() {
        let f = unit_kernel(Branch::Plus);
        let d = f.partials(Point::new(0.0, 5.0, 0.0)).unwrap();
        assert_eq!(d.phi, 2.0);
        assert_eq!(d.x, 1.0);
    }

    #[test]
    fn kernel_hand_values() {
        let spec = SeedSpec::single_kernel(Branch::Plus, expr("1"), expr("1*y"));
        let f = SeedField::new(spec).unwrap();
        let d = f.partials(Point::new(3f64.ln(), 0.0, 0.0)).unwrap();
        for (got, want) in [(d.phi, 4.0), (d.x, 3.0), (d.y, 3.0), (d.xy, 3.0)] {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn heat_polynomial() {
        let poly = HeatPolynomial {
            c2: expr("1"),
            c1: expr("0"),
            c0: expr("0"),
        };
        let spec = SeedSpec {
            branch: Branch::Plus,
            constant_term: 0.0,
            kernels: vec![],
            poly: Some(poly),
        };
        let f = SeedField::new(spec).unwrap();
        let p = Point::new(1.5, 0.0, 0.25);
        assert_eq!(f.value(p).unwrap(), 1.5 * 1.5 - 0.5);
        let d = f.partials(p).unwrap();
        assert_eq!(d.t, -2.0);
        assert_eq!(d.xx, 2.0);
        assert_eq!(f.heat_residual(p).unwrap(), 0.0);
    }

    #[test]
    fn unsupported_index() {
        let f = unit_kernel(Branch::Minus);
        let idx = JetIndex::new(0, 2, 0).unwrap();
        assert_eq!(
            f.partial(Point::ORIGIN, idx).unwrap_err(),
            SeedError::UnsupportedIndex(idx)
        );
    }

    #[test]
    fn split_kernels_match_single() {
        let one = SeedField::new(SeedSpec::single_kernel(
            Branch::Plus,
            expr("0.7"),
            expr("0.2*y"),
        ))
        .unwrap();
        let mut spec = SeedSpec::single_kernel(Branch::Plus, expr("0.7"), expr("0.2*y"));
        spec.kernels[0].amplitude = 0.5;
        spec.kernels.push(spec.kernels[0].clone());
        let two = SeedField::new(spec).unwrap();
        for p in [Point::new(0.4, -0.3, 0.2), Point::new(-2.0, 1.0, 0.9)] {
            let (a, b) = (one.partials(p).unwrap(), two.partials(p).unwrap());
            for idx in SeedPartials::SUPPORTED {
                let (x, y) = (a.get(idx).unwrap(), b.get(idx).unwrap());
                assert!(
                    (x - y).abs() <= 1e-15 * x.abs().max(1.0),
                    "{idx}: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn detuned_kernel_breaks_heat_equation() {
        for branch in Branch::BOTH {
            let mut spec = SeedSpec::single_kernel(branch, expr("1.3"), expr("0"));
            spec.kernels[0].time_factor = 2.0;
            let f = SeedField::new(spec).unwrap();
            let p = Point::new(0.2, 0.0, 0.1);
            let theta: f64 = 1.3 * 0.2 - branch.sign_f64() * 2.0 * 1.69 * 0.1;
            let expected = 1.69 * theta.exp();
            let r = f.heat_residual(p).unwrap();
            assert!((r.abs() - expected).abs() < 1e-12, "{r} vs {expected}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let f = unit_kernel(Branch::Plus);
        assert!(matches!(
            f.partials(Point::new(1e4, 0.0, 0.0)),
            Err(SeedError::Eval(EvalError::NonFinite { .. }))
        ));
    }
}
