//! Homogeneous balance derivation of the linearizing transformation.
//!
//! The derivation runs in three steps: balance the leading derivative degrees to
//! fix the ansatz shape, solve the ODE system for `f(phi)` and `g(phi)` that kills
//! the leading terms, and show the remaining residual factors through the heat
//! operator `phi_t + sigma*phi_xx`. Every step is an exact computation on
//! [`JetPoly`] values.

use std::fmt;

use num_rational::BigRational;
use num_traits::One;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::jetcalc::{rat, Branch, CoeffSymbol, Direction, JetError, JetIndex, JetPoly};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BalanceError {
    #[error("balance system has no nonnegative solution in [0, {bound}]^6")]
    NoSolution { bound: u32 },
    #[error("balance system has {count} solutions in [0, {bound}]^6, expected one")]
    NotUnique { count: usize, bound: u32 },
    #[error("unsupported exponent tuple {0}")]
    UnsupportedExponents(BalanceExponents),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("symbolic check failed on the {} branch:\n{}", .0.branch, .0.failure_summary())]
    CheckFailed(Box<DerivationCheck>),
}

/// Orders `(l, m, n)` of the leading derivative of `f(phi)` and `(p, q, r)` of `g(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BalanceExponents {
    pub l: u32,
    pub m: u32,
    pub n: u32,
    pub p: u32,
    pub q: u32,
    pub r: u32,
}

impl BalanceExponents {
    pub const fn new(l: u32, m: u32, n: u32, p: u32, q: u32, r: u32) -> Self {
        BalanceExponents { l, m, n, p, q, r }
    }

    /// Both sides of the six balance equations. The first three balance
    /// `(u^2)_xy` against `h_xx`, the last three `(uh)_x` against `u_xxy`.
    pub fn balance_sides(&self) -> [(u32, u32); 6] {
        let BalanceExponents { l, m, n, p, q, r } = *self;
        [
            (2 * l + 1, p + 2),
            (2 * m + 1, q),
            (2 * n, r),
            (l + p + 1, l + 2),
            (m + q, m + 1),
            (n + r, n),
        ]
    }

    pub fn is_balanced(&self) -> bool {
        self.balance_sides().iter().all(|(a, b)| a == b)
    }
}

impl fmt::Display for BalanceExponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{},{},{})",
            self.l, self.m, self.n, self.p, self.q, self.r
        )
    }
}

/// Search box for the exponent solver.
pub const EXPONENT_BOUND: u32 = 4;

/// Exhaustive search of `[0, bound]^6` for tuples accepted by `accept`; requires
/// exactly one hit.
pub fn solve_exponents_with(
    bound: u32,
    accept: impl Fn(&BalanceExponents) -> bool,
) -> Result<BalanceExponents, BalanceError> {
    let mut hits = Vec::new();
    for l in 0..=bound {
        for m in 0..=bound {
            for n in 0..=bound {
                for p in 0..=bound {
                    for q in 0..=bound {
                        for r in 0..=bound {
                            let e = BalanceExponents::new(l, m, n, p, q, r);
                            if accept(&e) {
                                hits.push(e);
                            }
                        }
                    }
                }
            }
        }
    }
    match hits.as_slice() {
        [] => Err(BalanceError::NoSolution { bound }),
        [only] => Ok(*only),
        _ => Err(BalanceError::NotUnique {
            count: hits.len(),
            bound,
        }),
    }
}

/// Step one: the unique exponent tuple balancing the highest-degree terms.
pub fn solve_balance_exponents() -> Result<BalanceExponents, BalanceError> {
    solve_exponents_with(EXPONENT_BOUND, BalanceExponents::is_balanced)
}

/// The quasisolution ansatz `u = f' phi_x`, `h = g'' phi_x phi_y + g' phi_xy + A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    pub u: JetPoly,
    pub h: JetPoly,
}

pub fn build_ansatz(
    exponents: BalanceExponents,
    a_const: &BigRational,
) -> Result<Ansatz, BalanceError> {
    if exponents != BalanceExponents::new(1, 0, 0, 1, 1, 0) {
        return Err(BalanceError::UnsupportedExponents(exponents));
    }
    let phi_x = JetPoly::jet(JetIndex::X);
    let phi_y = JetPoly::jet(JetIndex::Y);
    let phi_xy = JetPoly::jet(JetIndex::XY);
    let f1 = JetPoly::symbol(CoeffSymbol::f(1));
    let g1 = JetPoly::symbol(CoeffSymbol::g(1));
    let g2 = JetPoly::symbol(CoeffSymbol::g(2));

    let u = &f1 * &phi_x;
    let h = &(&(&g2 * &(&phi_x * &phi_y)) + &(&g1 * &phi_xy)) + &JetPoly::constant(a_const.clone());
    Ok(Ansatz { u, h })
}

/// Left-hand sides of the two field equations evaluated on the ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `u_yt + h_xx + (u^2)_xy / 2`
    pub e1: JetPoly,
    /// `h_t + (u h + u + u_xy)_x`
    pub e2: JetPoly,
}

pub fn residuals_of(ansatz: &Ansatz) -> Result<Residuals, JetError> {
    use Direction::{T, X, Y};
    let Ansatz { u, h } = ansatz;
    let half = BigRational::new(1.into(), 2.into());

    let u_yt = u.derivative_chain(&[Y, T])?;
    let h_xx = h.derivative_chain(&[X, X])?;
    let u_sq_xy = u.pow(2).derivative_chain(&[X, Y])?.scale(&half);
    let e1 = &(&u_yt + &h_xx) + &u_sq_xy;

    let h_t = h.total_derivative(T)?;
    let flux = &(&(u * h) + u) + &u.derivative_chain(&[X, Y])?;
    let e2 = &h_t + &flux.total_derivative(X)?;
    Ok(Residuals { e1, e2 })
}

/// Formal residuals for the solved exponents with additive constant `a_const`.
pub fn build_residuals(a_const: &BigRational) -> Result<Residuals, BalanceError> {
    let ansatz = build_ansatz(solve_balance_exponents()?, a_const)?;
    Ok(residuals_of(&ansatz)?)
}

/// The degree-four jet monomial `phi_x^3 phi_y` whose coefficients give the ODE system.
pub const LEADING_JETS: [JetIndex; 4] = [JetIndex::X, JetIndex::X, JetIndex::X, JetIndex::Y];

/// `phi_t + sigma * phi_xx`.
pub fn heat_operator(branch: Branch) -> JetPoly {
    &JetPoly::jet(JetIndex::T) + &JetPoly::jet(JetIndex::XX).scale(&branch.sign_rational())
}

/// `[phi_x phi_y g''' + g''(phi_x D_y + phi_y D_x + phi_xy) + c D_x D_y] w`
pub fn factor_operator(w: &JetPoly, last_coeff: &JetPoly) -> Result<JetPoly, JetError> {
    use Direction::{X, Y};
    let phi_x = JetPoly::jet(JetIndex::X);
    let phi_y = JetPoly::jet(JetIndex::Y);
    let phi_xy = JetPoly::jet(JetIndex::XY);
    let g2 = JetPoly::symbol(CoeffSymbol::g(2));
    let g3 = JetPoly::symbol(CoeffSymbol::g(3));

    let first = &(&(&phi_x * &phi_y) * &g3) * w;
    let middle = &(&(&(&phi_x * &w.total_derivative(Y)?) + &(&phi_y * &w.total_derivative(X)?))
        + &(&phi_xy * w))
        * &g2;
    let last = last_coeff * &w.derivative_chain(&[X, Y])?;
    Ok(&(&first + &middle) + &last)
}

/// Result of the exact symbolic checks for one branch. Passes iff every stored
/// polynomial is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivationCheck {
    pub branch: Branch,
    /// The two ODEs for `f`, `g` after substituting the logarithms.
    pub ode_residuals: Vec<JetPoly>,
    /// `g' g'' + g'''` and `g'^2 + 2 g''` after substitution.
    pub identity_residuals: Vec<JetPoly>,
    /// `e1` after substitution and heat reduction.
    pub e1_residual: Option<JetPoly>,
    pub e2_residual: Option<JetPoly>,
    /// `e1 - rhs1` and `e2 - rhs2` without the heat constraint.
    pub factorization_deltas: Option<(JetPoly, JetPoly)>,
}

impl DerivationCheck {
    fn stored(&self) -> impl Iterator<Item = (&'static str, &JetPoly)> {
        let ode = self.ode_residuals.iter().map(|p| ("ode", p));
        let ident = self.identity_residuals.iter().map(|p| ("identity", p));
        let e = self
            .e1_residual
            .iter()
            .map(|p| ("e1 after heat reduction", p))
            .chain(
                self.e2_residual
                    .iter()
                    .map(|p| ("e2 after heat reduction", p)),
            );
        let fact = self
            .factorization_deltas
            .iter()
            .flat_map(|(a, b)| [("factorization delta 1", a), ("factorization delta 2", b)]);
        ode.chain(ident).chain(e).chain(fact)
    }

    pub fn passes(&self) -> bool {
        self.stored().all(|(_, p)| p.is_zero())
    }

    /// Each nonzero polynomial, labelled.
    pub fn failure_summary(&self) -> String {
        self.stored()
            .filter(|(_, p)| !p.is_zero())
            .map(|(label, p)| format!("  {label}: {p}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn verdict(&self) -> &'static str {
        if self.passes() {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// Step two: the leading-degree coefficients vanish for `f = sigma 2 ln phi`,
/// `g = 2 ln phi`, together with the derived identities for `g`.
pub fn check_ode_system(branch: Branch) -> Result<DerivationCheck, BalanceError> {
    let residuals = build_residuals(&rat(-1))?;
    let ode_residuals = [&residuals.e1, &residuals.e2]
        .into_iter()
        .map(|e| e.coefficient_of(&LEADING_JETS).specialize_log(branch))
        .collect::<Result<Vec<_>, _>>()?;

    let g1 = JetPoly::symbol(CoeffSymbol::g(1));
    let g2 = JetPoly::symbol(CoeffSymbol::g(2));
    let g3 = JetPoly::symbol(CoeffSymbol::g(3));
    let identities = [&(&g1 * &g2) + &g3, &g1.pow(2) + &g2.scale(&rat(2))];
    let identity_residuals = identities
        .iter()
        .map(|p| p.specialize_log(branch))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(DerivationCheck {
        branch,
        ode_residuals,
        identity_residuals,
        e1_residual: None,
        e2_residual: None,
        factorization_deltas: None,
    })
}

/// Residuals with the logarithms substituted and all time derivatives eliminated
/// through the heat equation.
pub fn heat_reduced_residuals(
    branch: Branch,
    a_const: &BigRational,
) -> Result<Residuals, BalanceError> {
    let residuals = build_residuals(a_const)?;
    let reduce = |e: &JetPoly| -> Result<JetPoly, JetError> {
        e.specialize_log(branch)?.reduce_heat(branch)
    };
    Ok(Residuals {
        e1: reduce(&residuals.e1)?,
        e2: reduce(&residuals.e2)?,
    })
}

/// The two right-hand sides expressing the residuals through the heat operator:
/// `sigma * L[H]` and `L[H]` with `L` from [`factor_operator`] using `g'`.
pub fn factorized_rhs(branch: Branch) -> Result<(JetPoly, JetPoly), JetError> {
    let heat = heat_operator(branch);
    let g1 = JetPoly::symbol(CoeffSymbol::g(1));
    let rhs2 = factor_operator(&heat, &g1)?;
    let rhs1 = rhs2.scale(&branch.sign_rational());
    Ok((rhs1, rhs2))
}

/// Step three: the residuals vanish under the heat constraint, and they equal the
/// factorized forms identically.
pub fn verify_factorization(branch: Branch) -> Result<DerivationCheck, BalanceError> {
    let mut check = check_ode_system(branch)?;
    let a = rat(-1);

    let reduced = heat_reduced_residuals(branch, &a)?;
    check.e1_residual = Some(reduced.e1);
    check.e2_residual = Some(reduced.e2);

    let residuals = build_residuals(&a)?;
    let (rhs1, rhs2) = factorized_rhs(branch)?;
    let delta1 = (&residuals.e1 - &rhs1).specialize_log(branch)?;
    let delta2 = (&residuals.e2 - &rhs2).specialize_log(branch)?;
    check.factorization_deltas = Some((delta1, delta2));
    Ok(check)
}

/// Closed form of a logarithmic ansatz function, e.g. `f = ±2 ln(phi)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogForm {
    pub name: char,
    pub factor: i64,
    /// Carries the branch sign.
    pub signed: bool,
}

impl fmt::Display for LogForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.signed { "±" } else { "" };
        write!(f, "{} = {}{} ln(phi)", self.name, sign, self.factor)
    }
}

fn serialize_rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl Serialize for JetPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub exponents: BalanceExponents,
    pub f: LogForm,
    pub g: LogForm,
    #[serde(rename = "A", serialize_with = "serialize_rational")]
    pub a_const: BigRational,
    pub checks: Vec<DerivationCheck>,
}

impl BalanceReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(DerivationCheck::passes)
    }
}

impl fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "homogeneous balance derivation")?;
        writeln!(f, "(l,m,n,p,q,r) = {}", self.exponents)?;
        writeln!(f, "{}", self.f)?;
        writeln!(f, "{}", self.g)?;
        writeln!(f, "A = {}", self.a_const)?;
        for check in &self.checks {
            let zeros = |v: &[JetPoly]| v.iter().filter(|p| p.is_zero()).count();
            writeln!(
                f,
                "branch {}: {} (ode {}/{}, identities {}/{}, heat reduction {}, factorization {})",
                check.branch,
                check.verdict(),
                zeros(&check.ode_residuals),
                check.ode_residuals.len(),
                zeros(&check.identity_residuals),
                check.identity_residuals.len(),
                match (&check.e1_residual, &check.e2_residual) {
                    (Some(a), Some(b)) if a.is_zero() && b.is_zero() => "zero",
                    (Some(_), Some(_)) => "nonzero",
                    _ => "skipped",
                },
                match &check.factorization_deltas {
                    Some((a, b)) if a.is_zero() && b.is_zero() => "exact",
                    Some(_) => "mismatch",
                    None => "skipped",
                },
            )?;
        }
        writeln!(f, "transformation (phi_t ± phi_xx = 0):")?;
        writeln!(f, "  u = ±2*phi_x/phi")?;
        write!(f, "  h = -2*phi_x*phi_y/phi^2 + 2*phi_xy/phi - 1")
    }
}

/// Runs all three steps for both branches.
pub fn derive() -> Result<BalanceReport, BalanceError> {
    let exponents = solve_balance_exponents()?;
    let mut checks = Vec::with_capacity(2);
    for branch in Branch::BOTH {
        let check = verify_factorization(branch)?;
        if !check.passes() {
            return Err(BalanceError::CheckFailed(Box::new(check)));
        }
        checks.push(check);
    }
    Ok(BalanceReport {
        exponents,
        f: LogForm {
            name: 'f',
            factor: 2,
            signed: true,
        },
        g: LogForm {
            name: 'g',
            factor: 2,
            signed: false,
        },
        a_const: -BigRational::one(),
        checks,
    })
}
