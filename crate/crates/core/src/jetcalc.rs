//! Exact polynomial calculus over jet variables.
//!
//! A [`JetPoly`] is a finite sum of monomials
//! `c * phi^p * phi_{I1} * ... * phi_{Im} * s1 * ... * sn` where `c` is an exact
//! rational, `phi_{I}` are formal partial derivatives of a single function `phi(x, y, t)`
//! and `s` are formal coefficient symbols `f^(n)(phi)` / `g^(n)(phi)`.
//!
//! Everything here is exact. There is no floating point in this module.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest total derivative order a jet index or coefficient symbol may carry.
pub const ORDER_CAP: u8 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("derivative order exceeds cap {cap} while differentiating `{monomial}`")]
    OrderLimit { monomial: String, cap: u8 },
    #[error("cannot specialize `{symbol}`: the undifferentiated logarithm never appears")]
    LogSpecialization { symbol: String },
}

/// Independent variable of a total derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    X,
    Y,
    T,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X, Direction::Y, Direction::T];
}

/// Upper/lower sign choice coupling the heat equation `phi_t + sigma*phi_xx = 0`
/// with the transformation `u = sigma * 2 phi_x / phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    /// sigma = +1 or -1.
    pub fn sign(self) -> i32 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn sign_f64(self) -> f64 {
        f64::from(self.sign())
    }

    pub fn sign_rational(self) -> BigRational {
        rat(i64::from(self.sign()))
    }

    pub fn flipped(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Multi-index `(i, j, k)` naming the partial derivative `d^(i+j+k) phi / dx^i dy^j dt^k`.
///
/// Ordered by total order, then x before y before t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetIndex {
    pub i: u8,
    pub j: u8,
    pub k: u8,
}

impl JetIndex {
    /// `phi` itself.
    pub const PHI: JetIndex = JetIndex { i: 0, j: 0, k: 0 };
    pub const X: JetIndex = JetIndex { i: 1, j: 0, k: 0 };
    pub const Y: JetIndex = JetIndex { i: 0, j: 1, k: 0 };
    pub const T: JetIndex = JetIndex { i: 0, j: 0, k: 1 };
    pub const XX: JetIndex = JetIndex { i: 2, j: 0, k: 0 };
    pub const XY: JetIndex = JetIndex { i: 1, j: 1, k: 0 };

    pub fn new(i: u8, j: u8, k: u8) -> Option<Self> {
        let idx = JetIndex { i, j, k };
        (idx.order() <= u32::from(ORDER_CAP)).then_some(idx)
    }

    pub fn order(self) -> u32 {
        u32::from(self.i) + u32::from(self.j) + u32::from(self.k)
    }

    fn raised(self, dir: Direction) -> Option<Self> {
        match dir {
            Direction::X => JetIndex::new(self.i + 1, self.j, self.k),
            Direction::Y => JetIndex::new(self.i, self.j + 1, self.k),
            Direction::T => JetIndex::new(self.i, self.j, self.k + 1),
        }
    }

    pub fn of(dir: Direction) -> Self {
        match dir {
            Direction::X => JetIndex::X,
            Direction::Y => JetIndex::Y,
            Direction::T => JetIndex::T,
        }
    }
}

impl Ord for JetIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then(other.i.cmp(&self.i))
            .then(other.j.cmp(&self.j))
    }
}

impl PartialOrd for JetIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for JetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("phi")?;
        if *self == JetIndex::PHI {
            return Ok(());
        }
        f.write_str("_")?;
        for (count, ch) in [(self.i, 'x'), (self.j, 'y'), (self.k, 't')] {
            for _ in 0..count {
                write!(f, "{ch}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    F,
    G,
}

/// `f^(order)(phi)` or `g^(order)(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoeffSymbol {
    pub family: Family,
    pub order: u8,
}

impl CoeffSymbol {
    pub fn f(order: u8) -> Self {
        CoeffSymbol {
            family: Family::F,
            order,
        }
    }

    pub fn g(order: u8) -> Self {
        CoeffSymbol {
            family: Family::G,
            order,
        }
    }
}

impl fmt::Display for CoeffSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.family {
            Family::F => 'f',
            Family::G => 'g',
        };
        match self.order {
            0 => write!(f, "{name}"),
            1..=3 => write!(f, "{name}{}", "'".repeat(usize::from(self.order))),
            n => write!(f, "{name}^({n})"),
        }
    }
}

/// The non-coefficient part of a monomial; the canonical key of a [`JetPoly`] term.
///
/// `jets` never contains [`JetIndex::PHI`]; powers of `phi` live in `phi_power`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Term {
    pub phi_power: i32,
    jets: Vec<JetIndex>,
    symbols: Vec<CoeffSymbol>,
}

impl Term {
    pub fn new(phi_power: i32, mut jets: Vec<JetIndex>, mut symbols: Vec<CoeffSymbol>) -> Self {
        let extra = jets.iter().filter(|j| **j == JetIndex::PHI).count();
        jets.retain(|j| *j != JetIndex::PHI);
        jets.sort_unstable();
        symbols.sort_unstable();
        Term {
            phi_power: phi_power + extra as i32,
            jets,
            symbols,
        }
    }

    pub fn jets(&self) -> &[JetIndex] {
        &self.jets
    }

    pub fn symbols(&self) -> &[CoeffSymbol] {
        &self.symbols
    }

    /// Homogeneous degree: the number of proper derivative factors.
    pub fn degree(&self) -> usize {
        self.jets.len()
    }

    fn product(&self, other: &Term) -> Term {
        let mut jets = Vec::with_capacity(self.jets.len() + other.jets.len());
        jets.extend_from_slice(&self.jets);
        jets.extend_from_slice(&other.jets);
        jets.sort_unstable();
        let mut symbols = Vec::with_capacity(self.symbols.len() + other.symbols.len());
        symbols.extend_from_slice(&self.symbols);
        symbols.extend_from_slice(&other.symbols);
        symbols.sort_unstable();
        Term {
            phi_power: self.phi_power + other.phi_power,
            jets,
            symbols,
        }
    }

    fn is_unit(&self) -> bool {
        self.phi_power == 0 && self.jets.is_empty() && self.symbols.is_empty()
    }
}

/// One coefficient/term pair of a polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: BigRational,
    pub term: Term,
}

impl Monomial {
    pub fn degree(&self) -> usize {
        self.term.degree()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_monomial(f, &self.coeff, &self.term, true)
    }
}

/// Exact polynomial in jet variables, powers of `phi` and coefficient symbols.
///
/// Always canonical: one entry per distinct [`Term`], no zero coefficients, and
/// terms kept in a deterministic order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct JetPoly {
    terms: BTreeMap<Term, BigRational>,
}

pub(crate) fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl JetPoly {
    pub fn zero() -> Self {
        JetPoly::default()
    }

    pub fn one() -> Self {
        JetPoly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        JetPoly::monomial(c, Term::default())
    }

    pub fn integer(n: i64) -> Self {
        JetPoly::constant(rat(n))
    }

    pub fn monomial(coeff: BigRational, term: Term) -> Self {
        let mut p = JetPoly::zero();
        p.add_term(term, coeff);
        p
    }

    /// The single jet variable `phi_{idx}`; `phi` itself for [`JetIndex::PHI`].
    pub fn jet(idx: JetIndex) -> Self {
        JetPoly::monomial(BigRational::one(), Term::new(0, vec![idx], vec![]))
    }

    pub fn symbol(sym: CoeffSymbol) -> Self {
        JetPoly::monomial(BigRational::one(), Term::new(0, vec![], vec![sym]))
    }

    pub fn phi_power(n: i32) -> Self {
        JetPoly::monomial(BigRational::one(), Term::new(n, vec![], vec![]))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &BigRational)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(t, c)| Monomial {
            coeff: c.clone(),
            term: t.clone(),
        })
    }

    /// True when no coefficient symbol occurs.
    pub fn is_symbol_free(&self) -> bool {
        self.terms.keys().all(|t| t.symbols.is_empty())
    }

    fn add_term(&mut self, term: Term, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(term) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> JetPoly {
        if c.is_zero() {
            return JetPoly::zero();
        }
        JetPoly {
            terms: self.terms.iter().map(|(t, k)| (t.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> JetPoly {
        (0..n).fold(JetPoly::one(), |acc, _| &acc * self)
    }

    /// Total derivative in `dir`, treating `phi` and every jet variable as functions of
    /// `(x, y, t)` and `f^(n)`, `g^(n)` as functions of `phi`.
    pub fn total_derivative(&self, dir: Direction) -> Result<JetPoly, JetError> {
        let d_phi = JetIndex::of(dir);
        let mut out = JetPoly::zero();
        for (term, coeff) in &self.terms {
            let overflow = || JetError::OrderLimit {
                monomial: Monomial {
                    coeff: coeff.clone(),
                    term: term.clone(),
                }
                .to_string(),
                cap: ORDER_CAP,
            };

            if term.phi_power != 0 {
                let mut jets = term.jets.clone();
                jets.push(d_phi);
                out.add_term(
                    Term::new(term.phi_power - 1, jets, term.symbols.clone()),
                    coeff * rat(i64::from(term.phi_power)),
                );
            }

            for pos in 0..term.jets.len() {
                let mut jets = term.jets.clone();
                jets[pos] = jets[pos].raised(dir).ok_or_else(overflow)?;
                out.add_term(
                    Term::new(term.phi_power, jets, term.symbols.clone()),
                    coeff.clone(),
                );
            }

            for pos in 0..term.symbols.len() {
                let mut symbols = term.symbols.clone();
                if symbols[pos].order >= ORDER_CAP {
                    return Err(overflow());
                }
                symbols[pos].order += 1;
                let mut jets = term.jets.clone();
                jets.push(d_phi);
                out.add_term(Term::new(term.phi_power, jets, symbols), coeff.clone());
            }
        }
        Ok(out)
    }

    /// Applies total derivatives in sequence.
    pub fn derivative_chain(&self, dirs: &[Direction]) -> Result<JetPoly, JetError> {
        dirs.iter()
            .try_fold(self.clone(), |p, d| p.total_derivative(*d))
    }

    /// Substitutes `f = sigma * 2 ln(phi)` and `g = 2 ln(phi)`.
    ///
    /// `f^(n)` becomes `sigma * 2 (-1)^(n-1) (n-1)! phi^(-n)` and `g^(n)` the same without
    /// `sigma`. The undifferentiated symbols `f`, `g` are rejected.
    pub fn specialize_log(&self, branch: Branch) -> Result<JetPoly, JetError> {
        let mut out = JetPoly::zero();
        for (term, coeff) in &self.terms {
            let mut c = coeff.clone();
            let mut power = term.phi_power;
            for sym in &term.symbols {
                if sym.order == 0 {
                    return Err(JetError::LogSpecialization {
                        symbol: sym.to_string(),
                    });
                }
                c *= log_derivative_coefficient(sym, branch);
                power -= i32::from(sym.order);
            }
            out.add_term(Term::new(power, term.jets.clone(), vec![]), c);
        }
        Ok(out)
    }

    /// Eliminates every time derivative using `phi_t = -sigma * phi_xx` and its
    /// differential consequences: `(i, j, k) -> (-sigma)^k (i + 2k, j, 0)`.
    pub fn reduce_heat(&self, branch: Branch) -> Result<JetPoly, JetError> {
        let minus_sigma = rat(-i64::from(branch.sign()));
        let mut out = JetPoly::zero();
        for (term, coeff) in &self.terms {
            let mut c = coeff.clone();
            let mut jets = Vec::with_capacity(term.jets.len());
            for idx in &term.jets {
                if idx.k == 0 {
                    jets.push(*idx);
                    continue;
                }
                let reduced = JetIndex::new(idx.i + 2 * idx.k, idx.j, 0).ok_or_else(|| {
                    JetError::OrderLimit {
                        monomial: Monomial {
                            coeff: coeff.clone(),
                            term: term.clone(),
                        }
                        .to_string(),
                        cap: ORDER_CAP,
                    }
                })?;
                for _ in 0..idx.k {
                    c *= &minus_sigma;
                }
                jets.push(reduced);
            }
            out.add_term(Term::new(term.phi_power, jets, term.symbols.clone()), c);
        }
        Ok(out)
    }

    /// Splits into homogeneous parts keyed by the number of proper derivative factors.
    pub fn degree_decompose(&self) -> BTreeMap<usize, JetPoly> {
        let mut parts: BTreeMap<usize, JetPoly> = BTreeMap::new();
        for (term, coeff) in &self.terms {
            parts
                .entry(term.degree())
                .or_default()
                .terms
                .insert(term.clone(), coeff.clone());
        }
        parts
    }

    /// Coefficient of the jet product `jets` (an exact multiset match), as a polynomial
    /// in `phi` powers and symbols.
    pub fn coefficient_of(&self, jets: &[JetIndex]) -> JetPoly {
        let key = Term::new(0, jets.to_vec(), vec![]);
        let mut out = JetPoly::zero();
        for (term, coeff) in &self.terms {
            if term.jets == key.jets {
                out.add_term(
                    Term::new(term.phi_power, vec![], term.symbols.clone()),
                    coeff.clone(),
                );
            }
        }
        out
    }

    /// Highest homogeneous degree present, `None` for the zero polynomial.
    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(Term::degree).max()
    }
}

fn factorial(n: u8) -> BigInt {
    (1..=u32::from(n)).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Coefficient `c` with `d^n/dphi^n (s * 2 ln phi) = c * phi^-n`.
fn log_derivative_coefficient(sym: &CoeffSymbol, branch: Branch) -> BigRational {
    let n = sym.order;
    let mut c = BigRational::from_integer(factorial(n - 1) * BigInt::from(2));
    if n.is_multiple_of(2) {
        c = -c;
    }
    if sym.family == Family::F {
        c *= branch.sign_rational();
    }
    c
}

fn write_monomial(
    f: &mut fmt::Formatter<'_>,
    coeff: &BigRational,
    term: &Term,
    with_sign: bool,
) -> fmt::Result {
    let magnitude = coeff.abs();
    if with_sign && coeff.is_negative() {
        f.write_str("-")?;
    }
    let mut factors: Vec<String> = Vec::new();
    if !magnitude.is_one() || term.is_unit() {
        factors.push(magnitude.to_string());
    }
    for sym in &term.symbols {
        factors.push(sym.to_string());
    }
    match term.phi_power {
        0 => {}
        1 => factors.push("phi".to_owned()),
        p => factors.push(format!("phi^{p}")),
    }
    let mut i = 0;
    while i < term.jets.len() {
        let idx = term.jets[i];
        let run = term.jets[i..].iter().take_while(|j| **j == idx).count();
        if run == 1 {
            factors.push(idx.to_string());
        } else {
            factors.push(format!("{idx}^{run}"));
        }
        i += run;
    }
    f.write_str(&factors.join("*"))
}

impl fmt::Display for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (term, coeff)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(if coeff.is_negative() { " - " } else { " + " })?;
            }
            write_monomial(f, coeff, term, n == 0)?;
        }
        Ok(())
    }
}

impl AddAssign<&JetPoly> for JetPoly {
    fn add_assign(&mut self, rhs: &JetPoly) {
        for (t, c) in &rhs.terms {
            self.add_term(t.clone(), c.clone());
        }
    }
}

impl Add<&JetPoly> for &JetPoly {
    type Output = JetPoly;
    fn add(self, rhs: &JetPoly) -> JetPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for JetPoly {
    type Output = JetPoly;
    fn add(mut self, rhs: JetPoly) -> JetPoly {
        self += &rhs;
        self
    }
}

impl Neg for &JetPoly {
    type Output = JetPoly;
    fn neg(self) -> JetPoly {
        JetPoly {
            terms: self.terms.iter().map(|(t, c)| (t.clone(), -c)).collect(),
        }
    }
}

impl Neg for JetPoly {
    type Output = JetPoly;
    fn neg(self) -> JetPoly {
        -&self
    }
}

impl Sub<&JetPoly> for &JetPoly {
    type Output = JetPoly;
    fn sub(self, rhs: &JetPoly) -> JetPoly {
        let mut out = self.clone();
        for (t, c) in &rhs.terms {
            out.add_term(t.clone(), -c);
        }
        out
    }
}

impl Sub for JetPoly {
    type Output = JetPoly;
    fn sub(self, rhs: JetPoly) -> JetPoly {
        &self - &rhs
    }
}

impl Mul<&JetPoly> for &JetPoly {
    type Output = JetPoly;
    fn mul(self, rhs: &JetPoly) -> JetPoly {
        let mut out = JetPoly::zero();
        for (ta, ca) in &self.terms {
            for (tb, cb) in &rhs.terms {
                out.add_term(ta.product(tb), ca * cb);
            }
        }
        out
    }
}

impl Mul for JetPoly {
    type Output = JetPoly;
    fn mul(self, rhs: JetPoly) -> JetPoly {
        &self * &rhs
    }
}
