use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at y = {y}")]
    DivisionByZero { y: f64 },
    #[error("non-finite value at y = {y}")]
    NonFinite { y: f64 },
}

/// Forward-mode dual number: a value and its derivative with respect to `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn new(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }

    pub fn constant(value: f64) -> Self {
        Dual { value, deriv: 0.0 }
    }

    /// The independent variable itself, `(y, 1)`.
    pub fn variable(y: f64) -> Self {
        Dual {
            value: y,
            deriv: 1.0,
        }
    }

    // `at` is only used for error reporting.
    pub(crate) fn checked_div(self, rhs: Dual, at: f64) -> Result<Dual, EvalError> {
        if rhs.value == 0.0 {
            return Err(EvalError::DivisionByZero { y: at });
        }
        let inv = 1.0 / rhs.value;
        Ok(Dual {
            value: self.value * inv,
            deriv: (self.deriv * rhs.value - self.value * rhs.deriv) * inv * inv,
        })
    }

    pub(crate) fn powi(self, n: i32, at: f64) -> Result<Dual, EvalError> {
        if n == 0 {
            return Ok(Dual::constant(1.0));
        }
        if n < 0 && self.value == 0.0 {
            return Err(EvalError::DivisionByZero { y: at });
        }
        Ok(Dual {
            value: self.value.powi(n),
            deriv: f64::from(n) * self.value.powi(n - 1) * self.deriv,
        })
    }

    pub fn exp(self) -> Dual {
        let e = self.value.exp();
        Dual::new(e, e * self.deriv)
    }

    pub fn tanh(self) -> Dual {
        let t = self.value.tanh();
        Dual::new(t, (1.0 - t * t) * self.deriv)
    }

    /// `1/cosh`, derivative `-sech * tanh`.
    pub fn sech(self) -> Dual {
        let s = 1.0 / self.value.cosh();
        Dual::new(s, -s * self.value.tanh() * self.deriv)
    }

    pub fn sin(self) -> Dual {
        let (s, c) = self.value.sin_cos();
        Dual::new(s, c * self.deriv)
    }

    pub fn cos(self) -> Dual {
        let (s, c) = self.value.sin_cos();
        Dual::new(c, -s * self.deriv)
    }

    pub(crate) fn finite_or(self, at: f64) -> Result<Dual, EvalError> {
        if self.value.is_finite() && self.deriv.is_finite() {
            Ok(self)
        } else {
            Err(EvalError::NonFinite { y: at })
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value * rhs.value,
            self.deriv * rhs.value + self.value * rhs.deriv,
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }
}
