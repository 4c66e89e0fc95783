//! Truncated Taylor series ("jets") for forward-mode differentiation.
//!
//! A [`Jet`] of order `K` stores the normalized coefficients
//! `c_k = f^(k)(t0) / k!` for `k = 0..=K`. Factorials are applied only when
//! derivatives are extracted, which keeps the recurrences in their textbook
//! form and avoids overflow for moderate orders.

use thiserror::Error;

/// Errors raised by jet arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("division by a jet whose constant term is zero")]
    DivisionByZeroConstantTerm,
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("jet orders differ ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },
    #[error("requested {requested} derivatives from a jet of order {order}")]
    OrderTooLow { requested: usize, order: usize },
    #[error("{func} produced a non-finite coefficient")]
    NonFinite { func: &'static str },
}

/// Binary arithmetic operations on jets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Elementary functions supported by [`Jet::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Pow(f64),
}

/// Truncated Taylor expansion of a scalar function about a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    /// Jet of the identity function `f(t) = t` expanded at `t0`.
    pub fn variable(t0: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = t0;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Jet { coeffs }
    }

    /// Jet of a constant function.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// Builds a jet from normalized coefficients. Returns `None` for an
    /// empty slice or any non-finite coefficient.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Option<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return None;
        }
        Some(Jet { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The function value `c_0`.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Returns `[f'(t0), ..., f^(m)(t0)]`, i.e. `k! * c_k` for `k = 1..=m`.
    pub fn derivatives(&self, upto: usize) -> Result<Vec<f64>, JetError> {
        if upto > self.order() {
            return Err(JetError::OrderTooLow {
                requested: upto,
                order: self.order(),
            });
        }
        let mut factorial = 1.0;
        Ok((1..=upto)
            .map(|k| {
                factorial *= k as f64;
                factorial * self.coeffs[k]
            })
            .collect())
    }

    /// Jet of `f'`, one order lower.
    pub fn derivative(&self) -> Jet {
        if self.order() == 0 {
            return Jet::constant(0.0, 0);
        }
        let coeffs = (1..=self.order())
            .map(|k| k as f64 * self.coeffs[k])
            .collect();
        Jet { coeffs }
    }

    /// Same series truncated (or zero-padded) to a different order.
    pub fn with_order(&self, order: usize) -> Jet {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, 0.0);
        Jet { coeffs }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Result<Jet, JetError> {
        finite("scale", self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_order(other)?;
        finite(
            "add",
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_order(other)?;
        finite(
            "sub",
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_order(other)?;
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = (0..a.len())
            .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
            .collect();
        finite("mul", coeffs)
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_order(other)?;
        let a = &self.coeffs;
        let b = &other.coeffs;
        if b[0] == 0.0 {
            return Err(JetError::DivisionByZeroConstantTerm);
        }
        let mut q = vec![0.0; a.len()];
        for k in 0..a.len() {
            let acc: f64 = (1..=k).map(|j| b[j] * q[k - j]).sum();
            q[k] = (a[k] - acc) / b[0];
        }
        finite("div", q)
    }

    pub fn arith(&self, other: &Jet, op: JetOp) -> Result<Jet, JetError> {
        match op {
            JetOp::Add => self.add(other),
            JetOp::Sub => self.sub(other),
            JetOp::Mul => self.mul(other),
            JetOp::Div => self.div(other),
        }
    }

    pub fn apply(&self, func: Elementary) -> Result<Jet, JetError> {
        match func {
            Elementary::Sin => self.sin_cos().map(|(s, _)| s),
            Elementary::Cos => self.sin_cos().map(|(_, c)| c),
            Elementary::Exp => self.exp(),
            Elementary::Log => self.ln(),
            Elementary::Sqrt => self.sqrt(),
            Elementary::Pow(e) => self.powf(e),
        }
    }

    /// Simultaneous sine and cosine series.
    pub fn sin_cos(&self) -> Result<(Jet, Jet), JetError> {
        let a = &self.coeffs;
        let n = a.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..n {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                let ja = j as f64 * a[j];
                ds += ja * c[k - j];
                dc += ja * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = -dc / k as f64;
        }
        Ok((finite("sin", s)?, finite("cos", c)?))
    }

    pub fn exp(&self) -> Result<Jet, JetError> {
        let a = &self.coeffs;
        let mut e = vec![0.0; a.len()];
        e[0] = a[0].exp();
        for k in 1..a.len() {
            let acc: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = acc / k as f64;
        }
        finite("exp", e)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let a = &self.coeffs;
        if a[0] <= 0.0 {
            return Err(JetError::Domain {
                func: "log",
                value: a[0],
            });
        }
        let mut l = vec![0.0; a.len()];
        l[0] = a[0].ln();
        for k in 1..a.len() {
            let acc: f64 = (1..k).map(|j| j as f64 * l[j] * a[k - j]).sum();
            l[k] = (a[k] - acc / k as f64) / a[0];
        }
        finite("log", l)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a = &self.coeffs;
        if a[0] <= 0.0 {
            return Err(JetError::Domain {
                func: "sqrt",
                value: a[0],
            });
        }
        let mut r = vec![0.0; a.len()];
        r[0] = a[0].sqrt();
        for k in 1..a.len() {
            let acc: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (a[k] - acc) / (2.0 * r[0]);
        }
        finite("sqrt", r)
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// a final reciprocal.
    pub fn powi(&self, exponent: i64) -> Result<Jet, JetError> {
        let mut result = Jet::constant(1.0, self.order());
        let mut base = self.clone();
        let mut e = exponent.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        if exponent < 0 {
            Jet::constant(1.0, self.order()).div(&result)
        } else {
            Ok(result)
        }
    }

    /// Real power. Integral exponents use [`Jet::powi`]; anything else is
    /// `exp(e * log(x))` and needs a positive constant term.
    pub fn powf(&self, exponent: f64) -> Result<Jet, JetError> {
        if exponent.fract() == 0.0 && exponent.abs() <= i64::MAX as f64 / 2.0 {
            return self.powi(exponent as i64);
        }
        if self.coeffs[0] <= 0.0 {
            return Err(JetError::Domain {
                func: "pow",
                value: self.coeffs[0],
            });
        }
        self.ln()?.scale(exponent)?.exp()
    }

    /// Evaluates the polynomial `sum_k poly[k] * self^k` with jet arithmetic
    /// (Horner's rule). Used to compose a series with another series.
    pub fn compose_polynomial(&self, poly: &[f64]) -> Result<Jet, JetError> {
        let order = self.order();
        let mut acc = Jet::constant(0.0, order);
        for &c in poly.iter().rev() {
            acc = acc.mul(self)?.add(&Jet::constant(c, order))?;
        }
        Ok(acc)
    }

    fn check_order(&self, other: &Jet) -> Result<(), JetError> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(JetError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }
}

fn finite(func: &'static str, coeffs: Vec<f64>) -> Result<Jet, JetError> {
    if coeffs.iter().all(|c| c.is_finite()) {
        Ok(Jet { coeffs })
    } else {
        Err(JetError::NonFinite { func })
    }
}

/// Derivatives `[f'(t0), ..., f^(m)(t0)]` of a jet.
pub fn extract_derivatives(jet: &Jet, upto: usize) -> Result<Vec<f64>, JetError> {
    jet.derivatives(upto)
}
