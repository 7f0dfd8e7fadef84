use std::ops::{Add, Neg, Sub};

use super::ExactPoly;
use crate::error::Result;

/// `p(x) + c(x)·e^{-nx}` with exact polynomial parts.
///
/// Operator moments carry `c` constant in `x`; central moments pick up
/// `x`-dependent exponential coefficients through the binomial expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpPoly {
    pub poly: ExactPoly,
    pub exp_coeff: ExactPoly,
}

impl ExpPoly {
    pub fn new(poly: ExactPoly, exp_coeff: ExactPoly) -> Self {
        Self { poly, exp_coeff }
    }

    pub fn from_poly(poly: ExactPoly) -> Self {
        Self::new(poly, ExactPoly::zero())
    }

    pub fn zero() -> Self {
        Self::from_poly(ExactPoly::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero() && self.exp_coeff.is_zero()
    }

    /// Multiplies both parts by a polynomial.
    pub fn mul_poly(&self, q: &ExactPoly) -> Self {
        Self::new(&self.poly * q, &self.exp_coeff * q)
    }

    /// Exact `d/dx`: `p' + (c' - n c) e^{-nx}`.
    pub fn d_x(&self) -> Self {
        Self::new(
            self.poly.d_main(),
            self.exp_coeff.d_main() - &self.exp_coeff * &ExactPoly::n(),
        )
    }

    /// `(D + n)` applied to the expression.
    pub fn d_plus_n(&self) -> Self {
        let n = ExactPoly::n();
        &self.d_x() + &self.mul_poly(&n)
    }

    pub fn eval(&self, x: f64, beta: f64, n: f64) -> Result<f64> {
        let p = self.poly.eval(x, beta, n)?;
        if self.exp_coeff.is_zero() {
            return Ok(p);
        }
        Ok(p + self.exp_coeff.eval(x, beta, n)? * (-n * x).exp())
    }

    pub fn to_text(&self) -> String {
        format!(
            "poly: {}\nexp: {}",
            self.poly.to_text("x"),
            self.exp_coeff.to_text("x")
        )
    }
}

impl Add for &ExpPoly {
    type Output = ExpPoly;
    fn add(self, rhs: &ExpPoly) -> ExpPoly {
        ExpPoly::new(&self.poly + &rhs.poly, &self.exp_coeff + &rhs.exp_coeff)
    }
}

impl Sub for &ExpPoly {
    type Output = ExpPoly;
    fn sub(self, rhs: &ExpPoly) -> ExpPoly {
        ExpPoly::new(&self.poly - &rhs.poly, &self.exp_coeff - &rhs.exp_coeff)
    }
}

impl Neg for &ExpPoly {
    type Output = ExpPoly;
    fn neg(self) -> ExpPoly {
        ExpPoly::new(-&self.poly, -&self.exp_coeff)
    }
}

impl Add for ExpPoly {
    type Output = ExpPoly;
    fn add(self, rhs: ExpPoly) -> ExpPoly {
        &self + &rhs
    }
}

impl Sub for ExpPoly {
    type Output = ExpPoly;
    fn sub(self, rhs: ExpPoly) -> ExpPoly {
        &self - &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_adds_exponential_part() {
        // x + 2 e^{-nx}
        let e = ExpPoly::new(ExactPoly::main(), ExactPoly::int(2));
        let v = e.eval(0.5, 0.3, 4.0).unwrap();
        assert!((v - (0.5 + 2.0 * (-2.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_exponential() {
        // d/dx [x^2 + e^{-nx}] = 2x - n e^{-nx}
        let e = ExpPoly::new(ExactPoly::main().pow(2), ExactPoly::one());
        let d = e.d_x();
        assert_eq!(d.poly, ExactPoly::main().scale(&super::super::rat(2, 1)));
        assert_eq!(d.exp_coeff, -ExactPoly::n());
        // (D + n) e^{-nx} = 0
        let pure = ExpPoly::new(ExactPoly::zero(), ExactPoly::one());
        assert!(pure.d_plus_n().is_zero());
    }
}
