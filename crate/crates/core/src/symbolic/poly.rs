use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exponents of one monomial `main^a · β^b · (1/n)^c`.
///
/// `main` is the basis index `k` for the moment-ratio polynomials and the
/// evaluation point `x` for operator moments. `ninv` may be negative so
/// that factors of `n` (from `d/dx e^{-nx}`) stay representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub main: u32,
    pub beta: u32,
    pub ninv: i32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial {
        main: 0,
        beta: 0,
        ninv: 0,
    };

    pub fn new(main: u32, beta: u32, ninv: i32) -> Self {
        Self { main, beta, ninv }
    }

    fn times(self, other: Monomial) -> Monomial {
        Monomial {
            main: self.main + other.main,
            beta: self.beta + other.beta,
            ninv: self.ninv + other.ninv,
        }
    }
}

type Terms = BTreeMap<Monomial, BigRational>;

/// Polynomial in `(main, β, 1/n)` over exact rationals, divided by `(1-β)^m`.
///
/// Always held in canonical form: no zero coefficients and, when `m > 0`,
/// a numerator that does not vanish at `β = 1`. Two values are equal iff
/// their canonical forms are, so `==` decides polynomial identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPoly {
    terms: Terms,
    denom_pow: u32,
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn add_term(terms: &mut Terms, m: Monomial, c: BigRational) {
    if c.is_zero() {
        return;
    }
    let entry = terms.entry(m).or_insert_with(BigRational::zero);
    *entry += c;
    if entry.is_zero() {
        terms.remove(&m);
    }
}

fn times_one_minus_beta(terms: &Terms) -> Terms {
    let mut out = terms.clone();
    for (m, c) in terms {
        add_term(
            &mut out,
            Monomial {
                beta: m.beta + 1,
                ..*m
            },
            -c.clone(),
        );
    }
    out
}

// Exact quotient N / (1 - β), or None when (1 - β) does not divide N.
fn divide_one_minus_beta(terms: &Terms) -> Option<Terms> {
    let mut groups: BTreeMap<(u32, i32), BTreeMap<u32, BigRational>> = BTreeMap::new();
    for (m, c) in terms {
        groups
            .entry((m.main, m.ninv))
            .or_default()
            .insert(m.beta, c.clone());
    }
    let mut out = Terms::new();
    for ((main, ninv), by_beta) in groups {
        // N = (1 - β) Q  ⇔  q_i = Σ_{j ≤ i} c_j and Σ_j c_j = 0.
        let top = *by_beta.keys().next_back().unwrap();
        let mut running = BigRational::zero();
        for i in 0..=top {
            if let Some(c) = by_beta.get(&i) {
                running += c;
            }
            if i < top {
                add_term(&mut out, Monomial::new(main, i, ninv), running.clone());
            }
        }
        if !running.is_zero() {
            return None;
        }
    }
    Some(out)
}

impl ExactPoly {
    /// Builds a canonical value from raw terms over `(1-β)^denom_pow`.
    pub fn from_terms<I>(terms: I, denom_pow: u32) -> Self
    where
        I: IntoIterator<Item = (Monomial, BigRational)>,
    {
        let mut map = Terms::new();
        for (m, c) in terms {
            add_term(&mut map, m, c);
        }
        let mut p = ExactPoly {
            terms: map,
            denom_pow,
        };
        p.canonicalize();
        p
    }

    fn canonicalize(&mut self) {
        if self.terms.is_empty() {
            self.denom_pow = 0;
            return;
        }
        while self.denom_pow > 0 {
            match divide_one_minus_beta(&self.terms) {
                Some(q) => {
                    self.terms = q;
                    self.denom_pow -= 1;
                }
                None => break,
            }
        }
    }

    pub fn zero() -> Self {
        ExactPoly {
            terms: Terms::new(),
            denom_pow: 0,
        }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, 0, 0, 0)
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rat(c, 1))
    }

    pub fn monomial(c: BigRational, main: u32, beta: u32, ninv: i32) -> Self {
        Self::from_terms([(Monomial::new(main, beta, ninv), c)], 0)
    }

    /// The main variable (`k` or `x`).
    pub fn main() -> Self {
        Self::monomial(BigRational::one(), 1, 0, 0)
    }

    pub fn beta() -> Self {
        Self::monomial(BigRational::one(), 0, 1, 0)
    }

    pub fn ninv() -> Self {
        Self::monomial(BigRational::one(), 0, 0, 1)
    }

    /// `n`, stored as `(1/n)^-1`.
    pub fn n() -> Self {
        Self::monomial(BigRational::one(), 0, 0, -1)
    }

    pub fn one_minus_beta() -> Self {
        Self::one() - Self::beta()
    }

    /// `(1-β)^{-m}`
    pub fn inv_one_minus_beta(m: u32) -> Self {
        ExactPoly {
            terms: [(Monomial::ONE, BigRational::one())].into_iter().collect(),
            denom_pow: m,
        }
    }

    /// Polynomial in β from integer coefficients, lowest degree first.
    pub fn beta_poly(coeffs: &[i64]) -> Self {
        Self::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| (Monomial::new(0, i as u32, 0), rat(c, 1))),
            0,
        )
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn denom_pow(&self) -> u32 {
        self.denom_pow
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        ExactPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (*m, v * c))
                .collect(),
            denom_pow: self.denom_pow,
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Highest power of the main variable, or `None` for zero.
    pub fn main_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.main).max()
    }

    /// Range of `1/n` exponents present, or `None` for zero.
    pub fn ninv_range(&self) -> Option<(i32, i32)> {
        let lo = self.terms.keys().map(|m| m.ninv).min()?;
        let hi = self.terms.keys().map(|m| m.ninv).max()?;
        Some((lo, hi))
    }

    fn select(&self, keep: impl Fn(&Monomial) -> Option<Monomial>) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter_map(|(m, c)| keep(m).map(|m2| (m2, c.clone()))),
            self.denom_pow,
        )
    }

    /// Coefficient of `main^d`, as a polynomial in β and 1/n.
    pub fn coeff_main(&self, d: u32) -> Self {
        self.select(|m| (m.main == d).then_some(Monomial { main: 0, ..*m }))
    }

    /// Coefficient of `(1/n)^d`, as a polynomial in main and β.
    pub fn coeff_ninv(&self, d: i32) -> Self {
        self.select(|m| (m.ninv == d).then_some(Monomial { ninv: 0, ..*m }))
    }

    /// Multiplies by `(1/n)^d`.
    pub fn shift_ninv(&self, d: i32) -> Self {
        self.select(|m| {
            Some(Monomial {
                ninv: m.ninv + d,
                ..*m
            })
        })
    }

    /// Substitutes a rational value for the main variable.
    pub fn subs_main(&self, v: &BigRational) -> Self {
        Self::from_terms(
            self.terms.iter().map(|(m, c)| {
                let p = num_traits::pow(v.clone(), m.main as usize);
                (Monomial { main: 0, ..*m }, c * p)
            }),
            self.denom_pow,
        )
    }

    /// Substitutes a rational value for β.
    pub fn subs_beta(&self, v: &BigRational) -> Result<Self> {
        let one_minus = BigRational::one() - v;
        if one_minus.is_zero() && self.denom_pow > 0 {
            return Err(Error::Domain("β = 1 makes (1-β)^m vanish".into()));
        }
        let scale = if self.denom_pow == 0 {
            BigRational::one()
        } else {
            num_traits::pow(one_minus, self.denom_pow as usize).recip()
        };
        Ok(Self::from_terms(
            self.terms.iter().map(|(m, c)| {
                let p = num_traits::pow(v.clone(), m.beta as usize);
                (Monomial { beta: 0, ..*m }, c * p * &scale)
            }),
            0,
        ))
    }

    /// Exact derivative with respect to the main variable.
    pub fn d_main(&self) -> Self {
        Self::from_terms(
            self.terms.iter().filter(|(m, _)| m.main > 0).map(|(m, c)| {
                (
                    Monomial {
                        main: m.main - 1,
                        ..*m
                    },
                    c * BigRational::from_integer(m.main.into()),
                )
            }),
            self.denom_pow,
        )
    }

    /// Exact derivative with respect to β, quotient rule included.
    pub fn d_beta(&self) -> Self {
        // d[N (1-β)^{-m}] = [N'(1-β) + m N] (1-β)^{-(m+1)}
        let numerator_prime = Self::from_terms(
            self.terms.iter().filter(|(m, _)| m.beta > 0).map(|(m, c)| {
                (
                    Monomial {
                        beta: m.beta - 1,
                        ..*m
                    },
                    c * BigRational::from_integer(m.beta.into()),
                )
            }),
            0,
        );
        let numerator = self.numerator();
        let m = BigRational::from_integer(self.denom_pow.into());
        let top = &numerator_prime * &Self::one_minus_beta() + numerator.scale(&m);
        &top * &Self::inv_one_minus_beta(self.denom_pow + 1)
    }

    /// The numerator `N` with the `(1-β)^m` divisor dropped.
    pub fn numerator(&self) -> Self {
        ExactPoly {
            terms: self.terms.clone(),
            denom_pow: 0,
        }
    }

    /// Floating-point value at `(main, β, n)`.
    pub fn eval(&self, main: f64, beta: f64, n: f64) -> Result<f64> {
        if self.denom_pow > 0 && beta == 1.0 {
            return Err(Error::Domain("cannot evaluate (1-β)^-m at β = 1".into()));
        }
        let ninv = 1.0 / n;
        let s: f64 = self
            .terms
            .iter()
            .map(|(m, c)| {
                c.to_f64().unwrap_or(f64::NAN)
                    * main.powi(m.main as i32)
                    * beta.powi(m.beta as i32)
                    * ninv.powi(m.ninv)
            })
            .sum();
        Ok(s / (1.0 - beta).powi(self.denom_pow as i32))
    }

    /// Coefficients in the main variable (lowest first) at fixed `(β, n)`,
    /// for Horner evaluation inside series loops.
    pub fn main_coefficients(&self, beta: f64, n: f64) -> Result<Vec<f64>> {
        let deg = match self.main_degree() {
            Some(d) => d as usize,
            None => return Ok(vec![0.0]),
        };
        (0..=deg)
            .map(|d| self.coeff_main(d as u32).eval(0.0, beta, n))
            .collect()
    }

    /// Canonical text: monomials sorted by descending main degree, then
    /// ascending β and 1/n degree, with explicit rational coefficients.
    pub fn to_text(&self, main_name: &str) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut keys: Vec<&Monomial> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            b.main
                .cmp(&a.main)
                .then(a.beta.cmp(&b.beta))
                .then(a.ninv.cmp(&b.ninv))
        });
        let mut out = String::new();
        for (i, m) in keys.into_iter().enumerate() {
            let c = &self.terms[m];
            let sign = if c.is_negative() { "-" } else { "+" };
            if i == 0 {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                let _ = write!(out, " {sign} ");
            }
            let _ = write!(out, "{}", c.abs());
            if m.main > 0 {
                let _ = write!(out, "*{main_name}^{}", m.main);
            }
            if m.beta > 0 {
                let _ = write!(out, "*beta^{}", m.beta);
            }
            if m.ninv != 0 {
                let _ = write!(out, "*ninv^{}", m.ninv);
            }
        }
        if self.denom_pow > 0 {
            format!("({out})/(1-beta)^{}", self.denom_pow)
        } else {
            out
        }
    }
}

impl Add for &ExactPoly {
    type Output = ExactPoly;
    fn add(self, rhs: &ExactPoly) -> ExactPoly {
        let m = self.denom_pow.max(rhs.denom_pow);
        let mut lhs_terms = self.terms.clone();
        for _ in self.denom_pow..m {
            lhs_terms = times_one_minus_beta(&lhs_terms);
        }
        let mut rhs_terms = rhs.terms.clone();
        for _ in rhs.denom_pow..m {
            rhs_terms = times_one_minus_beta(&rhs_terms);
        }
        for (mono, c) in rhs_terms {
            add_term(&mut lhs_terms, mono, c);
        }
        let mut p = ExactPoly {
            terms: lhs_terms,
            denom_pow: m,
        };
        p.canonicalize();
        p
    }
}

impl Neg for &ExactPoly {
    type Output = ExactPoly;
    fn neg(self) -> ExactPoly {
        ExactPoly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
            denom_pow: self.denom_pow,
        }
    }
}

impl Sub for &ExactPoly {
    type Output = ExactPoly;
    fn sub(self, rhs: &ExactPoly) -> ExactPoly {
        self + &(-rhs)
    }
}

impl Mul for &ExactPoly {
    type Output = ExactPoly;
    fn mul(self, rhs: &ExactPoly) -> ExactPoly {
        let mut terms = Terms::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                add_term(&mut terms, ma.times(*mb), ca * cb);
            }
        }
        let mut p = ExactPoly {
            terms,
            denom_pow: self.denom_pow + rhs.denom_pow,
        };
        p.canonicalize();
        p
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ExactPoly {
            type Output = ExactPoly;
            fn $method(self, rhs: ExactPoly) -> ExactPoly {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&ExactPoly> for ExactPoly {
            type Output = ExactPoly;
            fn $method(self, rhs: &ExactPoly) -> ExactPoly {
                (&self).$method(rhs)
            }
        }
        impl $tr<ExactPoly> for &ExactPoly {
            type Output = ExactPoly;
            fn $method(self, rhs: ExactPoly) -> ExactPoly {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for ExactPoly {
    type Output = ExactPoly;
    fn neg(self) -> ExactPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b() -> ExactPoly {
        ExactPoly::beta()
    }

    #[test]
    fn denominator_cancels() {
        let p = ExactPoly::one_minus_beta() * ExactPoly::inv_one_minus_beta(1);
        assert_eq!(p, ExactPoly::one());
        assert_eq!(p.denom_pow(), 0);
    }

    #[test]
    fn additive_inverse_is_zero() {
        let a12 = ExactPoly::beta_poly(&[1, 4, -2]);
        let neg = ExactPoly::beta_poly(&[-1, -4, 2]);
        assert!((a12 + neg).is_zero());
    }

    #[test]
    fn monomial_product() {
        let k = ExactPoly::main();
        let omb = ExactPoly::one_minus_beta();
        let lhs = omb.pow(2) * k.pow(2) * (&omb * &k);
        assert_eq!(lhs, omb.pow(3) * k.pow(3));
    }

    #[test]
    fn canonical_form_strips_common_factor() {
        // (1 - β²) / (1-β)^2 = (1 + β) / (1 - β)
        let p = (ExactPoly::one() - b() * b()) * ExactPoly::inv_one_minus_beta(2);
        assert_eq!(p.denom_pow(), 1);
        assert_eq!(p, (ExactPoly::one() + b()) * ExactPoly::inv_one_minus_beta(1));
    }

    #[test]
    fn beta_derivative_quotient_rule() {
        // d/dβ [β / (1-β)] = 1/(1-β)^2
        let p = b() * ExactPoly::inv_one_minus_beta(1);
        assert_eq!(p.d_beta(), ExactPoly::inv_one_minus_beta(2));
    }

    #[test]
    fn eval_rejects_beta_one() {
        let p = ExactPoly::inv_one_minus_beta(1);
        assert!(p.eval(0.0, 1.0, 1.0).is_err());
        assert_eq!(ExactPoly::int(3).eval(0.0, 1.0, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn n_and_ninv_cancel() {
        assert_eq!(ExactPoly::n() * ExactPoly::ninv(), ExactPoly::one());
    }

    #[test]
    fn subs_and_coefficients() {
        // (2k^2 + 3k β) / n
        let k = ExactPoly::main();
        let p = (k.pow(2).scale(&rat(2, 1)) + k * b().scale(&rat(3, 1))) * ExactPoly::ninv();
        assert_eq!(p.main_degree(), Some(2));
        assert_eq!(p.coeff_main(1), b().scale(&rat(3, 1)) * ExactPoly::ninv());
        assert_eq!(p.subs_main(&rat(1, 2)), (ExactPoly::constant(rat(1, 2)) + b().scale(&rat(3, 2))) * ExactPoly::ninv());
        assert_eq!(p.ninv_range(), Some((1, 1)));
    }

    #[test]
    fn text_form() {
        let p = (ExactPoly::main().pow(2) - b().scale(&rat(1, 3))) * ExactPoly::inv_one_minus_beta(2);
        assert_eq!(p.to_text("k"), "(1*k^2 - 1/3*beta^1)/(1-beta)^2");
        assert_eq!(ExactPoly::zero().to_text("x"), "0");
    }
}
