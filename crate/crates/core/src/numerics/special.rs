use super::{integrate_halfline_from, SeriesQuadConfig};
use crate::error::{Error, Result};

/// Rising factorial `(a)_m = a (a + 1) ... (a + m - 1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, m: u32) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (a + f64::from(i)))
}

/// `ln k!`
pub fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

/// `ln Γ(a)` for `a > 0`.
pub fn ln_gamma(a: f64) -> f64 {
    statrs::function::gamma::ln_gamma(a)
}

/// A real number stored as `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLn {
    pub ln_abs: f64,
    /// One of -1, 0, 1.
    pub sign: f64,
}

impl SignedLn {
    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

fn nonpositive_integer(a: f64) -> Option<u64> {
    (a <= 0.0 && a.fract() == 0.0 && a.is_finite()).then(|| (-a) as u64)
}

// Log-magnitudes and signs of the terms (a)_j z^j / ((b)_j j!), j = 0..=|a|.
fn terminating_terms(a: f64, b: f64, z: f64) -> Result<Vec<(f64, f64)>> {
    let degree = nonpositive_integer(a).ok_or_else(|| {
        Error::Domain(format!(
            "1F1 is only evaluated in its terminating regime; got a = {a} with z = {z}"
        ))
    })?;
    let mut terms = Vec::with_capacity(degree as usize + 1);
    let (mut ln_t, mut sign) = (0.0, 1.0);
    terms.push((ln_t, sign));
    for j in 1..=degree {
        let jf = j as f64;
        let num = (a + jf - 1.0) * z;
        let den = (b + jf - 1.0) * jf;
        if den == 0.0 {
            return Err(Error::Domain(format!(
                "1F1({a}; {b}; z): lower parameter hits zero at term {j}"
            )));
        }
        if num == 0.0 {
            break;
        }
        ln_t += num.abs().ln() - den.abs().ln();
        sign *= (num / den).signum();
        terms.push((ln_t, sign));
    }
    Ok(terms)
}

/// Terminating Kummer function `1F1(a; b; z)` for a nonpositive integer `a`.
///
/// The series has `|a| + 1` terms. For the moment integrals `a = 2 - k` and
/// `b = 1 - r - k`, so the sum stops at `j = k - 2`, strictly before the
/// first vanishing denominator at `j = r + k - 1`. At `z = 0` the value is
/// 1 for any parameters.
pub fn hyp1f1_terminating(a: f64, b: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(1.0);
    }
    let terms = terminating_terms(a, b, z)?;
    let mut acc = super::CompensatedSum::default();
    for (ln_t, sign) in terms {
        acc.add(sign * ln_t.exp());
    }
    Ok(acc.value())
}

/// `ln |1F1(a; b; z)|` with sign, summed relative to the largest term so
/// that degrees in the thousands do not overflow.
pub fn ln_hyp1f1_terminating(a: f64, b: f64, z: f64) -> Result<SignedLn> {
    if z == 0.0 {
        return Ok(SignedLn {
            ln_abs: 0.0,
            sign: 1.0,
        });
    }
    let terms = terminating_terms(a, b, z)?;
    let peak = terms
        .iter()
        .map(|&(l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = super::CompensatedSum::default();
    for &(ln_t, sign) in &terms {
        acc.add(sign * (ln_t - peak).exp());
    }
    let s = acc.value();
    Ok(SignedLn {
        ln_abs: if s == 0.0 {
            f64::NEG_INFINITY
        } else {
            s.abs().ln() + peak
        },
        sign: s.signum() * f64::from(s != 0.0),
    })
}

/// Tricomi's `U(a, b, z)` from its integral representation
/// `Γ(a)⁻¹ ∫₀^∞ e^{-zt} t^{a-1} (1+t)^{b-a-1} dt`.
///
/// Only used as an independent check of the terminating-1F1 route.
pub fn tricomi_u_oracle(a: f64, b: f64, z: f64, cfg: &SeriesQuadConfig) -> Result<f64> {
    if !(a > 0.0 && z > 0.0) {
        return Err(Error::Domain(format!(
            "U(a, b, z) integral needs a > 0 and z > 0, got a = {a}, z = {z}"
        )));
    }
    let lg = ln_gamma(a);
    let c = b - a - 1.0;
    let f = |t: f64| {
        if t <= 0.0 {
            return if a == 1.0 { (-lg).exp() } else { 0.0 };
        }
        (-z * t + (a - 1.0) * t.ln() + c * t.ln_1p() - lg).exp()
    };
    // The integrand peaks near (a - 1 + max(c, 0)) / z.
    let peak = ((a - 1.0 + c.max(0.0)) / z).max(0.0);
    let width = ((a + c.abs()).sqrt() / z).max(1e-3);
    let breaks = [
        (peak - 8.0 * width).max(0.0),
        peak,
        peak + 8.0 * width,
        peak + 30.0 * width + 1.0 / z,
    ];
    Ok(integrate_halfline_from(&f, &breaks, cfg)?.value)
}
