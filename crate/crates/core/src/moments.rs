//! Exact construction of the moment objects of the Jain and Phillips-type
//! operators.
//!
//! Ratio polynomials `P_r` are stored in the basis index `k` (the `main`
//! symbol): `P_r` evaluated at `k` is the weight multiplying `L_{n,k}(x)`
//! in the moment series. Operator moments are [`ExpPoly`] values in `x`.

use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::symbolic::{rat, ExactPoly, ExpPoly, Monomial};

fn bp(coeffs: &[i64]) -> ExactPoly {
    ExactPoly::beta_poly(coeffs)
}

fn omb() -> ExactPoly {
    ExactPoly::one_minus_beta()
}

fn inv(m: u32) -> ExactPoly {
    ExactPoly::inv_one_minus_beta(m)
}

fn ninv(p: i32) -> ExactPoly {
    ExactPoly::monomial(BigRational::one(), 0, 0, p)
}

fn main_pow(d: u32) -> ExactPoly {
    ExactPoly::monomial(BigRational::one(), d, 0, 0)
}

fn int(c: i64) -> ExactPoly {
    ExactPoly::int(c)
}

pub(crate) fn binomial(r: usize, j: usize) -> BigRational {
    let mut c = BigInt::one();
    for i in 0..j {
        c = c * BigInt::from(r - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(c)
}

fn range_err(table: &'static str, requested: usize, supported: &str) -> Error {
    Error::Range {
        table,
        requested,
        supported: supported.to_string(),
    }
}

/// `c·(1 - e^{-nx})`
fn one_minus_exp(c: ExactPoly) -> ExpPoly {
    ExpPoly::new(c.clone(), -c)
}

/// The coefficient `a_s^r` of the closed-form ratio polynomials.
pub fn a_coefficient(s: usize, r: usize) -> Result<ExactPoly> {
    Ok(match (s, r) {
        (1, 2) => bp(&[1, 4, -2]),
        (1, 3) => bp(&[1, 1, -3, 1]),
        (2, 3) => bp(&[2, 4, 6, -12, 3]),
        (1, 4) => bp(&[3, -2, -7, 8, -2]),
        (2, 4) => bp(&[11, 16, 6, -24, 6]),
        (3, 4) => bp(&[3, 5, 5, 5, -10, 2]),
        (1, 5) => omb().pow(3) * bp(&[2, 2, -1]),
        (2, 5) => omb() * bp(&[7, 8, 0, -8, 2]),
        (3, 5) => bp(&[10, 6, -3, -8, -12, 12, -2]),
        (4, 5) => bp(&[24, 36, 30, 20, 15, -30, 5]),
        _ => return Err(range_err("a_s^r", r, "1 <= s < r <= 5")),
    })
}

/// Constant term `β^r (r + 1 - β) / (1 - β)` of `n^r P_r`, `r ≥ 1`.
fn ratio_constant(r: u32) -> ExactPoly {
    ExactPoly::beta().pow(r) * bp(&[i64::from(r) + 1, -1]) * inv(1)
}

/// Closed-form ratio polynomial `P_r` in `k`, `0 ≤ r ≤ 5`.
pub fn p_poly_closed(r: usize) -> Result<ExactPoly> {
    let k = ExactPoly::main();
    let a = |s| a_coefficient(s, r).expect("table entry exists");
    let body = match r {
        0 => return Ok(ExactPoly::one()),
        1 => omb() * &k + bp(&[0, 2, -1]) * inv(1),
        2 => omb().pow(2) * k.pow(2) + a(1) * &k + ratio_constant(2),
        3 => {
            omb().pow(3) * k.pow(3)
                + int(3) * a(1) * k.pow(2)
                + a(2) * &k * inv(1)
                + ratio_constant(3)
        }
        4 => {
            omb().pow(4) * k.pow(4)
                + int(2) * a(1) * k.pow(3)
                + a(2) * k.pow(2)
                + int(2) * a(3) * &k * inv(1)
                + ratio_constant(4)
        }
        5 => {
            omb().pow(5) * k.pow(5)
                + int(5) * a(1) * k.pow(4)
                + int(5) * a(2) * k.pow(3)
                + int(5) * a(3) * k.pow(2) * inv(1)
                + a(4) * &k * inv(1)
                + ratio_constant(5)
        }
        _ => return Err(range_err("closed-form P_r", r, "0..=5")),
    };
    Ok(body * ninv(r as i32))
}

fn p_cache() -> &'static Mutex<Vec<ExactPoly>> {
    static CACHE: OnceLock<Mutex<Vec<ExactPoly>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let k = ExactPoly::main();
        let p1 = (omb() * &k + bp(&[0, 2, -1]) * inv(1)) * ninv(1);
        Mutex::new(vec![ExactPoly::one(), p1])
    })
}

/// `P_r` generated from `P_0 = 1` and the closed `P_1` by
/// `n² P_{r+2} = n[(1-β)(k-1) + r + 2] P_{r+1} + β(r+2)(k-1) P_r`.
///
/// Defined for every `r`.
pub fn p_poly_recur(r: usize) -> ExactPoly {
    let mut table = p_cache().lock().expect("P table lock");
    let k = ExactPoly::main();
    while table.len() <= r {
        let s = table.len() - 2;
        let lead = (omb() * (&k - int(1)) + int(s as i64 + 2)) * ninv(1);
        let tail = ExactPoly::beta() * int(s as i64 + 2) * (&k - int(1)) * ninv(2);
        let next = lead * &table[s + 1] + tail * &table[s];
        table.push(next);
    }
    table[r].clone()
}

/// `n² P_{r+2} - n[(1-β)(k-1)+r+2] P_{r+1} - β(r+2)(k-1) P_r` over the
/// given sequence of ratio polynomials.
pub fn ratio_recurrence_residual(p: &[ExactPoly], r: usize) -> ExactPoly {
    let k = ExactPoly::main();
    let n = ExactPoly::n();
    let lead = &n * (omb() * (&k - int(1)) + int(r as i64 + 2));
    let tail = ExactPoly::beta() * int(r as i64 + 2) * (&k - int(1));
    n.pow(2) * &p[r + 2] - lead * &p[r + 1] - tail * &p[r]
}

/// Jain operator moment `B_n^β(t^r, x)`, `0 ≤ r ≤ 5`.
pub fn b_moment_closed(r: usize) -> Result<ExactPoly> {
    let x = |d| main_pow(d);
    Ok(match r {
        0 => ExactPoly::one(),
        1 => x(1) * inv(1),
        2 => x(2) * inv(2) + x(1) * ninv(1) * inv(3),
        3 => {
            x(3) * inv(3) + int(3) * x(2) * ninv(1) * inv(4) + bp(&[1, 2]) * x(1) * ninv(2) * inv(5)
        }
        4 => {
            x(4) * inv(4)
                + int(6) * x(3) * ninv(1) * inv(5)
                + bp(&[7, 8]) * x(2) * ninv(2) * inv(6)
                + bp(&[1, 8, 6]) * x(1) * ninv(3) * inv(7)
        }
        5 => {
            x(5) * inv(5)
                + int(10) * x(4) * ninv(1) * inv(6)
                + int(5) * bp(&[5, 4]) * x(3) * ninv(2) * inv(7)
                + int(15) * bp(&[1, 4, 2]) * x(2) * ninv(3) * inv(8)
                + bp(&[1, 22, 58, 24]) * x(1) * ninv(4) * inv(9)
        }
        _ => return Err(range_err("Jain moment B(t^r)", r, "0..=5")),
    })
}

/// Closed-form Phillips-type moment `T_{n,r}`, `0 ≤ r ≤ 3`, with
/// `T_{n,0} = 1` (the `e^{-nx} f(0)` term included).
pub fn t_moment_closed(r: usize) -> Result<ExpPoly> {
    let x = |d| main_pow(d);
    Ok(match r {
        0 => ExpPoly::from_poly(ExactPoly::one()),
        1 => ExpPoly::from_poly(x(1)) + one_minus_exp(bp(&[0, 2, -1]) * ninv(1) * inv(1)),
        2 => {
            ExpPoly::from_poly(x(2) + int(2) * bp(&[1, 2, -1]) * x(1) * ninv(1) * inv(1))
                + one_minus_exp(ratio_constant(2) * ninv(2))
        }
        3 => {
            ExpPoly::from_poly(
                x(3) + int(3) * bp(&[2, 2, -1]) * x(2) * ninv(1) * inv(1)
                    + int(3) * bp(&[2, 4, 1, -4, 1]) * x(1) * ninv(2) * inv(2),
            ) + one_minus_exp(ratio_constant(3) * ninv(3))
        }
        _ => return Err(range_err("closed-form T_r", r, "0..=3")),
    })
}

/// `Σ_{k≥1} P_r(k) L_{n,k}(x)` in closed form: expand `P_r` in powers of
/// `k`, replace `Σ_k k^s L_{n,k}` by `n^s B_n^β(t^s)`, and drop the `k = 0`
/// term `P_r(0) e^{-nx}`.
///
/// This is the moment without the `e^{-nx} f(0)` contribution, so for
/// `r = 0` it equals `1 - e^{-nx}`.
pub fn t_series_part(r: usize) -> Result<ExpPoly> {
    let p = p_poly_recur(r);
    let mut poly = ExactPoly::zero();
    for s in 0..=p.main_degree().unwrap_or(0) {
        let c = p.coeff_main(s);
        if c.is_zero() {
            continue;
        }
        let b = b_moment_closed(s as usize)
            .map_err(|_| range_err("Jain moment B(t^r) needed by T_r", r, "0..=5"))?;
        poly = poly + c.shift_ninv(-(s as i32)) * b;
    }
    let at_zero = p.subs_main(&BigRational::zero());
    Ok(ExpPoly::new(poly, -at_zero))
}

/// `T_{n,r} = P_n^β(t^r, x)` for any `r` the Jain moment table supports.
pub fn t_moment_general(r: usize) -> Result<ExpPoly> {
    let mut t = t_series_part(r)?;
    if r == 0 {
        t.exp_coeff = t.exp_coeff + ExactPoly::one();
    }
    Ok(t)
}

/// `(β/n)^r (r + 1 - β) / (1 - β)`, the constant of `f_{n,r}`.
pub fn f_constant(r: usize) -> ExactPoly {
    if r == 0 {
        return ExactPoly::one();
    }
    ratio_constant(r as u32) * ninv(r as i32)
}

/// The coefficient `b_j^r` of the reduced polynomials.
pub fn b_coefficient(j: usize, r: usize) -> Result<ExactPoly> {
    if r > 5 || j >= r.max(1) {
        return Err(range_err("b_j^r", r, "0 <= j < r <= 5"));
    }
    let ri = r as i64;
    Ok(match j {
        0 => ExactPoly::one(),
        1 => bp(&[ri - 1, 2, -1]),
        2 => bp(&[(ri - 1) * (ri - 2), 4 * (ri - 2), 7 - 2 * ri, -4, 1]),
        3 if r == 4 => bp(&[6, 12, 6, -8, -6, 6, -1]),
        3 if r == 5 => bp(&[24, 36, 6, -20, -3, 6, -1]),
        4 => bp(&[24, 48, 48, -8, -31, 8, 14, -8, 1]),
        _ => unreachable!(),
    })
}

/// Reduced polynomial `f_{n,r}` from the `b_j^r` table, `0 ≤ r ≤ 5`.
pub fn f_poly_closed(r: usize) -> Result<ExactPoly> {
    if r > 5 {
        return Err(range_err("closed-form f_r", r, "0..=5"));
    }
    if r == 0 {
        return Ok(ExactPoly::one());
    }
    let mut f = f_constant(r);
    for j in 0..r {
        f = f + b_coefficient(j, r)?.scale(&binomial(r, j))
            * main_pow((r - j) as u32)
            * ninv(j as i32)
            * inv(j as u32);
    }
    Ok(f)
}

/// `f_{n,r} = T_{n,r} + [(β/n)^r (r+1-β)/(1-β) - δ_{r0}] e^{-nx}` built
/// from the moment route; fails if the exponential part does not cancel.
pub fn f_poly_from_moments(r: usize) -> Result<ExactPoly> {
    let t = t_moment_general(r)?;
    let shift = if r == 0 {
        ExactPoly::zero()
    } else {
        f_constant(r)
    };
    let exp = t.exp_coeff + shift;
    if !exp.is_zero() {
        return Err(Error::Domain(format!(
            "f_{r} keeps an exponential part: {}",
            exp.to_text("x")
        )));
    }
    Ok(t.poly)
}

/// Which `α_j^r` values drive the `f_{n,r}` recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaTable {
    /// The coefficient list as commonly quoted.
    Printed,
    /// Values obtained by expanding `f_{n,r} - [x + ...] f_{n,r-1}` in the
    /// basis `f_{n,0..r-2}`. They differ from `Printed` in
    /// `α_2^3, α_2^4, α_2^5, α_3^5, α_4^5`.
    Corrected,
}

/// `α_j^r` for `2 ≤ r ≤ 5`, `1 ≤ j ≤ r - 1`.
pub fn alpha_coefficient(j: usize, r: usize, table: AlphaTable) -> Result<ExactPoly> {
    if !(2..=5).contains(&r) || j == 0 || j >= r {
        return Err(range_err("alpha_j^r", r, "1 <= j < r, 2 <= r <= 5"));
    }
    let ri = r as i64;
    Ok(match (j, r, table) {
        (1, _, _) => int(ri - 1) * bp(&[ri - 2, 4, -1]),
        (2, _, AlphaTable::Printed) => int((ri - 2) * (ri - 3)) * bp(&[2, 2 * ri - 5, 1]),
        (2, _, AlphaTable::Corrected) => int((ri - 1) * (ri - 2)) * bp(&[2, 2 * ri - 5, 1]),
        (3, 4, _) => int(6) * bp(&[1, 6, -1]),
        (3, 5, AlphaTable::Printed) => int(12) * bp(&[3, 10, -2]),
        (3, 5, AlphaTable::Corrected) => int(12) * bp(&[3, 12, -2]),
        (4, 5, AlphaTable::Printed) => int(48) * bp(&[1, 1, 1]),
        (4, 5, AlphaTable::Corrected) => int(12) * bp(&[4, 7, 2]),
        _ => unreachable!(),
    })
}

fn f_leading_factor(r: usize) -> ExactPoly {
    main_pow(1) + (int(2 * (r as i64 - 1)) + bp(&[0, 2, -1])) * ninv(1) * inv(1)
}

fn alpha_weight(j: usize) -> ExactPoly {
    let sign = if j.is_multiple_of(2) { 1 } else { -1 };
    int(sign) * ExactPoly::beta().pow(j as u32 - 1) * ninv(j as i32 + 1) * inv(j as u32 + 1)
}

/// `f_{n,r}` from `f_{n,r-1}, …, f_{n,0}` through
/// `f_r = [x + (2(r-1) + β(2-β)) / (n(1-β))] f_{r-1}
///        + Σ_j (-1)^j β^{j-1} α_j^r / (n(1-β))^{j+1} f_{r-j-1}`,
/// seeded with `f_0`, `f_1` from the moment route.
pub fn f_poly_recur(r: usize, table: AlphaTable) -> Result<ExactPoly> {
    if !(2..=5).contains(&r) {
        return Err(range_err("recurrence f_r", r, "2..=5"));
    }
    let mut f = vec![f_poly_from_moments(0)?, f_poly_from_moments(1)?];
    for s in 2..=r {
        let mut next = f_leading_factor(s) * &f[s - 1];
        for j in 1..s {
            next = next + alpha_weight(j) * alpha_coefficient(j, s, table)? * &f[s - j - 1];
        }
        f.push(next);
    }
    Ok(f.pop().unwrap())
}

/// Solves for the `α_j^r` (`j = 1..r-1`) that make the `f_{n,r}`
/// recurrence exact, using the moment-route `f` polynomials.
///
/// The remainder `f_r - [x + ...] f_{r-1}` has degree `r - 2` in `x` and
/// each `f_d` is monic of degree `d`, so the expansion is unique.
pub fn alpha_from_decomposition(r: usize) -> Result<Vec<ExactPoly>> {
    if r < 2 {
        return Err(range_err("alpha decomposition", r, ">= 2"));
    }
    let f: Vec<ExactPoly> = (0..=r).map(f_poly_from_moments).collect::<Result<_>>()?;
    let mut rest = &f[r] - &(f_leading_factor(r) * &f[r - 1]);
    let mut out = Vec::with_capacity(r - 1);
    for j in 1..r {
        let d = (r - j - 1) as u32;
        let c = rest.coeff_main(d);
        rest = rest - &c * &f[d as usize];
        // c = (-1)^j β^{j-1} α / (n(1-β))^{j+1}
        let scaled = &c * &(omb().pow(j as u32 + 1) * ninv(-(j as i32) - 1));
        let scaled = if j % 2 == 1 { -scaled } else { scaled };
        let alpha = divide_beta_pow(&scaled, j as u32 - 1).ok_or_else(|| {
            Error::Domain(format!("alpha_{j}^{r} is not divisible by beta^{}", j - 1))
        })?;
        out.push(alpha);
    }
    if !rest.is_zero() {
        return Err(Error::Domain(format!(
            "f_{r} recurrence leaves a remainder {}",
            rest.to_text("x")
        )));
    }
    Ok(out)
}

fn divide_beta_pow(p: &ExactPoly, e: u32) -> Option<ExactPoly> {
    let mut terms = Vec::new();
    for (m, c) in p.terms() {
        if m.beta < e {
            return None;
        }
        terms.push((
            Monomial {
                beta: m.beta - e,
                ..*m
            },
            c.clone(),
        ));
    }
    Some(ExactPoly::from_terms(terms, p.denom_pow()))
}

/// `F_{n,r}(x) = Σ_{s<r} (-1)^s C(r,s) (β/n)^{r-s} (r+1-s-β)/(1-β) x^s`.
pub fn central_shift_poly(r: usize) -> ExactPoly {
    let mut out = ExactPoly::zero();
    for s in 0..r {
        let sign = if s % 2 == 0 { 1 } else { -1 };
        let e = (r - s) as u32;
        out = out
            + int(sign)
                * ExactPoly::beta().pow(e)
                * ninv(e as i32)
                * bp(&[(r - s) as i64 + 1, -1])
                * inv(1)
                * main_pow(s as u32)
            .scale(&binomial(r, s));
    }
    out
}

/// Transcribed closed forms of the central moments
/// `μ_{n,r} = P_n^β((t-x)^r, x)`, `1 ≤ r ≤ 5`.
///
/// Kept verbatim so disagreements with [`central_moment_derived`] can be
/// reported; the derived form is authoritative.
pub fn central_moment_closed(r: usize) -> Result<ExpPoly> {
    let x = |d| main_pow(d);
    let lead = match r {
        1 => ExactPoly::zero(),
        2 => int(2) * bp(&[1, 2, -1]) * x(1) * ninv(1) * inv(1),
        3 => {
            int(3) * bp(&[0, -2, 1]) * x(2) * ninv(1) * inv(1)
                + int(3) * bp(&[2, 4, 1, -1, 1]) * x(1) * ninv(2) * inv(2)
        }
        4 => {
            int(4) * bp(&[0, 2, -1]) * x(3) * ninv(1) * inv(1)
                + int(2) * bp(&[10, 8, -13, 6, 3]) * x(2) * ninv(2) * inv(2)
                + int(4) * bp(&[6, 12, 6, -8, -6, 6, -1]) * x(1) * ninv(3) * inv(3)
        }
        5 => {
            let l35 = bp(&[12, 12, -6, -4, 9, -6, 1]);
            let l45 = bp(&[23, 38, 27, -12, -25, 8, 14, -8, 1]);
            int(5) * bp(&[0, -2, 1]) * x(4) * ninv(1) * inv(1)
                + int(10) * bp(&[0, 0, 3, -4, 1]) * x(3) * ninv(2) * inv(2)
                + int(10) * l35 * x(2) * ninv(3) * inv(3)
                + int(5) * l45 * x(1) * ninv(4) * inv(4)
        }
        _ => return Err(range_err("closed-form mu_r", r, "1..=5")),
    };
    Ok(ExpPoly::from_poly(lead) + one_minus_exp(central_shift_poly(r)))
}

/// `μ_{n,r} = Σ_j C(r,j) (-x)^{r-j} T_{n,j}` from the exact moments.
pub fn central_moment_derived(r: usize) -> Result<ExpPoly> {
    let mut out = ExpPoly::zero();
    for j in 0..=r {
        let sign = if (r - j).is_multiple_of(2) { 1 } else { -1 };
        let w = (int(sign) * main_pow((r - j) as u32)).scale(&binomial(r, j));
        out = out + t_moment_general(j)?.mul_poly(&w);
    }
    Ok(out)
}

/// `lim_{n→∞} n·e(x)` at fixed `x > 0`.
///
/// The `e^{-nx}` part decays faster than any power of `n`; the polynomial
/// part must be `O(1/n)`.
pub fn first_order_coefficient(e: &ExpPoly) -> Result<ExactPoly> {
    if let Some((lo, _)) = e.poly.ninv_range() {
        if lo < 1 {
            return Err(Error::Domain(format!(
                "n·e(x) diverges: polynomial part has a (1/n)^{lo} term"
            )));
        }
    }
    Ok(e.poly.coeff_ninv(1))
}

/// Voronovskaja coefficients `(drift, diffusion)` with
/// `lim n[P_n f - f](x) = drift·f'(x) + diffusion·f''(x)`, read off the
/// exact first and second central moments.
pub fn voronovskaja_coefficients() -> Result<(ExactPoly, ExactPoly)> {
    let drift = first_order_coefficient(&central_moment_derived(1)?)?;
    let second = first_order_coefficient(&central_moment_derived(2)?)?;
    Ok((drift, second.scale(&rat(1, 2))))
}
