//! Jain basis `L_{n,k}^{(β)}(x) = nx (nx + kβ)^{k-1} e^{-(nx + kβ)} / k!`
//! and its inner products against monomials.

use crate::error::{Error, Result};
use crate::numerics::{ln_factorial, ln_hyp1f1_terminating, CompensatedSum, SeriesQuadConfig};

/// Operator index `n > 0` and Jain parameter `0 ≤ β < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JainParams {
    n: f64,
    beta: f64,
}

impl JainParams {
    pub fn new(n: f64, beta: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain(format!("n must be positive, got {n}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::Domain(format!("beta must lie in [0, 1), got {beta}")));
        }
        Ok(Self { n, beta })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `ln L_{n,k}(x)`; `-∞` where the basis vanishes.
///
/// At `x = 0` the basis is taken by continuity: `L_{n,0}(0) = 1` and
/// `L_{n,k}(0) = 0` for `k ≥ 1`.
pub fn ln_jain_basis(p: JainParams, k: usize, x: f64) -> f64 {
    let nx = p.n * x;
    if k == 0 {
        return -nx;
    }
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    let s = nx + kf * p.beta;
    nx.ln() + (kf - 1.0) * s.ln() - s - ln_factorial(k as u64)
}

pub fn jain_basis(p: JainParams, k: usize, x: f64) -> f64 {
    ln_jain_basis(p, k, x).exp()
}

/// `Σ_k L_{n,k}(x)` truncated once a term drops below `tail_tol` *and*
/// the running mass exceeds `1 - tail_tol`.
///
/// The weights are unimodal in `k`, so the mass test keeps a small
/// pre-peak term from ending the sum early. Returns the sum and the last
/// index included.
pub fn basis_partial_sum(p: JainParams, x: f64, cfg: &SeriesQuadConfig) -> Result<(f64, usize)> {
    let mut mass = CompensatedSum::default();
    for k in 0..=cfg.k_max {
        let l = jain_basis(p, k, x);
        mass.add(l);
        if l < cfg.tail_tol && mass.value() > 1.0 - cfg.tail_tol {
            return Ok((mass.value(), k));
        }
    }
    Err(Error::Truncation {
        what: format!(
            "basis mass at n = {}, beta = {}, x = {x} reached {}",
            p.n,
            p.beta,
            mass.value()
        ),
        k_max: cfg.k_max,
    })
}

/// A truncated basis series and the index where it stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub k_used: usize,
}

/// `Σ_{k ≥ start} w(k) L_{n,k}(x)`.
///
/// Runs at least to the index where [`basis_partial_sum`] would stop (twice
/// that when `w` grows polynomially) and then until the geometric tail
/// bound `|t_k| / (1 - ρ)` falls below `tail_tol · min(1, |sum|)`, where
/// `ρ` is the ratio of consecutive terms.
pub fn jain_series<W>(
    p: JainParams,
    x: f64,
    start: usize,
    polynomial_growth: bool,
    cfg: &SeriesQuadConfig,
    mut weight: W,
) -> Result<SeriesSum>
where
    W: FnMut(usize) -> Result<f64>,
{
    let mut mass = CompensatedSum::default();
    let mut acc = CompensatedSum::default();
    let mut mass_done: Option<usize> = None;
    let mut previous = f64::NAN;
    for k in 0..=cfg.k_max {
        let l = jain_basis(p, k, x);
        mass.add(l);
        let mut term = 0.0;
        if k >= start && l > 0.0 {
            term = weight(k)? * l;
            acc.add(term);
        }
        if mass_done.is_none() && l < cfg.tail_tol && mass.value() > 1.0 - cfg.tail_tol {
            mass_done = Some(k);
        }
        if let Some(k0) = mass_done {
            let min_k = if polynomial_growth { 2 * k0 } else { k0 };
            if k >= min_k.max(start) {
                let t = term.abs();
                let ratio = t / previous;
                let bound = cfg.tail_tol * acc.value().abs().min(1.0);
                if t == 0.0 || (ratio < 1.0 && t / (1.0 - ratio) <= bound) {
                    return Ok(SeriesSum {
                        value: acc.value(),
                        k_used: k,
                    });
                }
            }
        }
        previous = term.abs();
    }
    Err(Error::Truncation {
        what: format!(
            "weighted basis series at n = {}, beta = {}, x = {x}",
            p.n, p.beta
        ),
        k_max: cfg.k_max,
    })
}

/// `ln ⟨L_{n,k-1}, t^r⟩` from the terminating hypergeometric form
/// `(k)_r / n^{r+1} · e^{-(k-1)β} · 1F1(2-k; 1-r-k; (k-1)β)`.
pub fn ln_basis_moment_integral(p: JainParams, k: usize, r: u32) -> f64 {
    assert!(k >= 1, "the inner product is indexed from k = 1");
    let kf = k as f64;
    let rf = f64::from(r);
    let z = (kf - 1.0) * p.beta;
    let ln_poch: f64 = (0..r).map(|i| (kf + f64::from(i)).ln()).sum();
    let hyp = ln_hyp1f1_terminating(2.0 - kf, 1.0 - rf - kf, z)
        .expect("degree k-2 stops before the lower parameter 1-r-k reaches zero");
    debug_assert_eq!(hyp.sign, 1.0);
    ln_poch - (rf + 1.0) * p.n.ln() - z + hyp.ln_abs
}

/// `⟨L_{n,k-1}, t^r⟩ = ∫₀^∞ L_{n,k-1}(t) t^r dt` for `k ≥ 1`.
pub fn basis_moment_integral(p: JainParams, k: usize, r: u32) -> f64 {
    ln_basis_moment_integral(p, k, r).exp()
}

/// The exact moment ratio `⟨L_{n,k-1}, t^r⟩ / ⟨L_{n,k-1}, 1⟩`.
///
/// For `β > 0` this is a rational, not polynomial, function of `k`: it
/// matches the moment polynomials of `moments::p_poly_recur` only at
/// `β = 0` and asymptotically as `k → ∞`.
pub fn moment_ratio(p: JainParams, k: usize, r: u32) -> f64 {
    (ln_basis_moment_integral(p, k, r) - ln_basis_moment_integral(p, k, 0)).exp()
}
