//! Numerical application of the Jain operator `B_n^β` and its Phillips-type
//! modification `P_n^β`, plus series evaluation of their moments.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::basis::{jain_basis, jain_series, ln_basis_moment_integral, ln_jain_basis, JainParams};
use crate::error::{Error, Result};
use crate::moments::{binomial, p_poly_recur};
use crate::numerics::{integrate_interval, kronrod_rule, SeriesQuadConfig};
use num_traits::ToPrimitive;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function on `[0, ∞)` with the metadata the operators need.
#[derive(Clone)]
pub struct TestFunction {
    label: String,
    eval: Eval,
    is_bounded: bool,
    sup_norm_hint: Option<f64>,
    /// Coefficients in `t` when the function is a polynomial.
    polynomial: Option<Vec<f64>>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("is_bounded", &self.is_bounded)
            .field("sup_norm_hint", &self.sup_norm_hint)
            .field("polynomial", &self.polynomial)
            .finish()
    }
}

/// Names accepted by [`TestFunction::builtin`].
pub const BUILTIN_NAMES: [&str; 7] = ["const", "linear", "square", "cube", "exp-neg", "sin", "abs-sin"];

impl TestFunction {
    /// A general function. Unbounded functions are assumed to grow at most
    /// polynomially.
    pub fn new<F>(label: impl Into<String>, is_bounded: bool, sup_norm_hint: Option<f64>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(f),
            is_bounded,
            sup_norm_hint,
            polynomial: None,
        }
    }

    /// `Σ_j c_j t^j`.
    pub fn polynomial(label: impl Into<String>, coeffs: Vec<f64>) -> Self {
        let degree = coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0);
        let cs = coeffs.clone();
        let constant = degree == 0;
        let sup = constant.then(|| coeffs.first().copied().unwrap_or(0.0).abs());
        Self {
            label: label.into(),
            eval: Arc::new(move |t| cs.iter().rev().fold(0.0, |acc, c| acc * t + c)),
            is_bounded: constant,
            sup_norm_hint: sup,
            polynomial: Some(coeffs),
        }
    }

    /// `t^r`.
    pub fn monomial(r: usize) -> Self {
        let mut c = vec![0.0; r + 1];
        c[r] = 1.0;
        Self::polynomial(format!("t^{r}"), c)
    }

    /// One of [`BUILTIN_NAMES`].
    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "const" => Self::polynomial("const", vec![1.0]),
            "linear" => Self::polynomial("linear", vec![0.0, 1.0]),
            "square" => Self::polynomial("square", vec![0.0, 0.0, 1.0]),
            "cube" => Self::polynomial("cube", vec![0.0, 0.0, 0.0, 1.0]),
            "exp-neg" => Self::new("exp-neg", true, Some(1.0), |t: f64| (-t).exp()),
            "sin" => Self::new("sin", true, Some(1.0), f64::sin),
            "abs-sin" => Self::new("abs-sin", true, Some(1.0), |t: f64| t.sin().abs()),
            _ => return None,
        })
    }

    /// First and second derivatives of a built-in, where they exist
    /// everywhere.
    pub fn builtin_derivatives(name: &str) -> Option<(Self, Self)> {
        Some(match name {
            "const" => (Self::polynomial("const'", vec![0.0]), Self::polynomial("const''", vec![0.0])),
            "linear" => (Self::polynomial("linear'", vec![1.0]), Self::polynomial("linear''", vec![0.0])),
            "square" => (
                Self::polynomial("square'", vec![0.0, 2.0]),
                Self::polynomial("square''", vec![2.0]),
            ),
            "cube" => (
                Self::polynomial("cube'", vec![0.0, 0.0, 3.0]),
                Self::polynomial("cube''", vec![0.0, 6.0]),
            ),
            "exp-neg" => (
                Self::new("exp-neg'", true, Some(1.0), |t: f64| -(-t).exp()),
                Self::new("exp-neg''", true, Some(1.0), |t: f64| (-t).exp()),
            ),
            "sin" => (
                Self::new("sin'", true, Some(1.0), f64::cos),
                Self::new("sin''", true, Some(1.0), |t: f64| -t.sin()),
            ),
            _ => return None,
        })
    }

    /// `a·f + g`.
    pub fn affine_combination(a: f64, f: &Self, g: &Self) -> Self {
        let (fe, ge) = (f.eval.clone(), g.eval.clone());
        let polynomial = match (&f.polynomial, &g.polynomial) {
            (Some(pf), Some(pg)) => {
                let len = pf.len().max(pg.len());
                Some(
                    (0..len)
                        .map(|i| a * pf.get(i).copied().unwrap_or(0.0) + pg.get(i).copied().unwrap_or(0.0))
                        .collect(),
                )
            }
            _ => None,
        };
        let sup = match (f.sup_norm_hint, g.sup_norm_hint) {
            (Some(sf), Some(sg)) => Some(a.abs() * sf + sg),
            _ => None,
        };
        Self {
            label: format!("{a}*{}+{}", f.label, g.label),
            eval: Arc::new(move |t| a * fe(t) + ge(t)),
            is_bounded: f.is_bounded && g.is_bounded,
            sup_norm_hint: sup,
            polynomial,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_bounded(&self) -> bool {
        self.is_bounded
    }

    pub fn sup_norm_hint(&self) -> Option<f64> {
        self.sup_norm_hint
    }

    pub fn polynomial_coeffs(&self) -> Option<&[f64]> {
        self.polynomial.as_deref()
    }
}

/// `B_n^β(f, x) = Σ_{k≥0} L_{n,k}(x) f(k/n)`.
pub fn apply_jain(p: JainParams, f: &TestFunction, x: f64, cfg: &SeriesQuadConfig) -> Result<f64> {
    check_x(x)?;
    let n = p.n();
    let s = jain_series(p, x, 0, !f.is_bounded(), cfg, |k| Ok(f.eval(k as f64 / n)))?;
    Ok(s.value)
}

/// `P_n^β(f, x) = Σ_{k≥1} [⟨L_{n,k-1}, f⟩ / ⟨L_{n,k-1}, 1⟩] L_{n,k}(x) + e^{-nx} f(0)`.
///
/// Polynomial `f` uses the exact inner products `⟨L_{n,k-1}, t^r⟩`; other
/// functions are integrated against a cached per-`k` quadrature rule for the
/// normalized density `L_{n,k-1} / ⟨L_{n,k-1}, 1⟩`. Unbounded `f` must grow
/// at most polynomially.
pub fn apply_phillips(p: JainParams, f: &TestFunction, x: f64, cfg: &SeriesQuadConfig) -> Result<f64> {
    check_x(x)?;
    let boundary = (-p.n() * x).exp() * f.eval(0.0);
    let series = match f.polynomial_coeffs() {
        Some(coeffs) => {
            let coeffs = coeffs.to_vec();
            jain_series(p, x, 1, !f.is_bounded(), cfg, |k| {
                Ok(polynomial_ratio(p, k, &coeffs))
            })?
        }
        None => jain_series(p, x, 1, !f.is_bounded(), cfg, |k| {
            let rule = density_rule(p, k, cfg)?;
            Ok(rule.iter().map(|&(t, w)| w * f.eval(t)).sum())
        })?,
    };
    Ok(series.value + boundary)
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must be a finite nonnegative number, got {x}")))
    }
}

/// `⟨L_{n,k-1}, Σ c_r t^r⟩ / ⟨L_{n,k-1}, 1⟩` from the exact inner products.
fn polynomial_ratio(p: JainParams, k: usize, coeffs: &[f64]) -> f64 {
    let ratios = exact_ratios(p, k, coeffs.len().saturating_sub(1));
    coeffs.iter().zip(ratios.iter()).map(|(c, m)| c * m).sum()
}

type RatioKey = (u64, u64, usize);

fn ratio_cache() -> &'static RwLock<HashMap<RatioKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<RwLock<HashMap<RatioKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `⟨L_{n,k-1}, t^r⟩ / ⟨L_{n,k-1}, 1⟩` for `r = 0..=max(degree, 5)`.
///
/// Each inner product costs `O(k)`, and every `x` reuses the same `k`, so
/// the values are cached by `(n, β, k)`.
fn exact_ratios(p: JainParams, k: usize, degree: usize) -> Arc<Vec<f64>> {
    let key = (p.n().to_bits(), p.beta().to_bits(), k);
    if let Some(v) = ratio_cache().read().expect("ratio cache").get(&key) {
        if v.len() > degree {
            return v.clone();
        }
    }
    let ln0 = ln_basis_moment_integral(p, k, 0);
    let v: Arc<Vec<f64>> = Arc::new(
        (0..=degree.max(5))
            .map(|r| (ln_basis_moment_integral(p, k, r as u32) - ln0).exp())
            .collect(),
    );
    let mut cache = ratio_cache().write().expect("ratio cache");
    if cache.len() >= RULE_CACHE_CAPACITY {
        cache.clear();
    }
    cache.insert(key, v.clone());
    v
}

type Rule = Arc<Vec<(f64, f64)>>;
type RuleKey = (u64, u64, usize, u64);

const RULE_CACHE_CAPACITY: usize = 200_000;

fn rule_cache() -> &'static RwLock<HashMap<RuleKey, Rule>> {
    static CACHE: OnceLock<RwLock<HashMap<RuleKey, Rule>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Nodes and weights integrating against `L_{n,k-1} / ⟨L_{n,k-1}, 1⟩`.
///
/// The partition comes from adaptive Gauss-Kronrod on the density itself
/// over `[μ - 14σ, μ + 40σ]` (clipped at 0), refined by one more bisection
/// so smooth `f` is resolved too. Rules are cached by `(n, β, k, tolerance)`.
pub fn density_rule(p: JainParams, k: usize, cfg: &SeriesQuadConfig) -> Result<Rule> {
    let key = (p.n().to_bits(), p.beta().to_bits(), k, cfg.quad_rel_tol.to_bits());
    if let Some(rule) = rule_cache().read().expect("rule cache").get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(build_density_rule(p, k, cfg)?);
    let mut cache = rule_cache().write().expect("rule cache");
    if cache.len() >= RULE_CACHE_CAPACITY {
        cache.clear();
    }
    Ok(cache.entry(key).or_insert(rule).clone())
}

fn build_density_rule(p: JainParams, k: usize, cfg: &SeriesQuadConfig) -> Result<Vec<(f64, f64)>> {
    assert!(k >= 1, "density rules are indexed from k = 1");
    let ln0 = ln_basis_moment_integral(p, k, 0);
    let mean = (ln_basis_moment_integral(p, k, 1) - ln0).exp();
    let second = (ln_basis_moment_integral(p, k, 2) - ln0).exp();
    let sd = (second - mean * mean).max(0.0).sqrt().max(mean * 1e-3);
    let lo = (mean - 14.0 * sd).max(0.0);
    let hi = mean + 40.0 * sd;
    let density = |t: f64| (ln_jain_basis(p, k - 1, t) - ln0).exp();
    let fit = integrate_interval(&density, lo, hi, cfg.quad_rel_tol, cfg.quad_rel_tol * 1e-3, cfg.quad_max_subdiv)?;
    let mut rule = Vec::with_capacity(fit.panels.len() * 2 * 21);
    for &(a, b) in &fit.panels {
        let mid = 0.5 * (a + b);
        for (s, e) in [(a, mid), (mid, b)] {
            for (t, w) in kronrod_rule(s, e) {
                let wt = w * density(t);
                if wt != 0.0 {
                    rule.push((t, wt));
                }
            }
        }
    }
    let mass: f64 = rule.iter().map(|(_, w)| w).sum();
    if (mass - 1.0).abs() > 100.0 * cfg.quad_rel_tol {
        return Err(Error::Quadrature {
            what: format!(
                "density rule for k = {k} at n = {}, beta = {} has mass {mass}",
                p.n(),
                p.beta()
            ),
            estimate: (mass - 1.0).abs(),
            subdivisions: fit.panels.len(),
        });
    }
    Ok(rule)
}

/// `T_{n,r}(x) = Σ_{k≥1} P_r(k) L_{n,k}(x) + δ_{r0} e^{-nx}` with the
/// ratio polynomials `P_r` from the recurrence.
pub fn t_moment_series(p: JainParams, r: usize, x: f64, cfg: &SeriesQuadConfig) -> Result<f64> {
    check_x(x)?;
    let coeffs = p_poly_recur(r).main_coefficients(p.beta(), p.n())?;
    let s = jain_series(p, x, 1, r > 0, cfg, |k| Ok(horner(&coeffs, k as f64)))?;
    let boundary = if r == 0 { (-p.n() * x).exp() } else { 0.0 };
    Ok(s.value + boundary)
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Which per-`k` weights a moment series uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentRoute {
    /// The operator itself: exact ratios `⟨L_{n,k-1}, t^j⟩ / ⟨L_{n,k-1}, 1⟩`.
    ExactIntegrals,
    /// The closed-form ratio polynomials `P_j(k)`. Equal to the exact
    /// ratios only at `β = 0`; for `β > 0` the summed moments differ by
    /// `n^{-r} G(nx)` with `G` decaying exponentially in `nx`.
    RatioPolynomials,
}

/// `μ_{n,r}(x) = P_n^β((t - x)^r, x)`, expanded binomially over the chosen
/// per-`k` moment weights.
pub fn central_moment_series(
    p: JainParams,
    r: usize,
    x: f64,
    route: MomentRoute,
    cfg: &SeriesQuadConfig,
) -> Result<f64> {
    check_x(x)?;
    let binom: Vec<f64> = (0..=r)
        .map(|j| binomial(r, j).to_f64().expect("small binomial") * (-x).powi((r - j) as i32))
        .collect();
    let boundary = (-p.n() * x).exp() * (-x).powi(r as i32);
    let s = match route {
        MomentRoute::ExactIntegrals => jain_series(p, x, 1, r > 0, cfg, |k| {
            let ratios = exact_ratios(p, k, r);
            Ok(binom.iter().zip(ratios.iter()).map(|(c, m)| c * m).sum())
        })?,
        MomentRoute::RatioPolynomials => {
            let polys: Vec<Vec<f64>> = (0..=r)
                .map(|j| p_poly_recur(j).main_coefficients(p.beta(), p.n()))
                .collect::<Result<_>>()?;
            jain_series(p, x, 1, r > 0, cfg, |k| {
                let kf = k as f64;
                Ok(binom.iter().zip(&polys).map(|(c, q)| c * horner(q, kf)).sum())
            })?
        }
    };
    Ok(s.value + boundary)
}

/// Direct evaluation of `L_{n,k}(x)`, re-exported for callers that only
/// need the operators.
pub fn basis_value(p: JainParams, k: usize, x: f64) -> f64 {
    jain_basis(p, k, x)
}
