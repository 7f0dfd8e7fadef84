//! Checks of the differential identities satisfied by the moments and the
//! basis, and convergence experiments for the Phillips-type operator.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{jain_basis, JainParams};
use crate::error::{Error, Result};
use crate::moments::{first_order_coefficient, p_poly_recur, t_moment_general, t_series_part, voronovskaja_coefficients};
use crate::numerics::SeriesQuadConfig;
use crate::operators::{apply_phillips, TestFunction};
use crate::symbolic::{ExactPoly, ExpPoly};

fn int(c: i64) -> ExactPoly {
    ExactPoly::int(c)
}

fn x_poly() -> ExactPoly {
    ExactPoly::main()
}

/// `n·x` as an exact polynomial in `x`.
fn nx() -> ExactPoly {
    ExactPoly::monomial(BigRational::from_integer(1.into()), 1, 0, -1)
}

/// `residual(h/2) / residual(h)`; about `1/4` for a second-order error.
pub fn halving_ratio<F: Fn(f64) -> f64>(residual: F, h: f64) -> f64 {
    residual(h / 2.0) / residual(h)
}

// ---------------------------------------------------------------------------
// Moment identity: [-βx(D+n) + nx + β] Q_r = n x² (D+n) R_r with
// Q_r = n² T_{r+2} - n(r+β+1) T_{r+1} + β(r+2) T_r and
// R_r = n(1-β) T_{r+1} + β(r+2) T_r.

/// Which version of the moments enters the moment identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentForm {
    /// The sums `Σ_{k≥1} P_r(k) L_{n,k}(x)`, so `T_0 = 1 - e^{-nx}`.
    KSeries,
    /// The operator images of `t^r`, so `T_0 = 1`.
    OperatorImage,
}

fn moment(r: usize, form: MomentForm) -> Result<ExpPoly> {
    match form {
        MomentForm::KSeries => t_series_part(r),
        MomentForm::OperatorImage => t_moment_general(r),
    }
}

fn moment_identity_parts(r: usize, form: MomentForm) -> Result<(ExpPoly, ExpPoly)> {
    let t0 = moment(r, form)?;
    let t1 = moment(r + 1, form)?;
    let t2 = moment(r + 2, form)?;
    let n = ExactPoly::n();
    let beta = ExactPoly::beta();
    let c = int(r as i64 + 2);
    let q = t2.mul_poly(&n.pow(2)) - t1.mul_poly(&(&n * &(int(r as i64 + 1) + beta.clone())))
        + t0.mul_poly(&(&beta * &c));
    let r_part = t1.mul_poly(&(&n * &ExactPoly::one_minus_beta())) + t0.mul_poly(&(&beta * &c));
    Ok((q, r_part))
}

/// Exact `LHS - RHS` of the moment identity; zero when it holds
/// identically in `x`, `β` and `n`.
pub fn moment_identity_residual(r: usize, form: MomentForm) -> Result<ExpPoly> {
    let (q, rr) = moment_identity_parts(r, form)?;
    let beta = ExactPoly::beta();
    let lhs = q.d_plus_n().mul_poly(&-(&beta * &x_poly())) + q.mul_poly(&(nx() + beta));
    let rhs = rr.d_plus_n().mul_poly(&(nx() * x_poly()));
    Ok(lhs - rhs)
}

/// Finite-difference residual of the moment identity at a point, with `D`
/// replaced by a central difference of step `h`, divided by
/// `max(1, |LHS|, |RHS|)` so roundoff is comparable across the grid.
pub fn check_t_diff_identity(p: JainParams, r: usize, x: f64, h: f64, form: MomentForm) -> Result<f64> {
    let (q, rr) = moment_identity_parts(r, form)?;
    let (n, b) = (p.n(), p.beta());
    let ev = |e: &ExpPoly, t: f64| e.eval(t, b, n);
    let dq = (ev(&q, x + h)? - ev(&q, x - h)?) / (2.0 * h);
    let dr = (ev(&rr, x + h)? - ev(&rr, x - h)?) / (2.0 * h);
    let qv = ev(&q, x)?;
    let rv = ev(&rr, x)?;
    let lhs = -b * x * (dq + n * qv) + (n * x + b) * qv;
    let rhs = n * x * x * (dr + n * rv);
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0))
}

// ---------------------------------------------------------------------------
// Basis identity in x: n x (D+n) L = k [-β(D+n) + (nx+β)/x] L.

/// `S = nx + kβ`.
fn shifted(k: usize) -> ExactPoly {
    nx() + ExactPoly::beta() * int(k as i64)
}

/// `x (nx + kβ) (LHS - RHS) / L` of the basis identity in `x`, for a fixed
/// `k`; a polynomial in `x`, `β`, `n` that vanishes iff the identity holds.
///
/// Built from `D ln L = 1/x + n(k-1)/(nx+kβ) - n`, the derivative of the
/// logarithm of the basis definition.
pub fn basis_identity_residual(k: usize) -> ExactPoly {
    let s = shifted(k);
    let n = ExactPoly::n();
    // x S (D ln L + n)
    let m = &s + &(&n * &(int(k as i64 - 1) * x_poly()));
    let lhs = nx() * &m;
    let rhs = int(k as i64) * (-(ExactPoly::beta() * &m) + (nx() + ExactPoly::beta()) * s);
    lhs - rhs
}

/// Central-difference residual `|n x (D+n) L - k[-β(D+n) + (nx+β)/x] L|`.
pub fn check_basis_diff_identity(p: JainParams, k: usize, x: f64, h: f64) -> f64 {
    let (n, b) = (p.n(), p.beta());
    let l = jain_basis(p, k, x);
    let dl = (jain_basis(p, k, x + h) - jain_basis(p, k, x - h)) / (2.0 * h);
    let lhs = n * x * (dl + n * l);
    let rhs = k as f64 * (-b * (dl + n * l) + (n * x + b) / x * l);
    (lhs - rhs).abs()
}

// ---------------------------------------------------------------------------
// β-derivative of the ratio polynomials:
// β dP_r/dβ = [r + β + (1-β)k] P_r - n P_{r+1}.

/// Exact `LHS - RHS` of the β-derivative identity for `P_r`.
pub fn p_beta_identity_residual(r: usize) -> ExactPoly {
    let pr = p_poly_recur(r);
    let next = p_poly_recur(r + 1);
    let beta = ExactPoly::beta();
    let lhs = &beta * &pr.d_beta();
    let factor = int(r as i64) + beta + ExactPoly::one_minus_beta() * ExactPoly::main();
    lhs - (factor * &pr - ExactPoly::n() * next)
}

/// Central-difference-in-β residual of the `P_r` identity at basis index
/// `k`, evaluated at `n = 1` (every term scales as `n^{-r}`).
pub fn check_p_beta_derivative(r: usize, k: usize, beta: f64, h: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    let pr = p_poly_recur(r);
    let next = p_poly_recur(r + 1);
    let kf = k as f64;
    let dp = (pr.eval(kf, beta + h, 1.0)? - pr.eval(kf, beta - h, 1.0)?) / (2.0 * h);
    let lhs = beta * dp;
    let rhs = (r as f64 + beta + (1.0 - beta) * kf) * pr.eval(kf, beta, 1.0)? - next.eval(kf, beta, 1.0)?;
    Ok((lhs - rhs).abs())
}

// ---------------------------------------------------------------------------
// β-derivative of the basis: dL_k/dβ = -k L_k(x) + (k-1) L_{k-1}(x + β/n).

/// `n x (nx + kβ) (LHS - RHS) / L` of the basis β-identity for fixed `k`.
///
/// Uses `d ln L / dβ = k(k-1)/(nx+kβ) - k` and
/// `L_{k-1}(x + β/n) / L_k(x) = k(nx+β) / (nx (nx+kβ))`, both read off the
/// basis definition.
pub fn l_beta_identity_residual(k: usize) -> ExactPoly {
    let s = shifted(k);
    let kk = int(k as i64);
    let km1 = int(k as i64 - 1);
    let lhs = nx() * (&km1 * &kk - &kk * &s);
    let rhs = -(&kk * &(nx() * &s)) + km1 * kk * (nx() + ExactPoly::beta());
    lhs - rhs
}

/// Central-difference-in-β residual of the basis β-identity.
pub fn check_l_beta_derivative(p: JainParams, k: usize, x: f64, h: f64) -> Result<f64> {
    let (dl, l) = beta_difference(p, k, x, h)?;
    let rhs = -(k as f64) * l + (k as f64 - 1.0) * jain_basis(p, k - 1, x + p.beta() / p.n());
    Ok((dl - rhs).abs())
}

/// Central-difference-in-β residual of `dL_k/dβ = L_k (k(k-1)/(nx+kβ) - k)`,
/// the derivative obtained directly from the basis definition.
pub fn check_l_beta_derivative_direct(p: JainParams, k: usize, x: f64, h: f64) -> Result<f64> {
    let (dl, l) = beta_difference(p, k, x, h)?;
    let kf = k as f64;
    let rhs = l * (kf * (kf - 1.0) / (p.n() * x + kf * p.beta()) - kf);
    Ok((dl - rhs).abs())
}

fn beta_difference(p: JainParams, k: usize, x: f64, h: f64) -> Result<(f64, f64)> {
    if k < 1 || x <= 0.0 {
        return Err(Error::Domain(format!("need k >= 1 and x > 0, got k = {k}, x = {x}")));
    }
    let up = JainParams::new(p.n(), p.beta() + h)?;
    let down = JainParams::new(p.n(), p.beta() - h)?;
    let dl = (jain_basis(up, k, x) - jain_basis(down, k, x)) / (2.0 * h);
    Ok((dl, jain_basis(p, k, x)))
}

// ---------------------------------------------------------------------------
// Convergence reports.

/// Errors of an approximation sequence indexed by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub label: String,
    pub n_values: Vec<f64>,
    pub errors: Vec<f64>,
    /// The quantity whose error is reported, per `n`, when it is meaningful
    /// (for the asymptotic experiment, `n[P_n f - f](x)`).
    pub estimates: Vec<Option<f64>>,
    /// Least-squares slope of `ln error` against `ln n`; needs at least
    /// three points with positive error.
    pub observed_rate: Option<f64>,
    pub limit_estimate: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow {
    n: f64,
    error: f64,
    rate: Option<f64>,
    estimate: Option<f64>,
}

impl ConvergenceReport {
    pub fn new(
        label: impl Into<String>,
        n_values: Vec<f64>,
        errors: Vec<f64>,
        estimates: Vec<Option<f64>>,
        limit_estimate: Option<f64>,
    ) -> Result<Self> {
        if n_values.len() != errors.len() || estimates.len() != errors.len() {
            return Err(Error::Domain("report columns differ in length".into()));
        }
        if n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("n values must be strictly increasing".into()));
        }
        if let Some(e) = errors.iter().find(|e| !e.is_finite()) {
            return Err(Error::Domain(format!("non-finite error {e} in report")));
        }
        let observed_rate = log_log_slope(&n_values, &errors);
        Ok(Self {
            label: label.into(),
            n_values,
            errors,
            estimates,
            observed_rate,
            limit_estimate,
        })
    }

    /// Slope between each point and its predecessor.
    pub fn local_rates(&self) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for i in 1..self.errors.len() {
            let (e0, e1) = (self.errors[i - 1], self.errors[i]);
            out.push((e0 > 0.0 && e1 > 0.0).then(|| {
                (e1 / e0).ln() / (self.n_values[i] / self.n_values[i - 1]).ln()
            }));
        }
        out
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    /// CSV with header `n,error,rate,estimate`; `rate` is the local slope.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (i, rate) in self.local_rates().into_iter().enumerate() {
            w.serialize(CsvRow {
                n: self.n_values[i],
                error: self.errors[i],
                rate,
                estimate: self.estimates[i],
            })
            .map_err(|e| Error::Serialization(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Least-squares slope of `ln e` on `ln n`, or `None` with fewer than three
/// positive errors.
pub fn log_log_slope(n_values: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = n_values
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    if pts.len() < 3 || pts.len() != errors.len() {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    Some(num / den)
}

// ---------------------------------------------------------------------------
// Asymptotic formula.

/// Source of the coefficients in `lim n[P_n f - f](x) = a f'(x) + b f''(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitForm {
    /// `a = β(2-β)/(1-β)`, `b = (1+2β-β²)x/(1-β)` as stated with the theorem.
    Stated,
    /// `a = lim n μ_{n,1}`, `b = lim n μ_{n,2} / 2`, read off the exact
    /// central moments: `b = x/(1-β)`.
    CentralMoments,
}

/// `(a, b)` as exact expressions in `x` and `β`.
pub fn voronovskaja_coefficients_symbolic(form: LimitForm) -> Result<(ExactPoly, ExactPoly)> {
    let inv = ExactPoly::inv_one_minus_beta(1);
    match form {
        LimitForm::Stated => Ok((
            ExactPoly::beta_poly(&[0, 2, -1]) * &inv,
            ExactPoly::beta_poly(&[1, 2, -1]) * x_poly() * inv,
        )),
        LimitForm::CentralMoments => voronovskaja_coefficients(),
    }
}

/// `a f'(x) + b f''(x)` for the chosen form.
pub fn voronovskaja_limit(beta: f64, x: f64, fp: f64, fpp: f64, form: LimitForm) -> Result<f64> {
    let (a, b) = voronovskaja_coefficients_symbolic(form)?;
    Ok(a.eval(x, beta, 1.0)? * fp + b.eval(x, beta, 1.0)? * fpp)
}

/// Exact `lim n [T_{n,2}(x) - x²]` from the moment closed form.
pub fn square_limit_from_moments() -> Result<ExactPoly> {
    let t2 = t_moment_general(2)?;
    let centred = ExpPoly::new(&t2.poly - &x_poly().pow(2), t2.exp_coeff);
    first_order_coefficient(&centred)
}

/// `n[P_n f - f](x)` for each `n`, compared against the chosen limit.
#[allow(clippy::too_many_arguments)]
pub fn voronovskaja_experiment(
    beta: f64,
    f: &TestFunction,
    fp: &TestFunction,
    fpp: &TestFunction,
    x: f64,
    n_values: &[f64],
    form: LimitForm,
    cfg: &SeriesQuadConfig,
) -> Result<ConvergenceReport> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let limit = voronovskaja_limit(beta, x, fp.eval(x), fpp.eval(x), form)?;
    let fx = f.eval(x);
    let values: Vec<f64> = n_values
        .par_iter()
        .map(|&n| {
            let p = JainParams::new(n, beta)?;
            Ok(n * (apply_phillips(p, f, x, cfg)? - fx))
        })
        .collect::<Result<_>>()?;
    let errors = values.iter().map(|v| (v - limit).abs()).collect();
    ConvergenceReport::new(
        format!("voronovskaja {} beta={beta} x={x}", f.label()),
        n_values.to_vec(),
        errors,
        values.iter().copied().map(Some).collect(),
        values.last().copied(),
    )
}

/// Uniform error `max_x |P_n f(x) - f(x)|` over `grid_size` equally spaced
/// points of `[a, b]`, per `n`.
pub fn korovkin_convergence_table(
    beta: f64,
    f: &TestFunction,
    interval: (f64, f64),
    n_values: &[f64],
    grid_size: usize,
    cfg: &SeriesQuadConfig,
) -> Result<ConvergenceReport> {
    let (a, b) = interval;
    if !(a >= 0.0 && b > a) || grid_size < 2 {
        return Err(Error::Domain(format!(
            "need 0 <= a < b and at least two grid points, got [{a}, {b}] with {grid_size}"
        )));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| a + (b - a) * i as f64 / (grid_size - 1) as f64)
        .collect();
    let errors: Vec<f64> = n_values
        .par_iter()
        .map(|&n| {
            let p = JainParams::new(n, beta)?;
            let errs: Vec<f64> = grid
                .par_iter()
                .map(|&x| Ok((apply_phillips(p, f, x, cfg)? - f.eval(x)).abs()))
                .collect::<Result<_>>()?;
            Ok(errs.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    ConvergenceReport::new(
        format!("uniform error {} beta={beta} on [{a}, {b}]", f.label()),
        n_values.to_vec(),
        errors,
        vec![None; n_values.len()],
        None,
    )
}

// ---------------------------------------------------------------------------
// Moduli of continuity and the ω₂ bound.

fn forward_difference(f: &TestFunction, x: f64, h: f64, order: u32) -> f64 {
    match order {
        1 => f.eval(x + h) - f.eval(x),
        _ => f.eval(x + 2.0 * h) - 2.0 * f.eval(x + h) + f.eval(x),
    }
}

/// Grid estimate of `ω_m(f, δ) = sup_{0<h≤δ} sup_{0≤x≤cap} |Δ_h^m f(x)|`.
///
/// A coarse `grid_size × grid_size` scan of `(x, h)` is followed by six
/// rounds of local refinement around the best point. The result is a lower
/// bound on the true supremum over `[0, cap]`.
pub fn modulus_of_continuity(
    f: &TestFunction,
    delta: f64,
    order: u32,
    domain_cap: f64,
    grid_size: usize,
) -> Result<f64> {
    if !(delta > 0.0) || !(1..=2).contains(&order) || !(domain_cap > 0.0) || grid_size < 2 {
        return Err(Error::Domain(format!(
            "modulus needs delta > 0, order 1 or 2, cap > 0, grid >= 2 (got {delta}, {order}, {domain_cap}, {grid_size})"
        )));
    }
    let g = grid_size as f64;
    let xs: Vec<f64> = (0..=grid_size).map(|i| domain_cap * i as f64 / g).collect();
    let (mut best, mut bx, mut bh) = xs
        .par_iter()
        .map(|&x| {
            let mut local = (0.0f64, x, delta);
            for j in 1..=grid_size {
                let h = delta * j as f64 / g;
                let v = forward_difference(f, x, h, order).abs();
                if v > local.0 {
                    local = (v, x, h);
                }
            }
            local
        })
        .reduce(|| (0.0, 0.0, delta), |a, b| if b.0 > a.0 { b } else { a });
    // The maximiser of a second difference often sits on a diagonal ridge
    // (x + h fixed at a kink), so the h window is at least as wide as x's.
    let (mut sx, mut sh) = (domain_cap / g, (delta / g).max(domain_cap / g));
    for _ in 0..6 {
        let (cx, ch) = (bx, bh);
        for i in -20i32..=20 {
            let x = (cx + sx * f64::from(i) / 20.0).clamp(0.0, domain_cap);
            for j in -20i32..=20 {
                let h = (ch + sh * f64::from(j) / 20.0).clamp(delta * 1e-9, delta);
                let v = forward_difference(f, x, h, order).abs();
                if v > best {
                    (best, bx, bh) = (v, x, h);
                }
            }
        }
        sx /= 4.0;
        sh /= 4.0;
    }
    Ok(best)
}

/// `β(2-β)(1 - e^{-nx}) / (n(1-β))`, the shift in the ω-term of the bound.
pub fn bound_shift(p: JainParams, x: f64) -> f64 {
    let b = p.beta();
    b * (2.0 - b) * (1.0 - (-p.n() * x).exp()) / (p.n() * (1.0 - b))
}

/// Polynomial-and-exponential part of `δ_n`:
/// `2(1+2β-β²)x/(n(1-β)) + (1-e^{-nx})[β²(3-β)/(n²(1-β)) - 2βx(2-β)/(n(1-β))]`.
pub fn bound_delta_main_part() -> ExpPoly {
    let inv = ExactPoly::inv_one_minus_beta(1);
    let ninv = ExactPoly::ninv();
    let lead = int(2) * ExactPoly::beta_poly(&[1, 2, -1]) * x_poly() * &ninv * &inv;
    let bracket = ExactPoly::beta_poly(&[0, 0, 3, -1]) * ninv.pow(2) * &inv
        - int(2) * ExactPoly::beta_poly(&[0, 2, -1]) * x_poly() * &ninv * &inv;
    ExpPoly::new(lead + bracket.clone(), -bracket)
}

/// `δ_n(x)`: the exact main part plus the squared shift.
pub fn bound_delta(p: JainParams, x: f64) -> Result<f64> {
    let s = bound_shift(p, x);
    Ok(bound_delta_main_part().eval(x, p.beta(), p.n())? + s * s)
}

/// Slack allowed on the inequality for evaluation error in `P_n f`.
pub const BOUND_EVAL_SLACK: f64 = 1e-9;

/// Outcome of one check of
/// `|P_n f(x) - f(x)| ≤ C ω₂(f, √δ_n) + ω(f, shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Smallest `C` for which the inequality holds at this point.
    pub c_min: f64,
    pub delta_n: f64,
    pub shift: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// Grid used for the moduli in [`second_modulus_bound_check`].
pub const BOUND_MODULUS_GRID: usize = 400;

/// Checks the ω₂ bound at one point for a bounded `f` and `β > 0`.
pub fn second_modulus_bound_check(
    p: JainParams,
    f: &TestFunction,
    x: f64,
    c: f64,
    cfg: &SeriesQuadConfig,
) -> Result<BoundCheck> {
    if !(p.beta() > 0.0) {
        return Err(Error::Domain("the bound is stated for beta > 0".into()));
    }
    if !f.is_bounded() {
        return Err(Error::Domain(format!("{} is not bounded", f.label())));
    }
    let lhs = (apply_phillips(p, f, x, cfg)? - f.eval(x)).abs();
    let delta_n = bound_delta(p, x)?;
    let shift = bound_shift(p, x);
    let cap = (4.0 * x).max(10.0);
    let omega2 = if delta_n > 0.0 {
        modulus_of_continuity(f, delta_n.sqrt(), 2, cap, BOUND_MODULUS_GRID)?
    } else {
        0.0
    };
    let omega1 = if shift > 0.0 {
        modulus_of_continuity(f, shift, 1, cap, BOUND_MODULUS_GRID)?
    } else {
        0.0
    };
    let rhs = c * omega2 + omega1;
    let excess = (lhs - omega1 - BOUND_EVAL_SLACK).max(0.0);
    let c_min = if excess == 0.0 {
        0.0
    } else if omega2 > 0.0 {
        excess / omega2
    } else {
        f64::INFINITY
    };
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + BOUND_EVAL_SLACK,
        c_min,
        delta_n,
        shift,
        omega1,
        omega2,
    })
}

// ---------------------------------------------------------------------------
// Verification suites.

/// One identity checked over a set of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityOutcome {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    /// Where the largest residual, or the first failure, occurred.
    pub worst_point: String,
    pub detail: String,
}

/// Grid density for [`differential_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSize {
    Small,
    Full,
}

/// Exact recurrence and consistency checks of the moment tables.
pub fn recurrence_suite() -> Result<Vec<IdentityOutcome>> {
    use crate::moments::*;
    let mut out = Vec::new();

    let p: Vec<ExactPoly> = (0..=10).map(p_poly_recur).collect();
    let bad: Vec<usize> = (0..=8).filter(|&r| !ratio_recurrence_residual(&p, r).is_zero()).collect();
    out.push(exact_outcome("ratio polynomial recurrence, r = 0..8", &bad));
    let bad: Vec<usize> = (0..=5)
        .filter(|&r| p_poly_closed(r).map(|c| c != p[r]).unwrap_or(true))
        .collect();
    out.push(exact_outcome("ratio polynomials: recurrence vs closed form, r = 0..5", &bad));
    let bad: Vec<usize> = (0..=3)
        .filter(|&r| t_moment_general(r).ok() != t_moment_closed(r).ok())
        .collect();
    out.push(exact_outcome("moments T_r: general vs closed form, r = 0..3", &bad));
    let bad: Vec<usize> = (0..=5)
        .filter(|&r| f_poly_from_moments(r).ok() != f_poly_closed(r).ok())
        .collect();
    out.push(exact_outcome("reduced polynomials: moment route vs closed form, r = 0..5", &bad));
    for (table, name) in [
        (AlphaTable::Printed, "reduced-polynomial recurrence with the printed alpha table, r = 2..5"),
        (AlphaTable::Corrected, "reduced-polynomial recurrence with the corrected alpha table, r = 2..5"),
    ] {
        let bad: Vec<usize> = (2..=5)
            .filter(|&r| f_poly_recur(r, table).ok() != f_poly_closed(r).ok())
            .collect();
        out.push(exact_outcome(name, &bad));
    }
    let bad: Vec<usize> = (1..=5)
        .filter(|&r| central_moment_derived(r).ok() != central_moment_closed(r).ok())
        .collect();
    out.push(exact_outcome("central moments: binomial oracle vs closed form, r = 1..5", &bad));
    Ok(out)
}

fn exact_outcome(name: &str, bad: &[usize]) -> IdentityOutcome {
    IdentityOutcome {
        name: name.to_string(),
        passed: bad.is_empty(),
        max_residual: if bad.is_empty() { 0.0 } else { f64::NAN },
        worst_point: bad
            .first()
            .map(|r| format!("r = {r}"))
            .unwrap_or_else(|| "-".into()),
        detail: if bad.is_empty() {
            "exact equality".into()
        } else {
            format!("nonzero exact residual at r in {bad:?}")
        },
    }
}

/// Exact and finite-difference checks of the differential identities.
///
/// The exact residuals decide `passed` for the identities that have an
/// exact form; the finite-difference halving ratio must lie in
/// `[0.2, 0.3]` at every grid point.
pub fn differential_suite(grid: GridSize) -> Result<Vec<IdentityOutcome>> {
    let (ns, betas, xs): (Vec<f64>, Vec<f64>, Vec<f64>) = match grid {
        GridSize::Small => (vec![2.0, 8.0], vec![0.25, 0.5], vec![0.5, 1.0]),
        GridSize::Full => (vec![2.0, 8.0, 32.0], vec![0.1, 0.25, 0.5, 0.75], vec![0.1, 0.5, 1.0, 4.0]),
    };
    let mut out = Vec::new();

    // Moment identity.
    let mut bad = Vec::new();
    for r in 0..=3 {
        if !moment_identity_residual(r, MomentForm::KSeries)?.is_zero() {
            bad.push(r);
        }
    }
    let mut fd = FdTracker::default();
    for &n in &ns {
        for &b in &betas {
            for &x in &xs {
                let p = JainParams::new(n, b)?;
                for r in 0..=3 {
                    let h = 1e-3 * x.max(0.1);
                    let res = |h: f64| check_t_diff_identity(p, r, x, h, MomentForm::KSeries).unwrap_or(f64::NAN);
                    fd.record(res(h), halving_ratio(res, h), || format!("n={n} beta={b} x={x} r={r}"));
                }
            }
        }
    }
    out.push(fd.finish("moment differential identity (k >= 1 sums)", &bad));
    let bad_image: Vec<usize> = (0..=3)
        .filter(|&r| !moment_identity_residual(r, MomentForm::OperatorImage).map(|e| e.is_zero()).unwrap_or(false))
        .collect();
    out.push(exact_outcome("moment differential identity (operator images, T_0 = 1)", &bad_image));

    // Basis identity in x.
    let bad: Vec<usize> = (1..=12).filter(|&k| !basis_identity_residual(k).is_zero()).collect();
    let mut fd = FdTracker::default();
    for &n in &ns {
        for &b in &betas {
            for &x in &xs {
                let p = JainParams::new(n, b)?;
                for k in [1, 3, 6] {
                    let h = 1e-3 * x;
                    let res = |h: f64| check_basis_diff_identity(p, k, x, h);
                    fd.record(res(h), halving_ratio(res, h), || format!("n={n} beta={b} x={x} k={k}"));
                }
            }
        }
    }
    out.push(fd.finish("basis differential identity in x", &bad));

    // Ratio-polynomial β identity.
    let bad: Vec<usize> = (0..=4).filter(|&r| !p_beta_identity_residual(r).is_zero()).collect();
    let mut fd = FdTracker::default();
    for &b in &betas {
        for r in 0..=4 {
            for k in [1, 4, 9] {
                let h = 1e-3 * b.min(1.0 - b);
                let res = |h: f64| check_p_beta_derivative(r, k, b, h).unwrap_or(f64::NAN);
                fd.record(res(h), halving_ratio(res, h), || format!("beta={b} r={r} k={k}"));
            }
        }
    }
    out.push(fd.finish("ratio polynomial beta-derivative identity", &bad));

    // Basis β identity.
    let bad: Vec<usize> = (1..=12).filter(|&k| !l_beta_identity_residual(k).is_zero()).collect();
    let mut fd = FdTracker::default();
    let mut fd_direct = FdTracker::default();
    for &n in &ns {
        for &b in &betas {
            for &x in &xs {
                let p = JainParams::new(n, b)?;
                for k in [1, 3, 6] {
                    let h = 1e-3 * b.min(1.0 - b);
                    let res = |h: f64| check_l_beta_derivative(p, k, x, h).unwrap_or(f64::NAN);
                    fd.record(res(h), halving_ratio(res, h), || format!("n={n} beta={b} x={x} k={k}"));
                    let res = |h: f64| check_l_beta_derivative_direct(p, k, x, h).unwrap_or(f64::NAN);
                    fd_direct.record(res(h), halving_ratio(res, h), || format!("n={n} beta={b} x={x} k={k}"));
                }
            }
        }
    }
    out.push(fd.finish("basis beta-derivative identity", &bad));
    out.push(fd_direct.finish("basis beta-derivative from the definition (reference)", &[]));
    Ok(out)
}

/// The halving test is applied only when the residuals at both `h` and
/// `h/2` exceed this; below it their ratio is roundoff noise.
pub const FD_NOISE_FLOOR: f64 = 1e-11;

#[derive(Default)]
struct FdTracker {
    max_residual: f64,
    worst: String,
    failure: Option<String>,
    ratios: Vec<f64>,
}

impl FdTracker {
    fn record(&mut self, residual: f64, ratio: f64, point: impl Fn() -> String) {
        if residual > self.max_residual || residual.is_nan() {
            self.max_residual = residual;
            self.worst = point();
        }
        if residual <= FD_NOISE_FLOOR || residual * ratio <= FD_NOISE_FLOOR {
            return;
        }
        self.ratios.push(ratio);
        if !(0.2..=0.3).contains(&ratio) && self.failure.is_none() {
            self.failure = Some(format!("{} (halving ratio {ratio:.4})", point()));
        }
    }

    fn finish(self, name: &str, exact_bad: &[usize]) -> IdentityOutcome {
        let passed = exact_bad.is_empty() && self.failure.is_none();
        let (lo, hi) = self
            .ratios
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(*r), b.max(*r)));
        let mut detail = if exact_bad.is_empty() {
            "exact residual zero".to_string()
        } else {
            format!("exact residual nonzero at index {exact_bad:?}")
        };
        if self.ratios.is_empty() {
            detail.push_str("; all finite-difference residuals at roundoff");
        } else {
            detail.push_str(&format!("; halving ratios in [{lo:.4}, {hi:.4}]"));
        }
        IdentityOutcome {
            name: name.to_string(),
            passed,
            max_residual: self.max_residual,
            worst_point: self.failure.unwrap_or(self.worst),
            detail,
        }
    }
}

/// Converts an exact rational to `f64`; used by callers printing exact values.
pub fn rational_to_f64(v: &BigRational) -> f64 {
    if v.is_zero() {
        0.0
    } else {
        v.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, beta: f64) -> JainParams {
        JainParams::new(n, beta).unwrap()
    }

    #[test]
    fn moment_identity_exact_on_k_series() {
        for r in 0..=3 {
            assert!(moment_identity_residual(r, MomentForm::KSeries).unwrap().is_zero(), "r = {r}");
        }
        // With T_0 = 1 the r = 0 case picks up the boundary term.
        assert!(!moment_identity_residual(0, MomentForm::OperatorImage).unwrap().is_zero());
        for r in 1..=3 {
            assert!(moment_identity_residual(r, MomentForm::OperatorImage).unwrap().is_zero());
        }
        assert!(moment_identity_residual(4, MomentForm::KSeries).is_err());
    }

    #[test]
    fn moment_identity_finite_differences_are_second_order() {
        let p = params(2.0, 0.5);
        let res = |h: f64| check_t_diff_identity(p, 1, 1.0, h, MomentForm::KSeries).unwrap();
        let ratio = halving_ratio(res, 1e-3);
        assert!((0.2..=0.3).contains(&ratio), "{ratio}");
    }

    #[test]
    fn basis_identity_holds() {
        for k in 0..=10 {
            assert!(basis_identity_residual(k).is_zero(), "k = {k}");
        }
        let p = params(2.0, 0.5);
        let res = |h: f64| check_basis_diff_identity(p, 3, 1.0, h);
        let ratio = halving_ratio(res, 1e-3);
        assert!((0.2..=0.3).contains(&ratio), "{ratio}");
        // β = 0 collapse.
        let res = check_basis_diff_identity(params(3.0, 0.0), 4, 1.2, 1e-4);
        assert!(res < 1e-6);
    }

    #[test]
    fn p_beta_identity_fails_at_r_zero() {
        // β·0 versus β + (1-β)k - n P_1 = -β/(1-β).
        let res = p_beta_identity_residual(0);
        let expected = ExactPoly::beta() * ExactPoly::inv_one_minus_beta(1);
        assert_eq!(res, expected);
        for r in 0..=4 {
            assert!(!p_beta_identity_residual(r).is_zero());
        }
        let v = check_p_beta_derivative(0, 3, 0.5, 1e-4).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn l_beta_identity_residual_is_k_k_minus_one_beta() {
        assert!(l_beta_identity_residual(1).is_zero());
        for k in 2..=6 {
            let expected = -(ExactPoly::beta() * ExactPoly::int((k * (k - 1)) as i64));
            assert_eq!(l_beta_identity_residual(k), expected);
        }
        // k = 1 finite differences: second order.
        let p = params(2.0, 0.4);
        let ratio = halving_ratio(|h| check_l_beta_derivative(p, 1, 1.0, h).unwrap(), 1e-3);
        assert!((0.2..=0.3).contains(&ratio), "{ratio}");
        // At n = 2, k = 5, β = 0.4, x = 1 the true derivative vanishes but
        // the shifted form gives -5 L_5(1) + 4 L_4(1.2).
        let v = check_l_beta_derivative(p, 5, 1.0, 1e-4).unwrap();
        let expected = (4.0 * jain_basis(p, 4, 1.2) - 5.0 * jain_basis(p, 5, 1.0)).abs();
        assert!((v - 0.078).abs() < 1e-3);
        assert!((v - expected).abs() < 1e-8, "{v} vs {expected}");
        let direct = check_l_beta_derivative_direct(p, 5, 1.0, 1e-4).unwrap();
        assert!(direct < 1e-8);
    }

    #[test]
    fn report_rate_and_serialization() {
        let n = vec![4.0, 8.0, 16.0, 32.0];
        let e: Vec<f64> = n.iter().map(|n| 3.0 / n).collect();
        let r = ConvergenceReport::new("t", n, e, vec![None; 4], None).unwrap();
        assert!((r.observed_rate.unwrap() + 1.0).abs() < 1e-12);
        assert!(r.is_strictly_decreasing());
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("n,error,rate,estimate\n4.0,0.75,,\n"), "{csv}");
        let back: ConvergenceReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(ConvergenceReport::new("t", vec![2.0, 1.0], vec![1.0, 1.0], vec![None; 2], None).is_err());
        let two = ConvergenceReport::new("t", vec![1.0, 2.0], vec![1.0, 0.5], vec![None; 2], None).unwrap();
        assert_eq!(two.observed_rate, None);
    }

    #[test]
    fn limit_forms() {
        let stated = voronovskaja_limit(0.0, 1.0, 2.0, 2.0, LimitForm::Stated).unwrap();
        assert!((stated - 2.0).abs() < 1e-15);
        let derived = voronovskaja_limit(0.0, 1.0, 2.0, 2.0, LimitForm::CentralMoments).unwrap();
        assert!((derived - 2.0).abs() < 1e-15);
        // The forms part ways for β > 0: f = t², β = 0.5, x = 1.
        let stated = voronovskaja_limit(0.5, 1.0, 2.0, 2.0, LimitForm::Stated).unwrap();
        let derived = voronovskaja_limit(0.5, 1.0, 2.0, 2.0, LimitForm::CentralMoments).unwrap();
        assert!((stated - 10.0).abs() < 1e-14 && (derived - 7.0).abs() < 1e-14);
        // For f = t² the moment limit is 2x(1+2β-β²)/(1-β).
        let lim = square_limit_from_moments().unwrap();
        let expected = ExactPoly::int(2) * ExactPoly::beta_poly(&[1, 2, -1]) * x_poly() * ExactPoly::inv_one_minus_beta(1);
        assert_eq!(lim, expected);
        let (a, b) = voronovskaja_coefficients_symbolic(LimitForm::CentralMoments).unwrap();
        assert_eq!(a * ExactPoly::int(2) * x_poly() + b * ExactPoly::int(2), expected);
    }

    #[test]
    fn voronovskaja_beta_zero_square() {
        let cfg = SeriesQuadConfig::default();
        let f = TestFunction::builtin("square").unwrap();
        let (fp, fpp) = TestFunction::builtin_derivatives("square").unwrap();
        let r = voronovskaja_experiment(0.0, &f, &fp, &fpp, 1.0, &[8.0, 16.0, 32.0], LimitForm::CentralMoments, &cfg)
            .unwrap();
        for v in r.estimates.iter().flatten() {
            assert!((v - 2.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn korovkin_linear_rate() {
        let cfg = SeriesQuadConfig::default();
        let f = TestFunction::builtin("linear").unwrap();
        let r = korovkin_convergence_table(0.25, &f, (0.0, 2.0), &[4.0, 8.0, 16.0, 32.0], 21, &cfg).unwrap();
        let rate = r.observed_rate.unwrap();
        assert!((rate + 1.0).abs() < 0.05, "{rate}");
        let one = TestFunction::builtin("const").unwrap();
        let r = korovkin_convergence_table(0.25, &one, (0.0, 2.0), &[4.0, 8.0], 11, &cfg).unwrap();
        assert!(r.errors.iter().all(|e| *e <= 10.0 * cfg.tail_tol));
    }

    #[test]
    fn modulus_examples() {
        let one = TestFunction::builtin("const").unwrap();
        assert_eq!(modulus_of_continuity(&one, 0.3, 2, 10.0, 50).unwrap(), 0.0);
        let t = TestFunction::builtin("linear").unwrap();
        let w = modulus_of_continuity(&t, 0.1, 1, 10.0, 100).unwrap();
        assert!((w - 0.1).abs() < 1e-12);
        let s = TestFunction::builtin("abs-sin").unwrap();
        let a = modulus_of_continuity(&s, 0.2, 2, 10.0, 200).unwrap();
        let b = modulus_of_continuity(&s, 0.2, 2, 10.0, 400).unwrap();
        assert!((a - b).abs() < 0.01 * b, "{a} {b}");
        assert!((b - 2.0 * 0.2f64.sin()).abs() < 1e-6, "{b}");
        assert!(modulus_of_continuity(&s, 0.2, 3, 10.0, 10).is_err());
    }

    #[test]
    fn bound_delta_matches_second_central_moment() {
        let mu2 = crate::moments::central_moment_closed(2).unwrap();
        assert_eq!(bound_delta_main_part(), mu2);
        let p = params(16.0, 0.25);
        let s = bound_shift(p, 1.0);
        let d = bound_delta(p, 1.0).unwrap();
        assert!((d - mu2.eval(1.0, 0.25, 16.0).unwrap() - s * s).abs() < 1e-15);
        assert!(bound_shift(params(16.0, 1e-12), 1.0) < 1e-12);
    }

    #[test]
    fn bound_check_examples() {
        let cfg = SeriesQuadConfig::default();
        let one = TestFunction::builtin("const").unwrap();
        let b = second_modulus_bound_check(params(16.0, 0.25), &one, 1.0, 1.0, &cfg).unwrap();
        assert!(b.holds && b.lhs < 1e-10 && b.c_min == 0.0);
        let e = TestFunction::builtin("exp-neg").unwrap();
        let b = second_modulus_bound_check(params(16.0, 0.25), &e, 1.0, 4.0, &cfg).unwrap();
        assert!(b.holds, "{b:?}");
        assert!(second_modulus_bound_check(params(16.0, 0.0), &e, 1.0, 4.0, &cfg).is_err());
        let sq = TestFunction::builtin("square").unwrap();
        assert!(second_modulus_bound_check(params(16.0, 0.25), &sq, 1.0, 4.0, &cfg).is_err());
    }

    #[test]
    fn suites_report_known_failures() {
        let rec = recurrence_suite().unwrap();
        let failed: Vec<&str> = rec.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
        assert_eq!(failed.len(), 2, "{failed:?}");
        assert!(failed[0].contains("printed alpha"));
        assert!(failed[1].contains("central moments"));
    }
}
