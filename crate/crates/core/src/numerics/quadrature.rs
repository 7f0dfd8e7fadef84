use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SeriesQuadConfig;
use crate::error::{Error, Result};

/// Number of nodes in the 21-point Gauss-Kronrod rule.
pub const KRONROD_POINTS: usize = 21;

// Abscissae and weights of the 21-point Kronrod extension of the 10-point
// Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// Integral of |f| under the same rule.
    pub abs_value: f64,
    /// Final partition of the integration range.
    pub panels: Vec<(f64, f64)>,
}

/// Nodes and weights of the 21-point Kronrod rule mapped onto `[a, b]`.
pub fn kronrod_rule(a: f64, b: f64) -> [(f64, f64); KRONROD_POINTS] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); KRONROD_POINTS];
    for j in 0..10 {
        let dx = half * XGK[j];
        out[2 * j] = (center - dx, WGK[j] * half);
        out[2 * j + 1] = (center + dx, WGK[j] * half);
    }
    out[20] = (center, WGK[10] * half);
    out
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let h = half.abs();
    Panel {
        a,
        b,
        value: res_k * half,
        error: rescale_error(err, res_abs * h, res_asc * h),
        abs_value: res_abs * h,
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the total
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdiv: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            abs_value: 0.0,
            panels: vec![],
        });
    }
    let first = gk21(f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut abs_value = first.abs_value;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;
    loop {
        if !value.is_finite() {
            return Err(Error::Quadrature {
                what: format!("non-finite integrand on [{a}, {b}]"),
                estimate: f64::INFINITY,
                subdivisions,
            });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            break;
        }
        if subdivisions >= max_subdiv {
            return Err(Error::Quadrature {
                what: format!("interval [{a}, {b}]"),
                estimate: error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            error = heap.iter().map(|p| p.error).sum();
            if error == 0.0 {
                break;
            }
            subdivisions += 1;
            continue;
        }
        let left = gk21(f, worst.a, mid);
        let right = gk21(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs_value += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        // Resum periodically to stop drift in the running totals.
        if subdivisions % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    let mut panels: Vec<_> = heap.into_iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(Integral {
        value,
        error,
        abs_value,
        panels: panels.into_iter().map(|p| (p.a, p.b)).collect(),
    })
}

/// Integral of `f` over `[0, ∞)`.
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: &F, cfg: &SeriesQuadConfig) -> Result<f64> {
    integrate_halfline_from(f, &[1.0], cfg).map(|i| i.value)
}

/// Integral of `f` over `[0, ∞)` with caller-supplied breakpoints.
///
/// The range up to the last breakpoint `T` is integrated panel by panel;
/// past `T` the pieces `[T, 2T]`, `[2T, 4T]`, ... are added until a piece
/// is both shrinking and below `max(tail_tol, quad_rel_tol * |I|)`.
/// Breakpoints near the peak of a narrow integrand keep the adaptive
/// search from missing it.
pub fn integrate_halfline_from<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    cfg: &SeriesQuadConfig,
) -> Result<Integral> {
    let mut edges = vec![0.0];
    for &b in breaks {
        if b > *edges.last().unwrap() && b.is_finite() {
            edges.push(b);
        }
    }
    if edges.len() == 1 {
        edges.push(1.0);
    }
    let mut total = 0.0;
    let mut error = 0.0;
    let mut abs_total = 0.0;
    let mut panels = Vec::new();
    let rel = cfg.quad_rel_tol;
    let piece = |lo: f64, hi: f64, scale: f64| -> Result<Integral> {
        integrate_interval(f, lo, hi, rel, rel * scale * 1e-3, cfg.quad_max_subdiv)
    };
    for w in edges.windows(2) {
        let r = piece(w[0], w[1], abs_total)?;
        total += r.value;
        error += r.error;
        abs_total += r.abs_value;
        panels.extend(r.panels);
    }
    let mut lo = *edges.last().unwrap();
    let mut width = lo.max(1.0);
    let mut previous = f64::INFINITY;
    for _ in 0..200 {
        let hi = lo + width;
        let r = piece(lo, hi, abs_total)?;
        total += r.value;
        error += r.error;
        abs_total += r.abs_value;
        panels.extend(r.panels);
        let size = r.abs_value;
        // A mass-free prefix says nothing about the tail, so require some
        // mass (or a very long search) and a non-rising integrand.
        let seen_mass = abs_total > 0.0 || hi > 1e12;
        let falling = f(hi).abs() <= f(lo).abs();
        if seen_mass
            && falling
            && size <= previous
            && size <= cfg.tail_tol.max(rel * abs_total) * 1e-2
        {
            return Ok(Integral {
                value: total,
                error,
                abs_value: abs_total,
                panels,
            });
        }
        previous = size;
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Quadrature {
        what: "half-line tail did not decay".into(),
        estimate: previous,
        subdivisions: panels.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_integrates_polynomials_exactly() {
        // Degree 31 exactness; check t^10 on [0, 2].
        let s: f64 = kronrod_rule(0.0, 2.0)
            .iter()
            .map(|&(t, w)| w * t.powi(10))
            .sum();
        assert!((s - 2f64.powi(11) / 11.0).abs() < 1e-12);
    }

    #[test]
    fn interval_integration_of_sine() {
        let r = integrate_interval(&|t: f64| t.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0, 100)
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_on_halfline() {
        let cfg = SeriesQuadConfig::default();
        let v = integrate_halfline(&|t: f64| (-t).exp(), &cfg).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_two_on_halfline() {
        let cfg = SeriesQuadConfig::default();
        let v = integrate_halfline(&|t: f64| t * (-t).exp(), &cfg).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn far_peak_is_found_through_doubling() {
        // Gamma(31)-shaped density peaked near t = 30.
        let cfg = SeriesQuadConfig::default();
        let ln_g30 = crate::numerics::ln_factorial(30);
        let f = |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                (30.0 * t.ln() - t - ln_g30).exp()
            }
        };
        let v = integrate_halfline(&f, &cfg).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = integrate_interval(&|t: f64| 1.0 / t.sqrt(), 0.0, 1.0, 1e-15, 0.0, 2).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
