//! Snapshots of the exact moment tables. Each family is checked against a
//! second construction before it is compared with (or written to) disk.
//! Set `JPK_UPDATE_GOLDEN=1` to rewrite the files.

use std::path::PathBuf;

use jpk_core::basis::JainParams;
use jpk_core::moments::{
    central_moment_derived, f_poly_closed, f_poly_from_moments, p_poly_closed, p_poly_recur, t_moment_closed,
    t_moment_general,
};
use jpk_core::numerics::SeriesQuadConfig;
use jpk_core::operators::{central_moment_series, MomentRoute};

fn check(name: &str, text: String) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("JPK_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(text, expected, "{name} differs from the snapshot");
}

#[test]
fn ratio_polynomials() {
    let mut out = String::new();
    for r in 0..=5 {
        let p = p_poly_recur(r);
        assert_eq!(p, p_poly_closed(r).unwrap());
        out += &format!("# P_{r}\n{}\n", p.to_text("k"));
    }
    check("ratio_polynomials.txt", out);
}

#[test]
fn reduced_polynomials() {
    let mut out = String::new();
    for r in 0..=5 {
        let f = f_poly_from_moments(r).unwrap();
        assert_eq!(f, f_poly_closed(r).unwrap());
        out += &format!("# f_{r}\n{}\n", f.to_text("x"));
    }
    check("reduced_polynomials.txt", out);
}

#[test]
fn moments() {
    let mut out = String::new();
    for r in 0..=3 {
        let t = t_moment_general(r).unwrap();
        assert_eq!(t, t_moment_closed(r).unwrap());
        out += &format!("# T_{r}\n{}\n", t.to_text());
    }
    check("moments.txt", out);
}

#[test]
fn central_moments() {
    let mut out = String::new();
    for r in 1..=5 {
        let mu = central_moment_derived(r).unwrap();
        let p = JainParams::new(6.0, 0.3).unwrap();
        let series = central_moment_series(p, r, 0.7, MomentRoute::RatioPolynomials, &SeriesQuadConfig::default()).unwrap();
        let exact = mu.eval(0.7, 0.3, 6.0).unwrap();
        assert!((series - exact).abs() <= 1e-10 * exact.abs().max(1e-6), "mu_{r}: {series} vs {exact}");
        out += &format!("# mu_{r}\n{}\n", mu.to_text());
    }
    check("central_moments.txt", out);
}
