use std::fs;
use std::path::Path;

use jpk_core::numerics::SeriesQuadConfig;

/// Reads `key=value` overrides for the series and quadrature settings.
///
/// Blank lines and lines starting with `#` are ignored. Recognised keys are
/// `k_max`, `tail_tol`, `quad_rel_tol` and `quad_max_subdiv`.
pub fn load(path: &Path) -> Result<SeriesQuadConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<SeriesQuadConfig, String> {
    let mut cfg = SeriesQuadConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got {line:?}", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: &dyn std::fmt::Display| format!("line {}: bad value for {key}: {e}", lineno + 1);
        match key {
            "k_max" => cfg.k_max = value.parse().map_err(|e| bad(&e))?,
            "tail_tol" => cfg.tail_tol = value.parse().map_err(|e| bad(&e))?,
            "quad_rel_tol" => cfg.quad_rel_tol = value.parse().map_err(|e| bad(&e))?,
            "quad_max_subdiv" => cfg.quad_max_subdiv = value.parse().map_err(|e| bad(&e))?,
            _ => return Err(format!("line {}: unknown key {key:?}", lineno + 1)),
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
