//! Text and JSON rendering of library objects.

use ratex_core::identcore::RankReport;
use ratex_core::{Complex64, DMatrix, LaurentMatrix};
use serde_json::{json, Map, Value};

/// Compact number formatting for human-readable output.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-4..1e6).contains(&a) {
        let s = format!("{v:.10}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.into()
        }
    } else {
        format!("{v:.6e}")
    }
}

pub fn complex(z: Complex64) -> String {
    if z.im == 0.0 {
        num(z.re)
    } else if z.im > 0.0 {
        format!("{}+{}i", num(z.re), num(z.im))
    } else {
        format!("{}-{}i", num(z.re), num(-z.im))
    }
}

/// `[a, b; c, d]`.
pub fn matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| num(m[(i, j)])).collect::<Vec<_>>().join(", ")).collect();
    format!("[{}]", rows.join("; "))
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!((0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())).collect())
}

/// One `name[lag] = [...]` line per stored lag.
pub fn laurent_lines(name: &str, p: &LaurentMatrix, out: &mut Vec<String>) {
    for (k, c) in p.coeffs().iter().enumerate() {
        out.push(format!("  {name}[{}] = {}", p.min_lag() + k as i32, matrix(c)));
    }
}

/// Lag-keyed object matching the model file layout.
pub fn laurent_json(p: &LaurentMatrix) -> Value {
    let mut obj = Map::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        obj.insert((p.min_lag() + k as i32).to_string(), matrix_json(c));
    }
    Value::Object(obj)
}

pub fn complex_json(zs: &[Complex64]) -> Value {
    json!(zs.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

pub fn rank_json(r: &RankReport) -> Value {
    json!({
        "verdict": if r.identified() { "identified" } else { "not_identified" },
        "required_rank": r.required_rank,
        "numerical_rank": r.numerical_rank,
        "matrix_shape": [r.matrix_shape.0, r.matrix_shape.1],
        "singular_values": r.singular_values,
        "threshold": r.threshold,
        "gap_ratio": r.gap_ratio,
        "borderline": r.borderline(),
        "warnings": r.warnings,
    })
}

pub fn rank_lines(r: &RankReport, out: &mut Vec<String>) {
    out.push(format!("  matrix: {}x{}", r.matrix_shape.0, r.matrix_shape.1));
    out.push(format!("  rank: {} (required {})", r.numerical_rank, r.required_rank));
    out.push(format!("  threshold: {}  gap ratio: {}", num(r.threshold), num(r.gap_ratio)));
    let shown: Vec<String> = r.singular_values.iter().map(|&s| num(s)).collect();
    out.push(format!("  singular values: {}", shown.join(" ")));
    if r.borderline() {
        out.push("  borderline: the deciding singular value is within a factor 10 of the threshold".into());
    }
    for w in &r.warnings {
        out.push(format!("  warning: {w}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_compact() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(-2.0), "-2");
        assert_eq!(num(1e-9), "1.000000e-9");
        assert_eq!(num(0.0), "0");
        assert_eq!(complex(Complex64::new(0.5, -0.25)), "0.5-0.25i");
    }

    #[test]
    fn matrices_render_row_major() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(matrix(&m), "[1, 2; 3, 4]");
        assert_eq!(matrix_json(&m), json!([[1.0, 2.0], [3.0, 4.0]]));
    }
}
