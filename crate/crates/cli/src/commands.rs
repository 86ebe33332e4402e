//! Subcommand implementations. Each returns an [`Outcome`]; library errors
//! are mapped to exit codes by [`error_code`].

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ratex_core::identcore::{
    ds_criterion, ident_test_affine, ident_test_equation, obs_equivalent, Dims, IdentSystem, RankReport,
};
use ratex_core::paramdsl::{
    generic_ident, local_ident, AffineResidualMap, ExprResidualMap, FdConfig, GenericRestriction, GenericVerdict, LocalVerdict,
    ResidualMap, SamplerConfig,
};
use ratex_core::resolve::{bundle_spectrum, cf_check_and_normalize, required_horizon, simulate, spectral_density, unit_grid};
use ratex_core::{solve, wh_factorize, Complex64, DMatrix, RatexError, ToleranceConfig};
use serde_json::{json, Value};

use crate::files::{load_numeric_model, load_param_model, load_restriction_file, Affine};
use crate::report::{complex, complex_json, laurent_json, laurent_lines, matrix, matrix_json, num, rank_json, rank_lines};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_MODEL: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub text: Vec<String>,
    pub json: Value,
}

impl Outcome {
    fn new(code: i32, text: Vec<String>, json: Value) -> Self {
        Self { code, text, json }
    }
}

/// Model-level failures (existence, uniqueness, canonical form) exit with 2;
/// everything else (I/O, parsing, malformed restrictions) with 1.
pub fn error_code(e: &anyhow::Error) -> i32 {
    match e.chain().find_map(|c| c.downcast_ref::<RatexError>()) {
        Some(r) if r.is_eu_failure() => EXIT_MODEL,
        Some(RatexError::RankDeficientC0 { .. } | RatexError::NotInvertible { .. } | RatexError::SingularOnGrid { .. }) => {
            EXIT_MODEL
        }
        _ => EXIT_INPUT,
    }
}

pub fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain().find_map(|c| c.downcast_ref::<RatexError>()).map(|r| r.kind()).unwrap_or("InputError")
}

pub fn factorize(model: &Path, tol: &ToleranceConfig) -> Result<Outcome> {
    let model = load_numeric_model(model)?;
    let f = match wh_factorize(model.b(), tol) {
        Ok(f) => f,
        Err(e) => {
            let zeros = ratex_core::check_eu(model.b(), tol).zeros;
            let text = vec![
                format!("EU condition fails: {e}"),
                format!("  zeros of det(z^lambda B): {}", zeros.iter().map(|z| complex(*z)).collect::<Vec<_>>().join(" ")),
            ];
            let js = json!({"eu": false, "error": {"kind": e.kind(), "message": e.to_string()}, "zeros": complex_json(&zeros)});
            return Ok(Outcome::new(EXIT_MODEL, text, js));
        }
    };
    let mut text = vec!["EU condition holds".to_string()];
    if f.lambda == 0 {
        text.push(format!("  B_minus = I (lambda = 0, B_plus = B), n = {}", model.n()));
    } else {
        laurent_lines("B_minus", &f.b_minus, &mut text);
    }
    laurent_lines("B_plus", &f.b_plus, &mut text);
    text.push(format!("  zeros: {}", f.zeros.iter().map(|z| complex(*z)).collect::<Vec<_>>().join(" ")));
    text.push(format!("  stable zeros: {} (required n*lambda = {})", f.stable_zero_count(), model.n() * f.lambda));
    text.push(format!("  residual: {}", num(f.residual)));
    let js = json!({
        "eu": true,
        "b_minus": laurent_json(&f.b_minus),
        "b_plus": laurent_json(&f.b_plus),
        "zeros": complex_json(&f.zeros),
        "stable_zeros": f.stable_zero_count(),
        "residual": f.residual,
    });
    Ok(Outcome::new(EXIT_OK, text, js))
}

pub fn solve_cmd(model: &Path, horizon: Option<usize>, tol: &ToleranceConfig) -> Result<Outcome> {
    let model = load_numeric_model(model)?;
    let h = horizon.unwrap_or_else(|| required_horizon(model.n(), model.kappa(), model.lambda()));
    let s = solve(&model, h, tol)?;
    let mut text = vec!["[B_minus^-1 A]_+:".to_string()];
    laurent_lines("M", &s.ma_part, &mut text);
    text.push("A+:".into());
    laurent_lines("A+", &s.a_plus, &mut text);
    text.push(format!("transfer series C_0..C_{h}:"));
    for (j, c) in s.transfer.coeffs.iter().enumerate() {
        text.push(format!("  C[{j}] = {}", matrix(c)));
    }
    let mut js = json!({
        "horizon": h,
        "ma_part": laurent_json(&s.ma_part),
        "a_plus": laurent_json(&s.a_plus),
        "transfer": s.transfer.coeffs.iter().map(matrix_json).collect::<Vec<_>>(),
    });
    let code = match cf_check_and_normalize(&s, tol) {
        Ok((v, _, rep)) => {
            if rep.canonical_input {
                text.push("CF: canonical".into());
            } else {
                text.push(format!("CF: not canonical; rotate A by V = {}", matrix(&v)));
            }
            for w in &rep.warnings {
                text.push(format!("  warning: {w}"));
            }
            js["cf"] = json!({
                "status": if rep.canonical_input { "canonical" } else { "rotated" },
                "rotation": matrix_json(&v),
                "c0_rank": rep.c0_rank,
                "grid_only": rep.grid_only,
                "warnings": rep.warnings,
            });
            EXIT_OK
        }
        Err(e) => {
            text.push(format!("CF: fails ({}): {e}", e.kind()));
            js["cf"] = json!({"status": "error", "kind": e.kind(), "message": e.to_string()});
            match e {
                RatexError::RankDeficientC0 { .. } | RatexError::NotInvertible { .. } => EXIT_MODEL,
                _ => EXIT_INPUT,
            }
        }
    };
    Ok(Outcome::new(code, text, js))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Oracle {
    Spectral,
    Kernel,
    Both,
}

pub fn equiv(a: &Path, b: &Path, oracle: Oracle, grid: usize, tol: &ToleranceConfig) -> Result<Outcome> {
    let ma = load_numeric_model(a)?;
    let mb = load_numeric_model(b)?;
    if (ma.n(), ma.m()) != (mb.n(), mb.m()) {
        bail!("models have different (n, m): ({}, {}) vs ({}, {})", ma.n(), ma.m(), mb.n(), mb.m());
    }
    let sa = solve(&ma, required_horizon(ma.n(), ma.kappa(), ma.lambda()), tol)?;
    let mut text = Vec::new();
    let mut js = json!({});
    let mut verdicts = Vec::new();

    if matches!(oracle, Oracle::Kernel | Oracle::Both) {
        let sys = IdentSystem::from_bundle(&sa, tol)?;
        match obs_equivalent(&sys, &mb, tol) {
            Ok(r) => {
                text.push(format!(
                    "kernel test: {} (residual {}, limit {})",
                    if r.equivalent { "equivalent" } else { "not equivalent" },
                    num(r.residual),
                    num(r.limit)
                ));
                js["kernel"] = json!({"equivalent": r.equivalent, "residual": r.residual, "limit": r.limit});
                verdicts.push(r.equivalent);
            }
            Err(e @ RatexError::LagMismatch(_)) if oracle == Oracle::Both => {
                text.push(format!("kernel test: skipped ({e})"));
                js["kernel"] = json!({"skipped": e.to_string()});
            }
            Err(e) => return Err(e.into()),
        }
    }
    if matches!(oracle, Oracle::Spectral | Oracle::Both) {
        let sb = solve(&mb, 0, tol)?;
        let omegas = unit_grid(grid);
        let fa = spectral_density(ma.b(), &sa.a_plus, &omegas)?;
        let fb = spectral_density(mb.b(), &sb.a_plus, &omegas)?;
        let diff = fa.iter().zip(&fb).map(|(x, y)| (x - y).camax()).fold(0.0, f64::max);
        let scale = fa.iter().map(|x| x.camax()).fold(1.0, f64::max);
        let limit = 1e-10 * scale;
        let eq = diff <= limit;
        text.push(format!(
            "spectral test ({grid} points): {} (max difference {}, limit {})",
            if eq { "equivalent" } else { "not equivalent" },
            num(diff),
            num(limit)
        ));
        js["spectral"] = json!({"equivalent": eq, "max_difference": diff, "limit": limit, "grid": grid});
        verdicts.push(eq);
    }
    let code = if verdicts.iter().all(|&v| v) {
        EXIT_OK
    } else if verdicts.iter().all(|&v| !v) {
        EXIT_NEGATIVE
    } else {
        text.push("oracles disagree".into());
        EXIT_INCONCLUSIVE
    };
    let verdict = match code {
        EXIT_OK => "equivalent",
        EXIT_NEGATIVE => "not_equivalent",
        _ => "oracles_disagree",
    };
    text.insert(0, format!("verdict: {verdict}"));
    js["verdict"] = json!(verdict);
    Ok(Outcome::new(code, text, js))
}

fn rank_outcome(rep: &RankReport, title: &str, text: &mut Vec<String>) -> i32 {
    text.push(format!("{title}: {}", if rep.identified() { "identified" } else { "not identified" }));
    rank_lines(rep, text);
    if rep.identified() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

pub fn ident(model: &Path, restrictions: &Path, ds: bool, tol: &ToleranceConfig) -> Result<Outcome> {
    let model = load_numeric_model(model)?;
    let d = Dims::of(&model);
    let rf = load_restriction_file(restrictions)?;
    if !rf.nonlinear.is_empty() {
        bail!("nonlinear restrictions need the 'local' command");
    }
    let (affine, warning) = rf.compile(&d)?;
    let s = solve(&model, required_horizon(d.n, d.kappa, d.lambda), tol)?;
    let sys = IdentSystem::from_bundle(&s, tol)?;
    let mut rep = match &affine {
        Affine::System(a) => ident_test_affine(&sys, a, tol)?,
        Affine::Equation(e) => ident_test_equation(&sys, e, tol)?,
    };
    rep.warnings.extend(warning);
    let mut text = vec![format!("hankel rank: {} (McMillan degree {})", sys.hankel_rank, sys.mcmillan_delta)];
    let title = match affine.equation() {
        None => "system".to_string(),
        Some(i) => format!("equation {}", i + 1),
    };
    let code = rank_outcome(&rep, &title, &mut text);
    let mut js = rank_json(&rep);
    js["mode"] = json!(if affine.equation().is_some() { "equation" } else { "system" });
    js["hankel_rank"] = json!(sys.hankel_rank);
    if ds {
        let Affine::System(a) = &affine else { bail!("--ds needs system-wide restrictions") };
        let dsr = ds_criterion(&model, a, tol)?;
        rank_outcome(&dsr, "Deistler-Schrader", &mut text);
        let agree = dsr.verdict == rep.verdict;
        text.push(format!("criteria {}", if agree { "agree" } else { "DISAGREE" }));
        js["ds"] = rank_json(&dsr);
        js["ds"]["agrees"] = json!(agree);
    }
    Ok(Outcome::new(code, text, js))
}

pub fn generic(model: &Path, restrictions: &Path, cfg: &SamplerConfig, tol: &ToleranceConfig) -> Result<Outcome> {
    let map = load_param_model(model)?;
    let d = Dims { n: map.n, m: map.m, kappa: map.kappa, lambda: map.lambda };
    let rf = load_restriction_file(restrictions)?;
    if !rf.nonlinear.is_empty() {
        bail!("generic identification takes affine restrictions only");
    }
    let (affine, warning) = rf.compile(&d)?;
    let restr = match affine {
        Affine::System(a) => GenericRestriction::System(a),
        Affine::Equation(e) => GenericRestriction::Equation(e),
    };
    let rep = generic_ident(&map, &restr, cfg, tol);
    let mut text = vec![
        format!("verdict: {}", rep.verdict.as_str()),
        format!(
            "  samples: {} drawn, {} valid, {} deficient, {} borderline",
            rep.samples_drawn, rep.samples_valid, rep.deficient_count, rep.borderline_count
        ),
    ];
    for (reason, count) in &rep.rejected {
        text.push(format!("  rejected {count}: {reason}"));
    }
    if let Some(w) = &rep.witness {
        let theta: Vec<String> = map.params.iter().zip(&w.theta).map(|(p, v)| format!("{p}={}", num(*v))).collect();
        text.push(format!("  witness (draw {}): {}", w.index, theta.join(" ")));
        rank_lines(&w.report, &mut text);
    }
    for n in rep.notes.iter().chain(&warning) {
        text.push(format!("  note: {n}"));
    }
    let js = json!({
        "verdict": rep.verdict.as_str(),
        "samples_drawn": rep.samples_drawn,
        "samples_valid": rep.samples_valid,
        "deficient_count": rep.deficient_count,
        "borderline_count": rep.borderline_count,
        "rejected": rep.rejected,
        "witness": rep.witness.as_ref().map(|w| json!({"index": w.index, "theta": w.theta, "rank": rank_json(&w.report)})),
        "notes": rep.notes.iter().chain(&warning).collect::<Vec<_>>(),
        "seed": cfg.seed,
    });
    let code = match rep.verdict {
        GenericVerdict::GenericallyIdentified => EXIT_OK,
        GenericVerdict::EvidenceNotIdentified => EXIT_NEGATIVE,
        GenericVerdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    Ok(Outcome::new(code, text, js))
}

pub fn local(model: &Path, restrictions: &Path, tol: &ToleranceConfig) -> Result<Outcome> {
    let model = load_numeric_model(model)?;
    let d = Dims::of(&model);
    let rf = load_restriction_file(restrictions)?;
    let eq = rf.equation_index(&d)?;
    let map: Box<dyn ResidualMap> = if !rf.nonlinear.is_empty() {
        if rf.has_affine() {
            bail!("give either affine or nonlinear restrictions to 'local', not both");
        }
        Box::new(ExprResidualMap::parse(&rf.nonlinear, d, eq)?)
    } else {
        let (affine, _) = rf.compile(&d)?;
        Box::new(AffineResidualMap { r: affine.r().clone(), u: affine.u().clone(), equation: eq, dims: d })
    };
    let rep = local_ident(&model, map.as_ref(), tol, &FdConfig::default())?;
    let mut text = vec![format!("verdict: {}", rep.verdict.as_str())];
    rank_lines(&rep.rank, &mut text);
    if !rep.probe_ranks.is_empty() {
        text.push(format!("  probe ranks: {:?}", rep.probe_ranks));
    }
    for n in &rep.notes {
        text.push(format!("  note: {n}"));
    }
    let mut js = rank_json(&rep.rank);
    js["verdict"] = json!(rep.verdict.as_str());
    js["probe_ranks"] = json!(rep.probe_ranks);
    js["rank_locally_constant"] = json!(rep.rank_locally_constant);
    js["notes"] = json!(rep.notes);
    let code = match rep.verdict {
        LocalVerdict::LocallyIdentified => EXIT_OK,
        LocalVerdict::NotIdentifiedUnderRegularity => EXIT_NEGATIVE,
        LocalVerdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    Ok(Outcome::new(code, text, js))
}

/// CSV of the spectral density: `omega` then `re_fij,im_fij` row-major.
pub fn spectrum_csv(f: &[DMatrix<Complex64>], omegas: &[f64]) -> String {
    let (n, _) = f.first().map(|m| m.shape()).unwrap_or((0, 0));
    let mut out = String::from("omega");
    for i in 1..=n {
        for j in 1..=n {
            out.push_str(&format!(",re_f{i}_{j},im_f{i}_{j}"));
        }
    }
    out.push('\n');
    for (w, m) in omegas.iter().zip(f) {
        out.push_str(&w.to_string());
        for i in 0..n {
            for j in 0..n {
                out.push_str(&format!(",{},{}", m[(i, j)].re, m[(i, j)].im));
            }
        }
        out.push('\n');
    }
    out
}

/// CSV of a sample path: `t` then `y_1..y_n`.
pub fn path_csv(y: &DMatrix<f64>) -> String {
    let mut out = String::from("t");
    for i in 1..=y.ncols() {
        out.push_str(&format!(",y_{i}"));
    }
    out.push('\n');
    for t in 0..y.nrows() {
        out.push_str(&t.to_string());
        for i in 0..y.ncols() {
            out.push_str(&format!(",{}", y[(t, i)]));
        }
        out.push('\n');
    }
    out
}

fn emit_csv(csv: &str, out: Option<&Path>, what: &str, rows: usize) -> Result<Outcome> {
    match out {
        Some(path) => {
            std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            Ok(Outcome::new(
                EXIT_OK,
                vec![format!("wrote {rows} {what} rows to {}", path.display())],
                json!({"rows": rows, "out": path.display().to_string()}),
            ))
        }
        None => {
            std::io::stdout().lock().write_all(csv.as_bytes())?;
            Ok(Outcome::new(EXIT_OK, Vec::new(), Value::Null))
        }
    }
}

pub fn spectrum(model: &Path, grid: usize, out: Option<&Path>, tol: &ToleranceConfig) -> Result<Outcome> {
    if grid == 0 {
        bail!("--grid must be positive");
    }
    let model = load_numeric_model(model)?;
    let s = solve(&model, 0, tol)?;
    let f = bundle_spectrum(&s, grid)?;
    emit_csv(&spectrum_csv(&f, &unit_grid(grid)), out, "spectrum", grid)
}

pub fn simulate_cmd(
    model: &Path,
    t: usize,
    seed: u64,
    horizon: Option<usize>,
    out: Option<&Path>,
    tol: &ToleranceConfig,
) -> Result<Outcome> {
    let model = load_numeric_model(model)?;
    let s = solve(&model, 0, tol)?;
    let y = simulate(&s, t, seed, horizon)?;
    emit_csv(&path_csv(&y), out, "sample", t)
}
