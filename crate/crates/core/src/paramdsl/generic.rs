//! Sampling-based generic identification of a parametrized model.
//!
//! One full-rank point proves generic identification. Rank deficiency at
//! every sampled point is only numerical evidence for the converse.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{eval_model, ParamMap};
use crate::error::{RatexError, Result};
use crate::identcore::{ident_test_affine, ident_test_equation, AffineRestriction, EquationRestriction, IdentSystem, RankReport};
use crate::resolve::{cf_check_and_normalize, required_horizon, solve};
use crate::tol::ToleranceConfig;

#[derive(Debug, Clone)]
pub enum GenericRestriction {
    System(AffineRestriction),
    Equation(EquationRestriction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub num_samples: usize,
    pub seed: u64,
    pub min_valid: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { num_samples: 64, seed: 0, min_valid: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericVerdict {
    GenericallyIdentified,
    /// Every valid sample is rank deficient: numerical evidence only.
    EvidenceNotIdentified,
    Inconclusive,
}

impl GenericVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            GenericVerdict::GenericallyIdentified => "generically_identified",
            GenericVerdict::EvidenceNotIdentified => "evidence_not_identified",
            GenericVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub index: usize,
    pub theta: Vec<f64>,
    pub report: RankReport,
}

#[derive(Debug, Clone)]
pub struct GenericReport {
    pub samples_drawn: usize,
    pub samples_valid: usize,
    pub full_rank_found: bool,
    pub witness: Option<Witness>,
    /// Rank-deficient valid samples, borderline ones excluded.
    pub deficient_count: usize,
    pub borderline_count: usize,
    /// Reasons for rejected draws with their counts.
    pub rejected: BTreeMap<String, usize>,
    pub verdict: GenericVerdict,
    pub notes: Vec<String>,
}

/// Rank test at a single parameter point. Fails when the point violates the
/// existence, invertibility or canonical-form conditions.
pub fn point_ident(map: &ParamMap, restr: &GenericRestriction, theta: &[f64], tol: &ToleranceConfig) -> Result<RankReport> {
    let model = eval_model(map, theta)?;
    let bundle = solve(&model, required_horizon(model.n(), model.kappa(), model.lambda()), tol)?;
    let (_, _, cf) = cf_check_and_normalize(&bundle, tol)?;
    if !cf.canonical_input {
        return Err(RatexError::Evaluation("C0 is not canonical quasi-lower triangular at this point".into()));
    }
    let sys = IdentSystem::from_bundle(&bundle, tol)?;
    match restr {
        GenericRestriction::System(r) => ident_test_affine(&sys, r, tol),
        GenericRestriction::Equation(r) => ident_test_equation(&sys, r, tol),
    }
}

/// Draws `θ` uniformly from the domain box and rank-tests each valid draw.
pub fn generic_ident(map: &ParamMap, restr: &GenericRestriction, cfg: &SamplerConfig, tol: &ToleranceConfig) -> GenericReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let thetas: Vec<Vec<f64>> = (0..cfg.num_samples)
        .map(|_| map.domain.iter().map(|&(lo, hi)| if lo < hi { rng.random_range(lo..hi) } else { lo }).collect())
        .collect();
    let results: Vec<Result<RankReport>> = thetas.par_iter().map(|t| point_ident(map, restr, t, tol)).collect();

    let mut report = GenericReport {
        samples_drawn: 0,
        samples_valid: 0,
        full_rank_found: false,
        witness: None,
        deficient_count: 0,
        borderline_count: 0,
        rejected: BTreeMap::new(),
        verdict: GenericVerdict::Inconclusive,
        notes: vec!["connectedness of the parameter domain and injectivity of the map are assumed, not verified".into()],
    };
    for (i, res) in results.into_iter().enumerate() {
        report.samples_drawn = i + 1;
        match res {
            Err(e) => *report.rejected.entry(e.kind().to_string()).or_default() += 1,
            Ok(rep) => {
                report.samples_valid += 1;
                if rep.identified() {
                    report.full_rank_found = true;
                    report.witness = Some(Witness { index: i, theta: thetas[i].clone(), report: rep });
                    break;
                } else if rep.borderline() {
                    report.borderline_count += 1;
                } else {
                    report.deficient_count += 1;
                }
            }
        }
    }
    report.verdict = if report.full_rank_found {
        GenericVerdict::GenericallyIdentified
    } else if report.samples_valid >= cfg.min_valid && report.deficient_count >= cfg.min_valid {
        report.notes.push("all valid samples are rank deficient: numerical evidence of non-identification, not a proof".into());
        GenericVerdict::EvidenceNotIdentified
    } else {
        if report.samples_valid == 0 {
            report.notes.push(format!("no valid samples among {} draws", report.samples_drawn));
        } else {
            report.notes.push(format!(
                "{} rank-deficient valid samples (minimum {}), {} borderline",
                report.deficient_count, cfg.min_valid, report.borderline_count
            ));
        }
        GenericVerdict::Inconclusive
    };
    report
}
