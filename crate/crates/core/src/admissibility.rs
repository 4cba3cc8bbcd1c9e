//! Decides whether a fully specified local model is already refuted by the
//! observed Bell violations.
//!
//! A model whose factual and counterfactual time averages coincide lives in
//! world B (and, if they coincide pointwise, in world A, which implies B);
//! there the usual inequalities hold and the observed violations rule it
//! out. A model survives only if at least one pair of averages differs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lhv::{exact_time_averages_with, LocalModel, QuadratureConfig, Quantity};
use crate::model::{CorrelationData, Schedule};

/// Default gap tolerance, in probability units.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    RefutedByExperiments,
    NotYetRefuted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    Ch,
    Chsh,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermGap {
    pub term: String,
    pub kind: TermKind,
    /// Average over the quarters where the term is measured.
    pub factual: f64,
    /// Average over the complementary quarters.
    pub counterfactual: f64,
    pub gap: f64,
    /// Spread of the λ-integrated value over the whole time grid.
    pub pointwise_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub model: String,
    pub time_dependent: bool,
    pub tolerance: f64,
    /// How "different" is decided; stated because equality is an idealization.
    pub criterion: String,
    pub terms: Vec<TermGap>,
    pub world_a_holds: bool,
    pub world_b_holds: bool,
    pub verdict: Verdict,
    pub time_cells: usize,
}

impl AdmissibilityReport {
    pub fn max_gap(&self) -> f64 {
        self.terms.iter().map(|t| t.gap).fold(0.0, f64::max)
    }
}

pub fn check_model<M: LocalModel>(model: &M, schedule: &Schedule, tol: f64) -> Result<AdmissibilityReport> {
    check_model_with(model, schedule, tol, &QuadratureConfig::default())
}

pub fn check_model_with<M: LocalModel>(
    model: &M,
    schedule: &Schedule,
    tol: f64,
    quadrature: &QuadratureConfig,
) -> Result<AdmissibilityReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidTolerance(tol));
    }
    let averages = exact_time_averages_with(model, schedule, quadrature)?;
    let kinds = Quantity::CH_TERMS
        .iter()
        .map(|&q| (q, TermKind::Ch))
        .chain(Quantity::CHSH_TERMS.iter().map(|&q| (q, TermKind::Chsh)));
    let terms: Vec<TermGap> = kinds
        .map(|(q, kind)| {
            let t = averages.term(q);
            TermGap {
                term: t.term,
                kind,
                factual: t.factual,
                counterfactual: t.counterfactual,
                gap: (t.factual - t.counterfactual).abs(),
                pointwise_spread: t.pointwise_spread,
            }
        })
        .collect();

    let world_a_holds = terms.iter().all(|t| t.pointwise_spread <= tol);
    let world_b_holds = terms.iter().all(|t| t.gap <= tol);
    Ok(AdmissibilityReport {
        model: model.name().to_string(),
        time_dependent: model.is_time_dependent(),
        tolerance: tol,
        criterion: format!(
            "averages are treated as equal when they differ by at most {tol:e}; the model survives only if some factual and counterfactual average differ by more"
        ),
        terms,
        world_a_holds,
        world_b_holds,
        verdict: if world_b_holds {
            Verdict::RefutedByExperiments
        } else {
            Verdict::NotYetRefuted
        },
        time_cells: averages.time_cells(),
    })
}

/// Measured data never determines counterfactual averages, so this always
/// refuses.
pub fn check_data(_data: &CorrelationData) -> Result<AdmissibilityReport> {
    Err(Error::DataOnlyAdmissibility)
}
