//! The four "possible worlds": valuation rules that assign numbers to the
//! counterfactual terms a time-sequenced measurement leaves undetermined, and
//! the CH and CHSH bounds each one implies for the measured data.
//!
//! Worlds act on data, never on models. A counterfactual expectation is the
//! sum over the three quarters in which a settings pair is not active; under
//! a rule that makes it `k·E`, the augmented CHSH bound of 8 turns into
//! `S ≤ 8/(1 + k)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequalities::{
    ch_sum_with_tolerance, chsh_combination, lr_only_chsh, BoundVerdict, ChshPairing, ANALYTIC_SINGLES_TOL,
    LR_ONLY_CHSH_BOUND,
};
use crate::model::{CorrelationData, PerPair, SettingsPair, SettingsQuad, RANGE_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorldAssumption {
    /// A: counterfactual values equal factual ones at every time.
    PointwiseEqual,
    /// B: counterfactual time averages equal factual time averages.
    AverageEqual,
    /// C: every counterfactual probability and observable is zero.
    Zero,
    /// D: an analyzer at θ behaves as if at θ′ with probability `cos²(θ − θ′)`.
    QmLike,
}

impl WorldAssumption {
    pub const ALL: [WorldAssumption; 4] = [
        WorldAssumption::PointwiseEqual,
        WorldAssumption::AverageEqual,
        WorldAssumption::Zero,
        WorldAssumption::QmLike,
    ];

    pub fn tag(self) -> char {
        match self {
            WorldAssumption::PointwiseEqual => 'A',
            WorldAssumption::AverageEqual => 'B',
            WorldAssumption::Zero => 'C',
            WorldAssumption::QmLike => 'D',
        }
    }

    pub fn from_tag(tag: char) -> Option<Self> {
        Self::ALL.into_iter().find(|w| w.tag() == tag.to_ascii_uppercase())
    }

    pub fn description(self) -> &'static str {
        match self {
            WorldAssumption::PointwiseEqual => "factual and counterfactual values are equal pointwise",
            WorldAssumption::AverageEqual => "factual and counterfactual time averages are equal",
            WorldAssumption::Zero => "counterfactual values are zero",
            WorldAssumption::QmLike => "counterfactual values weighted by cos² of the setting offset",
        }
    }
}

/// `cos²(α − α′)` and `cos²(β − β′)`: the probability that an analyzer behaves
/// as if set to the other setting of its station.
pub fn qm_like_weights(quad: &SettingsQuad) -> (f64, f64) {
    let wa = (quad.alpha.radians() - quad.alpha_prime.radians()).cos().powi(2);
    let wb = (quad.beta.radians() - quad.beta_prime.radians()).cos().powi(2);
    (wa, wb)
}

/// A rule valuing the unmeasured expectations from the measured ones.
pub trait CounterfactualRule {
    fn label(&self) -> String;

    fn counterfactual_expectations(&self, factual: &PerPair<f64>, quad: &SettingsQuad) -> PerPair<f64>;
}

impl CounterfactualRule for WorldAssumption {
    fn label(&self) -> String {
        format!("world {}", self.tag())
    }

    fn counterfactual_expectations(&self, factual: &PerPair<f64>, quad: &SettingsQuad) -> PerPair<f64> {
        let k = counterfactual_weight(*self, quad);
        factual.map(|e| k * e)
    }
}

/// Multiplier `k` with `E* = k·E` in the given world.
///
/// In world D the three counterfactual quarters of a pair are one A-swap,
/// one B-swap and one double swap, weighted `w_A`, `w_B` and `w_A·w_B`.
pub fn counterfactual_weight(world: WorldAssumption, quad: &SettingsQuad) -> f64 {
    match world {
        WorldAssumption::PointwiseEqual | WorldAssumption::AverageEqual => 3.0,
        WorldAssumption::Zero => 0.0,
        WorldAssumption::QmLike => {
            let (wa, wb) = qm_like_weights(quad);
            wa + wb + wa * wb
        }
    }
}

pub fn world_counterfactual_expectations(
    world: WorldAssumption,
    factual: &PerPair<f64>,
    quad: &SettingsQuad,
) -> Result<PerPair<f64>> {
    for (_, &e) in factual.iter() {
        if !(e.is_finite() && e.abs() <= 1.0 + RANGE_SLACK) {
            return Err(Error::OutOfRange {
                what: "factual expectation",
                value: e,
                lo: -1.0,
                hi: 1.0,
            });
        }
    }
    Ok(world.counterfactual_expectations(factual, quad))
}

/// Effective bound on the plain CHSH value `S` in the given world.
pub fn world_chsh_bound(world: WorldAssumption, quad: &SettingsQuad) -> f64 {
    LR_ONLY_CHSH_BOUND / (1.0 + counterfactual_weight(world, quad))
}

/// A second reading of the same world, reported next to the primary one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternativeReading {
    pub description: String,
    pub value: f64,
    pub verdict: BoundVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldChReport {
    pub world: WorldAssumption,
    pub verdict: BoundVerdict,
    /// The probability-weighted pair combination before singles are subtracted.
    pub pair_part: f64,
    pub alternative: Option<AlternativeReading>,
    pub annotations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldChshReport {
    pub world: WorldAssumption,
    /// Plain `S` compared with the world's effective bound.
    pub verdict: BoundVerdict,
    pub counterfactual_weight: f64,
    pub counterfactual_expectations: PerPair<f64>,
    /// The augmented combination with the world's counterfactuals, against 8.
    pub lr_only: BoundVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldReport {
    pub world: WorldAssumption,
    pub description: &'static str,
    pub ch_value: f64,
    pub ch_bounds: (f64, f64),
    pub chsh_value: f64,
    pub chsh_bound: f64,
    pub ch_violated: bool,
    pub chsh_violated: bool,
    pub ch: WorldChReport,
    pub chsh: WorldChshReport,
}

const CH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

fn signed_pair_sum(p: &PerPair<f64>) -> f64 {
    p.iter().map(|(pair, &v)| CH_SIGNS[pair.index()] * v).sum()
}

/// World-D weight of the quarter measuring `measured` when `target` is wanted.
fn pair_weight(quad: &SettingsQuad, target: SettingsPair, measured: SettingsPair) -> f64 {
    let (ta, tb) = quad.angles(target);
    let (ma, mb) = quad.angles(measured);
    (ta.radians() - ma.radians()).cos().powi(2) * (tb.radians() - mb.radians()).cos().powi(2)
}

/// World-D pair part: every full-interval pair probability is a quarter of
/// the weighted sum over all four measured pair probabilities.
pub fn qm_like_pair_part(p: &PerPair<f64>, quad: &SettingsQuad) -> f64 {
    SettingsPair::ALL
        .iter()
        .map(|&target| {
            let full: f64 = SettingsPair::ALL
                .iter()
                .map(|&measured| pair_weight(quad, target, measured) * p[measured])
                .sum();
            CH_SIGNS[target.index()] * 0.25 * full
        })
        .sum()
}

/// World C pair part reference figure that direct evaluation does not reproduce.
#[allow(clippy::approx_constant)]
pub const WORLD_C_REFERENCE_FIGURE: f64 = 0.318;

pub fn world_ch_report(world: WorldAssumption, data: &CorrelationData, quad: &SettingsQuad) -> Result<WorldChReport> {
    world_ch_report_with_tolerance(world, data, quad, ANALYTIC_SINGLES_TOL)
}

pub fn world_ch_report_with_tolerance(
    world: WorldAssumption,
    data: &CorrelationData,
    quad: &SettingsQuad,
    singles_tol: f64,
) -> Result<WorldChReport> {
    let p = data.pair_probs()?;
    let s = data.singles()?;
    let mut annotations = Vec::new();
    let mut alternative = None;
    let (verdict, pair_part) = match world {
        WorldAssumption::PointwiseEqual | WorldAssumption::AverageEqual => {
            let v = ch_sum_with_tolerance(data, singles_tol)?;
            (v, v.value)
        }
        WorldAssumption::Zero => {
            // Only the measured quarter (pairs) or half (singles) contributes
            // to each full-interval average.
            let pair_part = 0.25 * signed_pair_sum(&p);
            annotations.push(format!(
                "world C pair term evaluates to {pair_part:.4}; the reference figure {WORLD_C_REFERENCE_FIGURE} is not reproduced by direct evaluation"
            ));
            (BoundVerdict::new(pair_part - 0.5 * s.b - 0.5 * s.a_prime, -1.0, 0.0), pair_part)
        }
        WorldAssumption::QmLike => {
            let (wa, wb) = qm_like_weights(quad);
            let pair_part = qm_like_pair_part(&p, quad);
            // Each single is measured over a half: ½·P on the factual half
            // plus ½·w·P on the counterfactual one.
            let singles = 0.5 * (1.0 + wb) * s.b + 0.5 * (1.0 + wa) * s.a_prime;
            let quarter_singles = 0.25 * (1.0 + wb) * s.b + 0.25 * (1.0 + wa) * s.a_prime;
            let alt = BoundVerdict::new(pair_part - quarter_singles, -1.0, 0.0);
            annotations.push(format!(
                "world D singles normalized per half total {singles:.4}; with quarter normalization they total {quarter_singles:.4} and the CH verdict is {}",
                if alt.satisfied { "satisfied" } else { "violated" }
            ));
            alternative = Some(AlternativeReading {
                description: "singles weighted ¼(1 + w) instead of ½(1 + w)".into(),
                value: alt.value,
                verdict: alt,
            });
            (BoundVerdict::new(pair_part - singles, -1.0, 0.0), pair_part)
        }
    };
    Ok(WorldChReport {
        world,
        verdict,
        pair_part,
        alternative,
        annotations,
    })
}

pub fn world_chsh_report(world: WorldAssumption, data: &CorrelationData, quad: &SettingsQuad) -> Result<WorldChshReport> {
    let e = data.expectations()?;
    let cf = world_counterfactual_expectations(world, &e, quad)?;
    let s = chsh_combination(&e, ChshPairing::Standard);
    Ok(WorldChshReport {
        world,
        verdict: BoundVerdict::new(s, 0.0, world_chsh_bound(world, quad)),
        counterfactual_weight: counterfactual_weight(world, quad),
        counterfactual_expectations: cf,
        lr_only: lr_only_chsh(&e, &cf)?,
    })
}

pub fn world_report(world: WorldAssumption, data: &CorrelationData, quad: &SettingsQuad) -> Result<WorldReport> {
    world_report_with_tolerance(world, data, quad, ANALYTIC_SINGLES_TOL)
}

pub fn world_report_with_tolerance(
    world: WorldAssumption,
    data: &CorrelationData,
    quad: &SettingsQuad,
    singles_tol: f64,
) -> Result<WorldReport> {
    let ch = world_ch_report_with_tolerance(world, data, quad, singles_tol)?;
    let chsh = world_chsh_report(world, data, quad)?;
    Ok(WorldReport {
        world,
        description: world.description(),
        ch_value: ch.verdict.value,
        ch_bounds: (ch.verdict.lower, ch.verdict.upper),
        chsh_value: chsh.verdict.value,
        chsh_bound: chsh.verdict.upper,
        ch_violated: ch.verdict.violated(),
        chsh_violated: chsh.verdict.violated(),
        ch,
        chsh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequalities::chsh_s;
    use crate::qm::qm_correlation_data;
    use proptest::prelude::*;

    fn std_quad() -> SettingsQuad {
        SettingsQuad::standard()
    }

    fn qm() -> CorrelationData {
        qm_correlation_data(&std_quad())
    }

    #[test]
    fn counterfactual_expectation_examples() {
        let e = PerPair([0.707, -0.707, 0.707, 0.707]);
        let b = world_counterfactual_expectations(WorldAssumption::AverageEqual, &e, &std_quad()).unwrap();
        assert!((b.0[0] - 2.121).abs() < 1e-12 && (b.0[1] + 2.121).abs() < 1e-12);
        let c = world_counterfactual_expectations(WorldAssumption::Zero, &e, &std_quad()).unwrap();
        assert_eq!(c.0, [0.0; 4]);
        let d = world_counterfactual_expectations(WorldAssumption::QmLike, &e, &std_quad()).unwrap();
        assert!((d.0[0] - 0.88375).abs() < 1e-12);
        assert!(world_counterfactual_expectations(WorldAssumption::Zero, &PerPair([1.5, 0.0, 0.0, 0.0]), &std_quad())
            .is_err());
    }

    #[test]
    fn standard_weights_are_half() {
        let (wa, wb) = qm_like_weights(&std_quad());
        assert!((wa - 0.5).abs() < 1e-15 && (wb - 0.5).abs() < 1e-15);
        assert!((counterfactual_weight(WorldAssumption::QmLike, &std_quad()) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn nonstandard_quad_uses_general_weights() {
        let quad = SettingsQuad::new(0.0, 0.3, 0.1, 0.9).unwrap();
        let (wa, wb) = (0.3f64.cos().powi(2), 0.8f64.cos().powi(2));
        let k = counterfactual_weight(WorldAssumption::QmLike, &quad);
        assert!((k - (wa + wb + wa * wb)).abs() < 1e-15);
        assert!((world_chsh_bound(WorldAssumption::QmLike, &quad) - 8.0 / (1.0 + k)).abs() < 1e-15);
    }

    #[test]
    fn world_ch_examples() {
        let c = world_ch_report(WorldAssumption::Zero, &qm(), &std_quad()).unwrap();
        assert!((c.pair_part - 0.25 * 0.5 * (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((c.verdict.value + 0.1982).abs() < 1e-4);
        assert!(c.verdict.satisfied);
        assert_eq!(c.annotations.len(), 1);

        let d = world_ch_report(WorldAssumption::QmLike, &qm(), &std_quad()).unwrap();
        assert!((d.pair_part - 0.458).abs() < 5e-4);
        assert!((d.verdict.value - (d.pair_part - 0.75)).abs() < 1e-12);
        assert!(d.verdict.satisfied);
        let alt = d.alternative.unwrap();
        assert!((alt.value - (d.pair_part - 0.375)).abs() < 1e-12);

        let b = world_ch_report(WorldAssumption::AverageEqual, &qm(), &std_quad()).unwrap();
        assert!((b.verdict.value - 1.2071).abs() < 1e-4);
        assert!(b.verdict.violated());
    }

    #[test]
    fn qm_like_pair_part_matches_bracket_expansion() {
        // Each full-interval pair probability written out term by term with
        // weights 1, ½, ½, ¼.
        let p = qm().pair_probs().unwrap();
        let (ab, abp, apb, apbp) = (p.0[0], p.0[1], p.0[2], p.0[3]);
        let b1 = 0.25 * (0.5 * abp + ab + 0.5 * apb + 0.25 * apbp);
        let b2 = 0.25 * (abp + 0.5 * ab + 0.25 * apb + 0.5 * apbp);
        let b3 = 0.25 * (0.25 * abp + 0.5 * ab + apb + 0.5 * apbp);
        let b4 = 0.25 * (0.5 * abp + 0.25 * ab + 0.5 * apb + apbp);
        assert!((qm_like_pair_part(&p, &std_quad()) - (b1 - b2 + b3 + b4)).abs() < 1e-15);
    }

    #[test]
    fn world_chsh_examples() {
        let c = world_chsh_report(WorldAssumption::Zero, &qm(), &std_quad()).unwrap();
        assert_eq!(c.verdict.upper, 8.0);
        assert!(c.verdict.satisfied);
        let d = world_chsh_report(WorldAssumption::QmLike, &qm(), &std_quad()).unwrap();
        assert!((d.verdict.upper - 32.0 / 9.0).abs() < 1e-12);
        assert!(d.verdict.satisfied);
        let b = world_chsh_report(WorldAssumption::AverageEqual, &qm(), &std_quad()).unwrap();
        assert_eq!(b.verdict.upper, 2.0);
        assert!(b.verdict.violated());
        assert!(b.lr_only.violated());
    }

    #[test]
    fn report_flags_match_values() {
        for w in WorldAssumption::ALL {
            let r = world_report(w, &qm(), &std_quad()).unwrap();
            let (lo, hi) = r.ch_bounds;
            assert_eq!(r.ch_violated, !(lo <= r.ch_value && r.ch_value <= hi));
            assert_eq!(r.chsh_violated, r.chsh_value > r.chsh_bound);
        }
    }

    #[test]
    fn tags_round_trip() {
        for w in WorldAssumption::ALL {
            assert_eq!(WorldAssumption::from_tag(w.tag()), Some(w));
        }
        assert_eq!(WorldAssumption::from_tag('d'), Some(WorldAssumption::QmLike));
        assert_eq!(WorldAssumption::from_tag('E'), None);
    }

    proptest! {
        #[test]
        fn world_b_reduces_to_usual_chsh(e in prop::array::uniform4(-1.0f64..=1.0)) {
            let data = CorrelationData::from_expectations(PerPair(e)).unwrap();
            let r = world_chsh_report(WorldAssumption::AverageEqual, &data, &std_quad()).unwrap();
            let s = chsh_s(&data).unwrap().value;
            prop_assert!((r.lr_only.value - 4.0 * s).abs() < 1e-12);
        }
    }
}
