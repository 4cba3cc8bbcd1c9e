//! CH and CHSH evaluators with explicit bound verdicts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CorrelationData, PerPair, SettingsPair, RANGE_SLACK};

/// Singles must equal ½ within this for analytic data before the CH sum applies.
pub const ANALYTIC_SINGLES_TOL: f64 = 1e-9;

/// Singles tolerance for Monte Carlo data, in binomial standard errors.
pub const MC_SINGLES_SIGMAS: f64 = 5.0;

pub const CHSH_BOUND: f64 = 2.0;

/// Bound of the counterfactual-augmented CHSH combination.
pub const LR_ONLY_CHSH_BOUND: f64 = 8.0;

/// A value checked against a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundVerdict {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub satisfied: bool,
    /// Signed distance to the nearest bound; negative when violated.
    pub margin: f64,
}

impl BoundVerdict {
    pub fn new(value: f64, lower: f64, upper: f64) -> Self {
        BoundVerdict {
            value,
            lower,
            upper,
            satisfied: lower <= value && value <= upper,
            margin: (value - lower).min(upper - value),
        }
    }

    pub fn violated(&self) -> bool {
        !self.satisfied
    }
}

/// Which printed pairing of the CHSH terms to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChshPairing {
    /// `|E(α,β) − E(α,β′)| + |E(α′,β) + E(α′,β′)|`
    #[default]
    Standard,
    /// `|E(α,β) − E(α′,β′)| + |E(α′,β′) + E(α′,β)|`, kept for comparison.
    AsPrinted,
}

fn ch_pair_part(p: &PerPair<f64>) -> f64 {
    p[SettingsPair::ALPHA_BETA] - p[SettingsPair::ALPHA_BETA_PRIME]
        + p[SettingsPair::ALPHA_PRIME_BETA]
        + p[SettingsPair::ALPHA_PRIME_BETA_PRIME]
}

/// `M = P(α,β) − P(α,β′) + P(α′,β) + P(α′,β′) − P_B(β) − P_A(α′)`, with
/// classical range `[−1, 0]`.
pub fn ch_m_value(data: &CorrelationData) -> Result<f64> {
    let p = data.pair_probs()?;
    let s = data.singles()?;
    Ok(ch_pair_part(&p) - s.b - s.a_prime)
}

pub fn ch_m(data: &CorrelationData) -> Result<BoundVerdict> {
    Ok(BoundVerdict::new(ch_m_value(data)?, -1.0, 0.0))
}

/// The CH sum against `[0, 1]`. Requires unpolarized singles.
pub fn ch_sum(data: &CorrelationData) -> Result<BoundVerdict> {
    ch_sum_with_tolerance(data, ANALYTIC_SINGLES_TOL)
}

pub fn ch_sum_with_tolerance(data: &CorrelationData, singles_tol: f64) -> Result<BoundVerdict> {
    let s = data.singles()?;
    for (name, value) in [("P_A(α′)", s.a_prime), ("P_B(β)", s.b)] {
        if (value - 0.5).abs() > singles_tol {
            return Err(Error::PolarizedSingles {
                name,
                value,
                tol: singles_tol,
            });
        }
    }
    Ok(BoundVerdict::new(ch_pair_part(&data.pair_probs()?), 0.0, 1.0))
}

/// `|E(α,β) − E(α,β′)| + |E(α′,β) + E(α′,β′)|`.
pub fn chsh_combination(e: &PerPair<f64>, pairing: ChshPairing) -> f64 {
    use SettingsPair as P;
    match pairing {
        ChshPairing::Standard => {
            (e[P::ALPHA_BETA] - e[P::ALPHA_BETA_PRIME]).abs()
                + (e[P::ALPHA_PRIME_BETA] + e[P::ALPHA_PRIME_BETA_PRIME]).abs()
        }
        ChshPairing::AsPrinted => {
            (e[P::ALPHA_BETA] - e[P::ALPHA_PRIME_BETA_PRIME]).abs()
                + (e[P::ALPHA_PRIME_BETA_PRIME] + e[P::ALPHA_PRIME_BETA]).abs()
        }
    }
}

pub fn chsh_s(data: &CorrelationData) -> Result<BoundVerdict> {
    chsh_s_with(data, ChshPairing::Standard)
}

pub fn chsh_s_with(data: &CorrelationData, pairing: ChshPairing) -> Result<BoundVerdict> {
    let e = data.expectations()?;
    Ok(BoundVerdict::new(chsh_combination(&e, pairing), 0.0, CHSH_BOUND))
}

/// The CHSH combination with counterfactual expectations added in, which
/// follows from local realism alone:
///
/// `|E*(α,β) + E(α,β) − E(α,β′) − E*(α,β′)| + |E(α′,β′) + E*(α′,β′) + E(α′,β) + E*(α′,β)| ≤ 8`
///
/// Each counterfactual `E*` sums three quarter averages and so lies in `[−3, 3]`.
pub fn lr_only_chsh(factual: &PerPair<f64>, counterfactual: &PerPair<f64>) -> Result<BoundVerdict> {
    use SettingsPair as P;
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
    for (_, &e) in counterfactual.iter() {
        if !(e.is_finite() && e.abs() <= 3.0 + RANGE_SLACK) {
            return Err(Error::OutOfRange {
                what: "counterfactual expectation",
                value: e,
                lo: -3.0,
                hi: 3.0,
            });
        }
    }
    let (e, c) = (factual, counterfactual);
    let value = (c[P::ALPHA_BETA] + e[P::ALPHA_BETA] - e[P::ALPHA_BETA_PRIME] - c[P::ALPHA_BETA_PRIME]).abs()
        + (e[P::ALPHA_PRIME_BETA_PRIME] + c[P::ALPHA_PRIME_BETA_PRIME] + e[P::ALPHA_PRIME_BETA] + c[P::ALPHA_PRIME_BETA])
            .abs();
    Ok(BoundVerdict::new(value, 0.0, LR_ONLY_CHSH_BOUND))
}
