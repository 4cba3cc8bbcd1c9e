//! First-principles checks of the classical bounds: the multilinear identity
//! behind CH, and exhaustive enumeration of deterministic local strategies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequalities::{ch_m_value, chsh_combination, ChshPairing};
use crate::lhv::{exact_time_averages, LocalModel};
use crate::model::{ASetting, BSetting, Outcome, PerPair, Schedule, SettingsPair, SettingsQuad};

/// `xy − xy′ + x′y + x′y′ − Xy − Yx′`.
pub fn eq4_form(x: f64, x_prime: f64, y: f64, y_prime: f64, big_x: f64, big_y: f64) -> f64 {
    x * y - x * y_prime + x_prime * y + x_prime * y_prime - big_x * y - big_y * x_prime
}

/// Distance of `v` outside `[−1, 0]`, zero inside.
fn excursion(v: f64) -> f64 {
    (-1.0 - v).max(v).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub samples: usize,
    pub worst_excursion: f64,
    pub min_value: f64,
    pub max_value: f64,
}

/// Evaluates the form with `X = Y = 1` on all 16 corners of `[0,1]⁴` and on
/// `n_samples` uniform random points.
pub fn verify_eq4_identity(n_samples: usize, seed: u64) -> Result<IdentityCheck> {
    if n_samples == 0 {
        return Err(Error::NoSamples);
    }
    let mut check = IdentityCheck {
        samples: 0,
        worst_excursion: 0.0,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
    };
    let mut visit = |v: f64| {
        check.samples += 1;
        check.worst_excursion = check.worst_excursion.max(excursion(v));
        check.min_value = check.min_value.min(v);
        check.max_value = check.max_value.max(v);
    };
    for bits in 0u8..16 {
        let c = |k: u8| f64::from((bits >> k) & 1);
        visit(eq4_form(c(0), c(1), c(2), c(3), 1.0, 1.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let [x, xp, y, yp]: [f64; 4] = rng.gen();
        visit(eq4_form(x, xp, y, yp, 1.0, 1.0));
    }
    Ok(check)
}

/// Outcomes fixed in advance for both settings at each station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    /// Outcomes at `α`, `α′`.
    pub a_out: [Outcome; 2],
    /// Outcomes at `β`, `β′`.
    pub b_out: [Outcome; 2],
}

impl DeterministicStrategy {
    pub fn all() -> impl Iterator<Item = DeterministicStrategy> {
        (0u8..16).map(|bits| {
            let o = |k: u8| Outcome::from_detection((bits >> k) & 1 == 1);
            DeterministicStrategy {
                a_out: [o(0), o(1)],
                b_out: [o(2), o(3)],
            }
        })
    }

    pub fn a(&self, s: ASetting) -> Outcome {
        self.a_out[s.index()]
    }

    pub fn b(&self, s: BSetting) -> Outcome {
        self.b_out[s.index()]
    }

    pub fn expectation(&self, pair: SettingsPair) -> f64 {
        f64::from(self.a(pair.a).value() * self.b(pair.b).value())
    }

    /// A `+1` outcome is a detection; a coincidence needs both.
    pub fn pair_detection(&self, pair: SettingsPair) -> f64 {
        f64::from(u8::from(self.a(pair.a) == Outcome::Plus && self.b(pair.b) == Outcome::Plus))
    }

    /// `M` for this strategy: the CH pair combination minus the singles
    /// `P_B(β)` and `P_A(α′)`.
    pub fn m_value(&self) -> f64 {
        let d = |p| self.pair_detection(p);
        let single = |o: Outcome| f64::from(u8::from(o == Outcome::Plus));
        d(SettingsPair::ALPHA_BETA) - d(SettingsPair::ALPHA_BETA_PRIME)
            + d(SettingsPair::ALPHA_PRIME_BETA)
            + d(SettingsPair::ALPHA_PRIME_BETA_PRIME)
            - single(self.b(BSetting::Beta))
            - single(self.a(ASetting::AlphaPrime))
    }

    pub fn ch_pair_sum(&self) -> f64 {
        let d = |p| self.pair_detection(p);
        d(SettingsPair::ALPHA_BETA) - d(SettingsPair::ALPHA_BETA_PRIME)
            + d(SettingsPair::ALPHA_PRIME_BETA)
            + d(SettingsPair::ALPHA_PRIME_BETA_PRIME)
    }

    pub fn expectations(&self) -> PerPair<f64> {
        PerPair::from_fn(|p| self.expectation(p))
    }

    /// `E(α,β) − E(α,β′) + E(α′,β) + E(α′,β′)`.
    pub fn signed_chsh(&self) -> f64 {
        let e = self.expectations();
        e[SettingsPair::ALPHA_BETA] - e[SettingsPair::ALPHA_BETA_PRIME]
            + e[SettingsPair::ALPHA_PRIME_BETA]
            + e[SettingsPair::ALPHA_PRIME_BETA_PRIME]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(
            Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, v| Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyExtremes {
    pub strategies: usize,
    /// `|E(α,β) − E(α,β′)| + |E(α′,β) + E(α′,β′)|`
    pub chsh_abs: Range,
    pub chsh_signed: Range,
    /// `M`, the pair combination minus both singles.
    pub m: Range,
    /// `M + 1`: the CH value once the singles take their unpolarized value.
    pub ch_normalized: Range,
    /// Pair combination alone, before any condition on the singles.
    pub ch_pair_sum: Range,
}

/// Extremes of the CH and CHSH combinations over all 16 deterministic
/// strategies. Strategy payoffs depend only on outcome assignments, so the
/// quad does not enter.
pub fn enumerate_strategies(_quad: &SettingsQuad) -> StrategyExtremes {
    let all: Vec<_> = DeterministicStrategy::all().collect();
    StrategyExtremes {
        strategies: all.len(),
        chsh_abs: Range::of(all.iter().map(|s| chsh_combination(&s.expectations(), ChshPairing::Standard))),
        chsh_signed: Range::of(all.iter().map(DeterministicStrategy::signed_chsh)),
        m: Range::of(all.iter().map(DeterministicStrategy::m_value)),
        ch_normalized: Range::of(all.iter().map(|s| s.m_value() + 1.0)),
        ch_pair_sum: Range::of(all.iter().map(DeterministicStrategy::ch_pair_sum)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureReport {
    /// Full-interval CH pair combination.
    pub ch_sum: f64,
    pub m_value: f64,
    pub chsh_s: f64,
    /// Largest distance by which `M` or `S` leaves the strategy hull.
    pub max_excursion: f64,
}

/// Checks that a static model's full-interval CH and CHSH values lie inside
/// the range spanned by the deterministic strategies.
pub fn mixture_consistency<M: LocalModel>(model: &M, schedule: &Schedule, n_grid: usize) -> Result<MixtureReport> {
    if model.is_time_dependent() {
        return Err(Error::TimeDependentModel(model.name().to_string()));
    }
    let hull = enumerate_strategies(schedule.quad());
    let data = exact_time_averages(model, schedule, n_grid)?.full_interval_data();
    let m_value = ch_m_value(&data)?;
    let e = data.expectations()?;
    let chsh_s = chsh_combination(&e, ChshPairing::Standard);
    let p = data.pair_probs()?;
    let ch_sum = p[SettingsPair::ALPHA_BETA] - p[SettingsPair::ALPHA_BETA_PRIME]
        + p[SettingsPair::ALPHA_PRIME_BETA]
        + p[SettingsPair::ALPHA_PRIME_BETA_PRIME];
    let outside = |v: f64, r: Range| (r.min - v).max(v - r.max).max(0.0);
    Ok(MixtureReport {
        ch_sum,
        m_value,
        chsh_s,
        max_excursion: outside(m_value, hull.m).max(outside(chsh_s, hull.chsh_signed)),
    })
}
