//! Deterministic evaluation of every factual and counterfactual time average
//! of a fully specified model.
//!
//! At each emission time the λ-integral is taken by a composite midpoint rule
//! over the model's cells; the time integral over each quarter uses a
//! composite midpoint rule too. Both are refined by step halving until two
//! successive levels agree, and the finer level is kept as-is (no
//! extrapolation), so every reported average is a convex combination of the
//! sampled instantaneous values.

use rayon::prelude::*;
use serde::Serialize;

use super::LocalModel;
use crate::error::{Error, Result};
use crate::model::{ASetting, BSetting, CorrelationData, PerPair, Schedule, SettingsPair, Singles};

const N_QUANTITIES: usize = 12;
type Instant = [f64; N_QUANTITIES];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Midpoint cells per quarter (time) and over λ-space at the first level.
    pub initial_cells: usize,
    /// Acceptance threshold on `|fine − coarse| / max(1, |fine|)`.
    pub rel_tol: f64,
    pub max_halvings: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            initial_cells: 16,
            rel_tol: 1e-9,
            max_halvings: 16,
        }
    }
}

impl QuadratureConfig {
    pub fn with_cells(initial_cells: usize) -> Self {
        QuadratureConfig {
            initial_cells,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.initial_cells == 0 {
            return Err(Error::InvalidQuadrature("initial cell count must be positive"));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidQuadrature("tolerance must be positive"));
        }
        Ok(())
    }
}

/// A time-dependent quantity whose averages are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// Double-detection probability `P_AB`.
    PairProb(SettingsPair),
    /// Product expectation `E = ⟨A·B⟩`.
    Expectation(SettingsPair),
    SingleA(ASetting),
    SingleB(BSetting),
}

impl Quantity {
    /// The six terms of the CH combination.
    pub const CH_TERMS: [Quantity; 6] = [
        Quantity::PairProb(SettingsPair::ALPHA_BETA),
        Quantity::PairProb(SettingsPair::ALPHA_BETA_PRIME),
        Quantity::PairProb(SettingsPair::ALPHA_PRIME_BETA),
        Quantity::PairProb(SettingsPair::ALPHA_PRIME_BETA_PRIME),
        Quantity::SingleB(BSetting::Beta),
        Quantity::SingleA(ASetting::AlphaPrime),
    ];

    /// The four expectations of the CHSH combination.
    pub const CHSH_TERMS: [Quantity; 4] = [
        Quantity::Expectation(SettingsPair::ALPHA_BETA),
        Quantity::Expectation(SettingsPair::ALPHA_BETA_PRIME),
        Quantity::Expectation(SettingsPair::ALPHA_PRIME_BETA),
        Quantity::Expectation(SettingsPair::ALPHA_PRIME_BETA_PRIME),
    ];

    fn slot(self) -> usize {
        match self {
            Quantity::PairProb(p) => p.index(),
            Quantity::Expectation(p) => 4 + p.index(),
            Quantity::SingleA(s) => 8 + s.index(),
            Quantity::SingleB(s) => 10 + s.index(),
        }
    }

    pub fn label(self) -> String {
        match self {
            Quantity::PairProb(p) => format!("P_AB[{}]", p.label()),
            Quantity::Expectation(p) => format!("E[{}]", p.label()),
            Quantity::SingleA(ASetting::Alpha) => "P_A[alpha]".into(),
            Quantity::SingleA(ASetting::AlphaPrime) => "P_A[alpha_prime]".into(),
            Quantity::SingleB(BSetting::Beta) => "P_B[beta]".into(),
            Quantity::SingleB(BSetting::BetaPrime) => "P_B[beta_prime]".into(),
        }
    }

    /// Quarters during which this quantity is actually measured.
    pub fn factual_quarters(self, schedule: &Schedule) -> Vec<usize> {
        match self {
            Quantity::PairProb(p) | Quantity::Expectation(p) => vec![schedule.quarter_of(p)],
            Quantity::SingleA(s) => schedule.quarters_with_a(s).to_vec(),
            Quantity::SingleB(s) => schedule.quarters_with_b(s).to_vec(),
        }
    }

    pub fn counterfactual_quarters(self, schedule: &Schedule) -> Vec<usize> {
        let factual = self.factual_quarters(schedule);
        (0..4).filter(|q| !factual.contains(q)).collect()
    }
}

/// Averages of one quantity, under every normalization in use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermAverages {
    pub term: String,
    /// Average over the quarters where the quantity is measured.
    pub factual: f64,
    /// `(1/T)·∫` over the measured quarters.
    pub factual_t_weighted: f64,
    /// Average over the complementary quarters, where it is counterfactual.
    pub counterfactual: f64,
    /// `(1/T)·∫` over the complementary quarters.
    pub counterfactual_t_weighted: f64,
    /// `(1/T)·∫₀ᵀ`, the full-interval average.
    pub full_interval: f64,
    /// `max − min` of the λ-integrated value over the time grid.
    pub pointwise_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeAverages {
    schedule: Schedule,
    quarters: [Instant; 4],
    spread: Instant,
    time_cells: usize,
    halvings: u32,
    disagreement: f64,
}

impl TimeAverages {
    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Average of `q` over quarter `quarter`, normalized by `ΔT`.
    pub fn quarter_average(&self, quarter: usize, q: Quantity) -> f64 {
        self.quarters[quarter][q.slot()]
    }

    fn mean_over(&self, quarters: &[usize], q: Quantity) -> f64 {
        quarters.iter().map(|&k| self.quarter_average(k, q)).sum::<f64>() / quarters.len() as f64
    }

    pub fn factual(&self, q: Quantity) -> f64 {
        self.mean_over(&q.factual_quarters(&self.schedule), q)
    }

    pub fn counterfactual(&self, q: Quantity) -> f64 {
        self.mean_over(&q.counterfactual_quarters(&self.schedule), q)
    }

    pub fn full_interval(&self, q: Quantity) -> f64 {
        self.mean_over(&[0, 1, 2, 3], q)
    }

    pub fn pointwise_spread(&self, q: Quantity) -> f64 {
        self.spread[q.slot()]
    }

    /// Counterfactual expectation: the sum of `E` over the three quarters in
    /// which the settings pair is not active, each normalized by `ΔT`.
    /// Ranges over `[−3, 3]`.
    pub fn counterfactual_expectation(&self, pair: SettingsPair) -> f64 {
        let q = Quantity::Expectation(pair);
        q.counterfactual_quarters(&self.schedule)
            .iter()
            .map(|&k| self.quarter_average(k, q))
            .sum()
    }

    pub fn term(&self, q: Quantity) -> TermAverages {
        let factual = self.factual(q);
        let counterfactual = self.counterfactual(q);
        let n_fact = q.factual_quarters(&self.schedule).len() as f64;
        TermAverages {
            term: q.label(),
            factual,
            factual_t_weighted: factual * n_fact / 4.0,
            counterfactual,
            counterfactual_t_weighted: counterfactual * (4.0 - n_fact) / 4.0,
            full_interval: self.full_interval(q),
            pointwise_spread: self.pointwise_spread(q),
        }
    }

    /// What the time-sequenced measurement records (per-quarter pairs,
    /// per-half singles).
    pub fn factual_data(&self) -> CorrelationData {
        self.data_with(|q| self.factual(q))
    }

    /// Averages over the whole measuring time, as the textbook derivation
    /// assumes.
    pub fn full_interval_data(&self) -> CorrelationData {
        self.data_with(|q| self.full_interval(q))
    }

    fn data_with(&self, f: impl Fn(Quantity) -> f64) -> CorrelationData {
        let pair_probs = PerPair::from_fn(|p| f(Quantity::PairProb(p)));
        let expectations = PerPair::from_fn(|p| f(Quantity::Expectation(p)));
        let singles = Singles {
            a_prime: f(Quantity::SingleA(ASetting::AlphaPrime)),
            b: f(Quantity::SingleB(BSetting::Beta)),
        };
        CorrelationData::new(pair_probs, singles, expectations).expect("model averages of bounded responses")
    }

    pub fn time_cells(&self) -> usize {
        self.time_cells
    }

    pub fn halvings(&self) -> u32 {
        self.halvings
    }

    /// Largest step-halving disagreement at the accepted level.
    pub fn disagreement(&self) -> f64 {
        self.disagreement
    }
}

fn max_disagreement(coarse: &[f64], fine: &[f64]) -> f64 {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| (f - c).abs() / f.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn lambda_integral<M: LocalModel>(model: &M, schedule: &Schedule, t: f64, cells: usize) -> Instant {
    let quad = schedule.quad();
    let a_angles = [quad.alpha, quad.alpha_prime];
    let b_angles = [quad.beta, quad.beta_prime];
    let mut acc = [0.0; N_QUANTITIES];
    for (lambda, measure) in model.lambda_cells(t, cells) {
        let w = model.density(&lambda, t) * measure;
        if w == 0.0 {
            continue;
        }
        let ra = a_angles.map(|a| model.response_a(a, &lambda, t));
        let rb = b_angles.map(|b| model.response_b(b, &lambda, t));
        for pair in SettingsPair::ALL {
            let (pa, pb) = (ra[pair.a.index()], rb[pair.b.index()]);
            acc[pair.index()] += w * pa * pb;
            acc[4 + pair.index()] += w * (2.0 * pa - 1.0) * (2.0 * pb - 1.0);
        }
        for i in 0..2 {
            acc[8 + i] += w * ra[i];
            acc[10 + i] += w * rb[i];
        }
    }
    acc
}

fn instant<M: LocalModel>(model: &M, schedule: &Schedule, t: f64, cfg: &QuadratureConfig) -> Result<Instant> {
    let mut cells = cfg.initial_cells;
    let mut coarse = lambda_integral(model, schedule, t, cells);
    for halving in 1..=cfg.max_halvings {
        cells *= 2;
        let fine = lambda_integral(model, schedule, t, cells);
        let d = max_disagreement(&coarse, &fine);
        if d <= cfg.rel_tol {
            return Ok(fine);
        }
        if halving == cfg.max_halvings {
            return Err(Error::NonConvergent {
                disagreement: d,
                tol: cfg.rel_tol,
                halvings: halving,
            });
        }
        coarse = fine;
    }
    Err(Error::InvalidQuadrature("at least one halving is required"))
}

struct Level {
    quarters: [Instant; 4],
    spread: Instant,
}

fn time_level<M: LocalModel>(
    model: &M,
    schedule: &Schedule,
    cells: usize,
    cfg: &QuadratureConfig,
) -> Result<Level> {
    let dt = schedule.quarter_duration();
    let h = dt / cells as f64;
    let samples = (0..4 * cells)
        .into_par_iter()
        .map(|i| {
            let (q, j) = (i / cells, i % cells);
            let t = q as f64 * dt + (j as f64 + 0.5) * h;
            instant(model, schedule, t, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut quarters = [[0.0; N_QUANTITIES]; 4];
    let mut lo = [f64::INFINITY; N_QUANTITIES];
    let mut hi = [f64::NEG_INFINITY; N_QUANTITIES];
    for (i, s) in samples.iter().enumerate() {
        let q = i / cells;
        for k in 0..N_QUANTITIES {
            quarters[q][k] += s[k];
            lo[k] = lo[k].min(s[k]);
            hi[k] = hi[k].max(s[k]);
        }
    }
    for q in &mut quarters {
        for v in q.iter_mut() {
            *v /= cells as f64;
        }
    }
    let mut spread = [0.0; N_QUANTITIES];
    for k in 0..N_QUANTITIES {
        spread[k] = hi[k] - lo[k];
    }
    Ok(Level { quarters, spread })
}

pub fn exact_time_averages<M: LocalModel>(model: &M, schedule: &Schedule, initial_cells: usize) -> Result<TimeAverages> {
    exact_time_averages_with(model, schedule, &QuadratureConfig::with_cells(initial_cells))
}

pub fn exact_time_averages_with<M: LocalModel>(
    model: &M,
    schedule: &Schedule,
    cfg: &QuadratureConfig,
) -> Result<TimeAverages> {
    cfg.validate()?;
    let mut cells = cfg.initial_cells;
    let mut coarse = time_level(model, schedule, cells, cfg)?;
    let mut last = f64::INFINITY;
    for halving in 1..=cfg.max_halvings {
        cells *= 2;
        let fine = time_level(model, schedule, cells, cfg)?;
        let d = max_disagreement(coarse.quarters.as_flattened(), fine.quarters.as_flattened());
        if d <= cfg.rel_tol {
            return Ok(TimeAverages {
                schedule: schedule.clone(),
                quarters: fine.quarters,
                spread: fine.spread,
                time_cells: cells,
                halvings: halving,
                disagreement: d,
            });
        }
        last = d;
        coarse = fine;
    }
    Err(Error::NonConvergent {
        disagreement: last,
        tol: cfg.rel_tol,
        halvings: cfg.max_halvings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::{ClockModel, ConstantModel, MalusModel};
    use crate::model::SettingsQuad;
    use std::f64::consts::PI;

    fn schedule() -> Schedule {
        Schedule::new(1.0, SettingsQuad::standard()).unwrap()
    }

    #[test]
    fn static_model_full_interval_equals_half_average() {
        let s = schedule();
        let r = exact_time_averages(&MalusModel, &s, 8).unwrap();
        let q = Quantity::SingleA(ASetting::AlphaPrime);
        assert!((r.full_interval(q) - r.factual(q)).abs() < 1e-15);
        assert!((r.factual(q) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_half_second_term_is_quarter() {
        let r = exact_time_averages(&ConstantModel::half(), &schedule(), 4).unwrap();
        let t = r.term(Quantity::SingleA(ASetting::AlphaPrime));
        assert_eq!(t.factual_t_weighted, 0.25);
        assert_eq!(t.factual, 0.5);
        assert_eq!(t.counterfactual_t_weighted, 0.25);
        assert_eq!(t.pointwise_spread, 0.0);
    }

    #[test]
    fn malus_pair_probability_closed_form() {
        // (1/π)∫cos²(a−λ)cos²(b−λ)dλ = 1/4 + cos(2(a−b))/8
        let s = schedule();
        let r = exact_time_averages(&MalusModel, &s, 8).unwrap();
        for pair in SettingsPair::ALL {
            let (a, b) = s.quad().angles(pair);
            let d = 2.0 * (a.radians() - b.radians());
            assert!((r.factual(Quantity::PairProb(pair)) - (0.25 + d.cos() / 8.0)).abs() < 1e-12);
            assert!((r.factual(Quantity::Expectation(pair)) - 0.5 * d.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn clock_quarter_averages_closed_form() {
        // Over quarter k the phase 4πt/T sweeps [kπ, (k+1)π], so the mean of
        // cos(2θ − phase) is 2(−1)^k sin(2θ)/π.
        let s = schedule();
        let r = exact_time_averages(&ClockModel::locked_to(&s), &s, 16).unwrap();
        for k in 0..4 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for setting in [ASetting::Alpha, ASetting::AlphaPrime] {
                let th = s.quad().angle_a(setting).radians();
                let expect = 0.5 * (1.0 + sign * 2.0 * (2.0 * th).sin() / PI);
                assert!((r.quarter_average(k, Quantity::SingleA(setting)) - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn clock_factual_and_counterfactual_differ() {
        let s = schedule();
        let r = exact_time_averages(&ClockModel::locked_to(&s), &s, 16).unwrap();
        let q = Quantity::PairProb(SettingsPair::ALPHA_PRIME_BETA);
        let gap = (r.factual(q) - r.counterfactual(q)).abs();
        let expect = 2.0 / (3.0 * PI) * (1.0 + 0.5f64.sqrt());
        assert!((gap - expect).abs() < 1e-8, "gap {gap} vs {expect}");
    }

    #[test]
    fn counterfactual_expectation_sum_decomposition() {
        let s = schedule();
        let r = exact_time_averages(&ClockModel::locked_to(&s), &s, 16).unwrap();
        for pair in SettingsPair::ALL {
            let q = Quantity::Expectation(pair);
            let e = r.factual(q) + r.counterfactual_expectation(pair);
            assert!((e - 4.0 * r.full_interval(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_budget_reports_nonconvergence() {
        let s = schedule();
        let cfg = QuadratureConfig {
            initial_cells: 1,
            rel_tol: 1e-12,
            max_halvings: 2,
        };
        let err = exact_time_averages_with(&ClockModel::locked_to(&s), &s, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergent { halvings: 2, .. }));
        assert!(exact_time_averages(&MalusModel, &s, 0).is_err());
    }
}
