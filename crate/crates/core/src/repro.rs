//! The reproduction checklist: every headline number and bound, checked at a
//! pinned tolerance.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::admissibility::{check_model, Verdict, DEFAULT_TOLERANCE};
use crate::inequalities::{ch_sum, chsh_combination, chsh_s, lr_only_chsh, ChshPairing};
use crate::lhv::{
    exact_time_averages, simulate_run_with, tally, ClockModel, ConstantModel, LocalModel, MalusModel,
    Quantity, SimulationConfig, TimeAverages,
};
use crate::model::{PerPair, Schedule, SettingsPair, SettingsQuad};
use crate::oracle::{enumerate_strategies, mixture_consistency, verify_eq4_identity};
use crate::qm::qm_correlation_data;
use crate::worlds::{world_ch_report, world_chsh_report, WorldAssumption};
use crate::Result;

pub const EXACT_TOL: f64 = 1e-12;
pub const WORLD_C_TOL: f64 = 1e-4;
pub const WORLD_D_PAIR_TOL: f64 = 5e-4;
pub const MC_SIGMAS: f64 = 5.0;
pub const MC_PAIRS: usize = 1_000_000;
pub const SOUNDNESS_TOL: f64 = 1e-9;
pub const STATIC_GAP_TOL: f64 = 1e-9;
pub const CLOCK_MIN_GAP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

fn timed(id: u8, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

pub fn qm_ch_sum() -> CriterionOutcome {
    timed(1, "quantum CH sum at the standard quad", || {
        let v = ch_sum(&qm_correlation_data(&SettingsQuad::standard()))?;
        let expect = 0.5 * (1.0 + 2f64.sqrt());
        let ok = (v.value - expect).abs() <= EXACT_TOL && v.violated();
        Ok((ok, format!("CH = {:.15} (expected {expect:.15}), bound [0, 1] violated", v.value)))
    })
}

pub fn qm_chsh() -> CriterionOutcome {
    timed(2, "quantum CHSH value at the standard quad", || {
        let v = chsh_s(&qm_correlation_data(&SettingsQuad::standard()))?;
        let expect = 2.0 * 2f64.sqrt();
        let ok = (v.value - expect).abs() <= EXACT_TOL && v.violated();
        Ok((ok, format!("S = {:.15} (expected 2√2 = {expect:.15})", v.value)))
    })
}

pub fn strategy_oracle() -> CriterionOutcome {
    timed(3, "deterministic strategies and the CH identity", || {
        let x = enumerate_strategies(&SettingsQuad::standard());
        let id = verify_eq4_identity(1_000_000, 2013)?;
        let ok = x.strategies == 16
            && x.chsh_abs.max == 2.0
            && x.ch_normalized.min == 0.0
            && x.ch_normalized.max == 1.0
            && id.worst_excursion <= EXACT_TOL
            && id.min_value == -1.0
            && id.max_value == 0.0;
        Ok((
            ok,
            format!(
                "max S = {}, CH extremes [{}, {}], identity worst excursion {:e} over {} points",
                x.chsh_abs.max, x.ch_normalized.min, x.ch_normalized.max, id.worst_excursion, id.samples
            ),
        ))
    })
}

pub fn world_b_reduction() -> CriterionOutcome {
    timed(4, "world B reduces to the usual CHSH bound", || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let e = PerPair(std::array::from_fn(|_| rng.gen_range(-1.0..=1.0)));
            let lr = lr_only_chsh(&e, &e.map(|x| 3.0 * x))?;
            worst = worst.max((lr.value - 4.0 * chsh_combination(&e, ChshPairing::Standard)).abs());
        }
        Ok((worst <= EXACT_TOL, format!("max |LR(E, 3E) − 4S| = {worst:e} over 1000 quadruples")))
    })
}

pub fn world_c() -> CriterionOutcome {
    timed(5, "world C keeps quantum data inside both bounds", || {
        let quad = SettingsQuad::standard();
        let data = qm_correlation_data(&quad);
        let ch = world_ch_report(WorldAssumption::Zero, &data, &quad)?;
        let chsh = world_chsh_report(WorldAssumption::Zero, &data, &quad)?;
        let ok = (ch.verdict.value - (-0.1982)).abs() <= WORLD_C_TOL
            && ch.verdict.satisfied
            && chsh.verdict.upper == 8.0
            && chsh.verdict.satisfied;
        Ok((
            ok,
            format!(
                "CH = {:.4} in [-1, 0]; S = {:.3} ≤ {}",
                ch.verdict.value, chsh.verdict.value, chsh.verdict.upper
            ),
        ))
    })
}

pub fn world_d() -> CriterionOutcome {
    timed(6, "world D weighted CH and CHSH bound", || {
        let quad = SettingsQuad::standard();
        let data = qm_correlation_data(&quad);
        let ch = world_ch_report(WorldAssumption::QmLike, &data, &quad)?;
        let chsh = world_chsh_report(WorldAssumption::QmLike, &data, &quad)?;
        let ok = (ch.pair_part - 0.458).abs() <= WORLD_D_PAIR_TOL
            && (chsh.verdict.upper - 32.0 / 9.0).abs() <= EXACT_TOL
            && chsh.verdict.satisfied;
        Ok((
            ok,
            format!(
                "weighted pair sum = {:.4}; CHSH bound = {:.12}; S = {:.3} not violating",
                ch.pair_part, chsh.verdict.upper, chsh.verdict.value
            ),
        ))
    })
}

/// Largest deviation of the Monte Carlo estimates from the exact factual
/// averages, in units of the binomial standard error at the exact value.
pub fn monte_carlo_z<M: LocalModel>(model: &M, schedule: &Schedule, exact: &TimeAverages, config: &SimulationConfig) -> Result<f64> {
    let counts = tally(&simulate_run_with(model, schedule, config)?);
    let mut worst = 0.0f64;
    let mut check = |estimate: f64, p_exact: f64, var: f64, n: u64| {
        let se = (var / n as f64).sqrt();
        let dev = (estimate - p_exact).abs();
        let z = if se == 0.0 {
            if dev == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            dev / se
        };
        worst = worst.max(z);
    };
    for pair in SettingsPair::ALL {
        let c = counts[pair];
        let n = c.total();
        let p = exact.factual(Quantity::PairProb(pair));
        check(c.pp as f64 / n as f64, p, p * (1.0 - p), n);
        let e = exact.factual(Quantity::Expectation(pair));
        check(c.signed_sum() as f64 / n as f64, e, 1.0 - e * e, n);
    }
    for q in [
        Quantity::SingleA(crate::ASetting::Alpha),
        Quantity::SingleA(crate::ASetting::AlphaPrime),
        Quantity::SingleB(crate::BSetting::Beta),
        Quantity::SingleB(crate::BSetting::BetaPrime),
    ] {
        let (k, n) = SettingsPair::ALL.iter().fold((0u64, 0u64), |(k, n), &pair| match q {
            Quantity::SingleA(s) if pair.a == s => (k + counts[pair].a_detections(), n + counts[pair].total()),
            Quantity::SingleB(s) if pair.b == s => (k + counts[pair].b_detections(), n + counts[pair].total()),
            _ => (k, n),
        });
        let p = exact.factual(q);
        check(k as f64 / n as f64, p, p * (1.0 - p), n);
    }
    Ok(worst)
}

pub fn monte_carlo_fidelity() -> CriterionOutcome {
    timed(7, "Monte Carlo agrees with exact time averages", || {
        let schedule = Schedule::new(1.0, SettingsQuad::standard())?;
        let clock = ClockModel::locked_to(&schedule);
        let mut config = SimulationConfig::new(MC_PAIRS, 42);
        let z_malus = monte_carlo_z(&MalusModel, &schedule, &exact_time_averages(&MalusModel, &schedule, 16)?, &config)?;
        let z_clock = monte_carlo_z(&clock, &schedule, &exact_time_averages(&clock, &schedule, 16)?, &config)?;

        config.workers = Some(1);
        let one = simulate_run_with(&MalusModel, &schedule, &config)?;
        config.workers = Some(4);
        let four = simulate_run_with(&MalusModel, &schedule, &config)?;
        let identical = one == four;

        let ok = z_malus <= MC_SIGMAS && z_clock <= MC_SIGMAS && identical;
        Ok((
            ok,
            format!("max |z| malus {z_malus:.2}, clock {z_clock:.2}; 1 vs 4 workers identical: {identical}"),
        ))
    })
}

pub fn lhv_soundness() -> CriterionOutcome {
    timed(8, "static local models satisfy CH and CHSH", || {
        let schedule = Schedule::new(1.0, SettingsQuad::standard())?;
        let reports = [
            ("malus", mixture_consistency(&MalusModel, &schedule, 16)?),
            ("constant", mixture_consistency(&ConstantModel::half(), &schedule, 16)?),
            ("flat clock", mixture_consistency(&ClockModel::new(0.5, 0.0, 0.0)?, &schedule, 16)?),
        ];
        let ok = reports.iter().all(|(_, r)| {
            r.ch_sum >= -SOUNDNESS_TOL && r.ch_sum <= 1.0 + SOUNDNESS_TOL && r.chsh_s.abs() <= 2.0 + SOUNDNESS_TOL
        });
        let detail = reports
            .iter()
            .map(|(n, r)| format!("{n}: CH {:.4}, S {:.4}", r.ch_sum, r.chsh_s))
            .collect::<Vec<_>>()
            .join("; ");
        Ok((ok, detail))
    })
}

/// Gap between the factual quarter average of a pair probability and its
/// average over the other three quarters, for the full-depth clock with
/// period `T/2`: `(2/3π)·|sin 2a + sin 2b|`.
pub fn clock_pair_gap_closed_form(a: f64, b: f64) -> f64 {
    2.0 / (3.0 * PI) * ((2.0 * a).sin() + (2.0 * b).sin()).abs()
}

pub fn admissibility() -> CriterionOutcome {
    timed(9, "admissibility verdicts", || {
        let schedule = Schedule::new(1.0, SettingsQuad::standard())?;
        let malus = check_model(&MalusModel, &schedule, DEFAULT_TOLERANCE)?;
        let clock = check_model(&ClockModel::locked_to(&schedule), &schedule, DEFAULT_TOLERANCE)?;

        let mut closed_form_err = 0.0f64;
        for (pair, term) in SettingsPair::ALL.iter().zip(&clock.terms) {
            let (a, b) = schedule.quad().angles(*pair);
            closed_form_err = closed_form_err.max((term.gap - clock_pair_gap_closed_form(a.radians(), b.radians())).abs());
        }

        let ok = malus.verdict == Verdict::RefutedByExperiments
            && malus.max_gap() < STATIC_GAP_TOL
            && clock.verdict == Verdict::NotYetRefuted
            && clock.max_gap() > CLOCK_MIN_GAP
            && closed_form_err < 1e-8
            && (!malus.world_a_holds || malus.world_b_holds)
            && (!clock.world_a_holds || clock.world_b_holds);
        Ok((
            ok,
            format!(
                "malus max gap {:e} (refuted); clock max gap {:.4} (not yet refuted), closed-form error {closed_form_err:e}",
                malus.max_gap(),
                clock.max_gap()
            ),
        ))
    })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        qm_ch_sum(),
        qm_chsh(),
        strategy_oracle(),
        world_b_reduction(),
        world_c(),
        world_d(),
        monte_carlo_fidelity(),
        lhv_soundness(),
        admissibility(),
    ]
}
