use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{LambdaDigest, LocalModel};
use crate::error::{Error, Result};
use crate::model::{
    ASetting, Angle, BSetting, CoincidenceCounts, CorrelationData, Outcome, PairEvent, PerPair,
    Schedule, SettingsPair, Singles,
};

/// Pairs per RNG stream. Chunk `c` covers global pair indices
/// `[c·CHUNK_SIZE, (c+1)·CHUNK_SIZE)` and draws from ChaCha8 stream `c` of the
/// master seed, so results do not depend on how chunks are spread over workers.
pub const CHUNK_SIZE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmissionMode {
    /// Emission times uniform on `[0, T]`; pairs per quarter are multinomial.
    #[default]
    ConstantFlux,
    /// Pair `i` lands in quarter `i mod 4` at a uniform time inside it.
    Stratified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n_pairs: usize,
    pub seed: u64,
    pub emission: EmissionMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl SimulationConfig {
    pub fn new(n_pairs: usize, seed: u64) -> Self {
        SimulationConfig {
            n_pairs,
            seed,
            emission: EmissionMode::ConstantFlux,
            workers: None,
        }
    }
}

/// Every recorded pair of a run, sorted by emission time.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<L> {
    schedule: Schedule,
    events: Vec<PairEvent<L>>,
    seed: u64,
    emission: EmissionMode,
}

impl<L> RunRecord<L> {
    /// Assembles a record from externally produced events, checking timing
    /// and settings against the schedule.
    pub fn from_events(schedule: Schedule, mut events: Vec<PairEvent<L>>, seed: u64) -> Result<Self> {
        for ev in &events {
            let pair = schedule.pair_at(ev.t)?;
            let (a, b) = schedule.quad().angles(pair);
            if ev.pair != pair || ev.a_setting != a || ev.b_setting != b {
                return Err(Error::OutOfRange {
                    what: "event settings at its emission time",
                    value: ev.t,
                    lo: 0.0,
                    hi: schedule.total_time(),
                });
            }
        }
        events.sort_by(|x, y| x.t.total_cmp(&y.t));
        Ok(RunRecord {
            schedule,
            events,
            seed,
            emission: EmissionMode::ConstantFlux,
        })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn events(&self) -> &[PairEvent<L>] {
        &self.events
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_pairs(&self) -> usize {
        self.events.len()
    }

    pub fn emission(&self) -> EmissionMode {
        self.emission
    }
}

fn checked_response(model: &str, station: char, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::ResponseOutOfRange {
            model: model.to_string(),
            station,
            value,
        })
    }
}

pub fn simulate_run<M: LocalModel>(
    model: &M,
    schedule: &Schedule,
    n_pairs: usize,
    seed: u64,
) -> Result<RunRecord<M::Lambda>> {
    simulate_run_with(model, schedule, &SimulationConfig::new(n_pairs, seed))
}

pub fn simulate_run_with<M: LocalModel>(
    model: &M,
    schedule: &Schedule,
    config: &SimulationConfig,
) -> Result<RunRecord<M::Lambda>> {
    if config.n_pairs == 0 {
        return Err(Error::NoPairs);
    }
    let n_chunks = config.n_pairs.div_ceil(CHUNK_SIZE);
    let run_chunks = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| simulate_chunk(model, schedule, config, c))
            .collect::<Result<Vec<_>>>()
    };
    let chunks = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(run_chunks),
        None => run_chunks(),
    }?;

    let mut events: Vec<_> = chunks.into_iter().flatten().collect();
    events.sort_by(|x, y| x.t.total_cmp(&y.t));
    Ok(RunRecord {
        schedule: schedule.clone(),
        events,
        seed: config.seed,
        emission: config.emission,
    })
}

fn simulate_chunk<M: LocalModel>(
    model: &M,
    schedule: &Schedule,
    config: &SimulationConfig,
    chunk: usize,
) -> Result<Vec<PairEvent<M::Lambda>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chunk as u64);
    let start = chunk * CHUNK_SIZE;
    let end = (start + CHUNK_SIZE).min(config.n_pairs);
    let total = schedule.total_time();
    let dt = schedule.quarter_duration();
    let name = model.name();

    let mut events = Vec::with_capacity(end - start);
    for i in start..end {
        let u: f64 = rng.gen();
        let t = match config.emission {
            EmissionMode::ConstantFlux => u * total,
            EmissionMode::Stratified => (((i % 4) as f64 + u) * dt).min(total),
        };
        let lambda = model.sample_lambda(&mut rng, t);
        let pair = schedule.pair_at(t)?;
        let (a_setting, b_setting) = schedule.quad().angles(pair);
        let p_a = checked_response(name, 'A', model.response_a(a_setting, &lambda, t))?;
        let p_b = checked_response(name, 'B', model.response_b(b_setting, &lambda, t))?;
        let a_outcome = Outcome::from_detection(rng.gen::<f64>() < p_a);
        let b_outcome = Outcome::from_detection(rng.gen::<f64>() < p_b);
        events.push(PairEvent {
            t,
            lambda,
            pair,
            a_setting,
            b_setting,
            a_outcome,
            b_outcome,
        });
    }
    Ok(events)
}

/// Coincidence counts for each settings pair.
pub fn tally<L>(run: &RunRecord<L>) -> PerPair<CoincidenceCounts> {
    let mut counts = PerPair::<CoincidenceCounts>::default();
    for ev in &run.events {
        counts[ev.pair].record(ev.a_outcome, ev.b_outcome);
    }
    counts
}

fn single_a(counts: &PerPair<CoincidenceCounts>, setting: ASetting) -> (u64, u64) {
    SettingsPair::ALL
        .iter()
        .filter(|p| p.a == setting)
        .fold((0, 0), |(k, n), &p| (k + counts[p].a_detections(), n + counts[p].total()))
}

fn single_b(counts: &PerPair<CoincidenceCounts>, setting: BSetting) -> (u64, u64) {
    SettingsPair::ALL
        .iter()
        .filter(|p| p.b == setting)
        .fold((0, 0), |(k, n), &p| (k + counts[p].b_detections(), n + counts[p].total()))
}

/// Per-quarter estimates: each pair probability and expectation is normalized
/// by the pairs emitted while that settings pair was active, and each single by
/// the pairs emitted during the half its setting was active.
pub fn estimate_correlation_data(counts: &PerPair<CoincidenceCounts>) -> Result<CorrelationData> {
    Ok(estimate_with_errors(counts)?.data)
}

/// Estimated correlation data with binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub data: CorrelationData,
    pub pair_prob_se: PerPair<f64>,
    pub singles_se: Singles,
    pub expectation_se: PerPair<f64>,
    pub totals: PerPair<u64>,
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn estimate_with_errors(counts: &PerPair<CoincidenceCounts>) -> Result<MonteCarloEstimate> {
    for (pair, c) in counts.iter() {
        if c.total() == 0 {
            return Err(Error::Indeterminate(pair));
        }
    }
    let totals = counts.map(|c| c.total());
    let pair_probs = PerPair::from_fn(|p| counts[p].pp as f64 / totals[p] as f64);
    let expectations = PerPair::from_fn(|p| counts[p].signed_sum() as f64 / totals[p] as f64);

    let (ka, na) = single_a(counts, ASetting::AlphaPrime);
    let (kb, nb) = single_b(counts, BSetting::Beta);
    let singles = Singles {
        a_prime: ka as f64 / na as f64,
        b: kb as f64 / nb as f64,
    };

    let pair_prob_se = PerPair::from_fn(|p| binomial_se(pair_probs[p], totals[p]));
    // A ±1 variable with mean E has variance 1 − E².
    let expectation_se = PerPair::from_fn(|p| ((1.0 - expectations[p].powi(2)).max(0.0) / totals[p] as f64).sqrt());
    let singles_se = Singles {
        a_prime: binomial_se(singles.a_prime, na),
        b: binomial_se(singles.b, nb),
    };

    Ok(MonteCarloEstimate {
        data: CorrelationData::new(pair_probs, singles, expectations)?,
        pair_prob_se,
        singles_se,
        expectation_se,
        totals,
    })
}

/// One line of the audit record format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordLine {
    pub t: f64,
    pub lambda_digest: u64,
    pub a_index: usize,
    pub b_index: usize,
    pub a_outcome: Outcome,
    pub b_outcome: Outcome,
}

impl RecordLine {
    pub const HEADER: &'static str = "t,lambda_digest,a_setting,b_setting,a_outcome,b_outcome";

    pub fn parse(line: &str) -> Option<Self> {
        let mut fields = line.trim().split(',');
        let t = fields.next()?.parse().ok()?;
        let lambda_digest = u64::from_str_radix(fields.next()?, 16).ok()?;
        let a_index = fields.next()?.parse().ok()?;
        let b_index = fields.next()?.parse().ok()?;
        let outcome = |s: &str| match s {
            "+1" => Some(Outcome::Plus),
            "-1" => Some(Outcome::Minus),
            _ => None,
        };
        let a_outcome = outcome(fields.next()?)?;
        let b_outcome = outcome(fields.next()?)?;
        if fields.next().is_some() || a_index > 1 || b_index > 1 {
            return None;
        }
        Some(RecordLine {
            t,
            lambda_digest,
            a_index,
            b_index,
            a_outcome,
            b_outcome,
        })
    }

    pub fn pair(&self) -> SettingsPair {
        SettingsPair::from_index(2 * self.a_index + self.b_index).expect("indices checked on parse")
    }
}

impl<L: LambdaDigest> RunRecord<L> {
    /// Writes the line-oriented audit format: `#` header lines, then one
    /// event per line as `t,lambda_digest,a,b,a_outcome,b_outcome` with
    /// settings indices 0 = unprimed, 1 = primed.
    pub fn write_records<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# timebell run record v1")?;
        writeln!(
            out,
            "# seed={} n_pairs={} total_time={} emission={}",
            self.seed,
            self.events.len(),
            self.schedule.total_time(),
            match self.emission {
                EmissionMode::ConstantFlux => "constant-flux",
                EmissionMode::Stratified => "stratified",
            }
        )?;
        let [a, ap, b, bp] = self.schedule.quad().to_radians();
        writeln!(out, "# quad alpha={a} alpha_prime={ap} beta={b} beta_prime={bp}")?;
        writeln!(out, "# {}", RecordLine::HEADER)?;
        for ev in &self.events {
            writeln!(
                out,
                "{},{:016x},{},{},{},{}",
                ev.t,
                ev.lambda.digest(),
                ev.pair.a.index(),
                ev.pair.b.index(),
                ev.a_outcome,
                ev.b_outcome
            )?;
        }
        Ok(())
    }
}

/// Reads back the event lines of an audit record, skipping `#` comments.
pub fn read_record_lines<R: BufRead>(input: R) -> io::Result<Vec<RecordLine>> {
    let mut lines = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let rec = RecordLine::parse(&line).ok_or_else(|| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: malformed event `{line}`", n + 1))
        })?;
        lines.push(rec);
    }
    Ok(lines)
}

/// Angle pair recorded for an event, recovered from the schedule's quad.
pub fn event_settings(schedule: &Schedule, line: &RecordLine) -> (Angle, Angle) {
    schedule.quad().angles(line.pair())
}
