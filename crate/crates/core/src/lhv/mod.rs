//! Local hidden-variable models evaluated under a time-sequenced schedule.
//!
//! A [`LocalModel`] is local by construction: each station's response sees
//! only its own analyzer angle, the hidden variable and the emission time,
//! and neither the λ-sampler nor the density ever receive a setting.
//! Models are evaluated two ways: [`simulate_run`] draws pairs and records
//! outcomes, and [`exact_time_averages`] integrates every factual and
//! counterfactual term numerically.

mod models;
mod quadrature;
mod simulate;

pub use models::{ClockModel, ConstantModel, MalusModel, SampleModel};
pub use quadrature::{
    exact_time_averages, exact_time_averages_with, QuadratureConfig, Quantity, TermAverages,
    TimeAverages,
};
pub use simulate::{
    estimate_correlation_data, estimate_with_errors, event_settings, read_record_lines, simulate_run,
    simulate_run_with, tally, EmissionMode, MonteCarloEstimate, RecordLine, RunRecord, SimulationConfig, CHUNK_SIZE,
};

use rand::RngCore;

use crate::model::Angle;

/// Compact fingerprint of a hidden-variable value for audit records.
pub trait LambdaDigest {
    fn digest(&self) -> u64;
}

impl LambdaDigest for () {
    fn digest(&self) -> u64 {
        0
    }
}

impl LambdaDigest for f64 {
    fn digest(&self) -> u64 {
        self.to_bits()
    }
}

impl<const N: usize> LambdaDigest for [f64; N] {
    fn digest(&self) -> u64 {
        // FNV-1a over the IEEE bit patterns.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in self {
            for byte in x.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// A local-realistic response model.
///
/// `density` is the distribution of λ conditional on the emission time `t`;
/// emission times themselves are uniform over the schedule (constant flux).
pub trait LocalModel: Sync {
    type Lambda: Clone + Send + LambdaDigest;

    fn name(&self) -> &str;

    /// Whether the density or either response depends on `t`.
    fn is_time_dependent(&self) -> bool;

    fn sample_lambda(&self, rng: &mut dyn RngCore, t: f64) -> Self::Lambda;

    fn density(&self, lambda: &Self::Lambda, t: f64) -> f64;

    /// Midpoint cells covering λ-space at time `t` at resolution `n`, as
    /// `(node, cell measure)`. Degenerate λ-spaces may return fewer cells.
    fn lambda_cells(&self, t: f64, n: usize) -> Vec<(Self::Lambda, f64)>;

    /// Detection probability `P_A(angle, λ, t)` at station A.
    fn response_a(&self, angle: Angle, lambda: &Self::Lambda, t: f64) -> f64;

    /// Detection probability `P_B(angle, λ, t)` at station B.
    fn response_b(&self, angle: Angle, lambda: &Self::Lambda, t: f64) -> f64;
}
