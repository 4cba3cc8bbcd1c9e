use thiserror::Error;

use crate::model::SettingsPair;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),

    #[error("settings at station {station} must differ, both are {angle} rad")]
    DegenerateSettings { station: char, angle: f64 },

    #[error("total measuring time must be positive and finite, got {0}")]
    InvalidTotalTime(f64),

    #[error("quarter layout must use each settings pair exactly once")]
    InvalidLayout,

    #[error("time {t} lies outside the schedule [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("at least one pair must be simulated")]
    NoPairs,

    #[error("at least one sample is required")]
    NoSamples,

    #[error("model `{model}` returned response {value} outside [0, 1] at station {station}")]
    ResponseOutOfRange {
        model: String,
        station: char,
        value: f64,
    },

    /// No pairs were recorded for this settings pair: the estimate is 0/0.
    #[error("settings pair {0} has no recorded pairs; its probabilities are indeterminate (0/0)")]
    Indeterminate(SettingsPair),

    #[error("missing input: {0}")]
    Missing(&'static str),

    #[error("single-photon probability {name} = {value} differs from 1/2 by more than {tol}")]
    PolarizedSingles {
        name: &'static str,
        value: f64,
        tol: f64,
    },

    #[error("{what} = {value} outside the admissible range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("quadrature did not converge: step-halving disagreement {disagreement:e} exceeds tolerance {tol:e} after {halvings} halvings")]
    NonConvergent {
        disagreement: f64,
        tol: f64,
        halvings: u32,
    },

    #[error("invalid quadrature setting: {0}")]
    InvalidQuadrature(&'static str),

    #[error("model `{0}` is time-dependent; the mixture check applies to static models only")]
    TimeDependentModel(String),

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    /// Counterfactual time averages are not observable, so admissibility needs a model.
    #[error("admissibility needs a fully specified local model: counterfactual time averages cannot be measured from data")]
    DataOnlyAdmissibility,
}
