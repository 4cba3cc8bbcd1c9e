//! Simulation and verification toolkit for time-resolved Bell experiments.
//!
//! Measurements happen one settings pair at a time, so the averages that
//! enter the CH and CHSH inequalities are taken over different time windows.
//! The crate reproduces the standard bounds, evaluates the factual and
//! counterfactual terms of a time-sequenced run for any local model, values
//! the unmeasured terms under four "possible worlds", and decides whether a
//! given local model is already ruled out by observed violations.
//!
//! Modules:
//! - [`model`]: angles, settings, the quarter schedule, event and count types.
//! - [`qm`]: closed-form quantum predictions for `|φ⁺⟩`.
//! - [`lhv`]: local models, Monte Carlo runs and exact time averages.
//! - [`inequalities`]: CH, CHSH and the counterfactual-augmented CHSH form.
//! - [`worlds`]: the four counterfactual valuation rules and their bounds.
//! - [`oracle`]: identity sampling and deterministic-strategy enumeration.
//! - [`admissibility`]: the refuted / not-yet-refuted decision for a model.
//! - [`repro`]: the reproduction checklist run by the CLI.

pub mod admissibility;
pub mod error;
pub mod inequalities;
pub mod lhv;
pub mod model;
pub mod oracle;
pub mod qm;
pub mod repro;
pub mod worlds;

pub use error::{Error, Result};
pub use model::{
    ASetting, Angle, BSetting, CoincidenceCounts, CorrelationData, Outcome, PairEvent, PerPair, Schedule,
    SettingsPair, SettingsQuad, Singles,
};
