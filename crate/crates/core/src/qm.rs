//! Closed-form quantum predictions for the polarization-entangled state
//! `|φ⁺⟩ = (|x,x⟩ + |y,y⟩)/√2`.

use crate::model::{Angle, CorrelationData, PerPair, SettingsQuad, Singles};

/// Marker for the `|φ⁺⟩` state, the only state modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhiPlus;

/// Joint outcome probabilities `[P(++), P(+−), P(−+), P(−−)]`.
pub fn qm_outcome_probabilities(a: Angle, b: Angle) -> [f64; 4] {
    let d = a.radians() - b.radians();
    let same = 0.5 * d.cos().powi(2);
    let diff = 0.5 * d.sin().powi(2);
    [same, diff, diff, same]
}

/// Double-detection probability `½ cos²(a − b)`.
pub fn qm_pair_probability(a: Angle, b: Angle) -> f64 {
    0.5 * (a.radians() - b.radians()).cos().powi(2)
}

/// Each photon alone is unpolarized.
pub fn qm_singles_probability(_a: Angle) -> f64 {
    0.5
}

/// Correlation `E = cos 2(a − b)`.
pub fn qm_expectation(a: Angle, b: Angle) -> f64 {
    (2.0 * (a.radians() - b.radians())).cos()
}

pub fn qm_correlation_data(quad: &SettingsQuad) -> CorrelationData {
    let pair_probs = PerPair::from_fn(|p| {
        let (a, b) = quad.angles(p);
        qm_pair_probability(a, b)
    });
    let expectations = PerPair::from_fn(|p| {
        let (a, b) = quad.angles(p);
        qm_expectation(a, b)
    });
    let singles = Singles {
        a_prime: qm_singles_probability(quad.alpha_prime),
        b: qm_singles_probability(quad.beta),
    };
    CorrelationData::new(pair_probs, singles, expectations).expect("quantum predictions are in range")
}
