//! Domain types shared by every module: analyzer angles, the four settings
//! pairs, the time-partitioned measurement schedule, and the data recorded or
//! predicted for a run.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Slack allowed when validating probabilities and expectations that come out
/// of floating-point arithmetic.
pub(crate) const RANGE_SLACK: f64 = 1e-12;

/// Analyzer orientation in radians, canonicalized to `[0, π)`.
///
/// Polarization analyzers are π-periodic, so two angles that differ by an
/// integer multiple of π are the same setting.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::NonFiniteAngle(radians));
        }
        let mut r = radians.rem_euclid(PI);
        // rem_euclid of a tiny negative value rounds up to π itself.
        if r >= PI {
            r = 0.0;
        }
        Ok(Angle(r))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of the two settings is active at station A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ASetting {
    Alpha,
    AlphaPrime,
}

/// Which of the two settings is active at station B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BSetting {
    Beta,
    BetaPrime,
}

impl ASetting {
    pub fn index(self) -> usize {
        match self {
            ASetting::Alpha => 0,
            ASetting::AlphaPrime => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            ASetting::Alpha => ASetting::AlphaPrime,
            ASetting::AlphaPrime => ASetting::Alpha,
        }
    }
}

impl BSetting {
    pub fn index(self) -> usize {
        match self {
            BSetting::Beta => 0,
            BSetting::BetaPrime => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            BSetting::Beta => BSetting::BetaPrime,
            BSetting::BetaPrime => BSetting::Beta,
        }
    }
}

/// One of the four joint settings `(α,β)`, `(α,β′)`, `(α′,β)`, `(α′,β′)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SettingsPair {
    pub a: ASetting,
    pub b: BSetting,
}

impl SettingsPair {
    pub const ALPHA_BETA: SettingsPair = SettingsPair {
        a: ASetting::Alpha,
        b: BSetting::Beta,
    };
    pub const ALPHA_BETA_PRIME: SettingsPair = SettingsPair {
        a: ASetting::Alpha,
        b: BSetting::BetaPrime,
    };
    pub const ALPHA_PRIME_BETA: SettingsPair = SettingsPair {
        a: ASetting::AlphaPrime,
        b: BSetting::Beta,
    };
    pub const ALPHA_PRIME_BETA_PRIME: SettingsPair = SettingsPair {
        a: ASetting::AlphaPrime,
        b: BSetting::BetaPrime,
    };

    /// Canonical ordering used by every per-pair array in the crate.
    pub const ALL: [SettingsPair; 4] = [
        Self::ALPHA_BETA,
        Self::ALPHA_BETA_PRIME,
        Self::ALPHA_PRIME_BETA,
        Self::ALPHA_PRIME_BETA_PRIME,
    ];

    pub fn index(self) -> usize {
        2 * self.a.index() + self.b.index()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Stable ASCII key used in machine-readable output.
    pub fn label(self) -> &'static str {
        match self.index() {
            0 => "alpha_beta",
            1 => "alpha_beta_prime",
            2 => "alpha_prime_beta",
            _ => "alpha_prime_beta_prime",
        }
    }
}

impl fmt::Display for SettingsPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.a {
            ASetting::Alpha => "α",
            ASetting::AlphaPrime => "α′",
        };
        let b = match self.b {
            BSetting::Beta => "β",
            BSetting::BetaPrime => "β′",
        };
        write!(f, "({a},{b})")
    }
}

impl Serialize for SettingsPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

/// A value for each of the four settings pairs, indexed by [`SettingsPair`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerPair<T>(pub [T; 4]);

impl<T> PerPair<T> {
    pub fn from_fn(mut f: impl FnMut(SettingsPair) -> T) -> Self {
        PerPair(SettingsPair::ALL.map(&mut f))
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> PerPair<U> {
        PerPair(self.0.map(f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (SettingsPair, &T)> {
        SettingsPair::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<SettingsPair> for PerPair<T> {
    type Output = T;
    fn index(&self, pair: SettingsPair) -> &T {
        &self.0[pair.index()]
    }
}

impl<T> IndexMut<SettingsPair> for PerPair<T> {
    fn index_mut(&mut self, pair: SettingsPair) -> &mut T {
        &mut self.0[pair.index()]
    }
}

impl<T: Serialize> Serialize for PerPair<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        for (pair, value) in self.iter() {
            map.serialize_entry(pair.label(), value)?;
        }
        map.end()
    }
}

/// The four analyzer orientations `{α, α′, β, β′}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettingsQuad {
    pub alpha: Angle,
    pub alpha_prime: Angle,
    pub beta: Angle,
    pub beta_prime: Angle,
}

impl SettingsQuad {
    /// Builds a quad from radians, given in the order `α, α′, β, β′`.
    pub fn new(alpha: f64, alpha_prime: f64, beta: f64, beta_prime: f64) -> Result<Self> {
        let quad = SettingsQuad {
            alpha: Angle::new(alpha)?,
            alpha_prime: Angle::new(alpha_prime)?,
            beta: Angle::new(beta)?,
            beta_prime: Angle::new(beta_prime)?,
        };
        if same_direction(quad.alpha, quad.alpha_prime) {
            return Err(Error::DegenerateSettings {
                station: 'A',
                angle: quad.alpha.radians(),
            });
        }
        if same_direction(quad.beta, quad.beta_prime) {
            return Err(Error::DegenerateSettings {
                station: 'B',
                angle: quad.beta.radians(),
            });
        }
        Ok(quad)
    }

    /// `α = 0, β = π/8, α′ = π/4, β′ = 3π/8`: the choice that maximizes the
    /// quantum violation.
    pub fn standard() -> Self {
        Self::new(0.0, PI / 4.0, PI / 8.0, 3.0 * PI / 8.0).expect("standard quad is valid")
    }

    pub fn angle_a(&self, setting: ASetting) -> Angle {
        match setting {
            ASetting::Alpha => self.alpha,
            ASetting::AlphaPrime => self.alpha_prime,
        }
    }

    pub fn angle_b(&self, setting: BSetting) -> Angle {
        match setting {
            BSetting::Beta => self.beta,
            BSetting::BetaPrime => self.beta_prime,
        }
    }

    pub fn angles(&self, pair: SettingsPair) -> (Angle, Angle) {
        (self.angle_a(pair.a), self.angle_b(pair.b))
    }

    /// Radians in the `α, α′, β, β′` order accepted by [`SettingsQuad::new`].
    pub fn to_radians(&self) -> [f64; 4] {
        [
            self.alpha.radians(),
            self.alpha_prime.radians(),
            self.beta.radians(),
            self.beta_prime.radians(),
        ]
    }

    /// Same quad with every angle shifted by `delta` radians.
    pub fn rotated(&self, delta: f64) -> Result<Self> {
        let [a, ap, b, bp] = self.to_radians();
        Self::new(a + delta, ap + delta, b + delta, bp + delta)
    }
}

/// Partition of `[0, T]` into four equal quarters, each carrying one fixed
/// settings pair.
///
/// Quarters are half-open: a boundary time belongs to the later quarter, and
/// `t = T` belongs to the last one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    total_time: f64,
    quad: SettingsQuad,
    layout: [SettingsPair; 4],
}

impl Schedule {
    /// Default layout: A holds α for the first half and α′ for the second; B
    /// holds β on the middle half and β′ outside it.
    pub const DEFAULT_LAYOUT: [SettingsPair; 4] = [
        SettingsPair::ALPHA_BETA_PRIME,
        SettingsPair::ALPHA_BETA,
        SettingsPair::ALPHA_PRIME_BETA,
        SettingsPair::ALPHA_PRIME_BETA_PRIME,
    ];

    pub fn new(total_time: f64, quad: SettingsQuad) -> Result<Self> {
        Self::with_layout(total_time, quad, Self::DEFAULT_LAYOUT)
    }

    /// General quarter map. Every settings pair must appear in exactly one quarter.
    pub fn with_layout(total_time: f64, quad: SettingsQuad, layout: [SettingsPair; 4]) -> Result<Self> {
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::InvalidTotalTime(total_time));
        }
        let mut seen = [false; 4];
        for pair in layout {
            if std::mem::replace(&mut seen[pair.index()], true) {
                return Err(Error::InvalidLayout);
            }
        }
        Ok(Schedule {
            total_time,
            quad,
            layout,
        })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn quarter_duration(&self) -> f64 {
        self.total_time / 4.0
    }

    pub fn quad(&self) -> &SettingsQuad {
        &self.quad
    }

    pub fn layout(&self) -> &[SettingsPair; 4] {
        &self.layout
    }

    /// `[start, end)` of quarter `q` (0-based).
    pub fn quarter_bounds(&self, q: usize) -> (f64, f64) {
        let dt = self.quarter_duration();
        (q as f64 * dt, (q + 1) as f64 * dt)
    }

    pub fn quarter_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                total: self.total_time,
            });
        }
        Ok(((4.0 * t / self.total_time).floor() as usize).min(3))
    }

    pub fn pair_at(&self, t: f64) -> Result<SettingsPair> {
        Ok(self.layout[self.quarter_index(t)?])
    }

    /// The `(A, B)` analyzer angles active at time `t`.
    pub fn settings_at(&self, t: f64) -> Result<(Angle, Angle)> {
        Ok(self.quad.angles(self.pair_at(t)?))
    }

    /// Quarter in which `pair` is measured.
    pub fn quarter_of(&self, pair: SettingsPair) -> usize {
        self.layout
            .iter()
            .position(|&p| p == pair)
            .expect("layout is a permutation")
    }

    /// The two quarters during which station A holds `setting`.
    pub fn quarters_with_a(&self, setting: ASetting) -> [usize; 2] {
        self.quarters_where(|p| p.a == setting)
    }

    /// The two quarters during which station B holds `setting`.
    pub fn quarters_with_b(&self, setting: BSetting) -> [usize; 2] {
        self.quarters_where(|p| p.b == setting)
    }

    fn quarters_where(&self, pred: impl Fn(SettingsPair) -> bool) -> [usize; 2] {
        let mut out = [0; 2];
        let mut n = 0;
        for (q, &pair) in self.layout.iter().enumerate() {
            if pred(pair) {
                out[n] = q;
                n += 1;
            }
        }
        debug_assert_eq!(n, 2);
        out
    }

    /// Same layout and quad over a rescaled measuring time.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::with_layout(self.total_time * factor, self.quad, self.layout)
    }
}

/// Detection outcome; a detected (transmitted) photon counts as `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn from_detection(detected: bool) -> Self {
        if detected {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// One emitted photon pair and the outcomes recorded at both stations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEvent<L> {
    pub t: f64,
    pub lambda: L,
    pub pair: SettingsPair,
    pub a_setting: Angle,
    pub b_setting: Angle,
    pub a_outcome: Outcome,
    pub b_outcome: Outcome,
}

/// Coincidence counts `C^{ij}` for one settings pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CoincidenceCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl CoincidenceCounts {
    pub fn record(&mut self, a: Outcome, b: Outcome) {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.pp += 1,
            (Outcome::Plus, Outcome::Minus) => self.pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.mp += 1,
            (Outcome::Minus, Outcome::Minus) => self.mm += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }

    pub fn a_detections(&self) -> u64 {
        self.pp + self.pm
    }

    pub fn b_detections(&self) -> u64 {
        self.pp + self.mp
    }

    /// `C++ + C−− − C+− − C−+`.
    pub fn signed_sum(&self) -> i64 {
        (self.pp + self.mm) as i64 - (self.pm + self.mp) as i64
    }
}

/// Single-photon detection probabilities entering the CH combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Singles {
    /// `P_A(α′)`
    pub a_prime: f64,
    /// `P_B(β)`
    pub b: f64,
}

/// Pair probabilities `P_AB`, singles, and expectations `E` for the four
/// settings pairs. Any group may be absent; evaluators report what they need.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CorrelationData {
    pair_probs: Option<PerPair<f64>>,
    singles: Option<Singles>,
    expectations: Option<PerPair<f64>>,
}

fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo - RANGE_SLACK && value <= hi + RANGE_SLACK {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value, lo, hi })
    }
}

impl CorrelationData {
    pub fn new(pair_probs: PerPair<f64>, singles: Singles, expectations: PerPair<f64>) -> Result<Self> {
        let mut data = Self::from_probabilities(pair_probs, singles)?;
        data.expectations = Self::from_expectations(expectations)?.expectations;
        Ok(data)
    }

    pub fn from_probabilities(pair_probs: PerPair<f64>, singles: Singles) -> Result<Self> {
        for (_, &p) in pair_probs.iter() {
            check_range("pair probability", p, 0.0, 1.0)?;
        }
        check_range("P_A(α′)", singles.a_prime, 0.0, 1.0)?;
        check_range("P_B(β)", singles.b, 0.0, 1.0)?;
        Ok(CorrelationData {
            pair_probs: Some(pair_probs),
            singles: Some(singles),
            expectations: None,
        })
    }

    pub fn from_expectations(expectations: PerPair<f64>) -> Result<Self> {
        for (_, &e) in expectations.iter() {
            check_range("expectation", e, -1.0, 1.0)?;
        }
        Ok(CorrelationData {
            pair_probs: None,
            singles: None,
            expectations: Some(expectations),
        })
    }

    pub fn pair_probs(&self) -> Result<PerPair<f64>> {
        self.pair_probs.ok_or(Error::Missing("pair probabilities"))
    }

    pub fn singles(&self) -> Result<Singles> {
        self.singles.ok_or(Error::Missing("single-photon probabilities"))
    }

    pub fn expectations(&self) -> Result<PerPair<f64>> {
        self.expectations.ok_or(Error::Missing("expectation values"))
    }
}

/// Polarizer directions are equal modulo π; canonical angles near 0 and near π
/// describe the same direction.
fn same_direction(a: Angle, b: Angle) -> bool {
    let d = (a.radians() - b.radians()).abs();
    d.min(PI - d) <= RANGE_SLACK
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_canonicalization() {
        assert_eq!(Angle::new(PI).unwrap(), Angle::ZERO);
        assert_eq!(Angle::new(-PI / 2.0).unwrap().radians(), PI / 2.0);
        assert_eq!(Angle::new(-1e-300).unwrap(), Angle::ZERO);
        let a = Angle::new(7.3).unwrap();
        assert_eq!(Angle::new(a.radians()).unwrap(), a);
        assert!(Angle::new(f64::NAN).is_err());
        assert!(Angle::new(f64::INFINITY).is_err());
    }

    #[test]
    fn quad_rejects_equal_settings() {
        assert!(matches!(
            SettingsQuad::new(0.1, 0.1, 0.2, 0.3),
            Err(Error::DegenerateSettings { station: 'A', .. })
        ));
        assert!(matches!(
            SettingsQuad::new(0.1, 0.2, 0.3, 0.3 + PI),
            Err(Error::DegenerateSettings { station: 'B', .. })
        ));
    }

    #[test]
    fn default_layout_settings() {
        let quad = SettingsQuad::standard();
        let s = Schedule::new(1.0, quad).unwrap();
        let at = |t| {
            let (a, b) = s.settings_at(t).unwrap();
            (a.radians(), b.radians())
        };
        assert_eq!(at(0.1), (0.0, 3.0 * PI / 8.0));
        assert_eq!(at(0.3), (0.0, PI / 8.0));
        assert_eq!(at(0.99), (PI / 4.0, 3.0 * PI / 8.0));
    }

    #[test]
    fn boundaries_belong_to_later_quarter() {
        let s = Schedule::new(2.0, SettingsQuad::standard()).unwrap();
        assert_eq!(s.pair_at(0.0).unwrap(), SettingsPair::ALPHA_BETA_PRIME);
        assert_eq!(s.pair_at(0.5).unwrap(), SettingsPair::ALPHA_BETA);
        assert_eq!(s.pair_at(1.0).unwrap(), SettingsPair::ALPHA_PRIME_BETA);
        assert_eq!(s.pair_at(0.75).unwrap(), SettingsPair::ALPHA_BETA);
        assert_eq!(s.pair_at(1.5).unwrap(), SettingsPair::ALPHA_PRIME_BETA_PRIME);
        assert_eq!(s.pair_at(2.0).unwrap(), SettingsPair::ALPHA_PRIME_BETA_PRIME);
    }

    #[test]
    fn schedule_errors() {
        let quad = SettingsQuad::standard();
        assert!(matches!(Schedule::new(0.0, quad), Err(Error::InvalidTotalTime(_))));
        assert!(matches!(Schedule::new(-1.0, quad), Err(Error::InvalidTotalTime(_))));
        let s = Schedule::new(1.0, quad).unwrap();
        assert!(matches!(s.settings_at(-0.01), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(s.settings_at(1.01), Err(Error::TimeOutOfRange { .. })));
        let dup = [SettingsPair::ALPHA_BETA; 4];
        assert_eq!(Schedule::with_layout(1.0, quad, dup), Err(Error::InvalidLayout));
    }

    #[test]
    fn station_holds_setting_on_halves() {
        let s = Schedule::new(1.0, SettingsQuad::standard()).unwrap();
        assert_eq!(s.quarters_with_a(ASetting::Alpha), [0, 1]);
        assert_eq!(s.quarters_with_a(ASetting::AlphaPrime), [2, 3]);
        assert_eq!(s.quarters_with_b(BSetting::Beta), [1, 2]);
        assert_eq!(s.quarters_with_b(BSetting::BetaPrime), [0, 3]);
    }

    #[test]
    fn correlation_data_validation() {
        let p = PerPair([0.4, 0.1, 0.4, 0.4]);
        let singles = Singles { a_prime: 0.5, b: 0.5 };
        assert!(CorrelationData::from_probabilities(p, singles).is_ok());
        assert!(CorrelationData::from_probabilities(PerPair([1.2, 0.0, 0.0, 0.0]), singles).is_err());
        assert!(CorrelationData::from_expectations(PerPair([0.0, -1.5, 0.0, 0.0])).is_err());
        let e_only = CorrelationData::from_expectations(PerPair([0.0; 4])).unwrap();
        assert_eq!(e_only.pair_probs(), Err(Error::Missing("pair probabilities")));
    }

    #[test]
    fn counts_bookkeeping() {
        let mut c = CoincidenceCounts::default();
        c.record(Outcome::Plus, Outcome::Plus);
        c.record(Outcome::Plus, Outcome::Minus);
        c.record(Outcome::Minus, Outcome::Minus);
        assert_eq!(c.total(), 3);
        assert_eq!(c.a_detections(), 2);
        assert_eq!(c.b_detections(), 1);
        assert_eq!(c.signed_sum(), 1);
    }
}
