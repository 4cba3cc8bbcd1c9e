use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::LocalModel;
use crate::error::{Error, Result};
use crate::model::{Angle, Schedule};

/// λ-independent responses: each station detects with a fixed probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModel {
    p_a: f64,
    p_b: f64,
}

impl ConstantModel {
    pub fn new(p_a: f64, p_b: f64) -> Result<Self> {
        for (station, p) in [('A', p_a), ('B', p_b)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ResponseOutOfRange {
                    model: "constant".into(),
                    station,
                    value: p,
                });
            }
        }
        Ok(ConstantModel { p_a, p_b })
    }

    /// Fair coins at both stations.
    pub fn half() -> Self {
        ConstantModel { p_a: 0.5, p_b: 0.5 }
    }

    pub fn p_a(&self) -> f64 {
        self.p_a
    }

    pub fn p_b(&self) -> f64 {
        self.p_b
    }
}

impl LocalModel for ConstantModel {
    type Lambda = ();

    fn name(&self) -> &str {
        "constant"
    }

    fn is_time_dependent(&self) -> bool {
        false
    }

    fn sample_lambda(&self, _rng: &mut dyn RngCore, _t: f64) {}

    fn density(&self, _lambda: &(), _t: f64) -> f64 {
        1.0
    }

    fn lambda_cells(&self, _t: f64, _n: usize) -> Vec<((), f64)> {
        vec![((), 1.0)]
    }

    fn response_a(&self, _angle: Angle, _lambda: &(), _t: f64) -> f64 {
        self.p_a
    }

    fn response_b(&self, _angle: Angle, _lambda: &(), _t: f64) -> f64 {
        self.p_b
    }
}

/// Static model: both photons share a polarization λ uniform on `[0, π)`, and
/// each is transmitted with Malus probability `cos²(θ − λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MalusModel;

fn malus(angle: Angle, lambda: f64) -> f64 {
    (angle.radians() - lambda).cos().powi(2)
}

impl LocalModel for MalusModel {
    type Lambda = f64;

    fn name(&self) -> &str {
        "malus"
    }

    fn is_time_dependent(&self) -> bool {
        false
    }

    fn sample_lambda(&self, rng: &mut dyn RngCore, _t: f64) -> f64 {
        rng.gen::<f64>() * PI
    }

    fn density(&self, lambda: &f64, _t: f64) -> f64 {
        if (0.0..PI).contains(lambda) {
            1.0 / PI
        } else {
            0.0
        }
    }

    fn lambda_cells(&self, _t: f64, n: usize) -> Vec<(f64, f64)> {
        let h = PI / n as f64;
        (0..n).map(|i| ((i as f64 + 0.5) * h, h)).collect()
    }

    fn response_a(&self, angle: Angle, lambda: &f64, _t: f64) -> f64 {
        malus(angle, *lambda)
    }

    fn response_b(&self, angle: Angle, lambda: &f64, _t: f64) -> f64 {
        malus(angle, *lambda)
    }
}

/// Time as the hidden variable: λ = t, and each station responds as
/// `½[1 + depth·cos(2θ − 2πt/period − phase)]`, a polarization that rotates
/// with the emission time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockModel {
    period: f64,
    depth: f64,
    phase: f64,
}

impl ClockModel {
    pub fn new(period: f64, depth: f64, phase: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidTotalTime(period));
        }
        if !(0.0..=1.0).contains(&depth) {
            return Err(Error::OutOfRange {
                what: "clock modulation depth",
                value: depth,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !phase.is_finite() {
            return Err(Error::NonFiniteAngle(phase));
        }
        Ok(ClockModel { period, depth, phase })
    }

    /// Full-depth clock with period `T/2`, phase-locked to the schedule.
    pub fn locked_to(schedule: &Schedule) -> Self {
        ClockModel {
            period: schedule.total_time() / 2.0,
            depth: 1.0,
            phase: 0.0,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Same model on a time axis stretched by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.period * factor, self.depth, self.phase)
    }

    fn response(&self, angle: Angle, t: f64) -> f64 {
        let arg = 2.0 * angle.radians() - 2.0 * PI * t / self.period - self.phase;
        0.5 * (1.0 + self.depth * arg.cos())
    }
}

impl LocalModel for ClockModel {
    type Lambda = f64;

    fn name(&self) -> &str {
        "clock"
    }

    fn is_time_dependent(&self) -> bool {
        self.depth != 0.0
    }

    fn sample_lambda(&self, _rng: &mut dyn RngCore, t: f64) -> f64 {
        t
    }

    fn density(&self, _lambda: &f64, _t: f64) -> f64 {
        1.0
    }

    fn lambda_cells(&self, t: f64, _n: usize) -> Vec<(f64, f64)> {
        vec![(t, 1.0)]
    }

    fn response_a(&self, angle: Angle, lambda: &f64, _t: f64) -> f64 {
        self.response(angle, *lambda)
    }

    fn response_b(&self, angle: Angle, lambda: &f64, _t: f64) -> f64 {
        self.response(angle, *lambda)
    }
}

/// The shipped models behind one type, for selection by name at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleModel {
    Constant(ConstantModel),
    Malus(MalusModel),
    Clock(ClockModel),
}

impl From<ConstantModel> for SampleModel {
    fn from(m: ConstantModel) -> Self {
        SampleModel::Constant(m)
    }
}

impl From<MalusModel> for SampleModel {
    fn from(m: MalusModel) -> Self {
        SampleModel::Malus(m)
    }
}

impl From<ClockModel> for SampleModel {
    fn from(m: ClockModel) -> Self {
        SampleModel::Clock(m)
    }
}

impl LocalModel for SampleModel {
    type Lambda = f64;

    fn name(&self) -> &str {
        match self {
            SampleModel::Constant(m) => m.name(),
            SampleModel::Malus(m) => m.name(),
            SampleModel::Clock(m) => m.name(),
        }
    }

    fn is_time_dependent(&self) -> bool {
        match self {
            SampleModel::Constant(m) => m.is_time_dependent(),
            SampleModel::Malus(m) => m.is_time_dependent(),
            SampleModel::Clock(m) => m.is_time_dependent(),
        }
    }

    fn sample_lambda(&self, rng: &mut dyn RngCore, t: f64) -> f64 {
        match self {
            SampleModel::Constant(_) => 0.0,
            SampleModel::Malus(m) => m.sample_lambda(rng, t),
            SampleModel::Clock(m) => m.sample_lambda(rng, t),
        }
    }

    fn density(&self, lambda: &f64, t: f64) -> f64 {
        match self {
            SampleModel::Constant(m) => m.density(&(), t),
            SampleModel::Malus(m) => m.density(lambda, t),
            SampleModel::Clock(m) => m.density(lambda, t),
        }
    }

    fn lambda_cells(&self, t: f64, n: usize) -> Vec<(f64, f64)> {
        match self {
            SampleModel::Constant(_) => vec![(0.0, 1.0)],
            SampleModel::Malus(m) => m.lambda_cells(t, n),
            SampleModel::Clock(m) => m.lambda_cells(t, n),
        }
    }

    fn response_a(&self, angle: Angle, lambda: &f64, t: f64) -> f64 {
        match self {
            SampleModel::Constant(m) => m.response_a(angle, &(), t),
            SampleModel::Malus(m) => m.response_a(angle, lambda, t),
            SampleModel::Clock(m) => m.response_a(angle, lambda, t),
        }
    }

    fn response_b(&self, angle: Angle, lambda: &f64, t: f64) -> f64 {
        match self {
            SampleModel::Constant(m) => m.response_b(angle, &(), t),
            SampleModel::Malus(m) => m.response_b(angle, lambda, t),
            SampleModel::Clock(m) => m.response_b(angle, lambda, t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SettingsQuad;

    #[test]
    fn constant_model_validates() {
        assert!(ConstantModel::new(1.0, 0.0).is_ok());
        assert!(ConstantModel::new(1.1, 0.0).is_err());
        assert!(ConstantModel::new(0.5, -0.1).is_err());
    }

    #[test]
    fn malus_cells_cover_lambda_space() {
        let cells = MalusModel.lambda_cells(0.0, 8);
        let mass: f64 = cells.iter().map(|(l, w)| MalusModel.density(l, 0.0) * w).sum();
        assert!((mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clock_responses_in_unit_interval() {
        let s = Schedule::new(1.0, SettingsQuad::standard()).unwrap();
        let m = ClockModel::locked_to(&s);
        assert_eq!(m.period(), 0.5);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            for x in [0.0, 0.3, 1.2, 2.9] {
                let r = m.response_a(Angle::new(x).unwrap(), &t, t);
                assert!((0.0..=1.0).contains(&r));
            }
        }
        assert!(ClockModel::new(0.5, 1.5, 0.0).is_err());
        assert!(ClockModel::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn flat_clock_is_static() {
        assert!(!ClockModel::new(0.5, 0.0, 0.0).unwrap().is_time_dependent());
        assert!(ClockModel::new(0.5, 0.2, 0.0).unwrap().is_time_dependent());
    }
}
