//! Scenario configuration: a JSON file, overridden field by field by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use timebell::lhv::{ClockModel, ConstantModel, EmissionMode, MalusModel, QuadratureConfig, SampleModel, SimulationConfig};
use timebell::worlds::WorldAssumption;
use timebell::{Schedule, SettingsQuad};

pub const DEFAULT_PAIRS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_IDENTITY_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Emission {
    #[default]
    ConstantFlux,
    Stratified,
}

impl From<Emission> for EmissionMode {
    fn from(e: Emission) -> Self {
        match e {
            Emission::ConstantFlux => EmissionMode::ConstantFlux,
            Emission::Stratified => EmissionMode::Stratified,
        }
    }
}

/// Raw scenario as written in a config file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// `[α, α′, β, β′]` in radians.
    pub quad: Option<[f64; 4]>,
    pub total_time: Option<f64>,
    pub model: Option<String>,
    pub params: Option<BTreeMap<String, f64>>,
    pub pairs: Option<usize>,
    pub seed: Option<u64>,
    pub world: Option<String>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
    pub resolution: Option<usize>,
    pub emission: Option<Emission>,
    pub workers: Option<usize>,
    pub samples: Option<usize>,
    pub sweep: Option<usize>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
    }

    /// Parses a config document; errors carry `line:column: message`.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))
    }

    /// Fields set in `other` replace those in `self`; model parameters merge
    /// key by key.
    pub fn overlay(mut self, other: ScenarioConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(quad, total_time, model, pairs, seed, world, format, tol, resolution, emission, workers, samples, sweep);
        if let Some(p) = other.params {
            self.params.get_or_insert_with(BTreeMap::new).extend(p);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qm,
    Malus,
    Constant,
    Clock,
}

impl ModelKind {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "qm" => ModelKind::Qm,
            "malus" => ModelKind::Malus,
            "constant" => ModelKind::Constant,
            "clock" => ModelKind::Clock,
            other => bail!("config field `model`: unknown model `{other}` (expected qm, malus, constant or clock)"),
        })
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            ModelKind::Qm | ModelKind::Malus => &[],
            ModelKind::Constant => &["p_a", "p_b"],
            ModelKind::Clock => &["period", "depth", "phase"],
        }
    }
}

/// A validated scenario with every default filled in. This is what gets
/// echoed back in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub quad: [f64; 4],
    pub total_time: f64,
    pub model: ModelKind,
    pub params: BTreeMap<String, f64>,
    pub pairs: usize,
    pub seed: u64,
    pub world: Option<char>,
    pub format: Format,
    pub tol: f64,
    pub resolution: usize,
    pub emission: Emission,
    pub workers: Option<usize>,
    pub samples: usize,
    pub sweep: Option<usize>,
    #[serde(skip)]
    pub schedule: Schedule,
    #[serde(skip)]
    pub local: Option<SampleModel>,
}

fn field<T>(name: &str, r: timebell::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!("config field `{name}`: {e}"))
}

impl Scenario {
    pub fn resolve(cfg: ScenarioConfig, default_model: ModelKind) -> Result<Self> {
        let q = cfg.quad.unwrap_or_else(|| SettingsQuad::standard().to_radians());
        let quad = field("quad", SettingsQuad::new(q[0], q[1], q[2], q[3]))?;
        let total_time = cfg.total_time.unwrap_or(1.0);
        let schedule = field("total_time", Schedule::new(total_time, quad))?;

        let model = match &cfg.model {
            Some(name) => ModelKind::parse(name)?,
            None => default_model,
        };
        let params = cfg.params.unwrap_or_default();
        for key in params.keys() {
            if !model.allowed_params().contains(&key.as_str()) {
                bail!(
                    "config field `params`: model `{}` has no parameter `{key}` (accepted: {})",
                    serde_json::to_value(model)?.as_str().unwrap_or_default(),
                    if model.allowed_params().is_empty() { "none".to_string() } else { model.allowed_params().join(", ") }
                );
            }
        }
        let local = build_model(model, &params, &schedule)?;

        let pairs = cfg.pairs.unwrap_or(DEFAULT_PAIRS);
        if pairs == 0 {
            bail!("config field `pairs`: at least one pair must be simulated");
        }
        let world = match &cfg.world {
            None => None,
            Some(w) => {
                let tag = w.trim().to_ascii_uppercase();
                let c = tag.chars().next().filter(|_| tag.len() == 1);
                match c.and_then(WorldAssumption::from_tag) {
                    Some(_) => c,
                    None => bail!("config field `world`: expected one of A, B, C, D, got `{w}`"),
                }
            }
        };
        let tol = cfg.tol.unwrap_or(timebell::admissibility::DEFAULT_TOLERANCE);
        if tol.is_nan() || tol <= 0.0 {
            bail!("config field `tol`: tolerance must be positive, got {tol}");
        }
        let resolution = cfg.resolution.unwrap_or(QuadratureConfig::default().initial_cells);
        if resolution == 0 {
            bail!("config field `resolution`: at least one quadrature cell is required");
        }
        if cfg.workers == Some(0) {
            bail!("config field `workers`: at least one worker is required");
        }
        let samples = cfg.samples.unwrap_or(DEFAULT_IDENTITY_SAMPLES);
        if cfg.sweep.is_some_and(|n| n < 2) {
            bail!("config field `sweep`: a sweep needs at least 2 points");
        }

        Ok(Scenario {
            quad: q,
            total_time,
            model,
            params,
            pairs,
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            world,
            format: cfg.format.unwrap_or_default(),
            tol,
            resolution,
            emission: cfg.emission.unwrap_or_default(),
            workers: cfg.workers,
            samples,
            sweep: cfg.sweep,
            schedule,
            local,
        })
    }

    pub fn settings_quad(&self) -> SettingsQuad {
        *self.schedule.quad()
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            n_pairs: self.pairs,
            seed: self.seed,
            emission: self.emission.into(),
            workers: self.workers,
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig::with_cells(self.resolution)
    }

    pub fn worlds(&self) -> Vec<WorldAssumption> {
        match self.world.and_then(WorldAssumption::from_tag) {
            Some(w) => vec![w],
            None => WorldAssumption::ALL.to_vec(),
        }
    }
}

fn build_model(kind: ModelKind, params: &BTreeMap<String, f64>, schedule: &Schedule) -> Result<Option<SampleModel>> {
    let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
    Ok(match kind {
        ModelKind::Qm => None,
        ModelKind::Malus => Some(MalusModel.into()),
        ModelKind::Constant => Some(field("params", ConstantModel::new(get("p_a", 0.5), get("p_b", 0.5)))?.into()),
        ModelKind::Clock => {
            let locked = ClockModel::locked_to(schedule);
            let clock = ClockModel::new(
                get("period", locked.period()),
                get("depth", locked.depth()),
                get("phase", locked.phase()),
            );
            Some(field("params", clock)?.into())
        }
    })
}

/// Parses `key=value` for `--param`.
pub fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("parameter `{k}`: `{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Parses `a,a',b,b'` for `--quad`.
pub fn parse_quad(s: &str) -> std::result::Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected four comma-separated angles a,a',b,b', got {}", parts.len()));
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected_with_position() {
        let err = ScenarioConfig::parse("{\n  \"seed\": 1,\n  \"colour\": 2\n}").unwrap_err();
        assert!(err.starts_with("3:"), "{err}");
        assert!(err.contains("colour"));
    }

    #[test]
    fn overlay_prefers_flags() {
        let file = ScenarioConfig {
            seed: Some(1),
            pairs: Some(10),
            params: Some(BTreeMap::from([("depth".into(), 0.5)])),
            ..Default::default()
        };
        let flags = ScenarioConfig {
            seed: Some(2),
            params: Some(BTreeMap::from([("phase".into(), 0.1)])),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.seed, Some(2));
        assert_eq!(merged.pairs, Some(10));
        assert_eq!(merged.params.unwrap().len(), 2);
    }

    #[test]
    fn resolve_checks_fields() {
        let bad = ScenarioConfig {
            quad: Some([0.1, 0.1, 0.2, 0.3]),
            ..Default::default()
        };
        let e = Scenario::resolve(bad, ModelKind::Qm).unwrap_err().to_string();
        assert!(e.contains("`quad`"), "{e}");

        let bad = ScenarioConfig {
            model: Some("malus".into()),
            params: Some(BTreeMap::from([("depth".into(), 0.5)])),
            ..Default::default()
        };
        assert!(Scenario::resolve(bad, ModelKind::Qm).unwrap_err().to_string().contains("no parameter"));

        let bad = ScenarioConfig {
            model: Some("pilot-wave".into()),
            ..Default::default()
        };
        assert!(Scenario::resolve(bad, ModelKind::Qm).is_err());

        let s = Scenario::resolve(ScenarioConfig::default(), ModelKind::Malus).unwrap();
        assert_eq!(s.pairs, DEFAULT_PAIRS);
        assert!(s.local.is_some());
    }

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_param("depth=0.5").unwrap(), ("depth".into(), 0.5));
        assert!(parse_param("depth").is_err());
        assert_eq!(parse_quad("0,0.5,1,1.5").unwrap(), [0.0, 0.5, 1.0, 1.5]);
        assert!(parse_quad("0,1,2").is_err());
    }
}
