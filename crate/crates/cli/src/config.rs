//! Run configuration: JSON schema, named presets and validation.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use risfeed::power::{technology, LinkBudget, PATechnology};
use risfeed::{ElementPattern, PhaseConvention};

use crate::CliError;

/// Feeder distance: a number of half wavelengths, or `"auto"` to run the
/// distance optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Fixed(f64),
    Auto,
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Distance::Fixed(d) => s.serialize_f64(*d),
            Distance::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Distance;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"auto\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Distance, E> {
                Ok(Distance::Fixed(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Distance, E> {
                Ok(Distance::Fixed(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Distance, E> {
                Ok(Distance::Fixed(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Distance, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl std::str::FromStr for Distance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Distance::Auto);
        }
        s.parse::<f64>()
            .map(Distance::Fixed)
            .map_err(|_| format!("distance must be a number or \"auto\", got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub n_p: usize,
    pub n_a: usize,
    pub d: Distance,
    pub ris_spacing: f64,
    pub amaf_spacing: f64,
    pub ris_element: String,
    pub amaf_element: String,
    pub offset: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_p: 128,
            n_a: 4,
            d: Distance::Fixed(80.0),
            ris_spacing: 1.0,
            amaf_spacing: 1.0,
            ris_element: "patch6dBi".into(),
            amaf_element: "patch6dBi".into(),
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    #[default]
    Pencil,
    Flattop,
    Monopulse,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub kind: DesignKind,
    /// Mode weights for `custom`.
    pub betas: Vec<f64>,
    /// RIS phases in degrees for `custom`; empty means no phase correction.
    pub phases_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub enabled: bool,
    pub d_step: f64,
    pub persist_steps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            d_step: 1.0,
            persist_steps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_p: Vec<usize>,
    /// Fixed distances, one per entry of `n_p`, used instead of the optimizer.
    pub distances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplifierConfig {
    pub technology: String,
    /// Extra technologies appended to the built-in survey.
    pub custom: Vec<PATechnology>,
    pub backoff_db: f64,
}

impl Default for AmplifierConfig {
    fn default() -> Self {
        Self {
            technology: "GaN".into(),
            custom: Vec::new(),
            backoff_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub design: DesignConfig,
    pub grid_step_deg: f64,
    pub phase_convention: PhaseConvention,
    pub optimizer: OptimizerConfig,
    pub sweep: SweepConfig,
    pub steer_deg: f64,
    pub link_budget: Option<LinkBudget>,
    pub amplifier: AmplifierConfig,
    pub export_channel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            design: DesignConfig::default(),
            grid_step_deg: risfeed::farfield::DEFAULT_GRID_STEP_DEG,
            phase_convention: PhaseConvention::default(),
            optimizer: OptimizerConfig::default(),
            sweep: SweepConfig::default(),
            steer_deg: 0.0,
            link_budget: None,
            amplifier: AmplifierConfig::default(),
            export_channel: false,
        }
    }
}

pub const PRESETS: [&str; 6] = ["table1", "table2", "paper", "fig3", "fig5", "fig6"];

const TABLE_SIZES: [usize; 5] = [16, 32, 64, 128, 192];

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    match name {
        "table1" | "table2" => {
            if name == "table2" {
                cfg.scene.ris_element = "patch8dBi".into();
                cfg.scene.amaf_element = "patch8dBi".into();
            }
            cfg.scene.d = Distance::Auto;
            cfg.optimizer.enabled = true;
            cfg.sweep.n_p = TABLE_SIZES.to_vec();
        }
        "paper" => {
            cfg.link_budget = Some(LinkBudget::EXAMPLE);
            cfg.sweep.n_p = TABLE_SIZES.to_vec();
            cfg.sweep.distances = Some(vec![8.0, 16.0, 30.0, 80.0, 120.0]);
        }
        "fig3" => cfg.design.kind = DesignKind::Pencil,
        "fig5" => cfg.design.kind = DesignKind::Flattop,
        "fig6" => cfg.design.kind = DesignKind::Monopulse,
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}, expected one of {}",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(cfg)
}

pub fn element(name: &str) -> Result<ElementPattern, CliError> {
    ElementPattern::preset(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown element pattern {name:?}, expected patch6dBi, patch8dBi or isotropic"
        ))
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn ris_element(&self) -> Result<ElementPattern, CliError> {
        element(&self.scene.ris_element)
    }

    pub fn amaf_element(&self) -> Result<ElementPattern, CliError> {
        element(&self.scene.amaf_element)
    }

    pub fn amplifier_technology(&self) -> Result<PATechnology, CliError> {
        let name = &self.amplifier.technology;
        self.amplifier
            .custom
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
            .cloned()
            .or_else(|| technology(name))
            .ok_or_else(|| CliError::Config(format!("unknown amplifier technology {name:?}")))
    }

    /// Checks everything that does not need a computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let s = &self.scene;
        if s.n_a == 0 || s.n_p == 0 {
            return bad("n_p and n_a must be at least 1".into());
        }
        if s.n_a > s.n_p {
            return bad(format!("n_a ({}) must not exceed n_p ({})", s.n_a, s.n_p));
        }
        for (name, v) in [
            ("ris_spacing", s.ris_spacing),
            ("amaf_spacing", s.amaf_spacing),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !s.offset.is_finite() {
            return bad("offset must be finite".into());
        }
        match s.d {
            Distance::Auto if !self.optimizer.enabled => {
                return bad("distance \"auto\" requires the optimizer to be enabled".into())
            }
            Distance::Fixed(d) if !(d.is_finite() && d > 0.0) => {
                return bad(format!("distance must be positive, got {d}"))
            }
            _ => {}
        }
        self.ris_element()?;
        self.amaf_element()?;
        if !(self.grid_step_deg > 0.0 && self.grid_step_deg <= 1.0) {
            return bad(format!(
                "grid_step_deg must lie in (0, 1], got {}",
                self.grid_step_deg
            ));
        }
        if !(self.optimizer.d_step.is_finite() && self.optimizer.d_step > 0.0) {
            return bad(format!(
                "optimizer d_step must be positive, got {}",
                self.optimizer.d_step
            ));
        }
        if self.optimizer.persist_steps == 0 {
            return bad("optimizer persist_steps must be at least 1".into());
        }
        if !(self.steer_deg.is_finite() && self.steer_deg.abs() < 90.0) {
            return bad(format!(
                "steering angle must lie in (-90, 90), got {}",
                self.steer_deg
            ));
        }
        if let Some(ds) = &self.sweep.distances {
            if ds.len() != self.sweep.n_p.len() {
                return bad(format!(
                    "sweep has {} sizes but {} distances",
                    self.sweep.n_p.len(),
                    ds.len()
                ));
            }
            if let Some(d) = ds.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
                return bad(format!("sweep distance must be positive, got {d}"));
            }
        }
        if let Some(n) = self.sweep.n_p.iter().find(|&&n| n < s.n_a) {
            return bad(format!("sweep size {n} is smaller than n_a ({})", s.n_a));
        }
        if self.design.kind == DesignKind::Custom {
            if self.design.betas.is_empty() {
                return bad("custom design needs at least one mode weight".into());
            }
            if !self.design.phases_deg.is_empty() && self.design.phases_deg.len() != s.n_p {
                return bad(format!(
                    "custom design has {} RIS phases for {} RIS elements",
                    self.design.phases_deg.len(),
                    s.n_p
                ));
            }
        }
        for t in &self.amplifier.custom {
            t.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if !(self.amplifier.backoff_db.is_finite() && self.amplifier.backoff_db >= 0.0) {
            return bad(format!(
                "backoff_db must be non-negative, got {}",
                self.amplifier.backoff_db
            ));
        }
        if let Some(lb) = &self.link_budget {
            lb.validate()
                .map_err(|e| CliError::Config(format!("link_budget: {e}")))?;
        }
        Ok(())
    }
}
