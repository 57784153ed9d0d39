use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{EquationForm, SlopeModel, TumbleModel, TumbleState};
use crate::error::{Error, Result};
use crate::geometry::{ImpulseInput, RingParams};
use crate::ode::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotFormat {
    #[default]
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub csv: bool,
    pub plots: bool,
    pub manifest: bool,
    pub plot_format: PlotFormat,
    /// Base name for per-run files.
    pub stem: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            csv: true,
            plots: true,
            manifest: true,
            plot_format: PlotFormat::Svg,
            stem: "run".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub ring: RingParams,
    pub initial: TumbleState,
    pub impulse: Option<ImpulseInput>,
    pub duration: f64,
    pub integrator: IntegratorConfig,
    pub slope_model: SlopeModel,
    pub equation_form: EquationForm,
    /// Polar angle of the tracked ring point.
    pub tracked_angle: f64,
    /// Output samples per second.
    pub sample_rate: f64,
    pub outputs: OutputSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            ring: RingParams::default(),
            initial: TumbleState {
                lean_rate: 0.5,
                ..TumbleState::upright(std::f64::consts::TAU)
            },
            impulse: None,
            duration: 6.0,
            integrator: IntegratorConfig::default(),
            slope_model: SlopeModel::Extended,
            equation_form: EquationForm::Corrected,
            tracked_angle: std::f64::consts::FRAC_PI_4,
            sample_rate: 200.0,
            outputs: OutputSpec::default(),
        }
    }
}

impl ScenarioConfig {
    /// The default protocol with a sigmoid impulse on the `b` axis.
    pub fn with_impulse(amplitude: f64, sharpness: f64) -> Self {
        let mut cfg = Self::default();
        cfg.impulse = Some(ImpulseInput {
            amplitude,
            sharpness,
            baseline: cfg.ring.perimeter / std::f64::consts::PI,
            ..ImpulseInput::default()
        });
        cfg
    }

    pub fn model(&self) -> TumbleModel {
        TumbleModel {
            params: self.ring,
            slope_model: self.slope_model,
            equation_form: self.equation_form,
            ..TumbleModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.ring.validate().map_err(wrap)?;
        self.integrator.validate().map_err(wrap)?;
        if let Some(imp) = &self.impulse {
            imp.validate(self.ring.perimeter).map_err(wrap)?;
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::Config(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(Error::Config(format!("sample_rate must be positive, got {}", self.sample_rate)));
        }
        if !self.initial.is_finite() || !self.tracked_angle.is_finite() {
            return Err(Error::Config("initial state must be finite".into()));
        }
        if self.initial.lean.sin().abs() < crate::dynamics::DEFAULT_SINGULAR_LEAN {
            return Err(Error::Config(format!(
                "initial lean {} lies in the flat-ring singularity",
                self.initial.lean
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub amplitudes: Vec<f64>,
    pub sharpness: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let mut base = ScenarioConfig::with_impulse(0.35, 10.0);
        base.outputs.plots = false;
        Self {
            base,
            amplitudes: vec![0.1, 0.2, 0.3, 0.4],
            sharpness: vec![5.0, 10.0, 20.0],
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.amplitudes.is_empty() || self.sharpness.is_empty() {
            return Err(Error::Config("sweep grids must be nonempty".into()));
        }
        if self.amplitudes.iter().chain(&self.sharpness).any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep grids must be finite".into()));
        }
        if self.sharpness.iter().any(|g| *g <= 0.0) {
            return Err(Error::Config("sharpness values must be positive".into()));
        }
        let mut base = self.base.clone();
        base.impulse = None;
        base.validate()
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ScenarioConfig::with_impulse(0.35, 10.0);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ScenarioConfig::from_toml_str("duration = 3.0\n[ring]\nincline = 0.0\n").unwrap();
        assert_eq!(cfg.duration, 3.0);
        assert_eq!(cfg.ring.incline, 0.0);
        assert_eq!(cfg.ring.perimeter, 2.0);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(ScenarioConfig::from_toml_str("durations = 3.0").is_err());
        assert!(ScenarioConfig::from_toml_str("duration = -1.0").is_err());
        let bad = "[impulse]\namplitude = 0.4\ncenter_time = 2.0\nsharpness = 10.0\nbaseline = 0.6366\n";
        assert!(matches!(ScenarioConfig::from_toml_str(bad), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_needs_grid() {
        let spec = SweepSpec { amplitudes: vec![], ..SweepSpec::default() };
        assert!(spec.validate().is_err());
        assert!(SweepSpec::default().validate().is_ok());
    }
}
