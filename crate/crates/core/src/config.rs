//! Flat key–value experiment configuration.
//!
//! Every rate and frequency in a config is an ordinary frequency ν in Hz;
//! conversion to angular units happens here and nowhere else. `kappa_drive`
//! is in Hz/√W, so the drive is Ω/2π = kappa_drive·√P.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{hz_to_rad, DriveConversion, SystemParams};
use crate::sweep::{Grid, GridScale, SweepField};

pub const CONFIG_VERSION: u32 = 1;

const PRESETS: [(&str, &str); 6] = [
    ("fig2-antiPT", include_str!("../presets/fig2-antiPT.toml")),
    ("fig2-PT", include_str!("../presets/fig2-PT.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig3c", include_str!("../presets/fig3c.toml")),
    ("fig4-like", include_str!("../presets/fig4-like.toml")),
];

/// Names of the presets shipped with the crate.
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub version: u32,
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_d: f64,
    pub g: f64,
    #[serde(rename = "Gamma")]
    pub gamma_shared: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    #[serde(rename = "U")]
    pub kerr: f64,
    /// Used only when `power` is absent.
    #[serde(rename = "Omega")]
    pub rabi: f64,
    pub kappa_drive: f64,
    /// Drive power in W; overrides `Omega` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    pub sweep_field: String,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    #[serde(default)]
    pub sweep_scale: GridScale,
    /// Kerr values (Hz) compared side by side in response runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_values: Option<Vec<f64>>,
    /// Relative tolerance override for cross-checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let known: Vec<_> = preset_names().collect();
            Error::Config(format!("unknown preset '{name}' (known: {})", known.join(", ")))
        })?;
        Self::from_toml(text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        self.field()?;
        self.drive()?;
        let p = self.params()?;
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.grid().values().map_err(|e| Error::Config(e.to_string()))?;
        if self.sweep_scale == GridScale::Log && !(self.sweep_min > 0.0) {
            return Err(Error::Config("log sweep needs sweep_min > 0".into()));
        }
        if let Some(us) = &self.u_values {
            if us.is_empty() || us.iter().any(|u| !u.is_finite()) {
                return Err(Error::Config("u_values must be a non-empty list of finite numbers".into()));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tolerance must be > 0, got {t}")));
            }
        }
        Ok(())
    }

    pub fn field(&self) -> Result<SweepField> {
        self.sweep_field.parse()
    }

    /// Power-to-drive conversion in angular units.
    pub fn drive(&self) -> Result<DriveConversion> {
        DriveConversion::new(hz_to_rad(self.kappa_drive)).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parameters in rad/s.
    pub fn params(&self) -> Result<SystemParams> {
        let rabi = match self.power {
            Some(p) => self.drive()?.rabi_from_power(p).map_err(|e| Error::Config(e.to_string()))?,
            None => hz_to_rad(self.rabi),
        };
        Ok(SystemParams {
            omega_a: hz_to_rad(self.omega_a),
            omega_b: hz_to_rad(self.omega_b),
            omega_d: hz_to_rad(self.omega_d),
            g: hz_to_rad(self.g),
            gamma_shared: hz_to_rad(self.gamma_shared),
            gamma_a: hz_to_rad(self.gamma_a),
            gamma_b: hz_to_rad(self.gamma_b),
            kerr: hz_to_rad(self.kerr),
            rabi,
        })
    }

    /// Sweep grid in rad/s.
    pub fn grid(&self) -> Grid {
        Grid { min: hz_to_rad(self.sweep_min), max: hz_to_rad(self.sweep_max), n: self.sweep_points, scale: self.sweep_scale }
    }

    /// Kerr values in rad/s.
    pub fn kerr_values(&self) -> Option<Vec<f64>> {
        self.u_values.as_ref().map(|us| us.iter().map(|u| hz_to_rad(*u)).collect())
    }
}
