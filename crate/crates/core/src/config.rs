//! Engine parameters read from a TOML file.
//!
//! ```toml
//! [estimators]
//! sigma_ko = 0.75
//! kappa = 4.0
//! topk = 5
//!
//! [ssl]
//! noise_std_deg = 0.0
//! hfov_deg = 58.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::DEFAULT_TOP_K;
use crate::perception::SslConfig;
use crate::{DemonstrativeModel, PointingModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub sigma_ko: f64,
    pub sigma_so: f64,
    pub sigma_a: f64,
    pub lambda_a: f64,
    pub kappa: f64,
    pub topk: usize,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let d = DemonstrativeModel::default();
        Self {
            sigma_ko: d.sigma_ko,
            sigma_so: d.sigma_so,
            sigma_a: d.sigma_a,
            lambda_a: d.pointer_tip_distance,
            kappa: PointingModel::default().kappa,
            topk: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SslSection {
    pub noise_std_deg: f64,
    /// Defaults to half of `hfov_deg`.
    pub threshold_deg: Option<f64>,
    pub hfov_deg: f64,
}

impl Default for SslSection {
    fn default() -> Self {
        Self {
            noise_std_deg: 0.0,
            threshold_deg: None,
            hfov_deg: 58.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub estimators: EstimatorSection,
    pub ssl: SslSection,
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::parse("config", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn demonstrative(&self) -> DemonstrativeModel {
        DemonstrativeModel {
            sigma_ko: self.estimators.sigma_ko,
            sigma_so: self.estimators.sigma_so,
            sigma_a: self.estimators.sigma_a,
            pointer_tip_distance: self.estimators.lambda_a,
        }
    }

    pub fn pointing(&self) -> PointingModel {
        PointingModel {
            kappa: self.estimators.kappa,
        }
    }

    pub fn ssl_config(&self) -> SslConfig {
        SslConfig::from_degrees(self.ssl.noise_std_deg, self.ssl.threshold_deg, self.ssl.hfov_deg)
    }

    pub fn validate(&self) -> Result<()> {
        self.demonstrative().validate()?;
        self.pointing().validate()?;
        self.ssl_config().validate()?;
        if self.estimators.topk == 0 {
            return Err(Error::Config("topk must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        let c = EngineConfig::from_toml_str("").unwrap();
        assert_eq!(c, EngineConfig::default());
        assert_eq!(c.estimators.topk, 5);
        assert!((c.ssl_config().success_threshold - 29f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn partial_sections_override() {
        let c =
            EngineConfig::from_toml_str("[estimators]\nkappa = 8.0\n[ssl]\nnoise_std_deg = 15\nthreshold_deg = 20\n")
                .unwrap();
        assert_eq!(c.estimators.kappa, 8.0);
        assert_eq!(c.estimators.sigma_so, 1.0);
        assert!((c.ssl_config().noise_std - 15f64.to_radians()).abs() < 1e-15);
        assert!((c.ssl_config().success_threshold - 20f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            EngineConfig::from_toml_str("[estimators]\nsigma = 1"),
            Err(Error::Parse { .. })
        ));
        assert!(EngineConfig::from_toml_str("[estimators]\nsigma_ko = -1.0").is_err());
        assert!(EngineConfig::from_toml_str("[estimators]\ntopk = 0").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = EngineConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(EngineConfig::from_toml_str(&text).unwrap(), c);
    }
}
