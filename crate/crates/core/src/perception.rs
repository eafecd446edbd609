//! User visibility, simulated sound source localization, and the
//! reorient-then-observe step that decides whether skeleton data exists.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec3};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct UserObservation<T> {
    pub eye: Option<Vec3<T>>,
    pub wrist: Option<Vec3<T>>,
    pub has_pointing: bool,
    pub visible_initially: bool,
    /// Bearing of the user in the robot frame, radians in `(-π, π]`.
    pub true_bearing: T,
    #[serde(default)]
    pub ssl_bearing: Option<T>,
}

impl<T: Scalar> UserObservation<T> {
    /// `(eye, wrist)` when both are present.
    pub fn skeleton(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        self.eye.zip(self.wrist)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eye.is_some() != self.wrist.is_some() {
            return Err(Error::Validation(
                "eye and wrist must both be present or both absent".into(),
            ));
        }
        if let Some((e, w)) = self.skeleton() {
            if !e.is_finite() || !w.is_finite() {
                return Err(Error::Validation("skeleton coordinates must be finite".into()));
            }
        }
        if !self.true_bearing.is_finite() {
            return Err(Error::Validation("true_bearing must be finite".into()));
        }
        Ok(())
    }

    /// Drops all skeleton-derived fields.
    pub fn stripped(mut self) -> Self {
        self.eye = None;
        self.wrist = None;
        self.has_pointing = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SslConfig {
    pub noise_std: f64,
    pub success_threshold: f64,
    pub hfov: f64,
}

impl SslConfig {
    /// Threshold defaults to half the camera's horizontal field of view.
    pub fn from_degrees(noise_std_deg: f64, threshold_deg: Option<f64>, hfov_deg: f64) -> Self {
        let hfov = hfov_deg.to_radians();
        Self {
            noise_std: noise_std_deg.to_radians(),
            success_threshold: threshold_deg.map_or(hfov / 2.0, f64::to_radians),
            hfov,
        }
    }

    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config("ssl noise_std must be finite and >= 0".into()));
        }
        if !(self.success_threshold.is_finite() && self.success_threshold >= 0.0) {
            return Err(Error::Config("ssl threshold must be finite and >= 0".into()));
        }
        if !(self.hfov.is_finite() && self.hfov > 0.0) {
            return Err(Error::Config("ssl hfov must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SslConfig {
    /// Noise-free localization, 58° camera, 29° gate.
    fn default() -> Self {
        Self::from_degrees(0.0, None, 58.0)
    }
}

/// Whether a bearing estimate falls within the gate around the truth.
pub fn ssl_gate(true_bearing: f64, estimate: f64, threshold: f64) -> bool {
    wrap_angle(estimate - true_bearing).abs() <= threshold
}

/// Draws a bearing estimate with wrapped Gaussian error; deterministic per seed.
pub fn simulate_ssl(true_bearing: f64, cfg: &SslConfig, seed: u64) -> (f64, bool) {
    let noise = if cfg.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Normal::new(0.0, cfg.noise_std)
            .expect("validated noise std")
            .sample(&mut rng)
    } else {
        0.0
    };
    let estimate = wrap_angle(true_bearing + noise);
    (estimate, ssl_gate(true_bearing, estimate, cfg.success_threshold))
}

/// Applies the visibility/SSL gate to a scenario's ground-truth observation.
///
/// Visible users keep their skeleton. Hidden users keep it only when SSL is
/// enabled and the bearing estimate passes the gate (the robot then turns
/// and sees them); otherwise every skeleton field is removed.
pub fn acquire_observation<T: Scalar>(
    scenario_obs: &UserObservation<T>,
    cfg: &SslConfig,
    ssl_enabled: bool,
    seed: u64,
) -> UserObservation<T> {
    let mut obs = scenario_obs.clone();
    obs.ssl_bearing = None;
    if obs.visible_initially {
        return obs;
    }
    if ssl_enabled {
        let (estimate, success) = simulate_ssl(obs.true_bearing.to_f64_lossy(), cfg, seed);
        obs.ssl_bearing = Some(T::lit(estimate));
        if success {
            return obs;
        }
    }
    obs.stripped()
}
