//! The three target-object estimators and their fusion.
//!
//! Each estimator returns a [`ScoreDistribution`] over every object in the
//! map, in map order. Estimators that lack their inputs (no skeleton, no
//! spatial demonstrative, content-free query) return the uniform
//! distribution, which is neutral under fusion.

mod demonstrative;
mod density;
mod fuse;
mod linguistic;
mod pointing;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::map::SemanticMap;
use crate::perception::UserObservation;
use crate::query::ParsedQuery;
use crate::scalar::Scalar;

pub(crate) use demonstrative::sigma_for;
pub use demonstrative::{demonstrative_mean, estimate_demonstrative};
pub use density::{bessel_i0, bessel_i0e, gaussian3_log_pdf, gaussian3_pdf, von_mises_log_pdf, von_mises_pdf};
pub use fuse::{fuse, fuse_many, top_k, FusedRanking, RankedObject, DEFAULT_TOP_K};
pub use linguistic::{cosine_to_unit, estimate_linguistic};
pub use pointing::{estimate_pointing, pointing_angle};

/// Per-object probabilities aligned with `object_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ScoreDistribution<T> {
    pub object_ids: Vec<String>,
    pub p: Vec<T>,
}

impl<T: Scalar> ScoreDistribution<T> {
    pub fn uniform(object_ids: Vec<String>) -> Self {
        let n = T::lit(object_ids.len() as f64);
        let p = vec![T::one() / n; object_ids.len()];
        Self { object_ids, p }
    }

    pub fn uniform_over<U: Scalar>(map: &SemanticMap<U>) -> Self {
        Self::uniform(map.ids())
    }

    /// Normalizes non-negative weights. All-zero weights give the uniform
    /// distribution.
    pub fn from_weights(object_ids: Vec<String>, weights: Vec<T>) -> Result<Self> {
        if object_ids.len() != weights.len() {
            return Err(Error::Misaligned);
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::NonFinite("score weight"));
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Ok(Self::uniform(object_ids));
        }
        let p = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { object_ids, p })
    }

    /// Normalizes log-weights with max subtraction; `-inf` maps to zero
    /// probability. If every entry is `-inf` the result is uniform.
    pub fn from_log_weights(object_ids: Vec<String>, log_w: Vec<T>) -> Result<Self> {
        if object_ids.len() != log_w.len() {
            return Err(Error::Misaligned);
        }
        if log_w.iter().any(|w| w.is_nan() || *w == T::infinity()) {
            return Err(Error::NonFinite("log score"));
        }
        let max = log_w.iter().copied().fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            return Ok(Self::uniform(object_ids));
        }
        let w = log_w.into_iter().map(|l| (l - max).exp()).collect();
        Self::from_weights(object_ids, w)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<T> {
        self.object_ids.iter().position(|o| o == id).map(|i| self.p[i])
    }

    pub fn is_uniform(&self) -> bool {
        self.p.windows(2).all(|w| w[0] == w[1])
    }

    /// Non-negative entries summing to one within [`Scalar::NORM_TOL`].
    pub fn is_valid(&self) -> bool {
        let sum: T = self.p.iter().copied().sum();
        self.p.len() == self.object_ids.len()
            && self.p.iter().all(|x| x.is_finite() && *x >= T::zero())
            && (sum - T::one()).abs() <= T::NORM_TOL
    }

    /// Objects ordered by descending probability, ties by ascending id.
    pub fn ranking(&self) -> Vec<RankedObject<T>> {
        let mut r: Vec<RankedObject<T>> = self
            .object_ids
            .iter()
            .zip(&self.p)
            .map(|(id, &p)| RankedObject {
                object_id: id.clone(),
                probability: p,
            })
            .collect();
        r.sort_by(|a, b| {
            b.probability
                .partial_cmp(&a.probability)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.object_id.cmp(&b.object_id))
        });
        r
    }

    pub fn argmax(&self) -> Option<RankedObject<T>> {
        self.ranking().into_iter().next()
    }

    pub(crate) fn aligned_with(&self, other: &Self) -> bool {
        self.object_ids == other.object_ids
    }
}

/// Isotropic Gaussian spreads for the demonstrative regions, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DemonstrativeModel<T> {
    pub sigma_ko: T,
    pub sigma_so: T,
    pub sigma_a: T,
    /// Distance from the wrist along the pointing ray to the distal-region mean.
    pub pointer_tip_distance: T,
}

impl<T: Scalar> Default for DemonstrativeModel<T> {
    fn default() -> Self {
        Self {
            sigma_ko: T::lit(0.75),
            sigma_so: T::lit(1.0),
            sigma_a: T::lit(1.5),
            pointer_tip_distance: T::lit(2.0),
        }
    }
}

impl<T: Scalar> DemonstrativeModel<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_ko", self.sigma_ko),
            ("sigma_so", self.sigma_so),
            ("sigma_a", self.sigma_a),
            ("pointer_tip_distance", self.pointer_tip_distance),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::Config(format!("{name} must be a positive number, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PointingModel<T> {
    pub kappa: T,
}

impl<T: Scalar> Default for PointingModel<T> {
    fn default() -> Self {
        Self { kappa: T::lit(4.0) }
    }
}

impl<T: Scalar> PointingModel<T> {
    pub fn validate(&self) -> Result<()> {
        if self.kappa.is_finite() && self.kappa >= T::zero() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "kappa must be finite and >= 0, got {}",
                self.kappa
            )))
        }
    }
}

/// All per-estimator distributions for one query/observation, plus their fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Estimates<T> {
    pub linguistic: ScoreDistribution<T>,
    pub demonstrative: ScoreDistribution<T>,
    pub pointing: ScoreDistribution<T>,
    pub fused: FusedRanking<T>,
}

/// Runs the three estimators and fuses them into a top-`k` shortlist.
pub fn estimate_all<T: Scalar>(
    map: &SemanticMap<T>,
    query: &ParsedQuery<T>,
    obs: &UserObservation<T>,
    robot_pos: Vec3<T>,
    demonstrative: &DemonstrativeModel<T>,
    pointing: &PointingModel<T>,
    k: usize,
) -> Result<Estimates<T>> {
    let p1 = estimate_linguistic(map, query)?;
    let p2 = estimate_demonstrative(map, query.series, obs, robot_pos, demonstrative)?;
    let p3 = estimate_pointing(map, obs, pointing)?;
    let fused = fuse(&p1, &p2, &p3, k)?;
    Ok(Estimates {
        linguistic: p1,
        demonstrative: p2,
        pointing: p3,
        fused,
    })
}
