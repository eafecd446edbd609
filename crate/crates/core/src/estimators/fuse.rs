use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::ScoreDistribution;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RankedObject<T> {
    pub object_id: String,
    pub probability: T,
}

/// Normalized product of the estimator distributions and its top-k prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FusedRanking<T> {
    pub distribution: ScoreDistribution<T>,
    pub shortlist: Vec<RankedObject<T>>,
}

impl<T: Scalar> FusedRanking<T> {
    pub fn head(&self) -> &RankedObject<T> {
        &self.shortlist[0]
    }

    pub fn contains(&self, id: &str) -> bool {
        self.shortlist.iter().any(|r| r.object_id == id)
    }

    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.shortlist.iter().position(|r| r.object_id == id)
    }
}

/// Top `k` entries by probability; ties broken by lexicographic id.
pub fn top_k<T: Scalar>(dist: &ScoreDistribution<T>, k: usize) -> Vec<RankedObject<T>> {
    let mut r = dist.ranking();
    r.truncate(k);
    r
}

/// Fuses any number of aligned distributions by normalized product.
///
/// Works in log space so long products of small densities cannot underflow;
/// a zero in any factor stays zero.
pub fn fuse_many<T: Scalar>(factors: &[&ScoreDistribution<T>], k: usize) -> Result<FusedRanking<T>> {
    if k == 0 {
        return Err(Error::Config("top-k must be at least 1".into()));
    }
    let first = factors.first().ok_or(Error::EmptyInput("no distributions to fuse"))?;
    if first.is_empty() {
        return Err(Error::EmptyMap);
    }
    if factors
        .iter()
        .any(|f| !f.aligned_with(first) || f.p.len() != first.object_ids.len())
    {
        return Err(Error::Misaligned);
    }
    let log_w = (0..first.len())
        .map(|i| factors.iter().map(|f| f.p[i].ln()).fold(T::zero(), |a, b| a + b))
        .collect();
    let distribution = ScoreDistribution::from_log_weights(first.object_ids.clone(), log_w)?;
    let shortlist = top_k(&distribution, k);
    Ok(FusedRanking {
        distribution,
        shortlist,
    })
}

/// `fused_n ∝ P1_n · P2_n · P3_n`, returning the top `k`.
pub fn fuse<T: Scalar>(
    p1: &ScoreDistribution<T>,
    p2: &ScoreDistribution<T>,
    p3: &ScoreDistribution<T>,
    k: usize,
) -> Result<FusedRanking<T>> {
    fuse_many(&[p1, p2, p3], k)
}
