//! Success rates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::EpisodeResult;

/// Fraction of episodes whose target is rank 1 (`topk == 1`) or in the
/// shortlist (`topk == 5`).
pub fn sr(results: &[EpisodeResult], topk: usize) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no episode results"));
    }
    let hit = |r: &EpisodeResult| match topk {
        1 => Ok(r.success_top1),
        5 => Ok(r.success_top5),
        k => Err(Error::Config(format!(
            "success rate is defined for top-1 and top-5, not top-{k}"
        ))),
    };
    let mut n = 0usize;
    for r in results {
        n += usize::from(hit(r)?);
    }
    Ok(n as f64 / results.len() as f64)
}

/// One table cell: successes out of applicable episodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub successes: usize,
    pub n: usize,
}

impl Cell {
    pub fn add(&mut self, success: bool) {
        self.n += 1;
        self.successes += usize::from(success);
    }

    pub fn rate(&self) -> Option<f64> {
        (self.n > 0).then(|| self.successes as f64 / self.n as f64)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rate() {
            Some(r) => write!(f, "{r:.2} ({}/{})", self.successes, self.n),
            None => f.write_str("-"),
        }
    }
}
