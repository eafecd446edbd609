//! Scenario-based evaluation: episode runner, success rates, baselines and
//! benchmark reports.

mod baselines;
mod benchmark;
mod episode;
mod metrics;
mod scenario;
mod suite;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use baselines::baseline_vgpn;
pub use benchmark::{run_benchmark, write_report, BenchmarkReport, InvariantCheck, LevelCells, TableRow};
pub use episode::{episode_seed, EmbedderKind, Engine, EpisodeReestimator, EpisodeResult, Flags, Prepared};
pub use metrics::{sr, Cell};
pub use scenario::{
    load_scenario, load_suite, save_scenario, LevelQueries, LoadedScenario, Scenario, UserPose, SCENARIO_SUFFIX,
};
pub use suite::{generate_suite, write_suite, GeneratedSuite, SuiteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "miel")]
    Miel,
    #[serde(rename = "miel-no-ssl")]
    MielNoSsl,
    #[serde(rename = "miel-no-qa")]
    MielNoQa,
    #[serde(rename = "ecrap")]
    Ecrap,
    #[serde(rename = "vgpn")]
    Vgpn,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Miel,
        Method::MielNoSsl,
        Method::MielNoQa,
        Method::Ecrap,
        Method::Vgpn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Miel => "miel",
            Method::MielNoSsl => "miel-no-ssl",
            Method::MielNoQa => "miel-no-qa",
            Method::Ecrap => "ecrap",
            Method::Vgpn => "vgpn",
        }
    }

    /// SSL/Q&A switches the method runs with.
    pub fn flags(self) -> Flags {
        match self {
            Method::Miel => Flags { ssl: true, qa: true },
            Method::MielNoSsl => Flags { ssl: false, qa: true },
            Method::MielNoQa => Flags { ssl: true, qa: false },
            Method::Ecrap | Method::Vgpn => Flags { ssl: false, qa: false },
        }
    }

    /// Whether the method produces a shortlist (and hence a Top-5 figure).
    pub fn has_shortlist(self) -> bool {
        self != Method::Vgpn
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL.into_iter().find(|m| m.as_str() == s.trim()).ok_or_else(|| {
            Error::Config(format!(
                "unknown method {s:?} (expected one of miel, miel-no-ssl, miel-no-qa, ecrap, vgpn)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Visible,
    Hidden,
}

impl Visibility {
    pub const BOTH: [Visibility; 2] = [Visibility::Visible, Visibility::Hidden];

    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Visible => "visible",
            Visibility::Hidden => "hidden",
        }
    }
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Visibility {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "visible" => Ok(Visibility::Visible),
            "hidden" => Ok(Visibility::Hidden),
            other => Err(Error::Config(format!(
                "unknown visibility {other:?} (expected visible or hidden)"
            ))),
        }
    }
}
