//! Scenario files: one user pose, one target, three query levels.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::load_map;
use crate::query::{extract_demonstrative, extract_terms, normalize_text, DemonstrativeLexicon, QueryLevel};
use crate::resolver::SceneAttributes;
use crate::{SemanticMap, UserObservation, Vec3};

pub const SCENARIO_SUFFIX: &str = ".scenario.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPose {
    #[serde(default)]
    pub eye: Option<Vec3>,
    #[serde(default)]
    pub wrist: Option<Vec3>,
    /// Radians, robot frame.
    pub true_bearing: f64,
    pub visible_initially: bool,
    pub has_pointing: bool,
}

impl UserPose {
    pub fn observation(&self) -> UserObservation {
        UserObservation {
            eye: self.eye,
            wrist: self.wrist,
            has_pointing: self.has_pointing,
            visible_initially: self.visible_initially,
            true_bearing: self.true_bearing,
            ssl_bearing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelQueries {
    #[serde(rename = "1")]
    pub level1: String,
    #[serde(rename = "2")]
    pub level2: String,
    #[serde(rename = "3")]
    pub level3: String,
}

impl LevelQueries {
    pub fn get(&self, level: QueryLevel) -> &str {
        match level {
            QueryLevel::L1 => &self.level1,
            QueryLevel::L2 => &self.level2,
            QueryLevel::L3 => &self.level3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Map file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_ref: Option<PathBuf>,
    /// Inline map; takes precedence over `map_ref`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<SemanticMap>,
    pub user: UserPose,
    pub robot_position: Vec3,
    pub queries: LevelQueries,
    pub ground_truth_target: String,
    pub attributes: SceneAttributes,
    pub seed: u64,
}

/// A scenario with its map resolved and checked.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub map: Arc<SemanticMap>,
}

impl LoadedScenario {
    pub fn new(mut scenario: Scenario, map: Arc<SemanticMap>, lexicon: &DemonstrativeLexicon) -> Result<Self> {
        scenario.map = None;
        validate(&scenario, &map, lexicon)?;
        Ok(Self { scenario, map })
    }

    pub fn id(&self) -> &str {
        &self.scenario.id
    }
}

fn validate(s: &Scenario, map: &SemanticMap, lexicon: &DemonstrativeLexicon) -> Result<()> {
    map.ensure_non_empty()?;
    let v = |m: String| Err(Error::Validation(format!("scenario {}: {m}", s.id)));
    if map.get(&s.ground_truth_target).is_none() {
        return v(format!(
            "ground_truth_target {:?} is not in the map",
            s.ground_truth_target
        ));
    }
    if !s.attributes.contains_key(&s.ground_truth_target) {
        return v("attribute table has no entry for the target".into());
    }
    if let Some(id) = s.attributes.keys().find(|id| map.get(id).is_none()) {
        return v(format!("attribute table names unknown object {id:?}"));
    }
    if !s.robot_position.is_finite() {
        return v("robot_position must be finite".into());
    }
    s.user
        .observation()
        .validate()
        .map_err(|e| Error::Validation(format!("scenario {}: {e}", s.id)))?;

    // Levels must strip information monotonically and keep the demonstrative.
    let vocab = map.class_vocabulary();
    let parse = |t: &str| {
        let norm = normalize_text(t, lexicon);
        let (class, feats) = extract_terms(&norm, lexicon, Some(&vocab));
        (extract_demonstrative(t, lexicon), class, feats)
    };
    let (s1, c1, f1) = parse(&s.queries.level1);
    let (s2, c2, f2) = parse(&s.queries.level2);
    let (s3, c3, f3) = parse(&s.queries.level3);
    if s1 != s2 || s2 != s3 {
        return v(format!(
            "query levels disagree on the demonstrative ({s1:?}, {s2:?}, {s3:?})"
        ));
    }
    if !f2.is_empty() || c2 != c1 {
        return v("level 2 must be level 1 without feature terms".into());
    }
    if c3.is_some() || !f3.is_empty() {
        return v("level 3 must contain only a demonstrative".into());
    }
    let _ = f1;
    Ok(())
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

fn map_for(
    scenario: &Scenario,
    path: &Path,
    cache: &mut HashMap<PathBuf, Arc<SemanticMap>>,
) -> Result<Arc<SemanticMap>> {
    if let Some(m) = &scenario.map {
        return Ok(Arc::new(m.clone()));
    }
    let rel = scenario
        .map_ref
        .as_ref()
        .ok_or_else(|| Error::Validation(format!("scenario {} has neither map nor map_ref", scenario.id)))?;
    let full = path.parent().unwrap_or(Path::new(".")).join(rel);
    if let Some(m) = cache.get(&full) {
        return Ok(m.clone());
    }
    let m = Arc::new(load_map(&full)?);
    cache.insert(full, m.clone());
    Ok(m)
}

pub fn load_scenario(path: impl AsRef<Path>, lexicon: &DemonstrativeLexicon) -> Result<LoadedScenario> {
    let path = path.as_ref();
    let s = read_scenario(path)?;
    let map = map_for(&s, path, &mut HashMap::new())?;
    LoadedScenario::new(s, map, lexicon)
}

/// Every `*.scenario.json` in `dir`, sorted by file name. Maps shared by
/// several scenarios are loaded once.
pub fn load_suite(dir: impl AsRef<Path>, lexicon: &DemonstrativeLexicon) -> Result<Vec<LoadedScenario>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(SCENARIO_SUFFIX))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Validation(format!(
            "no *{SCENARIO_SUFFIX} files in {}",
            dir.display()
        )));
    }
    let mut cache = HashMap::new();
    paths
        .iter()
        .map(|p| {
            let s = read_scenario(p)?;
            let map = map_for(&s, p, &mut cache)?;
            LoadedScenario::new(s, map, lexicon)
        })
        .collect()
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(s).map_err(|e| Error::parse("scenario", e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
