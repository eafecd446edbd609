//! Synthetic scenario suites.
//!
//! Each user position gets its own generated room. Targets are moved into
//! the region their demonstrative refers to (near the user for "this", near
//! the robot for "that", far from both for "that ... over there"), and each
//! target gets identical-looking copies elsewhere in the room so that only
//! spatial cues can tell them apart.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{generate_synthetic_scene, save_map, ObjectAttributes, RoomBounds, SceneGenConfig};
use crate::query::{DemonstrativeLexicon, DemonstrativeSeries};
use crate::{ObjectEntry, SemanticMap, Vec3};

use super::{save_scenario, LevelQueries, LoadedScenario, Scenario, UserPose, SCENARIO_SUFFIX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub positions: usize,
    pub targets_per_position: usize,
    /// Identical copies of each target placed away from it.
    pub lookalikes: usize,
    /// Objects per room, look-alikes included.
    pub objects: usize,
    pub classes: usize,
    pub robot_position: Vec3,
    /// Std-dev of the isotropic perturbation added to the unit pointing direction.
    pub pointing_noise: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            positions: 6,
            targets_per_position: 5,
            lookalikes: 2,
            objects: 114,
            classes: 39,
            robot_position: Vec3::new(4.0, 3.0, 1.0),
            pointing_noise: 0.08,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedSuite {
    /// `(file name, map)` pairs; scenarios refer to them by file name.
    pub maps: Vec<(String, SemanticMap)>,
    pub scenarios: Vec<Scenario>,
}

impl GeneratedSuite {
    /// In-memory equivalent of writing the suite and loading it back.
    pub fn load(&self, lexicon: &DemonstrativeLexicon) -> Result<Vec<LoadedScenario>> {
        let maps: BTreeMap<&str, std::sync::Arc<SemanticMap>> = self
            .maps
            .iter()
            .map(|(n, m)| (n.as_str(), std::sync::Arc::new(m.clone())))
            .collect();
        self.scenarios
            .iter()
            .map(|s| {
                let name = s.map_ref.as_ref().and_then(|p| p.to_str()).unwrap_or_default();
                let map = maps
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::Validation(format!("scenario {} refers to unknown map {name:?}", s.id)))?;
                LoadedScenario::new(s.clone(), map, lexicon)
            })
            .collect()
    }
}

const CYCLE: [DemonstrativeSeries; 5] = [
    DemonstrativeSeries::Ko,
    DemonstrativeSeries::A,
    DemonstrativeSeries::So,
    DemonstrativeSeries::A,
    DemonstrativeSeries::Ko,
];

fn horizontal(a: Vec3, b: Vec3) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn random_in_room(rng: &mut ChaCha8Rng, room: &RoomBounds, margin: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(margin..=room.extent.x - margin),
        rng.random_range(margin..=room.extent.y - margin),
        rng.random_range(0.0..=room.max_object_height.min(room.extent.z)),
    )
}

/// A point satisfying `ok`, falling back to the last draw after many tries.
fn sample_where(rng: &mut ChaCha8Rng, room: &RoomBounds, mut ok: impl FnMut(Vec3) -> bool) -> Vec3 {
    let mut p = random_in_room(rng, room, 0.2);
    for _ in 0..2000 {
        if ok(p) {
            break;
        }
        p = random_in_room(rng, room, 0.2);
    }
    p
}

/// Near the user at reaching distance, or near the robot.
fn ring_point(rng: &mut ChaCha8Rng, room: &RoomBounds, center: Vec3, r: (f64, f64)) -> Vec3 {
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let d = rng.random_range(r.0..=r.1);
    Vec3::new(
        (center.x + d * theta.cos()).clamp(0.1, room.extent.x - 0.1),
        (center.y + d * theta.sin()).clamp(0.1, room.extent.y - 0.1),
        rng.random_range(0.4..=1.2_f64.min(room.max_object_height)),
    )
}

fn queries(series: DemonstrativeSeries, color: &str, class: &str) -> LevelQueries {
    let (dem, tail) = match series {
        DemonstrativeSeries::Ko => ("this", ""),
        DemonstrativeSeries::A => ("that", " over there"),
        _ => ("that", ""),
    };
    let bare = match series {
        DemonstrativeSeries::A => "that one over there".to_string(),
        _ => dem.to_string(),
    };
    LevelQueries {
        level1: format!("Bring me {dem} {color} {class}{tail}."),
        level2: format!("Bring me {dem} {class}{tail}."),
        level3: format!("Bring me {bare}."),
    }
}

pub fn generate_suite(cfg: &SuiteConfig) -> Result<GeneratedSuite> {
    if cfg.positions == 0 || cfg.targets_per_position == 0 {
        return Err(Error::Config("suite needs at least one position and one target".into()));
    }
    let extra = cfg.targets_per_position * cfg.lookalikes;
    if cfg.objects < extra + cfg.targets_per_position.max(cfg.classes) {
        return Err(Error::Config(format!(
            "{} objects leave no room for {} targets with {} look-alikes each",
            cfg.objects, cfg.targets_per_position, cfg.lookalikes
        )));
    }
    let room = RoomBounds::default();
    let robot = cfg.robot_position;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut maps = Vec::new();
    let mut scenarios = Vec::new();

    for pos in 0..cfg.positions {
        let scene_cfg = SceneGenConfig::with_counts(cfg.objects - extra, cfg.classes);
        let scene = generate_synthetic_scene::<f64>(&scene_cfg, rng.random())?;
        let mut objects: Vec<ObjectEntry> = scene.map.objects().to_vec();
        let mut attrs: Vec<ObjectAttributes> = objects.iter().map(|o| scene.attributes[&o.id].clone()).collect();

        let eye_xy = sample_where(&mut rng, &room, |p| {
            horizontal(p, robot) >= 2.0
                && p.x > 0.8
                && p.y > 0.8
                && p.x < room.extent.x - 0.8
                && p.y < room.extent.y - 0.8
        });
        let eye = Vec3::new(eye_xy.x, eye_xy.y, rng.random_range(1.5..=1.7));

        // Targets of distinct classes.
        let mut order: Vec<usize> = (0..objects.len()).collect();
        order.shuffle(&mut rng);
        let mut targets: Vec<usize> = Vec::new();
        for i in order {
            if targets.len() == cfg.targets_per_position {
                break;
            }
            if targets
                .iter()
                .all(|&t| objects[t].class_label != objects[i].class_label)
            {
                targets.push(i);
            }
        }
        if targets.len() < cfg.targets_per_position {
            return Err(Error::Config(
                "not enough distinct classes for the requested targets".into(),
            ));
        }

        let mut series_of = Vec::new();
        for (k, &t) in targets.iter().enumerate() {
            let series = CYCLE[k % CYCLE.len()];
            let p = match series {
                DemonstrativeSeries::Ko => ring_point(&mut rng, &room, eye, (0.5, 0.9)),
                DemonstrativeSeries::So => {
                    let p = ring_point(&mut rng, &room, robot, (0.4, 0.9));
                    if horizontal(p, eye) < 1.5 {
                        sample_where(&mut rng, &room, |q| {
                            horizontal(q, robot) <= 1.0 && horizontal(q, eye) >= 1.5
                        })
                    } else {
                        p
                    }
                }
                _ => sample_where(&mut rng, &room, |q| {
                    horizontal(q, eye) >= 2.5 && horizontal(q, robot) >= 1.5
                }),
            };
            objects[t].position = p;
            series_of.push(series);
        }
        for &t in &targets {
            let origin = objects[t].position;
            for _ in 0..cfg.lookalikes {
                let mut copy = objects[t].clone();
                copy.position = sample_where(&mut rng, &room, |q| q.distance(origin) >= 2.5);
                objects.push(copy);
                attrs.push(attrs[t].clone());
            }
        }

        // Shuffle before numbering so ids carry no hint of which copy is the target.
        let mut perm: Vec<usize> = (0..objects.len()).collect();
        perm.shuffle(&mut rng);
        let mut new_id = vec![String::new(); objects.len()];
        let mut entries = Vec::with_capacity(objects.len());
        let mut table = BTreeMap::new();
        for (rank, &old) in perm.iter().enumerate() {
            let id = format!("obj_{rank:03}");
            new_id[old] = id.clone();
            let mut e = objects[old].clone();
            e.id = id.clone();
            e.image_ref = Some(format!("images/{id}.jpg"));
            entries.push(e);
            table.insert(id, attrs[old].clone());
        }
        let map = SemanticMap::new(format!("room_{pos}"), scene_cfg.d_text, scene_cfg.d_vis, entries)?;
        let map_name = format!("map_p{pos}.json");

        for (k, (&t, &series)) in targets.iter().zip(&series_of).enumerate() {
            let target_pos = objects[t].position;
            let dir = (target_pos - eye).normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
            let jitter = Vec3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) * cfg.pointing_noise;
            let dir = (dir + jitter).normalized().unwrap_or(dir);
            let wrist = eye + dir * 0.6;
            let a = &attrs[t];
            let color = a.features.first().cloned().unwrap_or_default();
            scenarios.push(Scenario {
                id: format!("p{pos}_t{k}"),
                map_ref: Some(map_name.clone().into()),
                map: None,
                user: UserPose {
                    eye: Some(eye),
                    wrist: Some(wrist),
                    true_bearing: (eye.y - robot.y).atan2(eye.x - robot.x),
                    visible_initially: true,
                    has_pointing: true,
                },
                robot_position: robot,
                queries: queries(series, &color, &a.class_label),
                ground_truth_target: new_id[t].clone(),
                attributes: table.clone(),
                seed: rng.random(),
            });
        }
        maps.push((map_name, map));
    }
    Ok(GeneratedSuite { maps, scenarios })
}

/// Writes maps and `<id>.scenario.json` files into `dir`.
pub fn write_suite(suite: &GeneratedSuite, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, map) in &suite.maps {
        save_map(map, dir.join(name))?;
    }
    for s in &suite.scenarios {
        save_scenario(s, dir.join(format!("{}{SCENARIO_SUFFIX}", s.id)))?;
    }
    Ok(())
}
