//! Deterministic synthetic scenes for tests and benchmark suites.
//!
//! The PRNG is ChaCha8 seeded via `seed_from_u64`, so a (config, seed) pair
//! yields the same map on every platform.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::query::ToyEmbedder;
use crate::scalar::Scalar;

use super::{ObjectEntry, SemanticMap};

pub const DEFAULT_CLASS_VOCABULARY: &[&str] = &[
    "cup",
    "book",
    "bottle",
    "stuffed animal",
    "doll",
    "chair",
    "bed",
    "sofa",
    "desk",
    "table",
    "lamp",
    "pillow",
    "remote control",
    "smartphone",
    "laptop",
    "keyboard",
    "mouse",
    "clock",
    "vase",
    "plate",
    "bowl",
    "towel",
    "bag",
    "box",
    "shoe",
    "hat",
    "umbrella",
    "scissors",
    "pen",
    "notebook",
    "toothbrush",
    "tissue box",
    "trash can",
    "potted plant",
    "picture frame",
    "speaker",
    "cushion",
    "basket",
    "ball",
    "candle",
    "toy car",
    "kettle",
];

const COLORS: &[&str] = &[
    "red", "blue", "green", "yellow", "white", "black", "brown", "pink", "orange", "purple", "gray", "silver",
];
const SIZES: &[&str] = &["small", "large"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomBounds {
    /// Extent along x, y, z in meters; the room spans `[0, extent]` on each axis.
    pub extent: Vec3<f64>,
    /// Highest object placement (shelves, tables).
    pub max_object_height: f64,
}

impl Default for RoomBounds {
    fn default() -> Self {
        Self {
            extent: Vec3::new(8.0, 6.0, 2.5),
            max_object_height: 1.5,
        }
    }
}

impl RoomBounds {
    pub fn contains(&self, p: Vec3<f64>) -> bool {
        (0.0..=self.extent.x).contains(&p.x)
            && (0.0..=self.extent.y).contains(&p.y)
            && (0.0..=self.extent.z).contains(&p.z)
    }
}

/// How objects are spread over classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistractorPolicy {
    /// Class counts differ by at most one.
    Even,
    /// Every class gets `1 + n` instances (same-class distractors); leftover
    /// objects are spread evenly.
    Duplicates(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGenConfig {
    pub objects: usize,
    pub classes: usize,
    #[serde(default)]
    pub vocabulary: Option<Vec<String>>,
    #[serde(default)]
    pub room: RoomBounds,
    pub distractors: DistractorPolicy,
    pub d_text: usize,
    pub d_vis: usize,
    /// Minimum spacing between object centers; best effort.
    pub min_separation: f64,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            objects: 114,
            classes: 39,
            vocabulary: None,
            room: RoomBounds::default(),
            distractors: DistractorPolicy::Even,
            d_text: 64,
            d_vis: 64,
            min_separation: 0.2,
        }
    }
}

impl SceneGenConfig {
    pub fn with_counts(objects: usize, classes: usize) -> Self {
        Self {
            objects,
            classes,
            ..Self::default()
        }
    }

    fn class_names(&self) -> Result<Vec<String>> {
        let base: Vec<String> = match &self.vocabulary {
            Some(v) if v.is_empty() => return Err(Error::Config("class vocabulary is empty".into())),
            Some(v) => v.clone(),
            None => DEFAULT_CLASS_VOCABULARY.iter().map(|s| s.to_string()).collect(),
        };
        if self.classes > base.len() && self.vocabulary.is_some() {
            return Err(Error::Config(format!(
                "requested {} classes but vocabulary has {}",
                self.classes,
                base.len()
            )));
        }
        Ok((0..self.classes)
            .map(|i| base.get(i).cloned().unwrap_or_else(|| format!("item{i}")))
            .collect())
    }
}

/// Ground-truth appearance of one object, as an observer would describe it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectAttributes {
    pub class_label: String,
    #[serde(default)]
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GeneratedScene<T> {
    pub map: SemanticMap<T>,
    pub attributes: BTreeMap<String, ObjectAttributes>,
}

fn class_counts(cfg: &SceneGenConfig) -> Result<Vec<usize>> {
    let k = cfg.classes;
    let n = cfg.objects;
    let base = match cfg.distractors {
        DistractorPolicy::Even => 1,
        DistractorPolicy::Duplicates(d) => 1 + d,
    };
    if n < k * base {
        return Err(Error::Config(format!(
            "{n} objects cannot cover {k} classes with {base} instance(s) each"
        )));
    }
    let rest = n - k * base;
    Ok((0..k).map(|i| base + rest / k + usize::from(i < rest % k)).collect())
}

pub fn generate_synthetic_scene<T: Scalar>(cfg: &SceneGenConfig, seed: u64) -> Result<GeneratedScene<T>> {
    if cfg.objects < 1 {
        return Err(Error::Config("object count must be at least 1".into()));
    }
    if cfg.classes < 1 {
        return Err(Error::Config("class vocabulary is empty".into()));
    }
    if cfg.classes > cfg.objects {
        return Err(Error::Config(format!(
            "{} classes cannot be represented by {} objects",
            cfg.classes, cfg.objects
        )));
    }
    let names = cfg.class_names()?;
    let counts = class_counts(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    labels.shuffle(&mut rng);

    // Same-class objects get distinct colors while colors last.
    let mut palettes: Vec<Vec<&str>> = (0..cfg.classes)
        .map(|_| {
            let mut p = COLORS.to_vec();
            p.shuffle(&mut rng);
            p
        })
        .collect();

    let embedder = ToyEmbedder::new(cfg.d_text, cfg.d_vis);
    let room = cfg.room;
    let zmax = room.max_object_height.min(room.extent.z);
    let mut positions: Vec<Vec3<f64>> = Vec::with_capacity(cfg.objects);
    let mut objects = Vec::with_capacity(cfg.objects);
    let mut attributes = BTreeMap::new();
    let width = cfg.objects.saturating_sub(1).to_string().len().max(3);

    for (i, &c) in labels.iter().enumerate() {
        let mut pos = Vec3::zero();
        for _ in 0..64 {
            pos = Vec3::new(
                rng.random_range(0.0..=room.extent.x),
                rng.random_range(0.0..=room.extent.y),
                rng.random_range(0.0..=zmax),
            );
            if positions.iter().all(|p| p.distance(pos) >= cfg.min_separation) {
                break;
            }
        }
        positions.push(pos);

        let color = palettes[c]
            .pop()
            .unwrap_or_else(|| COLORS[rng.random_range(0..COLORS.len())]);
        let size = SIZES[rng.random_range(0..SIZES.len())];
        let features = vec![color.to_string(), size.to_string()];
        let class_label = names[c].clone();
        let id = format!("obj_{i:0width$}");

        let label_embedding = crate::query::EmbeddingProvider::<T>::embed_text(&embedder, &class_label)?;
        let visual_embedding = crate::query::EmbeddingProvider::<T>::embed_text_for_vision(
            &embedder,
            &format!("{} {}", features.join(" "), class_label),
        )?;
        objects.push(ObjectEntry {
            id: id.clone(),
            class_label: class_label.clone(),
            position: pos.cast(),
            label_embedding,
            visual_embedding,
            image_ref: Some(format!("images/{id}.jpg")),
        });
        attributes.insert(id, ObjectAttributes { class_label, features });
    }

    let map = SemanticMap::new("map", cfg.d_text, cfg.d_vis, objects)?;
    Ok(GeneratedScene { map, attributes })
}

pub fn generate_synthetic_map<T: Scalar>(cfg: &SceneGenConfig, seed: u64) -> Result<SemanticMap<T>> {
    generate_synthetic_scene(cfg, seed).map(|s| s.map)
}
