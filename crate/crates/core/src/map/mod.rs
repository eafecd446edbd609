//! The 3D semantic map: object positions, class labels and the two embedding
//! spaces (label text and visual) the estimators score against.
//!
//! A map is validated once on construction and is immutable afterwards, so a
//! single instance can be shared by any number of concurrent episodes.

mod generate;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Scalar;

pub use generate::{
    generate_synthetic_map, generate_synthetic_scene, DistractorPolicy, GeneratedScene, ObjectAttributes, RoomBounds,
    SceneGenConfig, DEFAULT_CLASS_VOCABULARY,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ObjectEntry<T> {
    pub id: String,
    pub class_label: String,
    pub position: Vec3<T>,
    pub label_embedding: Vec<T>,
    pub visual_embedding: Vec<T>,
    #[serde(default)]
    pub image_ref: Option<String>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
struct RawMap<T> {
    frame_id: String,
    d_text: usize,
    d_vis: usize,
    objects: Vec<ObjectEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct SemanticMap<T> {
    frame_id: String,
    d_text: usize,
    d_vis: usize,
    objects: Vec<ObjectEntry<T>>,
}

impl<T: Scalar> TryFrom<RawMap<T>> for SemanticMap<T> {
    type Error = Error;

    fn try_from(raw: RawMap<T>) -> Result<Self> {
        SemanticMap::new(raw.frame_id, raw.d_text, raw.d_vis, raw.objects)
    }
}

/// Rescales `v` to unit L2 norm. Vectors already at unit norm to within a few
/// ulps are returned untouched so that save/load cycles are bit-exact.
pub(crate) fn normalize_embedding<T: Scalar>(v: &mut [T], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation(format!("{what} has non-finite entries")));
    }
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm == T::zero() {
        return Err(Error::Validation(format!("{what} has zero norm")));
    }
    if (norm - T::one()).abs() <= T::epsilon() * T::lit(4.0) {
        return Ok(());
    }
    let inv = T::one() / norm;
    v.iter_mut().for_each(|x| *x *= inv);
    Ok(())
}

impl<T: Scalar> SemanticMap<T> {
    /// Validates and normalizes a set of objects into a map.
    pub fn new(
        frame_id: impl Into<String>,
        d_text: usize,
        d_vis: usize,
        mut objects: Vec<ObjectEntry<T>>,
    ) -> Result<Self> {
        if d_text == 0 || d_vis == 0 {
            return Err(Error::Validation("embedding dimensions must be positive".into()));
        }
        let mut seen = HashSet::with_capacity(objects.len());
        for obj in &mut objects {
            if !seen.insert(obj.id.clone()) {
                return Err(Error::Validation(format!("duplicate object id \"{}\"", obj.id)));
            }
            if !obj.position.is_finite() {
                return Err(Error::Validation(format!(
                    "object \"{}\" has a non-finite position",
                    obj.id
                )));
            }
            if obj.label_embedding.len() != d_text {
                return Err(Error::DimensionMismatch {
                    what: format!("label_embedding of \"{}\"", obj.id),
                    expected: d_text,
                    found: obj.label_embedding.len(),
                });
            }
            if obj.visual_embedding.len() != d_vis {
                return Err(Error::DimensionMismatch {
                    what: format!("visual_embedding of \"{}\"", obj.id),
                    expected: d_vis,
                    found: obj.visual_embedding.len(),
                });
            }
            normalize_embedding(&mut obj.label_embedding, &format!("label_embedding of \"{}\"", obj.id))?;
            normalize_embedding(
                &mut obj.visual_embedding,
                &format!("visual_embedding of \"{}\"", obj.id),
            )?;
        }
        Ok(Self {
            frame_id: frame_id.into(),
            d_text,
            d_vis,
            objects,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str::<RawMap<T>>(s)
            .map_err(|e| Error::parse("semantic map", e))
            .and_then(Self::try_from)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serialization is infallible")
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn embedding_dims(&self) -> (usize, usize) {
        (self.d_text, self.d_vis)
    }

    pub fn objects(&self) -> &[ObjectEntry<T>] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ObjectEntry<T>> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.objects.iter().map(|o| o.id.clone()).collect()
    }

    /// Distinct class labels in first-seen order.
    pub fn class_vocabulary(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.objects
            .iter()
            .filter(|o| seen.insert(o.class_label.as_str()))
            .map(|o| o.class_label.clone())
            .collect()
    }

    /// Errors with [`Error::EmptyMap`] when there is nothing to estimate over.
    pub fn ensure_non_empty(&self) -> Result<()> {
        if self.objects.is_empty() {
            Err(Error::EmptyMap)
        } else {
            Ok(())
        }
    }
}

pub fn load_map<T: Scalar>(path: impl AsRef<Path>) -> Result<SemanticMap<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SemanticMap::from_json_str(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

pub fn save_map<T: Scalar>(map: &SemanticMap<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, map.to_json_string()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_object_json(second_label: &str, second_id: &str) -> String {
        format!(
            r#"{{
              "frame_id": "map",
              "d_text": 8,
              "d_vis": 4,
              "objects": [
                {{ "id": "obj_1", "class_label": "cup", "position": [1.0, 2.0, 0.5],
                   "label_embedding": [1,0,0,0,0,0,0,0], "visual_embedding": [0,1,0,0],
                   "image_ref": "img/obj_1.jpg" }},
                {{ "id": "{second_id}", "class_label": "book", "position": [0.0, 0.0, 0.0],
                   "label_embedding": {second_label}, "visual_embedding": [0,0,0,1],
                   "image_ref": null }}
              ]
            }}"#
        )
    }

    #[test]
    fn loads_two_objects_with_unit_norms() {
        let m = SemanticMap::<f64>::from_json_str(&two_object_json("[0,1,0,0,0,0,0,0]", "obj_2")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.embedding_dims(), (8, 4));
        for o in m.objects() {
            let n: f64 = o.label_embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.objects()[0].image_ref.as_deref(), Some("img/obj_1.jpg"));
        assert_eq!(m.objects()[1].image_ref, None);
    }

    #[test]
    fn renormalizes_norm_two_vector() {
        let m = SemanticMap::<f64>::from_json_str(&two_object_json("[0,2,0,0,0,0,0,0]", "obj_2")).unwrap();
        assert_eq!(
            m.objects()[1].label_embedding,
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn rejects_duplicate_id() {
        let err = SemanticMap::<f64>::from_json_str(&two_object_json("[0,1,0,0,0,0,0,0]", "obj_1")).unwrap_err();
        assert!(err.to_string().contains("obj_1"), "{err}");
        assert!(err.is_schema_error());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = SemanticMap::<f64>::from_json_str(&two_object_json("[0,1,0]", "obj_2")).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 8,
                found: 3,
                ..
            }
        ));
    }

    #[test]
    fn rejects_malformed_json() {
        let err = SemanticMap::<f64>::from_json_str("{ \"frame_id\": ").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn rejects_zero_embedding() {
        let err = SemanticMap::<f64>::from_json_str(&two_object_json("[0,0,0,0,0,0,0,0]", "obj_2")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_non_finite_position() {
        let obj = ObjectEntry {
            id: "a".into(),
            class_label: "cup".into(),
            position: Vec3::new(f64::NAN, 0.0, 0.0),
            label_embedding: vec![1.0],
            visual_embedding: vec![1.0],
            image_ref: None,
        };
        assert!(SemanticMap::new("map", 1, 1, vec![obj]).is_err());
    }

    #[test]
    fn empty_map_loads_but_refuses_estimation() {
        let m = SemanticMap::<f64>::new("map", 2, 2, vec![]).unwrap();
        assert!(matches!(m.ensure_non_empty(), Err(Error::EmptyMap)));
    }

    #[test]
    fn file_round_trip() {
        let m = SemanticMap::<f64>::from_json_str(&two_object_json("[0.3,0.4,0,0,0,0,0,0]", "obj_2")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_map(&m, &p).unwrap();
        let back: SemanticMap<f64> = load_map(&p).unwrap();
        assert_eq!(back, m);
        assert!(matches!(
            load_map::<f64>(dir.path().join("missing.json")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn f32_maps_load() {
        let m = SemanticMap::<f32>::from_json_str(&two_object_json("[0,2,0,0,0,0,0,0]", "obj_2")).unwrap();
        assert_eq!(m.objects()[1].label_embedding[1], 1.0f32);
    }
}
