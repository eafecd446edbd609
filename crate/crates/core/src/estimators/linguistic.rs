use crate::error::{Error, Result};
use crate::map::SemanticMap;
use crate::query::ParsedQuery;
use crate::scalar::Scalar;

use super::ScoreDistribution;

/// Maps a cosine in `[-1, 1]` to `[0, 1]` via `(1 + c) / 2`. Strictly
/// increasing, so per-factor rankings are unchanged.
pub fn cosine_to_unit<T: Scalar>(c: T) -> T {
    ((T::one() + c) * T::lit(0.5)).max(T::zero()).min(T::one())
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// P1: product of label-space and vision-space similarities, normalized.
///
/// Embeddings are unit-norm on both sides, so cosine is a dot product. A
/// query that says nothing beyond a demonstrative yields the uniform
/// distribution.
pub fn estimate_linguistic<T: Scalar>(map: &SemanticMap<T>, query: &ParsedQuery<T>) -> Result<ScoreDistribution<T>> {
    map.ensure_non_empty()?;
    let (d_text, d_vis) = map.embedding_dims();
    if query.text_embedding.len() != d_text {
        return Err(Error::DimensionMismatch {
            what: "query text embedding".into(),
            expected: d_text,
            found: query.text_embedding.len(),
        });
    }
    if query.vis_text_embedding.len() != d_vis {
        return Err(Error::DimensionMismatch {
            what: "query vision-text embedding".into(),
            expected: d_vis,
            found: query.vis_text_embedding.len(),
        });
    }
    if query.is_content_free() {
        return Ok(ScoreDistribution::uniform_over(map));
    }
    let weights = map
        .objects()
        .iter()
        .map(|o| {
            cosine_to_unit(dot(&query.text_embedding, &o.label_embedding))
                * cosine_to_unit(dot(&query.vis_text_embedding, &o.visual_embedding))
        })
        .collect();
    ScoreDistribution::from_weights(map.ids(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::map::ObjectEntry;
    use crate::query::DemonstrativeSeries;

    fn obj(id: &str, label: Vec<f64>, vis: Vec<f64>) -> ObjectEntry<f64> {
        ObjectEntry {
            id: id.into(),
            class_label: "x".into(),
            position: Vec3::zero(),
            label_embedding: label,
            visual_embedding: vis,
            image_ref: None,
        }
    }

    fn query(text: Vec<f64>, vis: Vec<f64>, class: Option<&str>) -> ParsedQuery<f64> {
        ParsedQuery {
            raw_text: String::new(),
            normalized_text: String::new(),
            series: DemonstrativeSeries::So,
            class_term: class.map(Into::into),
            feature_terms: vec![],
            text_embedding: text,
            vis_text_embedding: vis,
            level: None,
        }
    }

    #[test]
    fn matching_label_scores_higher() {
        let m = SemanticMap::new(
            "m",
            2,
            2,
            vec![
                obj("a", vec![1.0, 0.0], vec![1.0, 0.0]),
                obj("b", vec![0.0, 1.0], vec![1.0, 0.0]),
            ],
        )
        .unwrap();
        let c_vis = 0.6f64;
        let q = query(vec![1.0, 0.0], vec![c_vis, (1.0 - c_vis * c_vis).sqrt()], Some("cup"));
        let p = estimate_linguistic(&m, &q).unwrap();
        // g(1)·g(0.6) vs g(0)·g(0.6)
        let wa = 1.0 * 0.8;
        let wb = 0.5 * 0.8;
        assert!((p.p[0] - wa / (wa + wb)).abs() < 1e-12);
        assert!((p.p[1] - wb / (wa + wb)).abs() < 1e-12);
    }

    #[test]
    fn content_free_query_is_uniform() {
        let objs = (0..5)
            .map(|i| obj(&format!("o{i}"), vec![1.0, i as f64], vec![i as f64, 1.0]))
            .collect();
        let m = SemanticMap::new("m", 2, 2, objs).unwrap();
        let p = estimate_linguistic(&m, &query(vec![1.0, 0.0], vec![0.0, 1.0], None)).unwrap();
        for v in p.p {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_and_empty_errors() {
        let m = SemanticMap::new("m", 2, 2, vec![obj("a", vec![1.0, 0.0], vec![1.0, 0.0])]).unwrap();
        let q = query(vec![1.0, 0.0, 0.0], vec![1.0, 0.0], Some("cup"));
        assert!(matches!(
            estimate_linguistic(&m, &q),
            Err(Error::DimensionMismatch { .. })
        ));
        let empty = SemanticMap::<f64>::new("m", 2, 2, vec![]).unwrap();
        let q = query(vec![1.0, 0.0], vec![1.0, 0.0], Some("cup"));
        assert!(matches!(estimate_linguistic(&empty, &q), Err(Error::EmptyMap)));
    }

    #[test]
    fn antipodal_objects_get_zero() {
        let m = SemanticMap::new(
            "m",
            2,
            2,
            vec![
                obj("a", vec![1.0, 0.0], vec![1.0, 0.0]),
                obj("b", vec![-1.0, 0.0], vec![1.0, 0.0]),
            ],
        )
        .unwrap();
        let p = estimate_linguistic(&m, &query(vec![1.0, 0.0], vec![1.0, 0.0], Some("cup"))).unwrap();
        assert_eq!(p.p, vec![1.0, 0.0]);
    }
}
