#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use exosolve_core::query::DemonstrativeSeries;
use exosolve_core::{ObjectEntry, ParsedQuery, SemanticMap, UserObservation, Vec3};

pub struct RandomScene {
    pub map: SemanticMap,
    pub query: ParsedQuery,
    pub obs: UserObservation,
    pub robot: Vec3,
}

pub fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn point(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(
        rng.random_range(0.0..8.0),
        rng.random_range(0.0..6.0),
        rng.random_range(0.0..2.5),
    )
}

const SERIES: [DemonstrativeSeries; 5] = [
    DemonstrativeSeries::Ko,
    DemonstrativeSeries::So,
    DemonstrativeSeries::A,
    DemonstrativeSeries::Do,
    DemonstrativeSeries::None,
];

/// Random map, query and observation from one seed.
pub fn random_scene(seed: u64) -> RandomScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=30);
    let dt = rng.random_range(2..=16);
    let dv = rng.random_range(2..=16);
    let classes = ["cup", "book", "bottle", "doll"];
    let objects = (0..n)
        .map(|i| ObjectEntry {
            id: format!("o{i:02}"),
            class_label: classes[rng.random_range(0..classes.len())].to_string(),
            position: point(&mut rng),
            label_embedding: unit(&mut rng, dt),
            visual_embedding: unit(&mut rng, dv),
            image_ref: None,
        })
        .collect();
    let map = SemanticMap::new("rand", dt, dv, objects).unwrap();
    let content = rng.random_bool(0.7);
    let query = ParsedQuery {
        raw_text: "q".into(),
        normalized_text: "q".into(),
        series: SERIES[rng.random_range(0..SERIES.len())],
        class_term: content.then(|| classes[rng.random_range(0..classes.len())].to_string()),
        feature_terms: vec![],
        text_embedding: unit(&mut rng, dt),
        vis_text_embedding: unit(&mut rng, dv),
        level: None,
    };
    let skeleton = rng.random_bool(0.8);
    let eye = point(&mut rng);
    let obs = UserObservation {
        eye: skeleton.then_some(eye),
        wrist: skeleton.then(|| eye + Vec3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), -0.2)),
        has_pointing: rng.random_bool(0.8),
        visible_initially: rng.random_bool(0.5),
        true_bearing: rng.random_range(-3.0..3.0),
        ssl_bearing: None,
    };
    RandomScene {
        map,
        query,
        obs,
        robot: point(&mut rng),
    }
}
