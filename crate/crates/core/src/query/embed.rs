//! Text embedding providers.
//!
//! The toy embedder is a deterministic stand-in for sentence/CLIP encoders:
//! every token hashes to its own Gaussian direction, a text is the
//! normalized mean of its token directions. Identical words therefore agree
//! exactly across the map and the query, and unrelated words are close to
//! orthogonal in high dimension.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const EMBED_ENDPOINT_ENV: &str = "EXOSOLVE_EMBED_ENDPOINT";

/// Default seeds for the two embedding spaces. They only need to differ.
pub const TEXT_SPACE_SEED: u64 = 0x5EED_7E47;
pub const VISION_SPACE_SEED: u64 = 0x5EED_0815;

/// Maps text to vectors in the label space and the vision-text space.
pub trait EmbeddingProvider<T: Scalar>: Send + Sync {
    fn embed_text(&self, text: &str) -> Result<Vec<T>>;
    fn embed_text_for_vision(&self, text: &str) -> Result<Vec<T>>;
    /// `(D_text, D_vis)`.
    fn dims(&self) -> (usize, usize);
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Unit-norm direction for a single token.
///
/// Algorithm: `splitmix64(fnv1a64(token) ^ seed)` seeds a ChaCha8 stream from
/// which `dim` standard normals are drawn, then L2-normalized.
pub fn token_vector(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(fnv1a64(token.as_bytes()) ^ seed));
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Deterministic hashed bag-of-tokens embedding, L2-normalized.
pub fn toy_embed(text: &str, dim: usize, seed: u64) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(Error::Config(format!("embedding dimension must be >= 2, got {dim}")));
    }
    let tokens = super::tokenize(text);
    if tokens.is_empty() {
        return Err(Error::EmptyInput("text to embed has no tokens"));
    }
    let mut acc = vec![0.0; dim];
    for tok in &tokens {
        for (a, t) in acc.iter_mut().zip(token_vector(tok, dim, seed)) {
            *a += t;
        }
    }
    let n = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        // Only reachable if tokens cancel exactly; fall back to the first token.
        return Ok(token_vector(&tokens[0], dim, seed));
    }
    acc.iter_mut().for_each(|x| *x /= n);
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyEmbedder {
    pub d_text: usize,
    pub d_vis: usize,
    pub text_seed: u64,
    pub vis_seed: u64,
}

impl ToyEmbedder {
    pub fn new(d_text: usize, d_vis: usize) -> Self {
        Self {
            d_text,
            d_vis,
            text_seed: TEXT_SPACE_SEED,
            vis_seed: VISION_SPACE_SEED,
        }
    }
}

fn cast_vec<T: Scalar>(v: Vec<f64>) -> Vec<T> {
    let mut out: Vec<T> = v.into_iter().map(T::lit).collect();
    // Re-normalize after narrowing so f32 vectors are unit in their own precision.
    let n = out.iter().map(|&x| x * x).sum::<T>().sqrt();
    out.iter_mut().for_each(|x| *x /= n);
    out
}

impl<T: Scalar> EmbeddingProvider<T> for ToyEmbedder {
    fn embed_text(&self, text: &str) -> Result<Vec<T>> {
        toy_embed(text, self.d_text, self.text_seed).map(cast_vec)
    }

    fn embed_text_for_vision(&self, text: &str) -> Result<Vec<T>> {
        toy_embed(text, self.d_vis, self.vis_seed).map(cast_vec)
    }

    fn dims(&self) -> (usize, usize) {
        (self.d_text, self.d_vis)
    }
}

/// Client for an external embedding service:
/// `POST {base}/embed {"text": .., "space": "text"|"vision"}` → `{"vector": [..]}`.
pub struct HttpEmbedder {
    base_url: String,
    d_text: usize,
    d_vis: usize,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
    space: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

impl HttpEmbedder {
    pub fn new(base_url: impl Into<String>, d_text: usize, d_vis: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(30)))
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            d_text,
            d_vis,
            agent,
        }
    }

    /// Builds a client from `EXOSOLVE_EMBED_ENDPOINT`, if set.
    pub fn from_env(d_text: usize, d_vis: usize) -> Option<Self> {
        std::env::var(EMBED_ENDPOINT_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(|url| Self::new(url, d_text, d_vis))
    }

    fn request<T: Scalar>(&self, text: &str, space: &str, dim: usize) -> Result<Vec<T>> {
        let url = format!("{}/embed", self.base_url);
        let resp: EmbedResponse = self
            .agent
            .post(&url)
            .send_json(&EmbedRequest { text, space })
            .map_err(|e| Error::Provider(format!("POST {url}: {e}")))?
            .body_mut()
            .read_json()
            .map_err(|e| Error::Provider(format!("decoding response from {url}: {e}")))?;
        if resp.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                what: format!("{space} embedding from {url}"),
                expected: dim,
                found: resp.vector.len(),
            });
        }
        let mut v: Vec<T> = resp.vector.into_iter().map(T::lit).collect();
        crate::map::normalize_embedding(&mut v, "provider embedding").map_err(|e| Error::Provider(e.to_string()))?;
        Ok(v)
    }
}

impl<T: Scalar> EmbeddingProvider<T> for HttpEmbedder {
    fn embed_text(&self, text: &str) -> Result<Vec<T>> {
        self.request(text, "text", self.d_text)
    }

    fn embed_text_for_vision(&self, text: &str) -> Result<Vec<T>> {
        self.request(text, "vision", self.d_vis)
    }

    fn dims(&self) -> (usize, usize) {
        (self.d_text, self.d_vis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn deterministic_and_self_similar() {
        let a = toy_embed("cup", 8, 3).unwrap();
        let b = toy_embed("cup", 8, 3).unwrap();
        assert_eq!(a, b);
        assert!((cos(&a, &b) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn token_order_and_case_do_not_matter() {
        let a = toy_embed("Red cup", 16, 1).unwrap();
        let b = toy_embed("cup red", 16, 1).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_and_tiny_dims() {
        assert!(matches!(toy_embed("  ..", 8, 0), Err(Error::EmptyInput(_))));
        assert!(toy_embed("cup", 1, 0).is_err());
    }

    #[test]
    fn seeds_separate_spaces() {
        let a = toy_embed("cup", 64, TEXT_SPACE_SEED).unwrap();
        let b = toy_embed("cup", 64, VISION_SPACE_SEED).unwrap();
        assert!(cos(&a, &b).abs() < 0.5);
    }

    /// Monte-Carlo check: random distinct tokens are near-orthogonal. For
    /// independent uniform directions in d dimensions E|cos| ≈ sqrt(2/(πd)),
    /// about 0.0997 at d = 64.
    #[test]
    fn distinct_tokens_near_orthogonal() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut total = 0.0;
        let pairs = 100;
        for _ in 0..pairs {
            let a: String = (0..6).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
            let mut b = a.clone();
            while b == a {
                b = (0..6).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
            }
            total += cos(&toy_embed(&a, 64, 11).unwrap(), &toy_embed(&b, 64, 11).unwrap()).abs();
        }
        let mean = total / pairs as f64;
        let analytic = (2.0 / (std::f64::consts::PI * 64.0)).sqrt();
        assert!(mean < 0.25, "mean |cos| = {mean}");
        assert!((mean - analytic).abs() < 0.04, "mean {mean} vs analytic {analytic}");
    }

    #[test]
    fn f32_provider_is_unit_norm() {
        let e = ToyEmbedder::new(32, 16);
        let v: Vec<f32> = e.embed_text_for_vision("small red cup").unwrap();
        let n: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        assert!((n - 1.0).abs() < 1e-6);
        assert_eq!(v.len(), 16);
    }
}
