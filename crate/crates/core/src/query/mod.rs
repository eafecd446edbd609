//! Reading a spoken/typed instruction into a [`ParsedQuery`]: which
//! demonstrative series it uses, which object class and feature words it
//! mentions, and its embeddings in both text spaces.

mod embed;
mod lexicon;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use embed::{
    token_vector, toy_embed, EmbeddingProvider, HttpEmbedder, ToyEmbedder, EMBED_ENDPOINT_ENV, TEXT_SPACE_SEED,
    VISION_SPACE_SEED,
};
pub use lexicon::{AliasEntry, DemonstrativeLexicon, GAP};

/// Japanese demonstrative families: speaker-proximal (ko), listener-proximal
/// (so), distal (a), interrogative (do), or none found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DemonstrativeSeries {
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "SO")]
    So,
    #[serde(rename = "A")]
    A,
    #[serde(rename = "DO")]
    Do,
    #[serde(rename = "NONE")]
    None,
}

impl DemonstrativeSeries {
    /// Series that define a spatial region (everything but DO and NONE).
    pub fn is_spatial(self) -> bool {
        matches!(self, Self::Ko | Self::So | Self::A)
    }
}

impl fmt::Display for DemonstrativeSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ko => "KO",
            Self::So => "SO",
            Self::A => "A",
            Self::Do => "DO",
            Self::None => "NONE",
        })
    }
}

/// How much the query says about the target: class and features (1), class
/// only (2), or only a demonstrative (3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum QueryLevel {
    L1 = 1,
    L2 = 2,
    L3 = 3,
}

impl QueryLevel {
    pub const ALL: [QueryLevel; 3] = [QueryLevel::L1, QueryLevel::L2, QueryLevel::L3];

    pub fn number(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for QueryLevel {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Self::L1),
            2 => Ok(Self::L2),
            3 => Ok(Self::L3),
            _ => Err(format!("query level must be 1, 2 or 3, got {v}")),
        }
    }
}

impl From<QueryLevel> for u8 {
    fn from(l: QueryLevel) -> u8 {
        l as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ParsedQuery<T> {
    pub raw_text: String,
    pub normalized_text: String,
    pub series: DemonstrativeSeries,
    pub class_term: Option<String>,
    pub feature_terms: Vec<String>,
    pub text_embedding: Vec<T>,
    pub vis_text_embedding: Vec<T>,
    #[serde(default)]
    pub level: Option<QueryLevel>,
}

impl<T> ParsedQuery<T> {
    /// True when nothing beyond a demonstrative was said about the object.
    pub fn is_content_free(&self) -> bool {
        self.class_term.is_none() && self.feature_terms.is_empty()
    }
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Series of the first lexicon hit scanning left to right; `NONE` if no hit.
/// When several forms start at the same token the most specific one wins,
/// so "that ... over there" takes precedence over "that".
pub fn extract_demonstrative(text: &str, lexicon: &DemonstrativeLexicon) -> DemonstrativeSeries {
    let tokens = tokenize(text);
    let patterns = lexicon.patterns();
    (0..tokens.len())
        .find_map(|i| patterns.iter().find(|p| p.matches_at(&tokens, i)).map(|p| p.series))
        .unwrap_or(DemonstrativeSeries::None)
}

/// Applies the word-level translation dictionary; unknown words pass through.
pub fn normalize_text(text: &str, lexicon: &DemonstrativeLexicon) -> String {
    tokenize(text)
        .into_iter()
        .map(|t| lexicon.translations.get(&t).cloned().unwrap_or(t))
        .collect::<Vec<_>>()
        .join(" ")
}

fn phrase_at(tokens: &[String], start: usize, phrase: &str) -> Option<usize> {
    let words = tokenize(phrase);
    if words.is_empty() || tokens.len() < start + words.len() {
        return None;
    }
    let exact = tokens[start..start + words.len()] == words[..];
    // accept a trailing plural "s" on the last word
    let plural = !exact && {
        let last = start + words.len() - 1;
        tokens[start..last] == words[..words.len() - 1]
            && tokens[last].strip_suffix('s') == Some(words[words.len() - 1].as_str())
    };
    (exact || plural).then_some(words.len())
}

/// Class term and feature words found in already-normalized text.
pub fn extract_terms(
    normalized: &str,
    lexicon: &DemonstrativeLexicon,
    class_vocab: Option<&[String]>,
) -> (Option<String>, Vec<String>) {
    let tokens = tokenize(normalized);
    let mut class_term = None;
    let mut features: Vec<String> = Vec::new();
    let push_feature = |features: &mut Vec<String>, f: &str| {
        if !features.iter().any(|x| x == f) {
            features.push(f.to_string());
        }
    };

    // Longest phrases first so "stuffed pig" beats a bare "pig".
    let mut aliases: Vec<(&String, &AliasEntry)> = lexicon.aliases.iter().collect();
    aliases.sort_by_key(|(k, _)| std::cmp::Reverse(tokenize(k).len()));
    let mut vocab: Vec<&String> = class_vocab.map(|v| v.iter().collect()).unwrap_or_default();
    vocab.sort_by_key(|k| std::cmp::Reverse(tokenize(k).len()));

    let mut i = 0;
    while i < tokens.len() {
        if let Some((len, entry)) = aliases
            .iter()
            .find_map(|(k, e)| phrase_at(&tokens, i, k).map(|len| (len, *e)))
        {
            if class_term.is_none() {
                class_term = Some(entry.class.clone());
            }
            for f in &entry.features {
                push_feature(&mut features, f);
            }
            i += len;
            continue;
        }
        if let Some((len, class)) = vocab.iter().find_map(|c| phrase_at(&tokens, i, c).map(|len| (len, *c))) {
            if class_term.is_none() {
                class_term = Some(class.clone());
            }
            i += len;
            continue;
        }
        if lexicon.is_feature(&tokens[i]) {
            push_feature(&mut features, &tokens[i]);
        }
        i += 1;
    }
    (class_term, features)
}

/// Parses a query. `class_vocab` is usually the map's class list; without it
/// only alias-table entries can produce a class term.
pub fn parse_query<T: Scalar>(
    text: &str,
    provider: &dyn EmbeddingProvider<T>,
    lexicon: &DemonstrativeLexicon,
    class_vocab: Option<&[String]>,
) -> Result<ParsedQuery<T>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput("query text"));
    }
    let series = extract_demonstrative(text, lexicon);
    let normalized_text = normalize_text(text, lexicon);
    if normalized_text.is_empty() {
        return Err(Error::EmptyInput("query has no words"));
    }
    let (class_term, feature_terms) = extract_terms(&normalized_text, lexicon, class_vocab);
    let text_embedding = provider
        .embed_text(&normalized_text)
        .map_err(|e| Error::Provider(format!("embedding query text: {e}")))?;
    let vis_text_embedding = provider
        .embed_text_for_vision(&normalized_text)
        .map_err(|e| Error::Provider(format!("embedding query for vision: {e}")))?;
    Ok(ParsedQuery {
        raw_text: text.to_string(),
        normalized_text,
        series,
        class_term,
        feature_terms,
        text_embedding,
        vis_text_embedding,
        level: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> DemonstrativeLexicon {
        DemonstrativeLexicon::default()
    }

    #[test]
    fn demonstrative_examples() {
        assert_eq!(
            extract_demonstrative("Sore wo motte kite", &lex()),
            DemonstrativeSeries::So
        );
        assert_eq!(
            extract_demonstrative("Bring me that stuffed pig", &lex()),
            DemonstrativeSeries::So
        );
        assert_eq!(extract_demonstrative("Dore?", &lex()), DemonstrativeSeries::Do);
        assert_eq!(extract_demonstrative("Kore totte", &lex()), DemonstrativeSeries::Ko);
        assert_eq!(extract_demonstrative("Asoko no hon", &lex()), DemonstrativeSeries::A);
        assert_eq!(
            extract_demonstrative("Bring me this cup", &lex()),
            DemonstrativeSeries::Ko
        );
        assert_eq!(
            extract_demonstrative("Bring me a cup", &lex()),
            DemonstrativeSeries::None
        );
    }

    #[test]
    fn over_there_selects_distal() {
        assert_eq!(
            extract_demonstrative("Bring me that red cup over there", &lex()),
            DemonstrativeSeries::A
        );
        assert_eq!(
            extract_demonstrative("Bring me that over there.", &lex()),
            DemonstrativeSeries::A
        );
        assert_eq!(
            extract_demonstrative("That one, not over here", &lex()),
            DemonstrativeSeries::So
        );
    }

    #[test]
    fn first_occurrence_wins() {
        assert_eq!(extract_demonstrative("this or that", &lex()), DemonstrativeSeries::Ko);
        assert_eq!(extract_demonstrative("that or this", &lex()), DemonstrativeSeries::So);
    }

    #[test]
    fn lexicon_override() {
        let mut l = lex();
        l.demonstratives.insert("that".into(), DemonstrativeSeries::A);
        assert_eq!(extract_demonstrative("Bring me that doll", &l), DemonstrativeSeries::A);
    }

    fn p(text: &str, vocab: &[&str]) -> ParsedQuery<f64> {
        let vocab: Vec<String> = vocab.iter().map(|s| s.to_string()).collect();
        parse_query(text, &ToyEmbedder::new(16, 8), &lex(), Some(&vocab)).unwrap()
    }

    #[test]
    fn level_two_example() {
        let q = p("Bring me that doll", &["doll", "cup"]);
        assert_eq!(q.series, DemonstrativeSeries::So);
        assert_eq!(q.class_term.as_deref(), Some("doll"));
        assert!(q.feature_terms.is_empty());
    }

    #[test]
    fn level_one_example_via_alias() {
        let q = p("Bring me that stuffed pig", &["doll", "stuffed animal"]);
        assert_eq!(q.series, DemonstrativeSeries::So);
        assert_eq!(q.class_term.as_deref(), Some("stuffed animal"));
        assert_eq!(q.feature_terms, vec!["pig".to_string()]);
    }

    #[test]
    fn level_three_example() {
        let q = p("Bring me that.", &["doll", "cup"]);
        assert_eq!(q.series, DemonstrativeSeries::So);
        assert_eq!(q.class_term, None);
        assert!(q.feature_terms.is_empty());
        assert!(q.is_content_free());
    }

    #[test]
    fn vocabulary_gates_class_terms() {
        let with: ParsedQuery<f64> = p("bring me that red cup", &["cup"]);
        assert_eq!(with.class_term.as_deref(), Some("cup"));
        assert_eq!(with.feature_terms, vec!["red".to_string()]);
        let without: ParsedQuery<f64> =
            parse_query("bring me that red cup", &ToyEmbedder::new(16, 8), &lex(), None).unwrap();
        assert_eq!(without.class_term, None);
    }

    #[test]
    fn plural_and_multiword_classes() {
        let q = p("one of those plastic bottles", &["plastic bottle", "bottle"]);
        assert_eq!(q.class_term.as_deref(), Some("plastic bottle"));
        let q = p("the blue cups", &["cup"]);
        assert_eq!(q.class_term.as_deref(), Some("cup"));
    }

    #[test]
    fn translation_stub() {
        let q = p("Sono akai koppu", &["cup"]);
        assert_eq!(q.normalized_text, "sono red cup");
        assert_eq!(q.class_term.as_deref(), Some("cup"));
        assert_eq!(q.feature_terms, vec!["red".to_string()]);
        assert_eq!(q.series, DemonstrativeSeries::So);
    }

    #[test]
    fn unknown_adjectives_ignored() {
        let q = p("that sparkly cup", &["cup"]);
        assert!(q.feature_terms.is_empty());
    }

    #[test]
    fn empty_query_rejected() {
        let r: Result<ParsedQuery<f64>> = parse_query("  ", &ToyEmbedder::new(4, 4), &lex(), None);
        assert!(matches!(r, Err(Error::EmptyInput(_))));
    }

    struct Failing;
    impl EmbeddingProvider<f64> for Failing {
        fn embed_text(&self, _: &str) -> Result<Vec<f64>> {
            Err(Error::Provider("offline".into()))
        }
        fn embed_text_for_vision(&self, _: &str) -> Result<Vec<f64>> {
            unreachable!()
        }
        fn dims(&self) -> (usize, usize) {
            (4, 4)
        }
    }

    #[test]
    fn provider_failure_propagates_with_context() {
        let err = parse_query("that cup", &Failing, &lex(), None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("embedding query text") && msg.contains("offline"), "{msg}");
    }

    #[test]
    fn level_roundtrip() {
        assert_eq!(serde_json::to_string(&QueryLevel::L2).unwrap(), "2");
        assert!(serde_json::from_str::<QueryLevel>("4").is_err());
    }

    proptest! {
        #[test]
        fn extraction_is_total(s in "\\PC{0,40}") {
            // every input maps to exactly one series without panicking
            let _ = extract_demonstrative(&s, &lex());
        }

        #[test]
        fn embeddings_unit_norm(words in proptest::collection::vec("[a-z]{1,8}", 1..6)) {
            let text = words.join(" ");
            let q = p(&text, &["cup"]);
            let n1: f64 = q.text_embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n2: f64 = q.vis_text_embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((n1 - 1.0).abs() < 1e-6 && (n2 - 1.0).abs() < 1e-6);
        }

        #[test]
        fn never_invents_class(words in proptest::collection::vec("(bring|me|that|this|the|please|it|one)", 1..6)) {
            let q = p(&words.join(" "), &["cup", "book", "doll"]);
            prop_assert!(q.class_term.is_none());
        }
    }
}
