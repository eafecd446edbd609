//! Closed-vocabulary tables used to read a query: demonstrative surface
//! forms, class aliases, feature words grouped by attribute category, and a
//! word-level translation dictionary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::DemonstrativeSeries;

/// Marker inside a demonstrative pattern that matches any run of tokens.
pub const GAP: &str = "...";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasEntry {
    pub class: String,
    #[serde(default)]
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemonstrativeLexicon {
    /// Surface form (space separated, `...` for a gap) to series.
    pub demonstratives: BTreeMap<String, DemonstrativeSeries>,
    /// Multi-word or colloquial names resolved to a map class plus implied features.
    pub aliases: BTreeMap<String, AliasEntry>,
    /// Attribute category (color, shape, ...) to the words that express it.
    pub features: BTreeMap<String, Vec<String>>,
    /// Word-level substitutions applied before embedding (translation stub).
    pub translations: BTreeMap<String, String>,
}

const ROMAJI: &[(&str, DemonstrativeSeries)] = &[
    ("kore", DemonstrativeSeries::Ko),
    ("kono", DemonstrativeSeries::Ko),
    ("koko", DemonstrativeSeries::Ko),
    ("kocchi", DemonstrativeSeries::Ko),
    ("sore", DemonstrativeSeries::So),
    ("sono", DemonstrativeSeries::So),
    ("soko", DemonstrativeSeries::So),
    ("socchi", DemonstrativeSeries::So),
    ("are", DemonstrativeSeries::A),
    ("ano", DemonstrativeSeries::A),
    ("asoko", DemonstrativeSeries::A),
    ("acchi", DemonstrativeSeries::A),
    ("dore", DemonstrativeSeries::Do),
    ("dono", DemonstrativeSeries::Do),
    ("doko", DemonstrativeSeries::Do),
    ("docchi", DemonstrativeSeries::Do),
];

const ENGLISH: &[(&str, DemonstrativeSeries)] = &[
    ("this", DemonstrativeSeries::Ko),
    ("these", DemonstrativeSeries::Ko),
    ("that", DemonstrativeSeries::So),
    ("those", DemonstrativeSeries::So),
    ("that ... over there", DemonstrativeSeries::A),
    ("those ... over there", DemonstrativeSeries::A),
    ("which", DemonstrativeSeries::Do),
];

const FEATURES: &[(&str, &[&str])] = &[
    (
        "color",
        &[
            "red", "blue", "green", "yellow", "white", "black", "brown", "pink", "orange", "purple", "gray", "silver",
        ],
    ),
    (
        "shape",
        &["round", "square", "rectangular", "cylindrical", "flat", "long"],
    ),
    ("size", &["small", "large", "big", "tiny", "tall", "short"]),
    ("material", &["plastic", "wooden", "glass", "metal", "paper", "fabric"]),
    ("kind", &["pig", "bear", "rabbit", "dog", "cat"]),
    ("pattern", &["striped", "dotted", "checkered"]),
];

const ALIASES: &[(&str, &str, &[&str])] = &[
    ("stuffed pig", "stuffed animal", &["pig"]),
    ("stuffed bear", "stuffed animal", &["bear"]),
    ("teddy bear", "stuffed animal", &["bear"]),
    ("stuffed rabbit", "stuffed animal", &["rabbit"]),
    ("plushie", "stuffed animal", &[]),
    ("mug", "cup", &[]),
    ("pet bottle", "bottle", &["plastic"]),
    ("couch", "sofa", &[]),
];

const TRANSLATIONS: &[(&str, &str)] = &[
    ("koppu", "cup"),
    ("hon", "book"),
    ("botoru", "bottle"),
    ("nuigurumi", "stuffed animal"),
    ("ningyou", "doll"),
    ("isu", "chair"),
    ("tsukue", "desk"),
    ("akai", "red"),
    ("aoi", "blue"),
    ("shiroi", "white"),
    ("kuroi", "black"),
    ("kiiroi", "yellow"),
    ("chiisai", "small"),
    ("ookii", "large"),
    ("marui", "round"),
    ("buta", "pig"),
];

impl Default for DemonstrativeLexicon {
    fn default() -> Self {
        let demonstratives = ROMAJI.iter().chain(ENGLISH).map(|&(k, s)| (k.to_string(), s)).collect();
        let aliases = ALIASES
            .iter()
            .map(|&(k, class, feats)| {
                (
                    k.to_string(),
                    AliasEntry {
                        class: class.to_string(),
                        features: feats.iter().map(|f| f.to_string()).collect(),
                    },
                )
            })
            .collect();
        let features = FEATURES
            .iter()
            .map(|&(cat, words)| (cat.to_string(), words.iter().map(|w| w.to_string()).collect()))
            .collect();
        let translations = TRANSLATIONS
            .iter()
            .map(|&(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self {
            demonstratives,
            aliases,
            features,
            translations,
        }
    }
}

/// One compiled demonstrative pattern: literal token groups separated by gaps.
#[derive(Debug, Clone)]
pub(crate) struct Pattern {
    pub groups: Vec<Vec<String>>,
    pub series: DemonstrativeSeries,
    pub literal_len: usize,
}

impl Pattern {
    fn compile(surface: &str, series: DemonstrativeSeries) -> Self {
        let mut groups = vec![Vec::new()];
        for tok in surface.split_whitespace() {
            if tok == GAP {
                groups.push(Vec::new());
            } else {
                groups.last_mut().unwrap().extend(super::tokenize(tok));
            }
        }
        groups.retain(|g| !g.is_empty());
        let literal_len = groups.iter().map(Vec::len).sum();
        Self {
            groups,
            series,
            literal_len,
        }
    }

    /// Whether the pattern matches with its first group anchored at `start`.
    pub fn matches_at(&self, tokens: &[String], start: usize) -> bool {
        let Some(first) = self.groups.first() else {
            return false;
        };
        if !starts_with(&tokens[start..], first) {
            return false;
        }
        let mut pos = start + first.len();
        for group in &self.groups[1..] {
            match (pos..tokens.len()).find(|&i| starts_with(&tokens[i..], group)) {
                Some(i) => pos = i + group.len(),
                None => return false,
            }
        }
        true
    }
}

fn starts_with(tokens: &[String], group: &[String]) -> bool {
    tokens.len() >= group.len() && tokens.iter().zip(group).all(|(a, b)| a == b)
}

impl DemonstrativeLexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }

    /// Patterns ordered so that more specific forms are tried first at a
    /// given anchor position.
    pub(crate) fn patterns(&self) -> Vec<Pattern> {
        let mut pats: Vec<Pattern> = self
            .demonstratives
            .iter()
            .map(|(k, &s)| Pattern::compile(k, s))
            .filter(|p| p.literal_len > 0)
            .collect();
        pats.sort_by_key(|p| std::cmp::Reverse(p.literal_len));
        pats
    }

    /// Category of a feature word, if the word is in the closed lexicon.
    pub fn feature_category(&self, word: &str) -> Option<&str> {
        self.features
            .iter()
            .find(|(_, words)| words.iter().any(|w| w == word))
            .map(|(cat, _)| cat.as_str())
    }

    pub fn is_feature(&self, word: &str) -> bool {
        self.feature_category(word).is_some()
    }
}
