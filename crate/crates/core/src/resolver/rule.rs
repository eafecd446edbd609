//! Deterministic attribute-matching backend.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::query::DemonstrativeLexicon;

use super::{DecisionContext, ResolverBackend, ResolverDecision, ShortlistItem};

const CLASS: &str = "class";

/// Names the single shortlist item consistent with the query's class and
/// feature terms. Otherwise asks about the attribute that best splits the
/// remaining candidates.
#[derive(Debug, Clone, Default)]
pub struct RuleBackend {
    lexicon: DemonstrativeLexicon,
}

impl RuleBackend {
    pub fn new(lexicon: DemonstrativeLexicon) -> Self {
        Self { lexicon }
    }

    fn value_of<'a>(&self, item: &'a ShortlistItem, attr: &str) -> Option<&'a str> {
        if attr == CLASS {
            return Some(&item.class_label);
        }
        item.attributes
            .iter()
            .find(|a| self.lexicon.feature_category(a) == Some(attr))
            .map(String::as_str)
    }

    fn question(&self, attr: &str, pool: &[&ShortlistItem]) -> String {
        let mut options: Vec<&str> = Vec::new();
        for item in pool {
            if let Some(v) = self.value_of(item, attr) {
                if !options.contains(&v) {
                    options.push(v);
                }
            }
        }
        match (attr, options.len()) {
            (CLASS, 1) => format!("Is it a {}?", options[0]),
            (CLASS, _) => format!("Which class is it: {}?", format_options(&options)),
            (_, 0) => format!("What {attr} is it?"),
            _ => format!("What {attr} is it: {}?", format_options(&options)),
        }
    }
}

/// "a", "a or b", "a, b, or c".
pub fn format_options(options: &[&str]) -> String {
    match options {
        [] => String::new(),
        [a] => a.to_string(),
        [a, b] => format!("{a} or {b}"),
        [rest @ .., last] => format!("{}, or {last}", rest.join(", ")),
    }
}

/// Whether an item agrees with every stated constraint of the query.
pub fn is_consistent(item: &ShortlistItem, class_term: Option<&str>, features: &[String]) -> bool {
    class_term.is_none_or(|c| item.class_label == c) && features.iter().all(|f| item.attributes.contains(f))
}

fn entropy(values: &[Option<&str>]) -> f64 {
    let mut counts: BTreeMap<Option<&str>, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(*v).or_default() += 1;
    }
    let n = values.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

impl ResolverBackend for RuleBackend {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<ResolverDecision> {
        let q = ctx.query;
        let consistent: Vec<&ShortlistItem> = ctx
            .shortlist
            .iter()
            .filter(|i| is_consistent(i, q.class_term.as_deref(), &q.feature_terms))
            .collect();
        if let [only] = consistent.as_slice() {
            return Ok(ResolverDecision::Identified {
                object_id: only.object_id.clone(),
            });
        }
        let pool: Vec<&ShortlistItem> = if consistent.is_empty() {
            ctx.shortlist.iter().collect()
        } else {
            consistent
        };

        let known: Vec<&str> = q
            .feature_terms
            .iter()
            .filter_map(|f| self.lexicon.feature_category(f))
            .collect();
        let mut unknown: Vec<&str> = Vec::new();
        if q.class_term.is_none() {
            unknown.push(CLASS);
        }
        unknown.extend(
            self.lexicon
                .features
                .keys()
                .map(String::as_str)
                .filter(|c| !known.contains(c)),
        );
        if unknown.is_empty() {
            unknown.push(CLASS);
        }

        // Highest entropy wins; the first listed attribute wins ties.
        let mut best = unknown[0];
        let mut best_h = f64::NEG_INFINITY;
        for attr in unknown {
            let values: Vec<Option<&str>> = pool.iter().map(|i| self.value_of(i, attr)).collect();
            let h = entropy(&values);
            if h > best_h + 1e-12 {
                best = attr;
                best_h = h;
            }
        }
        Ok(ResolverDecision::Ask {
            question: self.question(best, &pool),
        })
    }
}
