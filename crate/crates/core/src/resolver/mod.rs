//! Final target selection over the fused shortlist.
//!
//! A backend either names an object or asks one clarifying question. If it
//! asks, the user's answer is added to the query and the backend gets a
//! second look at the same shortlist. If that still does not settle it,
//! estimation re-runs on the augmented query and the shortlisted object it
//! ranks highest wins.
//! There is never more than one question per episode.

mod llm;
mod oracle;
mod rule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ParsedQuery;

pub use llm::{parse_llm_response, LlmBackend, LLM_ENDPOINT_ENV, LLM_KEY_ENV};
pub use oracle::{HumanOracle, SceneAttributes, ScriptedOracle, UserOracle};
pub use rule::{format_options, is_consistent, RuleBackend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortlistItem {
    pub object_id: String,
    pub class_label: String,
    pub fused_probability: f64,
    #[serde(default)]
    pub image_ref: Option<String>,
    /// Visual attributes observable in the object's image (color, size, ...).
    #[serde(default)]
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResolverDecision {
    Identified { object_id: String },
    Ask { question: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResolutionPath {
    FirstPass,
    AfterQa,
    ArgmaxFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub question: String,
    pub answer: String,
}

/// The question/answer record; holds at most one exchange.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Exchange>", into = "Vec<Exchange>")]
pub struct Dialogue(Vec<Exchange>);

impl Dialogue {
    pub const BUDGET: usize = 1;

    pub fn record(&mut self, question: impl Into<String>, answer: impl Into<String>) -> Result<()> {
        if self.0.len() >= Self::BUDGET {
            return Err(Error::Backend("question budget already spent".into()));
        }
        self.0.push(Exchange {
            question: question.into(),
            answer: answer.into(),
        });
        Ok(())
    }

    pub fn exchanges(&self) -> &[Exchange] {
        &self.0
    }

    pub fn budget_spent(&self) -> bool {
        self.0.len() >= Self::BUDGET
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<Exchange>> for Dialogue {
    type Error = String;
    fn try_from(v: Vec<Exchange>) -> Result<Self, String> {
        if v.len() > Dialogue::BUDGET {
            Err(format!(
                "transcript holds {} exchanges, at most {} allowed",
                v.len(),
                Dialogue::BUDGET
            ))
        } else {
            Ok(Dialogue(v))
        }
    }
}

impl From<Dialogue> for Vec<Exchange> {
    fn from(d: Dialogue) -> Self {
        d.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaTranscript {
    pub exchanges: Dialogue,
    pub final_id: String,
    pub resolution_path: ResolutionPath,
    /// Head of the ranking from re-estimation on the augmented query, when it ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refreshed_shortlist: Option<Vec<ShortlistItem>>,
}

pub struct DecisionContext<'a> {
    pub shortlist: &'a [ShortlistItem],
    pub query: &'a ParsedQuery,
    pub transcript: &'a Dialogue,
}

pub trait ResolverBackend: Send + Sync {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<ResolverDecision>;
}

/// Re-runs exophora resolution for the second attempt.
pub trait Reestimator {
    /// Query with the user's answer appended.
    fn augment(&self, query: &ParsedQuery, answer: &str) -> Result<ParsedQuery>;
    /// Full ranking of the map under an augmented query, best first.
    fn rerank(&self, query: &ParsedQuery) -> Result<Vec<ShortlistItem>>;
}

/// Outcome of the first backend pass.
#[derive(Debug, Clone, PartialEq)]
pub enum FirstPass {
    Resolved(QaTranscript),
    Question(String),
}

fn head_id(shortlist: &[ShortlistItem]) -> Result<String> {
    shortlist
        .first()
        .map(|i| i.object_id.clone())
        .ok_or(Error::EmptyInput("shortlist"))
}

fn identified_in(decision: &ResolverDecision, shortlist: &[ShortlistItem]) -> Option<String> {
    match decision {
        ResolverDecision::Identified { object_id } if shortlist.iter().any(|i| &i.object_id == object_id) => {
            Some(object_id.clone())
        }
        ResolverDecision::Identified { object_id } => {
            tracing::warn!(
                object_id,
                "backend identified an object outside the shortlist; ignoring"
            );
            None
        }
        ResolverDecision::Ask { .. } => None,
    }
}

/// First backend pass: identify directly or produce the clarifying question.
pub fn first_pass(
    shortlist: &[ShortlistItem],
    query: &ParsedQuery,
    backend: &dyn ResolverBackend,
) -> Result<FirstPass> {
    let head = head_id(shortlist)?;
    let empty = Dialogue::default();
    let ctx = DecisionContext {
        shortlist,
        query,
        transcript: &empty,
    };
    let fallback = |exchanges| {
        FirstPass::Resolved(QaTranscript {
            exchanges,
            final_id: head.clone(),
            resolution_path: ResolutionPath::ArgmaxFallback,
            refreshed_shortlist: None,
        })
    };
    match backend.decide(&ctx) {
        Ok(ResolverDecision::Ask { question }) => Ok(FirstPass::Question(question)),
        Ok(d) => Ok(match identified_in(&d, shortlist) {
            Some(id) => FirstPass::Resolved(QaTranscript {
                exchanges: Dialogue::default(),
                final_id: id,
                resolution_path: ResolutionPath::FirstPass,
                refreshed_shortlist: None,
            }),
            None => fallback(Dialogue::default()),
        }),
        Err(e) => {
            tracing::warn!(error = %e, "resolver backend failed on first pass; using top fused object");
            Ok(fallback(Dialogue::default()))
        }
    }
}

/// Second pass after the user answered (`None` means no answer, e.g. EOF).
pub fn second_pass(
    shortlist: &[ShortlistItem],
    query: &ParsedQuery,
    question: &str,
    answer: Option<&str>,
    backend: &dyn ResolverBackend,
    reestimator: &dyn Reestimator,
) -> Result<QaTranscript> {
    let head = head_id(shortlist)?;
    let mut dialogue = Dialogue::default();
    dialogue.record(question, answer.unwrap_or_default())?;
    let Some(answer) = answer else {
        return Ok(QaTranscript {
            exchanges: dialogue,
            final_id: head,
            resolution_path: ResolutionPath::ArgmaxFallback,
            refreshed_shortlist: None,
        });
    };

    let augmented = match reestimator.augment(query, answer) {
        Ok(q) => q,
        Err(e) => {
            tracing::warn!(error = %e, "could not parse augmented query; using top fused object");
            return Ok(QaTranscript {
                exchanges: dialogue,
                final_id: head,
                resolution_path: ResolutionPath::ArgmaxFallback,
                refreshed_shortlist: None,
            });
        }
    };

    let ctx = DecisionContext {
        shortlist,
        query: &augmented,
        transcript: &dialogue,
    };
    match backend.decide(&ctx) {
        Ok(d) => {
            if let Some(id) = identified_in(&d, shortlist) {
                return Ok(QaTranscript {
                    exchanges: dialogue,
                    final_id: id,
                    resolution_path: ResolutionPath::AfterQa,
                    refreshed_shortlist: None,
                });
            }
        }
        Err(e) => tracing::warn!(error = %e, "resolver backend failed on second pass"),
    }

    // Still ambiguous: re-estimate with the answer folded in and take the
    // original candidate the refreshed ranking likes best.
    let refreshed = match reestimator.rerank(&augmented) {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!(error = %e, "re-estimation failed; using original ranking");
            Vec::new()
        }
    };
    let pick = refreshed
        .iter()
        .find(|r| shortlist.iter().any(|i| i.object_id == r.object_id))
        .map(|r| r.object_id.clone());
    let refreshed_shortlist = (!refreshed.is_empty()).then(|| refreshed.into_iter().take(shortlist.len()).collect());
    Ok(QaTranscript {
        exchanges: dialogue,
        final_id: pick.unwrap_or(head),
        resolution_path: ResolutionPath::ArgmaxFallback,
        refreshed_shortlist,
    })
}

/// Full resolution with an automated user.
pub fn resolve(
    shortlist: &[ShortlistItem],
    query: &ParsedQuery,
    backend: &dyn ResolverBackend,
    oracle: &dyn UserOracle,
    target: &str,
    scene: &SceneAttributes,
    reestimator: &dyn Reestimator,
) -> Result<QaTranscript> {
    match first_pass(shortlist, query, backend)? {
        FirstPass::Resolved(t) => Ok(t),
        FirstPass::Question(q) => {
            let answer = oracle.answer(&q, target, scene);
            second_pass(shortlist, query, &q, answer.as_deref(), backend, reestimator)
        }
    }
}
