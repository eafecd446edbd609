//! Backend that delegates the decision to a hosted language model.
//!
//! Wire format: `POST {endpoint}/decide` with the shortlist, the query and
//! the transcript as JSON. The reply body is plain text, exactly one of
//! `ID: <object_id>` or `QUESTION: <text>`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::query::DemonstrativeSeries;

use super::{DecisionContext, Exchange, ResolverBackend, ResolverDecision, ShortlistItem};

pub const LLM_ENDPOINT_ENV: &str = "EXOSOLVE_LLM_ENDPOINT";
pub const LLM_KEY_ENV: &str = "EXOSOLVE_LLM_KEY";

pub struct LlmBackend {
    endpoint: String,
    key: Option<String>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct QueryView<'a> {
    text: &'a str,
    series: DemonstrativeSeries,
    class_term: Option<&'a str>,
    feature_terms: &'a [String],
}

#[derive(Serialize)]
struct DecideRequest<'a> {
    shortlist: &'a [ShortlistItem],
    query: QueryView<'a>,
    transcript: &'a [Exchange],
}

/// Parses a reply; `None` if it does not follow the grammar.
pub fn parse_llm_response(text: &str) -> Option<ResolverDecision> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("ID:") {
        let id = rest.trim();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return None;
        }
        return Some(ResolverDecision::Identified {
            object_id: id.to_string(),
        });
    }
    if let Some(rest) = text.strip_prefix("QUESTION:") {
        let q = rest.trim();
        if q.is_empty() || q.contains('\n') {
            return None;
        }
        return Some(ResolverDecision::Ask {
            question: q.to_string(),
        });
    }
    None
}

impl LlmBackend {
    pub fn new(endpoint: impl Into<String>, key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(60)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            key,
            agent,
        }
    }

    /// Fails naming the missing variable when the endpoint is not configured.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var(LLM_ENDPOINT_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| Error::Config(format!("the llm backend needs {LLM_ENDPOINT_ENV} to be set")))?;
        let key = std::env::var(LLM_KEY_ENV).ok().filter(|s| !s.is_empty());
        Ok(Self::new(endpoint, key))
    }

    fn call(&self, body: &DecideRequest<'_>) -> Result<String> {
        let url = format!("{}/decide", self.endpoint);
        let mut req = self.agent.post(&url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        req.send_json(body)
            .map_err(|e| Error::Backend(format!("POST {url}: {e}")))?
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Backend(format!("reading reply from {url}: {e}")))
    }
}

impl ResolverBackend for LlmBackend {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<ResolverDecision> {
        let body = DecideRequest {
            shortlist: ctx.shortlist,
            query: QueryView {
                text: &ctx.query.raw_text,
                series: ctx.query.series,
                class_term: ctx.query.class_term.as_deref(),
                feature_terms: &ctx.query.feature_terms,
            },
            transcript: ctx.transcript.exchanges(),
        };
        let mut last = String::new();
        for attempt in 0..2 {
            last = self.call(&body)?;
            if let Some(d) = parse_llm_response(&last) {
                return Ok(d);
            }
            tracing::warn!(attempt, reply = %last, "malformed backend reply");
        }
        Err(Error::Backend(format!(
            "reply does not follow the ID:/QUESTION: grammar: {last:?}"
        )))
    }
}
