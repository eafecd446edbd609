//! One scenario run through the full pipeline.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::estimators::estimate_all;
use crate::perception::acquire_observation;
use crate::query::{parse_query, DemonstrativeLexicon, EmbeddingProvider, HttpEmbedder, QueryLevel, ToyEmbedder};
use crate::resolver::{
    first_pass, second_pass, FirstPass, QaTranscript, Reestimator, ResolutionPath, ResolverBackend, RuleBackend,
    ScriptedOracle, ShortlistItem, UserOracle,
};
use crate::{Estimates, ParsedQuery, RankedObject, SemanticMap, UserObservation};

use super::baselines::baseline_vgpn;
use super::scenario::LoadedScenario;
use super::{Method, Visibility};

/// Which embedding provider backs query parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum EmbedderKind {
    #[default]
    Toy,
    Http {
        endpoint: String,
    },
}

impl EmbedderKind {
    pub fn provider(&self, dims: (usize, usize)) -> Box<dyn EmbeddingProvider<f64>> {
        match self {
            EmbedderKind::Toy => Box::new(ToyEmbedder::new(dims.0, dims.1)),
            EmbedderKind::Http { endpoint } => Box::new(HttpEmbedder::new(endpoint.clone(), dims.0, dims.1)),
        }
    }
}

/// Everything an episode needs besides the scenario.
#[derive(Clone)]
pub struct Engine {
    pub config: EngineConfig,
    pub lexicon: DemonstrativeLexicon,
    pub embedder: EmbedderKind,
    pub backend: Arc<dyn ResolverBackend>,
    pub oracle: Arc<dyn UserOracle>,
    /// Replaces every scenario's own seed when set.
    pub seed: Option<u64>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(EngineConfig::default(), DemonstrativeLexicon::default())
    }
}

/// SSL and Q&A switches for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub ssl: bool,
    pub qa: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self { ssl: true, qa: true }
    }
}

/// Pipeline state after estimation, before resolution.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub observation: UserObservation,
    pub query: ParsedQuery,
    pub estimates: Estimates,
    pub shortlist: Vec<ShortlistItem>,
}

/// Seed for the per-episode SSL draw. Independent of method and visibility so
/// ablations see the same noise.
pub fn episode_seed(scenario_seed: u64, level: QueryLevel) -> u64 {
    let mut z = scenario_seed ^ (u64::from(level.number()) << 56);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Engine {
    pub fn new(config: EngineConfig, lexicon: DemonstrativeLexicon) -> Self {
        Self {
            config,
            backend: Arc::new(RuleBackend::new(lexicon.clone())),
            oracle: Arc::new(ScriptedOracle),
            lexicon,
            embedder: EmbedderKind::Toy,
            seed: None,
        }
    }

    pub fn parse(&self, text: &str, map: &SemanticMap) -> Result<ParsedQuery> {
        let provider = self.embedder.provider(map.embedding_dims());
        let vocab = map.class_vocabulary();
        parse_query(text, provider.as_ref(), &self.lexicon, Some(&vocab))
    }

    pub fn observe(
        &self,
        scn: &LoadedScenario,
        level: QueryLevel,
        ssl: bool,
        visibility: Option<Visibility>,
    ) -> UserObservation {
        let mut truth = scn.scenario.user.observation();
        if let Some(v) = visibility {
            truth.visible_initially = v == Visibility::Visible;
        }
        let seed = episode_seed(self.seed.unwrap_or(scn.scenario.seed), level);
        acquire_observation(&truth, &self.config.ssl_config(), ssl, seed)
    }

    pub fn estimate(
        &self,
        scn: &LoadedScenario,
        query: &ParsedQuery,
        obs: &UserObservation,
    ) -> Result<(Estimates, Vec<ShortlistItem>)> {
        let est = estimate_all(
            &scn.map,
            query,
            obs,
            scn.scenario.robot_position,
            &self.config.demonstrative(),
            &self.config.pointing(),
            self.config.estimators.topk,
        )?;
        let shortlist = self.items(scn, &est.fused.shortlist);
        Ok((est, shortlist))
    }

    /// Resolver view of ranked objects, with attributes from the scenario table.
    pub fn items(&self, scn: &LoadedScenario, ranked: &[RankedObject]) -> Vec<ShortlistItem> {
        ranked
            .iter()
            .map(|r| {
                let entry = scn.map.get(&r.object_id).expect("ranked ids come from the map");
                ShortlistItem {
                    object_id: r.object_id.clone(),
                    class_label: entry.class_label.clone(),
                    fused_probability: r.probability,
                    image_ref: entry.image_ref.clone(),
                    attributes: scn
                        .scenario
                        .attributes
                        .get(&r.object_id)
                        .map(|a| a.features.clone())
                        .unwrap_or_default(),
                }
            })
            .collect()
    }

    /// Observation, parse, estimation and shortlist for one episode.
    pub fn prepare(
        &self,
        scn: &LoadedScenario,
        level: QueryLevel,
        flags: Flags,
        visibility: Option<Visibility>,
    ) -> Result<Prepared> {
        let observation = self.observe(scn, level, flags.ssl, visibility);
        let mut query = self.parse(scn.scenario.queries.get(level), &scn.map)?;
        query.level = Some(level);
        let (estimates, shortlist) = self.estimate(scn, &query, &observation)?;
        Ok(Prepared {
            observation,
            query,
            estimates,
            shortlist,
        })
    }

    pub fn reestimator<'a>(&'a self, scn: &'a LoadedScenario, obs: &'a UserObservation) -> EpisodeReestimator<'a> {
        EpisodeReestimator { engine: self, scn, obs }
    }

    /// Shortlist decision with the automated user; fused head without Q&A.
    pub fn resolve(&self, scn: &LoadedScenario, prep: &Prepared, qa: bool) -> Result<QaTranscript> {
        let head = prep.shortlist.first().ok_or(Error::EmptyInput("shortlist"))?;
        if !qa {
            return Ok(QaTranscript {
                exchanges: Default::default(),
                final_id: head.object_id.clone(),
                resolution_path: ResolutionPath::ArgmaxFallback,
                refreshed_shortlist: None,
            });
        }
        let re = self.reestimator(scn, &prep.observation);
        match first_pass(&prep.shortlist, &prep.query, self.backend.as_ref())? {
            FirstPass::Resolved(t) => Ok(t),
            FirstPass::Question(q) => {
                let answer = self
                    .oracle
                    .answer(&q, &scn.scenario.ground_truth_target, &scn.scenario.attributes);
                second_pass(
                    &prep.shortlist,
                    &prep.query,
                    &q,
                    answer.as_deref(),
                    self.backend.as_ref(),
                    &re,
                )
            }
        }
    }

    pub fn run_episode(
        &self,
        scn: &LoadedScenario,
        level: QueryLevel,
        method: Method,
        visibility: Option<Visibility>,
    ) -> EpisodeResult {
        let start = Instant::now();
        let flags = method.flags();
        let visible = visibility.map_or(scn.scenario.user.visible_initially, |v| v == Visibility::Visible);
        let mut r = EpisodeResult {
            scenario_id: scn.id().to_string(),
            level,
            method,
            visible,
            ssl: flags.ssl,
            qa: flags.qa,
            skeleton: false,
            target: scn.scenario.ground_truth_target.clone(),
            shortlist: Vec::new(),
            transcript: None,
            final_id: None,
            success_top1: false,
            success_top5: false,
            not_applicable: false,
            error: None,
            wall_time: Duration::ZERO,
        };
        if let Err(e) = self.run_into(scn, level, method, visibility, &mut r) {
            tracing::warn!(scenario = %r.scenario_id, level = level.number(), method = %method, error = %e, "episode failed");
            r.error = Some(e.to_string());
            r.success_top1 = false;
            r.success_top5 = false;
        }
        r.wall_time = start.elapsed();
        r
    }

    fn run_into(
        &self,
        scn: &LoadedScenario,
        level: QueryLevel,
        method: Method,
        visibility: Option<Visibility>,
        r: &mut EpisodeResult,
    ) -> Result<()> {
        let flags = method.flags();
        if method == Method::Vgpn {
            let obs = self.observe(scn, level, false, visibility);
            r.skeleton = obs.skeleton().is_some();
            let query = self.parse(scn.scenario.queries.get(level), &scn.map)?;
            r.final_id = baseline_vgpn(&scn.map, &query, &obs);
            r.success_top1 = r.final_id.as_deref() == Some(r.target.as_str());
            r.success_top5 = r.success_top1;
            return Ok(());
        }
        let prep = self.prepare(scn, level, flags, visibility)?;
        r.skeleton = prep.observation.skeleton().is_some();
        if method == Method::Ecrap && prep.query.class_term.is_none() && !r.skeleton {
            r.not_applicable = true;
            return Ok(());
        }
        r.shortlist = prep.shortlist.clone();
        r.success_top5 = prep.shortlist.iter().any(|i| i.object_id == r.target);
        let t = self.resolve(scn, &prep, flags.qa)?;
        r.final_id = Some(t.final_id.clone());
        r.success_top1 = t.final_id == r.target;
        r.transcript = Some(t);
        Ok(())
    }
}

/// Re-parses and re-estimates with the user's answer folded into the query.
pub struct EpisodeReestimator<'a> {
    engine: &'a Engine,
    scn: &'a LoadedScenario,
    obs: &'a UserObservation,
}

impl Reestimator for EpisodeReestimator<'_> {
    fn augment(&self, query: &ParsedQuery, answer: &str) -> Result<ParsedQuery> {
        let text = format!("{} {}", query.raw_text.trim_end(), answer.trim());
        let mut q = self.engine.parse(&text, &self.scn.map)?;
        q.level = query.level;
        Ok(q)
    }

    fn rerank(&self, query: &ParsedQuery) -> Result<Vec<ShortlistItem>> {
        let (est, _) = self.engine.estimate(self.scn, query, self.obs)?;
        Ok(self.engine.items(self.scn, &est.fused.distribution.ranking()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario_id: String,
    pub level: QueryLevel,
    pub method: Method,
    pub visible: bool,
    pub ssl: bool,
    pub qa: bool,
    /// Whether skeleton data was available after acquisition.
    pub skeleton: bool,
    pub target: String,
    pub shortlist: Vec<ShortlistItem>,
    pub transcript: Option<QaTranscript>,
    pub final_id: Option<String>,
    pub success_top1: bool,
    pub success_top5: bool,
    /// The method declines this episode; excluded from its success rates.
    pub not_applicable: bool,
    pub error: Option<String>,
    /// Kept out of serialized output so reports stay byte-stable.
    #[serde(skip)]
    pub wall_time: Duration,
}
