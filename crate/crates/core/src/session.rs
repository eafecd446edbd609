//! Stepwise resolution for live use: estimate, maybe ask, resolve.
//!
//! `run`, `interactive` and the HTTP service all drive this same state
//! machine, so a given scenario, level, seed and backend ends the same way
//! whichever front end runs it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{demonstrative_mean, sigma_for};
use crate::eval::{Engine, Flags, LoadedScenario, Prepared, Visibility};
use crate::query::{DemonstrativeSeries, QueryLevel};
use crate::resolver::{first_pass, second_pass, FirstPass, QaTranscript, ResolutionPath, ShortlistItem};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionState {
    Estimated,
    AwaitingAnswer,
    Resolved,
}

pub struct Session {
    id: String,
    scenario: LoadedScenario,
    level: QueryLevel,
    flags: Flags,
    prepared: Prepared,
    state: SessionState,
    question: Option<String>,
    transcript: Option<QaTranscript>,
}

impl Session {
    /// Runs estimation; the session starts in `ESTIMATED`.
    pub fn start(
        id: impl Into<String>,
        engine: &Engine,
        scenario: LoadedScenario,
        level: QueryLevel,
        flags: Flags,
        visibility: Option<Visibility>,
    ) -> Result<Self> {
        let prepared = engine.prepare(&scenario, level, flags, visibility)?;
        Ok(Self {
            id: id.into(),
            scenario,
            level,
            flags,
            prepared,
            state: SessionState::Estimated,
            question: None,
            transcript: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn level(&self) -> QueryLevel {
        self.level
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn question(&self) -> Option<&str> {
        self.question.as_deref()
    }

    pub fn transcript(&self) -> Option<&QaTranscript> {
        self.transcript.as_ref()
    }

    pub fn prepared(&self) -> &Prepared {
        &self.prepared
    }

    pub fn scenario(&self) -> &LoadedScenario {
        &self.scenario
    }

    /// First resolver pass. Without Q&A the fused head is final.
    pub fn decide(&mut self, engine: &Engine) -> Result<SessionState> {
        if self.state != SessionState::Estimated {
            return Err(Error::InvalidState(format!("cannot decide in state {:?}", self.state)));
        }
        let shortlist = &self.prepared.shortlist;
        if !self.flags.qa {
            let head = shortlist.first().ok_or(Error::EmptyInput("shortlist"))?;
            self.finish(QaTranscript {
                exchanges: Default::default(),
                final_id: head.object_id.clone(),
                resolution_path: ResolutionPath::ArgmaxFallback,
                refreshed_shortlist: None,
            });
            return Ok(self.state);
        }
        match first_pass(shortlist, &self.prepared.query, engine.backend.as_ref())? {
            FirstPass::Resolved(t) => self.finish(t),
            FirstPass::Question(q) => {
                self.question = Some(q);
                self.state = SessionState::AwaitingAnswer;
            }
        }
        Ok(self.state)
    }

    /// Supplies the user's answer; `None` means the user gave none.
    pub fn answer(&mut self, engine: &Engine, text: Option<&str>) -> Result<SessionState> {
        if self.state != SessionState::AwaitingAnswer {
            return Err(Error::InvalidState(format!(
                "no question is pending (state {:?})",
                self.state
            )));
        }
        let question = self.question.clone().unwrap_or_default();
        let re = engine.reestimator(&self.scenario, &self.prepared.observation);
        let t = second_pass(
            &self.prepared.shortlist,
            &self.prepared.query,
            &question,
            text,
            engine.backend.as_ref(),
            &re,
        )?;
        self.finish(t);
        Ok(self.state)
    }

    /// Drives the session to completion with the engine's automated oracle.
    pub fn run_to_end(&mut self, engine: &Engine) -> Result<&QaTranscript> {
        if self.state == SessionState::Estimated {
            self.decide(engine)?;
        }
        if self.state == SessionState::AwaitingAnswer {
            let q = self.question.clone().unwrap_or_default();
            let s = &self.scenario.scenario;
            let a = engine.oracle.answer(&q, &s.ground_truth_target, &s.attributes);
            self.answer(engine, a.as_deref())?;
        }
        Ok(self.transcript.as_ref().expect("resolved sessions carry a transcript"))
    }

    fn finish(&mut self, t: QaTranscript) {
        self.transcript = Some(t);
        self.state = SessionState::Resolved;
    }

    pub fn view(&self, engine: &Engine) -> SessionView {
        let p = &self.prepared;
        let est = &p.estimates;
        let shortlist = p
            .shortlist
            .iter()
            .map(|item| CandidateView {
                p1: est.linguistic.get(&item.object_id).unwrap_or(0.0),
                p2: est.demonstrative.get(&item.object_id).unwrap_or(0.0),
                p3: est.pointing.get(&item.object_id).unwrap_or(0.0),
                item: item.clone(),
            })
            .collect();
        let obs = &p.observation;
        let model = engine.config.demonstrative();
        let region = demonstrative_mean(p.query.series, obs, self.scenario.scenario.robot_position, &model)
            .ok()
            .map(|mean| RegionView {
                series: p.query.series,
                mean,
                sigma: sigma_for(p.query.series, &model),
            });
        let pointing_ray = obs.skeleton().filter(|_| obs.has_pointing).and_then(|(eye, wrist)| {
            (wrist - eye)
                .normalized()
                .map(|direction| RayView { origin: eye, direction })
        });
        let success = self
            .transcript
            .as_ref()
            .map(|t| t.final_id == self.scenario.scenario.ground_truth_target);
        SessionView {
            session_id: self.id.clone(),
            state: self.state,
            scenario_id: self.scenario.id().to_string(),
            level: self.level,
            flags: self.flags,
            query: QueryView {
                text: p.query.raw_text.clone(),
                series: p.query.series,
                class_term: p.query.class_term.clone(),
                feature_terms: p.query.feature_terms.clone(),
            },
            shortlist,
            question: self.question.clone(),
            transcript: self.transcript.clone(),
            final_id: self.transcript.as_ref().map(|t| t.final_id.clone()),
            resolution_path: self.transcript.as_ref().map(|t| t.resolution_path),
            success_top1: success,
            scene: SceneView {
                objects: self
                    .scenario
                    .map
                    .objects()
                    .iter()
                    .map(|o| ObjectView {
                        id: o.id.clone(),
                        class_label: o.class_label.clone(),
                        position: o.position,
                    })
                    .collect(),
                user: UserView {
                    eye: obs.eye,
                    wrist: obs.wrist,
                    visible_initially: obs.visible_initially,
                    has_pointing: obs.has_pointing,
                    true_bearing: obs.true_bearing,
                    ssl_bearing: obs.ssl_bearing,
                },
                robot: self.scenario.scenario.robot_position,
                pointing_ray,
                demonstrative_region: region,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    #[serde(flatten)]
    pub item: ShortlistItem,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub text: String,
    pub series: DemonstrativeSeries,
    pub class_term: Option<String>,
    pub feature_terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectView {
    pub id: String,
    pub class_label: String,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserView {
    pub eye: Option<Vec3>,
    pub wrist: Option<Vec3>,
    pub visible_initially: bool,
    pub has_pointing: bool,
    pub true_bearing: f64,
    pub ssl_bearing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayView {
    pub origin: Vec3,
    pub direction: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionView {
    pub series: DemonstrativeSeries,
    pub mean: Vec3,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneView {
    pub objects: Vec<ObjectView>,
    pub user: UserView,
    pub robot: Vec3,
    pub pointing_ray: Option<RayView>,
    pub demonstrative_region: Option<RegionView>,
}

/// Everything a client needs to render a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub state: SessionState,
    pub scenario_id: String,
    pub level: QueryLevel,
    pub flags: Flags,
    pub query: QueryView,
    /// Fused shortlist with each estimator's probability for the same object.
    pub shortlist: Vec<CandidateView>,
    pub question: Option<String>,
    pub transcript: Option<QaTranscript>,
    pub final_id: Option<String>,
    pub resolution_path: Option<ResolutionPath>,
    pub success_top1: Option<bool>,
    pub scene: SceneView,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{generate_suite, Method, SuiteConfig};
    use crate::query::DemonstrativeLexicon;

    fn suite() -> Vec<LoadedScenario> {
        generate_suite(&SuiteConfig {
            positions: 1,
            ..Default::default()
        })
        .unwrap()
        .load(&DemonstrativeLexicon::default())
        .unwrap()
    }

    #[test]
    fn matches_episode_runner() {
        let e = Engine::default();
        for scn in suite() {
            for level in QueryLevel::ALL {
                let mut s = Session::start("x", &e, scn.clone(), level, Flags::default(), None).unwrap();
                let t = s.run_to_end(&e).unwrap().clone();
                let r = e.run_episode(&scn, level, Method::Miel, None);
                assert_eq!(r.transcript.as_ref(), Some(&t));
            }
        }
    }

    #[test]
    fn state_guards() {
        let e = Engine::default();
        let scn = suite().remove(0);
        let mut s = Session::start("x", &e, scn, QueryLevel::L3, Flags::default(), None).unwrap();
        assert_eq!(s.state(), SessionState::Estimated);
        assert!(matches!(s.answer(&e, Some("red")), Err(Error::InvalidState(_))));
        let st = s.decide(&e).unwrap();
        if st == SessionState::AwaitingAnswer {
            assert!(s.question().is_some());
            s.answer(&e, None).unwrap();
            assert_eq!(s.transcript().unwrap().resolution_path, ResolutionPath::ArgmaxFallback);
        }
        assert_eq!(s.state(), SessionState::Resolved);
        assert!(matches!(s.decide(&e), Err(Error::InvalidState(_))));
        assert!(matches!(s.answer(&e, Some("x")), Err(Error::InvalidState(_))));
    }

    #[test]
    fn view_carries_per_estimator_columns() {
        let e = Engine::default();
        let scn = suite().remove(0);
        let s = Session::start("x", &e, scn, QueryLevel::L1, Flags::default(), None).unwrap();
        let v = s.view(&e);
        assert_eq!(v.shortlist.len(), 5);
        let p = &s.prepared().estimates;
        for c in &v.shortlist {
            assert_eq!(c.p1, p.linguistic.get(&c.item.object_id).unwrap());
        }
        assert!(v.scene.pointing_ray.is_some());
        assert!(v.scene.demonstrative_region.is_some());
        assert_eq!(v.scene.objects.len(), 114);
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["state"], "ESTIMATED");
        assert!(json["shortlist"][0]["object_id"].is_string());
    }
}
