use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use exosolve_core::config::EngineConfig;
use exosolve_core::eval::{
    generate_suite, load_scenario, load_suite, run_benchmark, write_report, write_suite, EmbedderKind, Engine, Flags,
    Method, SuiteConfig, Visibility,
};
use exosolve_core::map::{generate_synthetic_map, load_map, save_map, SceneGenConfig};
use exosolve_core::query::{DemonstrativeLexicon, QueryLevel};
use exosolve_core::resolver::{HumanOracle, LlmBackend, QaTranscript, ShortlistItem};
use exosolve_core::session::{Session, SessionState};
use exosolve_core::{Error, SemanticMap};

use crate::args::{BackendKind, EngineArgs, EvalArgs, FlagArgs, InteractiveArgs, MapCommand, RunArgs, SuiteCommand};

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_schema_error() || matches!(e, Error::Config(_)) {
            2
        } else {
            1
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl CliError {
    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

pub type CliResult<T = ()> = std::result::Result<T, CliError>;

pub fn level(n: u8) -> QueryLevel {
    QueryLevel::ALL[usize::from(n) - 1]
}

pub fn flags(f: &FlagArgs) -> Flags {
    Flags { ssl: f.ssl, qa: f.qa }
}

/// Config file first, then flag overrides, then validation.
pub fn build_engine(a: &EngineArgs) -> CliResult<Engine> {
    let mut cfg = match &a.config {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    };
    let e = &mut cfg.estimators;
    for (slot, v) in [
        (&mut e.sigma_ko, a.sigma_ko),
        (&mut e.sigma_so, a.sigma_so),
        (&mut e.sigma_a, a.sigma_a),
        (&mut e.lambda_a, a.lambda_a),
        (&mut e.kappa, a.kappa),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(k) = a.topk {
        e.topk = k;
    }
    if let Some(n) = a.ssl_noise_deg {
        cfg.ssl.noise_std_deg = n;
    }
    cfg.validate()?;
    let lexicon = match &a.lexicon {
        Some(p) => DemonstrativeLexicon::load(p)?,
        None => DemonstrativeLexicon::default(),
    };
    let mut engine = Engine::new(cfg, lexicon);
    if a.backend == BackendKind::Llm {
        engine.backend = Arc::new(LlmBackend::from_env()?);
    }
    if let Some(url) = &a.embed_endpoint {
        engine.embedder = EmbedderKind::Http { endpoint: url.clone() };
    }
    engine.seed = a.seed;
    Ok(engine)
}

pub fn print_json<T: Serialize>(v: &T) -> CliResult {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::runtime(e.to_string()))?;
    emit(&(text + "\n"))
}

/// Writes to stdout; a closed pipe is not an error.
pub fn emit(text: &str) -> CliResult {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::runtime(e.to_string())),
        _ => Ok(()),
    }
}

pub fn map(cmd: MapCommand) -> CliResult {
    match cmd {
        MapCommand::Validate { path } => {
            let m: SemanticMap = load_map(&path)?;
            let (dt, dv) = m.embedding_dims();
            print_json(&serde_json::json!({
                "path": path,
                "valid": true,
                "objects": m.len(),
                "classes": m.class_vocabulary().len(),
                "d_text": dt,
                "d_vis": dv,
            }))
        }
        MapCommand::Gen {
            objects,
            classes,
            seed,
            out,
        } => {
            let m: SemanticMap = generate_synthetic_map(&SceneGenConfig::with_counts(objects, classes), seed)?;
            save_map(&m, &out)?;
            tracing::info!(path = %out.display(), objects, classes, seed, "map written");
            Ok(())
        }
    }
}

pub fn suite(cmd: SuiteCommand) -> CliResult {
    let SuiteCommand::Gen { out, positions, seed } = cmd;
    let s = generate_suite(&SuiteConfig {
        positions,
        seed,
        ..Default::default()
    })?;
    write_suite(&s, &out)?;
    tracing::info!(path = %out.display(), scenarios = s.scenarios.len(), "suite written");
    Ok(())
}

/// What `run` and `interactive` print.
#[derive(Debug, Serialize)]
pub struct RunOutput {
    pub scenario_id: String,
    pub level: QueryLevel,
    pub flags: Flags,
    pub visible: bool,
    pub skeleton: bool,
    pub target: String,
    pub shortlist: Vec<ShortlistItem>,
    pub transcript: QaTranscript,
    pub final_id: String,
    pub success_top1: bool,
    pub success_top5: bool,
}

fn output(s: &Session, visible: bool) -> RunOutput {
    let scn = &s.scenario().scenario;
    let t = s.transcript().expect("resolved").clone();
    let shortlist = s.prepared().shortlist.clone();
    RunOutput {
        scenario_id: scn.id.clone(),
        level: s.level(),
        flags: s.flags(),
        visible,
        skeleton: s.prepared().observation.skeleton().is_some(),
        target: scn.ground_truth_target.clone(),
        success_top1: t.final_id == scn.ground_truth_target,
        success_top5: shortlist.iter().any(|i| i.object_id == scn.ground_truth_target),
        final_id: t.final_id.clone(),
        shortlist,
        transcript: t,
    }
}

fn start(engine: &Engine, path: &Path, lvl: u8, f: &FlagArgs) -> CliResult<(Session, bool)> {
    let scn = load_scenario(path, &engine.lexicon)?;
    let visible = f
        .visibility
        .map_or(scn.scenario.user.visible_initially, |v| v == Visibility::Visible);
    let s = Session::start(scn.id().to_string(), engine, scn, level(lvl), flags(f), f.visibility)?;
    Ok((s, visible))
}

pub fn run(a: RunArgs) -> CliResult {
    let engine = build_engine(&a.engine)?;
    let (mut s, visible) = start(&engine, &a.scenario, a.level, &a.flags)?;
    s.run_to_end(&engine)?;
    print_json(&output(&s, visible))
}

pub fn interactive(a: InteractiveArgs) -> CliResult {
    let mut engine = build_engine(&a.engine)?;
    engine.oracle = Arc::new(HumanOracle::new(BufReader::new(std::io::stdin()), std::io::stdout()));
    let (mut s, visible) = start(&engine, &a.scenario, a.level, &a.flags)?;
    println!("{}", s.scenario().scenario.queries.get(level(a.level)));
    for (i, item) in s.prepared().shortlist.iter().enumerate() {
        println!(
            "  {}. {} ({}) p={:.3}",
            i + 1,
            item.object_id,
            item.class_label,
            item.fused_probability
        );
    }
    if s.decide(&engine)? == SessionState::AwaitingAnswer {
        s.run_to_end(&engine)?;
    }
    let _ = std::io::stdout().flush();
    let out = output(&s, visible);
    if let Some(p) = &a.save {
        let text = serde_json::to_string_pretty(&out.transcript).map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(p, text + "\n").map_err(|e| Error::io(p, e))?;
    }
    print_json(&out)
}

pub fn eval(a: EvalArgs) -> CliResult {
    let engine = build_engine(&a.engine)?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let vis = a
        .visibility
        .iter()
        .map(|v| v.parse::<Visibility>())
        .collect::<Result<Vec<_>, _>>()?;
    let scenarios = load_suite(&a.suite, &engine.lexicon)?;
    let report = run_benchmark(&engine, &scenarios, &methods, &vis)?;
    write_report(&report, &a.out)?;
    emit(&report.to_csv()?)?;
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        tracing::error!(check = %c.name, hard = c.hard, detail = %c.detail, "invariant check failed");
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::runtime(format!("{} invariant checks failed", failed.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn engine_args(extra: &[&str]) -> EngineArgs {
        let argv = ["exosolve", "run", "s.json", "--level", "1"]
            .into_iter()
            .chain(extra.iter().copied());
        match crate::args::Cli::try_parse_from(argv).unwrap().command {
            crate::args::Command::Run(r) => r.engine,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "[estimators]\nkappa = 2.0\nsigma_so = 0.5\n[ssl]\nnoise_std_deg = 3.0\n",
        )
        .unwrap();
        let e = build_engine(&engine_args(&[
            "--config",
            p.to_str().unwrap(),
            "--kappa",
            "6",
            "--seed",
            "4",
        ]))
        .unwrap();
        assert_eq!(e.config.estimators.kappa, 6.0);
        assert_eq!(e.config.estimators.sigma_so, 0.5);
        assert_eq!(e.config.ssl.noise_std_deg, 3.0);
        assert_eq!(e.seed, Some(4));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::Validation("x".into())).code, 2);
        assert_eq!(CliError::from(Error::Config("x".into())).code, 2);
        assert_eq!(CliError::from(Error::Backend("x".into())).code, 1);
        assert_eq!(
            build_engine(&engine_args(&["--topk", "0"])).err().map(|e| e.code),
            Some(2)
        );
    }
}
