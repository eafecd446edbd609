use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "exosolve",
    version,
    about = "Resolve demonstrative robot instructions to objects in a semantic map"
)]
pub struct Cli {
    /// Log level for the JSON log stream on stderr.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: tracing::Level,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Semantic map utilities.
    #[command(subcommand)]
    Map(MapCommand),
    /// Evaluation suite utilities.
    #[command(subcommand)]
    Suite(SuiteCommand),
    /// Run one scenario at one query level with the automated user.
    Run(RunArgs),
    /// Run one scenario and answer the clarifying question yourself.
    Interactive(InteractiveArgs),
    /// Run the benchmark over a suite directory.
    Eval(EvalArgs),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum MapCommand {
    /// Check a map file against the schema.
    Validate { path: PathBuf },
    /// Write a synthetic map.
    Gen {
        #[arg(long, default_value_t = 114)]
        objects: usize,
        #[arg(long, default_value_t = 39)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SuiteCommand {
    /// Write a synthetic scenario suite (maps plus *.scenario.json).
    Gen {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        positions: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Rule,
    Llm,
}

/// Engine settings shared by every pipeline subcommand.
#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// TOML file with [estimators] and [ssl] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON demonstrative lexicon replacing the built-in one.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Overrides every scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "rule")]
    pub backend: BackendKind,
    /// Embedding service; the built-in hashing embedder is used when unset.
    #[arg(long)]
    pub embed_endpoint: Option<String>,
    #[arg(long)]
    pub sigma_ko: Option<f64>,
    #[arg(long)]
    pub sigma_so: Option<f64>,
    #[arg(long)]
    pub sigma_a: Option<f64>,
    #[arg(long)]
    pub lambda_a: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long)]
    pub ssl_noise_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct FlagArgs {
    /// Disable sound source localization for hidden users.
    #[arg(long = "no-ssl", action = clap::ArgAction::SetFalse)]
    pub ssl: bool,
    /// Skip the clarifying question; the fused head is final.
    #[arg(long = "no-qa", action = clap::ArgAction::SetFalse)]
    pub qa: bool,
    /// Force the user visible or hidden instead of the scenario's setting.
    #[arg(long, value_parser = parse_visibility)]
    pub visibility: Option<exosolve_core::eval::Visibility>,
}

fn parse_visibility(s: &str) -> Result<exosolve_core::eval::Visibility, String> {
    s.parse().map_err(|e: exosolve_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub level: u8,
    #[command(flatten)]
    pub flags: FlagArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct InteractiveArgs {
    pub scenario: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub level: u8,
    /// Where to write the transcript as JSON.
    #[arg(long)]
    pub save: Option<PathBuf>,
    #[command(flatten)]
    pub flags: FlagArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub suite: PathBuf,
    /// Comma-separated methods.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "miel,miel-no-ssl,miel-no-qa,ecrap,vgpn"
    )]
    pub methods: Vec<String>,
    /// Comma-separated visibilities.
    #[arg(long, value_delimiter = ',', default_value = "visible,hidden")]
    pub visibility: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub addr: SocketAddr,
    /// Sessions untouched for this many seconds are dropped.
    #[arg(long, default_value_t = 600)]
    pub idle_timeout_secs: u64,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("exosolve").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_default_on() {
        let Command::Run(r) = parse(&["run", "s.json", "--level", "2"]).command else {
            panic!()
        };
        assert!(r.flags.ssl && r.flags.qa);
        assert_eq!(r.engine.backend, BackendKind::Rule);
        let Command::Run(r) = parse(&["run", "s.json", "--level", "2", "--no-qa", "--no-ssl"]).command else {
            panic!()
        };
        assert!(!r.flags.ssl && !r.flags.qa);
    }

    #[test]
    fn level_is_bounded() {
        assert!(Cli::try_parse_from(["exosolve", "run", "s.json", "--level", "4"]).is_err());
        assert!(Cli::try_parse_from(["exosolve", "run", "s.json"]).is_err());
    }

    #[test]
    fn eval_lists_split_on_commas() {
        let Command::Eval(e) = parse(&["eval", "--suite", "d", "--methods", "miel,vgpn", "--out", "o"]).command else {
            panic!()
        };
        assert_eq!(e.methods, ["miel", "vgpn"]);
        assert_eq!(e.visibility, ["visible", "hidden"]);
    }
}
