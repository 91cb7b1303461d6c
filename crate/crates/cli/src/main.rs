use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use deixis_core::corpus::{bundled, compute_stats, load_corpus, CorpusSource};
use deixis_core::resolver::{GeneratorMode, ResolverConfig};
use deixis_core::scene::{PixelPoint, SceneFixture};
use deixis_pipeline::replay::{replay_corpus, replay_session, CorpusBindings, SessionFile};
use deixis_pipeline::service::{serve, ServiceConfig};
use deixis_pipeline::{Backends, BackendsConfig, SceneSource, Session, TurnRequest};

#[derive(Parser)]
#[command(name = "deixis", version, about = "Resolve pronouns in spoken queries from gaze and pointing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Run one turn against a scene fixture.
    Resolve(ResolveArgs),
    /// Replay a scripted session, or a corpus against scene bindings.
    Replay(ReplayArgs),
    /// Corpus utilities.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    V1,
    V2,
}

impl From<Mode> for GeneratorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::V1 => GeneratorMode::V1,
            Mode::V2 => GeneratorMode::V2,
        }
    }
}

#[derive(Args)]
struct BackendArgs {
    /// Backend configuration file. Without it every backend is a mock:
    /// vision reads the scene's annotations and chat echoes its input.
    #[arg(long, value_name = "FILE")]
    backends: Option<PathBuf>,
}

impl BackendArgs {
    fn build(&self) -> Result<Backends> {
        let mut cfg = match &self.backends {
            Some(path) => BackendsConfig::load(path)?,
            None => BackendsConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok());
        Ok(cfg.build()?)
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[command(flatten)]
    backends: BackendArgs,
    /// Default generator mode for new sessions.
    #[arg(long, value_enum, default_value = "v1")]
    mode: Mode,
    /// Directory that `scene_ref` names are looked up in.
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
}

#[derive(Args)]
struct ResolveArgs {
    /// Scene fixture (JSON).
    #[arg(long, value_name = "FILE")]
    scene: PathBuf,
    /// Gaze point in pixels, `u,v`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    gaze: PixelPoint,
    /// Pointing target in pixels, `u,v`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<PixelPoint>,
    #[arg(long)]
    query: String,
    #[arg(long, value_enum, default_value = "v1")]
    mode: Mode,
    /// Print the whole turn, trace included, as JSON.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    backends: BackendArgs,
}

#[derive(Args)]
struct ReplayArgs {
    /// Session script to replay turn by turn.
    #[arg(long, value_name = "FILE", conflicts_with = "corpus", required_unless_present = "corpus")]
    session: Option<PathBuf>,
    /// Corpus (JSON Lines) to run in both generator modes.
    #[arg(long, value_name = "FILE", requires = "bindings")]
    corpus: Option<PathBuf>,
    /// Scene bindings for `--corpus` entries.
    #[arg(long, value_name = "FILE")]
    bindings: Option<PathBuf>,
    /// Where binding scene names are resolved. Defaults to the bindings file's directory.
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    backends: BackendArgs,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Pronoun counts for a corpus file.
    Stats {
        #[arg(long, value_name = "FILE", conflicts_with = "bundled", required_unless_present = "bundled")]
        file: Option<PathBuf>,
        /// Use a corpus shipped with the binary instead of a file.
        #[arg(long, value_enum)]
        bundled: Option<Bundled>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Bundled {
    Part1,
    Part2,
    Part3,
    Diary,
}

impl From<Bundled> for CorpusSource {
    fn from(b: Bundled) -> Self {
        match b {
            Bundled::Part1 => CorpusSource::Part1,
            Bundled::Part2 => CorpusSource::Part2,
            Bundled::Part3 => CorpusSource::Part3,
            Bundled::Diary => CorpusSource::Diary,
        }
    }
}

fn parse_point(s: &str) -> Result<PixelPoint, String> {
    let (u, v) = s
        .split_once(',')
        .ok_or_else(|| format!("expected u,v but got {s:?}"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("not a number: {t:?}"))
    };
    Ok(PixelPoint::new(parse(u)?, parse(v)?))
}

async fn run_resolve(args: ResolveArgs) -> Result<ExitCode> {
    let backends = args.backends.build()?;
    let fixture = SceneFixture::load(&args.scene)
        .with_context(|| format!("loading scene {}", args.scene.display()))?;
    let mut session = Session::new(ResolverConfig::default(), args.mode.into());
    session.wake("hey glass");
    let result = session
        .run_turn(
            &backends,
            TurnRequest {
                query: args.query,
                scene: SceneSource::Fixture(fixture.into()),
                gaze_px: args.gaze,
                point_px: args.point,
                mode: None,
            },
        )
        .await?;
    if args.trace {
        emit(serde_json::to_string_pretty(&result)?)?;
    } else {
        emit(result.answer)?;
        if let Some(explanation) = &result.explanation {
            emit(format!("Explanation: {explanation}"))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

async fn run_replay(args: ReplayArgs) -> Result<ExitCode> {
    let backends = args.backends.build()?;
    if let Some(path) = &args.session {
        let file = SessionFile::load(path)?;
        let report = replay_session(&file, parent_dir(path), &backends).await?;
        if args.json {
            emit(serde_json::to_string_pretty(&report)?)?;
        } else {
            for t in &report.turns {
                let status = if t.mismatches.is_empty() { "ok  " } else { "FAIL" };
                emit(format!("{status} #{} {} -> {}", t.index, t.query, t.answer.replace('\n', " / ")))?;
                for m in &t.mismatches {
                    emit(format!("       {m}"))?;
                }
            }
            let failed = report.turns.iter().filter(|t| !t.mismatches.is_empty()).count();
            emit(format!("{} turns, {failed} failed", report.turns.len()))?;
        }
        return Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }

    let (Some(corpus_path), Some(bindings_path)) = (&args.corpus, &args.bindings) else {
        bail!("--corpus needs --bindings");
    };
    let corpus = load_corpus(corpus_path)?;
    let bindings = CorpusBindings::load(bindings_path)?;
    let fixtures = args
        .fixtures
        .clone()
        .unwrap_or_else(|| parent_dir(bindings_path).to_path_buf());
    let report = replay_corpus(&corpus, &bindings, &fixtures, &backends, ResolverConfig::default()).await;
    if args.json {
        emit(serde_json::to_string_pretty(&report)?)?;
    } else {
        emit(report.to_table().trim_end())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_corpus(command: CorpusCommand) -> Result<ExitCode> {
    let CorpusCommand::Stats { file, bundled: which, json } = command;
    let corpus = match (file, which) {
        (Some(path), _) => load_corpus(&path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(b)) => bundled::load(b.into()),
        (None, None) => bail!("give --file or --bundled"),
    };
    let stats = compute_stats(&corpus);
    if json {
        emit(serde_json::to_string_pretty(&stats)?)?;
    } else {
        emit(stats.to_table().trim_end())?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Write to stdout, surfacing a closed pipe as an error instead of a panic.
fn emit(text: impl std::fmt::Display) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

async fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve(args) => {
            let config = ServiceConfig {
                backends: args.backends.build()?,
                resolver: ResolverConfig::default(),
                mode: args.mode.into(),
                fixtures_dir: args.fixtures,
            };
            serve(args.bind, config).await?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Resolve(args) => run_resolve(args).await,
        Command::Replay(args) => run_replay(args).await,
        Command::Corpus { command } => run_corpus(command),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

/// The error chain, leaving out causes a message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}
