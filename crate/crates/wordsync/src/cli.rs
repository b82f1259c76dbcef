//! The `wordsync` command line.
//!
//! Exit codes: 0 on success, 1 when the work itself fails, 2 for usage and
//! configuration errors (including missing credentials). Tables go to
//! standard output; machine-readable results only to `--out` files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use wordsync_core::analysis::{
    aligned_average_distances, export_trajectory, pair_stats, strategy_metrics, AnalysisError,
    PairStats, SampleFilter, StrategyReport, TrajectoryExport,
};
use wordsync_core::{EmbeddingTable, GameConfig, GameRecord, PlayerKind, PlayerSpec, ValidationMode, Word};

use crate::dictionary::{Dictionary, RemoteDictionary, WordList, WIKTIONARY_BASE};
use crate::embeddings::{
    read_embedding_file, EmbeddingStore, RemoteEmbeddings, DEFAULT_EMBEDDING_MODEL,
};
use crate::llm::{ChatClient, LlmConfig};
use crate::service::{AppState, Machines, ServiceConfig};
use crate::storage::load_games;
use crate::tournament::{Clock, Harness, TournamentError, TournamentSpec};

#[derive(Debug, Parser)]
#[command(name = "wordsync", version, about = "Word synchronization game: tournaments, analysis and live play")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play a batch of games between two players and append them to a log.
    Run(RunArgs),
    /// Statistics over a game log.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Export plot data.
    Export {
        #[command(subcommand)]
        what: ExportCommand,
    },
    /// Check whether words exist.
    Validate(ValidateArgs),
    /// Fetch embeddings for every word in a log (or word list) into a file.
    EmbedCache(EmbedCacheArgs),
    /// Host live games over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Success rate and average rounds per model pair.
    Success(SuccessArgs),
    /// Mirroring versus balancing per model.
    Strategy(StrategyArgs),
    /// Round distance averaged over the last rounds of each game.
    Distances(DistancesArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// 3-D PCA trajectories of game words.
    Pca(PcaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Remote,
    Local,
    Off,
}

impl From<ModeArg> for ValidationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Remote => ValidationMode::Remote,
            ModeArg::Local => ValidationMode::Local,
            ModeArg::Off => ValidationMode::Off,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DictionaryArgs {
    /// Word list for local validation (one word per line, `#` comments).
    #[arg(long)]
    pub word_list: Option<PathBuf>,
    /// Remote lookup cache (`word<TAB>0|1` lines).
    #[arg(long)]
    pub dict_cache: Option<PathBuf>,
    #[arg(long, default_value = WIKTIONARY_BASE)]
    pub wiktionary_url: String,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Seat A, e.g. `agent:balance` or `llm:gpt-4o-mini`.
    #[arg(long)]
    pub player_a: String,
    #[arg(long)]
    pub player_b: String,
    #[arg(long, default_value_t = 20)]
    pub games: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Agent vocabulary (embedding file).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value = "games.jsonl")]
    pub log: PathBuf,
    /// Games played at once.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long, default_value_t = wordsync_core::game::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: u32,
    #[arg(long, default_value_t = wordsync_core::game::DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    #[arg(long, default_value_t = wordsync_core::game::DEFAULT_MAX_OUTPUT_TOKENS)]
    pub max_tokens: u32,
    /// Word validation; defaults to `remote` with a model player and `off`
    /// for agents only.
    #[arg(long, value_enum)]
    pub validation: Option<ModeArg>,
    #[command(flatten)]
    pub dictionary: DictionaryArgs,
    /// Send only the system prompt and current prompt, without replaying
    /// the player's earlier words as assistant turns.
    #[arg(long)]
    pub no_own_turns: bool,
    /// Concurrent chat requests.
    #[arg(long, default_value_t = 4)]
    pub max_requests: usize,
    /// Real timestamps even for agent-only runs.
    #[arg(long)]
    pub wall_clock: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LogArgs {
    #[arg(long, default_value = "games.jsonl")]
    pub log: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SuccessArgs {
    #[command(flatten)]
    pub log: LogArgs,
    /// CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    #[command(flatten)]
    pub log: LogArgs,
    /// Embedding file covering every word in the log.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Models to report; all models in the log by default.
    #[arg(long = "model")]
    pub models: Vec<String>,
    /// Also use games that were not won.
    #[arg(long)]
    pub include_losses: bool,
    /// Also use games lost to an invalid word.
    #[arg(long)]
    pub include_invalid: bool,
    /// JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DistancesArgs {
    #[command(flatten)]
    pub log: LogArgs,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Rounds counted back from the end of each game.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Only games between these two models, e.g. `gpt-4o,gpt-4o-mini`.
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long)]
    pub wins_only: bool,
    /// CSV output (offset, mean, count).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub log: LogArgs,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// A single game; every game by default.
    #[arg(long)]
    pub game: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<ExportFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub words: Vec<String>,
    #[arg(long, value_enum, default_value = "remote")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub dictionary: DictionaryArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedCacheArgs {
    /// Take the words from this game log.
    #[arg(long, conflicts_with = "words")]
    pub log: Option<PathBuf>,
    /// Take the words from a word list instead.
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Cache file to create or extend.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = DEFAULT_EMBEDDING_MODEL)]
    pub model: String,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    #[arg(long, default_value = "games.jsonl")]
    pub log: PathBuf,
    /// Vocabulary for agent opponents.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Directory with the web client.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Idle seconds before a game is closed.
    #[arg(long, default_value_t = 1800)]
    pub ttl_secs: u64,
    #[arg(long, default_value_t = wordsync_core::game::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: u32,
    #[arg(long, value_enum, default_value = "remote")]
    pub validation: ModeArg,
    #[command(flatten)]
    pub dictionary: DictionaryArgs,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses the process arguments and runs the command.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let default_level = match cli.command {
        Command::Serve(_) => "info",
        _ => "warn",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("WORDSYNC_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(1);
        }
    };
    let mut stdout = std::io::stdout().lock();
    match runtime.block_on(execute(cli, &mut stdout)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a parsed command, writing tables to `stdout`.
pub async fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut text = String::new();
    match cli.command {
        Command::Run(args) => run_games(args, &mut text).await?,
        Command::Analyze { what } => match what {
            AnalyzeCommand::Success(a) => analyze_success(a, &mut text)?,
            AnalyzeCommand::Strategy(a) => analyze_strategy(a, &mut text)?,
            AnalyzeCommand::Distances(a) => analyze_distances(a, &mut text)?,
        },
        Command::Export { what } => match what {
            ExportCommand::Pca(a) => export_pca(a, &mut text)?,
        },
        Command::Validate(a) => validate_words(a, &mut text).await?,
        Command::EmbedCache(a) => embed_cache(a, &mut text).await?,
        Command::Serve(a) => serve(a).await?,
    }
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .context("writing to stdout")?;
    Ok(())
}

fn build_dictionary(mode: ValidationMode, args: &DictionaryArgs) -> Result<Dictionary, CliError> {
    Ok(match mode {
        ValidationMode::Off => Dictionary::Off,
        ValidationMode::Local => {
            let path = args
                .word_list
                .as_ref()
                .ok_or_else(|| usage("local validation needs --word-list"))?;
            Dictionary::Local(WordList::load(path).map_err(|e| usage(e.to_string()))?)
        }
        ValidationMode::Remote => {
            let mut remote = RemoteDictionary::new(&args.wiktionary_url)
                .map_err(|e| CliError::Runtime(e.into()))?;
            if let Some(cache) = &args.dict_cache {
                remote = remote
                    .with_cache_file(cache)
                    .map_err(|e| usage(e.to_string()))?;
            }
            Dictionary::Remote(Box::new(remote))
        }
    })
}

fn load_vocab(path: &Path) -> Result<EmbeddingTable, CliError> {
    read_embedding_file(path).map_err(|e| usage(format!("cannot read vocabulary: {e}")))
}

async fn run_games(args: RunArgs, out: &mut String) -> Result<(), CliError> {
    let player_a = PlayerSpec::parse(&args.player_a).map_err(usage)?;
    let player_b = PlayerSpec::parse(&args.player_b).map_err(usage)?;
    let specs = [&player_a, &player_b];
    let has_llm = specs.iter().any(|p| p.kind == PlayerKind::Llm);
    let has_agent = specs.iter().any(|p| p.kind == PlayerKind::Agent);
    if specs.iter().any(|p| p.kind == PlayerKind::Human) {
        return Err(usage("human players join through `serve`, not `run`"));
    }

    let chat = if has_llm {
        let mut cfg = LlmConfig::from_env().map_err(|e| usage(e.to_string()))?;
        cfg.own_turns = !args.no_own_turns;
        cfg.max_concurrency = args.max_requests.max(1);
        Some(ChatClient::new(cfg).map_err(|e| CliError::Runtime(e.into()))?)
    } else {
        None
    };
    let (vocabulary, vocabulary_ref) = match (&args.vocab, has_agent) {
        (Some(p), _) => (
            Some(Arc::new(load_vocab(p)?)),
            Some(p.file_name().map_or_else(
                || p.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            )),
        ),
        (None, true) => return Err(usage("agent players need --vocab")),
        (None, false) => (None, None),
    };

    let mode: ValidationMode = match args.validation {
        Some(m) => m.into(),
        None if has_llm => ValidationMode::Remote,
        None => ValidationMode::Off,
    };
    let dictionary = build_dictionary(mode, &args.dictionary)?;
    let config = GameConfig {
        max_rounds: args.max_rounds,
        temperature: args.temperature,
        max_output_tokens: args.max_tokens,
        validation_mode: mode,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let clock = if has_llm || args.wall_clock {
        Clock::Wall
    } else {
        Clock::Logical
    };
    let harness = Harness {
        dictionary: Arc::new(dictionary),
        vocabulary,
        vocabulary_ref,
        chat,
        clock,
    };
    let spec = TournamentSpec {
        player_a,
        player_b,
        games: args.games,
        seed: args.seed,
        parallel: args.parallel,
        config,
    };
    let summary = harness.run(&spec, &args.log).await.map_err(|e| match e {
        TournamentError::Config(m) => usage(m),
        TournamentError::Credential(c) => usage(c.to_string()),
        TournamentError::Storage(s) => CliError::Runtime(s.into()),
    })?;
    out.push_str(&summary.render());
    Ok(())
}

fn read_games(log: &Path) -> Result<Vec<GameRecord>, CliError> {
    load_games(log, None)
        .with_context(|| format!("reading {}", log.display()))
        .map_err(CliError::Runtime)
}

fn read_embeddings(path: &Path, games: &[GameRecord]) -> Result<EmbeddingTable, CliError> {
    let table = read_embedding_file(path)
        .with_context(|| format!("reading embeddings {}", path.display()))?;
    let tags: BTreeSet<&str> = games
        .iter()
        .filter_map(|g| g.embedding_model_tag.as_deref())
        .filter(|t| *t != table.model_tag())
        .collect();
    if !tags.is_empty() {
        tracing::warn!(
            file = table.model_tag(),
            log = ?tags,
            "games were recorded with other embedding models"
        );
    }
    Ok(table)
}

fn create_out(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::Runtime)
}

fn finish_out(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Runtime)
}

pub fn pair_stats_table(stats: &[PairStats]) -> String {
    let mut out = String::new();
    let wa = stats.iter().map(|s| s.pair.0.len()).max().unwrap_or(0).max(7);
    let wb = stats.iter().map(|s| s.pair.1.len()).max().unwrap_or(0).max(7);
    let _ = writeln!(
        out,
        "{:<wa$}  {:<wb$}  {:>6}  {:>4}  {:>7}  {:>10}",
        "model a", "model b", "trials", "wins", "success", "avg rounds"
    );
    for s in stats {
        let avg = s
            .avg_rounds_on_wins
            .map_or_else(|| "-".to_string(), |a| format!("{a:.2}"));
        let _ = writeln!(
            out,
            "{:<wa$}  {:<wb$}  {:>6}  {:>4}  {:>6.1}%  {:>10}",
            s.pair.0,
            s.pair.1,
            s.trials,
            s.wins,
            s.success_rate * 100.0,
            avg
        );
    }
    out
}

pub fn write_pair_stats_csv(w: &mut dyn Write, stats: &[PairStats]) -> std::io::Result<()> {
    writeln!(
        w,
        "model_a,model_b,trials,wins,success_rate,avg_rounds_on_wins,avg_rounds_all,losses_repetition,losses_invalid_word,losses_non_convergence"
    )?;
    for s in stats {
        let avg = s.avg_rounds_on_wins.map(|a| a.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&s.pair.0),
            csv_field(&s.pair.1),
            s.trials,
            s.wins,
            s.success_rate,
            avg,
            s.avg_rounds_all,
            s.losses_repetition,
            s.losses_invalid_word,
            s.losses_non_convergence
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn analyze_success(args: SuccessArgs, out: &mut String) -> Result<(), CliError> {
    let games = read_games(&args.log.log)?;
    let stats = pair_stats(&games);
    out.push_str(&pair_stats_table(&stats));
    if let Some(path) = &args.out {
        let mut w = create_out(path)?;
        write_pair_stats_csv(&mut w, &stats).context("writing CSV")?;
        finish_out(w, path)?;
    }
    Ok(())
}

/// Strategy reports as written by `analyze strategy --out`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StrategyOutput {
    pub embedding_model_tag: String,
    pub reports: Vec<StrategyReport>,
}

fn analyze_strategy(args: StrategyArgs, out: &mut String) -> Result<(), CliError> {
    let games = read_games(&args.log.log)?;
    let table = read_embeddings(&args.embeddings, &games)?;
    let filter = SampleFilter {
        wins_only: !args.include_losses,
        exclude_invalid_word: !args.include_invalid,
    };
    let explicit = !args.models.is_empty();
    let models: Vec<String> = if explicit {
        args.models.clone()
    } else {
        let all: BTreeSet<&str> = games
            .iter()
            .flat_map(|g| [g.player_a.model_id.as_str(), g.player_b.model_id.as_str()])
            .collect();
        all.into_iter().map(String::from).collect()
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for model in &models {
        match strategy_metrics(&games, model, &table, filter) {
            Ok(r) => reports.push(r),
            Err(AnalysisError::NoQualifyingGames) if !explicit => skipped.push(model.clone()),
            Err(e) => {
                return Err(CliError::Runtime(anyhow::anyhow!("{model}: {e}")));
            }
        }
    }
    let width = models.iter().map(|m| m.len()).max().unwrap_or(5).max(5);
    let _ = writeln!(
        out,
        "{:<width$}  {:>17}  {:>17}  {:>7}  {:>5}  label",
        "model", "dist to previous", "dist to average", "samples", "games"
    );
    for r in &reports {
        let tie = if r.tie { " (tie)" } else { "" };
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.3} ± {:<6.3}  {:>8.3} ± {:<6.3}  {:>7}  {:>5}  {:?}{tie}",
            r.model_id,
            r.mean_dist_prev,
            r.dispersion_prev,
            r.mean_dist_avg,
            r.dispersion_avg,
            r.n_samples,
            r.n_games,
            r.label,
        );
    }
    for m in &skipped {
        let _ = writeln!(out, "{m:<width$}  no qualifying games");
    }
    if let Some(path) = &args.out {
        let result = StrategyOutput {
            embedding_model_tag: table.model_tag().to_string(),
            reports,
        };
        let mut w = create_out(path)?;
        serde_json::to_writer_pretty(&mut w, &result).context("writing JSON")?;
        w.write_all(b"\n").context("writing JSON")?;
        finish_out(w, path)?;
    }
    Ok(())
}

fn analyze_distances(args: DistancesArgs, out: &mut String) -> Result<(), CliError> {
    let mut games = read_games(&args.log.log)?;
    games.retain(|g| !g.outcome.is_aborted() && (!args.wins_only || g.outcome.is_win()));
    if let Some(pair) = &args.pair {
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| usage("--pair expects two model ids separated by a comma"))?;
        let mut key = (a.trim().to_string(), b.trim().to_string());
        if key.0 > key.1 {
            key = (key.1, key.0);
        }
        games.retain(|g| g.pair_key() == key);
    }
    let table = read_embeddings(&args.embeddings, &games)?;
    let points = aligned_average_distances(&games, &table, args.window)
        .map_err(|e| match e {
            AnalysisError::InvalidWindow => usage("--window must be at least 1"),
            AnalysisError::EmptyInput => CliError::Runtime(anyhow::anyhow!("no games to analyze")),
            other => CliError::Runtime(other.into()),
        })?;
    let _ = writeln!(out, "{:>6}  {:>10}  {:>5}", "offset", "mean", "games");
    for p in &points {
        let _ = writeln!(out, "{:>6}  {:>10.4}  {:>5}", p.offset_from_end, p.mean, p.count);
    }
    if let Some(path) = &args.out {
        let mut w = create_out(path)?;
        writeln!(w, "offset,mean,count").context("writing CSV")?;
        for p in &points {
            writeln!(w, "{},{},{}", p.offset_from_end, p.mean, p.count).context("writing CSV")?;
        }
        finish_out(w, path)?;
    }
    Ok(())
}

pub fn write_trajectory_csv(w: &mut dyn Write, exports: &[TrajectoryExport]) -> std::io::Result<()> {
    writeln!(w, "game_id,round,seat,word,x,y,z,matched")?;
    for t in exports {
        let last = t.points.last().map_or(0, |p| p.round);
        for p in &t.points {
            // the marker goes on the final, matching words
            let matched = t.matched && p.round == last;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                csv_field(&t.game_id),
                p.round,
                p.seat,
                csv_field(&p.word),
                p.x,
                p.y,
                p.z,
                matched
            )?;
        }
    }
    Ok(())
}

fn export_pca(args: PcaArgs, out: &mut String) -> Result<(), CliError> {
    let mut games = read_games(&args.log.log)?;
    games.retain(|g| !g.rounds.is_empty());
    if let Some(id) = &args.game {
        games.retain(|g| &g.game_id == id);
        if games.is_empty() {
            return Err(CliError::Runtime(anyhow::anyhow!("no game {id:?} in the log")));
        }
    }
    let table = read_embeddings(&args.embeddings, &games)?;
    let exports = games
        .iter()
        .map(|g| export_trajectory(g, &table).with_context(|| format!("game {}", g.game_id)))
        .collect::<Result<Vec<_>, _>>()?;
    let format = match args.format {
        Some(f) => f,
        None => match args.out.extension().and_then(|e| e.to_str()) {
            Some("json") => ExportFormat::Json,
            Some("csv") => ExportFormat::Csv,
            _ => return Err(usage("cannot infer format from --out; pass --format")),
        },
    };
    let mut w = create_out(&args.out)?;
    match format {
        ExportFormat::Csv => write_trajectory_csv(&mut w, &exports).context("writing CSV")?,
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, &exports).context("writing JSON")?;
            w.write_all(b"\n").context("writing JSON")?;
        }
    }
    finish_out(w, &args.out)?;
    let degenerate = exports.iter().filter(|t| t.degenerate).count();
    let _ = writeln!(
        out,
        "exported {} trajectories ({} points) to {}",
        exports.len(),
        exports.iter().map(|t| t.points.len()).sum::<usize>(),
        args.out.display()
    );
    if degenerate > 0 {
        let _ = writeln!(out, "{degenerate} spanned fewer than 3 dimensions (zero-padded)");
    }
    Ok(())
}

async fn validate_words(args: ValidateArgs, out: &mut String) -> Result<(), CliError> {
    let dictionary = build_dictionary(args.mode.into(), &args.dictionary)?;
    for raw in &args.words {
        let word = match Word::parse(raw) {
            Ok(w) => w,
            Err(e) => {
                let _ = writeln!(out, "{raw}\tinvalid\t{e}");
                continue;
            }
        };
        let r = dictionary
            .check(&word)
            .await
            .with_context(|| format!("checking {raw:?}"))?;
        let verdict = if r.exists { "valid" } else { "invalid" };
        let source = serde_json::to_value(r.source)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let _ = writeln!(out, "{}\t{verdict}\t{source}", r.word);
    }
    Ok(())
}

async fn embed_cache(args: EmbedCacheArgs, out: &mut String) -> Result<(), CliError> {
    let words: Vec<Word> = match (&args.log, &args.words) {
        (Some(log), None) => {
            let games = read_games(log)?;
            let set: BTreeSet<Word> = games
                .iter()
                .flat_map(|g| g.rounds.iter())
                .flat_map(|r| [r.word_a.clone(), r.word_b.clone()])
                .filter(|w| w.as_str() != crate::tournament::UNPARSEABLE_PLACEHOLDER)
                .collect();
            set.into_iter().collect()
        }
        (None, Some(list)) => {
            let text = std::fs::read_to_string(list)
                .with_context(|| format!("reading {}", list.display()))?;
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter_map(|l| Word::parse(l).ok())
                .collect()
        }
        _ => return Err(usage("pass exactly one of --log or --words")),
    };
    let cfg = LlmConfig::from_env().map_err(|e| usage(e.to_string()))?;
    let client = RemoteEmbeddings::new(&cfg.api_base, &cfg.api_key, &args.model)
        .map_err(|e| CliError::Runtime(e.into()))?;
    let store = EmbeddingStore::remote(client);
    if args.out.exists() {
        let existing = read_embedding_file(&args.out)
            .with_context(|| format!("reading {}", args.out.display()))?;
        store
            .preload(&existing)
            .map_err(|e| usage(e.to_string()))?;
    }
    let before = store.snapshot().len();
    store.embed_all(words.iter()).await.context("fetching embeddings")?;
    store.save(&args.out).context("saving cache")?;
    let after = store.snapshot().len();
    let _ = writeln!(
        out,
        "{} words, {} fetched, {} cached in {}",
        words.len(),
        after - before,
        after,
        args.out.display()
    );
    Ok(())
}

async fn serve(args: ServeArgs) -> Result<(), CliError> {
    let dictionary = build_dictionary(args.validation.into(), &args.dictionary)?;
    let (vocabulary, vocabulary_ref) = match &args.vocab {
        Some(p) => (
            Some(Arc::new(load_vocab(p)?)),
            Some(p.display().to_string()),
        ),
        None => (None, None),
    };
    let chat = match LlmConfig::from_env() {
        Ok(cfg) => Some(ChatClient::new(cfg).map_err(|e| CliError::Runtime(e.into()))?),
        Err(_) => {
            tracing::info!("WORDSYNC_API_KEY not set; model opponents disabled");
            None
        }
    };
    let game_config = GameConfig {
        max_rounds: args.max_rounds,
        validation_mode: args.validation.into(),
        ..GameConfig::default()
    };
    game_config.validate().map_err(|e| usage(e.to_string()))?;
    let app = AppState::new(
        ServiceConfig {
            log_path: args.log.clone(),
            ttl: Duration::from_secs(args.ttl_secs.max(1)),
            game_config,
            static_dir: args.static_dir.clone(),
        },
        Arc::new(dictionary),
        Machines {
            vocabulary,
            vocabulary_ref,
            chat,
        },
    );
    let listener = tokio::net::TcpListener::bind(&args.addr)
        .await
        .map_err(|e| usage(format!("cannot listen on {}: {e}", args.addr)))?;
    tracing::info!(addr = %args.addr, "serving");
    crate::service::serve(listener, app)
        .await
        .context("server stopped")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn player_and_subcommand_parsing() {
        let cli = Cli::try_parse_from([
            "wordsync", "run", "--player-a", "agent:balance", "--player-b", "agent:mirror",
            "--games", "5", "--seed", "7", "--vocab", "v.tsv",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else {
            panic!("expected run")
        };
        assert_eq!(args.games, 5);
        assert_eq!(args.max_rounds, 20);
        assert_eq!(args.temperature, 1.2);
        assert!(Cli::try_parse_from(["wordsync", "analyze", "bogus"]).is_err());
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_field("x\"y,"), "\"x\"\"y,\"");
    }
}
