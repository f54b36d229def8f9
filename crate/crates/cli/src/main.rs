mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crnforge_core::datagen::ExportStyle;
use crnforge_core::equivalence::MatchMode;
use crnforge_core::prompt::FewShotStrategy;

#[derive(Parser)]
#[command(name = "crnforge", version, about = "Natural-language to reaction-network translation toolkit")]
struct Cli {
    /// Service address used by client commands.
    #[arg(long, global = true, env = "CRNFORGE_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a train/test dataset and the validation conversations.
    Gen(GenArgs),
    /// Evaluate a translation endpoint.
    Eval {
        #[command(subcommand)]
        mode: EvalMode,
    },
    /// Grammar inspection.
    Gcd {
        #[command(subcommand)]
        action: GcdAction,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Translate one description through the service and print the model.
    Translate {
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0)]
        few_shot: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Interactive modeling sessions on the service.
    Session {
        #[command(subcommand)]
        action: SessionAction,
    },
    /// Parse a model with the service and print its canonical form.
    Parse {
        /// File holding the model; `-` reads stdin.
        file: PathBuf,
        #[arg(long)]
        fenced: bool,
        #[arg(long)]
        strict: bool,
    },
    /// Score an answer against a ground truth with the service.
    Score {
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long)]
        answer: PathBuf,
        #[arg(long, default_value = "paper-literal")]
        mode: MatchMode,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 800)]
    train: usize,
    #[arg(long, default_value_t = 200)]
    test: usize,
    /// Fraction of every template group and species list kept for training.
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
    /// Template pack directory; the built-in pack when absent.
    #[arg(long)]
    pack: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "chat")]
    style: ExportStyle,
}

#[derive(Args, Clone)]
pub struct EvalArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Answer from the dataset's own ground truth instead of calling the
    /// endpoint. Checks the pipeline end to end.
    #[arg(long)]
    oracle: bool,
}

#[derive(Subcommand)]
enum EvalMode {
    /// One replication.
    Run(EvalArgs),
    /// Replications until the mean accuracy converges.
    Converge(EvalArgs),
    /// One replication per few-shot count at temperature 0.
    SweepFewshot(EvalArgs),
    /// Convergence per temperature.
    SweepTemp(EvalArgs),
}

#[derive(Subcommand)]
enum GcdAction {
    /// Read prefixes from stdin, one per line with `\n` escapes, and print
    /// the characters allowed next and whether the prefix is complete.
    Probe {
        /// Grammar file; the reaction-network grammar when absent.
        #[arg(long)]
        grammar: Option<PathBuf>,
        /// Probe these prefixes instead of reading stdin.
        #[arg(long)]
        prefix: Vec<String>,
    },
    /// Ask the service for the token mask after a prefix.
    Mask {
        #[arg(long)]
        prefix: String,
        /// Comma-separated vocabulary; single characters when absent.
        #[arg(long, value_delimiter = ',')]
        vocabulary: Option<Vec<String>>,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// TOML endpoint configuration.
    #[arg(long)]
    endpoint_config: Option<PathBuf>,
    /// JSONL dataset whose records sessions may use as few-shot examples.
    #[arg(long)]
    fewshot: Option<PathBuf>,
    /// Event log directory; sessions are kept in memory when absent.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Directory served for non-API paths.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long)]
    max_history: Option<usize>,
}

#[derive(Subcommand)]
enum SessionAction {
    Create {
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0)]
        few_shot: usize,
        #[arg(long, default_value = "history-prepend")]
        strategy: FewShotStrategy,
        #[arg(long, default_value = "paper-literal")]
        mode: MatchMode,
        #[arg(long)]
        seed: Option<u64>,
    },
    List,
    Show {
        id: String,
    },
    Delete {
        id: String,
    },
    /// Send one message and print the turn.
    Send {
        id: String,
        text: String,
    },
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(run(cli))
}

async fn run(cli: Cli) -> anyhow::Result<()> {
    let client = crnforge_client::Client::new(&cli.server);
    match cli.command {
        Command::Gen(a) => commands::generate(a.seed, a.train, a.test, a.ratio, a.pack.as_deref(), &a.out, a.style),
        Command::Eval { mode } => match mode {
            EvalMode::Run(a) => commands::evaluate(commands::EvalKind::Run, &a).await,
            EvalMode::Converge(a) => commands::evaluate(commands::EvalKind::Converge, &a).await,
            EvalMode::SweepFewshot(a) => commands::evaluate(commands::EvalKind::FewShot, &a).await,
            EvalMode::SweepTemp(a) => commands::evaluate(commands::EvalKind::Temperature, &a).await,
        },
        Command::Gcd { action } => match action {
            GcdAction::Probe { grammar, prefix } => commands::probe(grammar.as_deref(), &prefix),
            GcdAction::Mask { prefix, vocabulary } => commands::mask(&client, prefix, vocabulary).await,
        },
        Command::Serve(a) => {
            commands::serve(commands::ServeOptions {
                bind: a.bind,
                port: a.port,
                endpoint_config: a.endpoint_config,
                fewshot: a.fewshot,
                data_dir: a.data_dir,
                static_dir: a.static_dir,
                max_history: a.max_history,
            })
            .await
        }
        Command::Translate {
            text,
            temperature,
            few_shot,
            seed,
        } => commands::translate(&client, text, temperature, few_shot, seed).await,
        Command::Session { action } => match action {
            SessionAction::Create {
                temperature,
                few_shot,
                strategy,
                mode,
                seed,
            } => commands::session_create(&client, temperature, few_shot, strategy, mode, seed).await,
            SessionAction::List => commands::session_list(&client).await,
            SessionAction::Show { id } => commands::session_show(&client, &id).await,
            SessionAction::Delete { id } => commands::session_delete(&client, &id).await,
            SessionAction::Send { id, text } => commands::session_send(&client, &id, &text).await,
        },
        Command::Parse { file, fenced, strict } => commands::parse(&client, &file, fenced, strict).await,
        Command::Score {
            ground_truth,
            answer,
            mode,
        } => commands::score(&client, &ground_truth, &answer, mode).await,
    }
}
