use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use naveval::commands::{self, AlignOptions, ScoreOptions};
use naveval::{data, formats, CliError, Result};
use naveval_core::{
    Aggregation, LossWeights, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_EPS, DEFAULT_TOP_K,
};

#[derive(Parser)]
#[command(
    name = "naveval",
    version,
    about = "Score navigation instructions and align them to trajectories"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Direction taxonomy: `r2r`, `urban`, or a taxonomy JSON file.
    #[arg(long, global = true, default_value = "r2r")]
    taxonomy: String,
    /// Synonym groups JSON used when matching tuples.
    #[arg(long, global = true)]
    synonyms: Option<PathBuf>,
    /// How scores against several references combine.
    #[arg(long, global = true, value_enum, default_value_t = AggregationArg::Max)]
    aggregation: AggregationArg,
    #[arg(long, global = true, default_value_t = 1.0)]
    lambda1: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    lambda2: f64,
    /// Lower clamp inside the attention loss logarithms.
    #[arg(long, global = true, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Suppress diagnostics on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Max,
    Mean,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Max => Aggregation::Max,
            AggregationArg::Mean => Aggregation::Mean,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score candidate instructions against references (JSONL in, JSON out).
    Score {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Skip records whose references have fewer directional phrases.
        #[arg(long, default_value_t = 0)]
        min_directions: usize,
    },
    /// Align sub-instructions to viewpoints and compute the alignment losses.
    Align {
        #[arg(long)]
        features: PathBuf,
        /// Cross-entropy term added to the total.
        #[arg(long, default_value_t = 0.0)]
        ce: f64,
    },
    /// Print the direction sequence of an instruction.
    Directions {
        #[arg(long, required_unless_present = "input", conflicts_with = "input")]
        text: Option<String>,
        /// JSONL of `{"id", "text"}` records; prints one JSON line each.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Split an instruction into sub-instructions, one per line.
    Chunk {
        #[arg(long)]
        text: String,
        /// Verb lexicon, one verb per line.
        #[arg(long)]
        verbs: Option<PathBuf>,
    },
    /// Pearson correlation of each metric column with human judgements.
    Correlate {
        /// CSV with header `id,<metric>...,human`.
        table: PathBuf,
    },
    /// Knowledge-base retrieval.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
}

#[derive(Subcommand)]
enum KbCommand {
    /// Top facts about one entity as `head<TAB>relation<TAB>tail<TAB>weight`.
    Query {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        entity: String,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
    },
    /// Filter detections per step and retrieve facts for each entity.
    Gather {
        #[arg(long)]
        kb: PathBuf,
        /// JSON list of `{"label", "confidence", "step"}`.
        #[arg(long)]
        detections: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => formats::write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let text = match cli.command {
        Command::Score {
            candidates,
            references,
            min_directions,
        } => {
            let taxonomy = data::taxonomy(&g.taxonomy)?;
            let synonyms = data::synonyms(g.synonyms.as_deref())?;
            let opts = ScoreOptions {
                taxonomy: &taxonomy,
                synonyms: &synonyms,
                aggregation: g.aggregation.into(),
                min_directions,
            };
            let report = commands::score(&candidates, &references, &opts)?;
            if !g.quiet && !report.corpus.dropped.is_empty() {
                eprintln!(
                    "skipped {} record(s) below --min-directions",
                    report.corpus.dropped.len()
                );
            }
            commands::to_json(&report)
        }
        Command::Align { features, ce } => {
            let weights = LossWeights::new(g.lambda1, g.lambda2)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let file = formats::load_features(&features)?;
            let opts = AlignOptions {
                weights,
                eps: g.eps,
                ce,
            };
            commands::to_json(&commands::align(&file, &opts)?)
        }
        Command::Directions { text, input } => {
            let taxonomy = data::taxonomy(&g.taxonomy)?;
            match (text, input) {
                (_, Some(path)) => commands::directions_jsonl(&path, &taxonomy)?,
                (Some(t), None) => commands::directions(&t, &taxonomy) + "\n",
                (None, None) => unreachable!("clap requires one of --text or --input"),
            }
        }
        Command::Chunk { text, verbs } => {
            let verbs = data::verbs(verbs.as_deref())?;
            commands::chunk(&text, &verbs)?
        }
        Command::Correlate { table } => {
            let (entries, dropped) = commands::correlate(&table)?;
            if !g.quiet && dropped > 0 {
                eprintln!("dropped {dropped} row(s) with missing values");
            }
            commands::to_json(&entries)
        }
        Command::Kb { command } => match command {
            KbCommand::Query { kb, entity, k } => {
                commands::kb_query(&formats::load_kb(&kb)?, &entity, k)?
            }
            KbCommand::Gather {
                kb,
                detections,
                threshold,
                k,
            } => {
                let kb = formats::load_kb(&kb)?;
                commands::to_json(&commands::kb_gather(&kb, &detections, threshold, k)?)
            }
        },
    };
    emit(g.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("naveval: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
