//! `wordbound`: tokeniser, segmentation and encoder experiments from the
//! command line.

mod config;
mod text;
mod training;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use wordbound::boundary::{BoundarySchema, WbPlacement};
use wordbound::pretrain::WbInjection;
use wordbound::tokenizer::{MarkerMode, PreTokenizer, TokenizerConfig};

use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(
    name = "wordbound",
    version,
    about = "Word-boundary experiments for subword tokenisers"
)]
struct Cli {
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct PreTokenizerArgs {
    /// Keep case instead of lowercasing.
    #[arg(long)]
    no_lowercase: bool,
    /// Leave punctuation attached to words.
    #[arg(long)]
    keep_punctuation: bool,
}

impl PreTokenizerArgs {
    fn pre(&self) -> PreTokenizer {
        PreTokenizer {
            lowercase: !self.no_lowercase,
            split_punctuation: !self.keep_punctuation,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "WORDBOUND_OUT_DIR", default_value = "wordbound-out")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Marked,
    Boundless,
}

impl From<Mode> for MarkerMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Marked => MarkerMode::Marked,
            Mode::Boundless => MarkerMode::Boundless,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Schema {
    None,
    Binary,
    Word,
    Subword,
    WbTokens,
    All,
}

impl Schema {
    fn expand(self) -> Vec<BoundarySchema> {
        match self {
            Schema::None => vec![BoundarySchema::None],
            Schema::Binary => vec![BoundarySchema::Binary],
            Schema::Word => vec![BoundarySchema::WordIndex],
            Schema::Subword => vec![BoundarySchema::SubwordIndex],
            Schema::WbTokens => vec![BoundarySchema::WbTokens],
            Schema::All => BoundarySchema::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Heads {
    On,
    Off,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Placement {
    Between,
    BeforeEachWord,
}

impl From<Placement> for WbPlacement {
    fn from(p: Placement) -> Self {
        match p {
            Placement::Between => WbPlacement::Between,
            Placement::BeforeEachWord => WbPlacement::BeforeEachWord,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Injection {
    None,
    FtBinary,
    FtWbTokens,
}

impl From<Injection> for WbInjection {
    fn from(i: Injection) -> Self {
        match i {
            Injection::None => WbInjection::None,
            Injection::FtBinary => WbInjection::FtBinary,
            Injection::FtWbTokens => WbInjection::FtWbTokens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CompareTask {
    Morph,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a WordPiece vocabulary on line-per-document corpora.
    TrainTokenizer {
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "boundless")]
        mode: Mode,
        #[arg(long, default_value_t = 16384)]
        vocab_size: usize,
        #[arg(long, default_value_t = 1)]
        min_pair_frequency: u64,
        /// Vocabulary file to write (default: <out-dir>/vocab.txt).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        pre: PreTokenizerArgs,
        #[command(flatten)]
        out: OutDir,
    },
    /// Tokenise text with one or more vocabularies.
    Encode {
        /// Vocabulary file; repeat to compare tokenisers side by side.
        #[arg(long = "vocab", required = true)]
        vocabs: Vec<PathBuf>,
        /// Input sentences (default: stdin).
        text: Vec<String>,
        /// Read one sentence per line from a file.
        #[arg(long, conflicts_with = "text")]
        file: Option<PathBuf>,
        /// Emit token / binary / word / subword index TSV.
        #[arg(long)]
        annotate: bool,
        /// Insert [WB] tokens.
        #[arg(long)]
        wb_tokens: bool,
        #[arg(long, value_enum, default_value = "between")]
        placement: Placement,
        /// Wrap in [CLS] ... [SEP].
        #[arg(long)]
        wrap: bool,
        #[command(flatten)]
        pre: PreTokenizerArgs,
    },
    /// Boundary precision / recall / F1 against gold segmentations.
    EvalMorph {
        #[arg(long)]
        vocab: PathBuf,
        /// `word<TAB>morph morph ...` files.
        #[arg(required = true)]
        gold: Vec<PathBuf>,
        #[command(flatten)]
        pre: PreTokenizerArgs,
    },
    /// Compare vocabularies, one row each.
    Compare {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "morph")]
        tasks: Vec<CompareTask>,
        #[arg(long = "vocab", required = true)]
        vocabs: Vec<PathBuf>,
        #[arg(long, required = true)]
        gold: Vec<PathBuf>,
        #[command(flatten)]
        pre: PreTokenizerArgs,
    },
    /// MLM pretraining from an experiment file.
    Pretrain {
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Finetune a pretrained checkpoint on the [finetune] data.
    Finetune {
        config: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum)]
        injection: Option<Injection>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Finite-difference check of the hand-written gradients.
    GradCheck {
        #[arg(long, value_enum, default_value = "all")]
        schema: Schema,
        #[arg(long, value_enum, default_value = "both")]
        implicit: Heads,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Flag, then config file, then `WORDBOUND_OUT_DIR`, then `wordbound-out`.
fn experiment_out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os("WORDBOUND_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("wordbound-out"))
}

fn run(cli: Cli) -> Result<bool> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::TrainTokenizer {
            corpus,
            mode,
            vocab_size,
            min_pair_frequency,
            output,
            pre,
            out: dir,
        } => {
            let pre = pre.pre();
            let config = TokenizerConfig {
                vocab_size,
                min_pair_frequency,
                lowercase: pre.lowercase,
                split_punctuation: pre.split_punctuation,
                marker_mode: mode.into(),
            };
            let path = output.unwrap_or_else(|| dir.out_dir.join(training::VOCAB_FILE));
            text::train_tokenizer(&corpus, config, &path)?;
        }
        Command::Encode {
            vocabs,
            text: texts,
            file,
            annotate,
            wb_tokens,
            placement,
            wrap,
            pre,
        } => {
            let args = text::EncodeArgs {
                vocabs,
                texts,
                file,
                annotate,
                wb_tokens,
                placement: placement.into(),
                wrap,
                pre: pre.pre(),
            };
            text::encode(&args, &mut out)?;
        }
        Command::EvalMorph { vocab, gold, pre } => {
            text::eval_morph(&vocab, &gold, pre.pre(), &mut out)?;
        }
        Command::Compare {
            tasks,
            vocabs,
            gold,
            pre,
        } => {
            if tasks.contains(&CompareTask::Morph) {
                text::compare_morph(&vocabs, &gold, pre.pre(), &mut out)?;
            }
        }
        Command::Pretrain {
            config,
            resume,
            seed,
            steps,
            out_dir,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            if let Some(s) = steps {
                cfg.train.total_steps = s;
            }
            let dir = experiment_out_dir(out_dir, &cfg);
            training::pretrain(cfg, &dir, resume.as_deref(), &mut out)?;
        }
        Command::Finetune {
            config,
            checkpoint,
            injection,
            seeds,
            out_dir,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(i) = injection {
                cfg.finetune.config.wb_injection = i.into();
            }
            if let Some(s) = seeds {
                cfg.finetune.config.seeds = s;
            }
            let dir = experiment_out_dir(out_dir, &cfg);
            training::run_finetune(cfg, checkpoint, &dir, &mut out)?;
        }
        Command::GradCheck {
            schema,
            implicit,
            seed,
        } => {
            let heads: &[bool] = match implicit {
                Heads::On => &[true],
                Heads::Off => &[false],
                Heads::Both => &[false, true],
            };
            return training::run_grad_check(&schema.expand(), heads, seed, &mut out);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
