//! Command-line front end: `prepare → train → generate / reconstruct /
//! interpolate / eval`, plus `inspect` for checkpoint metadata.
//!
//! Training settings come from an optional JSON config file; flags given on
//! the command line win over file values, and unset keys keep their
//! defaults.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::corpus::{clean_corpus, corpus_stats, load_corpus, DEFAULT_MAX_TOKENS};
use crate::embeddings::{build_embedding_matrix, load_embeddings, EmbeddingTable};
use crate::error::{Error, Result};
use crate::generator::{self, DEFAULT_MAX_LEN, DEFAULT_STEPS};
use crate::io::write_atomic;
use crate::real::Real;
use crate::tokenizer::build_vocab;
use crate::trainer::{
    self, embedding_seed, encode_corpus, load_checkpoint, AnyCheckpoint, Checkpoint, Precision,
    TrainOutputs, TrainingConfig, FORMAT_VERSION,
};

#[derive(Debug, Parser)]
#[command(
    name = "reqvae",
    version,
    about = "Sentence VAE for natural-language requirements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Split, length-filter and deduplicate a raw corpus (one entry per line).
    Prepare(PrepareArgs),
    /// Build the vocabulary and embeddings, then train and checkpoint the model.
    Train(TrainArgs),
    /// Decode sentences from random latent codes.
    Generate(GenerateArgs),
    /// Encode sentences and decode them back from their posterior means.
    Reconstruct(ReconstructArgs),
    /// Decode points on the line between two sentences' latent codes.
    Interpolate(InterpolateArgs),
    /// Evaluate a checkpoint on a corpus and print one JSON record.
    Eval(EvalArgs),
    /// Print checkpoint metadata and vocabulary.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Raw corpus, UTF-8, one entry per line
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the cleaned corpus
    #[arg(long)]
    pub output: PathBuf,
    /// Entries longer than this many tokens are dropped
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON object with training settings and paths
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cleaned corpus, one sentence per line
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// GloVe-format vectors, optionally gzipped [default: none, all rows random]
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Write the vocabulary as text here [default: none]
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    /// Checkpoint written during and after training
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Line-delimited JSON, one record per epoch [default: none]
    #[arg(long)]
    pub metrics_log: Option<PathBuf>,
    /// Continue from the state stored in --checkpoint
    #[arg(long)]
    pub resume: bool,
    /// Save the checkpoint every N epochs [default: 1]
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

/// Every training setting as an optional flag. Defaults are stated in the
/// help text rather than filled in by the parser, so that an unset flag does
/// not mask a value from the config file.
#[derive(Debug, Default, Args)]
pub struct ConfigOverrides {
    /// Passes over the corpus [default: 100]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Sentences per optimizer step [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Latent dimensions [default: 16]
    #[arg(long)]
    pub z_dim: Option<usize>,
    /// LSTM hidden units [default: 128]
    #[arg(long)]
    pub hidden_size: Option<usize>,
    /// Word vector width [default: 100]
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Vocabulary capacity; the num_words - 1 most frequent words are kept [default: 4000]
    #[arg(long)]
    pub num_words: Option<usize>,
    /// Token cap recorded with the run [default: 60]
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Steps of linear KL annealing, 0 for none [default: 2000]
    #[arg(long)]
    pub kl_warmup_steps: Option<u64>,
    /// Probability of replacing a decoder input word with <unk> [default: 0.25]
    #[arg(long)]
    pub word_dropout: Option<f64>,
    /// Monte-Carlo samples of the reconstruction term [default: 1]
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Seed for initialization, shuffling and noise [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// f32 or f64 [default: f32]
    #[arg(long)]
    pub precision: Option<Precision>,
    /// Keep the embedding matrix fixed [default: false]
    #[arg(long)]
    pub freeze_embeddings: Option<bool>,
    /// Global gradient-norm ceiling, 0 disables [default: 5.0]
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

impl ConfigOverrides {
    fn apply(&self, c: &mut TrainingConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            epochs,
            batch_size,
            lr,
            z_dim,
            hidden_size,
            embedding_dim,
            num_words,
            max_tokens,
            kl_warmup_steps,
            word_dropout,
            mc_samples,
            seed,
            precision,
            freeze_embeddings,
            clip_norm
        );
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Number of sentences
    #[arg(short, long, default_value_t = 10)]
    pub n: usize,
    /// 0 decodes greedily
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Sentences to reconstruct; read from standard input when absent
    pub input: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub sentence_a: String,
    #[arg(long)]
    pub sentence_b: String,
    /// Points on the line, endpoints included
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Cleaned corpus, one sentence per line
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Also list the vocabulary
    #[arg(long)]
    pub vocab: bool,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Prepare(a) => cmd_prepare(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Reconstruct(a) => cmd_reconstruct(a, out),
        Command::Interpolate(a) => cmd_interpolate(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn require_file(key: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("{} is not a readable file", path.display()),
        ))
    }
}

fn require_parent(key: &str, path: &Path) -> Result<()> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("directory {} does not exist", parent.display()),
        ))
    }
}

pub fn cmd_prepare(args: &PrepareArgs, out: &mut dyn Write) -> Result<()> {
    require_parent("output", &args.output)?;
    let raw = load_corpus(&args.input)?;
    let clean = clean_corpus(&raw, args.max_tokens);
    clean.save(&args.output)?;
    emit(out, &format!("{}\n", corpus_stats(&clean)))?;
    eprintln!(
        "{} raw entries -> {} written to {}",
        raw.len(),
        clean.len(),
        args.output.display()
    );
    Ok(())
}

/// Paths accepted in a config file alongside the training settings.
const PATH_KEYS: [&str; 5] = [
    "corpus",
    "embeddings",
    "vocabulary",
    "checkpoint",
    "metrics_log",
];

/// Training settings plus file locations, after merging file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub corpus: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub checkpoint: PathBuf,
    pub metrics_log: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &TrainArgs) -> Result<Self> {
        let mut paths: Map<String, Value> = Map::new();
        let mut training = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut map: Map<String, Value> =
                    serde_json::from_str(&text).map_err(|e| Error::Format {
                        path: path.clone(),
                        line: e.line(),
                        message: e.to_string(),
                    })?;
                for key in PATH_KEYS {
                    if let Some(v) = map.remove(key) {
                        paths.insert(key.to_string(), v);
                    }
                }
                serde_json::from_value(Value::Object(map)).map_err(|e| {
                    let message = e.to_string();
                    let key = message
                        .strip_prefix("unknown field `")
                        .and_then(|s| s.split('`').next())
                        .unwrap_or("config")
                        .to_string();
                    Error::Config { key, message }
                })?
            }
            None => TrainingConfig::default(),
        };
        args.overrides.apply(&mut training);
        let from_file = |key: &str| -> Result<Option<PathBuf>> {
            match paths.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(PathBuf::from(s))),
                Some(other) => Err(Error::config(
                    key,
                    format!("expected a path string, got {other}"),
                )),
            }
        };
        let pick = |flag: &Option<PathBuf>, key: &str| -> Result<Option<PathBuf>> {
            match flag {
                Some(p) => Ok(Some(p.clone())),
                None => from_file(key),
            }
        };
        let corpus = pick(&args.corpus, "corpus")?
            .ok_or_else(|| Error::config("corpus", "no corpus given"))?;
        let checkpoint = pick(&args.checkpoint, "checkpoint")?
            .ok_or_else(|| Error::config("checkpoint", "no checkpoint path given"))?;
        Ok(RunConfig {
            training,
            corpus,
            embeddings: pick(&args.embeddings, "embeddings")?,
            vocabulary: pick(&args.vocabulary, "vocabulary")?,
            checkpoint,
            metrics_log: pick(&args.metrics_log, "metrics_log")?,
        })
    }

    fn validate_paths(&self, resume: bool) -> Result<()> {
        require_file("corpus", &self.corpus)?;
        if let Some(p) = &self.embeddings {
            require_file("embeddings", p)?;
        }
        if resume {
            require_file("checkpoint", &self.checkpoint)?;
        }
        require_parent("checkpoint", &self.checkpoint)?;
        for (key, p) in [
            ("vocabulary", &self.vocabulary),
            ("metrics_log", &self.metrics_log),
        ] {
            if let Some(p) = p {
                require_parent(key, p)?;
            }
        }
        Ok(())
    }
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let run = RunConfig::resolve(args)?;
    run.training.validate()?;
    run.validate_paths(args.resume)?;
    eprintln!("seed: {}", run.training.seed);
    let precision = if args.resume {
        AnyCheckpoint::load(&run.checkpoint)?.precision()
    } else {
        run.training.precision
    };
    match precision {
        Precision::F32 => train_with::<f32>(&run, args, out),
        Precision::F64 => train_with::<f64>(&run, args, out),
    }
}

fn train_with<T: Real>(run: &RunConfig, args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&run.corpus)?;
    let mut checkpoint = if args.resume {
        let mut c = load_checkpoint::<T>(&run.checkpoint)?;
        if let Some(epochs) = args.overrides.epochs {
            c.config.epochs = epochs;
        }
        eprintln!("resuming at epoch {} step {}", c.epoch, c.step);
        c
    } else {
        let config = run.training.clone();
        let vocab = build_vocab(&corpus, config.num_words)?;
        let table = match &run.embeddings {
            Some(path) => load_embeddings(path, config.embedding_dim)?,
            None => EmbeddingTable::new(config.embedding_dim),
        };
        let mut embedding =
            build_embedding_matrix::<T>(&vocab, &table, embedding_seed(config.seed));
        embedding.trainable = !config.freeze_embeddings;
        eprintln!(
            "vocabulary: {} entries, pretrained coverage {:.1}%",
            vocab.len(),
            100.0 * embedding.coverage()
        );
        Checkpoint::initialize(config, vocab, embedding.rows)?
    };
    if let Some(path) = &run.vocabulary {
        write_atomic(path, checkpoint.vocab.to_text().as_bytes())?;
    }
    let sequences = encode_corpus(&checkpoint.vocab, &corpus);
    let outputs = TrainOutputs {
        metrics_log: run.metrics_log.as_deref(),
        checkpoint: Some(&run.checkpoint),
        checkpoint_every: args.checkpoint_every.unwrap_or(1),
    };
    trainer::train(&mut checkpoint, &sequences, &outputs)?;
    trainer::save_checkpoint(&checkpoint, &run.checkpoint)?;
    if let Some(last) = checkpoint.history.last() {
        let line = serde_json::to_string(last).map_err(|e| Error::Checkpoint(e.to_string()))?;
        emit(out, &format!("{line}\n"))?;
    }
    eprintln!("checkpoint written to {}", run.checkpoint.display());
    Ok(())
}

/// Runs `$body` with `$c` bound to the loaded checkpoint of either precision.
macro_rules! with_checkpoint {
    ($path:expr, |$c:ident| $body:expr) => {
        match AnyCheckpoint::load($path)? {
            AnyCheckpoint::F32($c) => $body,
            AnyCheckpoint::F64($c) => $body,
        }
    };
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    if args.max_len == 0 {
        return Err(Error::config("max_len", "must be at least 1"));
    }
    if !(args.temperature.is_finite() && args.temperature >= 0.0) {
        return Err(Error::config(
            "temperature",
            format!("{} is negative", args.temperature),
        ));
    }
    eprintln!("seed: {}", args.seed);
    let lines = with_checkpoint!(&args.checkpoint, |c| generator::sample_prior(
        args.n,
        &c,
        args.max_len,
        args.temperature,
        args.seed
    )?);
    emit(
        out,
        &lines.iter().map(|s| format!("{s}\n")).collect::<String>(),
    )
}

pub fn cmd_reconstruct(args: &ReconstructArgs, out: &mut dyn Write) -> Result<()> {
    let checkpoint = AnyCheckpoint::load(&args.checkpoint)?;
    let inputs = if args.input.is_empty() {
        std::io::stdin()
            .lock()
            .lines()
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io("<stdin>", e))?
    } else {
        args.input.clone()
    };
    for sentence in &inputs {
        let line = match &checkpoint {
            AnyCheckpoint::F32(c) => generator::reconstruct(sentence, c, args.max_len)?,
            AnyCheckpoint::F64(c) => generator::reconstruct(sentence, c, args.max_len)?,
        };
        emit(out, &format!("{line}\n"))?;
    }
    Ok(())
}

pub fn cmd_interpolate(args: &InterpolateArgs, out: &mut dyn Write) -> Result<()> {
    if args.steps < 2 {
        return Err(Error::config("steps", format!("{} < 2", args.steps)));
    }
    let rows = with_checkpoint!(&args.checkpoint, |c| generator::interpolate(
        &args.sentence_a,
        &args.sentence_b,
        &c,
        args.steps,
        args.max_len
    )?);
    emit(out, &generator::format_interpolation(&rows))
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let metrics = with_checkpoint!(&args.checkpoint, |c| trainer::evaluate(&c, &corpus)?);
    let line = serde_json::to_string(&metrics).map_err(|e| Error::Checkpoint(e.to_string()))?;
    emit(out, &format!("{line}\n"))
}

pub fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let checkpoint = AnyCheckpoint::load(&args.checkpoint)?;
    let precision = checkpoint.precision();
    let text = with_checkpoint!(&args.checkpoint, |c| describe(&c, precision, args.vocab)?);
    emit(out, &text)
}

fn describe<T: Real>(c: &Checkpoint<T>, precision: Precision, with_vocab: bool) -> Result<String> {
    let dims = c.dims();
    let summary = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "precision": precision.to_string(),
        "step": c.step,
        "epoch": c.epoch,
        "parameters": c.params.num_parameters(),
        "dims": dims,
        "vocabulary_size": c.vocab.len(),
        "config": c.config,
        "last_epoch": c.history.last(),
    });
    let mut text =
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Checkpoint(e.to_string()))?;
    text.push('\n');
    if with_vocab {
        text.push_str(&c.vocab.to_text());
    }
    Ok(text)
}
