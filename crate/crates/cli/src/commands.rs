//! Subcommand implementations.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use countcheck_core::adapter::{
    run_queries, AdapterError, HttpAdapter, ModelAdapter, ModelEndpointConfig, OracleAdapter,
    RandomAdapter, ReplayAdapter, ResponseRecord, RunError,
};
use countcheck_core::analyze::{analyze_run, render_csv, render_markdown};
use countcheck_core::coco::{build_count_dataset, load_annotations, CountInstance};
use countcheck_core::jsonl::{read_jsonl, write_json, write_jsonl, JsonlAppender};
use countcheck_core::parse::parse_response;
use countcheck_core::question::{
    gen_binary, gen_compare, gen_primal, BinarySetting, CompareStyle, Family, PairingConfig,
    PriorAnswers, QuestionRecord,
};
use countcheck_core::sampler::{sample_with_manifest, CapSemantics, SamplerConfig};
use countcheck_core::seed::sha256_hex;
use countcheck_core::train::{
    assert_no_leakage, filter_holdout, gen_cons_i, gen_cons_i_ii, gen_cons_ii, gen_direct,
    TrainManifest, TrainMethod, DEFAULT_CONS_II_TARGET,
};
use serde::Serialize;
use std::collections::HashSet;
use std::num::NonZeroU32;
use std::path::{Path, PathBuf};

/// Exit codes: 1 usage, 2 data, 3 transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Transport = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub source: anyhow::Error,
}

impl CliError {
    fn usage(source: anyhow::Error) -> Self {
        Self {
            kind: ExitKind::Usage,
            source,
        }
    }

    fn data(source: anyhow::Error) -> Self {
        Self {
            kind: ExitKind::Data,
            source,
        }
    }

    fn from_adapter(err: AdapterError, context: String) -> Self {
        let kind = match &err {
            AdapterError::Transport { .. } | AdapterError::Remote { .. } => ExitKind::Transport,
            _ => ExitKind::Data,
        };
        Self {
            kind,
            source: anyhow::Error::new(err).context(context),
        }
    }
}

trait IntoDataError<T> {
    fn or_data(self) -> Result<T, CliError>;
}

impl<T, E: std::error::Error + Send + Sync + 'static> IntoDataError<T> for Result<T, E> {
    fn or_data(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::data(anyhow::Error::new(e)))
    }
}

#[derive(Parser)]
#[command(
    name = "countcheck",
    version,
    about = "Counting-VQA benchmark construction and consistency evaluation for vision-language models"
)]
pub struct Cli {
    /// Optional JSON config supplying defaults for tuning flags (k, seed,
    /// cap_semantics, workers, max_pairs_per_image, target_count).
    /// Explicit flags always win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Defaults file; every field optional, consulted only for flags the user
/// did not pass.
#[derive(Debug, Default, serde::Deserialize)]
struct FileConfig {
    k: Option<NonZeroU32>,
    seed: Option<u64>,
    cap_semantics: Option<CapSemantics>,
    workers: Option<usize>,
    max_pairs_per_image: Option<usize>,
    target_count: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(CliError::data)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(CliError::data)
}

#[derive(Subcommand)]
enum Command {
    /// Parse COCO-style annotations and emit a cap-balanced counting dataset.
    BuildDataset(BuildDatasetArgs),
    /// Render question families from a counting dataset.
    GenQuestions(GenQuestionsArgs),
    /// Query an answer source for every question, resumably.
    RunEval(RunEvalArgs),
    /// Score a finished run: metrics, consistency, CSV and markdown reports.
    Analyze(AnalyzeArgs),
    /// Emit instruction-tuning datasets (no cap sampling).
    GenTrainData(GenTrainDataArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_file_config(cli.config.as_deref())?;
    match cli.command {
        Command::BuildDataset(args) => build_dataset(args, &config),
        Command::GenQuestions(args) => gen_questions(args, &config),
        Command::RunEval(args) => run_eval(args, &config),
        Command::Analyze(args) => analyze(args),
        Command::GenTrainData(args) => gen_train_data(args, &config),
    }
}

fn default_manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    name.push_str(".manifest.json");
    output.with_file_name(name)
}

fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::data)?;
    Ok(sha256_hex(&bytes))
}

// ---------------------------------------------------------------------------
// build-dataset

#[derive(Clone, Copy, ValueEnum)]
enum CapSemanticsArg {
    Prose,
    Pseudocode,
}

impl From<CapSemanticsArg> for CapSemantics {
    fn from(value: CapSemanticsArg) -> Self {
        match value {
            CapSemanticsArg::Prose => CapSemantics::Prose,
            CapSemanticsArg::Pseudocode => CapSemantics::Pseudocode,
        }
    }
}

#[derive(Args)]
struct BuildDatasetArgs {
    /// COCO instances JSON file.
    #[arg(long)]
    annotations: PathBuf,
    /// Per-(category, count) retention cap [default: 50].
    #[arg(long)]
    k: Option<NonZeroU32>,
    /// [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Cap reading: prose keeps at most k per cell, pseudocode k+1
    /// [default: prose].
    #[arg(long, value_enum)]
    cap_semantics: Option<CapSemanticsArg>,
    /// Balanced dataset JSONL destination.
    #[arg(long)]
    output: PathBuf,
    /// Sampling manifest destination (default: `<output>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Also dump the full pre-sampling dataset here.
    #[arg(long)]
    raw_output: Option<PathBuf>,
}

fn build_dataset(args: BuildDatasetArgs, config: &FileConfig) -> Result<(), CliError> {
    let k = args.k.or(config.k).unwrap_or(NonZeroU32::new(50).unwrap());
    let seed = args.seed.or(config.seed).unwrap_or(42);
    let cap_semantics = args
        .cap_semantics
        .map(CapSemantics::from)
        .or(config.cap_semantics)
        .unwrap_or(CapSemantics::Prose);

    let file = load_annotations(&args.annotations).or_data()?;
    let dataset = build_count_dataset(&file);
    eprintln!(
        "loaded {} images / {} annotations -> {} counting instances",
        file.images.len(),
        file.annotations.len(),
        dataset.len()
    );
    if let Some(raw_output) = &args.raw_output {
        write_jsonl(raw_output, &dataset).or_data()?;
        eprintln!("wrote raw dataset to {}", raw_output.display());
    }

    let cfg = SamplerConfig {
        k,
        seed,
        cap_semantics,
    };
    let (sampled, manifest) = sample_with_manifest(&dataset, &cfg);
    write_jsonl(&args.output, &sampled).or_data()?;
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_manifest_path(&args.output));
    write_json(&manifest_path, &manifest).or_data()?;
    eprintln!(
        "sampled {} of {} instances (k={k}, seed={seed}) -> {}",
        sampled.len(),
        dataset.len(),
        args.output.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// gen-questions

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    #[value(name = "primal")]
    Primal,
    #[value(name = "binary_I")]
    BinaryI,
    #[value(name = "binary_II")]
    BinaryII,
    #[value(name = "binary_III")]
    BinaryIII,
    #[value(name = "compare_I")]
    CompareI,
    #[value(name = "compare_II")]
    CompareII,
}

#[derive(Args)]
struct GenQuestionsArgs {
    /// Counting dataset JSONL (from build-dataset).
    #[arg(long)]
    dataset: PathBuf,
    /// Families to render (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    families: Vec<FamilyArg>,
    /// [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: PathBuf,
    /// Questions file containing the primal family (needed for binary_II).
    #[arg(long)]
    primal_questions: Option<PathBuf>,
    /// The model's responses to those primal questions (needed for binary_II).
    #[arg(long)]
    primal_responses: Option<PathBuf>,
    /// Drop instances whose primal answer is missing or unparseable instead
    /// of failing (binary_II only).
    #[arg(long)]
    skip_missing_prior: bool,
    /// [default: 3]
    #[arg(long)]
    max_pairs_per_image: Option<usize>,
}

fn load_prior_answers(
    questions_path: &Path,
    responses_path: &Path,
) -> Result<PriorAnswers, CliError> {
    let questions: Vec<QuestionRecord> = read_jsonl(questions_path).or_data()?;
    let responses: Vec<ResponseRecord> = read_jsonl(responses_path).or_data()?;
    let raw_by_id: std::collections::HashMap<&str, &str> = responses
        .iter()
        .map(|r| (r.question_id.as_str(), r.raw_text.as_str()))
        .collect();
    let mut prior = PriorAnswers::new();
    for q in questions.iter().filter(|q| q.family == Family::Primal) {
        let (Some(raw), Some(category)) =
            (raw_by_id.get(q.question_id.as_str()), q.categories.first())
        else {
            continue;
        };
        if let Some(n) = parse_response(q, raw).number() {
            prior.insert((q.image_ref.clone(), category.clone()), n);
        }
    }
    Ok(prior)
}

fn gen_questions(args: GenQuestionsArgs, config: &FileConfig) -> Result<(), CliError> {
    let seed = args.seed.or(config.seed).unwrap_or(42);
    let mut families: Vec<FamilyArg> = Vec::new();
    for family in &args.families {
        if !families.contains(family) {
            families.push(*family);
        }
    }
    let dataset: Vec<CountInstance> = read_jsonl(&args.dataset).or_data()?;
    let pairing = PairingConfig {
        max_pairs_per_image: args
            .max_pairs_per_image
            .or(config.max_pairs_per_image)
            .unwrap_or(PairingConfig::default().max_pairs_per_image),
    };

    let prior = if families.contains(&FamilyArg::BinaryII) {
        let (Some(qp), Some(rp)) = (&args.primal_questions, &args.primal_responses) else {
            return Err(CliError::usage(anyhow!(
                "binary_II requires --primal-questions and --primal-responses"
            )));
        };
        Some(load_prior_answers(qp, rp)?)
    } else {
        None
    };

    let mut questions: Vec<QuestionRecord> = Vec::new();
    for family in &families {
        match family {
            FamilyArg::Primal => questions.extend(gen_primal(&dataset)),
            FamilyArg::BinaryI => {
                questions.extend(gen_binary(&dataset, BinarySetting::I, None, seed).or_data()?)
            }
            FamilyArg::BinaryII => {
                let prior = prior.as_ref().expect("checked above");
                let covered: Vec<CountInstance> = if args.skip_missing_prior {
                    let (covered, dropped): (Vec<_>, Vec<_>) =
                        dataset.iter().cloned().partition(|inst| {
                            prior.contains_key(&(inst.image_ref.clone(), inst.category.clone()))
                        });
                    if !dropped.is_empty() {
                        eprintln!(
                            "binary_II: dropping {} instances without a parseable primal answer",
                            dropped.len()
                        );
                    }
                    covered
                } else {
                    dataset.clone()
                };
                questions.extend(
                    gen_binary(&covered, BinarySetting::II, Some(prior), seed).or_data()?,
                );
            }
            FamilyArg::BinaryIII => questions
                .extend(gen_binary(&dataset, BinarySetting::III, None, seed).or_data()?),
            FamilyArg::CompareI => {
                questions.extend(gen_compare(&dataset, CompareStyle::I, &pairing, seed))
            }
            FamilyArg::CompareII => {
                questions.extend(gen_compare(&dataset, CompareStyle::II, &pairing, seed))
            }
        }
    }

    write_jsonl(&args.output, &questions).or_data()?;
    eprintln!(
        "generated {} questions across {} families -> {}",
        questions.len(),
        families.len(),
        args.output.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// run-eval

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AdapterArg {
    Oracle,
    Random,
    Replay,
    Http,
}

#[derive(Args)]
struct RunEvalArgs {
    #[arg(long)]
    questions: PathBuf,
    #[arg(long, value_enum)]
    adapter: AdapterArg,
    /// Response log JSONL; appended to (and resumed from) if it exists.
    #[arg(long)]
    output: PathBuf,
    /// Seed for the random adapter [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Prior run log for the replay adapter.
    #[arg(long)]
    replay_log: Option<PathBuf>,
    /// Endpoint config JSON for the http adapter.
    #[arg(long)]
    endpoint_config: Option<PathBuf>,
    /// Concurrent workers (requests in flight) [default: 4].
    #[arg(long)]
    workers: Option<usize>,
    /// Run manifest destination (default: `<output>.manifest.json`).
    #[arg(long)]
    run_manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunManifest {
    adapter: String,
    seed: u64,
    workers: usize,
    questions: String,
    questions_sha256: String,
    output: String,
    n_questions: usize,
    completed_this_run: usize,
    resumed: usize,
}

fn build_adapter(args: &RunEvalArgs, seed: u64) -> Result<Box<dyn ModelAdapter>, CliError> {
    match args.adapter {
        AdapterArg::Oracle => Ok(Box::new(OracleAdapter::new())),
        AdapterArg::Random => Ok(Box::new(RandomAdapter::new(seed))),
        AdapterArg::Replay => {
            let log = args.replay_log.as_ref().ok_or_else(|| {
                CliError::usage(anyhow!("the replay adapter requires --replay-log"))
            })?;
            Ok(Box::new(ReplayAdapter::from_log(log).or_data()?))
        }
        AdapterArg::Http => {
            let path = args.endpoint_config.as_ref().ok_or_else(|| {
                CliError::usage(anyhow!("the http adapter requires --endpoint-config"))
            })?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(CliError::data)?;
            let cfg: ModelEndpointConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(CliError::data)?;
            let adapter = HttpAdapter::new(cfg)
                .map_err(|e| CliError::from_adapter(e, "configuring http adapter".into()))?;
            Ok(Box::new(adapter))
        }
    }
}

// A kill during a log write can leave a final line without its newline.
// Drop that fragment before resuming so the re-answered record does not get
// appended onto it.
fn trim_torn_tail(path: &Path) -> std::io::Result<bool> {
    use std::io::Read;
    let mut file = std::fs::OpenOptions::new().read(true).write(true).open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(false);
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    file.set_len(keep as u64)?;
    Ok(true)
}

fn run_eval(args: RunEvalArgs, config: &FileConfig) -> Result<(), CliError> {
    let seed = args.seed.or(config.seed).unwrap_or(42);
    let workers = args.workers.or(config.workers).unwrap_or(4);
    let adapter = build_adapter(&args, seed)?;
    let questions: Vec<QuestionRecord> = read_jsonl(&args.questions).or_data()?;
    let known_ids: HashSet<&str> = questions.iter().map(|q| q.question_id.as_str()).collect();

    let mut completed: HashSet<String> = HashSet::new();
    if args.output.exists() {
        if trim_torn_tail(&args.output)
            .with_context(|| format!("repairing {}", args.output.display()))
            .map_err(CliError::data)?
        {
            eprintln!(
                "dropped a torn trailing line from {} (interrupted write)",
                args.output.display()
            );
        }
        let existing: Vec<ResponseRecord> = read_jsonl(&args.output).or_data()?;
        for record in &existing {
            if !known_ids.contains(record.question_id.as_str()) {
                return Err(CliError::data(anyhow!(
                    "existing output {} answers unknown question {}; refusing to resume",
                    args.output.display(),
                    record.question_id
                )));
            }
            completed.insert(record.question_id.clone());
        }
        if !completed.is_empty() {
            eprintln!(
                "resuming: {} of {} questions already answered in {}",
                completed.len(),
                questions.len(),
                args.output.display()
            );
        }
    }

    let questions_sha256 = file_sha256(&args.questions)?;
    let mut appender = JsonlAppender::open(&args.output).or_data()?;
    let total_pending = questions.len() - completed.len();
    let mut emitted = 0usize;
    let outcome = run_queries(&questions, adapter.as_ref(), workers, &completed, |r| {
        appender.append(&r)?;
        emitted += 1;
        if emitted.is_multiple_of(500) {
            eprintln!("{emitted}/{total_pending} answered");
        }
        Ok(())
    })
    .map_err(|err| match err {
        RunError::Adapter {
            question_id,
            source,
        } => CliError::from_adapter(source, format!("answering question {question_id}")),
        RunError::Sink(e) => CliError::data(anyhow::Error::new(e)),
    })?;

    let manifest = RunManifest {
        adapter: adapter.name().to_string(),
        seed,
        workers,
        questions: args.questions.display().to_string(),
        questions_sha256,
        output: args.output.display().to_string(),
        n_questions: questions.len(),
        completed_this_run: outcome.completed,
        resumed: outcome.skipped,
    };
    let manifest_path = args
        .run_manifest
        .unwrap_or_else(|| default_manifest_path(&args.output));
    write_json(&manifest_path, &manifest).or_data()?;
    eprintln!(
        "answered {} questions ({} resumed) -> {}",
        outcome.completed,
        outcome.skipped,
        args.output.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    questions: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    /// Directory receiving eval_report.json, consistency_report.json,
    /// report.csv and report.md.
    #[arg(long)]
    out_dir: PathBuf,
    /// Name used in report headers and the CSV model column (default: the
    /// adapter recorded in the responses).
    #[arg(long)]
    model_name: Option<String>,
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let questions: Vec<QuestionRecord> = read_jsonl(&args.questions).or_data()?;
    let responses: Vec<ResponseRecord> = read_jsonl(&args.responses).or_data()?;
    let model = args
        .model_name
        .clone()
        .or_else(|| responses.first().map(|r| r.adapter.clone()))
        .unwrap_or_else(|| "unknown".into());

    let output = analyze_run(&questions, &responses).or_data()?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(CliError::data)?;
    write_json(&args.out_dir.join("eval_report.json"), &output.eval).or_data()?;
    write_json(
        &args.out_dir.join("consistency_report.json"),
        &output.consistency,
    )
    .or_data()?;
    write_text(&args.out_dir.join("report.csv"), &render_csv(&model, &output))?;
    write_text(&args.out_dir.join("report.md"), &render_markdown(&model, &output))?;

    for (family, report) in &output.eval {
        eprintln!(
            "{family}: n={} macro_f1={:.3} weighted_f1={:.3} accuracy={:.3}{}",
            report.n_questions,
            report.macro_f1,
            report.weighted_f1,
            report.accuracy,
            report
                .mae
                .map_or(String::new(), |m| format!(" mae={m:.3}")),
        );
    }
    eprintln!("reports written to {}", args.out_dir.display());
    Ok(())
}

// Atomic text write via the same temp-and-rename path used for JSON.
fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into()),
        std::process::id()
    ));
    let write = || -> std::io::Result<()> {
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)
    };
    write()
        .with_context(|| format!("writing {}", path.display()))
        .map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            CliError::data(e)
        })
}

// ---------------------------------------------------------------------------
// gen-train-data

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    #[value(name = "direct")]
    Direct,
    #[value(name = "cons_I")]
    ConsI,
    #[value(name = "cons_II")]
    ConsII,
    #[value(name = "cons_I_II")]
    ConsIII,
}

impl MethodArg {
    fn tag(self) -> &'static str {
        match self {
            MethodArg::Direct => "direct",
            MethodArg::ConsI => "cons_I",
            MethodArg::ConsII => "cons_II",
            MethodArg::ConsIII => "cons_I_II",
        }
    }
}

#[derive(Args)]
struct GenTrainDataArgs {
    /// COCO instances JSON for the training split.
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: PathBuf,
    /// Pair budget for cons_II, ignored by other methods [default: 100000].
    #[arg(long)]
    target_count: Option<usize>,
    /// File of held-out evaluation image refs (one per line) to exclude.
    #[arg(long)]
    holdout: Option<PathBuf>,
    /// Manifest destination (default: `<output>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn gen_train_data(args: GenTrainDataArgs, config: &FileConfig) -> Result<(), CliError> {
    let seed = args.seed.or(config.seed).unwrap_or(42);
    let target_count = args
        .target_count
        .or(config.target_count)
        .unwrap_or(DEFAULT_CONS_II_TARGET);
    let file = load_annotations(&args.annotations).or_data()?;
    let mut dataset = build_count_dataset(&file);
    let source_hash = countcheck_core::sampler::dataset_sha256(&dataset);

    let mut holdout_set: HashSet<String> = HashSet::new();
    let mut holdout_excluded = 0usize;
    if let Some(path) = &args.holdout {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(CliError::data)?;
        holdout_set = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        let (kept, removed) = filter_holdout(dataset, &holdout_set);
        dataset = kept;
        holdout_excluded = removed;
        eprintln!("excluded {holdout_excluded} instances on {} held-out images", holdout_set.len());
    }

    let samples = match args.method {
        MethodArg::Direct => gen_direct(&dataset),
        MethodArg::ConsI => gen_cons_i(&dataset, seed),
        MethodArg::ConsII => {
            let samples = gen_cons_ii(&dataset, target_count, seed);
            if samples.len() < target_count {
                eprintln!(
                    "warning: only {} comparison pairs available (requested {})",
                    samples.len(),
                    target_count
                );
            }
            samples
        }
        MethodArg::ConsIII => gen_cons_i_ii(&dataset, seed),
    };
    if !holdout_set.is_empty() {
        assert_no_leakage(&samples, &holdout_set).or_data()?;
    }

    write_jsonl(&args.output, &samples).or_data()?;
    let per_method = |m: TrainMethod| samples.iter().filter(|s| s.method == m).count();
    eprintln!(
        "emitted {} samples (direct {}, cons_I {}, cons_II {}) -> {}",
        samples.len(),
        per_method(TrainMethod::Direct),
        per_method(TrainMethod::ConsI),
        per_method(TrainMethod::ConsII),
        args.output.display()
    );

    let manifest = TrainManifest {
        method: args.method.tag().to_string(),
        seed,
        count: samples.len(),
        source_hash,
        holdout_excluded,
    };
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| default_manifest_path(&args.output));
    write_json(&manifest_path, &manifest).or_data()?;
    Ok(())
}
