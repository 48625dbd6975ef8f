//! `sentinel` — command-line front end for the syscall anomaly detection
//! pipeline: generate synthetic traces, train per-application models, score
//! new traces, and evaluate detectors against ground truth.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 training failure. Every error prints a single machine-parsable line
//! `error[config|data|training]: <reason>` to stderr.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sentinel_core::eval::{build_report, EvalReport, ScoredWindow};
use sentinel_core::ingest::{
    parse_labels, parse_trace, windowize, write_labels_csv, write_trace_csv,
};
use sentinel_core::lstm::LstmHyperparams;
use sentinel_core::ocsvm::Gamma;
use sentinel_core::persist::{self, Manifest, FORMAT_VERSION, MANIFEST_FORMAT};
use sentinel_core::pipeline::{
    self, parse_scores_csv, score_detectors, train_detectors, write_scores_csv, PipelineError,
    TrainOptions, TrainedDetectors,
};
use sentinel_core::trace::{build_vocabulary, LabelSpan, SyscallEvent, SyscallVocabulary};
use sentinel_core::workload::{
    generate_legit, inject_attack, AttackProfile, WorkloadError, WorkloadProfile,
};

mod errors;
use errors::{CliError, Kind};

#[derive(Parser)]
#[command(
    name = "sentinel",
    version,
    about = "Per-application syscall anomaly detection: generate, train, score, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled trace (trace.csv + labels.csv)
    Gen(GenArgs),
    /// Train detectors on a legitimate trace and write model files
    Train(TrainArgs),
    /// Score a trace against trained models
    Score(ScoreArgs),
    /// Compute ROC/AUC reports from scores and labels
    Eval(EvalArgs),
    /// Like eval, but always renders SVG ROC plots as well
    Report(EvalArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Built-in profile name (default, cyclic) or a profile TOML path
    #[arg(long, default_value = "default")]
    profile: String,
    /// Trace length per session, e.g. 300s, 20m
    #[arg(long, value_parser = parse_duration_ns, default_value = "300s")]
    duration: u64,
    /// Number of independent sessions
    #[arg(long, default_value_t = 1)]
    sessions: u32,
    /// Overrides the profile's generator seed
    #[arg(long)]
    seed: Option<u64>,
    /// Inject attacks of this mode into session 0
    #[arg(long, value_enum)]
    attack: Option<AttackModeArg>,
    /// Ground-truth script name recorded in labels.csv
    #[arg(long)]
    attack_kind: Option<String>,
    /// Start of the first attack, e.g. 120s (required with --attack)
    #[arg(long, value_parser = parse_duration_ns, requires = "attack")]
    at: Option<u64>,
    /// Attack duration, e.g. 15s (required with --attack)
    #[arg(long, value_parser = parse_duration_ns, requires = "attack")]
    dur: Option<u64>,
    /// Number of attack bursts
    #[arg(long, default_value_t = 1)]
    attack_count: u32,
    /// Gap between consecutive bursts
    #[arg(long, value_parser = parse_duration_ns, default_value = "60s")]
    attack_gap: u64,
    /// Output directory for trace.csv and labels.csv
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackModeArg {
    FrequencyShift,
    OrderShuffle,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Ground-truth labels; training refuses attack-labeled windows
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory for model files and manifest.json
    #[arg(long, short, default_value = "models")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = DetectorArg::All)]
    detector: DetectorArg,
    /// Window length: 100ms, 500ms, 1s, or 2s
    #[arg(long, value_parser = parse_interval_ns, default_value = "1s")]
    interval: u64,
    /// Retained PCA components
    #[arg(long, default_value_t = 20)]
    pca_k: usize,
    /// One-class SVM nu
    #[arg(long, default_value_t = 0.05)]
    nu: f64,
    /// RBF gamma: "scale" or a positive number
    #[arg(long, value_parser = parse_gamma, default_value = "scale")]
    gamma: Gamma,
    /// LSTM hidden units (overrides the hyper-parameter profile)
    #[arg(long)]
    hidden: Option<usize>,
    /// LSTM history length in windows
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Target false-positive rate for the LSTM threshold
    #[arg(long, default_value_t = 0.01)]
    fpr_target: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Hyper-parameter profile: paper (full-scale) or test (fast);
    /// defaults to $SENTINEL_PROFILE, then paper
    #[arg(long)]
    profile: Option<HyperProfile>,
    /// Proceed even if the trace contains attack-labeled windows
    #[arg(long)]
    allow_attack_windows: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorArg {
    Pca,
    Ocsvm,
    Lstm,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum HyperProfile {
    Paper,
    Test,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Ground-truth labels to copy into the score rows
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Directory holding manifest.json and model files
    #[arg(long, default_value = "models")]
    models: PathBuf,
    /// Output scores CSV path
    #[arg(long, short, default_value = "scores.csv")]
    out: PathBuf,
    /// Must match the manifest's window length when given
    #[arg(long, value_parser = parse_interval_ns)]
    interval: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Window length used when the scores were produced
    #[arg(long, value_parser = parse_interval_ns, default_value = "1s")]
    interval: u64,
    /// Output directory for summary.csv and per-scenario files
    #[arg(long, short, default_value = "reports")]
    out: PathBuf,
    /// FPR targets reported as tpr@<fpr> columns
    #[arg(long, value_parser = parse_fpr_list, default_value = "0.01,0.05,0.1")]
    fpr_list: FprList,
    /// Render an SVG ROC plot per scenario
    #[arg(long)]
    svg: bool,
    /// Restrict every detector to the windows all detectors scored
    #[arg(long)]
    strict_intersection: bool,
}

#[derive(Clone, Debug)]
struct FprList(Vec<f64>);

fn parse_fpr_list(text: &str) -> Result<FprList, String> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| format!("bad fpr value {part:?}"))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("fpr {v} outside [0, 1]"));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err("fpr list is empty".into());
    }
    Ok(FprList(out))
}

fn parse_duration_ns(text: &str) -> Result<u64, String> {
    let text = text.trim();
    let split = text
        .find(|c: char| !c.is_ascii_digit())
        .ok_or_else(|| format!("duration {text:?} needs a unit (ns, ms, s, m, h)"))?;
    let (value, unit) = text.split_at(split);
    let value: u64 = value
        .parse()
        .map_err(|_| format!("bad duration {text:?}"))?;
    let scale: u64 = match unit {
        "ns" => 1,
        "ms" => 1_000_000,
        "s" => 1_000_000_000,
        "m" => 60_000_000_000,
        "h" => 3_600_000_000_000,
        _ => return Err(format!("unknown duration unit {unit:?}")),
    };
    value
        .checked_mul(scale)
        .filter(|&v| v > 0)
        .ok_or_else(|| format!("duration {text:?} out of range"))
}

fn parse_interval_ns(text: &str) -> Result<u64, String> {
    match text {
        "100ms" => Ok(100_000_000),
        "500ms" => Ok(500_000_000),
        "1s" => Ok(1_000_000_000),
        "2s" => Ok(2_000_000_000),
        other => Err(format!(
            "interval must be one of 100ms, 500ms, 1s, 2s; got {other:?}"
        )),
    }
}

fn interval_label(interval_ns: u64) -> String {
    match interval_ns {
        100_000_000 => "100ms".into(),
        500_000_000 => "500ms".into(),
        1_000_000_000 => "1s".into(),
        2_000_000_000 => "2s".into(),
        other => format!("{other}ns"),
    }
}

fn parse_gamma(text: &str) -> Result<Gamma, String> {
    if text == "scale" {
        return Ok(Gamma::Scale);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| format!("gamma must be \"scale\" or a number, got {text:?}"))?;
    if v <= 0.0 || !v.is_finite() {
        return Err(format!("gamma must be positive, got {v}"));
    }
    Ok(Gamma::Value(v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Score(args) => cmd_score(args),
        Command::Eval(args) => cmd_eval(args, false),
        Command::Report(args) => cmd_eval(args, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_profile(name_or_path: &str) -> Result<WorkloadProfile, CliError> {
    if let Some(profile) = WorkloadProfile::builtin(name_or_path) {
        return Ok(profile);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliError::new(
            Kind::Config,
            format!("unknown profile {name_or_path:?}: not a built-in and not a file"),
        ));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(Kind::Data, format!("reading {name_or_path}: {e}")))?;
    WorkloadProfile::from_toml_str(&text).map_err(|e| CliError::new(Kind::Config, e.to_string()))
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let mut profile = load_profile(&args.profile)?;
    if let Some(seed) = args.seed {
        profile.seed = seed;
    }
    if args.sessions == 0 {
        return Err(CliError::new(Kind::Config, "--sessions must be positive"));
    }

    let mut events: Vec<SyscallEvent> = Vec::new();
    for session_id in 0..args.sessions {
        events.extend(generate_legit(&profile, args.duration, session_id).map_err(workload_error)?);
    }

    let mut spans: Vec<LabelSpan> = Vec::new();
    if let Some(mode) = args.attack {
        let at = args
            .at
            .ok_or_else(|| CliError::new(Kind::Config, "--attack requires --at"))?;
        let dur = args
            .dur
            .ok_or_else(|| CliError::new(Kind::Config, "--attack requires --dur"))?;
        if args.attack_count == 0 {
            return Err(CliError::new(
                Kind::Config,
                "--attack-count must be positive",
            ));
        }
        let attack = match mode {
            AttackModeArg::FrequencyShift => AttackProfile::frequency_shift(
                args.attack_kind.as_deref().unwrap_or("enum_network"),
                (dur, dur),
            ),
            AttackModeArg::OrderShuffle => AttackProfile::order_shuffle(
                args.attack_kind.as_deref().unwrap_or("enum_system"),
                (dur, dur),
            ),
        };
        for burst in 0..u64::from(args.attack_count) {
            let start = at + burst * (dur + args.attack_gap);
            let burst_seed = profile.seed.wrapping_add(0x5eed + burst);
            let (updated, span) =
                inject_attack(&events, &attack, 0, start, burst_seed).map_err(workload_error)?;
            events = updated;
            spans.push(span);
        }
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new(Kind::Data, format!("creating {:?}: {e}", args.out)))?;
    let trace_path = args.out.join("trace.csv");
    let labels_path = args.out.join("labels.csv");
    write_trace_csv(&events, file_writer(&trace_path)?)
        .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
    write_labels_csv(&spans, file_writer(&labels_path)?)
        .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
    println!(
        "wrote {} ({} events) and {} ({} spans)",
        trace_path.display(),
        events.len(),
        labels_path.display(),
        spans.len()
    );
    Ok(())
}

fn workload_error(e: WorkloadError) -> CliError {
    CliError::new(Kind::Config, e.to_string())
}

fn file_writer(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::new(Kind::Data, format!("creating {}: {e}", path.display())))
}

fn file_reader(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::new(Kind::Data, format!("opening {}: {e}", path.display())))
}

fn read_trace_file(path: &Path) -> Result<Vec<SyscallEvent>, CliError> {
    parse_trace(file_reader(path)?).map_err(|e| CliError::new(Kind::Data, e.to_string()))
}

fn read_labels_file(path: Option<&PathBuf>) -> Result<Vec<LabelSpan>, CliError> {
    match path {
        Some(path) => {
            parse_labels(file_reader(path)?).map_err(|e| CliError::new(Kind::Data, e.to_string()))
        }
        None => Ok(Vec::new()),
    }
}

fn resolve_hyperparams(args: &TrainArgs) -> Result<LstmHyperparams, CliError> {
    let profile = match args.profile {
        Some(p) => p,
        None => match std::env::var("SENTINEL_PROFILE").ok().as_deref() {
            Some("paper") | None => HyperProfile::Paper,
            Some("test") => HyperProfile::Test,
            Some(other) => {
                return Err(CliError::new(
                    Kind::Config,
                    format!("SENTINEL_PROFILE must be paper or test, got {other:?}"),
                ))
            }
        },
    };
    let mut hp = match profile {
        HyperProfile::Paper => LstmHyperparams::default(),
        HyperProfile::Test => LstmHyperparams::test_profile(),
    };
    if let Some(hidden) = args.hidden {
        hp.hidden_units = hidden;
    }
    if let Some(delta) = args.delta {
        hp.delta = delta;
    }
    if let Some(epochs) = args.epochs {
        hp.epochs = epochs;
    }
    if let Some(batch) = args.batch {
        hp.batch_size = batch;
    }
    hp.seed = args.seed;
    Ok(hp)
}

fn pipeline_error(e: PipelineError) -> CliError {
    use sentinel_core::lstm::LstmError;
    use sentinel_core::ocsvm::OcsvmError;
    use sentinel_core::pca::PcaError;
    let kind = match &e {
        PipelineError::Lstm(LstmError::TrainingDiverged { .. })
        | PipelineError::Ocsvm(OcsvmError::NonConvergence { .. }) => Kind::Training,
        PipelineError::Lstm(LstmError::BadParam(_))
        | PipelineError::Ocsvm(OcsvmError::BadParam(_))
        | PipelineError::Pca(PcaError::BadRank { .. }) => Kind::Config,
        _ => Kind::Data,
    };
    CliError::new(kind, e.to_string())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let events = read_trace_file(&args.trace)?;
    let spans = read_labels_file(args.labels.as_ref())?;
    let vocabulary = Arc::new(build_vocabulary(&events));
    let series = windowize(&events, &vocabulary, args.interval, &spans);

    let attack_windows = series.iter_windows().filter(|(_, label)| *label).count();
    if attack_windows > 0 {
        if args.allow_attack_windows {
            eprintln!(
                "warning: training data contains {attack_windows} attack-labeled windows \
                 (--allow-attack-windows given)"
            );
        } else {
            return Err(CliError::new(
                Kind::Data,
                format!(
                    "training trace contains {attack_windows} attack-labeled windows; \
                     train on legitimate data or pass --allow-attack-windows"
                ),
            ));
        }
    }

    if !(args.fpr_target > 0.0 && args.fpr_target < 1.0) {
        return Err(CliError::new(
            Kind::Config,
            "--fpr-target must be in (0, 1)",
        ));
    }
    let lstm_hp = resolve_hyperparams(&args)?;
    let options = TrainOptions {
        pca: matches!(args.detector, DetectorArg::Pca | DetectorArg::All),
        ocsvm: matches!(args.detector, DetectorArg::Ocsvm | DetectorArg::All),
        lstm: matches!(args.detector, DetectorArg::Lstm | DetectorArg::All),
        pca_k: args.pca_k,
        nu: args.nu,
        gamma: args.gamma,
        lstm_hp,
        fpr_target: args.fpr_target,
    };

    let models = train_detectors(&series, &options).map_err(pipeline_error)?;
    for warning in &models.warnings {
        eprintln!("warning: {warning}");
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new(Kind::Data, format!("creating {:?}: {e}", args.out)))?;
    let sha = vocabulary.sha256();
    let mut detectors = Vec::new();

    if let Some(pca) = &models.pca {
        let path = args.out.join("pca.model");
        persist::save_pca(pca, &sha, file_writer(&path)?)
            .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
        println!("wrote {} (k = {})", path.display(), pca.k());
        detectors.push(pipeline::DETECTOR_PCA.to_string());
    }
    if let Some(ocsvm) = &models.ocsvm {
        let path = args.out.join("ocsvm.model");
        persist::save_ocsvm(ocsvm, &sha, file_writer(&path)?)
            .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
        println!(
            "wrote {} ({} support vectors)",
            path.display(),
            ocsvm.support_vectors().len()
        );
        detectors.push(pipeline::DETECTOR_OCSVM.to_string());
    }
    if let Some(lstm) = &models.lstm {
        let path = args.out.join("lstm.model");
        persist::save_lstm(lstm, &sha, file_writer(&path)?)
            .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
        let report = models.lstm_report.as_ref().expect("report with model");
        let final_loss = report
            .epochs
            .last()
            .map(|e| e.train_mse)
            .unwrap_or(f64::NAN);
        println!(
            "wrote {} (threshold = {:.6}, final train mse = {final_loss:.6})",
            path.display(),
            lstm.threshold().unwrap_or(f64::NAN)
        );
        detectors.push(pipeline::DETECTOR_LSTM.to_string());
    }

    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        version: FORMAT_VERSION,
        interval_ns: args.interval,
        vocabulary: vocabulary.names().to_vec(),
        vocab_sha256: sha,
        seed: args.seed,
        detectors,
        pca_k: args.pca_k,
        nu: args.nu,
        gamma: args.gamma,
        fpr_target: args.fpr_target,
        lstm: options.lstm_hp,
    };
    let manifest_path = args.out.join("manifest.json");
    manifest
        .save(file_writer(&manifest_path)?)
        .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn load_models(dir: &Path, manifest: &Manifest) -> Result<TrainedDetectors, CliError> {
    let mut models = TrainedDetectors {
        pca: None,
        ocsvm: None,
        lstm: None,
        lstm_report: None,
        pca_k_used: None,
        warnings: Vec::new(),
    };
    let check_sha = |sha: &str, path: &Path| -> Result<(), CliError> {
        if sha != manifest.vocab_sha256 {
            return Err(CliError::new(
                Kind::Data,
                format!(
                    "vocabulary mismatch: {} was trained with a different vocabulary than \
                     manifest.json",
                    path.display()
                ),
            ));
        }
        Ok(())
    };
    for detector in &manifest.detectors {
        match detector.as_str() {
            pipeline::DETECTOR_PCA => {
                let path = dir.join("pca.model");
                let (model, sha) = persist::load_pca(file_reader(&path)?)
                    .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
                check_sha(&sha, &path)?;
                models.pca = Some(model);
            }
            pipeline::DETECTOR_OCSVM => {
                let path = dir.join("ocsvm.model");
                let (model, sha) = persist::load_ocsvm(file_reader(&path)?)
                    .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
                check_sha(&sha, &path)?;
                models.ocsvm = Some(model);
            }
            pipeline::DETECTOR_LSTM => {
                let path = dir.join("lstm.model");
                let (model, sha) = persist::load_lstm(file_reader(&path)?)
                    .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
                check_sha(&sha, &path)?;
                models.lstm = Some(model);
            }
            other => {
                return Err(CliError::new(
                    Kind::Data,
                    format!("manifest names unknown detector {other:?}"),
                ))
            }
        }
    }
    Ok(models)
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let manifest_path = args.models.join("manifest.json");
    let manifest = Manifest::load(file_reader(&manifest_path)?)
        .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;

    if let Some(interval) = args.interval {
        if interval != manifest.interval_ns {
            return Err(CliError::new(
                Kind::Data,
                format!(
                    "interval mismatch: models were trained at {}, requested {}",
                    interval_label(manifest.interval_ns),
                    interval_label(interval)
                ),
            ));
        }
    }

    let models = load_models(&args.models, &manifest)?;
    let events = read_trace_file(&args.trace)?;
    let spans = read_labels_file(args.labels.as_ref())?;

    // The manifest's vocabulary defines the feature space; syscalls unseen
    // in training fall into the OOV dimension.
    let vocabulary = Arc::new(SyscallVocabulary::from_names(manifest.vocabulary.clone()));
    let series = windowize(&events, &vocabulary, manifest.interval_ns, &spans);

    let (rows, warnings) = score_detectors(&models, &series).map_err(pipeline_error)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    write_scores_csv(&rows, file_writer(&args.out)?)
        .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
    println!("wrote {} ({} rows)", args.out.display(), rows.len());
    Ok(())
}

fn cmd_eval(args: EvalArgs, force_svg: bool) -> Result<(), CliError> {
    let rows = parse_scores_csv(file_reader(&args.scores)?).map_err(pipeline_error)?;
    let spans = read_labels_file(Some(&args.labels))?;

    let mut per_detector: BTreeMap<String, Vec<ScoredWindow>> = BTreeMap::new();
    for row in &rows {
        per_detector
            .entry(row.detector.clone())
            .or_default()
            .push(row.as_scored_window());
    }
    if per_detector.is_empty() {
        return Err(CliError::new(Kind::Data, "scores file contains no rows"));
    }

    let report = build_report(
        &per_detector,
        &spans,
        args.interval,
        &args.fpr_list.0,
        args.strict_intersection,
    )
    .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new(Kind::Data, format!("creating {:?}: {e}", args.out)))?;
    write_report_files(&report, &args.out, args.svg || force_svg)?;
    Ok(())
}

fn write_report_files(report: &EvalReport, dir: &Path, svg: bool) -> Result<(), CliError> {
    let summary_path = dir.join("summary.csv");
    let mut w = file_writer(&summary_path)?;
    w.write_all(report.summary_csv().as_bytes())
        .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
    println!("wrote {}", summary_path.display());

    for scenario in &report.scenarios {
        let csv_path = dir.join(format!("roc_{}.csv", scenario.scenario));
        let mut w = file_writer(&csv_path)?;
        w.write_all(report.scenario_csv(scenario).as_bytes())
            .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
        println!("wrote {}", csv_path.display());
        if svg {
            let svg_path = dir.join(format!("roc_{}.svg", scenario.scenario));
            let mut w = file_writer(&svg_path)?;
            w.write_all(report.scenario_svg(scenario).as_bytes())
                .map_err(|e| CliError::new(Kind::Data, e.to_string()))?;
            println!("wrote {}", svg_path.display());
        }
    }
    Ok(())
}
