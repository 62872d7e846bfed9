//! `mbs`: command-line front end for the gesture engine.
//!
//! Results go to stdout; diagnostics go to stderr. Exit status is 0 on
//! success, 1 on usage errors and 2 on data errors.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mbs_core::classify::{
    bayes_classify, extract_features, knn_classify, read_feature_rows, read_training_set, write_training_set,
    Classifier, ClassifyError, FeatureConfig, FeatureVector, Knn, NaiveBayes, Ranking, TrainingSet,
};
use mbs_core::detectors::{detect_fall, detect_tilts, motion_states};
use mbs_core::evaluation::{leave_one_out, train_test, write_report};
use mbs_core::kinematics::{MovementConfig, DEFAULT_TAIL_MS};
use mbs_core::position::{classify_default, observe, read_body_model, scale_templates, BodyModel};
use mbs_core::shortcut::{log_entry, read_body_map, Event, FeedbackEvent, Session};
use mbs_core::signal::{
    calibrate, derive_calibration, read_calibration, read_trace, smooth, write_calibration, write_trace, SmoothingSpec,
    Trace,
};
use mbs_core::synth::{self, Jitter, DEFAULT_CORPUS_NOISE, FIVE_CLASS_SUBSET};
use mbs_core::Execution;

use config::Config;

/// Marks an error as a usage error (exit status 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "mbs", version, about = "Gesture shortcuts from accelerometer traces")]
struct Cli {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for synthetic data
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Neighbours for kNN classification
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Smoothing window in samples
    #[arg(long, global = true)]
    window: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive a two-point calibration from +1g and -1g pose recordings
    Calibrate {
        /// Raw trace with each axis pointing up in turn
        #[arg(long)]
        plus: PathBuf,
        /// Raw trace with each axis pointing down in turn
        #[arg(long)]
        minus: PathBuf,
    },
    /// Generate a seeded synthetic gesture corpus
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = ClassSet::All)]
        classes: ClassSet,
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Displacement jitter, metres
        #[arg(long, default_value_t = 0.03)]
        jitter: f64,
        /// Sensor noise, m/s²
        #[arg(long, default_value_t = DEFAULT_CORPUS_NOISE)]
        noise: f64,
    },
    /// Extract feature rows from trace files
    Features {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Label written on every row
        #[arg(long)]
        label: Option<String>,
    },
    /// Build a training set from a ground-truth file and its traces
    Train {
        /// `file,label,...` CSV as written by `synth`
        #[arg(long)]
        truth: PathBuf,
        /// Directory holding the traces (defaults to the truth file's directory)
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Rank a trace or feature rows against training data
    Classify {
        input: PathBuf,
        #[command(flatten)]
        sets: SetArgs,
    },
    /// Leave-one-out or train/test evaluation as a confusion-matrix report
    Evaluate {
        #[arg(long)]
        training: PathBuf,
        /// Held-out set; leave-one-out over the training set when absent
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Policy)]
        method: Method,
    },
    /// Replay an event script through the shortcut engine
    Session {
        script: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[command(flatten)]
        sets: SetArgs,
        /// Also write the log to this file
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Detect tilts in a trace
    Tilt { trace: PathBuf },
    /// Motion state per window
    Motion { trace: PathBuf },
    /// Threshold fall detection
    Fall { trace: PathBuf },
    /// Position-based recognition against the default body model
    Position {
        trace: PathBuf,
        /// User height in metres; templates are rescaled from the model height
        #[arg(long)]
        height: Option<f64>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SetArgs {
    /// Pooled multi-user training set (selects kNN)
    #[arg(long)]
    pooled: Option<PathBuf>,
    /// This user's training set (Bayes when no pooled set is given)
    #[arg(long)]
    user: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassSet {
    All,
    Five,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    /// kNN with the configured k
    Policy,
    Knn,
    Bayes,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

struct Ctx {
    cfg: Config,
}

impl Ctx {
    fn features_cfg(&self) -> FeatureConfig {
        FeatureConfig { baseline_ms: self.cfg.baseline_ms, smoothing: self.cfg.smoothing() }
    }

    /// Reads a trace, calibrating raw counts with the configured calibration.
    fn trace(&self, path: &Path) -> Result<Trace> {
        let trace = read_trace(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
        if trace.is_calibrated() {
            return Ok(trace);
        }
        let cal_path = self
            .cfg
            .calibration
            .as_ref()
            .ok_or_else(|| anyhow!("{} holds raw counts; set `calibration` in the config", path.display()))?;
        let cal = read_calibration(&read_text(cal_path)?)?;
        Ok(calibrate(&trace, &cal)?)
    }

    fn set(&self, flag: &Option<PathBuf>, configured: &Option<PathBuf>) -> Result<Option<TrainingSet>> {
        match flag.as_ref().or(configured.as_ref()) {
            Some(path) => {
                let ts = read_training_set(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
                Ok(Some(ts))
            }
            None => Ok(None),
        }
    }

    fn sets(&self, args: &SetArgs) -> Result<(Option<TrainingSet>, Option<TrainingSet>)> {
        let pooled = self.set(&args.pooled, &self.cfg.pooled)?;
        let user = self.set(&args.user, &self.cfg.user)?;
        if pooled.is_none() && user.is_none() {
            return Err(usage("no training data: pass --pooled or --user (or set them in the config)"));
        }
        Ok((pooled, user))
    }

    /// The classification policy with the configured k.
    fn rank(&self, q: &FeatureVector, pooled: Option<&TrainingSet>, user: Option<&TrainingSet>) -> Result<Ranking> {
        Ok(match (pooled, user) {
            (Some(p), Some(u)) => knn_classify(q, &p.merged(u), self.cfg.k)?,
            (Some(p), None) => knn_classify(q, p, self.cfg.k)?,
            (None, Some(u)) => bayes_classify(q, u)?,
            (None, None) => return Err(ClassifyError::EmptyTrainingSet.into()),
        })
    }
}

fn cmd_calibrate(ctx: &Ctx, plus: &Path, minus: &Path) -> Result<String> {
    let spec = SmoothingSpec::rounded(mbs_core::signal::SmoothingKind::MovingAverage, ctx.cfg.window);
    let read = |p: &Path| -> Result<Trace> {
        let t = read_trace(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?;
        if t.is_calibrated() {
            bail!("{} is already in m/s²; calibration needs raw counts", p.display());
        }
        let window = spec.window().min(2 * t.len() - 1) | 1;
        Ok(smooth(&t, &SmoothingSpec::new(spec.kind(), window)?)?)
    };
    let (up, down) = (read(plus)?, read(minus)?);
    let extreme = |t: &Trace, pick: fn(f64, f64) -> f64, init: f64| -> [f64; 3] {
        std::array::from_fn(|axis| t.axis_values(axis).into_iter().fold(init, pick))
    };
    let cal = derive_calibration(extreme(&up, f64::max, f64::NEG_INFINITY), extreme(&down, f64::min, f64::INFINITY))?;
    Ok(write_calibration(&cal))
}

fn cmd_synth(ctx: &Ctx, out_dir: &Path, classes: ClassSet, n: usize, jitter: f64, noise: f64) -> Result<String> {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if !(jitter >= 0.0 && noise >= 0.0) {
        return Err(usage("--jitter and --noise must be non-negative"));
    }
    let mut protos = synth::body_part_prototypes(ctx.cfg.seed);
    if let ClassSet::Five = classes {
        protos = synth::subset(&protos, &FIVE_CLASS_SUBSET);
    }
    for (_, spec) in &mut protos {
        spec.noise_sigma = noise;
    }
    let corpus = synth::corpus(
        &protos,
        n,
        Jitter::displacement(jitter),
        ctx.cfg.seed,
        ctx.cfg.sample_rate_hz,
        Execution::Parallel,
    )?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let names: Vec<String> =
        (0..corpus.len()).map(|i| format!("{}_{:02}.csv", corpus[i].label.to_lowercase(), i % n)).collect();
    for (name, g) in names.iter().zip(&corpus) {
        write_text(&out_dir.join(name), &write_trace(&g.gesture.trace))?;
    }
    let truth = synth::truth_csv(names.iter().map(String::as_str).zip(&corpus));
    write_text(&out_dir.join("truth.csv"), &truth)?;
    eprintln!("wrote {} traces to {}", corpus.len(), out_dir.display());
    Ok(truth)
}

fn cmd_features(ctx: &Ctx, traces: &[PathBuf], label: Option<&str>) -> Result<String> {
    let cfg = ctx.features_cfg();
    let mut rows = Vec::new();
    for path in traces {
        let f = extract_features(&ctx.trace(path)?, &cfg).with_context(|| format!("features of {}", path.display()))?;
        rows.push(match label {
            Some(l) => f.with_label(l),
            None => f,
        });
    }
    Ok(write_training_set(&rows))
}

fn cmd_train(ctx: &Ctx, truth: &Path, dir: Option<&Path>) -> Result<String> {
    let pairs = synth::read_truth_labels(&read_text(truth)?).with_context(|| format!("parsing {}", truth.display()))?;
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| truth.parent().unwrap_or(Path::new(".")).to_path_buf());
    let cfg = ctx.features_cfg();
    let rows = pairs
        .iter()
        .map(|(file, label)| {
            let path = dir.join(file);
            let f = extract_features(&ctx.trace(&path)?, &cfg)
                .with_context(|| format!("features of {}", path.display()))?;
            Ok(f.with_label(label.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let ts = TrainingSet::new(rows)?;
    eprintln!("{} rows, {} classes", ts.len(), ts.classes().len());
    Ok(write_training_set(ts.rows()))
}

fn is_trace_file(text: &str) -> bool {
    text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')) == Some("t_ms,ax,ay,az")
}

fn cmd_classify(ctx: &Ctx, input: &Path, sets: &SetArgs) -> Result<String> {
    let (pooled, user) = ctx.sets(sets)?;
    let text = read_text(input)?;
    let queries = if is_trace_file(&text) {
        vec![extract_features(&ctx.trace(input)?, &ctx.features_cfg())?]
    } else {
        read_feature_rows(&text).with_context(|| format!("parsing {}", input.display()))?
    };
    let mut out = String::new();
    for (i, q) in queries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out += &ctx.rank(q, pooled.as_ref(), user.as_ref())?.to_string();
    }
    Ok(out)
}

fn cmd_evaluate(ctx: &Ctx, training: &Path, test: Option<&Path>, method: Method) -> Result<String> {
    let load = |p: &Path| read_training_set(&read_text(p)?).with_context(|| format!("parsing {}", p.display()));
    let train = load(training)?;
    let classifier: Box<dyn Classifier> = match method {
        Method::Policy | Method::Knn => Box::new(Knn { k: ctx.cfg.k }),
        Method::Bayes => Box::new(NaiveBayes),
    };
    let m = match test {
        Some(t) => train_test(&train, &load(t)?, classifier.as_ref(), Execution::Parallel)?,
        None => leave_one_out(&train, classifier.as_ref(), Execution::Parallel)?,
    };
    Ok(write_report(&m))
}

fn describe(feedback: &[FeedbackEvent]) -> String {
    feedback
        .iter()
        .map(|f| match f {
            FeedbackEvent::Vibration { seconds } => format!("vibrate {seconds}s"),
            FeedbackEvent::VisualProgress { app } => format!("progress {app}"),
            FeedbackEvent::AudioName { app } => format!("say {app}"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_session(ctx: &Ctx, script: &Path, map: Option<&PathBuf>, sets: &SetArgs, log: Option<&Path>) -> Result<String> {
    let map_path =
        map.or(ctx.cfg.body_map.as_ref()).ok_or_else(|| usage("no body map: pass --map or set `body_map`"))?;
    let body_map = read_body_map(&read_text(map_path)?).with_context(|| format!("parsing {}", map_path.display()))?;
    let epoch =
        chrono::DateTime::from_timestamp_millis(ctx.cfg.epoch_ms).ok_or_else(|| usage("epoch_ms out of range"))?;
    let base = script.parent().unwrap_or(Path::new("."));
    let mut sets_cache: Option<(Option<TrainingSet>, Option<TrainingSet>)> = None;

    let mut out = String::new();
    let mut session = Session::new(body_map.clone());
    for (i, raw) in read_text(script)?.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| anyhow!("{}:{}: {msg}", script.display(), i + 1);
        let mut parts = line.splitn(3, char::is_whitespace);
        let t: f64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| at("expected `<t_ms> <action|cancel|timer|gesture path>`".into()))?;
        let event = match (parts.next(), parts.next().map(str::trim)) {
            (Some("action"), None) => Event::ActionPress,
            (Some("cancel"), None) => Event::CancelPress,
            (Some("timer"), None) => Event::TimerExpired,
            (Some("gesture"), Some(path)) => {
                if sets_cache.is_none() {
                    sets_cache = Some(ctx.sets(sets)?);
                }
                let (pooled, user) = sets_cache.as_ref().unwrap();
                let q = extract_features(&ctx.trace(&base.join(path))?, &ctx.features_cfg())?;
                Event::GestureRecognized(ctx.rank(&q, pooled.as_ref(), user.as_ref())?)
            }
            _ => return Err(at(format!("cannot parse event `{line}`"))),
        };
        let step = session.step(event, t).map_err(|e| at(e.to_string()))?;
        if !step.feedback.is_empty() {
            eprintln!("{t}: {}", describe(&step.feedback));
        }
        if let Some(app) = &step.triggered {
            eprintln!("{t}: trigger {app}");
        }
        if session.is_final() {
            writeln!(out, "{}", log_entry(&session, epoch)?.to_tsv()).unwrap();
            session = Session::new(body_map.clone());
        }
    }
    if session.state() != mbs_core::shortcut::SessionState::Idle {
        eprintln!("script ended with a session still {}", session.state());
    }
    if let Some(log) = log {
        write_text(log, &out)?;
    }
    Ok(out)
}

fn cmd_tilt(ctx: &Ctx, path: &Path) -> Result<String> {
    let events = detect_tilts(&ctx.trace(path)?, &ctx.cfg.tilt)?;
    let mut out = String::from("direction,peak_deg,start_ms,end_ms\n");
    for e in events {
        writeln!(out, "{},{:.3},{},{}", e.direction, e.peak_deg, e.start_ms, e.end_ms).unwrap();
    }
    Ok(out)
}

fn cmd_motion(ctx: &Ctx, path: &Path) -> Result<String> {
    let states = motion_states(&ctx.trace(path)?, &ctx.cfg.motion)?;
    let mut out = String::from("window,start_ms,state\n");
    for (i, s) in states.iter().enumerate() {
        writeln!(out, "{i},{},{s}", i as f64 * ctx.cfg.motion.window_ms).unwrap();
    }
    Ok(out)
}

fn cmd_fall(ctx: &Ctx, path: &Path) -> Result<String> {
    Ok(format!("{}\n", detect_fall(&ctx.trace(path)?, &ctx.cfg.fall)?))
}

fn cmd_position(ctx: &Ctx, path: &Path, height: Option<f64>, model: Option<&PathBuf>) -> Result<String> {
    let model = match model.or(ctx.cfg.body_model.as_ref()) {
        Some(p) => read_body_model(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => BodyModel::default_model(),
    };
    let model = match height {
        Some(h) => scale_templates(&model, h).map_err(|e| usage(e.to_string()))?,
        None => model,
    };
    let movement = MovementConfig { baseline_ms: ctx.cfg.baseline_ms, ..MovementConfig::default() };
    let obs = observe(&ctx.trace(path)?, &movement, DEFAULT_TAIL_MS)?;
    let label = classify_default(obs.endpoint, obs.rotation_class, &model).unwrap_or("unrecognized");
    let e = obs.endpoint;
    Ok(format!("label,x,y,z,rotation_class\n{label},{:.4},{:.4},{:.4},{}\n", e.x, e.y, e.z, obs.rotation_class))
}

fn run(cli: Cli) -> Result<String> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    }
    .with_overrides(cli.seed, cli.k, cli.window)?;
    let ctx = Ctx { cfg };
    match &cli.command {
        Command::Calibrate { plus, minus } => cmd_calibrate(&ctx, plus, minus),
        Command::Synth { out_dir, classes, n, jitter, noise } => {
            cmd_synth(&ctx, out_dir, *classes, *n, *jitter, *noise)
        }
        Command::Features { traces, label } => cmd_features(&ctx, traces, label.as_deref()),
        Command::Train { truth, dir } => cmd_train(&ctx, truth, dir.as_deref()),
        Command::Classify { input, sets } => cmd_classify(&ctx, input, sets),
        Command::Evaluate { training, test, method } => cmd_evaluate(&ctx, training, test.as_deref(), *method),
        Command::Session { script, map, sets, log } => cmd_session(&ctx, script, map.as_ref(), sets, log.as_deref()),
        Command::Tilt { trace } => cmd_tilt(&ctx, trace),
        Command::Motion { trace } => cmd_motion(&ctx, trace),
        Command::Fall { trace } => cmd_fall(&ctx, trace),
        Command::Position { trace, height, model } => cmd_position(&ctx, trace, *height, model.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
