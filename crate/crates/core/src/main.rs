use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vidcopy::localization::{localize_candidates, TNConfig};
use vidcopy::metrics::{detection_uap, evaluate_subset, localization_uap, mean_ap};
use vidcopy::search::{detection_scores, global_topk_pairs, Normalization};
use vidcopy::simulator::{self, prepare_descriptors, ScoreNormParams, SearchConfig, SimConfig};
use vidcopy::storage;
use vidcopy::{DescriptorSet, Error, TransformTag, VideoId, VideoPair};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (descriptor format v1)");

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

/// Video copy detection toolkit: simulate, search, localize, evaluate.
#[derive(Parser)]
#[command(name = "vidcopy", version = VERSION)]
struct Cli {
    /// Worker threads for search and localization (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded benchmark instance.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Global top-k frame pair search and detection scores.
    Search {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        prep: PrepArgs,
        /// Output directory for matches.csv and detections.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Temporal-network localization of candidate pairs.
    Localize {
        /// CSV of query_id,ref_id pairs.
        #[arg(long, conflicts_with = "from_search", required_unless_present = "from_search")]
        candidates: Option<PathBuf>,
        /// Detection predictions CSV; every listed pair becomes a candidate.
        #[arg(long)]
        from_search: Option<PathBuf>,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        refs: PathBuf,
        #[command(flatten)]
        prep: PrepArgs,
        #[command(flatten)]
        tn: TnArgs,
        /// Localization predictions CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Micro AP or mAP of a prediction file.
    Evaluate {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Tags CSV used by --subset.
        #[arg(long, requires = "subset")]
        tags: Option<PathBuf>,
        /// Comma-separated tag terms that must all hold; `!tag` negates.
        #[arg(long, requires = "tags")]
        subset: Option<String>,
        /// Writes the precision-recall curve as CSV.
        #[arg(long, conflicts_with = "subset")]
        curve: Option<PathBuf>,
    },
    /// Checks descriptor dimension and rate limits.
    ValidateSubmission {
        #[arg(long)]
        descriptors: PathBuf,
        #[arg(long)]
        durations: PathBuf,
    },
}

#[derive(Args)]
struct PrepArgs {
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    normalize: NormArg,
    /// Training descriptors (file, or instance directory) for score normalization.
    #[arg(long)]
    score_norm: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    k_sn: usize,
    #[arg(long, default_value_t = 1.2)]
    beta: f64,
}

#[derive(Args)]
struct TnArgs {
    /// Node threshold (defaults depend on score normalization).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    offset: Option<f64>,
    #[arg(long)]
    max_gap: Option<f64>,
    #[arg(long)]
    min_length: Option<usize>,
    #[arg(long)]
    max_paths: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L2,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Detection,
    Localization,
    Map,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Io(_) | Error::Format(_) => EXIT_IO,
            Error::Validation(_) | Error::Dim { .. } => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Search {
            queries,
            refs,
            k,
            prep,
            out,
        } => search(&queries, &refs, k, &prep, &out),
        Command::Localize {
            candidates,
            from_search,
            queries,
            refs,
            prep,
            tn,
            out,
        } => localize(candidates, from_search, &queries, &refs, &prep, &tn, &out),
        Command::Evaluate {
            task,
            preds,
            gt,
            tags,
            subset,
            curve,
        } => evaluate(task, &preds, &gt, tags.as_deref(), subset.as_deref(), curve.as_deref()),
        Command::ValidateSubmission {
            descriptors,
            durations,
        } => {
            let sets = storage::read_descriptors(descriptors)?;
            let durations = storage::read_durations(durations)?;
            let report = storage::validate_descriptor_budget(&sets, &durations)?;
            println!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_VALIDATION })
        }
    }
}

fn simulate(config: &Path, out: &Path) -> Result<u8, Failure> {
    let text = fs::read_to_string(config).map_err(Error::from)?;
    let cfg = SimConfig::from_toml(&text).map_err(|e| config_error(e.to_string()))?;
    let instance = simulator::generate(&cfg).map_err(|e| config_error(e.to_string()))?;
    simulator::write_instance(out, &instance)?;
    println!("{}", instance.summary());
    Ok(0)
}

fn search_config(prep: &PrepArgs) -> SearchConfig {
    let normalization = match prep.normalize {
        NormArg::L2 => Normalization::L2,
        NormArg::None => Normalization::None,
    };
    let score_norm = prep.score_norm.as_ref().map(|_| ScoreNormParams {
        k: prep.k_sn,
        beta: prep.beta,
    });
    SearchConfig {
        k: 1,
        normalization,
        score_norm,
    }
}

fn read_training(prep: &PrepArgs) -> Result<Vec<DescriptorSet>, Failure> {
    match &prep.score_norm {
        None => Ok(Vec::new()),
        Some(p) if p.is_dir() => Ok(storage::read_descriptors(p.join(simulator::TRAINING_FILE))?),
        Some(p) => Ok(storage::read_descriptors(p)?),
    }
}

fn prepared(
    queries: &Path,
    refs: &Path,
    prep: &PrepArgs,
) -> Result<(Vec<DescriptorSet>, Vec<DescriptorSet>, SearchConfig), Failure> {
    let cfg = search_config(prep);
    let q = storage::read_descriptors(queries)?;
    let r = storage::read_descriptors(refs)?;
    let t = read_training(prep)?;
    let (q, r) = prepare_descriptors(&q, &r, &t, &cfg)?;
    Ok((q, r, cfg))
}

fn search(queries: &Path, refs: &Path, k: usize, prep: &PrepArgs, out: &Path) -> Result<u8, Failure> {
    let (q, r, _) = prepared(queries, refs, prep)?;
    let matches = global_topk_pairs(&q, &r, k)?;
    let detections = detection_scores(&matches);
    fs::create_dir_all(out).map_err(Error::from)?;
    storage::write_matches(out.join("matches.csv"), &matches)?;
    storage::write_detection_predictions(out.join("detections.csv"), &detections)?;
    println!("matches: {}", matches.len());
    println!("detected pairs: {}", detections.len());
    Ok(0)
}

fn localize(
    candidates: Option<PathBuf>,
    from_search: Option<PathBuf>,
    queries: &Path,
    refs: &Path,
    prep: &PrepArgs,
    tn: &TnArgs,
    out: &Path,
) -> Result<u8, Failure> {
    let pairs: Vec<VideoPair> = match (candidates, from_search) {
        (Some(c), _) => storage::read_pairs(c)?,
        (None, Some(d)) => storage::read_detection_predictions(d)?
            .iter()
            .map(|p| p.pair())
            .collect(),
        (None, None) => return Err(config_error("need --candidates or --from-search")),
    };
    let (q, r, cfg) = prepared(queries, refs, prep)?;
    let base = if cfg.score_norm.is_some() {
        TNConfig::score_normalized()
    } else {
        TNConfig::default()
    };
    let tn_cfg = TNConfig {
        similarity_threshold: tn.threshold.unwrap_or(base.similarity_threshold),
        offset: tn.offset.unwrap_or(base.offset),
        max_time_gap: tn.max_gap.unwrap_or(base.max_time_gap),
        min_path_length: tn.min_length.unwrap_or(base.min_path_length),
        max_paths_per_pair: tn.max_paths.unwrap_or(base.max_paths_per_pair),
    };
    tn_cfg.validate().map_err(|e| config_error(e.to_string()))?;
    let preds = localize_candidates(&pairs, &q, &r, &tn_cfg)?;
    storage::write_localization_predictions(out, &preds)?;
    println!("segments: {}", preds.len());
    Ok(0)
}

/// Parses `tag,!tag,...` into (name, wanted) terms.
fn parse_subset(expr: &str) -> Result<Vec<(String, bool)>, Failure> {
    expr.split(',')
        .map(str::trim)
        .map(|term| {
            let (name, wanted) = match term.strip_prefix('!') {
                Some(rest) => (rest.trim(), false),
                None => (term, true),
            };
            if name.is_empty() {
                Err(config_error(format!("empty term in subset expression {expr:?}")))
            } else {
                Ok((name.to_string(), wanted))
            }
        })
        .collect()
}

fn evaluate(
    task: Task,
    preds: &Path,
    gt: &Path,
    tags: Option<&Path>,
    subset: Option<&str>,
    curve: Option<&Path>,
) -> Result<u8, Failure> {
    let gt = storage::read_ground_truth(gt)?;
    if let (Some(tags), Some(expr)) = (tags, subset) {
        let terms = parse_subset(expr)?;
        let tags: Vec<TransformTag> = storage::read_tags(tags)?;
        let keep = |_: &VideoId, tag: Option<&TransformTag>| {
            terms
                .iter()
                .all(|(name, wanted)| tag.is_some_and(|t| t.has(name)) == *wanted)
        };
        let report = match task {
            Task::Localization => {
                let l = storage::read_localization_predictions(preds)?;
                evaluate_subset(None, Some(&l), &gt, &tags, keep)?
            }
            Task::Detection | Task::Map => {
                let d = storage::read_detection_predictions(preds)?;
                evaluate_subset(Some(&d), None, &gt, &tags, keep)?
            }
        };
        println!("matched queries in subset: {}", report.matched_queries);
        let value = match task {
            Task::Detection => report.detection_uap,
            Task::Map => report.map,
            Task::Localization => report.localization_uap,
        };
        println!("{:.6}", value.unwrap_or(0.0));
        return Ok(0);
    }
    let pr = match task {
        Task::Map => {
            let d = storage::read_detection_predictions(preds)?;
            println!("{:.6}", mean_ap(&d, &gt)?);
            return Ok(0);
        }
        Task::Detection => detection_uap(&storage::read_detection_predictions(preds)?, &gt)?,
        Task::Localization => localization_uap(&storage::read_localization_predictions(preds)?, &gt)?,
    };
    println!("{:.6}", pr.uap);
    if let Some(path) = curve {
        storage::write_curve(path, &pr)?;
    }
    Ok(0)
}
