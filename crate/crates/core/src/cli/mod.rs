//! Command-line entry point.

pub mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::categorize::{categories_from_labels, categorize, CategorizeError, CategorizeOptions, CategoryModel, KSelection, DEFAULT_EPSILON, DEFAULT_NEIGHBORS, FEATURE_COUNT};
use crate::evaluate::{
    avg_gain_by_rank, category_correlations, content_type_report, reaction_gain, EvaluateError, ReactionGainReport,
};
use crate::ingest::{parse_event_log, parse_page_meta, EventStore, IngestError, PageId, StopWords, YearRange};
use crate::profiles::{
    cumulative_profile, delay_distribution, periodic_profile, year_profile, Attribution, BucketId, Counts, EventKind, Granularity,
    ProfileError,
};
use crate::schedules::{page_weights, schedule_for, Category, Schedule, ScheduleError, ScheduleKind};
use crate::synth::{generate, SynthConfig, SynthError};

use report::{aligned, num, opt, write_artifact, Provenance, Table};

pub const THREADS_ENV: &str = "ENGAGE_SCHED_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Categorize(#[from] CategorizeError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "engage-sched", version, about = "Posting schedules, page categories and reaction gain from event logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest and print the validation report.
    Validate(InputArgs),
    /// Per-page year and cumulative profiles plus the delay histogram.
    Profile(ProfileArgs),
    /// Ranked posting schedules.
    Schedule(ScheduleArgs),
    /// Fit and write the category model.
    Categorize(CategorizeArgs),
    /// Reaction gain, correlation and content-type reports.
    Evaluate(EvaluateArgs),
    /// Daily, weekly or monthly activity profiles.
    Trend(TrendArgs),
    /// Generate a synthetic event log.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// JSON Lines event log.
    #[arg(long)]
    pub log: PathBuf,
    /// Page metadata CSV.
    #[arg(long)]
    pub meta: PathBuf,
    /// Year range as START-END or a single year.
    #[arg(long, value_parser = parse_years)]
    pub years: Option<YearRange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CategorySource {
    /// Group pages by their metadata label.
    Labels,
    /// Cluster pages by reaction profile.
    Clustering,
}

#[derive(Debug, Args)]
pub struct CategoryArgs {
    #[arg(long, value_enum, default_value_t = CategorySource::Labels)]
    pub categories: CategorySource,
    /// Use the categories of a saved category model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Fixed number of clusters; otherwise chosen by the elbow method.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// Extra random k-medoid restarts.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Neighbour count for label correction.
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    pub neighbors: usize,
    #[arg(long)]
    pub no_label_correction: bool,
    /// Use the default feature priority instead of wrapper selection.
    #[arg(long)]
    pub no_feature_selection: bool,
    #[arg(long, default_value_t = FEATURE_COUNT)]
    pub max_features: usize,
    /// Stop-word list, one term per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Delay histogram horizon in hours.
    #[arg(long, default_value_t = 168)]
    pub horizon_hours: i64,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub category: CategoryArgs,
    /// Schedule kinds (comma separated); all six by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub kind: Vec<ScheduleKind>,
    #[arg(long, default_value_t = 96, value_parser = clap::value_parser!(u64).range(1..=96))]
    pub top: u64,
    /// Rescale every score vector to sum to 1.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CategorizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub category: CategoryArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttributionMode {
    /// Reactions in their own bucket.
    Own,
    /// Reactions in their parent post's bucket.
    Parent,
    Both,
}

impl AttributionMode {
    fn modes(self) -> Vec<Attribution> {
        match self {
            AttributionMode::Own => vec![Attribution::Reaction],
            AttributionMode::Parent => vec![Attribution::ParentPost],
            AttributionMode::Both => vec![Attribution::Reaction, Attribution::ParentPost],
        }
    }
}

fn attribution_name(a: Attribution) -> &'static str {
    match a {
        Attribution::Reaction => "own",
        Attribution::ParentPost => "parent",
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub category: CategoryArgs,
    #[arg(long, value_enum, default_value_t = AttributionMode::Own)]
    pub attribution: AttributionMode,
    /// Rows of the ranked gain tables.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..=96))]
    pub top: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Daily,
    Weekly,
    Monthly,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Daily => Granularity::Daily,
            GranularityArg::Weekly => Granularity::Weekly,
            GranularityArg::Monthly => Granularity::Monthly,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub category: CategoryArgs,
    #[arg(long, value_enum)]
    pub granularity: GranularityArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Key-value generator config.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_years(s: &str) -> Result<YearRange, String> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let start: i32 = a.trim().parse().map_err(|_| format!("invalid year {a:?}"))?;
    let end: i32 = b.trim().parse().map_err(|_| format!("invalid year {b:?}"))?;
    YearRange::new(start, end).map_err(|e| e.to_string())
}

fn parse_kind(s: &str) -> Result<ScheduleKind, String> {
    s.parse()
}

/// The invocation rendered without its output location.
fn canonical_command(args: &[String]) -> String {
    let mut parts = vec!["engage-sched".to_string()];
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        parts.push(a.clone());
    }
    parts.join(" ")
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // A pool may already exist when the CLI runs inside a larger process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Parses `args` (without the program name), runs the subcommand and maps
/// the outcome to an exit status: 0 success, 1 module error, 2 usage error.
pub fn run<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("engage-sched".to_string()).chain(args.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = configure_threads().and_then(|_| execute(cli.command, &canonical_command(&args)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

struct Loaded {
    store: EventStore,
    inputs: Vec<Vec<u8>>,
}

fn load(input: &InputArgs) -> Result<Loaded, CliError> {
    let meta_bytes = read(&input.meta)?;
    let log_bytes = read(&input.log)?;
    let meta = parse_page_meta(&meta_bytes[..])?;
    let store = parse_event_log(&log_bytes[..], meta, input.years)?;
    Ok(Loaded {
        store,
        inputs: vec![log_bytes, meta_bytes],
    })
}

fn categorize_options(args: &CategoryArgs, inputs: &mut Vec<Vec<u8>>) -> Result<CategorizeOptions, CliError> {
    let stopwords = match &args.stopwords {
        Some(path) => {
            let bytes = read(path)?;
            let list = StopWords::parse(&String::from_utf8_lossy(&bytes));
            inputs.push(bytes);
            list
        }
        None => StopWords::english(),
    };
    Ok(CategorizeOptions {
        k: match args.k {
            Some(k) => KSelection::Fixed(k),
            None => KSelection::Elbow {
                min: args.k_min,
                max: args.k_max,
            },
        },
        neighbors: (!args.no_label_correction).then_some(args.neighbors),
        restarts: args.restarts,
        seed: args.seed,
        select_features: !args.no_feature_selection,
        max_features: args.max_features,
        epsilon: DEFAULT_EPSILON,
        stopwords,
    })
}

fn resolve_categories(store: &EventStore, args: &CategoryArgs, inputs: &mut Vec<Vec<u8>>) -> Result<Vec<Category>, CliError> {
    if let Some(path) = &args.model {
        let bytes = read(path)?;
        let model = CategoryModel::from_document(&String::from_utf8_lossy(&bytes))?;
        inputs.push(bytes);
        if let Some(p) = model.assignment.keys().find(|p| store.page(p).is_none()) {
            return Err(CliError::Invalid(format!("model page {p:?} is not in the page table")));
        }
        return Ok(model.categories());
    }
    match args.categories {
        CategorySource::Labels => {
            let labels: BTreeMap<PageId, String> = store.pages().map(|p| (p.page_id.clone(), p.label.clone())).collect();
            Ok(categories_from_labels(&labels))
        }
        CategorySource::Clustering => {
            let options = categorize_options(args, inputs)?;
            Ok(categorize(store, &options)?.categories())
        }
    }
}

fn provenance(command: &str, inputs: &[Vec<u8>]) -> Provenance {
    let refs: Vec<&[u8]> = inputs.iter().map(Vec::as_slice).collect();
    Provenance::new(command.to_string(), &refs)
}

fn warn(what: &str, err: impl std::fmt::Display) {
    eprintln!("warning: {what}: {err}");
}

fn execute(command: Command, canonical: &str) -> Result<(), CliError> {
    match command {
        Command::Validate(input) => {
            let loaded = load(&input)?;
            print!("{}", loaded.store.report());
            Ok(())
        }
        Command::Profile(args) => cmd_profile(args, canonical),
        Command::Schedule(args) => cmd_schedule(args, canonical),
        Command::Categorize(args) => cmd_categorize(args, canonical),
        Command::Evaluate(args) => cmd_evaluate(args, canonical),
        Command::Trend(args) => cmd_trend(args, canonical),
        Command::Synth(args) => cmd_synth(args, canonical),
    }
}

fn cmd_profile(args: ProfileArgs, canonical: &str) -> Result<(), CliError> {
    let Loaded { store, inputs } = load(&args.input)?;
    let prov = provenance(canonical, &inputs);
    let mut table = Table::new(&["page_id", "kind", "year", "index", "count"]);
    let years: Vec<i32> = store.year_range().map(|r| r.years().collect()).unwrap_or_default();
    for page in store.page_ids() {
        for kind in [EventKind::Posting, EventKind::Reaction] {
            let mut rows: Vec<(String, Counts)> = Vec::with_capacity(years.len() + 1);
            for &year in &years {
                rows.push((year.to_string(), year_profile(&store, page, year, kind)?.counts));
            }
            rows.push(("all".into(), cumulative_profile(&store, page, kind)?.counts));
            for (year, counts) in rows {
                for (b, c) in BucketId::all().zip(counts) {
                    table.row([page.clone(), kind.as_str().into(), year.clone(), b.index().to_string(), c.to_string()]);
                }
            }
        }
    }
    let path = write_artifact(&args.out, "profiles.tsv", &prov, &table.into_string())?;
    println!("wrote {}", path.display());

    if args.horizon_hours <= 0 {
        return Err(ProfileError::NonPositiveHorizon.into());
    }
    match delay_distribution(&store, args.horizon_hours * 3600) {
        Ok(h) => {
            let mut t = Table::new(&["index", "from_hours", "to_hours", "count", "mass", "cdf"]);
            for i in 0..h.counts.len() {
                t.row([
                    (i + 1).to_string(),
                    num(h.edges_secs[i] as f64 / 3600.0),
                    num(h.edges_secs[i + 1] as f64 / 3600.0),
                    h.counts[i].to_string(),
                    num(h.mass[i]),
                    num(h.cdf[i]),
                ]);
            }
            let body = format!("# beyond-horizon: {}\n{}", h.beyond_horizon, t.into_string());
            let path = write_artifact(&args.out, "delay_histogram.tsv", &prov, &body)?;
            println!("wrote {}", path.display());
        }
        Err(e) => warn("delay histogram skipped", e),
    }
    Ok(())
}

/// Schedules of `kind`: one for aggregated kinds, else one per category that
/// has events.
fn schedules_of(store: &EventStore, kind: ScheduleKind, categories: &[Category]) -> Result<Vec<(String, String, Schedule)>, CliError> {
    if kind.is_aggregated() {
        return Ok(vec![("all".into(), "all".into(), schedule_for(store, kind, None)?)]);
    }
    let mut out = Vec::new();
    for cat in categories {
        match schedule_for(store, kind, Some(cat)) {
            Ok(s) => out.push((format!("c{}", cat.id), cat.label.clone(), s)),
            Err(e) => warn(&format!("{kind} schedule for category {:?} skipped", cat.label), e),
        }
    }
    Ok(out)
}

fn cmd_schedule(args: ScheduleArgs, canonical: &str) -> Result<(), CliError> {
    let Loaded { store, mut inputs } = load(&args.input)?;
    let categories = resolve_categories(&store, &args.category, &mut inputs)?;
    let prov = provenance(canonical, &inputs);
    let kinds = if args.kind.is_empty() { ScheduleKind::ALL.to_vec() } else { args.kind.clone() };
    let top = args.top as usize;
    for kind in kinds {
        for (scope, label, schedule) in schedules_of(&store, kind, &categories)? {
            let scores = if args.normalize { schedule.normalized_scores() } else { schedule.scores };
            let mut table = Table::new(&["rank", "bucket", "start_hhmm", "end_hhmm", "score"]);
            for (rank, b) in schedule.ranking.iter().take(top).enumerate() {
                table.row([
                    (rank + 1).to_string(),
                    b.index().to_string(),
                    b.start_hhmm(),
                    b.end_hhmm(),
                    num(scores[b.zero_based()]),
                ]);
            }
            let body = format!("# scope: {scope}\t{}\n{}", label.replace(['\t', '\n'], " "), table.into_string());
            let path = write_artifact(&args.out, &format!("schedule_{kind}_{scope}.tsv"), &prov, &body)?;
            println!("wrote {}", path.display());
        }
        if kind.is_weighted() {
            let mut t = Table::new(&["scope", "label", "page_id", "gamma", "rho", "weight"]);
            for cat in &categories {
                match page_weights(&store, cat, kind.event_kind()) {
                    Ok(ws) => {
                        for w in ws {
                            t.row([format!("c{}", cat.id), cat.label.clone(), w.page_id, w.gamma.to_string(), w.rho.to_string(), num(w.weight)]);
                        }
                    }
                    Err(e) => warn(&format!("weights for category {:?} skipped", cat.label), e),
                }
            }
            let path = write_artifact(&args.out, &format!("weights_{kind}.tsv"), &prov, &t.into_string())?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_categorize(args: CategorizeArgs, canonical: &str) -> Result<(), CliError> {
    let Loaded { store, mut inputs } = load(&args.input)?;
    let options = categorize_options(&args.category, &mut inputs)?;
    let prov = provenance(canonical, &inputs);
    let model = categorize(&store, &options)?;

    let path = write_artifact(&args.out, "category_model.txt", &prov, &model.to_document())?;
    println!("wrote {}", path.display());

    let mut t = Table::new(&["page_id", "category", "page_label", "category_label"]);
    for (page, &c) in &model.assignment {
        t.row([page.clone(), c.to_string(), model.page_labels[page].clone(), model.category_labels[c - 1].clone()]);
    }
    let path = write_artifact(&args.out, "categories.tsv", &prov, &t.into_string())?;
    println!("wrote {}", path.display());

    let mut t = Table::new(&["step", "feature", "loo_accuracy"]);
    for (i, (name, acc)) in model.selected_feature_names().iter().zip(&model.accuracy).enumerate() {
        t.row([(i + 1).to_string(), name.to_string(), num(*acc)]);
    }
    let path = write_artifact(&args.out, "feature_selection.tsv", &prov, &t.into_string())?;
    println!("wrote {}", path.display());

    if let Some(e) = &model.elbow {
        let mut t = Table::new(&["k", "objective", "chosen"]);
        for (k, o) in e.k_values.iter().zip(&e.objectives) {
            t.row([k.to_string(), num(*o), u8::from(*k == e.chosen).to_string()]);
        }
        let path = write_artifact(&args.out, "elbow.tsv", &prov, &t.into_string())?;
        println!("wrote {}", path.display());
    }

    let mut rows = vec![vec!["category".to_string(), "label".into(), "medoid".into(), "pages".into()]];
    for cat in model.categories() {
        rows.push(vec![cat.id.to_string(), cat.label.clone(), model.medoids[cat.id - 1].clone(), cat.pages.len().to_string()]);
    }
    print!("{}", aligned(&rows));
    println!("selected features: {}", model.selected_feature_names().join(", "));
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, canonical: &str) -> Result<(), CliError> {
    let Loaded { store, mut inputs } = load(&args.input)?;
    let categories = resolve_categories(&store, &args.category, &mut inputs)?;
    let prov = provenance(canonical, &inputs);
    let all_pages: Vec<PageId> = store.page_ids().cloned().collect();
    let modes = args.attribution.modes();
    let top = args.top as usize;

    // Reaction gain per scope and attribution.
    let mut gain_table = Table::new(&[
        "scope", "label", "attribution", "bucket", "start_hhmm", "end_hhmm", "posts", "reactions", "delta", "rg",
    ]);
    let mut all_reports: BTreeMap<&'static str, ReactionGainReport> = BTreeMap::new();
    let mut cat_reports: BTreeMap<(&'static str, usize), ReactionGainReport> = BTreeMap::new();
    let scopes = std::iter::once(("all".to_string(), "all".to_string(), None, &all_pages)).chain(
        categories
            .iter()
            .map(|c| (format!("c{}", c.id), c.label.clone(), Some(c.id), &c.pages)),
    );
    for (scope, label, id, pages) in scopes {
        for &mode in &modes {
            let report = match reaction_gain(&store, &label, pages, mode) {
                Ok(r) => r,
                Err(e) => {
                    warn(&format!("reaction gain for {scope} skipped"), e);
                    continue;
                }
            };
            for b in BucketId::all() {
                let k = b.zero_based();
                gain_table.row([
                    scope.clone(),
                    label.clone(),
                    attribution_name(mode).into(),
                    b.index().to_string(),
                    b.start_hhmm(),
                    b.end_hhmm(),
                    report.posts[k].to_string(),
                    report.reactions[k].to_string(),
                    opt(report.delta[k]),
                    opt(report.gain[k]),
                ]);
            }
            match id {
                None => {
                    all_reports.insert(attribution_name(mode), report);
                }
                Some(id) => {
                    cat_reports.insert((attribution_name(mode), id), report);
                }
            }
        }
    }
    write_artifact(&args.out, "reaction_gain.tsv", &prov, &gain_table.into_string())?;

    // Mean gain at each schedule rank.
    let mut rank_table = Table::new(&["kind", "attribution", "rank", "rg_avg"]);
    let mut summary_rg: Vec<Vec<String>> = vec![];
    for kind in ScheduleKind::ALL {
        let schedules = schedules_of(&store, kind, &categories)?;
        for &mode in &modes {
            let name = attribution_name(mode);
            let mut pairs: Vec<(&ReactionGainReport, &Schedule)> = Vec::new();
            for (scope, _, schedule) in &schedules {
                let report = if kind.is_aggregated() {
                    all_reports.get(name)
                } else {
                    let id: usize = scope[1..].parse().expect("category scope");
                    cat_reports.get(&(name, id))
                };
                if let Some(r) = report {
                    pairs.push((r, schedule));
                }
            }
            if pairs.is_empty() {
                continue;
            }
            let avg = avg_gain_by_rank(&pairs)?;
            for (rank, g) in avg.iter().take(top).enumerate() {
                rank_table.row([kind.to_string(), name.into(), (rank + 1).to_string(), opt(*g)]);
            }
            let mut line = vec![kind.to_string(), name.to_string()];
            line.extend(avg.iter().take(top.min(5)).map(|g| opt(*g)));
            summary_rg.push(line);
        }
    }
    write_artifact(&args.out, "rg_by_rank.tsv", &prov, &rank_table.into_string())?;

    // Correlations.
    let corr = category_correlations(&store, &categories)?;
    let mut header = vec!["label".to_string()];
    header.extend(corr.labels.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header_refs);
    for (label, row) in corr.labels.iter().zip(&corr.across) {
        let mut cells = vec![label.clone()];
        cells.extend(row.iter().map(|c| opt(*c)));
        t.row(cells);
    }
    write_artifact(&args.out, "correlation.tsv", &prov, &t.into_string())?;
    let mut t = Table::new(&["label", "pages", "within_mean"]);
    for ((label, w), cat) in corr.labels.iter().zip(&corr.within).zip(&categories) {
        t.row([label.clone(), cat.pages.len().to_string(), opt(*w)]);
    }
    write_artifact(&args.out, "within_correlation.tsv", &prov, &t.into_string())?;

    // Content types.
    let ct = content_type_report(&store, &all_pages)?;
    let mut t = Table::new(&["content_type", "posts", "reactions", "post_share_pct", "reaction_share_pct", "reactions_per_post"]);
    for r in &ct.rows {
        t.row([
            r.content_type.as_str().to_string(),
            r.posts.to_string(),
            r.reactions.to_string(),
            num(r.post_share_pct),
            num(r.reaction_share_pct),
            opt(r.reactions_per_post),
        ]);
    }
    write_artifact(&args.out, "content_types.tsv", &prov, &t.into_string())?;

    // Human-readable summary.
    let mut summary = String::new();
    let report = store.report();
    summary.push_str(&format!(
        "pages {}  posts {}  reactions {}  categories {}\n\n",
        store.page_count(),
        report.accepted_posts,
        report.accepted_reactions,
        categories.len()
    ));
    let mut rows = vec![vec!["kind".to_string(), "attribution".into()]];
    rows[0].extend((1..=top.min(5)).map(|r| format!("rg@{r}")));
    rows.extend(summary_rg);
    summary.push_str("mean reaction gain by schedule rank\n");
    summary.push_str(&aligned(&rows));
    summary.push_str(&format!(
        "\ncorrelation: mean within {}  mean across {}\n\n",
        opt(corr.mean_within()),
        opt(corr.mean_across())
    ));
    let mut rows = vec![vec!["type".to_string(), "posts%".into(), "reactions%".into()]];
    for r in &ct.rows {
        rows.push(vec![r.content_type.as_str().into(), num(r.post_share_pct), num(r.reaction_share_pct)]);
    }
    summary.push_str("content types\n");
    summary.push_str(&aligned(&rows));
    write_artifact(&args.out, "summary.txt", &prov, &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_trend(args: TrendArgs, canonical: &str) -> Result<(), CliError> {
    let Loaded { store, mut inputs } = load(&args.input)?;
    let categories = resolve_categories(&store, &args.category, &mut inputs)?;
    let prov = provenance(canonical, &inputs);
    let granularity: Granularity = args.granularity.into();
    let all_pages: Vec<PageId> = store.page_ids().cloned().collect();
    let mut table = Table::new(&["scope", "label", "slot", "name", "posts", "reactions", "post_share", "reaction_share"]);
    let scopes = std::iter::once(("all".to_string(), "all".to_string(), &all_pages))
        .chain(categories.iter().map(|c| (format!("c{}", c.id), c.label.clone(), &c.pages)));
    for (scope, label, pages) in scopes {
        if pages.is_empty() {
            continue;
        }
        let posts = periodic_profile(&store, pages, granularity, EventKind::Posting)?;
        let reactions = periodic_profile(&store, pages, granularity, EventKind::Reaction)?;
        let share = |counts: &[u64], i: usize| {
            let total: u64 = counts.iter().sum();
            if total == 0 {
                String::new()
            } else {
                num(counts[i] as f64 / total as f64)
            }
        };
        for i in 0..granularity.slots() {
            table.row([
                scope.clone(),
                label.clone(),
                (i + 1).to_string(),
                granularity.slot_name(i),
                posts.counts[i].to_string(),
                reactions.counts[i].to_string(),
                share(&posts.counts, i),
                share(&reactions.counts, i),
            ]);
        }
    }
    let path = write_artifact(&args.out, &format!("trend_{}.tsv", granularity.as_str()), &prov, &table.into_string())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs, canonical: &str) -> Result<(), CliError> {
    let bytes = read(&args.config)?;
    let mut config = SynthConfig::parse(&String::from_utf8_lossy(&bytes))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let prov = provenance(canonical, &[bytes]);
    let generated = generate(&config)?;
    let log = String::from_utf8(generated.log).expect("generated log is UTF-8");
    for (name, body) in [
        ("events.jsonl", log.as_str()),
        ("pages.csv", generated.meta_csv.as_str()),
        ("manifest.txt", generated.manifest.to_document().as_str()),
    ] {
        let path = write_artifact(&args.out, name, &prov, body)?;
        println!("wrote {}", path.display());
    }
    println!(
        "{} pages, {} posts, {} reactions",
        generated.manifest.pages.len(),
        generated.manifest.posts,
        generated.manifest.reactions
    );
    Ok(())
}
