//! Seeded synthetic event-log generator with a ground-truth manifest, and an
//! independent brute-force bucket counter used as a test oracle.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use thiserror::Error;

use crate::ingest::{ContentType, PageId, PostEvent, ReactionEvent, ReactionKind, Record};

const BUCKETS: usize = 96;
const BUCKET_SECS: i64 = 900;
const DAY_SECS: i64 = 86_400;
/// Reaction delays are truncated at one week.
pub const DELAY_HORIZON_SECS: i64 = 7 * DAY_SECS;
/// Rejection-sampling attempts allowed per requested reaction.
const MAX_ATTEMPTS_PER_REACTION: usize = 10_000;
const MANIFEST_HEADER: &str = "engage-sched synth-manifest v1";

const SYLLABLES: [&str; 20] = [
    "ba", "ko", "mi", "tu", "ne", "ra", "vo", "zi", "pe", "lu", "da", "fo", "gi", "ha", "jo", "ku", "ma", "no", "pi", "ru",
];

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("category {0:?} has zero total {1} intensity")]
    ZeroIntensity(String, &'static str),
    #[error("page {0:?} needs posts with positive reaction rate to receive reactions")]
    NoParentPosts(String),
    #[error("could not place reactions for page {0:?} under its reaction intensity")]
    RejectionLimit(String),
    #[error("log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("page table row {row}: {message}")]
    Meta { row: usize, message: String },
}

/// A 96-bucket intensity built from peaks over a flat background, or given
/// explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySpec {
    /// 1-based peak buckets.
    pub peaks: Vec<usize>,
    pub peak_weight: f64,
    pub background: f64,
    /// Gaussian spread in buckets (circular); 0 puts all peak mass on the bucket.
    pub width: f64,
    pub explicit: Option<Vec<f64>>,
}

impl Default for IntensitySpec {
    fn default() -> Self {
        Self {
            peaks: Vec::new(),
            peak_weight: 10.0,
            background: 1.0,
            width: 0.0,
            explicit: None,
        }
    }
}

impl IntensitySpec {
    pub fn uniform() -> Self {
        Self::default()
    }

    /// All mass on one bucket.
    pub fn delta(bucket: usize) -> Self {
        Self {
            peaks: vec![bucket],
            peak_weight: 1.0,
            background: 0.0,
            width: 0.0,
            explicit: None,
        }
    }

    pub fn peaked(peaks: Vec<usize>, peak_weight: f64, background: f64, width: f64) -> Self {
        Self {
            peaks,
            peak_weight,
            background,
            width,
            explicit: None,
        }
    }

    pub fn weights(&self) -> [f64; BUCKETS] {
        if let Some(v) = &self.explicit {
            let mut out = [0.0; BUCKETS];
            out.copy_from_slice(v);
            return out;
        }
        let mut out = [self.background; BUCKETS];
        for &peak in &self.peaks {
            let p = peak as i64 - 1;
            if self.width <= 0.0 {
                out[p as usize] += self.peak_weight;
                continue;
            }
            for (b, w) in out.iter_mut().enumerate() {
                let raw = (b as i64 - p).rem_euclid(BUCKETS as i64);
                let d = raw.min(BUCKETS as i64 - raw) as f64;
                *w += self.peak_weight * (-d * d / (2.0 * self.width * self.width)).exp();
            }
        }
        out
    }

    fn validate(&self, what: &str) -> Result<(), SynthError> {
        if let Some(v) = &self.explicit {
            if v.len() != BUCKETS {
                return Err(SynthError::Invalid(format!("{what}_intensity needs {BUCKETS} values")));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(SynthError::Invalid(format!("{what}_intensity must be nonnegative")));
            }
            return Ok(());
        }
        if self.peaks.iter().any(|&p| p == 0 || p > BUCKETS) {
            return Err(SynthError::Invalid(format!("{what}_peaks must lie in 1..={BUCKETS}")));
        }
        for (name, v) in [("peak_weight", self.peak_weight), ("background", self.background), ("width", self.width)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SynthError::Invalid(format!("{what}_{name} must be nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategorySpec {
    pub label: String,
    pub pages: usize,
    pub posts_per_page: usize,
    pub reactions_per_page: usize,
    pub posting: IntensitySpec,
    pub reaction: IntensitySpec,
    /// Exponential delay rate per hour.
    pub delay_rate: f64,
    /// Distinct pseudo-words in the category's text vocabulary.
    pub vocabulary: usize,
}

impl CategorySpec {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            pages: 4,
            posts_per_page: 100,
            reactions_per_page: 1000,
            posting: IntensitySpec::uniform(),
            reaction: IntensitySpec::uniform(),
            delay_rate: 0.5,
            vocabulary: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub year_start: i32,
    pub year_end: i32,
    pub tz_offset_minutes: i32,
    /// Post share per content type, in `ContentType::ALL` order.
    pub content_mix: [f64; 4],
    /// Relative reaction rate per content type, in `ContentType::ALL` order.
    pub type_reaction_rates: [f64; 4],
    /// Reaction kind weights, in `ReactionKind::ALL` order.
    pub reaction_kinds: [f64; 3],
    pub orphan_rate: f64,
    /// Fraction of pages given a wrong metadata label.
    pub label_noise: f64,
    pub words_per_post: usize,
    pub categories: Vec<CategorySpec>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            year_start: 2019,
            year_end: 2019,
            tz_offset_minutes: 0,
            content_mix: [0.25; 4],
            type_reaction_rates: [1.0; 4],
            reaction_kinds: [1.0, 0.0, 0.0],
            orphan_rate: 0.0,
            label_noise: 0.0,
            words_per_post: 8,
            categories: Vec::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T, SynthError> {
    value.trim().parse().map_err(|_| SynthError::Config {
        line,
        message: format!("invalid value for {key}: {value:?}"),
    })
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<Vec<T>, SynthError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(s, line, key))
        .collect()
}

fn parse_named<const N: usize>(value: &str, names: [&str; N], line: usize, key: &str) -> Result<[f64; N], SynthError> {
    let mut out = [0.0; N];
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, v) = part.split_once(':').ok_or_else(|| SynthError::Config {
            line,
            message: format!("{key} entries look like name:weight, got {part:?}"),
        })?;
        let i = names.iter().position(|n| *n == name.trim()).ok_or_else(|| SynthError::Config {
            line,
            message: format!("unknown {key} name {name:?}"),
        })?;
        out[i] = parse_num(v, line, key)?;
    }
    Ok(out)
}

fn join_named<const N: usize>(values: &[f64; N], names: [&str; N]) -> String {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n}:{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn join_list<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

const TYPE_NAMES: [&str; 4] = ["link", "photo", "status", "video"];
const KIND_NAMES: [&str; 3] = ["comment", "like", "share"];

impl SynthConfig {
    /// Parses `key = value` lines; `[category LABEL]` starts a category
    /// section. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut config = SynthConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(header) = content.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                let label = header
                    .trim()
                    .strip_prefix("category")
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .ok_or_else(|| SynthError::Config {
                        line,
                        message: format!("expected [category LABEL], got {content:?}"),
                    })?;
                config.categories.push(CategorySpec::new(label));
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| SynthError::Config {
                line,
                message: format!("expected key = value, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match config.categories.last_mut() {
                None => config.set_global(key, value, line)?,
                Some(cat) => set_category(cat, key, value, line)?,
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn set_global(&mut self, key: &str, value: &str, line: usize) -> Result<(), SynthError> {
        match key {
            "seed" => self.seed = parse_num(value, line, key)?,
            "years" => {
                let (a, b) = value.split_once('-').unwrap_or((value, value));
                self.year_start = parse_num(a, line, key)?;
                self.year_end = parse_num(b, line, key)?;
            }
            "tz_offset_minutes" => self.tz_offset_minutes = parse_num(value, line, key)?,
            "content_mix" => self.content_mix = parse_named(value, TYPE_NAMES, line, key)?,
            "type_reaction_rates" => self.type_reaction_rates = parse_named(value, TYPE_NAMES, line, key)?,
            "reaction_kinds" => self.reaction_kinds = parse_named(value, KIND_NAMES, line, key)?,
            "orphan_rate" => self.orphan_rate = parse_num(value, line, key)?,
            "label_noise" => self.label_noise = parse_num(value, line, key)?,
            "words_per_post" => self.words_per_post = parse_num(value, line, key)?,
            _ => {
                return Err(SynthError::Config {
                    line,
                    message: format!("unknown key {key:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |m: &str| Err(SynthError::Invalid(m.to_string()));
        if self.year_start > self.year_end {
            return invalid("years must be ascending");
        }
        if !(-720..=840).contains(&self.tz_offset_minutes) {
            return invalid("tz_offset_minutes must lie in -720..=840");
        }
        for (name, rate) in [("orphan_rate", self.orphan_rate), ("label_noise", self.label_noise)] {
            if !(0.0..=1.0).contains(&rate) {
                return invalid(&format!("{name} must lie in [0, 1]"));
            }
        }
        let weights_ok = |w: &[f64]| w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().sum::<f64>() > 0.0;
        if !weights_ok(&self.content_mix) || !weights_ok(&self.type_reaction_rates) || !weights_ok(&self.reaction_kinds) {
            return invalid("content_mix, type_reaction_rates and reaction_kinds need nonnegative weights with a positive sum");
        }
        let mut labels = HashSet::new();
        for c in &self.categories {
            if c.label.contains([',', '"', '\n', '\t']) {
                return invalid(&format!("category label {:?} may not contain commas, quotes or tabs", c.label));
            }
            if !labels.insert(c.label.as_str()) {
                return invalid(&format!("duplicate category {:?}", c.label));
            }
            if !c.delay_rate.is_finite() || c.delay_rate <= 0.0 {
                return invalid("delay_rate must be positive");
            }
            c.posting.validate("posting")?;
            c.reaction.validate("reaction")?;
            if c.posting.weights().iter().sum::<f64>() <= 0.0 {
                return Err(SynthError::ZeroIntensity(c.label.clone(), "posting"));
            }
            if c.reaction.weights().iter().sum::<f64>() <= 0.0 {
                return Err(SynthError::ZeroIntensity(c.label.clone(), "reaction"));
            }
        }
        Ok(())
    }

    /// Renders the config in the format accepted by [`SynthConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "years = {}-{}", self.year_start, self.year_end);
        let _ = writeln!(out, "tz_offset_minutes = {}", self.tz_offset_minutes);
        let _ = writeln!(out, "content_mix = {}", join_named(&self.content_mix, TYPE_NAMES));
        let _ = writeln!(out, "type_reaction_rates = {}", join_named(&self.type_reaction_rates, TYPE_NAMES));
        let _ = writeln!(out, "reaction_kinds = {}", join_named(&self.reaction_kinds, KIND_NAMES));
        let _ = writeln!(out, "orphan_rate = {}", self.orphan_rate);
        let _ = writeln!(out, "label_noise = {}", self.label_noise);
        let _ = writeln!(out, "words_per_post = {}", self.words_per_post);
        for c in &self.categories {
            let _ = writeln!(out, "\n[category {}]", c.label);
            let _ = writeln!(out, "pages = {}", c.pages);
            let _ = writeln!(out, "posts_per_page = {}", c.posts_per_page);
            let _ = writeln!(out, "reactions_per_page = {}", c.reactions_per_page);
            let _ = writeln!(out, "delay_rate = {}", c.delay_rate);
            let _ = writeln!(out, "vocabulary = {}", c.vocabulary);
            for (prefix, spec) in [("posting", &c.posting), ("reaction", &c.reaction)] {
                match &spec.explicit {
                    Some(v) => {
                        let _ = writeln!(out, "{prefix}_intensity = {}", join_list(v));
                    }
                    None => {
                        let _ = writeln!(out, "{prefix}_peaks = {}", join_list(&spec.peaks));
                        let _ = writeln!(out, "{prefix}_peak_weight = {}", spec.peak_weight);
                        let _ = writeln!(out, "{prefix}_background = {}", spec.background);
                        let _ = writeln!(out, "{prefix}_width = {}", spec.width);
                    }
                }
            }
        }
        out
    }
}

fn set_category(cat: &mut CategorySpec, key: &str, value: &str, line: usize) -> Result<(), SynthError> {
    match key {
        "pages" => cat.pages = parse_num(value, line, key)?,
        "posts_per_page" => cat.posts_per_page = parse_num(value, line, key)?,
        "reactions_per_page" => cat.reactions_per_page = parse_num(value, line, key)?,
        "delay_rate" => cat.delay_rate = parse_num(value, line, key)?,
        "vocabulary" => cat.vocabulary = parse_num(value, line, key)?,
        _ => {
            let (spec, field) = if let Some(f) = key.strip_prefix("posting_") {
                (&mut cat.posting, f)
            } else if let Some(f) = key.strip_prefix("reaction_") {
                (&mut cat.reaction, f)
            } else {
                return Err(SynthError::Config {
                    line,
                    message: format!("unknown category key {key:?}"),
                });
            };
            match field {
                "peaks" => spec.peaks = parse_list(value, line, key)?,
                "peak_weight" => spec.peak_weight = parse_num(value, line, key)?,
                "background" => spec.background = parse_num(value, line, key)?,
                "width" => spec.width = parse_num(value, line, key)?,
                "intensity" => spec.explicit = Some(parse_list(value, line, key)?),
                _ => {
                    return Err(SynthError::Config {
                        line,
                        message: format!("unknown category key {key:?}"),
                    })
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestCategory {
    pub id: usize,
    pub label: String,
    pub posting_peaks: Vec<usize>,
    pub reaction_peaks: Vec<usize>,
    pub pages: Vec<PageId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestPage {
    pub page_id: PageId,
    /// 1-based category id.
    pub category: usize,
    pub true_label: String,
    /// Label written to the page table (differs from `true_label` when noised).
    pub given_label: String,
    pub posts: usize,
    pub reactions: usize,
    pub orphans: usize,
}

/// Ground truth for a generated log.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub seed: u64,
    pub posts: usize,
    pub reactions: usize,
    pub categories: Vec<ManifestCategory>,
    pub pages: Vec<ManifestPage>,
}

impl Manifest {
    pub fn noised_pages(&self) -> impl Iterator<Item = &ManifestPage> {
        self.pages.iter().filter(|p| p.true_label != p.given_label)
    }

    pub fn true_labels(&self) -> BTreeMap<PageId, String> {
        self.pages.iter().map(|p| (p.page_id.clone(), p.true_label.clone())).collect()
    }

    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MANIFEST_HEADER}");
        let _ = writeln!(out, "seed\t{}", self.seed);
        let _ = writeln!(out, "posts\t{}", self.posts);
        let _ = writeln!(out, "reactions\t{}", self.reactions);
        for c in &self.categories {
            let _ = writeln!(
                out,
                "category\t{}\t{}\t{}\t{}\t{}",
                c.id,
                c.label,
                join_list(&c.posting_peaks),
                join_list(&c.reaction_peaks),
                c.pages.len()
            );
        }
        for p in &self.pages {
            let _ = writeln!(
                out,
                "page\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.page_id, p.category, p.true_label, p.given_label, p.posts, p.reactions, p.orphans
            );
        }
        out
    }
}

/// A generated event log with its page table and manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    /// JSON Lines event log.
    pub log: Vec<u8>,
    /// Page metadata CSV.
    pub meta_csv: String,
    pub manifest: Manifest,
}

fn pseudo_word(prefix: usize, index: usize) -> String {
    let mut word = String::from(SYLLABLES[prefix % SYLLABLES.len()]);
    let mut n = index;
    for _ in 0..2 {
        word.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
    }
    if n > 0 {
        word.push_str(&n.to_string());
    }
    word
}

fn category_vocabulary(category: usize, size: usize) -> Vec<String> {
    (0..size.max(1)).map(|i| format!("{}{}", pseudo_word(category, i), SYLLABLES[category / SYLLABLES.len() % SYLLABLES.len()])).collect()
}

fn local_midnight_epoch(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp()
}

fn local_year_of(local_secs: i64) -> i32 {
    use chrono::Datelike;
    chrono::DateTime::from_timestamp(local_secs, 0).expect("in range").year()
}

/// Generates a log from the config. Identical configs give identical output.
pub fn generate(config: &SynthConfig) -> Result<Generated, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tz_secs = i64::from(config.tz_offset_minutes) * 60;
    let first_day = local_midnight_epoch(NaiveDate::from_ymd_opt(config.year_start, 1, 1).expect("valid year")) / DAY_SECS;
    let last_day = local_midnight_epoch(NaiveDate::from_ymd_opt(config.year_end, 12, 31).expect("valid year")) / DAY_SECS;

    let type_dist = WeightedIndex::new(config.content_mix).expect("validated weights");
    let kind_dist = WeightedIndex::new(config.reaction_kinds).expect("validated weights");
    let shared_vocab: Vec<String> = (0..10).map(|i| format!("zz{}", pseudo_word(19, i))).collect();

    let total_pages: usize = config.categories.iter().map(|c| c.pages).sum();
    let noise_count = (config.label_noise * total_pages as f64).round() as usize;
    let noised: HashSet<usize> = if config.categories.len() > 1 && noise_count > 0 {
        sample(&mut rng, total_pages, noise_count.min(total_pages)).into_iter().collect()
    } else {
        HashSet::new()
    };

    let mut records: Vec<Record> = Vec::new();
    let mut meta_csv = String::from("page_id,label,fan_count,talking_about_count,fan_growth_rate,tz_offset_minutes\n");
    let mut manifest = Manifest {
        seed: config.seed,
        posts: 0,
        reactions: 0,
        categories: Vec::new(),
        pages: Vec::new(),
    };
    let mut global_page = 0;

    for (ci, cat) in config.categories.iter().enumerate() {
        let posting = WeightedIndex::new(cat.posting.weights()).map_err(|_| SynthError::ZeroIntensity(cat.label.clone(), "posting"))?;
        let reaction_w = cat.reaction.weights();
        let reaction_max = reaction_w.iter().copied().fold(0.0, f64::max);
        let delay = Exp::new(cat.delay_rate / 3600.0).map_err(|_| SynthError::Invalid("delay_rate must be positive".into()))?;
        let vocab = category_vocabulary(ci, cat.vocabulary);
        let peaks = |s: &IntensitySpec| if s.explicit.is_some() { Vec::new() } else { s.peaks.clone() };
        let mut mcat = ManifestCategory {
            id: ci + 1,
            label: cat.label.clone(),
            posting_peaks: peaks(&cat.posting),
            reaction_peaks: peaks(&cat.reaction),
            pages: Vec::new(),
        };

        for pi in 0..cat.pages {
            let page_id = format!("c{}p{:03}", ci + 1, pi + 1);
            let given_label = if noised.contains(&global_page) {
                let other = (ci + 1 + rng.random_range(0..config.categories.len() - 1)) % config.categories.len();
                config.categories[other].label.clone()
            } else {
                cat.label.clone()
            };
            global_page += 1;
            let fan_count: u64 = rng.random_range(1_000..1_000_000);
            let talking = fan_count / rng.random_range(10..100);
            let growth: f64 = (rng.random::<f64>() * 0.05 * 1e6).round() / 1e6;
            let _ = writeln!(meta_csv, "{page_id},{given_label},{fan_count},{talking},{growth},{}", config.tz_offset_minutes);

            let mut posts: Vec<PostEvent> = Vec::with_capacity(cat.posts_per_page);
            for n in 0..cat.posts_per_page {
                let day = rng.random_range(first_day..=last_day);
                let bucket = posting.sample(&mut rng) as i64;
                let local = day * DAY_SECS + bucket * BUCKET_SECS + rng.random_range(0..BUCKET_SECS);
                let content_type = ContentType::ALL[type_dist.sample(&mut rng)];
                let mut words: Vec<&str> = (0..config.words_per_post)
                    .map(|_| vocab[rng.random_range(0..vocab.len())].as_str())
                    .collect();
                words.push(&shared_vocab[rng.random_range(0..shared_vocab.len())]);
                posts.push(PostEvent {
                    post_id: format!("{page_id}-p{n}"),
                    page_id: page_id.clone(),
                    timestamp_utc: local - tz_secs,
                    content_type,
                    text: Some(words.join(" ")),
                });
            }

            let mut orphans = 0;
            let mut reactions = Vec::with_capacity(cat.reactions_per_page);
            if cat.reactions_per_page > 0 {
                let parent_weights: Vec<f64> = posts
                    .iter()
                    .map(|p| config.type_reaction_rates[p.content_type.index()])
                    .collect();
                let parents = WeightedIndex::new(&parent_weights).map_err(|_| SynthError::NoParentPosts(page_id.clone()))?;
                let mut attempts = 0usize;
                while reactions.len() < cat.reactions_per_page {
                    attempts += 1;
                    if attempts > MAX_ATTEMPTS_PER_REACTION * cat.reactions_per_page {
                        return Err(SynthError::RejectionLimit(page_id.clone()));
                    }
                    let parent = &posts[parents.sample(&mut rng)];
                    let d: f64 = delay.sample(&mut rng);
                    if d > DELAY_HORIZON_SECS as f64 {
                        continue;
                    }
                    let ts = parent.timestamp_utc + d.floor() as i64;
                    let local = ts + tz_secs;
                    let year = local_year_of(local);
                    if year < config.year_start || year > config.year_end {
                        continue;
                    }
                    let bucket = (local.rem_euclid(DAY_SECS) / BUCKET_SECS) as usize;
                    if rng.random::<f64>() * reaction_max >= reaction_w[bucket] {
                        continue;
                    }
                    let kind = ReactionKind::ALL[kind_dist.sample(&mut rng)];
                    let orphan = config.orphan_rate > 0.0 && rng.random::<f64>() < config.orphan_rate;
                    orphans += usize::from(orphan);
                    reactions.push(ReactionEvent {
                        reaction_id: format!("{page_id}-r{}", reactions.len()),
                        page_id: page_id.clone(),
                        post_id: (!orphan).then(|| parent.post_id.clone()),
                        kind,
                        timestamp_utc: ts,
                    });
                }
            }

            manifest.posts += posts.len();
            manifest.reactions += reactions.len();
            manifest.pages.push(ManifestPage {
                page_id: page_id.clone(),
                category: ci + 1,
                true_label: cat.label.clone(),
                given_label,
                posts: posts.len(),
                reactions: reactions.len(),
                orphans,
            });
            mcat.pages.push(page_id);
            records.extend(posts.into_iter().map(Record::Post));
            records.extend(reactions.into_iter().map(Record::Reaction));
        }
        manifest.categories.push(mcat);
    }

    let key = |r: &Record| match r {
        Record::Post(p) => (p.timestamp_utc, 0u8, p.page_id.clone(), p.post_id.clone()),
        Record::Reaction(r) => (r.timestamp_utc, 1u8, r.page_id.clone(), r.reaction_id.clone()),
    };
    records.sort_by_cached_key(key);
    let mut log = Vec::new();
    for r in &records {
        log.extend_from_slice(serde_json::to_string(r).expect("records serialize").as_bytes());
        log.push(b'\n');
    }
    Ok(Generated { log, meta_csv, manifest })
}

/// Per-page bucket counts computed by the brute-force oracle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BruteCounts {
    pub posts: BTreeMap<String, [u64; BUCKETS]>,
    pub reactions: BTreeMap<String, [u64; BUCKETS]>,
}

/// Proleptic Gregorian year of a day count since 1970-01-01.
fn civil_year(days: i64) -> i64 {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    yoe + era * 400 + i64::from(month <= 2)
}

/// Counts accepted posts and reactions per page and local bucket in a single
/// naive pass, applying the same acceptance rules as ingestion: unknown pages,
/// duplicate ids, reactions outside the year range and reactions earlier than
/// their parent post are skipped. Without `years` the range spans all records
/// of known pages.
pub fn brute_force_counts(log: &[u8], meta_csv: &str, years: Option<(i32, i32)>) -> Result<BruteCounts, SynthError> {
    let mut lines_iter = meta_csv.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header: Vec<&str> = lines_iter.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| SynthError::Meta {
            row: 0,
            message: format!("missing column {name}"),
        })
    };
    let (id_col, tz_col) = (col("page_id")?, col("tz_offset_minutes")?);
    let mut tz: HashMap<String, i64> = HashMap::new();
    for (i, row) in lines_iter.enumerate().filter(|(_, r)| !r.trim().is_empty()) {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        let bad = || SynthError::Meta {
            row: i + 1,
            message: "malformed row".into(),
        };
        let id = cells.get(id_col).ok_or_else(bad)?;
        let offset: i64 = cells.get(tz_col).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        tz.insert(id.to_string(), offset * 60);
    }

    let text = std::str::from_utf8(log).map_err(|e| SynthError::Log {
        line: 0,
        message: e.to_string(),
    })?;
    // (kind, page, id, parent, timestamp)
    let mut events: Vec<(bool, String, String, Option<String>, i64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |m: &str| SynthError::Log {
            line: i + 1,
            message: m.to_string(),
        };
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| err(&e.to_string()))?;
        let s = |k: &str| v.get(k).and_then(|x| x.as_str()).map(str::to_string);
        let ts = v.get("timestamp_utc").and_then(|x| x.as_i64()).ok_or_else(|| err("missing timestamp_utc"))?;
        let page = s("page_id").ok_or_else(|| err("missing page_id"))?;
        match s("type").as_deref() {
            Some("post") => events.push((true, page, s("post_id").ok_or_else(|| err("missing post_id"))?, None, ts)),
            Some("reaction") => events.push((
                false,
                page,
                s("reaction_id").ok_or_else(|| err("missing reaction_id"))?,
                s("post_id"),
                ts,
            )),
            _ => return Err(err("unknown record type")),
        }
    }

    let local = |page: &str, ts: i64| tz.get(page).map(|off| ts + off);
    let year_of = |secs: i64| civil_year(secs.div_euclid(DAY_SECS));
    let (lo, hi) = match years {
        Some((a, b)) => (i64::from(a), i64::from(b)),
        None => {
            let ys: Vec<i64> = events.iter().filter_map(|e| local(&e.1, e.4)).map(year_of).collect();
            (ys.iter().copied().min().unwrap_or(0), ys.iter().copied().max().unwrap_or(-1))
        }
    };

    let mut out = BruteCounts::default();
    for page in tz.keys() {
        out.posts.insert(page.clone(), [0; BUCKETS]);
        out.reactions.insert(page.clone(), [0; BUCKETS]);
    }
    let mut post_times: HashMap<(String, String), i64> = HashMap::new();
    for (_, page, id, _, ts) in events.iter().filter(|e| e.0) {
        let Some(l) = local(page, *ts) else { continue };
        let key = (page.clone(), id.clone());
        if post_times.contains_key(&key) {
            continue;
        }
        let y = year_of(l);
        if y < lo || y > hi {
            continue;
        }
        post_times.insert(key, *ts);
        out.posts.get_mut(page).expect("known page")[(l.rem_euclid(DAY_SECS) / BUCKET_SECS) as usize] += 1;
    }
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (_, page, id, parent, ts) in events.iter().filter(|e| !e.0) {
        let Some(l) = local(page, *ts) else { continue };
        if seen.contains(&(page.clone(), id.clone())) {
            continue;
        }
        let y = year_of(l);
        if y < lo || y > hi {
            continue;
        }
        if let Some(pt) = parent.as_ref().and_then(|p| post_times.get(&(page.clone(), p.clone()))) {
            if ts < pt {
                continue;
            }
        }
        seen.insert((page.clone(), id.clone()));
        out.reactions.get_mut(page).expect("known page")[(l.rem_euclid(DAY_SECS) / BUCKET_SECS) as usize] += 1;
    }
    Ok(out)
}
