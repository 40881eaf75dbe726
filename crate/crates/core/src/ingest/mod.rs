//! Event-log and page-metadata ingestion.
//!
//! The event log is JSON Lines, one `post` or `reaction` record per line. Page
//! metadata is a CSV table keyed by `page_id`. Parsing produces an immutable
//! [`EventStore`] together with a [`ValidationReport`] that enumerates every
//! rejected record.

mod text;

pub use text::{preprocess_text, stem, StopWords, TokenList};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read};

use chrono::{DateTime, Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

pub type PageId = String;

/// Local wall-clock date-time of an event.
pub type LocalDateTime = NaiveDateTime;

pub const MIN_TZ_OFFSET_MINUTES: i32 = -720;
pub const MAX_TZ_OFFSET_MINUTES: i32 = 840;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("page metadata row {row}: {message}")]
    Meta { row: usize, message: String },
    #[error("invalid year range {start}..={end}")]
    YearRange { start: i32, end: i32 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContentType {
    Link,
    Photo,
    Status,
    Video,
}

impl ContentType {
    pub const ALL: [ContentType; 4] = [
        ContentType::Link,
        ContentType::Photo,
        ContentType::Status,
        ContentType::Video,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContentType::Link => "link",
            ContentType::Photo => "photo",
            ContentType::Status => "status",
            ContentType::Video => "video",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ContentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReactionKind {
    Comment,
    Like,
    Share,
}

impl ReactionKind {
    pub const ALL: [ReactionKind; 3] = [ReactionKind::Comment, ReactionKind::Like, ReactionKind::Share];

    pub fn as_str(self) -> &'static str {
        match self {
            ReactionKind::Comment => "comment",
            ReactionKind::Like => "like",
            ReactionKind::Share => "share",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageMeta {
    pub page_id: PageId,
    pub label: String,
    pub fan_count: Option<u64>,
    pub talking_about_count: Option<u64>,
    pub fan_growth_rate: Option<f64>,
    pub tz_offset_minutes: i32,
}

impl PageMeta {
    pub fn new(page_id: impl Into<PageId>, label: impl Into<String>, tz_offset_minutes: i32) -> Self {
        Self {
            page_id: page_id.into(),
            label: label.into(),
            fan_count: None,
            talking_about_count: None,
            fan_growth_rate: None,
            tz_offset_minutes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostEvent {
    pub post_id: String,
    pub page_id: PageId,
    pub timestamp_utc: i64,
    pub content_type: ContentType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionEvent {
    pub reaction_id: String,
    pub page_id: PageId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_id: Option<String>,
    pub kind: ReactionKind,
    pub timestamp_utc: i64,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Post(PostEvent),
    Reaction(ReactionEvent),
}

/// Inclusive range of local calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Result<Self, IngestError> {
        if start > end {
            return Err(IngestError::YearRange { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    pub fn year_count(&self) -> usize {
        (self.end - self.start + 1) as usize
    }
}

/// Shifts a UTC instant by a fixed offset to local wall-clock time.
pub fn normalize_timestamp(timestamp_utc: i64, tz_offset_minutes: i32) -> LocalDateTime {
    let shifted = timestamp_utc + i64::from(tz_offset_minutes) * 60;
    DateTime::from_timestamp(shifted, 0)
        .expect("timestamp within chrono's representable range")
        .naive_utc()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    UnknownPage,
    DuplicatePost,
    DuplicateReaction,
    OutOfYearRange,
    ReactionBeforePost,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::UnknownPage => "unknown page_id",
            RejectReason::DuplicatePost => "duplicate post_id",
            RejectReason::DuplicateReaction => "duplicate reaction_id",
            RejectReason::OutOfYearRange => "outside year range",
            RejectReason::ReactionBeforePost => "reaction precedes parent post",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Non-blank record lines seen.
    pub total_lines: usize,
    pub accepted_posts: usize,
    pub accepted_reactions: usize,
    pub orphan_reactions: usize,
    pub rejections: Vec<Rejection>,
}

impl ValidationReport {
    pub fn accepted(&self) -> usize {
        self.accepted_posts + self.accepted_reactions
    }

    pub fn rejected(&self) -> usize {
        self.rejections.len()
    }

    pub fn rejected_by_reason(&self) -> BTreeMap<RejectReason, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rejections {
            *out.entry(r.reason).or_insert(0) += 1;
        }
        out
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} posts, {} reactions ({} orphan)",
            self.accepted_posts, self.accepted_reactions, self.orphan_reactions
        )?;
        writeln!(
            f,
            "lines: {} total, {} accepted, {} rejected",
            self.total_lines,
            self.accepted(),
            self.rejected()
        )?;
        for (reason, n) in self.rejected_by_reason() {
            writeln!(f, "  rejected {n}: {}", reason.as_str())?;
        }
        Ok(())
    }
}

/// Validated, immutable collection of pages, posts and reactions.
#[derive(Debug, Clone)]
pub struct EventStore {
    pages: BTreeMap<PageId, PageMeta>,
    posts: Vec<PostEvent>,
    reactions: Vec<ReactionEvent>,
    parents: Vec<Option<usize>>,
    posts_by_page: BTreeMap<PageId, Vec<usize>>,
    reactions_by_page: BTreeMap<PageId, Vec<usize>>,
    year_range: Option<YearRange>,
    report: ValidationReport,
}

impl EventStore {
    /// Validates records (in line order, numbered from 1) against the page table.
    ///
    /// Without an explicit `year_range` the range spans the local years of all
    /// records whose page is known.
    pub fn build(
        pages: Vec<PageMeta>,
        records: Vec<(usize, Record)>,
        year_range: Option<YearRange>,
    ) -> Self {
        let pages: BTreeMap<PageId, PageMeta> =
            pages.into_iter().map(|p| (p.page_id.clone(), p)).collect();
        let local_year = |page: &str, ts: i64| {
            pages
                .get(page)
                .map(|m| normalize_timestamp(ts, m.tz_offset_minutes).year())
        };
        let year_range = year_range.or_else(|| {
            let years: Vec<i32> = records
                .iter()
                .filter_map(|(_, r)| match r {
                    Record::Post(p) => local_year(&p.page_id, p.timestamp_utc),
                    Record::Reaction(r) => local_year(&r.page_id, r.timestamp_utc),
                })
                .collect();
            let start = years.iter().copied().min()?;
            let end = years.iter().copied().max()?;
            Some(YearRange { start, end })
        });
        let in_range = |page: &str, ts: i64| match (year_range, local_year(page, ts)) {
            (Some(range), Some(y)) => range.contains(y),
            _ => false,
        };

        let mut report = ValidationReport {
            total_lines: records.len(),
            ..Default::default()
        };
        let mut posts = Vec::new();
        let mut post_index: HashMap<(PageId, String), usize> = HashMap::new();
        let (post_records, reaction_records): (Vec<_>, Vec<_>) = records
            .into_iter()
            .partition(|(_, r)| matches!(r, Record::Post(_)));

        for (line, record) in post_records {
            let Record::Post(post) = record else { unreachable!() };
            let reason = if !pages.contains_key(&post.page_id) {
                Some(RejectReason::UnknownPage)
            } else if post_index.contains_key(&(post.page_id.clone(), post.post_id.clone())) {
                Some(RejectReason::DuplicatePost)
            } else if !in_range(&post.page_id, post.timestamp_utc) {
                Some(RejectReason::OutOfYearRange)
            } else {
                None
            };
            match reason {
                Some(reason) => report.rejections.push(Rejection { line, reason }),
                None => {
                    post_index.insert((post.page_id.clone(), post.post_id.clone()), posts.len());
                    posts.push(post);
                }
            }
        }

        let mut reactions = Vec::new();
        let mut parents = Vec::new();
        let mut seen_reactions: HashSet<(PageId, String)> = HashSet::new();
        for (line, record) in reaction_records {
            let Record::Reaction(reaction) = record else { unreachable!() };
            let parent = reaction
                .post_id
                .as_ref()
                .and_then(|pid| post_index.get(&(reaction.page_id.clone(), pid.clone())).copied());
            let reason = if !pages.contains_key(&reaction.page_id) {
                Some(RejectReason::UnknownPage)
            } else if seen_reactions.contains(&(reaction.page_id.clone(), reaction.reaction_id.clone())) {
                Some(RejectReason::DuplicateReaction)
            } else if !in_range(&reaction.page_id, reaction.timestamp_utc) {
                Some(RejectReason::OutOfYearRange)
            } else if parent.is_some_and(|p| reaction.timestamp_utc < posts[p].timestamp_utc) {
                Some(RejectReason::ReactionBeforePost)
            } else {
                None
            };
            match reason {
                Some(reason) => report.rejections.push(Rejection { line, reason }),
                None => {
                    seen_reactions.insert((reaction.page_id.clone(), reaction.reaction_id.clone()));
                    if parent.is_none() {
                        report.orphan_reactions += 1;
                    }
                    parents.push(parent);
                    reactions.push(reaction);
                }
            }
        }
        report.rejections.sort_by_key(|r| r.line);
        report.accepted_posts = posts.len();
        report.accepted_reactions = reactions.len();

        let mut posts_by_page: BTreeMap<PageId, Vec<usize>> =
            pages.keys().map(|k| (k.clone(), Vec::new())).collect();
        for (i, p) in posts.iter().enumerate() {
            posts_by_page.get_mut(&p.page_id).expect("validated page").push(i);
        }
        let mut reactions_by_page: BTreeMap<PageId, Vec<usize>> =
            pages.keys().map(|k| (k.clone(), Vec::new())).collect();
        for (i, r) in reactions.iter().enumerate() {
            reactions_by_page.get_mut(&r.page_id).expect("validated page").push(i);
        }

        Self {
            pages,
            posts,
            reactions,
            parents,
            posts_by_page,
            reactions_by_page,
            year_range,
            report,
        }
    }

    /// Builds a store from already-parsed records; line numbers follow slice order.
    pub fn from_records(pages: Vec<PageMeta>, records: Vec<Record>, year_range: Option<YearRange>) -> Self {
        let numbered = records.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        Self::build(pages, numbered, year_range)
    }

    pub fn pages(&self) -> impl Iterator<Item = &PageMeta> {
        self.pages.values()
    }

    pub fn page_ids(&self) -> impl Iterator<Item = &PageId> {
        self.pages.keys()
    }

    pub fn page(&self, page_id: &str) -> Option<&PageMeta> {
        self.pages.get(page_id)
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn posts(&self) -> &[PostEvent] {
        &self.posts
    }

    pub fn reactions(&self) -> &[ReactionEvent] {
        &self.reactions
    }

    pub fn posts_of<'a>(&'a self, page_id: &str) -> impl Iterator<Item = &'a PostEvent> + 'a {
        self.posts_by_page
            .get(page_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.posts[i])
    }

    /// Reactions of a page, each paired with its parent post when known.
    pub fn reactions_of<'a>(
        &'a self,
        page_id: &str,
    ) -> impl Iterator<Item = (&'a ReactionEvent, Option<&'a PostEvent>)> + 'a {
        self.reactions_by_page
            .get(page_id)
            .into_iter()
            .flatten()
            .map(move |&i| (&self.reactions[i], self.parents[i].map(|p| &self.posts[p])))
    }

    /// All reactions paired with their parent post when known.
    pub fn reactions_with_parents(&self) -> impl Iterator<Item = (&ReactionEvent, Option<&PostEvent>)> {
        self.reactions
            .iter()
            .zip(&self.parents)
            .map(move |(r, p)| (r, p.map(|i| &self.posts[i])))
    }

    pub fn year_range(&self) -> Option<YearRange> {
        self.year_range
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    /// Local time of an instant on the given page; `None` when the page is unknown.
    pub fn local_time(&self, page_id: &str, timestamp_utc: i64) -> Option<LocalDateTime> {
        self.pages
            .get(page_id)
            .map(|m| normalize_timestamp(timestamp_utc, m.tz_offset_minutes))
    }

    /// Concatenated preprocessed text of all posts of a page.
    pub fn page_tokens(&self, page_id: &str, stopwords: &StopWords) -> TokenList {
        let mut out = TokenList::default();
        for post in self.posts_of(page_id) {
            if let Some(text) = &post.text {
                out.extend(preprocess_text(text, stopwords));
            }
        }
        out
    }
}

/// Parses the page-metadata CSV table.
pub fn parse_page_meta<R: Read>(reader: R) -> Result<Vec<PageMeta>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Meta { row: 0, message: e.to_string() })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id_col), Some(label_col), Some(tz_col)) =
        (col("page_id"), col("label"), col("tz_offset_minutes"))
    else {
        return Err(IngestError::Meta {
            row: 0,
            message: "header must contain page_id, label, tz_offset_minutes".into(),
        });
    };
    let fan_col = col("fan_count");
    let talk_col = col("talking_about_count");
    let growth_col = col("fan_growth_rate");

    let mut out: Vec<PageMeta> = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::Meta { row, message: e.to_string() })?;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
        let bad = |what: &str, v: &str| IngestError::Meta {
            row,
            message: format!("invalid {what}: {v:?}"),
        };
        let page_id = field(Some(id_col)).ok_or_else(|| bad("page_id", ""))?.to_string();
        if !seen.insert(page_id.clone()) {
            return Err(IngestError::Meta {
                row,
                message: format!("duplicate page_id {page_id:?}"),
            });
        }
        let label = field(Some(label_col)).unwrap_or("").to_string();
        let tz_raw = field(Some(tz_col)).unwrap_or("");
        let tz_offset_minutes: i32 = tz_raw.parse().map_err(|_| bad("tz_offset_minutes", tz_raw))?;
        if !(MIN_TZ_OFFSET_MINUTES..=MAX_TZ_OFFSET_MINUTES).contains(&tz_offset_minutes) {
            return Err(bad("tz_offset_minutes", tz_raw));
        }
        let fan_count = field(fan_col)
            .map(|v| v.parse().map_err(|_| bad("fan_count", v)))
            .transpose()?;
        let talking_about_count = field(talk_col)
            .map(|v| v.parse().map_err(|_| bad("talking_about_count", v)))
            .transpose()?;
        let fan_growth_rate = field(growth_col)
            .map(|v| v.parse().map_err(|_| bad("fan_growth_rate", v)))
            .transpose()?;
        out.push(PageMeta {
            page_id,
            label,
            fan_count,
            talking_about_count,
            fan_growth_rate,
            tz_offset_minutes,
        });
    }
    Ok(out)
}

/// Parses a JSON Lines event log and validates it against `meta`.
///
/// A line that is not a well-formed record aborts parsing with its line
/// number. Well-formed records that fail validation are rejected and listed in
/// the store's [`ValidationReport`]. Blank lines and `#` comment lines are
/// skipped.
pub fn parse_event_log<R: BufRead>(
    stream: R,
    meta: Vec<PageMeta>,
    year_range: Option<YearRange>,
) -> Result<EventStore, IngestError> {
    let mut records = Vec::new();
    for (i, line) in stream.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push((i + 1, record));
    }
    Ok(EventStore::build(meta, records, year_range))
}
