//! Quarter-hour posting and reaction profiles, post-to-reaction delay
//! histograms and day-of-week / month profiles.

use std::fmt;

use chrono::{Datelike, Timelike};

use crate::ingest::{EventStore, LocalDateTime, PageId};

pub const BUCKETS: usize = 96;
pub const BUCKET_MINUTES: u32 = 15;

const HOUR: i64 = 3600;
const DAY: i64 = 24 * HOUR;
pub const WEEK: i64 = 7 * DAY;

/// Default delay bin edges in hours: 0-1, 1-2, 2-4, 4-8, 8-16, 16-32, 32-168.
pub const DEFAULT_DELAY_EDGES_HOURS: [i64; 8] = [0, 1, 2, 4, 8, 16, 32, 168];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProfileError {
    #[error("unknown page {0:?}")]
    UnknownPage(PageId),
    #[error("year {year} outside the store's range")]
    YearOutOfRange { year: i32 },
    #[error("horizon must be positive")]
    NonPositiveHorizon,
    #[error("no non-orphan reactions: delay distribution is empty")]
    EmptyDistribution,
    #[error("empty scope")]
    EmptyScope,
}

/// One of the 96 quarter-hour buckets of a local day, numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketId(u8);

impl BucketId {
    pub fn new(index: usize) -> Option<Self> {
        (1..=BUCKETS).contains(&index).then_some(Self(index as u8))
    }

    /// From a zero-based position.
    pub fn from_zero_based(i: usize) -> Self {
        Self::new(i + 1).expect("zero-based bucket position below 96")
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn zero_based(self) -> usize {
        self.index() - 1
    }

    pub fn start_minutes(self) -> u32 {
        (u32::from(self.0) - 1) * BUCKET_MINUTES
    }

    pub fn end_minutes(self) -> u32 {
        u32::from(self.0) * BUCKET_MINUTES
    }

    /// `HHMM` of the bucket start.
    pub fn start_hhmm(self) -> String {
        hhmm(self.start_minutes())
    }

    /// `HHMM` of the bucket end; the last bucket ends at `2400`.
    pub fn end_hhmm(self) -> String {
        hhmm(self.end_minutes())
    }

    pub fn all() -> impl Iterator<Item = BucketId> {
        (1..=BUCKETS).map(|i| Self(i as u8))
    }
}

fn hhmm(minutes: u32) -> String {
    format!("{:02}{:02}", minutes / 60, minutes % 60)
}

impl fmt::Display for BucketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn bucket_of(local_time: LocalDateTime) -> BucketId {
    let minutes = local_time.hour() * 60 + local_time.minute();
    BucketId((minutes / BUCKET_MINUTES + 1) as u8)
}

pub type Counts = [u64; BUCKETS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Posting,
    Reaction,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Posting => "posting",
            EventKind::Reaction => "reaction",
        }
    }
}

/// How a reaction is placed in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attribution {
    /// Bucket and year of the reaction's own timestamp; orphans included.
    #[default]
    Reaction,
    /// Bucket and year of the parent post; orphans are skipped.
    ParentPost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearProfile {
    pub page_id: PageId,
    pub year: i32,
    pub kind: EventKind,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulativeProfile {
    pub page_id: PageId,
    pub kind: EventKind,
    pub counts: Counts,
}

impl CumulativeProfile {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Local times of all events of `kind` on a page under the given attribution.
fn event_times<'a>(
    store: &'a EventStore,
    page: &'a str,
    kind: EventKind,
    attribution: Attribution,
) -> Result<Box<dyn Iterator<Item = LocalDateTime> + 'a>, ProfileError> {
    let meta = store
        .page(page)
        .ok_or_else(|| ProfileError::UnknownPage(page.to_string()))?;
    let tz = meta.tz_offset_minutes;
    let local = move |ts| crate::ingest::normalize_timestamp(ts, tz);
    Ok(match (kind, attribution) {
        (EventKind::Posting, _) => Box::new(store.posts_of(page).map(move |p| local(p.timestamp_utc))),
        (EventKind::Reaction, Attribution::Reaction) => {
            Box::new(store.reactions_of(page).map(move |(r, _)| local(r.timestamp_utc)))
        }
        (EventKind::Reaction, Attribution::ParentPost) => Box::new(
            store
                .reactions_of(page)
                .filter_map(move |(_, parent)| parent.map(|p| local(p.timestamp_utc))),
        ),
    })
}

pub fn year_profile(store: &EventStore, page: &str, year: i32, kind: EventKind) -> Result<YearProfile, ProfileError> {
    year_profile_with(store, page, year, kind, Attribution::default())
}

pub fn year_profile_with(
    store: &EventStore,
    page: &str,
    year: i32,
    kind: EventKind,
    attribution: Attribution,
) -> Result<YearProfile, ProfileError> {
    let times = event_times(store, page, kind, attribution)?;
    if !store.year_range().is_some_and(|r| r.contains(year)) {
        return Err(ProfileError::YearOutOfRange { year });
    }
    let mut counts = [0u64; BUCKETS];
    for t in times.filter(|t| t.year() == year) {
        counts[bucket_of(t).zero_based()] += 1;
    }
    Ok(YearProfile {
        page_id: page.to_string(),
        year,
        kind,
        counts,
    })
}

pub fn cumulative_profile(store: &EventStore, page: &str, kind: EventKind) -> Result<CumulativeProfile, ProfileError> {
    cumulative_profile_with(store, page, kind, Attribution::default())
}

/// Element-wise sum of the page's year profiles over the store's year range.
pub fn cumulative_profile_with(
    store: &EventStore,
    page: &str,
    kind: EventKind,
    attribution: Attribution,
) -> Result<CumulativeProfile, ProfileError> {
    let times = event_times(store, page, kind, attribution)?;
    let range = store.year_range();
    let mut counts = [0u64; BUCKETS];
    for t in times.filter(|t| range.is_some_and(|r| r.contains(t.year()))) {
        counts[bucket_of(t).zero_based()] += 1;
    }
    Ok(CumulativeProfile {
        page_id: page.to_string(),
        kind,
        counts,
    })
}

/// Cumulative profiles of every page, in page-id order.
pub fn all_cumulative_profiles(
    store: &EventStore,
    kind: EventKind,
    attribution: Attribution,
) -> Vec<CumulativeProfile> {
    use rayon::prelude::*;
    let ids: Vec<&PageId> = store.page_ids().collect();
    ids.par_iter()
        .map(|id| cumulative_profile_with(store, id, kind, attribution).expect("page from store"))
        .collect()
}

/// Element-wise sum of count vectors.
pub fn sum_counts<'a, I: IntoIterator<Item = &'a Counts>>(vectors: I) -> Counts {
    let mut out = [0u64; BUCKETS];
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayHistogram {
    /// Bin edges in seconds; bin `i` is `[edges[i], edges[i+1])`, the last bin
    /// also includes the horizon itself.
    pub edges_secs: Vec<i64>,
    pub counts: Vec<u64>,
    pub mass: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Non-orphan reactions later than the horizon.
    pub beyond_horizon: u64,
}

impl DelayHistogram {
    pub fn within_horizon(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of in-horizon reactions with delay below `secs` (bin-edge resolution).
    pub fn cdf_at_edge(&self, secs: i64) -> Option<f64> {
        let i = self.edges_secs.iter().position(|&e| e == secs)?;
        Some(if i == 0 { 0.0 } else { self.cdf[i - 1] })
    }
}

/// Bin edges for `horizon`: the default edges below it plus the horizon itself.
pub fn default_delay_edges(horizon_secs: i64) -> Vec<i64> {
    let mut edges: Vec<i64> = DEFAULT_DELAY_EDGES_HOURS
        .iter()
        .map(|h| h * HOUR)
        .filter(|&e| e < horizon_secs)
        .collect();
    edges.push(horizon_secs);
    edges
}

pub fn delay_distribution(store: &EventStore, horizon_secs: i64) -> Result<DelayHistogram, ProfileError> {
    if horizon_secs <= 0 {
        return Err(ProfileError::NonPositiveHorizon);
    }
    delay_distribution_with_edges(store, &default_delay_edges(horizon_secs))
}

/// Histogram of reaction-minus-post delays over explicit edges; the last edge is the horizon.
pub fn delay_distribution_with_edges(store: &EventStore, edges_secs: &[i64]) -> Result<DelayHistogram, ProfileError> {
    let horizon = *edges_secs.last().ok_or(ProfileError::NonPositiveHorizon)?;
    if horizon <= 0 || edges_secs.len() < 2 {
        return Err(ProfileError::NonPositiveHorizon);
    }
    let bins = edges_secs.len() - 1;
    let mut counts = vec![0u64; bins];
    let mut beyond = 0u64;
    let mut any = false;
    for (reaction, parent) in store.reactions_with_parents() {
        let Some(post) = parent else { continue };
        any = true;
        let delay = reaction.timestamp_utc - post.timestamp_utc;
        if delay > horizon {
            beyond += 1;
            continue;
        }
        let bin = edges_secs[1..].partition_point(|&e| e <= delay).min(bins - 1);
        counts[bin] += 1;
    }
    if !any {
        return Err(ProfileError::EmptyDistribution);
    }
    let total: u64 = counts.iter().sum();
    let mass: Vec<f64> = counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect();
    let mut running = 0u64;
    let cdf = counts
        .iter()
        .map(|&c| {
            running += c;
            if total == 0 {
                0.0
            } else {
                running as f64 / total as f64
            }
        })
        .collect();
    Ok(DelayHistogram {
        edges_secs: edges_secs.to_vec(),
        counts,
        mass,
        cdf,
        beyond_horizon: beyond,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    /// 96 quarter-hour buckets of the day.
    Daily,
    /// Seven days, Monday first.
    Weekly,
    /// Twelve months, January first.
    Monthly,
}

impl Granularity {
    pub fn slots(self) -> usize {
        match self {
            Granularity::Daily => BUCKETS,
            Granularity::Weekly => 7,
            Granularity::Monthly => 12,
        }
    }

    fn slot(self, t: LocalDateTime) -> usize {
        match self {
            Granularity::Daily => bucket_of(t).zero_based(),
            Granularity::Weekly => t.weekday().num_days_from_monday() as usize,
            Granularity::Monthly => t.month0() as usize,
        }
    }

    pub fn slot_name(self, i: usize) -> String {
        const DAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
        const MONTHS: [&str; 12] = [
            "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
        ];
        match self {
            Granularity::Daily => BucketId::from_zero_based(i).start_hhmm(),
            Granularity::Weekly => DAYS[i].to_string(),
            Granularity::Monthly => MONTHS[i].to_string(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Daily => "daily",
            Granularity::Weekly => "weekly",
            Granularity::Monthly => "monthly",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicProfile {
    pub granularity: Granularity,
    pub kind: EventKind,
    pub counts: Vec<u64>,
}

/// Counts over local time-of-day, day-of-week or month, summed over pages in `scope`.
pub fn periodic_profile(
    store: &EventStore,
    scope: &[PageId],
    granularity: Granularity,
    kind: EventKind,
) -> Result<PeriodicProfile, ProfileError> {
    if scope.is_empty() {
        return Err(ProfileError::EmptyScope);
    }
    let range = store.year_range();
    let mut counts = vec![0u64; granularity.slots()];
    for page in scope {
        for t in event_times(store, page, kind, Attribution::Reaction)? {
            if range.is_some_and(|r| r.contains(t.year())) {
                counts[granularity.slot(t)] += 1;
            }
        }
    }
    Ok(PeriodicProfile {
        granularity,
        kind,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ContentType, PageMeta, PostEvent, ReactionEvent, ReactionKind, Record, YearRange};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn at(h: u32, m: u32, s: u32) -> LocalDateTime {
        NaiveDate::from_ymd_opt(2013, 6, 1).unwrap().and_hms_opt(h, m, s).unwrap()
    }

    fn ts(y: i32, mo: u32, d: u32, h: u32, m: u32) -> i64 {
        NaiveDate::from_ymd_opt(y, mo, d)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap()
            .and_utc()
            .timestamp()
    }

    fn post(id: &str, page: &str, t: i64) -> Record {
        Record::Post(PostEvent {
            post_id: id.into(),
            page_id: page.into(),
            timestamp_utc: t,
            content_type: ContentType::Link,
            text: None,
        })
    }

    fn reaction(id: &str, page: &str, parent: Option<&str>, t: i64) -> Record {
        Record::Reaction(ReactionEvent {
            reaction_id: id.into(),
            page_id: page.into(),
            post_id: parent.map(Into::into),
            kind: ReactionKind::Comment,
            timestamp_utc: t,
        })
    }

    fn store(records: Vec<Record>, range: Option<YearRange>) -> EventStore {
        EventStore::from_records(vec![PageMeta::new("A", "x", 0)], records, range)
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(bucket_of(at(0, 0, 0)).index(), 1);
        assert_eq!(bucket_of(at(23, 59, 59)).index(), 96);
        assert_eq!(bucket_of(at(11, 7, 0)).index(), 45);
        assert_eq!(BucketId::new(96).unwrap().end_hhmm(), "2400");
        assert_eq!(BucketId::new(45).unwrap().start_hhmm(), "1100");
        assert!(BucketId::new(0).is_none());
        assert!(BucketId::new(97).is_none());
    }

    #[test]
    fn bucket_surjective_and_constant_per_quarter_hour() {
        let mut seen = [false; BUCKETS];
        for minute in 0..24 * 60 {
            let b = bucket_of(at(minute / 60, minute % 60, 0));
            // enumerate quarter-hours independently
            assert_eq!(b.zero_based() as u32, minute / 15);
            assert_eq!(bucket_of(at(minute / 60, minute % 60, 59)), b);
            seen[b.zero_based()] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn year_profile_counts() {
        let s = store(
            vec![
                post("1", "A", ts(2013, 3, 1, 0, 5)),
                post("2", "A", ts(2013, 3, 2, 0, 10)),
                post("3", "A", ts(2013, 3, 3, 13, 0)),
                reaction("r", "A", None, ts(2013, 4, 1, 20, 30)),
            ],
            None,
        );
        let p = year_profile(&s, "A", 2013, EventKind::Posting).unwrap();
        assert_eq!(p.counts[0], 2);
        assert_eq!(p.counts[52], 1);
        assert_eq!(p.counts.iter().sum::<u64>(), 3);
        let r = year_profile(&s, "A", 2013, EventKind::Reaction).unwrap();
        assert_eq!(r.counts[82], 1);
        assert_eq!(r.counts.iter().sum::<u64>(), 1);
    }

    #[test]
    fn year_profile_errors_and_empty_year() {
        let s = store(vec![post("1", "A", ts(2013, 3, 1, 0, 5))], Some(YearRange::new(2012, 2013).unwrap()));
        assert_eq!(year_profile(&s, "A", 2012, EventKind::Posting).unwrap().counts, [0; BUCKETS]);
        assert_eq!(
            year_profile(&s, "nope", 2013, EventKind::Posting),
            Err(ProfileError::UnknownPage("nope".into()))
        );
        assert_eq!(
            year_profile(&s, "A", 2015, EventKind::Posting),
            Err(ProfileError::YearOutOfRange { year: 2015 })
        );
    }

    #[test]
    fn cumulative_is_sum_of_years() {
        let s = store(
            vec![
                post("1", "A", ts(2012, 1, 1, 1, 0)),
                post("2", "A", ts(2012, 1, 2, 1, 1)),
                post("3", "A", ts(2012, 1, 3, 1, 2)),
                post("4", "A", ts(2013, 1, 1, 1, 0)),
                post("5", "A", ts(2013, 1, 2, 1, 3)),
                post("6", "A", ts(2013, 1, 3, 1, 4)),
                post("7", "A", ts(2013, 1, 4, 1, 5)),
            ],
            None,
        );
        let c = cumulative_profile(&s, "A", EventKind::Posting).unwrap();
        assert_eq!(c.counts[4], 7);
        let y12 = year_profile(&s, "A", 2012, EventKind::Posting).unwrap();
        let y13 = year_profile(&s, "A", 2013, EventKind::Posting).unwrap();
        assert_eq!(c.counts, sum_counts([&y12.counts, &y13.counts]));
    }

    #[test]
    fn parent_attribution_uses_post_bucket() {
        let s = store(
            vec![
                post("1", "A", ts(2013, 1, 1, 10, 0)),
                reaction("a", "A", Some("1"), ts(2013, 1, 1, 12, 0)),
                reaction("b", "A", None, ts(2013, 1, 1, 12, 0)),
            ],
            None,
        );
        let own = cumulative_profile_with(&s, "A", EventKind::Reaction, Attribution::Reaction).unwrap();
        assert_eq!(own.counts[48], 2);
        let parent = cumulative_profile_with(&s, "A", EventKind::Reaction, Attribution::ParentPost).unwrap();
        assert_eq!(parent.counts[40], 1);
        assert_eq!(parent.total(), 1);
    }

    #[test]
    fn zero_delay_histogram() {
        let t = ts(2013, 1, 1, 10, 0);
        let s = store(
            vec![
                post("1", "A", t),
                reaction("a", "A", Some("1"), t),
                reaction("b", "A", Some("1"), t),
            ],
            None,
        );
        let h = delay_distribution(&s, WEEK).unwrap();
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.cdf[0], 1.0);
        assert_eq!(*h.cdf.last().unwrap(), 1.0);
        assert_eq!(h.edges_secs.len(), 8);
    }

    #[test]
    fn delay_binning_and_horizon() {
        let t = ts(2013, 1, 1, 10, 0);
        let s = store(
            vec![
                post("1", "A", t),
                reaction("a", "A", Some("1"), t + 3599),
                reaction("b", "A", Some("1"), t + 3600),
                reaction("c", "A", Some("1"), t + WEEK),
                reaction("d", "A", Some("1"), t + WEEK + 1),
                reaction("e", "A", None, t + 10),
            ],
            None,
        );
        let h = delay_distribution(&s, WEEK).unwrap();
        assert_eq!(h.counts, vec![1, 1, 0, 0, 0, 0, 1]);
        assert_eq!(h.beyond_horizon, 1);
        assert_eq!(h.cdf_at_edge(HOUR), Some(1.0 / 3.0));

        let short = delay_distribution(&s, 90 * 60).unwrap();
        assert_eq!(short.edges_secs, vec![0, HOUR, 90 * 60]);
        assert_eq!(short.counts, vec![1, 1]);
        assert_eq!(short.beyond_horizon, 2);
    }

    #[test]
    fn delay_errors() {
        let s = store(vec![post("1", "A", 0), reaction("e", "A", None, 10)], None);
        assert_eq!(delay_distribution(&s, WEEK), Err(ProfileError::EmptyDistribution));
        assert_eq!(delay_distribution(&s, 0), Err(ProfileError::NonPositiveHorizon));
    }

    #[test]
    fn periodic_profiles() {
        // 2013-06-02 and 2013-06-09 are Sundays
        let s = store(
            vec![
                reaction("a", "A", None, ts(2013, 6, 2, 9, 0)),
                reaction("b", "A", None, ts(2013, 6, 9, 22, 0)),
            ],
            None,
        );
        let scope = vec!["A".to_string()];
        let w = periodic_profile(&s, &scope, Granularity::Weekly, EventKind::Reaction).unwrap();
        assert_eq!(w.counts, vec![0, 0, 0, 0, 0, 0, 2]);

        let s = store(
            vec![
                reaction("a", "A", None, ts(2013, 4, 10, 9, 0)),
                reaction("b", "A", None, ts(2013, 5, 10, 9, 0)),
            ],
            None,
        );
        let m = periodic_profile(&s, &scope, Granularity::Monthly, EventKind::Reaction).unwrap();
        assert_eq!(m.counts, vec![0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(periodic_profile(&s, &[], Granularity::Monthly, EventKind::Reaction), Err(ProfileError::EmptyScope));
    }

    proptest! {
        #[test]
        fn profile_sums_match_naive_recount(events in proptest::collection::vec((0u8..2, 0i64..3 * 365 * 86400), 0..60)) {
            let base = ts(2011, 1, 1, 0, 0);
            let mut records = Vec::new();
            for (i, (k, off)) in events.iter().enumerate() {
                if *k == 0 {
                    records.push(post(&i.to_string(), "A", base + off));
                } else {
                    records.push(reaction(&i.to_string(), "A", None, base + off));
                }
            }
            let s = store(records, Some(YearRange::new(2011, 2013).unwrap()));
            for (kind, code) in [(EventKind::Posting, 0u8), (EventKind::Reaction, 1u8)] {
                let mut years = Vec::new();
                for year in 2011..=2013 {
                    let naive = events.iter().filter(|(k, off)| {
                        *k == code && chrono::DateTime::from_timestamp(base + off, 0).unwrap().year() == year
                    }).count() as u64;
                    let yp = year_profile(&s, "A", year, kind).unwrap();
                    prop_assert_eq!(yp.counts.iter().sum::<u64>(), naive);
                    years.push(yp.counts);
                }
                let cum = cumulative_profile(&s, "A", kind).unwrap();
                prop_assert_eq!(cum.counts, sum_counts(years.iter()));
            }
        }
    }
}
