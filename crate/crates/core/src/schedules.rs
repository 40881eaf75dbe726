//! The six posting schedules and bucket ranking.
//!
//! Every schedule score is a ratio of exact integers. Rankings are computed on
//! the integer numerators so that they are unaffected by floating-point
//! rounding: scaling all counts by a common factor never reorders or un-ties
//! buckets.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::ingest::{EventStore, PageId};
use crate::profiles::{all_cumulative_profiles, cumulative_profile, Attribution, BucketId, Counts, EventKind, BUCKETS};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScheduleError {
    #[error("undefined schedule: no {0} events in scope")]
    NoEvents(&'static str),
    #[error("empty category")]
    EmptyCategory,
    #[error("unknown page {0:?}")]
    UnknownPage(PageId),
    #[error("top_n must be in 1..=96, got {0}")]
    TopNOutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScheduleKind {
    Afp,
    Afr,
    Cfp,
    Cfr,
    Wcfp,
    Wcfr,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 6] = [
        ScheduleKind::Afp,
        ScheduleKind::Afr,
        ScheduleKind::Cfp,
        ScheduleKind::Cfr,
        ScheduleKind::Wcfp,
        ScheduleKind::Wcfr,
    ];

    pub fn event_kind(self) -> EventKind {
        match self {
            ScheduleKind::Afp | ScheduleKind::Cfp | ScheduleKind::Wcfp => EventKind::Posting,
            ScheduleKind::Afr | ScheduleKind::Cfr | ScheduleKind::Wcfr => EventKind::Reaction,
        }
    }

    pub fn is_aggregated(self) -> bool {
        matches!(self, ScheduleKind::Afp | ScheduleKind::Afr)
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, ScheduleKind::Wcfp | ScheduleKind::Wcfr)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Afp => "afp",
            ScheduleKind::Afr => "afr",
            ScheduleKind::Cfp => "cfp",
            ScheduleKind::Cfr => "cfr",
            ScheduleKind::Wcfp => "wcfp",
            ScheduleKind::Wcfr => "wcfr",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown schedule kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    AllPages,
    Category(usize),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::AllPages => f.write_str("all"),
            Scope::Category(id) => write!(f, "category{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub scope: Scope,
    pub scores: [f64; BUCKETS],
    /// All 96 buckets, best first.
    pub ranking: Vec<BucketId>,
}

impl Schedule {
    /// Ranks buckets by arbitrary real scores (descending, ties by ascending bucket).
    pub fn from_scores(kind: ScheduleKind, scope: Scope, scores: [f64; BUCKETS]) -> Self {
        let mut order: Vec<usize> = (0..BUCKETS).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self {
            kind,
            scope,
            scores,
            ranking: order.into_iter().map(BucketId::from_zero_based).collect(),
        }
    }

    fn from_ratio(kind: ScheduleKind, scope: Scope, numerators: &[u128; BUCKETS], denominator: u128) -> Self {
        let mut scores = [0.0; BUCKETS];
        for (s, &n) in scores.iter_mut().zip(numerators) {
            *s = n as f64 / denominator as f64;
        }
        let mut order: Vec<usize> = (0..BUCKETS).collect();
        order.sort_by(|&a, &b| match numerators[b].cmp(&numerators[a]) {
            Ordering::Equal => a.cmp(&b),
            o => o,
        });
        Self {
            kind,
            scope,
            scores,
            ranking: order.into_iter().map(BucketId::from_zero_based).collect(),
        }
    }

    pub fn score(&self, bucket: BucketId) -> f64 {
        self.scores[bucket.zero_based()]
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Scores rescaled to sum to 1 (identity on an all-zero vector).
    pub fn normalized_scores(&self) -> [f64; BUCKETS] {
        let total = self.total();
        let mut out = self.scores;
        if total > 0.0 {
            out.iter_mut().for_each(|s| *s /= total);
        }
        out
    }
}

/// A named set of pages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: usize,
    pub label: String,
    pub pages: Vec<PageId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageWeight {
    pub page_id: PageId,
    pub kind: EventKind,
    pub gamma: u64,
    pub rho: u64,
    pub weight: f64,
}

fn profiles_of(store: &EventStore, pages: &[PageId], kind: EventKind) -> Result<Vec<Counts>, ScheduleError> {
    if pages.is_empty() {
        return Err(ScheduleError::EmptyCategory);
    }
    pages
        .iter()
        .map(|p| {
            cumulative_profile(store, p, kind)
                .map(|c| c.counts)
                .map_err(|_| ScheduleError::UnknownPage(p.clone()))
        })
        .collect()
}

/// Fraction of all events of the scope falling in each bucket.
pub fn fraction_schedule(kind: ScheduleKind, scope: Scope, profiles: &[Counts]) -> Result<Schedule, ScheduleError> {
    let mut numerators = [0u128; BUCKETS];
    for p in profiles {
        for (n, &c) in numerators.iter_mut().zip(p) {
            *n += u128::from(c);
        }
    }
    let total: u128 = numerators.iter().sum();
    if total == 0 {
        return Err(ScheduleError::NoEvents(kind.event_kind().as_str()));
    }
    Ok(Schedule::from_ratio(kind, scope, &numerators, total))
}

/// Page-importance weighted schedule: `Σ_p (γ_p/ρ)·C_k(p) / ρ`, not renormalized.
pub fn weighted_schedule(kind: ScheduleKind, scope: Scope, profiles: &[Counts]) -> Result<Schedule, ScheduleError> {
    let gammas: Vec<u128> = profiles.iter().map(|p| p.iter().map(|&c| u128::from(c)).sum()).collect();
    let rho: u128 = gammas.iter().sum();
    if rho == 0 {
        return Err(ScheduleError::NoEvents(kind.event_kind().as_str()));
    }
    let mut numerators = [0u128; BUCKETS];
    for (p, &gamma) in profiles.iter().zip(&gammas) {
        for (n, &c) in numerators.iter_mut().zip(p) {
            *n += gamma * u128::from(c);
        }
    }
    Ok(Schedule::from_ratio(kind, scope, &numerators, rho * rho))
}

pub fn aggregated_schedule(store: &EventStore, kind: EventKind) -> Result<Schedule, ScheduleError> {
    let profiles: Vec<Counts> = all_cumulative_profiles(store, kind, Attribution::Reaction)
        .into_iter()
        .map(|c| c.counts)
        .collect();
    let sk = match kind {
        EventKind::Posting => ScheduleKind::Afp,
        EventKind::Reaction => ScheduleKind::Afr,
    };
    fraction_schedule(sk, Scope::AllPages, &profiles)
}

pub fn categorized_schedule(store: &EventStore, category: &Category, kind: EventKind) -> Result<Schedule, ScheduleError> {
    let profiles = profiles_of(store, &category.pages, kind)?;
    let sk = match kind {
        EventKind::Posting => ScheduleKind::Cfp,
        EventKind::Reaction => ScheduleKind::Cfr,
    };
    fraction_schedule(sk, Scope::Category(category.id), &profiles)
}

pub fn weighted_categorized_schedule(
    store: &EventStore,
    category: &Category,
    kind: EventKind,
) -> Result<Schedule, ScheduleError> {
    let profiles = profiles_of(store, &category.pages, kind)?;
    let sk = match kind {
        EventKind::Posting => ScheduleKind::Wcfp,
        EventKind::Reaction => ScheduleKind::Wcfr,
    };
    weighted_schedule(sk, Scope::Category(category.id), &profiles)
}

pub fn page_weights(store: &EventStore, category: &Category, kind: EventKind) -> Result<Vec<PageWeight>, ScheduleError> {
    let profiles = profiles_of(store, &category.pages, kind)?;
    let gammas: Vec<u64> = profiles.iter().map(|p| p.iter().sum()).collect();
    let rho: u64 = gammas.iter().sum();
    if rho == 0 {
        return Err(ScheduleError::NoEvents(kind.as_str()));
    }
    Ok(category
        .pages
        .iter()
        .zip(gammas)
        .map(|(page, gamma)| PageWeight {
            page_id: page.clone(),
            kind,
            gamma,
            rho,
            weight: gamma as f64 / rho as f64,
        })
        .collect())
}

/// Builds one schedule of `kind`; aggregated kinds ignore `category`.
pub fn schedule_for(store: &EventStore, kind: ScheduleKind, category: Option<&Category>) -> Result<Schedule, ScheduleError> {
    let ek = kind.event_kind();
    match (kind.is_aggregated(), category) {
        (true, _) => aggregated_schedule(store, ek),
        (false, None) => Err(ScheduleError::EmptyCategory),
        (false, Some(cat)) if kind.is_weighted() => weighted_categorized_schedule(store, cat, ek),
        (false, Some(cat)) => categorized_schedule(store, cat, ek),
    }
}

pub fn rank_buckets(schedule: &Schedule, top_n: usize) -> Result<Vec<(BucketId, f64)>, ScheduleError> {
    if !(1..=BUCKETS).contains(&top_n) {
        return Err(ScheduleError::TopNOutOfRange(top_n));
    }
    Ok(schedule
        .ranking
        .iter()
        .take(top_n)
        .map(|&b| (b, schedule.score(b)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ContentType, PageMeta, PostEvent, Record};
    use proptest::prelude::*;

    fn one_hot(pairs: &[(usize, u64)]) -> Counts {
        let mut c = [0u64; BUCKETS];
        for &(b, n) in pairs {
            c[b - 1] = n;
        }
        c
    }

    /// Store whose page `i` has `posts[i][k]` posts in bucket k+1 on 2013-01-01.
    fn store_from_counts(posts: &[Counts]) -> (EventStore, Category) {
        let base = 1_356_998_400; // 2013-01-01T00:00:00Z
        let mut pages = Vec::new();
        let mut records = Vec::new();
        for (i, counts) in posts.iter().enumerate() {
            let page = format!("P{i}");
            pages.push(PageMeta::new(page.clone(), "x", 0));
            let mut n = 0;
            for (k, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    let day = n / 50;
                    records.push(Record::Post(PostEvent {
                        post_id: format!("{n}"),
                        page_id: page.clone(),
                        timestamp_utc: base + day * 86400 + (k as i64) * 900 + (n % 50),
                        content_type: ContentType::Link,
                        text: None,
                    }));
                    n += 1;
                }
            }
        }
        let cat = Category {
            id: 1,
            label: "x".into(),
            pages: pages.iter().map(|p| p.page_id.clone()).collect(),
        };
        (EventStore::from_records(pages, records, None), cat)
    }

    #[test]
    fn single_event() {
        let (s, _) = store_from_counts(&[one_hot(&[(7, 1)])]);
        let sched = aggregated_schedule(&s, EventKind::Posting).unwrap();
        assert_eq!(sched.score(BucketId::new(7).unwrap()), 1.0);
        assert_eq!(sched.total(), 1.0);
        assert_eq!(sched.ranking[0].index(), 7);
    }

    #[test]
    fn uniform_counts() {
        let sched = fraction_schedule(ScheduleKind::Afp, Scope::AllPages, &[[3; BUCKETS]]).unwrap();
        assert!(sched.scores.iter().all(|&s| s == 1.0 / 96.0));
        let top = rank_buckets(&sched, 3).unwrap();
        assert_eq!(top.iter().map(|(b, _)| b.index()).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn two_pages_hand_count() {
        let (s, cat) = store_from_counts(&[one_hot(&[(1, 10)]), one_hot(&[(2, 30)])]);
        let agg = aggregated_schedule(&s, EventKind::Posting).unwrap();
        assert_eq!(&agg.scores[..3], &[0.25, 0.75, 0.0]);
        let cfp = categorized_schedule(&s, &cat, EventKind::Posting).unwrap();
        assert_eq!(cfp.scores, agg.scores);
        assert_eq!(cfp.ranking, agg.ranking);
    }

    #[test]
    fn reaction_hand_count() {
        let sched = fraction_schedule(
            ScheduleKind::Cfr,
            Scope::Category(1),
            &[one_hot(&[(1, 10)]), one_hot(&[(2, 30)])],
        )
        .unwrap();
        assert_eq!(&sched.scores[..3], &[0.25, 0.75, 0.0]);
    }

    #[test]
    fn no_events_is_undefined() {
        let (s, cat) = store_from_counts(&[[0; BUCKETS]]);
        assert_eq!(aggregated_schedule(&s, EventKind::Reaction), Err(ScheduleError::NoEvents("reaction")));
        assert!(categorized_schedule(&s, &cat, EventKind::Posting).is_err());
        let empty = Category { id: 2, label: String::new(), pages: vec![] };
        assert_eq!(categorized_schedule(&s, &empty, EventKind::Posting), Err(ScheduleError::EmptyCategory));
        assert!(page_weights(&s, &cat, EventKind::Posting).is_err());
    }

    #[test]
    fn single_page_category() {
        let counts = one_hot(&[(3, 2), (9, 6)]);
        let (s, cat) = store_from_counts(&[counts]);
        let cfp = categorized_schedule(&s, &cat, EventKind::Posting).unwrap();
        assert_eq!(cfp.score(BucketId::new(9).unwrap()), 0.75);
        let w = page_weights(&s, &cat, EventKind::Posting).unwrap();
        assert_eq!(w[0].weight, 1.0);
        let wcfp = weighted_categorized_schedule(&s, &cat, EventKind::Posting).unwrap();
        assert_eq!(wcfp.scores, cfp.scores);
        assert_eq!(wcfp.ranking, cfp.ranking);
    }

    #[test]
    fn weights() {
        let sched_profiles = [one_hot(&[(1, 40)]), one_hot(&[(2, 60)])];
        let (s, cat) = store_from_counts(&sched_profiles);
        let w = page_weights(&s, &cat, EventKind::Posting).unwrap();
        assert_eq!(w[0].weight, 0.4);
        assert_eq!((w[0].gamma, w[0].rho), (40, 100));
        let equal = [one_hot(&[(1, 5)]), one_hot(&[(2, 5)]), one_hot(&[(3, 5)]), one_hot(&[(4, 5)])];
        let (s, cat) = store_from_counts(&equal);
        let w = page_weights(&s, &cat, EventKind::Posting).unwrap();
        assert!(w.iter().all(|p| p.weight == 0.25));
    }

    #[test]
    fn weighted_sum_for_sixty_forty() {
        let profiles = [one_hot(&[(1, 30), (5, 30)]), one_hot(&[(2, 40)])];
        let sched = weighted_schedule(ScheduleKind::Wcfr, Scope::Category(1), &profiles).unwrap();
        assert!((sched.total() - 0.52).abs() < 1e-12);
        assert!((sched.normalized_scores().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_examples() {
        let mut scores = [0.0; BUCKETS];
        scores[80] = 0.9;
        let s = Schedule::from_scores(ScheduleKind::Afr, Scope::AllPages, scores);
        assert_eq!(rank_buckets(&s, 1).unwrap()[0].0.index(), 81);

        let mut scores = [0.0; BUCKETS];
        scores[..3].copy_from_slice(&[0.2, 0.5, 0.3]);
        let s = Schedule::from_scores(ScheduleKind::Afr, Scope::AllPages, scores);
        let top: Vec<_> = rank_buckets(&s, 2).unwrap().into_iter().map(|(b, v)| (b.index(), v)).collect();
        assert_eq!(top, [(2, 0.5), (3, 0.3)]);
        assert_eq!(rank_buckets(&s, 0), Err(ScheduleError::TopNOutOfRange(0)));
        assert_eq!(rank_buckets(&s, 97), Err(ScheduleError::TopNOutOfRange(97)));
    }

    fn profiles_strategy() -> impl Strategy<Value = Vec<Counts>> {
        proptest::collection::vec(proptest::array::uniform32(0u64..20), 1..6).prop_map(|v| {
            v.into_iter()
                .map(|half| {
                    let mut c = [0u64; BUCKETS];
                    for (i, x) in half.iter().enumerate() {
                        c[i * 3] = *x;
                        c[i * 3 + 1] = x / 2;
                    }
                    c
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn normalization_and_weighted_sum(profiles in profiles_strategy()) {
            let total: u64 = profiles.iter().flat_map(|p| p.iter()).sum();
            prop_assume!(total > 0);
            let cfr = fraction_schedule(ScheduleKind::Cfr, Scope::Category(1), &profiles).unwrap();
            prop_assert!((cfr.total() - 1.0).abs() < 1e-12);
            let wcfr = weighted_schedule(ScheduleKind::Wcfr, Scope::Category(1), &profiles).unwrap();
            let expected: f64 = profiles.iter()
                .map(|p| { let g: u64 = p.iter().sum(); (g as f64 / total as f64).powi(2) })
                .sum();
            prop_assert!((wcfr.total() - expected).abs() < 1e-12);
            prop_assert!(wcfr.scores.iter().all(|&s| s >= 0.0));
        }

        #[test]
        fn scaling_invariance(profiles in profiles_strategy(), factor in 2u64..7) {
            let total: u64 = profiles.iter().flat_map(|p| p.iter()).sum();
            prop_assume!(total > 0);
            let scaled: Vec<Counts> = profiles.iter().map(|p| p.map(|c| c * factor)).collect();
            for weighted in [false, true] {
                let build = if weighted { weighted_schedule } else { fraction_schedule };
                let a = build(ScheduleKind::Cfp, Scope::Category(1), &profiles).unwrap();
                let b = build(ScheduleKind::Cfp, Scope::Category(1), &scaled).unwrap();
                prop_assert_eq!(&a.ranking, &b.ranking);
                for (x, y) in a.scores.iter().zip(&b.scores) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn equal_totals_share_ranking(seed in proptest::collection::vec(0usize..BUCKETS, 1..5), per_page in 1u64..30) {
            // every page spreads exactly `per_page * 2` events over two buckets
            let profiles: Vec<Counts> = seed.iter().map(|&b| {
                let mut c = [0u64; BUCKETS];
                c[b] += per_page;
                c[(b * 7 + 3) % BUCKETS] += per_page;
                c
            }).collect();
            let cfr = fraction_schedule(ScheduleKind::Cfr, Scope::Category(1), &profiles).unwrap();
            let wcfr = weighted_schedule(ScheduleKind::Wcfr, Scope::Category(1), &profiles).unwrap();
            prop_assert_eq!(&cfr.ranking, &wcfr.ranking);
            let pages = profiles.len() as f64;
            for (c, w) in cfr.scores.iter().zip(&wcfr.scores) {
                prop_assert!((c / pages - w).abs() < 1e-12);
            }
        }
    }
}
