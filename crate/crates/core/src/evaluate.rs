//! Reaction gain, profile correlation and content-type engagement.

use crate::ingest::{ContentType, EventStore, PageId};
use crate::profiles::{cumulative_profile_with, sum_counts, Attribution, BucketId, Counts, EventKind, BUCKETS};
use crate::schedules::{Category, Schedule};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvaluateError {
    #[error("scope has no posts")]
    NoPosts,
    #[error("scope has no reactions")]
    NoReactions,
    #[error("empty scope")]
    EmptyScope,
    #[error("unknown page {0:?}")]
    UnknownPage(PageId),
    #[error("undefined correlation: constant vector")]
    ConstantVector,
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no category reports")]
    NoReports,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionGainReport {
    pub scope: String,
    pub attribution: Attribution,
    pub posts: Counts,
    pub reactions: Counts,
    /// Reactions per post, `None` where the bucket has no posts.
    pub delta: [Option<f64>; BUCKETS],
    /// Overall reactions per post.
    pub omega: f64,
    pub gain: [Option<f64>; BUCKETS],
}

impl ReactionGainReport {
    pub fn gain_at(&self, bucket: BucketId) -> Option<f64> {
        self.gain[bucket.zero_based()]
    }

    /// Gain of the schedule's buckets in rank order.
    pub fn gain_by_rank(&self, schedule: &Schedule) -> Vec<Option<f64>> {
        schedule.ranking.iter().map(|&b| self.gain_at(b)).collect()
    }
}

/// Reaction gain from per-bucket reaction and post counts.
pub fn reaction_gain_from_counts(
    scope: impl Into<String>,
    attribution: Attribution,
    reactions: Counts,
    posts: Counts,
) -> Result<ReactionGainReport, EvaluateError> {
    let total_posts: u64 = posts.iter().sum();
    let total_reactions: u64 = reactions.iter().sum();
    if total_posts == 0 {
        return Err(EvaluateError::NoPosts);
    }
    if total_reactions == 0 {
        return Err(EvaluateError::NoReactions);
    }
    let omega = total_reactions as f64 / total_posts as f64;
    let mut delta = [None; BUCKETS];
    let mut gain = [None; BUCKETS];
    for k in 0..BUCKETS {
        if posts[k] > 0 {
            let d = reactions[k] as f64 / posts[k] as f64;
            delta[k] = Some(d);
            gain[k] = Some(d / omega);
        }
    }
    Ok(ReactionGainReport {
        scope: scope.into(),
        attribution,
        posts,
        reactions,
        delta,
        omega,
        gain,
    })
}

/// Reaction gain of a set of pages.
pub fn reaction_gain(
    store: &EventStore,
    scope_name: &str,
    pages: &[PageId],
    attribution: Attribution,
) -> Result<ReactionGainReport, EvaluateError> {
    if pages.is_empty() {
        return Err(EvaluateError::EmptyScope);
    }
    let mut reactions = Vec::with_capacity(pages.len());
    let mut posts = Vec::with_capacity(pages.len());
    for p in pages {
        let unknown = |_| EvaluateError::UnknownPage(p.clone());
        reactions.push(cumulative_profile_with(store, p, EventKind::Reaction, attribution).map_err(unknown)?.counts);
        posts.push(cumulative_profile_with(store, p, EventKind::Posting, attribution).map_err(unknown)?.counts);
    }
    reaction_gain_from_counts(scope_name, attribution, sum_counts(&reactions), sum_counts(&posts))
}

/// Mean of per-category values at each position, skipping undefined entries.
pub fn average_defined(values: &[Vec<Option<f64>>]) -> Vec<Option<f64>> {
    let len = values.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let defined: Vec<f64> = values.iter().filter_map(|v| v.get(k).copied().flatten()).collect();
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
        })
        .collect()
}

/// Per-bucket mean reaction gain across category reports.
pub fn avg_reaction_gain(reports: &[ReactionGainReport]) -> Result<Vec<Option<f64>>, EvaluateError> {
    if reports.is_empty() {
        return Err(EvaluateError::NoReports);
    }
    let per: Vec<Vec<Option<f64>>> = reports.iter().map(|r| r.gain.to_vec()).collect();
    Ok(average_defined(&per))
}

/// Mean reaction gain at each rank position, each category ranked by its own schedule.
pub fn avg_gain_by_rank(pairs: &[(&ReactionGainReport, &Schedule)]) -> Result<Vec<Option<f64>>, EvaluateError> {
    if pairs.is_empty() {
        return Err(EvaluateError::NoReports);
    }
    let per: Vec<Vec<Option<f64>>> = pairs.iter().map(|(r, s)| r.gain_by_rank(s)).collect();
    Ok(average_defined(&per))
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64, EvaluateError> {
    if x.len() != y.len() {
        return Err(EvaluateError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvaluateError::ConstantVector);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn counts_correlation(x: &Counts, y: &Counts) -> Result<f64, EvaluateError> {
    let fx: Vec<f64> = x.iter().map(|&c| c as f64).collect();
    let fy: Vec<f64> = y.iter().map(|&c| c as f64).collect();
    correlation(&fx, &fy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    /// Correlation of category cumulative reaction vectors; `None` if undefined.
    pub across: Vec<Vec<Option<f64>>>,
    /// Mean correlation over page pairs inside each category.
    pub within: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn mean_within(&self) -> Option<f64> {
        mean(self.within.iter().flatten().copied())
    }

    pub fn mean_across(&self) -> Option<f64> {
        let n = self.labels.len();
        mean((0..n).flat_map(|i| ((i + 1)..n).filter_map(move |j| self.across[i][j])))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Within- and across-category correlation of cumulative reaction profiles.
pub fn category_correlations(store: &EventStore, categories: &[Category]) -> Result<CorrelationMatrix, EvaluateError> {
    let mut cat_vectors = Vec::new();
    let mut within = Vec::new();
    for cat in categories {
        let profiles: Vec<Counts> = cat
            .pages
            .iter()
            .map(|p| {
                cumulative_profile_with(store, p, EventKind::Reaction, Attribution::Reaction)
                    .map(|c| c.counts)
                    .map_err(|_| EvaluateError::UnknownPage(p.clone()))
            })
            .collect::<Result<_, _>>()?;
        let pairs = (0..profiles.len())
            .flat_map(|i| ((i + 1)..profiles.len()).map(move |j| (i, j)))
            .filter_map(|(i, j)| counts_correlation(&profiles[i], &profiles[j]).ok());
        within.push(mean(pairs));
        cat_vectors.push(sum_counts(&profiles));
    }
    let n = categories.len();
    let mut across = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let c = if i == j {
                counts_correlation(&cat_vectors[i], &cat_vectors[i]).ok().map(|_| 1.0)
            } else {
                counts_correlation(&cat_vectors[i], &cat_vectors[j]).ok()
            };
            across[i][j] = c;
            across[j][i] = c;
        }
    }
    Ok(CorrelationMatrix {
        labels: categories.iter().map(|c| c.label.clone()).collect(),
        across,
        within,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentTypeRow {
    pub content_type: ContentType,
    pub posts: u64,
    pub reactions: u64,
    pub post_share_pct: f64,
    pub reaction_share_pct: f64,
    /// Reactions per post of this type; `None` without posts.
    pub reactions_per_post: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentTypeReport {
    pub rows: Vec<ContentTypeRow>,
}

/// Post and reaction shares per content type; reactions count toward their parent post's type.
pub fn content_type_report(store: &EventStore, pages: &[PageId]) -> Result<ContentTypeReport, EvaluateError> {
    let mut posts = [0u64; 4];
    let mut reactions = [0u64; 4];
    for page in pages {
        if store.page(page).is_none() {
            return Err(EvaluateError::UnknownPage(page.clone()));
        }
        for p in store.posts_of(page) {
            posts[p.content_type.index()] += 1;
        }
        for (_, parent) in store.reactions_of(page) {
            if let Some(p) = parent {
                reactions[p.content_type.index()] += 1;
            }
        }
    }
    let total_posts: u64 = posts.iter().sum();
    if total_posts == 0 {
        return Err(EvaluateError::NoPosts);
    }
    let total_reactions: u64 = reactions.iter().sum();
    let pct = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    let rows = ContentType::ALL
        .iter()
        .map(|&t| {
            let (np, nr) = (posts[t.index()], reactions[t.index()]);
            ContentTypeRow {
                content_type: t,
                posts: np,
                reactions: nr,
                post_share_pct: pct(np, total_posts),
                reaction_share_pct: pct(nr, total_reactions),
                reactions_per_post: (np > 0).then(|| nr as f64 / np as f64),
            }
        })
        .collect();
    Ok(ContentTypeReport { rows })
}
