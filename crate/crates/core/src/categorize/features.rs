//! The 35-feature page description.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Timelike, Weekday};

use crate::ingest::{ContentType, EventStore, PageId, ReactionKind};

use super::CategorizeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureGroup {
    Page,
    Content,
    Reaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureDef {
    pub name: &'static str,
    pub group: FeatureGroup,
    /// Taken from page metadata and possibly missing.
    pub metadata_optional: bool,
    pub rule: &'static str,
}

const fn def(name: &'static str, group: FeatureGroup, metadata_optional: bool, rule: &'static str) -> FeatureDef {
    FeatureDef {
        name,
        group,
        metadata_optional,
        rule,
    }
}

use FeatureGroup::{Content, Page, Reaction};

pub const FEATURE_COUNT: usize = 35;

/// The shipped catalog: 4 page-centric, 14 content-centric, 17 reaction-centric features.
pub const CATALOG: [FeatureDef; FEATURE_COUNT] = [
    def("fan_count", Page, true, "page metadata fan_count"),
    def("fan_growth_rate", Page, true, "page metadata fan_growth_rate"),
    def("talking_about_count", Page, true, "page metadata talking_about_count"),
    def("posts_per_day", Page, false, "posts / local days from first to last post inclusive"),
    def("page_type", Content, false, "index of the page label in the sorted label vocabulary"),
    def("avg_likes", Content, false, "likes on the page / posts"),
    def("avg_comments", Content, false, "comments on the page / posts"),
    def("avg_shares", Content, false, "shares on the page / posts"),
    def("avg_post_length", Content, false, "mean characters of post text"),
    def("photo_avg_likes", Content, false, "likes on photo posts / photo posts"),
    def("photo_avg_comments", Content, false, "comments on photo posts / photo posts"),
    def("photo_avg_shares", Content, false, "shares on photo posts / photo posts"),
    def("link_avg_likes", Content, false, "likes on link posts / link posts"),
    def("link_avg_comments", Content, false, "comments on link posts / link posts"),
    def("link_avg_shares", Content, false, "shares on link posts / link posts"),
    def("video_avg_likes", Content, false, "likes on video posts / video posts"),
    def("video_avg_comments", Content, false, "comments on video posts / video posts"),
    def("video_avg_shares", Content, false, "shares on video posts / video posts"),
    def("reactions_0_1h", Reaction, false, "reactions 0-1 h after posting / posts"),
    def("reactions_1_2h", Reaction, false, "reactions 1-2 h after posting / posts"),
    def("reactions_2_4h", Reaction, false, "reactions 2-4 h after posting / posts"),
    def("reactions_4_8h", Reaction, false, "reactions 4-8 h after posting / posts"),
    def("reactions_8_16h", Reaction, false, "reactions 8-16 h after posting / posts"),
    def("reactions_16_32h", Reaction, false, "reactions 16-32 h after posting / posts"),
    def("reactions_00_04", Reaction, false, "reactions at local 00:00-04:00 / posts"),
    def("reactions_04_08", Reaction, false, "reactions at local 04:00-08:00 / posts"),
    def("reactions_08_12", Reaction, false, "reactions at local 08:00-12:00 / posts"),
    def("reactions_12_16", Reaction, false, "reactions at local 12:00-16:00 / posts"),
    def("reactions_16_20", Reaction, false, "reactions at local 16:00-20:00 / posts"),
    def("reactions_20_24", Reaction, false, "reactions at local 20:00-24:00 / posts"),
    def("weekend_weekday_ratio", Reaction, false, "((weekend + 1) / 2) / ((weekday + 1) / 5) reactions per day"),
    def("q1_monthly_reactions", Reaction, false, "Jan-Mar reactions / (3 * years)"),
    def("q2_monthly_reactions", Reaction, false, "Apr-Jun reactions / (3 * years)"),
    def("q3_monthly_reactions", Reaction, false, "Jul-Sep reactions / (3 * years)"),
    def("q4_monthly_reactions", Reaction, false, "Oct-Dec reactions / (3 * years)"),
];

/// Used in place of wrapper selection when it is skipped.
pub const DEFAULT_PRIORITY: [&str; 3] = ["reactions_0_1h", "posts_per_day", "page_type"];

const DELAY_WINDOWS_HOURS: [(i64, i64); 6] = [(0, 1), (1, 2), (2, 4), (4, 8), (8, 16), (16, 32)];

pub fn feature_index(name: &str) -> Option<usize> {
    CATALOG.iter().position(|f| f.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub page_id: PageId,
    pub values: [Option<f64>; FEATURE_COUNT],
}

/// Extracts feature vectors; `page_type` codes come from the given labels.
pub struct FeatureExtractor<'a> {
    store: &'a EventStore,
    labels: BTreeMap<PageId, String>,
    vocabulary: Vec<String>,
}

impl<'a> FeatureExtractor<'a> {
    /// Uses the metadata labels.
    pub fn new(store: &'a EventStore) -> Self {
        let labels = store.pages().map(|p| (p.page_id.clone(), p.label.clone())).collect();
        Self::with_labels(store, labels)
    }

    pub fn with_labels(store: &'a EventStore, labels: BTreeMap<PageId, String>) -> Self {
        let vocabulary: BTreeSet<String> = labels.values().cloned().collect();
        Self {
            store,
            labels,
            vocabulary: vocabulary.into_iter().collect(),
        }
    }

    pub fn extract(&self, page: &str) -> Result<FeatureVector, CategorizeError> {
        let store = self.store;
        let meta = store
            .page(page)
            .ok_or_else(|| CategorizeError::UnknownPage(page.to_string()))?;
        let tz = meta.tz_offset_minutes;
        let posts: Vec<_> = store.posts_of(page).collect();
        if posts.is_empty() {
            return Err(CategorizeError::NoPosts(page.to_string()));
        }
        let n_posts = posts.len() as f64;
        let local = |ts| crate::ingest::normalize_timestamp(ts, tz);

        let mut v = [None; FEATURE_COUNT];
        let mut set = |name: &str, value: f64| v[feature_index(name).expect("catalog name")] = Some(value);

        let days: Vec<_> = posts.iter().map(|p| local(p.timestamp_utc).date()).collect();
        let first = days.iter().min().expect("non-empty");
        let last = days.iter().max().expect("non-empty");
        let span_days = (*last - *first).num_days() + 1;
        set("posts_per_day", n_posts / span_days as f64);

        let label = self.labels.get(page).unwrap_or(&meta.label);
        let code = self.vocabulary.iter().position(|l| l == label).unwrap_or(self.vocabulary.len());
        set("page_type", code as f64);

        let mut kind_total = [0u64; 3];
        let mut by_type_kind = [[0u64; 3]; 4];
        let mut posts_by_type = [0u64; 4];
        for p in &posts {
            posts_by_type[p.content_type.index()] += 1;
        }
        let mut delay_windows = [0u64; 6];
        let mut day_windows = [0u64; 6];
        let (mut weekend, mut weekday) = (0u64, 0u64);
        let mut quarters = [0u64; 4];
        let range = store.year_range();
        for (r, parent) in store.reactions_of(page) {
            let k = r.kind as usize;
            kind_total[k] += 1;
            let t = local(r.timestamp_utc);
            day_windows[(t.hour() / 4) as usize] += 1;
            match t.weekday() {
                Weekday::Sat | Weekday::Sun => weekend += 1,
                _ => weekday += 1,
            }
            quarters[(t.month0() / 3) as usize] += 1;
            if let Some(post) = parent {
                by_type_kind[post.content_type.index()][k] += 1;
                let delay = r.timestamp_utc - post.timestamp_utc;
                if let Some(w) = DELAY_WINDOWS_HOURS
                    .iter()
                    .position(|&(lo, hi)| delay >= lo * 3600 && delay < hi * 3600)
                {
                    delay_windows[w] += 1;
                }
            }
        }

        set("avg_likes", kind_total[ReactionKind::Like as usize] as f64 / n_posts);
        set("avg_comments", kind_total[ReactionKind::Comment as usize] as f64 / n_posts);
        set("avg_shares", kind_total[ReactionKind::Share as usize] as f64 / n_posts);
        let chars: usize = posts
            .iter()
            .map(|p| p.text.as_deref().map_or(0, |t| t.chars().count()))
            .sum();
        set("avg_post_length", chars as f64 / n_posts);

        for ct in [ContentType::Photo, ContentType::Link, ContentType::Video] {
            let np = posts_by_type[ct.index()];
            for rk in ReactionKind::ALL {
                let plural = match rk {
                    ReactionKind::Like => "likes",
                    ReactionKind::Comment => "comments",
                    ReactionKind::Share => "shares",
                };
                let value = if np == 0 {
                    0.0
                } else {
                    by_type_kind[ct.index()][rk as usize] as f64 / np as f64
                };
                set(&format!("{}_avg_{plural}", ct.as_str()), value);
            }
        }

        let delay_names = [
            "reactions_0_1h",
            "reactions_1_2h",
            "reactions_2_4h",
            "reactions_4_8h",
            "reactions_8_16h",
            "reactions_16_32h",
        ];
        for (name, c) in delay_names.iter().zip(delay_windows) {
            set(name, c as f64 / n_posts);
        }
        let day_names = [
            "reactions_00_04",
            "reactions_04_08",
            "reactions_08_12",
            "reactions_12_16",
            "reactions_16_20",
            "reactions_20_24",
        ];
        for (name, c) in day_names.iter().zip(day_windows) {
            set(name, c as f64 / n_posts);
        }
        set(
            "weekend_weekday_ratio",
            ((weekend as f64 + 1.0) / 2.0) / ((weekday as f64 + 1.0) / 5.0),
        );
        let years = range.map_or(1, |r| r.year_count()) as f64;
        let quarter_names = [
            "q1_monthly_reactions",
            "q2_monthly_reactions",
            "q3_monthly_reactions",
            "q4_monthly_reactions",
        ];
        for (name, c) in quarter_names.iter().zip(quarters) {
            set(name, c as f64 / (3.0 * years));
        }

        v[0] = meta.fan_count.map(|x| x as f64);
        v[1] = meta.fan_growth_rate;
        v[2] = meta.talking_about_count.map(|x| x as f64);
        Ok(FeatureVector {
            page_id: page.to_string(),
            values: v,
        })
    }
}

/// Features of one page using its metadata label for `page_type`.
pub fn extract_features(store: &EventStore, page: &str) -> Result<FeatureVector, CategorizeError> {
    FeatureExtractor::new(store).extract(page)
}

/// Replaces missing values with the per-feature median over present values (0 if none).
pub fn impute_median(vectors: &[FeatureVector]) -> Vec<Vec<f64>> {
    let mut medians = [0.0; FEATURE_COUNT];
    for (f, m) in medians.iter_mut().enumerate() {
        let mut present: Vec<f64> = vectors.iter().filter_map(|v| v.values[f]).collect();
        if present.is_empty() {
            continue;
        }
        present.sort_by(f64::total_cmp);
        let n = present.len();
        *m = if n % 2 == 1 {
            present[n / 2]
        } else {
            (present[n / 2 - 1] + present[n / 2]) / 2.0
        };
    }
    vectors
        .iter()
        .map(|v| (0..FEATURE_COUNT).map(|f| v.values[f].unwrap_or(medians[f])).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{PageMeta, PostEvent, ReactionEvent, Record};
    use std::collections::HashSet;

    #[test]
    fn catalog_shape() {
        assert_eq!(CATALOG.len(), 35);
        let names: HashSet<_> = CATALOG.iter().map(|f| f.name).collect();
        assert_eq!(names.len(), 35);
        let count = |g| CATALOG.iter().filter(|f| f.group == g).count();
        assert_eq!((count(Page), count(Content), count(Reaction)), (4, 14, 17));
        for name in DEFAULT_PRIORITY {
            assert!(feature_index(name).is_some());
        }
    }

    fn post(id: usize, t: i64, ct: ContentType) -> Record {
        Record::Post(PostEvent {
            post_id: id.to_string(),
            page_id: "A".into(),
            timestamp_utc: t,
            content_type: ct,
            text: Some("abcd".into()),
        })
    }

    fn reaction(id: usize, parent: Option<usize>, kind: ReactionKind, t: i64) -> Record {
        Record::Reaction(ReactionEvent {
            reaction_id: id.to_string(),
            page_id: "A".into(),
            post_id: parent.map(|p| p.to_string()),
            kind,
            timestamp_utc: t,
        })
    }

    #[test]
    fn extraction() {
        let base = 1_370_044_800; // 2013-06-01 00:00 UTC, a Saturday
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(post(i, base + (i as i64 / 2) * 86400 + 3600 * 10, ContentType::Photo));
        }
        records.push(reaction(0, Some(0), ReactionKind::Comment, base + 36000 + 1800));
        records.push(reaction(1, Some(0), ReactionKind::Like, base + 36000 + 5 * 3600));
        records.push(reaction(2, None, ReactionKind::Share, base + 2 * 86400 + 3600));
        let mut meta = PageMeta::new("A", "shop", 0);
        meta.fan_count = Some(12);
        let store = crate::ingest::EventStore::from_records(vec![meta], records, None);
        let fv = extract_features(&store, "A").unwrap();
        let get = |n: &str| fv.values[feature_index(n).unwrap()];
        assert_eq!(get("posts_per_day"), Some(2.0));
        assert_eq!(get("reactions_0_1h"), Some(0.1));
        assert_eq!(get("reactions_4_8h"), Some(0.1));
        assert_eq!(get("reactions_1_2h"), Some(0.0));
        assert_eq!(get("photo_avg_comments"), Some(0.1));
        assert_eq!(get("video_avg_likes"), Some(0.0));
        assert_eq!(get("avg_shares"), Some(0.1));
        assert_eq!(get("avg_post_length"), Some(4.0));
        assert_eq!(get("fan_count"), Some(12.0));
        assert_eq!(get("fan_growth_rate"), None);
        assert_eq!(get("page_type"), Some(0.0));
        // Sat, Sat, Mon: weekend 2, weekday 1
        assert_eq!(get("weekend_weekday_ratio"), Some((3.0 / 2.0) / (2.0 / 5.0)));
        assert_eq!(get("q2_monthly_reactions"), Some(1.0));
        assert_eq!(get("reactions_00_04"), Some(0.1));
        assert_eq!(get("reactions_08_12"), Some(0.1));
        assert_eq!(get("reactions_12_16"), Some(0.1));
        let windows: f64 = DELAY_WINDOWS_HOURS
            .iter()
            .map(|&(lo, hi)| get(&format!("reactions_{lo}_{hi}h")).unwrap())
            .sum();
        assert!(windows <= get("avg_likes").unwrap() + get("avg_comments").unwrap() + get("avg_shares").unwrap());
    }

    #[test]
    fn zero_post_page_is_error() {
        let store = crate::ingest::EventStore::from_records(vec![PageMeta::new("A", "x", 0)], vec![], None);
        assert!(matches!(extract_features(&store, "A"), Err(CategorizeError::NoPosts(_))));
    }

    #[test]
    fn median_imputation() {
        let mk = |x: Option<f64>| {
            let mut values = [Some(1.0); FEATURE_COUNT];
            values[0] = x;
            FeatureVector { page_id: "p".into(), values }
        };
        let m = impute_median(&[mk(Some(1.0)), mk(None), mk(Some(5.0)), mk(Some(2.0))]);
        assert_eq!(m[1][0], 2.0);
    }
}
