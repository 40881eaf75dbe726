mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use engage_sched::categorize::discretize::fit_feature;
use engage_sched::evaluate::{avg_reaction_gain, content_type_report, reaction_gain};
use engage_sched::ingest::PageId;
use engage_sched::profiles::{
    cumulative_profile, default_delay_edges, delay_distribution, periodic_profile, EventKind, Granularity, Attribution,
    BUCKETS, WEEK, Counts,
};
use engage_sched::schedules::{fraction_schedule, weighted_schedule, ScheduleKind, Scope};
use engage_sched::synth::{brute_force_counts, CategorySpec, IntensitySpec, SynthConfig};

use common::{generated, store_of};

fn single_category(label: &str, pages: usize, posts: usize, reactions: usize) -> CategorySpec {
    let mut c = CategorySpec::new(label);
    c.pages = pages;
    c.posts_per_page = posts;
    c.reactions_per_page = reactions;
    c
}

#[test]
fn delay_cdf_matches_truncated_exponential() {
    let rate_per_hour = 0.5;
    let mut cat = single_category("delays", 5, 200, 2_000);
    cat.delay_rate = rate_per_hour;
    let g = generated(&SynthConfig {
        seed: 21,
        categories: vec![cat],
        ..SynthConfig::default()
    });
    let store = store_of(&g, None);
    let hist = delay_distribution(&store, WEEK).unwrap();
    assert_eq!(hist.beyond_horizon, 0);
    let lambda = rate_per_hour / 3600.0;
    let norm = 1.0 - (-lambda * WEEK as f64).exp();
    for &edge in &default_delay_edges(WEEK)[1..] {
        let analytic = (1.0 - (-lambda * edge as f64).exp()) / norm;
        let empirical = hist.cdf_at_edge(edge).unwrap();
        assert!((empirical - analytic).abs() <= 0.02, "edge {edge}s: {empirical} vs {analytic}");
    }
}

#[test]
fn monthly_counts_follow_days_in_month() {
    let g = generated(&SynthConfig {
        seed: 22,
        categories: vec![single_category("uniform", 10, 1_000, 0)],
        ..SynthConfig::default()
    });
    let store = store_of(&g, None);
    let pages: Vec<PageId> = store.page_ids().cloned().collect();
    let monthly = periodic_profile(&store, &pages, Granularity::Monthly, EventKind::Posting).unwrap();
    let total: u64 = monthly.counts.iter().sum();
    assert_eq!(total, 10_000);
    let days = [31.0, 28.0, 31.0, 30.0, 31.0, 30.0, 31.0, 31.0, 30.0, 31.0, 30.0, 31.0];
    for (m, (&count, d)) in monthly.counts.iter().zip(days).enumerate() {
        let share = count as f64 / total as f64;
        assert!((share - d / 365.0).abs() <= 0.03, "month {m}: {share}");
    }
}

#[test]
fn generator_concentrates_on_delta_intensity() {
    let mut cat = single_category("delta", 10, 100, 1_000);
    cat.reaction = IntensitySpec::delta(40);
    let g = generated(&SynthConfig {
        seed: 23,
        categories: vec![cat],
        ..SynthConfig::default()
    });
    let oracle = brute_force_counts(&g.log, &g.meta_csv, None).unwrap();
    let mut total = [0u64; BUCKETS];
    for counts in oracle.reactions.values() {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let all: u64 = total.iter().sum();
    assert_eq!(all, 10_000);
    assert!(total[39] as f64 / all as f64 >= 0.99, "bucket 40 holds {} of {all}", total[39]);
}

#[test]
fn content_shares_follow_planted_rates() {
    let rates = [1.0, 2.0, 1.0, 3.0];
    let g = generated(&SynthConfig {
        seed: 24,
        content_mix: [0.5, 0.3, 0.0, 0.2],
        type_reaction_rates: rates,
        categories: vec![single_category("mix", 10, 1_000, 2_000)],
        ..SynthConfig::default()
    });
    let store = store_of(&g, None);
    let pages: Vec<PageId> = store.page_ids().cloned().collect();
    let report = content_type_report(&store, &pages).unwrap();
    let weight: f64 = report.rows.iter().map(|r| r.posts as f64 * rates[r.content_type.index()]).sum();
    for row in &report.rows {
        let expected = 100.0 * row.posts as f64 * rates[row.content_type.index()] / weight;
        assert!(
            (row.reaction_share_pct - expected).abs() <= 1.0,
            "{}: {} vs {expected}",
            row.content_type.as_str(),
            row.reaction_share_pct
        );
    }
}

#[test]
fn average_gain_equals_brute_force_mean() {
    let categories = (0..5)
        .map(|c| {
            let mut s = single_category(&format!("c{c}"), 3, 150, 600);
            s.posting = IntensitySpec::peaked(vec![1 + 19 * c], 6.0, 1.0, 4.0);
            s.reaction = IntensitySpec::peaked(vec![10 + 19 * c], 6.0, 1.0, 4.0);
            s
        })
        .collect();
    let g = generated(&SynthConfig {
        seed: 25,
        categories,
        ..SynthConfig::default()
    });
    let store = store_of(&g, None);
    let reports: Vec<_> = g
        .manifest
        .categories
        .iter()
        .map(|c| reaction_gain(&store, &c.label, &c.pages, Attribution::Reaction).unwrap())
        .collect();
    let avg = avg_reaction_gain(&reports).unwrap();
    for (k, &got) in avg.iter().enumerate() {
        let mut sum = 0.0;
        let mut n = 0;
        for c in &g.manifest.categories {
            let (mut r, mut m) = (0u64, 0u64);
            for p in &c.pages {
                r += cumulative_profile(&store, p, EventKind::Reaction).unwrap().counts[k];
                m += cumulative_profile(&store, p, EventKind::Posting).unwrap().counts[k];
            }
            let total_r: u64 = c.pages.iter().map(|p| cumulative_profile(&store, p, EventKind::Reaction).unwrap().total()).sum();
            let total_m: u64 = c.pages.iter().map(|p| cumulative_profile(&store, p, EventKind::Posting).unwrap().total()).sum();
            if m > 0 {
                sum += (r as f64 / m as f64) / (total_r as f64 / total_m as f64);
                n += 1;
            }
        }
        match got {
            Some(v) => assert!((v - sum / n as f64).abs() <= 1e-12, "bucket {}", k + 1),
            None => assert_eq!(n, 0),
        }
    }
}

#[test]
fn equal_totals_make_weighted_a_scaled_fraction_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..50 {
        let pages = rng.random_range(1..=6);
        let per_page = rng.random_range(1..=300);
        let profiles: Vec<Counts> = (0..pages)
            .map(|_| {
                let mut c = [0u64; BUCKETS];
                for _ in 0..per_page {
                    c[rng.random_range(0..BUCKETS)] += 1;
                }
                c
            })
            .collect();
        let cf = fraction_schedule(ScheduleKind::Cfr, Scope::Category(1), &profiles).unwrap();
        let wcf = weighted_schedule(ScheduleKind::Wcfr, Scope::Category(1), &profiles).unwrap();
        assert_eq!(cf.ranking, wcf.ranking);
        for (a, b) in cf.scores.iter().zip(&wcf.scores) {
            assert!((a / pages as f64 - b).abs() <= 1e-12);
        }
    }
}

/// Exhaustive MDL search: tries every midpoint, takes the lowest weighted
/// entropy (ties to the smaller cut) and recurses while the MDL test passes.
fn exhaustive_cuts(points: &[(f64, usize)]) -> Vec<f64> {
    fn ent(pts: &[(f64, usize)]) -> (f64, f64) {
        let n = pts.len() as f64;
        let ones = pts.iter().filter(|p| p.1 == 1).count() as f64;
        let present = [n - ones, ones].iter().filter(|&&c| c > 0.0).count() as f64;
        let e = [n - ones, ones].iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).log2()).sum();
        (e, present)
    }
    let n = points.len();
    let mut best: Option<(f64, usize)> = None;
    for i in 1..n {
        if points[i].0 != points[i - 1].0 {
            let e = (i as f64 * ent(&points[..i]).0 + (n - i) as f64 * ent(&points[i..]).0) / n as f64;
            if best.is_none_or(|(b, _)| e < b) {
                best = Some((e, i));
            }
        }
    }
    let Some((e, i)) = best else { return Vec::new() };
    let ((es, ks), (e1, k1), (e2, k2)) = (ent(points), ent(&points[..i]), ent(&points[i..]));
    let delta = (3f64.powf(ks) - 2.0).log2() - (ks * es - k1 * e1 - k2 * e2);
    let nf = n as f64;
    if es - e <= ((nf - 1.0).log2() + delta) / nf {
        return Vec::new();
    }
    let mut cuts = exhaustive_cuts(&points[..i]);
    cuts.push((points[i - 1].0 + points[i].0) / 2.0);
    cuts.extend(exhaustive_cuts(&points[i..]));
    cuts
}

#[test]
fn twelve_point_fixture_matches_exhaustive_search() {
    let values = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 7.0, 7.5, 8.0, 8.5, 9.0, 9.5];
    let classes = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
    let points: Vec<(f64, usize)> = values.iter().copied().zip(classes).collect();
    let cuts = fit_feature(&values, &classes, 2);
    assert_eq!(cuts, exhaustive_cuts(&points));
    assert_eq!(cuts, vec![5.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discretization_matches_exhaustive_search(raw in prop::collection::vec((0u8..10, 0usize..2), 2..=20)) {
        let mut points: Vec<(f64, usize)> = raw.iter().map(|&(v, c)| (f64::from(v), c)).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values: Vec<f64> = points.iter().map(|p| p.0).collect();
        let classes: Vec<usize> = points.iter().map(|p| p.1).collect();
        prop_assert_eq!(fit_feature(&values, &classes, 2), exhaustive_cuts(&points));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_logs_match_brute_force(seed in any::<u64>(), tz in -720i32..=840, orphans in 0.0f64..0.3) {
        let mut a = single_category("a", 2, 100, 200);
        a.reaction = IntensitySpec::peaked(vec![(seed % 96) as usize + 1], 10.0, 1.0, 2.0);
        let g = generated(&SynthConfig {
            seed,
            tz_offset_minutes: tz,
            orphan_rate: orphans,
            year_start: 2019,
            year_end: 2020,
            categories: vec![a, single_category("b", 1, 100, 300)],
            ..SynthConfig::default()
        });
        prop_assert!(g.manifest.posts + g.manifest.reactions <= 1_000);
        let store = store_of(&g, None);
        let oracle = brute_force_counts(&g.log, &g.meta_csv, None).unwrap();
        for page in store.page_ids() {
            prop_assert_eq!(cumulative_profile(&store, page, EventKind::Posting).unwrap().counts, oracle.posts[page.as_str()]);
            prop_assert_eq!(cumulative_profile(&store, page, EventKind::Reaction).unwrap().counts, oracle.reactions[page.as_str()]);
        }
    }
}
