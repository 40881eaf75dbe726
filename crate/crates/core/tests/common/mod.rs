//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::collections::HashMap;

use engage_sched::ingest::{parse_event_log, parse_page_meta, EventStore, YearRange};
use engage_sched::synth::{generate, CategorySpec, Generated, IntensitySpec, SynthConfig};

/// Parses a generated log into a store.
pub fn store_of(g: &Generated, years: Option<YearRange>) -> EventStore {
    store_from_bytes(&g.log, &g.meta_csv, years)
}

pub fn store_from_bytes(log: &[u8], meta_csv: &str, years: Option<YearRange>) -> EventStore {
    let meta = parse_page_meta(meta_csv.as_bytes()).expect("valid page table");
    parse_event_log(log, meta, years).expect("valid log")
}

/// Repeats every event `copies` times. Copy `i` suffixes post and reaction
/// ids with `~i`, so each copied reaction keeps a copied parent.
pub fn replicate_log(log: &[u8], copies: usize) -> Vec<u8> {
    let text = std::str::from_utf8(log).expect("utf-8 log");
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
        let value: serde_json::Value = serde_json::from_str(line).expect("json line");
        for i in 0..copies {
            let mut v = value.clone();
            let obj = v.as_object_mut().expect("object");
            for key in ["post_id", "reaction_id"] {
                if let Some(serde_json::Value::String(s)) = obj.get_mut(key) {
                    s.push_str(&format!("~{i}"));
                }
            }
            out.extend_from_slice(serde_json::to_string(&v).expect("serialize").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

/// Adjusted Rand index of two labelings.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut ra: HashMap<usize, f64> = HashMap::new();
    let mut rb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
        *ra.entry(x).or_default() += 1.0;
        *rb.entry(y).or_default() += 1.0;
    }
    let index: f64 = joint.values().map(|&v| choose2(v)).sum();
    let sa: f64 = ra.values().map(|&v| choose2(v)).sum();
    let sb: f64 = rb.values().map(|&v| choose2(v)).sum();
    let expected = sa * sb / choose2(n);
    let max = (sa + sb) / 2.0;
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// A reaction intensity `1 + cos` peaking at `peak` (1-based) over the day.
pub fn sinusoid(peak: usize) -> IntensitySpec {
    let values = (0..96)
        .map(|b| 1.0 + ((b as f64 - (peak as f64 - 1.0)) * std::f64::consts::TAU / 96.0).cos())
        .collect();
    IntensitySpec {
        explicit: Some(values),
        ..IntensitySpec::default()
    }
}

/// `groups` categories with narrow, evenly spaced reaction peaks.
pub fn clustered_config(groups: usize, pages_per_group: usize, seed: u64) -> SynthConfig {
    let categories = (0..groups)
        .map(|g| {
            let mut c = CategorySpec::new(format!("group{}", g + 1));
            c.pages = pages_per_group;
            c.posts_per_page = 60;
            c.reactions_per_page = 600;
            c.reaction = IntensitySpec::peaked(vec![1 + g * 96 / groups], 50.0, 0.05, 1.5);
            c
        })
        .collect();
    SynthConfig {
        seed,
        categories,
        ..SynthConfig::default()
    }
}

/// Two groups of pages with opposite sinusoidal reaction profiles.
pub fn opposite_config(pages_per_group: usize, seed: u64) -> SynthConfig {
    let categories = [(24, "morning"), (72, "evening")]
        .into_iter()
        .map(|(peak, label)| {
            let mut c = CategorySpec::new(label);
            c.pages = pages_per_group;
            c.posts_per_page = 40;
            c.reactions_per_page = 400;
            c.reaction = sinusoid(peak);
            c
        })
        .collect();
    SynthConfig {
        seed,
        categories,
        ..SynthConfig::default()
    }
}

pub fn generated(config: &SynthConfig) -> Generated {
    generate(config).expect("valid synthetic config")
}

/// Planted category index per page, in page-id order of the store.
pub fn planted_labels(g: &Generated, store: &EventStore) -> Vec<usize> {
    let by_page: HashMap<&str, usize> = g.manifest.pages.iter().map(|p| (p.page_id.as_str(), p.category)).collect();
    store.page_ids().map(|p| by_page[p.as_str()]).collect()
}
