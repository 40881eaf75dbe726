//! Greedy forward wrapper feature selection scored by leave-one-out
//! multinomial NB accuracy.

use rayon::prelude::*;

use super::nb::{leave_one_out_accuracy, nb_train};
use super::CategorizeError;

pub const DEFAULT_EPSILON: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Selected feature indices in the order they were added.
    pub selected: Vec<usize>,
    /// Leave-one-out accuracy after each addition.
    pub accuracy: Vec<f64>,
}

fn project(rows: &[Vec<usize>], columns: &[usize]) -> Vec<Vec<usize>> {
    rows.iter().map(|r| columns.iter().map(|&c| r[c]).collect()).collect()
}

pub(super) fn subset_accuracy(rows: &[Vec<usize>], bins: &[usize], classes: &[usize], n_classes: usize, columns: &[usize]) -> f64 {
    let projected = project(rows, columns);
    let sub_bins: Vec<usize> = columns.iter().map(|&c| bins[c]).collect();
    match nb_train(&projected, &sub_bins, classes, n_classes) {
        Ok(clf) => leave_one_out_accuracy(&clf, &projected, classes),
        Err(_) => 0.0,
    }
}

/// Adds features one at a time, each time the candidate with the highest
/// accuracy (ties to the lowest index). The first feature is always taken;
/// later ones only while they improve accuracy by at least `epsilon`.
pub fn wrapper_select(
    rows: &[Vec<usize>],
    bins: &[usize],
    classes: &[usize],
    max_features: usize,
    epsilon: f64,
) -> Result<Selection, CategorizeError> {
    if bins.is_empty() || max_features == 0 {
        return Err(CategorizeError::EmptyCandidates);
    }
    if rows.len() != classes.len() || rows.iter().any(|r| r.len() != bins.len()) {
        return Err(CategorizeError::ShapeMismatch);
    }
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    let distinct = {
        let mut c = classes.to_vec();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    if distinct < 2 {
        return Err(CategorizeError::SingleClass);
    }
    if distinct != n_classes {
        return Err(CategorizeError::ShapeMismatch);
    }

    let mut selected: Vec<usize> = Vec::new();
    let mut accuracy: Vec<f64> = Vec::new();
    while selected.len() < max_features.min(bins.len()) {
        let candidates: Vec<usize> = (0..bins.len()).filter(|f| !selected.contains(f)).collect();
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&f| {
                let mut columns = selected.clone();
                columns.push(f);
                subset_accuracy(rows, bins, classes, n_classes, &columns)
            })
            .collect();
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        if let Some(&last) = accuracy.last() {
            if scores[best] - last < epsilon {
                break;
            }
        }
        selected.push(candidates[best]);
        accuracy.push(scores[best]);
    }
    Ok(Selection { selected, accuracy })
}
