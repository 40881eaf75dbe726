//! PAM k-medoid clustering (greedy build + steepest-descent swap) and elbow
//! selection of k.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::CategorizeError;
use crate::evaluate::correlation;

/// Swaps must improve the objective by more than this to be applied.
const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Medoid point indices, ascending; cluster `c` has medoid `medoids[c]`.
    pub medoids: Vec<usize>,
    /// Cluster index in `0..k` per point.
    pub assignment: Vec<usize>,
    /// Total dissimilarity of points to their medoids.
    pub objective: f64,
    /// Objective after the build phase and after every applied swap.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct KMedoidOptions {
    /// Extra runs from random initial medoids; the best objective wins.
    pub restarts: usize,
    pub seed: u64,
}

/// Pearson similarity matrix of profile vectors with unit diagonal.
/// Pairs involving a constant vector get similarity 0.
pub fn similarity_matrix(profiles: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = profiles.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        correlation(&profiles[i], &profiles[j]).unwrap_or(0.0)
                    }
                })
                .collect()
        })
        .collect();
    rows
}

/// Dissimilarity `1 − similarity`.
pub fn dissimilarity_from_similarity(similarity: &[Vec<f64>]) -> Vec<Vec<f64>> {
    similarity.iter().map(|r| r.iter().map(|s| 1.0 - s).collect()).collect()
}

fn check_square(d: &[Vec<f64>]) -> Result<(), CategorizeError> {
    if d.iter().any(|r| r.len() != d.len()) {
        return Err(CategorizeError::ShapeMismatch);
    }
    Ok(())
}

fn total_cost(d: &[Vec<f64>], medoids: &[usize]) -> f64 {
    (0..d.len())
        .map(|j| medoids.iter().map(|&m| d[j][m]).fold(f64::INFINITY, f64::min))
        .sum()
}

fn build(d: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = d.len();
    let first = (0..n)
        .map(|i| (i, d[i].iter().sum::<f64>()))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0;
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|j| d[j][first]).collect();
    while medoids.len() < k {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for c in (0..n).filter(|c| !medoids.contains(c)) {
            let gain: f64 = (0..n).map(|j| (nearest[j] - d[j][c]).max(0.0)).sum();
            if gain > best.1 {
                best = (c, gain);
            }
        }
        medoids.push(best.0);
        for (j, near) in nearest.iter_mut().enumerate() {
            *near = near.min(d[j][best.0]);
        }
    }
    medoids
}

fn swap_phase(d: &[Vec<f64>], mut medoids: Vec<usize>) -> (Vec<usize>, f64, Vec<f64>) {
    let n = d.len();
    let mut cost = total_cost(d, &medoids);
    let mut trace = vec![cost];
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..medoids.len() {
            for h in (0..n).filter(|h| !medoids.contains(h)) {
                let mut candidate = medoids.clone();
                candidate[slot] = h;
                let c = total_cost(d, &candidate);
                if c < cost - IMPROVEMENT_EPS && best.is_none_or(|(_, _, bc)| c < bc) {
                    best = Some((slot, h, c));
                }
            }
        }
        let Some((slot, h, c)) = best else { break };
        assert!(c <= cost, "swap increased the objective");
        medoids[slot] = h;
        cost = c;
        trace.push(cost);
    }
    (medoids, cost, trace)
}

fn finish(d: &[Vec<f64>], mut medoids: Vec<usize>, trace: Vec<f64>) -> Clustering {
    medoids.sort_unstable();
    let assignment: Vec<usize> = (0..d.len())
        .map(|j| {
            let mut best = 0;
            for c in 1..medoids.len() {
                if d[j][medoids[c]] < d[j][medoids[best]] {
                    best = c;
                }
            }
            best
        })
        .collect();
    // Medoids always belong to their own cluster, even under distance ties.
    let mut assignment = assignment;
    for (c, &m) in medoids.iter().enumerate() {
        assignment[m] = c;
    }
    let objective = (0..d.len()).map(|j| d[j][medoids[assignment[j]]]).sum();
    Clustering { medoids, assignment, objective, trace }
}

/// Clusters `n` points given an `n × n` dissimilarity matrix.
pub fn kmedoid(dissimilarity: &[Vec<f64>], k: usize, options: &KMedoidOptions) -> Result<Clustering, CategorizeError> {
    check_square(dissimilarity)?;
    let n = dissimilarity.len();
    if k == 0 || k > n {
        return Err(CategorizeError::InvalidK { k, points: n });
    }
    let (mut medoids, mut cost, mut trace) = swap_phase(dissimilarity, build(dissimilarity, k));
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.restarts {
        let init = sample(&mut rng, n, k).into_vec();
        let (m, c, t) = swap_phase(dissimilarity, init);
        if c < cost - IMPROVEMENT_EPS {
            (medoids, cost, trace) = (m, c, t);
        }
    }
    Ok(finish(dissimilarity, medoids, trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowCurve {
    pub k_values: Vec<usize>,
    pub objectives: Vec<f64>,
    pub chosen: usize,
}

/// Picks k at the largest second difference of the objective curve over
/// `k_min..=k_max`; a flat curve yields `k_min`.
pub fn choose_k(
    dissimilarity: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    options: &KMedoidOptions,
) -> Result<ElbowCurve, CategorizeError> {
    check_square(dissimilarity)?;
    let n = dissimilarity.len();
    if k_min == 0 || k_max > n || k_min > k_max {
        return Err(CategorizeError::InvalidKRange { k_min, k_max, points: n });
    }
    if k_max - k_min + 1 < 3 {
        return Err(CategorizeError::RangeTooNarrow { k_min, k_max });
    }
    let k_values: Vec<usize> = (k_min..=k_max).collect();
    let objectives = k_values
        .iter()
        .map(|&k| kmedoid(dissimilarity, k, options).map(|c| c.objective))
        .collect::<Result<Vec<_>, _>>()?;
    let mut chosen = k_min;
    let mut best = IMPROVEMENT_EPS;
    for i in 1..objectives.len() - 1 {
        let curvature = objectives[i - 1] - 2.0 * objectives[i] + objectives[i + 1];
        if curvature > best {
            best = curvature;
            chosen = k_values[i];
        }
    }
    Ok(ElbowCurve { k_values, objectives, chosen })
}
