//! Supervised entropy-based discretization with the MDL stopping rule
//! (recursive minimal-entropy binary splits, Fayyad–Irani acceptance test).

use super::CategorizeError;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationModel {
    /// Strictly increasing cut points per feature.
    pub cuts: Vec<Vec<f64>>,
}

impl DiscretizationModel {
    pub fn feature_count(&self) -> usize {
        self.cuts.len()
    }

    pub fn bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, value: f64) -> usize {
        self.cuts[feature].partition_point(|&c| c < value)
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<usize> {
        row.iter().enumerate().map(|(f, &v)| self.bin(f, v)).collect()
    }

    pub fn apply(&self, matrix: &[Vec<f64>]) -> Vec<Vec<usize>> {
        matrix.iter().map(|r| self.apply_row(r)).collect()
    }
}

/// Entropy (bits) of a class-count histogram.
pub fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn distinct_classes(counts: &[usize]) -> usize {
    counts.iter().filter(|&&c| c > 0).count()
}

/// Whether splitting `all` into `left` and `right` passes the MDL criterion.
pub fn mdl_accepts(all: &[usize], left: &[usize], right: &[usize]) -> bool {
    let n = all.iter().sum::<usize>() as f64;
    let (ent, ent_l, ent_r) = (entropy(all), entropy(left), entropy(right));
    let n_l = left.iter().sum::<usize>() as f64;
    let n_r = right.iter().sum::<usize>() as f64;
    let gain = ent - (n_l / n) * ent_l - (n_r / n) * ent_r;
    let (k, k_l, k_r) = (
        distinct_classes(all) as f64,
        distinct_classes(left) as f64,
        distinct_classes(right) as f64,
    );
    let delta = (3f64.powf(k) - 2.0).log2() - (k * ent - k_l * ent_l - k_r * ent_r);
    gain > (n - 1.0).log2() / n + delta / n
}

/// A run of equal values with its class histogram.
struct Group {
    value: f64,
    counts: Vec<usize>,
}

fn split_groups(groups: &[Group], n_classes: usize, cuts: &mut Vec<f64>) {
    if groups.len() < 2 {
        return;
    }
    let mut total = vec![0usize; n_classes];
    for g in groups {
        for (t, c) in total.iter_mut().zip(&g.counts) {
            *t += c;
        }
    }
    let n = total.iter().sum::<usize>() as f64;
    let single_class = |g: &Group| {
        let mut it = g.counts.iter().enumerate().filter(|(_, &c)| c > 0);
        match (it.next(), it.next()) {
            (Some((c, _)), None) => Some(c),
            _ => None,
        }
    };

    let mut left = vec![0usize; n_classes];
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for i in 0..groups.len() - 1 {
        for (l, c) in left.iter_mut().zip(&groups[i].counts) {
            *l += c;
        }
        // Not a boundary when both neighbouring runs hold one and the same class.
        let boundary = match (single_class(&groups[i]), single_class(&groups[i + 1])) {
            (Some(a), Some(b)) => a != b,
            _ => true,
        };
        if !boundary {
            continue;
        }
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let n_l = left.iter().sum::<usize>() as f64;
        let e = (n_l / n) * entropy(&left) + ((n - n_l) / n) * entropy(&right);
        if best.as_ref().is_none_or(|(_, be, _)| e < *be) {
            best = Some((i, e, left.clone()));
        }
    }
    let Some((i, _, left)) = best else { return };
    let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
    if !mdl_accepts(&total, &left, &right) {
        return;
    }
    split_groups(&groups[..=i], n_classes, cuts);
    cuts.push((groups[i].value + groups[i + 1].value) / 2.0);
    split_groups(&groups[i + 1..], n_classes, cuts);
}

/// Cut points for one feature; `classes[i]` must be below `n_classes`.
pub fn fit_feature(values: &[f64], classes: &[usize], n_classes: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut groups: Vec<Group> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if g.value == values[i] => g.counts[classes[i]] += 1,
            _ => {
                let mut counts = vec![0; n_classes];
                counts[classes[i]] += 1;
                groups.push(Group {
                    value: values[i],
                    counts,
                });
            }
        }
    }
    let mut cuts = Vec::new();
    split_groups(&groups, n_classes, &mut cuts);
    cuts
}

/// Fits cut points for every column of `matrix` (rows are pages).
pub fn discretize_fit<L: Ord + Clone>(matrix: &[Vec<f64>], classes: &[L]) -> Result<DiscretizationModel, CategorizeError> {
    if matrix.len() < 2 {
        return Err(CategorizeError::TooFewPages { needed: 2, got: matrix.len() });
    }
    if matrix.len() != classes.len() {
        return Err(CategorizeError::ShapeMismatch);
    }
    let width = matrix[0].len();
    if matrix.iter().any(|r| r.len() != width) {
        return Err(CategorizeError::ShapeMismatch);
    }
    let mut labels: Vec<L> = classes.to_vec();
    labels.sort();
    labels.dedup();
    let class_ids: Vec<usize> = classes
        .iter()
        .map(|c| labels.binary_search(c).expect("label present"))
        .collect();
    let cuts = (0..width)
        .map(|f| {
            if labels.len() < 2 {
                return Vec::new();
            }
            let column: Vec<f64> = matrix.iter().map(|r| r[f]).collect();
            fit_feature(&column, &class_ids, labels.len())
        })
        .collect();
    Ok(DiscretizationModel { cuts })
}
