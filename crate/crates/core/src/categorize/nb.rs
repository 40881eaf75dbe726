//! Multinomial Naive Bayes over discretized features. Each page is a bag of
//! tokens `(feature, bin)`, one per feature, with add-one smoothing.

use super::CategorizeError;

#[derive(Debug, Clone, PartialEq)]
pub struct NbClassifier {
    /// Number of bins per feature; bins at or beyond this are unseen.
    pub bins: Vec<usize>,
    /// Training pages per class.
    pub class_pages: Vec<u64>,
    /// `token_counts[c][f][b]`: pages of class `c` with feature `f` in bin `b`.
    pub token_counts: Vec<Vec<Vec<u64>>>,
}

impl NbClassifier {
    pub fn class_count(&self) -> usize {
        self.class_pages.len()
    }

    pub fn feature_count(&self) -> usize {
        self.bins.len()
    }

    fn vocabulary(&self) -> f64 {
        self.bins.iter().sum::<usize>() as f64
    }

    /// Unnormalised log posterior per class, optionally with one training
    /// page `(row, class)` removed from the counts.
    fn log_scores(&self, row: &[usize], held_out: Option<(&[usize], usize)>) -> Vec<f64> {
        let vocab = self.vocabulary();
        let features = self.feature_count() as f64;
        let total_pages = self.class_pages.iter().sum::<u64>() - u64::from(held_out.is_some());
        (0..self.class_count())
            .map(|c| {
                let own = held_out.is_some_and(|(_, hc)| hc == c);
                let pages = self.class_pages[c] - u64::from(own);
                if pages == 0 {
                    return f64::NEG_INFINITY;
                }
                let mut score = (pages as f64 / total_pages as f64).ln();
                let denom = pages as f64 * features + vocab;
                for (f, &b) in row.iter().enumerate() {
                    let mut n = self.token_counts[c][f].get(b).copied().unwrap_or(0);
                    if let Some((hrow, _)) = held_out.filter(|_| own) {
                        if hrow[f] == b {
                            n -= 1;
                        }
                    }
                    score += ((n as f64 + 1.0) / denom).ln();
                }
                score
            })
            .collect()
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.iter().map(|e| e / sum).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Trains on rows of bin indices; classes are `0..n_classes` and each must
/// have at least one page.
pub fn nb_train(rows: &[Vec<usize>], bins: &[usize], classes: &[usize], n_classes: usize) -> Result<NbClassifier, CategorizeError> {
    if rows.len() != classes.len() || rows.iter().any(|r| r.len() != bins.len()) {
        return Err(CategorizeError::ShapeMismatch);
    }
    let mut class_pages = vec![0u64; n_classes];
    let mut token_counts: Vec<Vec<Vec<u64>>> = (0..n_classes)
        .map(|_| bins.iter().map(|&b| vec![0; b]).collect())
        .collect();
    for (row, &c) in rows.iter().zip(classes) {
        if c >= n_classes {
            return Err(CategorizeError::ShapeMismatch);
        }
        class_pages[c] += 1;
        for (f, &b) in row.iter().enumerate() {
            if b >= bins[f] {
                return Err(CategorizeError::ShapeMismatch);
            }
            token_counts[c][f][b] += 1;
        }
    }
    if let Some(empty) = class_pages.iter().position(|&p| p == 0) {
        return Err(CategorizeError::EmptyClass(empty));
    }
    Ok(NbClassifier { bins: bins.to_vec(), class_pages, token_counts })
}

/// Most probable class (ties to the lowest index) and the posterior vector.
pub fn nb_classify(classifier: &NbClassifier, row: &[usize]) -> (usize, Vec<f64>) {
    let posterior = softmax(&classifier.log_scores(row, None));
    (argmax(&posterior), posterior)
}

/// Leave-one-out accuracy of the classifier trained on `rows`.
pub fn leave_one_out_accuracy(classifier: &NbClassifier, rows: &[Vec<usize>], classes: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let correct = rows
        .iter()
        .zip(classes)
        .filter(|(row, &c)| argmax(&classifier.log_scores(row, Some((row, c)))) == c)
        .count();
    correct as f64 / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_class_takes_everything() {
        let clf = nb_train(&[vec![0], vec![1]], &[2], &[0, 0], 1).unwrap();
        let (c, p) = nb_classify(&clf, &[1]);
        assert_eq!(c, 0);
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn hand_computed_posterior() {
        // Class A (0): bin1 ×3, bin0 ×1. Class B (1): bin1 ×1, bin0 ×3.
        let rows = vec![vec![1], vec![1], vec![1], vec![0], vec![1], vec![0], vec![0], vec![0]];
        let classes = [0, 0, 0, 0, 1, 1, 1, 1];
        let clf = nb_train(&rows, &[2], &classes, 2).unwrap();
        let (c, p) = nb_classify(&clf, &[1]);
        assert_eq!(c, 0);
        // P(bin1|A) = 4/6, P(bin1|B) = 2/6, equal priors.
        let expected = (4.0 / 6.0) / (4.0 / 6.0 + 2.0 / 6.0);
        assert!((p[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn unseen_bin_keeps_positive_probability() {
        let clf = nb_train(&[vec![0], vec![0]], &[2], &[0, 1], 2).unwrap();
        let (_, p) = nb_classify(&clf, &[5]);
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn empty_class_is_rejected() {
        assert!(matches!(
            nb_train(&[vec![0]], &[1], &[0], 2),
            Err(CategorizeError::EmptyClass(1))
        ));
    }

    #[test]
    fn leave_one_out_matches_retraining() {
        let rows = vec![vec![0, 1], vec![0, 1], vec![1, 0], vec![1, 1], vec![1, 0], vec![0, 0]];
        let classes = [0, 0, 1, 1, 1, 0];
        let clf = nb_train(&rows, &[2, 2], &classes, 2).unwrap();
        let mut correct = 0;
        for i in 0..rows.len() {
            let (r, c): (Vec<_>, Vec<_>) = rows
                .iter()
                .cloned()
                .zip(classes)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p)
                .unzip();
            let retrained = nb_train(&r, &[2, 2], &c, 2).unwrap();
            if nb_classify(&retrained, &rows[i]).0 == classes[i] {
                correct += 1;
            }
        }
        let expected = correct as f64 / rows.len() as f64;
        assert_eq!(leave_one_out_accuracy(&clf, &rows, &classes), expected);
    }

    proptest! {
        #[test]
        fn posteriors_sum_to_one(
            data in proptest::collection::vec((0usize..3, 0usize..3, 0usize..4), 4..30),
            probe in (0usize..3, 0usize..3),
        ) {
            let mut rows: Vec<Vec<usize>> = data.iter().map(|&(a, b, _)| vec![a, b]).collect();
            let mut classes: Vec<usize> = data.iter().map(|&(_, _, c)| c).collect();
            for c in 0..4 {
                rows.push(vec![0, 0]);
                classes.push(c);
            }
            let clf = nb_train(&rows, &[3, 3], &classes, 4).unwrap();
            let (_, p) = nb_classify(&clf, &[probe.0, probe.1]);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }
}
