//! Page categorization: feature extraction, supervised discretization, label
//! correction, k-medoid clustering of reaction profiles and wrapper feature
//! selection over a multinomial Naive Bayes classifier.

pub mod discretize;
pub mod features;
pub mod kmedoid;
pub mod labels;
pub mod nb;
pub mod wrapper;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ingest::{EventStore, PageId, StopWords};
use crate::profiles::{cumulative_profile, EventKind};
use crate::schedules::Category;

pub use discretize::{discretize_fit, DiscretizationModel};
pub use features::{extract_features, feature_index, impute_median, FeatureExtractor, FeatureVector, CATALOG, DEFAULT_PRIORITY, FEATURE_COUNT};
pub use kmedoid::{choose_k, dissimilarity_from_similarity, kmedoid, similarity_matrix, Clustering, ElbowCurve, KMedoidOptions};
pub use labels::{correct_labels, correct_labels_with, PageSimilarity, TfIdfCosine, DEFAULT_NEIGHBORS};
pub use nb::{leave_one_out_accuracy, nb_classify, nb_train, NbClassifier};
pub use wrapper::{wrapper_select, Selection, DEFAULT_EPSILON};

const DOCUMENT_HEADER: &str = "engage-sched category-model v1";

#[derive(Debug, Error, PartialEq)]
pub enum CategorizeError {
    #[error("unknown page {0:?}")]
    UnknownPage(String),
    #[error("page {0:?} has no posts")]
    NoPosts(String),
    #[error("need at least {needed} pages with posts, got {got}")]
    TooFewPages { needed: usize, got: usize },
    #[error("input dimensions do not match")]
    ShapeMismatch,
    #[error("k = {k} is outside 1..={points}")]
    InvalidK { k: usize, points: usize },
    #[error("k range {k_min}..={k_max} is outside 1..={points}")]
    InvalidKRange { k_min: usize, k_max: usize, points: usize },
    #[error("k range {k_min}..={k_max} needs at least three values for the elbow test")]
    RangeTooNarrow { k_min: usize, k_max: usize },
    #[error("class {0} has no training pages")]
    EmptyClass(usize),
    #[error("no candidate features")]
    EmptyCandidates,
    #[error("feature selection needs at least two clusters")]
    SingleClass,
    #[error("neighbour count {k} must be in 1..{pages}")]
    InvalidNeighbors { k: usize, pages: usize },
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("category model line {line}: {message}")]
    Document { line: usize, message: String },
}

/// How the number of categories is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSelection {
    Fixed(usize),
    /// Elbow search; `max` is capped at the page count.
    Elbow { min: usize, max: usize },
}

#[derive(Debug, Clone)]
pub struct CategorizeOptions {
    pub k: KSelection,
    /// Neighbour count for label correction; `None` keeps metadata labels.
    pub neighbors: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    /// Wrapper selection; when off the default priority features are used.
    pub select_features: bool,
    pub max_features: usize,
    pub epsilon: f64,
    pub stopwords: StopWords,
}

impl Default for CategorizeOptions {
    fn default() -> Self {
        Self {
            k: KSelection::Elbow { min: 1, max: 10 },
            neighbors: Some(DEFAULT_NEIGHBORS),
            restarts: 0,
            seed: 0,
            select_features: true,
            max_features: FEATURE_COUNT,
            epsilon: DEFAULT_EPSILON,
            stopwords: StopWords::english(),
        }
    }
}

/// The fitted categorization of a store's pages.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryModel {
    pub k: usize,
    /// Medoid page per category; category `c` (1-based) has `medoids[c - 1]`.
    pub medoids: Vec<PageId>,
    /// Category id in `1..=k` per page.
    pub assignment: BTreeMap<PageId, usize>,
    /// Page label after correction.
    pub page_labels: BTreeMap<PageId, String>,
    /// Majority page label per category.
    pub category_labels: Vec<String>,
    /// Clustering objective (total dissimilarity to medoids).
    pub objective: f64,
    pub elbow: Option<ElbowCurve>,
    /// Catalog indices of the selected features, in selection order.
    pub selected_features: Vec<usize>,
    /// Leave-one-out accuracy after each selected feature.
    pub accuracy: Vec<f64>,
    /// Cut points for every catalog feature.
    pub discretization: DiscretizationModel,
    /// Classifier over the selected features; class `c` is category `c + 1`.
    pub classifier: NbClassifier,
}

impl CategoryModel {
    pub fn categories(&self) -> Vec<Category> {
        (1..=self.k)
            .map(|id| Category {
                id,
                label: self.category_labels[id - 1].clone(),
                pages: self
                    .assignment
                    .iter()
                    .filter(|(_, &c)| c == id)
                    .map(|(p, _)| p.clone())
                    .collect(),
            })
            .collect()
    }

    pub fn selected_feature_names(&self) -> Vec<&'static str> {
        self.selected_features.iter().map(|&f| CATALOG[f].name).collect()
    }

    /// Category id and posterior for a full (imputed) 35-value feature row.
    pub fn classify(&self, row: &[f64]) -> (usize, Vec<f64>) {
        let bins: Vec<usize> = self
            .selected_features
            .iter()
            .map(|&f| self.discretization.bin(f, row[f]))
            .collect();
        let (c, posterior) = nb_classify(&self.classifier, &bins);
        (c + 1, posterior)
    }

    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{DOCUMENT_HEADER}");
        let _ = writeln!(out, "k\t{}", self.k);
        let _ = writeln!(out, "objective\t{}", self.objective);
        if let Some(e) = &self.elbow {
            let _ = writeln!(out, "elbow_chosen\t{}", e.chosen);
            for (k, o) in e.k_values.iter().zip(&e.objectives) {
                let _ = writeln!(out, "elbow\t{k}\t{o}");
            }
        }
        for (f, acc) in self.selected_features.iter().zip(&self.accuracy) {
            let _ = writeln!(out, "feature\t{}\t{}", CATALOG[*f].name, acc);
        }
        for (c, (medoid, label)) in self.medoids.iter().zip(&self.category_labels).enumerate() {
            let _ = writeln!(out, "category\t{}\t{}\t{}", c + 1, escape(medoid), escape(label));
        }
        for (page, c) in &self.assignment {
            let _ = writeln!(out, "page\t{}\t{}\t{}", escape(page), c, escape(&self.page_labels[page]));
        }
        for (f, cuts) in self.discretization.cuts.iter().enumerate() {
            let _ = write!(out, "cuts\t{}", CATALOG[f].name);
            for c in cuts {
                let _ = write!(out, "\t{c}");
            }
            out.push('\n');
        }
        for (c, pages) in self.classifier.class_pages.iter().enumerate() {
            let _ = writeln!(out, "nb_class\t{}\t{}", c + 1, pages);
            for (i, counts) in self.classifier.token_counts[c].iter().enumerate() {
                let _ = write!(out, "nb_counts\t{}\t{}", c + 1, CATALOG[self.selected_features[i]].name);
                for n in counts {
                    let _ = write!(out, "\t{n}");
                }
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_document(text: &str) -> Result<Self, CategorizeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.starts_with('#'));
        match lines.next() {
            Some((_, DOCUMENT_HEADER)) => {}
            _ => return Err(doc_err(1, "missing or unsupported header")),
        }
        let mut k = None;
        let mut objective = None;
        let mut elbow_chosen = None;
        let mut elbow_k = Vec::new();
        let mut elbow_obj = Vec::new();
        let mut selected_features = Vec::new();
        let mut accuracy = Vec::new();
        let mut medoids = Vec::new();
        let mut category_labels = Vec::new();
        let mut assignment = BTreeMap::new();
        let mut page_labels = BTreeMap::new();
        let mut cuts = vec![Vec::new(); FEATURE_COUNT];
        let mut class_pages = Vec::new();
        let mut token_counts: Vec<Vec<Vec<u64>>> = Vec::new();
        let mut ended = false;

        for (n, line) in lines {
            if ended {
                return Err(doc_err(n, "content after end"));
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let field = |i: usize| fields.get(i).copied().ok_or_else(|| doc_err(n, "missing field"));
            let feature = |name: &str| feature_index(name).ok_or_else(|| doc_err(n, &format!("unknown feature {name:?}")));
            match fields[0] {
                "k" => k = Some(parse(field(1)?, n)?),
                "objective" => objective = Some(parse(field(1)?, n)?),
                "elbow_chosen" => elbow_chosen = Some(parse(field(1)?, n)?),
                "elbow" => {
                    elbow_k.push(parse(field(1)?, n)?);
                    elbow_obj.push(parse(field(2)?, n)?);
                }
                "feature" => {
                    selected_features.push(feature(field(1)?)?);
                    accuracy.push(parse(field(2)?, n)?);
                }
                "category" => {
                    let id: usize = parse(field(1)?, n)?;
                    if id != medoids.len() + 1 {
                        return Err(doc_err(n, "categories out of order"));
                    }
                    medoids.push(unescape(field(2)?));
                    category_labels.push(unescape(field(3)?));
                }
                "page" => {
                    let page = unescape(field(1)?);
                    assignment.insert(page.clone(), parse(field(2)?, n)?);
                    page_labels.insert(page, unescape(field(3)?));
                }
                "cuts" => {
                    let f = feature(field(1)?)?;
                    cuts[f] = fields[2..].iter().map(|v| parse(v, n)).collect::<Result<_, _>>()?;
                }
                "nb_class" => {
                    let id: usize = parse(field(1)?, n)?;
                    if id != class_pages.len() + 1 {
                        return Err(doc_err(n, "classes out of order"));
                    }
                    class_pages.push(parse(field(2)?, n)?);
                    token_counts.push(Vec::new());
                }
                "nb_counts" => {
                    let id: usize = parse(field(1)?, n)?;
                    let f = feature(field(2)?)?;
                    let counts = token_counts
                        .get_mut(id.wrapping_sub(1))
                        .ok_or_else(|| doc_err(n, "counts before class"))?;
                    if selected_features.get(counts.len()) != Some(&f) {
                        return Err(doc_err(n, "counts do not follow the feature order"));
                    }
                    counts.push(fields[3..].iter().map(|v| parse(v, n)).collect::<Result<_, _>>()?);
                }
                "end" => ended = true,
                other => return Err(doc_err(n, &format!("unknown record {other:?}"))),
            }
        }
        if !ended {
            return Err(doc_err(text.lines().count(), "missing end marker"));
        }
        let k = k.ok_or_else(|| doc_err(0, "missing k"))?;
        if medoids.len() != k || class_pages.len() != k {
            return Err(doc_err(0, "category count does not match k"));
        }
        if selected_features.is_empty() {
            return Err(doc_err(0, "no selected features"));
        }
        if assignment.values().any(|&c| c == 0 || c > k) {
            return Err(doc_err(0, "assignment outside 1..=k"));
        }
        let bins: Vec<usize> = selected_features.iter().map(|&f| cuts[f].len() + 1).collect();
        for counts in &token_counts {
            if counts.len() != bins.len() || counts.iter().zip(&bins).any(|(c, &b)| c.len() != b) {
                return Err(doc_err(0, "classifier counts do not match the cut points"));
            }
        }
        let elbow = elbow_chosen.map(|chosen| ElbowCurve {
            k_values: elbow_k,
            objectives: elbow_obj,
            chosen,
        });
        Ok(CategoryModel {
            k,
            medoids,
            assignment,
            page_labels,
            category_labels,
            objective: objective.ok_or_else(|| doc_err(0, "missing objective"))?,
            elbow,
            selected_features,
            accuracy,
            discretization: DiscretizationModel { cuts },
            classifier: NbClassifier { bins, class_pages, token_counts },
        })
    }
}

fn doc_err(line: usize, message: &str) -> CategorizeError {
    CategorizeError::Document {
        line,
        message: message.to_string(),
    }
}

fn parse<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, CategorizeError> {
    value.parse().map_err(|_| doc_err(line, &format!("invalid value {value:?}")))
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Groups pages by label into categories, ids assigned in label order.
pub fn categories_from_labels(labels: &BTreeMap<PageId, String>) -> Vec<Category> {
    let mut groups: BTreeMap<&str, Vec<PageId>> = BTreeMap::new();
    for (page, label) in labels {
        groups.entry(label.as_str()).or_default().push(page.clone());
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, (label, pages))| Category {
            id: i + 1,
            label: label.to_string(),
            pages,
        })
        .collect()
}

fn majority_label<'a, I: IntoIterator<Item = &'a str>>(labels: I) -> String {
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *votes.entry(l).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (label, v) in votes {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((label, v));
        }
    }
    best.map(|(l, _)| l.to_string()).unwrap_or_default()
}

/// Runs the full categorization pipeline over the pages that have posts.
pub fn categorize(store: &EventStore, options: &CategorizeOptions) -> Result<CategoryModel, CategorizeError> {
    let pages: Vec<PageId> = store
        .page_ids()
        .filter(|p| store.posts_of(p).next().is_some())
        .cloned()
        .collect();
    if pages.len() < 2 {
        return Err(CategorizeError::TooFewPages { needed: 2, got: pages.len() });
    }

    let metadata_labels: BTreeMap<PageId, String> = pages
        .iter()
        .map(|p| (p.clone(), store.page(p).map(|m| m.label.clone()).unwrap_or_default()))
        .collect();
    let page_labels = match options.neighbors {
        Some(k) => {
            let docs: Vec<_> = pages.iter().map(|p| store.page_tokens(p, &options.stopwords)).collect();
            let labels: Vec<String> = pages.iter().map(|p| metadata_labels[p].clone()).collect();
            let corrected = correct_labels_with(&docs, &labels, k, &TfIdfCosine)?;
            pages.iter().cloned().zip(corrected).collect()
        }
        None => metadata_labels,
    };

    let extractor = FeatureExtractor::with_labels(store, page_labels.clone());
    let vectors = pages
        .iter()
        .map(|p| extractor.extract(p))
        .collect::<Result<Vec<_>, _>>()?;
    let matrix = impute_median(&vectors);

    let profiles: Vec<Vec<f64>> = pages
        .iter()
        .map(|p| {
            cumulative_profile(store, p, EventKind::Reaction)
                .map(|c| c.counts.iter().map(|&x| x as f64).collect())
                .map_err(|_| CategorizeError::UnknownPage(p.clone()))
        })
        .collect::<Result<_, _>>()?;
    let dissimilarity = dissimilarity_from_similarity(&similarity_matrix(&profiles));
    let km_options = KMedoidOptions {
        restarts: options.restarts,
        seed: options.seed,
    };
    let (k, elbow) = match options.k {
        KSelection::Fixed(k) => (k, None),
        KSelection::Elbow { min, max } => {
            let curve = choose_k(&dissimilarity, min, max.min(pages.len()), &km_options)?;
            (curve.chosen, Some(curve))
        }
    };
    let clustering = kmedoid(&dissimilarity, k, &km_options)?;
    let classes = &clustering.assignment;

    let discretization = discretize_fit(&matrix, classes)?;
    let binned = discretization.apply(&matrix);
    let all_bins: Vec<usize> = (0..FEATURE_COUNT).map(|f| discretization.bins(f)).collect();

    let (selected_features, accuracy) = if options.select_features && k >= 2 {
        let sel = wrapper_select(&binned, &all_bins, classes, options.max_features, options.epsilon)?;
        (sel.selected, sel.accuracy)
    } else {
        let selected: Vec<usize> = DEFAULT_PRIORITY
            .iter()
            .take(options.max_features.max(1))
            .map(|n| feature_index(n).ok_or_else(|| CategorizeError::UnknownFeature(n.to_string())))
            .collect::<Result<_, _>>()?;
        let accuracy = (1..=selected.len())
            .map(|m| wrapper::subset_accuracy(&binned, &all_bins, classes, k, &selected[..m]))
            .collect();
        (selected, accuracy)
    };

    let projected: Vec<Vec<usize>> = binned
        .iter()
        .map(|r| selected_features.iter().map(|&f| r[f]).collect())
        .collect();
    let bins: Vec<usize> = selected_features.iter().map(|&f| all_bins[f]).collect();
    let classifier = nb_train(&projected, &bins, classes, k)?;

    let category_labels = (0..k)
        .map(|c| {
            majority_label(
                pages
                    .iter()
                    .zip(classes)
                    .filter(|(_, &a)| a == c)
                    .map(|(p, _)| page_labels[p].as_str()),
            )
        })
        .collect();
    Ok(CategoryModel {
        k,
        medoids: clustering.medoids.iter().map(|&m| pages[m].clone()).collect(),
        assignment: pages.iter().cloned().zip(classes.iter().map(|c| c + 1)).collect(),
        page_labels,
        category_labels,
        objective: clustering.objective,
        elbow,
        selected_features,
        accuracy,
        discretization,
        classifier,
    })
}
