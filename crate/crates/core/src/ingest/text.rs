//! Tokenization, stop-word removal and light suffix-stripping stemming.

use std::collections::BTreeSet;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// A set of terms removed before and after stemming.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StopWords {
    terms: BTreeSet<String>,
}

impl StopWords {
    /// The shipped English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let terms = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { terms }
    }

    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            terms: terms.into_iter().map(|t| t.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Lowercase stemmed terms with stop-words removed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenList {
    tokens: Vec<String>,
}

impl TokenList {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn extend(&mut self, other: TokenList) {
        self.tokens.extend(other.tokens);
    }

    /// Space-joined tokens.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Lowercase, split on non-alphanumeric characters, drop stop-words, stem.
///
/// Stop-words are filtered both before and after stemming so the output never
/// contains a listed term, and the stemmer is run to a fixed point, which makes
/// the whole transformation idempotent on its own (space-joined) output.
pub fn preprocess_text(raw: &str, stopwords: &StopWords) -> TokenList {
    let lowered = raw.to_lowercase();
    let tokens = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !stopwords.contains(t))
        .map(stem)
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .collect();
    TokenList { tokens }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(is_vowel)
}

/// Drops a doubled final consonant ("runn" -> "run"), except l/s/z.
fn undouble(mut s: String) -> String {
    let mut rev = s.chars().rev();
    if let (Some(a), Some(b)) = (rev.next(), rev.next()) {
        if a == b && !is_vowel(a) && !matches!(a, 'l' | 's' | 'z') && a.is_alphabetic() {
            s.pop();
        }
    }
    s
}

fn strip_once(word: &str) -> Option<String> {
    let n = word.chars().count();
    if n <= 3 {
        return None;
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return Some(format!("{stem}ss"));
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.chars().count() >= 2 {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.chars().count() >= 3 && has_vowel(stem) {
            return Some(undouble(stem.to_string()));
        }
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if stem.chars().count() >= 3 && has_vowel(stem) {
            return Some(undouble(stem.to_string()));
        }
    }
    if let Some(stem) = word.strip_suffix("ly") {
        if stem.chars().count() >= 3 && has_vowel(stem) {
            return Some(stem.to_string());
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if !stem.ends_with(['s', 'u', 'i']) {
            return Some(stem.to_string());
        }
    }
    None
}

/// Suffix-stripping stemmer applied until no rule fires.
pub fn stem(word: &str) -> String {
    let mut current = word.to_string();
    while let Some(next) = strip_once(&current) {
        if next == current {
            break;
        }
        current = next;
    }
    current
}
