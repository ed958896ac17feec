//! Tokenization, sentence splitting, and unigram+bigram bag-of-words vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};

pub type TokenList = Vec<String>;

pub const DEFAULT_MIN_DF: usize = 2;

/// English function words removed before bag-of-words construction.
const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves", "im", "ive", "dont", "s", "t", "d", "ll", "m", "re", "ve",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Stopwords(HashSet<String>);

impl From<Vec<String>> for Stopwords {
    fn from(terms: Vec<String>) -> Self {
        Self::from_terms(terms)
    }
}

impl From<Stopwords> for Vec<String> {
    fn from(s: Stopwords) -> Self {
        s.terms()
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self(DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect())
    }
}

impl Stopwords {
    pub fn none() -> Self {
        Self(HashSet::new())
    }

    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(terms.into_iter().map(|t| t.as_ref().trim().to_lowercase()).collect())
    }

    /// One lowercase term per line; blank lines ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        Ok(Self::from_terms(text.lines().filter(|l| !l.trim().is_empty())))
    }

    /// Terms in sorted order.
    pub fn terms(&self) -> Vec<String> {
        let mut v: Vec<String> = self.0.iter().cloned().collect();
        v.sort();
        v
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercased alphanumeric runs with stopwords removed.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> TokenList {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Tokens with nothing removed, as consumed by the lexicon features.
pub fn raw_tokens(text: &str) -> TokenList {
    tokenize(text, &Stopwords::none())
}

pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some(&(_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                let end = i + c.len_utf8();
                push_sentence(&mut out, &text[start..end]);
                start = end;
            }
        }
    }
    push_sentence(&mut out, &text[start..]);
    out
}

fn push_sentence(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_owned());
    }
}

fn ngrams(tokens: &[String]) -> impl Iterator<Item = String> + '_ {
    tokens
        .iter()
        .cloned()
        .chain(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])))
}

/// Unigram and bigram index; bigrams are stored as `"a b"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    min_df: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    min_df: usize,
    terms: Vec<String>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            terms: r.terms,
            min_df: r.min_df,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            min_df: v.min_df,
            terms: v.terms,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, idx: usize) -> Option<&str> {
        self.terms.get(idx).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Unigram-only view, used by the topic model.
    pub fn unigrams_only(&self) -> Vocabulary {
        let terms: Vec<String> = self.terms.iter().filter(|t| !t.contains(' ')).cloned().collect();
        VocabularyRepr {
            min_df: self.min_df,
            terms,
        }
        .into()
    }
}

pub fn build_vocab(docs: &[TokenList], min_df: usize) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(TriageError::invalid("min_df must be at least 1"));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<String> = ngrams(doc).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, _)| t)
        .collect();
    Ok(VocabularyRepr { min_df, terms }.into())
}

/// Unigram-only vocabulary (used for topic modelling).
pub fn build_unigram_vocab(docs: &[TokenList], min_df: usize) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(TriageError::invalid("min_df must be at least 1"));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, _)| t.to_owned())
        .collect();
    Ok(VocabularyRepr { min_df, terms }.into())
}

/// Sparse vector with strictly increasing indices and positive finite weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.entries
            .binary_search_by_key(&idx, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }
}

/// Raw term counts of every in-vocabulary unigram and bigram.
pub fn bow_vector(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for term in ngrams(tokens) {
        if let Some(i) = vocab.get(&term) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    SparseVector {
        dim: vocab.len(),
        entries: counts.into_iter().collect(),
    }
}
