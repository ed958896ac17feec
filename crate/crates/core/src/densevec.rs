//! Precomputed sentence vectors (e.g. skip-thought encodings produced
//! offline) and their per-post averages.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::corpus::SkippedLine;
use crate::error::{Result, TriageError};

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct VectorStore {
    dim: Option<usize>,
    vectors: BTreeMap<String, BTreeMap<usize, Vec<f64>>>,
    #[serde(skip)]
    missing: AtomicUsize,
}

impl Clone for VectorStore {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            vectors: self.vectors.clone(),
            missing: AtomicUsize::new(self.missing.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for VectorStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vectors == other.vectors
    }
}

impl VectorStore {
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Number of stored sentence vectors.
    pub fn len(&self) -> usize {
        self.vectors.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, post_id: &str, sentence: usize, v: Vec<f64>) -> Result<()> {
        match self.dim {
            Some(d) if d != v.len() => {
                return Err(TriageError::DimensionMismatch {
                    expected: d,
                    actual: v.len(),
                })
            }
            None => self.dim = Some(v.len()),
            _ => {}
        }
        self.vectors.entry(post_id.to_owned()).or_default().insert(sentence, v);
        Ok(())
    }

    /// Posts for which [`post_vector`] fell back to zeros.
    pub fn missing_count(&self) -> usize {
        self.missing.load(Ordering::Relaxed)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (post, sentences) in &self.vectors {
            for (i, v) in sentences {
                let joined: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                out.push_str(&format!("{post}\t{i}\t{}\n", joined.join(",")));
            }
        }
        out
    }
}

/// Parse `post_id<TAB>sentence_index<TAB>v1,...,vd` rows.
///
/// Rows that cannot be parsed are skipped and reported; a row whose dimension
/// disagrees with earlier rows is an error.
pub fn parse_sentence_vectors(text: &str) -> Result<(VectorStore, Vec<SkippedLine>)> {
    let mut store = VectorStore::default();
    let mut skipped = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = (|| {
            let mut fields = line.split('\t');
            let (Some(id), Some(idx), Some(vals), None) = (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err("expected 3 tab-separated fields".to_string());
            };
            let idx: usize = idx.trim().parse().map_err(|_| format!("bad sentence index `{idx}`"))?;
            let v = vals
                .split(',')
                .map(|x| x.trim().parse::<f64>().ok().filter(|f| f.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| "bad vector component".to_string())?;
            if v.is_empty() {
                return Err("empty vector".to_string());
            }
            Ok((id.trim().to_owned(), idx, v))
        })();
        match parsed {
            Ok((id, idx, v)) => store.insert(&id, idx, v)?,
            Err(reason) => {
                log::warn!("sentence vectors line {}: {reason}", n + 1);
                skipped.push(SkippedLine { line: n + 1, reason });
            }
        }
    }
    Ok((store, skipped))
}

pub fn load_sentence_vectors(path: impl AsRef<Path>) -> Result<(VectorStore, Vec<SkippedLine>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
    parse_sentence_vectors(&text)
}

/// Mean of the post's sentence vectors among indexes `0..n_sentences`; zeros
/// when none are stored.
pub fn post_vector(store: &VectorStore, post_id: &str, n_sentences: usize) -> Vec<f64> {
    let dim = store.dim.unwrap_or(0);
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    if let Some(sentences) = store.vectors.get(post_id) {
        for v in sentences.range(..n_sentences.max(1)).map(|(_, v)| v) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n == 0 {
        store.missing.fetch_add(1, Ordering::Relaxed);
        return sum;
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    sum
}
