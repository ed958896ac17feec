//! LDA topic model fitted by collapsed Gibbs sampling, with fold-in
//! inference of per-post topic proportions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::textprep::{build_unigram_vocab, TokenList, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub train_iters: usize,
    pub infer_iters: usize,
    pub min_df: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 100,
            alpha: None,
            beta: 0.01,
            train_iters: 1000,
            infer_iters: 100,
            min_df: 5,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub infer_iters: usize,
    pub vocab: Vocabulary,
    /// Row-major `topics x vocab` assignment counts.
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
}

/// Per-document topic proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution(pub Vec<f64>);

impl TopicDistribution {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl LdaModel {
    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn count(&self, topic: usize, word: usize) -> u32 {
        self.topic_word[topic * self.vocab.len() + word]
    }

    pub fn topic_total(&self, topic: usize) -> u64 {
        self.topic_totals[topic]
    }

    /// Total number of token assignments held by the model.
    pub fn assigned_tokens(&self) -> u64 {
        self.topic_totals.iter().sum()
    }

    /// Smoothed word distribution of one topic.
    pub fn topic_word_distribution(&self, topic: usize) -> Vec<f64> {
        let v = self.vocab.len();
        let denom = self.topic_totals[topic] as f64 + v as f64 * self.beta;
        (0..v).map(|w| (self.count(topic, w) as f64 + self.beta) / denom).collect()
    }

    /// Every row of the count matrix sums to its topic total.
    pub fn is_consistent(&self) -> bool {
        let v = self.vocab.len();
        self.topic_totals.len() == self.topics
            && self.topic_word.len() == self.topics * v
            && (0..self.topics).all(|k| {
                self.topic_word[k * v..(k + 1) * v].iter().map(|&c| c as u64).sum::<u64>() == self.topic_totals[k]
            })
    }

    /// Most probable words of a topic, for inspection.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<&str> {
        let v = self.vocab.len();
        let mut idx: Vec<usize> = (0..v).collect();
        idx.sort_by(|&a, &b| self.count(topic, b).cmp(&self.count(topic, a)).then(a.cmp(&b)));
        idx.into_iter().take(n).filter_map(|w| self.vocab.term(w)).collect()
    }

    fn word_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.vocab.get(t)).collect()
    }
}

fn sample(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Fit a topic model on `docs` (stopword-filtered token lists).
pub fn lda_train(docs: &[TokenList], cfg: &LdaConfig) -> Result<LdaModel> {
    if cfg.topics == 0 {
        return Err(TriageError::invalid("topic count must be at least 1"));
    }
    if cfg.train_iters == 0 {
        return Err(TriageError::invalid("training needs at least one Gibbs sweep"));
    }
    if docs.is_empty() {
        return Err(TriageError::invalid("no documents to train on"));
    }
    let vocab = build_unigram_vocab(docs, cfg.min_df)?;
    if vocab.is_empty() {
        return Err(TriageError::invalid(format!(
            "no term reaches document frequency {}",
            cfg.min_df
        )));
    }
    let k = cfg.topics;
    let v = vocab.len();
    let alpha = cfg.alpha();
    let beta = cfg.beta;
    let v_beta = v as f64 * beta;

    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| vocab.get(t)).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut topic_word = vec![0u32; k * v];
    let mut totals = vec![0u64; k];
    let mut doc_topic: Vec<Vec<u32>> = vec![vec![0; k]; words.len()];
    let mut assign: Vec<Vec<usize>> = Vec::with_capacity(words.len());
    for (d, ws) in words.iter().enumerate() {
        let mut z = Vec::with_capacity(ws.len());
        for &w in ws {
            let t = rng.gen_range(0..k);
            topic_word[t * v + w] += 1;
            totals[t] += 1;
            doc_topic[d][t] += 1;
            z.push(t);
        }
        assign.push(z);
    }

    let mut weights = vec![0.0; k];
    for _ in 0..cfg.train_iters {
        for (d, ws) in words.iter().enumerate() {
            let nd = &mut doc_topic[d];
            for (i, &w) in ws.iter().enumerate() {
                let old = assign[d][i];
                topic_word[old * v + w] -= 1;
                totals[old] -= 1;
                nd[old] -= 1;
                for (t, wt) in weights.iter_mut().enumerate() {
                    *wt = (nd[t] as f64 + alpha) * (topic_word[t * v + w] as f64 + beta)
                        / (totals[t] as f64 + v_beta);
                }
                let new = sample(&mut rng, &weights);
                topic_word[new * v + w] += 1;
                totals[new] += 1;
                nd[new] += 1;
                assign[d][i] = new;
            }
        }
    }

    Ok(LdaModel {
        topics: k,
        alpha,
        beta,
        seed: cfg.seed,
        iterations: cfg.train_iters,
        infer_iters: cfg.infer_iters,
        vocab,
        topic_word,
        topic_totals: totals,
    })
}

/// Fold-in Gibbs sampling of one document against frozen topic-word counts.
///
/// Returns `(n_k + alpha) / (N + K alpha)` from the final sweep; documents
/// with no in-vocabulary token get the uniform prior.
pub fn lda_infer(model: &LdaModel, tokens: &[String], iters: usize, seed: u64) -> TopicDistribution {
    let k = model.topics;
    let v = model.vocab.len();
    let ws = model.word_ids(tokens);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nd = vec![0u32; k];
    let mut z: Vec<usize> = ws
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            nd[t] += 1;
            t
        })
        .collect();
    let v_beta = v as f64 * model.beta;
    let mut weights = vec![0.0; k];
    for _ in 0..iters {
        for (i, &w) in ws.iter().enumerate() {
            nd[z[i]] -= 1;
            for (t, wt) in weights.iter_mut().enumerate() {
                *wt = (nd[t] as f64 + model.alpha) * (model.topic_word[t * v + w] as f64 + model.beta)
                    / (model.topic_totals[t] as f64 + v_beta);
            }
            z[i] = sample(&mut rng, &weights);
            nd[z[i]] += 1;
        }
    }
    let denom = ws.len() as f64 + k as f64 * model.alpha;
    TopicDistribution(nd.iter().map(|&n| (n as f64 + model.alpha) / denom).collect())
}
