//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triage::analytics::MonthlyPoint;
use triage::gbt::{FeatureMatrix, TrainConfig};
use triage::topics::LdaModel;
use triage::SeverityLabel;

/// Exhaustive root split: every feature, every midpoint between consecutive
/// distinct values, first strictly-best candidate wins.
pub fn brute_force_split(rows: &[Vec<f64>], g: &[f64], h: &[f64], cfg: &TrainConfig) -> Option<(usize, f64, f64)> {
    let gt: f64 = g.iter().sum();
    let ht: f64 = h.iter().sum();
    let score = |g: f64, h: f64| g * g / (h + cfg.lambda);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..rows[0].len() {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (mut gl, mut hl) = (0.0, 0.0);
            for (i, r) in rows.iter().enumerate() {
                if r[f] < thr {
                    gl += g[i];
                    hl += h[i];
                }
            }
            let (gr, hr) = (gt - gl, ht - hl);
            if hl < cfg.min_child_weight || hr < cfg.min_child_weight {
                continue;
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gt, ht)) - cfg.gamma;
            if gain > 0.0 && best.is_none_or(|b| gain > b.2) {
                best = Some((f, thr, gain));
            }
        }
    }
    best
}

pub fn gain_of(rows: &[Vec<f64>], g: &[f64], h: &[f64], f: usize, thr: f64, cfg: &TrainConfig) -> f64 {
    let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
    let (mut gl, mut hl) = (0.0, 0.0);
    for (i, r) in rows.iter().enumerate() {
        if r[f] < thr {
            gl += g[i];
            hl += h[i];
        }
    }
    let score = |g: f64, h: f64| g * g / (h + cfg.lambda);
    0.5 * (score(gl, hl) + score(gt - gl, ht - hl) - score(gt, ht)) - cfg.gamma
}

pub fn random_problem(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| match rng.gen_range(0..4) {
                    0 => 0.0,
                    1 => rng.gen_range(-3..4) as f64,
                    _ => rng.gen_range(-2.0..2.0),
                })
                .collect()
        })
        .collect();
    let g = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = (0..n).map(|_| rng.gen_range(0.01..0.25)).collect();
    (rows, g, h)
}

pub fn noisy_multiclass(seed: u64, n: usize) -> (FeatureMatrix, Vec<SeverityLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let c = rng.gen_range(0..4);
        rows.push((0..5).map(|j| if j == c % 5 { rng.gen_range(0.0..2.0) } else { rng.gen_range(0.0..1.5) }).collect());
        y.push(SeverityLabel::from_index(c).unwrap());
    }
    (FeatureMatrix::from_dense(&rows).unwrap(), y)
}

pub const WORDS_PER_TOPIC: usize = 12;

/// Three topics over disjoint vocabularies; each document draws 85% of its
/// tokens from one dominant topic and the rest from the others.
pub fn planted_corpus(n_docs: usize, seed: u64) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut dominant = Vec::new();
    for d in 0..n_docs {
        let main = d % 3;
        let doc = (0..40)
            .map(|_| {
                let topic = if rng.gen_bool(0.85) { main } else { rng.gen_range(0..3) };
                format!("t{topic}w{}", rng.gen_range(0..WORDS_PER_TOPIC))
            })
            .collect();
        docs.push(doc);
        dominant.push(main);
    }
    (docs, dominant)
}

fn planted_distribution(model: &LdaModel, topic: usize) -> Vec<f64> {
    (0..model.vocab_len())
        .map(|w| {
            let term = model.vocab.term(w).unwrap();
            if term.starts_with(&format!("t{topic}w")) {
                1.0 / WORDS_PER_TOPIC as f64
            } else {
                0.0
            }
        })
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Best alignment of learned to planted topics by enumerating all 3! maps.
pub fn best_alignment(model: &LdaModel) -> (Vec<usize>, Vec<f64>) {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let learned: Vec<Vec<f64>> = (0..3).map(|k| model.topic_word_distribution(k)).collect();
    let planted: Vec<Vec<f64>> = (0..3).map(|k| planted_distribution(model, k)).collect();
    perms
        .iter()
        .map(|p| {
            let sims: Vec<f64> = (0..3).map(|j| cosine(&learned[p[j]], &planted[j])).collect();
            (p.to_vec(), sims)
        })
        .max_by(|a, b| {
            let sa: f64 = a.1.iter().sum();
            let sb: f64 = b.1.iter().sum();
            sa.partial_cmp(&sb).unwrap()
        })
        .unwrap()
}

/// Most votes wins; among tied labels the most severe wins.
pub fn vote_oracle(votes: &[SeverityLabel]) -> SeverityLabel {
    let count = |l: SeverityLabel| votes.iter().filter(|&&v| v == l).count();
    let top = SeverityLabel::ALL.iter().map(|&l| count(l)).max().unwrap();
    *SeverityLabel::ALL.iter().rev().find(|&&l| count(l) == top).unwrap()
}

/// Every vote vector of length `m` over the four labels.
pub fn all_vote_vectors(m: usize) -> Vec<Vec<SeverityLabel>> {
    (0..4usize.pow(m as u32))
        .map(|mut code| {
            (0..m)
                .map(|_| {
                    let l = SeverityLabel::from_index(code % 4).unwrap();
                    code /= 4;
                    l
                })
                .collect()
        })
        .collect()
}

/// Least squares through the normal equations, computed from raw sums.
pub fn closed_form_fit(p: &[MonthlyPoint]) -> (f64, f64, f64) {
    let n = p.len() as f64;
    let sx: f64 = p.iter().map(|q| q.x).sum();
    let sy: f64 = p.iter().map(|q| q.y).sum();
    let sxx: f64 = p.iter().map(|q| q.x * q.x).sum();
    let syy: f64 = p.iter().map(|q| q.y * q.y).sum();
    let sxy: f64 = p.iter().map(|q| q.x * q.y).sum();
    let m = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let b = (sy - m * sx) / n;
    let vy = n * syy - sy * sy;
    let r = if vy <= 0.0 { 0.0 } else { (n * sxy - sx * sy) / ((n * sxx - sx * sx) * vy).sqrt() };
    (m, b, r)
}
