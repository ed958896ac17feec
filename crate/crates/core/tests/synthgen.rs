use std::collections::BTreeSet;

use triage::analytics::{user_histories, SeverityScale};
use triage::corpus::parse_corpus;
use triage::synthgen::{generate, MarkerSet, SynthConfig};
use triage::textprep::raw_tokens;
use triage::SeverityLabel;

#[test]
fn label_proportions_stay_within_two_points() {
    let target = [0.60, 0.25, 0.12, 0.03];
    for seed in 0..5 {
        let s = generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let labels = s.corpus.labels();
        assert_eq!(labels.len(), 1188);
        for (class, p) in SeverityLabel::ALL.iter().zip(target) {
            let share = labels.values().filter(|l| *l == class).count() as f64 / 1188.0;
            assert!((share - p).abs() <= 0.02, "seed {seed} {class}: {share}");
        }
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let a = generate(&SynthConfig::default()).unwrap();
    let b = generate(&SynthConfig::default()).unwrap();
    assert_eq!(a.corpus.to_jsonl().unwrap(), b.corpus.to_jsonl().unwrap());
    assert_eq!(a.vectors.to_tsv(), b.vectors.to_tsv());
    let c = generate(&SynthConfig {
        seed: 1,
        ..SynthConfig::default()
    })
    .unwrap();
    assert_ne!(a.corpus.to_jsonl().unwrap(), c.corpus.to_jsonl().unwrap());
}

#[test]
fn output_passes_corpus_invariants() {
    let s = generate(&SynthConfig::default()).unwrap();
    let (back, skipped) = parse_corpus(&s.corpus.to_jsonl().unwrap()).unwrap();
    assert!(skipped.is_empty());
    assert_eq!(back.len(), s.corpus.len());
    let ids: BTreeSet<&str> = back.posts().iter().map(|p| p.post_id.as_str()).collect();
    assert_eq!(ids.len(), back.len());
    for tid in back.thread_ids() {
        let t = back.thread_of(tid).unwrap();
        assert!(t.posts.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }
}

#[test]
fn declining_users_have_negative_trends() {
    let mut total = 0;
    let mut negative = 0;
    for seed in 0..3 {
        let s = generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        for u in user_histories(&s.corpus, &s.truth) {
            if s.declining_users.contains(&u.author_id) {
                total += 1;
                negative += u.trend(SeverityScale::FineGrained).is_ok_and(|t| t.m < 0.0) as usize;
            }
        }
    }
    assert!(total > 20);
    assert!(negative as f64 >= 0.95 * total as f64, "{negative}/{total}");
}

fn marker_count(body: &str, set: &MarkerSet) -> usize {
    let tokens = raw_tokens(body);
    let single = tokens
        .iter()
        .filter(|t| set.words.contains(t) || set.prefixes.iter().any(|p| t.starts_with(p.as_str())))
        .count();
    let phrases = set.phrases.iter().map(|ph| body.to_lowercase().matches(ph.as_str()).count()).sum::<usize>();
    single + phrases
}

/// Best accuracy of `count >= t` over all thresholds, for class-vs-rest.
fn best_stump(rows: &[(usize, bool)]) -> f64 {
    let max = rows.iter().map(|r| r.0).max().unwrap_or(0);
    (0..=max + 1)
        .map(|t| rows.iter().filter(|(c, pos)| (*c >= t) == *pos).count() as f64 / rows.len() as f64)
        .fold(0.0, f64::max)
}

#[test]
fn marker_counts_separate_each_class() {
    let cfg = SynthConfig::default();
    let s = generate(&cfg).unwrap();
    let labeled: Vec<_> = s.corpus.labeled().collect();
    for class in SeverityLabel::ALL {
        let rows: Vec<(usize, bool)> = labeled
            .iter()
            .map(|p| (marker_count(&p.body, &cfg.markers[class.index()]), p.label == Some(class)))
            .collect();
        let positives = rows.iter().filter(|r| r.1).count() as f64 / rows.len() as f64;
        let majority = positives.max(1.0 - positives);
        let acc = best_stump(&rows);
        assert!(acc > 0.6, "{class}: {acc}");
        assert!(acc > majority, "{class}: stump {acc} vs majority {majority}");
    }
}
