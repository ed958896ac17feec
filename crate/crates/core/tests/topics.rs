use triage::topics::{lda_infer, lda_train, LdaConfig};

mod common;
use common::{best_alignment, planted_corpus};

#[test]
fn planted_topics_are_recovered() {
    let (docs, _) = planted_corpus(300, 11);
    let cfg = LdaConfig {
        topics: 3,
        train_iters: 500,
        infer_iters: 50,
        min_df: 1,
        seed: 5,
        ..LdaConfig::default()
    };
    let model = lda_train(&docs, &cfg).unwrap();
    assert!(model.is_consistent());
    assert_eq!(model.assigned_tokens(), 300 * 40);

    let (perm, sims) = best_alignment(&model);
    for s in &sims {
        assert!(*s >= 0.8, "cosines {sims:?}");
    }

    // planted topic j was learned as topic perm[j]
    let (probe, probe_topic) = planted_corpus(30, 99);
    let mut hits = 0;
    for (doc, &main) in probe.iter().zip(&probe_topic) {
        let theta = lda_infer(&model, doc, cfg.infer_iters, 1);
        assert!((theta.0.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(theta.0.iter().all(|&p| p >= 0.0));
        if theta.argmax() == perm[main] {
            hits += 1;
        }
    }
    assert_eq!(hits, probe.len());
}
