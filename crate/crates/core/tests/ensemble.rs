use std::sync::OnceLock;

use proptest::prelude::*;
use triage::corpus::stratified_folds;
use triage::ensemble::{default_specs, train_ensemble, vote, EnsembleModel, ResourceOptions};
use triage::eval::score_members;
use triage::gbt::TrainConfig;
use triage::synthgen::{generate, SynthConfig, SynthCorpus};
use triage::topics::LdaConfig;
use triage::SeverityLabel;

mod common;
use common::{all_vote_vectors, vote_oracle};

#[test]
fn vote_agrees_with_oracle_for_every_short_vector() {
    for m in 1..=6 {
        for v in all_vote_vectors(m) {
            assert_eq!(vote(&v).unwrap(), vote_oracle(&v), "{v:?}");
        }
    }
    assert!(vote(&[]).is_err());
}

fn label() -> impl Strategy<Value = SeverityLabel> {
    (0usize..4).prop_map(|i| SeverityLabel::from_index(i).unwrap())
}

proptest! {
    #[test]
    fn vote_ignores_member_order(v in prop::collection::vec(label(), 1..12), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut w = v.clone();
        w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(vote(&v).unwrap(), vote(&w).unwrap());
    }

    #[test]
    fn unanimous_members_win(l in label(), m in 1usize..10) {
        prop_assert_eq!(vote(&vec![l; m]).unwrap(), l);
    }
}

fn small_corpus() -> SynthCorpus {
    generate(&SynthConfig {
        seed: 4,
        n_users: 160,
        n_labeled: 600,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn opts() -> ResourceOptions {
    ResourceOptions {
        lda: LdaConfig {
            topics: 10,
            train_iters: 80,
            infer_iters: 20,
            ..LdaConfig::default()
        },
        ..ResourceOptions::default()
    }
}

fn cfg() -> TrainConfig {
    TrainConfig {
        rounds: 30,
        ..TrainConfig::default()
    }
}

fn trained() -> &'static (SynthCorpus, Vec<String>, EnsembleModel) {
    static CELL: OnceLock<(SynthCorpus, Vec<String>, EnsembleModel)> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = small_corpus();
        let (train, test) = stratified_folds(&s.corpus.labels(), 5, 1).unwrap().split(0);
        let model = train_ensemble(&s.corpus, &train, &default_specs(), &opts(), &cfg()).unwrap();
        (s, test, model)
    })
}

#[test]
fn every_default_member_beats_the_majority_class() {
    let (s, test, model) = trained();
    assert_eq!(model.members.len(), 6);
    let preds = model.predict_posts(&s.corpus, test).unwrap();
    let green = test
        .iter()
        .filter(|id| s.corpus.get(id).unwrap().label == Some(SeverityLabel::Green))
        .count();
    let majority = green as f64 / test.len() as f64;
    for (m, r) in model.members.iter().zip(score_members(&s.corpus, &preds).unwrap()) {
        assert!(r.accuracy > majority, "{}: {} vs {majority}", m.spec, r.accuracy);
        assert!(r.macro_f1_nongreen > 0.0, "{}", m.spec);
    }
}

#[test]
fn same_inputs_give_identical_ensembles() {
    let (s, _, model) = trained();
    let (train, _) = stratified_folds(&s.corpus.labels(), 5, 1).unwrap().split(0);
    let again = train_ensemble(&s.corpus, &train, &default_specs(), &opts(), &cfg()).unwrap();
    assert_eq!(serde_json::to_string(model).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn saved_model_predicts_identically() {
    let (s, _, model) = trained();
    let back: EnsembleModel = serde_json::from_str(&serde_json::to_string(model).unwrap()).unwrap();
    let ids: Vec<String> = s.corpus.posts().iter().map(|p| p.post_id.clone()).collect();
    assert_eq!(model.predict_posts(&s.corpus, &ids).unwrap(), back.predict_posts(&s.corpus, &ids).unwrap());
}

#[test]
fn training_without_labels_is_rejected() {
    let s = small_corpus();
    assert!(train_ensemble(&s.corpus, &[], &default_specs(), &opts(), &cfg()).is_err());
    assert!(train_ensemble(&s.corpus, &["p000001".into()], &[], &opts(), &cfg()).is_err());
}
