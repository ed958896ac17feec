//! Train the six-member voting ensemble on a synthetic forum and compare it
//! with a bag-of-words model on a held-out fifth of the labeled posts.
//!
//! Run with `--release`; training takes well under a minute.

use std::time::Instant;

use triage::corpus::stratified_folds;
use triage::ensemble::{default_specs, train_ensemble, FeatureSetSpec, ResourceOptions};
use triage::eval::{metrics_table, per_class_table, score_members, score_predictions};
use triage::gbt::TrainConfig;
use triage::synthgen::{generate, SynthConfig};
use triage::topics::LdaConfig;

fn main() -> triage::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let t0 = Instant::now();
    let s = generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    let c = &s.corpus;
    let (train, test) = stratified_folds(&c.labels(), 5, seed)?.split(0);
    println!("{} posts, {} labeled, {} held out", c.len(), c.labeled().count(), test.len());

    let opts = ResourceOptions {
        lda: LdaConfig {
            topics: 20,
            train_iters: 200,
            infer_iters: 30,
            ..LdaConfig::default()
        },
        ..ResourceOptions::default()
    };
    let cfg = TrainConfig::default();
    let ens = train_ensemble(c, &train, &default_specs(), &opts, &cfg)?;
    let preds = ens.predict_posts(c, &test)?;
    let er = score_predictions(c, &preds)?;
    let members = score_members(c, &preds)?;
    let bow = train_ensemble(c, &train, &[FeatureSetSpec::body_only()], &opts, &cfg)?;
    let br = score_predictions(c, &bow.predict_posts(c, &test)?)?;

    let mut rows = vec![("bag of words".to_string(), &br), ("ensemble".to_string(), &er)];
    for (m, r) in ens.members.iter().zip(&members) {
        rows.push((format!("  {}", m.spec), r));
    }
    print!("{}", metrics_table(&rows));
    println!("\nensemble per class");
    print!("{}", per_class_table(&er));
    println!("\n{:.1}s", t0.elapsed().as_secs_f64());
    Ok(())
}
