//! Stratified 10-fold cross-validation of a feature-rich single model against
//! the bag-of-words baseline, with a paired t-test over folds.

use triage::ensemble::{FeatureGroup, FeatureSetSpec, ResourceOptions};
use triage::eval::{cross_validate, mean_report, metrics_table, paired_ttest};
use triage::gbt::TrainConfig;
use triage::synthgen::{generate, SynthConfig};

fn main() -> triage::Result<()> {
    let s = generate(&SynthConfig {
        n_users: 200,
        n_labeled: 600,
        ..SynthConfig::default()
    })?;
    let opts = ResourceOptions::default();
    let cfg = TrainConfig {
        rounds: 40,
        ..TrainConfig::default()
    };
    use FeatureGroup::*;
    let rich = FeatureSetSpec::new(vec![Body, Context, LastSentence, Liwc, Emotion, Clue])?;
    let model = cross_validate(&s.corpus, &[rich], &opts, &cfg, 10, 0)?;
    let base = cross_validate(&s.corpus, &[FeatureSetSpec::body_only()], &opts, &cfg, 10, 0)?;

    let (mm, bm) = (mean_report(&model)?, mean_report(&base)?);
    print!("{}", metrics_table(&[("bag of words".into(), &bm), ("rich features".into(), &mm)]));

    let a: Vec<f64> = model.iter().map(|f| f.report.macro_f1_nongreen).collect();
    let b: Vec<f64> = base.iter().map(|f| f.report.macro_f1_nongreen).collect();
    let t = paired_ttest(&a, &b)?;
    println!("\nmacro F1 over folds: t = {:.2}, df = {}, p = {:.2e}", t.t, t.df, t.p);
    Ok(())
}
