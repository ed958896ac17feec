//! Shared-task metric suite, stratified cross-validation and paired t-tests.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{stratified_folds, Corpus};
use crate::ensemble::{train_ensemble, FeatureSetSpec, Prediction, ResourceOptions};
use crate::error::{Result, TriageError};
use crate::gbt::TrainConfig;
use crate::label::SeverityLabel;

/// Rows are gold labels, columns predictions, both in class order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, gold: SeverityLabel, pred: SeverityLabel) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    /// 2x2 counts `[[tn, fp], [fn, tp]]` for a binary grouping of the classes.
    pub fn binarize(&self, positive: impl Fn(SeverityLabel) -> bool) -> [[u64; 2]; 2] {
        let mut out = [[0; 2]; 2];
        for g in SeverityLabel::ALL {
            for p in SeverityLabel::ALL {
                out[positive(g) as usize][positive(p) as usize] += self.get(g, p);
            }
        }
        out
    }
}

pub fn confusion(gold: &[SeverityLabel], pred: &[SeverityLabel]) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(TriageError::DimensionMismatch {
            expected: gold.len(),
            actual: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(TriageError::invalid("no predictions to score"));
    }
    let mut cm = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(pred) {
        cm.counts[g.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: SeverityLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: u64,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_f1_nongreen: f64,
    pub flagged_f1: f64,
    pub flagged_acc: f64,
    pub urgent_f1: f64,
    pub urgent_acc: f64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean with the 0/0 = 0 convention.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean F1 over AMBER, RED and CRISIS, given F1 per class in class order.
pub fn macro_f1_nongreen(f1: &[f64; 4]) -> f64 {
    (f1[1] + f1[2] + f1[3]) / 3.0
}

fn binary(cm: &[[u64; 2]; 2]) -> (f64, f64) {
    let tp = cm[1][1];
    let p = ratio(tp, cm[0][1] + tp);
    let r = ratio(tp, cm[1][0] + tp);
    let total = cm[0][0] + cm[0][1] + cm[1][0] + cm[1][1];
    (f1_score(p, r), ratio(cm[0][0] + tp, total))
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let mut per_class = Vec::with_capacity(4);
    let mut f1 = [0.0; 4];
    for c in SeverityLabel::ALL {
        let tp = cm.get(c, c);
        let predicted: u64 = SeverityLabel::ALL.iter().map(|&g| cm.get(g, c)).sum();
        let support: u64 = cm.counts[c.index()].iter().sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        f1[c.index()] = f1_score(precision, recall);
        per_class.push(ClassMetrics {
            label: c,
            precision,
            recall,
            f1: f1[c.index()],
            support,
        });
    }
    let n = cm.total();
    let diag: u64 = (0..4).map(|i| cm.counts[i][i]).sum();
    let (flagged_f1, flagged_acc) = binary(&cm.binarize(SeverityLabel::is_flagged));
    let (urgent_f1, urgent_acc) = binary(&cm.binarize(SeverityLabel::is_urgent));
    MetricsReport {
        n,
        per_class,
        accuracy: ratio(diag, n),
        macro_f1_nongreen: macro_f1_nongreen(&f1),
        flagged_f1,
        flagged_acc,
        urgent_f1,
        urgent_acc,
        confusion: *cm,
    }
}

/// Scores predictions against the gold labels stored in the corpus.
pub fn score_predictions(corpus: &Corpus, preds: &[Prediction]) -> Result<MetricsReport> {
    let (gold, pred) = gold_pairs(corpus, preds, |p| p.label)?;
    Ok(metrics(&confusion(&gold, &pred)?))
}

/// Per-member reports, in member order.
pub fn score_members(corpus: &Corpus, preds: &[Prediction]) -> Result<Vec<MetricsReport>> {
    let m = preds.first().map_or(0, |p| p.members.len());
    (0..m)
        .map(|i| {
            let (gold, pred) = gold_pairs(corpus, preds, |p| p.members[i])?;
            Ok(metrics(&confusion(&gold, &pred)?))
        })
        .collect()
}

fn gold_pairs(
    corpus: &Corpus,
    preds: &[Prediction],
    pick: impl Fn(&Prediction) -> SeverityLabel,
) -> Result<(Vec<SeverityLabel>, Vec<SeverityLabel>)> {
    let mut gold = Vec::with_capacity(preds.len());
    let mut pred = Vec::with_capacity(preds.len());
    for p in preds {
        let label = corpus
            .get(&p.post_id)
            .and_then(|post| post.label)
            .ok_or_else(|| TriageError::invalid(format!("post `{}` has no gold label", p.post_id)))?;
        gold.push(label);
        pred.push(pick(p));
    }
    Ok((gold, pred))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_ids: Vec<String>,
    pub report: MetricsReport,
}

/// Trains on k-1 folds and scores the held-out fold, for every fold.
pub fn cross_validate(
    corpus: &Corpus,
    specs: &[FeatureSetSpec],
    opts: &ResourceOptions,
    cfg: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<FoldResult>> {
    let folds = stratified_folds(&corpus.labels(), k, seed)?;
    (0..k)
        .map(|i| {
            let (train, test) = folds.split(i);
            log::info!("fold {}/{k}: {} train, {} test", i + 1, train.len(), test.len());
            let model = train_ensemble(corpus, &train, specs, opts, cfg)?;
            let preds = model.predict_posts(corpus, &test)?;
            Ok(FoldResult {
                fold: i,
                report: score_predictions(corpus, &preds)?,
                test_ids: test,
            })
        })
        .collect()
}

/// Mean of each headline metric across folds.
pub fn mean_report(folds: &[FoldResult]) -> Result<MetricsReport> {
    if folds.is_empty() {
        return Err(TriageError::invalid("no folds to average"));
    }
    let mut cm = ConfusionMatrix::default();
    for f in folds {
        for g in 0..4 {
            for p in 0..4 {
                cm.counts[g][p] += f.report.confusion.counts[g][p];
            }
        }
    }
    let n = folds.len() as f64;
    let avg = |get: fn(&MetricsReport) -> f64| folds.iter().map(|f| get(&f.report)).sum::<f64>() / n;
    let mut out = metrics(&cm);
    out.accuracy = avg(|r| r.accuracy);
    out.macro_f1_nongreen = avg(|r| r.macro_f1_nongreen);
    out.flagged_f1 = avg(|r| r.flagged_f1);
    out.flagged_acc = avg(|r| r.flagged_acc);
    out.urgent_f1 = avg(|r| r.urgent_f1);
    out.urgent_acc = avg(|r| r.urgent_acc);
    for c in &mut out.per_class {
        let i = c.label.index();
        c.precision = folds.iter().map(|f| f.report.per_class[i].precision).sum::<f64>() / n;
        c.recall = folds.iter().map(|f| f.report.per_class[i].recall).sum::<f64>() / n;
        c.f1 = folds.iter().map(|f| f.report.per_class[i].f1).sum::<f64>() / n;
    }
    Ok(out)
}

/// Every labeled post is held out exactly once across `folds`.
pub fn folds_partition(corpus: &Corpus, folds: &[FoldResult]) -> bool {
    let mut seen = BTreeSet::new();
    for f in folds {
        for id in &f.test_ids {
            if !seen.insert(id.as_str()) {
                return false;
            }
        }
    }
    seen.len() == corpus.labeled().count() && corpus.labeled().all(|p| seen.contains(p.post_id.as_str()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: usize,
}

/// Two-sided paired t-test on `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(TriageError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let k = a.len();
    if k < 2 {
        return Err(TriageError::invalid("paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / k as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let df = k - 1;
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTest { t: 0.0, p: 1.0, df }
        } else {
            TTest {
                t: mean.signum() * f64::INFINITY,
                p: 0.0,
                df,
            }
        });
    }
    let t = mean / (var / k as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| TriageError::invalid(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p, df })
}

/// Aligned text table of the headline metrics, one row per named report.
pub fn metrics_table(rows: &[(String, &MetricsReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}",
        "System", "Macro-F1", "Flag-F1", "Flag-Acc", "Urg-F1", "Urg-Acc"
    );
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.1}  {:>8.1}  {:>8.1}  {:>8.1}  {:>8.1}",
            name,
            100.0 * r.macro_f1_nongreen,
            100.0 * r.flagged_f1,
            100.0 * r.flagged_acc,
            100.0 * r.urgent_f1,
            100.0 * r.urgent_acc
        );
    }
    out
}

/// Per-class precision / recall / F1 table.
pub fn per_class_table(r: &MetricsReport) -> String {
    let mut out = format!("{:<8}  {:>9}  {:>6}  {:>6}  {:>7}\n", "Class", "Precision", "Recall", "F1", "Support");
    for c in &r.per_class {
        let _ = writeln!(
            out,
            "{:<8}  {:>9.1}  {:>6.1}  {:>6.1}  {:>7}",
            c.label.as_str().to_uppercase(),
            100.0 * c.precision,
            100.0 * c.recall,
            100.0 * c.f1,
            c.support
        );
    }
    out
}
