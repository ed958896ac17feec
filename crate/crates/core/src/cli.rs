//! The `triage` command line. `main.rs` only forwards to [`run`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytics::{
    chi_square, contingency_table_text, first_last_table, goodness_of_fit, months_active_table, response_stats,
    response_table, trend_summary, trend_table, trends_csv, user_histories, user_trends, ChiSquare, GoodnessOfFit,
    SeverityScale, TableScheme, TrendLine, TrendSummary,
};
use crate::corpus::{load_corpus, Corpus};
use crate::densevec::load_sentence_vectors;
use crate::ensemble::{
    ablation_ladder, default_specs, load_specs, single_model_spec, train_ensemble, vote, FeatureGroup, FeatureSetSpec,
    Prediction, ResourceOptions,
};
use crate::error::{Result, TriageError};
use crate::eval::{
    cross_validate, mean_report, metrics_table, paired_ttest, per_class_table, score_members, score_predictions,
    MetricsReport, TTest,
};
use crate::gbt::TrainConfig;
use crate::model::{Holdout, ModelContainer, FORMAT_VERSION};
use crate::psychfeat::Lexicons;
use crate::synthgen::{generate, SynthConfig};
use crate::textprep::{tokenize, Stopwords, DEFAULT_MIN_DF};
use crate::topics::{lda_train, LdaConfig, LdaModel};
use crate::SeverityLabel;

#[derive(Debug, Parser)]
#[command(name = "triage", version, about = "Severity triage for mental-health forum posts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus
    Synth(SynthArgs),
    /// Fit a topic model on every post of a corpus
    LdaTrain(LdaTrainArgs),
    /// Train a single model or an ensemble
    Train(TrainArgs),
    /// Predict severities with a trained model
    Predict(PredictArgs),
    /// Score a trained model on a labeled split
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation
    Cv(CvArgs),
    /// Cumulative feature-addition ladder on the held-out split
    Ablate(AblateArgs),
    /// Per-user severity trend lines
    Trends(TrendsArgs),
    /// First/last contingency tables with chi-square tests
    Tables(SeverityArgs),
    /// Moderator first-response statistics
    Respstats(SeverityArgs),
    /// Show member votes and the voted label
    VoteDebug(VoteArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LabelSource {
    Gold,
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Split {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct FeatureArgs {
    /// Preceding other-author posts used as thread context
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Add posting-time bucket features to the metadata group
    #[arg(long)]
    temporal: bool,
    /// Topic count K
    #[arg(long, default_value_t = 100)]
    topics: usize,
    #[arg(long, default_value_t = 1000)]
    lda_iters: usize,
    #[arg(long, default_value_t = 100)]
    infer_iters: usize,
    /// Use this topic model (from `lda-train`) instead of fitting one
    #[arg(long)]
    lda: Option<PathBuf>,
    #[arg(long)]
    lexicon_dir: Option<PathBuf>,
    /// Sentence vector file for the densevec group
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// One stopword per line; defaults to the built-in English list
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_DF)]
    min_df: usize,
}

#[derive(Debug, Args)]
struct BoostArgs {
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 0.3)]
    eta: f64,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Train the default six-member ensemble
    #[arg(long)]
    ensemble: bool,
    /// JSON list of feature sets, one ensemble member each
    #[arg(long)]
    specs: Option<PathBuf>,
    /// Comma-separated groups of a single model
    #[arg(long, conflicts_with_all = ["ensemble", "specs"])]
    groups: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus JSONL output
    #[arg(long)]
    out: PathBuf,
    /// Also write sentence vectors here
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Also write the bundled lexicon files into this directory
    #[arg(long)]
    lexicon_dir: Option<PathBuf>,
    /// Also write true severities and declining users here
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    labeled: Option<usize>,
    #[arg(long)]
    months: Option<u32>,
}

#[derive(Debug, Args)]
struct LdaTrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Topic model JSON output
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    topics: usize,
    #[arg(long, default_value_t = 1000)]
    lda_iters: usize,
    #[arg(long, default_value_t = 100)]
    infer_iters: usize,
    #[arg(long, default_value_t = 5)]
    min_df: usize,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Print this many top words per topic
    #[arg(long, default_value_t = 0)]
    top: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Model JSON output
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `train` holds out fold 0 of a stratified 5-fold split; `all` uses every labeled post
    #[arg(long, value_enum, default_value_t = Split::Train)]
    split: Split,
    #[command(flatten)]
    specs: SpecArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    boost: BoostArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Sentence vectors, if the model uses the densevec group
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    split: Split,
    /// Split seed for models trained on every labeled post
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also cross-validate the body-only model and t-test against it
    #[arg(long)]
    baseline: bool,
    #[command(flatten)]
    specs: SpecArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    boost: BoostArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    boost: BoostArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct SeverityArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Needed for `--labels predicted`
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LabelSource::Predicted)]
    labels: LabelSource,
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct TrendsArgs {
    #[command(flatten)]
    common: SeverityArgs,
    /// Only count lines with |slope| above this; default reports the standard ladder
    #[arg(long)]
    threshold: Option<f64>,
    /// Write per-user fine-grained trend lines as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VoteArgs {
    /// Member labels to vote over, e.g. RED RED GREEN
    labels: Vec<SeverityLabel>,
    #[arg(long, requires_all = ["corpus", "post"])]
    model: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    post: Option<String>,
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

/// Parses `args` (program name first), runs the subcommand and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::LdaTrain(a) => lda_train_cmd(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Cv(a) => cv(a),
        Command::Ablate(a) => ablate(a),
        Command::Trends(a) => trends(a),
        Command::Tables(a) => tables(a),
        Command::Respstats(a) => respstats(a),
        Command::VoteDebug(a) => vote_debug(a),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| TriageError::io(path, e))
}

fn emit<T: Serialize>(r: &ReportArgs, value: &T, table: impl FnOnce() -> String) -> Result<()> {
    let text = match r.format {
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
        Format::Table => table(),
    };
    match &r.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let (corpus, skipped) = load_corpus(path)?;
    if !skipped.is_empty() {
        log::warn!("{}: skipped {} malformed lines", path.display(), skipped.len());
    }
    Ok(corpus)
}

fn read_stopwords(path: Option<&Path>) -> Result<Stopwords> {
    path.map_or_else(|| Ok(Stopwords::default()), Stopwords::load)
}

fn read_vectors(path: &Path) -> Result<crate::densevec::VectorStore> {
    let (store, skipped) = load_sentence_vectors(path)?;
    if !skipped.is_empty() {
        log::warn!("{}: skipped {} malformed lines", path.display(), skipped.len());
    }
    Ok(store)
}

fn load_model(path: &Path, vectors: Option<&Path>) -> Result<ModelContainer> {
    let mut c = ModelContainer::load(path)?;
    if let Some(v) = vectors {
        c.model.resources.vectors = Some(read_vectors(v)?);
    }
    Ok(c)
}

fn resource_options(f: &FeatureArgs, seed: u64) -> Result<ResourceOptions> {
    let lexicons = match &f.lexicon_dir {
        Some(dir) => Lexicons::load_dir(dir)?,
        None => Lexicons::demo(),
    };
    let pretrained_lda = match &f.lda {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| TriageError::io(p, e))?;
            Some(serde_json::from_str::<LdaModel>(&text)?)
        }
        None => None,
    };
    Ok(ResourceOptions {
        stopwords: read_stopwords(f.stopwords.as_deref())?,
        min_df: f.min_df,
        lexicons,
        lda: LdaConfig {
            topics: f.topics,
            train_iters: f.lda_iters,
            infer_iters: f.infer_iters,
            seed,
            ..LdaConfig::default()
        },
        pretrained_lda,
        vectors: f.vectors.as_deref().map(read_vectors).transpose()?,
        context: crate::contextfeat::ContextConfig {
            window_size: f.window,
            include_temporal: f.temporal,
            ..Default::default()
        },
    })
}

fn train_config(b: &BoostArgs, seed: u64) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        eta: b.eta,
        max_depth: b.max_depth,
        rounds: b.rounds,
        seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_specs(s: &SpecArgs) -> Result<Vec<FeatureSetSpec>> {
    if let Some(p) = &s.specs {
        return load_specs(p);
    }
    if s.ensemble {
        return Ok(default_specs());
    }
    match &s.groups {
        Some(list) => {
            let groups = list
                .split(',')
                .map(|g| g.trim().parse::<FeatureGroup>())
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![FeatureSetSpec::new(groups)?])
        }
        None => Ok(vec![single_model_spec()]),
    }
}

/// Ids of every post written by a forum member.
fn member_post_ids(corpus: &Corpus) -> Vec<String> {
    corpus
        .posts()
        .iter()
        .filter(|p| !p.is_moderator())
        .map(|p| p.post_id.clone())
        .collect()
}

fn labels_of(preds: &[Prediction]) -> BTreeMap<String, SeverityLabel> {
    preds.iter().map(|p| (p.post_id.clone(), p.label)).collect()
}

#[derive(Serialize)]
struct TruthFile<'a> {
    truth: &'a BTreeMap<String, SeverityLabel>,
    declining_users: &'a [String],
}

fn synth(a: SynthArgs) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        seed: a.seed,
        n_users: a.users.unwrap_or(d.n_users),
        n_labeled: a.labeled.unwrap_or(d.n_labeled),
        months: a.months.unwrap_or(d.months),
        ..d
    };
    let s = generate(&cfg)?;
    s.corpus.save(&a.out)?;
    if let Some(p) = &a.vectors {
        write_file(p, &s.vectors.to_tsv())?;
    }
    if let Some(dir) = &a.lexicon_dir {
        Lexicons::write_demo_files(dir)?;
    }
    if let Some(p) = &a.truth {
        let t = TruthFile {
            truth: &s.truth,
            declining_users: &s.declining_users,
        };
        write_file(p, &(serde_json::to_string_pretty(&t)? + "\n"))?;
    }
    log::info!(
        "wrote {} posts ({} labeled) to {}",
        s.corpus.len(),
        s.corpus.labeled().count(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TopicWords {
    topic: usize,
    words: Vec<String>,
}

fn lda_train_cmd(a: LdaTrainArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let stop = read_stopwords(a.stopwords.as_deref())?;
    let docs: Vec<Vec<String>> = corpus.posts().iter().map(|p| tokenize(&p.body, &stop)).collect();
    let cfg = LdaConfig {
        topics: a.topics,
        train_iters: a.lda_iters,
        infer_iters: a.infer_iters,
        min_df: a.min_df,
        seed: a.seed,
        ..LdaConfig::default()
    };
    let model = lda_train(&docs, &cfg)?;
    write_file(&a.out, &serde_json::to_string(&model)?)?;
    if a.top == 0 {
        return Ok(());
    }
    let words: Vec<TopicWords> = (0..model.topics)
        .map(|k| TopicWords {
            topic: k,
            words: model.top_words(k, a.top).into_iter().map(String::from).collect(),
        })
        .collect();
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&words)? + "\n",
        Format::Table => words.iter().fold(String::new(), |mut s, t| {
            let _ = writeln!(s, "{:>4}  {}", t.topic, t.words.join(" "));
            s
        }),
    };
    print!("{text}");
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let specs = resolve_specs(&a.specs)?;
    let opts = resource_options(&a.features, a.seed)?;
    let cfg = train_config(&a.boost, a.seed)?;
    let holdout = match a.split {
        Split::Train => Some(Holdout {
            seed: a.seed,
            ..Holdout::default()
        }),
        Split::All => None,
        Split::Test => return Err(TriageError::Config("train accepts --split train or all".into())),
    };
    let train_ids = match &holdout {
        Some(h) => h.split(&corpus)?.0,
        None => corpus.labeled().map(|p| p.post_id.clone()).collect(),
    };
    let model = train_ensemble(&corpus, &train_ids, &specs, &opts, &cfg)?;
    let container = ModelContainer {
        version: FORMAT_VERSION.to_string(),
        seed: a.seed,
        train_config: cfg,
        lda_config: opts.lda,
        lexicon_dir: a.features.lexicon_dir.map(|p| p.display().to_string()),
        holdout,
        model,
    };
    container.save(&a.out)?;
    log::info!("wrote {}-member model to {}", container.model.members.len(), a.out.display());
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let c = load_model(&a.model, a.vectors.as_deref())?;
    let corpus = read_corpus(&a.corpus)?;
    let preds = c.model.predict_posts(&corpus, &member_post_ids(&corpus))?;
    emit(&a.report, &preds, || {
        let mut s = String::new();
        for p in &preds {
            let members: Vec<&str> = p.members.iter().map(|l| l.as_str()).collect();
            let _ = writeln!(s, "{}\t{}\t{}", p.post_id, p.label, members.join(","));
        }
        s
    })
}

#[derive(Serialize)]
struct MemberReport {
    spec: String,
    report: MetricsReport,
}

#[derive(Serialize)]
struct EvalReport {
    split: Split,
    #[serde(flatten)]
    report: MetricsReport,
    members: Vec<MemberReport>,
}

fn eval(a: EvalArgs) -> Result<()> {
    let c = load_model(&a.model, a.vectors.as_deref())?;
    let corpus = read_corpus(&a.corpus)?;
    let ids = match a.split {
        Split::All => corpus.labeled().map(|p| p.post_id.clone()).collect(),
        split => {
            let h = c.holdout.unwrap_or_else(|| {
                log::warn!("model was trained on every labeled post; test scores are not held out");
                Holdout {
                    seed: a.seed,
                    ..Holdout::default()
                }
            });
            let (train, test) = h.split(&corpus)?;
            if split == Split::Train {
                train
            } else {
                test
            }
        }
    };
    let preds = c.model.predict_posts(&corpus, &ids)?;
    let report = score_predictions(&corpus, &preds)?;
    let members = score_members(&corpus, &preds)?
        .into_iter()
        .zip(&c.model.members)
        .map(|(report, m)| MemberReport {
            spec: m.spec.to_string(),
            report,
        })
        .collect();
    let out = EvalReport {
        split: a.split,
        report,
        members,
    };
    emit(&a.report, &out, || {
        let mut rows = vec![("model".to_string(), &out.report)];
        rows.extend(out.members.iter().map(|m| (m.spec.clone(), &m.report)));
        metrics_table(&rows) + "\n" + &per_class_table(&out.report)
    })
}

#[derive(Serialize)]
struct FoldRow {
    fold: usize,
    report: MetricsReport,
}

#[derive(Serialize)]
struct Baseline {
    mean: MetricsReport,
    folds: Vec<FoldRow>,
    /// Paired t-tests of model minus baseline, per headline metric.
    ttest: BTreeMap<String, TTest>,
}

#[derive(Serialize)]
struct CvReport {
    k: usize,
    seed: u64,
    specs: Vec<String>,
    mean: MetricsReport,
    folds: Vec<FoldRow>,
    baseline: Option<Baseline>,
}

const HEADLINE: [(&str, fn(&MetricsReport) -> f64); 5] = [
    ("accuracy", |r| r.accuracy),
    ("macro_f1_nongreen", |r| r.macro_f1_nongreen),
    ("flagged_f1", |r| r.flagged_f1),
    ("urgent_f1", |r| r.urgent_f1),
    ("flagged_acc", |r| r.flagged_acc),
];

fn cv(a: CvArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let specs = resolve_specs(&a.specs)?;
    let opts = resource_options(&a.features, a.seed)?;
    let cfg = train_config(&a.boost, a.seed)?;
    let folds = cross_validate(&corpus, &specs, &opts, &cfg, a.k, a.seed)?;
    let mean = mean_report(&folds)?;
    let baseline = if a.baseline {
        let base = cross_validate(&corpus, &[FeatureSetSpec::body_only()], &opts, &cfg, a.k, a.seed)?;
        let mut ttest = BTreeMap::new();
        for (name, get) in HEADLINE {
            let x: Vec<f64> = folds.iter().map(|f| get(&f.report)).collect();
            let y: Vec<f64> = base.iter().map(|f| get(&f.report)).collect();
            ttest.insert(name.to_string(), paired_ttest(&x, &y)?);
        }
        Some(Baseline {
            mean: mean_report(&base)?,
            folds: base.into_iter().map(|f| FoldRow { fold: f.fold, report: f.report }).collect(),
            ttest,
        })
    } else {
        None
    };
    let out = CvReport {
        k: a.k,
        seed: a.seed,
        specs: specs.iter().map(|s| s.to_string()).collect(),
        mean,
        folds: folds.into_iter().map(|f| FoldRow { fold: f.fold, report: f.report }).collect(),
        baseline,
    };
    emit(&a.report, &out, || {
        let mut rows: Vec<(String, &MetricsReport)> =
            out.folds.iter().map(|f| (format!("fold {}", f.fold + 1), &f.report)).collect();
        rows.push(("mean".into(), &out.mean));
        if let Some(b) = &out.baseline {
            rows.push(("baseline mean".into(), &b.mean));
        }
        let mut s = metrics_table(&rows);
        if let Some(b) = &out.baseline {
            s.push('\n');
            for (name, t) in &b.ttest {
                let _ = writeln!(s, "{name:<18}  t = {:>8.3}  p = {:.4}", t.t, t.p);
            }
        }
        s
    })
}

#[derive(Serialize)]
struct AblationRow {
    name: String,
    spec: String,
    report: MetricsReport,
}

fn ablate(a: AblateArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let mut opts = resource_options(&a.features, a.seed)?;
    let cfg = train_config(&a.boost, a.seed)?;
    let (train, test) = Holdout {
        seed: a.seed,
        ..Holdout::default()
    }
    .split(&corpus)?;
    // every rung shares one set of resources, so each is trained as a member
    let ladder = ablation_ladder();
    let rungs = train_ensemble(&corpus, &train, &ladder, &opts, &cfg)?;
    let preds = rungs.predict_posts(&corpus, &test)?;
    let mut rows: Vec<AblationRow> = score_members(&corpus, &preds)?
        .into_iter()
        .zip(&ladder)
        .enumerate()
        .map(|(i, (report, spec))| AblationRow {
            name: if i == 0 {
                spec.groups()[0].to_string()
            } else {
                format!("+{}", spec.groups()[i])
            },
            spec: spec.to_string(),
            report,
        })
        .collect();
    opts.pretrained_lda = rungs.resources.lda.clone();
    let ens = train_ensemble(&corpus, &train, &default_specs(), &opts, &cfg)?;
    rows.push(AblationRow {
        name: "ensemble".into(),
        spec: default_specs().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" | "),
        report: score_predictions(&corpus, &ens.predict_posts(&corpus, &test)?)?,
    });
    emit(&a.report, &rows, || {
        let rows: Vec<(String, &MetricsReport)> = rows.iter().map(|r| (r.name.clone(), &r.report)).collect();
        metrics_table(&rows)
    })
}

fn severities(a: &SeverityArgs) -> Result<(Corpus, BTreeMap<String, SeverityLabel>)> {
    let corpus = read_corpus(&a.corpus)?;
    let sev = match a.labels {
        LabelSource::Gold => corpus.labels(),
        LabelSource::Predicted => {
            let path = a
                .model
                .as_ref()
                .ok_or_else(|| TriageError::Config("--labels predicted needs --model".into()))?;
            let c = load_model(path, a.vectors.as_deref())?;
            labels_of(&c.model.predict_posts(&corpus, &member_post_ids(&corpus))?)
        }
    };
    Ok((corpus, sev))
}

#[derive(Serialize)]
struct TrendRow {
    threshold: Option<f64>,
    flagged: TrendSummary,
    fine_grained: TrendSummary,
}

#[derive(Serialize)]
struct TrendsReport {
    active_users: usize,
    rows: Vec<TrendRow>,
    goodness_of_fit: BTreeMap<String, GoodnessOfFit>,
}

const THRESHOLDS: [Option<f64>; 5] = [Some(0.02), Some(0.05), Some(0.10), Some(0.15), None];

fn trends(a: TrendsArgs) -> Result<()> {
    let (corpus, sev) = severities(&a.common)?;
    let users = user_histories(&corpus, &sev);
    let lines = |scale| -> (Vec<TrendLine>, Vec<crate::analytics::UserTrend>) {
        let rows = user_trends(&users, scale);
        let lines = rows
            .iter()
            .map(|u| TrendLine {
                m: u.slope,
                b: u.intercept,
                r: u.r,
            })
            .collect();
        (lines, rows)
    };
    let (flag, _) = lines(SeverityScale::Flagged);
    let (fine, fine_rows) = lines(SeverityScale::FineGrained);
    let thresholds: Vec<Option<f64>> = match a.threshold {
        Some(t) => vec![Some(t), None],
        None => THRESHOLDS.to_vec(),
    };
    let rows = thresholds
        .into_iter()
        .map(|t| TrendRow {
            threshold: t,
            flagged: trend_summary(&flag, t),
            fine_grained: trend_summary(&fine, t),
        })
        .collect();
    if let Some(p) = &a.csv {
        write_file(p, &trends_csv(&fine_rows))?;
    }
    let out = TrendsReport {
        active_users: fine.len(),
        rows,
        goodness_of_fit: BTreeMap::from([
            ("flagged".to_string(), goodness_of_fit(&flag)),
            ("fine_grained".to_string(), goodness_of_fit(&fine)),
        ]),
    };
    emit(&a.common.report, &out, || {
        let pairs: Vec<(TrendSummary, TrendSummary)> =
            out.rows.iter().map(|r| (r.flagged.clone(), r.fine_grained.clone())).collect();
        trend_table(&pairs)
    })
}

#[derive(Serialize)]
struct TableReport {
    scheme: TableScheme,
    /// Rows: last positive, last negative. Columns: first positive, first negative.
    cells: [[u64; 2]; 2],
    chi_square: Option<ChiSquare>,
    mean_months_active: [[f64; 2]; 2],
}

fn tables(a: SeverityArgs) -> Result<()> {
    let (corpus, sev) = severities(&a)?;
    let users = user_histories(&corpus, &sev);
    let out: Vec<TableReport> = TableScheme::ALL
        .iter()
        .map(|&scheme| {
            let t = first_last_table(&users, scheme);
            let chi = match chi_square(&t) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("{}: {e}", scheme.as_str());
                    None
                }
            };
            TableReport {
                scheme,
                cells: t.cells,
                chi_square: chi,
                mean_months_active: months_active_table(&users, scheme),
            }
        })
        .collect();
    emit(&a.report, &out, || {
        let mut s = String::new();
        for r in &out {
            let t = crate::analytics::ContingencyTable2x2 { cells: r.cells };
            s += &contingency_table_text(r.scheme, &t, r.chi_square.as_ref());
            let m = r.mean_months_active;
            let _ = writeln!(
                s,
                "months active  {:.2} {:.2} / {:.2} {:.2}\n",
                m[0][0], m[0][1], m[1][0], m[1][1]
            );
        }
        s
    })
}

fn respstats(a: SeverityArgs) -> Result<()> {
    let (corpus, sev) = severities(&a)?;
    let stats = response_stats(&corpus, &sev);
    emit(&a.report, &stats, || response_table(&stats))
}

#[derive(Serialize)]
struct VoteReport {
    post_id: Option<String>,
    members: Vec<(String, SeverityLabel)>,
    counts: BTreeMap<SeverityLabel, usize>,
    label: SeverityLabel,
}

fn vote_debug(a: VoteArgs) -> Result<()> {
    let (post_id, members): (Option<String>, Vec<(String, SeverityLabel)>) = match &a.model {
        Some(path) => {
            let c = load_model(path, a.vectors.as_deref())?;
            let corpus = read_corpus(a.corpus.as_deref().unwrap())?;
            let id = a.post.clone().unwrap();
            let p = c.model.predict_post(&corpus, &id)?;
            let names = c.model.members.iter().map(|m| m.spec.to_string());
            (Some(id), names.zip(p.members).collect())
        }
        None => {
            if a.labels.is_empty() {
                return Err(TriageError::Config("give member labels or --model/--corpus/--post".into()));
            }
            (None, a.labels.iter().enumerate().map(|(i, &l)| (format!("m{}", i + 1), l)).collect())
        }
    };
    let labels: Vec<SeverityLabel> = members.iter().map(|(_, l)| *l).collect();
    let mut counts = BTreeMap::new();
    for l in &labels {
        *counts.entry(*l).or_insert(0) += 1;
    }
    let out = VoteReport {
        post_id,
        label: vote(&labels)?,
        members,
        counts,
    };
    emit(&a.report, &out, || {
        let mut s = String::new();
        for (name, l) in &out.members {
            let _ = writeln!(s, "{name:<40}  {l}");
        }
        let _ = writeln!(s, "{:<40}  {}", "vote", out.label);
        s
    })
}
