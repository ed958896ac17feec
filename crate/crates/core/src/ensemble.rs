//! Feature-group assembly, per-subset boosted models, and majority voting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contextfeat::{
    author_prior_tokens, last_sentence_categories, metadata_features, prior_window_tokens, ContextConfig,
};
use crate::corpus::{Corpus, Post, ThreadView};
use crate::densevec::{post_vector, VectorStore};
use crate::error::{Result, TriageError};
use crate::gbt::{self, BoostedForest, FeatureMatrix, TrainConfig};
use crate::label::SeverityLabel;
use crate::psychfeat::{
    category_features, clue_features, emotion_profile, sentiment_features, subjectivity_features, Lexicons,
};
use crate::textprep::{bow_vector, build_vocab, raw_tokens, split_sentences, tokenize, SparseVector, Stopwords, Vocabulary};
use crate::topics::{lda_infer, lda_train, LdaConfig, LdaModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Body,
    Context,
    LastSentence,
    Liwc,
    Emotion,
    Subjectivity,
    Sentiment,
    Topic,
    Metadata,
    Clue,
    Densevec,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 11] = [
        Self::Body,
        Self::Context,
        Self::LastSentence,
        Self::Liwc,
        Self::Emotion,
        Self::Subjectivity,
        Self::Sentiment,
        Self::Topic,
        Self::Metadata,
        Self::Clue,
        Self::Densevec,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Body => "body",
            Self::Context => "context",
            Self::LastSentence => "last_sentence",
            Self::Liwc => "liwc",
            Self::Emotion => "emotion",
            Self::Subjectivity => "subjectivity",
            Self::Sentiment => "sentiment",
            Self::Topic => "topic",
            Self::Metadata => "metadata",
            Self::Clue => "clue",
            Self::Densevec => "densevec",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = TriageError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == s.trim())
            .ok_or_else(|| TriageError::Config(format!("unknown feature group `{s}`")))
    }
}

/// Ordered, duplicate-free list of feature groups making up one model's input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureGroup>", into = "Vec<FeatureGroup>")]
pub struct FeatureSetSpec(Vec<FeatureGroup>);

impl FeatureSetSpec {
    pub fn new(groups: Vec<FeatureGroup>) -> Result<Self> {
        if groups.is_empty() {
            return Err(TriageError::Config("a feature set needs at least one group".into()));
        }
        let mut seen = BTreeSet::new();
        for g in &groups {
            if !seen.insert(*g) {
                return Err(TriageError::Config(format!("feature group `{g}` listed twice")));
            }
        }
        if !groups.contains(&FeatureGroup::Body) {
            log::warn!("feature set {groups:?} does not include the post body");
        }
        Ok(Self(groups))
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.0
    }

    pub fn contains(&self, g: FeatureGroup) -> bool {
        self.0.contains(&g)
    }

    pub fn body_only() -> Self {
        Self(vec![FeatureGroup::Body])
    }
}

impl TryFrom<Vec<FeatureGroup>> for FeatureSetSpec {
    type Error = TriageError;

    fn try_from(groups: Vec<FeatureGroup>) -> Result<Self> {
        Self::new(groups)
    }
}

impl From<FeatureSetSpec> for Vec<FeatureGroup> {
    fn from(s: FeatureSetSpec) -> Self {
        s.0
    }
}

impl fmt::Display for FeatureSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|g| g.as_str()).collect();
        f.write_str(&names.join("+"))
    }
}

/// The six member feature sets of the default ensemble.
pub fn default_specs() -> Vec<FeatureSetSpec> {
    use FeatureGroup::*;
    [
        vec![Body, Metadata, Subjectivity, Emotion],
        vec![Body, Context, Emotion, Liwc],
        vec![Body, Context, LastSentence],
        vec![Body, LastSentence, Emotion, Sentiment],
        vec![Body, Context, Topic],
        vec![Body, Context, Liwc, Clue, Metadata],
    ]
    .into_iter()
    .map(FeatureSetSpec)
    .collect()
}

/// The feature set of the strongest single classifier.
pub fn single_model_spec() -> FeatureSetSpec {
    use FeatureGroup::*;
    FeatureSetSpec(vec![Body, Metadata, Subjectivity, Emotion, Context, LastSentence, Topic, Liwc])
}

/// Cumulative feature-addition ladder used for ablation, starting from the body.
pub fn ablation_ladder() -> Vec<FeatureSetSpec> {
    use FeatureGroup::*;
    let steps = [Body, Context, LastSentence, Liwc, Emotion, Subjectivity, Topic, Metadata, Clue];
    (1..=steps.len()).map(|n| FeatureSetSpec(steps[..n].to_vec())).collect()
}

/// Spec file: a JSON list of lists of group names.
pub fn parse_specs(text: &str) -> Result<Vec<FeatureSetSpec>> {
    let specs: Vec<FeatureSetSpec> =
        serde_json::from_str(text).map_err(|e| TriageError::Config(format!("feature set file: {e}")))?;
    if specs.is_empty() {
        return Err(TriageError::Config("feature set file lists no sets".into()));
    }
    Ok(specs)
}

pub fn load_specs(path: impl AsRef<Path>) -> Result<Vec<FeatureSetSpec>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
    parse_specs(&text)
}

/// Everything needed to turn a post into feature blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resources {
    pub stopwords: Stopwords,
    /// Unigram+bigram vocabulary shared by the body and context blocks.
    pub vocab: Vocabulary,
    pub lexicons: Lexicons,
    pub lda: Option<LdaModel>,
    pub vectors: Option<VectorStore>,
    pub context: ContextConfig,
}

/// Settings for building [`Resources`] from a corpus.
#[derive(Debug, Clone)]
pub struct ResourceOptions {
    pub stopwords: Stopwords,
    pub min_df: usize,
    pub lexicons: Lexicons,
    /// Fitted only when some feature set uses the topic group.
    pub lda: LdaConfig,
    /// Used instead of fitting a topic model when present.
    pub pretrained_lda: Option<LdaModel>,
    pub vectors: Option<VectorStore>,
    pub context: ContextConfig,
}

impl Default for ResourceOptions {
    fn default() -> Self {
        Self {
            stopwords: Stopwords::default(),
            min_df: crate::textprep::DEFAULT_MIN_DF,
            lexicons: Lexicons::demo(),
            lda: LdaConfig::default(),
            pretrained_lda: None,
            vectors: None,
            context: ContextConfig::default(),
        }
    }
}

impl Resources {
    /// Builds the vocabulary (and topic model if `with_topics`) from every
    /// post whose id is not in `exclude`.
    pub fn build(corpus: &Corpus, exclude: &BTreeSet<String>, opts: &ResourceOptions, with_topics: bool) -> Result<Self> {
        let docs: Vec<Vec<String>> = corpus
            .posts()
            .iter()
            .filter(|p| !exclude.contains(&p.post_id))
            .map(|p| tokenize(&p.body, &opts.stopwords))
            .collect();
        let vocab = build_vocab(&docs, opts.min_df)?;
        let lda = if !with_topics {
            None
        } else if let Some(m) = &opts.pretrained_lda {
            Some(m.clone())
        } else {
            Some(lda_train(&docs, &opts.lda)?)
        };
        Ok(Self {
            stopwords: opts.stopwords.clone(),
            vocab,
            lexicons: opts.lexicons.clone(),
            lda,
            vectors: opts.vectors.clone(),
            context: opts.context.clone(),
        })
    }

    fn missing(group: FeatureGroup, what: &str) -> TriageError {
        TriageError::Config(format!("feature group `{group}` needs {what}, which is not loaded"))
    }

    /// Number of columns the group occupies.
    pub fn width(&self, group: FeatureGroup) -> Result<usize> {
        use FeatureGroup::*;
        let categories = || {
            self.lexicons
                .categories
                .as_ref()
                .map(|l| l.len())
                .ok_or_else(|| Self::missing(group, "a category lexicon"))
        };
        Ok(match group {
            Body => self.vocab.len(),
            Context => 2 * self.vocab.len(),
            LastSentence | Liwc => categories()?,
            Emotion => {
                self.lexicons.emotions.as_ref().ok_or_else(|| Self::missing(group, "an emotion lexicon"))?;
                9
            }
            Subjectivity | Sentiment => {
                self.lexicons
                    .subjectivity
                    .as_ref()
                    .ok_or_else(|| Self::missing(group, "a subjectivity lexicon"))?;
                if group == Subjectivity {
                    4
                } else {
                    2
                }
            }
            Topic => self.lda.as_ref().ok_or_else(|| Self::missing(group, "a topic model"))?.topics,
            Metadata => self.context.metadata_len(),
            Clue => {
                self.lexicons.clues.as_ref().ok_or_else(|| Self::missing(group, "a clue lexicon"))?;
                2
            }
            Densevec => self
                .vectors
                .as_ref()
                .and_then(|v| v.dim())
                .ok_or_else(|| Self::missing(group, "sentence vectors"))?,
        })
    }

    /// Column range of every group of `spec`, in spec order.
    pub fn layout(&self, spec: &FeatureSetSpec) -> Result<Vec<(FeatureGroup, Range<usize>)>> {
        let mut start = 0;
        spec.groups()
            .iter()
            .map(|&g| {
                let w = self.width(g)?;
                let r = start..start + w;
                start += w;
                Ok((g, r))
            })
            .collect()
    }

    /// Block of one group with local (0-based) column indexes; zeros omitted.
    pub fn group_block(&self, group: FeatureGroup, target: &Post, thread: &ThreadView<'_>) -> Result<Vec<(usize, f64)>> {
        use FeatureGroup::*;
        let dense = |v: &[f64]| -> Vec<(usize, f64)> {
            v.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect()
        };
        self.width(group)?;
        let raw = || raw_tokens(&target.body);
        Ok(match group {
            Body => bow_vector(&tokenize(&target.body, &self.stopwords), &self.vocab).entries,
            Context => {
                let v = self.vocab.len();
                let prior = author_prior_tokens(thread, target, &self.stopwords)?;
                let window = prior_window_tokens(thread, target, self.context.window_size, &self.stopwords)?;
                let mut out = bow_vector(&prior, &self.vocab).entries;
                out.extend(bow_vector(&window, &self.vocab).entries.into_iter().map(|(i, x)| (i + v, x)));
                out
            }
            LastSentence => dense(&last_sentence_categories(target, self.lexicons.categories.as_ref().unwrap())),
            Liwc => dense(&category_features(&raw(), self.lexicons.categories.as_ref().unwrap())),
            Emotion => {
                let p = emotion_profile(&raw(), self.lexicons.emotions.as_ref().unwrap());
                let mut v = p.probs.to_vec();
                v.push(p.dominant as f64);
                dense(&v)
            }
            Subjectivity => dense(&subjectivity_features(&raw(), self.lexicons.subjectivity.as_ref().unwrap())),
            Sentiment => dense(&sentiment_features(&raw(), self.lexicons.subjectivity.as_ref().unwrap())),
            Topic => {
                let lda = self.lda.as_ref().unwrap();
                let theta = lda_infer(lda, &tokenize(&target.body, &self.stopwords), lda.infer_iters, lda.seed);
                dense(&theta.0)
            }
            Metadata => dense(&metadata_features(target, thread, &self.context)?),
            Clue => dense(&clue_features(&raw(), self.lexicons.clues.as_ref().unwrap())),
            Densevec => {
                let n = split_sentences(&target.body).len();
                dense(&post_vector(self.vectors.as_ref().unwrap(), &target.post_id, n))
            }
        })
    }
}

/// Concatenation of the spec's group blocks, each shifted to its layout range.
pub fn assemble(target: &Post, thread: &ThreadView<'_>, spec: &FeatureSetSpec, res: &Resources) -> Result<SparseVector> {
    let layout = res.layout(spec)?;
    let mut entries = Vec::new();
    for (g, range) in &layout {
        entries.extend(res.group_block(*g, target, thread)?.into_iter().map(|(i, x)| (i + range.start, x)));
    }
    Ok(SparseVector {
        dim: layout.last().map_or(0, |(_, r)| r.end),
        entries,
    })
}

/// Caches group blocks per post so that members sharing a group compute it once.
struct BlockCache<'r> {
    res: &'r Resources,
    blocks: BTreeMap<(FeatureGroup, String), Vec<(usize, f64)>>,
}

impl<'r> BlockCache<'r> {
    fn new(res: &'r Resources) -> Self {
        Self {
            res,
            blocks: BTreeMap::new(),
        }
    }

    fn vector(&mut self, corpus: &Corpus, post: &Post, spec: &FeatureSetSpec) -> Result<SparseVector> {
        let layout = self.res.layout(spec)?;
        let mut thread = None;
        let mut entries = Vec::new();
        for (g, range) in &layout {
            let key = (*g, post.post_id.clone());
            if !self.blocks.contains_key(&key) {
                if thread.is_none() {
                    thread = Some(corpus.thread_of(&post.thread_id)?);
                }
                let block = self.res.group_block(*g, post, thread.as_ref().unwrap())?;
                self.blocks.insert(key.clone(), block);
            }
            entries.extend(self.blocks[&key].iter().map(|&(i, x)| (i + range.start, x)));
        }
        Ok(SparseVector {
            dim: layout.last().map_or(0, |(_, r)| r.end),
            entries,
        })
    }
}

/// One trained member: a feature subset and its forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub spec: FeatureSetSpec,
    pub forest: BoostedForest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub members: Vec<Member>,
    pub resources: Resources,
}

/// Per-post member predictions and the voted label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub post_id: String,
    pub members: Vec<SeverityLabel>,
    pub label: SeverityLabel,
}

impl EnsembleModel {
    /// Predicts every listed post; unknown ids are an error.
    pub fn predict_posts(&self, corpus: &Corpus, ids: &[String]) -> Result<Vec<Prediction>> {
        let mut cache = BlockCache::new(&self.resources);
        ids.iter()
            .map(|id| {
                let post = corpus.get(id).ok_or_else(|| TriageError::NotFound(format!("post `{id}`")))?;
                let members = self
                    .members
                    .iter()
                    .map(|m| gbt::predict(&m.forest, &cache.vector(corpus, post, &m.spec)?))
                    .collect::<Result<Vec<_>>>()?;
                let label = vote(&members)?;
                Ok(Prediction {
                    post_id: id.clone(),
                    members,
                    label,
                })
            })
            .collect()
    }

    pub fn predict_post(&self, corpus: &Corpus, id: &str) -> Result<Prediction> {
        Ok(self.predict_posts(corpus, &[id.to_owned()])?.remove(0))
    }
}

/// Trains one forest per spec on the labeled posts listed in `train_ids`.
///
/// Resources are built from every post except labeled posts outside
/// `train_ids`, so held-out labels never shape the vocabulary or topics.
pub fn train_ensemble(
    corpus: &Corpus,
    train_ids: &[String],
    specs: &[FeatureSetSpec],
    opts: &ResourceOptions,
    cfg: &TrainConfig,
) -> Result<EnsembleModel> {
    if specs.is_empty() {
        return Err(TriageError::invalid("no feature sets to train"));
    }
    let mut rows = Vec::with_capacity(train_ids.len());
    for id in train_ids {
        let post = corpus.get(id).ok_or_else(|| TriageError::NotFound(format!("post `{id}`")))?;
        let label = post
            .label
            .ok_or_else(|| TriageError::invalid(format!("training post `{id}` has no label")))?;
        rows.push((post, label));
    }
    if rows.is_empty() {
        return Err(TriageError::invalid("no labeled posts to train on"));
    }
    let train_set: BTreeSet<&str> = train_ids.iter().map(String::as_str).collect();
    let exclude: BTreeSet<String> = corpus
        .labeled()
        .filter(|p| !train_set.contains(p.post_id.as_str()))
        .map(|p| p.post_id.clone())
        .collect();
    let with_topics = specs.iter().any(|s| s.contains(FeatureGroup::Topic));
    let resources = Resources::build(corpus, &exclude, opts, with_topics)?;
    let y: Vec<SeverityLabel> = rows.iter().map(|(_, l)| *l).collect();

    let mut cache = BlockCache::new(&resources);
    let mut members = Vec::with_capacity(specs.len());
    for spec in specs {
        let dim: usize = resources.layout(spec)?.last().map_or(0, |(_, r)| r.end);
        let mut x = FeatureMatrix::new(dim);
        for (post, _) in &rows {
            x.push_sparse(&cache.vector(corpus, post, spec)?)?;
        }
        log::info!("training member {spec} on {} rows x {dim} columns", x.n_rows());
        members.push(Member {
            spec: spec.clone(),
            forest: gbt::train(&x, &y, cfg)?,
        });
    }
    Ok(EnsembleModel { members, resources })
}

/// Majority vote; ties go to the most severe of the tied labels.
pub fn vote(labels: &[SeverityLabel]) -> Result<SeverityLabel> {
    if labels.is_empty() {
        return Err(TriageError::invalid("cannot vote over zero members"));
    }
    let mut counts = [0usize; SeverityLabel::COUNT];
    for l in labels {
        counts[l.index()] += 1;
    }
    let mut best = SeverityLabel::Green;
    for l in SeverityLabel::ALL {
        if counts[l.index()] >= counts[best.index()] {
            best = l;
        }
    }
    Ok(best)
}
