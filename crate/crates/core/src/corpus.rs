//! Forum data model: posts, threads, JSON-lines ingestion and stratified folds.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::label::SeverityLabel;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthorRole {
    Member,
    Moderator,
}

/// Strict `YYYY-MM-DDThh:mm:ssZ`; offsets and local times are rejected.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .map(|n| n.and_utc())
        .map_err(|e| TriageError::Parse(format!("timestamp `{s}`: {e}")))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

mod utc_seconds {
    use chrono::{DateTime, Utc};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Post {
    pub post_id: String,
    pub thread_id: String,
    pub author_id: String,
    pub author_role: AuthorRole,
    #[serde(with = "utc_seconds")]
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub subject: String,
    #[serde(default)]
    pub body: String,
    pub kudos: u64,
    pub views: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<SeverityLabel>,
}

impl Post {
    pub fn is_moderator(&self) -> bool {
        self.author_role == AuthorRole::Moderator
    }
}

/// A malformed input line that was skipped during loading.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Immutable collection of posts with thread and id indexes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    posts: Vec<Post>,
    by_id: BTreeMap<String, usize>,
    // Post indexes per thread, in thread order.
    threads: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn from_posts(posts: Vec<Post>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for (i, p) in posts.iter().enumerate() {
            if by_id.insert(p.post_id.clone(), i).is_some() {
                return Err(TriageError::DuplicatePostId(p.post_id.clone()));
            }
        }
        let mut threads: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in posts.iter().enumerate() {
            threads.entry(p.thread_id.clone()).or_default().push(i);
        }
        for members in threads.values_mut() {
            members.sort_by(|&a, &b| {
                let (pa, pb) = (&posts[a], &posts[b]);
                pa.timestamp
                    .cmp(&pb.timestamp)
                    .then_with(|| pa.post_id.cmp(&pb.post_id))
            });
        }
        Ok(Self {
            posts,
            by_id,
            threads,
        })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn get(&self, post_id: &str) -> Option<&Post> {
        self.by_id.get(post_id).map(|&i| &self.posts[i])
    }

    pub fn thread_ids(&self) -> impl Iterator<Item = &str> {
        self.threads.keys().map(String::as_str)
    }

    pub fn labeled(&self) -> impl Iterator<Item = &Post> {
        self.posts.iter().filter(|p| p.label.is_some())
    }

    /// Gold labels keyed by post id.
    pub fn labels(&self) -> BTreeMap<String, SeverityLabel> {
        self.labeled()
            .map(|p| (p.post_id.clone(), p.label.expect("labeled")))
            .collect()
    }

    pub fn thread_of(&self, thread_id: &str) -> Result<ThreadView<'_>> {
        let members = self
            .threads
            .get(thread_id)
            .ok_or_else(|| TriageError::NotFound(format!("thread `{thread_id}`")))?;
        Ok(ThreadView {
            thread_id: thread_id.to_owned(),
            posts: members.iter().map(|&i| &self.posts[i]).collect(),
        })
    }

    /// All posts by each author, in chronological order (post id tie-break).
    pub fn posts_by_author(&self) -> BTreeMap<&str, Vec<&Post>> {
        let mut out: BTreeMap<&str, Vec<&Post>> = BTreeMap::new();
        for p in &self.posts {
            out.entry(p.author_id.as_str()).or_default().push(p);
        }
        for v in out.values_mut() {
            v.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.post_id.cmp(&b.post_id)));
        }
        out
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for p in &self.posts {
            out.push_str(&serde_json::to_string(p)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| TriageError::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| TriageError::io(path, e))
    }
}

/// Parse JSON-lines text. Malformed lines are skipped and reported; duplicate ids are fatal.
pub fn parse_corpus(text: &str) -> Result<(Corpus, Vec<SkippedLine>)> {
    let mut posts = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Post>(line) {
            Ok(post) => {
                if !seen.insert(post.post_id.clone()) {
                    return Err(TriageError::DuplicatePostId(post.post_id));
                }
                posts.push(post);
            }
            Err(e) => {
                log::warn!("line {}: skipping malformed record: {e}", n + 1);
                skipped.push(SkippedLine {
                    line: n + 1,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok((Corpus::from_posts(posts)?, skipped))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<(Corpus, Vec<SkippedLine>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
    parse_corpus(&text)
}

/// Posts of one thread in ascending (timestamp, post_id) order.
#[derive(Debug, Clone)]
pub struct ThreadView<'a> {
    pub thread_id: String,
    pub posts: Vec<&'a Post>,
}

impl<'a> ThreadView<'a> {
    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn position(&self, post_id: &str) -> Option<usize> {
        self.posts.iter().position(|p| p.post_id == post_id)
    }

    pub(crate) fn require_position(&self, post_id: &str) -> Result<usize> {
        self.position(post_id).ok_or_else(|| {
            TriageError::invalid(format!(
                "post `{post_id}` is not in thread `{}`",
                self.thread_id
            ))
        })
    }
}

/// Fold index of every labeled post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub folds: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, post_id: &str) -> Option<usize> {
        self.folds.get(post_id).copied()
    }

    /// (training ids, held-out ids) for fold `i`, each in post id order.
    pub fn split(&self, i: usize) -> (Vec<String>, Vec<String>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (id, &f) in &self.folds {
            if f == i {
                test.push(id.clone());
            } else {
                train.push(id.clone());
            }
        }
        (train, test)
    }
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled with a seeded RNG and dealt round-robin; the dealing
/// position carries over between classes so that fold totals also stay within
/// one post of each other.
pub fn stratified_folds(
    labels: &BTreeMap<String, SeverityLabel>,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(TriageError::invalid(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(TriageError::invalid(format!(
            "k = {k} exceeds the {} labeled posts",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = BTreeMap::new();
    let mut next = 0usize;
    for class in SeverityLabel::ALL {
        let mut ids: Vec<&String> = labels
            .iter()
            .filter(|(_, &l)| l == class)
            .map(|(id, _)| id)
            .collect();
        ids.shuffle(&mut rng);
        for id in ids {
            folds.insert(id.clone(), next);
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, thread: &str, ts: &str, label: Option<&str>) -> String {
        let mut v = serde_json::json!({
            "post_id": id, "thread_id": thread, "author_id": "u1",
            "author_role": "member", "timestamp": ts, "subject": "s",
            "body": "b", "kudos": 0, "views": 3
        });
        if let Some(l) = label {
            v["label"] = serde_json::Value::String(l.into());
        }
        v.to_string()
    }

    #[test]
    fn single_crisis_record() {
        let (c, skipped) = parse_corpus(&line("p1", "t1", "2015-05-01T10:00:00Z", Some("crisis"))).unwrap();
        assert!(skipped.is_empty());
        assert_eq!(c.len(), 1);
        assert_eq!(c.get("p1").unwrap().label, Some(SeverityLabel::Crisis));
    }

    #[test]
    fn missing_label_is_unlabeled() {
        let (c, _) = parse_corpus(&line("p1", "t1", "2015-05-01T10:00:00Z", None)).unwrap();
        assert_eq!(c.get("p1").unwrap().label, None);
        assert_eq!(c.labeled().count(), 0);
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let text = format!(
            "{}\n{}\n",
            line("p1", "t1", "2015-05-01T10:00:00Z", None),
            line("p1", "t2", "2015-05-02T10:00:00Z", None)
        );
        assert!(matches!(parse_corpus(&text), Err(TriageError::DuplicatePostId(id)) if id == "p1"));
    }

    #[test]
    fn malformed_lines_are_skipped() {
        let text = format!(
            "{}\nnot json\n{}\n{}\n",
            line("p1", "t1", "2015-05-01T10:00:00Z", None),
            line("p2", "t1", "2015-05-01 10:00:00", None),
            line("p3", "t1", "2015-05-01T10:00:00+02:00", None),
        );
        let (c, skipped) = parse_corpus(&text).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(skipped.iter().map(|s| s.line).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn negative_kudos_rejected() {
        let bad = line("p1", "t1", "2015-05-01T10:00:00Z", None).replace("\"kudos\":0", "\"kudos\":-1");
        let (c, skipped) = parse_corpus(&bad).unwrap();
        assert!(c.is_empty());
        assert_eq!(skipped.len(), 1);
    }

    #[test]
    fn thread_order_and_tie_break() {
        let text = [
            line("c", "t", "2015-05-01T12:00:00Z", None),
            line("b", "t", "2015-05-01T10:00:00Z", None),
            line("a", "t", "2015-05-01T11:00:00Z", None),
            line("z", "u", "2015-05-01T10:00:00Z", None),
            line("y", "u", "2015-05-01T10:00:00Z", None),
        ]
        .join("\n");
        let (c, _) = parse_corpus(&text).unwrap();
        let ids = |t: &str| c.thread_of(t).unwrap().posts.iter().map(|p| p.post_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids("t"), vec!["b", "a", "c"]);
        assert_eq!(ids("u"), vec!["y", "z"]);
        assert!(matches!(c.thread_of(""), Err(TriageError::NotFound(_))));
    }

    fn labels(counts: &[(SeverityLabel, usize)]) -> BTreeMap<String, SeverityLabel> {
        let mut m = BTreeMap::new();
        for &(l, n) in counts {
            for i in 0..n {
                m.insert(format!("{l}-{i:04}"), l);
            }
        }
        m
    }

    fn per_fold_counts(f: &FoldAssignment, labels: &BTreeMap<String, SeverityLabel>) -> Vec<[usize; 4]> {
        let mut out = vec![[0usize; 4]; f.k];
        for (id, &fold) in &f.folds {
            out[fold][labels[id].index()] += 1;
        }
        out
    }

    #[test]
    fn exact_divisibility() {
        let l = labels(&[(SeverityLabel::Green, 6), (SeverityLabel::Amber, 4)]);
        let f = stratified_folds(&l, 2, 1).unwrap();
        for counts in per_fold_counts(&f, &l) {
            assert_eq!(counts, [3, 2, 0, 0]);
        }
        assert_eq!(f, stratified_folds(&l, 2, 1).unwrap());
    }

    #[test]
    fn reported_class_distribution_ten_folds() {
        let l = labels(&[
            (SeverityLabel::Crisis, 40),
            (SeverityLabel::Red, 137),
            (SeverityLabel::Amber, 296),
            (SeverityLabel::Green, 715),
        ]);
        let f = stratified_folds(&l, 10, 42).unwrap();
        let counts = per_fold_counts(&f, &l);
        for c in &counts {
            assert_eq!(c[SeverityLabel::Crisis.index()], 4);
            assert!([13, 14].contains(&c[SeverityLabel::Red.index()]));
            assert!([29, 30].contains(&c[SeverityLabel::Amber.index()]));
            assert!([71, 72].contains(&c[SeverityLabel::Green.index()]));
        }
        let totals: Vec<usize> = counts.iter().map(|c| c.iter().sum()).collect();
        assert!(totals.iter().max().unwrap() - totals.iter().min().unwrap() <= 1);
    }

    #[test]
    fn too_many_folds() {
        let l = labels(&[(SeverityLabel::Green, 3)]);
        assert!(stratified_folds(&l, 4, 0).is_err());
        assert!(stratified_folds(&l, 1, 0).is_err());
    }
}
