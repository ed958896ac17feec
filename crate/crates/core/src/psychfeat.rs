//! Lexicon-driven psycholinguistic features.
//!
//! Four lexicon kinds are supported, each with a small text file format:
//!
//! * category lexicon (LIWC-style): a header line with the comma-separated
//!   category names, then `pattern<TAB>cat1,cat2,...` rows, where a trailing
//!   `*` makes the pattern a prefix match;
//! * emotion lexicon: `term<TAB>p1<TAB>...<TAB>p8` in [`EMOTIONS`] order;
//! * subjectivity lexicon: `term<TAB>strong|weak<TAB>positive|negative|neutral`;
//! * clue lexicon: one term or space-joined bigram per line.
//!
//! Lines starting with `#` are comments. All feature values are normalised by
//! the token count so that long and short posts are comparable. The features
//! expect raw tokens (stopwords kept).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};

pub const EMOTIONS: [&str; 8] = [
    "fear",
    "amusement",
    "anger",
    "annoy",
    "apathy",
    "happiness",
    "inspiration",
    "sadness",
];

const DEMO_CATEGORIES: &str = include_str!("../data/categories.tsv");
const DEMO_EMOTIONS: &str = include_str!("../data/emotions.tsv");
const DEMO_SUBJECTIVITY: &str = include_str!("../data/subjectivity.tsv");
const DEMO_CLUES: &str = include_str!("../data/clues.txt");

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| TriageError::io(path, e))
}

fn normaliser(n_tokens: usize) -> f64 {
    n_tokens.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "CategoryRepr", into = "CategoryRepr")]
pub struct CategoryLexicon {
    categories: Vec<String>,
    exact: HashMap<String, Vec<usize>>,
    // Sorted by pattern so that matching order is deterministic.
    prefixes: Vec<(String, Vec<usize>)>,
}

#[derive(Serialize, Deserialize)]
struct CategoryRepr {
    categories: Vec<String>,
    patterns: BTreeMap<String, Vec<usize>>,
}

impl From<CategoryRepr> for CategoryLexicon {
    fn from(r: CategoryRepr) -> Self {
        let mut exact = HashMap::new();
        let mut prefixes = Vec::new();
        for (pattern, cats) in r.patterns {
            match pattern.strip_suffix('*') {
                Some(prefix) => prefixes.push((prefix.to_owned(), cats)),
                None => {
                    exact.insert(pattern, cats);
                }
            }
        }
        Self {
            categories: r.categories,
            exact,
            prefixes,
        }
    }
}

impl From<CategoryLexicon> for CategoryRepr {
    fn from(l: CategoryLexicon) -> Self {
        let mut patterns: BTreeMap<String, Vec<usize>> = l.exact.into_iter().collect();
        for (prefix, cats) in l.prefixes {
            patterns.insert(format!("{prefix}*"), cats);
        }
        Self {
            categories: l.categories,
            patterns,
        }
    }
}

impl CategoryLexicon {
    /// Build from category names and `(pattern, category names)` pairs.
    pub fn new<P, C>(categories: &[&str], patterns: P) -> Result<Self>
    where
        P: IntoIterator<Item = (String, C)>,
        C: IntoIterator<Item = String>,
    {
        let names: Vec<String> = categories.iter().map(|c| c.to_string()).collect();
        let lookup: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        if lookup.len() != names.len() {
            return Err(TriageError::Parse("duplicate category name".into()));
        }
        let mut rows: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (pattern, cats) in patterns {
            let mut idx = BTreeSet::new();
            for c in cats {
                let i = lookup.get(c.trim()).ok_or_else(|| {
                    TriageError::Parse(format!("pattern `{pattern}` uses undeclared category `{c}`"))
                })?;
                idx.insert(*i);
            }
            if idx.is_empty() {
                return Err(TriageError::Parse(format!("pattern `{pattern}` has no category")));
            }
            rows.entry(pattern.to_lowercase()).or_default().extend(idx);
        }
        for cats in rows.values_mut() {
            cats.sort_unstable();
            cats.dedup();
        }
        Ok(CategoryRepr {
            categories: names,
            patterns: rows,
        }
        .into())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (_, header) = lines
            .next()
            .ok_or_else(|| TriageError::Parse("category lexicon has no header line".into()))?;
        let categories: Vec<&str> = header
            .split([',', '\t'])
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines {
            let (pattern, cats) = line.split_once('\t').ok_or_else(|| {
                TriageError::Parse(format!("category lexicon line {n}: expected pattern<TAB>categories"))
            })?;
            let cats: Vec<String> = cats
                .split(',')
                .map(|c| c.trim().to_owned())
                .filter(|c| !c.is_empty())
                .collect();
            rows.push((pattern.trim().to_owned(), cats));
        }
        Self::new(&categories, rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn demo() -> Self {
        Self::parse(DEMO_CATEGORIES).expect("bundled category lexicon is valid")
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Distinct categories matched by one token.
    pub fn matches(&self, token: &str) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if let Some(cats) = self.exact.get(token) {
            out.extend(cats.iter().copied());
        }
        for (prefix, cats) in &self.prefixes {
            if token.starts_with(prefix.as_str()) {
                out.extend(cats.iter().copied());
            }
        }
        out
    }

    /// Every concrete (non-prefix) pattern listed under `category`.
    pub fn exact_terms(&self, category: &str) -> Vec<String> {
        let Some(c) = self.categories.iter().position(|n| n == category) else {
            return Vec::new();
        };
        let mut out: Vec<String> = self
            .exact
            .iter()
            .filter(|(_, cats)| cats.contains(&c))
            .map(|(t, _)| t.clone())
            .collect();
        out.sort();
        out
    }
}

/// Fraction of tokens falling in each category.
pub fn category_features(tokens: &[String], lex: &CategoryLexicon) -> Vec<f64> {
    let mut counts = vec![0.0; lex.len()];
    for t in tokens {
        for c in lex.matches(t) {
            counts[c] += 1.0;
        }
    }
    let n = normaliser(tokens.len());
    counts.iter_mut().for_each(|v| *v /= n);
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionLexicon {
    rows: BTreeMap<String, [f64; 8]>,
}

impl EmotionLexicon {
    /// Rows are rescaled to sum to one; negative or all-zero rows are rejected.
    pub fn new<I: IntoIterator<Item = (String, [f64; 8])>>(rows: I) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (term, mut p) in rows {
            if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(TriageError::Parse(format!("emotion row `{term}` has a negative or non-finite value")));
            }
            let total: f64 = p.iter().sum();
            if total <= 0.0 {
                return Err(TriageError::Parse(format!("emotion row `{term}` is all zero")));
            }
            p.iter_mut().for_each(|v| *v /= total);
            out.insert(term.to_lowercase(), p);
        }
        Ok(Self { rows: out })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in content_lines(text) {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 9 {
                return Err(TriageError::Parse(format!(
                    "emotion lexicon line {n}: expected 9 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let mut p = [0.0; 8];
            for (slot, raw) in p.iter_mut().zip(&fields[1..]) {
                *slot = raw.trim().parse().map_err(|_| {
                    TriageError::Parse(format!("emotion lexicon line {n}: bad probability `{raw}`"))
                })?;
            }
            rows.push((fields[0].trim().to_owned(), p));
        }
        Self::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn demo() -> Self {
        Self::parse(DEMO_EMOTIONS).expect("bundled emotion lexicon is valid")
    }

    pub fn get(&self, term: &str) -> Option<&[f64; 8]> {
        self.rows.get(term)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionProfile {
    pub probs: [f64; 8],
    pub dominant: usize,
}

impl EmotionProfile {
    pub fn dominant_name(&self) -> &'static str {
        EMOTIONS[self.dominant]
    }
}

/// Mean emotion row over lexicon-covered tokens; uniform when nothing is covered.
pub fn emotion_profile(tokens: &[String], lex: &EmotionLexicon) -> EmotionProfile {
    let mut sum = [0.0; 8];
    let mut covered = 0usize;
    for row in tokens.iter().filter_map(|t| lex.get(t)) {
        covered += 1;
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    let probs = if covered == 0 {
        [1.0 / 8.0; 8]
    } else {
        sum.map(|s| s / covered as f64)
    };
    let mut dominant = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[dominant] {
            dominant = i;
        }
    }
    EmotionProfile { probs, dominant }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectivityLexicon {
    entries: BTreeMap<String, (Strength, Polarity)>,
}

impl SubjectivityLexicon {
    pub fn new<I: IntoIterator<Item = (String, Strength, Polarity)>>(entries: I) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (term, s, p) in entries {
            let term = term.to_lowercase();
            if out.insert(term.clone(), (s, p)).is_some() {
                return Err(TriageError::Parse(format!("duplicate subjectivity term `{term}`")));
            }
        }
        Ok(Self { entries: out })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in content_lines(text) {
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let bad = || TriageError::Parse(format!("subjectivity lexicon line {n}: `{line}`"));
            if fields.len() != 3 {
                return Err(bad());
            }
            let strength = match fields[1] {
                "strong" => Strength::Strong,
                "weak" => Strength::Weak,
                _ => return Err(bad()),
            };
            let polarity = match fields[2] {
                "positive" => Polarity::Positive,
                "negative" => Polarity::Negative,
                "neutral" => Polarity::Neutral,
                _ => return Err(bad()),
            };
            entries.push((fields[0].to_owned(), strength, polarity));
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn demo() -> Self {
        Self::parse(DEMO_SUBJECTIVITY).expect("bundled subjectivity lexicon is valid")
    }

    pub fn get(&self, term: &str) -> Option<(Strength, Polarity)> {
        self.entries.get(term).copied()
    }
}

/// `[strong, weak, positive, negative]` match counts over the token count.
pub fn subjectivity_features(tokens: &[String], lex: &SubjectivityLexicon) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (s, p) in tokens.iter().filter_map(|t| lex.get(t)) {
        match s {
            Strength::Strong => out[0] += 1.0,
            Strength::Weak => out[1] += 1.0,
        }
        match p {
            Polarity::Positive => out[2] += 1.0,
            Polarity::Negative => out[3] += 1.0,
            Polarity::Neutral => {}
        }
    }
    let n = normaliser(tokens.len());
    out.map(|v| v / n)
}

/// `[positive, negative]`: the polarity half of the subjectivity features.
pub fn sentiment_features(tokens: &[String], lex: &SubjectivityLexicon) -> [f64; 2] {
    let s = subjectivity_features(tokens, lex);
    [s[2], s[3]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ClueRepr", into = "ClueRepr")]
pub struct ClueLexicon {
    terms: BTreeSet<String>,
    lookup: HashSet<String>,
}

#[derive(Serialize, Deserialize)]
struct ClueRepr {
    terms: BTreeSet<String>,
}

impl From<ClueRepr> for ClueLexicon {
    fn from(r: ClueRepr) -> Self {
        Self::new(r.terms)
    }
}

impl From<ClueLexicon> for ClueRepr {
    fn from(l: ClueLexicon) -> Self {
        Self { terms: l.terms }
    }
}

impl ClueLexicon {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: BTreeSet<String> = terms
            .into_iter()
            .map(|t| t.as_ref().split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        let lookup = terms.iter().cloned().collect();
        Self { terms, lookup }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(content_lines(text).map(|(_, l)| l))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&read(path.as_ref())?))
    }

    pub fn demo() -> Self {
        Self::parse(DEMO_CLUES)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn contains(&self, term: &str) -> bool {
        self.lookup.contains(term)
    }
}

/// `[matches / token count, any match]`, counting unigram and bigram hits.
pub fn clue_features(tokens: &[String], lex: &ClueLexicon) -> [f64; 2] {
    if tokens.is_empty() {
        return [0.0, 0.0];
    }
    let unigram_hits = tokens.iter().filter(|t| lex.contains(t)).count();
    let bigram_hits = tokens
        .windows(2)
        .filter(|w| lex.contains(&format!("{} {}", w[0], w[1])))
        .count();
    let hits = (unigram_hits + bigram_hits).min(tokens.len());
    [hits as f64 / tokens.len() as f64, if hits > 0 { 1.0 } else { 0.0 }]
}

/// All lexicons a feature pipeline may need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicons {
    pub categories: Option<CategoryLexicon>,
    pub emotions: Option<EmotionLexicon>,
    pub subjectivity: Option<SubjectivityLexicon>,
    pub clues: Option<ClueLexicon>,
}

pub const CATEGORY_FILE: &str = "categories.tsv";
pub const EMOTION_FILE: &str = "emotions.tsv";
pub const SUBJECTIVITY_FILE: &str = "subjectivity.tsv";
pub const CLUE_FILE: &str = "clues.txt";

impl Lexicons {
    /// The bundled demonstration lexicons.
    pub fn demo() -> Self {
        Self {
            categories: Some(CategoryLexicon::demo()),
            emotions: Some(EmotionLexicon::demo()),
            subjectivity: Some(SubjectivityLexicon::demo()),
            clues: Some(ClueLexicon::demo()),
        }
    }

    /// Reads whichever of the four standard file names exist in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(TriageError::Config(format!("lexicon directory {} does not exist", dir.display())));
        }
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        Ok(Self {
            categories: opt(CATEGORY_FILE).map(CategoryLexicon::load).transpose()?,
            emotions: opt(EMOTION_FILE).map(EmotionLexicon::load).transpose()?,
            subjectivity: opt(SUBJECTIVITY_FILE).map(SubjectivityLexicon::load).transpose()?,
            clues: opt(CLUE_FILE).map(ClueLexicon::load).transpose()?,
        })
    }

    /// Writes the bundled lexicon files into `dir`.
    pub fn write_demo_files(dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| TriageError::io(dir, e))?;
        for (name, body) in [
            (CATEGORY_FILE, DEMO_CATEGORIES),
            (EMOTION_FILE, DEMO_EMOTIONS),
            (SUBJECTIVITY_FILE, DEMO_SUBJECTIVITY),
            (CLUE_FILE, DEMO_CLUES),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| TriageError::io(&p, e))?;
        }
        Ok(())
    }
}
