//! Seeded synthetic forum corpus with known severities.
//!
//! Bodies are filler plus class marker tokens. Many markers are emitted as
//! unseen inflections of category-lexicon prefixes, so a bag of words sees
//! them as rare terms while category counts still pick them up. Authors carry
//! a persistent severity state across posts, and a configurable share of
//! users decline in severity month by month.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_timestamp, AuthorRole, Corpus, Post};
use crate::densevec::VectorStore;
use crate::error::{Result, TriageError};
use crate::label::SeverityLabel;
use crate::textprep::split_sentences;

/// Marker words for one class: prefixes that get random inflections, and
/// whole words emitted as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub prefixes: Vec<String>,
    pub words: Vec<String>,
    /// Multi-word cues placed verbatim.
    pub phrases: Vec<String>,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn default_markers() -> [MarkerSet; 4] {
    [
        MarkerSet {
            prefixes: strings(&["happi", "thank", "love", "excit", "enjoy", "smil", "laugh", "calm", "relax", "peace"]),
            words: strings(&["happy", "glad", "grateful", "great", "good", "better", "fun", "nice", "awesome", "proud"]),
            phrases: vec![],
        },
        MarkerSet {
            prefixes: strings(&["worr", "anxi", "nervous", "panic", "scare", "fear", "stress", "overwhelm", "dread", "insecur"]),
            words: strings(&["worried", "anxious", "nervous", "afraid", "scared", "stressed", "tense", "uneasy", "restless"]),
            phrases: vec![],
        },
        MarkerSet {
            prefixes: strings(&["depress", "hopeless", "worthless", "griev", "heartbr", "failure"]),
            words: strings(&["sad", "cry", "crying", "tears", "lonely", "alone", "empty", "miserable", "numb", "broken", "useless"]),
            phrases: vec![],
        },
        MarkerSet {
            prefixes: strings(&["suicid", "overdos", "kill", "death", "funeral", "grave"]),
            words: strings(&["die", "dying", "dead", "goodbye", "pills", "razor"]),
            phrases: strings(&["kill myself", "end it", "cut myself", "hurt myself", "no point", "give up", "not safe"]),
        },
    ]
}

const FILLER: &[&str] = &[
    "just", "went", "got", "day", "thing", "things", "still", "back", "around", "kind", "lot", "bit", "week",
    "night", "morning", "home", "place", "house", "room", "bed", "car", "bus", "train", "walk", "went", "told",
    "said", "asked", "know", "thought", "feel", "feeling", "really", "maybe", "probably", "seems", "post",
    "forum", "read", "reading", "write", "writing", "wrote", "long", "little", "some", "same", "new", "old",
    "first", "last", "next", "again", "also", "even", "much", "many", "every", "other", "since", "while",
    "later", "early", "soon", "yesterday", "tomorrow", "weekend", "people", "someone", "everyone", "anyone",
    "something", "everything", "anything", "out", "over", "into", "about", "like", "get", "go", "going",
    "come", "came", "make", "made", "take", "took", "see", "saw", "look", "looked", "keep", "kept", "try",
    "tried", "trying", "want", "wanted", "need", "needed", "ask", "call", "called", "text", "phone",
];

const TOPICS: &[&[&str]] = &[
    &["school", "teacher", "homework", "lecture", "campus", "assignment", "semester", "classes", "grades", "uni", "tutor", "essay"],
    &["job", "shift", "manager", "office", "interview", "hours", "pay", "coworker", "meeting", "roster", "career", "resume"],
    &["parents", "sister", "brother", "mother", "father", "cousin", "grandma", "siblings", "dinner", "argument", "relatives", "household"],
    &["music", "song", "guitar", "band", "album", "playlist", "concert", "lyrics", "singing", "piano", "headphones", "gig"],
    &["football", "gym", "running", "training", "match", "soccer", "basketball", "swim", "coach", "fitness", "netball", "season"],
    &["game", "games", "console", "online", "level", "stream", "gaming", "xbox", "controller", "server", "quest", "multiplayer"],
    &["doctor", "sleep", "medication", "appointment", "psychologist", "gp", "prescription", "therapy", "clinic", "insomnia", "dose", "referral"],
    &["boyfriend", "girlfriend", "partner", "date", "relationship", "breakup", "crush", "dating", "ex", "wedding", "anniversary", "jealous"],
];

const MODERATOR_WORDS: &[&str] = &[
    "support", "talk", "help", "helpline", "reach", "service", "welcome", "thanks", "sharing", "listen", "here",
    "team", "contact", "safe", "care", "check",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    /// Posts given a gold label, sampled per class to match `proportions`.
    pub n_labeled: usize,
    pub months: u32,
    pub start: String,
    /// GREEN, AMBER, RED, CRISIS.
    pub proportions: [f64; 4],
    pub moderator_fraction: f64,
    pub declining_fraction: f64,
    /// Share of users who post in a single month only.
    pub inactive_fraction: f64,
    /// Chance a post opens a new thread rather than joining a recent one.
    pub new_thread_rate: f64,
    /// Chance an author keeps their previous severity from post to post.
    pub persistence: f64,
    /// Mean number of own-class marker tokens per post.
    pub marker_rate: f64,
    /// Share of markers emitted as unseen inflections instead of whole words.
    pub variant_rate: f64,
    /// Mean number of markers from another class per post.
    pub noise_rate: f64,
    pub topics: usize,
    pub vector_dim: usize,
    pub markers: [MarkerSet; 4],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_users: 320,
            n_labeled: 1188,
            months: 12,
            start: "2015-01-01T00:00:00Z".into(),
            proportions: [0.60, 0.25, 0.12, 0.03],
            moderator_fraction: 0.03,
            declining_fraction: 0.15,
            inactive_fraction: 0.5,
            new_thread_rate: 0.35,
            persistence: 0.6,
            marker_rate: 3.0,
            variant_rate: 0.4,
            noise_rate: 0.4,
            topics: 8,
            vector_dim: 8,
            markers: default_markers(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TriageError::Config(m));
        let sum: f64 = self.proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || self.proportions.iter().any(|&p| p < 0.0) {
            return bad(format!("class proportions must be non-negative and sum to 1, got {:?}", self.proportions));
        }
        for (name, v) in [
            ("moderator_fraction", self.moderator_fraction),
            ("declining_fraction", self.declining_fraction),
            ("inactive_fraction", self.inactive_fraction),
            ("new_thread_rate", self.new_thread_rate),
            ("persistence", self.persistence),
            ("variant_rate", self.variant_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.marker_rate > 0.0) || !(self.noise_rate >= 0.0) {
            return bad("marker_rate must be positive and noise_rate non-negative".into());
        }
        if self.n_users == 0 || self.months < 2 {
            return bad("need at least one user and two months".into());
        }
        if self.topics == 0 || self.topics > TOPICS.len() {
            return bad(format!("topics must be in 1..={}", TOPICS.len()));
        }
        if self.vector_dim == 0 {
            return bad("vector_dim must be positive".into());
        }
        if self.markers.iter().any(|m| m.prefixes.is_empty() && m.words.is_empty()) {
            return bad("every class needs marker words".into());
        }
        parse_timestamp(&self.start)?;
        Ok(())
    }
}

/// Generated corpus plus the ground truth behind it.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// True severity of every member post, labeled or not.
    pub truth: BTreeMap<String, SeverityLabel>,
    pub declining_users: Vec<String>,
    pub vectors: VectorStore,
}

struct Draft {
    time: DateTime<Utc>,
    author: usize,
    severity: SeverityLabel,
}

struct Thread {
    last: DateTime<Utc>,
    topic: usize,
    subject: String,
}

struct Gen<'c> {
    cfg: &'c SynthConfig,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn poisson(&mut self, mean: f64) -> usize {
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).map(|d| d.sample(&mut self.rng) as usize).unwrap_or(0)
    }

    fn class_draw(&mut self) -> SeverityLabel {
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (i, &p) in self.cfg.proportions.iter().enumerate() {
            acc += p;
            if u < acc {
                return SeverityLabel::ALL[i];
            }
        }
        SeverityLabel::Green
    }

    fn inflect(&mut self, prefix: &str) -> String {
        const SUFFIXES: &[&str] = &["", "s", "ed", "ing", "ly", "ness", "er", "y"];
        let mut w = prefix.to_owned();
        w.push_str(SUFFIXES.choose(&mut self.rng).unwrap());
        for _ in 0..self.rng.gen_range(1..=3) {
            w.push(self.rng.gen_range(b'a'..=b'z') as char);
        }
        w
    }

    fn marker(&mut self, class: SeverityLabel) -> String {
        let set = &self.cfg.markers[class.index()];
        let phrase_share = if set.phrases.is_empty() { 0.0 } else { 0.25 };
        if self.rng.gen_bool(phrase_share) {
            return set.phrases.choose(&mut self.rng).unwrap().clone();
        }
        let use_prefix = !set.prefixes.is_empty() && (set.words.is_empty() || self.rng.gen_bool(self.cfg.variant_rate));
        if use_prefix {
            let p = set.prefixes.choose(&mut self.rng).unwrap().clone();
            self.inflect(&p)
        } else {
            set.words.choose(&mut self.rng).unwrap().clone()
        }
    }

    fn sentence(&mut self, topic: usize, len: usize) -> Vec<String> {
        (0..len)
            .map(|_| {
                if self.rng.gen_bool(0.3) {
                    TOPICS[topic].choose(&mut self.rng).unwrap().to_string()
                } else {
                    FILLER.choose(&mut self.rng).unwrap().to_string()
                }
            })
            .collect()
    }

    fn body(&mut self, severity: SeverityLabel, topic: usize) -> String {
        let n_sent = self.rng.gen_range(2..=5);
        let mut sentences: Vec<Vec<String>> = (0..n_sent)
            .map(|_| {
                let len = self.rng.gen_range(4..=9);
                self.sentence(topic, len)
            })
            .collect();
        let mut place = |g: &mut Self, word: String, late: bool| {
            let s = if late && g.rng.gen_bool(0.75) {
                n_sent - 1
            } else {
                g.rng.gen_range(0..n_sent)
            };
            let pos = g.rng.gen_range(0..=sentences[s].len());
            sentences[s].insert(pos, word);
        };
        let late = severity.is_urgent();
        let own = self.poisson(self.cfg.marker_rate);
        for _ in 0..own {
            let w = self.marker(severity);
            place(self, w, late);
        }
        // severe posts carry some lower-severity vocabulary as well
        if severity >= SeverityLabel::Red {
            let below = SeverityLabel::from_index(severity.index() - 1).unwrap();
            for _ in 0..self.poisson(self.cfg.marker_rate * 0.5) {
                let w = self.marker(below);
                place(self, w, false);
            }
        }
        for _ in 0..self.poisson(self.cfg.noise_rate) {
            let other = loop {
                let c = SeverityLabel::ALL[self.rng.gen_range(0..3)];
                if c != severity {
                    break c;
                }
            };
            let w = self.marker(other);
            place(self, w, false);
        }
        let mut text = String::new();
        for (i, s) in sentences.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            let mut line = s.join(" ");
            if let Some(first) = line.get(..1) {
                line = first.to_uppercase() + &line[1..];
            }
            text.push_str(&line);
            text.push(if i == n_sent - 1 && severity.is_flagged() && self.rng.gen_bool(0.3) { '!' } else { '.' });
        }
        text
    }

    fn moderator_body(&mut self, topic: usize) -> String {
        let mut words = self.sentence(topic, 4);
        for _ in 0..3 {
            words.insert(self.rng.gen_range(0..=words.len()), MODERATOR_WORDS.choose(&mut self.rng).unwrap().to_string());
        }
        let mut s = words.join(" ");
        s.push('.');
        format!("Hi {s} We are here if you want to talk.")
    }

    /// Severity schedule of one user's posts, in time order.
    fn user_severities(&mut self, months: &[i64], declining: bool) -> Vec<SeverityLabel> {
        if declining {
            let first = months[0];
            let span = (months[months.len() - 1] - first).max(1) as f64;
            let start = 2.0 + self.rng.gen_range(0.0..1.2);
            let noise = Normal::new(0.0, 0.35).unwrap();
            return months
                .iter()
                .map(|&m| {
                    let frac = (m - first) as f64 / span;
                    let level = start * (1.0 - frac) + noise.sample(&mut self.rng);
                    SeverityLabel::from_index(level.round().clamp(0.0, 3.0) as usize).unwrap()
                })
                .collect();
        }
        let mut cur = self.class_draw();
        months
            .iter()
            .enumerate()
            .map(|(i, _)| {
                if i > 0 && !self.rng.gen_bool(self.cfg.persistence) {
                    cur = self.class_draw();
                }
                cur
            })
            .collect()
    }
}

fn month_start(base: DateTime<Utc>, m: i64) -> DateTime<Utc> {
    use chrono::{Datelike, TimeZone};
    let total = base.year() as i64 * 12 + base.month0() as i64 + m;
    Utc.with_ymd_and_hms((total / 12) as i32, (total % 12) as u32 + 1, 1, 0, 0, 0).unwrap()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let base = parse_timestamp(&cfg.start)?;
    let mut g = Gen {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let months = cfg.months as i64;

    // member activity and severities
    let mut drafts: Vec<Draft> = Vec::new();
    let mut declining_users = Vec::new();
    for u in 0..cfg.n_users {
        let declining = g.rng.gen_bool(cfg.declining_fraction);
        let span = if declining {
            g.rng.gen_range(3.min(months)..=months.min(8))
        } else if g.rng.gen_bool(cfg.inactive_fraction) {
            1
        } else {
            g.rng.gen_range(2..=months.min(10))
        };
        let first = g.rng.gen_range(0..=months - span);
        let mut times = Vec::new();
        for m in first..first + span {
            let active = m == first || m == first + span - 1 || g.rng.gen_bool(0.7);
            if !active {
                continue;
            }
            let n = 1 + g.poisson(if declining { 1.5 } else { 1.0 });
            let start = month_start(base, m);
            let len = (month_start(base, m + 1) - start).num_seconds();
            for _ in 0..n {
                times.push((m, start + Duration::seconds(g.rng.gen_range(0..len))));
            }
        }
        times.sort();
        let month_of: Vec<i64> = times.iter().map(|t| t.0).collect();
        let sev = g.user_severities(&month_of, declining);
        if declining {
            declining_users.push(format!("u{u:04}"));
        }
        for ((_, t), s) in times.into_iter().zip(sev) {
            drafts.push(Draft {
                time: t,
                author: u,
                severity: s,
            });
        }
    }
    drafts.sort_by(|a, b| a.time.cmp(&b.time).then(a.author.cmp(&b.author)));

    // threads, in time order
    let n_mods = ((cfg.n_users as f64 * cfg.moderator_fraction).ceil() as usize).max(1);
    let mut threads: Vec<Thread> = Vec::new();
    let mut last_thread: BTreeMap<usize, usize> = BTreeMap::new();
    let mut raw: Vec<(DateTime<Utc>, usize, Option<usize>, SeverityLabel, String)> = Vec::new();
    let delay = Exp::new(1.0 / (4.0 * 3600.0)).unwrap();
    let mod_reply = [0.04, 0.3, 0.35, 0.3];
    for d in &drafts {
        let recent = |th: &Thread, days: i64| d.time - th.last <= Duration::days(days) && th.last <= d.time;
        let own = last_thread.get(&d.author).copied().filter(|&i| recent(&threads[i], 7));
        let tid = match own {
            Some(i) if g.rng.gen_bool(0.5) => i,
            _ => {
                let open: Vec<usize> = (0..threads.len()).filter(|&i| recent(&threads[i], 3)).collect();
                if open.is_empty() || g.rng.gen_bool(cfg.new_thread_rate) {
                    let topic = g.rng.gen_range(0..cfg.topics);
                    let subject = g.sentence(topic, 3).join(" ");
                    threads.push(Thread {
                        last: d.time,
                        topic,
                        subject,
                    });
                    threads.len() - 1
                } else {
                    *open.choose(&mut g.rng).unwrap()
                }
            }
        };
        threads[tid].last = threads[tid].last.max(d.time);
        last_thread.insert(d.author, tid);
        let body = g.body(d.severity, threads[tid].topic);
        raw.push((d.time, tid, Some(d.author), d.severity, body));
        if g.rng.gen_bool(mod_reply[d.severity.index()]) {
            let secs = (delay.sample(&mut g.rng) as i64).max(300);
            let body = g.moderator_body(threads[tid].topic);
            raw.push((d.time + Duration::seconds(secs), tid, None, SeverityLabel::Green, body));
        }
    }
    raw.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    // ids, labels and metadata
    let mut posts = Vec::with_capacity(raw.len());
    let mut truth = BTreeMap::new();
    let mut by_class: [Vec<usize>; 4] = Default::default();
    let mut mod_rng_pick = 0usize;
    for (i, (time, tid, author, sev, body)) in raw.into_iter().enumerate() {
        let post_id = format!("p{:06}", i + 1);
        let (author_id, role) = match author {
            Some(u) => (format!("u{u:04}"), AuthorRole::Member),
            None => {
                mod_rng_pick = (mod_rng_pick + 1 + g.rng.gen_range(0..n_mods)) % n_mods;
                (format!("mod{mod_rng_pick:02}"), AuthorRole::Moderator)
            }
        };
        if role == AuthorRole::Member {
            truth.insert(post_id.clone(), sev);
            by_class[sev.index()].push(posts.len());
        }
        let views = 5 + g.poisson(40.0) as u64;
        let kudos = g.poisson(0.5 + 0.5 * sev.index() as f64) as u64;
        posts.push(Post {
            post_id,
            thread_id: format!("t{tid:05}"),
            author_id,
            author_role: role,
            timestamp: time,
            subject: threads[tid].subject.clone(),
            body,
            kudos,
            views,
            label: None,
        });
    }

    // stratified gold labels, largest remainder to hit n_labeled exactly
    let quotas: Vec<f64> = cfg.proportions.iter().map(|p| p * cfg.n_labeled as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).partial_cmp(&(quotas[a] - quotas[a].floor())).unwrap());
    let short = cfg.n_labeled - take.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        take[c] += 1;
    }
    for c in 0..4 {
        let pool = &mut by_class[c];
        if pool.len() < take[c] {
            log::warn!(
                "only {} {} posts generated, {} wanted for labeling",
                pool.len(),
                SeverityLabel::ALL[c],
                take[c]
            );
        }
        pool.shuffle(&mut g.rng);
        for &i in pool.iter().take(take[c]) {
            posts[i].label = Some(SeverityLabel::ALL[c]);
        }
    }

    // sentence vectors: class centroid plus noise
    let noise = Normal::new(0.0, 1.0).unwrap();
    let centroids: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..cfg.vector_dim).map(|_| noise.sample(&mut g.rng)).collect())
        .collect();
    let mut vectors = VectorStore::default();
    for p in &posts {
        let c = truth.get(&p.post_id).map_or(0, |s| s.index());
        for i in 0..split_sentences(&p.body).len() {
            let v: Vec<f64> = centroids[c]
                .iter()
                .map(|m| ((0.5 * m + noise.sample(&mut g.rng)) * 1e4).round() / 1e4)
                .collect();
            vectors.insert(&p.post_id, i, v)?;
        }
    }

    Ok(SynthCorpus {
        corpus: Corpus::from_posts(posts)?,
        truth,
        declining_users,
        vectors,
    })
}
