//! Thread-context and forum-metadata features.
//!
//! Nothing here ever looks at posts that come after the target in thread
//! order.

use chrono::Timelike;
use serde::{Deserialize, Serialize};

use crate::corpus::{Post, ThreadView};
use crate::error::{Result, TriageError};
use crate::psychfeat::{category_features, CategoryLexicon};
use crate::textprep::{raw_tokens, split_sentences, tokenize, Stopwords, TokenList};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextConfig {
    /// Number of preceding other-author posts used as discussion context.
    pub window_size: usize,
    pub include_temporal: bool,
    /// UTC hours where morning, afternoon and evening start; night runs from
    /// midnight to the first boundary. Day is morning plus afternoon.
    pub bucket_starts: [u32; 3],
}

impl Default for ContextConfig {
    fn default() -> Self {
        Self {
            window_size: 3,
            include_temporal: false,
            bucket_starts: [6, 12, 18],
        }
    }
}

impl ContextConfig {
    pub fn metadata_len(&self) -> usize {
        if self.include_temporal {
            10
        } else {
            4
        }
    }

    fn validate(&self) -> Result<()> {
        let [a, b, c] = self.bucket_starts;
        if !(a > 0 && a < b && b < c && c < 24) {
            return Err(TriageError::Config(format!(
                "temporal bucket boundaries must be increasing hours in (0, 24), got {:?}",
                self.bucket_starts
            )));
        }
        Ok(())
    }
}

/// Tokens of the target author's earlier posts in this thread.
pub fn author_prior_tokens(thread: &ThreadView<'_>, target: &Post, stopwords: &Stopwords) -> Result<TokenList> {
    let pos = thread.require_position(&target.post_id)?;
    Ok(thread.posts[..pos]
        .iter()
        .filter(|p| p.author_id == target.author_id)
        .flat_map(|p| tokenize(&p.body, stopwords))
        .collect())
}

/// Tokens of the `w` most recent earlier posts written by someone else.
pub fn prior_window_tokens(
    thread: &ThreadView<'_>,
    target: &Post,
    w: usize,
    stopwords: &Stopwords,
) -> Result<TokenList> {
    let pos = thread.require_position(&target.post_id)?;
    let mut window: Vec<&Post> = thread.posts[..pos]
        .iter()
        .rev()
        .filter(|p| p.author_id != target.author_id)
        .take(w)
        .copied()
        .collect();
    window.reverse();
    Ok(window.iter().flat_map(|p| tokenize(&p.body, stopwords)).collect())
}

/// Raw tokens of the final sentence of the body.
pub fn last_sentence_tokens(target: &Post) -> TokenList {
    split_sentences(&target.body)
        .last()
        .map(|s| raw_tokens(s))
        .unwrap_or_default()
}

pub fn last_sentence_categories(target: &Post, lex: &CategoryLexicon) -> Vec<f64> {
    category_features(&last_sentence_tokens(target), lex)
}

/// `[views, kudos, thread length, position]`, optionally followed by
/// one-hot `[day, night]` and `[morning, afternoon, evening, night]`.
pub fn metadata_features(target: &Post, thread: &ThreadView<'_>, cfg: &ContextConfig) -> Result<Vec<f64>> {
    let pos = thread.require_position(&target.post_id)?;
    let mut out = vec![
        target.views as f64,
        target.kudos as f64,
        thread.len() as f64,
        pos as f64,
    ];
    if cfg.include_temporal {
        cfg.validate()?;
        let hour = target.timestamp.hour();
        let [morning, afternoon, evening] = cfg.bucket_starts;
        let bucket = if hour < morning {
            3
        } else if hour < afternoon {
            0
        } else if hour < evening {
            1
        } else {
            2
        };
        let daytime = bucket <= 1;
        out.extend([daytime as u8 as f64, !daytime as u8 as f64]);
        out.extend((0..4).map(|b| (b == bucket) as u8 as f64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_timestamp, AuthorRole, Corpus};

    fn post(id: &str, author: &str, minute: u32, body: &str) -> Post {
        Post {
            post_id: id.into(),
            thread_id: "t".into(),
            author_id: author.into(),
            author_role: AuthorRole::Member,
            timestamp: parse_timestamp(&format!("2015-05-01T10:{minute:02}:00Z")).unwrap(),
            subject: String::new(),
            body: body.into(),
            kudos: 2,
            views: 10,
            label: None,
        }
    }

    fn toks(s: &[&str]) -> TokenList {
        s.iter().map(|t| t.to_string()).collect()
    }

    fn corpus(posts: Vec<Post>) -> Corpus {
        Corpus::from_posts(posts).unwrap()
    }

    #[test]
    fn author_prior_examples() {
        let c = corpus(vec![
            post("p1", "u1", 0, "first words"),
            post("p2", "u2", 1, "reply"),
            post("p3", "u1", 2, "again"),
            post("p4", "u1", 3, "later"),
        ]);
        let th = c.thread_of("t").unwrap();
        let none = Stopwords::none();
        assert_eq!(author_prior_tokens(&th, c.get("p3").unwrap(), &none).unwrap(), toks(&["first", "words"]));
        assert!(author_prior_tokens(&th, c.get("p1").unwrap(), &none).unwrap().is_empty());
        assert!(!author_prior_tokens(&th, c.get("p3").unwrap(), &none)
            .unwrap()
            .contains(&"later".to_string()));
        let stranger = post("px", "u1", 5, "x");
        assert!(matches!(author_prior_tokens(&th, &stranger, &none), Err(TriageError::InvalidArgument(_))));
    }

    #[test]
    fn window_examples() {
        let mut posts: Vec<Post> = (0..5).map(|i| post(&format!("o{i}"), &format!("x{i}"), i, &format!("w{i}"))).collect();
        posts.push(post("me", "u1", 10, "target"));
        let c = corpus(posts);
        let th = c.thread_of("t").unwrap();
        let none = Stopwords::none();
        let target = c.get("me").unwrap();
        assert_eq!(prior_window_tokens(&th, target, 3, &none).unwrap(), toks(&["w2", "w3", "w4"]));
        assert!(prior_window_tokens(&th, target, 0, &none).unwrap().is_empty());

        let c = corpus(vec![post("a", "x", 0, "only"), post("b", "u1", 1, "t")]);
        let th = c.thread_of("t").unwrap();
        assert_eq!(prior_window_tokens(&th, c.get("b").unwrap(), 3, &none).unwrap(), toks(&["only"]));

        let c = corpus(vec![post("a", "u1", 0, "mine"), post("b", "u1", 1, "t")]);
        let th = c.thread_of("t").unwrap();
        assert!(prior_window_tokens(&th, c.get("b").unwrap(), 3, &none).unwrap().is_empty());
    }

    #[test]
    fn last_sentence_examples() {
        let lex = CategoryLexicon::new(&["negemo"], [("hopeless".to_string(), vec!["negemo".to_string()])]).unwrap();
        let p = post("p", "u", 0, "Great day. I feel hopeless.");
        assert!((last_sentence_categories(&p, &lex)[0] - 1.0 / 3.0).abs() < 1e-12);
        let single = post("p", "u", 0, "so hopeless today");
        assert_eq!(
            last_sentence_categories(&single, &lex),
            category_features(&raw_tokens(&single.body), &lex)
        );
        assert_eq!(last_sentence_categories(&post("p", "u", 0, ""), &lex), vec![0.0]);
    }

    #[test]
    fn metadata_examples() {
        let posts: Vec<Post> = (0..5).map(|i| post(&format!("p{i}"), "u", i, "x")).collect();
        let c = corpus(posts);
        let th = c.thread_of("t").unwrap();
        let cfg = ContextConfig::default();
        assert_eq!(metadata_features(c.get("p2").unwrap(), &th, &cfg).unwrap(), vec![10.0, 2.0, 5.0, 2.0]);

        let mut night = post("n", "u", 0, "x");
        night.timestamp = parse_timestamp("2015-05-01T03:00:00Z").unwrap();
        let c = corpus(vec![night]);
        let th = c.thread_of("t").unwrap();
        let cfg = ContextConfig {
            include_temporal: true,
            ..ContextConfig::default()
        };
        let v = metadata_features(c.get("n").unwrap(), &th, &cfg).unwrap();
        assert_eq!(&v[4..6], &[0.0, 1.0]);
        assert_eq!(&v[6..], &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(v.len(), cfg.metadata_len());
    }

    #[test]
    fn temporal_bucket_boundaries() {
        let cfg = ContextConfig {
            include_temporal: true,
            ..ContextConfig::default()
        };
        for (hour, bucket) in [(0, 3), (5, 3), (6, 0), (11, 0), (12, 1), (17, 1), (18, 2), (23, 2)] {
            let mut p = post("p", "u", 0, "");
            p.timestamp = parse_timestamp(&format!("2015-05-01T{hour:02}:30:00Z")).unwrap();
            let c = corpus(vec![p]);
            let v = metadata_features(c.get("p").unwrap(), &c.thread_of("t").unwrap(), &cfg).unwrap();
            assert_eq!(v[6 + bucket], 1.0, "hour {hour}");
            assert_eq!(v[4], (bucket <= 1) as u8 as f64, "hour {hour}");
        }
    }

    #[test]
    fn later_posts_never_change_context() {
        let base = vec![
            post("a", "u1", 0, "hello there"),
            post("b", "u2", 1, "how are you"),
            post("c", "u1", 2, "target text"),
            post("d", "u1", 3, "future words"),
            post("e", "u3", 4, "more future"),
        ];
        let mut changed = base.clone();
        changed[3].body = "completely different".into();
        changed[4].author_id = "u1".into();
        changed[4].views = 999;
        let none = Stopwords::none();
        let cfg = ContextConfig {
            include_temporal: true,
            ..ContextConfig::default()
        };
        let features = |posts: Vec<Post>| {
            let c = corpus(posts);
            let th = c.thread_of("t").unwrap();
            let t = c.get("c").unwrap();
            (
                author_prior_tokens(&th, t, &none).unwrap(),
                prior_window_tokens(&th, t, 3, &none).unwrap(),
                metadata_features(t, &th, &cfg).unwrap(),
            )
        };
        assert_eq!(features(base), features(changed));
    }

    #[test]
    fn window_monotone_in_size() {
        let mut posts: Vec<Post> = (0..6).map(|i| post(&format!("o{i}"), &format!("x{}", i % 3), i, &format!("w{i} z{i}"))).collect();
        posts.push(post("me", "u1", 30, "target"));
        let c = corpus(posts);
        let th = c.thread_of("t").unwrap();
        let target = c.get("me").unwrap();
        let none = Stopwords::none();
        let mut prev: TokenList = Vec::new();
        for w in 0..8 {
            let cur = prior_window_tokens(&th, target, w, &none).unwrap();
            assert!(cur.len() <= 2 * w);
            assert!(cur.ends_with(&prev), "w={w}");
            prev = cur;
        }
    }
}
