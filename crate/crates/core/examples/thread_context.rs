//! Context features for a post inside its thread: earlier posts by the same
//! author, a window of other people's replies, the last sentence and metadata.

use triage::contextfeat::{
    author_prior_tokens, last_sentence_tokens, metadata_features, prior_window_tokens, ContextConfig,
};
use triage::corpus::parse_corpus;
use triage::textprep::Stopwords;

const THREAD: &str = r#"{"post_id":"a1","thread_id":"t1","author_id":"sam","author_role":"member","timestamp":"2015-03-02T22:10:00Z","subject":"rough week","body":"Exams are piling up and I can't focus.","kudos":1,"views":40}
{"post_id":"a2","thread_id":"t1","author_id":"kit","author_role":"member","timestamp":"2015-03-02T22:40:00Z","body":"Same here, try breaking it into small chunks.","kudos":3,"views":35}
{"post_id":"a3","thread_id":"t1","author_id":"mod01","author_role":"moderator","timestamp":"2015-03-03T08:05:00Z","body":"Thanks for sharing. Our support line is open tonight if you want to talk.","kudos":2,"views":33}
{"post_id":"a4","thread_id":"t1","author_id":"sam","author_role":"member","timestamp":"2015-03-03T23:55:00Z","body":"Tried that. Still awake at midnight. I feel like I'm failing everything.","kudos":0,"views":20}
"#;

fn main() -> triage::Result<()> {
    let (corpus, _) = parse_corpus(THREAD)?;
    let thread = corpus.thread_of("t1")?;
    let target = corpus.get("a4").unwrap();
    let stop = Stopwords::default();
    println!("own earlier posts: {:?}", author_prior_tokens(&thread, target, &stop)?);
    println!("window of 2:       {:?}", prior_window_tokens(&thread, target, 2, &stop)?);
    println!("last sentence:     {:?}", last_sentence_tokens(target));
    let cfg = ContextConfig {
        include_temporal: true,
        ..ContextConfig::default()
    };
    // views, kudos, thread length, position, day, night, morning, afternoon, evening, night
    println!("metadata:          {:?}", metadata_features(target, &thread, &cfg)?);
    Ok(())
}
