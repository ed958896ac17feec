//! Collapsed Gibbs LDA over a synthetic forum, then topic inference for new text.

use triage::synthgen::{generate, SynthConfig};
use triage::textprep::{tokenize, Stopwords};
use triage::topics::{lda_infer, lda_train, LdaConfig};

fn main() -> triage::Result<()> {
    let s = generate(&SynthConfig::default())?;
    let stop = Stopwords::default();
    let docs: Vec<Vec<String>> = s.corpus.posts().iter().map(|p| tokenize(&p.body, &stop)).collect();
    let cfg = LdaConfig {
        topics: 12,
        train_iters: 300,
        infer_iters: 50,
        seed: 3,
        ..LdaConfig::default()
    };
    let model = lda_train(&docs, &cfg)?;
    println!("{} docs, {} terms, {} tokens", docs.len(), model.vocab_len(), model.assigned_tokens());
    for k in 0..model.topics {
        println!("topic {k:>2}: {}", model.top_words(k, 8).join(" "));
    }

    let text = "my manager changed the roster again and the interview is on my shift";
    let theta = lda_infer(&model, &tokenize(text, &stop), cfg.infer_iters, 0);
    let k = theta.argmax();
    println!("\n\"{text}\"\n-> topic {k} ({:.2}): {}", theta.0[k], model.top_words(k, 5).join(" "));
    Ok(())
}
