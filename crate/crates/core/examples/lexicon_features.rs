//! Psycholinguistic features of a few posts using the bundled lexicons.

use triage::psychfeat::{
    category_features, clue_features, emotion_profile, sentiment_features, subjectivity_features, Lexicons,
};
use triage::textprep::raw_tokens;

fn main() {
    let lex = Lexicons::demo();
    let (cats, emo, subj, clues) = (
        lex.categories.unwrap(),
        lex.emotions.unwrap(),
        lex.subjectivity.unwrap(),
        lex.clues.unwrap(),
    );
    let posts = [
        "Had a great day at the beach with friends, feeling really happy.",
        "I'm so worried about exams. Can't sleep, keep panicking.",
        "Everything feels hopeless. I just want to die, there's no point anymore.",
    ];
    for text in posts {
        let tokens = raw_tokens(text);
        println!("{text}");
        let active: Vec<String> = cats
            .categories()
            .iter()
            .zip(category_features(&tokens, &cats))
            .filter(|(_, v)| *v > 0.0)
            .map(|(c, v)| format!("{c}={v:.2}"))
            .collect();
        println!("  categories   {}", active.join(" "));
        let e = emotion_profile(&tokens, &emo);
        println!("  emotion      {} ({:.2})", e.dominant_name(), e.probs[e.dominant]);
        println!("  subjectivity {:?}", subjectivity_features(&tokens, &subj));
        println!("  sentiment    {:?}", sentiment_features(&tokens, &subj));
        println!("  clues        {:?}\n", clue_features(&tokens, &clues));
    }
}
