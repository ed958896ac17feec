//! How often a moderator is first to reply, and how fast, per severity.

use triage::analytics::{response_stats, response_table};
use triage::synthgen::{generate, SynthConfig};

fn main() -> triage::Result<()> {
    let s = generate(&SynthConfig::default())?;
    // true severities of every member post, labeled or not
    let stats = response_stats(&s.corpus, &s.truth);
    print!("{}", response_table(&stats));
    Ok(())
}
