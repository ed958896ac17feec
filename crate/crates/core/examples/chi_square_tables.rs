//! First-versus-last severity tables and their chi-square tests.

use triage::analytics::{
    chi_square, contingency_table_text, first_last_table, user_histories, ContingencyTable2x2, TableScheme,
};
use triage::synthgen::{generate, SynthConfig};

fn main() -> triage::Result<()> {
    // counts of users whose first and last post were flagged or green
    let t = ContingencyTable2x2 {
        cells: [[120, 46], [78, 208]],
    };
    let c = chi_square(&t)?;
    print!("{}", contingency_table_text(TableScheme::PostFlagged, &t, Some(&c)));

    // the same tables built from the true severities of a synthetic forum
    let s = generate(&SynthConfig::default())?;
    let users = user_histories(&s.corpus, &s.truth);
    for scheme in TableScheme::ALL {
        let t = first_last_table(&users, scheme);
        println!();
        print!("{}", contingency_table_text(scheme, &t, chi_square(&t).ok().as_ref()));
    }
    Ok(())
}
