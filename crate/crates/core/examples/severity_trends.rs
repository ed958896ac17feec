//! Per-user trend lines of monthly severity, summarised at several slope thresholds.

use triage::analytics::{
    goodness_of_fit, trend_summary, trend_table, user_histories, user_trends, SeverityScale, TrendLine,
};
use triage::synthgen::{generate, SynthConfig};

fn lines(users: &[triage::analytics::UserHistory], scale: SeverityScale) -> Vec<TrendLine> {
    user_trends(users, scale)
        .iter()
        .map(|u| TrendLine {
            m: u.slope,
            b: u.intercept,
            r: u.r,
        })
        .collect()
}

fn main() -> triage::Result<()> {
    let s = generate(&SynthConfig::default())?;
    let users = user_histories(&s.corpus, &s.truth);
    let flag = lines(&users, SeverityScale::Flagged);
    let fine = lines(&users, SeverityScale::FineGrained);
    println!("{} users, {} active with a trend line\n", users.len(), fine.len());

    let rows: Vec<_> = [Some(0.02), Some(0.05), Some(0.10), Some(0.15), None]
        .into_iter()
        .map(|t| (trend_summary(&flag, t), trend_summary(&fine, t)))
        .collect();
    println!("{:>37}  |  fine-grained", "flagged vs green");
    print!("{}", trend_table(&rows));

    let g = goodness_of_fit(&fine);
    println!("\nfine-grained r: rising {:.2} +/- {:.2}, falling {:.2} +/- {:.2}",
        g.positive_avg_r, g.positive_stdev_r, g.negative_avg_r, g.negative_stdev_r);

    let planted = users.iter().filter(|u| s.declining_users.contains(&u.author_id));
    let (mut n, mut neg) = (0, 0);
    for u in planted {
        n += 1;
        neg += u.trend(SeverityScale::FineGrained).is_ok_and(|t| t.m < 0.0) as usize;
    }
    println!("planted decliners with a falling line: {neg}/{n}");
    Ok(())
}
