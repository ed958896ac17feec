//! User-level longitudinal analyses: monthly severity trends, first/last
//! contingency tables with chi-square tests, activity duration, and moderator
//! response times.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::corpus::Corpus;
use crate::error::{Result, TriageError};
use crate::label::SeverityLabel;

/// Month-mean cut for FLAGGED: midpoint of GREEN and AMBER.
pub const FLAGGED_MONTH_THRESHOLD: f64 = 0.165;
/// Month-mean cut for URGENT: midpoint of AMBER and RED.
pub const URGENT_MONTH_THRESHOLD: f64 = 0.495;

/// Fine-grained numeric severity.
pub fn numeric_severity(label: SeverityLabel) -> f64 {
    match label {
        SeverityLabel::Crisis => 1.0,
        SeverityLabel::Red => 0.66,
        SeverityLabel::Amber => 0.33,
        SeverityLabel::Green => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityScale {
    /// FLAGGED = 1, GREEN = 0.
    Flagged,
    /// [`numeric_severity`].
    FineGrained,
}

impl SeverityScale {
    pub fn value(self, label: SeverityLabel) -> f64 {
        match self {
            Self::Flagged => label.is_flagged() as u8 as f64,
            Self::FineGrained => numeric_severity(label),
        }
    }
}

/// Months since year 0, so that consecutive calendar months differ by one.
pub fn month_number(t: &DateTime<Utc>) -> i64 {
    t.year() as i64 * 12 + t.month0() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyPoint {
    pub x: f64,
    pub y: f64,
}

/// Mean severity per calendar month; `x` counts months since the first one.
pub fn monthly_series(posts: &[(DateTime<Utc>, SeverityLabel)], scale: SeverityScale) -> Vec<MonthlyPoint> {
    let mut months: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for (t, l) in posts {
        let e = months.entry(month_number(t)).or_default();
        e.0 += scale.value(*l);
        e.1 += 1;
    }
    let Some(&first) = months.keys().next() else {
        return Vec::new();
    };
    months
        .into_iter()
        .map(|(m, (sum, n))| MonthlyPoint {
            x: (m - first) as f64,
            y: sum / n as f64,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendLine {
    pub m: f64,
    pub b: f64,
    pub r: f64,
}

/// Least-squares line through the points, with Pearson r (0 when y is constant).
pub fn fit_trend(points: &[MonthlyPoint]) -> Result<TrendLine> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.y - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return Err(TriageError::invalid("a trend needs at least two distinct months"));
    }
    // the centred sums of a constant series can carry rounding residue
    if points.iter().all(|p| p.y == points[0].y) {
        return Ok(TrendLine {
            m: 0.0,
            b: points[0].y,
            r: 0.0,
        });
    }
    let m = sxy / sxx;
    let b = my - m * mx;
    let r = if syy == 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    };
    Ok(TrendLine { m, b, r })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, sd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub threshold: Option<f64>,
    pub avg_slope: f64,
    pub stdev_slope: f64,
    pub positive: usize,
    pub negative: usize,
    /// True when no trend line survived the threshold; averages are then 0.
    pub empty: bool,
}

/// Slope statistics over trend lines with `|m| > threshold`.
pub fn trend_summary(lines: &[TrendLine], threshold: Option<f64>) -> TrendSummary {
    let tau = threshold.unwrap_or(0.0);
    let kept: Vec<f64> = lines
        .iter()
        .map(|l| l.m)
        .filter(|m| threshold.is_none() || m.abs() > tau)
        .collect();
    let (avg_slope, stdev_slope) = mean_sd(&kept);
    TrendSummary {
        threshold,
        avg_slope,
        stdev_slope,
        positive: kept.iter().filter(|&&m| m > tau).count(),
        negative: kept.iter().filter(|&&m| m < -tau).count(),
        empty: kept.is_empty(),
    }
}

/// Mean and sample deviation of r over positive and negative slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub positive_avg_r: f64,
    pub positive_stdev_r: f64,
    pub negative_avg_r: f64,
    pub negative_stdev_r: f64,
}

pub fn goodness_of_fit(lines: &[TrendLine]) -> GoodnessOfFit {
    let pos: Vec<f64> = lines.iter().filter(|l| l.m > 0.0).map(|l| l.r).collect();
    let neg: Vec<f64> = lines.iter().filter(|l| l.m < 0.0).map(|l| l.r).collect();
    let (pa, ps) = mean_sd(&pos);
    let (na, ns) = mean_sd(&neg);
    GoodnessOfFit {
        positive_avg_r: pa,
        positive_stdev_r: ps,
        negative_avg_r: na,
        negative_stdev_r: ns,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Active,
    Inactive,
}

/// Active iff the posts fall in at least two calendar months.
pub fn classify_activity(timestamps: &[DateTime<Utc>]) -> Activity {
    let mut months = timestamps.iter().map(month_number);
    match months.next() {
        Some(first) if months.any(|m| m != first) => Activity::Active,
        _ => Activity::Inactive,
    }
}

/// One member's posts with severities, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserHistory {
    pub author_id: String,
    pub posts: Vec<(DateTime<Utc>, SeverityLabel)>,
}

impl UserHistory {
    pub fn activity(&self) -> Activity {
        let ts: Vec<_> = self.posts.iter().map(|p| p.0).collect();
        classify_activity(&ts)
    }

    /// Calendar months from first to last post, inclusive.
    pub fn months_active(&self) -> i64 {
        match (self.posts.first(), self.posts.last()) {
            (Some(a), Some(b)) => month_number(&b.0) - month_number(&a.0) + 1,
            _ => 0,
        }
    }

    pub fn trend(&self, scale: SeverityScale) -> Result<TrendLine> {
        fit_trend(&monthly_series(&self.posts, scale))
    }
}

/// Histories of every member author; posts without a severity are skipped and
/// moderators are left out.
pub fn user_histories(corpus: &Corpus, severities: &BTreeMap<String, SeverityLabel>) -> Vec<UserHistory> {
    corpus
        .posts_by_author()
        .into_iter()
        .filter_map(|(author, posts)| {
            let posts: Vec<_> = posts
                .iter()
                .filter(|p| !p.is_moderator())
                .filter_map(|p| severities.get(&p.post_id).map(|&l| (p.timestamp, l)))
                .collect();
            (!posts.is_empty()).then(|| UserHistory {
                author_id: author.to_owned(),
                posts,
            })
        })
        .collect()
}

/// Per-user trend export row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTrend {
    pub author_id: String,
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub months_active: i64,
}

/// Trend lines of all active users.
pub fn user_trends(users: &[UserHistory], scale: SeverityScale) -> Vec<UserTrend> {
    users
        .iter()
        .filter(|u| u.activity() == Activity::Active)
        .filter_map(|u| {
            let t = u.trend(scale).ok()?;
            Some(UserTrend {
                author_id: u.author_id.clone(),
                slope: t.m,
                intercept: t.b,
                r: t.r,
                months_active: u.months_active(),
            })
        })
        .collect()
}

pub fn trends_csv(rows: &[UserTrend]) -> String {
    let mut out = String::from("author_id,slope,intercept,r,months_active\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.author_id, r.slope, r.intercept, r.r, r.months_active);
    }
    out
}

/// 2x2 counts; row = last (positive first), column = first (positive first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub cells: [[u64; 2]; 2],
}

impl ContingencyTable2x2 {
    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn transpose(&self) -> Self {
        let c = self.cells;
        Self {
            cells: [[c[0][0], c[1][0]], [c[0][1], c[1][1]]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableScheme {
    PostFlagged,
    PostUrgent,
    MonthFlagged,
    MonthUrgent,
}

impl TableScheme {
    pub const ALL: [TableScheme; 4] = [Self::PostFlagged, Self::PostUrgent, Self::MonthFlagged, Self::MonthUrgent];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PostFlagged => "post_flagged",
            Self::PostUrgent => "post_urgent",
            Self::MonthFlagged => "month_flagged",
            Self::MonthUrgent => "month_urgent",
        }
    }

    fn is_urgent(self) -> bool {
        matches!(self, Self::PostUrgent | Self::MonthUrgent)
    }

    /// Names of the positive and negative class.
    pub fn class_names(self) -> (&'static str, &'static str) {
        if self.is_urgent() {
            ("URGENT", "NON-URGENT")
        } else {
            ("FLAGGED", "GREEN")
        }
    }

    /// Binarized (first, last) of one user, or `None` if the user does not qualify.
    fn first_last(self, u: &UserHistory) -> Option<(bool, bool)> {
        if u.activity() != Activity::Active {
            return None;
        }
        match self {
            Self::PostFlagged | Self::PostUrgent => {
                if u.posts.len() < 2 {
                    return None;
                }
                let f = |l: SeverityLabel| if self.is_urgent() { l.is_urgent() } else { l.is_flagged() };
                Some((f(u.posts[0].1), f(u.posts[u.posts.len() - 1].1)))
            }
            Self::MonthFlagged | Self::MonthUrgent => {
                let series = monthly_series(&u.posts, SeverityScale::FineGrained);
                if series.len() < 2 {
                    return None;
                }
                let cut = if self.is_urgent() {
                    URGENT_MONTH_THRESHOLD
                } else {
                    FLAGGED_MONTH_THRESHOLD
                };
                Some((series[0].y >= cut, series[series.len() - 1].y >= cut))
            }
        }
    }
}

fn cell(first: bool, last: bool) -> (usize, usize) {
    (!last as usize, !first as usize)
}

pub fn first_last_table(users: &[UserHistory], scheme: TableScheme) -> ContingencyTable2x2 {
    let mut t = ContingencyTable2x2 { cells: [[0; 2]; 2] };
    for u in users {
        if let Some((first, last)) = scheme.first_last(u) {
            let (r, c) = cell(first, last);
            t.cells[r][c] += 1;
        }
    }
    t
}

/// Mean months active of the users in each cell of the scheme's table.
pub fn months_active_table(users: &[UserHistory], scheme: TableScheme) -> [[f64; 2]; 2] {
    let mut sum = [[0.0; 2]; 2];
    let mut n = [[0u64; 2]; 2];
    for u in users {
        if let Some((first, last)) = scheme.first_last(u) {
            let (r, c) = cell(first, last);
            sum[r][c] += u.months_active() as f64;
            n[r][c] += 1;
        }
    }
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            if n[r][c] > 0 {
                out[r][c] = sum[r][c] / n[r][c] as f64;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p: f64,
}

/// Pearson chi-square with one degree of freedom, without continuity correction.
pub fn chi_square(table: &ContingencyTable2x2) -> Result<ChiSquare> {
    let c = table.cells.map(|r| r.map(|x| x as f64));
    let n = table.total() as f64;
    let rows = [c[0][0] + c[0][1], c[1][0] + c[1][1]];
    let cols = [c[0][0] + c[1][0], c[0][1] + c[1][1]];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return Err(TriageError::invalid("chi-square needs every row and column total to be positive"));
    }
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            stat += (c[i][j] - e).powi(2) / e;
        }
    }
    let dist = ChiSquared::new(1.0).map_err(|e| TriageError::invalid(e.to_string()))?;
    Ok(ChiSquare {
        statistic: stat,
        p: dist.sf(stat),
    })
}

/// Moderator response figures for one severity group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub group: String,
    pub total: u64,
    pub moderator_first: u64,
    pub percentage: f64,
    pub mean_hours: f64,
    pub stdev_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseStats {
    /// CRISIS, RED, AMBER, GREEN, then URGENT and FLAGGED.
    pub rows: Vec<ResponseRow>,
}

/// First reply by a different author to every member post with a severity.
///
/// Returns `(post severity, responder is moderator, hours)`; unreplied posts
/// have `None`.
pub fn first_responses(
    corpus: &Corpus,
    severities: &BTreeMap<String, SeverityLabel>,
) -> Vec<(SeverityLabel, Option<(bool, f64)>)> {
    let mut out = Vec::new();
    for tid in corpus.thread_ids() {
        let Ok(thread) = corpus.thread_of(tid) else { continue };
        for (i, p) in thread.posts.iter().enumerate() {
            if p.is_moderator() {
                continue;
            }
            let Some(&sev) = severities.get(&p.post_id) else { continue };
            let reply = thread.posts[i + 1..].iter().find(|q| q.author_id != p.author_id).map(|q| {
                let hours = (q.timestamp - p.timestamp).num_seconds() as f64 / 3600.0;
                (q.is_moderator(), hours)
            });
            out.push((sev, reply));
        }
    }
    out
}

pub fn response_stats(corpus: &Corpus, severities: &BTreeMap<String, SeverityLabel>) -> ResponseStats {
    let responses = first_responses(corpus, severities);
    let row = |group: &str, keep: &dyn Fn(SeverityLabel) -> bool| {
        let mut total = 0;
        let mut hours = Vec::new();
        for (sev, reply) in &responses {
            if !keep(*sev) {
                continue;
            }
            total += 1;
            if let Some((true, h)) = reply {
                hours.push(*h);
            }
        }
        let (mean_hours, stdev_hours) = mean_sd(&hours);
        ResponseRow {
            group: group.to_owned(),
            total,
            moderator_first: hours.len() as u64,
            percentage: if total == 0 {
                0.0
            } else {
                100.0 * hours.len() as f64 / total as f64
            },
            mean_hours,
            stdev_hours,
        }
    };
    let mut rows: Vec<ResponseRow> = SeverityLabel::ALL
        .iter()
        .rev()
        .map(|&c| row(&c.as_str().to_uppercase(), &|s| s == c))
        .collect();
    rows.push(row("URGENT", &|s| s.is_urgent()));
    rows.push(row("FLAGGED", &|s| s.is_flagged()));
    ResponseStats { rows }
}

pub fn response_table(stats: &ResponseStats) -> String {
    let mut out = format!(
        "{:<8}  {:>7}  {:>6}  {:>10}  {:>12}  {:>10}\n",
        "", "Total", "Number", "Percentage", "Average Time", "Stdev Time"
    );
    for r in &stats.rows {
        let _ = writeln!(
            out,
            "{:<8}  {:>7}  {:>6}  {:>9.2}%  {:>12.2}  {:>10.2}",
            r.group, r.total, r.moderator_first, r.percentage, r.mean_hours, r.stdev_hours
        );
    }
    out
}

pub fn contingency_table_text(scheme: TableScheme, t: &ContingencyTable2x2, chi: Option<&ChiSquare>) -> String {
    let (pos, neg) = scheme.class_names();
    let unit = if matches!(scheme, TableScheme::PostFlagged | TableScheme::PostUrgent) {
        "Post"
    } else {
        "Month"
    };
    let mut out = format!("{}\n", scheme.as_str());
    let _ = writeln!(out, "{:<12}  {:>12}  {:>12}", format!("Last {unit}"), format!("First:{pos}"), format!("First:{neg}"));
    for (r, name) in [(0, pos), (1, neg)] {
        let _ = writeln!(out, "{:<12}  {:>12}  {:>12}", name, t.cells[r][0], t.cells[r][1]);
    }
    if let Some(c) = chi {
        let _ = writeln!(out, "chi2 = {:.2}  p = {:.3e}", c.statistic, c.p);
    }
    out
}

pub fn trend_table(rows: &[(TrendSummary, TrendSummary)]) -> String {
    let mut out = format!(
        "{:<9}  {:>7}  {:>7}  {:>5}  {:>5}  |  {:>7}  {:>7}  {:>5}  {:>5}\n",
        "Threshold", "Avg.", "Stdev.", "#pos", "#neg", "Avg.", "Stdev.", "#pos", "#neg"
    );
    for (flag, fine) in rows {
        let th = flag.threshold.map_or("None".to_string(), |t| format!("{t:.2}"));
        let _ = writeln!(
            out,
            "{:<9}  {:>7.3}  {:>7.3}  {:>5}  {:>5}  |  {:>7.3}  {:>7.3}  {:>5}  {:>5}",
            th,
            flag.avg_slope,
            flag.stdev_slope,
            flag.positive,
            flag.negative,
            fine.avg_slope,
            fine.stdev_slope,
            fine.positive,
            fine.negative
        );
    }
    out
}
