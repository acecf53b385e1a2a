//! Side-by-side trace comparison.

use std::io::Write;

use anyhow::Result;
use gptemper::TraceRow;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeToTarget {
    pub target: Option<f64>,
    /// Seconds until trace A first reaches the target, if it does.
    pub a: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Final RMSE of A over final RMSE of B, averaged over outputs first.
    pub rmse_ratio: Option<f64>,
    /// Final factorization count of A over that of B.
    pub factorization_ratio: Option<f64>,
    pub time_to_target_rmse: TimeToTarget,
}

fn mean_rmse(row: &TraceRow) -> Option<f64> {
    row.rmse
        .as_ref()
        .filter(|r| !r.is_empty())
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
}

fn final_rmse(rows: &[TraceRow]) -> Option<f64> {
    rows.iter().rev().find_map(mean_rmse)
}

fn first_reaching(rows: &[TraceRow], target: f64) -> Option<f64> {
    rows.iter()
        .find(|r| mean_rmse(r).is_some_and(|v| v <= target))
        .map(|r| r.wall_time_s)
}

pub fn verdict(a: &[TraceRow], b: &[TraceRow], target: Option<f64>) -> Verdict {
    let (ra, rb) = (final_rmse(a), final_rmse(b));
    let rmse_ratio = match (ra, rb) {
        (Some(x), Some(y)) if y > 0.0 => Some(x / y),
        (Some(x), Some(y)) if x == y => Some(1.0),
        _ => None,
    };
    let (fa, fb) = (a.last().map(|r| r.factorizations), b.last().map(|r| r.factorizations));
    let factorization_ratio = match (fa, fb) {
        (Some(x), Some(y)) if y > 0 => Some(x as f64 / y as f64),
        _ => None,
    };
    let target = target.or(match (ra, rb) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    });
    Verdict {
        rmse_ratio,
        factorization_ratio,
        time_to_target_rmse: TimeToTarget {
            target,
            a: target.and_then(|t| first_reaching(a, t)),
            b: target.and_then(|t| first_reaching(b, t)),
        },
    }
}

/// Both traces on the union of their time stamps; each side shows its latest row
/// at or before that time, or blanks before its first row.
pub struct Merged {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn side_fields(row: Option<&TraceRow>, outputs: usize) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    match row {
        None => vec![String::new(); 4 + outputs],
        Some(r) => {
            let mut f = vec![
                r.step_or_gamma.to_string(),
                opt(r.ess),
                r.log_target_mean.to_string(),
                r.factorizations.to_string(),
            ];
            for k in 0..outputs {
                f.push(opt(r.rmse.as_ref().and_then(|v| v.get(k).copied())));
            }
            f
        }
    }
}

pub fn merge_traces(a: &[TraceRow], b: &[TraceRow]) -> Merged {
    let width = |t: &[TraceRow]| t.iter().filter_map(|r| r.rmse.as_ref().map(Vec::len)).max().unwrap_or(0);
    let (ma, mb) = (width(a), width(b));
    let mut header = vec!["wall_time_s".to_string()];
    for (side, m) in [("a", ma), ("b", mb)] {
        for c in ["step_or_gamma", "ess", "log_target_mean", "factorizations"] {
            header.push(format!("{side}_{c}"));
        }
        header.extend((1..=m).map(|k| format!("{side}_rmse_{k}")));
    }
    let mut times: Vec<f64> = a.iter().chain(b).map(|r| r.wall_time_s).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let latest = |t: &'_ [TraceRow], at: f64| t.iter().rev().find(|r| r.wall_time_s <= at).cloned();
    let rows = times
        .into_iter()
        .map(|t| {
            let mut rec = vec![t.to_string()];
            rec.extend(side_fields(latest(a, t).as_ref(), ma));
            rec.extend(side_fields(latest(b, t).as_ref(), mb));
            rec
        })
        .collect();
    Merged { header, rows }
}

pub fn write_merged<W: Write>(w: W, merged: &Merged) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(&merged.header)?;
    for r in &merged.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, f: u64, rmse: Option<f64>) -> TraceRow {
        TraceRow {
            wall_time_s: t,
            step_or_gamma: t,
            ess: None,
            log_target_mean: -1.0,
            factorizations: f,
            rmse: rmse.map(|r| vec![r]),
        }
    }

    #[test]
    fn self_comparison_is_neutral() {
        let t = vec![row(0.1, 10, Some(2.0)), row(0.5, 40, Some(1.0))];
        let v = verdict(&t, &t, None);
        assert_eq!(v.rmse_ratio, Some(1.0));
        assert_eq!(v.factorization_ratio, Some(1.0));
        assert_eq!(v.time_to_target_rmse.a, v.time_to_target_rmse.b);
    }

    #[test]
    fn ratios_and_time_to_target() {
        let a = vec![row(0.1, 10, Some(3.0)), row(0.2, 20, Some(1.0))];
        let b = vec![row(0.5, 100, Some(2.0)), row(2.0, 200, Some(2.0))];
        let v = verdict(&a, &b, None);
        assert_eq!(v.rmse_ratio, Some(0.5));
        assert_eq!(v.factorization_ratio, Some(0.1));
        assert_eq!(v.time_to_target_rmse.target, Some(2.0));
        assert_eq!(v.time_to_target_rmse.a, Some(0.2));
        assert_eq!(v.time_to_target_rmse.b, Some(0.5));
    }

    #[test]
    fn no_rmse_columns() {
        let a = vec![row(0.1, 10, None)];
        let v = verdict(&a, &a, None);
        assert_eq!(v.rmse_ratio, None);
        assert_eq!(v.time_to_target_rmse.target, None);
        let m = merge_traces(&a, &a);
        assert_eq!(m.header.len(), 9);
    }

    #[test]
    fn merged_rows_step_forward() {
        let a = vec![row(0.1, 10, Some(3.0)), row(0.3, 20, Some(1.0))];
        let b = vec![row(0.2, 100, Some(2.0))];
        let m = merge_traces(&a, &b);
        assert_eq!(m.rows.len(), 3);
        assert_eq!(m.rows[0][6], "");
        assert_eq!(m.rows[1][4], "10");
        assert_eq!(m.rows[2][4], "20");
        assert_eq!(m.rows[2][9], "100");
    }
}
