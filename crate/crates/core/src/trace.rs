//! Run traces: one row per MCMC checkpoint or per tempering level.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trace row. Written as CSV with columns
/// `wall_time_s, step_or_gamma, ess, log_target_mean, factorizations, rmse_1..rmse_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub wall_time_s: f64,
    /// Sweep index for MCMC, inverse temperature for ASMC.
    pub step_or_gamma: f64,
    /// ASMC only.
    pub ess: Option<f64>,
    pub log_target_mean: f64,
    /// Cumulative covariance factorizations charged to the busiest worker.
    pub factorizations: u64,
    /// Per-output test RMSE in original units, when test data was supplied.
    pub rmse: Option<Vec<f64>>,
}

/// Something that can score a weighted set of hyperparameter vectors on held-out data.
pub trait Probe {
    fn rmse(&self, thetas: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>>;
}

/// Wall clock that can be paused while diagnostics run.
#[derive(Debug)]
pub struct Stopwatch {
    started: Option<web_time::Instant>,
    accumulated: f64,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            started: Some(web_time::Instant::now()),
            accumulated: 0.0,
        }
    }

    pub fn pause(&mut self) {
        if let Some(t) = self.started.take() {
            self.accumulated += t.elapsed().as_secs_f64();
        }
    }

    pub fn resume(&mut self) {
        if self.started.is_none() {
            self.started = Some(web_time::Instant::now());
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.accumulated + self.started.map_or(0.0, |t| t.elapsed().as_secs_f64())
    }
}

fn rmse_width(rows: &[TraceRow]) -> usize {
    rows.iter()
        .filter_map(|r| r.rmse.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0)
}

pub fn trace_header(outputs: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "wall_time_s",
        "step_or_gamma",
        "ess",
        "log_target_mean",
        "factorizations",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=outputs).map(|k| format!("rmse_{k}")));
    h
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn row_fields(row: &TraceRow, outputs: usize) -> Vec<String> {
    let mut f = vec![
        row.wall_time_s.to_string(),
        row.step_or_gamma.to_string(),
        fmt_opt(row.ess),
        row.log_target_mean.to_string(),
        row.factorizations.to_string(),
    ];
    for k in 0..outputs {
        f.push(fmt_opt(row.rmse.as_ref().and_then(|r| r.get(k).copied())));
    }
    f
}

/// Writes a trace. `outputs` fixes the number of `rmse_k` columns; pass `None` to
/// infer it from the rows (zero when no row carries RMSE).
pub fn write_trace_csv<W: Write>(writer: W, rows: &[TraceRow], outputs: Option<usize>) -> Result<()> {
    let m = outputs.unwrap_or_else(|| rmse_width(rows));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trace_header(m))?;
    for row in rows {
        w.write_record(row_fields(row, m))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let m = header.len().checked_sub(5).ok_or_else(|| {
        Error::MalformedTrace(format!("{} columns, at least 5 expected", header.len()))
    })?;
    if header != trace_header(m) {
        return Err(Error::MalformedTrace(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|_| {
                Error::MalformedTrace(format!("row {}: bad value `{}` in {}", i + 1, &rec[j], header[j]))
            })
        };
        let opt = |j: usize| -> Result<Option<f64>> {
            if rec[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let rmse = (0..m).map(|k| opt(5 + k)).collect::<Result<Vec<_>>>()?;
        let rmse = if m > 0 && rmse.iter().all(Option::is_some) {
            Some(rmse.into_iter().flatten().collect())
        } else {
            None
        };
        rows.push(TraceRow {
            wall_time_s: num(0)?,
            step_or_gamma: num(1)?,
            ess: opt(2)?,
            log_target_mean: num(3)?,
            factorizations: rec[4].parse().map_err(|_| {
                Error::MalformedTrace(format!("row {}: bad factorization count", i + 1))
            })?,
            rmse,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row() -> impl Strategy<Value = TraceRow> {
        (
            0.0..1e4f64,
            0.0..1e4f64,
            proptest::option::of(1.0..1e3f64),
            -1e6..1e6f64,
            0u64..1_000_000,
            proptest::option::of(proptest::collection::vec(0.0..10f64, 2)),
        )
            .prop_map(|(t, s, ess, lt, f, rmse)| TraceRow {
                wall_time_s: t,
                step_or_gamma: s,
                ess,
                log_target_mean: lt,
                factorizations: f,
                rmse,
            })
    }

    proptest! {
        #[test]
        fn csv_roundtrip(rows in proptest::collection::vec(row(), 0..8)) {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &rows, Some(2)).unwrap();
            let back = read_trace_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, rows);
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[], Some(2)).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "wall_time_s,step_or_gamma,ess,log_target_mean,factorizations,rmse_1,rmse_2"
        );
        assert!(read_trace_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
