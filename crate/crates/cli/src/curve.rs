//! Best score so far against cumulative trial time, from a trial log.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{CliError, Result};

/// The columns of a trial log that the curve needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub index: usize,
    pub score: Option<f64>,
    pub seconds: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub cumulative_seconds: f64,
    pub best_score_so_far: Option<f64>,
}

/// One point per trial, in trial order. Only Ok trials move the best score;
/// every trial adds its seconds.
pub fn compute_curve(rows: &[LogRow], higher_is_better: bool) -> Result<Vec<CurvePoint>> {
    if rows.is_empty() {
        return Err(CliError::Data("no trial records".into()));
    }
    let mut ordered = rows.to_vec();
    ordered.sort_by_key(|r| r.index);
    let mut total = 0.0;
    let mut best: Option<f64> = None;
    Ok(ordered
        .iter()
        .map(|r| {
            total += r.seconds;
            if let (true, Some(s)) = (r.ok, r.score) {
                best = Some(match best {
                    None => s,
                    Some(b) if higher_is_better => b.max(s),
                    Some(b) => b.min(s),
                });
            }
            CurvePoint { cumulative_seconds: total, best_score_so_far: best }
        })
        .collect())
}

pub fn write_curve(points: &[CurvePoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "cumulative_seconds,best_score_so_far")?;
    for p in points {
        let best = p.best_score_so_far.map(|b| b.to_string()).unwrap_or_default();
        writeln!(w, "{},{best}", p.cumulative_seconds)?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct JsonRow {
    index: usize,
    score: Option<f64>,
    seconds: f64,
    status: String,
}

fn parse_jsonl(text: &str) -> Result<Vec<LogRow>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let r: JsonRow = serde_json::from_str(line).map_err(|e| CliError::Data(format!("log line {}: {e}", i + 1)))?;
            Ok(LogRow { index: r.index, score: r.score, seconds: r.seconds, ok: r.status == "ok" })
        })
        .collect()
}

/// CSV logs start with the index column (`grid_index` or `trial_index`)
/// and carry `score`, `seconds` and `status` columns.
fn parse_csv(text: &str) -> Result<Vec<LogRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Data(e.to_string()))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| CliError::Data(format!("log has no `{name}` column")))
    };
    let (score, seconds, status) = (col("score")?, col("seconds")?, col("status")?);
    let bad = |line: usize, what: &str| CliError::Data(format!("log row {line}: bad {what}"));
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
        let index = rec[0].parse().map_err(|_| bad(i + 1, "index"))?;
        let score = match &rec[score] {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| bad(i + 1, "score"))?),
        };
        let seconds = rec[seconds].parse().map_err(|_| bad(i + 1, "seconds"))?;
        rows.push(LogRow { index, score, seconds, ok: &rec[status] == "ok" });
    }
    Ok(rows)
}

pub fn read_log(path: &Path) -> Result<Vec<LogRow>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        parse_jsonl(&text)
    } else {
        parse_csv(&text)
    }
}
