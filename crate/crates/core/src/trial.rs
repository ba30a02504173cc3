//! Trial records shared by grid search and Bayesian optimization.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Failed => "failed",
        }
    }
}

/// One evaluated configuration. Failed trials carry no score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord<P> {
    pub index: usize,
    pub params: P,
    pub score: Option<f64>,
    pub seconds: f64,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl<P> TrialRecord<P> {
    pub fn ok(index: usize, params: P, score: f64, seconds: f64) -> Self {
        Self { index, params, score: Some(score), seconds, status: TrialStatus::Ok, error: None }
    }

    pub fn failed(index: usize, params: P, seconds: f64, error: impl Into<String>) -> Self {
        Self { index, params, score: None, seconds, status: TrialStatus::Failed, error: Some(error.into()) }
    }

    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

/// Named CSV columns for a parameter set.
pub trait ParamColumns {
    fn column_names(&self) -> Vec<String>;
    fn column_values(&self) -> Vec<String>;
}

/// Running maximum of the Ok scores; `None` until the first Ok trial.
pub fn best_so_far<P>(records: &[TrialRecord<P>]) -> Vec<Option<f64>> {
    let mut best: Option<f64> = None;
    records
        .iter()
        .map(|r| {
            if let (TrialStatus::Ok, Some(s)) = (r.status, r.score) {
                best = Some(best.map_or(s, |b| b.max(s)));
            }
            best
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `index_column, params..., score, seconds, status, best_so_far`.
pub fn write_trials_csv<P: ParamColumns>(
    records: &[TrialRecord<P>],
    index_column: &str,
    mut w: impl Write,
) -> io::Result<()> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let mut header = vec![index_column.to_string()];
    header.extend(first.params.column_names());
    header.extend(["score", "seconds", "status", "best_so_far"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for (r, best) in records.iter().zip(best_so_far(records)) {
        let mut row = vec![r.index.to_string()];
        row.extend(r.params.column_values());
        row.push(fmt_opt(r.score));
        row.push(r.seconds.to_string());
        row.push(r.status.as_str().to_string());
        row.push(fmt_opt(best));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// One JSON object per line, mirroring the CSV rows.
pub fn write_trials_jsonl<P: Serialize>(records: &[TrialRecord<P>], mut w: impl Write) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct P(u32);
    impl ParamColumns for P {
        fn column_names(&self) -> Vec<String> {
            vec!["p".into()]
        }
        fn column_values(&self) -> Vec<String> {
            vec![self.0.to_string()]
        }
    }

    #[test]
    fn running_best_skips_failures() {
        let recs = vec![
            TrialRecord::failed(0, P(1), 0.5, "boom"),
            TrialRecord::ok(1, P(2), 0.3, 1.0),
            TrialRecord::ok(2, P(3), 0.2, 1.0),
            TrialRecord::ok(3, P(4), 0.9, 1.0),
        ];
        assert_eq!(best_so_far(&recs), vec![None, Some(0.3), Some(0.3), Some(0.9)]);
        let mut out = Vec::new();
        write_trials_csv(&recs, "trial_index", &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial_index,p,score,seconds,status,best_so_far");
        assert_eq!(lines[1], "0,1,,0.5,failed,");
        assert_eq!(lines[4], "3,4,0.9,1,ok,0.9");
    }
}
