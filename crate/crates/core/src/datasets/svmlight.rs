//! svmlight / libsvm text format:
//! `<label> [qid:<q>] <index>:<value> ...` with 1-based ascending indices.
//! Anything after `#` is a comment. Files ending in `.gz` are gzip streams.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{DatasetError, LabeledDataset, Result, Task};

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Fixed feature count; by default the largest index seen.
    pub num_features: Option<usize>,
    /// Fixed task; by default inferred from the label set.
    pub task: Option<Task>,
}

pub fn load_svmlight(path: impl AsRef<Path>, opts: LoadOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_svmlight(BufReader::new(reader), opts)
}

struct ParsedLine {
    label: i64,
    qid: Option<u64>,
    entries: Vec<(usize, f64)>,
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<ParsedLine>> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let malformed = |reason: String| DatasetError::MalformedLine { line: line_no, reason };
    let mut tokens = body.split_whitespace();
    let label_tok = tokens.next().unwrap();
    let label_val: f64 = label_tok
        .parse()
        .map_err(|_| DatasetError::NonIntegerLabel { line: line_no, label: label_tok.to_string() })?;
    if !label_val.is_finite() || label_val.fract() != 0.0 {
        return Err(DatasetError::NonIntegerLabel { line: line_no, label: label_tok.to_string() });
    }

    let mut qid = None;
    let mut entries = Vec::new();
    for tok in tokens {
        let (key, value) = tok
            .split_once(':')
            .ok_or_else(|| malformed(format!("token `{tok}` is not key:value")))?;
        if key == "qid" {
            if qid.is_some() || !entries.is_empty() {
                return Err(malformed("qid must come once, before features".into()));
            }
            qid = Some(value.parse().map_err(|_| malformed(format!("bad qid `{value}`")))?);
            continue;
        }
        let index: usize = key.parse().map_err(|_| malformed(format!("bad feature index `{key}`")))?;
        if index == 0 {
            return Err(malformed("feature indices are 1-based".into()));
        }
        if entries.last().is_some_and(|&(prev, _)| prev >= index - 1) {
            return Err(malformed(format!("feature index {index} is not ascending")));
        }
        let value: f64 = value.parse().map_err(|_| malformed(format!("bad value `{value}`")))?;
        if !value.is_finite() {
            return Err(malformed(format!("non-finite value `{value}`")));
        }
        entries.push((index - 1, value));
    }
    Ok(Some(ParsedLine { label: label_val as i64, qid, entries }))
}

pub fn parse_svmlight(reader: impl BufRead, opts: LoadOptions) -> Result<LabeledDataset> {
    let mut parsed = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        if let Some(p) = parse_line(&line?, i + 1)? {
            parsed.push((i + 1, p));
        }
    }
    if parsed.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let with_qid = parsed.iter().filter(|(_, p)| p.qid.is_some()).count();
    if with_qid != 0 && with_qid != parsed.len() {
        let line = parsed.iter().find(|(_, p)| p.qid.is_none()).unwrap().0;
        return Err(DatasetError::MalformedLine { line, reason: "qid missing on some rows".into() });
    }

    // {-1, +1} labels are the binary convention of many svmlight files.
    let min = parsed.iter().map(|(_, p)| p.label).min().unwrap();
    let max = parsed.iter().map(|(_, p)| p.label).max().unwrap();
    let plus_minus = min == -1 && parsed.iter().all(|(_, p)| p.label == -1 || p.label == 1);
    let task = match opts.task {
        Some(t) => t,
        None if plus_minus || max <= 1 => Task::Binary,
        None => Task::Multiclass(max as usize + 1),
    };
    let labels = parsed
        .iter()
        .map(|(_, p)| {
            let l = if plus_minus && task == Task::Binary { p.label.max(0) } else { p.label };
            if l < 0 || l as usize >= task.num_classes() {
                Err(DatasetError::LabelOutOfRange { label: l, classes: task.num_classes() })
            } else {
                Ok(l as u32)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let seen = parsed.iter().filter_map(|(_, p)| p.entries.last().map(|e| e.0 + 1)).max().unwrap_or(0);
    let width = match opts.num_features {
        Some(w) if w < seen => return Err(DatasetError::FeatureIndexOutOfRange { index: seen, width: w }),
        Some(w) => w,
        None => seen,
    };
    let query_ids = (with_qid != 0).then(|| parsed.iter().map(|(_, p)| p.qid.unwrap()).collect());
    let rows: Vec<Vec<(usize, f64)>> = parsed.into_iter().map(|(_, p)| p.entries).collect();
    LabeledDataset::from_sparse_rows(&rows, labels, query_ids, task, width)
}

pub fn write_svmlight(d: &LabeledDataset, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for (r, row) in d.sparse_rows().iter().enumerate() {
        write!(w, "{}", d.labels()[r])?;
        if let Some(q) = d.query_ids() {
            write!(w, " qid:{}", q[r])?;
        }
        for &(f, v) in row {
            write!(w, " {}:{}", f + 1, v)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_svmlight_file(d: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(file, Compression::default());
        write_svmlight(d, &mut enc)?;
        enc.finish()?;
        Ok(())
    } else {
        write_svmlight(d, file)
    }
}
