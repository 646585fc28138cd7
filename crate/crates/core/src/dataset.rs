//! Pool files: one JSON object per line with `utterance`, `program` and an
//! optional `id`. Lines without an id get their zero-padded line number.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::InstanceRecord;
use crate::lexer::Lexer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub utterance: String,
    pub program: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Strictness {
    /// Abort on the first bad line.
    #[default]
    Strict,
    /// Skip bad lines and report them.
    Lenient,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub records: Vec<InstanceRecord>,
    /// Skipped lines (lenient mode): 1-based line number and reason.
    pub skipped: Vec<(usize, String)>,
}

pub fn default_id(line: usize) -> String {
    format!("{line:08}")
}

/// Parse pool lines. `lines` yields (1-based line number, text).
pub fn ingest_lines<I>(lines: I, lexer: &Lexer, strictness: Strictness) -> Result<Ingested>
where
    I: IntoIterator<Item = (usize, String)>,
{
    let mut raw = Vec::new();
    let mut skipped = Vec::new();
    for (line, text) in lines {
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawRecord>(&text) {
            Ok(rec) => raw.push((line, rec)),
            Err(e) => {
                let err = Error::Malformed {
                    line,
                    reason: e.to_string(),
                };
                match strictness {
                    Strictness::Strict => return Err(err),
                    Strictness::Lenient => skipped.push((line, err.to_string())),
                }
            }
        }
    }

    let parsed: Vec<(usize, Result<InstanceRecord>)> = raw
        .par_iter()
        .map(|(line, rec)| {
            let id = rec.id.clone().unwrap_or_else(|| default_id(*line));
            (*line, InstanceRecord::parse(&id, &rec.utterance, &rec.program, lexer))
        })
        .collect();

    let mut records = Vec::with_capacity(parsed.len());
    let mut seen = HashSet::new();
    for (line, result) in parsed {
        let record = match result {
            Ok(r) => r,
            Err(e) => match strictness {
                Strictness::Strict => return Err(e),
                Strictness::Lenient => {
                    skipped.push((line, e.to_string()));
                    continue;
                }
            },
        };
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        records.push(record);
    }
    Ok(Ingested { records, skipped })
}

pub fn ingest(path: impl AsRef<Path>, lexer: &Lexer, strictness: Strictness) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        lines.push((i + 1, line.map_err(|e| Error::io(path, e))?));
    }
    ingest_lines(lines, lexer, strictness)
}

pub fn write_pool(path: impl AsRef<Path>, records: &[RawRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|e| Error::io(path, e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Drop every instance whose exact program string occurs in more than
/// `fraction * |pool|` instances of the input pool.
pub fn filter_frequency_cap(pool: Vec<InstanceRecord>, fraction: f64) -> Result<Vec<InstanceRecord>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "frequency cap must lie in (0, 1], got {fraction}"
        )));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for rec in &pool {
        *counts.entry(rec.program.as_str()).or_default() += 1;
    }
    let limit = fraction * pool.len() as f64;
    let banned: HashSet<String> = counts
        .into_iter()
        .filter(|&(_, c)| c as f64 > limit)
        .map(|(p, _)| p.to_string())
        .collect();
    Ok(pool.into_iter().filter(|r| !banned.contains(&r.program)).collect())
}

pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn write_id_list<S: AsRef<str>>(path: impl AsRef<Path>, ids: &[S]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for id in ids {
        text.push_str(id.as_ref());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
