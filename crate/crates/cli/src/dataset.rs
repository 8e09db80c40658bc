//! CSV ingestion and the log / difference transforms.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    None,
    Log,
    Diff,
    Logdiff,
}

impl Transform {
    pub fn apply(self, x: &[f64]) -> Result<Vec<f64>> {
        let log = |x: &[f64]| -> Result<Vec<f64>> {
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    if v > 0.0 {
                        Ok(v.ln())
                    } else {
                        Err(anyhow!("log transform needs positive values, observation {} is {v}", i + 1))
                    }
                })
                .collect()
        };
        let diff = |x: &[f64]| x.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
        Ok(match self {
            Transform::None => x.to_vec(),
            Transform::Log => log(x)?,
            Transform::Diff => diff(x),
            Transform::Logdiff => diff(&log(x)?),
        })
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::None => "none",
            Transform::Log => "log",
            Transform::Diff => "diff",
            Transform::Logdiff => "logdiff",
        })
    }
}

/// Column by header name or 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSel {
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for ColumnSel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.parse::<usize>() {
            Ok(0) => Err("column positions start at 1".into()),
            Ok(i) => Ok(ColumnSel::Index(i)),
            Err(_) if s.is_empty() => Err("empty column name".into()),
            Err(_) => Ok(ColumnSel::Name(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFrame {
    pub name: String,
    pub source: String,
    pub transform: Transform,
    /// Observations before the transform.
    pub raw_len: usize,
    pub values: Vec<f64>,
}

impl DatasetFrame {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn parse_number(field: &str) -> Option<f64> {
    let v: f64 = field.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parse CSV text. A first record whose selected field is not a number is the header.
pub fn parse_csv(text: &str, column: &ColumnSel) -> Result<(String, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut name: Option<String> = None;
    let mut header: Option<Vec<String>> = None;
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("malformed CSV near record {}", i + 1))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let idx = match column {
            ColumnSel::Last => rec.len() - 1,
            ColumnSel::Index(k) => k - 1,
            ColumnSel::Name(n) => {
                let h = match &header {
                    Some(h) => h,
                    None if values.is_empty() => {
                        header = Some(rec.iter().map(|f| f.trim().to_string()).collect());
                        continue;
                    }
                    None => bail!("column {n:?} selected by name but the file has no header"),
                };
                h.iter().position(|c| c == n).ok_or_else(|| anyhow!("no column named {n:?}; header is {h:?}"))?
            }
        };
        if let (ColumnSel::Name(n), None) = (column, &name) {
            name = Some(n.clone());
        }
        let field = rec.get(idx).ok_or_else(|| anyhow!("line {line}: has {} fields, column {} requested", rec.len(), idx + 1))?;
        match parse_number(field) {
            Some(v) => values.push(v),
            None if values.is_empty() && header.is_none() && name.is_none() => {
                header = Some(rec.iter().map(|f| f.trim().to_string()).collect());
                name = Some(field.trim().to_string());
            }
            None => bail!("line {line}: cannot parse {:?} as a finite number", field),
        }
    }
    if values.is_empty() {
        bail!("no numeric observations found");
    }
    let name = name.unwrap_or_else(|| match column {
        ColumnSel::Index(k) => format!("column{k}"),
        _ => "x".to_string(),
    });
    Ok((name, values))
}

pub fn load(path: &Path, column: &ColumnSel, transform: Transform) -> Result<DatasetFrame> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (name, raw) = parse_csv(&text, column).with_context(|| format!("parsing {}", path.display()))?;
    let values = transform.apply(&raw)?;
    Ok(DatasetFrame { name, source: path.display().to_string(), transform, raw_len: raw.len(), values })
}
