//! Score-matrix ingestion (CSV and NDJSON) and atomic output writing.
//!
//! CSV files carry a mandatory header `sample_id,<score columns...>[,label]`
//! with label values `inlier|ood|unknown`. NDJSON files carry one object per
//! line with the same field names; the first object fixes the column order.

use std::io::Write as _;
use std::path::Path;

use scorefuse::ztransform::{Label, ScoreMatrix};

use crate::errors::{open_failed, write_failed, AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Ndjson,
}

impl FileFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "ndjson" => Ok(FileFormat::Ndjson),
            other => Err(AppError::usage(format!(
                "unknown format `{other}`; valid formats: csv, ndjson"
            ))),
        }
    }

    pub fn infer(path: &Path, explicit: Option<FileFormat>) -> FileFormat {
        explicit.unwrap_or_else(|| {
            match path.extension().and_then(|e| e.to_str()) {
                Some("ndjson") | Some("jsonl") | Some("json") => FileFormat::Ndjson,
                _ => FileFormat::Csv,
            }
        })
    }
}

/// A parsed score file: per-row sample ids plus the matrix.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub matrix: ScoreMatrix,
}

impl Dataset {
    /// Canonical fingerprint of the parsed data (ids, column names, value
    /// bits, labels). Format-independent: a CSV and an NDJSON file carrying
    /// the same samples fingerprint identically.
    pub fn fingerprint(&self) -> String {
        use scorefuse::ztransform::Label;
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for name in self.matrix.column_names() {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update([1u8]);
        for (id, row) in self.ids.iter().zip(self.matrix.rows()) {
            hasher.update(id.as_bytes());
            hasher.update([0u8]);
            for v in row {
                hasher.update(v.to_le_bytes());
            }
        }
        hasher.update([2u8]);
        if let Some(labels) = self.matrix.labels() {
            for l in labels {
                hasher.update([match l {
                    Label::Inlier => 1u8,
                    Label::Ood => 2,
                    Label::Unknown => 3,
                }]);
            }
        }
        format!("{:x}", hasher.finalize())
    }
}

fn parse_label(raw: &str, line: usize) -> Result<Label> {
    match raw {
        "inlier" => Ok(Label::Inlier),
        "ood" => Ok(Label::Ood),
        "unknown" | "" => Ok(Label::Unknown),
        other => Err(AppError::usage(format!(
            "line {line}: unknown label `{other}` (expected inlier|ood|unknown)"
        ))),
    }
}

fn parse_score(raw: &str, line: usize, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        AppError::usage(format!(
            "line {line}: column `{column}` has non-numeric value `{raw}`"
        ))
    })
}

fn read_csv(path: &Path) -> Result<Dataset> {
    let raw = std::fs::read_to_string(path).map_err(|e| open_failed(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(raw.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| AppError::usage(format!("{}: bad CSV header: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.first().map(String::as_str) != Some("sample_id") {
        return Err(AppError::usage(format!(
            "{}: first header column must be `sample_id`, got {:?}",
            path.display(),
            headers.first()
        )));
    }
    let has_label = headers.last().map(String::as_str) == Some("label");
    let score_end = if has_label { headers.len() - 1 } else { headers.len() };
    let score_names: Vec<String> = headers[1..score_end].to_vec();
    if score_names.is_empty() {
        return Err(AppError::usage(format!(
            "{}: no score columns between `sample_id` and `label`",
            path.display()
        )));
    }

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record =
            record.map_err(|e| AppError::usage(format!("line {line}: bad CSV record: {e}")))?;
        if record.len() != headers.len() {
            return Err(AppError::usage(format!(
                "line {line}: {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        ids.push(record[0].to_string());
        let mut row = Vec::with_capacity(score_names.len());
        for (j, name) in score_names.iter().enumerate() {
            row.push(parse_score(&record[j + 1], line, name)?);
        }
        rows.push(row);
        if has_label {
            labels.push(parse_label(record[headers.len() - 1].trim(), line)?);
        }
    }
    let matrix = ScoreMatrix::with_labels(score_names, rows, has_label.then_some(labels))?;
    Ok(Dataset { ids, matrix })
}

fn read_ndjson(path: &Path) -> Result<Dataset> {
    let raw = std::fs::read_to_string(path).map_err(|e| open_failed(path, e))?;
    let mut schema: Option<(Vec<String>, bool)> = None; // (score columns in order, has_label)
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, text) in raw.lines().enumerate() {
        let line = i + 1;
        if text.trim().is_empty() {
            continue;
        }
        let value: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
            .map_err(|e| AppError::usage(format!("line {line}: bad NDJSON object: {e}")))?;
        if schema.is_none() {
            let mut cols = Vec::new();
            let mut has_label = false;
            let mut saw_id = false;
            for key in value.keys() {
                match key.as_str() {
                    "sample_id" => saw_id = true,
                    "label" => has_label = true,
                    other => cols.push(other.to_string()),
                }
            }
            if !saw_id {
                return Err(AppError::usage(format!(
                    "line {line}: NDJSON objects must carry `sample_id`"
                )));
            }
            if cols.is_empty() {
                return Err(AppError::usage(format!("line {line}: no score fields")));
            }
            schema = Some((cols, has_label));
        }
        let (cols, has_label) = schema.as_ref().unwrap();
        let expected = cols.len() + 1 + usize::from(*has_label);
        if value.len() != expected {
            return Err(AppError::usage(format!(
                "line {line}: object has {} fields, first object had {expected}",
                value.len()
            )));
        }
        let id = value
            .get("sample_id")
            .ok_or_else(|| AppError::usage(format!("line {line}: missing `sample_id`")))?;
        ids.push(match id {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        });
        let mut row = Vec::with_capacity(cols.len());
        for name in cols {
            let v = value.get(name).ok_or_else(|| {
                AppError::usage(format!("line {line}: missing score field `{name}`"))
            })?;
            let num = v.as_f64().ok_or_else(|| {
                AppError::usage(format!(
                    "line {line}: column `{name}` has non-numeric value {v}"
                ))
            })?;
            row.push(num);
        }
        rows.push(row);
        if *has_label {
            let lab = value
                .get("label")
                .and_then(|v| v.as_str())
                .ok_or_else(|| AppError::usage(format!("line {line}: missing `label`")))?;
            labels.push(parse_label(lab, line)?);
        }
    }
    let (cols, has_label) = schema.ok_or_else(|| {
        AppError::usage(format!("{}: empty NDJSON file", path.display()))
    })?;
    let matrix = ScoreMatrix::with_labels(cols, rows, has_label.then_some(labels))?;
    Ok(Dataset { ids, matrix })
}

/// Read a score file, negating the named columns (for outlier-oriented
/// sources) after parsing.
pub fn read_dataset(path: &Path, format: Option<FileFormat>, negate: &[String]) -> Result<Dataset> {
    let ds = match FileFormat::infer(path, format) {
        FileFormat::Csv => read_csv(path)?,
        FileFormat::Ndjson => read_ndjson(path)?,
    };
    if negate.is_empty() {
        return Ok(ds);
    }
    let names = ds.matrix.column_names().to_vec();
    for n in negate {
        if !names.contains(n) {
            return Err(AppError::usage(format!(
                "negate column `{n}` not present in {}",
                path.display()
            )));
        }
    }
    let rows: Vec<Vec<f64>> = ds
        .matrix
        .rows()
        .map(|r| {
            r.iter()
                .zip(&names)
                .map(|(&v, name)| if negate.contains(name) { -v } else { v })
                .collect()
        })
        .collect();
    let labels = ds.matrix.labels().map(|l| l.to_vec());
    let matrix = ScoreMatrix::with_labels(names, rows, labels)?;
    Ok(Dataset {
        ids: ds.ids,
        matrix,
    })
}

/// Write a file atomically (temp file in the same directory, then rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| write_failed(path, e))?;
            tempfile::NamedTempFile::new_in(d)
        }
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| write_failed(path, e))?;
    tmp.write_all(contents).map_err(|e| write_failed(path, e))?;
    tmp.persist(path).map_err(|e| write_failed(path, e))?;
    Ok(())
}

/// The one-line provenance header carried by every CSV output.
pub fn meta_comment(config_hash: &str, seed: u64) -> String {
    format!(
        "# scorefuse {} config={config_hash} seed={seed}\n",
        env!("CARGO_PKG_VERSION")
    )
}
