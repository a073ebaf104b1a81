//! Reading measures and vectors from JSON or CSV text.
//!
//! A measure is `{"atoms": [..], "weights": [..]}` with `weights` optional
//! (uniform when absent), or CSV rows `atom,weight` with an optional header.
//! A single CSV column is read as uniformly weighted atoms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::Scalar;

/// Serialized form of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureRecord {
    pub atoms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl MeasureRecord {
    pub fn from_measure<T: Scalar>(mu: &DiscreteMeasure<T>) -> Self {
        Self {
            atoms: mu.atoms().iter().map(|x| x.to_f64_lossy()).collect(),
            weights: Some(mu.weights().iter().map(|w| w.to_f64_lossy()).collect()),
        }
    }

    pub fn to_measure<T: Scalar>(&self) -> Result<DiscreteMeasure<T>> {
        let cast = |v: &[f64]| -> Result<Vec<T>> {
            v.iter().map(|&x| T::from_f64(x).ok_or(Error::NonFinite("measure input"))).collect()
        };
        let atoms: Vec<T> = cast(&self.atoms)?;
        match &self.weights {
            Some(w) => {
                let weights: Vec<T> = cast(w)?;
                DiscreteMeasure::new(&atoms, Some(&weights))
            }
            None => DiscreteMeasure::new(&atoms, None),
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Input(format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()))
}

pub fn measure_from_json<T: Scalar>(text: &str) -> Result<DiscreteMeasure<T>> {
    serde_json::from_str::<MeasureRecord>(text).map_err(json_error)?.to_measure()
}

pub fn measure_from_csv<T: Scalar>(text: &str) -> Result<DiscreteMeasure<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let mut columns = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Input(format!("invalid CSV: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Input(format!("CSV line {}: {e}", line + 1))),
        };
        if !(1..=2).contains(&values.len()) {
            return Err(Error::Input(format!("CSV line {}: expected `atom,weight`", line + 1)));
        }
        if *columns.get_or_insert(values.len()) != values.len() {
            return Err(Error::Input(format!("CSV line {}: inconsistent column count", line + 1)));
        }
        atoms.push(values[0]);
        if let Some(&w) = values.get(1) {
            weights.push(w);
        }
    }
    let weights = (columns == Some(2)).then_some(weights);
    MeasureRecord { atoms, weights }.to_measure()
}

/// Parses a measure from text, choosing JSON when the text starts with `{`.
pub fn measure_from_str<T: Scalar>(text: &str) -> Result<DiscreteMeasure<T>> {
    if text.trim_start().starts_with('{') {
        measure_from_json(text)
    } else {
        measure_from_csv(text)
    }
}

/// Reads a measure from an inline JSON object or from a JSON or CSV file.
pub fn load_measure<T: Scalar>(arg: &str) -> Result<DiscreteMeasure<T>> {
    if arg.trim_start().starts_with('{') {
        return measure_from_json(arg);
    }
    measure_from_str(&read(arg)?)
}

/// Parses a vector: a JSON array, or numbers separated by commas or
/// whitespace.
pub fn vector_from_str<T: Scalar>(text: &str) -> Result<Vec<T>> {
    let values: Vec<f64> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(json_error)?
    } else {
        text.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| Error::Input(format!("`{s}`: {e}"))))
            .collect::<Result<_>>()?
    };
    values.into_iter().map(|x| T::from_f64(x).filter(|v| v.is_finite()).ok_or(Error::NonFinite("vector"))).collect()
}

/// Reads a vector from an inline JSON array or from a file.
pub fn load_vector<T: Scalar>(arg: &str) -> Result<Vec<T>> {
    if arg.trim_start().starts_with('[') {
        return vector_from_str(arg);
    }
    vector_from_str(&read(arg)?)
}

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(Path::new(path)).map_err(|e| Error::Input(format!("cannot read `{path}`: {e}")))
}
