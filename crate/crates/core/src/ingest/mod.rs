//! Monthly transaction records to activity tensors.
//!
//! A CSV with one row per (client, month) and one column per transaction
//! label is read into [`TransactionRecord`]s, the most active clients are
//! selected, and the records are summed into a client × label × month
//! [`SparseTensor3`].

mod synth;

pub use synth::{synth_generate, SynthConfig};

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::tensor::{Entry, SparseTensor3};

pub const DEFAULT_CLIENTS: usize = 200;
pub const DEFAULT_LABELS: usize = 22;
pub const DEFAULT_SLICES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRecord {
    pub client_id: String,
    /// Index into [`CsvSchema::labels`].
    pub label: usize,
    /// Calendar months since the schema epoch.
    pub month: usize,
    pub value: f64,
}

/// Column mapping for [`load_records`], usually read from a small TOML file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub client_column: String,
    pub date_column: String,
    #[serde(default = "default_date_format")]
    pub date_format: String,
    /// First month of the span, `YYYY-MM`.
    #[serde(default = "default_epoch")]
    pub epoch: String,
    #[serde(default = "default_slices")]
    pub n_slices: usize,
    /// One column per transaction label; a positive value marks activity.
    pub labels: Vec<String>,
    /// Largest tolerated fraction of malformed rows.
    #[serde(default = "default_malformed_threshold")]
    pub malformed_threshold: f64,
}

fn default_date_format() -> String {
    "%Y-%m-%d".to_owned()
}

fn default_epoch() -> String {
    "2015-01".to_owned()
}

fn default_slices() -> usize {
    DEFAULT_SLICES
}

fn default_malformed_threshold() -> f64 {
    0.01
}

impl CsvSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: CsvSchema =
            toml::from_str(text).map_err(|e| Error::arg(format!("schema: {e}")))?;
        schema.epoch_month()?;
        if schema.labels.is_empty() || schema.n_slices == 0 {
            return Err(Error::arg("schema needs at least one label and one slice"));
        }
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn epoch_month(&self) -> Result<i64> {
        let date = NaiveDate::parse_from_str(&format!("{}-01", self.epoch), "%Y-%m-%d")
            .map_err(|e| Error::arg(format!("epoch {:?}: {e}", self.epoch)))?;
        Ok(months(date))
    }
}

fn months(d: NaiveDate) -> i64 {
    d.year() as i64 * 12 + d.month0() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub records: Vec<TransactionRecord>,
    pub rows: usize,
    pub malformed: usize,
}

/// Reads one record per (row, active label).
///
/// Rows with an unparseable or out-of-span date, a wrong field count, or a
/// label value that is not a nonnegative number are skipped and counted.
/// Empty and `NA` label cells mean inactive.
pub fn load_records(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoadReport> {
    let reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    read_records(reader, schema)
}

pub fn read_records<R: std::io::Read>(
    mut reader: csv::Reader<R>,
    schema: &CsvSchema,
) -> Result<LoadReport> {
    let epoch = schema.epoch_month()?;
    let header = reader.headers()?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::arg(format!("column {name:?} not in CSV header")))
    };
    let client_col = column(&schema.client_column)?;
    let date_col = column(&schema.date_column)?;
    let label_cols = schema
        .labels
        .iter()
        .map(|l| column(l))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let (mut rows, mut malformed) = (0usize, 0usize);
    for row in reader.records() {
        rows += 1;
        let row = match row {
            Ok(r) if r.len() == header.len() => r,
            Ok(_) | Err(_) => {
                malformed += 1;
                continue;
            }
        };
        let month = NaiveDate::parse_from_str(&row[date_col], &schema.date_format)
            .ok()
            .map(|d| months(d) - epoch)
            .filter(|&m| m >= 0 && (m as usize) < schema.n_slices);
        let values: Option<Vec<f64>> = label_cols
            .iter()
            .map(|&c| match &row[c] {
                "" | "NA" => Some(0.0),
                s => s.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.is_finite()),
            })
            .collect();
        let (Some(month), Some(values)) = (month, values) else {
            malformed += 1;
            continue;
        };
        let client = &row[client_col];
        if client.is_empty() {
            malformed += 1;
            continue;
        }
        for (label, value) in values.into_iter().enumerate() {
            if value > 0.0 {
                records.push(TransactionRecord {
                    client_id: client.to_owned(),
                    label,
                    month: month as usize,
                    value,
                });
            }
        }
    }
    if rows > 0 && malformed as f64 > schema.malformed_threshold * rows as f64 {
        return Err(Error::arg(format!(
            "{malformed} of {rows} rows are malformed, above the {} threshold",
            schema.malformed_threshold
        )));
    }
    Ok(LoadReport {
        records,
        rows,
        malformed,
    })
}

/// Bijection between client ids and tensor row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientIndex {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl ClientIndex {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::arg(format!("client {id:?} listed twice")));
            }
        }
        Ok(Self { ids, index })
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// The `n` clients with the most records, most active first. Ties go to the
/// lexicographically smaller id.
pub fn select_top_clients(records: &[TransactionRecord], n: usize) -> Result<ClientIndex> {
    if n == 0 {
        return Err(Error::arg("must select at least one client"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(&r.client_id).or_default() += 1;
    }
    if counts.len() < n {
        return Err(Error::arg(format!(
            "asked for {n} clients but only {} are present",
            counts.len()
        )));
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ClientIndex::new(ranked.into_iter().take(n).map(|(id, _)| id.to_owned()).collect())
}

/// Shape and index maps of the activity tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub clients: ClientIndex,
    pub n_labels: usize,
    pub n_slices: usize,
}

impl TensorSpec {
    pub fn new(clients: ClientIndex, n_labels: usize, n_slices: usize) -> Result<Self> {
        if clients.is_empty() || n_labels == 0 || n_slices == 0 {
            return Err(Error::arg("tensor dimensions must be positive"));
        }
        Ok(Self {
            clients,
            n_labels,
            n_slices,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.clients.len(), self.n_labels, self.n_slices]
    }
}

/// Keeps only the records of clients present in `clients`.
pub fn restrict_to_clients(
    records: &[TransactionRecord],
    clients: &ClientIndex,
) -> Vec<TransactionRecord> {
    records
        .iter()
        .filter(|r| clients.get(&r.client_id).is_some())
        .cloned()
        .collect()
}

/// Sums record values per (client, label, month) cell. Cells that sum to
/// zero are not stored.
pub fn build_tensor(records: &[TransactionRecord], spec: &TensorSpec) -> Result<SparseTensor3> {
    let mut cells: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for r in records {
        let i = spec
            .clients
            .get(&r.client_id)
            .ok_or_else(|| Error::arg(format!("client {:?} not in the index", r.client_id)))?;
        if r.label >= spec.n_labels || r.month >= spec.n_slices {
            return Err(Error::arg(format!(
                "record (label {}, month {}) outside {} labels x {} slices",
                r.label, r.month, spec.n_labels, spec.n_slices
            )));
        }
        if !(r.value.is_finite() && r.value >= 0.0) {
            return Err(Error::arg(format!("record value {} is not a nonnegative number", r.value)));
        }
        *cells.entry((r.month, r.label, i)).or_default() += r.value;
    }
    let entries = cells
        .into_iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|((k, j, i), value)| Entry { i, j, k, value })
        .collect();
    SparseTensor3::new(spec.shape(), entries)
}
