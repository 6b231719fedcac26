//! Count tables from CSV or JSON files.
//!
//! CSV comes in two shapes. Narrow: `cell,count` rows with 0-1 labels such
//! as `110`, optionally under a `cell,count` header. Wide: one 0/1 column per
//! feature followed by the count; a header row, if present, names the
//! features. JSON: `{"space": "IP", "features": [..], "counts": {"110": 6}}`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use hasfit::{
    default_feature_names, Cell, FeatureSet, HasError, ObservedCounts, SampleSpace, Space, MAX_K,
};
use indexmap::IndexMap;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer};
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum InputFormat {
    Csv,
    Json,
}

impl InputFormat {
    /// `.json` files are JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => InputFormat::Json,
            _ => InputFormat::Csv,
        }
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("E_IO: cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("E_FORMAT: {0}")]
    Format(String),

    #[error("E_LABEL: malformed cell label '{label}' ({reason})")]
    Label { label: String, reason: String },

    #[error("E_DUPLICATE: cell {0} appears more than once")]
    Duplicate(String),

    #[error("E_OVERFLOW: {0}")]
    Overflow(String),

    #[error("E_ZERO_CELL: cell {0} is the all-absent cell, which is not part of the incomplete (IP) sample space")]
    ZeroCell(String),

    #[error(
        "E_MISSING: no count for cell(s) {0}; pass --allow-missing-as-zero to treat them as zero"
    )]
    Missing(String),
}

/// A validated count table, rows in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct TableFile {
    pub space: SampleSpace,
    pub feature_names: Vec<String>,
    pub rows: Vec<(Cell, u64)>,
}

impl TableFile {
    pub fn k(&self) -> usize {
        self.space.k()
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|(_, n)| n).sum()
    }

    /// Counts in canonical order. Cells without a row are an error unless
    /// `allow_missing` is set, in which case they count as zero.
    pub fn counts(&self, allow_missing: bool) -> Result<ObservedCounts, TableError> {
        let present: HashSet<Cell> = self.rows.iter().map(|(c, _)| *c).collect();
        let missing: Vec<String> = self
            .space
            .cells()
            .into_iter()
            .filter(|c| !present.contains(c))
            .map(|c| c.label(self.k()))
            .collect();
        if !missing.is_empty() && !allow_missing {
            return Err(TableError::Missing(missing.join(", ")));
        }
        ObservedCounts::from_pairs(self.space, self.rows.iter().copied()).map_err(|e| match e {
            HasError::InvalidCounts(msg) if msg.contains("overflow") => TableError::Overflow(msg),
            other => TableError::Format(other.to_string()),
        })
    }
}

pub fn parse_table(
    path: &Path,
    format: InputFormat,
    space: Option<Space>,
) -> Result<TableFile, TableError> {
    let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        InputFormat::Csv => parse_csv(&text, space.unwrap_or(Space::Ip)),
        InputFormat::Json => parse_json(&text, space),
    }
}

fn parse_label(label: &str) -> Result<Cell, TableError> {
    let bad = |reason: &str| TableError::Label {
        label: label.to_string(),
        reason: reason.to_string(),
    };
    if label.is_empty() || !label.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(bad("expected only 0 and 1"));
    }
    if label.len() > MAX_K {
        return Err(bad("too many features"));
    }
    Cell::parse(label).map_err(|e| bad(&e.to_string()))
}

fn parse_count(text: &str) -> Result<u64, TableError> {
    use std::num::IntErrorKind;
    text.parse::<u64>().map_err(|e| match e.kind() {
        IntErrorKind::PosOverflow => {
            TableError::Overflow(format!("count {text} does not fit in 64 bits"))
        }
        _ => TableError::Format(format!("count '{text}' is not a nonnegative integer")),
    })
}

/// Accumulates rows, checking label length, duplicates, the zero cell and the total.
struct Builder {
    k: Option<usize>,
    space: Space,
    seen: HashSet<Cell>,
    rows: Vec<(Cell, u64)>,
    total: u64,
}

impl Builder {
    fn new(space: Space) -> Self {
        Builder {
            k: None,
            space,
            seen: HashSet::new(),
            rows: Vec::new(),
            total: 0,
        }
    }

    fn push(&mut self, label: &str, count: u64) -> Result<(), TableError> {
        let cell = parse_label(label)?;
        let k = *self.k.get_or_insert(label.len());
        if label.len() != k {
            return Err(TableError::Label {
                label: label.to_string(),
                reason: format!("expected {k} digits like the first row"),
            });
        }
        if cell.is_zero() && self.space == Space::Ip {
            return Err(TableError::ZeroCell(label.to_string()));
        }
        if !self.seen.insert(cell) {
            return Err(TableError::Duplicate(label.to_string()));
        }
        self.total = self
            .total
            .checked_add(count)
            .ok_or_else(|| TableError::Overflow("total count does not fit in 64 bits".into()))?;
        self.rows.push((cell, count));
        Ok(())
    }

    fn finish(self, names: Option<Vec<String>>) -> Result<TableFile, TableError> {
        let k = self
            .k
            .ok_or_else(|| TableError::Format("table has no rows".into()))?;
        let space =
            SampleSpace::new(k, self.space).map_err(|e| TableError::Format(e.to_string()))?;
        let feature_names = names.unwrap_or_else(|| default_feature_names(k));
        if feature_names.len() != k {
            return Err(TableError::Format(format!(
                "{} feature names for {k} features",
                feature_names.len()
            )));
        }
        let mut unique = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !unique.insert(n.as_str())) {
            return Err(TableError::Format(format!(
                "feature name '{dup}' is used twice"
            )));
        }
        if let Some(bad) = feature_names.iter().find(|n| {
            n.is_empty() || n.contains(['[', ']', ',']) || n.contains(char::is_whitespace)
        }) {
            return Err(TableError::Format(format!(
                "feature name '{bad}' cannot be used in model strings"
            )));
        }
        if self.total == 0 {
            return Err(TableError::Format("total count is zero".into()));
        }
        Ok(TableFile {
            space,
            feature_names,
            rows: self.rows,
        })
    }
}

pub fn parse_csv(text: &str, space: Space) -> Result<TableFile, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut builder = Builder::new(space);
    let mut names = None;
    let mut wide = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| TableError::Format(e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.len() < 2 {
            return Err(TableError::Format(format!(
                "row {} needs a cell and a count",
                i + 1
            )));
        }
        let (cells, count) = fields.split_at(fields.len() - 1);
        let digits = cells
            .iter()
            .all(|c| !c.is_empty() && c.bytes().all(|b| b == b'0' || b == b'1'));
        if i == 0 && !digits && count[0].parse::<u64>().is_err() {
            // header row
            let narrow = cells.len() == 1 && cells[0].eq_ignore_ascii_case("cell");
            wide = Some(!narrow);
            if !narrow {
                names = Some(cells.iter().map(|s| s.to_string()).collect());
            }
            continue;
        }
        let is_wide = *wide.get_or_insert(cells.len() > 1);
        let label = if is_wide {
            if let Some(bad) = cells.iter().find(|c| **c != "0" && **c != "1") {
                return Err(TableError::Label {
                    label: bad.to_string(),
                    reason: "feature columns hold 0 or 1".into(),
                });
            }
            cells.concat()
        } else {
            if cells.len() != 1 {
                return Err(TableError::Format(format!(
                    "row {} has {} fields, expected 2",
                    i + 1,
                    fields.len()
                )));
            }
            cells[0].to_string()
        };
        builder.push(&label, parse_count(count[0])?)?;
    }
    builder.finish(names)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTable {
    #[serde(default)]
    space: Option<Space>,
    #[serde(default)]
    features: Option<Vec<String>>,
    counts: Counts,
}

/// Label-to-count map that rejects repeated keys.
struct Counts(Vec<(String, CountValue)>);

enum CountValue {
    Count(u64),
    Overflow(String),
    Invalid(String),
}

impl<'de> Deserialize<'de> for Counts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CountsVisitor;

        impl<'de> Visitor<'de> for CountsVisitor {
            type Value = Counts;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping cell labels to counts")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Counts, A::Error> {
                let mut out: IndexMap<String, CountValue> = IndexMap::new();
                while let Some((key, value)) = map.next_entry::<String, serde_json::Value>()? {
                    let count = match &value {
                        serde_json::Value::Number(n) => match n.as_u64() {
                            Some(v) => CountValue::Count(v),
                            None if n.as_f64().is_some_and(|f| f.fract() == 0.0 && f > 0.0) => {
                                CountValue::Overflow(n.to_string())
                            }
                            None => CountValue::Invalid(n.to_string()),
                        },
                        other => CountValue::Invalid(other.to_string()),
                    };
                    if out.contains_key(&key) {
                        return Err(de::Error::custom(format!(
                            "E_DUPLICATE: cell {key} appears more than once"
                        )));
                    }
                    out.insert(key, count);
                }
                Ok(Counts(out.into_iter().collect()))
            }
        }

        deserializer.deserialize_map(CountsVisitor)
    }
}

pub fn parse_json(text: &str, space: Option<Space>) -> Result<TableFile, TableError> {
    let table: JsonTable = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        match msg.strip_prefix("E_DUPLICATE: cell ") {
            Some(rest) => {
                TableError::Duplicate(rest.split(' ').next().unwrap_or_default().to_string())
            }
            None => TableError::Format(msg),
        }
    })?;
    let declared = match (table.space, space) {
        (Some(a), Some(b)) if a != b => {
            return Err(TableError::Format(format!(
                "file declares {a} but {b} was requested"
            )));
        }
        (a, b) => a.or(b).unwrap_or(Space::Ip),
    };
    let mut builder = Builder::new(declared);
    for (label, value) in table.counts.0 {
        let count = match value {
            CountValue::Count(v) => v,
            CountValue::Overflow(v) => {
                return Err(TableError::Overflow(format!(
                    "count {v} for cell {label} does not fit in 64 bits"
                )))
            }
            CountValue::Invalid(v) => {
                return Err(TableError::Format(format!(
                    "count {v} for cell {label} is not a nonnegative integer"
                )))
            }
        };
        builder.push(&label, count)?;
    }
    builder.finish(table.features)
}

/// Display name of a feature set under the table's feature names.
pub fn subset_name(set: FeatureSet, names: &[String]) -> String {
    if set.is_empty() {
        "\u{2205}".to_string()
    } else {
        set.name(names)
    }
}
