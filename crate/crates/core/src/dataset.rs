//! Indicator data: loading, validation, min-max normalization and the
//! embedded 2014 Better Life Index subset.
//!
//! Values are stored dimension-major (`values[q][c]`), which is the layout the
//! optimizer reads. The JSON mirror and the CSV form are both entity-major.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("header must start with an entity column followed by at least one dimension")]
    BadHeader,
    #[error("row length mismatch on line {line}: expected {expected} cells, found {found}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric cell on line {line}, column `{column}`: {value:?}")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("non-finite value for entity `{entity}`, dimension `{dimension}`")]
    NonFinite { entity: String, dimension: String },
    #[error("duplicate entity name `{0}`")]
    DuplicateEntity(String),
    #[error("duplicate dimension name `{0}`")]
    DuplicateDimension(String),
    #[error("value {value} for entity `{entity}`, dimension `{dimension}` lies outside [0, 1]")]
    OutOfRange {
        entity: String,
        dimension: String,
        value: f64,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Normalized indicator values for `C` entities across `Q` dimensions.
///
/// Every entry is finite and lies in `[0, 1]`; names are unique. The matrix is
/// immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    dimension_names: Vec<String>,
    entity_names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl IndicatorMatrix {
    /// Builds a matrix from dimension-major values (`values[q][c]`).
    pub fn new(
        dimension_names: Vec<String>,
        entity_names: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, DatasetError> {
        if dimension_names.is_empty() || entity_names.is_empty() {
            return Err(DatasetError::Empty);
        }
        check_unique(&dimension_names).map_err(DatasetError::DuplicateDimension)?;
        check_unique(&entity_names).map_err(DatasetError::DuplicateEntity)?;
        if values.len() != dimension_names.len() {
            return Err(DatasetError::Shape(format!(
                "{} value rows for {} dimensions",
                values.len(),
                dimension_names.len()
            )));
        }
        for (q, row) in values.iter().enumerate() {
            if row.len() != entity_names.len() {
                return Err(DatasetError::Shape(format!(
                    "dimension `{}` has {} values for {} entities",
                    dimension_names[q],
                    row.len(),
                    entity_names.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DatasetError::NonFinite {
                        entity: entity_names[c].clone(),
                        dimension: dimension_names[q].clone(),
                    });
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(DatasetError::OutOfRange {
                        entity: entity_names[c].clone(),
                        dimension: dimension_names[q].clone(),
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            dimension_names,
            entity_names,
            values,
        })
    }

    /// Builds a matrix from entity-major rows (`rows[c][q]`).
    pub fn from_entity_rows(
        dimension_names: Vec<String>,
        entity_names: Vec<String>,
        rows: &[Vec<f64>],
    ) -> Result<Self, DatasetError> {
        let q_len = dimension_names.len();
        if let Some((c, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != q_len) {
            return Err(DatasetError::Shape(format!(
                "entity row {c} has {} values for {q_len} dimensions",
                row.len()
            )));
        }
        let values = (0..q_len)
            .map(|q| rows.iter().map(|r| r[q]).collect())
            .collect();
        Self::new(dimension_names, entity_names, values)
    }

    pub fn num_dimensions(&self) -> usize {
        self.dimension_names.len()
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn dimension_names(&self) -> &[String] {
        &self.dimension_names
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    /// `I_{q,c}`.
    #[inline]
    pub fn value(&self, dimension: usize, entity: usize) -> f64 {
        self.values[dimension][entity]
    }

    /// Dimension-major values.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// The `Q` values of one entity.
    pub fn entity_row(&self, entity: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[entity]).collect()
    }

    /// Case-insensitive exact match on the entity name.
    pub fn find_entity(&self, name: &str) -> Option<usize> {
        let needle = name.trim().to_lowercase();
        self.entity_names
            .iter()
            .position(|e| e.to_lowercase() == needle)
    }

    pub fn find_dimension(&self, name: &str) -> Option<usize> {
        let needle = name.trim().to_lowercase();
        self.dimension_names
            .iter()
            .position(|d| d.to_lowercase() == needle)
    }

    /// Sub-matrix restricted to the given entities, in the given order.
    pub fn select_entities(&self, entities: &[usize]) -> Result<Self, DatasetError> {
        let names = entities
            .iter()
            .map(|&c| self.entity_names[c].clone())
            .collect();
        let values = self
            .values
            .iter()
            .map(|row| entities.iter().map(|&c| row[c]).collect())
            .collect();
        Self::new(self.dimension_names.clone(), names, values)
    }

    /// Serializes to the CSV form accepted by [`parse_csv`].
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header =
            std::iter::once("entity").chain(self.dimension_names.iter().map(String::as_str));
        // Writing into a Vec cannot fail.
        writer.write_record(header).expect("in-memory csv write");
        for (c, name) in self.entity_names.iter().enumerate() {
            let mut record = vec![name.clone()];
            record.extend(self.values.iter().map(|row| row[c].to_string()));
            writer.write_record(&record).expect("in-memory csv write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv flush"))
            .expect("csv output is utf-8")
    }

    pub fn to_json(&self) -> DatasetJson {
        DatasetJson {
            dimensions: self.dimension_names.clone(),
            entities: self.entity_names.clone(),
            values: (0..self.num_entities())
                .map(|c| self.entity_row(c))
                .collect(),
        }
    }

    pub fn from_json(json: DatasetJson) -> Result<Self, DatasetError> {
        Self::from_entity_rows(json.dimensions, json.entities, &json.values)
    }
}

/// JSON mirror of the CSV form; `values` is entity-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetJson {
    pub dimensions: Vec<String>,
    pub entities: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawColumnSpec {
    pub name: String,
    pub polarity: Polarity,
}

impl RawColumnSpec {
    pub fn new(name: impl Into<String>, polarity: Polarity) -> Self {
        Self {
            name: name.into(),
            polarity,
        }
    }

    /// Parses a raw CSV header cell. A `:lower` suffix marks a
    /// lower-is-better column, `:higher` (or no suffix) higher-is-better.
    fn from_header(cell: &str) -> Self {
        let cell = cell.trim();
        match cell.rsplit_once(':') {
            Some((name, tag)) if tag.eq_ignore_ascii_case("lower") => {
                Self::new(name.trim(), Polarity::LowerIsBetter)
            }
            Some((name, tag)) if tag.eq_ignore_ascii_case("higher") => {
                Self::new(name.trim(), Polarity::HigherIsBetter)
            }
            _ => Self::new(cell, Polarity::HigherIsBetter),
        }
    }
}

/// A dimension whose raw values were all equal and were mapped to 0.5.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantColumn {
    pub dimension: String,
}

/// Min-max normalizes raw values (`raw[q][c]`, dimension-major) into `[0, 1]`.
///
/// The best entity in each dimension maps to 1 and the worst to 0, respecting
/// polarity. A constant column maps to 0.5 everywhere and is reported back.
pub fn normalize_minmax(
    entity_names: Vec<String>,
    raw: &[Vec<f64>],
    specs: &[RawColumnSpec],
) -> Result<(IndicatorMatrix, Vec<ConstantColumn>), DatasetError> {
    if raw.len() != specs.len() {
        return Err(DatasetError::Shape(format!(
            "{} raw rows for {} column specs",
            raw.len(),
            specs.len()
        )));
    }
    let mut constant = Vec::new();
    let mut values = Vec::with_capacity(raw.len());
    for (row, spec) in raw.iter().zip(specs) {
        if row.len() != entity_names.len() {
            return Err(DatasetError::Shape(format!(
                "dimension `{}` has {} values for {} entities",
                spec.name,
                row.len(),
                entity_names.len()
            )));
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                entity: entity_names[c].clone(),
                dimension: spec.name.clone(),
            });
        }
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        if span == 0.0 {
            log::warn!(
                "dimension `{}` is constant; mapping every entity to 0.5",
                spec.name
            );
            constant.push(ConstantColumn {
                dimension: spec.name.clone(),
            });
            values.push(vec![0.5; row.len()]);
            continue;
        }
        let normalized = row
            .iter()
            .map(|&x| {
                let v = match spec.polarity {
                    Polarity::HigherIsBetter => (x - min) / span,
                    Polarity::LowerIsBetter => (max - x) / span,
                };
                v.clamp(0.0, 1.0)
            })
            .collect();
        values.push(normalized);
    }
    let dims = specs.iter().map(|s| s.name.clone()).collect();
    Ok((IndicatorMatrix::new(dims, entity_names, values)?, constant))
}

/// Parses `entity,dim1,...,dimQ` CSV, one entity per row.
///
/// With `already_normalized` every cell must lie in `[0, 1]`. Otherwise the
/// cells are raw values that get min-max normalized per column; a header cell
/// may carry a `:lower` suffix to flip the polarity of its column.
pub fn parse_csv(text: &str, already_normalized: bool) -> Result<IndicatorMatrix, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(DatasetError::Empty),
    };
    if header.len() < 2 {
        return Err(DatasetError::BadHeader);
    }
    let specs: Vec<RawColumnSpec> = header
        .iter()
        .skip(1)
        .map(|cell| {
            if already_normalized {
                RawColumnSpec::new(cell.trim(), Polarity::HigherIsBetter)
            } else {
                RawColumnSpec::from_header(cell)
            }
        })
        .collect();
    let q_len = specs.len();

    let mut entities = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        let line = i + 2;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != q_len + 1 {
            return Err(DatasetError::RowLength {
                line,
                expected: q_len + 1,
                found: record.len(),
            });
        }
        let name = record[0].to_string();
        let mut row = Vec::with_capacity(q_len);
        for (cell, spec) in record.iter().skip(1).zip(&specs) {
            let v: f64 = cell.parse().map_err(|_| DatasetError::NonNumeric {
                line,
                column: spec.name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite {
                    entity: name.clone(),
                    dimension: spec.name.clone(),
                });
            }
            row.push(v);
        }
        entities.push(name);
        rows.push(row);
    }
    if entities.is_empty() {
        return Err(DatasetError::Empty);
    }
    check_unique(&entities).map_err(DatasetError::DuplicateEntity)?;

    let dims: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
    if already_normalized {
        IndicatorMatrix::from_entity_rows(dims, entities, &rows)
    } else {
        let raw: Vec<Vec<f64>> = (0..q_len)
            .map(|q| rows.iter().map(|r| r[q]).collect())
            .collect();
        normalize_minmax(entities, &raw, &specs).map(|(m, _)| m)
    }
}

pub fn parse_json(text: &str) -> Result<IndicatorMatrix, DatasetError> {
    IndicatorMatrix::from_json(serde_json::from_str(text)?)
}

fn check_unique(names: &[String]) -> Result<(), String> {
    let mut seen = HashSet::with_capacity(names.len());
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(n.clone());
        }
    }
    Ok(())
}

pub const FIXTURE_DIMENSIONS: [&str; 11] = [
    "Housing",
    "Income",
    "Jobs",
    "Community",
    "Education",
    "Environment",
    "Civic Engagement",
    "Health",
    "Life Satisfaction",
    "Safety",
    "Work-Life Balance",
];

// Bar heights as printed (3 decimals) in the 2014 top-five tables for Germany,
// Poland, Spain and Austria. Entity-major, dimensions in FIXTURE_DIMENSIONS order.
const FIXTURE_ROWS: [(&str, [f64; 11]); 15] = [
    (
        "Germany",
        [
            0.626, 0.527, 0.826, 0.893, 0.797, 0.877, 0.393, 0.719, 0.742, 0.896, 0.795,
        ],
    ),
    (
        "Switzerland",
        [
            0.623, 0.726, 0.956, 0.929, 0.745, 0.832, 0.337, 0.925, 1.0, 0.87, 0.713,
        ],
    ),
    (
        "Finland",
        [
            0.633, 0.349, 0.748, 0.893, 0.915, 0.9, 0.596, 0.745, 0.871, 0.922, 0.737,
        ],
    ),
    (
        "Denmark",
        [
            0.616, 0.396, 0.81, 1.0, 0.774, 0.9, 0.706, 0.737, 0.935, 0.877, 0.978,
        ],
    ),
    (
        "Canada",
        [
            0.766, 0.572, 0.801, 0.929, 0.765, 0.853, 0.584, 0.918, 0.935, 0.972, 0.613,
        ],
    ),
    (
        "Poland",
        [
            0.36, 0.129, 0.524, 0.75, 0.84, 0.487, 0.531, 0.52, 0.323, 0.982, 0.562,
        ],
    ),
    (
        "Japan",
        [
            0.484, 0.569, 0.799, 0.786, 0.782, 0.694, 0.393, 0.496, 0.419, 0.996, 0.526,
        ],
    ),
    (
        "Korea",
        [
            0.574, 0.229, 0.759, 0.321, 0.799, 0.537, 0.749, 0.497, 0.419, 0.949, 0.417,
        ],
    ),
    (
        "Spain",
        [
            0.688, 0.293, 0.258, 0.857, 0.536, 0.59, 0.506, 0.861, 0.484, 0.866, 0.933,
        ],
    ),
    (
        "Netherlands",
        [
            0.688, 0.525, 0.868, 0.857, 0.761, 0.688, 0.511, 0.829, 0.871, 0.832, 0.878,
        ],
    ),
    (
        "Sweden",
        [
            0.625, 0.496, 0.782, 0.821, 0.79, 0.986, 0.878, 0.884, 0.871, 0.821, 0.809,
        ],
    ),
    (
        "Norway",
        [
            0.764, 0.392, 0.92, 0.893, 0.719, 0.896, 0.651, 0.808, 0.968, 0.873, 0.871,
        ],
    ),
    (
        "Austria",
        [
            0.582, 0.497, 0.859, 0.964, 0.669, 0.738, 0.564, 0.763, 0.903, 0.905, 0.599,
        ],
    ),
    (
        "Iceland",
        [
            0.595, 0.361, 0.866, 1.0, 0.726, 0.878, 0.527, 0.886, 0.903, 0.919, 0.568,
        ],
    ),
    (
        "United States",
        [
            0.789, 1.0, 0.796, 0.786, 0.699, 0.784, 0.536, 0.851, 0.742, 0.894, 0.53,
        ],
    ),
];

/// The 15-entity by 11-dimension subset of the 2014 Better Life Index whose
/// normalized values are printed in the published top-five tables.
pub fn embedded_fixture_2014() -> IndicatorMatrix {
    let dims = FIXTURE_DIMENSIONS.iter().map(|d| d.to_string()).collect();
    let names = FIXTURE_ROWS.iter().map(|(n, _)| n.to_string()).collect();
    let rows: Vec<Vec<f64>> = FIXTURE_ROWS.iter().map(|(_, r)| r.to_vec()).collect();
    IndicatorMatrix::from_entity_rows(dims, names, &rows).expect("embedded fixture is valid")
}
