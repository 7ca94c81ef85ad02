//! Empirical verification pipeline.
//!
//! Ingests entity-by-category tables (entities in header columns, categories
//! in rows), converts rows to shares, ranks each entity's shares descending,
//! averages by rank position, and correlates the observed rank means against
//! the harmonic expected-share profile.

use std::collections::HashSet;
use std::io::{self, Read, Write};

use serde::Serialize;

use crate::kahan::{kahan_sum, KahanSum};
use crate::model;
use crate::numfmt;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("cell at data row {row}, entity column {col} is not a number: {content:?}")]
    MalformedCell {
        row: usize,
        col: usize,
        content: String,
    },
    #[error("table has no entities or no category rows")]
    EmptyTable,
    #[error("at least two categories are required, found {0}")]
    TooFewCategories(usize),
    #[error("duplicate category {0:?}")]
    DuplicateCategory(String),
    #[error("entity {0:?} has a zero value sum")]
    ZeroRowSum(String),
    #[error("correlation is undefined for inputs with zero variance")]
    DegenerateVariance,
    #[error("table read failure: {0}")]
    Csv(#[from] csv::Error),
}

/// What to do with a cell that cannot be parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum MissingPolicy {
    /// Fail with [`AnalysisError::MalformedCell`].
    #[default]
    Error,
    /// Drop the whole entity column; imputing would corrupt rank positions.
    DropEntity,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Field delimiter; comma by default, tab for TSV sources.
    pub delimiter: u8,
    /// Category rows whose name starts with this prefix are aggregate rows
    /// and are dropped.
    pub total_row_pattern: String,
    pub on_missing: MissingPolicy,
    /// Note recorded on the parsed dataset, typically the source path.
    pub provenance: Option<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            total_row_pattern: "Total".to_string(),
            on_missing: MissingPolicy::Error,
            provenance: None,
        }
    }
}

/// Raw entity-by-category values plus naming metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    entities: Vec<String>,
    categories: Vec<String>,
    /// `values[entity][category]`, all nonnegative.
    values: Vec<Vec<f64>>,
    provenance: Option<String>,
}

impl Dataset {
    pub fn new(
        entities: Vec<String>,
        categories: Vec<String>,
        values: Vec<Vec<f64>>,
        provenance: Option<String>,
    ) -> Result<Self, AnalysisError> {
        if entities.is_empty() || categories.is_empty() {
            return Err(AnalysisError::EmptyTable);
        }
        if categories.len() < 2 {
            return Err(AnalysisError::TooFewCategories(categories.len()));
        }
        let mut seen = HashSet::new();
        for c in &categories {
            if !seen.insert(c.as_str()) {
                return Err(AnalysisError::DuplicateCategory(c.clone()));
            }
        }
        assert_eq!(values.len(), entities.len(), "one value row per entity");
        for row in &values {
            assert_eq!(row.len(), categories.len(), "one value per category");
            assert!(
                row.iter().all(|v| v.is_finite() && *v >= 0.0),
                "values must be finite and nonnegative"
            );
        }
        Ok(Self {
            entities,
            categories,
            values,
            provenance,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Values of one entity across all categories.
    pub fn entity_values(&self, entity: usize) -> &[f64] {
        &self.values[entity]
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }
}

/// Strip decoration from a numeric cell: surrounding whitespace plus trailing
/// `*` footnote markers and `%` signs.
fn clean_cell(raw: &str) -> &str {
    raw.trim().trim_end_matches(['*', '%']).trim_end()
}

/// Parse a delimiter-separated table: header row of entity names (first
/// header cell is a label and is ignored), one row per category.
///
/// Cells like `4.2*` and `100.00%` parse as 4.2 and 100; rows whose category
/// name starts with the configured total-row prefix are dropped.
pub fn parse_table<R: Read>(source: R, options: &ParseOptions) -> Result<Dataset, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let entities: Vec<String> = reader
        .headers()?
        .iter()
        .skip(1)
        .map(|h| h.to_string())
        .collect();
    if entities.is_empty() {
        return Err(AnalysisError::EmptyTable);
    }

    let mut categories = Vec::new();
    let mut by_category: Vec<Vec<Result<f64, AnalysisError>>> = Vec::new();
    for (record_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_idx + 1;
        let name = record.get(0).unwrap_or("").to_string();
        if !options.total_row_pattern.is_empty() && name.starts_with(&options.total_row_pattern) {
            continue;
        }
        let mut cells = Vec::with_capacity(entities.len());
        for col in 1..=entities.len() {
            let raw = record.get(col).unwrap_or("");
            let cleaned = clean_cell(raw);
            let parsed = cleaned
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| AnalysisError::MalformedCell {
                    row,
                    col,
                    content: raw.to_string(),
                });
            cells.push(parsed);
        }
        categories.push(name);
        by_category.push(cells);
    }

    if categories.is_empty() {
        return Err(AnalysisError::EmptyTable);
    }

    // Resolve bad cells: fail on the first one, or drop the entity column.
    let mut dropped = vec![false; entities.len()];
    for cells in &by_category {
        for (col_idx, cell) in cells.iter().enumerate() {
            if cell.is_err() && !dropped[col_idx] {
                match options.on_missing {
                    MissingPolicy::Error => {
                        return Err(match &cells[col_idx] {
                            Err(AnalysisError::MalformedCell { row, col, content }) => {
                                AnalysisError::MalformedCell {
                                    row: *row,
                                    col: *col,
                                    content: content.clone(),
                                }
                            }
                            _ => unreachable!("bad cells carry MalformedCell"),
                        });
                    }
                    MissingPolicy::DropEntity => dropped[col_idx] = true,
                }
            }
        }
    }

    let kept: Vec<usize> = (0..entities.len()).filter(|&j| !dropped[j]).collect();
    if kept.is_empty() {
        return Err(AnalysisError::EmptyTable);
    }

    let kept_entities: Vec<String> = kept.iter().map(|&j| entities[j].clone()).collect();
    // Transpose to entity-major rows.
    let values: Vec<Vec<f64>> = kept
        .iter()
        .map(|&j| {
            by_category
                .iter()
                .map(|cells| *cells[j].as_ref().expect("kept columns parsed"))
                .collect()
        })
        .collect();

    Dataset::new(kept_entities, categories, values, options.provenance.clone())
}

/// Per-entity share rows: same shape as the dataset, each row either
/// renormalized to sum to 1 or divided by 100 (percent data taken as is).
#[derive(Debug, Clone, PartialEq)]
pub struct ShareMatrix {
    entities: Vec<String>,
    categories: Vec<String>,
    shares: Vec<Vec<f64>>,
}

impl ShareMatrix {
    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.shares
    }
}

pub fn to_shares(dataset: &Dataset, renormalize: bool) -> Result<ShareMatrix, AnalysisError> {
    let mut shares = Vec::with_capacity(dataset.entities.len());
    for (entity, row) in dataset.entities.iter().zip(&dataset.values) {
        let divisor = if renormalize {
            let sum = kahan_sum(row.iter().copied());
            if sum <= 0.0 {
                return Err(AnalysisError::ZeroRowSum(entity.clone()));
            }
            sum
        } else {
            100.0
        };
        shares.push(row.iter().map(|v| v / divisor).collect());
    }
    Ok(ShareMatrix {
        entities: dataset.entities.clone(),
        categories: dataset.categories.clone(),
        shares,
    })
}

/// Each entity's shares sorted descending; ties keep category order.
pub fn rank_rows(matrix: &ShareMatrix) -> Vec<Vec<f64>> {
    matrix
        .shares
        .iter()
        .map(|row| {
            let mut ranked = row.clone();
            ranked.sort_by(|a, b| b.partial_cmp(a).expect("shares are not NaN"));
            ranked
        })
        .collect()
}

/// Arithmetic mean at each rank position across entities.
pub fn mean_by_rank(ranked: &[Vec<f64>]) -> Vec<f64> {
    assert!(!ranked.is_empty(), "at least one entity row is required");
    let width = ranked[0].len();
    assert!(
        ranked.iter().all(|row| row.len() == width),
        "rows must share one length"
    );
    (0..width)
        .map(|rank| kahan_sum(ranked.iter().map(|row| row[rank])) / ranked.len() as f64)
        .collect()
}

/// Product-moment correlation with compensated accumulation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    assert_eq!(x.len(), y.len(), "correlation inputs must share one length");
    if x.len() < 2 {
        return Err(AnalysisError::DegenerateVariance);
    }
    let n = x.len() as f64;
    let mx = kahan_sum(x.iter().copied()) / n;
    let my = kahan_sum(y.iter().copied()) / n;
    let mut sxy = KahanSum::new();
    let mut sxx = KahanSum::new();
    let mut syy = KahanSum::new();
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    if sxx.value() <= 0.0 || syy.value() <= 0.0 {
        return Err(AnalysisError::DegenerateVariance);
    }
    Ok((sxy.value() / (sxx.value() * syy.value()).sqrt()).clamp(-1.0, 1.0))
}

/// Pipeline knobs recorded alongside a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOptions {
    /// Divide each entity row by its own sum; otherwise values are percents
    /// and are divided by 100.
    pub renormalize: bool,
    pub total_row_pattern: String,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            renormalize: true,
            total_row_pattern: "Total".to_string(),
        }
    }
}

/// Observed rank means against the model profile for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub n: u32,
    /// Mean share at each rank position, descending.
    pub observed: Vec<f64>,
    /// Harmonic expected shares for the same participant count.
    pub model: Vec<f64>,
    pub pearson_r: f64,
    pub entities: Vec<String>,
    pub options: FitOptions,
    /// Per-entity ranked share rows backing the means.
    #[serde(skip)]
    pub ranked_rows: Vec<Vec<f64>>,
}

impl FitReport {
    /// JSON form with values rounded to 12 significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "observed": self.observed.iter().map(|&v| numfmt::round12(v)).collect::<Vec<_>>(),
            "model": self.model.iter().map(|&v| numfmt::round12(v)).collect::<Vec<_>>(),
            "pearson_r": numfmt::round12(self.pearson_r),
            "entities": self.entities,
            "options": self.options,
        })
    }

    /// CSV rows `rank,observed,model`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "rank,observed,model")?;
        for (idx, (obs, model)) in self.observed.iter().zip(&self.model).enumerate() {
            writeln!(
                out,
                "{},{},{}",
                idx + 1,
                numfmt::fmt12(*obs),
                numfmt::fmt12(*model)
            )?;
        }
        Ok(())
    }
}

/// Full pipeline: shares, ranking, rank means, and correlation against the
/// expected-share profile for `N` = category count.
pub fn fit_report(dataset: &Dataset, options: &FitOptions) -> Result<FitReport, AnalysisError> {
    let shares = to_shares(dataset, options.renormalize)?;
    let ranked = rank_rows(&shares);
    let observed = mean_by_rank(&ranked);
    let n = dataset.categories.len() as u32;
    let profile = model::rank_profile(n);
    let pearson_r = pearson(&observed, &profile.expected)?;
    Ok(FitReport {
        n,
        observed,
        model: profile.expected,
        pearson_r,
        entities: dataset.entities.clone(),
        options: options.clone(),
        ranked_rows: ranked,
    })
}
