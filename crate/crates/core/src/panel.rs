//! Panel data model: outcomes on a complete J×T grid, a binary treatment
//! mask, covariates, and long-format CSV ingestion.
//!
//! The outcome matrix holds realized values: untreated outcomes at mask-0
//! cells and realized treated outcomes at mask-1 cells. Counterfactual
//! imputation targets are exactly the mask-1 cells.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A balanced panel of J units observed over T periods.
///
/// `covariates[l]` is the J×T matrix of the l-th covariate; time-invariant
/// covariates are stored broadcast across periods so downstream code sees a
/// single x_{j,t} access path.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    /// Realized outcomes, J×T.
    pub outcomes: DMatrix<f64>,
    /// Treatment indicators, J×T; 1 = treated. Stored as u8 so that invalid
    /// inputs survive until `validate` can report them.
    pub mask: DMatrix<u8>,
    /// Covariates, one J×T matrix per covariate.
    pub covariates: Vec<DMatrix<f64>>,
    pub unit_labels: Vec<String>,
    pub period_labels: Vec<String>,
}

impl PanelData {
    /// Assembles a panel, rejecting structurally inconsistent inputs.
    /// Content-level problems (non-binary mask, non-finite values, too few
    /// units) are left to [`validate`] so they can be reported together.
    pub fn new(
        outcomes: DMatrix<f64>,
        mask: DMatrix<u8>,
        covariates: Vec<DMatrix<f64>>,
        unit_labels: Vec<String>,
        period_labels: Vec<String>,
    ) -> Result<Self> {
        let (j, t) = outcomes.shape();
        if mask.shape() != (j, t) {
            return Err(Error::DimensionMismatch(format!(
                "mask is {:?}, outcomes are {:?}",
                mask.shape(),
                outcomes.shape()
            )));
        }
        for (l, x) in covariates.iter().enumerate() {
            if x.shape() != (j, t) {
                return Err(Error::DimensionMismatch(format!(
                    "covariate {l} is {:?}, outcomes are {:?}",
                    x.shape(),
                    outcomes.shape()
                )));
            }
        }
        if unit_labels.len() != j || period_labels.len() != t {
            return Err(Error::DimensionMismatch(format!(
                "{} unit labels and {} period labels for a {j}x{t} panel",
                unit_labels.len(),
                period_labels.len()
            )));
        }
        Ok(Self {
            outcomes,
            mask,
            covariates,
            unit_labels,
            period_labels,
        })
    }

    pub fn n_units(&self) -> usize {
        self.outcomes.nrows()
    }

    pub fn n_periods(&self) -> usize {
        self.outcomes.ncols()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    pub fn is_treated(&self, j: usize, t: usize) -> bool {
        self.mask[(j, t)] != 0
    }

    /// Treated cell indices in row-major (unit, period) order. This ordering
    /// is the contract for imputed-draw storage.
    pub fn treated_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for j in 0..self.n_units() {
            for t in 0..self.n_periods() {
                if self.is_treated(j, t) {
                    cells.push((j, t));
                }
            }
        }
        cells
    }

    /// Untreated cell indices in row-major order.
    pub fn untreated_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for j in 0..self.n_units() {
            for t in 0..self.n_periods() {
                if !self.is_treated(j, t) {
                    cells.push((j, t));
                }
            }
        }
        cells
    }

    /// Covariate-effect matrix with entries x_{j,t}ᵀ·beta. Zero when L = 0.
    pub fn covariate_effects(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let mut xi = DMatrix::zeros(self.n_units(), self.n_periods());
        assert_eq!(beta.len(), self.covariates.len(), "beta length must equal L");
        for (l, x) in self.covariates.iter().enumerate() {
            xi += x * beta[l];
        }
        xi
    }

    /// Covariates stacked unit-major into a (J·T)×L design matrix: the row
    /// for cell (j,t) is (j·T + t), so each unit's periods are contiguous.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        let (j_n, t_n, l_n) = (self.n_units(), self.n_periods(), self.n_covariates());
        let mut x = DMatrix::zeros(j_n * t_n, l_n);
        for j in 0..j_n {
            for t in 0..t_n {
                for l in 0..l_n {
                    x[(j * t_n + t, l)] = self.covariates[l][(j, t)];
                }
            }
        }
        x
    }
}

/// Declarative description of which cells are treated.
///
/// Indices are zero-based. Block kinds treat periods `start_period..T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreatmentSpec {
    SingleUnitBlock { unit: usize, start_period: usize },
    MultiUnitBlock { units: Vec<usize>, start_period: usize },
    ArbitraryCells { cells: Vec<(usize, usize)> },
}

/// Builds a J×T treatment mask from a [`TreatmentSpec`].
pub fn build_mask(spec: &TreatmentSpec, n_units: usize, n_periods: usize) -> Result<DMatrix<u8>> {
    let mut mask = DMatrix::<u8>::zeros(n_units, n_periods);
    let mut set_cell = |j: usize, t: usize| -> Result<()> {
        if j >= n_units || t >= n_periods {
            return Err(Error::InvalidTreatmentSpec(format!(
                "cell ({j},{t}) outside {n_units}x{n_periods} grid"
            )));
        }
        if mask[(j, t)] != 0 {
            return Err(Error::InvalidTreatmentSpec(format!(
                "cell ({j},{t}) listed more than once"
            )));
        }
        mask[(j, t)] = 1;
        Ok(())
    };

    match spec {
        TreatmentSpec::SingleUnitBlock { unit, start_period } => {
            if *start_period >= n_periods {
                return Err(Error::InvalidTreatmentSpec(format!(
                    "start period {start_period} leaves no treated periods in T={n_periods}"
                )));
            }
            for t in *start_period..n_periods {
                set_cell(*unit, t)?;
            }
        }
        TreatmentSpec::MultiUnitBlock {
            units,
            start_period,
        } => {
            if units.is_empty() {
                return Err(Error::InvalidTreatmentSpec("empty treated unit set".into()));
            }
            if *start_period >= n_periods {
                return Err(Error::InvalidTreatmentSpec(format!(
                    "start period {start_period} leaves no treated periods in T={n_periods}"
                )));
            }
            for &j in units {
                for t in *start_period..n_periods {
                    set_cell(j, t)?;
                }
            }
        }
        TreatmentSpec::ArbitraryCells { cells } => {
            if cells.is_empty() {
                return Err(Error::InvalidTreatmentSpec("empty treated cell list".into()));
            }
            for &(j, t) in cells {
                set_cell(j, t)?;
            }
        }
    }

    if mask.iter().all(|&m| m == 1) {
        return Err(Error::InvalidTreatmentSpec(
            "every cell treated; no untreated observations remain".into(),
        ));
    }
    Ok(mask)
}

/// Outcome of [`validate`]: a list of invariant violations, empty iff the
/// panel is usable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "panel ok")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

/// Checks every panel invariant and reports all violations.
pub fn validate(data: &PanelData) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (j_n, t_n) = data.outcomes.shape();

    if j_n < 2 {
        report.violations.push(format!("fewer than 2 units (J={j_n})"));
    }
    if t_n < 2 {
        report
            .violations
            .push(format!("fewer than 2 periods (T={t_n})"));
    }
    if data.mask.shape() != (j_n, t_n) {
        report.violations.push(format!(
            "mask shape {:?} differs from outcomes {:?}",
            data.mask.shape(),
            (j_n, t_n)
        ));
        return report; // Cell-level checks below assume matching shapes.
    }
    for (l, x) in data.covariates.iter().enumerate() {
        if x.shape() != (j_n, t_n) {
            report.violations.push(format!(
                "covariate {l} shape {:?} differs from outcomes {:?}",
                x.shape(),
                (j_n, t_n)
            ));
            return report;
        }
    }
    if data.unit_labels.len() != j_n {
        report.violations.push(format!(
            "{} unit labels for J={j_n}",
            data.unit_labels.len()
        ));
    }
    if data.period_labels.len() != t_n {
        report.violations.push(format!(
            "{} period labels for T={t_n}",
            data.period_labels.len()
        ));
    }

    let mut any_untreated = false;
    for j in 0..j_n {
        for t in 0..t_n {
            let m = data.mask[(j, t)];
            if m > 1 {
                report
                    .violations
                    .push(format!("mask not binary at ({j},{t})"));
            }
            if m == 0 {
                any_untreated = true;
            }
            if !data.outcomes[(j, t)].is_finite() {
                report
                    .violations
                    .push(format!("non-finite outcome at ({j},{t})"));
            }
            for (l, x) in data.covariates.iter().enumerate() {
                if !x[(j, t)].is_finite() {
                    report
                        .violations
                        .push(format!("non-finite covariate {l} at ({j},{t})"));
                }
            }
        }
    }
    if !any_untreated {
        report
            .violations
            .push("no untreated observations".to_string());
    }
    report
}

/// Column roles for long-format CSV ingestion: one row per (unit, period).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub unit: String,
    pub period: String,
    pub outcome: String,
    pub treatment: String,
    #[serde(default)]
    pub covariates: Vec<String>,
}

impl CsvSchema {
    pub fn new(unit: &str, period: &str, outcome: &str, treatment: &str) -> Self {
        Self {
            unit: unit.into(),
            period: period.into(),
            outcome: outcome.into(),
            treatment: treatment.into(),
            covariates: Vec::new(),
        }
    }

    pub fn with_covariates(mut self, covariates: &[&str]) -> Self {
        self.covariates = covariates.iter().map(|s| s.to_string()).collect();
        self
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Loads a long-format CSV into a [`PanelData`].
///
/// Units keep their order of first appearance; periods are sorted
/// numerically when every label parses as a number, lexicographically
/// otherwise. The grid must be complete: every (unit, period) pair exactly
/// once. Covariate cells may be left empty for a unit as long as the unit
/// has a single distinct value for that covariate elsewhere; the value is
/// broadcast across periods.
pub fn load_panel_csv<P: AsRef<Path>>(path: P, schema: &CsvSchema) -> Result<PanelData> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let unit_ix = column_index(&headers, &schema.unit)?;
    let period_ix = column_index(&headers, &schema.period)?;
    let outcome_ix = column_index(&headers, &schema.outcome)?;
    let treat_ix = column_index(&headers, &schema.treatment)?;
    let cov_ix: Vec<usize> = schema
        .covariates
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;

    struct Row {
        unit: String,
        period: String,
        outcome: String,
        treatment: String,
        covariates: Vec<String>,
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |ix: usize| record.get(ix).unwrap_or("").trim().to_string();
        rows.push(Row {
            unit: get(unit_ix),
            period: get(period_ix),
            outcome: get(outcome_ix),
            treatment: get(treat_ix),
            covariates: cov_ix.iter().map(|&ix| get(ix)).collect(),
        });
    }

    let mut unit_labels: Vec<String> = Vec::new();
    let mut unit_index: HashMap<String, usize> = HashMap::new();
    for row in &rows {
        if !unit_index.contains_key(&row.unit) {
            unit_index.insert(row.unit.clone(), unit_labels.len());
            unit_labels.push(row.unit.clone());
        }
    }

    let mut period_labels: Vec<String> = rows.iter().map(|r| r.period.clone()).collect();
    period_labels.sort();
    period_labels.dedup();
    let all_numeric = period_labels.iter().all(|p| p.parse::<f64>().is_ok());
    if all_numeric {
        period_labels.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.partial_cmp(&y).unwrap().then_with(|| a.cmp(b))
        });
    }
    let period_index: HashMap<String, usize> = period_labels
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();

    let j_n = unit_labels.len();
    let t_n = period_labels.len();
    if j_n == 0 || t_n == 0 {
        return Err(Error::InvalidPanel("empty CSV".into()));
    }

    let l_n = schema.covariates.len();
    let mut outcomes = DMatrix::<f64>::zeros(j_n, t_n);
    let mut mask = DMatrix::<u8>::zeros(j_n, t_n);
    let mut covariates = vec![DMatrix::<f64>::from_element(j_n, t_n, f64::NAN); l_n];
    let mut seen = DMatrix::<u8>::zeros(j_n, t_n);

    for row in &rows {
        let j = unit_index[&row.unit];
        let t = period_index[&row.period];
        if seen[(j, t)] != 0 {
            return Err(Error::DuplicateCell {
                unit: row.unit.clone(),
                period: row.period.clone(),
            });
        }
        seen[(j, t)] = 1;
        outcomes[(j, t)] = row.outcome.parse::<f64>().map_err(|_| Error::NonNumeric {
            column: schema.outcome.clone(),
            unit: row.unit.clone(),
            period: row.period.clone(),
            value: row.outcome.clone(),
        })?;
        mask[(j, t)] = match row.treatment.as_str() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::NonBinaryTreatment {
                    unit: row.unit.clone(),
                    period: row.period.clone(),
                    value: other.to_string(),
                })
            }
        };
        for (l, raw) in row.covariates.iter().enumerate() {
            if raw.is_empty() {
                continue; // Filled by broadcast below.
            }
            covariates[l][(j, t)] = raw.parse::<f64>().map_err(|_| Error::NonNumeric {
                column: schema.covariates[l].clone(),
                unit: row.unit.clone(),
                period: row.period.clone(),
                value: raw.clone(),
            })?;
        }
    }

    for j in 0..j_n {
        for t in 0..t_n {
            if seen[(j, t)] == 0 {
                return Err(Error::IncompleteGrid {
                    unit: unit_labels[j].clone(),
                    period: period_labels[t].clone(),
                });
            }
        }
    }

    // Broadcast time-invariant covariates into empty cells.
    for (l, cov) in covariates.iter_mut().enumerate() {
        for j in 0..j_n {
            let present: Vec<f64> = (0..t_n)
                .map(|t| cov[(j, t)])
                .filter(|v| !v.is_nan())
                .collect();
            if present.len() == t_n {
                continue;
            }
            let mut distinct = present.clone();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            match distinct.len() {
                1 => {
                    for t in 0..t_n {
                        cov[(j, t)] = distinct[0];
                    }
                }
                0 => {
                    return Err(Error::InvalidPanel(format!(
                        "covariate {} has no value for unit {}",
                        schema.covariates[l], unit_labels[j]
                    )))
                }
                _ => {
                    return Err(Error::InvalidPanel(format!(
                        "covariate {} has gaps but several distinct values for unit {}",
                        schema.covariates[l], unit_labels[j]
                    )))
                }
            }
        }
    }

    PanelData::new(outcomes, mask, covariates, unit_labels, period_labels)
}

/// Writes a panel back to long-format CSV with the given column names.
/// Rows are unit-major, matching the order `load_panel_csv` reconstructs.
pub fn write_panel_csv<P: AsRef<Path>>(
    path: P,
    data: &PanelData,
    schema: &CsvSchema,
) -> Result<()> {
    if schema.covariates.len() != data.n_covariates() {
        return Err(Error::DimensionMismatch(format!(
            "schema names {} covariates, panel has {}",
            schema.covariates.len(),
            data.n_covariates()
        )));
    }
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec![
        schema.unit.clone(),
        schema.period.clone(),
        schema.outcome.clone(),
        schema.treatment.clone(),
    ];
    header.extend(schema.covariates.iter().cloned());
    writer.write_record(&header)?;
    for j in 0..data.n_units() {
        for t in 0..data.n_periods() {
            let mut record = vec![
                data.unit_labels[j].clone(),
                data.period_labels[t].clone(),
                format!("{}", data.outcomes[(j, t)]),
                format!("{}", data.mask[(j, t)]),
            ];
            for x in &data.covariates {
                record.push(format!("{}", x[(j, t)]));
            }
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn basic_schema() -> CsvSchema {
        CsvSchema::new("unit", "period", "outcome", "treated")
    }

    #[test]
    fn loads_fully_untreated_two_by_two() {
        let f = write_temp(
            "unit,period,outcome,treated\n\
             A,1,1.0,0\nA,2,2.0,0\nB,1,3.0,0\nB,2,4.0,0\n",
        );
        let panel = load_panel_csv(f.path(), &basic_schema()).unwrap();
        assert_eq!(panel.n_units(), 2);
        assert_eq!(panel.n_periods(), 2);
        assert_eq!(panel.n_covariates(), 0);
        assert!(panel.mask.iter().all(|&m| m == 0));
        assert_eq!(panel.outcomes[(1, 0)], 3.0);
        assert!(validate(&panel).is_valid());
    }

    #[test]
    fn loads_state_level_layout_with_time_invariant_covariates() {
        // 39 units x 31 periods, last unit treated in periods 20..=31
        // (1-based), seven time-invariant covariates.
        let mut content = String::from("unit,period,outcome,treated,c1,c2,c3,c4,c5,c6,c7\n");
        for j in 0..39 {
            for t in 0..31 {
                let treated = if j == 38 && t >= 19 { 1 } else { 0 };
                content.push_str(&format!(
                    "s{j},{p},{y},{treated},{c},2,3,4,5,6,7\n",
                    p = 1970 + t,
                    y = (j + t) as f64 * 0.5,
                    c = j as f64,
                ));
            }
        }
        let schema = basic_schema().with_covariates(&["c1", "c2", "c3", "c4", "c5", "c6", "c7"]);
        let panel = load_panel_csv(write_temp(&content).path(), &schema).unwrap();
        assert_eq!(panel.n_units(), 39);
        assert_eq!(panel.n_periods(), 31);
        assert_eq!(panel.n_covariates(), 7);
        assert_eq!(panel.treated_cells().len(), 12);
        assert!(panel.is_treated(38, 19) && panel.is_treated(38, 30));
        assert!(!panel.is_treated(38, 18));
        assert!(validate(&panel).is_valid());
    }

    #[test]
    fn missing_cell_reports_incomplete_grid() {
        let f = write_temp(
            "unit,period,outcome,treated\n\
             A,1,1.0,0\nA,2,2.0,0\nA,4,2.5,0\nB,1,3.0,0\nB,2,4.0,0\nB,3,4.5,0\nB,4,5.0,0\n",
        );
        let err = load_panel_csv(f.path(), &basic_schema()).unwrap_err();
        assert_eq!(err.to_string(), "incomplete grid: unit A period 3");
    }

    #[test]
    fn non_binary_treatment_rejected() {
        let f = write_temp(
            "unit,period,outcome,treated\nA,1,1.0,0\nA,2,2.0,2\nB,1,3.0,0\nB,2,4.0,0\n",
        );
        let err = load_panel_csv(f.path(), &basic_schema()).unwrap_err();
        assert!(matches!(err, Error::NonBinaryTreatment { .. }), "{err}");
    }

    #[test]
    fn non_numeric_outcome_rejected() {
        let f = write_temp(
            "unit,period,outcome,treated\nA,1,oops,0\nA,2,2.0,0\nB,1,3.0,0\nB,2,4.0,0\n",
        );
        let err = load_panel_csv(f.path(), &basic_schema()).unwrap_err();
        assert!(matches!(err, Error::NonNumeric { .. }), "{err}");
    }

    #[test]
    fn covariate_gap_broadcasts_single_value() {
        let f = write_temp(
            "unit,period,outcome,treated,x\nA,1,1.0,0,5.5\nA,2,2.0,0,\nB,1,3.0,0,7\nB,2,4.0,0,7\n",
        );
        let schema = basic_schema().with_covariates(&["x"]);
        let panel = load_panel_csv(f.path(), &schema).unwrap();
        assert_eq!(panel.covariates[0][(0, 1)], 5.5);
        assert_eq!(panel.covariates[0][(1, 1)], 7.0);
    }

    #[test]
    fn numeric_periods_sorted_numerically() {
        let f = write_temp(
            "unit,period,outcome,treated\nA,10,1.0,0\nA,2,2.0,0\nB,10,3.0,0\nB,2,4.0,0\n",
        );
        let panel = load_panel_csv(f.path(), &basic_schema()).unwrap();
        assert_eq!(panel.period_labels, vec!["2", "10"]);
        assert_eq!(panel.outcomes[(0, 0)], 2.0);
    }

    #[test]
    fn build_mask_single_unit_block() {
        // Unit 5, start period 11, (J,T)=(5,30) in 1-based terms.
        let spec = TreatmentSpec::SingleUnitBlock {
            unit: 4,
            start_period: 10,
        };
        let mask = build_mask(&spec, 5, 30).unwrap();
        let ones: usize = mask.iter().map(|&m| m as usize).sum();
        assert_eq!(ones, 20);
        for t in 0..30 {
            assert_eq!(mask[(4, t)], u8::from(t >= 10));
        }
        for j in 0..4 {
            assert!((0..30).all(|t| mask[(j, t)] == 0));
        }
    }

    #[test]
    fn build_mask_multi_unit_block() {
        // Units {3,4}, start 4, (J,T)=(4,6) in 1-based terms: 6 treated cells.
        let spec = TreatmentSpec::MultiUnitBlock {
            units: vec![2, 3],
            start_period: 3,
        };
        let mask = build_mask(&spec, 4, 6).unwrap();
        let ones: usize = mask.iter().map(|&m| m as usize).sum();
        assert_eq!(ones, 6);
        for j in [2usize, 3] {
            for t in 3..6 {
                assert_eq!(mask[(j, t)], 1);
            }
        }
    }

    #[test]
    fn build_mask_rejects_empty_and_saturated_specs() {
        let err = build_mask(&TreatmentSpec::ArbitraryCells { cells: vec![] }, 3, 3).unwrap_err();
        assert!(matches!(err, Error::InvalidTreatmentSpec(_)));

        let all: Vec<(usize, usize)> = (0..2)
            .flat_map(|j| (0..2).map(move |t| (j, t)))
            .collect();
        let err = build_mask(&TreatmentSpec::ArbitraryCells { cells: all }, 2, 2).unwrap_err();
        assert!(matches!(err, Error::InvalidTreatmentSpec(_)));

        let err = build_mask(
            &TreatmentSpec::SingleUnitBlock {
                unit: 9,
                start_period: 0,
            },
            3,
            4,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidTreatmentSpec(_)));
    }

    #[test]
    fn validate_reports_mask_and_coverage_problems() {
        let outcomes = DMatrix::from_element(2, 2, 1.0);
        let mut mask = DMatrix::<u8>::zeros(2, 2);
        mask[(0, 1)] = 2;
        let panel = PanelData::new(
            outcomes.clone(),
            mask,
            vec![],
            vec!["a".into(), "b".into()],
            vec!["1".into(), "2".into()],
        )
        .unwrap();
        let report = validate(&panel);
        assert!(report
            .violations
            .iter()
            .any(|v| v == "mask not binary at (0,1)"));

        let panel = PanelData::new(
            outcomes,
            DMatrix::from_element(2, 2, 1u8),
            vec![],
            vec!["a".into(), "b".into()],
            vec!["1".into(), "2".into()],
        )
        .unwrap();
        let report = validate(&panel);
        assert!(report
            .violations
            .iter()
            .any(|v| v == "no untreated observations"));
    }

    #[test]
    fn csv_round_trip_preserves_numbers() {
        let mut content = String::from("unit,period,outcome,treated,x\n");
        for j in 0..3 {
            for t in 0..4 {
                content.push_str(&format!(
                    "u{j},{t},{},{},{}\n",
                    0.1 * (j * 4 + t) as f64 + 0.123456789,
                    u8::from(j == 2 && t >= 2),
                    j as f64 * 1.5,
                ));
            }
        }
        let schema = basic_schema().with_covariates(&["x"]);
        let panel = load_panel_csv(write_temp(&content).path(), &schema).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_panel_csv(out.path(), &panel, &schema).unwrap();
        let reloaded = load_panel_csv(out.path(), &schema).unwrap();
        assert_eq!(panel, reloaded);
    }
}
