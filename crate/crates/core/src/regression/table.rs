use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::doe::{Design, DesignPoint};
use crate::{Error, Result};

/// Name of the response column in experiment CSV files.
pub const RESPONSE_COLUMN: &str = "mape";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// Standard-order label; `0` marks the baseline.
    pub std_order: u32,
    pub coded: Vec<f64>,
    pub response: f64,
}

/// Measured responses at coded design points.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    factor_names: Vec<String>,
    rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn new(factor_names: Vec<String>, rows: Vec<ExperimentRow>) -> Result<Self> {
        for r in &rows {
            if r.coded.len() != factor_names.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} coded values for {} factors",
                    r.std_order,
                    r.coded.len(),
                    factor_names.len()
                )));
            }
            if !r.response.is_finite() || r.coded.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "row {} contains a non-finite value",
                    r.std_order
                )));
            }
        }
        Ok(ExperimentTable { factor_names, rows })
    }

    pub fn from_design(factor_names: Vec<String>, design: &Design, responses: &[f64]) -> Result<Self> {
        if responses.len() != design.len() {
            return Err(Error::InvalidArgument(format!(
                "{} responses for {} design points",
                responses.len(),
                design.len()
            )));
        }
        let rows = design
            .iter()
            .zip(responses)
            .map(|((label, p), &response)| ExperimentRow {
                std_order: label,
                coded: p.coords().to_vec(),
                response,
            })
            .collect();
        ExperimentTable::new(factor_names, rows)
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn rows(&self) -> &[ExperimentRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn responses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.response).collect()
    }

    /// `(point, response)` pairs.
    pub fn samples(&self) -> Vec<(DesignPoint, f64)> {
        self.rows
            .iter()
            .map(|r| (DesignPoint::unchecked(r.coded.clone()), r.response))
            .collect()
    }

    /// The rows that are not the center point.
    pub fn without_baseline(&self) -> ExperimentTable {
        ExperimentTable {
            factor_names: self.factor_names.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.coded.iter().any(|&c| c != 0.0))
                .cloned()
                .collect(),
        }
    }

    /// Rows of `self` followed by rows of `other`; factor names must agree.
    pub fn concat(&self, other: &ExperimentTable) -> Result<ExperimentTable> {
        if self.factor_names != other.factor_names {
            return Err(Error::InvalidArgument(
                "cannot combine tables with different factors".into(),
            ));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(ExperimentTable { factor_names: self.factor_names.clone(), rows })
    }

    pub fn push(&mut self, row: ExperimentRow) -> Result<()> {
        let mut t = ExperimentTable::new(self.factor_names.clone(), vec![row])?;
        self.rows.append(&mut t.rows);
        Ok(())
    }

    /// Response recorded at exactly `point`, if any (first match).
    pub fn lookup(&self, point: &[f64]) -> Option<f64> {
        self.rows.iter().find(|r| r.coded == point).map(|r| r.response)
    }

    /// Reads `std_order,<factors…>,<response>` CSV. The last column is the
    /// response regardless of its name.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "std_order" {
            return Err(Error::Csv(
                "expected header `std_order,<factor names…>,<response>`".into(),
            ));
        }
        let factor_names: Vec<String> =
            headers.iter().skip(1).take(headers.len() - 2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| {
                    Error::Csv(format!("record {}: column `{}`: {e}", line + 1, &headers[i]))
                })
            };
            let std_order = record[0].parse::<u32>().map_err(|e| {
                Error::Csv(format!("record {}: std_order: {e}", line + 1))
            })?;
            let coded = (1..headers.len() - 1).map(field).collect::<Result<Vec<_>>>()?;
            let response = field(headers.len() - 1)?;
            rows.push(ExperimentRow { std_order, coded, response });
        }
        ExperimentTable::new(factor_names, rows)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::read_csv(text.as_bytes())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("std_order");
        for n in &self.factor_names {
            write!(out, ",{n}").unwrap();
        }
        writeln!(out, ",{RESPONSE_COLUMN}").unwrap();
        for r in &self.rows {
            write!(out, "{}", r.std_order).unwrap();
            for c in &r.coded {
                write!(out, ",{c}").unwrap();
            }
            writeln!(out, ",{}", r.response).unwrap();
        }
        out
    }
}
