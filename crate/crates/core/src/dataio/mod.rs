//! Expression and clinical data: validated in-memory cohorts and their CSV form.
//!
//! The expression file is comma-delimited with patient ids across the header
//! row and gene ids down the first column:
//!
//! ```text
//! gene_id,P001,P002
//! G01,0.53,-1.2
//! ```
//!
//! The clinical file has the header `patient_id,survival_time_days,censored`
//! with `censored` in `{0, 1}` (1 = alive at last follow-up). Cohort columns
//! follow the clinical file's row order.

mod synthetic;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use synthetic::{generate_synthetic_cohort, SpectralEffect, SyntheticCohort, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalRecord {
    pub patient_id: String,
    /// Days from diagnosis to death or last follow-up.
    pub survival_time: f64,
    /// `true` if the patient was alive at last follow-up.
    pub censored: bool,
}

/// Genes × patients expression matrix with aligned clinical records.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    expression: DMatrix<f64>,
    gene_ids: Vec<String>,
    patients: Vec<ClinicalRecord>,
}

impl Cohort {
    pub fn new(expression: DMatrix<f64>, gene_ids: Vec<String>, patients: Vec<ClinicalRecord>) -> Result<Cohort> {
        let (m, n) = expression.shape();
        if m < 1 || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a cohort needs at least 1 gene and 2 patients, got {m} x {n}"
            )));
        }
        if gene_ids.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: gene_ids.len() });
        }
        if patients.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: patients.len() });
        }
        check_unique("gene", gene_ids.iter().map(String::as_str))?;
        check_unique("patient", patients.iter().map(|p| p.patient_id.as_str()))?;
        for p in &patients {
            if !(p.survival_time.is_finite() && p.survival_time >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "patient {}: survival time must be a non-negative number, got {}",
                    p.patient_id, p.survival_time
                )));
            }
        }
        if let Some(idx) = expression.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % m, idx / m);
            return Err(Error::InvalidArgument(format!(
                "non-finite expression value for gene {} / patient {}",
                gene_ids[row], patients[col].patient_id
            )));
        }
        Ok(Cohort { expression, gene_ids, patients })
    }

    pub fn expression(&self) -> &DMatrix<f64> {
        &self.expression
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn patients(&self) -> &[ClinicalRecord] {
        &self.patients
    }

    pub fn n_genes(&self) -> usize {
        self.expression.nrows()
    }

    pub fn n_patients(&self) -> usize {
        self.expression.ncols()
    }

    pub fn patient_ids(&self) -> Vec<String> {
        self.patients.iter().map(|p| p.patient_id.clone()).collect()
    }

    /// Cohort restricted to the given patient columns, in the given order.
    pub fn select_patients(&self, columns: &[usize]) -> Result<Cohort> {
        let expression = self.expression.select_columns(columns);
        let patients = columns.iter().map(|&j| self.patients[j].clone()).collect();
        Cohort::new(expression, self.gene_ids.clone(), patients)
    }
}

fn check_unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            return Err(Error::DuplicateId { kind, id: id.to_string(), location: format!("position {}", i + 1) });
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse { path: path.to_path_buf(), row, column: 0, message: e.to_string() }
}

/// Reads an expression CSV. Errors cite 1-based file rows and columns, the
/// header being row 1.
pub fn read_expression(path: &Path) -> Result<(Vec<String>, Vec<String>, DMatrix<f64>)> {
    let mut reader = open(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(path, e))?,
        None => {
            return Err(Error::Parse { path: path.to_path_buf(), row: 1, column: 1, message: "empty file".into() })
        }
    };
    let patient_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if patient_ids.is_empty() {
        return Err(Error::Parse { path: path.to_path_buf(), row: 1, column: 2, message: "no patient columns".into() });
    }
    let mut seen = HashMap::new();
    for (j, id) in patient_ids.iter().enumerate() {
        if let Some(prev) = seen.insert(id.as_str(), j) {
            return Err(Error::DuplicateId {
                kind: "patient",
                id: id.clone(),
                location: format!("{}: row 1, columns {} and {}", path.display(), prev + 2, j + 2),
            });
        }
    }

    let n = patient_ids.len();
    let mut gene_ids = Vec::new();
    let mut gene_rows: HashMap<String, usize> = HashMap::new();
    let mut values = Vec::new();
    for (i, record) in records.enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != n + 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: record.len().min(n + 1),
                message: format!("expected {} fields, found {}", n + 1, record.len()),
            });
        }
        let gene = record[0].to_string();
        if let Some(prev) = gene_rows.insert(gene.clone(), row) {
            return Err(Error::DuplicateId {
                kind: "gene",
                id: gene,
                location: format!("{}: rows {prev} and {row}, column 1", path.display()),
            });
        }
        for (j, cell) in record.iter().enumerate().skip(1) {
            let parsed = cell.parse::<f64>().ok().filter(|v| v.is_finite());
            match parsed {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row,
                        column: j + 1,
                        message: format!("expected a finite number, found {cell:?}"),
                    })
                }
            }
        }
        gene_ids.push(gene);
    }
    if gene_ids.is_empty() {
        return Err(Error::Parse { path: path.to_path_buf(), row: 2, column: 1, message: "no gene rows".into() });
    }
    let expression = DMatrix::from_row_slice(gene_ids.len(), n, &values);
    Ok((gene_ids, patient_ids, expression))
}

pub fn read_clinical(path: &Path) -> Result<Vec<ClinicalRecord>> {
    let mut reader = open(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(path, e))?,
        None => {
            return Err(Error::Parse { path: path.to_path_buf(), row: 1, column: 1, message: "empty file".into() })
        }
    };
    let expected = ["patient_id", "survival_time_days", "censored"];
    for (j, name) in expected.iter().enumerate() {
        if header.get(j) != Some(*name) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: 1,
                column: j + 1,
                message: format!("expected header column {name:?}, found {:?}", header.get(j).unwrap_or("")),
            });
        }
    }

    let mut out = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, record) in records.enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: record.len().min(3),
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let patient_id = record[0].to_string();
        if let Some(prev) = seen.insert(patient_id.clone(), row) {
            return Err(Error::DuplicateId {
                kind: "patient",
                id: patient_id,
                location: format!("{}: rows {prev} and {row}, column 1", path.display()),
            });
        }
        let survival_time = record[1]
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: 2,
                message: format!("expected a non-negative survival time, found {:?}", &record[1]),
            })?;
        let censored = match &record[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: 3,
                    message: format!("censored must be 0 or 1, found {other:?}"),
                })
            }
        };
        out.push(ClinicalRecord { patient_id, survival_time, censored });
    }
    Ok(out)
}

/// Loads and aligns both files into a validated cohort.
pub fn load_cohort(expression_path: &Path, clinical_path: &Path) -> Result<Cohort> {
    let (gene_ids, patient_ids, matrix) = read_expression(expression_path)?;
    let clinical = read_clinical(clinical_path)?;

    let column_of: HashMap<&str, usize> = patient_ids.iter().enumerate().map(|(j, id)| (id.as_str(), j)).collect();
    let mut columns = Vec::with_capacity(clinical.len());
    for record in &clinical {
        match column_of.get(record.patient_id.as_str()) {
            Some(&j) => columns.push(j),
            None => {
                return Err(Error::UnmatchedPatient {
                    patient_id: record.patient_id.clone(),
                    where_missing: "listed in the clinical file but absent from the expression header",
                })
            }
        }
    }
    let clinical_ids: HashSet<&str> = clinical.iter().map(|r| r.patient_id.as_str()).collect();
    if let Some(extra) = patient_ids.iter().find(|id| !clinical_ids.contains(id.as_str())) {
        return Err(Error::UnmatchedPatient {
            patient_id: extra.clone(),
            where_missing: "in the expression header but has no clinical record",
        });
    }
    Cohort::new(matrix.select_columns(&columns), gene_ids, clinical)
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) }
}

fn flushed<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes the expression CSV layout to any writer; `label` names it in errors.
pub fn write_expression_to<W: Write>(out: W, label: &Path, gene_ids: &[String], patient_ids: &[String], matrix: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["gene_id".to_string()];
    header.extend(patient_ids.iter().cloned());
    w.write_record(&header).map_err(write_err(label))?;
    for (i, gene) in gene_ids.iter().enumerate() {
        let mut row = vec![gene.clone()];
        // Display for f64 prints the shortest representation that round-trips.
        row.extend(matrix.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(write_err(label))?;
    }
    flushed(w, label)
}

pub fn write_clinical_to<W: Write>(out: W, label: &Path, records: &[ClinicalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["patient_id", "survival_time_days", "censored"]).map_err(write_err(label))?;
    for r in records {
        w.write_record([r.patient_id.clone(), r.survival_time.to_string(), u8::from(r.censored).to_string()])
            .map_err(write_err(label))?;
    }
    flushed(w, label)
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_expression(path: &Path, gene_ids: &[String], patient_ids: &[String], matrix: &DMatrix<f64>) -> Result<()> {
    write_expression_to(create(path)?, path, gene_ids, patient_ids, matrix)
}

pub fn write_clinical(path: &Path, records: &[ClinicalRecord]) -> Result<()> {
    write_clinical_to(create(path)?, path, records)
}

pub fn write_cohort(cohort: &Cohort, expression_path: &Path, clinical_path: &Path) -> Result<()> {
    write_expression(expression_path, &cohort.gene_ids, &cohort.patient_ids(), &cohort.expression)?;
    write_clinical(clinical_path, &cohort.patients)
}
