//! CSV ingestion and emission for datasets and arm samples.
//!
//! Dataset files carry the header `y,z,d,x1..xk` (the selection flag is
//! derived: a record is selected iff d is A or B). Arm-sample files carry
//! `arm,y`. Lines starting with `#` are comments; floats are written with 17
//! significant digits so a round trip through text is exact.

use std::path::Path;
use std::str::FromStr;

use ivsens::estimator::ArmSample;
use ivsens::identified::{Dataset, Record};
use ivsens::{Arm, Treatment};

use crate::error::{io_err, CliError, Result};
use crate::output::{fmt17, write_atomic};

/// Record count and (z, d) cell tabulation reported after a dataset load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub n_records: usize,
    pub n_covariates: usize,
    /// Counts ordered (AA, AB, AC, BA, BB, BC), instrument first.
    pub cells: [usize; 6],
}

impl std::fmt::Display for LoadReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} records, {} covariates; cells (Z=A): A={} B={} C={}; (Z=B): A={} B={} C={}",
            self.n_records,
            self.n_covariates,
            self.cells[0],
            self.cells[1],
            self.cells[2],
            self.cells[3],
            self.cells[4],
            self.cells[5],
        )
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(&format!("opening {}", path.display()), e))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_float(field: &str, what: &str, line: u64) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| CliError::Parse(format!("line {line}: {what} {field:?} is not a number")))?;
    if !value.is_finite() {
        return Err(CliError::Parse(format!(
            "line {line}: {what} {field:?} is not finite"
        )));
    }
    Ok(value)
}

/// Loads a full observational dataset from `y,z,d,x1..xk` CSV.
pub fn load_dataset(path: &Path) -> Result<(Dataset, LoadReport)> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| io_err(&format!("reading header of {}", path.display()), e))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 3 || names[0] != "y" || names[1] != "z" || names[2] != "d" {
        return Err(CliError::Parse(format!(
            "dataset header must start with y,z,d (got {:?})",
            names.join(",")
        )));
    }
    for (k, name) in names[3..].iter().enumerate() {
        let expected = format!("x{}", k + 1);
        if *name != expected {
            return Err(CliError::Parse(format!(
                "covariate column {} must be named {expected}, got {name:?}",
                k + 4
            )));
        }
    }
    let n_covariates = names.len() - 3;

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Parse(format!("malformed row: {e}")))?;
        let line = line_of(&row);
        if row.len() != 3 + n_covariates {
            return Err(CliError::Parse(format!(
                "line {line}: expected {} fields, got {}",
                3 + n_covariates,
                row.len()
            )));
        }
        let y = parse_float(&row[0], "outcome", line)?;
        let z = Arm::from_str(&row[1]).map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
        let d = Treatment::from_str(&row[2])
            .map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
        let mut x = Vec::with_capacity(n_covariates);
        for k in 0..n_covariates {
            x.push(parse_float(
                &row[3 + k],
                &format!("covariate x{}", k + 1),
                line,
            )?);
        }
        records.push(Record { y, z, d, x });
    }
    let dataset = Dataset::new(records)?;
    let report = LoadReport {
        n_records: dataset.len(),
        n_covariates: dataset.n_covariates(),
        cells: dataset.cell_counts(),
    };
    Ok((dataset, report))
}

/// Writes a dataset in the same format `load_dataset` reads.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut out = String::from("y,z,d");
    for k in 0..dataset.n_covariates() {
        out.push_str(&format!(",x{}", k + 1));
    }
    out.push('\n');
    for rec in dataset.records() {
        out.push_str(&fmt17(rec.y));
        out.push_str(&format!(",{},{}", rec.z, rec.d));
        for v in &rec.x {
            out.push(',');
            out.push_str(&fmt17(*v));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Loads the two matched-cell outcome vectors from `arm,y` CSV.
pub fn load_arm_sample(path: &Path) -> Result<ArmSample> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| io_err(&format!("reading header of {}", path.display()), e))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["arm", "y"] {
        return Err(CliError::Parse(format!(
            "arm-sample header must be arm,y (got {:?})",
            names.join(",")
        )));
    }
    let mut y_a = Vec::new();
    let mut y_b = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Parse(format!("malformed row: {e}")))?;
        let line = line_of(&row);
        if row.len() != 2 {
            return Err(CliError::Parse(format!(
                "line {line}: expected 2 fields, got {}",
                row.len()
            )));
        }
        let arm =
            Arm::from_str(&row[0]).map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
        let y = parse_float(&row[1], "outcome", line)?;
        match arm {
            Arm::A => y_a.push(y),
            Arm::B => y_b.push(y),
        }
    }
    Ok(ArmSample::new(y_a, y_b)?)
}

/// Writes an arm sample in the same format `load_arm_sample` reads.
pub fn write_arm_sample(path: &Path, sample: &ArmSample) -> Result<()> {
    let mut out = String::from("arm,y\n");
    for &y in sample.arm_a() {
        out.push_str(&format!("A,{}\n", fmt17(y)));
    }
    for &y in sample.arm_b() {
        out.push_str(&format!("B,{}\n", fmt17(y)));
    }
    write_atomic(path, out.as_bytes())
}
