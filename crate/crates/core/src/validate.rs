//! Audits assignment CSV files (`cluster,vehicle,subchannel,subframe`).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentRow {
    pub line: usize,
    pub cluster: usize,
    pub vehicle: usize,
    pub subchannel: usize,
    pub subframe: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileViolation {
    /// Same vehicle listed twice in a cluster.
    DuplicateVehicle {
        cluster: usize,
        vehicle: usize,
        lines: (usize, usize),
    },
    /// Two vehicles of one cluster transmit in the same subframe.
    SharedSubframe {
        cluster: usize,
        subframe: usize,
        vehicles: (usize, usize),
    },
    /// The subframe column disagrees with `subchannel / K`.
    WrongSubframe {
        line: usize,
        subchannel: usize,
        listed: usize,
        expected: usize,
    },
}

impl fmt::Display for FileViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileViolation::DuplicateVehicle {
                cluster,
                vehicle,
                lines,
            } => write!(
                f,
                "cluster {cluster}: vehicle {vehicle} listed on lines {} and {}",
                lines.0, lines.1
            ),
            FileViolation::SharedSubframe {
                cluster,
                subframe,
                vehicles,
            } => write!(
                f,
                "cluster {cluster}: vehicles {} and {} share subframe {subframe}",
                vehicles.0, vehicles.1
            ),
            FileViolation::WrongSubframe {
                line,
                subchannel,
                listed,
                expected,
            } => write!(
                f,
                "line {line}: subchannel {subchannel} is in subframe {expected}, file says {listed}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub rows: usize,
    pub violations: Vec<FileViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok, {} rows, 0 violations", self.rows);
        }
        writeln!(
            f,
            "{} violation(s) in {} rows",
            self.violations.len(),
            self.rows
        )?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

pub fn read_assignment_csv<R: Read>(reader: R) -> Result<Vec<AssignmentRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    const EXPECTED: [&str; 4] = ["cluster", "vehicle", "subchannel", "subframe"];
    if headers.iter().ne(EXPECTED) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("header must be `{}`", EXPECTED.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != EXPECTED.len() {
            return Err(Error::Parse {
                line,
                column: record.len().min(EXPECTED.len()) + 1,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let field = |i: usize| -> Result<usize> {
            record[i].parse().map_err(|_| Error::Parse {
                line,
                column: i + 1,
                message: format!("{:?} is not a non-negative integer", &record[i]),
            })
        };
        rows.push(AssignmentRow {
            line,
            cluster: field(0)?,
            vehicle: field(1)?,
            subchannel: field(2)?,
            subframe: field(3)?,
        });
    }
    Ok(rows)
}

/// Checks vehicle uniqueness and subframe orthogonality per cluster. With
/// `k`, the subframe column is also cross-checked against `subchannel / k`
/// and orthogonality uses the recomputed subframe.
pub fn check_rows(rows: &[AssignmentRow], k: Option<usize>) -> ValidationReport {
    let mut violations = Vec::new();
    let mut vehicles: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut subframes: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for row in rows {
        let subframe = match k {
            Some(k) => {
                let expected = row.subchannel / k;
                if expected != row.subframe {
                    violations.push(FileViolation::WrongSubframe {
                        line: row.line,
                        subchannel: row.subchannel,
                        listed: row.subframe,
                        expected,
                    });
                }
                expected
            }
            None => row.subframe,
        };
        if let Some(&first) = vehicles.get(&(row.cluster, row.vehicle)) {
            violations.push(FileViolation::DuplicateVehicle {
                cluster: row.cluster,
                vehicle: row.vehicle,
                lines: (first, row.line),
            });
            continue;
        }
        vehicles.insert((row.cluster, row.vehicle), row.line);
        match subframes.get(&(row.cluster, subframe)) {
            Some(&other) => violations.push(FileViolation::SharedSubframe {
                cluster: row.cluster,
                subframe,
                vehicles: (other, row.vehicle),
            }),
            None => {
                subframes.insert((row.cluster, subframe), row.vehicle);
            }
        }
    }
    ValidationReport {
        rows: rows.len(),
        violations,
    }
}

pub fn validate_assignment_file(path: &Path, k: Option<usize>) -> Result<ValidationReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    validate_assignment_reader(file, k)
}

pub fn validate_assignment_reader<R: Read>(
    reader: R,
    k: Option<usize>,
) -> Result<ValidationReport> {
    if k == Some(0) {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    Ok(check_rows(&read_assignment_csv(reader)?, k))
}
