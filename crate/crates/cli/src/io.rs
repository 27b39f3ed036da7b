//! Delimited text tables with a header row, and group files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pcrrr::{GroupPartition, Matrix};

use crate::error::{CliError, CliResult};

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub values: Matrix,
}

fn delimiter_for(path: &Path, first_line: &str) -> u8 {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("tsv") || ext.eq_ignore_ascii_case("tab") {
        return b'\t';
    }
    if first_line.contains('\t') && !first_line.contains(',') {
        b'\t'
    } else {
        b','
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn reader(path: &Path, text: &str) -> csv::Reader<std::io::Cursor<Vec<u8>>> {
    let first = text.lines().next().unwrap_or("");
    csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path, first))
        .trim(csv::Trim::All)
        .from_reader(std::io::Cursor::new(text.as_bytes().to_vec()))
}

/// Reads a numeric table. Errors name the file line and column.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = read_text(path)?;
    let mut rdr = reader(path, &text);
    let at = |line: u64| format!("{}: line {line}", path.display());
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", at(1))))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::Data(format!("{}: missing header row", path.display())));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("{}: {e}", at(line)))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(CliError::Data(format!(
                "{}: expected {} fields, found {}",
                at(line),
                names.len(),
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Data(format!(
                    "{}, column {} ({}): cannot parse {cell:?} as a number",
                    at(line),
                    j + 1,
                    names[j]
                ))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Table {
        values: Matrix::from_row_slice(rows, names.len(), &data),
        names,
    })
}

/// Writes a table with a header; values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_table(path: &Path, names: &[String], values: &Matrix) -> CliResult<()> {
    let mut out = Vec::new();
    write_table_to(&mut out, names, values)?;
    std::fs::write(path, out).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_table_to(out: &mut impl Write, names: &[String], values: &Matrix) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(names).map_err(io)?;
    for row in values.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))
}

/// Group file with columns (predictor name, group label).
///
/// Labels are numbered in order of first appearance; every predictor of
/// `names` must be listed exactly once.
pub fn read_groups(path: &Path, names: &[String]) -> CliResult<(GroupPartition, Vec<String>)> {
    let text = read_text(path)?;
    let mut rdr = reader(path, &text);
    rdr.headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut labels: Vec<String> = Vec::new();
    let mut assignment: Vec<Option<usize>> = vec![None; names.len()];
    let mut listed = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = format!("{}: line {line}", path.display());
        if record.len() != 2 {
            return Err(CliError::Data(format!("{at}: expected 2 fields (predictor, group)")));
        }
        let &i = index
            .get(&record[0])
            .ok_or_else(|| CliError::Data(format!("{at}: unknown predictor {:?}", &record[0])))?;
        if assignment[i].is_some() {
            return Err(CliError::Data(format!("{at}: predictor {:?} listed twice", &record[0])));
        }
        let label = record[1].to_string();
        let g = match labels.iter().position(|l| *l == label) {
            Some(g) => g,
            None => {
                labels.push(label);
                labels.len() - 1
            }
        };
        assignment[i] = Some(g);
        listed += 1;
    }
    if listed != names.len() {
        let missing: Vec<&str> = names
            .iter()
            .zip(&assignment)
            .filter(|(_, a)| a.is_none())
            .map(|(n, _)| n.as_str())
            .collect();
        return Err(pcrrr::Error::BadPartition(format!(
            "{}: {listed} assignments for {} predictors (missing: {})",
            path.display(),
            names.len(),
            missing.join(", ")
        ))
        .into());
    }
    let assignment: Vec<usize> = assignment.into_iter().map(|a| a.expect("checked above")).collect();
    Ok((GroupPartition::new(assignment)?, labels))
}
