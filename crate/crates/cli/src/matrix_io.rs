//! Plain-text matrices: a `rows cols q` header followed by the entries in
//! row-major order, whitespace separated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rpm3_core::{MatrixFq, PrimeField};

use crate::error::{CliError, Result};

pub fn parse_matrix(text: &str, field: PrimeField) -> Result<MatrixFq> {
    let mut tokens = text.split_whitespace().map(|t| {
        t.parse::<u64>()
            .map_err(|_| CliError::Config(format!("matrix entry {t:?} is not a non-negative integer")))
    });
    let mut header = || {
        tokens
            .next()
            .unwrap_or_else(|| Err(CliError::Config("truncated matrix header".into())))
    };
    let (rows, cols, q) = (header()? as usize, header()? as usize, header()?);
    if q != field.modulus() {
        return Err(CliError::Config(format!(
            "matrix is over GF({q}) but the scenario uses GF({})",
            field.modulus()
        )));
    }
    let data = tokens.collect::<Result<Vec<u64>>>()?;
    if data.len() != rows * cols {
        return Err(CliError::Config(format!(
            "matrix header says {rows}x{cols} but {} entries follow",
            data.len()
        )));
    }
    if let Some(v) = data.iter().find(|&&v| v >= q) {
        return Err(CliError::Config(format!("matrix entry {v} is not reduced mod {q}")));
    }
    Ok(MatrixFq::from_vec(field, rows, cols, data)?)
}

pub fn format_matrix(mat: &MatrixFq) -> String {
    let mut out = format!("{} {} {}\n", mat.rows(), mat.cols(), mat.field().modulus());
    for r in 0..mat.rows() {
        let row: Vec<String> = (0..mat.cols()).map(|c| mat.get(r, c).to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_matrix(path: &Path, field: PrimeField) -> Result<MatrixFq> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text, field).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_matrix(path: &Path, mat: &MatrixFq) -> Result<()> {
    fs::write(path, format_matrix(mat))?;
    Ok(())
}
