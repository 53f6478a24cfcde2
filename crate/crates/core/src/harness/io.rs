//! Matrix, certificate and event files.
//!
//! Matrices are `{"dim": M, "re": [[..]], "im": [[..]]}` row-major, every
//! entry printed with 17 significant digits so that writing a parsed file
//! reproduces it byte for byte.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::approx::Certificate;
use crate::error::{Error, Result};
use crate::events::EventPartition;
use crate::linalg::{CMatrix, Hermitian, Tolerances, C64};
use crate::spectral::DensityMatrix;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    basis: MatrixFile,
    cells: Vec<Vec<usize>>,
}

fn write_rows(out: &mut String, rows: impl Iterator<Item = Vec<f64>>, indent: &str) {
    out.push('[');
    for (i, row) in rows.enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(indent);
        out.push_str("  [");
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            write!(out, "{v:.16e}").expect("writing to a String");
        }
        out.push(']');
    }
    out.push('\n');
    out.push_str(indent);
    out.push(']');
}

fn matrix_body(m: &CMatrix, indent: &str) -> String {
    let (re, im) = m.to_parts();
    let mut out = String::from("{\n");
    writeln!(out, "{indent}  \"dim\": {},", m.dim()).expect("writing to a String");
    write!(out, "{indent}  \"re\": ").expect("writing to a String");
    write_rows(&mut out, re.into_iter(), &format!("{indent}  "));
    write!(out, ",\n{indent}  \"im\": ").expect("writing to a String");
    write_rows(&mut out, im.into_iter(), &format!("{indent}  "));
    write!(out, "\n{indent}}}").expect("writing to a String");
    out
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    let mut s = matrix_body(m, "");
    s.push('\n');
    s
}

fn json_error(what: &str, e: serde_json::Error) -> Error {
    Error::Format(format!("{what}: line {}, column {}: {e}", e.line(), e.column()))
}

fn build_matrix(f: MatrixFile, what: &str) -> Result<CMatrix> {
    let dim = f.dim;
    if dim == 0 {
        return Err(Error::Format(format!("{what}: field \"dim\" must be positive")));
    }
    for (name, rows) in [("re", &f.re), ("im", &f.im)] {
        if rows.len() != dim {
            return Err(Error::Format(format!(
                "{what}: field \"{name}\" has {} rows, expected {dim}",
                rows.len()
            )));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::Format(format!(
                "{what}: field \"{name}\" row {i} has {} entries, expected {dim}",
                r.len()
            )));
        }
    }
    Ok(CMatrix::from_fn(dim, |i, j| C64::new(f.re[i][j], f.im[i][j])))
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let f: MatrixFile = serde_json::from_str(text).map_err(|e| json_error("matrix", e))?;
    build_matrix(f, "matrix")
}

pub fn parse_hermitian(text: &str, tol: &Tolerances) -> Result<Hermitian> {
    let m = parse_matrix(text)?;
    let dim = m.dim();
    Hermitian::new(m, tol.herm(dim))
}

pub fn parse_density(text: &str, tol: &Tolerances) -> Result<DensityMatrix> {
    DensityMatrix::new(parse_hermitian(text, tol)?)
}

pub fn certificate_to_json(cert: &Certificate) -> String {
    let mut s = serde_json::to_string_pretty(cert).expect("certificate serializes");
    s.push('\n');
    s
}

pub fn parse_certificate(text: &str) -> Result<Certificate> {
    serde_json::from_str(text).map_err(|e| json_error("certificate", e))
}

/// `{"basis": <matrix>, "cells": [[column indices], ..]}`.
pub fn event_to_json(basis: &CMatrix, cells: &[Vec<usize>]) -> String {
    let cells = serde_json::to_string(cells).expect("index lists serialize");
    format!("{{\n  \"basis\": {},\n  \"cells\": {cells}\n}}\n", matrix_body(basis, "  "))
}

pub fn parse_event(text: &str) -> Result<EventPartition> {
    let f: EventFile = serde_json::from_str(text).map_err(|e| json_error("event", e))?;
    let basis = build_matrix(f.basis, "event basis")?;
    EventPartition::from_basis(&basis, &f.cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_byte_identical() {
        let m = CMatrix::from_fn(3, |i, j| C64::new(0.1 * i as f64 - 1.0 / 3.0, (j as f64).sqrt() - 0.0));
        let first = matrix_to_json(&m);
        let parsed = parse_matrix(&first).unwrap();
        assert_eq!(parsed, m);
        assert_eq!(matrix_to_json(&parsed), first);
        assert!(first.contains("-3.3333333333333331e-1"));
    }

    #[test]
    fn malformed_matrix_reports_field() {
        let err = parse_matrix(r#"{"dim": 2, "re": [[1, 0], [0]], "im": [[0, 0], [0, 0]]}"#).unwrap_err();
        assert!(err.to_string().contains("\"re\" row 1"), "{err}");
        let err = parse_matrix("{\"dim\": 2,\n \"re\": oops}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_matrix(r#"{"dim": 1, "re": [[1]], "im": [[0]], "extra": 1}"#).is_err());
    }

    #[test]
    fn non_hermitian_and_non_density_rejected() {
        let tol = Tolerances::default();
        let m = matrix_to_json(&CMatrix::from_real_rows(&[vec![1.0, 0.5], vec![0.0, 0.0]]).unwrap());
        assert!(parse_hermitian(&m, &tol).is_err());
        let m = matrix_to_json(&CMatrix::from_diag(&[0.7, 0.7]));
        assert!(parse_density(&m, &tol).is_err());
        let m = matrix_to_json(&CMatrix::from_diag(&[0.75, 0.25]));
        assert!(parse_density(&m, &tol).is_ok());
    }

    #[test]
    fn event_round_trip() {
        let basis = CMatrix::identity(3);
        let text = event_to_json(&basis, &[vec![0, 2], vec![1]]);
        let e = parse_event(&text).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.cells()[0].diag_real(), vec![1.0, 0.0, 1.0]);
        assert!(parse_event(&event_to_json(&basis, &[vec![0, 1]])).is_err());
    }
}
