//! Plain-text matrix files.
//!
//! Density matrix: first line `d`, then `d` rows of `d` comma-separated
//! complex entries written `a+bi` / `a-bi` (a bare real `a` or imaginary `bi`
//! is also accepted on input).
//!
//! Hamiltonian: first line `d`, then the `d` energies separated by commas
//! and/or newlines.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DensityMatrix, Hamiltonian};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position: line,
        message: message.into(),
    }
}

/// Formats `z` as `a+bi` or `a-bi` using shortest round-trip decimals.
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn parse_complex(src: &str) -> Option<Complex64> {
    let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    // last sign that is not the leading sign or an exponent sign
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |part: &str| -> Option<f64> {
        match part {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            p => p.parse().ok(),
        }
    };
    match split {
        Some(k) => Some(Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_dimension(line: Option<(usize, &str)>) -> Result<usize> {
    let (no, text) = line.ok_or_else(|| parse_err(1, "empty file, expected the dimension"))?;
    match text.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(d),
        _ => Err(parse_err(no, format!("expected a positive dimension, found '{text}'"))),
    }
}

/// Parses and validates a density matrix.
pub fn parse_density_matrix(src: &str) -> Result<DensityMatrix> {
    let mut lines = content_lines(src);
    let d = parse_dimension(lines.next())?;
    let mut entries = Vec::with_capacity(d * d);
    for row in 0..d {
        let (no, text) = lines
            .next()
            .ok_or_else(|| parse_err(row + 2, format!("expected {d} rows, found {row}")))?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != d {
            return Err(parse_err(no, format!("expected {d} entries, found {}", fields.len())));
        }
        for f in fields {
            let z = parse_complex(f)
                .ok_or_else(|| parse_err(no, format!("malformed complex number '{}'", f.trim())))?;
            entries.push(z);
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(no, "trailing content after the matrix"));
    }
    DensityMatrix::new(DMatrix::from_row_slice(d, d, &entries))
}

pub fn format_density_matrix(rho: &DensityMatrix) -> String {
    let d = rho.dim();
    let mut out = format!("{d}\n");
    for m in 0..d {
        let row: Vec<String> = (0..d).map(|n| format_complex(rho.get(m, n))).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn parse_hamiltonian(src: &str) -> Result<Hamiltonian> {
    let mut lines = content_lines(src);
    let d = parse_dimension(lines.next())?;
    let mut energies = Vec::with_capacity(d);
    for (no, text) in lines {
        for field in text.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            let e = field
                .parse::<f64>()
                .map_err(|_| parse_err(no, format!("malformed energy '{field}'")))?;
            energies.push(e);
        }
    }
    if energies.len() != d {
        return Err(parse_err(1, format!("expected {d} energies, found {}", energies.len())));
    }
    Hamiltonian::new(energies)
}

pub fn format_hamiltonian(h: &Hamiltonian) -> String {
    let e: Vec<String> = h.energies().iter().map(f64::to_string).collect();
    format!("{}\n{}\n", h.dim(), e.join(","))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))
}

pub fn read_density_matrix(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    parse_density_matrix(&read(path.as_ref())?)
}

pub fn read_hamiltonian(path: impl AsRef<Path>) -> Result<Hamiltonian> {
    parse_hamiltonian(&read(path.as_ref())?)
}

pub fn write_density_matrix(path: impl AsRef<Path>, rho: &DensityMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_density_matrix(rho))
        .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))
}
