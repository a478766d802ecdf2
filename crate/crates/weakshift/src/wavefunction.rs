//! Two- and three-column CSV tables on the pointer grid.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use weakshift_core::pointer::Grid;

use crate::report::fmt_float;
use crate::{Error, Result};

/// Writes `q,re,im` rows for each grid point.
pub fn write_wavefunction<W: Write>(out: W, grid: &Grid, amplitudes: &[Complex64]) -> Result<()> {
    if amplitudes.len() != grid.n_points() {
        return Err(Error::invalid("amplitude count does not match the grid"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "re", "im"])?;
    for (q, a) in grid.positions().iter().zip(amplitudes) {
        w.write_record([fmt_float(*q), fmt_float(a.re), fmt_float(a.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn dump_wavefunction(path: &Path, grid: &Grid, amplitudes: &[Complex64]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    write_wavefunction(file, grid, amplitudes)
}

/// Positions and amplitudes from a `q,re,im` table.
pub fn parse_wavefunction<R: Read>(input: R) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let rows = read_columns(input, 3)?;
    Ok(rows.iter().map(|r| (r[0], Complex64::new(r[1], r[2]))).unzip())
}

/// Positions and values from a `q,v` table.
pub fn parse_potential<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = read_columns(input, 2)?;
    Ok(rows.iter().map(|r| (r[0], r[1])).unzip())
}

pub fn read_wavefunction(path: &Path) -> Result<(Vec<f64>, Vec<Complex64>)> {
    parse_wavefunction(open(path)?)
}

pub fn read_potential(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_potential(open(path)?)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn read_columns<R: Read>(input: R, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(Error::invalid(format!(
                "row {}: expected {width} columns, found {}",
                line + 1,
                record.len()
            )));
        }
        let row = record
            .iter()
            .map(|x| {
                x.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("row {}: bad number {x:?}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
