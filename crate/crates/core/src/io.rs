//! Text formats for controls, spectra and gate matrices.
//!
//! Field CSV: optional `#` metadata lines, header `t_start,t_end,u_1,...,u_M`,
//! one row per segment. Numbers are written with the shortest representation
//! that parses back to the same value, so a write/read cycle is bit-exact.
//!
//! Spectrum CSV: `#` lines describing the normalisation, header
//! `freq,channel_1,...,channel_M`.
//!
//! Gate CSV: one matrix row per line, entries as interleaved `re,im` pairs.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::operator::CMatrix;
use crate::propagation::PiecewiseControl;
use crate::scalar::Real;
use crate::spectrum::SpectrumResult;

const BOUND_KEY: &str = "amplitude_bound";

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            msg: format!("{other:?}"),
        },
    }
}

fn parse_num<T: Real>(field: &str, line: usize) -> Result<T> {
    field.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: '{field}'"),
    })
}

/// `key=value` pairs from leading `#` comment lines.
fn metadata(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.trim_start().strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes())
}

pub fn write_field_csv<T: Real, W: Write>(control: &PiecewiseControl<T>, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    if let Some(b) = control.bound() {
        writeln!(out, "# {BOUND_KEY}={b}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t_start".to_string(), "t_end".to_string()];
    header.extend((1..=control.n_controls()).map(|m| format!("u_{m}")));
    w.write_record(&header).map_err(csv_err)?;
    let times = control.times();
    for k in 0..control.n_segments() {
        let mut row = vec![times[k].to_string(), times[k + 1].to_string()];
        row.extend(control.amplitudes(k).iter().map(|u| u.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv<T: Real, R: Read>(mut input: R) -> Result<PiecewiseControl<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut bound = None;
    for (k, v) in metadata(&text) {
        if k == BOUND_KEY {
            bound = Some(parse_num::<T>(&v, 0)?);
        }
    }
    let mut rdr = reader(&text);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 3 || &header[0] != "t_start" || &header[1] != "t_end" {
        return Err(Error::Parse {
            line: 1,
            msg: "expected header t_start,t_end,u_1,...".into(),
        });
    }
    let m = header.len() - 2;
    let mut times: Vec<T> = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != m + 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", m + 2, rec.len()),
            });
        }
        let start = parse_num::<T>(&rec[0], line)?;
        let end = parse_num::<T>(&rec[1], line)?;
        match times.last() {
            None => times.push(start),
            Some(prev) if *prev != start => {
                return Err(Error::Parse {
                    line,
                    msg: "segment does not start where the previous one ended".into(),
                })
            }
            _ => {}
        }
        times.push(end);
        for f in rec.iter().skip(2) {
            values.push(parse_num::<T>(f, line)?);
        }
    }
    if times.is_empty() {
        times.push(T::zero());
    }
    PiecewiseControl::new(times, values, m, bound)
}

pub fn save_field_csv<T: Real>(
    path: impl AsRef<Path>,
    control: &PiecewiseControl<T>,
) -> Result<()> {
    write_field_csv(control, fs::File::create(path)?)
}

pub fn load_field_csv<T: Real>(path: impl AsRef<Path>) -> Result<PiecewiseControl<T>> {
    read_field_csv(fs::File::open(path)?)
}

pub fn write_spectrum_csv<T: Real, W: Write>(spectrum: &SpectrumResult<T>, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(
        out,
        "# normalization=one-sided |X_j|, X_j = (1/K) sum_k u_k exp(-2 pi i j k / K)"
    )?;
    writeln!(out, "# frequency=cyclic, units of J (bin j at j / t_F)")?;
    writeln!(out, "# samples={}", spectrum.n_samples)?;
    writeln!(out, "# resolution={}", spectrum.resolution)?;
    writeln!(
        out,
        "# segments=point samples of the piecewise-constant control"
    )?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["freq".to_string()];
    header.extend((1..=spectrum.n_channels()).map(|m| format!("channel_{m}")));
    w.write_record(&header).map_err(csv_err)?;
    for (j, f) in spectrum.freqs.iter().enumerate() {
        let mut row = vec![f.to_string()];
        row.extend(spectrum.amplitudes.iter().map(|a| a[j].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_spectrum_csv<T: Real>(
    path: impl AsRef<Path>,
    spectrum: &SpectrumResult<T>,
) -> Result<()> {
    write_spectrum_csv(spectrum, fs::File::create(path)?)
}

pub fn write_gate_csv<T: Real, W: Write>(matrix: &CMatrix<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for r in 0..matrix.dim() {
        let mut row = Vec::with_capacity(2 * matrix.dim());
        for c in 0..matrix.dim() {
            row.push(matrix[(r, c)].re.to_string());
            row.push(matrix[(r, c)].im.to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Square complex matrix from rows of interleaved `re,im` pairs. Blank and
/// `#` lines are ignored.
pub fn read_gate_csv<T: Real, R: Read>(mut input: R) -> Result<CMatrix<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() % 2 != 0 {
            return Err(Error::Parse {
                line,
                msg: "row needs an even number of fields (re,im pairs)".into(),
            });
        }
        let nums: Vec<T> = rec
            .iter()
            .map(|f| parse_num(f, line))
            .collect::<Result<_>>()?;
        entries.extend(nums.chunks(2).map(|p| Complex::new(p[0], p[1])));
        rows += 1;
    }
    if rows == 0 || entries.len() != rows * rows {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "expected a square matrix, found {rows} rows and {} entries",
                entries.len()
            ),
        });
    }
    CMatrix::from_row_major(entries)
}

pub fn load_gate_csv<T: Real>(path: impl AsRef<Path>) -> Result<CMatrix<T>> {
    read_gate_csv(fs::File::open(path)?)
}
