//! Plain-text artifact formats: dense matrices, adjacency matrices, latent
//! draws, frame sets, and the experiment CSV schemas.
//!
//! Every number is written with Rust's shortest round-trip decimal
//! formatting, so reading a file back reproduces the original values bit for
//! bit and golden-file comparisons are stable across runs.
//!
//! Formats:
//! - **matrix**: first line `n`, then `n` lines of `n` whitespace-separated
//!   values;
//! - **adjacency**: same layout, entries restricted to `0`/`1`, validated as
//!   symmetric with a zero diagonal on read;
//! - **latents**: header `# seed=<u64> stream=<u64>`, then one value per
//!   line;
//! - **frames**: header `<m> <k> <count>`, then `count` blocks of `m` lines
//!   with `k` values each, blocks separated by a blank line; each block is
//!   re-validated as a centered orthonormal frame on read.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::experiments::{RateRow, RateSummaryRow};
use crate::packing::{CenteredFrame, PackingError};
use crate::sampler::{AdjacencyMatrix, LatentSample, SamplerError};
use crate::spectra::TailCertificate;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unexpected end of input at line {line}: expected {expected}")]
    UnexpectedEnd { line: usize, expected: String },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Packing(#[from] PackingError),
}

fn parse_error(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Write a dense matrix: dimension line, then one row per line.
pub fn write_matrix(writer: &mut impl Write, matrix: &DMatrix<f64>) -> Result<(), IoError> {
    writeln!(writer, "{}", matrix.nrows())?;
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{}", matrix[(i, j)]))
            .collect();
        writeln!(writer, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Read a square dense matrix written by [`write_matrix`].
pub fn read_matrix(reader: impl BufRead) -> Result<DMatrix<f64>, IoError> {
    let mut lines = reader.lines().enumerate();
    let (line_no, first) = next_content_line(&mut lines, "dimension line")?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|_| parse_error(line_no, format!("expected a dimension, got {first:?}")))?;
    if n == 0 {
        return Err(parse_error(line_no, "dimension must be positive"));
    }
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (line_no, row) = next_content_line(&mut lines, format!("matrix row {}", i + 1))?;
        let mut tokens = row.split_whitespace();
        for j in 0..n {
            let token = tokens
                .next()
                .ok_or_else(|| parse_error(line_no, format!("row has fewer than {n} entries")))?;
            matrix[(i, j)] = token
                .parse()
                .map_err(|_| parse_error(line_no, format!("bad number {token:?}")))?;
        }
        if tokens.next().is_some() {
            return Err(parse_error(
                line_no,
                format!("row has more than {n} entries"),
            ));
        }
    }
    Ok(matrix)
}

/// Write an adjacency matrix as 0/1 tokens in the matrix layout.
pub fn write_adjacency(
    writer: &mut impl Write,
    adjacency: &AdjacencyMatrix,
) -> Result<(), IoError> {
    write_matrix(writer, adjacency.entries())
}

/// Read and validate an adjacency matrix (binary, symmetric, zero diagonal).
pub fn read_adjacency(reader: impl BufRead) -> Result<AdjacencyMatrix, IoError> {
    Ok(AdjacencyMatrix::from_matrix(read_matrix(reader)?)?)
}

/// Write a latent draw with its provenance header.
pub fn write_latents(writer: &mut impl Write, latents: &LatentSample) -> Result<(), IoError> {
    writeln!(
        writer,
        "# seed={} stream={}",
        latents.seed(),
        latents.stream()
    )?;
    for value in latents.values() {
        writeln!(writer, "{value}")?;
    }
    Ok(())
}

/// Read a latent draw written by [`write_latents`].
pub fn read_latents(reader: impl BufRead) -> Result<LatentSample, IoError> {
    let mut seed = 0_u64;
    let mut stream = 0_u64;
    let mut header_seen = false;
    let mut values = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if header_seen {
                return Err(parse_error(index + 1, "duplicate header line"));
            }
            header_seen = true;
            for field in rest.split_whitespace() {
                if let Some(value) = field.strip_prefix("seed=") {
                    seed = value
                        .parse()
                        .map_err(|_| parse_error(index + 1, format!("bad seed value {value:?}")))?;
                } else if let Some(value) = field.strip_prefix("stream=") {
                    stream = value.parse().map_err(|_| {
                        parse_error(index + 1, format!("bad stream value {value:?}"))
                    })?;
                } else {
                    return Err(parse_error(
                        index + 1,
                        format!("unknown header field {field:?}"),
                    ));
                }
            }
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|_| parse_error(index + 1, format!("bad number {trimmed:?}")))?;
        values.push(value);
    }
    if !header_seen {
        return Err(parse_error(1, "missing `# seed=.. stream=..` header"));
    }
    Ok(LatentSample::from_values(values, seed, stream)?)
}

/// Write a set of same-shaped frames.
pub fn write_frames(writer: &mut impl Write, frames: &[CenteredFrame]) -> Result<(), IoError> {
    let (m, k) = frames
        .first()
        .map(|f| (f.rows(), f.cols()))
        .unwrap_or((0, 0));
    writeln!(writer, "{m} {k} {}", frames.len())?;
    for frame in frames {
        writeln!(writer)?;
        for i in 0..frame.rows() {
            let row: Vec<String> = (0..frame.cols())
                .map(|j| format!("{}", frame.matrix()[(i, j)]))
                .collect();
            writeln!(writer, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

/// Read frames written by [`write_frames`], re-validating each one.
pub fn read_frames(reader: impl BufRead) -> Result<Vec<CenteredFrame>, IoError> {
    let mut lines = reader.lines().enumerate();
    let (line_no, header) = next_content_line(&mut lines, "frame header `m k count`")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_error(line_no, "header must be `m k count`"));
    }
    let parse_field = |text: &str| -> Result<usize, IoError> {
        text.parse()
            .map_err(|_| parse_error(line_no, format!("bad header field {text:?}")))
    };
    let m = parse_field(fields[0])?;
    let k = parse_field(fields[1])?;
    let count = parse_field(fields[2])?;
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        let mut matrix = DMatrix::<f64>::zeros(m, k);
        for i in 0..m {
            let (line_no, row) = next_content_line(&mut lines, format!("frame row {}", i + 1))?;
            let mut tokens = row.split_whitespace();
            for j in 0..k {
                let token = tokens.next().ok_or_else(|| {
                    parse_error(line_no, format!("frame row has fewer than {k} entries"))
                })?;
                matrix[(i, j)] = token
                    .parse()
                    .map_err(|_| parse_error(line_no, format!("bad number {token:?}")))?;
            }
            if tokens.next().is_some() {
                return Err(parse_error(
                    line_no,
                    format!("frame row has more than {k} entries"),
                ));
            }
        }
        frames.push(CenteredFrame::new(matrix)?);
    }
    Ok(frames)
}

/// Header of the per-replicate CSV artifact.
pub const RATE_ROWS_HEADER: &str = "n,replicate,mse,retained_rank,seed_stream";
/// Header of the per-size summary CSV artifact.
pub const RATE_SUMMARY_HEADER: &str = "n,mean_mse,stderr,mean_rank";
/// Header of the tail-certificate CSV artifact.
pub const CERTIFICATES_HEADER: &str = "k,mc_estimate,std_err,bound,pass";

/// Write the per-replicate rows of a rate experiment as CSV.
pub fn write_rate_rows_csv(writer: &mut impl Write, rows: &[RateRow]) -> Result<(), IoError> {
    writeln!(writer, "{RATE_ROWS_HEADER}")?;
    for row in rows {
        writeln!(
            writer,
            "{},{},{},{},{}",
            row.n, row.replicate, row.mse, row.retained_rank, row.seed_stream
        )?;
    }
    Ok(())
}

/// Write the per-size summary of a rate experiment as CSV.
pub fn write_rate_summary_csv(
    writer: &mut impl Write,
    rows: &[RateSummaryRow],
) -> Result<(), IoError> {
    writeln!(writer, "{RATE_SUMMARY_HEADER}")?;
    for row in rows {
        writeln!(
            writer,
            "{},{},{},{}",
            row.n, row.mean_mse, row.stderr, row.mean_rank
        )?;
    }
    Ok(())
}

/// Write tail-decay certificates as CSV, one cut per row.
pub fn write_certificates_csv(
    writer: &mut impl Write,
    certificates: &[TailCertificate],
) -> Result<(), IoError> {
    writeln!(writer, "{CERTIFICATES_HEADER}")?;
    for certificate in certificates {
        writeln!(
            writer,
            "{},{},{},{},{}",
            certificate.cut,
            certificate.mc_estimate,
            certificate.std_error,
            certificate.bound,
            certificate.pass
        )?;
    }
    Ok(())
}

type NumberedLines<R> = std::iter::Enumerate<std::io::Lines<R>>;

/// Next non-empty line as `(1-based line number, content)`.
fn next_content_line<R: BufRead>(
    lines: &mut NumberedLines<R>,
    expected: impl Into<String>,
) -> Result<(usize, String), IoError> {
    let mut last_line = 0;
    for (index, line) in lines.by_ref() {
        let line = line?;
        last_line = index + 1;
        if !line.trim().is_empty() {
            return Ok((last_line, line));
        }
    }
    Err(IoError::UnexpectedEnd {
        line: last_line + 1,
        expected: expected.into(),
    })
}
