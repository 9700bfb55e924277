//! On-disk formats: data matrices (CSV or raw binary), MatrixMarket
//! sparse output, edge lists, objective traces and JSON reports.
//!
//! The binary data layout is a 16-byte header — magic `ACRD`, little-
//! endian `u32` sample count, `u32` variable count, four reserved zero
//! bytes — followed by row-major little-endian `f64` values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SparseSquare;
use crate::solver::FitResult;

const MAGIC: &[u8; 4] = b"ACRD";

/// Writes a row-major matrix in the raw binary layout.
pub fn write_binary_matrix(path: &Path, values: &[f64], n: usize, p: usize) -> Result<()> {
    if values.len() != n * p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: values.len(),
            context: "binary matrix buffer",
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(p as u32).to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a raw binary matrix, validating the magic and declared sizes.
pub fn read_binary_matrix(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::Parse("binary matrix shorter than its 16-byte header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Parse(format!(
            "bad magic {:?}, expected \"ACRD\"",
            &header[0..4]
        )));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let p = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() != n * p * 8 {
        return Err(Error::Parse(format!(
            "binary payload holds {} bytes, expected {} for {n} x {p}",
            buf.len(),
            n * p * 8
        )));
    }
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((values, n, p))
}

/// Writes a row-major matrix as comma-separated values, optionally with
/// a v0,v1,... header line.
pub fn write_csv_matrix(
    path: &Path,
    values: &[f64],
    n: usize,
    p: usize,
    header: bool,
) -> Result<()> {
    if values.len() != n * p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: values.len(),
            context: "csv matrix buffer",
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    if header {
        let names: Vec<String> = (0..p).map(|j| format!("v{j}")).collect();
        writeln!(w, "{}", names.join(","))?;
    }
    for i in 0..n {
        let row: Vec<String> = values[i * p..(i + 1) * p]
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV matrix; a non-numeric first line is treated as a header.
pub fn read_csv_matrix(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let r = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    let mut p = 0usize;
    let mut n = 0usize;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if p == 0 {
                    p = row.len();
                } else if row.len() != p {
                    return Err(Error::Parse(format!(
                        "line {}: {} fields, expected {p}",
                        lineno + 1,
                        row.len()
                    )));
                }
                values.extend(row);
                n += 1;
            }
            Err(_) if n == 0 && lineno == 0 => continue, // header line
            Err(e) => {
                return Err(Error::Parse(format!("line {}: {e}", lineno + 1)));
            }
        }
    }
    if n == 0 || p == 0 {
        return Err(Error::Parse("csv matrix is empty".into()));
    }
    Ok((values, n, p))
}

/// Reads a data matrix in either supported format, sniffing the magic.
pub fn read_matrix_auto(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let mut head = [0u8; 4];
    let got = File::open(path)?.read(&mut head)?;
    if got == 4 && &head == MAGIC {
        read_binary_matrix(path)
    } else {
        read_csv_matrix(path)
    }
}

/// Writes a sparse matrix in MatrixMarket coordinate format, 1-based
/// indices, general (non-symmetric) field.
pub fn write_matrix_market(path: &Path, m: &SparseSquare) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.dim(), m.dim(), m.nnz())?;
    for (i, j, v) in m.iter() {
        writeln!(w, "{} {} {v}", i + 1, j + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a MatrixMarket coordinate file into a sparse square matrix.
/// Symmetric files are expanded; array (dense) files are rejected.
pub fn read_matrix_market(path: &Path) -> Result<SparseSquare> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse("not a MatrixMarket matrix file".into()));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::Parse("only coordinate format is supported".into()));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(Error::Parse(format!("unsupported field {}", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(Error::Parse("malformed size line".into()));
                }
                let rows: usize = fields[0]
                    .parse()
                    .map_err(|_| Error::Parse("bad row count".into()))?;
                let cols: usize = fields[1]
                    .parse()
                    .map_err(|_| Error::Parse("bad column count".into()))?;
                let nnz: usize = fields[2]
                    .parse()
                    .map_err(|_| Error::Parse("bad nnz count".into()))?;
                if rows != cols {
                    return Err(Error::Parse(format!(
                        "matrix must be square, got {rows} x {cols}"
                    )));
                }
                dims = Some((rows, cols, nnz));
                triplets.reserve(nnz);
            }
            Some((rows, _, _)) => {
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("malformed entry line: {line}")));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|_| Error::Parse("bad row index".into()))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|_| Error::Parse("bad column index".into()))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| Error::Parse("bad value".into()))?;
                if i == 0 || j == 0 || i > rows || j > rows {
                    return Err(Error::Parse(format!("index ({i}, {j}) out of range")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (rows, _, nnz_declared) = dims.ok_or_else(|| Error::Parse("missing size line".into()))?;
    // symmetric entries were expanded above, so only check the general case
    if !symmetric && triplets.len() != nnz_declared {
        return Err(Error::Parse(format!(
            "declared {nnz_declared} entries, found {}",
            triplets.len()
        )));
    }
    SparseSquare::from_triplets(rows, &triplets)
}

/// Writes undirected ground-truth edges as tab-separated 0-based pairs.
pub fn write_edge_list(path: &Path, edges: &[(usize, usize)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i\tj")?;
    for &(i, j) in edges {
        writeln!(w, "{i}\t{j}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the partial-correlation edge list (i, j, rho), 0-based, one
/// unordered pair per line.
pub fn write_partial_correlations(path: &Path, rho: &SparseSquare) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i\tj\trho")?;
    for (i, j, v) in rho.iter() {
        if i < j {
            writeln!(w, "{i}\t{j}\t{v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Objective trace as CSV rows (iteration, objective, step). The step
/// of row 0 (the initial point) is written as 0.
pub fn write_trace_csv(path: &Path, fit: &FitResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iteration,objective,step")?;
    for (t, &f) in fit.objective_trace.iter().enumerate() {
        let step = if t == 0 { 0.0 } else { fit.steps[t - 1] };
        writeln!(w, "{t},{f},{step}")?;
    }
    w.flush()?;
    Ok(())
}

/// Precision-recall curve as CSV rows (lambda, recall, precision).
pub fn write_pr_curve(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lambda,recall,precision")?;
    for (lambda, recall, precision) in rows {
        writeln!(w, "{lambda},{recall},{precision}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, value).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn binary_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let values = vec![1.5, -2.25, 0.0, 3.0, f64::MIN_POSITIVE, 1e300];
        write_binary_matrix(&path, &values, 2, 3).unwrap();
        let (got, n, p) = read_binary_matrix(&path).unwrap();
        assert_eq!((n, p), (2, 3));
        assert_eq!(got, values);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 6 * 8);
    }

    #[test]
    fn binary_rejects_bad_magic_and_truncation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(read_binary_matrix(&path).is_err());
        std::fs::write(&path, b"ACRD\x02\x00\x00\x00\x03\x00\x00\x00\x00\x00\x00\x00short")
            .unwrap();
        assert!(read_binary_matrix(&path).is_err());
    }

    #[test]
    fn csv_round_trip_with_and_without_header() {
        let dir = tempdir().unwrap();
        let values = vec![1.0, 2.5, -3.125, 4.0];
        for header in [false, true] {
            let path = dir.path().join(format!("m{header}.csv"));
            write_csv_matrix(&path, &values, 2, 2, header).unwrap();
            let (got, n, p) = read_csv_matrix(&path).unwrap();
            assert_eq!((n, p), (2, 2));
            assert_eq!(got, values);
        }
    }

    #[test]
    fn auto_detection_picks_format() {
        let dir = tempdir().unwrap();
        let values = vec![0.5, -1.0];
        let bin = dir.path().join("m.bin");
        let csv = dir.path().join("m.csv");
        write_binary_matrix(&bin, &values, 1, 2).unwrap();
        write_csv_matrix(&csv, &values, 1, 2, true).unwrap();
        assert_eq!(read_matrix_auto(&bin).unwrap().0, values);
        assert_eq!(read_matrix_auto(&csv).unwrap().0, values);
    }

    #[test]
    fn matrix_market_round_trip_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("omega.mtx");
        let m = SparseSquare::from_triplets(
            3,
            &[(0, 0, 1.25), (0, 2, -0.3333333333333333), (1, 1, 2.0), (2, 2, 1e-17)],
        )
        .unwrap();
        write_matrix_market(&path, &m).unwrap();
        let got = read_matrix_market(&path).unwrap();
        assert_eq!(got, m);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
        assert!(text.contains("1 1 1.25"));
        assert!(text.contains("1 3 -0.3333333333333333"));
    }

    #[test]
    fn matrix_market_symmetric_expansion() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sym.mtx");
        std::fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 1 1.0\n3 1 0.5\n",
        )
        .unwrap();
        let m = read_matrix_market(&path).unwrap();
        assert_eq!(m.get(2, 0), 0.5);
        assert_eq!(m.get(0, 2), 0.5);
    }

    #[test]
    fn trace_csv_has_step_column() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let fit = FitResult {
            omega: SparseSquare::identity(2),
            iterations: 2,
            objective_trace: vec![3.0, 2.0, 1.5],
            steps: vec![0.5, 0.25],
            final_step: 0.25,
            converged: true,
            kkt_residual: 0.0,
        };
        write_trace_csv(&path, &fit).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,objective,step");
        assert_eq!(lines[2], "1,2,0.5");
    }
}
