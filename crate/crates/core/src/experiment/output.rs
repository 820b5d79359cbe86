use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Numeric(format!("CSV encoding failed for {}: {other:?}", path.display())),
    }
}

/// Writes a header and rows of already formatted fields.
pub(crate) fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Row-major grid of values; header `c0,...,c{w-1}`, blocked cells `NaN`.
pub fn write_grid_csv(path: &Path, grid: &[f64], width: usize) -> Result<()> {
    let header: Vec<String> = (0..width).map(|c| format!("c{c}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header,
        grid.chunks(width)
            .map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
    )
}

/// Grey level per cell, as described on [`write_pgm`].
pub(crate) fn grey_levels(grid: &[f64]) -> Vec<u8> {
    let finite = grid.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    grid.iter()
        .map(|&v| {
            if !v.is_finite() {
                0
            } else if hi > lo {
                ((v - lo) / (hi - lo) * 255.0).round() as u8
            } else {
                255
            }
        })
        .collect()
}

/// Binary 8-bit PGM. Finite values span 0..=255 affinely (a constant grid is
/// all 255); non-finite cells are 0.
pub fn write_pgm(path: &Path, grid: &[f64], width: usize) -> Result<()> {
    let height = grid.len() / width.max(1);
    let mut w = create(path)?;
    write!(w, "P5\n{width} {height}\n255\n")
        .and_then(|_| w.write_all(&grey_levels(grid)))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Sample Pearson correlation; `NaN` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grey_mapping() {
        assert_eq!(grey_levels(&[0.0, 1.0, f64::NAN, 0.5]), vec![0, 255, 0, 128]);
        assert_eq!(grey_levels(&[3.0, 3.0]), vec![255, 255]);
    }

    #[test]
    fn pgm_header_and_body() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        write_pgm(&p, &[-2.0, f64::NAN, 0.0, -1.0], 2).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 0, 255, 128]);
    }

    #[test]
    fn grid_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        write_grid_csv(&p, &[1.5, f64::NAN, -0.25, 2.0], 2).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "c0,c1\n1.5,NaN\n-0.25,2\n");
    }

    #[test]
    fn pearson_values() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]) - 0.9979487157886733).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_nan());
    }

    #[test]
    fn missing_directory_is_io_error() {
        let err = write_pgm(Path::new("/nonexistent-dir/x.pgm"), &[0.0], 1).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = write_grid_csv(Path::new("/nonexistent-dir/x.csv"), &[0.0], 1).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
