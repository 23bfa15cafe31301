use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::Series;

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any `f64`.
fn format_value(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Writes a header row of column names and one line per record.
pub fn emit_csv(series: &Series, path: &Path) -> Result<()> {
    if series.is_empty() {
        return Err(Error::contract("refusing to write an empty series"));
    }
    let file = File::create(path)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(series.columns())?;
    for row in series.rows() {
        w.write_record(row.iter().map(|&x| format_value(x)))?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(e.into_error()))?
        .flush()?;
    Ok(())
}

/// Reads a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Series> {
    let mut r = csv::Reader::from_path(path)?;
    let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut series = Series::new(columns);
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        series.push(row)?;
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record_gives_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let mut s = Series::new(["t", "x"]);
        s.push_record(0.0, &[0.1]).unwrap();
        emit_csv(&s, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,x\n0.0000000000000000e0,1.0000000000000001e-1\n");
    }

    #[test]
    fn values_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let mut s = Series::new(["t", "a", "b"]);
        let mut x = 0.1f64;
        for k in 0..200 {
            x = (x * 3.7).sin() * 10f64.powi(k % 40 - 20);
            s.push_record(k as f64 * 0.3, &[x, -x / 3.0]).unwrap();
        }
        s.push_record(1e3, &[f64::MIN_POSITIVE, f64::MAX]).unwrap();
        emit_csv(&s, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back, s);
        for (a, b) in back.rows().iter().flatten().zip(s.rows().iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn empty_series_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_csv(&Series::new(["t"]), &dir.path().join("e.csv")).is_err());
    }

    #[test]
    fn missing_directory_is_an_io_error() {
        let mut s = Series::new(["t"]);
        s.push_record(0.0, &[]).unwrap();
        let err = emit_csv(&s, Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
