//! The shared matrix text format.
//!
//! ```text
//! # any number of comment lines
//! 3
//! 0.2  0.5  0.3
//! 0.5  0.25 0.25
//! 0.3  0.25 0.45
//! ```
//!
//! Lines starting with `#` and blank lines are skipped. The first
//! remaining line is the dimension `n`, followed by `n` lines of `n`
//! whitespace-separated decimal values (`.` decimal separator, never
//! locale-dependent). The writer emits 17 significant digits, so a
//! write/parse round trip reproduces every entry bit for bit.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::report::fmt_float;

/// Parses the text format into a raw matrix (no stochasticity checks).
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (dim_line, dim_text) = lines
        .next()
        .ok_or_else(|| Error::Parse("no content: expected the dimension line".into()))?;
    let n: usize = dim_text.parse().map_err(|_| {
        Error::Parse(format!(
            "line {dim_line}: expected the dimension, found {dim_text:?}"
        ))
    })?;
    if n == 0 {
        return Err(Error::Parse(format!(
            "line {dim_line}: dimension must be at least 1"
        )));
    }

    let mut m = Matrix::zeros(n, n);
    for row in 0..n {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing row {row}: expected {n} rows")))?;
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != n {
            return Err(Error::Parse(format!(
                "line {line_no}: row {row} has {} values, expected {n}",
                values.len()
            )));
        }
        for (col, token) in values.iter().enumerate() {
            let v: f64 = token
                .parse()
                .map_err(|_| Error::Parse(format!("line {line_no}: invalid number {token:?}")))?;
            m.set(row, col, v);
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(Error::Parse(format!(
            "line {line_no}: trailing content after {n} rows"
        )));
    }
    Ok(m)
}

/// Renders a matrix in the text format with canonical float encoding.
pub fn matrix_to_text(m: &Matrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("{}\n", m.rows()));
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| fmt_float(m.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, matrix_to_text(m)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes arbitrary report text (JSON or CSV) to a file.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_irregular_spacing() {
        let text = "# transition matrix\n\n2\n  0.75\t0.25\n0.5 0.5\n\n# trailing comment\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m.get(0, 0), 0.75);
        assert_eq!(m.get(1, 0), 0.5);
    }

    #[test]
    fn round_trip_is_exact() {
        let mut m = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, 1.0 / (1.0 + (i * 3 + j) as f64));
            }
        }
        let back = parse_matrix(&matrix_to_text(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn diagnostics_name_the_offending_line() {
        let no_dim = parse_matrix("# only comments\n");
        assert!(matches!(no_dim, Err(Error::Parse(ref s)) if s.contains("dimension")));

        let bad_dim = parse_matrix("two\n0.5 0.5\n0.5 0.5\n");
        assert!(matches!(bad_dim, Err(Error::Parse(ref s)) if s.contains("line 1")));

        let short_row = parse_matrix("2\n0.5\n0.5 0.5\n");
        assert!(matches!(short_row, Err(Error::Parse(ref s)) if s.contains("row 0 has 1 values")));

        let bad_value = parse_matrix("2\n0.5 x\n0.5 0.5\n");
        assert!(matches!(bad_value, Err(Error::Parse(ref s)) if s.contains("\"x\"")));

        let missing_row = parse_matrix("2\n0.5 0.5\n");
        assert!(matches!(missing_row, Err(Error::Parse(ref s)) if s.contains("missing row 1")));

        let extra = parse_matrix("1\n1.0\n0.3\n");
        assert!(matches!(extra, Err(Error::Parse(ref s)) if s.contains("trailing")));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("walkbound-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.mat");
        let m = Matrix::from_rows(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        write_matrix(&path, &m).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), m);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_matrix(Path::new("/nonexistent/matrix.mat")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
