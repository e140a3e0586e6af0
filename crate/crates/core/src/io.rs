//! Matrix files: CSV (one row per line, complex entries as `a+bi`) and the
//! JSON object `{"rows": m, "cols": n, "data": [...]}` in row-major order.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Matrix};

fn records(text: &str) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::parse("csv", e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

fn rectangular<T>(rows: Vec<Vec<T>>) -> Result<(usize, usize, Vec<T>)> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
        return Err(Error::parse(
            format!("line {}", i + 1),
            format!("{} fields, expected {c}", row.len()),
        ));
    }
    Ok((r, c, rows.into_iter().flatten().collect()))
}

fn parse_real(token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(token, "not a decimal number"))?;
    if !v.is_finite() {
        return Err(Error::parse(token, "not finite"));
    }
    Ok(v)
}

pub fn parse_csv(text: &str) -> Result<Matrix> {
    let rows = records(text)?
        .into_iter()
        .map(|row| row.iter().map(|t| parse_real(t)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let (r, c, data) = rectangular(rows)?;
    Matrix::from_vec(r, c, data)
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`, exponents like `1e-3+2E+1i`).
pub fn parse_complex(token: &str) -> Result<Complex64> {
    let t: String = token.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(parse_real(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => parse_real(s).map_err(|_| Error::parse(token, "malformed imaginary part"))?,
    };
    let re = parse_real(re).map_err(|_| Error::parse(token, "malformed real part"))?;
    Ok(Complex64::new(re, im))
}

pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn parse_complex_csv(text: &str) -> Result<ComplexMatrix> {
    let rows = records(text)?
        .into_iter()
        .map(|row| row.iter().map(|t| parse_complex(t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let (r, c, data) = rectangular(rows)?;
    ComplexMatrix::from_vec(r, c, data)
}

pub fn to_complex_csv(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = (0..m.cols()).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_json(text: &str) -> Result<Matrix> {
    serde_json::from_str(text).map_err(|e| Error::parse("json", e.to_string()))
}

pub fn to_json(m: &Matrix) -> String {
    serde_json::to_string(m).expect("matrices serialize")
}

/// Reads `.json` files as JSON matrices and anything else as CSV.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_json(&text)
    } else {
        parse_csv(&text)
    }
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        to_json(m)
    } else {
        to_csv(m)
    };
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let m = Matrix::from_rows(&[vec![1.0, -0.1, 1e-300], vec![std::f64::consts::PI, 0.0, -2.5e17]]);
        let back = parse_csv(&to_csv(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(parse_json(&to_json(&m)).unwrap(), m);
        assert_eq!(parse_csv(" 1, 2 \n\n3,4\n").unwrap(), Matrix::from_rows(&[vec![1., 2.], vec![3., 4.]]));
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(parse_csv("1,2\n3\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_csv("1,x\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_csv("1,inf\n"), Err(Error::Parse { .. })));
        assert!(parse_json(r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).is_err());
    }

    #[test]
    fn complex_tokens() {
        let cases = [
            ("3", Complex64::new(3.0, 0.0)),
            ("2i", Complex64::new(0.0, 2.0)),
            ("-1.5-2e-3i", Complex64::new(-1.5, -2e-3)),
            ("1e+5+2E+1i", Complex64::new(1e5, 20.0)),
            ("i", Complex64::new(0.0, 1.0)),
            ("-i", Complex64::new(0.0, -1.0)),
            ("4-i", Complex64::new(4.0, -1.0)),
            ("0.5 + 0.25i", Complex64::new(0.5, 0.25)),
        ];
        for (t, z) in cases {
            assert_eq!(parse_complex(t).unwrap(), z, "{t}");
        }
        assert!(parse_complex("1+ii").is_err());
        let m = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64 - 0.5, -(j as f64) * 0.1));
        assert_eq!(parse_complex_csv(&to_complex_csv(&m)).unwrap(), m);
    }
}
