//! Plain-text CSV formats for instances and ground truth.
//!
//! Reals are written in scientific notation with 17 significant digits, which
//! round-trips every finite `f64` exactly.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{RegressionInstance, Truth};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_real(s: &str, line: usize, col: usize) -> Result<f64> {
    let s = s.trim();
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}, column {col}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!(
            "line {line}, column {col}: non-finite value '{s}'"
        )));
    }
    Ok(v)
}

/// `y,x1,...,xd` header, then one row per sample.
pub fn format_instance(inst: &RegressionInstance) -> String {
    let d = inst.d();
    let mut out = String::from("y");
    for j in 1..=d {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for i in 0..inst.n() {
        out.push_str(&fmt(inst.y()[i]));
        for j in 0..d {
            out.push(',');
            out.push_str(&fmt(inst.x()[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_instance(text: &str) -> Result<RegressionInstance> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("instance file is empty".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let d = names.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("y".to_string())
        .chain((1..=d).map(|j| format!("x{j}")))
        .collect();
    if d == 0 || names != expected {
        return Err(Error::Parse(format!("bad header '{header}', expected 'y,x1,...,xd'")));
    }
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (idx, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != d + 1 {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, found {}",
                idx + 1,
                d + 1,
                cells.len()
            )));
        }
        y.push(parse_real(cells[0], idx + 1, 1)?);
        for (j, c) in cells[1..].iter().enumerate() {
            x.push(parse_real(c, idx + 1, j + 2)?);
        }
    }
    if y.is_empty() {
        return Err(Error::Parse("instance file has no data rows".into()));
    }
    let n = y.len();
    RegressionInstance::new(DMatrix::from_row_slice(n, d, &x), DVector::from_vec(y))
}

/// `beta_star,eta` columns padded with empty cells to `max(n, d)` rows.
pub fn format_truth(truth: &Truth) -> String {
    let rows = truth.beta_star.len().max(truth.eta.len());
    let mut out = String::from("beta_star,eta\n");
    for i in 0..rows {
        if let Some(b) = truth.beta_star.get(i) {
            out.push_str(&fmt(*b));
        }
        out.push(',');
        if let Some(e) = truth.eta.get(i) {
            out.push_str(&fmt(*e));
        }
        out.push('\n');
    }
    out
}

pub fn parse_truth(text: &str) -> Result<Truth> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("truth file is empty".into()))?;
    if header.split(',').map(str::trim).collect::<Vec<_>>() != ["beta_star", "eta"] {
        return Err(Error::Parse(format!("bad header '{header}', expected 'beta_star,eta'")));
    }
    let mut columns: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut ended = [false; 2];
    for (idx, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 2 {
            return Err(Error::Parse(format!(
                "line {}: expected 2 fields, found {}",
                idx + 1,
                cells.len()
            )));
        }
        for c in 0..2 {
            if cells[c].trim().is_empty() {
                ended[c] = true;
            } else if ended[c] {
                return Err(Error::Parse(format!(
                    "line {}: value after the end of column {}",
                    idx + 1,
                    c + 1
                )));
            } else {
                columns[c].push(parse_real(cells[c], idx + 1, c + 1)?);
            }
        }
    }
    let [beta, eta] = columns;
    Ok(Truth {
        beta_star: DVector::from_vec(beta),
        eta: DVector::from_vec(eta),
    })
}

pub fn write_instance(path: &Path, inst: &RegressionInstance) -> Result<()> {
    Ok(fs::write(path, format_instance(inst))?)
}

pub fn read_instance(path: &Path) -> Result<RegressionInstance> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn write_truth(path: &Path, truth: &Truth) -> Result<()> {
    Ok(fs::write(path, format_truth(truth))?)
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    parse_truth(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gaussian_design;
    use crate::rng::RandomSource;
    use nalgebra::dvector;
    use proptest::prelude::*;

    #[test]
    fn instance_round_trip_is_exact() {
        let x = gaussian_design(20, 3, &RandomSource::new(1, 0)).unwrap();
        let y = DVector::from_fn(20, |i, _| (i as f64).sqrt() * 1e-300 + std::f64::consts::PI * i as f64);
        let inst = RegressionInstance::new(x, y).unwrap();
        let text = format_instance(&inst);
        assert!(text.starts_with("y,x1,x2,x3\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn bad_headers_and_rows() {
        assert!(matches!(parse_instance("y,x2\n1,2\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_instance("y\n1\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_instance("y,x1\n1,2,3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_instance("y,x1\n1,abc\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_instance("y,x1\n1,inf\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_instance("y,x1\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_instance(""), Err(Error::Parse(_))));
    }

    #[test]
    fn truth_layout() {
        let t = Truth {
            beta_star: dvector![1.0, 2.0, 3.0],
            eta: dvector![0.5],
        };
        let text = format_truth(&t);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(2).unwrap().ends_with(','));
        assert_eq!(parse_truth(&text).unwrap(), t);
        let t = Truth {
            beta_star: dvector![1.0],
            eta: dvector![0.5, -0.25],
        };
        assert_eq!(parse_truth(&format_truth(&t)).unwrap(), t);
        assert!(parse_truth("beta_star,eta\n,1\n2,3\n").is_err());
        assert!(parse_truth("beta,eta\n1,1\n").is_err());
    }

    proptest! {
        #[test]
        fn reals_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(parse_real(&fmt(v), 1, 1).unwrap().to_bits(), v.to_bits());
        }
    }
}
