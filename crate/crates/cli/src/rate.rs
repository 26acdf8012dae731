use std::path::Path;

use randwalk::stats::linear_fit;
use randwalk::{Error, Result};
use serde::Serialize;

use crate::output::csv_err;

/// Least-squares power law through `(log x, log y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_stderr: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_points(x: &[f64], y: &[f64], x_name: &str, y_name: &str) -> Result<RateFit> {
    if x.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: x.len() });
    }
    for (name, col) in [(x_name, x), (y_name, y)] {
        if let Some(&v) = col.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::NonPositive { column: name.to_string(), value: v });
        }
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    Ok(RateFit {
        slope: f.slope,
        intercept: f.intercept,
        r2: f.r2,
        slope_stderr: f.slope_stderr,
        points: lx.into_iter().zip(ly).collect(),
    })
}

/// Fits `y ~ x^slope` on two columns of a runner CSV.
pub fn fit_rate(path: &Path, x_col: &str, y_col: &str) -> Result<RateFit> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let find = |c: &str| {
        headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| Error::Validation(format!("column `{c}` not in {}", path.display())))
    };
    let (ix, iy) = (find(x_col)?, find(y_col)?);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let parse = |i: usize, c: &str| {
            rec[i].parse::<f64>().map_err(|_| Error::Parse(format!("column `{c}`: '{}'", &rec[i])))
        };
        x.push(parse(ix, x_col)?);
        y.push(parse(iy, y_col)?);
    }
    fit_points(&x, &y, x_col, y_col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (6..=14).map(|k| 2f64.powi(k)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-0.5)).collect();
        let f = fit_points(&x, &y, "n", "d").unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let c = fit_points(&x, &vec![2.0; x.len()], "n", "d").unwrap();
        assert!(c.slope.abs() < 1e-12);
    }

    #[test]
    fn log_corrected_rate() {
        let x: Vec<f64> = (6..=14).map(|k| 2f64.powi(k)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powf(-0.5) * v.ln()).collect();
        // oracle: closed-form least squares on the exact values
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let mx = lx.iter().sum::<f64>() / 9.0;
        let my = ly.iter().sum::<f64>() / 9.0;
        let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
        let f = fit_points(&x, &y, "n", "d").unwrap();
        assert!((f.slope - num / den).abs() < 1e-12);
        assert!(f.slope > -0.5 && f.slope < -0.34, "{}", f.slope);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_points(&[1.0, 2.0], &[1.0, 2.0], "x", "y"), Err(Error::TooFewPoints { .. })));
        match fit_points(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0], "x", "y") {
            Err(Error::NonPositive { column, .. }) => assert_eq!(column, "y"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reads_runner_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "# randwalk-csv v1 clt_rate\nn,distance\n4,0.5\n16,0.25\n64,0.125\n").unwrap();
        let f = fit_rate(&p, "n", "distance").unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
    }
}
