//! Log-log slope fitting for query-budget scaling checks.

use serde::Serialize;

use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence half-width on the slope.
    pub ci95: f64,
    pub points: usize,
}

/// Two-sided t critical values at 95% for 1..=30 degrees of freedom;
/// 1.96 beyond.
fn t_crit(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= 30 {
        TABLE[dof - 1]
    } else {
        1.96
    }
}

/// Least-squares slope of `ln y` against `ln x`. With `deflate_logcubed`,
/// `y` is divided by `ln(x)^3` first, removing the polylog factor before
/// the exponent is read off.
pub fn fit_exponent(xs: &[f64], ys: &[f64], deflate_logcubed: bool) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(CoreError::Config("x/y length mismatch".into()));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x <= 1.0 || y <= 0.0 {
            return Err(CoreError::Config(format!(
                "fit requires x > 1 and y > 0, got ({x}, {y})"
            )));
        }
        let y_adj = if deflate_logcubed { y / x.ln().powi(3) } else { y };
        pts.push((x.ln(), y_adj.ln()));
    }
    let mut xs_distinct: Vec<u64> = pts.iter().map(|p| p.0.to_bits()).collect();
    xs_distinct.sort_unstable();
    xs_distinct.dedup();
    if xs_distinct.len() < 4 {
        return Err(CoreError::Config(format!(
            "fit requires at least 4 distinct x values, got {}",
            xs_distinct.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = pts.len().saturating_sub(2);
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let se = if dof > 0 { (sse / dof as f64 / sxx).sqrt() } else { f64::INFINITY };
    Ok(SlopeFit {
        slope,
        intercept,
        ci95: t_crit(dof) * se,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_five_thirds_exactly() {
        let xs: Vec<f64> = (9..14).map(|p| f64::from(1u32 << p)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(5.0 / 3.0)).collect();
        let fit = fit_exponent(&xs, &ys, false).unwrap();
        assert!((fit.slope - 5.0 / 3.0).abs() < 1e-3, "slope {}", fit.slope);
        assert!(fit.ci95 < 1e-6);
    }

    #[test]
    fn recovers_quadratic() {
        let xs: Vec<f64> = (9..14).map(|p| f64::from(1u32 << p)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let fit = fit_exponent(&xs, &ys, false).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn deflation_lowers_polylog_slopes() {
        let xs: Vec<f64> = (9..14).map(|p| f64::from(1u32 << p)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(5.0 / 3.0) * x.ln().powi(3)).collect();
        let fit = fit_exponent(&xs, &ys, true).unwrap();
        assert!((fit.slope - 5.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_degenerate_data() {
        assert!(fit_exponent(&[2.0, 4.0, 8.0], &[1.0, 2.0, 3.0], false).is_err());
        assert!(fit_exponent(&[2.0, 2.0, 2.0, 2.0], &[1.0, 1.0, 1.0, 1.0], false).is_err());
    }
}
