//! Log-log least squares for rate exponents.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RateFitResult {
    pub slope: f64,
    pub intercept: f64,
    /// 95% half-width of the slope from the OLS standard error.
    pub slope_halfwidth: f64,
    pub points: Vec<(usize, f64)>,
    /// Whether `log log n` was subtracted before fitting.
    pub log_adjusted: bool,
}

/// OLS of `log value` (minus `log log n` when `log_adjust`) on `log n`.
pub fn fit_rate(points: &[(usize, f64)], log_adjust: bool) -> Result<RateFitResult> {
    if points.len() < 3 {
        return Err(Error::SampleSize { needed: 3, got: points.len() });
    }
    if let Some((n, v)) = points.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("rate fit needs positive values, got {v} at n = {n}")));
    }
    if points.iter().any(|(n, _)| *n < 2) {
        return Err(Error::Domain("rate fit needs n >= 2".into()));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> =
        points.iter().zip(&xs).map(|((_, v), x)| if log_adjust { v.ln() - x.ln() } else { v.ln() }).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("rate fit needs at least two distinct n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = k - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Domain(e.to_string()))?.inverse_cdf(0.975);
    Ok(RateFitResult { slope, intercept, slope_halfwidth: t * se, points: points.to_vec(), log_adjusted: log_adjust })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const NS: [usize; 4] = [100, 200, 400, 800];

    #[test]
    fn exact_power_law() {
        let pts: Vec<(usize, f64)> = NS.iter().map(|&n| (n, 7.0 * (n as f64).powf(-0.5))).collect();
        let f = fit_rate(&pts, false).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-10);
        assert!(f.slope_halfwidth < 1e-10);
    }

    #[test]
    fn log_adjusted() {
        let pts: Vec<(usize, f64)> = NS.iter().map(|&n| (n, (n as f64).powf(-0.5) * (n as f64).ln())).collect();
        let f = fit_rate(&pts, true).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.log_adjusted);
        assert!(fit_rate(&pts, false).unwrap().slope > -0.4);
    }

    #[test]
    fn noisy_points() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..50 {
            let pts: Vec<(usize, f64)> =
                NS.iter().map(|&n| (n, 3.0 * (n as f64).powf(-0.5) * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)))).collect();
            let f = fit_rate(&pts, false).unwrap();
            assert!((f.slope + 0.5).abs() < 0.1, "{}", f.slope);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_rate(&[(10, 1.0), (20, 0.0), (40, 1.0)], false), Err(Error::Domain(_))));
        assert!(matches!(fit_rate(&[(10, 1.0), (20, 0.5)], false), Err(Error::SampleSize { .. })));
    }
}
