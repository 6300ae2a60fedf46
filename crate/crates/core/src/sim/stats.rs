//! Paired comparisons and summary statistics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTest {
    pub n: usize,
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub t: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Set when every difference is identical, so the t statistic is undefined.
    pub degenerate: bool,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Paired t-test on `a[i] - b[i]`.
///
/// Zero variance is reported as degenerate: `p = 1` with a zero mean
/// difference, `p = 0` and an infinite `t` otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument("paired t-test needs at least two pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    // Welford keeps the variance accurate when differences are large and similar.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, d) in diffs.iter().enumerate() {
        let delta = d - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (d - mean);
    }
    let var = m2 / (n - 1) as f64;
    if var <= 0.0 || diffs.iter().all(|d| *d == diffs[0]) {
        let mean_diff = diffs[0];
        let (t, p_value) = if mean_diff == 0.0 { (0.0, 1.0) } else { (mean_diff.signum() * f64::INFINITY, 0.0) };
        return Ok(PairedTest { n, mean_diff, t, p_value, degenerate: true });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("degrees of freedom positive");
    let p_value = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(PairedTest { n, mean_diff: mean, t, p_value, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_columns_degenerate() {
        let a = [1.0, 2.0, 3.0];
        let r = paired_t_test(&a, &a).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.mean_diff, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn constant_difference_degenerate_positive() {
        let a = [2.0, 3.0, 4.0, 5.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.mean_diff, 1.0);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn argument_errors() {
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0]).is_err());
    }

    #[test]
    fn t_matches_two_pass_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let normal = Normal::new(1.0, 1.0).unwrap();
        let diffs: Vec<f64> = (0..100).map(|_| normal.sample(&mut rng)).collect();
        let zeros = vec![0.0; diffs.len()];
        let r = paired_t_test(&diffs, &zeros).unwrap();
        // Two-pass textbook formula, coded independently.
        let n = diffs.len() as f64;
        let m = diffs.iter().sum::<f64>() / n;
        let ss: f64 = diffs.iter().map(|d| (d - m) * (d - m)).sum();
        let reference = m / ((ss / (n - 1.0)) / n).sqrt();
        assert!(((r.t - reference) / reference).abs() < 0.02);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn p_value_matches_reference_tables() {
        // Differences (1, 2, 3, 4, 6): t = 3.71992 with 4 df.
        // Two-sided p from scipy.stats.ttest_1samp: 0.0204759.
        let a = [1.0, 2.0, 3.0, 4.0, 6.0];
        let r = paired_t_test(&a, &[0.0; 5]).unwrap();
        assert!((r.t - 3.719924).abs() < 1e-5, "t {}", r.t);
        assert!((r.p_value - 0.0204759).abs() < 1e-6, "p {}", r.p_value);
    }

    #[test]
    fn mean_se() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (1.666_666_666_666_666_7f64 / 4.0).sqrt()).abs() < 1e-12);
    }
}
