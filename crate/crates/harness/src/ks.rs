//! Kolmogorov-Smirnov distances between empirical laws.

use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KsError {
    #[error("empty sample")]
    Empty,
    #[error("non-finite value in sample")]
    NonFinite,
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>, KsError> {
    if sample.is_empty() {
        return Err(KsError::Empty);
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(KsError::NonFinite);
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_a(x) − F_b(x)|` for the empirical CDFs of two samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64, KsError> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    // evaluate both CDFs right after each distinct support point
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample distance `sup_x |F_a(x) − F(x)|` to a continuous CDF.
pub fn ks_distance_cdf(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, KsError> {
    let a = sorted(a)?;
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - k as f64 / n).abs()).max(((k + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Distance to `N(mean, var)`.
pub fn ks_distance_normal(a: &[f64], mean: f64, var: f64) -> Result<f64, KsError> {
    let normal = Normal::new(mean, var.sqrt()).expect("positive variance");
    ks_distance_cdf(a, |x| normal.cdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_hand_cases() {
        assert_eq!(ks_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_distance(&[0.0; 5], &[1.0; 3]).unwrap(), 1.0);
        assert_eq!(ks_distance(&[0.0, 1.0], &[0.0, 0.0, 0.0, 1.0]).unwrap(), 0.25);
        assert_eq!(ks_distance(&[], &[1.0]), Err(KsError::Empty));
        assert_eq!(ks_distance(&[f64::NAN], &[1.0]), Err(KsError::NonFinite));
    }

    #[test]
    fn single_point_against_cdf() {
        // F jumps 0 → 1 at 0 where Φ = ½
        assert!((ks_distance_normal(&[0.0], 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }
}
