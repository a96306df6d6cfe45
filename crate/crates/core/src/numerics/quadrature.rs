//! Composite Simpson quadrature on (possibly non-uniform) sample grids.

use crate::error::{QabError, Result};

/// Integrals of the quadratic through three samples over its first and
/// second interval.
fn pair_weights(h0: f64, h1: f64, y: [f64; 3]) -> (f64, f64) {
    let first = y[0] * h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * (h0 + h1)) + y[1] * h0 * (h0 + 3.0 * h1) / (6.0 * h1)
        - y[2] * h0.powi(3) / (6.0 * h1 * (h0 + h1));
    let second = -y[0] * h1.powi(3) / (6.0 * h0 * (h0 + h1))
        + y[1] * h1 * (3.0 * h0 + h1) / (6.0 * h0)
        + y[2] * h1 * (3.0 * h0 + 2.0 * h1) / (6.0 * (h0 + h1));
    (first, second)
}

/// Running integral `∫_{s₀}^{sᵢ} y ds` at every grid point. With an odd
/// number of intervals the last one uses the quadratic through the final
/// three samples.
pub fn cumulative_simpson(s: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if s.len() != y.len() {
        return Err(QabError::invalid("quadrature grid and values differ in length"));
    }
    let n = s.len();
    if n < 2 {
        return Err(QabError::invalid("quadrature needs at least two samples"));
    }
    let mut cum = vec![0.0; n];
    if n == 2 {
        cum[1] = 0.5 * (s[1] - s[0]) * (y[0] + y[1]);
        return Ok(cum);
    }
    let mut i = 0;
    while i + 2 < n {
        let (a, b) = pair_weights(s[i + 1] - s[i], s[i + 2] - s[i + 1], [y[i], y[i + 1], y[i + 2]]);
        cum[i + 1] = cum[i] + a;
        cum[i + 2] = cum[i] + a + b;
        i += 2;
    }
    if i + 1 < n {
        let j = n - 3;
        let (_, b) = pair_weights(s[j + 1] - s[j], s[j + 2] - s[j + 1], [y[j], y[j + 1], y[j + 2]]);
        cum[n - 1] = cum[n - 2] + b;
    }
    Ok(cum)
}

/// `∫ y ds` over the whole grid.
pub fn simpson(s: &[f64], y: &[f64]) -> Result<f64> {
    Ok(*cumulative_simpson(s, y)?.last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics_on_even_grids() {
        let s: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = s.iter().map(|x| x * x * x - x + 2.0).collect();
        assert!((simpson(&s, &y).unwrap() - (0.25 - 0.5 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn odd_interval_count_and_nonuniform() {
        let s: Vec<f64> = (0..=7).map(|i| (i as f64 / 7.0).powi(2)).collect();
        let y: Vec<f64> = s.iter().map(|x| x * x).collect();
        assert!((simpson(&s, &y).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let cum = cumulative_simpson(&s, &y).unwrap();
        for (x, c) in s.iter().zip(cum) {
            assert!((c - x.powi(3) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mean_of_identity() {
        let s: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        assert!((simpson(&s, &s).unwrap() - 0.5).abs() < 1e-15);
    }
}
