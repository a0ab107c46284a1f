//! Relative risk aversion profiling: recover (α, w) from any increasing
//! concave utility through rra(x) = −x·U″(x)/U′(x). Constant rra pins the
//! utility to the α-fair family; w is read off U′(1).

use crate::error::{Error, Result};
use crate::utility::UtilityFn;

#[derive(Debug, Clone)]
pub struct RraProfile {
    pub x_grid: Vec<f64>,
    pub rra_values: Vec<f64>,
    /// Median of rra over the grid.
    pub alpha_hat: f64,
    /// U′(1); equals the weight for power-law marginals.
    pub w_hat: f64,
    /// Whether rra stays within 1e−3·max(1, alpha_hat) of the median.
    pub is_constant: bool,
}

/// Grid requirements: all points positive, at least 8 of them, spanning two
/// decades or more. The second derivative comes from the utility when it has
/// one, otherwise from a central difference with relative step 1e−3 plus one
/// Richardson refinement (plain differencing of U′ loses about half the
/// significand; the refinement buys back enough for the 1e−3 band).
pub fn rra_profile(utility: &dyn UtilityFn, x_grid: &[f64]) -> Result<RraProfile> {
    for &x in x_grid {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::NonPositiveGridPoint(x));
        }
    }
    if x_grid.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "x_grid needs at least 8 points, got {}",
            x_grid.len()
        )));
    }
    let (lo, hi) = x_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi / lo < 100.0 {
        return Err(Error::InvalidInput(format!(
            "x_grid must span at least two decades, got [{lo}, {hi}]"
        )));
    }

    let second = |x: f64| -> f64 {
        if let Some(v) = utility.second_deriv(x) {
            return v;
        }
        let diff = |h: f64| (utility.deriv(x + h) - utility.deriv(x - h)) / (2.0 * h);
        let h = x * 1e-3;
        let coarse = diff(h);
        let fine = diff(h / 2.0);
        (4.0 * fine - coarse) / 3.0
    };

    let rra_values: Vec<f64> = x_grid
        .iter()
        .map(|&x| -x * second(x) / utility.deriv(x))
        .collect();
    let alpha_hat = median(&rra_values);
    let w_hat = utility.deriv(1.0);
    let tolerance = 1e-3 * alpha_hat.abs().max(1.0);
    let is_constant = rra_values.iter().all(|v| (v - alpha_hat).abs() <= tolerance);
    Ok(RraProfile {
        x_grid: x_grid.to_vec(),
        rra_values,
        alpha_hat,
        w_hat,
        is_constant,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("rra values are finite"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Log-spaced grid covering [lo, hi], convenient for callers.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{CustomUtility, UtilitySpec};
    use approx::assert_relative_eq;

    fn grid() -> Vec<f64> {
        log_grid(0.1, 10.0, 16)
    }

    #[test]
    fn power_law_marginals_read_back_their_parameters() {
        for (alpha, w) in [(0.5, 1.0), (1.0, 3.0), (2.0, 1.0), (5.0, 0.7)] {
            let u = UtilitySpec::alpha_fair(alpha, w);
            let p = rra_profile(&u, &grid()).unwrap();
            assert!((p.alpha_hat - alpha).abs() <= 1e-3, "alpha {alpha}: {}", p.alpha_hat);
            assert!((p.w_hat - w).abs() <= 1e-6, "w {w}: {}", p.w_hat);
            assert!(p.is_constant);
            for v in &p.rra_values {
                assert_relative_eq!(*v, alpha, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn exponential_curvature_grows_linearly() {
        let u = UtilitySpec::Exponential { lambda: 1.0 };
        let p = rra_profile(&u, &grid()).unwrap();
        assert!(!p.is_constant);
        for (x, v) in p.x_grid.iter().zip(&p.rra_values) {
            assert_relative_eq!(*v, *x, max_relative = 1e-3);
        }
    }

    #[test]
    fn shifted_log_curvature_saturates_below_one() {
        let u = UtilitySpec::LogShifted { shift: 1.0 };
        let p = rra_profile(&u, &grid()).unwrap();
        assert!(!p.is_constant);
        // rra(x) = x/(1+x) for this utility.
        for (x, v) in p.x_grid.iter().zip(&p.rra_values) {
            assert_relative_eq!(*v, x / (1.0 + x), max_relative = 1e-6);
        }
    }

    #[test]
    fn finite_difference_fallback_stays_in_band() {
        // Same curve passed as bare callables: no analytic second derivative.
        let u = CustomUtility::new(|x: f64| -(-x).exp(), |x: f64| (-x).exp());
        let p = rra_profile(&u, &grid()).unwrap();
        assert!(!p.is_constant);
        for (x, v) in p.x_grid.iter().zip(&p.rra_values) {
            assert_relative_eq!(*v, *x, max_relative = 1e-3);
        }

        let fair = CustomUtility::new(|x: f64| x.ln(), |x: f64| 1.0 / x);
        let p = rra_profile(&fair, &grid()).unwrap();
        assert!((p.alpha_hat - 1.0).abs() <= 1e-3);
        assert!((p.w_hat - 1.0).abs() <= 1e-6);
        assert!(p.is_constant);
    }

    #[test]
    fn rejects_bad_grids() {
        let u = UtilitySpec::alpha_fair(1.0, 1.0);
        assert!(matches!(
            rra_profile(&u, &[1.0, 2.0, 0.0, 4.0, 5.0, 6.0, 7.0, 800.0]),
            Err(Error::NonPositiveGridPoint(_))
        ));
        assert!(rra_profile(&u, &log_grid(0.1, 10.0, 7)).is_err());
        assert!(rra_profile(&u, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).is_err());
    }
}
