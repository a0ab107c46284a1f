//! Per-flow utility functions and the population-weighted network objective.
//!
//! Every kind is strictly increasing and strictly concave on (0, ∞):
//! - `AlphaFair { alpha, weight }`: w·x^(1−α)/(1−α), with w·ln x exactly at α = 1
//! - `Exponential { lambda }`: −e^(−λx), whose derivative range is (0, λ), not (0, ∞)
//! - `LogShifted { shift }`: ln(s + x), derivative range (0, 1/s)
//!
//! The network objective sums y_r·U_r(Λ_r/y_r) over routes with y_r > 0;
//! `Average` mode divides by the total population, `Aggregate` does not.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec {
    AlphaFair { alpha: f64, weight: f64 },
    Exponential { lambda: f64 },
    LogShifted { shift: f64 },
}

impl UtilitySpec {
    pub fn alpha_fair(alpha: f64, weight: f64) -> Self {
        UtilitySpec::AlphaFair { alpha, weight }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("utility {name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            UtilitySpec::AlphaFair { alpha, weight } => {
                check("alpha", alpha)?;
                check("weight", weight)
            }
            UtilitySpec::Exponential { lambda } => check("lambda", lambda),
            UtilitySpec::LogShifted { shift } => check("shift", shift),
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::NonPositiveArgument(x));
        }
        Ok(match *self {
            UtilitySpec::AlphaFair { alpha, weight } => {
                if alpha == 1.0 {
                    weight * x.ln()
                } else {
                    weight * x.powf(1.0 - alpha) / (1.0 - alpha)
                }
            }
            UtilitySpec::Exponential { lambda } => -(-lambda * x).exp(),
            UtilitySpec::LogShifted { shift } => (shift + x).ln(),
        })
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::NonPositiveArgument(x));
        }
        Ok(match *self {
            UtilitySpec::AlphaFair { alpha, weight } => weight * x.powf(-alpha),
            UtilitySpec::Exponential { lambda } => lambda * (-lambda * x).exp(),
            UtilitySpec::LogShifted { shift } => 1.0 / (shift + x),
        })
    }

    pub fn second_deriv(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::NonPositiveArgument(x));
        }
        Ok(match *self {
            UtilitySpec::AlphaFair { alpha, weight } => -alpha * weight * x.powf(-alpha - 1.0),
            UtilitySpec::Exponential { lambda } => -lambda * lambda * (-lambda * x).exp(),
            UtilitySpec::LogShifted { shift } => -1.0 / ((shift + x) * (shift + x)),
        })
    }

    /// x with deriv(x) = q, clamped to 0 when every x > 0 has deriv(x) < q.
    /// Closed form for the α-fair family; monotone bisection with a doubling
    /// upper bracket otherwise.
    pub fn inverse_deriv(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(Error::NonPositiveArgument(q));
        }
        if let UtilitySpec::AlphaFair { alpha, weight } = *self {
            return Ok((weight / q).powf(1.0 / alpha));
        }
        // The derivative is continuous and strictly decreasing with limit 0 at
        // ∞, so either it starts below q (the clamp case) or a bracket exists.
        let sup = match *self {
            UtilitySpec::Exponential { lambda } => lambda,
            UtilitySpec::LogShifted { shift } => 1.0 / shift,
            UtilitySpec::AlphaFair { .. } => unreachable!(),
        };
        if q >= sup {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.deriv(hi)? > q {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Ok(hi);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.deriv(mid)? > q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Finite limit of the value at x → 0⁺, or `None` when unbounded below.
    pub fn value_at_zero(&self) -> Option<f64> {
        match *self {
            UtilitySpec::AlphaFair { alpha, .. } => {
                if alpha < 1.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            UtilitySpec::Exponential { .. } => Some(-1.0),
            UtilitySpec::LogShifted { shift } => Some(shift.ln()),
        }
    }
}

/// Value/derivative callables for utilities supplied from outside the built-in
/// kinds. Consumed by the risk-aversion profiler; the solvers only accept
/// [`UtilitySpec`].
pub struct CustomUtility {
    pub value: Box<dyn Fn(f64) -> f64>,
    pub deriv: Box<dyn Fn(f64) -> f64>,
}

impl CustomUtility {
    pub fn new(
        value: impl Fn(f64) -> f64 + 'static,
        deriv: impl Fn(f64) -> f64 + 'static,
    ) -> Self {
        CustomUtility { value: Box::new(value), deriv: Box::new(deriv) }
    }
}

pub trait UtilityFn {
    fn value(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    /// Analytic second derivative when available; `None` falls back to
    /// differencing the first derivative.
    fn second_deriv(&self, x: f64) -> Option<f64> {
        let _ = x;
        None
    }
}

impl UtilityFn for UtilitySpec {
    fn value(&self, x: f64) -> f64 {
        UtilitySpec::value(self, x).unwrap_or(f64::NAN)
    }

    fn deriv(&self, x: f64) -> f64 {
        UtilitySpec::deriv(self, x).unwrap_or(f64::NAN)
    }

    fn second_deriv(&self, x: f64) -> Option<f64> {
        UtilitySpec::second_deriv(self, x).ok()
    }
}

impl UtilityFn for CustomUtility {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    Average,
    Aggregate,
}

/// One utility per route plus the aggregation mode.
#[derive(Debug, Clone)]
pub struct NetworkUtilityProfile {
    pub route_utilities: Vec<UtilitySpec>,
    pub mode: AggregationMode,
}

impl NetworkUtilityProfile {
    pub fn new(route_utilities: Vec<UtilitySpec>) -> Self {
        NetworkUtilityProfile { route_utilities, mode: AggregationMode::Average }
    }

    pub fn with_mode(mut self, mode: AggregationMode) -> Self {
        self.mode = mode;
        self
    }

    /// Same α-fair utility on every route.
    pub fn alpha_fair_uniform(n: usize, alpha: f64, weight: f64) -> Self {
        Self::new(vec![UtilitySpec::alpha_fair(alpha, weight); n])
    }

    pub fn len(&self) -> usize {
        self.route_utilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.route_utilities.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for u in &self.route_utilities {
            u.validate()?;
        }
        Ok(())
    }

    /// `Some(alpha)` when every route is α-fair with one common α (weights may
    /// differ). This is the family whose orderings survive scaling.
    pub fn uniform_alpha(&self) -> Option<f64> {
        let mut alpha = None;
        for u in &self.route_utilities {
            match u {
                UtilitySpec::AlphaFair { alpha: a, .. } => match alpha {
                    None => alpha = Some(*a),
                    Some(prev) if prev == *a => {}
                    Some(_) => return None,
                },
                _ => return None,
            }
        }
        alpha
    }

    /// Population-weighted mean of the α-fair weights, Σw_r·y_r / Σy_r.
    /// The additive constant that rate scaling produces at α = 1.
    pub fn mean_weight(&self, y: &FlowPopulation) -> Result<f64> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: y.len() });
        }
        let total = y.total();
        if total <= 0.0 {
            return Err(Error::ZeroPopulation);
        }
        let mut acc = 0.0;
        for (u, &c) in self.route_utilities.iter().zip(&y.counts) {
            let w = match u {
                UtilitySpec::AlphaFair { weight, .. } => *weight,
                _ => return Err(Error::InvalidInput("mean weight needs an all-α-fair profile".into())),
            };
            acc += w * c;
        }
        Ok(acc / total)
    }
}

use crate::net::{Allocation, FlowPopulation};

/// Population-weighted network utility. Routes with y_r = 0 contribute nothing
/// regardless of their rate; a rate of 0 on a populated route uses the value's
/// finite limit at 0 when one exists and is an error otherwise.
pub fn network_utility(
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    allocation: &Allocation,
) -> Result<f64> {
    let n = profile.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if allocation.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: allocation.len() });
    }
    let mut total = 0.0;
    let mut acc = 0.0;
    for (r, u) in profile.route_utilities.iter().enumerate() {
        let count = y.counts[r];
        if count == 0.0 {
            continue;
        }
        if !(count > 0.0) {
            return Err(Error::InvalidInput(format!("population for route index {r} is {count}")));
        }
        total += count;
        let rate = allocation.rates[r];
        if rate < 0.0 {
            return Err(Error::NonPositiveArgument(rate));
        }
        let x = rate / count;
        if x == 0.0 {
            match u.value_at_zero() {
                Some(v) => acc += count * v,
                None => return Err(Error::RateUndefined { route: r }),
            }
        } else {
            acc += count * u.value(x)?;
        }
    }
    match profile.mode {
        AggregationMode::Average => {
            if total == 0.0 {
                return Err(Error::ZeroPopulation);
            }
            Ok(acc / total)
        }
        AggregationMode::Aggregate => Ok(acc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn alpha_fair_values_and_derivatives() {
        // w·x^(1−α)/(1−α) at α=2, w=1, x=0.5 is −1/0.5 = −2.
        let u = UtilitySpec::alpha_fair(2.0, 1.0);
        assert_relative_eq!(u.value(0.5).unwrap(), -2.0, max_relative = 1e-15);
        // α=1 is the exact log branch.
        let u = UtilitySpec::alpha_fair(1.0, 3.0);
        assert_relative_eq!(u.value(2.0).unwrap(), 3.0 * 2f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(u.deriv(2.0).unwrap(), 1.5, max_relative = 1e-15);
        assert_relative_eq!(u.second_deriv(2.0).unwrap(), -0.75, max_relative = 1e-15);
        // α near 1 stays on the power branch, whose absolute values diverge;
        // only value differences approach the log.
        let u = UtilitySpec::alpha_fair(1.0 + 1e-9, 1.0);
        assert!(u.value(2.0).unwrap() < -1e8);
        let diff = u.value(2.0).unwrap() - u.value(1.0).unwrap();
        assert!((diff - 2f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn rejects_nonpositive_arguments() {
        let u = UtilitySpec::alpha_fair(2.0, 1.0);
        assert!(matches!(u.value(0.0), Err(Error::NonPositiveArgument(_))));
        assert!(matches!(u.deriv(-1.0), Err(Error::NonPositiveArgument(_))));
        assert!(matches!(u.inverse_deriv(0.0), Err(Error::NonPositiveArgument(_))));
        assert!(UtilitySpec::alpha_fair(0.0, 1.0).validate().is_err());
        assert!(UtilitySpec::alpha_fair(1.0, -2.0).validate().is_err());
        assert!(UtilitySpec::Exponential { lambda: 0.0 }.validate().is_err());
        assert!(UtilitySpec::LogShifted { shift: 0.0 }.validate().is_err());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let specs = [
            UtilitySpec::alpha_fair(0.5, 0.7),
            UtilitySpec::alpha_fair(1.0, 1.0),
            UtilitySpec::alpha_fair(2.0, 2.0),
            UtilitySpec::alpha_fair(5.0, 1.3),
            UtilitySpec::Exponential { lambda: 1.0 },
            UtilitySpec::LogShifted { shift: 1.0 },
        ];
        for u in specs {
            for x in [0.05, 0.3, 1.0, 4.0, 17.0] {
                let h = x * 1e-6;
                let fd = (u.value(x + h).unwrap() - u.value(x - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(u.deriv(x).unwrap(), fd, max_relative = 1e-6);
                let fd2 = (u.deriv(x + h).unwrap() - u.deriv(x - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(u.second_deriv(x).unwrap(), fd2, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn strictly_increasing_and_concave_on_samples() {
        let specs = [
            UtilitySpec::alpha_fair(0.5, 1.0),
            UtilitySpec::alpha_fair(1.0, 2.0),
            UtilitySpec::alpha_fair(3.0, 1.0),
            UtilitySpec::Exponential { lambda: 0.7 },
            UtilitySpec::LogShifted { shift: 0.5 },
        ];
        for u in specs {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..60 {
                let x = 0.03 * i as f64;
                let v = u.value(x).unwrap();
                assert!(v > prev, "not increasing at {x}");
                prev = v;
                assert!(u.deriv(x).unwrap() > 0.0);
                assert!(u.second_deriv(x).unwrap() < 0.0);
                // Midpoint concavity.
                let (a, b) = (x, x + 1.0);
                let mid = u.value(0.5 * (a + b)).unwrap();
                assert!(mid >= 0.5 * (u.value(a).unwrap() + u.value(b).unwrap()) - 1e-12);
            }
        }
    }

    #[test]
    fn inverse_deriv_inverts_deriv() {
        let specs = [
            UtilitySpec::alpha_fair(0.5, 0.7),
            UtilitySpec::alpha_fair(2.0, 3.0),
            UtilitySpec::Exponential { lambda: 2.0 },
            UtilitySpec::LogShifted { shift: 0.4 },
        ];
        for u in specs {
            for x in [0.01, 0.5, 1.0, 8.0, 120.0] {
                let q = u.deriv(x).unwrap();
                assert_relative_eq!(u.inverse_deriv(q).unwrap(), x, max_relative = 1e-9);
            }
        }
        // Above the derivative's range the inverse clamps to 0.
        assert_eq!(UtilitySpec::Exponential { lambda: 1.0 }.inverse_deriv(1.0).unwrap(), 0.0);
        assert_eq!(UtilitySpec::Exponential { lambda: 1.0 }.inverse_deriv(2.5).unwrap(), 0.0);
        assert_eq!(UtilitySpec::LogShifted { shift: 2.0 }.inverse_deriv(0.5).unwrap(), 0.0);
    }

    #[test]
    fn zero_limits() {
        assert_eq!(UtilitySpec::alpha_fair(0.5, 2.0).value_at_zero(), Some(0.0));
        assert_eq!(UtilitySpec::alpha_fair(1.0, 1.0).value_at_zero(), None);
        assert_eq!(UtilitySpec::alpha_fair(2.0, 1.0).value_at_zero(), None);
        assert_eq!(UtilitySpec::Exponential { lambda: 3.0 }.value_at_zero(), Some(-1.0));
        assert_eq!(UtilitySpec::LogShifted { shift: 1.0 }.value_at_zero(), Some(0.0));
    }

    #[test]
    fn network_utility_weighs_by_population() {
        // Only the populated route counts: (1/2)·2·ln(4/2) = ln 2.
        let profile = NetworkUtilityProfile::alpha_fair_uniform(2, 1.0, 1.0);
        let y = FlowPopulation::new(vec![2.0, 0.0]);
        let lam = Allocation::new(vec![4.0, 0.0]);
        assert_relative_eq!(network_utility(&profile, &y, &lam).unwrap(), 2f64.ln(), max_relative = 1e-15);

        let aggregate = profile.clone().with_mode(AggregationMode::Aggregate);
        assert_relative_eq!(
            network_utility(&aggregate, &y, &lam).unwrap(),
            2.0 * 2f64.ln(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn network_utility_edge_cases() {
        let profile = NetworkUtilityProfile::alpha_fair_uniform(2, 1.0, 1.0);
        let zeros = FlowPopulation::new(vec![0.0, 0.0]);
        let lam = Allocation::new(vec![1.0, 1.0]);
        assert!(matches!(network_utility(&profile, &zeros, &lam), Err(Error::ZeroPopulation)));

        let aggregate = profile.clone().with_mode(AggregationMode::Aggregate);
        assert_eq!(network_utility(&aggregate, &zeros, &lam).unwrap(), 0.0);

        // Rate 0 on a populated route: error for log, finite limit for α < 1.
        let y = FlowPopulation::new(vec![1.0, 1.0]);
        let lam0 = Allocation::new(vec![0.0, 1.0]);
        assert!(matches!(
            network_utility(&profile, &y, &lam0),
            Err(Error::RateUndefined { route: 0 })
        ));
        let bounded = NetworkUtilityProfile::alpha_fair_uniform(2, 0.5, 1.0);
        assert_relative_eq!(network_utility(&bounded, &y, &lam0).unwrap(), 1.0, max_relative = 1e-15);

        assert!(matches!(
            network_utility(&profile, &FlowPopulation::new(vec![1.0]), &lam),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rate_scaling_shifts_log_utilities_by_mean_weight() {
        let profile = NetworkUtilityProfile::new(vec![
            UtilitySpec::alpha_fair(1.0, 2.0),
            UtilitySpec::alpha_fair(1.0, 0.5),
        ]);
        let y = FlowPopulation::new(vec![3.0, 1.0]);
        let lam = Allocation::new(vec![0.7, 2.2]);
        let a = 5.0;
        let base = network_utility(&profile, &y, &lam).unwrap();
        let scaled = network_utility(&profile, &y, &lam.scaled(a)).unwrap();
        let mean_w = profile.mean_weight(&y).unwrap();
        assert_relative_eq!(scaled, base + mean_w * a.ln(), epsilon = 1e-12);
        assert_relative_eq!(mean_w, (2.0 * 3.0 + 0.5) / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn uniform_alpha_detection() {
        let p = NetworkUtilityProfile::new(vec![
            UtilitySpec::alpha_fair(2.0, 1.0),
            UtilitySpec::alpha_fair(2.0, 5.0),
        ]);
        assert_eq!(p.uniform_alpha(), Some(2.0));
        let p = NetworkUtilityProfile::new(vec![
            UtilitySpec::alpha_fair(1.0, 1.0),
            UtilitySpec::alpha_fair(2.0, 1.0),
        ]);
        assert_eq!(p.uniform_alpha(), None);
        let p = NetworkUtilityProfile::new(vec![
            UtilitySpec::alpha_fair(2.0, 1.0),
            UtilitySpec::Exponential { lambda: 1.0 },
        ]);
        assert_eq!(p.uniform_alpha(), None);
    }
}
