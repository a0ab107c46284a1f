//! Scale-invariance checks.
//!
//! Three checks work at the utility level on randomly sampled states
//! (populations y, route rates Λ):
//!
//! - `check_iso_elastic`: the preference order between two states survives
//!   scaling every rate, or every population, by a common factor.
//! - `check_homogeneity`: scaling rates acts affinely on the utility value,
//!   with slope a^(1−α) and offset 0 (α ≠ 1), or slope 1 and offset
//!   mean-weight·ln a (α = 1). For profiles outside that family the check
//!   hunts for two samples whose implied affine maps disagree.
//! - `check_access_scalability`: ordering of candidate populations at a fixed
//!   allocation survives population scaling, and the two-point population
//!   selection commutes with scaling populations and allocation together.
//!
//! Two checks work at the optimizer level:
//!
//! - `check_flow_scalability`: the optimal allocation is unchanged when every
//!   flow count is scaled by a.
//! - `check_capacity_scaling`: scaling capacities by a scales the optimal
//!   allocation by a.
//!
//! Reports never hide solver failures: a non-converged solve turns the trial
//! into an `inconclusive` witness instead of a pass. Sampling uses one
//! pseudorandom stream per sample index, so reports are reproducible and
//! independent of evaluation order.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::net::{scale_capacity, Allocation, FlowPopulation, Topology};
use crate::solver::{select_flow_population, solve_num, SolverConfig};
use crate::utility::{network_utility, NetworkUtilityProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    IsoElastic,
    FlowScalable,
    CapacityScaling,
    AccessScalable,
    Homogeneity,
}

impl Property {
    pub fn name(&self) -> &'static str {
        match self {
            Property::IsoElastic => "iso-elasticity",
            Property::FlowScalable => "flow-scalability",
            Property::CapacityScaling => "capacity-scaling",
            Property::AccessScalable => "access-scalability",
            Property::Homogeneity => "homogeneity",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ConsistentWithProperty,
    Violated,
}

/// One recorded failure (or non-convergence) with enough context to rerun it.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub sample: usize,
    pub a: f64,
    pub base: f64,
    pub scaled: f64,
    pub deviation: f64,
    pub kind: String,
}

#[derive(Debug, Clone)]
pub struct SampleConfig {
    pub n_pairs: usize,
    pub a_grid: Vec<f64>,
    /// Sampled route rates Λ_r.
    pub rate_range: (f64, f64),
    /// Sampled flow counts y_r.
    pub pop_range: (f64, f64),
    pub seed: u64,
    /// Minimum utility gap (relative to value magnitude) for a pair to count
    /// as strictly ordered; closer pairs are skipped.
    pub gap_tol: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n_pairs: 1000,
            a_grid: vec![0.1, 0.5, 2.0, 10.0],
            rate_range: (0.05, 20.0),
            pop_range: (0.1, 50.0),
            seed: 0,
            gap_tol: 1e-9,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::InvalidConfig("n_pairs must be at least 1".into()));
        }
        if self.a_grid.is_empty() {
            return Err(Error::InvalidConfig("a_grid must be non-empty".into()));
        }
        for &a in &self.a_grid {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidConfig(format!("a_grid entries must be positive, got {a}")));
            }
        }
        for (name, (lo, hi)) in [("rate_range", self.rate_range), ("pop_range", self.pop_range)] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must satisfy 0 < lo < hi, got ({lo}, {hi})")));
            }
        }
        if !(self.gap_tol > 0.0) || !self.gap_tol.is_finite() {
            return Err(Error::InvalidConfig(format!("gap_tol must be positive, got {}", self.gap_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub property: Property,
    pub pairs_tested: usize,
    pub pairs_skipped: usize,
    pub violations: Vec<Witness>,
    /// Trials that could not be evaluated (solver gave up); never silent.
    pub inconclusive: Vec<Witness>,
    pub max_deviation: f64,
    pub verdict: Verdict,
}

impl CheckReport {
    fn new(property: Property) -> Self {
        CheckReport {
            property,
            pairs_tested: 0,
            pairs_skipped: 0,
            violations: Vec::new(),
            inconclusive: Vec::new(),
            max_deviation: 0.0,
            verdict: Verdict::ConsistentWithProperty,
        }
    }

    fn finalize(mut self) -> Self {
        self.verdict = if self.violations.is_empty() {
            Verdict::ConsistentWithProperty
        } else {
            Verdict::Violated
        };
        self
    }

    /// CI contract: 0 consistent, 3 violated, 4 inconclusive.
    pub fn exit_code(&self) -> i32 {
        if !self.violations.is_empty() {
            3
        } else if !self.inconclusive.is_empty() {
            4
        } else {
            0
        }
    }
}

/// Stream seed for sample `index`: reports stay identical however samples are
/// scheduled.
fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    // 53 mantissa bits of the raw draw, mapped into [lo, hi).
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0);
    lo + (hi - lo) * u
}

fn draw(rng: &mut ChaCha8Rng, range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, range)).collect()
}

/// Gaps are compared against gap_tol scaled by the value magnitude, so huge
/// utility values (small rates at large α) cannot smuggle roundoff noise in
/// as an ordering.
fn gap_scale(u1: f64, u2: f64) -> f64 {
    u1.abs().max(u2.abs()).max(1.0)
}

struct OrderOutcome {
    skipped: bool,
    witness: Option<Witness>,
}

fn order_preserved(
    sample: usize,
    a: f64,
    base_gap: f64,
    base_scale: f64,
    s1: f64,
    s2: f64,
    gap_tol: f64,
    kind: &str,
) -> OrderOutcome {
    let scaled_gap = s1 - s2;
    if base_gap.abs() < gap_tol * base_scale || scaled_gap.abs() < gap_tol * gap_scale(s1, s2) {
        return OrderOutcome { skipped: true, witness: None };
    }
    let witness = if base_gap > 0.0 && scaled_gap < 0.0 || base_gap < 0.0 && scaled_gap > 0.0 {
        Some(Witness {
            sample,
            a,
            base: base_gap,
            scaled: scaled_gap,
            deviation: base_gap.abs().min(scaled_gap.abs()),
            kind: format!("order-flip-{kind}"),
        })
    } else {
        None
    };
    OrderOutcome { skipped: false, witness }
}

/// Preference order between two sampled states must survive scaling all rates
/// by a, and separately scaling all populations by a.
pub fn check_iso_elastic(profile: &NetworkUtilityProfile, cfg: &SampleConfig) -> Result<CheckReport> {
    cfg.validate()?;
    profile.validate()?;
    let n = profile.len();
    if n == 0 {
        return Err(Error::InvalidInput("profile must cover at least one route".into()));
    }
    let mut rep = CheckReport::new(Property::IsoElastic);
    for i in 0..cfg.n_pairs {
        let mut rng = stream_rng(cfg.seed, i as u64);
        let y1 = FlowPopulation::new(draw(&mut rng, cfg.pop_range, n));
        let l1 = Allocation::new(draw(&mut rng, cfg.rate_range, n));
        let y2 = FlowPopulation::new(draw(&mut rng, cfg.pop_range, n));
        let l2 = Allocation::new(draw(&mut rng, cfg.rate_range, n));
        let u1 = network_utility(profile, &y1, &l1)?;
        let u2 = network_utility(profile, &y2, &l2)?;
        let base_gap = u1 - u2;
        let base_scale = gap_scale(u1, u2);
        for &a in &cfg.a_grid {
            let pairs = [
                (network_utility(profile, &y1, &l1.scaled(a))?, network_utility(profile, &y2, &l2.scaled(a))?, "rate"),
                (network_utility(profile, &y1.scaled(a), &l1)?, network_utility(profile, &y2.scaled(a), &l2)?, "population"),
            ];
            for (s1, s2, kind) in pairs {
                let out = order_preserved(i, a, base_gap, base_scale, s1, s2, cfg.gap_tol, kind);
                if out.skipped {
                    rep.pairs_skipped += 1;
                } else {
                    rep.pairs_tested += 1;
                    if let Some(w) = out.witness {
                        rep.max_deviation = rep.max_deviation.max(w.deviation);
                        rep.violations.push(w);
                    }
                }
            }
        }
    }
    Ok(rep.finalize())
}

/// Rate scaling must act affinely on the utility value. Profiles with one
/// common α are held to the closed-form slope and offset within 1e−9; other
/// profiles are searched for two samples whose implied affine maps disagree
/// by more than 1e−6.
pub fn check_homogeneity(profile: &NetworkUtilityProfile, cfg: &SampleConfig) -> Result<CheckReport> {
    cfg.validate()?;
    profile.validate()?;
    let n = profile.len();
    if n == 0 {
        return Err(Error::InvalidInput("profile must cover at least one route".into()));
    }
    let mut rep = CheckReport::new(Property::Homogeneity);

    if let Some(alpha) = profile.uniform_alpha() {
        for i in 0..cfg.n_pairs {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let y = FlowPopulation::new(draw(&mut rng, cfg.pop_range, n));
            let lam = Allocation::new(draw(&mut rng, cfg.rate_range, n));
            let base = network_utility(profile, &y, &lam)?;
            for &a in &cfg.a_grid {
                let actual = network_utility(profile, &y, &lam.scaled(a))?;
                let (expected, deviation) = if alpha == 1.0 {
                    let e = base + profile.mean_weight(&y)? * a.ln();
                    (e, (actual - e).abs())
                } else {
                    let e = a.powf(1.0 - alpha) * base;
                    let denom = actual.abs().max(e.abs()).max(f64::MIN_POSITIVE);
                    (e, (actual - e).abs() / denom)
                };
                rep.pairs_tested += 1;
                rep.max_deviation = rep.max_deviation.max(deviation);
                if deviation > 1e-9 {
                    rep.violations.push(Witness {
                        sample: i,
                        a,
                        base: expected,
                        scaled: actual,
                        deviation,
                        kind: "affine-mismatch".into(),
                    });
                }
            }
        }
    } else {
        // Two states pin down the affine map (slope, offset) for each a; all
        // samples must imply the same map. The first non-degenerate sample is
        // the reference.
        let mut reference: Vec<Option<(f64, f64)>> = vec![None; cfg.a_grid.len()];
        for i in 0..cfg.n_pairs {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let y1 = FlowPopulation::new(draw(&mut rng, cfg.pop_range, n));
            let l1 = Allocation::new(draw(&mut rng, cfg.rate_range, n));
            let y2 = FlowPopulation::new(draw(&mut rng, cfg.pop_range, n));
            let l2 = Allocation::new(draw(&mut rng, cfg.rate_range, n));
            let b1 = network_utility(profile, &y1, &l1)?;
            let b2 = network_utility(profile, &y2, &l2)?;
            if (b1 - b2).abs() < cfg.gap_tol * gap_scale(b1, b2) {
                rep.pairs_skipped += cfg.a_grid.len();
                continue;
            }
            for (k, &a) in cfg.a_grid.iter().enumerate() {
                let s1 = network_utility(profile, &y1, &l1.scaled(a))?;
                let s2 = network_utility(profile, &y2, &l2.scaled(a))?;
                let slope = (s1 - s2) / (b1 - b2);
                let offset = s1 - slope * b1;
                rep.pairs_tested += 1;
                match reference[k] {
                    None => reference[k] = Some((slope, offset)),
                    Some((rs, ro)) => {
                        let deviation = (slope - rs).abs().max((offset - ro).abs());
                        rep.max_deviation = rep.max_deviation.max(deviation);
                        if deviation > 1e-6 {
                            let (base, scaled) = if (slope - rs).abs() >= (offset - ro).abs() {
                                (rs, slope)
                            } else {
                                (ro, offset)
                            };
                            rep.violations.push(Witness {
                                sample: i,
                                a,
                                base,
                                scaled,
                                deviation,
                                kind: "affine-mismatch".into(),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rep.finalize())
}

/// Ordering of candidate populations at a fixed allocation must survive
/// scaling the populations; the two-point selection must also commute with
/// scaling populations and allocation jointly.
pub fn check_access_scalability(profile: &NetworkUtilityProfile, cfg: &SampleConfig) -> Result<CheckReport> {
    cfg.validate()?;
    profile.validate()?;
    let n = profile.len();
    if n == 0 {
        return Err(Error::InvalidInput("profile must cover at least one route".into()));
    }
    let mut rep = CheckReport::new(Property::AccessScalable);
    for i in 0..cfg.n_pairs {
        let mut rng = stream_rng(cfg.seed, i as u64);
        let y1 = FlowPopulation::new(draw(&mut rng, cfg.pop_range, n));
        let y2 = FlowPopulation::new(draw(&mut rng, cfg.pop_range, n));
        let lam = Allocation::new(draw(&mut rng, cfg.rate_range, n));
        let u1 = network_utility(profile, &y1, &lam)?;
        let u2 = network_utility(profile, &y2, &lam)?;
        let base_gap = u1 - u2;
        let base_scale = gap_scale(u1, u2);
        let candidates = [y1.clone(), y2.clone()];
        let sel_base = select_flow_population(profile, &lam, &candidates)?;
        for &a in &cfg.a_grid {
            let s1 = network_utility(profile, &y1.scaled(a), &lam)?;
            let s2 = network_utility(profile, &y2.scaled(a), &lam)?;
            let out = order_preserved(i, a, base_gap, base_scale, s1, s2, cfg.gap_tol, "population");
            if out.skipped {
                rep.pairs_skipped += 1;
                continue;
            }
            rep.pairs_tested += 1;
            if let Some(w) = out.witness {
                rep.max_deviation = rep.max_deviation.max(w.deviation);
                rep.violations.push(w);
            }
            let scaled_candidates = [y1.scaled(a), y2.scaled(a)];
            let sel_scaled = select_flow_population(profile, &lam.scaled(a), &scaled_candidates)?;
            if sel_scaled != sel_base {
                let deviation = base_gap.abs().min((s1 - s2).abs());
                rep.max_deviation = rep.max_deviation.max(deviation);
                rep.violations.push(Witness {
                    sample: i,
                    a,
                    base: sel_base as f64,
                    scaled: sel_scaled as f64,
                    deviation,
                    kind: "selection-shift".into(),
                });
            }
        }
    }
    Ok(rep.finalize())
}

pub(crate) struct ScaleTrial {
    pub a: f64,
    pub deviation: f64,
    pub violated: bool,
    pub inconclusive: bool,
    pub witness: Option<Witness>,
}

fn soft_solve(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    solver: &SolverConfig,
) -> Result<std::result::Result<crate::solver::SolveResult, f64>> {
    match solve_num(topology, profile, y, solver) {
        Ok(r) => Ok(Ok(r)),
        Err(Error::NotConverged { residual, .. }) => Ok(Err(residual)),
        Err(e) => Err(e),
    }
}

pub(crate) fn flow_scaling_trials(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    cfg: &SampleConfig,
    solver: &SolverConfig,
) -> Result<Vec<ScaleTrial>> {
    cfg.validate()?;
    solver.validate()?;
    let threshold = (10.0 * solver.primal_tol).max(1e-4);
    let base = soft_solve(topology, profile, y, solver)?;
    let mut trials = Vec::with_capacity(cfg.a_grid.len());
    for (k, &a) in cfg.a_grid.iter().enumerate() {
        let scaled = soft_solve(topology, profile, &y.scaled(a), solver)?;
        let trial = match (&base, &scaled) {
            (Ok(b), Ok(s)) => {
                let deviation = b.allocation.linf_distance(&s.allocation);
                let violated = deviation > threshold;
                let witness = violated.then(|| {
                    let r = worst_route(&b.allocation, &s.allocation, 1.0);
                    Witness {
                        sample: k,
                        a,
                        base: b.allocation.rates[r],
                        scaled: s.allocation.rates[r],
                        deviation,
                        kind: format!("allocation-shift:{}", topology.routes()[r].id),
                    }
                });
                ScaleTrial { a, deviation, violated, inconclusive: false, witness }
            }
            (Err(res), _) | (_, Err(res)) => not_converged_trial(k, a, *res),
        };
        trials.push(trial);
    }
    Ok(trials)
}

pub(crate) fn capacity_scaling_trials(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    cfg: &SampleConfig,
    solver: &SolverConfig,
) -> Result<Vec<ScaleTrial>> {
    cfg.validate()?;
    solver.validate()?;
    let threshold = (10.0 * solver.primal_tol).max(1e-4);
    let base = soft_solve(topology, profile, y, solver)?;
    let mut trials = Vec::with_capacity(cfg.a_grid.len());
    for (k, &a) in cfg.a_grid.iter().enumerate() {
        let scaled_topology = scale_capacity(topology, a)?;
        let scaled = soft_solve(&scaled_topology, profile, y, solver)?;
        let trial = match (&base, &scaled) {
            (Ok(b), Ok(s)) => {
                // Compare a·Λ(y;C) with Λ(y;aC), normalized by a.
                let deviation = b.allocation.scaled(a).linf_distance(&s.allocation) / a;
                let violated = deviation > threshold;
                let witness = violated.then(|| {
                    let r = worst_route(&b.allocation, &s.allocation, a);
                    Witness {
                        sample: k,
                        a,
                        base: a * b.allocation.rates[r],
                        scaled: s.allocation.rates[r],
                        deviation,
                        kind: format!("allocation-shift:{}", topology.routes()[r].id),
                    }
                });
                ScaleTrial { a, deviation, violated, inconclusive: false, witness }
            }
            (Err(res), _) | (_, Err(res)) => not_converged_trial(k, a, *res),
        };
        trials.push(trial);
    }
    Ok(trials)
}

fn worst_route(base: &Allocation, scaled: &Allocation, a: f64) -> usize {
    let mut worst = 0;
    let mut gap = -1.0;
    for (r, (b, s)) in base.rates.iter().zip(&scaled.rates).enumerate() {
        let d = (a * b - s).abs();
        if d > gap {
            gap = d;
            worst = r;
        }
    }
    worst
}

fn not_converged_trial(k: usize, a: f64, residual: f64) -> ScaleTrial {
    ScaleTrial {
        a,
        deviation: residual,
        violated: false,
        inconclusive: true,
        witness: Some(Witness {
            sample: k,
            a,
            base: 0.0,
            scaled: 0.0,
            deviation: residual,
            kind: "not-converged".into(),
        }),
    }
}

fn trials_to_report(property: Property, trials: Vec<ScaleTrial>) -> CheckReport {
    let mut rep = CheckReport::new(property);
    for t in trials {
        if t.inconclusive {
            if let Some(w) = t.witness {
                rep.inconclusive.push(w);
            }
            continue;
        }
        rep.pairs_tested += 1;
        rep.max_deviation = rep.max_deviation.max(t.deviation);
        if let Some(w) = t.witness {
            rep.violations.push(w);
        }
    }
    rep.finalize()
}

/// Optimal allocation must not move when all flow counts are scaled by a.
pub fn check_flow_scalability(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    cfg: &SampleConfig,
    solver: &SolverConfig,
) -> Result<CheckReport> {
    let trials = flow_scaling_trials(topology, profile, y, cfg, solver)?;
    Ok(trials_to_report(Property::FlowScalable, trials))
}

/// Optimal allocation must scale proportionally when capacities are scaled.
pub fn check_capacity_scaling(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    cfg: &SampleConfig,
    solver: &SolverConfig,
) -> Result<CheckReport> {
    let trials = capacity_scaling_trials(topology, profile, y, cfg, solver)?;
    Ok(trials_to_report(Property::CapacityScaling, trials))
}
