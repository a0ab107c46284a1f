//! Battery runner: flow-scalability trials over a set of topologies and
//! utility families, summarized row by row. The output is labeled for what it
//! is, sampled evidence. A clean battery supports the scalability claim for
//! the power-law family on these topologies; it proves nothing beyond them.

use crate::checks::{flow_scaling_trials, SampleConfig, ScaleTrial};
use crate::error::Result;
use crate::io::Scenario;
use crate::net::{FlowPopulation, Topology};
use crate::solver::SolverConfig;
use crate::utility::{NetworkUtilityProfile, UtilitySpec};

pub const EVIDENCE_NOTE: &str = "empirical evidence, not proof";

/// Utility family applied uniformly to however many routes a topology has.
#[derive(Debug, Clone)]
pub enum ProfileTemplate {
    AlphaFair { alpha: f64, weight: f64 },
    Exponential { lambda: f64 },
    LogShifted { shift: f64 },
    /// Alternating exponents by route index; breaks the common-α premise.
    MixedAlpha { even: f64, odd: f64 },
}

impl ProfileTemplate {
    pub fn build(&self, n: usize) -> NetworkUtilityProfile {
        let utilities = match *self {
            ProfileTemplate::AlphaFair { alpha, weight } => {
                vec![UtilitySpec::alpha_fair(alpha, weight); n]
            }
            ProfileTemplate::Exponential { lambda } => {
                vec![UtilitySpec::Exponential { lambda }; n]
            }
            ProfileTemplate::LogShifted { shift } => vec![UtilitySpec::LogShifted { shift }; n],
            ProfileTemplate::MixedAlpha { even, odd } => (0..n)
                .map(|i| UtilitySpec::alpha_fair(if i % 2 == 0 { even } else { odd }, 1.0))
                .collect(),
        };
        NetworkUtilityProfile::new(utilities)
    }

    pub fn label(&self) -> String {
        match self {
            ProfileTemplate::AlphaFair { alpha, .. } => format!("alpha-{alpha}"),
            ProfileTemplate::Exponential { lambda } => format!("exponential-{lambda}"),
            ProfileTemplate::LogShifted { shift } => format!("log-shifted-{shift}"),
            ProfileTemplate::MixedAlpha { even, odd } => format!("mixed-alpha-{even}-{odd}"),
        }
    }

    pub fn expects_violation(&self) -> bool {
        !matches!(self, ProfileTemplate::AlphaFair { .. })
    }
}

/// Short label for an already-built profile (scenario files).
pub fn profile_label(profile: &NetworkUtilityProfile) -> String {
    if let Some(alpha) = profile.uniform_alpha() {
        return format!("alpha-{alpha}");
    }
    let us = &profile.route_utilities;
    if let Some(UtilitySpec::Exponential { lambda }) = us.first() {
        if us.iter().all(|u| matches!(u, UtilitySpec::Exponential { lambda: l } if l == lambda)) {
            return format!("exponential-{lambda}");
        }
    }
    if let Some(UtilitySpec::LogShifted { shift }) = us.first() {
        if us.iter().all(|u| matches!(u, UtilitySpec::LogShifted { shift: s } if s == shift)) {
            return format!("log-shifted-{shift}");
        }
    }
    if us.iter().all(|u| matches!(u, UtilitySpec::AlphaFair { .. })) {
        return "mixed-alpha".into();
    }
    "mixed".into()
}

#[derive(Debug, Clone)]
pub struct SweepCase {
    pub name: String,
    pub topology: Topology,
    pub population: FlowPopulation,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub topology: String,
    pub profile: String,
    pub a: f64,
    pub deviation: f64,
    pub violated: bool,
    pub expected_violation: bool,
    pub inconclusive: bool,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Every (topology, profile) group matched its expectation: no violations
    /// where none belong, at least one where they do.
    pub pattern_ok: bool,
    pub inconclusive: bool,
    pub note: &'static str,
}

impl SweepSummary {
    pub fn exit_code(&self) -> i32 {
        if !self.pattern_ok {
            3
        } else if self.inconclusive {
            4
        } else {
            0
        }
    }
}

struct Group {
    topology: String,
    profile: String,
    expected: bool,
    trials: Vec<ScaleTrial>,
}

fn summarize(groups: Vec<Group>) -> SweepSummary {
    let mut rows = Vec::new();
    let mut pattern_ok = true;
    let mut inconclusive = false;
    for g in groups {
        let any_violated = g.trials.iter().any(|t| t.violated);
        let any_inconclusive = g.trials.iter().any(|t| t.inconclusive);
        inconclusive |= any_inconclusive;
        // A found witness refutes "consistent" outright; a missing witness
        // refutes "violation" only when every trial actually ran.
        if g.expected {
            if !any_violated && !any_inconclusive {
                pattern_ok = false;
            }
        } else if any_violated {
            pattern_ok = false;
        }
        for t in &g.trials {
            rows.push(SweepRow {
                topology: g.topology.clone(),
                profile: g.profile.clone(),
                a: t.a,
                deviation: t.deviation,
                violated: t.violated,
                expected_violation: g.expected,
                inconclusive: t.inconclusive,
            });
        }
    }
    SweepSummary { rows, pattern_ok, inconclusive, note: EVIDENCE_NOTE }
}

/// Cross product of topologies × (one power-law profile per α, plus the given
/// counterexample families), each run through the flow-scaling trials.
pub fn conjecture_sweep(
    cases: &[SweepCase],
    alphas: &[f64],
    counterexamples: &[ProfileTemplate],
    sample: &SampleConfig,
    solver: &SolverConfig,
) -> Result<SweepSummary> {
    let mut groups = Vec::new();
    for case in cases {
        let n = case.topology.n_routes();
        let mut templates: Vec<ProfileTemplate> = alphas
            .iter()
            .map(|&alpha| ProfileTemplate::AlphaFair { alpha, weight: 1.0 })
            .collect();
        templates.extend_from_slice(counterexamples);
        for tpl in &templates {
            let profile = tpl.build(n);
            let trials = flow_scaling_trials(&case.topology, &profile, &case.population, sample, solver)?;
            groups.push(Group {
                topology: case.name.clone(),
                profile: tpl.label(),
                expected: tpl.expects_violation(),
                trials,
            });
        }
    }
    Ok(summarize(groups))
}

/// Sweep over pre-built scenarios (one group per file). The file's `expect`
/// marker wins; otherwise a profile with one common α is expected consistent
/// and anything else is expected to produce a witness.
pub fn sweep_scenarios(
    entries: &[(String, Scenario)],
    sample: &SampleConfig,
    solver: &SolverConfig,
) -> Result<SweepSummary> {
    let mut groups = Vec::new();
    for (name, scenario) in entries {
        let expected = scenario
            .expect_violation
            .unwrap_or_else(|| scenario.profile.uniform_alpha().is_none());
        let trials = flow_scaling_trials(
            &scenario.topology,
            &scenario.profile,
            &scenario.population,
            sample,
            solver,
        )?;
        groups.push(Group {
            topology: name.clone(),
            profile: profile_label(&scenario.profile),
            expected,
            trials,
        });
    }
    Ok(summarize(groups))
}
