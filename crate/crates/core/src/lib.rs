//! Bandwidth allocation over link/route topologies under concave utilities,
//! and property checks for how those allocations respond to scale.
//!
//! The pieces:
//!
//! - [`net`]: links, routes, topology construction and shape classifiers.
//! - [`utility`]: per-route utility functions and the network-level objective.
//! - [`solver`]: price iteration, the linear-network bisection, a grid oracle,
//!   progressive filling, and finite population selection.
//! - [`checks`]: sampled invariance checks (ordering, affine value scaling,
//!   flow/capacity/population scaling) with witness reporting.
//! - [`rra`]: relative risk aversion profiling, recovering (α, w).
//! - [`sweep`]: batteries of flow-scaling runs across topology fixtures.
//! - [`io`]: JSON scenario files; [`report`]: CSV/report rendering.

pub mod checks;
pub mod error;
pub mod io;
pub mod net;
pub mod report;
pub mod rra;
pub mod solver;
pub mod sweep;
pub mod utility;

pub use checks::{
    check_access_scalability, check_capacity_scaling, check_flow_scalability, check_homogeneity,
    check_iso_elastic, CheckReport, Property, SampleConfig, Verdict, Witness,
};
pub use error::{Error, Result};
pub use io::{load_scenario, parse_scenario, Scenario};
pub use net::{
    build_topology, classify_linear, has_local_traffic, is_connected, is_feasible, scale_capacity,
    Allocation, FlowPopulation, LinearStructure, Link, Route, Topology,
};
pub use rra::{log_grid, rra_profile, RraProfile};
pub use solver::{
    brute_force, select_flow_population, solve_linear_network, solve_max_min, solve_num,
    SolveResult, SolverConfig,
};
pub use sweep::{
    conjecture_sweep, profile_label, sweep_scenarios, ProfileTemplate, SweepCase, SweepRow,
    SweepSummary, EVIDENCE_NOTE,
};
pub use utility::{
    network_utility, AggregationMode, CustomUtility, NetworkUtilityProfile, UtilityFn, UtilitySpec,
};
