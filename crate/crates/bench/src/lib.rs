//! Topology builders shared by the benchmarks.

use isofair_core::{build_topology, FlowPopulation, Link, Route, Topology};

/// Two-link chain: one through route plus a local route on each link.
pub fn linear2() -> (Topology, FlowPopulation) {
    let topo = build_topology(
        vec![Link::new("j1", 1.0), Link::new("j2", 1.0)],
        vec![
            Route::new("r0", &["j1", "j2"]),
            Route::new("r1", &["j1"]),
            Route::new("r2", &["j2"]),
        ],
    )
    .unwrap();
    (topo, FlowPopulation::new(vec![1.0, 2.0, 1.5]))
}

/// Crossbar mesh: n row links, n column links, and a route through every
/// (row, column) pair. n^2 routes sharing 2n links, all of them coupled.
pub fn mesh(n: usize) -> (Topology, FlowPopulation) {
    let links = (0..n)
        .map(|i| Link::new(format!("row{i}"), 1.0))
        .chain((0..n).map(|j| Link::new(format!("col{j}"), 1.5)))
        .collect();
    let names: Vec<(String, String, String)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (format!("r{i}_{j}"), format!("row{i}"), format!("col{j}"))))
        .collect();
    let routes = names
        .iter()
        .map(|(id, row, col)| Route::new(id.as_str(), &[row.as_str(), col.as_str()]))
        .collect();
    let counts = (0..n * n).map(|k| 1.0 + 0.5 * ((k % 3) as f64)).collect();
    (build_topology(links, routes).unwrap(), FlowPopulation::new(counts))
}
