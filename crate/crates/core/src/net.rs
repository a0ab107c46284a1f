//! Link/route topology model.
//!
//! A topology is a set of capacitated links and a set of routes, where a route
//! is simply the set of links it crosses (no path or node semantics). The 0/1
//! incidence matrix has one row per link and one column per route.
//!
//! Invariants enforced at construction:
//! - at least one link and one route, all ids unique
//! - capacities strictly positive
//! - every route non-empty, no duplicate links within a route, all link ids resolvable

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Link {
    pub id: String,
    pub capacity: f64,
}

impl Link {
    pub fn new(id: impl Into<String>, capacity: f64) -> Self {
        Link { id: id.into(), capacity }
    }
}

#[derive(Debug, Clone)]
pub struct Route {
    pub id: String,
    pub links: Vec<String>,
}

impl Route {
    pub fn new(id: impl Into<String>, links: &[&str]) -> Self {
        Route { id: id.into(), links: links.iter().map(|s| s.to_string()).collect() }
    }
}

/// Rates per route, in route order. Rates are nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub rates: Vec<f64>,
}

impl Allocation {
    pub fn new(rates: Vec<f64>) -> Self {
        Allocation { rates }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Allocation {
        Allocation { rates: self.rates.iter().map(|r| a * r).collect() }
    }

    /// Componentwise max distance; panics on length mismatch.
    pub fn linf_distance(&self, other: &Allocation) -> f64 {
        assert_eq!(self.rates.len(), other.rates.len());
        self.rates
            .iter()
            .zip(&other.rates)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Flow counts per route, in route order. Counts are nonnegative and need not
/// be integral.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPopulation {
    pub counts: Vec<f64>,
}

impl FlowPopulation {
    pub fn new(counts: Vec<f64>) -> Self {
        FlowPopulation { counts }
    }

    pub fn uniform(n: usize, count: f64) -> Self {
        FlowPopulation { counts: vec![count; n] }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn scaled(&self, a: f64) -> FlowPopulation {
        FlowPopulation { counts: self.counts.iter().map(|c| a * c).collect() }
    }
}

/// Result of recognizing the one-long-route-plus-local-routes shape: a route
/// crossing every link, and per link exactly one route crossing only it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearStructure {
    /// Route index of the route that crosses all links.
    pub long_route: usize,
    /// For each link (in link order), the route index of its single-link route.
    pub local_routes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Topology {
    links: Vec<Link>,
    routes: Vec<Route>,
    incidence: Vec<Vec<u8>>,
    route_links: Vec<Vec<usize>>,
    link_routes: Vec<Vec<usize>>,
}

/// Validates and indexes a topology. See the module invariants.
pub fn build_topology(links: Vec<Link>, routes: Vec<Route>) -> Result<Topology> {
    if links.is_empty() || routes.is_empty() {
        return Err(Error::EmptyTopology);
    }
    let mut link_index = BTreeMap::new();
    for (j, link) in links.iter().enumerate() {
        if !(link.capacity > 0.0) || !link.capacity.is_finite() {
            return Err(Error::NonPositiveCapacity { id: link.id.clone(), capacity: link.capacity });
        }
        if link_index.insert(link.id.clone(), j).is_some() {
            return Err(Error::DuplicateId(link.id.clone()));
        }
    }
    let mut route_ids = BTreeMap::new();
    let mut route_links = Vec::with_capacity(routes.len());
    for (r, route) in routes.iter().enumerate() {
        if route_ids.insert(route.id.clone(), r).is_some() {
            return Err(Error::DuplicateId(route.id.clone()));
        }
        if route.links.is_empty() {
            return Err(Error::EmptyRoute(route.id.clone()));
        }
        let mut idx = Vec::with_capacity(route.links.len());
        for lid in &route.links {
            let j = *link_index.get(lid).ok_or_else(|| Error::UnknownLink {
                route: route.id.clone(),
                link: lid.clone(),
            })?;
            if idx.contains(&j) {
                return Err(Error::DuplicateLinkInRoute { route: route.id.clone(), link: lid.clone() });
            }
            idx.push(j);
        }
        route_links.push(idx);
    }
    let mut incidence = vec![vec![0u8; routes.len()]; links.len()];
    let mut link_routes = vec![Vec::new(); links.len()];
    for (r, idx) in route_links.iter().enumerate() {
        for &j in idx {
            incidence[j][r] = 1;
            link_routes[j].push(r);
        }
    }
    Ok(Topology { links, routes, incidence, route_links, link_routes })
}

impl Topology {
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_routes(&self) -> usize {
        self.routes.len()
    }

    /// One row per link, one column per route, entries in {0,1}.
    pub fn incidence(&self) -> &[Vec<u8>] {
        &self.incidence
    }

    /// Link indices crossed by route `r`.
    pub fn route_links(&self, r: usize) -> &[usize] {
        &self.route_links[r]
    }

    /// Route indices crossing link `j`.
    pub fn link_routes(&self, j: usize) -> &[usize] {
        &self.link_routes[j]
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.capacity).collect()
    }

    /// Per-link load induced by an allocation.
    pub fn link_loads(&self, allocation: &Allocation) -> Result<Vec<f64>> {
        if allocation.len() != self.routes.len() {
            return Err(Error::DimensionMismatch { expected: self.routes.len(), got: allocation.len() });
        }
        let mut loads = vec![0.0; self.links.len()];
        for (r, idx) in self.route_links.iter().enumerate() {
            for &j in idx {
                loads[j] += allocation.rates[r];
            }
        }
        Ok(loads)
    }
}

/// True iff rates are ≥ −tol and every link load is ≤ capacity + tol.
pub fn is_feasible(topology: &Topology, allocation: &Allocation, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("feasibility tolerance must be >= 0, got {tol}")));
    }
    if allocation.len() != topology.n_routes() {
        return Err(Error::DimensionMismatch { expected: topology.n_routes(), got: allocation.len() });
    }
    if allocation.rates.iter().any(|&x| x < -tol || !x.is_finite()) {
        return Ok(false);
    }
    let loads = topology.link_loads(allocation)?;
    Ok(loads.iter().zip(&topology.links).all(|(load, link)| *load <= link.capacity + tol))
}

/// Same topology with every capacity multiplied by `a` (a > 0).
pub fn scale_capacity(topology: &Topology, a: f64) -> Result<Topology> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonPositiveScale(a));
    }
    let mut scaled = topology.clone();
    for link in &mut scaled.links {
        link.capacity *= a;
    }
    Ok(scaled)
}

/// Recognizes the shape with K ≥ 2 links, exactly K+1 routes, one route
/// crossing all K links and one single-link route per link. Returns `None` for
/// every other shape.
pub fn classify_linear(topology: &Topology) -> Option<LinearStructure> {
    let k = topology.n_links();
    if k < 2 || topology.n_routes() != k + 1 {
        return None;
    }
    let mut long_route = None;
    let mut local_routes = vec![None; k];
    for (r, idx) in topology.route_links.iter().enumerate() {
        if idx.len() == k {
            if long_route.replace(r).is_some() {
                return None;
            }
        } else if idx.len() == 1 {
            if local_routes[idx[0]].replace(r).is_some() {
                return None;
            }
        } else {
            return None;
        }
    }
    let long_route = long_route?;
    let local_routes: Option<Vec<usize>> = local_routes.into_iter().collect();
    Some(LinearStructure { long_route, local_routes: local_routes? })
}

/// True iff every link carries at least one single-link route.
pub fn has_local_traffic(topology: &Topology) -> bool {
    (0..topology.n_links()).all(|j| {
        topology.link_routes[j]
            .iter()
            .any(|&r| topology.route_links[r].len() == 1)
    })
}

/// Connectivity of the link–route incidence graph, restricted to links: every
/// pair of links must be joined by a chain of routes with pairwise shared
/// links. A single link is connected; a link carrying no route is isolated.
pub fn is_connected(topology: &Topology) -> bool {
    let n = topology.n_links();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(j) = stack.pop() {
        for &r in &topology.link_routes[j] {
            for &i in &topology.route_links[r] {
                if !seen[i] {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}
