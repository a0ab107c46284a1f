//! Allocation solvers over a capacitated topology.
//!
//! `solve_num` is the workhorse: price-directed decomposition. Routes respond
//! to link prices through the inverse marginal, Λ_r = y_r·(U′_r)⁻¹(Σ_j A_jr p_j),
//! and prices ascend the dual with a diminishing step c/√t, swept link by link
//! and scaled by the local curvature of the dual. Reported duals are averaged
//! over the last 10% of sweeps.
//!
//! `solve_linear_network` specializes the shape recognized by
//! [`classify_linear`](crate::net::classify_linear): there the stationarity
//! condition collapses to one equation, U′_0(Λ_0/y_0) = Σ_k U′_k((C_k−Λ_0)/y_k),
//! solved by bisection on (0, min_k C_k).
//!
//! `brute_force` is an independent grid oracle (≤ 3 routes), `solve_max_min`
//! the progressive-filling allocator, and `select_flow_population` the finite
//! argmax over candidate populations.
//!
//! Result invariants on a converged solve:
//! - allocation feasible within `primal_tol`
//! - price_j > `kkt_tol` implies load_j ≥ C_j − 10·`primal_tol`
//! - every route with y_r > 0 crosses at least one saturated link

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::net::{classify_linear, Allocation, FlowPopulation, Topology};
use crate::utility::{network_utility, NetworkUtilityProfile, UtilitySpec};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Allowed capacity overshoot on any link.
    pub primal_tol: f64,
    /// Stationarity/complementarity residual target.
    pub kkt_tol: f64,
    /// Price sweeps before giving up.
    pub max_iters: usize,
    /// Step constant: sweep t uses step c/√t.
    pub step_c: f64,
    /// Minimum rate kept on a populated route, so utilities stay evaluable.
    pub interior_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            primal_tol: 1e-8,
            kkt_tol: 1e-6,
            max_iters: 200_000,
            step_c: 0.1,
            interior_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("primal_tol", self.primal_tol)?;
        pos("kkt_tol", self.kkt_tol)?;
        pos("step_c", self.step_c)?;
        pos("interior_floor", self.interior_floor)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub allocation: Allocation,
    /// Dual prices per link (aggregate-scale stationarity: U′_r = Σ_j A_jr p_j).
    pub link_prices: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Link indices with load ≥ capacity − 10·primal_tol, ascending.
    pub saturated_links: Vec<usize>,
    pub converged: bool,
}

/// Truncated mean over the last ceil(fraction·len) snapshots.
fn tail_mean(history: &VecDeque<Vec<f64>>, total: usize, fraction: f64, n: usize) -> Vec<f64> {
    let window = ((total as f64 * fraction).ceil() as usize).clamp(1, history.len().max(1));
    let mut mean = vec![0.0; n];
    if history.is_empty() {
        return mean;
    }
    for snap in history.iter().rev().take(window) {
        for (m, v) in mean.iter_mut().zip(snap) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= window as f64;
    }
    mean
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RouteState {
    Floor,
    Interior,
    Capped,
}

struct BestIterate {
    residual: f64,
    rates: Vec<f64>,
    prices: Vec<f64>,
    sweep: usize,
}

/// Price-directed solve of the network allocation problem.
///
/// Routes with y_r = 0 receive rate 0 and are excluded throughout. On
/// non-convergence the error carries the best iterate seen.
pub fn solve_num(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    profile.validate()?;
    let nr = topology.n_routes();
    let nl = topology.n_links();
    if profile.len() != nr {
        return Err(Error::DimensionMismatch { expected: nr, got: profile.len() });
    }
    if y.len() != nr {
        return Err(Error::DimensionMismatch { expected: nr, got: y.len() });
    }
    for &c in &y.counts {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidInput(format!("population entries must be finite and >= 0, got {c}")));
        }
    }
    let active: Vec<bool> = y.counts.iter().map(|&c| c > 0.0).collect();
    if !active.iter().any(|&a| a) {
        return Err(Error::ZeroPopulation);
    }
    // Cannot occur with validated capacities; kept as a guard.
    for r in 0..nr {
        if active[r] && topology.route_links(r).iter().all(|&j| topology.links()[j].capacity <= 0.0) {
            return Err(Error::InfeasiblePopulation(topology.routes()[r].id.clone()));
        }
    }

    let cap = topology.capacities();
    let floor = config.interior_floor;
    // Rate ceiling per route: twice its tightest link. Loose enough to never
    // bind at the optimum, tight enough to keep the dual gradient bounded when
    // prices are still far too low.
    let route_cap: Vec<f64> = (0..nr)
        .map(|r| 2.0 * topology.route_links(r).iter().map(|&j| cap[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let link_active: Vec<bool> =
        (0..nl).map(|j| topology.link_routes(j).iter().any(|&r| active[r])).collect();

    let mut p = vec![0.0; nl];
    for j in 0..nl {
        if link_active[j] {
            p[j] = 1.0;
        }
    }
    let mut q = vec![0.0; nr];
    let mut x = vec![0.0; nr];
    let mut lam = vec![0.0; nr];
    let mut state = vec![RouteState::Floor; nr];
    let mut load = vec![0.0; nl];

    let respond = |u: &UtilitySpec, count: f64, q_r: f64, ceil: f64| -> Result<(f64, RouteState)> {
        let raw = count * u.inverse_deriv(q_r.max(1e-300))?;
        Ok(if !(raw < ceil) {
            (ceil, RouteState::Capped)
        } else if raw <= floor {
            (floor, RouteState::Floor)
        } else {
            (raw, RouteState::Interior)
        })
    };

    let refresh = |p: &[f64],
                   q: &mut [f64],
                   x: &mut [f64],
                   lam: &mut [f64],
                   state: &mut [RouteState],
                   load: &mut [f64]|
     -> Result<()> {
        for j in 0..nl {
            load[j] = 0.0;
        }
        for r in 0..nr {
            if !active[r] {
                continue;
            }
            q[r] = topology.route_links(r).iter().map(|&j| p[j]).sum();
            let (l, st) = respond(&profile.route_utilities[r], y.counts[r], q[r], route_cap[r])?;
            lam[r] = l;
            x[r] = l / y.counts[r];
            state[r] = st;
            for &j in topology.route_links(r) {
                load[j] += l;
            }
        }
        Ok(())
    };
    refresh(&p, &mut q, &mut x, &mut lam, &mut state, &mut load)?;

    // Reported duals average the last 10% of sweeps; the window is capped so
    // arbitrarily large max_iters cannot exhaust memory.
    let window_cap = ((config.max_iters as f64 * 0.1).ceil() as usize).clamp(1, 65_536);
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(window_cap + 1);
    let mut best: Option<BestIterate> = None;

    let residual_of = |p: &[f64], load: &[f64], state: &[RouteState]| -> f64 {
        let mut res: f64 = 0.0;
        for j in 0..nl {
            let over = (load[j] - cap[j]).max(0.0);
            let slack = (cap[j] - load[j]).max(0.0);
            res = res.max(over).max(p[j].min(slack));
        }
        for r in 0..nr {
            if active[r] && state[r] == RouteState::Capped {
                res = res.max(route_cap[r]);
            }
        }
        res
    };

    // Diminishing steps make robust global progress but crawl near the
    // optimum, fatally so on degenerate instances where a price and its slack
    // vanish together. Once the early sweeps have settled, switch to undamped
    // Newton steps: each link load is decreasing in the link price, so the
    // full step (trust-region capped) homes in instead of inching.
    let mut polish = false;
    let mut settle: Option<usize> = None;
    let mut converged_at = None;
    for t in 1..=config.max_iters {
        let eta = config.step_c / (t as f64).sqrt();
        for j in 0..nl {
            if !link_active[j] {
                continue;
            }
            let g = load[j] - cap[j];
            // Local curvature of the dual: only interior routes respond.
            let mut s = 0.0;
            for &r in topology.link_routes(j) {
                if active[r] && state[r] == RouteState::Interior {
                    s += y.counts[r] / profile.route_utilities[r].second_deriv(x[r])?.abs();
                }
            }
            let p_new = if s > 0.0 {
                let raw = if polish { g / s } else { eta * g / s };
                // Trust region: curvature far from the root is a poor model,
                // and rate kinks (floor/ceiling) make overshoot self-feeding.
                // Never more than halve the price going down, so tiny roots
                // are approached geometrically instead of slammed past.
                let step = raw.clamp(-0.5 * p[j], 0.25 * (1.0 + p[j]));
                (p[j] + step).max(0.0)
            } else if g > config.primal_tol {
                // Nothing responds yet: probe upward geometrically.
                let probe = if polish { 0.5 } else { eta };
                p[j] * (1.0 + probe) + probe * 1e-3
            } else if g < -config.primal_tol {
                let probe = if polish { 0.5 } else { eta };
                p[j] / (1.0 + probe)
            } else {
                p[j]
            };
            let dp = p_new - p[j];
            if dp == 0.0 {
                continue;
            }
            p[j] = p_new;
            for &r in topology.link_routes(j) {
                if !active[r] {
                    continue;
                }
                q[r] += dp;
                let (l, st) = respond(&profile.route_utilities[r], y.counts[r], q[r], route_cap[r])?;
                state[r] = st;
                if l != lam[r] {
                    let d = l - lam[r];
                    for &i in topology.route_links(r) {
                        load[i] += d;
                    }
                    lam[r] = l;
                    x[r] = l / y.counts[r];
                }
            }
        }
        // Incremental load updates drift; refresh periodically.
        if t % 64 == 0 {
            refresh(&p, &mut q, &mut x, &mut lam, &mut state, &mut load)?;
        }
        if history.len() == window_cap {
            history.pop_front();
        }
        history.push_back(p.clone());

        let feasible = (0..nl).all(|j| load[j] - cap[j] <= config.primal_tol);
        let complementary = (0..nl).all(|j| p[j] <= config.kkt_tol || cap[j] - load[j] <= 5.0 * config.primal_tol);
        let uncapped = (0..nr).all(|r| !active[r] || state[r] != RouteState::Capped);
        let ok = feasible && complementary && uncapped;
        // The duals are reported as an average over the trailing 10% of
        // sweeps. Stop only after that window has been re-run at the fixed
        // point, so the average covers a settled trajectory rather than the
        // approach to it.
        match settle {
            Some(0) if ok => {
                converged_at = Some(t);
                break;
            }
            Some(0) => settle = None,
            Some(left) => settle = Some(left - 1),
            None if ok => {
                let w = ((t as f64 * 0.1).ceil() as usize).min(config.max_iters - t);
                if w == 0 {
                    converged_at = Some(t);
                    break;
                }
                settle = Some(w - 1);
            }
            None => {}
        }
        if !polish && t >= 8 {
            let worst = (0..nl).map(|j| load[j] - cap[j]).fold(0.0f64, f64::max);
            if worst <= 1e-2 * (1.0 + cap.iter().cloned().fold(0.0, f64::max)) || 2 * t >= config.max_iters {
                polish = true;
            }
        }
        let res = residual_of(&p, &load, &state);
        if best.as_ref().map_or(true, |b| res < b.residual) {
            best = Some(BestIterate { residual: res, rates: lam.clone(), prices: p.clone(), sweep: t });
        }
    }

    let build = |rates: Vec<f64>,
                 prices: Vec<f64>,
                 iterations: usize,
                 converged: bool|
     -> Result<SolveResult> {
        let allocation = Allocation::new(rates);
        let loads = topology.link_loads(&allocation)?;
        let mut kkt = 0.0f64;
        let mut saturated = Vec::new();
        for j in 0..nl {
            let over = (loads[j] - cap[j]).max(0.0);
            let slack = (cap[j] - loads[j]).max(0.0);
            kkt = kkt.max(over).max(prices[j].min(slack));
            if cap[j] - loads[j] <= 10.0 * config.primal_tol {
                saturated.push(j);
            }
        }
        let objective = network_utility(profile, y, &allocation)?;
        Ok(SolveResult {
            allocation,
            link_prices: prices,
            objective,
            iterations,
            kkt_residual: kkt,
            saturated_links: saturated,
            converged,
        })
    };

    match converged_at {
        Some(t) => {
            refresh(&p, &mut q, &mut x, &mut lam, &mut state, &mut load)?;
            let duals = tail_mean(&history, t, 0.1, nl);
            build(lam, duals, t, true)
        }
        None => {
            let fallback = BestIterate { residual: residual_of(&p, &load, &state), rates: lam, prices: p, sweep: config.max_iters };
            let b = best.unwrap_or(fallback);
            let result = build(b.rates, b.prices, b.sweep, false)?;
            Err(Error::NotConverged {
                iterations: config.max_iters,
                residual: b.residual,
                result: Box::new(result),
            })
        }
    }
}

/// Bisection solve for topologies recognized by `classify_linear`. Errors with
/// `NotBracketed` when the stationarity residual has one sign over the whole
/// capacity interval, which happens for utilities whose derivative range does
/// not span (0, ∞).
pub fn solve_linear_network(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    profile.validate()?;
    let nr = topology.n_routes();
    let nl = topology.n_links();
    if profile.len() != nr {
        return Err(Error::DimensionMismatch { expected: nr, got: profile.len() });
    }
    if y.len() != nr {
        return Err(Error::DimensionMismatch { expected: nr, got: y.len() });
    }
    let structure = classify_linear(topology)
        .ok_or_else(|| Error::InvalidInput("topology is not a linear network".into()))?;
    let r0 = structure.long_route;
    let cap = topology.capacities();
    let y0 = y.counts[r0];
    let u0 = &profile.route_utilities[r0];
    let populated: Vec<bool> = (0..nl).map(|k| y.counts[structure.local_routes[k]] > 0.0).collect();

    let mut rates = vec![0.0; nr];
    let mut prices = vec![0.0; nl];
    let mut iterations = 0usize;
    let mut residual = 0.0;

    if y0 == 0.0 {
        // Long route absent: each populated local route fills its own link.
        for k in 0..nl {
            let rk = structure.local_routes[k];
            if populated[k] {
                rates[rk] = cap[k];
                prices[k] = profile.route_utilities[rk].deriv(cap[k] / y.counts[rk])?;
            }
        }
    } else {
        let hi_cap = cap.iter().cloned().fold(f64::INFINITY, f64::min);
        let lo = config.interior_floor;
        let hi = hi_cap - config.interior_floor;
        if hi <= lo {
            return Err(Error::InvalidConfig("interior floor leaves no capacity interval".into()));
        }
        // Stationarity residual; strictly decreasing in lam0.
        let g = |lam0: f64| -> Result<f64> {
            let mut v = u0.deriv(lam0 / y0)?;
            for k in 0..nl {
                if populated[k] {
                    let rk = structure.local_routes[k];
                    v -= profile.route_utilities[rk].deriv((cap[k] - lam0) / y.counts[rk])?;
                }
            }
            Ok(v)
        };
        let g_lo = g(lo)?;
        let g_hi = g(hi)?;
        let lam0 = if g_lo < 0.0 {
            return Err(Error::NotBracketed);
        } else if g_hi > 0.0 {
            // Only a population-free binding link can cap the long route;
            // otherwise the local marginal would blow up before the cap.
            let corner_ok = (0..nl).all(|k| cap[k] > hi_cap || !populated[k]);
            if !corner_ok {
                return Err(Error::NotBracketed);
            }
            hi_cap
        } else {
            let (mut a, mut b) = (lo, hi);
            loop {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b || iterations >= 200 {
                    break;
                }
                iterations += 1;
                if g(mid)? > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-16 * b.max(1.0) {
                    break;
                }
            }
            0.5 * (a + b)
        };
        rates[r0] = lam0;
        let mut marginal_sum = 0.0;
        for k in 0..nl {
            let rk = structure.local_routes[k];
            if populated[k] {
                rates[rk] = cap[k] - lam0;
                prices[k] = profile.route_utilities[rk].deriv(rates[rk] / y.counts[rk])?;
                marginal_sum += prices[k];
            }
        }
        let m0 = u0.deriv(lam0 / y0)?;
        if lam0 < hi_cap {
            residual = (m0 - marginal_sum).abs() / (1.0 + m0.abs());
        } else {
            // Corner: the binding empty links absorb the residual marginal.
            let extra = (m0 - marginal_sum).max(0.0);
            let binding: Vec<usize> =
                (0..nl).filter(|&k| !populated[k] && cap[k] <= hi_cap).collect();
            for &k in &binding {
                prices[k] = extra / binding.len() as f64;
            }
        }
    }

    let allocation = Allocation::new(rates);
    let loads = topology.link_loads(&allocation)?;
    let saturated = (0..nl)
        .filter(|&j| cap[j] - loads[j] <= 10.0 * config.primal_tol)
        .collect();
    let objective = network_utility(profile, y, &allocation)?;
    Ok(SolveResult {
        allocation,
        link_prices: prices,
        objective,
        iterations,
        kkt_residual: residual,
        saturated_links: saturated,
        converged: true,
    })
}

/// Exhaustive grid search over the feasible box, at most 3 routes. Feasible
/// points only, ties broken toward the lexicographically smallest rate vector.
/// Independent of the price iteration by construction.
pub fn brute_force(
    topology: &Topology,
    profile: &NetworkUtilityProfile,
    y: &FlowPopulation,
    resolution: f64,
) -> Result<(Allocation, f64)> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::NonPositiveResolution(resolution));
    }
    let nr = topology.n_routes();
    if nr > 3 {
        return Err(Error::TooManyRoutes(nr));
    }
    profile.validate()?;
    if profile.len() != nr {
        return Err(Error::DimensionMismatch { expected: nr, got: profile.len() });
    }
    if y.len() != nr {
        return Err(Error::DimensionMismatch { expected: nr, got: y.len() });
    }
    let total: f64 = y.counts.iter().sum();
    use crate::utility::AggregationMode;
    if profile.mode == AggregationMode::Average && total <= 0.0 {
        return Err(Error::ZeroPopulation);
    }

    let nl = topology.n_links();
    let cap = topology.capacities();
    let slack = |c: f64| 1e-9 * c.max(1.0);

    // Pad to three virtual routes so one triple loop covers every arity.
    let mut imax = [0usize; 3];
    let mut tabs: [Vec<f64>; 3] = [vec![0.0], vec![0.0], vec![0.0]];
    let empty: Vec<usize> = Vec::new();
    let mut rls: [&[usize]; 3] = [&empty, &empty, &empty];
    for r in 0..nr {
        rls[r] = topology.route_links(r);
        let count = y.counts[r];
        if count <= 0.0 {
            continue;
        }
        let bound = topology.route_links(r).iter().map(|&j| cap[j]).fold(f64::INFINITY, f64::min);
        imax[r] = ((bound + slack(bound)) / resolution).floor() as usize;
        let u = &profile.route_utilities[r];
        let mut tab = Vec::with_capacity(imax[r] + 1);
        tab.push(match u.value_at_zero() {
            Some(v) => count * v,
            None => f64::NEG_INFINITY,
        });
        for i in 1..=imax[r] {
            tab.push(count * u.value(i as f64 * resolution / count)?);
        }
        tabs[r] = tab;
    }

    let mut best_val = f64::NEG_INFINITY;
    let mut best = None;
    let mut load1 = vec![0.0; nl];
    let mut load2 = vec![0.0; nl];
    'outer: for i0 in 0..=imax[0] {
        let r0 = i0 as f64 * resolution;
        load1.iter_mut().for_each(|l| *l = 0.0);
        for &j in rls[0] {
            load1[j] = r0;
            if load1[j] > cap[j] + slack(cap[j]) {
                break 'outer;
            }
        }
        let v0 = tabs[0][i0];
        if v0 == f64::NEG_INFINITY {
            continue;
        }
        'mid: for i1 in 0..=imax[1] {
            let r1 = i1 as f64 * resolution;
            load2.copy_from_slice(&load1);
            for &j in rls[1] {
                load2[j] += r1;
                if load2[j] > cap[j] + slack(cap[j]) {
                    break 'mid;
                }
            }
            let v01 = v0 + tabs[1][i1];
            if v01 == f64::NEG_INFINITY {
                continue;
            }
            'inner: for i2 in 0..=imax[2] {
                let r2 = i2 as f64 * resolution;
                for &j in rls[2] {
                    if load2[j] + r2 > cap[j] + slack(cap[j]) {
                        break 'inner;
                    }
                }
                let v = v01 + tabs[2][i2];
                if v == f64::NEG_INFINITY {
                    continue;
                }
                if v > best_val {
                    best_val = v;
                    best = Some([i0, i1, i2]);
                }
            }
        }
    }

    let best = best.ok_or_else(|| {
        Error::InvalidInput("no grid point has a defined objective; resolution too coarse".into())
    })?;
    let rates = (0..nr).map(|r| best[r] as f64 * resolution).collect();
    let objective = if profile.mode == AggregationMode::Average { best_val / total } else { best_val };
    Ok((Allocation::new(rates), objective))
}

/// Progressive filling: one common per-flow rate grows on all unfrozen routes;
/// a route freezes when a link it crosses runs out. Every populated route ends
/// up crossing at least one saturated link.
pub fn solve_max_min(topology: &Topology, y: &FlowPopulation) -> Result<Allocation> {
    let nr = topology.n_routes();
    let nl = topology.n_links();
    if y.len() != nr {
        return Err(Error::DimensionMismatch { expected: nr, got: y.len() });
    }
    for &c in &y.counts {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidInput(format!("population entries must be finite and >= 0, got {c}")));
        }
    }
    let mut rates = vec![0.0; nr];
    let mut frozen: Vec<bool> = y.counts.iter().map(|&c| c == 0.0).collect();
    let mut cap_left = topology.capacities();
    let mut fill = 0.0;

    loop {
        let mut delta = f64::INFINITY;
        for j in 0..nl {
            let w: f64 = topology.link_routes(j).iter().filter(|&&r| !frozen[r]).map(|&r| y.counts[r]).sum();
            if w > 0.0 {
                delta = delta.min(cap_left[j] / w);
            }
        }
        if !delta.is_finite() {
            break;
        }
        fill += delta;
        for j in 0..nl {
            let w: f64 = topology.link_routes(j).iter().filter(|&&r| !frozen[r]).map(|&r| y.counts[r]).sum();
            cap_left[j] = (cap_left[j] - w * delta).max(0.0);
        }
        let mut froze = false;
        for j in 0..nl {
            if cap_left[j] <= 1e-12 * topology.links()[j].capacity.max(1.0) {
                for &r in topology.link_routes(j) {
                    if !frozen[r] {
                        frozen[r] = true;
                        rates[r] = y.counts[r] * fill;
                        froze = true;
                    }
                }
            }
        }
        // The minimizing link saturates exactly, so progress is guaranteed.
        debug_assert!(froze);
        if !froze {
            break;
        }
    }
    Ok(Allocation::new(rates))
}

/// Index of the candidate population maximizing the network utility at a fixed
/// allocation. Ties keep the earliest candidate.
pub fn select_flow_population(
    profile: &NetworkUtilityProfile,
    allocation: &Allocation,
    candidates: &[FlowPopulation],
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let mut best = 0;
    let mut best_val = network_utility(profile, &candidates[0], allocation)?;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let v = network_utility(profile, c, allocation)?;
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_topology, Link, Route};
    use approx::assert_relative_eq;

    fn linear2(c1: f64, c2: f64) -> Topology {
        build_topology(
            vec![Link::new("j1", c1), Link::new("j2", c2)],
            vec![
                Route::new("r0", &["j1", "j2"]),
                Route::new("r1", &["j1"]),
                Route::new("r2", &["j2"]),
            ],
        )
        .unwrap()
    }

    fn ones(n: usize) -> FlowPopulation {
        FlowPopulation::uniform(n, 1.0)
    }

    // Stationarity for the symmetric two-link line at α=1, unit populations:
    // 1/Λ0 = 2/(1−Λ0), so Λ0 = 1/3 and the locals take 2/3 each.
    #[test]
    fn price_iteration_matches_hand_solution_log() {
        let t = linear2(1.0, 1.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 1.0, 1.0);
        let r = solve_num(&t, &profile, &ones(3), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.allocation.rates[0], 1.0 / 3.0, epsilon = 1e-6);
        assert_relative_eq!(r.allocation.rates[1], 2.0 / 3.0, epsilon = 1e-6);
        assert_relative_eq!(r.allocation.rates[2], 2.0 / 3.0, epsilon = 1e-6);
        assert!(r.kkt_residual <= 1e-6);
        assert_eq!(r.saturated_links, vec![0, 1]);
        // Dual stationarity in utility space.
        let m0 = 1.0 / r.allocation.rates[0];
        let m_sum = 1.0 / r.allocation.rates[1] + 1.0 / r.allocation.rates[2];
        assert_relative_eq!(m0, m_sum, epsilon = 1e-5);
    }

    // At α=2 the same stationarity gives (1−Λ0)² = 2Λ0², i.e. Λ0 = 1/(1+√2).
    #[test]
    fn price_iteration_matches_hand_solution_alpha2() {
        let t = linear2(1.0, 1.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 2.0, 1.0);
        let expected = (1.0 + 2f64.sqrt()).recip();
        let r = solve_num(&t, &profile, &ones(3), &SolverConfig::default()).unwrap();
        assert_relative_eq!(r.allocation.rates[0], expected, epsilon = 1e-6);
        let b = solve_linear_network(&t, &profile, &ones(3), &SolverConfig::default()).unwrap();
        assert_relative_eq!(b.allocation.rates[0], expected, epsilon = 1e-12);
    }

    // Crowded locals at α=1: 1/Λ0 = 20/(1−Λ0) gives Λ0 = 1/21.
    #[test]
    fn populations_shift_the_split() {
        let t = linear2(1.0, 1.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 1.0, 1.0);
        let y = FlowPopulation::new(vec![1.0, 10.0, 10.0]);
        let r = solve_num(&t, &profile, &y, &SolverConfig::default()).unwrap();
        assert_relative_eq!(r.allocation.rates[0], 1.0 / 21.0, epsilon = 1e-6);
        let b = solve_linear_network(&t, &profile, &y, &SolverConfig::default()).unwrap();
        assert_relative_eq!(b.allocation.rates[0], 1.0 / 21.0, epsilon = 1e-12);
    }

    #[test]
    fn bisection_and_prices_agree_with_iteration() {
        let t = linear2(1.0, 2.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 2.0, 1.5);
        let y = FlowPopulation::new(vec![2.0, 1.0, 3.0]);
        let a = solve_num(&t, &profile, &y, &SolverConfig::default()).unwrap();
        let b = solve_linear_network(&t, &profile, &y, &SolverConfig::default()).unwrap();
        assert!(a.allocation.linf_distance(&b.allocation) < 1e-6);
        for (pa, pb) in a.link_prices.iter().zip(&b.link_prices) {
            assert_relative_eq!(pa, pb, epsilon = 1e-4);
        }
        // Allocation agreement at ~1e-8 puts the objectives within ~1e-7.
        assert_relative_eq!(a.objective, b.objective, epsilon = 1e-7);
    }

    #[test]
    fn solve_is_deterministic_bit_for_bit() {
        let t = linear2(1.0, 2.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 2.0, 1.0);
        let y = FlowPopulation::new(vec![1.0, 2.0, 0.5]);
        let a = solve_num(&t, &profile, &y, &SolverConfig::default()).unwrap();
        let b = solve_num(&t, &profile, &y, &SolverConfig::default()).unwrap();
        assert_eq!(a.allocation.rates, b.allocation.rates);
        assert!(a
            .link_prices
            .iter()
            .zip(&b.link_prices)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn zero_population_routes_get_zero_rate() {
        let t = linear2(1.0, 1.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 1.0, 1.0);
        let y = FlowPopulation::new(vec![1.0, 0.0, 1.0]);
        let r = solve_num(&t, &profile, &y, &SolverConfig::default()).unwrap();
        assert_eq!(r.allocation.rates[1], 0.0);
        // Only j2 binds now, shared evenly at α=1: Λ0 = Λ2 = 1/2.
        assert_relative_eq!(r.allocation.rates[0], 0.5, epsilon = 1e-6);
        assert_relative_eq!(r.allocation.rates[2], 0.5, epsilon = 1e-6);
        assert!(matches!(
            solve_num(&t, &profile, &FlowPopulation::uniform(3, 0.0), &SolverConfig::default()),
            Err(Error::ZeroPopulation)
        ));
    }

    #[test]
    fn not_converged_carries_best_iterate() {
        let t = linear2(1.0, 1.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 1.0, 1.0);
        let cfg = SolverConfig { max_iters: 3, ..SolverConfig::default() };
        match solve_num(&t, &profile, &ones(3), &cfg) {
            Err(Error::NotConverged { iterations, result, .. }) => {
                assert_eq!(iterations, 3);
                assert!(!result.converged);
                assert_eq!(result.allocation.len(), 3);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    // Bounded marginals: with unit populations the split solves
    // e^(−Λ0) = 2e^(−(1−Λ0)), i.e. Λ0 = (1 − ln 2)/2. Scaling populations by
    // 10 pushes the stationarity residual negative everywhere: corner at 0.
    #[test]
    fn exponential_interior_and_corner() {
        let t = linear2(1.0, 1.0);
        let profile = NetworkUtilityProfile::new(vec![UtilitySpec::Exponential { lambda: 1.0 }; 3]);
        let expected = (1.0 - 2f64.ln()) / 2.0;
        let r = solve_num(&t, &profile, &ones(3), &SolverConfig::default()).unwrap();
        assert_relative_eq!(r.allocation.rates[0], expected, epsilon = 1e-5);
        let b = solve_linear_network(&t, &profile, &ones(3), &SolverConfig::default()).unwrap();
        assert_relative_eq!(b.allocation.rates[0], expected, epsilon = 1e-10);

        let y10 = FlowPopulation::uniform(3, 10.0);
        let r10 = solve_num(&t, &profile, &y10, &SolverConfig::default()).unwrap();
        assert!(r10.allocation.rates[0] < 1e-6, "corner expected, got {}", r10.allocation.rates[0]);
        assert!(matches!(
            solve_linear_network(&t, &profile, &y10, &SolverConfig::default()),
            Err(Error::NotBracketed)
        ));
    }

    #[test]
    fn linear_solver_handles_empty_populations() {
        let t = linear2(1.0, 2.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 1.0, 1.0);
        // No long-route flows: locals saturate their own links.
        let y = FlowPopulation::new(vec![0.0, 1.0, 2.0]);
        let r = solve_linear_network(&t, &profile, &y, &SolverConfig::default()).unwrap();
        assert_eq!(r.allocation.rates, vec![0.0, 1.0, 2.0]);
        // Empty local on the binding link: a heavy long route runs to the
        // corner, and that link absorbs the leftover marginal as its price.
        let heavy = NetworkUtilityProfile::new(vec![
            UtilitySpec::alpha_fair(1.0, 3.0),
            UtilitySpec::alpha_fair(1.0, 1.0),
            UtilitySpec::alpha_fair(1.0, 1.0),
        ]);
        let y = FlowPopulation::new(vec![1.0, 0.0, 1.0]);
        let r = solve_linear_network(&t, &heavy, &y, &SolverConfig::default()).unwrap();
        assert_relative_eq!(r.allocation.rates[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.allocation.rates[2], 1.0, epsilon = 1e-9);
        // U'_0(1)·3 = 3 against the local marginal 1: residual price 2 on j1.
        assert_relative_eq!(r.link_prices[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(r.link_prices[1], 1.0, epsilon = 1e-9);
        let n = solve_num(&t, &heavy, &y, &SolverConfig::default()).unwrap();
        assert!(n.allocation.linf_distance(&r.allocation) < 1e-5);
    }

    #[test]
    fn rejects_non_linear_topology() {
        let t = build_topology(
            vec![Link::new("j1", 1.0), Link::new("j2", 1.0)],
            vec![Route::new("r0", &["j1", "j2"]), Route::new("r1", &["j1"])],
        )
        .unwrap();
        let profile = NetworkUtilityProfile::alpha_fair_uniform(2, 1.0, 1.0);
        assert!(matches!(
            solve_linear_network(&t, &profile, &ones(2), &SolverConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn grid_oracle_single_link_boundary() {
        let t = build_topology(vec![Link::new("j", 1.0)], vec![Route::new("r", &["j"])]).unwrap();
        let profile = NetworkUtilityProfile::alpha_fair_uniform(1, 1.0, 1.0);
        let (alloc, obj) = brute_force(&t, &profile, &ones(1), 1e-3).unwrap();
        assert!((alloc.rates[0] - 1.0).abs() <= 2e-3);
        assert!(obj.abs() <= 2e-3);
    }

    #[test]
    fn grid_oracle_matches_hand_solution() {
        let t = linear2(1.0, 1.0);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(3, 1.0, 1.0);
        let (alloc, _) = brute_force(&t, &profile, &ones(3), 1e-3).unwrap();
        assert!((alloc.rates[0] - 1.0 / 3.0).abs() <= 2e-3);
        assert!((alloc.rates[1] - 2.0 / 3.0).abs() <= 2e-3);
        assert!((alloc.rates[2] - 2.0 / 3.0).abs() <= 2e-3);
    }

    #[test]
    fn grid_oracle_breaks_ties_lexicographically() {
        // Resolution of a full link: candidates (0,1) and (1,0) tie at α=1/2.
        let t = build_topology(
            vec![Link::new("j", 1.0)],
            vec![Route::new("a", &["j"]), Route::new("b", &["j"])],
        )
        .unwrap();
        let profile = NetworkUtilityProfile::alpha_fair_uniform(2, 0.5, 1.0);
        let (alloc, _) = brute_force(&t, &profile, &ones(2), 1.0).unwrap();
        assert_eq!(alloc.rates, vec![0.0, 1.0]);
    }

    #[test]
    fn grid_oracle_validates_input() {
        let t = build_topology(
            vec![Link::new("j", 1.0)],
            vec![
                Route::new("a", &["j"]),
                Route::new("b", &["j"]),
                Route::new("c", &["j"]),
                Route::new("d", &["j"]),
            ],
        )
        .unwrap();
        let profile = NetworkUtilityProfile::alpha_fair_uniform(4, 1.0, 1.0);
        assert!(matches!(
            brute_force(&t, &profile, &ones(4), 0.1),
            Err(Error::TooManyRoutes(4))
        ));
        let t1 = build_topology(vec![Link::new("j", 1.0)], vec![Route::new("a", &["j"])]).unwrap();
        let p1 = NetworkUtilityProfile::alpha_fair_uniform(1, 1.0, 1.0);
        assert!(matches!(
            brute_force(&t1, &p1, &ones(1), 0.0),
            Err(Error::NonPositiveResolution(_))
        ));
    }

    #[test]
    fn progressive_filling_freezes_at_bottlenecks() {
        // First link exhausts at fill 1/2, the free local then takes the rest.
        let t = linear2(1.0, 2.0);
        let alloc = solve_max_min(&t, &ones(3)).unwrap();
        assert_eq!(alloc.rates, vec![0.5, 0.5, 1.5]);

        let sym = solve_max_min(&linear2(1.0, 1.0), &ones(3)).unwrap();
        assert_eq!(sym.rates, vec![0.5, 0.5, 0.5]);

        // Weighted flows share in proportion to their counts.
        let alloc = solve_max_min(&linear2(1.0, 2.0), &FlowPopulation::new(vec![2.0, 1.0, 1.0])).unwrap();
        assert_relative_eq!(alloc.rates[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(alloc.rates[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(alloc.rates[2], 4.0 / 3.0, epsilon = 1e-12);

        let empty = solve_max_min(&linear2(1.0, 1.0), &FlowPopulation::uniform(3, 0.0)).unwrap();
        assert_eq!(empty.rates, vec![0.0, 0.0, 0.0]);
    }

    // Average per-flow utility at α=2 is −y/Λ: candidate y=1 gives −1/4,
    // y=2 gives −1/2, so the smaller population wins.
    #[test]
    fn population_selection_prefers_higher_average_utility() {
        let profile = NetworkUtilityProfile::alpha_fair_uniform(1, 2.0, 1.0);
        let alloc = Allocation::new(vec![4.0]);
        let candidates = vec![FlowPopulation::new(vec![1.0]), FlowPopulation::new(vec![2.0])];
        assert_eq!(select_flow_population(&profile, &alloc, &candidates).unwrap(), 0);

        // Exact tie keeps the first candidate.
        let same = vec![FlowPopulation::new(vec![2.0]), FlowPopulation::new(vec![2.0])];
        assert_eq!(select_flow_population(&profile, &alloc, &same).unwrap(), 0);

        assert!(matches!(
            select_flow_population(&profile, &alloc, &[]),
            Err(Error::EmptyCandidateSet)
        ));
    }

    #[test]
    fn converged_results_satisfy_kkt_bookkeeping() {
        let cases: Vec<(Topology, NetworkUtilityProfile, FlowPopulation)> = vec![
            (linear2(1.0, 1.0), NetworkUtilityProfile::alpha_fair_uniform(3, 0.5, 1.0), ones(3)),
            (linear2(1.0, 2.0), NetworkUtilityProfile::alpha_fair_uniform(3, 5.0, 2.0), FlowPopulation::new(vec![3.0, 1.0, 0.5])),
            (
                linear2(2.0, 1.0),
                NetworkUtilityProfile::new(vec![
                    UtilitySpec::LogShifted { shift: 1.0 },
                    UtilitySpec::alpha_fair(1.0, 1.0),
                    UtilitySpec::Exponential { lambda: 2.0 },
                ]),
                ones(3),
            ),
        ];
        let cfg = SolverConfig::default();
        for (t, profile, y) in cases {
            let r = solve_num(&t, &profile, &y, &cfg).unwrap();
            assert!(crate::net::is_feasible(&t, &r.allocation, cfg.primal_tol).unwrap());
            assert!(r.kkt_residual <= cfg.kkt_tol);
            let loads = t.link_loads(&r.allocation).unwrap();
            for j in 0..t.n_links() {
                if r.link_prices[j] > cfg.kkt_tol {
                    assert!(loads[j] >= t.links()[j].capacity - 10.0 * cfg.primal_tol);
                }
            }
            for rr in 0..t.n_routes() {
                if y.counts[rr] > 0.0 {
                    assert!(
                        t.route_links(rr).iter().any(|j| r.saturated_links.contains(j)),
                        "active route {rr} crosses no saturated link"
                    );
                }
            }
        }
    }
}
