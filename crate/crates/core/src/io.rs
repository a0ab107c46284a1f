//! Scenario files: JSON descriptions of a topology, per-route utilities, and
//! flow counts.
//!
//! ```json
//! {
//!   "links":  [{"id": "j1", "capacity": 1.0}],
//!   "routes": [{"id": "r1", "links": ["j1"], "weight": 1.0,
//!               "utility": {"kind": "alpha-fair", "alpha": 2.0}}],
//!   "flows":  {"r1": 3.0},
//!   "expect": "consistent"
//! }
//! ```
//!
//! Missing `flows` entries default to 1.0. A route without `utility` gets
//! alpha-fair with α = 1 and the route's `weight`. Unknown keys are ignored
//! with a warning listing them; an unknown utility `kind` is a hard error.
//! `expect` ("violation" | "consistent") marks what a sweep should find and
//! exists mainly for negative controls.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::net::{build_topology, FlowPopulation, Link, Route, Topology};
use crate::utility::{NetworkUtilityProfile, UtilitySpec};

#[derive(Debug)]
pub struct Scenario {
    pub topology: Topology,
    pub profile: NetworkUtilityProfile,
    pub population: FlowPopulation,
    /// Sweep expectation from the file, if stated.
    pub expect_violation: Option<bool>,
    /// Lenient-parse notes (unknown keys, ignored fields).
    pub warnings: Vec<String>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::Parse("top level must be a JSON object".into()))?;
    let mut warnings = Vec::new();
    warn_unknown_keys(obj, &["links", "routes", "flows", "expect"], "top level", &mut warnings);

    let links = parse_links(obj, &mut warnings)?;
    let (routes, utilities) = parse_routes(obj, &mut warnings)?;
    let counts = parse_flows(obj, &routes)?;
    let expect_violation = parse_expect(obj)?;

    let topology = build_topology(links, routes)?;
    let profile = NetworkUtilityProfile::new(utilities);
    profile.validate()?;
    Ok(Scenario {
        topology,
        profile,
        population: FlowPopulation::new(counts),
        expect_violation,
        warnings,
    })
}

fn warn_unknown_keys(obj: &Map<String, Value>, known: &[&str], at: &str, warnings: &mut Vec<String>) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            warnings.push(format!("unknown key `{key}` at {at} ignored"));
        }
    }
}

fn get_f64(obj: &Map<String, Value>, key: &str, at: &str) -> Result<Option<f64>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Error::Parse(format!("{at}.{key} must be a number, got {v}"))),
    }
}

fn parse_links(obj: &Map<String, Value>, warnings: &mut Vec<String>) -> Result<Vec<Link>> {
    let arr = obj
        .get("links")
        .ok_or_else(|| Error::Parse("missing required key `links`".into()))?
        .as_array()
        .ok_or_else(|| Error::Parse("`links` must be an array".into()))?;
    let mut links = Vec::with_capacity(arr.len());
    for (i, v) in arr.iter().enumerate() {
        let at = format!("links[{i}]");
        let lo = v
            .as_object()
            .ok_or_else(|| Error::Parse(format!("{at} must be an object")))?;
        warn_unknown_keys(lo, &["id", "capacity"], &at, warnings);
        let id = lo
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse(format!("{at}.id must be a string")))?;
        let capacity = get_f64(lo, "capacity", &at)?
            .ok_or_else(|| Error::Parse(format!("{at}.capacity is required")))?;
        links.push(Link::new(id, capacity));
    }
    Ok(links)
}

fn parse_routes(
    obj: &Map<String, Value>,
    warnings: &mut Vec<String>,
) -> Result<(Vec<Route>, Vec<UtilitySpec>)> {
    let arr = obj
        .get("routes")
        .ok_or_else(|| Error::Parse("missing required key `routes`".into()))?
        .as_array()
        .ok_or_else(|| Error::Parse("`routes` must be an array".into()))?;
    let mut routes = Vec::with_capacity(arr.len());
    let mut utilities = Vec::with_capacity(arr.len());
    for (i, v) in arr.iter().enumerate() {
        let at = format!("routes[{i}]");
        let ro = v
            .as_object()
            .ok_or_else(|| Error::Parse(format!("{at} must be an object")))?;
        warn_unknown_keys(ro, &["id", "links", "weight", "utility"], &at, warnings);
        let id = ro
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse(format!("{at}.id must be a string")))?;
        let link_ids = ro
            .get("links")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse(format!("{at}.links must be an array of strings")))?
            .iter()
            .map(|l| {
                l.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Parse(format!("{at}.links entries must be strings, got {l}")))
            })
            .collect::<Result<Vec<String>>>()?;
        let weight = get_f64(ro, "weight", &at)?.unwrap_or(1.0);
        let utility = match ro.get("utility") {
            None => UtilitySpec::alpha_fair(1.0, weight),
            Some(uv) => parse_utility(uv, weight, &at, warnings)?,
        };
        let refs: Vec<&str> = link_ids.iter().map(String::as_str).collect();
        routes.push(Route::new(id, &refs));
        utilities.push(utility);
    }
    Ok((routes, utilities))
}

fn parse_utility(
    v: &Value,
    route_weight: f64,
    at: &str,
    warnings: &mut Vec<String>,
) -> Result<UtilitySpec> {
    let at = format!("{at}.utility");
    let uo = v
        .as_object()
        .ok_or_else(|| Error::Parse(format!("{at} must be an object")))?;
    let kind = uo
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Parse(format!("{at}.kind must be a string")))?;
    let known: &[&str] = match kind {
        "alpha-fair" => &["kind", "alpha", "weight"],
        "exponential" => &["kind", "lambda"],
        "log-shifted" => &["kind", "shift"],
        other => {
            return Err(Error::Parse(format!(
                "{at}.kind `{other}` is not recognized; valid kinds: alpha-fair, exponential, log-shifted"
            )))
        }
    };
    warn_unknown_keys(uo, known, &at, warnings);
    Ok(match kind {
        "alpha-fair" => {
            let alpha = get_f64(uo, "alpha", &at)?.unwrap_or(1.0);
            // An explicit utility weight wins over the route-level weight.
            let weight = get_f64(uo, "weight", &at)?.unwrap_or(route_weight);
            UtilitySpec::alpha_fair(alpha, weight)
        }
        "exponential" => {
            if route_weight != 1.0 {
                warnings.push(format!("{at}: route weight is ignored for kind `exponential`"));
            }
            UtilitySpec::Exponential { lambda: get_f64(uo, "lambda", &at)?.unwrap_or(1.0) }
        }
        _ => {
            if route_weight != 1.0 {
                warnings.push(format!("{at}: route weight is ignored for kind `log-shifted`"));
            }
            UtilitySpec::LogShifted { shift: get_f64(uo, "shift", &at)?.unwrap_or(1.0) }
        }
    })
}

fn parse_flows(obj: &Map<String, Value>, routes: &[Route]) -> Result<Vec<f64>> {
    let mut counts = vec![1.0; routes.len()];
    let Some(fv) = obj.get("flows") else { return Ok(counts) };
    let fo = fv
        .as_object()
        .ok_or_else(|| Error::Parse("`flows` must be an object mapping route id to count".into()))?;
    for (key, v) in fo {
        let idx = routes
            .iter()
            .position(|r| r.id == *key)
            .ok_or_else(|| Error::Parse(format!("flows references unknown route `{key}`")))?;
        let count = v
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("flows.{key} must be a number, got {v}")))?;
        if !(count >= 0.0) || !count.is_finite() {
            return Err(Error::Parse(format!("flows.{key} must be finite and >= 0, got {count}")));
        }
        counts[idx] = count;
    }
    Ok(counts)
}

fn parse_expect(obj: &Map<String, Value>) -> Result<Option<bool>> {
    match obj.get("expect") {
        None => Ok(None),
        Some(v) => match v.as_str() {
            Some("violation") => Ok(Some(true)),
            Some("consistent") => Ok(Some(false)),
            _ => Err(Error::Parse(format!(
                "`expect` must be \"violation\" or \"consistent\", got {v}"
            ))),
        },
    }
}
