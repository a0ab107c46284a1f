//! Output artifacts: CSV tables and plain-text reports with byte-stable
//! formatting, so reruns diff clean. All floats go through [`fmt_sig6`]
//! (6 significant digits, ties to even) and files land atomically via a
//! temp-name rename.

use std::fs;
use std::path::Path;

use crate::checks::CheckReport;
use crate::error::{Error, Result};
use crate::net::{FlowPopulation, Topology};
use crate::rra::RraProfile;
use crate::solver::SolveResult;
use crate::sweep::SweepSummary;

/// Fixed-width float rendering: 6 significant digits, plain notation while the
/// exponent stays in a readable band, scientific outside it. Rust's float
/// formatting rounds ties to even, which keeps reruns byte-identical.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0.000000".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci[sci.find('e').expect("always present") + 1..]
        .parse()
        .expect("exponent is an integer");
    if (-4..=5).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Write via a sibling temp file and rename, so readers never see a partial
/// file and a crashed run leaves the old artifact intact.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let io_err = |source: std::io::Error| Error::Io { path: path.display().to_string(), source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, content).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Columns: route, population, rate, per_flow_rate. Row order follows the
/// topology's route order.
pub fn allocation_csv(topology: &Topology, y: &FlowPopulation, result: &SolveResult) -> String {
    let mut out = String::from("route,population,rate,per_flow_rate\n");
    for (r, route) in topology.routes().iter().enumerate() {
        let count = y.counts[r];
        let rate = result.allocation.rates[r];
        let per_flow = if count > 0.0 { rate / count } else { 0.0 };
        out.push_str(&format!(
            "{},{},{},{}\n",
            route.id,
            fmt_sig6(count),
            fmt_sig6(rate),
            fmt_sig6(per_flow)
        ));
    }
    out
}

/// Columns: link, capacity, load, price, saturated.
pub fn links_csv(topology: &Topology, result: &SolveResult) -> Result<String> {
    let loads = topology.link_loads(&result.allocation)?;
    let mut out = String::from("link,capacity,load,price,saturated\n");
    for (j, link) in topology.links().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            link.id,
            fmt_sig6(link.capacity),
            fmt_sig6(loads[j]),
            fmt_sig6(result.link_prices[j]),
            yes_no(result.saturated_links.contains(&j))
        ));
    }
    Ok(out)
}

pub fn solve_report(result: &SolveResult) -> String {
    format!(
        "objective: {}\nkkt_residual: {}\niterations: {}\nconverged: {}\nsaturated_links: {}\n",
        fmt_sig6(result.objective),
        fmt_sig6(result.kkt_residual),
        result.iterations,
        yes_no(result.converged),
        result.saturated_links.len()
    )
}

/// One row per violation, then per inconclusive trial.
/// Columns: sample, a, base, scaled, deviation, kind.
pub fn witnesses_csv(report: &CheckReport) -> String {
    let mut out = String::from("sample,a,base,scaled,deviation,kind\n");
    for w in report.violations.iter().chain(&report.inconclusive) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            w.sample,
            fmt_sig6(w.a),
            fmt_sig6(w.base),
            fmt_sig6(w.scaled),
            fmt_sig6(w.deviation),
            w.kind
        ));
    }
    out
}

pub fn check_report_text(report: &CheckReport) -> String {
    let verdict = match report.verdict {
        crate::checks::Verdict::ConsistentWithProperty => "consistent-with-property",
        crate::checks::Verdict::Violated => "violated",
    };
    format!(
        "property: {}\nverdict: {}\npairs_tested: {}\npairs_skipped: {}\nviolations: {}\ninconclusive: {}\nmax_deviation: {}\n",
        report.property,
        verdict,
        report.pairs_tested,
        report.pairs_skipped,
        report.violations.len(),
        report.inconclusive.len(),
        fmt_sig6(report.max_deviation)
    )
}

/// Columns: topology, profile, a, deviation, violated, expected_violation,
/// inconclusive. Row order follows the battery order.
pub fn summary_csv(summary: &SweepSummary) -> String {
    let mut out = String::from("topology,profile,a,deviation,violated,expected_violation,inconclusive\n");
    for r in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.topology,
            r.profile,
            fmt_sig6(r.a),
            fmt_sig6(r.deviation),
            yes_no(r.violated),
            yes_no(r.expected_violation),
            yes_no(r.inconclusive)
        ));
    }
    out
}

pub fn sweep_report_text(summary: &SweepSummary) -> String {
    format!(
        "note: {}\nrows: {}\npattern_ok: {}\ninconclusive: {}\n",
        summary.note,
        summary.rows.len(),
        yes_no(summary.pattern_ok),
        yes_no(summary.inconclusive)
    )
}

pub fn rra_report_text(profile: &RraProfile) -> String {
    let max_dev = profile
        .rra_values
        .iter()
        .map(|v| (v - profile.alpha_hat).abs())
        .fold(0.0f64, f64::max);
    format!(
        "alpha_hat: {}\nw_hat: {}\nis_constant: {}\npoints: {}\nmax_rra_spread: {}\n",
        fmt_sig6(profile.alpha_hat),
        fmt_sig6(profile.w_hat),
        yes_no(profile.is_constant),
        profile.x_grid.len(),
        fmt_sig6(max_dev)
    )
}

/// Columns: x, rra.
pub fn rra_csv(profile: &RraProfile) -> String {
    let mut out = String::from("x,rra\n");
    for (x, v) in profile.x_grid.iter().zip(&profile.rra_values) {
        out.push_str(&format!("{},{}\n", fmt_sig6(*x), fmt_sig6(*v)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits_across_magnitudes() {
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig6(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_sig6(0.5), "0.500000");
        assert_eq!(fmt_sig6(1.0), "1.00000");
        assert_eq!(fmt_sig6(-1.0 / 3.0), "-0.333333");
        assert_eq!(fmt_sig6(123456.0), "123456");
        assert_eq!(fmt_sig6(0.0), "0.000000");
        assert_eq!(fmt_sig6(1e-4), "0.000100000");
        assert_eq!(fmt_sig6(9.5e-7), "9.50000e-7");
        assert_eq!(fmt_sig6(1.23456789e8), "1.23457e8");
        assert_eq!(fmt_sig6(1.0 + 2f64.sqrt()).len(), 7);
    }

    #[test]
    fn rounding_goes_to_even_on_ties() {
        // Exactly representable halves land on the even neighbor.
        assert_eq!(format!("{:.0}", 0.5), "0");
        assert_eq!(format!("{:.0}", 1.5), "2");
        assert_eq!(format!("{:.0}", 2.5), "2");
        assert_eq!(fmt_sig6(0.062500), "0.0625000");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("report-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert!(!path.with_extension("csv.tmp").exists());
        fs::remove_dir_all(&dir).unwrap();
    }
}
