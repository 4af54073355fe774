//! Invariant suite shared by the command-line `selftest` and the test
//! targets: Bessel identities, the real-axis reference table, and the four
//! toy fixtures run through the full tracking pipeline.

use num_complex::Complex64;

use crate::analysis::{fit_rate, Side};
use crate::beyn::{BeynConfig, ContourSpec};
use crate::linalg;
use crate::nep::{NepProblem, ToyKind};
use crate::special::checks::{
    conjugate_check, ode_check, parse_table, recurrence_check, sample_grid, table_check, wronskian_check,
};
use crate::tracker::{AdaptiveConfig, Event, EventKind, LocateMethod, TrackError, Tracker, TrajectorySet};

/// Real-axis Bessel reference values generated at 200 digits.
pub const BESSEL_TABLE: &str = include_str!("../tests/fixtures/bessel_real_axis.txt");

/// Points in the random identity grid.
pub const GRID_POINTS: usize = 1000;
const GRID_SEED: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult { name: name.to_string(), passed, detail }
    }
}

/// Wronskian, recurrence, ODE and conjugation identities on the random grid,
/// and agreement with the reference `table` text.
pub fn bessel_checks(table: &str) -> Vec<CheckResult> {
    let pts = sample_grid(GRID_POINTS, GRID_SEED);
    let mut out: Vec<CheckResult> = [
        ("wronskian", wronskian_check(&pts)),
        ("recurrence", recurrence_check(&pts)),
        ("bessel-ode", ode_check(&pts)),
        ("conjugation", conjugate_check(&pts)),
    ]
    .into_iter()
    .map(|(name, w)| CheckResult::new(name, w.passed(), format!("worst ratio {:.3e} at m={} z={}", w.ratio, w.m, w.z)))
    .collect();
    let table = match parse_table(table) {
        Ok(rows) => match table_check(&rows) {
            Ok(w) => CheckResult::new(
                "bessel-table",
                w.passed(),
                format!("{} rows, worst ratio {:.3e} at m={} x={}", rows.len(), w.ratio, w.m, w.z.re),
            ),
            Err(e) => CheckResult::new("bessel-table", false, e.to_string()),
        },
        Err(e) => CheckResult::new("bessel-table", false, e.to_string()),
    };
    out.push(table);
    out
}

/// Result of the full pipeline on a toy problem.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub tracker: Tracker,
    pub set: TrajectorySet,
    pub events: Vec<Event>,
}

/// Tracks, detects events, refines around them and joins smooth
/// trajectories.
pub fn run_toy(kind: ToyKind, lo: f64, hi: f64, center: Complex64, radius: f64) -> Result<ToyRun, TrackError> {
    let nep = NepProblem::toy(kind).map_err(|e| TrackError::Config(e.to_string()))?;
    let contour = ContourSpec::new(center, radius, 128).map_err(|e| TrackError::Config(e.to_string()))?;
    let tracker = Tracker::new(nep, contour, BeynConfig::default(), AdaptiveConfig::new(lo, hi))?;
    let mut set = tracker.track()?;
    let events = tracker.detect_events(&mut set)?;
    let mut set = tracker.refine_near_events(set, &events)?;
    let events = tracker.detect_events(&mut set)?;
    tracker.join_at_events(&mut set, &events);
    Ok(ToyRun { tracker, set, events })
}

fn failed(name: &str, e: TrackError) -> CheckResult {
    CheckResult::new(name, false, e.to_string())
}

/// `diag(λ − p, λ + p)` on `[−1, 1]`: two trajectories on the lines `±p`
/// crossing at the origin.
pub fn check_crossing() -> CheckResult {
    let name = "toy-crossing";
    let run = match run_toy(ToyKind::Crossing, -1.0, 1.0, Complex64::new(0.1, 0.05), 1.5) {
        Ok(r) => r,
        Err(e) => return failed(name, e),
    };
    let mut worst = 0.0f64;
    for t in &run.set.trajectories {
        let pts = run.set.points(t);
        let slope = pts[0].kappa.re / pts[0].p;
        for q in &pts {
            worst = worst.max((q.kappa - Complex64::new(slope * q.p, 0.0)).norm());
        }
    }
    let bif: Vec<&Event> = run.events.iter().filter(|e| e.is_bifurcation()).collect();
    let at_origin = bif.len() == 1 && bif[0].p_star.abs() < 1e-8 && bif[0].kappa_star.norm() < 1e-8;
    let ok = run.set.trajectories.len() == 2 && worst < 1e-12 && at_origin;
    CheckResult::new(
        name,
        ok,
        format!("{} trajectories, max line error {worst:.2e}, {} crossing events", run.set.trajectories.len(), bif.len()),
    )
}

/// Fitted exponent of `|κ − κ*|` against `|p − p*|` for each chain meeting
/// at `event`, on the side where the chain lives.
pub fn branch_exponents(run: &ToyRun, event: &Event) -> Vec<f64> {
    let mut out = Vec::new();
    for (chains, side) in [(&event.chains_in, Side::Left), (&event.chains_out, Side::Right)] {
        for &c in chains {
            let samples: Vec<(f64, f64)> =
                run.set.chains[c].points.iter().map(|q| (q.p, (q.kappa - event.kappa_star).norm())).collect();
            if let Ok(f) = fit_rate(&samples, event.p_star, side) {
                out.push(f.alpha);
            }
        }
    }
    out
}

/// `[[λ, 1], [p, λ]]` on `[−1, 1]`: a double root at the origin with
/// branches `±√p`, so the exponent `1/M` is `1/2` and `α = 1 − 1/M = 1/2`.
pub fn check_algebraic() -> CheckResult {
    let name = "toy-algebraic";
    let run = match run_toy(ToyKind::Algebraic, -1.0, 1.0, Complex64::new(0.1, 0.05), 1.5) {
        Ok(r) => r,
        Err(e) => return failed(name, e),
    };
    let bif: Vec<&Event> = run.events.iter().filter(|e| e.is_bifurcation()).collect();
    let Some(e) = bif.first().filter(|_| bif.len() == 1) else {
        return CheckResult::new(name, false, format!("expected one event, found {}", bif.len()));
    };
    let exps = branch_exponents(&run, e);
    let orders: Vec<usize> = exps.iter().map(|x| (1.0 / x).round() as usize).collect();
    let ok = e.kind == EventKind::RealTouch
        && e.method == LocateMethod::DoubleRoot
        && e.root_multiplicity == Some(2)
        && e.p_star.abs() < 1e-8
        && exps.len() == 4
        && orders.iter().all(|&m| m == 2)
        && exps.iter().all(|x| (x - 0.5).abs() < 1e-3);
    CheckResult::new(
        name,
        ok,
        format!("event at p*={:.2e} multiplicity {:?}, branch exponents {exps:.4?}", e.p_star, e.root_multiplicity),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeeringMeasure {
    pub eps: f64,
    pub gap: f64,
    pub curvature: f64,
    pub p_star: f64,
}

/// `[[λ − 2p, ε], [ε, λ]]`: eigenvalues `p ± √(p² + ε²)`, minimum gap `2ε`
/// at `p = 0` where `|κ''|` peaks at `1/ε`.
pub fn measure_veering(eps: f64) -> Result<VeeringMeasure, TrackError> {
    let run = run_toy(ToyKind::Veering { eps }, -1.0, 1.0, Complex64::new(0.4, 0.05), 2.0)?;
    let v = run
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Veering)
        .max_by(|a, b| a.curvature.unwrap_or(0.0).total_cmp(&b.curvature.unwrap_or(0.0)))
        .ok_or_else(|| TrackError::Config(format!("no veering detected for ε = {eps}")))?;
    Ok(VeeringMeasure { eps, gap: v.gap.unwrap_or(f64::NAN), curvature: v.curvature.unwrap_or(f64::NAN), p_star: v.p_star })
}

pub const VEERING_EPS: [f64; 3] = [0.05, 0.01, 0.002];

pub fn check_veering() -> CheckResult {
    let name = "toy-veering";
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in VEERING_EPS {
        match measure_veering(eps) {
            Ok(m) => {
                let g = m.gap / (2.0 * eps);
                let c = m.curvature * eps;
                ok &= (1.0 / 3.0..=3.0).contains(&g) && (1.0 / 3.0..=3.0).contains(&c);
                parts.push(format!("ε={eps}: gap/2ε={g:.3} |κ''|ε={c:.3}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("ε={eps}: {e}"));
            }
        }
    }
    CheckResult::new(name, ok, parts.join(", "))
}

/// `[[λ, p], [0, λ]]`: one defective eigenvalue `0` of algebraic
/// multiplicity 2 at every `p ≠ 0`.
pub fn check_degenerate() -> CheckResult {
    let name = "toy-degenerate";
    let run = match run_toy(ToyKind::Degenerate, -1.0, 1.0, Complex64::new(0.1, 0.05), 1.0) {
        Ok(r) => r,
        Err(e) => return failed(name, e),
    };
    let mut bad = 0;
    let mut worst = 0.0f64;
    for s in run.set.samples.iter().filter(|s| s.p != 0.0) {
        let single = s.pairs.len() == 1 && s.pairs[0].multiplicity == 2;
        // Geometric multiplicity one: L(0, p) keeps rank 1.
        let rank_one = run
            .tracker
            .nep
            .evaluate(Complex64::new(0.0, 0.0), s.p)
            .map(|a| linalg::smallest_right_singular(&a).0[0] > 0.5 * s.p.abs())
            .unwrap_or(false);
        if !(single && rank_one) {
            bad += 1;
        }
        for e in &s.pairs {
            worst = worst.max(e.kappa.norm());
        }
    }
    let ok = bad == 0 && worst < 1e-6;
    CheckResult::new(
        name,
        ok,
        format!("{} samples, {bad} without a single defective double eigenvalue, max |κ| {worst:.2e}", run.set.samples.len()),
    )
}

pub fn toy_checks() -> Vec<CheckResult> {
    vec![check_crossing(), check_algebraic(), check_veering(), check_degenerate()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_table_is_named() {
        let bad = BESSEL_TABLE.replacen("0 0.001", "0 0.001 7", 1);
        let res = bessel_checks(&bad);
        let t = res.iter().find(|c| c.name == "bessel-table").unwrap();
        assert!(!t.passed);
        assert!(t.detail.contains("line 1"), "{}", t.detail);
    }
}
