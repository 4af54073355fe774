//! Adaptive tracking of eigenvalue trajectories `p ↦ κ_p` inside a fixed
//! contour.
//!
//! The spectrum is solved on a uniform initial grid. Every interval between
//! neighbouring samples is then tested by solving at its midpoint and
//! comparing against interpolated predictions; failing intervals are split
//! until they pass or shrink below a width floor. Intervals that still fail
//! at the floor are singular: they contain a point where trajectories meet.
//! Links that passed the test define trajectory segments ("chains"), which
//! are therefore never continued across a singular interval.

mod events;
mod matching;
mod spline;

pub use events::{graded_offsets, Event, EventKind, LocateMethod, TRIPLE_RESIDUAL, VEERING_RATIO};
pub use matching::{default_gate, match_eigenvalues, MatchResult};
pub use spline::{ChainSpline, ComplexSpline, ParamMap, Spline};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::beyn::{self, BeynConfig, BeynError, ContourSpec};
use crate::nep::{Eigenpair, NepProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("solve failed at p = {p}: {source}")]
    Solve { p: f64, source: BeynError },
    #[error("invalid tracker configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub p_min: f64,
    pub p_max: f64,
    /// Trajectory reconstruction tolerance.
    pub tol: f64,
    pub spline_degree: usize,
    pub max_samples: usize,
    pub initial_samples: usize,
    /// Width floor for interval splitting, relative to `p_max - p_min`.
    pub min_width: f64,
    /// Eigenvalues closer than this fraction of the radius to the contour may
    /// appear or disappear between samples without failing a test.
    pub boundary_band: f64,
}

impl AdaptiveConfig {
    pub fn new(p_min: f64, p_max: f64) -> Self {
        AdaptiveConfig {
            p_min,
            p_max,
            tol: 1e-3,
            spline_degree: 7,
            max_samples: 4000,
            initial_samples: 17,
            min_width: 1e-8,
            boundary_band: 0.03,
        }
    }

    pub fn validate(&self, nep: &NepProblem) -> Result<(), TrackError> {
        let bad = |m: String| Err(TrackError::Config(m));
        if !(self.p_min.is_finite() && self.p_max.is_finite() && self.p_min < self.p_max) {
            return bad(format!("need p_min < p_max, got [{}, {}]", self.p_min, self.p_max));
        }
        if nep.is_transmission() {
            if self.p_min <= 0.0 {
                return bad("p_min must be positive for transmission problems".into());
            }
            if self.p_min <= 1.0 && 1.0 <= self.p_max {
                return bad("the parameter interval contains p = 1, the singular case n ≡ 1".into());
            }
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive".into());
        }
        if self.spline_degree == 0 {
            return bad("spline_degree must be at least 1".into());
        }
        if self.initial_samples < 2 {
            return bad("initial_samples must be at least 2".into());
        }
        if self.max_samples < self.initial_samples {
            return bad("max_samples is below initial_samples".into());
        }
        if !(self.min_width > 0.0 && self.min_width < 1.0) {
            return bad("min_width must lie in (0, 1)".into());
        }
        if !(self.boundary_band >= 0.0 && self.boundary_band < 1.0) {
            return bad("boundary_band must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// Solver output at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub p: f64,
    pub pairs: Vec<Eigenpair>,
}

impl Sample {
    /// Pair index of every slot; a pair of multiplicity `k` owns `k` slots.
    pub fn slot_pairs(&self) -> Vec<usize> {
        self.pairs.iter().enumerate().flat_map(|(i, e)| std::iter::repeat_n(i, e.multiplicity.max(1))).collect()
    }

    pub fn slot_values(&self) -> Vec<Complex64> {
        self.slot_pairs().into_iter().map(|i| self.pairs[i].kappa).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalStatus {
    Pending,
    /// Passed the midpoint test.
    Resolved,
    /// Failed at the width floor.
    Singular,
    /// Failed, but the sample budget was exhausted.
    Unresolved,
}

/// State of the interval between samples `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub status: IntervalStatus,
    /// Accepted slot links `(slot at i, slot at i + 1)`.
    pub links: Vec<(usize, usize)>,
}

impl Interval {
    fn pending() -> Self {
        Interval { status: IntervalStatus::Pending, links: Vec::new() }
    }
}

/// One point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajPoint {
    pub p: f64,
    pub kappa: Complex64,
    pub sample: usize,
    pub pair: usize,
    pub residual: f64,
}

/// A maximal run of accepted links: a trajectory segment that never crosses a
/// singular interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub label: usize,
    pub points: Vec<TrajPoint>,
    pub spline: Option<ChainSpline>,
}

impl Chain {
    pub fn start(&self) -> &TrajPoint {
        &self.points[0]
    }

    pub fn end(&self) -> &TrajPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn is_real(&self, tol_real: f64) -> bool {
        self.points.iter().all(|q| q.kappa.im.abs() <= tol_real)
    }

    /// Unit tangent `dκ/dp` direction at the end (`at_end`) or the start.
    pub fn direction(&self, at_end: bool) -> Option<Complex64> {
        let n = self.points.len();
        if n < 2 {
            return None;
        }
        let (a, b) = if at_end { (&self.points[n - 2], &self.points[n - 1]) } else { (&self.points[0], &self.points[1]) };
        let v = (b.kappa - a.kappa) / (b.p - a.p);
        (v.norm() > 0.0).then(|| v / v.norm())
    }
}

/// Trajectory under the smooth-continuation labeling: chains joined across
/// events so that the path keeps its direction of travel.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: usize,
    /// Chain labels in increasing `p`.
    pub chains: Vec<usize>,
    /// Parameter where the trajectory enters the contour, if after `p_min`.
    pub birth: Option<f64>,
    /// Parameter where it leaves, if before `p_max`.
    pub death: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub samples: Vec<Sample>,
    pub intervals: Vec<Interval>,
    /// Event-split labeling.
    pub chains: Vec<Chain>,
    /// Smooth-continuation labeling (equal to the chains until events are
    /// joined).
    pub trajectories: Vec<Trajectory>,
    pub budget_exhausted: bool,
}

impl TrajectorySet {
    pub fn intervals_with(&self, status: IntervalStatus) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .enumerate()
            .filter(|(_, iv)| iv.status == status)
            .map(|(i, _)| (self.samples[i].p, self.samples[i + 1].p))
            .collect()
    }

    pub fn unresolved_intervals(&self) -> Vec<(f64, f64)> {
        self.intervals_with(IntervalStatus::Unresolved)
    }

    pub fn singular_intervals(&self) -> Vec<(f64, f64)> {
        self.intervals_with(IntervalStatus::Singular)
    }

    /// All points of a smooth trajectory, in increasing `p`.
    pub fn points(&self, t: &Trajectory) -> Vec<TrajPoint> {
        t.chains.iter().flat_map(|&c| self.chains[c].points.iter().copied()).collect()
    }

    pub fn is_real(&self, t: &Trajectory, tol_real: f64) -> bool {
        t.chains.iter().all(|&c| self.chains[c].is_real(tol_real))
    }

    /// Spline value of chain `c` at `p` (which should lie in its domain).
    pub fn chain_value(&self, c: usize, p: f64) -> Option<Complex64> {
        self.chains[c].spline.as_ref().map(|s| s.eval(p))
    }
}

/// Problem, contour, solver and tracker settings bundled for repeated solves.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub nep: NepProblem,
    pub contour: ContourSpec,
    pub beyn: BeynConfig,
    pub adaptive: AdaptiveConfig,
}

struct Outcome {
    pass: bool,
    good: Vec<(usize, usize)>,
    /// Endpoints of failed links and unmatched eigenvalues.
    bad: Vec<Complex64>,
}

impl Outcome {
    /// Links kept when the interval is declared singular: those with an
    /// endpoint near the cluster of failures are dropped as well, since a
    /// branch passing within the cluster cannot be told apart from its
    /// members at this resolution.
    fn singular_links(self, a: &Sample, b: &Sample) -> Vec<(usize, usize)> {
        if self.bad.is_empty() {
            return self.good;
        }
        let c = self.bad.iter().sum::<Complex64>() / self.bad.len() as f64;
        let spread = self.bad.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
        let (va, vb) = (a.slot_values(), b.slot_values());
        self.good
            .into_iter()
            .filter(|&(i, j)| (va[i] - c).norm() > 2.0 * spread && (vb[j] - c).norm() > 2.0 * spread)
            .collect()
    }
}

impl Tracker {
    pub fn new(nep: NepProblem, contour: ContourSpec, beyn: BeynConfig, adaptive: AdaptiveConfig) -> Result<Self, TrackError> {
        adaptive.validate(&nep)?;
        contour.validate().map_err(|e| TrackError::Config(e.to_string()))?;
        beyn.validate().map_err(|e| TrackError::Config(e.to_string()))?;
        Ok(Tracker { nep, contour, beyn, adaptive })
    }

    pub fn tol_real(&self) -> f64 {
        1e-6 * self.contour.radius
    }

    pub fn solve_at(&self, p: f64) -> Result<Sample, TrackError> {
        let pairs = beyn::solve(&self.nep, p, &self.contour, &self.beyn).map_err(|source| TrackError::Solve { p, source })?;
        Ok(Sample { p, pairs })
    }

    pub fn solve_many(&self, ps: &[f64]) -> Result<Vec<Sample>, TrackError> {
        ps.par_iter().map(|&p| self.solve_at(p)).collect()
    }

    fn near_boundary(&self, z: Complex64) -> bool {
        self.contour.depth(z) < self.adaptive.boundary_band * self.contour.radius
    }

    /// Samples the spectrum adaptively over `[p_min, p_max]` and builds the
    /// chains.
    pub fn track(&self) -> Result<TrajectorySet, TrackError> {
        let cfg = &self.adaptive;
        let n0 = cfg.initial_samples;
        let ps: Vec<f64> = (0..n0)
            .map(|i| if i + 1 == n0 { cfg.p_max } else { cfg.p_min + (cfg.p_max - cfg.p_min) * i as f64 / (n0 - 1) as f64 })
            .collect();
        let samples = self.solve_many(&ps)?;
        let intervals = vec![Interval::pending(); samples.len() - 1];
        self.refine_loop(samples, intervals)
    }

    /// Runs the midpoint test on every pending interval until none remain or
    /// the budget is exhausted, then rebuilds the chains.
    pub(crate) fn refine_loop(&self, mut samples: Vec<Sample>, mut intervals: Vec<Interval>) -> Result<TrajectorySet, TrackError> {
        let cfg = &self.adaptive;
        let floor = cfg.min_width * (cfg.p_max - cfg.p_min);
        let mut budget_exhausted = false;
        loop {
            let pending: Vec<usize> =
                intervals.iter().enumerate().filter(|(_, iv)| iv.status == IntervalStatus::Pending).map(|(i, _)| i).collect();
            if pending.is_empty() {
                break;
            }
            let mids: Vec<f64> = pending.iter().map(|&i| 0.5 * (samples[i].p + samples[i + 1].p)).collect();
            let mid_samples = self.solve_many(&mids)?;
            let outcomes: Vec<Outcome> = pending
                .par_iter()
                .zip(mid_samples.par_iter())
                .map(|(&i, m)| self.test_interval(&samples, &intervals, i, m))
                .collect();

            let mut room = cfg.max_samples.saturating_sub(samples.len());
            let mut new_samples = Vec::with_capacity(samples.len() + pending.len());
            let mut new_intervals = Vec::with_capacity(intervals.len() + pending.len());
            let mut next = pending.iter().zip(outcomes.into_iter().zip(mid_samples)).peekable();
            for i in 0..samples.len() {
                new_samples.push(samples[i].clone());
                if i + 1 == samples.len() {
                    break;
                }
                match next.peek() {
                    Some((&j, _)) if j == i => {
                        let (_, (outcome, mid)) = next.next().expect("peeked");
                        let width = samples[i + 1].p - samples[i].p;
                        if outcome.pass {
                            new_intervals.push(Interval { status: IntervalStatus::Resolved, links: outcome.good });
                        } else if width <= floor {
                            let links = outcome.singular_links(&samples[i], &samples[i + 1]);
                            new_intervals.push(Interval { status: IntervalStatus::Singular, links });
                        } else if room == 0 {
                            budget_exhausted = true;
                            new_intervals.push(Interval { status: IntervalStatus::Unresolved, links: outcome.good });
                        } else {
                            room -= 1;
                            new_samples.push(mid);
                            new_intervals.push(Interval::pending());
                            new_intervals.push(Interval::pending());
                        }
                    }
                    _ => new_intervals.push(intervals[i].clone()),
                }
            }
            samples = new_samples;
            intervals = new_intervals;
        }
        let chains = build_chains(&samples, &intervals, cfg.spline_degree, cfg.p_max - cfg.p_min);
        let trajectories = chains
            .iter()
            .map(|c| Trajectory { label: c.label, chains: vec![c.label], birth: None, death: None })
            .collect();
        let mut set = TrajectorySet { samples, intervals, chains, trajectories, budget_exhausted };
        self.mark_birth_death(&mut set);
        Ok(set)
    }

    pub(crate) fn mark_birth_death(&self, set: &mut TrajectorySet) {
        let (lo, hi) = (set.samples[0].p, set.samples[set.samples.len() - 1].p);
        for t in set.trajectories.iter_mut() {
            let first = set.chains[t.chains[0]].start().p;
            let last = set.chains[*t.chains.last().expect("nonempty")].end().p;
            t.birth = (first > lo).then_some(first);
            t.death = (last < hi).then_some(last);
        }
    }

    /// Midpoint test for the interval `[samples[i], samples[i + 1]]`.
    fn test_interval(&self, samples: &[Sample], intervals: &[Interval], i: usize, mid: &Sample) -> Outcome {
        let tol = self.adaptive.tol;
        let (a, b) = (&samples[i], &samples[i + 1]);
        let va = a.slot_values();
        let vb = b.slot_values();
        let vm = mid.slot_values();
        let gate = default_gate(&va, &vb, 10.0 * tol);
        let ab = match_eigenvalues(&va, &vb, gate);
        let mut bad: Vec<Complex64> = Vec::new();
        bad.extend(ab.unmatched_prev.iter().map(|&k| va[k]).filter(|&z| !self.near_boundary(z)));
        bad.extend(ab.unmatched_next.iter().map(|&k| vb[k]).filter(|&z| !self.near_boundary(z)));
        let mut pass = bad.is_empty();

        // Neighbour points come only from intervals that already passed.
        let left = (i > 0 && intervals[i - 1].status == IntervalStatus::Resolved)
            .then(|| (&samples[i - 1], &intervals[i - 1].links));
        let right = (i + 2 < samples.len() && intervals[i + 1].status == IntervalStatus::Resolved)
            .then(|| (&samples[i + 2], &intervals[i + 1].links));
        let preds: Vec<Complex64> = ab
            .assignment
            .iter()
            .map(|&(ia, ib)| {
                let mut pts = vec![(a.p, va[ia]), (b.p, vb[ib])];
                if let Some((s, links)) = left {
                    if let Some(&(k, _)) = links.iter().find(|l| l.1 == ia) {
                        pts.insert(0, (s.p, s.slot_values()[k]));
                    }
                }
                if let Some((s, links)) = right {
                    if let Some(&(_, k)) = links.iter().find(|l| l.0 == ib) {
                        pts.push((s.p, s.slot_values()[k]));
                    }
                }
                lagrange(&pts, mid.p)
            })
            .collect();

        let pm = match_eigenvalues(&preds, &vm, f64::INFINITY);
        if !pm.unmatched_next.iter().all(|&k| self.near_boundary(vm[k])) {
            pass = false;
        }
        let mid_pairs = mid.slot_pairs();
        let (pa, pb) = (a.slot_pairs(), b.slot_pairs());
        let tol_real = self.tol_real();
        let mut good = Vec::new();
        for (li, &(ia, ib)) in ab.assignment.iter().enumerate() {
            let (ea, eb) = (&a.pairs[pa[ia]], &b.pairs[pb[ib]]);
            // A real eigenvalue of a real family leaves the axis only through
            // a collision, and a continuous branch keeps its eigenvector.
            let same_kind = (ea.kappa.im.abs() <= tol_real) == (eb.kappa.im.abs() <= tol_real);
            let ok = same_kind && overlap(&ea.coeffs, &eb.coeffs) >= OVERLAP_MIN && match pm.partner_of_prev(li) {
                None => self.near_boundary(preds[li]),
                Some(q) => {
                    let d = (preds[li] - vm[q]).norm();
                    let others = vm
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| mid_pairs[*r] != mid_pairs[q])
                        .map(|(_, z)| (preds[li] - z).norm())
                        .fold(f64::INFINITY, f64::min);
                    d <= tol && d <= 0.5 * others
                }
            };
            if ok {
                good.push((ia, ib));
            } else {
                pass = false;
                bad.push(va[ia]);
                bad.push(vb[ib]);
            }
        }
        Outcome { pass, good, bad }
    }

    /// Largest deviation between each chain's spline and freshly solved
    /// eigenvalues at `per_interval` equispaced interior points of every
    /// interval between consecutive chain samples.
    pub fn verify_reconstruction(&self, set: &TrajectorySet, per_interval: usize) -> Result<ReconstructionCheck, TrackError> {
        let mut probes: Vec<(usize, f64)> = Vec::new();
        for c in &set.chains {
            if c.spline.is_none() {
                continue;
            }
            for w in c.points.windows(2) {
                for k in 1..=per_interval {
                    let t = k as f64 / (per_interval + 1) as f64;
                    probes.push((c.label, w[0].p + t * (w[1].p - w[0].p)));
                }
            }
        }
        let mut ps: Vec<f64> = probes.iter().map(|x| x.1).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        let solved = self.solve_many(&ps)?;
        let mut worst = ReconstructionCheck { max_error: 0.0, label: None, p: f64::NAN, points: probes.len() };
        for (label, p) in probes {
            let idx = ps.binary_search_by(|x| x.total_cmp(&p)).expect("probe solved");
            let z = set.chain_value(label, p).expect("spline present");
            let err = solved[idx].pairs.iter().map(|e| (e.kappa - z).norm()).fold(f64::INFINITY, f64::min);
            let err = if self.near_boundary(z) && err.is_infinite() { 0.0 } else { err };
            if err > worst.max_error || err.is_nan() {
                worst = ReconstructionCheck { max_error: err, label: Some(label), p, points: worst.points };
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReconstructionCheck {
    pub max_error: f64,
    pub label: Option<usize>,
    pub p: f64,
    pub points: usize,
}

/// Smallest accepted `|⟨u, v⟩| / (|u| |v|)` between the null vectors at the
/// two ends of a link.
pub const OVERLAP_MIN: f64 = 0.9;

fn overlap(u: &[Complex64], v: &[Complex64]) -> f64 {
    let dot: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let nu = u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    dot.norm() / (nu * nv)
}

/// Value at `x` of the polynomial through `pts`.
fn lagrange(pts: &[(f64, Complex64)], x: f64) -> Complex64 {
    let mut out = Complex64::new(0.0, 0.0);
    for (i, &(xi, yi)) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (j, &(xj, _)) in pts.iter().enumerate() {
            if i != j {
                w *= (x - xj) / (xi - xj);
            }
        }
        out += yi * w;
    }
    out
}

pub(crate) fn build_chains(samples: &[Sample], intervals: &[Interval], degree: usize, scale: f64) -> Vec<Chain> {
    let mut chains: Vec<Chain> = Vec::new();
    let mut open: Vec<Option<usize>> = Vec::new();
    for (s, sample) in samples.iter().enumerate() {
        let slots = sample.slot_pairs();
        let mut now = vec![None; slots.len()];
        for (k, &pair) in slots.iter().enumerate() {
            let prev = if s == 0 { None } else { intervals[s - 1].links.iter().find(|l| l.1 == k).and_then(|l| open[l.0]) };
            let e = &sample.pairs[pair];
            let pt = TrajPoint { p: sample.p, kappa: e.kappa, sample: s, pair, residual: e.residual };
            let id = match prev {
                Some(c) => {
                    chains[c].points.push(pt);
                    c
                }
                None => {
                    chains.push(Chain { label: chains.len(), points: vec![pt], spline: None });
                    chains.len() - 1
                }
            };
            now[k] = Some(id);
        }
        open = now;
    }
    for c in chains.iter_mut() {
        c.spline = fit_chain(&c.points, degree, ParamMap::linear(scale));
    }
    chains
}

pub(crate) fn fit_chain(points: &[TrajPoint], degree: usize, map: ParamMap) -> Option<ChainSpline> {
    if points.len() < 2 {
        return None;
    }
    let x: Vec<f64> = points.iter().map(|q| q.p).collect();
    let z: Vec<Complex64> = points.iter().map(|q| q.kappa).collect();
    ChainSpline::interpolate(&x, &z, degree, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nep::ToyKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn toy_tracker(kind: ToyKind, lo: f64, hi: f64) -> Tracker {
        let nep = NepProblem::toy(kind).unwrap();
        let contour = ContourSpec::new(c(0.0, 0.0), 3.0, 128).unwrap();
        Tracker::new(nep, contour, BeynConfig::default(), AdaptiveConfig::new(lo, hi)).unwrap()
    }

    #[test]
    fn lagrange_is_exact_for_cubics() {
        let f = |x: f64| c(x * x * x - x, 2.0 * x);
        let pts: Vec<_> = [0.0, 0.5, 1.5, 3.0].iter().map(|&x| (x, f(x))).collect();
        assert!((lagrange(&pts, 2.2) - f(2.2)).norm() < 1e-12);
    }

    #[test]
    fn straight_lines_without_crossing() {
        let t = toy_tracker(ToyKind::Crossing, 0.2, 1.0);
        let set = t.track().unwrap();
        assert_eq!(set.chains.len(), 2);
        assert!(set.singular_intervals().is_empty());
        assert_eq!(set.samples.len(), 17);
        for ch in &set.chains {
            let s = ch.spline.as_ref().unwrap();
            let sign = ch.start().kappa.re.signum();
            for k in 0..50 {
                let p = 0.2 + 0.8 * k as f64 / 49.0;
                assert!((s.eval(p) - c(sign * p, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn config_rejects_singular_interval() {
        let nep = NepProblem::disk(0);
        let contour = ContourSpec::new(c(2.5, 0.0), 1.5, 128).unwrap();
        assert!(Tracker::new(nep, contour, BeynConfig::default(), AdaptiveConfig::new(0.5, 2.0)).is_err());
    }
}
