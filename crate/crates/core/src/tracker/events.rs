//! Event detection on tracked trajectories: location of the points where
//! chains meet, joining chains into smooth trajectories, veering detection
//! and sample refinement toward events.

use num_complex::Complex64;

use super::matching::assign_min_cost;
use super::{fit_chain, Chain, IntervalStatus, Interval, ParamMap, TrackError, Tracker, Trajectory, TrajectorySet};

/// Ratio of the peak to the median second derivative that flags veering.
pub const VEERING_RATIO: f64 = 100.0;
/// Residual `|F|`, relative to the largest `|F|` on the surrounding Cauchy
/// torus, below which a point solving `∂κF = ∂κ²F = 0` is accepted as a
/// triple root.
pub const TRIPLE_RESIDUAL: f64 = 1e-9;
const NEWTON_ITERATIONS: usize = 40;
const TORUS_NODES_KAPPA: usize = 16;
const TORUS_NODES_P: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// A non-real conjugate pair reaches the real axis.
    RealTouch,
    /// Real trajectories meet.
    Collision,
    /// Two trajectories nearly meet with a large but finite second derivative.
    Veering,
}

impl EventKind {
    pub fn tag(self) -> &'static str {
        match self {
            EventKind::RealTouch => "real-touch",
            EventKind::Collision => "collision",
            EventKind::Veering => "veering",
        }
    }
}

/// How `(p*, κ*)` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocateMethod {
    /// Newton on `F = ∂κF = 0`, `F = det L`: a double root.
    DoubleRoot,
    /// Newton on `∂κF = ∂κ²F = 0` with `F` vanishing there: a triple root.
    TripleRoot,
    /// Newton failed; centroid of the meeting chains at the zone midpoint.
    Interpolated,
    /// Minimum distance between two veering chains.
    MinimumGap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub p_star: f64,
    pub kappa_star: Complex64,
    pub method: LocateMethod,
    /// Parameter bracket of the singular zone (a point for veering).
    pub zone: (f64, f64),
    /// Chains (event-split labels) arriving at and leaving the event. For
    /// veering both lists hold the two chains.
    pub chains_in: Vec<usize>,
    pub chains_out: Vec<usize>,
    /// Root multiplicity of `det L(·, p*)` at `κ*`, when located by Newton.
    pub root_multiplicity: Option<usize>,
    /// Minimum distance between the two chains, for veering.
    pub gap: Option<f64>,
    /// Peak `|κ''|`, for veering.
    pub curvature: Option<f64>,
    /// The event lies within the boundary band of the contour.
    pub near_boundary: bool,
}

impl Event {
    pub fn is_bifurcation(&self) -> bool {
        self.kind != EventKind::Veering
    }

    /// All chains taking part, sorted and deduplicated.
    pub fn chains(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.chains_in.iter().chain(&self.chains_out).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Partial derivatives `∂κ^a ∂p^b F` for `a ≤ 3`, `b ≤ 1`, real parts.
type Jet = [[f64; 2]; 4];

#[derive(Clone, Copy)]
enum System {
    Double,
    Triple,
}

impl Tracker {
    /// Events of a tracked set: one per run of consecutive singular
    /// intervals, located by Newton where possible, followed by veering
    /// events found on the chains. Chain splines are refitted with a
    /// logarithmic parameter at every end that meets a located event.
    pub fn detect_events(&self, set: &mut TrajectorySet) -> Result<Vec<Event>, TrackError> {
        let tol_real = self.tol_real();
        let mut events = Vec::new();
        for (a, b) in singular_zones(&set.intervals) {
            let (pa, pb) = (set.samples[a].p, set.samples[b].p);
            let keep = |z: Complex64| !self.near_boundary(z);
            let chains_in: Vec<usize> = set
                .chains
                .iter()
                .filter(|c| c.end().sample >= a && c.end().sample < b && c.start().sample <= a && keep(c.end().kappa))
                .map(|c| c.label)
                .collect();
            let chains_out: Vec<usize> = set
                .chains
                .iter()
                .filter(|c| c.start().sample > a && c.start().sample <= b && c.end().sample >= b && keep(c.start().kappa))
                .map(|c| c.label)
                .collect();
            let ends: Vec<Complex64> = chains_in
                .iter()
                .map(|&c| set.chains[c].end().kappa)
                .chain(chains_out.iter().map(|&c| set.chains[c].start().kappa))
                .collect();
            if ends.is_empty() {
                continue;
            }
            let centroid = ends.iter().sum::<Complex64>() / ends.len() as f64;
            let complex_in = chains_in.iter().any(|&c| set.chains[c].end().kappa.im.abs() > tol_real);
            let complex_out = chains_out.iter().any(|&c| set.chains[c].start().kappa.im.abs() > tol_real);
            let kind = if complex_in || complex_out {
                if complex_in { EventKind::RealTouch } else { EventKind::Collision }
            } else {
                EventKind::Collision
            };
            let p_mid = 0.5 * (pa + pb);
            let mut event = Event {
                kind,
                p_star: p_mid,
                kappa_star: Complex64::new(centroid.re, if centroid.im.abs() <= tol_real { 0.0 } else { centroid.im }),
                method: LocateMethod::Interpolated,
                zone: (pa, pb),
                chains_in,
                chains_out,
                root_multiplicity: None,
                gap: None,
                curvature: None,
                near_boundary: false,
            };
            if centroid.im.abs() <= 0.1 * self.contour.radius {
                if let Some((k, p, mult)) = self.locate(centroid.re, p_mid, pb - pa) {
                    event.p_star = p;
                    event.kappa_star = Complex64::new(k, 0.0);
                    event.root_multiplicity = Some(mult);
                    event.method = if mult == 3 { LocateMethod::TripleRoot } else { LocateMethod::DoubleRoot };
                }
            }
            event.near_boundary = self.near_boundary(event.kappa_star);
            events.push(event);
        }
        self.fit_splines(set, &events);
        let bifurcations: Vec<f64> = events.iter().map(|e| e.p_star).collect();
        events.extend(self.detect_veering(set, &bifurcations));
        events.sort_by(|x, y| x.p_star.total_cmp(&y.p_star));
        Ok(events)
    }

    /// Real `(κ*, p*)` near the estimate solving the double-root system, or
    /// the triple-root system when `F` also vanishes there.
    fn locate(&self, k0: f64, p0: f64, width: f64) -> Option<(f64, f64, usize)> {
        if let Some((k, p)) = self.newton(System::Triple, k0, p0, width) {
            let (rho, sigma) = self.torus_radii(k0, p0);
            if let Some((d, fmax)) = self.jet(k, p, rho, sigma) {
                if d[0][0].abs() <= TRIPLE_RESIDUAL * fmax {
                    return Some((k, p, 3));
                }
            }
        }
        self.newton(System::Double, k0, p0, width).map(|(k, p)| (k, p, 2))
    }

    fn torus_radii(&self, k0: f64, p0: f64) -> (f64, f64) {
        (0.02 * k0.abs().max(1.0), 0.02 * p0.abs().max(1e-2 * (self.adaptive.p_max - self.adaptive.p_min)))
    }

    fn newton(&self, system: System, k0: f64, p0: f64, width: f64) -> Option<(f64, f64)> {
        let (rho, sigma) = self.torus_radii(k0, p0);
        let box_k = 0.05 * self.contour.radius;
        // Iterates may wander while the linearisation is poor; the answer
        // must land near the zone that produced the estimate.
        let box_p = 0.5 * sigma;
        let accept_p = (10.0 * width).max(1e-9 * p0.abs().max(1.0));
        let (mut k, mut p) = (k0, p0);
        let mut last = f64::INFINITY;
        for _ in 0..NEWTON_ITERATIONS {
            let (d, _) = self.jet(k, p, rho, sigma)?;
            let (g, jac) = match system {
                System::Double => ([d[0][0], d[1][0]], [[d[1][0], d[0][1]], [d[2][0], d[1][1]]]),
                System::Triple => ([d[1][0], d[2][0]], [[d[2][0], d[1][1]], [d[3][0], d[2][1]]]),
            };
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dk = (g[0] * jac[1][1] - g[1] * jac[0][1]) / det;
            let dp = (jac[0][0] * g[1] - jac[1][0] * g[0]) / det;
            k -= dk;
            p -= dp;
            if (k - k0).abs() > box_k || (p - p0).abs() > box_p || !k.is_finite() || !p.is_finite() {
                return None;
            }
            last = (dk.abs() / k.abs().max(1.0)).max(dp.abs() / p.abs().max(1.0));
            if last <= 1e-14 {
                break;
            }
        }
        (last <= 1e-10 && (p - p0).abs() <= accept_p).then_some((k, p))
    }

    /// Taylor coefficients of `F` on a small torus around real `(κ, p)`, and
    /// the largest `|F|` on the torus.
    fn jet(&self, k: f64, p: f64, rho: f64, sigma: f64) -> Option<(Jet, f64)> {
        let (nk, np) = (TORUS_NODES_KAPPA, TORUS_NODES_P);
        let tau = std::f64::consts::TAU;
        let mut c = [[Complex64::new(0.0, 0.0); 2]; 4];
        let mut fmax: f64 = 0.0;
        for j in 0..nk {
            let u = Complex64::from_polar(1.0, tau * j as f64 / nk as f64);
            for l in 0..np {
                let v = Complex64::from_polar(1.0, tau * l as f64 / np as f64);
                let f = self.nep.determinant_at(Complex64::new(k, 0.0) + rho * u, Complex64::new(p, 0.0) + sigma * v).ok()?;
                fmax = fmax.max(f.norm());
                for (a, row) in c.iter_mut().enumerate() {
                    for (b, slot) in row.iter_mut().enumerate() {
                        *slot += f / (u.powi(a as i32) * v.powi(b as i32));
                    }
                }
            }
        }
        let mut out = [[0.0; 2]; 4];
        let fact = [1.0, 1.0, 2.0, 6.0];
        for a in 0..4 {
            for b in 0..2 {
                out[a][b] = (c[a][b] / (nk * np) as f64).re * fact[a] / (rho.powi(a as i32) * sigma.powi(b as i32));
            }
        }
        Some((out, fmax))
    }

    /// Refits every chain spline, adding a logarithmic term for each end that
    /// meets one of `events`.
    pub fn fit_splines(&self, set: &mut TrajectorySet, events: &[Event]) {
        let scale = self.adaptive.p_max - self.adaptive.p_min;
        for c in set.chains.iter_mut() {
            let n = c.points.len();
            if n < 2 {
                c.spline = None;
                continue;
            }
            let (first, last) = (c.points[0].p, c.points[n - 1].p);
            let gap_l = c.points[1].p - first;
            let gap_r = last - c.points[n - 2].p;
            let mut map = ParamMap::linear(scale);
            for e in events.iter().filter(|e| e.is_bifurcation()) {
                if e.chains_out.contains(&c.label) {
                    map.left = Some(e.p_star.min(first - 1e-3 * gap_l));
                }
                if e.chains_in.contains(&c.label) {
                    map.right = Some(e.p_star.max(last + 1e-3 * gap_r));
                }
            }
            c.spline = fit_chain(&c.points, self.adaptive.spline_degree, map);
        }
    }

    /// Chains whose second derivative peaks at more than `VEERING_RATIO`
    /// times its median over a uniform grid, away from the bifurcations.
    fn detect_veering(&self, set: &TrajectorySet, bifurcations: &[f64]) -> Vec<Event> {
        let range = self.adaptive.p_max - self.adaptive.p_min;
        let exclusion = 0.02 * range;
        let away = |p: f64| bifurcations.iter().all(|&q| (p - q).abs() >= exclusion);
        let mut out: Vec<Event> = Vec::new();
        for ch in &set.chains {
            let Some(s) = ch.spline.as_ref() else { continue };
            if ch.points.len() < 8 {
                continue;
            }
            let (lo, hi) = s.domain();
            let n = 400;
            let grid: Vec<(usize, f64)> = (0..=n).map(|i| (i, lo + (hi - lo) * i as f64 / n as f64)).filter(|&(_, p)| away(p)).collect();
            if grid.len() < 20 {
                continue;
            }
            let curv: Vec<f64> = grid.iter().map(|&(_, p)| s.eval_derivative(p, 2).norm()).collect();
            let (imax, &cmax) = curv.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).expect("nonempty");
            // The peak must be interior to a run of kept grid points: a peak on
            // the edge of an exclusion window or of the chain is the tail of
            // something else.
            let interior = imax > 0 && imax + 1 < grid.len() && grid[imax - 1].0 + 1 == grid[imax].0 && grid[imax + 1].0 == grid[imax].0 + 1;
            if !interior {
                continue;
            }
            let p_peak = grid[imax].1;
            let mut sorted = curv.clone();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            if !(cmax > VEERING_RATIO * median) {
                continue;
            }
            let Some((partner, p_gap, gap, mid)) = closest_partner(set, ch, p_peak) else { continue };
            let pair = if ch.label < partner { [ch.label, partner] } else { [partner, ch.label] };
            if let Some(e) = out.iter_mut().find(|e| e.chains_in == pair && (e.p_star - p_gap).abs() < exclusion) {
                e.curvature = Some(e.curvature.unwrap_or(0.0).max(cmax));
                continue;
            }
            out.push(Event {
                kind: EventKind::Veering,
                p_star: p_gap,
                kappa_star: mid,
                method: LocateMethod::MinimumGap,
                zone: (p_gap, p_gap),
                chains_in: pair.to_vec(),
                chains_out: pair.to_vec(),
                root_multiplicity: None,
                gap: Some(gap),
                curvature: Some(cmax),
                near_boundary: self.near_boundary(mid),
            });
        }
        out
    }

    /// Joins chains across bifurcation events into the smooth-continuation
    /// labeling: arriving and leaving chains are paired to minimise the total
    /// change of direction.
    pub fn join_at_events(&self, set: &mut TrajectorySet, events: &[Event]) {
        let n = set.chains.len();
        let mut next: Vec<Option<usize>> = vec![None; n];
        let mut has_prev = vec![false; n];
        for e in events.iter().filter(|e| e.is_bifurcation()) {
            let dirs_in: Vec<Option<Complex64>> = e.chains_in.iter().map(|&c| set.chains[c].direction(true)).collect();
            let dirs_out: Vec<Option<Complex64>> = e.chains_out.iter().map(|&c| set.chains[c].direction(false)).collect();
            let cost = |i: usize, j: usize| -> Option<f64> {
                Some(match (dirs_in[i], dirs_out[j]) {
                    (Some(u), Some(v)) => (u.conj() * v).arg().abs(),
                    _ => std::f64::consts::FRAC_PI_2,
                })
            };
            for (i, j) in assign_min_cost(e.chains_in.len(), e.chains_out.len(), &cost).0 {
                let (a, b) = (e.chains_in[i], e.chains_out[j]);
                if next[a].is_none() && !has_prev[b] {
                    next[a] = Some(b);
                    has_prev[b] = true;
                }
            }
        }
        let mut heads: Vec<usize> = (0..n).filter(|&c| !has_prev[c]).collect();
        heads.sort_by(|&x, &y| set.chains[x].start().p.total_cmp(&set.chains[y].start().p).then(x.cmp(&y)));
        set.trajectories = heads
            .into_iter()
            .enumerate()
            .map(|(label, h)| {
                let mut chains = vec![h];
                while let Some(c) = next[*chains.last().expect("nonempty")] {
                    chains.push(c);
                }
                Trajectory { label, chains, birth: None, death: None }
            })
            .collect();
        self.mark_birth_death(set);
    }

    /// Inserts samples geometrically graded toward every located bifurcation
    /// and re-runs the adaptive loop on the affected intervals.
    ///
    /// On each side the grading covers the distance `L` to the neighbouring
    /// event or the end of the range; see [`graded_offsets`]. Offsets
    /// crowding an existing sample are skipped.
    pub fn refine_near_events(&self, set: TrajectorySet, events: &[Event]) -> Result<TrajectorySet, TrackError> {
        let (lo, hi) = (self.adaptive.p_min, self.adaptive.p_max);
        let stars: Vec<f64> = events.iter().filter(|e| e.is_bifurcation()).map(|e| e.p_star).collect();
        let existing: Vec<f64> = set.samples.iter().map(|s| s.p).collect();
        let crowded = |q: f64, off: f64| {
            let i = existing.partition_point(|&x| x < q);
            [i.wrapping_sub(1), i].iter().any(|&j| j < existing.len() && (existing[j] - q).abs() < 0.05 * off)
        };
        let mut new_ps = Vec::new();
        for e in events.iter().filter(|e| e.is_bifurcation() && !e.near_boundary) {
            let p = e.p_star;
            let left = stars.iter().copied().filter(|&q| q < p).fold(lo, f64::max);
            let right = stars.iter().copied().filter(|&q| q > p).fold(hi, f64::min);
            let half_zone = 0.5 * (e.zone.1 - e.zone.0);
            for (sign, l) in [(-1.0, p - left), (1.0, right - p)] {
                for off in graded_offsets(l) {
                    let q = p + sign * off;
                    if off > 4.0 * half_zone && !crowded(q, off) {
                        new_ps.push(q);
                    }
                }
            }
        }
        Ok(self.insert_samples(set, new_ps)?)
    }

    /// Adds samples at `ps` (skipping duplicates and points outside the
    /// range), marks the intervals they split as pending and re-runs the
    /// adaptive loop.
    pub fn insert_samples(&self, set: TrajectorySet, mut ps: Vec<f64>) -> Result<TrajectorySet, TrackError> {
        let (lo, hi) = (self.adaptive.p_min, self.adaptive.p_max);
        ps.retain(|&p| p > lo && p < hi);
        ps.sort_by(f64::total_cmp);
        ps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
        let old = &set.samples;
        ps.retain(|&p| {
            let i = old.partition_point(|s| s.p < p);
            let near = |j: usize| j < old.len() && (old[j].p - p).abs() <= 1e-12 * p.abs().max(1.0);
            !(near(i) || (i > 0 && near(i - 1)))
        });
        if ps.is_empty() {
            return Ok(set);
        }
        let fresh = self.solve_many(&ps)?;
        let mut samples = Vec::with_capacity(old.len() + fresh.len());
        let mut intervals: Vec<Interval> = Vec::with_capacity(samples.capacity());
        let mut k = 0;
        for i in 0..old.len() {
            samples.push(old[i].clone());
            if i + 1 == old.len() {
                break;
            }
            let start = k;
            while k < fresh.len() && fresh[k].p < old[i + 1].p {
                samples.push(fresh[k].clone());
                k += 1;
            }
            if k == start {
                intervals.push(set.intervals[i].clone());
            } else {
                for _ in start..=k {
                    intervals.push(Interval { status: IntervalStatus::Pending, links: Vec::new() });
                }
            }
        }
        self.refine_loop(samples, intervals)
    }
}

/// Offsets `L·2^{-j/3}` for `j = 3..=40`: one geometric sequence that holds
/// every `L·2^-k`, `k = 1..13`, has 10.03 points per decade (`2^{1/3}` is
/// within 0.1% of `10^{0.1}`), and reaches below `1e-4 L`. A single ratio
/// keeps the mesh free of the near-coincident points that a union of two
/// gradings produces, which spline interpolation tolerates poorly.
pub fn graded_offsets(l: f64) -> Vec<f64> {
    (3..=40).rev().map(|j| l * 2f64.powf(-(j as f64) / 3.0)).collect()
}

/// Maximal runs of singular intervals, as `(first sample, last sample)`.
fn singular_zones(intervals: &[Interval]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < intervals.len() {
        if intervals[i].status == IntervalStatus::Singular {
            let a = i;
            while i < intervals.len() && intervals[i].status == IntervalStatus::Singular {
                i += 1;
            }
            out.push((a, i));
        } else {
            i += 1;
        }
    }
    out
}

/// The chain closest to `ch` near `p`, and the parameter, distance and
/// midpoint of their closest approach on the overlap of the two splines.
fn closest_partner(set: &TrajectorySet, ch: &Chain, p: f64) -> Option<(usize, f64, f64, Complex64)> {
    let s = ch.spline.as_ref()?;
    let z = s.eval(p);
    let mut best: Option<(usize, f64)> = None;
    for other in &set.chains {
        if other.label == ch.label {
            continue;
        }
        let Some(t) = other.spline.as_ref() else { continue };
        let (a, b) = t.domain();
        if p < a || p > b {
            continue;
        }
        let d = (t.eval(p) - z).norm();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((other.label, d));
        }
    }
    let (partner, _) = best?;
    let t = set.chains[partner].spline.as_ref()?;
    let (a0, b0) = s.domain();
    let (a1, b1) = t.domain();
    let (lo, hi) = (a0.max(a1), b0.min(b1));
    // Golden-section search on the distance, within a bracket of nearby samples.
    let idx = ch.points.partition_point(|q| q.p < p);
    let lo = ch.points.get(idx.saturating_sub(3)).map_or(lo, |q| q.p.max(lo));
    let hi = ch.points.get(idx + 3).map_or(hi, |q| q.p.min(hi));
    let dist = |x: f64| (s.eval(x) - t.eval(x)).norm();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    for _ in 0..100 {
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let x = 0.5 * (a + b);
    Some((partner, x, dist(x), 0.5 * (s.eval(x) + t.eval(x))))
}
