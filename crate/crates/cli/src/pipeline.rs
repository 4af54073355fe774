//! The `solve` and `track` pipelines and their output files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use treig_core::analysis::{
    classify_bifurcation, dirichlet_reference, event_spans, indicator_series, laplacian_limit_check, AnalysisError,
    BifurcationReport, IndicatorSeries, LimitEntry, Side,
};
use treig_core::beyn::{self, BeynError};
use treig_core::nep::{Eigenpair, NepError};
use treig_core::tracker::{Event, ReconstructionCheck, TrackError, Tracker, TrajectorySet};

use crate::config::{ConfigError, ExperimentConfig, OutputFile};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Solve(#[from] BeynError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (the global pool when
/// `None`).
pub fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().expect("thread pool").install(f),
        None => f(),
    }
}

/// Decimal with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn solve(cfg: &ExperimentConfig, p: f64) -> Result<Vec<Eigenpair>, RunError> {
    let tracker = cfg.tracker()?;
    let nep = &tracker.nep;
    if nep.is_transmission() {
        if p == 1.0 {
            return Err(ConfigError { line: None, message: NepError::SingularIndex.to_string() }.into());
        }
        if !(p > 0.0) {
            return Err(ConfigError { line: None, message: NepError::NonPositiveParameter(p).to_string() }.into());
        }
    }
    if !p.is_finite() {
        return Err(ConfigError { line: None, message: format!("p must be finite, got {p}") }.into());
    }
    Ok(beyn::solve(nep, p, &tracker.contour, &tracker.beyn)?)
}

pub fn eigenpairs_csv(pairs: &[Eigenpair]) -> String {
    let width = pairs.iter().map(|e| e.coeffs.len()).max().unwrap_or(0);
    let mut s = String::from("re_kappa,im_kappa,residual");
    for k in 0..width {
        let _ = write!(s, ",re_c{k},im_c{k}");
    }
    s.push('\n');
    for e in pairs {
        for _ in 0..e.multiplicity.max(1) {
            let _ = write!(s, "{},{},{}", num(e.kappa.re), num(e.kappa.im), num(e.residual));
            for c in &e.coeffs {
                let _ = write!(s, ",{},{}", num(c.re), num(c.im));
            }
            s.push('\n');
        }
    }
    s
}

/// Everything produced by one `track` run.
#[derive(Debug, Clone)]
pub struct TrackRun {
    pub config: ExperimentConfig,
    pub tracker: Tracker,
    pub set: TrajectorySet,
    pub events: Vec<Event>,
    pub series: Vec<IndicatorSeries>,
    pub reports: Vec<BifurcationReport>,
    pub limits: Vec<LimitEntry>,
    pub verification: Option<ReconstructionCheck>,
}

impl TrackRun {
    pub fn unresolved(&self) -> Vec<(f64, f64)> {
        self.set.unresolved_intervals()
    }

    pub fn partial(&self) -> bool {
        self.set.budget_exhausted || !self.unresolved().is_empty()
    }

    pub fn trajectory_of(&self, chain: usize) -> Option<usize> {
        self.set.trajectories.iter().find(|t| t.chains.contains(&chain)).map(|t| t.label)
    }
}

/// Full pipeline: track, locate events, refine around them, join smooth
/// trajectories, then indicators, classification, the Dirichlet limit check
/// and the reconstruction check.
pub fn track(cfg: &ExperimentConfig) -> Result<TrackRun, RunError> {
    let tracker = cfg.tracker()?;
    let mut set = tracker.track()?;
    let events = tracker.detect_events(&mut set)?;
    let mut set = tracker.refine_near_events(set, &events)?;
    let events = tracker.detect_events(&mut set)?;
    tracker.join_at_events(&mut set, &events);

    let tol_real = cfg.tol_real();
    let (mut series, mut reports, mut limits) = (Vec::new(), Vec::new(), Vec::new());
    if tracker.nep.is_transmission() {
        series = indicator_series(&tracker.nep, &set, tol_real)?;
        let domain = (cfg.tracker.p_min, cfg.tracker.p_max);
        let spans = event_spans(&events, domain);
        for (e, span) in events.iter().zip(spans) {
            if e.is_bifurcation() {
                reports.push(classify_bifurcation(e, &set, &series, span, &cfg.analysis.fit, tol_real));
            }
        }
        let c = tracker.contour;
        let refs = dirichlet_reference(&tracker.nep, (c.center.re - c.radius).max(0.0), c.center.re + c.radius);
        let p_tail = cfg.analysis.limit_p_tail.unwrap_or(0.5 * cfg.tracker.p_max);
        limits = laplacian_limit_check(&set, &refs, p_tail, tol_real);
    }
    let verification = match cfg.analysis.verify_per_interval {
        0 => None,
        n => Some(tracker.verify_reconstruction(&set, n)?),
    };
    Ok(TrackRun { config: cfg.clone(), tracker, set, events, series, reports, limits, verification })
}

#[derive(Serialize)]
struct Summary<'a> {
    trajectories: usize,
    real_trajectories: usize,
    chains: usize,
    samples: usize,
    bifurcations: usize,
    veering: usize,
    unresolved_intervals: Vec<(f64, f64)>,
    budget_exhausted: bool,
    bifurcation_reports: &'a [BifurcationReport],
    limits: &'a [LimitEntry],
    verification: Option<ReconstructionCheck>,
}

pub fn trajectories_csv(run: &TrackRun) -> String {
    let mut s = String::from("label,p,re_kappa,im_kappa,residual\n");
    for t in &run.set.trajectories {
        for q in run.set.points(t) {
            let _ = writeln!(s, "{},{},{},{},{}", t.label, num(q.p), num(q.kappa.re), num(q.kappa.im), num(q.residual));
        }
    }
    s
}

pub fn events_csv(run: &TrackRun) -> String {
    let mut s = String::from("kind,p_star,re_kappa_star,im_kappa_star,labels\n");
    for e in &run.events {
        let mut labels: Vec<usize> = e.chains().iter().filter_map(|&c| run.trajectory_of(c)).collect();
        labels.sort_unstable();
        labels.dedup();
        let labels: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            e.kind.tag(),
            num(e.p_star),
            num(e.kappa_star.re),
            num(e.kappa_star.im),
            labels.join(";")
        );
    }
    s
}

fn series_rows(run: &TrackRun) -> Vec<(usize, usize, usize)> {
    // (trajectory, chain index into series, point index), trajectory order.
    let mut rows = Vec::new();
    for t in &run.set.trajectories {
        for &c in &t.chains {
            if let Some(si) = run.series.iter().position(|x| x.chain == c) {
                for k in 0..run.series[si].values.len() {
                    rows.push((t.label, si, k));
                }
            }
        }
    }
    rows
}

pub fn indicators_csv(run: &TrackRun) -> String {
    let mut s = String::from("label,p,I,I_bar\n");
    for (label, si, k) in series_rows(run) {
        let v = &run.series[si].values[k];
        let _ = writeln!(s, "{label},{},{},{}", num(v.p), num(v.i), num(v.i_bar));
    }
    s
}

pub fn reports_json(run: &TrackRun) -> String {
    let tol = run.config.tol_real();
    let summary = Summary {
        trajectories: run.set.trajectories.len(),
        real_trajectories: run.set.trajectories.iter().filter(|t| run.set.is_real(t, tol)).count(),
        chains: run.set.chains.len(),
        samples: run.set.samples.len(),
        bifurcations: run.events.iter().filter(|e| e.is_bifurcation()).count(),
        veering: run.events.iter().filter(|e| !e.is_bifurcation()).count(),
        unresolved_intervals: run.unresolved(),
        budget_exhausted: run.set.budget_exhausted,
        bifurcation_reports: &run.reports,
        limits: &run.limits,
        verification: run.verification,
    };
    let mut s = serde_json::to_string_pretty(&summary).expect("report serializes");
    s.push('\n');
    s
}

/// Plot-ready projections: complex-plane paths, real/imaginary parts with the
/// indicator, and the log-log data behind every rate fit.
pub fn plotdata(run: &TrackRun) -> Vec<(&'static str, String)> {
    let mut paths = String::from("label,p,re_kappa,im_kappa\n");
    for t in &run.set.trajectories {
        for q in run.set.points(t) {
            let _ = writeln!(paths, "{},{},{},{}", t.label, num(q.p), num(q.kappa.re), num(q.kappa.im));
        }
    }
    let mut out = vec![("paths.csv", paths)];
    if run.series.is_empty() {
        return out;
    }
    let mut profile = String::from("label,p,re_kappa,im_kappa,I_bar,minus_I_bar\n");
    for (label, si, k) in series_rows(run) {
        let v = &run.series[si].values[k];
        let _ = writeln!(
            profile,
            "{label},{},{},{},{},{}",
            num(v.p),
            num(v.kappa_re),
            num(v.kappa_im),
            num(v.i_bar),
            num(-v.i_bar)
        );
    }
    out.push(("indicator_profile.csv", profile));

    let mut fits = String::from("event,label,side,p,log10_distance,log10_abs_I_bar,used\n");
    let domain = (run.config.tracker.p_min, run.config.tracker.p_max);
    let bif: Vec<&Event> = run.events.iter().filter(|e| e.is_bifurcation()).collect();
    let spans = event_spans(&run.events, domain);
    let spans: Vec<(f64, f64)> =
        run.events.iter().zip(spans).filter(|(e, _)| e.is_bifurcation()).map(|(_, s)| s).collect();
    for (idx, (e, rep)) in bif.iter().zip(&run.reports).enumerate() {
        for b in &rep.branch_fits {
            let Some(ser) = run.series.iter().find(|x| x.chain == b.chain) else { continue };
            let samples = ser.i_bar();
            let span = if b.side == Side::Left { spans[idx].0 } else { spans[idx].1 };
            let used = run.config.analysis.fit.select(&samples, e.p_star, b.side, span);
            for &(p, ib) in samples.iter().filter(|(p, _)| b.side.contains(*p, e.p_star)) {
                if ib == 0.0 {
                    continue;
                }
                let side = if b.side == Side::Left { "left" } else { "right" };
                let u = used.iter().any(|x| x.0 == p) as u8;
                let _ = writeln!(
                    fits,
                    "{idx},{},{side},{},{},{},{u}",
                    run.trajectory_of(b.chain).map(|l| l.to_string()).unwrap_or_default(),
                    num(p),
                    num((p - e.p_star).abs().log10()),
                    num(ib.abs().log10())
                );
            }
        }
    }
    out.push(("rate_fits.csv", fits));
    out
}

/// Writes the selected files plus a MANIFEST into `dir`.
pub fn write_track(run: &TrackRun, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir)?;
    let files = &run.config.outputs.files;
    let mut written: Vec<(String, usize)> = Vec::new();
    let mut paths = Vec::new();
    let mut put = |name: String, body: String| -> io::Result<()> {
        let path = dir.join(&name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, &body)?;
        written.push((name, body.len()));
        paths.push(path);
        Ok(())
    };
    let has_series = !run.series.is_empty();
    for f in OutputFile::ALL.iter().filter(|f| files.contains(f)) {
        match f {
            OutputFile::Trajectories => put("trajectories.csv".into(), trajectories_csv(run))?,
            OutputFile::Events => put("events.csv".into(), events_csv(run))?,
            OutputFile::Indicators if has_series => put("indicators.csv".into(), indicators_csv(run))?,
            OutputFile::Indicators => {}
            OutputFile::Reports => put("reports.json".into(), reports_json(run))?,
            OutputFile::Plotdata => {
                for (name, body) in plotdata(run) {
                    put(format!("plotdata/{name}"), body)?;
                }
            }
        }
    }
    let mut manifest = String::new();
    let _ = writeln!(manifest, "status {}", if run.partial() { "partial" } else { "complete" });
    let _ = writeln!(manifest, "geometry {}", run.tracker.nep.geometry().tag());
    let _ = writeln!(manifest, "seed {}", run.config.beyn.seed);
    let _ = writeln!(manifest, "samples {}", run.set.samples.len());
    let _ = writeln!(manifest, "budget_exhausted {}", run.set.budget_exhausted);
    let unresolved = run.unresolved();
    let _ = writeln!(manifest, "unresolved_intervals {}", unresolved.len());
    for (a, b) in unresolved {
        let _ = writeln!(manifest, "  [{}, {}]", num(a), num(b));
    }
    for (name, bytes) in &written {
        let _ = writeln!(manifest, "file {name} {bytes}");
    }
    fs::write(dir.join("MANIFEST"), manifest)?;
    paths.push(dir.join("MANIFEST"));
    Ok(paths)
}
