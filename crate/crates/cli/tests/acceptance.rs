//! End-to-end acceptance run over the presets. Prints one line per
//! criterion and exits non-zero if any sub-check fails that is not listed in
//! `KNOWN_DEVIATIONS`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use treig::pipeline::{self, in_pool, TrackRun};
use treig::ExperimentConfig;
use treig_core::analysis::{
    eigenvalue_derivative, indicator, refine_eigenvalue, smooth_real_points, Order, Parity, RadialPair, Slope,
};
use treig_core::beyn::count_by_argument_principle;
use treig_core::selftest;
use treig_core::special::bessel_j_zeros;
use treig_core::tracker::EventKind;

/// Sub-checks expected to fail, with the reason. See README.
const KNOWN_DEVIATIONS: &[(&str, &str)] = &[(
    "5.alpha",
    "the annulus m=1 double roots give alpha -> 1/2 as |p - p*| -> 0; values near 0.6 only appear at offsets \
     comparable to the distance to the paired event",
)];

const ALPHA_RANGE: std::ops::RangeInclusive<f64> = 0.55..=0.78;

#[derive(Default)]
struct Criterion {
    checks: Vec<(String, bool, String)>,
}

impl Criterion {
    fn check(&mut self, id: &str, ok: bool, detail: impl Into<String>) {
        self.checks.push((id.to_string(), ok, detail.into()));
    }

    fn runtime(&mut self, id: &str, took: Duration, limit: Duration) {
        self.check(id, took <= limit, format!("{:.1} s (limit {} s)", took.as_secs_f64(), limit.as_secs()));
    }
}

fn preset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&preset_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::default();
    let t = Instant::now();
    for r in selftest::bessel_checks(selftest::BESSEL_TABLE) {
        c.check(&format!("1.{}", r.name), r.passed, r.detail);
    }
    c.runtime("1.runtime", t.elapsed(), secs(10));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::default();
    let t = Instant::now();
    for (name, ps) in [
        ("disk_m0.conf", &[2.0, 8.0, 20.0][..]),
        ("annulus_m0.conf", &[8.0, 16.0, 40.0][..]),
        ("annulus_m1.conf", &[8.0, 16.0, 40.0][..]),
    ] {
        let cfg = preset(name);
        let tracker = cfg.tracker().unwrap();
        for &p in ps.iter().filter(|&&p| (cfg.tracker.p_min..=cfg.tracker.p_max).contains(&p)) {
            let pairs = pipeline::solve(&cfg, p).unwrap();
            let count: usize = pairs.iter().map(|e| e.multiplicity).sum();
            let winding = count_by_argument_principle(&tracker.nep, p, &tracker.contour).unwrap();
            let worst = pairs.iter().map(|e| e.residual).fold(0.0, f64::max);
            c.check(
                &format!("2.{name}@{p}"),
                count == winding && worst <= 1e-7,
                format!("count {count}, winding {winding}, max residual {worst:.2e}"),
            );
        }
    }
    c.runtime("2.runtime", t.elapsed(), secs(60));
    c
}

fn criterion_3(run: &TrackRun, took: Duration) -> Criterion {
    let mut c = Criterion::default();
    let tol = run.config.tol_real();
    let n = run.set.trajectories.len();
    let real = run.set.trajectories.iter().filter(|t| run.set.is_real(t, tol)).count();
    c.check("3.trajectories", n == 7 && real == 5, format!("{n} trajectories, {real} real"));

    let touches: Vec<_> = run.reports.iter().filter(|r| r.kind == EventKind::RealTouch).collect();
    let zeros = bessel_j_zeros(0, 4);
    let off = touches
        .iter()
        .map(|r| zeros.iter().map(|z| (r.kappa_star - z).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    c.check(
        "3.events",
        touches.len() == 3 && run.reports.len() == 3 && off <= 1e-6,
        format!("{} real-touch of {} bifurcations, max distance to a J0 zero {off:.2e}", touches.len(), run.reports.len()),
    );
    let orders: Vec<String> = run.reports.iter().map(|r| format!("{:?}/{}", r.order_m, r.order_from_count)).collect();
    c.check(
        "3.order",
        run.reports.iter().all(|r| r.order_m == Order::M(3) && r.order_from_count == 3),
        format!("order/count {}", orders.join(" ")),
    );
    let alphas: Vec<Option<f64>> =
        run.reports.iter().flat_map(|r| [r.alpha_left, r.alpha_right]).map(|f| f.map(|f| f.alpha)).collect();
    c.check(
        "3.alpha",
        alphas.len() == 6 && alphas.iter().all(|a| a.is_some_and(|a| ALPHA_RANGE.contains(&a))),
        format!("alpha {}", fmt_alphas(&alphas)),
    );
    let v = run.verification;
    c.check(
        "3.reconstruction",
        v.is_some_and(|v| v.max_error <= 1e-3),
        format!("max error {:.2e} on {} points", v.map_or(f64::NAN, |v| v.max_error), v.map_or(0, |v| v.points)),
    );
    c.runtime("3.runtime", took, secs(600));
    c
}

fn fmt_alphas(a: &[Option<f64>]) -> String {
    a.iter().map(|x| x.map_or("-".into(), |x| format!("{x:.4}"))).collect::<Vec<_>>().join(" ")
}

fn criterion_4(run: &TrackRun, took: Duration) -> Criterion {
    let mut c = Criterion::default();
    c.check("4.no-bifurcation", run.reports.is_empty(), format!("{} bifurcations", run.reports.len()));
    let tol = run.config.tol_real();
    let real_veering: Vec<f64> = run
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Veering && e.kappa_star.im.abs() <= tol)
        .map(|e| e.p_star)
        .collect();
    c.check("4.veering", !real_veering.is_empty(), format!("real veering at p = {real_veering:.3?}"));
    let limits: Vec<_> = run.limits.iter().filter(|l| (l.reference - 3.3139).abs() < 1e-3).collect();
    let ok = !limits.is_empty()
        && limits.iter().all(|l| {
            l.monotone && (l.p_final - 64.0).abs() < 1e-9 && l.distance_tail.is_some_and(|d| l.distance_final < d)
        });
    let detail = limits
        .iter()
        .map(|l| {
            format!(
                "chain {}: d({})={:.3} d({})={:.3} monotone {}",
                l.chain,
                l.p_tail,
                l.distance_tail.unwrap_or(f64::NAN),
                l.p_final,
                l.distance_final,
                l.monotone
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    c.check("4.limit", ok, detail);
    c.runtime("4.runtime", took, secs(900));
    c
}

/// Points on smooth real arcs where `κ'` is checked against finite
/// differences and the sign of `I`.
fn slope_checks(run: &TrackRun) -> (usize, usize, usize, f64, usize) {
    let t = &run.tracker;
    let set = &run.set;
    let tol = run.config.tol_real();
    let smooth = smooth_real_points(t, set, &run.events, 1e-2);
    let (mut positive, mut sign_bad, mut unbounded) = (0, 0, 0);
    let mut fd_worst = 0.0f64;
    for &(c, k) in &smooth {
        let q = set.chains[c].points[k];
        let pair = &set.samples[q.sample].pairs[q.pair];
        let Ok(Slope::Finite(d)) = eigenvalue_derivative(&t.nep, pair) else {
            unbounded += 1;
            continue;
        };
        let i = indicator(&t.nep, pair, tol).unwrap().i;
        if d > 0.0 {
            positive += 1;
        }
        if d.signum() != i.signum() {
            sign_bad += 1;
        }
        let h = 1e-5;
        match (refine_eigenvalue(&t.nep, q.kappa, q.p + h), refine_eigenvalue(&t.nep, q.kappa, q.p - h)) {
            (Some(a), Some(b)) => {
                let fd = (a.re - b.re) / (2.0 * h);
                fd_worst = fd_worst.max((d - fd).abs() / fd.abs());
            }
            _ => fd_worst = f64::INFINITY,
        }
    }
    (smooth.len(), positive, sign_bad, fd_worst, unbounded)
}

fn criterion_5(run: &TrackRun, took: Duration) -> Criterion {
    let mut c = Criterion::default();
    let n = run.reports.len();
    let kinds_ok = run.reports.iter().all(|r| matches!(r.kind, EventKind::RealTouch | EventKind::Collision));
    c.check("5.events", n == 8 && kinds_ok, format!("{n} bifurcations"));
    let parity_ok = run.reports.iter().all(|r| {
        r.order_m == Order::M(2)
            && r.parity == Some(Parity::Even)
            && matches!((r.real_branches_left, r.real_branches_right), (2, 0) | (0, 2))
    });
    let desc: Vec<String> =
        run.reports.iter().map(|r| format!("{}:{}", r.real_branches_left, r.real_branches_right)).collect();
    c.check("5.order", parity_ok, format!("real branches left:right {}", desc.join(" ")));
    let alphas: Vec<Option<f64>> = run.reports.iter().map(|r| r.alpha_left.or(r.alpha_right).map(|f| f.alpha)).collect();
    c.check(
        "5.alpha",
        alphas.len() == 8 && alphas.iter().all(|a| a.is_some_and(|a| ALPHA_RANGE.contains(&a))),
        format!("alpha {}", fmt_alphas(&alphas)),
    );
    let (total, positive, sign_bad, _, unbounded) = slope_checks(run);
    c.check(
        "5.sign-law",
        positive > 0 && sign_bad == 0 && unbounded == 0,
        format!("{total} smooth real samples, {positive} with κ' > 0, {sign_bad} sign mismatches, {unbounded} unbounded"),
    );
    c.runtime("5.runtime", took, secs(900));
    c
}

fn criterion_6(runs: &[(&str, &TrackRun)]) -> Criterion {
    let mut c = Criterion::default();
    for (name, run) in runs {
        let t = &run.tracker;
        let tol = run.config.tol_real();
        let (mut zero_worst, mut dual_worst, mut nonreal, mut real) = (0.0f64, 0.0f64, 0, 0);
        for ch in &run.set.chains {
            for q in &ch.points {
                let pair = &run.set.samples[q.sample].pairs[q.pair];
                let v = indicator(&t.nep, pair, tol).unwrap();
                if !v.real {
                    nonreal += 1;
                    zero_worst = zero_worst.max(v.i.abs() / v.scale);
                } else {
                    real += 1;
                    let quad = RadialPair::new(&t.nep, pair).unwrap().quadrature_indicator().unwrap();
                    dual_worst = dual_worst.max((quad - v.i).abs() / v.i.abs());
                }
            }
        }
        c.check(
            &format!("6.{name}.zero-norm"),
            zero_worst <= 1e-8,
            format!("max |I|/scale {zero_worst:.2e} over {nonreal} non-real points"),
        );
        c.check(
            &format!("6.{name}.quadrature"),
            dual_worst <= 1e-8,
            format!("max relative gap {dual_worst:.2e} over {real} real points"),
        );
        let (total, _, _, fd, unbounded) = slope_checks(run);
        c.check(
            &format!("6.{name}.derivative"),
            fd <= 1e-4 && unbounded == 0,
            format!("max relative FD gap {fd:.2e} over {total} smooth real points"),
        );
    }
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::default();
    let t = Instant::now();
    for r in selftest::toy_checks() {
        c.check(&format!("7.{}", r.name), r.passed, r.detail);
    }
    c.runtime("7.runtime", t.elapsed(), secs(30));
    c
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_8(runs: &[(&str, PathBuf)], scratch: &Path) -> Criterion {
    let mut c = Criterion::default();
    for (name, single) in runs {
        let four = scratch.join(format!("{name}-threads4"));
        let status = Command::new(env!("CARGO_BIN_EXE_treig"))
            .args(["track", "--threads", "4", "--config"])
            .arg(preset_path(name))
            .arg("--out")
            .arg(&four)
            .env_remove("TREIG_SEED")
            .status()
            .unwrap();
        let (a, b) = (read_tree(single), read_tree(&four));
        let same = a == b;
        let mut detail = format!("{} files", a.len());
        if !same {
            let diff: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
            let _ = write!(detail, ", differing: {diff:?}");
        }
        c.check(&format!("8.{name}"), status.success() && same, detail);
    }
    c
}

fn track(name: &str, scratch: &Path) -> (TrackRun, Duration, PathBuf) {
    let cfg = preset(name);
    let t = Instant::now();
    let run = in_pool(Some(1), || pipeline::track(&cfg)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let took = t.elapsed();
    let dir = scratch.join(format!("{name}-threads1"));
    pipeline::write_track(&run, &dir).unwrap();
    (run, took, dir)
}

fn main() {
    let scratch = std::env::temp_dir().join(format!("treig-acceptance-{}", std::process::id()));
    let mut results = vec![(1, criterion_1()), (2, criterion_2())];
    let (disk, disk_t, disk_dir) = track("disk_m0.conf", &scratch);
    results.push((3, criterion_3(&disk, disk_t)));
    let (a0, a0_t, a0_dir) = track("annulus_m0.conf", &scratch);
    results.push((4, criterion_4(&a0, a0_t)));
    let (a1, a1_t, a1_dir) = track("annulus_m1.conf", &scratch);
    results.push((5, criterion_5(&a1, a1_t)));
    results.push((6, criterion_6(&[("disk_m0", &disk), ("annulus_m0", &a0), ("annulus_m1", &a1)])));
    results.push((7, criterion_7()));
    let dirs = [("disk_m0.conf", disk_dir), ("annulus_m0.conf", a0_dir), ("annulus_m1.conf", a1_dir)];
    results.push((8, criterion_8(&dirs, &scratch)));
    let _ = std::fs::remove_dir_all(&scratch);

    let mut unexpected = Vec::new();
    for (k, c) in &results {
        let failed: Vec<&(String, bool, String)> = c.checks.iter().filter(|x| !x.1).collect();
        println!("criterion {k}: {}", if failed.is_empty() { "PASS" } else { "FAIL" });
        for (id, ok, detail) in &c.checks {
            println!("    {id:<32} {}  {detail}", if *ok { "pass" } else { "FAIL" });
        }
        for (id, _, _) in failed {
            match KNOWN_DEVIATIONS.iter().find(|d| d.0 == id) {
                Some((_, why)) => println!("    known deviation {id}: {why}"),
                None => unexpected.push(id.clone()),
            }
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
