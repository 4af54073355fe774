use num_complex::Complex64;
use treig_core::analysis::{
    classify_bifurcation, eigenvalue_derivative, event_spans, indicator, indicator_series, refine_eigenvalue,
    smooth_real_points, FitWindow, Order, RadialPair, Slope,
};
use treig_core::beyn::{BeynConfig, ContourSpec};
use treig_core::nep::{IndexMap, NepProblem};
use treig_core::special::bessel_j_zeros;
use treig_core::tracker::{AdaptiveConfig, Event, Tracker, TrajectorySet};

fn disk_run() -> (Tracker, TrajectorySet, Vec<Event>) {
    let nep = NepProblem::disk(0).with_index_map(IndexMap::Linear);
    let contour = ContourSpec::new(Complex64::new(2.5, 0.0), 1.5, 2048).unwrap();
    let beyn = BeynConfig { hankel_blocks: 4, ..BeynConfig::default() };
    let t = Tracker::new(nep, contour, beyn, AdaptiveConfig::new(1.01, 8.0)).unwrap();
    let mut set = t.track().unwrap();
    let ev = t.detect_events(&mut set).unwrap();
    let mut set = t.refine_near_events(set, &ev).unwrap();
    let ev = t.detect_events(&mut set).unwrap();
    t.join_at_events(&mut set, &ev);
    (t, set, ev)
}

#[test]
fn disk_first_bifurcation_is_cubic() {
    let (t, set, ev) = disk_run();
    let bif: Vec<&Event> = ev.iter().filter(|e| e.is_bifurcation()).collect();
    assert_eq!(bif.len(), 1);
    let z = bessel_j_zeros(0, 2);
    assert!((bif[0].kappa_star.re - z[0]).abs() < 1e-6);
    assert!((bif[0].p_star - (z[1] / z[0]).powi(2)).abs() < 1e-6);

    let series = indicator_series(&t.nep, &set, t.tol_real()).unwrap();
    let spans = event_spans(&ev, (1.01, 8.0));
    let i = ev.iter().position(|e| e.is_bifurcation()).unwrap();
    let rep = classify_bifurcation(&ev[i], &set, &series, spans[i], &FitWindow::default(), t.tol_real());
    assert_eq!(rep.order_m, Order::M(3));
    assert_eq!(rep.order_from_rate, Some(3));
    for f in [rep.alpha_left.unwrap(), rep.alpha_right.unwrap()] {
        assert!((0.55..=0.78).contains(&f.alpha), "{rep:?}");
    }

    // Doubling the coefficients scales Ī by 4 and leaves the rates alone.
    let mut doubled = set.clone();
    for s in doubled.samples.iter_mut() {
        for e in s.pairs.iter_mut() {
            for c in e.coeffs.iter_mut() {
                *c *= 2.0;
            }
        }
    }
    let series2 = indicator_series(&t.nep, &doubled, t.tol_real()).unwrap();
    for (a, b) in series.iter().zip(&series2) {
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((4.0 * x.i_bar - y.i_bar).abs() <= 1e-12 * y.i_bar.abs().max(1e-300));
        }
    }
    let rep2 = classify_bifurcation(&ev[i], &doubled, &series2, spans[i], &FitWindow::default(), t.tol_real());
    let (a, b) = (rep.alpha_left.unwrap().alpha, rep2.alpha_left.unwrap().alpha);
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn disk_indicator_invariants() {
    let (t, set, ev) = disk_run();
    let tol = t.tol_real();
    for ch in &set.chains {
        for q in &ch.points {
            let pair = &set.samples[q.sample].pairs[q.pair];
            let v = indicator(&t.nep, pair, tol).unwrap();
            if q.kappa.im.abs() > 1e-6 {
                assert!(v.i.abs() <= 1e-8 * v.scale, "zero-norm at p={} {v:?}", q.p);
            } else if v.real {
                assert!(v.i_bar >= 0.0);
                let quad = RadialPair::new(&t.nep, pair).unwrap().quadrature_indicator().unwrap();
                assert!((quad - v.i).abs() <= 1e-8 * v.i.abs(), "p={} {quad} vs {}", q.p, v.i);
            }
        }
    }
    let smooth = smooth_real_points(&t, &set, &ev, 1e-2);
    assert!(smooth.len() > 20);
    for &(c, k) in smooth.iter().step_by(3) {
        let q = set.chains[c].points[k];
        let pair = &set.samples[q.sample].pairs[q.pair];
        let Slope::Finite(d) = eigenvalue_derivative(&t.nep, pair).unwrap() else {
            panic!("unbounded slope on a smooth arc at p={}", q.p);
        };
        let h = 1e-5;
        let a = refine_eigenvalue(&t.nep, q.kappa, q.p + h).unwrap();
        let b = refine_eigenvalue(&t.nep, q.kappa, q.p - h).unwrap();
        let fd = (a.re - b.re) / (2.0 * h);
        assert!((d - fd).abs() <= 1e-4 * fd.abs(), "p={} {d} vs {fd}", q.p);
        let i = indicator(&t.nep, pair, tol).unwrap().i;
        assert_eq!(d.signum(), i.signum());
    }
}
