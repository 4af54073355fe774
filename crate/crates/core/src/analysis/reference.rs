//! Dirichlet-Laplacian eigenvalues of the disk and annulus, and the approach
//! of non-real trajectories toward them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::nep::{Geometry, NepProblem};
use crate::special::{bessel_j_zeros, bessel_jy, refine_real_root};
use crate::tracker::TrajectorySet;

/// Real Dirichlet eigenvalues in `(lo, hi)` for Bessel index `m`: zeros of
/// `J_m` for the disk, zeros of `J_m(κ)Y_m(κr) − J_m(κr)Y_m(κ)` for the
/// annulus. Empty for the toy problems.
pub fn dirichlet_reference(nep: &NepProblem, lo: f64, hi: f64) -> Vec<f64> {
    match nep.geometry() {
        Geometry::Disk { m } => {
            let mut count = 4;
            loop {
                let z = bessel_j_zeros(m, count);
                if z.last().is_some_and(|&x| x >= hi) {
                    return z.into_iter().filter(|&x| x > lo && x < hi).collect();
                }
                count *= 2;
            }
        }
        Geometry::Annulus { m, r } => {
            let f = |k: f64| -> f64 {
                let a = bessel_jy(m, Complex64::new(k, 0.0));
                let b = bessel_jy(m, Complex64::new(k * r, 0.0));
                match (a, b) {
                    (Ok(a), Ok(b)) => (a.j * b.y - b.j * a.y).re,
                    _ => f64::NAN,
                }
            };
            // Roots are spaced about π / (1 − r) apart; 200 steps per spacing
            // leave no pair unresolved.
            let lo = lo.max(1e-6);
            let step = std::f64::consts::PI * (1.0 - r) / 200.0;
            let n = ((hi - lo) / step).ceil().max(1.0) as usize;
            let h = (hi - lo) / n as f64;
            let mut out = Vec::new();
            let mut a = lo;
            let mut fa = f(a);
            for k in 1..=n {
                let b = lo + k as f64 * h;
                let fb = f(b);
                if fa.is_finite() && fb.is_finite() && fa.signum() != fb.signum() {
                    if let Some(x) = refine_real_root(f, a, b, 1e-13) {
                        if x > lo && x < hi {
                            out.push(polish(&f, x));
                        }
                    }
                }
                a = b;
                fa = fb;
            }
            out
        }
        Geometry::Toy(_) => Vec::new(),
    }
}

fn polish(f: &impl Fn(f64) -> f64, mut x: f64) -> f64 {
    for _ in 0..3 {
        let h = 1e-7 * x.max(1.0);
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        if step.abs() > 1e-10 {
            break;
        }
        x -= step;
    }
    x
}

/// Newton iteration on `det L(·, p)` from `kappa`, used to re-solve at a
/// perturbed parameter.
pub fn refine_eigenvalue(nep: &NepProblem, kappa: Complex64, p: f64) -> Option<Complex64> {
    let f = |z: Complex64| nep.determinant(z, p).ok();
    let mut z = kappa;
    for _ in 0..50 {
        let h = 1e-6 * z.norm().max(1e-3);
        let df = (f(z + h)? - f(z - h)?) / (2.0 * h);
        let step = f(z)? / df;
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    Some(z)
}

/// Approach of one non-real chain alive at `p_max` to its nearest reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    pub chain: usize,
    pub trajectory: Option<usize>,
    pub reference: f64,
    pub p_final: f64,
    pub distance_final: f64,
    pub p_tail: f64,
    pub distance_tail: Option<f64>,
    /// `(p_lo, p_hi, max distance)` over octaves of the last decade, nearest
    /// to `p_max` first.
    pub envelope: Vec<(f64, f64, f64)>,
    /// The octave maxima decrease toward `p_max` and the final distance is
    /// below the distance at `p_tail`.
    pub monotone: bool,
}

pub fn laplacian_limit_check(set: &TrajectorySet, references: &[f64], p_tail: f64, tol_real: f64) -> Vec<LimitEntry> {
    let Some(p_max) = set.samples.last().map(|s| s.p) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for ch in &set.chains {
        let end = ch.end();
        if end.p < p_max || end.kappa.im.abs() <= tol_real {
            continue;
        }
        let Some(&reference) = references
            .iter()
            .min_by(|a, b| (end.kappa - **a).norm().total_cmp(&(end.kappa - **b).norm()))
        else {
            continue;
        };
        let dist = |z: Complex64| (z - reference).norm();
        let start = ch.start().p;
        let distance_tail = if p_tail >= start && p_tail <= p_max {
            set.chain_value(ch.label, p_tail).map(dist)
        } else {
            None
        };
        let floor = (p_max / 10.0).max(start);
        let mut envelope = Vec::new();
        let mut hi = p_max;
        while hi > floor {
            let lo = (0.5 * hi).max(floor);
            let m = ch
                .points
                .iter()
                .filter(|q| q.p >= lo && q.p <= hi)
                .map(|q| dist(q.kappa))
                .fold(f64::NEG_INFINITY, f64::max);
            if m.is_finite() {
                envelope.push((lo, hi, m));
            }
            hi = lo;
        }
        let decreasing = envelope.windows(2).all(|w| w[0].2 < w[1].2);
        let distance_final = dist(end.kappa);
        let monotone = decreasing && distance_tail.is_none_or(|d| distance_final < d);
        let trajectory = set.trajectories.iter().find(|t| t.chains.contains(&ch.label)).map(|t| t.label);
        out.push(LimitEntry {
            chain: ch.label,
            trajectory,
            reference,
            p_final: end.p,
            distance_final,
            p_tail,
            distance_tail,
            envelope,
            monotone,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_references_are_bessel_zeros() {
        let z = dirichlet_reference(&NepProblem::disk(0), 0.0, 9.0);
        assert_eq!(z.len(), 3);
        assert!((z[0] - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn annulus_references() {
        let m0 = dirichlet_reference(&NepProblem::annulus(0, 0.1).unwrap(), 2.0, 4.0);
        assert_eq!(m0.len(), 1);
        assert!((m0[0] - 3.3139).abs() < 5e-5, "{m0:?}");
        let m1 = dirichlet_reference(&NepProblem::annulus(1, 0.1).unwrap(), 3.0, 5.0);
        assert_eq!(m1.len(), 1);
        assert!((m1[0] - 3.9409).abs() < 5e-5, "{m1:?}");
    }

    #[test]
    fn newton_reconverges_on_crossing() {
        let nep = NepProblem::toy(crate::nep::ToyKind::Crossing).unwrap();
        let z = refine_eigenvalue(&nep, Complex64::new(0.3, 0.01), 0.25).unwrap();
        assert!((z - Complex64::new(0.25, 0.0)).norm() < 1e-14);
    }
}
