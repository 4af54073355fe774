use num_complex::Complex64;

use super::{probe_matrix, scaled_moments, BeynConfig, BeynError, ContourSpec};
use crate::linalg::{self, CMatrix};
use crate::nep::{nullspace_vector, Eigenpair, NepProblem, PairFlags};

/// Eigenpairs together with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub pairs: Vec<Eigenpair>,
    /// Numerical rank of `H_0`.
    pub rank: usize,
    /// Singular values of `H_0`, descending.
    pub singular_values: Vec<f64>,
    /// Candidates rejected by the residual test after refinement.
    pub rejected: Vec<Complex64>,
}

/// All eigenpairs inside the contour, sorted by real then imaginary part.
pub fn solve(nep: &NepProblem, p: f64, contour: &ContourSpec, config: &BeynConfig) -> Result<Vec<Eigenpair>, BeynError> {
    Ok(solve_detailed(nep, p, contour, config)?.pairs)
}

pub fn solve_detailed(nep: &NepProblem, p: f64, contour: &ContourSpec, config: &BeynConfig) -> Result<SolveOutput, BeynError> {
    contour.validate_for(nep)?;
    config.validate()?;
    let d = nep.dimension();
    let l = config.probe_width(nep);
    let k = config.hankel_blocks;
    let v = probe_matrix(d, l, config.rng_seed);
    let (a, typical) = scaled_moments(nep, p, contour, 2 * k, &v)?;

    let h0 = block_hankel(&a, k, 0);
    let h1 = block_hankel(&a, k, 1);
    let svd = h0.svd(true, true);
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    // Quadrature noise from an empty contour sits many orders below the size
    // of the integrand, so a relative cutoff alone would report spurious rank.
    let cutoff = (config.rank_tol * smax).max(1e-13 * typical);
    let rank = sigma.iter().take_while(|&&s| s > cutoff).count();
    // H_0 is kd × kl, so its rank cannot exceed k·min(d, ℓ).
    if rank == k * l.min(d) {
        return Err(BeynError::RankSaturated { rank, cols: k * l.min(d) });
    }
    if rank == 0 {
        return Ok(SolveOutput { pairs: Vec::new(), rank, singular_values: sigma, rejected: Vec::new() });
    }

    let u0 = svd.u.as_ref().expect("left vectors").columns(0, rank).into_owned();
    let w0 = svd.v_t.as_ref().expect("right vectors").rows(0, rank).adjoint();
    let inv_s = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        rank,
        sigma[..rank].iter().map(|s| Complex64::new(1.0 / s, 0.0)),
    ));
    let b = u0.adjoint() * h1 * w0 * inv_s;
    let mu = linalg::eigenvalues(&b).ok_or(BeynError::ReducedEigenproblem)?;

    let mut candidates: Vec<(Complex64, bool)> = Vec::new();
    for m in mu {
        // Loose pre-filter; the strict enclosure test follows refinement.
        if m.norm() > 1.05 {
            continue;
        }
        let kappa0 = contour.center + contour.radius * m;
        if nep.is_transmission() && kappa0.norm() < 1e-12 {
            continue;
        }
        candidates.push(refine(nep, p, kappa0, contour.radius));
    }

    let merge_tol = 1e-8 * contour.radius;
    let edge_tol = 1e-8 * contour.radius;
    candidates.sort_by(|x, y| order(x.0, y.0));
    let mut merged: Vec<(Complex64, bool, usize)> = Vec::new();
    for (kappa, ok) in candidates {
        if contour.depth(kappa) < -edge_tol {
            continue;
        }
        if let Some(last) = merged.iter_mut().find(|m| (m.0 - kappa).norm() <= merge_tol) {
            let n = last.2 as f64;
            last.0 = (last.0 * n + kappa) / (n + 1.0);
            last.1 &= ok;
            last.2 += 1;
        } else {
            merged.push((kappa, ok, 1));
        }
    }

    let mut pairs = Vec::new();
    let mut rejected = Vec::new();
    for (kappa, converged, multiplicity) in merged {
        let null = nullspace_vector(nep, kappa, p)?;
        let flags = PairFlags {
            newton_stalled: !converged,
            near_defective: null.near_defective,
            near_boundary: contour.depth(kappa) <= edge_tol,
        };
        let pair = Eigenpair { kappa, coeffs: null.coeffs, p, residual: null.residual, multiplicity, flags };
        if pair.residual <= config.residual_tol {
            pairs.push(pair);
        } else if flags.newton_stalled {
            // Kept so that a failed refinement is visible to the caller.
            pairs.push(pair);
        } else {
            rejected.push(kappa);
        }
    }
    pairs.sort_by(|x, y| order(x.kappa, y.kappa));
    Ok(SolveOutput { pairs, rank, singular_values: sigma, rejected })
}

fn order(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn block_hankel(a: &[CMatrix], k: usize, shift: usize) -> CMatrix {
    let (d, l) = a[0].shape();
    let mut h = CMatrix::zeros(k * d, k * l);
    for i in 0..k {
        for j in 0..k {
            h.view_mut((i * d, j * l), (d, l)).copy_from(&a[i + j + shift]);
        }
    }
    h
}

/// Up to three damped Newton steps on `det L(·, p)`, with a central
/// difference derivative. Returns the refined value and whether the last
/// step was below the convergence threshold.
fn refine(nep: &NepProblem, p: f64, kappa0: Complex64, radius: f64) -> (Complex64, bool) {
    let f = |z: Complex64| nep.determinant(z, p).ok();
    let h = 1e-6 * radius;
    let tol = 1e-13 * kappa0.norm().max(radius);
    let mut kappa = kappa0;
    let Some(mut fk) = f(kappa) else {
        return (kappa0, false);
    };
    for _ in 0..3 {
        if fk == Complex64::new(0.0, 0.0) {
            return (kappa, true);
        }
        let (Some(fp), Some(fm)) = (f(kappa + h), f(kappa - h)) else {
            return (kappa, false);
        };
        let df = (fp - fm) / (2.0 * h);
        if df == Complex64::new(0.0, 0.0) || !df.re.is_finite() {
            return (kappa, false);
        }
        let mut step = fk / df;
        let mut accepted = false;
        for _ in 0..4 {
            let trial = kappa - step;
            if let Some(ft) = f(trial) {
                if ft.norm() <= fk.norm() {
                    kappa = trial;
                    fk = ft;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent possible: κ is already at the noise floor of det.
            return (kappa, true);
        }
        if step.norm() <= tol {
            return (kappa, true);
        }
    }
    let ok = nep.determinant(kappa, p).is_ok();
    (kappa, ok && (kappa - kappa0).norm() < 0.1 * radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nep::ToyKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn crossing_toy() {
        let nep = NepProblem::toy(ToyKind::Crossing).unwrap();
        let contour = ContourSpec::new(c(0.0, 0.0), 2.0, 128).unwrap();
        let pairs = solve(&nep, 0.5, &contour, &BeynConfig::default()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].kappa - c(-0.5, 0.0)).norm() < 1e-13);
        assert!((pairs[1].kappa - c(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn algebraic_toy_imaginary_pair() {
        let nep = NepProblem::toy(ToyKind::Algebraic).unwrap();
        let contour = ContourSpec::new(c(0.0, 0.0), 1.0, 128).unwrap();
        let pairs = solve(&nep, -0.04, &contour, &BeynConfig::default()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].kappa - c(0.0, -0.2)).norm() < 1e-13);
        assert!((pairs[1].kappa - c(0.0, 0.2)).norm() < 1e-13);
    }

    #[test]
    fn empty_contour() {
        let nep = NepProblem::toy(ToyKind::Crossing).unwrap();
        let contour = ContourSpec::new(c(100.0, 0.0), 0.1, 128).unwrap();
        let out = solve_detailed(&nep, 0.5, &contour, &BeynConfig::default()).unwrap();
        assert!(out.pairs.is_empty());
        assert_eq!(out.rank, 0);
    }

    #[test]
    fn degenerate_toy_merges() {
        // [[λ, p], [0, λ]] has a defective double eigenvalue at 0.
        let nep = NepProblem::toy(ToyKind::Degenerate).unwrap();
        let contour = ContourSpec::new(c(0.1, 0.05), 1.0, 256).unwrap();
        let pairs = solve(&nep, 0.7, &contour, &BeynConfig::default()).unwrap();
        let total: usize = pairs.iter().map(|e| e.multiplicity).sum();
        assert!(pairs.iter().all(|e| e.kappa.norm() < 1e-6), "{pairs:?}");
        assert_eq!(total, 2, "{pairs:?}");
    }
}
