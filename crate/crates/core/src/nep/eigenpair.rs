use num_complex::Complex64;

use super::{NepError, NepProblem};
use crate::linalg;

/// Status bits attached to a computed eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairFlags {
    /// Newton refinement stalled; κ is the unrefined contour estimate.
    pub newton_stalled: bool,
    /// The two smallest singular values of `L(κ, p)` nearly coincide.
    pub near_defective: bool,
    /// κ lies within the boundary tolerance of the contour.
    pub near_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub kappa: Complex64,
    /// Unit-norm nullspace vector, first nonzero entry real and positive.
    pub coeffs: Vec<Complex64>,
    pub p: f64,
    /// `σ_min / σ_max` of `L(κ, p)`.
    pub residual: f64,
    /// Number of merged coincident eigenvalues represented by this pair.
    pub multiplicity: usize,
    pub flags: PairFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullVector {
    pub coeffs: Vec<Complex64>,
    /// `σ_min / σ_max`.
    pub residual: f64,
    pub near_defective: bool,
}

/// Right singular vector of `L(κ, p)` for its smallest singular value.
pub fn nullspace_vector(nep: &NepProblem, kappa: Complex64, p: f64) -> Result<NullVector, NepError> {
    let a = nep.evaluate(kappa, p)?;
    let (sigma, mut x) = linalg::smallest_right_singular(&a);
    let n = sigma.len();
    let smax = sigma[0].max(f64::MIN_POSITIVE);
    let near_defective = n >= 2 && (sigma[n - 2] - sigma[n - 1]) <= 1e-8 * smax;
    fix_phase(&mut x);
    Ok(NullVector { coeffs: x, residual: sigma[n - 1] / smax, near_defective })
}

/// Rotates a unit vector so that its first entry of non-negligible modulus
/// is real and positive.
pub(crate) fn fix_phase(x: &mut [Complex64]) {
    let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let Some(lead) = x.iter().copied().find(|c| c.norm() > 1e-8 * norm) else {
        return;
    };
    let rot = lead.conj() / (lead.norm() * norm);
    for c in x.iter_mut() {
        *c *= rot;
    }
    // The leading entry is real up to rounding; make it exactly so.
    if let Some(c) = x.iter_mut().find(|c| c.norm() > 1e-8) {
        *c = Complex64::new(c.norm(), 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nep::ToyKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn crossing_null_vector() {
        let nep = NepProblem::toy(ToyKind::Crossing).unwrap();
        let v = nullspace_vector(&nep, c(1.0, 0.0), 1.0).unwrap();
        assert_eq!(v.residual, 0.0);
        assert!((v.coeffs[0] - c(1.0, 0.0)).norm() < 1e-15 && v.coeffs[1].norm() < 1e-15);
    }

    #[test]
    fn degenerate_null_vector() {
        let nep = NepProblem::toy(ToyKind::Degenerate).unwrap();
        let v = nullspace_vector(&nep, c(0.0, 0.0), 1.0).unwrap();
        assert!((v.coeffs[0] - c(1.0, 0.0)).norm() < 1e-15 && v.coeffs[1].norm() < 1e-15);
        assert!(v.residual < 1e-15);
    }

    #[test]
    fn phase_is_canonical() {
        let mut x = vec![c(0.0, 0.0), c(0.0, 0.6), c(-0.8, 0.0)];
        fix_phase(&mut x);
        assert_eq!(x[1], c(0.6, 0.0));
        assert!((x[2] - c(0.0, 0.8)).norm() < 1e-15);
    }
}
