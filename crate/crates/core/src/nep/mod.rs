//! Parametric nonlinear eigenproblems `L(κ, p) x = 0`.
//!
//! Two interior transmission problems are provided, the unit disk and the
//! annulus `r < |x| < 1`, each restricted to a single Bessel index `m`, plus
//! four 2×2 toy problems with known exceptional behaviour.
//!
//! For the transmission problems the refractive index is a homogeneous
//! `n(p)` given by an [`IndexMap`]. The boundary matrices depend on `p` only
//! through the wavenumber scale `q = √n` of the inner medium.

mod eigenpair;

pub use eigenpair::{nullspace_vector, Eigenpair, NullVector, PairFlags};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMatrix};
use crate::special::{bessel_j_with_prime, bessel_jy, BesselError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NepError {
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error("κ = 0 is excluded for transmission problems")]
    ZeroWavenumber,
    #[error("refractive index parameter must be positive, got p = {0}")]
    NonPositiveParameter(f64),
    #[error("p = 1 gives n ≡ 1, the singular case where every κ is an eigenvalue")]
    SingularIndex,
    #[error("inner radius must lie in (0, 1), got {0}")]
    InvalidRadius(f64),
    #[error("veering fixture needs ε ≠ 0")]
    ZeroCoupling,
    #[error("parameter interval [{0}, {1}] is empty or not finite")]
    BadInterval(f64, f64),
    #[error("parameter interval [{0}, {1}] contains the singular value p = 1")]
    IntervalContainsOne(f64, f64),
}

/// How the scalar parameter `p` sets the homogeneous refractive index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IndexMap {
    /// `n = p²`, wavenumber scale `q = p`.
    #[default]
    Squared,
    /// `n = p`, wavenumber scale `q = √p`.
    Linear,
}

impl IndexMap {
    pub fn index(self, p: f64) -> f64 {
        match self {
            IndexMap::Squared => p * p,
            IndexMap::Linear => p,
        }
    }

    /// `dn/dp`.
    pub fn index_derivative(self, p: f64) -> f64 {
        match self {
            IndexMap::Squared => 2.0 * p,
            IndexMap::Linear => 1.0,
        }
    }

    /// `q = √n`, the factor multiplying κ inside the medium.
    pub fn scale(self, p: f64) -> f64 {
        match self {
            IndexMap::Squared => p,
            IndexMap::Linear => p.sqrt(),
        }
    }

    fn scale_complex(self, p: Complex64) -> Complex64 {
        match self {
            IndexMap::Squared => p,
            IndexMap::Linear => p.sqrt(),
        }
    }

    /// Parameter value whose wavenumber scale is `q`.
    pub fn parameter_for_scale(self, q: f64) -> f64 {
        match self {
            IndexMap::Squared => q,
            IndexMap::Linear => q * q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name")]
pub enum ToyKind {
    /// `diag(λ − p, λ + p)`.
    Crossing,
    /// `[[λ, 1], [p, λ]]`.
    Algebraic,
    /// `[[λ − 2p, ε], [ε, λ]]`.
    Veering { eps: f64 },
    /// `[[λ, p], [0, λ]]`.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Disk { m: u32 },
    Annulus { m: u32, r: f64 },
    Toy(ToyKind),
}

impl Geometry {
    pub fn tag(&self) -> String {
        match self {
            Geometry::Disk { .. } => "disk".into(),
            Geometry::Annulus { r, .. } => format!("annulus({r})"),
            Geometry::Toy(kind) => match kind {
                ToyKind::Crossing => "toy(crossing)".into(),
                ToyKind::Algebraic => "toy(algebraic)".into(),
                ToyKind::Veering { eps } => format!("toy(veering({eps}))"),
                ToyKind::Degenerate => "toy(degenerate)".into(),
            },
        }
    }
}

/// Bessel index weight `a_m`: 2 for `m = 0`, 1 otherwise.
pub fn angular_weight(m: u32) -> f64 {
    if m == 0 {
        2.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NepProblem {
    geometry: Geometry,
    index_map: IndexMap,
    param_domain: (f64, f64),
}

impl NepProblem {
    pub fn disk(m: u32) -> Self {
        NepProblem { geometry: Geometry::Disk { m }, index_map: IndexMap::Squared, param_domain: (1.01, 32.0) }
    }

    pub fn annulus(m: u32, r: f64) -> Result<Self, NepError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(NepError::InvalidRadius(r));
        }
        let param_domain = if m == 0 { (6.0, 64.0) } else { (4.0, 25.0) };
        Ok(NepProblem { geometry: Geometry::Annulus { m, r }, index_map: IndexMap::Squared, param_domain })
    }

    pub fn toy(kind: ToyKind) -> Result<Self, NepError> {
        if let ToyKind::Veering { eps } = kind {
            if eps == 0.0 || !eps.is_finite() {
                return Err(NepError::ZeroCoupling);
            }
        }
        Ok(NepProblem { geometry: Geometry::Toy(kind), index_map: IndexMap::Squared, param_domain: (-1.0, 1.0) })
    }

    pub fn with_index_map(mut self, map: IndexMap) -> Self {
        self.index_map = map;
        self
    }

    pub fn with_param_domain(mut self, lo: f64, hi: f64) -> Result<Self, NepError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(NepError::BadInterval(lo, hi));
        }
        if self.is_transmission() {
            if lo <= 0.0 {
                return Err(NepError::NonPositiveParameter(lo));
            }
            if lo <= 1.0 && 1.0 <= hi {
                return Err(NepError::IntervalContainsOne(lo, hi));
            }
        }
        self.param_domain = (lo, hi);
        Ok(self)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn index_map(&self) -> IndexMap {
        self.index_map
    }

    pub fn param_domain(&self) -> (f64, f64) {
        self.param_domain
    }

    pub fn dimension(&self) -> usize {
        match self.geometry {
            Geometry::Annulus { .. } => 4,
            _ => 2,
        }
    }

    pub fn is_transmission(&self) -> bool {
        !matches!(self.geometry, Geometry::Toy(_))
    }

    pub fn bessel_order(&self) -> Option<u32> {
        match self.geometry {
            Geometry::Disk { m } | Geometry::Annulus { m, .. } => Some(m),
            Geometry::Toy(_) => None,
        }
    }

    pub fn inner_radius(&self) -> Option<f64> {
        match self.geometry {
            Geometry::Annulus { r, .. } => Some(r),
            _ => None,
        }
    }

    pub fn evaluate(&self, kappa: Complex64, p: f64) -> Result<CMatrix, NepError> {
        if self.is_transmission() && !(p > 0.0) {
            return Err(NepError::NonPositiveParameter(p));
        }
        self.matrix_at(kappa, Complex64::new(p, 0.0))
    }

    pub fn determinant(&self, kappa: Complex64, p: f64) -> Result<Complex64, NepError> {
        Ok(linalg::determinant(&self.evaluate(kappa, p)?))
    }

    /// `L(κ, p)` continued to complex `p`, used for Cauchy-integral
    /// derivatives in the parameter.
    pub(crate) fn matrix_at(&self, kappa: Complex64, p: Complex64) -> Result<CMatrix, NepError> {
        match self.geometry {
            Geometry::Disk { m } => {
                if kappa == Complex64::new(0.0, 0.0) {
                    return Err(NepError::ZeroWavenumber);
                }
                let q = self.index_map.scale_complex(p);
                let (j0, jp0) = bessel_j_with_prime(m, kappa)?;
                let (j1, jp1) = bessel_j_with_prime(m, q * kappa)?;
                Ok(DMatrix::from_row_slice(2, 2, &[j0, j1, jp0, q * jp1]))
            }
            Geometry::Annulus { m, r } => {
                if kappa == Complex64::new(0.0, 0.0) {
                    return Err(NepError::ZeroWavenumber);
                }
                let q = self.index_map.scale_complex(p);
                let mut a = DMatrix::zeros(4, 4);
                for (row, arg) in [(0, kappa), (2, kappa * r)] {
                    let outer = bessel_jy(m, arg)?;
                    let inner = bessel_jy(m, q * arg)?;
                    a[(row, 0)] = outer.j;
                    a[(row, 1)] = outer.y;
                    a[(row, 2)] = inner.j;
                    a[(row, 3)] = inner.y;
                    a[(row + 1, 0)] = outer.jp;
                    a[(row + 1, 1)] = outer.yp;
                    a[(row + 1, 2)] = q * inner.jp;
                    a[(row + 1, 3)] = q * inner.yp;
                }
                Ok(a)
            }
            Geometry::Toy(kind) => {
                let l = kappa;
                let one = Complex64::new(1.0, 0.0);
                let zero = Complex64::new(0.0, 0.0);
                let entries = match kind {
                    ToyKind::Crossing => [l - p, zero, zero, l + p],
                    ToyKind::Algebraic => [l, one, p, l],
                    ToyKind::Veering { eps } => {
                        let e = Complex64::new(eps, 0.0);
                        [l - 2.0 * p, e, e, l]
                    }
                    ToyKind::Degenerate => [l, p, zero, l],
                };
                Ok(DMatrix::from_row_slice(2, 2, &entries))
            }
        }
    }

    pub(crate) fn determinant_at(&self, kappa: Complex64, p: Complex64) -> Result<Complex64, NepError> {
        Ok(linalg::determinant(&self.matrix_at(kappa, p)?))
    }

    /// Splits a nullspace vector into the physical eigenfunction coefficients:
    /// `(α, β)` for the disk and `(α, β, γ, δ)` for the annulus.
    ///
    /// The boundary matrices act on `(α, −β)` and `(α, β, −γ, −δ)`
    /// respectively, so the inner-medium coefficients change sign here.
    pub fn eigenfunction_coefficients(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        match self.geometry {
            Geometry::Disk { .. } => vec![coeffs[0], -coeffs[1]],
            Geometry::Annulus { .. } => vec![coeffs[0], coeffs[1], -coeffs[2], -coeffs[3]],
            Geometry::Toy(_) => coeffs.to_vec(),
        }
    }
}

/// `|det L(conj κ, p) − conj det L(κ, p)|`, relative to the largest product
/// scale of the matrix. Zero in exact arithmetic for the transmission
/// problems, whose entries have real Taylor coefficients.
pub fn conjugate_residual(nep: &NepProblem, kappa: Complex64, p: f64) -> Result<f64, NepError> {
    let a = nep.evaluate(kappa, p)?;
    let b = nep.evaluate(kappa.conj(), p)?;
    let scale = product_scale(&a);
    Ok((linalg::determinant(&b) - linalg::determinant(&a).conj()).norm() / scale)
}

/// Residual of the Cauchy–Riemann equation `∂f/∂y = i ∂f/∂x` for
/// `f = det L(·, p)`, from central differences with step `h`, relative to
/// `|∂f/∂x|`.
pub fn cauchy_riemann_residual(nep: &NepProblem, kappa: Complex64, p: f64, h: f64) -> Result<f64, NepError> {
    let f = |z: Complex64| nep.determinant(z, p);
    let fx = (f(kappa + h)? - f(kappa - h)?) / (2.0 * h);
    let ih = Complex64::new(0.0, h);
    let fy = (f(kappa + ih)? - f(kappa - ih)?) / (2.0 * h);
    Ok((fy - Complex64::i() * fx).norm() / fx.norm())
}

/// Product of the row norms, an upper bound for `|det A|`.
pub fn product_scale(a: &CMatrix) -> f64 {
    (0..a.nrows()).map(|i| a.row(i).norm()).product::<f64>().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{bessel_j, bessel_j_prime, bessel_j_zeros};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disk_entries_and_determinant() {
        let nep = NepProblem::disk(0);
        let a = nep.evaluate(c(1.0, 0.0), 2.0).unwrap();
        let j = |x: f64| bessel_j(0, c(x, 0.0)).unwrap();
        let jp = |x: f64| bessel_j_prime(0, c(x, 0.0)).unwrap();
        assert_eq!(a[(0, 1)], j(2.0));
        assert_eq!(a[(1, 1)], 2.0 * jp(2.0));
        let want = j(1.0) * 2.0 * jp(2.0) - jp(1.0) * j(2.0);
        assert!((nep.determinant(c(1.0, 0.0), 2.0).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn singular_medium_gives_zero_determinant() {
        let disk = NepProblem::disk(0);
        let ann = NepProblem::annulus(1, 0.3).unwrap();
        for kappa in [c(1.3, 0.0), c(2.0, 0.7), c(4.1, -0.2)] {
            assert!(disk.determinant(kappa, 1.0).unwrap().norm() < 1e-15);
            assert!(ann.determinant(kappa, 1.0).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn pair_of_bessel_zeros_is_an_eigenvalue() {
        let z = bessel_j_zeros(0, 2);
        let nep = NepProblem::disk(0);
        let d = nep.determinant(c(z[0], 0.0), z[1] / z[0]).unwrap();
        assert!(d.norm() < 1e-14, "{d}");
        let lin = NepProblem::disk(0).with_index_map(IndexMap::Linear);
        let d = lin.determinant(c(z[0], 0.0), (z[1] / z[0]).powi(2)).unwrap();
        assert!(d.norm() < 1e-14, "{d}");
    }

    #[test]
    fn annulus_block_matches_disk() {
        let disk = NepProblem::disk(2);
        let ann = NepProblem::annulus(2, 0.4).unwrap();
        let (kappa, p) = (c(2.7, 0.4), 3.5);
        let a = ann.evaluate(kappa, p).unwrap();
        let d = disk.evaluate(kappa, p).unwrap();
        for i in 0..2 {
            assert_eq!(a[(i, 0)], d[(i, 0)]);
            assert_eq!(a[(i, 2)], d[(i, 1)]);
        }
    }

    #[test]
    fn toy_determinants() {
        let cross = NepProblem::toy(ToyKind::Crossing).unwrap();
        assert_eq!(cross.determinant(c(2.0, 0.0), 1.0).unwrap(), c(3.0, 0.0));
        let alg = NepProblem::toy(ToyKind::Algebraic).unwrap();
        assert_eq!(alg.determinant(c(0.5, 0.0), 0.25).unwrap(), c(0.0, 0.0));
        let veer = NepProblem::toy(ToyKind::Veering { eps: 0.05 }).unwrap();
        assert!(veer.determinant(c(0.05, 0.0), 0.0).unwrap().norm() < 1e-17);
        assert!(NepProblem::toy(ToyKind::Veering { eps: 0.0 }).is_err());
    }

    #[test]
    fn parameter_validation() {
        let disk = NepProblem::disk(0);
        assert_eq!(disk.evaluate(c(1.0, 0.0), -1.0).unwrap_err(), NepError::NonPositiveParameter(-1.0));
        assert_eq!(disk.evaluate(c(0.0, 0.0), 2.0).unwrap_err(), NepError::ZeroWavenumber);
        assert!(matches!(disk.clone().with_param_domain(0.5, 2.0), Err(NepError::IntervalContainsOne(..))));
        assert!(NepProblem::annulus(0, 1.0).is_err());
        assert_eq!(NepProblem::annulus(0, 0.1).unwrap().param_domain(), (6.0, 64.0));
        assert_eq!(NepProblem::annulus(1, 0.1).unwrap().param_domain(), (4.0, 25.0));
    }

    #[test]
    fn index_maps() {
        assert_eq!(IndexMap::Squared.index(3.0), 9.0);
        assert_eq!(IndexMap::Linear.scale(9.0), 3.0);
        assert_eq!(IndexMap::Linear.parameter_for_scale(3.0), 9.0);
        assert_eq!(IndexMap::Squared.index_derivative(3.0), 6.0);
    }
}
