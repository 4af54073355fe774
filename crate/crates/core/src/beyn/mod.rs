//! Contour-integral eigensolver for `L(κ, p) x = 0` inside a circle, using
//! block Hankel matrices of higher moments, and a winding-number root count
//! used as an independent check.

mod solve;

pub use solve::{solve, solve_detailed, SolveOutput};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, CMatrix};
use crate::nep::{NepError, NepProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeynError {
    #[error(transparent)]
    Nep(#[from] NepError),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("contour disk |κ - {center}| <= {radius} contains κ = 0")]
    EnclosesOrigin { center: Complex64, radius: f64 },
    #[error("L(κ) is singular at quadrature node {index} (κ = {z}); an eigenvalue lies on the contour, perturb the center or radius")]
    SingularNode { index: usize, z: Complex64 },
    #[error("numerical rank {rank} reaches the Hankel bound {cols}; more eigenvalues than the pencil can hold, increase hankel_blocks")]
    RankSaturated { rank: usize, cols: usize },
    #[error("winding number {0} is not close to an integer; an eigenvalue may touch the contour")]
    NonIntegerWinding(f64),
    #[error("reduced eigenvalue problem did not converge")]
    ReducedEigenproblem,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub n_quad: usize,
}

impl ContourSpec {
    pub fn new(center: Complex64, radius: f64, n_quad: usize) -> Result<Self, BeynError> {
        let c = ContourSpec { center, radius, n_quad };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), BeynError> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(BeynError::InvalidContour(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.center.re.is_finite() && self.center.im.is_finite()) {
            return Err(BeynError::InvalidContour("center is not finite".into()));
        }
        if self.n_quad < 64 {
            return Err(BeynError::InvalidContour(format!("n_quad must be at least 64, got {}", self.n_quad)));
        }
        Ok(())
    }

    fn validate_for(&self, nep: &NepProblem) -> Result<(), BeynError> {
        self.validate()?;
        if nep.is_transmission() && self.center.norm() <= self.radius {
            return Err(BeynError::EnclosesOrigin { center: self.center, radius: self.radius });
        }
        Ok(())
    }

    /// `e^{iθ_k}` for the `n_quad` equispaced angles.
    pub fn unit_nodes(&self) -> Vec<Complex64> {
        let n = self.n_quad as f64;
        (0..self.n_quad)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Complex64> {
        self.unit_nodes().into_iter().map(|u| self.center + self.radius * u).collect()
    }

    /// Distance from the circle, positive inside.
    pub fn depth(&self, z: Complex64) -> f64 {
        self.radius - (z - self.center).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeynConfig {
    /// Number of Hankel blocks `K`.
    pub hankel_blocks: usize,
    /// Probe width `ℓ`; `None` uses the problem dimension.
    pub probe_cols: Option<usize>,
    /// Singular-value cutoff relative to the largest singular value of `H_0`.
    pub rank_tol: f64,
    /// Acceptance bound on `σ_min / σ_max` of `L(κ, p)`.
    pub residual_tol: f64,
    pub rng_seed: u64,
}

impl Default for BeynConfig {
    fn default() -> Self {
        BeynConfig { hankel_blocks: 3, probe_cols: None, rank_tol: 1e-8, residual_tol: 1e-7, rng_seed: 1 }
    }
}

impl BeynConfig {
    pub fn probe_width(&self, nep: &NepProblem) -> usize {
        self.probe_cols.unwrap_or(nep.dimension())
    }

    pub fn validate(&self) -> Result<(), BeynError> {
        let bad = |msg: String| Err(BeynError::InvalidContour(msg));
        if self.hankel_blocks == 0 {
            return bad("hankel_blocks must be at least 1".into());
        }
        if self.probe_cols == Some(0) {
            return bad("probe_cols must be at least 1".into());
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return bad(format!("rank_tol must lie in (0, 1), got {}", self.rank_tol));
        }
        if !(self.residual_tol > 0.0) {
            return bad(format!("residual_tol must be positive, got {}", self.residual_tol));
        }
        Ok(())
    }
}

/// Seeded probe matrix with entries uniform in the unit square of ℂ.
pub fn probe_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CMatrix::zeros(rows, cols);
    // Column-major fill so the stream order is fixed by (rows, cols).
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            v[(i, j)] = Complex64::new(re, im);
        }
    }
    v
}

/// `L(z_k)^{-1} V` at every quadrature node, in node order.
///
/// Nodes are solved in parallel; the returned vector is indexed by node, so
/// any later reduction over it is independent of the thread count.
fn node_solves(nep: &NepProblem, p: f64, contour: &ContourSpec, v: &CMatrix) -> Result<Vec<CMatrix>, BeynError> {
    contour
        .nodes()
        .into_par_iter()
        .enumerate()
        .map(|(index, z)| {
            let a = nep.evaluate(z, p)?;
            linalg::solve(&a, v).ok_or(BeynError::SingularNode { index, z })
        })
        .collect()
}

/// Trapezoidal moments from node solves, with weights `f(z_k)^j`.
fn accumulate(solves: &[CMatrix], contour: &ContourSpec, count: usize, f: impl Fn(Complex64, Complex64) -> Complex64) -> Vec<CMatrix> {
    let (rows, cols) = solves[0].shape();
    let mut out = vec![CMatrix::zeros(rows, cols); count];
    let h = contour.radius / contour.n_quad as f64;
    for (x, u) in solves.iter().zip(contour.unit_nodes()) {
        let base = f(contour.center + contour.radius * u, u);
        let mut w = h * u;
        for a in out.iter_mut() {
            *a += x * w;
            w *= base;
        }
    }
    out
}

/// `A_j = (1/2πi) ∮ z^j L(z, p)^{-1} V dz` for `j = 0 .. 2K-1`, trapezoidal
/// rule on `n_quad` nodes, with the seeded probe `V` of width `ℓ`.
pub fn moments(nep: &NepProblem, p: f64, contour: &ContourSpec, config: &BeynConfig) -> Result<Vec<CMatrix>, BeynError> {
    let v = probe_matrix(nep.dimension(), config.probe_width(nep), config.rng_seed);
    moments_with_probe(nep, p, contour, config, &v)
}

pub fn moments_with_probe(nep: &NepProblem, p: f64, contour: &ContourSpec, config: &BeynConfig, v: &CMatrix) -> Result<Vec<CMatrix>, BeynError> {
    contour.validate_for(nep)?;
    config.validate()?;
    let solves = node_solves(nep, p, contour, v)?;
    Ok(accumulate(&solves, contour, 2 * config.hankel_blocks, |z, _| z))
}

/// Moments in the shifted and scaled variable `(z - center) / radius`, which
/// keeps the Hankel blocks well scaled for contours away from the origin.
fn scaled_moments(nep: &NepProblem, p: f64, contour: &ContourSpec, count: usize, v: &CMatrix) -> Result<(Vec<CMatrix>, f64), BeynError> {
    let solves = node_solves(nep, p, contour, v)?;
    let typical = contour.radius * solves.iter().map(|x| x.norm()).sum::<f64>() / solves.len() as f64;
    Ok((accumulate(&solves, contour, count, |_, u| u), typical))
}

/// Number of zeros of `det L(·, p)` inside the contour, counted with
/// multiplicity, as the winding number `(1/2πi) ∮ det'/det`. The derivative
/// is a central difference with step `1e-6 R`.
pub fn count_by_argument_principle(nep: &NepProblem, p: f64, contour: &ContourSpec) -> Result<usize, BeynError> {
    let w = winding_number(nep, p, contour)?;
    let k = w.re.round();
    if (w - Complex64::new(k, 0.0)).norm() > 0.1 || k < 0.0 {
        return Err(BeynError::NonIntegerWinding(w.re));
    }
    Ok(k as usize)
}

pub fn winding_number(nep: &NepProblem, p: f64, contour: &ContourSpec) -> Result<Complex64, BeynError> {
    contour.validate_for(nep)?;
    let h = 1e-6 * contour.radius;
    let terms: Vec<Complex64> = contour
        .unit_nodes()
        .into_par_iter()
        .enumerate()
        .map(|(index, u)| {
            let z = contour.center + contour.radius * u;
            let f = nep.determinant(z, p)?;
            if f == Complex64::new(0.0, 0.0) || !f.re.is_finite() {
                return Err(BeynError::SingularNode { index, z });
            }
            let df = (nep.determinant(z + h, p)? - nep.determinant(z - h, p)?) / (2.0 * h);
            Ok(u * df / f)
        })
        .collect::<Result<_, BeynError>>()?;
    let sum: Complex64 = terms.iter().sum();
    Ok(sum * contour.radius / contour.n_quad as f64)
}
