//! Indicator-based analysis of tracked transmission eigenvalues: indicator
//! series along chains, eigenvalue slopes, power-law rates at bifurcations,
//! order classification and the Dirichlet-Laplacian references.

mod classify;
mod indicator;
mod quadrature;
mod rate;
mod reference;

pub use classify::{classify_bifurcation, event_spans, BifurcationReport, BranchFit, Order, Parity, RealSide};
pub use indicator::{
    bessel_product_integral, eigenvalue_derivative, indicator, radial_norm, BesselKind, IndicatorValue, RadialPair,
    Slope, LOMMEL_MIN_IMAG, UNBOUNDED_BELOW,
};
pub use quadrature::gauss_legendre;
pub use rate::{fit_rate, FitWindow, RateFit, Side, MIN_FIT_DECADES, MIN_FIT_SAMPLES};
pub use reference::{dirichlet_reference, laplacian_limit_check, refine_eigenvalue, LimitEntry};

use rayon::prelude::*;
use thiserror::Error;

use crate::nep::NepProblem;
use crate::special::BesselError;
use crate::tracker::TrajectorySet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("indicators are defined only for the disk and annulus problems")]
    NotTransmission,
    #[error("p = 1 gives n ≡ 1, where the normalized indicator divides by zero")]
    SingularIndex,
    #[error("rate fit needs at least 8 samples over 2 decades of |p - p*|, got {samples} over {decades:.2}; refine near the event")]
    InsufficientSpan { samples: usize, decades: f64 },
    #[error("{0}")]
    Config(String),
}

/// Indicator values along one chain, in the chain's sample order. Computed
/// from unit-norm coefficient vectors whose first nonzero entry is real and
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub chain: usize,
    pub trajectory: Option<usize>,
    pub values: Vec<IndicatorValue>,
}

impl IndicatorSeries {
    /// `(p, Ī)` pairs.
    pub fn i_bar(&self) -> Vec<(f64, f64)> {
        self.values.iter().map(|v| (v.p, v.i_bar)).collect()
    }
}

pub fn indicator_series(nep: &NepProblem, set: &TrajectorySet, tol_real: f64) -> Result<Vec<IndicatorSeries>, AnalysisError> {
    let mut owner = vec![None; set.chains.len()];
    for t in &set.trajectories {
        for &c in &t.chains {
            owner[c] = Some(t.label);
        }
    }
    set.chains
        .par_iter()
        .map(|ch| {
            let values = ch
                .points
                .iter()
                .map(|pt| indicator(nep, &set.samples[pt.sample].pairs[pt.pair], tol_real))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(IndicatorSeries { chain: ch.label, trajectory: owner[ch.label], values })
        })
        .collect()
}

/// `(chain, point index)` of real samples at least `margin` away from every
/// bifurcation parameter and at least the boundary band inside the contour:
/// the smooth real arcs where the slope formula applies.
pub fn smooth_real_points(
    tracker: &crate::tracker::Tracker,
    set: &TrajectorySet,
    events: &[crate::tracker::Event],
    margin: f64,
) -> Vec<(usize, usize)> {
    let tol = tracker.tol_real();
    let band = tracker.adaptive.boundary_band * tracker.contour.radius;
    let stars: Vec<f64> = events.iter().filter(|e| e.is_bifurcation()).map(|e| e.p_star).collect();
    let mut out = Vec::new();
    for ch in &set.chains {
        for (k, q) in ch.points.iter().enumerate() {
            let real = q.kappa.im.abs() <= tol;
            let clear = stars.iter().all(|s| (q.p - s).abs() >= margin);
            if real && clear && tracker.contour.depth(q.kappa) >= band {
                out.push((ch.label, k));
            }
        }
    }
    out
}
