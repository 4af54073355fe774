//! Power-law rate of the indicator at a bifurcation, `|Ī| ∼ |p − p*|^α`.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn contains(self, p: f64, p_star: f64) -> bool {
        match self {
            Side::Left => p < p_star,
            Side::Right => p > p_star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub alpha: f64,
    /// Twice the standard error of the slope.
    pub halfwidth: f64,
    pub samples: usize,
    /// `log10` span of `|p − p*|` covered by the fit.
    pub decades: f64,
}

pub const MIN_FIT_SAMPLES: usize = 8;
pub const MIN_FIT_DECADES: f64 = 2.0;

/// Least-squares slope of `log|Ī|` against `log|p − p*|` over the samples on
/// one side of `p*` with nonzero `Ī`.
pub fn fit_rate(samples: &[(f64, f64)], p_star: f64, side: Side) -> Result<RateFit, AnalysisError> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(p, ib)| side.contains(*p, p_star) && *ib != 0.0 && ib.is_finite())
        .map(|(p, ib)| ((p - p_star).abs().ln(), ib.abs().ln()))
        .collect();
    let n = pts.len();
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, _)| (a.min(*x), b.max(*x)));
    let decades = if n > 0 { (hi - lo) / std::f64::consts::LN_10 } else { 0.0 };
    if n < MIN_FIT_SAMPLES || decades < MIN_FIT_DECADES {
        return Err(AnalysisError::InsufficientSpan { samples: n, decades });
    }
    let nf = n as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / nf;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts.iter().map(|q| (q.1 - my - slope * (q.0 - mx)).powi(2)).sum();
    let se = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(RateFit { alpha: slope, halfwidth: 2.0 * se, samples: n, decades })
}

/// Sample selection before [`fit_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    /// Samples closest to `p*` dropped from the fit.
    pub drop_nearest: usize,
    /// Samples farther than this fraction of the distance to the next event
    /// (or domain end) are dropped.
    pub max_fraction: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { drop_nearest: 2, max_fraction: 0.1 }
    }
}

impl FitWindow {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.max_fraction > 0.0 && self.max_fraction <= 1.0) {
            return Err(AnalysisError::Config(format!("max_fraction must lie in (0, 1], got {}", self.max_fraction)));
        }
        Ok(())
    }

    /// Samples on `side` kept by the window; `span` is the distance from `p*`
    /// to the neighbouring event or domain end on that side.
    pub fn select(&self, samples: &[(f64, f64)], p_star: f64, side: Side, span: f64) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = samples
            .iter()
            .copied()
            .filter(|(p, _)| side.contains(*p, p_star) && (p - p_star).abs() <= self.max_fraction * span)
            .collect();
        pts.sort_by(|a, b| (a.0 - p_star).abs().total_cmp(&(b.0 - p_star).abs()));
        pts.into_iter().skip(self.drop_nearest).collect()
    }

    pub fn fit(&self, samples: &[(f64, f64)], p_star: f64, side: Side, span: f64) -> Result<RateFit, AnalysisError> {
        fit_rate(&self.select(samples, p_star, side, span), p_star, side)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graded(p_star: f64, side: Side, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..40)
            .map(|k| {
                let d = 0.5 * 2f64.powf(-(k as f64) / 3.0);
                let p = match side {
                    Side::Left => p_star - d,
                    Side::Right => p_star + d,
                };
                (p, f(d))
            })
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let s = graded(3.0, Side::Right, |d| -d.powf(2.0 / 3.0));
        let fit = fit_rate(&s, 3.0, Side::Right).unwrap();
        assert!((fit.alpha - 2.0 / 3.0).abs() < 1e-6, "{fit:?}");
        assert!(fit.halfwidth < 1e-6);
    }

    #[test]
    fn other_side_is_ignored() {
        let mut s = graded(3.0, Side::Left, |d| d.powf(0.5));
        s.extend(graded(3.0, Side::Right, |d| d.powf(2.0)));
        let fit = fit_rate(&s, 3.0, Side::Left).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_span_is_rejected() {
        let s: Vec<(f64, f64)> = (1..20).map(|k| (1.0 + 0.01 * k as f64, 1.0)).collect();
        assert!(matches!(fit_rate(&s, 1.0, Side::Right), Err(AnalysisError::InsufficientSpan { .. })));
    }

    #[test]
    fn window_drops_nearest_and_far() {
        let s = graded(0.0, Side::Right, |d| d);
        let w = FitWindow::default();
        let kept = w.select(&s, 0.0, Side::Right, 2.0);
        assert!(kept.iter().all(|(p, _)| *p <= 0.2));
        let nearest = s.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
        assert!(kept.iter().all(|(p, _)| *p > nearest * 1.5));
    }

    proptest! {
        #[test]
        fn rescaling_leaves_rate_unchanged(alpha in 0.3f64..1.2, c in 0.01f64..100.0, wobble in 0.0f64..0.1) {
            let base = graded(1.0, Side::Left, |d| d.powf(alpha) * (1.0 + wobble * d));
            let scaled: Vec<(f64, f64)> = base.iter().map(|(p, v)| (*p, c * v)).collect();
            let a = fit_rate(&base, 1.0, Side::Left).unwrap();
            let b = fit_rate(&scaled, 1.0, Side::Left).unwrap();
            prop_assert!((a.alpha - b.alpha).abs() < 1e-9);
        }
    }
}
