//! Order of a bifurcation from three independent readings: the indicator
//! rate, the number of meeting chains, and the real-branch parity.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rate::{FitWindow, RateFit, Side};
use super::IndicatorSeries;
use crate::tracker::{Event, EventKind, TrajectorySet};

/// Bifurcation order `M ≥ 2`, or `"unclassified"` when the structural
/// readings disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    M(usize),
    Unclassified,
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Order::M(m) => s.serialize_u64(*m as u64),
            Order::Unclassified => s.serialize_str("unclassified"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) if n >= 2 => Ok(Order::M(n as usize)),
            Raw::S(s) if s == "unclassified" => Ok(Order::Unclassified),
            _ => Err(serde::de::Error::custom("expected an order >= 2 or \"unclassified\"")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Side(s) of `p*` on which real branches exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RealSide {
    Left,
    Right,
    Both,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFit {
    pub chain: usize,
    pub side: Side,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub kind: EventKind,
    pub p_star: f64,
    pub kappa_star: f64,
    pub order_m: Order,
    /// `round(1 / (1 − α))` from the mean fitted rate.
    pub order_from_rate: Option<usize>,
    /// Number of chains meeting at the event.
    pub order_from_count: usize,
    pub parity: Option<Parity>,
    pub alpha_left: Option<RateFit>,
    pub alpha_right: Option<RateFit>,
    pub side: RealSide,
    pub real_branches_left: usize,
    pub real_branches_right: usize,
    /// Smooth-continuation trajectory labels.
    pub labels: Vec<usize>,
    pub chains: Vec<usize>,
    pub branch_fits: Vec<BranchFit>,
    pub note: Option<String>,
}

/// Distance from each bifurcation to its neighbour (or the domain end) on
/// the left and right.
pub fn event_spans(events: &[Event], domain: (f64, f64)) -> Vec<(f64, f64)> {
    let stars: Vec<f64> = events.iter().filter(|e| e.is_bifurcation()).map(|e| e.p_star).collect();
    events
        .iter()
        .map(|e| {
            let left = stars.iter().copied().filter(|&s| s < e.p_star).fold(domain.0, f64::max);
            let right = stars.iter().copied().filter(|&s| s > e.p_star).fold(domain.1, f64::min);
            (e.p_star - left, right - e.p_star)
        })
        .collect()
}

fn combine(fits: &[RateFit]) -> Option<RateFit> {
    if fits.is_empty() {
        return None;
    }
    let n = fits.len() as f64;
    let alpha = fits.iter().map(|f| f.alpha).sum::<f64>() / n;
    let spread = fits.iter().map(|f| (f.alpha - alpha).abs()).fold(0.0, f64::max);
    let halfwidth = fits.iter().map(|f| f.halfwidth).fold(0.0, f64::max).max(spread);
    Some(RateFit {
        alpha,
        halfwidth,
        samples: fits.iter().map(|f| f.samples).sum(),
        decades: fits.iter().map(|f| f.decades).fold(f64::INFINITY, f64::min),
    })
}

pub fn classify_bifurcation(
    event: &Event,
    set: &TrajectorySet,
    series: &[IndicatorSeries],
    span: (f64, f64),
    window: &FitWindow,
    tol_real: f64,
) -> BifurcationReport {
    let real = |c: &usize| set.chains[*c].is_real(tol_real);
    let left: Vec<usize> = event.chains_in.iter().copied().filter(real).collect();
    let right: Vec<usize> = event.chains_out.iter().copied().filter(real).collect();

    let mut branch_fits = Vec::new();
    for (side, chains, s) in [(Side::Left, &left, span.0), (Side::Right, &right, span.1)] {
        for &c in chains {
            let Some(ser) = series.iter().find(|x| x.chain == c) else { continue };
            let (fit, error) = match window.fit(&ser.i_bar(), event.p_star, side, s) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            branch_fits.push(BranchFit { chain: c, side, fit, error });
        }
    }
    let side_fit = |side: Side| {
        let v: Vec<RateFit> = branch_fits.iter().filter(|b| b.side == side).filter_map(|b| b.fit).collect();
        combine(&v)
    };
    let alpha_left = side_fit(Side::Left);
    let alpha_right = side_fit(Side::Right);
    let all: Vec<RateFit> = branch_fits.iter().filter_map(|b| b.fit).collect();
    let order_from_rate = combine(&all).and_then(|f| {
        let m = (1.0 / (1.0 - f.alpha)).round();
        (f.alpha < 1.0 && m >= 2.0 && m.is_finite()).then_some(m as usize)
    });

    let order_from_count = event.chains_in.len().max(event.chains_out.len());
    let parity = match (left.len(), right.len()) {
        (1, 1) => Some(Parity::Odd),
        (2, 0) | (0, 2) => Some(Parity::Even),
        _ => None,
    };
    let parity_ok = match parity {
        Some(Parity::Odd) => order_from_count % 2 == 1,
        Some(Parity::Even) => order_from_count % 2 == 0,
        None => false,
    };
    let order_m = if order_from_count >= 2 && parity_ok { Order::M(order_from_count) } else { Order::Unclassified };
    let note = match (order_m, order_from_rate) {
        (Order::M(m), Some(r)) if r != m => {
            let a = combine(&all).map(|f| f.alpha).unwrap_or(f64::NAN);
            Some(format!("fitted rate {a:.4} suggests M = {r}; branch structure gives M = {m}"))
        }
        (Order::M(_), None) => Some("no rate fit available".to_string()),
        (Order::Unclassified, _) => Some(format!(
            "{} meeting chains with {} real on the left and {} on the right",
            order_from_count,
            left.len(),
            right.len()
        )),
        _ => None,
    };

    let side = match (left.is_empty(), right.is_empty()) {
        (false, false) => RealSide::Both,
        (false, true) => RealSide::Left,
        (true, false) => RealSide::Right,
        (true, true) => RealSide::Neither,
    };
    let chains = event.chains();
    let mut labels: Vec<usize> = chains
        .iter()
        .filter_map(|c| set.trajectories.iter().find(|t| t.chains.contains(c)).map(|t| t.label))
        .collect();
    labels.sort_unstable();
    labels.dedup();

    BifurcationReport {
        kind: event.kind,
        p_star: event.p_star,
        kappa_star: event.kappa_star.re,
        order_m,
        order_from_rate,
        order_from_count,
        parity,
        alpha_left,
        alpha_right,
        side,
        real_branches_left: left.len(),
        real_branches_right: right.len(),
        labels,
        chains,
        branch_fits,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_serializes_as_number_or_tag() {
        assert_eq!(serde_json::to_string(&Order::M(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&Order::Unclassified).unwrap(), "\"unclassified\"");
        assert_eq!(serde_json::from_str::<Order>("2").unwrap(), Order::M(2));
        assert!(serde_json::from_str::<Order>("1").is_err());
    }
}
