//! Minimum-distance partial bijections between eigenvalue lists.

use num_complex::Complex64;

/// Two candidate assignments closer than this in total cost are ties.
pub const TIE_TOL: f64 = 1e-12;
const EXHAUSTIVE_LIMIT: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `(index in prev, index in next)`, sorted by the first index.
    pub assignment: Vec<(usize, usize)>,
    pub unmatched_prev: Vec<usize>,
    pub unmatched_next: Vec<usize>,
    pub cost: f64,
    /// Another assignment of equal size had cost within `TIE_TOL`; the
    /// lexicographically smallest was kept.
    pub ambiguous: bool,
}

impl MatchResult {
    pub fn partner_of_prev(&self, i: usize) -> Option<usize> {
        self.assignment.iter().find(|(a, _)| *a == i).map(|(_, b)| *b)
    }

    pub fn partner_of_next(&self, j: usize) -> Option<usize> {
        self.assignment.iter().find(|(_, b)| *b == j).map(|(a, _)| *a)
    }
}

/// Default gate: half the smallest distance between distinct values within
/// either list, but never below `floor`.
pub fn default_gate(prev: &[Complex64], next: &[Complex64], floor: f64) -> f64 {
    let mut d = f64::INFINITY;
    for list in [prev, next] {
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let g = (list[i] - list[j]).norm();
                if g > 0.0 {
                    d = d.min(g);
                }
            }
        }
    }
    (0.5 * d).max(floor)
}

/// Among partial bijections whose pairs are all within `gate`, the one with
/// the most pairs, then the least total distance.
pub fn match_eigenvalues(prev: &[Complex64], next: &[Complex64], gate: f64) -> MatchResult {
    let cost = |i: usize, j: usize| -> Option<f64> {
        let d = (prev[i] - next[j]).norm();
        (d <= gate).then_some(d)
    };
    let pairs = if prev.len().max(next.len()) <= EXHAUSTIVE_LIMIT {
        exhaustive(prev.len(), next.len(), &cost)
    } else {
        (hungarian(prev.len(), next.len(), &cost), false)
    };
    let (assignment, ambiguous) = pairs;
    let cost_total = assignment.iter().map(|&(i, j)| (prev[i] - next[j]).norm()).sum();
    let unmatched_prev = (0..prev.len()).filter(|i| !assignment.iter().any(|p| p.0 == *i)).collect();
    let unmatched_next = (0..next.len()).filter(|j| !assignment.iter().any(|p| p.1 == *j)).collect();
    MatchResult { assignment, unmatched_prev, unmatched_next, cost: cost_total, ambiguous }
}

/// Maximum-cardinality, then minimum-cost assignment under an arbitrary gated
/// cost; the flag reports a tie.
pub(crate) fn assign_min_cost(n: usize, m: usize, cost: &dyn Fn(usize, usize) -> Option<f64>) -> (Vec<(usize, usize)>, bool) {
    if n.max(m) <= EXHAUSTIVE_LIMIT { exhaustive(n, m, cost) } else { (hungarian(n, m, cost), false) }
}

fn exhaustive(n: usize, m: usize, cost: &dyn Fn(usize, usize) -> Option<f64>) -> (Vec<(usize, usize)>, bool) {
    struct Search<'a> {
        n: usize,
        m: usize,
        cost: &'a dyn Fn(usize, usize) -> Option<f64>,
        used: Vec<bool>,
        current: Vec<Option<usize>>,
        best: Vec<Option<usize>>,
        best_count: usize,
        best_cost: f64,
        ambiguous: bool,
    }
    impl Search<'_> {
        fn run(&mut self, row: usize, count: usize, total: f64) {
            let reachable = count + (self.n - row).min(self.m);
            if reachable < self.best_count
                || (reachable == self.best_count && self.best_count > 0 && total > self.best_cost + TIE_TOL)
            {
                return;
            }
            if row == self.n {
                if count > self.best_count || (count == self.best_count && total < self.best_cost - TIE_TOL) {
                    self.best_count = count;
                    self.best_cost = total;
                    self.best = self.current.clone();
                    self.ambiguous = false;
                } else if count == self.best_count && (total - self.best_cost).abs() <= TIE_TOL {
                    self.ambiguous = true;
                }
                return;
            }
            for j in 0..self.m {
                if self.used[j] {
                    continue;
                }
                if let Some(c) = (self.cost)(row, j) {
                    self.used[j] = true;
                    self.current[row] = Some(j);
                    self.run(row + 1, count + 1, total + c);
                    self.used[j] = false;
                    self.current[row] = None;
                }
            }
            self.run(row + 1, count, total);
        }
    }
    let mut s = Search {
        n,
        m,
        cost,
        used: vec![false; m],
        current: vec![None; n],
        best: vec![None; n],
        best_count: 0,
        best_cost: 0.0,
        ambiguous: false,
    };
    s.run(0, 0, 0.0);
    let assignment = s.best.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
    (assignment, s.ambiguous)
}

/// Rectangular assignment by the Hungarian method. Gated pairs carry a cost
/// larger than any feasible total so that cardinality is maximised first.
fn hungarian(n: usize, m: usize, cost: &dyn Fn(usize, usize) -> Option<f64>) -> Vec<(usize, usize)> {
    let size = n.max(m);
    let mut finite_sum = 0.0;
    for i in 0..n {
        for j in 0..m {
            if let Some(c) = cost(i, j) {
                finite_sum += c;
            }
        }
    }
    let big = 1.0 + 2.0 * finite_sum;
    let a = |i: usize, j: usize| -> f64 {
        if i < n && j < m {
            cost(i, j).unwrap_or(big)
        } else {
            big
        }
    };
    // Jonker-Volgenant style potentials, 1-based internally.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut p = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out: Vec<(usize, usize)> = (1..=size)
        .filter_map(|j| {
            let i = p[j];
            (i >= 1 && i <= n && j <= m && cost(i - 1, j - 1).is_some()).then(|| (i - 1, j - 1))
        })
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn nearest_pairs() {
        let r = match_eigenvalues(&[c(1.0, 0.0), c(-1.0, 0.0)], &[c(1.1, 0.0), c(-1.1, 0.0)], 1.0);
        assert_eq!(r.assignment, vec![(0, 0), (1, 1)]);
        assert!((r.cost - 0.2).abs() < 1e-14);
        assert!(!r.ambiguous);
    }

    #[test]
    fn conjugate_pairs_stay_on_their_side() {
        let r = match_eigenvalues(&[c(0.0, 1.0), c(0.0, -1.0)], &[c(0.0, -0.9), c(0.0, 0.9)], 1.0);
        assert_eq!(r.assignment, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn gate_leaves_far_values_unmatched() {
        let r = match_eigenvalues(&[c(0.0, 0.0), c(5.0, 0.0)], &[c(0.1, 0.0)], 1.0);
        assert_eq!(r.assignment, vec![(0, 0)]);
        assert_eq!(r.unmatched_prev, vec![1]);
        assert!(r.unmatched_next.is_empty());
    }

    #[test]
    fn ties_are_flagged() {
        let r = match_eigenvalues(&[c(0.0, 1.0), c(0.0, -1.0)], &[c(1.0, 0.0), c(-1.0, 0.0)], 10.0);
        assert!(r.ambiguous);
        assert_eq!(r.assignment, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn hungarian_agrees_with_exhaustive() {
        let prev: Vec<Complex64> = (0..7).map(|k| c((k as f64 * 1.7).sin() * 3.0, (k as f64 * 0.9).cos())).collect();
        let next: Vec<Complex64> = (0..6).map(|k| c((k as f64 * 1.3).cos() * 3.0, (k as f64 * 2.1).sin())).collect();
        let cost = |i: usize, j: usize| {
            let d = (prev[i] - next[j]).norm();
            (d <= 2.5).then_some(d)
        };
        let (e, _) = exhaustive(7, 6, &cost);
        let h = hungarian(7, 6, &cost);
        let total = |a: &[(usize, usize)]| a.iter().map(|&(i, j)| (prev[i] - next[j]).norm()).sum::<f64>();
        assert_eq!(e.len(), h.len());
        assert!((total(&e) - total(&h)).abs() < 1e-12);
    }
}
