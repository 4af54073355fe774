//! Interpolating polynomial B-splines, fitted separately to the real and
//! imaginary parts of a trajectory.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    degree: usize,
    knots: Vec<f64>,
    coeffs: Vec<f64>,
}

impl Spline {
    /// Interpolates `(x_i, y_i)` with a spline of the given degree, lowered to
    /// `n - 1` when there are too few sites. Odd degrees use not-a-knot end
    /// conditions (interior knots at the sites, skipping `(D - 1)/2` at each
    /// end); even degrees place knots midway between sites.
    ///
    /// `x` must be strictly increasing.
    pub fn interpolate(x: &[f64], y: &[f64], degree: usize) -> Option<Spline> {
        let n = x.len();
        if n == 0 || n != y.len() || x.windows(2).any(|w| !(w[0] < w[1])) {
            return None;
        }
        let d = degree.min(n - 1);
        let mut knots = vec![x[0]; d + 1];
        let interior = n - d - 1;
        if d % 2 == 1 {
            let skip = (d + 1) / 2;
            knots.extend_from_slice(&x[skip..skip + interior]);
        } else {
            let skip = d / 2;
            knots.extend((0..interior).map(|j| 0.5 * (x[skip + j] + x[skip + j + 1])));
        }
        knots.extend(std::iter::repeat_n(x[n - 1], d + 1));
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut basis = vec![0.0; d + 1];
        for (i, &xi) in x.iter().enumerate() {
            let span = find_span(&knots, d, n, xi);
            basis_functions(&knots, d, span, xi, &mut basis);
            for (k, b) in basis.iter().enumerate() {
                a[(i, span - d + k)] = *b;
            }
        }
        let c = a.lu().solve(&DVector::from_column_slice(y))?;
        Some(Spline { degree: d, knots, coeffs: c.iter().copied().collect() })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Value at `x`; outside the domain the end polynomial pieces are
    /// extended.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    /// `k`-th derivative at `x`.
    pub fn eval_derivative(&self, x: f64, k: usize) -> f64 {
        if k > self.degree {
            return 0.0;
        }
        // Differentiate the coefficient sequence k times.
        let mut c = self.coeffs.clone();
        let mut d = self.degree;
        let mut lo = 0;
        for _ in 0..k {
            let mut next = Vec::with_capacity(c.len() - 1);
            for i in 0..c.len() - 1 {
                let j = lo + i + 1;
                let dt = self.knots[j + d] - self.knots[j];
                next.push(if dt > 0.0 { d as f64 * (c[i + 1] - c[i]) / dt } else { 0.0 });
            }
            c = next;
            d -= 1;
            lo += 1;
        }
        let knots = &self.knots[lo..self.knots.len() - lo];
        let n = c.len();
        let span = find_span(knots, d, n, x);
        let mut basis = vec![0.0; d + 1];
        basis_functions(knots, d, span, x, &mut basis);
        basis.iter().enumerate().map(|(i, b)| b * c[span - d + i]).sum()
    }
}

fn find_span(knots: &[f64], d: usize, n: usize, x: f64) -> usize {
    if x >= knots[n] {
        return n - 1;
    }
    if x <= knots[d] {
        return d;
    }
    // Last index with knots[i] <= x < knots[i + 1], within [d, n - 1].
    let mut lo = d;
    let mut hi = n;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Nonvanishing basis functions `N_{span-d..span, d}(x)` (Cox–de Boor).
fn basis_functions(knots: &[f64], d: usize, span: usize, x: f64, out: &mut [f64]) {
    let mut left = vec![0.0; d + 1];
    let mut right = vec![0.0; d + 1];
    out[0] = 1.0;
    for j in 1..=d {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom != 0.0 { out[r] / denom } else { 0.0 };
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Separate real and imaginary interpolating splines.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpline {
    pub re: Spline,
    pub im: Spline,
}

impl ComplexSpline {
    pub fn interpolate(x: &[f64], z: &[Complex64], degree: usize) -> Option<ComplexSpline> {
        let re: Vec<f64> = z.iter().map(|c| c.re).collect();
        let im: Vec<f64> = z.iter().map(|c| c.im).collect();
        Some(ComplexSpline { re: Spline::interpolate(x, &re, degree)?, im: Spline::interpolate(x, &im, degree)? })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }

    pub fn eval_derivative(&self, x: f64, k: usize) -> Complex64 {
        Complex64::new(self.re.eval_derivative(x, k), self.im.eval_derivative(x, k))
    }

    pub fn domain(&self) -> (f64, f64) {
        self.re.domain()
    }
}

/// Monotone reparametrisation of a chain's parameter range. Each end that
/// meets an event at `p*` contributes a `ln|p − p*|` term, under which the
/// Puiseux branches `κ* + a |p − p*|^{1/M}` become smooth and geometrically
/// graded samples become evenly spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamMap {
    pub left: Option<f64>,
    pub right: Option<f64>,
    pub scale: f64,
}

impl ParamMap {
    pub fn linear(scale: f64) -> Self {
        ParamMap { left: None, right: None, scale }
    }

    pub fn phi(&self, p: f64) -> f64 {
        let mut v = p / self.scale;
        if let Some(l) = self.left {
            v += ((p - l) / self.scale).ln();
        }
        if let Some(r) = self.right {
            v -= ((r - p) / self.scale).ln();
        }
        v
    }

    fn d1(&self, p: f64) -> f64 {
        1.0 / self.scale + self.left.map_or(0.0, |l| 1.0 / (p - l)) + self.right.map_or(0.0, |r| 1.0 / (r - p))
    }

    fn d2(&self, p: f64) -> f64 {
        self.left.map_or(0.0, |l| -1.0 / (p - l).powi(2)) + self.right.map_or(0.0, |r| 1.0 / (r - p).powi(2))
    }
}

/// Spline of `κ` against `φ(p)`, evaluated in terms of `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpline {
    pub map: ParamMap,
    pub spline: ComplexSpline,
    domain: (f64, f64),
}

impl ChainSpline {
    /// `p` strictly increasing and strictly inside the event parameters of
    /// `map`.
    pub fn interpolate(p: &[f64], z: &[Complex64], degree: usize, map: ParamMap) -> Option<ChainSpline> {
        let x: Vec<f64> = p.iter().map(|&q| map.phi(q)).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let spline = ComplexSpline::interpolate(&x, z, degree)?;
        Some(ChainSpline { map, spline, domain: (p[0], p[p.len() - 1]) })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn eval(&self, p: f64) -> Complex64 {
        self.spline.eval(self.map.phi(p))
    }

    /// `d^k κ / dp^k` for `k ≤ 2`.
    pub fn eval_derivative(&self, p: f64, k: usize) -> Complex64 {
        let x = self.map.phi(p);
        match k {
            0 => self.spline.eval(x),
            1 => self.spline.eval_derivative(x, 1) * self.map.d1(p),
            2 => {
                let d1 = self.map.d1(p);
                self.spline.eval_derivative(x, 2) * d1 * d1 + self.spline.eval_derivative(x, 1) * self.map.d2(p)
            }
            _ => panic!("derivatives above second order are not provided"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials_up_to_degree() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).powf(1.3)).collect();
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(3) - 0.01 * t.powi(7);
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let s = Spline::interpolate(&x, &y, 7).unwrap();
        for k in 0..100 {
            let t = x[19] * k as f64 / 99.0;
            assert!((s.eval(t) - f(t)).abs() < 1e-9 * (1.0 + f(t).abs()), "t={t}");
        }
        let df = |t: f64| -2.0 + 1.5 * t * t - 0.07 * t.powi(6);
        assert!((s.eval_derivative(1.1, 1) - df(1.1)).abs() < 1e-8);
    }

    #[test]
    fn interpolates_data() {
        let x = [0.0, 0.5, 0.7, 1.5, 2.0, 2.2, 3.0, 4.0, 4.5, 5.0, 6.0];
        let y: Vec<f64> = x.iter().map(|t: &f64| t.sin()).collect();
        for d in [1, 2, 3, 4, 7] {
            let s = Spline::interpolate(&x, &y, d).unwrap();
            for (xi, yi) in x.iter().zip(&y) {
                assert!((s.eval(*xi) - yi).abs() < 1e-12, "d={d}");
            }
        }
    }

    #[test]
    fn smooth_function_accuracy() {
        let x: Vec<f64> = (0..41).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| t.exp() * t.cos()).collect();
        let s = Spline::interpolate(&x, &y, 7).unwrap();
        let t = 2.05;
        assert!((s.eval(t) - t.exp() * t.cos()).abs() < 1e-9);
    }

    #[test]
    fn few_points_lower_the_degree() {
        let s = Spline::interpolate(&[0.0, 1.0], &[1.0, 3.0], 7).unwrap();
        assert_eq!(s.degree(), 1);
        assert!((s.eval(0.25) - 1.5).abs() < 1e-15);
        assert!(Spline::interpolate(&[0.0, 0.0], &[1.0, 2.0], 3).is_none());
    }

    #[test]
    fn graded_cube_root_is_reproduced_under_log_map() {
        // t^{1/3} sampled on a ratio-2^{1/3} grid toward t = 0, as near an event.
        let p_star = 1.0;
        let p: Vec<f64> = (0..=60).rev().map(|j| p_star + 2f64.powf(-(j as f64) / 3.0)).collect();
        let z: Vec<Complex64> = p.iter().map(|&q| Complex64::new((q - p_star).cbrt(), 0.0)).collect();
        let map = ParamMap { left: Some(p_star), right: None, scale: 1.0 };
        let s = ChainSpline::interpolate(&p, &z, 7, map).unwrap();
        let mut worst: f64 = 0.0;
        for w in p.windows(2) {
            for k in 1..4 {
                let q = w[0] + (w[1] - w[0]) * k as f64 / 4.0;
                worst = worst.max((s.eval(q).re - (q - p_star).cbrt()).abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");
        let q = 1.3;
        let d2 = -2.0 / 9.0 * (q - p_star).powf(-5.0 / 3.0);
        assert!((s.eval_derivative(q, 2).re - d2).abs() < 1e-4 * d2.abs());
    }

    #[test]
    fn linear_map_keeps_polynomials_exact() {
        let p: Vec<f64> = (0..17).map(|i| 0.1 + 0.9 * i as f64 / 16.0).collect();
        let z: Vec<Complex64> = p.iter().map(|&q| Complex64::new(-q, 0.0)).collect();
        let s = ChainSpline::interpolate(&p, &z, 7, ParamMap::linear(2.0)).unwrap();
        assert!((s.eval(0.437) - Complex64::new(-0.437, 0.0)).norm() < 1e-13);
        assert!((s.eval_derivative(0.6, 1) - Complex64::new(-1.0, 0.0)).norm() < 1e-11);
    }
}
