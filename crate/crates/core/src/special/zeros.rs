use num_complex::Complex64;

use super::bessel::j_sequence;

fn j_and_prime(m: usize, x: f64) -> (f64, f64) {
    let seq = j_sequence(m + 1, Complex64::new(x, 0.0));
    let d = if m == 0 { -seq[1] } else { (seq[m - 1] - seq[m + 1]) * 0.5 };
    (seq[m].re, d.re)
}

/// The first `count` positive zeros of `J_m`, strictly increasing.
///
/// Sign changes are bracketed on a uniform scan of step π/4 starting below
/// the classical lower bound `m + 1.8 m^{1/3}` for the first zero; each
/// bracket is narrowed by bisection and polished with Newton steps.
pub fn bessel_j_zeros(m: u32, count: usize) -> Vec<f64> {
    let m = m as usize;
    let mut zeros = Vec::with_capacity(count);
    if count == 0 {
        return zeros;
    }
    let origin = if m == 0 { 1.0e-3 } else { m as f64 + 1.8 * (m as f64).cbrt() - 0.5 };
    let step = std::f64::consts::FRAC_PI_4;
    let mut a = origin.max(1.0e-3);
    let mut fa = j_and_prime(m, a).0;
    while zeros.len() < count {
        let b = a + step;
        let fb = j_and_prime(m, b).0;
        if fa == 0.0 {
            zeros.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            zeros.push(polish(m, a, b));
        }
        a = b;
        fa = fb;
    }
    zeros
}

fn polish(m: usize, mut a: f64, mut b: f64) -> f64 {
    let mut fa = j_and_prime(m, a).0;
    while b - a > 1.0e-6 {
        let mid = 0.5 * (a + b);
        let fm = j_and_prime(m, mid).0;
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..8 {
        let (f, d) = j_and_prime(m, x);
        let dx = f / d;
        x -= dx;
        if dx.abs() < 1.0e-16 * x {
            break;
        }
    }
    x
}

/// Root of a real function inside a sign-change bracket `[a, b]`, by
/// bisection interleaved with secant steps, to absolute tolerance `tol`.
pub fn refine_real_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        let x = if secant > a && secant < b && (secant - mid).abs() < 0.25 * (b - a) {
            secant
        } else {
            mid
        };
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if b - a < tol {
            break;
        }
    }
    Some(if fa.abs() < fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_zeros_of_j0() {
        let z = bessel_j_zeros(0, 2);
        assert!((z[0] - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((z[1] - 5.520_078_110_286_311).abs() < 1e-12);
    }

    #[test]
    fn zeros_interlace() {
        let a = bessel_j_zeros(0, 5);
        let b = bessel_j_zeros(1, 5);
        for k in 0..4 {
            assert!(a[k] < b[k] && b[k] < a[k + 1]);
        }
    }

    #[test]
    fn higher_order_zero() {
        // j_{5,1}
        let z = bessel_j_zeros(5, 1);
        assert!((z[0] - 8.771_483_815_959_954).abs() < 1e-11, "{}", z[0]);
    }

    #[test]
    fn bracket_refinement() {
        let r = refine_real_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(refine_real_root(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
