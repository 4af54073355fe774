//! Integer-order Bessel functions of the first and second kind for complex
//! arguments.
//!
//! Two evaluation regimes are used:
//!
//! * `|z| <= MILLER_RADIUS`: Miller's backward recurrence for `J_0 .. J_N`,
//!   normalised with the generating-function identity
//!   `exp(∓iz) = J_0 + 2 Σ (∓i)^k J_k` (the sign is chosen so the left-hand
//!   side is the growing exponential, which avoids cancellation off the real
//!   axis). `Y_0` and `Y_1` follow from the Neumann series in the same `J_k`.
//! * `|z| > MILLER_RADIUS`: Hankel asymptotic expansions for orders 0 and 1,
//!   then forward recurrence for `J`. In this regime every supported order
//!   satisfies `m < |z|`, where forward recurrence of `J` is benign.
//!
//! Higher orders of `Y` come from forward recurrence near the real axis and
//! from the Wronskian `J_{k+1} Y_k - J_k Y_{k+1} = 2/(πz)` elsewhere.
//!
//! Arguments with negative real part are reflected into the right half plane
//! (`J_m(-z) = (-1)^m J_m(z)`, and the principal-branch continuation formula
//! for `Y_m`). On the negative real axis `Y_m` is taken from the upper side of
//! the branch cut.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use super::BesselError;

/// Largest order accepted by the public API.
pub const MAX_ORDER: u32 = 64;

/// Largest modulus accepted by the public API.
pub const MAX_MODULUS: f64 = 1.0e4;

/// `|Im z|` beyond which `J` and `Y` overflow double precision.
pub const MAX_IMAG: f64 = 700.0;

const MILLER_RADIUS: f64 = 25.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const WRONSKIAN_STEP_IMAG: f64 = 0.5;
const RESCALE_ABOVE: f64 = 1.0e100;

/// `J_m, Y_m` and their first derivatives at a single argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselValues {
    pub j: Complex64,
    pub y: Complex64,
    pub jp: Complex64,
    pub yp: Complex64,
}

fn check_argument(m: u32, z: Complex64) -> Result<(), BesselError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(BesselError::NonFinite);
    }
    if m > MAX_ORDER {
        return Err(BesselError::OrderTooLarge(m));
    }
    if z.norm() > MAX_MODULUS || z.im.abs() > MAX_IMAG {
        return Err(BesselError::OutOfRange { re: z.re, im: z.im });
    }
    Ok(())
}

fn finite_or_overflow(v: Complex64, z: Complex64) -> Result<Complex64, BesselError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(BesselError::Overflow { re: z.re, im: z.im })
    }
}

/// `J_m(z)`.
pub fn bessel_j(m: u32, z: Complex64) -> Result<Complex64, BesselError> {
    check_argument(m, z)?;
    let j = j_sequence(m as usize, z);
    finite_or_overflow(j[m as usize], z)
}

/// `Y_m(z)` on the principal branch. Errors at `z = 0`.
pub fn bessel_y(m: u32, z: Complex64) -> Result<Complex64, BesselError> {
    check_argument(m, z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(BesselError::Domain("Y_m is singular at z = 0"));
    }
    let (_, y) = jy_sequence(m as usize, z);
    finite_or_overflow(y[m as usize], z)
}

/// `J_m'(z)`, from `J_m' = (J_{m-1} - J_{m+1}) / 2` (and `J_0' = -J_1`).
pub fn bessel_j_prime(m: u32, z: Complex64) -> Result<Complex64, BesselError> {
    check_argument(m, z)?;
    let j = j_sequence(m as usize + 1, z);
    finite_or_overflow(derivative(&j, m as usize), z)
}

/// `Y_m'(z)`. Errors at `z = 0`.
pub fn bessel_y_prime(m: u32, z: Complex64) -> Result<Complex64, BesselError> {
    check_argument(m, z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(BesselError::Domain("Y_m' is singular at z = 0"));
    }
    let (_, y) = jy_sequence(m as usize + 1, z);
    finite_or_overflow(derivative(&y, m as usize), z)
}

/// All of `J_m, Y_m, J_m', Y_m'` from one recurrence pass.
pub fn bessel_jy(m: u32, z: Complex64) -> Result<BesselValues, BesselError> {
    check_argument(m, z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(BesselError::Domain("Y_m is singular at z = 0"));
    }
    let k = m as usize;
    let (j, y) = jy_sequence(k + 1, z);
    let values = BesselValues {
        j: finite_or_overflow(j[k], z)?,
        y: finite_or_overflow(y[k], z)?,
        jp: finite_or_overflow(derivative(&j, k), z)?,
        yp: finite_or_overflow(derivative(&y, k), z)?,
    };
    Ok(values)
}

/// `J_m` and `J_m'` without touching the second kind (valid at `z = 0`).
pub fn bessel_j_with_prime(m: u32, z: Complex64) -> Result<(Complex64, Complex64), BesselError> {
    check_argument(m, z)?;
    let k = m as usize;
    let j = j_sequence(k + 1, z);
    Ok((finite_or_overflow(j[k], z)?, finite_or_overflow(derivative(&j, k), z)?))
}

fn derivative(seq: &[Complex64], m: usize) -> Complex64 {
    if m == 0 {
        -seq[1]
    } else {
        (seq[m - 1] - seq[m + 1]) * 0.5
    }
}

/// `J_0 .. J_n` at `z`.
pub(crate) fn j_sequence(n: usize, z: Complex64) -> Vec<Complex64> {
    if z.re < 0.0 {
        let mut j = j_sequence(n, -z);
        for (k, v) in j.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
        return j;
    }
    if z.norm() <= MILLER_RADIUS {
        miller(n, z).0
    } else {
        let (j0, j1, _, _) = hankel_01(z);
        forward(j0, j1, n, z)
    }
}

/// `(J_0 .. J_n, Y_0 .. Y_n)` at `z != 0`.
pub(crate) fn jy_sequence(n: usize, z: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    if z.re < 0.0 {
        // z = w e^{±iπ} with Re w > 0.
        let w = -z;
        let (jw, yw) = jy_sequence(n, w);
        let sign = if z.im >= 0.0 { 1.0 } else { -1.0 };
        let i2 = Complex64::new(0.0, 2.0 * sign);
        let mut j = Vec::with_capacity(n + 1);
        let mut y = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
            j.push(jw[k] * parity);
            y.push((yw[k] + i2 * jw[k]) * parity);
        }
        return (j, y);
    }
    let (j, y0, y1) = if z.norm() <= MILLER_RADIUS {
        let (j, y0, y1) = miller(n.max(1), z);
        (j, y0, y1)
    } else {
        let (j0, j1, y0, y1) = hankel_01(z);
        (forward(j0, j1, n.max(1), z), y0, y1)
    };
    let mut y = if z.im.abs() >= WRONSKIAN_STEP_IMAG {
        wronskian_steps(&j, y0, y1, n.max(1), z)
    } else {
        forward(y0, y1, n.max(1), z)
    };
    let mut j = j;
    j.truncate(n + 1);
    y.truncate(n + 1);
    (j, y)
}

/// `Y_{k+1} = (J_{k+1} Y_k - 2/(πz)) / J_k`. Off the real axis `J_k` has no
/// zeros, and this first-order recurrence does not amplify the recessive
/// Hankel component the way the three-term recurrence does.
fn wronskian_steps(j: &[Complex64], y0: Complex64, y1: Complex64, n: usize, z: Complex64) -> Vec<Complex64> {
    let w = wronskian(z);
    let mut out = Vec::with_capacity(n + 1);
    out.push(y0);
    if n >= 1 {
        out.push(y1);
    }
    for k in 1..n {
        let next = smith_div(j[k + 1] * out[k] - w, j[k]);
        out.push(next);
    }
    out
}

fn forward(f0: Complex64, f1: Complex64, n: usize, z: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(f0);
    if n >= 1 {
        out.push(f1);
    }
    let inv = 2.0 / z;
    for k in 1..n {
        let next = inv * (k as f64) * out[k] - out[k - 1];
        out.push(next);
    }
    out
}

/// Miller backward recurrence. Returns `J_0 ..= J_n` and, for `z != 0`, the
/// Neumann-series values of `Y_0` and `Y_1` (NaN otherwise).
fn miller(n: usize, z: Complex64) -> (Vec<Complex64>, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let modulus = z.norm();
    if modulus == 0.0 {
        let mut j = vec![zero; n + 1];
        j[0] = Complex64::new(1.0, 0.0);
        let nan = Complex64::new(f64::NAN, f64::NAN);
        return (j, nan, nan);
    }

    let mut start = n.max(modulus.ceil() as usize) + 40 + (6.0 * modulus.cbrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let inv = 2.0 / z;
    let mut f = vec![zero; start + 2];
    f[start] = Complex64::new(1.0e-30, 0.0);
    for k in (1..=start).rev() {
        let prev = inv * (k as f64) * f[k] - f[k + 1];
        f[k - 1] = prev;
        if prev.norm() > RESCALE_ABOVE {
            for v in f[k - 1..].iter_mut() {
                *v *= 1.0 / RESCALE_ABOVE;
            }
        }
    }

    // exp(-iz) for Im z >= 0, exp(iz) below; both have modulus >= 1.
    let (unit, target) = if z.im >= 0.0 {
        (Complex64::new(0.0, -1.0), (Complex64::new(0.0, -1.0) * z).exp())
    } else {
        (Complex64::new(0.0, 1.0), (Complex64::new(0.0, 1.0) * z).exp())
    };
    let mut sum = f[0];
    let mut power = Complex64::new(1.0, 0.0);
    for v in f.iter().take(start + 1).skip(1) {
        power *= unit;
        sum += 2.0 * power * v;
    }
    let scale = smith_div(target, sum);

    // Neumann series in the unnormalised values; scaled afterwards.
    let mut s0 = zero;
    let mut s1 = zero;
    let mut k = 1usize;
    while 2 * k + 1 <= start {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s0 += f[2 * k] * (sign / kf);
        s1 += f[2 * k + 1] * (sign * (2.0 * kf + 1.0) / (kf * (kf + 1.0)));
        k += 1;
    }

    let j: Vec<Complex64> = f.iter().take(n + 1).map(|v| v * scale).collect();
    let j0 = f[0] * scale;
    let j1 = f[1] * scale;
    let log_term = (z * 0.5).ln() + EULER_GAMMA;
    let y0 = FRAC_2_PI * (log_term * j0 - 2.0 * s0 * scale);
    let y1 = FRAC_2_PI * (-j0 / z + (log_term - 1.0) * j1 - s1 * scale);
    (j, y0, y1)
}

/// `a / b` without squaring `|b|`.
pub(crate) fn smith_div(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let d = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / d, (a.im - a.re * r) / d)
    } else {
        let r = b.re / b.im;
        let d = b.re * r + b.im;
        Complex64::new((a.re * r + a.im) / d, (a.im * r - a.re) / d)
    }
}

/// Hankel asymptotic expansion for orders 0 and 1, valid for large `|z|` with
/// `Re z >= 0`. Returns `(J_0, J_1, Y_0, Y_1)`.
fn hankel_01(z: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let (p0, q0) = hankel_pq(0, z);
    let (p1, q1) = hankel_pq(1, z);
    let amp = (Complex64::new(FRAC_2_PI, 0.0) / z).sqrt();
    let chi0 = z - FRAC_PI_4;
    let chi1 = z - FRAC_PI_2 - FRAC_PI_4;
    let (c0, s0) = (chi0.cos(), chi0.sin());
    let (c1, s1) = (chi1.cos(), chi1.sin());
    let j0 = amp * (p0 * c0 - q0 * s0);
    let y0 = amp * (p0 * s0 + q0 * c0);
    let j1 = amp * (p1 * c1 - q1 * s1);
    let y1 = amp * (p1 * s1 + q1 * c1);
    (j0, j1, y0, y1)
}

/// `P(ν, z)` and `Q(ν, z)` of the Hankel expansion, summed until the terms
/// stop decreasing or fall below double precision.
fn hankel_pq(order: u32, z: Complex64) -> (Complex64, Complex64) {
    let mu = 4.0 * f64::from(order * order);
    let inv8z = 1.0 / (8.0 * z);
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    // a_k(ν) / z^k, built incrementally.
    let mut term = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) * inv8z / (k as f64);
        let size = term.norm();
        if size > last {
            break;
        }
        last = size;
        // even k contributes to P with sign (-1)^{k/2}, odd k to Q with
        // sign (-1)^{(k-1)/2}.
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if size < 1.0e-17 {
            break;
        }
    }
    (p, q)
}

/// `2 / (π z)`, the Wronskian `J_{m+1} Y_m - J_m Y_{m+1}`.
pub fn wronskian(z: Complex64) -> Complex64 {
    Complex64::new(2.0 / PI, 0.0) / z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(bessel_j(1, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(bessel_j_prime(0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!(bessel_y(0, c(0.0, 0.0)).is_err());
        assert!(bessel_y_prime(3, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn first_zero_of_j0() {
        let v = bessel_j(0, c(2.404_825_557_695_773, 0.0)).unwrap();
        assert!(v.norm() < 1e-12, "{v}");
        let d = bessel_j_prime(0, c(2.404_825_557_695_773, 0.0)).unwrap();
        assert!((d.re + 0.519_147_497_289_466_7).abs() < 1e-12, "{d}");
    }

    #[test]
    fn first_zero_of_y0() {
        let v = bessel_y(0, c(0.893_576_966_279_167_5, 0.0)).unwrap();
        assert!(v.norm() < 1e-10, "{v}");
    }

    #[test]
    fn small_argument_y1() {
        let z = 1.0e-3;
        let v = bessel_y(1, c(z, 0.0)).unwrap();
        let lead = -2.0 / (PI * z);
        assert!(v.re < 0.0);
        assert!(((v.re - lead) / lead).abs() < 1e-5);
    }

    #[test]
    fn wronskian_off_axis() {
        let z = c(1.0, 0.5);
        let w = bessel_j(1, z).unwrap() * bessel_y(0, z).unwrap()
            - bessel_j(0, z).unwrap() * bessel_y(1, z).unwrap();
        assert!((w - wronskian(z)).norm() < 1e-13);
    }

    #[test]
    fn regimes_agree_at_the_switch() {
        for &(re, im) in &[(24.999, 0.3), (17.0, 17.6), (0.5, 24.99)] {
            let z = c(re, im);
            let (jm, y0m, y1m) = miller(3, z);
            let (j0h, j1h, y0h, y1h) = hankel_01(z);
            let scale = jm[0].norm() + y0m.norm();
            assert!((jm[0] - j0h).norm() < 1e-13 * scale, "{z}");
            assert!((jm[1] - j1h).norm() < 1e-13 * scale, "{z}");
            assert!((y0m - y0h).norm() < 1e-13 * scale, "{z}");
            assert!((y1m - y1h).norm() < 1e-13 * scale, "{z}");
        }
    }

    #[test]
    fn reflection_in_left_half_plane() {
        let z = c(-3.0, 0.7);
        let j = bessel_j(2, z).unwrap();
        assert!((j - bessel_j(2, -z).unwrap()).norm() < 1e-15);
        // Wronskian is branch independent.
        let w = bessel_j(3, z).unwrap() * bessel_y(2, z).unwrap()
            - bessel_j(2, z).unwrap() * bessel_y(3, z).unwrap();
        assert!((w - wronskian(z)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(bessel_j(0, c(f64::NAN, 0.0)), Err(BesselError::NonFinite)));
        assert!(matches!(bessel_j(0, c(2.0e4, 0.0)), Err(BesselError::OutOfRange { .. })));
        assert!(matches!(bessel_j(65, c(1.0, 0.0)), Err(BesselError::OrderTooLarge(65))));
    }
}
