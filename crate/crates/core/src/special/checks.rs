//! Identity checks for the Bessel layer: Wronskian, three-term recurrence,
//! Bessel's equation, conjugate symmetry, and agreement with a reference
//! table. Each check returns the worst observed error ratio (error divided by
//! its allowed bound), so a value `<= 1` passes.

use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::bessel::{j_sequence, jy_sequence};
use super::{bessel_jy, wronskian, BesselError};

pub const WRONSKIAN_TOL: f64 = 1e-10;
pub const RECURRENCE_TOL: f64 = 1e-10;
pub const ODE_TOL: f64 = 1e-9;
pub const CONJUGATE_TOL: f64 = 1e-13;
pub const TABLE_TOL: f64 = 1e-12;

/// Sample points `(m, z)` with `|z| <= 50`, `|Im z| <= 10`, `m <= 20`.
pub fn sample_grid(count: usize, seed: u64) -> Vec<(u32, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let re: f64 = rng.random_range(-50.0..50.0);
        let im: f64 = rng.random_range(-10.0..10.0);
        let z = Complex64::new(re, im);
        if z.norm() > 50.0 || z.norm() < 1e-3 {
            continue;
        }
        let m = rng.random_range(0..=20u32);
        out.push((m, z));
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Worst {
    pub ratio: f64,
    pub m: u32,
    pub z: Complex64,
}

impl Worst {
    fn update(&mut self, ratio: f64, m: u32, z: Complex64) {
        if ratio > self.ratio || ratio.is_nan() {
            *self = Worst { ratio, m, z };
        }
    }

    pub fn passed(&self) -> bool {
        self.ratio <= 1.0
    }
}

/// Wronskian `J_{m+1} Y_m - J_m Y_{m+1} = 2/(πz)`.
///
/// The residual is measured against `2/(πz)` and against the size of the two
/// products: off the real axis both products grow like `exp(2|Im z|)` while
/// their difference stays `O(1/|z|)`, so double-precision inputs cannot
/// resolve the identity more finely than that.
pub fn wronskian_check(points: &[(u32, Complex64)]) -> Worst {
    let mut worst = Worst::default();
    for &(m, z) in points {
        let (j, y) = jy_sequence(m as usize + 1, z);
        let k = m as usize;
        let a = j[k + 1] * y[k];
        let b = j[k] * y[k + 1];
        let w = wronskian(z);
        let scale = w.norm().max(a.norm()).max(b.norm());
        worst.update((a - b - w).norm() / (WRONSKIAN_TOL * scale), m, z);
    }
    worst
}

/// `Z_{m-1} + Z_{m+1} - (2m/z) Z_m = 0` for both kinds, `m >= 1`.
pub fn recurrence_check(points: &[(u32, Complex64)]) -> Worst {
    let mut worst = Worst::default();
    for &(m, z) in points {
        let m = m.max(1);
        let k = m as usize;
        let (j, y) = jy_sequence(k + 1, z);
        for seq in [&j, &y] {
            let t = 2.0 * f64::from(m) / z * seq[k];
            let res = seq[k - 1] + seq[k + 1] - t;
            let scale = seq[k - 1].norm().max(seq[k + 1].norm()).max(t.norm());
            worst.update(res.norm() / (RECURRENCE_TOL * scale), m, z);
        }
    }
    worst
}

/// Bessel's equation `z² Z'' + z Z' + (z² - m²) Z = 0`, with `Z''` formed by
/// differentiating `Z_m' = Z_{m-1} - (m/z) Z_m` once more, so the residual
/// involves three independently recurred orders.
pub fn ode_check(points: &[(u32, Complex64)]) -> Worst {
    let mut worst = Worst::default();
    for &(m, z) in points {
        let k = m as usize;
        let (j, y) = jy_sequence(k + 2, z);
        for seq in [&j, &y] {
            let (d1, d2) = first_second_derivative(seq, k, z);
            let mf = f64::from(m);
            let res = z * z * d2 + z * d1 + (z * z - mf * mf) * seq[k];
            let scale = (z * z * seq[k]).norm();
            worst.update(res.norm() / (ODE_TOL * scale), m, z);
        }
    }
    worst
}

fn first_second_derivative(seq: &[Complex64], k: usize, z: Complex64) -> (Complex64, Complex64) {
    let deriv = |n: usize| -> Complex64 {
        if n == 0 {
            -seq[1]
        } else {
            seq[n - 1] - (n as f64) / z * seq[n]
        }
    };
    let d1 = deriv(k);
    let d2 = if k == 0 {
        // Z_0'' = -Z_1' = -(Z_0 - Z_1 / z)
        -(seq[0] - seq[1] / z)
    } else {
        let kf = k as f64;
        deriv(k - 1) + kf / (z * z) * seq[k] - kf / z * d1
    };
    (d1, d2)
}

/// `J_m(conj z) = conj J_m(z)`.
pub fn conjugate_check(points: &[(u32, Complex64)]) -> Worst {
    let mut worst = Worst::default();
    for &(m, z) in points {
        let a = j_sequence(m as usize, z)[m as usize];
        let b = j_sequence(m as usize, z.conj())[m as usize];
        let scale = a.norm().max(f64::MIN_POSITIVE);
        worst.update((b - a.conj()).norm() / (CONJUGATE_TOL * scale), m, z);
    }
    worst
}

/// One line of the real-axis reference table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub m: u32,
    pub x: f64,
    pub j: f64,
    pub y: f64,
    pub jp: f64,
    pub yp: f64,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: expected 6 fields `m z J Y Jp Yp`, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: cannot parse `{token}`")]
    Parse { line: usize, token: String },
    #[error("reference table is empty")]
    Empty,
}

/// Parses the `m z J Y Jp Yp` table format. Blank lines and `#` comments are
/// skipped.
pub fn parse_table(text: &str) -> Result<Vec<TableRow>, TableError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(TableError::FieldCount { line: idx + 1, found: fields.len() });
        }
        let num = |s: &str| -> Result<f64, TableError> {
            f64::from_str(s).map_err(|_| TableError::Parse { line: idx + 1, token: s.to_string() })
        };
        let m = u32::from_str(fields[0])
            .map_err(|_| TableError::Parse { line: idx + 1, token: fields[0].to_string() })?;
        rows.push(TableRow {
            m,
            x: num(fields[1])?,
            j: num(fields[2])?,
            y: num(fields[3])?,
            jp: num(fields[4])?,
            yp: num(fields[5])?,
        });
    }
    if rows.is_empty() {
        return Err(TableError::Empty);
    }
    Ok(rows)
}

/// Worst relative deviation from the reference table, divided by `TABLE_TOL`.
pub fn table_check(rows: &[TableRow]) -> Result<Worst, BesselError> {
    let mut worst = Worst::default();
    for row in rows {
        let z = Complex64::new(row.x, 0.0);
        let v = bessel_jy(row.m, z)?;
        for (got, want) in [(v.j, row.j), (v.y, row.y), (v.jp, row.jp), (v.yp, row.yp)] {
            let rel = (got - want).norm() / want.abs();
            worst.update(rel / TABLE_TOL, row.m, z);
        }
    }
    Ok(worst)
}
