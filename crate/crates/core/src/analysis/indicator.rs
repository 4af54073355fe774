//! Energy-difference indicator `I(p) = ∫_D |v|² − n|w|²` for radial
//! transmission eigenfunctions, in closed form, through Bessel antiderivatives,
//! and by Gauss–Legendre quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::gauss_legendre;
use super::AnalysisError;
use crate::nep::{angular_weight, Eigenpair, Geometry, NepProblem};
use crate::special::{bessel_jy, BesselValues};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselKind {
    J,
    Y,
}

impl BesselKind {
    fn pick(self, v: &BesselValues) -> (Complex64, Complex64) {
        match self {
            BesselKind::J => (v.j, v.jp),
            BesselKind::Y => (v.y, v.yp),
        }
    }
}

/// `∫_a^b x |c Z_m(x) + d T_m(x)|² dx` from the antiderivative
/// `x²/2 (|F'|² + (1 − m²/x²)|F|²)`, valid for complex `c`, `d` because the
/// real and imaginary parts of `F` each solve Bessel's equation.
pub fn bessel_product_integral(
    z: BesselKind,
    t: BesselKind,
    m: u32,
    a: f64,
    b: f64,
    c: Complex64,
    d: Complex64,
) -> Result<f64, AnalysisError> {
    let uses_y = (z == BesselKind::Y && c != Complex64::new(0.0, 0.0))
        || (t == BesselKind::Y && d != Complex64::new(0.0, 0.0));
    if !(a >= 0.0 && b > a && b.is_finite()) {
        return Err(AnalysisError::Domain(format!("need 0 <= a < b, got [{a}, {b}]")));
    }
    if a == 0.0 && uses_y {
        return Err(AnalysisError::Domain("Y_m is singular at x = 0".into()));
    }
    let prim = |x: f64| -> Result<f64, AnalysisError> {
        if x == 0.0 {
            // F(0) is nonzero only for m = 0, where the bracket still vanishes.
            return Ok(0.0);
        }
        let v = bessel_jy(m, Complex64::new(x, 0.0))?;
        let (z0, z1) = z.pick(&v);
        let (t0, t1) = t.pick(&v);
        let f = c * z0 + d * t0;
        let fp = c * z1 + d * t1;
        let mf = f64::from(m);
        Ok(0.5 * x * x * (fp.norm_sqr() + (1.0 - mf * mf / (x * x)) * f.norm_sqr()))
    };
    Ok(prim(b)? - prim(a)?)
}

/// `∫_lo^hi ρ |c J_m(kρ) + d Y_m(kρ)|² dρ` for complex `k`.
///
/// Off the real axis this is the Lommel integral of `f(kρ) g(k̄ρ)` with
/// `g = c̄ J_m + d̄ Y_m`, i.e. `ρ (k̄ f(kρ) g'(k̄ρ) − k f'(kρ) g(k̄ρ)) / (k² − k̄²)`.
pub fn radial_norm(m: u32, c: Complex64, d: Complex64, k: Complex64, lo: f64, hi: f64) -> Result<f64, AnalysisError> {
    if k.im.abs() <= LOMMEL_MIN_IMAG * k.norm() {
        let kr = k.re;
        if !(kr > 0.0) {
            return Err(AnalysisError::Domain(format!("real wavenumber must be positive, got {kr}")));
        }
        let (a, b) = (kr * lo, kr * hi);
        let raw = bessel_product_integral(BesselKind::J, BesselKind::Y, m, a, b, c, d)?;
        return Ok(raw / (kr * kr));
    }
    let kb = k.conj();
    let term = |rho: f64| -> Result<Complex64, AnalysisError> {
        if rho == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let v = bessel_jy(m, k * rho)?;
        let w = bessel_jy(m, kb * rho)?;
        let f = c * v.j + d * v.y;
        let fp = c * v.jp + d * v.yp;
        let g = c.conj() * w.j + d.conj() * w.y;
        let gp = c.conj() * w.jp + d.conj() * w.yp;
        Ok(rho * (kb * f * gp - k * fp * g))
    };
    let den = k * k - kb * kb;
    Ok(((term(hi)? - term(lo)?) / den).re)
}

/// Below this relative imaginary part the equal-argument antiderivative is
/// used; the Lommel quotient loses about `ε |κ| / |Im κ|` there.
pub const LOMMEL_MIN_IMAG: f64 = 1e-9;

/// Radial pieces of an eigenfunction pair: `v = αJ_m(κρ) + βY_m(κρ)` and
/// `w = γJ_m(qκρ) + δY_m(qκρ)` on `r < ρ < 1` (`r = 0`, `β = δ = 0` for the
/// disk).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPair {
    pub m: u32,
    pub r: f64,
    pub kappa: Complex64,
    pub q: f64,
    pub n: f64,
    pub dn: f64,
    pub v: (Complex64, Complex64),
    pub w: (Complex64, Complex64),
}

impl RadialPair {
    pub fn new(nep: &NepProblem, pair: &Eigenpair) -> Result<Self, AnalysisError> {
        let map = nep.index_map();
        let coeffs = nep.eigenfunction_coefficients(&pair.coeffs);
        let zero = Complex64::new(0.0, 0.0);
        let (m, r, v, w) = match nep.geometry() {
            Geometry::Disk { m } => (m, 0.0, (coeffs[0], zero), (coeffs[1], zero)),
            Geometry::Annulus { m, r } => (m, r, (coeffs[0], coeffs[1]), (coeffs[2], coeffs[3])),
            Geometry::Toy(_) => return Err(AnalysisError::NotTransmission),
        };
        let p = pair.p;
        Ok(RadialPair {
            m,
            r,
            kappa: pair.kappa,
            q: map.scale(p),
            n: map.index(p),
            dn: map.index_derivative(p),
            v,
            w,
        })
    }

    pub fn weight(&self) -> f64 {
        angular_weight(self.m) * PI
    }

    fn v_at(&self, rho: f64) -> Result<Complex64, AnalysisError> {
        let b = bessel_jy(self.m, self.kappa * rho)?;
        Ok(self.v.0 * b.j + if self.r > 0.0 { self.v.1 * b.y } else { Complex64::new(0.0, 0.0) })
    }

    fn w_at(&self, rho: f64) -> Result<Complex64, AnalysisError> {
        let b = bessel_jy(self.m, self.q * self.kappa * rho)?;
        Ok(self.w.0 * b.j + if self.r > 0.0 { self.w.1 * b.y } else { Complex64::new(0.0, 0.0) })
    }

    /// `∫_D |v|²` and `∫_D |w|²`.
    pub fn norms(&self) -> Result<(f64, f64), AnalysisError> {
        let nv = radial_norm(self.m, self.v.0, self.v.1, self.kappa, self.r, 1.0)?;
        let nw = radial_norm(self.m, self.w.0, self.w.1, self.q * self.kappa, self.r, 1.0)?;
        Ok((self.weight() * nv, self.weight() * nw))
    }

    /// `Ī = |v(1)|² − r²|v(r)|²`, which equals `2I / (a_m π (1 − n))` when the
    /// transmission conditions hold and κ is real.
    pub fn boundary_indicator(&self) -> Result<f64, AnalysisError> {
        let outer = self.v_at(1.0)?.norm_sqr();
        let inner = if self.r > 0.0 { self.r * self.r * self.v_at(self.r)?.norm_sqr() } else { 0.0 };
        Ok(outer - inner)
    }

    /// `∫_D |v|² − n|w|²` by composite Gauss–Legendre quadrature.
    pub fn quadrature_indicator(&self) -> Result<f64, AnalysisError> {
        let big = (self.q * self.kappa).norm().max(self.kappa.norm());
        let panels = ((big * (1.0 - self.r)).ceil() as usize).max(8);
        let (x, wt) = gauss_legendre(QUAD_ORDER);
        let h = (1.0 - self.r) / panels as f64;
        let mut sum = 0.0;
        for k in 0..panels {
            let a = self.r + k as f64 * h;
            for (xi, wi) in x.iter().zip(&wt) {
                let rho = a + 0.5 * h * (xi + 1.0);
                let f = self.v_at(rho)?.norm_sqr() - self.n * self.w_at(rho)?.norm_sqr();
                sum += 0.5 * h * wi * rho * f;
            }
        }
        Ok(self.weight() * sum)
    }
}

const QUAD_ORDER: usize = 24;

/// Indicator values at one eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValue {
    pub p: f64,
    pub kappa_re: f64,
    pub kappa_im: f64,
    /// Closed form for real κ, volume form otherwise.
    pub i: f64,
    pub i_bar: f64,
    /// `∫|v|² − n∫|w|²` from the Bessel antiderivatives.
    pub i_volume: f64,
    /// `∫|v|² + n∫|w|²`.
    pub scale: f64,
    pub real: bool,
}

/// Indicator at one eigenpair. `tol_real` decides which form is reported.
pub fn indicator(nep: &NepProblem, pair: &Eigenpair, tol_real: f64) -> Result<IndicatorValue, AnalysisError> {
    let rp = RadialPair::new(nep, pair)?;
    let one_minus_n = 1.0 - rp.n;
    if one_minus_n == 0.0 {
        return Err(AnalysisError::SingularIndex);
    }
    let (nv, nw) = rp.norms()?;
    let i_volume = nv - rp.n * nw;
    let scale = nv + rp.n * nw;
    let real = pair.kappa.im.abs() <= tol_real;
    let half = 0.5 * rp.weight() * one_minus_n;
    let (i, i_bar) = if real {
        let b = rp.boundary_indicator()?;
        (half * b, b)
    } else {
        (i_volume, i_volume / half)
    };
    Ok(IndicatorValue { p: pair.p, kappa_re: pair.kappa.re, kappa_im: pair.kappa.im, i, i_bar, i_volume, scale, real })
}

/// `dκ/dp` at a real eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slope {
    Finite(f64),
    /// `I` vanishes to working precision; the sign is that of the numerator.
    Unbounded { sign: f64 },
}

impl Slope {
    pub fn value(self) -> Option<f64> {
        match self {
            Slope::Finite(v) => Some(v),
            Slope::Unbounded { .. } => None,
        }
    }
}

/// Relative size of `I` below which [`eigenvalue_derivative`] reports an
/// unbounded slope.
pub const UNBOUNDED_BELOW: f64 = 1e-12;

/// `κ' = κ n'(p) ∫_D |w|² / (2 I(p))`.
pub fn eigenvalue_derivative(nep: &NepProblem, pair: &Eigenpair) -> Result<Slope, AnalysisError> {
    let rp = RadialPair::new(nep, pair)?;
    let (nv, nw) = rp.norms()?;
    let scale = nv + rp.n * nw;
    let one_minus_n = 1.0 - rp.n;
    if one_minus_n == 0.0 {
        return Err(AnalysisError::SingularIndex);
    }
    let i = 0.5 * rp.weight() * one_minus_n * rp.boundary_indicator()?;
    let num = pair.kappa.re * rp.dn * nw;
    if i.abs() < UNBOUNDED_BELOW * scale {
        return Ok(Slope::Unbounded { sign: num.signum() * if i < 0.0 { -1.0 } else { 1.0 } });
    }
    Ok(Slope::Finite(num / (2.0 * i)))
}
