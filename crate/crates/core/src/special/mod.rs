//! Complex-argument Bessel functions `J_m`, `Y_m` of integer order, their
//! derivatives, and the real zeros of `J_m`.

mod bessel;
mod zeros;
pub mod checks;

pub use bessel::{
    bessel_j, bessel_j_prime, bessel_j_with_prime, bessel_jy, bessel_y, bessel_y_prime,
    wronskian, BesselValues, MAX_IMAG, MAX_MODULUS, MAX_ORDER,
};
pub use zeros::{bessel_j_zeros, refine_real_root};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BesselError {
    #[error("argument is not finite")]
    NonFinite,
    #[error("order {0} exceeds the supported maximum")]
    OrderTooLarge(u32),
    #[error("argument {re}{im:+}i is outside the supported range")]
    OutOfRange { re: f64, im: f64 },
    #[error("result overflows at {re}{im:+}i")]
    Overflow { re: f64, im: f64 },
    #[error("domain error: {0}")]
    Domain(&'static str),
}
