//! Interior transmission eigenvalues of the disk and annulus as parametric
//! nonlinear eigenproblems: Bessel functions, a contour-integral eigensolver,
//! an adaptive trajectory tracker and the indicator-based bifurcation
//! analysis.

pub mod analysis;
pub mod beyn;
pub mod linalg;
pub mod nep;
pub mod selftest;
pub mod special;
pub mod tracker;
