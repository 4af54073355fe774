//! Small dense complex linear algebra: determinants for the 2×2 and 4×4
//! boundary matrices, plus thin wrappers over nalgebra's LU, SVD and Schur.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Determinant by direct expansion for order ≤ 4, LU with partial pivoting
/// otherwise.
///
/// The 4×4 case uses the Laplace expansion along the first two rows, i.e. a
/// signed sum of six products of 2×2 minors.
pub fn determinant(a: &CMatrix) -> Complex64 {
    assert!(a.is_square(), "determinant of a non-square matrix");
    match a.nrows() {
        0 => Complex64::new(1.0, 0.0),
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        3 => {
            let m = |i: usize, j: usize, k: usize, l: usize| a[(i, k)] * a[(j, l)] - a[(i, l)] * a[(j, k)];
            a[(0, 0)] * m(1, 2, 1, 2) - a[(0, 1)] * m(1, 2, 0, 2) + a[(0, 2)] * m(1, 2, 0, 1)
        }
        4 => {
            let top = |k: usize, l: usize| a[(0, k)] * a[(1, l)] - a[(0, l)] * a[(1, k)];
            let bot = |k: usize, l: usize| a[(2, k)] * a[(3, l)] - a[(2, l)] * a[(3, k)];
            let s1 = top(0, 1) * bot(2, 3) + top(2, 3) * bot(0, 1);
            let s2 = top(0, 2) * bot(1, 3) + top(1, 3) * bot(0, 2);
            let s3 = top(0, 3) * bot(1, 2) + top(1, 2) * bot(0, 3);
            (s1 - s2) + s3
        }
        _ => a.clone().lu().determinant(),
    }
}

/// Solves `a x = b` by LU with partial pivoting. `None` if `a` is singular to
/// working precision.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let x = a.clone().lu().solve(b)?;
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(x)
}

/// Singular values in descending order together with the right singular
/// vector belonging to the smallest one.
pub fn smallest_right_singular(a: &CMatrix) -> (Vec<f64>, Vec<Complex64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let last = v_t.nrows() - 1;
    let x = v_t.row(last).iter().map(|c| c.conj()).collect();
    (svd.singular_values.iter().copied().collect(), x)
}

/// Eigenvalues of a square complex matrix from its Schur form.
pub fn eigenvalues(a: &CMatrix) -> Option<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(a.clone(), 1e-15, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..n).map(|i| t[(i, i)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            let x = (i * 7 + j * 3) as f64;
            c((x * 0.37).sin() + if i == j { 2.0 } else { 0.0 }, (x * 0.11).cos())
        })
    }

    #[test]
    fn direct_expansion_matches_lu() {
        for n in 1..=5 {
            let a = sample(n);
            let lu = a.clone().lu().determinant();
            let d = determinant(&a);
            assert!((d - lu).norm() < 1e-12 * lu.norm().max(1.0), "n={n}");
        }
    }

    #[test]
    fn shifted_identity() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(3.0, 0.0)]));
        assert_eq!(determinant(&a), c(3.0, 0.0));
    }

    #[test]
    fn nullspace_of_rank_one() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let (s, x) = smallest_right_singular(&a);
        assert!(s[1] < 1e-14 && s[0] > s[1]);
        let r = &a * nalgebra::DVector::from_vec(x);
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn triangular_eigenvalues() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(5.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)]);
        let mut e = eigenvalues(&a).unwrap();
        e.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((e[0] - c(-2.0, 0.0)).norm() < 1e-13 && (e[1] - c(1.0, 1.0)).norm() < 1e-13);
    }
}
