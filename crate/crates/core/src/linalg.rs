//! Dense linear-algebra helpers shared by the solver and reduction modules.

use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub fn sym(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

/// Eigenvalues and eigenvectors of a symmetric matrix, sorted descending.
pub fn sym_eigen_desc(m: &Mat) -> (DVector<f64>, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), Mat::zeros(0, 0));
    }
    let eig = sym(m).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn max_eig_sym(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym(m).symmetric_eigenvalues().max()
}

pub fn min_eig_sym(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym(m).symmetric_eigenvalues().min()
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD computed by faer, returned in nalgebra's layout.
pub fn svd(m: &Mat, compute_u: bool, compute_v: bool) -> nalgebra::linalg::SVD<f64, Dyn, Dyn> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return nalgebra::linalg::SVD {
            u: compute_u.then(|| Mat::zeros(m.nrows(), 0)),
            v_t: compute_v.then(|| Mat::zeros(0, m.ncols())),
            singular_values: DVector::zeros(0),
        };
    }
    let Ok(d) = to_faer(m).thin_svd() else {
        return nalgebra::linalg::SVD {
            u: compute_u.then(|| Mat::from_element(m.nrows(), k, f64::NAN)),
            v_t: compute_v.then(|| Mat::from_element(k, m.ncols(), f64::NAN)),
            singular_values: DVector::from_element(k, f64::NAN),
        };
    };
    let s = d.S();
    nalgebra::linalg::SVD {
        u: compute_u.then(|| from_faer(d.U())),
        v_t: compute_v.then(|| from_faer(d.V()).transpose()),
        singular_values: DVector::from_fn(k, |i, _| s[i]),
    }
}

pub fn singular_values(m: &Mat) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let mut s = svd(m, false, false).singular_values;
    s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn norm2(m: &Mat) -> f64 {
    singular_values(m).iter().cloned().fold(0.0, f64::max)
}

/// Rank with singular values thresholded at `rel_tol * sigma_max`.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Full SVD (`U` is rows x rows, `V` is cols x cols) by zero padding.
fn full_svd(m: &Mat) -> (Mat, DVector<f64>, Mat) {
    let (r, c) = m.shape();
    let d = r.max(c);
    let mut padded = Mat::zeros(d, d);
    padded.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = svd(&padded, true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    // nalgebra does not guarantee ordering
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut us = Mat::zeros(d, d);
    let mut vs = Mat::zeros(d, d);
    let mut s = DVector::zeros(d);
    for (k, &i) in idx.iter().enumerate() {
        us.set_column(k, &u.column(i));
        vs.set_column(k, &vt.row(i).transpose());
        s[k] = svd.singular_values[i];
    }
    (us.rows(0, r).into_owned(), s, vs.rows(0, c).into_owned())
}

/// Orthonormal basis of the kernel of `m`.
pub fn null_space(m: &Mat, rel_tol: f64) -> Mat {
    let c = m.ncols();
    if c == 0 {
        return Mat::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return Mat::identity(c, c);
    }
    let (_, s, v) = full_svd(m);
    let smax = s[0];
    let rank = if smax == 0.0 { 0 } else { s.iter().take(c.min(m.nrows())).filter(|&&x| x > rel_tol * smax).count() };
    v.columns(rank, c - rank).into_owned()
}

/// Orthonormal basis of the column space of `m`.
pub fn range_basis(m: &Mat, rel_tol: f64) -> Mat {
    let r = m.nrows();
    if m.ncols() == 0 || r == 0 {
        return Mat::zeros(r, 0);
    }
    let (u, s, _) = full_svd(m);
    let smax = s[0];
    if smax == 0.0 {
        return Mat::zeros(r, 0);
    }
    let rank = s.iter().take(r.min(m.ncols())).filter(|&&x| x > rel_tol * smax).count();
    u.columns(0, rank).into_owned()
}

/// Least-squares solution of `a x = b` by SVD pseudo-inverse.
pub fn lstsq(a: &Mat, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = svd(a, true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (rel_tol * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Factor `R` with `R R^T = P` for a symmetric PSD `P`, dropping eigenvalues
/// at or below `rel_tol * lambda_max`.
pub fn psd_factor(p: &Mat, rel_tol: f64) -> Mat {
    let (vals, vecs) = sym_eigen_desc(p);
    let n = p.nrows();
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    if vmax <= 0.0 {
        return Mat::zeros(n, 0);
    }
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > rel_tol * vmax).collect();
    let mut r = Mat::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        r.set_column(c, &(vecs.column(i) * vals[i].sqrt()));
    }
    r
}

/// Projects a symmetric PSD matrix onto eigen-directions above `rel_tol * lambda_max`.
pub fn psd_truncate(p: &Mat, rel_tol: f64) -> Mat {
    let r = psd_factor(p, rel_tol);
    &r * r.transpose()
}

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a general real matrix: Schur iteration with a second QR implementation as fallback.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("eigenvalues of a matrix with non-finite entries".into()));
    }
    let vals = match nalgebra::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => {
            to_faer(m).eigenvalues().map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e:?}")))?
        }
    };
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("eigenvalue computation did not converge".into()));
    }
    Ok(vals)
}

pub fn spectral_abscissa(m: &Mat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn inverse(m: &Mat) -> Result<Mat> {
    m.clone().try_inverse().ok_or_else(|| Error::Numerical("singular matrix".into()))
}

/// Symmetric matrix square root of an SPD matrix.
pub fn sqrtm_spd(p: &Mat) -> Mat {
    let (vals, vecs) = sym_eigen_desc(p);
    let d = Mat::from_diagonal(&vals.map(|v| v.max(0.0).sqrt()));
    &vecs * d * vecs.transpose()
}

/// Stacks two blocks on a common diagonal.
pub fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = Mat::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

pub fn hstack(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

pub fn vstack(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.ncols());
    let mut m = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

pub fn from_rows(rows: &[&[f64]]) -> Mat {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = from_rows(&[&[1.0, 1.0, 0.0]]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&m * &n).norm() < 1e-12);
        assert!((n.transpose() * &n - Mat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn psd_factor_drops_null_directions() {
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let p = &v * v.transpose();
        let r = psd_factor(&p, 1e-12);
        assert_eq!(r.ncols(), 1);
        assert!((&r * r.transpose() - p).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_rotation() {
        let m = from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0].im + 1.0).abs() < 1e-12 && ev[0].re.abs() < 1e-12);
    }

    #[test]
    fn wide_svd_reconstructs() {
        let m = Mat::from_fn(12, 21, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * (i as f64 - j as f64).sin());
        let d = svd(&m, true, true);
        let rec = d.u.unwrap() * Mat::from_diagonal(&d.singular_values) * d.v_t.unwrap();
        assert!((rec - &m).amax() < 1e-12);
    }
}
