//! Turning the intermediate reduced model into a genuine reduced network.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lti::{self, StateSpace};
use crate::model::{self, AgentModel, LaplacianMatrix};
use crate::reduce::IntermediateReduced;

/// Largest tolerated condition number of an eigenvector matrix.
pub const MAX_EIGVEC_COND: f64 = 1e8;
/// Eigenvalues closer than this (relative to the largest) share an eigenspace.
pub const EIG_CLUSTER_TOL: f64 = 1e-8;

/// `λ_1 >= ... >= λ_{n-1} > λ_n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTarget {
    lambdas: Vec<f64>,
}

impl SpectrumTarget {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        if n < 2 {
            return Err(Error::InvalidSpectrum("at least two eigenvalues are required".into()));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidSpectrum("eigenvalues must be finite".into()));
        }
        if lambdas.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpectrum("eigenvalues must be sorted in descending order".into()));
        }
        if lambdas[n - 1] != 0.0 {
            return Err(Error::InvalidSpectrum("the last eigenvalue must be exactly zero".into()));
        }
        if !(lambdas[n - 2] > 0.0) {
            return Err(Error::InvalidSpectrum(
                "exactly one eigenvalue may be zero; the others must be positive".into(),
            ));
        }
        Ok(Self { lambdas })
    }

    /// Sorts descending before validating.
    pub fn from_unsorted(mut lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.iter().any(|l| l.is_nan()) {
            return Err(Error::InvalidSpectrum("NaN eigenvalue".into()));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Self::new(lambdas)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Coefficients `a_1..a_{n-1}` of the complete-graph construction.
pub fn weight_coefficients(target: &SpectrumTarget) -> Vec<f64> {
    let lam = target.lambdas();
    let n = lam.len();
    let mut a = Vec::with_capacity(n - 1);
    let mut sum = 0.0;
    for l in 1..n {
        // a_l = (λ_{n-l} - S_{l-1}) / (n - l + 1), λ 1-based
        let al = (lam[n - l - 1] - sum) / (n - l + 1) as f64;
        a.push(al);
        sum += al;
    }
    a
}

/// Complete-graph Laplacian with the prescribed spectrum.
///
/// With 1-based nodes, `w_{i,j} = a_{n-j}` for `i < j < n` and `w_{i,n} = a_{n-i}`.
pub fn laplacian_from_spectrum(target: &SpectrumTarget) -> Result<LaplacianMatrix> {
    let n = target.len();
    let a = weight_coefficients(target);
    if let Some((l, v)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Numerical(format!("weight coefficient a_{} = {v:e} is not positive", l + 1)));
    }
    let coef = |l: usize| a[l - 1];
    let mut m = Mat::zeros(n, n);
    for i in 1..n {
        for j in i + 1..=n {
            let w = if j < n { coef(n - j) } else { coef(n - i) };
            m[(i - 1, j - 1)] = -w;
            m[(j - 1, i - 1)] = -w;
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| -m[(i, j)]).sum();
        m[(i, i)] = s;
    }
    LaplacianMatrix::new(m)
}

/// Real eigenvalues (descending, exact zero last) and unit eigenvectors of a matrix with one zero eigenvalue.
pub fn real_eigendecomposition(n_mat: &Mat) -> Result<(Vec<f64>, Mat)> {
    let k = n_mat.nrows();
    if !n_mat.is_square() || k == 0 {
        return Err(Error::Dimension("matrix must be square and nonempty".into()));
    }
    let ev = linalg::eigenvalues(n_mat)?;
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(linalg::norm2(n_mat)).max(f64::MIN_POSITIVE);
    if let Some(z) = ev.iter().find(|z| z.im.abs() > EIG_CLUSTER_TOL * scale) {
        return Err(Error::NotDiagonalizable(format!("complex eigenvalue {z}")));
    }
    let mut vals: Vec<f64> = ev.iter().map(|z| z.re).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    if vals[k - 1].abs() > EIG_CLUSTER_TOL * scale {
        return Err(Error::NotDiagonalizable(format!("no zero eigenvalue (smallest {:e})", vals[k - 1])));
    }
    if k >= 2 && !(vals[k - 2] > EIG_CLUSTER_TOL * scale) {
        return Err(Error::NotDiagonalizable("zero eigenvalue is not simple or a negative eigenvalue exists".into()));
    }
    vals[k - 1] = 0.0;

    // eigenspaces per cluster from the smallest right singular vectors of N - μI
    let mut vecs = Mat::zeros(k, k);
    let trailing_zero = n_mat.row(k - 1).amax() == 0.0 && n_mat.column(k - 1).amax() == 0.0;
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && vals[end - 1] - vals[end] <= EIG_CLUSTER_TOL * scale {
            end += 1;
        }
        let size = end - start;
        let mu = vals[start..end].iter().sum::<f64>() / size as f64;
        if end == k && size == 1 && trailing_zero {
            vecs[(k - 1, k - 1)] = 1.0;
        } else {
            let shifted = n_mat - Mat::identity(k, k) * mu;
            let svd = linalg::svd(&shifted, false, true);
            let vt = svd.v_t.expect("requested");
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
            let worst = svd.singular_values[order[size - 1]];
            if worst > 1e-6 * scale {
                return Err(Error::NotDiagonalizable(format!(
                    "eigenvalue {mu:e} of multiplicity {size} has a deficient eigenspace (residual {worst:.3e})"
                )));
            }
            for (c, &i) in order.iter().take(size).enumerate() {
                vecs.set_column(start + c, &vt.row(i).transpose());
            }
        }
        start = end;
    }
    for j in 0..k {
        let mut col = vecs.column_mut(j);
        let nrm = col.norm();
        col /= nrm;
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
    }
    let sv = linalg::singular_values(&vecs);
    let cond = sv[0] / sv[k - 1];
    if !(cond <= MAX_EIGVEC_COND) {
        return Err(Error::NotDiagonalizable(format!("eigenvector matrix condition number {cond:.3e}")));
    }
    Ok((vals, vecs))
}

/// `(L̂, T_n)` with `L̂ = T_n^{-1} 𝒩 T_n` a Laplacian sharing the spectrum of `𝒩`.
pub fn similarity_transform(n_mat: &Mat) -> Result<(LaplacianMatrix, Mat)> {
    let k = n_mat.nrows();
    if k == 1 {
        if n_mat[(0, 0)].abs() > 0.0 {
            return Err(Error::NotDiagonalizable("1x1 matrix must be zero".into()));
        }
        return Ok((LaplacianMatrix::new(Mat::zeros(1, 1))?, Mat::identity(1, 1)));
    }
    let (vals, ta) = real_eigendecomposition(n_mat)?;
    let l_hat = laplacian_from_spectrum(&SpectrumTarget::new(vals)?)?;
    let (_, mut tb) = linalg::sym_eigen_desc(l_hat.matrix());
    let ones = linalg::ones(k) / (k as f64).sqrt();
    tb.set_column(k - 1, &ones);
    Ok((l_hat, ta * tb.transpose()))
}

/// Reduced network `(L̂, F̂, Ĥ)` with the reduced agent.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedReduction {
    pub l_hat: LaplacianMatrix,
    pub f_hat: Mat,
    pub h_hat: Mat,
    pub t_n: Mat,
    pub agent_hat: AgentModel,
    /// `‖T_n L̂ - 𝒩 T_n‖_F / ‖𝒩‖_F`
    pub similarity_residual: f64,
}

impl RealizedReduction {
    pub fn nodes(&self) -> usize {
        self.l_hat.nodes()
    }

    pub fn state_space(&self) -> StateSpace {
        model::network_state_space(self.l_hat.matrix(), &self.f_hat, &self.h_hat, &self.agent_hat)
    }
}

pub fn realize(inter: &IntermediateReduced) -> Result<RealizedReduction> {
    let (l_hat, t_n) = similarity_transform(&inter.n_mat)?;
    let t_inv = linalg::inverse(&t_n)?;
    let nn = inter.n_mat.norm().max(f64::MIN_POSITIVE);
    let similarity_residual = (&t_n * l_hat.matrix() - &inter.n_mat * &t_n).norm() / nn;
    if similarity_residual > 1e-8 {
        return Err(Error::Numerical(format!("similarity residual {similarity_residual:.3e}")));
    }
    let red = RealizedReduction {
        f_hat: &t_inv * &inter.f_cal,
        h_hat: &inter.h_cal * &t_n,
        l_hat,
        t_n,
        agent_hat: inter.agent_hat.clone(),
        similarity_residual,
    };
    let before = inter.state_space();
    let after = red.state_space();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..50 {
        let om = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
        let g0 = before.eval_jw(om)?;
        worst = worst.max(lti::cmat_norm2(&(&g0 - after.eval_jw(om)?)));
        scale = scale.max(lti::cmat_norm2(&g0));
    }
    if worst > 1e-7 * scale {
        return Err(Error::Numerical(format!("realization changed the transfer function by {worst:.3e}")));
    }
    Ok(red)
}

/// Connected reduced graph with observable reduced agents.
pub fn verify_sync_preservation(red: &RealizedReduction) -> bool {
    model::sync_hypotheses(red.l_hat.matrix(), &red.agent_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    #[test]
    fn two_nodes() {
        let l = laplacian_from_spectrum(&SpectrumTarget::new(vec![5.0, 0.0]).unwrap()).unwrap();
        assert!((l.matrix() - from_rows(&[&[2.5, -2.5], &[-2.5, 2.5]])).amax() < 1e-15);
    }

    #[test]
    fn three_one_zero() {
        let l = laplacian_from_spectrum(&SpectrumTarget::new(vec![3.0, 1.0, 0.0]).unwrap()).unwrap();
        let expect = from_rows(&[&[5.0, -1.0, -4.0], &[-1.0, 2.0, -1.0], &[-4.0, -1.0, 5.0]]) / 3.0;
        assert!((l.matrix() - expect).amax() < 1e-14);
    }

    #[test]
    fn repeated_spectrum_gives_uniform_weights() {
        let t = SpectrumTarget::new(vec![2.0, 2.0, 0.0]).unwrap();
        let a = weight_coefficients(&t);
        assert!(a.iter().all(|v| (v - 2.0 / 3.0).abs() < 1e-15));
        let l = laplacian_from_spectrum(&t).unwrap();
        let (vals, _) = linalg::sym_eigen_desc(l.matrix());
        assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 2.0).abs() < 1e-12 && vals[2].abs() < 1e-12);
    }

    #[test]
    fn invalid_spectra() {
        assert!(SpectrumTarget::new(vec![1.0, -1.0, 0.0]).is_err());
        assert!(SpectrumTarget::new(vec![1.0, 2.0, 0.0]).is_err());
        assert!(SpectrumTarget::new(vec![1.0, 0.0, 0.0]).is_err());
        assert!(SpectrumTarget::from_unsorted(vec![0.0, 1.0, 3.0]).is_ok());
    }

    #[test]
    fn diagonal_intermediate() {
        let n = Mat::from_diagonal(&nalgebra::DVector::from_row_slice(&[3.0, 1.0, 0.0]));
        let (l, t) = similarity_transform(&n).unwrap();
        assert!((&t * l.matrix() - &n * &t).norm() < 1e-12);
        let expect = from_rows(&[&[5.0, -1.0, -4.0], &[-1.0, 2.0, -1.0], &[-4.0, -1.0, 5.0]]) / 3.0;
        assert!((l.matrix() - expect).amax() < 1e-12);
    }

    #[test]
    fn laplacian_input_is_reproduced() {
        let n = from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let (l, t) = similarity_transform(&n).unwrap();
        assert!((l.matrix() - &n).amax() < 1e-14);
        assert!((&t * l.matrix() - &n * &t).norm() < 1e-14);
    }

    #[test]
    fn defective_matrix_rejected() {
        let n = from_rows(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(similarity_transform(&n).is_err());
    }

    #[test]
    fn complex_spectrum_rejected() {
        let n = from_rows(&[&[1.0, 2.0, 0.0], &[-2.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(matches!(similarity_transform(&n), Err(Error::NotDiagonalizable(_))));
    }
}
