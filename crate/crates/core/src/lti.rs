//! Strictly proper continuous-time state-space models `(A, B, C)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

impl StateSpace {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "state space A {:?}, B {:?}, C {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Transfer matrix `C (sI - A)^{-1} B`.
    pub fn eval(&self, s: Complex64) -> Result<CMat> {
        let n = self.order();
        if n == 0 {
            return Ok(CMat::zeros(self.outputs(), self.inputs()));
        }
        let mut m = -linalg::to_complex(&self.a);
        for i in 0..n {
            m[(i, i)] += s;
        }
        let rhs = linalg::to_complex(&self.b);
        let x = m.lu().solve(&rhs).ok_or_else(|| Error::Numerical(format!("resolvent singular at s = {s}")))?;
        Ok(linalg::to_complex(&self.c) * x)
    }

    pub fn eval_jw(&self, omega: f64) -> Result<CMat> {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn spectral_abscissa(&self) -> Result<f64> {
        if self.order() == 0 {
            return Ok(f64::NEG_INFINITY);
        }
        linalg::spectral_abscissa(&self.a)
    }

    pub fn is_hurwitz(&self, tol: f64) -> Result<bool> {
        Ok(self.spectral_abscissa()? < -tol)
    }

    /// Realization of `G1(s) - G2(s)`.
    pub fn difference(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::Dimension("difference of systems with different I/O".into()));
        }
        StateSpace::new(
            linalg::block_diag(&self.a, &other.a),
            linalg::vstack(&self.b, &other.b),
            linalg::hstack(&self.c, &(-&other.c)),
        )
    }

    /// Realization of `G1(s) + G2(s)`.
    pub fn parallel(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::Dimension("sum of systems with different I/O".into()));
        }
        StateSpace::new(
            linalg::block_diag(&self.a, &other.a),
            linalg::vstack(&self.b, &other.b),
            linalg::hstack(&self.c, &other.c),
        )
    }

    pub fn similarity(&self, t: &Mat, t_inv: &Mat) -> StateSpace {
        StateSpace { a: t * &self.a * t_inv, b: t * &self.b, c: &self.c * t_inv }
    }

    /// Largest singular value of the transfer matrix at `s = j omega`.
    pub fn sigma_max(&self, omega: f64) -> Result<f64> {
        let g = self.eval_jw(omega)?;
        Ok(cmat_norm2(&g))
    }

    /// Kalman decomposition down to the controllable and observable part.
    pub fn minimal_realization(&self, rel_tol: f64) -> StateSpace {
        let n = self.order();
        if n == 0 {
            return self.clone();
        }
        let qc = controllable_subspace(&self.a, &self.b, rel_tol);
        let a1 = qc.transpose() * &self.a * &qc;
        let b1 = qc.transpose() * &self.b;
        let c1 = &self.c * &qc;
        if a1.nrows() == 0 {
            return StateSpace { a: a1, b: b1, c: c1 };
        }
        let qo = controllable_subspace(&a1.transpose(), &c1.transpose(), rel_tol);
        StateSpace { a: qo.transpose() * &a1 * &qo, b: qo.transpose() * b1, c: c1 * &qo }
    }
}

/// Orthonormal basis of the reachable subspace of `(A, B)` by an orthogonal staircase.
/// Directions below `rel_tol · max(‖A‖₂, ‖B‖₂)` are discarded.
pub fn controllable_subspace(a: &Mat, b: &Mat, rel_tol: f64) -> Mat {
    let n = a.nrows();
    let tol = rel_tol * linalg::norm2(a).max(linalg::norm2(b)).max(f64::MIN_POSITIVE);
    let mut q = Mat::zeros(n, 0);
    let mut fresh = orthonormal_part(b, &q, tol);
    while fresh.ncols() > 0 {
        q = linalg::hstack(&q, &fresh);
        if q.ncols() >= n {
            break;
        }
        fresh = orthonormal_part(&(a * &fresh), &q, tol);
    }
    q
}

/// Orthonormal basis of the part of `range(w)` orthogonal to the orthonormal columns of `q`.
fn orthonormal_part(w: &Mat, q: &Mat, tol: f64) -> Mat {
    let n = w.nrows();
    if w.ncols() == 0 {
        return Mat::zeros(n, 0);
    }
    let mut w = w.clone();
    for _ in 0..2 {
        w -= q * (q.transpose() * &w);
    }
    let svd = linalg::svd(&w, true, false);
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    Mat::from_fn(n, keep.len(), |i, j| u[(i, keep[j])])
}

/// Dimension of the reachable subspace.
pub fn controllability_rank(a: &Mat, b: &Mat, rel_tol: f64) -> usize {
    controllable_subspace(a, b, rel_tol).ncols()
}

/// Dimension of the observable subspace.
pub fn observability_rank(a: &Mat, c: &Mat, rel_tol: f64) -> usize {
    controllable_subspace(&a.transpose(), &c.transpose(), rel_tol).ncols()
}

pub fn cmat_norm2(g: &CMat) -> f64 {
    if g.nrows() == 0 || g.ncols() == 0 {
        return 0.0;
    }
    if g.nrows() == 1 || g.ncols() == 1 {
        return g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    let (r, c) = g.shape();
    let real = Mat::from_fn(2 * r, 2 * c, |i, j| {
        let z = g[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    linalg::norm2(&real)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    #[test]
    fn first_order_lag() {
        let g = StateSpace::new(from_rows(&[&[-1.0]]), from_rows(&[&[1.0]]), from_rows(&[&[1.0]])).unwrap();
        assert!((g.sigma_max(1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(g.sigma_max(1e8).unwrap() < 1e-7);
    }

    #[test]
    fn minimal_realization_removes_hidden_mode() {
        let a = from_rows(&[&[-1.0, 0.0], &[0.0, -2.0]]);
        let b = from_rows(&[&[1.0], &[0.0]]);
        let c = from_rows(&[&[1.0, 0.0]]);
        let g = StateSpace::new(a, b, c).unwrap();
        let m = g.minimal_realization(1e-8);
        assert_eq!(m.order(), 1);
        for w in [0.1, 1.0, 10.0] {
            let d = g.eval_jw(w).unwrap()[(0, 0)] - m.eval_jw(w).unwrap()[(0, 0)];
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn staircase_ranks() {
        let a = from_rows(&[&[-1.0, 0.0, 0.0], &[0.0, -2.0, 0.0], &[0.0, 0.0, -3.0]]);
        let b = from_rows(&[&[1.0], &[1.0], &[0.0]]);
        assert_eq!(controllability_rank(&a, &b, 1e-10), 2);
        let agent = crate::manipulator::manipulator_agent();
        assert_eq!(controllability_rank(agent.a(), agent.b(), 1e-8), 8);
        assert_eq!(observability_rank(agent.a(), agent.c(), 1e-8), 8);
    }
}
