//! Splitting a network into its average module and asymptotically stable part.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lti::StateSpace;
use crate::model::{self, AgentModel, LaplacianMatrix, NetworkSystem};

/// Relative tolerance deciding when two Laplacian eigenvalues are equal.
pub const GROUP_TOL: f64 = 1e-8;
pub const HURWITZ_TOL: f64 = 1e-9;

/// `L = T diag(Λ̄, 0) T^T` with `T = [T1, 1/√N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub t1: Mat,
    pub t2: DVector<f64>,
    pub lambda_bar: DVector<f64>,
    /// Index ranges of equal eigenvalues in `lambda_bar`.
    pub groups: Vec<std::ops::Range<usize>>,
}

impl SpectralData {
    pub fn nodes(&self) -> usize {
        self.t2.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    pub fn lambda_matrix(&self) -> Mat {
        Mat::from_diagonal(&self.lambda_bar)
    }

    pub fn t(&self) -> Mat {
        linalg::hstack(&self.t1, &Mat::from_column_slice(self.nodes(), 1, self.t2.as_slice()))
    }

    /// `‖T Λ T^T - L‖_F`
    pub fn reconstruction_error(&self, l: &Mat) -> f64 {
        let n = self.nodes();
        let mut lam = DVector::zeros(n);
        lam.rows_mut(0, n - 1).copy_from(&self.lambda_bar);
        let t = self.t();
        (&t * Mat::from_diagonal(&lam) * t.transpose() - l).norm()
    }
}

/// Eigendecomposition with descending eigenvalues, `T2 = 1/√N` exactly and sign-fixed `T1`.
pub fn spectral_decompose(l: &LaplacianMatrix) -> Result<SpectralData> {
    let n = l.nodes();
    if n < 2 {
        return Err(Error::InvalidLaplacian("at least two nodes are required".into()));
    }
    let t2 = linalg::ones(n) / (n as f64).sqrt();
    // restrict to the orthogonal complement of 1 so the zero eigenvector is exact
    let basis = linalg::null_space(&Mat::from_row_slice(1, n, t2.as_slice()), 1e-12);
    let reduced = linalg::sym(&(basis.transpose() * l.matrix() * &basis));
    let (vals, vecs) = linalg::sym_eigen_desc(&reduced);
    let mut t1 = &basis * vecs;
    for j in 0..n - 1 {
        let mut col = t1.column_mut(j);
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    let lmax = vals[0];
    if vals[n - 2] <= model::STRUCTURE_TOL * lmax {
        return Err(Error::InvalidLaplacian("graph is not connected".into()));
    }
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=n - 1 {
        if i == n - 1 || (vals[start] - vals[i]).abs() > GROUP_TOL * lmax {
            groups.push(start..i);
            start = i;
        }
    }
    Ok(SpectralData { t1, t2, lambda_bar: vals, groups })
}

/// `z_a' = A z_a + (1^T F/√N ⊗ B) u`, `y_a = (H 1/√N ⊗ C) z_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageModule {
    pub agent: AgentModel,
    /// `1^T F / √N`
    pub f_avg: Mat,
    /// `H 1 / √N`
    pub h_avg: Mat,
}

impl AverageModule {
    pub fn state_space(&self) -> StateSpace {
        StateSpace::new(
            self.agent.a().clone(),
            linalg::kron(&self.f_avg, self.agent.b()),
            linalg::kron(&self.h_avg, self.agent.c()),
        )
        .expect("consistent dimensions")
    }

    /// Either average path vanishes, so the module contributes nothing to the output.
    pub fn is_silent(&self, tol: f64) -> bool {
        self.f_avg.amax() <= tol || self.h_avg.amax() <= tol
    }
}

/// `z_s' = (I ⊗ A - Λ̄ ⊗ BC) z_s + (F̄ ⊗ B) u`, `y_s = (H̄ ⊗ C) z_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StableSubsystem {
    pub spec: SpectralData,
    pub f_bar: Mat,
    pub h_bar: Mat,
    pub agent: AgentModel,
}

impl StableSubsystem {
    pub fn state_space(&self) -> StateSpace {
        model::network_state_space(&self.spec.lambda_matrix(), &self.f_bar, &self.h_bar, &self.agent)
    }

    /// `Φ = I ⊗ A - Λ̄ ⊗ BC`
    pub fn phi(&self) -> Mat {
        self.state_space().a
    }
}

pub fn split(net: &NetworkSystem) -> Result<(AverageModule, StableSubsystem)> {
    let spec = spectral_decompose(net.laplacian())?;
    split_with(net, spec)
}

pub fn split_with(net: &NetworkSystem, spec: SpectralData) -> Result<(AverageModule, StableSubsystem)> {
    let (avg, stable) = split_parts(net, spec);
    if !hurwitz_check(&stable)? {
        return Err(Error::Unstable("I ⊗ A - Λ̄ ⊗ BC has eigenvalues with nonnegative real part".into()));
    }
    Ok((avg, stable))
}

/// Split without the stability check on the stable part.
pub fn split_unchecked(net: &NetworkSystem) -> Result<(AverageModule, StableSubsystem)> {
    Ok(split_parts(net, spectral_decompose(net.laplacian())?))
}

fn split_parts(net: &NetworkSystem, spec: SpectralData) -> (AverageModule, StableSubsystem) {
    let t2 = Mat::from_column_slice(spec.nodes(), 1, spec.t2.as_slice());
    let avg = AverageModule { agent: net.agent().clone(), f_avg: t2.transpose() * net.f(), h_avg: net.h() * &t2 };
    let stable = StableSubsystem {
        f_bar: spec.t1.transpose() * net.f(),
        h_bar: net.h() * &spec.t1,
        agent: net.agent().clone(),
        spec,
    };
    (avg, stable)
}

/// Largest real part of the eigenvalues of `I ⊗ A - Λ̄ ⊗ BC`.
pub fn stable_abscissa(sub: &StableSubsystem) -> Result<f64> {
    // the Kronecker structure decouples into one agent-sized block per eigenvalue
    let bc = sub.agent.b() * sub.agent.c();
    let mut worst = f64::NEG_INFINITY;
    for &lam in sub.spec.lambda_bar.iter() {
        let blk = sub.agent.a() - &bc * lam;
        worst = worst.max(linalg::spectral_abscissa(&blk)?);
    }
    Ok(worst)
}

pub fn hurwitz_check(sub: &StableSubsystem) -> Result<bool> {
    Ok(stable_abscissa(sub)? < -HURWITZ_TOL)
}

/// `max_ω ‖G_Σ - G_Σa - G_Σs‖₂` over the given frequencies.
pub fn split_residual(
    net: &NetworkSystem,
    avg: &AverageModule,
    stable: &StableSubsystem,
    omegas: &[f64],
) -> Result<f64> {
    let full = net.state_space();
    let a = avg.state_space();
    let s = stable.state_space();
    let mut worst: f64 = 0.0;
    for &w in omegas {
        let jw = Complex64::new(0.0, w);
        let d = full.eval(jw)? - a.eval(jw)? - s.eval(jw)?;
        worst = worst.max(crate::lti::cmat_norm2(&d));
    }
    Ok(worst)
}
