//! Generalized Gramians of the stable subsystem and their Kronecker assembly.

use nalgebra::DVector;

use crate::decompose::{SpectralData, StableSubsystem};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{self, AgentModel};
use crate::sdp::{SdpOptions, SdpProblem, SdpSolution, SdpStatus};

/// Eigenvalues below this fraction of the largest are dropped from SDP Gramians.
pub const POLISH_TOL: f64 = 1e-8;
pub const ORDER_TOL: f64 = 1e-8;
pub const VERIFY_TOL: f64 = 1e-7;

/// Which graph Gramian solves the Lyapunov equation and which the inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// `X` from the equation, `Y` trace-minimal from the inequality.
    #[default]
    Standard,
    /// `X` trace-minimal from the inequality, `Y` from the equation.
    Dual,
}

/// Convergence summary of one SDP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub name: &'static str,
    pub status: SdpStatus,
    pub value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub facial_reductions: usize,
    pub warnings: Vec<String>,
}

impl SolverSummary {
    fn from(name: &'static str, s: &SdpSolution) -> Self {
        Self {
            name,
            status: s.status,
            value: s.value,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            gap: s.gap,
            iterations: s.iterations,
            facial_reductions: s.facial_reductions,
            warnings: s.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianSet {
    pub x: Mat,
    pub y: Mat,
    pub k_min: Mat,
    pub k_max: Mat,
    /// `X ⊗ K_M^{-1}`
    pub x_kron: Mat,
    /// `Y ⊗ K_m`
    pub y_kron: Mat,
    pub orientation: Orientation,
    pub solvers: Vec<SolverSummary>,
}

impl GramianSet {
    pub fn k_max_inv(&self) -> Mat {
        linalg::inverse(&self.k_max).expect("checked at assembly")
    }
}

/// Solution of `Λ̄ P + P Λ̄ = G G^T` for diagonal `Λ̄ > 0`.
pub fn lyapunov_diagonal(lambda: &DVector<f64>, g: &Mat) -> Result<Mat> {
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Degenerate("Λ̄ must be positive definite".into()));
    }
    if g.nrows() != lambda.len() {
        return Err(Error::Dimension("input map does not match Λ̄".into()));
    }
    let w = g * g.transpose();
    Ok(Mat::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] / (lambda[i] + lambda[j])))
}

/// `X` from `-Λ̄X - XΛ̄ + F̄F̄^T = 0`.
pub fn controllability_x(spec: &SpectralData, f_bar: &Mat) -> Result<Mat> {
    lyapunov_diagonal(&spec.lambda_bar, f_bar)
}

/// Trace-minimal block-diagonal `P` with `Λ̄P + PΛ̄ - G G^T >= 0`.
fn block_lyapunov_inequality(spec: &SpectralData, g: &Mat, name: &'static str) -> Result<(Mat, SolverSummary)> {
    if spec.lambda_bar.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Degenerate("Λ̄ must be positive definite".into()));
    }
    let lam = spec.lambda_matrix();
    let ggt = g * g.transpose();
    let sol = SdpProblem::new(spec.group_sizes())
        .minimize_trace()
        .lmi_psd(-ggt, move |p| &lam * p + p * &lam)
        .solve(&SdpOptions::default())?;
    let summary = SolverSummary::from(name, &sol);
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver(format!("{name}: SDP ended with {:?}", sol.status)));
    }
    Ok((polish_blocks(&sol.matrix, spec), summary))
}

/// Drops barrier residue: per block, eigenvalues below `POLISH_TOL` times the largest are set to zero.
fn polish_blocks(p: &Mat, spec: &SpectralData) -> Mat {
    let p = linalg::sym(p);
    let scale = linalg::max_eig_sym(&p).max(0.0);
    let mut out = Mat::zeros(p.nrows(), p.ncols());
    for g in &spec.groups {
        let blk = p.view((g.start, g.start), (g.len(), g.len())).into_owned();
        let (vals, vecs) = linalg::sym_eigen_desc(&blk);
        let vals = vals.map(|v| if v > POLISH_TOL * scale { v } else { 0.0 });
        let rebuilt = linalg::sym(&(&vecs * Mat::from_diagonal(&vals) * vecs.transpose()));
        out.view_mut((g.start, g.start), (g.len(), g.len())).copy_from(&rebuilt);
    }
    out
}

/// Trace-minimal block-diagonal `Y` with `-Λ̄Y - YΛ̄ + H̄^T H̄ <= 0`.
pub fn observability_y(spec: &SpectralData, h_bar: &Mat) -> Result<(Mat, SolverSummary)> {
    block_lyapunov_inequality(spec, &h_bar.transpose(), "observability Y")
}

/// Trace-minimal block-diagonal `X` with `-Λ̄X - XΛ̄ + F̄F̄^T <= 0`.
pub fn controllability_x_sdp(spec: &SpectralData, f_bar: &Mat) -> Result<(Mat, SolverSummary)> {
    block_lyapunov_inequality(spec, f_bar, "controllability X")
}

/// `Y` from `-Λ̄Y - YΛ̄ + H̄^T H̄ = 0`.
pub fn observability_y_closed(spec: &SpectralData, h_bar: &Mat) -> Result<Mat> {
    lyapunov_diagonal(&spec.lambda_bar, &h_bar.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KypExtremal {
    pub k_min: Mat,
    pub k_max: Mat,
    pub solvers: Vec<SolverSummary>,
}

/// Loewner-minimal and Loewner-maximal storage matrices of a passive agent.
///
/// `K_M^{-1}` is the minimal storage of the dual agent `(A^T, C^T, B^T)`.
pub fn kyp_extremal(agent: &AgentModel) -> Result<KypExtremal> {
    let opts = SdpOptions::default();
    let dual = AgentModel::new(agent.a().transpose(), agent.c().transpose(), agent.b().transpose())?;
    let lo = model::kyp_problem(agent).minimize_trace().solve(&opts)?;
    let hi = model::kyp_problem(&dual).minimize_trace().solve(&opts)?;
    for (s, what) in [(&lo, "trace-min"), (&hi, "dual trace-min")] {
        match s.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => {
                return Err(Error::NotPassive(s.certificate.clone().unwrap_or_else(|| "KYP set is empty".into())))
            }
            SdpStatus::Unbounded => {
                return Err(Error::Solver(format!("{what} KYP solve is unbounded; the agent is probably not minimal")))
            }
            SdpStatus::MaxIterations => return Err(Error::Solver(format!("{what} KYP solve hit the iteration limit"))),
        }
    }
    let k_min = linalg::sym(&lo.matrix);
    let k_max_inv = linalg::sym(&hi.matrix);
    if linalg::min_eig_sym(&k_max_inv) <= 0.0 {
        return Err(Error::Degenerate("dual minimal storage is singular; the agent is not minimal".into()));
    }
    let k_max = linalg::sym(&linalg::inverse(&k_max_inv)?);
    let scale = linalg::norm2(&k_max).max(1.0);
    let order = linalg::min_eig_sym(&(&k_max - &k_min));
    if order < -ORDER_TOL * scale {
        return Err(Error::Numerical(format!("K_M - K_m has eigenvalue {order:.3e} < 0")));
    }
    if linalg::min_eig_sym(&k_min) <= 0.0 {
        return Err(Error::Degenerate("trace-minimal storage is singular; the agent is not minimal".into()));
    }
    Ok(KypExtremal {
        k_min,
        k_max,
        solvers: vec![SolverSummary::from("KYP trace-min", &lo), SolverSummary::from("dual KYP trace-min", &hi)],
    })
}

/// `𝒳 = X ⊗ K_M^{-1}`, `𝒴 = Y ⊗ K_m`.
pub fn assemble_generalized(x: Mat, y: Mat, k_min: Mat, k_max: Mat) -> Result<GramianSet> {
    if !x.is_square() || x.shape() != y.shape() || !k_min.is_square() || k_min.shape() != k_max.shape() {
        return Err(Error::Dimension("Gramian dimensions are inconsistent".into()));
    }
    let k_max_inv = linalg::inverse(&k_max).map_err(|_| Error::Degenerate("K_M is singular".into()))?;
    Ok(GramianSet {
        x_kron: linalg::kron(&x, &linalg::sym(&k_max_inv)),
        y_kron: linalg::kron(&y, &k_min),
        x,
        y,
        k_min,
        k_max,
        orientation: Orientation::Standard,
        solvers: Vec::new(),
    })
}

/// Graph Gramians in the requested orientation plus the agent storage extremals.
pub fn compute_gramians(stable: &StableSubsystem, orientation: Orientation) -> Result<GramianSet> {
    let mut solvers = Vec::new();
    let (x, y) = match orientation {
        Orientation::Standard => {
            let x = controllability_x(&stable.spec, &stable.f_bar)?;
            let (y, s) = observability_y(&stable.spec, &stable.h_bar)?;
            solvers.push(s);
            (x, y)
        }
        Orientation::Dual => {
            let (x, s) = controllability_x_sdp(&stable.spec, &stable.f_bar)?;
            solvers.push(s);
            (x, observability_y_closed(&stable.spec, &stable.h_bar)?)
        }
    };
    let ext = kyp_extremal(&stable.agent)?;
    solvers.extend(ext.solvers);
    let mut g = assemble_generalized(x, y, ext.k_min, ext.k_max)?;
    g.orientation = orientation;
    g.solvers = solvers;
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramianResiduals {
    /// `λ_max(Φ𝒳 + 𝒳Φ^T + (F̄⊗B)(F̄⊗B)^T)`
    pub controllability: f64,
    /// `λ_max(Φ^T𝒴 + 𝒴Φ + (H̄⊗C)^T(H̄⊗C))`
    pub observability: f64,
    pub controllability_scale: f64,
    pub observability_scale: f64,
}

impl GramianResiduals {
    pub fn controllability_ok(&self) -> bool {
        self.controllability <= VERIFY_TOL * self.controllability_scale
    }

    pub fn observability_ok(&self) -> bool {
        self.observability <= VERIFY_TOL * self.observability_scale
    }

    pub fn passed(&self) -> bool {
        self.controllability_ok() && self.observability_ok()
    }
}

/// Residuals of the generalized Gramian inequalities of the stable subsystem.
pub fn verify_gramians(stable: &StableSubsystem, g: &GramianSet) -> GramianResiduals {
    let ss = stable.state_space();
    let phi = &ss.a;
    let bb = &ss.b * ss.b.transpose();
    let cc = ss.c.transpose() * &ss.c;
    let rx = linalg::sym(&(phi * &g.x_kron + &g.x_kron * phi.transpose() + &bb));
    let ry = linalg::sym(&(phi.transpose() * &g.y_kron + &g.y_kron * phi + &cc));
    let nphi = linalg::norm2(phi);
    GramianResiduals {
        controllability: linalg::max_eig_sym(&rx),
        observability: linalg::max_eig_sym(&ry),
        controllability_scale: (2.0 * nphi * linalg::norm2(&g.x_kron)).max(linalg::norm2(&bb)).max(1.0),
        observability_scale: (2.0 * nphi * linalg::norm2(&g.y_kron)).max(linalg::norm2(&cc)).max(1.0),
    }
}
