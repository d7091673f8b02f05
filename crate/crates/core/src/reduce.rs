//! Generalized balanced truncation of the graph and the agent dynamics.

use nalgebra::DVector;

use crate::decompose::{SpectralData, StableSubsystem};
use crate::error::{Error, Result};
use crate::gramian::{GramianSet, Orientation};
use crate::linalg::{self, Mat};
use crate::lti::{self, StateSpace};
use crate::model::{AgentModel, NetworkSystem, RANK_TOL};

/// Neighbouring singular values closer than this (relative to the largest) form a cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Eigenvalues of a Gramian below this fraction of its largest are treated as zero.
pub const FACTOR_TOL: f64 = 1e-13;
/// Singular values below this fraction of the largest are reported as zero.
pub const SIGMA_TOL: f64 = 1e-9;

/// Square-root balancing of a Gramian pair `(P, Q)`.
///
/// `w^T P w = v^T Q v = diag(σ_1..σ_ρ)` and `w^T v = I` for the `ρ` nonzero singular values;
/// `sigma` is padded with zeros to the full dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBalance {
    pub sigma: DVector<f64>,
    pub w: Mat,
    pub v: Mat,
}

impl PairBalance {
    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// `max(‖w^T P w - Σ‖, ‖v^T Q v - Σ‖, ‖w^T v - I‖ σ_1)`
    pub fn residual(&self, p: &Mat, q: &Mat) -> f64 {
        let rho = self.rank();
        let s = Mat::from_diagonal(&self.sigma.rows(0, rho).into_owned());
        let r1 = (self.w.transpose() * p * &self.w - &s).amax();
        let r2 = (self.v.transpose() * q * &self.v - &s).amax();
        let r3 = (self.w.transpose() * &self.v - Mat::identity(rho, rho)).amax() * self.sigma.max();
        r1.max(r2).max(r3)
    }
}

pub fn balance_pair(p: &Mat, q: &Mat) -> Result<PairBalance> {
    let dim = p.nrows();
    if !p.is_square() || p.shape() != q.shape() {
        return Err(Error::Dimension("Gramian pair must be square and equally sized".into()));
    }
    let r = linalg::psd_factor(p, FACTOR_TOL);
    let s = linalg::psd_factor(q, FACTOR_TOL);
    let mut sigma = DVector::zeros(dim);
    if r.ncols() == 0 || s.ncols() == 0 {
        return Ok(PairBalance { sigma, w: Mat::zeros(dim, 0), v: Mat::zeros(dim, 0) });
    }
    let cross = s.transpose() * &r;
    let svd = linalg::svd(&cross, true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let rho = order.iter().filter(|&&i| svd.singular_values[i] > SIGMA_TOL * smax).count();
    let mut w = Mat::zeros(dim, rho);
    let mut v = Mat::zeros(dim, rho);
    for (col, &i) in order.iter().take(rho).enumerate() {
        let sv = svd.singular_values[i];
        let mut uc = u.column(i).into_owned();
        let mut vc = vt.row(i).transpose();
        // deterministic sign: first non-negligible entry of the left vector is positive
        if let Some(first) = uc.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                uc.neg_mut();
                vc.neg_mut();
            }
        }
        let scale = 1.0 / sv.sqrt();
        w.set_column(col, &(&s * uc * scale));
        v.set_column(col, &(&r * vc * scale));
        sigma[col] = sv;
    }
    Ok(PairBalance { sigma, w, v })
}

/// Balanced coordinates of the graph pair `(X, Y)` and the agent pair `(K_M^{-1}, K_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedForm {
    pub graph: PairBalance,
    pub agent: PairBalance,
    pub orientation: Orientation,
}

impl BalancedForm {
    /// `σ_1 >= ... >= σ_{N-1}`
    pub fn sigma_g(&self) -> &DVector<f64> {
        &self.graph.sigma
    }

    /// `τ_1 >= ... >= τ_n`
    pub fn sigma_d(&self) -> &DVector<f64> {
        &self.agent.sigma
    }

    /// All `τ_j = 1`: the agent admits no reduction.
    pub fn agent_lossless(&self) -> bool {
        self.sigma_d().iter().all(|t| (t - 1.0).abs() <= CLUSTER_TOL)
    }

    /// Node counts `k` whose truncation does not split a cluster of `σ`.
    pub fn admissible_k(&self) -> Vec<usize> {
        admissible(self.sigma_g()).into_iter().map(|kept| kept + 1).collect()
    }

    /// Agent orders `r >= 1` whose truncation does not split a cluster of `τ`.
    pub fn admissible_r(&self) -> Vec<usize> {
        if self.agent_lossless() {
            return vec![self.agent.dim()];
        }
        admissible(self.sigma_d()).into_iter().filter(|&r| r >= 1).collect()
    }

    pub fn check_k(&self, k: usize) -> Result<()> {
        let ok = self.admissible_k();
        if ok.contains(&k) {
            Ok(())
        } else {
            Err(Error::InadmissibleOrder { what: "node", requested: k, admissible: ok })
        }
    }

    pub fn check_r(&self, r: usize) -> Result<()> {
        let ok = self.admissible_r();
        if ok.contains(&r) {
            return Ok(());
        }
        Err(Error::InadmissibleOrder {
            what: if self.agent_lossless() { "agent (lossless, all τ = 1)" } else { "agent" },
            requested: r,
            admissible: ok,
        })
    }
}

/// Numbers of retained values `0..=len` that do not cut through a cluster.
pub fn admissible(ladder: &DVector<f64>) -> Vec<usize> {
    let n = ladder.len();
    let top = ladder.iter().fold(0.0_f64, |a, &b| a.max(b));
    (0..=n).filter(|&kept| kept == 0 || kept == n || ladder[kept - 1] - ladder[kept] > CLUSTER_TOL * top).collect()
}

pub fn balance(g: &GramianSet) -> Result<BalancedForm> {
    let graph = balance_pair(&g.x, &g.y)?;
    if graph.rank() == 0 {
        return Err(Error::Degenerate("all graph singular values vanish (F̄ = 0 or H̄ = 0): nothing to balance".into()));
    }
    let agent = balance_pair(&g.k_max_inv(), &g.k_min)?;
    let scale = graph.sigma.max().max(1e-300);
    let res = graph.residual(&g.x, &g.y);
    if res > 1e-8 * scale.max(linalg::norm2(&g.x)).max(linalg::norm2(&g.y)) {
        return Err(Error::Numerical(format!("graph balancing residual {res:.3e}")));
    }
    let kinv = g.k_max_inv();
    let res = agent.residual(&kinv, &g.k_min);
    if res > 1e-8 * linalg::norm2(&kinv).max(linalg::norm2(&g.k_min)).max(1.0) {
        return Err(Error::Numerical(format!("agent balancing residual {res:.3e}")));
    }
    Ok(BalancedForm { graph, agent, orientation: g.orientation })
}

/// Truncated graph part `(Λ̂_1, F̂_1, Ĥ_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGraph {
    pub lambda_hat: Mat,
    pub f_hat: Mat,
    pub h_hat: Mat,
}

/// Keeps `k - 1` balanced graph modes.
pub fn truncate_network(
    bal: &BalancedForm,
    g: &GramianSet,
    stable: &StableSubsystem,
    k: usize,
) -> Result<ReducedGraph> {
    let spec: &SpectralData = &stable.spec;
    let dim = spec.lambda_bar.len();
    if k == 0 || k > dim + 1 {
        return Err(Error::Dimension(format!("k must lie in 1..={}", dim + 1)));
    }
    bal.check_k(k)?;
    let kept = k - 1;
    let lam = spec.lambda_matrix();
    if kept == dim {
        return Ok(ReducedGraph { lambda_hat: lam, f_hat: stable.f_bar.clone(), h_hat: stable.h_bar.clone() });
    }
    let w = bal.graph.w.columns(0, kept).into_owned();
    let v = bal.graph.v.columns(0, kept).into_owned();
    let sig = bal.graph.sigma.rows(0, kept).into_owned();
    // W^T Λ̄ V written through the Gramian that commutes with Λ̄, so the spectrum is real
    let lambda_hat = match bal.orientation {
        Orientation::Standard => {
            let m = linalg::sym(&(v.transpose() * &g.y * &lam * &v));
            Mat::from_fn(kept, kept, |i, j| m[(i, j)] / sig[i])
        }
        Orientation::Dual => {
            let m = linalg::sym(&(w.transpose() * &lam * &g.x * &w));
            Mat::from_fn(kept, kept, |i, j| m[(i, j)] / sig[j])
        }
    };
    Ok(ReducedGraph { lambda_hat, f_hat: w.transpose() * &stable.f_bar, h_hat: &stable.h_bar * v })
}

/// Keeps `r` balanced agent states and returns a minimal realization.
pub fn truncate_agent(bal: &BalancedForm, agent: &AgentModel, r: usize) -> Result<AgentModel> {
    let n = agent.n();
    if r == 0 || r > n {
        return Err(Error::Dimension(format!("r must lie in 1..={n}")));
    }
    bal.check_r(r)?;
    if r == n {
        return Ok(agent.clone());
    }
    let w = bal.agent.w.columns(0, r).into_owned();
    let v = bal.agent.v.columns(0, r).into_owned();
    let truncated = StateSpace::new(w.transpose() * agent.a() * &v, w.transpose() * agent.b(), agent.c() * &v)?;
    let minimal = truncated.minimal_realization(RANK_TOL);
    let omegas: Vec<f64> = (0..25).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 24.0)).collect();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &om in &omegas {
        let g0 = truncated.eval_jw(om)?;
        let g1 = minimal.eval_jw(om)?;
        worst = worst.max(lti::cmat_norm2(&(&g0 - &g1)));
        scale = scale.max(lti::cmat_norm2(&g0));
    }
    if worst > 1e-8 * scale.max(1.0) {
        return Err(Error::Numerical(format!(
            "minimal realization changed the reduced agent transfer function by {worst:.3e}"
        )));
    }
    AgentModel::new(minimal.a, minimal.b, minimal.c)
}

/// `𝒩 = blkdiag(Λ̂_1, 0)`, `ℱ = [F̂_1; 1^T F/√N]`, `ℋ = [Ĥ_1, H1/√N]` with the reduced agent.
#[derive(Debug, Clone, PartialEq)]
pub struct IntermediateReduced {
    pub n_mat: Mat,
    pub f_cal: Mat,
    pub h_cal: Mat,
    pub agent_hat: AgentModel,
}

impl IntermediateReduced {
    pub fn nodes(&self) -> usize {
        self.n_mat.nrows()
    }

    pub fn state_space(&self) -> StateSpace {
        crate::model::network_state_space(&self.n_mat, &self.f_cal, &self.h_cal, &self.agent_hat)
    }
}

pub fn assemble(graph: &ReducedGraph, net: &NetworkSystem, agent_hat: AgentModel) -> IntermediateReduced {
    let big_n = net.nodes();
    let kept = graph.lambda_hat.nrows();
    let k = kept + 1;
    let root = (big_n as f64).sqrt();
    let mut n_mat = Mat::zeros(k, k);
    n_mat.view_mut((0, 0), (kept, kept)).copy_from(&graph.lambda_hat);
    let f_avg = Mat::from_fn(1, net.f().ncols(), |_, j| net.f().column(j).sum() / root);
    let h_avg = Mat::from_fn(net.h().nrows(), 1, |i, _| net.h().row(i).sum() / root);
    IntermediateReduced {
        n_mat,
        f_cal: linalg::vstack(&graph.f_hat, &f_avg),
        h_cal: linalg::hstack(&graph.h_hat, &h_avg),
        agent_hat,
    }
}
