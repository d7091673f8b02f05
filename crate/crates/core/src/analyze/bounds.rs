use nalgebra::DVector;

use crate::decompose::{AverageModule, StableSubsystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::StateSpace;
use crate::model::{self, AgentModel, NetworkSystem};
use crate::reduce::{BalancedForm, ReducedGraph};

use super::hinf::hinf_norm;

/// Entries below this are treated as zero when testing `H1 = 0` or `1^T F = 0`.
pub const AVERAGE_ZERO_TOL: f64 = 1e-12;

/// `2 Σ_{i>=k} Σ_j σ_i τ_j + 2 Σ_{i<k} Σ_{j>r} σ_i τ_j` (1-based `i`, `j`).
pub fn bound_gamma(sigma: &DVector<f64>, tau: &DVector<f64>, k: usize, r: usize) -> Result<f64> {
    let nodes = sigma.len() + 1;
    let n = tau.len();
    if k == 0 || k > nodes || r == 0 || r > n {
        return Err(Error::Dimension(format!("need 1 <= k <= {nodes} and 1 <= r <= {n}, got k = {k}, r = {r}")));
    }
    let tail_sigma: f64 = sigma.rows(k - 1, nodes - k).sum();
    let head_sigma: f64 = sigma.rows(0, k - 1).sum();
    let tau_all: f64 = tau.sum();
    let tau_tail: f64 = tau.rows(r, n - r).sum();
    Ok(2.0 * tail_sigma * tau_all + 2.0 * head_sigma * tau_tail)
}

/// Bound without agent reduction: `2 Σ_{i>=k} Σ_j σ_i τ_j`.
pub fn graph_only_bound(sigma: &DVector<f64>, tau: &DVector<f64>, k: usize) -> Result<f64> {
    bound_gamma(sigma, tau, k, tau.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCase {
    /// `r = n`: the agents are not reduced.
    NoAgentReduction,
    /// `H1 = 0` or `1^T F = 0`: the average module is invisible.
    ZeroAverage,
    /// Average path present and agents reduced; the bound uses the computed agent error.
    General,
}

impl BoundCase {
    pub fn label(&self) -> &'static str {
        match self {
            BoundCase::NoAgentReduction => "no-agent-reduction",
            BoundCase::ZeroAverage => "zero-average",
            BoundCase::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub case: BoundCase,
    /// Stable-part bound `γ`.
    pub gamma: f64,
    /// `‖H 1 1^T F‖₂ / N`
    pub gamma_a: f64,
    /// `‖Σ_i - Σ̂_i‖_∞`, computed in the general case.
    pub agent_error: Option<f64>,
    /// `None` when no bound applies.
    pub total_bound: Option<f64>,
    /// The bound uses only balancing data.
    pub a_priori: bool,
    /// `‖Σ - Σ̂‖_∞`; `None` when the error system is not stable.
    pub actual_error: Option<f64>,
    /// `‖Σ_s - Σ̂_s‖_∞`
    pub stable_error: f64,
    /// `‖Σ_a - Σ̂_a‖_∞`
    pub average_error: Option<f64>,
    pub note: Option<String>,
}

impl ErrorReport {
    pub fn bound_holds(&self, tol: f64) -> Option<bool> {
        Some(self.actual_error? <= self.total_bound? + tol)
    }
}

/// Reduced stable part `(I ⊗ Â - Λ̂_1 ⊗ B̂Ĉ, F̂_1 ⊗ B̂, Ĥ_1 ⊗ Ĉ)`.
pub fn reduced_stable(graph: &ReducedGraph, agent_hat: &AgentModel) -> StateSpace {
    model::network_state_space(&graph.lambda_hat, &graph.f_hat, &graph.h_hat, agent_hat)
}

/// `(H1 1^T F / N) ⊗ (Σ_i - Σ̂_i)` as a state-space system.
pub fn average_difference(avg: &AverageModule, agent_hat: &AgentModel) -> Result<StateSpace> {
    let delta = avg.agent.state_space().difference(&agent_hat.state_space())?;
    let delta = delta.minimal_realization(model::RANK_TOL);
    StateSpace::new(delta.a.clone(), linalg::kron(&avg.f_avg, &delta.b), linalg::kron(&avg.h_avg, &delta.c))
}

pub fn classify(avg: &AverageModule, r: usize, n: usize) -> BoundCase {
    if r == n {
        BoundCase::NoAgentReduction
    } else if avg.is_silent(AVERAGE_ZERO_TOL) {
        BoundCase::ZeroAverage
    } else {
        BoundCase::General
    }
}

/// Selects the applicable bound and computes the actual H∞ error through the split `Σ = Σ_a + Σ_s`.
#[allow(clippy::too_many_arguments)]
pub fn bound_total(
    net: &NetworkSystem,
    avg: &AverageModule,
    stable: &StableSubsystem,
    bal: &BalancedForm,
    graph: &ReducedGraph,
    agent_hat: &AgentModel,
    k: usize,
    r: usize,
) -> Result<ErrorReport> {
    let n = net.agent().n();
    let gamma = bound_gamma(bal.sigma_g(), bal.sigma_d(), k, r)?;
    let ones = linalg::ones(net.nodes());
    let hf = (net.h() * &ones) * (ones.transpose() * net.f());
    let gamma_a = linalg::norm2(&hf) / net.nodes() as f64;
    let case = classify(avg, r, n);

    let stable_diff = stable.state_space().difference(&reduced_stable(graph, agent_hat))?;
    let stable_error = hinf_norm(&stable_diff)?;

    let mut report = ErrorReport {
        case,
        gamma,
        gamma_a,
        agent_error: None,
        total_bound: None,
        a_priori: true,
        actual_error: None,
        stable_error,
        average_error: None,
        note: None,
    };
    match case {
        BoundCase::NoAgentReduction => {
            report.total_bound = Some(graph_only_bound(bal.sigma_g(), bal.sigma_d(), k)?);
            report.actual_error = Some(stable_error);
            report.average_error = Some(0.0);
        }
        BoundCase::ZeroAverage => {
            report.total_bound = Some(gamma);
            report.actual_error = Some(stable_error);
            report.average_error = Some(0.0);
        }
        BoundCase::General => {
            report.a_priori = false;
            let delta_a = average_difference(avg, agent_hat)?;
            if delta_a.order() > 0 && !delta_a.is_hurwitz(crate::decompose::HURWITZ_TOL)? {
                report.note = Some("agent error system is not asymptotically stable; bound unavailable".into());
                return Ok(report);
            }
            let delta = net.agent().state_space().difference(&agent_hat.state_space())?;
            let agent_error = hinf_norm(&delta.minimal_realization(model::RANK_TOL))?;
            report.agent_error = Some(agent_error);
            report.total_bound = Some(gamma + gamma_a * agent_error);
            report.average_error = Some(hinf_norm(&delta_a)?);
            report.actual_error = Some(hinf_norm(&stable_diff.parallel(&delta_a)?)?);
            report.note = Some("bound uses the computed agent error and is not fully a priori".into());
        }
    }
    Ok(report)
}

/// `max_ω ‖G_1(jω) - G_2(jω)‖₂` over a grid.
pub fn grid_difference(a: &StateSpace, b: &StateSpace, omegas: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &w in omegas {
        let g = a.eval_jw(w)? - b.eval_jw(w)?;
        worst = worst.max(crate::lti::cmat_norm2(&g));
    }
    Ok(worst)
}
