//! Agents, graphs and the networked system built from them.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lti::{self, StateSpace};
use crate::sdp::{SdpOptions, SdpProblem, SdpStatus};

pub const STRUCTURE_TOL: f64 = 1e-9;
pub const SIGN_TOL: f64 = 1e-12;
pub const RANK_TOL: f64 = 1e-8;
pub const KYP_TOL: f64 = 1e-7;

/// Agent `x' = Ax + Bu, y = Cx` with `m` ports.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    a: Mat,
    b: Mat,
    c: Mat,
}

impl AgentModel {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::Dimension(format!("A must be square and nonempty, got {:?}", a.shape())));
        }
        let m = b.ncols();
        if m == 0 || b.nrows() != n {
            return Err(Error::Dimension(format!("B must be {n}xm with m >= 1, got {:?}", b.shape())));
        }
        if c.shape() != (m, n) {
            return Err(Error::Dimension(format!("C must be {m}x{n}, got {:?}", c.shape())));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace::new(self.a.clone(), self.b.clone(), self.c.clone()).expect("validated dimensions")
    }
}

/// Outcome of each structural Laplacian condition.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianReport {
    pub square: bool,
    pub symmetric: bool,
    pub zero_row_sums: bool,
    pub nonpositive_off_diagonal: bool,
    pub positive_diagonal: bool,
    pub positive_semidefinite: bool,
    pub connected: bool,
    pub symmetry_error: f64,
    pub max_row_sum: f64,
    pub max_off_diagonal: f64,
    pub eigenvalues: Vec<f64>,
}

impl LaplacianReport {
    pub fn passed(&self) -> bool {
        self.square
            && self.symmetric
            && self.zero_row_sums
            && self.nonpositive_off_diagonal
            && self.positive_diagonal
            && self.positive_semidefinite
            && self.connected
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let checks = [
            (self.symmetric, "symmetry"),
            (self.zero_row_sums, "zero row/column sums"),
            (self.nonpositive_off_diagonal, "nonpositive off-diagonal entries"),
            (self.positive_diagonal, "positive diagonal"),
            (self.positive_semidefinite, "positive semidefinite"),
            (self.connected, "simple zero eigenvalue (connected graph)"),
        ];
        for (ok, name) in checks {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

impl fmt::Display for LaplacianReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |b: bool| if b { "ok" } else { "FAIL" };
        writeln!(f, "symmetry           {} (max |L - L^T| = {:.3e})", mark(self.symmetric), self.symmetry_error)?;
        writeln!(f, "zero row sums      {} (max |row sum| = {:.3e})", mark(self.zero_row_sums), self.max_row_sum)?;
        writeln!(
            f,
            "off-diagonal <= 0  {} (max entry = {:.3e})",
            mark(self.nonpositive_off_diagonal),
            self.max_off_diagonal
        )?;
        writeln!(f, "diagonal > 0       {}", mark(self.positive_diagonal))?;
        writeln!(f, "PSD                {}", mark(self.positive_semidefinite))?;
        write!(f, "connected          {}", mark(self.connected))
    }
}

/// Checks every structural condition of a weighted undirected graph Laplacian.
pub fn validate_laplacian(m: &Mat) -> Result<LaplacianReport> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension(format!("Laplacian must be square and nonempty, got {:?}", m.shape())));
    }
    let n = m.nrows();
    let symmetry_error = (m - m.transpose()).amax();
    let max_row_sum = (0..n).map(|i| m.row(i).sum().abs().max(m.column(i).sum().abs())).fold(0.0, f64::max);
    let mut max_off_diagonal = f64::NEG_INFINITY;
    let mut positive_diagonal = true;
    for i in 0..n {
        // a single isolated node has no edges and a zero diagonal
        positive_diagonal &= m[(i, i)] > 0.0 || (n == 1 && m[(i, i)] == 0.0);
        for j in 0..n {
            if i != j {
                max_off_diagonal = max_off_diagonal.max(m[(i, j)]);
            }
        }
    }
    if n == 1 {
        max_off_diagonal = 0.0;
    }
    let (vals, _) = linalg::sym_eigen_desc(&linalg::sym(m));
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let zero_tol = STRUCTURE_TOL * scale;
    let positive_semidefinite = vals.iter().all(|&v| v >= -zero_tol);
    let zeros = vals.iter().filter(|v| v.abs() <= zero_tol).count();
    let connected = zeros == 1 && (n == 1 || vals[n - 2] > zero_tol);
    Ok(LaplacianReport {
        square: true,
        symmetric: symmetry_error <= STRUCTURE_TOL,
        zero_row_sums: max_row_sum <= STRUCTURE_TOL,
        nonpositive_off_diagonal: max_off_diagonal <= SIGN_TOL,
        positive_diagonal,
        positive_semidefinite,
        connected,
        symmetry_error,
        max_row_sum,
        max_off_diagonal,
        eigenvalues: vals.iter().copied().collect(),
    })
}

/// Laplacian of a connected weighted undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    m: Mat,
}

impl LaplacianMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        let report = validate_laplacian(&m)?;
        if !report.passed() {
            return Err(Error::InvalidLaplacian(format!("failed: {}", report.failures().join(", "))));
        }
        Ok(Self { m: linalg::sym(&m) })
    }

    /// Builds `L` from undirected edges `(i, j, w)` with 0-based node indices.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = Mat::zeros(nodes, nodes);
        for &(i, j, w) in edges {
            if i >= nodes || j >= nodes || i == j {
                return Err(Error::InvalidLaplacian(format!("bad edge ({i}, {j})")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidLaplacian(format!("edge ({i}, {j}) has weight {w}")));
            }
            m[(i, j)] -= w;
            m[(j, i)] -= w;
            m[(i, i)] += w;
            m[(j, j)] += w;
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn nodes(&self) -> usize {
        self.m.nrows()
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }
}

/// `x' = (I ⊗ A - L ⊗ BC) x + (F ⊗ B) u,  y = (H ⊗ C) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSystem {
    laplacian: LaplacianMatrix,
    f: Mat,
    h: Mat,
    agent: AgentModel,
}

impl NetworkSystem {
    pub fn new(laplacian: LaplacianMatrix, f: Mat, h: Mat, agent: AgentModel) -> Result<Self> {
        let n = laplacian.nodes();
        if f.nrows() != n || f.ncols() == 0 {
            return Err(Error::Dimension(format!("F must be {n}xp, got {:?}", f.shape())));
        }
        if h.ncols() != n || h.nrows() == 0 {
            return Err(Error::Dimension(format!("H must be qx{n}, got {:?}", h.shape())));
        }
        Ok(Self { laplacian, f, h, agent })
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    pub fn f(&self) -> &Mat {
        &self.f
    }

    pub fn h(&self) -> &Mat {
        &self.h
    }

    pub fn agent(&self) -> &AgentModel {
        &self.agent
    }

    pub fn nodes(&self) -> usize {
        self.laplacian.nodes()
    }

    pub fn state_dim(&self) -> usize {
        self.nodes() * self.agent.n()
    }

    pub fn input_dim(&self) -> usize {
        self.f.ncols() * self.agent.m()
    }

    pub fn output_dim(&self) -> usize {
        self.h.nrows() * self.agent.m()
    }

    pub fn state_space(&self) -> StateSpace {
        network_state_space(self.laplacian.matrix(), &self.f, &self.h, &self.agent)
    }
}

/// State space of a network with an arbitrary (possibly non-Laplacian) coupling matrix.
pub fn network_state_space(l: &Mat, f: &Mat, h: &Mat, agent: &AgentModel) -> StateSpace {
    let k = l.nrows();
    let bc = agent.b() * agent.c();
    let a = linalg::kron(&Mat::identity(k, k), agent.a()) - linalg::kron(l, &bc);
    StateSpace::new(a, linalg::kron(f, agent.b()), linalg::kron(h, agent.c())).expect("consistent Kronecker dimensions")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassivityCertificate {
    pub k: Mat,
    pub lmi_residual: f64,
    pub equality_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Passivity {
    Passive(PassivityCertificate),
    NotPassive(String),
}

impl Passivity {
    pub fn is_passive(&self) -> bool {
        matches!(self, Passivity::Passive(_))
    }
}

/// KYP set `{K : A^T K + K A <= 0, B^T K = C, K >= 0}` as an SDP over symmetric `K`.
pub fn kyp_problem(agent: &AgentModel) -> SdpProblem {
    let n = agent.n();
    let a = agent.a().clone();
    let bt = agent.b().transpose();
    SdpProblem::new(vec![n])
        .lmi_nsd(Mat::zeros(n, n), move |k| a.transpose() * k + k * &a)
        .lmi_psd(Mat::zeros(n, n), |k| k.clone())
        .equality(-agent.c().clone(), move |k| &bt * k)
}

/// Searches for a storage matrix certifying passivity.
pub fn check_passivity(agent: &AgentModel) -> Result<Passivity> {
    let sol = kyp_problem(agent).find_feasible(&SdpOptions::default())?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => {
            return Ok(Passivity::NotPassive(sol.certificate.unwrap_or_else(|| "KYP set is empty".into())))
        }
        SdpStatus::Unbounded | SdpStatus::MaxIterations => {
            return Err(Error::Solver(format!("KYP feasibility search ended with {:?}", sol.status)))
        }
    }
    let k = linalg::sym(&sol.matrix);
    let lmi_residual = linalg::max_eig_sym(&(agent.a().transpose() * &k + &k * agent.a()));
    let equality_residual = (agent.c() - agent.b().transpose() * &k).norm();
    let kmin = linalg::min_eig_sym(&k);
    if kmin <= 1e-12 * linalg::max_eig_sym(&k).max(1e-300) {
        return Ok(Passivity::NotPassive(format!(
            "every storage matrix found is singular (smallest eigenvalue {kmin:.3e})"
        )));
    }
    if lmi_residual > KYP_TOL || equality_residual > KYP_TOL {
        return Err(Error::Solver(format!(
            "KYP certificate residuals too large (lmi {lmi_residual:.3e}, equality {equality_residual:.3e})"
        )));
    }
    Ok(Passivity::Passive(PassivityCertificate { k, lmi_residual, equality_residual }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimalityReport {
    pub controllability_rank: usize,
    pub observability_rank: usize,
    pub order: usize,
}

impl MinimalityReport {
    pub fn minimal(&self) -> bool {
        self.controllability_rank == self.order && self.observability_rank == self.order
    }
}

pub fn check_minimality(agent: &AgentModel) -> MinimalityReport {
    MinimalityReport {
        controllability_rank: lti::controllability_rank(agent.a(), agent.b(), RANK_TOL),
        observability_rank: lti::observability_rank(agent.a(), agent.c(), RANK_TOL),
        order: agent.n(),
    }
}

/// Connected graph with observable agents.
pub fn sync_hypotheses(l: &Mat, agent: &AgentModel) -> bool {
    let connected = validate_laplacian(l).map(|r| r.connected).unwrap_or(false);
    let obs = lti::observability_rank(agent.a(), agent.c(), RANK_TOL);
    connected && obs == agent.n() && agent.c().amax() > 0.0
}

pub fn check_sync_hypotheses(net: &NetworkSystem) -> bool {
    sync_hypotheses(net.laplacian().matrix(), net.agent())
}
