use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{Orientation, SolverSummary};
use crate::linalg::Mat;
use crate::model::{AgentModel, LaplacianMatrix, NetworkSystem};
use crate::pipeline::{Prepared, Reduction};

/// Matrix as a list of rows.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LaplacianSpec {
    Dense(Rows),
    Edges(Vec<Edge>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpecFile {
    pub laplacian: LaplacianSpec,
    #[serde(rename = "F")]
    pub f: Rows,
    #[serde(rename = "H")]
    pub h: Rows,
    pub agent: AgentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// Input errors: the document is malformed rather than violating a model assumption.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Shape(String),
}

pub fn to_mat(name: &str, rows: &Rows) -> std::result::Result<Mat, InputError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(InputError::Shape(format!("{name} has rows of different lengths")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(InputError::Shape(format!("{name} has non-finite entries")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn from_mat(m: &Mat) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Parsed matrices before model validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawNetwork {
    pub laplacian: Mat,
    pub f: Mat,
    pub h: Mat,
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub labels: Option<Vec<String>>,
}

impl NetworkSpecFile {
    pub fn parse(text: &str) -> std::result::Result<Self, InputError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| InputError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn from_network(net: &NetworkSystem) -> Self {
        Self {
            laplacian: LaplacianSpec::Dense(from_mat(net.laplacian().matrix())),
            f: from_mat(net.f()),
            h: from_mat(net.h()),
            agent: AgentSpec::from_agent(net.agent()),
            labels: None,
        }
    }

    /// Converts to matrices, checking only that they are rectangular and consistently sized.
    pub fn raw(&self) -> std::result::Result<RawNetwork, InputError> {
        let f = to_mat("F", &self.f)?;
        let h = to_mat("H", &self.h)?;
        let nodes = f.nrows();
        let laplacian = match &self.laplacian {
            LaplacianSpec::Dense(rows) => to_mat("laplacian", rows)?,
            LaplacianSpec::Edges(edges) => {
                let mut m = Mat::zeros(nodes, nodes);
                for e in edges {
                    if e.i >= nodes || e.j >= nodes || e.i == e.j {
                        return Err(InputError::Shape(format!(
                            "edge ({}, {}) is not between two of {nodes} nodes",
                            e.i, e.j
                        )));
                    }
                    if !e.weight.is_finite() {
                        return Err(InputError::Shape(format!("edge ({}, {}) has a non-finite weight", e.i, e.j)));
                    }
                    m[(e.i, e.j)] -= e.weight;
                    m[(e.j, e.i)] -= e.weight;
                    m[(e.i, e.i)] += e.weight;
                    m[(e.j, e.j)] += e.weight;
                }
                m
            }
        };
        let a = to_mat("agent.A", &self.agent.a)?;
        let b = to_mat("agent.B", &self.agent.b)?;
        let c = to_mat("agent.C", &self.agent.c)?;
        let n = a.nrows();
        let checks = [
            (
                laplacian.is_square() && laplacian.nrows() == nodes,
                "laplacian must be N x N with N the number of rows of F",
            ),
            (h.ncols() == nodes, "H must have N columns"),
            (nodes > 0 && f.ncols() > 0 && h.nrows() > 0, "F and H must be nonempty"),
            (a.is_square() && n > 0, "agent.A must be square and nonempty"),
            (b.nrows() == n && b.ncols() > 0, "agent.B must be n x m"),
            (c.ncols() == n && c.nrows() == b.ncols(), "agent.C must be m x n"),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(InputError::Shape((*msg).to_string()));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != nodes {
                return Err(InputError::Shape(format!("{} labels for {nodes} nodes", labels.len())));
            }
        }
        Ok(RawNetwork { laplacian, f, h, a, b, c, labels: self.labels.clone() })
    }
}

impl AgentSpec {
    pub fn from_agent(agent: &AgentModel) -> Self {
        Self { a: from_mat(agent.a()), b: from_mat(agent.b()), c: from_mat(agent.c()) }
    }

    pub fn to_agent(&self) -> Result<AgentModel> {
        let conv = |name: &str, rows: &Rows| to_mat(name, rows).map_err(|e| Error::Dimension(e.to_string()));
        AgentModel::new(conv("A", &self.a)?, conv("B", &self.b)?, conv("C", &self.c)?)
    }
}

impl RawNetwork {
    pub fn agent(&self) -> Result<AgentModel> {
        AgentModel::new(self.a.clone(), self.b.clone(), self.c.clone())
    }

    pub fn network(&self) -> Result<NetworkSystem> {
        NetworkSystem::new(LaplacianMatrix::new(self.laplacian.clone())?, self.f.clone(), self.h.clone(), self.agent()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub name: String,
    pub status: String,
    pub value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub facial_reductions: usize,
    pub warnings: Vec<String>,
}

impl From<&SolverSummary> for SolverDiagnostics {
    fn from(s: &SolverSummary) -> Self {
        Self {
            name: s.name.to_string(),
            status: format!("{:?}", s.status),
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub orientation: String,
    pub solvers: Vec<SolverDiagnostics>,
    pub controllability_residual: f64,
    pub observability_residual: f64,
    pub similarity_residual: f64,
    pub admissible_k: Vec<usize>,
    pub admissible_r: Vec<usize>,
    pub stable_error: f64,
    pub average_error: Option<f64>,
    pub agent_error: Option<f64>,
    pub reduced_agent_passive: Option<bool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReportFile {
    pub k: usize,
    pub r: usize,
    #[serde(rename = "L_hat")]
    pub l_hat: Rows,
    #[serde(rename = "F_hat")]
    pub f_hat: Rows,
    #[serde(rename = "H_hat")]
    pub h_hat: Rows,
    pub agent_hat: AgentSpec,
    #[serde(rename = "sigma_G")]
    pub sigma_g: Vec<f64>,
    #[serde(rename = "sigma_D")]
    pub sigma_d: Vec<f64>,
    pub gamma: f64,
    pub gamma_a: f64,
    pub bound_case: String,
    pub total_bound: Option<f64>,
    pub a_priori: bool,
    pub actual_error: Option<f64>,
    pub sync_preserved: bool,
    pub diagnostics: Diagnostics,
}

impl ReductionReportFile {
    pub fn new(prep: &Prepared, red: &Reduction, reduced_agent_passive: Option<bool>) -> Self {
        let e = &red.errors;
        Self {
            k: red.k,
            r: red.r,
            l_hat: from_mat(red.realized.l_hat.matrix()),
            f_hat: from_mat(&red.realized.f_hat),
            h_hat: from_mat(&red.realized.h_hat),
            agent_hat: AgentSpec::from_agent(&red.agent_hat),
            sigma_g: from_vec(prep.balanced.sigma_g()),
            sigma_d: from_vec(prep.balanced.sigma_d()),
            gamma: e.gamma,
            gamma_a: e.gamma_a,
            bound_case: e.case.label().to_string(),
            total_bound: e.total_bound,
            a_priori: e.a_priori,
            actual_error: e.actual_error,
            sync_preserved: red.sync_preserved,
            diagnostics: Diagnostics {
                orientation: match prep.gramians.orientation {
                    Orientation::Standard => "standard".into(),
                    Orientation::Dual => "dual".into(),
                },
                solvers: prep.gramians.solvers.iter().map(SolverDiagnostics::from).collect(),
                controllability_residual: prep.residuals.controllability,
                observability_residual: prep.residuals.observability,
                similarity_residual: red.realized.similarity_residual,
                admissible_k: prep.admissible_k(),
                admissible_r: prep.admissible_r(),
                stable_error: e.stable_error,
                average_error: e.average_error,
                agent_error: e.agent_error,
                reduced_agent_passive,
                note: e.note.clone(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn parse(text: &str) -> std::result::Result<Self, InputError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| InputError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Reduced network described by the report.
    pub fn network(&self) -> Result<NetworkSystem> {
        let conv = |name: &str, rows: &Rows| to_mat(name, rows).map_err(|e| Error::Dimension(e.to_string()));
        NetworkSystem::new(
            LaplacianMatrix::new(conv("L_hat", &self.l_hat)?)?,
            conv("F_hat", &self.f_hat)?,
            conv("H_hat", &self.h_hat)?,
            self.agent_hat.to_agent()?,
        )
    }
}
