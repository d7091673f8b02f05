//! Networked robotic manipulators used as the reference example.

use crate::error::Result;
use crate::linalg::{self, Mat};
use crate::model::{AgentModel, LaplacianMatrix, NetworkSystem};

/// Mechanical agent `A = [0, M^-1; -I, -D M^-1]`, `C = B^T blkdiag(I, M^-1)` with actuation `b`.
pub fn mechanical_agent(mass: &Mat, damping: &Mat, b: &Mat) -> Result<AgentModel> {
    let d = mass.nrows();
    let mi = linalg::inverse(mass)?;
    let mut a = Mat::zeros(2 * d, 2 * d);
    a.view_mut((0, d), (d, d)).copy_from(&mi);
    a.view_mut((d, 0), (d, d)).copy_from(&(-Mat::identity(d, d)));
    a.view_mut((d, d), (d, d)).copy_from(&(-(damping * &mi)));
    let c = b.transpose() * linalg::block_diag(&Mat::identity(d, d), &mi);
    AgentModel::new(a, b.clone(), c)
}

/// Eight-state manipulator with `M = I/2` and tridiagonal damping, actuated at the first velocity.
pub fn manipulator_agent() -> AgentModel {
    let mass = Mat::identity(4, 4) * 0.5;
    let damping = linalg::from_rows(&[
        &[2.0, -1.0, 0.0, 0.0],
        &[-1.0, 4.0, -2.0, 0.0],
        &[0.0, -2.0, 4.0, -1.0],
        &[0.0, 0.0, -1.0, 2.0],
    ]);
    let mut b = Mat::zeros(8, 1);
    b[(4, 0)] = 1.0;
    mechanical_agent(&mass, &damping, &b).expect("well-formed example")
}

/// Unit-weight cycle on `n` nodes.
pub fn cycle_laplacian(n: usize) -> Result<LaplacianMatrix> {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    LaplacianMatrix::from_edges(n, &edges)
}

/// Six manipulators on a cycle, input at nodes 1 and 2, output `y1 - y3`.
pub fn manipulator_network() -> NetworkSystem {
    let l = cycle_laplacian(6).expect("cycle is connected");
    let f = Mat::from_column_slice(6, 1, &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
    let h = Mat::from_row_slice(1, 6, &[1.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
    NetworkSystem::new(l, f, h, manipulator_agent()).expect("consistent example")
}
