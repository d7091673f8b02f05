#![allow(dead_code)]

use nalgebra::DMatrix;
use netbt::model::{AgentModel, LaplacianMatrix, NetworkSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = DMatrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Port-Hamiltonian agent `A = (J - R)Q`, `C = B^T Q` with `Q > 0`, `R > 0`.
pub fn random_agent(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AgentModel {
    loop {
        let g = uniform(rng, n, n);
        let q = &g * g.transpose() + Mat::identity(n, n) * 0.5;
        let s = uniform(rng, n, n) * 2.0;
        let j = &s - s.transpose();
        let e = uniform(rng, n, n);
        let r = &e * e.transpose() * 0.5 + Mat::identity(n, n) * 0.1;
        let b = uniform(rng, n, m);
        let a = (j - r) * &q;
        let c = b.transpose() * &q;
        let agent = AgentModel::new(a, b, c).expect("consistent sizes");
        if netbt::model::check_minimality(&agent).minimal() {
            return agent;
        }
    }
}

/// Connected graph: random spanning tree plus random extra edges, weights in `[0.5, 2]`.
pub fn random_laplacian(rng: &mut ChaCha8Rng, nodes: usize) -> LaplacianMatrix {
    let mut edges = Vec::new();
    for i in 1..nodes {
        edges.push((rng.gen_range(0..i), i, rng.gen_range(0.5..2.0)));
    }
    for i in 0..nodes {
        for j in i + 1..nodes {
            if rng.gen_bool(0.3) && !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                edges.push((i, j, rng.gen_range(0.5..2.0)));
            }
        }
    }
    LaplacianMatrix::from_edges(nodes, &edges).expect("connected by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averages {
    /// Generic `F`, `H`.
    Generic,
    /// `H 1 = 0`.
    ZeroOutputAverage,
}

/// Random passive network with `N` in `[3, 8]` and `n` in `[2, 6]`.
pub fn random_network(seed: u64, averages: Averages) -> NetworkSystem {
    let mut rng = rng(seed);
    let nodes = rng.gen_range(3..=8);
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=n.min(2));
    let p = rng.gen_range(1..=2);
    let q = rng.gen_range(1..=2);
    let agent = random_agent(&mut rng, n, m);
    let l = random_laplacian(&mut rng, nodes);
    let f = uniform(&mut rng, nodes, p);
    let mut h = uniform(&mut rng, q, nodes);
    if averages == Averages::ZeroOutputAverage {
        let center = Mat::identity(nodes, nodes) - Mat::from_element(nodes, nodes, 1.0 / nodes as f64);
        h *= center;
    }
    NetworkSystem::new(l, f, h, agent).expect("consistent sizes")
}

pub fn log_grid(points: usize) -> Vec<f64> {
    netbt::analyze::log_grid(1e-2, 1e2, points).unwrap()
}

/// `max_ω ‖G_1(jω) - G_2(jω)‖₂` on the grid.
pub fn grid_gap(a: &netbt::lti::StateSpace, b: &netbt::lti::StateSpace, grid: &[f64]) -> f64 {
    grid.iter().map(|&w| netbt::lti::cmat_norm2(&(a.eval_jw(w).unwrap() - b.eval_jw(w).unwrap()))).fold(0.0, f64::max)
}

/// Runs `f` over `0..count` on all available cores and returns the results in order.
pub fn par_map<T: Send, F: Fn(usize) -> T + Sync>(count: usize, f: F) -> Vec<T> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(count.max(1));
    let mut out: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(threads.max(1)).max(1);
    std::thread::scope(|s| {
        for (c, slot) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            s.spawn(move || {
                for (i, v) in slot.iter_mut().enumerate() {
                    *v = Some(f(c * chunk + i));
                }
            });
        }
    });
    out.into_iter().map(|v| v.expect("filled")).collect()
}
