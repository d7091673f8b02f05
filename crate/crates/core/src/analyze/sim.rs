use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lti::StateSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
}

impl SimResult {
    /// `max_{i,j} ‖x_i - x_j‖` per sample for a network of `nodes` agents with `n` states each.
    pub fn sync_error(&self, nodes: usize, n: usize) -> Vec<f64> {
        self.states.iter().map(|x| sync_metric(x, nodes, n)).collect()
    }
}

/// Uniform initial state on `[-1, 1]^n` from a fixed seed.
pub fn random_initial(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0))
}

pub fn sync_metric(x: &DVector<f64>, nodes: usize, n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..nodes {
        for j in i + 1..nodes {
            let d = x.rows(i * n, n) - x.rows(j * n, n);
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Trapezoidal integration of `x' = Ax + Bu`, `y = Cx`. Every `decimate`-th sample is stored.
pub fn simulate<F>(
    sys: &StateSpace,
    input: F,
    x0: &DVector<f64>,
    horizon: f64,
    step: f64,
    decimate: usize,
) -> Result<SimResult>
where
    F: Fn(f64) -> DVector<f64>,
{
    if !(step.is_finite() && step > 0.0) || !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Dimension(format!("invalid step {step} or horizon {horizon}")));
    }
    if decimate == 0 {
        return Err(Error::Dimension("decimation factor must be positive".into()));
    }
    let n = sys.order();
    if x0.len() != n {
        return Err(Error::Dimension(format!("initial state has length {}, expected {n}", x0.len())));
    }
    let steps = (horizon / step).round() as usize;
    let half = Mat::identity(n, n) + &sys.a * (step / 2.0);
    let lhs = Mat::identity(n, n) - &sys.a * (step / 2.0);
    let lhs_inv = linalg::inverse(&lhs)?;
    let propagator: DMatrix<f64> = &lhs_inv * half;
    let input_gain: DMatrix<f64> = &lhs_inv * &sys.b * (step / 2.0);

    let check = |u: &DVector<f64>| -> Result<()> {
        if u.len() != sys.inputs() {
            return Err(Error::Dimension(format!("input has length {}, expected {}", u.len(), sys.inputs())));
        }
        Ok(())
    };

    let mut x = x0.clone();
    let mut u = input(0.0);
    check(&u)?;
    let mut res = SimResult { times: Vec::new(), states: Vec::new(), outputs: Vec::new() };
    for k in 0..=steps {
        let t = k as f64 * step;
        if k % decimate == 0 || k == steps {
            res.times.push(t);
            res.outputs.push(&sys.c * &x);
            res.states.push(x.clone());
        }
        if k == steps {
            break;
        }
        let u_next = input(t + step);
        check(&u_next)?;
        x = &propagator * &x + &input_gain * (&u + &u_next);
        u = u_next;
    }
    Ok(res)
}

/// Simulates a networked system and returns the trajectory with the per-sample synchronization error.
pub fn simulate_network<F>(
    sys: &StateSpace,
    nodes: usize,
    input: F,
    x0: &DVector<f64>,
    horizon: f64,
    step: f64,
    decimate: usize,
) -> Result<(SimResult, Vec<f64>)>
where
    F: Fn(f64) -> DVector<f64>,
{
    if nodes == 0 || !sys.order().is_multiple_of(nodes) {
        return Err(Error::Dimension(format!("order {} is not a multiple of {nodes} nodes", sys.order())));
    }
    let res = simulate(sys, input, x0, horizon, step, decimate)?;
    let sync = res.sync_error(nodes, sys.order() / nodes);
    Ok((res, sync))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64) -> StateSpace {
        StateSpace::new(Mat::from_element(1, 1, a), Mat::from_element(1, 1, 1.0), Mat::from_element(1, 1, 1.0)).unwrap()
    }

    #[test]
    fn free_decay() {
        let sys = scalar(-1.0);
        let x0 = DVector::from_element(1, 1.0);
        let r = simulate(&sys, |_| DVector::zeros(1), &x0, 1.0, 1e-3, 1).unwrap();
        let last = r.states.last().unwrap()[0];
        assert!((last - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(r.times.len(), 1001);
    }

    #[test]
    fn step_response_settles() {
        let sys = scalar(-2.0);
        let r = simulate(&sys, |_| DVector::from_element(1, 1.0), &DVector::zeros(1), 10.0, 1e-2, 10).unwrap();
        assert!((r.outputs.last().unwrap()[0] - 0.5).abs() < 1e-6);
        assert_eq!(r.times.len(), 101);
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = scalar(-1.0);
        let x0 = DVector::zeros(1);
        assert!(simulate(&sys, |_| DVector::zeros(1), &x0, 1.0, 0.0, 1).is_err());
        assert!(simulate(&sys, |_| DVector::zeros(1), &x0, f64::NAN, 0.1, 1).is_err());
        assert!(simulate(&sys, |_| DVector::zeros(2), &x0, 1.0, 0.1, 1).is_err());
        assert!(simulate(&sys, |_| DVector::zeros(1), &DVector::zeros(2), 1.0, 0.1, 1).is_err());
    }

    #[test]
    fn sync_metric_pairs() {
        let x = DVector::from_row_slice(&[0.0, 0.0, 3.0, 4.0, 1.0, 0.0]);
        assert!((sync_metric(&x, 3, 2) - 5.0).abs() < 1e-15);
    }
}
