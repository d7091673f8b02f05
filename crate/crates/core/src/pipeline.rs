use crate::analyze::{self, ErrorReport};
use crate::decompose::{self, AverageModule, StableSubsystem};
use crate::error::{Error, Result};
use crate::gramian::{self, GramianResiduals, GramianSet, Orientation};
use crate::model::{self, AgentModel, NetworkSystem};
use crate::realize::{self, RealizedReduction};
use crate::reduce::{self, BalancedForm, IntermediateReduced, ReducedGraph};

/// Everything that depends on the network but not on the retained orders.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub net: NetworkSystem,
    pub avg: AverageModule,
    pub stable: StableSubsystem,
    pub gramians: GramianSet,
    pub residuals: GramianResiduals,
    pub balanced: BalancedForm,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub k: usize,
    pub r: usize,
    pub graph: ReducedGraph,
    pub agent_hat: AgentModel,
    pub intermediate: IntermediateReduced,
    pub realized: RealizedReduction,
    pub errors: ErrorReport,
    pub sync_preserved: bool,
}

/// Splits the network, computes and checks the generalized Gramians and balances both pairs.
pub fn prepare(net: &NetworkSystem, orientation: Orientation) -> Result<Prepared> {
    let (avg, stable) = decompose::split(net)?;
    let gramians = gramian::compute_gramians(&stable, orientation)?;
    let residuals = gramian::verify_gramians(&stable, &gramians);
    if !residuals.passed() {
        return Err(Error::Numerical(format!(
            "Gramian inequality residuals {:.3e} / {:.3e}",
            residuals.controllability, residuals.observability
        )));
    }
    let balanced = reduce::balance(&gramians)?;
    Ok(Prepared { net: net.clone(), avg, stable, gramians, residuals, balanced })
}

impl Prepared {
    pub fn admissible_k(&self) -> Vec<usize> {
        self.balanced.admissible_k()
    }

    pub fn admissible_r(&self) -> Vec<usize> {
        self.balanced.admissible_r()
    }

    /// Reduced network with `k` nodes and agents of order `r`.
    pub fn reduce(&self, k: usize, r: usize) -> Result<Reduction> {
        self.balanced.check_k(k)?;
        self.balanced.check_r(r)?;
        let graph = reduce::truncate_network(&self.balanced, &self.gramians, &self.stable, k)?;
        let agent_hat = reduce::truncate_agent(&self.balanced, self.net.agent(), r)?;
        let intermediate = reduce::assemble(&graph, &self.net, agent_hat.clone());
        let realized = realize::realize(&intermediate)?;
        let errors =
            analyze::bound_total(&self.net, &self.avg, &self.stable, &self.balanced, &graph, &agent_hat, k, r)?;
        let sync_preserved = realize::verify_sync_preservation(&realized);
        Ok(Reduction { k, r, graph, agent_hat, intermediate, realized, errors, sync_preserved })
    }
}

/// One-shot reduction.
pub fn reduce_network(net: &NetworkSystem, k: usize, r: usize, orientation: Orientation) -> Result<Reduction> {
    prepare(net, orientation)?.reduce(k, r)
}

impl Reduction {
    pub fn network(&self) -> Result<NetworkSystem> {
        NetworkSystem::new(
            self.realized.l_hat.clone(),
            self.realized.f_hat.clone(),
            self.realized.h_hat.clone(),
            self.agent_hat.clone(),
        )
    }

    pub fn reduced_agent_passive(&self) -> Result<bool> {
        Ok(model::check_passivity(&self.agent_hat)?.is_passive())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, from_rows};
    use crate::manipulator;
    use nalgebra::Complex;

    #[test]
    fn manipulator_end_to_end() {
        let net = manipulator::manipulator_network();
        let prep = prepare(&net, Orientation::Standard).unwrap();
        assert_eq!(prep.admissible_k(), vec![1, 2, 3, 6]);
        assert_eq!(prep.admissible_r(), vec![2, 4, 6, 8]);
        let red = prep.reduce(3, 2).unwrap();
        assert!((red.errors.gamma - 0.077094).abs() < 5e-6);
        let actual = red.errors.actual_error.unwrap();
        assert!((actual - 0.029539).abs() < 5e-6, "{actual}");
        let expect = from_rows(&[&[5.0, -1.0, -4.0], &[-1.0, 2.0, -1.0], &[-4.0, -1.0, 5.0]]) / 3.0;
        let mut got: Vec<f64> = linalg::sym_eigen_desc(red.realized.l_hat.matrix()).0.iter().copied().collect();
        let mut want: Vec<f64> = linalg::sym_eigen_desc(&expect).0.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8);
        }
        for w in [0.1, 1.0, 3.0] {
            let s = Complex::new(0.0, w);
            let g = red.agent_hat.state_space().eval(s).unwrap()[(0, 0)];
            let want = s * 2.0 / (s * s + s * 4.0 + 2.0);
            assert!((g - want).norm() < 1e-8);
        }
        assert!(red.sync_preserved);
    }

    #[test]
    fn inadmissible_orders_rejected() {
        let net = manipulator::manipulator_network();
        let prep = prepare(&net, Orientation::Standard).unwrap();
        assert!(matches!(prep.reduce(4, 2), Err(Error::InadmissibleOrder { .. })));
        assert!(matches!(prep.reduce(3, 3), Err(Error::InadmissibleOrder { .. })));
    }
}
