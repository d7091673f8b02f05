mod common;

use common::{grid_gap, log_grid, par_map, random_network, Averages};

use netbt::analyze::BoundCase;
use netbt::decompose;
use netbt::error::Error;
use netbt::gramian::Orientation;
use netbt::manipulator;
use netbt::model;
use netbt::pipeline;

#[test]
fn general_case_bound_holds_on_random_networks() {
    let results = par_map(30, |i| {
        let seed = 1000 + i as u64;
        let net = random_network(seed, Averages::Generic);
        let prep = pipeline::prepare(&net, Orientation::Standard).unwrap();
        let n = net.agent().n();
        let mut checked = 0;
        for &r in prep.admissible_r().iter().filter(|&&r| r < n) {
            for &k in &prep.admissible_k() {
                let red = prep.reduce(k, r).unwrap();
                assert_eq!(red.errors.case, BoundCase::General);
                assert!(!red.errors.a_priori);
                if let (Some(actual), Some(bound)) = (red.errors.actual_error, red.errors.total_bound) {
                    assert!(actual <= bound + 1e-6, "seed {seed} k {k} r {r}: {actual} > {bound}");
                    checked += 1;
                }
            }
        }
        checked
    });
    assert!(results.iter().sum::<usize>() > 50);
}

#[test]
fn split_reproduces_the_network() {
    for seed in 0..20 {
        let net = random_network(seed, if seed % 2 == 0 { Averages::Generic } else { Averages::ZeroOutputAverage });
        let (avg, stable) = decompose::split(&net).unwrap();
        let err = decompose::split_residual(&net, &avg, &stable, &log_grid(30)).unwrap();
        assert!(err <= 1e-9, "seed {seed}: {err}");
        if seed % 2 == 1 {
            assert!(avg.is_silent(1e-12));
        }
    }
}

#[test]
fn dual_orientation_gives_a_valid_bound() {
    let net = manipulator::manipulator_network();
    let red = pipeline::reduce_network(&net, 3, 2, Orientation::Dual).unwrap();
    let actual = red.errors.actual_error.unwrap();
    assert!(actual <= red.errors.total_bound.unwrap() + 1e-6);
    assert!(red.sync_preserved);
    let std = pipeline::reduce_network(&net, 3, 2, Orientation::Standard).unwrap();
    assert!((std.errors.actual_error.unwrap() - 0.0295).abs() < 3e-3);
}

#[test]
fn identity_reduction_is_exact() {
    for seed in [3u64, 8, 15] {
        let net = random_network(seed, Averages::Generic);
        let prep = pipeline::prepare(&net, Orientation::Standard).unwrap();
        let red = prep.reduce(net.nodes(), net.agent().n()).unwrap();
        assert_eq!(red.errors.gamma, 0.0);
        assert_eq!(red.errors.case, BoundCase::NoAgentReduction);
        let gap = grid_gap(&net.state_space(), &red.realized.state_space(), &log_grid(50));
        assert!(gap <= 1e-7, "seed {seed}: {gap}");
    }
}

#[test]
fn reduced_network_validates_again() {
    let net = manipulator::manipulator_network();
    let red = pipeline::reduce_network(&net, 3, 2, Orientation::Standard).unwrap();
    let reduced = red.network().unwrap();
    assert!(model::validate_laplacian(reduced.laplacian().matrix()).unwrap().passed());
    assert!(model::check_sync_hypotheses(&reduced));
    assert!(red.reduced_agent_passive().unwrap());
}

#[test]
fn tau_pairs_make_odd_agent_orders_inadmissible() {
    let net = manipulator::manipulator_network();
    let prep = pipeline::prepare(&net, Orientation::Standard).unwrap();
    for r in [1, 3, 5, 7] {
        assert!(matches!(prep.reduce(3, r), Err(Error::InadmissibleOrder { .. })));
    }
}
