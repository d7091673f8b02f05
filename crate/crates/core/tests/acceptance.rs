//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_network, Averages};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netbt::analyze::{self, bound_gamma, BoundCase};
use netbt::gramian::Orientation;
use netbt::io::NetworkSpecFile;
use netbt::linalg;
use netbt::model::{self, NetworkSystem};
use netbt::pipeline::{self, Prepared, Reduction};
use netbt::realize::{laplacian_from_spectrum, SpectrumTarget};

const SWEEP_NETWORKS: u64 = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn example() -> NetworkSystem {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/paper_sec4.json");
    NetworkSpecFile::load(&path).expect("bundled example").raw().expect("shape").network().expect("valid network")
}

fn grid50() -> Vec<f64> {
    analyze::log_grid(1e-2, 1e2, 50).unwrap()
}

fn gap(a: &netbt::lti::StateSpace, b: &netbt::lti::StateSpace, grid: &[f64]) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &w in grid {
        let ga = a.eval_jw(w).unwrap();
        let gb = b.eval_jw(w).unwrap();
        worst = worst.max(netbt::lti::cmat_norm2(&(&ga - gb)));
        scale = scale.max(netbt::lti::cmat_norm2(&ga));
    }
    (worst, scale)
}

struct Example {
    prep: Prepared,
    red: Reduction,
    elapsed: Duration,
}

fn run_example() -> Example {
    let t0 = Instant::now();
    let net = example();
    let prep = pipeline::prepare(&net, Orientation::Standard).expect("prepare");
    let red = prep.reduce(3, 2).expect("reduce");
    Example { prep, red, elapsed: t0.elapsed() }
}

fn criterion1(ex: &Example) -> Outcome {
    let actual = ex.red.errors.actual_error.unwrap_or(f64::NAN);
    let bound = ex.red.errors.total_bound.unwrap_or(f64::NAN);
    let pass =
        (actual - 0.0295).abs() <= 0.003 && (bound - 0.0773).abs() <= 0.05 * 0.0773 && ex.elapsed.as_secs_f64() <= 10.0;
    outcome(pass, format!("actual {actual:.6}, bound {bound:.6}, runtime {:.2}s", ex.elapsed.as_secs_f64()))
}

fn criterion2(ex: &Example) -> Outcome {
    let got = &ex.prep.stable.spec.lambda_bar;
    let want = [4.0, 3.0, 3.0, 1.0, 1.0];
    let err = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(got.len() == 5 && err <= 1e-9, format!("eigenvalues {:?}, max error {err:.2e}", got.as_slice()))
}

fn criterion3(ex: &Example) -> Outcome {
    let want = linalg::from_rows(&[&[5.0, -1.0, -4.0], &[-1.0, 2.0, -1.0], &[-4.0, -1.0, 5.0]]) / 3.0;
    let got = ex.red.realized.l_hat.matrix();
    let err = if got.shape() == want.shape() { (got - &want).amax() } else { f64::INFINITY };
    outcome(err <= 1e-4, format!("max entry error {err:.2e}"))
}

fn criterion4(ex: &Example) -> Outcome {
    let ss = ex.red.agent_hat.state_space();
    let mut err: f64 = 0.0;
    for w in grid50() {
        let s = Complex64::new(0.0, w);
        let g = ss.eval(s).unwrap()[(0, 0)];
        err = err.max((g - s * 2.0 / (s * s + s * 4.0 + 2.0)).norm());
    }
    outcome(err <= 1e-3, format!("order {}, max deviation {err:.2e}", ss.order()))
}

#[derive(Default)]
struct Sweep {
    networks: usize,
    pairs: usize,
    failures: Vec<String>,
    violations: Vec<String>,
    worst_margin: f64,
    worst_imag: f64,
    min_real: f64,
    lambda_count: usize,
    agents_checked: usize,
    agents_not_passive: Vec<String>,
    sync_lost: Vec<String>,
    elapsed: Duration,
}

/// Even seeds centre `H` so the average module is silent; odd seeds are generic and keep the agent order.
fn sweep() -> Sweep {
    let t0 = Instant::now();
    let mut s = Sweep { worst_margin: f64::NEG_INFINITY, min_real: f64::INFINITY, ..Default::default() };
    for seed in 0..SWEEP_NETWORKS {
        let zero_avg = seed % 2 == 0;
        let net = random_network(seed, if zero_avg { Averages::ZeroOutputAverage } else { Averages::Generic });
        let orientation = if seed % 3 == 0 { Orientation::Dual } else { Orientation::Standard };
        let n = net.agent().n();
        let prep = match pipeline::prepare(&net, orientation) {
            Ok(p) => p,
            Err(e) => {
                s.failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        s.networks += 1;
        let rs: Vec<usize> = if zero_avg { prep.admissible_r() } else { vec![n] };
        for &r in &rs {
            let mut agent_checked = false;
            for &k in &prep.admissible_k() {
                s.pairs += 1;
                let red = match prep.reduce(k, r) {
                    Ok(red) => red,
                    Err(e) => {
                        s.failures.push(format!("seed {seed} k {k} r {r}: {e}"));
                        continue;
                    }
                };
                let e = &red.errors;
                if !matches!(e.case, BoundCase::NoAgentReduction | BoundCase::ZeroAverage) {
                    s.failures.push(format!("seed {seed} k {k} r {r}: unexpected case {}", e.case.label()));
                }
                match (e.actual_error, e.total_bound) {
                    (Some(a), Some(b)) => {
                        s.worst_margin = s.worst_margin.max(a - b);
                        if a > b + 1e-6 {
                            s.violations.push(format!("seed {seed} k {k} r {r}: {a:.6e} > {b:.6e}"));
                        }
                    }
                    _ => s.violations.push(format!("seed {seed} k {k} r {r}: no bound")),
                }
                if red.graph.lambda_hat.nrows() > 0 {
                    for z in linalg::eigenvalues(&red.graph.lambda_hat).unwrap() {
                        s.lambda_count += 1;
                        s.worst_imag = s.worst_imag.max(z.im.abs());
                        s.min_real = s.min_real.min(z.re);
                    }
                }
                if !red.sync_preserved {
                    s.sync_lost.push(format!("seed {seed} k {k} r {r}"));
                }
                if !agent_checked {
                    agent_checked = true;
                    s.agents_checked += 1;
                    if !matches!(red.reduced_agent_passive(), Ok(true)) {
                        s.agents_not_passive.push(format!("seed {seed} r {r}"));
                    }
                }
            }
        }
    }
    s.elapsed = t0.elapsed();
    s
}

fn first(v: &[String]) -> String {
    v.first().cloned().unwrap_or_default()
}

fn criterion5(s: &Sweep) -> Outcome {
    let pass = s.networks as u64 >= SWEEP_NETWORKS
        && s.failures.is_empty()
        && s.violations.is_empty()
        && s.elapsed.as_secs_f64() <= 300.0;
    let mut detail = format!(
        "{} networks, {} pairs, worst actual - bound {:.2e}, runtime {:.1}s",
        s.networks,
        s.pairs,
        s.worst_margin,
        s.elapsed.as_secs_f64()
    );
    if !s.failures.is_empty() {
        detail += &format!(", {} failures (first: {})", s.failures.len(), first(&s.failures));
    }
    if !s.violations.is_empty() {
        detail += &format!(", {} violations (first: {})", s.violations.len(), first(&s.violations));
    }
    outcome(pass, detail)
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for trial in 0..1000 {
        let n = rng.gen_range(2..=12);
        let mut lams = vec![0.0];
        while lams.len() < n {
            let v: f64 = rng.gen_range(0.1..10.0);
            lams.push(v);
            if lams.len() < n && rng.gen_bool(0.2) {
                lams.push(v);
            }
        }
        let target = SpectrumTarget::from_unsorted(lams).unwrap();
        let l = match laplacian_from_spectrum(&target) {
            Ok(l) => l,
            Err(e) => {
                bad.push(format!("trial {trial}: {e}"));
                continue;
            }
        };
        let m = l.matrix();
        if !model::validate_laplacian(m).unwrap().passed() {
            bad.push(format!("trial {trial}: structural check"));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && -m[(i, j)] <= 0.0 {
                    bad.push(format!("trial {trial}: weight ({i}, {j}) = {}", -m[(i, j)]));
                }
            }
        }
        let mut got: Vec<f64> = linalg::sym_eigen_desc(m).0.iter().copied().collect();
        let mut want = target.lambdas().to_vec();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        let scale = want.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
        if err > 1e-8 {
            bad.push(format!("trial {trial}: spectrum error {err:.2e}"));
        }
    }
    let mut detail = format!("1000 spectra, worst relative spectrum error {worst:.2e}");
    if !bad.is_empty() {
        detail += &format!(", {} problems (first: {})", bad.len(), bad[0]);
    }
    outcome(bad.is_empty(), detail)
}

fn criterion7(s: &Sweep) -> Outcome {
    let pass = s.networks as u64 >= SWEEP_NETWORKS && s.worst_imag <= 1e-9 && s.min_real > 0.0;
    outcome(
        pass,
        format!("{} eigenvalues, max |imag| {:.2e}, min real {:.4}", s.lambda_count, s.worst_imag, s.min_real),
    )
}

const SYNC_HORIZON: f64 = 100.0;

fn criterion8(ex: &Example, s: &Sweep) -> Outcome {
    let example_passive = matches!(ex.red.reduced_agent_passive(), Ok(true));
    let net = ex.red.network().expect("reduced network");
    let ss = net.state_space();
    let x0 = analyze::random_initial(ss.order(), 0);
    let zero = DVector::zeros(ss.inputs());
    let (res, sync) =
        analyze::simulate_network(&ss, net.nodes(), |_| zero.clone(), &x0, SYNC_HORIZON, 1e-3, 100).unwrap();
    let crossing = res.times.iter().zip(&sync).find(|(_, &v)| v < 1e-6).map(|(&t, _)| t);
    let pass = example_passive
        && ex.red.sync_preserved
        && model::check_sync_hypotheses(&net)
        && crossing.is_some()
        && s.agents_not_passive.is_empty()
        && s.sync_lost.is_empty();
    let mut detail = format!(
        "{} of {} sweep agents passive, example sync metric < 1e-6 from t = {} (horizon {SYNC_HORIZON}), {:.2e} at the end",
        s.agents_checked - s.agents_not_passive.len(),
        s.agents_checked,
        crossing.map_or("never".to_string(), |t| format!("{t:.1}")),
        sync.last().unwrap()
    );
    if !s.agents_not_passive.is_empty() {
        detail += &format!(", not passive: {}", first(&s.agents_not_passive));
    }
    if !s.sync_lost.is_empty() {
        detail += &format!(", sync lost: {}", first(&s.sync_lost));
    }
    outcome(pass, detail)
}

fn criterion9(ex: &Example) -> Outcome {
    let r = &ex.prep.residuals;
    let pass = r.controllability <= 1e-7 * r.controllability_scale && r.observability <= 1e-7 * r.observability_scale;
    outcome(
        pass,
        format!(
            "controllability {:.2e} (scale {:.2e}), observability {:.2e} (scale {:.2e})",
            r.controllability, r.controllability_scale, r.observability, r.observability_scale
        ),
    )
}

fn criterion10(ex: &Example) -> Outcome {
    let nodes = ex.prep.net.nodes();
    let n = ex.prep.net.agent().n();
    let red = ex.prep.reduce(nodes, n).expect("identity reduction");
    let full = ex.prep.net.state_space();
    let (err, scale) = gap(&full, &red.realized.state_space(), &grid50());
    let gamma = bound_gamma(ex.prep.balanced.sigma_g(), ex.prep.balanced.sigma_d(), nodes, n).unwrap();
    let pass = err <= 1e-7 * scale.max(1.0) && gamma == 0.0 && red.errors.gamma == 0.0;
    outcome(pass, format!("max deviation {err:.2e} (peak gain {scale:.3}), gamma {gamma}"))
}

fn main() -> ExitCode {
    let ex = run_example();
    let sw = sweep();
    let results = [
        criterion1(&ex),
        criterion2(&ex),
        criterion3(&ex),
        criterion4(&ex),
        criterion5(&sw),
        criterion6(),
        criterion7(&sw),
        criterion8(&ex, &sw),
        criterion9(&ex),
        criterion10(&ex),
    ];
    let mut all = true;
    for (i, r) in results.iter().enumerate() {
        all &= r.pass;
        println!("criterion {}: {} {}", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
