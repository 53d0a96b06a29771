//! Invariant checks shared by the `check` subcommand and the acceptance
//! target. Each check returns a verdict plus the measured quantities.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtf_core::gmm::{euclid_grad, init_point, nll_cost, Dataset, GmmParams, SeparationLevel};
use vtf_core::manifold::{ClassicalTransport, Geometry, MappingMode, StepRule};
use vtf_core::random::{random_spd, random_sym};
use vtf_core::rlbfgs::{get_direction, solve, SolverConfig, Termination};
use vtf_core::symkernel::{cholesky, CounterScope, SpdPoint, SymMat};

use crate::config::ExperimentConfig;
use crate::experiment::{prepare_run, run_experiment};
use crate::report::{emit_summary, strip_timing_columns};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

pub const OPERATOR_DIMS: [usize; 4] = [2, 3, 5, 10];
const MAPPED: [MappingMode; 2] = [MappingMode::InverseSqrt, MappingMode::Cholesky];

fn spd(n: usize, rng: &mut ChaCha8Rng) -> Arc<SpdPoint> {
    Arc::new(SpdPoint::new(random_spd(n, 1.0, rng)).expect("random SPD"))
}

/// Mapped transport and adjoint return their input bit for bit; the
/// validity triple (symmetric output, self-transport identity, linearity)
/// holds in every mode.
pub fn identity_transport(trials: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d);
    let mut worst_triple = 0.0_f64;
    for t in 0..trials {
        let n = OPERATOR_DIMS[t % OPERATOR_DIMS.len()];
        let (s1, s2) = (spd(n, &mut rng), spd(n, &mut rng));
        for mode in MAPPED {
            let g = Geometry::new(mode);
            let v = g.map_tangent(&s1, &random_sym(n, &mut rng)).expect("map");
            let moved = g.transport(&v, &s2).expect("transport");
            let back = g.adjoint_transport(&moved, &s1).expect("adjoint");
            if moved.value() != v.value() || back.value() != v.value() {
                return CheckOutcome::new(false, format!("{mode:?} changed its input at n={n}"));
            }
        }
        for mode in MappingMode::ALL {
            let g = Geometry::new(mode);
            let xi = g.map_tangent(&s1, &random_sym(n, &mut rng)).expect("map");
            let eta = g.map_tangent(&s1, &random_sym(n, &mut rng)).expect("map");
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let t_xi = g.transport(&xi, &s2).expect("transport");
            let scale = 1.0 + xi.value().max_abs() + eta.value().max_abs();
            let asym = t_xi.value().asymmetry();
            let selfmap = g
                .transport(&xi, &s1)
                .expect("transport")
                .value()
                .sub(xi.value())
                .max_abs();
            let combo = g.transport(&xi.scale(a).axpy(b, &eta), &s2).expect("transport");
            let split = t_xi.scale(a).axpy(b, &g.transport(&eta, &s2).expect("transport"));
            let linear = combo.value().sub(split.value()).max_abs();
            worst_triple = worst_triple.max((asym.max(selfmap).max(linear)) / scale);
        }
    }
    CheckOutcome::new(
        worst_triple <= 1e-10,
        format!("mapped transports bitwise identity; worst triple residual {worst_triple:.2e}"),
    )
}

/// Classical metric on (ξ, η) against the Frobenius product of the mapped
/// pair, relative to ‖ξ‖‖η‖.
pub fn metric_reduction(trials: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3e);
    let classical = Geometry::new(MappingMode::Classical);
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let n = OPERATOR_DIMS[t % OPERATOR_DIMS.len()];
        let base = spd(n, &mut rng);
        let (xi, eta) = (random_sym(n, &mut rng), random_sym(n, &mut rng));
        let cx = classical.map_tangent(&base, &xi).expect("map");
        let ce = classical.map_tangent(&base, &eta).expect("map");
        let reference = classical.metric(&cx, &ce).expect("metric");
        let scale = classical.norm(&cx).expect("norm") * classical.norm(&ce).expect("norm");
        for mode in MAPPED {
            let g = Geometry::new(mode);
            let mx = g.map_tangent(&base, &xi).expect("map");
            let me = g.map_tangent(&base, &eta).expect("map");
            let mapped = g.metric(&mx, &me).expect("metric");
            worst = worst.max((mapped - reference).abs() / scale);
        }
    }
    CheckOutcome::new(
        worst <= 1e-10,
        format!("worst relative gap {worst:.2e} over {trials} trials"),
    )
}

/// Cost traces of the three modes from a shared start, compared over the
/// first `iters` iterations.
pub fn mode_equivalence(seeds: usize, iters: usize) -> CheckOutcome {
    let mut worst_isr = 0.0_f64;
    let mut worst_chol = 0.0_f64;
    let (mut len_isr, mut len_chol) = (0, 0);
    // diagnostic only: the Cholesky mapping against the factor-based classical transport
    let mut worst_factor = 0.0_f64;
    let mut cells = 0;
    for separation in SeparationLevel::ALL {
        let config = ExperimentConfig {
            separations: vec![separation],
            runs: seeds,
            ..ExperimentConfig::default()
        };
        let cell = config.cells()[0];
        for run in 0..seeds {
            let input = match prepare_run(&config, &cell, run) {
                Ok(i) => i,
                Err(e) => return CheckOutcome::new(false, format!("setup failed: {e}")),
            };
            let problem = vtf_core::gmm::GmmProblem::new(&input.data);
            let trace_with = |mode: MappingMode, transport: ClassicalTransport| {
                let cfg = SolverConfig {
                    max_iters: iters,
                    classical_transport: transport,
                    ..SolverConfig::default().with_mode(mode)
                };
                solve(&problem, input.start.clone(), &cfg).map(|(_, s)| s.cost_trace)
            };
            let trace = |mode| trace_with(mode, ClassicalTransport::EigenRoot);
            let (Ok(isr), Ok(chol), Ok(cl), Ok(cl_chol)) = (
                trace(MappingMode::InverseSqrt),
                trace(MappingMode::Cholesky),
                trace(MappingMode::Classical),
                trace_with(MappingMode::Classical, ClassicalTransport::CholeskyFactor),
            ) else {
                return CheckOutcome::new(false, "a solve returned an error");
            };
            // relative gap over the shared prefix; a length mismatch is a disagreement
            let gap_to = |a: &[f64], reference: &[f64]| -> (f64, bool) {
                let g = a
                    .iter()
                    .zip(reference)
                    .map(|(x, y)| (x - y).abs() / y.abs())
                    .fold(0.0, f64::max);
                (g, a.len() != reference.len())
            };
            let gap = |a: &[f64]| gap_to(a, &cl);
            let (gf, lf) = gap_to(&chol, &cl_chol);
            worst_factor = worst_factor.max(if lf { f64::INFINITY } else { gf });
            let (gi, li) = gap(&isr);
            let (gc, lc) = gap(&chol);
            worst_isr = worst_isr.max(gi);
            worst_chol = worst_chol.max(gc);
            len_isr += usize::from(li);
            len_chol += usize::from(lc);
            cells += 1;
        }
    }
    CheckOutcome::new(
        worst_isr <= 1e-6 && worst_chol <= 1e-6 && len_isr == 0 && len_chol == 0,
        format!(
            "{cells} runs; max relative trace gap vs classical: vtf_isr {worst_isr:.2e} \
             ({len_isr} length mismatches), vtf_chol {worst_chol:.2e} ({len_chol} length mismatches); \
             vtf_chol vs classical with factor transport {worst_factor:.2e}"
        ),
    )
}

/// Cubic-kernel calls inside the direction recursion.
pub fn recursion_cubic_free() -> CheckOutcome {
    let config = ExperimentConfig::default();
    let cell = config.cells()[0];
    let input = match prepare_run(&config, &cell, 0) {
        Ok(i) => i,
        Err(e) => return CheckOutcome::new(false, format!("setup failed: {e}")),
    };
    let problem = vtf_core::gmm::GmmProblem::new(&input.data);
    let mut counts = Vec::new();
    for mode in MappingMode::ALL {
        let cfg = SolverConfig {
            max_iters: 10,
            grad_tol: 0.0,
            ..SolverConfig::default().with_mode(mode)
        };
        let mut solver = match vtf_core::rlbfgs::Solver::new(&problem, input.start.clone(), cfg) {
            Ok(s) => s,
            Err(e) => return CheckOutcome::new(false, format!("{e}")),
        };
        while let Ok(vtf_core::rlbfgs::StepOutcome::Continue) = solver.step() {}
        let memory: Vec<_> = solver.memory().cloned().collect();
        if memory.is_empty() {
            return CheckOutcome::new(false, format!("{mode:?}: memory stayed empty"));
        }
        let p = solver.grad().scale(-1.0);
        let scope = CounterScope::begin();
        let direct = get_direction(solver.geometry(), &p, memory.len(), &memory, solver.h());
        let direct_calls = scope.counts().cubic_calls;
        if direct.is_err() {
            return CheckOutcome::new(false, format!("{mode:?}: direction failed"));
        }
        counts.push((mode, memory.len(), direct_calls, solver.cubic_calls_in_recursion()));
    }
    let passed = counts.iter().all(|&(mode, _, direct, total)| {
        if mode.is_mapped() {
            direct == 0 && total == 0
        } else {
            direct > 0 && total > 0
        }
    });
    let detail = counts
        .iter()
        .map(|(m, depth, d, t)| format!("{}: depth {depth} -> {d} (run total {t})", m.label()))
        .collect::<Vec<_>>()
        .join("; ");
    CheckOutcome::new(passed, detail)
}

fn random_params(k: usize, n: usize, rng: &mut ChaCha8Rng) -> GmmParams {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    GmmParams {
        weights: raw.iter().map(|w| w / total).collect(),
        means: (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
        covs: (0..k).map(|_| random_spd(n, 1.0, rng)).collect(),
    }
}

/// Riemannian gradient against central differences of the cost along the
/// exponential-map curve.
pub fn gradient_fidelity(directions: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a);
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for k in [1, 2] {
        for n in [2, 5] {
            let params = random_params(k, n, &mut rng);
            let flat = (0..40 * n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let data = Dataset::from_flat(n, flat).expect("finite data");
            let point = init_point(&params).expect("valid params");
            let egrad = euclid_grad(&point, &data).expect("gradient");
            for mode in MappingMode::ALL {
                let g = Geometry::new(mode);
                let rgrad = g
                    .product_egrad_to_rgrad(&point, &egrad.blocks, &egrad.weights)
                    .expect("rgrad");
                for _ in 0..directions {
                    let blocks: Vec<SymMat> = point.blocks.iter().map(|b| random_sym(b.dim(), &mut rng)).collect();
                    let weights: Vec<f64> = point.weights.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                    let xi = g.product_map(&point, &blocks, &weights).expect("map");
                    let at = |t: f64| {
                        let moved = g.product_step(&point, &xi.scale(t), StepRule::ExpMap).expect("step");
                        nll_cost(&moved, &data).expect("cost")
                    };
                    let fd = (at(h) - at(-h)) / (2.0 * h);
                    let analytic = g.product_metric(&rgrad, &xi).expect("metric");
                    worst = worst.max((fd - analytic).abs() / analytic.abs());
                }
            }
        }
    }
    CheckOutcome::new(worst <= 1e-5, format!("worst relative error {worst:.2e}"))
}

/// Convergence order of ‖Ret(tξ) − Exp(tξ)‖ between consecutive `t`, and
/// positive definiteness of every retraction output.
pub fn retraction_order(trials: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7b);
    let ts = [1e-1, 1e-2, 1e-3];
    let mut worst_order = f64::INFINITY;
    let mut all_pd = true;
    for trial in 0..trials {
        let n = [2, 3, 5][trial % 3];
        let base = spd(n, &mut rng);
        let xi = random_sym(n, &mut rng);
        for mode in MappingMode::ALL {
            let g = Geometry::new(mode);
            let v = g.map_tangent(&base, &xi).expect("map");
            let errs: Vec<f64> = ts
                .iter()
                .map(|&t| {
                    let tv = v.scale(t);
                    let r = g.retract(&tv);
                    let e = g.exp_map(&tv).expect("exp");
                    match r {
                        Ok(r) => {
                            all_pd &= cholesky(r.mat()).is_ok();
                            r.mat().sub(e.mat()).frob_norm()
                        }
                        Err(_) => {
                            all_pd = false;
                            f64::NAN
                        }
                    }
                })
                .collect();
            for w in errs.windows(2) {
                worst_order = worst_order.min((w[0] / w[1]).log10());
            }
        }
        // a long step must also stay in the cone
        for mode in MappingMode::ALL {
            let g = Geometry::new(mode);
            let v = g.map_tangent(&base, &xi.scale(5.0)).expect("map");
            all_pd &= g.retract(&v).is_ok();
        }
    }
    CheckOutcome::new(
        worst_order >= 2.7 && all_pd,
        format!("worst measured order {worst_order:.3}; all outputs positive definite: {all_pd}"),
    )
}

/// Cell (K=2, n=2, N=40, high, exp map), `runs` seeded runs per mode.
pub fn table2_band(runs: usize) -> CheckOutcome {
    let config = ExperimentConfig {
        runs,
        ..ExperimentConfig::default()
    };
    let records = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::new(false, format!("experiment failed: {e}")),
    };
    let mut passed = true;
    let mut medians = Vec::new();
    for mode in MappingMode::ALL {
        let mut iters: Vec<usize> = records
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| r.iterations)
            .collect();
        iters.sort_unstable();
        let mid = iters.len() / 2;
        let median = if iters.len() % 2 == 0 {
            (iters[mid - 1] + iters[mid]) as f64 / 2.0
        } else {
            iters[mid] as f64
        };
        passed &= (15.0..=60.0).contains(&median);
        medians.push(format!("{} {median}", mode.label()));
    }
    let converged = records.iter().all(|r| r.termination == Some(Termination::Converged));
    let mut worst_cost_gap = 0.0_f64;
    for run in 0..runs {
        let costs: Vec<f64> = records.iter().filter(|r| r.run == run).map(|r| r.last_cost).collect();
        for c in &costs {
            worst_cost_gap = worst_cost_gap.max((c - costs[0]).abs() / costs[0].abs());
        }
    }
    passed &= converged && worst_cost_gap <= 1e-6;
    CheckOutcome::new(
        passed,
        format!(
            "median iterations: {}; all converged: {converged}; worst last-cost gap {worst_cost_gap:.2e}",
            medians.join(", ")
        ),
    )
}

/// Two runs of one configuration give identical summaries once the timing
/// columns are removed.
pub fn harness_determinism(config: &ExperimentConfig) -> CheckOutcome {
    let summarize = || run_experiment(config).map(|r| strip_timing_columns(&emit_summary(&r)));
    match (summarize(), summarize()) {
        (Ok(a), Ok(b)) => CheckOutcome::new(a == b, format!("{} summary rows compared", a.lines().count() - 1)),
        (Err(e), _) | (_, Err(e)) => CheckOutcome::new(false, format!("experiment failed: {e}")),
    }
}

pub fn determinism_config() -> ExperimentConfig {
    ExperimentConfig {
        components: vec![2, 3],
        dims: vec![2, 3],
        separations: SeparationLevel::ALL.to_vec(),
        step_rules: vec![StepRule::ExpMap, StepRule::TaylorRetraction],
        runs: 2,
        seed: 7,
        ..ExperimentConfig::default()
    }
}

pub struct NamedCheck {
    pub id: u32,
    pub name: &'static str,
    /// Seconds allowed.
    pub budget: f64,
    pub run: fn() -> CheckOutcome,
}

/// Checks that need no external oracle.
pub fn suite() -> Vec<NamedCheck> {
    vec![
        NamedCheck {
            id: 2,
            name: "identity transport in mapped modes, validity triple in all modes",
            budget: 5.0,
            run: || identity_transport(200),
        },
        NamedCheck {
            id: 3,
            name: "classical metric equals Frobenius metric on mapped vectors",
            budget: 5.0,
            run: || metric_reduction(500),
        },
        NamedCheck {
            id: 4,
            name: "three modes give equal cost traces for 20 iterations",
            budget: 60.0,
            run: || mode_equivalence(10, 20),
        },
        NamedCheck {
            id: 5,
            name: "direction recursion is cubic-free in mapped modes",
            budget: 5.0,
            run: recursion_cubic_free,
        },
        NamedCheck {
            id: 6,
            name: "Riemannian gradient matches finite differences",
            budget: 30.0,
            run: || gradient_fidelity(20),
        },
        NamedCheck {
            id: 7,
            name: "Taylor retraction is third-order close to the exponential map",
            budget: 10.0,
            run: || retraction_order(30),
        },
        NamedCheck {
            id: 8,
            name: "desk-scale iteration band on K=2 n=2 N=40 high separation",
            budget: 120.0,
            run: || table2_band(10),
        },
        NamedCheck {
            id: 10,
            name: "identical config and seed give identical summaries",
            budget: 60.0,
            run: || harness_determinism(&determinism_config()),
        },
    ]
}
