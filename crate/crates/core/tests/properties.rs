use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vtf_core::gmm::{init_point, nll_cost, recover_params, sample_gmm, Dataset, GmmProblem, SeparationLevel};
use vtf_core::manifold::{Geometry, MappingMode, StepRule};
use vtf_core::random::{random_spd, random_sym};
use vtf_core::rlbfgs::{solve, SolverConfig, Termination};
use vtf_core::symkernel::{sym_eig, Mat, SpdPoint, SymMat};

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rel_err(a: &Mat, b: &Mat) -> f64 {
    a.sub(b).frob_norm() / b.frob_norm().max(1e-300)
}

fn separation(i: usize) -> SeparationLevel {
    SeparationLevel::ALL[i % SeparationLevel::ALL.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_match_dense_oracle(seed in any::<u64>(), n in 1usize..9) {
        let a = random_sym(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut ours = sym_eig(&a).unwrap().values;
        ours.sort_by(f64::total_cmp);
        let oracle = vtf_testkit::sym_eigenvalues(&rows(a.as_mat()));
        let scale = a.as_mat().frob_norm().max(1.0);
        for (x, y) in ours.iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn square_roots_are_consistent(seed in any::<u64>(), n in 1usize..9, spread in 0.1f64..3.0) {
        let s = SpdPoint::new(random_spd(n, spread, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let root = s.sqrt().unwrap().as_mat();
        prop_assert!(rel_err(&root.matmul(root), s.mat().as_mat()) < 1e-11);
        let w = s.invsqrt().unwrap().as_mat();
        prop_assert!(rel_err(&w.matmul(s.mat().as_mat()).matmul(w), &Mat::identity(n)) < 1e-10);
        let l = s.chol();
        prop_assert!(rel_err(&l.matmul_t(l), s.mat().as_mat()) < 1e-12);
    }

    #[test]
    fn tangent_mapping_round_trips(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = Arc::new(SpdPoint::new(random_spd(n, 1.0, &mut rng)).unwrap());
        let xi = random_sym(n, &mut rng);
        for mode in MappingMode::ALL {
            let g = Geometry::new(mode);
            let back = g.unmap_tangent(&g.map_tangent(&base, &xi).unwrap()).unwrap();
            prop_assert!(rel_err(back.as_mat(), xi.as_mat()) < 1e-11, "{mode:?}");
        }
    }

    #[test]
    fn steps_stay_positive_definite(seed in any::<u64>(), n in 1usize..7, t in 0.01f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = Arc::new(SpdPoint::new(random_spd(n, 1.0, &mut rng)).unwrap());
        let raw = random_sym(n, &mut rng);
        // length t in the metric, so the step's condition number stays representable
        let len = Geometry::new(MappingMode::Classical).norm(&Geometry::new(MappingMode::Classical).map_tangent(&base, &raw).unwrap()).unwrap();
        let xi = raw.scale(t / len);
        for mode in MappingMode::ALL {
            let g = Geometry::new(mode);
            let v = g.map_tangent(&base, &xi).unwrap();
            for rule in [StepRule::ExpMap, StepRule::TaylorRetraction] {
                let next = g.step(&v, rule).unwrap();
                let low = sym_eig(next.mat()).unwrap().values.iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert!(low > 0.0, "{mode:?} {rule:?}: {low}");
            }
        }
    }

    #[test]
    fn parameters_survive_the_reformulation(seed in any::<u64>(), k in 1usize..5, n in 1usize..5, sep in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, params) = sample_gmm(k, n, 10 * k, separation(sep), &mut rng).unwrap();
        let back = recover_params(&init_point(&params).unwrap()).unwrap();
        for j in 0..k {
            prop_assert!((back.weights[j] - params.weights[j]).abs() < 1e-12);
            for a in 0..n {
                prop_assert!((back.means[j][a] - params.means[j][a]).abs() < 1e-10);
            }
            prop_assert!(rel_err(back.covs[j].as_mat(), params.covs[j].as_mat()) < 1e-10);
        }
    }

    #[test]
    fn cost_at_lifted_parameters_is_the_mixture_likelihood(seed in any::<u64>(), k in 1usize..4, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (data, params) = sample_gmm(k, n, 20, SeparationLevel::Mid, &mut rng).unwrap();
        let points: Vec<Vec<f64>> = data.points().map(<[f64]>::to_vec).collect();
        let covs: Vec<Vec<Vec<f64>>> = params.covs.iter().map(|c| rows(c.as_mat())).collect();
        let oracle = vtf_testkit::gmm_nll(&points, &params.weights, &params.means, &covs);
        let ours = nll_cost(&init_point(&params).unwrap(), &data).unwrap();
        prop_assert!((ours - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{ours} vs {oracle}");
    }

    #[test]
    fn dataset_csv_round_trips(seed in any::<u64>(), n in 1usize..6, len in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat: Vec<f64> = (0..n * len).map(|_| rand::Rng::random_range(&mut rng, -1e3..1e3)).collect();
        let data = Dataset::from_flat(n, flat).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.as_flat(), data.as_flat());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_never_increases_the_cost(seed in any::<u64>(), k in 1usize..4, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (data, truth) = sample_gmm(k, n, 20 * k * n, SeparationLevel::High, &mut rng).unwrap();
        let mut start = truth.clone();
        for c in &mut start.covs {
            *c = c.add(&SymMat::identity(n));
        }
        for mode in MappingMode::ALL {
            let config = SolverConfig { max_iters: 60, ..SolverConfig::default().with_mode(mode) };
            let (_, stats) = solve(&GmmProblem::new(&data), init_point(&start).unwrap(), &config).unwrap();
            for w in stats.cost_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{mode:?}: {} -> {}", w[0], w[1]);
            }
            prop_assert!(stats.termination != Termination::LineSearchFailed || stats.final_grad_norm < 1e-3);
        }
    }
}
