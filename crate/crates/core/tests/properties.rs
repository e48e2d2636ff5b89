use lasso_sse::analysis::report_for_attack;
use lasso_sse::observer::{dense_step_reference, observer_step, ObserverState, WindowShift};
use lasso_sse::oracle::default_tolerance;
use lasso_sse::solvers::lipschitz_constant;
use lasso_sse::*;
use nalgebra::DVector;
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize, usize, usize, u64)> {
    (2usize..=6, 0usize..=6, 1usize..=2, any::<u64>()).prop_flat_map(|(n, extra, s, seed)| {
        let p = n + 2 + extra;
        (Just(n), Just(p), 1..=n, Just(s), Just(seed))
    })
}

fn instance(n: usize, p: usize, tau: usize, s: usize, seed: u64) -> Instance {
    generate_random_instance(n, p, s, tau, &InstanceConfig::default(), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_threshold_shrinks_toward_zero(w in -1e3f64..1e3, theta in 0.0f64..1e2) {
        let v = soft_threshold(w, theta);
        prop_assert!(v.abs() <= w.abs());
        prop_assert_eq!(v == 0.0, w.abs() < theta || w == 0.0 || w.abs() == theta);
        if v != 0.0 {
            prop_assert_eq!(v.signum(), w.signum());
        }
    }

    #[test]
    fn ista_never_increases_the_objective((n, p, tau, s, seed) in dims(), scale in 1e-4f64..0.5) {
        let inst = instance(n, p, tau, s, seed);
        let (model, y, _) = inst.first_window().unwrap();
        let lambda = default_lambda(&model, &y, scale).unwrap();
        let nu = 1.0 / lipschitz_constant(&model);
        let (mut x, mut a) = (DVector::zeros(n), DVector::zeros(model.rows()));
        let mut f = lasso_objective(&model, &y, &x, &a, lambda);
        for _ in 0..50 {
            (x, a) = ista_step(&model, &y, &x, &a, nu, lambda);
            let g = lasso_objective(&model, &y, &x, &a, lambda);
            prop_assert!(g <= f + 1e-12 * f.abs());
            f = g;
        }
    }

    #[test]
    fn strict_value_is_bounded_by_rho((n, p, tau, s, seed) in dims(), signs in prop::collection::vec(prop::bool::ANY, 1..=24)) {
        let inst = instance(n, p, tau, s, seed);
        let model = inst.stacked_model().unwrap();
        let support = model.sensor_rows(&inst.scenario.support);
        let pattern: Vec<f64> = (0..support.len()).map(|i| if signs[i % signs.len()] { 1.0 } else { -1.0 }).collect();
        if let Ok(rep) = irrepresentable_report(&model, &support, &pattern) {
            prop_assert!(rep.strict_value <= rep.rho + 1e-12);
            prop_assert_eq!(rep.sufficient_holds, rep.rho < 1.0);
        }
    }

    #[test]
    fn rho_is_invariant_to_output_scaling((n, p, tau, s, seed) in dims(), alpha in prop::sample::select(vec![0.1, 3.0, -10.0])) {
        let inst = instance(n, p, tau, s, seed);
        let sys = &inst.system;
        let scaled = LtiSystem::new(sys.a().clone(), sys.c() * alpha).unwrap();
        let m1 = build_stacked_model(sys, tau).unwrap();
        let m2 = build_stacked_model(&scaled, tau).unwrap();
        let rows = m1.sensor_rows(&inst.scenario.support);
        let signs = vec![1.0; rows.len()];
        if let (Ok(r1), Ok(r2)) = (irrepresentable_report(&m1, &rows, &signs), irrepresentable_report(&m2, &rows, &signs)) {
            prop_assert!((r1.rho - r2.rho).abs() <= 1e-8 * (1.0 + r1.rho));
        }
    }

    #[test]
    fn instances_round_trip_through_json((n, p, tau, s, seed) in dims(), noise in prop::sample::select(vec![0.0, 1e-4]), horizon in 1usize..30) {
        let cfg = InstanceConfig { horizon: Some(horizon.max(tau)), noise_bound: noise, ..Default::default() };
        let inst = generate_random_instance(n, p, s, tau, &cfg, seed).unwrap();
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.trajectory().unwrap(), inst.trajectory().unwrap());
    }

    #[test]
    fn generation_is_deterministic((n, p, tau, s, seed) in dims()) {
        prop_assert_eq!(instance(n, p, tau, s, seed), instance(n, p, tau, s, seed));
        prop_assert_ne!(instance(n, p, tau, s, seed).x0, instance(n, p, tau, s, seed.wrapping_add(1)).x0);
    }

    #[test]
    fn sparse_observability_is_monotone_in_q((n, p, tau, s, seed) in dims()) {
        let inst = instance(n, p, tau, s, seed);
        let model = inst.stacked_model().unwrap();
        prop_assert_eq!(is_sparse_observable(&inst.system, tau, 0).unwrap(), is_observable(&model));
        let mut previous = true;
        for q in 0..p.min(4) {
            let now = is_sparse_observable(&inst.system, tau, q).unwrap();
            prop_assert!(previous || !now, "observable after removing {q} sensors but not fewer");
            previous = now;
        }
    }

    #[test]
    fn stacked_measurements_reconstruct_from_the_model((n, p, tau, s, seed) in dims()) {
        let inst = instance(n, p, tau, s, seed);
        let (model, y, a_true) = inst.first_window().unwrap();
        let rebuilt = model.omega() * &inst.x0 + &a_true;
        prop_assert!((rebuilt - y).amax() <= 1e-9 * (1.0 + inst.x0.amax()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fista_and_ista_reach_the_same_objective((n, p, tau, s, seed) in dims()) {
        let inst = instance(n, p, tau, s, seed);
        let (model, y, _) = inst.first_window().unwrap();
        let lambda = default_lambda(&model, &y, 1e-2).unwrap();
        let fast = solve_lasso(&model, &y, &SolverConfig::new(lambda)).unwrap();
        let slow = solve_lasso(&model, &y, &SolverConfig::new(lambda).ista()).unwrap();
        prop_assume!(fast.converged && slow.converged);
        prop_assert!((fast.objective - slow.objective).abs() <= 1e-8 * (1.0 + slow.objective));
    }

    #[test]
    fn converged_points_satisfy_the_optimality_conditions((n, p, tau, s, seed) in dims()) {
        let inst = instance(n, p, tau, s, seed);
        let (model, y, _) = inst.first_window().unwrap();
        let lambda = default_lambda(&model, &y, 1e-2).unwrap();
        let est = solve_lasso(&model, &y, &SolverConfig::new(lambda)).unwrap();
        prop_assume!(est.converged);
        let r = &y - model.omega() * &est.x_hat - &est.a_hat;
        prop_assert!(model.omega().tr_mul(&r).amax() <= 1e-6);
        for (ri, ai) in r.iter().zip(est.a_hat.iter()) {
            if *ai != 0.0 {
                prop_assert!((ri - lambda * ai.signum()).abs() <= 1e-6);
            } else {
                prop_assert!(ri.abs() <= lambda + 1e-6);
            }
        }
    }

    #[test]
    fn exact_decoder_ignores_a_larger_budget((n, p, tau, _s, seed) in dims()) {
        let inst = instance(n, p, tau, 1, seed);
        let (model, y, _) = inst.first_window().unwrap();
        let tol = default_tolerance(&model, &y, 0.0);
        let small = exact_decode(&model, &y, 1, tol);
        let large = exact_decode(&model, &y, 2.min(p - 1), tol);
        if let (Ok(a), Ok(b)) = (small, large) {
            prop_assert_eq!(a.support, b.support);
            prop_assert!((a.x_exact - b.x_exact).amax() <= 1e-9);
        }
    }

    #[test]
    fn certified_instances_are_decoded_exactly((n, p, tau, s, seed) in dims()) {
        let inst = instance(n, p, tau, s, seed);
        let (model, y, a_true) = inst.first_window().unwrap();
        let rep = report_for_attack(&model, &a_true);
        prop_assume!(rep.is_ok_and(|r| r.strict_value < 0.9 && r.full_rank_ok));
        let est = solve_lasso(&model, &y, &SolverConfig::new(default_lambda(&model, &y, 1e-4).unwrap())).unwrap();
        prop_assert_eq!(est.attacked_sensors(&model), inst.scenario.support.clone());
        let x = refine_state(&model, &y, &est.support_hat).unwrap();
        prop_assert!((x - &inst.x0).norm() <= 1e-8 * inst.x0.norm());
    }

    #[test]
    fn observer_step_matches_a_dense_unroll((n, p, tau, s, seed) in dims(), lambda in 0.0f64..1.0) {
        let inst = instance(n, p, tau, s, seed);
        let model = inst.stacked_model().unwrap();
        let traj = inst.trajectory().unwrap();
        let config = ObserverConfig {
            tau,
            lambda,
            nu: 1.0 / lipschitz_constant(&model),
            inner_steps: 1,
            variant: ObserverVariant::Soft,
            window_shift: WindowShift::Keep,
        };
        let mut state = ObserverState::init(&model);
        for k in 0..tau {
            state = observer_step(&model, state, &traj.measurements[k], &config).unwrap();
        }
        prop_assert_eq!(state.stacked_window(), traj.stacked_measurements(0, tau));
        let y = traj.stacked_measurements(0, tau);
        let (x_ref, a_ref) = dense_step_reference(
            model.omega(),
            model.system().a(),
            &y,
            &DVector::zeros(n),
            &DVector::zeros(model.rows()),
            config.nu,
            lambda,
        );
        prop_assert!((&state.x_hat - x_ref).amax() <= 1e-10 * (1.0 + state.x_hat.amax()));
        prop_assert!((&state.a_hat - a_ref).amax() <= 1e-10 * (1.0 + state.a_hat.amax()));
    }
}
