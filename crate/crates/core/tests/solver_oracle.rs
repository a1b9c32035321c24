//! Value iteration against exact enumeration on instances where sensing and
//! belief actually change the optimal decision.

use mtcsim_core::sim::{simulate_episodes, OracleController, PolicyController};
use mtcsim_core::solver::{brute_force_oracle, value_iteration};
use mtcsim_core::{Belief, PomdpModel, RbProcess, SolverConfig, SolverMode};
use proptest::prelude::*;

/// Sleep, sense-only, then four access actions with a cheap idle branch and
/// an expensive busy branch, repeated per RB.
fn sticky_model(rb_count: usize) -> PomdpModel {
    let procs: Vec<RbProcess> = (0..rb_count)
        .map(|r| RbProcess::new(0.9 - 0.1 * r as f64, 0.15, 0.05, 0.1))
        .collect();
    let mut costs = vec![[0.6, 0.6]];
    for _ in 0..rb_count {
        costs.extend([[0.61, 0.61], [0.2, 1.4], [0.1, 2.0], [0.3, 0.9], [0.25, 1.1]]);
    }
    PomdpModel::from_costs(procs, costs).unwrap()
}

#[test]
fn off_grid_probes_stay_close_to_the_oracle() {
    let model = sticky_model(1);
    let config = SolverConfig {
        horizon: 4,
        grid_step: 1e-3,
        mode: SolverMode::Joint,
    };
    let (_, values) = value_iteration(&model, &config).unwrap();
    let mut kinks = 0;
    let mut last = None;
    for i in 0..=200 {
        let b = i as f64 / 200.0 + 1.7e-4;
        let b = b.min(1.0);
        let exact = brute_force_oracle(&model, 4, &Belief(vec![b])).unwrap();
        assert!((exact.value - values.value(0, &[b])).abs() < 5e-3, "belief {b}");
        let a = exact.root.unwrap().action;
        kinks += usize::from(last.is_some_and(|l| l != a));
        last = Some(a);
    }
    assert!(kinks > 0, "instance should switch actions across beliefs");
}

#[test]
fn two_rb_joint_grid_matches_the_oracle() {
    let model = sticky_model(2);
    let config = SolverConfig {
        horizon: 3,
        grid_step: 0.01,
        mode: SolverMode::Joint,
    };
    let (_, values) = value_iteration(&model, &config).unwrap();
    for b0 in [0.0, 0.25, 0.5, 0.8, 1.0] {
        for b1 in [0.0, 0.4, 0.9] {
            let exact = brute_force_oracle(&model, 3, &Belief(vec![b0, b1])).unwrap();
            let approx = values.value(0, &[b0, b1]);
            assert!(
                (exact.value - approx).abs() < 5e-3,
                "({b0}, {b1}): {} vs {approx}",
                exact.value
            );
        }
    }
}

#[test]
fn realized_costs_agree_under_common_random_numbers() {
    let model = sticky_model(1);
    let config = SolverConfig {
        horizon: 5,
        grid_step: 1e-3,
        mode: SolverMode::Joint,
    };
    let (policy, _) = value_iteration(&model, &config).unwrap();
    let initial = Belief(vec![0.5]);
    let exact = brute_force_oracle(&model, 5, &initial).unwrap();
    let root = exact.root.unwrap();
    let vi = simulate_episodes(&model, &mut PolicyController::new(&policy, 3), &initial, 5, 40_000, 3).unwrap();
    let or = simulate_episodes(&model, &mut OracleController::new(&root), &initial, 5, 40_000, 3).unwrap();
    assert!((vi.mean - or.mean).abs() <= 0.01 * or.mean);
    // the oracle's own Monte-Carlo estimate agrees with its exact value
    assert!(
        (or.mean - exact.value).abs() <= 4.0 * or.std_error,
        "{} vs {}",
        or.mean,
        exact.value
    );
}

#[test]
fn per_rb_mode_is_never_better_than_the_joint_optimum() {
    let model = sticky_model(2);
    let joint = SolverConfig {
        horizon: 3,
        grid_step: 0.01,
        mode: SolverMode::Joint,
    };
    let per_rb = SolverConfig {
        mode: SolverMode::PerRb,
        ..joint
    };
    let (_, vj) = value_iteration(&model, &joint).unwrap();
    let (_, vp) = value_iteration(&model, &per_rb).unwrap();
    for b in [[0.2, 0.7], [0.9, 0.1], [0.5, 0.5]] {
        assert!(vp.value(0, &b) >= vj.value(0, &b) - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_single_rb_models_track_the_oracle(
        stay in 0.05f64..0.95,
        back in 0.05f64..0.95,
        nu in 0.0f64..0.4,
        idle in proptest::collection::vec(0.0f64..1.0, 5),
        extra in proptest::collection::vec(0.0f64..1.0, 5),
        sleep in 0.0f64..1.0,
        horizon in 1usize..=3,
        b in 0.0f64..=1.0,
    ) {
        let proc = RbProcess::new(stay, back, nu, 0.1);
        let mut costs = vec![[sleep, sleep]];
        costs.extend(idle.iter().zip(&extra).map(|(&i, &e)| [i, i + e]));
        let model = PomdpModel::from_costs(vec![proc], costs).unwrap();
        let config = SolverConfig { horizon, grid_step: 1e-3, mode: SolverMode::Joint };
        let (_, values) = value_iteration(&model, &config).unwrap();
        let exact = brute_force_oracle(&model, horizon, &Belief(vec![b])).unwrap();
        prop_assert!((exact.value - values.value(0, &[b])).abs() < 5e-3);
    }
}

#[test]
fn refining_the_grid_moves_values_towards_the_oracle() {
    let model = sticky_model(1);
    let error = |step: f64| {
        let config = SolverConfig {
            horizon: 4,
            grid_step: step,
            mode: SolverMode::Joint,
        };
        let (_, values) = value_iteration(&model, &config).unwrap();
        (0..=40)
            .map(|i| {
                let b = (i as f64 * 0.0249 + 0.003).min(1.0);
                let exact = brute_force_oracle(&model, 4, &Belief(vec![b])).unwrap().value;
                (exact - values.value(0, &[b])).abs()
            })
            .fold(0.0, f64::max)
    };
    let (coarse, mid, fine) = (error(0.05), error(1e-2), error(1e-3));
    assert!(fine <= mid + 1e-12 && mid <= coarse + 1e-12, "{coarse} {mid} {fine}");
    assert!(fine < 1e-3);
}
