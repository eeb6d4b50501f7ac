mod common;

use cgame_core::congestion::{CongestionModel, CostFunction, FlowState, Network, RoutingDemand};
use cgame_core::dynamics::{field, field_block, DynamicsKind};
use cgame_core::equilibrium::{equilibrium_representations, vi_residual, TOL_EQUILIBRIUM};
use cgame_core::lyapunov::{lyapunov_value, LyapunovKind};
use cgame_core::simplex::{project_simplex, project_tangent_cone, SimplexPoint};
use cgame_core::{Category, StrategyProfile};
use proptest::prelude::*;
use rand::Rng;

fn simplex_with_faces(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = common::rng(seed);
    common::sample_profile(&[n], &mut rng).into_blocks().remove(0)
}

fn vector(n: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = common::rng(seed ^ 0x5eed);
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_is_idempotent_and_optimal(v in prop::collection::vec(-3.0f64..3.0, 1..8)) {
        let p = project_simplex(&v).unwrap();
        let again = project_simplex(p.as_slice()).unwrap();
        prop_assert_eq!(p.as_slice(), again.as_slice());
        // Variational inequality of the projection, checked at every vertex.
        for k in 0..v.len() {
            let dot: f64 = (0..v.len())
                .map(|j| (v[j] - p.as_slice()[j]) * ((j == k) as u8 as f64 - p.as_slice()[j]))
                .sum();
            prop_assert!(dot <= 1e-12, "vertex {} gives {}", k, dot);
        }
    }

    #[test]
    fn tangent_projection_satisfies_moreau(n in 2usize..7, seed in any::<u64>()) {
        let x = SimplexPoint::new(simplex_with_faces(n, seed)).unwrap();
        let v = vector(n, seed, 2.0);
        let t = project_tangent_cone(&x, &v).unwrap();
        let residual: Vec<f64> = v.iter().zip(&t).map(|(a, b)| a - b).collect();
        let cross: f64 = t.iter().zip(&residual).map(|(a, b)| a * b).sum();
        prop_assert!(cross.abs() <= 1e-8, "<t, v - t> = {}", cross);
        prop_assert!(t.iter().sum::<f64>().abs() <= 1e-9);
        for p in x.active_set() {
            prop_assert!(t[p] >= -1e-12);
        }
    }

    #[test]
    fn fields_are_tangent(seed in 0u64..10_000) {
        let game = common::zoo(seed);
        let mut rng = common::rng(seed);
        let x = common::sample_profile(game.sizes(), &mut rng);
        for kind in DynamicsKind::ALL {
            let b = field(kind, &game, &x).unwrap();
            for block in b.blocks() {
                prop_assert!(block.iter().sum::<f64>().abs() <= 1e-9, "{} block sum", kind);
            }
        }
    }

    #[test]
    fn gp_interior_field_is_centered_evaluation(n in 2usize..6, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let x = StrategyProfile::dirichlet(&[n], &mut rng).into_blocks().remove(0);
        let floor = x.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assume!(floor > 1e-3);
        let phi = vector(n, seed, floor / 4.0);
        let b = field_block(DynamicsKind::Gp, &x, &phi);
        let mean = phi.iter().sum::<f64>() / n as f64;
        for (bp, pp) in b.iter().zip(&phi) {
            prop_assert!((bp - (pp - mean)).abs() <= 1e-8);
        }
    }

    #[test]
    fn gp_field_approaches_lp_field(n in 2usize..6, seed in any::<u64>()) {
        let x = simplex_with_faces(n, seed);
        let phi = vector(n, seed, 2.0);
        let delta = 1e-6;
        let scaled: Vec<f64> = phi.iter().map(|v| v * delta).collect();
        let gp = field_block(DynamicsKind::Gp, &x, &scaled);
        let lp = field_block(DynamicsKind::Lp, &x, &phi);
        let gap = gp.iter().zip(&lp).map(|(g, l)| (g / delta - l).powi(2)).sum::<f64>().sqrt();
        prop_assert!(gap <= 1e-4, "gap {}", gap);
    }

    #[test]
    fn br_gap_equals_vi_residual_and_gp_gap_is_nonnegative(seed in 0u64..10_000) {
        let game = common::zoo(seed);
        let mut rng = common::rng(seed);
        let x = common::sample_profile(game.sizes(), &mut rng);
        let gap = lyapunov_value(&LyapunovKind::BrGap, &game, &x).unwrap();
        prop_assert_eq!(gap.to_bits(), vi_residual(&game, &x).unwrap().to_bits());
        let gp = lyapunov_value(&LyapunovKind::GpRegularizedGap, &game, &x).unwrap();
        prop_assert!(gp >= -1e-12, "gp gap {}", gp);
    }

    #[test]
    fn representations_agree_outside_band(seed in 0u64..10_000) {
        let game = common::zoo(seed);
        let mut rng = common::rng(seed);
        let x = common::sample_profile(game.sizes(), &mut rng);
        let r = equilibrium_representations(&game, &x, TOL_EQUILIBRIUM).unwrap();
        if !cgame_core::equilibrium::is_near_threshold(r.vi_residual, TOL_EQUILIBRIUM) {
            prop_assert!(r.representations_agree, "{:?}", r);
        }
    }

    #[test]
    fn flows_conserve_weight(seed in 0u64..10_000) {
        let mut rng = common::rng(seed);
        let net = Network::new(
            vec!["o".into(), "a".into(), "d".into()],
            vec![
                cgame_core::congestion::Link::new("oa", 0, 1, CostFunction::affine(1.0, 0.0)),
                cgame_core::congestion::Link::new("ad", 1, 2, CostFunction::affine(1.0, 0.0)),
                cgame_core::congestion::Link::new("od", 0, 2, CostFunction::affine(1.0, 0.0)),
                cgame_core::congestion::Link::new("oa2", 0, 1, CostFunction::affine(1.0, 0.0)),
            ],
        )
        .unwrap();
        let weights = [rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)];
        let model = CongestionModel::new(
            net,
            vec![
                RoutingDemand::new("u", 0, 2, weights[0], Category::Population),
                RoutingDemand::new("v", 0, 2, weights[1], Category::AtomicSplittable),
            ],
        )
        .unwrap();
        let x = StrategyProfile::dirichlet(&model.sizes(), &mut rng);
        let flow = FlowState::new(&model, x.blocks()).unwrap();
        // Each participant's flow leaving the origin equals its weight.
        for (i, f) in flow.participant_flows.iter().enumerate() {
            let out: f64 = [0usize, 2, 3].iter().map(|a| f[*a]).sum();
            prop_assert!((out - weights[i]).abs() <= 1e-12);
        }
        let recomputed = model.arc_flows(&flow.configuration);
        for (a, b) in recomputed.iter().zip(&flow.aggregate) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn costs_depend_only_on_aggregate(seed in 0u64..10_000) {
        let mut rng = common::rng(seed);
        let net = Network::parallel(vec![
            CostFunction::affine(1.0, 0.2),
            CostFunction::Polynomial { coefficients: vec![0.5, 0.0, 1.0] },
            CostFunction::affine(0.3, 0.6),
        ])
        .unwrap();
        let (ma, mb) = (0.4, 0.6);
        let model = CongestionModel::new(
            net,
            vec![
                RoutingDemand::new("a", 0, 1, ma, Category::Population),
                RoutingDemand::new("b", 0, 1, mb, Category::Population),
            ],
        )
        .unwrap();
        let mut x = StrategyProfile::dirichlet(&[3, 3], &mut rng).into_blocks();
        let before = model.evaluate_blocks(&x);
        // Move mass delta from path 0 to path 1 in `a` and back in `b`.
        let delta = 0.5 * (x[0][0] * ma).min(x[1][1] * mb);
        x[0][0] -= delta / ma;
        x[0][1] += delta / ma;
        x[1][1] -= delta / mb;
        x[1][0] += delta / mb;
        let after = model.evaluate_blocks(&x);
        for (p, q) in before.iter().flatten().zip(after.iter().flatten()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }
}

#[test]
fn finite_difference_jacobian_matches_closed_forms() {
    let mut checked = 0;
    for seed in 0..100u64 {
        let game = if seed % 2 == 0 {
            common::random_linear_game(seed)
        } else {
            common::random_table_game(seed)
        };
        let mut rng = common::rng(seed);
        let x = common::sample_profile(game.sizes(), &mut rng);
        let exact = game.jacobian(&x).unwrap();
        let fd = game.jacobian_fd(&x);
        let err = (&exact - &fd).amax();
        assert!(err <= 1e-6 * exact.amax().max(1.0), "seed {seed}: {err}");
        checked += 1;
    }
    assert_eq!(checked, 100);
}

#[test]
fn splittable_evaluation_matches_gain_gradient() {
    for seed in 0..100u64 {
        let game = common::random_network_game(seed);
        let mut rng = common::rng(seed);
        let x = StrategyProfile::dirichlet(game.sizes(), &mut rng);
        let phi = game.evaluate(&x).unwrap();
        let fd = game.gain_gradient_fd(&x, 1);
        for (a, b) in phi[1].iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "seed {seed}: {a} vs {b}");
        }
    }
}
