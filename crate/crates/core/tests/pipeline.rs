use std::sync::Arc;

use mdiqkd_core::channel::ChannelConfig;
use mdiqkd_core::fock::{cutoff_for, oracle_state};
use mdiqkd_core::optimizer::{Mode, OptBounds, Optimizer, StrategyRegistry};
use mdiqkd_core::pstmsc::{pstmsc_moments, ResourceParams};
use mdiqkd_core::states::StateRegistry;

#[test]
fn refinement_never_loses_to_the_grid() {
    let strategies = StrategyRegistry::default();
    let grid = Optimizer::new(OptBounds::default(), strategies.get("grid").unwrap()).unwrap();
    let refined = Optimizer::new(
        OptBounds::default(),
        strategies.get("grid-pattern").unwrap(),
    )
    .unwrap();
    let states = StateRegistry::default();
    let cfg = ChannelConfig::default().at_distance(50.0);
    for name in ["tmsv", "1-pstmsc", "2-pstmsv"] {
        let fam = states.get(name).unwrap();
        let a = grid
            .optimize(fam.as_ref(), Mode::FixedVariance(15.0), &cfg)
            .unwrap();
        let b = refined
            .optimize(fam.as_ref(), Mode::FixedVariance(15.0), &cfg)
            .unwrap();
        assert!(b.best_k >= a.best_k, "{name}: {} < {}", b.best_k, a.best_k);
        assert_eq!(b.grid_best, a.grid_best);
    }
}

#[test]
fn unknown_names_are_rejected() {
    assert!(StrategyRegistry::default().get("annealing").is_err());
    assert!(StateRegistry::default().get("9-pstmsc").is_err());
}

#[test]
fn optimized_state_agrees_with_fock_simulation() {
    let opt = Optimizer::default();
    let fam = StateRegistry::default().get("1-pstmsc").unwrap();
    let r = opt
        .optimize(
            fam.as_ref(),
            Mode::FixedVariance(5.0),
            &ChannelConfig::default().at_distance(30.0),
        )
        .unwrap();
    let p: ResourceParams = r.params;
    let closed = pstmsc_moments(&p).unwrap();
    let fock = oracle_state(&p, cutoff_for(&p, 1e-14)).unwrap();
    assert!((closed.herald_prob - fock.herald_prob).abs() < 1e-9 * fock.herald_prob);
    for (a, b) in [
        (closed.vq_a, fock.vq_a),
        (closed.vp_a, fock.vp_a),
        (closed.vq_c, fock.vq_c),
        (closed.vp_c, fock.vp_c),
        (closed.mean_q1, fock.mean_q1),
    ] {
        assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn families_share_one_trait_object_interface() {
    let reg = StateRegistry::default();
    let fams: Vec<Arc<_>> = reg.names().iter().map(|n| reg.get(n).unwrap()).collect();
    assert_eq!(fams.len(), 10);
    let cfg = ChannelConfig::default().at_distance(20.0);
    for f in &fams {
        let p = f.params(10.0, 1.0, 0.9).unwrap();
        let k = f.key_rate(&p, &cfg).unwrap();
        assert!(k.k_rate.is_finite(), "{}", f.name());
    }
}
