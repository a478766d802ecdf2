use weakshift_core::harness::{estimate_weak_value, random_scenario, run_scenario, Backend, RandomScenarioConfig};
use weakshift_core::measurement::{
    couple_postselect_exact, full_tensor_reference, unconditional_moments, unconditional_shift, JointState,
};
use weakshift_core::pointer::moments;
use weakshift_core::Error;

const SEED: u64 = 20;

#[test]
fn exact_backend_matches_tensor_oracle() {
    let config = RandomScenarioConfig::default();
    let mut worst = 0.0f64;
    for index in 0..200 {
        let s = random_scenario(&config, SEED, index).unwrap().with_g(0.1);
        let phi = s.pointer_state().unwrap();
        let exact = couple_postselect_exact(&s.coupling, &phi).unwrap();
        let oracle = full_tensor_reference(&s.coupling, &phi).unwrap();
        worst = worst.max(exact.max_deviation(&oracle));
    }
    assert!(worst <= 1e-10, "max deviation {worst}");
}

#[test]
fn kick_is_unitary() {
    let config = RandomScenarioConfig::default();
    for index in 0..10 {
        let s = random_scenario(&config, SEED, index).unwrap();
        let mut joint = JointState::product(&s.coupling.psi_i, &s.pointer_state().unwrap()).unwrap();
        joint.kick(0.5, &s.coupling.observable).unwrap();
        assert!((joint.norm_sqr() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn unconditional_shift_is_g_times_expectation() {
    let config = RandomScenarioConfig::default();
    for index in 0..50 {
        let base = random_scenario(&config, SEED, index).unwrap();
        let phi = base.pointer_state().unwrap();
        let before = moments(&phi).mean_q;
        for g in [1e-3, 0.1, 1.0] {
            let s = base.with_g(g);
            let after = unconditional_moments(&s.coupling, &phi).unwrap().mean_q;
            let expected = unconditional_shift(&s.coupling).unwrap();
            assert!((after - before - expected).abs() <= 1e-9, "index {index} g {g}");
        }
    }
}

#[test]
fn estimator_round_trips_within_5g() {
    let config = RandomScenarioConfig::default();
    let g = config.g;
    for index in 0..100 {
        let s = random_scenario(&config, index, 0).unwrap();
        let r = run_scenario(&s).unwrap();
        let est = estimate_weak_value(
            r.delta_q(),
            r.delta_p(),
            g,
            &s.pointer_state().unwrap(),
            s.coupling.mass,
        )
        .unwrap();
        assert!(
            (est.a - r.weak.a).abs() <= 5.0 * g,
            "seed {index}: a {} vs {}",
            est.a,
            r.weak.a
        );
        assert!(
            (est.b - r.weak.b).abs() <= 5.0 * g,
            "seed {index}: b {} vs {}",
            est.b,
            r.weak.b
        );
    }
}

#[test]
fn backends_agree_to_second_order() {
    let config = RandomScenarioConfig::default();
    for index in 0..20 {
        let base = random_scenario(&config, SEED, index).unwrap();
        for g in [1e-3, 3e-3, 1e-2] {
            // weak-exp may refuse on the grid's top wavenumber; the others always run.
            let dq: Vec<f64> = Backend::ALL
                .iter()
                .filter_map(|&b| match run_scenario(&base.with_g(g).with_backend(b)) {
                    Ok(r) => Some(r.delta_q()),
                    Err(Error::AmplificationGuard { .. }) if b == Backend::WeakExp => None,
                    Err(e) => panic!("{e}"),
                })
                .collect();
            assert!(dq.len() >= 2);
            let weak = base.coupling.weak_value().unwrap().as_complex().norm();
            // The constant grows with the weak value's size.
            let bound = 10.0 * (1.0 + weak * weak) * g * g;
            for i in 0..dq.len() {
                for j in i + 1..dq.len() {
                    assert!((dq[i] - dq[j]).abs() <= bound, "index {index} g {g}: {dq:?}");
                }
            }
        }
    }
}

#[test]
fn first_order_backends_differ_from_exact_at_second_order() {
    let config = RandomScenarioConfig::default();
    let base = random_scenario(&config, SEED, 3).unwrap();
    let gap = |g: f64| {
        let s = base.with_g(g);
        (run_scenario(&s).unwrap().delta_q() - run_scenario(&s.with_backend(Backend::FirstOrder)).unwrap().delta_q())
            .abs()
    };
    let ratio = gap(2e-3) / gap(1e-3);
    assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
}
