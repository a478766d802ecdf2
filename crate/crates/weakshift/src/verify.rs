//! Randomized self-check battery behind `weakshift verify`.
//!
//! Every case draws a scenario from `(seed, index)` and checks it against the
//! independent tensor-product oracle, the unconditional-shift identity, the
//! estimator round trip and cross-backend agreement. Cases run in parallel;
//! results come back ordered by index.

use rayon::prelude::*;
use weakshift_core::harness::{
    estimate_weak_value, random_scenario, run_scenario, Backend, RandomScenarioConfig, Scenario, ScenarioResult,
};
use weakshift_core::measurement::{
    couple_postselect_exact, full_tensor_reference, unconditional_moments, unconditional_shift,
};
use weakshift_core::pointer::moments;
use weakshift_core::Error as CoreError;

/// Coupling for the oracle comparison; large enough that branches separate.
pub const ORACLE_G: f64 = 0.1;
pub const ORACLE_TOL: f64 = 1e-10;
pub const UNCONDITIONAL_G: f64 = 1.0;
pub const UNCONDITIONAL_TOL: f64 = 1e-9;
/// Round-trip tolerance in units of `g`.
pub const ROUND_TRIP_FACTOR: f64 = 5.0;
/// Backend agreement bound is `AGREEMENT_C (1 + |A_w|^2) g^2`.
pub const AGREEMENT_C: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub results: Vec<ScenarioResult>,
    /// `(index, message)` for every failed check.
    pub failures: Vec<(u64, String)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_verify(seed: u64, cases: u64) -> VerifyReport {
    let config = RandomScenarioConfig::default();
    let outcomes: Vec<(Option<ScenarioResult>, Vec<String>)> = (0..cases)
        .into_par_iter()
        .map(|index| match random_scenario(&config, seed, index) {
            Ok(s) => check_case(&s),
            Err(e) => (None, vec![format!("scenario generation: {e}")]),
        })
        .collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (index, (result, messages)) in (0..cases).zip(outcomes) {
        results.extend(result);
        failures.extend(messages.into_iter().map(|m| (index, m)));
    }
    VerifyReport {
        seed,
        results,
        failures,
    }
}

/// Runs all checks on one scenario; returns the exact-backend result and any
/// failure messages.
pub fn check_case(s: &Scenario) -> (Option<ScenarioResult>, Vec<String>) {
    let mut failures = Vec::new();
    let mut fail = |m: String| failures.push(m);

    let phi = match s.pointer_state() {
        Ok(phi) => phi,
        Err(e) => return (None, vec![format!("pointer: {e}")]),
    };

    let oracle = s.with_g(ORACLE_G);
    match (
        couple_postselect_exact(&oracle.coupling, &phi),
        full_tensor_reference(&oracle.coupling, &phi),
    ) {
        (Ok(a), Ok(b)) => {
            let dev = a.max_deviation(&b);
            if !(dev <= ORACLE_TOL) {
                fail(format!("oracle deviation {dev:e} > {ORACLE_TOL:e}"));
            }
        }
        (Err(e), _) | (_, Err(e)) => fail(format!("oracle: {e}")),
    }

    let strong = s.with_g(UNCONDITIONAL_G);
    match (
        unconditional_moments(&strong.coupling, &phi),
        unconditional_shift(&strong.coupling),
    ) {
        (Ok(m), Ok(expected)) => {
            let err = (m.mean_q - moments(&phi).mean_q - expected).abs();
            if !(err <= UNCONDITIONAL_TOL) {
                fail(format!("unconditional shift off by {err:e}"));
            }
        }
        (Err(e), _) | (_, Err(e)) => fail(format!("unconditional: {e}")),
    }

    let exact = match run_scenario(&s.with_backend(Backend::Exact)) {
        Ok(r) => r,
        Err(e) => {
            fail(format!("exact backend: {e}"));
            return (None, failures);
        }
    };
    let g = s.coupling.g;
    match estimate_weak_value(exact.delta_q(), exact.delta_p(), g, &phi, s.coupling.mass) {
        Ok(est) => {
            let tol = ROUND_TRIP_FACTOR * g.abs();
            let (da, db) = ((est.a - exact.weak.a).abs(), (est.b - exact.weak.b).abs());
            if !(da <= tol && db <= tol) {
                fail(format!("round trip off by ({da:e}, {db:e}) > {tol:e}"));
            }
        }
        Err(e) => fail(format!("estimate: {e}")),
    }

    let bound = AGREEMENT_C * (1.0 + exact.weak.as_complex().norm_sqr()) * g * g;
    for backend in [Backend::FirstOrder, Backend::WeakExp] {
        match run_scenario(&s.with_backend(backend)) {
            Ok(r) => {
                let gap = (r.delta_q() - exact.delta_q()).abs();
                if !(gap <= bound) {
                    fail(format!("{backend} vs exact: dq gap {gap:e} > {bound:e}"));
                }
            }
            // The complex translation is legitimately refused for large |b|.
            Err(CoreError::AmplificationGuard { .. }) if backend == Backend::WeakExp => {}
            Err(e) => fail(format!("{backend}: {e}")),
        }
    }

    (Some(exact), failures)
}
