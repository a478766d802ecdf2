//! Scenario execution, coupling sweeps and weak-value estimation.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::CMatrix;
use crate::measurement::{
    couple_postselect_exact, couple_postselect_first_order, couple_postselect_weak_exp, CouplingSpec,
    PostSelectedPointer,
};
use crate::pointer::{build_grid, d_var_q_dt, make_gaussian, moments, GaussianSpec, Grid, Moments, PointerState};
use crate::system::{make_state, Observable, SystemState, WeakValue};
use crate::theory::{predict_success_probability, shifts_from_moments, ShiftPrediction};
use crate::{Error, Result};

/// Residuals at or below this level are treated as exact in slope fits.
pub const RESIDUAL_FLOOR: f64 = 1e-9;

/// Smallest momentum variance accepted by the weak-value estimator.
pub const MIN_VAR_P: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    Exact,
    FirstOrder,
    WeakExp,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Exact, Backend::FirstOrder, Backend::WeakExp];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::FirstOrder => "first-order",
            Backend::WeakExp => "weak-exp",
        }
    }

    pub fn couple(self, spec: &CouplingSpec, pointer: &PointerState) -> Result<PostSelectedPointer> {
        match self {
            Backend::Exact => couple_postselect_exact(spec, pointer),
            Backend::FirstOrder => couple_postselect_first_order(spec, pointer),
            Backend::WeakExp => couple_postselect_weak_exp(spec, pointer),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "first-order" => Ok(Backend::FirstOrder),
            "weak-exp" => Ok(Backend::WeakExp),
            _ => Err(Error::InvalidParameter(
                "backend must be exact, first-order or weak-exp",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointerRecipe {
    Gaussian(GaussianSpec),
    /// Raw amplitudes on the scenario grid; normalized on use.
    Tabulated(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: u64,
    pub coupling: CouplingSpec,
    pub pointer: PointerRecipe,
    pub grid: Grid,
    pub backend: Backend,
    pub seed: u64,
    /// Pointer potential for evolution cross-checks; never enters the kick.
    pub potential: Option<Vec<f64>>,
}

impl Scenario {
    pub fn new(id: u64, coupling: CouplingSpec, pointer: PointerRecipe, grid: Grid) -> Self {
        Self {
            id,
            coupling,
            pointer,
            grid,
            backend: Backend::Exact,
            seed: 0,
            potential: None,
        }
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self {
            coupling: self.coupling.with_g(g),
            ..self.clone()
        }
    }

    pub fn with_backend(&self, backend: Backend) -> Self {
        Self {
            backend,
            ..self.clone()
        }
    }

    pub fn pointer_state(&self) -> Result<PointerState> {
        match &self.pointer {
            PointerRecipe::Gaussian(spec) => make_gaussian(&self.grid, spec),
            PointerRecipe::Tabulated(amplitudes) => PointerState::from_amplitudes(self.grid, amplitudes.clone()),
        }
    }
}

/// Simulated versus predicted pointer shifts for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario_id: u64,
    pub backend: Backend,
    pub g: f64,
    pub weak: WeakValue,
    pub initial: Moments,
    pub simulated: Moments,
    pub predicted: ShiftPrediction,
    pub r_q: f64,
    pub r_p: f64,
    pub d_var_q_dt: f64,
    pub succ_sim: f64,
    pub succ_pred: f64,
    /// Success probability fell below the warning threshold.
    pub low_success: bool,
}

impl ScenarioResult {
    pub fn delta_q(&self) -> f64 {
        self.simulated.mean_q - self.initial.mean_q
    }

    pub fn delta_p(&self) -> f64 {
        self.simulated.mean_p - self.initial.mean_p
    }

    pub fn r_success(&self) -> f64 {
        (self.succ_sim - self.succ_pred).abs()
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioResult> {
    let pointer = scenario.pointer_state()?;
    let coupling = &scenario.coupling;
    let weak = coupling.weak_value()?;
    let alpha = scenario.backend.couple(coupling, &pointer)?;
    let simulated = alpha.moments()?;

    let initial = moments(&pointer);
    let rate = d_var_q_dt(&pointer, coupling.mass);
    let predicted = shifts_from_moments(weak, coupling.g, &initial, rate, coupling.mass);
    let succ_pred = predict_success_probability(coupling.overlap(), weak, coupling.g, initial.mean_p);

    let result = ScenarioResult {
        scenario_id: scenario.id,
        backend: scenario.backend,
        g: coupling.g,
        weak,
        initial,
        simulated,
        predicted,
        r_q: ((simulated.mean_q - initial.mean_q) - predicted.delta_q).abs(),
        r_p: ((simulated.mean_p - initial.mean_p) - predicted.delta_p).abs(),
        d_var_q_dt: rate,
        succ_sim: alpha.success_prob(),
        succ_pred,
        low_success: alpha.is_low_success(),
    };
    Ok(result)
}

/// Least-squares line through `(log g, log residual)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeFit {
    Fitted {
        slope: f64,
        intercept: f64,
    },
    /// Too few residuals above [`RESIDUAL_FLOOR`] to fit.
    Exact,
}

impl SlopeFit {
    pub fn slope(&self) -> Option<f64> {
        match *self {
            SlopeFit::Fitted { slope, .. } => Some(slope),
            SlopeFit::Exact => None,
        }
    }
}

/// Fits `log y = slope log x + intercept` over the points with `y` above the
/// floor.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> SlopeFit {
    let points: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &r)| r > RESIDUAL_FLOOR)
        .map(|(&g, &r)| (g.ln(), r.ln()))
        .collect();
    if points.len() < 2 {
        return SlopeFit::Exact;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(a, b)| (a - mean_x) * (b - mean_y)).sum();
    let sxx: f64 = points.iter().map(|(a, _)| (a - mean_x) * (a - mean_x)).sum();
    let slope = sxy / sxx;
    SlopeFit::Fitted {
        slope,
        intercept: mean_y - slope * mean_x,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFit {
    pub residuals: Vec<f64>,
    pub fit: SlopeFit,
}

impl ChannelFit {
    fn new(g_values: &[f64], residuals: Vec<f64>) -> Self {
        let fit = fit_log_log(g_values, &residuals);
        Self { residuals, fit }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub g_values: Vec<f64>,
    pub results: Vec<ScenarioResult>,
    pub position: ChannelFit,
    pub momentum: ChannelFit,
    pub success: ChannelFit,
}

/// Runs `scenario` with the exact backend at every `g` in the ladder.
pub fn sweep_g(scenario: &Scenario, g_ladder: &[f64]) -> Result<ConvergenceReport> {
    if g_ladder.len() < 4 {
        return Err(Error::BadLadder("need at least 4 coupling values"));
    }
    if g_ladder.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadLadder("coupling values must be strictly increasing"));
    }
    if !(g_ladder[0] > 0.0) {
        return Err(Error::BadLadder("coupling values must be positive"));
    }
    let base = scenario.with_backend(Backend::Exact);
    let results = g_ladder
        .iter()
        .map(|&g| run_scenario(&base.with_g(g)))
        .collect::<Result<Vec<_>>>()?;
    let channel = |f: fn(&ScenarioResult) -> f64| ChannelFit::new(g_ladder, results.iter().map(f).collect());
    Ok(ConvergenceReport {
        g_values: g_ladder.to_vec(),
        position: channel(|r| r.r_q),
        momentum: channel(|r| r.r_p),
        success: channel(ScenarioResult::r_success),
        results,
    })
}

/// Inverts the shift formulas for `(a, b)` using the pointer's statistics.
pub fn estimate_weak_value(delta_q: f64, delta_p: f64, g: f64, pointer: &PointerState, mass: f64) -> Result<WeakValue> {
    let var_p = moments(pointer).var_p;
    estimate_from_statistics(delta_q, delta_p, g, var_p, d_var_q_dt(pointer, mass), mass)
}

/// `b = dp / (2 g Var_p)`, `a = dq / g - b m dVar_q/dt`.
pub fn estimate_from_statistics(
    delta_q: f64,
    delta_p: f64,
    g: f64,
    var_p: f64,
    d_var_q_dt: f64,
    mass: f64,
) -> Result<WeakValue> {
    if g == 0.0 || !g.is_finite() {
        return Err(Error::InvalidParameter("coupling g must be nonzero"));
    }
    if !(var_p >= MIN_VAR_P) {
        return Err(Error::DegeneratePointer { var_p });
    }
    let b = delta_p / (2.0 * g * var_p);
    let a = delta_q / g - b * mass * d_var_q_dt;
    Ok(WeakValue::new(a, b))
}

/// Settings for randomly generated scenarios.
///
/// Each scenario draws its dimension uniformly from `dims`, builds
/// `A = (G + G^dagger) / 2` from a matrix `G` of unit-variance complex Gaussians,
/// and draws `psi_i`, `psi_f` as normalized complex Gaussian vectors (Haar
/// measure). Pairs with `|<psi_f|psi_i>|` below `min_overlap` are redrawn. The
/// pointer is a Gaussian with `sigma`, `chirp` and `p0` drawn uniformly from
/// the given ranges, centered at `q = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomScenarioConfig {
    pub dims: (usize, usize),
    pub n_points: usize,
    pub length: f64,
    pub sigma: (f64, f64),
    pub chirp: (f64, f64),
    pub p0: (f64, f64),
    pub min_overlap: f64,
    pub g: f64,
    pub mass: f64,
}

impl Default for RandomScenarioConfig {
    fn default() -> Self {
        Self {
            dims: (2, 4),
            n_points: 512,
            length: 40.0,
            sigma: (0.8, 1.2),
            chirp: (-0.5, 0.5),
            p0: (-0.5, 0.5),
            min_overlap: 0.3,
            g: 1e-3,
            mass: 1.0,
        }
    }
}

/// Scenario number `index` of the battery seeded by `seed`.
///
/// Every scenario uses its own ChaCha8 stream, so scenarios are independent of
/// the order they are generated in.
pub fn random_scenario(config: &RandomScenarioConfig, seed: u64, index: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);

    let dim = rng.random_range(config.dims.0..=config.dims.1);
    let observable = random_hermitian(&mut rng, dim)?;
    let (psi_i, psi_f) = loop {
        let psi_i = random_state(&mut rng, dim)?;
        let psi_f = random_state(&mut rng, dim)?;
        let overlap = crate::system::inner_product(&psi_f, &psi_i)?;
        if overlap.norm() >= config.min_overlap {
            break (psi_i, psi_f);
        }
    };
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    let pointer = GaussianSpec {
        q0: 0.0,
        p0: uniform(&mut rng, config.p0),
        sigma: uniform(&mut rng, config.sigma),
        chirp: uniform(&mut rng, config.chirp),
    };
    let grid = build_grid(config.n_points, config.length)?;
    let coupling = CouplingSpec::new(config.g, observable, psi_i, psi_f, config.mass)?;
    let mut scenario = Scenario::new(index, coupling, PointerRecipe::Gaussian(pointer), grid);
    scenario.seed = seed;
    Ok(scenario)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Result<SystemState> {
    let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    make_state(&v)
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> Result<Observable> {
    let data = (0..dim * dim).map(|_| complex_gaussian(rng)).collect();
    let g = CMatrix::from_row_major(dim, data).expect("square");
    let mut h = g.add(&g.adjoint()).scale(Complex64::new(0.5, 0.0));
    // Clear rounding noise on the diagonal.
    for i in 0..dim {
        h[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
    }
    Observable::new(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit_i(g: f64, pointer: GaussianSpec) -> Scenario {
        let coupling = CouplingSpec::new(
            g,
            Observable::pauli_z(),
            make_state(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap(),
            make_state(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap(),
            1.0,
        )
        .unwrap();
        Scenario::new(
            1,
            coupling,
            PointerRecipe::Gaussian(pointer),
            build_grid(1024, 80.0).unwrap(),
        )
    }

    #[test]
    fn eigenstate_scenario_is_exact() {
        let zero = SystemState::basis(2, 0).unwrap();
        let coupling = CouplingSpec::new(0.2, Observable::pauli_z(), zero.clone(), zero, 1.0).unwrap();
        let s = Scenario::new(
            0,
            coupling,
            PointerRecipe::Gaussian(GaussianSpec::centered(1.0).with_chirp(0.5)),
            build_grid(1024, 80.0).unwrap(),
        );
        let r = run_scenario(&s).unwrap();
        assert!(r.r_q <= 1e-9 && r.r_p <= 1e-9, "{r:?}");
    }

    #[test]
    fn imaginary_weak_value_scenarios() {
        let g = 1e-3;
        let r = run_scenario(&qubit_i(g, GaussianSpec::centered(1.0).with_chirp(0.5))).unwrap();
        assert_abs_diff_eq!(r.delta_q(), 0.002, epsilon = 10.0 * g * g);
        assert_abs_diff_eq!(r.delta_p(), 2.5e-3, epsilon = 10.0 * g * g);
        assert!(r.r_q <= 10.0 * g * g && r.r_p <= 10.0 * g * g);

        let r = run_scenario(&qubit_i(g, GaussianSpec::centered(1.0))).unwrap();
        assert!(r.delta_q().abs() <= 10.0 * g * g);
    }

    #[test]
    fn generic_sweep_has_quadratic_residuals() {
        let coupling = CouplingSpec::new(
            1e-3,
            Observable::pauli_z(),
            make_state(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap(),
            make_state(&[
                c((core::f64::consts::PI / 6.0).cos(), 0.0),
                Complex64::from_polar((core::f64::consts::PI / 6.0).sin(), core::f64::consts::FRAC_PI_4),
            ])
            .unwrap(),
            1.0,
        )
        .unwrap();
        let s = Scenario::new(
            2,
            coupling,
            PointerRecipe::Gaussian(GaussianSpec::centered(1.0).with_chirp(0.5).with_momentum(0.7)),
            build_grid(1024, 80.0).unwrap(),
        );
        let report = sweep_g(&s, &[1e-3, 3e-3, 1e-2, 3e-2]).unwrap();
        for channel in [&report.position, &report.momentum, &report.success] {
            let slope = channel.fit.slope().unwrap();
            assert!((slope - 2.0).abs() <= 0.2, "slope {slope}");
        }
    }

    #[test]
    fn eigenstate_sweep_is_flagged_exact() {
        let zero = SystemState::basis(2, 0).unwrap();
        let coupling = CouplingSpec::new(0.0, Observable::pauli_z(), zero.clone(), zero, 1.0).unwrap();
        let s = Scenario::new(
            0,
            coupling,
            PointerRecipe::Gaussian(GaussianSpec::centered(1.0)),
            build_grid(256, 40.0).unwrap(),
        );
        let report = sweep_g(&s, &[1e-3, 3e-3, 1e-2, 3e-2]).unwrap();
        assert_eq!(report.position.fit, SlopeFit::Exact);
        assert_eq!(report.momentum.fit, SlopeFit::Exact);
    }

    #[test]
    fn ladder_validation() {
        let s = qubit_i(1e-3, GaussianSpec::centered(1.0));
        assert!(matches!(sweep_g(&s, &[1e-3, 1e-2, 3e-2]), Err(Error::BadLadder(_))));
        assert!(matches!(
            sweep_g(&s, &[1e-3, 1e-2, 1e-2, 3e-2]),
            Err(Error::BadLadder(_))
        ));
    }

    #[test]
    fn fit_recovers_known_slope() {
        let x = vec![1e-3, 3e-3, 1e-2, 3e-2];
        let y: Vec<f64> = x.iter().map(|g| 7.0 * g * g).collect();
        match fit_log_log(&x, &y) {
            SlopeFit::Fitted { slope, intercept } => {
                assert_abs_diff_eq!(slope, 2.0, epsilon = 1e-12);
                assert_abs_diff_eq!(intercept, 7.0f64.ln(), epsilon = 1e-10);
            }
            SlopeFit::Exact => panic!("expected a fit"),
        }
    }

    #[test]
    fn estimator_inverts_predictions() {
        let grid = build_grid(1024, 80.0).unwrap();
        let chirped = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_chirp(0.5)).unwrap();
        let w = estimate_weak_value(0.02, 0.025, 0.01, &chirped, 1.0).unwrap();
        assert_abs_diff_eq!(w.a, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.b, 1.0, epsilon = 1e-9);

        let g = 0.01;
        let w = estimate_weak_value(g * 3.0f64.sqrt(), 0.0, g, &chirped, 1.0).unwrap();
        assert_abs_diff_eq!(w.a, 3.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!(w.b, 0.0);

        assert!(matches!(
            estimate_from_statistics(0.1, 0.1, 0.01, 0.0, 0.0, 1.0),
            Err(Error::DegeneratePointer { .. })
        ));
    }

    #[test]
    fn estimator_round_trip_on_simulation() {
        let g = 1e-3;
        let s = qubit_i(g, GaussianSpec::centered(1.0).with_chirp(0.5));
        let r = run_scenario(&s).unwrap();
        let w = estimate_weak_value(r.delta_q(), r.delta_p(), g, &s.pointer_state().unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(w.a, 0.0, epsilon = 5e-3);
        assert_abs_diff_eq!(w.b, 1.0, epsilon = 5e-3);
    }

    #[test]
    fn random_scenarios_are_reproducible() {
        let config = RandomScenarioConfig::default();
        let a = random_scenario(&config, 7, 3).unwrap();
        let b = random_scenario(&config, 7, 3).unwrap();
        assert_eq!(a, b);
        let other = random_scenario(&config, 7, 4).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn backend_names_round_trip() {
        for b in Backend::ALL {
            assert_eq!(b.name().parse::<Backend>().unwrap(), b);
        }
        assert!("fast".parse::<Backend>().is_err());
    }
}
