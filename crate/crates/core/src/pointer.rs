//! The measurement pointer: a wavefunction sampled on a uniform periodic grid.
//!
//! Positions are `q_j = -L/2 + j dq`. Momentum is diagonal in the discrete
//! Fourier basis with wavenumbers `k_n = 2 pi n / L`, `n` in `[-N/2, N/2)`, and
//! `p = -i d/dq` is applied spectrally everywhere (moments, currents, kicks).
//! Integrals are plain Riemann sums with weight `dq`, which are spectrally
//! accurate for smooth states that vanish near the edges; the tail guard keeps
//! states in that regime.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::fft::Fft;
use crate::{Error, Result};

/// Largest probability mass allowed in the outer region of the grid.
pub const TAIL_GUARD: f64 = 1e-10;

/// Width of the guarded band at each edge, as a fraction of `L`.
pub const TAIL_FRACTION: f64 = 0.05;

/// Phase gradients are masked where `rho < NODE_THRESHOLD * max(rho)`.
pub const NODE_THRESHOLD: f64 = 1e-10;

/// Largest `|dt| * max|V|` accepted by the split-step propagator.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_points: usize,
    length: f64,
}

pub fn build_grid(n_points: usize, length: f64) -> Result<Grid> {
    if !n_points.is_power_of_two() {
        return Err(Error::BadGridSpec("n_points must be a power of two"));
    }
    if n_points < 64 {
        return Err(Error::BadGridSpec("n_points must be at least 64"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::BadGridSpec("length must be positive and finite"));
    }
    Ok(Grid { n_points, length })
}

impl Grid {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dq(&self) -> f64 {
        self.length / self.n_points as f64
    }

    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dq()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    /// Wavenumber of FFT bin `n` (bins at and above `N/2` are negative).
    pub fn wavenumber(&self, n: usize) -> f64 {
        let half = self.n_points / 2;
        let signed = if n < half {
            n as f64
        } else {
            n as f64 - self.n_points as f64
        };
        2.0 * PI * signed / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|n| self.wavenumber(n)).collect()
    }

    /// Magnitude of the Nyquist wavenumber, `pi / dq`.
    pub fn k_max(&self) -> f64 {
        PI / self.dq()
    }

    pub(crate) fn fft(&self) -> Fft {
        Fft::new(self.n_points)
    }

    fn in_tail_band(&self, j: usize) -> bool {
        let q = self.position(j);
        let band = TAIL_FRACTION * self.length;
        q < -0.5 * self.length + band || q > 0.5 * self.length - band
    }

    /// `dq * sum |f_j|^2`.
    pub fn norm_sqr(&self, amplitudes: &[Complex64]) -> f64 {
        self.dq() * amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// `dq * sum conj(f_j) g_j`.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        f.iter().zip(g).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.dq()
    }

    /// Fraction of the total mass of `amplitudes` lying in the edge bands.
    pub fn tail_mass(&self, amplitudes: &[Complex64]) -> f64 {
        let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = amplitudes
            .iter()
            .enumerate()
            .filter(|(j, _)| self.in_tail_band(*j))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        tail / total
    }

    pub(crate) fn check_tail(&self, amplitudes: &[Complex64]) -> Result<()> {
        let mass = self.tail_mass(amplitudes);
        if mass <= TAIL_GUARD {
            Ok(())
        } else {
            Err(Error::TailMass { mass })
        }
    }

    /// Multiplies the momentum-space representation by `factor(k)`.
    pub fn apply_in_momentum(&self, amplitudes: &[Complex64], factor: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let fft = self.fft();
        let mut buf = amplitudes.to_vec();
        fft.forward(&mut buf);
        for (n, x) in buf.iter_mut().enumerate() {
            *x *= factor(self.wavenumber(n));
        }
        fft.inverse(&mut buf);
        buf
    }

    /// `p^power f` with `p = -i d/dq`.
    pub fn apply_momentum_power(&self, amplitudes: &[Complex64], power: u32) -> Vec<Complex64> {
        if power == 0 {
            return amplitudes.to_vec();
        }
        self.apply_in_momentum(amplitudes, |k| Complex64::new(k.powi(power as i32), 0.0))
    }

    /// `q^power f`.
    pub fn apply_position_power(&self, amplitudes: &[Complex64], power: u32) -> Vec<Complex64> {
        amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a * self.position(j).powi(power as i32))
            .collect()
    }

    /// Spectral derivative `d f / dq = i p f`.
    pub fn derivative(&self, amplitudes: &[Complex64]) -> Vec<Complex64> {
        self.apply_in_momentum(amplitudes, |k| Complex64::new(0.0, k))
    }
}

/// Normalized pointer wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerState {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl PointerState {
    /// Normalizes `amplitudes` and checks the tail guard.
    pub fn from_amplitudes(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::DimMismatch {
                expected: grid.n_points(),
                found: amplitudes.len(),
            });
        }
        let norm = grid.norm_sqr(&amplitudes).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroVector);
        }
        grid.check_tail(&amplitudes)?;
        Ok(Self {
            grid,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.norm_sqr(&self.amplitudes)
    }

    /// Norm computed from the momentum representation (Parseval check).
    pub fn momentum_norm_sqr(&self) -> f64 {
        let mut buf = self.amplitudes.clone();
        self.grid.fft().forward(&mut buf);
        let n = self.grid.n_points() as f64;
        self.grid.dq() * buf.iter().map(|a| a.norm_sqr()).sum::<f64>() / n
    }

    /// `<self|f>` for an arbitrary grid function `f`.
    pub fn inner(&self, f: &[Complex64]) -> Complex64 {
        self.grid.inner(&self.amplitudes, f)
    }
}

/// Parameters of `phi(q) ~ exp(-(q-q0)^2/(4 sigma^2) + i c (q-q0)^2 + i p0 q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub q0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub chirp: f64,
}

impl GaussianSpec {
    pub fn centered(sigma: f64) -> Self {
        Self {
            q0: 0.0,
            p0: 0.0,
            sigma,
            chirp: 0.0,
        }
    }

    pub fn with_chirp(self, chirp: f64) -> Self {
        Self { chirp, ..self }
    }

    pub fn with_momentum(self, p0: f64) -> Self {
        Self { p0, ..self }
    }

    pub fn with_center(self, q0: f64) -> Self {
        Self { q0, ..self }
    }
}

pub fn make_gaussian(grid: &Grid, spec: &GaussianSpec) -> Result<PointerState> {
    if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidParameter("sigma must be positive"));
    }
    if !(spec.q0.is_finite() && spec.p0.is_finite() && spec.chirp.is_finite()) {
        return Err(Error::InvalidParameter("Gaussian parameters must be finite"));
    }
    let amplitudes: Vec<Complex64> = (0..grid.n_points())
        .map(|j| {
            let q = grid.position(j);
            let d = q - spec.q0;
            let envelope = (-d * d / (4.0 * spec.sigma * spec.sigma)).exp();
            envelope * Complex64::from_polar(1.0, spec.chirp * d * d + spec.p0 * q)
        })
        .collect();

    let half = 0.5 * grid.length();
    let clearance = (spec.q0 + half).min(half - spec.q0);
    if clearance < 8.0 * spec.sigma {
        return Err(Error::TailMass {
            mass: grid.tail_mass(&amplitudes),
        });
    }
    PointerState::from_amplitudes(*grid, amplitudes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
}

impl Moments {
    /// Moments of `amplitudes / ||amplitudes||`; works for sub-normalized states.
    pub fn of_amplitudes(grid: &Grid, amplitudes: &[Complex64]) -> Self {
        let weights: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = weights.iter().sum();
        let mean_q = weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * grid.position(j))
            .sum::<f64>()
            / total;
        let var_q = weights
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let d = grid.position(j) - mean_q;
                w * d * d
            })
            .sum::<f64>()
            / total;

        let mut spectrum = amplitudes.to_vec();
        grid.fft().forward(&mut spectrum);
        let power: Vec<f64> = spectrum.iter().map(|a| a.norm_sqr()).collect();
        let total_p: f64 = power.iter().sum();
        let mean_p = power
            .iter()
            .enumerate()
            .map(|(n, w)| w * grid.wavenumber(n))
            .sum::<f64>()
            / total_p;
        let var_p = power
            .iter()
            .enumerate()
            .map(|(n, w)| {
                let d = grid.wavenumber(n) - mean_p;
                w * d * d
            })
            .sum::<f64>()
            / total_p;

        Self {
            mean_q,
            mean_p,
            var_q,
            var_p,
        }
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.var_q * self.var_p
    }
}

pub fn moments(state: &PointerState) -> Moments {
    Moments::of_amplitudes(&state.grid, &state.amplitudes)
}

/// `phi(q) -> phi(q - shift)` via the momentum-space phase `exp(-i shift k)`.
pub fn translate(state: &PointerState, shift: f64) -> Result<PointerState> {
    let amplitudes = translate_amplitudes(&state.grid, &state.amplitudes, shift);
    state.grid.check_tail(&amplitudes)?;
    Ok(PointerState {
        grid: state.grid,
        amplitudes,
    })
}

pub(crate) fn translate_amplitudes(grid: &Grid, amplitudes: &[Complex64], shift: f64) -> Vec<Complex64> {
    if shift == 0.0 {
        return amplitudes.to_vec();
    }
    grid.apply_in_momentum(amplitudes, |k| Complex64::from_polar(1.0, -shift * k))
}

/// Madelung fields of `phi = R exp(iS)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFields {
    /// `rho = |phi|^2`.
    pub rho: Vec<f64>,
    /// `S'`, or `None` at (near-)nodes.
    pub s_prime: Vec<Option<f64>>,
    /// `j = rho S' / m`.
    pub current: Vec<f64>,
}

impl PolarFields {
    pub fn max_abs_phase_gradient(&self) -> f64 {
        self.s_prime.iter().flatten().fold(0.0, |acc, s| acc.max(s.abs()))
    }
}

pub fn polar_fields(state: &PointerState, mass: f64) -> PolarFields {
    let grid = &state.grid;
    let derivative = grid.derivative(&state.amplitudes);
    let rho: Vec<f64> = state.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let rho_max = rho.iter().fold(0.0f64, |acc, &r| acc.max(r));
    let threshold = NODE_THRESHOLD * rho_max;

    // Im(phi' conj(phi)) = rho S'
    let flux: Vec<f64> = state
        .amplitudes
        .iter()
        .zip(&derivative)
        .map(|(phi, dphi)| (dphi * phi.conj()).im)
        .collect();
    let s_prime = rho
        .iter()
        .zip(&flux)
        .map(|(&r, &f)| (r >= threshold && r > 0.0).then(|| f / r))
        .collect();
    let current = flux.iter().map(|f| f / mass).collect();
    PolarFields { rho, s_prime, current }
}

/// Instantaneous `d Var_q / dt = (<pq + qp> - 2 <q><p>) / m`.
///
/// Only the kinetic term of `H = p^2/2m + V(q)` fails to commute with `q^2`,
/// so the result does not depend on the potential.
pub fn d_var_q_dt(state: &PointerState, mass: f64) -> f64 {
    let grid = &state.grid;
    let norm = state.norm_sqr();
    let mean_q = grid
        .positions()
        .iter()
        .zip(&state.amplitudes)
        .map(|(q, a)| q * a.norm_sqr())
        .sum::<f64>()
        * grid.dq()
        / norm;
    // <p(q-mu) + (q-mu)p> = 2 Re <phi|(q-mu) p|phi>
    let p_phi = grid.apply_momentum_power(&state.amplitudes, 1);
    let centered: Vec<Complex64> = p_phi
        .iter()
        .enumerate()
        .map(|(j, x)| x * (grid.position(j) - mean_q))
        .collect();
    2.0 * state.inner(&centered).re / norm / mass
}

/// Pointer Hamiltonian `p^2 / 2m + V(q)` and step size for split-step evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSpec {
    pub mass: f64,
    /// Potential sampled on the grid; `None` means `V = 0`.
    pub potential: Option<Vec<f64>>,
    pub dt: f64,
}

impl EvolutionSpec {
    pub fn free(mass: f64, dt: f64) -> Self {
        Self {
            mass,
            potential: None,
            dt,
        }
    }

    pub fn with_potential(self, potential: Vec<f64>) -> Self {
        Self {
            potential: Some(potential),
            ..self
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter("mass must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive"));
        }
        if let Some(v) = &self.potential {
            if v.len() != grid.n_points() {
                return Err(Error::DimMismatch {
                    expected: grid.n_points(),
                    found: v.len(),
                });
            }
            let vmax = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            let value = self.dt * vmax;
            if !(value <= STABILITY_LIMIT) {
                return Err(Error::StabilityGuard { value });
            }
        }
        Ok(())
    }
}

/// Strang split-step evolution under `i phi_t = -phi''/2m + V phi`.
///
/// Negative `steps` evolve backwards in time. With `V = 0` the propagator is
/// exact in momentum space.
pub fn evolve_free(state: &PointerState, spec: &EvolutionSpec, steps: i64) -> Result<PointerState> {
    let grid = state.grid;
    spec.validate(&grid)?;
    if steps == 0 {
        return Ok(state.clone());
    }
    let dt = if steps > 0 { spec.dt } else { -spec.dt };
    let fft = grid.fft();
    let kinetic: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|k| Complex64::from_polar(1.0, -k * k * dt / (2.0 * spec.mass)))
        .collect();
    let half_potential: Option<Vec<Complex64>> = spec
        .potential
        .as_ref()
        .map(|v| v.iter().map(|x| Complex64::from_polar(1.0, -x * dt / 2.0)).collect());

    let mut psi = state.amplitudes.clone();
    for _ in 0..steps.unsigned_abs() {
        if let Some(hp) = &half_potential {
            psi.iter_mut().zip(hp).for_each(|(x, f)| *x *= f);
        }
        fft.forward(&mut psi);
        psi.iter_mut().zip(&kinetic).for_each(|(x, f)| *x *= f);
        fft.inverse(&mut psi);
        if let Some(hp) = &half_potential {
            psi.iter_mut().zip(hp).for_each(|(x, f)| *x *= f);
        }
    }
    grid.check_tail(&psi)?;
    Ok(PointerState { grid, amplitudes: psi })
}

/// `max_j |rho_t + j'|` with `rho_t` from a central difference over one step
/// each way and `j'` the spectral derivative of the current.
pub fn continuity_residual(state: &PointerState, spec: &EvolutionSpec) -> Result<f64> {
    let grid = state.grid;
    let forward = evolve_free(state, spec, 1)?;
    let backward = evolve_free(state, spec, -1)?;
    let current: Vec<Complex64> = polar_fields(state, spec.mass)
        .current
        .into_iter()
        .map(|j| Complex64::new(j, 0.0))
        .collect();
    let current_derivative = grid.derivative(&current);
    let residual = forward
        .amplitudes
        .iter()
        .zip(&backward.amplitudes)
        .zip(&current_derivative)
        .map(|((f, b), dj)| {
            let rho_t = (f.norm_sqr() - b.norm_sqr()) / (2.0 * spec.dt);
            (rho_t + dj.re).abs()
        })
        .fold(0.0, f64::max);
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn standard_grid() -> Grid {
        build_grid(1024, 80.0).unwrap()
    }

    #[test]
    fn grid_spacing() {
        assert_eq!(build_grid(256, 40.0).unwrap().dq(), 0.15625);
        assert_eq!(build_grid(1024, 80.0).unwrap().dq(), 0.078125);
        assert!(matches!(build_grid(100, 40.0), Err(Error::BadGridSpec(_))));
        assert!(matches!(build_grid(32, 40.0), Err(Error::BadGridSpec(_))));
        assert!(matches!(build_grid(64, -1.0), Err(Error::BadGridSpec(_))));
    }

    #[test]
    fn momentum_lattice_is_symmetric_except_nyquist() {
        let grid = build_grid(64, 10.0).unwrap();
        let mut ks = grid.wavenumbers();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(ks[0], -grid.k_max(), epsilon = 1e-12);
        for i in 1..32 {
            assert_abs_diff_eq!(ks[i], -ks[64 - i], epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_moments() {
        let grid = standard_grid();
        let m = moments(&make_gaussian(&grid, &GaussianSpec::centered(1.0)).unwrap());
        assert_abs_diff_eq!(m.mean_q, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.mean_p, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.var_q, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(m.var_p, 0.25, epsilon = 1e-8);

        let m = moments(&make_gaussian(&grid, &GaussianSpec::centered(1.0).with_chirp(0.5)).unwrap());
        assert_abs_diff_eq!(m.var_p, 1.25, epsilon = 1e-8);

        let m = moments(&make_gaussian(&grid, &GaussianSpec::centered(1.0).with_momentum(0.7)).unwrap());
        assert_abs_diff_eq!(m.mean_p, 0.7, epsilon = 1e-10);

        let m = moments(&make_gaussian(&grid, &GaussianSpec::centered(2.0)).unwrap());
        assert_abs_diff_eq!(m.var_q, 4.0, epsilon = 1e-8);
        assert_abs_diff_eq!(m.var_p, 1.0 / 16.0, epsilon = 1e-8);
    }

    #[test]
    fn gaussian_tail_guard() {
        let grid = build_grid(256, 40.0).unwrap();
        assert!(make_gaussian(&grid, &GaussianSpec::centered(2.5)).is_ok());
        assert!(matches!(
            make_gaussian(&grid, &GaussianSpec::centered(3.0)),
            Err(Error::TailMass { .. })
        ));
        assert!(matches!(
            make_gaussian(&grid, &GaussianSpec::centered(1.0).with_center(15.0)),
            Err(Error::TailMass { .. })
        ));
    }

    #[test]
    fn translation() {
        let grid = standard_grid();
        let phi = make_gaussian(&grid, &GaussianSpec::centered(1.0)).unwrap();
        assert_eq!(translate(&phi, 0.0).unwrap(), phi);

        let shifted = translate(&phi, 1.5).unwrap();
        let expected = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_center(1.5)).unwrap();
        for (a, b) in shifted.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
        let m = moments(&shifted);
        assert_abs_diff_eq!(m.mean_q, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.var_q, 1.0, epsilon = 1e-10);

        let m = moments(&translate(&phi, 2.0).unwrap());
        assert_abs_diff_eq!(m.mean_q, 2.0, epsilon = 1e-12);

        let broad = make_gaussian(&grid, &GaussianSpec::centered(4.0)).unwrap();
        assert!(matches!(translate(&broad, 40.0), Err(Error::TailMass { .. })));
    }

    #[test]
    fn polar_fields_of_reference_states() {
        let grid = standard_grid();
        let real = make_gaussian(&grid, &GaussianSpec::centered(1.0)).unwrap();
        let fields = polar_fields(&real, 1.0);
        assert!(fields.max_abs_phase_gradient() <= 1e-8);
        assert!(fields.current.iter().all(|j| j.abs() <= 1e-12));
        assert_abs_diff_eq!(grid.dq() * fields.rho.iter().sum::<f64>(), 1.0, epsilon = 1e-10);

        let chirped = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_chirp(0.5)).unwrap();
        let fields = polar_fields(&chirped, 1.0);
        for (j, s) in fields.s_prime.iter().enumerate() {
            let q = grid.position(j);
            if q.abs() < 5.0 {
                assert_abs_diff_eq!(s.unwrap(), q, epsilon = 1e-8);
            }
        }

        let ramp = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_momentum(0.7)).unwrap();
        let fields = polar_fields(&ramp, 1.0);
        let centre = grid.n_points() / 2;
        assert_abs_diff_eq!(fields.s_prime[centre].unwrap(), 0.7, epsilon = 1e-10);
    }

    #[test]
    fn nodes_are_masked() {
        let grid = standard_grid();
        // Odd state has a node at q = 0.
        let amps: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|&q| Complex64::new(q * (-q * q / 4.0).exp(), 0.0))
            .collect();
        let state = PointerState::from_amplitudes(grid, amps).unwrap();
        let fields = polar_fields(&state, 1.0);
        assert!(fields.s_prime[grid.n_points() / 2].is_none());
        assert!(fields.s_prime[grid.n_points() / 2 + 10].is_some());
    }

    #[test]
    fn variance_growth_rate() {
        let grid = standard_grid();
        let real = make_gaussian(&grid, &GaussianSpec::centered(1.0)).unwrap();
        assert_abs_diff_eq!(d_var_q_dt(&real, 1.0), 0.0, epsilon = 1e-12);
        let chirped = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_chirp(0.5)).unwrap();
        assert_abs_diff_eq!(d_var_q_dt(&chirped, 1.0), 2.0, epsilon = 1e-10);
        let chirped = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_chirp(-0.5)).unwrap();
        assert_abs_diff_eq!(d_var_q_dt(&chirped, 2.0), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn free_spreading_law() {
        let grid = standard_grid();
        let phi = make_gaussian(&grid, &GaussianSpec::centered(1.0)).unwrap();
        let spec = EvolutionSpec::free(1.0, 0.01);
        assert_eq!(evolve_free(&phi, &spec, 0).unwrap(), phi);
        let evolved = evolve_free(&phi, &spec, 150).unwrap();
        let t = 1.5;
        assert_abs_diff_eq!(moments(&evolved).var_q, 1.0 + t * t / 4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(evolved.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn finite_difference_matches_growth_rate() {
        let grid = standard_grid();
        let chirped = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_chirp(0.5)).unwrap();
        let dt = 1e-4;
        let spec = EvolutionSpec::free(1.0, dt);
        let plus = moments(&evolve_free(&chirped, &spec, 1).unwrap()).var_q;
        let minus = moments(&evolve_free(&chirped, &spec, -1).unwrap()).var_q;
        assert_abs_diff_eq!((plus - minus) / (2.0 * dt), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn stability_guard() {
        let grid = build_grid(64, 20.0).unwrap();
        let phi = make_gaussian(&grid, &GaussianSpec::centered(1.0)).unwrap();
        let spec = EvolutionSpec::free(1.0, 0.5).with_potential(vec![1.0; 64]);
        assert!(matches!(evolve_free(&phi, &spec, 1), Err(Error::StabilityGuard { .. })));
    }

    #[test]
    fn continuity_holds() {
        let grid = standard_grid();
        let phi = make_gaussian(&grid, &GaussianSpec::centered(1.0)).unwrap();
        let r = continuity_residual(&phi, &EvolutionSpec::free(1.0, 1e-4)).unwrap();
        assert!(r <= 1e-6, "residual {r}");
        let ramp = make_gaussian(&grid, &GaussianSpec::centered(1.0).with_momentum(0.7)).unwrap();
        let r = continuity_residual(&ramp, &EvolutionSpec::free(1.0, 1e-4)).unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }
}
