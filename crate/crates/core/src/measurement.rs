//! Impulsive von Neumann coupling `exp(-i g A (x) p)` followed by
//! post-selection of the system on `psi_f`.
//!
//! Three backends produce the sub-normalized pointer state
//! `alpha = <psi_f| exp(-i g A p) |psi_i> |phi>`:
//!
//! * [`couple_postselect_exact`]: branch sum over eigenvalue levels, valid for all `g`;
//! * [`couple_postselect_first_order`]: `<psi_f|psi_i> (1 - i g A_w p) phi`;
//! * [`couple_postselect_weak_exp`]: `<psi_f|psi_i> exp(-i g A_w p) phi`.
//!
//! [`full_tensor_reference`] evaluates the same state on the joint
//! system-pointer space and serves as an oracle for the exact backend.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::linalg::{expm, CMatrix};
use crate::pointer::{translate_amplitudes, Grid, Moments, PointerState};
use crate::system::{
    eigendecompose, expectation, inner_product, weak_value_with_threshold, Observable, SystemState, WeakValue,
    DEFAULT_OVERLAP_THRESHOLD,
};
use crate::{Error, Result};

/// Largest joint-space size accepted by [`full_tensor_reference`].
pub const TENSOR_SIZE_LIMIT: usize = 1_000_000;

/// Post-selection below this success probability is flagged.
pub const SUCCESS_WARNING: f64 = 1e-6;

/// Post-selection below this success probability is an error for normalized moments.
pub const SUCCESS_FLOOR: f64 = 1e-12;

/// Everything about the system side of one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub g: f64,
    pub observable: Observable,
    pub psi_i: SystemState,
    pub psi_f: SystemState,
    pub mass: f64,
    pub overlap_threshold: f64,
}

impl CouplingSpec {
    pub fn new(g: f64, observable: Observable, psi_i: SystemState, psi_f: SystemState, mass: f64) -> Result<Self> {
        let dim = observable.dim();
        for found in [psi_i.dim(), psi_f.dim()] {
            if found != dim {
                return Err(Error::DimMismatch { expected: dim, found });
            }
        }
        if !g.is_finite() {
            return Err(Error::InvalidParameter("coupling g must be finite"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter("mass must be positive"));
        }
        Ok(Self {
            g,
            observable,
            psi_i,
            psi_f,
            mass,
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
        })
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn with_overlap_threshold(self, overlap_threshold: f64) -> Self {
        Self {
            overlap_threshold,
            ..self
        }
    }

    /// `<psi_f|psi_i>`.
    pub fn overlap(&self) -> Complex64 {
        inner_product(&self.psi_f, &self.psi_i).expect("dimensions checked at construction")
    }

    pub fn weak_value(&self) -> Result<WeakValue> {
        weak_value_with_threshold(&self.observable, &self.psi_i, &self.psi_f, self.overlap_threshold)
    }
}

/// Sub-normalized pointer state after post-selection.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectedPointer {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    success_prob: f64,
}

impl PostSelectedPointer {
    fn new(grid: Grid, amplitudes: Vec<Complex64>) -> Self {
        let success_prob = grid.norm_sqr(&amplitudes);
        Self {
            grid,
            amplitudes,
            success_prob,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    pub fn is_low_success(&self) -> bool {
        self.success_prob < SUCCESS_WARNING
    }

    /// Moments of `alpha / sqrt(<alpha|alpha>)`.
    pub fn moments(&self) -> Result<Moments> {
        if !(self.success_prob >= SUCCESS_FLOOR) {
            return Err(Error::PostSelectionFailed {
                prob: self.success_prob,
            });
        }
        Ok(Moments::of_amplitudes(&self.grid, &self.amplitudes))
    }

    /// `max_j |alpha_j - other_j|`.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `sqrt(dq sum |alpha_j - other_j|^2)`.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let diff: Vec<Complex64> = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a - b)
            .collect();
        self.grid.norm_sqr(&diff).sqrt()
    }
}

/// `alpha(q) = sum_l c_l phi(q - g a_l)` with `c_l = <psi_f|P_l|psi_i>` summed
/// over the eigenvalue levels `a_l` of `A`.
pub fn couple_postselect_exact(spec: &CouplingSpec, pointer: &PointerState) -> Result<PostSelectedPointer> {
    let grid = *pointer.grid();
    let decomposition = eigendecompose(&spec.observable)?;
    let mut alpha = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    for level in decomposition.levels() {
        let branch = translate_amplitudes(&grid, pointer.amplitudes(), spec.g * level.eigenvalue);
        grid.check_tail(&branch)?;
        let coefficient = level.projector_element(&spec.psi_f, &spec.psi_i);
        for (a, b) in alpha.iter_mut().zip(&branch) {
            *a += coefficient * b;
        }
    }
    Ok(PostSelectedPointer::new(grid, alpha))
}

/// `<psi_f|psi_i> (1 - i g A_w p) phi`.
pub fn couple_postselect_first_order(spec: &CouplingSpec, pointer: &PointerState) -> Result<PostSelectedPointer> {
    let weak = spec.weak_value()?.as_complex();
    let overlap = spec.overlap();
    let grid = *pointer.grid();
    let p_phi = grid.apply_momentum_power(pointer.amplitudes(), 1);
    let factor = Complex64::new(0.0, -spec.g) * weak;
    let alpha = pointer
        .amplitudes()
        .iter()
        .zip(&p_phi)
        .map(|(phi, p)| overlap * (phi + factor * p))
        .collect();
    Ok(PostSelectedPointer::new(grid, alpha))
}

/// `<psi_f|psi_i> exp(-i g A_w p) phi`, a translation by the complex amount `g A_w`.
///
/// The imaginary part of the shift multiplies momentum components by
/// `exp(g b k)`; the call is refused when `g |b| k_max > 1`.
pub fn couple_postselect_weak_exp(spec: &CouplingSpec, pointer: &PointerState) -> Result<PostSelectedPointer> {
    let weak = spec.weak_value()?;
    let grid = *pointer.grid();
    let amplification = spec.g.abs() * weak.b.abs() * grid.k_max();
    if !(amplification <= 1.0) {
        return Err(Error::AmplificationGuard { value: amplification });
    }
    let overlap = spec.overlap();
    let shift = Complex64::new(0.0, -spec.g) * weak.as_complex();
    let alpha = grid.apply_in_momentum(pointer.amplitudes(), |k| overlap * (shift * k).exp());
    Ok(PostSelectedPointer::new(grid, alpha))
}

/// `<alpha|alpha>`.
pub fn success_probability(alpha: &PostSelectedPointer) -> f64 {
    alpha.success_prob
}

/// Pointer moments without post-selection: the mixture of translates
/// `phi(q - g a_l)` weighted by `<psi_i|P_l|psi_i>`.
pub fn unconditional_moments(spec: &CouplingSpec, pointer: &PointerState) -> Result<Moments> {
    let grid = *pointer.grid();
    let decomposition = eigendecompose(&spec.observable)?;
    let mut mean_q = 0.0;
    let mut mean_p = 0.0;
    let mut second_q = 0.0;
    let mut second_p = 0.0;
    for level in decomposition.levels() {
        let weight = level.projector_element(&spec.psi_i, &spec.psi_i).re;
        let branch = translate_amplitudes(&grid, pointer.amplitudes(), spec.g * level.eigenvalue);
        grid.check_tail(&branch)?;
        let m = Moments::of_amplitudes(&grid, &branch);
        mean_q += weight * m.mean_q;
        mean_p += weight * m.mean_p;
        second_q += weight * (m.var_q + m.mean_q * m.mean_q);
        second_p += weight * (m.var_p + m.mean_p * m.mean_p);
    }
    Ok(Moments {
        mean_q,
        mean_p,
        var_q: second_q - mean_q * mean_q,
        var_p: second_p - mean_p * mean_p,
    })
}

/// Shift of the unconditional mean position predicted by `g <A>`.
pub fn unconditional_shift(spec: &CouplingSpec) -> Result<f64> {
    Ok(spec.g * expectation(&spec.observable, &spec.psi_i)?)
}

/// System-pointer state stored as one pointer wavefunction per system basis
/// vector (`dim x n_points`).
#[derive(Debug, Clone)]
pub struct JointState {
    grid: Grid,
    rows: Vec<Vec<Complex64>>,
}

impl JointState {
    /// `|psi> (x) |phi>`.
    pub fn product(psi: &SystemState, pointer: &PointerState) -> Result<Self> {
        let size = psi.dim() * pointer.grid().n_points();
        if size > TENSOR_SIZE_LIMIT {
            return Err(Error::SizeGuard { size });
        }
        let rows = psi
            .amplitudes()
            .iter()
            .map(|c| pointer.amplitudes().iter().map(|x| c * x).collect())
            .collect();
        Ok(Self {
            grid: *pointer.grid(),
            rows,
        })
    }

    /// Applies `exp(-i g A (x) p)`. In momentum space this is the system matrix
    /// `exp(-i g k A)` at every wavenumber, evaluated here by a Taylor matrix
    /// exponential so the result does not depend on an eigendecomposition.
    pub fn kick(&mut self, g: f64, observable: &Observable) -> Result<()> {
        let dim = self.rows.len();
        if observable.dim() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: observable.dim(),
            });
        }
        let fft = self.grid.fft();
        for row in &mut self.rows {
            fft.forward(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); dim];
        for n in 0..self.grid.n_points() {
            let k = self.grid.wavenumber(n);
            if k == 0.0 || g == 0.0 {
                continue;
            }
            let generator: CMatrix = observable.matrix().scale(Complex64::new(0.0, -g * k));
            let unitary = expm(&generator);
            for (s, c) in column.iter_mut().enumerate() {
                *c = self.rows[s][n];
            }
            let kicked = unitary.mul_vec(&column);
            for (s, c) in kicked.into_iter().enumerate() {
                self.rows[s][n] = c;
            }
        }
        for row in &mut self.rows {
            fft.inverse(row);
        }
        Ok(())
    }

    /// `sum_s dq sum_j |row_s(q_j)|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.rows.iter().map(|r| self.grid.norm_sqr(r)).sum()
    }

    /// `(<psi_f| (x) I) |joint>`.
    pub fn project(&self, psi_f: &SystemState) -> Result<PostSelectedPointer> {
        if psi_f.dim() != self.rows.len() {
            return Err(Error::DimMismatch {
                expected: self.rows.len(),
                found: psi_f.dim(),
            });
        }
        let mut alpha = vec![Complex64::new(0.0, 0.0); self.grid.n_points()];
        for (c, row) in psi_f.amplitudes().iter().zip(&self.rows) {
            let bra = c.conj();
            for (a, x) in alpha.iter_mut().zip(row) {
                *a += bra * x;
            }
        }
        Ok(PostSelectedPointer::new(self.grid, alpha))
    }
}

/// Brute-force evaluation of `<psi_f| exp(-i g A p) |psi_i> |phi>` on the joint space.
pub fn full_tensor_reference(spec: &CouplingSpec, pointer: &PointerState) -> Result<PostSelectedPointer> {
    let mut joint = JointState::product(&spec.psi_i, pointer)?;
    joint.kick(spec.g, &spec.observable)?;
    joint.project(&spec.psi_f)
}
