//! First-order predictions for the post-selected pointer.
//!
//! With `A_w = a + i b`, to first order in `g`:
//!
//! ```text
//! <q>_f = <q>_i + g a + g b m dVar_q/dt
//! <p>_f = <p>_i + 2 g b Var_p
//! <M>_f = <M>_i + i g a <pM - Mp>_i + g b (<pM + Mp>_i - 2 <p>_i <M>_i)
//! ```

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::pointer::{d_var_q_dt, moments, polar_fields, Grid, Moments, PointerState};
use crate::system::WeakValue;
use crate::{Error, Result};

/// Largest phase gradient for a pointer to count as real-valued.
pub const REAL_POINTER_TOL: f64 = 1e-8;

const HERMITIAN_OBSERVABLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftPrediction {
    pub delta_q: f64,
    pub delta_p: f64,
    pub mean_q_f: f64,
    pub mean_p_f: f64,
}

pub fn predict_shifts(weak: WeakValue, g: f64, pointer: &PointerState, mass: f64) -> ShiftPrediction {
    let initial = moments(pointer);
    let rate = d_var_q_dt(pointer, mass);
    shifts_from_moments(weak, g, &initial, rate, mass)
}

/// Same as [`predict_shifts`] for already computed pointer statistics.
pub fn shifts_from_moments(weak: WeakValue, g: f64, initial: &Moments, d_var_q_dt: f64, mass: f64) -> ShiftPrediction {
    let delta_q = g * weak.a + g * weak.b * mass * d_var_q_dt;
    let delta_p = 2.0 * g * weak.b * initial.var_p;
    ShiftPrediction {
        delta_q,
        delta_p,
        mean_q_f: initial.mean_q + delta_q,
        mean_p_f: initial.mean_p + delta_p,
    }
}

/// `|<psi_f|psi_i>|^2 (1 + 2 g b <p>_i)`.
pub fn predict_success_probability(overlap: Complex64, weak: WeakValue, g: f64, mean_p_i: f64) -> f64 {
    overlap.norm_sqr() * (1.0 + 2.0 * g * weak.b * mean_p_i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// `q^n`
    Position(u32),
    /// `p^n`
    Momentum(u32),
}

/// Pointer observable built from position- and momentum-diagonal factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointerObservable {
    Position,
    Momentum,
    PositionSquared,
    /// Ordered product `F_1 F_2 ... F_n`; `F_n` acts first.
    Composite(Vec<Factor>),
}

impl PointerObservable {
    fn factors(&self) -> Vec<Factor> {
        match self {
            Self::Position => vec![Factor::Position(1)],
            Self::Momentum => vec![Factor::Momentum(1)],
            Self::PositionSquared => vec![Factor::Position(2)],
            Self::Composite(factors) => factors.clone(),
        }
    }

    pub fn apply(&self, grid: &Grid, amplitudes: &[Complex64]) -> Vec<Complex64> {
        self.factors()
            .iter()
            .rev()
            .fold(amplitudes.to_vec(), |acc, factor| match *factor {
                Factor::Position(n) => grid.apply_position_power(&acc, n),
                Factor::Momentum(n) => grid.apply_momentum_power(&acc, n),
            })
    }

    /// `<f|M|f> / <f|f>`; the imaginary part is dropped.
    pub fn expectation(&self, grid: &Grid, amplitudes: &[Complex64]) -> f64 {
        let value = grid.inner(amplitudes, &self.apply(grid, amplitudes));
        value.re / grid.norm_sqr(amplitudes)
    }

    /// `max |<f|M h> - <M f|h>|` over pairs drawn from `pointer`, `p pointer`
    /// and `q pointer`, each normalized.
    pub fn hermiticity_defect(&self, pointer: &PointerState) -> f64 {
        let grid = pointer.grid();
        let base = pointer.amplitudes();
        let probes: Vec<Vec<Complex64>> = [
            base.to_vec(),
            grid.apply_momentum_power(base, 1),
            grid.apply_position_power(base, 1),
        ]
        .into_iter()
        .map(|v| {
            let n = grid.norm_sqr(&v).sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
        let images: Vec<Vec<Complex64>> = probes.iter().map(|v| self.apply(grid, v)).collect();
        let mut worst = 0.0f64;
        for (f, mf) in probes.iter().zip(&images) {
            for (h, mh) in probes.iter().zip(&images) {
                let lhs = grid.inner(f, mh);
                let rhs = grid.inner(mf, h);
                let scale = 1.0f64.max(grid.norm_sqr(mf).sqrt()).max(grid.norm_sqr(mh).sqrt());
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
        worst
    }
}

/// Predicted `<M>_f` after the weak kick and post-selection.
pub fn predict_general_observable(
    weak: WeakValue,
    g: f64,
    pointer: &PointerState,
    observable: &PointerObservable,
) -> Result<f64> {
    let deviation = observable.hermiticity_defect(pointer);
    if !(deviation <= HERMITIAN_OBSERVABLE_TOL) {
        return Err(Error::NonHermitianObservable { deviation });
    }
    let grid = pointer.grid();
    let phi = pointer.amplitudes();
    let p_phi = grid.apply_momentum_power(phi, 1);
    let m_phi = observable.apply(grid, phi);

    let mean_m = pointer.inner(&m_phi).re;
    let mean_p = pointer.inner(&p_phi).re;
    let p_m = grid.inner(&p_phi, &m_phi); // <phi|p M|phi>
    let m_p = pointer.inner(&observable.apply(grid, &p_phi)); // <phi|M p|phi>

    let commutator = Complex64::new(0.0, 1.0) * (p_m - m_p);
    let scale = 1.0f64.max(p_m.norm()).max(m_p.norm());
    if commutator.im.abs() > HERMITIAN_OBSERVABLE_TOL * scale {
        return Err(Error::NonHermitianObservable {
            deviation: commutator.im.abs(),
        });
    }
    let anticommutator = (p_m + m_p).re;
    Ok(mean_m + g * weak.a * commutator.re + g * weak.b * (anticommutator - 2.0 * mean_p * mean_m))
}

/// Which reduced form of the shift formulas applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialCase {
    /// `b = 0`: `<q>` shifts by `g a`, `<p>` is unchanged.
    RealWeakValue,
    /// Real pointer (up to a global phase): `<q>` shifts by `g a`, `<p>` by `2 g b Var_p`.
    RealPointer,
    /// Neither reduction applies.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseReport {
    pub case: SpecialCase,
    pub real_weak_value: bool,
    pub real_pointer: bool,
    pub max_phase_gradient: f64,
    /// `delta_q / g` from the reduced formula, if one applies.
    pub delta_q_per_g: Option<f64>,
    /// `delta_p / g` from the reduced formula, if one applies.
    pub delta_p_per_g: Option<f64>,
}

pub fn special_case_checks(weak: WeakValue, pointer: &PointerState) -> CaseReport {
    // S' does not depend on the mass.
    let max_phase_gradient = polar_fields(pointer, 1.0).max_abs_phase_gradient();
    let real_pointer = max_phase_gradient <= REAL_POINTER_TOL;
    let real_weak_value = weak.b == 0.0;
    let var_p = moments(pointer).var_p;
    let (case, dq, dp) = if real_weak_value {
        (SpecialCase::RealWeakValue, Some(weak.a), Some(0.0))
    } else if real_pointer {
        (SpecialCase::RealPointer, Some(weak.a), Some(2.0 * weak.b * var_p))
    } else {
        (SpecialCase::General, None, None)
    };
    CaseReport {
        case,
        real_weak_value,
        real_pointer,
        max_phase_gradient,
        delta_q_per_g: dq,
        delta_p_per_g: dp,
    }
}
