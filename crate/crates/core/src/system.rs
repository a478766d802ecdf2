//! The measured system: pure states, Hermitian observables, expectation
//! values and weak values.

use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::linalg::{jacobi_hermitian, CMatrix};
use crate::{Error, Result};

/// Tolerance for the Hermitian check on observables.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default lower bound on `|<psi_f|psi_i>|` for a weak value to be defined.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1e-10;

/// Eigenvalues closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Normalized state vector of the measured system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    amplitudes: Vec<Complex64>,
}

impl SystemState {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidParameter("basis index out of range"));
        }
        let mut v = alloc::vec![Complex64::new(0.0, 0.0); dim];
        v[index] = Complex64::new(1.0, 0.0);
        make_state(&v)
    }

    /// Multiplies every amplitude by `exp(i theta)`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }
}

/// Rescales `amplitudes` to unit norm.
pub fn make_state(amplitudes: &[Complex64]) -> Result<SystemState> {
    if amplitudes.len() < 2 {
        return Err(Error::DimTooSmall(amplitudes.len()));
    }
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !(norm >= 1e-14) {
        return Err(Error::ZeroVector);
    }
    Ok(SystemState {
        amplitudes: amplitudes.iter().map(|a| a / norm).collect(),
    })
}

/// `<bra|ket>`, conjugate-linear in `bra`.
pub fn inner_product(bra: &SystemState, ket: &SystemState) -> Result<Complex64> {
    check_dim(bra.dim(), ket.dim())?;
    Ok(dot(&bra.amplitudes, &ket.amplitudes))
}

fn dot(bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
    bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}

/// Hermitian operator on the system space.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let deviation = matrix.hermitian_deviation();
        if !(deviation <= HERMITIAN_TOL) {
            return Err(Error::NonHermitian { deviation });
        }
        if matrix.dim() < 2 {
            return Err(Error::DimTooSmall(matrix.dim()));
        }
        Ok(Self { matrix })
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        Self {
            matrix: CMatrix::from_row_major(2, alloc::vec![z, -i, i, z]).unwrap(),
        }
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows([[1.0, 0.0], [0.0, -1.0]])
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim),
        }
    }

    /// Looks up `pauli-x`, `pauli-y`, `pauli-z` or `identity` (the latter of
    /// dimension `dim`). Pauli names require `dim == 2`.
    pub fn named(name: &str, dim: usize) -> Option<Self> {
        let obs = match name {
            "pauli-x" => Self::pauli_x(),
            "pauli-y" => Self::pauli_y(),
            "pauli-z" => Self::pauli_z(),
            "identity" if dim >= 2 => Self::identity(dim),
            _ => return None,
        };
        (obs.dim() == dim).then_some(obs)
    }

    fn from_real_rows(rows: [[f64; 2]; 2]) -> Self {
        let data = rows.iter().flatten().map(|&x| Complex64::new(x, 0.0)).collect();
        Self {
            matrix: CMatrix::from_row_major(2, data).unwrap(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, state: &SystemState) -> Result<Vec<Complex64>> {
        check_dim(self.dim(), state.dim())?;
        Ok(self.matrix.mul_vec(&state.amplitudes))
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: self.matrix.add(&other.matrix),
        })
    }
}

/// `<psi|A|psi>`.
pub fn expectation(observable: &Observable, state: &SystemState) -> Result<f64> {
    let deviation = observable.matrix.hermitian_deviation();
    if !(deviation <= HERMITIAN_TOL) {
        return Err(Error::NonHermitian { deviation });
    }
    let value = dot(&state.amplitudes, &observable.apply(state)?);
    debug_assert!(value.im.abs() <= 1e-12 * (1.0 + observable.matrix.norm_inf()));
    Ok(value.re)
}

/// Complex weak value `A_w = a + i b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub a: f64,
    pub b: f64,
}

impl WeakValue {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    pub fn is_real(&self) -> bool {
        self.b == 0.0
    }
}

impl From<Complex64> for WeakValue {
    fn from(z: Complex64) -> Self {
        Self { a: z.re, b: z.im }
    }
}

/// `<psi_f|A|psi_i> / <psi_f|psi_i>` with the default overlap threshold.
pub fn weak_value(observable: &Observable, psi_i: &SystemState, psi_f: &SystemState) -> Result<WeakValue> {
    weak_value_with_threshold(observable, psi_i, psi_f, DEFAULT_OVERLAP_THRESHOLD)
}

pub fn weak_value_with_threshold(
    observable: &Observable,
    psi_i: &SystemState,
    psi_f: &SystemState,
    overlap_threshold: f64,
) -> Result<WeakValue> {
    check_dim(psi_i.dim(), psi_f.dim())?;
    let overlap = inner_product(psi_f, psi_i)?;
    if !(overlap.norm() >= overlap_threshold) {
        return Err(Error::OrthogonalPostSelection {
            overlap: overlap.norm(),
        });
    }
    let numerator = dot(&psi_f.amplitudes, &observable.apply(psi_i)?);
    Ok((numerator / overlap).into())
}

/// Eigenvalues in ascending order with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// A degenerate eigenvalue together with the projector coefficients needed
/// for translating the pointer.
#[derive(Debug, Clone)]
pub struct EigenLevel {
    pub eigenvalue: f64,
    /// Orthonormal basis of the eigenspace.
    pub vectors: Vec<Vec<Complex64>>,
}

impl EigenLevel {
    /// `<bra| P |ket>` where `P` projects onto this eigenspace.
    pub fn projector_element(&self, bra: &SystemState, ket: &SystemState) -> Complex64 {
        self.vectors
            .iter()
            .map(|e| dot(&bra.amplitudes, e) * dot(e, &ket.amplitudes))
            .sum()
    }
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        self.eigenvectors.column(i)
    }

    /// `sum_i a_i e_i e_i^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n);
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let e = self.eigenvector(i);
            for r in 0..n {
                for s in 0..n {
                    m[(r, s)] += e[r] * e[s].conj() * lam;
                }
            }
        }
        m
    }

    /// Groups eigenvalues within [`DEGENERACY_TOL`] (relative to the spectral
    /// scale) into levels.
    pub fn levels(&self) -> Vec<EigenLevel> {
        let scale = self.eigenvalues.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some(group) if (lam - self.eigenvalues[group[0]]).abs() <= DEGENERACY_TOL * scale => group.push(i),
                _ => groups.push(alloc::vec![i]),
            }
        }
        groups
            .into_iter()
            .map(|group| EigenLevel {
                eigenvalue: group.iter().map(|&i| self.eigenvalues[i]).sum::<f64>() / group.len() as f64,
                vectors: group.iter().map(|&i| self.eigenvector(i)).collect(),
            })
            .collect()
    }
}

pub fn eigendecompose(observable: &Observable) -> Result<SpectralDecomposition> {
    let deviation = observable.matrix.hermitian_deviation();
    if !(deviation <= HERMITIAN_TOL) {
        return Err(Error::NonHermitian { deviation });
    }
    let (values, vectors) = jacobi_hermitian(&observable.matrix);
    let n = values.len();

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n).map(|i| (values[i], fix_phase(vectors.column(i)))).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));

    // Ties inside a degenerate block are ordered lexicographically by the
    // phase-fixed vector so the output does not depend on rotation order.
    let scale = values.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (pairs[end].0 - pairs[start].0).abs() <= DEGENERACY_TOL * scale {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lexicographic(&x.1, &y.1));
        start = end;
    }

    let mut eigenvectors = CMatrix::zeros(n);
    for (j, (_, v)) in pairs.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            eigenvectors[(i, j)] = *x;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors,
    })
}

/// Makes the first non-negligible component real and positive.
fn fix_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    if let Some(pivot) = v.iter().find(|x| x.norm() > 1e-12).copied() {
        let phase = pivot.conj() / pivot.norm();
        for x in &mut v {
            *x *= phase;
        }
    }
    v
}

fn lexicographic(x: &[Complex64], y: &[Complex64]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        // Larger leading components first.
        let ord =
            b.re.partial_cmp(&a.re)
                .unwrap_or(Ordering::Equal)
                .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal));
        if (a - b).norm() > 1e-12 && ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> SystemState {
        make_state(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    fn plus_i() -> SystemState {
        make_state(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn make_state_normalizes() {
        let s = make_state(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let s = plus();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(make_state(&[c(0.0, 0.0), c(0.0, 0.0)]), Err(Error::ZeroVector));
        assert_eq!(make_state(&[c(1.0, 0.0)]), Err(Error::DimTooSmall(1)));
    }

    #[test]
    fn inner_products() {
        let zero = SystemState::basis(2, 0).unwrap();
        let one = SystemState::basis(2, 1).unwrap();
        assert_eq!(inner_product(&zero, &zero).unwrap(), c(1.0, 0.0));
        assert_eq!(inner_product(&zero, &one).unwrap(), c(0.0, 0.0));
        let z = inner_product(&plus_i(), &plus()).unwrap();
        assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, -0.5, epsilon = 1e-15);
        let three = SystemState::basis(3, 0).unwrap();
        assert_eq!(
            inner_product(&zero, &three),
            Err(Error::DimMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn expectation_values() {
        let zero = SystemState::basis(2, 0).unwrap();
        assert_abs_diff_eq!(expectation(&Observable::pauli_z(), &zero).unwrap(), 1.0);
        assert_abs_diff_eq!(
            expectation(&Observable::pauli_z(), &plus()).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            expectation(&Observable::pauli_x(), &plus()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!(matches!(Observable::new(m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn weak_values_of_reference_cases() {
        let zero = SystemState::basis(2, 0).unwrap();
        let w = weak_value(&Observable::pauli_z(), &zero, &zero).unwrap();
        assert_eq!(w, WeakValue::new(1.0, 0.0));

        let w = weak_value(&Observable::pauli_z(), &plus(), &plus_i()).unwrap();
        assert_abs_diff_eq!(w.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.b, 1.0, epsilon = 1e-12);

        let theta = PI / 3.0;
        let psi_f = make_state(&[c(theta.cos(), 0.0), c(theta.sin(), 0.0)]).unwrap();
        let w = weak_value(&Observable::pauli_x(), &zero, &psi_f).unwrap();
        assert_abs_diff_eq!(w.a, 3.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_post_selection_is_an_error() {
        let zero = SystemState::basis(2, 0).unwrap();
        let one = SystemState::basis(2, 1).unwrap();
        assert!(matches!(
            weak_value(&Observable::pauli_x(), &zero, &one),
            Err(Error::OrthogonalPostSelection { .. })
        ));
    }

    #[test]
    fn pauli_eigendecompositions() {
        let d = eigendecompose(&Observable::pauli_z()).unwrap();
        assert_eq!(d.eigenvalues, vec![-1.0, 1.0]);
        assert_abs_diff_eq!(d.eigenvector(0)[1].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eigenvector(1)[0].re, 1.0, epsilon = 1e-15);

        let d = eigendecompose(&Observable::pauli_x()).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-14);
        let minus = d.eigenvector(0);
        assert_abs_diff_eq!(minus[0].re, FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(minus[1].re, -FRAC_1_SQRT_2, epsilon = 1e-14);
        let plus = d.eigenvector(1);
        assert_abs_diff_eq!(plus[0].re, FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(plus[1].re, FRAC_1_SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_identity() {
        let id = Observable::identity(3);
        let d = eigendecompose(&id).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(d.reconstruct().max_abs_diff(id.matrix()) < 1e-10);
        let levels = d.levels();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[0].vectors.len(), 3);
    }

    #[test]
    fn named_observables() {
        assert!(Observable::named("pauli-y", 2).is_some());
        assert!(Observable::named("pauli-y", 3).is_none());
        assert_eq!(Observable::named("identity", 4).unwrap().dim(), 4);
        assert!(Observable::named("spin", 2).is_none());
    }
}
