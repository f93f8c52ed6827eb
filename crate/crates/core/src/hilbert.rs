//! Field and qubit states on the truncated Fock space.
//!
//! The field basis is photon number ascending, `|0>, |1>, ..., |n_max>`.
//! Qubit matrices use the ordered basis `(|g>, |e>)`. Energies are in units
//! of the mode frequency and measured from the vacuum, so the battery energy
//! is the mean photon number.

use std::fmt;
use std::ops::Deref;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for trace, Hermiticity and positivity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Diagonal of a field state: `p[n]` is the population of `|n>`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Populations(Vec<f64>);

impl Populations {
    pub fn new(values: Vec<f64>) -> Self {
        Populations(values)
    }

    /// Indicator distribution on level `n` within `dim` levels.
    pub fn fock(n: usize, dim: usize) -> Self {
        let mut p = vec![0.0; dim];
        p[n] = 1.0;
        Populations(p)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Mean photon number `sum_n n p_n`.
    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// `sum_n n^2 p_n - mean^2`.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self
            .0
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64).powi(2) * p)
            .sum();
        second - mean * mean
    }

    /// Zero-pads or truncates to `dim` levels without renormalizing.
    pub fn padded(&self, dim: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(dim, 0.0);
        Populations(v)
    }

    /// Largest elementwise difference, treating missing trailing levels as zero.
    pub fn max_abs_diff(&self, other: &Populations) -> f64 {
        let len = self.len().max(other.len());
        (0..len)
            .map(|n| {
                let a = self.0.get(n).copied().unwrap_or(0.0);
                let b = other.0.get(n).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Populations {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Populations {
    fn from(values: Vec<f64>) -> Self {
        Populations(values)
    }
}

/// Field state on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps a square matrix. No physical validity is implied; use [`validate`].
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        if data.nrows() < 2 {
            return Err(Error::param("dim", "a field state needs at least two levels"));
        }
        Ok(DensityMatrix { data })
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &Populations) -> Result<Self> {
        let dim = p.len();
        let data = DMatrix::from_fn(dim, dim, |n, m| {
            if n == m {
                Complex64::new(p[n], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        DensityMatrix::from_matrix(data)
    }

    /// Pure state `|psi><psi|` from amplitudes (not normalized here).
    pub fn from_ket(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        let data = DMatrix::from_fn(dim, dim, |n, m| amplitudes[n] * amplitudes[m].conj());
        DensityMatrix::from_matrix(data)
    }

    pub(crate) fn from_matrix_unchecked(data: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        DensityMatrix { data }
    }

    /// Number of retained Fock levels, `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.data[(n, m)]
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|n| self.data[(n, n)].re).sum()
    }

    pub fn populations(&self) -> Populations {
        Populations((0..self.dim()).map(|n| self.data[(n, n)].re).collect())
    }

    /// Population of the highest retained level.
    pub fn top_population(&self) -> f64 {
        let top = self.n_max();
        self.data[(top, top)].re
    }

    /// Largest `|rho[n][m] - conj(rho[m][n])|`.
    pub fn hermiticity_violation(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0_f64;
        for m in 0..dim {
            for n in m..dim {
                worst = worst.max((self.data[(n, m)] - self.data[(m, n)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let hermitian = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = hermitian
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(Error::Eigensolver { dim: self.dim() })?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

/// Vacuum `|0><0|` with levels `0..=n_max`.
pub fn vacuum_state(n_max: usize) -> Result<DensityMatrix> {
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let mut data = DMatrix::zeros(n_max + 1, n_max + 1);
    data[(0, 0)] = Complex64::new(1.0, 0.0);
    Ok(DensityMatrix { data })
}

/// Incoming qubit `q|g><g| + (1-q)|e><e| + c sqrt(q(1-q)) (|e><g| + |g><e|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    q: f64,
    c: f64,
    data: Matrix2<f64>,
}

impl QubitState {
    /// Ground-state population weight.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Degree of coherence.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Real 2x2 matrix in the `(|g>, |e>)` basis.
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.data
    }

    /// Off-diagonal element `c sqrt(q(1-q))`.
    pub fn coherence(&self) -> f64 {
        self.data[(0, 1)]
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// True when the qubit carries no coherence between `|g>` and `|e>`.
    pub fn is_diagonal(&self) -> bool {
        self.coherence() == 0.0
    }
}

pub fn build_qubit_state(q: f64, c: f64) -> Result<QubitState> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} is outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::param("c", format!("{c} is outside [0, 1]")));
    }
    let coherence = c * (q * (1.0 - q)).sqrt();
    let data = Matrix2::new(q, coherence, coherence, 1.0 - q);
    Ok(QubitState { q, c, data })
}

/// Physical parameters of one charging protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Collision angle `g * tau`.
    pub theta: f64,
    pub q: f64,
    pub c: f64,
    /// Damping rate times the interval between collisions.
    pub gamma_tr: f64,
    /// Thermal photon number of the cavity bath.
    pub nbar: f64,
    /// Initial truncation level.
    pub n_max: usize,
    pub collisions: usize,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::param("theta", format!("{} must be positive", self.theta)));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::param("q", format!("{} is outside [0, 1]", self.q)));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::param("c", format!("{} is outside [0, 1]", self.c)));
        }
        if !(self.gamma_tr.is_finite() && self.gamma_tr >= 0.0) {
            return Err(Error::param("gamma_tr", format!("{} must be >= 0", self.gamma_tr)));
        }
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return Err(Error::param("nbar", format!("{} must be >= 0", self.nbar)));
        }
        if self.n_max < 1 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        Ok(())
    }
}

/// Diagnostics produced by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    /// `|Tr rho - 1|`.
    pub trace_deviation: f64,
    pub hermiticity_violation: f64,
    /// Smallest eigenvalue; NaN if the eigensolver did not converge.
    pub min_eigenvalue: f64,
    /// Population of level `n_max`, a proxy for truncation leak.
    pub top_population: f64,
    pub tolerance: f64,
}

impl ValidityReport {
    pub fn trace_ok(&self) -> bool {
        self.trace_deviation <= self.tolerance
    }

    pub fn hermitian_ok(&self) -> bool {
        self.hermiticity_violation <= self.tolerance
    }

    pub fn positive_ok(&self) -> bool {
        self.min_eigenvalue >= -self.tolerance
    }

    pub fn passes(&self) -> bool {
        self.trace_ok() && self.hermitian_ok() && self.positive_ok()
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trace deviation {:e}{}, hermiticity {:e}{}, min eigenvalue {:e}{}, top population {:e}",
            self.trace_deviation,
            if self.trace_ok() { "" } else { " (FAIL)" },
            self.hermiticity_violation,
            if self.hermitian_ok() { "" } else { " (FAIL)" },
            self.min_eigenvalue,
            if self.positive_ok() { "" } else { " (FAIL)" },
            self.top_population,
        )
    }
}

pub fn validate(rho: &DensityMatrix, tol: f64) -> ValidityReport {
    ValidityReport {
        trace_deviation: (rho.trace() - 1.0).abs(),
        hermiticity_violation: rho.hermiticity_violation(),
        min_eigenvalue: rho
            .eigenvalues()
            .map(|v| v[0])
            .unwrap_or(f64::NAN),
        top_population: rho.top_population(),
        tolerance: tol,
    }
}

/// Result of [`resize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resized {
    pub state: DensityMatrix,
    /// Population removed above the new truncation before renormalizing.
    pub discarded_weight: f64,
}

/// Changes the truncation level. Growing pads with zeros; shrinking drops the
/// levels above `new_n_max` and renormalizes, failing if more than
/// `discard_bound` population would be lost.
pub fn resize(rho: &DensityMatrix, new_n_max: usize, discard_bound: f64) -> Result<Resized> {
    if new_n_max < 1 {
        return Err(Error::param("new_n_max", "must be at least 1"));
    }
    let dim = rho.dim();
    let new_dim = new_n_max + 1;
    if new_dim >= dim {
        let mut data = DMatrix::zeros(new_dim, new_dim);
        data.view_mut((0, 0), (dim, dim)).copy_from(rho.matrix());
        return Ok(Resized {
            state: DensityMatrix { data },
            discarded_weight: 0.0,
        });
    }

    let discarded: f64 = (new_dim..dim).map(|n| rho.get(n, n).re).sum();
    if discarded > discard_bound {
        return Err(Error::TruncationLoss {
            discarded,
            bound: discard_bound,
        });
    }
    let mut data = rho.matrix().view((0, 0), (new_dim, new_dim)).into_owned();
    let kept: f64 = (0..new_dim).map(|n| data[(n, n)].re).sum();
    if discarded > 0.0 && kept > 0.0 {
        data /= Complex64::new(kept / (kept + discarded), 0.0);
    }
    Ok(Resized {
        state: DensityMatrix { data },
        discarded_weight: discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(values: &[f64]) -> DensityMatrix {
        DensityMatrix::from_populations(&Populations::new(values.to_vec())).unwrap()
    }

    #[test]
    fn vacuum_is_ground_projector() {
        let rho = vacuum_state(4).unwrap();
        assert_eq!(rho.dim(), 5);
        assert_eq!(rho.populations().into_vec(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(rho.populations().mean(), 0.0);
        let purity: f64 = rho.matrix().iter().map(|z| z.norm_sqr()).sum();
        assert_eq!(purity, 1.0);
        assert!(vacuum_state(0).is_err());
    }

    #[test]
    fn qubit_matrices() {
        let ground = build_qubit_state(1.0, 0.0).unwrap();
        assert_eq!(*ground.matrix(), Matrix2::new(1.0, 0.0, 0.0, 0.0));

        let coherent = build_qubit_state(0.25, 1.0).unwrap();
        assert!((coherent.matrix()[(0, 1)] - 0.1875_f64.sqrt()).abs() < 1e-15);
        assert!((coherent.matrix()[(0, 1)] - 0.433013).abs() < 1e-6);
        assert!((coherent.purity() - 1.0).abs() < 1e-15);

        let mixed = build_qubit_state(0.25, 0.0).unwrap();
        assert_eq!(*mixed.matrix(), Matrix2::new(0.25, 0.0, 0.0, 0.75));
        assert_eq!(mixed.purity(), 0.625);

        assert!(build_qubit_state(-0.1, 0.0).is_err());
        assert!(build_qubit_state(0.5, 1.5).is_err());
    }

    #[test]
    fn validate_flags_trace() {
        let ok = validate(&vacuum_state(10).unwrap(), DEFAULT_TOLERANCE);
        assert!(ok.passes());
        assert_eq!(ok.trace_deviation, 0.0);
        assert_eq!(ok.hermiticity_violation, 0.0);
        assert_eq!(ok.top_population, 0.0);

        let short = validate(&diag(&[0.6, 0.3]), DEFAULT_TOLERANCE);
        assert!((short.trace_deviation - 0.1).abs() < 1e-15);
        assert!(!short.trace_ok());
        assert!(!short.passes());
    }

    #[test]
    fn validate_flags_non_hermitian_and_negative() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        m[(0, 1)] = Complex64::new(0.0, 0.1);
        let report = validate(&DensityMatrix::from_matrix(m).unwrap(), DEFAULT_TOLERANCE);
        assert!(!report.hermitian_ok());
        assert!(!report.positive_ok());
    }

    #[test]
    fn resize_grow_and_shrink() {
        let grown = resize(&diag(&[1.0, 0.0]), 2, 0.0).unwrap();
        assert_eq!(grown.state.populations().into_vec(), vec![1.0, 0.0, 0.0]);
        assert_eq!(grown.discarded_weight, 0.0);

        let shrunk = resize(&diag(&[0.5, 0.5, 0.0]), 1, 0.0).unwrap();
        assert_eq!(shrunk.state.populations().into_vec(), vec![0.5, 0.5]);
        assert_eq!(shrunk.discarded_weight, 0.0);

        let err = resize(&diag(&[0.9, 0.05, 0.05]), 1, 0.01).unwrap_err();
        assert!(matches!(err, Error::TruncationLoss { .. }));

        let renormalized = resize(&diag(&[0.9, 0.05, 0.05]), 1, 0.1).unwrap();
        assert!((renormalized.state.trace() - 1.0).abs() < 1e-15);
        assert!((renormalized.discarded_weight - 0.05).abs() < 1e-15);
    }

    #[test]
    fn model_params_ranges() {
        let good = ModelParams {
            theta: 0.8,
            q: 0.25,
            c: 1.0,
            gamma_tr: 0.0,
            nbar: 0.15,
            n_max: 40,
            collisions: 10,
        };
        assert!(good.validate().is_ok());
        assert!(ModelParams { theta: 0.0, ..good }.validate().is_err());
        assert!(ModelParams { gamma_tr: -1.0, ..good }.validate().is_err());
        assert!(ModelParams { n_max: 0, ..good }.validate().is_err());
        assert!(ModelParams { c: 2.0, ..good }.validate().is_err());
    }

    proptest! {
        #[test]
        fn qubit_purity_formula(q in 0.0..=1.0f64, c in 0.0..=1.0f64) {
            let qubit = build_qubit_state(q, c).unwrap();
            let expected = 1.0 - 2.0 * q * (1.0 - q) * (1.0 - c * c);
            prop_assert!((qubit.purity() - expected).abs() < 1e-12);
            prop_assert_eq!(qubit.matrix().trace(), 1.0);
        }

        #[test]
        fn grow_preserves_trace(p in prop::collection::vec(0.0..1.0f64, 2..8), extra in 1usize..6) {
            let total: f64 = p.iter().sum();
            prop_assume!(total > 1e-3);
            let p: Vec<f64> = p.iter().map(|x| x / total).collect();
            let rho = diag(&p);
            let grown = resize(&rho, rho.n_max() + extra, 0.0).unwrap();
            prop_assert!((grown.state.trace() - rho.trace()).abs() <= 1e-12);
            prop_assert!(validate(&grown.state, DEFAULT_TOLERANCE).passes());
        }
    }
}
