#![allow(dead_code)]

use micromaser::DensityMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Random mixed state `G G^dag / Tr` with Gaussian-like entries, supported on
/// levels `0..support` of a `n_max + 1` dimensional space.
pub fn random_state<R: Rng>(rng: &mut R, n_max: usize, support: usize, rank: usize) -> DensityMatrix {
    let dim = n_max + 1;
    let support = support.min(dim);
    let mut g = DMatrix::<Complex64>::zeros(dim, rank);
    for n in 0..support {
        for r in 0..rank {
            g[(n, r)] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    let rho = &g * g.adjoint();
    let trace = rho.trace().re;
    DensityMatrix::from_matrix(rho / Complex64::new(trace, 0.0)).unwrap()
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}

/// Trace distance between two Hermitian states of equal dimension.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = DensityMatrix::from_matrix(a.matrix() - b.matrix()).unwrap();
    diff.eigenvalues().unwrap().iter().map(|x| x.abs()).sum::<f64>() / 2.0
}
