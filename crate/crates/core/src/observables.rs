//! Scalar diagnostics of a battery state.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Populations};

/// Mean photon numbers below this are treated as the vacuum by [`fano`].
pub const VACUUM_MEAN_THRESHOLD: f64 = 1e-12;

/// Observables recorded after each collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableSet {
    /// Mean photon number, in units of the mode frequency.
    pub energy: f64,
    pub purity: f64,
    /// `None` at the vacuum, where the ratio is undefined.
    pub fano: Option<f64>,
    pub ergotropy: f64,
    pub mean: f64,
    pub variance: f64,
    /// Cumulative population lost at the truncation boundary.
    pub trace_leak: f64,
}

pub fn energy(rho: &DensityMatrix) -> f64 {
    rho.populations().mean()
}

/// `Tr(rho^2) = sum |rho_nm|^2`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

pub fn population_distribution(rho: &DensityMatrix) -> Populations {
    rho.populations()
}

/// Photon-number variance over mean.
pub fn fano(rho: &DensityMatrix) -> Result<f64> {
    fano_of(&rho.populations())
}

pub fn fano_of(p: &Populations) -> Result<f64> {
    let mean = p.mean();
    if mean < VACUUM_MEAN_THRESHOLD {
        return Err(Error::UndefinedFano);
    }
    Ok(p.variance() / mean)
}

/// Energy of the passive state built from `spectrum`: eigenvalues sorted
/// descending and assigned to levels `0, 1, 2, ...`.
pub fn passive_energy(spectrum: &[f64]) -> f64 {
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.iter().enumerate().map(|(n, w)| n as f64 * w).sum()
}

/// Maximal unitarily extractable energy, `E(rho) - E(passive(rho))`.
pub fn ergotropy(rho: &DensityMatrix) -> Result<f64> {
    let spectrum = rho.eigenvalues()?;
    Ok((energy(rho) - passive_energy(&spectrum)).max(0.0))
}

/// Ergotropy of a state known to be diagonal, where the populations are the
/// spectrum.
pub fn ergotropy_of_populations(p: &Populations) -> f64 {
    (p.mean() - passive_energy(p)).max(0.0)
}

pub fn measure(rho: &DensityMatrix, trace_leak: f64) -> Result<ObservableSet> {
    let p = rho.populations();
    let mean = p.mean();
    Ok(ObservableSet {
        energy: mean,
        purity: purity(rho),
        fano: fano_of(&p).ok(),
        ergotropy: ergotropy(rho)?,
        mean,
        variance: p.variance(),
        trace_leak,
    })
}

/// [`measure`] for a diagonal state given by its populations.
pub fn measure_populations(p: &Populations, trace_leak: f64) -> ObservableSet {
    let mean = p.mean();
    ObservableSet {
        energy: mean,
        purity: p.iter().map(|x| x * x).sum(),
        fano: fano_of(p).ok(),
        ergotropy: ergotropy_of_populations(p),
        mean,
        variance: p.variance(),
        trace_leak,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::thermal_state;
    use crate::hilbert::vacuum_state;
    use num_complex::Complex64;

    fn diag(values: &[f64]) -> DensityMatrix {
        DensityMatrix::from_populations(&Populations::new(values.to_vec())).unwrap()
    }

    fn fock(n: usize, dim: usize) -> DensityMatrix {
        DensityMatrix::from_populations(&Populations::fock(n, dim)).unwrap()
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&fock(14, 20)), 14.0);
        assert_eq!(energy(&vacuum_state(5).unwrap()), 0.0);
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&fock(3, 6)), 1.0);
        assert_eq!(purity(&diag(&[0.5, 0.5])), 0.5);
    }

    #[test]
    fn fano_examples() {
        assert_eq!(fano(&fock(14, 20)).unwrap(), 0.0);
        assert!((fano(&thermal_state(0.15, 40).unwrap()).unwrap() - 1.15).abs() < 1e-9);
        assert_eq!(fano(&vacuum_state(4).unwrap()), Err(Error::UndefinedFano));

        // Poisson distribution, mean 2, truncated far in the tail
        let lambda: f64 = 2.0;
        let mut p = Vec::new();
        let mut term = (-lambda).exp();
        for n in 0..60 {
            p.push(term);
            term *= lambda / (n + 1) as f64;
        }
        assert!((fano(&diag(&p)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ergotropy_examples() {
        // pure superposition: ergotropy equals energy
        let s = 0.5f64.sqrt();
        let amps = [Complex64::new(s, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, s)];
        let pure = DensityMatrix::from_ket(&amps).unwrap();
        assert!((ergotropy(&pure).unwrap() - energy(&pure)).abs() < 1e-12);

        assert!(ergotropy(&thermal_state(0.15, 30).unwrap()).unwrap().abs() < 1e-12);

        let inverted = diag(&[0.25, 0.75]);
        assert!((ergotropy(&inverted).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ergotropy_of_populations(&inverted.populations()), 0.5);
    }

    #[test]
    fn population_examples() {
        assert_eq!(
            population_distribution(&vacuum_state(3).unwrap()).into_vec(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(population_distribution(&fock(14, 16))[14], 1.0);
        let thermal = population_distribution(&thermal_state(1.0, 10).unwrap());
        for n in 1..=10 {
            assert!((thermal[n] / thermal[n - 1] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_and_dense_measurements_agree() {
        let p = Populations::new(vec![0.1, 0.2, 0.4, 0.3]);
        let dense = measure(&diag(&p), 0.0).unwrap();
        let fast = measure_populations(&p, 0.0);
        assert!((dense.ergotropy - fast.ergotropy).abs() < 1e-12);
        assert!((dense.purity - fast.purity).abs() < 1e-15);
        assert_eq!(dense.fano, fast.fano);
    }
}
