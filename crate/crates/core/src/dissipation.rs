//! Damped-oscillator Lindbladian applied between collisions.
//!
//! ```text
//! L(rho) = gamma (nbar+1) (a rho a^dag - {a^dag a, rho}/2)
//!        + gamma nbar     (a^dag rho a - {a a^dag, rho}/2)
//! ```
//!
//! In the Fock basis the generator only couples `rho[n][n+d]` to
//! `rho[n+-1][n+-1+d]`, so each diagonal band `d` evolves on its own under a
//! real tridiagonal matrix `G_d`. The truncated `a^dag` annihilates `|n_max>`,
//! which makes the truncated generator exactly trace preserving.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Populations};

/// Largest accepted `gamma * duration * (nbar + 1) * n_max` for RK4 damping.
pub const DEFAULT_STIFFNESS_BOUND: f64 = 1e4;

/// Target of `gamma * h * (nbar + 1) * n_max` per RK4 substep.
const SUBSTEP_SCALE: f64 = 0.02;
const MIN_SUBSTEPS: usize = 4;

/// Real tridiagonal generator of one band `(rho[n][n+d])_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGenerator {
    offset: usize,
    diag: Vec<f64>,
    // up[n]: coupling from n+1 into n; down[n]: from n-1 into n
    up: Vec<f64>,
    down: Vec<f64>,
}

impl BandGenerator {
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn up(&self) -> &[f64] {
        &self.up
    }

    pub fn down(&self) -> &[f64] {
        &self.down
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let len = self.len();
        for n in 0..len {
            let mut acc = v[n] * self.diag[n];
            if n + 1 < len {
                acc += v[n + 1] * self.up[n];
            }
            if n > 0 {
                acc += v[n - 1] * self.down[n];
            }
            out[n] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let len = self.len();
        DMatrix::from_fn(len, len, |row, col| {
            if row == col {
                self.diag[row]
            } else if col == row + 1 {
                self.up[row]
            } else if row == col + 1 {
                self.down[row]
            } else {
                0.0
            }
        })
    }
}

/// Per-band generators of the damped-oscillator Lindbladian.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladBands {
    gamma: f64,
    nbar: f64,
    n_max: usize,
    bands: Vec<BandGenerator>,
    stiffness_bound: f64,
}

impl LindbladBands {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Generator for band offset `d`, `0 <= d <= n_max`.
    pub fn band(&self, d: usize) -> &BandGenerator {
        &self.bands[d]
    }

    pub fn with_stiffness_bound(mut self, bound: f64) -> Self {
        self.stiffness_bound = bound;
        self
    }

    pub fn stiffness(&self, duration: f64) -> f64 {
        self.gamma * duration * (self.nbar + 1.0) * self.n_max as f64
    }

    /// RK4 substeps used by [`apply_damping`] for this duration.
    pub fn substeps(&self, duration: f64) -> usize {
        ((self.stiffness(duration) / SUBSTEP_SCALE).ceil() as usize).max(MIN_SUBSTEPS)
    }
}

pub fn build_lindblad_bands(gamma: f64, nbar: f64, n_max: usize) -> Result<LindbladBands> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::param("gamma", format!("{gamma} must be >= 0")));
    }
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::param("nbar", format!("{nbar} must be >= 0")));
    }
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let loss = gamma * (nbar + 1.0);
    let gain = gamma * nbar;
    // diagonal of a a^dag on the truncated space
    let aad = |k: usize| if k < n_max { (k + 1) as f64 } else { 0.0 };

    let bands = (0..=n_max)
        .map(|d| {
            let len = n_max + 1 - d;
            let diag = (0..len)
                .map(|n| -0.5 * loss * (2 * n + d) as f64 - 0.5 * gain * (aad(n) + aad(n + d)))
                .collect();
            let up = (0..len)
                .map(|n| {
                    if n + 1 < len {
                        loss * (((n + 1) * (n + 1 + d)) as f64).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            let down = (0..len)
                .map(|n| if n > 0 { gain * ((n * (n + d)) as f64).sqrt() } else { 0.0 })
                .collect();
            BandGenerator {
                offset: d,
                diag,
                up,
                down,
            }
        })
        .collect();

    Ok(LindbladBands {
        gamma,
        nbar,
        n_max,
        bands,
        stiffness_bound: DEFAULT_STIFFNESS_BOUND,
    })
}

fn check_dim(bands: &LindbladBands, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != bands.dim() {
        return Err(Error::DimensionMismatch {
            expected: bands.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::param("duration", format!("{duration} must be >= 0")));
    }
    Ok(())
}

// Visits the upper band (n, n+d) and, for d > 0, the lower band (n+d, n).
fn for_each_band_vector(
    data: &mut DMatrix<Complex64>,
    d: usize,
    mut f: impl FnMut(&mut [Complex64]),
) {
    let len = data.nrows() - d;
    let mut v: Vec<Complex64> = (0..len).map(|n| data[(n, n + d)]).collect();
    f(&mut v);
    for (n, x) in v.iter().enumerate() {
        data[(n, n + d)] = *x;
    }
    if d > 0 {
        let mut w: Vec<Complex64> = (0..len).map(|n| data[(n + d, n)]).collect();
        f(&mut w);
        for (n, x) in w.iter().enumerate() {
            data[(n + d, n)] = *x;
        }
    }
}

fn rk4(band: &BandGenerator, v: &mut [Complex64], h: f64, steps: usize) {
    let len = v.len();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; len], vec![zero; len], vec![zero; len], vec![zero; len], vec![zero; len]);
    for _ in 0..steps {
        band.apply(v, &mut k1);
        for n in 0..len {
            tmp[n] = v[n] + k1[n] * (0.5 * h);
        }
        band.apply(&tmp, &mut k2);
        for n in 0..len {
            tmp[n] = v[n] + k2[n] * (0.5 * h);
        }
        band.apply(&tmp, &mut k3);
        for n in 0..len {
            tmp[n] = v[n] + k3[n] * h;
        }
        band.apply(&tmp, &mut k4);
        for n in 0..len {
            v[n] += (k1[n] + (k2[n] + k3[n]) * 2.0 + k4[n]) * (h / 6.0);
        }
    }
}

/// Evolves `rho` under the Lindbladian for `duration`, band by band, with
/// fixed-step RK4 (see [`LindbladBands::substeps`]).
pub fn apply_damping(bands: &LindbladBands, rho: &DensityMatrix, duration: f64) -> Result<DensityMatrix> {
    check_dim(bands, rho)?;
    check_duration(duration)?;
    if duration == 0.0 || bands.gamma == 0.0 {
        return Ok(rho.clone());
    }
    let stiffness = bands.stiffness(duration);
    if stiffness > bands.stiffness_bound {
        return Err(Error::Stiffness {
            stiffness,
            bound: bands.stiffness_bound,
        });
    }
    apply_damping_with_substeps(bands, rho, duration, bands.substeps(duration))
}

/// RK4 damping with an explicit substep count.
pub fn apply_damping_with_substeps(
    bands: &LindbladBands,
    rho: &DensityMatrix,
    duration: f64,
    substeps: usize,
) -> Result<DensityMatrix> {
    check_dim(bands, rho)?;
    check_duration(duration)?;
    if substeps == 0 {
        return Err(Error::param("substeps", "must be positive"));
    }
    let h = duration / substeps as f64;
    let mut data = rho.matrix().clone();
    for band in &bands.bands {
        for_each_band_vector(&mut data, band.offset, |v| rk4(band, v, h, substeps));
    }
    Ok(DensityMatrix::from_matrix_unchecked(data))
}

/// Damping of a diagonal state; only the `d = 0` band is involved.
pub fn apply_damping_populations(
    propagator: &DampingPropagator,
    p: &Populations,
) -> Result<Populations> {
    if p.len() != propagator.dim() {
        return Err(Error::DimensionMismatch {
            expected: propagator.dim(),
            found: p.len(),
        });
    }
    let v = DVector::from_column_slice(p);
    Ok(Populations::new((&propagator.bands[0] * v).iter().copied().collect()))
}

/// Exact per-band propagators `exp(G_d t)` for a fixed interval.
///
/// Computed once and reused for every collision of a run; agrees with
/// [`apply_damping`] to the RK4 tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingPropagator {
    duration: f64,
    bands: Vec<DMatrix<f64>>,
}

impl DampingPropagator {
    pub fn new(bands: &LindbladBands, duration: f64) -> Result<Self> {
        check_duration(duration)?;
        let propagators = bands
            .bands
            .iter()
            .map(|band| (band.to_dense() * duration).exp())
            .collect();
        Ok(DampingPropagator {
            duration,
            bands: propagators,
        })
    }

    /// Propagator for the population band only, for states that stay diagonal.
    pub fn populations_only(bands: &LindbladBands, duration: f64) -> Result<Self> {
        check_duration(duration)?;
        Ok(DampingPropagator {
            duration,
            bands: vec![(bands.band(0).to_dense() * duration).exp()],
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Field dimension the propagator acts on.
    pub fn dim(&self) -> usize {
        self.bands[0].nrows()
    }

    pub fn is_populations_only(&self) -> bool {
        self.bands.len() < self.dim()
    }

    pub fn band(&self, d: usize) -> &DMatrix<f64> {
        &self.bands[d]
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.is_populations_only() {
            return Err(Error::param("propagator", "built for populations only"));
        }
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let mut data = rho.matrix().clone();
        for (d, prop) in self.bands.iter().enumerate() {
            for_each_band_vector(&mut data, d, |v| {
                let out: Vec<Complex64> = (0..v.len())
                    .map(|row| (0..v.len()).map(|col| v[col] * prop[(row, col)]).sum())
                    .collect();
                v.copy_from_slice(&out);
            });
        }
        Ok(DensityMatrix::from_matrix_unchecked(data))
    }
}

/// Truncated Bose-Einstein state, `p_n ~ (nbar / (1 + nbar))^n`.
pub fn thermal_state(nbar: f64, n_max: usize) -> Result<DensityMatrix> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::param("nbar", format!("{nbar} must be >= 0")));
    }
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let ratio = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..=n_max).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    DensityMatrix::from_populations(&Populations::new(
        weights.into_iter().map(|w| w / total).collect(),
    ))
}

/// Full `dim^2 x dim^2` Lindblad superoperator acting on row-major
/// vectorized states (`index = n * dim + m`), assembled from dense truncated
/// ladder operators.
pub fn dense_lindbladian(gamma: f64, nbar: f64, n_max: usize) -> Result<DMatrix<f64>> {
    if !(gamma >= 0.0 && nbar >= 0.0) {
        return Err(Error::param("gamma/nbar", "must be >= 0"));
    }
    let dim = n_max + 1;
    let a = DMatrix::from_fn(dim, dim, |n, m| if m == n + 1 { (m as f64).sqrt() } else { 0.0 });
    let ad = a.transpose();
    let ada = &ad * &a;
    let aad = &a * &ad;
    let mut sup = DMatrix::zeros(dim * dim, dim * dim);
    for n in 0..dim {
        for m in 0..dim {
            let mut e = DMatrix::<f64>::zeros(dim, dim);
            e[(n, m)] = 1.0;
            let l = (&a * &e * &ad - (&ada * &e + &e * &ada) * 0.5) * (gamma * (nbar + 1.0))
                + (&ad * &e * &a - (&aad * &e + &e * &aad) * 0.5) * (gamma * nbar);
            for r in 0..dim {
                for s in 0..dim {
                    sup[(r * dim + s, n * dim + m)] = l[(r, s)];
                }
            }
        }
    }
    Ok(sup)
}

/// `exp(L t) rho` through the dense superoperator's matrix exponential.
pub fn apply_damping_dense(gamma: f64, nbar: f64, rho: &DensityMatrix, duration: f64) -> Result<DensityMatrix> {
    check_duration(duration)?;
    let dim = rho.dim();
    let prop = (dense_lindbladian(gamma, nbar, rho.n_max())? * duration).exp();
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for s in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                for m in 0..dim {
                    acc += rho.get(n, m) * prop[(r * dim + s, n * dim + m)];
                }
            }
            out[(r, s)] = acc;
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::vacuum_state;

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn fock(n: usize, n_max: usize) -> DensityMatrix {
        DensityMatrix::from_populations(&Populations::fock(n, n_max + 1)).unwrap()
    }

    #[test]
    fn zero_rate_generators_vanish() {
        let bands = build_lindblad_bands(0.0, 0.15, 6).unwrap();
        for d in 0..=6 {
            let g = bands.band(d);
            assert!(g.diag().iter().chain(g.up()).chain(g.down()).all(|&x| x == 0.0));
        }
    }

    #[test]
    fn zero_temperature_cascade() {
        let gamma = 0.7;
        let g = build_lindblad_bands(gamma, 0.0, 8).unwrap().band(0).clone();
        for n in 0..9 {
            assert!((g.diag()[n] + gamma * n as f64).abs() < 1e-15);
            if n < 8 {
                assert!((g.up()[n] - gamma * (n + 1) as f64).abs() < 1e-14);
            }
            assert_eq!(g.down()[n], 0.0);
        }
    }

    #[test]
    fn population_band_conserves_probability() {
        let g = build_lindblad_bands(0.3, 0.15, 12).unwrap().band(0).to_dense();
        for col in 0..g.ncols() {
            assert!(g.column(col).sum().abs() < 1e-14, "column {col}");
        }
    }

    #[test]
    fn single_photon_decay() {
        let bands = build_lindblad_bands(0.5, 0.0, 10).unwrap();
        let out = apply_damping(&bands, &fock(1, 10), 1.0).unwrap();
        let p = out.populations();
        assert!((p[1] - (-0.5f64).exp()).abs() < 1e-8);
        assert!((p[0] - (1.0 - (-0.5f64).exp())).abs() < 1e-8);
        assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_is_identity() {
        let bands = build_lindblad_bands(0.5, 0.15, 6).unwrap();
        let rho = thermal_state(2.0, 6).unwrap();
        assert_eq!(apply_damping(&bands, &rho, 0.0).unwrap(), rho);
        let prop = DampingPropagator::new(&bands, 0.0).unwrap();
        assert!((prop.apply(&rho).unwrap().matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn stiffness_bound_is_enforced() {
        let bands = build_lindblad_bands(10.0, 1.0, 50).unwrap().with_stiffness_bound(100.0);
        let err = apply_damping(&bands, &vacuum_state(50).unwrap(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. }));
    }

    #[test]
    fn rejects_negative_inputs() {
        assert!(build_lindblad_bands(-0.1, 0.0, 4).is_err());
        assert!(build_lindblad_bands(0.1, -0.5, 4).is_err());
        assert!(thermal_state(-1.0, 4).is_err());
        let bands = build_lindblad_bands(0.1, 0.0, 4).unwrap();
        assert!(apply_damping(&bands, &vacuum_state(4).unwrap(), -1.0).is_err());
        assert!(apply_damping(&bands, &vacuum_state(5).unwrap(), 1.0).is_err());
    }

    #[test]
    fn thermal_examples() {
        assert_eq!(thermal_state(0.0, 5).unwrap(), vacuum_state(5).unwrap());
        let rho = thermal_state(0.15, 40).unwrap();
        let p = rho.populations();
        assert!((p[0] - 1.0 / 1.15).abs() < 1e-15);
        assert!((p.mean() - 0.15).abs() < 1e-9);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_is_stationary() {
        let bands = build_lindblad_bands(0.1, 0.15, 40).unwrap();
        let rho = thermal_state(0.15, 40).unwrap();
        for duration in [0.01, 1.0, 25.0] {
            let out = apply_damping(&bands, &rho, duration).unwrap();
            assert!(max_abs(&(out.matrix() - rho.matrix())) < 1e-9, "duration {duration}");
        }
    }

    #[test]
    fn cached_propagator_matches_rk4() {
        let bands = build_lindblad_bands(0.1, 0.15, 20).unwrap();
        let amps: Vec<Complex64> = (0..21)
            .map(|n| Complex64::new((-(n as f64 - 6.0).powi(2) / 8.0).exp(), 0.1 * n as f64))
            .collect();
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let amps: Vec<Complex64> = amps.iter().map(|z| z / norm.sqrt()).collect();
        let rho = DensityMatrix::from_ket(&amps).unwrap();
        let exact = DampingPropagator::new(&bands, 1.0).unwrap().apply(&rho).unwrap();
        let dense = apply_damping_dense(0.1, 0.15, &rho, 1.0).unwrap();
        assert!(max_abs(&(dense.matrix() - exact.matrix())) < 1e-14);

        // RK4 at the default step count, then with 4x the steps: error falls ~4^4.
        let steps = bands.substeps(1.0);
        let coarse = apply_damping(&bands, &rho, 1.0).unwrap();
        let fine = apply_damping_with_substeps(&bands, &rho, 1.0, 4 * steps).unwrap();
        let coarse_err = max_abs(&(coarse.matrix() - exact.matrix()));
        let fine_err = max_abs(&(fine.matrix() - exact.matrix()));
        assert!(coarse_err < 1e-8, "{coarse_err}");
        assert!(fine_err < coarse_err / 100.0, "{fine_err} vs {coarse_err}");
    }
}
