//! Resonant Jaynes-Cummings collisions between a qubit and the cavity field.
//!
//! The joint unitary `exp(-i theta (a s+ + a^dag s-))` is stored as four
//! field-space blocks `K_ji`, with `U (|i> (x) |psi>) = sum_j |j> (x) K_ji |psi>`:
//!
//! ```text
//! K_gg |n> = cos(theta sqrt(n))     |n>
//! K_ee |n> = cos(theta sqrt(n+1))   |n>
//! K_ge |n> = -i sin(theta sqrt(n+1)) |n+1>
//! K_eg |n> = -i sin(theta sqrt(n))   |n-1>
//! ```
//!
//! Each block moves a Fock level by at most one, so a collision costs
//! `O(dim^2)`. Amplitude pushed above `n_max` by `K_ge` is dropped; the
//! missing trace is the truncation leak.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Populations, QubitState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Qubit basis state, in the fixed `(|g>, |e>)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Ground = 0,
    Excited = 1,
}

impl Level {
    pub const BOTH: [Level; 2] = [Level::Ground, Level::Excited];
}

/// Field operator with a single nonzero band: `|n> -> weights[n] |n + shift>`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedBlock {
    shift: isize,
    weights: Vec<Complex64>,
}

impl BandedBlock {
    pub fn shift(&self) -> isize {
        self.shift
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// Target row of source level `n`, if it lies inside the truncation.
    #[inline]
    fn target(&self, n: usize) -> Option<usize> {
        let t = n as isize + self.shift;
        (t >= 0 && (t as usize) < self.weights.len()).then_some(t as usize)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.weights.len();
        let mut out = DMatrix::zeros(dim, dim);
        for n in 0..dim {
            if let Some(t) = self.target(n) {
                out[(t, n)] = self.weights[n];
            }
        }
        out
    }
}

/// Precomputed collision blocks for one `(theta, n_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionMap {
    theta: f64,
    n_max: usize,
    // blocks[j][i] = K_ji
    blocks: [[BandedBlock; 2]; 2],
}

impl CollisionMap {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// `K_{out, in}`.
    pub fn block(&self, out: Level, input: Level) -> &BandedBlock {
        &self.blocks[out as usize][input as usize]
    }

    /// Dense joint operator on `qubit (x) field`, index `level * dim + n`.
    /// Unitary except for the amplitude truncated at `n_max`.
    pub fn joint_unitary(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut u = DMatrix::zeros(2 * dim, 2 * dim);
        for j in Level::BOTH {
            for i in Level::BOTH {
                let k = self.block(j, i).to_dense();
                u.view_mut((j as usize * dim, i as usize * dim), (dim, dim))
                    .copy_from(&k);
            }
        }
        u
    }
}

pub fn jc_collision_map(theta: f64, n_max: usize) -> Result<CollisionMap> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::param("theta", format!("{theta} must be positive")));
    }
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let dim = n_max + 1;
    let rabi = |n: usize| theta * (n as f64).sqrt();

    let gg = (0..dim).map(|n| Complex64::new(rabi(n).cos(), 0.0)).collect();
    let ee = (0..dim).map(|n| Complex64::new(rabi(n + 1).cos(), 0.0)).collect();
    let ge = (0..dim).map(|n| MINUS_I * rabi(n + 1).sin()).collect();
    let eg = (0..dim).map(|n| MINUS_I * rabi(n).sin()).collect();

    let band = |shift, weights| BandedBlock { shift, weights };
    Ok(CollisionMap {
        theta,
        n_max,
        blocks: [
            [band(0, gg), band(1, ge)],
            [band(-1, eg), band(0, ee)],
        ],
    })
}

// out[l(n), r(m)] += coef * wl[n] rho[n, m] conj(wr[m])
fn accumulate_sandwich(
    out: &mut DMatrix<Complex64>,
    rho: &DMatrix<Complex64>,
    left: &BandedBlock,
    right: &BandedBlock,
    coef: f64,
) {
    let dim = rho.nrows();
    for m in 0..dim {
        let Some(col) = right.target(m) else { continue };
        let wr = right.weights[m].conj() * coef;
        if wr == ZERO {
            continue;
        }
        for n in 0..dim {
            let Some(row) = left.target(n) else { continue };
            out[(row, col)] += left.weights[n] * rho[(n, m)] * wr;
        }
    }
}

fn check_dim(map: &CollisionMap, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Field state after one collision: `Tr_q[U (rho_b (x) rho_q) U^dag]`.
pub fn apply_collision(
    map: &CollisionMap,
    rho_b: &DensityMatrix,
    rho_q: &QubitState,
) -> Result<DensityMatrix> {
    check_dim(map, rho_b)?;
    let rho = rho_b.matrix();
    let qubit = rho_q.matrix();
    let mut out = DMatrix::zeros(map.dim(), map.dim());
    for j in Level::BOTH {
        for i in Level::BOTH {
            for i2 in Level::BOTH {
                let weight = qubit[(i as usize, i2 as usize)];
                if weight != 0.0 {
                    accumulate_sandwich(&mut out, rho, map.block(j, i), map.block(j, i2), weight);
                }
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Reduced state of the qubit leaving the cavity, in the `(|g>, |e>)` basis.
pub fn outgoing_qubit(
    map: &CollisionMap,
    rho_b: &DensityMatrix,
    rho_q: &QubitState,
) -> Result<Matrix2<Complex64>> {
    check_dim(map, rho_b)?;
    let rho = rho_b.matrix();
    let qubit = rho_q.matrix();
    let dim = map.dim();
    let mut out = Matrix2::zeros();
    for j in Level::BOTH {
        for j2 in Level::BOTH {
            let mut acc = ZERO;
            for i in Level::BOTH {
                for i2 in Level::BOTH {
                    let weight = qubit[(i as usize, i2 as usize)];
                    if weight == 0.0 {
                        continue;
                    }
                    let left = map.block(j, i);
                    let right = map.block(j2, i2);
                    // Tr[K_ji rho K_j2i2^dag] pairs source levels landing on the same row.
                    for n in 0..dim {
                        let Some(row) = left.target(n) else { continue };
                        let m = row as isize - right.shift;
                        if m < 0 || m as usize >= dim {
                            continue;
                        }
                        let m = m as usize;
                        acc += left.weights[n] * rho[(n, m)] * right.weights[m].conj() * weight;
                    }
                }
            }
            out[(j as usize, j2 as usize)] = acc;
        }
    }
    Ok(out)
}

/// Population-only collision for incoherent qubits (`c = 0`):
///
/// ```text
/// p_n' = s_{n+1}^2 (q p_{n+1} - (1-q) p_n) + s_n^2 ((1-q) p_{n-1} - q p_n) + p_n,
/// s_n = sin(theta sqrt(n))
/// ```
///
/// with `p_{n_max+1} = 0`, matching the truncation of [`apply_collision`].
pub fn apply_collision_diagonal(theta: f64, q: f64, p: &Populations) -> Result<Populations> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::param("theta", format!("{theta} must be positive")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} is outside [0, 1]")));
    }
    if let Some((level, &value)) = p.iter().enumerate().find(|(_, &x)| x < -1e-12) {
        return Err(Error::NegativePopulation { level, value });
    }
    let dim = p.len();
    let s2 = |n: usize| (theta * (n as f64).sqrt()).sin().powi(2);
    let mut out = Vec::with_capacity(dim);
    for n in 0..dim {
        let above = if n + 1 < dim { p[n + 1] } else { 0.0 };
        let below = if n > 0 { p[n - 1] } else { 0.0 };
        let up = s2(n + 1) * (q * above - (1.0 - q) * p[n]);
        let down = s2(n) * ((1.0 - q) * below - q * p[n]);
        out.push(up + down + p[n]);
    }
    Ok(Populations::new(out))
}

/// Operator-form collision, used to cross-check [`apply_collision`]:
///
/// ```text
/// rho' = (1-q) C1 rho C1 + q S a rho a^dag S + (1-q) a^dag S rho S a + q C0 rho C0
///      + i c sqrt(q(1-q)) [C0 rho S a + C1 rho a^dag S - S a rho C1 - a^dag S rho C0]
/// ```
///
/// with `C0 = cos(theta sqrt(N))`, `C1 = cos(theta sqrt(N+1))` and
/// `S = sin(theta sqrt(N+1)) / sqrt(N+1)`. The last coherence term is the
/// Hermitian conjugate partner of the first one; the commonly printed
/// `a^dag S rho a^dag C0` is not. Built from dense truncated matrices.
pub fn apply_collision_operator_form(theta: f64, q: f64, c: f64, rho_b: &DensityMatrix) -> Result<DensityMatrix> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::param("theta", format!("{theta} must be positive")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} is outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::param("c", format!("{c} is outside [0, 1]")));
    }
    let dim = rho_b.dim();
    let real_diag = |f: &dyn Fn(f64) -> f64| {
        DMatrix::from_fn(dim, dim, |n, m| {
            if n == m {
                Complex64::new(f(n as f64), 0.0)
            } else {
                ZERO
            }
        })
    };
    let c0 = real_diag(&|n| (theta * n.sqrt()).cos());
    let c1 = real_diag(&|n| (theta * (n + 1.0).sqrt()).cos());
    let s1 = real_diag(&|n| (theta * (n + 1.0).sqrt()).sin() / (n + 1.0).sqrt());
    let a = DMatrix::from_fn(dim, dim, |n, m| {
        if m == n + 1 {
            Complex64::new((m as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let ad = a.adjoint();
    let rho = rho_b.matrix();

    let sa = &s1 * &a;
    let ads = &ad * &s1;
    let re = |x: f64| Complex64::new(x, 0.0);

    let mut out = (&c1 * rho * &c1) * re(1.0 - q)
        + (&sa * rho * sa.adjoint()) * re(q)
        + (&ads * rho * ads.adjoint()) * re(1.0 - q)
        + (&c0 * rho * &c0) * re(q);

    let coherence = c * (q * (1.0 - q)).sqrt();
    if coherence != 0.0 {
        let bracket = &c0 * rho * &sa + &c1 * rho * &ads - &sa * rho * &c1 - &ads * rho * &c0;
        out += bracket * Complex64::new(0.0, coherence);
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}
