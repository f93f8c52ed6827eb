//! Charging protocol: repeated collision + damping starting from the vacuum.
//!
//! Each step applies one collision with a fresh qubit and then lets the
//! cavity relax for one inter-collision interval `t_r` (the time unit, so the
//! damping rate is `gamma_tr`). The truncation grows by `growth_factor`
//! whenever the top Fock level picks up more than `leak_threshold`.

use serde::Serialize;

use crate::analytics::{trapping_condition, DEFAULT_M_SEARCH_LIMIT};
use crate::collision::{apply_collision, apply_collision_diagonal, jc_collision_map, CollisionMap};
use crate::dissipation::{apply_damping_populations, build_lindblad_bands, DampingPropagator};
use crate::error::{Error, Result};
use crate::hilbert::{
    build_qubit_state, resize, vacuum_state, validate, DensityMatrix, ModelParams, Populations,
    QubitState,
};
use crate::observables::{measure, measure_populations, ObservableSet};

/// Engineering thresholds of a run. None of these come from the physics;
/// they decide when to grow the truncation and how to label a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    /// Converged when the relative energy change over one window is below this.
    pub plateau_eps: f64,
    /// Window length in collisions.
    pub window: usize,
    /// Moving-average width, in collisions, used by growth detection.
    pub smoothing: usize,
    /// A window is a plateau if some later window drifts at least
    /// `1 / plateau_fraction` times faster.
    pub plateau_fraction: f64,
    /// A monotone rise whose window increments each shrink below this
    /// fraction of the previous one is settling, not growing.
    pub decay_ratio: f64,
    /// Top-level population that triggers truncation growth.
    pub leak_threshold: f64,
    pub n_max_cap: usize,
    pub growth_factor: f64,
    /// Record every `decimate`-th collision.
    pub decimate: usize,
    /// Full state validation every this many collisions (0 disables).
    pub validation_interval: usize,
    pub tolerance: f64,
    pub stop_when_converged: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            plateau_eps: 1e-8,
            window: 100,
            smoothing: 50,
            plateau_fraction: 0.5,
            decay_ratio: 0.8,
            leak_threshold: 1e-10,
            n_max_cap: 1024,
            growth_factor: 1.5,
            decimate: 1,
            validation_interval: 100,
            tolerance: 1e-9,
            stop_when_converged: false,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::param("window", "must be positive"));
        }
        if self.smoothing == 0 || self.smoothing > self.window {
            return Err(Error::param("smoothing", "must lie in 1..=window"));
        }
        if self.decimate == 0 {
            return Err(Error::param("decimate", "must be positive"));
        }
        if self.growth_factor.is_nan() || self.growth_factor <= 1.0 {
            return Err(Error::param("growth_factor", "must exceed 1"));
        }
        if !(self.plateau_fraction > 0.0 && self.plateau_fraction < 1.0) {
            return Err(Error::param("plateau_fraction", "must lie in (0, 1)"));
        }
        if !(self.decay_ratio > 0.0 && self.decay_ratio < 1.0) {
            return Err(Error::param("decay_ratio", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Converged,
    MetastableThenGrowing,
    GrowingUnbounded,
    TruncationOverflow,
    /// Too short to classify, or neither steady nor steadily growing.
    Undetermined,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Converged => "converged",
            Classification::MetastableThenGrowing => "metastable_then_growing",
            Classification::GrowingUnbounded => "growing_unbounded",
            Classification::TruncationOverflow => "truncation_overflow",
            Classification::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    /// Collision index, starting at 1.
    pub k: usize,
    pub observables: ObservableSet,
    pub n_max_used: usize,
}

/// Inclusive collision-index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CollisionRange {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub classification: Classification,
    pub steady_window: Option<CollisionRange>,
    pub final_state: DensityMatrix,
    pub collisions_run: usize,
    pub cumulative_leak: f64,
    pub n_max_final: usize,
}

/// Initial truncation: `max(2m + 2, 32)` for a fine-tuned angle, else 64.
pub fn default_n_max(theta: f64) -> usize {
    match trapping_condition(theta, DEFAULT_M_SEARCH_LIMIT) {
        Some(spec) => (2 * spec.m as usize + 2).max(32),
        None => 64,
    }
}

enum FieldState {
    Diagonal(Populations),
    Dense(DensityMatrix),
}

impl FieldState {
    fn top_population(&self) -> f64 {
        match self {
            FieldState::Diagonal(p) => p[p.len() - 1],
            FieldState::Dense(rho) => rho.top_population(),
        }
    }

    fn trace(&self) -> f64 {
        match self {
            FieldState::Diagonal(p) => p.total(),
            FieldState::Dense(rho) => rho.trace(),
        }
    }

    fn energy(&self) -> f64 {
        match self {
            FieldState::Diagonal(p) => p.mean(),
            FieldState::Dense(rho) => rho.populations().mean(),
        }
    }

    fn grow(&mut self, n_max: usize) -> Result<()> {
        match self {
            FieldState::Diagonal(p) => *p = p.padded(n_max + 1),
            FieldState::Dense(rho) => *rho = resize(rho, n_max, 0.0)?.state,
        }
        Ok(())
    }

    fn measure(&self, leak: f64) -> Result<ObservableSet> {
        match self {
            FieldState::Diagonal(p) => Ok(measure_populations(p, leak)),
            FieldState::Dense(rho) => measure(rho, leak),
        }
    }

    fn into_density_matrix(self) -> Result<DensityMatrix> {
        match self {
            FieldState::Diagonal(p) => DensityMatrix::from_populations(&p),
            FieldState::Dense(rho) => Ok(rho),
        }
    }
}

struct Propagators {
    collision: CollisionMap,
    damping: Option<DampingPropagator>,
}

impl Propagators {
    fn build(params: &ModelParams, n_max: usize, diagonal: bool) -> Result<Self> {
        let collision = jc_collision_map(params.theta, n_max)?;
        let damping = if params.gamma_tr > 0.0 {
            let bands = build_lindblad_bands(params.gamma_tr, params.nbar, n_max)?;
            Some(if diagonal {
                DampingPropagator::populations_only(&bands, 1.0)?
            } else {
                DampingPropagator::new(&bands, 1.0)?
            })
        } else {
            None
        };
        Ok(Propagators { collision, damping })
    }

    fn step(&self, state: FieldState, qubit: &QubitState) -> Result<FieldState> {
        Ok(match state {
            FieldState::Diagonal(p) => {
                let p = apply_collision_diagonal(self.collision.theta(), qubit.q(), &p)?;
                match &self.damping {
                    Some(prop) => FieldState::Diagonal(apply_damping_populations(prop, &p)?),
                    None => FieldState::Diagonal(p),
                }
            }
            FieldState::Dense(rho) => {
                let rho = apply_collision(&self.collision, &rho, qubit)?;
                match &self.damping {
                    Some(prop) => FieldState::Dense(prop.apply(&rho)?),
                    None => FieldState::Dense(rho),
                }
            }
        })
    }
}

/// Runs the charging protocol from the vacuum for `params.collisions` steps.
///
/// Incoherent qubits (`c = 0` or `q` in `{0, 1}`) keep the field diagonal, so
/// those runs evolve the populations only. A run that would need more than
/// `n_max_cap` levels stops early and is labeled
/// [`Classification::TruncationOverflow`].
pub fn run_protocol(
    params: &ModelParams,
    options: &RunOptions,
) -> Result<(Vec<TrajectoryRecord>, RunOutcome)> {
    params.validate()?;
    options.validate()?;
    let qubit = build_qubit_state(params.q, params.c)?;
    let diagonal = qubit.is_diagonal();

    let mut n_max = params.n_max;
    let mut props = Propagators::build(params, n_max, diagonal)?;
    let vacuum = vacuum_state(n_max)?;
    let mut state = if diagonal {
        FieldState::Diagonal(vacuum.populations())
    } else {
        FieldState::Dense(vacuum)
    };

    let mut records = Vec::with_capacity(params.collisions / options.decimate);
    let mut energies = Vec::with_capacity(params.collisions);
    let mut leaks = Vec::with_capacity(params.collisions);
    let mut leak = 0.0;
    let mut overflow = false;

    for k in 1..=params.collisions {
        if state.top_population() > options.leak_threshold {
            if n_max >= options.n_max_cap {
                overflow = true;
                break;
            }
            let target = ((n_max as f64 * options.growth_factor).ceil() as usize)
                .max(n_max + 1)
                .min(options.n_max_cap);
            state.grow(target)?;
            n_max = target;
            props = Propagators::build(params, n_max, diagonal)?;
        }

        let before = state.trace();
        state = props.step(state, &qubit)?;
        leak += (before - state.trace()).max(0.0);

        energies.push(state.energy());
        leaks.push(leak);

        if options.validation_interval > 0 && k % options.validation_interval == 0 {
            check_state(&state, leak, k, options.tolerance)?;
        }
        if k % options.decimate == 0 {
            records.push(TrajectoryRecord {
                k,
                observables: state.measure(leak)?,
                n_max_used: n_max,
            });
        }
        if options.stop_when_converged
            && k >= 2 * options.window
            && k % options.window == 0
            && converged_window(&energies, &leaks, options.window, options).is_some()
        {
            break;
        }
    }

    let collisions_run = energies.len();
    let (classification, steady_window) = if overflow {
        (Classification::TruncationOverflow, None)
    } else {
        match classify_series(&energies, &leaks, 1, 1, options) {
            Ok(result) => result,
            Err(Error::InsufficientData { .. }) => (Classification::Undetermined, None),
            Err(e) => return Err(e),
        }
    };

    Ok((
        records,
        RunOutcome {
            classification,
            steady_window,
            final_state: state.into_density_matrix()?,
            collisions_run,
            cumulative_leak: leak,
            n_max_final: n_max,
        },
    ))
}

fn check_state(state: &FieldState, leak: f64, k: usize, tol: f64) -> Result<()> {
    let fail = |detail: String| Err(Error::InvalidState { collision: k, detail });
    match state {
        FieldState::Diagonal(p) => {
            if let Some((n, &x)) = p.iter().enumerate().find(|(_, &x)| x < -tol) {
                return fail(format!("population {x:e} at level {n}"));
            }
            let deviation = (p.total() - (1.0 - leak)).abs();
            if deviation > tol {
                return fail(format!("trace deviation {deviation:e}"));
            }
        }
        FieldState::Dense(rho) => {
            let report = validate(rho, tol);
            let deviation = (rho.trace() - (1.0 - leak)).abs();
            if deviation > tol || !report.hermitian_ok() || !report.positive_ok() {
                return fail(format!("{report}; trace deviation net of leak {deviation:e}"));
            }
        }
    }
    Ok(())
}

fn relative_change(new: f64, old: f64) -> f64 {
    let diff = (new - old).abs();
    if diff == 0.0 {
        0.0
    } else if new.abs() > 0.0 {
        diff / new.abs()
    } else {
        f64::INFINITY
    }
}

// Trailing window, in samples, that satisfies the convergence test.
fn converged_window(
    energies: &[f64],
    leaks: &[f64],
    window: usize,
    options: &RunOptions,
) -> Option<(usize, usize)> {
    let n = energies.len();
    if n <= window {
        return None;
    }
    let (start, end) = (n - 1 - window, n - 1);
    let drift = relative_change(energies[end], energies[start]);
    let leaked = leaks[end] - leaks[start];
    (drift < options.plateau_eps && leaked <= options.leak_threshold).then_some((start, end))
}

/// Classifies a trajectory from its recorded energies and cumulative leak.
///
/// Windows and smoothing are given in collisions; records are assumed to be
/// evenly spaced.
pub fn classify_outcome(
    trajectory: &[TrajectoryRecord],
    options: &RunOptions,
) -> Result<(Classification, Option<CollisionRange>)> {
    options.validate()?;
    let stride = match trajectory {
        [a, b, ..] => b.k.saturating_sub(a.k).max(1),
        _ => 1,
    };
    let energies: Vec<f64> = trajectory.iter().map(|r| r.observables.energy).collect();
    let leaks: Vec<f64> = trajectory.iter().map(|r| r.observables.trace_leak).collect();
    let first_k = trajectory.first().map_or(1, |r| r.k);
    let (class, window) = classify_series(&energies, &leaks, stride, first_k, options)?;
    Ok((class, window))
}

// Samples are spaced `stride` collisions apart; sample 0 is collision `first_k`.
fn classify_series(
    energies: &[f64],
    leaks: &[f64],
    stride: usize,
    first_k: usize,
    options: &RunOptions,
) -> Result<(Classification, Option<CollisionRange>)> {
    let window = (options.window / stride).max(1);
    let smoothing = (options.smoothing / stride).max(1);
    let n = energies.len();
    if n < 2 * window + 1 {
        return Err(Error::InsufficientData {
            needed: (2 * window + 1) * stride,
            available: n * stride,
        });
    }
    let to_range = |(a, b): (usize, usize)| CollisionRange {
        start: first_k + a * stride,
        end: first_k + b * stride,
    };

    if let Some(range) = converged_window(energies, leaks, window, options) {
        return Ok((Classification::Converged, Some(to_range(range))));
    }

    // smoothed energy ending at sample t
    let smooth = |t: usize| energies[t + 1 - smoothing..=t].iter().sum::<f64>() / smoothing as f64;
    // window boundaries, chronological, aligned to the last sample
    let boundaries: Vec<usize> = (0..)
        .map(|i| n as isize - 1 - (i * window) as isize)
        .take_while(|&t| t + 1 >= smoothing as isize)
        .map(|t| t as usize)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if boundaries.len() < 4 {
        return Ok((Classification::Undetermined, None));
    }
    let smoothed: Vec<f64> = boundaries.iter().map(|&t| smooth(t)).collect();
    let tail = &smoothed[smoothed.len() - 4..];
    let growing = tail.windows(2).all(|w| w[1] > w[0]);
    let steps: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let settling = steps.windows(2).all(|d| d[1] < options.decay_ratio * d[0]);
    if !growing || settling {
        return Ok((Classification::Undetermined, None));
    }

    let drifts: Vec<f64> = smoothed
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[1].abs().max(f64::MIN_POSITIVE))
        .collect();
    let plateau = (0..drifts.len())
        .filter(|&i| {
            drifts[i + 1..]
                .iter()
                .any(|&later| drifts[i] < options.plateau_fraction * later)
        })
        .min_by(|&a, &b| drifts[a].total_cmp(&drifts[b]));
    Ok(match plateau {
        Some(i) => (
            Classification::MetastableThenGrowing,
            Some(to_range((boundaries[i], boundaries[i + 1]))),
        ),
        None => (Classification::GrowingUnbounded, None),
    })
}

/// First collision after which `value` stays within `rel_tol` of its final
/// recorded value.
pub fn settling_collision(
    trajectory: &[TrajectoryRecord],
    value: impl Fn(&ObservableSet) -> f64,
    rel_tol: f64,
) -> Option<usize> {
    let last = trajectory.last()?;
    let target = value(&last.observables);
    let band = rel_tol * target.abs();
    let outside = trajectory
        .iter()
        .rposition(|r| (value(&r.observables) - target).abs() > band);
    Some(match outside {
        Some(i) if i + 1 < trajectory.len() => trajectory[i + 1].k,
        Some(_) => last.k,
        None => trajectory[0].k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn synthetic(energies: impl Iterator<Item = f64>) -> Vec<TrajectoryRecord> {
        energies
            .enumerate()
            .map(|(i, e)| TrajectoryRecord {
                k: i + 1,
                observables: ObservableSet {
                    energy: e,
                    purity: 1.0,
                    fano: None,
                    ergotropy: e,
                    mean: e,
                    variance: 0.0,
                    trace_leak: 0.0,
                },
                n_max_used: 10,
            })
            .collect()
    }

    #[test]
    fn constant_trajectory_converges() {
        let t = synthetic(std::iter::repeat_n(3.0, 400));
        let (class, window) = classify_outcome(&t, &RunOptions::default()).unwrap();
        assert_eq!(class, Classification::Converged);
        assert_eq!(window, Some(CollisionRange { start: 300, end: 400 }));
    }

    #[test]
    fn linear_trajectory_grows_without_plateau() {
        let t = synthetic((1..=1000).map(|k| 0.05 * k as f64));
        let (class, _) = classify_outcome(&t, &RunOptions::default()).unwrap();
        assert_eq!(class, Classification::GrowingUnbounded);
    }

    #[test]
    fn exponential_approach_is_not_growth() {
        let t = synthetic((1..=2000).map(|k| 10.0 - 9.0 * (-(k as f64) / 130.0).exp()));
        let (class, _) = classify_outcome(&t, &RunOptions::default()).unwrap();
        assert_eq!(class, Classification::Undetermined);
        let sqrt_growth = synthetic((1..=2000).map(|k| (k as f64).sqrt()));
        let (class, _) = classify_outcome(&sqrt_growth, &RunOptions::default()).unwrap();
        assert_eq!(class, Classification::GrowingUnbounded);
    }

    #[test]
    fn plateau_then_ramp_is_metastable() {
        let t = synthetic((1..=1200).map(|k| {
            let k = k as f64;
            if k < 100.0 {
                0.1 * k
            } else if k < 600.0 {
                10.0
            } else {
                10.0 + 0.2 * (k - 600.0)
            }
        }));
        let (class, window) = classify_outcome(&t, &RunOptions::default()).unwrap();
        assert_eq!(class, Classification::MetastableThenGrowing);
        let w = window.unwrap();
        assert!(w.start >= 100 && w.end <= 600, "{w:?}");
    }

    #[test]
    fn decimated_records_are_rescaled() {
        let t: Vec<_> = synthetic(std::iter::repeat_n(2.0, 1000))
            .into_iter()
            .filter(|r| r.k % 10 == 0)
            .collect();
        let (class, window) = classify_outcome(&t, &RunOptions::default()).unwrap();
        assert_eq!(class, Classification::Converged);
        assert_eq!(window, Some(CollisionRange { start: 900, end: 1000 }));
    }

    #[test]
    fn too_short_is_an_error() {
        let t = synthetic(std::iter::repeat_n(1.0, 150));
        assert!(matches!(
            classify_outcome(&t, &RunOptions::default()),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn default_truncation() {
        assert_eq!(default_n_max(PI / 15f64.sqrt()), 32);
        assert_eq!(default_n_max(PI / 20f64.sqrt()), 42);
        assert_eq!(default_n_max(PI / 15.6f64.sqrt()), 64);
    }

    #[test]
    fn zero_collisions_gives_empty_trajectory() {
        let params = ModelParams {
            theta: 1.0,
            q: 0.25,
            c: 1.0,
            gamma_tr: 0.0,
            nbar: 0.0,
            n_max: 8,
            collisions: 0,
        };
        let (records, outcome) = run_protocol(&params, &RunOptions::default()).unwrap();
        assert!(records.is_empty());
        assert_eq!(outcome.classification, Classification::Undetermined);
        assert_eq!(outcome.final_state, vacuum_state(8).unwrap());
    }

    #[test]
    fn truncation_grows_then_overflows() {
        let params = ModelParams {
            theta: PI / 15.6f64.sqrt(),
            q: 0.0,
            c: 0.0,
            gamma_tr: 0.0,
            nbar: 0.0,
            n_max: 4,
            collisions: 300,
        };
        let options = RunOptions {
            n_max_cap: 9,
            ..RunOptions::default()
        };
        let (records, outcome) = run_protocol(&params, &options).unwrap();
        assert_eq!(outcome.classification, Classification::TruncationOverflow);
        assert!(outcome.collisions_run < 300);
        assert_eq!(records.last().unwrap().n_max_used, 9);
        assert!(records.windows(2).all(|w| w[1].observables.trace_leak >= w[0].observables.trace_leak));
    }

    #[test]
    fn settling_uses_last_exit() {
        let t = synthetic([0.0, 5.0, 9.0, 11.0, 9.5, 10.0, 10.0].into_iter());
        assert_eq!(settling_collision(&t, |o| o.energy, 0.01), Some(6));
        assert_eq!(settling_collision(&t, |o| o.energy, 0.2), Some(3));
    }
}
