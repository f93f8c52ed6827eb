//! Self-test suites run by `micromaser verify`.

use std::f64::consts::PI;
use std::fmt;

use clap::ValueEnum;
use micromaser::analytics::incoherent_purity_closed_form;
use micromaser::collision::outgoing_qubit;
use micromaser::dissipation::apply_damping_dense;
use micromaser::{
    apply_collision, apply_collision_diagonal, apply_collision_operator_form, apply_damping, build_lindblad_bands,
    build_qubit_state, cotangent_state, fine_tuned_theta, incoherent_steady_state, jc_collision_map, run_protocol,
    validate, DampingPropagator, DensityMatrix, ModelParams, Populations, RunOptions,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

/// Seed of the randomized invariants suite.
pub const INVARIANT_SEED: u64 = 7;
pub const INVARIANT_CASES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Suite {
    Oracles,
    Invariants,
    SteadyStates,
}

impl Suite {
    fn name(&self) -> &'static str {
        match self {
            Suite::Oracles => "oracles",
            Suite::Invariants => "invariants",
            Suite::SteadyStates => "steady_states",
        }
    }
}

/// One residual and the bound it must not exceed; informational lines
/// carry no bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub name: String,
    pub residual: f64,
    pub bound: Option<f64>,
}

impl Line {
    fn check(name: impl Into<String>, residual: f64, bound: f64) -> Self {
        Line {
            name: name.into(),
            residual,
            bound: Some(bound),
        }
    }

    fn info(name: impl Into<String>, value: f64) -> Self {
        Line {
            name: name.into(),
            residual: value,
            bound: None,
        }
    }

    pub fn passes(&self) -> bool {
        self.bound.is_none_or(|b| self.residual <= b)
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bound {
            Some(b) => {
                let tag = if self.passes() { "PASS" } else { "FAIL" };
                write!(f, "{tag} {} residual={:.3e} bound={b:.0e}", self.name, self.residual)
            }
            None => write!(f, "INFO {} value={:.6e}", self.name, self.residual),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateArgs {
    pub q: f64,
    pub m: u64,
}

impl Default for SteadyStateArgs {
    fn default() -> Self {
        SteadyStateArgs { q: 0.25, m: 15 }
    }
}

pub fn run_suite(suite: Suite, steady: SteadyStateArgs) -> Result<Vec<Line>, CliError> {
    let lines = match suite {
        Suite::Oracles => oracles()?,
        Suite::Invariants => invariants()?,
        Suite::SteadyStates => steady_states(steady)?,
    };
    Ok(lines
        .into_iter()
        .map(|mut l| {
            l.name = format!("{}/{}", suite.name(), l.name);
            l
        })
        .collect())
}

fn random_state<R: Rng>(rng: &mut R, n_max: usize, support: usize, rank: usize) -> DensityMatrix {
    let dim = n_max + 1;
    let mut g = DMatrix::<Complex64>::zeros(dim, rank);
    for n in 0..support.min(dim) {
        for r in 0..rank {
            g[(n, r)] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    let rho = &g * g.adjoint();
    let trace = rho.trace().re;
    DensityMatrix::from_matrix(rho / Complex64::new(trace, 0.0)).expect("square state")
}

fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

const ORACLE_BOUND: f64 = 1e-8;

fn oracles() -> Result<Vec<Line>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(INVARIANT_SEED);
    let (mut operator_form, mut unitary) = (0.0f64, 0.0f64);
    for &(theta, q, c) in &[(PI / 15f64.sqrt(), 0.25, 1.0), (0.7, 0.5, 0.3), (2.1, 0.9, 0.8), (1.3, 0.0, 0.0)] {
        let n_max = 12;
        let rho = random_state(&mut rng, n_max, n_max, 2);
        let map = jc_collision_map(theta, n_max)?;
        let qubit = build_qubit_state(q, c)?;
        let banded = apply_collision(&map, &rho, &qubit)?;
        operator_form = operator_form.max(max_diff(&banded, &apply_collision_operator_form(theta, q, c, &rho)?));

        let dim = map.dim();
        let u = map.joint_unitary();
        let joint = qubit.matrix().map(|x| Complex64::new(x, 0.0)).kronecker(rho.matrix());
        let evolved = &u * joint * u.adjoint();
        let traced = DMatrix::from_fn(dim, dim, |n, m| evolved[(n, m)] + evolved[(dim + n, dim + m)]);
        unitary = unitary.max((banded.matrix() - traced).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }

    let (mut fixed_point, mut purity) = (0.0f64, 0.0f64);
    for &(q, m) in &[(0.1, 5u64), (0.25, 15), (0.4, 30)] {
        let p = incoherent_steady_state(q, m)?.padded(m as usize + 4);
        let next = apply_collision_diagonal(fine_tuned_theta(1.0, m as f64), q, &p)?;
        fixed_point = fixed_point.max(next.max_abs_diff(&p));
        let direct: f64 = p.iter().map(|x| x * x).sum();
        purity = purity.max((incoherent_purity_closed_form(q, m)? - direct).abs());
    }

    let (gamma, nbar, n_max) = (0.37, 0.15, 10);
    let rho = random_state(&mut rng, n_max, n_max + 1, 3);
    let bands = build_lindblad_bands(gamma, nbar, n_max)?;
    let exact = DampingPropagator::new(&bands, 1.5)?.apply(&rho)?;
    let dense = apply_damping_dense(gamma, nbar, &rho, 1.5)?;
    let rk4 = apply_damping(&bands, &rho, 1.5)?;

    Ok(vec![
        Line::check("collision_vs_operator_form", operator_form, ORACLE_BOUND),
        Line::check("collision_vs_partial_trace", unitary, ORACLE_BOUND),
        Line::check("detailed_balance_fixed_point", fixed_point, ORACLE_BOUND),
        Line::check("purity_closed_form", purity, ORACLE_BOUND),
        Line::check("band_vs_dense_lindblad", max_diff(&exact, &dense), ORACLE_BOUND),
        Line::check("rk4_vs_exact_damping", max_diff(&rk4, &exact), ORACLE_BOUND),
    ])
}

fn invariants() -> Result<Vec<Line>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(INVARIANT_SEED);
    let mut worst = [0.0f64; 7];
    for _ in 0..INVARIANT_CASES {
        let theta = rng.random_range(0.01..2.0 * PI);
        let q = rng.random_range(0.0..=1.0);
        let c = rng.random_range(0.0..=1.0);
        let n_max = rng.random_range(2..=14);
        let rank = rng.random_range(1..=4);
        let rho = random_state(&mut rng, n_max, n_max, rank);

        let map = jc_collision_map(theta, n_max)?;
        let qubit = build_qubit_state(q, c)?;
        let out = apply_collision(&map, &rho, &qubit)?;
        let report = validate(&out, 1e-9);
        let leaving = outgoing_qubit(&map, &rho, &qubit)?;
        let excitations = rho.populations().mean() + (1.0 - q) - out.populations().mean() - leaving[(1, 1)].re;
        worst[0] = worst[0].max(report.trace_deviation);
        worst[1] = worst[1].max(report.hermiticity_violation);
        worst[2] = worst[2].max(-report.min_eigenvalue);
        worst[3] = worst[3].max(excitations.abs());

        let bands = build_lindblad_bands(rng.random_range(0.0..1.0), rng.random_range(0.0..2.0), n_max)?;
        let damped = DampingPropagator::new(&bands, rng.random_range(0.0..5.0))?.apply(&out)?;
        let report = validate(&damped, 1e-9);
        worst[4] = worst[4].max(report.trace_deviation);
        worst[5] = worst[5].max(-report.min_eigenvalue);

        let p = Populations::new(rho.populations().to_vec());
        let diagonal = DensityMatrix::from_populations(&p)?;
        let full = apply_collision(&map, &diagonal, &build_qubit_state(q, 0.0)?)?;
        let fast = apply_collision_diagonal(theta, q, &p)?;
        worst[6] = worst[6].max(full.populations().max_abs_diff(&fast));
    }
    Ok(vec![
        Line::check("collision_trace", worst[0], 1e-10),
        Line::check("collision_hermiticity", worst[1], 1e-10),
        Line::check("collision_negativity", worst[2].max(0.0), 1e-9),
        Line::check("excitation_conservation", worst[3], 1e-10),
        Line::check("damping_trace", worst[4], 1e-10),
        Line::check("damping_negativity", worst[5].max(0.0), 1e-9),
        Line::check("population_path_vs_full_channel", worst[6], 1e-12),
    ])
}

fn steady_states(args: SteadyStateArgs) -> Result<Vec<Line>, CliError> {
    let SteadyStateArgs { q, m } = args;
    let theta = fine_tuned_theta(1.0, m as f64);
    let levels = m as usize;
    let p = incoherent_steady_state(q, m)?.padded(levels + 4);
    let next = apply_collision_diagonal(theta, q, &p)?;
    let direct: f64 = p.iter().map(|x| x * x).sum();

    let mut lines = vec![
        Line::check("incoherent_fixed_point", next.max_abs_diff(&p), 1e-12),
        Line::check(
            "incoherent_purity_closed_form",
            (incoherent_purity_closed_form(q, m)? - direct).abs(),
            1e-12,
        ),
        // Closed form counted over m+1 levels, as sometimes printed; kept as a
        // visible record of how far that variant is off.
        Line::info(
            "incoherent_purity_m_plus_one_variant_offset",
            (incoherent_purity_closed_form(q, m + 1)? - direct).abs(),
        ),
        Line::info("incoherent_purity_large_m_offset", (direct - (1.0 - 2.0 * q).abs()).abs()),
    ];

    if q > 0.0 && q < 1.0 && m >= 2 {
        let n_max = 2 * levels + 2;
        let params = ModelParams {
            theta,
            q,
            c: 1.0,
            gamma_tr: 0.0,
            nbar: 0.0,
            n_max,
            collisions: 20_000,
        };
        let options = RunOptions {
            stop_when_converged: true,
            ..RunOptions::default()
        };
        let (_, outcome) = run_protocol(&params, &options)?;
        let expected = cotangent_state(q, m, outcome.final_state.n_max())?;
        lines.push(Line::check(
            "coherent_cotangent_state",
            outcome.final_state.populations().max_abs_diff(&expected),
            1e-6,
        ));
    }
    Ok(lines)
}
