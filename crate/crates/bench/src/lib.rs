//! Fixtures shared by the benchmarks.

use micromaser::{apply_collision, build_qubit_state, fine_tuned_theta, jc_collision_map, vacuum_state, DensityMatrix};

/// Coherently charged state on `n_max + 1` levels: the vacuum after
/// `collisions` collisions with q = 0.25, c = 1 at the m = 15 trap angle.
/// Every band is populated, so kernels see dense input.
pub fn charged_state(n_max: usize, collisions: usize) -> DensityMatrix {
    let map = jc_collision_map(fine_tuned_theta(1.0, 15.0), n_max).expect("valid angle");
    let qubit = build_qubit_state(0.25, 1.0).expect("valid qubit");
    let mut rho = vacuum_state(n_max).expect("valid truncation");
    for _ in 0..collisions {
        rho = apply_collision(&map, &rho, &qubit).expect("matching truncation");
    }
    rho
}
