//! Fixtures shared by the benchmarks.

use eup_core::bell::{random_state, TwoQubitState};
use eup_core::deformation::{model_from_alpha, DeformationModel};
use eup_core::grid::{gaussian_packet, make_grid, WaveFunction};

/// Deformed model and a guarded 3D packet on an `n³` grid.
pub fn packet_3d(n: usize) -> (DeformationModel, WaveFunction) {
    let grid = make_grid(3, n, 18.0).expect("valid grid");
    let psi = gaussian_packet(&grid, &[1.0, 0.5, 0.0], 0.8).expect("guarded packet");
    (model_from_alpha(1e-3, 1.0).expect("guarded model"), psi)
}

/// Reproducible mixed two-qubit states.
pub fn states(count: usize, seed: u64) -> Vec<TwoQubitState> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_state(&mut rng)).collect()
}
