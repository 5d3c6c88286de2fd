//! Extended-uncertainty-principle deformed quantum mechanics on periodic grids,
//! an exact operator-polynomial engine for the deformed algebra, deformed spin
//! and angular momentum, and CHSH nonlocality with positional deformation factors.

pub mod algebra;
pub mod bell;
pub mod deformation;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod operator;
pub mod spin;

pub use algebra::{verify_deformed_algebra, AlgebraReport, OperatorPolynomial};
pub use bell::{
    bell_diagonal, bell_state, chsh_closed_form, chsh_value, classical_threshold, correlation,
    deformed_tsirelson, horodecki_bound, optimize_settings, pauli_assemble, pauli_expand,
    positional_factor, standard_settings, BellDiagonalWeights, BellKind, ChshSettings,
    OptimizerConfig, PositionalFactors, StateDescriptor, ThresholdReport, TwoQubitState,
};
pub use deformation::{
    characteristic_scales, model_from_alpha, physical_momentum_op, uncertainty_gap,
    DeformationModel, ScaleReport,
};
pub use error::{Error, Result};
pub use experiments::{run_scenario, ResultTable, Scenario, ScenarioKind};
pub use grid::{
    gaussian_packet, gaussian_packet_with_momentum, inner_product, make_grid, Grid, WaveFunction,
};
pub use operator::{
    auxiliary_momentum_op, commutator_apply, expectation, position_op, position_squared_op,
    std_dev, Operator,
};
pub use spin::{
    angular_momentum_op, auxiliary_spin, magnetic_coupling_coefficient, physical_spin,
    CompositeOperator, CouplingReport, Gauge, SpinMatrix,
};
