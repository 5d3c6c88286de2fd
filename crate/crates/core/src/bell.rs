//! Two-qubit states, CHSH correlations with positional factors, closed forms,
//! the deformed Tsirelson bound, the classicality threshold and a settings optimizer.
//!
//! Qubit basis states `|0>`, `|1>` are the `σ_3` eigenvectors with eigenvalues `+1`, `-1`;
//! two-qubit vectors are ordered `|00>, |01>, |10>, |11>` with party A first.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deformation::DeformationModel;
use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::spin::SpinMatrix;

/// Most negative eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOLERANCE: f64 = -1e-10;

/// Tolerance on unit norms of Bloch directions.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Undeformed Tsirelson bound `2√2`.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;

fn pauli4() -> [Matrix2<Complex64>; 4] {
    [
        Matrix2::identity(),
        *SpinMatrix::pauli(0).expect("axis").entries(),
        *SpinMatrix::pauli(1).expect("axis").entries(),
        *SpinMatrix::pauli(2).expect("axis").entries(),
    ]
}

fn kron(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `n·σ`.
fn bloch_observable(n: &[f64; 3]) -> Matrix2<Complex64> {
    let p = pauli4();
    let r = |v: f64| Complex64::new(v, 0.0);
    p[1] * r(n[0]) + p[2] * r(n[1]) + p[3] * r(n[2])
}

/// Two-qubit density matrix together with its Pauli coefficients
/// `α_ij = Tr[ρ σ_i⊗σ_j]`, `ρ = ¼ Σ α_ij σ_i⊗σ_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoQubitState {
    #[serde(skip)]
    rho: Matrix4<Complex64>,
    pauli_coeffs: [[f64; 4]; 4],
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_density(rho: Matrix4<Complex64>) -> Result<Self> {
        let defect = (rho - rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > 1e-12 {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (defect {defect:e})"
            )));
        }
        let trace = rho.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let lowest = min_eigenvalue(&rho);
        if lowest < POSITIVITY_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lowest:e}"
            )));
        }
        Ok(Self {
            pauli_coeffs: pauli_expand(&rho),
            rho,
        })
    }

    pub fn rho(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn pauli_coeffs(&self) -> &[[f64; 4]; 4] {
        &self.pauli_coeffs
    }

    /// 3x3 correlation block `T_ij = α_ij`, `i, j ≥ 1`.
    pub fn correlation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.pauli_coeffs[i + 1][j + 1])
    }

    /// Ascending eigenvalues of `ρ`.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.rho)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }
}

fn min_eigenvalue(rho: &Matrix4<Complex64>) -> f64 {
    SymmetricEigen::new(*rho)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `α_ij = Re Tr[ρ σ_i⊗σ_j]`.
pub fn pauli_expand(rho: &Matrix4<Complex64>) -> [[f64; 4]; 4] {
    let p = pauli4();
    let mut out = [[0.0; 4]; 4];
    for (i, pi) in p.iter().enumerate() {
        for (j, pj) in p.iter().enumerate() {
            out[i][j] = (rho * kron(pi, pj)).trace().re;
        }
    }
    out
}

/// `ρ = ¼ Σ α_ij σ_i⊗σ_j`, rejected unless `α_00 = 1` and `ρ ≥ 0`.
pub fn pauli_assemble(coeffs: &[[f64; 4]; 4]) -> Result<TwoQubitState> {
    if coeffs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("non-finite Pauli coefficient".into()));
    }
    if (coeffs[0][0] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "alpha_00 must be 1, got {}",
            coeffs[0][0]
        )));
    }
    let p = pauli4();
    let mut rho = Matrix4::zeros();
    for (i, pi) in p.iter().enumerate() {
        for (j, pj) in p.iter().enumerate() {
            if coeffs[i][j] != 0.0 {
                rho += kron(pi, pj) * Complex64::new(0.25 * coeffs[i][j], 0.0);
            }
        }
    }
    TwoQubitState::from_density(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BellKind::PhiPlus => "phi_plus",
            BellKind::PhiMinus => "phi_minus",
            BellKind::PsiPlus => "psi_plus",
            BellKind::PsiMinus => "psi_minus",
        };
        f.write_str(name)
    }
}

fn bell_vector(kind: BellKind) -> Vector4<Complex64> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    match kind {
        BellKind::PhiPlus => Vector4::new(h, z, z, h),
        BellKind::PhiMinus => Vector4::new(h, z, z, -h),
        BellKind::PsiPlus => Vector4::new(z, h, h, z),
        BellKind::PsiMinus => Vector4::new(z, h, -h, z),
    }
}

fn projector(v: &Vector4<Complex64>) -> Matrix4<Complex64> {
    v * v.adjoint()
}

pub fn bell_state(kind: BellKind) -> TwoQubitState {
    TwoQubitState::from_density(projector(&bell_vector(kind))).expect("Bell projectors are states")
}

/// The singlet `|Ψ->`.
pub fn singlet() -> TwoQubitState {
    bell_state(BellKind::PsiMinus)
}

/// Simplex weights for the mixture of `(Φ+, Ψ+, Ψ-, Φ-)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BellDiagonalWeights {
    p: [f64; 4],
}

impl BellDiagonalWeights {
    pub const ORDER: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiMinus,
    ];

    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be non-negative, got {p:?}"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self { p })
    }

    pub fn weights(&self) -> [f64; 4] {
        self.p
    }
}

impl TryFrom<[f64; 4]> for BellDiagonalWeights {
    type Error = Error;

    fn try_from(p: [f64; 4]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<BellDiagonalWeights> for [f64; 4] {
    fn from(w: BellDiagonalWeights) -> Self {
        w.p
    }
}

pub fn bell_diagonal(weights: &BellDiagonalWeights) -> TwoQubitState {
    let rho = BellDiagonalWeights::ORDER
        .iter()
        .zip(weights.p)
        .fold(Matrix4::zeros(), |acc, (kind, w)| {
            acc + projector(&bell_vector(*kind)) * Complex64::new(w, 0.0)
        });
    TwoQubitState::from_density(rho).expect("convex mixtures of Bell projectors are states")
}

/// Bloch directions of the two dichotomous observables per party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: [f64; 3],
    pub a_prime: [f64; 3],
    pub b: [f64; 3],
    pub b_prime: [f64; 3],
}

fn norm3(v: &[f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl ChshSettings {
    pub fn new(a: [f64; 3], a_prime: [f64; 3], b: [f64; 3], b_prime: [f64; 3]) -> Result<Self> {
        let s = Self {
            a,
            a_prime,
            b,
            b_prime,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            let n = norm3(v);
            if !((n - 1.0).abs() <= UNIT_TOLERANCE) {
                return Err(Error::Usage(format!(
                    "setting {name} must be a unit vector, |{name}| = {n}"
                )));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, &[f64; 3]); 4] {
        [
            ("a", &self.a),
            ("a_prime", &self.a_prime),
            ("b", &self.b),
            ("b_prime", &self.b_prime),
        ]
    }

    fn flat(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, (_, v)) in self.named().iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(*v);
        }
        out
    }
}

/// `a = ẑ`, `a' = x̂`, `b = -(ẑ + x̂)/√2`, `b' = (ẑ - x̂)/√2`.
pub fn standard_settings() -> ChshSettings {
    let h = FRAC_1_SQRT_2;
    ChshSettings {
        a: [0.0, 0.0, 1.0],
        a_prime: [1.0, 0.0, 0.0],
        b: [-h, 0.0, -h],
        b_prime: [-h, 0.0, h],
    }
}

/// Per-party multipliers `<g(x²)>` of the spin observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionalFactors {
    pub g_a: f64,
    pub g_b: f64,
}

impl PositionalFactors {
    pub const UNDEFORMED: PositionalFactors = PositionalFactors { g_a: 1.0, g_b: 1.0 };

    pub fn new(g_a: f64, g_b: f64) -> Result<Self> {
        if !(g_a.is_finite() && g_b.is_finite()) {
            return Err(Error::Domain(format!(
                "positional factors must be finite, got ({g_a}, {g_b})"
            )));
        }
        Ok(Self { g_a, g_b })
    }

    pub fn from_packets(
        model: &DeformationModel,
        psi_a: &WaveFunction,
        psi_b: &WaveFunction,
    ) -> Self {
        Self {
            g_a: positional_factor(model, psi_a),
            g_b: positional_factor(model, psi_b),
        }
    }

    pub fn product(&self) -> f64 {
        self.g_a * self.g_b
    }
}

/// `C = g_A g_B Tr[ρ (a·σ)⊗(b·σ)]`, evaluated by the trace.
pub fn correlation(
    rho: &TwoQubitState,
    a: &[f64; 3],
    b: &[f64; 3],
    factors: PositionalFactors,
) -> f64 {
    let obs = kron(&bloch_observable(a), &bloch_observable(b));
    factors.product() * (rho.rho * obs).trace().re
}

/// `S = |C(a,b) - C(a,b') + C(a',b) + C(a',b')|`.
pub fn chsh_value(rho: &TwoQubitState, settings: &ChshSettings, factors: PositionalFactors) -> f64 {
    let s = settings;
    (correlation(rho, &s.a, &s.b, factors) - correlation(rho, &s.a, &s.b_prime, factors)
        + correlation(rho, &s.a_prime, &s.b, factors)
        + correlation(rho, &s.a_prime, &s.b_prime, factors))
    .abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateDescriptor {
    Generic { pauli_coeffs: [[f64; 4]; 4] },
    BellDiagonal { weights: BellDiagonalWeights },
}

/// Closed-form `S` at the fixed settings of [`standard_settings`].
pub fn chsh_closed_form(descriptor: &StateDescriptor) -> f64 {
    match descriptor {
        StateDescriptor::Generic { pauli_coeffs } => {
            SQRT_2 * (pauli_coeffs[1][1] + pauli_coeffs[3][3]).abs()
        }
        StateDescriptor::BellDiagonal { weights } => {
            TSIRELSON * (weights.p[2] - weights.p[0]).abs()
        }
    }
}

/// `<x²>` of a packet by grid quadrature.
pub fn mean_x_squared(psi: &WaveFunction) -> f64 {
    weighted_mean(psi, |x_sq| x_sq)
}

fn weighted_mean(psi: &WaveFunction, f: impl Fn(f64) -> f64) -> f64 {
    let grid = psi.grid();
    let (num, den) =
        psi.amplitudes()
            .iter()
            .zip(grid.positions())
            .fold((0.0, 0.0), |(num, den), (a, x)| {
                let w = a.norm_sqr();
                (num + w * f(x.iter().map(|c| c * c).sum()), den + w)
            });
    num / den
}

/// `<ψ|g(x²)|ψ>` by quadrature.
///
/// Only the model guard on `|α̃|` applies here; the box guard of the momentum
/// operator does not, since `g` is a bounded multiplication operator on the grid.
pub fn positional_factor(model: &DeformationModel, psi: &WaveFunction) -> f64 {
    if model.alpha() == 0.0 {
        return 1.0;
    }
    weighted_mean(psi, |x_sq| model.g(x_sq))
}

/// `2√2 <g>_A <g>_B`.
pub fn deformed_tsirelson(
    model: &DeformationModel,
    psi_a: &WaveFunction,
    psi_b: &WaveFunction,
) -> f64 {
    TSIRELSON * PositionalFactors::from_packets(model, psi_a, psi_b).product()
}

/// Separation at which the deformed bound drops to 2 for a party A sharply peaked at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdReport {
    Threshold {
        /// `<x_B²>* = (1 - 1/√2)/|α|` in units of the length scale squared.
        x_squared_internal: f64,
        distance_internal: f64,
        distance_si_m: f64,
    },
    NoThreshold,
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdReport::Threshold {
                distance_internal,
                distance_si_m,
                ..
            } => write!(
                f,
                "threshold distance {distance_internal} (internal) = {distance_si_m:e} m"
            ),
            ThresholdReport::NoThreshold => f.write_str("no-threshold"),
        }
    }
}

/// Classicality threshold for raw `α̃ = α L²`; works outside the perturbative guard
/// so the arithmetic inversion can be checked at any α.
pub fn classical_threshold(alpha_tilde: f64, length_scale_m: f64) -> Result<ThresholdReport> {
    if !alpha_tilde.is_finite() || !(length_scale_m.is_finite() && length_scale_m > 0.0) {
        return Err(Error::Config(format!(
            "invalid deformation parameters alpha_tilde={alpha_tilde}, length_scale_m={length_scale_m}"
        )));
    }
    if alpha_tilde >= 0.0 {
        return Ok(ThresholdReport::NoThreshold);
    }
    let x_sq = (1.0 - FRAC_1_SQRT_2) / alpha_tilde.abs();
    let distance = x_sq.sqrt();
    Ok(ThresholdReport::Threshold {
        x_squared_internal: x_sq,
        distance_internal: distance,
        distance_si_m: distance * length_scale_m,
    })
}

/// Descending eigenvalues of `TᵀT`.
fn correlation_spectrum(t: &Matrix3<f64>) -> [f64; 3] {
    let mut ev: Vec<f64> = SymmetricEigen::new(t.transpose() * t)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    [ev[0], ev[1], ev[2]]
}

/// `2√(m₁ + m₂) g_A g_B` with `m₁ ≥ m₂` the top eigenvalues of `TᵀT`.
pub fn horodecki_bound(rho: &TwoQubitState, factors: PositionalFactors) -> f64 {
    let m = correlation_spectrum(&rho.correlation_matrix());
    2.0 * (m[0] + m[1]).max(0.0).sqrt() * factors.product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub step: f64,
    /// Convergence threshold on the largest tangent-space gradient.
    pub gradient_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iter: 2000,
            seed: 0,
            step: 0.2,
            gradient_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub settings: ChshSettings,
    pub value: f64,
    /// The best restart converged within the iteration budget.
    pub certified: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

fn to_array(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// `a·T(b - b') + a'·T(b + b')`.
fn chsh_bilinear(t: &Matrix3<f64>, v: &[Vector3<f64>; 4]) -> f64 {
    v[0].dot(&(t * (v[2] - v[3]))) + v[1].dot(&(t * (v[2] + v[3])))
}

struct Ascent {
    vectors: [Vector3<f64>; 4],
    value: f64,
    iterations: usize,
    converged: bool,
}

fn ascend(t: &Matrix3<f64>, mut v: [Vector3<f64>; 4], config: &OptimizerConfig) -> Ascent {
    let tt = t.transpose();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let grads = [
            t * (v[2] - v[3]),
            t * (v[2] + v[3]),
            tt * (v[0] + v[1]),
            tt * (v[1] - v[0]),
        ];
        let tangent: Vec<Vector3<f64>> = grads
            .iter()
            .zip(&v)
            .map(|(g, x)| g - x * g.dot(x))
            .collect();
        let size = tangent.iter().map(|g| g.norm()).fold(0.0, f64::max);
        if size <= config.gradient_tolerance {
            converged = true;
            break;
        }
        for (x, g) in v.iter_mut().zip(&tangent) {
            let moved = *x + g * config.step;
            *x = moved / moved.norm();
        }
        iterations += 1;
    }
    Ascent {
        value: chsh_bilinear(t, &v),
        vectors: v,
        iterations,
        converged,
    }
}

fn lexicographic(a: &ChshSettings, b: &ChshSettings) -> Ordering {
    a.flat()
        .iter()
        .zip(b.flat().iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Maximizes `S` over the four Bloch directions by projected gradient ascent on the
/// spheres, with independent deterministically seeded restarts run in parallel.
pub fn optimize_settings(
    rho: &TwoQubitState,
    factors: PositionalFactors,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if config.restarts == 0 {
        return Err(Error::Config("optimizer needs at least one restart".into()));
    }
    if !(config.step > 0.0 && config.step.is_finite()) {
        return Err(Error::Config(format!(
            "optimizer step must be positive, got {}",
            config.step
        )));
    }
    let t = rho.correlation_matrix() * factors.product();
    let runs: Vec<(ChshSettings, f64, usize, bool)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let start = [
                random_unit(&mut rng),
                random_unit(&mut rng),
                random_unit(&mut rng),
                random_unit(&mut rng),
            ];
            let mut run = ascend(&t, start, config);
            // S is reported as |·|; flipping both A directions flips the sign.
            if run.value < 0.0 {
                run.vectors[0] = -run.vectors[0];
                run.vectors[1] = -run.vectors[1];
                run.value = -run.value;
            }
            let settings = ChshSettings {
                a: to_array(&run.vectors[0]),
                a_prime: to_array(&run.vectors[1]),
                b: to_array(&run.vectors[2]),
                b_prime: to_array(&run.vectors[3]),
            };
            (settings, run.value, run.iterations, run.converged)
        })
        .collect();
    let best = runs
        .iter()
        .max_by(|x, y| x.1.total_cmp(&y.1).then_with(|| lexicographic(&y.0, &x.0)))
        .expect("at least one restart");
    Ok(OptimizationResult {
        settings: best.0,
        value: best.1,
        certified: best.3,
        iterations: best.2,
        restarts: config.restarts,
        seed: config.seed,
    })
}

/// Brute-force reference for the optimal `S`: for fixed `b, b'` the best A directions give
/// `S = 2√(|Tu|² + |Tv|²)` with `u ⟂ v` unit vectors along `b ± b'`, so the search runs over
/// `u` on a polar/azimuthal grid and `v` on a circle, then zooms in around the best point.
pub fn grid_search_chsh(
    rho: &TwoQubitState,
    factors: PositionalFactors,
    resolution: usize,
    zoom_levels: usize,
) -> f64 {
    let t = rho.correlation_matrix() * factors.product();
    let value = |theta: f64, phi: f64, psi: f64| -> f64 {
        let u = Vector3::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        );
        let e1 = Vector3::new(
            theta.cos() * phi.cos(),
            theta.cos() * phi.sin(),
            -theta.sin(),
        );
        let e2 = Vector3::new(-phi.sin(), phi.cos(), 0.0);
        let v = e1 * psi.cos() + e2 * psi.sin();
        2.0 * ((t * u).norm_squared() + (t * v).norm_squared()).sqrt()
    };
    let pi = std::f64::consts::PI;
    let n = resolution.max(2);
    let mut center = (pi / 2.0, pi, pi);
    let mut half = (pi / 2.0, pi, pi);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..=zoom_levels {
        let mut level_best = (f64::NEG_INFINITY, center);
        for i in 0..=n {
            let theta = center.0 - half.0 + 2.0 * half.0 * i as f64 / n as f64;
            for j in 0..=2 * n {
                let phi = center.1 - half.1 + 2.0 * half.1 * j as f64 / (2 * n) as f64;
                for k in 0..=2 * n {
                    let psi = center.2 - half.2 + 2.0 * half.2 * k as f64 / (2 * n) as f64;
                    let s = value(theta, phi, psi);
                    if s > level_best.0 {
                        level_best = (s, (theta, phi, psi));
                    }
                }
            }
        }
        best = best.max(level_best.0);
        center = level_best.1;
        half = (
            2.0 * half.0 / n as f64,
            2.0 * half.1 / (2 * n) as f64,
            2.0 * half.2 / (2 * n) as f64,
        );
    }
    best
}

/// Random mixed state `GG†/Tr(GG†)` with `G` a complex Ginibre matrix.
pub fn random_state(rng: &mut impl Rng) -> TwoQubitState {
    let g = Matrix4::from_fn(|_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = g * g.adjoint();
    let trace = m.trace();
    let rho = m / trace;
    // Symmetrize away round-off so Hermiticity holds to machine precision.
    let rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    TwoQubitState::from_density(rho).expect("Ginibre states are valid")
}

/// Uniform weights on the simplex.
pub fn random_bell_weights(rng: &mut impl Rng) -> BellDiagonalWeights {
    let e: [f64; 4] = std::array::from_fn(|_| rng.sample(Exp1));
    let total: f64 = e.iter().sum();
    let mut p = e.map(|v| v / total);
    let drift = 1.0 - p.iter().sum::<f64>();
    p[0] += drift;
    BellDiagonalWeights::new(p).expect("normalized exponentials lie on the simplex")
}

pub fn random_settings(rng: &mut impl Rng) -> ChshSettings {
    ChshSettings {
        a: to_array(&random_unit(rng)),
        a_prime: to_array(&random_unit(rng)),
        b: to_array(&random_unit(rng)),
        b_prime: to_array(&random_unit(rng)),
    }
}
