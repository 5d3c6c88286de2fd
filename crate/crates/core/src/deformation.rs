//! The EUP model `g(x²) = 1 + α x²`, `ḡ(x²) = 2α x²` and its realization on grids.
//!
//! Internally α is the dimensionless `α̃ = α L²` for a recorded length scale `L`
//! in meters; SI values only appear in conversions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveFunction};
use crate::operator::{position_op, std_dev, Action, Operator, SpectralDerivative};

/// Bound on `|α̃|` and on `|α̃| (extent/2)²` for grids paired with a model.
pub const PERTURBATIVE_GUARD: f64 = 0.1;

/// Reduced Planck constant in J s, used to express momenta in SI.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationModel {
    alpha_tilde: f64,
    length_scale_m: f64,
}

/// Model with `α = alpha_tilde / L²`.
pub fn model_from_alpha(alpha_tilde: f64, length_scale_m: f64) -> Result<DeformationModel> {
    DeformationModel::new(alpha_tilde, length_scale_m)
}

impl DeformationModel {
    pub fn new(alpha_tilde: f64, length_scale_m: f64) -> Result<Self> {
        if !alpha_tilde.is_finite() || alpha_tilde.abs() >= PERTURBATIVE_GUARD {
            return Err(Error::Config(format!(
                "|alpha_tilde| must be below {PERTURBATIVE_GUARD}, got {alpha_tilde}"
            )));
        }
        if !(length_scale_m.is_finite() && length_scale_m > 0.0) {
            return Err(Error::Config(format!(
                "length scale must be positive, got {length_scale_m}"
            )));
        }
        Ok(Self {
            alpha_tilde,
            length_scale_m,
        })
    }

    /// The undeformed (Heisenberg) model.
    pub fn heisenberg() -> Self {
        Self {
            alpha_tilde: 0.0,
            length_scale_m: 1.0,
        }
    }

    /// Dimensionless deformation parameter used on grids.
    pub fn alpha(&self) -> f64 {
        self.alpha_tilde
    }

    pub fn length_scale_m(&self) -> f64 {
        self.length_scale_m
    }

    /// Physical α in m⁻².
    pub fn alpha_si(&self) -> f64 {
        self.alpha_tilde / (self.length_scale_m * self.length_scale_m)
    }

    pub fn g(&self, x_sq: f64) -> f64 {
        1.0 + self.alpha_tilde * x_sq
    }

    pub fn gbar(&self, x_sq: f64) -> f64 {
        2.0 * self.alpha_tilde * x_sq
    }

    /// Rejects grids whose half-extent leaves the perturbative regime.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let half = 0.5 * grid.extent();
        let measure = self.alpha_tilde.abs() * half * half;
        if measure >= PERTURBATIVE_GUARD {
            return Err(Error::Config(format!(
                "|alpha| (extent/2)^2 = {measure} must stay below {PERTURBATIVE_GUARD}"
            )));
        }
        Ok(())
    }

    pub fn characteristic_scales(&self) -> ScaleReport {
        characteristic_scales(self.alpha_tilde, self.length_scale_m)
    }

    /// `g(x²)` as a multiplication operator.
    pub fn g_op(&self, grid: &Grid) -> Operator {
        let model = *self;
        Operator::multiplication(*grid, "g(x^2)", move |x| {
            model.g(x.iter().map(|c| c * c).sum())
        })
    }
}

/// Physical momentum in symmetric ordering on a grid.
#[derive(Debug)]
struct PhysicalMomentum {
    axis: usize,
    alpha: f64,
    /// `P_j`, one per grid axis.
    derivatives: Vec<SpectralDerivative>,
    /// Multiplier of `P_j ψ` outside the derivative: `½ g δ_ij + α x_i x_j`.
    outer: Vec<Vec<f64>>,
    /// Multiplier of `ψ` inside the derivative `P_j(·)`: same functions.
    inner: Vec<Vec<f64>>,
}

impl Action for PhysicalMomentum {
    fn act(&self, input: &[Complex64]) -> Vec<Complex64> {
        if self.alpha == 0.0 {
            return self.derivatives[self.axis].act(input);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); input.len()];
        for (j, d) in self.derivatives.iter().enumerate() {
            let dpsi = d.act(input);
            for ((o, v), w) in out.iter_mut().zip(&dpsi).zip(&self.outer[j]) {
                *o += v * w;
            }
            let weighted: Vec<Complex64> = input
                .iter()
                .zip(&self.inner[j])
                .map(|(a, w)| a * w)
                .collect();
            for (o, v) in out.iter_mut().zip(d.act(&weighted)) {
                *o += v;
            }
        }
        out
    }
}

/// `p_axis = ½{g(x²), P_axis} + ½{ḡ(x²) x_axis x_j / x², P_j}` with the cancelled
/// form `ḡ/x² = 2α`, so no node divides by `x² = 0`.
pub fn physical_momentum_op(
    model: &DeformationModel,
    grid: &Grid,
    axis: usize,
) -> Result<Operator> {
    grid.check_axis(axis)?;
    model.check_grid(grid)?;
    let alpha = model.alpha();
    let weights: Vec<Vec<f64>> = (0..grid.dims())
        .map(|j| {
            grid.positions()
                .map(|x| {
                    let x_sq: f64 = x.iter().map(|c| c * c).sum();
                    let diag = if j == axis { 0.5 * model.g(x_sq) } else { 0.0 };
                    diag + alpha * x[axis] * x[j]
                })
                .collect()
        })
        .collect();
    let action = PhysicalMomentum {
        axis,
        alpha,
        derivatives: (0..grid.dims())
            .map(|j| SpectralDerivative::new(grid, j))
            .collect(),
        outer: weights.clone(),
        inner: weights,
    };
    Ok(Operator::new(
        *grid,
        Arc::new(action),
        true,
        &format!("p{}", axis + 1),
    ))
}

/// Field `[x^i, p_j]ψ - i(g δ_ij + ḡ x^i x_j / x²)ψ`.
pub fn xp_commutator_residual_field(
    model: &DeformationModel,
    psi: &WaveFunction,
    i: usize,
    j: usize,
) -> Result<WaveFunction> {
    let grid = psi.grid();
    let x = position_op(grid, i)?;
    let p = physical_momentum_op(model, grid, j)?;
    let comm = crate::operator::commutator_apply(&x, &p, psi)?;
    let alpha = model.alpha();
    let expected = psi
        .multiplied_by(|pos| {
            let x_sq: f64 = pos.iter().map(|c| c * c).sum();
            let diag = if i == j { model.g(x_sq) } else { 0.0 };
            diag + 2.0 * alpha * pos[i] * pos[j]
        })
        .scaled(Complex64::i());
    comm.sub(&expected)
}

/// Relative norm of the position/momentum commutator defect.
pub fn xp_commutator_residual(
    model: &DeformationModel,
    psi: &WaveFunction,
    i: usize,
    j: usize,
) -> Result<f64> {
    Ok(xp_commutator_residual_field(model, psi, i, j)?.norm() / psi.norm())
}

/// Field `([p_i,[p_j,x^k]] + [p_j,[x^k,p_i]] + [x^k,[p_i,p_j]])ψ`.
pub fn jacobi_residual_field(
    model: &DeformationModel,
    psi: &WaveFunction,
    i: usize,
    j: usize,
    k: usize,
) -> Result<WaveFunction> {
    let grid = psi.grid();
    let pi = physical_momentum_op(model, grid, i)?;
    let pj = physical_momentum_op(model, grid, j)?;
    let xk = position_op(grid, k)?;
    let first = Operator::commutator(&pi, &Operator::commutator(&pj, &xk)?)?;
    let second = Operator::commutator(&pj, &Operator::commutator(&xk, &pi)?)?;
    let third = Operator::commutator(&xk, &Operator::commutator(&pi, &pj)?)?;
    first
        .apply(psi)?
        .add(&second.apply(psi)?)?
        .add(&third.apply(psi)?)
}

pub fn jacobi_residual(
    model: &DeformationModel,
    psi: &WaveFunction,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    Ok(jacobi_residual_field(model, psi, i, j, k)?.norm() / psi.norm())
}

/// Spreads entering the deformed uncertainty relation along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub delta_x: f64,
    pub delta_p: f64,
    /// `½(1 + 3α Δx²)`.
    pub bound: f64,
    /// `½|<g> + <ḡ x_i²/x²>|`, the commutator bound it is derived from.
    pub commutator_bound: f64,
    /// `Δx Δp - bound`.
    pub gap: f64,
}

pub fn uncertainty_report(
    model: &DeformationModel,
    psi: &WaveFunction,
    axis: usize,
) -> Result<UncertaintyReport> {
    let grid = psi.grid();
    if grid.dims() != 3 {
        return Err(Error::Usage(
            "the deformed uncertainty relation is three-dimensional".into(),
        ));
    }
    let x = position_op(grid, axis)?;
    let p = physical_momentum_op(model, grid, axis)?;
    let delta_x = std_dev(&x, psi)?;
    let delta_p = std_dev(&p, psi)?;
    let alpha = model.alpha();
    let bound = 0.5 * (1.0 + 3.0 * alpha * delta_x * delta_x);
    let weight = psi.norm_sqr();
    let mean_comm: f64 = psi
        .amplitudes()
        .iter()
        .zip(grid.positions())
        .map(|(a, pos)| {
            let x_sq: f64 = pos.iter().map(|c| c * c).sum();
            a.norm_sqr() * (model.g(x_sq) + 2.0 * alpha * pos[axis] * pos[axis])
        })
        .sum::<f64>()
        * grid.volume_element()
        / weight;
    Ok(UncertaintyReport {
        delta_x,
        delta_p,
        bound,
        commutator_bound: 0.5 * mean_comm.abs(),
        gap: delta_x * delta_p - bound,
    })
}

/// `Δx Δp - ½(1 + 3α Δx²)` along `axis`.
pub fn uncertainty_gap(model: &DeformationModel, psi: &WaveFunction, axis: usize) -> Result<f64> {
    Ok(uncertainty_report(model, psi, axis)?.gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleReport {
    /// α > 0: `Δp_min = √(3α)`.
    MinimalMomentum {
        internal: f64,
        /// In m⁻¹ (natural units).
        si_inverse_m: f64,
        /// In kg m s⁻¹.
        si_kg_m_per_s: f64,
    },
    /// α < 0: `Δx_max = 1/√(3|α|)`.
    MaximalLength { internal: f64, si_m: f64 },
    /// α = 0: no scale.
    None,
}

impl fmt::Display for ScaleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleReport::MinimalMomentum {
                internal,
                si_inverse_m,
                ..
            } => {
                write!(
                    f,
                    "minimal momentum {internal} (internal), {si_inverse_m:e} m^-1"
                )
            }
            ScaleReport::MaximalLength { internal, si_m } => {
                write!(f, "maximal length {internal} (internal), {si_m:e} m")
            }
            ScaleReport::None => write!(f, "no scale"),
        }
    }
}

/// Global scales implied by the deformed uncertainty relation. Works on the raw
/// parameter, so it also applies outside the perturbative grid guard.
pub fn characteristic_scales(alpha_tilde: f64, length_scale_m: f64) -> ScaleReport {
    if alpha_tilde > 0.0 {
        let internal = (3.0 * alpha_tilde).sqrt();
        let si_inverse_m = internal / length_scale_m;
        ScaleReport::MinimalMomentum {
            internal,
            si_inverse_m,
            si_kg_m_per_s: si_inverse_m * HBAR_SI,
        }
    } else if alpha_tilde < 0.0 {
        let internal = 1.0 / (3.0 * alpha_tilde.abs()).sqrt();
        ScaleReport::MaximalLength {
            internal,
            si_m: internal * length_scale_m,
        }
    } else {
        ScaleReport::None
    }
}
