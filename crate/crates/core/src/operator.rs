//! Matrix-free linear operators on grid wavefunctions.
//!
//! Operators are immutable trees of actions (pointwise multiplication,
//! Fourier differentiation, sums, products) behind an `Arc`, so cloning is
//! cheap and operators can be shared across threads.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{inner_product, Grid, WaveFunction};

/// The action of an operator on raw amplitudes of a fixed grid.
pub trait Action: Send + Sync + fmt::Debug {
    fn act(&self, input: &[Complex64]) -> Vec<Complex64>;
}

/// A linear map `WaveFunction -> WaveFunction` on one grid.
#[derive(Clone)]
pub struct Operator {
    grid: Grid,
    action: Arc<dyn Action>,
    hermitian: bool,
    label: Arc<str>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("label", &self.label)
            .field("hermitian", &self.hermitian)
            .finish()
    }
}

impl Operator {
    pub fn new(grid: Grid, action: Arc<dyn Action>, hermitian: bool, label: &str) -> Self {
        Self {
            grid,
            action,
            hermitian,
            label: label.into(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.grid.check_same(psi.grid())?;
        WaveFunction::from_amplitudes(self.grid, self.action.act(psi.amplitudes()))
    }

    pub fn identity(grid: Grid) -> Self {
        Self::new(grid, Arc::new(Identity), true, "1")
    }

    /// Pointwise multiplication by a real function of position.
    pub fn multiplication(grid: Grid, label: &str, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = grid.positions().map(f).collect();
        Self::new(grid, Arc::new(Multiply { values }), true, label)
    }

    /// Asserts Hermiticity for an operator whose construction guarantees it.
    pub fn assume_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    /// `self * rhs`: applies `rhs` first.
    pub fn product(&self, rhs: &Operator) -> Result<Operator> {
        self.grid.check_same(&rhs.grid)?;
        Ok(Self::new(
            self.grid,
            Arc::new(Product {
                left: self.action.clone(),
                right: rhs.action.clone(),
            }),
            false,
            &format!("({})({})", self.label, rhs.label),
        ))
    }

    /// Linear combination `sum_k c_k A_k`; Hermitian when every term is and every weight is real.
    pub fn linear_combination(terms: &[(Complex64, &Operator)]) -> Result<Operator> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Usage("empty linear combination".into()))?;
        let grid = first.1.grid;
        for (_, op) in terms {
            grid.check_same(&op.grid)?;
        }
        let hermitian = terms.iter().all(|(c, op)| op.hermitian && c.im == 0.0);
        let label = terms
            .iter()
            .map(|(c, op)| format!("{c}*{}", op.label))
            .collect::<Vec<_>>()
            .join(" + ");
        let parts = terms
            .iter()
            .map(|(c, op)| (*c, op.action.clone()))
            .collect();
        Ok(Self::new(grid, Arc::new(Sum { parts }), hermitian, &label))
    }

    pub fn plus(&self, rhs: &Operator) -> Result<Operator> {
        let one = Complex64::new(1.0, 0.0);
        Self::linear_combination(&[(one, self), (one, rhs)])
    }

    pub fn minus(&self, rhs: &Operator) -> Result<Operator> {
        Self::linear_combination(&[
            (Complex64::new(1.0, 0.0), self),
            (Complex64::new(-1.0, 0.0), rhs),
        ])
    }

    pub fn scaled(&self, factor: Complex64) -> Operator {
        let hermitian = self.hermitian && factor.im == 0.0;
        Self::new(
            self.grid,
            Arc::new(Sum {
                parts: vec![(factor, self.action.clone())],
            }),
            hermitian,
            &format!("{factor}*{}", self.label),
        )
    }

    /// `AB - BA` as an operator.
    pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
        a.product(b)?.minus(&b.product(a)?)
    }

    /// Symmetrized product `(AB + BA)/2`, Hermitian when both factors are.
    pub fn symmetrized(a: &Operator, b: &Operator) -> Result<Operator> {
        let half = Complex64::new(0.5, 0.0);
        let op = Self::linear_combination(&[(half, &a.product(b)?), (half, &b.product(a)?)])?;
        Ok(if a.hermitian && b.hermitian {
            op.assume_hermitian()
        } else {
            op
        })
    }
}

#[derive(Debug)]
struct Identity;

impl Action for Identity {
    fn act(&self, input: &[Complex64]) -> Vec<Complex64> {
        input.to_vec()
    }
}

#[derive(Debug)]
struct Multiply {
    values: Vec<f64>,
}

impl Action for Multiply {
    fn act(&self, input: &[Complex64]) -> Vec<Complex64> {
        input.iter().zip(&self.values).map(|(a, v)| a * v).collect()
    }
}

#[derive(Debug)]
struct Product {
    left: Arc<dyn Action>,
    right: Arc<dyn Action>,
}

impl Action for Product {
    fn act(&self, input: &[Complex64]) -> Vec<Complex64> {
        self.left.act(&self.right.act(input))
    }
}

#[derive(Debug)]
struct Sum {
    parts: Vec<(Complex64, Arc<dyn Action>)>,
}

impl Action for Sum {
    fn act(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); input.len()];
        for (c, action) in &self.parts {
            for (o, v) in out.iter_mut().zip(action.act(input)) {
                *o += c * v;
            }
        }
        out
    }
}

/// `-i d/dx` along one axis by discrete Fourier differentiation.
pub(crate) struct SpectralDerivative {
    n: usize,
    stride: usize,
    total: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl fmt::Debug for SpectralDerivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralDerivative")
            .field("n", &self.n)
            .field("stride", &self.stride)
            .finish()
    }
}

/// Angular wavenumbers in FFT order; the Nyquist mode carries `-pi/h`.
pub(crate) fn fft_wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.points_per_axis();
    let dk = 2.0 * std::f64::consts::PI / grid.extent();
    (0..n)
        .map(|m| {
            let signed = if m < n / 2 {
                m as isize
            } else {
                m as isize - n as isize
            };
            signed as f64 * dk
        })
        .collect()
}

impl SpectralDerivative {
    pub(crate) fn new(grid: &Grid, axis: usize) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        Self {
            n,
            stride: grid.stride(axis),
            total: grid.len(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            wavenumbers: fft_wavenumbers(grid),
        }
    }
}

impl Action for SpectralDerivative {
    fn act(&self, input: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let scale = 1.0 / n as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.total];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![
            Complex64::new(0.0, 0.0);
            self.forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len())
        ];
        // Lines along the axis start at every index whose axis digit is zero.
        let block = self.stride * n;
        for outer in (0..self.total).step_by(block) {
            for inner in 0..self.stride {
                let start = outer + inner;
                for (m, slot) in line.iter_mut().enumerate() {
                    *slot = input[start + m * self.stride];
                }
                self.forward.process_with_scratch(&mut line, &mut scratch);
                for (v, k) in line.iter_mut().zip(&self.wavenumbers) {
                    *v *= k * scale;
                }
                self.inverse.process_with_scratch(&mut line, &mut scratch);
                for (m, v) in line.iter().enumerate() {
                    out[start + m * self.stride] = *v;
                }
            }
        }
        out
    }
}

/// Position operator `x^axis`.
pub fn position_op(grid: &Grid, axis: usize) -> Result<Operator> {
    grid.check_axis(axis)?;
    Ok(Operator::multiplication(
        *grid,
        &format!("x{}", axis + 1),
        |x| x[axis],
    ))
}

/// `x^2 = sum_i x^i x^i`.
pub fn position_squared_op(grid: &Grid) -> Operator {
    Operator::multiplication(*grid, "x^2", |x| x.iter().map(|c| c * c).sum())
}

/// Auxiliary (canonical) momentum `P_axis = -i d/dx^axis`.
pub fn auxiliary_momentum_op(grid: &Grid, axis: usize) -> Result<Operator> {
    grid.check_axis(axis)?;
    Ok(Operator::new(
        *grid,
        Arc::new(SpectralDerivative::new(grid, axis)),
        true,
        &format!("P{}", axis + 1),
    ))
}

/// `(AB - BA) psi`.
pub fn commutator_apply(a: &Operator, b: &Operator, psi: &WaveFunction) -> Result<WaveFunction> {
    a.grid().check_same(b.grid())?;
    let ab = a.apply(&b.apply(psi)?)?;
    let ba = b.apply(&a.apply(psi)?)?;
    ab.sub(&ba)
}

/// `<psi|A psi>`.
pub fn expectation(op: &Operator, psi: &WaveFunction) -> Result<Complex64> {
    inner_product(psi, &op.apply(psi)?)
}

/// Standard deviation `sqrt(<A^2> - <A>^2)` of a Hermitian operator.
pub fn std_dev(op: &Operator, psi: &WaveFunction) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::Usage(format!(
            "standard deviation requires a Hermitian operator, got {}",
            op.label()
        )));
    }
    let a_psi = op.apply(psi)?;
    let norm = psi.norm_sqr();
    let mean = inner_product(psi, &a_psi)?.re / norm;
    let second = a_psi.norm_sqr() / norm;
    let radicand = second - mean * mean;
    if radicand < -1e-12 {
        return Err(Error::NumericalConsistency(format!(
            "negative variance {radicand:e} for {}",
            op.label()
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// `|<phi|A psi> - <A phi|psi>|`, the Hermiticity defect on a pair of states.
pub fn hermiticity_defect(op: &Operator, psi: &WaveFunction, phi: &WaveFunction) -> Result<f64> {
    let lhs = inner_product(phi, &op.apply(psi)?)?;
    let rhs = inner_product(&op.apply(phi)?, psi)?;
    Ok((lhs - rhs).norm())
}
