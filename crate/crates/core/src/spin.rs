//! Deformed spin and orbital angular momentum.
//!
//! Axes are 0-based. Physical spin is `ŝ_i = g(x²) σ_i/2`, physical orbital angular
//! momentum is `l_i = ε_ijk ½{x_j, p_k}`, and the auxiliary counterparts divide by `g`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    angular_momentum_poly, g_poly, levi_civita, physical_momentum_poly, x_squared_poly,
    Coefficient, OperatorPolynomial, OrderedMonomial, Pauli, Truncation,
};
use crate::deformation::{physical_momentum_op, DeformationModel};
use crate::error::{Error, Result};
use crate::grid::{inner_product, Grid, WaveFunction};
use crate::operator::{position_op, Operator};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_spin_axis(axis: usize) -> Result<()> {
    if axis < 3 {
        Ok(())
    } else {
        Err(Error::Usage(format!("spin axis {axis} out of range 0..3")))
    }
}

/// A 2x2 complex matrix acting on the spin factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMatrix {
    entries: Matrix2<Complex64>,
}

fn build_pauli() -> [SpinMatrix; 3] {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let basis = [
        SpinMatrix::new(Matrix2::new(zero, one, one, zero)),
        SpinMatrix::new(Matrix2::new(zero, -i, i, zero)),
        SpinMatrix::new(Matrix2::new(one, zero, zero, -one)),
    ];
    assert_eq!(
        pauli_algebra_defect(&basis),
        0.0,
        "Pauli matrices violate σ_iσ_j = δ_ij + iε_ijk σ_k"
    );
    basis
}

/// Largest entry of `σ_iσ_j - δ_ij 1 - iε_ijk σ_k` over all index pairs.
pub fn pauli_algebra_defect(basis: &[SpinMatrix; 3]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut expected = if i == j {
                SpinMatrix::identity()
            } else {
                SpinMatrix::zero()
            };
            for (k, sk) in basis.iter().enumerate() {
                let eps = levi_civita(i, j, k) as f64;
                if eps != 0.0 {
                    expected = expected.plus(&sk.scaled(c(0.0, eps)));
                }
            }
            worst = worst.max(basis[i].product(&basis[j]).minus(&expected).max_abs());
        }
    }
    worst
}

impl SpinMatrix {
    pub fn new(entries: Matrix2<Complex64>) -> Self {
        Self { entries }
    }

    pub fn identity() -> Self {
        Self::new(Matrix2::identity())
    }

    pub fn zero() -> Self {
        Self::new(Matrix2::zeros())
    }

    /// Pauli matrix `σ_axis`; the algebra is checked once when the basis is first built.
    pub fn pauli(axis: usize) -> Result<Self> {
        check_spin_axis(axis)?;
        static BASIS: OnceLock<[SpinMatrix; 3]> = OnceLock::new();
        Ok(BASIS.get_or_init(build_pauli)[axis])
    }

    pub fn entries(&self) -> &Matrix2<Complex64> {
        &self.entries
    }

    pub fn product(&self, rhs: &SpinMatrix) -> SpinMatrix {
        Self::new(self.entries * rhs.entries)
    }

    pub fn plus(&self, rhs: &SpinMatrix) -> SpinMatrix {
        Self::new(self.entries + rhs.entries)
    }

    pub fn minus(&self, rhs: &SpinMatrix) -> SpinMatrix {
        Self::new(self.entries - rhs.entries)
    }

    pub fn scaled(&self, factor: Complex64) -> SpinMatrix {
        Self::new(self.entries * factor)
    }

    pub fn commutator(&self, rhs: &SpinMatrix) -> SpinMatrix {
        self.product(rhs).minus(&rhs.product(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.entries - self.entries.adjoint())
            .iter()
            .all(|z| z.norm() <= tol)
    }

    /// Ascending eigenvalues of a Hermitian matrix.
    pub fn hermitian_eigenvalues(&self) -> Result<[f64; 2]> {
        if !self.is_hermitian(1e-12) {
            return Err(Error::Usage(
                "eigenvalues requested for a non-Hermitian spin matrix".into(),
            ));
        }
        let e = &self.entries;
        let mean = 0.5 * (e[(0, 0)].re + e[(1, 1)].re);
        let half_diff = 0.5 * (e[(0, 0)].re - e[(1, 1)].re);
        let radius = (half_diff * half_diff + e[(0, 1)].norm_sqr()).sqrt();
        Ok([mean - radius, mean + radius])
    }

    pub fn apply(&self, chi: [Complex64; 2]) -> [Complex64; 2] {
        let e = &self.entries;
        [
            e[(0, 0)] * chi[0] + e[(0, 1)] * chi[1],
            e[(1, 0)] * chi[0] + e[(1, 1)] * chi[1],
        ]
    }
}

/// Auxiliary spin `S_i = σ_i / 2`.
pub fn auxiliary_spin(axis: usize) -> Result<SpinMatrix> {
    Ok(SpinMatrix::pauli(axis)?.scaled(c(0.5, 0.0)))
}

/// Two-component field `(ψ_up, ψ_down)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    components: [WaveFunction; 2],
}

impl SpinorField {
    pub fn new(up: WaveFunction, down: WaveFunction) -> Result<Self> {
        up.grid().check_same(down.grid())?;
        Ok(Self {
            components: [up, down],
        })
    }

    /// Product state `ψ ⊗ χ`.
    pub fn product(psi: &WaveFunction, chi: [Complex64; 2]) -> Self {
        Self {
            components: [psi.scaled(chi[0]), psi.scaled(chi[1])],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn component(&self, index: usize) -> &WaveFunction {
        &self.components[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(WaveFunction::norm_sqr).sum()
    }

    pub fn inner_product(&self, other: &SpinorField) -> Result<Complex64> {
        Ok(inner_product(&self.components[0], &other.components[0])?
            + inner_product(&self.components[1], &other.components[1])?)
    }

    pub fn sub(&self, other: &SpinorField) -> Result<SpinorField> {
        Ok(Self {
            components: [
                self.components[0].sub(&other.components[0])?,
                self.components[1].sub(&other.components[1])?,
            ],
        })
    }

    pub fn scaled(&self, factor: Complex64) -> SpinorField {
        Self {
            components: [
                self.components[0].scaled(factor),
                self.components[1].scaled(factor),
            ],
        }
    }

    pub fn multiplied_by(&self, f: impl Fn([f64; 3]) -> f64 + Copy) -> SpinorField {
        Self {
            components: [
                self.components[0].multiplied_by(f),
                self.components[1].multiplied_by(f),
            ],
        }
    }

    /// Largest pointwise modulus over both components.
    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|w| w.amplitudes().iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }
}

/// `positional ⊗ spin` acting on spinor fields.
#[derive(Debug, Clone)]
pub struct CompositeOperator {
    pub positional: Operator,
    pub spin: SpinMatrix,
}

impl CompositeOperator {
    pub fn new(positional: Operator, spin: SpinMatrix) -> Self {
        Self { positional, spin }
    }

    pub fn apply(&self, field: &SpinorField) -> Result<SpinorField> {
        let e = self.spin.entries();
        let mut out = Vec::with_capacity(2);
        for row in 0..2 {
            let mixed = field.components[0]
                .scaled(e[(row, 0)])
                .add_scaled(e[(row, 1)], &field.components[1])?;
            out.push(self.positional.apply(&mixed)?);
        }
        let down = out.pop().expect("two rows");
        let up = out.pop().expect("two rows");
        SpinorField::new(up, down)
    }

    pub fn expectation(&self, field: &SpinorField) -> Result<Complex64> {
        Ok(field.inner_product(&self.apply(field)?)? / field.norm_sqr())
    }
}

/// `[A, B] Ψ` for composite operators.
pub fn composite_commutator_apply(
    a: &CompositeOperator,
    b: &CompositeOperator,
    field: &SpinorField,
) -> Result<SpinorField> {
    a.apply(&b.apply(field)?)?.sub(&b.apply(&a.apply(field)?)?)
}

/// Physical spin `ŝ_i = g(x²) ⊗ σ_i/2`.
pub fn physical_spin(
    model: &DeformationModel,
    grid: &Grid,
    axis: usize,
) -> Result<CompositeOperator> {
    Ok(CompositeOperator::new(
        model.g_op(grid),
        auxiliary_spin(axis)?,
    ))
}

/// Pointwise maximum of `([ŝ_i, ŝ_j] - iε_ijk g ŝ_k) Ψ`.
pub fn spin_algebra_residual(
    model: &DeformationModel,
    field: &SpinorField,
    i: usize,
    j: usize,
) -> Result<f64> {
    let grid = *field.grid();
    let si = physical_spin(model, &grid, i)?;
    let sj = physical_spin(model, &grid, j)?;
    let mut residual = composite_commutator_apply(&si, &sj, field)?;
    for k in 0..3 {
        let eps = levi_civita(i, j, k) as f64;
        if eps == 0.0 {
            continue;
        }
        let sk = physical_spin(model, &grid, k)?.apply(field)?;
        let expected = sk
            .multiplied_by(move |x| model.g(x.iter().map(|v| v * v).sum()))
            .scaled(c(0.0, eps));
        residual = residual.sub(&expected)?;
    }
    Ok(residual.max_abs())
}

/// Physical orbital angular momentum `l_i = ε_ijk ½{x_j, p_k}` (3D grids only).
pub fn angular_momentum_op(model: &DeformationModel, grid: &Grid, axis: usize) -> Result<Operator> {
    if grid.dims() != 3 {
        return Err(Error::Usage(
            "angular momentum requires a three-dimensional grid".into(),
        ));
    }
    grid.check_axis(axis)?;
    let mut parts = Vec::new();
    for j in 0..3 {
        for k in 0..3 {
            let eps = levi_civita(axis, j, k);
            if eps != 0 {
                let x = position_op(grid, j)?;
                let p = physical_momentum_op(model, grid, k)?;
                parts.push((c(eps as f64, 0.0), Operator::symmetrized(&x, &p)?));
            }
        }
    }
    let terms: Vec<(Complex64, &Operator)> = parts.iter().map(|(w, op)| (*w, op)).collect();
    Ok(Operator::linear_combination(&terms)?
        .assume_hermitian()
        .with_label(&format!("l{}", axis + 1)))
}

/// Auxiliary angular momentum `L_i = l_i / g(x²)`.
pub fn auxiliary_angular_momentum_op(
    model: &DeformationModel,
    grid: &Grid,
    axis: usize,
) -> Result<Operator> {
    let l = angular_momentum_op(model, grid, axis)?;
    let m = *model;
    let inv_g = Operator::multiplication(*grid, "1/g(x^2)", move |x| {
        1.0 / m.g(x.iter().map(|v| v * v).sum())
    });
    Ok(inv_g.product(&l)?.with_label(&format!("L{}", axis + 1)))
}

/// `‖([l_i, l_j] - iε_ijk g l_k) ψ‖ / ‖ψ‖`.
pub fn angular_algebra_residual(
    model: &DeformationModel,
    psi: &WaveFunction,
    i: usize,
    j: usize,
) -> Result<f64> {
    let grid = *psi.grid();
    let li = angular_momentum_op(model, &grid, i)?;
    let lj = angular_momentum_op(model, &grid, j)?;
    let mut residual = crate::operator::commutator_apply(&li, &lj, psi)?;
    for k in 0..3 {
        let eps = levi_civita(i, j, k) as f64;
        if eps == 0.0 {
            continue;
        }
        let lk = angular_momentum_op(model, &grid, k)?.apply(psi)?;
        let m = *model;
        let expected = lk
            .multiplied_by(move |x| m.g(x.iter().map(|v| v * v).sum()))
            .scaled(c(0.0, eps));
        residual = residual.sub(&expected)?;
    }
    Ok(residual.norm() / psi.norm())
}

/// `‖([L_i, L_j] - iε_ijk L_k) ψ‖ / ‖ψ‖` for the auxiliary angular momentum.
pub fn auxiliary_angular_algebra_residual(
    model: &DeformationModel,
    psi: &WaveFunction,
    i: usize,
    j: usize,
) -> Result<f64> {
    let grid = *psi.grid();
    let li = auxiliary_angular_momentum_op(model, &grid, i)?;
    let lj = auxiliary_angular_momentum_op(model, &grid, j)?;
    let mut residual = crate::operator::commutator_apply(&li, &lj, psi)?;
    for k in 0..3 {
        let eps = levi_civita(i, j, k) as f64;
        if eps != 0.0 {
            let lk = auxiliary_angular_momentum_op(model, &grid, k)?.apply(psi)?;
            residual = residual.sub(&lk.scaled(c(0.0, eps)))?;
        }
    }
    Ok(residual.norm() / psi.norm())
}

/// Vector potential gauge for the magnetic-coupling expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `A = ½ B × x`.
    Symmetric,
    /// `A = (-B_3 x_2, 0, 0)`; not supported by the extraction.
    Landau,
}

/// One term of a polynomial after the field symbols are replaced by numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericTerm {
    pub monomial: String,
    pub alpha_order: u8,
    pub re: f64,
    pub im: f64,
}

/// Substitutes `B_a -> field[a]` in a polynomial.
pub fn evaluate_at_field(poly: &OperatorPolynomial, field: [f64; 3]) -> Vec<NumericTerm> {
    let mut merged: BTreeMap<OrderedMonomial, Complex64> = BTreeMap::new();
    for (m, coeff) in poly.terms() {
        let weight: f64 = (0..3)
            .map(|a| field[a].powi(m.field_powers[a] as i32))
            .product();
        let (re, im) = coeff.to_f64();
        let key = OrderedMonomial {
            field_powers: [0; 3],
            ..*m
        };
        *merged.entry(key).or_default() += c(re, im) * weight;
    }
    merged
        .into_iter()
        .filter(|(_, z)| *z != c(0.0, 0.0))
        .map(|(m, z)| NumericTerm {
            monomial: m.to_string(),
            alpha_order: m.alpha_order,
            re: z.re,
            im: z.im,
        })
        .collect()
}

/// Linear-in-B, first-order-in-α coupling terms of `½[σ·(p - A)]²` (e = m = 1).
///
/// The Hamiltonian's B-linear part is written as `-½(spin + orbital)`, where the spin
/// coefficient carries the Pauli matrices and the orbital one does not.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub field: [f64; 3],
    pub gauge: Gauge,
    pub spin_coefficient: OperatorPolynomial,
    pub orbital_coefficient: OperatorPolynomial,
    /// `g(x²) σ·B`.
    pub spin_expected: OperatorPolynomial,
    /// `l·B`.
    pub orbital_expected: OperatorPolynomial,
    pub spin_residual: OperatorPolynomial,
    pub orbital_residual: OperatorPolynomial,
    pub spin_at_field: Vec<NumericTerm>,
    pub orbital_at_field: Vec<NumericTerm>,
}

impl CouplingReport {
    /// The spin coefficient equals `g σ·B` exactly.
    pub fn spin_matches(&self) -> bool {
        self.spin_residual.is_zero()
    }

    /// The orbital coefficient equals `l·B` exactly.
    pub fn orbital_matches(&self) -> bool {
        self.orbital_residual.is_zero()
    }
}

/// `Σ_a B_a X_a` with `B_a` symbolic.
fn dot_field(items: impl Fn(usize) -> OperatorPolynomial, t: Truncation) -> OperatorPolynomial {
    let terms: Vec<OperatorPolynomial> = (0..3)
        .map(|a| OperatorPolynomial::field(a).mul_truncated(&items(a), t))
        .collect();
    OperatorPolynomial::sum(&terms)
}

/// Symbolic vector potential `A_j = ½ ε_jab B_a x_b`.
pub fn symmetric_gauge_potential(axis: usize) -> OperatorPolynomial {
    let t = Truncation::new(0, 1);
    let mut out = OperatorPolynomial::zero();
    for a in 0..3 {
        for b in 0..3 {
            let eps = levi_civita(axis, a, b);
            if eps != 0 {
                let term = OperatorPolynomial::field(a)
                    .mul_truncated(&OperatorPolynomial::x(b), t)
                    .scale(Coefficient::ratio(eps, 2));
                out = &out + &term;
            }
        }
    }
    out
}

/// Expands `½[σ·(p - A)]²` to O(α) and O(B) and splits the B-linear part.
pub fn magnetic_coupling_coefficient(
    model: &DeformationModel,
    field: [f64; 3],
    gauge: Gauge,
) -> Result<CouplingReport> {
    if gauge != Gauge::Symmetric {
        return Err(Error::Unsupported(format!(
            "magnetic coupling is extracted in the symmetric gauge only, got {gauge:?}"
        )));
    }
    if field.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain(
            "magnetic field components must be finite".into(),
        ));
    }
    let order = if model.alpha() == 0.0 { 0 } else { 1 };
    let t = Truncation::new(order, 1);
    let sigma_pi: Vec<OperatorPolynomial> = (0..3)
        .map(|j| {
            let pi = &physical_momentum_poly(j, order) - &symmetric_gauge_potential(j);
            OperatorPolynomial::pauli(Pauli::from_axis(j)).mul_truncated(&pi, t)
        })
        .collect();
    let sigma_dot_pi = OperatorPolynomial::sum(&sigma_pi);
    let hamiltonian = sigma_dot_pi
        .mul_truncated(&sigma_dot_pi, t)
        .scale(Coefficient::ratio(1, 2));
    let linear = hamiltonian.field_part(1).scale(Coefficient::real(-2));
    let spin_coefficient = linear.filter(|m| m.pauli != Pauli::I);
    let orbital_coefficient = linear.filter(|m| m.pauli == Pauli::I);

    let g = g_poly().truncated(t);
    let spin_expected = dot_field(
        |a| g.mul_truncated(&OperatorPolynomial::pauli(Pauli::from_axis(a)), t),
        t,
    );
    let orbital_expected = dot_field(|a| angular_momentum_poly(a, order), t);
    let spin_residual = &spin_coefficient - &spin_expected;
    let orbital_residual = &orbital_coefficient - &orbital_expected;
    Ok(CouplingReport {
        field,
        gauge,
        spin_at_field: evaluate_at_field(&spin_coefficient, field),
        orbital_at_field: evaluate_at_field(&orbital_coefficient, field),
        spin_coefficient,
        orbital_coefficient,
        spin_expected,
        orbital_expected,
        spin_residual,
        orbital_residual,
    })
}

/// `α (x² σ·B - (σ·x)(x·B))`, the O(α) spin term beyond `g σ·B` in the symmetric gauge.
pub fn transverse_spin_term() -> OperatorPolynomial {
    let t = Truncation::new(1, 1);
    let x_sq_sigma_b = dot_field(
        |a| x_squared_poly().mul_truncated(&OperatorPolynomial::pauli(Pauli::from_axis(a)), t),
        t,
    );
    let sigma_x = OperatorPolynomial::sum(
        &(0..3)
            .map(|a| {
                OperatorPolynomial::pauli(Pauli::from_axis(a))
                    .mul_truncated(&OperatorPolynomial::x(a), t)
            })
            .collect::<Vec<_>>(),
    );
    let x_b = dot_field(OperatorPolynomial::x, t);
    let bracket = &x_sq_sigma_b - &sigma_x.mul_truncated(&x_b, t);
    OperatorPolynomial::alpha().mul_truncated(&bracket, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::model_from_alpha;
    use crate::grid::{gaussian_packet, make_grid};

    fn up() -> [Complex64; 2] {
        [c(1.0, 0.0), c(0.0, 0.0)]
    }

    #[test]
    fn auxiliary_spin_is_su2() {
        let s: Vec<SpinMatrix> = (0..3).map(|i| auxiliary_spin(i).unwrap()).collect();
        assert_eq!(s[0].commutator(&s[1]), s[2].scaled(c(0.0, 1.0)));
        for si in &s {
            assert_eq!(si.product(si), SpinMatrix::identity().scaled(c(0.25, 0.0)));
            assert_eq!(si.hermitian_eigenvalues().unwrap(), [-0.5, 0.5]);
        }
        assert_eq!(s[2].hermitian_eigenvalues().unwrap(), [-0.5, 0.5]);
        assert!(matches!(auxiliary_spin(3), Err(Error::Usage(_))));
    }

    #[test]
    fn pauli_basis_passes_algebra_check() {
        let basis = [0, 1, 2].map(|i| SpinMatrix::pauli(i).unwrap());
        assert_eq!(pauli_algebra_defect(&basis), 0.0);
        let mut broken = basis;
        broken[1] = broken[1].scaled(c(-1.0, 0.0));
        assert!(pauli_algebra_defect(&broken) > 1.0);
    }

    #[test]
    fn physical_spin_reduces_to_auxiliary_at_zero_alpha() {
        let grid = make_grid(1, 64, 16.0).unwrap();
        let psi = gaussian_packet(&grid, &[0.5], 0.9).unwrap();
        let field = SpinorField::product(&psi, [c(0.6, 0.0), c(0.0, 0.8)]);
        for i in 0..3 {
            let s = physical_spin(&DeformationModel::heisenberg(), &grid, i).unwrap();
            let chi = auxiliary_spin(i).unwrap().apply([c(0.6, 0.0), c(0.0, 0.8)]);
            let expected = SpinorField::product(&psi, chi);
            assert!(s.apply(&field).unwrap().sub(&expected).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn deformed_su2_holds_pointwise() {
        let model = model_from_alpha(-2e-3, 1.0).unwrap();
        let grid = make_grid(3, 16, 12.0).unwrap();
        let psi = gaussian_packet(&grid, &[0.5, -0.3, 0.2], 0.6).unwrap();
        let field = SpinorField::product(&psi, [c(0.6, 0.1), c(-0.2, 0.77)]);
        for i in 0..3 {
            for j in 0..3 {
                assert!(spin_algebra_residual(&model, &field, i, j).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn physical_spin_over_g_is_auxiliary() {
        let model = model_from_alpha(5e-3, 1.0).unwrap();
        let grid = make_grid(1, 64, 8.0).unwrap();
        let psi = gaussian_packet(&grid, &[0.3], 0.4).unwrap();
        let field = SpinorField::product(&psi, [c(0.0, 1.0), c(1.0, 0.0)]);
        for i in 0..3 {
            let reduced = physical_spin(&model, &grid, i)
                .unwrap()
                .apply(&field)
                .unwrap()
                .multiplied_by(|x| 1.0 / model.g(x[0] * x[0]));
            let aux = CompositeOperator::new(Operator::identity(grid), auxiliary_spin(i).unwrap());
            assert!(reduced.sub(&aux.apply(&field).unwrap()).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn spin_expectation_factorizes() {
        let model = model_from_alpha(-1e-3, 1.0).unwrap();
        let grid = make_grid(3, 32, 12.0).unwrap();
        let psi = gaussian_packet(&grid, &[1.0, 0.0, 0.0], 0.6).unwrap();
        let field = SpinorField::product(&psi, up());
        let s3 = physical_spin(&model, &grid, 2)
            .unwrap()
            .expectation(&field)
            .unwrap();
        let weight = psi.norm_sqr();
        let mean_g: f64 = psi
            .amplitudes()
            .iter()
            .zip(grid.positions())
            .map(|(a, x)| a.norm_sqr() * model.g(x.iter().map(|v| v * v).sum()))
            .sum::<f64>()
            * grid.volume_element()
            / weight;
        assert!((s3.re - 0.5 * mean_g).abs() < 1e-14);
        assert!(s3.im.abs() < 1e-15);
        // <x²> = |d|² + 3σ²
        assert!((mean_g - (1.0 - 1e-3 * (1.0 + 3.0 * 0.36))).abs() < 1e-10);
    }

    #[test]
    fn angular_momentum_needs_three_dimensions() {
        let grid = make_grid(1, 16, 4.0).unwrap();
        let err = angular_momentum_op(&DeformationModel::heisenberg(), &grid, 0).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn orbital_so3_in_heisenberg_limit() {
        let grid = make_grid(3, 32, 18.0).unwrap();
        let psi = gaussian_packet(&grid, &[1.0, 0.5, -0.5], 0.8).unwrap();
        let model = DeformationModel::heisenberg();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let r = angular_algebra_residual(&model, &psi, i, j).unwrap();
            assert!(r <= 1e-6, "SO(3) residual {r:e}");
        }
    }

    #[test]
    fn deformed_so3_and_auxiliary_reduction() {
        let grid = make_grid(3, 32, 18.0).unwrap();
        let psi = gaussian_packet(&grid, &[1.0, 0.5, -0.5], 0.8).unwrap();
        let model = model_from_alpha(1e-3, 1.0).unwrap();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let r = angular_algebra_residual(&model, &psi, i, j).unwrap();
            assert!(r <= 1e-5, "deformed SO(3) residual {r:e}");
            let r = auxiliary_angular_algebra_residual(&model, &psi, i, j).unwrap();
            assert!(r <= 1e-5, "auxiliary SO(3) residual {r:e}");
        }
    }

    #[test]
    fn angular_momentum_is_standard_at_zero_alpha() {
        let grid = make_grid(3, 32, 18.0).unwrap();
        let psi = gaussian_packet(&grid, &[1.0, 0.5, -0.5], 0.8).unwrap();
        let l3 = angular_momentum_op(&DeformationModel::heisenberg(), &grid, 2).unwrap();
        let x1 = position_op(&grid, 0).unwrap();
        let x2 = position_op(&grid, 1).unwrap();
        let p1 = crate::operator::auxiliary_momentum_op(&grid, 0).unwrap();
        let p2 = crate::operator::auxiliary_momentum_op(&grid, 1).unwrap();
        let standard = x1
            .product(&p2)
            .unwrap()
            .minus(&x2.product(&p1).unwrap())
            .unwrap();
        let diff = l3
            .apply(&psi)
            .unwrap()
            .sub(&standard.apply(&psi).unwrap())
            .unwrap();
        assert!(diff.norm() < 1e-9);
    }

    #[test]
    fn pauli_coupling_without_deformation() {
        let report = magnetic_coupling_coefficient(
            &DeformationModel::heisenberg(),
            [0.1, -0.2, 0.3],
            Gauge::Symmetric,
        )
        .unwrap();
        assert!(report.spin_matches());
        assert!(report.orbital_matches());
        // σ·B with unit coefficients
        assert_eq!(report.spin_coefficient.len(), 3);
        for (m, coeff) in report.spin_coefficient.terms() {
            assert_eq!(*coeff, Coefficient::one());
            assert_eq!(m.x_powers, [0; 3]);
        }
    }

    #[test]
    fn first_order_spin_coupling_has_transverse_term() {
        let model = model_from_alpha(1e-3, 1.0).unwrap();
        let report =
            magnetic_coupling_coefficient(&model, [0.0, 0.0, 0.5], Gauge::Symmetric).unwrap();
        // independent hand expansion: spin = g σ·B + α x×(B×x)·σ
        assert_eq!(report.spin_residual, transverse_spin_term());
        assert!(!report.spin_matches());
        assert!(report.orbital_matches());
    }

    #[test]
    fn coupling_is_odd_in_field() {
        let model = model_from_alpha(1e-3, 1.0).unwrap();
        let b = [0.2, -0.1, 0.4];
        let plus = magnetic_coupling_coefficient(&model, b, Gauge::Symmetric).unwrap();
        let minus = magnetic_coupling_coefficient(&model, b.map(|v| -v), Gauge::Symmetric).unwrap();
        assert_eq!(plus.spin_at_field.len(), minus.spin_at_field.len());
        for (p, m) in plus
            .spin_at_field
            .iter()
            .zip(&minus.spin_at_field)
            .chain(plus.orbital_at_field.iter().zip(&minus.orbital_at_field))
        {
            assert_eq!(p.monomial, m.monomial);
            assert_eq!((p.re, p.im), (-m.re, -m.im));
        }
    }

    #[test]
    fn non_symmetric_gauge_is_rejected() {
        let err = magnetic_coupling_coefficient(
            &DeformationModel::heisenberg(),
            [0.0, 0.0, 1.0],
            Gauge::Landau,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn coupling_report_serializes_with_grading() {
        let model = model_from_alpha(1e-3, 1.0).unwrap();
        let report =
            magnetic_coupling_coefficient(&model, [0.0, 0.0, 1.0], Gauge::Symmetric).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        let terms = json["spin_coefficient"].as_array().unwrap();
        assert!(terms
            .iter()
            .any(|t| t["alpha_order"] == 1 && t["field_order"] == 1));
        assert_eq!(json["gauge"], "symmetric");
    }
}
