//! Periodic position-space grids and wavefunctions sampled on them.
//!
//! Layout is row-major with axis 0 slowest. Coordinates along every axis run
//! over `[-extent/2, extent/2)` with spacing `extent / points_per_axis`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Packet tails are required to sit this many widths inside the box.
pub const TRUNCATION_WIDTHS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dims: usize,
    points_per_axis: usize,
    extent: f64,
}

/// Builds a periodic grid with `points_per_axis` nodes per axis over a box of side `extent`.
pub fn make_grid(dims: usize, points_per_axis: usize, extent: f64) -> Result<Grid> {
    Grid::new(dims, points_per_axis, extent)
}

impl Grid {
    pub fn new(dims: usize, points_per_axis: usize, extent: f64) -> Result<Self> {
        if dims != 1 && dims != 3 {
            return Err(Error::Config(format!(
                "grid dims must be 1 or 3, got {dims}"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "points_per_axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Config(format!(
                "extent must be positive, got {extent}"
            )));
        }
        Ok(Self {
            dims,
            points_per_axis,
            extent,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points_per_axis as f64
    }

    pub fn volume_element(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }

    /// Total number of nodes, `points_per_axis^dims`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance between consecutive nodes along `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dims - 1 - axis) as u32)
    }

    /// Coordinate of node `index` along a single axis.
    pub fn coordinate(&self, index: usize) -> f64 {
        -0.5 * self.extent + index as f64 * self.spacing()
    }

    pub fn axis_coordinates(&self) -> Vec<f64> {
        (0..self.points_per_axis)
            .map(|i| self.coordinate(i))
            .collect()
    }

    /// Position of a flat node index. Components beyond `dims` are zero.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let n = self.points_per_axis;
        let mut pos = [0.0; 3];
        let mut rest = flat;
        for axis in (0..self.dims).rev() {
            pos[axis] = self.coordinate(rest % n);
            rest /= n;
        }
        pos
    }

    pub fn positions(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |i| self.position(i))
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dims {
            Err(Error::Usage(format!(
                "axis {axis} out of range for a {}-dimensional grid",
                self.dims
            )))
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "grid mismatch: {self:?} vs {other:?}"
            )))
        }
    }
}

/// Complex amplitudes on a grid.
///
/// Factories (`gaussian_packet`, `uniform`, `normalized`) return unit-norm
/// states; results of operator application are general fields and carry
/// whatever norm the operator produced.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps raw amplitudes without normalizing.
    pub fn from_amplitudes(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Usage(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                amplitudes.len()
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    /// Samples `f` at every node without normalizing.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let amplitudes = grid.positions().map(f).collect();
        Self { grid, amplitudes }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// The normalized constant state.
    pub fn uniform(grid: Grid) -> Self {
        let amp = 1.0 / (grid.len() as f64 * grid.volume_element()).sqrt();
        Self {
            grid,
            amplitudes: vec![Complex64::new(amp, 0.0); grid.len()],
        }
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain("cannot normalize a zero field".into()));
        }
        let inv = 1.0 / norm;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.volume_element()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: Complex64, other: &WaveFunction) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self {
            grid: self.grid,
            amplitudes,
        })
    }

    pub fn sub(&self, other: &WaveFunction) -> Result<Self> {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &WaveFunction) -> Result<Self> {
        self.add_scaled(Complex64::new(1.0, 0.0), other)
    }

    /// Pointwise multiplication by a real function of position.
    pub fn multiplied_by(&self, f: impl Fn([f64; 3]) -> f64) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * f(self.grid.position(i)))
            .collect();
        Self {
            grid: self.grid,
            amplitudes,
        }
    }

    /// Largest absolute amplitude on the outermost nodes of the box.
    pub fn boundary_max(&self) -> f64 {
        let n = self.grid.points_per_axis;
        let mut max = 0.0_f64;
        for (flat, a) in self.amplitudes.iter().enumerate() {
            let mut rest = flat;
            let mut on_edge = false;
            for _ in 0..self.grid.dims {
                let i = rest % n;
                rest /= n;
                on_edge |= i == 0 || i == n - 1;
            }
            if on_edge {
                max = max.max(a.norm());
            }
        }
        max
    }
}

fn check_truncation_guard(grid: &Grid, center: &[f64], width: f64) -> Result<()> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::Domain(format!(
            "packet width must be positive, got {width}"
        )));
    }
    if center.len() != grid.dims() {
        return Err(Error::Usage(format!(
            "center has {} components for a {}-dimensional grid",
            center.len(),
            grid.dims()
        )));
    }
    let half = 0.5 * grid.extent();
    for (axis, c) in center.iter().enumerate() {
        if c.abs() + TRUNCATION_WIDTHS * width > half {
            return Err(Error::Domain(format!(
                "packet on axis {axis} violates the truncation guard: |{c}| + {TRUNCATION_WIDTHS}*{width} > {half}"
            )));
        }
    }
    Ok(())
}

/// Normalized Gaussian `exp(-|x-center|^2 / (4 width^2))`; the per-axis
/// position standard deviation equals `width`.
pub fn gaussian_packet(grid: &Grid, center: &[f64], width: f64) -> Result<WaveFunction> {
    let zero = vec![0.0; grid.dims()];
    gaussian_packet_with_momentum(grid, center, width, &zero)
}

/// Gaussian packet multiplied by the plane wave `exp(i momentum . x)`.
pub fn gaussian_packet_with_momentum(
    grid: &Grid,
    center: &[f64],
    width: f64,
    momentum: &[f64],
) -> Result<WaveFunction> {
    check_truncation_guard(grid, center, width)?;
    if momentum.len() != grid.dims() {
        return Err(Error::Usage(
            "momentum dimension does not match grid".into(),
        ));
    }
    let inv = 1.0 / (4.0 * width * width);
    WaveFunction::from_fn(*grid, |x| {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for axis in 0..grid.dims() {
            let d = x[axis] - center[axis];
            r2 += d * d;
            phase += momentum[axis] * x[axis];
        }
        Complex64::from_polar((-r2 * inv).exp(), phase)
    })
    .normalized()
}

/// Riemann-sum inner product `<psi|phi>`, conjugate-linear in `psi`.
pub fn inner_product(psi: &WaveFunction, phi: &WaveFunction) -> Result<Complex64> {
    psi.grid.check_same(&phi.grid)?;
    let sum: Complex64 = psi
        .amplitudes
        .iter()
        .zip(&phi.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(sum * psi.grid.volume_element())
}
