//! Periodized velocity box, nodal fields and their Fourier spectra.
//!
//! The physical box `[-V, V]^d` is sampled on `2N + 1` uniformly spaced nodes
//! per axis and mapped onto `[-pi, pi]^d` by the scale factor `pi / V`. A
//! spectrum holds the coefficients `f_k` for `k` in `{-N, ..., N}^d`, so the
//! nodal-to-modal map is a square DFT and inverts exactly.
//!
//! Arrays are row-major over the axes. Node `j` on an axis sits at
//! `v = -V + j * 2V / (2N + 1)`; mode `k` on an axis is stored at `k + N`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Integer mode (or node) multi-index in two dimensions.
pub type Mode = [i32; 2];

/// Default relative-velocity cutoff parameter, `2 / (3 + sqrt 2)`.
pub fn default_lambda() -> f64 {
    2.0 / (3.0 + 2f64.sqrt())
}

/// Synthesis residue above which a spectrum is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub half_modes: usize,
    pub extent: f64,
    pub lambda: f64,
}

impl GridSpec {
    pub fn new(half_modes: usize, extent: f64, lambda: f64) -> Result<Self> {
        if half_modes == 0 {
            return Err(Error::InvalidParam("half_modes N must be >= 1".into()));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidParam(format!(
                "extent V must be finite and > 0, got {extent}"
            )));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidParam(format!("lambda must lie in (0, 1], got {lambda}")));
        }
        Ok(Self {
            dim: 2,
            half_modes,
            extent,
            lambda,
        })
    }

    /// Grid with the default cutoff parameter.
    pub fn with_default_lambda(half_modes: usize, extent: f64) -> Result<Self> {
        Self::new(half_modes, extent, default_lambda())
    }

    /// Nodes (and modes) per axis, `2N + 1`.
    #[inline]
    pub fn nodes_per_dim(&self) -> usize {
        2 * self.half_modes + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes_per_dim().pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `pi / V`, maps physical velocities onto `[-pi, pi]`.
    #[inline]
    pub fn scale(&self) -> f64 {
        PI / self.extent
    }

    /// Relative-velocity cutoff radius `2 lambda pi` in normalized units.
    #[inline]
    pub fn cutoff_radius(&self) -> f64 {
        2.0 * self.lambda * PI
    }

    /// Physical node spacing `2V / (2N + 1)`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.nodes_per_dim() as f64
    }

    /// Physical cell volume used by every nodal quadrature.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `(V / pi)^d`, the Jacobian turning the normalized collision integral
    /// into physical time units.
    #[inline]
    pub fn time_factor(&self) -> f64 {
        (self.extent / PI).powi(self.dim as i32)
    }

    /// Physical coordinate of node `j` along one axis.
    #[inline]
    pub fn node_coord(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.spacing()
    }

    /// Physical velocity at flat node index `idx`.
    #[inline]
    pub fn node_velocity(&self, idx: usize) -> [f64; 2] {
        let n = self.nodes_per_dim();
        [self.node_coord(idx / n), self.node_coord(idx % n)]
    }

    /// Flat storage index of mode `k`, or `None` outside `{-N, ..., N}^2`.
    #[inline]
    pub fn mode_index(&self, k: Mode) -> Option<usize> {
        let n = self.half_modes as i32;
        if k[0].abs() > n || k[1].abs() > n {
            return None;
        }
        let w = self.nodes_per_dim();
        Some((k[0] + n) as usize * w + (k[1] + n) as usize)
    }

    /// Mode at flat storage index `idx`.
    #[inline]
    pub fn mode_at(&self, idx: usize) -> Mode {
        let w = self.nodes_per_dim();
        let n = self.half_modes as i32;
        [(idx / w) as i32 - n, (idx % w) as i32 - n]
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(move |i| self.mode_at(i))
    }

    pub(crate) fn check_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::Structure(format!(
                "{what}: grid {self:?} does not match {other:?}"
            )));
        }
        Ok(())
    }
}

/// Real nodal values of a distribution on the physical velocity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl DistributionField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Structure(format!(
                "field has {} values, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Structure(format!("non-finite nodal value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(v)` at every node, with `v` in physical units.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node_velocity(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }
}

/// Fourier coefficients over `{-N, ..., N}^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Structure(format!(
                "spectrum has {} coefficients, grid expects {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `k`; zero outside the mode box.
    pub fn get(&self, k: Mode) -> Complex64 {
        self.grid
            .mode_index(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set(&mut self, k: Mode, value: Complex64) -> Result<()> {
        let i = self
            .grid
            .mode_index(k)
            .ok_or_else(|| Error::Structure(format!("mode {k:?} outside the grid")))?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// The zero mode, proportional to the mass.
    pub fn mass_mode(&self) -> Complex64 {
        self.coeffs[self.grid.len() / 2]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Coefficient l2 norm, `sqrt(sum |c_k|^2)`.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `L^2([-pi, pi]^d)` norm of the trigonometric polynomial.
    pub fn l2_norm(&self) -> f64 {
        (2.0 * PI).powf(self.grid.dim as f64 / 2.0) * self.coeff_norm()
    }

    /// Largest `|c(-k) - conj(c(k))|` over all modes.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.mode_at(i);
            let mirror = self.get([-k[0], -k[1]]);
            worst = worst.max((mirror - c.conj()).norm());
        }
        worst
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a * other`, grids assumed equal.
    pub(crate) fn axpy(&self, a: f64, other: &Spectrum) -> Spectrum {
        debug_assert_eq!(self.grid, other.grid);
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for &Spectrum {
    type Output = Spectrum;
    fn add(self, rhs: &Spectrum) -> Spectrum {
        assert_eq!(self.grid, rhs.grid, "adding spectra on different grids");
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Spectrum {
    type Output = Spectrum;
    fn sub(self, rhs: &Spectrum) -> Spectrum {
        assert_eq!(self.grid, rhs.grid, "subtracting spectra on different grids");
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &Spectrum {
    type Output = Spectrum;
    fn mul(self, rhs: f64) -> Spectrum {
        self.scaled(rhs)
    }
}

/// `(-1)^k`, the phase picked up by shifting nodes from `[0, 2pi)` to `[-pi, pi)`.
#[inline]
fn parity(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// In-place 2D FFT over a row-major `n x n` buffer.
fn fft2(buf: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // rows
    fft.process(buf);
    // columns
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

/// Discrete Fourier coefficients `f_k = (2pi)^-d * int f e^{-ik.v} dv`,
/// with the integral taken by the rectangle rule on the nodes.
pub fn to_spectrum(field: &DistributionField) -> Spectrum {
    let grid = *field.grid();
    let n = grid.nodes_per_dim();
    let nh = grid.half_modes as i32;
    let mut buf: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, n, false);

    let norm = 1.0 / grid.len() as f64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let k = grid.mode_at(i);
        let p0 = k[0].rem_euclid(n as i32) as usize;
        let p1 = k[1].rem_euclid(n as i32) as usize;
        *c = buf[p0 * n + p1] * (parity(k[0] + k[1]) * norm);
    }
    debug_assert!(nh >= 1);
    Spectrum { grid, coeffs }
}

/// Evaluates `sum_k f_k e^{ik.v}` at the nodes.
///
/// The synthesis is complex; an imaginary part above [`HERMITIAN_TOL`]
/// relative to the largest value is reported instead of dropped.
pub fn to_field(spectrum: &Spectrum) -> Result<DistributionField> {
    let grid = *spectrum.grid();
    let n = grid.nodes_per_dim();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (i, c) in spectrum.coeffs().iter().enumerate() {
        let k = grid.mode_at(i);
        let p0 = k[0].rem_euclid(n as i32) as usize;
        let p1 = k[1].rem_euclid(n as i32) as usize;
        buf[p0 * n + p1] = c * parity(k[0] + k[1]);
    }
    fft2(&mut buf, n, true);

    let scale = buf.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let worst_im = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if scale > 0.0 && worst_im > HERMITIAN_TOL * scale {
        return Err(Error::NonHermitian {
            residue: worst_im / scale,
        });
    }
    let values: Vec<f64> = buf.into_iter().map(|c| c.re).collect();
    DistributionField::new(grid, values)
}
