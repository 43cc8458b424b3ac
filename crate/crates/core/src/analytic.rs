//! Reference distributions and nodal diagnostics.
//!
//! All integrals are rectangle-rule sums over the nodes in physical units,
//! weighted by [`GridSpec::cell_volume`].

// Negated comparisons below also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{DistributionField, GridSpec};

/// Maxwellian `rho / (2 pi T)^{d/2} exp(-|u - v|^2 / 2T)` in two dimensions.
pub fn maxwellian_value(rho: f64, u: [f64; 2], temperature: f64, v: [f64; 2]) -> Result<f64> {
    if !(rho > 0.0) || !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "Maxwellian needs rho > 0 and T > 0, got rho = {rho}, T = {temperature}"
        )));
    }
    let dx = v[0] - u[0];
    let dy = v[1] - u[1];
    Ok(rho / (2.0 * PI * temperature) * (-(dx * dx + dy * dy) / (2.0 * temperature)).exp())
}

/// `S(t) = 1 - exp(-t/8) / 2`.
pub fn bkw_s(t: f64) -> f64 {
    1.0 - 0.5 * (-t / 8.0).exp()
}

/// Bobylev-Krook-Wu solution for 2D Maxwell molecules with `B = 1/(2 pi)`:
/// unit mass, zero bulk velocity, unit temperature.
pub fn bkw_value(t: f64, v: [f64; 2]) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("BKW time must be >= 0, got {t}")));
    }
    let s = bkw_s(t);
    let v2 = v[0] * v[0] + v[1] * v[1];
    Ok((-v2 / (2.0 * s)).exp() / (2.0 * PI * s * s) * (2.0 * s - 1.0 + (1.0 - s) / (2.0 * s) * v2))
}

pub fn maxwellian_field(grid: &GridSpec, m: &Moments) -> Result<DistributionField> {
    maxwellian_value(m.rho, m.u, m.temperature, [0.0, 0.0])?;
    Ok(DistributionField::from_fn(*grid, |v| {
        maxwellian_value(m.rho, m.u, m.temperature, v).unwrap()
    }))
}

pub fn bkw_field(grid: &GridSpec, t: f64) -> Result<DistributionField> {
    bkw_value(t, [0.0, 0.0])?;
    Ok(DistributionField::from_fn(*grid, |v| bkw_value(t, v).unwrap()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub rho: f64,
    pub u: [f64; 2],
    /// Not clamped; a non-positive value signals a corrupted field.
    pub temperature: f64,
}

impl Moments {
    pub fn new(rho: f64, u: [f64; 2], temperature: f64) -> Self {
        Self { rho, u, temperature }
    }
}

/// Density, mean velocity and temperature of a nodal field.
pub fn moments(field: &DistributionField) -> Result<Moments> {
    let grid = field.grid();
    let dv = grid.cell_volume();
    let mut mass = 0.0;
    let mut p = [0.0; 2];
    for (i, &f) in field.values().iter().enumerate() {
        let v = grid.node_velocity(i);
        mass += f;
        p[0] += v[0] * f;
        p[1] += v[1] * f;
    }
    let rho = mass * dv;
    if !(rho > 0.0) {
        return Err(Error::DegenerateMoments { rho });
    }
    let u = [p[0] * dv / rho, p[1] * dv / rho];
    let mut e = 0.0;
    for (i, &f) in field.values().iter().enumerate() {
        let v = grid.node_velocity(i);
        let dx = v[0] - u[0];
        let dy = v[1] - u[1];
        e += (dx * dx + dy * dy) * f;
    }
    let temperature = e * dv / (grid.dim as f64 * rho);
    Ok(Moments { rho, u, temperature })
}

/// `int f log(f / m)` over the cells where `f > 0`.
///
/// Cells with `f <= 0` contribute nothing; [`negative_mass`] reports them.
pub fn relative_entropy(f: &DistributionField, m: &DistributionField) -> Result<f64> {
    f.grid().check_same(m.grid(), "relative entropy")?;
    if let Some(i) = m.values().iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!(
            "reference density must be positive, node {i} holds {}",
            m.values()[i]
        )));
    }
    let sum: f64 = f
        .values()
        .iter()
        .zip(m.values())
        .filter(|(&fv, _)| fv > 0.0)
        .map(|(&fv, &mv)| fv * (fv / mv).ln())
        .sum();
    Ok(sum * f.grid().cell_volume())
}

/// Physical `L^2` norm of `f - reference`.
pub fn l2_error(f: &DistributionField, reference: &DistributionField) -> Result<f64> {
    f.grid().check_same(reference.grid(), "l2 error")?;
    let sum: f64 = f
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum * f.grid().cell_volume()).sqrt())
}

/// Mass carried by negative cells and their count.
pub fn negative_mass(field: &DistributionField) -> (f64, usize) {
    let (sum, count) = field
        .values()
        .iter()
        .filter(|&&f| f < 0.0)
        .fold((0.0, 0usize), |(s, c), &f| (s - f, c + 1));
    (sum * field.grid().cell_volume(), count)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub moments: Moments,
    pub rel_entropy: f64,
    pub l2_error_bkw: Option<f64>,
    pub neg_mass: f64,
    pub neg_cells: usize,
}

/// Diagnostics of `field` at `time` against the equilibrium `reference`.
/// `bkw` adds the distance to the exact solution at the same time.
pub fn diagnose(
    time: f64,
    field: &DistributionField,
    reference: &DistributionField,
    bkw: bool,
) -> Result<DiagnosticsRecord> {
    let moments = moments(field)?;
    let rel_entropy = relative_entropy(field, reference)?;
    let l2_error_bkw = if bkw {
        Some(l2_error(field, &bkw_field(field.grid(), time)?)?)
    } else {
        None
    };
    let (neg_mass, neg_cells) = negative_mass(field);
    Ok(DiagnosticsRecord {
        time,
        moments,
        rel_entropy,
        l2_error_bkw,
        neg_mass,
        neg_cells,
    })
}
