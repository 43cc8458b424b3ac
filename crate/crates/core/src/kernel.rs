//! Boltzmann kernel modes and their precomputed table.
//!
//! For a relative velocity `q` and a unit vector `omega` the post-collisional
//! parametrization is `q+ = (q + |q| omega) / 2`, `q- = (q - |q| omega) / 2`,
//! and the kernel mode of the mode pair `(l, m)` is
//!
//! ```text
//! B(l, m) = int_{|q| < R} int_{S^1} B(cos theta, |q|) exp(-i (l.q+ + m.q-)) domega dq
//! ```
//!
//! with `R = 2 lambda pi`. Since `l.q+ + m.q- = ((l + m).q + |q| (l - m).omega) / 2`
//! and the kernel only sees `q.omega` and `|q|`, the mode depends on `(l, m)`
//! through `(|l + m|, |l - m|)` alone. The table stores one entry per reduced
//! key `(|l + m|^2, |l - m|^2)`.
//!
//! Quadrature is Gauss-Legendre in `|q|` and the uniform trapezoid rule in
//! both angles.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Mode};
use crate::quadrature::gauss_legendre_on;

/// Minimum quadrature order in either direction.
pub const MIN_ORDER: usize = 16;

/// Quadrature order used when nothing larger is needed.
pub const DEFAULT_ORDER: usize = 64;

/// Collision kernel `B(cos theta, |q|)`.
pub trait CollisionKernel: Send + Sync {
    fn value(&self, cos_theta: f64, q: f64) -> f64;

    /// Kernels independent of the deflection angle let the two angular
    /// sums factor.
    fn is_isotropic(&self) -> bool {
        false
    }

    /// Stable identifier written into table caches.
    fn name(&self) -> &str;
}

/// Two-dimensional Maxwell molecules, `B = 1 / (2 pi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Maxwell2d;

impl CollisionKernel for Maxwell2d {
    #[inline]
    fn value(&self, _cos_theta: f64, _q: f64) -> f64 {
        1.0 / (2.0 * PI)
    }

    fn is_isotropic(&self) -> bool {
        true
    }

    fn name(&self) -> &str {
        "maxwell-2d"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub cutoff_radius: f64,
    pub radial_points: usize,
    pub angular_points: usize,
}

impl KernelSpec {
    pub fn new(cutoff_radius: f64, radial_points: usize, angular_points: usize) -> Result<Self> {
        if !(cutoff_radius.is_finite() && cutoff_radius > 0.0) {
            return Err(Error::InvalidParam(format!(
                "cutoff radius must be > 0, got {cutoff_radius}"
            )));
        }
        if radial_points < MIN_ORDER || angular_points < MIN_ORDER {
            return Err(Error::InvalidParam(format!(
                "quadrature orders must be >= {MIN_ORDER}, got n_r = {radial_points}, n_theta = {angular_points}"
            )));
        }
        Ok(Self {
            cutoff_radius,
            radial_points,
            angular_points,
        })
    }

    /// Explicit orders on the grid's cutoff radius.
    pub fn with_orders(grid: &GridSpec, radial_points: usize, angular_points: usize) -> Result<Self> {
        Self::new(grid.cutoff_radius(), radial_points, angular_points)
    }

    /// Orders large enough to resolve every mode pair of `grid`, never
    /// below [`DEFAULT_ORDER`].
    ///
    /// The angular sums see `exp(-i z cos phi)` with `z` up to `R |l - m| / 2`,
    /// whose trapezoid error is of size `J_n(z)`; the radial integrand
    /// oscillates with frequency up to `(|l + m| + |l - m|) / 2`.
    pub fn resolved(grid: &GridSpec) -> Self {
        let r = grid.cutoff_radius();
        let n = grid.half_modes as f64;
        let z = r * 2f64.sqrt() * n;
        let mut n_theta = (z + 12.0 * z.cbrt() + 16.0).ceil() as usize;
        n_theta += n_theta % 2;
        let omega = 1.5 * 2f64.sqrt() * n * r / 2.0;
        let n_r = ((omega + 10.0 * omega.cbrt() + 20.0) / 2.0).ceil() as usize;
        Self {
            cutoff_radius: r,
            radial_points: n_r.max(DEFAULT_ORDER),
            angular_points: n_theta.max(DEFAULT_ORDER),
        }
    }
}

fn angles(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / n as f64;
            (phi.cos(), phi.sin())
        })
        .collect()
}

/// Direct tensor quadrature of the kernel mode for the pair `(l, m)`.
///
/// Every term of the triple sum is evaluated at the actual orientation of
/// `l` and `m`; nothing is factored.
pub fn bhat(l: Mode, m: Mode, kernel: &dyn CollisionKernel, spec: &KernelSpec) -> Complex64 {
    let (rho, w) = gauss_legendre_on(spec.radial_points, 0.0, spec.cutoff_radius);
    let dirs = angles(spec.angular_points);
    let dphi = 2.0 * PI / spec.angular_points as f64;
    let s = [(l[0] + m[0]) as f64, (l[1] + m[1]) as f64];
    let d = [(l[0] - m[0]) as f64, (l[1] - m[1]) as f64];

    let mut total = Complex64::new(0.0, 0.0);
    for (&r, &wr) in rho.iter().zip(&w) {
        let mut shell = Complex64::new(0.0, 0.0);
        for &(cq, sq) in &dirs {
            let phase_q = 0.5 * r * (s[0] * cq + s[1] * sq);
            let mut ring = Complex64::new(0.0, 0.0);
            for &(co, so) in &dirs {
                let cos_theta = cq * co + sq * so;
                let phase = phase_q + 0.5 * r * (d[0] * co + d[1] * so);
                ring += Complex64::from_polar(kernel.value(cos_theta, r), -phase);
            }
            shell += ring;
        }
        total += shell * (wr * r * dphi * dphi);
    }
    total
}

/// Kernel mode for the reduced key `(a2, b2) = (|l + m|^2, |l - m|^2)`,
/// evaluated with `l + m` and `l - m` both along the first axis.
fn bhat_reduced(a2: u32, b2: u32, kernel: &dyn CollisionKernel, spec: &KernelSpec) -> Complex64 {
    let (rho, w) = gauss_legendre_on(spec.radial_points, 0.0, spec.cutoff_radius);
    let dirs = angles(spec.angular_points);
    let dphi = 2.0 * PI / spec.angular_points as f64;
    let a = (a2 as f64).sqrt();
    let b = (b2 as f64).sqrt();
    let mut total = Complex64::new(0.0, 0.0);
    for (&r, &wr) in rho.iter().zip(&w) {
        let mut shell = Complex64::new(0.0, 0.0);
        for &(cq, sq) in &dirs {
            let phase_q = 0.5 * r * a * cq;
            let mut ring = Complex64::new(0.0, 0.0);
            for &(co, so) in &dirs {
                let cos_theta = cq * co + sq * so;
                let phase = phase_q + 0.5 * r * b * co;
                ring += Complex64::from_polar(kernel.value(cos_theta, r), -phase);
            }
            shell += ring;
        }
        total += shell * (wr * r * dphi * dphi);
    }
    total
}

/// Reduced keys hit by the truncated convolution on `grid`.
fn reachable_keys(grid: &GridSpec) -> BTreeSet<(u32, u32)> {
    let n = grid.half_modes as i32;
    let mut keys = BTreeSet::new();
    for k0 in -n..=n {
        for k1 in -n..=n {
            let a2 = (k0 * k0 + k1 * k1) as u32;
            for m0 in (k0 - n).max(-n)..=(k0 + n).min(n) {
                let d0 = k0 - 2 * m0;
                for m1 in (k1 - n).max(-n)..=(k1 + n).min(n) {
                    let d1 = k1 - 2 * m1;
                    keys.insert((a2, (d0 * d0 + d1 * d1) as u32));
                }
            }
        }
    }
    for m0 in -n..=n {
        for m1 in -n..=n {
            keys.insert((4 * (m0 * m0 + m1 * m1) as u32, 0));
        }
    }
    keys
}

const MAGIC: &[u8; 8] = b"BKMTABLE";
const FORMAT_VERSION: u32 = 1;

/// Precomputed kernel modes for every mode pair of one grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: GridSpec,
    spec: KernelSpec,
    kernel_name: String,
    entries: BTreeMap<(u32, u32), Complex64>,
    // Convolution weights (V/pi)^d * Re beta(k - m, m), one run per output
    // mode k over its valid m rectangle in row-major order.
    pair_weights: Vec<f64>,
    pair_offsets: Vec<usize>,
}

impl KernelTable {
    /// Builds the table with the Maxwell kernel.
    pub fn build(grid: &GridSpec, spec: &KernelSpec) -> Result<Self> {
        Self::build_with(grid, spec, &Maxwell2d)
    }

    pub fn build_with(grid: &GridSpec, spec: &KernelSpec, kernel: &dyn CollisionKernel) -> Result<Self> {
        if (spec.cutoff_radius - grid.cutoff_radius()).abs() > 1e-14 * grid.cutoff_radius() {
            return Err(Error::Structure(format!(
                "kernel cutoff {} does not match grid cutoff {}",
                spec.cutoff_radius,
                grid.cutoff_radius()
            )));
        }
        let keys: Vec<(u32, u32)> = reachable_keys(grid).into_iter().collect();
        let values: Vec<Complex64> = if kernel.is_isotropic() {
            isotropic_values(&keys, grid, spec, kernel)
        } else {
            keys.par_iter()
                .map(|&(a2, b2)| bhat_reduced(a2, b2, kernel, spec))
                .collect()
        };
        let entries = keys.into_iter().zip(values).collect();
        Ok(Self::assemble(*grid, *spec, kernel.name().to_string(), entries))
    }

    fn assemble(
        grid: GridSpec,
        spec: KernelSpec,
        kernel_name: String,
        entries: BTreeMap<(u32, u32), Complex64>,
    ) -> Self {
        let n = grid.half_modes as i32;
        let scale = grid.time_factor();
        let mut pair_weights = Vec::new();
        let mut pair_offsets = Vec::with_capacity(grid.len() + 1);
        for k in grid.modes() {
            pair_offsets.push(pair_weights.len());
            let a2 = (k[0] * k[0] + k[1] * k[1]) as u32;
            for m0 in (k[0] - n).max(-n)..=(k[0] + n).min(n) {
                let d0 = k[0] - 2 * m0;
                for m1 in (k[1] - n).max(-n)..=(k[1] + n).min(n) {
                    let d1 = k[1] - 2 * m1;
                    let gain = entries[&(a2, (d0 * d0 + d1 * d1) as u32)];
                    let loss = entries[&(4 * (m0 * m0 + m1 * m1) as u32, 0)];
                    pair_weights.push(scale * (gain - loss).re);
                }
            }
        }
        pair_offsets.push(pair_weights.len());
        Self {
            grid,
            spec,
            kernel_name,
            entries,
            pair_weights,
            pair_offsets,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn kernel_name(&self) -> &str {
        &self.kernel_name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Stored `B(l, m)`.
    pub fn bhat(&self, l: Mode, m: Mode) -> Result<Complex64> {
        let s = [l[0] + m[0], l[1] + m[1]];
        let d = [l[0] - m[0], l[1] - m[1]];
        let key = ((s[0] * s[0] + s[1] * s[1]) as u32, (d[0] * d[0] + d[1] * d[1]) as u32);
        self.entries.get(&key).copied().ok_or(Error::MissingKey { l, m })
    }

    /// `beta(l, m) = B(l, m) - B(m, m)`.
    pub fn beta(&self, l: Mode, m: Mode) -> Result<Complex64> {
        Ok(self.bhat(l, m)? - self.bhat(m, m)?)
    }

    /// Scaled real weights for output mode `ki`, ordered like the valid
    /// `m` rectangle of that mode.
    #[inline]
    pub(crate) fn pair_weights(&self, ki: usize) -> &[f64] {
        &self.pair_weights[self.pair_offsets[ki]..self.pair_offsets[ki + 1]]
    }

    /// Versioned binary image; see [`Self::from_bytes`].
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        body.extend_from_slice(MAGIC);
        body.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let name = self.kernel_name.as_bytes();
        body.extend_from_slice(&(name.len() as u32).to_le_bytes());
        body.extend_from_slice(name);
        body.extend_from_slice(&(self.grid.dim as u32).to_le_bytes());
        body.extend_from_slice(&(self.grid.half_modes as u32).to_le_bytes());
        body.extend_from_slice(&self.grid.extent.to_bits().to_le_bytes());
        body.extend_from_slice(&self.grid.lambda.to_bits().to_le_bytes());
        body.extend_from_slice(&self.spec.cutoff_radius.to_bits().to_le_bytes());
        body.extend_from_slice(&(self.spec.radial_points as u32).to_le_bytes());
        body.extend_from_slice(&(self.spec.angular_points as u32).to_le_bytes());
        body.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (&(a2, b2), v) in &self.entries {
            body.extend_from_slice(&a2.to_le_bytes());
            body.extend_from_slice(&b2.to_le_bytes());
            body.extend_from_slice(&v.re.to_bits().to_le_bytes());
            body.extend_from_slice(&v.im.to_bits().to_le_bytes());
        }
        let digest = Sha256::digest(&body);
        body.extend_from_slice(&digest);
        body
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 + MAGIC.len() {
            return Err(Error::Checksum("file too short".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checksum("checksum mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Checksum("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checksum(format!("unsupported format version {version}")));
        }
        let name_len = r.u32()? as usize;
        let kernel_name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Checksum("kernel name is not UTF-8".into()))?;
        let dim = r.u32()? as usize;
        let half_modes = r.u32()? as usize;
        let extent = r.f64()?;
        let lambda = r.f64()?;
        let mut grid = GridSpec::new(half_modes, extent, lambda)
            .map_err(|e| Error::Checksum(format!("stored grid is invalid: {e}")))?;
        grid.dim = dim;
        let spec = KernelSpec::new(r.f64()?, r.u32()? as usize, r.u32()? as usize)
            .map_err(|e| Error::Checksum(format!("stored kernel spec is invalid: {e}")))?;
        let count = r.u64()? as usize;
        let mut entries = BTreeMap::new();
        for _ in 0..count {
            let key = (r.u32()?, r.u32()?);
            let v = Complex64::new(r.f64()?, r.f64()?);
            entries.insert(key, v);
        }
        if r.pos != body.len() {
            return Err(Error::Checksum("trailing bytes".into()));
        }
        let expected = reachable_keys(&grid);
        if expected.len() != entries.len() || !expected.iter().all(|k| entries.contains_key(k)) {
            return Err(Error::Checksum("entry set does not cover the grid".into()));
        }
        Ok(Self::assemble(grid, spec, kernel_name, entries))
    }

    /// Hex SHA-256 of [`Self::to_bytes`] without its trailing digest.
    pub fn checksum(&self) -> String {
        let bytes = self.to_bytes();
        let digest = &bytes[bytes.len() - 32..];
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Loads `path` when it holds a valid table for `(grid, spec)`, otherwise
    /// builds one and writes it back. The second value is true on a cache hit.
    pub fn load_or_build(path: &Path, grid: &GridSpec, spec: &KernelSpec) -> Result<(Self, bool)> {
        if path.exists() {
            match Self::load(path) {
                Ok(t) if t.grid == *grid && t.spec == *spec && t.kernel_name == Maxwell2d.name() => {
                    return Ok((t, true))
                }
                Ok(_) => log_cache("cache holds a different configuration, rebuilding"),
                Err(e) => log_cache(&format!("{e}, rebuilding")),
            }
        }
        let table = Self::build(grid, spec)?;
        table.save(path)?;
        Ok((table, false))
    }
}

fn log_cache(msg: &str) {
    eprintln!("kernel table cache: {msg}");
}

/// Angle-independent kernels: the two trapezoid sums factor into
/// `T(rho, a) T(rho, b)` with `T(rho, c) = sum_j exp(-i rho c cos phi_j / 2)`.
fn isotropic_values(
    keys: &[(u32, u32)],
    grid: &GridSpec,
    spec: &KernelSpec,
    kernel: &dyn CollisionKernel,
) -> Vec<Complex64> {
    let (rho, w) = gauss_legendre_on(spec.radial_points, 0.0, spec.cutoff_radius);
    let dirs = angles(spec.angular_points);
    let dphi = 2.0 * PI / spec.angular_points as f64;
    let n = grid.half_modes as u32;
    let max_norm = 8 * n * n;
    let norms: BTreeSet<u32> = keys.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut slot = vec![u32::MAX; max_norm as usize + 1];
    let norms: Vec<u32> = norms.into_iter().collect();
    for (i, &s) in norms.iter().enumerate() {
        slot[s as usize] = i as u32;
    }
    // sums[i][c]: angular sum at radial node i for norm index c
    let sums: Vec<Vec<Complex64>> = rho
        .par_iter()
        .map(|&r| {
            norms
                .iter()
                .map(|&s| {
                    let c = (s as f64).sqrt();
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(cphi, _) in &dirs {
                        acc += Complex64::from_polar(1.0, -0.5 * r * c * cphi);
                    }
                    acc * dphi
                })
                .collect()
        })
        .collect();
    let radial: Vec<f64> = rho
        .iter()
        .zip(&w)
        .map(|(&r, &wr)| wr * r * kernel.value(1.0, r))
        .collect();
    keys.par_iter()
        .map(|&(a2, b2)| {
            let ia = slot[a2 as usize] as usize;
            let ib = slot[b2 as usize] as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &wr) in radial.iter().enumerate() {
                acc += sums[i][ia] * sums[i][ib] * wr;
            }
            acc
        })
        .collect()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checksum("truncated table".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}
