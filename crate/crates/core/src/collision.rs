//! Truncated spectral collision operator.
//!
//! `Q_k = (V/pi)^d * sum_{l + m = k} f_l g_m beta(l, m)` for `k` in the mode
//! box, with `l` and `m` restricted to the mode box as well. The quadratic
//! operator is `collision_spectrum(f, f)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spectrum};
use crate::kernel::KernelTable;

/// Largest `N` the brute-force oracle accepts.
pub const ORACLE_MAX_N: usize = 6;

fn check_grids(table: &KernelTable, spectra: &[&Spectrum]) -> Result<()> {
    for s in spectra {
        table.grid().check_same(s.grid(), "collision operator")?;
    }
    Ok(())
}

/// Accumulates `term(l_idx, m_idx) * w(k - m, m)` over every pair with
/// `l + m = k`, `w` being the scaled kernel weight.
///
/// With `hermitian` set, only the first half of the modes is summed and the
/// rest is filled by `Q(-k) = conj(Q(k))`; callers guarantee both inputs
/// represent real fields.
#[inline]
fn convolve<F>(grid: &GridSpec, table: &KernelTable, hermitian: bool, term: F) -> Vec<Complex64>
where
    F: Fn(usize, usize) -> Complex64 + Sync,
{
    let n = grid.half_modes as i32;
    let w = grid.nodes_per_dim();
    let len = grid.len();
    let count = if hermitian { len / 2 + 1 } else { len };
    let mut out: Vec<Complex64> = (0..count)
        .into_par_iter()
        .map(|ki| {
            let k = grid.mode_at(ki);
            let weights = table.pair_weights(ki);
            let mut c = 0;
            let mut acc = Complex64::new(0.0, 0.0);
            let m1_lo = (k[1] - n).max(-n);
            let m1_hi = (k[1] + n).min(n);
            for m0 in (k[0] - n).max(-n)..=(k[0] + n).min(n) {
                let row_m = (m0 + n) as usize * w;
                let row_l = (k[0] - m0 + n) as usize * w;
                for m1 in m1_lo..=m1_hi {
                    let mi = row_m + (m1 + n) as usize;
                    let li = row_l + (k[1] - m1 + n) as usize;
                    acc += term(li, mi) * weights[c];
                    c += 1;
                }
            }
            acc
        })
        .collect();
    if hermitian {
        out.resize(len, Complex64::new(0.0, 0.0));
        for ki in count..len {
            out[ki] = out[len - 1 - ki].conj();
        }
    }
    out
}

/// Bilinear collision spectrum `Q(f, g)` with `f` on the first slot of
/// `beta(l, m)`.
pub fn collision_spectrum(f_hat: &Spectrum, g_hat: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
    check_grids(table, &[f_hat, g_hat])?;
    let f = f_hat.coeffs();
    let g = g_hat.coeffs();
    let out = convolve(table.grid(), table, false, |li, mi| f[li] * g[mi]);
    Spectrum::new(*table.grid(), out)
}

/// `Q(f, f)` for a spectrum of a real field, summing half the modes.
pub(crate) fn collision_spectrum_real(f_hat: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
    check_grids(table, &[f_hat])?;
    let f = f_hat.coeffs();
    let out = convolve(table.grid(), table, true, |li, mi| f[li] * f[mi]);
    Spectrum::new(*table.grid(), out)
}

/// `Q(m, g) + Q(g, m) + Q(g, g)` in one pass, i.e. the linearized operator
/// plus the quadratic part, without ever forming `Q(m, m)`.
///
/// The per-pair weight is `m_l g_m + g_l (m_m + g_m)`, which is identically
/// zero when `g = 0`.
pub fn micro_macro_spectrum(m_hat: &Spectrum, g_hat: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
    micro_macro_impl(m_hat, g_hat, table, false)
}

pub(crate) fn micro_macro_spectrum_real(m_hat: &Spectrum, g_hat: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
    micro_macro_impl(m_hat, g_hat, table, true)
}

fn micro_macro_impl(m_hat: &Spectrum, g_hat: &Spectrum, table: &KernelTable, hermitian: bool) -> Result<Spectrum> {
    check_grids(table, &[m_hat, g_hat])?;
    let mh = m_hat.coeffs();
    let g = g_hat.coeffs();
    let out = convolve(table.grid(), table, hermitian, |li, mi| {
        mh[li] * g[mi] + g[li] * (mh[mi] + g[mi])
    });
    Spectrum::new(*table.grid(), out)
}

/// Literal double loop over all `(l, m)` in the mode box, for tests.
pub fn collision_oracle(f_hat: &Spectrum, g_hat: &Spectrum, table: &KernelTable) -> Result<Spectrum> {
    check_grids(table, &[f_hat, g_hat])?;
    let grid = *table.grid();
    if grid.half_modes > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            n: grid.half_modes,
            max: ORACLE_MAX_N,
        });
    }
    let mut out = Spectrum::zeros(grid);
    for l in grid.modes() {
        for m in grid.modes() {
            let k = [l[0] + m[0], l[1] + m[1]];
            let Some(ki) = grid.mode_index(k) else {
                continue;
            };
            let beta = table.beta(l, m)?;
            out.coeffs_mut()[ki] += f_hat.get(l) * g_hat.get(m) * beta;
        }
    }
    Ok(out.scaled(grid.time_factor()))
}
