//! Experiment driver: one CSV time series per scheme.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use crate::analytic::{bkw_field, diagnose, maxwellian_field, Moments};
use crate::config::{InitialDatum, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{to_field, to_spectrum, DistributionField, GridSpec, Spectrum};
use crate::kernel::KernelTable;
use crate::schemes::{projected_maxwellian, run, IntegratorSpec, SchemeState, Variant};

pub const CSV_COLUMNS: &str = "t,mass,ux,uy,temperature,rel_entropy,l2_error_bkw,neg_mass,neg_cells";

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// CSV paths in scheme order.
    pub outputs: Vec<PathBuf>,
    pub table_checksum: String,
    pub cache_hit: bool,
}

/// Process exit status for a finished run: 0, 1 for configuration problems,
/// 2 for anything that failed while running.
pub fn exit_code<T>(result: &Result<T>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(Error::Parse { .. } | Error::InvalidParam(_)) => 1,
        Err(_) => 2,
    }
}

pub fn csv_path(output: &Path, variant: Variant) -> PathBuf {
    output.join(format!("{}.csv", variant.name()))
}

/// Nodal values from a text file: numbers separated by whitespace or commas,
/// `#` comments, in grid order.
pub fn read_initial_file(path: &Path, grid: &GridSpec) -> Result<DistributionField> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::parse(None, format!("cannot read initial datum {}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(Some(i + 1), format!("malformed value `{tok}` in {}", path.display())))?;
            values.push(v);
        }
    }
    if values.len() != grid.len() {
        return Err(Error::parse(
            None,
            format!(
                "initial datum {} has {} values, the grid needs {}",
                path.display(),
                values.len(),
                grid.len()
            ),
        ));
    }
    DistributionField::new(*grid, values).map_err(|e| Error::parse(None, e.to_string()))
}

pub fn initial_field(cfg: &RunConfig, grid: &GridSpec) -> Result<DistributionField> {
    match &cfg.initial {
        InitialDatum::Bkw => bkw_field(grid, 0.0),
        InitialDatum::Maxwellian { rho, u, temperature } => {
            maxwellian_field(grid, &Moments::new(*rho, *u, *temperature))
        }
        InitialDatum::File(path) => read_initial_file(path, grid),
    }
}

fn header(cfg: &RunConfig, table: &KernelTable, variant: Variant) -> String {
    let spec = table.spec();
    let mut lines = vec![format!("spectral-boltzmann {}", env!("CARGO_PKG_VERSION"))];
    lines.extend(cfg.echo());
    lines.push(format!("variant = {}", variant.name()));
    lines.push(format!("kernel = {}", table.kernel_name()));
    lines.push(format!("cutoff_radius = {}", spec.cutoff_radius));
    lines.push(format!("radial_points = {}", spec.radial_points));
    lines.push(format!("angular_points = {}", spec.angular_points));
    lines.push(format!("table_sha256 = {}", table.checksum()));
    let mut out: String = lines.iter().map(|l| format!("# {l}\n")).collect();
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    out
}

fn sci(x: f64) -> String {
    format!("{x:.15e}")
}

struct Shared<'a> {
    table: &'a KernelTable,
    f_hat: &'a Spectrum,
    m_hat: &'a Spectrum,
    reference: &'a DistributionField,
    spec: IntegratorSpec,
    stride: u64,
    bkw: bool,
}

fn integrate_to_csv(path: &Path, head: &str, variant: Variant, sh: &Shared<'_>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(head.as_bytes())?;
    let state = SchemeState::new(variant, sh.f_hat, sh.m_hat, sh.table)?;
    let result = run(state, &sh.spec, sh.table, sh.stride, |_, t, f_hat| {
        let field = to_field(f_hat)?;
        let d = diagnose(t, &field, sh.reference, sh.bkw)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            sci(t),
            sci(d.moments.rho),
            sci(d.moments.u[0]),
            sci(d.moments.u[1]),
            sci(d.moments.temperature),
            sci(d.rel_entropy),
            d.l2_error_bkw.map(sci).unwrap_or_default(),
            sci(d.neg_mass),
            d.neg_cells
        )?;
        Ok(())
    });
    out.flush()?;
    result.map(|_| ())
}

/// Builds or loads the kernel table, integrates every selected scheme from
/// the initial datum and writes `<output>/<scheme>.csv`. With both schemes
/// selected they run concurrently on the same table.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    let grid = cfg.grid()?;
    let kspec = cfg.kernel_spec()?;
    let spec = cfg.integrator()?;
    let initial = initial_field(cfg, &grid)?;
    let (table, cache_hit) = match &cfg.table_cache {
        Some(p) => KernelTable::load_or_build(p, &grid, &kspec)?,
        None => (KernelTable::build(&grid, &kspec)?, false),
    };
    fs::create_dir_all(&cfg.output)?;

    let f_hat = to_spectrum(&initial);
    let (moments, m_hat) = projected_maxwellian(&initial)?;
    let reference = maxwellian_field(&grid, &moments)?;
    let shared = Shared {
        table: &table,
        f_hat: &f_hat,
        m_hat: &m_hat,
        reference: &reference,
        spec,
        stride: cfg.output_stride,
        bkw: cfg.initial == InitialDatum::Bkw,
    };

    let variants = cfg.scheme.variants();
    let outputs: Vec<PathBuf> = variants.iter().map(|v| csv_path(&cfg.output, *v)).collect();
    let heads: Vec<String> = variants.iter().map(|v| header(cfg, &table, *v)).collect();
    let results: Vec<Result<()>> = thread::scope(|s| {
        let handles: Vec<_> = variants
            .iter()
            .zip(&outputs)
            .zip(&heads)
            .map(|((v, path), head)| {
                let shared = &shared;
                s.spawn(move || integrate_to_csv(path, head, *v, shared))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scheme worker panicked"))
            .collect()
    });
    for r in results {
        r?;
    }
    Ok(RunSummary {
        outputs,
        table_checksum: table.checksum(),
        cache_hit,
    })
}
