//! Run configuration from command-line flags and an optional `key = value`
//! file. Flags win over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::Parser;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::{KernelSpec, MIN_ORDER};
use crate::schemes::{IntegratorSpec, Variant};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_END: f64 = 50.0;
pub const DEFAULT_OUTPUT_STRIDE: u64 = 10;

#[derive(Debug, Parser)]
#[command(
    name = "spectral-boltzmann",
    version,
    about = "Spectral solver for the space-homogeneous Boltzmann equation"
)]
pub struct Cli {
    /// Half-modes per direction.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Velocity box half-width.
    #[arg(long = "V")]
    pub v: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// classical, steady_state or both.
    #[arg(long)]
    pub scheme: Option<String>,
    /// bkw, maxwellian(rho,ux,uy,T) or file:PATH.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long = "t-end")]
    pub t_end: Option<String>,
    /// Steps between CSV rows.
    #[arg(long = "output-stride")]
    pub output_stride: Option<String>,
    /// Kernel table cache file.
    #[arg(long = "table-cache")]
    pub table_cache: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long = "n-r")]
    pub n_r: Option<String>,
    #[arg(long = "n-theta")]
    pub n_theta: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Config file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Cli {
    fn pairs(&self) -> [(&'static str, &Option<String>); 13] {
        [
            ("N", &self.n),
            ("V", &self.v),
            ("lambda", &self.lambda),
            ("scheme", &self.scheme),
            ("initial", &self.initial),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("output_stride", &self.output_stride),
            ("table_cache", &self.table_cache),
            ("output", &self.output),
            ("n_r", &self.n_r),
            ("n_theta", &self.n_theta),
            ("seed", &self.seed),
        ]
    }
}

const KEYS: [&str; 13] = [
    "N",
    "V",
    "lambda",
    "scheme",
    "initial",
    "dt",
    "t_end",
    "output_stride",
    "table_cache",
    "output",
    "n_r",
    "n_theta",
    "seed",
];

const REQUIRED: [&str; 4] = ["N", "V", "scheme", "initial"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Classical,
    SteadyState,
    Both,
}

impl SchemeChoice {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            SchemeChoice::Classical => vec![Variant::Classical],
            SchemeChoice::SteadyState => vec![Variant::SteadyState],
            SchemeChoice::Both => vec![Variant::Classical, Variant::SteadyState],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeChoice::Classical => "classical",
            SchemeChoice::SteadyState => "steady_state",
            SchemeChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialDatum {
    Bkw,
    Maxwellian {
        rho: f64,
        u: [f64; 2],
        temperature: f64,
    },
    /// Whitespace- or comma-separated nodal values in grid order.
    File(PathBuf),
}

impl fmt::Display for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::Bkw => write!(f, "bkw"),
            InitialDatum::Maxwellian { rho, u, temperature } => {
                write!(f, "maxwellian({rho},{},{},{temperature})", u[0], u[1])
            }
            InitialDatum::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub half_modes: usize,
    pub extent: f64,
    pub lambda: f64,
    pub scheme: SchemeChoice,
    pub initial: InitialDatum,
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: u64,
    pub table_cache: Option<PathBuf>,
    pub output: PathBuf,
    /// Explicit quadrature orders; unset ones are resolved from the grid.
    pub n_r: Option<usize>,
    pub n_theta: Option<usize>,
    pub seed: u64,
}

impl RunConfig {
    /// Config with defaults for everything but the required keys.
    pub fn new(half_modes: usize, extent: f64, scheme: SchemeChoice, initial: InitialDatum) -> Self {
        Self {
            half_modes,
            extent,
            lambda: crate::grid::default_lambda(),
            scheme,
            initial,
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            output_stride: DEFAULT_OUTPUT_STRIDE,
            table_cache: None,
            output: PathBuf::from("."),
            n_r: None,
            n_theta: None,
            seed: 0,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.half_modes, self.extent, self.lambda)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let grid = self.grid()?;
        let resolved = KernelSpec::resolved(&grid);
        KernelSpec::with_orders(
            &grid,
            self.n_r.unwrap_or(resolved.radial_points),
            self.n_theta.unwrap_or(resolved.angular_points),
        )
    }

    pub fn integrator(&self) -> Result<IntegratorSpec> {
        IntegratorSpec::new(self.dt, self.t_end)
    }

    /// `key = value` lines that parse back to this config.
    pub fn echo(&self) -> Vec<String> {
        let opt = |o: Option<usize>| o.map_or("auto".to_string(), |v| v.to_string());
        vec![
            format!("N = {}", self.half_modes),
            format!("V = {}", self.extent),
            format!("lambda = {}", self.lambda),
            format!("scheme = {}", self.scheme.name()),
            format!("initial = {}", self.initial),
            format!("dt = {}", self.dt),
            format!("t_end = {}", self.t_end),
            format!("output_stride = {}", self.output_stride),
            format!(
                "table_cache = {}",
                self.table_cache
                    .as_ref()
                    .map_or("none".to_string(), |p| p.display().to_string())
            ),
            format!("output = {}", self.output.display()),
            format!("n_r = {}", opt(self.n_r)),
            format!("n_theta = {}", opt(self.n_theta)),
            format!("seed = {}", self.seed),
        ]
    }

    fn validate(&self) -> Result<()> {
        self.grid()?;
        self.integrator()?;
        if self.output_stride == 0 {
            return Err(Error::InvalidParam("output_stride must be >= 1".into()));
        }
        for (name, v) in [("n_r", self.n_r), ("n_theta", self.n_theta)] {
            if let Some(v) = v {
                if v < MIN_ORDER {
                    return Err(Error::InvalidParam(format!("{name} = {v} is below {MIN_ORDER}")));
                }
            }
        }
        if let InitialDatum::Maxwellian { rho, u, temperature } = self.initial {
            if !(rho > 0.0 && temperature > 0.0 && rho.is_finite() && temperature.is_finite())
                || !u.iter().all(|c| c.is_finite())
            {
                return Err(Error::InvalidParam(format!(
                    "maxwellian initial datum needs rho > 0 and T > 0, got {}",
                    self.initial
                )));
            }
        }
        Ok(())
    }
}

/// Raw value and the file line it came from, `None` for flags.
type Source = (String, Option<usize>);

fn parse_file(text: &str) -> Result<BTreeMap<&'static str, Source>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::parse(Some(line), format!("expected `key = value`, got `{body}`")))?;
        let key = key.trim();
        let value = value.trim();
        let key = KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| Error::parse(Some(line), format!("unknown key `{key}`")))?;
        if value.is_empty() {
            return Err(Error::parse(Some(line), format!("empty value for `{key}`")));
        }
        if let Some((_, Some(first))) = out.get(key) {
            return Err(Error::parse(
                Some(line),
                format!("duplicate key `{key}` (first set on line {first})"),
            ));
        }
        out.insert(key, (value.to_string(), Some(line)));
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, src: &Source) -> Result<T> {
    src.0
        .parse()
        .map_err(|_| Error::parse(src.1, format!("malformed value for `{key}`: `{}`", src.0)))
}

fn parse_scheme(src: &Source) -> Result<SchemeChoice> {
    match src.0.as_str() {
        "classical" => Ok(SchemeChoice::Classical),
        "steady_state" => Ok(SchemeChoice::SteadyState),
        "both" => Ok(SchemeChoice::Both),
        other => Err(Error::parse(
            src.1,
            format!("scheme must be classical, steady_state or both, got `{other}`"),
        )),
    }
}

fn parse_initial(src: &Source) -> Result<InitialDatum> {
    let s = src.0.as_str();
    if s == "bkw" {
        return Ok(InitialDatum::Bkw);
    }
    if let Some(path) = s.strip_prefix("file:") {
        if path.is_empty() {
            return Err(Error::parse(src.1, "file initial datum needs a path"));
        }
        return Ok(InitialDatum::File(PathBuf::from(path)));
    }
    if let Some(args) = s.strip_prefix("maxwellian(").and_then(|r| r.strip_suffix(')')) {
        let vals: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(src.1, format!("malformed maxwellian parameters in `{s}`")))?;
        if vals.len() != 4 {
            return Err(Error::parse(
                src.1,
                format!("maxwellian takes rho,ux,uy,T, got {} values", vals.len()),
            ));
        }
        return Ok(InitialDatum::Maxwellian {
            rho: vals[0],
            u: [vals[1], vals[2]],
            temperature: vals[3],
        });
    }
    Err(Error::parse(
        src.1,
        format!("initial must be bkw, maxwellian(rho,ux,uy,T) or file:PATH, got `{s}`"),
    ))
}

fn parse_order(key: &str, src: &Source) -> Result<Option<usize>> {
    if src.0 == "auto" {
        Ok(None)
    } else {
        number(key, src).map(Some)
    }
}

/// Builds a config from `args` (including the program name) and the text of
/// an optional config file.
pub fn parse_config<I, T>(args: I, file: Option<&str>) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::parse(None, e.to_string().trim_end().to_string()))?;
    let mut values = match file {
        Some(text) => parse_file(text)?,
        None => BTreeMap::new(),
    };
    for (key, v) in cli.pairs() {
        if let Some(v) = v {
            values.insert(key, (v.clone(), None));
        }
    }

    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !values.contains_key(k)).collect();
    if !missing.is_empty() {
        return Err(Error::parse(
            None,
            format!("missing required keys: {}", missing.join(", ")),
        ));
    }

    let half_modes: usize = number("N", &values["N"])?;
    let extent: f64 = number("V", &values["V"])?;
    let mut cfg = RunConfig::new(
        half_modes,
        extent,
        parse_scheme(&values["scheme"])?,
        parse_initial(&values["initial"])?,
    );
    for (key, src) in &values {
        match *key {
            "lambda" => cfg.lambda = number(key, src)?,
            "dt" => cfg.dt = number(key, src)?,
            "t_end" => cfg.t_end = number(key, src)?,
            "output_stride" => cfg.output_stride = number(key, src)?,
            "table_cache" => cfg.table_cache = (src.0 != "none").then(|| PathBuf::from(&src.0)),
            "output" => cfg.output = PathBuf::from(&src.0),
            "n_r" => cfg.n_r = parse_order(key, src)?,
            "n_theta" => cfg.n_theta = parse_order(key, src)?,
            "seed" => cfg.seed = number(key, src)?,
            _ => {}
        }
    }
    cfg.validate().map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::parse(None, other.to_string()),
    })?;
    Ok(cfg)
}

/// Reads the `--config` file named in `args`, if any, then parses.
pub fn load_config(args: &[String]) -> Result<RunConfig> {
    let cli = Cli::try_parse_from(args).map_err(|e| Error::parse(None, e.to_string().trim_end().to_string()))?;
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| Error::parse(None, format!("cannot read config {}: {e}", path.display())))?,
        ),
        None => None,
    };
    parse_config(args, text.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("spectral-boltzmann".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    #[test]
    fn flags_reproduce_the_reference_experiment() {
        let c = parse_config(
            args("--N 32 --V 8 --scheme both --initial bkw --dt 0.01 --t-end 50"),
            None,
        )
        .unwrap();
        assert_eq!(c.half_modes, 32);
        assert_eq!(c.extent, 8.0);
        assert_eq!(c.scheme, SchemeChoice::Both);
        assert_eq!(c.initial, InitialDatum::Bkw);
        assert_eq!(c.dt, 0.01);
        assert_eq!(c.t_end, 50.0);
        assert_eq!(c.output_stride, 10);
        assert_eq!(c.lambda, crate::grid::default_lambda());
    }

    #[test]
    fn empty_input_lists_every_missing_key() {
        let err = parse_config(args(""), None).unwrap_err().to_string();
        for k in REQUIRED {
            assert!(err.contains(k), "{err}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file = "N = 16\nV = 8\nscheme = classical\ninitial = bkw\n";
        let c = parse_config(args("--N 32"), Some(file)).unwrap();
        assert_eq!(c.half_modes, 32);
        let c = parse_config(args(""), Some(file)).unwrap();
        assert_eq!(c.half_modes, 16);
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let cases = [
            ("N = 16\n# fine\nbogus = 1\n", 3, "unknown key"),
            ("N = 16\nN = 8\n", 2, "duplicate"),
            ("V = 8\n\nN = sixteen\nscheme = both\ninitial = bkw\n", 3, "malformed"),
            (
                "N = 4\nV = 8\nscheme = both\ninitial = gaussian\n",
                4,
                "initial must be",
            ),
            ("N 4\n", 1, "key = value"),
        ];
        for (text, line, needle) in cases {
            match parse_config(args(""), Some(text)) {
                Err(Error::Parse { line: Some(l), message }) => {
                    assert_eq!(l, line, "{text:?}");
                    assert!(message.contains(needle), "{message}");
                }
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn initial_datum_forms() {
        let base = "--N 4 --V 8 --scheme classical --initial";
        let c = parse_config(args(&format!("{base} maxwellian(1,0.5,-0.5,2)")), None).unwrap();
        assert_eq!(
            c.initial,
            InitialDatum::Maxwellian {
                rho: 1.0,
                u: [0.5, -0.5],
                temperature: 2.0
            }
        );
        let c = parse_config(args(&format!("{base} file:/tmp/f.txt")), None).unwrap();
        assert_eq!(c.initial, InitialDatum::File(PathBuf::from("/tmp/f.txt")));
        assert!(parse_config(args(&format!("{base} maxwellian(1,0,0)")), None).is_err());
        assert!(parse_config(args(&format!("{base} maxwellian(0,0,0,1)")), None).is_err());
        assert!(parse_config(args(&format!("{base} maxwellian(1,0,0,-1)")), None).is_err());
    }

    #[test]
    fn invalid_numbers_are_rejected() {
        let base = "--N 4 --V 8 --scheme classical --initial bkw";
        for extra in [
            "--dt 0",
            "--dt -0.1",
            "--t-end 0.001",
            "--output-stride 0",
            "--V -1",
            "--lambda 0",
            "--n-r 4",
            "--N 0",
            "--N 2.5",
        ] {
            let r = parse_config(args(&format!("{base} {extra}")), None);
            assert!(matches!(r, Err(Error::Parse { .. })), "{extra}: {r:?}");
        }
    }

    #[test]
    fn unknown_flag_is_a_parse_error() {
        assert!(matches!(
            parse_config(args("--N 4 --frobnicate 1"), None),
            Err(Error::Parse { line: None, .. })
        ));
    }

    #[test]
    fn echo_parses_back() {
        let mut c = parse_config(
            args("--N 6 --V 7.5 --scheme steady_state --initial maxwellian(1,0.25,0,1.5) --n-theta 96 --seed 9"),
            None,
        )
        .unwrap();
        c.table_cache = Some(PathBuf::from("/tmp/cache.bin"));
        let text = c.echo().join("\n");
        assert_eq!(parse_config(args(""), Some(&text)).unwrap(), c);
    }

    #[test]
    fn partial_orders_fill_from_resolution() {
        let c = parse_config(args("--N 8 --V 8 --scheme both --initial bkw --n-r 80"), None).unwrap();
        let spec = c.kernel_spec().unwrap();
        let resolved = KernelSpec::resolved(&c.grid().unwrap());
        assert_eq!(spec.radial_points, 80);
        assert_eq!(spec.angular_points, resolved.angular_points);
    }
}
