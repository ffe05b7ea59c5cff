#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lpf_core::asymptotics::{elementary, exponent_forms, inv_moment_shape, saddle_point_count, t_r_shape};
use lpf_core::dickman::{xi, DickmanTable};
use lpf_core::integrals::{compare, integral_recip_p, integral_t0, Parametrization};
use lpf_core::smarandache::exact_sums;
use lpf_core::smooth::{psi_dickman, psi_elementary_bound, psi_exact, u_of, PsiMethod, PsiQuery};
use lpf_core::zeta::{moment_constants, s_moment_expansion, zeta_deriv, MAX_DERIVATIVE};
use lpf_core::{Category, Quadrature, ScanConfig};
use serde::ser::{Serialize, SerializeMap, SerializeStruct, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: lpf_core::Error,
    },
    #[error("selftest: {0} check(s) failed")]
    Selftest(usize),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core { source, .. } => match source.category() {
                Category::Numeric => EXIT_NUMERIC,
                Category::Budget => EXIT_BUDGET,
                Category::Io => EXIT_IO,
            },
            CliError::Selftest(_) => EXIT_NUMERIC,
            CliError::Output(_) => EXIT_IO,
        }
    }
}

trait Context<T> {
    fn ctx(self, f: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for lpf_core::Result<T> {
    fn ctx(self, f: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { context: f(), source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Exact,
    Psi,
    Asym,
    Compare,
    Moments,
    Rho,
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Sieve,
    Buchstab,
}

impl From<Method> for PsiMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Auto => PsiMethod::Auto,
            Method::Sieve => PsiMethod::Sieve,
            Method::Buchstab => PsiMethod::Buchstab,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub x_grid: Vec<f64>,
    pub r_list: Vec<f64>,
    pub y_list: Vec<u64>,
    pub u_list: Vec<f64>,
    pub method: Method,
    pub j_terms: u32,
    pub tolerance: f64,
    pub u_max: f64,
    pub degree: usize,
    pub cache_dir: Option<PathBuf>,
    pub output: Output,
    pub threads: usize,
}

const EXACT_HELP: &str = "\
CSV columns (one row per x and r):
  x            upper limit (floor of the grid value)
  r            moment exponent
  n_x          #{2<=n<=x : n does not divide P(n)!}
  n_x_dual     #{2<=n<=x : S(n) != P(n)}
  t0           #{n<=x : P(n)^2 | n}
  t_r          sum of P(n)^-r over n<=x with P(n)^2 | n
  sum_inv_p_r  sum over 2<=n<=x of P(n)^-r
  sum_p_r      sum over 2<=n<=x of P(n)^r
  sum_inv_s_r  sum over 2<=n<=x of S(n)^-r
  sum_s_r      sum over 2<=n<=x of S(n)^r
  sum_ratio_r  sum over 2<=n<=x of (S(n)/P(n))^r";

const PSI_HELP: &str = "\
CSV columns (one row per x and y):
  x        upper limit
  y        smoothness bound
  u        log x / log y
  exact    number of n<=x with all prime factors <= y (n = 1 included)
  dickman  x*rho(u); empty when y > x
  bound    x*exp(-u log u); empty when y > x";

const ASYM_HELP: &str = "\
CSV columns (one row per x and r):
  x                 argument
  r                 exponent used by g_r, t_r_shape and inv_moment_shape
  L                 sqrt(log x * log log x)
  g_r               second-order exponent term
  u0                root of log x = u0 (x^(1/u0^2) - 1)
  u0_series         explicit two-term approximation of u0
  refined           x exp(-sqrt2 L (1 + g_0))
  t_r_shape         x exp(-sqrt(2r+2) L (1 + g_r))
  inv_moment_shape  x exp(-sqrt(2r) L (1 + g_(r-1))); empty unless r > 0
  saddle_corrected  saddle-point form of N(x) with constant 2
  saddle_original   same form with constant 1 + log 2
  leading           x exp(-sqrt2 L)
  double_l          x exp(-2 L)";

const COMPARE_HELP: &str = "\
CSV columns (one row per x):
  x                upper limit
  n_exact          N(x) by sieve
  t0_exact         T_0(x) by sieve
  sum_inv_p_exact  sum over 2<=n<=x of 1/P(n)
  i_t0             integral over [2,x] of rho(log x/log t) log t / t^2
  i_recip_p        integral over [2,x] of rho(log x/log t) / t^2
  n_main           2 x i_t0
  n_elementary     x exp(-sqrt2 L (1 + g_0)); empty below the domain of g_0
  ratio_n_main     n_exact / n_main
  ratio_t0         t0_exact / (x i_t0)
  ratio_recip_p    sum_inv_p_exact / (x i_recip_p)
  ratio_n_t0       n_exact / t0_exact
Truncation bounds, error estimates and timings go to stderr.";

const MOMENTS_HELP: &str = "\
CSV columns (one row per x and r):
  x                 upper limit
  r                 exponent (> 0)
  J                 number of expansion terms
  a_1..a_J          expansion constants a_{j,r}
  sum_s_r           sum over 2<=n<=x of S(n)^r
  formula           x^(r+1) sum_{j<=J} a_{j,r} / log^j x
  ratio             sum_s_r / formula
  sum_inv_s_r       sum over 2<=n<=x of S(n)^-r
  inv_moment_shape  x exp(-sqrt(2r) L (1 + g_(r-1)))
  ratio_inv         sum_inv_s_r / inv_moment_shape";

const RHO_HELP: &str = "\
CSV columns (one row per u):
  u          argument
  rho        Dickman function
  rho_prime  derivative of rho
  xi         positive root of u xi = e^xi - 1; empty for u <= 1";

const SELFTEST_HELP: &str = "\
CSV columns (one row per check):
  check      check name
  value      computed value
  reference  expected value
  abs_diff   |value - reference|
  tolerance  allowed abs_diff
  status     pass or fail
Exits with status 3 if any check fails.";

const EXIT_HELP: &str = "\
Exit status: 0 success, 1 i/o, 2 usage, 3 numeric contract, 4 budget.
Grids accept comma lists with scientific notation and a:b:step, which expands
to a, a*10^step, a*10^(2 step), ... up to b.";

#[derive(Debug, Parser)]
#[command(name = "lpf", version, about = "Largest prime factor sums, smooth counts and their asymptotics", after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
struct Common {
    /// Relative quadrature tolerance, in [1e-14, 1e-3]
    #[arg(long = "tol", default_value_t = 1e-10)]
    tol: f64,
    /// Dickman table range
    #[arg(long = "u-max", default_value_t = 64.0)]
    u_max: f64,
    /// Dickman series degree per unit interval
    #[arg(long, default_value_t = 30)]
    degree: usize,
    /// Directory for Dickman tables and sieve segments
    #[arg(long = "cache-dir", env = "LPF_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Write JSON instead of CSV
    #[arg(long)]
    json: bool,
    /// Worker threads (default: available cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Exact counts and moment sums by sieve
    #[command(after_help = EXACT_HELP)]
    Exact {
        #[arg(long, value_parser = parse_grid)]
        x: Grid,
        #[arg(long, value_parser = parse_list, default_value = "1")]
        r: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Smooth number counts against the Dickman approximation
    #[command(after_help = PSI_HELP)]
    Psi {
        #[arg(long, value_parser = parse_grid)]
        x: Grid,
        #[arg(long, value_parser = parse_list)]
        y: Grid,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        #[command(flatten)]
        common: Common,
    },
    /// Elementary asymptotic terms
    #[command(after_help = ASYM_HELP)]
    Asym {
        #[arg(long, value_parser = parse_grid)]
        x: Grid,
        #[arg(long, value_parser = parse_list, default_value = "0")]
        r: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Exact counts against the integral forms
    #[command(after_help = COMPARE_HELP)]
    Compare {
        #[arg(long, value_parser = parse_grid)]
        x: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Moment constants and exact-vs-expansion ratios
    #[command(after_help = MOMENTS_HELP)]
    Moments {
        #[arg(long, value_parser = parse_grid)]
        x: Grid,
        #[arg(long, value_parser = parse_list, default_value = "1")]
        r: Grid,
        #[arg(long = "J", default_value_t = 3)]
        j: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Dickman function values
    #[command(after_help = RHO_HELP)]
    Rho {
        #[arg(long, value_parser = parse_list)]
        u: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Fixed invariant suite with deterministic output
    #[command(after_help = SELFTEST_HELP)]
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Grid(Vec<f64>);

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("malformed number '{s}'"))?;
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Grid, String> {
    s.split(',').map(parse_number).collect::<Result<_, _>>().map(Grid)
}

/// Snaps values within a relative 1e-12 of an integer, so that `1e4:1e6:1`
/// yields exact powers of ten.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-12 * v.abs() {
        r
    } else {
        v
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_number(v)?),
            [a, b, step] => {
                let (a, b, step) = (parse_number(a)?, parse_number(b)?, parse_number(step)?);
                if !(a > 0.0 && b >= a && step > 0.0) {
                    return Err(format!("range '{item}' needs 0 < a <= b and step > 0"));
                }
                let mut k = 0;
                loop {
                    let v = snap(a * 10f64.powf(k as f64 * step));
                    if v > b * (1.0 + 1e-12) {
                        break;
                    }
                    out.push(v);
                    k += 1;
                    if k > 10_000 {
                        return Err(format!("range '{item}' has too many points"));
                    }
                }
            }
            _ => return Err(format!("malformed grid item '{item}'")),
        }
    }
    Ok(Grid(out))
}

fn check_increasing(flag: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Usage(format!("{flag}: grid is empty")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage(format!("{flag}: grid must be strictly increasing")));
    }
    Ok(())
}

/// Parses `argv` (without the program name) into a validated configuration.
/// Help and version requests come back as `Usage` errors carrying the text;
/// see [`parse_outcome`] to tell them apart.
pub fn parse_args<S: AsRef<str>>(argv: &[S]) -> Result<RunConfig, CliError> {
    match parse_outcome(argv) {
        Parsed::Config(c) => Ok(*c),
        Parsed::Display(text) => Err(CliError::Usage(text)),
        Parsed::Error(e) => Err(e),
    }
}

pub enum Parsed {
    Config(Box<RunConfig>),
    /// Help or version text for standard output.
    Display(String),
    Error(CliError),
}

pub fn parse_outcome<S: AsRef<str>>(argv: &[S]) -> Parsed {
    let args = std::iter::once("lpf").chain(argv.iter().map(|s| s.as_ref()));
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Parsed::Display(text),
                _ => Parsed::Error(CliError::Usage(text.trim_end().to_string())),
            };
        }
    };
    match build_config(cli.command) {
        Ok(c) => Parsed::Config(Box::new(c)),
        Err(e) => Parsed::Error(e),
    }
}

fn build_config(sub: Sub) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig {
        command: Command::Selftest,
        x_grid: Vec::new(),
        r_list: vec![1.0],
        y_list: Vec::new(),
        u_list: Vec::new(),
        method: Method::Auto,
        j_terms: 3,
        tolerance: 1e-10,
        u_max: 64.0,
        degree: 30,
        cache_dir: None,
        output: Output::Csv,
        threads: 1,
    };
    let common = match sub {
        Sub::Exact { x, r, common } => {
            cfg.command = Command::Exact;
            cfg.x_grid = x.0;
            cfg.r_list = r.0;
            common
        }
        Sub::Psi { x, y, method, common } => {
            cfg.command = Command::Psi;
            cfg.x_grid = x.0;
            cfg.method = method;
            cfg.y_list =
                y.0.iter()
                    .map(|&v| {
                        if v >= 2.0 && v.fract() == 0.0 && v < 9.007e15 {
                            Ok(v as u64)
                        } else {
                            Err(CliError::Usage(format!("--y: {v} must be an integer >= 2")))
                        }
                    })
                    .collect::<Result<_, _>>()?;
            common
        }
        Sub::Asym { x, r, common } => {
            cfg.command = Command::Asym;
            cfg.x_grid = x.0;
            cfg.r_list = r.0;
            common
        }
        Sub::Compare { x, common } => {
            cfg.command = Command::Compare;
            cfg.x_grid = x.0;
            common
        }
        Sub::Moments { x, r, j, common } => {
            cfg.command = Command::Moments;
            cfg.x_grid = x.0;
            cfg.r_list = r.0;
            if j == 0 || j as usize > MAX_DERIVATIVE {
                return Err(CliError::Usage(format!("--J: {j} must lie in [1, {MAX_DERIVATIVE}]")));
            }
            cfg.j_terms = j;
            common
        }
        Sub::Rho { u, common } => {
            cfg.command = Command::Rho;
            cfg.u_list = u.0;
            common
        }
        Sub::Selftest { common } => common,
    };
    if !matches!(cfg.command, Command::Rho | Command::Selftest) {
        check_increasing("--x", &cfg.x_grid)?;
        if cfg.x_grid[0] < 2.0 {
            return Err(CliError::Usage(format!("--x: {} is below 2", cfg.x_grid[0])));
        }
    }
    if !(1e-14..=1e-3).contains(&common.tol) {
        return Err(CliError::Usage(format!("--tol: {} outside [1e-14, 1e-3]", common.tol)));
    }
    if !(common.u_max >= 2.0 && common.u_max <= 1000.0) {
        return Err(CliError::Usage(format!("--u-max: {} outside [2, 1000]", common.u_max)));
    }
    if !(4..=60).contains(&common.degree) {
        return Err(CliError::Usage(format!("--degree: {} outside [4, 60]", common.degree)));
    }
    cfg.tolerance = common.tol;
    cfg.u_max = common.u_max;
    cfg.degree = common.degree;
    cfg.cache_dir = common.cache_dir;
    cfg.output = if common.json { Output::Json } else { Output::Csv };
    cfg.threads = match common.threads {
        Some(0) => return Err(CliError::Usage("--threads: must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Int(u128),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn to_field(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // shortest round-trip representation, locale independent
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_u128(*v),
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Float(v) => s.serialize_str(&v.to_string()),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as u128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

struct Table {
    command: &'static str,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(command: &'static str, columns: &[&str]) -> Self {
        Self {
            command,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

struct Record<'a>(&'a [String], &'a [Cell]);

impl Serialize for Record<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let records: Vec<Record> = self.rows.iter().map(|r| Record(&self.columns, r)).collect();
        let mut st = s.serialize_struct("Table", 4)?;
        st.serialize_field("schema_version", &SCHEMA_VERSION)?;
        st.serialize_field("command", self.command)?;
        st.serialize_field("columns", &self.columns)?;
        st.serialize_field("records", &records)?;
        st.end()
    }
}

fn write_table<W: Write>(t: &Table, output: Output, out: W) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Output(e.to_string());
    match output {
        Output::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&t.columns).map_err(|e| err(&e))?;
            for row in &t.rows {
                w.write_record(row.iter().map(Cell::to_field)).map_err(|e| err(&e))?;
            }
            w.flush().map_err(|e| err(&e))
        }
        Output::Json => {
            let mut out = out;
            serde_json::to_writer(&mut out, t).map_err(|e| err(&e))?;
            writeln!(out).map_err(|e| err(&e))
        }
    }
}

/// Runs `config`, writing records to `out` and diagnostics to `err`.
/// Returns the process exit status.
pub fn run<O: Write, E: Write>(config: &RunConfig, out: &mut O, err: &mut E) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return EXIT_IO;
        }
    };
    let start = Instant::now();
    let mut diag = Vec::new();
    let result = pool.install(|| execute(config, &mut diag));
    let _ = err.write_all(&diag);
    let _ = writeln!(err, "elapsed: {:.3} s", start.elapsed().as_secs_f64());
    match result.and_then(|t| {
        let passed = t.1;
        write_table(&t.0, config.output, &mut *out)?;
        passed
    }) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

type Outcome = (Table, Result<(), CliError>);

fn execute<E: Write>(c: &RunConfig, err: &mut E) -> Result<Outcome, CliError> {
    let ok = |t: Table| Ok((t, Ok(())));
    match c.command {
        Command::Exact => ok(cmd_exact(c)?),
        Command::Psi => ok(cmd_psi(c)?),
        Command::Asym => ok(cmd_asym(c)?),
        Command::Compare => ok(cmd_compare(c, err)?),
        Command::Moments => ok(cmd_moments(c)?),
        Command::Rho => ok(cmd_rho(c)?),
        Command::Selftest => cmd_selftest(c, err),
    }
}

fn scan_config(c: &RunConfig) -> ScanConfig {
    ScanConfig {
        cache_dir: c.cache_dir.clone(),
        ..ScanConfig::default()
    }
}

fn int_x(x: f64) -> u64 {
    x.floor() as u64
}

fn table_path(dir: &Path, u_max: f64, degree: usize) -> PathBuf {
    dir.join(format!("rho_{:016x}_{degree}.bin", u_max.to_bits()))
}

/// Builds the Dickman table, going through the cache directory when one is set.
fn dickman_table(c: &RunConfig) -> Result<DickmanTable, CliError> {
    let ctx = || format!("dickman table (u_max = {}, degree = {})", c.u_max, c.degree);
    let Some(dir) = &c.cache_dir else {
        return DickmanTable::build(c.u_max, c.degree).ctx(ctx);
    };
    let path = table_path(dir, c.u_max, c.degree);
    if path.exists() {
        let f = fs::File::open(&path).map_err(lpf_core::Error::from).ctx(ctx)?;
        return DickmanTable::read_from(BufReader::new(f)).ctx(ctx);
    }
    let t = DickmanTable::build(c.u_max, c.degree).ctx(ctx)?;
    fs::create_dir_all(dir).map_err(lpf_core::Error::from).ctx(ctx)?;
    // write then rename, so concurrent runs never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let f = fs::File::create(&tmp).map_err(lpf_core::Error::from).ctx(ctx)?;
    let mut w = BufWriter::new(f);
    t.write_to(&mut w).ctx(ctx)?;
    w.flush().map_err(lpf_core::Error::from).ctx(ctx)?;
    drop(w);
    fs::rename(&tmp, &path).map_err(lpf_core::Error::from).ctx(ctx)?;
    Ok(t)
}

fn cmd_exact(c: &RunConfig) -> Result<Table, CliError> {
    let mut t = Table::new(
        "exact",
        &[
            "x",
            "r",
            "n_x",
            "n_x_dual",
            "t0",
            "t_r",
            "sum_inv_p_r",
            "sum_p_r",
            "sum_inv_s_r",
            "sum_s_r",
            "sum_ratio_r",
        ],
    );
    let cfg = scan_config(c);
    for &xf in &c.x_grid {
        let x = int_x(xf);
        let rep = exact_sums(x, &c.r_list, &cfg).ctx(|| format!("exact_sums(x = {x})"))?;
        for m in &rep.moments {
            t.push(vec![
                x.into(),
                m.r.into(),
                rep.n_x.into(),
                rep.n_x_dual.into(),
                rep.t0.into(),
                m.t_r.into(),
                m.sum_inv_pr.into(),
                m.sum_pr.into(),
                m.sum_inv_sr.into(),
                m.sum_sr.into(),
                m.sum_ratio_r.into(),
            ]);
        }
    }
    Ok(t)
}

fn cmd_psi(c: &RunConfig) -> Result<Table, CliError> {
    let mut t = Table::new("psi", &["x", "y", "u", "exact", "dickman", "bound"]);
    let cfg = scan_config(c);
    let table = dickman_table(c)?;
    for &xf in &c.x_grid {
        let x = int_x(xf);
        for &y in &c.y_list {
            let q = PsiQuery::new(x, y, c.method.into());
            let exact = psi_exact(&q, &cfg).ctx(|| format!("psi_exact(x = {x}, y = {y})"))?;
            let (xr, yr) = (x as f64, y as f64);
            let (dickman, bound) = if y <= x {
                (
                    Some(psi_dickman(xr, yr, &table).ctx(|| format!("psi_dickman(x = {x}, y = {y})"))?),
                    Some(psi_elementary_bound(xr, yr).ctx(|| format!("psi_elementary_bound(x = {x}, y = {y})"))?),
                )
            } else {
                (None, None)
            };
            t.push(vec![
                x.into(),
                y.into(),
                u_of(xr, yr).into(),
                exact.into(),
                dickman.into(),
                bound.into(),
            ]);
        }
    }
    Ok(t)
}

fn cmd_asym(c: &RunConfig) -> Result<Table, CliError> {
    let mut t = Table::new(
        "asym",
        &[
            "x",
            "r",
            "L",
            "g_r",
            "u0",
            "u0_series",
            "refined",
            "t_r_shape",
            "inv_moment_shape",
            "saddle_corrected",
            "saddle_original",
            "leading",
            "double_l",
        ],
    );
    let table = dickman_table(c)?;
    for &x in &c.x_grid {
        let ctx = |op: &str| format!("{op}(x = {x})");
        let e = elementary(x, &c.r_list).ctx(|| ctx("elementary"))?;
        let f = exponent_forms(x).ctx(|| ctx("exponent_forms"))?;
        let fc = saddle_point_count(x, &table, true).ctx(|| ctx("saddle_point_count"))?;
        let fo = saddle_point_count(x, &table, false).ctx(|| ctx("saddle_point_count"))?;
        for &(r, g) in &e.g_r {
            let tr = t_r_shape(x, r).ctx(|| format!("t_r_shape(x = {x}, r = {r})"))?;
            let th3 = if r > 0.0 {
                Some(inv_moment_shape(x, r).ctx(|| format!("inv_moment_shape(x = {x}, r = {r})"))?)
            } else {
                None
            };
            t.push(vec![
                x.into(),
                r.into(),
                e.l.into(),
                g.into(),
                e.u0.into(),
                e.u0_series.into(),
                f.refined.into(),
                tr.into(),
                th3.into(),
                fc.into(),
                fo.into(),
                f.leading.into(),
                f.double_l.into(),
            ]);
        }
    }
    Ok(t)
}

fn cmd_compare<E: Write>(c: &RunConfig, err: &mut E) -> Result<Table, CliError> {
    let mut t = Table::new(
        "compare",
        &[
            "x",
            "n_exact",
            "t0_exact",
            "sum_inv_p_exact",
            "i_t0",
            "i_recip_p",
            "n_main",
            "n_elementary",
            "ratio_n_main",
            "ratio_t0",
            "ratio_recip_p",
            "ratio_n_t0",
        ],
    );
    let cfg = scan_config(c);
    let table = dickman_table(c)?;
    let quad = Quadrature::with_rel_tol(c.tolerance);
    for &xf in &c.x_grid {
        let x = int_x(xf);
        let start = Instant::now();
        let r = compare(x, &table, &quad, &cfg).ctx(|| format!("compare(x = {x})"))?;
        for (name, f) in [
            ("i_t0", integral_t0 as fn(_, _, _, _) -> _),
            ("i_recip_p", integral_recip_p),
        ] {
            let q = f(x as f64, &table, Parametrization::UForm, &quad).ctx(|| format!("{name}(x = {x})"))?;
            let _ = writeln!(
                err,
                "x = {x}: {name} error estimate {:.3e}, truncation bound {:.3e} at u = {}, {} evaluations",
                q.abs_error_estimate, q.truncation_bound, q.u_upper, q.evaluations
            );
        }
        let _ = writeln!(err, "x = {x}: {:.3} s", start.elapsed().as_secs_f64());
        t.push(vec![
            r.x.into(),
            r.n_exact.into(),
            r.t0_exact.into(),
            r.sum_inv_p_exact.into(),
            r.i_t0.into(),
            r.i_recip_p.into(),
            r.n_main.into(),
            r.n_elementary.into(),
            r.ratio_n_main.into(),
            r.ratio_t0.into(),
            r.ratio_recip_p.into(),
            r.ratio_n_t0.into(),
        ]);
    }
    Ok(t)
}

fn cmd_moments(c: &RunConfig) -> Result<Table, CliError> {
    let mut cols: Vec<String> = vec!["x".into(), "r".into(), "J".into()];
    cols.extend((1..=c.j_terms).map(|j| format!("a_{j}")));
    cols.extend(
        [
            "sum_s_r",
            "formula",
            "ratio",
            "sum_inv_s_r",
            "inv_moment_shape",
            "ratio_inv",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut t = Table {
        command: "moments",
        columns: cols,
        rows: Vec::new(),
    };
    let consts = c
        .r_list
        .iter()
        .map(|&r| moment_constants(r, c.j_terms).ctx(|| format!("moment_constants(r = {r}, J = {})", c.j_terms)))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = scan_config(c);
    for &xf in &c.x_grid {
        let x = int_x(xf);
        let rep = exact_sums(x, &c.r_list, &cfg).ctx(|| format!("exact_sums(x = {x})"))?;
        for (m, mc) in rep.moments.iter().zip(&consts) {
            let xr = x as f64;
            let formula = s_moment_expansion(xr, c.j_terms, mc).ctx(|| format!("s_moment_expansion(x = {x})"))?;
            let rhs = inv_moment_shape(xr, m.r).ctx(|| format!("inv_moment_shape(x = {x}, r = {})", m.r))?;
            let mut row: Vec<Cell> = vec![x.into(), m.r.into(), (c.j_terms as u64).into()];
            row.extend(mc.a.iter().map(|&a| Cell::Float(a)));
            row.extend([
                m.sum_sr.into(),
                formula.into(),
                (m.sum_sr / formula).into(),
                m.sum_inv_sr.into(),
                rhs.into(),
                (m.sum_inv_sr / rhs).into(),
            ]);
            t.push(row);
        }
    }
    Ok(t)
}

fn cmd_rho(c: &RunConfig) -> Result<Table, CliError> {
    let mut t = Table::new("rho", &["u", "rho", "rho_prime", "xi"]);
    let table = dickman_table(c)?;
    for &u in &c.u_list {
        let rho = table.rho(u).ctx(|| format!("rho(u = {u})"))?;
        let d = table.rho_prime(u).ctx(|| format!("rho_prime(u = {u})"))?;
        let x = if u > 1.0 {
            Some(xi(u).ctx(|| format!("xi(u = {u})"))?)
        } else {
            None
        };
        t.push(vec![u.into(), rho.into(), d.into(), x.into()]);
    }
    Ok(t)
}

struct Checks {
    table: Table,
    failed: usize,
}

impl Checks {
    fn new() -> Self {
        Self {
            table: Table::new(
                "selftest",
                &["check", "value", "reference", "abs_diff", "tolerance", "status"],
            ),
            failed: 0,
        }
    }

    fn add(&mut self, name: &str, value: f64, reference: f64, tol: f64) {
        let diff = (value - reference).abs();
        let pass = diff <= tol;
        if !pass {
            self.failed += 1;
        }
        self.table.push(vec![
            name.into(),
            value.into(),
            reference.into(),
            diff.into(),
            tol.into(),
            if pass { "pass" } else { "fail" }.into(),
        ]);
    }
}

fn cmd_selftest<E: Write>(c: &RunConfig, err: &mut E) -> Result<Outcome, CliError> {
    use std::f64::consts::{LN_2, PI};
    let mut k = Checks::new();
    let cfg = scan_config(c);
    let table = dickman_table(c)?;

    k.add(
        "rho(2) = 1 - log 2",
        table.rho(2.0).ctx(|| "rho(2)".into())?,
        1.0 - LN_2,
        1e-12,
    );
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let u = 1.0 + i as f64 / 100.0;
        worst = worst.max((table.rho(u).ctx(|| format!("rho({u})"))? - (1.0 - u.ln())).abs());
    }
    k.add("max |rho - (1 - log u)| on [1,2]", worst, 0.0, 1e-12);
    k.add("dickman residual certificate", table.residual_bound(), 0.0, 1e-10);
    let _ = writeln!(
        err,
        "dickman table: {} intervals, residual {:.3e}",
        table.intervals(),
        table.residual_bound()
    );

    let small = exact_sums(10, &[1.0], &cfg).ctx(|| "exact_sums(x = 10)".into())?;
    k.add("N(10)", small.n_x as f64, 3.0, 0.0);
    let rep = exact_sums(100_000, &[1.0, 2.0], &cfg).ctx(|| "exact_sums(x = 100000)".into())?;
    k.add("N(1e5)", rep.n_x as f64, 2806.0, 0.0);
    k.add("N(1e5) dual count", rep.n_x_dual as f64, rep.n_x as f64, 0.0);
    k.add("T0(1e5)", rep.t0 as f64, 1893.0, 0.0);
    k.add("sum S(n) to 1e5", rep.moments[0].sum_sr, 793183093.0, 0.0);
    k.add("sum P(n) to 1e5", rep.moments[0].sum_pr, 793111753.0, 0.0);

    let psi = lpf_core::smarandache::psi_over_primes(100_000);
    for m in &rep.moments {
        let via: f64 = psi.iter().map(|&(p, v)| v as f64 / (p as f64).powf(m.r)).sum();
        k.add(
            &format!("sum 1/P^{} identity, relative", m.r),
            (m.sum_inv_pr - via).abs() / via,
            0.0,
            1e-12,
        );
    }

    for y in [2u64, 10, 100, 1000] {
        let a = psi_exact(&PsiQuery::new(100_000, y, PsiMethod::Sieve), &cfg).ctx(|| format!("psi(1e5, {y})"))?;
        let b = psi_exact(&PsiQuery::new(100_000, y, PsiMethod::Buchstab), &cfg).ctx(|| format!("psi(1e5, {y})"))?;
        k.add(&format!("psi(1e5,{y}) sieve - buchstab"), a as f64, b as f64, 0.0);
    }

    let quad = Quadrature::with_rel_tol(c.tolerance.max(1e-11));
    for (name, f) in [("T0", integral_t0 as fn(_, _, _, _) -> _), ("recipP", integral_recip_p)] {
        let u = f(1e6, &table, Parametrization::UForm, &quad).ctx(|| format!("{name} u-form"))?;
        let t = f(1e6, &table, Parametrization::TForm, &quad).ctx(|| format!("{name} t-form"))?;
        k.add(
            &format!("{name} integral t/u forms at 1e6, relative"),
            (u.value - t.value).abs() / u.value,
            0.0,
            1e-9,
        );
    }

    k.add(
        "zeta(2)",
        zeta_deriv(0, 2.0).ctx(|| "zeta(2)".into())?,
        PI * PI / 6.0,
        1e-12,
    );
    k.add(
        "zeta'(2)",
        zeta_deriv(1, 2.0).ctx(|| "zeta'(2)".into())?,
        -0.937_548_254_315_843_8,
        1e-10,
    );
    for r in [0.5, 1.0, 2.0] {
        let mc = moment_constants(r, 1).ctx(|| format!("moment_constants(r = {r})"))?;
        let want = zeta_deriv(0, r + 1.0).ctx(|| "zeta".into())? / (r + 1.0);
        k.add(&format!("a_1 at r = {r}"), mc.a[0], want, 1e-12 * want);
    }

    let failed = k.failed;
    let status = if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Selftest(failed))
    };
    Ok((k.table, status))
}
