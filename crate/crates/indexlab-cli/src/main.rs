mod complex;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;

use indexlab::model::{self, ParamPair, ScalarFn, TriangleOrientation};
use indexlab::quantize::{self, DumpHeader, GridSpec};
use indexlab::verify::{self, ScenarioReport, Settings};
use indexlab::winding::{self, SampledCurve};
use indexlab::Error;

use complex::{format_complex, parse_complex};

#[derive(Parser)]
#[command(name = "indexlab", version, about = "Index identities for wave operators of the inverse-square family")]
struct Cli {
    #[command(flatten)]
    settings: SettingsArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SettingsArgs {
    /// Grid points N on the real line (power of two); sets the momentum resolution of line quantizations
    #[arg(long = "grid-n", global = true, default_value_t = 1024)]
    grid_n: usize,
    /// Half-width L of the spatial window [-L, L)
    #[arg(long = "grid-l", global = true, default_value_t = 40.0)]
    grid_l: f64,
    /// Fraction of the grid used to blend position factors back to their left limit
    #[arg(long, global = true, default_value_t = 0.1)]
    collar: f64,
    /// Singular values below this count as kernel or cokernel directions
    #[arg(long = "tau-low", global = true, default_value_t = quantize::TAU_LOW)]
    tau_low: f64,
    /// Singular values above this count as regular; the band in between must be empty
    #[arg(long = "tau-high", global = true, default_value_t = quantize::TAU_HIGH)]
    tau_high: f64,
    /// Momentum modes |k| <= K of each Floquet fiber included in traces
    #[arg(long = "modes-K", global = true, default_value_t = 48)]
    modes_k: usize,
    /// Momentum modes |k| <= K_big used to form fiber products before tracing
    #[arg(long = "modes-K-big", global = true, default_value_t = 128)]
    modes_k_big: usize,
    /// Quadrature points Q over the quasi-momentum θ in [0, 2n)
    #[arg(long = "theta-points", global = true, default_value_t = 32)]
    theta_points: usize,
    /// Grid points for the chain-rule residual of the wave operators
    #[arg(long = "chain-n", global = true, default_value_t = 2048)]
    chain_n: usize,
    /// Compactification cutoff in x and ξ for the triangle boundary
    #[arg(long, global = true, default_value_t = 60.0)]
    cutoff: f64,
    /// Half-widths T for the mean winding of almost-periodic symbols
    #[arg(long = "ap-schedule", global = true, value_delimiter = ',', default_values_t = winding::AP_SCHEDULE.to_vec())]
    ap_schedule: Vec<f64>,
}

impl SettingsArgs {
    fn settings(&self) -> Settings {
        Settings {
            grid: GridSpec::new(self.grid_l, self.grid_n, self.collar),
            tau_low: self.tau_low,
            tau_high: self.tau_high,
            modes_k: self.modes_k,
            modes_k_big: self.modes_k_big,
            theta_points: self.theta_points,
            chain_n: self.chain_n,
            cutoff: self.cutoff,
            ap_schedule: self.ap_schedule.clone(),
            ..Settings::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format for reports
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Curve {
    /// Scattering symbol S(x) of the pair (m, κ; m', κ')
    Scattering,
    /// Momentum edge Ξ_{1/2}(-ξ)Ξ_m(ξ) of the triangle symbol
    Edge1,
    /// Momentum edge Ξ_{1/2}(-ξ)Ξ_{-m}(ξ) of the triangle symbol
    Edge3,
    /// Periodic function F(x) of the imaginary-order model m = in
    FSymbol,
}

#[derive(Subcommand)]
enum Command {
    /// Triangle winding = eigenvalue count = minus the index, for real order m in (0,1)
    Levinson {
        /// Order m of the operator H_{m,κ}
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        /// Real coupling κ
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        kappa: Complex64,
    },
    /// One-period winding of the scattering symbol = periodic trace of [W, W*], for m = in
    Periodic {
        /// Frequency n of the imaginary order m = in
        #[arg(long)]
        n: f64,
        /// Unit-modulus coupling κ (a+bi or exp:θ)
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        kappa: Complex64,
        /// Also write the fiber matrix at θ = 0 to this file
        #[arg(long = "dump-fiber")]
        dump_fiber: Option<PathBuf>,
    },
    /// Pair of one-period windings = pair of traces, for target m = in and real reference m'
    Asymptotic(MixedArgs),
    /// Triangle winding of the reference-left symbol = minus the eigenvalue count of (m', κ')
    Relative(MixedArgs),
    /// Mean winding of the scattering symbol = almost-periodic trace = -2(n - n')
    AlmostPeriodic(ImaginaryPairArgs),
    /// Eigenvalue counts in growing windows and their ratio n/n'
    Density {
        #[command(flatten)]
        pair: ImaginaryPairArgs,
        /// Window parameters T
        #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 100.0])]
        t: Vec<f64>,
    },
    /// Residuals of the special-function and symbol identities
    Identities,
    /// Levinson check over a grid of (m, κ)
    Sweep {
        /// Orders m
        #[arg(long = "m-list", value_delimiter = ',', allow_hyphen_values = true, default_values_t = verify::LEVINSON_M.to_vec())]
        m_list: Vec<f64>,
        /// Real couplings κ
        #[arg(long = "kappa-list", value_delimiter = ',', allow_hyphen_values = true, default_values_t = verify::LEVINSON_KAPPA.to_vec())]
        kappa_list: Vec<f64>,
    },
    /// Sample a symbol curve as CSV with columns x, re, im, phase
    DumpCurve {
        /// Curve to sample
        #[arg(long, value_enum)]
        which: Curve,
        /// Order m of the target (a+bi; imaginary for f-symbol)
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        m: Complex64,
        /// Coupling κ of the target
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        kappa: Complex64,
        /// Order m' of the reference
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex, default_value = "0.5+0i")]
        mprime: Complex64,
        /// Coupling κ' of the reference
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex, default_value = "0+0i")]
        kprime: Complex64,
        /// Sampling range start:end:count
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "-20:20:2001")]
        range: (f64, f64, usize),
    },
}

#[derive(Args)]
struct MixedArgs {
    /// Frequency n of the imaginary order m = in
    #[arg(long)]
    n: f64,
    /// Unit-modulus coupling κ (a+bi or exp:θ)
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    kappa: Complex64,
    /// Real order m' of the reference operator
    #[arg(long)]
    mprime: f64,
    /// Real coupling κ' of the reference operator
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    kprime: Complex64,
}

#[derive(Args)]
struct ImaginaryPairArgs {
    /// Frequency n of the target order m = in
    #[arg(long)]
    n: f64,
    /// Unit-modulus coupling κ of the target
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    kappa: Complex64,
    /// Frequency n' of the reference order m' = in'
    #[arg(long)]
    nprime: f64,
    /// Unit-modulus coupling κ' of the reference
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    kprime: Complex64,
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("invalid range `{s}`, expected start:end:count");
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(a < b) || n < 2 {
        return Err(bad());
    }
    Ok((a, b, n))
}

enum Failure {
    Usage(String),
    Run(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn real(z: Complex64, flag: &str) -> Result<f64, Failure> {
    if z.im != 0.0 {
        return Err(Failure::Usage(format!("--{flag} must be real, got {}", format_complex(z))));
    }
    Ok(z.re)
}

fn num(x: f64) -> String {
    serde_json::to_string(&verify::round_sig(x)).unwrap_or_else(|_| "NaN".into())
}

fn reports_csv(reports: &[ScenarioReport]) -> String {
    let mut s = String::from("scenario,label,value,expected,tolerance,pass\n");
    for r in reports {
        let name = serde_json::to_value(r.scenario).unwrap();
        for c in &r.checks {
            s.push_str(&format!(
                "{},\"{}\",{},{},{},{}\n",
                name.as_str().unwrap_or(""),
                c.label.replace('"', "'"),
                num(c.value),
                num(c.expected),
                num(c.tolerance),
                c.pass
            ));
        }
    }
    s
}

fn reports_json(reports: &[ScenarioReport], single: bool) -> String {
    let v = if single { reports[0].to_json() } else { serde_json::Value::Array(reports.iter().map(|r| r.to_json()).collect()) };
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut so = std::io::stdout().lock();
            match so.write_all(text.as_bytes()).and_then(|_| so.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn dump_curve(which: Curve, m: Complex64, kappa: Complex64, mp: Complex64, kp: Complex64, range: (f64, f64, usize)) -> Result<String, Failure> {
    let p = model::validate_sa(m, kappa).map_err(Error::from)?;
    let f: ScalarFn = match which {
        Curve::Scattering => {
            let q = model::validate_sa(mp, kp).map_err(Error::from)?;
            let pair = ParamPair::new(p, q);
            Arc::new(move |x| model::scattering_symbol(&pair, x))
        }
        Curve::Edge1 | Curve::Edge3 => {
            let t = Arc::new(model::triangle_symbol(&p, TriangleOrientation::TargetLeft).map_err(Error::from)?);
            if which == Curve::Edge1 {
                Arc::new(move |xi| t.edge1(xi))
            } else {
                Arc::new(move |xi| t.edge3(xi))
            }
        }
        Curve::FSymbol => {
            if p.branch != model::Branch::ImaginaryBranch {
                return Err(Failure::Usage("--which f-symbol needs an imaginary --m".into()));
            }
            model::f_symbol(p.m.im, p.varsigma)
        }
    };
    let (a, b, n) = range;
    let curve = SampledCurve::uniform(&*f, a, b, n).map_err(Error::from)?;
    let phase = winding::unwrapped_phase(&curve, &*f).map_err(Error::from)?;
    let mut s = String::from("x,re,im,phase\n");
    for ((x, z), ph) in curve.params().iter().zip(curve.values()).zip(&phase) {
        s.push_str(&format!("{},{},{},{}\n", num(*x), num(z.re), num(z.im), num(*ph)));
    }
    Ok(s)
}

fn dump_fiber(n: f64, kappa: Complex64, settings: &Settings, path: &PathBuf) -> Result<(), Failure> {
    let p = model::validate_sa(Complex64::new(0.0, n), kappa).map_err(Error::from)?;
    let w = model::wave_factors(&ParamPair::against_free(p)).map_err(Error::from)?;
    let fspec = settings.floquet(n);
    let fib = quantize::fiber_quantize(&w, 0.0, fspec, quantize::default_lmax(n)).map_err(Error::from)?;
    let header = DumpHeader { n: fib.matrix.nrows() as u64, l: std::f64::consts::PI / n.abs(), k: fspec.k as u64, theta: 0.0 };
    quantize::dump_matrix(path, &fib.matrix, header)?;
    Ok(())
}

fn run(cli: Cli) -> Result<Vec<ScenarioReport>, Failure> {
    let s = cli.settings.settings();
    let reports = match cli.command {
        Command::Levinson { m, kappa } => vec![verify::check_levinson(m, real(kappa, "kappa")?, &s)?],
        Command::Periodic { n, kappa, dump_fiber: path } => {
            let r = verify::check_periodic(n, kappa, &s)?;
            if let Some(path) = path {
                dump_fiber(n, kappa, &s, &path)?;
            }
            vec![r]
        }
        Command::Asymptotic(a) => vec![verify::check_asymptotic(a.n, a.kappa, a.mprime, real(a.kprime, "kprime")?, &s)?],
        Command::Relative(a) => vec![verify::check_relative(a.n, a.kappa, a.mprime, real(a.kprime, "kprime")?, &s)?],
        Command::AlmostPeriodic(a) => vec![verify::check_almost_periodic(a.n, a.kappa, a.nprime, a.kprime, &s)?],
        Command::Density { pair: a, t } => vec![verify::check_density(a.n, a.kappa, a.nprime, a.kprime, &t)?],
        Command::Identities => vec![verify::check_identities(&s)?],
        Command::Sweep { m_list, kappa_list } => {
            let cells: Vec<(f64, f64)> = m_list.iter().flat_map(|&m| kappa_list.iter().map(move |&k| (m, k))).collect();
            let out: Result<Vec<_>, Error> = cells.par_iter().map(|&(m, k)| verify::check_levinson(m, k, &s)).collect();
            out?
        }
        Command::DumpCurve { which, m, kappa, mprime, kprime, range } => {
            let text = dump_curve(which, m, kappa, mprime, kprime, range)?;
            emit(&text, &cli.output.out)?;
            return Ok(Vec::new());
        }
    };
    let single = reports.len() == 1;
    let text = match cli.output.format {
        Format::Json => reports_json(&reports, single),
        Format::Csv => reports_csv(&reports),
    };
    emit(&text, &cli.output.out)?;
    Ok(reports)
}

fn configure_threads() {
    if let Ok(v) = std::env::var("INDEXLAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring INDEXLAB_THREADS={v}"),
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(reports) => {
            for r in reports.iter().filter(|r| !r.pass) {
                for c in r.failures() {
                    eprintln!("failed: {} = {} (expected {} ± {})", c.label, c.value, c.expected, c.tolerance);
                }
            }
            if reports.iter().any(|r| r.numeric_guard) {
                ExitCode::from(3)
            } else if reports.iter().all(|r| r.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric_guard() { 3 } else { 2 })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
