#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use specquant::bargmann::{bargmann_transform, hermite_line, phi0_norm, uncertainty_check, Lattice};
use specquant::bs::{bs_eigenvalues, compare_spectra, convergence_order, default_match_radius, PAIRS_HEADER, SUMMARY_HEADER};
use specquant::geometry::{action_profile, trace_level_curve};
use specquant::maslov::{cocycle_product, maslov_loop, sqrt_holonomy, winding_number};
use specquant::quasimode::{quasimode_residual, RESIDUAL_HEADER};
use specquant::series::{compose, lagrange_invert, BigRational, FormalSymbol, SymbolFile};
use specquant::spectrum::reference_spectrum;
use specquant::{fmt_g17, SymbolDef};

use config::{ConfigError, RunConfig, SymcalcOp};

#[derive(Parser)]
#[command(name = "specquant", version, about = "Semiclassical spectra of one-dimensional polynomial Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Field overrides as `--dot.path value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check compactness, regularity and ellipticity of the symbol.
    Validate(Args),
    /// Tabulate action and period over the energy grid.
    Action(Args),
    /// Bohr-Sommerfeld eigenvalues in the window.
    Bs(Args),
    /// Certified eigenvalues of the discretized operator.
    Reference(Args),
    /// Match predictions against the reference spectrum.
    Compare(Args),
    /// Winding, square-root holonomy and cocycle sign at `lambda`.
    Maslov(Args),
    /// Residual sweep of the WKB quasimode at `lambda`.
    Quasimode(Args),
    /// Isometry and uncertainty checks of the Bargmann transform.
    BargmannCheck(Args),
    /// Exact formal-symbol operations on symbol files.
    Symcalc(Args),
}

enum Failure {
    Config(ConfigError),
    Numerical(specquant::Error),
    Validation(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<specquant::Error> for Failure {
    fn from(e: specquant::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (code, detail, exit) = match self {
            Failure::Config(e) => (e.code.to_string(), e.detail.clone(), 3),
            Failure::Numerical(e) => (e.code().to_string(), e.to_string(), 2),
            Failure::Validation(d) => ("VALIDATION_FAILED".into(), d.clone(), 1),
            Failure::Io(d) => ("IO".into(), d.clone(), 2),
        };
        eprintln!("ERROR {code}: {}", detail.replace('\n', " "));
        ExitCode::from(exit)
    }
}

type Run = Result<(), Failure>;

/// Results go to `output_dir/name` when configured, to stdout otherwise.
struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    fn new(cfg: &RunConfig) -> Result<Self, Failure> {
        let dir = cfg.output_dir.as_ref().map(PathBuf::from);
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| Failure::Io(format!("{}: {e}", d.display())))?;
            let text = serde_json::to_string_pretty(cfg).expect("config serializes");
            write_file(&d.join("config.json"), &(text + "\n"))?;
        }
        Ok(Self { dir })
    }

    fn emit(&self, name: &str, text: &str) -> Run {
        match &self.dir {
            Some(d) => write_file(&d.join(name), text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Run {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("SPECQUANT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError::new("CONFIG_INVALID", format!("SPECQUANT_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::new("CONFIG_INVALID", e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return Failure::Config(ConfigError::new("USAGE", first)).report();
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn run(command: Command) -> Run {
    configure_threads()?;
    let (Command::Validate(a)
    | Command::Action(a)
    | Command::Bs(a)
    | Command::Reference(a)
    | Command::Compare(a)
    | Command::Maslov(a)
    | Command::Quasimode(a)
    | Command::BargmannCheck(a)
    | Command::Symcalc(a)) = &command;
    let overrides = config::parse_overrides(&a.overrides)?;
    let cfg = config::load(&a.config, &overrides)?;
    let sink = Sink::new(&cfg)?;
    if let Command::Symcalc(_) = command {
        return symcalc(&cfg);
    }
    if let Command::BargmannCheck(_) = command {
        return bargmann_check(&cfg, &sink);
    }
    let sym = cfg.symbol.build()?;
    match command {
        Command::Validate(_) => validate(&cfg, &sym, &sink),
        Command::Action(_) => {
            let profile = action_profile(&sym, &cfg.lambda_nodes(), cfg.tolerances.trace)?;
            sink.emit("profile.csv", &profile.to_csv())
        }
        Command::Bs(_) => bs(&cfg, &sym, &sink),
        Command::Reference(_) => reference(&cfg, &sym, &sink),
        Command::Compare(_) => compare(&cfg, &sym, &sink),
        Command::Maslov(_) => maslov(&cfg, &sym, &sink),
        Command::Quasimode(_) => quasimode(&cfg, &sym, &sink),
        Command::BargmannCheck(_) | Command::Symcalc(_) => unreachable!(),
    }
}

fn validate(cfg: &RunConfig, sym: &SymbolDef, sink: &Sink) -> Run {
    let w = cfg.window;
    let report = specquant::symbol::validate_assumptions(sym, w.e1, w.e2, w.delta, &cfg.grid)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    sink.emit("assumptions.json", &(text + "\n"))?;
    if report.all_pass() {
        return Ok(());
    }
    let failed: Vec<&str> = [
        (report.h1_sublevel_compact, "H1 sublevel set not compact"),
        (report.h2_regular_connected, "H2 level curves not regular and connected"),
        (report.h3_elliptic, "H3 not elliptic"),
    ]
    .iter()
    .filter(|(ok, _)| !ok)
    .map(|(_, d)| *d)
    .collect();
    Err(Failure::Validation(failed.join("; ")))
}

fn bs(cfg: &RunConfig, sym: &SymbolDef, sink: &Sink) -> Run {
    let profile = action_profile(sym, &cfg.lambda_nodes(), cfg.tolerances.trace)?;
    let mut out = String::from("hbar,k,action,lambda\n");
    for &h in &cfg.hbar_list {
        for p in bs_eigenvalues(&profile, h, cfg.window.e1, cfg.window.e2)? {
            let _ = writeln!(out, "{},{},{},{}", fmt_g17(h), p.k, fmt_g17(p.action), fmt_g17(p.lambda));
        }
    }
    sink.emit("bs.csv", &out)
}

fn reference_all(cfg: &RunConfig, sym: &SymbolDef) -> specquant::Result<Vec<specquant::spectrum::ReferenceSpectrum>> {
    cfg.hbar_list
        .par_iter()
        .map(|&h| {
            let spec = cfg.discretization.at(h);
            spec.validate()?;
            reference_spectrum(sym, &spec, cfg.window.e1, cfg.window.e2)
        })
        .collect()
}

fn reference(cfg: &RunConfig, sym: &SymbolDef, sink: &Sink) -> Run {
    let spectra = reference_all(cfg, sym)?;
    if spectra.len() == 1 {
        return sink.emit("reference.csv", &spectra[0].to_csv());
    }
    if sink.dir.is_some() {
        for (i, s) in spectra.iter().enumerate() {
            sink.emit(&format!("reference_{i}.csv"), &s.to_csv())?;
        }
        return Ok(());
    }
    let blocks: Vec<String> = spectra.iter().map(|s| s.to_csv()).collect();
    sink.emit("", &blocks.join("\n"))
}

fn compare(cfg: &RunConfig, sym: &SymbolDef, sink: &Sink) -> Run {
    let (e1, e2) = (cfg.window.e1, cfg.window.e2);
    let (profile, spectra) = rayon::join(
        || action_profile(sym, &cfg.lambda_nodes(), cfg.tolerances.trace),
        || reference_all(cfg, sym),
    );
    let (profile, spectra) = (profile?, spectra?);
    let mut reports = Vec::new();
    for (&h, spec) in cfg.hbar_list.iter().zip(&spectra) {
        let predictions = bs_eigenvalues(&profile, h, e1, e2)?;
        let radius = default_match_radius(&profile, h, e1, e2, cfg.tolerances.match_radius_cap)?;
        let mut report = compare_spectra(&predictions, &spec.eigenvalues, radius)?;
        report.hbar = h;
        reports.push(report);
    }
    let mut pairs = String::from(PAIRS_HEADER);
    let mut summary = String::from(SUMMARY_HEADER);
    for r in &reports {
        pairs.push_str(&r.pair_rows());
        summary.push_str(&r.summary_row());
    }
    if sink.dir.is_some() {
        sink.emit("pairs.csv", &pairs)?;
    }
    sink.emit("summary.csv", &summary)?;
    if reports.len() >= 3 {
        match convergence_order(&reports) {
            Ok(order) => {
                if sink.dir.is_some() {
                    sink.emit("convergence.csv", &format!("order\n{}\n", fmt_g17(order)))?;
                }
                eprintln!("convergence order {}", fmt_g17(order));
            }
            Err(e) => eprintln!("convergence order unavailable: {e}"),
        }
    }
    Ok(())
}

fn maslov(cfg: &RunConfig, sym: &SymbolDef, sink: &Sink) -> Run {
    let curve = trace_level_curve(sym, cfg.lambda, cfg.tolerances.trace)?;
    let lp = maslov_loop(sym, &curve)?;
    let winding = winding_number(&lp)?;
    let holonomy = sqrt_holonomy(&lp)?;
    let cocycle = cocycle_product(sym, &curve, cfg.maslov.m)?;
    sink.emit("maslov.txt", &format!("winding={winding} holonomy={holonomy} cocycle={cocycle}\n"))
}

fn quasimode(cfg: &RunConfig, sym: &SymbolDef, sink: &Sink) -> Run {
    let curve = trace_level_curve(sym, cfg.lambda, cfg.tolerances.trace)?;
    let q = &cfg.quasimode;
    let rows: Vec<specquant::Result<f64>> =
        q.sweep.par_iter().map(|&h| quasimode_residual(sym, &curve, h, &q.contour, q.points)).collect();
    let mut out = String::from(RESIDUAL_HEADER);
    for (&h, r) in q.sweep.iter().zip(rows) {
        let _ = writeln!(out, "{},{}", fmt_g17(h), fmt_g17(r?));
    }
    sink.emit("quasimode.csv", &out)
}

fn bargmann_check(cfg: &RunConfig, sink: &Sink) -> Run {
    let b = &cfg.bargmann;
    let cases: Vec<(f64, usize)> = b.hbar_list.iter().flat_map(|&h| (0..=b.max_k).map(move |k| (h, k))).collect();
    let rows: Vec<specquant::Result<(f64, f64)>> = cases
        .par_iter()
        .map(|&(h, k)| {
            let v = hermite_line(k, h);
            let u = bargmann_transform(&v, h, Lattice::for_hbar(h))?;
            let n = v.l2_norm();
            Ok(((phi0_norm(&u)? - n).abs() / n, uncertainty_check(&u)?))
        })
        .collect();
    let mut out = String::from("hbar,k,isometry_error,uncertainty_ratio\n");
    let mut failed = Vec::new();
    for (&(h, k), r) in cases.iter().zip(rows) {
        let (iso, ratio) = r?;
        let _ = writeln!(out, "{},{k},{},{}", fmt_g17(h), fmt_g17(iso), fmt_g17(ratio));
        if !(iso <= cfg.tolerances.isometry) || !(ratio <= 1.0 + cfg.tolerances.uncertainty) {
            failed.push(format!("hbar={h} k={k}"));
        }
    }
    sink.emit("bargmann.csv", &out)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("tolerance exceeded at {}", failed.join(", "))))
    }
}

fn read_symbol(path: &Option<String>, field: &str) -> Result<FormalSymbol<BigRational>, Failure> {
    let path = path
        .as_ref()
        .ok_or_else(|| ConfigError::new("CONFIG_INVALID", format!("symcalc.{field} is required for this operation")))?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ConfigError::new("CONFIG_NOT_FOUND", path.clone())
        } else {
            ConfigError::new("CONFIG_UNREADABLE", format!("{path}: {e}"))
        }
    })?;
    let file: SymbolFile = serde_json::from_str(&text).map_err(|e| ConfigError::new("CONFIG_PARSE", format!("{path}: {e}")))?;
    Ok(file.to_symbol()?)
}

fn symcalc(cfg: &RunConfig) -> Run {
    let s = &cfg.symcalc;
    let f = read_symbol(&s.input, "input")?;
    let result = match s.op {
        SymcalcOp::Invert => lagrange_invert(&f)?,
        SymcalcOp::Compose => compose(&f, &read_symbol(&s.second, "second")?)?,
        SymcalcOp::Product => f.product(&read_symbol(&s.second, "second")?)?,
        SymcalcOp::Roundtrip => compose(&f, &lagrange_invert(&f)?)?,
    };
    let text = serde_json::to_string_pretty(&SymbolFile::from_symbol(&result)).expect("symbol serializes") + "\n";
    match &s.output {
        Some(p) => write_file(Path::new(p), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
