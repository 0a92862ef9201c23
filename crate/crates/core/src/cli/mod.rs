//! Command-line front end: `dim`, `spectrum`, `diverge`, `localdim`,
//! `verify`. Exit codes: 0 success, 1 verification failure, 2 config
//! error, 3 degenerate request.

pub mod csv;
pub mod svg;
pub mod verify;

use crate::dimension::dimension_report;
use crate::files;
use crate::localdim;
use crate::spectra::{self, GridSpec, SpectrumError, SpectrumKind};
use clap::{Parser, Subcommand, ValueEnum};
use csv::sig12;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "sponge-spectra",
    about = "Dimensions and multifractal spectra of self-affine Sierpinski sponges",
    version
)]
pub struct Cli {
    /// Worker threads for curve evaluation (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Packing,
    Hausdorff,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Hausdorff, packing, McMullen, and box-count dimensions of a sponge.
    Dim { sponge: PathBuf },
    /// Sample a Birkhoff-average spectrum over its domain.
    Spectrum {
        sponge: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, value_enum, default_value = "packing")]
        kind: KindArg,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        /// Overrides the sampled alpha range as "lo,hi" (default: all of
        /// the achievable-average interval).
        #[arg(long)]
        range: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Packing dimension of a divergence set E_phi(A) for an interval A.
    Diverge {
        sponge: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        /// Interval "lo,hi" of accumulation averages.
        #[arg(long = "box")]
        interval: String,
    },
    /// Local-dimension spectrum of a Bernoulli measure (vssc declared).
    Localdim {
        sponge: PathBuf,
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Run the consistency suites (grid oracle, closed forms, concavity).
    Verify {
        sponge: PathBuf,
        #[arg(long)]
        potential: Option<PathBuf>,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, Box<dyn std::error::Error>> {
    match cmd {
        Command::Dim { sponge } => cmd_dim(&sponge),
        Command::Spectrum {
            sponge,
            potential,
            kind,
            grid,
            range,
            out,
            format,
        } => cmd_spectrum(
            &sponge,
            &potential,
            kind,
            grid,
            range.as_deref(),
            out.as_deref(),
            format,
        ),
        Command::Diverge {
            sponge,
            potential,
            interval,
        } => cmd_diverge(&sponge, &potential, &interval),
        Command::Localdim {
            sponge,
            measure,
            grid,
            out,
            format,
        } => cmd_localdim(&sponge, &measure, grid, out.as_deref(), format),
        Command::Verify { sponge, potential } => cmd_verify(&sponge, potential.as_deref()),
    }
}

fn cmd_dim(sponge: &Path) -> Result<i32, Box<dyn std::error::Error>> {
    let spec = files::load_sponge(sponge)?;
    let report = dimension_report(&spec);
    println!(
        "sponge d={} bases={:?} digits={}",
        spec.d(),
        spec.bases(),
        spec.digit_count()
    );
    println!("hausdorff {}", sig12(report.hausdorff));
    if let Some(mc) = report.mcmullen {
        println!("mcmullen {}", sig12(mc));
    }
    println!("packing {}", sig12(report.packing));
    for (n, est) in &report.box_estimates {
        println!("box n={} {}", n, sig12(*est));
    }
    let probs: Vec<String> = report
        .optimizer
        .probs()
        .iter()
        .map(|&p| sig12(p))
        .collect();
    println!("optimizer {}", probs.join(" "));
    Ok(EXIT_OK)
}

fn write_outputs(
    curve: &spectra::SpectrumCurve,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<i32, Box<dyn std::error::Error>> {
    let csv_text = csv::curve_to_csv(curve);
    match (out, format) {
        (None, FormatArg::Csv) => {
            print!("{csv_text}");
        }
        (None, _) => {
            return Err("--format svg/both requires --out".into());
        }
        (Some(path), format) => {
            let stem = path.with_extension("");
            match format {
                FormatArg::Csv => std::fs::write(path, csv_text)?,
                FormatArg::Svg => std::fs::write(path, svg::curve_to_svg(curve))?,
                FormatArg::Both => {
                    std::fs::write(stem.with_extension("csv"), csv_text)?;
                    std::fs::write(stem.with_extension("svg"), svg::curve_to_svg(curve))?;
                }
            }
        }
    }
    Ok(EXIT_OK)
}

fn parse_interval(text: &str) -> Result<(f64, f64), Box<dyn std::error::Error>> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err("expected \"lo,hi\"".into());
    }
    let lo: f64 = parts[0].trim().parse()?;
    let hi: f64 = parts[1].trim().parse()?;
    Ok((lo, hi))
}

fn cmd_spectrum(
    sponge: &Path,
    potential: &Path,
    kind: KindArg,
    grid: usize,
    range: Option<&str>,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<i32, Box<dyn std::error::Error>> {
    let spec = files::load_sponge(sponge)?;
    let phi = files::load_potential(potential, &spec)?;
    if grid < 3 {
        return Err("--grid must be at least 3".into());
    }
    let kind = match kind {
        KindArg::Packing => SpectrumKind::PackingBirkhoff,
        KindArg::Hausdorff => SpectrumKind::HausdorffBirkhoff,
    };
    let mut grid_spec = GridSpec::new(grid);
    if let Some(text) = range {
        grid_spec.range = Some(parse_interval(text)?);
    }
    match spectra::spectrum_curve(&spec, &phi, grid_spec, kind) {
        Ok(curve) => write_outputs(&curve, out, format),
        Err(SpectrumError::DegenerateDomain) => {
            eprintln!("error: {}", SpectrumError::DegenerateDomain);
            Ok(EXIT_DEGENERATE)
        }
        Err(err) => Err(err.into()),
    }
}

fn cmd_diverge(
    sponge: &Path,
    potential: &Path,
    interval: &str,
) -> Result<i32, Box<dyn std::error::Error>> {
    let spec = files::load_sponge(sponge)?;
    let phi = files::load_potential(potential, &spec)?;
    let (lo, hi) = parse_interval(interval)?;
    if lo > hi {
        return Err("--box bounds out of order".into());
    }
    if !phi.is_scalar() {
        return Err("diverge expects a scalar potential".into());
    }
    let value = spectra::divergence_spectrum(&spec, &phi, &[(lo, hi)])?;
    println!("diverge box=[{},{}] {}", sig12(lo), sig12(hi), sig12(value));
    Ok(EXIT_OK)
}

fn cmd_localdim(
    sponge: &Path,
    measure_path: &Path,
    grid: usize,
    out: Option<&Path>,
    format: FormatArg,
) -> Result<i32, Box<dyn std::error::Error>> {
    let spec = files::load_sponge(sponge)?;
    let measure = files::load_measure(measure_path, &spec)?;
    files::require_vssc(measure_path, &measure)?;
    let setup = localdim::pj_potential(&spec, &measure.probs)?;
    if grid < 3 {
        return Err("--grid must be at least 3".into());
    }
    match localdim::is_one_dimensional(&setup) {
        Some(k) => eprintln!("measure is one-dimensional at level {k}; exact spectrum"),
        None => eprintln!("measure is not one-dimensional; emitting the lower-bound spectrum"),
    }
    let curve = localdim::localdim_curve(&setup, grid)?;
    write_outputs(&curve, out, format)
}

fn cmd_verify(
    sponge: &Path,
    potential: Option<&Path>,
) -> Result<i32, Box<dyn std::error::Error>> {
    let spec = files::load_sponge(sponge)?;
    let phi = match potential {
        Some(p) => Some(files::load_potential(p, &spec)?),
        None => None,
    };
    // test hook: injects an error into solver-derived values so a corrupted
    // pipeline is visible as FAIL lines
    let perturb = std::env::var("SPONGE_SPECTRA_PERTURB")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.0);
    let results = verify::run_checks(&spec, phi.as_ref(), perturb);
    let (text, ok) = verify::report(&results);
    print!("{text}");
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
