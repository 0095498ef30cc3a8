//! Command-line front end for the spin-dimer toolkit: multiplet spectra,
//! susceptibility and witness curves, entanglement temperatures, fits to
//! measured data, and synthetic datasets.
//!
//! All numeric output carries 12 significant digits so repeated runs are
//! byte-identical. Exit codes: 0 success, 1 usage error, 2 data/file
//! error, 3 fit failure, 4 no entanglement temperature.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spindimer::fit::{FitConfig, FitObjective, FreeParams};
use spindimer::spin::{multiplet_spectrum, SpinValue};
use spindimer::thermo::{chi_model, linear_grid, log_grid};
use spindimer::witness::{entanglement_temperature, te_empirical, witness_value};
use spindimer::{analyze, fmt12, synthesize, ChiUnits, DataSet, Error, ModelParams64};

#[derive(Parser)]
#[command(
    name = "spindimer",
    version,
    about = "Spin-dimer susceptibility, entanglement witness, and fitting toolkit",
    allow_negative_numbers = true,
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-field multiplet spectrum of a spin dimer
    Levels(LevelsArgs),
    /// Susceptibility curve of the dimer-plus-impurity sample model
    Chi(CurveArgs),
    /// Entanglement witness curve of the sample model
    Witness(CurveArgs),
    /// Entanglement temperature (witness zero crossing)
    Te(TeArgs),
    /// Fit the sample model to a susceptibility dataset
    Fit(FitArgs),
    /// Generate a synthetic susceptibility dataset
    Synth(SynthArgs),
}

/// Parameters of the sample model shared by the model-driven subcommands.
#[derive(Args)]
struct ModelFlags {
    /// Dimer g-factor
    #[arg(long)]
    g: f64,
    /// Exchange coupling J in kelvin (negative = antiferromagnetic)
    #[arg(long)]
    j: f64,
    /// Paramagnetic impurity fraction in [0, 1]
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Spin of each dimer ion ("5/2", "2.5", or "3" forms)
    #[arg(long, default_value = "5/2")]
    sbar: SpinValue,
    /// g-factor of the impurity Curie term
    #[arg(long = "impurity-g", default_value_t = 2.0)]
    impurity_g: f64,
}

impl ModelFlags {
    fn params(&self) -> Result<ModelParams64, Error> {
        ModelParams64::new(self.g, self.j, self.rho, self.sbar)?.with_impurity_g(self.impurity_g)
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LevelsArgs {
    /// Spin of the first ion ("5/2", "2.5", or "3" forms)
    #[arg(long)]
    s1: SpinValue,
    /// Spin of the second ion
    #[arg(long)]
    s2: SpinValue,
    /// Exchange coupling J in kelvin (negative = antiferromagnetic)
    #[arg(long)]
    j: f64,
    /// Emit JSON instead of CSV
    #[arg(long)]
    json: bool,
    /// Write to this file (atomically) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Lowest grid temperature in kelvin
    #[arg(long, default_value_t = 1.0)]
    tmin: f64,
    /// Highest grid temperature in kelvin
    #[arg(long, default_value_t = 1e4)]
    tmax: f64,
    /// Number of log-spaced grid points
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Emit JSON instead of CSV
    #[arg(long)]
    json: bool,
    /// Write to this file (atomically) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct TeArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Write to this file (atomically) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitsFlag {
    /// Susceptibility per dimer in Bohr magnetons per oersted
    MubOe,
    /// Molar susceptibility in emu/mol (divided by N_A*muB on load)
    EmuMol,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveFlag {
    /// Fit chi(T) directly
    Chi,
    /// Fit chi(T)*T (default; balances low- and high-T information)
    ChiTimesT,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FitArgs {
    /// Input CSV: header `temperature_K,chi` or `temperature_K,chi,sigma`
    #[arg(long)]
    data: PathBuf,
    /// Unit of the chi column
    #[arg(long, value_enum, default_value_t = UnitsFlag::MubOe)]
    units: UnitsFlag,
    /// Initial dimer g-factor
    #[arg(long, default_value_t = 2.0)]
    g: f64,
    /// Initial exchange coupling J in kelvin
    #[arg(long, default_value_t = -200.0)]
    j: f64,
    /// Initial impurity fraction
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Spin of each dimer ion
    #[arg(long, default_value = "5/2")]
    sbar: SpinValue,
    /// g-factor of the impurity Curie term (held fixed)
    #[arg(long = "impurity-g", default_value_t = 2.0)]
    impurity_g: f64,
    /// Comma-separated subset of {g,j,rho} to optimize
    #[arg(long, default_value = "g,j,rho")]
    free: String,
    /// Residual definition
    #[arg(long, value_enum, default_value_t = ObjectiveFlag::ChiTimesT)]
    objective: ObjectiveFlag,
    /// Iteration cap for the Levenberg-Marquardt schedule
    #[arg(long = "max-iter", default_value_t = 200)]
    max_iter: usize,
    /// Write the JSON report to this file (atomically) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SynthArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Lowest grid temperature in kelvin
    #[arg(long, default_value_t = 2.0)]
    tmin: f64,
    /// Highest grid temperature in kelvin
    #[arg(long, default_value_t = 300.0)]
    tmax: f64,
    /// Number of evenly spaced grid points
    #[arg(long, default_value_t = 150)]
    steps: usize,
    /// Relative width of the multiplicative Gaussian noise
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// PRNG seed; identical seeds give identical datasets
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write to this file (atomically) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::InvalidSpin(_)
        | Error::DimensionTooLarge { .. }
        | Error::NotHermitian { .. }
        | Error::NonPositiveTemperature(_)
        | Error::InvalidGrid
        | Error::InvalidParams(_) => 1,
        Error::MalformedRow { .. }
        | Error::NonPositiveTemperatureRow { .. }
        | Error::DuplicateTemperature { .. }
        | Error::EmptyDataset { .. }
        | Error::InsufficientData { .. }
        | Error::Io { .. } => 2,
        Error::SingularNormalMatrix => 3,
        Error::NoEntanglementTemperature => 4,
    }
}

/// Writes to stdout, or atomically (temp file + rename) to `--out`.
fn emit(out: Option<&Path>, content: &str) -> Result<(), Error> {
    let Some(path) = out else {
        print!("{content}");
        return Ok(());
    };
    let label = path.display().to_string();
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    let write = std::fs::write(&tmp, content).and_then(|()| std::fs::rename(&tmp, path));
    write.map_err(|source| {
        let _ = std::fs::remove_file(&tmp);
        Error::Io {
            path: label,
            source,
        }
    })
}

fn run_levels(args: &LevelsArgs) -> Result<u8, Error> {
    let spectrum = multiplet_spectrum::<f64>(args.s1, args.s2, args.j);
    let mut out = String::new();
    if args.json {
        out.push_str("[\n");
        for (i, m) in spectrum.multiplets.iter().enumerate() {
            let comma = if i + 1 < spectrum.multiplets.len() {
                ","
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  {{\"total_spin\": \"{}\", \"energy_K\": {}, \"degeneracy\": {}}}{}",
                m.spin_label(),
                fmt12(m.energy_k),
                m.degeneracy,
                comma
            );
        }
        out.push_str("]\n");
    } else {
        out.push_str("total_spin,energy_K,degeneracy\n");
        for m in &spectrum.multiplets {
            let _ = writeln!(
                out,
                "{},{},{}",
                m.spin_label(),
                fmt12(m.energy_k),
                m.degeneracy
            );
        }
    }
    emit(args.out.as_deref(), &out)?;
    Ok(0)
}

fn curve_rows(args: &CurveArgs) -> Result<Vec<[f64; 4]>, Error> {
    let p = args.model.params()?;
    let grid = log_grid(args.tmin, args.tmax, args.steps)?;
    grid.iter()
        .map(|&t| {
            let chi = chi_model(t, &p)?;
            let w = witness_value(t, chi, p.g, 2, p.s_bar)?;
            Ok([t, chi, chi * t, w])
        })
        .collect()
}

fn run_curve(args: &CurveArgs) -> Result<u8, Error> {
    let rows = curve_rows(args)?;
    let mut out = String::new();
    if args.json {
        out.push_str("[\n");
        for (i, row) in rows.iter().enumerate() {
            let comma = if i + 1 < rows.len() { "," } else { "" };
            let _ = writeln!(
                out,
                "  [{}, {}, {}, {}]{}",
                fmt12(row[0]),
                fmt12(row[1]),
                fmt12(row[2]),
                fmt12(row[3]),
                comma
            );
        }
        out.push_str("]\n");
    } else {
        out.push_str("temperature_K,chi_muB_per_Oe,chiT_muBK_per_Oe,witness\n");
        for row in &rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt12(row[0]),
                fmt12(row[1]),
                fmt12(row[2]),
                fmt12(row[3])
            );
        }
    }
    emit(args.out.as_deref(), &out)?;
    Ok(0)
}

fn run_te(args: &TeArgs) -> Result<u8, Error> {
    let p = args.model.params()?;
    let te = entanglement_temperature(&p)?;
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"te_numeric_K\": {},", fmt12(te.te_k));
    let _ = writeln!(
        out,
        "  \"te_empirical_K\": {},",
        fmt12(te_empirical(p.j_k, p.s_bar))
    );
    let _ = writeln!(out, "  \"residual_w\": {},", fmt12(te.residual_w));
    let _ = writeln!(out, "  \"iterations\": {}", te.iterations);
    out.push_str("}\n");
    emit(args.out.as_deref(), &out)?;
    Ok(0)
}

fn parse_free(list: &str) -> Result<FreeParams, Error> {
    let mut free = FreeParams {
        g: false,
        j_k: false,
        rho: false,
    };
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "g" => free.g = true,
            "j" | "J" => free.j_k = true,
            "rho" => free.rho = true,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown free parameter {other:?}; expected a subset of g,j,rho"
                )))
            }
        }
    }
    Ok(free)
}

fn run_fit(args: &FitArgs) -> Result<u8, Error> {
    let units = match args.units {
        UnitsFlag::MubOe => ChiUnits::MuBPerOe,
        UnitsFlag::EmuMol => ChiUnits::EmuPerMol,
    };
    let initial = ModelParams64::new(args.g, args.j, args.rho, args.sbar)?
        .with_impurity_g(args.impurity_g)?;
    let mut config = FitConfig::new(initial);
    config.free = parse_free(&args.free)?;
    let data = DataSet::load_csv(&args.data, units)?;
    config.objective = match args.objective {
        ObjectiveFlag::Chi => FitObjective::Chi,
        ObjectiveFlag::ChiTimesT => FitObjective::ChiTimesT,
    };
    config.max_iter = args.max_iter;
    let report = analyze(&data, &config)?;
    emit(args.out.as_deref(), &report.to_json())?;
    if !report.fit.converged {
        eprintln!(
            "error: fit did not converge within {} iterations (report still written)",
            report.fit.iterations
        );
        return Ok(3);
    }
    Ok(0)
}

fn run_synth(args: &SynthArgs) -> Result<u8, Error> {
    let p = args.model.params()?;
    let grid = linear_grid(args.tmin, args.tmax, args.steps)?;
    let data = synthesize(&p, &grid, args.noise, args.seed)?;
    emit(args.out.as_deref(), &data.to_csv_string())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.command {
        Command::Levels(args) => run_levels(args),
        Command::Chi(args) | Command::Witness(args) => run_curve(args),
        Command::Te(args) => run_te(args),
        Command::Fit(args) => run_fit(args),
        Command::Synth(args) => run_synth(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
