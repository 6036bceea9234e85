use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use irb::clifford::{decompose_minimal, CliffordElement};
use irb::estimate::{summary_table, NoiseClass, SummaryRow};
use irb::fit::{Estimate, FitModel};
use irb::study::{self, AnalysisOptions, SimulationConfig};
use irb::Error;

/// Environment variable overriding the configured master seed.
const SEED_ENV: &str = "RB_SEED";

#[derive(Parser)]
#[command(name = "irb", version, about = "Randomized and interleaved randomized benchmarking workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the datasets described by a configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Fit a standard and an interleaved dataset and report the gate error.
    Analyze {
        #[arg(long)]
        standard: PathBuf,
        #[arg(long)]
        interleaved: PathBuf,
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[command(flatten)]
        fit: FitFlags,
        /// Seed for bootstrap resampling.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json and fitted-curve CSVs.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Gate-error estimate and bounds from decay parameters.
    Estimate {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        p_interleaved: f64,
        #[arg(long, default_value_t = 0.0)]
        p_stderr: f64,
        #[arg(long, default_value_t = 0.0)]
        p_interleaved_stderr: f64,
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[arg(long, value_enum, default_value_t = ClassArg::General)]
        noise_class: ClassArg,
        #[arg(long)]
        json: bool,
    },
    /// Sweep an intentional over-rotation of the interleaved gate.
    Miscalibration {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated angles in radians; `pi/20` style fractions accepted.
        #[arg(long, value_delimiter = ',', default_value = "0,pi/20,pi/10")]
        epsilons: Vec<String>,
        #[arg(long, default_value = "X90")]
        target: String,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        fit: FitFlags,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Tableau utilities.
    Clifford {
        #[command(subcommand)]
        action: CliffordAction,
    },
}

#[derive(Args)]
struct RunFlags {
    /// Master seed; overrides RB_SEED and the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct FitFlags {
    #[arg(long, value_enum, default_value_t = ModelArg::Zeroth)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = ClassArg::General)]
    noise_class: ClassArg,
    /// Bootstrap resamples (needs retained raw survivals).
    #[arg(long)]
    bootstrap: Option<usize>,
}

#[derive(Subcommand)]
enum CliffordAction {
    /// Product of the gates, rightmost applied first.
    Compose {
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[arg(required = true)]
        gates: Vec<String>,
    },
    Inverse {
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        gate: String,
    },
    /// Shortest pulse sequence of a single-qubit Clifford.
    Decompose {
        gate: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    Zeroth,
    First,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ClassArg {
    General,
    Pauli,
    Depolarizing,
}

impl From<ModelArg> for FitModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Zeroth => FitModel::Zeroth,
            ModelArg::First => FitModel::First,
        }
    }
}

impl From<ClassArg> for NoiseClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::General => NoiseClass::General,
            ClassArg::Pauli => NoiseClass::Pauli,
            ClassArg::Depolarizing => NoiseClass::Depolarizing,
        }
    }
}

/// Exit 2 for bad input, 3 for failures while running.
enum Failure {
    Input(Error),
    Runtime(Error),
}

trait Stage<T> {
    fn input(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T> Stage<T> for irb::Result<T> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(Failure::Input)
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(Failure::Runtime)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn effective_seed(flag: Option<u64>, configured: u64) -> irb::Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("{SEED_ENV}='{v}' is not a 64-bit unsigned integer"))),
        Err(_) => Ok(configured),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<SimulationConfig, Failure> {
    let config = SimulationConfig::load(path).input()?;
    let seed = effective_seed(seed, config.seed).input()?;
    let config = config.with_seed(seed);
    config.plan().input()?;
    Ok(config)
}

fn parse_angle(text: &str) -> irb::Result<f64> {
    let t = text.trim();
    let bad = || Error::Parse(format!("invalid angle '{text}'"));
    let pi_multiple = |s: &str| -> irb::Result<f64> {
        match s.trim() {
            "pi" => Ok(std::f64::consts::PI),
            "-pi" => Ok(-std::f64::consts::PI),
            other => other.parse::<f64>().map_err(|_| bad()),
        }
    };
    match t.split_once('/') {
        Some((num, den)) => {
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            Ok(pi_multiple(num)? / den)
        }
        None => pi_multiple(t),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Runtime(Error::Io(format!("{}: {e}", path.display()))))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(Error::Io(format!("{}: {e}", dir.display()))))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, output, run } => {
            let config = load_config(&config, run.seed)?;
            let manifest = study::simulate_to_dir(&config, &output, run.threads).runtime()?;
            for file in &manifest.outputs {
                println!("{}", output.join(file).display());
            }
            println!("{}", output.join(study::MANIFEST_FILE).display());
        }
        Command::Analyze {
            standard,
            interleaved,
            qubits,
            fit,
            seed,
            output,
            json,
        } => {
            let standard_data = study::load_dataset(&standard).input()?;
            let interleaved_data = study::load_dataset(&interleaved).input()?;
            let options = AnalysisOptions {
                model: fit.model.into(),
                noise_class: fit.noise_class.into(),
                bootstrap: fit.bootstrap,
                seed: effective_seed(seed, 0).input()?,
            };
            let analysis = match study::analyze(&standard_data, &interleaved_data, qubits, &options) {
                Err(e @ (Error::MissingRawData | Error::OutOfRange { .. })) => return Err(Failure::Input(e)),
                other => other.runtime()?,
            };
            if let Some(dir) = output {
                create_dir(&dir)?;
                write(&dir.join("report.json"), &to_json(&analysis))?;
                write(
                    &dir.join("curve-standard.csv"),
                    &study::curve_csv(&analysis.standard_fit, &standard_data),
                )?;
                write(
                    &dir.join("curve-interleaved.csv"),
                    &study::curve_csv(&analysis.interleaved_fit, &interleaved_data),
                )?;
            }
            if json {
                print!("{}", to_json(&analysis));
            } else {
                let label = interleaved
                    .file_stem()
                    .map_or("target".into(), |s| s.to_string_lossy().into_owned());
                print!(
                    "{}",
                    summary_table(&[SummaryRow {
                        label,
                        epsilon: None,
                        r_th: None,
                        report: analysis.report,
                    }])
                );
            }
        }
        Command::Estimate {
            p,
            p_interleaved,
            p_stderr,
            p_interleaved_stderr,
            qubits,
            noise_class,
            json,
        } => {
            let report = study::estimate_from_parameters(
                Estimate::new(p, p_stderr),
                Estimate::new(p_interleaved, p_interleaved_stderr),
                qubits,
                noise_class.into(),
            )
            .input()?;
            if json {
                print!("{}", to_json(&report));
            } else {
                print!(
                    "{}",
                    summary_table(&[SummaryRow {
                        label: "target".into(),
                        epsilon: None,
                        r_th: None,
                        report,
                    }])
                );
            }
        }
        Command::Miscalibration {
            config,
            epsilons,
            target,
            run,
            fit,
            output,
            json,
        } => {
            let config = load_config(&config, run.seed)?;
            let epsilons = epsilons
                .iter()
                .map(|e| parse_angle(e))
                .collect::<irb::Result<Vec<_>>>()
                .input()?;
            let options = AnalysisOptions {
                model: fit.model.into(),
                noise_class: fit.noise_class.into(),
                bootstrap: fit.bootstrap,
                seed: config.seed,
            };
            let result = match study::miscalibration_study(&config, &target, &epsilons, &options, run.threads) {
                Err(e @ (Error::UnsupportedDimension { .. } | Error::Parse(_) | Error::InvalidConfig(_))) => {
                    return Err(Failure::Input(e))
                }
                other => other.runtime()?,
            };
            let table = summary_table(&result.summary_rows());
            if let Some(dir) = output {
                create_dir(&dir)?;
                write(&dir.join("miscalibration.json"), &to_json(&result))?;
                write(&dir.join("miscalibration.txt"), &table)?;
            }
            if json {
                print!("{}", to_json(&result));
            } else {
                print!("{table}");
            }
        }
        Command::Clifford { action } => clifford(action)?,
    }
    Ok(())
}

fn clifford(action: CliffordAction) -> Result<(), Failure> {
    match action {
        CliffordAction::Compose { qubits, gates } => {
            let mut product = CliffordElement::identity(qubits);
            for g in gates.iter().rev() {
                let gate = CliffordElement::parse_gate(g, qubits).input()?;
                product = gate.compose(&product).input()?;
            }
            println!("{product}");
        }
        CliffordAction::Inverse { qubits, gate } => {
            let gate = CliffordElement::parse_gate(&gate, qubits).input()?;
            println!("{}", gate.inverse());
        }
        CliffordAction::Decompose { gate, seed } => {
            let gate = CliffordElement::parse_gate(&gate, 1).input()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            println!("{}", decompose_minimal(&gate, &mut rng).input()?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert_eq!(parse_angle("pi/20").unwrap(), std::f64::consts::PI / 20.0);
        assert_eq!(parse_angle(" -pi / 2 ").unwrap(), -std::f64::consts::FRAC_PI_2);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
