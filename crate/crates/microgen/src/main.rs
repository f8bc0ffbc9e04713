//! Command-line front end: parse arguments, load the device file, run the
//! command, and write CSV to stdout or a file.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 infeasible design,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use microgen::commands::{self, Command as Op, VariableArg};
use microgen::design::MeasuredReference;
use microgen::device;
use microgen::error::Error;

#[derive(Parser)]
#[command(
    name = "microgen",
    version,
    about = "Analytic simulator and design optimizer for beam-suspended electromagnetic microgenerators"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct Common {
    /// Device description file (INI, SI units).
    #[arg(long, value_name = "PATH")]
    device: PathBuf,
    /// Write the result CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Suspension stiffness, moving mass, and first-mode frequency.
    Modal {
        #[command(flatten)]
        common: Common,
    },
    /// Coil flux linkage and its gradient over a magnet-offset grid.
    Flux {
        #[command(flatten)]
        common: Common,
        /// Lowest magnet offset (m); negative is away from the coil.
        #[arg(long, value_name = "M")]
        z_lo: Option<f64>,
        /// Highest magnet offset (m); must stay below the coil gap.
        #[arg(long, value_name = "M")]
        z_hi: Option<f64>,
        /// Number of grid points.
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// EMF and matched-load power at the drive point in the device file.
    Emf {
        #[command(flatten)]
        common: Common,
        /// Identical units chained in series.
        #[arg(long, default_value_t = 1)]
        n_series: usize,
    },
    /// Response curve (amplitude, EMF, power) over a frequency grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep start (Hz).
        #[arg(long, default_value_t = 100.0)]
        f_lo: f64,
        /// Sweep end (Hz).
        #[arg(long, default_value_t = 2000.0)]
        f_hi: f64,
        /// Number of frequencies.
        #[arg(long, default_value_t = 191)]
        points: usize,
        /// Logarithmic instead of linear frequency spacing.
        #[arg(long)]
        log_grid: bool,
    },
    /// Time-domain trace under the device's sinusoidal drive.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Integration step (s); default 1/(200 f1).
        #[arg(long, value_name = "S")]
        dt: Option<f64>,
        /// Simulated time (s); default 20 decay time constants.
        #[arg(long, value_name = "S")]
        duration: Option<f64>,
    },
    /// Find the variable value that puts the first mode at a target frequency.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Design variable: beam_length, beam_width, beam_thickness,
        /// plate_side, magnet_thickness.
        #[arg(long)]
        variable: String,
        /// Target first-mode frequency (Hz).
        #[arg(long)]
        target_hz: f64,
        /// Lower bound in native units; default nominal/4.
        #[arg(long)]
        lo: Option<f64>,
        /// Upper bound in native units; default nominal*4.
        #[arg(long)]
        hi: Option<f64>,
        /// Frequency tolerance (Hz).
        #[arg(long, default_value_t = 0.1)]
        tol_hz: f64,
    },
    /// Search designs for maximum EMF inside the frequency band.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Design variable as `name` or `name:lo:hi`; repeatable.
        #[arg(long = "variable", value_name = "NAME[:LO:HI]", required = true)]
        variables: Vec<String>,
        /// Band lower edge (Hz).
        #[arg(long, default_value_t = 200.0)]
        f_lo: f64,
        /// Band upper edge (Hz).
        #[arg(long, default_value_t = 1500.0)]
        f_hi: f64,
        /// Largest allowed planar extent (m).
        #[arg(long, default_value_t = 3e-3)]
        die_side: f64,
        /// Objective evaluations per start.
        #[arg(long, default_value_t = 500)]
        budget: usize,
        /// Recorded in the output for reproducibility.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full evaluation log CSV here.
        #[arg(long, value_name = "PATH")]
        log: Option<PathBuf>,
    },
    /// Compare model predictions against measured values.
    Report {
        #[command(flatten)]
        common: Common,
        /// Measured first resonance (Hz).
        #[arg(long, default_value_t = 470.0)]
        measured_resonance: f64,
        /// Measured plated thickness (m).
        #[arg(long, default_value_t = 14e-6)]
        measured_thickness: f64,
        /// Measured amplitude at resonance (m).
        #[arg(long, default_value_t = 2.8e-6)]
        measured_amplitude: f64,
        /// Measured peak-to-peak EMF (V).
        #[arg(long, default_value_t = 0.24e-3)]
        measured_emf: f64,
        /// Measured coil resistance (ohm).
        #[arg(long, default_value_t = 58.0)]
        measured_resistance: f64,
    },
    /// Peak bending stress and yield margins at a vibration amplitude.
    Stress {
        #[command(flatten)]
        common: Common,
        /// Plate amplitude (m).
        #[arg(long, default_value_t = commands::DEFAULT_STRESS_AMPLITUDE)]
        amplitude: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    let (common, op, log_path) = build_command(cli)?;
    let model = device::parse_device(&common.device)?;
    let result = commands::run(&model, &op)?;

    match &common.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::Io(e.to_string()))?;
            result.table.write_csv(file)?;
        }
        None => {
            result.table.write_csv(std::io::stdout().lock())?;
        }
    }
    if let (Some(path), Some(log)) = (log_path, result.log) {
        let file = std::fs::File::create(&path).map_err(|e| Error::Io(e.to_string()))?;
        log.write_csv(file)?;
    }
    Ok(())
}

fn build_command(cli: Cli) -> Result<(Common, Op, Option<PathBuf>), Error> {
    Ok(match cli.command {
        CliCommand::Modal { common } => (common, Op::Modal, None),
        CliCommand::Flux {
            common,
            z_lo,
            z_hi,
            points,
        } => (common, Op::Flux { z_lo, z_hi, points }, None),
        CliCommand::Emf { common, n_series } => (common, Op::Emf { n_series }, None),
        CliCommand::Sweep {
            common,
            f_lo,
            f_hi,
            points,
            log_grid,
        } => (
            common,
            Op::Sweep {
                f_lo,
                f_hi,
                points,
                log_grid,
            },
            None,
        ),
        CliCommand::Simulate {
            common,
            dt,
            duration,
        } => (common, Op::Simulate { dt, duration }, None),
        CliCommand::Fit {
            common,
            variable,
            target_hz,
            lo,
            hi,
            tol_hz,
        } => (
            common,
            Op::Fit {
                variable,
                target_hz,
                lo,
                hi,
                tol_hz,
            },
            None,
        ),
        CliCommand::Optimize {
            common,
            variables,
            f_lo,
            f_hi,
            die_side,
            budget,
            seed,
            log,
        } => {
            let variables = variables
                .iter()
                .map(|s| parse_variable_arg(s))
                .collect::<Result<Vec<_>, Error>>()?;
            (
                common,
                Op::Optimize {
                    variables,
                    f_lo,
                    f_hi,
                    die_side,
                    budget,
                    seed,
                },
                log,
            )
        }
        CliCommand::Report {
            common,
            measured_resonance,
            measured_thickness,
            measured_amplitude,
            measured_emf,
            measured_resistance,
        } => (
            common,
            Op::Report {
                measured: MeasuredReference {
                    resonance: Some(measured_resonance),
                    thickness: Some(measured_thickness),
                    amplitude: Some(measured_amplitude),
                    emf_pp: Some(measured_emf),
                    coil_resistance: Some(measured_resistance),
                },
            },
            None,
        ),
        CliCommand::Stress { common, amplitude } => (common, Op::Stress { amplitude }, None),
    })
}

/// `name` or `name:lo:hi` with lo/hi in native units.
fn parse_variable_arg(s: &str) -> Result<VariableArg, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [name] => Ok(VariableArg {
            name: name.to_string(),
            lo: None,
            hi: None,
        }),
        [name, lo, hi] => {
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::Domain(format!("bad bound `{v}` in --variable {s}")))
            };
            Ok(VariableArg {
                name: name.to_string(),
                lo: Some(parse(lo)?),
                hi: Some(parse(hi)?),
            })
        }
        _ => Err(Error::Domain(format!(
            "--variable expects `name` or `name:lo:hi`, got `{s}`"
        ))),
    }
}
