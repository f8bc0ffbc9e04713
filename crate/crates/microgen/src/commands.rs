//! The operations behind the command-line tool, returning result tables.
//!
//! Everything here is deterministic: the same device file, command, and seed
//! produce byte-identical tables.

use crate::coil::LinkageSampler;
use crate::design::{
    self, DesignParameter, DesignVariable, MeasuredReference, OptimizeOptions, TargetBand,
};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::magnetics;
use crate::optimize::SearchOptions;
use crate::quadrature::QuadConfig;
use crate::response::{self, DriveKind, GridKind};
use crate::suspension;
use crate::table::{Cell, Column, ResultTable};

/// Default amplitude for the stress check (m).
pub const DEFAULT_STRESS_AMPLITUDE: f64 = 50e-6;

/// A parsed command, ready to run against a device.
#[derive(Debug, Clone)]
pub enum Command {
    /// Stiffness, moving mass, first-mode frequency.
    Modal,
    /// Linkage and its gradient over a magnet-offset grid.
    Flux {
        z_lo: Option<f64>,
        z_hi: Option<f64>,
        points: usize,
    },
    /// EMF and delivered power at the device's drive point.
    Emf { n_series: usize },
    /// Response curve over a frequency grid.
    Sweep {
        f_lo: f64,
        f_hi: f64,
        points: usize,
        log_grid: bool,
    },
    /// Time-domain trace under the device's sinusoidal drive.
    Simulate {
        dt: Option<f64>,
        duration: Option<f64>,
    },
    /// Match the first-mode frequency by adjusting one variable.
    Fit {
        variable: String,
        target_hz: f64,
        lo: Option<f64>,
        hi: Option<f64>,
        tol_hz: f64,
    },
    /// Maximize EMF over design variables under band/yield/footprint
    /// constraints.
    Optimize {
        variables: Vec<VariableArg>,
        f_lo: f64,
        f_hi: f64,
        die_side: f64,
        budget: usize,
        seed: u64,
    },
    /// Model-vs-measured comparison table.
    Report { measured: MeasuredReference },
    /// Bending stress and yield margins at an amplitude.
    Stress { amplitude: f64 },
}

/// One `--variable` occurrence: name with optional explicit bounds.
#[derive(Debug, Clone)]
pub struct VariableArg {
    pub name: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

/// Output of a command run: the main table, plus the evaluation log for
/// searches.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub table: ResultTable,
    pub log: Option<ResultTable>,
}

impl RunResult {
    fn table(table: ResultTable) -> Self {
        RunResult { table, log: None }
    }
}

/// Execute a command against a parsed device.
pub fn run(device: &DeviceModel, command: &Command) -> Result<RunResult> {
    match command {
        Command::Modal => modal(device),
        Command::Flux { z_lo, z_hi, points } => flux(device, *z_lo, *z_hi, *points),
        Command::Emf { n_series } => emf(device, *n_series),
        Command::Sweep {
            f_lo,
            f_hi,
            points,
            log_grid,
        } => sweep(device, *f_lo, *f_hi, *points, *log_grid),
        Command::Simulate { dt, duration } => simulate(device, *dt, *duration),
        Command::Fit {
            variable,
            target_hz,
            lo,
            hi,
            tol_hz,
        } => fit(device, variable, *target_hz, *lo, *hi, *tol_hz),
        Command::Optimize {
            variables,
            f_lo,
            f_hi,
            die_side,
            budget,
            seed,
        } => optimize(device, variables, *f_lo, *f_hi, *die_side, *budget, *seed),
        Command::Report { measured } => report(device, measured),
        Command::Stress { amplitude } => stress(device, *amplitude),
    }
}

fn modal(device: &DeviceModel) -> Result<RunResult> {
    let m = device.modal(false)?;
    let mut t = ResultTable::new(vec![
        Column::new("stiffness", "N/m"),
        Column::new("effective_mass", "kg"),
        Column::new("natural_frequency", "Hz"),
    ]);
    t.push_row(vec![
        m.stiffness_total.into(),
        m.effective_mass.into(),
        m.natural_frequency.into(),
    ]);
    Ok(RunResult::table(t))
}

fn flux(device: &DeviceModel, z_lo: Option<f64>, z_hi: Option<f64>, points: usize) -> Result<RunResult> {
    if points < 1 {
        return Err(Error::domain("flux grid needs at least one point"));
    }
    let gap = device.coil.plane_height;
    let default_half = (50e-6_f64).min(0.5 * gap);
    let lo = z_lo.unwrap_or(-default_half);
    let hi = z_hi.unwrap_or(default_half);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::domain("flux grid needs z_lo <= z_hi"));
    }
    if hi >= gap {
        return Err(Error::Domain(format!(
            "offset grid reaches the coil plane: z_hi {hi:e} >= gap {gap:e}"
        )));
    }
    let step_at = |offset: f64| {
        let clearance = gap - offset;
        magnetics::default_gradient_step(clearance).min(0.25 * clearance)
    };
    let max_offset = hi + step_at(hi);
    let sampler = LinkageSampler::new(
        &device.magnet,
        &device.coil,
        max_offset,
        &QuadConfig::with_rel_tol(1e-9),
    )?;

    let mut t = ResultTable::new(vec![
        Column::new("offset", "m"),
        Column::new("flux", "Wb"),
        Column::new("flux_gradient", "Wb/m"),
    ]);
    for i in 0..points {
        let offset = if points == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (points - 1) as f64
        };
        let phi = sampler.flux_at(offset)?;
        let grad = sampler.gradient_at(offset, step_at(offset))?;
        t.push_row(vec![offset.into(), phi.into(), grad.into()]);
    }
    Ok(RunResult::table(t))
}

fn emf(device: &DeviceModel, n_series: usize) -> Result<RunResult> {
    if n_series == 0 {
        return Err(Error::domain("series count must be at least 1"));
    }
    let drive = device.require_drive()?;
    let model = device.response_model()?;
    let point = model.point(drive.kind, drive.frequency)?;

    let (v_pp, r_total) = response::array_series(
        point.emf_pp,
        model.circuit.coil_resistance,
        n_series,
    );
    let v_rms = 0.5 * v_pp / std::f64::consts::SQRT_2;
    let circuit = response::LoadCircuit::matched(r_total)?;
    let power = response::load_power(v_rms, &circuit);

    let mut t = ResultTable::new(vec![
        Column::new("n_units", "count"),
        Column::new("frequency", "Hz"),
        Column::new("amplitude", "m"),
        Column::new("velocity_peak", "m/s"),
        Column::new("emf_pp", "V"),
        Column::new("emf_rms", "V"),
        Column::new("coil_resistance", "ohm"),
        Column::new("load_resistance", "ohm"),
        Column::new("load_power", "W"),
    ]);
    t.push_row(vec![
        Cell::Num(n_series as f64),
        point.frequency.into(),
        point.amplitude.into(),
        point.velocity_peak.into(),
        v_pp.into(),
        v_rms.into(),
        r_total.into(),
        r_total.into(),
        power.into(),
    ]);
    Ok(RunResult::table(t))
}

fn sweep(device: &DeviceModel, f_lo: f64, f_hi: f64, points: usize, log_grid: bool) -> Result<RunResult> {
    let drive = device.require_drive()?;
    let model = device.response_model()?;
    let grid = if log_grid { GridKind::Log } else { GridKind::Linear };
    let curve = model.frequency_sweep(drive.kind, f_lo, f_hi, points, grid)?;

    let mut t = ResultTable::new(vec![
        Column::new("frequency", "Hz"),
        Column::new("amplitude", "m"),
        Column::new("velocity_peak", "m/s"),
        Column::new("emf_pp", "V"),
        Column::new("load_power", "W"),
    ]);
    for p in &curve {
        t.push_row(vec![
            p.frequency.into(),
            p.amplitude.into(),
            p.velocity_peak.into(),
            p.emf_pp.into(),
            p.load_power.into(),
        ]);
    }
    Ok(RunResult::table(t))
}

fn simulate(device: &DeviceModel, dt: Option<f64>, duration: Option<f64>) -> Result<RunResult> {
    let drive = device.require_drive()?;
    let osc = device.oscillator()?;
    let f1 = osc.natural_frequency();

    let pressure = match drive.kind {
        DriveKind::Pressure(p) => p,
        DriveKind::Spl(s) => response::spl_to_pressure(s),
        DriveKind::Displacement(_) => {
            return Err(Error::domain(
                "simulate needs a pressure or spl drive; displacement prescribes the motion",
            ))
        }
    };
    let force = response::acoustic_force(pressure, device.effective_area());

    let dt = dt.unwrap_or(1.0 / (200.0 * f1));
    let duration = duration.unwrap_or_else(|| {
        let tau = if osc.damping_ratio > 0.0 {
            1.0 / (osc.damping_ratio * osc.omega_n())
        } else {
            20.0 / f1
        };
        20.0 * tau + 5.0 / drive.frequency
    });
    let steps = (duration / dt).round() as usize;
    if steps > 5_000_000 {
        return Err(Error::Domain(format!(
            "simulation would need {steps} steps; shorten the duration or coarsen dt"
        )));
    }
    let omega = 2.0 * std::f64::consts::PI * drive.frequency;
    let forcing: Vec<f64> = (0..=steps)
        .map(|i| force * (omega * i as f64 * dt).sin())
        .collect();
    let trace = response::time_simulate(
        &osc,
        &device.magnet,
        &device.coil,
        &forcing,
        dt,
        duration,
        0.0,
        0.0,
    )?;

    let mut t = ResultTable::new(vec![
        Column::new("time", "s"),
        Column::new("displacement", "m"),
        Column::new("velocity", "m/s"),
        Column::new("emf", "V"),
    ]);
    for i in 0..trace.len() {
        t.push_row(vec![
            trace.time(i).into(),
            trace.displacement[i].into(),
            trace.velocity[i].into(),
            trace.emf[i].into(),
        ]);
    }
    Ok(RunResult::table(t))
}

fn default_bounds(nominal: f64) -> (f64, f64) {
    (nominal / 4.0, nominal * 4.0)
}

fn fit(
    device: &DeviceModel,
    variable: &str,
    target_hz: f64,
    lo: Option<f64>,
    hi: Option<f64>,
    tol_hz: f64,
) -> Result<RunResult> {
    let parameter = DesignParameter::from_str(variable)?;
    let nominal = parameter.nominal(device);
    let (def_lo, def_hi) = default_bounds(nominal);
    let var = DesignVariable::new(parameter, lo.unwrap_or(def_lo), hi.unwrap_or(def_hi))?;
    let value = design::match_frequency(device, &var, target_hz, tol_hz)?;

    // forward check at the fitted value
    let achieved = {
        let mut check = device.clone();
        apply_parameter(&mut check, parameter, value);
        check.modal(false)?.natural_frequency
    };

    let mut t = ResultTable::new(vec![
        Column::new("variable", "-"),
        Column::new("value", "si"),
        Column::new("achieved_f1", "Hz"),
        Column::new("target_f1", "Hz"),
        Column::new("tolerance", "Hz"),
    ]);
    t.push_row(vec![
        Cell::Text(parameter.as_str().to_string()),
        value.into(),
        achieved.into(),
        target_hz.into(),
        tol_hz.into(),
    ]);
    Ok(RunResult::table(t))
}

fn apply_parameter(device: &mut DeviceModel, parameter: DesignParameter, value: f64) {
    match parameter {
        DesignParameter::BeamLength => device.beam.length = value,
        DesignParameter::BeamWidth => device.beam.width = value,
        DesignParameter::BeamThickness => device.beam.thickness = value,
        DesignParameter::PlateSide => {
            device.plate.length = value;
            device.plate.width = value;
        }
        DesignParameter::MagnetThickness => device.magnet.thickness_z = value,
        DesignParameter::CoilTurns => device.coil.turns = value.round() as usize,
        DesignParameter::CoilGap => {
            device.assembly.coil_gap = value;
            device.coil.plane_height = value;
        }
    }
}

fn optimize(
    device: &DeviceModel,
    variables: &[VariableArg],
    f_lo: f64,
    f_hi: f64,
    die_side: f64,
    budget: usize,
    seed: u64,
) -> Result<RunResult> {
    if variables.is_empty() {
        return Err(Error::domain("optimize needs at least one --variable"));
    }
    let drive = device.require_drive()?;
    let vars: Vec<DesignVariable> = variables
        .iter()
        .map(|arg| {
            let parameter = DesignParameter::from_str(&arg.name)?;
            let nominal = parameter.nominal(device);
            let (def_lo, def_hi) = default_bounds(nominal);
            let lo = arg.lo.unwrap_or(def_lo);
            let hi = arg.hi.unwrap_or(def_hi);
            let (lo, hi) = if parameter == DesignParameter::CoilTurns {
                (lo.max(1.0).round(), hi.max(1.0).round())
            } else {
                (lo, hi)
            };
            DesignVariable::new(parameter, lo, hi)
        })
        .collect::<Result<_>>()?;

    let opts = OptimizeOptions {
        band: TargetBand::new(f_lo, f_hi)?,
        die_side,
        search: SearchOptions {
            max_evals_per_start: budget,
            ..Default::default()
        },
        seed,
    };
    let best = design::maximize_emf(device, &vars, drive.kind, &opts)?;

    let mut columns = Vec::new();
    for v in &vars {
        let unit = match v.parameter {
            DesignParameter::CoilTurns => "count",
            _ => "m",
        };
        columns.push(Column::new(v.parameter.as_str(), unit));
    }
    columns.push(Column::new("f1", "Hz"));
    columns.push(Column::new("amplitude", "m"));
    columns.push(Column::new("emf_pp", "V"));
    columns.push(Column::new("evaluations", "count"));
    columns.push(Column::new("seed", "-"));
    let mut t = ResultTable::new(columns);
    let mut row: Vec<Cell> = best.values.iter().map(|&v| Cell::Num(v)).collect();
    row.push(best.f1.into());
    row.push(best.amplitude.into());
    row.push(best.emf_pp.into());
    row.push(Cell::Num(best.evaluations as f64));
    row.push(Cell::Num(seed as f64));
    t.push_row(row);

    // evaluation log: one row per candidate visited
    let mut log_cols: Vec<Column> = vars
        .iter()
        .map(|v| Column::new(v.parameter.as_str(), "si"))
        .collect();
    log_cols.push(Column::new("objective", "-"));
    let mut log = ResultTable::new(log_cols);
    for rec in &best.log {
        let mut row: Vec<Cell> = rec.x.iter().map(|&v| Cell::Num(v)).collect();
        row.push(rec.value.into());
        log.push_row(row);
    }

    Ok(RunResult {
        table: t,
        log: Some(log),
    })
}

fn report(device: &DeviceModel, measured: &MeasuredReference) -> Result<RunResult> {
    let rep = design::consistency_report(device, measured)?;
    let mut t = ResultTable::new(vec![
        Column::new("quantity", "-"),
        Column::new("unit", "-"),
        Column::new("model_nominal", "per-row"),
        Column::new("model_at_measured_thickness", "per-row"),
        Column::new("measured", "per-row"),
        Column::new("model_over_measured", "ratio"),
        Column::new("measured_over_model", "ratio"),
    ]);
    for row in &rep.rows {
        t.push_row(vec![
            Cell::Text(row.quantity.to_string()),
            Cell::Text(row.unit.to_string()),
            Cell::opt(row.model_nominal),
            Cell::opt(row.model_at_measured_thickness),
            Cell::opt(row.measured),
            Cell::opt(row.model_over_measured()),
            Cell::opt(row.measured_over_model()),
        ]);
    }
    Ok(RunResult::table(t))
}

fn stress(device: &DeviceModel, amplitude: f64) -> Result<RunResult> {
    let sigma = suspension::max_bending_stress(&device.material, &device.beam, amplitude)?;
    let (lo, hi) = suspension::yield_margin(sigma, &device.material)?;
    let mut t = ResultTable::new(vec![
        Column::new("amplitude", "m"),
        Column::new("max_stress", "Pa"),
        Column::new("yield_low", "Pa"),
        Column::new("yield_high", "Pa"),
        Column::new("margin_low", "ratio"),
        Column::new("margin_high", "ratio"),
    ]);
    t.push_row(vec![
        amplitude.into(),
        sigma.into(),
        device.material.yield_low.into(),
        device.material.yield_high.into(),
        lo.into(),
        hi.into(),
    ]);
    Ok(RunResult::table(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn parse_f1(csv: &str) -> f64 {
        // single-row modal table: third column of the data row
        let data = csv.lines().nth(2).unwrap();
        data.split(',').nth(2).unwrap().parse().unwrap()
    }

    #[test]
    fn modal_on_reference_device() {
        let dev = DeviceModel::paper_nominal();
        let out = run(&dev, &Command::Modal).unwrap();
        let csv = out.table.to_csv();
        assert!(csv.starts_with("# units: N/m,kg,Hz\n"));
        let f1 = parse_f1(&csv);
        assert_relative_eq!(f1, 1007.6, max_relative = 1e-3);
    }

    #[test]
    fn stress_at_default_amplitude() {
        let dev = DeviceModel::paper_nominal();
        let out = run(
            &dev,
            &Command::Stress {
                amplitude: DEFAULT_STRESS_AMPLITUDE,
            },
        )
        .unwrap();
        let csv = out.table.to_csv();
        let row = csv.lines().nth(2).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        let sigma: f64 = fields[1].parse().unwrap();
        let margin_low: f64 = fields[4].parse().unwrap();
        assert_relative_eq!(sigma, 937.5e6, max_relative = 1e-9);
        assert_relative_eq!(margin_low, 0.704, max_relative = 1e-3);
    }

    #[test]
    fn fit_command_recovers_measured_thickness() {
        let dev = DeviceModel::paper_nominal();
        let out = run(
            &dev,
            &Command::Fit {
                variable: "beam_thickness".into(),
                target_hz: 470.0,
                lo: None,
                hi: None,
                tol_hz: 0.1,
            },
        )
        .unwrap();
        let csv = out.table.to_csv();
        let row = csv.lines().nth(2).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "beam_thickness");
        let value: f64 = fields[1].parse().unwrap();
        let achieved: f64 = fields[2].parse().unwrap();
        assert!((value - 12.0e-6).abs() < 0.2e-6, "value {value}");
        assert!((achieved - 470.0).abs() <= 0.1, "achieved {achieved}");
    }

    #[test]
    fn report_has_five_rows() {
        let mut dev = DeviceModel::paper_nominal();
        // relaxed gap keeps the flux-gradient evaluation quick
        dev.assembly.coil_gap = 100e-6;
        dev.coil.plane_height = 100e-6;
        let out = run(
            &dev,
            &Command::Report {
                measured: MeasuredReference::reference(),
            },
        )
        .unwrap();
        let csv = out.table.to_csv();
        assert_eq!(csv.lines().count(), 2 + 5);
        let freq_row = csv.lines().nth(2).unwrap();
        assert!(freq_row.starts_with("resonance_frequency,Hz,"));
    }

    #[test]
    fn flux_command_grid() {
        let mut dev = DeviceModel::paper_nominal();
        dev.coil.turns = 2;
        dev.assembly.coil_gap = 100e-6;
        dev.coil.plane_height = 100e-6;
        let out = run(
            &dev,
            &Command::Flux {
                z_lo: None,
                z_hi: None,
                points: 5,
            },
        )
        .unwrap();
        let csv = out.table.to_csv();
        let rows: Vec<&str> = csv.lines().skip(2).collect();
        assert_eq!(rows.len(), 5);
        // flux grows monotonically as the magnet approaches the coil
        let fluxes: Vec<f64> = rows
            .iter()
            .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        for w in fluxes.windows(2) {
            assert!(w[1] > w[0], "flux must grow with offset toward the coil");
        }
        // gradients are positive toward the coil
        for r in &rows {
            let g: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
            assert!(g > 0.0);
        }
    }

    #[test]
    fn emf_command_series_scaling() {
        let mut dev = DeviceModel::paper_nominal();
        dev.coil.turns = 2;
        dev.assembly.coil_gap = 100e-6;
        dev.coil.plane_height = 100e-6;
        let one = run(&dev, &Command::Emf { n_series: 1 }).unwrap();
        let four = run(&dev, &Command::Emf { n_series: 4 }).unwrap();
        let get = |r: &RunResult, col: usize| -> f64 {
            r.table.to_csv().lines().nth(2).unwrap().split(',').nth(col).unwrap().parse().unwrap()
        };
        // emf_pp, resistance, power all scale correctly for series units
        assert_relative_eq!(get(&four, 4), 4.0 * get(&one, 4), max_relative = 1e-12);
        assert_relative_eq!(get(&four, 6), 4.0 * get(&one, 6), max_relative = 1e-12);
        assert_relative_eq!(get(&four, 8), 4.0 * get(&one, 8), max_relative = 1e-12);
    }

    #[test]
    fn missing_drive_is_reported() {
        let mut dev = DeviceModel::paper_nominal();
        dev.drive = None;
        let err = run(&dev, &Command::Emf { n_series: 1 }).unwrap_err();
        assert_eq!(err.category(), "domain");
    }
}
