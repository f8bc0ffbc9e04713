//! Inverse design and analysis on top of the device model: match a target
//! resonant frequency, maximize EMF under constraints, parameter
//! sensitivities, and model-vs-measurement consistency reporting.

use std::collections::HashMap;

use crate::coil;
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::magnetics;
use crate::optimize::{self, Bounds, EvalRecord, SearchOptions};
use crate::quadrature::QuadConfig;
use crate::response::{self, DriveKind, OscillatorParams};
use crate::rootfind;
use crate::suspension;

/// Target resonance window (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetBand {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl TargetBand {
    pub fn new(f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(f_lo > 0.0 && f_lo.is_finite() && f_hi.is_finite() && f_lo < f_hi) {
            return Err(Error::domain("target band needs 0 < f_lo < f_hi"));
        }
        Ok(TargetBand { f_lo, f_hi })
    }

    /// The speech band: 200 Hz to 1.5 kHz.
    pub fn vocal() -> Self {
        TargetBand {
            f_lo: 200.0,
            f_hi: 1500.0,
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_lo && f <= self.f_hi
    }
}

/// Geometry parameter a design search may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignParameter {
    BeamLength,
    BeamWidth,
    BeamThickness,
    /// Plate length and width together (square plate).
    PlateSide,
    MagnetThickness,
    CoilTurns,
    /// Magnet-top-to-coil-plane spacing.
    CoilGap,
}

impl DesignParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignParameter::BeamLength => "beam_length",
            DesignParameter::BeamWidth => "beam_width",
            DesignParameter::BeamThickness => "beam_thickness",
            DesignParameter::PlateSide => "plate_side",
            DesignParameter::MagnetThickness => "magnet_thickness",
            DesignParameter::CoilTurns => "coil_turns",
            DesignParameter::CoilGap => "coil_gap",
        }
    }

    pub fn from_str(name: &str) -> Result<Self> {
        Ok(match name {
            "beam_length" => DesignParameter::BeamLength,
            "beam_width" => DesignParameter::BeamWidth,
            "beam_thickness" => DesignParameter::BeamThickness,
            "plate_side" => DesignParameter::PlateSide,
            "magnet_thickness" => DesignParameter::MagnetThickness,
            "coil_turns" => DesignParameter::CoilTurns,
            "coil_gap" => DesignParameter::CoilGap,
            other => {
                return Err(Error::Domain(format!(
                    "unknown design variable `{other}`; expected one of beam_length, beam_width, \
                     beam_thickness, plate_side, magnet_thickness, coil_turns, coil_gap"
                )))
            }
        })
    }

    /// Nominal value of this parameter in a device.
    pub fn nominal(&self, device: &DeviceModel) -> f64 {
        match self {
            DesignParameter::BeamLength => device.beam.length,
            DesignParameter::BeamWidth => device.beam.width,
            DesignParameter::BeamThickness => device.beam.thickness,
            DesignParameter::PlateSide => device.plate.length,
            DesignParameter::MagnetThickness => device.magnet.thickness_z,
            DesignParameter::CoilTurns => device.coil.turns as f64,
            DesignParameter::CoilGap => device.assembly.coil_gap,
        }
    }
}

/// A parameter with box bounds in its native units. Equal bounds pin the
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignVariable {
    pub parameter: DesignParameter,
    pub lo: f64,
    pub hi: f64,
}

impl DesignVariable {
    pub fn new(parameter: DesignParameter, lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::domain("variable bounds must be positive with lo <= hi"));
        }
        Ok(DesignVariable { parameter, lo, hi })
    }
}

/// Measured quantities for the consistency report; absent fields produce
/// rows marked unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasuredReference {
    /// First resonance (Hz).
    pub resonance: Option<f64>,
    /// Plated structural thickness (m).
    pub thickness: Option<f64>,
    /// Displacement amplitude at resonance (m).
    pub amplitude: Option<f64>,
    /// Peak-to-peak EMF (V).
    pub emf_pp: Option<f64>,
    /// Coil resistance from the pads (ohm).
    pub coil_resistance: Option<f64>,
}

impl MeasuredReference {
    /// The reference measurement set shipped with the tool: 470 Hz resonance,
    /// 14 um plated thickness, 2.8 um amplitude, 0.24 mV peak-to-peak,
    /// 58 ohm.
    pub fn reference() -> Self {
        MeasuredReference {
            resonance: Some(470.0),
            thickness: Some(14e-6),
            amplitude: Some(2.8e-6),
            emf_pp: Some(0.24e-3),
            coil_resistance: Some(58.0),
        }
    }
}

// ---------------------------------------------------------------------------
// candidate evaluation shared by the design operations

/// Evaluates candidate designs, treating the turn count as a continuous
/// variable: a fractional turn contributes that fraction of the next loop's
/// gradient. Per-loop gradients are cached per (magnet thickness, coil gap).
struct DesignEval<'a> {
    template: &'a DeviceModel,
    variables: &'a [DesignVariable],
    max_turns: usize,
    gradient_cache: std::cell::RefCell<HashMap<(u64, u64), Vec<f64>>>,
}

/// Everything the design operations need to know about one candidate.
#[derive(Debug, Clone)]
struct Candidate {
    device: DeviceModel,
    turns_value: f64,
    f1: f64,
    amplitude: f64,
    stress: f64,
    emf_pp: f64,
    footprint: f64,
}

impl<'a> DesignEval<'a> {
    fn new(template: &'a DeviceModel, variables: &'a [DesignVariable]) -> Self {
        let mut max_turns = template.coil.turns;
        for v in variables {
            if v.parameter == DesignParameter::CoilTurns {
                max_turns = max_turns.max(v.hi.ceil() as usize);
            }
        }
        DesignEval {
            template,
            variables,
            max_turns,
            gradient_cache: std::cell::RefCell::new(HashMap::new()),
        }
    }

    /// Apply variable values; turn count is returned separately because it
    /// may be fractional during a search.
    fn device_for(&self, x: &[f64]) -> (DeviceModel, f64) {
        let mut device = self.template.clone();
        let mut turns_value = device.coil.turns as f64;
        for (var, &value) in self.variables.iter().zip(x) {
            match var.parameter {
                DesignParameter::BeamLength => device.beam.length = value,
                DesignParameter::BeamWidth => device.beam.width = value,
                DesignParameter::BeamThickness => device.beam.thickness = value,
                DesignParameter::PlateSide => {
                    device.plate.length = value;
                    device.plate.width = value;
                }
                DesignParameter::MagnetThickness => device.magnet.thickness_z = value,
                DesignParameter::CoilTurns => turns_value = value,
                DesignParameter::CoilGap => {
                    device.assembly.coil_gap = value;
                    device.coil.plane_height = value;
                }
            }
        }
        (device, turns_value)
    }

    fn natural_frequency(&self, x: &[f64]) -> Result<f64> {
        let (device, _) = self.device_for(x);
        Ok(device.modal(false)?.natural_frequency)
    }

    /// Per-loop gradient contributions at the candidate's magnet thickness
    /// and coil gap, for `max_turns` loops.
    fn per_loop_gradients(&self, device: &DeviceModel) -> Result<Vec<f64>> {
        let key = (
            device.magnet.thickness_z.to_bits(),
            device.assembly.coil_gap.to_bits(),
        );
        if let Some(hit) = self.gradient_cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let mut coil_spec = device.coil;
        coil_spec.turns = self.max_turns;
        let h = magnetics::default_gradient_step(coil_spec.plane_height);
        let loops = coil::per_turn_flux_gradients(
            &device.magnet,
            &coil_spec,
            0.0,
            h,
            &QuadConfig::default(),
        )?;
        self.gradient_cache.borrow_mut().insert(key, loops.clone());
        Ok(loops)
    }

    fn flux_gradient(&self, device: &DeviceModel, turns_value: f64) -> Result<f64> {
        let loops = self.per_loop_gradients(device)?;
        let n = turns_value.clamp(0.0, self.max_turns as f64);
        let whole = n.floor() as usize;
        let frac = n - whole as f64;
        let mut g: f64 = loops.iter().take(whole).sum();
        if frac > 0.0 && whole < loops.len() {
            g += frac * loops[whole];
        }
        Ok(g)
    }

    /// Full evaluation: frequency, resonant amplitude under the drive, peak
    /// stress, open-circuit EMF at the candidate's own resonance, and the
    /// planar footprint.
    fn evaluate(&self, x: &[f64], drive: DriveKind) -> Result<Candidate> {
        let (device, turns_value) = self.device_for(x);
        let modal = device.modal(false)?;
        let f1 = modal.natural_frequency;

        let amplitude = match drive {
            DriveKind::Displacement(d) => d,
            _ => {
                let pressure = match drive {
                    DriveKind::Pressure(p) => p,
                    DriveKind::Spl(s) => response::spl_to_pressure(s),
                    DriveKind::Displacement(_) => unreachable!(),
                };
                let force = response::acoustic_force(pressure, device.effective_area());
                let osc = OscillatorParams::new(
                    modal.effective_mass,
                    modal.stiffness_total,
                    device.damping_ratio(),
                )?;
                response::steady_amplitude(&osc, force, f1)?
            }
        };
        let stress = suspension::max_bending_stress(&device.material, &device.beam, amplitude)?;
        let g = self.flux_gradient(&device, turns_value)?;
        let emf_pp = response::emf_pp(g, amplitude, f1);

        let mut coil_probe = device.coil;
        coil_probe.turns = turns_value.ceil() as usize;
        let footprint = device
            .plate
            .length
            .max(device.plate.width)
            .max(device.magnet.length_x)
            .max(device.magnet.width_y)
            .max(coil_outer_extent(&coil_probe, turns_value));

        Ok(Candidate {
            device,
            turns_value,
            f1,
            amplitude,
            stress,
            emf_pp,
            footprint,
        })
    }
}

/// Outer edge-to-edge extent of a winding with possibly fractional turns.
fn coil_outer_extent(coil_spec: &crate::coil::CoilSpec, turns_value: f64) -> f64 {
    if turns_value <= 0.0 {
        return 0.0;
    }
    coil_spec.inner_side + 2.0 * (turns_value - 1.0).max(0.0) * coil_spec.pitch()
        + coil_spec.trace_width
}

// ---------------------------------------------------------------------------
// match_frequency

/// Find the value of `variable` at which the first-mode frequency equals
/// `target` within `tol_hz`, by bisection.
///
/// The frequency must vary monotonically over the bounds (checked on a
/// coarse sample) and the bounds must bracket the target.
pub fn match_frequency(
    template: &DeviceModel,
    variable: &DesignVariable,
    target: f64,
    tol_hz: f64,
) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::domain("target frequency must be positive"));
    }
    if !(tol_hz > 0.0) {
        return Err(Error::domain("frequency tolerance must be positive"));
    }
    if variable.lo >= variable.hi {
        return Err(Error::domain("match_frequency needs lo < hi bounds"));
    }
    let vars = [*variable];
    let eval = DesignEval::new(template, &vars);
    let f_of = |v: f64| eval.natural_frequency(&[v]);

    // monotonicity probe
    let samples = 9;
    let mut prev = f_of(variable.lo)?;
    let f_lo = prev;
    let mut direction = 0i8;
    for i in 1..samples {
        let v = variable.lo + (variable.hi - variable.lo) * i as f64 / (samples - 1) as f64;
        let f = f_of(v)?;
        let step = match f.partial_cmp(&prev) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        };
        if step == 0 || (direction != 0 && step != direction) {
            return Err(Error::Domain(format!(
                "natural frequency is not strictly monotone in {} over [{:e}, {:e}]",
                variable.parameter.as_str(),
                variable.lo,
                variable.hi
            )));
        }
        direction = step;
        prev = f;
    }
    let f_hi = prev;

    let (flo_diff, fhi_diff) = (f_lo - target, f_hi - target);
    if flo_diff != 0.0 && fhi_diff != 0.0 && flo_diff.signum() == fhi_diff.signum() {
        return Err(Error::Infeasible(format!(
            "target {target} Hz is outside the reachable range: f1({:e}) = {f_lo:.3} Hz, \
             f1({:e}) = {f_hi:.3} Hz",
            variable.lo, variable.hi
        )));
    }

    rootfind::bisect(
        |v| f_of(v).expect("frequency evaluation inside bisection") - target,
        variable.lo,
        variable.hi,
        tol_hz,
        200,
    )
}

// ---------------------------------------------------------------------------
// maximize_emf

/// Constraint set and search budget for [`maximize_emf`].
#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    /// The resonance must land inside this band.
    pub band: TargetBand,
    /// Maximum planar extent of plate, magnet, or winding (m).
    pub die_side: f64,
    /// Underlying simplex search controls.
    pub search: SearchOptions,
    /// Recorded for reproducibility; the search itself is deterministic.
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            band: TargetBand::vocal(),
            die_side: 3e-3,
            search: SearchOptions::default(),
            seed: 0,
        }
    }
}

/// Best design found by [`maximize_emf`].
#[derive(Debug, Clone)]
pub struct EmfOptimum {
    /// Optimized value per variable, in the order given. Turn counts are
    /// already rounded to whole turns.
    pub values: Vec<f64>,
    /// Realized device (whole turns applied).
    pub device: DeviceModel,
    /// Open-circuit peak-to-peak EMF at the realized design's resonance (V).
    pub emf_pp: f64,
    /// Resonance of the realized design (Hz).
    pub f1: f64,
    /// Resonant amplitude under the given drive (m).
    pub amplitude: f64,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// Every candidate the search visited, with its penalized objective.
    pub log: Vec<EvalRecord>,
}

const PENALTY_WEIGHT: f64 = 1e3;
/// Relative slack when re-checking constraints on the final design.
const FEASIBILITY_TOL: f64 = 1e-9;

fn constraint_violation(c: &Candidate, opts: &OptimizeOptions) -> f64 {
    let mut v = 0.0f64;
    if c.f1 < opts.band.f_lo {
        v += (opts.band.f_lo - c.f1) / opts.band.f_lo;
    }
    if c.f1 > opts.band.f_hi {
        v += (c.f1 - opts.band.f_hi) / opts.band.f_hi;
    }
    // yielding risk against the lower strength bound
    if c.stress > c.device.material.yield_low {
        v += (c.stress - c.device.material.yield_low) / c.device.material.yield_low;
    }
    if c.footprint > opts.die_side {
        v += (c.footprint - opts.die_side) / opts.die_side;
    }
    v
}

/// Search for the maximum open-circuit EMF at the design's own resonance,
/// subject to the band, yield, and footprint constraints.
///
/// Derivative-free: bounded Nelder-Mead restarted from a coarse grid.
/// The result is the best design found, not a certified optimum.
pub fn maximize_emf(
    template: &DeviceModel,
    variables: &[DesignVariable],
    drive: DriveKind,
    opts: &OptimizeOptions,
) -> Result<EmfOptimum> {
    if variables.is_empty() {
        return Err(Error::domain("maximize_emf needs at least one variable"));
    }
    let eval = DesignEval::new(template, variables);

    // reference scale so the penalty weights mean the same thing for any coil
    let nominal_x: Vec<f64> = variables
        .iter()
        .map(|v| v.parameter.nominal(template).clamp(v.lo, v.hi))
        .collect();
    let emf_ref = eval
        .evaluate(&nominal_x, drive)
        .map(|c| c.emf_pp)
        .unwrap_or(0.0)
        .max(1e-30);

    let objective = |x: &[f64]| -> f64 {
        match eval.evaluate(x, drive) {
            Ok(c) => {
                let viol = constraint_violation(&c, opts);
                -c.emf_pp / emf_ref + PENALTY_WEIGHT * (viol + viol * viol)
            }
            Err(_) => f64::INFINITY,
        }
    };

    let bounds = Bounds::new(
        variables.iter().map(|v| v.lo).collect(),
        variables.iter().map(|v| v.hi).collect(),
    )?;
    let search = optimize::multi_start_minimize(objective, &bounds, &opts.search)?;

    // realize whole turns, preferring the higher count when both stay feasible
    let realized = realize_candidate(&eval, &search.x, variables, drive, opts)?;
    let candidate = match realized {
        Some(c) => c,
        None => {
            return Err(Error::infeasible(
                "no feasible design found: every start violates the constraints",
            ))
        }
    };

    let values: Vec<f64> = variables
        .iter()
        .zip(&search.x)
        .map(|(v, &x)| {
            if v.parameter == DesignParameter::CoilTurns {
                candidate.turns_value
            } else {
                x
            }
        })
        .collect();

    let mut device = candidate.device.clone();
    if variables
        .iter()
        .any(|v| v.parameter == DesignParameter::CoilTurns)
    {
        device.coil.turns = candidate.turns_value as usize;
    }

    Ok(EmfOptimum {
        values,
        device,
        emf_pp: candidate.emf_pp,
        f1: candidate.f1,
        amplitude: candidate.amplitude,
        evaluations: search.evaluations,
        log: search.log,
    })
}

/// Round a fractional turn count to whole turns without losing feasibility.
fn realize_candidate(
    eval: &DesignEval<'_>,
    x: &[f64],
    variables: &[DesignVariable],
    drive: DriveKind,
    opts: &OptimizeOptions,
) -> Result<Option<Candidate>> {
    let turns_idx = variables
        .iter()
        .position(|v| v.parameter == DesignParameter::CoilTurns);

    let feasible = |c: &Candidate| constraint_violation(c, opts) <= FEASIBILITY_TOL;

    match turns_idx {
        None => {
            let c = eval.evaluate(x, drive)?;
            Ok(feasible(&c).then_some(c))
        }
        Some(idx) => {
            let var = &variables[idx];
            let lo = var.lo.ceil();
            let hi = var.hi.floor();
            let mut best: Option<Candidate> = None;
            let mut candidates = vec![x[idx].round(), x[idx].floor(), x[idx].ceil()];
            candidates.retain(|t| *t >= lo && *t <= hi);
            candidates.dedup();
            for t in candidates {
                let mut xt = x.to_vec();
                xt[idx] = t;
                let c = eval.evaluate(&xt, drive)?;
                if feasible(&c) && best.as_ref().map_or(true, |b| c.emf_pp > b.emf_pp) {
                    best = Some(c);
                }
            }
            Ok(best)
        }
    }
}

// ---------------------------------------------------------------------------
// sensitivity

/// Relative sensitivities (p/f)(df/dp) at the nominal design.
#[derive(Debug, Clone, Copy)]
pub struct Sensitivity {
    /// Of the first-mode frequency.
    pub f1: f64,
    /// Of the open-circuit EMF at the design's own resonance.
    pub emf_pp: f64,
}

/// Central-difference relative sensitivity of f1 and EMF to `parameter`.
pub fn sensitivity(
    device: &DeviceModel,
    parameter: DesignParameter,
    rel_step: f64,
    drive: DriveKind,
) -> Result<Sensitivity> {
    if !(rel_step > 0.0 && rel_step < 0.5) {
        return Err(Error::domain("relative step must lie in (0, 0.5)"));
    }
    let p0 = parameter.nominal(device);
    let vars = [DesignVariable::new(
        parameter,
        p0 * (1.0 - 2.0 * rel_step),
        p0 * (1.0 + 2.0 * rel_step),
    )?];
    let eval = DesignEval::new(device, &vars);
    let up = eval.evaluate(&[p0 * (1.0 + rel_step)], drive)?;
    let down = eval.evaluate(&[p0 * (1.0 - rel_step)], drive)?;
    let mid = eval.evaluate(&[p0], drive)?;

    let rel = |hi: f64, lo: f64, center: f64| {
        if center == 0.0 {
            0.0
        } else {
            (hi - lo) / (2.0 * rel_step * center)
        }
    };
    Ok(Sensitivity {
        f1: rel(up.f1, down.f1, mid.f1),
        emf_pp: rel(up.emf_pp, down.emf_pp, mid.emf_pp),
    })
}

// ---------------------------------------------------------------------------
// consistency report

/// One compared quantity. `model_at_measured_thickness` re-evaluates the
/// model with the beam thickness replaced by the measured plated thickness;
/// quantities that do not depend on it repeat the nominal value.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyRow {
    pub quantity: &'static str,
    pub unit: &'static str,
    pub model_nominal: Option<f64>,
    pub model_at_measured_thickness: Option<f64>,
    pub measured: Option<f64>,
}

impl ConsistencyRow {
    /// The model column used for ratios: the measured-thickness value when
    /// present, the nominal otherwise.
    pub fn effective_model(&self) -> Option<f64> {
        self.model_at_measured_thickness.or(self.model_nominal)
    }

    pub fn model_over_measured(&self) -> Option<f64> {
        match (self.effective_model(), self.measured) {
            (Some(m), Some(x)) if x != 0.0 => Some(m / x),
            _ => None,
        }
    }

    pub fn measured_over_model(&self) -> Option<f64> {
        match (self.effective_model(), self.measured) {
            (Some(m), Some(x)) if m != 0.0 => Some(x / m),
            _ => None,
        }
    }
}

/// Model-vs-measurement comparison. The model is never adjusted to fit; the
/// rows simply quantify the gap.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
}

/// Compare the device model against measured values.
///
/// The EMF row evaluates the model at the measured amplitude and measured
/// resonance, which isolates the electromagnetic coupling from the unknown
/// acoustic drive path. The amplitude row has no model value for the same
/// reason: the speaker-to-plate pressure transfer is not modeled.
pub fn consistency_report(
    device: &DeviceModel,
    measured: &MeasuredReference,
) -> Result<ConsistencyReport> {
    let nominal = device.modal(false)?;
    let thinned_f1 = match measured.thickness {
        Some(h) => {
            let mut d = device.clone();
            d.beam.thickness = h;
            Some(d.modal(false)?.natural_frequency)
        }
        None => None,
    };
    let resistance = device.coil_resistance()?;

    // flux gradient is only needed when the EMF row has data to compare
    let model_emf = match (measured.amplitude, measured.resonance) {
        (Some(z0), Some(f)) => {
            let g = device.flux_gradient_at_rest()?;
            Some(response::emf_pp(g, z0, f))
        }
        _ => None,
    };

    let rows = vec![
        ConsistencyRow {
            quantity: "resonance_frequency",
            unit: "Hz",
            model_nominal: Some(nominal.natural_frequency),
            model_at_measured_thickness: thinned_f1,
            measured: measured.resonance,
        },
        ConsistencyRow {
            quantity: "coil_resistance",
            unit: "ohm",
            model_nominal: Some(resistance),
            model_at_measured_thickness: Some(resistance),
            measured: measured.coil_resistance,
        },
        ConsistencyRow {
            quantity: "beam_thickness",
            unit: "m",
            model_nominal: Some(device.beam.thickness),
            model_at_measured_thickness: measured.thickness,
            measured: measured.thickness,
        },
        ConsistencyRow {
            quantity: "amplitude",
            unit: "m",
            model_nominal: None,
            model_at_measured_thickness: None,
            measured: measured.amplitude,
        },
        ConsistencyRow {
            quantity: "emf_pp",
            unit: "V",
            model_nominal: model_emf,
            model_at_measured_thickness: model_emf,
            measured: measured.emf_pp,
        },
    ];
    Ok(ConsistencyReport { rows })
}
