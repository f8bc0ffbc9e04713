//! Forced harmonic response, induced EMF, load power, and time-domain
//! simulation.
//!
//! The suspension reduces to a single damped oscillator driven by acoustic
//! pressure on the plate. Induced EMF is the linearized Faraday law around
//! the rest position for frequency sweeps; the time-domain integrator instead
//! carries the position-dependent flux gradient sampled once on a z grid and
//! interpolated with a cubic spline.

use crate::coil::{self, CoilSpec};
use crate::error::{Error, Result};
use crate::magnetics::MagnetSpec;
use crate::quadrature::QuadConfig;

/// Reference sound pressure for SPL, 20 uPa.
pub const SPL_REFERENCE_PRESSURE: f64 = 20e-6;

/// Resonant-amplification cap used only to size the flux-profile span when
/// the damping ratio is very small or zero.
const PROFILE_Q_CAP: f64 = 50.0;

/// Number of flux samples in a time-simulation profile.
const PROFILE_SAMPLES: usize = 201;

/// Acoustic (or prescribed-motion) drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveKind {
    /// Pressure amplitude at the plate (Pa).
    Pressure(f64),
    /// Sound pressure level (dB re 20 uPa).
    Spl(f64),
    /// Displacement amplitude imposed directly (m), bypassing the oscillator.
    Displacement(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub kind: DriveKind,
    /// Drive frequency (Hz).
    pub frequency: f64,
}

impl DriveSpec {
    pub fn new(kind: DriveKind, frequency: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::domain("drive frequency must be positive"));
        }
        let ok = match kind {
            DriveKind::Pressure(p) => p >= 0.0 && p.is_finite(),
            DriveKind::Spl(s) => s.is_finite(),
            DriveKind::Displacement(d) => d >= 0.0 && d.is_finite(),
        };
        if !ok {
            return Err(Error::domain("drive magnitude must be finite and non-negative"));
        }
        Ok(DriveSpec { kind, frequency })
    }
}

/// Lumped oscillator: mass, stiffness, viscous damping ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub mass: f64,
    pub stiffness: f64,
    pub damping_ratio: f64,
}

impl OscillatorParams {
    pub fn new(mass: f64, stiffness: f64, damping_ratio: f64) -> Result<Self> {
        let o = OscillatorParams {
            mass,
            stiffness,
            damping_ratio,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::domain("oscillator mass must be positive"));
        }
        if !(self.stiffness > 0.0 && self.stiffness.is_finite()) {
            return Err(Error::domain("oscillator stiffness must be positive"));
        }
        if !(self.damping_ratio >= 0.0 && self.damping_ratio < 1.0) {
            return Err(Error::domain("damping ratio must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Undamped angular frequency (rad/s).
    pub fn omega_n(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    /// Undamped natural frequency (Hz).
    pub fn natural_frequency(&self) -> f64 {
        self.omega_n() / (2.0 * std::f64::consts::PI)
    }

    /// Viscous damping coefficient c = 2 zeta sqrt(k m).
    pub fn damping_coefficient(&self) -> f64 {
        2.0 * self.damping_ratio * (self.stiffness * self.mass).sqrt()
    }
}

/// One frequency sample of the device response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    pub frequency: f64,
    /// Displacement amplitude z0 (m).
    pub amplitude: f64,
    /// Peak velocity (m/s).
    pub velocity_peak: f64,
    /// Peak-to-peak EMF (V).
    pub emf_pp: f64,
    /// Power delivered to the load (W).
    pub load_power: f64,
}

pub type ResponseCurve = Vec<ResponsePoint>;

/// Coil plus load resistances for power delivery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCircuit {
    pub coil_resistance: f64,
    pub load_resistance: f64,
}

impl LoadCircuit {
    pub fn new(coil_resistance: f64, load_resistance: f64) -> Result<Self> {
        if !(coil_resistance >= 0.0 && coil_resistance.is_finite())
            || !(load_resistance >= 0.0 && load_resistance.is_finite())
        {
            return Err(Error::domain("circuit resistances must be non-negative"));
        }
        Ok(LoadCircuit {
            coil_resistance,
            load_resistance,
        })
    }

    /// Matched load: load resistance equal to the coil resistance.
    pub fn matched(coil_resistance: f64) -> Result<Self> {
        LoadCircuit::new(coil_resistance, coil_resistance)
    }
}

/// Pressure amplitude (Pa) for a sound pressure level in dB re 20 uPa.
pub fn spl_to_pressure(spl_db: f64) -> f64 {
    SPL_REFERENCE_PRESSURE * 10f64.powf(spl_db / 20.0)
}

/// Force amplitude on the plate: pressure times effective area.
pub fn acoustic_force(pressure: f64, effective_area: f64) -> f64 {
    pressure * effective_area
}

/// Steady-state displacement amplitude of the driven oscillator.
///
/// z0 = (F0/k) / sqrt((1-r^2)^2 + (2 zeta r)^2) with r = f/f1. An undamped
/// oscillator driven exactly at resonance has no bounded steady state and is
/// reported as a numerical error.
pub fn steady_amplitude(osc: &OscillatorParams, force_amplitude: f64, f: f64) -> Result<f64> {
    osc.validate()?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::domain("drive frequency must be positive"));
    }
    if !(force_amplitude >= 0.0 && force_amplitude.is_finite()) {
        return Err(Error::domain("force amplitude must be non-negative"));
    }
    let r = f / osc.natural_frequency();
    let zeta = osc.damping_ratio;
    let denom = ((1.0 - r * r).powi(2) + (2.0 * zeta * r).powi(2)).sqrt();
    if denom == 0.0 {
        return Err(Error::numerical(
            "undamped oscillator driven exactly at resonance has unbounded amplitude",
        ));
    }
    Ok(force_amplitude / osc.stiffness / denom)
}

/// Peak-to-peak EMF from the linearized Faraday law:
/// V_peak = |dPhi/dz| z0 2 pi f, reported as 2 V_peak.
pub fn emf_pp(flux_gradient: f64, amplitude: f64, f: f64) -> f64 {
    2.0 * flux_gradient.abs() * amplitude * 2.0 * std::f64::consts::PI * f
}

/// Power delivered to the load resistor: V_rms^2 R_load / (R_coil + R_load)^2.
pub fn load_power(emf_rms: f64, circuit: &LoadCircuit) -> f64 {
    let total = circuit.coil_resistance + circuit.load_resistance;
    if total == 0.0 {
        return 0.0;
    }
    emf_rms * emf_rms * circuit.load_resistance / (total * total)
}

/// Series array of `n` identical in-phase units: EMF and source resistance
/// both scale by `n`.
pub fn array_series(unit_emf: f64, unit_resistance: f64, n: usize) -> (f64, f64) {
    (n as f64 * unit_emf, n as f64 * unit_resistance)
}

// ---------------------------------------------------------------------------
// cubic spline over uniformly spaced samples

/// Natural cubic spline on a uniform grid.
#[derive(Debug, Clone)]
struct CubicSpline {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    y2: Vec<f64>,
}

impl CubicSpline {
    fn new(x0: f64, dx: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        assert!(n >= 2, "spline needs at least two samples");
        // natural boundary conditions: y'' = 0 at both ends
        let mut y2 = vec![0.0; n];
        if n > 2 {
            let m = n - 2;
            let mut diag = vec![4.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                rhs[i] = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (dx * dx);
            }
            // Thomas algorithm, off-diagonals are all 1
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            y2[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m.saturating_sub(1)).rev() {
                y2[i + 1] = (rhs[i] - y2[i + 2]) / diag[i];
            }
        }
        CubicSpline { x0, dx, y, y2 }
    }

    fn segment(&self, x: f64) -> (usize, f64) {
        let t = (x - self.x0) / self.dx;
        let i = (t.floor() as isize).clamp(0, self.y.len() as isize - 2) as usize;
        (i, t - i as f64)
    }

    /// First derivative of the interpolant.
    fn derivative(&self, x: f64) -> f64 {
        let (i, t) = self.segment(x);
        let (ya, yb) = (self.y[i], self.y[i + 1]);
        let (sa, sb) = (self.y2[i], self.y2[i + 1]);
        (yb - ya) / self.dx - (3.0 * (1.0 - t) * (1.0 - t) - 1.0) * self.dx * sa / 6.0
            + (3.0 * t * t - 1.0) * self.dx * sb / 6.0
    }
}

// ---------------------------------------------------------------------------
// flux profile + time integration

/// Coil flux linkage sampled over a symmetric magnet-offset span, with cubic
/// interpolation for the position-dependent gradient.
#[derive(Debug, Clone)]
pub struct FluxProfile {
    spline: CubicSpline,
    half_span: f64,
}

impl FluxProfile {
    /// Sample the linkage on [`PROFILE_SAMPLES`] offsets in
    /// `[-half_span, +half_span]`.
    pub fn build(magnet: &MagnetSpec, coil_spec: &CoilSpec, half_span: f64) -> Result<Self> {
        if !(half_span > 0.0 && half_span.is_finite()) {
            return Err(Error::domain("profile span must be positive"));
        }
        if half_span >= coil_spec.plane_height {
            return Err(Error::domain(
                "flux profile span exceeds the coil gap; the magnet would cross the coil plane",
            ));
        }
        let n = PROFILE_SAMPLES;
        let dz = 2.0 * half_span / (n - 1) as f64;
        let cfg = QuadConfig::with_rel_tol(1e-7);
        let sampler = coil::LinkageSampler::new(magnet, coil_spec, half_span, &cfg)?;
        let mut samples = vec![0.0; n];
        for (i, s) in samples.iter_mut().enumerate() {
            *s = sampler.flux_at(-half_span + i as f64 * dz)?;
        }
        Ok(FluxProfile {
            spline: CubicSpline::new(-half_span, dz, samples),
            half_span,
        })
    }

    /// dPhi/d(offset) at magnet offset `z`.
    pub fn gradient(&self, z: f64) -> f64 {
        self.spline.derivative(z)
    }

    pub fn half_span(&self) -> f64 {
        self.half_span
    }
}

/// Sampled state trace produced by [`time_simulate`].
#[derive(Debug, Clone)]
pub struct TimeTrace {
    pub dt: f64,
    /// Displacement per step (m).
    pub displacement: Vec<f64>,
    /// Velocity per step (m/s).
    pub velocity: Vec<f64>,
    /// Induced EMF per step (V).
    pub emf: Vec<f64>,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.displacement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacement.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }
}

/// Integrate m z'' + c z' + k z = F(t) with classical fourth-order
/// Runge-Kutta and record (z, z', V) at every step.
///
/// `forcing` holds samples of F at multiples of `dt` and must cover the whole
/// duration; midpoint stage values use linear interpolation between samples.
/// The flux coupling comes from a profile built over the expected motion
/// span, so the magnet must stay clear of the coil plane throughout.
#[allow(clippy::too_many_arguments)]
pub fn time_simulate(
    osc: &OscillatorParams,
    magnet: &MagnetSpec,
    coil: &CoilSpec,
    forcing: &[f64],
    dt: f64,
    duration: f64,
    z_init: f64,
    v_init: f64,
) -> Result<TimeTrace> {
    osc.validate()?;
    if !(dt > 0.0 && dt.is_finite() && duration > 0.0 && duration.is_finite()) {
        return Err(Error::domain("dt and duration must be positive"));
    }
    let f1 = osc.natural_frequency();
    if dt >= 1.0 / (20.0 * f1) {
        return Err(Error::Domain(format!(
            "dt {dt:e} too coarse: need dt < 1/(20 f1) = {:e}",
            1.0 / (20.0 * f1)
        )));
    }
    if !(z_init.is_finite() && v_init.is_finite()) {
        return Err(Error::domain("initial conditions must be finite"));
    }
    let steps = (duration / dt).round() as usize;
    if steps == 0 {
        return Err(Error::domain("duration shorter than one step"));
    }
    if forcing.len() < steps + 1 {
        return Err(Error::Domain(format!(
            "forcing must supply at least {} samples for this duration, got {}",
            steps + 1,
            forcing.len()
        )));
    }
    if forcing.iter().any(|f| !f.is_finite()) {
        return Err(Error::domain("forcing samples must be finite"));
    }

    let f_max = forcing.iter().fold(0.0_f64, |m, f| m.max(f.abs()));
    let quiescent = f_max == 0.0 && z_init == 0.0 && v_init == 0.0;
    if quiescent {
        let n = steps + 1;
        return Ok(TimeTrace {
            dt,
            displacement: vec![0.0; n],
            velocity: vec![0.0; n],
            emf: vec![0.0; n],
        });
    }

    // motion bound: free response from the initial state plus driven response
    // with the amplification capped for tiny damping
    let omega = osc.omega_n();
    let q = if osc.damping_ratio > 0.0 {
        (0.5 / osc.damping_ratio).min(PROFILE_Q_CAP)
    } else {
        PROFILE_Q_CAP
    };
    let free_bound = z_init.abs() + v_init.abs() / omega;
    let driven_bound = f_max / osc.stiffness * q;
    let half_span = 1.1 * (free_bound + driven_bound);
    let profile = FluxProfile::build(magnet, coil, half_span)?;

    let k = osc.stiffness;
    let c = osc.damping_coefficient();
    let m = osc.mass;
    let accel = |force: f64, z: f64, v: f64| (force - c * v - k * z) / m;

    let mut zs = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    let mut z = z_init;
    let mut v = v_init;
    zs.push(z);
    vs.push(v);
    for i in 0..steps {
        let f0 = forcing[i];
        let f1s = forcing[i + 1];
        let fm = 0.5 * (f0 + f1s);

        let k1z = v;
        let k1v = accel(f0, z, v);
        let k2z = v + 0.5 * dt * k1v;
        let k2v = accel(fm, z + 0.5 * dt * k1z, v + 0.5 * dt * k1v);
        let k3z = v + 0.5 * dt * k2v;
        let k3v = accel(fm, z + 0.5 * dt * k2z, v + 0.5 * dt * k2v);
        let k4z = v + dt * k3v;
        let k4v = accel(f1s, z + dt * k3z, v + dt * k3v);

        z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !(z.is_finite() && v.is_finite()) {
            return Err(Error::numerical("time integration diverged"));
        }
        if z.abs() > profile.half_span() {
            return Err(Error::Numerical {
                message: format!(
                    "displacement {z:e} exceeded the precomputed flux profile span {:e}",
                    profile.half_span()
                ),
                achieved: None,
                error_bound: None,
            });
        }
        zs.push(z);
        vs.push(v);
    }

    // undamped free motion must conserve energy; growth flags instability
    if osc.damping_ratio == 0.0 && f_max == 0.0 {
        let energy = |z: f64, v: f64| 0.5 * k * z * z + 0.5 * m * v * v;
        let e0 = energy(z_init, v_init);
        let e_end = energy(*zs.last().unwrap(), *vs.last().unwrap());
        if e_end > e0 * (1.0 + 1e-3) {
            return Err(Error::numerical(
                "energy grew during undamped free motion: unstable step size",
            ));
        }
    }

    let emf: Vec<f64> = zs
        .iter()
        .zip(vs.iter())
        .map(|(&z, &v)| profile.gradient(z) * v)
        .collect();
    Ok(TimeTrace {
        dt,
        displacement: zs,
        velocity: vs,
        emf,
    })
}

// ---------------------------------------------------------------------------
// assembled device response

/// Sweep grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Linear,
    Log,
}

/// Everything needed to evaluate the electrical response at one frequency.
#[derive(Debug, Clone, Copy)]
pub struct ResponseModel {
    pub osc: OscillatorParams,
    /// Linkage gradient at the rest position (Wb/m of magnet travel).
    pub flux_gradient: f64,
    /// Effective acoustic area (m^2).
    pub effective_area: f64,
    pub circuit: LoadCircuit,
}

impl ResponseModel {
    /// Force amplitude for a drive, or `None` for prescribed displacement.
    pub fn force_amplitude(&self, kind: DriveKind) -> Option<f64> {
        match kind {
            DriveKind::Pressure(p) => Some(acoustic_force(p, self.effective_area)),
            DriveKind::Spl(s) => Some(acoustic_force(spl_to_pressure(s), self.effective_area)),
            DriveKind::Displacement(_) => None,
        }
    }

    /// Displacement amplitude at frequency `f` for the given drive.
    pub fn amplitude(&self, kind: DriveKind, f: f64) -> Result<f64> {
        match self.force_amplitude(kind) {
            Some(f0) => steady_amplitude(&self.osc, f0, f),
            None => match kind {
                DriveKind::Displacement(d) => Ok(d),
                _ => unreachable!(),
            },
        }
    }

    /// Full response record at frequency `f`.
    pub fn point(&self, kind: DriveKind, f: f64) -> Result<ResponsePoint> {
        let amplitude = self.amplitude(kind, f)?;
        let velocity_peak = 2.0 * std::f64::consts::PI * f * amplitude;
        let v_pp = emf_pp(self.flux_gradient, amplitude, f);
        let v_rms = 0.5 * v_pp / std::f64::consts::SQRT_2;
        Ok(ResponsePoint {
            frequency: f,
            amplitude,
            velocity_peak,
            emf_pp: v_pp,
            load_power: load_power(v_rms, &self.circuit),
        })
    }

    /// Response sampled on `n_points` frequencies between `f_lo` and `f_hi`.
    pub fn frequency_sweep(
        &self,
        kind: DriveKind,
        f_lo: f64,
        f_hi: f64,
        n_points: usize,
        grid: GridKind,
    ) -> Result<ResponseCurve> {
        if !(f_lo > 0.0 && f_lo.is_finite() && f_hi.is_finite()) {
            return Err(Error::domain("sweep frequencies must be positive"));
        }
        if f_lo >= f_hi {
            return Err(Error::domain("sweep requires f_lo < f_hi"));
        }
        if n_points < 2 {
            return Err(Error::domain("sweep needs at least two points"));
        }
        let n = n_points as f64 - 1.0;
        (0..n_points)
            .map(|i| {
                let t = i as f64 / n;
                let f = match grid {
                    GridKind::Linear => f_lo + t * (f_hi - f_lo),
                    GridKind::Log => f_lo * (f_hi / f_lo).powf(t),
                };
                self.point(kind, f)
            })
            .collect()
    }
}
