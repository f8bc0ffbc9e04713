//! Lumped mechanics of the four-beam suspended plate carrying the magnet.
//!
//! Each suspension beam is anchored at its midpoint region and drives a rigid
//! plate, so the full-length beam behaves fixed-guided: transverse stiffness
//! 12EI/L^3. The first mode is piston-like translation of plate plus magnet,
//! reducing the structure to a single spring-mass pair.

use crate::error::{Error, Result};
use crate::magnetics::MagnetSpec;

/// Fraction of distributed beam mass participating in the piston mode for a
/// fixed-guided beam.
pub const BEAM_MASS_PARTICIPATION: f64 = 13.0 / 35.0;

/// Structural and magnet material properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Young's modulus of the structural film (Pa).
    pub youngs_modulus: f64,
    /// Density of the structural film (kg/m^3).
    pub structure_density: f64,
    /// Density of the magnet (kg/m^3).
    pub magnet_density: f64,
    /// Lower bound of the film yield strength (Pa).
    pub yield_low: f64,
    /// Upper bound of the film yield strength (Pa).
    pub yield_high: f64,
}

impl MaterialParams {
    pub fn new(
        youngs_modulus: f64,
        structure_density: f64,
        magnet_density: f64,
        yield_low: f64,
        yield_high: f64,
    ) -> Result<Self> {
        let m = MaterialParams {
            youngs_modulus,
            structure_density,
            magnet_density,
            yield_low,
            yield_high,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("youngs_modulus", self.youngs_modulus),
            ("structure_density", self.structure_density),
            ("magnet_density", self.magnet_density),
            ("yield_low", self.yield_low),
            ("yield_high", self.yield_high),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("material {name} must be positive")));
            }
        }
        if self.yield_low > self.yield_high {
            return Err(Error::domain("yield_low must not exceed yield_high"));
        }
        Ok(())
    }
}

/// One suspension beam plus the count of identical beams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Beam length L (m).
    pub length: f64,
    /// Beam width W (m), in-plane.
    pub width: f64,
    /// Beam thickness H (m), out-of-plane.
    pub thickness: f64,
    /// Number of beams.
    pub count: usize,
}

impl BeamSpec {
    pub fn new(length: f64, width: f64, thickness: f64, count: usize) -> Result<Self> {
        let b = BeamSpec {
            length,
            width,
            thickness,
            count,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("beam {name} must be positive")));
            }
        }
        if self.count == 0 {
            return Err(Error::domain("beam count must be at least 1"));
        }
        Ok(())
    }

    /// Mass of a single beam for the given density.
    pub fn mass(&self, density: f64) -> f64 {
        density * self.length * self.width * self.thickness
    }
}

/// Suspended plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateSpec {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
}

impl PlateSpec {
    pub fn new(length: f64, width: f64, thickness: f64) -> Result<Self> {
        let p = PlateSpec {
            length,
            width,
            thickness,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("plate {name} must be positive")));
            }
        }
        Ok(())
    }

    /// Plate footprint area (m^2).
    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.thickness
    }
}

/// Stiffness, mass, and first-mode frequency of the suspension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalResult {
    /// Total suspension stiffness (N/m).
    pub stiffness_total: f64,
    /// Effective moving mass (kg).
    pub effective_mass: f64,
    /// First-mode natural frequency (Hz).
    pub natural_frequency: f64,
}

impl ModalResult {
    /// Build from stiffness and mass; the frequency is derived so the triple
    /// is internally consistent by construction.
    pub fn from_stiffness_mass(stiffness_total: f64, effective_mass: f64) -> Result<Self> {
        let natural_frequency = natural_frequency(stiffness_total, effective_mass)?;
        Ok(ModalResult {
            stiffness_total,
            effective_mass,
            natural_frequency,
        })
    }
}

/// Out-of-plane stiffness of one fixed-guided beam: 12EI/L^3 with
/// I = W H^3 / 12.
pub fn beam_stiffness(mat: &MaterialParams, beam: &BeamSpec) -> Result<f64> {
    mat.validate()?;
    beam.validate()?;
    let l = beam.length;
    Ok(mat.youngs_modulus * beam.width * beam.thickness.powi(3) / (l * l * l))
}

/// Suspension stiffness: `count` beams act in parallel.
pub fn total_stiffness(mat: &MaterialParams, beam: &BeamSpec) -> Result<f64> {
    Ok(beam.count as f64 * beam_stiffness(mat, beam)?)
}

/// Piston-mode moving mass: plate plus magnet, with an optional distributed
/// beam participation term (13/35 of the total beam mass). The beam term is
/// well under a percent for realistic geometries and defaults off.
pub fn effective_mass(
    mat: &MaterialParams,
    plate: &PlateSpec,
    magnet: &MagnetSpec,
    beam: &BeamSpec,
    include_beam_mass: bool,
) -> Result<f64> {
    mat.validate()?;
    plate.validate()?;
    magnet.validate()?;
    beam.validate()?;
    let mut m = mat.structure_density * plate.volume() + mat.magnet_density * magnet.volume();
    if include_beam_mass {
        m += BEAM_MASS_PARTICIPATION * beam.count as f64 * beam.mass(mat.structure_density);
    }
    Ok(m)
}

/// First-mode frequency of a spring-mass pair: (1/2pi) sqrt(k/m).
pub fn natural_frequency(stiffness: f64, mass: f64) -> Result<f64> {
    if !(stiffness > 0.0 && stiffness.is_finite()) {
        return Err(Error::domain("stiffness must be positive"));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::domain("mass must be positive"));
    }
    Ok((stiffness / mass).sqrt() / (2.0 * std::f64::consts::PI))
}

/// Peak bending stress in a fixed-guided beam deflected by `deflection`:
/// sigma = 3 E H delta / L^2 (end moment 6EI delta/L^2 at the outer fiber).
pub fn max_bending_stress(mat: &MaterialParams, beam: &BeamSpec, deflection: f64) -> Result<f64> {
    mat.validate()?;
    beam.validate()?;
    if !(deflection >= 0.0 && deflection.is_finite()) {
        return Err(Error::domain("deflection must be non-negative"));
    }
    let l = beam.length;
    Ok(3.0 * mat.youngs_modulus * beam.thickness * deflection / (l * l))
}

/// Yield margins (low, high): yield strength band divided by the stress.
/// Margins below 1 flag yielding risk; zero stress reports unbounded margins.
pub fn yield_margin(stress: f64, mat: &MaterialParams) -> Result<(f64, f64)> {
    mat.validate()?;
    if !(stress >= 0.0 && stress.is_finite()) {
        return Err(Error::domain("stress must be non-negative"));
    }
    if stress == 0.0 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    Ok((mat.yield_low / stress, mat.yield_high / stress))
}
