//! Device description files and the assembled device model.
//!
//! A device file is flat INI: `[section]` headers and `key = value` pairs,
//! everything in SI base units with no unit suffixes. `#` and `;` start
//! comments. Unknown sections or keys are rejected rather than ignored, so a
//! typo cannot silently fall back to a default. Only four keys are optional
//! and carry documented defaults: `coil.resistivity`, `assembly.coil_gap`,
//! `assembly.effective_area`, and `drive.damping_ratio`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::coil::{self, CoilSpec, NICKEL_RESISTIVITY};
use crate::error::{Error, Result};
use crate::magnetics::{self, MagnetSpec};
use crate::quadrature::QuadConfig;
use crate::response::{DriveKind, DriveSpec, LoadCircuit, OscillatorParams, ResponseModel};
use crate::suspension::{self, BeamSpec, MaterialParams, ModalResult, PlateSpec};

/// Damping ratio used when the device file does not provide one.
pub const DEFAULT_DAMPING_RATIO: f64 = 0.05;

/// Magnet-top-to-coil-plane spacing used when the device file does not
/// provide one (m).
pub const DEFAULT_COIL_GAP: f64 = 10e-6;

/// Bundled reference device, a transcription of the nominal design.
pub const PAPER_NOMINAL: &str = include_str!("../devices/paper_nominal.ini");

/// Assembly-level geometry: what ties the coil wafer to the magnet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblySpec {
    /// Magnet top face to coil plane (m).
    pub coil_gap: f64,
    /// Effective acoustic pickup area override (m^2); plate footprint when
    /// absent.
    pub effective_area: Option<f64>,
}

impl Default for AssemblySpec {
    fn default() -> Self {
        AssemblySpec {
            coil_gap: DEFAULT_COIL_GAP,
            effective_area: None,
        }
    }
}

/// Drive section: damping plus the acoustic or kinematic excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub damping_ratio: f64,
    pub kind: DriveKind,
    pub frequency: f64,
}

/// Fully validated device description.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    pub material: MaterialParams,
    pub beam: BeamSpec,
    pub plate: PlateSpec,
    pub magnet: MagnetSpec,
    pub coil: CoilSpec,
    pub assembly: AssemblySpec,
    pub drive: Option<DriveConfig>,
}

impl DeviceModel {
    /// The bundled reference device.
    pub fn paper_nominal() -> DeviceModel {
        parse_device_str(PAPER_NOMINAL).expect("bundled device file parses")
    }

    pub fn damping_ratio(&self) -> f64 {
        self.drive
            .map(|d| d.damping_ratio)
            .unwrap_or(DEFAULT_DAMPING_RATIO)
    }

    /// Effective acoustic area: explicit override or the plate footprint.
    pub fn effective_area(&self) -> f64 {
        self.assembly.effective_area.unwrap_or_else(|| self.plate.area())
    }

    /// Stiffness, moving mass, and first-mode frequency.
    pub fn modal(&self, include_beam_mass: bool) -> Result<ModalResult> {
        let k = suspension::total_stiffness(&self.material, &self.beam)?;
        let m = suspension::effective_mass(
            &self.material,
            &self.plate,
            &self.magnet,
            &self.beam,
            include_beam_mass,
        )?;
        ModalResult::from_stiffness_mass(k, m)
    }

    /// Lumped oscillator with the device's damping ratio.
    pub fn oscillator(&self) -> Result<OscillatorParams> {
        let modal = self.modal(false)?;
        OscillatorParams::new(modal.effective_mass, modal.stiffness_total, self.damping_ratio())
    }

    /// Coil DC resistance (ohm).
    pub fn coil_resistance(&self) -> Result<f64> {
        coil::resistance(&self.coil)
    }

    /// Flux-linkage gradient at the rest position (Wb/m of magnet travel).
    pub fn flux_gradient_at_rest(&self) -> Result<f64> {
        let h = magnetics::default_gradient_step(self.coil.plane_height);
        coil::coil_flux_gradient(&self.magnet, &self.coil, 0.0, h, &QuadConfig::default())
    }

    /// Assemble the per-frequency response model. Computes the flux gradient,
    /// which dominates the cost of this call.
    pub fn response_model(&self) -> Result<ResponseModel> {
        let r_coil = self.coil_resistance()?;
        Ok(ResponseModel {
            osc: self.oscillator()?,
            flux_gradient: self.flux_gradient_at_rest()?,
            effective_area: self.effective_area(),
            circuit: LoadCircuit::matched(r_coil)?,
        })
    }

    /// The drive section, or a domain error naming the command requirement.
    pub fn require_drive(&self) -> Result<DriveConfig> {
        self.drive.ok_or_else(|| {
            Error::domain("this operation needs a [drive] section in the device file")
        })
    }

    /// Re-serialize to the canonical device-file form. Values keep full
    /// precision, so parsing the output reproduces this model exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[material]");
        let _ = writeln!(s, "youngs_modulus = {:?}", self.material.youngs_modulus);
        let _ = writeln!(s, "structure_density = {:?}", self.material.structure_density);
        let _ = writeln!(s, "magnet_density = {:?}", self.material.magnet_density);
        let _ = writeln!(s, "yield_low = {:?}", self.material.yield_low);
        let _ = writeln!(s, "yield_high = {:?}", self.material.yield_high);
        let _ = writeln!(s);
        let _ = writeln!(s, "[beam]");
        let _ = writeln!(s, "length = {:?}", self.beam.length);
        let _ = writeln!(s, "width = {:?}", self.beam.width);
        let _ = writeln!(s, "thickness = {:?}", self.beam.thickness);
        let _ = writeln!(s, "count = {}", self.beam.count);
        let _ = writeln!(s);
        let _ = writeln!(s, "[plate]");
        let _ = writeln!(s, "length = {:?}", self.plate.length);
        let _ = writeln!(s, "width = {:?}", self.plate.width);
        let _ = writeln!(s, "thickness = {:?}", self.plate.thickness);
        let _ = writeln!(s);
        let _ = writeln!(s, "[magnet]");
        let _ = writeln!(s, "length = {:?}", self.magnet.length_x);
        let _ = writeln!(s, "width = {:?}", self.magnet.width_y);
        let _ = writeln!(s, "thickness = {:?}", self.magnet.thickness_z);
        let _ = writeln!(s, "remanence = {:?}", self.magnet.remanence);
        let _ = writeln!(s);
        let _ = writeln!(s, "[coil]");
        let _ = writeln!(s, "turns = {}", self.coil.turns);
        let _ = writeln!(s, "trace_width = {:?}", self.coil.trace_width);
        let _ = writeln!(s, "gap = {:?}", self.coil.gap);
        let _ = writeln!(s, "trace_thickness = {:?}", self.coil.trace_thickness);
        let _ = writeln!(s, "inner_side = {:?}", self.coil.inner_side);
        let _ = writeln!(s, "resistivity = {:?}", self.coil.resistivity);
        let _ = writeln!(s);
        let _ = writeln!(s, "[assembly]");
        let _ = writeln!(s, "coil_gap = {:?}", self.assembly.coil_gap);
        if let Some(area) = self.assembly.effective_area {
            let _ = writeln!(s, "effective_area = {area:?}");
        }
        if let Some(drive) = &self.drive {
            let _ = writeln!(s);
            let _ = writeln!(s, "[drive]");
            let _ = writeln!(s, "damping_ratio = {:?}", drive.damping_ratio);
            match drive.kind {
                DriveKind::Spl(v) => {
                    let _ = writeln!(s, "spl = {v:?}");
                }
                DriveKind::Pressure(v) => {
                    let _ = writeln!(s, "pressure = {v:?}");
                }
                DriveKind::Displacement(v) => {
                    let _ = writeln!(s, "displacement = {v:?}");
                }
            }
            let _ = writeln!(s, "frequency = {:?}", drive.frequency);
        }
        s
    }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

const KNOWN_SECTIONS: [&str; 7] = [
    "material", "beam", "plate", "magnet", "coil", "assembly", "drive",
];

/// Parse a device file from disk.
pub fn parse_device(path: impl AsRef<Path>) -> Result<DeviceModel> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_device_str(&text)
}

/// Parse a device file from a string.
pub fn parse_device_str(text: &str) -> Result<DeviceModel> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?
                .trim()
                .to_string();
            if !KNOWN_SECTIONS.contains(&name.as_str()) {
                return Err(parse_err(line_no, format!("unknown section [{name}]")));
            }
            if sections.contains_key(&name) {
                return Err(parse_err(line_no, format!("duplicate section [{name}]")));
            }
            sections.insert(
                name.clone(),
                Section {
                    line: line_no,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected `key = value`"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(parse_err(line_no, "expected `key = value`"));
        }
        let section_name = current
            .as_ref()
            .ok_or_else(|| parse_err(line_no, "key outside of any [section]"))?;
        let section = sections.get_mut(section_name).expect("current section exists");
        if section.entries.contains_key(&key) {
            return Err(parse_err(
                line_no,
                format!("duplicate key `{key}` in [{section_name}]"),
            ));
        }
        section.entries.insert(
            key,
            Entry {
                value,
                line: line_no,
                used: false,
            },
        );
    }

    let mut cx = DeviceCx { sections };

    // material
    let material = MaterialParams {
        youngs_modulus: cx.positive("material", "youngs_modulus")?,
        structure_density: cx.positive("material", "structure_density")?,
        magnet_density: cx.positive("material", "magnet_density")?,
        yield_low: cx.positive("material", "yield_low")?,
        yield_high: cx.positive("material", "yield_high")?,
    };
    if material.yield_low > material.yield_high {
        return Err(section_err(
            &cx,
            "material",
            "yield_low must not exceed yield_high",
        ));
    }

    let beam = BeamSpec {
        length: cx.positive("beam", "length")?,
        width: cx.positive("beam", "width")?,
        thickness: cx.positive("beam", "thickness")?,
        count: cx.positive_int("beam", "count")?,
    };
    let plate = PlateSpec {
        length: cx.positive("plate", "length")?,
        width: cx.positive("plate", "width")?,
        thickness: cx.positive("plate", "thickness")?,
    };
    let magnet = MagnetSpec {
        length_x: cx.positive("magnet", "length")?,
        width_y: cx.positive("magnet", "width")?,
        thickness_z: cx.positive("magnet", "thickness")?,
        remanence: cx.positive("magnet", "remanence")?,
    };

    let assembly = AssemblySpec {
        coil_gap: cx
            .optional_positive("assembly", "coil_gap")?
            .unwrap_or(DEFAULT_COIL_GAP),
        effective_area: cx.optional_positive("assembly", "effective_area")?,
    };

    let coil = CoilSpec {
        turns: cx.positive_int("coil", "turns")?,
        trace_width: cx.positive("coil", "trace_width")?,
        gap: cx.positive("coil", "gap")?,
        trace_thickness: cx.positive("coil", "trace_thickness")?,
        inner_side: cx.positive("coil", "inner_side")?,
        resistivity: cx
            .optional_positive("coil", "resistivity")?
            .unwrap_or(NICKEL_RESISTIVITY),
        plane_height: assembly.coil_gap,
    };

    let drive = if cx.sections.contains_key("drive") {
        let damping_ratio = cx
            .optional_positive("drive", "damping_ratio")?
            .unwrap_or(DEFAULT_DAMPING_RATIO);
        if damping_ratio >= 1.0 {
            return Err(section_err(&cx, "drive", "damping_ratio must be below 1"));
        }
        let spl = cx.optional_positive("drive", "spl")?;
        let pressure = cx.optional_positive("drive", "pressure")?;
        let displacement = cx.optional_positive("drive", "displacement")?;
        let provided = [spl.is_some(), pressure.is_some(), displacement.is_some()]
            .iter()
            .filter(|p| **p)
            .count();
        if provided != 1 {
            return Err(section_err(
                &cx,
                "drive",
                "provide exactly one of `spl`, `pressure`, `displacement`",
            ));
        }
        let kind = if let Some(s) = spl {
            DriveKind::Spl(s)
        } else if let Some(p) = pressure {
            DriveKind::Pressure(p)
        } else {
            DriveKind::Displacement(displacement.unwrap())
        };
        let frequency = cx.positive("drive", "frequency")?;
        // validates ranges once more through the response-layer constructor
        DriveSpec::new(kind, frequency)?;
        Some(DriveConfig {
            damping_ratio,
            kind,
            frequency,
        })
    } else {
        None
    };

    cx.reject_unused()?;

    // cross-checks through the domain constructors
    material.validate().map_err(to_parse)?;
    beam.validate().map_err(to_parse)?;
    plate.validate().map_err(to_parse)?;
    magnet.validate().map_err(to_parse)?;
    coil.validate().map_err(to_parse)?;

    Ok(DeviceModel {
        material,
        beam,
        plate,
        magnet,
        coil,
        assembly,
        drive,
    })
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: msg.into(),
    }
}

fn to_parse(e: Error) -> Error {
    Error::Parse {
        line: 0,
        message: e.to_string(),
    }
}

fn section_err(cx: &DeviceCx, section: &str, msg: &str) -> Error {
    let line = cx.sections.get(section).map(|s| s.line).unwrap_or(0);
    parse_err(line, msg)
}

struct DeviceCx {
    sections: BTreeMap<String, Section>,
}

impl DeviceCx {
    fn fetch(&mut self, section: &str, key: &str) -> Result<Option<(String, usize)>> {
        match self.sections.get_mut(section) {
            None => Err(parse_err(0, format!("missing required section [{section}]"))),
            Some(s) => Ok(s.entries.get_mut(key).map(|e| {
                e.used = true;
                (e.value.clone(), e.line)
            })),
        }
    }

    fn required(&mut self, section: &str, key: &str) -> Result<(String, usize)> {
        let header = self.sections.get(section).map(|s| s.line).unwrap_or(0);
        self.fetch(section, key)?.ok_or_else(|| {
            parse_err(header, format!("missing required key `{key}` in [{section}]"))
        })
    }

    fn positive(&mut self, section: &str, key: &str) -> Result<f64> {
        let (text, line) = self.required(section, key)?;
        parse_positive(&text, line, section, key)
    }

    fn optional_positive(&mut self, section: &str, key: &str) -> Result<Option<f64>> {
        if !self.sections.contains_key(section) {
            return Ok(None);
        }
        match self.fetch(section, key)? {
            None => Ok(None),
            Some((text, line)) => parse_positive(&text, line, section, key).map(Some),
        }
    }

    fn positive_int(&mut self, section: &str, key: &str) -> Result<usize> {
        let (text, line) = self.required(section, key)?;
        let n: usize = text.parse().map_err(|_| {
            parse_err(line, format!("`{key}` in [{section}] must be a positive integer"))
        })?;
        if n == 0 {
            return Err(parse_err(
                line,
                format!("`{key}` in [{section}] must be a positive integer"),
            ));
        }
        Ok(n)
    }

    fn reject_unused(&self) -> Result<()> {
        for (name, section) in &self.sections {
            for (key, entry) in &section.entries {
                if !entry.used {
                    return Err(parse_err(
                        entry.line,
                        format!("unknown key `{key}` in [{name}]"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn parse_positive(text: &str, line: usize, section: &str, key: &str) -> Result<f64> {
    let v: f64 = text.parse().map_err(|_| {
        parse_err(line, format!("`{key}` in [{section}] is not a number: `{text}`"))
    })?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(parse_err(
            line,
            format!("`{key}` in [{section}] must be positive, got {text}"),
        ));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bundled_device_parses_with_expected_values() {
        let dev = DeviceModel::paper_nominal();
        assert_relative_eq!(dev.material.youngs_modulus, 2e11);
        assert_relative_eq!(dev.beam.length, 800e-6);
        assert_relative_eq!(dev.beam.thickness, 20e-6);
        assert_eq!(dev.beam.count, 4);
        assert_relative_eq!(dev.plate.length, 2e-3);
        assert_relative_eq!(dev.magnet.thickness_z, 500e-6);
        assert_relative_eq!(dev.magnet.remanence, 1.2);
        assert_eq!(dev.coil.turns, 15);
        assert_relative_eq!(dev.coil.plane_height, 10e-6);
        assert_relative_eq!(dev.damping_ratio(), 0.05);
        assert_relative_eq!(dev.effective_area(), 4e-6);

        let modal = dev.modal(false).unwrap();
        assert_relative_eq!(modal.natural_frequency, 1007.6, max_relative = 1e-3);
        assert_relative_eq!(dev.coil_resistance().unwrap(), 53.68, max_relative = 1e-3);
    }

    #[test]
    fn zero_valued_key_is_named_in_the_error() {
        let text = PAPER_NOMINAL.replace("thickness = 2e-5", "thickness = 0");
        let err = parse_device_str(&text).unwrap_err();
        match &err {
            Error::Parse { line, message } => {
                assert!(*line > 0);
                assert!(message.contains("thickness"), "message: {message}");
                assert!(message.contains("positive"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = PAPER_NOMINAL.replace("[beam]", "[beam]\nbeam_color = 3");
        let err = parse_device_str(&text).unwrap_err();
        match &err {
            Error::Parse { message, .. } => {
                assert!(message.contains("beam_color"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_rejected() {
        let text = format!("{PAPER_NOMINAL}\n[paint]\ncolor = 1\n");
        assert_eq!(parse_device_str(&text).unwrap_err().category(), "parse");
    }

    #[test]
    fn missing_key_rejected() {
        let text = PAPER_NOMINAL.replace("remanence = 1.2", "");
        let err = parse_device_str(&text).unwrap_err();
        match &err {
            Error::Parse { message, .. } => {
                assert!(message.contains("remanence"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = PAPER_NOMINAL.replace("count = 4", "count = 4\ncount = 2");
        assert_eq!(parse_device_str(&text).unwrap_err().category(), "parse");
    }

    #[test]
    fn drive_requires_exactly_one_magnitude() {
        let both = PAPER_NOMINAL.replace("spl = 94", "spl = 94\npressure = 1.0");
        assert_eq!(parse_device_str(&both).unwrap_err().category(), "parse");
        let neither = PAPER_NOMINAL.replace("spl = 94", "");
        assert_eq!(parse_device_str(&neither).unwrap_err().category(), "parse");
    }

    #[test]
    fn device_without_drive_sections_still_parses() {
        let stripped: String = PAPER_NOMINAL
            .lines()
            .take_while(|l| !l.starts_with("[drive]"))
            .map(|l| format!("{l}\n"))
            .collect();
        let dev = parse_device_str(&stripped).unwrap();
        assert!(dev.drive.is_none());
        assert_relative_eq!(dev.damping_ratio(), DEFAULT_DAMPING_RATIO);
        assert!(dev.require_drive().is_err());
    }

    #[test]
    fn defaults_applied_for_optional_keys() {
        let stripped = PAPER_NOMINAL
            .replace("resistivity = 6.99e-8", "")
            .replace("coil_gap = 1e-5", "");
        let dev = parse_device_str(&stripped).unwrap();
        assert_relative_eq!(dev.coil.resistivity, NICKEL_RESISTIVITY);
        assert_relative_eq!(dev.assembly.coil_gap, DEFAULT_COIL_GAP);
    }

    #[test]
    fn serialization_round_trips_exactly() {
        let dev = DeviceModel::paper_nominal();
        let text = dev.serialize();
        let back = parse_device_str(&text).unwrap();
        assert_eq!(dev, back);
        // and numeric results agree bit for bit
        let a = dev.modal(false).unwrap();
        let b = back.modal(false).unwrap();
        assert_eq!(a.natural_frequency, b.natural_frequency);
        assert_eq!(
            dev.coil_resistance().unwrap(),
            back.coil_resistance().unwrap()
        );
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_device_str("[material\nyoungs_modulus = 1").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let err = parse_device_str("x = 1").unwrap_err();
        assert_eq!(err.category(), "parse");
    }
}
