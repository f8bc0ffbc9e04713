//! Square spiral coil geometry, DC resistance, and flux linkage.
//!
//! The spiral is approximated by concentric closed square loops at the
//! per-turn centerline sides; the pitch (trace width + gap) is three orders
//! of magnitude below the loop side, so the approximation error is far below
//! the rest of the model. The innermost centerline side conventionally equals
//! the magnet side, putting the first winding over the magnet edges.

use crate::error::{Error, Result};
use crate::magnetics::{self, MagnetSpec, RectLoop};
use crate::quadrature::{self, QuadConfig};

/// Bulk nickel resistivity (ohm m); electroplated films vary, so device
/// files may override it.
pub const NICKEL_RESISTIVITY: f64 = 6.99e-8;

/// Copper resistivity (ohm m), for the high-conductivity coil variant.
pub const COPPER_RESISTIVITY: f64 = 1.68e-8;

/// Planar square spiral coil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilSpec {
    /// Number of turns.
    pub turns: usize,
    /// Trace width (m).
    pub trace_width: f64,
    /// Gap between adjacent traces (m).
    pub gap: f64,
    /// Trace thickness (m).
    pub trace_thickness: f64,
    /// Centerline side length of the innermost turn (m).
    pub inner_side: f64,
    /// Trace resistivity (ohm m).
    pub resistivity: f64,
    /// Height of the coil plane above the magnet top face (m).
    pub plane_height: f64,
}

impl CoilSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        turns: usize,
        trace_width: f64,
        gap: f64,
        trace_thickness: f64,
        inner_side: f64,
        resistivity: f64,
        plane_height: f64,
    ) -> Result<Self> {
        let c = CoilSpec {
            turns,
            trace_width,
            gap,
            trace_thickness,
            inner_side,
            resistivity,
            plane_height,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("trace_width", self.trace_width),
            ("gap", self.gap),
            ("trace_thickness", self.trace_thickness),
            ("inner_side", self.inner_side),
            ("resistivity", self.resistivity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("coil {name} must be positive")));
            }
        }
        if !self.plane_height.is_finite() || self.plane_height <= 0.0 {
            return Err(Error::domain("coil plane_height must be positive"));
        }
        Ok(())
    }

    /// Turn-to-turn pitch: trace width plus gap.
    pub fn pitch(&self) -> f64 {
        self.trace_width + self.gap
    }

    /// Outer edge-to-edge extent of the winding (m): outermost centerline
    /// side plus one trace width.
    pub fn outer_extent(&self) -> f64 {
        if self.turns == 0 {
            return 0.0;
        }
        self.inner_side + 2.0 * (self.turns as f64 - 1.0) * self.pitch() + self.trace_width
    }
}

/// Concentric-loop view of the spiral.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilGeometry {
    /// Per-turn centerline side lengths, innermost first.
    pub sides: Vec<f64>,
    /// Turn-to-turn pitch.
    pub pitch: f64,
}

/// Centerline side per turn: `inner_side + 2 i pitch`.
pub fn turn_sides(coil: &CoilSpec) -> Result<CoilGeometry> {
    coil.validate()?;
    let pitch = coil.pitch();
    let sides = (0..coil.turns)
        .map(|i| coil.inner_side + 2.0 * i as f64 * pitch)
        .collect();
    Ok(CoilGeometry { sides, pitch })
}

/// Total trace length (m): sum of the four sides of every turn. Corner and
/// lead-in corrections are ignored.
pub fn total_length(coil: &CoilSpec) -> Result<f64> {
    let geo = turn_sides(coil)?;
    Ok(geo.sides.iter().map(|s| 4.0 * s).sum())
}

/// DC resistance (ohm): rho L / (w t).
pub fn resistance(coil: &CoilSpec) -> Result<f64> {
    let len = total_length(coil)?;
    Ok(coil.resistivity * len / (coil.trace_width * coil.trace_thickness))
}

fn loop_plane_z(magnet: &MagnetSpec, coil: &CoilSpec, magnet_z_offset: f64) -> Result<f64> {
    if !magnet_z_offset.is_finite() {
        return Err(Error::domain("magnet offset must be finite"));
    }
    if magnet_z_offset >= coil.plane_height {
        return Err(Error::domain(
            "magnet offset reaches the coil plane; the magnet would intersect it",
        ));
    }
    // in the frame moving with the magnet the coil plane sits lower by the
    // magnet displacement
    Ok(magnet.top_z() + coil.plane_height - magnet_z_offset)
}

/// Flux linkage of the whole coil (Wb) with the magnet displaced along z by
/// `magnet_z_offset` (positive toward the coil).
pub fn coil_flux(
    magnet: &MagnetSpec,
    coil: &CoilSpec,
    magnet_z_offset: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let z = loop_plane_z(magnet, coil, magnet_z_offset)?;
    let geo = turn_sides(coil)?;
    let mut total = 0.0;
    for side in &geo.sides {
        total += magnetics::flux_through_rect(magnet, &RectLoop::square(*side, z)?, cfg)?;
    }
    Ok(total)
}

/// d(linkage)/d(offset) (Wb/m) at `magnet_z_offset`, by the same
/// Richardson-extrapolated central difference as the single-loop gradient.
/// Positive while the magnet approaches the coil: linked flux grows.
///
/// `h` is the differentiation step in magnet travel; pass
/// [`magnetics::default_gradient_step`] of the remaining gap when in doubt.
pub fn coil_flux_gradient(
    magnet: &MagnetSpec,
    coil: &CoilSpec,
    magnet_z_offset: f64,
    h: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let z = loop_plane_z(magnet, coil, magnet_z_offset)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain("gradient step h must be positive"));
    }
    if magnet_z_offset + h >= coil.plane_height {
        return Err(Error::domain(
            "gradient step reaches the coil plane; reduce h or the offset",
        ));
    }
    let geo = turn_sides(coil)?;
    let mut total = 0.0;
    for side in &geo.sides {
        let lp = RectLoop::square(*side, z)?;
        // moving the magnet up by dz is the same as moving the plane down
        total -= magnetics::flux_gradient(magnet, &lp, h, cfg)?;
    }
    Ok(total)
}

/// Repeated linkage evaluation over magnet offsets.
///
/// Decomposes each turn's loop once, at the plane of closest approach where
/// the integrand is sharpest, and re-evaluates the frozen panels for every
/// requested offset. Sampling a flux-versus-offset table this way costs one
/// fixed-panel pass per offset instead of a full adaptive subdivision.
#[derive(Debug)]
pub struct LinkageSampler {
    magnet: MagnetSpec,
    plane_height: f64,
    rest_plane: f64,
    max_offset: f64,
    sets: Vec<quadrature::PanelSet>,
}

impl LinkageSampler {
    /// Prepare for offsets up to `max_offset` toward the coil (and any
    /// distance away from it).
    pub fn new(
        magnet: &MagnetSpec,
        coil: &CoilSpec,
        max_offset: f64,
        cfg: &QuadConfig,
    ) -> Result<Self> {
        magnet.validate()?;
        coil.validate()?;
        if !max_offset.is_finite() || max_offset >= coil.plane_height {
            return Err(Error::domain(
                "sampler offset range reaches the coil plane",
            ));
        }
        let rest_plane = magnet.top_z() + coil.plane_height;
        let nearest_plane = rest_plane - max_offset.max(0.0);
        let geo = turn_sides(coil)?;
        let mut sets = Vec::with_capacity(geo.sides.len());
        for side in &geo.sides {
            let half = 0.5 * side;
            let f = |x: f64, y: f64| crate::magnetics::bz_raw_for_quadrature(magnet, x, y, nearest_plane);
            let set = quadrature::decompose(&f, (-half, half), (-half, half), cfg)?;
            if set.saturated {
                return Err(Error::Numerical {
                    message: "linkage sampler quadrature did not converge".into(),
                    achieved: None,
                    error_bound: Some(set.error_bound),
                });
            }
            sets.push(set);
        }
        Ok(LinkageSampler {
            magnet: *magnet,
            plane_height: coil.plane_height,
            rest_plane,
            max_offset,
            sets,
        })
    }

    /// Coil linkage at a magnet offset (positive toward the coil).
    pub fn flux_at(&self, offset: f64) -> Result<f64> {
        if !(offset.is_finite() && offset <= self.max_offset) {
            return Err(Error::Domain(format!(
                "offset {offset:e} outside the sampler range (max {:e})",
                self.max_offset
            )));
        }
        let plane = self.rest_plane - offset;
        let magnet = self.magnet;
        Ok(self
            .sets
            .iter()
            .map(|set| set.integrate(|x, y| crate::magnetics::bz_raw_for_quadrature(&magnet, x, y, plane)))
            .sum())
    }

    /// Richardson-extrapolated d(linkage)/d(offset) at `offset`.
    pub fn gradient_at(&self, offset: f64, h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain("gradient step h must be positive"));
        }
        if offset + h > self.max_offset {
            return Err(Error::domain(
                "gradient step leaves the sampler range; rebuild with a larger max offset",
            ));
        }
        let d_h = (self.flux_at(offset + h)? - self.flux_at(offset - h)?) / (2.0 * h);
        let d_h2 = (self.flux_at(offset + 0.5 * h)? - self.flux_at(offset - 0.5 * h)?) / h;
        Ok((4.0 * d_h2 - d_h) / 3.0)
    }

    /// Largest offset toward the coil this sampler covers.
    pub fn max_offset(&self) -> f64 {
        self.max_offset
    }

    /// Remaining magnet-to-plane spacing at an offset.
    pub fn clearance_at(&self, offset: f64) -> f64 {
        self.plane_height - offset
    }
}

/// Per-turn gradient contributions, innermost turn first.
///
/// `coil_flux_gradient` equals the sum of this list; design searches over the
/// turn count reuse these increments instead of re-integrating per candidate.
pub fn per_turn_flux_gradients(
    magnet: &MagnetSpec,
    coil: &CoilSpec,
    magnet_z_offset: f64,
    h: f64,
    cfg: &QuadConfig,
) -> Result<Vec<f64>> {
    let z = loop_plane_z(magnet, coil, magnet_z_offset)?;
    if magnet_z_offset + h >= coil.plane_height {
        return Err(Error::domain(
            "gradient step reaches the coil plane; reduce h or the offset",
        ));
    }
    let geo = turn_sides(coil)?;
    geo.sides
        .iter()
        .map(|side| {
            let lp = RectLoop::square(*side, z)?;
            magnetics::flux_gradient(magnet, &lp, h, cfg).map(|g| -g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_magnet() -> MagnetSpec {
        MagnetSpec::new(2e-3, 2e-3, 0.5e-3, 1.2).unwrap()
    }

    /// 15-turn nickel coil: 20 um trace, 20 um gap, 10 um thick, innermost
    /// centerline on the 2 mm magnet edge, plane 10 um above the magnet.
    fn reference_coil() -> CoilSpec {
        CoilSpec::new(15, 20e-6, 20e-6, 10e-6, 2e-3, NICKEL_RESISTIVITY, 10e-6).unwrap()
    }

    #[test]
    fn turn_sides_are_an_arithmetic_progression() {
        let geo = turn_sides(&reference_coil()).unwrap();
        assert_eq!(geo.sides.len(), 15);
        assert_relative_eq!(geo.pitch, 40e-6);
        assert_relative_eq!(geo.sides[0], 2000e-6, max_relative = 1e-14);
        assert_relative_eq!(geo.sides[1], 2080e-6, max_relative = 1e-14);
        assert_relative_eq!(geo.sides[14], 3120e-6, max_relative = 1e-14);
        for w in geo.sides.windows(2) {
            assert_relative_eq!(w[1] - w[0], 2.0 * geo.pitch, max_relative = 1e-12);
        }
    }

    #[test]
    fn degenerate_turn_counts() {
        let mut c = reference_coil();
        c.turns = 0;
        assert!(turn_sides(&c).unwrap().sides.is_empty());
        assert_eq!(total_length(&c).unwrap(), 0.0);
        assert_eq!(resistance(&c).unwrap(), 0.0);
        c.turns = 1;
        assert_eq!(turn_sides(&c).unwrap().sides, vec![2e-3]);
        assert_relative_eq!(total_length(&c).unwrap(), 8e-3, max_relative = 1e-14);
    }

    #[test]
    fn total_length_matches_brute_force_perimeters() {
        let c = reference_coil();
        let geo = turn_sides(&c).unwrap();
        let brute: f64 = geo.sides.iter().map(|s| s + s + s + s).sum();
        let len = total_length(&c).unwrap();
        assert_eq!(len, brute);
        assert_relative_eq!(len, 0.15360, max_relative = 1e-12);
    }

    #[test]
    fn reference_resistance_is_near_measured() {
        let r = resistance(&reference_coil()).unwrap();
        assert_relative_eq!(r, 53.68, max_relative = 1e-3);
        // measured-from-pads reference is 58 ohm
        assert!((r - 58.0).abs() / 58.0 < 0.15);

        let single = CoilSpec::new(1, 20e-6, 20e-6, 10e-6, 2e-3, NICKEL_RESISTIVITY, 10e-6).unwrap();
        assert_relative_eq!(resistance(&single).unwrap(), 2.796, max_relative = 1e-3);
    }

    #[test]
    fn resistance_invariant_under_rho_thickness_doubling() {
        let c = reference_coil();
        let mut d = c;
        d.resistivity *= 2.0;
        d.trace_thickness *= 2.0;
        assert_relative_eq!(
            resistance(&c).unwrap(),
            resistance(&d).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_remanence_linkage_is_zero() {
        let dead = MagnetSpec::new(2e-3, 2e-3, 0.5e-3, 0.0).unwrap();
        let c = reference_coil();
        let cfg = QuadConfig::default();
        assert_eq!(coil_flux(&dead, &c, 0.0, &cfg).unwrap(), 0.0);
        assert_eq!(
            coil_flux_gradient(&dead, &c, 0.0, 1e-7, &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn linkage_is_additive_over_turns_and_order_independent() {
        let m = reference_magnet();
        let mut c = reference_coil();
        c.turns = 4;
        c.plane_height = 100e-6; // gentler gap keeps the unit test quick
        let cfg = QuadConfig::default();
        let total = coil_flux(&m, &c, 0.0, &cfg).unwrap();

        let z = m.top_z() + c.plane_height;
        let geo = turn_sides(&c).unwrap();
        let per: Vec<f64> = geo
            .sides
            .iter()
            .map(|s| {
                magnetics::flux_through_rect(&m, &RectLoop::square(*s, z).unwrap(), &cfg).unwrap()
            })
            .collect();
        let forward: f64 = per.iter().sum();
        let reversed: f64 = per.iter().rev().sum();
        assert_relative_eq!(total, forward, max_relative = 1e-14);
        assert_relative_eq!(forward, reversed, max_relative = 1e-13);
    }

    #[test]
    fn linkage_linear_in_remanence() {
        let m = reference_magnet();
        let m2 = MagnetSpec { remanence: 2.4, ..m };
        let mut c = reference_coil();
        c.turns = 3;
        c.plane_height = 50e-6;
        let cfg = QuadConfig::default();
        let f1 = coil_flux(&m, &c, 0.0, &cfg).unwrap();
        let f2 = coil_flux(&m2, &c, 0.0, &cfg).unwrap();
        assert_relative_eq!(f2, 2.0 * f1, max_relative = 1e-12);

        let g1 = coil_flux_gradient(&m, &c, 0.0, 1e-7, &cfg).unwrap();
        let g2 = coil_flux_gradient(&m2, &c, 0.0, 1e-7, &cfg).unwrap();
        assert_relative_eq!(g2, 2.0 * g1, max_relative = 1e-10);
    }

    #[test]
    fn gradient_magnitude_decays_with_static_gap() {
        let m = reference_magnet();
        let cfg = QuadConfig::default();
        let mut prev = f64::INFINITY;
        for gap in [10e-6, 50e-6, 200e-6, 500e-6] {
            let mut c = reference_coil();
            c.turns = 2;
            c.plane_height = gap;
            let g = coil_flux_gradient(
                &m,
                &c,
                0.0,
                magnetics::default_gradient_step(gap),
                &cfg,
            )
            .unwrap();
            assert!(g > 0.0, "approaching magnet must gain flux, got {g}");
            assert!(g.abs() < prev, "gradient magnitude must shrink with gap");
            prev = g.abs();
        }
    }

    #[test]
    fn per_turn_gradients_sum_to_total() {
        let m = reference_magnet();
        let mut c = reference_coil();
        c.turns = 5;
        c.plane_height = 100e-6;
        let cfg = QuadConfig::default();
        let h = 1e-6;
        let parts = per_turn_flux_gradients(&m, &c, 0.0, h, &cfg).unwrap();
        assert_eq!(parts.len(), 5);
        let total = coil_flux_gradient(&m, &c, 0.0, h, &cfg).unwrap();
        let sum: f64 = parts.iter().sum();
        assert_relative_eq!(total, sum, max_relative = 1e-13);
    }

    #[test]
    fn magnet_reaching_plane_rejected() {
        let m = reference_magnet();
        let c = reference_coil(); // plane 10 um up
        let cfg = QuadConfig::default();
        assert!(coil_flux(&m, &c, 10e-6, &cfg).is_err());
        assert!(coil_flux(&m, &c, 15e-6, &cfg).is_err());
        assert!(coil_flux(&m, &c, 9e-6, &cfg).is_ok());
        // step reaching the plane
        assert!(coil_flux_gradient(&m, &c, 5e-6, 6e-6, &cfg).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(CoilSpec::new(15, 0.0, 20e-6, 10e-6, 2e-3, 6.99e-8, 10e-6).is_err());
        assert!(CoilSpec::new(15, 20e-6, 20e-6, 10e-6, 2e-3, -1.0, 10e-6).is_err());
        assert!(CoilSpec::new(15, 20e-6, 20e-6, 10e-6, 2e-3, 6.99e-8, 0.0).is_err());
    }

    #[test]
    fn outer_extent_covers_winding() {
        let c = reference_coil();
        assert_relative_eq!(c.outer_extent(), 3.14e-3, max_relative = 1e-12);
    }

    #[test]
    fn sampler_matches_one_shot_evaluations() {
        let m = reference_magnet();
        let mut c = reference_coil();
        c.turns = 3;
        c.plane_height = 80e-6;
        let cfg = QuadConfig::default();
        let sampler = LinkageSampler::new(&m, &c, 40e-6, &cfg).unwrap();
        for offset in [-50e-6, -10e-6, 0.0, 20e-6, 39e-6] {
            let direct = coil_flux(&m, &c, offset, &cfg).unwrap();
            let sampled = sampler.flux_at(offset).unwrap();
            assert_relative_eq!(sampled, direct, max_relative = 1e-8);
        }
        let h = 1e-7;
        let g_direct = coil_flux_gradient(&m, &c, 0.0, h, &cfg).unwrap();
        let g_sampled = sampler.gradient_at(0.0, h).unwrap();
        assert_relative_eq!(g_sampled, g_direct, max_relative = 1e-6);

        assert!(sampler.flux_at(41e-6).is_err());
        assert!(sampler.gradient_at(39.99e-6, 1e-7).is_err());
        assert!(LinkageSampler::new(&m, &c, 80e-6, &cfg).is_err());
    }
}
