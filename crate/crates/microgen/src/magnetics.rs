//! Magnetostatics of a uniformly z-magnetized cuboid magnet.
//!
//! The field is the classic equivalent-surface-pole closed form: the two pole
//! faces carry magnetic charge and the axial component Bz is an eight-corner
//! sum of arctangent terms. `atan2` keeps the branch correct everywhere,
//! including inside the magnet body (where the result contains the
//! magnetization term) and directly beside it. Only Bz is provided; flux
//! through horizontal loops never needs the transverse components.
//!
//! Flux through a rectangular loop is the integral of Bz over the loop
//! interior by adaptive Gauss-Legendre quadrature, and the flux gradient is a
//! Richardson-extrapolated central difference of that integral.

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadConfig};

/// Offset applied along z when a probe point lies exactly on the magnet
/// surface, where the closed form has jump discontinuities (side faces) or
/// genuine edge singularities.
pub const SURFACE_EPS: f64 = 1e-9;

/// Floor for the differentiation step of [`default_gradient_step`].
pub const MIN_GRADIENT_STEP: f64 = 1e-7;

/// Cuboid permanent magnet, magnetized along +z, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetSpec {
    /// Full edge length along x (m).
    pub length_x: f64,
    /// Full edge length along y (m).
    pub width_y: f64,
    /// Full edge length along z (m).
    pub thickness_z: f64,
    /// Remanence Br (T).
    pub remanence: f64,
}

impl MagnetSpec {
    pub fn new(length_x: f64, width_y: f64, thickness_z: f64, remanence: f64) -> Result<Self> {
        let m = MagnetSpec {
            length_x,
            width_y,
            thickness_z,
            remanence,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length_x", self.length_x),
            ("width_y", self.width_y),
            ("thickness_z", self.thickness_z),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("magnet {name} must be positive")));
            }
        }
        if !(self.remanence >= 0.0 && self.remanence.is_finite()) {
            return Err(Error::domain("magnet remanence must be non-negative"));
        }
        Ok(())
    }

    /// Half dimensions (a, b, c).
    fn half(&self) -> (f64, f64, f64) {
        (
            0.5 * self.length_x,
            0.5 * self.width_y,
            0.5 * self.thickness_z,
        )
    }

    /// Magnet volume (m^3).
    pub fn volume(&self) -> f64 {
        self.length_x * self.width_y * self.thickness_z
    }

    /// z of the top face.
    pub fn top_z(&self) -> f64 {
        0.5 * self.thickness_z
    }
}

/// Probe position in the magnet-centered frame (z up toward the coil).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FieldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        FieldPoint { x, y, z }
    }
}

/// Horizontal rectangular loop: center, side lengths, and plane height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectLoop {
    pub center_x: f64,
    pub center_y: f64,
    pub side_x: f64,
    pub side_y: f64,
    /// Height of the loop plane in the magnet-centered frame.
    pub z_plane: f64,
}

impl RectLoop {
    pub fn new(center_x: f64, center_y: f64, side_x: f64, side_y: f64, z_plane: f64) -> Result<Self> {
        if !(side_x > 0.0 && side_x.is_finite() && side_y > 0.0 && side_y.is_finite()) {
            return Err(Error::domain("loop side lengths must be positive"));
        }
        if !(center_x.is_finite() && center_y.is_finite() && z_plane.is_finite()) {
            return Err(Error::domain("loop position must be finite"));
        }
        Ok(RectLoop {
            center_x,
            center_y,
            side_x,
            side_y,
            z_plane,
        })
    }

    /// Centered square loop of side `side` at height `z_plane`.
    pub fn square(side: f64, z_plane: f64) -> Result<Self> {
        RectLoop::new(0.0, 0.0, side, side, z_plane)
    }

    fn x_range(&self) -> (f64, f64) {
        (
            self.center_x - 0.5 * self.side_x,
            self.center_x + 0.5 * self.side_x,
        )
    }

    fn y_range(&self) -> (f64, f64) {
        (
            self.center_y - 0.5 * self.side_y,
            self.center_y + 0.5 * self.side_y,
        )
    }

    /// True when the loop interior overlaps the magnet footprint in x-y.
    fn overlaps_footprint(&self, magnet: &MagnetSpec) -> bool {
        let (a, b, _) = magnet.half();
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        x0 < a && x1 > -a && y0 < b && y1 > -b
    }
}

/// Raw eight-corner closed form; assumes finite inputs.
fn bz_raw(magnet: &MagnetSpec, x: f64, y: f64, z: f64) -> f64 {
    let (a, b, c) = magnet.half();
    let xs = [x + a, x - a];
    let ys = [y + b, y - b];
    let zs = [z + c, z - c];
    let mut sum = 0.0;
    for (i, &xi) in xs.iter().enumerate() {
        for (j, &yj) in ys.iter().enumerate() {
            for (k, &zk) in zs.iter().enumerate() {
                let sign = if (i + j + k) % 2 == 0 { -1.0 } else { 1.0 };
                let rho = (xi * xi + yj * yj + zk * zk).sqrt();
                sum += sign * f64::atan2(xi * yj, zk * rho);
            }
        }
    }
    magnet.remanence / (4.0 * std::f64::consts::PI) * sum
}

/// Raw closed-form evaluation for quadrature integrands. Quadrature nodes
/// never land on the magnet surface, so no boundary handling is applied.
pub(crate) fn bz_raw_for_quadrature(magnet: &MagnetSpec, x: f64, y: f64, z: f64) -> f64 {
    bz_raw(magnet, x, y, z)
}

/// Axial field component Bz at `p` (T).
///
/// Valid at any finite point. Inside the magnet body the returned value
/// includes the magnetization contribution (a centered cube evaluates to
/// 2Br/3 at its center). Points lying exactly on the magnet surface are
/// evaluated at a z offset of [`SURFACE_EPS`] away from the midplane, which
/// resolves the closed form's surface discontinuities deterministically.
pub fn bz_at(magnet: &MagnetSpec, p: &FieldPoint) -> Result<f64> {
    magnet.validate()?;
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(Error::domain("field point must be finite"));
    }
    let (a, b, c) = magnet.half();
    let inside_closed = p.x.abs() <= a && p.y.abs() <= b && p.z.abs() <= c;
    let inside_open = p.x.abs() < a && p.y.abs() < b && p.z.abs() < c;
    let z = if inside_closed && !inside_open {
        // on the surface: nudge away from the midplane
        if p.z >= 0.0 {
            p.z + SURFACE_EPS
        } else {
            p.z - SURFACE_EPS
        }
    } else {
        p.z
    };
    Ok(bz_raw(magnet, p.x, p.y, z))
}

fn check_loop_clears_magnet(magnet: &MagnetSpec, rect: &RectLoop, z_plane: f64) -> Result<()> {
    let (_, _, c) = magnet.half();
    if rect.overlaps_footprint(magnet) && z_plane.abs() < c {
        return Err(Error::domain(
            "loop plane intersects the magnet volume; flux is undefined there",
        ));
    }
    Ok(())
}

/// Flux of Bz through the loop interior (Wb) by adaptive quadrature.
pub fn flux_through_rect(magnet: &MagnetSpec, rect: &RectLoop, cfg: &QuadConfig) -> Result<f64> {
    magnet.validate()?;
    check_loop_clears_magnet(magnet, rect, rect.z_plane)?;
    let z = rect.z_plane;
    let f = |x: f64, y: f64| bz_raw(magnet, x, y, z);
    let r = quadrature::integrate_rect(&f, rect.x_range(), rect.y_range(), cfg)?;
    if !r.value.is_finite() {
        return Err(Error::numerical("flux integral is not finite"));
    }
    Ok(r.value)
}

/// Differentiation step used when the caller does not pick one:
/// one hundredth of the gap, floored at [`MIN_GRADIENT_STEP`].
pub fn default_gradient_step(gap: f64) -> f64 {
    (gap / 100.0).max(MIN_GRADIENT_STEP)
}

/// dPhi/dz of the loop-plane height (Wb/m).
///
/// Central difference with one Richardson extrapolation step over flux
/// evaluations at `z +- h` and `z +- h/2`. For a loop above the magnet the
/// result is negative: raising the plane moves it away from the magnet and
/// the linked flux drops, so magnet motion toward the coil increases |Phi|.
///
/// The four flux evaluations share a single panel decomposition computed at
/// the plane height nearest the magnet, and run at a tolerance 100x tighter
/// than `cfg` so differencing does not amplify quadrature noise.
pub fn flux_gradient(magnet: &MagnetSpec, rect: &RectLoop, h: f64, cfg: &QuadConfig) -> Result<f64> {
    magnet.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain("gradient step h must be positive"));
    }
    let (_, _, c) = magnet.half();
    let z = rect.z_plane;
    // when the loop overlaps the footprint, the whole probe interval
    // [z-h, z+h] must lie on one side of the slab
    if rect.overlaps_footprint(magnet) && !(z - h >= c || z + h <= -c) {
        return Err(Error::domain("gradient step straddles the magnet surface"));
    }

    let tight = QuadConfig {
        rel_tol: cfg.rel_tol * 1e-2,
        max_depth: cfg.max_depth,
    };
    // decompose at whichever probe plane sits closest to the magnet: the
    // integrand is sharpest there and the same panels over-resolve the rest
    let nearest = if z >= 0.0 { z - h } else { z + h };
    let f_near = |x: f64, y: f64| bz_raw(magnet, x, y, nearest);
    let set = quadrature::decompose(&f_near, rect.x_range(), rect.y_range(), &tight)?;
    if set.saturated {
        return Err(Error::Numerical {
            message: "flux gradient quadrature did not converge".into(),
            achieved: None,
            error_bound: Some(set.error_bound),
        });
    }

    let flux_at = |zp: f64| set.integrate(|x, y| bz_raw(magnet, x, y, zp));
    let d_h = (flux_at(z + h) - flux_at(z - h)) / (2.0 * h);
    let d_h2 = (flux_at(z + 0.5 * h) - flux_at(z - 0.5 * h)) / h;
    Ok((4.0 * d_h2 - d_h) / 3.0)
}
