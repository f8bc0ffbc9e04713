//! Independent oracles shared by the integration suites.
//!
//! Everything here deliberately avoids the library's computational paths:
//! the field oracle integrates the surface-pole kernel over the magnet faces
//! on a fixed dense grid, and the flux oracle is composite Simpson over the
//! loop instead of adaptive Gauss-Legendre panels.

#![allow(dead_code)]

use microgen::magnetics::{bz_at, FieldPoint, MagnetSpec};

/// 8-point Gauss-Legendre rule used only to integrate the surface-charge
/// kernel on fixed cells.
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Field point of a uniformly charged rectangle at height `zf`:
/// (1/4pi) * integral of (z - zf) / |r - r'|^3 over the face.
fn charged_face_integral(
    half_x: f64,
    half_y: f64,
    zf: f64,
    x: f64,
    y: f64,
    z: f64,
    cells: usize,
) -> f64 {
    let hx = 2.0 * half_x / cells as f64;
    let hy = 2.0 * half_y / cells as f64;
    let dz = z - zf;
    let mut total = 0.0;
    for ix in 0..cells {
        let cx = -half_x + (ix as f64 + 0.5) * hx;
        for iy in 0..cells {
            let cy = -half_y + (iy as f64 + 0.5) * hy;
            let mut cell = 0.0;
            for (gx, wx) in GL8_X.iter().zip(GL8_W.iter()) {
                let sx = cx + 0.5 * hx * gx;
                let ddx = x - sx;
                for (gy, wy) in GL8_X.iter().zip(GL8_W.iter()) {
                    let sy = cy + 0.5 * hy * gy;
                    let ddy = y - sy;
                    let r2 = ddx * ddx + ddy * ddy + dz * dz;
                    cell += wx * wy * dz / (r2 * r2.sqrt());
                }
            }
            total += cell * 0.25 * hx * hy;
        }
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Brute-force Bz of a z-magnetized cuboid from its two charged pole faces.
pub fn bz_surface_charge_oracle(magnet: &MagnetSpec, x: f64, y: f64, z: f64) -> f64 {
    let (a, b, c) = (
        magnet.length_x / 2.0,
        magnet.width_y / 2.0,
        magnet.thickness_z / 2.0,
    );
    let cells = 64;
    let top = charged_face_integral(a, b, c, x, y, z, cells);
    let bottom = charged_face_integral(a, b, -c, x, y, z, cells);
    magnet.remanence * (top - bottom)
}

/// Independent on-axis closed form for a centered cuboid.
pub fn bz_on_axis_oracle(magnet: &MagnetSpec, z: f64) -> f64 {
    let (a, b, c) = (
        magnet.length_x / 2.0,
        magnet.width_y / 2.0,
        magnet.thickness_z / 2.0,
    );
    let ab = a * b;
    let t = |d: f64| (ab / (d * (a * a + b * b + d * d).sqrt())).atan();
    magnet.remanence / std::f64::consts::PI * (t(z - c) - t(z + c))
}

/// Dense-grid composite-Simpson flux of Bz through a centered square loop.
pub fn simpson_flux_oracle(magnet: &MagnetSpec, side: f64, z_plane: f64, n: usize) -> f64 {
    assert!(n % 2 == 0, "Simpson needs an even interval count");
    let half = 0.5 * side;
    let h = side / n as f64;
    let weight = |i: usize| -> f64 {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut total = 0.0;
    for ix in 0..=n {
        let x = -half + ix as f64 * h;
        let wx = weight(ix);
        let mut row = 0.0;
        for iy in 0..=n {
            let y = -half + iy as f64 * h;
            row += weight(iy)
                * bz_at(magnet, &FieldPoint::new(x, y, z_plane)).expect("oracle field eval");
        }
        total += wx * row;
    }
    total * (h / 3.0) * (h / 3.0)
}

/// Dense-grid coil linkage: Simpson flux summed over concentric square turns.
pub fn simpson_coil_flux_oracle(
    magnet: &MagnetSpec,
    sides: &[f64],
    z_plane: f64,
    n: usize,
) -> f64 {
    sides
        .iter()
        .map(|s| simpson_flux_oracle(magnet, *s, z_plane, n))
        .sum()
}

/// Largest |displacement| over the trailing `tail` samples of a trace.
pub fn peak_amplitude(displacement: &[f64], tail: usize) -> f64 {
    displacement[displacement.len().saturating_sub(tail)..]
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.abs()))
}
