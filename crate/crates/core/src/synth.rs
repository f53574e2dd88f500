//! Deterministic synthetic test surfaces.
//!
//! Each generator voxelizes a height field (or the surface of a cube) with
//! analytic normals. A seeded relief (a sum of random cosines with
//! wavelengths from 6 to 64 voxels) is added to every depth so the depth
//! maps carry detail at all frequencies; its RMS slope is `relief`, small
//! enough that surfaces stay mostly 26-connected. With probability `thickness_prob` a surface
//! voxel gets a second voxel `t` steps behind it along the projection axis,
//! where `t` in `1..=max_thickness` follows a smooth random field. That gives
//! far layers whose offset from the near layer is spatially coherent and
//! zero on a controlled fraction of pixels.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pointcloud::{Point3, PointCloud, PointCloudError, UnitVec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SynthKind {
    Plane,
    Ramp,
    Cube,
    Wavy,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [SynthKind::Plane, SynthKind::Ramp, SynthKind::Cube, SynthKind::Wavy];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Plane => "plane",
            SynthKind::Ramp => "ramp",
            SynthKind::Cube => "cube",
            SynthKind::Wavy => "wavy",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown synthetic kind `{s}` (plane, ramp, cube, wavy)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// Footprint edge in voxels (cube edge for `Cube`).
    pub size: u32,
    pub bit_depth: u8,
    pub thickness_prob: f64,
    pub max_thickness: u32,
    /// RMS slope of the added relief; 0 disables it.
    pub relief: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            size: 64,
            bit_depth: 10,
            thickness_prob: 0.7,
            max_thickness: 3,
            relief: 1.0,
            seed: 7,
        }
    }
}

const BASE: u32 = 32;

fn rng_for(kind: SynthKind, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ kind as u64)
}

const RELIEF_WAVES: usize = 16;

/// Sum of random cosines, scaled to an RMS slope of `slope`.
struct Relief {
    waves: Vec<([f64; 2], f64, f64)>,
}

impl Relief {
    fn new(slope: f64, rng: &mut ChaCha8Rng) -> Self {
        if slope <= 0.0 {
            return Self { waves: Vec::new() };
        }
        let mut waves: Vec<([f64; 2], f64, f64)> = (0..RELIEF_WAVES)
            .map(|_| {
                let wavelength = 6.0 * (64.0f64 / 6.0).powf(rng.gen::<f64>());
                let dir = rng.gen_range(0.0..std::f64::consts::TAU);
                let k = std::f64::consts::TAU / wavelength;
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                // equal slope per wave: amplitude ∝ wavelength
                ([k * dir.cos(), k * dir.sin()], 1.0 / k, phase)
            })
            .collect();
        let rms = (waves.iter().map(|(k, a, _)| (a * k[0].hypot(k[1])).powi(2)).sum::<f64>() / 2.0).sqrt();
        for w in &mut waves {
            w.1 *= slope / rms;
        }
        Self { waves }
    }

    fn value(&self, u: f64, v: f64) -> f64 {
        self.waves.iter().map(|(k, a, p)| a * (k[0] * u + k[1] * v + p).cos()).sum()
    }

    fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        self.waves.iter().fold((0.0, 0.0), |(gu, gv), (k, a, p)| {
            let s = -a * (k[0] * u + k[1] * v + p).sin();
            (gu + s * k[0], gv + s * k[1])
        })
    }
}

/// Per-pixel second-voxel offset: 0 with probability `1 - thickness_prob`,
/// otherwise a smooth field rounded into `1..=max_thickness`.
struct Thickness {
    field: Relief,
    sigma: f64,
}

impl Thickness {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let field = Relief::new(1.0, rng);
        let sigma = (field.waves.iter().map(|w| w.1 * w.1).sum::<f64>() / 2.0).sqrt();
        Self { field, sigma }
    }

    fn sample(&self, params: &SynthParams, rng: &mut ChaCha8Rng, u: f64, v: f64) -> u32 {
        if params.max_thickness == 0 || !rng.gen_bool(params.thickness_prob) {
            return 0;
        }
        let unit = 0.5 + 0.5 * (self.field.value(u, v) / (2.0 * self.sigma)).clamp(-1.0, 1.0);
        1 + (unit * (params.max_thickness - 1) as f64).round() as u32
    }
}

fn height_field(
    params: &SynthParams,
    rng: &mut ChaCha8Rng,
    f: impl Fn(f64, f64) -> f64,
    grad: impl Fn(f64, f64) -> (f64, f64),
) -> (Vec<Point3>, Vec<UnitVec3>) {
    let relief = Relief::new(params.relief, rng);
    let thickness = Thickness::new(rng);
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for y in 0..params.size {
        for x in 0..params.size {
            let (xf, yf) = (x as f64, y as f64);
            let z = (BASE as f64 + f(xf, yf) + relief.value(xf, yf)).round() as u32;
            let (gx, gy) = grad(xf, yf);
            let (rx, ry) = relief.grad(xf, yf);
            let n = UnitVec3::new([-(gx + rx), -(gy + ry), 1.0]).expect("finite gradient");
            points.push(Point3::new(BASE + x, BASE + y, z));
            normals.push(n);
            let t = thickness.sample(params, rng, xf, yf);
            if t > 0 {
                points.push(Point3::new(BASE + x, BASE + y, z + t));
                normals.push(n);
            }
        }
    }
    (points, normals)
}

fn cube(params: &SynthParams, rng: &mut ChaCha8Rng) -> (Vec<Point3>, Vec<UnitVec3>) {
    let s = params.size;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    // faces in a fixed order: −x, +x, −y, +y, −z, +z
    for axis in 0..3 {
        for positive in [false, true] {
            let relief = Relief::new(params.relief, rng);
            let amp: f64 = relief.waves.iter().map(|w| w.1).sum();
            let thickness = Thickness::new(rng);
            let plane = if positive { s - 1 } else { 0 };
            let sign = if positive { 1.0 } else { -1.0 };
            let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
            for a in 0..s {
                for b in 0..s {
                    // relief pushed inward so faces keep their extent
                    let (af, bf) = (a as f64, b as f64);
                    let depth = (amp + relief.value(af, bf)).round() as u32;
                    let (ga, gb) = relief.grad(af, bf);
                    let mut dir = [0.0; 3];
                    dir[axis] = sign;
                    dir[ua] = sign * ga;
                    dir[va] = sign * gb;
                    let n = UnitVec3::new(dir).expect("finite gradient");
                    let mut c = [0u32; 3];
                    c[axis] = if positive { plane - depth } else { plane + depth };
                    c[ua] = a;
                    c[va] = b;
                    points.push(Point3::new(BASE + c[0], BASE + c[1], BASE + c[2]));
                    normals.push(n);
                    let t = thickness.sample(params, rng, af, bf);
                    if t > 0 {
                        c[axis] = if positive { c[axis] - t } else { c[axis] + t };
                        points.push(Point3::new(BASE + c[0], BASE + c[1], BASE + c[2]));
                        normals.push(n);
                    }
                }
            }
        }
    }
    (points, normals)
}

/// One synthetic frame with analytic normals.
pub fn generate(kind: SynthKind, params: &SynthParams) -> Result<PointCloud, PointCloudError> {
    let mut rng = rng_for(kind, params.seed);
    let (points, normals) = match kind {
        SynthKind::Plane => height_field(params, &mut rng, |_, _| 0.0, |_, _| (0.0, 0.0)),
        SynthKind::Ramp => height_field(params, &mut rng, |x, y| 0.6 * x + 0.3 * y, |_, _| (0.6, 0.3)),
        SynthKind::Cube => cube(params, &mut rng),
        SynthKind::Wavy => {
            let k = std::f64::consts::TAU / 32.0;
            let amp = 4.0;
            height_field(
                params,
                &mut rng,
                move |x, y| amp * (k * x).sin() * (k * y).cos(),
                move |x, y| (amp * k * (k * x).cos() * (k * y).cos(), -amp * k * (k * x).sin() * (k * y).sin()),
            )
        }
    };
    PointCloud::with_normals(points, Some(normals), params.bit_depth)
}

/// Frames `t` and `t + 1`; the second uses the next seed.
pub fn generate_pair(kind: SynthKind, params: &SynthParams) -> Result<(PointCloud, PointCloud), PointCloudError> {
    let next = SynthParams {
        seed: params.seed.wrapping_add(1),
        ..*params
    };
    Ok((generate(kind, params)?, generate(kind, &next)?))
}
