//! Surface-angle model for far-layer rate-distortion decisions.
//!
//! A depth error `e` measured along the projection axis shrinks to
//! `e·cosθ` when measured along the surface normal, where `θ` is the angle
//! between the two. Summed over a block, point-to-plane SSE is therefore the
//! plain depth SSE times `cos²θ`, and minimizing `D·cos²θ + λR` is the same
//! decision as minimizing `D + (λ / cos²θ)·R`.
//!
//! The surface of each 64×64 coding tree unit is estimated as the plane
//! `z = Ux + Vy + W`. Rather than solving least squares over the whole CTU,
//! the slopes are fitted on each 4×4 sub-block, where the design matrix is
//! constant and the fit collapses to two integer gradient filters, and then
//! averaged.

use thiserror::Error;

/// Coding tree unit edge, in pixels.
pub const CTU_SIZE: usize = 64;
const SUB: usize = 4;

/// Column weights of the 4×4 slope filter; the row filter is the transpose.
/// Both are normalized by [`GRADIENT_NORM`].
pub const GRADIENT_TAPS: [i64; 4] = [-3, -1, 1, 3];
pub const GRADIENT_NORM: i64 = 40;

#[derive(Debug, Error, PartialEq)]
pub enum EpmError {
    #[error("plane fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("plane fit is singular: (x, y) support is collinear")]
    Singular,
}

/// `z = u·x + v·y + w`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpmParams {
    /// Upper clip on `1 / cos²θ`.
    pub max_scale: f64,
    /// Average only 4×4 sub-blocks with at least one occupied pixel.
    pub occupied_blocks_only: bool,
}

impl Default for EpmParams {
    fn default() -> Self {
        Self {
            max_scale: 2.0,
            occupied_blocks_only: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalEstimate {
    pub u_hat: f64,
    pub v_hat: f64,
    pub cos2_theta: f64,
    pub lambda_scale: f64,
}

impl NormalEstimate {
    pub fn from_slopes(u_hat: f64, v_hat: f64, max_scale: f64) -> Self {
        let cos2_theta = 1.0 / (u_hat * u_hat + v_hat * v_hat + 1.0);
        Self {
            u_hat,
            v_hat,
            cos2_theta,
            lambda_scale: (1.0 / cos2_theta).min(max_scale),
        }
    }

    pub fn flat() -> Self {
        Self {
            u_hat: 0.0,
            v_hat: 0.0,
            cos2_theta: 1.0,
            lambda_scale: 1.0,
        }
    }
}

/// Least-squares plane through `(x, y, z)` samples.
///
/// Solves the normal equations on centred coordinates, which is the same
/// minimizer with better conditioning.
pub fn plane_fit_lsq(points: &[(f64, f64, f64)]) -> Result<PlaneFit, EpmError> {
    if points.len() < 3 {
        return Err(EpmError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let (mut mx, mut my, mut mz) = (0.0, 0.0, 0.0);
    for &(x, y, z) in points {
        mx += x;
        my += y;
        mz += z;
    }
    mx /= n;
    my /= n;
    mz /= n;
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, z) in points {
        let (dx, dy, dz) = (x - mx, y - my, z - mz);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
    }
    let det = sxx * syy - sxy * sxy;
    let scale = (sxx * syy).max(f64::MIN_POSITIVE);
    if det <= 1e-12 * scale || !det.is_finite() {
        return Err(EpmError::Singular);
    }
    let u = (syy * sxz - sxy * syz) / det;
    let v = (sxx * syz - sxy * sxz) / det;
    Ok(PlaneFit {
        u,
        v,
        w: mz - u * mx - v * my,
    })
}

/// Integer numerators of the 4×4 slope filters; divide by [`GRADIENT_NORM`].
/// `block[row][col]`, x runs along columns.
#[inline]
pub fn block_gradient_raw(block: &[[i32; 4]; 4]) -> (i64, i64) {
    let mut gx = 0i64;
    let mut gy = 0i64;
    for (r, row) in block.iter().enumerate() {
        for (c, &z) in row.iter().enumerate() {
            gx += GRADIENT_TAPS[c] * z as i64;
            gy += GRADIENT_TAPS[r] * z as i64;
        }
    }
    (gx, gy)
}

/// Least-squares slopes `(U, V)` of a 4×4 depth block.
pub fn block_gradient(block: &[[i32; 4]; 4]) -> (f64, f64) {
    let (gx, gy) = block_gradient_raw(block);
    (gx as f64 / GRADIENT_NORM as f64, gy as f64 / GRADIENT_NORM as f64)
}

/// CTU surface estimate from a 64×64 window of a depth frame.
///
/// `depth` and `occupied` are row-major with the given `stride`; the window
/// starts at `(x0, y0)`.
pub fn ctu_normal(
    depth: &[u16],
    occupied: &[bool],
    stride: usize,
    x0: usize,
    y0: usize,
    params: &EpmParams,
) -> NormalEstimate {
    let mut sum_gx = 0i64;
    let mut sum_gy = 0i64;
    let mut count = 0i64;
    for by in (0..CTU_SIZE).step_by(SUB) {
        for bx in (0..CTU_SIZE).step_by(SUB) {
            let mut block = [[0i32; 4]; 4];
            let mut any = false;
            for (r, row) in block.iter_mut().enumerate() {
                let base = (y0 + by + r) * stride + x0 + bx;
                for (c, v) in row.iter_mut().enumerate() {
                    *v = depth[base + c] as i32;
                    any |= occupied[base + c];
                }
            }
            if params.occupied_blocks_only && !any {
                continue;
            }
            let (gx, gy) = block_gradient_raw(&block);
            sum_gx += gx;
            sum_gy += gy;
            count += 1;
        }
    }
    if count == 0 {
        return NormalEstimate::flat();
    }
    let denom = (GRADIENT_NORM * count) as f64;
    NormalEstimate::from_slopes(sum_gx as f64 / denom, sum_gy as f64 / denom, params.max_scale)
}

/// Point-to-plane share of a depth-axis SSE.
#[inline]
pub fn project_distortion(d_sse: f64, cos2_theta: f64) -> f64 {
    d_sse * cos2_theta
}
