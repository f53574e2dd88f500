//! Integer DCT-II, scalar quantization and zig-zag scan.
//!
//! Basis rows are the orthonormal DCT-II scaled by `2^10·√N` and rounded, so
//! `T·Tᵀ ≈ 2^(20 + log2 N)·I`. Forward coefficients are kept at that scale
//! and quantized in one integer division; the inverse undoes both scales with
//! a single rounding shift. Quantizer steps are rationals with denominator
//! 64: `q(qp) = round(64·2^((qp − 4)/6)) / 64`.
//!
//! `qp = 0` bypasses the transform: residuals are coded as-is.

use std::sync::OnceLock;

use super::LOSSLESS_QP;

const SIZES: [usize; 4] = [8, 16, 32, 64];
const BASIS_BITS: u32 = 10;
const STEP_DEN: i64 = 64;

struct Tables {
    log2n: u32,
    basis: Vec<i64>,
    scan: Vec<usize>,
}

fn size_index(n: usize) -> usize {
    SIZES
        .iter()
        .position(|&s| s == n)
        .unwrap_or_else(|| panic!("unsupported transform size {n}"))
}

fn tables(n: usize) -> &'static Tables {
    static CELLS: [OnceLock<Tables>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CELLS[size_index(n)].get_or_init(|| build(n))
}

fn build(n: usize) -> Tables {
    let nf = n as f64;
    let mut basis = vec![0i64; n * n];
    for k in 0..n {
        let c = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for i in 0..n {
            let v = c * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos();
            basis[k * n + i] = ((1u64 << BASIS_BITS) as f64 * nf.sqrt() * v).round() as i64;
        }
    }
    Tables {
        log2n: n.trailing_zeros(),
        basis,
        scan: build_zigzag(n),
    }
}

fn build_zigzag(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 0 {
            // up and to the right
            for r in (lo..=hi).rev() {
                order.push(r * n + (s - r));
            }
        } else {
            for r in lo..=hi {
                order.push(r * n + (s - r));
            }
        }
    }
    order
}

/// Raster indices of an `n×n` block in zig-zag order.
pub fn zigzag(n: usize) -> &'static [usize] {
    &tables(n).scan
}

/// Quantizer step in 1/64 units.
pub fn quant_step(qp: u8) -> i64 {
    (STEP_DEN as f64 * ((qp as f64 - 4.0) / 6.0).exp2()).round() as i64
}

fn div_round(num: i128, den: i128) -> i128 {
    let q = (num.abs() + den / 2) / den;
    if num < 0 {
        -q
    } else {
        q
    }
}

/// Forward transform and quantization of a row-major `n×n` residual.
///
/// `intra` selects the rounding offset: 1/3 for intra, 1/6 otherwise.
pub fn transform_quant(residual: &[i32], n: usize, qp: u8, intra: bool) -> Vec<i32> {
    assert_eq!(residual.len(), n * n);
    if qp == LOSSLESS_QP {
        return residual.to_vec();
    }
    let t = tables(n);
    let b = &t.basis;
    let shift = 2 * BASIS_BITS + t.log2n;
    // tmp = T·X
    let mut tmp = vec![0i64; n * n];
    for k in 0..n {
        for i in 0..n {
            let w = b[k * n + i];
            if w == 0 {
                continue;
            }
            let xr = &residual[i * n..(i + 1) * n];
            let row = &mut tmp[k * n..(k + 1) * n];
            for (acc, &x) in row.iter_mut().zip(xr) {
                *acc += w * x as i64;
            }
        }
    }
    // C = tmp·Tᵀ, quantized
    let step = quant_step(qp) as i128;
    let den = 6 * step * (1i128 << shift);
    let offset = if intra { 2 } else { 1 } * step * (1i128 << shift);
    let mut out = vec![0i32; n * n];
    for k in 0..n {
        let tr = &tmp[k * n..(k + 1) * n];
        for l in 0..n {
            let br = &b[l * n..(l + 1) * n];
            let c: i128 = tr.iter().zip(br).map(|(&a, &w)| a as i128 * w as i128).sum();
            let mag = (6 * STEP_DEN as i128 * c.abs() + offset) / den;
            out[k * n + l] = if c < 0 { -(mag as i32) } else { mag as i32 };
        }
    }
    out
}

/// Dequantization and inverse transform; the exact inverse path shared by
/// encoder and decoder.
pub fn dequant_itransform(levels: &[i32], n: usize, qp: u8) -> Vec<i32> {
    assert_eq!(levels.len(), n * n);
    if qp == LOSSLESS_QP {
        return levels.to_vec();
    }
    if levels.iter().all(|&l| l == 0) {
        return vec![0; n * n];
    }
    let t = tables(n);
    let b = &t.basis;
    let step = quant_step(qp);
    // tmp = Tᵀ·Y
    let mut tmp = vec![0i64; n * n];
    for k in 0..n {
        let yr = &levels[k * n..(k + 1) * n];
        if yr.iter().all(|&v| v == 0) {
            continue;
        }
        for i in 0..n {
            let w = b[k * n + i];
            if w == 0 {
                continue;
            }
            let row = &mut tmp[i * n..(i + 1) * n];
            for (acc, &y) in row.iter_mut().zip(yr) {
                *acc += w * y as i64 * step;
            }
        }
    }
    // X = tmp·T
    let den = (STEP_DEN as i128) << (2 * BASIS_BITS + t.log2n);
    let mut out = vec![0i32; n * n];
    for i in 0..n {
        let tr = &tmp[i * n..(i + 1) * n];
        for j in 0..n {
            let s: i128 = tr.iter().enumerate().map(|(l, &a)| a as i128 * b[l * n + j] as i128).sum();
            out[i * n + j] = div_round(s, den) as i32;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn basis_near_orthogonal() {
        for n in SIZES {
            let t = tables(n);
            let scale = (1u64 << (2 * BASIS_BITS)) as f64 * n as f64;
            for a in 0..n {
                for c in 0..n {
                    let dot: i64 = (0..n).map(|i| t.basis[a * n + i] * t.basis[c * n + i]).sum();
                    let want = if a == c { scale } else { 0.0 };
                    assert!((dot as f64 - want).abs() / scale < 1e-3, "n={n} rows {a},{c}: {dot}");
                }
            }
        }
    }

    #[test]
    fn zigzag_is_a_permutation() {
        for n in SIZES {
            let mut s = zigzag(n).to_vec();
            assert_eq!(&s[..3], &[0, 1, n]);
            s.sort_unstable();
            assert_eq!(s, (0..n * n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn steps() {
        assert_eq!(quant_step(4), 64);
        assert_eq!(quant_step(10), 128);
        assert_eq!(quant_step(16), 256);
    }

    #[test]
    fn zero_residual() {
        let z = vec![0; 64];
        assert_eq!(transform_quant(&z, 8, 30, true), z);
        assert_eq!(dequant_itransform(&z, 8, 30), z);
    }

    #[test]
    fn dc_only() {
        for n in SIZES {
            let x = vec![17; n * n];
            let c = transform_quant(&x, n, 4, true);
            assert_ne!(c[0], 0);
            assert!(c[1..].iter().all(|&v| v == 0), "n={n}");
        }
    }

    #[test]
    fn unit_step_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..2000 {
            let x: Vec<i32> = (0..64).map(|_| rng.gen_range(-1023..=1023)).collect();
            let intra = trial % 2 == 0;
            let y = dequant_itransform(&transform_quant(&x, 8, 4, intra), 8, 4);
            let sse: i64 = x.iter().zip(&y).map(|(a, b)| ((a - b) as i64).pow(2)).sum();
            assert!(sse <= 64, "trial {trial}: sse {sse}");
        }
    }

    #[test]
    fn unit_step_round_trip_all_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for n in SIZES {
            for _ in 0..20 {
                let x: Vec<i32> = (0..n * n).map(|_| rng.gen_range(-1023..=1023)).collect();
                let y = dequant_itransform(&transform_quant(&x, n, 4, false), n, 4);
                let sse: i64 = x.iter().zip(&y).map(|(a, b)| ((a - b) as i64).pow(2)).sum();
                assert!(sse <= (n * n) as i64, "n={n}: sse {sse}");
            }
        }
    }

    #[test]
    fn bypass_is_identity() {
        let x: Vec<i32> = (0..256).map(|i| i - 128).collect();
        assert_eq!(transform_quant(&x, 16, LOSSLESS_QP, false), x);
        assert_eq!(dequant_itransform(&x, 16, LOSSLESS_QP), x);
    }

    #[test]
    fn large_blocks_do_not_overflow() {
        let x = vec![65535; 64 * 64];
        let y = dequant_itransform(&transform_quant(&x, 64, 1, true), 64, 1);
        assert!(y.iter().all(|&v| (v - 65535).abs() <= 1));
    }
}
