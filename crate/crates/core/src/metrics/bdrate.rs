use nalgebra::{DMatrix, DVector};

use super::MetricError;

/// One rate-distortion operating point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdPoint {
    pub bits_total: u64,
    pub bits_geometry: u64,
    pub d1_psnr: f64,
    pub d2_psnr: f64,
    pub points_in: usize,
    pub points_out: usize,
    pub points_missed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BdMetric {
    D1,
    D2,
}

impl RdPoint {
    pub fn psnr(&self, metric: BdMetric) -> f64 {
        match metric {
            BdMetric::D1 => self.d1_psnr,
            BdMetric::D2 => self.d2_psnr,
        }
    }
}

/// BD-rate in percent over geometry bits; negative means `test` saves rate.
pub fn bd_rate(anchor: &[RdPoint], test: &[RdPoint], metric: BdMetric) -> Result<f64, MetricError> {
    let curve = |pts: &[RdPoint]| -> Vec<(f64, f64)> {
        pts.iter()
            .map(|p| (p.bits_geometry as f64, p.psnr(metric)))
            .collect()
    };
    bd_rate_curves(&curve(anchor), &curve(test))
}

fn prepare(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, MetricError> {
    if points.len() < 4 {
        return Err(MetricError::TooFewPoints(points.len()));
    }
    if points.iter().any(|&(r, _)| !(r > 0.0)) {
        return Err(MetricError::NonPositiveRate);
    }
    let mut v: Vec<(f64, f64)> = points.iter().map(|&(r, q)| (r.log10(), q)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    if v.windows(2).any(|w| !(w[1].1 > w[0].1)) {
        return Err(MetricError::NotMonotone);
    }
    Ok(v)
}

/// Least-squares cubic `log10(rate) = c0 + c1·x + c2·x² + c3·x³` in the
/// normalised coordinate `x`.
fn fit(points: &[(f64, f64)], to_x: impl Fn(f64) -> f64) -> [f64; 4] {
    let n = points.len();
    let a = DMatrix::from_fn(n, 4, |i, j| to_x(points[i].1).powi(j as i32));
    let b = DVector::from_iterator(n, points.iter().map(|p| p.0));
    let c = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("SVD with both factors always solves");
    [c[0], c[1], c[2], c[3]]
}

fn integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let prim = |x: f64| c[0] * x + c[1] * x * x / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0;
    prim(hi) - prim(lo)
}

/// BD-rate between two `(rate, psnr)` curves.
pub fn bd_rate_curves(anchor: &[(f64, f64)], test: &[(f64, f64)]) -> Result<f64, MetricError> {
    let a = prepare(anchor)?;
    let t = prepare(test)?;
    let range = |v: &[(f64, f64)]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)))
    };
    let (alo, ahi) = range(&a);
    let (tlo, thi) = range(&t);
    let lo = alo.max(tlo);
    let hi = ahi.min(thi);
    if !(hi > lo) {
        return Err(MetricError::NoOverlap);
    }
    let mid = (lo + hi) / 2.0;
    let half = (hi - lo) / 2.0;
    let to_x = |q: f64| (q - mid) / half;
    let ca = fit(&a, to_x);
    let ct = fit(&t, to_x);
    let avg = (integral(&ct, -1.0, 1.0) - integral(&ca, -1.0, 1.0)) / 2.0;
    Ok((10f64.powf(avg) - 1.0) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor() -> Vec<(f64, f64)> {
        vec![(1000.0, 30.0), (1800.0, 33.5), (3500.0, 37.0), (7000.0, 40.2), (15000.0, 43.1)]
    }

    fn scaled(f: f64) -> Vec<(f64, f64)> {
        anchor().into_iter().map(|(r, q)| (r * f, q)).collect()
    }

    #[test]
    fn calibration() {
        assert!(bd_rate_curves(&anchor(), &anchor()).unwrap().abs() < 1e-9);
        assert!((bd_rate_curves(&anchor(), &scaled(0.9)).unwrap() + 10.0).abs() < 1e-6);
        assert!((bd_rate_curves(&anchor(), &scaled(1.1)).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_consistency() {
        let ab = bd_rate_curves(&anchor(), &scaled(0.8)).unwrap();
        let ba = bd_rate_curves(&scaled(0.8), &anchor()).unwrap();
        assert!((ab - (-ba / (1.0 + ba / 100.0))).abs() < 1e-6);
    }

    #[test]
    fn unordered_input() {
        let mut a = anchor();
        a.reverse();
        assert!((bd_rate_curves(&a, &scaled(0.9)).unwrap() + 10.0).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        assert_eq!(bd_rate_curves(&anchor()[..3], &anchor()), Err(MetricError::TooFewPoints(3)));
        let mut flat = anchor();
        flat[2].1 = flat[1].1;
        assert_eq!(bd_rate_curves(&flat, &anchor()), Err(MetricError::NotMonotone));
        let high: Vec<_> = anchor().into_iter().map(|(r, q)| (r, q + 50.0)).collect();
        assert_eq!(bd_rate_curves(&high, &anchor()), Err(MetricError::NoOverlap));
        let mut zero = anchor();
        zero[0].0 = 0.0;
        assert_eq!(bd_rate_curves(&zero, &anchor()), Err(MetricError::NonPositiveRate));
    }
}
