use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use super::{PointCloud, PointCloudError, UnitVec3};
use crate::spatial::SpatialIndex;

/// Relative eigenvalue floor below which a neighbourhood counts as a line.
const DEGENERATE_RATIO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalDiagnostics {
    /// Points whose neighbourhood was collinear; they received `(0, 0, 1)`.
    pub degenerate: usize,
}

#[derive(Debug, Clone)]
pub struct NormalEstimation {
    pub cloud: PointCloud,
    pub diagnostics: NormalDiagnostics,
}

/// Least-squares plane normal over each point's `k` nearest neighbours
/// (the point itself included, distance ties broken by index).
///
/// Signs are made consistent by propagating along a minimum spanning tree
/// of the neighbour graph, weighted by `1 − |nᵢ·nⱼ|`. Each connected
/// component is seeded at its most exterior point, whose normal is turned
/// toward the bounding-box face it is closest to along the normal's
/// dominant axis.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<NormalEstimation, PointCloudError> {
    let n = cloud.len();
    if k < 3 || n < k {
        return Err(PointCloudError::TooFewPoints { n, k: k.max(3) });
    }
    let points = cloud.points();
    let index = SpatialIndex::new(points);

    let fits: Vec<(Vec<u32>, Option<[f64; 3]>)> = points
        .par_iter()
        .map(|p| {
            let nbrs: Vec<u32> = index.knn(p, k).iter().map(|nb| nb.index as u32).collect();
            let normal = plane_normal(nbrs.iter().map(|&i| points[i as usize].to_f64()));
            (nbrs, normal)
        })
        .collect();

    let mut degenerate = 0;
    let mut normals: Vec<UnitVec3> = fits
        .iter()
        .map(|(_, nrm)| match nrm.and_then(UnitVec3::new) {
            Some(u) => u,
            None => {
                degenerate += 1;
                UnitVec3::z()
            }
        })
        .collect();

    let adjacency = symmetric_adjacency(n, fits.iter().map(|(nb, _)| nb.as_slice()));
    orient(cloud, &adjacency, &mut normals);

    let mut out = cloud.clone();
    out.set_normals(normals)?;
    Ok(NormalEstimation {
        cloud: out,
        diagnostics: NormalDiagnostics { degenerate },
    })
}

/// Smallest-eigenvalue eigenvector of the neighbourhood covariance, or
/// `None` when the neighbourhood is (numerically) a line or a point.
fn plane_normal(pts: impl Iterator<Item = [f64; 3]> + Clone) -> Option<[f64; 3]> {
    let mut count = 0.0;
    let mut mean = Vector3::zeros();
    for p in pts.clone() {
        mean += Vector3::from(p);
        count += 1.0;
    }
    mean /= count;
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = Vector3::from(p) - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if largest <= 0.0 || middle <= DEGENERATE_RATIO * largest {
        return None;
    }
    let v = eig.eigenvectors.column(order[0]);
    Some([v[0], v[1], v[2]])
}

fn symmetric_adjacency<'a>(n: usize, lists: impl Iterator<Item = &'a [u32]>) -> Vec<Vec<u32>> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, nb) in lists.enumerate() {
        for &j in nb {
            if j as usize != i {
                adj[i].push(j);
                adj[j as usize].push(i as u32);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

fn dominant_axis(v: [f64; 3]) -> usize {
    let mut best = 0;
    for a in 1..3 {
        if v[a].abs() > v[best].abs() {
            best = a;
        }
    }
    best
}

fn orient(cloud: &PointCloud, adj: &[Vec<u32>], normals: &mut [UnitVec3]) {
    let points = cloud.points();
    let Some((lo, hi)) = cloud.bounding_box() else {
        return;
    };
    let center = [
        (lo.x as f64 + hi.x as f64) / 2.0,
        (lo.y as f64 + hi.y as f64) / 2.0,
        (lo.z as f64 + hi.z as f64) / 2.0,
    ];
    // how far a point sits from the centre along its normal's dominant axis
    let exterior: Vec<f64> = (0..points.len())
        .map(|i| {
            let a = dominant_axis(normals[i].as_array());
            points[i].coord(a) as f64 - center[a]
        })
        .collect();

    let n = points.len();
    let mut visited = vec![false; n];
    let mut by_exterior: Vec<(f64, usize)> = (0..n).map(|i| (exterior[i].abs(), i)).collect();
    by_exterior.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    for &(_, seed) in &by_exterior {
        if visited[seed] {
            continue;
        }
        let a = dominant_axis(normals[seed].as_array());
        let outward = if exterior[seed] >= 0.0 { 1.0 } else { -1.0 };
        if normals[seed].as_array()[a] * outward < 0.0 {
            normals[seed] = normals[seed].negated();
        }

        // Prim over the component; heap key is (weight bits, node, parent)
        let mut heap = BinaryHeap::new();
        visited[seed] = true;
        let push_edges = |heap: &mut BinaryHeap<_>, from: usize, normals: &[UnitVec3], visited: &[bool]| {
            for &j in &adj[from] {
                let j = j as usize;
                if !visited[j] {
                    let w = 1.0 - normals[from].dot(normals[j].as_array()).abs();
                    heap.push(Reverse((w.max(0.0).to_bits(), j, from)));
                }
            }
        };
        push_edges(&mut heap, seed, normals, &visited);
        while let Some(Reverse((_, node, parent))) = heap.pop() {
            if visited[node] {
                continue;
            }
            visited[node] = true;
            if normals[parent].dot(normals[node].as_array()) < 0.0 {
                normals[node] = normals[node].negated();
            }
            push_edges(&mut heap, node, normals, &visited);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Point3;

    fn grid(f: impl Fn(u32, u32) -> u32, n: u32) -> PointCloud {
        let mut pts = Vec::new();
        for y in 0..n {
            for x in 0..n {
                pts.push(Point3::new(x, y, f(x, y)));
            }
        }
        PointCloud::new(pts, 10).unwrap()
    }

    #[test]
    fn flat_grid_has_vertical_normals() {
        let est = estimate_normals(&grid(|_, _| 5, 8), 9).unwrap();
        assert_eq!(est.diagnostics.degenerate, 0);
        let normals = est.cloud.normals().unwrap();
        for nrm in normals {
            assert!((nrm.nz.abs() - 1.0).abs() < 1e-9, "{nrm:?}");
        }
        // consistent sign across the sheet
        assert!(normals.iter().all(|v| v.nz.signum() == normals[0].nz.signum()));
    }

    #[test]
    fn slanted_plane_interior_normal() {
        // z = x: closed-form normal (1, 0, -1)/sqrt(2)
        let est = estimate_normals(&grid(|x, _| x, 9), 9).unwrap();
        let pc = &est.cloud;
        let i = pc.points().iter().position(|p| *p == Point3::new(4, 4, 4)).unwrap();
        let v = pc.normals().unwrap()[i];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [s, 0.0, -s];
        let dot = v.dot(expected);
        assert!((dot.abs() - 1.0).abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn collinear_points_fall_back() {
        let pc = PointCloud::new(
            vec![Point3::new(0, 0, 0), Point3::new(1, 1, 1), Point3::new(2, 2, 2)],
            4,
        )
        .unwrap();
        let est = estimate_normals(&pc, 3).unwrap();
        assert_eq!(est.diagnostics.degenerate, 3);
        for v in est.cloud.normals().unwrap() {
            assert_eq!(v.nz.abs(), 1.0);
        }
    }

    #[test]
    fn too_few_points() {
        let pc = PointCloud::new(vec![Point3::new(0, 0, 0), Point3::new(1, 0, 0)], 4).unwrap();
        assert!(matches!(
            estimate_normals(&pc, 3),
            Err(PointCloudError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn thick_sheet_gets_one_orientation() {
        let mut pts = Vec::new();
        for y in 0..12 {
            for x in 0..12 {
                pts.push(Point3::new(x, y, 20));
                if (x + 2 * y) % 3 != 0 {
                    pts.push(Point3::new(x, y, 21));
                }
            }
        }
        let pc = PointCloud::new(pts, 8).unwrap();
        let est = estimate_normals(&pc, 16).unwrap();
        let nz: Vec<f64> = est.cloud.normals().unwrap().iter().map(|v| v.nz).collect();
        assert!(nz.iter().all(|&z| z > 0.5) || nz.iter().all(|&z| z < -0.5));
    }

    #[test]
    fn cube_normals_point_outward() {
        let s = 10u32;
        let mut pts = Vec::new();
        for x in 0..=s {
            for y in 0..=s {
                for z in 0..=s {
                    if x == 0 || y == 0 || z == 0 || x == s || y == s || z == s {
                        pts.push(Point3::new(x + 5, y + 5, z + 5));
                    }
                }
            }
        }
        let pc = PointCloud::new(pts, 8).unwrap();
        let est = estimate_normals(&pc, 16).unwrap();
        let c = 5.0 + s as f64 / 2.0;
        for (p, v) in est.cloud.points().iter().zip(est.cloud.normals().unwrap()) {
            let d = [p.x as f64 - c, p.y as f64 - c, p.z as f64 - c];
            assert!(v.dot(d) > 0.0, "{p:?} {v:?}");
        }
    }

    #[test]
    fn exact_planes_recovered() {
        // a few integer-slope planes, interior points only
        for (a, b) in [(0i64, 0i64), (1, 0), (0, 1), (1, 1), (2, -1)] {
            let mut pts = Vec::new();
            for y in 0..10i64 {
                for x in 0..10i64 {
                    pts.push(Point3::new(x as u32, y as u32, (40 + a * x + b * y) as u32));
                }
            }
            let pc = PointCloud::new(pts, 8).unwrap();
            let est = estimate_normals(&pc, 9).unwrap();
            let expected = UnitVec3::new([a as f64, b as f64, -1.0]).unwrap();
            for v in est.cloud.normals().unwrap() {
                assert!((v.dot(expected.as_array()).abs() - 1.0).abs() < 1e-6);
            }
        }
    }
}
