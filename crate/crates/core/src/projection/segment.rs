use std::collections::{HashMap, VecDeque};

use super::{Axis, ProjectionError};
use crate::pointcloud::{Point3, PointCloud};
use crate::spatial::SpatialIndex;

/// Points sharing a projection axis and forming one 26-connected component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub axis: Axis,
    /// Sorted point indices into the source cloud.
    pub indices: Vec<usize>,
}

/// Axis maximizing `n·axis`; earlier axes in [`Axis::ALL`] win ties.
pub fn assign_axis(normal: [f64; 3]) -> Axis {
    let mut best = Axis::ALL[0];
    let mut best_dot = f64::NEG_INFINITY;
    for axis in Axis::ALL {
        let d = axis.direction();
        let dot = normal[0] * d[0] + normal[1] * d[1] + normal[2] * d[2];
        if dot > best_dot {
            best = axis;
            best_dot = dot;
        }
    }
    best
}

/// Splits a cloud into patches: per-point axis assignment, 26-connected
/// components per axis, and absorption of components smaller than
/// `min_patch_size` into the closest larger component on the same axis.
///
/// Output is ordered by axis, then by smallest point index.
pub fn segment_patches(cloud: &PointCloud, min_patch_size: usize) -> Result<Vec<Segment>, ProjectionError> {
    let normals = cloud.normals().ok_or(ProjectionError::MissingNormals)?;
    let points = cloud.points();
    let axes: Vec<Axis> = normals.iter().map(|n| assign_axis(n.as_array())).collect();

    let mut out = Vec::new();
    for axis in Axis::ALL {
        let members: Vec<usize> = (0..points.len()).filter(|&i| axes[i] == axis).collect();
        if members.is_empty() {
            continue;
        }
        let mut comps = connected_components(points, &members);
        absorb_small(points, &mut comps, min_patch_size);
        for mut c in comps {
            c.sort_unstable();
            out.push(Segment { axis, indices: c });
        }
    }
    out.sort_by_key(|s| (s.axis, s.indices[0]));
    Ok(out)
}

fn connected_components(points: &[Point3], members: &[usize]) -> Vec<Vec<usize>> {
    let lookup: HashMap<Point3, usize> = members.iter().map(|&i| (points[i], i)).collect();
    let mut seen: HashMap<usize, bool> = HashMap::with_capacity(members.len());
    let mut comps = Vec::new();
    for &start in members {
        if seen.contains_key(&start) {
            continue;
        }
        seen.insert(start, true);
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let p = points[i];
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (x, y, z) = (p.x as i64 + dx, p.y as i64 + dy, p.z as i64 + dz);
                        if x < 0 || y < 0 || z < 0 {
                            continue;
                        }
                        let q = Point3::new(x as u32, y as u32, z as u32);
                        if let Some(&j) = lookup.get(&q) {
                            if !seen.contains_key(&j) {
                                seen.insert(j, true);
                                comp.push(j);
                                queue.push_back(j);
                            }
                        }
                    }
                }
            }
        }
        comps.push(comp);
    }
    comps
}

fn absorb_small(points: &[Point3], comps: &mut Vec<Vec<usize>>, min_size: usize) {
    let (large, small): (Vec<usize>, Vec<usize>) = (0..comps.len()).partition(|&c| comps[c].len() >= min_size);
    if large.is_empty() || small.is_empty() {
        return;
    }
    // spatial index over all points of the large components
    let mut owner = Vec::new();
    let mut pts = Vec::new();
    for &c in &large {
        for &i in &comps[c] {
            owner.push(c);
            pts.push(points[i]);
        }
    }
    let index = SpatialIndex::new(&pts);
    let mut moves: Vec<(usize, usize)> = Vec::new();
    for &s in &small {
        let best = comps[s]
            .iter()
            .filter_map(|&i| index.nearest(&points[i]))
            .min()
            .expect("large components are non-empty");
        moves.push((s, owner[best.index]));
    }
    for &(s, target) in &moves {
        let taken = std::mem::take(&mut comps[s]);
        comps[target].extend(taken);
    }
    comps.retain(|c| !c.is_empty());
}
