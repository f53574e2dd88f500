//! Exact nearest-neighbour queries over integer points.
//!
//! Points are bucketed into a uniform grid of cubic cells. A query scans
//! cells in Chebyshev shells around the query cell and stops once the k-th
//! best squared distance is strictly below the smallest distance any
//! unvisited cell could hold, so results are exact. Equal distances are
//! ordered by point index.

use std::collections::HashMap;

use crate::pointcloud::Point3;

type CellKey = (i64, i64, i64);

pub struct SpatialIndex<'a> {
    points: &'a [Point3],
    cell: i64,
    cells: HashMap<CellKey, Vec<u32>>,
    lo: CellKey,
    hi: CellKey,
}

/// A neighbour: squared distance and index into the indexed point slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Neighbor {
    pub dist2: u64,
    pub index: usize,
}

impl<'a> SpatialIndex<'a> {
    pub fn new(points: &'a [Point3]) -> Self {
        let cell = Self::pick_cell_size(points);
        Self::with_cell_size(points, cell)
    }

    pub fn with_cell_size(points: &'a [Point3], cell: u32) -> Self {
        let cell = cell.max(1) as i64;
        let mut cells: HashMap<CellKey, Vec<u32>> = HashMap::new();
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        for (i, p) in points.iter().enumerate() {
            let k = key(p, cell);
            lo = (lo.0.min(k.0), lo.1.min(k.1), lo.2.min(k.2));
            hi = (hi.0.max(k.0), hi.1.max(k.1), hi.2.max(k.2));
            cells.entry(k).or_default().push(i as u32);
        }
        Self {
            points,
            cell,
            cells,
            lo,
            hi,
        }
    }

    // Surface-like clouds: about eight points per occupied cell.
    fn pick_cell_size(points: &[Point3]) -> u32 {
        if points.len() < 2 {
            return 1;
        }
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(hi.z - lo.z) as f64 + 1.0;
        let c = extent * (8.0 / points.len() as f64).sqrt();
        c.round().clamp(1.0, 1024.0) as u32
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest points to `q`, sorted by (distance, index).
    pub fn knn(&self, q: &Point3, k: usize) -> Vec<Neighbor> {
        let k = k.min(self.points.len());
        let mut best: Vec<Neighbor> = Vec::with_capacity(k * 2);
        if k == 0 {
            return best;
        }
        let qk = key(q, self.cell);
        let max_r = [
            (qk.0 - self.lo.0).abs(),
            (qk.0 - self.hi.0).abs(),
            (qk.1 - self.lo.1).abs(),
            (qk.1 - self.hi.1).abs(),
            (qk.2 - self.lo.2).abs(),
            (qk.2 - self.hi.2).abs(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);

        for r in 0..=max_r {
            self.visit_shell(qk, r, |idx| {
                best.push(Neighbor {
                    dist2: q.dist2(&self.points[idx]),
                    index: idx,
                });
            });
            if best.len() >= k {
                best.sort_unstable();
                best.truncate(k);
                let reach = (r * self.cell + 1) as u64;
                if best[k - 1].dist2 < reach * reach {
                    return best;
                }
            }
        }
        best.sort_unstable();
        best.truncate(k);
        best
    }

    /// Nearest point to `q`; `None` only for an empty index.
    pub fn nearest(&self, q: &Point3) -> Option<Neighbor> {
        self.knn(q, 1).into_iter().next()
    }

    fn visit_shell(&self, c: CellKey, r: i64, mut f: impl FnMut(usize)) {
        let mut visit = |k: CellKey| {
            if let Some(ids) = self.cells.get(&k) {
                for &i in ids {
                    f(i as usize);
                }
            }
        };
        if r == 0 {
            visit(c);
            return;
        }
        for dx in -r..=r {
            for dy in -r..=r {
                if dx.abs() == r || dy.abs() == r {
                    for dz in -r..=r {
                        visit((c.0 + dx, c.1 + dy, c.2 + dz));
                    }
                } else {
                    visit((c.0 + dx, c.1 + dy, c.2 - r));
                    visit((c.0 + dx, c.1 + dy, c.2 + r));
                }
            }
        }
    }
}

#[inline]
fn key(p: &Point3, cell: i64) -> CellKey {
    (p.x as i64 / cell, p.y as i64 / cell, p.z as i64 / cell)
}
