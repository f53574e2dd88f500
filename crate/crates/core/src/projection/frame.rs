use crate::pointcloud::Point3;

/// Single-component depth image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

impl Frame {
    pub fn new(width: usize, height: usize, fill: u16) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.data[y * self.width + x] = v;
    }
}

/// Per-pixel flag: true where the pixel carries a projected sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl OccupancyMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// One of the six signed projection directions, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::PosX,
        Axis::NegX,
        Axis::PosY,
        Axis::NegY,
        Axis::PosZ,
        Axis::NegZ,
    ];

    /// Coordinate index measured as depth (0 = x, 1 = y, 2 = z).
    pub fn depth_axis(self) -> usize {
        self.code() as usize / 2
    }

    pub fn is_positive(self) -> bool {
        self.code() % 2 == 0
    }

    /// Coordinate indices mapped to frame columns and rows.
    pub fn tangent_axes(self) -> (usize, usize) {
        match self.depth_axis() {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        }
    }

    pub fn direction(self) -> [f64; 3] {
        let mut d = [0.0; 3];
        d[self.depth_axis()] = if self.is_positive() { 1.0 } else { -1.0 };
        d
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

/// Placement of a patch in the packed frames plus its 3D anchor.
///
/// `origin3d` holds the tangent-axis minima and, along the depth axis, the
/// depth-zero plane: the minimum for positive axes, the maximum for negative
/// ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchPlacement {
    pub axis: Axis,
    pub origin3d: Point3,
    pub u0: usize,
    pub v0: usize,
    pub width: usize,
    pub height: usize,
}

impl PatchPlacement {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.u0 && x < self.u0 + self.width && y >= self.v0 && y < self.v0 + self.height
    }
}

/// Packed near/far depth frames sharing one occupancy map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometryFramePair {
    pub near: Frame,
    pub far: Frame,
    pub occupancy: OccupancyMap,
    pub patches: Vec<PatchPlacement>,
    pub bit_depth: u8,
}

impl GeometryFramePair {
    pub fn width(&self) -> usize {
        self.near.width
    }

    pub fn height(&self) -> usize {
        self.near.height
    }
}

/// Maximum allowed far − near depth difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SurfaceThickness(pub u16);
