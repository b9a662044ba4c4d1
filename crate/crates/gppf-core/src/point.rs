//! Planar coordinates shared by surfaces, kernels, and policies.

/// A location in the horizontal plane of a surface.
///
/// Elevation is deliberately not part of this type: kernels and query
/// policies reason in the plane, and only traversal-distance accounting
/// brings the vertical component back in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Squared Euclidean distance in the plane.
    pub fn sq_distance(self, other: Self) -> f64 {
        let d1 = self.x1 - other.x1;
        let d2 = self.x2 - other.x2;
        d1 * d1 + d2 * d2
    }

    /// Euclidean distance in the plane.
    pub fn planar_distance(self, other: Self) -> f64 {
        libm::sqrt(self.sq_distance(other))
    }
}
