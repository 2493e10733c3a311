use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Position plus unit-quaternion orientation in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    pub fn from_position(position: Vector3<f64>) -> Self {
        Self { position, orientation: UnitQuaternion::identity() }
    }

    /// This pose expressed in the frame of `reference`.
    pub fn relative_to(&self, reference: &Pose) -> Pose {
        let inv = reference.orientation.inverse();
        Pose {
            position: inv * (self.position - reference.position),
            orientation: inv * self.orientation,
        }
    }

    /// `[x, y, z, qw, qx, qy, qz]`
    pub fn to_array(&self) -> [f64; 7] {
        let p = self.position;
        let q = self.orientation.quaternion();
        [p.x, p.y, p.z, q.w, q.i, q.j, q.k]
    }
}

/// Axis-aligned box in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    /// Strict interior test; points on the boundary are outside.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] > self.min[i] && p[i] < self.max[i])
    }

    pub fn contains_xy(&self, p: &Vector3<f64>) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        )
    }
}

/// Angle between two (not necessarily unit) vectors, in `[0, pi]`.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0).acos()
}

/// Angle between a direction and the horizontal plane, in `[0, pi/2]`.
pub fn elevation(a: &Vector3<f64>) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        return 0.0;
    }
    (a.z / n).clamp(-1.0, 1.0).asin().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn relative_pose_inverts() {
        let a = Pose::new(
            Vector3::new(0.1, -0.2, 0.3),
            UnitQuaternion::from_euler_angles(0.2, -0.4, 1.1),
        );
        let b = Pose::new(Vector3::new(-0.5, 0.4, 0.0), UnitQuaternion::from_euler_angles(-0.3, 0.1, 0.7));
        let rel = a.relative_to(&b);
        let back = b.orientation * rel.position + b.position;
        assert_relative_eq!(back, a.position, epsilon = 1e-12);
        assert!(a.relative_to(&a).position.norm() < 1e-12);
    }

    #[test]
    fn aabb_boundary_is_outside() {
        let b = Aabb::new([0.0; 3], [1.0; 3]);
        assert!(b.contains(&Vector3::new(0.5, 0.5, 0.5)));
        assert!(!b.contains(&Vector3::new(1.0, 0.5, 0.5)));
    }
}
