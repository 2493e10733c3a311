//! Parameterized 7-DoF serial arms and their forward kinematics.
//!
//! Every arm shares the joint-axis pattern yaw, pitch, roll, pitch, roll,
//! pitch, roll (local z, y, z, y, z, y, z). Joint `i` rotates its frame and
//! link `i` then extends `link_lengths[i]` along the rotated local z axis, so
//! the end effector sits on the axis of the last (wrist-roll) joint. The
//! base frame is yawed by +90 degrees so that "forward" is world +y.
//!
//! The end-effector frame's z axis is the gripper approach direction and its
//! x axis is the finger closing direction.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::task_space::RobotKind;

pub const NUM_JOINTS: usize = 7;

/// Rotation axis of each joint in its local frame.
const JOINT_AXES: [JointAxis; NUM_JOINTS] = [
    JointAxis::Z,
    JointAxis::Y,
    JointAxis::Z,
    JointAxis::Y,
    JointAxis::Z,
    JointAxis::Y,
    JointAxis::Z,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JointAxis {
    Y,
    Z,
}

impl JointAxis {
    fn unit(self) -> Vector3<f64> {
        match self {
            JointAxis::Y => Vector3::y(),
            JointAxis::Z => Vector3::z(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    pub link_lengths: [f64; NUM_JOINTS],
    pub joint_limits: [(f64, f64); NUM_JOINTS],
    pub max_joint_speed: [f64; NUM_JOINTS],
    pub home_pose: [f64; NUM_JOINTS],
    pub base_position: [f64; 3],
}

/// Per-robot tables: link lengths, half-width of the joint range around home, speed caps.
struct RobotTable {
    links: [f64; NUM_JOINTS],
    half_range: [f64; NUM_JOINTS],
    speed: [f64; NUM_JOINTS],
}

fn robot_table(kind: RobotKind) -> RobotTable {
    match kind {
        RobotKind::Iiwa => RobotTable {
            links: [0.36, 0.20, 0.22, 0.20, 0.20, 0.08, 0.15],
            half_range: [1.30, 1.20, 1.00, 1.40, 1.00, 1.70, 1.70],
            speed: [0.080, 0.080, 0.090, 0.090, 0.110, 0.110, 0.120],
        },
        RobotKind::Jaco => RobotTable {
            links: [0.28, 0.25, 0.16, 0.21, 0.21, 0.10, 0.16],
            half_range: [1.40, 1.10, 1.20, 1.30, 1.20, 1.60, 1.80],
            speed: [0.090, 0.090, 0.100, 0.100, 0.120, 0.120, 0.130],
        },
        RobotKind::Gen3 => RobotTable {
            links: [0.30, 0.21, 0.21, 0.21, 0.21, 0.06, 0.17],
            half_range: [1.25, 1.25, 1.10, 1.35, 1.10, 1.65, 1.75],
            speed: [0.085, 0.085, 0.095, 0.095, 0.115, 0.115, 0.125],
        },
        RobotKind::Panda => RobotTable {
            links: [0.333, 0.17, 0.18, 0.22, 0.22, 0.088, 0.16],
            half_range: [1.35, 1.15, 0.95, 1.45, 0.95, 1.75, 1.65],
            speed: [0.075, 0.075, 0.085, 0.085, 0.105, 0.105, 0.115],
        },
    }
}

/// Result of a forward-kinematics pass.
#[derive(Debug, Clone)]
pub struct ChainPose {
    /// Frame origin after each link (index 6 is the end effector).
    pub link_ends: [Vector3<f64>; NUM_JOINTS],
    pub end_effector: Pose,
}

impl RobotModel {
    /// Builds one of the four standard arms, with its home pose solved so the
    /// end effector sits at `home_ee` pointing straight down.
    pub fn standard(kind: RobotKind, base_position: [f64; 3], home_ee: [f64; 3]) -> Result<Self> {
        let table = robot_table(kind);
        let home_pose = solve_home(&table.links, base_position, home_ee)?;
        let mut joint_limits = [(0.0, 0.0); NUM_JOINTS];
        for i in 0..NUM_JOINTS {
            joint_limits[i] = (home_pose[i] - table.half_range[i], home_pose[i] + table.half_range[i]);
        }
        Ok(Self {
            name: kind.name().to_string(),
            link_lengths: table.links,
            joint_limits,
            max_joint_speed: table.speed,
            home_pose,
            base_position,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..NUM_JOINTS {
            let (lo, hi) = self.joint_limits[i];
            if !(lo < hi) {
                return Err(Error::InvalidConfig(format!("{}: joint {i} has lo >= hi", self.name)));
            }
            if !(self.max_joint_speed[i] > 0.0) {
                return Err(Error::InvalidConfig(format!("{}: joint {i} speed must be positive", self.name)));
            }
            if !(lo..=hi).contains(&self.home_pose[i]) {
                return Err(Error::InvalidConfig(format!("{}: home pose outside limits at joint {i}", self.name)));
            }
            if self.link_lengths[i] < 0.0 {
                return Err(Error::InvalidConfig(format!("{}: negative link length", self.name)));
            }
        }
        Ok(())
    }

    pub fn clamp_to_limits(&self, joints: &[f64; NUM_JOINTS]) -> [f64; NUM_JOINTS] {
        let mut out = *joints;
        for (q, (lo, hi)) in out.iter_mut().zip(self.joint_limits) {
            *q = q.clamp(lo, hi);
        }
        out
    }

    /// Midpoint and half-width of each joint range, used for action scaling.
    pub fn joint_mid_and_half_range(&self) -> ([f64; NUM_JOINTS], [f64; NUM_JOINTS]) {
        let mut mid = [0.0; NUM_JOINTS];
        let mut half = [0.0; NUM_JOINTS];
        for (i, (lo, hi)) in self.joint_limits.iter().enumerate() {
            mid[i] = 0.5 * (lo + hi);
            half[i] = 0.5 * (hi - lo);
        }
        (mid, half)
    }

    /// Sum of link lengths from joint `joint` to the end effector.
    pub fn distal_length(&self, joint: usize) -> f64 {
        self.link_lengths[joint..].iter().sum()
    }

    pub fn forward_kinematics(&self, joints: &[f64; NUM_JOINTS]) -> ChainPose {
        let mut rot = Rotation3::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let mut pos = Vector3::from(self.base_position);
        let mut link_ends = [Vector3::zeros(); NUM_JOINTS];
        for i in 0..NUM_JOINTS {
            let axis = nalgebra::Unit::new_unchecked(JOINT_AXES[i].unit());
            rot *= Rotation3::from_axis_angle(&axis, joints[i]);
            pos += rot * Vector3::new(0.0, 0.0, self.link_lengths[i]);
            link_ends[i] = pos;
        }
        ChainPose {
            link_ends,
            end_effector: Pose::new(pos, UnitQuaternion::from_rotation_matrix(&rot)),
        }
    }

    /// End-effector pose only.
    pub fn end_effector(&self, joints: &[f64; NUM_JOINTS]) -> Pose {
        self.forward_kinematics(joints).end_effector
    }

    /// Points along the arm checked against obstacles: every link end and link midpoint.
    pub fn collision_points(&self, joints: &[f64; NUM_JOINTS]) -> Vec<Vector3<f64>> {
        let chain = self.forward_kinematics(joints);
        let mut prev = Vector3::from(self.base_position);
        let mut pts = Vec::with_capacity(2 * NUM_JOINTS);
        for end in chain.link_ends {
            pts.push(0.5 * (prev + end));
            pts.push(end);
            prev = end;
        }
        pts
    }
}

/// Gripper approach direction (end-effector z axis) in world coordinates.
pub fn approach_axis(ee: &Pose) -> Vector3<f64> {
    ee.orientation * Vector3::z()
}

/// Finger closing direction (end-effector x axis) in world coordinates.
pub fn finger_axis(ee: &Pose) -> Vector3<f64> {
    ee.orientation * Vector3::x()
}

/// Closed-form home pose: roll joints at zero, the three pitch joints placing
/// the wrist above `home_ee` with the hand vertical (elbow up).
fn solve_home(links: &[f64; NUM_JOINTS], base: [f64; 3], home_ee: [f64; 3]) -> Result<[f64; NUM_JOINTS]> {
    let upper = links[1] + links[2];
    let fore = links[3] + links[4];
    let hand = links[5] + links[6];
    let dx = home_ee[0] - base[0];
    let dy = home_ee[1] - base[1];
    // Forward direction after yaw q is (-sin q, cos q).
    let yaw = (-dx).atan2(dy);
    let radial = dx.hypot(dy);
    let wrist_r = radial;
    let wrist_z = home_ee[2] + hand - (base[2] + links[0]);
    let dist2 = wrist_r * wrist_r + wrist_z * wrist_z;
    let cos_elbow = (dist2 - upper * upper - fore * fore) / (2.0 * upper * fore);
    if !(-1.0..=1.0).contains(&cos_elbow) {
        return Err(Error::InvalidConfig(format!(
            "home end-effector position {home_ee:?} unreachable"
        )));
    }
    let elbow = cos_elbow.acos();
    let shoulder = wrist_r.atan2(wrist_z) - (fore * elbow.sin()).atan2(upper + fore * elbow.cos());
    let wrist = PI - shoulder - elbow;
    Ok([yaw, shoulder, 0.0, elbow, 0.0, wrist, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_between;
    use approx::assert_relative_eq;

    const BASE: [f64; 3] = [0.0, -0.5, 0.0];
    const HOME: [f64; 3] = [-0.25, -0.1, 0.22];

    fn all_robots() -> Vec<RobotModel> {
        RobotKind::ALL.iter().map(|&k| RobotModel::standard(k, BASE, HOME).unwrap()).collect()
    }

    #[test]
    fn home_reaches_target_pointing_down() {
        for r in all_robots() {
            r.validate().unwrap();
            let ee = r.end_effector(&r.home_pose);
            assert_relative_eq!(ee.position, Vector3::from(HOME), epsilon = 1e-9);
            assert!(angle_between(&approach_axis(&ee), &-Vector3::z()) < 1e-9);
        }
    }

    #[test]
    fn robots_are_distinct() {
        let rs = all_robots();
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                assert_ne!(rs[i].link_lengths, rs[j].link_lengths);
                assert_ne!(rs[i].joint_limits, rs[j].joint_limits);
            }
        }
    }

    #[test]
    fn wrist_roll_keeps_position() {
        for r in all_robots() {
            let mut q = r.home_pose;
            let a = r.end_effector(&q);
            q[6] += 0.7;
            let b = r.end_effector(&q);
            assert_relative_eq!(a.position, b.position, epsilon = 1e-12);
            assert!(a.orientation.angle_to(&b.orientation) > 0.69);
        }
    }

    #[test]
    fn lipschitz_bound_per_joint() {
        let eps = 1e-3;
        for r in all_robots() {
            for j in 0..NUM_JOINTS {
                let mut q = r.home_pose;
                let a = r.end_effector(&q).position;
                q[j] += eps;
                let b = r.end_effector(&q).position;
                assert!((a - b).norm() <= r.distal_length(j) * eps + 1e-12);
            }
        }
    }

    #[test]
    fn unreachable_home_is_config_error() {
        assert!(RobotModel::standard(RobotKind::Iiwa, BASE, [3.0, 0.0, 0.0]).is_err());
    }
}
