//! Arena geometry and the per-task instantiation of robot, object and obstacle.
//!
//! World frame: x to the right, y away from the robot, z up, table top at
//! `table_z`. The left (object) bin and the right (target) bin sit at
//! `x = -0.25` and `x = +0.25`.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Pose};
use crate::robot::RobotModel;
use crate::task_space::{ObjectKind, ObjectiveKind, ObstacleKind, RobotKind, TaskDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspAxis {
    /// Approach straight down.
    TopDown,
    /// Approach horizontally, fingers closing vertically on a thin edge.
    HorizontalEdge,
    /// Approach horizontally, fingers closing horizontally around an upright bar.
    HorizontalBar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub name: String,
    pub grasp_axis: GraspAxis,
    pub grasp_tolerance_pos: f64,
    pub grasp_tolerance_ang: f64,
    /// Lift above the table (object bottom) that ends a push episode.
    pub lift_threshold_height: f64,
    /// Distance from the object's reference point (its grasp point) to its bottom.
    pub half_height: f64,
    /// Finger opening when grasped.
    pub grip_width: f64,
}

impl ObjectModel {
    pub fn standard(kind: ObjectKind, push_lift_threshold: f64) -> Self {
        let (axis, pos, ang, half_height, grip) = match kind {
            ObjectKind::Box => (GraspAxis::TopDown, 0.06, 0.40, 0.025, 0.025),
            ObjectKind::HollowBox => (GraspAxis::HorizontalEdge, 0.06, 0.40, 0.040, 0.008),
            ObjectKind::Plate => (GraspAxis::HorizontalEdge, 0.05, 0.35, 0.010, 0.005),
            ObjectKind::Dumbbell => (GraspAxis::HorizontalBar, 0.06, 0.40, 0.060, 0.015),
        };
        Self {
            name: kind.name().to_string(),
            grasp_axis: axis,
            grasp_tolerance_pos: pos,
            grasp_tolerance_ang: ang,
            lift_threshold_height: push_lift_threshold,
            half_height,
            grip_width: grip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstaclePlacement {
    None,
    BetweenRobotAndObject,
    BetweenBins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleModel {
    pub name: String,
    pub blocked_regions: Vec<Aabb>,
    pub placement: ObstaclePlacement,
}

/// Tunable arena parameters. Every field has a default and may be overridden from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArenaConfig {
    pub table_z: f64,
    /// Half extents of the table top in x and y.
    pub table_half_extent: [f64; 2],
    /// Arm points may not go below `table_z + ee_floor_clearance`.
    pub ee_floor_clearance: f64,
    pub left_bin_center: [f64; 2],
    pub right_bin_center: [f64; 2],
    pub bin_size: f64,
    pub bin_rim_height: f64,
    /// Inset of the object spawn and goal regions from the bin walls.
    pub bin_margin: f64,
    pub shelf_height: f64,
    pub shelf_thickness: f64,
    /// Depth of the "in front of shelf" region and headroom of the "in shelf" region.
    pub shelf_clearance: f64,
    pub trash_rim_height: f64,
    pub wall_thickness: f64,
    pub wall_height: f64,
    /// y coordinate of the centre plane of the robot-side barrier (object wall/door).
    pub barrier_y: f64,
    /// Full x span of the robot-side barrier placement.
    pub barrier_x_span: [f64; 2],
    /// x span blocked by the object wall; the door blocks the complement.
    pub wall_center_span: [f64; 2],
    /// y span of the wall between the bins.
    pub goal_wall_y_span: [f64; 2],
    /// Target height (above the table) of the object bottom for lifting stages.
    pub lift_height: f64,
    pub shelf_lift_margin: f64,
    pub push_lift_threshold: f64,
    pub robot_base: [f64; 3],
    pub home_ee: [f64; 3],
    /// Proportional gain of the joint tracking controller, per step.
    pub kp: f64,
    pub horizon: usize,
    pub finger_open: f64,
    pub finger_speed: f64,
    /// Robot models in canonical order; empty means the built-in arms.
    pub robots: Vec<RobotModel>,
    /// Object models in canonical order; empty means the built-in objects.
    pub objects: Vec<ObjectModel>,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            table_z: 0.0,
            table_half_extent: [0.5, 0.4],
            ee_floor_clearance: 0.01,
            left_bin_center: [-0.25, 0.0],
            right_bin_center: [0.25, 0.0],
            bin_size: 0.3,
            bin_rim_height: 0.05,
            bin_margin: 0.03,
            shelf_height: 0.30,
            shelf_thickness: 0.02,
            shelf_clearance: 0.15,
            trash_rim_height: 0.15,
            wall_thickness: 0.05,
            wall_height: 0.25,
            barrier_y: -0.2,
            barrier_x_span: [-0.45, -0.05],
            wall_center_span: [-0.33, -0.17],
            goal_wall_y_span: [-0.2, 0.2],
            lift_height: 0.30,
            shelf_lift_margin: 0.03,
            push_lift_threshold: 0.04,
            robot_base: [0.0, -0.5, 0.0],
            home_ee: [-0.25, -0.10, 0.22],
            kp: 0.3,
            horizon: 500,
            finger_open: 0.04,
            finger_speed: 0.01,
            robots: Vec::new(),
            objects: Vec::new(),
        }
    }
}

impl ArenaConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ArenaConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp > 0.0 && self.kp <= 1.0) {
            return Err(Error::InvalidConfig("kp must be in (0, 1]".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if !self.robots.is_empty() && self.robots.len() != 4 {
            return Err(Error::InvalidConfig("robots must list exactly 4 models".into()));
        }
        if !self.objects.is_empty() && self.objects.len() != 4 {
            return Err(Error::InvalidConfig("objects must list exactly 4 models".into()));
        }
        for r in &self.robots {
            r.validate()?;
        }
        for o in &self.objects {
            if !(o.grasp_tolerance_pos > 0.0 && o.grasp_tolerance_ang > 0.0) {
                return Err(Error::InvalidConfig(format!("{}: grasp tolerances must be positive", o.name)));
            }
        }
        Ok(())
    }

    pub fn robot(&self, kind: RobotKind) -> Result<RobotModel> {
        match self.robots.get(kind.index()) {
            Some(r) => Ok(r.clone()),
            None => RobotModel::standard(kind, self.robot_base, self.home_ee),
        }
    }

    pub fn object(&self, kind: ObjectKind) -> ObjectModel {
        self.objects
            .get(kind.index())
            .cloned()
            .unwrap_or_else(|| ObjectModel::standard(kind, self.push_lift_threshold))
    }

    fn bin_footprint(&self, center: [f64; 2], height: f64) -> Aabb {
        let h = 0.5 * self.bin_size;
        Aabb::new(
            [center[0] - h, center[1] - h, self.table_z],
            [center[0] + h, center[1] + h, self.table_z + height],
        )
    }

    pub fn left_bin(&self) -> Aabb {
        self.bin_footprint(self.left_bin_center, self.bin_rim_height)
    }

    pub fn right_bin(&self) -> Aabb {
        self.bin_footprint(self.right_bin_center, self.bin_rim_height)
    }

    pub fn trash_can(&self) -> Aabb {
        self.bin_footprint(self.right_bin_center, self.trash_rim_height)
    }

    pub fn shelf_board(&self) -> Aabb {
        let mut b = self.bin_footprint(self.right_bin_center, 0.0);
        b.min[2] = self.table_z + self.shelf_height - self.shelf_thickness;
        b.max[2] = self.table_z + self.shelf_height;
        b
    }

    fn wall_box(&self, x: [f64; 2], y: [f64; 2]) -> Aabb {
        Aabb::new([x[0], y[0], self.table_z], [x[1], y[1], self.table_z + self.wall_height])
    }

    pub fn obstacle(&self, kind: ObstacleKind) -> ObstacleModel {
        let t = 0.5 * self.wall_thickness;
        let barrier_y = [self.barrier_y - t, self.barrier_y + t];
        let (regions, placement) = match kind {
            ObstacleKind::None => (Vec::new(), ObstaclePlacement::None),
            ObstacleKind::ObjectWall => (
                vec![self.wall_box(self.wall_center_span, barrier_y)],
                ObstaclePlacement::BetweenRobotAndObject,
            ),
            ObstacleKind::ObjectDoor => (
                vec![
                    self.wall_box([self.barrier_x_span[0], self.wall_center_span[0]], barrier_y),
                    self.wall_box([self.wall_center_span[1], self.barrier_x_span[1]], barrier_y),
                ],
                ObstaclePlacement::BetweenRobotAndObject,
            ),
            ObstacleKind::GoalWall => {
                let mid = 0.5 * (self.left_bin_center[0] + self.right_bin_center[0]);
                (vec![self.wall_box([mid - t, mid + t], self.goal_wall_y_span)], ObstaclePlacement::BetweenBins)
            }
        };
        ObstacleModel { name: kind.name().to_string(), blocked_regions: regions, placement }
    }

    /// Pose reported to the agent for an obstacle placement. Object wall and
    /// door share it, so observations do not reveal which space is free.
    pub fn obstacle_anchor(&self, placement: ObstaclePlacement) -> Pose {
        let half_h = 0.5 * self.wall_height;
        match placement {
            ObstaclePlacement::None => Pose::from_position(Vector3::zeros()),
            ObstaclePlacement::BetweenRobotAndObject => Pose::from_position(Vector3::new(
                0.5 * (self.barrier_x_span[0] + self.barrier_x_span[1]),
                self.barrier_y,
                self.table_z + half_h,
            )),
            ObstaclePlacement::BetweenBins => Pose::from_position(Vector3::new(
                0.5 * (self.left_bin_center[0] + self.right_bin_center[0]),
                0.5 * (self.goal_wall_y_span[0] + self.goal_wall_y_span[1]),
                self.table_z + half_h,
            )),
        }
    }

    /// x/y region (z ignored) where the object centre is spawned.
    ///
    /// With an obstacle the object is kept where the obstacle is in the way:
    /// the back half of the bin for the robot-side barriers (directly behind
    /// the wall for the object wall), and the half of the bin farthest from the
    /// goal for the wall between the bins.
    pub fn spawn_region(&self, obstacle: ObstacleKind) -> Aabb {
        let c = self.left_bin_center;
        let h = 0.5 * self.bin_size - self.bin_margin;
        let (mut x, mut y) = ([c[0] - h, c[0] + h], [c[1] - h, c[1] + h]);
        match obstacle {
            ObstacleKind::None => {}
            ObstacleKind::ObjectWall => {
                y[0] = c[1];
                x = [self.wall_center_span[0] + 0.02, self.wall_center_span[1] - 0.02];
            }
            ObstacleKind::ObjectDoor => y[0] = c[1],
            ObstacleKind::GoalWall => {
                if self.right_bin_center[0] > c[0] {
                    x[1] = c[0];
                } else {
                    x[0] = c[0];
                }
            }
        }
        Aabb::new([x[0], y[0], self.table_z], [x[1], y[1], self.table_z])
    }

    /// x/y region where pick-and-place and push goals are sampled.
    pub fn goal_region(&self) -> Aabb {
        let c = self.right_bin_center;
        let h = 0.5 * self.bin_size - self.bin_margin;
        Aabb::new([c[0] - h, c[1] - h, self.table_z], [c[0] + h, c[1] + h, self.table_z])
    }

    /// Region in front of the shelf opening (robot side), for the object bottom.
    pub fn shelf_front(&self) -> Aabb {
        let board = self.shelf_board();
        Aabb::new(
            [board.min[0], board.min[1] - self.shelf_clearance, board.max[2] - 0.01],
            [board.max[0], board.min[1], board.max[2] + self.shelf_clearance],
        )
    }

    /// Region on the shelf board, for the object bottom.
    pub fn shelf_inside(&self) -> Aabb {
        let board = self.shelf_board();
        Aabb::new(
            [board.min[0], board.min[1], board.max[2] - 0.01],
            [board.max[0], board.max[1], board.max[2] + self.shelf_clearance],
        )
    }

    /// Height (above the table) the object bottom should reach during lift stages.
    pub fn lift_target(&self, objective: ObjectiveKind) -> f64 {
        match objective {
            ObjectiveKind::Shelf => self.shelf_height + self.shelf_lift_margin,
            _ => self.lift_height,
        }
    }
}

/// Everything the simulator needs for one task.
#[derive(Debug, Clone)]
pub struct Arena {
    pub config: ArenaConfig,
    pub task: TaskDescriptor,
    pub robot: RobotModel,
    pub object: ObjectModel,
    pub obstacle: ObstacleModel,
    /// Regions no arm point may enter: table, obstacle, and the shelf board for shelf tasks.
    pub blocked: Vec<Aabb>,
    pub spawn: Aabb,
    pub obstacle_anchor: Pose,
}

impl Arena {
    pub fn new(task: TaskDescriptor) -> Result<Self> {
        Self::with_config(ArenaConfig::default(), task)
    }

    pub fn with_config(config: ArenaConfig, task: TaskDescriptor) -> Result<Self> {
        config.validate()?;
        let robot = config.robot(task.robot)?;
        let object = config.object(task.object);
        let obstacle = config.obstacle(task.obstacle);
        let mut blocked = vec![Aabb::new(
            [-10.0, -10.0, config.table_z - 10.0],
            [10.0, 10.0, config.table_z + config.ee_floor_clearance],
        )];
        blocked.extend(obstacle.blocked_regions.iter().copied());
        if task.objective == ObjectiveKind::Shelf {
            blocked.push(config.shelf_board());
        }
        let spawn = config.spawn_region(task.obstacle);
        let obstacle_anchor = config.obstacle_anchor(obstacle.placement);
        let arena = Self { config, task, robot, object, obstacle, blocked, spawn, obstacle_anchor };
        if arena.in_collision(&arena.robot.home_pose) {
            return Err(Error::InvalidConfig(format!("home pose of {} collides in {}", arena.robot.name, task)));
        }
        Ok(arena)
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn in_collision(&self, joints: &[f64; crate::robot::NUM_JOINTS]) -> bool {
        let pts = self.robot.collision_points(joints);
        pts.iter().any(|p| self.blocked.iter().any(|b| b.contains(p)))
    }

    /// Resting height of the object reference point on a support surface.
    pub fn rest_height(&self, support_z: f64) -> f64 {
        support_z + self.object.half_height
    }

    /// Goal orientation is always upright.
    pub fn goal_orientation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::identity()
    }
}
