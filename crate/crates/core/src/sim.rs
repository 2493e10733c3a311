//! Kinematic manipulation simulator.
//!
//! One call to [`step`] is one control tick: joints track the commanded
//! targets with a capped proportional law, motion that would carry any arm
//! point into a blocked region is cut at the boundary, and the object either
//! rests, rides rigidly with the gripper, or settles vertically on release.

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arena::{Arena, GraspAxis, ObjectModel};
use crate::error::{Error, Result};
use crate::geometry::{angle_between, elevation, Pose};
use crate::rewards::{compute_reward, compute_reward_inputs, RewardMode, StagedRewardReport};
use crate::robot::{approach_axis, finger_axis, NUM_JOINTS};
use crate::task_space::ObjectiveKind;

/// Dimension of the action vector: seven joint targets plus the gripper command.
pub const ACTION_DIM: usize = 8;

/// Maximum point displacement between collision checks along a motion.
const COLLISION_RESOLUTION: f64 = 0.01;
const BISECTION_ITERS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArenaState {
    pub joints: [f64; NUM_JOINTS],
    /// Joint displacement over the last step (rad/step).
    pub joint_vel: [f64; NUM_JOINTS],
    pub gripper_closed: bool,
    /// Opening of each finger from the centre line.
    pub finger_pos: f64,
    pub finger_vel: f64,
    pub object_pose: Pose,
    pub grasped: bool,
    /// Object orientation in the end-effector frame, fixed at grasp time.
    pub grasp_orientation: UnitQuaternion<f64>,
    pub goal_pose: Pose,
    pub step_count: usize,
    /// Seed the episode was reset with.
    pub episode_seed: u64,
}

impl ArenaState {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub target_joints: [f64; NUM_JOINTS],
    pub gripper_close: bool,
}

impl Action {
    /// Holds the current configuration with the gripper in the given state.
    pub fn hold(state: &ArenaState, gripper_close: bool) -> Self {
        Self { target_joints: state.joints, gripper_close }
    }

    /// Maps a normalized 8-vector to an action: entries 0..7 in `[-1, 1]`
    /// scale affinely onto the joint ranges (values outside are clamped),
    /// entry 7 closes the gripper when positive.
    pub fn from_normalized(arena: &Arena, a: &[f64]) -> Result<Self> {
        if a.len() != ACTION_DIM {
            return Err(Error::InvalidAction(format!("expected {ACTION_DIM} values, got {}", a.len())));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidAction("non-finite value".into()));
        }
        let (mid, half) = arena.robot.joint_mid_and_half_range();
        let mut target = [0.0; NUM_JOINTS];
        for i in 0..NUM_JOINTS {
            target[i] = mid[i] + half[i] * a[i].clamp(-1.0, 1.0);
        }
        Ok(Self { target_joints: target, gripper_close: a[7] > 0.0 })
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: ArenaState,
    pub report: StagedRewardReport,
    /// Episode ended by the task (push lift).
    pub terminated: bool,
    /// Episode ended by the time limit.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Starts an episode. Deterministic in `seed`.
pub fn reset(arena: &Arena, seed: u64) -> ArenaState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = &arena.config;
    let spawn = arena.spawn;
    let ox = rng.random_range(spawn.min[0]..=spawn.max[0]);
    let oy = rng.random_range(spawn.min[1]..=spawn.max[1]);
    let object = Pose::from_position(Vector3::new(ox, oy, arena.rest_height(cfg.table_z)));

    let goal_xy = match arena.task.objective {
        ObjectiveKind::PickPlace | ObjectiveKind::Push => {
            let g = cfg.goal_region();
            [rng.random_range(g.min[0]..=g.max[0]), rng.random_range(g.min[1]..=g.max[1])]
        }
        ObjectiveKind::TrashCan | ObjectiveKind::Shelf => cfg.right_bin_center,
    };
    let goal_z = match arena.task.objective {
        ObjectiveKind::Shelf => cfg.table_z + cfg.shelf_height,
        _ => cfg.table_z,
    };
    ArenaState {
        joints: arena.robot.home_pose,
        joint_vel: [0.0; NUM_JOINTS],
        gripper_closed: false,
        finger_pos: cfg.finger_open,
        finger_vel: 0.0,
        object_pose: object,
        grasped: false,
        grasp_orientation: UnitQuaternion::identity(),
        goal_pose: Pose::new(Vector3::new(goal_xy[0], goal_xy[1], goal_z), arena.goal_orientation()),
        step_count: 0,
        episode_seed: seed,
    }
}

/// Height of the object's bottom above the table.
pub fn object_lift(arena: &Arena, state: &ArenaState) -> f64 {
    state.object_pose.position.z - arena.object.half_height - arena.config.table_z
}

/// True when the episode has ended: time limit reached, or a push task whose
/// object was lifted above the threshold.
pub fn is_terminal(arena: &Arena, state: &ArenaState) -> bool {
    state.step_count >= arena.horizon() || push_lifted(arena, state)
}

fn push_lifted(arena: &Arena, state: &ArenaState) -> bool {
    arena.task.objective == ObjectiveKind::Push && object_lift(arena, state) > arena.object.lift_threshold_height
}

/// Position and orientation error of a gripper pose with respect to the
/// object's admissible grasp.
pub fn grasp_error(ee: &Pose, object_pose: &Pose, object: &ObjectModel) -> (f64, f64) {
    let pos_err = (ee.position - object_pose.position).norm();
    let approach = approach_axis(ee);
    let fingers = finger_axis(ee);
    let ang_err = match object.grasp_axis {
        GraspAxis::TopDown => angle_between(&approach, &-Vector3::z()),
        GraspAxis::HorizontalEdge => {
            let fingers_vertical = std::f64::consts::FRAC_PI_2 - elevation(&fingers);
            elevation(&approach).max(fingers_vertical)
        }
        GraspAxis::HorizontalBar => elevation(&approach).max(elevation(&fingers)),
    };
    (pos_err, ang_err)
}

/// Whether the gripper, in its current pose, is positioned and oriented to grasp the object.
pub fn grasp_feasible(arena: &Arena, state: &ArenaState) -> bool {
    let ee = arena.robot.end_effector(&state.joints);
    let (p, a) = grasp_error(&ee, &state.object_pose, &arena.object);
    p <= arena.object.grasp_tolerance_pos && a <= arena.object.grasp_tolerance_ang
}

/// Largest fraction of the motion `from -> to` that keeps every arm point out
/// of blocked regions. `from` is assumed collision-free.
fn clamp_motion(arena: &Arena, from: &[f64; NUM_JOINTS], to: &[f64; NUM_JOINTS]) -> [f64; NUM_JOINTS] {
    let lerp = |alpha: f64| {
        let mut q = [0.0; NUM_JOINTS];
        for i in 0..NUM_JOINTS {
            q[i] = from[i] + alpha * (to[i] - from[i]);
        }
        q
    };
    // Bound on how far any arm point can travel over the whole motion.
    let reach: f64 = (0..NUM_JOINTS).map(|i| (to[i] - from[i]).abs() * arena.robot.distal_length(i)).sum();
    let substeps = ((reach / COLLISION_RESOLUTION).ceil() as usize).max(1);
    let mut free = 0.0;
    for k in 1..=substeps {
        let alpha = k as f64 / substeps as f64;
        if arena.in_collision(&lerp(alpha)) {
            let mut blocked = alpha;
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (free + blocked);
                if arena.in_collision(&lerp(mid)) {
                    blocked = mid;
                } else {
                    free = mid;
                }
            }
            return if free == 0.0 { *from } else { lerp(free) };
        }
        free = alpha;
    }
    *to
}

fn support_height(arena: &Arena, state: &ArenaState) -> f64 {
    let cfg = &arena.config;
    if arena.task.objective == ObjectiveKind::Shelf {
        let board = cfg.shelf_board();
        let bottom = state.object_pose.position.z - arena.object.half_height;
        if board.contains_xy(&state.object_pose.position) && bottom >= board.min[2] {
            return board.max[2];
        }
    }
    cfg.table_z
}

/// Advances one control tick.
pub fn step(arena: &Arena, state: &ArenaState, action: &Action) -> Result<StepResult> {
    step_with_mode(arena, state, action, RewardMode::Dense)
}

pub fn step_with_mode(arena: &Arena, state: &ArenaState, action: &Action, mode: RewardMode) -> Result<StepResult> {
    if is_terminal(arena, state) {
        return Err(Error::StepAfterDone);
    }
    if action.target_joints.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidAction("non-finite joint target".into()));
    }
    let robot = &arena.robot;
    let cfg = &arena.config;
    let target = robot.clamp_to_limits(&action.target_joints);
    let mut desired = state.joints;
    for i in 0..NUM_JOINTS {
        let delta = (cfg.kp * (target[i] - state.joints[i])).clamp(-robot.max_joint_speed[i], robot.max_joint_speed[i]);
        desired[i] += delta;
    }
    let desired = robot.clamp_to_limits(&desired);
    let joints = clamp_motion(arena, &state.joints, &desired);

    let mut next = state.clone();
    for i in 0..NUM_JOINTS {
        next.joint_vel[i] = joints[i] - state.joints[i];
    }
    next.joints = joints;
    next.gripper_closed = action.gripper_close;

    let ee = robot.end_effector(&joints);
    if state.grasped && !action.gripper_close {
        next.grasped = false;
        let support = support_height(arena, &next);
        next.object_pose.position.z = arena.rest_height(support);
    } else if state.grasped {
        next.object_pose = Pose::new(ee.position, ee.orientation * state.grasp_orientation);
    } else if action.gripper_close && grasp_feasible(arena, &next) {
        next.grasped = true;
        next.grasp_orientation = ee.orientation.inverse() * state.object_pose.orientation;
        next.object_pose = Pose::new(ee.position, state.object_pose.orientation);
    }

    let finger_target = match (next.gripper_closed, next.grasped) {
        (false, _) => cfg.finger_open,
        (true, true) => arena.object.grip_width,
        (true, false) => 0.0,
    };
    let finger_delta = (finger_target - state.finger_pos).clamp(-cfg.finger_speed, cfg.finger_speed);
    next.finger_pos = state.finger_pos + finger_delta;
    next.finger_vel = finger_delta;
    next.step_count = state.step_count + 1;

    let inputs = compute_reward_inputs(arena, &next);
    let report = compute_reward(arena.task.objective, &inputs, mode);
    let terminated = push_lifted(arena, &next);
    let truncated = next.step_count >= arena.horizon();
    Ok(StepResult { state: next, report, terminated, truncated })
}

/// Stateful wrapper around [`reset`] / [`step`] for one task.
#[derive(Debug, Clone)]
pub struct Env {
    arena: Arena,
    state: ArenaState,
    done: bool,
    mode: RewardMode,
}

impl Env {
    pub fn new(arena: Arena, seed: u64) -> Self {
        let state = reset(&arena, seed);
        Self { arena, state, done: false, mode: RewardMode::Dense }
    }

    pub fn with_reward_mode(mut self, mode: RewardMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn state(&self) -> &ArenaState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn reset(&mut self, seed: u64) -> &ArenaState {
        self.state = reset(&self.arena, seed);
        self.done = false;
        &self.state
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::StepAfterDone);
        }
        let res = step_with_mode(&self.arena, &self.state, action, self.mode)?;
        self.state = res.state.clone();
        self.done = res.done();
        Ok(res)
    }
}
