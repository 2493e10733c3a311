//! Symbolic observation vector and its per-axis decomposition.
//!
//! Layout (offset, length):
//!
//! | segment  | offset | len | contents |
//! |----------|--------|-----|----------|
//! | robot    | 0      | 32  | sin q (7), cos q (7), joint velocity (7), end-effector pose (7), finger positions (2), finger velocities (2) |
//! | object   | 32     | 14  | pose (7), pose in the end-effector frame (7) |
//! | obstacle | 46     | 14  | pose (7), pose in the end-effector frame (7) |
//! | goal     | 60     | 18  | pose (7), pose in the end-effector frame (7), goal minus object position (3), stage progress (1) |
//! | task     | 78     | 16  | multi-hot task descriptor |
//!
//! Poses are `[x, y, z, qw, qx, qy, qz]`.

use serde::{Deserialize, Serialize};

use crate::arena::Arena;
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::rewards::{compute_reward, compute_reward_inputs, RewardMode};
use crate::sim::ArenaState;
use crate::task_space::{encode_multihot, MULTIHOT_LEN};

pub const ROBOT_LEN: usize = 32;
pub const OBJECT_LEN: usize = 14;
pub const OBSTACLE_LEN: usize = 14;
pub const GOAL_LEN: usize = 18;
/// Observation length without the task descriptor.
pub const STATE_LEN: usize = ROBOT_LEN + OBJECT_LEN + OBSTACLE_LEN + GOAL_LEN;
/// Observation length with the task descriptor.
pub const OBS_LEN: usize = STATE_LEN + MULTIHOT_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Robot,
    Object,
    Obstacle,
    Goal,
    Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub name: Segment,
    pub offset: usize,
    pub len: usize,
}

impl SegmentSpec {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationLayout {
    pub segments: Vec<SegmentSpec>,
    pub total_len: usize,
}

impl ObservationLayout {
    pub fn standard() -> Self {
        let specs = [
            (Segment::Robot, ROBOT_LEN),
            (Segment::Object, OBJECT_LEN),
            (Segment::Obstacle, OBSTACLE_LEN),
            (Segment::Goal, GOAL_LEN),
            (Segment::Task, MULTIHOT_LEN),
        ];
        let mut offset = 0;
        let segments = specs
            .iter()
            .map(|&(name, len)| {
                let s = SegmentSpec { name, offset, len };
                offset += len;
                s
            })
            .collect();
        Self { segments, total_len: offset }
    }

    pub fn segment(&self, name: Segment) -> SegmentSpec {
        *self.segments.iter().find(|s| s.name == name).expect("all segments present")
    }

    /// JSON description of the layout for external clients.
    pub fn to_json_schema(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds the observation for `state`. Length is [`OBS_LEN`] with the
/// descriptor and [`STATE_LEN`] without.
pub fn observe(arena: &Arena, state: &ArenaState, include_descriptor: bool) -> Vec<f64> {
    let mut obs = Vec::with_capacity(OBS_LEN);
    let ee = arena.robot.end_effector(&state.joints);

    obs.extend(state.joints.iter().map(|q| q.sin()));
    obs.extend(state.joints.iter().map(|q| q.cos()));
    obs.extend_from_slice(&state.joint_vel);
    obs.extend_from_slice(&ee.to_array());
    obs.extend_from_slice(&[state.finger_pos, -state.finger_pos, state.finger_vel, -state.finger_vel]);

    push_pose_pair(&mut obs, &state.object_pose, &ee);
    push_pose_pair(&mut obs, &arena.obstacle_anchor, &ee);

    push_pose_pair(&mut obs, &state.goal_pose, &ee);
    let d = state.goal_pose.position - state.object_pose.position;
    obs.extend_from_slice(&[d.x, d.y, d.z]);
    let report = compute_reward(arena.task.objective, &compute_reward_inputs(arena, state), RewardMode::Dense);
    obs.push(report.stage_progress());

    if include_descriptor {
        obs.extend_from_slice(&encode_multihot(&arena.task));
    }
    obs
}

fn push_pose_pair(obs: &mut Vec<f64>, pose: &Pose, ee: &Pose) {
    obs.extend_from_slice(&pose.to_array());
    obs.extend_from_slice(&pose.relative_to(ee).to_array());
}

/// Per-axis views of an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposed<'a> {
    pub robot: &'a [f64],
    pub object: &'a [f64],
    pub obstacle: &'a [f64],
    pub goal: &'a [f64],
    /// Present only for full-length observations.
    pub task: Option<&'a [f64]>,
}

pub fn decompose(obs: &[f64]) -> Result<Decomposed<'_>> {
    if obs.len() != OBS_LEN && obs.len() != STATE_LEN {
        return Err(Error::ObservationLength { got: obs.len(), expected: OBS_LEN });
    }
    let (robot, rest) = obs.split_at(ROBOT_LEN);
    let (object, rest) = rest.split_at(OBJECT_LEN);
    let (obstacle, rest) = rest.split_at(OBSTACLE_LEN);
    let (goal, rest) = rest.split_at(GOAL_LEN);
    let task = if rest.is_empty() { None } else { Some(rest) };
    Ok(Decomposed { robot, object, obstacle, goal, task })
}
