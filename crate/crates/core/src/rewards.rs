//! Staged dense rewards for the four objectives.
//!
//! Each objective defines an ordered list of stages; every stage has a value
//! in `[0, 1]` and the reward is the maximum over stages. Only the success
//! stage can reach 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arena::Arena;
use crate::geometry::angle_between;
use crate::robot::approach_axis;
use crate::sim::ArenaState;
use crate::task_space::ObjectiveKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Reach,
    Grasp,
    Lift,
    Align,
    Approach,
    Lower,
    Drop,
    Success,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Reach => "reach",
            Stage::Grasp => "grasp",
            Stage::Lift => "lift",
            Stage::Align => "align",
            Stage::Approach => "approach",
            Stage::Lower => "lower",
            Stage::Drop => "drop",
            Stage::Success => "success",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Stage order per objective.
pub fn stages(objective: ObjectiveKind) -> &'static [Stage] {
    use Stage::*;
    match objective {
        ObjectiveKind::PickPlace => &[Reach, Grasp, Lift, Approach, Lower, Success],
        ObjectiveKind::Push => &[Reach, Grasp, Approach, Success],
        ObjectiveKind::TrashCan => &[Reach, Grasp, Lift, Approach, Drop, Success],
        ObjectiveKind::Shelf => &[Reach, Grasp, Lift, Align, Approach, Success],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Maximum over stage values.
    #[default]
    Dense,
    /// Success indicator only.
    Sparse,
}

/// Geometric quantities and predicates the reward formulas read.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardInputs {
    /// Gripper to object grasp point.
    pub target_dist: f64,
    pub grasping: bool,
    /// Object bottom to the lift target height.
    pub z_dist_target_height: f64,
    /// Horizontal object-to-goal distance.
    pub goal_xy_dist: f64,
    /// Object bottom above the bin floor.
    pub z_dist_bin: f64,
    /// Object-to-goal distance along y (into the shelf).
    pub y_dist_shelf: f64,
    /// Angle between the gripper approach axis and world +y.
    pub y_axis_orientation: f64,
    pub object_above_bin: bool,
    pub object_in_bin: bool,
    pub object_in_trash_can: bool,
    pub object_above_trash_can: bool,
    pub gripper_in_trash_can: bool,
    pub object_in_front_of_shelf: bool,
    pub object_in_shelf: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedRewardReport {
    /// Stage values in stage order.
    pub stage_values: Vec<(Stage, f64)>,
    pub reward: f64,
    pub success: bool,
    /// Stage attaining the maximum; ties go to the later stage.
    pub active_stage: Stage,
}

impl StagedRewardReport {
    fn from_stages(stage_values: Vec<(Stage, f64)>) -> Self {
        let mut reward = f64::NEG_INFINITY;
        let mut active = stage_values[0].0;
        for &(stage, v) in &stage_values {
            if v >= reward {
                reward = v;
                active = stage;
            }
        }
        let success = stage_values.iter().any(|&(s, v)| s == Stage::Success && v == 1.0);
        Self { stage_values, reward, success, active_stage: active }
    }

    pub fn value(&self, stage: Stage) -> Option<f64> {
        self.stage_values.iter().find(|(s, _)| *s == stage).map(|(_, v)| *v)
    }

    /// Position of the active stage within the objective's stage list, scaled to `[0, 1]`.
    pub fn stage_progress(&self) -> f64 {
        let n = self.stage_values.len();
        let pos = self.stage_values.iter().position(|(s, _)| *s == self.active_stage).unwrap_or(0);
        pos as f64 / (n - 1) as f64
    }

    fn sparse(mut self) -> Self {
        self.reward = if self.success { 1.0 } else { 0.0 };
        self
    }
}

fn reach(d: f64) -> f64 {
    0.2 * (1.0 - (10.0 * d).tanh())
}

fn grasp(grasping: bool) -> f64 {
    if grasping {
        0.3
    } else {
        0.0
    }
}

fn lift(grasp_value: f64, z: f64) -> f64 {
    if grasp_value > 0.0 {
        0.3 + 0.2 * (1.0 - (5.0 * z).tanh())
    } else {
        0.0
    }
}

pub fn reward_pick_place(i: &RewardInputs) -> StagedRewardReport {
    let r_reach = reach(i.target_dist);
    let r_grasp = grasp(i.grasping);
    let r_lift = lift(r_grasp, i.z_dist_target_height);
    let xy = 0.2 * (1.0 - (2.0 * i.goal_xy_dist).tanh());
    let r_approach = if r_lift > 0.45 && !i.object_above_bin {
        r_lift + xy
    } else if r_lift > 0.45 {
        0.5 + xy
    } else {
        0.0
    };
    let r_lower = if i.object_above_bin && r_grasp > 0.0 {
        0.7 + 0.2 * (1.0 - (5.0 * i.z_dist_bin).tanh())
    } else {
        0.0
    };
    let r_success = if i.object_in_bin && r_reach > 0.07 { 1.0 } else { 0.0 };
    StagedRewardReport::from_stages(vec![
        (Stage::Reach, r_reach),
        (Stage::Grasp, r_grasp),
        (Stage::Lift, r_lift),
        (Stage::Approach, r_approach),
        (Stage::Lower, r_lower),
        (Stage::Success, r_success),
    ])
}

pub fn reward_push(i: &RewardInputs) -> StagedRewardReport {
    let r_reach = reach(i.target_dist);
    let r_grasp = grasp(i.grasping);
    let r_approach = if r_grasp > 0.0 {
        0.3 + 0.4 * (1.0 - (5.0 * i.goal_xy_dist).tanh())
    } else {
        0.0
    };
    let r_success = if i.goal_xy_dist <= 0.03 { 1.0 } else { 0.0 };
    StagedRewardReport::from_stages(vec![
        (Stage::Reach, r_reach),
        (Stage::Grasp, r_grasp),
        (Stage::Approach, r_approach),
        (Stage::Success, r_success),
    ])
}

pub fn reward_trash_can(i: &RewardInputs) -> StagedRewardReport {
    let r_reach = reach(i.target_dist);
    let r_grasp = if i.grasping && !i.object_in_trash_can { 0.3 } else { 0.0 };
    let r_lift = if r_grasp > 0.0 && !i.object_in_trash_can {
        0.3 + 0.2 * (1.0 - (5.0 * i.z_dist_target_height).tanh())
    } else {
        0.0
    };
    let xy = 0.2 * (1.0 - (2.0 * i.goal_xy_dist).tanh());
    let r_approach = if r_lift > 0.45 && !(i.object_in_trash_can || i.object_above_trash_can) {
        r_lift + xy
    } else if r_lift > 0.45 && i.object_above_trash_can {
        0.5 + xy
    } else {
        0.0
    };
    let r_drop = if i.object_above_trash_can && r_grasp == 0.0 { 0.95 } else { 0.0 };
    let r_success = if i.object_in_trash_can && !i.gripper_in_trash_can { 1.0 } else { 0.0 };
    StagedRewardReport::from_stages(vec![
        (Stage::Reach, r_reach),
        (Stage::Grasp, r_grasp),
        (Stage::Lift, r_lift),
        (Stage::Approach, r_approach),
        (Stage::Drop, r_drop),
        (Stage::Success, r_success),
    ])
}

pub fn reward_shelf(i: &RewardInputs) -> StagedRewardReport {
    let r_reach = reach(i.target_dist);
    let r_grasp = grasp(i.grasping);
    let r_lift = lift(r_grasp, i.z_dist_target_height);
    let r_align = if i.object_in_front_of_shelf {
        0.5 + 0.3 * (1.0 - i.y_axis_orientation.tanh())
    } else {
        0.0
    };
    let r_approach = if i.object_in_front_of_shelf && r_align > 0.6 {
        0.8 + 0.1 * (1.0 - (5.0 * i.y_dist_shelf).tanh())
    } else {
        0.0
    };
    let r_success = if i.object_in_shelf { 1.0 } else { 0.0 };
    StagedRewardReport::from_stages(vec![
        (Stage::Reach, r_reach),
        (Stage::Grasp, r_grasp),
        (Stage::Lift, r_lift),
        (Stage::Align, r_align),
        (Stage::Approach, r_approach),
        (Stage::Success, r_success),
    ])
}

pub fn compute_reward(objective: ObjectiveKind, inputs: &RewardInputs, mode: RewardMode) -> StagedRewardReport {
    let report = match objective {
        ObjectiveKind::PickPlace => reward_pick_place(inputs),
        ObjectiveKind::Push => reward_push(inputs),
        ObjectiveKind::TrashCan => reward_trash_can(inputs),
        ObjectiveKind::Shelf => reward_shelf(inputs),
    };
    match mode {
        RewardMode::Dense => report,
        RewardMode::Sparse => report.sparse(),
    }
}

/// Derives the reward quantities from simulator state and arena geometry.
pub fn compute_reward_inputs(arena: &Arena, state: &ArenaState) -> RewardInputs {
    let cfg = &arena.config;
    let ee = arena.robot.end_effector(&state.joints);
    let obj = state.object_pose.position;
    let goal = state.goal_pose.position;
    let bottom = obj.z - arena.object.half_height;
    let mut bottom_point = obj;
    bottom_point.z = bottom;

    let bin = cfg.right_bin();
    let can = cfg.trash_can();
    let over_bin = bin.contains_xy(&obj);
    let over_can = can.contains_xy(&obj);

    RewardInputs {
        target_dist: (ee.position - obj).norm(),
        grasping: state.grasped,
        z_dist_target_height: (cfg.table_z + arena.config.lift_target(arena.task.objective) - bottom).abs(),
        goal_xy_dist: (obj.xy() - goal.xy()).norm(),
        z_dist_bin: (bottom - cfg.table_z).max(0.0),
        y_dist_shelf: (obj.y - goal.y).abs(),
        y_axis_orientation: angle_between(&approach_axis(&ee), &nalgebra::Vector3::y()),
        object_above_bin: over_bin && bottom > bin.max[2],
        object_in_bin: over_bin && bottom <= bin.max[2],
        object_in_trash_can: over_can && bottom < can.max[2],
        object_above_trash_can: over_can && bottom >= can.max[2],
        gripper_in_trash_can: can.contains_xy(&ee.position) && ee.position.z < can.max[2],
        object_in_front_of_shelf: within(&cfg.shelf_front(), &bottom_point),
        object_in_shelf: within(&cfg.shelf_inside(), &bottom_point),
    }
}

fn within(b: &crate::geometry::Aabb, p: &nalgebra::Vector3<f64>) -> bool {
    (0..3).all(|i| p[i] >= b.min[i] && p[i] <= b.max[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn far() -> RewardInputs {
        RewardInputs {
            target_dist: 10.0,
            z_dist_target_height: 10.0,
            goal_xy_dist: 10.0,
            z_dist_bin: 10.0,
            y_dist_shelf: 10.0,
            y_axis_orientation: 3.0,
            ..Default::default()
        }
    }

    #[test]
    fn pick_place_examples() {
        let r = reward_pick_place(&RewardInputs { target_dist: 0.0, ..far() });
        assert_relative_eq!(r.reward, 0.2);
        let r = reward_pick_place(&RewardInputs { grasping: true, ..far() });
        assert_relative_eq!(r.reward, 0.3, epsilon = 1e-12);
        let r = reward_pick_place(&RewardInputs { target_dist: 0.1, ..far() });
        assert_relative_eq!(r.reward, 0.2 * (1.0 - 1.0f64.tanh()), epsilon = 1e-15);
        assert_relative_eq!(r.reward, 0.0476812, epsilon = 1e-7);
    }

    #[test]
    fn pick_place_success_needs_gripper_near() {
        let base = RewardInputs { object_in_bin: true, ..far() };
        assert!(!reward_pick_place(&base).success);
        let near = RewardInputs { target_dist: 0.05, ..base };
        let r = reward_pick_place(&near);
        assert!(r.success);
        assert_eq!(r.reward, 1.0);
        assert_eq!(r.active_stage, Stage::Success);
    }

    #[test]
    fn push_examples() {
        let r = reward_push(&RewardInputs { goal_xy_dist: 0.03, ..far() });
        assert!(r.success);
        assert_eq!(r.reward, 1.0);
        let r = reward_push(&RewardInputs { grasping: true, goal_xy_dist: 0.0, ..far() });
        assert_relative_eq!(r.value(Stage::Approach).unwrap(), 0.7);
        assert_eq!(r.reward, 1.0);
        let i = RewardInputs { target_dist: 0.05, ..far() };
        assert_eq!(reward_push(&i).reward, reach(0.05));
    }

    #[test]
    fn trash_can_examples() {
        let r = reward_trash_can(&RewardInputs { object_above_trash_can: true, ..far() });
        assert_eq!(r.reward, 0.95);
        assert_eq!(r.active_stage, Stage::Drop);
        let r = reward_trash_can(&RewardInputs { object_in_trash_can: true, gripper_in_trash_can: true, ..far() });
        assert!(!r.success);
        let r = reward_trash_can(&RewardInputs { object_in_trash_can: true, ..far() });
        assert_eq!(r.reward, 1.0);
    }

    #[test]
    fn shelf_examples() {
        assert_eq!(reward_shelf(&RewardInputs { object_in_shelf: true, ..far() }).reward, 1.0);
        let front = RewardInputs { object_in_front_of_shelf: true, y_axis_orientation: 0.0, ..far() };
        assert_relative_eq!(reward_shelf(&front).value(Stage::Align).unwrap(), 0.8);
        let r = reward_shelf(&RewardInputs { y_dist_shelf: 0.1, ..front });
        assert_relative_eq!(r.value(Stage::Approach).unwrap(), 0.8 + 0.1 * (1.0 - 0.5f64.tanh()), epsilon = 1e-15);
        assert_relative_eq!(r.reward, 0.853788, epsilon = 1e-6);
    }

    #[test]
    fn sparse_mode_reports_only_success() {
        let i = RewardInputs { grasping: true, ..far() };
        assert_eq!(compute_reward(ObjectiveKind::PickPlace, &i, RewardMode::Sparse).reward, 0.0);
        let i = RewardInputs { object_in_shelf: true, ..far() };
        assert_eq!(compute_reward(ObjectiveKind::Shelf, &i, RewardMode::Sparse).reward, 1.0);
    }

    #[test]
    fn stage_lists_match_reports() {
        for obj in ObjectiveKind::ALL {
            let r = compute_reward(obj, &far(), RewardMode::Dense);
            let names: Vec<Stage> = r.stage_values.iter().map(|(s, _)| *s).collect();
            assert_eq!(names, stages(obj));
        }
    }
}
