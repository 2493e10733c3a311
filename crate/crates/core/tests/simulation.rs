use armsuite_core::rewards::compute_reward_inputs;
use armsuite_core::sim::{reset, step, Action};
use armsuite_core::task_space::enumerate_tasks;
use armsuite_core::{Arena, ObjectKind, ObjectiveKind, ObstacleKind, RobotKind, Stage, TaskDescriptor};

fn arena(robot: RobotKind, obj: ObjectKind, obs: ObstacleKind, goal: ObjectiveKind) -> Arena {
    Arena::new(TaskDescriptor::new(robot, obj, obs, goal)).unwrap()
}

#[test]
fn spawn_and_goal_stay_in_regions() {
    for task in enumerate_tasks().into_iter().filter(|t| t.robot == RobotKind::Iiwa) {
        let a = Arena::new(task).unwrap();
        let goal_region = a.config.goal_region();
        for seed in 0..300 {
            let s = reset(&a, seed);
            let p = s.object_pose.position;
            assert!(a.spawn.contains_xy(&p), "{task} seed {seed}: {p:?}");
            assert!(!a.obstacle.blocked_regions.iter().any(|b| b.contains(&p)));
            if matches!(task.objective, ObjectiveKind::PickPlace | ObjectiveKind::Push) {
                assert!(goal_region.contains_xy(&s.goal_pose.position));
            }
            assert_eq!(s.step_count, 0);
            assert!(!s.grasped);
        }
    }
}

#[test]
fn spawn_covers_region() {
    let a = arena(RobotKind::Gen3, ObjectKind::Box, ObstacleKind::None, ObjectiveKind::PickPlace);
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for seed in 0..2000 {
        let p = reset(&a, seed).object_pose.position;
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    for i in 0..2 {
        let span = a.spawn.max[i] - a.spawn.min[i];
        assert!(lo[i] - a.spawn.min[i] < 0.02 * span);
        assert!(a.spawn.max[i] - hi[i] < 0.02 * span);
    }
}

#[test]
fn grasp_carry_release() {
    let a = arena(RobotKind::Iiwa, ObjectKind::Box, ObstacleKind::None, ObjectiveKind::PickPlace);
    let mut s = reset(&a, 0);
    s.object_pose.position = a.robot.end_effector(&s.joints).position;
    let r = step(&a, &s, &Action::hold(&s, true)).unwrap();
    assert!(r.state.grasped);
    assert_eq!(r.report.value(Stage::Grasp), Some(0.3));
    let mut s = r.state;

    let mut target = s.joints;
    target[0] += 0.5;
    target[1] -= 0.2;
    for _ in 0..20 {
        let r = step(&a, &s, &Action { target_joints: target, gripper_close: true }).unwrap();
        s = r.state;
        let ee = a.robot.end_effector(&s.joints);
        assert!(s.grasped);
        assert_eq!(s.object_pose.position, ee.position);
    }
    let lifted = s.object_pose.position;
    let r = step(&a, &s, &Action::hold(&s, false)).unwrap();
    assert!(!r.state.grasped);
    let p = r.state.object_pose.position;
    assert_eq!((p.x, p.y), (lifted.x, lifted.y));
    assert_eq!(p.z, a.rest_height(a.config.table_z));
}

#[test]
fn closing_away_from_object_does_not_grasp() {
    let a = arena(RobotKind::Panda, ObjectKind::Box, ObstacleKind::None, ObjectiveKind::PickPlace);
    let mut s = reset(&a, 3);
    s.object_pose.position = a.robot.end_effector(&s.joints).position;
    s.object_pose.position.x += 0.1;
    let r = step(&a, &s, &Action::hold(&s, true)).unwrap();
    assert!(!r.state.grasped);
}

#[test]
fn bin_predicates_follow_object_height() {
    let a = arena(RobotKind::Iiwa, ObjectKind::Box, ObstacleKind::None, ObjectiveKind::PickPlace);
    let mut s = reset(&a, 1);
    let bin = a.config.right_bin().center();
    s.object_pose.position = nalgebra::Vector3::new(bin.x, bin.y, a.rest_height(a.config.table_z));
    let i = compute_reward_inputs(&a, &s);
    assert!(i.object_in_bin && !i.object_above_bin);
    // The gripper is still above the left bin, so this is not a success.
    let r = step(&a, &s, &Action::hold(&s, false)).unwrap();
    assert!(!r.report.success);
    s.object_pose.position.z += 0.2;
    let i = compute_reward_inputs(&a, &s);
    assert!(!i.object_in_bin && i.object_above_bin);
}

#[test]
fn push_terminates_when_object_lifted() {
    let mut cfg = armsuite_core::ArenaConfig::default();
    cfg.home_ee[2] = 0.03;
    let task = TaskDescriptor::new(RobotKind::Jaco, ObjectKind::Box, ObstacleKind::None, ObjectiveKind::Push);
    let a = Arena::with_config(cfg, task).unwrap();
    let mut s = reset(&a, 5);
    s.object_pose.position = a.robot.end_effector(&s.joints).position;
    let r = step(&a, &s, &Action::hold(&s, true)).unwrap();
    assert!(r.state.grasped && !r.terminated);
    let mut s = r.state;
    // Raise the shoulder until the object clears the threshold.
    let mut target = s.joints;
    target[1] -= 0.6;
    let mut steps = 0;
    loop {
        let r = step(&a, &s, &Action { target_joints: target, gripper_close: true }).unwrap();
        steps += 1;
        s = r.state;
        if r.terminated {
            assert!(armsuite_core::sim::object_lift(&a, &s) > a.object.lift_threshold_height);
            break;
        }
        assert!(steps < 50);
    }
    assert!(step(&a, &s, &Action::hold(&s, true)).is_err());
}
