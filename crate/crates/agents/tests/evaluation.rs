use armsuite_agents::analysis::{descriptor_swap_ranking, max_success_per_task};
use armsuite_agents::eval::{check_zero_shot, evaluate, evaluate_cases, zero_shot, EvalResult, Trajectory};
use armsuite_agents::persist::{append_curves, curves_svg, read_curves, read_json, read_trajectories, write_json, write_trajectories};
use armsuite_agents::policy::{ActorCritic, AgentKind};
use armsuite_agents::{AgentError, CurveRecord, TrainedModel};
use armsuite_core::task_space::{enumerate_tasks, make_split};
use armsuite_core::{ArenaConfig, SplitKind, TaskDescriptor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(kind: AgentKind, seed: u64) -> ActorCritic {
    ActorCritic::new(kind, 8, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn trained(kind: AgentKind, split_id: Option<String>) -> TrainedModel {
    TrainedModel { kind, model: model(kind, 1), tasks: vec![], split_id, seed: 1, curves: vec![] }
}

fn tasks() -> Vec<TaskDescriptor> {
    ["IIWA_Box_None_Push", "Jaco_Plate_GoalWall_Shelf", "Panda_Dumbbell_ObjectDoor_TrashCan"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

#[test]
fn evaluation_is_deterministic_and_full_length() {
    let m = model(AgentKind::MultiTask, 3);
    let a = evaluate(&m, &tasks(), 2, 11).unwrap();
    let b = evaluate(&m, &tasks(), 2, 11).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.per_task.len(), 3);
    assert!(a.per_task.iter().all(|t| t.episodes == 2 && t.horizon == 500));
    assert!(evaluate(&m, &tasks(), 0, 11).is_err());
}

#[test]
fn trajectories_round_trip_and_metrics_recompute_exactly() {
    let m = model(AgentKind::Compositional, 4);
    let cases: Vec<_> = tasks().into_iter().map(|t| (t, t)).collect();
    let trajs: Vec<Trajectory> = evaluate_cases(&m, &cases, 2, 8, &ArenaConfig::default()).unwrap().into_iter().flatten().collect();
    let original = EvalResult::from_trajectories(m.kind, "c", 8, 500, &trajs);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    write_trajectories(&csv, &trajs).unwrap();
    let back = read_trajectories(&csv).unwrap();
    assert_eq!(back, trajs);
    assert_eq!(EvalResult::from_trajectories(m.kind, "c", 8, 500, &back), original);

    let json = dir.path().join("result.json");
    write_json(&json, &original).unwrap();
    let r: EvalResult = read_json(&json).unwrap();
    assert_eq!(r, original);
}

#[test]
fn success_needs_a_full_reward_step() {
    let t: TaskDescriptor = "Gen3_Box_None_PickPlace".parse().unwrap();
    let hit = Trajectory { task: t, episode: 0, seed: 0, rewards: vec![0.2, 1.0, 0.4] };
    let miss = Trajectory { task: t, episode: 1, seed: 1, rewards: vec![0.9999; 3] };
    let r = EvalResult::from_trajectories(AgentKind::SingleTask, "x", 0, 3, &[hit, miss]);
    assert_eq!(r.s_bar, 0.5);
    assert!((r.r_bar - (1.6 + 3.0 * 0.9999) / 2.0).abs() < 1e-12);
}

#[test]
fn zero_shot_rejections() {
    let split = make_split(SplitKind::Uniform, None, Some(200), 0).unwrap();
    let other = make_split(SplitKind::Uniform, None, Some(200), 1).unwrap();
    assert!(matches!(check_zero_shot(&trained(AgentKind::SingleTask, Some(split.id())), &split), Err(AgentError::SingleTaskZeroShot)));
    assert!(matches!(
        check_zero_shot(&trained(AgentKind::MultiTask, Some(other.id())), &split),
        Err(AgentError::ProvenanceMismatch { .. })
    ));
    assert!(matches!(check_zero_shot(&trained(AgentKind::Compositional, None), &split), Err(AgentError::ProvenanceMismatch { .. })));
    check_zero_shot(&trained(AgentKind::Compositional, Some(split.id())), &split).unwrap();
}

#[test]
fn zero_shot_runs_on_test_tasks_only() {
    let split = make_split(SplitKind::Uniform, None, Some(254), 2).unwrap();
    let r = zero_shot(&trained(AgentKind::Compositional, Some(split.id())), &split, 1, 0).unwrap();
    let got: Vec<_> = r.per_task.iter().map(|t| t.task).collect();
    assert_eq!(got, split.test);
}

#[test]
fn swap_ranking_covers_every_axis() {
    let m = model(AgentKind::MultiTask, 6);
    let curves = descriptor_swap_ranking(&m, &tasks()[..1], 1, 0).unwrap();
    assert_eq!(curves.len(), 4);
    for c in &curves {
        assert_eq!(c.success_rate.len(), 4);
        assert_eq!(c.mean_return.len(), 4);
    }
}

#[test]
fn max_success_reports_missing_tasks() {
    let all = enumerate_tasks();
    let m = model(AgentKind::MultiTask, 7);
    let r = evaluate(&m, &tasks(), 1, 0).unwrap();
    let ms = max_success_per_task(&[r], &all);
    assert_eq!(ms.per_task.len(), 3);
    assert_eq!(ms.missing.len(), 253);
}

#[test]
fn curves_append_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    let rec = |agent, steps, seed| CurveRecord { agent, run_id: "u".into(), steps, mean_return: steps as f64 / 100.0, success_rate: 0.1, seed };
    let first = vec![rec(AgentKind::MultiTask, 16000, 0), rec(AgentKind::MultiTask, 32000, 0)];
    let second = vec![rec(AgentKind::Compositional, 16000, 1)];
    append_curves(&path, &first).unwrap();
    append_curves(&path, &second).unwrap();
    let all = read_curves(&path).unwrap();
    assert_eq!(all, [first, second].concat());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.matches("agent").count(), 1);

    let svg = curves_svg(&all);
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 4);
}
