use std::path::Path;
use std::process::{Command, Output};

use armsuite_agents::train::trainers_for_split;
use armsuite_agents::{AgentKind, PpoConfig};
use armsuite_core::{ArenaConfig, BenchmarkSplit};

fn armsuite(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armsuite"))
        .arg("--output")
        .arg(dir)
        .args(args)
        .env_remove("ARMSUITE_OUTPUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = armsuite(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("experiment.json");
    std::fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

const TINY_PPO: &str = r#""ppo": {"steps_per_task": 150, "total_steps_per_task": 300, "pi_iters": 2, "v_iters": 2, "hidden_single": 8, "hidden_multi": 8}"#;

#[test]
fn restricted_pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{"benchmark": "restricted:pick_place", "train_count": 6, "seeds": [0, 1], "eval_episodes": 1, {TINY_PPO}}}"#),
    );
    ok(&run, &["train", "--config", &cfg]);
    for f in ["config.json", "split.json", "curves.csv", "checkpoints/compositional-s0.json", "models/multi_task-s1.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let split = BenchmarkSplit::from_json(&std::fs::read_to_string(run.join("split.json")).unwrap()).unwrap();
    assert_eq!(split.train.len(), 6);
    assert_eq!(split.test.len(), 63);
    let singles = std::fs::read_dir(run.join("models")).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("single_task")).count();
    assert_eq!(singles, 12);

    let eval = ok(&run, &["eval"]);
    assert_eq!(eval.lines().count(), 6);
    let zs = ok(&run, &["zeroshot"]);
    assert_eq!(zs.lines().count(), 4);
    assert!(!zs.contains("single_task"));
    let zs_json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("zeroshot.json")).unwrap()).unwrap();
    assert!(zs_json.as_array().unwrap().iter().all(|r| r["per_task"].as_array().unwrap().len() == 63));
    assert!(run.join("trajectories/zeroshot-compositional-s1.csv").exists());

    ok(&run, &["analyze", "r2"]);
    ok(&run, &["analyze", "swap", "--max-tasks", "1"]);
    ok(&run, &["analyze", "breakdown"]);
    let ms = ok(&run, &["analyze", "maxsuccess"]);
    assert!(ms.contains("maxsuccess"));
    for f in ["r2", "swap", "breakdown", "maxsuccess"] {
        assert!(run.join(format!("analysis/{f}.json")).exists());
    }

    let text = ok(&run, &["report"]);
    assert!(text.contains("| compositional |") && text.contains(" ± "));
    let first = (std::fs::read(run.join("report.md")).unwrap(), std::fs::read(run.join("curves.svg")).unwrap());
    ok(&run, &["report"]);
    let second = (std::fs::read(run.join("report.md")).unwrap(), std::fs::read(run.join("curves.svg")).unwrap());
    assert_eq!(first, second);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |dir: &Path| {
        ok(
            dir,
            &[
                "train", "--benchmark", "smaller_scale:IIWA", "--train-count", "2", "--agent", "multi_task", "--agent", "compositional", "--seed", "3",
                "--steps-per-task", "150", "--total-steps", "300", "--deterministic", "--config",
                &write_config(tmp.path(), &format!("{{{TINY_PPO}}}")),
            ],
        )
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    args(&a);
    args(&b);
    let curves = std::fs::read(a.join("curves.csv")).unwrap();
    assert_eq!(curves, std::fs::read(b.join("curves.csv")).unwrap());
    assert_eq!(String::from_utf8(curves).unwrap().lines().count(), 1 + 2 * 2);
}

#[test]
fn training_resumes_from_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{"benchmark": "smaller_scale:Shelf", "train_count": 2, "agents": ["compositional"], "seeds": [4], "deterministic": true, {TINY_PPO}}}"#),
    );
    let full = tmp.path().join("full");
    ok(&full, &["train", "--config", &cfg]);

    // Stop a second run after one update by writing its checkpoint directly.
    let part = tmp.path().join("part");
    std::fs::create_dir_all(part.join("checkpoints")).unwrap();
    let resolved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(full.join("config.json")).unwrap()).unwrap();
    let ppo: PpoConfig = serde_json::from_value(resolved["ppo"].clone()).unwrap();
    let arena: ArenaConfig = serde_json::from_value(resolved["arena"].clone()).unwrap();
    let split = BenchmarkSplit::from_json(&std::fs::read_to_string(full.join("split.json")).unwrap()).unwrap();
    let mut t = trainers_for_split(AgentKind::Compositional, &split, &ppo, &arena, 4).unwrap().remove(0);
    t.deterministic = true;
    t.update().unwrap();
    t.save(&part.join("checkpoints/compositional-s4.json")).unwrap();

    let out = armsuite(&part, &["train", "--config", &cfg]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("resuming at update 1"));
    assert_eq!(std::fs::read(full.join("curves.csv")).unwrap(), std::fs::read(part.join("curves.csv")).unwrap());
    assert_eq!(std::fs::read(full.join("models/compositional-s4.json")).unwrap(), std::fs::read(part.join("models/compositional-s4.json")).unwrap());

    // A finished run is not retrained.
    let again = armsuite(&part, &["train", "--config", &cfg]);
    assert!(again.status.success());
    assert!(!String::from_utf8_lossy(&again.stderr).contains("update 1/2"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = armsuite(tmp.path(), &["train", "--benchmark", "restricted:Banana"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["IIWA", "Jaco", "Gen3", "Panda", "Box", "HollowBox", "Plate", "Dumbbell", "None", "ObjectDoor", "GoalWall", "ObjectWall", "PickPlace", "Push", "TrashCan", "Shelf"] {
        assert!(err.contains(name), "message lacks {name}: {err}");
    }
    assert_eq!(armsuite(tmp.path(), &["train", "--agent", "random"]).status.code(), Some(2));
    assert_eq!(armsuite(tmp.path(), &["train", "--config", "/nonexistent/x.json"]).status.code(), Some(4));
    let bad = write_config(tmp.path(), r#"{"benchmark": "full", "ppo": {"clip_ratio": 3.0}}"#);
    assert_eq!(armsuite(tmp.path(), &["train", "--config", &bad]).status.code(), Some(2));

    let empty = tmp.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    for cmd in [&["report"][..], &["eval"], &["zeroshot"], &["analyze", "maxsuccess"]] {
        assert_eq!(armsuite(&empty, cmd).status.code(), Some(5), "{cmd:?}");
    }

    let file = tmp.path().join("not_a_dir");
    std::fs::write(&file, "x").unwrap();
    let cfg = write_config(tmp.path(), &format!(r#"{{"benchmark": "smaller_scale:IIWA", "train_count": 1, "agents": ["multi_task"], "seeds": [0], {TINY_PPO}}}"#));
    assert_eq!(armsuite(&file, &["train", "--config", &cfg]).status.code(), Some(4));

    let diverge = write_config(
        tmp.path(),
        r#"{"benchmark": "smaller_scale:IIWA", "train_count": 1, "agents": ["multi_task"], "seeds": [0],
            "ppo": {"steps_per_task": 100, "total_steps_per_task": 200, "pi_iters": 2, "v_iters": 50, "hidden_multi": 8, "v_lr": 1e300}}"#,
    );
    let out = armsuite(&tmp.path().join("div"), &["train", "--config", &diverge]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn changed_config_is_refused_in_existing_run() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let base = format!(r#""benchmark": "smaller_scale:Jaco", "train_count": 1, "agents": ["multi_task"], "seeds": [0], {TINY_PPO}"#);
    ok(&run, &["train", "--config", &write_config(tmp.path(), &format!("{{{base}}}"))]);
    let changed = write_config(tmp.path(), &format!(r#"{{{base}, "split_seed": 9}}"#));
    assert_eq!(armsuite(&run, &["train", "--config", &changed]).status.code(), Some(2));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_armsuite"))
        .args(["make-split", "--benchmark", "smaller_scale:Plate", "--train-count", "8"])
        .env("ARMSUITE_OUTPUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let split = BenchmarkSplit::from_json(&std::fs::read_to_string(tmp.path().join("split.json")).unwrap()).unwrap();
    assert_eq!(split.train.len(), 8);
    assert_eq!(split.test.len(), 56);
}

#[test]
fn list_tasks_filters_by_element() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(ok(tmp.path(), &["list-tasks"]).lines().count(), 256);
    let some = ok(tmp.path(), &["list-tasks", "--element", "Gen3", "--element", "trash_can"]);
    assert_eq!(some.lines().count(), 16);
    assert!(some.lines().all(|l| l.starts_with("Gen3_") && l.ends_with("_TrashCan")));
}
