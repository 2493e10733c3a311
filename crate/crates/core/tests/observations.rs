use armsuite_core::observations::{decompose, observe, ObservationLayout, Segment};
use armsuite_core::sim::{reset, step, Action};
use armsuite_core::task_space::{encode_multihot, enumerate_tasks};
use armsuite_core::{Arena, ObjectiveKind, TaskEnv};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_walk(arena: &Arena, seed: u64, steps: usize) -> Vec<armsuite_core::ArenaState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = reset(arena, seed);
    let mut out = vec![s.clone()];
    for _ in 0..steps {
        let a: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = step(arena, &s, &Action::from_normalized(arena, &a).unwrap()).unwrap();
        if r.done() {
            break;
        }
        s = r.state;
        out.push(s.clone());
    }
    out
}

fn quaternion_blocks() -> Vec<usize> {
    // Offsets of every `[qw, qx, qy, qz]` block.
    vec![24, 35, 42, 49, 56, 63, 70]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn observations_finite_with_unit_quaternions(task_id in 0usize..256, seed in 0u64..1000) {
        let task = armsuite_core::TaskDescriptor::from_id(task_id).unwrap();
        let arena = Arena::new(task).unwrap();
        for s in random_walk(&arena, seed, 40) {
            let o = observe(&arena, &s, true);
            prop_assert_eq!(o.len(), 94);
            prop_assert!(o.iter().all(|x| x.is_finite()));
            for q in quaternion_blocks() {
                let n: f64 = o[q..q + 4].iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((n - 1.0).abs() < 1e-9, "block at {} has norm {}", q, n);
            }
            prop_assert_eq!(&o[78..], &encode_multihot(&task)[..]);
        }
    }
}

#[test]
fn obstacle_segment_independent_of_objective() {
    let seg = ObservationLayout::standard().segment(Segment::Obstacle).range();
    for task in enumerate_tasks().into_iter().filter(|t| t.objective == ObjectiveKind::PickPlace) {
        let base = Arena::new(task).unwrap();
        for s in random_walk(&base, task.id() as u64, 30) {
            let reference = observe(&base, &s, false)[seg.clone()].to_vec();
            for objective in ObjectiveKind::ALL {
                let other = Arena::new(armsuite_core::TaskDescriptor { objective, ..task }).unwrap();
                assert_eq!(observe(&other, &s, false)[seg.clone()], reference[..]);
            }
        }
    }
}

#[test]
fn decomposed_robot_segment_matches_layout() {
    let arena = Arena::new("Gen3_Plate_ObjectWall_Shelf".parse().unwrap()).unwrap();
    let o = observe(&arena, &reset(&arena, 2), true);
    let d = decompose(&o).unwrap();
    let layout = ObservationLayout::standard();
    assert_eq!(d.robot, &o[layout.segment(Segment::Robot).range()]);
    assert_eq!(d.goal, &o[layout.segment(Segment::Goal).range()]);
    assert_eq!(d.goal.len(), 18);
}

#[test]
fn facade_matches_native_engine() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20u64 {
        let task = armsuite_core::TaskDescriptor::from_id(rng.random_range(0..256)).unwrap();
        let include = trial % 2 == 0;
        let mut env = TaskEnv::new(&task.name(), include, trial).unwrap();
        let arena = Arena::new(task).unwrap();
        let mut s = reset(&arena, trial);
        assert_eq!(env.reset(), observe(&arena, &s, include));
        for _ in 0..500 {
            let a: Vec<f64> = (0..8).map(|_| rng.random_range(-1.5..1.5)).collect();
            let t = env.step(&a).unwrap();
            let r = step(&arena, &s, &Action::from_normalized(&arena, &a).unwrap()).unwrap();
            s = r.state.clone();
            assert_eq!(t.observation, observe(&arena, &s, include));
            assert_eq!(t.reward.to_bits(), r.report.reward.to_bits());
            assert_eq!(t.done, r.done());
            if t.done {
                break;
            }
        }
    }
}
