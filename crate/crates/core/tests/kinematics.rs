use armsuite_core::arena::ArenaConfig;
use armsuite_core::robot::{RobotModel, NUM_JOINTS};
use armsuite_core::RobotKind;
use proptest::prelude::*;

type Mat = [[f64; 3]; 3];

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

// Rodrigues: R = I + sin(t) K + (1 - cos(t)) K^2 for unit axis k.
fn rodrigues(k: [f64; 3], t: f64) -> Mat {
    let kx = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
    let k2 = matmul(&kx, &kx);
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            r[i][j] = id + t.sin() * kx[i][j] + (1.0 - t.cos()) * k2[i][j];
        }
    }
    r
}

fn oracle_fk(links: &[f64; 7], base: [f64; 3], q: &[f64; 7]) -> ([f64; 3], Mat) {
    let axes = [[0., 0., 1.], [0., 1., 0.], [0., 0., 1.], [0., 1., 0.], [0., 0., 1.], [0., 1., 0.], [0., 0., 1.]];
    let mut r = rodrigues([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
    let mut p = base;
    for i in 0..7 {
        r = matmul(&r, &rodrigues(axes[i], q[i]));
        for (row, pi) in p.iter_mut().enumerate() {
            *pi += r[row][2] * links[i];
        }
    }
    (p, r)
}

fn robots() -> Vec<RobotModel> {
    let cfg = ArenaConfig::default();
    RobotKind::ALL.iter().map(|&k| cfg.robot(k).unwrap()).collect()
}

proptest! {
    #[test]
    fn fk_matches_rodrigues_oracle(q in prop::array::uniform7(-3.0f64..3.0), r in 0usize..4) {
        let robot = &robots()[r];
        let ee = robot.end_effector(&q);
        let (p, rot) = oracle_fk(&robot.link_lengths, robot.base_position, &q);
        for i in 0..3 {
            prop_assert!((ee.position[i] - p[i]).abs() < 1e-12);
        }
        let m = ee.orientation.to_rotation_matrix();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((m[(i, j)] - rot[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn end_effector_motion_bounded_by_distal_length(
        q in prop::array::uniform7(-2.0f64..2.0),
        dq in prop::array::uniform7(-0.1f64..0.1),
        r in 0usize..4,
    ) {
        let robot = &robots()[r];
        let mut q2 = q;
        for i in 0..NUM_JOINTS {
            q2[i] += dq[i];
        }
        let bound: f64 = (0..NUM_JOINTS).map(|i| dq[i].abs() * robot.distal_length(i)).sum();
        let a = robot.forward_kinematics(&q);
        let b = robot.forward_kinematics(&q2);
        for (pa, pb) in a.link_ends.iter().zip(&b.link_ends) {
            prop_assert!((pa - pb).norm() <= bound + 1e-12);
        }
    }
}

#[test]
fn reach_envelope_is_link_sum() {
    for robot in robots() {
        let total: f64 = robot.link_lengths.iter().sum();
        let ee = robot.end_effector(&[0.0; 7]);
        let base = nalgebra::Vector3::from(robot.base_position);
        assert!(((ee.position - base).norm() - total).abs() < 1e-12);
    }
}
