use proptest::prelude::*;
use swarm3d::consensus::ConsensusState;
use swarm3d::formation::{
    control, frame_basis, heading_angles, heading_vector, integrate_step, octahedron, permutation_step, speed_rule,
    tetrahedron, FormationConfig, PermutationState, RobotState,
};
use swarm3d::geometry::Vec3;
use swarm3d::rng::{self, Purpose};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn angle() -> impl Strategy<Value = f64> {
    -std::f64::consts::PI..std::f64::consts::PI
}

proptest! {
    #[test]
    fn heading_round_trip(theta in -1.5..1.5f64, psi in angle()) {
        let c = heading_vector(theta, psi);
        prop_assert!((c.norm() - 1.0).abs() < 1e-12);
        let (t, p) = heading_angles(c);
        prop_assert!((t - theta).abs() < 1e-9);
        let dp = (p - psi).rem_euclid(2.0 * std::f64::consts::PI);
        prop_assert!(dp < 1e-9 || (2.0 * std::f64::consts::PI - dp) < 1e-9);
    }

    #[test]
    fn basis_is_the_heading_derivative(theta in -1.5..1.5f64, psi in angle()) {
        let (a, b) = frame_basis(theta, psi);
        let c = heading_vector(theta, psi);
        let h = 1e-6;
        let da = (heading_vector(theta + h, psi) - heading_vector(theta - h, psi)) * (0.5 / h);
        let db = (heading_vector(theta, psi + h) - heading_vector(theta, psi - h)) * (0.5 / h);
        prop_assert!((a - da).norm() < 1e-8);
        prop_assert!((b - db).norm() < 1e-8);
        prop_assert!(a.dot(c).abs() < 1e-12 && b.dot(c).abs() < 1e-12 && a.dot(b).abs() < 1e-12);
        prop_assert!((b.norm() - theta.cos()).abs() < 1e-12);
    }

    #[test]
    fn control_respects_bounds(
        theta in -1.5..1.5f64,
        psi in angle(),
        d in vec3(),
        v in 2.0..8.0f64,
        u_max in 0.1..5.0f64,
    ) {
        let r = RobotState::new(Vec3::ZERO, theta, psi, v);
        let u = control(&r, d, u_max);
        prop_assert!(u.norm() <= u_max);
        prop_assert!(u.dot(r.c).abs() <= 1e-9);
        // a non-zero control turns toward d
        if u.norm() > 0.0 {
            prop_assert!(u.dot(d) > 0.0);
            prop_assert!((u.norm() - u_max).abs() < 1e-9);
        }
    }

    #[test]
    fn integration_keeps_unit_heading(
        theta in -1.5..1.5f64,
        psi in angle(),
        d in vec3(),
        ts in 1e-4..0.1f64,
    ) {
        let mut r = RobotState::new(Vec3::ZERO, theta, psi, 5.0);
        for _ in 0..50 {
            let u = control(&r, d - r.xi, 2.0);
            r = integrate_step(&r, u, 5.0, ts);
            prop_assert!((r.c.norm() - 1.0).abs() < 1e-12);
            prop_assert!((heading_vector(r.theta, r.psi) - r.c).norm() < 1e-9);
        }
    }

    #[test]
    fn speed_is_one_of_the_two_levels(x in -100.0..100.0f64, h in -100.0..100.0f64) {
        let s = speed_rule(x, h, 2.0, 8.0);
        prop_assert_eq!(s, if x <= h { 8.0 } else { 2.0 });
    }

    #[test]
    fn negotiation_moves_only_blocked_robots_along_graph(seed in any::<u64>(), spread in 0.0..80.0f64) {
        let (offsets, adjacency) = octahedron(60.0);
        let cfg = FormationConfig::with_offsets(offsets, adjacency);
        let g = cfg.graph().unwrap();
        let mut init = rng::stream(seed, 0, Purpose::FormationInit);
        use rand::Rng;
        let robots: Vec<RobotState> = (0..6)
            .map(|_| {
                let p = Vec3::new(init.random_range(-spread..=spread), init.random_range(-spread..=spread), 0.0);
                RobotState::new(p, 0.0, 0.0, 8.0)
            })
            .collect();
        let cons = vec![ConsensusState::default(); 6];
        let start: Vec<usize> = (0..6).map(|_| init.random_range(0..6)).collect();
        let perm = PermutationState { assignment: start.clone(), epoch: 0 };
        let mut rngs = rng::streams(seed, 6, Purpose::Permutation);
        let (next, blocked) = permutation_step(&perm, &robots, &cons, &cfg, &g, 0.0, &mut rngs);
        prop_assert_eq!(next.epoch, 1);
        for i in 0..6 {
            let (a, b) = (start[i], next.assignment[i]);
            if !blocked[i] {
                prop_assert_eq!(a, b);
            }
            prop_assert!(a == b || g.has_edge(a, b));
        }
    }
}

#[test]
fn constant_turn_traces_a_circle() {
    // level flight, turn rate u_max about +z: radius v / u_max
    let (v, u_max, ts) = (4.0, 2.0, 1e-4);
    let mut r = RobotState::new(Vec3::ZERO, 0.0, 0.0, v);
    let radius = v / u_max;
    let centre = Vec3::new(0.0, radius, 0.0);
    let period = 2.0 * std::f64::consts::PI / u_max;
    let steps = (period / ts).round() as usize;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let left = Vec3::new(0.0, 0.0, 1.0).cross(r.c);
        let u = control(&r, left * 10.0, u_max);
        r = integrate_step(&r, u, v, ts);
        worst = worst.max((r.xi.distance(centre) - radius).abs());
        assert!(r.xi.z.abs() < 1e-12);
    }
    assert!(worst < 1e-2 * radius, "radius drift {worst}");
    assert!(r.xi.norm() < 1e-2 * radius, "did not close the loop: {}", r.xi);
}

#[test]
fn regular_solid_edges() {
    for (offsets, edges, edge) in [
        { let (o, e) = tetrahedron(50.0); (o, e, 50.0) },
        { let (o, e) = octahedron(60.0); (o, e, 60.0) },
    ] {
        for &(i, j) in &edges {
            assert!((offsets[i].distance(offsets[j]) - edge).abs() < 1e-9);
        }
        let centroid = offsets.iter().fold(Vec3::ZERO, |a, &o| a + o) * (1.0 / offsets.len() as f64);
        assert!(centroid.norm() < 1e-9);
    }
}
