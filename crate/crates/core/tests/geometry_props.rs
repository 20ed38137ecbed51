//! Lattice queries against brute-force oracles built from closed-form bases.

use proptest::prelude::*;
use swarm3d::geometry::{
    covering_set, min_connectivity_ratio, nearest_vertex, neighbor_vertices, volumetric_quotient, LatticeKind,
    LatticeSpec, Region, Vec3,
};

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Basis vectors written out independently of the library, for `r_s = 1`.
fn basis(kind: LatticeKind) -> [Vec3; 3] {
    match kind {
        LatticeKind::TruncatedOctahedron => {
            let d = 2.0 / 5f64.sqrt();
            [v(2.0 * d, 0.0, 0.0), v(0.0, 2.0 * d, 0.0), v(d, d, d)]
        }
        LatticeKind::Cube => {
            let s = 2.0 / 3f64.sqrt();
            [v(s, 0.0, 0.0), v(0.0, s, 0.0), v(0.0, 0.0, s)]
        }
        LatticeKind::HexagonalPrism => {
            let w = 2f64.sqrt();
            [v(w, 0.0, 0.0), v(w / 2.0, w * 3f64.sqrt() / 2.0, 0.0), v(0.0, 0.0, 2.0 / 3f64.sqrt())]
        }
        LatticeKind::RhombicDodecahedron => [v(1.0, 1.0, 0.0), v(1.0, 0.0, 1.0), v(0.0, 1.0, 1.0)],
    }
}

fn point(b: &[Vec3; 3], i: i64, j: i64, k: i64) -> Vec3 {
    b[0] * i as f64 + b[1] * j as f64 + b[2] * k as f64
}

fn window(r: i64) -> impl Iterator<Item = (i64, i64, i64)> {
    (-r..=r).flat_map(move |i| (-r..=r).flat_map(move |j| (-r..=r).map(move |k| (i, j, k))))
}

/// Lattice vectors whose midpoint is equidistant from exactly the origin and the vector itself:
/// the Voronoi cell's facet normals.
fn face_vectors(kind: LatticeKind) -> Vec<Vec3> {
    let b = basis(kind);
    let pts: Vec<Vec3> = window(4).map(|(i, j, k)| point(&b, i, j, k)).collect();
    window(2)
        .filter(|&t| t != (0, 0, 0))
        .map(|(i, j, k)| point(&b, i, j, k))
        .filter(|w| {
            let mid = *w * 0.5;
            let half = w.norm() / 2.0;
            let closer = pts.iter().filter(|p| p.distance(mid) < half - 1e-9).count();
            let tied = pts.iter().filter(|p| (p.distance(mid) - half).abs() <= 1e-9).count();
            closer == 0 && tied == 2
        })
        .collect()
}

fn brute_nearest_distance(kind: LatticeKind, p: Vec3) -> f64 {
    let b = basis(kind);
    // fractional coordinates stay within a few units of 0 for the sampled points
    window(8).map(|(i, j, k)| point(&b, i, j, k).distance(p)).fold(f64::INFINITY, f64::min)
}

fn kinds() -> impl Strategy<Value = LatticeKind> {
    prop::sample::select(LatticeKind::ALL.to_vec())
}

#[test]
fn face_counts_from_voronoi_oracle() {
    for kind in LatticeKind::ALL {
        assert_eq!(face_vectors(kind).len(), kind.face_count(), "{kind}");
    }
}

#[test]
fn connectivity_ratio_is_longest_face_vector() {
    for kind in LatticeKind::ALL {
        let longest = face_vectors(kind).iter().map(|w| w.norm()).fold(0.0, f64::max);
        assert!((min_connectivity_ratio(kind) - longest).abs() < 1e-12, "{kind}");
    }
}

#[test]
fn quotient_from_cell_volume() {
    for kind in LatticeKind::ALL {
        let b = basis(kind);
        let cell = b[0].dot(b[1].cross(b[2])).abs();
        let sphere = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((volumetric_quotient(kind) - cell / sphere).abs() < 1e-12, "{kind}");
    }
}

proptest! {
    #[test]
    fn nearest_matches_brute_force(kind in kinds(), x in -4.0..4.0f64, y in -4.0..4.0f64, z in -4.0..4.0f64) {
        let spec = LatticeSpec::new(kind, Vec3::ZERO, 1.0).unwrap();
        let p = v(x, y, z);
        let got = nearest_vertex(&spec, p).distance(p);
        prop_assert!((got - brute_nearest_distance(kind, p)).abs() < 1e-9);
    }

    #[test]
    fn nearest_is_translation_and_scale_equivariant(
        kind in kinds(),
        s in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        p in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        r_s in 0.2..5.0f64,
    ) {
        let seed = v(s.0, s.1, s.2);
        let p = v(p.0, p.1, p.2);
        let spec = LatticeSpec::new(kind, seed, r_s).unwrap();
        let unit = LatticeSpec::new(kind, Vec3::ZERO, 1.0).unwrap();
        let expect = seed + nearest_vertex(&unit, (p - seed) * (1.0 / r_s)) * r_s;
        let got = nearest_vertex(&spec, p);
        // ties can resolve to different vertices; distances must agree
        prop_assert!((got.distance(p) - expect.distance(p)).abs() < 1e-9 * r_s.max(1.0));
    }

    #[test]
    fn neighbors_match_face_vectors(kind in kinds(), i in -3i64..3, j in -3i64..3, k in -3i64..3) {
        let spec = LatticeSpec::new(kind, Vec3::ZERO, 1.0).unwrap();
        let centre = point(&basis(kind), i, j, k);
        let got = neighbor_vertices(&spec, centre).unwrap();
        let faces = face_vectors(kind);
        prop_assert_eq!(got.len(), faces.len());
        for w in faces {
            let want = centre + w;
            prop_assert!(got.iter().any(|g| g.distance(want) < 1e-9));
        }
    }

    #[test]
    fn covering_set_is_exactly_the_vertices_inside(
        kind in kinds(),
        a in (-3.0..0.0f64, -3.0..0.0f64, -3.0..0.0f64),
        e in (0.5..4.0f64, 0.5..4.0f64, 0.5..4.0f64),
    ) {
        let region = Region::new(v(a.0, a.1, a.2), v(a.0 + e.0, a.1 + e.1, a.2 + e.2)).unwrap();
        let spec = LatticeSpec::new(kind, Vec3::ZERO, 1.0).unwrap();
        let set = covering_set(&spec, &region).unwrap();
        let b = basis(kind);
        let brute = window(10).map(|(i, j, k)| point(&b, i, j, k)).filter(|p| region.contains(*p)).count();
        prop_assert_eq!(set.len(), brute);
        for &p in set.vertices() {
            prop_assert!(region.contains(p));
        }
    }
}
