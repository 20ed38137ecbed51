//! Space-filling lattices, covering sets and shape predicates.
//!
//! Every lattice here is a Bravais lattice: a vertex is `seed + a1*b1 + a2*b2 + a3*b3`
//! for an integer index triple. Vertices are the centres of the space-filling cells,
//! and each cell's circumsphere has radius equal to the sensing radius `r_s`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for on-lattice and boundary checks.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Total order on coordinates, used for deterministic tie-breaking.
    pub fn lex_cmp(&self, o: &Vec3) -> std::cmp::Ordering {
        self.x
            .total_cmp(&o.x)
            .then(self.y.total_cmp(&o.y))
            .then(self.z.total_cmp(&o.z))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Axis-aligned box; membership is closed on every face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min_corner: Vec3,
    pub max_corner: Vec3,
}

impl Region {
    pub fn new(min_corner: Vec3, max_corner: Vec3) -> Result<Self> {
        if !min_corner.is_finite() || !max_corner.is_finite() {
            return Err(Error::InvalidRegion("corners must be finite".into()));
        }
        if !(min_corner.x < max_corner.x && min_corner.y < max_corner.y && min_corner.z < max_corner.z) {
            return Err(Error::InvalidRegion(format!(
                "min corner {min_corner} must be strictly below max corner {max_corner}"
            )));
        }
        Ok(Region { min_corner, max_corner })
    }

    /// Cube of the given side centred on `center`.
    pub fn cube(center: Vec3, side: f64) -> Result<Self> {
        let h = Vec3::new(side / 2.0, side / 2.0, side / 2.0);
        Region::new(center - h, center + h)
    }

    pub fn validate(&self) -> Result<()> {
        Region::new(self.min_corner, self.max_corner).map(|_| ())
    }

    pub fn extent(&self) -> Vec3 {
        self.max_corner - self.min_corner
    }

    pub fn center(&self) -> Vec3 {
        (self.min_corner + self.max_corner) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    /// Closed membership with a small tolerance scaled to the region size.
    pub fn contains(&self, p: Vec3) -> bool {
        let tol = GEOM_EPS * (1.0 + self.extent().norm());
        p.x >= self.min_corner.x - tol
            && p.x <= self.max_corner.x + tol
            && p.y >= self.min_corner.y - tol
            && p.y <= self.max_corner.y + tol
            && p.z >= self.min_corner.z - tol
            && p.z <= self.max_corner.z + tol
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min_corner, self.max_corner);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    TruncatedOctahedron,
    Cube,
    HexagonalPrism,
    RhombicDodecahedron,
}

impl LatticeKind {
    pub const ALL: [LatticeKind; 4] = [
        LatticeKind::TruncatedOctahedron,
        LatticeKind::Cube,
        LatticeKind::HexagonalPrism,
        LatticeKind::RhombicDodecahedron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::TruncatedOctahedron => "truncated-octahedron",
            LatticeKind::Cube => "cube",
            LatticeKind::HexagonalPrism => "hexagonal-prism",
            LatticeKind::RhombicDodecahedron => "rhombic-dodecahedron",
        }
    }

    /// Number of face-sharing neighbour cells.
    pub fn face_count(self) -> usize {
        match self {
            LatticeKind::TruncatedOctahedron => 14,
            LatticeKind::Cube => 6,
            LatticeKind::HexagonalPrism => 8,
            LatticeKind::RhombicDodecahedron => 12,
        }
    }

    /// Basis vectors for a unit sensing radius.
    fn unit_basis(self) -> [Vec3; 3] {
        match self {
            LatticeKind::TruncatedOctahedron => {
                // body-centred cubic; d is the V1 placement step 2/sqrt(5)
                let d = 2.0 / 5f64.sqrt();
                [Vec3::new(2.0 * d, 0.0, 0.0), Vec3::new(0.0, 2.0 * d, 0.0), Vec3::new(d, d, d)]
            }
            LatticeKind::Cube => {
                let s = 2.0 / 3f64.sqrt();
                [Vec3::new(s, 0.0, 0.0), Vec3::new(0.0, s, 0.0), Vec3::new(0.0, 0.0, s)]
            }
            LatticeKind::HexagonalPrism => {
                // optimal prism in a unit sphere: edge sqrt(2/3), height 2/sqrt(3)
                let w = 2f64.sqrt();
                let h = 2.0 / 3f64.sqrt();
                [
                    Vec3::new(w, 0.0, 0.0),
                    Vec3::new(w / 2.0, w * 3f64.sqrt() / 2.0, 0.0),
                    Vec3::new(0.0, 0.0, h),
                ]
            }
            LatticeKind::RhombicDodecahedron => {
                // face-centred cubic with conventional cube side 2
                [Vec3::new(1.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0)]
            }
        }
    }

    /// Distance of the farthest face neighbour for a unit sensing radius.
    fn unit_face_reach(self) -> f64 {
        match self {
            LatticeKind::TruncatedOctahedron => 4.0 / 5f64.sqrt(),
            LatticeKind::Cube => 2.0 / 3f64.sqrt(),
            LatticeKind::HexagonalPrism | LatticeKind::RhombicDodecahedron => 2f64.sqrt(),
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "truncated-octahedron" | "to" => Ok(LatticeKind::TruncatedOctahedron),
            "cube" | "cubic" => Ok(LatticeKind::Cube),
            "hexagonal-prism" | "hex-prism" | "hexprism" => Ok(LatticeKind::HexagonalPrism),
            "rhombic-dodecahedron" | "rhdo" => Ok(LatticeKind::RhombicDodecahedron),
            other => Err(Error::Parse(format!("unknown lattice kind `{other}`"))),
        }
    }
}

/// Integer index triple of a lattice vertex relative to the lattice seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexKey(pub [i64; 3]);

impl VertexKey {
    pub fn offset(self, d: [i64; 3]) -> VertexKey {
        VertexKey([self.0[0] + d[0], self.0[1] + d[1], self.0[2] + d[2]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub seed: Vec3,
    pub r_s: f64,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, seed: Vec3, r_s: f64) -> Result<Self> {
        let spec = LatticeSpec { kind, seed, r_s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_s > 0.0 && self.r_s.is_finite()) {
            return Err(Error::InvalidParameter(format!("sensing radius must be > 0, got {}", self.r_s)));
        }
        if !self.seed.is_finite() {
            return Err(Error::InvalidParameter("lattice seed must be finite".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: Vec3) -> Self {
        LatticeSpec { seed, ..self }
    }

    pub fn basis(&self) -> [Vec3; 3] {
        self.kind.unit_basis().map(|b| b * self.r_s)
    }

    /// Position of the vertex with the given key.
    pub fn vertex(&self, key: VertexKey) -> Vec3 {
        let [b1, b2, b3] = self.basis();
        let [a1, a2, a3] = key.0;
        self.seed + b1 * a1 as f64 + b2 * a2 as f64 + b3 * a3 as f64
    }

    /// Fractional lattice coordinates of `p`.
    pub fn fractional(&self, p: Vec3) -> [f64; 3] {
        let [b1, b2, b3] = self.basis();
        let det = b1.dot(b2.cross(b3));
        let q = p - self.seed;
        // Cramer's rule via the reciprocal basis
        [
            q.dot(b2.cross(b3)) / det,
            q.dot(b3.cross(b1)) / det,
            q.dot(b1.cross(b2)) / det,
        ]
    }

    /// Key of the nearest vertex, ties broken by lexicographically smallest position.
    pub fn nearest_key(&self, p: Vec3) -> VertexKey {
        let f = self.fractional(p);
        let base = f.map(|c| c.round() as i64);
        let mut best: Option<(f64, Vec3, VertexKey)> = None;
        let tol = GEOM_EPS * self.r_s * self.r_s;
        for d0 in -2..=2 {
            for d1 in -2..=2 {
                for d2 in -2..=2 {
                    let key = VertexKey([base[0] + d0, base[1] + d1, base[2] + d2]);
                    let v = self.vertex(key);
                    let dist = (v - p).norm_sq();
                    best = match best {
                        None => Some((dist, v, key)),
                        Some((bd, bv, bk)) => {
                            if dist < bd - tol || (dist <= bd + tol && v.lex_cmp(&bv).is_lt()) {
                                Some((dist.min(bd), v, key))
                            } else {
                                Some((bd, bv, bk))
                            }
                        }
                    };
                }
            }
        }
        best.expect("non-empty candidate window").2
    }

    /// Key of `p` if it lies on the lattice (within tolerance).
    pub fn key_of(&self, p: Vec3) -> Result<VertexKey> {
        let key = self.nearest_key(p);
        let err = self.vertex(key).distance(p);
        if err > GEOM_EPS * (1.0 + self.r_s) * 1e3 {
            return Err(Error::NotOnLattice { point: p, distance: err });
        }
        Ok(key)
    }

    /// Index offsets of the face-sharing neighbour cells.
    pub fn neighbor_offsets(&self) -> &'static [[i64; 3]] {
        neighbor_offsets(self.kind)
    }
}

/// Vertex addressed by index triple in the seed-anchored frame.
pub fn lattice_vertex(spec: &LatticeSpec, a1: i64, a2: i64, a3: i64) -> Vec3 {
    spec.vertex(VertexKey([a1, a2, a3]))
}

/// Closest lattice vertex to `p`.
pub fn nearest_vertex(spec: &LatticeSpec, p: Vec3) -> Vec3 {
    spec.vertex(spec.nearest_key(p))
}

/// Vertices of the cells sharing a face with the cell of `v`.
pub fn neighbor_vertices(spec: &LatticeSpec, v: Vec3) -> Result<Vec<Vec3>> {
    let key = spec.key_of(v)?;
    Ok(spec.neighbor_offsets().iter().map(|&d| spec.vertex(key.offset(d))).collect())
}

fn compute_neighbor_offsets(kind: LatticeKind) -> Vec<[i64; 3]> {
    let spec = LatticeSpec { kind, seed: Vec3::ZERO, r_s: 1.0 };
    let reach = kind.unit_face_reach() * (1.0 + 1e-9);
    let mut out = Vec::new();
    for a in -2i64..=2 {
        for b in -2i64..=2 {
            for c in -2i64..=2 {
                if (a, b, c) == (0, 0, 0) {
                    continue;
                }
                if spec.vertex(VertexKey([a, b, c])).norm() <= reach {
                    out.push([a, b, c]);
                }
            }
        }
    }
    debug_assert_eq!(out.len(), kind.face_count());
    out
}

fn neighbor_offsets(kind: LatticeKind) -> &'static [[i64; 3]] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[Vec<[i64; 3]>; 4]> = OnceLock::new();
    let t = TABLE.get_or_init(|| LatticeKind::ALL.map(compute_neighbor_offsets));
    let i = LatticeKind::ALL.iter().position(|&k| k == kind).unwrap();
    &t[i]
}

/// The lattice vertices inside a region, with their adjacency restricted to the set.
#[derive(Debug, Clone)]
pub struct CoveringSet {
    spec: LatticeSpec,
    region: Region,
    keys: Vec<VertexKey>,
    points: Vec<Vec3>,
    index: HashMap<VertexKey, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl CoveringSet {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[VertexKey] {
        &self.keys
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.points
    }

    pub fn index_of(&self, key: VertexKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn contains_key(&self, key: VertexKey) -> bool {
        self.index.contains_key(&key)
    }

    pub fn key(&self, i: usize) -> VertexKey {
        self.keys[i]
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    /// Face neighbours of vertex `i` that are themselves in the set.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Nearest member of the set to `p` (lexicographic tie-break).
    pub fn nearest(&self, p: Vec3) -> Option<usize> {
        if let Some(i) = self.index_of(self.spec.nearest_key(p)) {
            return Some(i);
        }
        self.nearest_by_scan(p, |_| true)
    }

    /// Nearest member satisfying `keep`, by exhaustive scan.
    pub fn nearest_by_scan(&self, p: Vec3, keep: impl Fn(usize) -> bool) -> Option<usize> {
        let tol = GEOM_EPS * self.spec.r_s * self.spec.r_s;
        let mut best: Option<(f64, usize)> = None;
        for (i, v) in self.points.iter().enumerate() {
            if !keep(i) {
                continue;
            }
            let d = (*v - p).norm_sq();
            best = match best {
                None => Some((d, i)),
                Some((bd, bi)) => {
                    if d < bd - tol || (d <= bd + tol && v.lex_cmp(&self.points[bi]).is_lt()) {
                        Some((d.min(bd), i))
                    } else {
                        Some((bd, bi))
                    }
                }
            };
        }
        best.map(|(_, i)| i)
    }

    /// Sub-set of vertices satisfying a predicate, adjacency re-restricted.
    pub fn filtered(&self, keep: impl Fn(Vec3) -> bool) -> CoveringSet {
        let picked: Vec<usize> = (0..self.len()).filter(|&i| keep(self.points[i])).collect();
        Self::from_keys(self.spec, self.region, picked.iter().map(|&i| self.keys[i]).collect())
    }

    fn from_keys(spec: LatticeSpec, region: Region, keys: Vec<VertexKey>) -> CoveringSet {
        let points: Vec<Vec3> = keys.iter().map(|&k| spec.vertex(k)).collect();
        let index: HashMap<VertexKey, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let offsets = spec.neighbor_offsets();
        let adjacency = keys
            .iter()
            .map(|&k| offsets.iter().filter_map(|&d| index.get(&k.offset(d)).copied()).collect())
            .collect();
        CoveringSet { spec, region, keys, points, index, adjacency }
    }
}

/// Lattice vertices lying in the closed region.
pub fn covering_set(spec: &LatticeSpec, region: &Region) -> Result<CoveringSet> {
    spec.validate()?;
    region.validate()?;
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for c in region.corners() {
        let f = spec.fractional(c);
        for k in 0..3 {
            lo[k] = lo[k].min(f[k].floor() as i64 - 1);
            hi[k] = hi[k].max(f[k].ceil() as i64 + 1);
        }
    }
    let mut keys = Vec::new();
    for a in lo[0]..=hi[0] {
        for b in lo[1]..=hi[1] {
            for c in lo[2]..=hi[2] {
                let key = VertexKey([a, b, c]);
                if region.contains(spec.vertex(key)) {
                    keys.push(key);
                }
            }
        }
    }
    keys.sort_by(|a, b| spec.vertex(*a).lex_cmp(&spec.vertex(*b)));
    Ok(CoveringSet::from_keys(*spec, *region, keys))
}

/// Cell volume over circumsphere volume.
pub fn volumetric_quotient(kind: LatticeKind) -> f64 {
    let sphere = 4.0 / 3.0 * PI;
    let cell = match kind {
        // (4/sqrt5)^3 / 2
        LatticeKind::TruncatedOctahedron => 32.0 / (5.0 * 5f64.sqrt()),
        LatticeKind::Cube => 8.0 / (3.0 * 3f64.sqrt()),
        LatticeKind::HexagonalPrism => 2.0,
        LatticeKind::RhombicDodecahedron => 2.0,
    };
    cell / sphere
}

/// Smallest communication-to-sensing ratio that links every pair of face neighbours.
pub fn min_connectivity_ratio(kind: LatticeKind) -> f64 {
    let spec = LatticeSpec { kind, seed: Vec3::ZERO, r_s: 1.0 };
    spec.neighbor_offsets()
        .iter()
        .map(|&d| spec.vertex(VertexKey(d)).norm())
        .fold(0.0, f64::max)
}

/// Target patterns for shape formation, in the agreed formation frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapePredicate {
    Sphere { r: f64 },
    Cuboid { min: Vec3, max: Vec3 },
    /// Solid torus with tube radius `a` and centre-line radius `c`.
    Torus { a: f64, c: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

impl ShapePredicate {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ShapePredicate::Sphere { r } => r > 0.0,
            ShapePredicate::Cuboid { min, max } => min.x < max.x && min.y < max.y && min.z < max.z,
            ShapePredicate::Torus { a, c } => a > 0.0 && c > 0.0,
            ShapePredicate::Ellipsoid { a, b, c } => a > 0.0 && b > 0.0 && c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid shape parameters: {self:?}")))
        }
    }
}

/// Open-region membership test.
pub fn shape_contains(shape: &ShapePredicate, p: Vec3) -> bool {
    match *shape {
        ShapePredicate::Sphere { r } => p.norm_sq() < r * r,
        ShapePredicate::Cuboid { min, max } => {
            min.x < p.x && p.x < max.x && min.y < p.y && p.y < max.y && min.z < p.z && p.z < max.z
        }
        ShapePredicate::Torus { a, c } => {
            let ring = (p.x * p.x + p.y * p.y).sqrt() - c;
            ring * ring + p.z * p.z < a * a
        }
        ShapePredicate::Ellipsoid { a, b, c } => {
            (p.x / a).powi(2) + (p.y / b).powi(2) + (p.z / c).powi(2) < 1.0
        }
    }
}
