//! Quadric error metric edge-collapse simplification to exact triangle budgets.

mod error_metric;
mod quadric;

pub use error_metric::{geometric_error, ErrorSummary};
pub use quadric::{Placement, Quadric};

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross, dot, norm, scale, sub, triangle_cross, Vec3};
use crate::mesh::{validate, Face, TriMesh, ValidationReport};
use crate::scalar::Real;

/// Smallest budget accepted by [`decimate`]: a closed tetrahedron.
pub const MIN_TARGET: usize = 4;

/// Outcome of a simplification run.
#[derive(Debug, Clone, PartialEq)]
pub struct Decimation<T> {
    pub mesh: TriMesh<T>,
    pub requested: usize,
    pub achieved: usize,
}

impl<T> Decimation<T> {
    /// True when parity forced the result one triangle above the budget.
    pub fn overshoot(&self) -> bool {
        self.achieved > self.requested
    }
}

#[derive(Debug, Error)]
pub enum DecimateError<T: std::fmt::Debug> {
    #[error("target of {0} triangles is below the minimum of {MIN_TARGET}")]
    TargetTooSmall(usize),
    #[error("input mesh does not validate: {0:?}")]
    InvalidInput(Box<ValidationReport>),
    #[error("geometric error needs non-empty meshes and at least one sample")]
    EmptyInput,
    #[error("no admissible collapse left at {} triangles (target {})", .0.achieved, .0.requested)]
    Exhausted(Box<Decimation<T>>),
}

/// Serializable summary of one decimation, used by the CLI report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecimationSummary {
    pub requested: usize,
    pub achieved: usize,
    pub overshoot: bool,
}

/// Heap entry. Ordered so that `BinaryHeap` pops the lowest cost first, then
/// the lowest `(a, b)` pair.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    a: u32,
    b: u32,
    gen_a: u32,
    gen_b: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

/// Record of one executed collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct Collapse<T> {
    /// Surviving vertex.
    pub kept: u32,
    /// Vertex merged into `kept`.
    pub removed: u32,
    pub position: Vec3<T>,
    pub cost: T,
    pub faces_removed: usize,
}

/// Why a candidate edge was not collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reject {
    Stale,
    Topology,
    Flip,
    Budget,
}

/// Incremental edge-collapse state over an indexed mesh.
pub struct Decimator<T> {
    name: String,
    positions: Vec<Vec3<T>>,
    uvs: Vec<[T; 2]>,
    quadrics: Vec<Quadric<T>>,
    faces: Vec<Face>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<u32>>,
    vertex_alive: Vec<bool>,
    generation: Vec<u32>,
    blocked: Vec<Vec<u32>>,
    heap: BinaryHeap<Candidate>,
    live_faces: usize,
}

fn unit_normal<T: Real>(tri: &[Vec3<T>; 3]) -> Option<(Vec3<T>, T)> {
    let n = triangle_cross(tri);
    let len = norm(&n);
    (len > T::zero() && len.is_finite()).then(|| (scale(&n, T::one() / len), len))
}

impl<T: Real> Decimator<T> {
    pub fn new(mesh: &TriMesh<T>) -> Self {
        let nv = mesh.vertices.len();
        let mut vertex_faces = vec![Vec::new(); nv];
        for (fi, f) in mesh.faces.iter().enumerate() {
            for v in f.vertices() {
                vertex_faces[v as usize].push(fi as u32);
            }
        }
        let mut this = Self {
            name: mesh.name.clone(),
            positions: mesh.vertices.clone(),
            uvs: mesh.uvs.clone(),
            quadrics: vec![Quadric::zero(); nv],
            faces: mesh.faces.clone(),
            face_alive: vec![true; mesh.faces.len()],
            vertex_faces,
            vertex_alive: vec![true; nv],
            generation: vec![0; nv],
            blocked: vec![Vec::new(); nv],
            heap: BinaryHeap::new(),
            live_faces: mesh.faces.len(),
        };
        this.init_quadrics();
        for (a, b) in this.edges() {
            this.push_candidate(a, b);
        }
        this
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| {
                let v = f.vertices();
                [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]
            })
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    fn init_quadrics(&mut self) {
        let mut edge_use: std::collections::HashMap<(u32, u32), (u32, u32)> = Default::default();
        for (fi, f) in self.faces.iter().enumerate() {
            let tri = self.triangle(f);
            let Some((n, _)) = unit_normal(&tri) else {
                continue;
            };
            let q = Quadric::from_plane(n, -dot(&n, &tri[0]), T::one());
            let vs = f.vertices();
            for v in vs {
                self.quadrics[v as usize] += q;
            }
            for k in 0..3 {
                let (a, b) = (vs[k], vs[(k + 1) % 3]);
                let e = edge_use.entry((a.min(b), a.max(b))).or_insert((0, fi as u32));
                e.0 += 1;
            }
        }
        // boundary edges get a plane through the edge, perpendicular to the face
        let mut boundary: Vec<_> = edge_use.into_iter().filter(|(_, (n, _))| *n == 1).collect();
        boundary.sort_unstable_by_key(|(e, _)| *e);
        for ((a, b), (_, fi)) in boundary {
            let tri = self.triangle(&self.faces[fi as usize]);
            let Some((n, _)) = unit_normal(&tri) else {
                continue;
            };
            let pa = self.positions[a as usize];
            let edge = sub(&self.positions[b as usize], &pa);
            let len2 = dot(&edge, &edge);
            let c = cross(&edge, &n);
            let clen = norm(&c);
            if clen <= T::zero() {
                continue;
            }
            let cn = scale(&c, T::one() / clen);
            let q = Quadric::from_plane(cn, -dot(&cn, &pa), len2);
            self.quadrics[a as usize] += q;
            self.quadrics[b as usize] += q;
        }
    }

    fn triangle(&self, f: &Face) -> [Vec3<T>; 3] {
        f.vertices().map(|v| self.positions[v as usize])
    }

    pub fn triangle_count(&self) -> usize {
        self.live_faces
    }

    pub fn quadric(&self, v: u32) -> Quadric<T> {
        self.quadrics[v as usize]
    }

    pub fn position(&self, v: u32) -> Vec3<T> {
        self.positions[v as usize]
    }

    fn push_candidate(&mut self, a: u32, b: u32) {
        let (a, b) = (a.min(b), a.max(b));
        let q = self.quadrics[a as usize] + self.quadrics[b as usize];
        let (_, cost, _) = q.placement(&self.positions[a as usize], &self.positions[b as usize]);
        self.heap.push(Candidate {
            cost: cost.as_f64().max(0.0),
            a,
            b,
            gen_a: self.generation[a as usize],
            gen_b: self.generation[b as usize],
        });
    }

    fn live_faces_of(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.vertex_faces[v as usize]
            .iter()
            .copied()
            .filter(|&f| self.face_alive[f as usize])
    }

    fn neighbours(&self, v: u32) -> HashSet<u32> {
        self.live_faces_of(v)
            .flat_map(|f| self.faces[f as usize].vertices())
            .filter(|&u| u != v)
            .collect()
    }

    fn is_boundary_vertex(&self, v: u32) -> bool {
        let mut counts: Vec<(u32, u32)> = Vec::with_capacity(12);
        for f in self.live_faces_of(v) {
            for u in self.faces[f as usize].vertices() {
                if u == v {
                    continue;
                }
                match counts.iter_mut().find(|(w, _)| *w == u) {
                    Some(entry) => entry.1 += 1,
                    None => counts.push((u, 1)),
                }
            }
        }
        counts.iter().any(|&(_, n)| n == 1)
    }

    /// Checks a candidate and returns the faces it would remove.
    fn admissible(&self, c: &Candidate, position: &Vec3<T>, target: usize) -> Result<Vec<u32>, Reject> {
        let (a, b) = (c.a, c.b);
        if !self.vertex_alive[a as usize]
            || !self.vertex_alive[b as usize]
            || self.generation[a as usize] != c.gen_a
            || self.generation[b as usize] != c.gen_b
        {
            return Err(Reject::Stale);
        }
        let shared: Vec<u32> = self
            .live_faces_of(a)
            .filter(|&f| self.faces[f as usize].vertices().contains(&b))
            .collect();
        if shared.is_empty() {
            return Err(Reject::Stale);
        }
        if shared.len() > 2 {
            return Err(Reject::Topology);
        }
        if self.live_faces - shared.len() < target {
            return Err(Reject::Budget);
        }

        // link condition: common neighbours are exactly the opposite corners
        let opposite: HashSet<u32> = shared
            .iter()
            .flat_map(|&f| self.faces[f as usize].vertices())
            .filter(|&u| u != a && u != b)
            .collect();
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        if na.intersection(&nb).count() != opposite.len() || !opposite.iter().all(|u| na.contains(u) && nb.contains(u)) {
            return Err(Reject::Topology);
        }
        if shared.len() == 2 && self.is_boundary_vertex(a) && self.is_boundary_vertex(b) {
            return Err(Reject::Topology);
        }

        let mut seen: HashSet<[u32; 3]> = HashSet::new();
        for v in [a, b] {
            for f in self.live_faces_of(v) {
                if shared.contains(&f) {
                    continue;
                }
                let face = &self.faces[f as usize];
                let before = self.triangle(face);
                let mut after = before;
                let mut verts = face.vertices();
                for k in 0..3 {
                    if verts[k] == a || verts[k] == b {
                        after[k] = *position;
                        verts[k] = a;
                    }
                }
                let n0 = triangle_cross(&before);
                let n1 = triangle_cross(&after);
                if dot(&n0, &n1) <= T::zero() {
                    return Err(Reject::Flip);
                }
                verts.sort_unstable();
                if !seen.insert(verts) {
                    return Err(Reject::Topology);
                }
            }
        }
        Ok(shared)
    }

    /// Executes the cheapest admissible collapse that keeps at least `target` faces.
    pub fn step(&mut self, target: usize) -> Option<Collapse<T>> {
        while let Some(c) = self.heap.pop() {
            let q = self.quadrics[c.a as usize] + self.quadrics[c.b as usize];
            let (position, cost, _) = q.placement(&self.positions[c.a as usize], &self.positions[c.b as usize]);
            match self.admissible(&c, &position, target) {
                Ok(shared) => return Some(self.collapse(c.a, c.b, position, cost, q, &shared)),
                Err(Reject::Topology | Reject::Flip) => {
                    self.blocked[c.a as usize].push(c.b);
                    self.blocked[c.b as usize].push(c.a);
                }
                Err(Reject::Stale | Reject::Budget) => {}
            }
        }
        None
    }

    fn collapse(&mut self, a: u32, b: u32, position: Vec3<T>, cost: T, merged: Quadric<T>, shared: &[u32]) -> Collapse<T> {
        // uv each removed face assigns to `a`, keyed by the uv it assigns to `b`
        let seam: Vec<(u32, u32)> = shared
            .iter()
            .map(|&f| {
                let corners = self.faces[f as usize].0;
                let uv_of = |v: u32| corners.iter().find(|c| c.vertex == v).unwrap().uv;
                (uv_of(b), uv_of(a))
            })
            .collect();
        for &f in shared {
            self.face_alive[f as usize] = false;
        }
        self.live_faces -= shared.len();

        let moved: Vec<u32> = self.live_faces_of(b).collect();
        for f in moved {
            for corner in &mut self.faces[f as usize].0 {
                if corner.vertex == b {
                    corner.vertex = a;
                    corner.uv = seam
                        .iter()
                        .find(|(ub, _)| *ub == corner.uv)
                        .or(seam.first())
                        .map(|&(_, ua)| ua)
                        .unwrap_or(corner.uv);
                }
            }
            self.vertex_faces[a as usize].push(f);
        }
        self.vertex_faces[b as usize].clear();
        let alive = &self.face_alive;
        self.vertex_faces[a as usize].retain(|&f| alive[f as usize]);
        self.vertex_alive[b as usize] = false;
        self.positions[a as usize] = position;
        self.quadrics[a as usize] = merged;
        self.generation[a as usize] += 1;
        self.generation[b as usize] += 1;

        let ring = self.neighbours(a);
        let mut ring: Vec<u32> = ring.into_iter().collect();
        ring.sort_unstable();
        for &u in &ring {
            self.push_candidate(a, u);
        }
        // neighbourhood changed: retry edges previously rejected around the ring
        for &u in ring.iter().chain(std::iter::once(&a)) {
            let retry = std::mem::take(&mut self.blocked[u as usize]);
            for w in retry {
                if w != a && self.vertex_alive[w as usize] {
                    self.push_candidate(u, w);
                }
            }
        }

        Collapse {
            kept: a,
            removed: b,
            position,
            cost,
            faces_removed: shared.len(),
        }
    }

    /// Compacts the surviving geometry into a fresh mesh.
    pub fn to_mesh(&self) -> TriMesh<T> {
        let mut vmap = vec![u32::MAX; self.positions.len()];
        let mut tmap = vec![u32::MAX; self.uvs.len()];
        let mut mesh = TriMesh::new(self.name.clone());
        let live: Vec<&Face> = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter_map(|(f, &alive)| alive.then_some(f))
            .collect();
        let mut used_v: Vec<u32> = live.iter().flat_map(|f| f.vertices()).collect();
        used_v.sort_unstable();
        used_v.dedup();
        for v in used_v {
            vmap[v as usize] = mesh.vertices.len() as u32;
            mesh.vertices.push(self.positions[v as usize]);
        }
        if !self.uvs.is_empty() {
            let mut used_t: Vec<u32> = live.iter().flat_map(|f| f.0.map(|c| c.uv)).collect();
            used_t.sort_unstable();
            used_t.dedup();
            for t in used_t {
                tmap[t as usize] = mesh.uvs.len() as u32;
                mesh.uvs.push(self.uvs[t as usize]);
            }
        }
        mesh.faces = live
            .into_iter()
            .map(|f| {
                let mut out = *f;
                for c in &mut out.0 {
                    c.vertex = vmap[c.vertex as usize];
                    c.uv = if self.uvs.is_empty() { 0 } else { tmap[c.uv as usize] };
                }
                out
            })
            .collect();
        mesh
    }
}

/// Simplifies `mesh` to exactly `target` triangles, or `target + 1` when the
/// remaining collapses all remove two faces.
///
/// The collapse order is fully determined by costs and vertex indices, so the
/// result does not depend on any random seed.
pub fn decimate<T: Real>(mesh: &TriMesh<T>, target: usize) -> Result<Decimation<T>, DecimateError<T>> {
    if target < MIN_TARGET {
        return Err(DecimateError::TargetTooSmall(target));
    }
    let report = validate(mesh);
    if !report.is_valid() {
        return Err(DecimateError::InvalidInput(Box::new(report)));
    }
    if target >= mesh.triangle_count() {
        return Ok(Decimation {
            mesh: mesh.clone(),
            requested: target,
            achieved: mesh.triangle_count(),
        });
    }
    let mut decimator = Decimator::new(mesh);
    while decimator.triangle_count() > target {
        if decimator.step(target).is_none() {
            break;
        }
    }
    let achieved = decimator.triangle_count();
    let result = Decimation {
        mesh: decimator.to_mesh(),
        requested: target,
        achieved,
    };
    if achieved > target + 1 {
        return Err(DecimateError::Exhausted(Box::new(result)));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{icosphere, tetrahedron};

    #[test]
    fn target_at_or_above_count_is_identity() {
        let m = icosphere::<f64>(1, 1.0);
        let out = decimate(&m, m.triangle_count()).unwrap();
        assert_eq!(out.mesh, m);
        assert_eq!(decimate(&m, 10_000).unwrap().mesh, m);
    }

    #[test]
    fn rejects_tiny_targets() {
        let m = icosphere::<f64>(1, 1.0);
        assert!(matches!(decimate(&m, 3), Err(DecimateError::TargetTooSmall(3))));
    }

    #[test]
    fn icosphere_to_exact_even_count() {
        let m = icosphere::<f64>(2, 1.0);
        let out = decimate(&m, 100).unwrap();
        assert_eq!(out.achieved, 100);
        assert_eq!(out.mesh.triangle_count(), 100);
        let report = validate(&out.mesh);
        assert!(report.is_valid() && report.is_watertight);
    }

    #[test]
    fn odd_target_on_closed_mesh_overshoots_by_one() {
        let m = icosphere::<f64>(2, 1.0);
        let out = decimate(&m, 101).unwrap();
        assert_eq!(out.achieved, 102);
        assert!(out.overshoot());
    }

    #[test]
    fn open_mesh_hits_odd_target() {
        // a closed sphere with one face removed has a boundary loop
        let mut m = icosphere::<f64>(2, 1.0);
        m.faces.pop();
        let out = decimate(&m, 51).unwrap();
        assert_eq!(out.achieved, 51);
        assert!(validate(&out.mesh).is_valid());
    }

    #[test]
    fn tetrahedron_at_minimum_is_unchanged() {
        let m = tetrahedron::<f64>();
        assert_eq!(decimate(&m, 4).unwrap().mesh, m);
    }

    #[test]
    fn merged_quadric_is_sum_of_endpoints() {
        let m = icosphere::<f64>(2, 1.0);
        let mut d = Decimator::new(&m);
        for _ in 0..50 {
            let before: Vec<Quadric<f64>> = (0..m.vertices.len() as u32).map(|v| d.quadric(v)).collect();
            let c = d.step(4).unwrap();
            let expected = before[c.kept as usize] + before[c.removed as usize];
            assert_eq!(d.quadric(c.kept), expected);
            assert!(c.cost >= -1e-9);
        }
    }

    #[test]
    fn solved_placement_beats_endpoints_and_midpoint() {
        let m = icosphere::<f64>(2, 1.0);
        let d = Decimator::new(&m);
        for f in &m.faces {
            let [a, b, _] = f.vertices();
            let q = d.quadric(a) + d.quadric(b);
            let (pa, pb) = (d.position(a), d.position(b));
            if let Some(p) = q.minimizer() {
                let best = q
                    .evaluate(&pa)
                    .min(q.evaluate(&pb))
                    .min(q.evaluate(&crate::geometry::midpoint(&pa, &pb)));
                assert!(q.evaluate(&p) <= best + 1e-9);
            }
        }
    }

    #[test]
    fn collapses_never_flip_surviving_faces() {
        let m = icosphere::<f64>(3, 1.0);
        let mut d = Decimator::new(&m);
        while d.triangle_count() > 40 {
            let before: Vec<Vec3<f64>> = d.faces.iter().map(|f| triangle_cross(&d.triangle(f))).collect();
            d.step(40).unwrap();
            for (fi, face) in d.faces.iter().enumerate() {
                if d.face_alive[fi] {
                    assert!(dot(&before[fi], &triangle_cross(&d.triangle(face))) >= 0.0);
                }
            }
        }
    }
}
