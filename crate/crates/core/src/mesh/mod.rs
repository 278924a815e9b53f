//! Triangle-mesh representation and geometric queries.
//!
//! The mesh stores vertices, triangular faces, derived per-vertex normals
//! and the edge-adjacency graph. All queries (`project_point`,
//! `segment_intersect`, `geodesic_distances`, sampling, chamfer) are
//! read-only; vertex displacement produces a new mesh via
//! [`TriangleMesh::with_vertex_positions`].

mod bvh;
mod geodesic;
mod sampling;
mod shapes;
mod triangle;

pub use geodesic::geodesic_distances;
pub use sampling::{chamfer_distance, sample_surface, SurfaceSampler};
pub use shapes::{make_box, make_icosphere, make_rounded_box};

use std::collections::BTreeSet;
use std::sync::OnceLock;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use bvh::Bvh;
use triangle::{closest_point_on_triangle, segment_triangle_intersect};

/// Meshes above this face count get a BVH for projection/intersection.
const ACCEL_MIN_FACES: usize = 1000;

/// An indexed triangle surface with derived adjacency and vertex normals.
///
/// Invariants enforced at construction: all face indices are in range and
/// pairwise distinct per face, and the edge graph is connected (geodesic
/// queries rely on it).
#[derive(Debug)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    vertex_normals: Vec<Vector3<f64>>,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    accel: OnceLock<Box<Bvh>>,
}

impl Clone for TriangleMesh {
    fn clone(&self) -> Self {
        TriangleMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.clone(),
            vertex_normals: self.vertex_normals.clone(),
            adjacency: self.adjacency.clone(),
            edges: self.edges.clone(),
            accel: OnceLock::new(),
        }
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!(
                "mesh needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if faces.is_empty() {
            return Err(Error::Geometry("mesh has no faces".into()));
        }
        for v in &vertices {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::Geometry("non-finite vertex coordinate".into()));
            }
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&k| k >= vertices.len()) {
                return Err(Error::Geometry(format!(
                    "face {i} references vertex out of range"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Geometry(format!("face {i} repeats a vertex index")));
            }
        }

        let (adjacency, edges) = build_adjacency(vertices.len(), &faces);
        check_connected(&adjacency)?;

        let mut mesh = TriangleMesh {
            vertex_normals: vec![Vector3::zeros(); vertices.len()],
            vertices,
            faces,
            adjacency,
            edges,
            accel: OnceLock::new(),
        };
        mesh.recompute_normals();
        Ok(mesh)
    }

    /// Same topology, new vertex positions; normals are recomputed.
    pub fn with_vertex_positions(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Geometry(format!(
                "vertex count changed: {} -> {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        for v in &vertices {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::Geometry("non-finite vertex coordinate".into()));
            }
        }
        let mut mesh = TriangleMesh {
            vertex_normals: vec![Vector3::zeros(); vertices.len()],
            vertices,
            faces: self.faces.clone(),
            adjacency: self.adjacency.clone(),
            edges: self.edges.clone(),
            accel: OnceLock::new(),
        };
        mesh.recompute_normals();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_normals(&self) -> &[Vector3<f64>] {
        &self.vertex_normals
    }

    /// Sorted indices of the vertices sharing an edge with `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Unique undirected edges, each as `(low, high)` vertex indices.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn face_vertices(&self, f: usize) -> (Point3<f64>, Point3<f64>, Point3<f64>) {
        let [a, b, c] = self.faces[f];
        (self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Unit normal of face `f`; degenerate faces fall back to +z.
    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let (a, b, c) = self.face_vertices(f);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 1e-20 {
            n / len
        } else {
            Vector3::z()
        }
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let (a, b, c) = self.face_vertices(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let total: f64 = self
            .edges
            .iter()
            .map(|&(i, j)| (self.vertices[i] - self.vertices[j]).norm())
            .sum();
        total / self.edges.len() as f64
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum = self
            .vertices
            .iter()
            .fold(Vector3::zeros(), |acc, v| acc + v.coords);
        Point3::from(sum / self.vertices.len() as f64)
    }

    /// Angle-weighted average of incident face normals, normalized.
    fn recompute_normals(&mut self) {
        for n in &mut self.vertex_normals {
            *n = Vector3::zeros();
        }
        for f in 0..self.faces.len() {
            let [ia, ib, ic] = self.faces[f];
            let (a, b, c) = self.face_vertices(f);
            let fnorm = (b - a).cross(&(c - a));
            if fnorm.norm() <= 1e-20 {
                continue;
            }
            let fnorm = fnorm.normalize();
            self.vertex_normals[ia] += fnorm * corner_angle(&a, &b, &c);
            self.vertex_normals[ib] += fnorm * corner_angle(&b, &c, &a);
            self.vertex_normals[ic] += fnorm * corner_angle(&c, &a, &b);
        }
        for (i, n) in self.vertex_normals.iter_mut().enumerate() {
            let len = n.norm();
            if len > 1e-20 {
                *n /= len;
            } else {
                // All incident faces degenerate; any unit vector keeps the
                // invariant without poisoning downstream math.
                let _ = i;
                *n = Vector3::z();
            }
        }
    }

    fn accel(&self) -> Option<&Bvh> {
        if self.faces.len() <= ACCEL_MIN_FACES {
            return None;
        }
        Some(self.accel.get_or_init(|| Box::new(Bvh::build(self))))
    }
}

fn corner_angle(at: &Point3<f64>, p: &Point3<f64>, q: &Point3<f64>) -> f64 {
    let u = p - at;
    let v = q - at;
    let nu = u.norm();
    let nv = v.norm();
    if nu <= 1e-20 || nv <= 1e-20 {
        return 0.0;
    }
    (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0).acos()
}

fn build_adjacency(
    n_vertices: usize,
    faces: &[[usize; 3]],
) -> (Vec<Vec<usize>>, Vec<(usize, usize)>) {
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_vertices];
    for f in faces {
        for k in 0..3 {
            let (i, j) = (f[k], f[(k + 1) % 3]);
            sets[i].insert(j);
            sets[j].insert(i);
        }
    }
    let adjacency: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    let mut edges = Vec::new();
    for (i, nbrs) in adjacency.iter().enumerate() {
        for &j in nbrs {
            if i < j {
                edges.push((i, j));
            }
        }
    }
    (adjacency, edges)
}

fn check_connected(adjacency: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &n in &adjacency[v] {
            if !seen[n] {
                seen[n] = true;
                count += 1;
                stack.push(n);
            }
        }
    }
    if count != adjacency.len() {
        return Err(Error::Geometry(format!(
            "edge graph is disconnected: reached {count} of {} vertices",
            adjacency.len()
        )));
    }
    Ok(())
}

/// Result of projecting a query point onto the mesh surface.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceProjection {
    /// Closest point on the surface.
    pub point: Point3<f64>,
    /// Face containing `point`.
    pub face_index: usize,
    /// Unit normal of that face.
    pub normal: Vector3<f64>,
    /// Euclidean distance from the query to `point`.
    pub distance: f64,
}

/// Closest point on the mesh to `query`. Ties between equidistant faces
/// go to the lowest face index, so the accelerated path agrees with an
/// exhaustive per-face search bit for bit.
pub fn project_point(mesh: &TriangleMesh, query: &Point3<f64>) -> SurfaceProjection {
    let (face_index, point) = match mesh.accel() {
        Some(bvh) => bvh.closest_face(mesh, query),
        None => closest_face_brute(mesh, query),
    };
    SurfaceProjection {
        point,
        face_index,
        normal: mesh.face_normal(face_index),
        distance: (query - point).norm(),
    }
}

pub(crate) fn closest_face_brute(
    mesh: &TriangleMesh,
    query: &Point3<f64>,
) -> (usize, Point3<f64>) {
    let mut best = (f64::INFINITY, 0usize, *query);
    for f in 0..mesh.faces.len() {
        let (a, b, c) = mesh.face_vertices(f);
        let (p, _) = closest_point_on_triangle(query, &a, &b, &c);
        let d2 = (query - p).norm_squared();
        if d2 < best.0 {
            best = (d2, f, p);
        }
    }
    (best.1, best.2)
}

/// First intersection of the segment `start..end` with the mesh, ordered
/// from `start`. Ties at identical parameters go to the lowest face index.
#[derive(Debug, Clone, Copy)]
pub struct SegmentHit {
    pub point: Point3<f64>,
    pub face_index: usize,
    /// Segment parameter of the hit, in `[0, 1]`.
    pub t: f64,
}

pub fn segment_intersect(
    mesh: &TriangleMesh,
    start: &Point3<f64>,
    end: &Point3<f64>,
) -> Option<SegmentHit> {
    let dir = end - start;
    assert!(dir.norm_squared() > 0.0, "segment endpoints coincide");
    match mesh.accel() {
        Some(bvh) => bvh.segment_hit(mesh, start, &dir),
        None => segment_hit_brute(mesh, start, &dir),
    }
}

pub(crate) fn segment_hit_brute(
    mesh: &TriangleMesh,
    start: &Point3<f64>,
    dir: &Vector3<f64>,
) -> Option<SegmentHit> {
    let mut best: Option<SegmentHit> = None;
    for f in 0..mesh.faces.len() {
        let (a, b, c) = mesh.face_vertices(f);
        if let Some(hit) = segment_triangle_intersect(start, dir, &a, &b, &c) {
            debug_assert!(
                hit.bary.iter().all(|w| (-1e-9..=1.0 + 1e-9).contains(w)),
                "hit outside its face"
            );
            let better = match &best {
                None => true,
                Some(cur) => hit.t < cur.t,
            };
            if better {
                best = Some(SegmentHit {
                    point: start + dir * hit.t,
                    face_index: f,
                    t: hit.t,
                });
            }
        }
    }
    best
}
