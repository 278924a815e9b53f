//! Procedural test and template shapes: icosphere, box, rounded box.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Icosphere of the given radius centered at the origin.
///
/// Vertex count is `10 * 4^subdivisions + 2`, face count `20 * 4^subdivisions`.
pub fn make_icosphere(radius: f64, subdivisions: u32) -> Result<TriangleMesh> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "icosphere radius must be positive, got {radius}"
        )));
    }
    if subdivisions > 6 {
        return Err(Error::InvalidParameter(format!(
            "icosphere subdivisions must be in [0, 6], got {subdivisions}"
        )));
    }

    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ];
    for v in &mut vertices {
        *v = v.normalize();
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint_cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices, &mut midpoint_cache);
            let bc = midpoint(b, c, &mut vertices, &mut midpoint_cache);
            let ca = midpoint(c, a, &mut vertices, &mut midpoint_cache);
            next_faces.push([a, ab, ca]);
            next_faces.push([b, bc, ab]);
            next_faces.push([c, ca, bc]);
            next_faces.push([ab, bc, ca]);
        }
        faces = next_faces;
    }

    let scaled = vertices
        .into_iter()
        .map(|v| Point3::from(v * radius))
        .collect();
    TriangleMesh::new(scaled, faces)
}

fn midpoint(
    a: usize,
    b: usize,
    vertices: &mut Vec<Vector3<f64>>,
    cache: &mut HashMap<(usize, usize), usize>,
) -> usize {
    let key = if a < b { (a, b) } else { (b, a) };
    if let Some(&idx) = cache.get(&key) {
        return idx;
    }
    let mid = ((vertices[a] + vertices[b]) * 0.5).normalize();
    vertices.push(mid);
    let idx = vertices.len() - 1;
    cache.insert(key, idx);
    idx
}

/// Axis-aligned box spanning `[-h, h]` per axis; 8 vertices, 12 triangles.
pub fn make_box(half_extents: Vector3<f64>) -> Result<TriangleMesh> {
    if !half_extents.iter().all(|&h| h > 0.0) {
        return Err(Error::InvalidParameter(
            "box half extents must be positive".into(),
        ));
    }
    let h = half_extents;
    let vertices = vec![
        Point3::new(-h.x, -h.y, -h.z),
        Point3::new(h.x, -h.y, -h.z),
        Point3::new(h.x, h.y, -h.z),
        Point3::new(-h.x, h.y, -h.z),
        Point3::new(-h.x, -h.y, h.z),
        Point3::new(h.x, -h.y, h.z),
        Point3::new(h.x, h.y, h.z),
        Point3::new(-h.x, h.y, h.z),
    ];
    // Outward winding.
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2], // bottom (-z)
        [4, 5, 6],
        [4, 6, 7], // top (+z)
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 3, 7],
        [2, 7, 6], // +y
        [1, 2, 6],
        [1, 6, 5], // +x
        [3, 0, 4],
        [3, 4, 7], // -x
    ];
    TriangleMesh::new(vertices, faces)
}

/// Box with rounded edges and corners: the set of points at distance
/// `corner_radius` from a core box of half extents `half_extents - r`.
///
/// Built by projecting an icosphere onto the exact signed distance field,
/// so the result keeps sphere topology and stays watertight.
pub fn make_rounded_box(
    half_extents: Vector3<f64>,
    corner_radius: f64,
    subdivisions: u32,
) -> Result<TriangleMesh> {
    if !(corner_radius > 0.0) {
        return Err(Error::InvalidParameter(
            "corner radius must be positive".into(),
        ));
    }
    if !half_extents.iter().all(|&h| h > corner_radius) {
        return Err(Error::InvalidParameter(
            "half extents must exceed the corner radius".into(),
        ));
    }
    let core = half_extents - Vector3::repeat(corner_radius);
    let start_radius = 2.0 * half_extents.norm();
    let sphere = make_icosphere(start_radius, subdivisions)?;

    let projected: Vec<Point3<f64>> = sphere
        .vertices()
        .iter()
        .map(|p| {
            // Exact distance from an outside point to the core box.
            let q = Vector3::new(
                p.x.abs() - core.x,
                p.y.abs() - core.y,
                p.z.abs() - core.z,
            );
            let outside = q.map(|c| c.max(0.0));
            let len = outside.norm();
            debug_assert!(len > 0.0, "start sphere must enclose the core box");
            let dist = len - corner_radius;
            let grad = Vector3::new(
                p.x.signum() * outside.x / len,
                p.y.signum() * outside.y / len,
                p.z.signum() * outside.z / len,
            );
            p - grad * dist
        })
        .collect();

    sphere.with_vertex_positions(projected)
}
