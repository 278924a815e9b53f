//! Per-vertex uncertainty on the estimated mesh.
//!
//! Untouched vertices hold exactly 1.0. Each attractor lowers values in a
//! breadth-limited neighborhood of its closest vertex using the
//! heavy-tailed proximity weight `1 / (1 + t^2)`, with `t` the Euclidean
//! vertex-attractor distance in mean-edge-length units. Where several
//! attractors reach the same vertex the minimum is kept.

use std::collections::VecDeque;

use crate::mesh::TriangleMesh;
use crate::sensing::Attractor;

/// How an attractor's uncertainty maps to a vertex candidate value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    /// `u * w`: the written formula. Farther vertices receive *lower*
    /// values, i.e. look more certain than the touched vertex.
    Literal,
    /// `1 - (1 - u) * w`: certainty decays with distance instead.
    Complement,
}

impl PropagationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PropagationMode::Literal => "literal",
            PropagationMode::Complement => "complement",
        }
    }
}

pub const DEFAULT_TRAVERSE_THRESHOLD: usize = 5;

/// Per-vertex uncertainty values in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UncertaintyField {
    pub values: Vec<f64>,
    /// Maximum breadth-first depth, in edges, an attractor reaches.
    pub traverse_threshold: usize,
    pub propagation_mode: PropagationMode,
}

/// All-ones field sized to the mesh, with default propagation settings.
pub fn init_field(mesh: &TriangleMesh) -> UncertaintyField {
    init_field_with(mesh, DEFAULT_TRAVERSE_THRESHOLD, PropagationMode::Literal)
}

pub fn init_field_with(
    mesh: &TriangleMesh,
    traverse_threshold: usize,
    propagation_mode: PropagationMode,
) -> UncertaintyField {
    UncertaintyField {
        values: vec![1.0; mesh.vertices().len()],
        traverse_threshold,
        propagation_mode,
    }
}

/// Recomputes the field from scratch for the given attractor set.
///
/// For each attractor: find its closest mesh vertex, walk out to
/// `traverse_threshold` edges, and lower every reached vertex to the
/// minimum of its current value and the attractor's weighted candidate.
pub fn propagate(
    field: &UncertaintyField,
    mesh: &TriangleMesh,
    attractors: &[Attractor],
) -> UncertaintyField {
    let n = mesh.vertices().len();
    debug_assert_eq!(field.values.len(), n, "field sized to a different mesh");
    let mut values = vec![1.0; n];
    if attractors.is_empty() {
        return UncertaintyField {
            values,
            traverse_threshold: field.traverse_threshold,
            propagation_mode: field.propagation_mode,
        };
    }

    let mean_edge = mesh.mean_edge_length();
    let mut hops = vec![usize::MAX; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();

    for a in attractors {
        // Closest vertex, lowest index on ties.
        let mut start = 0;
        let mut best = f64::INFINITY;
        for (i, v) in mesh.vertices().iter().enumerate() {
            let d2 = (v - a.position).norm_squared();
            if d2 < best {
                best = d2;
                start = i;
            }
        }

        // Breadth-first out to the traverse threshold.
        for &t in &touched {
            hops[t] = usize::MAX;
        }
        touched.clear();
        queue.clear();
        hops[start] = 0;
        touched.push(start);
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            let depth = hops[v];
            let t = (mesh.vertices()[v] - a.position).norm() / mean_edge;
            let weight = 1.0 / (1.0 + t * t);
            let candidate = match field.propagation_mode {
                PropagationMode::Literal => a.uncertainty * weight,
                PropagationMode::Complement => 1.0 - (1.0 - a.uncertainty) * weight,
            };
            if candidate < values[v] {
                values[v] = candidate;
            }
            if depth < field.traverse_threshold {
                for &u in mesh.neighbors(v) {
                    if hops[u] == usize::MAX {
                        hops[u] = depth + 1;
                        touched.push(u);
                        queue.push_back(u);
                    }
                }
            }
        }
    }

    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    UncertaintyField {
        values,
        traverse_threshold: field.traverse_threshold,
        propagation_mode: field.propagation_mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{geodesic_distances, make_icosphere};
    use crate::sensing::AttractorSource;
    use approx::assert_relative_eq;
    use nalgebra::Point3;

    fn attractor_at(p: Point3<f64>, u: f64) -> Attractor {
        Attractor {
            position: p,
            uncertainty: u,
            source: AttractorSource::Tactile,
        }
    }

    #[test]
    fn init_is_all_ones() {
        let mesh = make_icosphere(1.0, 3).unwrap();
        let field = init_field(&mesh);
        assert_eq!(field.values.len(), 642);
        assert_eq!(field.values.iter().sum::<f64>(), 642.0);
        assert_eq!(field.values.iter().cloned().fold(f64::INFINITY, f64::min), 1.0);
    }

    #[test]
    fn zero_uncertainty_source_and_cutoff() {
        let mesh = make_icosphere(1.0, 3).unwrap();
        let field = init_field(&mesh);
        let target = 100;
        let a = attractor_at(mesh.vertices()[target], 0.0);
        let out = propagate(&field, &mesh, &[a]);
        assert_eq!(out.values[target], 0.0);

        // Hop distances via unit-weight BFS: anything beyond 5 edges is 1.0.
        let hops = hop_distances(&mesh, target);
        for (v, &h) in hops.iter().enumerate() {
            if h > 5 {
                assert_eq!(out.values[v], 1.0, "vertex {v} at {h} hops");
            } else {
                assert!(out.values[v] < 1.0, "vertex {v} at {h} hops");
            }
        }
    }

    fn hop_distances(mesh: &TriangleMesh, start: usize) -> Vec<usize> {
        let mut hops = vec![usize::MAX; mesh.vertices().len()];
        hops[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in mesh.neighbors(v) {
                if hops[u] == usize::MAX {
                    hops[u] = hops[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        hops
    }

    #[test]
    fn weight_formula_at_unit_distance() {
        // Candidate u * 1/(1+t^2): t = 0 keeps u, t = 1 halves it.
        let mesh = make_icosphere(1.0, 2).unwrap();
        let field = init_field(&mesh);
        let target = 0;
        let a = attractor_at(mesh.vertices()[target], 0.4);
        let out = propagate(&field, &mesh, &[a]);
        assert_relative_eq!(out.values[target], 0.4, epsilon = 1e-12);

        let mean_edge = mesh.mean_edge_length();
        for &n in mesh.neighbors(target) {
            let t = (mesh.vertices()[n] - mesh.vertices()[target]).norm() / mean_edge;
            let expected = 0.4 / (1.0 + t * t);
            assert_relative_eq!(out.values[n], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn minimum_is_kept_across_attractors() {
        let mesh = make_icosphere(1.0, 2).unwrap();
        let field = init_field(&mesh);
        let v = mesh.vertices()[10];
        let out = propagate(&field, &mesh, &[attractor_at(v, 0.3), attractor_at(v, 0.1)]);
        assert_relative_eq!(out.values[10], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn complement_mode_decays_certainty() {
        let mesh = make_icosphere(1.0, 2).unwrap();
        let field = init_field_with(&mesh, 5, PropagationMode::Complement);
        let target = 0;
        let out = propagate(&field, &mesh, &[attractor_at(mesh.vertices()[target], 0.1)]);
        assert_relative_eq!(out.values[target], 0.1, epsilon = 1e-12);
        // Farther vertices are *more* uncertain in complement mode.
        for &n in mesh.neighbors(target) {
            assert!(out.values[n] > out.values[target]);
            assert!(out.values[n] < 1.0);
        }
        // Geodesically distant vertices stay at 1.
        let d = geodesic_distances(&mesh, &[target]).unwrap();
        let far = d
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(out.values[far], 1.0);
    }

    #[test]
    fn idempotent_and_monotone() {
        let mesh = make_icosphere(1.0, 2).unwrap();
        let field = init_field(&mesh);
        let set = vec![
            attractor_at(Point3::new(1.1, 0.0, 0.0), 0.2),
            attractor_at(Point3::new(0.0, -0.9, 0.1), 0.35),
        ];
        let once = propagate(&field, &mesh, &set);
        let twice = propagate(&once, &mesh, &set);
        assert_eq!(once.values, twice.values);

        let mut extended = set.clone();
        extended.push(attractor_at(Point3::new(0.0, 0.0, 1.0), 0.15));
        let more = propagate(&field, &mesh, &extended);
        for (a, b) in once.values.iter().zip(&more.values) {
            assert!(b <= a);
        }
    }
}
