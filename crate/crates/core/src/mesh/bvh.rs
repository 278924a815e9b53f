//! Median-split AABB hierarchy over mesh faces.
//!
//! Used by `project_point` and `segment_intersect` on large meshes. The
//! traversal keeps equal-distance ties ordered by face index so results
//! are identical to the brute-force scan.

use nalgebra::{Point3, Vector3};

use super::triangle::{closest_point_on_triangle, segment_triangle_intersect};
use super::{SegmentHit, TriangleMesh};

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point3<f64>,
    max: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point3<f64>) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    fn merge(&mut self, other: &Aabb) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(other.min[k]);
            self.max[k] = self.max[k].max(other.max[k]);
        }
    }

    fn dist_squared(&self, p: &Point3<f64>) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let d = (self.min[k] - p[k]).max(0.0).max(p[k] - self.max[k]);
            d2 += d * d;
        }
        d2
    }

    /// Entry parameter of the segment `start + t*dir`, `t` in `[0, 1]`,
    /// or `None` when the slab test rejects.
    fn segment_entry(&self, start: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for k in 0..3 {
            if dir[k] == 0.0 {
                if start[k] < self.min[k] || start[k] > self.max[k] {
                    return None;
                }
            } else {
                let inv = 1.0 / dir[k];
                let mut a = (self.min[k] - start[k]) * inv;
                let mut b = (self.max[k] - start[k]) * inv;
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                t0 = t0.max(a);
                t1 = t1.min(b);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some(t0)
    }
}

#[derive(Debug)]
enum Node {
    Leaf {
        bounds: Aabb,
        faces: Vec<usize>,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug)]
pub(super) struct Bvh {
    nodes: Vec<Node>,
    root: usize,
}

const LEAF_SIZE: usize = 8;

impl Bvh {
    pub(super) fn build(mesh: &TriangleMesh) -> Self {
        let centroids: Vec<Point3<f64>> = (0..mesh.faces().len())
            .map(|f| {
                let (a, b, c) = mesh.face_vertices(f);
                Point3::from((a.coords + b.coords + c.coords) / 3.0)
            })
            .collect();
        let mut indices: Vec<usize> = (0..mesh.faces().len()).collect();
        let mut nodes = Vec::new();
        let root = build_node(mesh, &centroids, &mut indices[..], &mut nodes);
        Bvh { nodes, root }
    }

    /// Closest face to `query`; minimum of `(distance^2, face_index)` in
    /// lexicographic order, exactly as the brute-force scan computes it.
    pub(super) fn closest_face(
        &self,
        mesh: &TriangleMesh,
        query: &Point3<f64>,
    ) -> (usize, Point3<f64>) {
        let mut best = (f64::INFINITY, usize::MAX, *query);
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds().dist_squared(query) > best.0 {
                continue;
            }
            match node {
                Node::Leaf { faces, .. } => {
                    for &f in faces {
                        let (a, b, c) = mesh.face_vertices(f);
                        let (p, _) = closest_point_on_triangle(query, &a, &b, &c);
                        let d2 = (query - p).norm_squared();
                        if d2 < best.0 || (d2 == best.0 && f < best.1) {
                            best = (d2, f, p);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    // Visit the nearer child first.
                    let dl = self.nodes[*left].bounds().dist_squared(query);
                    let dr = self.nodes[*right].bounds().dist_squared(query);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        (best.1, best.2)
    }

    /// First segment hit; minimum of `(t, face_index)` lexicographically.
    pub(super) fn segment_hit(
        &self,
        mesh: &TriangleMesh,
        start: &Point3<f64>,
        dir: &Vector3<f64>,
    ) -> Option<SegmentHit> {
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let entry = match node.bounds().segment_entry(start, dir) {
                Some(t) => t,
                None => continue,
            };
            if let Some((bt, _)) = best {
                if entry > bt {
                    continue;
                }
            }
            match node {
                Node::Leaf { faces, .. } => {
                    for &f in faces {
                        let (a, b, c) = mesh.face_vertices(f);
                        if let Some(hit) = segment_triangle_intersect(start, dir, &a, &b, &c) {
                            let better = match best {
                                None => true,
                                Some((bt, bf)) => hit.t < bt || (hit.t == bt && f < bf),
                            };
                            if better {
                                best = Some((hit.t, f));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        best.map(|(t, face_index)| SegmentHit {
            point: start + dir * t,
            face_index,
            t,
        })
    }
}

fn build_node(
    mesh: &TriangleMesh,
    centroids: &[Point3<f64>],
    indices: &mut [usize],
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    for &f in indices.iter() {
        let (a, b, c) = mesh.face_vertices(f);
        bounds.grow(&a);
        bounds.grow(&b);
        bounds.grow(&c);
    }

    if indices.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds,
            faces: indices.to_vec(),
        });
        return nodes.len() - 1;
    }

    // Split on the widest centroid axis at the median.
    let mut cmin = Aabb::empty();
    for &f in indices.iter() {
        cmin.grow(&centroids[f]);
    }
    let extent = cmin.max - cmin.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = indices.len() / 2;
    indices.select_nth_unstable_by(mid, |&i, &j| {
        centroids[i][axis]
            .total_cmp(&centroids[j][axis])
            .then(i.cmp(&j))
    });
    let (left_idx, right_idx) = indices.split_at_mut(mid);
    let left = build_node(mesh, centroids, left_idx, nodes);
    let right = build_node(mesh, centroids, right_idx, nodes);

    let mut merged = Aabb::empty();
    merged.merge(nodes[left].bounds());
    merged.merge(nodes[right].bounds());
    nodes.push(Node::Inner {
        bounds: merged,
        left,
        right,
    });
    nodes.len() - 1
}
