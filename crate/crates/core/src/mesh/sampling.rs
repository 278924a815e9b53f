//! Area-weighted surface sampling and chamfer distance.

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Draws uniform area-weighted points from a mesh surface.
///
/// Construction precomputes the cumulative face-area table; each draw
/// costs one binary search plus two uniforms.
pub struct SurfaceSampler<'a> {
    mesh: &'a TriangleMesh,
    cumulative: Vec<f64>,
    total: f64,
}

impl<'a> SurfaceSampler<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(mesh.faces().len());
        let mut total = 0.0;
        for f in 0..mesh.faces().len() {
            total += mesh.face_area(f);
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(Error::Geometry(
                "cannot sample a mesh with zero total surface area".into(),
            ));
        }
        Ok(SurfaceSampler {
            mesh,
            cumulative,
            total,
        })
    }

    /// One uniform surface point and the face it lies on.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Point3<f64>, usize) {
        let target = rng.gen::<f64>() * self.total;
        let face = match self
            .cumulative
            .binary_search_by(|probe| probe.total_cmp(&target))
        {
            Ok(i) => i,
            Err(i) => i.min(self.cumulative.len() - 1),
        };
        let (a, b, c) = self.mesh.face_vertices(face);
        // Uniform barycentric via the square-root trick.
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let s = r1.sqrt();
        let p = a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2);
        (Point3::from(p), face)
    }
}

/// `n` area-weighted uniform samples, deterministic for a fixed seed.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<Point3<f64>>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample_surface needs n > 0".into(),
        ));
    }
    let sampler = SurfaceSampler::new(mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sampler.sample(&mut rng).0).collect())
}

/// Symmetric chamfer distance between two point sets:
/// `0.5 * (mean_a min_b |a-b| + mean_b min_a |b-a|)`.
///
/// Nearest neighbors go through a kd-tree; per-pair arithmetic is the
/// same as the brute-force scan, so results agree to the last bit apart
/// from box-bound rounding (far below 1e-9).
pub fn chamfer_distance(a: &[Point3<f64>], b: &[Point3<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter(
            "chamfer_distance needs nonempty point sets".into(),
        ));
    }
    Ok(0.5 * (mean_nearest(a, b) + mean_nearest(b, a)))
}

fn mean_nearest(from: &[Point3<f64>], to: &[Point3<f64>]) -> f64 {
    const KDTREE_MIN: usize = 64;
    let sum: f64 = if to.len() < KDTREE_MIN {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p - q).norm_squared())
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .sum()
    } else {
        let tree = KdTree::build(to);
        from.iter().map(|p| tree.nearest_dist2(p).sqrt()).sum()
    };
    sum / from.len() as f64
}

/// Static kd-tree over points for exact nearest-neighbor queries.
struct KdTree<'a> {
    points: &'a [Point3<f64>],
    nodes: Vec<KdNode>,
    root: usize,
}

enum KdNode {
    Leaf {
        indices: Vec<usize>,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

const KD_LEAF: usize = 16;

impl<'a> KdTree<'a> {
    fn build(points: &'a [Point3<f64>]) -> Self {
        let mut indices: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        let root = Self::build_node(points, &mut indices[..], &mut nodes);
        KdTree {
            points,
            nodes,
            root,
        }
    }

    fn build_node(points: &[Point3<f64>], indices: &mut [usize], nodes: &mut Vec<KdNode>) -> usize {
        if indices.len() <= KD_LEAF {
            nodes.push(KdNode::Leaf {
                indices: indices.to_vec(),
            });
            return nodes.len() - 1;
        }
        // Widest axis of the point bounds.
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in indices.iter() {
            for k in 0..3 {
                lo[k] = lo[k].min(points[i][k]);
                hi[k] = hi[k].max(points[i][k]);
            }
        }
        let mut axis = 0;
        for k in 1..3 {
            if hi[k] - lo[k] > hi[axis] - lo[axis] {
                axis = k;
            }
        }
        let mid = indices.len() / 2;
        indices.select_nth_unstable_by(mid, |&i, &j| {
            points[i][axis].total_cmp(&points[j][axis]).then(i.cmp(&j))
        });
        let value = points[indices[mid]][axis];
        let (left_slice, right_slice) = indices.split_at_mut(mid);
        let left = Self::build_node(points, left_slice, nodes);
        let right = Self::build_node(points, right_slice, nodes);
        nodes.push(KdNode::Split {
            axis,
            value,
            left,
            right,
        });
        nodes.len() - 1
    }

    fn nearest_dist2(&self, query: &Point3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        self.search(self.root, query, &mut best);
        best
    }

    fn search(&self, node: usize, query: &Point3<f64>, best: &mut f64) {
        match &self.nodes[node] {
            KdNode::Leaf { indices } => {
                for &i in indices {
                    let d2 = (self.points[i] - query).norm_squared();
                    if d2 < *best {
                        *best = d2;
                    }
                }
            }
            KdNode::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[*axis] - value;
                let (near, far) = if delta < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, query, best);
                if delta * delta <= *best {
                    self.search(far, query, best);
                }
            }
        }
    }
}
