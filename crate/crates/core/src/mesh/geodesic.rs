//! Shortest-path distances over the mesh edge graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (dist, vertex) via reversed comparison.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Multi-source Dijkstra over mesh edges with Euclidean edge weights.
///
/// Returns one distance per vertex; sources are at distance zero. With a
/// single source this is plain Dijkstra; with several it equals the
/// elementwise minimum of the single-source runs.
pub fn geodesic_distances(mesh: &TriangleMesh, sources: &[usize]) -> Result<Vec<f64>> {
    if sources.is_empty() {
        return Err(Error::InvalidParameter(
            "geodesic_distances needs at least one source vertex".into(),
        ));
    }
    let n = mesh.vertices().len();
    for &s in sources {
        if s >= n {
            return Err(Error::InvalidParameter(format!(
                "source vertex {s} out of range (mesh has {n} vertices)"
            )));
        }
    }

    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s] > 0.0 {
            dist[s] = 0.0;
            heap.push(HeapEntry { dist: 0.0, vertex: s });
        }
    }
    while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &u in mesh.neighbors(v) {
            let nd = d + (mesh.vertices()[v] - mesh.vertices()[u]).norm();
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(HeapEntry { dist: nd, vertex: u });
            }
        }
    }
    Ok(dist)
}
