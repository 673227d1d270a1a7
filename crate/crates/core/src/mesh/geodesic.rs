use super::{sorted_pair, ScalarField, TriMesh};
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed for a min-heap; ties pop the smaller vertex first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weighted edge graph of a mesh, Euclidean edge lengths.
pub(crate) struct EdgeGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    lengths: Vec<f64>,
}

impl EdgeGraph {
    pub(crate) fn new(mesh: &TriMesh) -> Self {
        let mut pairs: Vec<(usize, usize)> = mesh
            .faces()
            .iter()
            .flat_map(|f| (0..3).map(move |k| sorted_pair(f[k], f[(k + 1) % 3])))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();

        let n = mesh.vertex_count();
        let mut degree = vec![0usize; n + 1];
        for &(a, b) in &pairs {
            degree[a + 1] += 1;
            degree[b + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut targets = vec![0; pairs.len() * 2];
        let mut lengths = vec![0.0; pairs.len() * 2];
        let p = mesh.positions();
        for &(a, b) in &pairs {
            let len = (p[a] - p[b]).norm();
            targets[fill[a]] = b;
            lengths[fill[a]] = len;
            fill[a] += 1;
            targets[fill[b]] = a;
            lengths[fill[b]] = len;
            fill[b] += 1;
        }
        EdgeGraph {
            offsets,
            targets,
            lengths,
        }
    }

    fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.lengths[range].iter().copied())
    }

    /// Shortest distances from `sources`; vertices beyond `limit` stay at +inf.
    pub(crate) fn distances(&self, sources: &[usize], limit: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertex_count()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if dist[s] > 0.0 {
                dist[s] = 0.0;
                heap.push(Entry {
                    dist: 0.0,
                    vertex: s,
                });
            }
        }
        while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for (u, len) in self.neighbors(v) {
                let nd = d + len;
                if nd < dist[u] && nd <= limit {
                    dist[u] = nd;
                    heap.push(Entry { dist: nd, vertex: u });
                }
            }
        }
        dist
    }

    /// Distance from `source` to `target`, stopping as soon as it is settled.
    pub(crate) fn distance_between(&self, source: usize, target: usize) -> f64 {
        if source == target {
            return 0.0;
        }
        let mut dist = vec![f64::INFINITY; self.vertex_count()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry {
            dist: 0.0,
            vertex: source,
        });
        while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
            if v == target {
                return d;
            }
            if d > dist[v] {
                continue;
            }
            for (u, len) in self.neighbors(v) {
                let nd = d + len;
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(Entry { dist: nd, vertex: u });
                }
            }
        }
        f64::INFINITY
    }
}

/// Graph shortest-path distance along mesh edges, weighted by Euclidean
/// edge length. Unreachable vertices get `+inf`.
pub fn dijkstra_geodesic(mesh: &TriMesh, sources: &[usize]) -> Result<ScalarField> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("empty geodesic source set".into()));
    }
    check_sources(mesh, sources)?;
    Ok(ScalarField::new(
        EdgeGraph::new(mesh).distances(sources, f64::INFINITY),
    ))
}

/// Like [`dijkstra_geodesic`] but only explores up to `radius`.
pub(crate) fn dijkstra_within(mesh: &TriMesh, sources: &[usize], radius: f64) -> Result<Vec<f64>> {
    check_sources(mesh, sources)?;
    Ok(EdgeGraph::new(mesh).distances(sources, radius))
}

fn check_sources(mesh: &TriMesh, sources: &[usize]) -> Result<()> {
    if let Some(&bad) = sources.iter().find(|&&s| s >= mesh.vertex_count()) {
        return Err(Error::IndexOutOfRange {
            what: "vertices",
            index: bad,
            len: mesh.vertex_count(),
        });
    }
    Ok(())
}

/// Number of edge-connected vertex components.
pub fn connected_components(mesh: &TriMesh) -> usize {
    let n = mesh.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for face in mesh.faces() {
        for k in 0..3 {
            let a = find(&mut parent, face[k]);
            let b = find(&mut parent, face[(k + 1) % 3]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..n).filter(|&v| find(&mut parent, v) == v).count()
}
