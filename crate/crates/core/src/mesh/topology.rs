use super::TriMesh;
use crate::error::{Error, Result};

/// Undirected edge adjacency of a triangle mesh.
///
/// Edges are stored as `(min, max)` vertex pairs in lexicographic order, so
/// edge indices are deterministic for a given face list.
#[derive(Debug, Clone)]
pub struct EdgeTopology {
    edges: Vec<(usize, usize)>,
    edge_faces: Vec<[Option<usize>; 2]>,
    face_edges: Vec<[usize; 3]>,
    vertex_neighbors: Vec<Vec<usize>>,
}

impl EdgeTopology {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        let faces = mesh.faces();
        // (min, max, face, local edge slot)
        let mut half: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(faces.len() * 3);
        for (f, face) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = super::sorted_pair(face[k], face[(k + 1) % 3]);
                half.push((a, b, f, k));
            }
        }
        half.sort_unstable();

        let mut edges = Vec::with_capacity(half.len() / 2 + 1);
        let mut edge_faces = Vec::with_capacity(half.len() / 2 + 1);
        let mut face_edges = vec![[usize::MAX; 3]; faces.len()];
        let mut i = 0;
        while i < half.len() {
            let (a, b, _, _) = half[i];
            let mut j = i;
            while j < half.len() && half[j].0 == a && half[j].1 == b {
                j += 1;
            }
            if j - i > 2 {
                return Err(Error::NonManifoldEdge(a, b));
            }
            let e = edges.len();
            edges.push((a, b));
            let mut adj = [None, None];
            for (slot, &(_, _, f, k)) in half[i..j].iter().enumerate() {
                adj[slot] = Some(f);
                face_edges[f][k] = e;
            }
            edge_faces.push(adj);
            i = j;
        }

        let mut vertex_neighbors = vec![Vec::new(); mesh.vertex_count()];
        for &(a, b) in &edges {
            vertex_neighbors[a].push(b);
            vertex_neighbors[b].push(a);
        }
        for n in &mut vertex_neighbors {
            n.sort_unstable();
        }

        Ok(EdgeTopology {
            edges,
            edge_faces,
            face_edges,
            vertex_neighbors,
        })
    }

    pub(crate) fn check_orientation(&self, mesh: &TriMesh) -> Result<()> {
        for (e, adj) in self.edge_faces.iter().enumerate() {
            if let [Some(f0), Some(f1)] = *adj {
                let (a, b) = self.edges[e];
                if traverses(mesh.faces()[f0], a, b) == traverses(mesh.faces()[f1], a, b) {
                    return Err(Error::InconsistentOrientation(a, b));
                }
            }
        }
        Ok(())
    }

    /// Sorted `(min, max)` vertex pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// The one or two faces bordering edge `e`.
    pub fn edge_faces(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_faces[e]
    }

    /// Edge index of face `f`'s side `k`, i.e. the side from corner `k` to
    /// corner `k + 1`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e][1].is_none()
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = super::sorted_pair(a, b);
        self.edges.binary_search(&key).ok()
    }

    /// Faces sharing an edge with `f`, in side order.
    pub fn face_neighbors(&self, f: usize) -> impl Iterator<Item = usize> + '_ {
        self.face_edges[f].iter().filter_map(move |&e| {
            let [f0, f1] = self.edge_faces[e];
            match (f0, f1) {
                (Some(a), Some(b)) => Some(if a == f { b } else { a }),
                _ => None,
            }
        })
    }

    /// Sorted one-ring neighbors of each vertex.
    pub fn vertex_neighbors(&self) -> &[Vec<usize>] {
        &self.vertex_neighbors
    }

    /// Vertices touching at least one boundary edge.
    pub fn boundary_vertices(&self, vertex_count: usize) -> Vec<bool> {
        let mut flags = vec![false; vertex_count];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if self.is_boundary_edge(e) {
                flags[a] = true;
                flags[b] = true;
            }
        }
        flags
    }

    /// For a boundary vertex, its (at most two) neighbors along boundary edges.
    pub fn boundary_neighbors(&self, v: usize) -> Vec<usize> {
        self.vertex_neighbors[v]
            .iter()
            .copied()
            .filter(|&u| {
                self.edge_index(v, u)
                    .is_some_and(|e| self.is_boundary_edge(e))
            })
            .collect()
    }
}

/// True if `face` contains the directed side `a -> b`.
fn traverses(face: [usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| face[k] == a && face[(k + 1) % 3] == b)
}

/// The corner of `face` that is neither `a` nor `b`.
pub(crate) fn opposite_corner(face: [usize; 3], a: usize, b: usize) -> usize {
    face.into_iter()
        .find(|&v| v != a && v != b)
        .expect("face has a third corner")
}
