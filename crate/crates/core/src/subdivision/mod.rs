//! Global subdivision schemes (barycentric, midpoint upsample, Loop) with
//! records of where each new vertex and face came from.

mod record;

pub use record::{Scheme, SubdivisionRecord, VertexOrigin};

use crate::error::{Error, Result};
use crate::mesh::{opposite_corner, EdgeTopology, TriMesh, Uv, Vec3};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default number of BCS iterations allowed; more quickly produces slivers.
pub const MAX_BCS_ITERATIONS: usize = 2;

/// Connectivity of a 1→4 / 1→2 split driven by a per-edge flag.
pub(crate) struct Refinement {
    pub faces: Vec<[usize; 3]>,
    pub face_parent: Vec<usize>,
    /// Edge index of each odd vertex, in new-index order.
    pub odd_edges: Vec<usize>,
}

/// Splits every flagged edge. Faces with three split edges become four,
/// faces with one become two (diagonal to the opposite corner), faces with
/// none are copied. Two split edges is an error.
pub(crate) fn refine(mesh: &TriMesh, topo: &EdgeTopology, split: &[bool]) -> Result<Refinement> {
    let n = mesh.vertex_count();
    let mut edge_vertex = vec![usize::MAX; topo.edge_count()];
    let mut odd_edges = Vec::new();
    for (e, &s) in split.iter().enumerate() {
        if s {
            edge_vertex[e] = n + odd_edges.len();
            odd_edges.push(e);
        }
    }
    let mut faces = Vec::with_capacity(mesh.face_count() * 4);
    let mut face_parent = Vec::with_capacity(mesh.face_count() * 4);
    for (f, face) in mesh.faces().iter().enumerate() {
        let fe = topo.face_edges(f);
        let mids = fe.map(|e| edge_vertex[e]);
        let count = mids.iter().filter(|&&m| m != usize::MAX).count();
        let [a, b, c] = *face;
        match count {
            3 => {
                let [ab, bc, ca] = mids;
                faces.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
                face_parent.extend_from_slice(&[f; 4]);
            }
            0 => {
                faces.push(*face);
                face_parent.push(f);
            }
            1 => {
                let k = (0..3).find(|&k| mids[k] != usize::MAX).unwrap();
                let (p, q, o) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
                let m = mids[k];
                faces.extend_from_slice(&[[p, m, o], [m, q, o]]);
                face_parent.extend_from_slice(&[f; 2]);
            }
            _ => return Err(Error::UnrepairedSelection { face: f, count }),
        }
    }
    Ok(Refinement {
        faces,
        face_parent,
        odd_edges,
    })
}

impl Refinement {
    pub(crate) fn record(&self, scheme: Scheme, mesh: &TriMesh, topo: &EdgeTopology) -> SubdivisionRecord {
        let n = mesh.vertex_count();
        SubdivisionRecord {
            scheme,
            old_vertex_map: (0..n).collect(),
            new_vertex_origin: self
                .odd_edges
                .iter()
                .enumerate()
                .map(|(i, &e)| {
                    let (a, b) = topo.edges()[e];
                    (n + i, VertexOrigin::Edge(a, b))
                })
                .collect(),
            face_parent: self.face_parent.clone(),
        }
    }

    /// Odd UVs at edge midpoints, even UVs unchanged.
    pub(crate) fn uvs(&self, uv: &[Uv], topo: &EdgeTopology) -> Vec<Uv> {
        let mut out = uv.to_vec();
        out.extend(self.odd_edges.iter().map(|&e| {
            let (a, b) = topo.edges()[e];
            (uv[a] + uv[b]) * 0.5
        }));
        out
    }
}

/// Loop odd-vertex position for edge `e`: 3/8 endpoints + 1/8 opposite
/// corners; the midpoint on boundary edges.
pub(crate) fn loop_odd(mesh: &TriMesh, topo: &EdgeTopology, e: usize) -> Vec3 {
    let p = mesh.positions();
    let (a, b) = topo.edges()[e];
    match topo.edge_faces(e) {
        [Some(f0), Some(f1)] => {
            let opposite = |f: usize| opposite_corner(mesh.faces()[f], a, b);
            (p[a] + p[b]) * 0.375 + (p[opposite(f0)] + p[opposite(f1)]) * 0.125
        }
        _ => (p[a] + p[b]) * 0.5,
    }
}

/// Loop vertex weight for valence `n`.
pub fn loop_beta(n: usize) -> f64 {
    let n = n as f64;
    let c = 0.375 + 0.25 * (2.0 * PI / n).cos();
    (0.625 - c * c) / n
}

/// Loop even-vertex position: interior mask, or the boundary curve mask
/// 3/4 self + 1/8 each boundary neighbour.
pub(crate) fn loop_even(mesh: &TriMesh, topo: &EdgeTopology, boundary: &[bool], v: usize) -> Vec3 {
    let p = mesh.positions();
    if boundary[v] {
        let nb = topo.boundary_neighbors(v);
        if nb.len() != 2 {
            return p[v];
        }
        return p[v] * 0.75 + (p[nb[0]] + p[nb[1]]) * 0.125;
    }
    let ring = &topo.vertex_neighbors()[v];
    let beta = loop_beta(ring.len());
    let sum: Vec3 = ring.iter().map(|&j| p[j]).sum();
    p[v] * (1.0 - ring.len() as f64 * beta) + sum * beta
}

/// Barycentric subdivision: a vertex at each face barycenter, each face
/// split into three.
pub fn bcs_subdivide(mesh: &TriMesh) -> Result<(TriMesh, SubdivisionRecord)> {
    let n = mesh.vertex_count();
    let mut positions = mesh.positions().to_vec();
    let mut faces = Vec::with_capacity(mesh.face_count() * 3);
    let mut face_parent = Vec::with_capacity(mesh.face_count() * 3);
    let mut origin = Vec::with_capacity(mesh.face_count());
    for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let m = n + f;
        let [pa, pb, pc] = mesh.face_corners(f);
        positions.push((pa + pb + pc) / 3.0);
        faces.extend_from_slice(&[[a, b, m], [b, c, m], [c, a, m]]);
        face_parent.extend_from_slice(&[f; 3]);
        origin.push((m, VertexOrigin::Face(f)));
    }
    let mut out = TriMesh::new(positions, faces)?;
    if let Some(uv) = mesh.uv() {
        let mut uvs = uv.to_vec();
        uvs.extend(mesh.faces().iter().map(|f| (uv[f[0]] + uv[f[1]] + uv[f[2]]) / 3.0));
        out = out.with_uv(uvs)?;
    }
    let record = SubdivisionRecord {
        scheme: Scheme::Bcs,
        old_vertex_map: (0..n).collect(),
        new_vertex_origin: origin,
        face_parent,
    };
    Ok((out, record))
}

fn split_all(mesh: &TriMesh, scheme: Scheme) -> Result<(TriMesh, SubdivisionRecord)> {
    let topo = mesh.topology()?;
    let refinement = refine(mesh, &topo, &vec![true; topo.edge_count()])?;
    let p = mesh.positions();
    let mut positions: Vec<Vec3> = match scheme {
        Scheme::Loop => {
            let boundary = topo.boundary_vertices(mesh.vertex_count());
            (0..mesh.vertex_count())
                .into_par_iter()
                .map(|v| loop_even(mesh, &topo, &boundary, v))
                .collect()
        }
        _ => p.to_vec(),
    };
    let odd: Vec<Vec3> = refinement
        .odd_edges
        .par_iter()
        .map(|&e| match scheme {
            Scheme::Loop => loop_odd(mesh, &topo, e),
            _ => {
                let (a, b) = topo.edges()[e];
                (p[a] + p[b]) * 0.5
            }
        })
        .collect();
    positions.extend(odd);
    let mut out = TriMesh::new(positions, refinement.faces.clone())?;
    if let Some(uv) = mesh.uv() {
        out = out.with_uv(refinement.uvs(uv, &topo))?;
    }
    let record = refinement.record(scheme, mesh, &topo);
    Ok((out, record))
}

/// Midpoint subdivision: odd vertices at edge midpoints, evens untouched.
pub fn upsample_subdivide(mesh: &TriMesh) -> Result<(TriMesh, SubdivisionRecord)> {
    split_all(mesh, Scheme::Upsample)
}

/// Loop subdivision with cubic-spline masks on boundaries.
pub fn loop_subdivide(mesh: &TriMesh) -> Result<(TriMesh, SubdivisionRecord)> {
    split_all(mesh, Scheme::Loop)
}

pub fn subdivide_once(mesh: &TriMesh, scheme: Scheme) -> Result<(TriMesh, SubdivisionRecord)> {
    match scheme {
        Scheme::Bcs => bcs_subdivide(mesh),
        Scheme::Upsample => upsample_subdivide(mesh),
        Scheme::Loop => loop_subdivide(mesh),
    }
}

/// Applies `scheme` `iterations` times. BCS is capped at
/// [`MAX_BCS_ITERATIONS`] unless `allow_deep_bcs` is set.
pub fn subdivide(
    mesh: &TriMesh,
    scheme: Scheme,
    iterations: usize,
    allow_deep_bcs: bool,
) -> Result<(TriMesh, Vec<SubdivisionRecord>)> {
    if scheme == Scheme::Bcs && iterations > MAX_BCS_ITERATIONS && !allow_deep_bcs {
        return Err(Error::InvalidArgument(format!(
            "bcs subdivision is limited to {MAX_BCS_ITERATIONS} iterations (requested {iterations})"
        )));
    }
    let mut current = mesh.clone();
    let mut records = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let (next, record) = subdivide_once(&current, scheme)?;
        current = next;
        records.push(record);
    }
    Ok((current, records))
}

/// Smallest shortest-to-longest edge ratio over all faces.
pub fn min_edge_ratio(mesh: &TriMesh) -> f64 {
    (0..mesh.face_count())
        .map(|f| {
            let [a, b, c] = mesh.face_corners(f);
            let l = [(b - a).norm(), (c - b).norm(), (a - c).norm()];
            l.iter().cloned().fold(f64::INFINITY, f64::min) / l.iter().cloned().fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}
