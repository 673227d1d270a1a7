//! Indexed triangle meshes, per-vertex fields and basic geometric queries.

mod bvh;
mod geodesic;
pub mod io;
mod topology;

pub use bvh::{ClosestPoint, FaceBvh};
pub use geodesic::{connected_components, dijkstra_geodesic};
pub(crate) use geodesic::{dijkstra_within, EdgeGraph};
pub use topology::EdgeTopology;
pub(crate) use topology::opposite_corner;

use crate::error::{Error, Result};
use nalgebra::{Vector2, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Uv = Vector2<f64>;

/// Faces with an area below this are rejected as degenerate (m²).
pub const DEFAULT_AREA_EPSILON: f64 = 1e-12;

/// Indexed triangle surface. Positions are in meters, faces are
/// counter-clockwise vertex triples.
///
/// Construction checks indices and face degeneracy; [`TriMesh::validate`]
/// additionally checks edge-manifoldness and consistent orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    uv: Option<Vec<Uv>>,
}

impl TriMesh {
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_area_epsilon(positions, faces, DEFAULT_AREA_EPSILON)
    }

    pub fn with_area_epsilon(
        positions: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        area_epsilon: f64,
    ) -> Result<Self> {
        let n = positions.len();
        for (f, face) in faces.iter().enumerate() {
            for &index in face {
                if index >= n {
                    return Err(Error::FaceIndex {
                        face: f,
                        index,
                        vertex_count: n,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::DegenerateFace { face: f, area: 0.0 });
            }
        }
        let mesh = TriMesh {
            positions,
            faces,
            uv: None,
        };
        for f in 0..mesh.faces.len() {
            let area = mesh.face_area(f);
            if !(area >= area_epsilon) {
                return Err(Error::DegenerateFace { face: f, area });
            }
        }
        Ok(mesh)
    }

    /// Attaches per-vertex texture coordinates.
    pub fn with_uv(mut self, uv: Vec<Uv>) -> Result<Self> {
        if uv.len() != self.positions.len() {
            return Err(Error::LengthMismatch {
                expected: self.positions.len(),
                actual: uv.len(),
            });
        }
        self.uv = Some(uv);
        Ok(self)
    }

    pub fn without_uv(mut self) -> Self {
        self.uv = None;
        self
    }

    /// Same connectivity with new vertex positions. UVs are kept.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(Error::LengthMismatch {
                expected: self.positions.len(),
                actual: positions.len(),
            });
        }
        let mesh = TriMesh::new(positions, self.faces.clone())?;
        Ok(TriMesh {
            uv: self.uv.clone(),
            ..mesh
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn uv(&self) -> Option<&[Uv]> {
        self.uv.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_corners(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.positions[a], self.positions[b], self.positions[c]]
    }

    /// Area-weighted (unnormalized by 2) face normal: `(b - a) x (c - a)`.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_corners(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_cross(f).normalize()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area-weighted vertex normals, unit length.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut normals = vec![Vec3::zeros(); self.positions.len()];
        for (f, face) in self.faces.iter().enumerate() {
            let n = self.face_cross(f);
            for &v in face {
                normals[v] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    /// Lumped mass: one third of the summed area of incident faces.
    pub fn vertex_areas(&self) -> ScalarField {
        let mut areas = vec![0.0; self.positions.len()];
        for (f, face) in self.faces.iter().enumerate() {
            let third = self.face_area(f) / 3.0;
            for &v in face {
                areas[v] += third;
            }
        }
        ScalarField::new(areas)
    }

    /// Mixed Voronoi vertex areas: circumcentric Voronoi cells for
    /// non-obtuse triangles, with the half/quarter split for obtuse ones.
    /// Sums to the total area, like [`TriMesh::vertex_areas`].
    pub fn mixed_voronoi_areas(&self) -> ScalarField {
        let mut areas = vec![0.0; self.positions.len()];
        for (f, face) in self.faces.iter().enumerate() {
            let c = self.face_corners(f);
            let area = self.face_area(f);
            let obtuse = (0..3).find(|&k| (c[(k + 1) % 3] - c[k]).dot(&(c[(k + 2) % 3] - c[k])) < 0.0);
            match obtuse {
                Some(k) => {
                    for j in 0..3 {
                        areas[face[j]] += if j == k { area / 2.0 } else { area / 4.0 };
                    }
                }
                None => {
                    for k in 0..3 {
                        let (i, j, o) = (k, (k + 1) % 3, (k + 2) % 3);
                        let cot = (c[i] - c[o]).dot(&(c[j] - c[o])) / (2.0 * area);
                        let share = cot * (c[i] - c[j]).norm_squared() / 8.0;
                        areas[face[i]] += share;
                        areas[face[j]] += share;
                    }
                }
            }
        }
        ScalarField::new(areas)
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Builds edge adjacency, failing on non-manifold edges.
    pub fn topology(&self) -> Result<EdgeTopology> {
        EdgeTopology::build(self)
    }

    /// Full validation: edge-manifold and consistently oriented.
    pub fn validate(&self) -> Result<EdgeTopology> {
        let topo = EdgeTopology::build(self)?;
        topo.check_orientation(self)?;
        Ok(topo)
    }

    /// V - E + F with undirected edges.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| sorted_pair(f[k], f[(k + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        self.positions.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }

    /// Returns a copy with every position mapped through `f`.
    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        self.with_positions(self.positions.iter().map(f).collect())
    }

    /// Uniformly rescales positions, e.g. millimeters to meters with 1e-3.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.map_positions(|p| p * factor)
    }
}

pub(crate) fn sorted_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A point on a face, given by barycentric weights of its three corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricPoint {
    pub face: usize,
    pub weights: [f64; 3],
}

impl BarycentricPoint {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(face: usize, weights: [f64; 3]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        let in_range = weights
            .iter()
            .all(|w| (-Self::TOLERANCE..=1.0 + Self::TOLERANCE).contains(w));
        if !in_range || (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidBarycentric { face, weights });
        }
        Ok(BarycentricPoint { face, weights })
    }

    /// Corner of `mesh` carrying the largest weight (first corner on ties).
    pub fn heaviest_vertex(&self, mesh: &TriMesh) -> usize {
        let mut best = 0;
        for k in 1..3 {
            if self.weights[k] > self.weights[best] {
                best = k;
            }
        }
        mesh.faces()[self.face][best]
    }

    pub fn position(&self, mesh: &TriMesh) -> Vec3 {
        let [a, b, c] = mesh.face_corners(self.face);
        a * self.weights[0] + b * self.weights[1] + c * self.weights[2]
    }

    pub fn interpolate(&self, mesh: &TriMesh, values: &[f64]) -> f64 {
        let face = mesh.faces()[self.face];
        (0..3).map(|k| self.weights[k] * values[face[k]]).sum()
    }
}

/// One real value per vertex of a mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn for_mesh(mesh: &TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: mesh.vertex_count(),
                actual: values.len(),
            });
        }
        Ok(ScalarField { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.sum() / self.values.len() as f64
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn rejects_out_of_range_index() {
        let positions = vec![Vec3::zeros(); 8];
        let err = TriMesh::new(positions, vec![[0, 1, 9]]).unwrap_err();
        assert!(matches!(err, Error::FaceIndex { face: 0, index: 9, .. }));
    }

    #[test]
    fn rejects_degenerate_faces() {
        let positions = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let err = TriMesh::new(positions.clone(), vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace { face: 0, .. }));
        let err = TriMesh::new(positions, vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace { face: 0, .. }));
    }

    #[test]
    fn tetrahedron_vertex_areas_are_equal() {
        let mesh = shapes::regular_tetrahedron(1.0);
        let areas = mesh.vertex_areas();
        for &a in areas.values() {
            assert!((a - 3f64.sqrt() / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_triangle_one_third_rule() {
        let mesh = shapes::single_triangle();
        assert!((mesh.total_area() - 0.5).abs() < 1e-15);
        for &a in mesh.vertex_areas().values() {
            assert!((a - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn icosahedron_vertex_areas_sum_to_face_areas() {
        let mesh = shapes::icosahedron(1.0);
        let mut direct = 0.0;
        for face in mesh.faces() {
            let [a, b, c] = face.map(|v| mesh.positions()[v]);
            direct += 0.5 * (b - a).cross(&(c - a)).norm();
        }
        let sum = mesh.vertex_areas().sum();
        assert!(((sum - direct) / direct).abs() < 1e-9);
        assert!(mesh.vertex_areas().values().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn mixed_voronoi_areas_sum_to_total_area() {
        let mesh = shapes::displace_radially(&shapes::icosphere(1.0, 2), shapes::ripple(0.2, 5.0));
        let areas = mesh.mixed_voronoi_areas();
        assert!((areas.sum() - mesh.total_area()).abs() < 1e-12 * mesh.total_area());
        assert!(areas.values().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn euler_characteristic_of_simple_meshes() {
        assert_eq!(shapes::regular_tetrahedron(1.0).euler_characteristic(), 2);
        assert_eq!(shapes::icosahedron(1.0).euler_characteristic(), 2);
        assert_eq!(shapes::single_triangle().euler_characteristic(), 1);
    }

    #[test]
    fn barycentric_validation() {
        assert!(BarycentricPoint::new(0, [0.2, 0.3, 0.5]).is_ok());
        assert!(BarycentricPoint::new(0, [0.2, 0.3, 0.6]).is_err());
        assert!(BarycentricPoint::new(0, [-0.1, 0.6, 0.5]).is_err());
    }

    #[test]
    fn validate_detects_flipped_face() {
        let mesh = shapes::regular_tetrahedron(1.0);
        let mut faces = mesh.faces().to_vec();
        faces[0].swap(1, 2);
        let flipped = TriMesh::new(mesh.positions().to_vec(), faces).unwrap();
        assert!(matches!(
            flipped.validate(),
            Err(Error::InconsistentOrientation(..))
        ));
        assert!(mesh.validate().is_ok());
    }

    #[test]
    fn validate_detects_non_manifold_edge() {
        let positions = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let faces = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        let mesh = TriMesh::new(positions, faces).unwrap();
        assert!(matches!(mesh.validate(), Err(Error::NonManifoldEdge(0, 1))));
    }
}
