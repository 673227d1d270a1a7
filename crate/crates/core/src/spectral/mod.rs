//! Cotangent Laplace–Beltrami operator, its truncated eigenbasis, spectral
//! analysis/synthesis and mean curvature.

mod eigen;
pub mod io;

pub use eigen::{eigenbasis, eigenbasis_with, EigenOptions, Eigenbasis};

use crate::error::Result;
use crate::mesh::{ScalarField, TriMesh, Vec3};
use crate::sparse::CsrMatrix;

/// Cotangents beyond this magnitude are clamped (near-degenerate triangles).
pub const COT_CLAMP: f64 = 1e8;

/// Discrete Laplace–Beltrami operator `A⁻¹ W`: positive semi-definite
/// cotangent stiffness `W` and lumped (diagonal) mass `A`.
#[derive(Debug, Clone)]
pub struct Laplacian {
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    clamped: usize,
}

impl Laplacian {
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Diagonal of the mass matrix (vertex areas).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    /// Number of cotangents clamped during assembly.
    pub fn clamped_cotangents(&self) -> usize {
        self.clamped
    }
}

/// Cotangent of the angle at `apex` in the triangle (apex, p, q).
pub(crate) fn cotangent(apex: &Vec3, p: &Vec3, q: &Vec3) -> f64 {
    let u = p - apex;
    let v = q - apex;
    u.dot(&v) / u.cross(&v).norm()
}

/// Assembles the stiffness matrix: off-diagonal `-(cot α + cot β) / 2` for
/// each edge, diagonal the negated row sum.
pub fn build_laplacian(mesh: &TriMesh) -> Result<Laplacian> {
    mesh.topology()?;
    let p = mesh.positions();
    let mut triplets = Vec::with_capacity(mesh.face_count() * 12);
    let mut clamped = 0;
    for face in mesh.faces() {
        for k in 0..3 {
            let i = face[k];
            let j = face[(k + 1) % 3];
            let o = face[(k + 2) % 3];
            let mut cot = cotangent(&p[o], &p[i], &p[j]);
            if !cot.is_finite() || cot.abs() > COT_CLAMP {
                clamped += 1;
                cot = if cot.is_nan() { 0.0 } else { cot.clamp(-COT_CLAMP, COT_CLAMP) };
            }
            let w = 0.5 * cot;
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} cotangent weights to ±{COT_CLAMP:e}; mesh has near-degenerate triangles");
    }
    let n = mesh.vertex_count();
    Ok(Laplacian {
        stiffness: CsrMatrix::from_triplets(n, n, triplets),
        mass: mesh.vertex_areas().into_values(),
        clamped,
    })
}

/// Signed mean curvature per vertex, in 1/m.
#[derive(Debug, Clone)]
pub struct MeanCurvature {
    /// `H`, positive where the surface bends away from its outward normal
    /// (e.g. everywhere on a sphere).
    pub values: ScalarField,
    /// Vertices on a mesh boundary, where the estimate is unreliable.
    pub boundary: Vec<bool>,
}

impl MeanCurvature {
    pub fn abs(&self, v: usize) -> f64 {
        self.values[v].abs()
    }
}

/// Mean curvature from the mean-curvature normal `A⁻¹ W x = 2 H n`, with
/// `A` the mixed Voronoi areas (the barycentric lumped mass overestimates
/// `|H|` by up to ~15% around irregular vertices).
pub fn mean_curvature(mesh: &TriMesh) -> Result<MeanCurvature> {
    let topo = mesh.validate()?;
    let lap = build_laplacian(mesh)?;
    let areas = mesh.mixed_voronoi_areas();
    let normals = mesh.vertex_normals();
    let p = mesh.positions();
    let values = (0..mesh.vertex_count())
        .map(|i| {
            let mut hn = Vec3::zeros();
            for (j, w) in lap.stiffness.row(i) {
                hn += p[j] * w;
            }
            hn /= areas[i];
            let magnitude = 0.5 * hn.norm();
            if hn.dot(&normals[i]) < 0.0 {
                -magnitude
            } else {
                magnitude
            }
        })
        .collect();
    Ok(MeanCurvature {
        values: ScalarField::new(values),
        boundary: topo.boundary_vertices(mesh.vertex_count()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use nalgebra::{Rotation3, Vector3};

    #[test]
    fn unit_square_interior_edge_weight_is_zero() {
        let mesh = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let lap = build_laplacian(&mesh).unwrap();
        assert!(lap.stiffness().get(0, 2).abs() < 1e-15);
        assert!((lap.stiffness().get(0, 1) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn equilateral_triangle_weights() {
        let mesh = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let lap = build_laplacian(&mesh).unwrap();
        let expected = -1.0 / (2.0 * 3f64.sqrt());
        for (i, j) in [(0, 1), (1, 2), (0, 2), (2, 1)] {
            assert!((lap.stiffness().get(i, j) - expected).abs() < 1e-15);
        }
    }

    /// Independent dense assembly: per-face local stiffness from edge vectors.
    fn dense_stiffness(mesh: &TriMesh) -> Vec<Vec<f64>> {
        let n = mesh.vertex_count();
        let mut w = vec![vec![0.0; n]; n];
        for face in mesh.faces() {
            let c = face.map(|v| mesh.positions()[v]);
            let area2 = (c[1] - c[0]).cross(&(c[2] - c[0])).norm();
            for a in 0..3 {
                for b in 0..3 {
                    if a == b {
                        continue;
                    }
                    let o = 3 - a - b;
                    // cot at o = (e_oa . e_ob) / (2 * area)
                    let cot = (c[a] - c[o]).dot(&(c[b] - c[o])) / area2;
                    w[face[a]][face[b]] -= 0.5 * cot;
                    w[face[a]][face[a]] += 0.5 * cot;
                }
            }
        }
        w
    }

    #[test]
    fn icosahedron_matches_dense_assembly() {
        let mesh = shapes::icosahedron(1.3);
        let lap = build_laplacian(&mesh).unwrap();
        let dense = dense_stiffness(&mesh);
        for i in 0..mesh.vertex_count() {
            for j in 0..mesh.vertex_count() {
                assert!((lap.stiffness().get(i, j) - dense[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums() {
        let mesh = shapes::displace_radially(&shapes::icosphere(1.0, 2), shapes::ripple(0.1, 4.0));
        let lap = build_laplacian(&mesh).unwrap();
        let w = lap.stiffness();
        for i in 0..mesh.vertex_count() {
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            for (j, v) in w.row(i) {
                assert!((v - w.get(j, i)).abs() <= 1e-12 * v.abs().max(1.0));
                sum += v;
                max = max.max(v.abs());
            }
            assert!(sum.abs() <= 1e-9 * max);
        }
        assert!(lap.mass().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn flat_plane_interior_curvature_is_zero() {
        let mesh = shapes::grid(6, 6, 1.0);
        let h = mean_curvature(&mesh).unwrap();
        for v in 0..mesh.vertex_count() {
            if !h.boundary[v] {
                assert!(h.values[v].abs() < 1e-9);
            }
        }
        assert!(h.boundary.iter().any(|&b| b));
    }

    #[test]
    fn sphere_curvature_is_inverse_radius() {
        for radius in [1.0, 2.0] {
            let mesh = shapes::icosphere(radius, 3);
            let h = mean_curvature(&mesh).unwrap();
            for &value in h.values.values() {
                assert!(value > 0.0);
                assert!((value - 1.0 / radius).abs() <= 0.05 / radius, "H = {value}");
            }
        }
    }

    #[test]
    fn curvature_is_rigid_invariant() {
        let mesh = shapes::displace_radially(&shapes::icosphere(1.0, 2), shapes::ripple(0.05, 5.0));
        let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), 0.7)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), -1.1);
        let moved = mesh.map_positions(|p| rot * p + Vec3::new(0.3, -2.0, 5.0)).unwrap();
        let a = mean_curvature(&mesh).unwrap();
        let b = mean_curvature(&moved).unwrap();
        for v in 0..mesh.vertex_count() {
            assert!((a.values[v] - b.values[v]).abs() < 1e-9);
        }
    }
}
