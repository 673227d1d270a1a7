//! Procedural meshes for tests, benchmarks and demos.

use crate::mesh::{TriMesh, Vec3};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Regular tetrahedron with the given edge length, centered at the origin.
pub fn regular_tetrahedron(edge: f64) -> TriMesh {
    let s = edge / (2.0 * 2f64.sqrt());
    let positions = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(positions, faces).expect("valid tetrahedron")
}

/// Right triangle with legs of length 1 (area 0.5).
pub fn single_triangle() -> TriMesh {
    TriMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ],
        vec![[0, 1, 2]],
    )
    .expect("valid triangle")
}

/// Icosahedron inscribed in a sphere of the given radius.
pub fn icosahedron(radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let positions = raw
        .iter()
        .map(|p| Vec3::new(p[0], p[1], p[2]).normalize() * radius)
        .collect();
    let faces = vec![
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
    TriMesh::new(positions, faces).expect("valid icosahedron")
}

/// Icosahedron refined `level` times by midpoint splitting, with every vertex
/// projected to the sphere. Has `10 * 4^level + 2` vertices.
pub fn icosphere(radius: f64, level: u32) -> TriMesh {
    let base = icosahedron(1.0);
    let mut positions = base.positions().to_vec();
    let mut faces = base.faces().to_vec();
    for _ in 0..level {
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, positions: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                positions.push(((positions[a] + positions[b]) * 0.5).normalize());
                positions.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let positions = positions.into_iter().map(|p| p * radius).collect();
    TriMesh::new(positions, faces).expect("valid icosphere")
}

/// Latitude-longitude sphere with `segments` around and `rings` bands; has
/// `segments * (rings - 1) + 2` vertices and `2 * segments * (rings - 1)`
/// faces.
pub fn uv_sphere(radius: f64, segments: usize, rings: usize) -> TriMesh {
    assert!(segments >= 3 && rings >= 2);
    let mut positions = vec![Vec3::new(0.0, 0.0, radius)];
    for r in 1..rings {
        let theta = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let phi = 2.0 * PI * s as f64 / segments as f64;
            positions.push(
                Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * radius,
            );
        }
    }
    positions.push(Vec3::new(0.0, 0.0, -radius));
    let south = positions.len() - 1;
    let ring = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;

    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, ring(1, s), ring(1, s + 1)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b) = (ring(r, s), ring(r, s + 1));
            let (c, d) = (ring(r + 1, s), ring(r + 1, s + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    for s in 0..segments {
        faces.push([south, ring(rings - 1, s + 1), ring(rings - 1, s)]);
    }
    TriMesh::new(positions, faces).expect("valid uv sphere")
}

/// Flat `nx` by `ny` cell grid covering `[0, size]²` in the z = 0 plane,
/// each cell split along its diagonal.
pub fn grid(nx: usize, ny: usize, size: f64) -> TriMesh {
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Vec3::new(
                size * i as f64 / nx as f64,
                size * j as f64 / ny as f64,
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(positions, faces).expect("valid grid")
}

/// Moves every vertex along its direction from the origin, scaling its
/// radius by `1 + amplitude * bump(unit direction)`.
pub fn displace_radially(mesh: &TriMesh, bump: impl Fn(&Vec3) -> f64) -> TriMesh {
    mesh.map_positions(|p| {
        let r = p.norm();
        let dir = p / r;
        dir * r * (1.0 + bump(&dir))
    })
    .expect("radial displacement keeps faces non-degenerate")
}

/// Smooth oscillating radial pattern used for detail-recovery fixtures:
/// amplitude `amplitude` (relative radius) with the given angular frequency.
pub fn ripple(amplitude: f64, frequency: f64) -> impl Fn(&Vec3) -> f64 {
    move |d: &Vec3| {
        amplitude * (frequency * d.x).sin() * (frequency * d.y).sin() * (frequency * d.z).cos()
    }
}

/// Gaussian bump of relative height `height` centered on direction `center`.
pub fn gaussian_bump(center: Vec3, height: f64, width: f64) -> impl Fn(&Vec3) -> f64 {
    let center = center.normalize();
    move |d: &Vec3| {
        let dist2 = (d - center).norm_squared();
        height * (-dist2 / (2.0 * width * width)).exp()
    }
}

/// Four Gaussian bumps confined to the positive octant.
pub fn octant_bumps(height: f64, width: f64) -> impl Fn(&Vec3) -> f64 {
    let bumps: Vec<_> = [
        Vec3::new(1.0, 0.4, 0.4),
        Vec3::new(0.4, 1.0, 0.4),
        Vec3::new(0.4, 0.4, 1.0),
        Vec3::new(1.0, 1.0, 1.0),
    ]
    .into_iter()
    .map(|c| gaussian_bump(c, height, width))
    .collect();
    move |d: &Vec3| bumps.iter().map(|b| b(d)).sum()
}
