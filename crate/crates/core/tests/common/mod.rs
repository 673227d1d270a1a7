#![allow(dead_code)]

use hireg_core::local::{local_loop_subdivide, repair_selection, FaceSelection};
use hireg_core::{shapes, TriMesh, Vec3};
use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rigid(rng: &mut impl Rng) -> (Rotation3<f64>, Vec3) {
    let axis = Unit::new_normalize(Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0) + 1e-3,
    ));
    let rot = Rotation3::from_axis_angle(&axis, rng.random_range(-3.0..3.0));
    let t = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    (rot, t)
}

/// Star-shaped closed genus-0 mesh: a random base sphere, optionally with
/// irregular connectivity from a local refinement, radially jittered.
pub fn random_closed_mesh(rng: &mut impl Rng, max_faces: usize) -> TriMesh {
    let mut mesh = match rng.random_range(0..4) {
        0 => shapes::regular_tetrahedron(1.5),
        1 => shapes::icosahedron(1.0),
        2 => shapes::icosphere(1.0, 1),
        _ => shapes::uv_sphere(1.0, rng.random_range(4..10), rng.random_range(3..8)),
    };
    while rng.random_bool(0.6) {
        let picks: Vec<usize> = (0..mesh.face_count()).filter(|_| rng.random_bool(0.15)).collect();
        let sel = repair_selection(&mesh, &FaceSelection::new(&mesh, picks).unwrap()).unwrap();
        let (next, _) = local_loop_subdivide(&mesh, &sel).unwrap();
        if next.face_count() > max_faces {
            break;
        }
        mesh = next;
    }
    jitter_radially(&mesh, rng, 0.15)
}

pub fn jitter_radially(mesh: &TriMesh, rng: &mut impl Rng, amount: f64) -> TriMesh {
    let positions = mesh
        .positions()
        .iter()
        .map(|p| p.normalize() * (1.0 + rng.random_range(-amount..amount)))
        .collect();
    mesh.with_positions(positions).unwrap()
}

/// Planar grid with interior vertices shifted inside their cells and a
/// random height field.
pub fn random_grid(rng: &mut impl Rng) -> TriMesh {
    let n = rng.random_range(2..8);
    let grid = shapes::grid(n, n, 1.0);
    let h = 0.3 / n as f64;
    let positions = grid
        .positions()
        .iter()
        .map(|p| {
            let interior = p.x > 1e-9 && p.x < 1.0 - 1e-9 && p.y > 1e-9 && p.y < 1.0 - 1e-9;
            let shift = if interior { h } else { 0.0 };
            Vec3::new(
                p.x + rng.random_range(-shift..=shift),
                p.y + rng.random_range(-shift..=shift),
                rng.random_range(-0.1..0.1),
            )
        })
        .collect();
    grid.with_positions(positions).unwrap()
}

/// `perm[i]` is the new index of old vertex `i`.
pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    perm
}

pub fn relabel(mesh: &TriMesh, perm: &[usize]) -> TriMesh {
    let mut positions = vec![Vec3::zeros(); mesh.vertex_count()];
    for (i, p) in mesh.positions().iter().enumerate() {
        positions[perm[i]] = *p;
    }
    let faces = mesh.faces().iter().map(|f| f.map(|v| perm[v])).collect();
    TriMesh::new(positions, faces).unwrap()
}

/// Floyd–Warshall over the edge graph.
pub fn all_pairs_shortest(mesh: &TriMesh) -> Vec<Vec<f64>> {
    let n = mesh.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let len = (mesh.positions()[a] - mesh.positions()[b]).norm();
            d[a][b] = d[a][b].min(len);
            d[b][a] = d[b][a].min(len);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Fixed point of "add every unselected face with two or more selected
/// edge-neighbours", recomputed from scratch each round.
pub fn repair_oracle(mesh: &TriMesh, sel: &[bool]) -> Vec<bool> {
    let faces = mesh.faces();
    let shares_edge = |f: usize, g: usize| {
        let count = faces[f].iter().filter(|v| faces[g].contains(v)).count();
        f != g && count == 2
    };
    let mut cur = sel.to_vec();
    loop {
        let next: Vec<bool> = (0..faces.len())
            .map(|f| cur[f] || (0..faces.len()).filter(|&g| cur[g] && shares_edge(f, g)).count() >= 2)
            .collect();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}
