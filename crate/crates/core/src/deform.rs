//! As-rigid-as-possible surface fitting with soft positional constraints.

use crate::error::{Error, Result};
use crate::mesh::{FaceBvh, TriMesh, Vec3};
use crate::sparse::{CholeskySolver, CsrMatrix};
use crate::spectral::build_laplacian;
use nalgebra::Matrix3;
use rayon::prelude::*;

/// Soft constraint pulling one vertex towards a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub vertex: usize,
    pub target: Vec3,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConstraints {
    pub anchors: Vec<Anchor>,
    /// Vertices held exactly at a position.
    pub pins: Vec<(usize, Vec3)>,
    pub data_weight: f64,
    pub arap_weight: f64,
}

impl Default for FitConstraints {
    fn default() -> Self {
        FitConstraints {
            anchors: Vec::new(),
            pins: Vec::new(),
            data_weight: 1.0,
            arap_weight: 1.0,
        }
    }
}

impl FitConstraints {
    pub fn new(anchors: Vec<Anchor>) -> Self {
        FitConstraints {
            anchors,
            ..Default::default()
        }
    }

    pub fn with_weights(mut self, data_weight: f64, arap_weight: f64) -> Self {
        self.data_weight = data_weight;
        self.arap_weight = arap_weight;
        self
    }

    pub fn with_pins(mut self, pins: Vec<(usize, Vec3)>) -> Self {
        self.pins = pins;
        self
    }

    pub fn validate(&self, vertex_count: usize) -> Result<()> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(self.data_weight) || !ok(self.arap_weight) {
            return Err(Error::InvalidArgument(format!(
                "fit weights must be finite and non-negative (data {}, arap {})",
                self.data_weight, self.arap_weight
            )));
        }
        for a in &self.anchors {
            if a.vertex >= vertex_count {
                return Err(Error::IndexOutOfRange {
                    what: "anchor vertices",
                    index: a.vertex,
                    len: vertex_count,
                });
            }
            if !ok(a.weight) || !a.target.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "anchor on vertex {} has a non-finite target or invalid weight {}",
                    a.vertex, a.weight
                )));
            }
        }
        for &(v, p) in &self.pins {
            if v >= vertex_count {
                return Err(Error::IndexOutOfRange {
                    what: "pinned vertices",
                    index: v,
                    len: vertex_count,
                });
            }
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidArgument(format!("pin on vertex {v} is not finite")));
            }
        }
        Ok(())
    }
}

/// Anchors every template vertex to its closest point on `target`, dropping
/// pairs farther than `max_distance` or whose normals disagree
/// (`n_template · n_target < normal_cos_min`).
pub fn closest_point_constraints(
    template: &TriMesh,
    target: &TriMesh,
    max_distance: f64,
    normal_cos_min: f64,
) -> FitConstraints {
    closest_point_constraints_with(template, target, &FaceBvh::new(target), max_distance, normal_cos_min)
}

/// As [`closest_point_constraints`] with a prebuilt hierarchy over `target`.
pub fn closest_point_constraints_with(
    template: &TriMesh,
    target: &TriMesh,
    bvh: &FaceBvh,
    max_distance: f64,
    normal_cos_min: f64,
) -> FitConstraints {
    let normals = template.vertex_normals();
    let anchors = template
        .positions()
        .par_iter()
        .enumerate()
        .filter_map(|(v, p)| {
            let hit = bvh.closest_point(p)?;
            if hit.distance > max_distance {
                return None;
            }
            if normals[v].dot(&target.face_normal(hit.face)) < normal_cos_min {
                return None;
            }
            Some(Anchor {
                vertex: v,
                target: hit.point,
                weight: 1.0,
            })
        })
        .collect();
    FitConstraints::new(anchors)
}

/// Deformation state: rest geometry, current positions and per-vertex
/// rotations.
#[derive(Debug, Clone)]
pub struct ArapState {
    rest: TriMesh,
    positions: Vec<Vec3>,
    rotations: Vec<Matrix3<f64>>,
    /// One-ring neighbours with non-negative cotangent weights.
    neighbors: Vec<Vec<(usize, f64)>>,
    iterations: usize,
    energy: f64,
    trace: Vec<f64>,
}

impl ArapState {
    /// Starts at the rest pose with identity rotations.
    pub fn new(rest: &TriMesh) -> Result<Self> {
        Self::with_positions(rest, rest.positions().to_vec())
    }

    pub fn with_positions(rest: &TriMesh, positions: Vec<Vec3>) -> Result<Self> {
        if positions.len() != rest.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: rest.vertex_count(),
                actual: positions.len(),
            });
        }
        let neighbors = arap_weights(rest)?;
        Ok(ArapState {
            rest: rest.clone(),
            positions,
            rotations: vec![Matrix3::identity(); rest.vertex_count()],
            neighbors,
            iterations: 0,
            energy: f64::NAN,
            trace: Vec::new(),
        })
    }

    pub fn rest(&self) -> &TriMesh {
        &self.rest
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn rotations(&self) -> &[Matrix3<f64>] {
        &self.rotations
    }

    /// Total local–global iterations performed so far.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Energy after the last iteration (NaN before any fit).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Energies of the last fit: the starting energy, then one value per
    /// iteration.
    pub fn energy_trace(&self) -> &[f64] {
        &self.trace
    }

    /// Current shape with the rest connectivity.
    pub fn mesh(&self) -> Result<TriMesh> {
        self.rest.with_positions(self.positions.clone())
    }

    /// Combined ARAP and data energy at the current positions and rotations.
    pub fn total_energy(&self, constraints: &FitConstraints) -> f64 {
        let r = self.rest.positions();
        let p = &self.positions;
        let arap: f64 = (0..p.len())
            .into_par_iter()
            .map(|i| {
                self.neighbors[i]
                    .iter()
                    .map(|&(j, w)| w * ((p[i] - p[j]) - self.rotations[i] * (r[i] - r[j])).norm_squared())
                    .sum::<f64>()
            })
            .sum();
        let data: f64 = constraints
            .anchors
            .iter()
            .map(|a| a.weight * (p[a.vertex] - a.target).norm_squared())
            .sum();
        constraints.arap_weight * arap + constraints.data_weight * data
    }

    fn fit_rotations(&mut self) {
        let r = self.rest.positions();
        let p = &self.positions;
        let neighbors = &self.neighbors;
        self.rotations = (0..p.len())
            .into_par_iter()
            .map(|i| {
                let mut s = Matrix3::zeros();
                for &(j, w) in &neighbors[i] {
                    s += (r[i] - r[j]) * (p[i] - p[j]).transpose() * w;
                }
                best_rotation(&s)
            })
            .collect();
    }
}

/// Rotation `R` maximising `tr(R S)`, i.e. `R = V Uᵀ` for `S = U Σ Vᵀ`.
fn best_rotation(s: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = s.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Matrix3::identity();
    };
    let mut r = v_t.transpose() * u.transpose();
    if r.determinant() < 0.0 {
        // Flip the axis of the smallest singular value.
        let k = svd.singular_values.imin();
        let mut u = u;
        u.column_mut(k).neg_mut();
        r = v_t.transpose() * u.transpose();
    }
    r
}

/// Per-vertex one-ring with cotangent weights; negative weights (obtuse
/// configurations) are clamped to a small positive floor so every local and
/// global step is an exact minimiser.
fn arap_weights(mesh: &TriMesh) -> Result<Vec<Vec<(usize, f64)>>> {
    let lap = build_laplacian(mesh)?;
    let w = lap.stiffness();
    let mut positive = 0.0;
    let mut count = 0usize;
    for (i, j, v) in w.triplets() {
        if i != j && -v > 0.0 {
            positive += -v;
            count += 1;
        }
    }
    let floor = if count > 0 { 1e-6 * positive / count as f64 } else { 1e-6 };
    Ok((0..mesh.vertex_count())
        .map(|i| {
            w.row(i)
                .filter(|&(j, _)| j != i)
                .map(|(j, v)| (j, (-v).max(floor)))
                .collect()
        })
        .collect())
}

/// Each connected component must contain a pinned or positively anchored
/// vertex, otherwise the global system is singular.
fn check_constrained(state: &ArapState, constraints: &FitConstraints, constrained: &[bool]) -> Result<()> {
    if constraints.arap_weight == 0.0 {
        // Only the data term: every vertex needs its own anchor.
        return if constrained.iter().all(|&c| c) {
            Ok(())
        } else {
            Err(Error::SingularArapSystem)
        };
    }
    let n = state.positions.len();
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut ok = false;
        while let Some(v) = stack.pop() {
            ok |= constrained[v];
            for &(u, _) in &state.neighbors[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        if !ok {
            return Err(Error::SingularArapSystem);
        }
    }
    Ok(())
}

/// Local–global ARAP iterations towards `constraints`. Stops after
/// `max_iters` iterations or once the relative energy decrease falls below
/// `rel_tol`.
pub fn arap_fit(
    mut state: ArapState,
    constraints: &FitConstraints,
    max_iters: usize,
    rel_tol: f64,
) -> Result<ArapState> {
    let n = state.positions.len();
    constraints.validate(n)?;
    let mut pinned: Vec<Option<Vec3>> = vec![None; n];
    for &(v, p) in &constraints.pins {
        pinned[v] = Some(p);
        state.positions[v] = p;
    }
    let mut data_diag = vec![0.0; n];
    let mut data_rhs = vec![Vec3::zeros(); n];
    if constraints.data_weight > 0.0 {
        for a in &constraints.anchors {
            data_diag[a.vertex] += constraints.data_weight * a.weight;
            data_rhs[a.vertex] += a.target * (constraints.data_weight * a.weight);
        }
    }
    let constrained: Vec<bool> = (0..n).map(|v| pinned[v].is_some() || data_diag[v] > 0.0).collect();
    check_constrained(&state, constraints, &constrained)?;

    // Free vertices are renumbered; pinned ones move to the right side.
    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in 0..n {
        if pinned[v].is_none() {
            index[v] = free.len();
            free.push(v);
        }
    }
    let arap = constraints.arap_weight;
    let mut triplets = Vec::new();
    for &v in &free {
        let i = index[v];
        let mut diag = data_diag[v];
        for &(u, w) in &state.neighbors[v] {
            diag += 2.0 * arap * w;
            if index[u] != usize::MAX {
                triplets.push((i, index[u], -2.0 * arap * w));
            }
        }
        triplets.push((i, i, diag));
    }
    let m = free.len();
    let solver = if m > 0 {
        let system = CsrMatrix::from_triplets(m, m, triplets);
        Some(CholeskySolver::new(&system).map_err(|_| Error::SingularArapSystem)?)
    } else {
        None
    };

    state.trace.clear();
    let mut energy = state.total_energy(constraints);
    state.trace.push(energy);
    let rest = state.rest.positions().to_vec();
    for _ in 0..max_iters {
        state.fit_rotations();
        if let Some(solver) = &solver {
            let mut rhs = vec![0.0; 3 * m];
            for (i, &v) in free.iter().enumerate() {
                let mut b = data_rhs[v];
                for &(u, w) in &state.neighbors[v] {
                    b += (state.rotations[v] + state.rotations[u]) * (rest[v] - rest[u]) * (arap * w);
                    if let Some(p) = pinned[u] {
                        b += p * (2.0 * arap * w);
                    }
                }
                for k in 0..3 {
                    rhs[k * m + i] = b[k];
                }
            }
            solver.solve_columns(&mut rhs);
            if rhs.iter().any(|x| !x.is_finite()) {
                return Err(Error::SingularArapSystem);
            }
            for (i, &v) in free.iter().enumerate() {
                state.positions[v] = Vec3::new(rhs[i], rhs[m + i], rhs[2 * m + i]);
            }
        }
        state.iterations += 1;
        let next = state.total_energy(constraints);
        state.trace.push(next);
        let decrease = energy - next;
        energy = next;
        if energy == 0.0 || decrease <= rel_tol * state.trace[state.trace.len() - 2].abs() {
            break;
        }
    }
    state.energy = energy;
    Ok(state)
}
