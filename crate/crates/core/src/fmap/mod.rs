//! Functional maps between truncated eigenbases, conversion to and from
//! pointwise maps, and ZoomOut refinement.

mod kdtree;
mod pointmap;

pub use pointmap::{Assignment, PointMap};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::spectral::Eigenbasis;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::io::{BufRead, Write};

/// Target meshes with at least this many vertices use a k-d tree for the
/// spectral nearest-neighbour search.
pub const KDTREE_THRESHOLD: usize = 5000;

/// `k_N × k_M` matrix taking coefficients in the basis of `M` to
/// coefficients in the basis of `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    c: DMatrix<f64>,
}

impl FunctionalMap {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if c.nrows() == 0 || c.ncols() == 0 {
            return Err(Error::InvalidArgument("functional map must be at least 1x1".into()));
        }
        Ok(FunctionalMap { c })
    }

    pub fn identity(k: usize) -> Self {
        FunctionalMap {
            c: DMatrix::identity(k, k),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn k_n(&self) -> usize {
        self.c.nrows()
    }

    pub fn k_m(&self) -> usize {
        self.c.ncols()
    }

    /// Header `kN kM`, then one row per line.
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.k_n(), self.k_m())?;
        for i in 0..self.k_n() {
            let row: Vec<String> = (0..self.k_m()).map(|j| self.c[(i, j)].to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl BufRead) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        let mut tokens = text.split_whitespace();
        let mut dim = |what: &str| -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("expected {what} in header"),
                })
        };
        let (kn, km) = (dim("kN")?, dim("kM")?);
        let values: Vec<f64> = text
            .split_whitespace()
            .skip(2)
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: 0,
                    message: format!("invalid matrix entry '{t}'"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != kn * km {
            return Err(Error::LengthMismatch {
                expected: kn * km,
                actual: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(kn, km, &values))
    }
}

fn check_k(basis: &Eigenbasis, k: usize) -> Result<()> {
    if k == 0 || k > basis.k() {
        return Err(Error::BasisTooSmall {
            requested: k,
            available: basis.k(),
        });
    }
    Ok(())
}

/// `Π Φ_M`: the first `k` eigenfunctions of `M` pulled back to the vertices
/// of `N` through `pi`.
fn pulled_back(pi: &PointMap, target: &TriMesh, basis_m: &Eigenbasis, k: usize) -> DMatrix<f64> {
    let phi = basis_m.phi();
    let mut out = DMatrix::zeros(pi.len(), k);
    for (i, a) in pi.assignments().iter().enumerate() {
        match a {
            Assignment::Vertex(j) => {
                for h in 0..k {
                    out[(i, h)] = phi[(*j, h)];
                }
            }
            Assignment::Surface(b) => {
                let face = target.faces()[b.face];
                for h in 0..k {
                    out[(i, h)] = (0..3).map(|c| b.weights[c] * phi[(face[c], h)]).sum();
                }
            }
        }
    }
    out
}

/// `C = Φ_Nᵀ A_N Π Φ_M` for a pointwise map `pi: N → M`.
pub fn fmap_from_pointmap(
    pi: &PointMap,
    target: &TriMesh,
    basis_m: &Eigenbasis,
    basis_n: &Eigenbasis,
    k_m: usize,
    k_n: usize,
) -> Result<FunctionalMap> {
    check_k(basis_m, k_m)?;
    check_k(basis_n, k_n)?;
    if pi.len() != basis_n.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: basis_n.vertex_count(),
            actual: pi.len(),
        });
    }
    if target.vertex_count() != basis_m.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: basis_m.vertex_count(),
            actual: target.vertex_count(),
        });
    }
    let pulled = pulled_back(pi, target, basis_m, k_m);
    let mut weighted = basis_n.phi().columns(0, k_n).into_owned();
    for (i, &a) in basis_n.mass().iter().enumerate() {
        weighted.row_mut(i).scale_mut(a);
    }
    FunctionalMap::new(weighted.transpose() * pulled)
}

/// Row-major `n × k` block of `phi`.
fn rows(phi: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let n = phi.nrows();
    let mut out = Vec::with_capacity(n * k);
    for i in 0..n {
        for h in 0..k {
            out.push(phi[(i, h)]);
        }
    }
    out
}

/// For every vertex `i` of `N`, the vertex `j` of `M` minimising
/// `‖C Φ_M(j)ᵀ − Φ_N(i)ᵀ‖`; ties go to the smallest `j`.
pub fn pointmap_from_fmap(c: &FunctionalMap, basis_m: &Eigenbasis, basis_n: &Eigenbasis) -> Result<PointMap> {
    let (k_n, k_m) = (c.k_n(), c.k_m());
    check_k(basis_m, k_m)?;
    check_k(basis_n, k_n)?;
    // Rows of Φ_M C^T: M's embedding expressed in N's coefficients.
    let embedded = basis_m.phi().columns(0, k_m) * c.matrix().transpose();
    let points = rows(&embedded, k_n);
    let queries = rows(basis_n.phi(), k_n);
    let m = basis_m.vertex_count();
    let targets: Vec<usize> = if m >= KDTREE_THRESHOLD {
        let tree = kdtree::KdTree::new(&points, k_n);
        queries
            .par_chunks_exact(k_n)
            .map(|q| tree.nearest(q).expect("non-empty target"))
            .collect()
    } else {
        queries
            .par_chunks_exact(k_n)
            .map(|q| kdtree::nearest_linear(&points, k_n, q).expect("non-empty target"))
            .collect()
    };
    Ok(PointMap::from_vertices_unchecked(targets))
}

/// ZoomOut: alternately converts to a pointwise map and back, growing each
/// truncation by `step` (clamped at its end value) until both reach
/// `(k_end_m, k_end_n)`. Returns the final functional map and the pointwise
/// map extracted from it.
pub fn zoomout(
    c0: &FunctionalMap,
    target: &TriMesh,
    basis_m: &Eigenbasis,
    basis_n: &Eigenbasis,
    k_end_m: usize,
    k_end_n: usize,
    step: usize,
) -> Result<(FunctionalMap, PointMap)> {
    if step == 0 {
        return Err(Error::InvalidArgument("zoomout step must be at least 1".into()));
    }
    check_k(basis_m, k_end_m)?;
    check_k(basis_n, k_end_n)?;
    if c0.k_m() > k_end_m || c0.k_n() > k_end_n {
        return Err(Error::InvalidArgument(format!(
            "initial map {}x{} is larger than the final size {k_end_n}x{k_end_m}",
            c0.k_n(),
            c0.k_m()
        )));
    }
    let mut c = c0.clone();
    loop {
        let pi = pointmap_from_fmap(&c, basis_m, basis_n)?;
        if c.k_m() == k_end_m && c.k_n() == k_end_n {
            return Ok((c, pi));
        }
        let k_m = (c.k_m() + step).min(k_end_m);
        let k_n = (c.k_n() + step).min(k_end_n);
        log::debug!("zoomout {}x{} -> {k_n}x{k_m}", c.k_n(), c.k_m());
        c = fmap_from_pointmap(&pi, target, basis_m, basis_n, k_m, k_n)?;
    }
}

/// Least-squares functional map from landmark pairs `(vertex on N, vertex
/// on M)`: each landmark asks `C Φ_M(m)ᵀ ≈ Φ_N(n)ᵀ`, and `regularization`
/// penalises `(λ_N,i − λ_M,j)² C_ij²`, favouring maps that commute with
/// the Laplacians.
pub fn fmap_from_landmarks(
    landmarks: &[(usize, usize)],
    basis_m: &Eigenbasis,
    basis_n: &Eigenbasis,
    k_m: usize,
    k_n: usize,
    regularization: f64,
) -> Result<FunctionalMap> {
    if landmarks.is_empty() {
        return Err(Error::InvalidArgument("at least one landmark pair is required".into()));
    }
    if !(regularization >= 0.0 && regularization.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "regularization must be finite and non-negative, got {regularization}"
        )));
    }
    check_k(basis_m, k_m)?;
    check_k(basis_n, k_n)?;
    for &(n, m) in landmarks {
        if n >= basis_n.vertex_count() {
            return Err(Error::IndexOutOfRange {
                what: "landmark vertices on N",
                index: n,
                len: basis_n.vertex_count(),
            });
        }
        if m >= basis_m.vertex_count() {
            return Err(Error::IndexOutOfRange {
                what: "landmark vertices on M",
                index: m,
                len: basis_m.vertex_count(),
            });
        }
    }
    let l = landmarks.len();
    // G: k_M × L landmark embeddings on M; H: k_N × L on N.
    let g = DMatrix::from_fn(k_m, l, |h, c| basis_m.phi()[(landmarks[c].1, h)]);
    let h = DMatrix::from_fn(k_n, l, |i, c| basis_n.phi()[(landmarks[c].0, i)]);
    let gram = &g * g.transpose();
    let rhs = &g * h.transpose(); // k_M × k_N, column i is the right side of row i
    let lm = basis_m.lambda();
    let ln = basis_n.lambda();
    let mut c = DMatrix::zeros(k_n, k_m);
    for (i, &li) in ln.iter().enumerate().take(k_n) {
        let mut system = gram.clone();
        for j in 0..k_m {
            let d = li - lm[j];
            system[(j, j)] += regularization * d * d;
        }
        let row = pseudo_solve(system, rhs.column(i).into_owned())?;
        c.row_mut(i).copy_from(&row.transpose());
    }
    FunctionalMap::new(c)
}

/// Minimum-norm solution of a symmetric positive semi-definite system.
fn pseudo_solve(system: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let svd = system.svd(true, true);
    let eps = svd.singular_values.max() * 1e-12 * rhs.len() as f64;
    svd.solve(&rhs, eps)
        .map_err(|e| Error::Factorization(e.to_string()))
}
