use super::Laplacian;
use crate::error::{Error, Result};
use crate::mesh::ScalarField;
use crate::sparse::{CholeskySolver, CsrMatrix};
use faer::{Mat, Side};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Entries below this magnitude are skipped when fixing eigenvector signs.
const SIGN_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Meshes with at most this many vertices use a dense solve.
    pub dense_threshold: usize,
    /// Relative residual `‖Bx − λx‖ / max(|λ|, λ_k)` required for
    /// convergence of the sparse solver.
    pub tolerance: f64,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            dense_threshold: 2000,
            tolerance: 1e-10,
            max_restarts: 60,
        }
    }
}

/// The `k` smallest generalized eigenpairs `W φ = λ A φ`, with `Φᵀ A Φ = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenbasis {
    phi: DMatrix<f64>,
    lambda: Vec<f64>,
    mass: Vec<f64>,
}

impl Eigenbasis {
    /// Assembles a basis from parts, checking dimensions only.
    pub fn from_parts(phi: DMatrix<f64>, lambda: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if phi.ncols() != lambda.len() {
            return Err(Error::LengthMismatch {
                expected: phi.ncols(),
                actual: lambda.len(),
            });
        }
        if phi.nrows() != mass.len() {
            return Err(Error::LengthMismatch {
                expected: phi.nrows(),
                actual: mass.len(),
            });
        }
        Ok(Eigenbasis { phi, lambda, mass })
    }

    /// `n × k` eigenfunctions, one per column.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Eigenvalues in ascending order.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Coefficients `⟨f, φ_h⟩_A = φ_hᵀ A f` for all `k` basis functions.
    pub fn analyze(&self, f: &ScalarField) -> Result<Vec<f64>> {
        if f.len() != self.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: self.vertex_count(),
                actual: f.len(),
            });
        }
        let weighted: Vec<f64> = f
            .values()
            .iter()
            .zip(&self.mass)
            .map(|(v, a)| v * a)
            .collect();
        Ok((0..self.k())
            .map(|h| {
                self.phi
                    .column(h)
                    .iter()
                    .zip(&weighted)
                    .map(|(p, w)| p * w)
                    .sum()
            })
            .collect())
    }

    /// `Φ c` using the first `coeffs.len()` basis functions.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<ScalarField> {
        if coeffs.len() > self.k() {
            return Err(Error::BasisTooSmall {
                requested: coeffs.len(),
                available: self.k(),
            });
        }
        let mut out = vec![0.0; self.vertex_count()];
        for (h, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.phi.column(h).iter()) {
                *o += c * p;
            }
        }
        Ok(ScalarField::new(out))
    }

    /// Mass-weighted inner product of two vertex fields.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.mass)
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    /// Copy restricted to the first `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.k() {
            return Err(Error::BasisTooSmall {
                requested: k,
                available: self.k(),
            });
        }
        Ok(Eigenbasis {
            phi: self.phi.columns(0, k).into_owned(),
            lambda: self.lambda[..k].to_vec(),
            mass: self.mass.clone(),
        })
    }
}

pub fn eigenbasis(lap: &Laplacian, k: usize) -> Result<Eigenbasis> {
    eigenbasis_with(lap, k, &EigenOptions::default())
}

/// Computes the `k` smallest eigenpairs, densely for small meshes and by
/// shift-invert block Krylov iteration otherwise.
pub fn eigenbasis_with(lap: &Laplacian, k: usize, opts: &EigenOptions) -> Result<Eigenbasis> {
    let n = lap.vertex_count();
    if k == 0 || k > n {
        return Err(Error::BasisTooSmall {
            requested: k,
            available: n,
        });
    }
    let inv_sqrt_mass: Vec<f64> = lap.mass().iter().map(|a| 1.0 / a.sqrt()).collect();
    let (mut vectors, lambda) = if n <= opts.dense_threshold {
        dense_eigen(lap.stiffness(), &inv_sqrt_mass, k)?
    } else {
        sparse_eigen(lap, &inv_sqrt_mass, k, opts)?
    };

    // Back to the generalized problem: φ = A^{-1/2} v.
    for j in 0..k {
        for i in 0..n {
            vectors[(i, j)] *= inv_sqrt_mass[i];
        }
        if j == 0 {
            snap_constant(&mut vectors, lap.mass());
        }
        let first = (0..n).map(|i| vectors[(i, j)]).find(|v| v.abs() > SIGN_EPS);
        if first.is_some_and(|v| v < 0.0) {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    Ok(Eigenbasis {
        phi: vectors,
        lambda,
        mass: lap.mass().to_vec(),
    })
}

/// Replaces a numerically constant first eigenfunction by the exact
/// constant `1/√area`, so constant embeddings tie exactly.
fn snap_constant(vectors: &mut DMatrix<f64>, mass: &[f64]) {
    let n = vectors.nrows();
    let area: f64 = mass.iter().sum();
    let c = 1.0 / area.sqrt();
    let sign = if vectors[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
    let close = (0..n).all(|i| (sign * vectors[(i, 0)] - c).abs() <= 1e-6 * c);
    if close {
        for i in 0..n {
            vectors[(i, 0)] = c;
        }
    }
}

/// Symmetric `A^{-1/2} W A^{-1/2}` as a dense matrix.
fn dense_symmetric(w: &CsrMatrix, d: &[f64]) -> Mat<f64> {
    let n = w.nrows();
    let mut b = Mat::zeros(n, n);
    for (i, j, v) in w.triplets() {
        b[(i, j)] += d[i] * v * d[j];
    }
    // Exact symmetry so the solver sees a self-adjoint input.
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = s;
            b[(j, i)] = s;
        }
    }
    b
}

fn dense_eigen(w: &CsrMatrix, d: &[f64], k: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = w.nrows();
    let b = dense_symmetric(w, d);
    let evd = b
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenNoConvergence { index: 0 })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let lambda = (0..k).map(|j| s[j]).collect();
    let vectors = DMatrix::from_fn(n, k, |i, j| u[(i, j)]);
    Ok((vectors, lambda))
}

/// Matrix-free operator `(B + σI)⁻¹` with `B = D W D`, `D = A^{-1/2}`,
/// applied through a sparse Cholesky factor of `W + σA`.
struct ShiftInvert<'a> {
    solver: CholeskySolver,
    d: &'a [f64],
}

impl ShiftInvert<'_> {
    fn apply(&self, x: &Mat<f64>) -> Mat<f64> {
        let n = x.nrows();
        let m = x.ncols();
        let mut buf = vec![0.0; n * m];
        for j in 0..m {
            for i in 0..n {
                buf[j * n + i] = x[(i, j)] / self.d[i];
            }
        }
        self.solver.solve_columns(&mut buf);
        Mat::from_fn(n, m, |i, j| buf[j * n + i] / self.d[i])
    }
}

fn orthonormalize(x: &Mat<f64>) -> Mat<f64> {
    x.qr().compute_thin_Q()
}

fn sparse_eigen(
    lap: &Laplacian,
    d: &[f64],
    k: usize,
    opts: &EigenOptions,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = lap.vertex_count();
    let w = lap.stiffness();
    let mass = lap.mass();

    let mean_ratio = (0..n).map(|i| w.get(i, i) / mass[i]).sum::<f64>() / n as f64;
    let shift = 1e-6 * mean_ratio.max(f64::MIN_POSITIVE);
    let shifted = CsrMatrix::from_triplets(
        n,
        n,
        w.triplets()
            .chain((0..n).map(|i| (i, i, shift * mass[i])))
            .collect(),
    );
    let op = ShiftInvert {
        solver: CholeskySolver::new(&shifted)?,
        d,
    };

    let block = (k + (k / 2).max(8)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b10c);
    let start = Mat::from_fn(n, block, |_, _| rng.random_range(-1.0..1.0));
    let mut x = orthonormalize(&start);

    let apply_b = |v: &[f64]| -> Vec<f64> {
        let scaled: Vec<f64> = v.iter().zip(d).map(|(a, s)| a * s).collect();
        w.mul_vec(&scaled)
            .into_iter()
            .zip(d)
            .map(|(a, s)| a * s)
            .collect()
    };

    let mut first_unconverged = 0;
    for _ in 0..opts.max_restarts {
        // Two-block Krylov space [X, Op X], then Rayleigh–Ritz on Op.
        let y = op.apply(&x);
        let mut stacked = Mat::zeros(n, 2 * x.ncols());
        stacked.as_mut().submatrix_mut(0, 0, n, x.ncols()).copy_from(&x);
        stacked
            .as_mut()
            .submatrix_mut(0, x.ncols(), n, x.ncols())
            .copy_from(&y);
        let q = orthonormalize(&stacked);
        let z = op.apply(&q);
        let mut h = q.transpose() * &z;
        let m = h.nrows();
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (h[(i, j)] + h[(j, i)]);
                h[(i, j)] = s;
                h[(j, i)] = s;
            }
        }
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenNoConvergence { index: 0 })?;
        // Largest θ of (B + σ)⁻¹ are the smallest λ; faer sorts ascending.
        let u = evd.U();
        let keep = block.min(m);
        let selection = Mat::from_fn(m, keep, |i, j| u[(i, m - 1 - j)]);
        x = &q * &selection;

        let mut lambdas = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        for j in 0..k {
            let v: Vec<f64> = (0..n).map(|i| x[(i, j)]).collect();
            let norm2: f64 = v.iter().map(|a| a * a).sum();
            let bv = apply_b(&v);
            let rq = v.iter().zip(&bv).map(|(a, b)| a * b).sum::<f64>() / norm2;
            let res = bv
                .iter()
                .zip(&v)
                .map(|(b, a)| (b - rq * a).powi(2))
                .sum::<f64>()
                .sqrt()
                / norm2.sqrt();
            lambdas.push(rq);
            residuals.push(res);
        }
        let scale = lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let unconverged = residuals
            .iter()
            .position(|&r| r > opts.tolerance * scale.max(f64::MIN_POSITIVE));
        if let Some(index) = unconverged {
            first_unconverged = index;
        } else {
            let mut vectors = DMatrix::from_fn(n, k, |i, j| x[(i, j)]);
            for j in 0..k {
                let norm = vectors.column(j).norm();
                vectors.column_mut(j).unscale_mut(norm);
            }
            return Ok((vectors, lambdas));
        }
    }
    Err(Error::EigenNoConvergence {
        index: first_unconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::spectral::build_laplacian;

    fn a_gram(basis: &Eigenbasis) -> DMatrix<f64> {
        let k = basis.k();
        DMatrix::from_fn(k, k, |a, b| {
            basis.inner(
                basis.phi().column(a).as_slice(),
                basis.phi().column(b).as_slice(),
            )
        })
    }

    #[test]
    fn k1_is_constant_with_zero_eigenvalue() {
        let mesh = shapes::icosphere(1.0, 2);
        let lap = build_laplacian(&mesh).unwrap();
        let basis = eigenbasis(&lap, 1).unwrap();
        assert!(basis.lambda()[0].abs() < 1e-9);
        let expected = 1.0 / mesh.total_area().sqrt();
        for &v in basis.phi().column(0).iter() {
            assert!(((v - expected) / expected).abs() < 1e-6);
        }
    }

    #[test]
    fn basis_is_mass_orthonormal_and_sorted() {
        let mesh = shapes::displace_radially(&shapes::icosphere(1.0, 2), shapes::ripple(0.1, 3.0));
        let lap = build_laplacian(&mesh).unwrap();
        let basis = eigenbasis(&lap, 20).unwrap();
        let gram = a_gram(&basis);
        for a in 0..20 {
            for b in 0..20 {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((gram[(a, b)] - expected).abs() < 1e-6);
            }
        }
        assert!(basis.lambda()[0] >= -1e-9);
        assert!(basis.lambda().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sparse_path_matches_dense() {
        let mesh = shapes::displace_radially(&shapes::icosphere(1.0, 3), shapes::gaussian_bump(Vec3::new(1.0, 0.3, 0.2), 0.2, 0.3));
        let lap = build_laplacian(&mesh).unwrap();
        let k = 12;
        let dense = eigenbasis(&lap, k).unwrap();
        let opts = EigenOptions {
            dense_threshold: 0,
            ..EigenOptions::default()
        };
        let sparse = eigenbasis_with(&lap, k, &opts).unwrap();
        for j in 0..k {
            let (a, b) = (dense.lambda()[j], sparse.lambda()[j]);
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "λ{j}: {a} vs {b}");
        }
        let gram = a_gram(&sparse);
        for a in 0..k {
            assert!((gram[(a, a)] - 1.0).abs() < 1e-6);
        }
        // Distinct eigenvalues: eigenvectors agree up to the fixed sign.
        let first = (dense.phi().column(1) - sparse.phi().column(1)).amax();
        assert!(first < 1e-6, "{first}");
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let mesh = shapes::icosphere(1.0, 2);
        let lap = build_laplacian(&mesh).unwrap();
        assert_eq!(eigenbasis(&lap, 10).unwrap(), eigenbasis(&lap, 10).unwrap());
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let lap = build_laplacian(&shapes::regular_tetrahedron(1.0)).unwrap();
        assert!(matches!(eigenbasis(&lap, 5), Err(Error::BasisTooSmall { .. })));
        assert!(eigenbasis(&lap, 4).is_ok());
    }

    use crate::mesh::Vec3;
}
