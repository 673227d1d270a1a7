//! Correspondence evaluation (cumulative geodesic error) and texture
//! transfer.

use crate::error::{Error, Result};
use crate::fmap::{Assignment, PointMap};
use crate::mesh::{EdgeGraph, ScalarField, TriMesh, Uv};
use rayon::prelude::*;
use std::io::Write;

/// Per source vertex, the graph-geodesic distance on `target` between the
/// predicted and true assignments (surface points snapped to their heaviest
/// corner), divided by `√area(target)`.
pub fn geodesic_error(pred: &PointMap, truth: &PointMap, target: &TriMesh) -> Result<ScalarField> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    for map in [pred, truth] {
        PointMap::new(map.assignments().to_vec(), target)?;
    }
    let normalizer = target.total_area().sqrt();
    let graph = EdgeGraph::new(target);
    let errors = (0..pred.len())
        .into_par_iter()
        .map(|i| {
            let p = pred.snapped_vertex(i, target);
            let t = truth.snapped_vertex(i, target);
            graph.distance_between(t, p) / normalizer
        })
        .collect();
    Ok(ScalarField::new(errors))
}

/// Empirical CDF of errors sampled at ascending thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl ErrorCurve {
    /// CSV with header `threshold,fraction`.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "threshold,fraction")?;
        for (t, f) in self.thresholds.iter().zip(&self.fractions) {
            writeln!(w, "{t},{f}")?;
        }
        Ok(())
    }
}

/// `count` evenly spaced thresholds from 0 to `max`.
pub fn uniform_thresholds(max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![max],
        _ => (0..count).map(|i| max * i as f64 / (count - 1) as f64).collect(),
    }
}

pub fn error_curve(errors: &ScalarField, thresholds: &[f64]) -> Result<ErrorCurve> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("no errors to summarise".into()));
    }
    if thresholds.iter().any(|t| t.is_nan()) || thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("thresholds must be sorted ascending".into()));
    }
    let mut sorted = errors.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let fractions = thresholds
        .iter()
        .map(|&t| sorted.partition_point(|&e| e <= t) as f64 / n)
        .collect();
    Ok(ErrorCurve {
        thresholds: thresholds.to_vec(),
        fractions,
    })
}

/// Gives `target` per-vertex UVs read off `source` through `pi`
/// (target → source): copied for vertex assignments, barycentric
/// interpolation for surface points.
pub fn transfer_texture(source: &TriMesh, target: &TriMesh, pi: &PointMap) -> Result<TriMesh> {
    let uv = source
        .uv()
        .ok_or_else(|| Error::InvalidArgument("source mesh has no texture coordinates".into()))?;
    if pi.len() != target.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: target.vertex_count(),
            actual: pi.len(),
        });
    }
    PointMap::new(pi.assignments().to_vec(), source)?;
    let out: Vec<Uv> = pi
        .assignments()
        .iter()
        .map(|a| match a {
            Assignment::Vertex(j) => uv[*j],
            Assignment::Surface(b) => {
                let f = source.faces()[b.face];
                uv[f[0]] * b.weights[0] + uv[f[1]] * b.weights[1] + uv[f[2]] * b.weights[2]
            }
        })
        .collect();
    target.clone().with_uv(out)
}
