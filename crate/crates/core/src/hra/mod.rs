//! High-resolution augmentation (alternating subdivision and ARAP fitting,
//! globally or on curvature-selected regions) and the spectral
//! registration pipeline that precedes it.

mod stage_log;

pub use stage_log::{read_stage_log, write_stage_log, StageLog};

use crate::deform::{arap_fit, closest_point_constraints_with, Anchor, ArapState, FitConstraints};
use crate::error::{Error, Result};
use crate::fmap::{fmap_from_landmarks, zoomout, Assignment, FunctionalMap, PointMap};
use crate::local::{local_loop_subdivide, repair_selection, FaceSelection};
use crate::mesh::{connected_components, dijkstra_within, FaceBvh, ScalarField, TriMesh};
use crate::spectral::{build_laplacian, eigenbasis, mean_curvature, MeanCurvature};
use crate::subdivision::{subdivide_once, Scheme, SubdivisionRecord, MAX_BCS_ITERATIONS};

/// Radius used to grow projected detail regions on the template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dilation {
    /// Meters.
    Absolute(f64),
    /// Fraction of the target's bounding-box diagonal.
    Fraction(f64),
}

impl Dilation {
    pub fn radius(&self, target: &TriMesh) -> f64 {
        match *self {
            Dilation::Absolute(r) => r,
            Dilation::Fraction(f) => f * target.bounding_box_diagonal(),
        }
    }
}

/// ARAP fitting parameters shared by every stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    pub data_weight: f64,
    pub arap_weight: f64,
    /// Closest-point pairs farther than this (meters) are dropped.
    pub max_distance: f64,
    pub normal_cos_min: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Closest-point constraints are recomputed this many times per stage.
    pub icp_rounds: usize,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            data_weight: 1.0,
            arap_weight: 1.0,
            max_distance: 0.05,
            normal_cos_min: 0.5,
            max_iters: 50,
            rel_tol: 1e-6,
            icp_rounds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HraConfig {
    pub scheme: Scheme,
    pub iterations: usize,
    /// `|H|` threshold in 1/m for detail regions.
    pub curvature_threshold: f64,
    pub dilation: Dilation,
    pub localized: bool,
    /// Lifts the BCS iteration cap.
    pub allow_deep_bcs: bool,
    pub fit: FitParams,
}

impl Default for HraConfig {
    fn default() -> Self {
        HraConfig {
            scheme: Scheme::Loop,
            iterations: 3,
            curvature_threshold: 0.03,
            dilation: Dilation::Fraction(0.025),
            localized: false,
            allow_deep_bcs: false,
            fit: FitParams::default(),
        }
    }
}

impl HraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.scheme == Scheme::Bcs && self.iterations > MAX_BCS_ITERATIONS && !self.allow_deep_bcs {
            return Err(Error::Config(format!(
                "bcs allows at most {MAX_BCS_ITERATIONS} iterations (requested {})",
                self.iterations
            )));
        }
        if !(self.curvature_threshold > 0.0) {
            return Err(Error::Config(format!(
                "curvature threshold must be positive, got {}",
                self.curvature_threshold
            )));
        }
        let radius = match self.dilation {
            Dilation::Absolute(r) | Dilation::Fraction(r) => r,
        };
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("dilation radius must be non-negative, got {radius}")));
        }
        let f = &self.fit;
        if !(f.data_weight >= 0.0 && f.arap_weight >= 0.0 && f.max_distance > 0.0 && f.rel_tol >= 0.0) {
            return Err(Error::Config("fit weights, max distance and tolerance must be non-negative".into()));
        }
        if !(-1.0..=1.0).contains(&f.normal_cos_min) {
            return Err(Error::Config(format!(
                "normal_cos_min must lie in [-1, 1], got {}",
                f.normal_cos_min
            )));
        }
        Ok(())
    }
}

/// Output of a registration or augmentation run.
#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub mesh: TriMesh,
    /// Registered vertices onto the target surface (closest points).
    pub pointmap: PointMap,
    /// Point-to-surface distance of every registered vertex, in meters.
    pub distance: ScalarField,
    pub log: Vec<StageLog>,
    /// One record per subdivision stage.
    pub records: Vec<SubdivisionRecord>,
}

/// Closest points of every vertex of `mesh` on the surface behind `bvh`, and
/// their distances.
pub fn project_to_surface(mesh: &TriMesh, bvh: &FaceBvh) -> (PointMap, ScalarField) {
    use rayon::prelude::*;
    let hits: Vec<_> = mesh
        .positions()
        .par_iter()
        .map(|p| bvh.closest_point(p).expect("target has faces"))
        .collect();
    let map = PointMap::from_assignments_unchecked(hits.iter().map(|h| Assignment::Surface(h.barycentric())).collect());
    (map, ScalarField::new(hits.iter().map(|h| h.distance).collect()))
}

/// Mean of a per-vertex field weighted by vertex area, so that densely
/// refined patches do not dominate the average.
pub fn area_weighted_mean(mesh: &TriMesh, field: &ScalarField) -> f64 {
    let areas = mesh.vertex_areas();
    let total = areas.sum();
    areas.values().iter().zip(field.values()).map(|(a, d)| a * d).sum::<f64>() / total
}

fn stage_entry(stage: &str, mesh: &TriMesh, distance: &ScalarField, arap_iters: usize, energy: f64) -> StageLog {
    StageLog {
        stage: stage.to_string(),
        vertices: mesh.vertex_count(),
        faces: mesh.face_count(),
        mean_dist_m: area_weighted_mean(mesh, distance),
        max_dist_m: distance.max(),
        arap_iters,
        energy,
    }
}

/// Fits `mesh` towards the target with fresh closest-point constraints,
/// using the current shape as the ARAP rest pose. Returns the fitted mesh,
/// the ARAP iterations spent and the final energy.
pub fn fit_to_target(mesh: &TriMesh, target: &TriMesh, bvh: &FaceBvh, fit: &FitParams) -> Result<(TriMesh, usize, f64)> {
    let mut state = ArapState::new(mesh)?;
    let mut iters = 0;
    let mut energy = 0.0;
    for _ in 0..fit.icp_rounds.max(1) {
        let current = state.mesh()?;
        let constraints =
            closest_point_constraints_with(&current, target, bvh, fit.max_distance, fit.normal_cos_min)
                .with_weights(fit.data_weight, fit.arap_weight);
        if constraints.anchors.is_empty() {
            log::warn!("no closest-point pairs within {} m; stage left unfitted", fit.max_distance);
            break;
        }
        let before = state.iterations();
        state = arap_fit(state, &constraints, fit.max_iters, fit.rel_tol)?;
        iters += state.iterations() - before;
        energy = state.energy();
    }
    Ok((state.mesh()?, iters, energy))
}

/// Global augmentation: `cfg.iterations` rounds of whole-mesh subdivision
/// followed by an ARAP fit to the target.
pub fn hra_global(template: &TriMesh, target: &TriMesh, cfg: &HraConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    target.validate()?;
    let bvh = FaceBvh::new(target);
    let mut mesh = template.clone();
    let (_, dist) = project_to_surface(&mesh, &bvh);
    let mut log = vec![stage_entry("input", &mesh, &dist, 0, f64::NAN)];
    let mut records = Vec::new();
    for it in 1..=cfg.iterations {
        let (refined, record) = subdivide_once(&mesh, cfg.scheme)?;
        let (fitted, iters, energy) = fit_to_target(&refined, target, &bvh, &cfg.fit)?;
        mesh = fitted;
        records.push(record);
        let (_, dist) = project_to_surface(&mesh, &bvh);
        log.push(stage_entry(&format!("{}-{it}", cfg.scheme), &mesh, &dist, iters, energy));
    }
    finish(mesh, &bvh, log, records)
}

fn finish(mesh: TriMesh, bvh: &FaceBvh, log: Vec<StageLog>, records: Vec<SubdivisionRecord>) -> Result<RegistrationResult> {
    mesh.validate()?;
    let (pointmap, distance) = project_to_surface(&mesh, bvh);
    Ok(RegistrationResult {
        mesh,
        pointmap,
        distance,
        log,
        records,
    })
}

/// Target vertices whose `|H|` exceeds `threshold`, excluding boundary
/// vertices where the estimate is unreliable.
pub fn detail_vertices(curvature: &MeanCurvature, threshold: f64) -> Vec<bool> {
    (0..curvature.values.len())
        .map(|v| !curvature.boundary[v] && curvature.abs(v) > threshold)
        .collect()
}

/// Template faces to refine: high-curvature target regions pulled back
/// through `pi`, grown geodesically, reduced to faces whose three vertices
/// are all selected, then repaired.
pub fn select_detail_regions(
    target: &TriMesh,
    template: &TriMesh,
    pi: &PointMap,
    cfg: &HraConfig,
) -> Result<FaceSelection> {
    let curvature = mean_curvature(target)?;
    select_with(target, template, pi, cfg, &detail_vertices(&curvature, cfg.curvature_threshold))
}

fn select_with(
    target: &TriMesh,
    template: &TriMesh,
    pi: &PointMap,
    cfg: &HraConfig,
    detail: &[bool],
) -> Result<FaceSelection> {
    if pi.len() != template.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: template.vertex_count(),
            actual: pi.len(),
        });
    }
    let seeds: Vec<usize> = (0..template.vertex_count())
        .filter(|&i| detail[pi.nearest_vertex(i, target)])
        .collect();
    if seeds.is_empty() {
        return Ok(FaceSelection::none(template));
    }
    let dist = dijkstra_within(template, &seeds, cfg.dilation.radius(target))?;
    let mask = template
        .faces()
        .iter()
        .map(|f| f.iter().all(|&v| dist[v].is_finite()))
        .collect();
    repair_selection(template, &FaceSelection::from_mask(template, mask)?)
}

/// Localized augmentation: each round refines only the template regions
/// facing high-curvature target detail, then fits. `pi` seeds the first
/// selection; later rounds project the refined template onto the target.
pub fn hra_local(template: &TriMesh, target: &TriMesh, pi: &PointMap, cfg: &HraConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    target.validate()?;
    if cfg.scheme != Scheme::Loop {
        return Err(Error::Config(format!(
            "localized augmentation supports the loop scheme only (got {})",
            cfg.scheme
        )));
    }
    let bvh = FaceBvh::new(target);
    let detail = detail_vertices(&mean_curvature(target)?, cfg.curvature_threshold);
    let mut mesh = template.clone();
    let (_, dist) = project_to_surface(&mesh, &bvh);
    let mut log = vec![stage_entry("input", &mesh, &dist, 0, f64::NAN)];
    let mut records = Vec::new();
    let mut map = pi.clone();
    for it in 1..=cfg.iterations {
        let selection = select_with(target, &mesh, &map, cfg, &detail)?;
        log::info!(
            "local stage {it}: {} of {} faces selected",
            selection.len(),
            mesh.face_count()
        );
        let (refined, record) = local_loop_subdivide(&mesh, &selection)?;
        let (fitted, iters, energy) = fit_to_target(&refined, target, &bvh, &cfg.fit)?;
        mesh = fitted;
        records.push(record);
        let (projected, dist) = project_to_surface(&mesh, &bvh);
        map = projected;
        log.push(stage_entry(&format!("local-{it}"), &mesh, &dist, iters, energy));
    }
    finish(mesh, &bvh, log, records)
}

/// Spectral registration parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ZosrConfig {
    /// Initial truncation on the template (rows of C).
    pub k_start_template: usize,
    /// Initial truncation on the target (columns of C).
    pub k_start_target: usize,
    pub k_end: usize,
    pub step: usize,
    /// Laplacian-commutativity weight of the landmark initialisation.
    pub regularization: f64,
    pub fit: FitParams,
}

impl Default for ZosrConfig {
    fn default() -> Self {
        ZosrConfig {
            k_start_template: 50,
            k_start_target: 30,
            k_end: 100,
            step: 5,
            regularization: 1e-3,
            fit: FitParams::default(),
        }
    }
}

/// Landmark-initialised functional map, refined by ZoomOut, converted to a
/// pointwise map, then used to anchor an ARAP fit of the template.
/// `landmarks` pairs a template vertex with a target vertex.
pub fn zosr_register(
    template: &TriMesh,
    target: &TriMesh,
    landmarks: &[(usize, usize)],
    cfg: &ZosrConfig,
) -> Result<(RegistrationResult, FunctionalMap)> {
    if landmarks.is_empty() {
        return Err(Error::InvalidArgument("registration needs at least one landmark pair".into()));
    }
    template.validate()?;
    target.validate()?;
    let components = connected_components(target);
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    let k_end = cfg.k_end;
    let basis_n = eigenbasis(&build_laplacian(template)?, k_end.min(template.vertex_count()))?;
    let basis_m = eigenbasis(&build_laplacian(target)?, k_end.min(target.vertex_count()))?;
    let c0 = fmap_from_landmarks(
        landmarks,
        &basis_m,
        &basis_n,
        cfg.k_start_target.min(basis_m.k()),
        cfg.k_start_template.min(basis_n.k()),
        cfg.regularization,
    )?;
    let (c, pi) = zoomout(&c0, target, &basis_m, &basis_n, basis_m.k(), basis_n.k(), cfg.step)?;

    let anchors = (0..template.vertex_count())
        .map(|v| Anchor {
            vertex: v,
            target: pi.position(v, target),
            weight: 1.0,
        })
        .collect();
    let constraints = FitConstraints::new(anchors).with_weights(cfg.fit.data_weight, cfg.fit.arap_weight);
    let state = arap_fit(ArapState::new(template)?, &constraints, cfg.fit.max_iters, cfg.fit.rel_tol)?;
    let mesh = state.mesh()?;
    let bvh = FaceBvh::new(target);
    let (_, dist) = project_to_surface(&mesh, &bvh);
    let log = vec![stage_entry("zosr", &mesh, &dist, state.iterations(), state.energy())];
    let mut result = finish(mesh, &bvh, log, Vec::new())?;
    result.pointmap = pi;
    Ok((result, c))
}

/// Registration followed by augmentation, as configured.
pub fn register_and_augment(
    template: &TriMesh,
    target: &TriMesh,
    landmarks: &[(usize, usize)],
    zosr: &ZosrConfig,
    hra: Option<&HraConfig>,
) -> Result<RegistrationResult> {
    let (base, _) = zosr_register(template, target, landmarks, zosr)?;
    let Some(cfg) = hra else {
        return Ok(base);
    };
    let mut result = if cfg.localized {
        let (pi, _) = project_to_surface(&base.mesh, &FaceBvh::new(target));
        hra_local(&base.mesh, target, &pi, cfg)?
    } else {
        hra_global(&base.mesh, target, cfg)?
    };
    let mut log = base.log;
    log.extend(result.log.drain(1..));
    result.log = log;
    Ok(result)
}

#[cfg(test)]
mod tests;
