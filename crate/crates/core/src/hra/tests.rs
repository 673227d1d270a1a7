use super::*;
use crate::mesh::Vec3;
use crate::shapes;

fn mean(values: &ScalarField) -> f64 {
    values.mean()
}

#[test]
fn unit_sphere_is_selected_everywhere() {
    let sphere = shapes::icosphere(1.0, 2);
    let cfg = HraConfig::default();
    let sel = select_detail_regions(&sphere, &sphere, &PointMap::identity(&sphere), &cfg).unwrap();
    assert_eq!(sel.len(), sphere.face_count());
}

#[test]
fn large_sphere_is_below_threshold() {
    let sphere = shapes::icosphere(100.0, 2);
    let cfg = HraConfig::default();
    let sel = select_detail_regions(&sphere, &sphere, &PointMap::identity(&sphere), &cfg).unwrap();
    assert!(sel.is_empty());
}

#[test]
fn spike_selection_matches_hand_built_set() {
    // One vertex pushed outwards: only it and its ring exceed the threshold.
    let base = shapes::icosphere(1.0, 2);
    let spike = 0;
    let mut positions = base.positions().to_vec();
    positions[spike] *= 1.4;
    let target = base.with_positions(positions).unwrap();
    let h = mean_curvature(&target).unwrap();
    let threshold = 2.0;
    let detail = detail_vertices(&h, threshold);
    assert!(detail[spike]);

    let cfg = HraConfig {
        curvature_threshold: threshold,
        dilation: Dilation::Absolute(0.0),
        ..Default::default()
    };
    let sel = select_detail_regions(&target, &base, &PointMap::identity(&base), &cfg).unwrap();
    // Expected: faces with all corners in the detail set, then repaired.
    let mask: Vec<bool> = base.faces().iter().map(|f| f.iter().all(|&v| detail[v])).collect();
    let expected = repair_selection(&base, &FaceSelection::from_mask(&base, mask).unwrap()).unwrap();
    assert_eq!(sel, expected);

    // A radius covering one ring adds exactly the faces around the seeds' neighbours.
    let edge = {
        let topo = base.topology().unwrap();
        let (a, b) = topo.edges()[0];
        (base.positions()[a] - base.positions()[b]).norm()
    };
    let cfg = HraConfig {
        dilation: Dilation::Absolute(edge * 1.2),
        ..cfg
    };
    let wide = select_detail_regions(&target, &base, &PointMap::identity(&base), &cfg).unwrap();
    assert!(wide.len() > sel.len());
    for f in sel.ids() {
        assert!(wide.contains(f));
    }
}

#[test]
fn global_on_perfect_template() {
    // Midpoint refinement stays on the template surface, so nothing moves.
    let mesh = shapes::icosphere(1.0, 1);
    let cfg = HraConfig {
        scheme: Scheme::Upsample,
        iterations: 2,
        ..Default::default()
    };
    let result = hra_global(&mesh, &mesh, &cfg).unwrap();
    assert_eq!(result.mesh.face_count(), mesh.face_count() * 16);
    assert_eq!(result.log.len(), 3);
    assert_eq!(result.records.len(), 2);
    result.mesh.validate().unwrap();
    assert!(mean(&result.distance) < 1e-6, "{}", mean(&result.distance));
}

#[test]
fn loop_fit_pulls_smoothed_mesh_back() {
    // Loop smoothing shrinks the mesh off the template; the fit recovers most of it.
    let mesh = shapes::icosphere(1.0, 1);
    let (smoothed, _) = crate::subdivision::loop_subdivide(&mesh).unwrap();
    let bvh = FaceBvh::new(&mesh);
    let (_, before) = project_to_surface(&smoothed, &bvh);
    let cfg = HraConfig {
        iterations: 1,
        ..Default::default()
    };
    let result = hra_global(&mesh, &mesh, &cfg).unwrap();
    assert!(mean(&result.distance) < 0.5 * mean(&before));
}

/// Two Loop steps of `mesh`: the template's own refinement is already on it.
fn loop_limit_target(mesh: &TriMesh) -> TriMesh {
    crate::subdivision::subdivide(mesh, Scheme::Loop, 2, false).unwrap().0
}

#[test]
fn bcs_iteration_cap() {
    let mesh = shapes::icosphere(1.0, 1);
    let target = shapes::icosphere(1.0, 3);
    let mut cfg = HraConfig {
        scheme: Scheme::Bcs,
        iterations: 3,
        ..Default::default()
    };
    assert!(matches!(hra_global(&mesh, &target, &cfg), Err(Error::Config(_))));
    cfg.iterations = 2;
    let result = hra_global(&mesh, &target, &cfg).unwrap();
    assert_eq!(result.mesh.face_count(), mesh.face_count() * 9);
}

#[test]
fn local_with_flat_target_adds_nothing() {
    let grid = shapes::grid(6, 6, 1.0);
    let cfg = HraConfig {
        iterations: 2,
        ..Default::default()
    };
    let result = hra_local(&grid, &grid, &PointMap::identity(&grid), &cfg).unwrap();
    assert_eq!(result.mesh.vertex_count(), grid.vertex_count());
    assert!(result.records.iter().all(|r| r.is_empty()));
    assert!(mean(&result.distance) < 1e-9);
}

#[test]
fn local_with_full_selection_matches_global_connectivity() {
    let mesh = shapes::icosphere(1.0, 1);
    let target = loop_limit_target(&mesh);
    let cfg = HraConfig {
        iterations: 2,
        ..Default::default()
    };
    let global = hra_global(&mesh, &target, &cfg).unwrap();
    let local = hra_local(&mesh, &target, &PointMap::identity(&mesh), &cfg).unwrap();
    assert_eq!(local.mesh.faces(), global.mesh.faces());
}

#[test]
fn zosr_identity_and_errors() {
    let mesh = shapes::displace_radially(
        &shapes::icosphere(1.0, 2),
        shapes::gaussian_bump(Vec3::new(0.0, 0.6, 0.8), 0.2, 0.3),
    );
    let landmarks = [(0, 0), (10, 10), (40, 40), (80, 80), (120, 120)];
    let cfg = ZosrConfig {
        k_start_template: 10,
        k_start_target: 10,
        k_end: 30,
        ..Default::default()
    };
    let (result, _) = zosr_register(&mesh, &mesh, &landmarks, &cfg).unwrap();
    let rms = (result.distance.values().iter().map(|d| d * d).sum::<f64>() / mesh.vertex_count() as f64).sqrt();
    assert!(rms < 1e-6, "{rms}");
    assert_eq!(result.pointmap, PointMap::identity(&mesh));
    assert!(zosr_register(&mesh, &mesh, &[], &cfg).is_err());
}

#[test]
fn stage_log_round_trip() {
    let log = vec![
        StageLog {
            stage: "input".into(),
            vertices: 12,
            faces: 20,
            mean_dist_m: 0.5,
            max_dist_m: 1.0,
            arap_iters: 0,
            energy: f64::NAN,
        },
        StageLog {
            stage: "loop-1".into(),
            vertices: 42,
            faces: 80,
            mean_dist_m: 0.25,
            max_dist_m: 0.75,
            arap_iters: 7,
            energy: 1.5e-3,
        },
    ];
    let mut out = Vec::new();
    write_stage_log(&log, &mut out).unwrap();
    let text = String::from_utf8(out.clone()).unwrap();
    assert!(text.starts_with("stage,vertices,faces,mean_dist_m,max_dist_m,arap_iters,energy\ninput,12,20,"));
    let back = read_stage_log(&mut out.as_slice()).unwrap();
    assert_eq!(back[1], log[1]);
    assert!(back[0].energy.is_nan());
}
