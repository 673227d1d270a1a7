mod common;

use common::*;
use hireg_core::deform::{arap_fit, closest_point_constraints, ArapState};
use hireg_core::eval::{error_curve, geodesic_error, transfer_texture};
use hireg_core::fmap::{pointmap_from_fmap, zoomout, FunctionalMap, PointMap};
use hireg_core::local::{local_loop_subdivide, repair_selection, FaceSelection};
use hireg_core::mesh::io::{read_obj, read_ply, write_obj, write_ply};
use hireg_core::mesh::{dijkstra_geodesic, Uv};
use hireg_core::spectral::{build_laplacian, eigenbasis, mean_curvature, Eigenbasis};
use hireg_core::subdivision::{subdivide_once, Scheme};
use hireg_core::{ScalarField, TriMesh};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn vertex_areas_sum_to_total(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = if rng.random_bool(0.5) { random_grid(&mut rng) } else { random_closed_mesh(&mut rng, 400) };
        let total = mesh.total_area();
        prop_assert!((mesh.vertex_areas().sum() - total).abs() <= 1e-12 * total.max(1.0));
        prop_assert!((mesh.mixed_voronoi_areas().sum() - total).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn closed_genus_zero_euler(seed in any::<u64>()) {
        let mesh = random_closed_mesh(&mut rng(seed), 500);
        mesh.validate().unwrap();
        prop_assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn io_round_trip(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = random_closed_mesh(&mut rng, 300);
        let mut obj = Vec::new();
        write_obj(&mesh, &mut obj).unwrap();
        let back = read_obj(&mut obj.as_slice()).unwrap();
        prop_assert_eq!(back.faces(), mesh.faces());
        prop_assert_eq!(back.positions(), mesh.positions());

        let field = ScalarField::new((0..mesh.vertex_count()).map(|_| rng.random::<f64>()).collect());
        let mut ply = Vec::new();
        write_ply(&mesh, &[("distance", &field)], &mut ply).unwrap();
        let back = read_ply(&mut ply.as_slice()).unwrap();
        prop_assert_eq!(back.faces(), mesh.faces());
        prop_assert_eq!(back.positions(), mesh.positions());
    }

    #[test]
    fn dijkstra_matches_all_pairs(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = loop {
            let m = random_closed_mesh(&mut rng, 96);
            if m.vertex_count() <= 50 { break m; }
        };
        let oracle = all_pairs_shortest(&mesh);
        let source = rng.random_range(0..mesh.vertex_count());
        let d = dijkstra_geodesic(&mesh, &[source]).unwrap();
        for v in 0..mesh.vertex_count() {
            prop_assert!((d[v] - oracle[source][v]).abs() < 1e-12);
        }
    }

    #[test]
    fn subdivision_counts_and_validity(seed in any::<u64>(), scheme in prop_oneof![Just(Scheme::Loop), Just(Scheme::Upsample), Just(Scheme::Bcs)]) {
        let mut rng = rng(seed);
        let mesh = if rng.random_bool(0.7) { random_closed_mesh(&mut rng, 300) } else { random_grid(&mut rng) };
        let (v, e, f) = (mesh.vertex_count(), mesh.topology().unwrap().edge_count(), mesh.face_count());
        let (fine, record) = subdivide_once(&mesh, scheme).unwrap();
        let topo = fine.validate().unwrap();
        let expected = match scheme {
            Scheme::Bcs => (v + f, e + 3 * f, 3 * f),
            _ => (v + e, 2 * e + 3 * f, 4 * f),
        };
        prop_assert_eq!((fine.vertex_count(), topo.edge_count(), fine.face_count()), expected);
        prop_assert_eq!(fine.euler_characteristic(), mesh.euler_characteristic());
        prop_assert_eq!(record.rebuild_faces(mesh.faces()).unwrap(), fine.faces().to_vec());
    }

    #[test]
    fn loop_commutes_with_rigid_motion(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = random_closed_mesh(&mut rng, 300);
        let (rot, t) = random_rigid(&mut rng);
        let moved = mesh.map_positions(|p| rot * p + t).unwrap();
        let (a, _) = subdivide_once(&mesh, Scheme::Loop).unwrap();
        let (b, _) = subdivide_once(&moved, Scheme::Loop).unwrap();
        for (p, q) in a.positions().iter().zip(b.positions()) {
            prop_assert!((rot * p + t - q).norm() < 1e-9);
        }
    }

    #[test]
    fn local_subdivision_properties(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = random_closed_mesh(&mut rng, 500);
        let p = rng.random_range(0.0..0.4);
        let picks: Vec<usize> = (0..mesh.face_count()).filter(|_| rng.random_bool(p)).collect();
        let raw = FaceSelection::new(&mesh, picks).unwrap();
        let sel = repair_selection(&mesh, &raw).unwrap();
        prop_assert_eq!(&repair_selection(&mesh, &sel).unwrap(), &sel);
        if mesh.face_count() <= 100 {
            let oracle = repair_oracle(&mesh, raw.mask());
            prop_assert_eq!(sel.mask(), oracle.as_slice());
        }
        let (fine, record) = local_loop_subdivide(&mesh, &sel).unwrap();
        fine.validate().unwrap();
        prop_assert_eq!(fine.euler_characteristic(), mesh.euler_characteristic());

        let field: Vec<f64> = (0..mesh.vertex_count()).map(|_| rng.random()).collect();
        let moved = record.transport_field(&field);
        for (old, &new) in record.old_vertex_map.iter().enumerate() {
            prop_assert_eq!(moved[new], Some(field[old]));
        }
    }

    #[test]
    fn error_curve_is_a_cdf(values in prop::collection::vec(0.0..1.0f64, 1..200), mut thresholds in prop::collection::vec(0.0..1.2f64, 1..30)) {
        thresholds.sort_by(f64::total_cmp);
        let curve = error_curve(&ScalarField::new(values.clone()), &thresholds).unwrap();
        prop_assert!(curve.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
        prop_assert!(curve.fractions.windows(2).all(|w| w[0] <= w[1]));
        let max = values.iter().cloned().fold(0.0, f64::max);
        if *thresholds.last().unwrap() >= max {
            prop_assert_eq!(*curve.fractions.last().unwrap(), 1.0);
        }
    }

    #[test]
    fn transfer_texture_stays_in_unit_square(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let source = random_closed_mesh(&mut rng, 300);
        let uv: Vec<Uv> = (0..source.vertex_count()).map(|_| Uv::new(rng.random(), rng.random())).collect();
        let source = source.with_uv(uv).unwrap();
        let target = random_closed_mesh(&mut rng, 300);
        let (pi, _) = hireg_core::hra::project_to_surface(&target, &hireg_core::mesh::FaceBvh::new(&source));
        let out = transfer_texture(&source, &target, &pi).unwrap();
        for t in out.uv().unwrap() {
            prop_assert!((0.0..=1.0).contains(&t.x) && (0.0..=1.0).contains(&t.y));
        }
    }

    #[test]
    fn geodesic_error_relabel_invariant(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let target = random_closed_mesh(&mut rng, 200);
        let n = target.vertex_count();
        let pred: Vec<usize> = (0..30).map(|_| rng.random_range(0..n)).collect();
        let truth: Vec<usize> = (0..30).map(|_| rng.random_range(0..n)).collect();
        let perm = random_permutation(&mut rng, n);
        let relabeled = relabel(&target, &perm);
        let a = geodesic_error(
            &PointMap::from_vertices(pred.clone(), &target).unwrap(),
            &PointMap::from_vertices(truth.clone(), &target).unwrap(),
            &target,
        ).unwrap();
        let b = geodesic_error(
            &PointMap::from_vertices(pred.iter().map(|&v| perm[v]).collect(), &relabeled).unwrap(),
            &PointMap::from_vertices(truth.iter().map(|&v| perm[v]).collect(), &relabeled).unwrap(),
            &relabeled,
        ).unwrap();
        for i in 0..30 {
            prop_assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }
}

fn small_basis(mesh: &TriMesh, k: usize) -> Eigenbasis {
    eigenbasis(&build_laplacian(mesh).unwrap(), k).unwrap()
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn eigenpairs_satisfy_rayleigh_quotient(seed in any::<u64>()) {
        let mesh = random_closed_mesh(&mut rng(seed), 400);
        let lap = build_laplacian(&mesh).unwrap();
        let k = 12.min(mesh.vertex_count());
        let basis = eigenbasis(&lap, k).unwrap();
        let again = eigenbasis(&lap, k).unwrap();
        prop_assert_eq!(&basis, &again);
        for j in 0..k {
            let phi: Vec<f64> = basis.phi().column(j).iter().cloned().collect();
            let w_phi = lap.stiffness().mul_vec(&phi);
            let num: f64 = phi.iter().zip(&w_phi).map(|(a, b)| a * b).sum();
            let den = basis.inner(&phi, &phi);
            let lambda = basis.lambda()[j];
            prop_assert!((num / den - lambda).abs() <= 1e-8 * lambda.abs().max(1.0));
        }
    }

    #[test]
    fn analyze_synthesize_adjoint(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = random_closed_mesh(&mut rng, 300);
        let basis = small_basis(&mesh, 8.min(mesh.vertex_count()));
        let c: Vec<f64> = (0..basis.k()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f: Vec<f64> = (0..mesh.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = basis.inner(basis.synthesize(&c).unwrap().values(), &f);
        let coeffs = basis.analyze(&ScalarField::new(f)).unwrap();
        let rhs: f64 = c.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn mean_curvature_rigid_invariant(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = random_closed_mesh(&mut rng, 400);
        let (rot, t) = random_rigid(&mut rng);
        let moved = mesh.map_positions(|p| rot * p + t).unwrap();
        let a = mean_curvature(&mesh).unwrap();
        let b = mean_curvature(&moved).unwrap();
        for v in 0..mesh.vertex_count() {
            prop_assert!((a.values[v] - b.values[v]).abs() < 1e-9);
        }
    }

    #[test]
    fn pointmap_from_fmap_permutation_equivariant(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mesh = random_closed_mesh(&mut rng, 300);
        let k = 6.min(mesh.vertex_count());
        let basis = small_basis(&mesh, k);
        let n = mesh.vertex_count();
        let c = FunctionalMap::new(DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let perm = random_permutation(&mut rng, n);
        let mut phi = DMatrix::zeros(n, k);
        let mut mass = vec![0.0; n];
        for i in 0..n {
            phi.row_mut(perm[i]).copy_from(&basis.phi().row(i));
            mass[perm[i]] = basis.mass()[i];
        }
        let permuted = Eigenbasis::from_parts(phi, basis.lambda().to_vec(), mass).unwrap();
        let a = pointmap_from_fmap(&c, &basis, &basis).unwrap().as_vertices().unwrap();
        let b = pointmap_from_fmap(&c, &permuted, &basis).unwrap().as_vertices().unwrap();
        for i in 0..n {
            prop_assert_eq!(perm[a[i]], b[i]);
        }
    }

    #[test]
    fn zoomout_is_deterministic(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = random_closed_mesh(&mut rng, 400);
        let n = jitter_radially(&m, &mut rng, 0.02);
        let (bm, bn) = (small_basis(&m, 16.min(m.vertex_count())), small_basis(&n, 16.min(n.vertex_count())));
        let k = bm.k().min(bn.k());
        let c0 = FunctionalMap::identity(4.min(k));
        let (c1, p1) = zoomout(&c0, &m, &bm, &bn, k, k, 2).unwrap();
        let (c2, p2) = zoomout(&c0, &m, &bm, &bn, k, k, 2).unwrap();
        prop_assert_eq!(c1, c2);
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn arap_trace_monotone_rotations_orthonormal(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let rest = random_closed_mesh(&mut rng, 400);
        let target = jitter_radially(&rest, &mut rng, 0.1);
        let constraints = closest_point_constraints(&rest, &target, 1.0, -1.0);
        let state = arap_fit(ArapState::new(&rest).unwrap(), &constraints, 15, 0.0).unwrap();
        for w in state.energy_trace().windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
        for r in state.rotations() {
            prop_assert!((r.transpose() * r - nalgebra::Matrix3::identity()).norm() < 1e-9);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn arap_rigid_equivariance(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let rest = random_closed_mesh(&mut rng, 300);
        let target = rest.map_positions(|p| p * 1.05).unwrap();
        let c = closest_point_constraints(&rest, &target, 1.0, -1.0);
        let a = arap_fit(ArapState::new(&rest).unwrap(), &c, 6, 0.0).unwrap();
        let (rot, t) = random_rigid(&mut rng);
        let moved = rest.map_positions(|p| rot * p + t).unwrap();
        let mut c2 = c.clone();
        for anchor in &mut c2.anchors {
            anchor.target = rot * anchor.target + t;
        }
        let b = arap_fit(ArapState::new(&moved).unwrap(), &c2, 6, 0.0).unwrap();
        for (p, q) in a.positions().iter().zip(b.positions()) {
            prop_assert!((rot * p + t - q).norm() < 1e-8);
        }
    }
}
