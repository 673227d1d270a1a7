use crate::config::PipelineConfig;
use crate::{CliError, EvaluateArgs, RegisterArgs, SubdivideArgs, TransferArgs, ValidateArgs, ZoomoutArgs};
use hireg_core::eval::{error_curve, geodesic_error, transfer_texture as transfer, uniform_thresholds};
use hireg_core::fmap::{fmap_from_landmarks, zoomout as refine, FunctionalMap, PointMap};
use hireg_core::hra::{register_and_augment, write_stage_log};
use hireg_core::local::{first_violation, local_loop_subdivide, repair_selection, FaceSelection};
use hireg_core::mesh::io::{load_mesh, save_mesh, save_mesh_with_fields, MeshFormat};
use hireg_core::mesh::connected_components;
use hireg_core::spectral::{build_laplacian, eigenbasis};
use hireg_core::subdivision::{subdivide as subdivide_mesh, Scheme, SubdivisionRecord};
use hireg_core::TriMesh;
use log::info;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

fn load(path: &Path) -> Result<TriMesh, CliError> {
    Ok(load_mesh(path, MeshFormat::from_path(path)?)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))
}

/// Pairs of 0-based vertex ids, one pair per line; `#` starts a comment.
fn read_landmarks(path: &Path, n: &TriMesh, m: &TriMesh) -> Result<Vec<(usize, usize)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read landmarks {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CliError::Input(format!("{}:{}: expected two vertex ids", path.display(), i + 1));
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [a, b] = ids[..] else { return Err(bad()) };
        if a >= n.vertex_count() || b >= m.vertex_count() {
            return Err(CliError::Input(format!(
                "{}:{}: landmark ({a}, {b}) out of range",
                path.display(),
                i + 1
            )));
        }
        pairs.push((a, b));
    }
    if pairs.is_empty() {
        return Err(CliError::Input(format!("{} holds no landmarks", path.display())));
    }
    Ok(pairs)
}

fn required<'a>(value: &'a Option<std::path::PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Input(format!("missing '{key}' (config key or --{key})")))
}

pub fn register(args: RegisterArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    for (key, value) in [
        ("template", &args.template),
        ("target", &args.target),
        ("landmarks", &args.landmarks),
        ("output", &args.output),
    ] {
        if let Some(v) = value {
            cfg.set(key, &v.display().to_string())?;
        }
    }
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    let out = required(&cfg.output, "output")?.to_path_buf();
    let template = load(required(&cfg.template, "template")?)?;
    let target = load(required(&cfg.target, "target")?)?;
    let landmarks = read_landmarks(required(&cfg.landmarks, "landmarks")?, &template, &target)?;
    fs::create_dir_all(&out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
    write_with(&out.join("config.txt"), |w| w.write_all(cfg.to_text().as_bytes()))?;

    info!(
        "registering {} vertices onto {} vertices with {} landmarks",
        template.vertex_count(),
        target.vertex_count(),
        landmarks.len()
    );
    let hra = cfg.hra_enabled.then_some(&cfg.hra);
    let result = register_and_augment(&template, &target, &landmarks, &cfg.zosr, hra)?;
    for s in &result.log {
        info!("{}: {} vertices, mean distance {:.3e} m", s.stage, s.vertices, s.mean_dist_m);
    }

    let format = if cfg.mesh_format == "ply" { MeshFormat::Ply } else { MeshFormat::Obj };
    save_mesh(&result.mesh, &out.join(format!("registered.{}", cfg.mesh_format)), format)?;
    save_mesh_with_fields(&result.mesh, &out.join("distance.ply"), MeshFormat::Ply, &[("distance", &result.distance)])?;
    write_with(&out.join("pointmap.txt"), |w| result.pointmap.write(w))?;
    write_with(&out.join("stage_log.csv"), |w| write_stage_log(&result.log, w))?;
    write_records(&out.join("records"), &result.records)?;
    Ok(())
}

fn write_records(dir: &Path, records: &[SubdivisionRecord]) -> Result<(), CliError> {
    if records.is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    for (i, r) in records.iter().enumerate() {
        write_with(&dir.join(format!("record-{}.txt", i + 1)), |w| r.write(w))?;
    }
    Ok(())
}

pub fn subdivide(args: SubdivideArgs) -> Result<(), CliError> {
    let mesh = load(&args.input)?;
    let (fine, records) = match &args.selection {
        Some(path) => {
            if args.scheme != Scheme::Loop || args.iters != 1 {
                return Err(CliError::Input("local subdivision supports --scheme loop --iters 1 only".into()));
            }
            let mut sel = FaceSelection::load(path, &mesh)?;
            if args.repair {
                sel = repair_selection(&mesh, &sel)?;
            }
            let (fine, record) = local_loop_subdivide(&mesh, &sel)?;
            (fine, vec![record])
        }
        None => subdivide_mesh(&mesh, args.scheme, args.iters, args.allow_deep_bcs)?,
    };
    info!("{} -> {} faces", mesh.face_count(), fine.face_count());
    save_mesh(&fine, &args.output, MeshFormat::from_path(&args.output)?)?;
    if let Some(dir) = &args.records {
        write_records(dir, &records)?;
    }
    Ok(())
}

pub fn zoomout(args: ZoomoutArgs) -> Result<(), CliError> {
    let n = load(&args.source)?;
    let m = load(&args.target)?;
    if args.step == 0 {
        return Err(CliError::Input("--step must be at least 1".into()));
    }
    let basis_n = eigenbasis(&build_laplacian(&n)?, args.k_end.min(n.vertex_count()))?;
    let basis_m = eigenbasis(&build_laplacian(&m)?, args.k_end.min(m.vertex_count()))?;
    let c0 = match (&args.init, &args.landmarks) {
        (Some(path), _) => FunctionalMap::read(&mut open(path)?)?,
        (None, Some(path)) => {
            let pairs = read_landmarks(path, &n, &m)?;
            let k = args.k_start.min(basis_n.k()).min(basis_m.k());
            fmap_from_landmarks(&pairs, &basis_m, &basis_n, k, k, args.regularization)?
        }
        (None, None) => return Err(CliError::Input("one of --init or --landmarks is required".into())),
    };
    let (c, pi) = refine(&c0, &m, &basis_m, &basis_n, basis_m.k(), basis_n.k(), args.step)?;
    write_with(&args.output, |w| pi.write(w))?;
    if let Some(path) = &args.fmap {
        write_with(path, |w| c.write(w))?;
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    if !(args.max_threshold >= 0.0) || args.samples == 0 {
        return Err(CliError::Input("--max-threshold must be non-negative and --samples positive".into()));
    }
    let target = load(&args.target)?;
    let pred = PointMap::read(&mut open(&args.pred)?, &target)?;
    let truth = PointMap::read(&mut open(&args.truth)?, &target)?;
    let errors = geodesic_error(&pred, &truth, &target)?;
    info!("mean normalized geodesic error {:.4e}", errors.mean());
    let curve = error_curve(&errors, &uniform_thresholds(args.max_threshold, args.samples))?;
    write_with(&args.output, |w| curve.write_csv(w))
}

pub fn transfer_texture(args: TransferArgs) -> Result<(), CliError> {
    let source = load(&args.source)?;
    let target = load(&args.target)?;
    let pi = PointMap::read(&mut open(&args.pointmap)?, &source)?;
    let out = transfer(&source, &target, &pi)?;
    save_mesh(&out, &args.output, MeshFormat::from_path(&args.output)?)?;
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let mesh = load(&args.input)?;
    let topo = mesh.validate()?;
    let boundary = (0..topo.edge_count()).filter(|&e| topo.is_boundary_edge(e)).count();
    println!("vertices {}", mesh.vertex_count());
    println!("faces {}", mesh.face_count());
    println!("edges {}", topo.edge_count());
    println!("boundary_edges {boundary}");
    println!("components {}", connected_components(&mesh));
    println!("euler_characteristic {}", mesh.euler_characteristic());
    println!("area {}", mesh.total_area());
    if let Some(path) = &args.selection {
        let sel = FaceSelection::load(path, &mesh)?;
        println!("selected_faces {}", sel.len());
        if let Some((face, count)) = first_violation(&mesh, &sel)? {
            return Err(CliError::Input(format!(
                "selection is not repaired: unselected face {face} borders {count} selected faces"
            )));
        }
    }
    Ok(())
}
