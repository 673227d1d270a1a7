//! Localized Loop subdivision: only selected faces are split 1→4 and the
//! ring of faces around them is stitched with 1→2 splits.

use crate::error::{Error, Result};
use crate::mesh::{EdgeTopology, TriMesh, Vec3};
use crate::subdivision::{loop_even, loop_odd, refine, Scheme, SubdivisionRecord};
use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// A set of faces of a particular mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceSelection {
    selected: Vec<bool>,
}

impl FaceSelection {
    pub fn new(mesh: &TriMesh, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut selected = vec![false; mesh.face_count()];
        for f in ids {
            if f >= selected.len() {
                return Err(Error::IndexOutOfRange {
                    what: "faces",
                    index: f,
                    len: selected.len(),
                });
            }
            selected[f] = true;
        }
        Ok(FaceSelection { selected })
    }

    pub fn from_mask(mesh: &TriMesh, selected: Vec<bool>) -> Result<Self> {
        if selected.len() != mesh.face_count() {
            return Err(Error::LengthMismatch {
                expected: mesh.face_count(),
                actual: selected.len(),
            });
        }
        Ok(FaceSelection { selected })
    }

    pub fn none(mesh: &TriMesh) -> Self {
        FaceSelection {
            selected: vec![false; mesh.face_count()],
        }
    }

    pub fn all(mesh: &TriMesh) -> Self {
        FaceSelection {
            selected: vec![true; mesh.face_count()],
        }
    }

    pub fn contains(&self, f: usize) -> bool {
        self.selected[f]
    }

    pub fn mask(&self) -> &[bool] {
        &self.selected
    }

    /// Selected face ids, ascending.
    pub fn ids(&self) -> Vec<usize> {
        (0..self.selected.len()).filter(|&f| self.selected[f]).collect()
    }

    pub fn len(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.selected.iter().any(|&s| s)
    }

    /// One 0-based face id per line.
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        for f in self.ids() {
            writeln!(w, "{f}")?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl BufRead, mesh: &TriMesh) -> Result<Self> {
        let mut ids = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let err = |message: String| Error::Parse { line: n + 1, message };
            let line = line.map_err(|e| err(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            ids.push(t.parse().map_err(|_| err(format!("invalid face id '{t}'")))?);
        }
        Self::new(mesh, ids)
    }

    pub fn load(path: &Path, mesh: &TriMesh) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(&mut BufReader::new(file), mesh)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }
}

fn selected_edge_count(topo: &EdgeTopology, sel: &[bool], f: usize) -> usize {
    topo.face_neighbors(f).filter(|&g| sel[g]).count()
}

/// Grows the selection until no unselected face is edge-adjacent to more
/// than one selected face.
pub fn repair_selection(mesh: &TriMesh, sel: &FaceSelection) -> Result<FaceSelection> {
    let topo = mesh.topology()?;
    let mut selected = sel.selected.clone();
    let mut queue: VecDeque<usize> = (0..selected.len()).filter(|&f| !selected[f]).collect();
    while let Some(f) = queue.pop_front() {
        if selected[f] || selected_edge_count(&topo, &selected, f) < 2 {
            continue;
        }
        selected[f] = true;
        queue.extend(topo.face_neighbors(f).filter(|&g| !selected[g]));
    }
    Ok(FaceSelection { selected })
}

fn violation(topo: &EdgeTopology, sel: &[bool]) -> Option<(usize, usize)> {
    (0..sel.len())
        .filter(|&f| !sel[f])
        .map(|f| (f, selected_edge_count(topo, sel, f)))
        .find(|&(_, c)| c >= 2)
}

/// First unselected face touching two or more selected faces, with its count.
pub fn first_violation(mesh: &TriMesh, sel: &FaceSelection) -> Result<Option<(usize, usize)>> {
    Ok(violation(&mesh.topology()?, &sel.selected))
}

/// Loop-subdivides the selected faces. Selected faces split 1→4, each
/// unselected face with one split edge splits 1→2 towards its opposite
/// corner. Vertices with any unselected incident face keep their position.
pub fn local_loop_subdivide(mesh: &TriMesh, sel: &FaceSelection) -> Result<(TriMesh, SubdivisionRecord)> {
    if sel.selected.len() != mesh.face_count() {
        return Err(Error::LengthMismatch {
            expected: mesh.face_count(),
            actual: sel.selected.len(),
        });
    }
    let topo = mesh.topology()?;
    if let Some((face, count)) = violation(&topo, &sel.selected) {
        return Err(Error::UnrepairedSelection { face, count });
    }

    let split: Vec<bool> = (0..topo.edge_count())
        .map(|e| topo.edge_faces(e).iter().flatten().any(|&f| sel.selected[f]))
        .collect();
    let refinement = refine(mesh, &topo, &split)?;

    let n = mesh.vertex_count();
    let mut interior = vec![true; n];
    let mut touched = vec![false; n];
    for (f, face) in mesh.faces().iter().enumerate() {
        for &v in face {
            if sel.selected[f] {
                touched[v] = true;
            } else {
                interior[v] = false;
            }
        }
    }
    let boundary = topo.boundary_vertices(n);
    let mut positions: Vec<Vec3> = (0..n)
        .map(|v| {
            if interior[v] && touched[v] {
                loop_even(mesh, &topo, &boundary, v)
            } else {
                mesh.positions()[v]
            }
        })
        .collect();
    positions.extend(refinement.odd_edges.iter().map(|&e| loop_odd(mesh, &topo, e)));

    let mut out = TriMesh::new(positions, refinement.faces.clone())?;
    if let Some(uv) = mesh.uv() {
        out = out.with_uv(refinement.uvs(uv, &topo))?;
    }
    Ok((out, refinement.record(Scheme::Loop, mesh, &topo)))
}
