use crate::error::{Error, Result};
use crate::fmap::{Assignment, PointMap};
use crate::mesh::{BarycentricPoint, TriMesh};
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Barycentric: one vertex per face, 1→3 split.
    Bcs,
    /// Edge midpoints, 1→4 split, old vertices fixed.
    Upsample,
    /// Loop: 1→4 split with smoothing masks.
    Loop,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bcs => "bcs",
            Scheme::Upsample => "upsample",
            Scheme::Loop => "loop",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bcs" => Ok(Scheme::Bcs),
            "upsample" => Ok(Scheme::Upsample),
            "loop" => Ok(Scheme::Loop),
            other => Err(Error::Config(format!(
                "unknown subdivision scheme '{other}' (expected bcs, upsample or loop)"
            ))),
        }
    }
}

/// What a newly inserted vertex was created from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrigin {
    /// Barycenter of an old face.
    Face(usize),
    /// On the old edge between two old vertices (`a < b`).
    Edge(usize, usize),
}

/// Provenance of one subdivision step: how old vertices and faces relate to
/// the refined mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdivisionRecord {
    pub scheme: Scheme,
    /// New index of every old vertex.
    pub old_vertex_map: Vec<usize>,
    /// `(new vertex, origin)` for every inserted vertex, ascending.
    pub new_vertex_origin: Vec<(usize, VertexOrigin)>,
    /// Old face each new face was cut from.
    pub face_parent: Vec<usize>,
}

impl SubdivisionRecord {
    /// Record of a step that changed nothing.
    pub fn unchanged(scheme: Scheme, mesh: &TriMesh) -> Self {
        SubdivisionRecord {
            scheme,
            old_vertex_map: (0..mesh.vertex_count()).collect(),
            new_vertex_origin: Vec::new(),
            face_parent: (0..mesh.face_count()).collect(),
        }
    }

    pub fn new_vertex_count(&self) -> usize {
        self.old_vertex_map.len() + self.new_vertex_origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_vertex_origin.is_empty()
    }

    /// Re-derives the refined face list from the old faces, the parent table
    /// and the vertex origins alone.
    pub fn rebuild_faces(&self, old_faces: &[[usize; 3]]) -> Result<Vec<[usize; 3]>> {
        let mut edge_vertex = HashMap::new();
        let mut face_vertex = HashMap::new();
        for &(v, origin) in &self.new_vertex_origin {
            match origin {
                VertexOrigin::Edge(a, b) => edge_vertex.insert((a, b), v),
                VertexOrigin::Face(f) => face_vertex.insert(f, v),
            };
        }
        let map = |v: usize| self.old_vertex_map[v];
        let mid = |a: usize, b: usize| edge_vertex.get(&(a.min(b), a.max(b))).copied();

        let mut faces = Vec::with_capacity(self.face_parent.len());
        let mut parents: Vec<usize> = self.face_parent.clone();
        parents.dedup();
        for f in parents {
            let face = *old_faces.get(f).ok_or(Error::IndexOutOfRange {
                what: "old faces",
                index: f,
                len: old_faces.len(),
            })?;
            let [a, b, c] = face;
            if let Some(&m) = face_vertex.get(&f) {
                let [a, b, c] = face.map(map);
                faces.extend_from_slice(&[[a, b, m], [b, c, m], [c, a, m]]);
                continue;
            }
            let mids = [mid(a, b), mid(b, c), mid(c, a)];
            match mids {
                [Some(ab), Some(bc), Some(ca)] => {
                    let [a, b, c] = face.map(map);
                    faces.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
                }
                [None, None, None] => faces.push(face.map(map)),
                _ => {
                    let split: Vec<usize> = (0..3).filter(|&k| mids[k].is_some()).collect();
                    if split.len() != 1 {
                        return Err(Error::UnrepairedSelection {
                            face: f,
                            count: split.len(),
                        });
                    }
                    let k = split[0];
                    let m = mids[k].unwrap();
                    let (p, q, o) = (map(face[k]), map(face[(k + 1) % 3]), map(face[(k + 2) % 3]));
                    faces.extend_from_slice(&[[p, m, o], [m, q, o]]);
                }
            }
        }
        Ok(faces)
    }

    /// Carries a per-vertex field to the refined mesh; exact on surviving
    /// vertices, `None` on inserted ones.
    pub fn transport_field(&self, old: &[f64]) -> Vec<Option<f64>> {
        let mut out = vec![None; self.new_vertex_count()];
        for (v, &n) in self.old_vertex_map.iter().enumerate() {
            out[n] = Some(old[v]);
        }
        out
    }

    /// Map from every refined vertex back onto the old mesh: survivors to
    /// their vertex, edge vertices to the edge midpoint, face vertices to the
    /// barycenter.
    pub fn pointmap_to_old(&self, old: &TriMesh) -> Result<PointMap> {
        let topo = old.topology()?;
        let mut assignments = vec![Assignment::Vertex(0); self.new_vertex_count()];
        for (v, &n) in self.old_vertex_map.iter().enumerate() {
            assignments[n] = Assignment::Vertex(v);
        }
        for &(n, origin) in &self.new_vertex_origin {
            assignments[n] = match origin {
                VertexOrigin::Face(f) => {
                    Assignment::Surface(BarycentricPoint::new(f, [1.0 / 3.0; 3])?)
                }
                VertexOrigin::Edge(a, b) => {
                    let e = topo.edge_index(a, b).ok_or(Error::IndexOutOfRange {
                        what: "old edges",
                        index: a,
                        len: topo.edge_count(),
                    })?;
                    let f = topo.edge_faces(e)[0].expect("every edge has a face");
                    let face = old.faces()[f];
                    let weights = face.map(|v| if v == a || v == b { 0.5 } else { 0.0 });
                    Assignment::Surface(BarycentricPoint { face: f, weights })
                }
            };
        }
        PointMap::new(assignments, old)
    }

    /// Text form with a vertex map, an `origin` table and a `parent` table.
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "scheme {}", self.scheme)?;
        writeln!(w, "map {}", self.old_vertex_map.len())?;
        for (old, new) in self.old_vertex_map.iter().enumerate() {
            writeln!(w, "{old} {new}")?;
        }
        writeln!(w, "origin {}", self.new_vertex_origin.len())?;
        for (v, origin) in &self.new_vertex_origin {
            match origin {
                VertexOrigin::Face(f) => writeln!(w, "{v} f {f}")?,
                VertexOrigin::Edge(a, b) => writeln!(w, "{v} e {a} {b}")?,
            }
        }
        writeln!(w, "parent {}", self.face_parent.len())?;
        for (face, parent) in self.face_parent.iter().enumerate() {
            writeln!(w, "{face} {parent}")?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl BufRead) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            let (lineno, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unexpected end of record, expected {what}"),
            })?;
            let line = line.map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            Ok((lineno, line.split_whitespace().map(str::to_owned).collect()))
        };
        let bad = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let num = |line: usize, s: &str| s.parse::<usize>().map_err(|_| bad(line, "invalid integer"));
        let header = |line: usize, toks: &[String], key: &str| -> Result<usize> {
            match toks {
                [k, n] if k == key => num(line, n),
                _ => Err(bad(line, &format!("expected '{key} <count>'"))),
            }
        };

        let (l, toks) = next("scheme")?;
        let scheme = match toks.as_slice() {
            [k, s] if k == "scheme" => s.parse()?,
            _ => return Err(bad(l, "expected 'scheme <name>'")),
        };
        let (l, toks) = next("map")?;
        let count = header(l, &toks, "map")?;
        let mut old_vertex_map = Vec::with_capacity(count);
        for i in 0..count {
            let (l, toks) = next("map entry")?;
            match toks.as_slice() {
                [o, n] if num(l, o)? == i => old_vertex_map.push(num(l, n)?),
                _ => return Err(bad(l, "expected '<old> <new>' in order")),
            }
        }
        let (l, toks) = next("origin")?;
        let count = header(l, &toks, "origin")?;
        let mut new_vertex_origin = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, toks) = next("origin entry")?;
            let entry = match toks.as_slice() {
                [v, k, f] if k == "f" => (num(l, v)?, VertexOrigin::Face(num(l, f)?)),
                [v, k, a, b] if k == "e" => (num(l, v)?, VertexOrigin::Edge(num(l, a)?, num(l, b)?)),
                _ => return Err(bad(l, "expected '<v> f <face>' or '<v> e <a> <b>'")),
            };
            new_vertex_origin.push(entry);
        }
        let (l, toks) = next("parent")?;
        let count = header(l, &toks, "parent")?;
        let mut face_parent = Vec::with_capacity(count);
        for i in 0..count {
            let (l, toks) = next("parent entry")?;
            match toks.as_slice() {
                [f, p] if num(l, f)? == i => face_parent.push(num(l, p)?),
                _ => return Err(bad(l, "expected '<face> <parent>' in order")),
            }
        }
        Ok(SubdivisionRecord {
            scheme,
            old_vertex_map,
            new_vertex_origin,
            face_parent,
        })
    }
}
