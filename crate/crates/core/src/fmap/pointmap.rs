use crate::error::{Error, Result};
use crate::mesh::{BarycentricPoint, TriMesh, Vec3};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

/// Where one source vertex lands on the target mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assignment {
    Vertex(usize),
    Surface(BarycentricPoint),
}

/// Discrete map from every vertex of a source mesh onto a target mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    assignments: Vec<Assignment>,
}

impl PointMap {
    /// Validates every assignment against `target`.
    pub fn new(assignments: Vec<Assignment>, target: &TriMesh) -> Result<Self> {
        for a in &assignments {
            match *a {
                Assignment::Vertex(j) if j >= target.vertex_count() => {
                    return Err(Error::IndexOutOfRange {
                        what: "target vertices",
                        index: j,
                        len: target.vertex_count(),
                    })
                }
                Assignment::Surface(b) if b.face >= target.face_count() => {
                    return Err(Error::IndexOutOfRange {
                        what: "target faces",
                        index: b.face,
                        len: target.face_count(),
                    })
                }
                Assignment::Surface(b) => {
                    BarycentricPoint::new(b.face, b.weights)?;
                }
                _ => {}
            }
        }
        Ok(PointMap { assignments })
    }

    pub fn from_vertices(targets: Vec<usize>, target: &TriMesh) -> Result<Self> {
        Self::new(targets.into_iter().map(Assignment::Vertex).collect(), target)
    }

    pub(crate) fn from_vertices_unchecked(targets: Vec<usize>) -> Self {
        PointMap {
            assignments: targets.into_iter().map(Assignment::Vertex).collect(),
        }
    }

    pub(crate) fn from_assignments_unchecked(assignments: Vec<Assignment>) -> Self {
        PointMap { assignments }
    }

    /// Every vertex of `mesh` mapped to itself.
    pub fn identity(mesh: &TriMesh) -> Self {
        PointMap {
            assignments: (0..mesh.vertex_count()).map(Assignment::Vertex).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn get(&self, i: usize) -> Assignment {
        self.assignments[i]
    }

    /// Target vertex indices if every assignment is a vertex.
    pub fn as_vertices(&self) -> Option<Vec<usize>> {
        self.assignments
            .iter()
            .map(|a| match a {
                Assignment::Vertex(j) => Some(*j),
                Assignment::Surface(_) => None,
            })
            .collect()
    }

    pub fn position(&self, i: usize, target: &TriMesh) -> Vec3 {
        match self.assignments[i] {
            Assignment::Vertex(j) => target.positions()[j],
            Assignment::Surface(b) => b.position(target),
        }
    }

    /// Vertex assignments as-is; surface points snapped to their heaviest
    /// barycentric corner.
    pub fn snapped_vertex(&self, i: usize, target: &TriMesh) -> usize {
        match self.assignments[i] {
            Assignment::Vertex(j) => j,
            Assignment::Surface(b) => b.heaviest_vertex(target),
        }
    }

    /// Target vertex nearest (in space) to the assigned point.
    pub fn nearest_vertex(&self, i: usize, target: &TriMesh) -> usize {
        match self.assignments[i] {
            Assignment::Vertex(j) => j,
            Assignment::Surface(b) => {
                let p = b.position(target);
                let face = target.faces()[b.face];
                let mut best = face[0];
                for &v in &face[1..] {
                    if (target.positions()[v] - p).norm_squared()
                        < (target.positions()[best] - p).norm_squared()
                    {
                        best = v;
                    }
                }
                best
            }
        }
    }

    /// Text form: one line per source vertex, `v j` or `b f w0 w1 w2`
    /// (0-based).
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut line = String::new();
        for a in &self.assignments {
            line.clear();
            match a {
                Assignment::Vertex(j) => writeln!(line, "v {j}"),
                Assignment::Surface(b) => writeln!(
                    line,
                    "b {} {} {} {}",
                    b.face, b.weights[0], b.weights[1], b.weights[2]
                ),
            }
            .expect("writing to a String");
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl BufRead, target: &TriMesh) -> Result<Self> {
        let mut assignments = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let lineno = n + 1;
            let err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            let line = line.map_err(|e| err(e.to_string()))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("invalid index '{s}'")));
            let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("invalid weight '{s}'")));
            match toks.as_slice() {
                [] => continue,
                ["v", j] => assignments.push(Assignment::Vertex(int(j)?)),
                ["b", f, w0, w1, w2] => assignments.push(Assignment::Surface(
                    BarycentricPoint::new(int(f)?, [real(w0)?, real(w1)?, real(w2)?])?,
                )),
                _ => return Err(err(format!("expected 'v j' or 'b f w0 w1 w2', got '{line}'"))),
            }
        }
        Self::new(assignments, target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use std::io::Cursor;

    #[test]
    fn text_round_trip() {
        let mesh = shapes::icosahedron(1.0);
        let map = PointMap::new(
            vec![
                Assignment::Vertex(3),
                Assignment::Surface(BarycentricPoint::new(7, [0.25, 0.5, 0.25]).unwrap()),
            ],
            &mesh,
        )
        .unwrap();
        let mut out = Vec::new();
        map.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "v 3\nb 7 0.25 0.5 0.25\n");
        assert_eq!(PointMap::read(&mut Cursor::new(out), &mesh).unwrap(), map);
    }

    #[test]
    fn rejects_out_of_range_targets() {
        let mesh = shapes::regular_tetrahedron(1.0);
        assert!(PointMap::from_vertices(vec![0, 4], &mesh).is_err());
        assert!(PointMap::read(&mut Cursor::new("b 4 1 0 0\n"), &mesh).is_err());
        assert!(PointMap::read(&mut Cursor::new("x 1\n"), &mesh).is_err());
    }

    #[test]
    fn snapping_and_nearest_vertex() {
        let mesh = shapes::single_triangle();
        let b = BarycentricPoint::new(0, [0.2, 0.25, 0.55]).unwrap();
        let map = PointMap::new(vec![Assignment::Surface(b)], &mesh).unwrap();
        assert_eq!(map.snapped_vertex(0, &mesh), 2);
        // Point (0.25, 0.55): closest corner is (0, 1).
        assert_eq!(map.nearest_vertex(0, &mesh), 2);
    }
}
