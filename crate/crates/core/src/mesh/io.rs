//! OBJ and PLY reading and writing.
//!
//! OBJ: `v x y z`, `vt u v`, `f i j k` with 1-based (or negative) indices and
//! optional `i/ti` or `i/ti/ni` corners. PLY: ascii 1.0 and
//! binary_little_endian 1.0 with `vertex` (x, y, z and optional u, v) and
//! `face` (vertex_indices list) elements.

use super::{ScalarField, TriMesh, Uv, Vec3};
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::Ply),
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer mesh format from {}",
                path.display()
            ))),
        }
    }
}

/// Loads and fully validates a mesh.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mesh = match format {
        MeshFormat::Obj => read_obj(&mut reader)?,
        MeshFormat::Ply => read_ply(&mut reader)?,
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn save_mesh(mesh: &TriMesh, path: &Path, format: MeshFormat) -> Result<()> {
    save_mesh_with_fields(mesh, path, format, &[])
}

/// Saves a mesh; for PLY, `fields` become extra per-vertex properties.
pub fn save_mesh_with_fields(
    mesh: &TriMesh,
    path: &Path,
    format: MeshFormat,
    fields: &[(&str, &ScalarField)],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        MeshFormat::Obj => write_obj(mesh, &mut w),
        MeshFormat::Ply => write_ply(mesh, fields, &mut w),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing number"))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid number '{tok}'")))
}

fn resolve_obj_index(tok: &str, count: usize, line: usize) -> Result<usize> {
    let i: i64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid index '{tok}'")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(parse_err(line, "OBJ indices are 1-based"));
    };
    if resolved < 0 {
        return Err(parse_err(line, format!("index '{tok}' out of range")));
    }
    Ok(resolved as usize)
}

pub fn read_obj(reader: &mut impl BufRead) -> Result<TriMesh> {
    let mut positions = Vec::new();
    let mut texcoords: Vec<Uv> = Vec::new();
    let mut faces = Vec::new();
    // (vertex, texcoord) corner pairs, resolved to per-vertex UVs at the end.
    let mut uv_links = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), lineno)?;
                let y = parse_f64(toks.next(), lineno)?;
                let z = parse_f64(toks.next(), lineno)?;
                positions.push(Vec3::new(x, y, z));
            }
            Some("vt") => {
                let u = parse_f64(toks.next(), lineno)?;
                let v = parse_f64(toks.next(), lineno)?;
                texcoords.push(Uv::new(u, v));
            }
            Some("f") => {
                let corners: Vec<&str> = toks.collect();
                if corners.len() != 3 {
                    return Err(parse_err(
                        lineno,
                        format!("expected a triangle, got {} corners", corners.len()),
                    ));
                }
                let mut face = [0; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let mut parts = corner.split('/');
                    let v = parts.next().unwrap_or_default();
                    face[k] = resolve_obj_index(v, positions.len(), lineno)?;
                    if let Some(t) = parts.next().filter(|t| !t.is_empty()) {
                        let t = resolve_obj_index(t, texcoords.len(), lineno)?;
                        if t >= texcoords.len() {
                            return Err(parse_err(lineno, format!("texture index {} out of range", t + 1)));
                        }
                        uv_links.push((face[k], t));
                    }
                }
                faces.push(face);
            }
            _ => {}
        }
    }

    let mut mesh = TriMesh::new(positions, faces)?;
    if !uv_links.is_empty() {
        let mut uv: Vec<Option<Uv>> = vec![None; mesh.vertex_count()];
        for (v, t) in uv_links {
            uv[v].get_or_insert(texcoords[t]);
        }
        if uv.iter().all(Option::is_some) {
            mesh = mesh.with_uv(uv.into_iter().flatten().collect())?;
        } else {
            log::warn!("OBJ texture coordinates do not cover every vertex; ignoring them");
        }
    }
    Ok(mesh)
}

pub fn write_obj(mesh: &TriMesh, w: &mut impl Write) -> std::io::Result<()> {
    for p in mesh.positions() {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    if let Some(uv) = mesh.uv() {
        for t in uv {
            writeln!(w, "vt {} {}", t.x, t.y)?;
        }
        for f in mesh.faces() {
            let [a, b, c] = f.map(|i| i + 1);
            writeln!(w, "f {a}/{a} {b}/{b} {c}/{c}")?;
        }
    } else {
        for f in mesh.faces() {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str, line: usize) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(parse_err(line, format!("unknown PLY type '{other}'"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, r: &mut impl Read) -> std::io::Result<f64> {
        let mut buf = [0u8; 8];
        let bytes = &mut buf[..self.size()];
        r.read_exact(bytes)?;
        Ok(match self {
            Scalar::I8 => bytes[0] as i8 as f64,
            Scalar::U8 => bytes[0] as f64,
            Scalar::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(buf),
        })
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

fn read_header(reader: &mut impl BufRead) -> Result<(PlyEncoding, Vec<Element>, usize)> {
    let mut line = String::new();
    let mut lineno = 0;
    let mut next_line = |line: &mut String, lineno: &mut usize| -> Result<()> {
        line.clear();
        *lineno += 1;
        let n = reader
            .read_line(line)
            .map_err(|e| parse_err(*lineno, e.to_string()))?;
        if n == 0 {
            return Err(parse_err(*lineno, "unexpected end of PLY header"));
        }
        Ok(())
    };

    next_line(&mut line, &mut lineno)?;
    if line.trim() != "ply" {
        return Err(parse_err(1, "missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        next_line(&mut line, &mut lineno)?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", "1.0"] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", "1.0"] => {
                encoding = Some(PlyEncoding::BinaryLittleEndian)
            }
            ["format", other, ..] => {
                return Err(parse_err(lineno, format!("unsupported PLY format '{other}'")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(lineno, "invalid element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(lineno, "property before element"))?;
                el.properties.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(count, lineno)?,
                    item: Scalar::parse(item, lineno)?,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(lineno, "property before element"))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty, lineno)?,
                });
            }
            ["end_header"] => break,
            _ => return Err(parse_err(lineno, format!("unrecognized header line '{}'", line.trim()))),
        }
    }
    let encoding = encoding.ok_or_else(|| parse_err(lineno, "missing format line"))?;
    Ok((encoding, elements, lineno))
}

/// Reads one element record as a list of property values (lists flattened
/// into their own vectors).
enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

struct RecordReader<'a, R: BufRead> {
    reader: &'a mut R,
    encoding: PlyEncoding,
    lineno: usize,
    line: String,
}

impl<R: BufRead> RecordReader<'_, R> {
    fn read(&mut self, el: &Element) -> Result<Vec<Value>> {
        match self.encoding {
            PlyEncoding::Ascii => self.read_ascii(el),
            PlyEncoding::BinaryLittleEndian => self.read_binary(el),
        }
    }

    fn read_ascii(&mut self, el: &Element) -> Result<Vec<Value>> {
        loop {
            self.line.clear();
            self.lineno += 1;
            let n = self
                .reader
                .read_line(&mut self.line)
                .map_err(|e| parse_err(self.lineno, e.to_string()))?;
            if n == 0 {
                return Err(parse_err(self.lineno, "unexpected end of PLY data"));
            }
            if !self.line.trim().is_empty() {
                break;
            }
        }
        let lineno = self.lineno;
        let mut toks = self.line.split_whitespace();
        let mut values = Vec::with_capacity(el.properties.len());
        for prop in &el.properties {
            match prop {
                Property::Scalar { .. } => values.push(Value::Scalar(parse_f64(toks.next(), lineno)?)),
                Property::List { .. } => {
                    let count = parse_f64(toks.next(), lineno)?;
                    if count < 0.0 || count.fract() != 0.0 {
                        return Err(parse_err(lineno, "invalid list length"));
                    }
                    let items = (0..count as usize)
                        .map(|_| parse_f64(toks.next(), lineno))
                        .collect::<Result<Vec<_>>>()?;
                    values.push(Value::List(items));
                }
            }
        }
        Ok(values)
    }

    fn read_binary(&mut self, el: &Element) -> Result<Vec<Value>> {
        let io = |e: std::io::Error| parse_err(0, format!("binary PLY: {e}"));
        let mut values = Vec::with_capacity(el.properties.len());
        for prop in &el.properties {
            match *prop {
                Property::Scalar { ty, .. } => values.push(Value::Scalar(ty.read_le(self.reader).map_err(io)?)),
                Property::List { count, item, .. } => {
                    let n = count.read_le(self.reader).map_err(io)? as usize;
                    let items = (0..n)
                        .map(|_| item.read_le(self.reader))
                        .collect::<std::io::Result<Vec<_>>>()
                        .map_err(io)?;
                    values.push(Value::List(items));
                }
            }
        }
        Ok(values)
    }
}

pub fn read_ply(reader: &mut impl BufRead) -> Result<TriMesh> {
    let (encoding, elements, lineno) = read_header(reader)?;
    let mut records = RecordReader {
        reader,
        encoding,
        lineno,
        line: String::new(),
    };

    let mut positions = Vec::new();
    let mut uv = Vec::new();
    let mut faces = Vec::new();
    for el in &elements {
        let find = |names: &[&str]| {
            el.properties
                .iter()
                .position(|p| names.contains(&p.name()))
        };
        match el.name.as_str() {
            "vertex" => {
                let (x, y, z) = match (find(&["x"]), find(&["y"]), find(&["z"])) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => return Err(parse_err(records.lineno, "vertex element lacks x, y, z")),
                };
                let tex = find(&["u", "s", "texture_u"]).zip(find(&["v", "t", "texture_v"]));
                for _ in 0..el.count {
                    let rec = records.read(el)?;
                    let get = |i: usize| match rec[i] {
                        Value::Scalar(v) => Ok(v),
                        Value::List(_) => Err(parse_err(records.lineno, "expected scalar property")),
                    };
                    positions.push(Vec3::new(get(x)?, get(y)?, get(z)?));
                    if let Some((u, v)) = tex {
                        uv.push(Uv::new(get(u)?, get(v)?));
                    }
                }
            }
            "face" => {
                let idx = find(&["vertex_indices", "vertex_index"])
                    .ok_or_else(|| parse_err(records.lineno, "face element lacks vertex_indices"))?;
                for f in 0..el.count {
                    let rec = records.read(el)?;
                    let Value::List(items) = &rec[idx] else {
                        return Err(parse_err(records.lineno, "vertex_indices must be a list"));
                    };
                    if items.len() != 3 {
                        return Err(parse_err(
                            records.lineno,
                            format!("face {f} has {} corners, expected 3", items.len()),
                        ));
                    }
                    let mut face = [0; 3];
                    for (k, &v) in items.iter().enumerate() {
                        if v < 0.0 || v.fract() != 0.0 {
                            return Err(parse_err(records.lineno, format!("invalid vertex index {v}")));
                        }
                        face[k] = v as usize;
                    }
                    faces.push(face);
                }
            }
            _ => {
                for _ in 0..el.count {
                    records.read(el)?;
                }
            }
        }
    }

    let mesh = TriMesh::new(positions, faces)?;
    if uv.is_empty() {
        Ok(mesh)
    } else {
        mesh.with_uv(uv)
    }
}

pub fn write_ply(
    mesh: &TriMesh,
    fields: &[(&str, &ScalarField)],
    w: &mut impl Write,
) -> std::io::Result<()> {
    for (name, field) in fields {
        if field.len() != mesh.vertex_count() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("field '{name}' has {} values for {} vertices", field.len(), mesh.vertex_count()),
            ));
        }
    }
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertex_count())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    if mesh.uv().is_some() {
        writeln!(w, "property double u")?;
        writeln!(w, "property double v")?;
    }
    for (name, _) in fields {
        writeln!(w, "property double {name}")?;
    }
    writeln!(w, "element face {}", mesh.face_count())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (i, p) in mesh.positions().iter().enumerate() {
        write!(w, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(uv) = mesh.uv() {
            write!(w, " {} {}", uv[i].x, uv[i].y)?;
        }
        for (_, field) in fields {
            write!(w, " {}", field[i])?;
        }
        writeln!(w)?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use std::io::Cursor;

    #[test]
    fn obj_tetrahedron() {
        let src = "# tetra\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";
        let mesh = read_obj(&mut Cursor::new(src)).unwrap();
        assert_eq!(mesh.vertex_count(), 4);
        assert_eq!(mesh.face_count(), 4);
        assert_eq!(mesh.euler_characteristic(), 2);
        mesh.validate().unwrap();
    }

    #[test]
    fn obj_index_out_of_range_names_face() {
        let mut src = String::new();
        for i in 0..8 {
            src.push_str(&format!("v {i} {} 0\n", i * i));
        }
        src.push_str("f 1 2 3\nf 1 2 9\n");
        let err = read_obj(&mut Cursor::new(src)).unwrap_err();
        assert!(matches!(err, Error::FaceIndex { face: 1, index: 8, vertex_count: 8 }), "{err}");
    }

    #[test]
    fn obj_texture_corners_and_negative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf -3/1 -2/2 -1/3\n";
        let mesh = read_obj(&mut Cursor::new(src)).unwrap();
        assert_eq!(mesh.faces(), &[[0, 1, 2]]);
        assert_eq!(mesh.uv().unwrap()[1], Uv::new(1.0, 0.0));
    }

    #[test]
    fn obj_rejects_quads() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(read_obj(&mut Cursor::new(src)), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn obj_with_uv_writes_vt() {
        let mesh = shapes::grid(2, 2, 1.0);
        let uv = mesh.positions().iter().map(|p| Uv::new(p.x, p.y)).collect();
        let mesh = mesh.with_uv(uv).unwrap();
        let mut out = Vec::new();
        write_obj(&mesh, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("vt ")).count(), 9);
        let back = read_obj(&mut Cursor::new(text)).unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn ply_icosahedron_ascii() {
        let mesh = shapes::icosahedron(1.0);
        let mut out = Vec::new();
        write_ply(&mesh, &[], &mut out).unwrap();
        let back = read_ply(&mut Cursor::new(out)).unwrap();
        assert_eq!(back.vertex_count(), 12);
        assert_eq!(back.face_count(), 20);
        assert_eq!(back, mesh);
    }

    #[test]
    fn ply_binary_little_endian() {
        let mut data = b"ply\nformat binary_little_endian 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for p in [[0f32, 0., 0.], [1., 0., 0.], [0., 1., 0.]] {
            for c in p {
                data.extend_from_slice(&c.to_le_bytes());
            }
            data.push(255);
        }
        data.push(3);
        for i in [0i32, 1, 2] {
            data.extend_from_slice(&i.to_le_bytes());
        }
        let mesh = read_ply(&mut Cursor::new(data)).unwrap();
        assert_eq!(mesh.faces(), &[[0, 1, 2]]);
        assert_eq!(mesh.positions()[1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn ply_extra_fields_are_written_and_skipped_on_read() {
        let mesh = shapes::regular_tetrahedron(1.0);
        let field = ScalarField::new(vec![0.5, 1.5, 2.5, 3.5]);
        let mut out = Vec::new();
        write_ply(&mesh, &[("distance", &field)], &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.contains("property double distance"));
        let back = read_ply(&mut Cursor::new(out)).unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn save_to_unwritable_path_is_io_error() {
        let mesh = shapes::regular_tetrahedron(1.0);
        let err = save_mesh(&mesh, Path::new("/nonexistent-dir/x.obj"), MeshFormat::Obj).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
