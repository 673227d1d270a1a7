//! Binary eigenbasis cache.
//!
//! Layout, little-endian: magic `HRSB1`, `n: u64`, `k: u64`, `k` eigenvalues
//! as `f64`, then `Φ` column-major (`n * k` `f64`). The mass matrix is not
//! stored; it is recomputed from the mesh on load.

use super::Eigenbasis;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use nalgebra::DMatrix;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 5] = b"HRSB1";

pub fn write_eigenbasis(basis: &Eigenbasis, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(basis.vertex_count() as u64).to_le_bytes())?;
    w.write_all(&(basis.k() as u64).to_le_bytes())?;
    for l in basis.lambda() {
        w.write_all(&l.to_le_bytes())?;
    }
    // nalgebra storage is column-major already.
    for v in basis.phi().as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads a cached basis; `mass` is the lumped mass of the mesh it belongs to.
pub fn read_eigenbasis(r: &mut impl Read, mass: Vec<f64>) -> Result<Eigenbasis> {
    let bad = |message: String| Error::Parse { line: 0, message };
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|e| bad(format!("eigenbasis header: {e}")))?;
    if &magic != MAGIC {
        return Err(bad("not an HRSB1 eigenbasis file".into()));
    }
    let io = |e: std::io::Error| bad(format!("truncated eigenbasis: {e}"));
    let n = read_u64(r).map_err(io)? as usize;
    let k = read_u64(r).map_err(io)? as usize;
    if n != mass.len() {
        return Err(Error::LengthMismatch {
            expected: mass.len(),
            actual: n,
        });
    }
    let lambda = (0..k)
        .map(|_| read_f64(r))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io)?;
    let values = (0..n * k)
        .map(|_| read_f64(r))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io)?;
    Eigenbasis::from_parts(DMatrix::from_vec(n, k, values), lambda, mass)
}

pub fn save_eigenbasis(basis: &Eigenbasis, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_eigenbasis(basis, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_eigenbasis(path: &Path, mesh: &TriMesh) -> Result<Eigenbasis> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_eigenbasis(&mut BufReader::new(file), mesh.vertex_areas().into_values())
}
