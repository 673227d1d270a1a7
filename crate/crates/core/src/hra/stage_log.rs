use crate::error::{Error, Result};
use std::io::{BufRead, Write};

/// One row of the per-stage log.
#[derive(Debug, Clone, PartialEq)]
pub struct StageLog {
    pub stage: String,
    pub vertices: usize,
    pub faces: usize,
    pub mean_dist_m: f64,
    pub max_dist_m: f64,
    pub arap_iters: usize,
    /// Final fit energy; NaN for stages without a fit.
    pub energy: f64,
}

const HEADER: &str = "stage,vertices,faces,mean_dist_m,max_dist_m,arap_iters,energy";

pub fn write_stage_log(log: &[StageLog], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for s in log {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.stage, s.vertices, s.faces, s.mean_dist_m, s.max_dist_m, s.arap_iters, s.energy
        )?;
    }
    Ok(())
}

pub fn read_stage_log(r: &mut impl BufRead) -> Result<Vec<StageLog>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let err = |message: String| Error::Parse { line: n + 1, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        if n == 0 {
            if line.trim() != HEADER {
                return Err(err(format!("expected header '{HEADER}'")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let [stage, v, f, mean, max, iters, energy] = cols.as_slice() else {
            return Err(err(format!("expected 7 columns, got {}", cols.len())));
        };
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("invalid integer '{s}'")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("invalid number '{s}'")));
        out.push(StageLog {
            stage: stage.to_string(),
            vertices: int(v)?,
            faces: int(f)?,
            mean_dist_m: real(mean)?,
            max_dist_m: real(max)?,
            arap_iters: int(iters)?,
            energy: real(energy)?,
        });
    }
    Ok(out)
}
