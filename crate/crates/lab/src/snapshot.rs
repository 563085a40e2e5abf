//! Binary snapshot files.
//!
//! Layout, little-endian: magic `ANISO\x01`, `u32 N`, `u32 dims[N]`,
//! `f64 spacing[N]`, `f64 origin[N]`, `f64 time`, then `Π dims` values in
//! row-major order (last axis fastest).

use std::fs;
use std::path::{Path, PathBuf};

use aniso_core::{Boundary, Grid, GridSolution, PowerVector};

use crate::error::LabError;

pub const MAGIC: &[u8; 6] = b"ANISO\x01";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub time: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_grid(grid: &Grid, time: f64, values: &[f64]) -> Self {
        Self {
            dims: grid.dims().to_vec(),
            spacing: grid.spacing().to_vec(),
            origin: grid.origin().to_vec(),
            time,
            values: values.to_vec(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.dims.len();
        let mut out = Vec::with_capacity(MAGIC.len() + 4 + n * 20 + 8 + self.values.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(n as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in self.spacing.iter().chain(&self.origin) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.time.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, LabError> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(LabError::Format("bad magic".into()));
        }
        let n = r.u32()? as usize;
        if n == 0 {
            return Err(LabError::Format("zero dimension".into()));
        }
        let dims = (0..n).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let spacing = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let origin = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let time = r.f64()?;
        let len = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| LabError::Format("dims overflow".into()))?;
        if r.remaining() != len * 8 {
            return Err(LabError::Format(format!("expected {} value bytes, found {}", len * 8, r.remaining())));
        }
        let values = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { dims, spacing, origin, time, values })
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        fs::write(path, self.encode()).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
    }

    pub fn read(path: &Path) -> Result<Self, LabError> {
        let bytes = fs::read(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
        Self::decode(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], LabError> {
        let end = self.at.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| LabError::Format("truncated file".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, LabError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, LabError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.at
    }
}

pub fn snapshot_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("snap_{k:05}.aniso"))
}

/// One file per snapshot, `snap_00000.aniso` onwards.
pub fn write_solution(dir: &Path, sol: &GridSolution) -> Result<Vec<PathBuf>, LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;
    let mut paths = Vec::with_capacity(sol.times().len());
    for (k, &t) in sol.times().iter().enumerate() {
        let path = snapshot_path(dir, k);
        Snapshot::from_grid(sol.grid(), t, sol.field(k)).write(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads `count` consecutive snapshots and checks they share one grid.
pub fn read_solution(dir: &Path, count: usize, p: PowerVector, bc: Boundary) -> Result<GridSolution, LabError> {
    let mut snaps = Vec::with_capacity(count);
    for k in 0..count {
        snaps.push(Snapshot::read(&snapshot_path(dir, k))?);
    }
    let first = snaps.first().ok_or_else(|| LabError::Validation("no snapshots requested".into()))?;
    for s in &snaps[1..] {
        if s.dims != first.dims || s.spacing != first.spacing || s.origin != first.origin {
            return Err(LabError::Validation("snapshots do not share one grid".into()));
        }
    }
    let grid = Grid::new(first.dims.clone(), first.spacing.clone(), first.origin.clone(), bc)?;
    let times = snaps.iter().map(|s| s.time).collect();
    let fields = snaps.into_iter().map(|s| s.values).collect();
    Ok(GridSolution::new(grid, p, times, fields)?)
}
