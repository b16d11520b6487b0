//! Space-time solution grids and their file formats.
//!
//! Binary layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `D3PG` |
//! | 4     | format version (`u32`, currently 1) |
//! | 8     | `nx` (`u64`) |
//! | 8     | `nt` (`u64`) |
//! | 8     | integrator step size (`f64`) |
//! | 32    | manifest hash (SHA-256, zero when unset) |
//! | 8·nx  | x grid |
//! | 8·nt  | t grid |
//! | 8·nx·nt | values, row `i` holds `u(x_i, t_0..t_{nt-1})` |
//! | 32    | SHA-256 of everything above |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::write_atomic;

const MAGIC: &[u8; 4] = b"D3PG";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionField {
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `values[[i, j]] = u(x_grid[i], t_grid[j])`.
    pub values: Array2<f64>,
    pub step_size: f64,
    pub manifest_hash: [u8; 32],
}

impl SolutionField {
    pub fn new(x_grid: Vec<f64>, t_grid: Vec<f64>, values: Array2<f64>, step_size: f64) -> Result<Self> {
        if values.dim() != (x_grid.len(), t_grid.len()) {
            return Err(Error::GridMismatch(format!(
                "values are {:?}, grids are {} x {}",
                values.dim(),
                x_grid.len(),
                t_grid.len()
            )));
        }
        Ok(SolutionField {
            x_grid,
            t_grid,
            values,
            step_size,
            manifest_hash: [0; 32],
        })
    }

    /// Samples `f` on the tensor grid.
    pub fn from_fn(x_grid: Vec<f64>, t_grid: Vec<f64>, step_size: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((x_grid.len(), t_grid.len()), |(i, j)| f(x_grid[i], t_grid[j]));
        SolutionField {
            x_grid,
            t_grid,
            values,
            step_size,
            manifest_hash: [0; 32],
        }
    }

    pub fn nx(&self) -> usize {
        self.x_grid.len()
    }

    pub fn nt(&self) -> usize {
        self.t_grid.len()
    }

    pub fn same_grid(&self, other: &SolutionField) -> bool {
        self.x_grid == other.x_grid && self.t_grid == other.t_grid
    }

    /// Column index of `t`, if it is one of the grid times.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.t_grid
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,t,value\n");
        for (i, &x) in self.x_grid.iter().enumerate() {
            for (j, &t) in self.t_grid.iter().enumerate() {
                let _ = writeln!(out, "{x},{t},{}", self.values[[i, j]]);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (nx, nt) = (self.nx(), self.nt());
        let mut buf = Vec::with_capacity(64 + 8 * (nx + nt + nx * nt) + 32);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(nx as u64).to_le_bytes());
        buf.extend_from_slice(&(nt as u64).to_le_bytes());
        buf.extend_from_slice(&self.step_size.to_le_bytes());
        buf.extend_from_slice(&self.manifest_hash);
        for v in self.x_grid.iter().chain(&self.t_grid).chain(self.values.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        buf
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::format(path, reason.to_string());
        if bytes.len() < 64 + 32 {
            return Err(bad("truncated header"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(bad("checksum mismatch"));
        }
        if &body[0..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().expect("8 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(body[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::format(path, format!("unsupported grid version {version}")));
        }
        let nx = usize::try_from(u64_at(8)).map_err(|_| bad("nx overflows"))?;
        let nt = usize::try_from(u64_at(16)).map_err(|_| bad("nt overflows"))?;
        let step_size = f64_at(24);
        let mut manifest_hash = [0u8; 32];
        manifest_hash.copy_from_slice(&body[32..64]);
        let count = nx
            .checked_mul(nt)
            .and_then(|n| n.checked_add(nx + nt))
            .ok_or_else(|| bad("grid size overflows"))?;
        if body.len() != 64 + 8 * count {
            return Err(bad("payload length does not match header"));
        }
        let data: Vec<f64> = (0..count).map(|k| f64_at(64 + 8 * k)).collect();
        let x_grid = data[..nx].to_vec();
        let t_grid = data[nx..nx + nt].to_vec();
        let values = Array2::from_shape_vec((nx, nt), data[nx + nt..].to_vec())
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(SolutionField {
            x_grid,
            t_grid,
            values,
            step_size,
            manifest_hash,
        })
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        SolutionField::from_bytes(&bytes, path)
    }

    /// Value at an arbitrary point by tensor-product cubic Lagrange
    /// interpolation.
    pub fn interpolate(&self, x: f64, t: f64) -> Result<f64> {
        let (ix, wx) = cubic_stencil(&self.x_grid, x)?;
        let (it, wt) = cubic_stencil(&self.t_grid, t)?;
        let mut acc = 0.0;
        for (a, &wa) in wx.iter().enumerate() {
            for (b, &wb) in wt.iter().enumerate() {
                acc += wa * wb * self.values[[ix + a, it + b]];
            }
        }
        Ok(acc)
    }

    /// This field resampled onto another tensor grid.
    pub fn resample(&self, x_grid: &[f64], t_grid: &[f64]) -> Result<SolutionField> {
        let mut values = Array2::zeros((x_grid.len(), t_grid.len()));
        for (i, &x) in x_grid.iter().enumerate() {
            for (j, &t) in t_grid.iter().enumerate() {
                values[[i, j]] = self.interpolate(x, t)?;
            }
        }
        SolutionField::new(x_grid.to_vec(), t_grid.to_vec(), values, self.step_size)
    }
}

/// First node and Lagrange weights of the (up to) four-point stencil around
/// `x` on a sorted grid.
pub(crate) fn cubic_stencil(grid: &[f64], x: f64) -> Result<(usize, Vec<f64>)> {
    let n = grid.len();
    let tol = 1e-12 * (1.0 + x.abs());
    if n == 0 || x < grid[0] - tol || x > grid[n - 1] + tol {
        return Err(Error::GridMismatch(format!("{x} lies outside the grid")));
    }
    let width = n.min(4);
    let cell = grid.partition_point(|&g| g <= x).saturating_sub(1);
    let start = cell.saturating_sub(1).min(n - width);
    let nodes = &grid[start..start + width];
    let weights = (0..width)
        .map(|a| {
            (0..width)
                .filter(|&b| b != a)
                .map(|b| (x - nodes[b]) / (nodes[a] - nodes[b]))
                .product()
        })
        .collect();
    Ok((start, weights))
}

/// `n` evenly spaced points from `lo` to `hi` inclusive, endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
            v[n - 1] = hi;
            v
        }
    }
}
