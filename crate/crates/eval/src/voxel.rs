//! Solid voxelization by ray parity along +x.

use crate::EvalError;
use seekcad_core::kernel::LabeledMesh;

/// Occupancy of voxel centres inside an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub resolution: usize,
    /// Indexed `(k * res + j) * res + i` for x index `i`, y `j`, z `k`.
    pub cells: Vec<bool>,
}

impl VoxelGrid {
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (i as f64 + 0.5) * (self.hi[axis] - self.lo[axis]) / self.resolution as f64
    }
}

/// Whether the edge `u -> v` owns points lying exactly on it. Exactly one of
/// two opposite edges does, so shared edges are not counted twice.
fn owns(u: [f64; 2], v: [f64; 2]) -> bool {
    let d = [v[0] - u[0], v[1] - u[1]];
    d[1] > 0.0 || (d[1] == 0.0 && d[0] < 0.0)
}

fn edge(u: [f64; 2], v: [f64; 2], p: [f64; 2]) -> f64 {
    (v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0])
}

/// Marks voxel centres enclosed by `mesh` (non-zero winding along +x).
pub fn voxelize(mesh: &LabeledMesh, lo: [f64; 3], hi: [f64; 3], resolution: usize) -> VoxelGrid {
    let res = resolution;
    let mut grid = VoxelGrid { lo, hi, resolution: res, cells: vec![false; res * res * res] };
    let ys: Vec<f64> = (0..res).map(|j| grid.center(1, j)).collect();
    let zs: Vec<f64> = (0..res).map(|k| grid.center(2, k)).collect();
    let mut rows: Vec<Vec<(f64, i32)>> = vec![Vec::new(); res * res];
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangle(t);
        let mut p = tri.map(|v| [v.y, v.z]);
        let mut x = tri.map(|v| v.x);
        let area = edge(p[0], p[1], p[2]);
        if area == 0.0 {
            continue;
        }
        let sign = if area > 0.0 { 1 } else { -1 };
        if area < 0.0 {
            p.swap(1, 2);
            x.swap(1, 2);
        }
        let area = area.abs();
        let (ymin, ymax) = (p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max));
        let (zmin, zmax) = (p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max));
        let j0 = ys.partition_point(|&y| y < ymin);
        let j1 = ys.partition_point(|&y| y <= ymax);
        let k0 = zs.partition_point(|&z| z < zmin);
        let k1 = zs.partition_point(|&z| z <= zmax);
        for k in k0..k1 {
            for j in j0..j1 {
                let q = [ys[j], zs[k]];
                let w = [edge(p[1], p[2], q), edge(p[2], p[0], q), edge(p[0], p[1], q)];
                let pairs = [(p[1], p[2]), (p[2], p[0]), (p[0], p[1])];
                let inside = w.iter().zip(pairs).all(|(&wi, (u, v))| wi > 0.0 || (wi == 0.0 && owns(u, v)));
                if inside {
                    let cx = (w[0] * x[0] + w[1] * x[1] + w[2] * x[2]) / area;
                    rows[k * res + j].push((cx, sign));
                }
            }
        }
    }
    for (r, row) in rows.iter_mut().enumerate() {
        if row.is_empty() {
            continue;
        }
        row.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut winding = 0;
        let mut next = 0;
        for i in (0..res).rev() {
            let cx = grid.center(0, i);
            while next < row.len() && row[next].0 > cx {
                winding += row[next].1;
                next += 1;
            }
            grid.cells[r * res + i] = winding != 0;
        }
    }
    grid
}

/// Share of the reference's voxels also occupied by the generated solid,
/// both voxelized over the reference's bounding box.
pub fn iogt(gt: &LabeledMesh, gen: &LabeledMesh, resolution: usize) -> Result<f64, EvalError> {
    if resolution == 0 {
        return Err(EvalError::InvalidParameter("resolution must be positive".into()));
    }
    if !gt.is_watertight() {
        return Err(EvalError::NotWatertight("ground truth"));
    }
    if !gen.is_watertight() {
        return Err(EvalError::NotWatertight("generated"));
    }
    let (lo, hi) = gt.bounding_box().ok_or(EvalError::EmptyGT)?;
    if (0..3).any(|i| hi[i] <= lo[i]) {
        return Err(EvalError::EmptyGT);
    }
    let (lo, hi) = ([lo.x, lo.y, lo.z], [hi.x, hi.y, hi.z]);
    let a = voxelize(gt, lo, hi, resolution);
    let total = a.count();
    if total == 0 {
        return Err(EvalError::EmptyGT);
    }
    let b = voxelize(gen, lo, hi, resolution);
    let both = a.cells.iter().zip(&b.cells).filter(|(x, y)| **x && **y).count();
    Ok(both as f64 / total as f64)
}
