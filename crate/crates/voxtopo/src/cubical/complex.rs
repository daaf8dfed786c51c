//! Cell grid for the filtered cubical complex of a volume.
//!
//! Cells live on the half-integer grid: coordinate (a, b, c) with
//! 0 <= a <= 2nx (likewise b, c) names a vertex when all of a, b, c are
//! even, and the voxel cube (ix, iy, iz) when (a, b, c) =
//! (2ix+1, 2iy+1, 2iz+1). The dimension of a cell is its number of odd
//! coordinates. A cell is a face of every voxel cube whose closed unit cube
//! contains it; along an even axis those are the voxels at a/2 - 1 and a/2
//! (clipped to the grid), along an odd axis just (a-1)/2.

use crate::error::{Error, Result};
use crate::volume::ScalarVolume;

/// Linear index of a cell on the half-integer grid.
pub type CellId = u32;

pub(crate) const NONE: u32 = u32::MAX;

pub(crate) struct FilteredComplex {
    /// Half-integer grid extents: (2nx+1, 2ny+1, 2nz+1).
    pub w: usize,
    pub h: usize,
    pub num_cells: usize,
    /// Super-level entry value of each cell: max over incident voxels.
    pub value: Vec<f64>,
    /// Voxel realizing `value`, smallest linear index on ties.
    pub voxel: Vec<u32>,
    /// Cell dimension, 0..=3.
    pub dim_of: Vec<u8>,
    /// Filtration position -> cell id. Cells are ordered by entry value
    /// descending (sub-level order of the negated volume), then dimension
    /// ascending so faces precede cofaces at equal value, then cell id.
    pub order: Vec<CellId>,
    /// Cell id -> filtration position.
    pub rank: Vec<u32>,
}

impl FilteredComplex {
    pub fn build(vol: &ScalarVolume) -> Result<Self> {
        let (nx, ny, nz) = vol.dims();
        let (w, h, d) = (2 * nx + 1, 2 * ny + 1, 2 * nz + 1);
        let num_cells = w
            .checked_mul(h)
            .and_then(|v| v.checked_mul(d))
            .filter(|v| *v < NONE as usize)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "volume dims {:?} exceed the supported cell-grid size",
                    vol.dims()
                ))
            })?;

        let data = vol.data();
        let mut value = vec![0.0f64; num_cells];
        let mut voxel = vec![0u32; num_cells];
        let mut dim_of = vec![0u8; num_cells];

        let mut id = 0usize;
        for c in 0..d {
            let (z0, z1) = incident_span(c, nz);
            for b in 0..h {
                let (y0, y1) = incident_span(b, ny);
                for a in 0..w {
                    let (x0, x1) = incident_span(a, nx);
                    // Scan incident voxels in ascending linear order so the
                    // first strict max is the smallest-index one.
                    let mut best = f64::NEG_INFINITY;
                    let mut best_voxel = 0u32;
                    for iz in z0..z1 {
                        for iy in y0..y1 {
                            let row = nx * (iy + ny * iz);
                            for ix in x0..x1 {
                                let v = data[row + ix];
                                if v > best {
                                    best = v;
                                    best_voxel = (row + ix) as u32;
                                }
                            }
                        }
                    }
                    value[id] = best;
                    voxel[id] = best_voxel;
                    dim_of[id] = ((a & 1) + (b & 1) + (c & 1)) as u8;
                    id += 1;
                }
            }
        }

        // Sort keys packed into u128: negated value bits (values are
        // non-negative, so the IEEE bit pattern is order-preserving and
        // complementing it flips to descending), then dimension, then id.
        let mut keys: Vec<u128> = (0..num_cells as u32)
            .map(|cell| {
                let bits = !(value[cell as usize].to_bits());
                ((bits as u128) << 34) | ((dim_of[cell as usize] as u128) << 32) | cell as u128
            })
            .collect();
        keys.sort_unstable();
        let order: Vec<CellId> = keys.iter().map(|k| (k & 0xFFFF_FFFF) as u32).collect();
        let mut rank = vec![0u32; num_cells];
        for (pos, cell) in order.iter().enumerate() {
            rank[*cell as usize] = pos as u32;
        }

        Ok(FilteredComplex { w, h, num_cells, value, voxel, dim_of, order, rank })
    }

    #[inline]
    pub fn coords(&self, id: CellId) -> (usize, usize, usize) {
        let id = id as usize;
        (id % self.w, (id / self.w) % self.h, id / (self.w * self.h))
    }

    /// Faces of a cell: one step along each odd axis in both directions.
    /// Odd coordinates are never on the grid edge, so faces always exist.
    #[inline]
    pub fn boundary(&self, id: CellId, out: &mut Vec<CellId>) {
        out.clear();
        let (a, b, c) = self.coords(id);
        if a & 1 == 1 {
            out.push(id - 1);
            out.push(id + 1);
        }
        if b & 1 == 1 {
            out.push(id - self.w as u32);
            out.push(id + self.w as u32);
        }
        if c & 1 == 1 {
            out.push(id - (self.w * self.h) as u32);
            out.push(id + (self.w * self.h) as u32);
        }
    }
}

/// Half-open voxel index span incident to half-integer coordinate `a`.
#[inline]
fn incident_span(a: usize, n: usize) -> (usize, usize) {
    if a & 1 == 1 {
        ((a - 1) / 2, (a - 1) / 2 + 1)
    } else {
        ((a / 2).saturating_sub(1), (a / 2 + 1).min(n))
    }
}
