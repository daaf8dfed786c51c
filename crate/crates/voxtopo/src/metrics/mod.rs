//! Overlap and surface-distance metrics between binary masks, plus the
//! paired t-test used to compare per-case metric series.
//!
//! Surfaces are foreground voxels with at least one of their six face
//! neighbors background, where outside the grid counts as background.
//! Distances are Euclidean between surface voxel centers in millimeters,
//! so anisotropic spacing is respected. The 95% Hausdorff distance is the
//! larger of the two directed 95th percentiles (linear interpolation);
//! conventions differ between tools, this one is fixed here.

mod ttest;

pub use ttest::{paired_t_test, t_two_sided_p, TTestResult};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::BinaryVolume;

/// The four mask-comparison metrics for one (prediction, reference) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub dice: f64,
    pub hd_mm: f64,
    pub hd95_mm: f64,
    pub asd_mm: f64,
}

fn check_same_grid(a: &BinaryVolume, b: &BinaryVolume) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::InvalidArgument(format!(
            "mask dims differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    if a.spacing() != b.spacing() {
        return Err(Error::InvalidArgument(format!(
            "mask spacings differ: {:?} vs {:?}",
            a.spacing(),
            b.spacing()
        )));
    }
    Ok(())
}

/// Dice overlap 2|A∩B| / (|A|+|B|). Two empty masks agree perfectly: 1.0.
pub fn dice(a: &BinaryVolume, b: &BinaryVolume) -> Result<f64> {
    check_same_grid(a, b)?;
    let mut both = 0usize;
    let mut total = 0usize;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        both += (x && y) as usize;
        total += x as usize + y as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / total as f64)
}

fn surface_mask(mask: &BinaryVolume) -> Vec<bool> {
    let (nx, ny, nz) = mask.dims();
    let data = mask.data();
    let mut surface = vec![false; data.len()];
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let i = ix + nx * (iy + ny * iz);
                if !data[i] {
                    continue;
                }
                surface[i] = ix == 0
                    || ix + 1 == nx
                    || iy == 0
                    || iy + 1 == ny
                    || iz == 0
                    || iz + 1 == nz
                    || !data[i - 1]
                    || !data[i + 1]
                    || !data[i - nx]
                    || !data[i + nx]
                    || !data[i - nx * ny]
                    || !data[i + nx * ny];
            }
        }
    }
    surface
}

fn surface_coords(surface: &[bool], dims: (usize, usize, usize)) -> Vec<(usize, usize, usize)> {
    let (nx, ny, _) = dims;
    surface
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| (i % nx, (i / nx) % ny, i / (nx * ny)))
        .collect()
}

/// Distance from one voxel center to the nearest marked voxel center,
/// searching outward ring by ring in index space. A ring at Chebyshev
/// radius r holds no voxel closer than r times the smallest spacing, which
/// bounds how far the search must go once a candidate is found.
fn nearest_distance(
    grid: &[bool],
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
    q: (usize, usize, usize),
) -> f64 {
    let (nx, ny, nz) = dims;
    let (sx, sy, sz) = spacing;
    let smin = sx.min(sy).min(sz);
    let max_ring = nx.max(ny).max(nz);
    let mut best2 = f64::INFINITY;

    let visit = |dx: i64, dy: i64, dz: i64, best2: &mut f64| {
        let (jx, jy, jz) = (q.0 as i64 + dx, q.1 as i64 + dy, q.2 as i64 + dz);
        if jx < 0 || jy < 0 || jz < 0 || jx >= nx as i64 || jy >= ny as i64 || jz >= nz as i64 {
            return;
        }
        if grid[jx as usize + nx * (jy as usize + ny * jz as usize)] {
            let d = [dx as f64 * sx, dy as f64 * sy, dz as f64 * sz];
            let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if d2 < *best2 {
                *best2 = d2;
            }
        }
    };

    for r in 0..=max_ring as i64 {
        let ring_min = r as f64 * smin;
        if best2 <= ring_min * ring_min {
            break;
        }
        if r == 0 {
            visit(0, 0, 0, &mut best2);
            continue;
        }
        // Two full z-faces, then y-faces and x-faces of the remaining band.
        for dy in -r..=r {
            for dx in -r..=r {
                visit(dx, dy, -r, &mut best2);
                visit(dx, dy, r, &mut best2);
            }
        }
        for dz in -(r - 1)..=(r - 1) {
            for dx in -r..=r {
                visit(dx, -r, dz, &mut best2);
                visit(dx, r, dz, &mut best2);
            }
            for dy in -(r - 1)..=(r - 1) {
                visit(-r, dy, dz, &mut best2);
                visit(r, dy, dz, &mut best2);
            }
        }
    }
    best2.sqrt()
}

/// Directed surface distances both ways: for every surface voxel of `a`
/// the distance to the nearest surface voxel of `b`, and vice versa.
pub fn surface_distances(a: &BinaryVolume, b: &BinaryVolume) -> Result<(Vec<f64>, Vec<f64>)> {
    check_same_grid(a, b)?;
    if a.count_true() == 0 || b.count_true() == 0 {
        return Err(Error::UndefinedMetric(
            "surface distances need two nonempty masks".into(),
        ));
    }
    let dims = a.dims();
    let spacing = a.spacing();
    let sa = surface_mask(a);
    let sb = surface_mask(b);
    let ca = surface_coords(&sa, dims);
    let cb = surface_coords(&sb, dims);
    let d_ab: Vec<f64> =
        ca.par_iter().map(|&q| nearest_distance(&sb, dims, spacing, q)).collect();
    let d_ba: Vec<f64> =
        cb.par_iter().map(|&q| nearest_distance(&sa, dims, spacing, q)).collect();
    Ok((d_ab, d_ba))
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Percentile by linear interpolation over the sorted values at rank
/// q * (n - 1).
fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Hausdorff distance: the worst surface voxel mismatch in either direction.
pub fn hd(a: &BinaryVolume, b: &BinaryVolume) -> Result<f64> {
    let (d_ab, d_ba) = surface_distances(a, b)?;
    Ok(max_of(&d_ab).max(max_of(&d_ba)))
}

/// 95% Hausdorff distance: max of the two directed 95th percentiles.
pub fn hd95(a: &BinaryVolume, b: &BinaryVolume) -> Result<f64> {
    let (d_ab, d_ba) = surface_distances(a, b)?;
    Ok(percentile(&d_ab, 0.95).max(percentile(&d_ba, 0.95)))
}

/// Average symmetric surface distance: mean of all directed distances.
pub fn asd(a: &BinaryVolume, b: &BinaryVolume) -> Result<f64> {
    let (d_ab, d_ba) = surface_distances(a, b)?;
    let sum: f64 = d_ab.iter().sum::<f64>() + d_ba.iter().sum::<f64>();
    Ok(sum / (d_ab.len() + d_ba.len()) as f64)
}

/// All four metrics from one surface-distance pass. Needs both masks
/// nonempty, like the distance functions.
pub fn metric_report(pred: &BinaryVolume, reference: &BinaryVolume) -> Result<MetricReport> {
    let dice = dice(pred, reference)?;
    let (d_ab, d_ba) = surface_distances(pred, reference)?;
    let hd_mm = max_of(&d_ab).max(max_of(&d_ba));
    let hd95_mm = percentile(&d_ab, 0.95).max(percentile(&d_ba, 0.95));
    let sum: f64 = d_ab.iter().sum::<f64>() + d_ba.iter().sum::<f64>();
    let asd_mm = sum / (d_ab.len() + d_ba.len()) as f64;
    Ok(MetricReport { dice, hd_mm, hd95_mm, asd_mm })
}
