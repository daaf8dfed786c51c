//! Tube masks around polyline paths.
//!
//! A path is an ordered polyline in millimeters. [`rasterize_tube`] marks
//! every voxel whose center lies within a given Euclidean distance of the
//! polyline, measured segment by segment in physical units, so the result is
//! sub-voxel exact and orientation independent. [`grow_and_threshold`]
//! combines the same distance test with an intensity window, the way a
//! rough mask is grown around a drawn centerline and then trimmed to
//! tissue-like values.
//!
//! The conventional thin "inner cylinder" of a path is `rasterize_tube`
//! with radius 1.5 times the smallest voxel spacing (a three-voxel
//! diameter).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryVolume, ScalarVolume};

/// Default growth margin in millimeters for [`grow_and_threshold`].
pub const DEFAULT_MARGIN_MM: f64 = 30.0;
/// Default intensity window for [`grow_and_threshold`].
pub const DEFAULT_HU_LO: f64 = -80.0;
pub const DEFAULT_HU_HI: f64 = 200.0;

/// Ordered polyline of (x, y, z) points in millimeters. When `closed`, the
/// last point connects back to the first; don't repeat the first point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path3D {
    points: Vec<[f64; 3]>,
    #[serde(default)]
    closed: bool,
}

impl Path3D {
    pub fn new(points: Vec<[f64; 3]>, closed: bool) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "path needs at least 2 points, got {}",
                points.len()
            )));
        }
        for p in &points {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite path point {p:?}")));
            }
        }
        let wrap = if closed { points.len() } else { points.len() - 1 };
        for i in 0..wrap {
            let j = (i + 1) % points.len();
            if points[i] == points[j] {
                return Err(Error::InvalidArgument(format!(
                    "consecutive path points {i} and {j} coincide at {:?}",
                    points[i]
                )));
            }
        }
        Ok(Path3D { points, closed })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    /// Consecutive point pairs, including the wrap-around segment of a
    /// closed path.
    pub fn segments(&self) -> impl Iterator<Item = ([f64; 3], [f64; 3])> + '_ {
        let wrap = if self.closed { self.points.len() } else { self.points.len() - 1 };
        (0..wrap).map(move |i| (self.points[i], self.points[(i + 1) % self.points.len()]))
    }

    /// Euclidean distance from a point to the polyline, in millimeters.
    pub fn distance_to(&self, p: [f64; 3]) -> f64 {
        self.segments()
            .map(|(a, b)| dist2_point_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Parses the JSON form `{"points": [[x,y,z], ...], "closed": bool}`;
    /// `closed` defaults to false when absent.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Path3D = serde_json::from_str(s)
            .map_err(|e| Error::MalformedPath(e.to_string()))?;
        Path3D::new(raw.points, raw.closed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path serializes")
    }
}

/// Reads a path from a JSON file (see [`Path3D::from_json`]).
pub fn read_path(path: impl AsRef<std::path::Path>) -> Result<Path3D> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Path3D::from_json(&text)
}

pub fn write_path(p: &Path3D, path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, p.to_json()).map_err(|e| Error::io(path, e))
}

fn dist2_point_segment(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0);
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn check_in_bounds(path: &Path3D, dims: (usize, usize, usize), spacing: (f64, f64, f64)) -> Result<()> {
    let extent = [dims.0 as f64 * spacing.0, dims.1 as f64 * spacing.1, dims.2 as f64 * spacing.2];
    for p in path.points() {
        for axis in 0..3 {
            if p[axis] < 0.0 || p[axis] > extent[axis] {
                return Err(Error::InvalidArgument(format!(
                    "path point {p:?} lies outside the volume extent {extent:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Marks every voxel whose center is within `radius_mm` of the path.
///
/// The path must lie inside the physical bounds of the grid. Work is
/// limited to the voxels near each segment's bounding box, so long paths in
/// large volumes stay cheap.
pub fn rasterize_tube(
    path: &Path3D,
    radius_mm: f64,
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
) -> Result<BinaryVolume> {
    if !(radius_mm > 0.0) || !radius_mm.is_finite() {
        return Err(Error::InvalidArgument(format!("tube radius must be > 0, got {radius_mm}")));
    }
    let mut out = BinaryVolume::filled(dims, spacing, false)?;
    check_in_bounds(path, dims, spacing)?;
    let r2 = radius_mm * radius_mm;
    let (nx, ny, nz) = dims;
    let sp = [spacing.0, spacing.1, spacing.2];
    let n = [nx, ny, nz];
    for (a, b) in path.segments() {
        // Voxel index window whose centers can be within radius of the
        // segment, padded by one voxel against rounding.
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for axis in 0..3 {
            let min = a[axis].min(b[axis]) - radius_mm;
            let max = a[axis].max(b[axis]) + radius_mm;
            lo[axis] = ((min / sp[axis] - 0.5).floor() - 1.0).max(0.0) as usize;
            hi[axis] = (((max / sp[axis] - 0.5).ceil() + 1.0).max(0.0) as usize).min(n[axis] - 1);
        }
        for iz in lo[2]..=hi[2] {
            for iy in lo[1]..=hi[1] {
                for ix in lo[0]..=hi[0] {
                    let c = [
                        (ix as f64 + 0.5) * sp[0],
                        (iy as f64 + 0.5) * sp[1],
                        (iz as f64 + 0.5) * sp[2],
                    ];
                    if dist2_point_segment(c, a, b) <= r2 {
                        out.set(ix, iy, iz, true);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Voxels within `margin_mm` of the path whose intensity lies in
/// [`lo`, `hi`]. The grid is the intensity volume's.
pub fn grow_and_threshold(
    path: &Path3D,
    margin_mm: f64,
    intensity: &ScalarVolume,
    lo: f64,
    hi: f64,
) -> Result<BinaryVolume> {
    if !(margin_mm > 0.0) || !margin_mm.is_finite() {
        return Err(Error::InvalidArgument(format!("margin must be > 0, got {margin_mm}")));
    }
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!(
            "intensity window is empty: lo {lo} > hi {hi}"
        )));
    }
    let mut grown = rasterize_tube(path, margin_mm, intensity.dims(), intensity.spacing())?;
    let values = intensity.data();
    for (i, keep) in grown.data_mut().iter_mut().enumerate() {
        *keep = *keep && values[i] >= lo && values[i] <= hi;
    }
    Ok(grown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::compute_barcode;

    fn straight_path() -> Path3D {
        Path3D::new(vec![[0.5, 4.5, 4.5], [8.5, 4.5, 4.5]], false).unwrap()
    }

    #[test]
    fn straight_tube_cross_section_is_nine_voxels() {
        let tube = rasterize_tube(&straight_path(), 1.5, (9, 9, 9), (1.0, 1.0, 1.0)).unwrap();
        // In-plane distances from the axis at (4.5, 4.5): center 0, face
        // neighbors 1, diagonal neighbors sqrt(2); all within 1.5, and
        // nothing at distance 2 or more.
        for ix in 0..9 {
            let mut slice = Vec::new();
            for iy in 0..9 {
                for iz in 0..9 {
                    if tube.get(ix, iy, iz) {
                        slice.push((iy as i64 - 4, iz as i64 - 4));
                    }
                }
            }
            slice.sort();
            assert_eq!(
                slice,
                vec![(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)],
                "slice x={ix}"
            );
        }
    }

    #[test]
    fn tube_grows_monotonically_with_radius() {
        let path = Path3D::new(
            vec![[3.0, 3.0, 3.0], [12.0, 5.0, 9.0], [6.0, 12.0, 12.0]],
            false,
        )
        .unwrap();
        let dims = (16, 16, 16);
        let sp = (1.0, 1.0, 1.0);
        let small = rasterize_tube(&path, 1.0, dims, sp).unwrap();
        let mid = rasterize_tube(&path, 1.5, dims, sp).unwrap();
        let big = rasterize_tube(&path, 2.5, dims, sp).unwrap();
        for i in 0..small.data().len() {
            assert!(!small.data()[i] || mid.data()[i]);
            assert!(!mid.data()[i] || big.data()[i]);
        }
        assert!(small.count_true() < big.count_true());
    }

    #[test]
    fn open_tube_is_contractible() {
        let path = Path3D::new(
            vec![[3.0, 3.0, 7.0], [10.0, 4.0, 7.0], [11.0, 11.0, 8.0]],
            false,
        )
        .unwrap();
        let tube = rasterize_tube(&path, 1.8, (15, 15, 15), (1.0, 1.0, 1.0)).unwrap();
        let bc = compute_barcode(&tube.to_scalar()).unwrap();
        assert_eq!(bc.betti_numbers(1.0), (1, 0, 0));
    }

    #[test]
    fn closed_tube_is_a_solid_torus() {
        let n = 24;
        let steps = 0..n;
        let pts: Vec<[f64; 3]> = steps
            .map(|i| {
                let th = i as f64 / n as f64 * std::f64::consts::TAU;
                [8.0 + 5.0 * th.cos(), 8.0 + 5.0 * th.sin(), 8.0]
            })
            .collect();
        let ring = Path3D::new(pts, true).unwrap();
        let tube = rasterize_tube(&ring, 1.6, (16, 16, 16), (1.0, 1.0, 1.0)).unwrap();
        let bc = compute_barcode(&tube.to_scalar()).unwrap();
        assert_eq!(bc.betti_numbers(1.0), (1, 1, 0));
    }

    #[test]
    fn anisotropic_spacing_uses_physical_distance() {
        // Axis along x at y=z=2mm in a grid with 2mm z-spacing: the voxel
        // one z-step away has center distance 2mm, outside radius 1.5.
        let path = Path3D::new(vec![[0.5, 2.0, 2.0], [7.5, 2.0, 2.0]], false).unwrap();
        let tube = rasterize_tube(&path, 1.5, (8, 4, 4), (1.0, 1.0, 2.0)).unwrap();
        for ix in 0..8 {
            assert!(!tube.get(ix, 1, 2), "z neighbor at 2mm must stay out");
            assert!(tube.get(ix, 1, 0), "in-plane y neighbor at 0.5mm is in");
        }
    }

    #[test]
    fn rejects_bad_paths_and_radii() {
        assert!(matches!(
            Path3D::new(vec![[0.0, 0.0, 0.0]], false),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Path3D::new(vec![[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]], false),
            Err(Error::InvalidArgument(_))
        ));
        // A closed path may not end where it starts.
        assert!(matches!(
            Path3D::new(vec![[1.0, 1.0, 1.0], [2.0, 1.0, 1.0], [1.0, 1.0, 1.0]], true),
            Err(Error::InvalidArgument(_))
        ));
        let path = straight_path();
        assert!(matches!(
            rasterize_tube(&path, 0.0, (9, 9, 9), (1.0, 1.0, 1.0)),
            Err(Error::InvalidArgument(_))
        ));
        let outside = Path3D::new(vec![[-1.0, 4.0, 4.0], [5.0, 4.0, 4.0]], false).unwrap();
        assert!(matches!(
            rasterize_tube(&outside, 1.5, (9, 9, 9), (1.0, 1.0, 1.0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn grow_with_permissive_window_equals_plain_tube() {
        let vol = ScalarVolume::filled((9, 9, 9), (1.0, 1.0, 1.0), 100.0).unwrap();
        let grown = grow_and_threshold(&straight_path(), 2.0, &vol, -80.0, 200.0).unwrap();
        let tube = rasterize_tube(&straight_path(), 2.0, (9, 9, 9), (1.0, 1.0, 1.0)).unwrap();
        assert_eq!(grown.data(), tube.data());
    }

    #[test]
    fn grow_with_excluded_intensity_is_empty() {
        let vol = ScalarVolume::filled((9, 9, 9), (1.0, 1.0, 1.0), 500.0).unwrap();
        let grown = grow_and_threshold(&straight_path(), 2.0, &vol, -80.0, 200.0).unwrap();
        assert_eq!(grown.count_true(), 0);
    }

    #[test]
    fn grow_keeps_only_in_window_voxels_near_the_path() {
        // Tube interior at 50, background at -500: growing by a wide margin
        // still recovers exactly the tube voxels.
        let tube = rasterize_tube(&straight_path(), 1.5, (9, 9, 9), (1.0, 1.0, 1.0)).unwrap();
        let intensity: Vec<f64> =
            tube.data().iter().map(|&m| if m { 50.0 } else { -500.0 }).collect();
        let intensity = ScalarVolume::new((9, 9, 9), (1.0, 1.0, 1.0), intensity).unwrap();
        let grown =
            grow_and_threshold(&straight_path(), 4.0, &intensity, -80.0, 200.0).unwrap();
        assert_eq!(grown.data(), tube.data());
        // And the window test is inclusive on both ends.
        let edge = ScalarVolume::filled((9, 9, 9), (1.0, 1.0, 1.0), 200.0).unwrap();
        let grown = grow_and_threshold(&straight_path(), 1.5, &edge, -80.0, 200.0).unwrap();
        assert_eq!(grown.count_true(), tube.count_true());
    }

    #[test]
    fn grow_is_a_subset_of_the_margin_tube() {
        let tube = rasterize_tube(&straight_path(), 1.5, (9, 9, 9), (1.0, 1.0, 1.0)).unwrap();
        let intensity: Vec<f64> =
            tube.data().iter().map(|&m| if m { 50.0 } else { -500.0 }).collect();
        let intensity = ScalarVolume::new((9, 9, 9), (1.0, 1.0, 1.0), intensity).unwrap();
        let grown = grow_and_threshold(&straight_path(), 3.0, &intensity, -80.0, 200.0).unwrap();
        let margin_tube = rasterize_tube(&straight_path(), 3.0, (9, 9, 9), (1.0, 1.0, 1.0)).unwrap();
        for i in 0..grown.data().len() {
            assert!(!grown.data()[i] || margin_tube.data()[i]);
        }
    }

    #[test]
    fn path_json_round_trips() {
        let path = Path3D::new(vec![[1.0, 2.5, 3.0], [4.0, 5.0, 6.0]], true).unwrap();
        let json = path.to_json();
        assert_eq!(Path3D::from_json(&json).unwrap(), path);

        let open = Path3D::from_json(r#"{"points": [[0,0,0], [1,0,0]]}"#).unwrap();
        assert!(!open.closed());

        assert!(matches!(Path3D::from_json("not json"), Err(Error::MalformedPath(_))));
        assert!(matches!(
            Path3D::from_json(r#"{"points": [[0,0,0]]}"#),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn distance_to_polyline_clamps_to_endpoints() {
        let path = Path3D::new(vec![[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]], false).unwrap();
        assert!((path.distance_to([0.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((path.distance_to([2.0, 2.0, 0.0]) - 2.0).abs() < 1e-12);
        assert!((path.distance_to([5.0, 0.0, 0.0]) - 2.0).abs() < 1e-12);
    }
}
