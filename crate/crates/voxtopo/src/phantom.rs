//! Seeded synthetic phantoms: tubular shapes with known topology, their
//! centerline paths, ground-truth masks, two-level intensity volumes, and
//! soft "predictions" corrupted in controlled ways.
//!
//! Every output is a pure function of the spec; the same seed reproduces
//! the same volumes bit for bit (noise comes from [`SplitMix64`]).
//!
//! The soft volume `prob` is the ground truth blurred by a separable
//! (0.1, 0.8, 0.1) kernel per axis plus uniform noise in
//! [-noise_sigma, noise_sigma), clamped to [0, 1]. The kernel keeps the
//! mask recoverable: a mask voxel retains at least 0.8^3 = 0.512 and a
//! background voxel at most 0.488, so thresholding at 0.5 undoes the blur
//! exactly when the noise and defects are off.
//!
//! The defective kinds corrupt topology the way real predictions do:
//! `two_tube_bridged` and `coil_touching` add a thin spurious tube between
//! path sections (present in both `gt` and `prob`, absent from `path`, so
//! an inner cylinder built from the path stays clean), and additionally
//! suppress `prob` inside a small box crossing the tube, splitting off a
//! stub component. A prediction refined toward Betti numbers (1, 0, 0) has
//! to break the former and heal the latter.

use crate::cylinder::{rasterize_tube, Path3D};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::volume::{BinaryVolume, ScalarVolume};

/// Shape family of a phantom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    StraightTube,
    Helix,
    ClosedRing,
    TwoTubeBridged,
    CoilTouching,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 5] = [
        PhantomKind::StraightTube,
        PhantomKind::Helix,
        PhantomKind::ClosedRing,
        PhantomKind::TwoTubeBridged,
        PhantomKind::CoilTouching,
    ];

    /// True for the kinds whose `prob` carries topology defects.
    pub fn is_defective(&self) -> bool {
        matches!(self, PhantomKind::TwoTubeBridged | PhantomKind::CoilTouching)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::StraightTube => "straight_tube",
            PhantomKind::Helix => "helix",
            PhantomKind::ClosedRing => "closed_ring",
            PhantomKind::TwoTubeBridged => "two_tube_bridged",
            PhantomKind::CoilTouching => "coil_touching",
        }
    }
}

impl std::fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PhantomKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown phantom kind {s:?}; expected one of straight_tube, helix, \
                     closed_ring, two_tube_bridged, coil_touching"
                ))
            })
    }
}

/// Full description of one phantom instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub dims: (usize, usize, usize),
    pub spacing: (f64, f64, f64),
    pub tube_radius_mm: f64,
    pub intensity_inside: f64,
    pub intensity_outside: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind) -> Self {
        PhantomSpec {
            kind,
            dims: (64, 64, 64),
            spacing: (1.0, 1.0, 1.0),
            tube_radius_mm: 3.5,
            intensity_inside: 50.0,
            intensity_outside: -500.0,
            noise_sigma: 0.05,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tube_radius_mm > 0.0) || !self.tube_radius_mm.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tube radius must be > 0, got {}",
                self.tube_radius_mm
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !self.intensity_inside.is_finite() || !self.intensity_outside.is_finite() {
            return Err(Error::InvalidArgument("non-finite phantom intensity".into()));
        }
        Ok(())
    }
}

/// Generated phantom: two-level intensity, ground-truth mask, centerline
/// path, and the corrupted soft prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub intensity: ScalarVolume,
    pub gt: BinaryVolume,
    pub path: Path3D,
    pub prob: ScalarVolume,
}

/// Suppression factor applied to `prob` inside a defect gap box.
const GAP_FACTOR: f64 = 0.3;

struct Geometry {
    path: Path3D,
    // Spurious connections: thin tubes unioned into gt (and so into prob).
    extra_tubes: Vec<(Path3D, f64)>,
    // Axis-aligned box (mm) where prob is multiplied by GAP_FACTOR.
    gap_box: Option<([f64; 3], [f64; 3])>,
}

fn helix_points(extent: [f64; 3], n: usize) -> Vec<[f64; 3]> {
    let (cx, cy) = (0.5 * extent[0], 0.5 * extent[1]);
    let r = 0.28 * extent[0].min(extent[1]);
    let (zlo, zhi) = (0.125 * extent[2], 0.875 * extent[2]);
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let th = 3.0 * std::f64::consts::TAU * t;
            [cx + r * th.cos(), cy + r * th.sin(), zlo + (zhi - zlo) * t]
        })
        .collect()
}

fn build_geometry(kind: PhantomKind, extent: [f64; 3], smin: f64, tube_radius: f64) -> Result<Geometry> {
    let [ex, ey, ez] = extent;
    let half_cross = tube_radius + 3.0 * smin;
    match kind {
        PhantomKind::StraightTube => Ok(Geometry {
            path: Path3D::new(
                vec![[0.1 * ex, 0.5 * ey, 0.5 * ez], [0.9 * ex, 0.5 * ey, 0.5 * ez]],
                false,
            )?,
            extra_tubes: vec![],
            gap_box: None,
        }),
        PhantomKind::Helix => Ok(Geometry {
            path: Path3D::new(helix_points(extent, 240), false)?,
            extra_tubes: vec![],
            gap_box: None,
        }),
        PhantomKind::ClosedRing => {
            let (cx, cy) = (0.5 * ex, 0.5 * ey);
            let r = 0.3 * ex.min(ey);
            let pts: Vec<[f64; 3]> = (0..160)
                .map(|i| {
                    let th = i as f64 / 160.0 * std::f64::consts::TAU;
                    [cx + r * th.cos(), cy + r * th.sin(), 0.5 * ez]
                })
                .collect();
            Ok(Geometry { path: Path3D::new(pts, true)?, extra_tubes: vec![], gap_box: None })
        }
        PhantomKind::TwoTubeBridged => {
            // U shape: two parallel legs joined by a bend, one spurious
            // bridge between the legs, and a gap cutting the leg tail that
            // hangs outside the bridge-bend cycle.
            let z = 0.5 * ez;
            let (y1, y2) = (0.3 * ey, 0.7 * ey);
            let path = Path3D::new(
                vec![
                    [0.08 * ex, y1, z],
                    [0.8 * ex, y1, z],
                    [0.8 * ex, y2, z],
                    [0.08 * ex, y2, z],
                ],
                false,
            )?;
            let bridge =
                Path3D::new(vec![[0.42 * ex, y1, z], [0.42 * ex, y2, z]], false)?;
            // Long enough that the missing stretch dominates the upper tail
            // of the surface-distance distribution, and clear of both the
            // leg cap and the bridge junction.
            let gap_lo = [0.145 * ex, y1 - half_cross, z - half_cross];
            let gap_hi = [0.38 * ex, y1 + half_cross, z + half_cross];
            Ok(Geometry {
                path,
                extra_tubes: vec![(bridge, smin)],
                gap_box: Some((gap_lo, gap_hi)),
            })
        }
        PhantomKind::CoilTouching => {
            // Helix with two spurious wall contacts between adjacent
            // windings, plus a gap on the final winding, past both contact
            // spans so the touch cycles stay intact.
            let path = Path3D::new(helix_points(extent, 240), false)?;
            let (cx, cy) = (0.5 * ex, 0.5 * ey);
            let r = 0.28 * ex.min(ey);
            let (zlo, zhi) = (0.125 * ez, 0.875 * ez);
            let z = |t: f64| zlo + (zhi - zlo) * t;
            let touch_a = Path3D::new(
                vec![[cx + r, cy, z(0.0)], [cx + r, cy, z(1.0 / 3.0)]],
                false,
            )?;
            let touch_b = Path3D::new(
                vec![[cx - r, cy, z(1.0 / 6.0)], [cx - r, cy, z(0.5)]],
                false,
            )?;
            // The box brackets the top of the final winding. Its z window
            // keeps it off the neighboring winding and both contacts; the x
            // and y bounds admit a wide arc so the missing stretch dominates
            // the upper tail of the surface-distance distribution.
            let gap_lo = [cx - 0.9 * r, cy + r / 3.0, z(0.75) - half_cross];
            let gap_hi = [cx + 0.9 * r, cy + r + half_cross, z(0.75) + half_cross];
            Ok(Geometry {
                path,
                extra_tubes: vec![(touch_a, 1.2 * smin), (touch_b, 1.2 * smin)],
                gap_box: Some((gap_lo, gap_hi)),
            })
        }
    }
}

/// Separable 3-tap blur (0.1, 0.8, 0.1) per axis with zero padding.
fn blur3(data: &mut Vec<f64>, dims: (usize, usize, usize)) {
    let (nx, ny, nz) = dims;
    let idx = |x: usize, y: usize, z: usize| x + nx * (y + ny * z);
    let mut out = vec![0.0; data.len()];
    for (n, stride_axis) in [(nx, 0usize), (ny, 1), (nz, 2)] {
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let i = idx(ix, iy, iz);
                    let pos = [ix, iy, iz][stride_axis];
                    let lo = if pos > 0 {
                        let mut c = [ix, iy, iz];
                        c[stride_axis] -= 1;
                        data[idx(c[0], c[1], c[2])]
                    } else {
                        0.0
                    };
                    let hi = if pos + 1 < n {
                        let mut c = [ix, iy, iz];
                        c[stride_axis] += 1;
                        data[idx(c[0], c[1], c[2])]
                    } else {
                        0.0
                    };
                    out[i] = 0.8 * data[i] + 0.1 * (lo + hi);
                }
            }
        }
        std::mem::swap(data, &mut out);
    }
}

/// Builds the phantom described by the spec. Deterministic per seed.
pub fn generate(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let dims = spec.dims;
    let spacing = spec.spacing;
    // Probe the grid early so dims/spacing errors surface before geometry.
    let probe = BinaryVolume::filled(dims, spacing, false)?;
    let extent = probe.to_scalar().extent();
    let smin = spacing.0.min(spacing.1).min(spacing.2);

    let geo = build_geometry(spec.kind, extent, smin, spec.tube_radius_mm)?;
    let mut gt = rasterize_tube(&geo.path, spec.tube_radius_mm, dims, spacing)?;
    for (tube_path, radius) in &geo.extra_tubes {
        let extra = rasterize_tube(tube_path, *radius, dims, spacing)?;
        for (dst, &src) in gt.data_mut().iter_mut().zip(extra.data()) {
            *dst = *dst || src;
        }
    }

    let intensity_data: Vec<f64> = gt
        .data()
        .iter()
        .map(|&m| if m { spec.intensity_inside } else { spec.intensity_outside })
        .collect();
    let intensity = ScalarVolume::new(dims, spacing, intensity_data)?;

    let mut field: Vec<f64> =
        gt.data().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    blur3(&mut field, dims);
    let mut rng = SplitMix64::new(spec.seed);
    for v in field.iter_mut() {
        *v = (*v + spec.noise_sigma * rng.next_signed()).clamp(0.0, 1.0);
    }
    if let Some((lo, hi)) = geo.gap_box {
        let (nx, ny, nz) = dims;
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let c = [
                        (ix as f64 + 0.5) * spacing.0,
                        (iy as f64 + 0.5) * spacing.1,
                        (iz as f64 + 0.5) * spacing.2,
                    ];
                    if (0..3).all(|a| c[a] >= lo[a] && c[a] <= hi[a]) {
                        field[ix + nx * (iy + ny * iz)] *= GAP_FACTOR;
                    }
                }
            }
        }
    }
    let prob = ScalarVolume::new(dims, spacing, field)?;

    Ok(Phantom { intensity, gt, path: geo.path, prob })
}
