//! Dense 3D volumes on a regular grid, plus the `.svol` file format.
//!
//! Layout is row-major with x fastest: the voxel at integer coordinates
//! (ix, iy, iz) lives at linear index `ix + nx * (iy + ny * iz)`. Physical
//! positions are voxel centers, `(ix + 0.5) * spacing.0` and so on, in
//! millimeters. Volumes are immutable once constructed; every operation
//! returns a new volume.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as IoRead, Write as IoWrite};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar field on a voxel grid. Values are stored as f64 in memory;
/// the file format stores f32 (see [`write_volume`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
    data: Vec<f64>,
}

/// Binary mask on a voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryVolume {
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
    data: Vec<bool>,
}

fn check_dims_spacing(dims: (usize, usize, usize), spacing: (f64, f64, f64)) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "volume dims must be positive, got {dims:?}"
        )));
    }
    for s in [spacing.0, spacing.1, spacing.2] {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "voxel spacing must be positive and finite, got {spacing:?}"
            )));
        }
    }
    Ok(())
}

impl ScalarVolume {
    pub fn new(
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        data: Vec<f64>,
    ) -> Result<Self> {
        check_dims_spacing(dims, spacing)?;
        let n = dims.0 * dims.1 * dims.2;
        if data.len() != n {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match dims {:?} ({} voxels)",
                data.len(),
                dims,
                n
            )));
        }
        Ok(ScalarVolume { dims, spacing, data })
    }

    pub fn filled(dims: (usize, usize, usize), spacing: (f64, f64, f64), value: f64) -> Result<Self> {
        check_dims_spacing(dims, spacing)?;
        let n = dims.0 * dims.1 * dims.2;
        Ok(ScalarVolume { dims, spacing, data: vec![value; n] })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn num_voxels(&self) -> usize {
        self.data.len()
    }

    pub fn linear_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        debug_assert!(ix < self.dims.0 && iy < self.dims.1 && iz < self.dims.2);
        ix + self.dims.0 * (iy + self.dims.1 * iz)
    }

    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.data[self.linear_index(ix, iy, iz)]
    }

    /// Physical center of a voxel, in millimeters.
    pub fn voxel_center(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [
            (ix as f64 + 0.5) * self.spacing.0,
            (iy as f64 + 0.5) * self.spacing.1,
            (iz as f64 + 0.5) * self.spacing.2,
        ]
    }

    /// Physical extent of the grid, in millimeters.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.dims.0 as f64 * self.spacing.0,
            self.dims.1 as f64 * self.spacing.1,
            self.dims.2 as f64 * self.spacing.2,
        ]
    }

    pub fn is_probability(&self) -> bool {
        self.data.iter().all(|v| *v >= 0.0 && *v <= 1.0)
    }

    /// Errors unless every value lies in [0, 1]. NaN fails the check.
    pub fn validate_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "expected a probability volume with all values in [0, 1]".into(),
            ))
        }
    }

    /// Super-level-set mask: voxels with value >= p.
    pub fn threshold(&self, p: f64) -> BinaryVolume {
        BinaryVolume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().map(|v| *v >= p).collect(),
        }
    }

    /// Block-mean pooling by an integer factor along every axis.
    ///
    /// Output dims are ceil(n / factor); a trailing partial block averages
    /// only the voxels present in it. Output spacing is input spacing times
    /// the factor. Factor 1 is the identity.
    pub fn downsample(&self, factor: usize) -> Result<ScalarVolume> {
        if factor == 0 {
            return Err(Error::InvalidArgument("downsample factor must be >= 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let (nx, ny, nz) = self.dims;
        let odims = (nx.div_ceil(factor), ny.div_ceil(factor), nz.div_ceil(factor));
        let mut out = vec![0.0f64; odims.0 * odims.1 * odims.2];
        for oz in 0..odims.2 {
            let z0 = oz * factor;
            let z1 = (z0 + factor).min(nz);
            for oy in 0..odims.1 {
                let y0 = oy * factor;
                let y1 = (y0 + factor).min(ny);
                for ox in 0..odims.0 {
                    let x0 = ox * factor;
                    let x1 = (x0 + factor).min(nx);
                    let mut sum = 0.0;
                    for z in z0..z1 {
                        for y in y0..y1 {
                            let row = self.dims.0 * (y + self.dims.1 * z);
                            for x in x0..x1 {
                                sum += self.data[row + x];
                            }
                        }
                    }
                    let count = (x1 - x0) * (y1 - y0) * (z1 - z0);
                    out[ox + odims.0 * (oy + odims.1 * oz)] = sum / count as f64;
                }
            }
        }
        ScalarVolume::new(
            odims,
            (
                self.spacing.0 * factor as f64,
                self.spacing.1 * factor as f64,
                self.spacing.2 * factor as f64,
            ),
            out,
        )
    }
}

/// Adjoint of [`ScalarVolume::downsample`]: pulls a gradient on the coarse
/// grid back to the fine grid. Each fine voxel receives its block's coarse
/// value divided by the block's actual voxel count (partial border blocks
/// divide by fewer), matching the mean in the forward map.
pub(crate) fn downsample_adjoint(
    coarse: &ScalarVolume,
    fine_dims: (usize, usize, usize),
    fine_spacing: (f64, f64, f64),
    factor: usize,
) -> Result<ScalarVolume> {
    if factor == 0 {
        return Err(Error::InvalidArgument("downsample factor must be >= 1".into()));
    }
    let (nx, ny, nz) = fine_dims;
    let expect = (nx.div_ceil(factor), ny.div_ceil(factor), nz.div_ceil(factor));
    if coarse.dims() != expect {
        return Err(Error::InvalidArgument(format!(
            "coarse dims {:?} do not match fine dims {:?} pooled by {}",
            coarse.dims(),
            fine_dims,
            factor
        )));
    }
    let mut out = vec![0.0f64; nx * ny * nz];
    for z in 0..nz {
        let bz = z / factor;
        let mz = ((bz + 1) * factor).min(nz) - bz * factor;
        for y in 0..ny {
            let by = y / factor;
            let my = ((by + 1) * factor).min(ny) - by * factor;
            for x in 0..nx {
                let bx = x / factor;
                let mx = ((bx + 1) * factor).min(nx) - bx * factor;
                let m = (mx * my * mz) as f64;
                out[x + nx * (y + ny * z)] = coarse.value(bx, by, bz) / m;
            }
        }
    }
    ScalarVolume::new(fine_dims, fine_spacing, out)
}

impl BinaryVolume {
    pub fn new(
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        data: Vec<bool>,
    ) -> Result<Self> {
        check_dims_spacing(dims, spacing)?;
        let n = dims.0 * dims.1 * dims.2;
        if data.len() != n {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match dims {:?} ({} voxels)",
                data.len(),
                dims,
                n
            )));
        }
        Ok(BinaryVolume { dims, spacing, data })
    }

    pub fn filled(dims: (usize, usize, usize), spacing: (f64, f64, f64), value: bool) -> Result<Self> {
        check_dims_spacing(dims, spacing)?;
        let n = dims.0 * dims.1 * dims.2;
        Ok(BinaryVolume { dims, spacing, data: vec![value; n] })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        self.spacing
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn num_voxels(&self) -> usize {
        self.data.len()
    }

    pub fn linear_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        debug_assert!(ix < self.dims.0 && iy < self.dims.1 && iz < self.dims.2);
        ix + self.dims.0 * (iy + self.dims.1 * iz)
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.data[self.linear_index(ix, iy, iz)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, iz: usize, value: bool) {
        let i = self.linear_index(ix, iy, iz);
        self.data[i] = value;
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    /// 1.0 / 0.0 encoding, preserving dims and spacing.
    pub fn to_scalar(&self) -> ScalarVolume {
        ScalarVolume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Either payload type a `.svol` file can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Scalar(ScalarVolume),
    Binary(BinaryVolume),
}

impl Volume {
    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            Volume::Scalar(v) => v.dims(),
            Volume::Binary(v) => v.dims(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarVolume> {
        match self {
            Volume::Scalar(v) => Ok(v),
            Volume::Binary(_) => Err(Error::InvalidArgument(
                "expected an f32 scalar volume, found a u8 mask".into(),
            )),
        }
    }

    pub fn into_binary(self) -> Result<BinaryVolume> {
        match self {
            Volume::Binary(v) => Ok(v),
            Volume::Scalar(_) => Err(Error::InvalidArgument(
                "expected a u8 mask, found an f32 scalar volume".into(),
            )),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SvolHeader {
    dims: [usize; 3],
    spacing: [f64; 3],
    dtype: String,
    order: String,
}

const SVOL_ORDER: &str = "xyz-row-major";

/// Serializes a volume to the `.svol` wire format: one UTF-8 JSON header
/// line, a newline, then the raw little-endian payload (f32 per voxel for
/// scalar volumes, one 0/1 byte per voxel for masks).
pub fn volume_to_bytes(volume: &Volume) -> Vec<u8> {
    let (dims, spacing, dtype) = match volume {
        Volume::Scalar(v) => (v.dims(), v.spacing(), "f32"),
        Volume::Binary(v) => (v.dims(), v.spacing(), "u8"),
    };
    let header = SvolHeader {
        dims: [dims.0, dims.1, dims.2],
        spacing: [spacing.0, spacing.1, spacing.2],
        dtype: dtype.to_string(),
        order: SVOL_ORDER.to_string(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serialization cannot fail");
    bytes.push(b'\n');
    match volume {
        Volume::Scalar(v) => {
            bytes.reserve(v.data.len() * 4);
            for value in &v.data {
                bytes.extend_from_slice(&(*value as f32).to_le_bytes());
            }
        }
        Volume::Binary(v) => {
            bytes.extend(v.data.iter().map(|b| u8::from(*b)));
        }
    }
    bytes
}

/// Parses the `.svol` wire format. The inverse of [`volume_to_bytes`] up to
/// the documented f64 -> f32 narrowing on write; bytes -> volume -> bytes is
/// exact.
pub fn volume_from_bytes(bytes: &[u8]) -> Result<Volume> {
    let newline = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("missing newline after JSON header".into()))?;
    let header: SvolHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if header.order != SVOL_ORDER {
        return Err(Error::MalformedHeader(format!(
            "unsupported order {:?}, expected {SVOL_ORDER:?}",
            header.order
        )));
    }
    let dims = (header.dims[0], header.dims[1], header.dims[2]);
    let spacing = (header.spacing[0], header.spacing[1], header.spacing[2]);
    check_dims_spacing(dims, spacing).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let n = dims.0 * dims.1 * dims.2;
    let payload = &bytes[newline + 1..];
    match header.dtype.as_str() {
        "f32" => {
            if payload.len() != n * 4 {
                return Err(Error::LengthMismatch { expected: n * 4, actual: payload.len() });
            }
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            Ok(Volume::Scalar(ScalarVolume { dims, spacing, data }))
        }
        "u8" => {
            if payload.len() != n {
                return Err(Error::LengthMismatch { expected: n, actual: payload.len() });
            }
            let mut data = Vec::with_capacity(n);
            for (i, byte) in payload.iter().enumerate() {
                match byte {
                    0 => data.push(false),
                    1 => data.push(true),
                    other => {
                        return Err(Error::MalformedPayload(format!(
                            "u8 mask byte at voxel {i} must be 0 or 1, got {other}"
                        )))
                    }
                }
            }
            Ok(Volume::Binary(BinaryVolume { dims, spacing, data }))
        }
        other => Err(Error::MalformedHeader(format!(
            "unsupported dtype {other:?}, expected \"f32\" or \"u8\""
        ))),
    }
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    volume_from_bytes(&bytes)
}

pub fn write_volume(volume: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = volume_to_bytes(volume);
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
