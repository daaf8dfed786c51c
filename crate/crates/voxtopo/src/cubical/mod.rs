//! Persistent homology of probability volumes over super-level-set
//! filtrations.
//!
//! The filtration is S(p) = {voxels with value >= p} for p sweeping down
//! from 1 to 0, so S(1) nests into S(p) nests into S(0). Each voxel
//! contributes its closed unit cube; a lower-dimensional cell (square,
//! edge, vertex) enters the complex the moment any voxel cube containing it
//! does. Under this top-cell convention the foreground is 26-connected and
//! its complement is 6-connected, which is what the component and cavity
//! oracles in the test suite count.
//!
//! Internally the barcode is computed as sub-level persistence of the
//! negated volume via boundary-matrix reduction over GF(2) with the
//! twist/clearing optimization; dimension-0 pairs come from a union-find
//! pass over voxels in descending value order. Bars are reported in the
//! probability scale, so birth >= death, and the single essential
//! component's death is fixed at 0.

mod complex;
mod reduce;

use crate::error::{Error, Result};
use crate::volume::ScalarVolume;

pub use complex::CellId;

/// One persistence bar. `birth` and `death` are volume values (birth >=
/// death); `birth_voxel` / `death_voxel` are linear voxel indices of the
/// voxels realizing them, so the endpoints always equal the volume value at
/// their critical voxel. The essential component has `death_voxel` None and
/// death 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
    pub birth_voxel: usize,
    pub death_voxel: Option<usize>,
}

impl Bar {
    pub fn persistence(&self) -> f64 {
        self.birth - self.death
    }

    pub fn is_essential(&self) -> bool {
        self.death_voxel.is_none()
    }
}

/// Persistence barcode of one volume. Bars are grouped by dimension and
/// sorted within each dimension by persistence descending, ties by birth
/// descending then birth voxel ascending. Zero-persistence bars are never
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Barcode {
    bars: Vec<Bar>,
    num_voxels: usize,
}

impl Barcode {
    pub(crate) fn from_bars(mut bars: Vec<Bar>, num_voxels: usize) -> Self {
        bars.retain(|b| b.birth > b.death);
        bars.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(b.persistence().total_cmp(&a.persistence()))
                .then(b.birth.total_cmp(&a.birth))
                .then(a.birth_voxel.cmp(&b.birth_voxel))
        });
        Barcode { bars, num_voxels }
    }

    /// All bars, dimension-major in the documented order.
    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn bars_in_dim(&self, dim: usize) -> impl Iterator<Item = &Bar> {
        self.bars.iter().filter(move |b| b.dim == dim)
    }

    /// Voxel count of the volume this barcode was computed from; voxel
    /// indices in bars are valid for that grid.
    pub fn num_voxels(&self) -> usize {
        self.num_voxels
    }

    /// Copy with every bar of persistence <= floor dropped. A floor of 0
    /// keeps everything (zero-persistence bars are already absent).
    pub fn with_min_persistence(&self, floor: f64) -> Barcode {
        Barcode {
            bars: self.bars.iter().filter(|b| b.persistence() > floor).cloned().collect(),
            num_voxels: self.num_voxels,
        }
    }

    /// Betti numbers of threshold(vol, p): bars with birth >= p > death.
    /// At p = 0 the super-level set is the full grid, which is one
    /// contractible block.
    pub fn betti_numbers(&self, p: f64) -> (usize, usize, usize) {
        if p == 0.0 {
            return (1, 0, 0);
        }
        let mut betti = [0usize; 3];
        for bar in &self.bars {
            if bar.birth >= p && p > bar.death {
                betti[bar.dim] += 1;
            }
        }
        (betti[0], betti[1], betti[2])
    }

    /// Betti number of one dimension tabulated over thresholds.
    pub fn betti_curve(&self, dim: usize, thresholds: &[f64]) -> Result<Vec<usize>> {
        if dim > 2 {
            return Err(Error::InvalidArgument(format!("dimension must be 0..=2, got {dim}")));
        }
        Ok(thresholds
            .iter()
            .map(|&p| {
                let (b0, b1, b2) = self.betti_numbers(p);
                [b0, b1, b2][dim]
            })
            .collect())
    }

    /// CSV with header `dim,birth,death,birth_voxel,death_voxel`; the
    /// death_voxel field is empty for the essential bar. Floats use
    /// shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death,birth_voxel,death_voxel\n");
        for bar in &self.bars {
            match bar.death_voxel {
                Some(dv) => out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    bar.dim, bar.birth, bar.death, bar.birth_voxel, dv
                )),
                None => out.push_str(&format!(
                    "{},{},{},{},\n",
                    bar.dim, bar.birth, bar.death, bar.birth_voxel
                )),
            }
        }
        out
    }
}

/// Computes the persistence barcode of a probability volume.
///
/// Errors if any value falls outside [0, 1]. Output is deterministic: ties
/// in the filtration are broken by cell dimension then grid position, and
/// critical voxels by smallest linear index, so equal volumes yield equal
/// barcodes, pairing included.
pub fn compute_barcode(vol: &ScalarVolume) -> Result<Barcode> {
    vol.validate_probability()?;
    let bars = reduce::persistence_pairs(vol)?;
    Ok(Barcode::from_bars(bars, vol.num_voxels()))
}
