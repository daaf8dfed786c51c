//! Betti-number loss over persistence barcodes and its voxel subgradient.
//!
//! For dimension k with desired count t_k, bars are taken longest-first and
//! scored by their persistence q = birth - death:
//!
//! ```text
//! L_k = sum over ranks i <= t_k of (1 - q_i^2)  +  sum over ranks i > t_k of q_i^2
//! ```
//!
//! A desired bar that does not exist counts as persistence 0 and contributes
//! 1, so the loss also penalizes absent structure. The total is L0 + L1 + L2
//! and reaches 0 exactly when each dimension has precisely t_k bars, all of
//! persistence 1.
//!
//! The subgradient routes through the critical voxels recorded in the
//! barcode: a kept bar (rank <= t_k) wants longer persistence, so its birth
//! voxel gets -2q and its death voxel +2q; a surplus bar wants to shrink,
//! with the signs flipped. Ranks are recomputed from persistence order at
//! every evaluation, and at ties the deterministic tie-breaking of
//! [`compute_barcode`](crate::cubical::compute_barcode) picks one subgradient
//! of the piecewise-smooth loss. To score only long-lived structure, filter
//! the barcode with [`Barcode::with_min_persistence`] first.

use std::fmt;
use std::str::FromStr;

use crate::cubical::Barcode;
use crate::error::{Error, Result};
use crate::volume::ScalarVolume;

/// Desired Betti numbers (components, loops, cavities). The default (1, 0, 0)
/// describes a single solid tube: one piece, no loops, no voids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BettiTarget {
    pub b0: usize,
    pub b1: usize,
    pub b2: usize,
}

impl BettiTarget {
    pub fn new(b0: usize, b1: usize, b2: usize) -> Self {
        BettiTarget { b0, b1, b2 }
    }

    pub fn desired(&self, dim: usize) -> usize {
        [self.b0, self.b1, self.b2][dim]
    }
}

impl Default for BettiTarget {
    fn default() -> Self {
        BettiTarget { b0: 1, b1: 0, b2: 0 }
    }
}

impl fmt::Display for BettiTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.b0, self.b1, self.b2)
    }
}

impl FromStr for BettiTarget {
    type Err = Error;

    /// Parses `b0,b1,b2`, e.g. `1,0,0`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "betti target must be three comma-separated counts, got {s:?}"
            )));
        }
        let parse = |part: &str| {
            part.trim().parse::<usize>().map_err(|_| {
                Error::InvalidArgument(format!("betti target component {part:?} is not a count"))
            })
        };
        Ok(BettiTarget { b0: parse(parts[0])?, b1: parse(parts[1])?, b2: parse(parts[2])? })
    }
}

/// Loss total together with the per-dimension summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub per_dim: [f64; 3],
}

/// Evaluates the loss of a barcode against the target counts.
pub fn topo_loss(bc: &Barcode, target: BettiTarget) -> LossValue {
    let mut per_dim = [0.0; 3];
    for dim in 0..3 {
        let desired = target.desired(dim);
        let mut count = 0;
        for (i, bar) in bc.bars_in_dim(dim).enumerate() {
            let q = bar.persistence();
            per_dim[dim] += if i < desired { 1.0 - q * q } else { q * q };
            count = i + 1;
        }
        // Desired bars beyond those present have persistence 0.
        per_dim[dim] += desired.saturating_sub(count) as f64;
    }
    LossValue { total: per_dim[0] + per_dim[1] + per_dim[2], per_dim }
}

/// Gradient of [`topo_loss`] with respect to the voxel values the barcode
/// was computed from, as a volume over the same grid.
///
/// Contributions accumulate when one voxel is critical for several bars;
/// the essential bar's death is pinned at 0 and gets none. Voxels critical
/// for no bar have zero gradient.
pub fn topo_loss_gradient(
    bc: &Barcode,
    target: BettiTarget,
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
) -> Result<ScalarVolume> {
    if dims.0 * dims.1 * dims.2 != bc.num_voxels() {
        return Err(Error::InvalidArgument(format!(
            "gradient grid {}x{}x{} does not match the barcode's {} voxels",
            dims.0,
            dims.1,
            dims.2,
            bc.num_voxels()
        )));
    }
    let mut grad = vec![0.0; bc.num_voxels()];
    for dim in 0..3 {
        let desired = target.desired(dim);
        for (i, bar) in bc.bars_in_dim(dim).enumerate() {
            let q = bar.persistence();
            let sign = if i < desired { -1.0 } else { 1.0 };
            grad[bar.birth_voxel] += sign * 2.0 * q;
            if let Some(dv) = bar.death_voxel {
                grad[dv] -= sign * 2.0 * q;
            }
        }
    }
    ScalarVolume::new(dims, spacing, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::{compute_barcode, Bar};
    use voxtopo_testutil::{central_difference, relative_error};

    fn bar(dim: usize, birth: f64, death: f64, bv: usize, dv: Option<usize>) -> Bar {
        Bar { dim, birth, death, birth_voxel: bv, death_voxel: dv }
    }

    fn random_volume(dims: (usize, usize, usize), seed: u64) -> ScalarVolume {
        ScalarVolume::new(dims, (1.0, 1.0, 1.0), voxtopo_testutil::random_volume(dims, seed))
            .unwrap()
    }

    #[test]
    fn single_full_length_bar_is_the_minimizer() {
        let bc = Barcode::from_bars(vec![bar(0, 1.0, 0.0, 0, None)], 8);
        let loss = topo_loss(&bc, BettiTarget::default());
        assert_eq!(loss.total, 0.0);
        assert_eq!(loss.per_dim, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn surplus_component_costs_its_squared_persistence() {
        let bc = Barcode::from_bars(
            vec![bar(0, 1.0, 0.0, 0, None), bar(0, 0.6, 0.2, 2, Some(3))],
            8,
        );
        let loss = topo_loss(&bc, BettiTarget::default());
        assert!((loss.total - 0.16).abs() < 1e-15);
        assert!((loss.per_dim[0] - 0.16).abs() < 1e-15);
    }

    #[test]
    fn missing_desired_bar_costs_one() {
        let bc = Barcode::from_bars(vec![], 8);
        let loss = topo_loss(&bc, BettiTarget::default());
        assert_eq!(loss.total, 1.0);
        assert_eq!(loss.per_dim, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn surplus_loop_costs_its_squared_persistence() {
        let bc = Barcode::from_bars(
            vec![bar(0, 1.0, 0.0, 0, None), bar(1, 0.5, 0.3, 2, Some(3))],
            8,
        );
        let loss = topo_loss(&bc, BettiTarget::default());
        assert!((loss.total - 0.04).abs() < 1e-15);
        assert_eq!(loss.per_dim[0], 0.0);
        assert!((loss.per_dim[1] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn total_is_the_sum_over_dimensions() {
        let bc = Barcode::from_bars(
            vec![
                bar(0, 0.9, 0.0, 0, None),
                bar(1, 0.5, 0.3, 1, Some(2)),
                bar(2, 0.4, 0.1, 3, Some(4)),
            ],
            8,
        );
        let loss = topo_loss(&bc, BettiTarget::new(1, 1, 0));
        assert_eq!(loss.total, loss.per_dim[0] + loss.per_dim[1] + loss.per_dim[2]);
    }

    #[test]
    fn gradient_of_kept_essential_bar() {
        let bc = Barcode::from_bars(vec![bar(0, 0.9, 0.0, 1, None)], 3);
        let g = topo_loss_gradient(&bc, BettiTarget::default(), (1, 1, 3), (1.0, 1.0, 1.0))
            .unwrap();
        assert_eq!(g.data(), &[0.0, -1.8, 0.0]);
    }

    #[test]
    fn gradient_of_surplus_bar_pushes_its_endpoints_together() {
        let bc = Barcode::from_bars(
            vec![bar(0, 1.0, 0.0, 0, None), bar(0, 0.6, 0.2, 2, Some(3))],
            4,
        );
        let g = topo_loss_gradient(&bc, BettiTarget::default(), (1, 1, 4), (1.0, 1.0, 1.0))
            .unwrap();
        assert_eq!(g.data()[0], -2.0);
        assert!((g.data()[2] - 0.8).abs() < 1e-15);
        assert!((g.data()[3] + 0.8).abs() < 1e-15);
        assert_eq!(g.data()[1], 0.0);
    }

    #[test]
    fn gradient_accumulates_at_shared_critical_voxels() {
        // Three peaks that are pairwise non-adjacent (corner adjacency
        // included) around one saddle adjacent to all of them, so both
        // finite components die at the same voxel.
        let (nx, ny) = (3, 3);
        let mut data = vec![0.0; 9];
        let at = |x: usize, y: usize| x + nx * y;
        data[at(0, 0)] = 0.9;
        data[at(2, 0)] = 0.8;
        data[at(1, 2)] = 0.7;
        data[at(1, 1)] = 0.5;
        let vol = ScalarVolume::new((nx, ny, 1), (1.0, 1.0, 1.0), data.clone()).unwrap();
        let bc = compute_barcode(&vol).unwrap();
        assert_eq!(bc.bars().len(), 3);

        let g = topo_loss_gradient(&bc, BettiTarget::default(), vol.dims(), vol.spacing())
            .unwrap();

        // Kept essential bar is pushed up at its birth and has no death voxel.
        assert_eq!(g.data()[at(0, 0)], -2.0 * 0.9);
        // Surplus bars (persistences 0.3 and 0.2): births pushed down, and
        // the shared saddle collects the push from both deaths.
        assert!((g.data()[at(2, 0)] - 2.0 * (0.8 - 0.5)).abs() < 1e-15);
        assert!((g.data()[at(1, 2)] - 2.0 * (0.7 - 0.5)).abs() < 1e-15);
        let expected_saddle = -2.0 * ((0.8 - 0.5) + (0.7 - 0.5));
        assert!((g.data()[at(1, 1)] - expected_saddle).abs() < 1e-14);
        for (i, &gv) in g.data().iter().enumerate() {
            if ![at(0, 0), at(2, 0), at(1, 2), at(1, 1)].contains(&i) {
                assert_eq!(gv, 0.0);
            }
        }
    }

    #[test]
    fn gradient_grid_must_match_the_barcode() {
        let bc = Barcode::from_bars(vec![bar(0, 0.9, 0.0, 0, None)], 3);
        let err = topo_loss_gradient(&bc, BettiTarget::default(), (2, 2, 2), (1.0, 1.0, 1.0));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gradient_support_is_the_critical_voxel_set() {
        let vol = random_volume((5, 5, 5), 17);
        let bc = compute_barcode(&vol).unwrap();
        let g = topo_loss_gradient(&bc, BettiTarget::new(2, 1, 1), vol.dims(), vol.spacing())
            .unwrap();
        let mut critical = vec![false; vol.num_voxels()];
        for b in bc.bars() {
            critical[b.birth_voxel] = true;
            if let Some(dv) = b.death_voxel {
                critical[dv] = true;
            }
        }
        for (i, &gv) in g.data().iter().enumerate() {
            if gv != 0.0 {
                assert!(critical[i], "gradient at non-critical voxel {i}");
            }
        }
    }

    #[test]
    fn axis_flip_leaves_the_loss_unchanged() {
        let vol = random_volume((5, 4, 3), 23);
        let (nx, ny, nz) = vol.dims();
        let mut flipped = vec![0.0; vol.num_voxels()];
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    flipped[ix + nx * (iy + ny * (nz - 1 - iz))] =
                        vol.data()[ix + nx * (iy + ny * iz)];
                }
            }
        }
        let flipped = ScalarVolume::new(vol.dims(), vol.spacing(), flipped).unwrap();
        for target in [BettiTarget::default(), BettiTarget::new(2, 1, 1)] {
            let a = topo_loss(&compute_barcode(&vol).unwrap(), target);
            let b = topo_loss(&compute_barcode(&flipped).unwrap(), target);
            assert_eq!(a.total, b.total);
        }
    }

    #[test]
    fn gradient_matches_central_differences_at_generic_points() {
        for (seed, target) in [(3u64, BettiTarget::default()), (8, BettiTarget::new(2, 1, 1))] {
            let vol = random_volume((6, 6, 6), seed);
            let dims = vol.dims();
            let spacing = vol.spacing();
            let bc = compute_barcode(&vol).unwrap();
            let grad = topo_loss_gradient(&bc, target, dims, spacing).unwrap();

            let mut f = |values: &[f64]| {
                let v = ScalarVolume::new(dims, spacing, values.to_vec()).unwrap();
                topo_loss(&compute_barcode(&v).unwrap(), target).total
            };
            let h = 1e-6;
            for i in 0..vol.num_voxels() {
                let fd = central_difference(&mut f, vol.data(), i, h);
                let err = relative_error(fd, grad.data()[i]);
                assert!(
                    err < 1e-4,
                    "seed {seed} voxel {i}: fd {fd} vs grad {} (rel {err})",
                    grad.data()[i]
                );
            }
        }
    }

    #[test]
    fn betti_target_parses_and_prints() {
        let t: BettiTarget = "1,0,0".parse().unwrap();
        assert_eq!(t, BettiTarget::default());
        let t: BettiTarget = " 2, 1, 3 ".parse().unwrap();
        assert_eq!(t, BettiTarget::new(2, 1, 3));
        assert_eq!(t.to_string(), "2,1,3");
        assert!("1,0".parse::<BettiTarget>().is_err());
        assert!("1,0,x".parse::<BettiTarget>().is_err());
        assert!("1,0,-1".parse::<BettiTarget>().is_err());
    }
}
