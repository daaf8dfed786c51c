//! Randomized invariant checks across the public API. Complements the
//! example-pinned unit tests inside each module: here nothing is compared
//! against precomputed numbers, only against properties that must hold for
//! every input, with independent oracles where counting is involved.

use proptest::prelude::*;
use voxtopo::cubical::{compute_barcode, Bar};
use voxtopo::cylinder::{grow_and_threshold, rasterize_tube, Path3D};
use voxtopo::loss::{topo_loss, topo_loss_gradient, BettiTarget};
use voxtopo::metrics::{asd, dice, hd, hd95, paired_t_test};
use voxtopo::volume::{volume_from_bytes, volume_to_bytes, BinaryVolume, ScalarVolume, Volume};
use voxtopo_testutil::betti_oracle;

fn dims3(max: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (1..=max, 1..=max, 1..=max)
}

/// Probability volume with continuous values (ties unlikely).
fn scalar_volume(max_dim: usize) -> impl Strategy<Value = ScalarVolume> {
    dims3(max_dim).prop_flat_map(|d| {
        proptest::collection::vec(0.0..=1.0f64, d.0 * d.1 * d.2)
            .prop_map(move |data| ScalarVolume::new(d, (1.0, 1.0, 1.0), data).unwrap())
    })
}

/// Probability volume drawn from a 5-value palette, so plateaus and ties
/// are the norm rather than the exception.
fn quantized_volume(max_dim: usize) -> impl Strategy<Value = ScalarVolume> {
    dims3(max_dim).prop_flat_map(|d| {
        proptest::collection::vec(0..=4usize, d.0 * d.1 * d.2).prop_map(move |levels| {
            let data = levels.into_iter().map(|l| l as f64 / 4.0).collect();
            ScalarVolume::new(d, (1.0, 1.0, 1.0), data).unwrap()
        })
    })
}

fn binary_volume(max_dim: usize) -> impl Strategy<Value = BinaryVolume> {
    dims3(max_dim).prop_flat_map(|d| {
        proptest::collection::vec(any::<bool>(), d.0 * d.1 * d.2)
            .prop_map(move |data| BinaryVolume::new(d, (1.0, 1.0, 1.0), data).unwrap())
    })
}

/// Distinct thresholds occurring in the volume, plus 0 and 1.
fn probe_thresholds(vol: &ScalarVolume) -> Vec<f64> {
    let mut ps: Vec<f64> = vol.data().to_vec();
    ps.push(0.0);
    ps.push(1.0);
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    ps
}

/// The barcode ordering required within each dimension.
fn bar_order(a: &Bar, b: &Bar) -> std::cmp::Ordering {
    b.persistence()
        .total_cmp(&a.persistence())
        .then(b.birth.total_cmp(&a.birth))
        .then(a.birth_voxel.cmp(&b.birth_voxel))
}

fn check_barcode_structure(vol: &ScalarVolume) {
    let bc = compute_barcode(vol).unwrap();
    let essentials: Vec<&Bar> = bc.bars().iter().filter(|b| b.is_essential()).collect();
    assert_eq!(essentials.len(), 1);
    assert_eq!(essentials[0].dim, 0);

    for bar in bc.bars() {
        assert!(bar.dim <= 2);
        assert!(bar.persistence() > 0.0);
        assert!(bar.birth >= bar.death);
        assert_eq!(bar.birth, vol.data()[bar.birth_voxel]);
        match bar.death_voxel {
            Some(dv) => assert_eq!(bar.death, vol.data()[dv]),
            None => assert_eq!(bar.death, 0.0),
        }
    }
    for dim in 0..3 {
        let in_dim: Vec<&Bar> = bc.bars_in_dim(dim).collect();
        for w in in_dim.windows(2) {
            assert_ne!(bar_order(w[0], w[1]), std::cmp::Ordering::Greater);
        }
    }
    // Full determinism, not just equal bar multisets.
    let again = compute_barcode(vol).unwrap();
    assert_eq!(bc.bars(), again.bars());
}

fn check_betti_against_oracle(vol: &ScalarVolume) {
    let bc = compute_barcode(vol).unwrap();
    for p in probe_thresholds(vol) {
        let expected = betti_oracle(vol.data(), vol.dims(), p);
        assert_eq!(bc.betti_numbers(p), expected, "p = {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn barcode_structure_holds(vol in scalar_volume(5)) {
        check_barcode_structure(&vol);
    }

    #[test]
    fn barcode_structure_holds_with_ties(vol in quantized_volume(4)) {
        check_barcode_structure(&vol);
    }

    #[test]
    fn betti_numbers_match_counting_oracles(vol in scalar_volume(4)) {
        check_betti_against_oracle(&vol);
    }

    #[test]
    fn betti_numbers_match_counting_oracles_with_ties(vol in quantized_volume(4)) {
        check_betti_against_oracle(&vol);
    }

    #[test]
    fn betti_curve_is_pointwise_betti_numbers(vol in scalar_volume(4)) {
        let bc = compute_barcode(&vol).unwrap();
        let ps = probe_thresholds(&vol);
        for dim in 0..3 {
            let curve = bc.betti_curve(dim, &ps).unwrap();
            for (p, c) in ps.iter().zip(&curve) {
                let (b0, b1, b2) = bc.betti_numbers(*p);
                prop_assert_eq!(*c, [b0, b1, b2][dim]);
            }
        }
    }

    #[test]
    fn threshold_masks_shrink_as_p_grows(
        vol in scalar_volume(5),
        p1 in 0.0..=1.0f64,
        p2 in 0.0..=1.0f64,
    ) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let loose = vol.threshold(lo);
        let tight = vol.threshold(hi);
        for (t, l) in tight.data().iter().zip(loose.data()) {
            prop_assert!(!t || *l);
        }
    }

    #[test]
    fn downsample_stays_within_value_range(vol in scalar_volume(6), factor in 1..=3usize) {
        let down = vol.downsample(factor).unwrap();
        let lo = vol.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vol.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in down.data() {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
        let (sx, sy, sz) = vol.spacing();
        let f = factor as f64;
        prop_assert_eq!(down.spacing(), (sx * f, sy * f, sz * f));
    }

    #[test]
    fn loss_total_sums_per_dim_and_respects_bounds(
        vol in scalar_volume(4),
        b0 in 0..=2usize,
        b1 in 0..=2usize,
        b2 in 0..=2usize,
    ) {
        let bc = compute_barcode(&vol).unwrap();
        let target = BettiTarget::new(b0, b1, b2);
        let loss = topo_loss(&bc, target);
        prop_assert_eq!(loss.total, loss.per_dim[0] + loss.per_dim[1] + loss.per_dim[2]);
        for dim in 0..3 {
            let bars = bc.bars_in_dim(dim).count();
            let desired = [b0, b1, b2][dim];
            prop_assert!(loss.per_dim[dim] >= 0.0);
            // Kept and missing bars contribute at most 1 each, surplus bars
            // at most persistence^2 <= 1.
            prop_assert!(loss.per_dim[dim] <= (bars.max(desired)) as f64 + 1e-12);
        }
    }

    #[test]
    fn loss_gradient_lives_on_critical_voxels(
        vol in scalar_volume(4),
        b0 in 0..=2usize,
        b1 in 0..=2usize,
        b2 in 0..=2usize,
    ) {
        let bc = compute_barcode(&vol).unwrap();
        let g = topo_loss_gradient(&bc, BettiTarget::new(b0, b1, b2), vol.dims(), vol.spacing())
            .unwrap();
        let mut critical = vec![false; vol.num_voxels()];
        for bar in bc.bars() {
            critical[bar.birth_voxel] = true;
            if let Some(dv) = bar.death_voxel {
                critical[dv] = true;
            }
        }
        for (i, gv) in g.data().iter().enumerate() {
            if *gv != 0.0 {
                prop_assert!(critical[i]);
            }
        }
    }

    #[test]
    fn svol_serialization_round_trips(vol in binary_volume(5), scalar in scalar_volume(5)) {
        let b = Volume::Binary(vol);
        prop_assert_eq!(&volume_from_bytes(&volume_to_bytes(&b)).unwrap(), &b);
        // Scalar payloads are f32 on disk; write once to land on exactly
        // representable values, then the round trip must be the identity.
        let narrowed = volume_from_bytes(&volume_to_bytes(&Volume::Scalar(scalar))).unwrap();
        let bytes = volume_to_bytes(&narrowed);
        prop_assert_eq!(&volume_from_bytes(&bytes).unwrap(), &narrowed);
    }
}

fn interior_path(points: Vec<[f64; 3]>) -> Option<Path3D> {
    Path3D::new(points, false).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tube_masks_grow_with_radius(
        points in proptest::collection::vec(
            [1.0..7.0f64, 1.0..7.0f64, 1.0..7.0f64].prop_map(|[x, y, z]| [x, y, z]),
            2..4,
        ),
        r1 in 0.3..2.0f64,
        dr in 0.0..2.0f64,
    ) {
        let Some(path) = interior_path(points) else { return Ok(()) };
        let dims = (8, 8, 8);
        let spacing = (1.0, 1.0, 1.0);
        let small = rasterize_tube(&path, r1, dims, spacing).unwrap();
        let large = rasterize_tube(&path, r1 + dr, dims, spacing).unwrap();
        for (s, l) in small.data().iter().zip(large.data()) {
            prop_assert!(!s || *l);
        }
    }

    #[test]
    fn grown_region_is_inside_the_margin_tube(
        points in proptest::collection::vec(
            [1.0..7.0f64, 1.0..7.0f64, 1.0..7.0f64].prop_map(|[x, y, z]| [x, y, z]),
            2..4,
        ),
        margin in 0.5..3.0f64,
        values in proptest::collection::vec(-600.0..300.0f64, 512),
    ) {
        let Some(path) = interior_path(points) else { return Ok(()) };
        let dims = (8, 8, 8);
        let spacing = (1.0, 1.0, 1.0);
        let intensity = ScalarVolume::new(dims, spacing, values).unwrap();
        let grown = grow_and_threshold(&path, margin, &intensity, -80.0, 200.0).unwrap();
        let tube = rasterize_tube(&path, margin, dims, spacing).unwrap();
        for (g, t) in grown.data().iter().zip(tube.data()) {
            prop_assert!(!g || *t);
        }
        for (i, g) in grown.data().iter().enumerate() {
            if *g {
                prop_assert!((-80.0..=200.0).contains(&intensity.data()[i]));
            }
        }
    }

    #[test]
    fn surface_metrics_are_symmetric(
        (a, b) in dims3(5).prop_flat_map(|d| {
            let n = d.0 * d.1 * d.2;
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(da, db)| {
                    (
                        BinaryVolume::new(d, (1.0, 1.0, 1.0), da).unwrap(),
                        BinaryVolume::new(d, (1.0, 1.0, 1.0), db).unwrap(),
                    )
                })
        }),
    ) {
        prop_assert_eq!(dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
        prop_assume!(a.count_true() > 0 && b.count_true() > 0);
        let hd_ab = hd(&a, &b).unwrap();
        prop_assert_eq!(hd_ab, hd(&b, &a).unwrap());
        let hd95_ab = hd95(&a, &b).unwrap();
        prop_assert_eq!(hd95_ab, hd95(&b, &a).unwrap());
        let asd_ab = asd(&a, &b).unwrap();
        prop_assert_eq!(asd_ab, asd(&b, &a).unwrap());
        prop_assert!(hd95_ab <= hd_ab + 1e-12);
        prop_assert!(asd_ab <= hd_ab + 1e-12);
    }

    #[test]
    fn paired_t_test_is_antisymmetric(
        pairs in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..20),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let Ok(fwd) = paired_t_test(&x, &y) else { return Ok(()) };
        let rev = paired_t_test(&y, &x).unwrap();
        prop_assert_eq!(fwd.df, x.len() - 1);
        prop_assert_eq!(fwd.t, -rev.t);
        prop_assert!((fwd.p_value - rev.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&fwd.p_value));
    }
}
