//! Test oracles, deliberately written with no code shared with the voxtopo
//! implementation paths they check. Everything here favors the dumbest
//! correct algorithm: flood fills, exhaustive cell counting, all-pairs
//! distance scans, and a reference t CDF from statrs.
//!
//! The crate is independent of voxtopo itself (volumes are plain slices
//! plus dims), so the oracles are usable from voxtopo's own unit tests
//! without type-identity headaches.

/// Number of 26-connected components of the mask (foreground connectivity).
pub fn count_components_26(mask: &[bool], dims: (usize, usize, usize)) -> usize {
    let (nx, ny, nz) = dims;
    assert_eq!(mask.len(), nx * ny * nz);
    let mut seen = vec![false; mask.len()];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            let (ix, iy, iz) = (v % nx, (v / nx) % ny, v / (nx * ny));
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (jx, jy, jz) = (ix as i64 + dx, iy as i64 + dy, iz as i64 + dz);
                        if jx < 0 || jy < 0 || jz < 0 {
                            continue;
                        }
                        let (jx, jy, jz) = (jx as usize, jy as usize, jz as usize);
                        if jx >= nx || jy >= ny || jz >= nz {
                            continue;
                        }
                        let j = jx + nx * (jy + ny * jz);
                        if mask[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
    }
    components
}

/// Number of 6-connected components of the complement of the mask that do
/// not touch the volume boundary. By duality this is the second Betti
/// number of the 26-connected foreground.
pub fn count_bounded_complement_components_6(mask: &[bool], dims: (usize, usize, usize)) -> usize {
    let (nx, ny, nz) = dims;
    assert_eq!(mask.len(), nx * ny * nz);
    let mut seen = vec![false; mask.len()];
    let mut bounded = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if mask[start] || seen[start] {
            continue;
        }
        let mut touches_boundary = false;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            let (ix, iy, iz) = (v % nx, (v / nx) % ny, v / (nx * ny));
            if ix == 0 || iy == 0 || iz == 0 || ix + 1 == nx || iy + 1 == ny || iz + 1 == nz {
                touches_boundary = true;
            }
            let neighbors = [
                (ix.wrapping_sub(1), iy, iz),
                (ix + 1, iy, iz),
                (ix, iy.wrapping_sub(1), iz),
                (ix, iy + 1, iz),
                (ix, iy, iz.wrapping_sub(1)),
                (ix, iy, iz + 1),
            ];
            for (jx, jy, jz) in neighbors {
                if jx >= nx || jy >= ny || jz >= nz {
                    continue;
                }
                let j = jx + nx * (jy + ny * jz);
                if !mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if !touches_boundary {
            bounded += 1;
        }
    }
    bounded
}

/// Euler characteristic of the super-level complex at p, counted directly:
/// vertices - edges + squares - cubes over the complex whose top cells are
/// the voxels with value >= p and whose lower cells are all their faces.
///
/// Cells are enumerated on the half-integer grid (2nx+1, 2ny+1, 2nz+1);
/// a cell is present exactly when at least one voxel incident to it is.
pub fn euler_characteristic(values: &[f64], dims: (usize, usize, usize), p: f64) -> i64 {
    let (nx, ny, nz) = dims;
    assert_eq!(values.len(), nx * ny * nz);
    let mut chi: i64 = 0;
    for c in 0..(2 * nz + 1) {
        for b in 0..(2 * ny + 1) {
            for a in 0..(2 * nx + 1) {
                let dim = (a % 2) + (b % 2) + (c % 2);
                let mut present = false;
                // Iterate the voxels whose closed unit cube contains this cell.
                let xs = incident_range(a, nx);
                let ys = incident_range(b, ny);
                let zs = incident_range(c, nz);
                'outer: for &iz in &zs {
                    for &iy in &ys {
                        for &ix in &xs {
                            if values[ix + nx * (iy + ny * iz)] >= p {
                                present = true;
                                break 'outer;
                            }
                        }
                    }
                }
                if present {
                    chi += if dim % 2 == 0 { 1 } else { -1 };
                }
            }
        }
    }
    chi
}

fn incident_range(a: usize, n: usize) -> Vec<usize> {
    if a % 2 == 1 {
        vec![(a - 1) / 2]
    } else {
        let mut out = Vec::with_capacity(2);
        if a >= 2 {
            out.push(a / 2 - 1);
        }
        if a / 2 < n {
            out.push(a / 2);
        }
        out
    }
}

/// Betti numbers of the thresholded volume computed entirely from the
/// flood-fill and cell-counting oracles above. beta1 comes from
/// beta0 - beta1 + beta2 = chi.
pub fn betti_oracle(values: &[f64], dims: (usize, usize, usize), p: f64) -> (usize, usize, usize) {
    let mask: Vec<bool> = values.iter().map(|&v| v >= p).collect();
    let b0 = count_components_26(&mask, dims);
    let b2 = count_bounded_complement_components_6(&mask, dims);
    let chi = euler_characteristic(values, dims, p);
    let b1 = b0 as i64 + b2 as i64 - chi;
    assert!(b1 >= 0, "oracle inconsistency: beta1 = {b1} at p = {p}");
    (b0, b1 as usize, b2)
}

/// Surface voxels: foreground voxels with at least one of their six face
/// neighbors background, where outside the grid counts as background.
pub fn surface_voxels_oracle(
    mask: &[bool],
    dims: (usize, usize, usize),
) -> Vec<(usize, usize, usize)> {
    let (nx, ny, nz) = dims;
    assert_eq!(mask.len(), nx * ny * nz);
    let get = |x: usize, y: usize, z: usize| mask[x + nx * (y + ny * z)];
    let mut out = Vec::new();
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                if !get(ix, iy, iz) {
                    continue;
                }
                let on_surface = [
                    (ix as i64 - 1, iy as i64, iz as i64),
                    (ix as i64 + 1, iy as i64, iz as i64),
                    (ix as i64, iy as i64 - 1, iz as i64),
                    (ix as i64, iy as i64 + 1, iz as i64),
                    (ix as i64, iy as i64, iz as i64 - 1),
                    (ix as i64, iy as i64, iz as i64 + 1),
                ]
                .into_iter()
                .any(|(jx, jy, jz)| {
                    jx < 0
                        || jy < 0
                        || jz < 0
                        || jx >= nx as i64
                        || jy >= ny as i64
                        || jz >= nz as i64
                        || !get(jx as usize, jy as usize, jz as usize)
                });
                if on_surface {
                    out.push((ix, iy, iz));
                }
            }
        }
    }
    out
}

/// All-pairs directed surface distances in millimeters: for every surface
/// voxel of `from`, the Euclidean distance to the nearest surface voxel of
/// `to`. O(n^2) by construction.
pub fn directed_surface_distances_oracle(
    from: &[bool],
    to: &[bool],
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
) -> Vec<f64> {
    let (sx, sy, sz) = spacing;
    let sa = surface_voxels_oracle(from, dims);
    let sb = surface_voxels_oracle(to, dims);
    assert!(!sa.is_empty() && !sb.is_empty(), "oracle needs nonempty surfaces");
    sa.iter()
        .map(|&(ax, ay, az)| {
            sb.iter()
                .map(|&(bx, by, bz)| {
                    let dx = (ax as f64 - bx as f64) * sx;
                    let dy = (ay as f64 - by as f64) * sy;
                    let dz = (az as f64 - bz as f64) * sz;
                    (dx * dx + dy * dy + dz * dz).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Reference two-sided p-value for a Student-t statistic, from statrs.
pub fn t_two_sided_p_reference(t: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Reference CDF for a Student-t statistic, from statrs.
pub fn t_cdf_reference(t: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    dist.cdf(t)
}

/// Central finite difference of a scalar function along one coordinate.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut hi = x.to_vec();
    let mut lo = x.to_vec();
    hi[i] += h;
    lo[i] -= h;
    (f(&hi) - f(&lo)) / (2.0 * h)
}

/// Central finite difference of a scalar function along a direction.
pub fn directional_difference(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    dir: &[f64],
    h: f64,
) -> f64 {
    assert_eq!(x.len(), dir.len());
    let hi: Vec<f64> = x.iter().zip(dir).map(|(v, d)| v + h * d).collect();
    let lo: Vec<f64> = x.iter().zip(dir).map(|(v, d)| v - h * d).collect();
    (f(&hi) - f(&lo)) / (2.0 * h)
}

/// Relative error with an absolute floor, for comparing derivatives.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-9 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Tiny deterministic generator for test inputs. Distinct from the
/// implementation's generator on purpose: xorshift64*, not splitmix.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_range(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Values in (lo, hi), all distinct: a shuffled evenly spaced ladder.
/// Distinctness keeps persistence pairings unambiguous.
pub fn distinct_value_volume(dims: (usize, usize, usize), lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let n = dims.0 * dims.1 * dims.2;
    let mut values: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 1.0) / (n as f64 + 1.0))
        .collect();
    let mut rng = TestRng::new(seed);
    for i in (1..n).rev() {
        values.swap(i, rng.next_range(i + 1));
    }
    values
}

/// Values drawn uniformly from [0, 1), possibly tied.
pub fn random_volume(dims: (usize, usize, usize), seed: u64) -> Vec<f64> {
    let n = dims.0 * dims.1 * dims.2;
    let mut rng = TestRng::new(seed);
    (0..n).map(|_| rng.next_f64()).collect()
}

/// Values quantized to a small set, guaranteeing many ties.
pub fn quantized_volume(dims: (usize, usize, usize), levels: usize, seed: u64) -> Vec<f64> {
    assert!(levels >= 2);
    let n = dims.0 * dims.1 * dims.2;
    let mut rng = TestRng::new(seed);
    (0..n)
        .map(|_| rng.next_range(levels) as f64 / (levels - 1) as f64)
        .collect()
}
