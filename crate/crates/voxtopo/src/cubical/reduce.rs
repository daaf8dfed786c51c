//! Persistence pair extraction.
//!
//! Dimension 0 comes from a union-find sweep over voxels in filtration
//! order with the elder rule: when a voxel's entry merges two components,
//! the younger one (later birth) dies there. Dimensions 1 and 2 come from
//! GF(2) boundary-matrix reduction processed top dimension first (the
//! twist): cube columns pair squares with dimension-2 classes, and every
//! square paired there is cleared from the next pass, so the remaining
//! square columns pair edges with dimension-1 classes. Columns are kept as
//! lazy max-heaps of filtration ranks; entries appearing an even number of
//! times cancel on pop.

use std::collections::BinaryHeap;

use super::complex::{CellId, FilteredComplex, NONE};
use super::Bar;
use crate::error::Result;
use crate::volume::ScalarVolume;

pub(crate) fn persistence_pairs(vol: &ScalarVolume) -> Result<Vec<Bar>> {
    let cx = FilteredComplex::build(vol)?;
    let mut bars = Vec::new();
    dim0_union_find(vol, &mut bars);

    let mut cleared = vec![false; cx.num_cells];
    reduce_dimension(&cx, 3, 2, &mut cleared, &mut bars);
    reduce_dimension(&cx, 2, 1, &mut cleared, &mut bars);
    Ok(bars)
}

/// Elder-rule union-find over voxels. Voxels enter in descending value
/// order (ties by ascending index); each entering voxel links to its
/// already-present 26-neighbors. A merge of two components kills the one
/// with the later birth, at the entering voxel.
fn dim0_union_find(vol: &ScalarVolume, bars: &mut Vec<Bar>) {
    let (nx, ny, nz) = vol.dims();
    let data = vol.data();
    let n = data.len();

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        data[b as usize].total_cmp(&data[a as usize]).then(a.cmp(&b))
    });

    let mut parent: Vec<u32> = vec![NONE; n]; // NONE marks a voxel not yet entered
    let mut birth: Vec<u32> = vec![0; n]; // birth voxel, valid at roots

    fn find(parent: &mut [u32], v: u32) -> u32 {
        let mut root = v;
        while parent[root as usize] != root {
            root = parent[root as usize];
        }
        let mut cur = v;
        while parent[cur as usize] != root {
            let next = parent[cur as usize];
            parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    // Earlier in filtration order: higher value, ties to the smaller index.
    let enters_before = |a: u32, b: u32| -> bool {
        let (va, vb) = (data[a as usize], data[b as usize]);
        va > vb || (va == vb && a < b)
    };

    for &v in &order {
        parent[v as usize] = v;
        birth[v as usize] = v;
        let (ix, iy, iz) = (
            v as usize % nx,
            (v as usize / nx) % ny,
            v as usize / (nx * ny),
        );
        for dz in -1i64..=1 {
            let jz = iz as i64 + dz;
            if jz < 0 || jz >= nz as i64 {
                continue;
            }
            for dy in -1i64..=1 {
                let jy = iy as i64 + dy;
                if jy < 0 || jy >= ny as i64 {
                    continue;
                }
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let jx = ix as i64 + dx;
                    if jx < 0 || jx >= nx as i64 {
                        continue;
                    }
                    let u = (jx as usize + nx * (jy as usize + ny * jz as usize)) as u32;
                    if parent[u as usize] == NONE || !enters_before(u, v) {
                        continue;
                    }
                    let ru = find(&mut parent, u);
                    let rv = find(&mut parent, v);
                    if ru == rv {
                        continue;
                    }
                    let (bu, bv) = (birth[ru as usize], birth[rv as usize]);
                    let (elder, younger) = if enters_before(bu, bv) { (bu, bv) } else { (bv, bu) };
                    // Union: keep both trees, record the elder birth.
                    parent[rv as usize] = ru;
                    birth[ru as usize] = elder;
                    let death = data[v as usize];
                    let b = data[younger as usize];
                    if b > death {
                        bars.push(Bar {
                            dim: 0,
                            birth: b,
                            death,
                            birth_voxel: younger as usize,
                            death_voxel: Some(v as usize),
                        });
                    }
                }
            }
        }
    }

    // The surviving component never dies; its death is pinned at 0.
    let root = find(&mut parent, order[0]);
    let w = birth[root as usize];
    bars.push(Bar {
        dim: 0,
        birth: data[w as usize],
        death: 0.0,
        birth_voxel: w as usize,
        death_voxel: None,
    });
}

/// Pops the maximal rank of a GF(2) column heap, cancelling even
/// multiplicities.
#[inline]
fn pop_pivot(heap: &mut BinaryHeap<u32>) -> Option<u32> {
    while let Some(top) = heap.pop() {
        if heap.peek() == Some(&top) {
            heap.pop();
            continue;
        }
        return Some(top);
    }
    None
}

/// Reduces the columns of one dimension, emitting persistence bars of
/// dimension `bar_dim` = d - 1. Columns paired as births by the previous
/// (higher-dimensional) pass are skipped via `cleared`; squares paired
/// here are marked cleared for the next pass.
fn reduce_dimension(
    cx: &FilteredComplex,
    d: u8,
    bar_dim: usize,
    cleared: &mut [bool],
    bars: &mut Vec<Bar>,
) {
    // pair_with[p] = filtration position of the column whose low is p;
    // reduced[p] = that column's entries below the low, sorted descending.
    let mut pair_with: Vec<u32> = vec![NONE; cx.num_cells];
    let mut reduced: Vec<Box<[u32]>> = vec![Box::default(); cx.num_cells];
    let mut faces: Vec<CellId> = Vec::with_capacity(6);
    let mut working: BinaryHeap<u32> = BinaryHeap::with_capacity(64);

    for pos in 0..cx.num_cells as u32 {
        let cell = cx.order[pos as usize];
        if cx.dim_of[cell as usize] != d || cleared[pos as usize] {
            continue;
        }
        working.clear();
        cx.boundary(cell, &mut faces);
        for f in &faces {
            working.push(cx.rank[*f as usize]);
        }
        loop {
            match pop_pivot(&mut working) {
                None => {
                    // Zero column: this cell creates a class one dimension up.
                    // With clearing from the pass above, cube columns are the
                    // only place this can happen.
                    debug_assert_eq!(d, 3, "cleared square columns must all pair an edge");
                    break;
                }
                Some(pivot) => {
                    let other = pair_with[pivot as usize];
                    if other != NONE {
                        // XOR in the stored column; its low cancels the pop.
                        working.extend(reduced[pivot as usize].iter().copied());
                        continue;
                    }
                    pair_with[pivot as usize] = pos;
                    let mut rest = Vec::with_capacity(working.len());
                    while let Some(e) = pop_pivot(&mut working) {
                        rest.push(e);
                    }
                    reduced[pivot as usize] = rest.into_boxed_slice();
                    if d == 3 {
                        cleared[pivot as usize] = true;
                    }
                    let birth_cell = cx.order[pivot as usize];
                    let birth = cx.value[birth_cell as usize];
                    let death = cx.value[cell as usize];
                    debug_assert!(birth >= death, "sub-level pairing inverted");
                    if birth > death {
                        bars.push(Bar {
                            dim: bar_dim,
                            birth,
                            death,
                            birth_voxel: cx.voxel[birth_cell as usize] as usize,
                            death_voxel: Some(cx.voxel[cell as usize] as usize),
                        });
                    }
                    break;
                }
            }
        }
    }
}
