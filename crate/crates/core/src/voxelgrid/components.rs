use std::collections::VecDeque;

use super::{BinaryMask, Connectivity};
use crate::io::VolumeHeader;

/// Component labelling of a mask. Ids run 1..=K in order of each
/// component's first voxel in scan order; background is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub header: VolumeHeader,
    pub ids: Vec<u32>,
    /// `sizes[k - 1]` is the voxel count of component `k`.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn mask_of(&self, id: u32) -> BinaryMask {
        BinaryMask { header: self.header, bits: self.ids.iter().map(|&i| i == id).collect() }
    }

    /// Linear voxel indices per component, in scan order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (i, &id) in self.ids.iter().enumerate() {
            if id != 0 {
                out[id as usize - 1].push(i);
            }
        }
        out
    }
}

pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Components {
    let h = mask.header;
    let d = h.dims;
    let offsets = connectivity.offsets();
    let mut ids = vec![0u32; mask.bits.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.bits.len() {
        if !mask.bits[start] || ids[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let [x, y, z] = h.coords(i);
            for o in &offsets {
                let (nx, ny, nz) = (x as isize + o[0], y as isize + o[1], z as isize + o[2]);
                if nx < 0 || ny < 0 || nz < 0 {
                    continue;
                }
                let (nx, ny, nz) = (nx as usize, ny as usize, nz as usize);
                if nx >= d[0] || ny >= d[1] || nz >= d[2] {
                    continue;
                }
                let j = h.index(nx, ny, nz);
                if mask.bits[j] && ids[j] == 0 {
                    ids[j] = id;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    Components { header: h, ids, sizes }
}

/// Largest component; ties keep the lower id. Empty input gives an empty mask.
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let cc = connected_components(mask, connectivity);
    let mut best: Option<(usize, u32)> = None;
    for (k, &s) in cc.sizes.iter().enumerate() {
        if best.is_none_or(|(bs, _)| s > bs) {
            best = Some((s, k as u32 + 1));
        }
    }
    match best {
        Some((_, id)) => cc.mask_of(id),
        None => BinaryMask::empty(mask.dims(), mask.header.voxel_size_mm),
    }
}

/// Sets every background cavity (Face6 background component not touching
/// the grid border) to foreground.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let bg = connected_components(&mask.complement(), Connectivity::Face6);
    let d = mask.dims();
    let mut touches = vec![false; bg.count() + 1];
    for (i, &id) in bg.ids.iter().enumerate() {
        if id == 0 {
            continue;
        }
        let [x, y, z] = mask.header.coords(i);
        if x == 0 || y == 0 || z == 0 || x + 1 == d[0] || y + 1 == d[1] || z + 1 == d[2] {
            touches[id as usize] = true;
        }
    }
    BinaryMask {
        header: mask.header,
        bits: mask
            .bits
            .iter()
            .zip(&bg.ids)
            .map(|(&b, &id)| b || (id != 0 && !touches[id as usize]))
            .collect(),
    }
}
