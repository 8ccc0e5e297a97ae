//! Binary dilation, erosion and closure.
//!
//! A structuring element of radius `r` is the unit neighborhood of its
//! connectivity applied `r` times. Voxels outside the grid read as background.

use super::{BinaryMask, Connectivity, LabelVolume};
use crate::io::LabelTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement {
    pub radius_vox: usize,
    pub connectivity: Connectivity,
}

impl StructuringElement {
    pub fn new(radius_vox: usize, connectivity: Connectivity) -> Self {
        assert!(radius_vox >= 1, "structuring element radius must be >= 1");
        Self { radius_vox, connectivity }
    }

    /// Vertex26 radius 1 applied twice.
    pub fn brainmask_default() -> Self {
        Self::new(2, Connectivity::Vertex26)
    }
}

fn unit_step(mask: &BinaryMask, conn: Connectivity, dilate: bool) -> BinaryMask {
    if conn == Connectivity::Vertex26 {
        // the 3x3x3 cube is separable into three 1D passes
        let mut cur = mask.clone();
        for axis in 0..3 {
            cur = axis_pass(&cur, axis, dilate);
        }
        return cur;
    }
    let offsets = conn.offsets();
    let d = mask.dims();
    BinaryMask::from_fn(d, mask.header.voxel_size_mm, |x, y, z| {
        let centre = mask.get(x, y, z);
        if dilate == centre {
            return centre;
        }
        let hit = offsets.iter().any(|o| {
            mask.get_signed(x as isize + o[0], y as isize + o[1], z as isize + o[2]) == dilate
        });
        if hit {
            dilate
        } else {
            centre
        }
    })
}

fn axis_pass(mask: &BinaryMask, axis: usize, dilate: bool) -> BinaryMask {
    let d = mask.dims();
    BinaryMask::from_fn(d, mask.header.voxel_size_mm, |x, y, z| {
        let p = [x as isize, y as isize, z as isize];
        let mut acc = mask.get(x, y, z);
        for delta in [-1isize, 1] {
            let mut q = p;
            q[axis] += delta;
            let v = mask.get_signed(q[0], q[1], q[2]);
            acc = if dilate { acc || v } else { acc && v };
        }
        acc
    })
}

pub fn dilate(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    (0..se.radius_vox).fold(mask.clone(), |m, _| unit_step(&m, se.connectivity, true))
}

pub fn erode(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    (0..se.radius_vox).fold(mask.clone(), |m, _| unit_step(&m, se.connectivity, false))
}

/// Dilation followed by erosion on a grid padded by the element radius, so
/// the result always contains the input.
pub fn closure(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let padded = mask.padded(se.radius_vox);
    erode(&dilate(&padded, se), se).cropped(se.radius_vox)
}

/// Brain mask from a label volume in internal-id space: closure of all
/// nonbackground labels, then (optionally) one Face6 voxel layer around
/// cortical labels, except lateral orbitofrontal and pars orbitalis.
pub fn make_brainmask(
    labels: &LabelVolume,
    table: &LabelTable,
    pad_cortex: bool,
    se: StructuringElement,
) -> BinaryMask {
    let mut mask = closure(&labels.mask_of(|l| l != 0), se);
    if pad_cortex {
        let pad_source = labels.mask_of(|l| {
            l != 0
                && table.get(l).is_some_and(|e| e.is_cortical())
                && !table.is_padding_excluded(l)
        });
        let padded = dilate(&pad_source, StructuringElement::new(1, Connectivity::Face6));
        mask = mask.union(&padded);
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mask(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BinaryMask {
        BinaryMask::from_fn([n; 3], [1.0; 3], |_, _, _| rng.random_bool(p))
    }

    /// Brute force: dilation by the r-fold neighborhood = voxels within
    /// neighborhood distance r (L1 for Face6, L-inf for Vertex26, Edge18 via BFS).
    fn brute_dilate(m: &BinaryMask, se: StructuringElement) -> BinaryMask {
        let d = m.dims();
        let offs = se.connectivity.offsets();
        // reachable offsets within r steps
        let mut reach = std::collections::BTreeSet::from([[0isize; 3]]);
        for _ in 0..se.radius_vox {
            let cur: Vec<_> = reach.iter().copied().collect();
            for p in cur {
                for o in &offs {
                    reach.insert([p[0] + o[0], p[1] + o[1], p[2] + o[2]]);
                }
            }
        }
        BinaryMask::from_fn(d, [1.0; 3], |x, y, z| {
            reach.iter().any(|o| m.get_signed(x as isize - o[0], y as isize - o[1], z as isize - o[2]))
        })
    }

    #[test]
    fn dilation_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for conn in [Connectivity::Face6, Connectivity::Edge18, Connectivity::Vertex26] {
            for r in 1..=2 {
                let m = random_mask(&mut rng, 7, 0.05);
                let se = StructuringElement::new(r, conn);
                assert_eq!(dilate(&m, se), brute_dilate(&m, se), "{conn:?} r={r}");
            }
        }
    }

    #[test]
    fn solid_cube_is_closed() {
        let m = BinaryMask::from_fn([5; 3], [1.0; 3], |x, y, z| {
            (1..4).contains(&x) && (1..4).contains(&y) && (1..4).contains(&z)
        });
        let se = StructuringElement::new(1, Connectivity::Face6);
        assert_eq!(closure(&m, se), m);
    }

    #[test]
    fn closure_fills_cube_centre() {
        let cube = BinaryMask::from_fn([5; 3], [1.0; 3], |x, y, z| {
            (1..4).contains(&x) && (1..4).contains(&y) && (1..4).contains(&z)
        });
        let mut holed = cube.clone();
        holed.set(2, 2, 2, false);
        for conn in [Connectivity::Face6, Connectivity::Vertex26] {
            let c = closure(&holed, StructuringElement::new(1, conn));
            // brute-force oracle: erode(brute_dilate) on a padded grid
            let se = StructuringElement::new(1, conn);
            let p = holed.padded(1);
            let oracle = erode(&brute_dilate(&p, se), se).cropped(1);
            assert_eq!(c, oracle);
            assert_eq!(c, cube, "{conn:?}");
        }
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::empty([4; 3], [1.0; 3]);
        let se = StructuringElement::brainmask_default();
        assert!(closure(&m, se).is_empty());
        assert!(dilate(&m, se).is_empty());
    }

    #[test]
    fn erosion_dilation_duality_on_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for conn in [Connectivity::Face6, Connectivity::Edge18, Connectivity::Vertex26] {
            let m = random_mask(&mut rng, 8, 0.6);
            let se = StructuringElement::new(1, conn);
            let padded = m.padded(2);
            let lhs = erode(&padded, se);
            let rhs = dilate(&padded.complement(), se).complement();
            // compare away from the grid border where outside-is-background differs
            for z in 1..11 {
                for y in 1..11 {
                    for x in 1..11 {
                        assert_eq!(lhs.get(x, y, z), rhs.get(x, y, z));
                    }
                }
            }
        }
    }

    #[test]
    fn closure_extensive_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let se = StructuringElement::new(1, Connectivity::Face6);
        for _ in 0..200 {
            let m = random_mask(&mut rng, 8, 0.3);
            let c = closure(&m, se);
            assert!(c.contains(&m));
            assert_eq!(closure(&c, se), c);
        }
    }

    #[test]
    fn brainmask_padding_rules() {
        let table = LabelTable::dkt();
        let se = StructuringElement::brainmask_default();

        let mut sub = LabelVolume::zeros([9; 3], [1.0; 3]);
        for z in 3..6 {
            for y in 3..6 {
                for x in 3..5 {
                    sub.set(x, y, z, 6);
                }
            }
        }
        let m = make_brainmask(&sub, &table, true, se);
        assert_eq!(m, closure(&sub.mask_of(|l| l != 0), se));

        let mut single = LabelVolume::zeros([9; 3], [1.0; 3]);
        single.set(4, 4, 4, 59);
        let m = make_brainmask(&single, &table, true, se);
        assert!(m.get(4, 4, 4));
        for (x, y, z) in [(3, 4, 4), (5, 4, 4), (4, 3, 4), (4, 5, 4), (4, 4, 3), (4, 4, 5)] {
            assert!(m.get(x, y, z));
        }
        assert_eq!(m.count(), 7);

        single.set(4, 4, 4, 50);
        let m = make_brainmask(&single, &table, true, se);
        assert_eq!(m.count(), 1);
    }
}
