//! 4-connected component labeling.

use crate::grid::Raster;

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        // Slot 0 is the background label.
        DisjointSet { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let ra = self.find(a);
        let rb = self.find(b);
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Labels 4-connected `true` pixels as `1..=count` in row-major
/// first-encounter order; `false` pixels get 0.
pub fn label_components(mask: &Raster<bool>) -> (Raster<u32>, u32) {
    let ncols = mask.ncols();
    let nrows = mask.nrows();
    let mut labels = Raster::filled(ncols, nrows, 0u32);
    let mut sets = DisjointSet::new();

    for r in 0..nrows {
        for c in 0..ncols {
            if !*mask.get(r, c) {
                continue;
            }
            let west = if c > 0 { *labels.get(r, c - 1) } else { 0 };
            let south = if r > 0 { *labels.get(r - 1, c) } else { 0 };
            let l = match (west, south) {
                (0, 0) => sets.make(),
                (w, 0) => w,
                (0, s) => s,
                (w, s) if w == s => w,
                (w, s) => sets.union(w, s),
            };
            *labels.get_mut(r, c) = l;
        }
    }

    let mut remap = vec![0u32; sets.parent.len()];
    let mut count = 0u32;
    for l in labels.as_mut_slice() {
        if *l == 0 {
            continue;
        }
        let root = sets.find(*l) as usize;
        if remap[root] == 0 {
            count += 1;
            remap[root] = count;
        }
        *l = remap[root];
    }
    (labels, count)
}

/// Flat pixel indices of each component, indexed by `label - 1`, in row-major order.
pub fn component_pixels(labels: &Raster<u32>, count: u32) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); count as usize];
    for (i, &l) in labels.as_slice().iter().enumerate() {
        if l > 0 {
            out[l as usize - 1].push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> Raster<bool> {
        let nrows = rows.len();
        let ncols = rows[0].len();
        Raster::from_fn(ncols, nrows, |r, c| rows[r].as_bytes()[c] == b'.')
    }

    #[test]
    fn diagonal_does_not_connect() {
        let (l, n) = label_components(&mask(&[".#", "#."]));
        assert_eq!(n, 2);
        assert_eq!(l.as_slice(), &[1, 0, 0, 2]);
    }

    #[test]
    fn u_shape_merges_into_one() {
        let (l, n) = label_components(&mask(&[".#.", ".#.", "..."]));
        assert_eq!(n, 1);
        assert!(l.as_slice().iter().all(|&v| v <= 1));
    }

    #[test]
    fn first_encounter_order() {
        // Component touching row 0 col 2 comes after the one at col 0.
        let (l, n) = label_components(&mask(&[".#.", "##.", "..."]));
        assert_eq!(n, 2);
        assert_eq!(*l.get(0, 0), 1);
        assert_eq!(*l.get(0, 2), 2);
        assert_eq!(*l.get(2, 0), 2);
    }

    #[test]
    fn empty_mask() {
        let (_, n) = label_components(&mask(&["##", "##"]));
        assert_eq!(n, 0);
    }
}
