//! Friends-of-friends grouping of marked pixels.

use std::borrow::Cow;
use std::cmp::Ordering;

use super::Pixel;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

fn canonical_order(a: &Pixel, b: &Pixel) -> Ordering {
    (a.t_bin, a.f_bin)
        .cmp(&(b.t_bin, b.f_bin))
        .then_with(|| a.intensity.total_cmp(&b.intensity))
        .then_with(|| a.snr.total_cmp(&b.snr))
}

/// Partitions `pixels` into friends-of-friends groups.
///
/// Two pixels are friends when they are at most `t_gap` time bins and at most
/// `f_gap` channels apart; groups are the transitive closure. Pixels inside a
/// group are in row-major order and groups are ordered by
/// `(min t_bin, min f_bin)`, ties going to the group with the earliest pixel,
/// so the output does not depend on the input order.
///
/// Cost is linear in the number of pixels for bounded neighbourhood
/// occupancy: pixels are bucketed by time bin and each one only searches the
/// `t_gap` preceding rows.
pub fn cluster_pixels(pixels: &[Pixel], t_gap: usize, f_gap: usize) -> Vec<Vec<Pixel>> {
    if pixels.is_empty() {
        return Vec::new();
    }
    // thresholded pixels arrive in row-major order already
    let sorted: Cow<[Pixel]> = if pixels.is_sorted_by(|a, b| canonical_order(a, b) != Ordering::Greater) {
        Cow::Borrowed(pixels)
    } else {
        let mut v = pixels.to_vec();
        v.sort_by(canonical_order);
        Cow::Owned(v)
    };

    // rows[r] = (t_bin, start, end) into `sorted`
    let mut rows: Vec<(usize, usize, usize)> = Vec::new();
    for (i, p) in sorted.iter().enumerate() {
        match rows.last_mut() {
            Some(row) if row.0 == p.t_bin => row.2 = i + 1,
            _ => rows.push((p.t_bin, i, i + 1)),
        }
    }

    let mut sets = UnionFind::new(sorted.len());
    for (r, &(t, start, end)) in rows.iter().enumerate() {
        for i in start..end {
            let f = sorted[i].f_bin;
            let lo = f.saturating_sub(f_gap);
            // same row: earlier pixels only
            let same = &sorted[start..i];
            let from = start + same.partition_point(|q| q.f_bin < lo);
            for j in from..i {
                sets.union(i, j);
            }
            // previous rows within the time gap
            for &(pt, ps, pe) in rows[..r].iter().rev() {
                if t - pt > t_gap {
                    break;
                }
                let row = &sorted[ps..pe];
                let a = ps + row.partition_point(|q| q.f_bin < lo);
                let b = ps + row.partition_point(|q| q.f_bin <= f + f_gap);
                for j in a..b {
                    sets.union(i, j);
                }
            }
        }
    }

    let mut group_of = vec![usize::MAX; sorted.len()];
    let mut sizes: Vec<usize> = Vec::new();
    // group key: (min t, min f, first pixel index)
    let mut keys: Vec<(usize, usize, usize)> = Vec::new();
    for (i, p) in sorted.iter().enumerate() {
        let root = sets.find(i);
        if group_of[root] == usize::MAX {
            group_of[root] = sizes.len();
            sizes.push(0);
            keys.push((p.t_bin, p.f_bin, i));
        }
        let g = group_of[root];
        group_of[i] = g;
        sizes[g] += 1;
        keys[g].1 = keys[g].1.min(p.f_bin);
    }
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_unstable_by_key(|&g| keys[g]);
    let mut rank = vec![0; order.len()];
    for (r, &g) in order.iter().enumerate() {
        rank[g] = r;
    }
    let mut groups: Vec<Vec<Pixel>> = order.iter().map(|&g| Vec::with_capacity(sizes[g])).collect();
    for (i, p) in sorted.iter().enumerate() {
        groups[rank[group_of[i]]].push(*p);
    }
    groups
}
