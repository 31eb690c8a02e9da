use crate::error::{Error, Result};

use super::{Minutia, MinutiaKind};

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // smaller root wins so group ids stay deterministic
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

fn centroid(members: &[Minutia]) -> (f64, f64) {
    let n = members.len() as f64;
    let sx: f64 = members.iter().map(|m| m.x).sum();
    let sy: f64 = members.iter().map(|m| m.y).sum();
    (sx / n, sy / n)
}

/// Merges minutiae connected by chains of pairwise distances `≤ rm`.
///
/// Each group becomes one minutia at the centroid of its members, with the
/// orientation of the member closest to that centroid (ties: lowest
/// `(y, x)`) and kind bifurcation if any member is one. Because centroids
/// can land within `rm` of each other, grouping is repeated on the merged
/// positions until all pairwise distances exceed `rm`. Output is sorted by
/// `(y, x, kind)`.
pub fn merge_close(ms: &[Minutia], rm: f64) -> Result<Vec<Minutia>> {
    if !(rm >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "merge radius must be >= 0, got {rm}"
        )));
    }
    let mut groups: Vec<Vec<Minutia>> = ms.iter().map(|&m| vec![m]).collect();
    loop {
        let reps: Vec<(f64, f64)> = groups.iter().map(|g| centroid(g)).collect();
        let mut ds = DisjointSet::new(groups.len());
        let mut merged_any = false;
        for i in 0..reps.len() {
            for j in (i + 1)..reps.len() {
                let d = (reps[i].0 - reps[j].0).hypot(reps[i].1 - reps[j].1);
                if d <= rm {
                    merged_any |= ds.union(i, j);
                }
            }
        }
        if !merged_any {
            break;
        }
        let mut next: Vec<Vec<Minutia>> = Vec::new();
        let mut slot = vec![usize::MAX; groups.len()];
        for (i, g) in groups.into_iter().enumerate() {
            let root = ds.find(i);
            if slot[root] == usize::MAX {
                slot[root] = next.len();
                next.push(Vec::new());
            }
            next[slot[root]].extend(g);
        }
        groups = next;
    }

    let mut out: Vec<Minutia> = groups
        .iter()
        .map(|g| {
            let (cx, cy) = centroid(g);
            let nearest = g
                .iter()
                .min_by(|a, b| {
                    let da = (a.x - cx).hypot(a.y - cy);
                    let db = (b.x - cx).hypot(b.y - cy);
                    da.total_cmp(&db)
                        .then_with(|| a.y.total_cmp(&b.y))
                        .then_with(|| a.x.total_cmp(&b.x))
                })
                .expect("groups are non-empty");
            let kind = if g.iter().any(|m| m.kind == MinutiaKind::Bifurcation) {
                MinutiaKind::Bifurcation
            } else {
                MinutiaKind::Ending
            };
            Minutia::new(cx, cy, nearest.theta, kind)
        })
        .collect();
    out.sort_by(|a, b| a.order(b));
    Ok(out)
}
