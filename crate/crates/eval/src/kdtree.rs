//! Static 3-d tree for nearest-neighbour queries.

pub type P3 = [f64; 3];

pub fn dist2(a: &P3, b: &P3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a [P3],
    /// Point indices in tree order; node `lo..hi` splits at its midpoint.
    order: Vec<usize>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [P3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(points, &mut order, 0);
        KdTree { points, order }
    }

    /// Squared distance from `q` to its nearest point; infinite when empty.
    pub fn nearest_dist2(&self, q: &P3) -> f64 {
        let mut best = f64::INFINITY;
        self.search(q, 0, self.order.len(), 0, &mut best);
        best
    }

    fn search(&self, q: &P3, lo: usize, hi: usize, depth: usize, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let p = &self.points[self.order[mid]];
        *best = best.min(dist2(q, p));
        let axis = depth % 3;
        let delta = q[axis] - p[axis];
        let (near, far) = if delta < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(q, near.0, near.1, depth + 1, best);
        if delta * delta <= *best {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(points: &[P3], idx: &mut [usize], depth: usize) {
    if idx.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
    let (left, right) = idx.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_linear_scan_with_duplicates() {
        let pts: Vec<P3> = (0..200)
            .map(|i| {
                let t = (i % 37) as f64;
                [t.sin() * 3.0, (t * 0.7).cos(), (i % 5) as f64]
            })
            .collect();
        let tree = KdTree::new(&pts);
        for q in [[0.0, 0.0, 0.0], [2.5, -1.0, 4.0], [10.0, 10.0, 10.0], pts[17]] {
            let brute = pts.iter().map(|p| dist2(&q, p)).fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest_dist2(&q), brute);
        }
        assert_eq!(KdTree::new(&[]).nearest_dist2(&[0.0; 3]), f64::INFINITY);
    }
}
