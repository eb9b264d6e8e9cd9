//! Small planar predicates shared by validation and the kernel.

use super::{tessellate_segment, CurveSampling, Loop, Point2, ENDPOINT_TOLERANCE};

/// Polyline vertices of a loop without the repeated closing point.
pub fn loop_polyline(lp: &Loop, sampling: CurveSampling) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::new();
    for seg in &lp.segments {
        let pts = tessellate_segment(seg, sampling);
        let skip = usize::from(!out.is_empty());
        out.extend(pts.into_iter().skip(skip));
    }
    if lp.closed && out.len() > 1 && close(out[0], out[out.len() - 1]) {
        out.pop();
    }
    out
}

pub fn close(a: Point2, b: Point2) -> bool {
    (a[0] - b[0]).abs() <= ENDPOINT_TOLERANCE && (a[1] - b[1]).abs() <= ENDPOINT_TOLERANCE
}

pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// True when the open segments `ab` and `cd` cross at a single interior point,
/// or overlap collinearly.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let scale = [a, b, c, d]
        .iter()
        .flat_map(|p| p.iter())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let eps = 1e-12 * scale * scale;
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    // Collinear overlap of positive length.
    if d1.abs() <= eps && d2.abs() <= eps && d3.abs() <= eps && d4.abs() <= eps {
        let dir = [b[0] - a[0], b[1] - a[1]];
        let len2 = dir[0] * dir[0] + dir[1] * dir[1];
        if len2 <= 0.0 {
            return false;
        }
        let t = |p: Point2| ((p[0] - a[0]) * dir[0] + (p[1] - a[1]) * dir[1]) / len2;
        let (tc, td) = (t(c), t(d));
        let (lo, hi) = (tc.min(td), tc.max(td));
        return hi.min(1.0) - lo.max(0.0) > 1e-9;
    }
    false
}

/// Even-odd point-in-polygon test.
pub fn point_in_ring(p: Point2, ring: &[Point2]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// True when some pair of non-adjacent edges of the ring intersect.
pub fn ring_self_intersects(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 4 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// True when any edge of `r1` intersects any edge of `r2`.
pub fn rings_cross(r1: &[Point2], r2: &[Point2]) -> bool {
    let (n, m) = (r1.len(), r2.len());
    for i in 0..n {
        let (a, b) = (r1[i], r1[(i + 1) % n]);
        for j in 0..m {
            if segments_intersect(a, b, r2[j], r2[(j + 1) % m]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_and_touching_segments() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 1.0]));
        assert!(segments_intersect([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0]));
    }

    #[test]
    fn bow_tie_self_intersects() {
        let ring = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(ring_self_intersects(&ring));
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(!ring_self_intersects(&square));
        assert_eq!(signed_area(&square), 1.0);
        assert!(point_in_ring([0.5, 0.5], &square));
        assert!(!point_in_ring([1.5, 0.5], &square));
    }
}
