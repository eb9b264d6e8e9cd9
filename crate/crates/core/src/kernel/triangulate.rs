//! Ear clipping for simple polygons with holes.

use super::V2;

fn orient(a: V2, b: V2, c: V2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn in_triangle(p: V2, a: V2, b: V2, c: V2, eps: f64) -> bool {
    orient(a, b, p) >= -eps && orient(b, c, p) >= -eps && orient(c, a, p) >= -eps
}

/// Triangulates `outer` (counter-clockwise) with `holes` (clockwise).
///
/// Returned indices address the concatenation `outer ++ holes[0] ++ holes[1] ...`,
/// and every triangle is counter-clockwise.
pub fn triangulate(outer: &[V2], holes: &[Vec<V2>]) -> Vec<[usize; 3]> {
    let mut pts: Vec<V2> = outer.to_vec();
    let mut hole_ranges = Vec::new();
    for h in holes {
        hole_ranges.push((pts.len(), h.len()));
        pts.extend_from_slice(h);
    }
    let (lo, hi) = pts.iter().fold(
        (V2::repeat(f64::INFINITY), V2::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let diag = (hi - lo).norm().max(1e-300);
    let eps = 1e-12 * diag * diag;

    let mut poly: Vec<usize> = (0..outer.len()).collect();
    // Bridge holes in order of decreasing max x.
    let mut order: Vec<usize> = (0..hole_ranges.len()).collect();
    let hole_max = |k: usize| {
        let (s, n) = hole_ranges[k];
        (s..s + n)
            .max_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x).then(pts[b].y.total_cmp(&pts[a].y)))
            .unwrap()
    };
    order.sort_by(|&a, &b| pts[hole_max(b)].x.total_cmp(&pts[hole_max(a)].x));
    for k in order {
        let (s, n) = hole_ranges[k];
        if n < 3 {
            continue;
        }
        let m = hole_max(k);
        let bridge = find_bridge(&pts, &poly, pts[m], eps);
        let mut spliced = Vec::with_capacity(poly.len() + n + 2);
        spliced.extend_from_slice(&poly[..=bridge]);
        for j in 0..=n {
            spliced.push(s + (m - s + j) % n);
        }
        spliced.push(poly[bridge]);
        spliced.extend_from_slice(&poly[bridge + 1..]);
        poly = spliced;
    }
    clip_ears(&pts, poly, eps)
}

/// Position in `poly` of a vertex visible from the hole vertex `m`.
fn find_bridge(pts: &[V2], poly: &[usize], m: V2, eps: f64) -> usize {
    let n = poly.len();
    let mut best: Option<(f64, usize)> = None;
    for i in 0..n {
        let (a, b) = (pts[poly[i]], pts[poly[(i + 1) % n]]);
        // Nearest edge crossing the ray to +x; it runs upward because the
        // region lies on its left.
        if a.y <= m.y && b.y >= m.y && a.y != b.y {
            let x = a.x + (m.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x >= m.x - eps && best.is_none_or(|(bx, _)| x < bx) {
                let pick = if a.y == m.y && a.x == x {
                    i
                } else if b.y == m.y && b.x == x {
                    (i + 1) % n
                } else if a.x >= b.x {
                    i
                } else {
                    (i + 1) % n
                };
                best = Some((x, pick));
            }
        }
    }
    let Some((ix, mut pick)) = best else {
        return (0..n)
            .min_by(|&a, &b| (pts[poly[a]] - m).norm().total_cmp(&(pts[poly[b]] - m).norm()))
            .unwrap_or(0);
    };
    let i_pt = V2::new(ix, m.y);
    let p = pts[poly[pick]];
    if (p - i_pt).norm() > eps.sqrt() {
        // Reflex vertices inside triangle (m, i, p) may block the view.
        let (ta, tb, tc) = if p.y < m.y { (m, p, i_pt) } else { (m, i_pt, p) };
        let mut best_angle = f64::INFINITY;
        let mut best_dist = f64::INFINITY;
        for j in 0..n {
            let v = pts[poly[j]];
            if j == pick || v.x < m.x {
                continue;
            }
            let prev = pts[poly[(j + n - 1) % n]];
            let next = pts[poly[(j + 1) % n]];
            let reflex = orient(prev, v, next) <= 0.0;
            if reflex && in_triangle(v, ta, tb, tc, eps) {
                let d = v - m;
                let angle = (d.y / d.norm().max(1e-300)).abs();
                let dist = d.norm();
                if angle < best_angle || (angle == best_angle && dist < best_dist) {
                    best_angle = angle;
                    best_dist = dist;
                    pick = j;
                }
            }
        }
    }
    // A repeated position (earlier bridge) must be the copy whose wedge contains m.
    let target = pts[poly[pick]];
    let copies: Vec<usize> = (0..n).filter(|&j| pts[poly[j]] == target).collect();
    if copies.len() > 1 {
        for &j in &copies {
            let prev = pts[poly[(j + n - 1) % n]];
            let next = pts[poly[(j + 1) % n]];
            if in_wedge(prev, target, next, m) {
                return j;
            }
        }
    }
    pick
}

fn in_wedge(prev: V2, c: V2, next: V2, p: V2) -> bool {
    let convex = orient(prev, c, next) > 0.0;
    let l = orient(prev, c, p) > 0.0;
    let r = orient(c, next, p) > 0.0;
    if convex {
        l && r
    } else {
        l || r
    }
}

fn clip_ears(pts: &[V2], mut poly: Vec<usize>, eps: f64) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    while poly.len() > 3 {
        let n = poly.len();
        let mut clipped = None;
        for i in 0..n {
            if is_ear(pts, &poly, i, eps, false) {
                clipped = Some(i);
                break;
            }
        }
        if clipped.is_none() {
            // Collinear vertices only: accept a zero-area ear.
            clipped = (0..n).find(|&i| is_ear(pts, &poly, i, eps, true));
        }
        let i = clipped.unwrap_or_else(|| {
            (0..n)
                .max_by(|&a, &b| corner(pts, &poly, a).total_cmp(&corner(pts, &poly, b)))
                .unwrap()
        });
        let prev = poly[(i + n - 1) % n];
        let next = poly[(i + 1) % n];
        out.push([prev, poly[i], next]);
        poly.remove(i);
    }
    if poly.len() == 3 {
        out.push([poly[0], poly[1], poly[2]]);
    }
    out
}

fn corner(pts: &[V2], poly: &[usize], i: usize) -> f64 {
    let n = poly.len();
    orient(pts[poly[(i + n - 1) % n]], pts[poly[i]], pts[poly[(i + 1) % n]])
}

fn is_ear(pts: &[V2], poly: &[usize], i: usize, eps: f64, allow_flat: bool) -> bool {
    let n = poly.len();
    let (ia, ib, ic) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
    let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
    let o = orient(a, b, c);
    if allow_flat {
        if o.abs() > eps {
            return false;
        }
    } else if o <= eps {
        return false;
    }
    for (j, &iv) in poly.iter().enumerate() {
        if j == i || j == (i + n - 1) % n || j == (i + 1) % n {
            continue;
        }
        let p = pts[iv];
        if p == a || p == b || p == c {
            continue;
        }
        if allow_flat {
            // Flat ears must not swallow a vertex lying on the segment.
            let d = c - a;
            let t = (p - a).dot(&d) / d.norm_squared().max(1e-300);
            if orient(a, c, p).abs() <= eps && t > 0.0 && t < 1.0 {
                return false;
            }
        } else if in_triangle(p, a, b, c, eps) {
            return false;
        }
    }
    true
}
