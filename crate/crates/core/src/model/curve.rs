use super::{CurveKind, CurveSegment, Point2};
use std::f64::consts::TAU;

/// Sampling density for curved sketch primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveSampling {
    /// Segments for a full circle; arcs get a proportional share.
    pub circle_segments: usize,
    pub spline_samples_per_span: usize,
}

impl Default for CurveSampling {
    fn default() -> Self {
        CurveSampling {
            circle_segments: 64,
            spline_samples_per_span: 16,
        }
    }
}

/// Polyline approximation of a segment, start and end included.
///
/// A circle yields its vertices once around, counter-clockwise, starting at
/// angle 0 and without repeating the first point.
pub fn tessellate_segment(seg: &CurveSegment, sampling: CurveSampling) -> Vec<Point2> {
    let pts = &seg.control_points;
    match seg.kind {
        CurveKind::Line => pts.clone(),
        CurveKind::Circle => {
            let (Some(c), Some(r)) = (pts.first(), seg.radius) else {
                return Vec::new();
            };
            let n = sampling.circle_segments.max(3);
            (0..n)
                .map(|i| {
                    let a = TAU * i as f64 / n as f64;
                    [c[0] + r * a.cos(), c[1] + r * a.sin()]
                })
                .collect()
        }
        CurveKind::ThreePointArc => {
            if pts.len() != 3 {
                return pts.clone();
            }
            arc_points(pts[0], pts[1], pts[2], sampling.circle_segments)
        }
        CurveKind::Spline => {
            if pts.len() < 3 {
                return pts.clone();
            }
            catmull_rom(pts, sampling.spline_samples_per_span.max(2))
        }
    }
}

/// Circle through three points, or `None` when they are (nearly) collinear.
pub(crate) fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<(Point2, f64)> {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    let scale = (dist(a, b) * dist(b, c) * dist(a, c)).max(1e-300);
    if d.abs() < 1e-12 * scale.cbrt() {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let center = [ux, uy];
    Some((center, dist(center, a)))
}

/// Signed sweep (radians) of the arc from `a` through `m` to `b` around `center`.
pub(crate) fn arc_sweep(center: Point2, a: Point2, m: Point2, b: Point2) -> f64 {
    let ang = |p: Point2| (p[1] - center[1]).atan2(p[0] - center[0]);
    let (ta, tm, tb) = (ang(a), ang(m), ang(b));
    let ccw = (tb - ta).rem_euclid(TAU);
    let mid = (tm - ta).rem_euclid(TAU);
    if mid < ccw {
        ccw
    } else {
        -(TAU - ccw)
    }
}

fn arc_points(a: Point2, m: Point2, b: Point2, circle_segments: usize) -> Vec<Point2> {
    let Some((center, r)) = circumcircle(a, m, b) else {
        return vec![a, b];
    };
    let sweep = arc_sweep(center, a, m, b);
    let n = ((circle_segments.max(3) as f64 * sweep.abs() / TAU).ceil() as usize).max(2);
    let start = (a[1] - center[1]).atan2(a[0] - center[0]);
    let mut out = Vec::with_capacity(n + 1);
    out.push(a);
    for i in 1..n {
        let t = start + sweep * i as f64 / n as f64;
        out.push([center[0] + r * t.cos(), center[1] + r * t.sin()]);
    }
    out.push(b);
    out
}

fn dist(a: Point2, b: Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn lerp_knot(p: Point2, q: Point2, ta: f64, tb: f64, t: f64) -> Point2 {
    let w = if (tb - ta).abs() < 1e-300 {
        0.5
    } else {
        (t - ta) / (tb - ta)
    };
    [p[0] + (q[0] - p[0]) * w, p[1] + (q[1] - p[1]) * w]
}

/// Centripetal Catmull-Rom interpolation through `pts` (Barry-Goldman form).
/// End tangents come from reflected phantom points.
fn catmull_rom(pts: &[Point2], per_span: usize) -> Vec<Point2> {
    let n = pts.len();
    let reflect = |p: Point2, q: Point2| [2.0 * p[0] - q[0], 2.0 * p[1] - q[1]];
    let first = reflect(pts[0], pts[1]);
    let last = reflect(pts[n - 1], pts[n - 2]);
    let get = |i: isize| -> Point2 {
        if i < 0 {
            first
        } else if i as usize >= n {
            last
        } else {
            pts[i as usize]
        }
    };
    let knot = |a: Point2, b: Point2| dist(a, b).sqrt().max(1e-12);
    let mut out = vec![pts[0]];
    for span in 0..n - 1 {
        let i = span as isize;
        let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        let t0 = 0.0;
        let t1 = t0 + knot(p0, p1);
        let t2 = t1 + knot(p1, p2);
        let t3 = t2 + knot(p2, p3);
        for j in 1..per_span {
            let t = t1 + (t2 - t1) * j as f64 / per_span as f64;
            let a1 = lerp_knot(p0, p1, t0, t1, t);
            let a2 = lerp_knot(p1, p2, t1, t2, t);
            let a3 = lerp_knot(p2, p3, t2, t3, t);
            let b1 = lerp_knot(a1, a2, t0, t2, t);
            let b2 = lerp_knot(a2, a3, t1, t3, t);
            out.push(lerp_knot(b1, b2, t1, t2, t));
        }
        out.push(p2);
    }
    out
}
