//! Sweeping regions along extrude or revolve paths, with refinements.

use super::csg::boolean;
use super::region::{offset_ring, point_in_ring, rings_cross, CornerCut, EdgeKey, Region};
use super::resolve::{locate, Side, Target};
use super::triangulate::triangulate;
use super::{FaceLabel, KernelError, LabeledMesh, TessellationConfig, V2, V3, MERGE_EPSILON};
use crate::model::{BooleanOp, CapType, RefinementKind, SsrTriplet, SweepKind};

/// Maps sketch points and a sweep parameter (distance or degrees) to world space.
#[derive(Debug, Clone)]
pub(crate) struct SweepPath {
    origin: V3,
    x: V3,
    y: V3,
    n: V3,
    axis: Option<(V3, V3, V2, V2)>,
    pub t0: f64,
    pub t1: f64,
    pub full: bool,
}

fn v3(p: [f64; 3]) -> V3 {
    V3::new(p[0], p[1], p[2])
}

impl SweepPath {
    pub fn new(t: &SsrTriplet) -> Result<SweepPath, KernelError> {
        let plane = &t.sketch.plane;
        let x = v3(plane.x_axis);
        let n = v3(plane.normal);
        let y = n.cross(&x);
        let origin = v3(plane.origin);
        let (t0, t1) = t.feature.extent.range();
        let mut axis = None;
        if t.feature.kind == SweepKind::Revolve {
            let a = t
                .feature
                .axis
                .as_ref()
                .ok_or_else(|| KernelError::InvalidAxis("revolve without axis".into()))?;
            let point = v3(a.point);
            let dir = v3(a.direction)
                .try_normalize(1e-12)
                .ok_or_else(|| KernelError::InvalidAxis("zero direction".into()))?;
            if dir.dot(&n).abs() > 1e-6 || (point - origin).dot(&n).abs() > 1e-6 {
                return Err(KernelError::InvalidAxis("axis is not in the sketch plane".into()));
            }
            let d = point - origin;
            let p2 = V2::new(d.dot(&x), d.dot(&y));
            let d2 = V2::new(dir.dot(&x), dir.dot(&y)).normalize();
            axis = Some((point, dir, p2, d2));
        }
        if !(t1 - t0 > 0.0) {
            return Err(KernelError::DegenerateProfile("sweep extent must be positive".into()));
        }
        let full = t.feature.is_full_revolution();
        Ok(SweepPath {
            origin,
            x,
            y,
            n,
            axis,
            t0,
            t1,
            full,
        })
    }

    pub fn is_revolve(&self) -> bool {
        self.axis.is_some()
    }

    pub fn place(&self, p: V2, t: f64) -> V3 {
        match self.axis {
            None => self.origin + self.x * p.x + self.y * p.y + self.n * t,
            Some((a, k, _, _)) => {
                let v = self.origin + self.x * p.x + self.y * p.y - a;
                let (s, c) = t.to_radians().sin_cos();
                a + v * c + k.cross(&v) * s + k * (k.dot(&v) * (1.0 - c))
            }
        }
    }

    /// Signed in-plane distance of a sketch point from the revolve axis.
    pub fn axis_distance(&self, p: V2) -> Option<f64> {
        self.axis.map(|(_, _, a2, d2)| {
            let w = p - a2;
            d2.x * w.y - d2.y * w.x
        })
    }

    /// Sweep parameters of the unrefined solid's stations.
    pub fn base_params(&self, cfg: &TessellationConfig) -> Vec<f64> {
        if !self.is_revolve() {
            return vec![self.t0, self.t1];
        }
        let total = self.t1 - self.t0;
        let segs = ((cfg.revolve_segments as f64) * total / 360.0).ceil().max(1.0) as usize;
        let count = if self.full { segs } else { segs + 1 };
        (0..count)
            .map(|k| self.t0 + total * k as f64 / segs as f64)
            .collect()
    }

    /// Converts an in-plane length to the sweep parameter near the region.
    fn length_to_param(&self, region: &Region, len: f64) -> Result<f64, KernelError> {
        if !self.is_revolve() {
            return Ok(len);
        }
        let pts = region.rings[0].positions();
        let c = pts.iter().fold(V2::zeros(), |s, p| s + p) / pts.len() as f64;
        let r = self.axis_distance(c).unwrap_or(0.0).abs();
        if r < 1e-12 {
            return Err(KernelError::RefinementTooLarge("profile centroid on the axis".into()));
        }
        Ok((len / r).to_degrees())
    }
}

/// One cross-section of a swept region: ring positions at parameter `t`.
pub(crate) struct Station {
    pub t: f64,
    pub rings: Vec<Vec<V2>>,
}

/// Builds the lateral surface between consecutive stations and, unless
/// `wrap` is set, the two caps.
pub(crate) fn loft(region: &Region, stations: &[Station], path: &SweepPath, wrap: bool, triplet: usize) -> LabeledMesh {
    let mut mesh = LabeledMesh::default();
    let count = stations.len();
    let pairs = if wrap { count } else { count - 1 };
    for s in 0..pairs {
        let (lo, hi) = (&stations[s], &stations[(s + 1) % count]);
        for (ri, ring) in region.rings.iter().enumerate() {
            let n = ring.verts.len();
            for i in 0..n {
                let j = (i + 1) % n;
                let a = path.place(lo.rings[ri][i], lo.t);
                let b = path.place(lo.rings[ri][j], lo.t);
                let c = path.place(hi.rings[ri][j], hi.t);
                let d = path.place(hi.rings[ri][i], hi.t);
                let label = FaceLabel::new(triplet, ring.verts[i].label.clone(), CapType::Swept);
                mesh.push_triangle(a, b, c, label.clone());
                mesh.push_triangle(a, c, d, label);
            }
        }
    }
    if !wrap {
        for (station, cap, flip) in [
            (&stations[0], CapType::Start, true),
            (&stations[count - 1], CapType::End, false),
        ] {
            let outer = &station.rings[0];
            let holes: Vec<Vec<V2>> = station.rings[1..].to_vec();
            let all: Vec<V2> = station.rings.iter().flatten().copied().collect();
            let label = FaceLabel::new(triplet, region.label.clone(), cap);
            for tri in triangulate(outer, &holes) {
                let [a, b, c] = tri.map(|k| path.place(all[k], station.t));
                if flip {
                    mesh.push_triangle(a, c, b, label.clone());
                } else {
                    mesh.push_triangle(a, b, c, label.clone());
                }
            }
        }
    }
    mesh
}

/// Welds a soup into an indexed mesh with positive orientation.
pub(crate) fn finish(mut mesh: LabeledMesh) -> LabeledMesh {
    mesh.weld(MERGE_EPSILON);
    if mesh.signed_volume() < 0.0 {
        mesh.flip();
    }
    mesh
}

#[derive(Debug, Clone, Copy)]
enum EdgeSel {
    All,
    Curve { lp: usize, seg: usize },
    /// A curve plus the corner cuts at both of its ends.
    Face { lp: usize, seg: usize, next: usize },
}

#[derive(Debug, Clone)]
struct RimOp {
    side: Side,
    sel: EdgeSel,
    /// (distance from the cap in sweep parameter, inset length), ascending.
    table: Vec<(f64, f64)>,
}

impl RimOp {
    fn new(side: Side, sel: EdgeSel, kind: RefinementKind, size: f64, span: f64, cfg: &TessellationConfig) -> RimOp {
        let table = match kind {
            RefinementKind::Fillet => {
                let slices = cfg.fillet_slices;
                let mut t: Vec<(f64, f64)> = (0..=slices)
                    .map(|j| {
                        let phi = std::f64::consts::FRAC_PI_2 * j as f64 / slices as f64;
                        (span * (1.0 - phi.sin()), size * (1.0 - phi.cos()))
                    })
                    .collect();
                t.reverse();
                t[0].0 = 0.0;
                t
            }
            _ => vec![(0.0, size), (span, 0.0)],
        };
        RimOp { side, sel, table }
    }

    fn span(&self) -> f64 {
        self.table.last().map(|p| p.0).unwrap_or(0.0)
    }

    fn inset_at(&self, u: f64) -> f64 {
        let t = &self.table;
        if u >= self.span() {
            return 0.0;
        }
        for w in t.windows(2) {
            let ((u0, d0), (u1, d1)) = (w[0], w[1]);
            if u <= u1 {
                if u1 - u0 <= 0.0 {
                    return d1.max(d0);
                }
                return d0 + (d1 - d0) * (u - u0) / (u1 - u0);
            }
        }
        0.0
    }

    fn selects(&self, edge: EdgeKey) -> bool {
        match (self.sel, edge) {
            (EdgeSel::All, _) => true,
            (EdgeSel::Curve { lp, seg }, EdgeKey::Segment { lp: l, seg: s }) => lp == l && seg == s,
            (EdgeSel::Face { lp, seg, .. }, EdgeKey::Segment { lp: l, seg: s }) => lp == l && seg == s,
            (EdgeSel::Face { lp, seg, next }, EdgeKey::Corner { lp: l, seg: s }) => lp == l && (s == seg || s == next),
            _ => false,
        }
    }
}

struct CornerOp {
    profile: usize,
    lp: usize,
    seg: usize,
    cut: CornerCut,
    label: String,
    /// Face expansion skips smooth joins instead of failing on them.
    optional: bool,
}

struct ShellOp {
    profile: usize,
    side: Side,
    thickness: f64,
}

/// Compiles one triplet into a watertight labeled mesh.
pub fn compile_triplet(t: &SsrTriplet, cfg: &TessellationConfig) -> Result<LabeledMesh, KernelError> {
    compile_indexed(t, 0, cfg)
}

pub(crate) fn build_regions(t: &SsrTriplet, path: &SweepPath, cfg: &TessellationConfig) -> Result<Vec<Region>, KernelError> {
    let regions = t
        .sketch
        .profiles
        .iter()
        .enumerate()
        .map(|(i, p)| Region::build(p, i, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    if regions.is_empty() {
        return Err(KernelError::DegenerateProfile("sketch has no profiles".into()));
    }
    if path.is_revolve() {
        for r in &regions {
            let pts = r.rings[0].positions();
            let scale = pts.iter().fold(1.0f64, |m, p| m.max(p.norm()));
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in &pts {
                let d = path.axis_distance(*p).unwrap_or(0.0);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            if lo < -1e-9 * scale && hi > 1e-9 * scale {
                return Err(KernelError::AxisCrossesProfile(r.label.clone()));
            }
        }
    }
    Ok(regions)
}

pub(crate) fn compile_indexed(t: &SsrTriplet, triplet: usize, cfg: &TessellationConfig) -> Result<LabeledMesh, KernelError> {
    cfg.check()?;
    let path = SweepPath::new(t)?;
    let mut regions = build_regions(t, &path, cfg)?;

    let mut corners: Vec<CornerOp> = Vec::new();
    let mut rims: Vec<Vec<RimOp>> = vec![Vec::new(); regions.len()];
    let mut shells: Vec<ShellOp> = Vec::new();
    for r in &t.refinements {
        if !(r.magnitude > 0.0) {
            return Err(KernelError::RefinementTooLarge(format!("non-positive magnitude {}", r.magnitude)));
        }
        for e in &r.entities {
            let loc = locate(e, t)?;
            let pi = loc.profile;
            let label = e.reference_id.clone();
            if r.kind == RefinementKind::Shell {
                match loc.target {
                    Target::Cap { side } => shells.push(ShellOp {
                        profile: pi,
                        side,
                        thickness: r.magnitude,
                    }),
                    _ => return Err(KernelError::UnsupportedShell(label)),
                }
                continue;
            }
            let cut = if r.kind == RefinementKind::Chamfer {
                CornerCut::Chamfer(r.magnitude)
            } else {
                CornerCut::Fillet(r.magnitude)
            };
            let span = path.length_to_param(&regions[pi], r.magnitude)?;
            match loc.target {
                Target::Point { lp, seg } => corners.push(CornerOp {
                    profile: pi,
                    lp,
                    seg,
                    cut,
                    label,
                    optional: false,
                }),
                Target::Rim { side, lp, seg } => {
                    rims[pi].push(RimOp::new(side, EdgeSel::Curve { lp, seg }, r.kind, r.magnitude, span, cfg))
                }
                Target::Cap { side } => rims[pi].push(RimOp::new(side, EdgeSel::All, r.kind, r.magnitude, span, cfg)),
                Target::LateralFace { lp, seg } => {
                    let lp_ref = &t.sketch.profiles[pi].loops[lp];
                    let next = (seg + 1) % lp_ref.segments.len();
                    if !lp_ref.is_circle() {
                        for s in [seg, next] {
                            corners.push(CornerOp {
                                profile: pi,
                                lp,
                                seg: s,
                                cut,
                                label: label.clone(),
                                optional: true,
                            });
                        }
                    }
                    if !path.full {
                        for side in [Side::Start, Side::End] {
                            rims[pi].push(RimOp::new(side, EdgeSel::Face { lp, seg, next }, r.kind, r.magnitude, span, cfg));
                        }
                    }
                }
            }
        }
    }

    for op in &corners {
        let region = &mut regions[op.profile];
        let Some((ri, vi)) = region.find_point(op.lp, op.seg) else {
            if op.optional {
                continue;
            }
            return Err(KernelError::UnresolvableEntity {
                reference: op.label.clone(),
                reason: "corner already consumed by an earlier refinement".into(),
            });
        };
        match region.cut_corner(ri, vi, op.cut, &op.label, cfg) {
            Err(KernelError::UnresolvableEntity { .. }) if op.optional => {}
            other => other?,
        }
    }

    let mut solids = Vec::new();
    for (pi, region) in regions.iter().enumerate() {
        let stations = if path.full {
            path.base_params(cfg)
                .into_iter()
                .map(|t| Station {
                    t,
                    rings: region.rings.iter().map(|r| r.positions()).collect(),
                })
                .collect()
        } else {
            rim_stations(region, &rims[pi], &path, cfg)?
        };
        let mut solid = finish(loft(region, &stations, &path, path.full, triplet));
        let removed: Vec<&ShellOp> = shells.iter().filter(|s| s.profile == pi).collect();
        if !removed.is_empty() {
            let cavity = cavity(region, &removed, &path, triplet)?;
            solid = boolean(&solid, BooleanOp::Cut, &cavity)?;
        }
        solids.push(solid);
    }
    let mut out = solids.remove(0);
    for s in solids {
        out = boolean(&out, BooleanOp::Union, &s)?;
    }
    let report = out.edge_report();
    if !report.is_watertight() {
        return Err(KernelError::NotWatertight(report));
    }
    Ok(out)
}

/// Stations for a capped sweep, inset near each cap by the rim refinements.
fn rim_stations(region: &Region, ops: &[RimOp], path: &SweepPath, cfg: &TessellationConfig) -> Result<Vec<Station>, KernelError> {
    let total = path.t1 - path.t0;
    let reach = |side: Side| {
        ops.iter()
            .filter(|o| o.side == side)
            .map(|o| o.span())
            .fold(0.0f64, f64::max)
    };
    if reach(Side::Start) + reach(Side::End) > total + 1e-9 {
        return Err(KernelError::RefinementTooLarge(format!(
            "rim refinements on {} overlap along the sweep",
            region.label
        )));
    }
    let mut params = path.base_params(cfg);
    for o in ops {
        params.extend(o.table.iter().map(|&(u, _)| match o.side {
            Side::Start => path.t0 + u,
            Side::End => path.t1 - u,
        }));
    }
    params.sort_by(f64::total_cmp);
    params.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let collapse = || KernelError::RefinementTooLarge(format!("rim inset collapses profile {}", region.label));
    let mut stations = Vec::with_capacity(params.len());
    for t in params {
        let mut rings = Vec::new();
        for ring in &region.rings {
            let insets: Vec<f64> = ring
                .verts
                .iter()
                .map(|v| {
                    ops.iter()
                        .filter(|o| o.selects(v.edge))
                        .map(|o| match o.side {
                            Side::Start => o.inset_at(t - path.t0),
                            Side::End => o.inset_at(path.t1 - t),
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            rings.push(offset_ring(&ring.positions(), &insets).ok_or_else(collapse)?);
        }
        check_holes(&rings).map_err(|_| collapse())?;
        stations.push(Station { t, rings });
    }
    Ok(stations)
}

fn signed(r: &[V2]) -> f64 {
    let n = r.len();
    (0..n).map(|i| r[i].x * r[(i + 1) % n].y - r[(i + 1) % n].x * r[i].y).sum::<f64>() * 0.5
}

fn check_holes(rings: &[Vec<V2>]) -> Result<(), ()> {
    for i in 0..rings.len() {
        for j in i + 1..rings.len() {
            if rings_cross(&rings[i], &rings[j]) {
                return Err(());
            }
        }
        if i > 0 && !point_in_ring(rings[i][0], &rings[0]) {
            return Err(());
        }
    }
    Ok(())
}

/// Solid removed by a shell: the inward offset profile swept through the
/// removed caps.
fn cavity(region: &Region, removed: &[&ShellOp], path: &SweepPath, triplet: usize) -> Result<LabeledMesh, KernelError> {
    let thickness = removed.iter().map(|s| s.thickness).fold(0.0, f64::max);
    let err = || KernelError::OffsetSelfIntersection(region.label.clone());
    let mut rings = Vec::new();
    for ring in &region.rings {
        let insets = vec![thickness; ring.verts.len()];
        rings.push(offset_ring(&ring.positions(), &insets).ok_or_else(err)?);
    }
    check_holes(&rings).map_err(|_| err())?;
    if signed(&rings[0]) <= 0.0 {
        return Err(err());
    }
    let (along, beyond) = if path.is_revolve() {
        let r_min = rings
            .iter()
            .flatten()
            .map(|p| path.axis_distance(*p).unwrap_or(0.0).abs())
            .fold(f64::INFINITY, f64::min);
        if thickness >= r_min {
            return Err(err());
        }
        let d = (thickness / r_min).asin().to_degrees();
        (d, d)
    } else {
        (thickness, thickness)
    };
    let start_removed = removed.iter().any(|s| s.side == Side::Start);
    let end_removed = removed.iter().any(|s| s.side == Side::End);
    let lo = if start_removed { path.t0 - beyond } else { path.t0 + along };
    let hi = if end_removed { path.t1 + beyond } else { path.t1 - along };
    if hi - lo <= 1e-9 || (path.is_revolve() && hi - lo >= 360.0) {
        return Err(err());
    }
    let stations = [
        Station { t: lo, rings: rings.clone() },
        Station { t: hi, rings },
    ];
    Ok(finish(loft(region, &stations, path, false, triplet)))
}
