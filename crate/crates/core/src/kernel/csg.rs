//! Label-preserving mesh booleans on a BSP tree of convex polygons.

use super::mesh::{FaceLabel, LabeledMesh, MERGE_EPSILON};
use super::{KernelError, V3};
use crate::model::BooleanOp;
use std::collections::HashMap;

const PLANE_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
struct Plane {
    n: V3,
    w: f64,
}

impl Plane {
    fn flipped(self) -> Plane {
        Plane { n: -self.n, w: -self.w }
    }
}

#[derive(Debug, Clone)]
struct Poly {
    verts: Vec<V3>,
    plane: Plane,
    label: u32,
}

impl Poly {
    fn from_triangle(tri: [V3; 3], label: u32) -> Option<Poly> {
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let len = n.norm();
        let scale = (tri[1] - tri[0]).norm().max((tri[2] - tri[0]).norm()).max(1e-300);
        if len <= 1e-12 * scale * scale {
            return None;
        }
        let n = n / len;
        Some(Poly {
            plane: Plane { n, w: n.dot(&tri[0]) },
            verts: tri.to_vec(),
            label,
        })
    }

    fn flip(&mut self) {
        self.verts.reverse();
        self.plane = self.plane.flipped();
    }
}

const COPLANAR: u8 = 0;
const FRONT: u8 = 1;
const BACK: u8 = 2;
const SPANNING: u8 = 3;

/// Splits `p` by `plane`; coplanar pieces go to the front or back list by
/// facing.
fn split(
    plane: Plane,
    p: Poly,
    coplanar_front: &mut Vec<Poly>,
    coplanar_back: &mut Vec<Poly>,
    front: &mut Vec<Poly>,
    back: &mut Vec<Poly>,
) {
    let mut kind = 0u8;
    let types: Vec<u8> = p
        .verts
        .iter()
        .map(|v| {
            let t = plane.n.dot(v) - plane.w;
            let ty = if t < -PLANE_EPSILON {
                BACK
            } else if t > PLANE_EPSILON {
                FRONT
            } else {
                COPLANAR
            };
            kind |= ty;
            ty
        })
        .collect();
    match kind {
        COPLANAR => {
            if plane.n.dot(&p.plane.n) > 0.0 {
                coplanar_front.push(p);
            } else {
                coplanar_back.push(p);
            }
        }
        FRONT => front.push(p),
        BACK => back.push(p),
        _ => {
            let n = p.verts.len();
            let mut f = Vec::with_capacity(n + 1);
            let mut b = Vec::with_capacity(n + 1);
            for i in 0..n {
                let j = (i + 1) % n;
                let (ti, tj) = (types[i], types[j]);
                let (vi, vj) = (p.verts[i], p.verts[j]);
                if ti != BACK {
                    f.push(vi);
                }
                if ti != FRONT {
                    b.push(vi);
                }
                if (ti | tj) == SPANNING {
                    let t = (plane.w - plane.n.dot(&vi)) / plane.n.dot(&(vj - vi));
                    let v = vi + (vj - vi) * t;
                    f.push(v);
                    b.push(v);
                }
            }
            if f.len() >= 3 {
                front.push(Poly {
                    verts: f,
                    plane: p.plane,
                    label: p.label,
                });
            }
            if b.len() >= 3 {
                back.push(Poly {
                    verts: b,
                    plane: p.plane,
                    label: p.label,
                });
            }
        }
    }
}

#[derive(Debug, Default)]
struct Node {
    plane: Option<Plane>,
    front: Option<usize>,
    back: Option<usize>,
    polys: Vec<Poly>,
}

/// Arena-allocated BSP tree; all traversals are iterative.
#[derive(Debug)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn new(polys: Vec<Poly>) -> Tree {
        let mut t = Tree {
            nodes: vec![Node::default()],
        };
        t.build(polys);
        t
    }

    fn build(&mut self, polys: Vec<Poly>) {
        let mut stack = vec![(0usize, polys)];
        while let Some((ni, polys)) = stack.pop() {
            if polys.is_empty() {
                continue;
            }
            let plane = *self.nodes[ni].plane.get_or_insert(polys[0].plane);
            let (mut cf, mut cb, mut f, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for p in polys {
                split(plane, p, &mut cf, &mut cb, &mut f, &mut b);
            }
            self.nodes[ni].polys.extend(cf);
            self.nodes[ni].polys.extend(cb);
            if !f.is_empty() {
                let child = self.child(ni, true);
                stack.push((child, f));
            }
            if !b.is_empty() {
                let child = self.child(ni, false);
                stack.push((child, b));
            }
        }
    }

    fn child(&mut self, ni: usize, front: bool) -> usize {
        let existing = if front { self.nodes[ni].front } else { self.nodes[ni].back };
        existing.unwrap_or_else(|| {
            let idx = self.nodes.len();
            self.nodes.push(Node::default());
            if front {
                self.nodes[ni].front = Some(idx);
            } else {
                self.nodes[ni].back = Some(idx);
            }
            idx
        })
    }

    /// Removes the parts of `polys` inside this solid.
    fn clip_polygons(&self, polys: Vec<Poly>) -> Vec<Poly> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, polys)];
        while let Some((ni, polys)) = stack.pop() {
            let node = &self.nodes[ni];
            let Some(plane) = node.plane else {
                out.extend(polys);
                continue;
            };
            let (mut f, mut b) = (Vec::new(), Vec::new());
            let (mut cf, mut cb) = (Vec::new(), Vec::new());
            for p in polys {
                split(plane, p, &mut cf, &mut cb, &mut f, &mut b);
            }
            f.extend(cf);
            b.extend(cb);
            match node.front {
                Some(fi) => stack.push((fi, f)),
                None => out.extend(f),
            }
            if let Some(bi) = node.back {
                stack.push((bi, b));
            }
        }
        out
    }

    fn clip_to(&mut self, other: &Tree) {
        for node in &mut self.nodes {
            let polys = std::mem::take(&mut node.polys);
            node.polys = other.clip_polygons(polys);
        }
    }

    fn invert(&mut self) {
        for node in &mut self.nodes {
            for p in &mut node.polys {
                p.flip();
            }
            node.plane = node.plane.map(Plane::flipped);
            std::mem::swap(&mut node.front, &mut node.back);
        }
    }

    fn all_polygons(&self) -> Vec<Poly> {
        self.nodes.iter().flat_map(|n| n.polys.iter().cloned()).collect()
    }
}

fn to_polys(mesh: &LabeledMesh, label_offset: u32) -> Vec<Poly> {
    (0..mesh.triangles.len())
        .filter_map(|i| Poly::from_triangle(mesh.triangle(i), label_offset + i as u32))
        .collect()
}

fn boxes_disjoint(a: &LabeledMesh, b: &LabeledMesh) -> bool {
    match (a.bounding_box(), b.bounding_box()) {
        (Some((alo, ahi)), Some((blo, bhi))) => {
            (0..3).any(|k| ahi[k] < blo[k] - PLANE_EPSILON || bhi[k] < alo[k] - PLANE_EPSILON)
        }
        _ => true,
    }
}

/// Combines two watertight meshes. Output triangles keep the label of the
/// input triangle they were cut from.
pub fn boolean(a: &LabeledMesh, op: BooleanOp, b: &LabeledMesh) -> Result<LabeledMesh, KernelError> {
    if a.is_empty() || b.is_empty() || boxes_disjoint(a, b) {
        return Ok(match op {
            BooleanOp::Union => {
                let mut out = a.clone();
                out.append(b);
                out
            }
            BooleanOp::Cut => a.clone(),
            BooleanOp::Intersect => LabeledMesh::default(),
        });
    }
    let offset = a.triangles.len() as u32;
    let labels: Vec<&FaceLabel> = a.labels.iter().chain(b.labels.iter()).collect();
    let mut ta = Tree::new(to_polys(a, 0));
    let mut tb = Tree::new(to_polys(b, offset));
    match op {
        BooleanOp::Union => {
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons());
        }
        BooleanOp::Cut => {
            ta.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons());
            ta.invert();
        }
        BooleanOp::Intersect => {
            ta.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            ta.build(tb.all_polygons());
            ta.invert();
        }
    }
    let polys = ta.all_polygons();
    let mesh = assemble(&polys, &labels);
    let report = mesh.edge_report();
    if !report.is_watertight() {
        return Err(KernelError::NonManifoldResult {
            report,
            mesh: Box::new(mesh),
        });
    }
    Ok(mesh)
}

/// Welds polygon vertices, inserts vertices lying on other polygons' edges
/// (T-junctions) and triangulates.
fn assemble(polys: &[Poly], labels: &[&FaceLabel]) -> LabeledMesh {
    let mut welder = Welder::default();
    let mut loops: Vec<(Vec<u32>, u32, V3)> = Vec::new();
    for p in polys {
        let mut idx: Vec<u32> = p.verts.iter().map(|v| welder.index(*v)).collect();
        idx.dedup();
        while idx.len() > 1 && idx.first() == idx.last() {
            idx.pop();
        }
        if idx.len() >= 3 {
            loops.push((idx, p.label, p.plane.n));
        }
    }
    let verts = welder.vertices;
    let finder = EdgeFinder::new(&verts);
    let mut mesh = LabeledMesh {
        vertices: verts.clone(),
        ..Default::default()
    };
    for (idx, label, normal) in loops {
        let mut ring: Vec<u32> = Vec::with_capacity(idx.len());
        for k in 0..idx.len() {
            let (s, e) = (idx[k], idx[(k + 1) % idx.len()]);
            ring.push(s);
            ring.extend(finder.on_segment(&verts, s, e));
        }
        if polygon_area(&verts, &ring, normal) <= 1e-14 {
            continue;
        }
        let label = labels[label as usize].clone();
        let n = ring.len();
        let collinear = (0..n).any(|k| {
            let (a, b, c) = (
                verts[ring[(k + n - 1) % n] as usize],
                verts[ring[k] as usize],
                verts[ring[(k + 1) % n] as usize],
            );
            (b - a).cross(&(c - b)).dot(&normal) <= 1e-12 * (b - a).norm() * (c - b).norm()
        });
        if !collinear {
            for k in 1..n - 1 {
                mesh.triangles.push([ring[0], ring[k], ring[k + 1]]);
                mesh.labels.push(label.clone());
            }
        } else {
            let centroid = ring.iter().fold(V3::zeros(), |s, &i| s + verts[i as usize]) / n as f64;
            let c = mesh.vertices.len() as u32;
            mesh.vertices.push(centroid);
            for k in 0..n {
                let (a, b) = (ring[k], ring[(k + 1) % n]);
                let tri = [verts[a as usize], verts[b as usize], centroid];
                if super::triangle_area(&tri) > 0.0 {
                    mesh.triangles.push([a, b, c]);
                    mesh.labels.push(label.clone());
                }
            }
        }
    }
    mesh
}

fn polygon_area(verts: &[V3], ring: &[u32], normal: V3) -> f64 {
    let n = ring.len();
    let mut s = V3::zeros();
    for k in 0..n {
        s += verts[ring[k] as usize].cross(&verts[ring[(k + 1) % n] as usize]);
    }
    0.5 * s.dot(&normal)
}

#[derive(Default)]
struct Welder {
    vertices: Vec<V3>,
    grid: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl Welder {
    fn index(&mut self, v: V3) -> u32 {
        let cell = MERGE_EPSILON * 4.0;
        let key = (
            (v.x / cell).floor() as i64,
            (v.y / cell).floor() as i64,
            (v.z / cell).floor() as i64,
        );
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.grid.get(&(key.0 + dx, key.1 + dy, key.2 + dz)) {
                        for &j in list {
                            if (self.vertices[j as usize] - v).norm() <= MERGE_EPSILON {
                                return j;
                            }
                        }
                    }
                }
            }
        }
        let j = self.vertices.len() as u32;
        self.vertices.push(v);
        self.grid.entry(key).or_default().push(j);
        j
    }
}

/// Finds vertices lying strictly inside a segment, via per-axis sorted lists.
struct EdgeFinder {
    sorted: [Vec<u32>; 3],
}

impl EdgeFinder {
    fn new(verts: &[V3]) -> EdgeFinder {
        let sorted = [0, 1, 2].map(|k| {
            let mut v: Vec<u32> = (0..verts.len() as u32).collect();
            v.sort_by(|&a, &b| verts[a as usize][k].total_cmp(&verts[b as usize][k]));
            v
        });
        EdgeFinder { sorted }
    }

    /// Vertices on segment `s`→`e` (exclusive), ordered from `s`.
    fn on_segment(&self, verts: &[V3], s: u32, e: u32) -> Vec<u32> {
        let (a, b) = (verts[s as usize], verts[e as usize]);
        let d = b - a;
        let len2 = d.norm_squared();
        if len2 <= 0.0 {
            return Vec::new();
        }
        let axis = (0..3)
            .min_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()))
            .unwrap();
        let lo = a[axis].min(b[axis]) - MERGE_EPSILON;
        let hi = a[axis].max(b[axis]) + MERGE_EPSILON;
        let list = &self.sorted[axis];
        let start = list.partition_point(|&i| verts[i as usize][axis] < lo);
        let mut hits: Vec<(f64, u32)> = Vec::new();
        for &i in &list[start..] {
            let p = verts[i as usize];
            if p[axis] > hi {
                break;
            }
            if i == s || i == e {
                continue;
            }
            let t = (p - a).dot(&d) / len2;
            if t <= 0.0 || t >= 1.0 {
                continue;
            }
            let closest = a + d * t;
            if (p - closest).norm() <= MERGE_EPSILON
                && (p - a).norm() > MERGE_EPSILON
                && (p - b).norm() > MERGE_EPSILON
            {
                hits.push((t, i));
            }
        }
        hits.sort_by(|x, y| x.0.total_cmp(&y.0));
        hits.into_iter().map(|h| h.1).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::mesh::tests::box_mesh;
    use crate::kernel::mesh_volume;

    fn cube_at(x: f64) -> LabeledMesh {
        box_mesh(V3::new(x, 0.0, 0.0), V3::new(x + 1.0, 1.0, 1.0))
    }

    #[test]
    fn offset_cube_pair() {
        let (a, b) = (cube_at(0.0), cube_at(0.5));
        let u = boolean(&a, BooleanOp::Union, &b).unwrap();
        let i = boolean(&a, BooleanOp::Intersect, &b).unwrap();
        let c = boolean(&a, BooleanOp::Cut, &b).unwrap();
        assert!((mesh_volume(&u).unwrap() - 1.5).abs() < 1e-6);
        assert!((mesh_volume(&i).unwrap() - 0.5).abs() < 1e-6);
        assert!((mesh_volume(&c).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn self_union_is_identity() {
        let a = cube_at(0.0);
        let u = boolean(&a, BooleanOp::Union, &a).unwrap();
        assert!((mesh_volume(&u).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(u.bounding_box(), a.bounding_box());
    }

    #[test]
    fn disjoint_intersection_is_empty() {
        let i = boolean(&cube_at(0.0), BooleanOp::Intersect, &cube_at(3.0)).unwrap();
        assert!(i.is_empty());
        assert_eq!(mesh_volume(&i).unwrap(), 0.0);
    }

    #[test]
    fn cut_keeps_labels_of_both_sides() {
        let mut b = box_mesh(V3::new(0.25, 0.25, 0.5), V3::new(0.75, 0.75, 2.0));
        for l in &mut b.labels {
            l.triplet_index = 1;
        }
        let c = boolean(&cube_at(0.0), BooleanOp::Cut, &b).unwrap();
        assert!((mesh_volume(&c).unwrap() - (1.0 - 0.125)).abs() < 1e-9);
        assert!(c.labels.iter().any(|l| l.triplet_index == 0));
        assert!(c.labels.iter().any(|l| l.triplet_index == 1));
    }

    #[test]
    fn shared_face_union() {
        let u = boolean(&cube_at(0.0), BooleanOp::Union, &cube_at(1.0)).unwrap();
        assert!((mesh_volume(&u).unwrap() - 2.0).abs() < 1e-9);
    }
}
