//! Labeled triangle meshes.

use super::{KernelError, V3};
use crate::model::CapType;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;

/// Vertices closer than this are merged.
pub const MERGE_EPSILON: f64 = 1e-7;

/// Provenance of one triangle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceLabel {
    pub triplet_index: usize,
    pub source_tag: String,
    pub cap_type: CapType,
}

impl FaceLabel {
    pub fn new(triplet_index: usize, source_tag: impl Into<String>, cap_type: CapType) -> Self {
        FaceLabel {
            triplet_index,
            source_tag: source_tag.into(),
            cap_type,
        }
    }
}

/// Indexed triangle mesh where every triangle carries a [`FaceLabel`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledMesh {
    pub vertices: Vec<V3>,
    pub triangles: Vec<[u32; 3]>,
    pub labels: Vec<FaceLabel>,
}

/// Per-edge usage summary from [`LabeledMesh::edge_report`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeReport {
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub misoriented_edges: usize,
}

impl EdgeReport {
    pub fn is_watertight(&self) -> bool {
        self.boundary_edges == 0 && self.non_manifold_edges == 0 && self.misoriented_edges == 0
    }
}

impl LabeledMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [V3; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn push_triangle(&mut self, a: V3, b: V3, c: V3, label: FaceLabel) {
        let base = self.vertices.len() as u32;
        self.vertices.extend([a, b, c]);
        self.triangles.push([base, base + 1, base + 2]);
        self.labels.push(label);
    }

    /// Appends `other`, keeping its labels.
    pub fn append(&mut self, other: &LabeledMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        self.labels.extend(other.labels.iter().cloned());
    }

    pub fn bounding_box(&self) -> Option<(V3, V3)> {
        let mut it = self.triangles.iter().flatten().map(|&i| self.vertices[i as usize]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.inf(&v), hi.sup(&v))))
    }

    /// Merges coincident vertices, drops unused ones and triangles that
    /// collapsed onto a repeated index.
    pub fn weld(&mut self, eps: f64) {
        let cell = eps * 4.0;
        let key = |v: &V3| {
            (
                (v.x / cell).floor() as i64,
                (v.y / cell).floor() as i64,
                (v.z / cell).floor() as i64,
            )
        };
        let mut grid: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        let mut new_vertices: Vec<V3> = Vec::new();
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let used = {
            let mut u = vec![false; self.vertices.len()];
            for &i in self.triangles.iter().flatten() {
                u[i as usize] = true;
            }
            u
        };
        for (i, v) in self.vertices.iter().enumerate() {
            if !used[i] {
                continue;
            }
            let (kx, ky, kz) = key(v);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                            for &j in list {
                                if (new_vertices[j as usize] - v).norm() <= eps {
                                    found = Some(j);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            let idx = found.unwrap_or_else(|| {
                let j = new_vertices.len() as u32;
                new_vertices.push(*v);
                grid.entry((kx, ky, kz)).or_default().push(j);
                j
            });
            remap[i] = idx;
        }
        let mut tris = Vec::with_capacity(self.triangles.len());
        let mut labels = Vec::with_capacity(self.labels.len());
        for (t, l) in self.triangles.iter().zip(&self.labels) {
            let m = [remap[t[0] as usize], remap[t[1] as usize], remap[t[2] as usize]];
            if m[0] != m[1] && m[1] != m[2] && m[0] != m[2] {
                tris.push(m);
                labels.push(l.clone());
            }
        }
        self.vertices = new_vertices;
        self.triangles = tris;
        self.labels = labels;
    }

    /// Counts edges that are not shared by exactly two oppositely oriented triangles.
    pub fn edge_report(&self) -> EdgeReport {
        let mut edges: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = edges.entry((a.min(b), a.max(b))).or_default();
                if a < b {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let mut report = EdgeReport::default();
        for &(fwd, back) in edges.values() {
            match fwd + back {
                1 => report.boundary_edges += 1,
                2 if fwd != 1 => report.misoriented_edges += 1,
                2 => {}
                _ => report.non_manifold_edges += 1,
            }
        }
        report
    }

    pub fn is_watertight(&self) -> bool {
        self.edge_report().is_watertight()
    }

    /// Signed volume by the divergence theorem (sum of origin tetrahedra).
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let a = self.vertices[t[0] as usize];
                let b = self.vertices[t[1] as usize];
                let c = self.vertices[t[2] as usize];
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| triangle_area(&self.triangle(i))).sum()
    }

    pub fn flip(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    pub fn translated(&self, v: V3) -> LabeledMesh {
        let mut out = self.clone();
        for p in &mut out.vertices {
            *p += v;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> LabeledMesh {
        let mut out = self.clone();
        for p in &mut out.vertices {
            *p *= s;
        }
        out
    }

    /// Triangles matching a predicate on their label, as a new mesh.
    pub fn filter(&self, keep: impl Fn(&FaceLabel) -> bool) -> LabeledMesh {
        let mut out = LabeledMesh::default();
        for (i, l) in self.labels.iter().enumerate() {
            if keep(l) {
                let [a, b, c] = self.triangle(i);
                out.push_triangle(a, b, c, l.clone());
            }
        }
        out
    }

    /// Binary STL (labels dropped).
    pub fn write_stl(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut header = [0u8; 80];
        let title = b"seekcad binary stl";
        header[..title.len()].copy_from_slice(title);
        out.write_all(&header)?;
        out.write_all(&(self.triangles.len() as u32).to_le_bytes())?;
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(i);
            let n = (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(V3::zeros);
            for v in [n, a, b, c] {
                for k in 0..3 {
                    out.write_all(&(v[k] as f32).to_le_bytes())?;
                }
            }
            out.write_all(&[0, 0])?;
        }
        Ok(())
    }

    pub fn to_stl_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(84 + 50 * self.triangles.len());
        self.write_stl(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// ASCII OBJ (labels dropped).
    pub fn write_obj(&self, out: &mut impl Write) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Sidecar JSON mapping triangle index to its label.
    pub fn labels_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            triangle: usize,
            triplet_index: usize,
            tag: &'a str,
            #[serde(rename = "capType")]
            cap_type: CapType,
        }
        let entries: Vec<Entry> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| Entry {
                triangle: i,
                triplet_index: l.triplet_index,
                tag: &l.source_tag,
                cap_type: l.cap_type,
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("labels serialize")
    }
}

pub fn triangle_area(t: &[V3; 3]) -> f64 {
    (t[1] - t[0]).cross(&(t[2] - t[0])).norm() * 0.5
}

/// Volume of a closed mesh; errors when the mesh is not watertight.
pub fn mesh_volume(mesh: &LabeledMesh) -> Result<f64, KernelError> {
    let report = mesh.edge_report();
    if !report.is_watertight() {
        return Err(KernelError::NotWatertight(report));
    }
    Ok(mesh.signed_volume())
}

/// Area-weighted uniform surface sampling, deterministic for a given seed.
pub fn sample_surface(mesh: &LabeledMesh, n_points: usize, seed: u64) -> Result<Vec<V3>, KernelError> {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += triangle_area(&mesh.triangle(i));
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(KernelError::EmptyMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let pick = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= pick).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(idx);
        let r1 = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        out.push(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Axis-aligned box built directly from its 8 corners.
    pub fn box_mesh(lo: V3, hi: V3) -> LabeledMesh {
        let c = |x: bool, y: bool, z: bool| {
            V3::new(
                if x { hi.x } else { lo.x },
                if y { hi.y } else { lo.y },
                if z { hi.z } else { lo.z },
            )
        };
        let vertices = vec![
            c(false, false, false),
            c(true, false, false),
            c(true, true, false),
            c(false, true, false),
            c(false, false, true),
            c(true, false, true),
            c(true, true, true),
            c(false, true, true),
        ];
        let triangles = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [1, 2, 6],
            [1, 6, 5],
            [2, 3, 7],
            [2, 7, 6],
            [3, 0, 4],
            [3, 4, 7],
        ];
        let labels = vec![FaceLabel::new(0, "box", CapType::Swept); 12];
        LabeledMesh {
            vertices,
            triangles,
            labels,
        }
    }

    #[test]
    fn unit_cube_volume_is_exact() {
        let cube = box_mesh(V3::zeros(), V3::new(1.0, 1.0, 1.0));
        assert_eq!(mesh_volume(&cube).unwrap(), 1.0);
        let mut inside_out = cube.clone();
        inside_out.flip();
        assert_eq!(mesh_volume(&inside_out).unwrap(), -1.0);
    }

    #[test]
    fn open_mesh_is_not_watertight() {
        let mut cube = box_mesh(V3::zeros(), V3::new(1.0, 1.0, 1.0));
        cube.triangles.pop();
        cube.labels.pop();
        assert!(matches!(mesh_volume(&cube), Err(KernelError::NotWatertight(_))));
    }

    #[test]
    fn weld_merges_triangle_soup() {
        let cube = box_mesh(V3::zeros(), V3::new(1.0, 1.0, 1.0));
        let mut soup = LabeledMesh::default();
        for i in 0..cube.triangles.len() {
            let [a, b, c] = cube.triangle(i);
            soup.push_triangle(a, b, c + V3::new(1e-9, 0.0, 0.0) - V3::new(1e-9, 0.0, 0.0), cube.labels[i].clone());
        }
        assert!(!soup.is_watertight());
        soup.weld(MERGE_EPSILON);
        assert_eq!(soup.vertices.len(), 8);
        assert!(soup.is_watertight());
    }

    #[test]
    fn sampling_is_deterministic_and_balanced() {
        let cube = box_mesh(V3::zeros(), V3::new(1.0, 1.0, 1.0));
        let a = sample_surface(&cube, 2000, 7).unwrap();
        let b = sample_surface(&cube, 2000, 7).unwrap();
        assert_eq!(a, b);
        // Binomial(2000, 1/6): sigma = sqrt(n p (1-p)).
        let n = 2000.0;
        let p = 1.0 / 6.0;
        let sigma = (n * p * (1.0 - p)) as f64;
        let sigma = sigma.sqrt();
        let mut counts = [0usize; 6];
        for q in &a {
            let face = if q.x.abs() < 1e-12 {
                0
            } else if (q.x - 1.0).abs() < 1e-12 {
                1
            } else if q.y.abs() < 1e-12 {
                2
            } else if (q.y - 1.0).abs() < 1e-12 {
                3
            } else if q.z.abs() < 1e-12 {
                4
            } else {
                5
            };
            counts[face] += 1;
        }
        for c in counts {
            assert!((c as f64 - n * p).abs() <= 4.0 * sigma, "{counts:?}");
        }
    }
}
