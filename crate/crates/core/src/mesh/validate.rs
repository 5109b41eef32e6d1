use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TriMesh;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub triangle_count: usize,
    pub degenerate_faces: usize,
    pub out_of_range_indices: usize,
    pub connected_components: usize,
    /// Every undirected edge is shared by exactly two faces.
    pub is_watertight: bool,
    pub bounding_box: Option<BoundingBox>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.degenerate_faces == 0 && self.out_of_range_indices == 0
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let up = parent[parent[x as usize] as usize];
        parent[x as usize] = up;
        x = up;
    }
    x
}

/// Reports structural problems without modifying the mesh.
pub fn validate<T: Real>(mesh: &TriMesh<T>) -> ValidationReport {
    let nv = mesh.vertices.len();
    let nt = mesh.uvs.len();
    let mut out_of_range = 0;
    let mut degenerate = 0;
    let mut edges: HashMap<(u32, u32), u32> = HashMap::with_capacity(mesh.faces.len() * 3 / 2 + 1);
    let mut parent: Vec<u32> = (0..nv as u32).collect();
    let mut referenced = vec![false; nv];

    for face in &mesh.faces {
        let mut ok = true;
        for c in &face.0 {
            if c.vertex as usize >= nv {
                out_of_range += 1;
                ok = false;
            }
            // uv indices are only meaningful when the mesh carries texture coordinates
            if nt > 0 && c.uv as usize >= nt {
                out_of_range += 1;
            }
        }
        if face.is_degenerate() {
            degenerate += 1;
        }
        if !ok {
            continue;
        }
        let vs = face.vertices();
        for k in 0..3 {
            let (a, b) = (vs[k], vs[(k + 1) % 3]);
            referenced[a as usize] = true;
            if a != b {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb) as usize] = ra.min(rb);
            }
        }
    }

    let components = (0..nv as u32)
        .filter(|&v| referenced[v as usize] && find(&mut parent, v) == v)
        .count();
    let is_watertight = !edges.is_empty() && edges.values().all(|&n| n == 2);

    let bounding_box = (!mesh.vertices.is_empty()).then(|| {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for v in &mesh.vertices {
            for k in 0..3 {
                min[k] = min[k].min(v[k].as_f64());
                max[k] = max[k].max(v[k].as_f64());
            }
        }
        BoundingBox { min, max }
    });

    ValidationReport {
        triangle_count: mesh.faces.len(),
        degenerate_faces: degenerate,
        out_of_range_indices: out_of_range,
        connected_components: components,
        is_watertight,
        bounding_box,
    }
}
