//! Procedural test meshes.

use std::collections::HashMap;

use crate::geometry::{norm, scale, Vec3};
use crate::mesh::{Corner, Face, TriMesh};
use crate::scalar::Real;

pub fn tetrahedron<T: Real>() -> TriMesh<T> {
    let l = T::lit;
    TriMesh::from_triangles(
        "tetrahedron",
        vec![
            [l(0.0), l(0.0), l(0.0)],
            [l(1.0), l(0.0), l(0.0)],
            [l(0.0), l(1.0), l(0.0)],
            [l(0.0), l(0.0), l(1.0)],
        ],
        &[[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
    )
}

/// Axis-aligned unit cube `[0, 1]³`, 12 outward-facing triangles.
pub fn unit_cube<T: Real>() -> TriMesh<T> {
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8u32 {
        vertices.push([T::lit((i & 1) as f64), T::lit(((i >> 1) & 1) as f64), T::lit(((i >> 2) & 1) as f64)]);
    }
    TriMesh::from_triangles(
        "cube",
        vertices,
        &[
            [0, 2, 3],
            [0, 3, 1], // z = 0
            [4, 5, 7],
            [4, 7, 6], // z = 1
            [0, 1, 5],
            [0, 5, 4], // y = 0
            [2, 6, 7],
            [2, 7, 3], // y = 1
            [0, 4, 6],
            [0, 6, 2], // x = 0
            [1, 3, 7],
            [1, 7, 5], // x = 1
        ],
    )
}

/// Geodesic sphere: an icosahedron subdivided `subdivisions` times, giving
/// `20 · 4^subdivisions` faces. Each vertex gets its own spherical uv.
pub fn icosphere<T: Real>(subdivisions: u32, radius: f64) -> TriMesh<T> {
    displaced_icosphere(subdivisions, |_| radius)
}

/// Icosphere whose radius along each unit direction is `radius(dir)`.
pub fn displaced_icosphere<T: Real>(subdivisions: u32, radius: impl Fn(Vec3<f64>) -> f64) -> TriMesh<T> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut dirs: Vec<Vec3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| scale(v, 1.0 / norm(v)))
    .collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, dirs: &mut Vec<Vec3<f64>>| -> u32 {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (pa, pb) = (dirs[a as usize], dirs[b as usize]);
                let m = [pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]];
                dirs.push(scale(&m, 1.0 / norm(&m)));
                dirs.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = mid(a, b, &mut dirs);
            let bc = mid(b, c, &mut dirs);
            let ca = mid(c, a, &mut dirs);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let mut mesh = TriMesh::new("icosphere");
    for d in &dirs {
        let r = radius(*d);
        mesh.vertices.push(d.map(|x| T::lit(x * r)));
        let u = 0.5 + d[2].atan2(d[0]) / (2.0 * std::f64::consts::PI);
        let v = 0.5 - d[1].asin() / std::f64::consts::PI;
        mesh.uvs.push([T::lit(u), T::lit(v)]);
    }
    mesh.faces = tris.into_iter().map(|t| Face(t.map(|v| Corner::new(v, v)))).collect();
    mesh
}

/// Lumpy closed surface standing in for a high-resolution scan.
pub fn scan_like<T: Real>(subdivisions: u32) -> TriMesh<T> {
    let mut mesh = displaced_icosphere(subdivisions, |d| {
        1.0 + 0.12 * (5.0 * d[0]).sin() * (4.0 * d[1]).sin() * (3.0 * d[2]).cos() + 0.05 * (11.0 * d[1]).sin()
    });
    mesh.name = "scan".into();
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    #[test]
    fn primitives_are_closed() {
        for m in [tetrahedron::<f64>(), unit_cube(), icosphere(3, 1.0), scan_like(2)] {
            let r = validate(&m);
            assert!(r.is_valid() && r.is_watertight, "{}", m.name);
            assert_eq!(r.connected_components, 1);
        }
        assert_eq!(icosphere::<f64>(3, 1.0).triangle_count(), 1280);
    }

    #[test]
    fn cube_faces_point_outward() {
        let cube = unit_cube::<f64>();
        for i in 0..cube.faces.len() {
            let t = cube.triangle(i);
            let n = crate::geometry::triangle_cross(&t);
            let c = [
                (t[0][0] + t[1][0] + t[2][0]) / 3.0 - 0.5,
                (t[0][1] + t[1][1] + t[2][1]) / 3.0 - 0.5,
                (t[0][2] + t[1][2] + t[2][2]) / 3.0 - 0.5,
            ];
            assert!(crate::geometry::dot(&n, &c) > 0.0);
        }
    }
}
