//! Indexed triangle meshes with texture coordinates.
//!
//! Meshes are read from and written to the Wavefront OBJ subset made of
//! `v`, `vt` and `f` records. Everything else in a file is ignored.

mod obj;
mod validate;

pub use obj::{parse_obj, write_obj, ObjError};
pub use validate::{validate, BoundingBox, ValidationReport};

use crate::scalar::Real;

/// One triangle corner: a position index and a texture coordinate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Corner {
    pub vertex: u32,
    pub uv: u32,
}

impl Corner {
    pub const fn new(vertex: u32, uv: u32) -> Self {
        Self { vertex, uv }
    }
}

/// A triangle as three corners in counter-clockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Face(pub [Corner; 3]);

impl Face {
    pub fn vertices(&self) -> [u32; 3] {
        [self.0[0].vertex, self.0[1].vertex, self.0[2].vertex]
    }

    /// True when two corners share a position index.
    pub fn is_degenerate(&self) -> bool {
        let [a, b, c] = self.vertices();
        a == b || b == c || a == c
    }
}

/// Indexed triangle mesh.
///
/// When `uvs` is empty every corner carries uv index 0 and no texture
/// coordinates are written back out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh<T> {
    pub name: String,
    pub vertices: Vec<[T; 3]>,
    pub uvs: Vec<[T; 2]>,
    pub faces: Vec<Face>,
}

impl<T: Real> TriMesh<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            vertices: Vec::new(),
            uvs: Vec::new(),
            faces: Vec::new(),
        }
    }

    /// Builds an untextured mesh from positions and vertex-index triangles.
    pub fn from_triangles(name: impl Into<String>, vertices: Vec<[T; 3]>, triangles: &[[u32; 3]]) -> Self {
        let faces = triangles
            .iter()
            .map(|t| Face([Corner::new(t[0], 0), Corner::new(t[1], 0), Corner::new(t[2], 0)]))
            .collect();
        Self {
            name: name.into(),
            vertices,
            uvs: Vec::new(),
            faces,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.faces.len()
    }

    pub fn has_uvs(&self) -> bool {
        !self.uvs.is_empty()
    }

    /// Corner positions of face `index`.
    pub fn triangle(&self, index: usize) -> [[T; 3]; 3] {
        let [a, b, c] = self.faces[index].vertices();
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Sum of triangle areas.
    pub fn surface_area(&self) -> T {
        (0..self.faces.len())
            .map(|i| crate::geometry::triangle_area(&self.triangle(i)))
            .fold(T::zero(), |acc, a| acc + a)
    }

    /// Returns a copy with every position offset by `delta`.
    pub fn translated(&self, delta: [T; 3]) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            for k in 0..3 {
                v[k] += delta[k];
            }
        }
        out
    }

    /// Converts coordinates to another scalar type.
    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        let conv = |x: T| U::lit(x.as_f64());
        TriMesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|v| [conv(v[0]), conv(v[1]), conv(v[2])]).collect(),
            uvs: self.uvs.iter().map(|t| [conv(t[0]), conv(t[1])]).collect(),
            faces: self.faces.clone(),
        }
    }
}
