use std::fmt::Write as _;

use thiserror::Error;

use super::{Corner, Face, TriMesh};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ObjError {
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("line {line}: malformed number `{token}`")]
    Number { line: usize, token: String },
    #[error("line {line}: `{record}` record expects at least {expected} values")]
    Arity {
        line: usize,
        record: &'static str,
        expected: usize,
    },
    #[error("line {line}: malformed face corner `{token}`")]
    Corner { line: usize, token: String },
    #[error("line {line}: index {index} is invalid (0 or beyond the {available} {kind} defined so far)")]
    Index {
        line: usize,
        kind: &'static str,
        index: i64,
        available: usize,
    },
}

fn parse_number<T: Real>(token: &str, line: usize) -> Result<T, ObjError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .and_then(T::from_f64)
        .ok_or_else(|| ObjError::Number {
            line,
            token: token.to_string(),
        })
}

/// Resolves a 1-based or negative (relative) OBJ index to a 0-based one.
fn resolve(raw: &str, available: usize, kind: &'static str, line: usize, token: &str) -> Result<u32, ObjError> {
    let index: i64 = raw.parse().map_err(|_| ObjError::Corner {
        line,
        token: token.to_string(),
    })?;
    let resolved = if index > 0 { index - 1 } else { available as i64 + index };
    if index == 0 || resolved < 0 || resolved >= available as i64 {
        return Err(ObjError::Index {
            line,
            kind,
            index,
            available,
        });
    }
    Ok(resolved as u32)
}

/// Parses Wavefront OBJ text. Polygons are fan-triangulated; records other
/// than `v`, `vt` and `f` are skipped.
pub fn parse_obj<T: Real>(source: &[u8], name: &str) -> Result<TriMesh<T>, ObjError> {
    let text = std::str::from_utf8(source).map_err(|_| ObjError::Encoding)?;
    let mut mesh = TriMesh::new(name);
    // corners parsed before the first `vt` carry no uv; patched once all records are read
    let mut polygon: Vec<(u32, Option<u32>)> = Vec::with_capacity(4);
    let mut raw_faces: Vec<[(u32, Option<u32>); 3]> = Vec::new();

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        match keyword {
            "v" => {
                let values: Vec<&str> = tokens.collect();
                if values.len() < 3 {
                    return Err(ObjError::Arity {
                        line,
                        record: "v",
                        expected: 3,
                    });
                }
                // optional w / vertex colour components are ignored
                mesh.vertices.push([
                    parse_number(values[0], line)?,
                    parse_number(values[1], line)?,
                    parse_number(values[2], line)?,
                ]);
            }
            "vt" => {
                let values: Vec<&str> = tokens.collect();
                if values.len() < 2 {
                    return Err(ObjError::Arity {
                        line,
                        record: "vt",
                        expected: 2,
                    });
                }
                mesh.uvs.push([parse_number(values[0], line)?, parse_number(values[1], line)?]);
            }
            "f" => {
                polygon.clear();
                for token in tokens {
                    let mut parts = token.split('/');
                    let v = parts.next().unwrap_or("");
                    let vertex = resolve(v, mesh.vertices.len(), "vertices", line, token)?;
                    let uv = match parts.next() {
                        Some(t) if !t.is_empty() => Some(resolve(t, mesh.uvs.len(), "texture coordinates", line, token)?),
                        _ => None,
                    };
                    polygon.push((vertex, uv));
                }
                if polygon.len() < 3 {
                    return Err(ObjError::Arity {
                        line,
                        record: "f",
                        expected: 3,
                    });
                }
                for k in 1..polygon.len() - 1 {
                    raw_faces.push([polygon[0], polygon[k], polygon[k + 1]]);
                }
            }
            _ => {}
        }
    }

    mesh.faces = raw_faces
        .into_iter()
        .map(|corners| Face(corners.map(|(vertex, uv)| Corner::new(vertex, uv.unwrap_or(0)))))
        .collect();
    Ok(mesh)
}

/// Serializes `mesh` as OBJ text with 1-based indices.
///
/// Coordinates use the shortest decimal form that parses back to the same
/// value, so `parse_obj(write_obj(m)) == m`.
pub fn write_obj<T: Real>(mesh: &TriMesh<T>) -> Vec<u8> {
    let mut out = String::with_capacity(32 * (mesh.vertices.len() + mesh.uvs.len() + mesh.faces.len()) + 64);
    if !mesh.name.is_empty() {
        let _ = writeln!(out, "o {}", mesh.name);
    }
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.uvs {
        let _ = writeln!(out, "vt {} {}", t[0], t[1]);
    }
    let textured = mesh.has_uvs();
    for face in &mesh.faces {
        out.push('f');
        for c in &face.0 {
            if textured {
                let _ = write!(out, " {}/{}", c.vertex + 1, c.uv + 1);
            } else {
                let _ = write!(out, " {}", c.vertex + 1);
            }
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n";

    #[test]
    fn minimal_triangle() {
        let m: TriMesh<f64> = parse_obj(TRIANGLE.as_bytes(), "t").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.uvs.len(), 3);
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.faces[0].vertices(), [0, 1, 2]);
    }

    #[test]
    fn quad_is_fan_triangulated() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nf 1/1 2/2 3/3 4/4\n";
        let m: TriMesh<f64> = parse_obj(src.as_bytes(), "q").unwrap();
        assert_eq!(m.faces.len(), 2);
        assert_eq!(m.faces[0].vertices(), [0, 1, 2]);
        assert_eq!(m.faces[1].vertices(), [0, 2, 3]);
        assert_eq!(m.faces[1].0[2].uv, 3);
    }

    #[test]
    fn polygon_yields_k_minus_two_triangles() {
        let mut src = String::new();
        for k in 0..7 {
            let a = k as f64;
            src += &format!("v {} {} 0\n", a.cos(), a.sin());
        }
        src += "f 1 2 3 4 5 6 7\n";
        let m: TriMesh<f64> = parse_obj(src.as_bytes(), "p").unwrap();
        assert_eq!(m.faces.len(), 5);
        let mut used: Vec<u32> = m.faces.iter().flat_map(|f| f.vertices()).collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn skips_unsupported_records() {
        let src = format!("# scan\nmtllib a.mtl\no obj\ng grp\ns 1\nvn 0 0 1\nusemtl m\n{TRIANGLE}");
        let m: TriMesh<f64> = parse_obj(src.as_bytes(), "t").unwrap();
        assert_eq!(m.faces.len(), 1);
    }

    #[test]
    fn negative_indices_are_relative() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf -3/-1 -2/-1 -1/-1\n";
        let m: TriMesh<f64> = parse_obj(src.as_bytes(), "t").unwrap();
        assert_eq!(m.faces[0].vertices(), [0, 1, 2]);
        assert!(m.faces[0].0.iter().all(|c| c.uv == 0));

        let bad = "v 0 0 0\nv 1 0 0\nf -3 -2 -1\n";
        assert!(matches!(
            parse_obj::<f64>(bad.as_bytes(), "t"),
            Err(ObjError::Index { line: 3, .. })
        ));
    }

    #[test]
    fn rejects_zero_and_out_of_range_indices() {
        let zero = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n";
        assert!(matches!(
            parse_obj::<f64>(zero.as_bytes(), "t"),
            Err(ObjError::Index { index: 0, .. })
        ));
        let high = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n";
        assert!(matches!(
            parse_obj::<f64>(high.as_bytes(), "t"),
            Err(ObjError::Index { index: 4, .. })
        ));
    }

    #[test]
    fn malformed_number_reports_line() {
        let src = "v 0 0 0\nv 1 x 0\n";
        assert_eq!(
            parse_obj::<f64>(src.as_bytes(), "t"),
            Err(ObjError::Number {
                line: 2,
                token: "x".into()
            })
        );
    }

    #[test]
    fn missing_uv_defaults_to_zero_when_uvs_exist() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0.5 0.5\nf 1 2 3\n";
        let m: TriMesh<f64> = parse_obj(src.as_bytes(), "t").unwrap();
        assert!(m.faces[0].0.iter().all(|c| c.uv == 0));
        assert_eq!(m.uvs.len(), 1);
    }

    #[test]
    fn empty_mesh_writes_only_vertex_records() {
        let mut m = TriMesh::<f64>::new("");
        m.vertices.push([1.0, 2.0, 3.0]);
        m.uvs.push([0.25, 0.75]);
        let text = String::from_utf8(write_obj(&m)).unwrap();
        assert_eq!(text, "v 1 2 3\nvt 0.25 0.75\n");
    }

    #[test]
    fn single_triangle_writes_one_face_line() {
        let m: TriMesh<f64> = parse_obj(TRIANGLE.as_bytes(), "").unwrap();
        let text = String::from_utf8(write_obj(&m)).unwrap();
        let faces: Vec<&str> = text.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(faces, vec!["f 1/1 2/2 3/3"]);
    }

    #[test]
    fn f32_round_trip() {
        let mut m = TriMesh::<f32>::new("f");
        m.vertices = vec![[0.1, 0.2, 0.3], [1.0e-7, 3.5, -2.25], [7.0, 8.0, 9.0]];
        m.faces.push(Face([Corner::new(0, 0), Corner::new(1, 0), Corner::new(2, 0)]));
        let back: TriMesh<f32> = parse_obj(&write_obj(&m), "f").unwrap();
        assert_eq!(back, m);
    }
}
