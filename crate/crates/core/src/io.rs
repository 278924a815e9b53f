//! ASCII OBJ and PLY readers/writers.
//!
//! OBJ: vertices and faces only; polygonal faces are fan-triangulated on
//! load, texture/normal indices are ignored. PLY output carries a
//! per-vertex `uncertainty` scalar and a red-green color ramp (red = 1,
//! green = 0).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

pub fn parse_obj(text: &str) -> std::result::Result<TriangleMesh, String> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().unwrap();
        match tag {
            "v" => {
                let coords: Vec<f64> = fields
                    .clone()
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| format!("line {}: bad vertex coordinate", lineno + 1))?;
                if coords.len() != 3 {
                    return Err(format!("line {}: vertex needs 3 coordinates", lineno + 1));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut indices = Vec::new();
                for field in fields {
                    let vtx = field.split('/').next().unwrap();
                    let idx: i64 = vtx
                        .parse()
                        .map_err(|_| format!("line {}: bad face index {:?}", lineno + 1, vtx))?;
                    let resolved = if idx > 0 {
                        (idx - 1) as usize
                    } else if idx < 0 {
                        let back = (-idx) as usize;
                        if back > vertices.len() {
                            return Err(format!(
                                "line {}: relative index {} underflows",
                                lineno + 1,
                                idx
                            ));
                        }
                        vertices.len() - back
                    } else {
                        return Err(format!("line {}: face index 0 is invalid", lineno + 1));
                    };
                    if resolved >= vertices.len() {
                        return Err(format!(
                            "line {}: face index {} out of range",
                            lineno + 1,
                            idx
                        ));
                    }
                    indices.push(resolved);
                }
                if indices.len() < 3 {
                    return Err(format!("line {}: face needs >= 3 vertices", lineno + 1));
                }
                for k in 1..indices.len() - 1 {
                    faces.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            // Non-geometry records are ignored.
            "vn" | "vt" | "vp" | "o" | "g" | "s" | "mtllib" | "usemtl" | "l" | "p" => {}
            other => {
                return Err(format!("line {}: unknown record {:?}", lineno + 1, other));
            }
        }
    }

    TriangleMesh::new(vertices, faces).map_err(|e| e.to_string())
}

pub fn load_obj(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_obj(&text).map_err(|message| Error::FileFormat {
        path: path.display().to_string(),
        message,
    })
}

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    std::fs::write(path, format_obj(mesh))?;
    Ok(())
}

/// ASCII PLY with positions, a red-green uncertainty ramp and the raw
/// uncertainty as a float property.
pub fn format_ply_with_uncertainty(mesh: &TriangleMesh, uncertainty: &[f64]) -> Result<String> {
    if uncertainty.len() != mesh.vertices().len() {
        return Err(Error::InvalidParameter(format!(
            "uncertainty length {} does not match vertex count {}",
            uncertainty.len(),
            mesh.vertices().len()
        )));
    }
    let mut s = String::new();
    let _ = writeln!(s, "ply");
    let _ = writeln!(s, "format ascii 1.0");
    let _ = writeln!(s, "comment per-vertex uncertainty, red high / green low");
    let _ = writeln!(s, "element vertex {}", mesh.vertices().len());
    for prop in ["x", "y", "z"] {
        let _ = writeln!(s, "property float {prop}");
    }
    for prop in ["red", "green", "blue"] {
        let _ = writeln!(s, "property uchar {prop}");
    }
    let _ = writeln!(s, "property float uncertainty");
    let _ = writeln!(s, "element face {}", mesh.faces().len());
    let _ = writeln!(s, "property list uchar int vertex_indices");
    let _ = writeln!(s, "end_header");
    for (v, &u) in mesh.vertices().iter().zip(uncertainty) {
        let u = u.clamp(0.0, 1.0);
        let red = (u * 255.0).round() as u8;
        let green = ((1.0 - u) * 255.0).round() as u8;
        let _ = writeln!(s, "{} {} {} {} {} 0 {}", v.x, v.y, v.z, red, green, u);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    Ok(s)
}

pub fn save_ply_with_uncertainty(
    path: &Path,
    mesh: &TriangleMesh,
    uncertainty: &[f64],
) -> Result<()> {
    std::fs::write(path, format_ply_with_uncertainty(mesh, uncertainty)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_icosphere;

    #[test]
    fn obj_round_trip_preserves_geometry() {
        let mesh = make_icosphere(0.37, 2).unwrap();
        let text = format_obj(&mesh);
        let back = parse_obj(&text).unwrap();
        assert_eq!(mesh.vertices(), back.vertices());
        assert_eq!(mesh.faces(), back.faces());
    }

    #[test]
    fn obj_fan_triangulates_quads() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_accepts_slash_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn obj_rejects_bad_input() {
        assert!(parse_obj("v 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").is_err());
        assert!(parse_obj("v 0 0 0\nbogus 1 2\n").is_err());
        // No faces at all.
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\n").is_err());
    }

    #[test]
    fn ply_header_and_colors() {
        let mesh = make_icosphere(1.0, 0).unwrap();
        let mut u = vec![0.0; 12];
        u[0] = 1.0;
        u[1] = 0.5;
        let ply = format_ply_with_uncertainty(&mesh, &u).unwrap();
        assert!(ply.starts_with("ply\nformat ascii 1.0\n"));
        assert!(ply.contains("element vertex 12"));
        assert!(ply.contains("element face 20"));
        assert!(ply.contains("property float uncertainty"));
        let body: Vec<&str> = ply.lines().skip_while(|l| *l != "end_header").skip(1).collect();
        // Vertex 0: fully uncertain -> pure red; vertex 2: untouched 0 -> green.
        assert!(body[0].ends_with("255 0 0 1"));
        assert!(body[1].contains("128 128 0"));
        assert!(body[2].ends_with("0 255 0 0"));
        // Faces are triangles.
        assert!(body[12].starts_with("3 "));
    }

    #[test]
    fn ply_rejects_mismatched_lengths() {
        let mesh = make_icosphere(1.0, 0).unwrap();
        assert!(format_ply_with_uncertainty(&mesh, &[0.0; 5]).is_err());
    }
}
