//! Plain-text mesh files (`.fsmesh`).
//!
//! ```text
//! fsmesh 1
//! RADIUS 1e0
//! VERTICES 19
//! <x> <y>
//! TRIANGLES 24
//! <v0> <v1> <v2>
//! CURVED 12
//! <v0> <v1> <mx> <my>
//! BOUNDARY 12
//! <v0> <v1>
//! ```
//!
//! Floats carry 17 significant digits so coordinates round-trip bit-exactly.
//! The CURVED and BOUNDARY sections are optional: without CURVED all edges
//! load straight; a BOUNDARY section is checked against the connectivity
//! derived from the triangles.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;

use super::Mesh;
use crate::error::{Error, Result};

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "fsmesh 1");
    let _ = writeln!(out, "RADIUS {:.16e}", mesh.domain_radius);
    let _ = writeln!(out, "VERTICES {}", mesh.num_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.16e} {:.16e}", v.x, v.y);
    }
    let _ = writeln!(out, "TRIANGLES {}", mesh.num_triangles());
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    let curved: Vec<(usize, &Vector2<f64>)> = mesh
        .curved_midpoints
        .iter()
        .enumerate()
        .filter_map(|(e, m)| m.as_ref().map(|m| (e, m)))
        .collect();
    let _ = writeln!(out, "CURVED {}", curved.len());
    for (e, m) in curved {
        let [a, b] = mesh.edges[e];
        let _ = writeln!(out, "{} {} {:.16e} {:.16e}", a, b, m.x, m.y);
    }
    let boundary: Vec<[usize; 2]> = mesh
        .edges
        .iter()
        .zip(&mesh.boundary_edge)
        .filter_map(|(e, &b)| b.then_some(*e))
        .collect();
    let _ = writeln!(out, "BOUNDARY {}", boundary.len());
    for [a, b] in boundary {
        let _ = writeln!(out, "{} {}", a, b);
    }
    std::fs::write(path, out)?;
    Ok(())
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for line in self.iter.by_ref() {
            self.line_no += 1;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Some((self.line_no, trimmed));
            }
        }
        None
    }
}

fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::MeshFormat {
        line,
        msg: msg.into(),
    }
}

fn parse_fields<T: std::str::FromStr>(line_no: usize, s: &str, n: usize) -> Result<Vec<T>> {
    let fields: Vec<&str> = s.split_whitespace().collect();
    if fields.len() != n {
        return Err(format_err(
            line_no,
            format!("expected {n} fields, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>()
                .map_err(|_| format_err(line_no, format!("cannot parse '{f}'")))
        })
        .collect()
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = Lines {
        iter: text.lines(),
        line_no: 0,
    };

    let (ln, header) = lines
        .next_content()
        .ok_or_else(|| format_err(0, "empty file"))?;
    if header != "fsmesh 1" {
        return Err(format_err(ln, format!("unknown header '{header}'")));
    }

    let mut radius = 1.0;
    let mut vertices: Vec<Vector2<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut curved: Vec<([usize; 2], Vector2<f64>)> = Vec::new();
    let mut boundary: Option<Vec<[usize; 2]>> = None;
    let mut seen_vertices = false;
    let mut seen_triangles = false;

    while let Some((ln, line)) = lines.next_content() {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match key {
            "RADIUS" => {
                radius = parse_fields::<f64>(ln, rest, 1)?[0];
            }
            "VERTICES" => {
                let count = parse_fields::<usize>(ln, rest, 1)?[0];
                for _ in 0..count {
                    let (ln, line) = lines
                        .next_content()
                        .ok_or_else(|| format_err(ln, "truncated VERTICES section"))?;
                    let xy = parse_fields::<f64>(ln, line, 2)?;
                    vertices.push(Vector2::new(xy[0], xy[1]));
                }
                seen_vertices = true;
            }
            "TRIANGLES" => {
                let count = parse_fields::<usize>(ln, rest, 1)?[0];
                for _ in 0..count {
                    let (ln, line) = lines
                        .next_content()
                        .ok_or_else(|| format_err(ln, "truncated TRIANGLES section"))?;
                    let v = parse_fields::<usize>(ln, line, 3)?;
                    for &vi in &v {
                        if vi >= vertices.len() {
                            return Err(format_err(
                                ln,
                                format!("vertex index {vi} out of range ({} vertices)", vertices.len()),
                            ));
                        }
                    }
                    triangles.push([v[0], v[1], v[2]]);
                }
                seen_triangles = true;
            }
            "CURVED" => {
                let count = parse_fields::<usize>(ln, rest, 1)?[0];
                for _ in 0..count {
                    let (ln, line) = lines
                        .next_content()
                        .ok_or_else(|| format_err(ln, "truncated CURVED section"))?;
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != 4 {
                        return Err(format_err(ln, "expected 'v0 v1 mx my'"));
                    }
                    let a: usize = fields[0]
                        .parse()
                        .map_err(|_| format_err(ln, format!("cannot parse '{}'", fields[0])))?;
                    let b: usize = fields[1]
                        .parse()
                        .map_err(|_| format_err(ln, format!("cannot parse '{}'", fields[1])))?;
                    let mx: f64 = fields[2]
                        .parse()
                        .map_err(|_| format_err(ln, format!("cannot parse '{}'", fields[2])))?;
                    let my: f64 = fields[3]
                        .parse()
                        .map_err(|_| format_err(ln, format!("cannot parse '{}'", fields[3])))?;
                    if a >= vertices.len() || b >= vertices.len() {
                        return Err(format_err(ln, "curved edge vertex out of range"));
                    }
                    curved.push(([a, b], Vector2::new(mx, my)));
                }
            }
            "BOUNDARY" => {
                let count = parse_fields::<usize>(ln, rest, 1)?[0];
                let mut pairs = Vec::with_capacity(count);
                for _ in 0..count {
                    let (ln, line) = lines
                        .next_content()
                        .ok_or_else(|| format_err(ln, "truncated BOUNDARY section"))?;
                    let v = parse_fields::<usize>(ln, line, 2)?;
                    pairs.push([v[0].min(v[1]), v[0].max(v[1])]);
                }
                boundary = Some(pairs);
            }
            other => {
                return Err(format_err(ln, format!("unknown section '{other}'")));
            }
        }
    }

    if !seen_vertices || !seen_triangles {
        return Err(format_err(
            lines.line_no,
            "missing VERTICES or TRIANGLES section",
        ));
    }

    let mesh = Mesh::from_parts(vertices, triangles, curved, radius)
        .map_err(|e| match e {
            Error::InvalidMesh(msg) => format_err(lines.line_no, msg),
            other => other,
        })?;

    if let Some(pairs) = boundary {
        let derived: std::collections::BTreeSet<[usize; 2]> = mesh
            .edges
            .iter()
            .zip(&mesh.boundary_edge)
            .filter_map(|(e, &b)| b.then_some(*e))
            .collect();
        let listed: std::collections::BTreeSet<[usize; 2]> = pairs.into_iter().collect();
        if derived != listed {
            return Err(format_err(
                lines.line_no,
                "BOUNDARY section disagrees with connectivity derived from TRIANGLES",
            ));
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_disk_mesh;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("disk3.fsmesh");
        let mesh = generate_disk_mesh(3).unwrap();
        save_mesh(&mesh, &path).unwrap();
        let loaded = load_mesh(&path).unwrap();
        assert_eq!(mesh.vertices.len(), loaded.vertices.len());
        for (a, b) in mesh.vertices.iter().zip(&loaded.vertices) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
        assert_eq!(mesh.triangles, loaded.triangles);
        assert_eq!(mesh.edges, loaded.edges);
        assert_eq!(
            mesh.curved_midpoints.iter().flatten().count(),
            loaded.curved_midpoints.iter().flatten().count()
        );
        for (a, b) in mesh.curved_midpoints.iter().zip(&loaded.curved_midpoints) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    assert_eq!(a.x.to_bits(), b.x.to_bits());
                    assert_eq!(a.y.to_bits(), b.y.to_bits());
                }
                (None, None) => {}
                _ => panic!("curved sections differ"),
            }
        }
        assert_eq!(mesh.domain_radius.to_bits(), loaded.domain_radius.to_bits());
    }

    #[test]
    fn missing_curved_section_loads_straight() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.fsmesh");
        std::fs::write(
            &path,
            "fsmesh 1\nVERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n0 1 2\n",
        )
        .unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert!(mesh.curved_midpoints.iter().all(|m| m.is_none()));
    }

    #[test]
    fn unknown_vertex_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fsmesh");
        std::fs::write(
            &path,
            "fsmesh 1\nVERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n0 1 7\n",
        )
        .unwrap();
        match load_mesh(&path) {
            Err(Error::MeshFormat { line, msg }) => {
                assert_eq!(line, 7);
                assert!(msg.contains('7'), "{msg}");
            }
            other => panic!("expected MeshFormat, got {other:?}"),
        }
    }

    #[test]
    fn garbage_float_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad2.fsmesh");
        std::fs::write(&path, "fsmesh 1\nVERTICES 1\n0 oops\n").unwrap();
        match load_mesh(&path) {
            Err(Error::MeshFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected MeshFormat, got {other:?}"),
        }
    }
}
