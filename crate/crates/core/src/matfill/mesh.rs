//! Triangle meshes: OFF input/output and icosphere generation.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Smallest accepted triangle area in m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Checks index ranges and rejects degenerate triangles.
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidInput(format!(
                    "triangle {t} references vertex {bad}, mesh has {}",
                    vertices.len()
                )));
            }
        }
        let mesh = TriangleMesh { vertices, triangles };
        for t in 0..mesh.len() {
            let area = mesh.area(t);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Triangle count `N`.
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    /// Largest distance between any two vertices.
    pub fn max_vertex_distance(&self) -> f64 {
        let v = &self.vertices;
        let mut best: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max(norm(sub(v[i], v[j])));
            }
        }
        best
    }

    pub fn write_off<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} 0", self.vertices.len(), self.triangles.len())?;
        for [x, y, z] in &self.vertices {
            writeln!(out, "{x:.17e} {y:.17e} {z:.17e}")?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(out, "3 {a} {b} {c}")?;
        }
        Ok(())
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: Point3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Reads an OFF file.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let file =
        std::fs::File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_off(std::io::BufReader::new(file))
}

/// Parses OFF text: `OFF`, a `nv nf ne` counts line, `nv` vertex lines and
/// `nf` face lines each starting with `3`. `#` starts a comment.
pub fn parse_off<R: BufRead>(input: R) -> Result<TriangleMesh> {
    let mut lines = input.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) => {
            let body = l.split('#').next().unwrap_or("").trim().to_string();
            (!body.is_empty()).then_some(Ok((i + 1, body)))
        }
        Err(e) => Some(Err(Error::from(e))),
    });
    let mut next = |what: &str| -> Result<(usize, String)> {
        lines.next().unwrap_or_else(|| {
            Err(Error::MeshParse { line: 0, msg: format!("unexpected end of file, expected {what}") })
        })
    };

    let (line, header) = next("OFF header")?;
    let Some(rest) = header.strip_prefix("OFF").map(str::trim) else {
        return Err(Error::MeshParse { line, msg: format!("expected OFF header, found {header:?}") });
    };
    let (line, counts) = if rest.is_empty() { next("counts line")? } else { (line, rest.to_string()) };
    let counts: Vec<usize> = parse_fields(line, &counts)?;
    if counts.len() < 2 {
        return Err(Error::MeshParse { line, msg: "counts line needs vertex and face counts".into() });
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = next("vertex")?;
        let xyz: Vec<f64> = parse_fields(line, &text)?;
        if xyz.len() < 3 {
            return Err(Error::MeshParse { line, msg: "vertex needs three coordinates".into() });
        }
        vertices.push([xyz[0], xyz[1], xyz[2]]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, text) = next("face")?;
        let mut tokens = text.split_whitespace();
        let count: usize = parse_token(line, tokens.next().unwrap_or(""))?;
        if count != 3 {
            return Err(Error::UnsupportedPolygon { line, vertices: count });
        }
        let mut tri = [0usize; 3];
        for slot in &mut tri {
            *slot = parse_token(line, tokens.next().unwrap_or(""))?;
            if *slot >= nv {
                return Err(Error::MeshParse { line, msg: format!("vertex index {slot} out of range (nv = {nv})") });
            }
        }
        triangles.push(tri);
    }
    TriangleMesh::new(vertices, triangles)
}

fn parse_fields<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace().map(|t| parse_token(line, t)).collect()
}

fn parse_token<T: std::str::FromStr>(line: usize, token: &str) -> Result<T> {
    token.parse().map_err(|_| Error::MeshParse { line, msg: format!("cannot parse {token:?}") })
}

pub const MAX_SUBDIVISIONS: u32 = 6;

/// Icosahedron subdivided `subdivisions` times with every vertex projected
/// onto the sphere; `20·4^subdivisions` triangles.
pub fn generate_sphere_mesh(radius: f64, subdivisions: u32) -> Result<TriangleMesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be > 0, got {radius}")));
    }
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(Error::InvalidInput(format!(
            "subdivisions must lie in 0..={MAX_SUBDIVISIONS}, got {subdivisions}"
        )));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
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
    for v in &mut vertices {
        *v = project(*v, 1.0);
    }
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point3>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(project([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0], 1.0));
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next_faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next_faces;
    }
    for v in &mut vertices {
        *v = project(*v, radius);
    }
    TriangleMesh::new(vertices, faces)
}

fn project(p: Point3, radius: f64) -> Point3 {
    let s = radius / norm(p);
    [p[0] * s, p[1] * s, p[2] * s]
}
