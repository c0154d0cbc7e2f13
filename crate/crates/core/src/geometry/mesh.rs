//! Closed triangle meshes: icospheres, validation and ASCII I/O.

use crate::error::{Error, Result};
use crate::geometry::Point;
use nalgebra::Matrix3;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<[usize; 3]>,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.check_indices()?;
        Ok(mesh)
    }

    fn check_indices(&self) -> Result<()> {
        let n = self.vertices.len();
        for (f, tri) in self.faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("face {f} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("face {f} is degenerate")));
            }
        }
        Ok(())
    }

    /// Icosahedron refined `level` times, projected onto the sphere of `radius`.
    ///
    /// Level `l` has `20 * 4^l` faces and `10 * 4^l + 2` vertices.
    pub fn icosphere(radius: f64, level: usize) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Point> = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Point::new(x, y, z).normalize())
        .collect();
        let mut faces = vec![
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
        for _ in 0..level {
            let (v, f) = split_faces(&vertices, &faces, true);
            vertices = v;
            faces = f;
        }
        for v in &mut vertices {
            *v *= radius;
        }
        Self { vertices, faces }
    }

    /// Midpoint subdivision (flat; the surface is not moved).
    pub fn subdivided(&self, times: usize) -> Self {
        let (mut v, mut f) = (self.vertices.clone(), self.faces.clone());
        for _ in 0..times {
            let next = split_faces(&v, &f, false);
            v = next.0;
            f = next.1;
        }
        Self { vertices: v, faces: f }
    }

    pub fn transformed(&self, q: &Matrix3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| q * v).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v * s).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn face_vertices(&self, f: usize) -> [Point; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Area-weighted normal (length = twice the area).
    pub fn face_normal2(&self, f: usize) -> Point {
        let [a, b, c] = self.face_vertices(f);
        (b - a).cross(&(c - a))
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| 0.5 * self.face_normal2(f).norm()).sum()
    }

    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0)
            .sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        for &[a, b, c] in &self.faces {
            total += (self.vertices[a] - self.vertices[b]).norm()
                + (self.vertices[b] - self.vertices[c]).norm()
                + (self.vertices[c] - self.vertices[a]).norm();
        }
        total / (3 * self.faces.len()) as f64
    }

    pub fn max_vertex_norm(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Every directed edge appears exactly once and its reverse exactly once.
    pub fn check_watertight(&self) -> Result<()> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.faces {
            for e in [(a, b), (b, c), (c, a)] {
                *directed.entry(e).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::InvalidMesh(format!("edge ({a},{b}) used {count} times with the same orientation")));
            }
            if directed.get(&(b, a)) != Some(&1) {
                return Err(Error::InvalidMesh(format!("edge ({a},{b}) has no opposite half-edge")));
            }
        }
        Ok(())
    }

    /// Generalised winding number of the surface around `p` (1 inside, 0 outside
    /// for an outward-oriented closed surface).
    pub fn winding_number(&self, p: &Point) -> f64 {
        let mut omega = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.face_vertices(f);
            let (a, b, c) = (a - p, b - p, c - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
            omega += 2.0 * num.atan2(den);
        }
        omega / (4.0 * PI)
    }

    /// ASCII OFF (`.off`) or Wavefront OBJ (`v`/`f` lines) from text.
    pub fn parse(text: &str) -> Result<Self> {
        let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')).unwrap_or("");
        if first.starts_with("OFF") {
            parse_off(text)
        } else {
            parse_obj(text)
        }
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }
}

fn split_faces(vertices: &[Point], faces: &[[usize; 3]], project: bool) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mut v = vertices.to_vec();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, v: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *mid.entry(key).or_insert_with(|| {
            let m = 0.5 * (v[a] + v[b]);
            v.push(if project { m.normalize() } else { m });
            v.len() - 1
        })
    };
    let mut out = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces {
        let ab = midpoint(a, b, &mut v);
        let bc = midpoint(b, c, &mut v);
        let ca = midpoint(c, a, &mut v);
        out.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    (v, out)
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    tok.and_then(|t| t.parse().ok()).ok_or(Error::Parse {
        line,
        msg: "expected a number".into(),
    })
}

fn parse_obj(text: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = parse_f64(it.next(), ln + 1)?;
                let y = parse_f64(it.next(), ln + 1)?;
                let z = parse_f64(it.next(), ln + 1)?;
                vertices.push(Point::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse {
                        line: ln + 1,
                        msg: "bad face index".into(),
                    })?;
                if idx.len() != 3 || idx.contains(&0) {
                    return Err(Error::Parse {
                        line: ln + 1,
                        msg: "faces must be 1-based triangles".into(),
                    });
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    SurfaceMesh::new(vertices, faces)
}

fn parse_off(text: &str) -> Result<SurfaceMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    let rest = header.trim_start_matches("OFF").trim();
    let counts_line = if rest.is_empty() {
        lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "missing counts".into(),
        })?
    } else {
        (ln, rest)
    };
    let counts: Vec<usize> = counts_line
        .1
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            line: counts_line.0,
            msg: "bad counts".into(),
        })?;
    if counts.len() < 2 {
        return Err(Error::Parse {
            line: counts_line.0,
            msg: "expected vertex and face counts".into(),
        });
    }
    let mut vertices = Vec::with_capacity(counts[0]);
    for _ in 0..counts[0] {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "truncated vertex list".into(),
        })?;
        let mut it = l.split_whitespace();
        vertices.push(Point::new(
            parse_f64(it.next(), ln)?,
            parse_f64(it.next(), ln)?,
            parse_f64(it.next(), ln)?,
        ));
    }
    let mut faces = Vec::with_capacity(counts[1]);
    for _ in 0..counts[1] {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "truncated face list".into(),
        })?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: ln,
                msg: "bad face".into(),
            })?;
        if idx.len() != 4 || idx[0] != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "only triangles are supported".into(),
            });
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    SurfaceMesh::new(vertices, faces)
}
