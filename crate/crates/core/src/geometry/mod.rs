//! Meshes of the unit disk and the isoparametric element geometry.
//!
//! The generator lays out concentric rings of vertices,
//!
//! ```text
//!        ring k: 6k vertices at radius k/n
//!
//!          . - .           ring strips are triangulated by an
//!        /  \ /  \         angular two-pointer sweep, 6(2k-1)
//!       . -- o -- .        triangles between rings k-1 and k,
//!        \  / \  /         6n^2 triangles in total
//!          . - .
//! ```
//!
//! Only edges on the outermost ring are curved: their midpoint node is the
//! radial projection of the chord midpoint onto the circle. Every interior
//! element therefore keeps an affine map, and the curved boundary layer
//! carries the full quadratic map
//!
//!   F_T(x̂) = Σ_j a_j N_j(x̂),
//!
//! with N_j the six P2 shape functions and a_j the physical nodes. The
//! contravariant Piola transform built on it is A_T = DF_T / det DF_T.

pub mod io;

use std::collections::HashMap;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::refelem::{p2_eval, RefPoint};

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vector2<f64>>,
    /// Vertex triples in ccw order.
    pub triangles: Vec<[usize; 3]>,
    /// Vertex pairs (lo, hi), derived from the triangles.
    pub edges: Vec<[usize; 2]>,
    /// Edge opposite local vertex i of each triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Incident triangles per edge; boundary edges have one.
    pub edge_triangles: Vec<(usize, Option<usize>)>,
    pub boundary_edge: Vec<bool>,
    pub boundary_vertex: Vec<bool>,
    /// Displaced midpoint for curved (boundary) edges.
    pub curved_midpoints: Vec<Option<Vector2<f64>>>,
    pub domain_radius: f64,
}

impl Mesh {
    /// Assembles connectivity from raw vertices and triangles and validates.
    pub fn from_parts(
        vertices: Vec<Vector2<f64>>,
        triangles: Vec<[usize; 3]>,
        curved: Vec<([usize; 2], Vector2<f64>)>,
        domain_radius: f64,
    ) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} of {nv}"
                    )));
                }
            }
        }

        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        let mut edge_triangles: Vec<(usize, Option<usize>)> = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push((t, None));
                    edges.len() - 1
                });
                triangle_edges[t][i] = id;
                if edge_triangles[id].0 != t {
                    if edge_triangles[id].1.is_some() {
                        return Err(Error::InvalidMesh(format!(
                            "edge {:?} has more than two incident triangles",
                            key
                        )));
                    }
                    edge_triangles[id].1 = Some(t);
                }
            }
        }

        let boundary_edge: Vec<bool> = edge_triangles.iter().map(|e| e.1.is_none()).collect();
        let mut boundary_vertex = vec![false; nv];
        for (e, &[a, b]) in edges.iter().enumerate() {
            if boundary_edge[e] {
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
            }
        }

        let mut curved_midpoints = vec![None; edges.len()];
        for (pair, mid) in curved {
            let key = [pair[0].min(pair[1]), pair[0].max(pair[1])];
            let id = *edge_ids.get(&key).ok_or_else(|| {
                Error::InvalidMesh(format!("curved midpoint on unknown edge {:?}", key))
            })?;
            curved_midpoints[id] = Some(mid);
        }

        let mesh = Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            edge_triangles,
            boundary_edge,
            boundary_vertex,
            curved_midpoints,
            domain_radius,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.vertices[tri[0]];
            let b = self.vertices[tri[1]];
            let c = self.vertices[tri[2]];
            let area2 = (b - a).perp(&(c - a));
            if area2 <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is not ccw (doubled area {area2:.3e})"
                )));
            }
        }
        for (e, mid) in self.curved_midpoints.iter().enumerate() {
            if let Some(m) = mid {
                if !self.boundary_edge[e] {
                    return Err(Error::InvalidMesh(format!(
                        "interior edge {e} has a curved midpoint"
                    )));
                }
                if (m.norm() - self.domain_radius).abs() > 1e-9 {
                    return Err(Error::InvalidMesh(format!(
                        "curved midpoint of edge {e} is off the domain circle"
                    )));
                }
            }
        }
        for t in 0..self.triangles.len() {
            let curved = self.triangle_edges[t]
                .iter()
                .filter(|&&e| self.curved_midpoints[e].is_some())
                .count();
            if curved > 1 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has {curved} curved edges"
                )));
            }
        }
        Ok(())
    }

    /// Physical midpoint node of an edge (displaced if curved).
    pub fn edge_midpoint(&self, e: usize) -> Vector2<f64> {
        self.curved_midpoints[e].unwrap_or_else(|| {
            let [a, b] = self.edges[e];
            0.5 * (self.vertices[a] + self.vertices[b])
        })
    }

    /// The quadratic edge curve x(s), s ∈ [0, 1] from the lower vertex,
    /// and its derivative x'(s).
    pub fn edge_curve(&self, e: usize, s: f64) -> (Vector2<f64>, Vector2<f64>) {
        let [lo, hi] = self.edges[e];
        let p0 = self.vertices[lo];
        let p1 = self.vertices[hi];
        let m = self.edge_midpoint(e);
        let x = (1.0 - s) * (1.0 - 2.0 * s) * p0 + 4.0 * s * (1.0 - s) * m
            + s * (2.0 * s - 1.0) * p1;
        let dx = (4.0 * s - 3.0) * p0 + (4.0 - 8.0 * s) * m + (4.0 * s - 1.0) * p1;
        (x, dx)
    }

    /// True when `t` traverses its local edge `i` from the lower global
    /// vertex to the higher one.
    pub fn edge_is_forward(&self, t: usize, i: usize) -> bool {
        let tri = self.triangles[t];
        tri[(i + 1) % 3] < tri[(i + 2) % 3]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Largest element diameter, measured over the six element nodes.
    pub fn h_max(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in 0..self.num_triangles() {
            let g = geometry_of(self, t);
            h = h.max(g.diameter());
        }
        h
    }
}

/// Triangulation of the unit disk with n concentric rings.
///
/// Ring k holds 6k vertices at radius k/n, giving 1 + 3n(n+1) vertices and
/// 6n² triangles. Boundary edge midpoints are projected radially onto the
/// unit circle; everything else stays straight.
pub fn generate_disk_mesh(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidMesh(format!(
            "disk mesh needs n >= 2 rings, got {n}"
        )));
    }
    let ring_start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };

    let mut vertices = vec![Vector2::zeros()];
    for k in 1..=n {
        let r = k as f64 / n as f64;
        for j in 0..6 * k {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / (6.0 * k as f64);
            vertices.push(Vector2::new(r * angle.cos(), r * angle.sin()));
        }
    }

    let mut triangles = Vec::with_capacity(6 * n * n);
    for s in 0..6 {
        triangles.push([ring_start(1) + s, ring_start(1) + (s + 1) % 6, 0]);
    }
    for k in 2..=n {
        for s in 0..6 {
            let outer = |j: usize| ring_start(k) + (s * k + j) % (6 * k);
            let inner = |j: usize| ring_start(k - 1) + (s * (k - 1) + j) % (6 * (k - 1));
            let outer_angle = |j: usize| (s * k + j) as f64 / k as f64;
            let inner_angle = |j: usize| (s * (k - 1) + j) as f64 / (k - 1) as f64;
            let (mut a, mut b) = (0, 0);
            while a < k || b < k - 1 {
                let advance_outer = if b == k - 1 {
                    true
                } else if a == k {
                    false
                } else {
                    outer_angle(a + 1) <= inner_angle(b + 1)
                };
                if advance_outer {
                    triangles.push([outer(a), outer(a + 1), inner(b)]);
                    a += 1;
                } else {
                    triangles.push([inner(b), outer(a), inner(b + 1)]);
                    b += 1;
                }
            }
        }
    }

    let boundary_pairs: Vec<([usize; 2], Vector2<f64>)> = (0..6 * n)
        .map(|j| {
            let a = ring_start(n) + j;
            let b = ring_start(n) + (j + 1) % (6 * n);
            let chord_mid = 0.5 * (vertices[a] + vertices[b]);
            ([a, b], chord_mid / chord_mid.norm())
        })
        .collect();

    Mesh::from_parts(vertices, triangles, boundary_pairs, 1.0)
}

/// Crisscross triangulation of the unit square: a cells × cells grid with
/// every cell split into four triangles around its center.
///
/// ```text
///   +---+---+
///   |\ /|\ /|
///   | x | x |      every cell center is a singular vertex
///   |/ \|/ \|      (its four edges lie on two straight lines)
///   +---+---+
/// ```
///
/// Useful as a stability testbed: the singular vertices carry exact
/// spurious pressure modes for the plain quadratic velocity pair, so the
/// effect of the divergence bubbles shows up as a hard rank change rather
/// than a gradual degradation.
pub fn generate_square_crisscross_mesh(cells: usize) -> Result<Mesh> {
    if cells < 1 {
        return Err(Error::InvalidMesh("crisscross mesh needs cells >= 1".into()));
    }
    let np = cells + 1;
    let grid = |i: usize, j: usize| j * np + i;
    let mut vertices = Vec::with_capacity(np * np + cells * cells);
    for j in 0..np {
        for i in 0..np {
            vertices.push(Vector2::new(
                i as f64 / cells as f64,
                j as f64 / cells as f64,
            ));
        }
    }
    let mut triangles = Vec::with_capacity(4 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let center = vertices.len();
            vertices.push(Vector2::new(
                (i as f64 + 0.5) / cells as f64,
                (j as f64 + 0.5) / cells as f64,
            ));
            let (a, b) = (grid(i, j), grid(i + 1, j));
            let (c, d) = (grid(i + 1, j + 1), grid(i, j + 1));
            triangles.push([a, b, center]);
            triangles.push([b, c, center]);
            triangles.push([c, d, center]);
            triangles.push([d, a, center]);
        }
    }
    Mesh::from_parts(vertices, triangles, Vec::new(), 1.0)
}

/// Cached quadratic map of one element.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub element: usize,
    /// Physical nodes in local order: vertices, then edge midpoints.
    pub nodes: [Vector2<f64>; 6],
    df0: Matrix2<f64>,
    dh: [Matrix2<f64>; 2],
    /// Area of the straight-sided triangle spanned by the vertices.
    pub affine_area: f64,
    pub curved: bool,
}

/// All Piola quantities of one element at one reference point.
#[derive(Debug, Clone)]
pub struct PiolaEval {
    pub df: Matrix2<f64>,
    pub det: f64,
    /// A_T = DF / det DF.
    pub a: Matrix2<f64>,
    /// A_T⁻¹ = det DF · DF⁻¹ (the adjugate of DF).
    pub a_inv: Matrix2<f64>,
    pub df_inv: Matrix2<f64>,
    /// ∂A_T/∂x̂₁ and ∂A_T/∂x̂₂.
    pub da: [Matrix2<f64>; 2],
}

pub fn geometry_of(mesh: &Mesh, element: usize) -> ElementGeometry {
    let tri = mesh.triangles[element];
    let mut nodes = [Vector2::zeros(); 6];
    for i in 0..3 {
        nodes[i] = mesh.vertices[tri[i]];
    }
    let mut curved = false;
    for i in 0..3 {
        let e = mesh.triangle_edges[element][i];
        curved |= mesh.curved_midpoints[e].is_some();
        nodes[3 + i] = mesh.edge_midpoint(e);
    }

    let df_at = |p: &RefPoint| {
        let (_, grads) = p2_eval(p);
        let mut df = Matrix2::zeros();
        for j in 0..6 {
            df += nodes[j] * grads[j].transpose();
        }
        df
    };
    let df0 = df_at(&RefPoint::new(0.0, 0.0));
    let dh = [
        df_at(&RefPoint::new(1.0, 0.0)) - df0,
        df_at(&RefPoint::new(0.0, 1.0)) - df0,
    ];
    let affine_area = 0.5 * (nodes[1] - nodes[0]).perp(&(nodes[2] - nodes[0]));

    ElementGeometry {
        element,
        nodes,
        df0,
        dh,
        affine_area,
        curved,
    }
}

impl ElementGeometry {
    /// F_T(x̂).
    pub fn map(&self, p: &RefPoint) -> Vector2<f64> {
        let (vals, _) = p2_eval(p);
        let mut x = Vector2::zeros();
        for j in 0..6 {
            x += vals[j] * self.nodes[j];
        }
        x
    }

    /// DF_T(x̂); affine in x̂ because F_T is quadratic.
    pub fn jacobian(&self, p: &RefPoint) -> Matrix2<f64> {
        self.df0 + p.x * self.dh[0] + p.y * self.dh[1]
    }

    /// Derivative of the Jacobian in reference direction k (constant,
    /// since the map is quadratic).
    pub fn d_jacobian(&self, k: usize) -> Matrix2<f64> {
        self.dh[k]
    }

    pub fn piola_at(&self, p: &RefPoint) -> Result<PiolaEval> {
        let df = self.jacobian(p);
        let det = df[(0, 0)] * df[(1, 1)] - df[(0, 1)] * df[(1, 0)];
        if det <= 0.0 {
            return Err(Error::DegenerateElement {
                element: self.element,
                det,
                x1: p.x,
                x2: p.y,
            });
        }
        let a_inv = Matrix2::new(df[(1, 1)], -df[(0, 1)], -df[(1, 0)], df[(0, 0)]);
        let df_inv = a_inv / det;
        let a = df / det;
        let mut da = [Matrix2::zeros(); 2];
        for k in 0..2 {
            let h = self.dh[k];
            let ddet = h[(0, 0)] * df[(1, 1)] + df[(0, 0)] * h[(1, 1)]
                - h[(0, 1)] * df[(1, 0)]
                - df[(0, 1)] * h[(1, 0)];
            da[k] = (h * det - df * ddet) / (det * det);
        }
        Ok(PiolaEval {
            df,
            det,
            a,
            a_inv,
            df_inv,
            da,
        })
    }

    /// Covariant factor DF_T⁻ᵀ.
    pub fn covariant_at(&self, p: &RefPoint) -> Result<Matrix2<f64>> {
        Ok(self.piola_at(p)?.df_inv.transpose())
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..6 {
            for j in i + 1..6 {
                d = d.max((self.nodes[i] - self.nodes[j]).norm());
            }
        }
        d
    }
}
