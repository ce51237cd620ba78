//! Reference element: geometry conventions, shape functions and quadrature.
//!
//! The reference triangle T̂ and its local node numbering:
//!
//! ```text
//!   x̂₂
//!   â₂ = (0,1)
//!    |\
//!    | \
//!   â₄  â₃ = (1/2,1/2)      vertices â₀, â₁, â₂
//!    |    \                 node 3+i = midpoint of edge i
//!    |     \                edge i is opposite vertex i and runs
//!   â₀--â₅--â₁   x̂₁         from vertex i+1 to vertex i+2 (ccw)
//!  (0,0)    (1,0)
//! ```
//!
//! Every edge carries the two Gauss-Legendre points at parameters
//! t = (1 ∓ 1/√3)/2; nonconforming functions are glued there.

pub mod nedelec;
pub mod quadrature;
pub mod rt;

use nalgebra::Vector2;

pub use quadrature::{
    edge_rule, quad_rule, triangle_rule, EdgeRule, QuadDomain, QuadRule, TriRule,
    MAX_EDGE_DEGREE, MAX_TRIANGLE_DEGREE,
};

/// A point (x̂₁, x̂₂) in the closed reference triangle.
pub type RefPoint = Vector2<f64>;

pub const VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// The six Lagrange nodes: vertices, then edge midpoints (node 3+i on edge i).
pub const NODES: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.5],
    [0.0, 0.5],
    [0.5, 0.0],
];

/// Endpoints of edge i in ccw order (edge i is opposite vertex i).
pub const EDGE_VERTICES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

pub const EDGE_LENGTHS: [f64; 3] = [std::f64::consts::SQRT_2, 1.0, 1.0];

/// Gauss-Legendre parameters of the 2-point rule on [0, 1].
pub const GAUSS_LO: f64 = 0.5 - 0.5 / 1.7320508075688772;
pub const GAUSS_HI: f64 = 0.5 + 0.5 / 1.7320508075688772;

pub fn ref_vertex(i: usize) -> RefPoint {
    RefPoint::new(VERTICES[i][0], VERTICES[i][1])
}

pub fn ref_node(i: usize) -> RefPoint {
    RefPoint::new(NODES[i][0], NODES[i][1])
}

/// Point at parameter t ∈ [0, 1] along edge i (ccw orientation).
pub fn edge_point(edge: usize, t: f64) -> RefPoint {
    let [a, b] = EDGE_VERTICES[edge];
    (1.0 - t) * ref_vertex(a) + t * ref_vertex(b)
}

/// Unit outward normal of edge i.
pub fn edge_normal(edge: usize) -> Vector2<f64> {
    let [a, b] = EDGE_VERTICES[edge];
    let t = ref_vertex(b) - ref_vertex(a);
    Vector2::new(t.y, -t.x) / t.norm()
}

/// Unit tangent of edge i in ccw orientation.
pub fn edge_tangent(edge: usize) -> Vector2<f64> {
    let [a, b] = EDGE_VERTICES[edge];
    let t = ref_vertex(b) - ref_vertex(a);
    t / t.norm()
}

/// The two Gauss-Legendre points of edge i, in order of increasing t.
pub fn gauss_legendre_edge_points(edge: usize) -> [RefPoint; 2] {
    [edge_point(edge, GAUSS_LO), edge_point(edge, GAUSS_HI)]
}

/// Values and x̂-gradients of the six P2 Lagrange shape functions.
pub fn p2_eval(p: &RefPoint) -> ([f64; 6], [Vector2<f64>; 6]) {
    let (x, y) = (p.x, p.y);
    let l0 = 1.0 - x - y;
    let values = [
        l0 * (2.0 * l0 - 1.0),
        x * (2.0 * x - 1.0),
        y * (2.0 * y - 1.0),
        4.0 * x * y,
        4.0 * y * l0,
        4.0 * l0 * x,
    ];
    let g0 = Vector2::new(-1.0, -1.0) * (4.0 * l0 - 1.0);
    let gradients = [
        g0,
        Vector2::new(4.0 * x - 1.0, 0.0),
        Vector2::new(0.0, 4.0 * y - 1.0),
        Vector2::new(4.0 * y, 4.0 * x),
        Vector2::new(-4.0 * y, 4.0 * (l0 - y)),
        Vector2::new(4.0 * (l0 - x), -4.0 * x),
    ];
    (values, gradients)
}

/// Value and gradient of the Gauss-Legendre bubble
/// φ(x̂) = 2 - 3[(1-x̂₁-x̂₂)² + x̂₁² + x̂₂²],
/// which vanishes at all six edge Gauss points.
pub fn bubble_eval(p: &RefPoint) -> (f64, Vector2<f64>) {
    let (x, y) = (p.x, p.y);
    let l0 = 1.0 - x - y;
    let value = 2.0 - 3.0 * (l0 * l0 + x * x + y * y);
    let gradient = Vector2::new(
        6.0 * (1.0 - 2.0 * x - y),
        6.0 * (1.0 - x - 2.0 * y),
    );
    (value, gradient)
}

/// Values of the three P1 barycentric shape functions.
pub fn p1_eval(p: &RefPoint) -> [f64; 3] {
    [1.0 - p.x - p.y, p.x, p.y]
}

pub const P1_GRADIENTS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Reference shape-function families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    P1,
    P2Lagrange,
    FsBubble,
    Rt1,
    Ned1Deg2,
}

impl Family {
    pub fn dim(self) -> usize {
        match self {
            Family::P1 => 3,
            Family::P2Lagrange => 6,
            Family::FsBubble => 2,
            Family::Rt1 => 8,
            Family::Ned1Deg2 => 8,
        }
    }
}
