//! Quadrature rules on the reference triangle and the reference edge.
//!
//! Triangle rules are conical products: the Duffy substitution
//! x̂₁ = ξ(1-η), x̂₂ = η collapses the triangle onto the unit square,
//!
//!   ∫_T̂ f dx̂ = ∫₀¹ ∫₀¹ f(ξ(1-η), η) (1-η) dξ dη,
//!
//! and the factor (1-η) is absorbed as a Gauss-Jacobi weight. Both 1d
//! factors come from Golub-Welsch, so every weight is positive at every
//! degree. Edge rules are plain Gauss-Legendre on [0, 1].

use nalgebra::DMatrix;

use super::RefPoint;
use crate::error::{Error, Result};

/// Largest total polynomial degree integrated exactly on the triangle.
pub const MAX_TRIANGLE_DEGREE: usize = 16;
/// Largest polynomial degree integrated exactly on the edge.
pub const MAX_EDGE_DEGREE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadDomain {
    Triangle,
    Edge,
}

/// Rule on the reference triangle; weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub points: Vec<RefPoint>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule on [0, 1]; weights sum to 1.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub enum QuadRule {
    Triangle(TriRule),
    Edge(EdgeRule),
}

pub fn quad_rule(domain: QuadDomain, degree: usize) -> Result<QuadRule> {
    match domain {
        QuadDomain::Triangle => triangle_rule(degree).map(QuadRule::Triangle),
        QuadDomain::Edge => edge_rule(degree).map(QuadRule::Edge),
    }
}

pub fn triangle_rule(degree: usize) -> Result<TriRule> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::QuadratureDegree {
            domain: "triangle",
            degree,
            max: MAX_TRIANGLE_DEGREE,
        });
    }
    let m = degree / 2 + 1;
    let (xi, wxi) = gauss_legendre_01(m);
    let (eta, weta) = gauss_jacobi10_01(m);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for b in 0..m {
        for a in 0..m {
            points.push(RefPoint::new(xi[a] * (1.0 - eta[b]), eta[b]));
            weights.push(wxi[a] * weta[b]);
        }
    }
    Ok(TriRule {
        points,
        weights,
        degree,
    })
}

pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    if degree > MAX_EDGE_DEGREE {
        return Err(Error::QuadratureDegree {
            domain: "edge",
            degree,
            max: MAX_EDGE_DEGREE,
        });
    }
    let m = degree / 2 + 1;
    let (nodes, weights) = gauss_legendre_01(m);
    Ok(EdgeRule {
        nodes,
        weights,
        degree,
    })
}

/// Nodes and weights for ∫₀¹ f(x) dx, exact through degree 2m-1.
fn gauss_legendre_01(m: usize) -> (Vec<f64>, Vec<f64>) {
    // Monic Legendre recurrence on [-1, 1]: a_k = 0, b_k^2 = k^2/(4k^2 - 1).
    let diag = vec![0.0; m];
    let off: Vec<f64> = (1..m)
        .map(|k| {
            let k = k as f64;
            (k * k / (4.0 * k * k - 1.0)).sqrt()
        })
        .collect();
    let (x, w) = golub_welsch(&diag, &off, 2.0);
    (
        x.iter().map(|&t| 0.5 * (1.0 + t)).collect(),
        w.iter().map(|&w| 0.5 * w).collect(),
    )
}

/// Nodes and weights for ∫₀¹ (1-x) f(x) dx, exact through degree 2m-1.
fn gauss_jacobi10_01(m: usize) -> (Vec<f64>, Vec<f64>) {
    // Jacobi weight (1-x)^1 on [-1, 1]:
    //   a_k = -1 / ((2k+1)(2k+3)),  b_k^2 = k(k+1) / (2k+1)^2,  mu_0 = 2.
    let diag: Vec<f64> = (0..m)
        .map(|k| {
            let k = k as f64;
            -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0))
        })
        .collect();
    let off: Vec<f64> = (1..m)
        .map(|k| {
            let k = k as f64;
            (k * (k + 1.0)).sqrt() / (2.0 * k + 1.0)
        })
        .collect();
    let (x, w) = golub_welsch(&diag, &off, 2.0);
    // eta = (1+xi)/2 maps the weight (1-xi) to 2(1-eta); together with
    // d(xi) = 2 d(eta) the rule for ∫ (1-eta) f(eta) d(eta) scales by 1/4.
    (
        x.iter().map(|&t| 0.5 * (1.0 + t)).collect(),
        w.iter().map(|&w| 0.25 * w).collect(),
    )
}

/// Eigen-decomposition of the symmetric tridiagonal recurrence matrix;
/// nodes are the eigenvalues, weights mu0 times squared first components.
fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let m = diag.len();
    if m == 1 {
        return (vec![diag[0]], vec![mu0]);
    }
    let mut jm = DMatrix::zeros(m, m);
    for i in 0..m {
        jm[(i, i)] = diag[i];
    }
    for i in 0..m - 1 {
        jm[(i, i + 1)] = off[i];
        jm[(i + 1, i)] = off[i];
    }
    let eig = jm.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
