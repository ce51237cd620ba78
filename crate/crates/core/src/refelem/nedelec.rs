//! Nedelec element of the first kind, degree 2, on the reference triangle.
//!
//! The local space is the 90-degree rotation of the Raviart-Thomas space,
//! P₁(T̂)² + (-x̂₂, x̂₁) P₁(T̂), dimension 8. Degrees of freedom: on each edge
//! the moments of the tangential trace against {1, 2t-1}, and two interior
//! moments against constant vector fields. Gradients of quadratic scalars
//! lie in this space, which is what makes the interpolation pair with the
//! scalar P2 element commute.

use std::sync::OnceLock;

use nalgebra::{Matrix2, SMatrix, Vector2};

use super::{edge_point, edge_rule, edge_tangent, triangle_rule, RefPoint, EDGE_LENGTHS};

pub const DIM: usize = 8;

/// Spanning fields: P₁² interleaved, then (-x̂₂, x̂₁) x̂₁ and (-x̂₂, x̂₁) x̂₂.
fn monomial_values(p: &RefPoint) -> [Vector2<f64>; DIM] {
    let (x, y) = (p.x, p.y);
    [
        Vector2::new(1.0, 0.0),
        Vector2::new(x, 0.0),
        Vector2::new(y, 0.0),
        Vector2::new(0.0, 1.0),
        Vector2::new(0.0, x),
        Vector2::new(0.0, y),
        Vector2::new(-x * y, x * x),
        Vector2::new(-y * y, x * y),
    ]
}

/// Jacobians (∂ component / ∂ coordinate) of the spanning fields.
fn monomial_gradients(p: &RefPoint) -> [Matrix2<f64>; DIM] {
    let (x, y) = (p.x, p.y);
    [
        Matrix2::zeros(),
        Matrix2::new(1.0, 0.0, 0.0, 0.0),
        Matrix2::new(0.0, 1.0, 0.0, 0.0),
        Matrix2::zeros(),
        Matrix2::new(0.0, 0.0, 1.0, 0.0),
        Matrix2::new(0.0, 0.0, 0.0, 1.0),
        Matrix2::new(-y, -x, 2.0 * x, 0.0),
        Matrix2::new(0.0, -2.0 * y, y, x),
    ]
}

/// The eight reference functionals applied to a vector field.
///
/// Order: edge 0 {1, 2t-1}, edge 1 {1, 2t-1}, edge 2 {1, 2t-1}, then
/// interior moments against e₁ and e₂.
pub fn ref_dofs(f: impl Fn(&RefPoint) -> Vector2<f64>) -> [f64; DIM] {
    let erule = edge_rule(4).expect("static degree");
    let trule = triangle_rule(4).expect("static degree");
    let mut dofs = [0.0; DIM];
    for edge in 0..3 {
        let t_hat = edge_tangent(edge);
        let len = EDGE_LENGTHS[edge];
        for (&t, &w) in erule.nodes.iter().zip(&erule.weights) {
            let vt = f(&edge_point(edge, t)).dot(&t_hat) * w * len;
            dofs[2 * edge] += vt;
            dofs[2 * edge + 1] += vt * (2.0 * t - 1.0);
        }
    }
    for (p, &w) in trule.points.iter().zip(&trule.weights) {
        let v = f(p);
        dofs[6] += w * v.x;
        dofs[7] += w * v.y;
    }
    dofs
}

fn coefficients() -> &'static SMatrix<f64, DIM, DIM> {
    static COEFF: OnceLock<SMatrix<f64, DIM, DIM>> = OnceLock::new();
    COEFF.get_or_init(|| {
        let mut dof_matrix = SMatrix::<f64, DIM, DIM>::zeros();
        for j in 0..DIM {
            let dofs = ref_dofs(|p| monomial_values(p)[j]);
            for i in 0..DIM {
                dof_matrix[(i, j)] = dofs[i];
            }
        }
        dof_matrix
            .try_inverse()
            .expect("Nedelec moment matrix is unisolvent")
    })
}

/// Values of the eight dual basis fields at a point.
pub fn ned1_eval(p: &RefPoint) -> [Vector2<f64>; DIM] {
    let c = coefficients();
    let mv = monomial_values(p);
    let mut values = [Vector2::zeros(); DIM];
    for k in 0..DIM {
        for j in 0..DIM {
            values[k] += c[(j, k)] * mv[j];
        }
    }
    values
}

/// Values and Jacobians of the dual basis at a point.
pub fn ned1_eval_full(p: &RefPoint) -> ([Vector2<f64>; DIM], [Matrix2<f64>; DIM]) {
    let c = coefficients();
    let mv = monomial_values(p);
    let mg = monomial_gradients(p);
    let mut values = [Vector2::zeros(); DIM];
    let mut grads = [Matrix2::zeros(); DIM];
    for k in 0..DIM {
        for j in 0..DIM {
            values[k] += c[(j, k)] * mv[j];
            grads[k] += c[(j, k)] * mg[j];
        }
    }
    (values, grads)
}
