//! First-order Raviart-Thomas element on the reference triangle.
//!
//! The local space is P₁(T̂)² + x̂ P₁(T̂), dimension 8. Degrees of freedom:
//! on each edge the moments of the normal trace against {1, 2t-1} in the
//! ccw edge parameter t, and the two interior moments against constant
//! vector fields. The basis dual to these functionals is built once by
//! inverting the moment matrix of a monomial spanning set.

use std::sync::OnceLock;

use nalgebra::{Matrix2, SMatrix, Vector2};

use super::{edge_point, edge_normal, edge_rule, triangle_rule, RefPoint, EDGE_LENGTHS};

pub const DIM: usize = 8;

/// Spanning fields: P₁² interleaved, then x̂ x̂₁ and x̂ x̂₂.
fn monomial_values(p: &RefPoint) -> [Vector2<f64>; DIM] {
    let (x, y) = (p.x, p.y);
    [
        Vector2::new(1.0, 0.0),
        Vector2::new(x, 0.0),
        Vector2::new(y, 0.0),
        Vector2::new(0.0, 1.0),
        Vector2::new(0.0, x),
        Vector2::new(0.0, y),
        Vector2::new(x * x, x * y),
        Vector2::new(x * y, y * y),
    ]
}

fn monomial_divergences(p: &RefPoint) -> [f64; DIM] {
    let (x, y) = (p.x, p.y);
    [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 3.0 * x, 3.0 * y]
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
        Matrix2::new(2.0 * x, 0.0, y, x),
        Matrix2::new(y, x, 0.0, 2.0 * y),
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
        let n = edge_normal(edge);
        let len = EDGE_LENGTHS[edge];
        for (&t, &w) in erule.nodes.iter().zip(&erule.weights) {
            let vn = f(&edge_point(edge, t)).dot(&n) * w * len;
            dofs[2 * edge] += vn;
            dofs[2 * edge + 1] += vn * (2.0 * t - 1.0);
        }
    }
    for (p, &w) in trule.points.iter().zip(&trule.weights) {
        let v = f(p);
        dofs[6] += w * v.x;
        dofs[7] += w * v.y;
    }
    dofs
}

/// Columns are the monomial coefficients of the dual basis.
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
            .expect("RT1 moment matrix is unisolvent")
    })
}

/// Values and divergences of the eight dual basis fields at a point.
pub fn rt1_eval(p: &RefPoint) -> ([Vector2<f64>; DIM], [f64; DIM]) {
    let c = coefficients();
    let mv = monomial_values(p);
    let md = monomial_divergences(p);
    let mut values = [Vector2::zeros(); DIM];
    let mut divs = [0.0; DIM];
    for k in 0..DIM {
        for j in 0..DIM {
            let cjk = c[(j, k)];
            values[k] += cjk * mv[j];
            divs[k] += cjk * md[j];
        }
    }
    (values, divs)
}

/// Values, Jacobians and divergences of the dual basis at a point.
pub fn rt1_eval_full(
    p: &RefPoint,
) -> ([Vector2<f64>; DIM], [Matrix2<f64>; DIM], [f64; DIM]) {
    let c = coefficients();
    let mv = monomial_values(p);
    let mg = monomial_gradients(p);
    let md = monomial_divergences(p);
    let mut values = [Vector2::zeros(); DIM];
    let mut grads = [Matrix2::zeros(); DIM];
    let mut divs = [0.0; DIM];
    for k in 0..DIM {
        for j in 0..DIM {
            let cjk = c[(j, k)];
            values[k] += cjk * mv[j];
            grads[k] += cjk * mg[j];
            divs[k] += cjk * md[j];
        }
    }
    (values, grads, divs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basis_is_dual_to_the_functionals() {
        // independent quadrature degrees from the constructor's
        for k in 0..DIM {
            let erule = edge_rule(8).unwrap();
            let trule = triangle_rule(6).unwrap();
            let mut dofs = [0.0; DIM];
            for edge in 0..3 {
                let n = edge_normal(edge);
                for (&t, &w) in erule.nodes.iter().zip(&erule.weights) {
                    let p = edge_point(edge, t);
                    let (vals, _) = rt1_eval(&p);
                    let vn = vals[k].dot(&n) * w * EDGE_LENGTHS[edge];
                    dofs[2 * edge] += vn;
                    dofs[2 * edge + 1] += vn * (2.0 * t - 1.0);
                }
            }
            for (p, &w) in trule.points.iter().zip(&trule.weights) {
                let (vals, _) = rt1_eval(p);
                dofs[6] += w * vals[k].x;
                dofs[7] += w * vals[k].y;
            }
            for i in 0..DIM {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert_relative_eq!(dofs[i], expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn divergences_match_finite_differences() {
        let h = 1e-5;
        let p = RefPoint::new(0.31, 0.22);
        let (_, divs) = rt1_eval(&p);
        for k in 0..DIM {
            let dx = (rt1_eval(&RefPoint::new(p.x + h, p.y)).0[k].x
                - rt1_eval(&RefPoint::new(p.x - h, p.y)).0[k].x)
                / (2.0 * h);
            let dy = (rt1_eval(&RefPoint::new(p.x, p.y + h)).0[k].y
                - rt1_eval(&RefPoint::new(p.x, p.y - h)).0[k].y)
                / (2.0 * h);
            assert_relative_eq!(dx + dy, divs[k], epsilon = 1e-6);
        }
    }

    #[test]
    fn full_evaluation_gradients_match_finite_differences() {
        let h = 1e-5;
        let p = RefPoint::new(0.27, 0.41);
        let (vals, grads, divs) = rt1_eval_full(&p);
        let (vals_ref, divs_ref) = rt1_eval(&p);
        for k in 0..DIM {
            assert_relative_eq!((vals[k] - vals_ref[k]).norm(), 0.0, epsilon = 1e-15);
            assert_relative_eq!(divs[k], divs_ref[k], epsilon = 1e-15);
            for (l, step) in [(0, RefPoint::new(h, 0.0)), (1, RefPoint::new(0.0, h))] {
                let fd = (rt1_eval(&(p + step)).0[k] - rt1_eval(&(p - step)).0[k])
                    / (2.0 * h);
                assert!((Vector2::from(grads[k].column(l)) - fd).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn normal_trace_of_interior_basis_vanishes() {
        // the two interior basis fields must have zero edge moments,
        // hence zero P1 normal trace on every edge
        for k in [6, 7] {
            for edge in 0..3 {
                let n = edge_normal(edge);
                for t in [0.1, 0.5, 0.9] {
                    let (vals, _) = rt1_eval(&edge_point(edge, t));
                    assert!(vals[k].dot(&n).abs() < 1e-12);
                }
            }
        }
    }
}
