//! Reconstruction and interpolation operators.
//!
//! * `reconstruct` maps a velocity coefficient vector into the parametric
//!   Raviart-Thomas space by taking the reference moments elementwise.
//!   The edge moments of a velocity field are single valued (the P2 part
//!   carries a continuous normal flux density, the bubble moments vanish
//!   through the two-point Gauss rule), so writing each edge once from its
//!   first incident element is a choice of evaluation order, not of value.
//! * `interpolate_y` and `interpolate_sigma` are the canonical commuting
//!   interpolations: tangential edge moments plus interior moments for the
//!   covariant space, vertex values plus edge means for the scalar space.
//!   They satisfy Π_Y ∇p = ∇ Π_Σ p exactly whenever the data quadratures
//!   are exact, which is the identity behind pressure robustness.
//! * `nodal_velocity_interpolant` fills the P2 block with physical point
//!   values and leaves the bubbles at zero.

use nalgebra::{SMatrix, Vector2};

use crate::error::Result;
use crate::geometry::{geometry_of, ElementGeometry, Mesh};
use crate::refelem::{edge_rule, rt, triangle_rule, MAX_EDGE_DEGREE, MAX_TRIANGLE_DEGREE};
use crate::spaces::{velocity_ref_basis, Spaces, V_LOCAL_DIM};

/// Column k holds the eight reference Raviart-Thomas moments of the k-th
/// local velocity basis field.
pub fn reconstruction_matrix(
    geom: &ElementGeometry,
) -> Result<SMatrix<f64, { rt::DIM }, V_LOCAL_DIM>> {
    let basis = velocity_ref_basis(geom)?;
    let mut r = SMatrix::<f64, { rt::DIM }, V_LOCAL_DIM>::zeros();
    for k in 0..V_LOCAL_DIM {
        let dofs = rt::ref_dofs(|p| basis.values(p)[k]);
        for i in 0..rt::DIM {
            r[(i, k)] = dofs[i];
        }
    }
    Ok(r)
}

/// Divergence-preserving reconstruction of a velocity field.
pub fn reconstruct(mesh: &Mesh, spaces: &Spaces, v: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(v.len(), spaces.vh.dim);
    let mut out = vec![0.0; spaces.rh.dim];
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        let rmat = reconstruction_matrix(&geom)?;
        let local = spaces.vh.gather(t, v);
        let coeffs = SMatrix::<f64, V_LOCAL_DIM, 1>::from_column_slice(&local);
        let moments = rmat * coeffs;
        for (i, &(g, s)) in spaces.rh.elem_dofs[t].iter().enumerate() {
            let owned = if i < 6 {
                let e = mesh.triangle_edges[t][i / 2];
                mesh.edge_triangles[e].0 == t
            } else {
                true
            };
            if owned {
                out[g] = s * moments[i];
            }
        }
    }
    Ok(out)
}

/// Canonical interpolation of a smooth field into the covariant space:
/// per edge the moments of f·dx against {1, 2s-1} along the physical edge
/// curve, per element the interior moments of the pulled back field.
pub fn interpolate_y(
    mesh: &Mesh,
    spaces: &Spaces,
    f: impl Fn(Vector2<f64>) -> Vector2<f64>,
) -> Result<Vec<f64>> {
    let erule = edge_rule(MAX_EDGE_DEGREE)?;
    let trule = triangle_rule(MAX_TRIANGLE_DEGREE)?;
    let mut y = vec![0.0; spaces.yh.dim];
    for e in 0..mesh.num_edges() {
        for (&s, &w) in erule.nodes.iter().zip(&erule.weights) {
            let (x, dx) = mesh.edge_curve(e, s);
            let ft = f(x).dot(&dx) * w;
            y[2 * e] += ft;
            y[2 * e + 1] += ft * (2.0 * s - 1.0);
        }
    }
    let ne = mesh.num_edges();
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        for (p, &w) in trule.points.iter().zip(&trule.weights) {
            let fhat = geom.jacobian(p).transpose() * f(geom.map(p));
            y[2 * ne + 2 * t] += w * fhat.x;
            y[2 * ne + 2 * t + 1] += w * fhat.y;
        }
    }
    Ok(y)
}

/// Canonical interpolation of a smooth scalar: vertex values and edge
/// means in the edge curve parameter.
pub fn interpolate_sigma(
    mesh: &Mesh,
    spaces: &Spaces,
    p: impl Fn(Vector2<f64>) -> f64,
) -> Result<Vec<f64>> {
    let erule = edge_rule(MAX_EDGE_DEGREE)?;
    let nv = mesh.num_vertices();
    let mut out = vec![0.0; spaces.sigmah.dim];
    for (v, x) in mesh.vertices.iter().enumerate() {
        out[v] = p(*x);
    }
    for e in 0..mesh.num_edges() {
        for (&s, &w) in erule.nodes.iter().zip(&erule.weights) {
            let (x, _) = mesh.edge_curve(e, s);
            out[nv + e] += w * p(x);
        }
    }
    Ok(out)
}

/// Nodal interpolant into the velocity space: physical point values on the
/// P2 block, zero bubbles. Edge nodes sit at the curved midpoints where
/// the mesh has them.
pub fn nodal_velocity_interpolant(
    mesh: &Mesh,
    spaces: &Spaces,
    u: impl Fn(Vector2<f64>) -> Vector2<f64>,
) -> Vec<f64> {
    let nv = mesh.num_vertices();
    let mut out = vec![0.0; spaces.vh.dim];
    for (v, x) in mesh.vertices.iter().enumerate() {
        let val = u(*x);
        out[2 * v] = val.x;
        out[2 * v + 1] = val.y;
    }
    for e in 0..mesh.num_edges() {
        let x = mesh
            .curved_midpoints[e]
            .unwrap_or_else(|| mesh.edge_midpoint(e));
        let val = u(x);
        out[2 * (nv + e)] = val.x;
        out[2 * (nv + e) + 1] = val.y;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_disk_mesh;
    use crate::refelem::RefPoint;
    use crate::spaces::{build_spaces, eval_local, LocalEval};
    use approx::assert_relative_eq;

    fn wiggle(dim: usize, seed: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| (((i + seed) * 2654435761 + 1013904223) % 997) as f64 / 498.5 - 1.0)
            .collect()
    }

    #[test]
    fn reconstruction_edge_moments_are_single_valued() {
        let mesh = generate_disk_mesh(2).unwrap();
        let spaces = build_spaces(&mesh);
        let v = wiggle(spaces.vh.dim, 7);
        // assign every edge DOF from every incident element and compare
        let mut assigned: Vec<Vec<f64>> = vec![Vec::new(); spaces.rh.dim];
        for t in 0..mesh.num_triangles() {
            let geom = geometry_of(&mesh, t);
            let rmat = reconstruction_matrix(&geom).unwrap();
            let local = spaces.vh.gather(t, &v);
            let coeffs = SMatrix::<f64, V_LOCAL_DIM, 1>::from_column_slice(&local);
            let moments = rmat * coeffs;
            for (i, &(g, s)) in spaces.rh.elem_dofs[t].iter().enumerate() {
                assigned[g].push(s * moments[i]);
            }
        }
        for vals in &assigned {
            assert!(!vals.is_empty());
            for &x in vals {
                assert_relative_eq!(x, vals[0], epsilon = 1e-12, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn reconstruction_preserves_divergence_pointwise() {
        let mesh = generate_disk_mesh(2).unwrap();
        let spaces = build_spaces(&mesh);
        let v = wiggle(spaces.vh.dim, 3);
        let r = reconstruct(&mesh, &spaces, &v).unwrap();
        let pts = [
            RefPoint::new(0.2, 0.3),
            RefPoint::new(0.5, 0.1),
            RefPoint::new(0.1, 0.7),
        ];
        for t in 0..mesh.num_triangles() {
            let geom = geometry_of(&mesh, t);
            let vloc = spaces.vh.gather(t, &v);
            let rloc = spaces.rh.gather(t, &r);
            let LocalEval::Vector { divergences: dv, .. } =
                eval_local(&spaces.vh, &geom, &pts).unwrap()
            else {
                panic!()
            };
            let LocalEval::Vector { divergences: dr, .. } =
                eval_local(&spaces.rh, &geom, &pts).unwrap()
            else {
                panic!()
            };
            for q in 0..pts.len() {
                let div_v: f64 = dv[q].iter().zip(&vloc).map(|(d, c)| d * c).sum();
                let div_r: f64 = dr[q].iter().zip(&rloc).map(|(d, c)| d * c).sum();
                assert_relative_eq!(div_v, div_r, epsilon = 1e-11, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn reconstruction_changes_the_field_but_keeps_its_moments() {
        // the reconstruction is a genuine projection, not the identity
        let mesh = generate_disk_mesh(2).unwrap();
        let spaces = build_spaces(&mesh);
        let v = wiggle(spaces.vh.dim, 11);
        let r = reconstruct(&mesh, &spaces, &v).unwrap();
        let pts = [RefPoint::new(0.25, 0.25)];
        let mut worst: f64 = 0.0;
        for t in 0..mesh.num_triangles() {
            let geom = geometry_of(&mesh, t);
            let vloc = spaces.vh.gather(t, &v);
            let rloc = spaces.rh.gather(t, &r);
            let LocalEval::Vector { values: vv, .. } =
                eval_local(&spaces.vh, &geom, &pts).unwrap()
            else {
                panic!()
            };
            let LocalEval::Vector { values: vr, .. } =
                eval_local(&spaces.rh, &geom, &pts).unwrap()
            else {
                panic!()
            };
            let a: Vector2<f64> = vv[0].iter().zip(&vloc).map(|(v, c)| *c * v).sum();
            let b: Vector2<f64> = vr[0].iter().zip(&rloc).map(|(v, c)| *c * v).sum();
            worst = worst.max((a - b).norm());
        }
        assert!(worst > 1e-3, "reconstruction looks like the identity");
    }

    #[test]
    fn commuting_identity_holds_for_polynomial_data() {
        let mesh = generate_disk_mesh(2).unwrap();
        let spaces = build_spaces(&mesh);
        let cases: [(fn(Vector2<f64>) -> f64, fn(Vector2<f64>) -> Vector2<f64>); 3] = [
            (
                |x| x.x * x.x - 2.0 * x.x * x.y + 3.0 * x.y + 1.0,
                |x| Vector2::new(2.0 * x.x - 2.0 * x.y, -2.0 * x.x + 3.0),
            ),
            (
                |x| x.x * x.x * x.y - x.y * x.y * x.y,
                |x| Vector2::new(2.0 * x.x * x.y, x.x * x.x - 3.0 * x.y * x.y),
            ),
            (
                |x| (x.x * x.x + x.y * x.y) * (x.x * x.x + x.y * x.y),
                |x| {
                    let r2 = x.x * x.x + x.y * x.y;
                    Vector2::new(4.0 * r2 * x.x, 4.0 * r2 * x.y)
                },
            ),
        ];
        let pts = [
            RefPoint::new(0.3, 0.3),
            RefPoint::new(0.15, 0.6),
            RefPoint::new(0.7, 0.05),
        ];
        for (p, grad_p) in cases {
            let y = interpolate_y(&mesh, &spaces, grad_p).unwrap();
            let sig = interpolate_sigma(&mesh, &spaces, p).unwrap();
            for t in 0..mesh.num_triangles() {
                let geom = geometry_of(&mesh, t);
                let yloc = spaces.yh.gather(t, &y);
                let sloc = spaces.sigmah.gather(t, &sig);
                let LocalEval::Vector { values, .. } =
                    eval_local(&spaces.yh, &geom, &pts).unwrap()
                else {
                    panic!()
                };
                let LocalEval::Scalar { gradients, .. } =
                    eval_local(&spaces.sigmah, &geom, &pts).unwrap()
                else {
                    panic!()
                };
                for q in 0..pts.len() {
                    let yv: Vector2<f64> =
                        values[q].iter().zip(&yloc).map(|(v, c)| *c * v).sum();
                    let sg: Vector2<f64> =
                        gradients[q].iter().zip(&sloc).map(|(g, c)| *c * g).sum();
                    assert!(
                        (yv - sg).norm() < 1e-11,
                        "element {t}: |Y grad mismatch| = {}",
                        (yv - sg).norm()
                    );
                }
            }
        }
    }

    #[test]
    fn y_interpolation_error_decreases_quadratically() {
        let f = |x: Vector2<f64>| {
            Vector2::new((2.0 * x.y).sin() + x.x * x.x * x.y, (1.5 * x.x).cos() - x.y)
        };
        let mut errors = Vec::new();
        for n in [2usize, 4] {
            let mesh = generate_disk_mesh(n).unwrap();
            let spaces = build_spaces(&mesh);
            let y = interpolate_y(&mesh, &spaces, f).unwrap();
            let rule = triangle_rule(10).unwrap();
            let mut err2 = 0.0;
            for t in 0..mesh.num_triangles() {
                let geom = geometry_of(&mesh, t);
                let yloc = spaces.yh.gather(t, &y);
                let LocalEval::Vector { values, .. } =
                    eval_local(&spaces.yh, &geom, &rule.points).unwrap()
                else {
                    panic!()
                };
                for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    let det = geom.piola_at(p).unwrap().det;
                    let yv: Vector2<f64> =
                        values[q].iter().zip(&yloc).map(|(v, c)| *c * v).sum();
                    err2 += w * det * (yv - f(geom.map(p))).norm_squared();
                }
            }
            errors.push(err2.sqrt());
        }
        let ratio = errors[0] / errors[1];
        assert!(ratio > 3.0, "L2 error ratio {ratio} under halving h");
    }

    #[test]
    fn sigma_interpolation_reproduces_its_own_dof_data() {
        let mesh = generate_disk_mesh(2).unwrap();
        let spaces = build_spaces(&mesh);
        let p = |x: Vector2<f64>| x.x * x.x * x.y + 0.5 * x.y - 2.0;
        let sig = interpolate_sigma(&mesh, &spaces, p).unwrap();
        for (v, x) in mesh.vertices.iter().enumerate() {
            assert_relative_eq!(sig[v], p(*x), epsilon = 1e-14);
        }
        // recompute an edge mean from the interpolant itself
        let erule = edge_rule(12).unwrap();
        let nv = mesh.num_vertices();
        for e in [0usize, mesh.num_edges() - 1] {
            let t = mesh.edge_triangles[e].0;
            let geom = geometry_of(&mesh, t);
            let i = mesh.triangle_edges[t].iter().position(|&x| x == e).unwrap();
            let sloc = spaces.sigmah.gather(t, &sig);
            let mut mean = 0.0;
            for (&s, &w) in erule.nodes.iter().zip(&erule.weights) {
                let p_ref = crate::refelem::edge_point(i, s);
                let LocalEval::Scalar { values, .. } =
                    eval_local(&spaces.sigmah, &geom, &[p_ref]).unwrap()
                else {
                    panic!()
                };
                let val: f64 = values[0].iter().zip(&sloc).map(|(v, c)| v * c).sum();
                mean += w * val;
            }
            assert_relative_eq!(mean, sig[nv + e], epsilon = 1e-12);
        }
    }

    #[test]
    fn nodal_interpolant_matches_point_values() {
        let mesh = generate_disk_mesh(2).unwrap();
        let spaces = build_spaces(&mesh);
        let u = |x: Vector2<f64>| Vector2::new(x.y * x.y - x.x, x.x * x.y + 1.0);
        let v = nodal_velocity_interpolant(&mesh, &spaces, u);
        // bubbles zero
        for k in spaces.wh.dim..spaces.vh.dim {
            assert_eq!(v[k], 0.0);
        }
        // field value at a mapped node equals the point value
        for t in [0, mesh.num_triangles() - 1] {
            let geom = geometry_of(&mesh, t);
            let nodes: Vec<RefPoint> = (0..6).map(crate::refelem::ref_node).collect();
            let LocalEval::Vector { values, .. } =
                eval_local(&spaces.vh, &geom, &nodes).unwrap()
            else {
                panic!()
            };
            let local = spaces.vh.gather(t, &v);
            for (q, node) in nodes.iter().enumerate() {
                let field: Vector2<f64> =
                    values[q].iter().zip(&local).map(|(b, c)| *c * b).sum();
                let x = geom.map(node);
                assert!((field - u(x)).norm() < 1e-12);
            }
        }
    }
}
