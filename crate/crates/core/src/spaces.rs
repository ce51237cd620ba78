//! Global finite element spaces over a disk mesh.
//!
//! Seven spaces share one description type:
//!
//! * `Wh`: continuous vector P2, Piola-mapped, one vector DOF per node.
//!   The local shape function with value c_j at mapped node a_j is
//!   w(x) = A_T(x̂) Σ_j φ̂_j(x̂) A_T(â_j)⁻¹ c_j, so DOFs are physical
//!   point values even on curved elements.
//! * `Phih`: the elementwise Gauss-Legendre bubbles, two per element.
//! * `Vh`: the velocity space Wh ⊕ Phih.
//! * `Qh`: discontinuous mapped P1 pressures (composition with F_T⁻¹),
//!   with the weighted mean constraint vector L, L_q = |T̃|/3 per local DOF.
//! * `Rh`: parametric Raviart-Thomas, 2 normal moments per edge plus 2
//!   interior DOFs per element.
//! * `Yh`: parametric Nedelec (degree 2), 2 tangential moments per edge
//!   plus 2 interior DOFs per element.
//! * `Sigmah`: continuous isoparametric scalar P2 with the commuting DOFs,
//!   vertex values plus edge means.
//!
//! Edge moments are taken against {1, 2s-1} in the arclength fraction s of
//! the reference preimage, measured from the lower-indexed global vertex.
//! The symmetric second moment makes every local-to-global relation a pure
//! sign: the constant moment flips with the traversal direction, the
//! linear moment never does.

use std::sync::OnceLock;

use nalgebra::{Matrix2, SMatrix, Vector2};

use crate::error::Result;
use crate::geometry::{geometry_of, ElementGeometry, Mesh};
use crate::refelem::{bubble_eval, nedelec, p1_eval, p2_eval, rt, RefPoint, P1_GRADIENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Wh,
    Phih,
    Vh,
    Qh,
    Rh,
    Yh,
    Sigmah,
}

#[derive(Debug, Clone)]
pub struct Space {
    pub kind: SpaceKind,
    pub dim: usize,
    /// Per element: (global DOF, sign) in local DOF order.
    pub elem_dofs: Vec<Vec<(usize, f64)>>,
    /// Sorted DOFs pinned to zero by the homogeneous boundary condition.
    pub boundary_dofs: Vec<usize>,
    /// The weighted-mean gauge vector of Qh.
    pub constraint: Option<Vec<f64>>,
}

impl Space {
    pub fn local_to_global(&self, element: usize) -> &[(usize, f64)] {
        &self.elem_dofs[element]
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dim];
        for &d in &self.boundary_dofs {
            mask[d] = true;
        }
        mask
    }

    /// Gathers the local coefficient vector. No signs here: `eval_local`
    /// already returns the signed restriction of each global basis
    /// function, so raw global values are the local coefficients.
    pub fn gather(&self, element: usize, global: &[f64]) -> Vec<f64> {
        self.elem_dofs[element]
            .iter()
            .map(|&(g, _)| global[g])
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Spaces {
    pub wh: Space,
    pub phih: Space,
    pub vh: Space,
    pub qh: Space,
    pub rh: Space,
    pub yh: Space,
    pub sigmah: Space,
}

pub fn build_spaces(mesh: &Mesh) -> Spaces {
    Spaces {
        wh: build_w(mesh),
        phih: build_phi(mesh),
        vh: build_v(mesh),
        qh: build_q(mesh),
        rh: build_edge_interior(mesh, SpaceKind::Rh),
        yh: build_edge_interior(mesh, SpaceKind::Yh),
        sigmah: build_sigma(mesh),
    }
}

fn build_w(mesh: &Mesh) -> Space {
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let mut elem_dofs = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let mut local = Vec::with_capacity(12);
        for j in 0..6 {
            let node = if j < 3 {
                mesh.triangles[t][j]
            } else {
                nv + mesh.triangle_edges[t][j - 3]
            };
            local.push((2 * node, 1.0));
            local.push((2 * node + 1, 1.0));
        }
        elem_dofs.push(local);
    }
    let mut boundary_dofs = Vec::new();
    for (v, &b) in mesh.boundary_vertex.iter().enumerate() {
        if b {
            boundary_dofs.push(2 * v);
            boundary_dofs.push(2 * v + 1);
        }
    }
    for (e, &b) in mesh.boundary_edge.iter().enumerate() {
        if b {
            boundary_dofs.push(2 * (nv + e));
            boundary_dofs.push(2 * (nv + e) + 1);
        }
    }
    boundary_dofs.sort_unstable();
    Space {
        kind: SpaceKind::Wh,
        dim: 2 * (nv + ne),
        elem_dofs,
        boundary_dofs,
        constraint: None,
    }
}

fn build_phi(mesh: &Mesh) -> Space {
    let elem_dofs = (0..mesh.num_triangles())
        .map(|t| vec![(2 * t, 1.0), (2 * t + 1, 1.0)])
        .collect();
    Space {
        kind: SpaceKind::Phih,
        dim: 2 * mesh.num_triangles(),
        elem_dofs,
        boundary_dofs: Vec::new(),
        constraint: None,
    }
}

fn build_v(mesh: &Mesh) -> Space {
    let w = build_w(mesh);
    let phi = build_phi(mesh);
    let elem_dofs = (0..mesh.num_triangles())
        .map(|t| {
            let mut local = w.elem_dofs[t].clone();
            local.extend(phi.elem_dofs[t].iter().map(|&(g, s)| (w.dim + g, s)));
            local
        })
        .collect();
    Space {
        kind: SpaceKind::Vh,
        dim: w.dim + phi.dim,
        elem_dofs,
        boundary_dofs: w.boundary_dofs,
        constraint: None,
    }
}

fn build_q(mesh: &Mesh) -> Space {
    let mut constraint = vec![0.0; 3 * mesh.num_triangles()];
    let elem_dofs = (0..mesh.num_triangles())
        .map(|t| {
            let g = geometry_of(mesh, t);
            for i in 0..3 {
                constraint[3 * t + i] = g.affine_area / 3.0;
            }
            vec![(3 * t, 1.0), (3 * t + 1, 1.0), (3 * t + 2, 1.0)]
        })
        .collect();
    Space {
        kind: SpaceKind::Qh,
        dim: 3 * mesh.num_triangles(),
        elem_dofs,
        boundary_dofs: Vec::new(),
        constraint: Some(constraint),
    }
}

/// Shared numbering for Rh and Yh: edge DOF pair (2e, 2e+1), then two
/// interior DOFs per element after all edges.
fn build_edge_interior(mesh: &Mesh, kind: SpaceKind) -> Space {
    let ne = mesh.num_edges();
    let elem_dofs = (0..mesh.num_triangles())
        .map(|t| {
            let mut local = Vec::with_capacity(8);
            for i in 0..3 {
                let e = mesh.triangle_edges[t][i];
                let sigma = if mesh.edge_is_forward(t, i) { 1.0 } else { -1.0 };
                local.push((2 * e, sigma));
                local.push((2 * e + 1, 1.0));
            }
            local.push((2 * ne + 2 * t, 1.0));
            local.push((2 * ne + 2 * t + 1, 1.0));
            local
        })
        .collect();
    let boundary_dofs = if kind == SpaceKind::Rh {
        let mut dofs: Vec<usize> = mesh
            .boundary_edge
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b)
            .flat_map(|(e, _)| [2 * e, 2 * e + 1])
            .collect();
        dofs.sort_unstable();
        dofs
    } else {
        Vec::new()
    };
    Space {
        kind,
        dim: 2 * ne + 2 * mesh.num_triangles(),
        elem_dofs,
        boundary_dofs,
        constraint: None,
    }
}

fn build_sigma(mesh: &Mesh) -> Space {
    let nv = mesh.num_vertices();
    let elem_dofs = (0..mesh.num_triangles())
        .map(|t| {
            let mut local: Vec<(usize, f64)> = mesh.triangles[t]
                .iter()
                .map(|&v| (v, 1.0))
                .collect();
            local.extend(
                mesh.triangle_edges[t]
                    .iter()
                    .map(|&e| (nv + e, 1.0)),
            );
            local
        })
        .collect();
    Space {
        kind: SpaceKind::Sigmah,
        dim: nv + mesh.num_edges(),
        elem_dofs,
        boundary_dofs: Vec::new(),
        constraint: None,
    }
}

/// Coefficients of the Sigma local basis in the P2 nodal basis: dual to
/// three vertex values and three edge means (Simpson is exact here).
fn sigma_coefficients() -> &'static SMatrix<f64, 6, 6> {
    static COEFF: OnceLock<SMatrix<f64, 6, 6>> = OnceLock::new();
    COEFF.get_or_init(|| {
        let mut m = SMatrix::<f64, 6, 6>::zeros();
        for i in 0..3 {
            m[(i, i)] = 1.0;
            // mean over edge i of a quadratic: (end + 4 mid + end)/6
            m[(3 + i, (i + 1) % 3)] = 1.0 / 6.0;
            m[(3 + i, (i + 2) % 3)] = 1.0 / 6.0;
            m[(3 + i, 3 + i)] = 4.0 / 6.0;
        }
        m.try_inverse().expect("Sigma DOF matrix is unisolvent")
    })
}

/// Values and reference gradients of the six Sigma shape functions.
pub fn sigma_eval(p: &RefPoint) -> ([f64; 6], [Vector2<f64>; 6]) {
    let c = sigma_coefficients();
    let (nv, ng) = p2_eval(p);
    let mut values = [0.0; 6];
    let mut grads = [Vector2::zeros(); 6];
    for k in 0..6 {
        for j in 0..6 {
            values[k] += c[(j, k)] * nv[j];
            grads[k] += c[(j, k)] * ng[j];
        }
    }
    (values, grads)
}

/// Local basis evaluations at a batch of reference points, indexed
/// `[point][local dof]`. Signs from the space are already applied, so a
/// finite element function is `Σ coeff[global] * sign * basis`.
#[derive(Debug, Clone)]
pub enum LocalEval {
    Vector {
        values: Vec<Vec<Vector2<f64>>>,
        /// Physical Jacobians (∂v_i/∂x_j).
        gradients: Vec<Vec<Matrix2<f64>>>,
        divergences: Vec<Vec<f64>>,
    },
    Scalar {
        values: Vec<Vec<f64>>,
        gradients: Vec<Vec<Vector2<f64>>>,
    },
}

/// Reference-side description of the 14 local velocity fields
/// (12 from Wh, 2 bubbles), prior to the Piola push-forward.
pub struct VelocityRefBasis {
    /// g[j][c] = A_T(â_j)⁻¹ e_c for node j, component c.
    node_coeffs: [[Vector2<f64>; 2]; 6],
}

pub const V_LOCAL_DIM: usize = 14;

pub fn velocity_ref_basis(geom: &ElementGeometry) -> Result<VelocityRefBasis> {
    let mut node_coeffs = [[Vector2::zeros(); 2]; 6];
    for j in 0..6 {
        let node = RefPoint::new(crate::refelem::NODES[j][0], crate::refelem::NODES[j][1]);
        let pe = geom.piola_at(&node)?;
        node_coeffs[j] = [pe.a_inv.column(0).into(), pe.a_inv.column(1).into()];
    }
    Ok(VelocityRefBasis { node_coeffs })
}

impl VelocityRefBasis {
    /// Reference values v̂ of the local velocity basis.
    pub fn values(&self, p: &RefPoint) -> [Vector2<f64>; V_LOCAL_DIM] {
        let (pv, _) = p2_eval(p);
        let (bv, _) = bubble_eval(p);
        let mut out = [Vector2::zeros(); V_LOCAL_DIM];
        for j in 0..6 {
            for c in 0..2 {
                out[2 * j + c] = pv[j] * self.node_coeffs[j][c];
            }
        }
        out[12] = Vector2::new(bv, 0.0);
        out[13] = Vector2::new(0.0, bv);
        out
    }

    /// Reference divergences div̂ v̂ (each is linear in x̂).
    pub fn divergences(&self, p: &RefPoint) -> [f64; V_LOCAL_DIM] {
        let (_, pg) = p2_eval(p);
        let (_, bg) = bubble_eval(p);
        let mut out = [0.0; V_LOCAL_DIM];
        for j in 0..6 {
            for c in 0..2 {
                out[2 * j + c] = pg[j].dot(&self.node_coeffs[j][c]);
            }
        }
        out[12] = bg.x;
        out[13] = bg.y;
        out
    }

    /// Reference gradients (dv̂_i/dx̂_j) of the local velocity basis.
    pub fn gradients(&self, p: &RefPoint) -> [Matrix2<f64>; V_LOCAL_DIM] {
        let (_, pg) = p2_eval(p);
        let (_, bg) = bubble_eval(p);
        let mut out = [Matrix2::zeros(); V_LOCAL_DIM];
        for j in 0..6 {
            for c in 0..2 {
                out[2 * j + c] = self.node_coeffs[j][c] * pg[j].transpose();
            }
        }
        out[12] = Vector2::new(1.0, 0.0) * bg.transpose();
        out[13] = Vector2::new(0.0, 1.0) * bg.transpose();
        out
    }
}

pub fn eval_local(
    space: &Space,
    geom: &ElementGeometry,
    points: &[RefPoint],
) -> Result<LocalEval> {
    match space.kind {
        SpaceKind::Wh | SpaceKind::Phih | SpaceKind::Vh => {
            eval_velocity(space.kind, geom, points)
        }
        SpaceKind::Qh => {
            let mut values = Vec::with_capacity(points.len());
            let mut gradients = Vec::with_capacity(points.len());
            for p in points {
                let pe = geom.piola_at(p)?;
                let vals = p1_eval(p);
                values.push(vals.to_vec());
                gradients.push(
                    P1_GRADIENTS
                        .iter()
                        .map(|g| pe.df_inv.transpose() * Vector2::new(g[0], g[1]))
                        .collect(),
                );
            }
            Ok(LocalEval::Scalar { values, gradients })
        }
        SpaceKind::Sigmah => {
            let mut values = Vec::with_capacity(points.len());
            let mut gradients = Vec::with_capacity(points.len());
            for p in points {
                let pe = geom.piola_at(p)?;
                let (vals, grads) = sigma_eval(p);
                values.push(vals.to_vec());
                gradients.push(
                    grads
                        .iter()
                        .map(|g| pe.df_inv.transpose() * g)
                        .collect(),
                );
            }
            Ok(LocalEval::Scalar { values, gradients })
        }
        SpaceKind::Rh => eval_rt(space, geom, points),
        SpaceKind::Yh => eval_ned(space, geom, points),
    }
}

fn eval_velocity(
    kind: SpaceKind,
    geom: &ElementGeometry,
    points: &[RefPoint],
) -> Result<LocalEval> {
    let basis = velocity_ref_basis(geom)?;
    let range = match kind {
        SpaceKind::Wh => 0..12,
        SpaceKind::Phih => 12..14,
        _ => 0..14,
    };
    let mut values = Vec::with_capacity(points.len());
    let mut gradients = Vec::with_capacity(points.len());
    let mut divergences = Vec::with_capacity(points.len());
    for p in points {
        let pe = geom.piola_at(p)?;
        let vhat = basis.values(p);
        let ghat = basis.gradients(p);
        let dhat = basis.divergences(p);
        let mut vals = Vec::with_capacity(range.len());
        let mut grads = Vec::with_capacity(range.len());
        let mut divs = Vec::with_capacity(range.len());
        for k in range.clone() {
            vals.push(pe.a * vhat[k]);
            // chain rule for x -> A(x̂) v̂(x̂): reference Jacobian columns
            // (∂_l A) v̂ + A ∂_l v̂, then times DF⁻¹
            let mut dref = Matrix2::zeros();
            for l in 0..2 {
                let col = pe.da[l] * vhat[k] + pe.a * ghat[k].column(l);
                dref.set_column(l, &col);
            }
            grads.push(dref * pe.df_inv);
            divs.push(dhat[k] / pe.det);
        }
        values.push(vals);
        gradients.push(grads);
        divergences.push(divs);
    }
    Ok(LocalEval::Vector {
        values,
        gradients,
        divergences,
    })
}

fn eval_rt(space: &Space, geom: &ElementGeometry, points: &[RefPoint]) -> Result<LocalEval> {
    let signs: Vec<f64> = space.elem_dofs[geom.element].iter().map(|&(_, s)| s).collect();
    let mut values = Vec::with_capacity(points.len());
    let mut gradients = Vec::with_capacity(points.len());
    let mut divergences = Vec::with_capacity(points.len());
    for p in points {
        let pe = geom.piola_at(p)?;
        let (vhat, ghat, dhat) = rt::rt1_eval_full(p);
        let mut vals = Vec::with_capacity(rt::DIM);
        let mut grads = Vec::with_capacity(rt::DIM);
        let mut divs = Vec::with_capacity(rt::DIM);
        for k in 0..rt::DIM {
            vals.push(signs[k] * (pe.a * vhat[k]));
            let mut dref = Matrix2::zeros();
            for l in 0..2 {
                let col = pe.da[l] * vhat[k] + pe.a * ghat[k].column(l);
                dref.set_column(l, &col);
            }
            grads.push(signs[k] * (dref * pe.df_inv));
            divs.push(signs[k] * dhat[k] / pe.det);
        }
        values.push(vals);
        gradients.push(grads);
        divergences.push(divs);
    }
    Ok(LocalEval::Vector {
        values,
        gradients,
        divergences,
    })
}

fn eval_ned(space: &Space, geom: &ElementGeometry, points: &[RefPoint]) -> Result<LocalEval> {
    let signs: Vec<f64> = space.elem_dofs[geom.element].iter().map(|&(_, s)| s).collect();
    let mut values = Vec::with_capacity(points.len());
    let mut gradients = Vec::with_capacity(points.len());
    let mut divergences = Vec::with_capacity(points.len());
    for p in points {
        let pe = geom.piola_at(p)?;
        let cov = pe.df_inv.transpose();
        let (vhat, ghat) = nedelec::ned1_eval_full(p);
        let mut vals = Vec::with_capacity(nedelec::DIM);
        let mut grads = Vec::with_capacity(nedelec::DIM);
        let mut divs = Vec::with_capacity(nedelec::DIM);
        for k in 0..nedelec::DIM {
            vals.push(signs[k] * (cov * vhat[k]));
            // ∂_l (DF⁻ᵀ v̂) = -DF⁻ᵀ H_lᵀ DF⁻ᵀ v̂ + DF⁻ᵀ ∂_l v̂
            let mut dref = Matrix2::zeros();
            for l in 0..2 {
                let dcov = -cov * geom.d_jacobian(l).transpose() * cov;
                let col = dcov * vhat[k] + cov * ghat[k].column(l);
                dref.set_column(l, &col);
            }
            let phys = dref * pe.df_inv;
            grads.push(signs[k] * phys);
            divs.push(signs[k] * phys.trace());
        }
        values.push(vals);
        gradients.push(grads);
        divergences.push(divs);
    }
    Ok(LocalEval::Vector {
        values,
        gradients,
        divergences,
    })
}
