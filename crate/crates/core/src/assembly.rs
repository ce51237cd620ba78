//! Assembly of the discrete Stokes system and the solvers built on it.
//!
//! The saddle point problem is posed with the weighted mean gauge as a
//! bordered system,
//!
//!   | nu A   Bᵀ   0 | | u |   | F |
//!   |  B     0    L | | p̃ | = | 0 |
//!   |  0     Lᵀ   0 | | λ |   | 0 |
//!
//! over the interior velocity DOFs, where B is the divergence form
//! (q, div v), L the gauge vector, and the physical pressure is -p̃.
//!
//! The factorization works on a reduced device: the dense gauge border
//! wrecks the fill-reducing ordering (every pressure column joins one big
//! clique), so the solver pins a single pressure unknown instead, which is
//! legitimate because the all-ones pressure vector spans the exact kernel
//! of Bᵀ. The pressure is shifted back onto the gauge afterwards and the
//! reported residual is measured on the bordered system above, so the
//! device cannot leak into the answer.
//!
//! The pinned matrix is also assembled without the viscosity, acting on
//! the scaled unknowns (u, p̃/ν). That keeps its conditioning independent
//! of ν: at ν = 1e-8 the raw momentum block is eight orders smaller than
//! the divergence rows and a direct solve loses five digits of the
//! velocity, which would show up as spurious ν-dependence in a scheme
//! whose discrete velocity is exactly ν-independent. The scaling is
//! undone when the iterate is lifted into the bordered variables.
//!
//! Two integrals are set up in reference coordinates on purpose. The
//! divergence form reduces to ∫ q̂ div̂ v̂ dx̂ (the determinants cancel),
//! a polynomial of degree two, so a fixed low-order rule integrates it
//! exactly on curved elements. The load uses the covariant pullback,
//! ∫ f·w dx = ∫ (DFᵀ f∘F)·ŵ dx̂, pairing the interpolated data directly
//! with the reference velocity basis at degree four. Exactness of these
//! two is what turns the discrete divergence and the gradient
//! annihilation of the reconstruction into machine zeros rather than
//! quadrature-level approximations. The viscous form has a genuinely
//! rational integrand on curved elements and uses a high-order rule.

use std::time::Instant;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{Matrix3, SMatrix, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{geometry_of, Mesh};
use crate::operators::reconstruction_matrix;
use crate::refelem::{nedelec, p1_eval, rt, triangle_rule};
use crate::spaces::{eval_local, velocity_ref_basis, LocalEval, Spaces, V_LOCAL_DIM};

/// Whether the load functional sees the raw velocity test function or its
/// Raviart-Thomas reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Standard,
    Modified,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Standard => "standard",
            Scheme::Modified => "modified",
        }
    }
}

/// Triplet accumulator; entries are kept in insertion order so repeated
/// assembly of the same mesh is bit for bit reproducible.
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<Triplet<usize, usize, f64>>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push(Triplet::new(row, col, val));
    }

    pub fn to_sparse(&self) -> SparseColMat<usize, f64> {
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &self.entries)
            .expect("assembled indices are in range")
    }

    /// Dense mirror for small verification problems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for t in &self.entries {
            m[(t.row, t.col)] += t.val;
        }
        m
    }
}

/// Broken H1 form a(u, v) = Σ_T ∫_T ∇u : ∇v dx on the velocity space.
pub fn assemble_viscous(mesh: &Mesh, spaces: &Spaces, degree: usize) -> Result<Triplets> {
    let rule = triangle_rule(degree)?;
    let mut out = Triplets::new(spaces.vh.dim, spaces.vh.dim);
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        let LocalEval::Vector { gradients, .. } =
            eval_local(&spaces.vh, &geom, &rule.points)?
        else {
            unreachable!()
        };
        let dofs = &spaces.vh.elem_dofs[t];
        let mut local = [[0.0; V_LOCAL_DIM]; V_LOCAL_DIM];
        for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let det = geom.piola_at(p)?.det;
            let wq = w * det;
            for a in 0..V_LOCAL_DIM {
                for b in 0..V_LOCAL_DIM {
                    local[a][b] += wq * gradients[q][a].dot(&gradients[q][b]);
                }
            }
        }
        for (a, &(ga, _)) in dofs.iter().enumerate() {
            for (b, &(gb, _)) in dofs.iter().enumerate() {
                out.push(ga, gb, local[a][b]);
            }
        }
    }
    Ok(out)
}

/// Divergence form b(v, q) = Σ_T ∫_T q div v dx, assembled exactly in
/// reference coordinates. Rows are pressure DOFs, columns velocity DOFs.
pub fn assemble_div(mesh: &Mesh, spaces: &Spaces) -> Result<Triplets> {
    let rule = triangle_rule(4)?;
    let mut out = Triplets::new(spaces.qh.dim, spaces.vh.dim);
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        let basis = velocity_ref_basis(&geom)?;
        let vdofs = &spaces.vh.elem_dofs[t];
        let qdofs = &spaces.qh.elem_dofs[t];
        let mut local = [[0.0; V_LOCAL_DIM]; 3];
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let divs = basis.divergences(p);
            let lambdas = p1_eval(p);
            for i in 0..3 {
                let wq = w * lambdas[i];
                for k in 0..V_LOCAL_DIM {
                    local[i][k] += wq * divs[k];
                }
            }
        }
        for (i, &(gq, _)) in qdofs.iter().enumerate() {
            for (k, &(gv, _)) in vdofs.iter().enumerate() {
                out.push(gq, gv, local[i][k]);
            }
        }
    }
    Ok(out)
}

/// Load vector for data already interpolated into the covariant space.
pub fn assemble_rhs(mesh: &Mesh, spaces: &Spaces, y: &[f64], scheme: Scheme) -> Result<Vec<f64>> {
    assert_eq!(y.len(), spaces.yh.dim);
    let rule = triangle_rule(4)?;
    let mut f = vec![0.0; spaces.vh.dim];
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        let basis = velocity_ref_basis(&geom)?;
        let yloc = spaces.yh.gather(t, y);
        let ysigns: Vec<f64> = spaces.yh.elem_dofs[t].iter().map(|&(_, s)| s).collect();
        let fhat_at = |p: &crate::refelem::RefPoint| {
            let nvals = nedelec::ned1_eval(p);
            let mut fh = Vector2::zeros();
            for j in 0..nedelec::DIM {
                fh += yloc[j] * ysigns[j] * nvals[j];
            }
            fh
        };
        let mut local = [0.0; V_LOCAL_DIM];
        match scheme {
            Scheme::Standard => {
                for (p, &w) in rule.points.iter().zip(&rule.weights) {
                    let fh = fhat_at(p);
                    let vals = basis.values(p);
                    for k in 0..V_LOCAL_DIM {
                        local[k] += w * fh.dot(&vals[k]);
                    }
                }
            }
            Scheme::Modified => {
                let rmat = reconstruction_matrix(&geom)?;
                let mut moments = SMatrix::<f64, { rt::DIM }, 1>::zeros();
                for (p, &w) in rule.points.iter().zip(&rule.weights) {
                    let fh = fhat_at(p);
                    let (rvals, _) = rt::rt1_eval(p);
                    for i in 0..rt::DIM {
                        moments[i] += w * fh.dot(&rvals[i]);
                    }
                }
                let proj = rmat.transpose() * moments;
                for k in 0..V_LOCAL_DIM {
                    local[k] = proj[k];
                }
            }
        }
        for (k, &(g, _)) in spaces.vh.elem_dofs[t].iter().enumerate() {
            f[g] += local[k];
        }
    }
    Ok(f)
}

/// Broken L2 norm of the divergence of a velocity field.
pub fn divergence_l2(mesh: &Mesh, spaces: &Spaces, u: &[f64]) -> Result<f64> {
    let rule = triangle_rule(10)?;
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        let local = spaces.vh.gather(t, u);
        let LocalEval::Vector { divergences, .. } =
            eval_local(&spaces.vh, &geom, &rule.points)?
        else {
            unreachable!()
        };
        for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let det = geom.piola_at(p)?.det;
            let d: f64 = divergences[q].iter().zip(&local).map(|(d, c)| d * c).sum();
            total += w * det * d * d;
        }
    }
    Ok(total.sqrt())
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    /// Velocity coefficients over the full space, zeros on the boundary.
    pub velocity: Vec<f64>,
    /// Pressure coefficients (sign already flipped back, gauge L·p = 0).
    pub pressure: Vec<f64>,
    /// Gauge multiplier of the bordered system; identically zero for the
    /// pinned solve, with any incompatibility showing up in `residual`.
    pub multiplier: f64,
    /// Relative residual of the bordered system after refinement.
    pub residual: f64,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
}

/// Assembles and solves the Stokes system for interpolated data `y`.
pub fn solve_stokes(
    mesh: &Mesh,
    spaces: &Spaces,
    nu: f64,
    y: &[f64],
    scheme: Scheme,
    quad_a_degree: usize,
) -> Result<StokesSolution> {
    let t_assemble = Instant::now();
    let a = assemble_viscous(mesh, spaces, quad_a_degree)?;
    let b = assemble_div(mesh, spaces)?;
    let f = assemble_rhs(mesh, spaces, y, scheme)?;
    let l = spaces
        .qh
        .constraint
        .as_ref()
        .expect("pressure space carries the gauge vector");
    let l_total: f64 = l.iter().sum();

    let mask = spaces.vh.boundary_mask();
    let mut new_index = vec![usize::MAX; spaces.vh.dim];
    let mut keep = Vec::new();
    for i in 0..spaces.vh.dim {
        if !mask[i] {
            new_index[i] = keep.len();
            keep.push(i);
        }
    }
    let nk = keep.len();
    let nq = spaces.qh.dim;

    // Factorized system: interior velocities, then pressures 1..nq with
    // pressure 0 pinned to zero.
    let np = nk + nq - 1;
    let mut sys = Triplets::new(np, np);
    // Bordered system, assembled only to measure the residual against.
    let nb = nk + nq + 1;
    let mut bord = Triplets::new(nb, nb);
    for t in &a.entries {
        if !mask[t.row] && !mask[t.col] {
            sys.push(new_index[t.row], new_index[t.col], t.val);
            bord.push(new_index[t.row], new_index[t.col], nu * t.val);
        }
    }
    for t in &b.entries {
        if !mask[t.col] {
            if t.row != 0 {
                let (r, c) = (nk + t.row - 1, new_index[t.col]);
                sys.push(r, c, t.val);
                sys.push(c, r, t.val);
            }
            let (r, c) = (nk + t.row, new_index[t.col]);
            bord.push(r, c, t.val);
            bord.push(c, r, t.val);
        }
    }
    for (i, &li) in l.iter().enumerate() {
        bord.push(nk + i, nk + nq, li);
        bord.push(nk + nq, nk + i, li);
    }
    let sys = sys.to_sparse();
    let bord = bord.to_sparse();
    let mut rhs = faer::Mat::<f64>::zeros(np, 1);
    let mut brhs = faer::Mat::<f64>::zeros(nb, 1);
    for (i, &g) in keep.iter().enumerate() {
        rhs[(i, 0)] = f[g] / nu;
        brhs[(i, 0)] = f[g];
    }
    let assemble_seconds = t_assemble.elapsed().as_secs_f64();

    // Lift an iterate in the original variables (u, p̃) into the bordered
    // unknowns, shifting the pressure onto the gauge (the shift leaves the
    // velocity equations untouched since the all-ones vector annihilates
    // Bᵀ).
    let embed = |u: &[f64], pt: &[f64]| -> faer::Mat<f64> {
        let mut zb = faer::Mat::<f64>::zeros(nb, 1);
        for i in 0..nk {
            zb[(i, 0)] = u[i];
        }
        let lp: f64 = (0..nq).map(|j| l[j] * pt[j]).sum();
        let c = lp / l_total;
        for j in 0..nq {
            zb[(nk + j, 0)] = pt[j] - c;
        }
        zb
    };

    let t_solve = Instant::now();
    let lu = sys
        .sp_lu()
        .map_err(|e| Error::SingularSystem(format!("sparse LU failed: {e:?}")))?;
    let w = lu.solve(&rhs);
    let mut u: Vec<f64> = (0..nk).map(|i| w[(i, 0)]).collect();
    let mut pt = vec![0.0; nq];
    for j in 1..nq {
        pt[j] = nu * w[(nk + j - 1, 0)];
    }
    let brhs_norm = brhs.norm_l2().max(f64::MIN_POSITIVE);
    let bordered_residual =
        |zb: &faer::Mat<f64>| -> f64 { (&brhs - &bord * zb).norm_l2() / brhs_norm };
    let mut zb = embed(&u, &pt);
    let mut residual = bordered_residual(&zb);
    for _ in 0..4 {
        if residual <= 1e-15 {
            break;
        }
        // The residual is accumulated in the original variables, where
        // every term is O(1): running it through the scaled unknown p̃/ν
        // instead would bury the correction under eps·|Bᵀ|·|p̃|/ν noise.
        let mut rm: Vec<f64> = keep.iter().map(|&g| f[g]).collect();
        let mut rd = vec![0.0; nq - 1];
        for t in &a.entries {
            if !mask[t.row] && !mask[t.col] {
                rm[new_index[t.row]] -= nu * t.val * u[new_index[t.col]];
            }
        }
        for t in &b.entries {
            if !mask[t.col] {
                let c = new_index[t.col];
                rm[c] -= t.val * pt[t.row];
                if t.row != 0 {
                    rd[t.row - 1] -= t.val * u[c];
                }
            }
        }
        let mut rw = faer::Mat::<f64>::zeros(np, 1);
        for i in 0..nk {
            rw[(i, 0)] = rm[i] / nu;
        }
        for j in 0..nq - 1 {
            rw[(nk + j, 0)] = rd[j];
        }
        let dw = lu.solve(&rw);
        let u_next: Vec<f64> = (0..nk).map(|i| u[i] + dw[(i, 0)]).collect();
        let mut pt_next = vec![0.0; nq];
        for j in 1..nq {
            pt_next[j] = pt[j] + nu * dw[(nk + j - 1, 0)];
        }
        let zb_next = embed(&u_next, &pt_next);
        let res_next = bordered_residual(&zb_next);
        if !(res_next < residual) {
            break;
        }
        u = u_next;
        pt = pt_next;
        zb = zb_next;
        residual = res_next;
    }
    if !residual.is_finite() || residual > 1e-11 {
        return Err(Error::SingularSystem(format!(
            "relative residual {residual:.3e} exceeds 1e-11 after refinement"
        )));
    }
    let solve_seconds = t_solve.elapsed().as_secs_f64();

    let mut velocity = vec![0.0; spaces.vh.dim];
    for (i, &g) in keep.iter().enumerate() {
        velocity[g] = zb[(i, 0)];
    }
    let pressure: Vec<f64> = (0..nq).map(|i| -zb[(nk + i, 0)]).collect();
    Ok(StokesSolution {
        velocity,
        pressure,
        multiplier: zb[(nb - 1, 0)],
        residual,
        assemble_seconds,
        solve_seconds,
    })
}

/// Discrete inf-sup constant of the velocity-pressure pair,
///
///   β² = min eigenvalue of M^{-1/2} B A⁻¹ Bᵀ M^{-1/2}
///
/// on the complement of the gauge direction, with A the viscous form on
/// interior DOFs and M the pressure mass matrix. Dropping the bubbles
/// (`with_bubbles = false`) exposes the instability of the plain mapped
/// P2-P1 pair: on meshes with singular vertices the constant collapses to
/// an exact zero; on the disk family it merely degrades.
pub fn infsup_constant(
    mesh: &Mesh,
    spaces: &Spaces,
    with_bubbles: bool,
    quad_a_degree: usize,
) -> Result<f64> {
    let a = assemble_viscous(mesh, spaces, quad_a_degree)?;
    let b = assemble_div(mesh, spaces)?;
    let l = spaces
        .qh
        .constraint
        .as_ref()
        .expect("pressure space carries the gauge vector");

    let mask = spaces.vh.boundary_mask();
    let mut new_index = vec![usize::MAX; spaces.vh.dim];
    let mut nk = 0;
    for i in 0..spaces.vh.dim {
        if !mask[i] && (with_bubbles || i < spaces.wh.dim) {
            new_index[i] = nk;
            nk += 1;
        }
    }
    let kept = |i: usize| new_index[i] != usize::MAX;
    let nq = spaces.qh.dim;

    let mut a_kk = Triplets::new(nk, nk);
    for t in &a.entries {
        if kept(t.row) && kept(t.col) {
            a_kk.push(new_index[t.row], new_index[t.col], t.val);
        }
    }
    let mut b_k = Triplets::new(nq, nk);
    for t in &b.entries {
        if kept(t.col) {
            b_k.push(t.row, new_index[t.col], t.val);
        }
    }
    let a_sp = a_kk.to_sparse();
    let b_sp = b_k.to_sparse();
    let lu = a_sp
        .sp_lu()
        .map_err(|e| Error::SingularSystem(format!("sparse LU failed: {e:?}")))?;

    // S = B A⁻¹ Bᵀ, built in column blocks to bound memory
    let mut s = faer::Mat::<f64>::zeros(nq, nq);
    let block = 256;
    let mut start = 0;
    while start < nq {
        let cols = block.min(nq - start);
        let mut rhs = faer::Mat::<f64>::zeros(nk, cols);
        for t in &b_k.entries {
            if t.row >= start && t.row < start + cols {
                rhs[(t.col, t.row - start)] += t.val;
            }
        }
        let x = lu.solve(&rhs);
        let sb = &b_sp * &x;
        for j in 0..cols {
            for i in 0..nq {
                s[(i, start + j)] = sb[(i, j)];
            }
        }
        start += cols;
    }
    for i in 0..nq {
        for j in 0..i {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }

    // block diagonal M^{-1/2} of the pressure mass matrix
    let rule = triangle_rule(4)?;
    let mut kb = vec![Matrix3::<f64>::zeros(); mesh.num_triangles()];
    for t in 0..mesh.num_triangles() {
        let geom = geometry_of(mesh, t);
        let mut m = Matrix3::<f64>::zeros();
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let det = geom.piola_at(p)?.det;
            let lam = p1_eval(p);
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] += w * det * lam[i] * lam[j];
                }
            }
        }
        let eig = m.symmetric_eigen();
        let mut inv_sqrt = Matrix3::<f64>::zeros();
        for k in 0..3 {
            let col = eig.eigenvectors.column(k);
            inv_sqrt += col * col.transpose() / eig.eigenvalues[k].sqrt();
        }
        kb[t] = inv_sqrt;
    }
    // S <- K S K in place, block row then block column transforms
    for (t, k) in kb.iter().enumerate() {
        let r0 = 3 * t;
        for j in 0..nq {
            let v = nalgebra::Vector3::new(s[(r0, j)], s[(r0 + 1, j)], s[(r0 + 2, j)]);
            let kv = k * v;
            s[(r0, j)] = kv[0];
            s[(r0 + 1, j)] = kv[1];
            s[(r0 + 2, j)] = kv[2];
        }
    }
    for (t, k) in kb.iter().enumerate() {
        let c0 = 3 * t;
        for i in 0..nq {
            let v = nalgebra::Vector3::new(s[(i, c0)], s[(i, c0 + 1)], s[(i, c0 + 2)]);
            let kv = k * v;
            s[(i, c0)] = kv[0];
            s[(i, c0 + 1)] = kv[1];
            s[(i, c0 + 2)] = kv[2];
        }
    }

    // Householder mapping u = M^{-1/2} L onto the first axis
    let mut u = vec![0.0; nq];
    for (t, k) in kb.iter().enumerate() {
        let v = nalgebra::Vector3::new(l[3 * t], l[3 * t + 1], l[3 * t + 2]);
        let kv = k * v;
        for i in 0..3 {
            u[3 * t + i] = kv[i];
        }
    }
    let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut w = u.clone();
    w[0] += unorm.copysign(u[0]);
    let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut w {
        *x /= wnorm;
    }
    let wm = faer::Mat::<f64>::from_fn(nq, 1, |i, _| w[i]);
    // C <- H C H with H = I - 2wwᵀ
    let wc = wm.transpose() * &s;
    s -= 2.0 * &wm * &wc;
    let cw = &s * &wm;
    s -= 2.0 * &cw * wm.transpose();

    let sub = s.submatrix(1, 1, nq - 1, nq - 1).to_owned();
    let eigs: Vec<f64> = sub
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::SingularSystem(format!("eigenvalue solve failed: {e:?}")))?;
    Ok(eigs[0].max(0.0).sqrt())
}
