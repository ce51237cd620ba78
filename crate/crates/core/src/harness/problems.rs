//! Manufactured Stokes problems on the unit disk.
//!
//! Both problems share the pressure p = 2x₁²(1−x₁)x₂(1−x₂):
//!
//! * no-flow: f = ∇p, so the exact velocity is zero and a pressure-robust
//!   scheme must return it up to solver precision;
//! * flow: u = curl ψ with ψ = (1−x₁²−x₂²)²/100, which vanishes on the
//!   circle, and f = −νΔu + ∇p.
//!
//! The `paper_psi` switch swaps in ψ = x₁²(1−x₁)²x₂²(1−x₂)²/100, the
//! streamfunction this benchmark traditionally uses on the unit square.
//! That velocity does not vanish on the circle, so disk runs with it are
//! qualitative only.

use nalgebra::{Matrix2, Vector2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    NoFlow,
    Flow,
}

/// A manufactured problem: exact fields and the matching body force.
#[derive(Debug, Clone, Copy)]
pub struct Problem {
    pub kind: ProblemKind,
    pub nu: f64,
    /// Use the square-domain streamfunction for the flow problem.
    pub paper_psi: bool,
}

fn pressure(x: Vector2<f64>) -> f64 {
    2.0 * x.x * x.x * (1.0 - x.x) * x.y * (1.0 - x.y)
}

fn pressure_gradient(x: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(
        2.0 * (2.0 * x.x - 3.0 * x.x * x.x) * (x.y - x.y * x.y),
        2.0 * (x.x * x.x - x.x * x.x * x.x) * (1.0 - 2.0 * x.y),
    )
}

/// g(t) = t²(1−t)² with derivatives up to third order.
fn g(t: f64) -> (f64, f64, f64, f64) {
    let s = 1.0 - t;
    (
        t * t * s * s,
        2.0 * t * s * (1.0 - 2.0 * t),
        2.0 - 12.0 * t + 12.0 * t * t,
        24.0 * t - 12.0,
    )
}

impl Problem {
    pub fn new(kind: ProblemKind, nu: f64, paper_psi: bool) -> Self {
        Problem {
            kind,
            nu,
            paper_psi,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProblemKind::NoFlow => "noflow",
            ProblemKind::Flow => "flow",
        }
    }

    pub fn exact_velocity(&self, x: Vector2<f64>) -> Vector2<f64> {
        match self.kind {
            ProblemKind::NoFlow => Vector2::zeros(),
            ProblemKind::Flow if self.paper_psi => {
                let (g1, dg1, _, _) = g(x.x);
                let (g2, dg2, _, _) = g(x.y);
                Vector2::new(g1 * dg2, -dg1 * g2) / 100.0
            }
            ProblemKind::Flow => {
                let w = 1.0 - x.norm_squared();
                Vector2::new(-x.y * w, x.x * w) / 25.0
            }
        }
    }

    /// Jacobian (∂u_i/∂x_j) of the exact velocity.
    pub fn exact_velocity_gradient(&self, x: Vector2<f64>) -> Matrix2<f64> {
        match self.kind {
            ProblemKind::NoFlow => Matrix2::zeros(),
            ProblemKind::Flow if self.paper_psi => {
                let (g1, dg1, ddg1, _) = g(x.x);
                let (g2, dg2, ddg2, _) = g(x.y);
                Matrix2::new(dg1 * dg2, g1 * ddg2, -ddg1 * g2, -dg1 * dg2) / 100.0
            }
            ProblemKind::Flow => {
                let (x1, x2) = (x.x, x.y);
                Matrix2::new(
                    2.0 * x1 * x2,
                    -(1.0 - x1 * x1 - 3.0 * x2 * x2),
                    1.0 - 3.0 * x1 * x1 - x2 * x2,
                    -2.0 * x1 * x2,
                ) / 25.0
            }
        }
    }

    /// Exact pressure before gauge recentering.
    pub fn exact_pressure(&self, x: Vector2<f64>) -> f64 {
        pressure(x)
    }

    pub fn forcing(&self, x: Vector2<f64>) -> Vector2<f64> {
        pressure_gradient(x) - self.nu * self.laplacian_u(x)
    }

    fn laplacian_u(&self, x: Vector2<f64>) -> Vector2<f64> {
        match self.kind {
            ProblemKind::NoFlow => Vector2::zeros(),
            ProblemKind::Flow if self.paper_psi => {
                let (g1, dg1, ddg1, dddg1) = g(x.x);
                let (g2, dg2, ddg2, dddg2) = g(x.y);
                Vector2::new(ddg1 * dg2 + g1 * dddg2, -(dddg1 * g2 + dg1 * ddg2)) / 100.0
            }
            ProblemKind::Flow => Vector2::new(8.0 * x.y, -8.0 * x.x) / 25.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variants() -> [Problem; 3] {
        [
            Problem::new(ProblemKind::NoFlow, 0.7, false),
            Problem::new(ProblemKind::Flow, 0.7, false),
            Problem::new(ProblemKind::Flow, 0.7, true),
        ]
    }

    fn sample_points() -> Vec<Vector2<f64>> {
        let mut pts = Vec::new();
        for i in 0..8 {
            for j in 1..6 {
                let r = j as f64 / 6.0;
                let th = 2.0 * std::f64::consts::PI * i as f64 / 8.0 + 0.19;
                pts.push(Vector2::new(r * th.cos(), r * th.sin()));
            }
        }
        pts
    }

    #[test]
    fn flow_velocity_vanishes_on_the_circle() {
        let prob = Problem::new(ProblemKind::Flow, 1.0, false);
        for k in 0..200 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 200.0;
            let x = Vector2::new(th.cos(), th.sin());
            assert!(prob.exact_velocity(x).norm() <= 1e-13);
            assert!(prob.exact_velocity_gradient(x).trace().abs() <= 1e-13);
        }
    }

    #[test]
    fn flow_velocity_is_divergence_free_everywhere() {
        for prob in variants() {
            for x in sample_points() {
                let div = prob.exact_velocity_gradient(x).trace();
                assert!(div.abs() <= 1e-13, "{} div {div:.3e}", prob.name());
            }
        }
    }

    #[test]
    fn velocity_gradient_matches_finite_differences() {
        let h = 1e-5;
        for prob in variants() {
            for x in sample_points() {
                let grad = prob.exact_velocity_gradient(x);
                for j in 0..2 {
                    let mut e = Vector2::zeros();
                    e[j] = h;
                    let fd = (prob.exact_velocity(x + e) - prob.exact_velocity(x - e))
                        / (2.0 * h);
                    let err = (Vector2::from(grad.column(j)) - fd).norm();
                    assert!(err <= 1e-8, "{} column {j} off by {err:.3e}", prob.name());
                }
            }
        }
    }

    #[test]
    fn forcing_matches_a_finite_difference_stokes_operator() {
        let h = 1e-4;
        for prob in variants() {
            for x in sample_points() {
                let e1 = Vector2::new(h, 0.0);
                let e2 = Vector2::new(0.0, h);
                let lap = (prob.exact_velocity(x + e1)
                    + prob.exact_velocity(x - e1)
                    + prob.exact_velocity(x + e2)
                    + prob.exact_velocity(x - e2)
                    - 4.0 * prob.exact_velocity(x))
                    / (h * h);
                let gp = Vector2::new(
                    (prob.exact_pressure(x + e1) - prob.exact_pressure(x - e1)) / (2.0 * h),
                    (prob.exact_pressure(x + e2) - prob.exact_pressure(x - e2)) / (2.0 * h),
                );
                let err = (prob.forcing(x) - (gp - prob.nu * lap)).norm();
                assert!(err <= 1e-6, "{} forcing off by {err:.3e}", prob.name());
            }
        }
    }

    #[test]
    fn noflow_forcing_is_exactly_the_pressure_gradient() {
        let prob = Problem::new(ProblemKind::NoFlow, 123.0, false);
        for x in sample_points() {
            assert_eq!(prob.forcing(x), pressure_gradient(x));
            assert_eq!(prob.exact_velocity(x), Vector2::zeros());
        }
    }
}
