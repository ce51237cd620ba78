use thiserror::Error;

/// Errors surfaced by mesh handling, quadrature selection and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("element {element}: Jacobian determinant {det:.3e} is not positive at ({x1:.4}, {x2:.4})")]
    DegenerateElement {
        element: usize,
        det: f64,
        x1: f64,
        x2: f64,
    },

    #[error("no {domain} quadrature rule of degree {degree} (supported up to {max})")]
    QuadratureDegree {
        domain: &'static str,
        degree: usize,
        max: usize,
    },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("mesh file, line {line}: {msg}")]
    MeshFormat { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
