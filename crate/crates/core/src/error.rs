use thiserror::Error;

use crate::affine::VarId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value assigned to variable #{}", .0.index())]
    MissingVariable(VarId),
}

/// Failure of the end-to-end decision pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] crate::frontend::ParseError),
    #[error(transparent)]
    NotTriangularizable(#[from] crate::frontend::NotTriangularizable),
    #[error(transparent)]
    ClosedForm(#[from] crate::closedform::ClosedFormError),
    #[error(transparent)]
    Solver(#[from] crate::omega::SolverError),
    #[error(transparent)]
    Backend(#[from] crate::smtlib::BackendError),
}
