use thiserror::Error;

/// Failures raised by the expression kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown function symbol `{0}`")]
    UnknownFunction(String),
    #[error("`{func}` does not depend on `{var}`")]
    UndeclaredDirection { func: String, var: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent {0} does not fit the exponent range")]
    ExponentOverflow(String),
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error("missing Jacobian entry d{new}/d{old}")]
    MissingJacobian { new: String, old: String },
    #[error("no value assigned to `{0}`")]
    Unassigned(String),
    #[error("expression is not of the expected shape: {0}")]
    Shape(String),
}

pub type KResult<T> = Result<T, KernelError>;
