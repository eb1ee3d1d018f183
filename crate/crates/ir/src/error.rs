use hoacs_core::RncError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}: %{name} used before definition")]
    UseBeforeDef { name: String, line: usize },
    #[error("{line}: %{name} is already defined")]
    Redefinition { name: String, line: usize },
    #[error("{line}: unsupported type `{ty}` (only u8 and u32)")]
    UnsupportedType { ty: String, line: usize },
    #[error("{line}: {msg}")]
    Type { line: usize, msg: String },
    #[error("unknown function @{0}")]
    UnknownFunction(String),
    #[error("no moduli for width {0}")]
    Width(u32),
    #[error("trap: {0}")]
    Trap(String),
    #[error(transparent)]
    Rnc(#[from] RncError),
}

impl IrError {
    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        IrError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub(crate) fn ty(line: usize, msg: impl Into<String>) -> Self {
        IrError::Type {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = IrError> = std::result::Result<T, E>;
