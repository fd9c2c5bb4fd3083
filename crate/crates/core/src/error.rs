use thiserror::Error;

use crate::env::EnvId;

/// Why a lookup produced no admissible method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MissReason {
    Absent,
    Private,
    Protected,
}

impl MissReason {
    pub fn name(self) -> &'static str {
        match self {
            MissReason::Absent => "absent",
            MissReason::Private => "private",
            MissReason::Protected => "protected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RtError {
    #[error("name `{0}` is already registered")]
    NameConflict(String),
    #[error("{0} cannot be instantiated")]
    NotInstantiable(String),
    #[error("{0} is not a meta class")]
    NotAMetaClass(String),
    #[error("{0} is not a class")]
    NotAClass(String),
    #[error("undeclared instance variable `{0}`")]
    UndeclaredIvar(String),
    #[error("singleton classes cannot be generated for {0}")]
    SingletonForbidden(String),
    #[error("{0}")]
    ModelViolation(String),
    #[error("including {module} into {target} would create a cycle")]
    CyclicInclude { target: String, module: String },
    #[error("{message}")]
    NoMethod {
        env: EnvId,
        selector: String,
        reason: MissReason,
        message: String,
    },
    #[error("wrong number of arguments ({given} for {expected})")]
    Argument { given: usize, expected: String },
    #[error("method visibility is not supported in the smalltalk environment")]
    VisibilityUnsupported,
    #[error("no method `{selector}` in {class}")]
    NoSuchMethod { class: String, selector: String },
    #[error("unsupported ruby call shape: {0}")]
    UnsupportedShape(String),
    #[error("{0}")]
    Type(String),
    #[error("no block given")]
    LocalJump,
    #[error("key not found: {0}")]
    Key(String),
    #[error("{0}")]
    Compile(String),
    #[error("bootstrap-only operation: {0}")]
    NotBootstrapping(String),
}

impl RtError {
    /// Stable exception-class style name, used by script `expect error`.
    pub fn kind(&self) -> &'static str {
        match self {
            RtError::NameConflict(_) => "NameConflict",
            RtError::NotInstantiable(_) => "NotInstantiable",
            RtError::NotAMetaClass(_) => "NotAMetaClass",
            RtError::NotAClass(_) => "NotAClass",
            RtError::UndeclaredIvar(_) => "UndeclaredIvar",
            RtError::SingletonForbidden(_) => "SingletonForbidden",
            RtError::ModelViolation(_) => "ModelViolation",
            RtError::CyclicInclude { .. } => "CyclicInclude",
            RtError::NoMethod { .. } => "NoMethodError",
            RtError::Argument { .. } => "ArgumentError",
            RtError::VisibilityUnsupported => "VisibilityUnsupported",
            RtError::NoSuchMethod { .. } => "NoSuchMethod",
            RtError::UnsupportedShape(_) => "UnsupportedShape",
            RtError::Type(_) => "TypeError",
            RtError::LocalJump => "LocalJumpError",
            RtError::Key(_) => "KeyError",
            RtError::Compile(_) => "CompileError",
            RtError::NotBootstrapping(_) => "NotBootstrapping",
        }
    }

    pub fn miss_reason(&self) -> Option<MissReason> {
        match self {
            RtError::NoMethod { reason, .. } => Some(*reason),
            _ => None,
        }
    }
}

pub type RtResult<T> = Result<T, RtError>;
