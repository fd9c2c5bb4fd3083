use std::fmt;
use std::rc::Rc;

use crate::env::EnvId;
use crate::error::RtResult;
use crate::ir::Ir;
use crate::object_space::{ObjRef, ObjectSpace};
use crate::selector::FullSelector;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Visibility {
    Public,
    Protected,
    Private,
}

impl Visibility {
    pub fn name(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Protected => "protected",
            Visibility::Private => "private",
        }
    }
}

impl std::str::FromStr for Visibility {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "public" => Ok(Visibility::Public),
            "protected" => Ok(Visibility::Protected),
            "private" => Ok(Visibility::Private),
            other => Err(format!("unknown visibility `{other}`")),
        }
    }
}

/// What a dictionary entry does when it is hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BridgeRole {
    /// Runs the method body directly.
    Real,
    /// Always raises ArgumentError.
    ArgumentErrorStub,
    /// Fills missing optionals with their defaults, then runs the body.
    DefaultFillingStub,
    /// Unpacks the trailing splat and re-checks the count.
    SplatAdapter,
}

/// Parameter list of a method.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    pub required: usize,
    pub optionals: Vec<(String, Rc<Ir>)>,
    pub splat: bool,
    pub block: bool,
    /// Primitive-only: a block may stand in for the last positional argument.
    pub block_fills_last: bool,
}

impl Signature {
    pub fn fixed(required: usize) -> Self {
        Signature {
            required,
            ..Signature::default()
        }
    }

    pub fn with_optionals(mut self, optionals: Vec<(String, Rc<Ir>)>) -> Self {
        self.optionals = optionals;
        self
    }

    pub fn with_splat(mut self) -> Self {
        self.splat = true;
        self
    }

    pub fn with_block(mut self) -> Self {
        self.block = true;
        self
    }

    /// Required plus optional parameter count.
    pub fn arity(&self) -> usize {
        self.required + self.optionals.len()
    }

    pub fn describe_expected(&self) -> String {
        if self.splat {
            format!("{}+", self.required)
        } else if self.optionals.is_empty() {
            self.required.to_string()
        } else {
            format!("{}..{}", self.required, self.arity())
        }
    }
}

pub type NativeFn = fn(&mut ObjectSpace, &Value, &[Value], Option<&Value>) -> RtResult<Value>;

pub enum MethodBody {
    Ir(Rc<Ir>),
    Native(NativeFn),
    /// A smalltalk method exposed to ruby by a primitive mapping.
    Smalltalk(Rc<MethodEntry>),
}

impl fmt::Debug for MethodBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodBody::Ir(ir) => f.debug_tuple("Ir").field(ir).finish(),
            MethodBody::Native(_) => f.write_str("Native"),
            MethodBody::Smalltalk(m) => f.debug_tuple("Smalltalk").field(&m.selector).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodEntry {
    /// Dictionary key: a full selector in ruby, a keyword selector in smalltalk.
    pub selector: String,
    pub env: EnvId,
    pub visibility: Visibility,
    pub signature: Rc<Signature>,
    pub body: Rc<MethodBody>,
    pub bridge_role: BridgeRole,
    pub defining_class: ObjRef,
    /// Parsed form of `selector` for ruby entries.
    pub shape: Option<FullSelector>,
}

impl MethodEntry {
    /// Selector without the arity suffix.
    pub fn base(&self) -> &str {
        match &self.shape {
            Some(s) => &s.base,
            None => &self.selector,
        }
    }
}

/// Argument count implied by a smalltalk selector.
pub fn smalltalk_arity(selector: &str) -> usize {
    let colons = selector.matches(':').count();
    if colons > 0 {
        colons
    } else if selector
        .chars()
        .next()
        .is_some_and(|c| !(c.is_alphanumeric() || c == '_'))
    {
        1
    } else {
        0
    }
}
