use std::fmt;
use std::rc::Rc;

use crate::interp::Frame;
use crate::ir::Ir;
use crate::object_space::ObjRef;

/// Anything a variable, argument or slot can hold: heap objects plus
/// immediates that are boxed into their kernel class on demand.
#[derive(Clone, Debug)]
pub enum Value {
    Nil,
    Bool(bool),
    Int(i64),
    Str(Rc<str>),
    Sym(Rc<str>),
    Obj(ObjRef),
    Array(Rc<Vec<Value>>),
    Block(Rc<Block>),
    /// A smalltalk-side proxy that forwards every message to the ruby side.
    Wrapper(Rc<Value>),
}

/// A closure over the activation that created it.
pub struct Block {
    pub params: usize,
    pub body: Rc<Ir>,
    pub frame: Rc<Frame>,
    /// Set on blocks handed to ruby through a wrapper: object arguments get
    /// wrapped before they reach the smalltalk-side body.
    pub wrap_args: bool,
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Block")
            .field("params", &self.params)
            .field("env", &self.frame.env)
            .field("wrap_args", &self.wrap_args)
            .finish()
    }
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn sym(s: &str) -> Value {
        Value::Sym(Rc::from(s))
    }

    pub fn array(items: Vec<Value>) -> Value {
        Value::Array(Rc::new(items))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Nil)
    }

    pub fn as_obj(&self) -> Option<ObjRef> {
        match self {
            Value::Obj(r) => Some(*r),
            _ => None,
        }
    }

    /// Strips any number of wrapper layers.
    pub fn unwrapped(&self) -> &Value {
        let mut v = self;
        while let Value::Wrapper(inner) = v {
            v = inner;
        }
        v
    }

    pub fn truthy(&self) -> bool {
        !matches!(self, Value::Nil | Value::Bool(false))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Nil, Value::Nil) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Sym(a), Value::Sym(b)) => a == b,
            (Value::Obj(a), Value::Obj(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => a == b,
            (Value::Block(a), Value::Block(b)) => Rc::ptr_eq(a, b),
            (Value::Wrapper(a), Value::Wrapper(b)) => a == b,
            _ => false,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::str(v)
    }
}

impl From<ObjRef> for Value {
    fn from(v: ObjRef) -> Self {
        Value::Obj(v)
    }
}
