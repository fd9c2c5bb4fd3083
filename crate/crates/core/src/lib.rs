//! A dual-environment object runtime: one object space shared by a
//! Smalltalk-style and a Ruby-style world, with lazily generated
//! singleton classes, mixin modules as virtual superclasses, bridge
//! methods for ruby calling conventions and cross-environment sends.

pub mod bridge;
pub mod dispatch;
pub mod env;
pub mod error;
pub mod inspect;
pub mod interop;
pub mod interp;
pub mod ir;
pub mod kernel;
pub mod method;
pub mod modules;
pub mod object_space;
pub mod script;
pub mod selector;
pub mod sexpr;
pub mod singleton;
pub mod value;

pub use dispatch::{CallCtx, LookupResult};
pub use env::EnvId;
pub use error::{MissReason, RtError, RtResult};
pub use kernel::bootstrap;
pub use object_space::{ObjRef, ObjectSpace};
pub use value::Value;
