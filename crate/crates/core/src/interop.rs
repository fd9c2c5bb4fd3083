//! Cross-environment calls: ruby primitives for smalltalk methods, the
//! `@ruby1:` send and the wrapper proxy.

use std::rc::Rc;

use crate::dispatch::{CallCtx, LookupResult};
use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::method::{smalltalk_arity, MethodBody, Signature, Visibility};
use crate::object_space::{ObjRef, ObjectSpace};
use crate::selector::{parse_st_ruby_selector, split_keyword_parts, StRubySelector, RUBY_PREFIX};
use crate::value::{Block, Value};

impl ObjectSpace {
    fn find_st_method(&self, start: ObjRef, owner: ObjRef, st_selector: &str) -> RtResult<Rc<crate::method::MethodEntry>> {
        match self.lookup_from(Some(start), st_selector, EnvId::Smalltalk, CallCtx::implicit(None), &Value::Obj(owner)) {
            LookupResult::Found { entry, .. } => Ok(entry),
            LookupResult::Miss(_) => Err(RtError::NoSuchMethod {
                class: self.describe(owner),
                selector: st_selector.to_string(),
            }),
        }
    }

    fn install_primitive(&mut self, target: ObjRef, ruby_name: &str, st: Rc<crate::method::MethodEntry>) -> RtResult<()> {
        let arity = smalltalk_arity(&st.selector);
        let sig = Signature {
            required: arity,
            block_fills_last: arity > 0,
            ..Signature::default()
        };
        self.define_method(target, EnvId::Ruby, ruby_name, Visibility::Public, sig, MethodBody::Smalltalk(st))
    }

    /// Exposes the smalltalk method `st_selector` of `class` to ruby as
    /// `ruby_name`, with the arity taken from the selector.
    pub fn primitive(&mut self, class: ObjRef, ruby_name: &str, st_selector: &str) -> RtResult<()> {
        let st = self.find_st_method(class, class, st_selector)?;
        self.install_primitive(class, ruby_name, st)
    }

    /// Class-side variant: resolves on the meta side and installs on the
    /// ruby singleton class.
    pub fn class_primitive(&mut self, class: ObjRef, ruby_name: &str, st_selector: &str) -> RtResult<()> {
        let meta = self.virtual_class(class);
        let st = self.find_st_method(meta, class, st_selector)?;
        let target = self.ruby_singleton_class(&Value::Obj(class))?;
        self.install_primitive(target, ruby_name, st)
    }

    /// A smalltalk-side `@ruby1:` send.
    pub fn st_call_ruby(
        &mut self,
        recv: &Value,
        sel: &StRubySelector,
        args: Vec<Value>,
        splat: Option<Value>,
        block: Option<Value>,
        ctx: CallCtx,
    ) -> RtResult<Value> {
        if args.len() != sel.normal_args || splat.is_some() != sel.has_splat || block.is_some() != sel.has_block {
            return Err(RtError::Compile(format!(
                "ruby selector for `{}` needs {} value(s)",
                sel.base,
                sel.value_count()
            )));
        }
        let splat = match splat.as_ref().map(Value::unwrapped) {
            None => None,
            Some(Value::Array(items)) => Some(items.as_ref().clone()),
            Some(other) => Some(vec![other.clone()]),
        };
        self.send_ruby(recv, &sel.base, args, splat, block, ctx)
    }

    pub fn wrap(&self, v: &Value) -> Value {
        Value::Wrapper(Rc::new(v.unwrapped().clone()))
    }

    /// Wraps object results; immediates pass through.
    pub(crate) fn wrap_result(&self, v: Value) -> Value {
        match v.unwrapped() {
            Value::Obj(_) => self.wrap(&v),
            other => other.clone(),
        }
    }

    fn wrap_block(v: Value) -> Value {
        match v {
            Value::Block(b) if !b.wrap_args => Value::Block(Rc::new(Block {
                params: b.params,
                body: b.body.clone(),
                frame: b.frame.clone(),
                wrap_args: true,
            })),
            other => other,
        }
    }

    /// Forwards a smalltalk message sent to a wrapper as a ruby send.
    pub fn wrapper_send(&mut self, wrapper: &Value, selector: &str, args: Vec<Value>) -> RtResult<Value> {
        let target = wrapper.unwrapped().clone();
        let binary = !selector.contains(':') && smalltalk_arity(selector) == 1;
        let sel = if binary {
            StRubySelector {
                base: selector.to_string(),
                normal_args: 1,
                has_splat: false,
                has_block: false,
            }
        } else {
            parse_st_ruby_selector(&split_keyword_parts(&format!("{RUBY_PREFIX}{selector}")))?
        };
        if args.len() != sel.value_count() {
            return Err(RtError::Compile(format!(
                "{selector} carries {} value(s), {} given",
                sel.value_count(),
                args.len()
            )));
        }
        let mut args: Vec<Value> = args.into_iter().map(Self::wrap_block).collect();
        let block = sel.has_block.then(|| args.pop()).flatten();
        let splat = sel.has_splat.then(|| args.pop()).flatten();
        let result = self.st_call_ruby(&target, &sel, args, splat, block, CallCtx::explicit(None))?;
        Ok(self.wrap_result(result))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::bootstrap;

    #[test]
    fn wrapped_integer_arithmetic() {
        let mut os = bootstrap();
        let w = os.wrap(&Value::Int(3));
        assert_eq!(os.wrapper_send(&w, "+", vec![Value::Int(4)]), Ok(Value::Int(7)));
        assert_eq!(os.send_st(&w, "*", vec![Value::Int(2)], CallCtx::default()), Ok(Value::Int(6)));
    }

    #[test]
    fn primitive_needs_a_smalltalk_method() {
        let mut os = bootstrap();
        let object = os.kernel().object;
        let c = os.new_class(Some("P"), None, object, &[]).unwrap();
        assert!(matches!(os.primitive(c, "x", "nothing:"), Err(RtError::NoSuchMethod { .. })));
    }

    #[test]
    fn argument_counts_must_match_the_shape() {
        let mut os = bootstrap();
        let sel = parse_st_ruby_selector(&["@ruby1:size"]).unwrap();
        let arr = Value::array(vec![Value::Int(1)]);
        assert_eq!(os.st_call_ruby(&arr, &sel, vec![], None, None, CallCtx::default()), Ok(Value::Int(1)));
        assert!(os.st_call_ruby(&arr, &sel, vec![Value::Nil], None, None, CallCtx::default()).is_err());
    }
}
