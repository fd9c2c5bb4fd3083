//! Environment-aware lookup, visibility, sends, super sends and
//! `method_missing`.

use std::rc::Rc;

use crate::bridge::{bind, generate_bridges};
use crate::env::EnvId;
use crate::error::{MissReason, RtError, RtResult};
use crate::method::{smalltalk_arity, BridgeRole, MethodBody, MethodEntry, Signature, Visibility};
use crate::object_space::{ObjRef, ObjectSpace};
use crate::selector::{translate_call_site, FullSelector};
use crate::value::Value;

/// What the visibility rules need to know about the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CallCtx {
    /// Holder class of the calling method, if any.
    pub caller_class: Option<ObjRef>,
    /// Receiverless call (`foo` rather than `x.foo`).
    pub implicit_self: bool,
}

impl CallCtx {
    pub fn explicit(caller_class: Option<ObjRef>) -> Self {
        CallCtx {
            caller_class,
            implicit_self: false,
        }
    }

    pub fn implicit(caller_class: Option<ObjRef>) -> Self {
        CallCtx {
            caller_class,
            implicit_self: true,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LookupResult {
    Found { entry: Rc<MethodEntry>, holder: ObjRef },
    Miss(MissReason),
}

impl LookupResult {
    pub fn holder(&self) -> Option<ObjRef> {
        match self {
            LookupResult::Found { holder, .. } => Some(*holder),
            LookupResult::Miss(_) => None,
        }
    }
}

/// The currently executing method, as far as super sends care.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodCtx {
    pub holder: ObjRef,
    /// Base name in ruby, keyword selector in smalltalk.
    pub selector: String,
    pub env: EnvId,
}

impl ObjectSpace {
    /// Classes searched, in order, for a send to `receiver` in `env`.
    pub fn lookup_order(&self, receiver: &Value, env: EnvId) -> Vec<ObjRef> {
        self.env_chain(self.dispatch_class(receiver.unwrapped()), env)
    }

    pub fn lookup(&self, receiver: &Value, selector: &str, env: EnvId, ctx: CallCtx) -> LookupResult {
        let start = self.dispatch_class(receiver.unwrapped());
        self.lookup_from(Some(start), selector, env, ctx, receiver)
    }

    pub fn lookup_from(
        &self,
        start: Option<ObjRef>,
        selector: &str,
        env: EnvId,
        ctx: CallCtx,
        receiver: &Value,
    ) -> LookupResult {
        let mut cur = start;
        while let Some(c) = cur {
            let desc = match self.class_desc(c) {
                Ok(d) => d,
                Err(_) => break,
            };
            if let Some(entry) = desc.table(env).and_then(|t| t.methods.get(selector)) {
                return match self.visibility_denies(entry, c, ctx, receiver) {
                    Some(reason) => LookupResult::Miss(reason),
                    None => LookupResult::Found {
                        entry: entry.clone(),
                        holder: c,
                    },
                };
            }
            cur = desc.env_parent(env);
        }
        LookupResult::Miss(MissReason::Absent)
    }

    /// `None` when the call is admissible.
    pub fn visibility_denies(
        &self,
        entry: &MethodEntry,
        holder: ObjRef,
        ctx: CallCtx,
        receiver: &Value,
    ) -> Option<MissReason> {
        match entry.visibility {
            Visibility::Public => None,
            Visibility::Private if ctx.implicit_self => None,
            Visibility::Private => Some(MissReason::Private),
            Visibility::Protected => {
                let kindred = ctx.implicit_self
                    || (ctx
                        .caller_class
                        .is_some_and(|cc| self.inherits_from(cc, holder, EnvId::Ruby))
                        && self.value_is_kind_of(receiver.unwrapped(), holder));
                (!kindred).then_some(MissReason::Protected)
            }
        }
    }

    /// A ruby call site: `recv.base(args, *splat, &block)`.
    pub fn send_ruby(
        &mut self,
        recv: &Value,
        base: &str,
        args: Vec<Value>,
        splat: Option<Vec<Value>>,
        block: Option<Value>,
        ctx: CallCtx,
    ) -> RtResult<Value> {
        let recv = recv.unwrapped().clone();
        let start = self.dispatch_class(&recv);
        self.dispatch_ruby(Some(start), &recv, base, args, splat, block, ctx)
    }

    #[allow(clippy::too_many_arguments)]
    fn dispatch_ruby(
        &mut self,
        start: Option<ObjRef>,
        recv: &Value,
        base: &str,
        mut args: Vec<Value>,
        splat: Option<Vec<Value>>,
        block: Option<Value>,
        ctx: CallCtx,
    ) -> RtResult<Value> {
        let (sel, packing) = translate_call_site(base, args.len(), splat.is_some(), block.is_some());
        let rest = match packing.pack_from {
            Some(from) => {
                let mut packed = args.split_off(from);
                packed.extend(splat.unwrap_or_default());
                Some(packed)
            }
            None => splat,
        };
        match self.lookup_from(start, &sel.render(), EnvId::Ruby, ctx, recv) {
            LookupResult::Found { entry, holder } => self.invoke_entry(&entry, holder, recv, args, rest, block),
            LookupResult::Miss(reason) => {
                let mut all = args;
                all.extend(rest.unwrap_or_default());
                self.method_missing(recv, base, all, block, reason, ctx)
            }
        }
    }

    /// Sends a raw dictionary key. In ruby the key is a full selector and a
    /// splat-marked key takes its splat as the last argument, an Array.
    pub fn send(
        &mut self,
        recv: &Value,
        selector: &str,
        mut args: Vec<Value>,
        block: Option<Value>,
        env: EnvId,
        ctx: CallCtx,
    ) -> RtResult<Value> {
        match env {
            EnvId::Smalltalk => self.send_st(recv, selector, args, ctx),
            EnvId::Ruby => {
                let shape = FullSelector::parse(selector)?;
                let rest = if shape.splat {
                    match args.pop().as_ref().map(Value::unwrapped) {
                        Some(Value::Array(items)) => Some(items.as_ref().clone()),
                        _ => return Err(RtError::Type(format!("{selector} expects a trailing Array"))),
                    }
                } else {
                    None
                };
                let recv = recv.unwrapped().clone();
                match self.lookup(&recv, selector, EnvId::Ruby, ctx) {
                    LookupResult::Found { entry, holder } => self.invoke_entry(&entry, holder, &recv, args, rest, block),
                    LookupResult::Miss(reason) => {
                        args.extend(rest.unwrap_or_default());
                        self.method_missing(&recv, &shape.base, args, block, reason, ctx)
                    }
                }
            }
        }
    }

    pub fn send_st(&mut self, recv: &Value, selector: &str, args: Vec<Value>, ctx: CallCtx) -> RtResult<Value> {
        if let Value::Wrapper(_) = recv {
            return self.wrapper_send(recv, selector, args);
        }
        let start = self.dispatch_class(recv);
        self.dispatch_st(Some(start), recv, selector, args, ctx)
    }

    fn dispatch_st(
        &mut self,
        start: Option<ObjRef>,
        recv: &Value,
        selector: &str,
        args: Vec<Value>,
        ctx: CallCtx,
    ) -> RtResult<Value> {
        if args.len() != smalltalk_arity(selector) {
            return Err(RtError::Compile(format!(
                "{selector} takes {} argument(s), {} given",
                smalltalk_arity(selector),
                args.len()
            )));
        }
        match self.lookup_from(start, selector, EnvId::Smalltalk, ctx, recv) {
            LookupResult::Found { entry, holder } => self.activate_st(&entry, holder, recv, args),
            LookupResult::Miss(reason) => Err(RtError::NoMethod {
                env: EnvId::Smalltalk,
                selector: selector.to_string(),
                reason,
                message: format!(
                    "MethodNotUnderstood: {} does not understand #{selector}",
                    crate::inspect::render_value(self, recv, EnvId::Smalltalk)
                ),
            }),
        }
    }

    /// Restarts lookup above the holder of the running method.
    pub fn super_send(
        &mut self,
        method: &MethodCtx,
        recv: &Value,
        args: Vec<Value>,
        splat: Option<Vec<Value>>,
        block: Option<Value>,
    ) -> RtResult<Value> {
        let start = self.env_parent(method.holder, method.env);
        let ctx = CallCtx::implicit(Some(method.holder));
        match method.env {
            EnvId::Ruby => self.dispatch_ruby(start, recv, &method.selector, args, splat, block, ctx),
            EnvId::Smalltalk => {
                if splat.is_some() || block.is_some() {
                    return Err(RtError::Compile("smalltalk super sends take plain arguments".into()));
                }
                self.dispatch_st(start, recv, &method.selector, args, ctx)
            }
        }
    }

    /// Runs a ruby dictionary entry according to its bridge role.
    pub fn invoke_entry(
        &mut self,
        entry: &Rc<MethodEntry>,
        holder: ObjRef,
        recv: &Value,
        mut positional: Vec<Value>,
        rest: Option<Vec<Value>>,
        block: Option<Value>,
    ) -> RtResult<Value> {
        let given = positional.len() + rest.as_ref().map_or(0, Vec::len);
        if entry.bridge_role == BridgeRole::ArgumentErrorStub {
            return Err(RtError::Argument {
                given,
                expected: entry.signature.describe_expected(),
            });
        }
        positional.extend(rest.unwrap_or_default());
        let bound = bind(&entry.signature, positional, block)?;
        self.activate(entry, holder, recv, bound)
    }

    fn activate_st(&mut self, entry: &Rc<MethodEntry>, holder: ObjRef, recv: &Value, args: Vec<Value>) -> RtResult<Value> {
        let bound = bind(&entry.signature, args, None)?;
        self.activate(entry, holder, recv, bound)
    }

    fn method_missing(
        &mut self,
        recv: &Value,
        base: &str,
        args: Vec<Value>,
        block: Option<Value>,
        reason: MissReason,
        ctx: CallCtx,
    ) -> RtResult<Value> {
        self.method_missing_calls += 1;
        let mut hook_args = Vec::with_capacity(args.len() + 1);
        hook_args.push(Value::sym(base));
        hook_args.extend(args);
        if base != "method_missing" {
            let (sel, _) = translate_call_site("method_missing", hook_args.len(), false, block.is_some());
            let hook_ctx = CallCtx::implicit(ctx.caller_class);
            if let LookupResult::Found { entry, holder } = self.lookup(recv, &sel.render(), EnvId::Ruby, hook_ctx) {
                let rest = (hook_args.len() > 3).then(|| hook_args.split_off(3));
                return self.invoke_entry(&entry, holder, recv, hook_args, rest, block);
            }
        }
        let who = crate::inspect::render_value(self, recv, EnvId::Ruby);
        let message = match reason {
            MissReason::Absent => format!("undefined method `{base}' for {who}"),
            MissReason::Private => format!("private method `{base}' called for {who}"),
            MissReason::Protected => format!("protected method `{base}' called for {who}"),
        };
        Err(RtError::NoMethod {
            env: EnvId::Ruby,
            selector: base.to_string(),
            reason,
            message,
        })
    }

    fn check_definable(&self, class: ObjRef, env: EnvId) -> RtResult<()> {
        let desc = self.class_desc(class)?;
        if desc.is_virtual() {
            return Err(RtError::ModelViolation(format!(
                "cannot define methods on module copy {}",
                self.describe(class)
            )));
        }
        if env == EnvId::Smalltalk && desc.is_module() && !desc.is_meta() {
            return Err(RtError::ModelViolation(format!(
                "modules cannot be given smalltalk methods: {}",
                self.describe(class)
            )));
        }
        Ok(())
    }

    pub fn define_method(
        &mut self,
        class: ObjRef,
        env: EnvId,
        selector: &str,
        visibility: Visibility,
        signature: Signature,
        body: MethodBody,
    ) -> RtResult<()> {
        self.check_definable(class, env)?;
        match env {
            EnvId::Smalltalk => {
                if visibility != Visibility::Public {
                    return Err(RtError::VisibilityUnsupported);
                }
                let arity = smalltalk_arity(selector);
                if signature.required != arity || !signature.optionals.is_empty() || signature.splat {
                    return Err(RtError::Compile(format!(
                        "smalltalk method {selector} must take exactly {arity} plain argument(s)"
                    )));
                }
                let entry = MethodEntry {
                    selector: selector.to_string(),
                    env,
                    visibility,
                    signature: Rc::new(signature),
                    body: Rc::new(body),
                    bridge_role: BridgeRole::Real,
                    defining_class: class,
                    shape: None,
                };
                self.class_desc_mut(class)?
                    .table_or_create(env)
                    .methods
                    .insert(selector.to_string(), Rc::new(entry));
            }
            EnvId::Ruby => {
                if selector.is_empty() || selector.contains('#') {
                    return Err(RtError::Compile(format!("`{selector}` is not a ruby method name")));
                }
                let entries = generate_bridges(selector, Rc::new(signature), Rc::new(body), class, visibility);
                let table = self.class_desc_mut(class)?.table_or_create(env);
                table.methods.retain(|_, e| e.base() != selector);
                for e in entries {
                    table.methods.insert(e.selector.clone(), Rc::new(e));
                }
            }
        }
        Ok(())
    }

    /// Registers one body under a single full selector, next to an existing
    /// family. Only possible while bootstrapping.
    pub fn define_overload(
        &mut self,
        class: ObjRef,
        full_selector: &str,
        signature: Signature,
        body: MethodBody,
    ) -> RtResult<()> {
        if !self.bootstrapping {
            return Err(RtError::NotBootstrapping(format!("overloading {full_selector}")));
        }
        self.check_definable(class, EnvId::Ruby)?;
        let shape = FullSelector::parse(full_selector)?;
        let entry = MethodEntry {
            selector: shape.render(),
            env: EnvId::Ruby,
            visibility: Visibility::Public,
            signature: Rc::new(signature),
            body: Rc::new(body),
            bridge_role: BridgeRole::Real,
            defining_class: class,
            shape: Some(shape),
        };
        self.class_desc_mut(class)?
            .table_or_create(EnvId::Ruby)
            .methods
            .insert(entry.selector.clone(), Rc::new(entry));
        Ok(())
    }

    /// Changes the visibility of every bridge of `base` defined on `class`.
    pub fn set_visibility(&mut self, class: ObjRef, env: EnvId, base: &str, visibility: Visibility) -> RtResult<()> {
        if env == EnvId::Smalltalk {
            return Err(RtError::VisibilityUnsupported);
        }
        let class_name = self.describe(class);
        let table = self.class_desc_mut(class)?.table_or_create(env);
        let mut hit = false;
        for entry in table.methods.values_mut() {
            if entry.base() == base {
                let mut e = entry.as_ref().clone();
                e.visibility = visibility;
                *entry = Rc::new(e);
                hit = true;
            }
        }
        if hit {
            Ok(())
        } else {
            Err(RtError::NoSuchMethod {
                class: class_name,
                selector: base.to_string(),
            })
        }
    }

    /// Dictionary keys in `class`'s `env` table.
    pub fn selectors(&self, class: ObjRef, env: EnvId) -> Vec<String> {
        self.class_desc(class)
            .ok()
            .and_then(|d| d.table(env))
            .map(|t| t.methods.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn method_at(&self, class: ObjRef, env: EnvId, selector: &str) -> Option<Rc<MethodEntry>> {
        self.class_desc(class).ok()?.table(env)?.methods.get(selector).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Ir;
    use crate::kernel::bootstrap;

    fn ir(src: &str) -> MethodBody {
        MethodBody::Ir(Rc::new(Ir::parse(src).unwrap()))
    }

    #[test]
    fn definition_counts() {
        let mut os = bootstrap();
        let object = os.kernel().object;
        let c = os.new_class(None, Some("C"), object, &[]).unwrap();
        os.define_method(c, EnvId::Ruby, "f", Visibility::Public, Signature::fixed(2), ir("1")).unwrap();
        assert_eq!(os.selectors(c, EnvId::Ruby).len(), 16);
        os.define_method(c, EnvId::Ruby, "f", Visibility::Public, Signature::fixed(5), ir("1")).unwrap();
        assert_eq!(os.selectors(c, EnvId::Ruby).len(), 17);
        os.define_method(c, EnvId::Ruby, "f", Visibility::Public, Signature::fixed(0), ir("1")).unwrap();
        assert_eq!(os.selectors(c, EnvId::Ruby).len(), 16);
        assert!(os.selectors(c, EnvId::Smalltalk).is_empty());
    }

    #[test]
    fn smalltalk_rules() {
        let mut os = bootstrap();
        let object = os.kernel().object;
        let c = os.new_class(Some("C"), None, object, &[]).unwrap();
        assert_eq!(
            os.define_method(c, EnvId::Smalltalk, "x", Visibility::Private, Signature::fixed(0), ir("1")),
            Err(RtError::VisibilityUnsupported)
        );
        assert!(os
            .define_method(c, EnvId::Smalltalk, "at:", Visibility::Public, Signature::fixed(0), ir("1"))
            .is_err());
        assert_eq!(os.set_visibility(c, EnvId::Smalltalk, "x", Visibility::Private), Err(RtError::VisibilityUnsupported));
        assert!(matches!(
            os.set_visibility(c, EnvId::Ruby, "nope", Visibility::Private),
            Err(RtError::NoSuchMethod { .. })
        ));
    }

    #[test]
    fn private_needs_implicit_self() {
        let mut os = bootstrap();
        let object = os.kernel().object;
        let c = os.new_class(None, Some("C"), object, &[]).unwrap();
        os.define_method(c, EnvId::Ruby, "secret", Visibility::Private, Signature::fixed(0), ir("42")).unwrap();
        os.define_method(c, EnvId::Ruby, "reveal", Visibility::Public, Signature::fixed(0), ir("(call secret)")).unwrap();
        let x = Value::Obj(os.new_instance(c).unwrap());
        let err = os.send_ruby(&x, "secret", vec![], None, None, CallCtx::default()).unwrap_err();
        assert_eq!(err.miss_reason(), Some(MissReason::Private));
        assert!(err.to_string().contains("private"));
        assert_eq!(os.send_ruby(&x, "reveal", vec![], None, None, CallCtx::default()), Ok(Value::Int(42)));
        os.set_visibility(c, EnvId::Ruby, "secret", Visibility::Public).unwrap();
        assert_eq!(os.send_ruby(&x, "secret", vec![], None, None, CallCtx::default()), Ok(Value::Int(42)));
    }

    #[test]
    fn overloads_only_during_bootstrap() {
        let mut os = bootstrap();
        let object = os.kernel().object;
        assert!(matches!(
            os.define_overload(object, "f#1__", Signature::fixed(1), ir("1")),
            Err(RtError::NotBootstrapping(_))
        ));
    }

    #[test]
    fn super_at_root_is_absent() {
        let mut os = bootstrap();
        let object = os.kernel().object;
        let c = os.new_class(None, Some("C"), object, &[]).unwrap();
        os.define_method(c, EnvId::Ruby, "zork", Visibility::Public, Signature::fixed(0), ir("(super)")).unwrap();
        let x = Value::Obj(os.new_instance(c).unwrap());
        let err = os.send_ruby(&x, "zork", vec![], None, None, CallCtx::default()).unwrap_err();
        assert_eq!(err.miss_reason(), Some(MissReason::Absent));
    }

    #[test]
    fn method_missing_hook_gets_original_selector() {
        let mut os = bootstrap();
        let object = os.kernel().object;
        let c = os.new_class(None, Some("C"), object, &[]).unwrap();
        let sig = Signature::fixed(1).with_splat();
        os.define_method(c, EnvId::Ruby, "method_missing", Visibility::Private, sig, ir("(array (arg 0) (arg 1))"))
            .unwrap();
        let x = Value::Obj(os.new_instance(c).unwrap());
        let before = os.method_missing_calls();
        let r = os.send_ruby(&x, "frob", vec![Value::Int(1), Value::Int(2)], None, None, CallCtx::default());
        assert_eq!(
            r,
            Ok(Value::array(vec![Value::sym("frob"), Value::array(vec![Value::Int(1), Value::Int(2)])]))
        );
        assert_eq!(os.method_missing_calls(), before + 1);
    }
}
