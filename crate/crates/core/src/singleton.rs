//! Lazy generation of singleton classes at any level.
//!
//! A singleton class is only materialized when first accessed. Its
//! superclass follows the parallel-hierarchy rule implemented in
//! [`ObjectSpace::singleton_superclass`]; missing superclasses are generated
//! recursively.

use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::object_space::{ObjRef, ObjectSpace};
use crate::value::Value;

impl ObjectSpace {
    pub fn helix_count(&self) -> usize {
        self.kernel.helix().len()
    }

    /// Whether `obj` may receive a singleton class at all.
    pub fn singleton_allowed(&self, obj: &Value) -> bool {
        match obj {
            Value::Obj(r) => self
                .class_desc(self.class_of(*r))
                .is_ok_and(|c| c.format.singleton_allowed),
            _ => false,
        }
    }

    fn describe_value(&self, v: &Value) -> String {
        crate::inspect::render_value(self, v, EnvId::Ruby)
    }

    /// The existing singleton class of `obj`, generating it when absent.
    fn singleton_of(&mut self, obj: ObjRef) -> RtResult<ObjRef> {
        let vc = self.virtual_class(obj);
        if self.is_meta(vc) {
            Ok(vc)
        } else {
            self.generate_singleton(obj)
        }
    }

    /// Superclass that `obj`'s singleton class must have. May generate
    /// singleton classes further up the hierarchy.
    pub fn singleton_superclass(&mut self, obj: ObjRef) -> RtResult<ObjRef> {
        let k = self.kernel;
        let Ok(desc) = self.class_desc(obj) else {
            return Ok(self.class_of(obj));
        };
        if obj == k.object {
            return Ok(k.class);
        }
        if desc.is_virtual() {
            return Err(RtError::ModelViolation(format!(
                "module copy {} cannot have a singleton class",
                self.describe(obj)
            )));
        }
        if desc.is_module() && !desc.is_meta() {
            // Keeps class_of(module) == Module once the singleton exists.
            return Ok(k.module);
        }
        match self.superclass(obj, EnvId::Ruby) {
            Some(sup) => self.singleton_of(sup),
            None => Err(RtError::ModelViolation(format!(
                "{} has no superclass",
                self.describe(obj)
            ))),
        }
    }

    /// Creates `obj`'s singleton class and makes it `obj`'s virtual class.
    pub fn generate_singleton(&mut self, obj: ObjRef) -> RtResult<ObjRef> {
        if !self.singleton_allowed(&Value::Obj(obj)) {
            return Err(RtError::SingletonForbidden(self.describe(obj)));
        }
        let vc = self.virtual_class(obj);
        if self.is_meta(vc) {
            return Err(RtError::ModelViolation(format!(
                "{} already has a singleton class",
                self.describe(obj)
            )));
        }
        let sup = self.singleton_superclass(obj)?;
        // The recursion above cannot reach obj itself, but re-check anyway
        // so a second generation never overwrites an existing level.
        let vc = self.virtual_class(obj);
        if self.is_meta(vc) {
            return Ok(vc);
        }
        let meta = self.new_meta_class(obj, sup);
        self.record_mut(obj).header.virtual_class = meta;
        Ok(meta)
    }

    pub fn check_generate_singleton(&mut self, obj: &Value) -> RtResult<()> {
        let Value::Obj(r) = obj else {
            return Ok(());
        };
        if !self.singleton_allowed(obj) {
            return Ok(());
        }
        if !self.is_meta(self.virtual_class(*r)) {
            self.generate_singleton(*r)?;
        }
        Ok(())
    }

    pub fn ensure_singleton_generated(&mut self, obj: &Value, depth: usize) -> RtResult<()> {
        let mut cur = obj.clone();
        for _ in 0..depth {
            self.check_generate_singleton(&cur)?;
            cur = Value::Obj(self.dispatch_class(&cur));
        }
        Ok(())
    }

    /// Singleton class as seen from ruby: two levels are guaranteed so that
    /// class-side methods resolve on the returned class.
    pub fn ruby_singleton_class(&mut self, obj: &Value) -> RtResult<ObjRef> {
        if !self.singleton_allowed(obj) {
            return Err(RtError::SingletonForbidden(self.describe_value(obj)));
        }
        self.ensure_singleton_generated(obj, 2)?;
        Ok(self.dispatch_class(obj))
    }

    fn max_dest(&self, obj: ObjRef) -> ObjRef {
        match self.class_desc(obj) {
            Ok(c) if c.is_meta() => {
                let dest = c.dest_class.expect("meta class without destination");
                if self.is_class(dest) {
                    dest
                } else {
                    self.class_of(dest)
                }
            }
            Ok(_) => obj,
            Err(_) => self.class_of(obj),
        }
    }

    /// Classes strictly above `from` up to and including `to` on `from`'s
    /// ruby superclass chain. Counts to the root when `to` is not on it.
    pub fn between(&self, from: ObjRef, to: ObjRef) -> usize {
        let mut n = 0;
        let mut cur = from;
        while cur != to {
            match self.superclass(cur, EnvId::Ruby) {
                Some(s) => {
                    n += 1;
                    cur = s;
                }
                None => break,
            }
        }
        n
    }

    /// Worst-case number of classes generated when accessing `obj`'s
    /// singleton class.
    pub fn max_gen(&self, obj: &Value) -> usize {
        let dest = match obj {
            Value::Obj(r) => self.max_dest(*r),
            other => self.immediate_class(other),
        };
        max_gen_formula(self.helix_count(), self.between(dest, self.kernel.object))
    }
}

/// `#helix + between + 2`.
pub fn max_gen_formula(helix: usize, between: usize) -> usize {
    helix + between + 2
}
