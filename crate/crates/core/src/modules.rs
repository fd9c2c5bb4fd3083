//! Modules and their inclusion as virtual superclasses.

use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::object_space::{ClassDescriptor, EnvTable, Format, ObjRef, ObjectSpace};
use crate::value::Value;

impl ObjectSpace {
    pub fn new_module(&mut self, name_rb: &str) -> RtResult<ObjRef> {
        if self.lookup_name(EnvId::Ruby, name_rb).is_some() {
            return Err(RtError::NameConflict(name_rb.to_string()));
        }
        let m = self.new_nameless_module();
        self.register_name(EnvId::Ruby, name_rb, m)?;
        Ok(m)
    }

    pub fn new_nameless_module(&mut self) -> ObjRef {
        let k = self.kernel;
        let format = Format {
            is_module: true,
            singleton_allowed: true,
            ..Format::default()
        };
        let mut desc = ClassDescriptor::new(format, Some(k.object), Vec::new());
        // Modules are ruby-only; their smalltalk side stays empty.
        desc.env_tables[EnvId::Smalltalk.index()] = None;
        let values = vec![Value::Nil; self.class_desc(k.module).map(|c| c.static_slots.len()).unwrap_or(0)];
        self.alloc_class(k.module, desc, k.module, values)
    }

    /// First non-virtual class above `class` in `env`.
    pub fn superclass(&self, class: ObjRef, env: EnvId) -> Option<ObjRef> {
        let mut cur = self.env_parent(class, env);
        while let Some(c) = cur {
            if !self.is_virtual(c) {
                return Some(c);
            }
            cur = self.env_parent(c, env);
        }
        None
    }

    /// Immediate chain parent in `env`, possibly a module copy.
    pub fn virtual_superclass(&self, class: ObjRef, env: EnvId) -> Option<ObjRef> {
        self.env_parent(class, env)
    }

    /// Every class on `class`'s env chain, `class` first.
    pub fn env_chain(&self, class: ObjRef, env: EnvId) -> Vec<ObjRef> {
        let mut out = Vec::new();
        let mut cur = Some(class);
        while let Some(c) = cur {
            out.push(c);
            cur = self.env_parent(c, env);
        }
        out
    }

    pub fn origin(&self, class: ObjRef) -> Option<ObjRef> {
        self.class_desc(class).ok().and_then(|c| c.origin)
    }

    pub fn included_modules(&self, class: ObjRef, env: EnvId) -> Vec<ObjRef> {
        let mut out: Vec<ObjRef> = Vec::new();
        for c in self.env_chain(class, env).into_iter().skip(1) {
            if let Some(o) = self.origin(c) {
                if !out.contains(&o) {
                    out.push(o);
                }
            }
        }
        out
    }

    /// `module` followed by the modules it includes itself, nearest first.
    fn module_expansion(&self, module: ObjRef, env: EnvId) -> Vec<ObjRef> {
        let mut out = vec![module];
        for o in self.included_modules(module, env) {
            if !out.contains(&o) {
                out.push(o);
            }
        }
        out
    }

    pub fn include_module(&mut self, class: ObjRef, module: ObjRef, env: EnvId) -> RtResult<()> {
        let target = self.class_desc(class)?;
        if target.is_virtual() {
            return Err(RtError::ModelViolation(format!(
                "cannot include into module copy {}",
                self.describe(class)
            )));
        }
        if !self.is_module(module) {
            return Err(RtError::ModelViolation(format!(
                "{} is not a module",
                self.describe(module)
            )));
        }
        let expansion = self.module_expansion(module, env);
        if expansion.contains(&class) {
            return Err(RtError::CyclicInclude {
                target: self.describe(class),
                module: self.describe(module),
            });
        }
        let chain = self.env_chain(class, env);
        let present = |os: &ObjectSpace, m: ObjRef| {
            chain.iter().any(|&c| c == m || os.origin(c) == Some(m))
        };
        let missing: Vec<ObjRef> = expansion.into_iter().filter(|&m| !present(self, m)).collect();
        // Insert deepest first so `module` ends up nearest to `class`.
        for m in missing.into_iter().rev() {
            let copy = self.copy_module(m, env, self.env_parent(class, env));
            self.class_desc_mut(class)?.table_or_create(env).superclass = Some(copy);
        }
        Ok(())
    }

    /// A virtual class holding a snapshot of `module`'s `env` methods.
    fn copy_module(&mut self, module: ObjRef, env: EnvId, superclass: Option<ObjRef>) -> ObjRef {
        let k = self.kernel;
        let methods = self
            .class_desc(module)
            .ok()
            .and_then(|d| d.table(env))
            .map(|t| t.methods.clone())
            .unwrap_or_default();
        let format = Format {
            is_virtual: true,
            is_module: true,
            ..Format::default()
        };
        let mut desc = ClassDescriptor::new(format, superclass, Vec::new());
        desc.origin = Some(module);
        desc.env_tables = [None, None];
        desc.env_tables[env.index()] = Some(EnvTable {
            methods,
            superclass,
        });
        self.alloc_class(k.module, desc, k.module, Vec::new())
    }
}
