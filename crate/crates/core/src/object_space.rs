//! Object allocation, class descriptors and instance-variable storage.
//!
//! Every object, class, meta class and module lives in one arena owned by
//! [`ObjectSpace`]. An object's header carries the *virtual class* pointer
//! used for dispatch; the *class* of an object is derived from it by
//! skipping meta classes.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::method::MethodEntry;
use crate::value::Value;

/// Opaque handle naming one object. Handles are never reused.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjRef(u32);

impl ObjRef {
    /// Stand-in used while the kernel is being wired together.
    pub(crate) const UNSET: ObjRef = ObjRef(u32::MAX);

    pub fn oop(self) -> u32 {
        self.0
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for ObjRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

impl fmt::Display for ObjRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

/// Class format flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Format {
    pub is_meta: bool,
    pub is_virtual: bool,
    pub is_module: bool,
    pub instantiable: bool,
    /// Whether instances of this class may receive singleton classes.
    pub singleton_allowed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticSlot {
    pub name: String,
    pub hidden_from_ruby: bool,
}

impl StaticSlot {
    pub fn visible(name: &str) -> Self {
        StaticSlot {
            name: name.to_string(),
            hidden_from_ruby: false,
        }
    }

    pub fn hidden(name: &str) -> Self {
        StaticSlot {
            name: name.to_string(),
            hidden_from_ruby: true,
        }
    }
}

/// Method dictionary plus superclass reference for one environment.
#[derive(Debug, Clone, Default)]
pub struct EnvTable {
    pub methods: BTreeMap<String, Rc<MethodEntry>>,
    pub superclass: Option<ObjRef>,
}

impl EnvTable {
    pub fn with_superclass(superclass: Option<ObjRef>) -> Self {
        EnvTable {
            methods: BTreeMap::new(),
            superclass,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassDescriptor {
    pub names: [Option<String>; 2],
    pub format: Format,
    /// The object whose virtual class this is; set on meta classes only.
    pub dest_class: Option<ObjRef>,
    /// The module a virtual (module-copy) class was made from.
    pub origin: Option<ObjRef>,
    pub env_tables: [Option<EnvTable>; 2],
    pub fallback_superclass: Option<ObjRef>,
    /// Full static layout for instances, inherited slots first.
    pub static_slots: Vec<StaticSlot>,
}

impl ClassDescriptor {
    pub(crate) fn new(format: Format, superclass: Option<ObjRef>, static_slots: Vec<StaticSlot>) -> Self {
        ClassDescriptor {
            names: [None, None],
            format,
            dest_class: None,
            origin: None,
            env_tables: [
                Some(EnvTable::with_superclass(superclass)),
                Some(EnvTable::with_superclass(superclass)),
            ],
            fallback_superclass: superclass,
            static_slots,
        }
    }

    pub fn name(&self, env: EnvId) -> Option<&str> {
        self.names[env.index()].as_deref()
    }

    pub fn table(&self, env: EnvId) -> Option<&EnvTable> {
        self.env_tables[env.index()].as_ref()
    }

    pub fn table_mut(&mut self, env: EnvId) -> Option<&mut EnvTable> {
        self.env_tables[env.index()].as_mut()
    }

    /// The table for `env`, created on first use with the fallback superclass.
    pub(crate) fn table_or_create(&mut self, env: EnvId) -> &mut EnvTable {
        let fallback = self.fallback_superclass;
        self.env_tables[env.index()].get_or_insert_with(|| EnvTable::with_superclass(fallback))
    }

    /// Immediate superclass link in `env`, virtual or not.
    pub fn env_parent(&self, env: EnvId) -> Option<ObjRef> {
        match self.table(env) {
            Some(t) => t.superclass,
            None => self.fallback_superclass,
        }
    }

    pub fn is_meta(&self) -> bool {
        self.format.is_meta
    }

    pub fn is_virtual(&self) -> bool {
        self.format.is_virtual
    }

    pub fn is_module(&self) -> bool {
        self.format.is_module
    }
}

/// Per-object dynamic instance variables, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynIvarTable {
    entries: IndexMap<String, Value>,
}

impl DynIvarTable {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.entries.get(name)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        self.entries.insert(name.to_string(), value);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ObjectHeader {
    pub oop: ObjRef,
    pub virtual_class: ObjRef,
    pub dyn_ivars: DynIvarTable,
    /// Class whose static layout `static_values` follows.
    pub layout_class: ObjRef,
    pub static_values: Vec<Value>,
}

/// Hashable view of a value, used as a hash-table key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HashKey {
    Nil,
    Bool(bool),
    Int(i64),
    Str(Rc<str>),
    Sym(Rc<str>),
    Obj(ObjRef),
}

impl HashKey {
    pub fn from_value(v: &Value) -> RtResult<HashKey> {
        Ok(match v.unwrapped() {
            Value::Nil => HashKey::Nil,
            Value::Bool(b) => HashKey::Bool(*b),
            Value::Int(i) => HashKey::Int(*i),
            Value::Str(s) => HashKey::Str(s.clone()),
            Value::Sym(s) => HashKey::Sym(s.clone()),
            Value::Obj(r) => HashKey::Obj(*r),
            other => return Err(RtError::Type(format!("unhashable key {other:?}"))),
        })
    }

    pub fn to_value(&self) -> Value {
        match self {
            HashKey::Nil => Value::Nil,
            HashKey::Bool(b) => Value::Bool(*b),
            HashKey::Int(i) => Value::Int(*i),
            HashKey::Str(s) => Value::Str(s.clone()),
            HashKey::Sym(s) => Value::Sym(s.clone()),
            HashKey::Obj(r) => Value::Obj(*r),
        }
    }
}

/// Native storage behind some kernel classes.
#[derive(Debug, Clone, Default)]
pub enum Payload {
    #[default]
    None,
    Hash(IndexMap<HashKey, Value>),
}

#[derive(Debug, Clone)]
pub(crate) struct ObjectRecord {
    pub header: ObjectHeader,
    pub class: Option<Box<ClassDescriptor>>,
    pub payload: Payload,
}

/// Well-known kernel objects, fixed at bootstrap.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    pub object: ObjRef,
    pub behavior: ObjRef,
    pub module: ObjRef,
    pub metaclass3: ObjRef,
    pub class: ObjRef,
    pub undefined_object: ObjRef,
    pub boolean: ObjRef,
    pub small_integer: ObjRef,
    pub symbol: ObjRef,
    pub collection: ObjRef,
    pub sequenceable_collection: ObjRef,
    pub string: ObjRef,
    pub array: ObjRef,
    pub hash: ObjRef,
    pub exec_block: ObjRef,
    pub ruby_wrapper: ObjRef,
    pub gs_session: ObjRef,
    pub enumerable: ObjRef,
}

impl Kernel {
    /// The self-instantiating root classes.
    pub fn helix(&self) -> [ObjRef; 5] {
        [self.object, self.module, self.class, self.metaclass3, self.behavior]
    }
}

pub struct ObjectSpace {
    pub(crate) objects: Vec<ObjectRecord>,
    pub(crate) registries: [BTreeMap<String, ObjRef>; 2],
    pub(crate) kernel: Kernel,
    pub(crate) bootstrapping: bool,
    pub(crate) method_missing_calls: u64,
}

impl ObjectSpace {
    pub(crate) fn empty() -> Self {
        let placeholder = ObjRef::UNSET;
        ObjectSpace {
            objects: Vec::new(),
            registries: [BTreeMap::new(), BTreeMap::new()],
            kernel: Kernel {
                object: placeholder,
                behavior: placeholder,
                module: placeholder,
                metaclass3: placeholder,
                class: placeholder,
                undefined_object: placeholder,
                boolean: placeholder,
                small_integer: placeholder,
                symbol: placeholder,
                collection: placeholder,
                sequenceable_collection: placeholder,
                string: placeholder,
                array: placeholder,
                hash: placeholder,
                exec_block: placeholder,
                ruby_wrapper: placeholder,
                gs_session: placeholder,
                enumerable: placeholder,
            },
            bootstrapping: true,
            method_missing_calls: 0,
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Number of objects allocated so far (classes included).
    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    /// Number of class-kind objects (classes, meta classes, modules, copies).
    pub fn class_count(&self) -> usize {
        self.objects.iter().filter(|r| r.class.is_some()).count()
    }

    pub fn meta_class_count(&self) -> usize {
        self.objects
            .iter()
            .filter(|r| r.class.as_ref().is_some_and(|c| c.is_meta()))
            .count()
    }

    pub fn method_missing_calls(&self) -> u64 {
        self.method_missing_calls
    }

    pub fn is_bootstrapping(&self) -> bool {
        self.bootstrapping
    }

    pub fn all_objects(&self) -> impl Iterator<Item = ObjRef> + '_ {
        self.objects.iter().map(|r| r.header.oop)
    }

    pub(crate) fn alloc(&mut self, record: impl FnOnce(ObjRef) -> ObjectRecord) -> ObjRef {
        let oop = ObjRef(u32::try_from(self.objects.len()).expect("object space exhausted"));
        self.objects.push(record(oop));
        oop
    }

    pub(crate) fn record(&self, r: ObjRef) -> &ObjectRecord {
        &self.objects[r.index()]
    }

    pub(crate) fn record_mut(&mut self, r: ObjRef) -> &mut ObjectRecord {
        &mut self.objects[r.index()]
    }

    pub fn is_live(&self, r: ObjRef) -> bool {
        r.index() < self.objects.len()
    }

    pub fn header(&self, r: ObjRef) -> &ObjectHeader {
        &self.record(r).header
    }

    pub fn payload(&self, r: ObjRef) -> &Payload {
        &self.record(r).payload
    }

    pub fn payload_mut(&mut self, r: ObjRef) -> &mut Payload {
        &mut self.record_mut(r).payload
    }

    pub fn is_class(&self, r: ObjRef) -> bool {
        self.record(r).class.is_some()
    }

    pub fn class_desc(&self, r: ObjRef) -> RtResult<&ClassDescriptor> {
        match &self.record(r).class {
            Some(c) => Ok(c),
            None => Err(RtError::NotAClass(self.describe(r))),
        }
    }

    pub(crate) fn class_desc_mut(&mut self, r: ObjRef) -> RtResult<&mut ClassDescriptor> {
        if self.record(r).class.is_none() {
            return Err(RtError::NotAClass(self.describe(r)));
        }
        Ok(self.record_mut(r).class.as_mut().unwrap())
    }

    pub fn is_meta(&self, r: ObjRef) -> bool {
        self.class_desc(r).is_ok_and(|c| c.is_meta())
    }

    pub fn is_virtual(&self, r: ObjRef) -> bool {
        self.class_desc(r).is_ok_and(|c| c.is_virtual())
    }

    pub fn is_module(&self, r: ObjRef) -> bool {
        self.class_desc(r).is_ok_and(|c| c.is_module() && !c.is_virtual())
    }

    /// Immediate env superclass link, falling back to the shared chain.
    pub fn env_parent(&self, class: ObjRef, env: EnvId) -> Option<ObjRef> {
        self.class_desc(class).ok().and_then(|c| c.env_parent(env))
    }

    pub fn lookup_name(&self, env: EnvId, name: &str) -> Option<ObjRef> {
        self.registries[env.index()].get(name).copied()
    }

    /// Resolves `name` in `env`'s registry, then in the other one.
    pub fn resolve_name(&self, env: EnvId, name: &str) -> Option<ObjRef> {
        self.lookup_name(env, name)
            .or_else(|| self.lookup_name(env.other(), name))
    }

    pub(crate) fn register_name(&mut self, env: EnvId, name: &str, class: ObjRef) -> RtResult<()> {
        let registry = &mut self.registries[env.index()];
        if registry.contains_key(name) {
            return Err(RtError::NameConflict(name.to_string()));
        }
        registry.insert(name.to_string(), class);
        self.class_desc_mut(class)?.names[env.index()] = Some(name.to_string());
        Ok(())
    }

    /// Allocates a class-kind record without any of the new_class policy.
    pub(crate) fn alloc_class(
        &mut self,
        virtual_class: ObjRef,
        desc: ClassDescriptor,
        layout_class: ObjRef,
        static_values: Vec<Value>,
    ) -> ObjRef {
        self.alloc(|oop| ObjectRecord {
            header: ObjectHeader {
                oop,
                virtual_class,
                dyn_ivars: DynIvarTable::default(),
                layout_class,
                static_values,
            },
            class: Some(Box::new(desc)),
            payload: Payload::None,
        })
    }

    fn nil_slots(&self, layout_class: ObjRef) -> Vec<Value> {
        let n = self
            .class_desc(layout_class)
            .map(|c| c.static_slots.len())
            .unwrap_or(0);
        vec![Value::Nil; n]
    }

    /// Creates a non-meta class together with its first-level meta class.
    pub fn new_class(
        &mut self,
        name_st: Option<&str>,
        name_rb: Option<&str>,
        superclass: ObjRef,
        static_ivars: &[&str],
    ) -> RtResult<ObjRef> {
        self.new_class_with_slots(
            name_st,
            name_rb,
            superclass,
            static_ivars.iter().map(|n| StaticSlot::visible(n)).collect(),
        )
    }

    pub fn new_class_with_slots(
        &mut self,
        name_st: Option<&str>,
        name_rb: Option<&str>,
        superclass: ObjRef,
        static_ivars: Vec<StaticSlot>,
    ) -> RtResult<ObjRef> {
        let sup = self.class_desc(superclass)?;
        if sup.is_meta() || sup.is_virtual() || sup.is_module() {
            return Err(RtError::ModelViolation(format!(
                "{} cannot be used as a superclass",
                self.describe(superclass)
            )));
        }
        let mut slots = sup.static_slots.clone();
        for slot in static_ivars {
            if slot.name.is_empty() || slots.iter().any(|s| s.name == slot.name) {
                return Err(RtError::ModelViolation(format!(
                    "duplicate static instance variable `{}`",
                    slot.name
                )));
            }
            slots.push(slot);
        }
        for (env, name) in [(EnvId::Smalltalk, name_st), (EnvId::Ruby, name_rb)] {
            if let Some(n) = name {
                if self.lookup_name(env, n).is_some() {
                    return Err(RtError::NameConflict(n.to_string()));
                }
            }
        }
        let singleton_allowed = sup.format.singleton_allowed;
        let format = Format {
            instantiable: true,
            singleton_allowed,
            ..Format::default()
        };
        let k = self.kernel;
        let super_meta = self.header(superclass).virtual_class;
        // The meta class is patched in right after allocation.
        let class_values = self.nil_slots(k.class);
        let class = self.alloc_class(
            k.metaclass3,
            ClassDescriptor::new(format, Some(superclass), slots),
            k.class,
            class_values,
        );
        let meta = self.new_meta_class(class, super_meta);
        self.record_mut(class).header.virtual_class = meta;
        if let Some(n) = name_st {
            self.register_name(EnvId::Smalltalk, n, class)?;
        }
        if let Some(n) = name_rb {
            self.register_name(EnvId::Ruby, n, class)?;
        }
        Ok(class)
    }

    /// Allocates a meta class (instance of Metaclass3) for `dest`.
    pub(crate) fn new_meta_class(&mut self, dest: ObjRef, superclass: ObjRef) -> ObjRef {
        let k = self.kernel;
        let slots = self
            .class_desc(superclass)
            .map(|c| c.static_slots.clone())
            .unwrap_or_default();
        let format = Format {
            is_meta: true,
            singleton_allowed: true,
            ..Format::default()
        };
        let mut desc = ClassDescriptor::new(format, Some(superclass), slots);
        desc.dest_class = Some(dest);
        let mut values = self.nil_slots(k.metaclass3);
        if let Some(i) = self.slot_index(k.metaclass3, "destClass") {
            values[i] = Value::Obj(dest);
        }
        self.alloc_class(k.metaclass3, desc, k.metaclass3, values)
    }

    fn slot_index(&self, layout_class: ObjRef, name: &str) -> Option<usize> {
        self.class_desc(layout_class)
            .ok()?
            .static_slots
            .iter()
            .position(|s| s.name == name)
    }

    pub fn new_instance(&mut self, class: ObjRef) -> RtResult<ObjRef> {
        let desc = self.class_desc(class)?;
        let f = desc.format;
        if f.is_meta || f.is_module || f.is_virtual || !f.instantiable {
            return Err(RtError::NotInstantiable(self.describe(class)));
        }
        let values = vec![Value::Nil; desc.static_slots.len()];
        let payload = if self.inherits_from(class, self.kernel.hash, EnvId::Smalltalk) {
            Payload::Hash(IndexMap::new())
        } else {
            Payload::None
        };
        Ok(self.alloc(|oop| ObjectRecord {
            header: ObjectHeader {
                oop,
                virtual_class: class,
                dyn_ivars: DynIvarTable::default(),
                layout_class: class,
                static_values: values,
            },
            class: None,
            payload,
        }))
    }

    /// The header's class pointer; never generates anything.
    pub fn virtual_class(&self, obj: ObjRef) -> ObjRef {
        self.header(obj).virtual_class
    }

    /// The kernel class standing in for an immediate value.
    pub fn immediate_class(&self, v: &Value) -> ObjRef {
        let k = &self.kernel;
        match v {
            Value::Nil => k.undefined_object,
            Value::Bool(_) => k.boolean,
            Value::Int(_) => k.small_integer,
            Value::Str(_) => k.string,
            Value::Sym(_) => k.symbol,
            Value::Array(_) => k.array,
            Value::Block(_) => k.exec_block,
            Value::Wrapper(_) => k.ruby_wrapper,
            Value::Obj(r) => self.virtual_class(*r),
        }
    }

    /// Where dispatch starts for `v`.
    pub fn dispatch_class(&self, v: &Value) -> ObjRef {
        match v {
            Value::Obj(r) => self.virtual_class(*r),
            other => self.immediate_class(other),
        }
    }

    /// First non-meta class on the virtual class' superclass chain.
    pub fn class_of(&self, obj: ObjRef) -> ObjRef {
        let mut c = self.virtual_class(obj);
        while self.is_meta(c) {
            match self.superclass(c, EnvId::Ruby) {
                Some(s) => c = s,
                None => break,
            }
        }
        c
    }

    pub fn class_of_value(&self, v: &Value) -> ObjRef {
        match v {
            Value::Obj(r) => self.class_of(*r),
            other => self.immediate_class(other),
        }
    }

    pub fn destination_class(&self, meta: ObjRef) -> RtResult<ObjRef> {
        match self.class_desc(meta) {
            Ok(c) if c.is_meta() => Ok(c.dest_class.expect("meta class without destination")),
            _ => Err(RtError::NotAMetaClass(self.describe(meta))),
        }
    }

    /// Does `class` (or, for module copies, its origin) sit on `start`'s
    /// env chain, `start` included?
    pub fn inherits_from(&self, start: ObjRef, class: ObjRef, env: EnvId) -> bool {
        let target_origin = self.class_desc(class).ok().and_then(|c| c.origin).unwrap_or(class);
        let mut cur = Some(start);
        while let Some(c) = cur {
            if c == class {
                return true;
            }
            if let Ok(d) = self.class_desc(c) {
                if d.is_virtual() && d.origin == Some(target_origin) {
                    return true;
                }
            }
            cur = self.env_parent(c, env);
        }
        false
    }

    pub fn is_kind_of(&self, obj: ObjRef, class: ObjRef) -> bool {
        self.inherits_from(self.virtual_class(obj), class, EnvId::Ruby)
    }

    pub fn value_is_kind_of(&self, v: &Value, class: ObjRef) -> bool {
        self.inherits_from(self.dispatch_class(v), class, EnvId::Ruby)
    }

    fn static_slot(&self, obj: ObjRef, name: &str) -> Option<(usize, bool)> {
        let layout = self.header(obj).layout_class;
        let slots = &self.class_desc(layout).ok()?.static_slots;
        slots
            .iter()
            .position(|s| s.name == name)
            .map(|i| (i, slots[i].hidden_from_ruby))
    }

    /// Resolves a ruby-side ivar name to a visible static slot, honouring
    /// the `_st_` alias.
    fn ruby_static_slot(&self, obj: ObjRef, name: &str) -> Option<usize> {
        if let Some((i, false)) = self.static_slot(obj, name) {
            return Some(i);
        }
        let plain = name.strip_prefix("_st_")?;
        match self.static_slot(obj, plain) {
            Some((i, false)) => Some(i),
            _ => None,
        }
    }

    pub fn read_ivar(&self, obj: ObjRef, name: &str, env: EnvId) -> RtResult<Value> {
        let name = name.strip_prefix('@').unwrap_or(name);
        match env {
            EnvId::Ruby => {
                if let Some(i) = self.ruby_static_slot(obj, name) {
                    return Ok(self.header(obj).static_values[i].clone());
                }
                Ok(self
                    .header(obj)
                    .dyn_ivars
                    .get(name)
                    .cloned()
                    .unwrap_or(Value::Nil))
            }
            EnvId::Smalltalk => match self.static_slot(obj, name) {
                Some((i, _)) => Ok(self.header(obj).static_values[i].clone()),
                None => Err(RtError::UndeclaredIvar(name.to_string())),
            },
        }
    }

    pub fn write_ivar(&mut self, obj: ObjRef, name: &str, env: EnvId, value: Value) -> RtResult<()> {
        let name = name.strip_prefix('@').unwrap_or(name);
        let slot = match env {
            EnvId::Ruby => self.ruby_static_slot(obj, name),
            EnvId::Smalltalk => match self.static_slot(obj, name) {
                Some((i, _)) => Some(i),
                None => return Err(RtError::UndeclaredIvar(name.to_string())),
            },
        };
        let header = &mut self.record_mut(obj).header;
        match slot {
            Some(i) => header.static_values[i] = value,
            None => header.dyn_ivars.set(name, value),
        }
        Ok(())
    }

    pub fn dynamic_ivar_at(&self, obj: ObjRef, name: &str) -> Value {
        self.header(obj)
            .dyn_ivars
            .get(name)
            .cloned()
            .unwrap_or(Value::Nil)
    }

    pub fn dynamic_ivar_at_put(&mut self, obj: ObjRef, name: &str, value: Value) {
        self.record_mut(obj).header.dyn_ivars.set(name, value);
    }

    pub fn instance_variables(&self, obj: ObjRef, env: EnvId) -> Vec<String> {
        let header = self.header(obj);
        let slots = self
            .class_desc(header.layout_class)
            .map(|c| c.static_slots.as_slice())
            .unwrap_or(&[]);
        match env {
            EnvId::Smalltalk => slots.iter().map(|s| s.name.clone()).collect(),
            EnvId::Ruby => slots
                .iter()
                .filter(|s| !s.hidden_from_ruby)
                .map(|s| format!("_st_{}", s.name))
                .chain(header.dyn_ivars.names().map(str::to_string))
                .collect(),
        }
    }

    pub fn set_singleton_allowed(&mut self, class: ObjRef, allowed: bool) -> RtResult<()> {
        self.class_desc_mut(class)?.format.singleton_allowed = allowed;
        Ok(())
    }

    /// Short human-readable description used in errors and transcripts.
    pub fn describe(&self, r: ObjRef) -> String {
        crate::inspect::render_ref(self, r, EnvId::Ruby)
    }
}
