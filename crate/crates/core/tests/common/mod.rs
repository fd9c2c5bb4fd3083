//! Independent models used as oracles by the integration tests.
//!
//! Nothing here calls into the engine's lookup, binding or inclusion code.
//! The hierarchy model keeps flat ancestor lists and recomputes them from
//! first principles of the ruby object model.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use dualrt::ir::Ir;
use dualrt::method::{MethodBody, Signature};
use dualrt::{EnvId, ObjRef, ObjectSpace, Value};
use rand::rngs::StdRng;
use rand::RngExt;

pub fn body(src: &str) -> MethodBody {
    MethodBody::Ir(Rc::new(Ir::parse(src).unwrap()))
}

// ---------------------------------------------------------------- binding

/// A ruby parameter list drawn from the acceptance corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigSpec {
    pub required: usize,
    pub optionals: usize,
    pub splat: bool,
    pub block: bool,
}

impl SigSpec {
    pub fn corpus() -> Vec<SigSpec> {
        let mut out = Vec::new();
        for required in 0..=5 {
            for optionals in 0..=2 {
                for splat in [false, true] {
                    for block in [false, true] {
                        out.push(SigSpec {
                            required,
                            optionals,
                            splat,
                            block,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn random(rng: &mut StdRng) -> SigSpec {
        SigSpec {
            required: rng.random_range(0..=5),
            optionals: rng.random_range(0..=2),
            splat: rng.random_bool(0.5),
            block: rng.random_bool(0.5),
        }
    }

    pub fn default_of(j: usize) -> i64 {
        100 + j as i64
    }

    pub fn signature(&self) -> Signature {
        let opts = (0..self.optionals)
            .map(|j| (format!("o{j}"), Rc::new(Ir::Lit(Value::Int(Self::default_of(j))))))
            .collect();
        let mut sig = Signature::fixed(self.required).with_optionals(opts);
        if self.splat {
            sig = sig.with_splat();
        }
        if self.block {
            sig = sig.with_block();
        }
        sig
    }

    /// A body echoing every bound parameter.
    pub fn echo_body(&self) -> String {
        let mut parts: Vec<String> = (0..self.required + self.optionals).map(|i| format!("(arg {i})")).collect();
        if self.splat {
            parts.push(format!("(arg {})", self.required + self.optionals));
        }
        if self.block {
            parts.push("(if (blockparam) :blk :none)".into());
        }
        format!("(array {})", parts.join(" "))
    }

    /// Brute-force binding: what the echo body returns, or `None` for an
    /// arity error.
    pub fn expected(&self, args: &[Value], splat: Option<&[Value]>, block: bool) -> Option<Value> {
        let mut positional: Vec<Value> = args.to_vec();
        if let Some(s) = splat {
            positional.extend_from_slice(s);
        }
        let n = positional.len();
        if n < self.required {
            return None;
        }
        if !self.splat && n > self.required + self.optionals {
            return None;
        }
        let mut out = Vec::new();
        let mut it = positional.into_iter();
        for _ in 0..self.required {
            out.push(it.next().unwrap());
        }
        for j in 0..self.optionals {
            out.push(it.next().unwrap_or(Value::Int(Self::default_of(j))));
        }
        if self.splat {
            out.push(Value::array(it.collect()));
        }
        if self.block {
            out.push(Value::sym(if block { "blk" } else { "none" }));
        }
        Some(Value::array(out))
    }
}

// -------------------------------------------------------------- hierarchy

/// An object of the model. `Eig(x)` is x's singleton class, whether or not
/// the engine has materialized it yet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Obj(ObjRef),
    Eig(Box<Node>),
}

/// An entry of a flattened ancestor list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Entry {
    Node(Node),
    /// A module spliced in by inclusion, identified by the module.
    Copy(ObjRef),
}

#[derive(Debug, Clone)]
struct CopyRec {
    module: ObjRef,
    methods: BTreeSet<String>,
}

/// Ruby semantics over plain maps.
#[derive(Debug, Default)]
pub struct Model {
    pub object: Option<ObjRef>,
    class_root: Option<ObjRef>,
    module_root: Option<ObjRef>,
    parent: HashMap<ObjRef, ObjRef>,
    modules: BTreeSet<ObjRef>,
    instance_of: HashMap<ObjRef, ObjRef>,
    copies: Vec<CopyRec>,
    own_copies: HashMap<ObjRef, Vec<usize>>,
    methods: HashMap<Node, BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncludeOutcome {
    Done,
    Cycle,
}

impl Model {
    /// Seeds the helix chain by name; `Class < Metaclass3 < Module <
    /// Behavior < Object`.
    pub fn new(os: &ObjectSpace) -> Model {
        let get = |n: &str| os.resolve_name(EnvId::Ruby, n).unwrap();
        let object = get("Object");
        let names = ["Behavior", "Module", "Metaclass3", "Class"];
        let mut m = Model {
            object: Some(object),
            class_root: Some(get("Class")),
            module_root: Some(get("Module")),
            ..Model::default()
        };
        let mut prev = object;
        for n in names {
            let c = get(n);
            m.parent.insert(c, prev);
            prev = c;
        }
        m
    }

    pub fn add_class(&mut self, c: ObjRef, sup: ObjRef) {
        self.parent.insert(c, sup);
    }

    pub fn add_module(&mut self, m: ObjRef) {
        self.parent.insert(m, self.object.unwrap());
        self.modules.insert(m);
    }

    pub fn add_instance(&mut self, o: ObjRef, class: ObjRef) {
        self.instance_of.insert(o, class);
    }

    pub fn is_module(&self, r: ObjRef) -> bool {
        self.modules.contains(&r)
    }

    pub fn define(&mut self, at: Node, name: &str) {
        self.methods.entry(at).or_default().insert(name.to_string());
    }

    /// Superclass of the singleton class of `x`.
    fn eig_parent(&self, x: &Node) -> Node {
        match x {
            Node::Obj(o) => {
                if let Some(c) = self.instance_of.get(o) {
                    Node::Obj(*c)
                } else if Some(*o) == self.object {
                    Node::Obj(self.class_root.unwrap())
                } else if self.modules.contains(o) {
                    Node::Obj(self.module_root.unwrap())
                } else {
                    Node::Eig(Box::new(Node::Obj(self.parent[o])))
                }
            }
            Node::Eig(y) => Node::Eig(Box::new(self.eig_parent(y))),
        }
    }

    /// Full conceptual ancestor list of `n`, `n` first.
    pub fn ancestors(&self, n: &Node) -> Vec<Entry> {
        let mut out = Vec::new();
        let mut cur = Some(n.clone());
        while let Some(c) = cur {
            out.push(Entry::Node(c.clone()));
            cur = match &c {
                Node::Obj(o) => {
                    for &id in self.own_copies.get(o).map(Vec::as_slice).unwrap_or(&[]) {
                        out.push(Entry::Copy(self.copies[id].module));
                    }
                    self.parent.get(o).map(|p| Node::Obj(*p))
                }
                Node::Eig(x) => Some(self.eig_parent(x)),
            };
        }
        out
    }

    /// Where a send of `name` to an object whose chain starts at `start`
    /// finds its method.
    pub fn resolve(&self, start: &Node, name: &str) -> Option<Entry> {
        // Copies answer from their own snapshot, not from the module.
        let mut cur = Some(start.clone());
        while let Some(c) = cur {
            if self.methods.get(&c).is_some_and(|m| m.contains(name)) {
                return Some(Entry::Node(c));
            }
            cur = match &c {
                Node::Obj(o) => {
                    for &id in self.own_copies.get(o).map(Vec::as_slice).unwrap_or(&[]) {
                        if self.copies[id].methods.contains(name) {
                            return Some(Entry::Copy(self.copies[id].module));
                        }
                    }
                    self.parent.get(o).map(|p| Node::Obj(*p))
                }
                Node::Eig(x) => Some(self.eig_parent(x)),
            };
        }
        None
    }

    fn expansion(&self, module: ObjRef) -> Vec<ObjRef> {
        let mut out = vec![module];
        for e in self.ancestors(&Node::Obj(module)) {
            if let Entry::Copy(m) = e {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        out
    }

    pub fn include(&mut self, target: ObjRef, module: ObjRef) -> IncludeOutcome {
        let expansion = self.expansion(module);
        if expansion.contains(&target) {
            return IncludeOutcome::Cycle;
        }
        let anc = self.ancestors(&Node::Obj(target));
        let present = |m: ObjRef| anc.contains(&Entry::Node(Node::Obj(m))) || anc.contains(&Entry::Copy(m));
        let missing: Vec<ObjRef> = expansion.into_iter().filter(|&m| !present(m)).collect();
        let mut ids = Vec::new();
        for m in missing {
            let methods = self.methods.get(&Node::Obj(m)).cloned().unwrap_or_default();
            self.copies.push(CopyRec { module: m, methods });
            ids.push(self.copies.len() - 1);
        }
        let own = self.own_copies.entry(target).or_default();
        ids.append(own);
        *own = ids;
        IncludeOutcome::Done
    }
}

/// The model node for an engine reference.
pub fn node_of(os: &ObjectSpace, r: ObjRef) -> Node {
    if os.is_meta(r) {
        Node::Eig(Box::new(node_of(os, os.destination_class(r).unwrap())))
    } else {
        Node::Obj(r)
    }
}

pub fn entry_of(os: &ObjectSpace, r: ObjRef) -> Entry {
    if os.is_virtual(r) {
        Entry::Copy(os.origin(r).unwrap())
    } else {
        Entry::Node(node_of(os, r))
    }
}

/// One randomized hierarchy plus bookkeeping for the probes.
pub struct World {
    pub os: ObjectSpace,
    pub model: Model,
    pub classes: Vec<ObjRef>,
    pub modules: Vec<ObjRef>,
    pub instances: Vec<ObjRef>,
    pub metas: Vec<ObjRef>,
    /// (classes allocated, allowed bound) for every singleton call.
    pub singleton_calls: Vec<(usize, usize, String)>,
    pub mismatches: Vec<String>,
}

pub const METHOD_POOL: [&str; 6] = ["m0", "m1", "m2", "m3", "m4", "m5"];

impl World {
    pub fn new() -> World {
        let os = dualrt::bootstrap();
        let model = Model::new(&os);
        let object = os.kernel().object;
        World {
            os,
            model,
            classes: vec![object],
            modules: Vec::new(),
            instances: Vec::new(),
            metas: Vec::new(),
            singleton_calls: Vec::new(),
            mismatches: Vec::new(),
        }
    }

    /// Builds a random hierarchy within the acceptance limits.
    pub fn random(rng: &mut StdRng) -> World {
        let mut w = World::new();
        let n_classes = rng.random_range(1..=8);
        let n_modules = rng.random_range(0..=4);
        let n_includes = rng.random_range(0..=6);
        let n_methods = rng.random_range(0..=40);
        let n_singletons = rng.random_range(0..=4);
        let mut ops: Vec<u8> = Vec::new();
        ops.extend(std::iter::repeat_n(0, n_classes));
        ops.extend(std::iter::repeat_n(1, n_modules));
        ops.extend(std::iter::repeat_n(2, n_includes));
        ops.extend(std::iter::repeat_n(3, n_methods));
        ops.extend(std::iter::repeat_n(4, n_singletons));
        // Fisher-Yates with the seeded generator keeps runs reproducible.
        for i in (1..ops.len()).rev() {
            let j = rng.random_range(0..=i);
            ops.swap(i, j);
        }
        for op in ops {
            match op {
                0 => w.new_class(rng),
                1 => w.new_module(),
                2 => w.include(rng),
                3 => w.define(rng),
                _ => w.singleton(rng),
            }
        }
        w
    }

    fn pick<T: Copy>(rng: &mut StdRng, xs: &[T]) -> Option<T> {
        (!xs.is_empty()).then(|| xs[rng.random_range(0..xs.len())])
    }

    pub fn new_class(&mut self, rng: &mut StdRng) {
        let sup = Self::pick(rng, &self.classes).unwrap();
        let c = self.os.new_class(None, None, sup, &[]).unwrap();
        self.model.add_class(c, sup);
        self.classes.push(c);
        let o = self.os.new_instance(c).unwrap();
        self.model.add_instance(o, c);
        self.instances.push(o);
    }

    pub fn new_module(&mut self) {
        let m = self.os.new_nameless_module();
        self.model.add_module(m);
        self.modules.push(m);
    }

    fn include_targets(&self) -> Vec<ObjRef> {
        self.classes[1..].iter().chain(&self.modules).copied().collect()
    }

    pub fn include(&mut self, rng: &mut StdRng) {
        let (Some(t), Some(m)) = (Self::pick(rng, &self.include_targets()), Self::pick(rng, &self.modules)) else {
            return;
        };
        self.include_pair(t, m);
    }

    pub fn include_pair(&mut self, t: ObjRef, m: ObjRef) {
        let got = self.os.include_module(t, m, EnvId::Ruby);
        let want = self.model.include(t, m);
        let agree = matches!(
            (&got, want),
            (Ok(()), IncludeOutcome::Done) | (Err(dualrt::RtError::CyclicInclude { .. }), IncludeOutcome::Cycle)
        );
        if !agree {
            self.mismatches.push(format!("include {t} <- {m}: engine {got:?}, model {want:?}"));
        }
    }

    /// Singleton access through the public API, recording its cost.
    pub fn singleton_of(&mut self, v: ObjRef, depth: Option<usize>) -> Option<ObjRef> {
        let value = Value::Obj(v);
        let bound = self.os.max_gen(&value) + depth.map_or(0, |k| k.saturating_sub(2));
        let before = self.os.class_count();
        let result = match depth {
            None => self.os.ruby_singleton_class(&value),
            Some(k) => self
                .os
                .ensure_singleton_generated(&value, k)
                .map(|_| self.os.dispatch_class(&value)),
        };
        let made = self.os.class_count() - before;
        let label = format!("{} of {} (depth {:?})", if depth.is_some() { "ensure" } else { "ruby_singleton_class" }, self.os.describe(v), depth);
        self.singleton_calls.push((made, bound, label));
        let r = result.ok()?;
        for s in [r, self.os.virtual_class(r)] {
            if self.os.is_meta(s) && !self.metas.contains(&s) {
                self.metas.push(s);
            }
        }
        Some(r)
    }

    fn singleton_target(&self, rng: &mut StdRng) -> ObjRef {
        let pools = [&self.instances[..], &self.classes[..], &self.modules[..], &self.metas[..]];
        loop {
            let pool = pools[rng.random_range(0..pools.len())];
            if let Some(v) = Self::pick(rng, pool) {
                return v;
            }
        }
    }

    pub fn singleton(&mut self, rng: &mut StdRng) {
        let v = self.singleton_target(rng);
        let depth = rng.random_bool(0.5).then(|| rng.random_range(1..=3));
        self.singleton_of(v, depth);
    }

    pub fn define(&mut self, rng: &mut StdRng) {
        let name = METHOD_POOL[rng.random_range(0..METHOD_POOL.len())];
        let target = match rng.random_range(0..3) {
            0 => Self::pick(rng, &self.classes[1..]),
            1 => Self::pick(rng, &self.modules),
            _ => {
                let v = self.singleton_target(rng);
                self.singleton_of(v, None)
            }
        };
        let Some(t) = target else { return };
        self.os
            .define_method(t, EnvId::Ruby, name, dualrt::method::Visibility::Public, Signature::fixed(0), body("1"))
            .unwrap();
        self.model.define(node_of(&self.os, t), name);
    }

    /// Compares lookup order and method resolution for `v`.
    pub fn probe(&mut self, v: ObjRef) {
        let value = Value::Obj(v);
        let engine: Vec<Entry> = self
            .os
            .lookup_order(&value, EnvId::Ruby)
            .into_iter()
            .map(|r| entry_of(&self.os, r))
            .collect();
        // A singleton class without a next level is an instance of Metaclass3.
        let start = if self.os.is_meta(v) && !self.os.is_meta(self.os.virtual_class(v)) {
            Node::Obj(self.os.kernel().metaclass3)
        } else {
            Node::Eig(Box::new(node_of(&self.os, v)))
        };
        let conceptual = self.model.ancestors(&start);
        let materialized: Vec<Entry> = conceptual
            .iter()
            .filter(|e| matches!(e, Entry::Node(Node::Obj(_)) | Entry::Copy(_)) || engine.contains(e))
            .cloned()
            .collect();
        if engine != materialized {
            self.mismatches.push(format!(
                "order for {}: engine {engine:?} model {materialized:?}",
                self.os.describe(v)
            ));
        }
        for name in METHOD_POOL.iter().chain(&["never_defined"]) {
            let got = self
                .os
                .lookup(&value, &format!("{name}#0__"), EnvId::Ruby, dualrt::CallCtx::implicit(None))
                .holder()
                .map(|h| entry_of(&self.os, h));
            let want = self.model.resolve(&start, name);
            if got != want {
                self.mismatches.push(format!(
                    "{name} on {}: engine {got:?} model {want:?}",
                    self.os.describe(v)
                ));
            }
        }
    }

    pub fn probe_all(&mut self) -> usize {
        let targets: Vec<ObjRef> = self
            .instances
            .iter()
            .chain(&self.classes)
            .chain(&self.modules)
            .chain(&self.metas)
            .copied()
            .collect();
        for &t in &targets {
            self.probe(t);
        }
        targets.len()
    }
}

impl Default for World {
    fn default() -> Self {
        World::new()
    }
}
