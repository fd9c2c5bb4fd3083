//! Deterministic text rendering of values, classes and hierarchies.
//!
//! Oops are arena indices, so they already follow creation order and
//! identical scripts print identical dumps.

use std::fmt::Write;

use crate::env::EnvId;
use crate::object_space::{ObjRef, ObjectSpace, Payload};
use crate::sexpr::quote;
use crate::value::Value;

/// Short name for any object, preferring its name in `env`.
pub fn render_ref(os: &ObjectSpace, r: ObjRef, env: EnvId) -> String {
    if !os.is_live(r) {
        return format!("#<dead {r}>");
    }
    match os.record(r).class.as_ref() {
        Some(d) => {
            if let Some(n) = d.name(env).or(d.name(env.other())) {
                n.to_string()
            } else if d.is_meta() {
                let dest = d.dest_class.expect("meta class without destination");
                format!("#<Class: {}>", render_ref(os, dest, env))
            } else if d.is_virtual() {
                match d.origin {
                    Some(o) => format!("#<Copy: {}>", render_ref(os, o, env)),
                    None => format!("#<Copy:{r}>"),
                }
            } else if d.is_module() {
                format!("#<Module:{r}>")
            } else {
                format!("#<Class:{r}>")
            }
        }
        None => format!("#<{}:{r}>", render_ref(os, os.class_of(r), env)),
    }
}

pub fn render_value(os: &ObjectSpace, v: &Value, env: EnvId) -> String {
    match v {
        Value::Nil => "nil".into(),
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Str(s) => quote(s),
        Value::Sym(s) => format!(":{s}"),
        Value::Obj(r) => render_ref(os, *r, env),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|i| render_value(os, i, env)).collect();
            format!("[{}]", parts.join(", "))
        }
        Value::Block(b) => format!("#<Proc/{} {}>", b.params, b.frame.env),
        Value::Wrapper(inner) => format!("#<RubyWrapper on: {}>", render_value(os, inner, env)),
    }
}

fn markers(os: &ObjectSpace, c: ObjRef) -> String {
    let mut out = String::new();
    if let Ok(d) = os.class_desc(c) {
        if let Some(dest) = d.dest_class {
            let _ = write!(out, " [M dest={dest}]");
        }
        if d.is_virtual() {
            if let Some(o) = d.origin {
                let _ = write!(out, " [V origin={o}]");
            }
        }
    }
    out
}

fn arrow(p: Option<ObjRef>) -> String {
    p.map_or_else(|| "-".to_string(), |p| p.to_string())
}

/// One section per environment plus the meta tower of the target.
pub fn inspect_hierarchy(os: &ObjectSpace, target: ObjRef) -> String {
    let mut out = String::new();
    let start = if os.is_class(target) {
        target
    } else {
        os.virtual_class(target)
    };
    let _ = writeln!(out, "hierarchy of {target} {}", render_ref(os, target, EnvId::Ruby));
    let mut tower = Vec::new();
    let mut cur = os.virtual_class(target);
    while os.is_meta(cur) && !tower.contains(&cur) {
        tower.push(cur);
        cur = os.virtual_class(cur);
    }
    let _ = write!(out, "  tower:");
    for t in &tower {
        let _ = write!(out, " {t}");
    }
    let _ = writeln!(out, " | {cur} {}", render_ref(os, cur, EnvId::Ruby));
    for t in &tower {
        let _ = writeln!(out, "    {t} {}{}", render_ref(os, *t, EnvId::Ruby), markers(os, *t));
    }
    for env in EnvId::ALL {
        let _ = writeln!(out, "  {env}:");
        for c in os.env_chain(start, env) {
            let _ = writeln!(
                out,
                "    {c} {}{} -> {}",
                render_ref(os, c, env),
                markers(os, c),
                arrow(os.env_parent(c, env))
            );
        }
    }
    out
}

/// Extracts one environment's section from [`inspect_hierarchy`] output.
pub fn section(dump: &str, env: EnvId) -> Vec<&str> {
    let header = format!("  {env}:");
    dump.lines()
        .skip_while(|l| *l != header)
        .skip(1)
        .take_while(|l| l.starts_with("    "))
        .collect()
}

/// Every object in the space, one line each.
pub fn dump_space(os: &ObjectSpace) -> String {
    let mut out = String::new();
    for r in os.all_objects() {
        let h = os.header(r);
        let _ = write!(out, "{r} {} vc={}", render_ref(os, r, EnvId::Ruby), h.virtual_class);
        if let Ok(d) = os.class_desc(r) {
            let _ = write!(
                out,
                " st={} rb={}{}",
                arrow(d.env_parent(EnvId::Smalltalk)),
                arrow(d.env_parent(EnvId::Ruby)),
                markers(os, r)
            );
            for env in EnvId::ALL {
                if d.table(env).is_none() {
                    let _ = write!(out, " no-{env}-table");
                }
            }
        }
        if !h.static_values.is_empty() {
            let vals: Vec<String> = h
                .static_values
                .iter()
                .map(|v| render_value(os, v, EnvId::Ruby))
                .collect();
            let _ = write!(out, " static=[{}]", vals.join(", "));
        }
        if !h.dyn_ivars.is_empty() {
            let names: Vec<&str> = h.dyn_ivars.names().collect();
            let _ = write!(out, " dyn=[{}]", names.join(", "));
        }
        if let Payload::Hash(m) = os.payload(r) {
            let _ = write!(out, " entries={}", m.len());
        }
        out.push('\n');
    }
    out
}
