//! Bootstrap of the helix classes and the core class library.
//!
//! Topology: `Object <- Behavior <- Module <- Metaclass3 <- Class` on the
//! instance side. Every helix class has a meta class from the start; the
//! meta side runs parallel to it and `Object class` inherits from `Class`.
//! All meta classes are instances of Metaclass3.

use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::method::{MethodBody, NativeFn, Signature, Visibility};
use crate::object_space::{ClassDescriptor, Format, HashKey, ObjRef, ObjectSpace, Payload, StaticSlot};
use crate::value::Value;

/// Objects allocated by [`bootstrap`] before any user command runs.
pub const BOOTSTRAP_OBJECT_COUNT: usize = 36;

pub fn bootstrap() -> ObjectSpace {
    let mut os = ObjectSpace::empty();
    build_helix(&mut os);
    build_core_classes(&mut os).expect("kernel classes are consistent");
    install_natives(&mut os).expect("kernel methods are consistent");
    let k = os.kernel;
    os.include_module(k.array, k.enumerable, EnvId::Ruby)
        .expect("Array includes Enumerable");
    os.bootstrapping = false;
    os
}

fn build_helix(os: &mut ObjectSpace) {
    let format = Format {
        instantiable: true,
        singleton_allowed: true,
        ..Format::default()
    };
    let mut prev: Option<ObjRef> = None;
    let mut helix = Vec::new();
    for name in ["Object", "Behavior", "Module", "Metaclass3", "Class"] {
        let slots = if name == "Metaclass3" {
            vec![StaticSlot::hidden("destClass")]
        } else {
            Vec::new()
        };
        let c = os.alloc_class(ObjRef::UNSET, ClassDescriptor::new(format, prev, slots), ObjRef::UNSET, Vec::new());
        helix.push(c);
        prev = Some(c);
    }
    let [object, behavior, module, metaclass3, class] = helix[..] else {
        unreachable!()
    };
    os.kernel.object = object;
    os.kernel.behavior = behavior;
    os.kernel.module = module;
    os.kernel.metaclass3 = metaclass3;
    os.kernel.class = class;
    // The instance side of the helix is not instantiable from scripts
    // except through `new` on ordinary classes.
    os.class_desc_mut(module).unwrap().format.instantiable = false;
    os.class_desc_mut(metaclass3).unwrap().format.instantiable = false;
    for &c in &helix {
        let sup_meta = match os.superclass(c, EnvId::Ruby) {
            Some(s) => os.virtual_class(s),
            None => class,
        };
        let meta = os.new_meta_class(c, sup_meta);
        let rec = os.record_mut(c);
        rec.header.virtual_class = meta;
        rec.header.layout_class = class;
    }
    for (&c, name) in helix.iter().zip(["Object", "Behavior", "Module", "Metaclass3", "Class"]) {
        for env in EnvId::ALL {
            os.register_name(env, name, c).unwrap();
        }
    }
}

fn sealed(os: &mut ObjectSpace, c: ObjRef) {
    let f = &mut os.class_desc_mut(c).unwrap().format;
    f.instantiable = false;
    f.singleton_allowed = false;
}

fn build_core_classes(os: &mut ObjectSpace) -> RtResult<()> {
    let object = os.kernel.object;
    let class = |os: &mut ObjectSpace, st: &str, rb: Option<&str>, sup: ObjRef, ivars: &[&str]| {
        os.new_class(Some(st), rb, sup, ivars)
    };
    let undefined = class(os, "UndefinedObject", Some("NilClass"), object, &[])?;
    let boolean = class(os, "Boolean", Some("Boolean"), object, &[])?;
    let small_integer = class(os, "SmallInteger", Some("Integer"), object, &[])?;
    let symbol = class(os, "Symbol", Some("Symbol"), object, &[])?;
    let collection = class(os, "Collection", Some("Collection"), object, &[])?;
    let seq = class(os, "SequenceableCollection", Some("SequenceableCollection"), collection, &[])?;
    let string = class(os, "String", Some("String"), seq, &[])?;
    let array = class(os, "Array", Some("Array"), seq, &[])?;
    let hash = class(os, "Hash", Some("Hash"), collection, &["size"])?;
    let exec_block = class(os, "ExecBlock", Some("Proc"), object, &[])?;
    let ruby_wrapper = class(os, "RubyWrapper", None, object, &[])?;
    let gs_session = class(os, "GsSession", None, object, &[])?;
    for c in [undefined, boolean, small_integer, symbol, string, array, exec_block, ruby_wrapper] {
        sealed(os, c);
    }
    // A smalltalk-only class: no ruby dictionary, lookup uses the fallback chain.
    os.class_desc_mut(gs_session)?.env_tables[EnvId::Ruby.index()] = None;
    let enumerable = os.new_module("Enumerable")?;
    let k = &mut os.kernel;
    k.undefined_object = undefined;
    k.boolean = boolean;
    k.small_integer = small_integer;
    k.symbol = symbol;
    k.collection = collection;
    k.sequenceable_collection = seq;
    k.string = string;
    k.array = array;
    k.hash = hash;
    k.exec_block = exec_block;
    k.ruby_wrapper = ruby_wrapper;
    k.gs_session = gs_session;
    k.enumerable = enumerable;
    Ok(())
}

fn def(os: &mut ObjectSpace, class: ObjRef, env: EnvId, sel: &str, sig: Signature, f: NativeFn) -> RtResult<()> {
    os.define_method(class, env, sel, Visibility::Public, sig, MethodBody::Native(f))
}

fn st(os: &mut ObjectSpace, class: ObjRef, sel: &str, f: NativeFn) -> RtResult<()> {
    let arity = crate::method::smalltalk_arity(sel);
    def(os, class, EnvId::Smalltalk, sel, Signature::fixed(arity), f)
}

fn rb(os: &mut ObjectSpace, class: ObjRef, sel: &str, sig: Signature, f: NativeFn) -> RtResult<()> {
    def(os, class, EnvId::Ruby, sel, sig, f)
}

fn nil_default(name: &str) -> (String, std::rc::Rc<crate::ir::Ir>) {
    (name.to_string(), std::rc::Rc::new(crate::ir::Ir::Lit(Value::Nil)))
}

fn install_natives(os: &mut ObjectSpace) -> RtResult<()> {
    let k = os.kernel;
    let fixed = Signature::fixed;

    for env in EnvId::ALL {
        def(os, k.object, env, "class", fixed(0), obj_class)?;
        def(os, k.object, env, "==", fixed(1), obj_eq)?;
    }
    st(os, k.object, "yourself", obj_yourself)?;
    st(os, k.object, "dynamicInstVarAt:", obj_dyn_at)?;
    st(os, k.object, "dynamicInstVarAt:put:", obj_dyn_at_put)?;
    st(os, k.object, "rubySingletonClass", obj_singleton)?;
    st(os, k.object, "instVarNames", obj_st_ivars)?;
    st(os, k.object, "printString", obj_inspect)?;
    rb(os, k.object, "inspect", fixed(0), obj_inspect)?;
    rb(os, k.object, "singleton_class", fixed(0), obj_singleton)?;
    rb(os, k.object, "instance_variables", fixed(0), obj_rb_ivars)?;
    rb(os, k.object, "instance_variable_get", fixed(1), obj_ivar_get)?;
    rb(os, k.object, "instance_variable_set", fixed(2), obj_ivar_set)?;
    os.define_method(
        k.object,
        EnvId::Ruby,
        "initialize",
        Visibility::Private,
        fixed(0).with_splat(),
        MethodBody::Native(obj_initialize),
    )?;

    st(os, k.behavior, "new", behavior_st_new)?;
    st(os, k.behavior, "name", behavior_name)?;
    rb(os, k.behavior, "new", fixed(0).with_splat().with_block(), behavior_rb_new)?;
    rb(os, k.behavior, "name", fixed(0), behavior_name)?;
    rb(os, k.behavior, "superclass", fixed(0), behavior_superclass)?;
    rb(os, k.module, "include", fixed(1), module_include)?;

    for env in EnvId::ALL {
        def(os, k.small_integer, env, "+", fixed(1), int_add)?;
        def(os, k.small_integer, env, "-", fixed(1), int_sub)?;
        def(os, k.small_integer, env, "*", fixed(1), int_mul)?;
        def(os, k.small_integer, env, "<", fixed(1), int_lt)?;
        def(os, k.string, env, "size", fixed(0), str_size)?;
        def(os, k.array, env, "size", fixed(0), array_size)?;
        def(os, k.hash, env, "size", fixed(0), hash_size)?;
    }
    // Strings repeat with `*` in ruby only.
    rb(os, k.string, "*", fixed(1), str_repeat)?;
    rb(os, k.string, "+", fixed(1), str_concat)?;
    st(os, k.string, ",", str_concat)?;

    let join_sig = fixed(0).with_optionals(vec![(
        "separator".into(),
        std::rc::Rc::new(crate::ir::Ir::Lit(Value::str(""))),
    )]);
    rb(os, k.array, "join", join_sig, array_join)?;
    rb(os, k.array, "each", fixed(0).with_block(), array_each)?;
    rb(os, k.array, "[]", fixed(1), array_at)?;
    st(os, k.array, "at:", array_at)?;
    st(os, k.array, "do:", array_do)?;

    rb(os, k.hash, "[]=", fixed(2), hash_at_put)?;
    rb(os, k.hash, "[]", fixed(1), hash_at)?;
    rb(os, k.hash, "keys", fixed(0), hash_keys)?;
    st(os, k.hash, "at:put:", hash_at_put)?;
    st(os, k.hash, "at:", hash_at)?;
    let fetch_sig = fixed(1).with_optionals(vec![nil_default("default")]).with_block();
    rb(os, k.hash, "fetch", fetch_sig, hash_fetch)?;
    os.define_overload(k.hash, "fetch#1__", fixed(1), MethodBody::Native(hash_fetch_strict))?;

    rb(os, k.exec_block, "call", fixed(0).with_splat(), proc_call)?;
    st(os, k.exec_block, "value", proc_value)?;
    st(os, k.exec_block, "value:", proc_value)?;
    st(os, k.exec_block, "value:value:", proc_value)?;

    rb(os, k.enumerable, "map", fixed(0).with_block(), enum_map)?;
    rb(os, k.enumerable, "count", fixed(0), enum_count)?;
    Ok(())
}

fn arg(args: &[Value], i: usize) -> RtResult<&Value> {
    args.get(i)
        .map(Value::unwrapped)
        .ok_or_else(|| RtError::Compile(format!("native argument {i} missing")))
}

fn obj_of(v: &Value) -> RtResult<ObjRef> {
    v.unwrapped()
        .as_obj()
        .ok_or_else(|| RtError::Type(format!("object expected, got {v:?}")))
}

fn int_of(v: &Value) -> RtResult<i64> {
    match v.unwrapped() {
        Value::Int(i) => Ok(*i),
        other => Err(RtError::Type(format!("Integer expected, got {other:?}"))),
    }
}

fn name_of(v: &Value) -> RtResult<String> {
    match v.unwrapped() {
        Value::Str(s) | Value::Sym(s) => Ok(s.strip_prefix('@').unwrap_or(s).to_string()),
        other => Err(RtError::Type(format!("name expected, got {other:?}"))),
    }
}

fn items_of(v: &Value) -> RtResult<std::rc::Rc<Vec<Value>>> {
    match v.unwrapped() {
        Value::Array(items) => Ok(items.clone()),
        other => Err(RtError::Type(format!("Array expected, got {other:?}"))),
    }
}

fn obj_class(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::Obj(os.class_of_value(recv.unwrapped())))
}

fn obj_eq(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::Bool(recv.unwrapped() == arg(args, 0)?))
}

fn obj_yourself(_: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(recv.clone())
}

fn obj_dyn_at(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(os.dynamic_ivar_at(obj_of(recv)?, &name_of(arg(args, 0)?)?))
}

fn obj_dyn_at_put(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let v = arg(args, 1)?.clone();
    os.dynamic_ivar_at_put(obj_of(recv)?, &name_of(arg(args, 0)?)?, v.clone());
    Ok(v)
}

fn obj_singleton(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    os.ruby_singleton_class(recv.unwrapped()).map(Value::Obj)
}

fn names(list: Vec<String>) -> Value {
    Value::array(list.iter().map(|n| Value::str(n)).collect())
}

fn obj_st_ivars(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(names(os.instance_variables(obj_of(recv)?, EnvId::Smalltalk)))
}

fn obj_rb_ivars(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    match recv.unwrapped() {
        Value::Obj(r) => Ok(names(os.instance_variables(*r, EnvId::Ruby))),
        _ => Ok(Value::array(Vec::new())),
    }
}

fn obj_ivar_get(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    os.read_ivar(obj_of(recv)?, &name_of(arg(args, 0)?)?, EnvId::Ruby)
}

fn obj_ivar_set(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let v = arg(args, 1)?.clone();
    os.write_ivar(obj_of(recv)?, &name_of(arg(args, 0)?)?, EnvId::Ruby, v.clone())?;
    Ok(v)
}

fn obj_inspect(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::str(&crate::inspect::render_value(os, recv, EnvId::Ruby)))
}

fn obj_initialize(_: &mut ObjectSpace, _: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::Nil)
}

fn behavior_st_new(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    os.new_instance(obj_of(recv)?).map(Value::Obj)
}

fn behavior_rb_new(os: &mut ObjectSpace, recv: &Value, args: &[Value], block: Option<&Value>) -> RtResult<Value> {
    let inst = Value::Obj(os.new_instance(obj_of(recv)?)?);
    let rest = items_of(arg(args, 0)?)?.as_ref().clone();
    let ctx = crate::dispatch::CallCtx::implicit(None);
    os.send_ruby(&inst, "initialize", rest, None, block.cloned(), ctx)?;
    Ok(inst)
}

fn behavior_name(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let d = os.class_desc(obj_of(recv)?)?;
    Ok(d.name(EnvId::Ruby)
        .or(d.name(EnvId::Smalltalk))
        .map_or(Value::Nil, Value::str))
}

fn behavior_superclass(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(os
        .superclass(obj_of(recv)?, EnvId::Ruby)
        .map_or(Value::Nil, Value::Obj))
}

fn module_include(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    os.include_module(obj_of(recv)?, obj_of(arg(args, 0)?)?, EnvId::Ruby)?;
    Ok(recv.clone())
}

fn int_add(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    int_of(recv)?
        .checked_add(int_of(arg(args, 0)?)?)
        .map(Value::Int)
        .ok_or_else(|| RtError::Type("integer overflow".into()))
}

fn int_sub(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    int_of(recv)?
        .checked_sub(int_of(arg(args, 0)?)?)
        .map(Value::Int)
        .ok_or_else(|| RtError::Type("integer overflow".into()))
}

fn int_mul(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    int_of(recv)?
        .checked_mul(int_of(arg(args, 0)?)?)
        .map(Value::Int)
        .ok_or_else(|| RtError::Type("integer overflow".into()))
}

fn int_lt(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::Bool(int_of(recv)? < int_of(arg(args, 0)?)?))
}

fn str_of(v: &Value) -> RtResult<std::rc::Rc<str>> {
    match v.unwrapped() {
        Value::Str(s) => Ok(s.clone()),
        other => Err(RtError::Type(format!("String expected, got {other:?}"))),
    }
}

fn str_size(_: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::Int(str_of(recv)?.chars().count() as i64))
}

fn str_repeat(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let n = int_of(arg(args, 0)?)?;
    let n = usize::try_from(n).map_err(|_| RtError::Argument {
        given: 1,
        expected: "non-negative count".into(),
    })?;
    Ok(Value::str(&str_of(recv)?.repeat(n)))
}

fn str_concat(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::str(&format!("{}{}", str_of(recv)?, str_of(arg(args, 0)?)?)))
}

fn array_size(_: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::Int(items_of(recv)?.len() as i64))
}

fn display(v: &Value) -> RtResult<String> {
    Ok(match v.unwrapped() {
        Value::Nil => String::new(),
        Value::Str(s) | Value::Sym(s) => s.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        other => return Err(RtError::Type(format!("cannot join {other:?}"))),
    })
}

fn array_join(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let sep = str_of(arg(args, 0)?)?;
    let parts = items_of(recv)?
        .iter()
        .map(display)
        .collect::<RtResult<Vec<_>>>()?;
    Ok(Value::str(&parts.join(&sep)))
}

fn array_each(os: &mut ObjectSpace, recv: &Value, _: &[Value], block: Option<&Value>) -> RtResult<Value> {
    let block = block.ok_or(RtError::LocalJump)?;
    for item in items_of(recv)?.iter() {
        os.call_block(block, vec![item.clone()])?;
    }
    Ok(recv.clone())
}

fn array_do(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    array_each(os, recv, &[], Some(arg(args, 0)?))
}

fn array_at(_: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let i = int_of(arg(args, 0)?)?;
    let items = items_of(recv)?;
    Ok(usize::try_from(i)
        .ok()
        .and_then(|i| items.get(i).cloned())
        .unwrap_or(Value::Nil))
}

fn with_hash<T>(os: &mut ObjectSpace, recv: &Value, f: impl FnOnce(&mut indexmap::IndexMap<HashKey, Value>) -> T) -> RtResult<T> {
    let r = obj_of(recv)?;
    match os.payload_mut(r) {
        Payload::Hash(map) => Ok(f(map)),
        Payload::None => Err(RtError::Type("Hash expected".into())),
    }
}

fn hash_at_put(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let key = HashKey::from_value(arg(args, 0)?)?;
    let v = arg(args, 1)?.clone();
    let len = with_hash(os, recv, |m| {
        m.insert(key, v.clone());
        m.len()
    })?;
    os.write_ivar(obj_of(recv)?, "size", EnvId::Smalltalk, Value::Int(len as i64))?;
    Ok(v)
}

fn hash_at(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let key = HashKey::from_value(arg(args, 0)?)?;
    with_hash(os, recv, |m| m.get(&key).cloned().unwrap_or(Value::Nil))
}

fn hash_keys(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    with_hash(os, recv, |m| Value::array(m.keys().map(HashKey::to_value).collect()))
}

fn hash_size(os: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    with_hash(os, recv, |m| Value::Int(m.len() as i64))
}

fn hash_fetch(os: &mut ObjectSpace, recv: &Value, args: &[Value], block: Option<&Value>) -> RtResult<Value> {
    let key = arg(args, 0)?.clone();
    let hk = HashKey::from_value(&key)?;
    if let Some(v) = with_hash(os, recv, |m| m.get(&hk).cloned())? {
        return Ok(v);
    }
    match block {
        Some(b) => os.call_block(b, vec![key]),
        None => Ok(arg(args, 1)?.clone()),
    }
}

fn hash_fetch_strict(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let key = arg(args, 0)?.clone();
    let hk = HashKey::from_value(&key)?;
    with_hash(os, recv, |m| m.get(&hk).cloned())?
        .ok_or_else(|| RtError::Key(crate::inspect::render_value(os, &key, EnvId::Ruby)))
}

fn proc_call(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    let rest = items_of(arg(args, 0)?)?.as_ref().clone();
    os.call_block(recv, rest)
}

fn proc_value(os: &mut ObjectSpace, recv: &Value, args: &[Value], _: Option<&Value>) -> RtResult<Value> {
    os.call_block(recv, args.to_vec())
}

fn enum_map(os: &mut ObjectSpace, recv: &Value, _: &[Value], block: Option<&Value>) -> RtResult<Value> {
    let block = block.ok_or(RtError::LocalJump)?;
    let mut out = Vec::new();
    for item in items_of(recv)?.iter() {
        out.push(os.call_block(block, vec![item.clone()])?);
    }
    Ok(Value::array(out))
}

fn enum_count(_: &mut ObjectSpace, recv: &Value, _: &[Value], _: Option<&Value>) -> RtResult<Value> {
    Ok(Value::Int(items_of(recv)?.len() as i64))
}
