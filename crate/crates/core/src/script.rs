//! Line-oriented script runner.
//!
//! One command per line, `#` starts a comment line. Each command is echoed
//! as `> line` and followed by `=> value`, `!! Kind: message`, or the
//! command's own output. Exit codes: 0 when every `expect` passed, 1 when
//! some failed, 2 when the script could not be parsed or a definition
//! failed without an `expect error` right after it.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::dispatch::CallCtx;
use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::inspect::{dump_space, inspect_hierarchy, render_value};
use crate::interp::Frame;
use crate::ir::{keyword_message, literal_atom, Ir};
use crate::method::{MethodBody, Signature, Visibility};
use crate::object_space::{ObjRef, ObjectSpace};
use crate::selector::{parse_st_ruby_selector, split_keyword_parts, StRubySelector, RUBY_PREFIX};
use crate::sexpr::{read_all, read_one, Sexp};
use crate::value::Value;

#[derive(Debug, Clone)]
pub enum Expr {
    LastResult,
    Var(String),
    New(String),
    Name(String),
    /// `Name.singleton`: the ruby singleton class.
    Singleton(String),
    /// `Name.class`: the smalltalk meta class.
    Meta(String),
    Ir(Ir),
}

#[derive(Debug, Clone)]
pub enum Command {
    Env(EnvId),
    Class {
        name: String,
        superclass: String,
        ivars: Vec<String>,
    },
    Module(String),
    Include {
        class: Expr,
        module: Expr,
    },
    Def {
        class: Expr,
        selector: String,
        visibility: Visibility,
        signature: Option<Signature>,
        body: Ir,
    },
    DefPrim {
        class: Expr,
        ruby_name: String,
        st_selector: String,
        class_side: bool,
    },
    Visibility {
        class: Expr,
        selector: String,
        visibility: Visibility,
    },
    Send {
        recv: Expr,
        selector: String,
        args: Vec<Ir>,
        star: Option<Vec<Ir>>,
        block: Option<Ir>,
    },
    StCallRuby {
        recv: Expr,
        selector: Result<StRubySelector, RtError>,
        args: Vec<Ir>,
    },
    Wrap(Expr),
    /// `new <Class>` or `eval <expr>`: evaluates and prints a value.
    Eval(Expr),
    Singleton {
        target: Expr,
        depth: Option<usize>,
    },
    Expect(Expr),
    ExpectError(String),
    Inspect(Expr),
    Ivars(Expr),
    Let(String),
    Stats,
    Selfcheck(usize),
}

impl Command {
    fn is_definition(&self) -> bool {
        matches!(
            self,
            Command::Env(_)
                | Command::Class { .. }
                | Command::Module(_)
                | Command::Include { .. }
                | Command::Def { .. }
                | Command::DefPrim { .. }
                | Command::Visibility { .. }
                | Command::Let(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

struct Tokens {
    items: Vec<Sexp>,
    pos: usize,
}

impl Tokens {
    fn next(&mut self) -> Option<&Sexp> {
        let t = self.items.get(self.pos);
        self.pos += 1;
        t
    }

    fn peek_atom(&self) -> Option<&str> {
        self.items.get(self.pos).and_then(Sexp::atom)
    }

    fn atom(&mut self, what: &str) -> Result<String, String> {
        match self.next() {
            Some(Sexp::Atom(a)) => Ok(a.clone()),
            Some(other) => Err(format!("expected {what}, found `{other}`")),
            None => Err(format!("expected {what}")),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.items.len()
    }

    fn finish(&self) -> Result<(), String> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(format!("unexpected `{t}`")),
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        match self.next().cloned() {
            None => Err("expected an expression".into()),
            Some(Sexp::Atom(a)) => Ok(atom_expr(&a, self)?),
            Some(other) => Ok(Expr::Ir(Ir::from_sexp(&other).map_err(|e| e.to_string())?)),
        }
    }

    fn ir(&mut self) -> Result<Ir, String> {
        let s = self.next().cloned().ok_or("expected an expression")?;
        Ir::from_sexp(&s).map_err(|e| e.to_string())
    }
}

fn atom_expr(a: &str, toks: &mut Tokens) -> Result<Expr, String> {
    if a == "@lastresult" {
        return Ok(Expr::LastResult);
    }
    if a == "new" {
        return Ok(Expr::New(toks.atom("a class name after `new`")?));
    }
    if let Some(v) = a.strip_prefix('$') {
        return Ok(Expr::Var(v.to_string()));
    }
    if let Some(n) = a.strip_suffix(".singleton") {
        return Ok(Expr::Singleton(n.to_string()));
    }
    if let Some(n) = a.strip_suffix(".class") {
        return Ok(Expr::Meta(n.to_string()));
    }
    if a == "self" {
        return Err("`self` is not available at script level".into());
    }
    Ok(match literal_atom(a) {
        Some(v) => Expr::Ir(Ir::Lit(v)),
        None => Expr::Name(a.to_string()),
    })
}

fn parse_visibility(s: &str) -> Result<Visibility, String> {
    s.parse()
}

fn parse_default(spec: &str) -> Result<(String, Ir), String> {
    let (name, lit) = spec
        .split_once('=')
        .ok_or_else(|| format!("optional parameter `{spec}` needs name=literal"))?;
    let sexp = read_one(lit).map_err(|e| e.to_string())?;
    let ir = Ir::from_sexp(&sexp).map_err(|e| e.to_string())?;
    if !matches!(ir, Ir::Lit(_)) {
        return Err(format!("default of `{name}` must be a literal"));
    }
    Ok((name.to_string(), ir))
}

fn parse_def(t: &mut Tokens) -> Result<Command, String> {
    let class = t.expr()?;
    let selector = match t.next() {
        Some(s) => s.text().ok_or("expected a selector")?.to_string(),
        None => return Err("expected a selector".into()),
    };
    let mut visibility = Visibility::Public;
    let mut required: Option<usize> = None;
    let mut optionals = Vec::new();
    let (mut splat, mut block) = (false, false);
    loop {
        let kw = t.atom("`body`")?;
        match kw.as_str() {
            "vis" => visibility = parse_visibility(&t.atom("a visibility")?)?,
            "sig" => {
                let n = t.atom("a required count")?;
                required = Some(n.parse().map_err(|_| format!("bad required count `{n}`"))?);
            }
            "opt" => {
                while let Some(a) = t.peek_atom() {
                    if !a.contains('=') {
                        break;
                    }
                    let spec = t.atom("name=literal")?;
                    let (name, ir) = parse_default(&spec)?;
                    optionals.push((name, std::rc::Rc::new(ir)));
                }
            }
            "splat" => splat = true,
            "block" => block = true,
            "body" => break,
            other => return Err(format!("unknown def keyword `{other}`")),
        }
    }
    let body = t.ir()?;
    t.finish()?;
    let signature = (required.is_some() || !optionals.is_empty() || splat || block).then(|| Signature {
        required: required.unwrap_or(0),
        optionals,
        splat,
        block,
        block_fills_last: false,
    });
    Ok(Command::Def {
        class,
        selector,
        visibility,
        signature,
        body,
    })
}

fn parse_send(t: &mut Tokens) -> Result<Command, String> {
    let recv = t.expr()?;
    let selector = t.next().and_then(Sexp::text).ok_or("expected a selector")?.to_string();
    let mut args = Vec::new();
    let (mut star, mut block) = (None, None);
    while !t.done() {
        match t.peek_atom() {
            Some("star") => {
                t.next();
                match t.next() {
                    Some(Sexp::List(items)) => {
                        let items = items
                            .iter()
                            .map(Ir::from_sexp)
                            .collect::<RtResult<Vec<_>>>()
                            .map_err(|e| e.to_string())?;
                        star = Some(items);
                    }
                    _ => return Err("`star` expects a parenthesized list".into()),
                }
            }
            Some("blockv") => {
                t.next();
                block = Some(t.ir()?);
            }
            _ if star.is_some() || block.is_some() => return Err("arguments must precede star and blockv".into()),
            _ => args.push(t.ir()?),
        }
    }
    Ok(Command::Send {
        recv,
        selector,
        args,
        star,
        block,
    })
}

pub fn parse_line(line: &str) -> Result<Option<Command>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let items = read_all(trimmed).map_err(|e| e.to_string())?;
    let mut t = Tokens { items, pos: 0 };
    let head = t.atom("a command")?;
    let cmd = match head.as_str() {
        "env" => Command::Env(t.atom("an environment")?.parse()?),
        "class" => {
            let name = t.atom("a class name")?;
            let mut superclass = "Object".to_string();
            let mut ivars = Vec::new();
            while let Some(kw) = t.next().cloned() {
                match kw.atom() {
                    Some("super") => superclass = t.atom("a superclass name")?,
                    Some("ivars") => {
                        while !t.done() {
                            ivars.push(t.atom("an ivar name")?);
                        }
                    }
                    _ => return Err(format!("unexpected `{kw}` in class command")),
                }
            }
            Command::Class {
                name,
                superclass,
                ivars,
            }
        }
        "module" => Command::Module(t.atom("a module name")?),
        "include" => Command::Include {
            class: t.expr()?,
            module: t.expr()?,
        },
        "def" => parse_def(&mut t)?,
        "defprim" | "defclassprim" => Command::DefPrim {
            class: t.expr()?,
            ruby_name: t.next().and_then(Sexp::text).ok_or("expected a ruby name")?.to_string(),
            st_selector: t.next().and_then(Sexp::text).ok_or("expected a smalltalk selector")?.to_string(),
            class_side: head == "defclassprim",
        },
        "visibility" => Command::Visibility {
            class: t.expr()?,
            selector: t.next().and_then(Sexp::text).ok_or("expected a selector")?.to_string(),
            visibility: parse_visibility(&t.atom("a visibility")?)?,
        },
        "send" => parse_send(&mut t)?,
        "stcallruby" => {
            let recv = t.expr()?;
            let rest = &t.items[t.pos..];
            let head = rest.first().and_then(Sexp::atom).ok_or("expected a @ruby1: selector")?;
            if !head.starts_with(RUBY_PREFIX) {
                return Err(format!("`{head}` does not start with {RUBY_PREFIX}"));
            }
            let interleaved = rest[1..]
                .iter()
                .any(|x| matches!(x.atom(), Some("_:" | "__STAR:" | "__BLOCK:")));
            let (parts, args) = if interleaved {
                keyword_message(rest).map_err(|e| e.to_string())?
            } else {
                let args = rest[1..]
                    .iter()
                    .map(Ir::from_sexp)
                    .collect::<RtResult<Vec<_>>>()
                    .map_err(|e| e.to_string())?;
                (split_keyword_parts(head), args)
            };
            t.pos = t.items.len();
            let selector = parse_st_ruby_selector(&parts);
            if let Ok(sel) = &selector {
                if args.len() != sel.value_count() {
                    return Err(format!("{head} needs {} value(s), {} given", sel.value_count(), args.len()));
                }
            }
            // Shape errors surface at run time, where they can be expected.
            Command::StCallRuby { recv, selector, args }
        }
        "wrap" => Command::Wrap(t.expr()?),
        "new" => Command::Eval(Expr::New(t.atom("a class name")?)),
        "eval" => Command::Eval(t.expr()?),
        "singleton" => {
            let target = t.expr()?;
            let depth = match t.next() {
                None => None,
                Some(s) => Some(
                    s.atom()
                        .and_then(|a| a.parse().ok())
                        .ok_or_else(|| format!("bad depth `{s}`"))?,
                ),
            };
            Command::Singleton { target, depth }
        }
        "expect" => {
            if t.peek_atom() == Some("error") {
                t.next();
                Command::ExpectError(t.atom("an error kind")?)
            } else {
                Command::Expect(t.expr()?)
            }
        }
        "inspect" => {
            if t.atom("`hierarchy`")? != "hierarchy" {
                return Err("only `inspect hierarchy` is supported".into());
            }
            Command::Inspect(t.expr()?)
        }
        "ivars" => Command::Ivars(t.expr()?),
        "let" => {
            let v = t.atom("a $variable")?;
            Command::Let(v.strip_prefix('$').ok_or("variables start with `$`")?.to_string())
        }
        "stats" => Command::Stats,
        "selfcheck" => {
            let n = t.atom("a count")?;
            Command::Selfcheck(n.parse().map_err(|_| format!("bad count `{n}`"))?)
        }
        other => return Err(format!("unknown command `{other}`")),
    };
    t.finish()?;
    Ok(Some(cmd))
}

/// Every command of a script with its source line, or the first parse error.
pub fn parse_script(src: &str) -> Result<Vec<(usize, String, Command)>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(cmd)) => out.push((i + 1, line.trim().to_string(), cmd)),
            Ok(None) => {}
            Err(message) => return Err(ParseError { line: i + 1, message }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub dump_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub transcript: String,
    pub exit_code: i32,
}

pub struct Runner {
    pub os: ObjectSpace,
    env: EnvId,
    last: Result<Value, RtError>,
    vars: BTreeMap<String, Value>,
    out: String,
    failures: usize,
    rng: StdRng,
}

impl Runner {
    pub fn new(seed: u64) -> Self {
        Runner {
            os: crate::kernel::bootstrap(),
            env: EnvId::Ruby,
            last: Ok(Value::Nil),
            vars: BTreeMap::new(),
            out: String::new(),
            failures: 0,
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn transcript(&self) -> &str {
        &self.out
    }

    fn class_ref(&self, name: &str) -> RtResult<ObjRef> {
        self.os
            .resolve_name(self.env, name)
            .ok_or_else(|| RtError::Compile(format!("unknown name `{name}`")))
    }

    fn eval_ir(&mut self, ir: &Ir) -> RtResult<Value> {
        let frame = Frame::top(self.env);
        self.os.eval(&frame, ir)
    }

    fn eval_expr(&mut self, e: &Expr) -> RtResult<Value> {
        match e {
            Expr::LastResult => self.last.clone(),
            Expr::Var(v) => self
                .vars
                .get(v)
                .cloned()
                .ok_or_else(|| RtError::Compile(format!("unbound variable `${v}`"))),
            Expr::New(c) => {
                let c = self.class_ref(c)?;
                self.os.new_instance(c).map(Value::Obj)
            }
            Expr::Name(n) => self.class_ref(n).map(Value::Obj),
            Expr::Singleton(n) => {
                let c = self.class_ref(n)?;
                self.os.ruby_singleton_class(&Value::Obj(c)).map(Value::Obj)
            }
            Expr::Meta(n) => {
                let c = self.class_ref(n)?;
                Ok(Value::Obj(self.os.virtual_class(c)))
            }
            Expr::Ir(ir) => self.eval_ir(ir),
        }
    }

    fn eval_obj(&mut self, e: &Expr) -> RtResult<ObjRef> {
        let v = self.eval_expr(e)?;
        v.unwrapped()
            .as_obj()
            .ok_or_else(|| RtError::Type(format!("object expected, got {}", self.render(&v))))
    }

    fn render(&self, v: &Value) -> String {
        render_value(&self.os, v, self.env)
    }

    fn exec(&mut self, cmd: &Command) -> RtResult<Option<Value>> {
        match cmd {
            Command::Env(e) => {
                self.env = *e;
                Ok(None)
            }
            Command::Class {
                name,
                superclass,
                ivars,
            } => {
                let sup = self.class_ref(superclass)?;
                let ivars: Vec<&str> = ivars.iter().map(String::as_str).collect();
                let (st, rb) = match self.env {
                    EnvId::Smalltalk => (Some(name.as_str()), None),
                    EnvId::Ruby => (None, Some(name.as_str())),
                };
                self.os.new_class(st, rb, sup, &ivars).map(|c| Some(Value::Obj(c)))
            }
            Command::Module(name) => self.os.new_module(name).map(|m| Some(Value::Obj(m))),
            Command::Include { class, module } => {
                let c = self.eval_obj(class)?;
                let m = self.eval_obj(module)?;
                self.os.include_module(c, m, self.env)?;
                Ok(None)
            }
            Command::Def {
                class,
                selector,
                visibility,
                signature,
                body,
            } => {
                let c = self.eval_obj(class)?;
                let sig = match signature {
                    Some(s) => s.clone(),
                    None => Signature::fixed(match self.env {
                        EnvId::Smalltalk => crate::method::smalltalk_arity(selector),
                        EnvId::Ruby => 0,
                    }),
                };
                let body = MethodBody::Ir(std::rc::Rc::new(body.clone()));
                self.os.define_method(c, self.env, selector, *visibility, sig, body)?;
                Ok(None)
            }
            Command::DefPrim {
                class,
                ruby_name,
                st_selector,
                class_side,
            } => {
                let c = self.eval_obj(class)?;
                if *class_side {
                    self.os.class_primitive(c, ruby_name, st_selector)?;
                } else {
                    self.os.primitive(c, ruby_name, st_selector)?;
                }
                Ok(None)
            }
            Command::Visibility {
                class,
                selector,
                visibility,
            } => {
                let c = self.eval_obj(class)?;
                self.os.set_visibility(c, self.env, selector, *visibility)?;
                Ok(None)
            }
            Command::Send {
                recv,
                selector,
                args,
                star,
                block,
            } => {
                let recv = self.eval_expr(recv)?;
                let args = args.iter().map(|a| self.eval_ir(a)).collect::<RtResult<Vec<_>>>()?;
                let star = match star {
                    Some(items) => Some(items.iter().map(|a| self.eval_ir(a)).collect::<RtResult<Vec<_>>>()?),
                    None => None,
                };
                let block = block.as_ref().map(|b| self.eval_ir(b)).transpose()?;
                let ctx = CallCtx::explicit(None);
                match self.env {
                    EnvId::Ruby => self.os.send_ruby(&recv, selector, args, star, block, ctx).map(Some),
                    EnvId::Smalltalk => {
                        if star.is_some() || block.is_some() {
                            return Err(RtError::Compile("smalltalk sends take plain arguments".into()));
                        }
                        self.os.send_st(&recv, selector, args, ctx).map(Some)
                    }
                }
            }
            Command::StCallRuby { recv, selector, args } => {
                let selector = selector.as_ref().map_err(Clone::clone)?;
                let recv = self.eval_expr(recv)?;
                let mut args = args.iter().map(|a| self.eval_ir(a)).collect::<RtResult<Vec<_>>>()?;
                let block = selector.has_block.then(|| args.pop()).flatten();
                let splat = selector.has_splat.then(|| args.pop()).flatten();
                self.os
                    .st_call_ruby(&recv, selector, args, splat, block, CallCtx::explicit(None))
                    .map(Some)
            }
            Command::Eval(e) => self.eval_expr(e).map(Some),
            Command::Wrap(e) => {
                let v = self.eval_expr(e)?;
                Ok(Some(self.os.wrap(&v)))
            }
            Command::Singleton { target, depth } => {
                let v = self.eval_expr(target)?;
                let before = self.os.class_count();
                let s = match depth {
                    Some(d) => {
                        self.os.ensure_singleton_generated(v.unwrapped(), *d)?;
                        self.os.dispatch_class(v.unwrapped())
                    }
                    None => self.os.ruby_singleton_class(v.unwrapped())?,
                };
                let _ = writeln!(self.out, ".. generated {}", self.os.class_count() - before);
                Ok(Some(Value::Obj(s)))
            }
            Command::Inspect(e) => {
                let r = self.eval_obj(e)?;
                let dump = inspect_hierarchy(&self.os, r);
                self.out.push_str(&dump);
                Ok(None)
            }
            Command::Ivars(e) => {
                let r = self.eval_obj(e)?;
                let names = self.os.instance_variables(r, self.env);
                Ok(Some(Value::array(names.iter().map(|n| Value::str(n)).collect())))
            }
            Command::Let(v) => {
                let value = self.last.clone()?;
                self.vars.insert(v.clone(), value);
                Ok(None)
            }
            Command::Stats => {
                let _ = writeln!(
                    self.out,
                    ".. objects={} classes={} metas={} method_missing={}",
                    self.os.object_count(),
                    self.os.class_count(),
                    self.os.meta_class_count(),
                    self.os.method_missing_calls()
                );
                Ok(None)
            }
            Command::Expect(_) | Command::ExpectError(_) | Command::Selfcheck(_) => unreachable!(),
        }
    }

    fn expect(&mut self, expected: &Expr) {
        let verdict = match (self.eval_expr(expected), &self.last) {
            (Ok(want), Ok(got)) if want.unwrapped() == got.unwrapped() => None,
            (Ok(want), Ok(got)) => Some(format!("expected {}, got {}", self.render(&want), self.render(got))),
            (Ok(want), Err(e)) => Some(format!("expected {}, got {}: {e}", self.render(&want), e.kind())),
            (Err(e), _) => Some(format!("cannot evaluate expectation: {e}")),
        };
        self.verdict(verdict);
    }

    fn expect_error(&mut self, kind: &str) {
        let verdict = match &self.last {
            Err(e) if e.kind() == kind => None,
            Err(e) => Some(format!("expected {kind}, got {}: {e}", e.kind())),
            Ok(v) => Some(format!("expected {kind}, got {}", self.render(v))),
        };
        self.verdict(verdict);
    }

    fn verdict(&mut self, failure: Option<String>) {
        match failure {
            None => self.out.push_str("ok\n"),
            Some(msg) => {
                self.failures += 1;
                let _ = writeln!(self.out, "FAIL {msg}");
            }
        }
    }

    /// Random classes, instances and singleton requests; checks the model
    /// invariants after every step.
    fn selfcheck(&mut self, steps: usize) {
        let object = self.os.kernel().object;
        let mut classes = vec![object];
        let mut objects: Vec<ObjRef> = Vec::new();
        let mut problems = Vec::new();
        for _ in 0..steps {
            match self.rng.random_range(0..3) {
                0 => {
                    let sup = classes[self.rng.random_range(0..classes.len())];
                    if let Ok(c) = self.os.new_class(None, None, sup, &[]) {
                        classes.push(c);
                        objects.push(c);
                    }
                }
                1 => {
                    let c = classes[self.rng.random_range(0..classes.len())];
                    if let Ok(o) = self.os.new_instance(c) {
                        objects.push(o);
                    }
                }
                _ if !objects.is_empty() => {
                    let o = objects[self.rng.random_range(0..objects.len())];
                    let v = Value::Obj(o);
                    let first = self.os.ruby_singleton_class(&v);
                    let before = self.os.class_count();
                    let second = self.os.ruby_singleton_class(&v);
                    if first != second || self.os.class_count() != before {
                        problems.push(format!("ruby_singleton_class not idempotent on {o}"));
                    }
                }
                _ => {}
            }
        }
        for r in self.os.all_objects() {
            if self.os.is_meta(self.os.class_of(r)) {
                problems.push(format!("class_of({r}) is a meta class"));
            }
            if let Ok(d) = self.os.class_desc(r) {
                if let Some(dest) = d.dest_class {
                    if self.os.virtual_class(dest) != r && !self.os.is_meta(self.os.virtual_class(dest)) {
                        problems.push(format!("{r} lost its destination {dest}"));
                    }
                }
            }
        }
        let verdict = (!problems.is_empty()).then(|| problems.join("; "));
        let _ = writeln!(self.out, ".. selfcheck {steps} steps");
        self.verdict(verdict);
    }

    /// Runs parsed commands; returns the exit code.
    pub fn run(&mut self, commands: &[(usize, String, Command)]) -> i32 {
        for (i, (line_no, line, cmd)) in commands.iter().enumerate() {
            let _ = writeln!(self.out, "> {line}");
            match cmd {
                Command::Expect(ir) => self.expect(ir),
                Command::ExpectError(kind) => self.expect_error(kind),
                Command::Selfcheck(n) => self.selfcheck(*n),
                _ => match self.exec(cmd) {
                    Ok(Some(v)) => {
                        let _ = writeln!(self.out, "=> {}", self.render(&v));
                        self.last = Ok(v);
                    }
                    Ok(None) => {}
                    Err(e) => {
                        let _ = writeln!(self.out, "!! {}: {e}", e.kind());
                        let checked = matches!(commands.get(i + 1), Some((_, _, Command::ExpectError(_))));
                        self.last = Err(e);
                        if cmd.is_definition() && !checked {
                            let _ = writeln!(self.out, "aborted at line {line_no}");
                            return 2;
                        }
                    }
                },
            }
        }
        i32::from(self.failures > 0)
    }
}

pub fn run_script(src: &str, opts: &RunOptions) -> Outcome {
    let commands = match parse_script(src) {
        Ok(c) => c,
        Err(e) => {
            return Outcome {
                transcript: format!("!! ParseError: line {}: {}\n", e.line, e.message),
                exit_code: 2,
            }
        }
    };
    let mut runner = Runner::new(opts.seed);
    let exit_code = runner.run(&commands);
    let mut transcript = runner.out;
    if opts.dump_final {
        transcript.push_str("== final object space ==\n");
        transcript.push_str(&dump_space(&runner.os));
    }
    Outcome { transcript, exit_code }
}
