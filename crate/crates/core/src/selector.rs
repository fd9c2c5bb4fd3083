//! Ruby full selectors, call-site translation and the smalltalk-side
//! `@ruby1:` message syntax.

use std::fmt;
use std::str::FromStr;

use crate::error::{RtError, RtResult};

/// Highest positional count encoded by the generic bridge family.
pub const MAX_BRIDGE_ARGS: usize = 3;

pub const RUBY_PREFIX: &str = "@ruby1:";
pub const STAR_KEYWORD: &str = "__STAR:";
pub const BLOCK_KEYWORD: &str = "__BLOCK:";

/// `base#N<*|_><&|_>`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FullSelector {
    pub base: String,
    pub n: usize,
    pub splat: bool,
    pub block: bool,
}

impl FullSelector {
    pub fn new(base: &str, n: usize, splat: bool, block: bool) -> Self {
        FullSelector {
            base: base.to_string(),
            n,
            splat,
            block,
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn parse(s: &str) -> RtResult<FullSelector> {
        s.parse()
    }
}

impl fmt::Display for FullSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}#{}{}{}",
            self.base,
            self.n,
            if self.splat { '*' } else { '_' },
            if self.block { '&' } else { '_' }
        )
    }
}

impl FromStr for FullSelector {
    type Err = RtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RtError::Compile(format!("malformed full selector `{s}`"));
        let hash = s.rfind('#').ok_or_else(bad)?;
        let (base, suffix) = (&s[..hash], &s[hash + 1..]);
        if base.is_empty() || suffix.len() < 3 || !suffix.is_ascii() {
            return Err(bad());
        }
        let (digits, marks) = suffix.split_at(suffix.len() - 2);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n = digits.parse().map_err(|_| bad())?;
        let mut marks = marks.chars();
        let splat = match marks.next() {
            Some('*') => true,
            Some('_') => false,
            _ => return Err(bad()),
        };
        let block = match marks.next() {
            Some('&') => true,
            Some('_') => false,
            _ => return Err(bad()),
        };
        Ok(FullSelector::new(base, n, splat, block))
    }
}

/// How call-site arguments are rearranged for the chosen full selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packing {
    /// Arguments from this index on are moved into the splat sequence,
    /// ahead of any literal splat contents.
    pub pack_from: Option<usize>,
}

/// Chooses the full selector for a ruby call site.
pub fn translate_call_site(base: &str, argc: usize, has_splat: bool, has_block: bool) -> (FullSelector, Packing) {
    if argc > MAX_BRIDGE_ARGS {
        (
            FullSelector::new(base, MAX_BRIDGE_ARGS, true, has_block),
            Packing {
                pack_from: Some(MAX_BRIDGE_ARGS),
            },
        )
    } else {
        (
            FullSelector::new(base, argc, has_splat, has_block),
            Packing { pack_from: None },
        )
    }
}

/// Parsed smalltalk-side ruby message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StRubySelector {
    pub base: String,
    pub normal_args: usize,
    pub has_splat: bool,
    pub has_block: bool,
}

impl StRubySelector {
    /// Number of argument values the message carries.
    pub fn value_count(&self) -> usize {
        self.normal_args + usize::from(self.has_splat) + usize::from(self.has_block)
    }
}

/// Splits a compact keyword selector after every colon:
/// `@ruby1:set_name:_:` becomes `["@ruby1:set_name:", "_:"]`.
pub fn split_keyword_parts(compact: &str) -> Vec<String> {
    let (prefix, rest) = match compact.strip_prefix(RUBY_PREFIX) {
        Some(rest) => (RUBY_PREFIX, rest),
        None => ("", compact),
    };
    let mut parts: Vec<String> = Vec::new();
    let mut cur = String::new();
    for ch in rest.chars() {
        cur.push(ch);
        if ch == ':' {
            parts.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        parts.push(cur);
    }
    if let Some(first) = parts.first_mut() {
        first.insert_str(0, prefix);
    } else {
        parts.push(prefix.to_string());
    }
    parts
}

pub fn parse_st_ruby_selector<S: AsRef<str>>(parts: &[S]) -> RtResult<StRubySelector> {
    let first = parts
        .first()
        .map(AsRef::as_ref)
        .ok_or_else(|| RtError::Compile("empty ruby selector".into()))?;
    let rest = first
        .strip_prefix(RUBY_PREFIX)
        .ok_or_else(|| RtError::Compile(format!("`{first}` does not start with {RUBY_PREFIX}")))?;
    let (base, has_first) = match rest.strip_suffix(':') {
        Some(b) => (b, true),
        None => (rest, false),
    };
    if base.is_empty() || base.contains(':') {
        return Err(RtError::Compile(format!("malformed ruby selector `{first}`")));
    }
    let mut sel = StRubySelector {
        base: base.to_string(),
        normal_args: usize::from(has_first),
        has_splat: false,
        has_block: false,
    };
    for part in &parts[1..] {
        let part = part.as_ref();
        if !has_first {
            return Err(RtError::UnsupportedShape(format!(
                "`{part}` needs a first normal argument after `{first}`"
            )));
        }
        match part {
            STAR_KEYWORD if !sel.has_splat && !sel.has_block => sel.has_splat = true,
            BLOCK_KEYWORD if !sel.has_block => sel.has_block = true,
            p if p.ends_with(':') && p.len() > 1 && !sel.has_splat && !sel.has_block => sel.normal_args += 1,
            p => {
                return Err(RtError::Compile(format!("unexpected keyword `{p}` in ruby selector")));
            }
        }
    }
    Ok(sel)
}
