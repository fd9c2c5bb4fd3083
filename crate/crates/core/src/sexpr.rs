//! Tokenizer and reader shared by the script runner and the IR.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Atom or string text.
    pub fn text(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) | Sexp::Str(a) => Some(a),
            Sexp::List(_) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::Str(s) => write!(f, "{}", quote(s)),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadError(pub String);

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Reads every top-level form in `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexp>, ReadError> {
    let mut reader = Reader {
        chars: src.chars().collect(),
        pos: 0,
    };
    let mut out = Vec::new();
    loop {
        reader.skip_ws();
        if reader.pos >= reader.chars.len() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

pub fn read_one(src: &str) -> Result<Sexp, ReadError> {
    let mut forms = read_all(src)?;
    match forms.len() {
        1 => Ok(forms.remove(0)),
        n => Err(ReadError(format!("expected one form, found {n} in `{src}`"))),
    }
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
}

impl Reader {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn read(&mut self) -> Result<Sexp, ReadError> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            None => Err(ReadError("unexpected end of input".into())),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.get(self.pos) {
                        None => return Err(ReadError("unbalanced `(`".into())),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(ReadError("unbalanced `)`".into())),
            Some('"') => {
                self.pos += 1;
                self.read_string().map(Sexp::Str)
            }
            Some(_) => {
                let start = self.pos;
                while let Some(&c) = self.chars.get(self.pos) {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    if c == '"' {
                        // `name="text"` stays one atom
                        self.pos += 1;
                        self.read_string()?;
                        continue;
                    }
                    self.pos += 1;
                }
                Ok(Sexp::Atom(self.chars[start..self.pos].iter().collect()))
            }
        }
    }

    fn read_string(&mut self) -> Result<String, ReadError> {
        let mut s = String::new();
        loop {
            match self.chars.get(self.pos) {
                None => return Err(ReadError("unterminated string".into())),
                Some('"') => {
                    self.pos += 1;
                    return Ok(s);
                }
                Some('\\') => {
                    let esc = self
                        .chars
                        .get(self.pos + 1)
                        .ok_or_else(|| ReadError("unterminated escape".into()))?;
                    s.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        other => *other,
                    });
                    self.pos += 2;
                }
                Some(&c) => {
                    s.push(c);
                    self.pos += 1;
                }
            }
        }
    }
}
