use std::fmt;
use std::str::FromStr;

/// One of the two language worlds sharing the object space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvId {
    Smalltalk,
    Ruby,
}

impl EnvId {
    pub const ALL: [EnvId; 2] = [EnvId::Smalltalk, EnvId::Ruby];

    pub(crate) fn index(self) -> usize {
        match self {
            EnvId::Smalltalk => 0,
            EnvId::Ruby => 1,
        }
    }

    pub fn other(self) -> EnvId {
        match self {
            EnvId::Smalltalk => EnvId::Ruby,
            EnvId::Ruby => EnvId::Smalltalk,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvId::Smalltalk => "smalltalk",
            EnvId::Ruby => "ruby",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smalltalk" => Ok(EnvId::Smalltalk),
            "ruby" => Ok(EnvId::Ruby),
            other => Err(format!("unknown environment `{other}`")),
        }
    }
}
