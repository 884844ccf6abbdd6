//! Snippet granularity levels.

use serde::{Deserialize, Serialize};
use std::fmt;

/// The structural level a code snippet lives at.
///
/// Every snippet, query, and training pair carries exactly one granularity,
/// and retrieval never mixes levels: a block query is ranked against block
/// snippets only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// A whole function or method body.
    Function,
    /// A compound region inside a function: loop body, branch, `with`/`try`
    /// suite, or a synthesized prefix of one.
    Block,
    /// A single simple statement occupying one source line.
    Statement,
}

impl Granularity {
    /// All levels, coarse to fine. Iteration order is stable and is used
    /// wherever per-granularity results are reported.
    pub const ALL: [Granularity; 3] = [
        Granularity::Function,
        Granularity::Block,
        Granularity::Statement,
    ];

    /// Single-byte tag used by the binary index format.
    pub fn code(self) -> u8 {
        match self {
            Granularity::Function => 0,
            Granularity::Block => 1,
            Granularity::Statement => 2,
        }
    }

    /// Inverse of [`Granularity::code`].
    pub fn from_code(code: u8) -> Option<Granularity> {
        match code {
            0 => Some(Granularity::Function),
            1 => Some(Granularity::Block),
            2 => Some(Granularity::Statement),
            _ => None,
        }
    }

    /// Lowercase name matching the JSONL wire form.
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Function => "function",
            Granularity::Block => "block",
            Granularity::Statement => "statement",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "function" => Ok(Granularity::Function),
            "block" => Ok(Granularity::Block),
            "statement" => Ok(Granularity::Statement),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}
