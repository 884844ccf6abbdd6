//! The regex stage: four rules with fixed precedence.

use codegrain_core::tokenize::count_tokens;
use regex::Regex;
use serde::Serialize;

/// Why a pair was dropped. Order here is the rule precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    Url,
    SpecialTerm,
    AutoReview,
    TooShort,
    Reliance,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Url => "url",
            DropReason::SpecialTerm => "special-term",
            DropReason::AutoReview => "auto-review",
            DropReason::TooShort => "too-short",
            DropReason::Reliance => "reliance",
        }
    }
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a filter stage for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Drop(DropReason),
}

/// Knobs for both filter stages.
#[derive(Debug, Clone)]
pub struct FilterConfig {
    /// Comments starting with one of these are dropped (case-insensitive).
    pub special_terms: Vec<String>,
    /// Comments starting with one of these prefixes are tool output.
    pub auto_review_prefixes: Vec<String>,
    /// Minimum token count for a comment to survive.
    pub min_tokens: usize,
    /// Slack added to the snippet cosine in the reliance test.
    pub margin: f64,
}

impl Default for FilterConfig {
    fn default() -> FilterConfig {
        FilterConfig {
            special_terms: ["TODO", "FIXME", "XXX", "HACK", "NOTE:"]
                .map(String::from)
                .to_vec(),
            auto_review_prefixes: ["lint", "linter", "noqa", "pylint", "eslint", "checkstyle"]
                .map(String::from)
                .to_vec(),
            min_tokens: 4,
            margin: 0.0,
        }
    }
}

/// Compiled regex rules, applied in precedence order:
/// url > special-term > auto-review > too-short.
pub struct RegexRules {
    url: Regex,
    special: Option<Regex>,
    review: Option<Regex>,
    min_tokens: usize,
}

impl RegexRules {
    pub fn new(config: &FilterConfig) -> RegexRules {
        RegexRules {
            url: Regex::new(r"(?i)\b(?:https?://|www\.)\S+").expect("static url pattern"),
            special: start_pattern(&config.special_terms, true),
            review: start_pattern(&config.auto_review_prefixes, false),
            min_tokens: config.min_tokens,
        }
    }

    /// First matching rule wins; `Keep` when none match.
    pub fn evaluate(&self, comment_text: &str) -> Decision {
        if self.url.is_match(comment_text) {
            return Decision::Drop(DropReason::Url);
        }
        if self.special.as_ref().is_some_and(|r| r.is_match(comment_text)) {
            return Decision::Drop(DropReason::SpecialTerm);
        }
        if self.review.as_ref().is_some_and(|r| r.is_match(comment_text)) {
            return Decision::Drop(DropReason::AutoReview);
        }
        if count_tokens(comment_text) < self.min_tokens {
            return Decision::Drop(DropReason::TooShort);
        }
        Decision::Keep
    }
}

/// Case-insensitive comment-start alternation over `terms`.
///
/// With `word_boundary`, terms ending in a word character only match when
/// followed by a non-word character ("TODO" matches "TODO: x" but not
/// "TODOLIST"); prefixes match bare ("lint" matches "linting").
fn start_pattern(terms: &[String], word_boundary: bool) -> Option<Regex> {
    if terms.is_empty() {
        return None;
    }
    let alternation = terms
        .iter()
        .map(|t| {
            let escaped = regex::escape(t);
            let ends_wordy = t.chars().last().is_some_and(|c| c.is_alphanumeric() || c == '_');
            if word_boundary && ends_wordy {
                format!("{escaped}\\b")
            } else {
                escaped
            }
        })
        .collect::<Vec<_>>()
        .join("|");
    Some(Regex::new(&format!(r"(?i)^\s*(?:{alternation})")).expect("escaped terms compile"))
}
