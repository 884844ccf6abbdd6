//! Hashing subword tokenizer.
//!
//! Text is split on whitespace and punctuation, identifier runs are further
//! split on underscores and case boundaries, pieces are lowercased, and each
//! piece is hashed into a fixed-size vocabulary with a seeded FNV-1a hash.
//! Every token remembers the byte span it came from so downstream code can
//! map AST spans onto token rows.

/// Bucket count of the hashing vocabulary.
pub const VOCAB_SIZE: usize = 1 << 16;

/// Default truncation limit for code sequences.
pub const DEFAULT_MAX_CODE_TOKENS: usize = 320;

/// Default truncation limit for query sequences.
pub const DEFAULT_MAX_QUERY_TOKENS: usize = 128;

/// Default seed for the token hash. Stored in checkpoints so an index is
/// only ever queried with the tokenizer that built it.
pub const DEFAULT_TOKENIZER_SEED: u64 = 0x636f_6465_6772_6e73;

/// A tokenized string: hashed ids plus the byte span each token covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    /// Hashed token ids, each in `[0, VOCAB_SIZE)`.
    pub ids: Vec<u32>,
    /// Per-token `(byte_start, byte_end)` spans, ascending and disjoint.
    pub offsets: Vec<(usize, usize)>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Indices of tokens whose byte span lies entirely inside `[start, end)`.
    pub fn tokens_in_span(&self, start: usize, end: usize) -> Vec<usize> {
        self.offsets
            .iter()
            .enumerate()
            .filter(|(_, (s, e))| *s >= start && *e <= end)
            .map(|(i, _)| i)
            .collect()
    }
}

/// FNV-1a over the piece bytes, offset basis perturbed by the seed.
fn hash_piece(piece: &str, seed: u64) -> u32 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET ^ seed;
    for b in piece.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    (h % VOCAB_SIZE as u64) as u32
}

/// Byte spans of the subword pieces of `text`, in source order.
///
/// Alphanumeric runs are split at underscores, at lower-to-upper case
/// transitions, and before the last capital of an all-caps run followed by
/// lowercase (`writeDataToFile` -> write/data/to/file, `JSONData` ->
/// json/data). Every other non-whitespace character is a one-char piece.
fn piece_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (byte, ch) = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_alphanumeric() || ch == '_' {
            let run_start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            split_identifier_run(&chars[run_start..j], &mut spans);
            i = j;
        } else {
            spans.push((byte, byte + ch.len_utf8()));
            i += 1;
        }
    }
    spans
}

/// Splits one alphanumeric-and-underscore run into piece spans.
fn split_identifier_run(run: &[(usize, char)], spans: &mut Vec<(usize, usize)>) {
    let end_of = |k: usize| run[k].0 + run[k].1.len_utf8();
    let mut piece_start: Option<usize> = None;
    for k in 0..run.len() {
        let ch = run[k].1;
        if ch == '_' {
            if let Some(s) = piece_start.take() {
                spans.push((s, run[k].0));
            }
            continue;
        }
        let boundary = match piece_start {
            None => false,
            Some(_) => {
                let prev = run[k - 1].1;
                let next_lower = run.get(k + 1).map(|(_, c)| c.is_lowercase()).unwrap_or(false);
                (prev.is_lowercase() || prev.is_numeric()) && ch.is_uppercase()
                    || prev.is_uppercase() && ch.is_uppercase() && next_lower
            }
        };
        if boundary {
            if let Some(s) = piece_start.take() {
                spans.push((s, run[k].0));
            }
        }
        if piece_start.is_none() {
            piece_start = Some(run[k].0);
        }
    }
    if let Some(s) = piece_start {
        spans.push((s, end_of(run.len() - 1)));
    }
}

/// Tokenizes `text`, keeping at most `limit` tokens (prefix truncation).
pub fn tokenize(text: &str, limit: usize, seed: u64) -> TokenSeq {
    let mut ids = Vec::new();
    let mut offsets = Vec::new();
    for (start, end) in piece_spans(text) {
        if ids.len() == limit {
            break;
        }
        let piece = text[start..end].to_lowercase();
        ids.push(hash_piece(&piece, seed));
        offsets.push((start, end));
    }
    TokenSeq { ids, offsets }
}

/// Number of subword pieces in `text`, without truncation.
pub fn count_tokens(text: &str) -> usize {
    piece_spans(text).len()
}

/// Lowercased subword pieces as strings, for bag-of-words models.
pub fn split_terms(text: &str) -> Vec<String> {
    piece_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_on_punctuation() {
        let seq = tokenize("date.isoformat", 320, 0);
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.offsets, vec![(0, 4), (4, 5), (5, 14)]);
        assert_eq!(split_terms("date.isoformat"), vec!["date", ".", "isoformat"]);
    }

    #[test]
    fn splits_camel_case() {
        assert_eq!(
            split_terms("writeDataToFile"),
            vec!["write", "data", "to", "file"]
        );
    }

    #[test]
    fn splits_acronym_followed_by_word() {
        assert_eq!(split_terms("JSONData"), vec!["json", "data"]);
        assert_eq!(split_terms("parseJSON"), vec!["parse", "json"]);
    }

    #[test]
    fn splits_underscores_and_drops_them() {
        assert_eq!(split_terms("date_iso_format"), vec!["date", "iso", "format"]);
        assert_eq!(count_tokens("_"), 0);
    }

    #[test]
    fn case_insensitive_ids() {
        assert_eq!(tokenize("ABC", 10, 7).ids, tokenize("abc", 10, 7).ids);
    }

    #[test]
    fn truncates_to_limit_preserving_prefix() {
        let text = (0..500).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let full = tokenize(&text, usize::MAX, 0);
        assert_eq!(full.len(), 500);
        let cut = tokenize(&text, 320, 0);
        assert_eq!(cut.len(), 320);
        assert_eq!(cut.ids[..], full.ids[..320]);
        assert_eq!(cut.offsets[..], full.offsets[..320]);
    }

    #[test]
    fn empty_text_is_empty_sequence() {
        let seq = tokenize("", 320, 0);
        assert!(seq.is_empty());
        assert_eq!(count_tokens("   \n\t "), 0);
    }

    #[test]
    fn seed_changes_ids_but_not_offsets() {
        let a = tokenize("open the file and read it carefully now", 320, 1);
        let b = tokenize("open the file and read it carefully now", 320, 2);
        assert_eq!(a.offsets, b.offsets);
        assert_ne!(a.ids, b.ids);
    }

    #[test]
    fn tokens_in_span_requires_full_containment() {
        let seq = tokenize("ab cd ef", 320, 0);
        assert_eq!(seq.tokens_in_span(0, 5), vec![0, 1]);
        assert_eq!(seq.tokens_in_span(1, 8), vec![1, 2]);
        assert_eq!(seq.tokens_in_span(4, 4), Vec::<usize>::new());
    }

    #[test]
    fn multibyte_chars_get_correct_byte_spans() {
        let seq = tokenize("π = tau", 320, 0);
        assert_eq!(seq.offsets[0], (0, 2));
        assert_eq!(seq.offsets[1], (3, 4));
        assert_eq!(seq.offsets[2], (5, 8));
    }

    #[test]
    fn digits_stay_attached_to_letters() {
        assert_eq!(split_terms("base64decode2x"), vec!["base64decode2x"]);
        assert_eq!(split_terms("utf8ToBytes"), vec!["utf8", "to", "bytes"]);
    }

    proptest! {
        #[test]
        fn offsets_ascending_disjoint_and_in_bounds(text in ".{0,200}") {
            let seq = tokenize(&text, usize::MAX, 0);
            prop_assert_eq!(seq.ids.len(), seq.offsets.len());
            let mut prev_end = 0usize;
            for (s, e) in &seq.offsets {
                prop_assert!(s < e);
                prop_assert!(*s >= prev_end);
                prop_assert!(*e <= text.len());
                prop_assert!(seq.ids.iter().all(|id| (*id as usize) < VOCAB_SIZE));
                prev_end = *e;
            }
        }

        #[test]
        fn truncation_is_idempotent(text in ".{0,200}", limit in 0usize..32) {
            let full = tokenize(&text, usize::MAX, 0);
            let cut = tokenize(&text, limit, 0);
            let n = limit.min(full.len());
            prop_assert_eq!(&cut.ids[..], &full.ids[..n]);
            prop_assert_eq!(&cut.offsets[..], &full.offsets[..n]);
        }
    }
}
