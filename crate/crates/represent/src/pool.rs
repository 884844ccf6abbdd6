//! Mean pooling of token embedding rows over byte spans.

use crate::RepresentError;
use codegrain_core::linalg;
use codegrain_core::{EmbeddingMatrix, TokenSeq};
use codegrain_extract::Snippet;

/// Mean of the rows whose tokens lie fully inside `[start, end)`.
///
/// `None` when the span holds no tokens, which happens when truncation
/// cut the function off before the span.
pub fn pool_span(
    matrix: &EmbeddingMatrix,
    seq: &TokenSeq,
    start: usize,
    end: usize,
) -> Option<Vec<f64>> {
    let idx = seq.tokens_in_span(start, end);
    if idx.is_empty() {
        return None;
    }
    let rows: Vec<&[f64]> = idx.iter().map(|&i| matrix.token_row(i)).collect();
    Some(linalg::mean_rows(&rows))
}

/// Pools a statement's span; an empty span is an error carrying the id.
pub fn pool_statement(
    matrix: &EmbeddingMatrix,
    seq: &TokenSeq,
    statement: &Snippet,
) -> Result<Vec<f64>, RepresentError> {
    pool_span(matrix, seq, statement.byte_start, statement.byte_end).ok_or_else(|| {
        RepresentError::EmptySpan {
            snippet_id: statement.snippet_id.clone(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use codegrain_core::tokenize::tokenize;
    use codegrain_core::{encode_tokens, EncoderParams, Granularity};

    fn row_of(params: &mut EncoderParams, id: u32, values: &[f64]) {
        let d = params.dim;
        params.embedding[id as usize * d..(id as usize + 1) * d].copy_from_slice(values);
    }

    #[test]
    fn pooling_averages_token_rows() {
        let mut params = EncoderParams::seeded(2, 0);
        let seq = tokenize("aa bb", 320, params.tokenizer_seed);
        assert_eq!(seq.len(), 2);
        assert_ne!(seq.ids[0], seq.ids[1]);
        row_of(&mut params, seq.ids[0], &[0.0, 2.0]);
        row_of(&mut params, seq.ids[1], &[2.0, 0.0]);
        let matrix = encode_tokens(&seq, &params);
        assert_eq!(pool_span(&matrix, &seq, 0, 5), Some(vec![1.0, 1.0]));
    }

    #[test]
    fn single_token_statement_is_its_row() {
        let params = EncoderParams::seeded(3, 1);
        let seq = tokenize("value", 320, params.tokenizer_seed);
        let matrix = encode_tokens(&seq, &params);
        let pooled = pool_span(&matrix, &seq, 0, 5).unwrap();
        assert_eq!(pooled.as_slice(), matrix.token_row(0));
    }

    #[test]
    fn empty_span_is_none_and_statement_error_names_the_snippet() {
        let params = EncoderParams::seeded(2, 0);
        let seq = tokenize("aa bb", 320, params.tokenizer_seed);
        let matrix = encode_tokens(&seq, &params);
        assert_eq!(pool_span(&matrix, &seq, 2, 3), None);

        let stmt = Snippet {
            snippet_id: "f#s9".into(),
            function_id: "f".into(),
            granularity: Granularity::Statement,
            byte_start: 2,
            byte_end: 3,
            start_line: 1,
            end_line: 1,
            parent_id: None,
        };
        let err = pool_statement(&matrix, &seq, &stmt).unwrap_err();
        assert!(matches!(err, RepresentError::EmptySpan { ref snippet_id } if snippet_id == "f#s9"));
    }
}
