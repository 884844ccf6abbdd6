//! Same-function negative sampling under the independence constraint.

use codegrain_core::Granularity;
use codegrain_extract::{HierarchyIndex, Snippet};
use rand::seq::IndexedRandom;
use rand::RngCore;

/// Samples up to `k` same-granularity snippets from the anchor's function
/// that are neither ancestors nor descendants of the anchor.
///
/// Function-level anchors get no negatives: every other snippet in the
/// function is a descendant. The pool is sorted by id before sampling, so
/// the result depends only on the rng state.
pub fn select_in_function_negatives(
    anchor: &Snippet,
    snippets: &[Snippet],
    hierarchy: &HierarchyIndex,
    k: usize,
    rng: &mut dyn RngCore,
) -> Vec<String> {
    if anchor.granularity == Granularity::Function || k == 0 {
        return Vec::new();
    }
    let mut pool: Vec<&str> = snippets
        .iter()
        .filter(|s| {
            s.granularity == anchor.granularity
                && s.snippet_id != anchor.snippet_id
                && !hierarchy.is_ancestor(&s.snippet_id, &anchor.snippet_id)
                && !hierarchy.is_ancestor(&anchor.snippet_id, &s.snippet_id)
        })
        .map(|s| s.snippet_id.as_str())
        .collect();
    pool.sort_unstable();
    let picked: Vec<String> = pool
        .choose_multiple(rng, k)
        .map(|s| s.to_string())
        .collect();
    picked
}
