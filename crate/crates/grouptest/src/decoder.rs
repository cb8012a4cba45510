//! Streaming majority-vote decoder.
//!
//! Each block of `k * c` outcomes collapses, group by group, to one
//! recovered signature-row bit; the signature decode then yields at most one
//! item per block. The full pass touches every outcome bit exactly once and
//! keeps only the current block's `k` recovered bits, so decoding runs in
//! time linear in the number of tests.

use crate::channel::OutcomeVector;
use crate::error::{Error, Result};
use crate::signature::SignatureMatrix;

/// Majority bit of one repetition group; exact ties resolve to 0, matching a
/// zero-initialized recovery where neither count is dominant.
pub fn majority(group: &[bool]) -> bool {
    let ones = group.iter().filter(|&&b| b).count();
    2 * ones > group.len()
}

/// Per-block findings and their deduplicated union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Sorted set of identified items.
    pub defectives: Vec<u64>,
    /// What each block decoded to, `None` when no singleton was present.
    pub per_block: Vec<Option<u64>>,
}

/// Decodes one block of `k * c` outcome bits (groups of `c` repetitions in
/// row order) to at most one item index.
///
/// Panics if the slice length is not `2 * log2(n_items) * c`.
pub fn dec_1_defect(outcome: &[bool], n_items: u64, c: u64, strict: bool) -> Option<u64> {
    let sig = SignatureMatrix::new(n_items).expect("item count must be a power of two");
    let k = sig.k() as usize;
    assert_eq!(
        outcome.len() as u64,
        k as u64 * c,
        "outcome length must be k * c = {} * {c}",
        k
    );
    let c = c as usize;
    let recovered: Vec<bool> = (0..k)
        .map(|row| majority(&outcome[row * c..(row + 1) * c]))
        .collect();
    sig.decode(&recovered, strict)
}

/// Decodes every block of the outcome vector and unions the findings.
pub fn dec_d_defect(outcome: &OutcomeVector, n_items: u64, strict: bool) -> Result<DecodeResult> {
    let sig = SignatureMatrix::new(n_items)?;
    let (h, k, c) = outcome.layout();
    if k != sig.k() {
        return Err(Error::InvalidParameter(format!(
            "outcome layout has k = {k}, but {n_items} items need k = {}",
            sig.k()
        )));
    }
    let mut per_block = Vec::with_capacity(h as usize);
    let mut recovered = vec![false; k as usize];
    let mut cursor = 1u64;
    for _ in 0..h {
        for slot in recovered.iter_mut() {
            let ones = outcome.count_ones_in(cursor, c);
            *slot = 2 * ones > c;
            cursor += c;
        }
        let found = sig.decode(&recovered, strict);
        debug_assert!(found.is_none_or(|j| j >= 1 && j <= n_items));
        per_block.push(found);
    }
    let mut defectives: Vec<u64> = per_block.iter().flatten().copied().collect();
    defectives.sort_unstable();
    defectives.dedup();
    Ok(DecodeResult {
        defectives,
        per_block,
    })
}
