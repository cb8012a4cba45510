//! Reed-Solomon codeword generation and concatenation with the identity
//! matrix, yielding a lazily evaluated binary disjunct matrix.
//!
//! Columns of the disjunct matrix are codewords of an `[n, r]` RS code over
//! GF(q) with each q-ary symbol expanded into the matching unit column of the
//! q x q identity. The result has `h = q*n` rows, `N = q^r` columns, column
//! weight `n`, row weight `q^(r-1)`, and is `floor((n-1)/(r-1))`-disjunct.
//! No entry is ever materialized unless a caller asks for it.

use crate::error::{Error, Result};
use crate::gf2m::FieldSpec;
use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, Ordering};

/// An `[n, r]` Reed-Solomon code over GF(q).
///
/// Codeword `j` (1-based, `j - 1` written in base q, least significant digit
/// first) is the evaluation of the message polynomial with those digits as
/// coefficients at `n` distinct field elements. Evaluation points are the
/// first `n` field elements in integer order `0, 1, ..., n-1`.
#[derive(Debug, Clone)]
pub struct RsCode {
    field: FieldSpec,
    n: u32,
    r: u32,
    eval_points: Vec<u32>,
    n_codewords: u64,
}

impl RsCode {
    pub fn new(q: u32, n: u32, r: u32) -> Result<RsCode> {
        let field = FieldSpec::with_order(q)?;
        if !(1 <= r && r <= n && n < q) {
            return Err(Error::InvalidParameter(format!(
                "RS parameters must satisfy 1 <= r <= n < q, got q={q} n={n} r={r}"
            )));
        }
        if u64::from(r) * u64::from(field.m()) > 63 {
            return Err(Error::InvalidParameter(format!(
                "codebook size q^r = {q}^{r} exceeds 2^63"
            )));
        }
        Ok(RsCode {
            eval_points: (0..n).collect(),
            n_codewords: 1u64 << (r * field.m()),
            field,
            n,
            r,
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// Block length.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Dimension.
    pub fn r(&self) -> u32 {
        self.r
    }

    /// Number of codewords, `q^r`.
    pub fn n_codewords(&self) -> u64 {
        self.n_codewords
    }

    pub fn eval_points(&self) -> &[u32] {
        &self.eval_points
    }

    /// Symbol at position `pos` (1-based) of codeword `col` (1-based).
    ///
    /// Evaluates the message polynomial by Horner's rule; nothing is stored.
    /// Panics if an index is out of range.
    pub fn codeword_symbol(&self, col: u64, pos: u32) -> u32 {
        assert!(
            col >= 1 && col <= self.n_codewords,
            "codeword index {col} out of range 1..={}",
            self.n_codewords
        );
        assert!(
            pos >= 1 && pos <= self.n,
            "position {pos} out of range 1..={}",
            self.n
        );
        let x = self.eval_points[(pos - 1) as usize];
        let msg = col - 1;
        let m = self.field.m();
        let mask = u64::from(self.field.q() - 1);
        let mut acc = 0u32;
        for i in (0..self.r).rev() {
            let digit = ((msg >> (i * m)) & mask) as u32;
            acc = self.field.mul_raw(acc, x) ^ digit;
        }
        acc
    }

    /// Number of codewords carrying symbol `alpha` at position `pos`;
    /// exact enumeration over all `q^r` codewords.
    pub fn count_fixed_position(&self, pos: u32, alpha: u32) -> u64 {
        (1..=self.n_codewords)
            .filter(|&col| self.codeword_symbol(col, pos) == alpha)
            .count() as u64
    }

    /// Visits every codeword index carrying symbol `alpha` at position `pos`,
    /// in increasing order, without scanning the whole codebook.
    ///
    /// The constraint fixes one coefficient of the message polynomial given
    /// the other `r - 1`, so exactly `q^(r-1)` codewords are visited.
    pub fn for_each_column_with_symbol<F: FnMut(u64)>(&self, pos: u32, alpha: u32, mut f: F) {
        assert!(pos >= 1 && pos <= self.n && alpha < self.q());
        let x = self.eval_points[(pos - 1) as usize];
        let m = self.field.m();
        let free = 1u64 << ((self.r - 1) * m);
        for rest in 0..free {
            // rest holds digits 1..r-1; solve for digit 0.
            let d0 = if x == 0 {
                alpha
            } else {
                let mut acc = 0u32;
                for i in (1..self.r).rev() {
                    let digit = ((rest >> ((i - 1) * m)) & u64::from(self.q() - 1)) as u32;
                    acc = self.field.mul_raw(acc, x) ^ digit;
                }
                // alpha = acc * x + d0
                alpha ^ self.field.mul_raw(acc, x)
            };
            f((rest << m | u64::from(d0)) + 1);
        }
    }
}

/// Lazy `h x N` binary matrix from RS-code concatenation with the identity.
#[derive(Debug, Clone)]
pub struct DisjunctMatrix {
    code: RsCode,
    h: u64,
    n_cols: u64,
    d_disjunct: u32,
}

impl DisjunctMatrix {
    pub fn new(code: RsCode) -> Result<DisjunctMatrix> {
        if code.r() < 2 {
            return Err(Error::InvalidParameter(
                "concatenated disjunct matrix needs code dimension r >= 2".into(),
            ));
        }
        Ok(DisjunctMatrix {
            h: u64::from(code.q()) * u64::from(code.n()),
            n_cols: code.n_codewords(),
            d_disjunct: (code.n() - 1) / (code.r() - 1),
            code,
        })
    }

    pub fn code(&self) -> &RsCode {
        &self.code
    }

    /// Row count, `q * n`.
    pub fn rows(&self) -> u64 {
        self.h
    }

    /// Column count, `q^r`.
    pub fn cols(&self) -> u64 {
        self.n_cols
    }

    /// Disjunctness order `floor((n-1)/(r-1))` guaranteed by the code distance.
    pub fn d_disjunct(&self) -> u32 {
        self.d_disjunct
    }

    /// Splits row `i` (1-based) into code position `block` (1..=n) and
    /// in-block slot (1..=q).
    pub fn row_block_slot(&self, i: u64) -> (u32, u32) {
        assert!(i >= 1 && i <= self.h, "row {i} out of range 1..={}", self.h);
        let q = u64::from(self.code.q());
        (((i - 1) / q) as u32 + 1, ((i - 1) % q) as u32 + 1)
    }

    /// Entry at row `i`, column `j`, both 1-based: symbol `beta` at a code
    /// position concatenates to the unit column with the 1 in slot `beta + 1`.
    pub fn entry(&self, i: u64, j: u64) -> bool {
        let (block, slot) = self.row_block_slot(i);
        self.code.codeword_symbol(j, block) == slot - 1
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k.min(n - k) {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exhaustive d-disjunctness oracle over a lazily defined binary matrix.
///
/// Checks that for every choice of `d + 1` columns and every designated
/// column among them, some row has a 1 in the designated column and 0 in the
/// `d` others. The work is `d * C(cols, d+1)` subset checks plus one full
/// materialization of the columns; if either exceeds `budget` the call
/// refuses with an error rather than silently passing.
pub fn verify_disjunct<F>(entry: F, rows: u64, cols: u64, d: u32, budget: u128) -> Result<bool>
where
    F: Fn(u64, u64) -> bool + Sync,
{
    if d == 0 {
        return Err(Error::InvalidParameter("disjunctness order d must be >= 1".into()));
    }
    if cols <= u64::from(d) {
        // No d+1 column subsets exist.
        return Ok(true);
    }
    let work = (u128::from(d) * binomial(cols, u64::from(d) + 1))
        .max(u128::from(rows) * u128::from(cols));
    if work > budget {
        return Err(Error::BudgetExceeded { work, budget });
    }

    // Columns packed into row-bit words, column-major with stride `words`.
    let words = rows.div_ceil(64) as usize;
    let packed: Vec<u64> = (0..cols as usize * words)
        .into_par_iter()
        .map(|slot| {
            let j = (slot / words) as u64 + 1;
            let word = (slot % words) as u64;
            let mut bits = 0u64;
            for bit in 0..64.min(rows - word * 64) {
                if entry(word * 64 + bit + 1, j) {
                    bits |= 1 << bit;
                }
            }
            bits
        })
        .collect();
    let col = |j: usize| &packed[j * words..(j + 1) * words];

    let size = (d + 1) as usize;
    let violated = AtomicBool::new(false);

    // Walk all size-subsets keeping prefix unions incrementally; at a leaf,
    // build suffix unions once so every leave-one-out union is two ORs.
    struct Walk<'a> {
        packed: &'a [u64],
        cols: usize,
        words: usize,
        size: usize,
        subset: Vec<usize>,
        prefix: Vec<u64>,
        suffix: Vec<u64>,
        violated: &'a AtomicBool,
    }

    impl Walk<'_> {
        fn column(&self, j: usize) -> &[u64] {
            &self.packed[j * self.words..(j + 1) * self.words]
        }

        fn leaf_is_disjunct(&mut self) -> bool {
            let (size, words) = (self.size, self.words);
            for w in 0..words {
                self.suffix[size * words + w] = 0;
            }
            for a in (0..size).rev() {
                for w in 0..words {
                    self.suffix[a * words + w] =
                        self.suffix[(a + 1) * words + w] | self.column(self.subset[a])[w];
                }
            }
            (0..size).all(|a| {
                let designated = self.column(self.subset[a]);
                (0..words).any(|w| {
                    designated[w] & !(self.prefix[a * words + w] | self.suffix[(a + 1) * words + w])
                        != 0
                })
            })
        }

        fn descend(&mut self, next: usize) {
            if self.violated.load(Ordering::Relaxed) {
                return;
            }
            let depth = self.subset.len();
            if depth == self.size {
                if !self.leaf_is_disjunct() {
                    self.violated.store(true, Ordering::Relaxed);
                }
                return;
            }
            let remaining = self.size - depth;
            for j in next..=self.cols - remaining {
                for w in 0..self.words {
                    self.prefix[(depth + 1) * self.words + w] =
                        self.prefix[depth * self.words + w] | self.column(j)[w];
                }
                self.subset.push(j);
                self.descend(j + 1);
                self.subset.pop();
            }
        }
    }

    (0..cols as usize - (size - 1)).into_par_iter().for_each(|first| {
        if violated.load(Ordering::Relaxed) {
            return;
        }
        let mut walk = Walk {
            packed: &packed,
            cols: cols as usize,
            words,
            size,
            subset: Vec::with_capacity(size),
            prefix: vec![0u64; (size + 1) * words],
            suffix: vec![0u64; (size + 1) * words],
            violated: &violated,
        };
        for w in 0..words {
            walk.prefix[words + w] = col(first)[w];
        }
        walk.subset.push(first);
        walk.descend(first + 1);
    });

    Ok(!violated.load(Ordering::Relaxed))
}
