//! Lazy entry access to the full measurement matrix.
//!
//! The `t x N` matrix stacks, for each disjunct-matrix row `w`, the signature
//! matrix masked by that row and with every masked row repeated `c` times.
//! For the single-defective plan there is no disjunct half and the mask is
//! all ones. Every entry is computed from `(i, j)` alone; nothing is stored.

use crate::codes::{DisjunctMatrix, RsCode};
use crate::error::{Error, Result};
use crate::plan::TestPlan;
use crate::signature::SignatureMatrix;

/// Row layout order is block, then signature row, then repetition, so the
/// decoder can consume outcomes in one pass.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    plan: TestPlan,
    signature: SignatureMatrix,
    disjunct: Option<DisjunctMatrix>,
}

impl MeasurementMatrix {
    pub fn new(plan: TestPlan) -> Result<MeasurementMatrix> {
        let signature = SignatureMatrix::new(plan.n_items)?;
        let disjunct = match plan.rs {
            Some(rs) => {
                let g = DisjunctMatrix::new(RsCode::new(rs.q, rs.n, rs.r)?)?;
                if g.cols() != plan.n_items {
                    return Err(Error::InvalidParameter(format!(
                        "q^r = {} does not match item count {}",
                        g.cols(),
                        plan.n_items
                    )));
                }
                if plan.d - 1 > g.d_disjunct() {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is only {}-disjunct: cannot isolate {} defectives",
                        g.d_disjunct(),
                        plan.d
                    )));
                }
                Some(g)
            }
            None => None,
        };
        Ok(MeasurementMatrix {
            plan,
            signature,
            disjunct,
        })
    }

    pub fn plan(&self) -> &TestPlan {
        &self.plan
    }

    pub fn signature(&self) -> &SignatureMatrix {
        &self.signature
    }

    pub fn disjunct(&self) -> Option<&DisjunctMatrix> {
        self.disjunct.as_ref()
    }

    /// Total rows, `t = h * k * c`.
    pub fn rows(&self) -> u64 {
        self.plan.t
    }

    pub fn n_items(&self) -> u64 {
        self.plan.n_items
    }

    /// Splits global row `i` (1-based) into `(block, signature row,
    /// repetition)`, all 1-based:
    /// `i - 1 = (block-1)*k*c + (row-1)*c + (rep-1)`.
    pub fn row_decompose(&self, i: u64) -> (u64, u32, u64) {
        assert!(
            i >= 1 && i <= self.plan.t,
            "row {i} out of range 1..={}",
            self.plan.t
        );
        let k = u64::from(self.plan.k);
        let c = self.plan.c;
        let idx = i - 1;
        let block = idx / (k * c);
        let rem = idx % (k * c);
        (block + 1, (rem / c) as u32 + 1, rem % c + 1)
    }

    /// Column mask of block `w`: the disjunct-matrix row, or all ones when
    /// the plan has no disjunct half.
    pub fn mask_entry(&self, block: u64, j: u64) -> bool {
        match &self.disjunct {
            Some(g) => g.entry(block, j),
            None => {
                assert!(block == 1, "single-defective plan has one block");
                true
            }
        }
    }

    /// Entry at global row `i`, column `j`, both 1-based.
    pub fn t_entry(&self, i: u64, j: u64) -> bool {
        let (block, sig_row, _) = self.row_decompose(i);
        self.signature.m_entry(sig_row, j) && self.mask_entry(block, j)
    }

    /// Exact weight of each distinct test row, indexed `[block-1][sig_row-1]`
    /// (repetitions share a weight). Costs `h * q^(r-1)` codeword visits for
    /// multi-defective plans; refuses when that exceeds `budget`.
    pub fn row_weights(&self, budget: u64) -> Result<Vec<Vec<u64>>> {
        let k = self.plan.k as usize;
        let half = k / 2;
        match &self.disjunct {
            None => Ok(vec![vec![self.plan.n_items / 2; k]]),
            Some(g) => {
                let per_row = g.cols() / u64::from(g.code().q());
                let work = g.rows().saturating_mul(per_row);
                if work > budget {
                    return Err(Error::BudgetExceeded {
                        work: work as u128,
                        budget: budget as u128,
                    });
                }
                let mut weights = Vec::with_capacity(g.rows() as usize);
                for block in 1..=g.rows() {
                    let (pos, slot) = g.row_block_slot(block);
                    let mut first_half = vec![0u64; half];
                    let mut total = 0u64;
                    g.code().for_each_column_with_symbol(pos, slot - 1, |col| {
                        total += 1;
                        for (bit, count) in first_half.iter_mut().enumerate() {
                            if self.signature.m_entry(bit as u32 + 1, col) {
                                *count += 1;
                            }
                        }
                    });
                    let mut row = first_half.clone();
                    row.extend(first_half.iter().map(|ones| total - ones));
                    weights.push(row);
                }
                Ok(weights)
            }
        }
    }
}
