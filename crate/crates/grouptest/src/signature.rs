//! Signature matrix for singleton detection, in the SAFFRON style: column
//! `j` stacks the binary representation of `j - 1` over its bitwise
//! complement, so every column has weight `log2(N)` and a lone column can be
//! read back from the outcome vector directly.

use crate::error::{Error, Result};

/// The `k x N` signature matrix with `k = 2 * log2(N)`.
///
/// Rows and columns are 1-based. Row 1 carries the most significant bit of
/// `j - 1`; rows `k/2 + 1 ..= k` are the bitwise complement of rows
/// `1 ..= k/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureMatrix {
    n_items: u64,
    half: u32,
}

impl SignatureMatrix {
    pub fn new(n_items: u64) -> Result<SignatureMatrix> {
        if !n_items.is_power_of_two() || n_items < 2 {
            return Err(Error::InvalidParameter(format!(
                "item count {n_items} must be a power of two >= 2"
            )));
        }
        Ok(SignatureMatrix {
            n_items,
            half: n_items.trailing_zeros(),
        })
    }

    pub fn n_items(&self) -> u64 {
        self.n_items
    }

    /// Number of rows, `2 * log2(N)`.
    pub fn k(&self) -> u32 {
        2 * self.half
    }

    /// `log2(N)`, the weight of every column.
    pub fn half(&self) -> u32 {
        self.half
    }

    /// Entry at `row` (1..=k), `col` (1..=N).
    pub fn m_entry(&self, row: u32, col: u64) -> bool {
        assert!(
            row >= 1 && row <= self.k(),
            "row {row} out of range 1..={}",
            self.k()
        );
        assert!(
            col >= 1 && col <= self.n_items,
            "column {col} out of range 1..={}",
            self.n_items
        );
        let bits = col - 1;
        if row <= self.half {
            (bits >> (self.half - row)) & 1 == 1
        } else {
            (bits >> (2 * self.half - row)) & 1 == 0
        }
    }

    /// Entry of the masked extension `B = M x diag(g)`.
    pub fn b_entry<G: Fn(u64) -> bool>(&self, mask: G, row: u32, col: u64) -> bool {
        self.m_entry(row, col) && mask(col)
    }

    /// Decodes a length-k outcome vector to an item index.
    ///
    /// Returns the item whenever the vector's weight equals `log2(N)` (the
    /// weight of a single column); the index is the value of the first `k/2`
    /// bits read most-significant-first, plus one. With `strict` set, the
    /// second half must additionally be the complement of the first.
    /// Panics if `outcome.len() != k`.
    pub fn decode(&self, outcome: &[bool], strict: bool) -> Option<u64> {
        let k = self.k() as usize;
        assert_eq!(outcome.len(), k, "outcome length must be k = {k}");
        let weight = outcome.iter().filter(|&&b| b).count() as u32;
        if weight != self.half {
            return None;
        }
        if strict {
            let complementary = (0..self.half as usize)
                .all(|i| outcome[i] != outcome[i + self.half as usize]);
            if !complementary {
                return None;
            }
        }
        let mut value = 0u64;
        for &bit in &outcome[..self.half as usize] {
            value = value << 1 | u64::from(bit);
        }
        Some(value + 1)
    }

    /// The full signature column of item `col`, row-major.
    pub fn column(&self, col: u64) -> Vec<bool> {
        (1..=self.k()).map(|row| self.m_entry(row, col)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displayed_matrix_for_eight_items() {
        let m = SignatureMatrix::new(8).unwrap();
        assert_eq!(m.k(), 6);
        let expected = [
            [0, 0, 0, 0, 1, 1, 1, 1],
            [0, 0, 1, 1, 0, 0, 1, 1],
            [0, 1, 0, 1, 0, 1, 0, 1],
            [1, 1, 1, 1, 0, 0, 0, 0],
            [1, 1, 0, 0, 1, 1, 0, 0],
            [1, 0, 1, 0, 1, 0, 1, 0],
        ];
        for row in 1..=6u32 {
            for col in 1..=8u64 {
                assert_eq!(
                    m.m_entry(row, col),
                    expected[(row - 1) as usize][(col - 1) as usize] == 1,
                    "row={row} col={col}"
                );
            }
        }
    }

    #[test]
    fn extreme_columns() {
        let m = SignatureMatrix::new(64).unwrap();
        let first = m.column(1);
        let last = m.column(64);
        for i in 0..6 {
            assert!(!first[i] && first[i + 6]);
            assert!(last[i] && !last[i + 6]);
        }
    }

    #[test]
    fn complement_structure_and_weights() {
        for n_items in [2u64, 8, 64, 1024] {
            let m = SignatureMatrix::new(n_items).unwrap();
            let half = m.half();
            for col in 1..=n_items {
                let sig = m.column(col);
                assert_eq!(
                    sig.iter().filter(|&&b| b).count() as u32,
                    half,
                    "column weight"
                );
                for i in 0..half as usize {
                    assert_ne!(sig[i], sig[i + half as usize]);
                }
            }
            for row in 1..=m.k() {
                let weight = (1..=n_items).filter(|&c| m.m_entry(row, c)).count() as u64;
                assert_eq!(weight, n_items / 2, "row weight");
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(SignatureMatrix::new(12).is_err());
        assert!(SignatureMatrix::new(1).is_err());
        assert!(SignatureMatrix::new(0).is_err());
    }

    #[test]
    fn decode_known_vectors() {
        let m = SignatureMatrix::new(8).unwrap();
        let to_bits = |v: [u8; 6]| v.map(|b| b == 1).to_vec();
        assert_eq!(m.decode(&to_bits([0, 0, 0, 1, 1, 1]), false), Some(1));
        assert_eq!(m.decode(&to_bits([1, 0, 1, 1, 1, 0]), false), None);
        assert_eq!(m.decode(&to_bits([1, 1, 1, 0, 0, 0]), false), Some(8));
    }

    #[test]
    fn decode_round_trip_exhaustive() {
        for shift in 1..=12u32 {
            let n_items = 1u64 << shift;
            let m = SignatureMatrix::new(n_items).unwrap();
            for col in 1..=n_items {
                assert_eq!(m.decode(&m.column(col), false), Some(col));
                assert_eq!(m.decode(&m.column(col), true), Some(col));
            }
        }
    }

    #[test]
    fn unions_never_decode_exhaustive_pairs() {
        let n_items = 1u64 << 10;
        let m = SignatureMatrix::new(n_items).unwrap();
        let half = m.half();
        let columns: Vec<Vec<bool>> = (1..=n_items).map(|c| m.column(c)).collect();
        for a in 0..columns.len() {
            for b in a + 1..columns.len() {
                let union: Vec<bool> = columns[a]
                    .iter()
                    .zip(&columns[b])
                    .map(|(x, y)| x | y)
                    .collect();
                let weight = union.iter().filter(|&&v| v).count() as u32;
                assert!(weight > half);
                assert_eq!(m.decode(&union, false), None);
            }
        }
    }

    #[test]
    fn unions_never_decode_randomized_large() {
        use rand::{Rng, SeedableRng};
        let m = SignatureMatrix::new(1 << 20).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2_000 {
            let a = rng.gen_range(1..=m.n_items());
            let mut b = rng.gen_range(1..=m.n_items());
            while b == a {
                b = rng.gen_range(1..=m.n_items());
            }
            let union: Vec<bool> = m
                .column(a)
                .iter()
                .zip(m.column(b))
                .map(|(x, y)| x | y)
                .collect();
            assert_eq!(m.decode(&union, false), None);
        }
    }

    #[test]
    fn masked_entries() {
        let m = SignatureMatrix::new(16).unwrap();
        for row in 1..=m.k() {
            for col in 1..=16 {
                assert_eq!(m.b_entry(|_| true, row, col), m.m_entry(row, col));
                assert!(!m.b_entry(|_| false, row, col));
            }
        }
        // Masking never increases a row weight past N/2.
        let mask = |col: u64| col.is_multiple_of(3);
        for row in 1..=m.k() {
            let weight = (1..=16).filter(|&c| m.b_entry(mask, row, c)).count() as u64;
            assert!(weight <= 8);
        }
    }

    #[test]
    fn strict_mode_rejects_non_complementary() {
        let m = SignatureMatrix::new(16).unwrap();
        // Weight 4 but second half equals the first.
        let y = [true, true, false, false, true, true, false, false];
        assert_eq!(m.decode(&y, false), Some(13));
        assert_eq!(m.decode(&y, true), None);
    }

    #[test]
    #[should_panic(expected = "outcome length")]
    fn decode_wrong_length_panics() {
        let m = SignatureMatrix::new(8).unwrap();
        let _ = m.decode(&[true, false], false);
    }
}
