//! Dilution-noise channel: noiseless Boolean test outcomes with per-test
//! flips, drawn from a counter-based random stream so results are identical
//! under any evaluation order or thread count.
//!
//! Each test row consumes exactly one 32-bit word of a ChaCha8 stream keyed
//! by `(seed, trial)`; the word index is the row index. A separate stream
//! label keys defective-set sampling so truth and noise never share draws.

use crate::error::{Error, Result};
use crate::measurement::MeasurementMatrix;
use crate::plan::NoiseParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::{Read, Write};

const MAGIC: [u8; 4] = *b"DGT1";
const LABEL_NOISE: u32 = 0x4e_4f_49_53;
const LABEL_TRUTH: u32 = 0x54_52_55_54;
const WEIGHT_BUDGET: u64 = 100_000_000;

/// ChaCha8 stream keyed by `(seed, trial, label)`.
pub fn keyed_stream(seed: u64, trial: u64, label: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..20].copy_from_slice(&label.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// The set of defective items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    n_items: u64,
    defectives: Vec<u64>,
}

impl GroundTruth {
    /// Builds a truth from item indices in `1..=n_items`; the list is sorted
    /// and must hold no duplicates.
    pub fn new(n_items: u64, mut defectives: Vec<u64>) -> Result<GroundTruth> {
        defectives.sort_unstable();
        for pair in defectives.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate defective item {}",
                    pair[0]
                )));
            }
        }
        if let Some(&first) = defectives.first() {
            if first < 1 {
                return Err(Error::InvalidParameter("item indices are 1-based".into()));
            }
        }
        if let Some(&last) = defectives.last() {
            if last > n_items {
                return Err(Error::IndexOutOfRange {
                    name: "defective item",
                    got: last,
                    max: n_items,
                });
            }
        }
        Ok(GroundTruth {
            n_items,
            defectives,
        })
    }

    /// Uniform defective set without replacement, keyed by `(seed, trial)`.
    pub fn sample_uniform(n_items: u64, count: u32, seed: u64, trial: u64) -> GroundTruth {
        assert!(u64::from(count) <= n_items);
        let mut rng = keyed_stream(seed, trial, LABEL_TRUTH);
        let mut picked: Vec<u64> =
            rand::seq::index::sample(&mut rng, n_items as usize, count as usize)
                .into_iter()
                .map(|i| i as u64 + 1)
                .collect();
        picked.sort_unstable();
        GroundTruth {
            n_items,
            defectives: picked,
        }
    }

    pub fn n_items(&self) -> u64 {
        self.n_items
    }

    pub fn defectives(&self) -> &[u64] {
        &self.defectives
    }
}

/// Packed outcome bits of `t = h * k * c` tests.
///
/// Bit `i` (0-based) lives in byte `i / 8`, least significant bit first. The
/// serialized form is a header — magic `DGT1` then `t`, `h`, `k`, `c` as
/// 64-bit little-endian unsigned integers — followed by the packed bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeVector {
    bits: Vec<u8>,
    h: u64,
    k: u32,
    c: u64,
}

impl OutcomeVector {
    pub fn zeroed(h: u64, k: u32, c: u64) -> OutcomeVector {
        let t = h * u64::from(k) * c;
        OutcomeVector {
            bits: vec![0u8; t.div_ceil(8) as usize],
            h,
            k,
            c,
        }
    }

    /// Total bit count `t`.
    pub fn len(&self) -> u64 {
        self.h * u64::from(self.k) * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(h, k, c)` block structure.
    pub fn layout(&self) -> (u64, u32, u64) {
        (self.h, self.k, self.c)
    }

    /// Bit at 1-based position `i`.
    pub fn get(&self, i: u64) -> bool {
        assert!(i >= 1 && i <= self.len(), "bit {i} out of range");
        self.bits[((i - 1) / 8) as usize] >> ((i - 1) % 8) & 1 == 1
    }

    pub fn set(&mut self, i: u64, value: bool) {
        assert!(i >= 1 && i <= self.len(), "bit {i} out of range");
        let byte = ((i - 1) / 8) as usize;
        let mask = 1u8 << ((i - 1) % 8);
        if value {
            self.bits[byte] |= mask;
        } else {
            self.bits[byte] &= !mask;
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    /// Number of set bits among the `len` bits starting at 1-based `start`.
    pub fn count_ones_in(&self, start: u64, len: u64) -> u64 {
        assert!(start >= 1 && start + len - 1 <= self.len());
        let mut begin = start - 1;
        let end = begin + len;
        let mut ones = 0u64;
        while begin < end && !begin.is_multiple_of(8) {
            ones += u64::from(self.bits[(begin / 8) as usize] >> (begin % 8) & 1);
            begin += 1;
        }
        while begin + 8 <= end {
            ones += u64::from(self.bits[(begin / 8) as usize].count_ones());
            begin += 8;
        }
        while begin < end {
            ones += u64::from(self.bits[(begin / 8) as usize] >> (begin % 8) & 1);
            begin += 1;
        }
        ones
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&MAGIC)?;
        for value in [self.len(), self.h, u64::from(self.k), self.c] {
            writer.write_all(&value.to_le_bytes())?;
        }
        writer.write_all(&self.bits)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut reader: R) -> Result<OutcomeVector> {
        let mut header = [0u8; 36];
        reader.read_exact(&mut header)?;
        if header[0..4] != MAGIC {
            return Err(Error::Format("bad magic, expected DGT1".into()));
        }
        let word = |i: usize| u64::from_le_bytes(header[4 + 8 * i..12 + 8 * i].try_into().unwrap());
        let (t, h, k, c) = (word(0), word(1), word(2), word(3));
        if k > u64::from(u32::MAX) || h * k * c != t {
            return Err(Error::Format(format!(
                "inconsistent layout: t={t} h={h} k={k} c={c}"
            )));
        }
        let mut bits = vec![0u8; t.div_ceil(8) as usize];
        reader.read_exact(&mut bits)?;
        let mut excess = [0u8; 1];
        if reader.read(&mut excess)? != 0 {
            return Err(Error::Format("trailing bytes after packed outcomes".into()));
        }
        Ok(OutcomeVector {
            bits,
            h,
            k: k as u32,
            c,
        })
    }
}

/// Noiseless outcome of test row `i`: OR of the row entries over the
/// defective items.
pub fn noiseless_outcome(mat: &MeasurementMatrix, i: u64, truth: &GroundTruth) -> bool {
    truth.defectives().iter().any(|&j| mat.t_entry(i, j))
}

/// One flip decision. A noiseless 1 flips to 0 when the draw falls below
/// `theta1`; a noiseless 0 flips to 1 when it falls below `theta0`.
pub fn noisy_outcome(z: bool, noise: &NoiseParams, draw: f64) -> bool {
    debug_assert!((0.0..1.0).contains(&draw));
    if z {
        draw >= noise.theta1
    } else {
        draw < noise.theta0
    }
}

/// How flip probabilities scale with the row weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseProfile {
    /// Constant `theta0`/`theta1` on every test, the worst-case premise of
    /// the repetition analysis.
    Uniform,
    /// Thinner pools are more reliable: each test scales both thetas by
    /// `2 * rowWeight / N` (1 on half-population rows).
    WeightScaled,
}

/// Simulates the noisy outcome vector under the uniform profile.
///
/// Deterministic in `(mat, truth, noise, seed, trial)` regardless of thread
/// count: row `i` always consumes word `i - 1` of the keyed noise stream.
pub fn simulate(
    mat: &MeasurementMatrix,
    truth: &GroundTruth,
    noise: &NoiseParams,
    seed: u64,
    trial: u64,
) -> OutcomeVector {
    simulate_with(mat, truth, noise, NoiseProfile::Uniform, seed, trial)
        .expect("uniform profile cannot exceed a budget")
}

pub fn simulate_with(
    mat: &MeasurementMatrix,
    truth: &GroundTruth,
    noise: &NoiseParams,
    profile: NoiseProfile,
    seed: u64,
    trial: u64,
) -> Result<OutcomeVector> {
    let plan = mat.plan();
    assert_eq!(truth.n_items(), plan.n_items, "truth sized for another plan");
    assert!(
        truth.defectives().len() as u64 <= u64::from(plan.d),
        "{} defectives exceed the plan's d = {}",
        truth.defectives().len(),
        plan.d
    );
    let k = plan.k;
    assert!(k <= 128, "signature taller than 128 rows");

    // Noiseless bits collapse to one union signature per block: symbols and
    // signature columns of the defectives are enough.
    let sig = mat.signature();
    let sig_columns: Vec<u128> = truth
        .defectives()
        .iter()
        .map(|&j| {
            (1..=k).fold(0u128, |acc, row| {
                acc | u128::from(sig.m_entry(row, j)) << (row - 1)
            })
        })
        .collect();
    let block_unions: Vec<u128> = match mat.disjunct() {
        None => vec![sig_columns.iter().fold(0, |acc, &col| acc | col)],
        Some(g) => {
            let symbols: Vec<Vec<u32>> = truth
                .defectives()
                .iter()
                .map(|&j| {
                    (1..=g.code().n())
                        .map(|pos| g.code().codeword_symbol(j, pos))
                        .collect()
                })
                .collect();
            (1..=g.rows())
                .map(|w| {
                    let (pos, slot) = g.row_block_slot(w);
                    symbols
                        .iter()
                        .zip(&sig_columns)
                        .filter(|(symbols, _)| symbols[(pos - 1) as usize] == slot - 1)
                        .fold(0, |acc, (_, &col)| acc | col)
                })
                .collect()
        }
    };

    // Per-row thresholds, constant or weight-scaled.
    let weights = match profile {
        NoiseProfile::Uniform => None,
        NoiseProfile::WeightScaled => Some(mat.row_weights(WEIGHT_BUDGET)?),
    };
    let weight_factor = 2.0 / plan.n_items as f64;

    let mut out = OutcomeVector::zeroed(plan.h, k, plan.c);
    let t = out.len();
    let base_rng = keyed_stream(seed, trial, LABEL_NOISE);
    let group = u64::from(k) * plan.c;

    const CHUNK_BYTES: usize = 1 << 15;
    out.bits
        .par_chunks_mut(CHUNK_BYTES)
        .enumerate()
        .for_each(|(chunk_index, chunk)| {
            let first_row = (chunk_index * CHUNK_BYTES * 8) as u64; // 0-based
            let rows = ((t - first_row) as usize).min(chunk.len() * 8);
            let mut rng = base_rng.clone();
            rng.set_word_pos(u128::from(first_row));
            let mut block = (first_row / group) as usize;
            let mut sig_row = (first_row % group / plan.c) as usize;
            let mut rep = first_row % plan.c;
            for offset in 0..rows {
                let z = block_unions[block] >> sig_row & 1 == 1;
                let draw = f64::from(rand::RngCore::next_u32(&mut rng)) / 4_294_967_296.0;
                let bit = match &weights {
                    None => noisy_outcome(z, noise, draw),
                    Some(weights) => {
                        let scale = weights[block][sig_row] as f64 * weight_factor;
                        let scaled = NoiseParams {
                            theta0: noise.theta0 * scale,
                            theta1: noise.theta1 * scale,
                        };
                        noisy_outcome(z, &scaled, draw)
                    }
                };
                if bit {
                    chunk[offset / 8] |= 1 << (offset % 8);
                }
                rep += 1;
                if rep == plan.c {
                    rep = 0;
                    sig_row += 1;
                    if sig_row == k as usize {
                        sig_row = 0;
                        block += 1;
                    }
                }
            }
        });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{ChernoffParams, NoiseParams, RsParams, TestPlan};
    use proptest::prelude::*;

    fn small_mat(c: u64) -> MeasurementMatrix {
        let plan = TestPlan::multi(
            3,
            0.001,
            NoiseParams::new(0.2, 0.1).unwrap(),
            ChernoffParams::default(),
            RsParams { q: 4, n: 3, r: 2 },
        )
        .unwrap()
        .with_repetitions(c);
        MeasurementMatrix::new(plan).unwrap()
    }

    fn single_mat(n_items: u64, c: u64) -> MeasurementMatrix {
        let plan = TestPlan::single(
            n_items,
            0.001,
            NoiseParams::new(0.2, 0.1).unwrap(),
            ChernoffParams::default(),
        )
        .unwrap()
        .with_repetitions(c);
        MeasurementMatrix::new(plan).unwrap()
    }

    #[test]
    fn truth_validation() {
        assert!(GroundTruth::new(16, vec![3, 1, 16]).is_ok());
        assert!(GroundTruth::new(16, vec![3, 3]).is_err());
        assert!(GroundTruth::new(16, vec![0]).is_err());
        assert!(GroundTruth::new(16, vec![17]).is_err());
        let t = GroundTruth::new(16, vec![9, 2]).unwrap();
        assert_eq!(t.defectives(), &[2, 9]);
    }

    #[test]
    fn truth_sampling_is_deterministic_and_in_range() {
        let a = GroundTruth::sample_uniform(1 << 20, 6, 42, 7);
        let b = GroundTruth::sample_uniform(1 << 20, 6, 42, 7);
        assert_eq!(a, b);
        assert_eq!(a.defectives().len(), 6);
        assert!(a.defectives().windows(2).all(|w| w[0] < w[1]));
        assert!(*a.defectives().last().unwrap() <= 1 << 20);
        let c = GroundTruth::sample_uniform(1 << 20, 6, 42, 8);
        assert_ne!(a, c, "different trials draw different truths");
    }

    #[test]
    fn fig1_union_example() {
        // Defectives {1, N}: the noiseless outcome is the union of the first
        // and last signature columns, all ones for N = 8, c = 1.
        let mat = single_mat(8, 1);
        let truth = GroundTruth::new(8, vec![1, 8]).unwrap();
        for i in 1..=mat.rows() {
            assert!(noiseless_outcome(&mat, i, &truth));
        }
        let empty = GroundTruth::new(8, vec![]).unwrap();
        for i in 1..=mat.rows() {
            assert!(!noiseless_outcome(&mat, i, &empty));
        }
    }

    #[test]
    fn single_defective_outcome_is_its_column() {
        let mat = single_mat(16, 2);
        let truth = GroundTruth::new(16, vec![11]).unwrap();
        for i in 1..=mat.rows() {
            assert_eq!(noiseless_outcome(&mat, i, &truth), mat.t_entry(i, 11));
        }
    }

    #[test]
    fn noisy_outcome_edge_probabilities() {
        let quiet = NoiseParams::NOISELESS;
        for z in [false, true] {
            for draw in [0.0, 0.3, 0.999] {
                assert_eq!(noisy_outcome(z, &quiet, draw), z);
            }
        }
        let noise = NoiseParams::new(0.25, 0.5).unwrap();
        assert!(noisy_outcome(false, &noise, 0.2));
        assert!(!noisy_outcome(false, &noise, 0.25));
        assert!(!noisy_outcome(true, &noise, 0.4));
        assert!(noisy_outcome(true, &noise, 0.5));
    }

    #[test]
    fn empirical_flip_rate_matches_theta() {
        // 1e6 keyed draws against theta1 = 0.1; 0.001 is 3.3 sigma.
        let noise = NoiseParams::new(0.0, 0.1).unwrap();
        let mut rng = keyed_stream(2024, 0, LABEL_NOISE);
        let mut flips = 0u64;
        const DRAWS: u64 = 1_000_000;
        for _ in 0..DRAWS {
            let draw = f64::from(rand::RngCore::next_u32(&mut rng)) / 4_294_967_296.0;
            if !noisy_outcome(true, &noise, draw) {
                flips += 1;
            }
        }
        let rate = flips as f64 / DRAWS as f64;
        assert!((rate - 0.1).abs() <= 0.001, "flip rate {rate}");
    }

    #[test]
    fn noiseless_simulation_equals_row_oracle() {
        let mat = small_mat(3);
        let truth = GroundTruth::new(16, vec![2, 7, 11]).unwrap();
        let out = simulate(&mat, &truth, &NoiseParams::NOISELESS, 9, 0);
        for i in 1..=mat.rows() {
            assert_eq!(out.get(i), noiseless_outcome(&mat, i, &truth), "row {i}");
        }
    }

    #[test]
    fn simulation_is_deterministic_across_thread_counts() {
        let mat = small_mat(401);
        let truth = GroundTruth::new(16, vec![5, 9]).unwrap();
        let noise = NoiseParams::new(0.2, 0.1).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate(&mat, &truth, &noise, 31, 4));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| simulate(&mat, &truth, &noise, 31, 4));
        assert_eq!(single.as_bytes(), many.as_bytes());
        let repeat = simulate(&mat, &truth, &noise, 31, 4);
        assert_eq!(single, repeat);
        let other_seed = simulate(&mat, &truth, &noise, 32, 4);
        assert_ne!(single.as_bytes(), other_seed.as_bytes());
    }

    #[test]
    fn flip_counts_pass_binomial_check() {
        // Flips on noiseless-positive rows are Binomial(R, theta1); assert
        // the observed count within 4 sigma.
        let mat = single_mat(1 << 10, 101);
        let truth = GroundTruth::new(1 << 10, vec![513]).unwrap();
        let noise = NoiseParams::new(0.2, 0.1).unwrap();
        let mut positives = 0u64;
        let mut flipped = 0u64;
        let mut trials_done = 0;
        for trial in 0..500u64 {
            let out = simulate(&mat, &truth, &noise, 77, trial);
            for i in 1..=mat.rows() {
                if noiseless_outcome(&mat, i, &truth) {
                    positives += 1;
                    if !out.get(i) {
                        flipped += 1;
                    }
                }
            }
            trials_done += 1;
        }
        assert_eq!(trials_done, 500);
        let expected = positives as f64 * noise.theta1;
        let sigma = (positives as f64 * noise.theta1 * (1.0 - noise.theta1)).sqrt();
        assert!(
            (flipped as f64 - expected).abs() <= 4.0 * sigma,
            "flips {flipped} vs {expected} +- {sigma}"
        );
    }

    #[test]
    fn weight_scaled_profile_flips_no_more_than_uniform() {
        let mat = small_mat(51);
        let truth = GroundTruth::new(16, vec![4]).unwrap();
        let noise = NoiseParams::new(0.3, 0.2).unwrap();
        let clean = simulate(&mat, &truth, &NoiseParams::NOISELESS, 5, 1);
        let uniform = simulate(&mat, &truth, &noise, 5, 1);
        let scaled =
            simulate_with(&mat, &truth, &noise, NoiseProfile::WeightScaled, 5, 1).unwrap();
        let hamming = |a: &OutcomeVector, b: &OutcomeVector| {
            (1..=a.len()).filter(|&i| a.get(i) != b.get(i)).count()
        };
        // Scaled thresholds never exceed uniform ones, so with shared draws
        // every scaled flip is also a uniform flip.
        assert!(hamming(&scaled, &clean) <= hamming(&uniform, &clean));
        assert!(hamming(&scaled, &clean) > 0, "noise should act at theta = 0.3");
    }

    #[test]
    fn file_round_trip_and_validation() {
        let mat = small_mat(3);
        let truth = GroundTruth::new(16, vec![1, 6]).unwrap();
        let out = simulate(&mat, &truth, &NoiseParams::new(0.2, 0.1).unwrap(), 1, 0);
        let mut buf = Vec::new();
        out.write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"DGT1");
        assert_eq!(buf.len(), 36 + out.as_bytes().len());
        let back = OutcomeVector::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, out);

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(OutcomeVector::read_from(bad_magic.as_slice()).is_err());

        let mut bad_layout = buf.clone();
        bad_layout[4] ^= 0xff;
        assert!(OutcomeVector::read_from(bad_layout.as_slice()).is_err());

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(OutcomeVector::read_from(trailing.as_slice()).is_err());

        let truncated = &buf[..buf.len() - 1];
        assert!(OutcomeVector::read_from(truncated).is_err());
    }

    proptest! {
        #[test]
        fn packed_bits_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..200)) {
            // h = len, k = 1, c = 1 gives an arbitrary-length vector.
            let mut out = OutcomeVector::zeroed(bits.len() as u64, 1, 1);
            for (i, &b) in bits.iter().enumerate() {
                out.set(i as u64 + 1, b);
            }
            for (i, &b) in bits.iter().enumerate() {
                prop_assert_eq!(out.get(i as u64 + 1), b);
            }
            // Packing layout: bit i sits in byte i/8 at bit i%8.
            for (i, &b) in bits.iter().enumerate() {
                let stored = out.as_bytes()[i / 8] >> (i % 8) & 1 == 1;
                prop_assert_eq!(stored, b);
            }
            let mut ser = Vec::new();
            out.write_to(&mut ser).unwrap();
            let back = OutcomeVector::read_from(ser.as_slice()).unwrap();
            prop_assert_eq!(back, out);
        }

        #[test]
        fn count_ones_matches_naive(
            bits in proptest::collection::vec(any::<bool>(), 1..200),
            start_frac in 0.0f64..1.0,
            len_frac in 0.0f64..=1.0,
        ) {
            let mut out = OutcomeVector::zeroed(bits.len() as u64, 1, 1);
            for (i, &b) in bits.iter().enumerate() {
                out.set(i as u64 + 1, b);
            }
            let total = bits.len() as u64;
            let start = 1 + (start_frac * (total - 1) as f64) as u64;
            let max_len = total - start + 1;
            let len = 1 + (len_frac * (max_len - 1) as f64) as u64;
            let naive = (start..start + len).filter(|&i| out.get(i)).count() as u64;
            prop_assert_eq!(out.count_ones_in(start, len), naive);
        }
    }
}
