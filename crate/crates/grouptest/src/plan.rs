//! Test-plan arithmetic: majority-vote repetition counts from the Chernoff
//! bound, the noise-admissibility condition, and the tabulated RS-code
//! configurations used by the experiments.

use crate::error::{Error, Result};
use serde::Serialize;

/// Per-test false positive (`theta0`) and false negative (`theta1`)
/// probabilities, each at most 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseParams {
    pub theta0: f64,
    pub theta1: f64,
}

impl NoiseParams {
    pub const NOISELESS: NoiseParams = NoiseParams {
        theta0: 0.0,
        theta1: 0.0,
    };

    pub fn new(theta0: f64, theta1: f64) -> Result<NoiseParams> {
        for (name, v) in [("theta0", theta0), ("theta1", theta1)] {
            if !(0.0..=0.5).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} not in [0, 1/2]"
                )));
            }
        }
        Ok(NoiseParams { theta0, theta1 })
    }

    /// Probability that a single half-population test reports correctly:
    /// `1 - (theta0 + theta1) / 2`.
    pub fn p0(&self) -> f64 {
        1.0 - 0.5 * (self.theta0 + self.theta1)
    }
}

/// Slack parameters of the majority-vote Chernoff bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffParams {
    pub lambda: f64,
    pub xi: f64,
}

impl ChernoffParams {
    pub fn new(lambda: f64, xi: f64) -> Result<ChernoffParams> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda} not in (0, 1)"
            )));
        }
        if xi.is_nan() || xi <= 0.0 {
            return Err(Error::InvalidParameter(format!("xi = {xi} must be > 0")));
        }
        Ok(ChernoffParams { lambda, xi })
    }

    /// Largest admissible `theta0 + theta1`: `2 * (1 - (1/2 + xi)/(1 - lambda))`.
    pub fn max_theta_sum(&self) -> f64 {
        2.0 * (1.0 - (0.5 + self.xi) / (1.0 - self.lambda))
    }
}

/// The experiment defaults: `lambda = 1/3`, `xi = 0.001`.
impl Default for ChernoffParams {
    fn default() -> Self {
        ChernoffParams {
            lambda: 1.0 / 3.0,
            xi: 0.001,
        }
    }
}

/// True when the noise level admits the majority-vote analysis:
/// `theta0 + theta1 <= 2 * (1 - (1/2 + xi)/(1 - lambda))` (closed condition).
pub fn check_condition(noise: &NoiseParams, chernoff: &ChernoffParams) -> bool {
    noise.theta0 + noise.theta1 <= chernoff.max_theta_sum()
}

fn log2_items(n_items: u64) -> f64 {
    assert!(
        n_items.is_power_of_two() && n_items >= 2,
        "item count {n_items} must be a power of two >= 2"
    );
    f64::from(n_items.trailing_zeros())
}

/// Repetitions per signature row for the single-defective plan:
/// `ceil(2 * ln(2 * log2(N) / delta) / (p0 * lambda^2))`, clamped to >= 1.
pub fn repetitions_single(n_items: u64, delta: f64, chernoff: &ChernoffParams, p0: f64) -> u64 {
    assert!(delta > 0.0, "delta must be > 0");
    assert!(p0 > 0.0 && p0 <= 1.0, "p0 must be in (0, 1]");
    let raw = 2.0 * (2.0 * log2_items(n_items) / delta).ln() / (p0 * chernoff.lambda.powi(2));
    (raw.ceil() as i64).max(1) as u64
}

/// Repetitions per signature row for the d-defective plan:
/// `ceil(2 * ln(2 * d^2 * log2^3(N) / delta) / (p0 * lambda^2))`, clamped to >= 1.
pub fn repetitions_multi(
    n_items: u64,
    d: u32,
    delta: f64,
    chernoff: &ChernoffParams,
    p0: f64,
) -> u64 {
    assert!(d >= 2, "d must be >= 2");
    assert!(delta > 0.0, "delta must be > 0");
    assert!(p0 > 0.0 && p0 <= 1.0, "p0 must be in (0, 1]");
    let log2n = log2_items(n_items);
    let raw = 2.0 * (2.0 * f64::from(d).powi(2) * log2n.powi(3) / delta).ln()
        / (p0 * chernoff.lambda.powi(2));
    (raw.ceil() as i64).max(1) as u64
}

/// Probability that a majority vote over `c` repetitions recovers the wrong
/// bit: `exp(-lambda^2 * p0 * c / 2)`.
pub fn chernoff_failure_bound(c: u64, chernoff: &ChernoffParams, p0: f64) -> f64 {
    (-chernoff.lambda.powi(2) * p0 * c as f64 / 2.0).exp()
}

/// Reed-Solomon parameters backing the disjunct half of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RsParams {
    pub q: u32,
    pub n: u32,
    pub r: u32,
}

impl RsParams {
    /// Disjunctness order of the concatenated matrix, `floor((n-1)/(r-1))`.
    pub fn d_disjunct(&self) -> u32 {
        (self.n - 1) / (self.r - 1)
    }

    pub fn n_items(&self) -> u64 {
        u64::from(self.q).pow(self.r)
    }

    pub fn h(&self) -> u64 {
        u64::from(self.q) * u64::from(self.n)
    }
}

/// One tabulated configuration for the disjunct matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Table2Config {
    pub case: u32,
    pub q: u32,
    pub n: u32,
    pub r: u32,
    pub d_minus_1: u32,
    pub h: u64,
    pub n_items: u64,
}

impl Table2Config {
    pub fn rs(&self) -> RsParams {
        RsParams {
            q: self.q,
            n: self.n,
            r: self.r,
        }
    }
}

const TABLE2: [Table2Config; 15] = {
    const fn row(case: u32, q: u32, n: u32, r: u32, d_minus_1: u32, h: u64, n_items: u64) -> Table2Config {
        Table2Config {
            case,
            q,
            n,
            r,
            d_minus_1,
            h,
            n_items,
        }
    }
    [
        row(1, 128, 5, 3, 2, 640, 1 << 21),
        row(1, 128, 11, 3, 5, 1_408, 1 << 21),
        row(1, 128, 31, 3, 15, 3_968, 1 << 21),
        row(2, 128, 7, 4, 2, 896, 1 << 28),
        row(2, 128, 16, 4, 5, 2_048, 1 << 28),
        row(2, 128, 46, 4, 15, 5_888, 1 << 28),
        row(3, 64, 11, 5, 2, 704, 1 << 30),
        row(3, 64, 21, 5, 5, 1_344, 1 << 30),
        row(3, 64, 61, 5, 15, 3_904, 1 << 30),
        row(4, 256, 7, 4, 2, 1_792, 1 << 32),
        row(4, 256, 16, 4, 5, 4_096, 1 << 32),
        row(4, 256, 46, 4, 15, 11_776, 1 << 32),
        row(5, 2048, 5, 3, 2, 10_240, 1 << 33),
        row(5, 2048, 11, 3, 5, 22_528, 1 << 33),
        row(5, 2048, 31, 3, 15, 63_488, 1 << 33),
    ]
};

/// The tabulated `(q, n, r, d-1, h, N)` tuple for `case` in 1..=5 and
/// `d_index` in 1..=3 (the three disjunctness levels 2, 5, 15).
pub fn table2_config(case: u32, d_index: u32) -> Result<Table2Config> {
    if !(1..=5).contains(&case) {
        return Err(Error::IndexOutOfRange {
            name: "case",
            got: u64::from(case),
            max: 5,
        });
    }
    if !(1..=3).contains(&d_index) {
        return Err(Error::IndexOutOfRange {
            name: "d_index",
            got: u64::from(d_index),
            max: 3,
        });
    }
    Ok(TABLE2[((case - 1) * 3 + (d_index - 1)) as usize])
}

/// All fifteen tabulated configurations.
pub fn table2_all() -> &'static [Table2Config] {
    &TABLE2
}

/// Every derived scalar of a test plan.
///
/// `t = h * K = h * c * k` rows: `h` disjunct-matrix blocks (1 when `d = 1`),
/// each holding the `k = 2 * log2(N)` signature rows repeated `c` times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestPlan {
    pub n_items: u64,
    pub d: u32,
    pub delta: f64,
    pub noise: NoiseParams,
    pub chernoff: ChernoffParams,
    pub p0: f64,
    pub k: u32,
    pub c: u64,
    #[serde(rename = "K")]
    pub big_k: u64,
    pub rs: Option<RsParams>,
    pub h: u64,
    pub t: u64,
    pub condition_ok: bool,
}

impl TestPlan {
    /// Plan for at most one defective: the signature matrix with every row
    /// repeated `c` times, no disjunct half.
    pub fn single(
        n_items: u64,
        delta: f64,
        noise: NoiseParams,
        chernoff: ChernoffParams,
    ) -> Result<TestPlan> {
        if !n_items.is_power_of_two() || n_items < 2 {
            return Err(Error::InvalidParameter(format!(
                "item count {n_items} must be a power of two >= 2"
            )));
        }
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be > 0")));
        }
        let p0 = noise.p0();
        let k = 2 * n_items.trailing_zeros();
        let c = repetitions_single(n_items, delta, &chernoff, p0);
        let big_k = c * u64::from(k);
        Ok(TestPlan {
            n_items,
            d: 1,
            delta,
            noise,
            chernoff,
            p0,
            k,
            c,
            big_k,
            rs: None,
            h: 1,
            t: big_k,
            condition_ok: check_condition(&noise, &chernoff),
        })
    }

    /// Plan for at most `d >= 2` defectives over the disjunct matrix built
    /// from `rs`; the item count is `q^r`.
    pub fn multi(
        d: u32,
        delta: f64,
        noise: NoiseParams,
        chernoff: ChernoffParams,
        rs: RsParams,
    ) -> Result<TestPlan> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "multi-defective plan needs d >= 2, got {d}"
            )));
        }
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be > 0")));
        }
        if rs.r < 2 || rs.r > rs.n || rs.n >= rs.q {
            return Err(Error::InvalidParameter(format!(
                "RS parameters must satisfy 2 <= r <= n < q, got q={} n={} r={}",
                rs.q, rs.n, rs.r
            )));
        }
        if !rs.q.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "alphabet size {} must be a power of two",
                rs.q
            )));
        }
        if d - 1 > rs.d_disjunct() {
            return Err(Error::InvalidParameter(format!(
                "matrix is only {}-disjunct: cannot isolate {d} defectives",
                rs.d_disjunct()
            )));
        }
        let n_items = rs.n_items();
        let p0 = noise.p0();
        let k = 2 * n_items.trailing_zeros();
        let c = repetitions_multi(n_items, d, delta, &chernoff, p0);
        let big_k = c * u64::from(k);
        let h = rs.h();
        Ok(TestPlan {
            n_items,
            d,
            delta,
            noise,
            chernoff,
            p0,
            k,
            c,
            big_k,
            rs: Some(rs),
            h,
            t: h * big_k,
            condition_ok: check_condition(&noise, &chernoff),
        })
    }

    /// Plan for `d` defectives using the tabulated configuration whose
    /// disjunctness level is exactly `d - 1`.
    pub fn from_table2(
        case: u32,
        d: u32,
        delta: f64,
        noise: NoiseParams,
        chernoff: ChernoffParams,
    ) -> Result<TestPlan> {
        let config = table2_all()
            .iter()
            .find(|row| row.case == case && row.d_minus_1 + 1 == d)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("no tabulated case {case} entry with d = {d}"))
            })?;
        TestPlan::multi(d, delta, noise, chernoff, config.rs())
    }

    /// Same plan with an explicit repetition count instead of the derived one.
    pub fn with_repetitions(mut self, c: u64) -> TestPlan {
        assert!(c >= 1, "repetition count must be >= 1");
        self.c = c;
        self.big_k = c * u64::from(self.k);
        self.t = self.h * self.big_k;
        self
    }

    /// Per-group majority failure bound for this plan's repetition count.
    pub fn failure_bound(&self) -> f64 {
        chernoff_failure_bound(self.c, &self.chernoff, self.p0)
    }
}
