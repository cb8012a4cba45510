//! Experiment harness: count-only test sweeps, Monte-Carlo accuracy runs,
//! and decode-time scaling, all reproducible from a base seed.
//!
//! Trial `r` draws its truth and noise from streams keyed by `(seed, r)`, so
//! records are identical across reruns and thread counts. Wall time is
//! measured around decoding alone, separately from simulation.

use crate::channel::{simulate_with, GroundTruth, NoiseProfile};
use crate::decoder::dec_d_defect;
use crate::error::{Error, Result};
use crate::measurement::MeasurementMatrix;
use crate::plan::{table2_all, ChernoffParams, NoiseParams, TestPlan};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Largest full simulation accepted by default, in outcome bits.
pub const DEFAULT_SIM_BUDGET: u64 = 200_000_000;

/// Item counts used by the tabulated experiments.
pub const ITEM_GRID: [u64; 5] = [1 << 21, 1 << 28, 1 << 30, 1 << 32, 1 << 33];

/// Noise pairs swept in the single-defective test-count experiment.
pub const SINGLE_THETA_GRID: [(f64, f64); 4] =
    [(0.002, 0.001), (0.02, 0.01), (0.05, 0.02), (0.2, 0.1)];

/// Noise pairs swept in the multi-defective test-count experiment.
pub const MULTI_THETA_GRID: [(f64, f64); 2] = [(0.002, 0.001), (0.2, 0.1)];

/// One row of a count-only sweep; `tests` is `K` for `d = 1` and `t` above.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub case: Option<u32>,
    pub n_items: u64,
    pub d: u32,
    pub theta0: f64,
    pub theta1: f64,
    pub c: u64,
    pub tests: u64,
}

/// Pure plan arithmetic over the item grid for `d = 1`; no simulation.
pub fn sweep_tests_single(
    thetas: &[(f64, f64)],
    delta: f64,
    chernoff: ChernoffParams,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n_items in &ITEM_GRID {
        for &(theta0, theta1) in thetas {
            let noise = NoiseParams::new(theta0, theta1)?;
            let plan = TestPlan::single(n_items, delta, noise, chernoff)?;
            rows.push(SweepRow {
                case: None,
                n_items,
                d: 1,
                theta0,
                theta1,
                c: plan.c,
                tests: plan.big_k,
            });
        }
    }
    Ok(rows)
}

/// Pure plan arithmetic over every tabulated configuration, at the `d`
/// matching each row's disjunctness level.
pub fn sweep_tests_multi(
    thetas: &[(f64, f64)],
    delta: f64,
    chernoff: ChernoffParams,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for config in table2_all() {
        let d = config.d_minus_1 + 1;
        for &(theta0, theta1) in thetas {
            let noise = NoiseParams::new(theta0, theta1)?;
            let plan = TestPlan::multi(d, delta, noise, chernoff, config.rs())?;
            rows.push(SweepRow {
                case: Some(config.case),
                n_items: config.n_items,
                d,
                theta0,
                theta1,
                c: plan.c,
                tests: plan.t,
            });
        }
    }
    Ok(rows)
}

/// One simulated trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub truth: Vec<u64>,
    pub decoded: Vec<u64>,
    /// Every planted defective was identified.
    pub superset: bool,
    /// The decoded set equals the planted set.
    pub exact: bool,
    pub simulate_ms: f64,
    pub decode_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub superset_rate: f64,
    pub exact_rate: f64,
    pub mean_simulate_ms: f64,
    pub mean_decode_ms: f64,
}

/// Full-simulation experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub plan: TestPlan,
    pub trials: u64,
    pub seed: u64,
    /// Fixed defective set; `None` samples a fresh uniform d-subset per trial.
    pub defectives: Option<Vec<u64>>,
    pub strict: bool,
    pub profile: NoiseProfile,
    pub sim_budget_bits: u64,
    /// Trials run on the rayon pool when set; timing runs should disable it.
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn new(plan: TestPlan, trials: u64, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            plan,
            trials,
            seed,
            defectives: None,
            strict: false,
            profile: NoiseProfile::Uniform,
            sim_budget_bits: DEFAULT_SIM_BUDGET,
            parallel: true,
        }
    }
}

pub fn summarize(records: &[TrialRecord]) -> TrialSummary {
    let trials = records.len() as u64;
    let frac = |pred: fn(&TrialRecord) -> bool| {
        records.iter().filter(|r| pred(r)).count() as f64 / trials.max(1) as f64
    };
    TrialSummary {
        trials,
        superset_rate: frac(|r| r.superset),
        exact_rate: frac(|r| r.exact),
        mean_simulate_ms: records.iter().map(|r| r.simulate_ms).sum::<f64>() / trials.max(1) as f64,
        mean_decode_ms: records.iter().map(|r| r.decode_ms).sum::<f64>() / trials.max(1) as f64,
    }
}

/// Runs seeded trials: sample truth, simulate, decode, score.
pub fn run_trials(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, TrialSummary)> {
    let plan = &config.plan;
    if plan.t > config.sim_budget_bits {
        return Err(Error::InvalidParameter(format!(
            "full simulation needs t = {} outcome bits ({} MiB), over the {} bit budget; \
             raise the budget or use a count-only sweep",
            plan.t,
            plan.t / 8 / (1 << 20),
            config.sim_budget_bits
        )));
    }
    if let Some(fixed) = &config.defectives {
        if fixed.len() as u64 > u64::from(plan.d) {
            return Err(Error::InvalidParameter(format!(
                "{} fixed defectives exceed the plan's d = {}",
                fixed.len(),
                plan.d
            )));
        }
    }
    let mat = MeasurementMatrix::new(plan.clone())?;

    let run_one = |trial: u64| -> Result<TrialRecord> {
        let truth = match &config.defectives {
            Some(fixed) => GroundTruth::new(plan.n_items, fixed.clone())?,
            None => GroundTruth::sample_uniform(plan.n_items, plan.d, config.seed, trial),
        };
        let sim_start = Instant::now();
        let outcome = simulate_with(&mat, &truth, &plan.noise, config.profile, config.seed, trial)?;
        let simulate_ms = sim_start.elapsed().as_secs_f64() * 1e3;
        let decode_start = Instant::now();
        let result = dec_d_defect(&outcome, plan.n_items, config.strict)?;
        let decode_ms = decode_start.elapsed().as_secs_f64() * 1e3;
        let superset = truth
            .defectives()
            .iter()
            .all(|j| result.defectives.binary_search(j).is_ok());
        let exact = result.defectives == truth.defectives();
        Ok(TrialRecord {
            trial,
            truth: truth.defectives().to_vec(),
            decoded: result.defectives,
            superset,
            exact,
            simulate_ms,
            decode_ms,
        })
    };

    let records: Result<Vec<TrialRecord>> = if config.parallel {
        (0..config.trials).into_par_iter().map(run_one).collect()
    } else {
        (0..config.trials).map(run_one).collect()
    };
    let records = records?;
    let summary = summarize(&records);
    Ok((records, summary))
}

/// The delta that makes the plan's repetition formula land on `c` exactly
/// (the formula is inverted at `c - 1/2` so the outer ceiling is stable).
pub fn delta_for_repetitions(plan: &TestPlan, c: u64) -> f64 {
    let log2n = f64::from(plan.n_items.trailing_zeros());
    let numerator = if plan.d == 1 {
        2.0 * log2n
    } else {
        2.0 * f64::from(plan.d).powi(2) * log2n.powi(3)
    };
    let lambda = plan.chernoff.lambda;
    numerator * (-(c as f64 - 0.5) * plan.p0 * lambda * lambda / 2.0).exp()
}

/// Plans whose test counts double `doublings` times over the base plan,
/// reached by shrinking delta; same items, defectives and noise.
pub fn doubling_plans(base: &TestPlan, doublings: u32) -> Result<Vec<TestPlan>> {
    (0..=doublings)
        .map(|step| {
            let target = base.c << step;
            let delta = delta_for_repetitions(base, target);
            let plan = match base.rs {
                None => TestPlan::single(base.n_items, delta, base.noise, base.chernoff)?,
                Some(rs) => TestPlan::multi(base.d, delta, base.noise, base.chernoff, rs)?,
            };
            // Floating inversion is exact at c - 1/2; pin the count anyway.
            Ok(if plan.c == target {
                plan
            } else {
                plan.with_repetitions(target)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::RsParams;

    fn noise() -> NoiseParams {
        NoiseParams::new(0.2, 0.1).unwrap()
    }

    #[test]
    fn single_sweep_reproduces_count_bounds() {
        let rows = sweep_tests_single(&SINGLE_THETA_GRID, 0.001, ChernoffParams::default())
            .unwrap();
        assert_eq!(rows.len(), 20);
        let max = rows.iter().map(|r| r.tests).max().unwrap();
        assert!(max <= 16_000, "max K = {max}");
        let worst = rows
            .iter()
            .find(|r| r.n_items == 1 << 33 && r.theta0 == 0.2)
            .unwrap();
        assert_eq!(worst.tests, 15_576);
        // Noisier channels never need fewer repetitions.
        for &n_items in &ITEM_GRID {
            let per_n: Vec<u64> = rows
                .iter()
                .filter(|r| r.n_items == n_items)
                .map(|r| r.c)
                .collect();
            assert!(per_n.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn multi_sweep_reproduces_count_bounds() {
        let rows =
            sweep_tests_multi(&MULTI_THETA_GRID, 0.001, ChernoffParams::default()).unwrap();
        assert_eq!(rows.len(), 30);
        let max = rows.iter().map(|r| r.tests).max().unwrap();
        assert!(max <= 2_500_000_000, "max t = {max}");
        let heaviest = rows
            .iter()
            .find(|r| r.case == Some(5) && r.d == 16 && r.theta0 == 0.2)
            .unwrap();
        assert_eq!(heaviest.tests, 2_099_294_208);
    }

    fn small_plan(d: u32) -> TestPlan {
        TestPlan::multi(
            d,
            0.01,
            noise(),
            ChernoffParams::default(),
            RsParams { q: 8, n: 5, r: 2 },
        )
        .unwrap()
    }

    #[test]
    fn noiseless_trials_always_exact() {
        let plan = TestPlan::multi(
            3,
            0.001,
            NoiseParams::NOISELESS,
            ChernoffParams::default(),
            RsParams { q: 4, n: 3, r: 2 },
        )
        .unwrap();
        let config = ExperimentConfig::new(plan, 10, 3);
        let (records, summary) = run_trials(&config).unwrap();
        assert_eq!(records.len(), 10);
        assert_eq!(summary.superset_rate, 1.0);
        assert_eq!(summary.exact_rate, 1.0);
    }

    #[test]
    fn trials_reproduce_exactly() {
        let config = ExperimentConfig::new(small_plan(4), 8, 99);
        let (a, _) = run_trials(&config).unwrap();
        let (b, _) = run_trials(&config).unwrap();
        let sequential = ExperimentConfig {
            parallel: false,
            ..config
        };
        let (c, _) = run_trials(&sequential).unwrap();
        for ((ra, rb), rc) in a.iter().zip(&b).zip(&c) {
            assert_eq!(ra.truth, rb.truth);
            assert_eq!(ra.decoded, rb.decoded);
            assert_eq!(ra.truth, rc.truth);
            assert_eq!(ra.decoded, rc.decoded);
        }
    }

    #[test]
    fn fixed_defectives_are_respected() {
        let mut config = ExperimentConfig::new(small_plan(4), 3, 1);
        config.defectives = Some(vec![5, 44, 61]);
        let (records, _) = run_trials(&config).unwrap();
        for record in records {
            assert_eq!(record.truth, vec![5, 44, 61]);
        }
        config.defectives = Some(vec![1, 2, 3, 4, 5]);
        assert!(run_trials(&config).is_err());
    }

    #[test]
    fn budget_refusal_reports_size() {
        let plan = TestPlan::from_table2(5, 16, 0.001, noise(), ChernoffParams::default())
            .unwrap();
        let config = ExperimentConfig::new(plan, 1, 0);
        let err = run_trials(&config).unwrap_err();
        assert!(err.to_string().contains("2099294208"), "{err}");
    }

    #[test]
    fn doubling_plans_double_test_counts() {
        let base = TestPlan::multi(
            3,
            0.001,
            noise(),
            ChernoffParams::default(),
            RsParams {
                q: 32,
                n: 7,
                r: 4,
            },
        )
        .unwrap();
        assert_eq!(base.c, 398);
        let plans = doubling_plans(&base, 2).unwrap();
        assert_eq!(plans.len(), 3);
        assert_eq!(plans[0].c, 398);
        assert_eq!(plans[1].c, 796);
        assert_eq!(plans[2].c, 1592);
        assert_eq!(plans[1].t, 2 * plans[0].t);
        assert_eq!(plans[2].t, 4 * plans[0].t);
        // Each plan's delta genuinely induces its count through the formula.
        for plan in &plans {
            let rebuilt = TestPlan::multi(
                plan.d,
                plan.delta,
                plan.noise,
                plan.chernoff,
                plan.rs.unwrap(),
            )
            .unwrap();
            assert_eq!(rebuilt.c, plan.c);
        }
    }

    #[test]
    fn summary_rates_recompute_from_records() {
        let config = ExperimentConfig::new(small_plan(3), 12, 5);
        let (records, summary) = run_trials(&config).unwrap();
        let supersets = records.iter().filter(|r| r.superset).count();
        assert_eq!(summary.superset_rate, supersets as f64 / 12.0);
        assert_eq!(summary.trials, 12);
    }
}
