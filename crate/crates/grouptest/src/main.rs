//! Command-line front end: plan arithmetic, matrix inspection and
//! verification, seeded channel simulation, decoding, and experiment sweeps.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use grouptest::channel::{simulate_with, GroundTruth, NoiseProfile, OutcomeVector};
use grouptest::codes::{verify_disjunct, DisjunctMatrix, RsCode};
use grouptest::decoder::dec_d_defect;
use grouptest::harness::{
    self, doubling_plans, run_trials, sweep_tests_multi, sweep_tests_single, ExperimentConfig,
    SweepRow,
};
use grouptest::measurement::MeasurementMatrix;
use grouptest::plan::{table2_all, ChernoffParams, NoiseParams, RsParams, TestPlan};
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "grouptest",
    version,
    about = "Noisy non-adaptive group testing: nonrandom measurement matrices, \
             linear-time decoding, and a simulation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Plan parameters shared by every subcommand that needs a test plan.
#[derive(Args, Debug)]
struct PlanArgs {
    /// Number of items (a power of two); inferred from the RS configuration
    /// when omitted and d >= 2
    #[arg(long)]
    n_items: Option<u64>,

    /// Maximum number of defective items
    #[arg(long, default_value_t = 1)]
    d: u32,

    /// Decoding error budget delta
    #[arg(long, default_value_t = 0.001)]
    delta: f64,

    /// Chernoff slack lambda, in (0, 1)
    #[arg(long, default_value_t = 1.0 / 3.0)]
    lambda: f64,

    /// Chernoff slack xi, > 0
    #[arg(long, default_value_t = 0.001)]
    xi: f64,

    /// False positive probability per test
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,

    /// False negative probability per test
    #[arg(long, default_value_t = 0.0)]
    theta1: f64,

    /// Tabulated configuration case (1..=5); without --rs-n the row matching
    /// d is used
    #[arg(long)]
    case: Option<u32>,

    /// RS block length n: selects the row of --case, or combines with
    /// --rs-q/--rs-r for a custom configuration
    #[arg(long)]
    rs_n: Option<u32>,

    /// RS alphabet size q (custom configuration)
    #[arg(long)]
    rs_q: Option<u32>,

    /// RS dimension r (custom configuration)
    #[arg(long)]
    rs_r: Option<u32>,
}

impl PlanArgs {
    fn rs_params(&self) -> anyhow::Result<Option<RsParams>> {
        match (self.case, self.rs_q, self.rs_r) {
            (Some(case), None, None) => {
                let row = match self.rs_n {
                    Some(n) => table2_all()
                        .iter()
                        .find(|row| row.case == case && row.n == n)
                        .with_context(|| format!("case {case} has no row with n = {n}"))?,
                    None => table2_all()
                        .iter()
                        .find(|row| row.case == case && row.d_minus_1 + 1 == self.d)
                        .with_context(|| {
                            format!("case {case} has no row matching d = {}", self.d)
                        })?,
                };
                Ok(Some(row.rs()))
            }
            (None, Some(q), Some(r)) => {
                let n = self.rs_n.context("custom RS configuration needs --rs-n")?;
                Ok(Some(RsParams { q, n, r }))
            }
            (None, None, None) => Ok(None),
            _ => bail!("give either --case [--rs-n] or all of --rs-q --rs-n --rs-r"),
        }
    }

    fn build(&self) -> anyhow::Result<TestPlan> {
        let noise = NoiseParams::new(self.theta0, self.theta1)?;
        let chernoff = ChernoffParams::new(self.lambda, self.xi)?;
        let rs = self.rs_params()?;
        let plan = match (self.d, rs) {
            (0, _) => bail!("d must be >= 1"),
            (1, None) => {
                let n_items = self.n_items.context("--n-items is required when d = 1")?;
                TestPlan::single(n_items, self.delta, noise, chernoff)?
            }
            (1, Some(_)) => bail!("RS configuration only applies to d >= 2"),
            (_, None) => bail!("d >= 2 needs --case or --rs-q/--rs-n/--rs-r"),
            (d, Some(rs)) => TestPlan::multi(d, self.delta, noise, chernoff, rs)?,
        };
        if let Some(n_items) = self.n_items {
            if n_items != plan.n_items {
                bail!(
                    "--n-items {} disagrees with the configuration's q^r = {}",
                    n_items,
                    plan.n_items
                );
            }
        }
        if !plan.condition_ok {
            eprintln!(
                "warning: theta0 + theta1 = {} exceeds the admissible {:.4}; \
                 continuing, but the repetition analysis does not apply",
                plan.noise.theta0 + plan.noise.theta1,
                plan.chernoff.max_theta_sum()
            );
        }
        Ok(plan)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute all derived test-plan parameters and print them as JSON
    Plan {
        #[command(flatten)]
        plan: PlanArgs,
    },

    /// Exhaustively verify d-disjunctness of a concatenated RS matrix
    VerifyDisjunct {
        /// RS alphabet size (power of two)
        #[arg(long)]
        q: u32,
        /// RS block length
        #[arg(long)]
        n: u32,
        /// RS dimension
        #[arg(long)]
        r: u32,
        /// Disjunctness order to verify
        #[arg(long)]
        d: u32,
        /// Work budget in column-subset checks
        #[arg(long, default_value_t = 100_000_000)]
        budget: u128,
        /// Also write the explicit matrix as lines of 0/1 characters
        #[arg(long)]
        emit: Option<PathBuf>,
    },

    /// Write the explicit measurement matrix as lines of 0/1 characters
    /// (desk-scale instances only)
    GenMatrix {
        #[command(flatten)]
        plan: PlanArgs,
        /// Repetition count per signature row (default: the plan's derived c)
        #[arg(long)]
        c: Option<u64>,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refuse when t * N exceeds this many entries
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },

    /// Simulate the noisy outcome vector and write it as a packed bit file
    Simulate {
        #[command(flatten)]
        plan: PlanArgs,
        /// Base seed of the counter-based noise stream
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trial index within the seed's stream
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Comma-separated defective items (1-based)
        #[arg(long, value_delimiter = ',', conflicts_with = "random_defectives")]
        defectives: Option<Vec<u64>>,
        /// Draw this many defectives uniformly instead
        #[arg(long)]
        random_defectives: Option<u32>,
        /// Scale flip probabilities by row weight (thinner pools are quieter)
        #[arg(long)]
        scaled_noise: bool,
        /// Refuse when the outcome vector exceeds this many bits
        #[arg(long, default_value_t = harness::DEFAULT_SIM_BUDGET)]
        budget: u64,
        /// Output file
        #[arg(long)]
        out: PathBuf,
    },

    /// Decode a packed outcome file and print the defective set as JSON
    Decode {
        #[command(flatten)]
        plan: PlanArgs,
        /// Repetition count expected in the file (default: the plan's c)
        #[arg(long)]
        c: Option<u64>,
        /// Require recovered signatures to be internally complementary
        #[arg(long)]
        strict: bool,
        /// Packed outcome file
        #[arg(long, name = "in")]
        input: PathBuf,
    },

    /// Run a test-count sweep, an accuracy run, or a timing run; rows go to
    /// a CSV file and a summary JSON to stdout
    Experiment {
        /// tests-d1: K over the item grid for d = 1 (columns: case, n_items,
        /// d, theta0, theta1, c, tests).
        /// tests-dmulti: t over every tabulated configuration (same columns).
        /// accuracy: full simulation trials (columns: trial, truth, decoded,
        /// superset, exact, simulate_ms, decode_ms; sets are |-joined).
        /// timing: decode time across doubled test counts (columns:
        /// plan_index, c, t, delta, trial, decode_ms)
        #[arg(long)]
        sweep: Sweep,
        #[command(flatten)]
        plan: PlanArgs,
        /// Trials per configuration (accuracy and timing)
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Base seed; trial r draws from streams keyed by (seed, r)
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed defective items instead of per-trial uniform sets
        #[arg(long, value_delimiter = ',')]
        defectives: Option<Vec<u64>>,
        /// Require recovered signatures to be internally complementary
        #[arg(long)]
        strict: bool,
        /// Scale flip probabilities by row weight
        #[arg(long)]
        scaled_noise: bool,
        /// Refuse full simulations above this many outcome bits
        #[arg(long, default_value_t = harness::DEFAULT_SIM_BUDGET)]
        budget: u64,
        /// Times the test count doubles in a timing run
        #[arg(long, default_value_t = 2)]
        doublings: u32,
        /// Run trials on one thread (timing runs always do)
        #[arg(long)]
        sequential: bool,
        /// CSV output file
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Sweep {
    TestsD1,
    TestsDmulti,
    Accuracy,
    Timing,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Plan { plan } => {
            let plan = plan.build()?;
            println!("{}", serde_json::to_string_pretty(&plan)?);
        }

        Command::VerifyDisjunct {
            q,
            n,
            r,
            d,
            budget,
            emit,
        } => {
            let matrix = DisjunctMatrix::new(RsCode::new(q, n, r)?)?;
            if let Some(path) = emit {
                let size = matrix.rows().saturating_mul(matrix.cols());
                if u128::from(size) > budget {
                    bail!("emitting {size} entries exceeds the budget {budget}");
                }
                let mut out = BufWriter::new(File::create(&path)?);
                for i in 1..=matrix.rows() {
                    let line: String = (1..=matrix.cols())
                        .map(|j| if matrix.entry(i, j) { '1' } else { '0' })
                        .collect();
                    writeln!(out, "{line}")?;
                }
            }
            let verdict = verify_disjunct(
                |i, j| matrix.entry(i, j),
                matrix.rows(),
                matrix.cols(),
                d,
                budget,
            )?;
            println!(
                "{} x {} matrix (q={q} n={n} r={r}): {}-disjunct: {verdict}",
                matrix.rows(),
                matrix.cols(),
                d
            );
            if !verdict {
                return Ok(ExitCode::FAILURE);
            }
        }

        Command::GenMatrix {
            plan,
            c,
            out,
            budget,
        } => {
            let mut plan = plan.build()?;
            if let Some(c) = c {
                plan = plan.with_repetitions(c);
            }
            let entries = plan.t.saturating_mul(plan.n_items);
            if entries > budget {
                bail!(
                    "t * N = {} * {} = {entries} entries exceeds the budget {budget}",
                    plan.t,
                    plan.n_items
                );
            }
            let mat = MeasurementMatrix::new(plan)?;
            let mut sink: Box<dyn Write> = match out {
                Some(path) => Box::new(BufWriter::new(File::create(&path)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            for i in 1..=mat.rows() {
                let line: String = (1..=mat.n_items())
                    .map(|j| if mat.t_entry(i, j) { '1' } else { '0' })
                    .collect();
                writeln!(sink, "{line}")?;
            }
        }

        Command::Simulate {
            plan,
            seed,
            trial,
            defectives,
            random_defectives,
            scaled_noise,
            budget,
            out,
        } => {
            let plan = plan.build()?;
            if plan.t > budget {
                bail!(
                    "outcome vector needs t = {} bits, over the {budget} bit budget",
                    plan.t
                );
            }
            let truth = match (defectives, random_defectives) {
                (Some(items), None) => GroundTruth::new(plan.n_items, items)?,
                (None, Some(count)) => {
                    if count > plan.d {
                        bail!("{count} random defectives exceed the plan's d = {}", plan.d);
                    }
                    GroundTruth::sample_uniform(plan.n_items, count, seed, trial)
                }
                (None, None) => bail!("give --defectives or --random-defectives"),
                _ => unreachable!("clap rejects the combination"),
            };
            if truth.defectives().len() as u64 > u64::from(plan.d) {
                bail!(
                    "{} defectives exceed the plan's d = {}",
                    truth.defectives().len(),
                    plan.d
                );
            }
            let profile = if scaled_noise {
                NoiseProfile::WeightScaled
            } else {
                NoiseProfile::Uniform
            };
            let noise = plan.noise;
            let mat = MeasurementMatrix::new(plan)?;
            let outcome = simulate_with(&mat, &truth, &noise, profile, seed, trial)?;
            outcome.write_to(BufWriter::new(File::create(&out)?))?;
            eprintln!(
                "wrote {} bits ({} defectives, seed {seed}, trial {trial}) to {}",
                outcome.len(),
                truth.defectives().len(),
                out.display()
            );
        }

        Command::Decode {
            plan,
            c,
            strict,
            input,
        } => {
            let mut plan = plan.build()?;
            if let Some(c) = c {
                plan = plan.with_repetitions(c);
            }
            let outcome = OutcomeVector::read_from(std::io::BufReader::new(File::open(&input)?))?;
            let (h, k, file_c) = outcome.layout();
            if (h, k, file_c) != (plan.h, plan.k, plan.c) {
                bail!(
                    "outcome layout (h={h}, k={k}, c={file_c}) does not match the plan \
                     (h={}, k={}, c={})",
                    plan.h,
                    plan.k,
                    plan.c
                );
            }
            let result = dec_d_defect(&outcome, plan.n_items, strict)?;
            println!(
                "{}",
                serde_json::to_string(&json!({ "defectives": result.defectives }))?
            );
        }

        Command::Experiment {
            sweep,
            plan,
            trials,
            seed,
            defectives,
            strict,
            scaled_noise,
            budget,
            doublings,
            sequential,
            out,
        } => {
            let mut csv = BufWriter::new(File::create(&out)?);
            match sweep {
                Sweep::TestsD1 | Sweep::TestsDmulti => {
                    let chernoff = ChernoffParams::new(plan.lambda, plan.xi)?;
                    let rows = match sweep {
                        Sweep::TestsD1 => {
                            sweep_tests_single(&harness::SINGLE_THETA_GRID, plan.delta, chernoff)?
                        }
                        _ => sweep_tests_multi(&harness::MULTI_THETA_GRID, plan.delta, chernoff)?,
                    };
                    write_sweep_csv(&mut csv, &rows)?;
                    let max = rows.iter().map(|r| r.tests).max().unwrap_or(0);
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "rows": rows.len(),
                            "max_tests": max,
                            "out": out.display().to_string(),
                        }))?
                    );
                }
                Sweep::Accuracy => {
                    let plan = plan.build()?;
                    let config = ExperimentConfig {
                        defectives,
                        strict,
                        profile: if scaled_noise {
                            NoiseProfile::WeightScaled
                        } else {
                            NoiseProfile::Uniform
                        },
                        sim_budget_bits: budget,
                        parallel: !sequential,
                        ..ExperimentConfig::new(plan, trials, seed)
                    };
                    let (records, summary) = run_trials(&config)?;
                    writeln!(
                        csv,
                        "trial,truth,decoded,superset,exact,simulate_ms,decode_ms"
                    )?;
                    for r in &records {
                        writeln!(
                            csv,
                            "{},{},{},{},{},{:.3},{:.3}",
                            r.trial,
                            join_items(&r.truth),
                            join_items(&r.decoded),
                            r.superset,
                            r.exact,
                            r.simulate_ms,
                            r.decode_ms
                        )?;
                    }
                    println!("{}", serde_json::to_string_pretty(&summary)?);
                }
                Sweep::Timing => {
                    let base = plan.build()?;
                    let plans = doubling_plans(&base, doublings)?;
                    writeln!(csv, "plan_index,c,t,delta,trial,decode_ms")?;
                    let mut means = Vec::new();
                    for (index, plan) in plans.iter().enumerate() {
                        let config = ExperimentConfig {
                            defectives: defectives.clone(),
                            strict,
                            sim_budget_bits: budget,
                            parallel: false,
                            ..ExperimentConfig::new(plan.clone(), trials, seed)
                        };
                        let (records, summary) = run_trials(&config)?;
                        for r in &records {
                            writeln!(
                                csv,
                                "{index},{},{},{:e},{},{:.3}",
                                plan.c, plan.t, plan.delta, r.trial, r.decode_ms
                            )?;
                        }
                        means.push(summary.mean_decode_ms);
                    }
                    let ratios: Vec<f64> = means.windows(2).map(|w| w[1] / w[0]).collect();
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "t": plans.iter().map(|p| p.t).collect::<Vec<_>>(),
                            "mean_decode_ms": means,
                            "doubling_ratios": ratios,
                        }))?
                    );
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn join_items(items: &[u64]) -> String {
    items
        .iter()
        .map(|j| j.to_string())
        .collect::<Vec<_>>()
        .join("|")
}

fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> anyhow::Result<()> {
    writeln!(out, "case,n_items,d,theta0,theta1,c,tests")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.case.map_or(String::new(), |c| c.to_string()),
            row.n_items,
            row.d,
            row.theta0,
            row.theta1,
            row.c,
            row.tests
        )?;
    }
    Ok(())
}
