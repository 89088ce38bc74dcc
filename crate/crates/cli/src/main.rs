//! Command-line driver: one subcommand per lab operation, each writing a
//! JSON summary and CSV tables into the output directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use sumtest_lab::machine::{kraft_sum, prefix_violations, EnumerationCache};
use sumtest_lab::numerics::{BitString, Dyadic, Numerals, Rational};
use sumtest_lab::report::{csv_text, Report, Status};
use sumtest_lab::semimeasure::{f_lemma, lemma_threshold, omega_trace, StagedSemimeasure};
use sumtest_lab::sumtests::{
    adversary_build, dominate_schedule, e_fg_by_horizon, efg_measure_check, g_build, itime,
    lemma_f_schedule, oracle_estimate, replay_dense, u_h_batch, upperbound_trace, EfgParams,
    InitialFilter, Schedule, TestApprox,
};
use sumtest_lab::verify::verify_suite;
use sumtest_lab::{Error, Lab, LabConfig};

#[derive(Parser)]
#[command(
    name = "sumtest-lab",
    version,
    about = "Exact finite-stage sumtest lab"
)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// Horizon: the largest stage looked at.
    #[arg(long = "T", global = true, default_value_t = 64)]
    horizon: u64,
    /// Longest program enumerated.
    #[arg(long, global = true, default_value_t = 16)]
    maxlen: usize,
    /// Step budget of the enumeration walk.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    budget: u64,
    #[arg(long, global = true, default_value_t = 5)]
    alpha: u32,
    #[arg(long, global = true, default_value_t = 6)]
    beta: u32,
    /// binary | unary
    #[arg(long, global = true, default_value = "binary")]
    numerals: Numerals,
    /// Persistent enumeration cache file.
    #[arg(long, global = true, env = "SUMTEST_LAB_CACHE")]
    cache: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Wait schedule h(x,s): an expression or a table file.
    #[arg(long = "schedule-h", global = true)]
    schedule_h: Option<String>,
    /// Schedule f(t); defaults to the Omega-based wait table.
    #[arg(long = "schedule-f", global = true)]
    schedule_f: Option<String>,
    /// Schedule g(x,t).
    #[arg(long = "schedule-g", global = true)]
    schedule_g: Option<String>,
    /// Constant c, as `p/q`, an integer, or a dyadic.
    #[arg(long, global = true)]
    c: Option<Rational>,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum PKind {
    Mix,
    Product,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Cmd {
    /// Enumerate the halting domain.
    Enumerate {
        #[arg(long)]
        condition: Option<BitString>,
    },
    /// Mixture mass m_t(x).
    Mass {
        x: BitString,
        #[arg(long)]
        stage: Option<u64>,
    },
    /// Conditional mass m_t(x|s).
    CondMass {
        x: BitString,
        #[arg(long)]
        s: u64,
        #[arg(long)]
        stage: Option<u64>,
    },
    /// Time-bounded prefix complexity.
    Ktime {
        x: BitString,
        #[arg(long)]
        condition: Option<BitString>,
        #[arg(long)]
        stage: Option<u64>,
    },
    /// K^t(x) + K^t(y) - K^t(<x,y>).
    Itime {
        x: BitString,
        y: BitString,
        #[arg(long)]
        stage: Option<u64>,
    },
    /// Omega_t and its leftmost changed bit for every stage up to T
    OmegaTrace,
    /// Last stage up to T whose Omega bit index is at most k
    Tk { k: u64 },
    /// Wait stage for the numeral of t.
    FLemma { t: u64 },
    /// u_h(x; T) on the given strings, or the stage support up to --probe-len.
    Uh {
        xs: Vec<BitString>,
        #[arg(long)]
        probe_len: Option<usize>,
        #[arg(long, value_enum, default_value = "mix")]
        p: PKind,
    },
    /// e_{f,g}(x; T) on the given strings, or every string of length --n.
    Efg {
        xs: Vec<BitString>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Mass of the strings where e_{f,g} exceeds 1.
    EfgCheck {
        #[arg(long)]
        n: u64,
    },
    /// Adversarial survivor at length n.
    Adversary {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        filter_exponent: Option<u64>,
    },
    /// Adversarial survivor plus the synthesized g table.
    GBuild {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        filter_exponent: Option<u64>,
    },
    /// Wait table h making c u_h dominate a constant test e.
    Dominate {
        #[arg(long, default_value_t = 5)]
        probe_len: usize,
        #[arg(long, default_value = "1")]
        e: Rational,
        #[arg(long, value_enum, default_value = "mix")]
        p: PKind,
    },
    /// Stage sequence and doubling disjunction for u_h.
    UpperboundTrace {
        #[arg(long, default_value_t = 4)]
        probe_len: usize,
    },
    /// Window minimum of conditional mass (exploratory).
    OracleEstimate {
        x: BitString,
        /// `a,b`; defaults to `1,T`.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<u64>>,
    },
    /// Run the invariant suite.
    Verify,
    /// Inspect or compact the enumeration cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CacheAction {
    Stats,
    Compact,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Enumerate { .. } => "enumerate",
            Cmd::Mass { .. } => "mass",
            Cmd::CondMass { .. } => "cond-mass",
            Cmd::Ktime { .. } => "ktime",
            Cmd::Itime { .. } => "itime",
            Cmd::OmegaTrace => "omega-trace",
            Cmd::Tk { .. } => "tk",
            Cmd::FLemma { .. } => "f-lemma",
            Cmd::Uh { .. } => "uh",
            Cmd::Efg { .. } => "efg",
            Cmd::EfgCheck { .. } => "efg-check",
            Cmd::Adversary { .. } => "adversary",
            Cmd::GBuild { .. } => "g-build",
            Cmd::Dominate { .. } => "dominate",
            Cmd::UpperboundTrace { .. } => "upperbound-trace",
            Cmd::OracleEstimate { .. } => "oracle-estimate",
            Cmd::Verify => "verify",
            Cmd::Cache { .. } => "cache",
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Numerics(_) => "numerics",
        Error::Cache(_) => "cache",
        Error::Config(_) => "config",
        Error::NoSuchStage { .. } => "no-such-stage",
        Error::HorizonExceeded { .. } => "horizon-exceeded",
        Error::ZeroDenominator { .. } => "zero-denominator",
        Error::PreconditionViolated { .. } => "precondition-violated",
        Error::ListExhausted { .. } => "list-exhausted",
        Error::Undefined(_) => "undefined",
        Error::Schedule(_) => "schedule",
        Error::Semimeasure(_) => "semimeasure",
        Error::Io(_) => "io",
    }
}

/// A schedule given inline or as a path to a file holding one.
fn load_schedule(spec: &str) -> Result<Schedule, Error> {
    let path = Path::new(spec);
    if path.is_file() {
        Schedule::parse(&std::fs::read_to_string(path)?)
    } else {
        Schedule::parse(spec)
    }
}

fn schedule_or(spec: &Option<String>, default: &str) -> Result<Schedule, Error> {
    load_schedule(spec.as_deref().unwrap_or(default))
}

fn semimeasure(p: PKind) -> StagedSemimeasure {
    match p {
        PKind::Mix => StagedSemimeasure::MachineMix,
        PKind::Product => StagedSemimeasure::Product,
    }
}

fn status(pass: bool) -> Status {
    if pass {
        Status::Pass
    } else {
        Status::Fail
    }
}

struct Ctx<'a> {
    lab: &'a Lab,
    opts: &'a Opts,
    horizon: u64,
    /// Resolved schedules and constants, echoed into the summary.
    resolved: serde_json::Map<String, serde_json::Value>,
}

impl Ctx<'_> {
    fn schedule(
        &mut self,
        key: &str,
        spec: &Option<String>,
        default: &str,
    ) -> Result<Schedule, Error> {
        let s = schedule_or(spec, default)?;
        self.resolved.insert(key.into(), json!(s.to_text()));
        Ok(s)
    }

    fn f_schedule(&mut self) -> Result<Schedule, Error> {
        let f = match &self.opts.schedule_f {
            Some(spec) => load_schedule(spec)?,
            None => lemma_f_schedule(self.lab, &omega_trace(self.lab, self.horizon)),
        };
        self.resolved
            .insert("schedule_f".into(), json!(f.to_text()));
        Ok(f)
    }

    fn c(&mut self, default: u64) -> Rational {
        let c = self
            .opts
            .c
            .clone()
            .unwrap_or_else(|| Rational::from_integer(default));
        self.resolved.insert("c".into(), json!(c));
        c
    }

    fn filter(&mut self, exponent: Option<u64>) -> Result<Option<InitialFilter>, Error> {
        match exponent {
            None => Ok(None),
            Some(exponent) => {
                let h = self.schedule("schedule_h", &self.opts.schedule_h.clone(), "s")?;
                Ok(Some(InitialFilter { h, exponent }))
            }
        }
    }
}

fn run_lab(cmd: &Cmd, ctx: &mut Ctx<'_>, report: Report) -> Result<Report, Error> {
    let lab = ctx.lab;
    let horizon = ctx.horizon;
    Ok(match cmd {
        Cmd::Enumerate { condition } => {
            let condition = condition.clone().unwrap_or_default();
            let records = if condition.is_empty() {
                lab.plain_records().to_vec()
            } else {
                sumtest_lab::machine::enumerate_halting(
                    lab.config().max_len,
                    lab.config().budget,
                    &condition,
                )
            };
            let violations = prefix_violations(&records);
            let kraft = kraft_sum(&records);
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        r.program.to_string(),
                        r.condition.to_string(),
                        r.output.to_string(),
                        r.steps.to_string(),
                        r.consumed.to_string(),
                    ]
                })
                .collect();
            let pass = violations.is_empty() && kraft <= Dyadic::one();
            report
                .with_status(status(pass))
                .with_summary(json!({
                    "records": records.len(),
                    "kraft_sum": kraft,
                    "prefix_violations": violations,
                }))
                .with_table(
                    "records",
                    csv_text(
                        &["program", "condition", "output", "steps", "consumed"],
                        &rows,
                    ),
                )
        }
        Cmd::Mass { x, stage } => {
            let stage = stage.unwrap_or(horizon);
            report.with_summary(json!({"x": x, "stage": stage, "mass": lab.m_stage(x, stage)}))
        }
        Cmd::CondMass { x, s, stage } => {
            let stage = stage.unwrap_or(horizon);
            report.with_summary(json!({
                "x": x, "s": s, "condition": lab.numeral(*s), "stage": stage,
                "mass": lab.m_cond_stage(x, *s, stage),
            }))
        }
        Cmd::Ktime {
            x,
            condition,
            stage,
        } => {
            let stage = stage.unwrap_or(horizon);
            let condition = condition.clone().unwrap_or_default();
            let k = lab.ktime(x, &condition, stage);
            report.with_summary(json!({
                "x": x, "condition": condition, "stage": stage,
                "ktime": k.map_or(json!("inf"), |k| json!(k)),
            }))
        }
        Cmd::Itime { x, y, stage } => {
            let stage = stage.unwrap_or(horizon);
            let xy = itime(lab, x, y, stage)?;
            let yx = itime(lab, y, x, stage)?;
            report.with_summary(
                json!({"x": x, "y": y, "stage": stage, "itime": xy, "itime_swapped": yx}),
            )
        }
        Cmd::OmegaTrace => {
            let trace = omega_trace(lab, horizon);
            let om: Vec<&Dyadic> = trace.entries.iter().map(|e| &e.omega).collect();
            let pass =
                om.iter().all(|o| **o <= Dyadic::one()) && om.windows(2).all(|w| w[0] <= w[1]);
            let mut csv = Vec::new();
            trace.write_csv(&mut csv)?;
            report
                .with_status(status(pass))
                .with_summary(json!({
                    "omega_T": om[om.len() - 1],
                    "max_k": trace.max_k(),
                    "subnormal_and_monotone": pass,
                }))
                .with_table("trace", String::from_utf8(csv).expect("utf8 csv"))
        }
        Cmd::Tk { k } => {
            let t = omega_trace(lab, horizon).t_k(*k)?;
            report.with_summary(json!({"k": k, "t_k": t}))
        }
        Cmd::FLemma { t } => {
            let trace = omega_trace(lab, horizon);
            let k = trace.k(*t);
            let stage = f_lemma(lab, &trace, *t)?;
            report.with_summary(json!({
                "t": t,
                "numeral": lab.numeral(*t),
                "k_t": k.map_or(json!("inf"), |k| json!(k)),
                "threshold": k.map_or(Rational::zero(), lemma_threshold),
                "stage": stage,
                "mass": lab.m_stage(&lab.numeral(*t), stage),
            }))
        }
        Cmd::Uh { xs, probe_len, p } => {
            let h = ctx.schedule("schedule_h", &ctx.opts.schedule_h.clone(), "s")?;
            let p = semimeasure(*p);
            let xs = if xs.is_empty() {
                p.stage_support(probe_len.unwrap_or(4))
            } else {
                xs.clone()
            };
            let us = u_h_batch(lab, &xs, &p, &h, horizon)?;
            let rows: Vec<[String; 2]> = xs
                .iter()
                .zip(&us)
                .map(|(x, u)| [x.to_string(), u.to_string()])
                .collect();
            report
                .with_summary(json!({"p": p.name(), "probes": xs.len()}))
                .with_table("values", csv_text(&["x", "u_h"], &rows))
        }
        Cmd::Efg { xs, n } => {
            let params = EfgParams {
                f: ctx.f_schedule()?,
                g: ctx.schedule("schedule_g", &ctx.opts.schedule_g.clone(), "2*s")?,
                alpha: lab.config().alpha,
                beta: lab.config().beta,
            };
            let xs: Vec<BitString> = match n {
                Some(n) if xs.is_empty() => BitString::all_of_len(*n).collect(),
                _ => xs.clone(),
            };
            let mut rows = Vec::new();
            for x in &xs {
                let by_t = e_fg_by_horizon(lab, &params, x, horizon);
                rows.push([x.to_string(), by_t[horizon as usize].to_string()]);
            }
            report
                .with_summary(json!({"strings": xs.len()}))
                .with_table("values", csv_text(&["x", "e_fg"], &rows))
        }
        Cmd::EfgCheck { n } => {
            let params = EfgParams {
                f: ctx.f_schedule()?,
                g: ctx.schedule("schedule_g", &ctx.opts.schedule_g.clone(), "2*s")?,
                alpha: lab.config().alpha,
                beta: lab.config().beta,
            };
            let check = efg_measure_check(lab, &params, *n, horizon)?;
            let st = match &check {
                sumtest_lab::sumtests::EfgCheck::Skipped { .. } => Status::Skipped,
                c => status(c.passed()),
            };
            report.with_status(st).with_summary(check)
        }
        Cmd::Adversary { n, filter_exponent } | Cmd::GBuild { n, filter_exponent } => {
            let f = ctx.f_schedule()?;
            let filter = ctx.filter(*filter_exponent)?;
            let trace = adversary_build(lab, *n, &f, horizon, lab.config().beta, filter.as_ref())?;
            let removed: Vec<Vec<BitString>> =
                trace.steps.iter().map(|s| s.removed.clone()).collect();
            let replay_ok = replay_dense(lab, &trace, filter.as_ref())
                .is_some_and(|(survivor, r)| survivor == trace.survivor && r == removed);
            let census = !trace.census_applies || trace.census_ok;
            let step_rows: Vec<Vec<String>> = trace
                .steps
                .iter()
                .map(|s| {
                    vec![
                        s.i.to_string(),
                        s.t.to_string(),
                        s.threshold.to_string(),
                        s.removed.len().to_string(),
                        s.list_size.to_string(),
                        s.dist_size.to_string(),
                    ]
                })
                .collect();
            let report = report.with_table(
                "steps",
                csv_text(
                    &["i", "t", "threshold", "removed", "list_size", "dist_size"],
                    &step_rows,
                ),
            );
            if let Cmd::GBuild { .. } = cmd {
                let g = g_build(lab, &trace, ctx.opts.c.as_ref(), horizon)?;
                ctx.resolved.insert("c".into(), json!(g.c));
                let ok = g.failures.is_empty() && g.steps.iter().all(|s| s.constraint_ok);
                report
                    .with_status(status(census && replay_ok && ok))
                    .with_summary(json!({
                        "survivor": trace.survivor,
                        "t_list": trace.t_list,
                        "census_ok": trace.census_ok,
                        "census_applies": trace.census_applies,
                        "replay_ok": replay_ok,
                        "c": g.c,
                        "g_steps": g.steps,
                        "failures": g.failures,
                    }))
                    .with_table("g", g.table.to_text())
            } else {
                report
                    .with_status(status(census && replay_ok))
                    .with_summary(json!({"trace": trace, "replay_ok": replay_ok}))
            }
        }
        Cmd::Dominate { probe_len, e, p } => {
            let c = ctx.c(4);
            let xs: Vec<BitString> = BitString::all_up_to(*probe_len).collect();
            let d = dominate_schedule(
                lab,
                &TestApprox::Constant(e.clone()),
                &semimeasure(*p),
                &c,
                horizon,
                &xs,
            )?;
            let pass = d.failures.is_empty() && d.verified == Some(true);
            report
                .with_status(status(pass))
                .with_summary(json!({
                    "probes": d.probes.len(),
                    "failures": d.failures,
                    "verified": d.verified,
                    "max_stage": d.max_stage,
                }))
                .with_table("h", d.table.to_text())
        }
        Cmd::UpperboundTrace { probe_len } => {
            let h = ctx.schedule("schedule_h", &ctx.opts.schedule_h.clone(), "2*s")?;
            let c = ctx.c(4);
            let tr = upperbound_trace(lab, &h, &c, *probe_len, horizon)?;
            let rows: Vec<Vec<String>> = tr
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.x.to_string(),
                        r.i.to_string(),
                        r.t_i.to_string(),
                        r.t_next.to_string(),
                        r.ratio.to_string(),
                        r.doubled.to_string(),
                        r.u_small.to_string(),
                        r.holds.to_string(),
                    ]
                })
                .collect();
            report
                .with_status(status(tr.pass))
                .with_summary(json!({
                    "stages": tr.stages,
                    "truncated": tr.truncated,
                    "probes": tr.probes,
                    "rows": tr.rows.len(),
                    "pass": tr.pass,
                }))
                .with_table(
                    "rows",
                    csv_text(
                        &[
                            "x", "i", "t_i", "t_next", "ratio", "doubled", "u_small", "holds",
                        ],
                        &rows,
                    ),
                )
        }
        Cmd::OracleEstimate { x, window } => {
            let h = ctx.schedule("schedule_h", &ctx.opts.schedule_h.clone(), "s")?;
            let window = match window.as_deref() {
                None => (1, horizon),
                Some([a, b]) => (*a, *b),
                Some(_) => return Err(Error::Config("--window takes a,b".into())),
            };
            let est = oracle_estimate(lab, x, horizon, window, Some(&h))?;
            report.with_status(Status::Exploratory).with_summary(est)
        }
        Cmd::Verify => verify_suite(lab),
        Cmd::Cache { .. } => unreachable!("handled without a lab"),
    })
}

fn config(opts: &Opts) -> LabConfig {
    LabConfig {
        horizon: opts.horizon,
        max_len: opts.maxlen,
        budget: opts.budget,
        numerals: opts.numerals,
        alpha: opts.alpha,
        beta: opts.beta,
        cache: opts.cache.clone(),
        workers: opts.workers.max(1),
        ..LabConfig::default()
    }
}

fn run(cli: &Cli) -> Result<Report, Error> {
    let cfg = config(&cli.opts);
    let report = Report::new(cli.cmd.name(), &cfg);
    if let Cmd::Cache { action } = &cli.cmd {
        let path = cfg
            .cache
            .clone()
            .ok_or_else(|| Error::Config("cache needs --cache or SUMTEST_LAB_CACHE".into()))?;
        let mut cache = EnumerationCache::load(&path)?;
        let stats = match action {
            CacheAction::Stats => cache.stats(),
            CacheAction::Compact => cache.compact()?,
        };
        return Ok(report.with_summary(json!({"action": action, "stats": stats})));
    }
    let lab = Lab::new(cfg)?;
    let mut ctx = Ctx {
        lab: &lab,
        opts: &cli.opts,
        horizon: cli.opts.horizon,
        resolved: serde_json::Map::new(),
    };
    let mut report = run_lab(&cli.cmd, &mut ctx, report)?;
    if let Some(fault) = lab.cache_fault() {
        return Err(Error::Config(format!("cache write failed: {fault}")));
    }
    let result = report.summary.take();
    let report = report.with_summary(json!({
        "params": cli.cmd,
        "resolved": ctx.resolved,
        "result": result,
    }));
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.cmd.name();
    let outcome = run(&cli).and_then(|report| {
        report.write_to(&cli.opts.out)?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            print!("{}", report.summary_json());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            let record = json!({
                "command": command,
                "status": "error",
                "kind": error_kind(&e),
                "error": e.to_string(),
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&record).expect("record serializes")
            );
            ExitCode::FAILURE
        }
    }
}
