use anyhow::Context;
use clap::{Parser, Subcommand};
use elhlearn::batch::{build_batch, learn_from_batch, Batch};
use elhlearn::learner::{self, iq::IqOptions, Run};
use elhlearn::pac::{
    conjunction_hypotheses, cyclic_abox, pac_from_exact, random_support, shatters, true_error, vc_examples, Distribution,
};
use elhlearn::reasoner::{answers_in, inseparable, Lang, Model};
use elhlearn::syntax::{parse_document, Assertion, ParseOptions, Query};
use elhlearn::teacher::{Oracle, Policy, Session};
use elhlearn::updates::{check_bisim_preservation, learn_with_updates, Preservation};
use elhlearn::Error;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Learn ELH terminologies that are query-inseparable from a hidden target over a fixed ABox.
#[derive(Parser)]
#[command(name = "elhlearn", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a KB entails each query of a query file.
    Reason {
        tbox: PathBuf,
        abox: PathBuf,
        queries: PathBuf,
        /// Print the derived labels of the individuals the queries mention.
        #[arg(long)]
        explain: bool,
    },
    /// Run an exact learner against a simulated teacher.
    Learn {
        mode: Lang,
        target: PathBuf,
        abox: PathBuf,
        #[arg(long, default_value = "minimal-deterministic")]
        oracle_policy: Policy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of oracle calls.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Where to write the hypothesis; stdout by default.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Teacher transcript as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// IQ only: generalise the hypothesis so it survives data updates.
        #[arg(long)]
        with_updates: bool,
    },
    /// Check whether IQ-inseparability over the fixed ABox carries over to an updated one.
    UpdateCheck {
        target: PathBuf,
        hypothesis: PathBuf,
        abox: PathBuf,
        updated: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build or replay batches of classified examples.
    #[command(subcommand)]
    Batch(BatchCmd),
    /// PAC experiments.
    #[command(subcommand)]
    Pac(PacCmd),
    /// Shattering checks on the cyclic ABoxes.
    #[command(subcommand)]
    Vc(VcCmd),
}

#[derive(Subcommand)]
enum BatchCmd {
    Build {
        mode: Lang,
        target: PathBuf,
        abox: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Learn {
        mode: Lang,
        batch: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PacCmd {
    Run {
        mode: Lang,
        target: PathBuf,
        abox: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Size of the random uniform support.
        #[arg(long, default_value_t = 200)]
        support: usize,
        /// Distribution file to use instead of a random support; reseeded per trial.
        #[arg(long)]
        dist: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Subcommand)]
enum VcCmd {
    Check {
        #[arg(long)]
        n: usize,
        /// Add `s(a_n,a_n)`.
        #[arg(long = "loop")]
        self_loop: bool,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = err.downcast_ref::<Error>().map_or(2, |e| e.exit_code() as u8);
        Failure { code, err }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure { code: err.exit_code() as u8, err: err.into() }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> anyhow::Result<elhlearn::syntax::Document> {
    let text = read(path)?;
    parse_document(&text, ParseOptions::default()).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn reason(tbox: &Path, abox: &Path, queries: &Path, explain: bool) -> CmdResult {
    let t = load(tbox)?.tbox;
    let a = load(abox)?.abox;
    let qs = load(queries)?.queries;
    if qs.is_empty() {
        return Err(anyhow::anyhow!("{} holds no `Q:` line", queries.display()).into());
    }
    let m = Model::build(&t, &a);
    let mut all = true;
    for q in &qs {
        let yes = answers_in(&m, q)?;
        all &= yes;
        println!("{}", if yes { "ENTAILED" } else { "NOT_ENTAILED" });
        if explain {
            for ind in query_individuals(q) {
                if let Some(v) = m.node_of(&ind) {
                    let labels: Vec<String> = m.labels[v].iter().map(|n| n.to_string()).collect();
                    println!("  {ind}: {}", labels.join(", "));
                }
            }
        }
    }
    Ok(if all { 0 } else { 1 })
}

fn query_individuals(q: &Query) -> Vec<elhlearn::syntax::Name> {
    match q {
        Query::Aq(Assertion::Concept { ind, .. }) | Query::Iq { ind, .. } => vec![ind.clone()],
        Query::Aq(Assertion::Role { from, to, .. }) | Query::IqRole { from, to, .. } => vec![from.clone(), to.clone()],
        Query::Cq(cq) => cq.individuals().into_iter().collect(),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LearnStats {
    mode: String,
    policy: String,
    mq_count: u64,
    eq_count: u64,
    total_query_input_size: u64,
    largest_counterexample: u64,
    hypothesis_size: usize,
    iterations: usize,
    conversions: usize,
    verified_inseparable: bool,
    budget_exceeded: bool,
}

#[allow(clippy::too_many_arguments)]
fn learn(
    mode: Lang,
    target: &Path,
    abox: &Path,
    policy: Policy,
    seed: u64,
    budget: Option<u64>,
    stats: Option<&Path>,
    out: Option<&Path>,
    transcript: Option<&Path>,
    with_updates: bool,
) -> CmdResult {
    let t = load(target)?.tbox;
    let a0 = load(abox)?.abox;
    let policy = match policy {
        Policy::SeedRandomized(_) => Policy::SeedRandomized(seed),
        p => p,
    };
    let mut session = Session::new(t.clone(), a0.clone(), mode, policy)?;
    if let Some(b) = budget {
        session = session.with_budget(b);
    }
    let result: elhlearn::Result<Run> = if with_updates {
        if mode != Lang::Iq {
            return Err(Error::Config("--with-updates needs mode iq".into()).into());
        }
        learn_with_updates(&mut session, &IqOptions::default())
    } else {
        learner::learn(&mut session, mode)
    };
    let (hypothesis, run, exceeded) = match result {
        Ok(run) => (run.hypothesis.clone(), Some(run), false),
        Err(Error::Budget(msg)) => {
            log::warn!("budget exceeded: {msg}");
            (session.last_hypothesis().cloned().unwrap_or_default(), None, true)
        }
        Err(e) => return Err(e.into()),
    };
    let verified = inseparable(&t, &hypothesis, &a0, mode).is_yes();
    let c = session.counters();
    let report = LearnStats {
        mode: mode.to_string(),
        policy: policy.to_string(),
        mq_count: c.mq_count,
        eq_count: c.eq_count,
        total_query_input_size: c.total_input_size(),
        largest_counterexample: c.largest_counterexample,
        hypothesis_size: hypothesis.size(),
        iterations: run.as_ref().map_or(0, |r| r.iterations.len()),
        conversions: run.as_ref().map_or(0, |r| r.iterations.iter().map(|i| i.conversions).sum()),
        verified_inseparable: verified,
        budget_exceeded: exceeded,
    };
    if let Some(p) = stats {
        write_json(p, &report)?;
    }
    if let Some(p) = transcript {
        fs::write(p, session.transcript_jsonl()).with_context(|| format!("writing {}", p.display()))?;
    }
    emit(out, &hypothesis.to_string())?;
    Ok(if exceeded {
        4
    } else if verified {
        0
    } else {
        1
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct UpdateReport {
    inseparable_on_fixed: bool,
    bisimulation_criterion: &'static str,
    inseparable_on_updated: bool,
}

fn update_check(target: &Path, hypothesis: &Path, abox: &Path, updated: &Path, json: Option<&Path>) -> CmdResult {
    let t = load(target)?.tbox;
    let h = load(hypothesis)?.tbox;
    let a0 = load(abox)?.abox;
    let a = load(updated)?.abox;
    let criterion = match check_bisim_preservation(&t, &h, &a0, &a) {
        Ok(Preservation::Preserved) => "preserved",
        Ok(Preservation::NotApplicable) => "not-applicable",
        Err(Error::Contract(msg)) => {
            log::info!("bisimulation criterion precondition fails: {msg}");
            "precondition-fails"
        }
        Err(e) => return Err(e.into()),
    };
    let report = UpdateReport {
        inseparable_on_fixed: inseparable(&t, &h, &a0, Lang::Iq).is_yes(),
        bisimulation_criterion: criterion,
        inseparable_on_updated: inseparable(&t, &h, &a, Lang::Iq).is_yes(),
    };
    if let Some(p) = json {
        write_json(p, &report)?;
    }
    let kept = report.inseparable_on_fixed && report.inseparable_on_updated;
    println!("{}", if kept { "PRESERVED" } else { "NOT_PRESERVED" });
    Ok(if kept { 0 } else { 1 })
}

fn batch(cmd: BatchCmd) -> CmdResult {
    match cmd {
        BatchCmd::Build { mode, target, abox, out } => {
            let t = load(&target)?.tbox;
            let a0 = load(&abox)?.abox;
            let b = build_batch(&t, &a0, mode)?;
            log::info!("batch of {} examples, total size {}", b.len(), b.size());
            emit(out.as_deref(), &b.to_jsonl())?;
        }
        BatchCmd::Learn { mode, batch, out } => {
            let b = Batch::from_jsonl(&read(&batch)?)?;
            let h = learn_from_batch(&b, mode)?;
            emit(out.as_deref(), &h.to_string())?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Trial {
    trial: u64,
    schedule: Vec<u64>,
    samples_used: u64,
    true_error: f64,
}

#[allow(clippy::too_many_arguments)]
fn pac_run(
    mode: Lang,
    target: &Path,
    abox: &Path,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    support: usize,
    dist: Option<&Path>,
    csv: bool,
) -> CmdResult {
    let t = load(target)?.tbox;
    let a0 = load(abox)?.abox;
    let fixed = dist.map(|p| read(p).and_then(|s| Ok(Distribution::from_json(&s)?))).transpose()?;
    if csv {
        println!("trial,stages,samples_used,true_error,schedule");
    }
    let mut good = 0;
    for k in 0..trials {
        let s = seed.wrapping_add(k);
        let d = match &fixed {
            Some(d) => Distribution::new(d.examples().to_vec(), d.weights().to_vec(), s)?,
            None => Distribution::uniform(random_support(&t, &a0, mode, support, s), s)?,
        };
        let mut session = Session::new(t.clone(), a0.clone(), mode, Policy::MinimalDeterministic)?;
        let (h, report) = pac_from_exact(&mut session, eps, delta, d.clone())?;
        let err = true_error(&h, &t, &d)?;
        good += u64::from(err <= eps);
        let trial = Trial { trial: k, schedule: report.schedule, samples_used: report.samples_used, true_error: err };
        if csv {
            let sched: Vec<String> = trial.schedule.iter().map(u64::to_string).collect();
            println!("{},{},{},{},{}", k, trial.schedule.len(), trial.samples_used, err, sched.join(";"));
        } else {
            println!("{}", serde_json::to_string(&trial).map_err(anyhow::Error::from)?);
        }
    }
    log::info!("{good}/{trials} trials within epsilon");
    eprintln!("{good}/{trials} trials with trueError <= {eps}");
    Ok(0)
}

fn vc_check(n: usize, self_loop: bool, budget: usize) -> CmdResult {
    let mut a = cyclic_abox(n)?;
    if self_loop {
        a.insert(Assertion::role("s", format!("a{n}"), format!("a{n}")));
    }
    let yes = shatters(&conjunction_hypotheses(n), &vc_examples(&a, n), budget)?;
    println!("{}", if yes { "SHATTERED" } else { "NOT_SHATTERED" });
    Ok(if yes { 0 } else { 1 })
}

fn run(cli: Cli) -> CmdResult {
    match cli.cmd {
        Cmd::Reason { tbox, abox, queries, explain } => reason(&tbox, &abox, &queries, explain),
        Cmd::Learn { mode, target, abox, oracle_policy, seed, budget, stats, out, transcript, with_updates } => learn(
            mode,
            &target,
            &abox,
            oracle_policy,
            seed,
            budget,
            stats.as_deref(),
            out.as_deref(),
            transcript.as_deref(),
            with_updates,
        ),
        Cmd::UpdateCheck { target, hypothesis, abox, updated, json } => {
            update_check(&target, &hypothesis, &abox, &updated, json.as_deref())
        }
        Cmd::Batch(cmd) => batch(cmd),
        Cmd::Pac(PacCmd::Run { mode, target, abox, eps, delta, trials, seed, support, dist, csv }) => {
            pac_run(mode, &target, &abox, eps, delta, trials, seed, support, dist.as_deref(), csv)
        }
        Cmd::Vc(VcCmd::Check { n, self_loop, budget }) => vc_check(n, self_loop, budget),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ELH_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

