use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use axiomscope::milp::Backend;
use axiomscope::pabulib::{KPolicy, DEFAULT_MIN_AVG_BALLOT};
use axiomscope::{Axiom, CandidateSet, DEFAULT_ENUMERATION_CAP};
use axiomscope_cli::drivers::*;
use axiomscope_cli::input::{load_files, load_instances, load_one, parse_candidates, Skipped};
use axiomscope_cli::{CliError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "axiomscope", version, about = "Proportionality axioms for approval-based committee elections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// A pabulib file, or a directory of them.
    #[arg(long)]
    input: PathBuf,
    /// half | over:C | explicit:K | budget-avg-cost
    #[arg(long, default_value = "half")]
    k_policy: KPolicy,
    /// Skip non-approval files and files whose mean ballot is smaller.
    #[arg(long)]
    min_avg_ballot: Option<f64>,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Sampling {
    /// Sample until this many committees satisfy the axiom.
    #[arg(long, default_value_t = 1000)]
    accept: u64,
    /// With --delta: draw a fixed Hoeffding sample instead of --accept.
    #[arg(long, requires = "delta")]
    epsilon: Option<f64>,
    #[arg(long, requires = "epsilon")]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds per estimate.
    #[arg(long)]
    timeout: Option<f64>,
}

impl Sampling {
    fn opts(&self) -> Result<SampleOpts> {
        let effort = match (self.epsilon, self.delta) {
            (Some(epsilon), Some(delta)) => Effort::Hoeffding { epsilon, delta },
            _ => Effort::Accept(self.accept),
        };
        Ok(SampleOpts { effort, seed: self.seed, timeout: self.timeout.map(seconds).transpose()? })
    }
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| CliError::Usage(format!("bad timeout {s}")))
}

fn backend(name: &str) -> Result<Backend> {
    Ok(Backend::from_name(name)?)
}

#[derive(Subcommand)]
enum Command {
    /// Check one candidate set against an axiom.
    Check {
        #[command(flatten)]
        input: Input,
        /// Comma-separated project ids.
        #[arg(long)]
        committee: String,
        #[arg(long, default_value = "ejrp")]
        axiom: Axiom,
        #[command(flatten)]
        output: Output,
    },
    /// Exact number of committees satisfying an axiom.
    Count {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "jr")]
        axiom: Axiom,
        /// Comma-separated project ids every counted committee contains.
        #[arg(long, default_value = "")]
        must_contain: String,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Axiom fractions for every committee size (CSV).
    Ksweep {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',', default_value = "jr,ejrp")]
        axiom: Vec<Axiom>,
        #[command(flatten)]
        sampling: Sampling,
        /// Add exact fractions where enumeration fits this cap.
        #[arg(long)]
        exact_cap: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// JR and EJR+ fractions per instance (JSON).
    Fractions {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Fractions under several k-policies (JSON).
    Robustness {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "half,budget-avg-cost")]
        k_policies: Vec<KPolicy>,
        #[arg(long)]
        min_avg_ballot: Option<f64>,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// Average sampled or maximum committee distance (JSON).
    Distance {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "jr")]
        axiom: Axiom,
        /// avg_sampled | max_ilp
        #[arg(long, default_value = "avg_sampled")]
        mode: DistanceMode,
        #[command(flatten)]
        sampling: Sampling,
        /// enumeration | bnb | external
        #[arg(long, default_value = "enumeration")]
        backend: String,
        /// Solver seconds per instance (max_ilp).
        #[arg(long, default_value_t = 1800.0)]
        solver_timeout: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Approval score, prevalence and power per candidate (CSV).
    Importance {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "jr")]
        axiom: Axiom,
        #[command(flatten)]
        sampling: Sampling,
        /// Skip instances whose EJR+ fraction exceeds this.
        #[arg(long)]
        max_ejrp_fraction: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Pearson coefficients between importance measures (JSON).
    Correlate {
        /// CSV written by `importance`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Overlap of rule outcomes with top candidates per measure (CSV).
    RulesOverlap {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        max_ejrp_fraction: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Write synthetic elections as pabulib files.
    Gen {
        /// resampling | euclidean
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 150)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 0.75)]
        phi: f64,
        #[arg(long, default_value_t = 0.12)]
        radius: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of elections; seeds run from --seed upwards.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and solve one integer program (JSON).
    Ilp {
        #[command(flatten)]
        input: Input,
        /// jr-not-ejrp | diff | p-candidates
        #[arg(long)]
        problem: IlpProblem,
        #[arg(long, default_value = "jr")]
        axiom: Axiom,
        /// Comma-separated project ids (p-candidates).
        #[arg(long, default_value = "")]
        required: String,
        /// Use the model over candidate equivalence classes.
        #[arg(long)]
        quotient: bool,
        /// enumeration | bnb | external
        #[arg(long, default_value = "enumeration")]
        backend: String,
        /// Seconds.
        #[arg(long, default_value_t = 1800.0)]
        timeout: f64,
        /// Also write the model in LP format here.
        #[arg(long)]
        write_lp: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Split a dataset into usable and excluded files (JSON).
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_AVG_BALLOT)]
        min_avg_ballot: f64,
        #[command(flatten)]
        output: Output,
    },
}

fn report_skipped(skipped: &[Skipped]) {
    for s in skipped {
        eprintln!("skipped {}: {}", s.instance, s.reason);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Check { input, committee, axiom, output } => {
            let inst = load_one(&input.input, input.k_policy)?;
            let w = parse_candidates(&inst.election, &committee)?;
            write_json(&cmd_check(&inst, &w, axiom)?, output.out.as_deref())
        }
        Command::Count { input, axiom, must_contain, cap, output } => {
            let inst = load_one(&input.input, input.k_policy)?;
            let must = parse_candidates(&inst.election, &must_contain)?;
            write_json(&cmd_count(&inst, axiom, &must, cap)?, output.out.as_deref())
        }
        Command::Ksweep { input, axiom, sampling, exact_cap, output } => {
            let inst = load_one(&input.input, input.k_policy)?;
            let rows = cmd_ksweep(&inst, &axiom, &sampling.opts()?, exact_cap)?;
            for r in rows.iter().filter(|r| r.status != Status::Ok) {
                eprintln!("k={} {}: {:?}", r.k, r.axiom, r.status);
            }
            write_csv(&rows, output.out.as_deref())
        }
        Command::Fractions { input, sampling, output } => {
            let (instances, skipped) = load_instances(&input.input, input.k_policy, input.min_avg_ballot)?;
            report_skipped(&skipped);
            let report = cmd_fractions(&instances, skipped, input.k_policy, &sampling.opts()?)?;
            write_json(&report, output.out.as_deref())
        }
        Command::Robustness { input, k_policies, min_avg_ballot, sampling, output } => {
            let files = load_files(&input)?;
            let report = cmd_robustness(&files, &k_policies, min_avg_ballot, &sampling.opts()?)?;
            for r in &report.reports {
                for s in &r.skipped {
                    eprintln!("skipped {} under {}: {}", s.instance, r.k_policy, s.reason);
                }
            }
            write_json(&report, output.out.as_deref())
        }
        Command::Distance { input, axiom, mode, sampling, backend: name, solver_timeout, output } => {
            let (instances, skipped) = load_instances(&input.input, input.k_policy, input.min_avg_ballot)?;
            report_skipped(&skipped);
            let report = cmd_distance(
                &instances,
                skipped,
                axiom,
                mode,
                &sampling.opts()?,
                &backend(&name)?,
                seconds(solver_timeout)?,
            )?;
            write_json(&report, output.out.as_deref())
        }
        Command::Importance { input, axiom, sampling, max_ejrp_fraction, output } => {
            let (instances, mut skipped) = load_instances(&input.input, input.k_policy, input.min_avg_ballot)?;
            let (rows, more) = cmd_importance(&instances, axiom, &sampling.opts()?, max_ejrp_fraction)?;
            skipped.extend(more);
            report_skipped(&skipped);
            write_csv(&rows, output.out.as_deref())
        }
        Command::Correlate { input, output } => {
            let rows = read_importance_csv(&input)?;
            write_json(&cmd_correlate(&rows), output.out.as_deref())
        }
        Command::RulesOverlap { input, sampling, max_ejrp_fraction, output } => {
            let (instances, mut skipped) = load_instances(&input.input, input.k_policy, input.min_avg_ballot)?;
            let (rows, more) = cmd_rules_overlap(&instances, &sampling.opts()?, max_ejrp_fraction)?;
            skipped.extend(more);
            report_skipped(&skipped);
            write_csv(&rows, output.out.as_deref())
        }
        Command::Gen { model, n, m, k, p, phi, radius, dim, seed, count, out } => {
            let model = match model.as_str() {
                "resampling" => GenModel::Resampling { p, phi },
                "euclidean" => GenModel::Euclidean { radius, dim },
                other => return Err(CliError::Usage(format!("unknown model `{other}`"))),
            };
            for path in cmd_gen(model, n, m, k, seed, count, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Ilp { input, problem, axiom, required, quotient, backend: name, timeout, write_lp, output } => {
            let inst = load_one(&input.input, input.k_policy)?;
            let required = if required.is_empty() {
                CandidateSet::empty()
            } else {
                parse_candidates(&inst.election, &required)?
            };
            let model = build_model(&inst.election, problem, axiom, &required, quotient)?;
            let report = cmd_ilp(&inst, &model, &backend(&name)?, seconds(timeout)?, write_lp.as_deref())?;
            write_json(&report, output.out.as_deref())
        }
        Command::Filter { input, min_avg_ballot, output } => {
            let files = load_files(&input)?;
            write_json(&cmd_filter(&files, min_avg_ballot), output.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
