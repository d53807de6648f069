//! `vincular` — count vincular patterns, sample conjugacy-class
//! permutations, run CLT experiments and audit the weighted-graph bounds.
//!
//! Exit codes: 0 on success (all gates passed), 1 when a statistical gate
//! failed, 2 on usage or configuration errors.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use rand::Rng;

use vincular::cltlab::{
    estimate_limit_variance, phi_estimate, run_clt, ExperimentConfig, GateThresholds, ReportFormat,
};
use vincular::cumulants::ClassCumulants;
use vincular::pattern::count_fast;
use vincular::perm::IntegerPartition;
use vincular::sampler::{sample_class, ClassSpec, RandomStream};
use vincular::wdg::{r_bound, r_value, t_ell_value, EdgeMultiset, TellMode};
use vincular::{Error, Permutation, VincularPattern};

#[derive(Parser)]
#[command(name = "vincular", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count the occurrences of a vincular pattern in a permutation.
    Count(CountArgs),
    /// Sample uniform random permutations from a conjugacy class.
    Sample(SampleArgs),
    /// Monte Carlo CLT experiment over an n-grid, with a JSON/CSV report.
    Clt(CltArgs),
    /// Estimate the limiting normalized variance by 1/n extrapolation.
    Variance(CltArgs),
    /// Estimate the one-point conditional pattern density φ^π_{p1}(x, y).
    Phi(PhiArgs),
    /// Audit the R / T_ℓ / cumulant-ratio bounds, emitting CSV.
    WdgAudit(WdgAuditArgs),
    /// Exact joint moment and mixed cumulant of B-indicators on a class.
    Cumulants(CumulantArgs),
}

#[derive(Args)]
struct CountArgs {
    /// Permutation in one-line notation, e.g. "2,1,7,3,4,5,6".
    #[arg(long)]
    perm: Permutation,
    /// Pattern as "132|1" (π = 132, adjacency {1}); "132|" is classical.
    #[arg(long)]
    pattern: VincularPattern,
}

#[derive(Args)]
struct ClassArgs {
    /// Explicit cycle type, e.g. "3+3+2+1".
    #[arg(long, conflicts_with_all = ["p1", "p2"])]
    lambda: Option<IntegerPartition>,
    /// Asymptotic proportion of fixed points.
    #[arg(long, requires = "p2")]
    p1: Option<f64>,
    /// Asymptotic proportion of 2-cycles (p1 + 2 p2 <= 1).
    #[arg(long, requires = "p1")]
    p2: Option<f64>,
}

impl ClassArgs {
    fn to_spec(&self) -> Result<ClassSpec, Error> {
        match (&self.lambda, self.p1, self.p2) {
            (Some(lam), None, None) => Ok(ClassSpec::Explicit(lam.clone())),
            (None, Some(p1), Some(p2)) => ClassSpec::proportions(p1, p2),
            _ => Err(Error::Parse(
                "need either --lambda or both --p1 and --p2".into(),
            )),
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Size of the sampled permutations (required with --p1/--p2).
    #[arg(long)]
    n: Option<usize>,
    /// Number of samples.
    #[arg(long = "N", default_value_t = 1)]
    replicas: usize,
    /// Master seed; drawn from system entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CltArgs {
    /// Pattern, e.g. "21|1" for descents.
    #[arg(long)]
    pattern: VincularPattern,
    #[command(flatten)]
    class: ClassArgs,
    /// Comma-separated strictly increasing sizes, e.g. "100,200,400".
    #[arg(long = "n-grid", value_delimiter = ',')]
    n_grid: Vec<usize>,
    /// Replicas per grid size.
    #[arg(long = "N", default_value_t = 10_000)]
    replicas: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Gate on the KS distance of studentized counts to N(0,1).
    #[arg(long)]
    ks_max: Option<f64>,
    /// Gate on |skewness| (at 4 jackknife standard errors).
    #[arg(long)]
    skew_max: Option<f64>,
    /// Gate on |excess kurtosis| (at 4 jackknife standard errors).
    #[arg(long)]
    kurt_max: Option<f64>,
    /// Write the JSON report here ("-" or omitted prints to stdout).
    #[arg(long)]
    out: Option<String>,
    /// Also write a CSV flattening (one row per n and statistic).
    #[arg(long)]
    csv: Option<String>,
    /// Refuse runs whose estimated cost exceeds this many operations.
    #[arg(long, default_value_t = 2e10)]
    max_ops: f64,
}

#[derive(Args)]
struct PhiArgs {
    /// Classical pattern, e.g. "132|" (the adjacency set must be empty).
    #[arg(long)]
    pattern: VincularPattern,
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long = "N", default_value_t = 100_000)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct WdgAuditArgs {
    /// Pattern for the R / T rows.
    #[arg(long)]
    pattern: VincularPattern,
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// Classes for the cumulant-ratio rows; defaults to (n), the
    /// near-involution and (1^n) at each size.
    #[arg(long)]
    lambda: Vec<IntegerPartition>,
    /// ℓ for the sampled T_ℓ rows.
    #[arg(long, default_value_t = 2)]
    ell: usize,
    /// Random ℓ-tuples tried per sampled T_ℓ row.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// α samples per (n, λ, r) cumulant cell.
    #[arg(long, default_value_t = 200)]
    alpha_samples: usize,
    /// Largest cumulant order r for the ratio rows.
    #[arg(long, default_value_t = 3)]
    r_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct CumulantArgs {
    /// Cycle type of the class, e.g. "2+1".
    #[arg(long)]
    lambda: IntegerPartition,
    /// Indicator indices as 1-based "i:j" pairs, e.g. "1:2,3:4".
    #[arg(long)]
    alpha: EdgeMultiset,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Count(args) => {
            println!("{}", count_fast(&args.perm, &args.pattern));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample(args) => run_sample(args),
        Command::Clt(args) => run_clt_command(args),
        Command::Variance(args) => run_variance_command(args),
        Command::Phi(args) => run_phi(args),
        Command::WdgAudit(args) => run_wdg_audit(args),
        Command::Cumulants(args) => run_cumulants(args),
    }
}

fn entropy_seed(seed: Option<u64>) -> (u64, bool) {
    match seed {
        Some(s) => (s, false),
        None => (rand::rngs::OsRng.gen(), true),
    }
}

fn run_sample(args: SampleArgs) -> Result<ExitCode, Error> {
    let spec = args.class.to_spec()?;
    let n = match (&spec, args.n) {
        (ClassSpec::Explicit(lam), None) => lam.n(),
        (ClassSpec::Explicit(lam), Some(n)) if lam.n() == n => n,
        (ClassSpec::Explicit(lam), Some(n)) => {
            return Err(Error::SizeMismatch {
                left: lam.n(),
                right: n,
            })
        }
        (ClassSpec::Proportions { .. }, Some(n)) => n,
        (ClassSpec::Proportions { .. }, None) => {
            return Err(Error::Parse("--n is required with --p1/--p2".into()))
        }
    };
    let (seed, from_entropy) = entropy_seed(args.seed);
    if from_entropy {
        println!("# seed: {seed}");
    }
    let lambda = spec.resolve(n)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for replica in 0..args.replicas {
        let mut rng = RandomStream::new(seed, replica as u64).rng();
        let sigma = sample_class(&lambda, &mut rng);
        writeln!(out, "{sigma}").map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn build_config(args: &CltArgs) -> Result<(ExperimentConfig, bool), Error> {
    let (seed, from_entropy) = entropy_seed(args.seed);
    let cfg = ExperimentConfig {
        pattern: args.pattern.clone(),
        class: args.class.to_spec()?,
        n_grid: args.n_grid.clone(),
        replicas: args.replicas,
        seed,
        max_ops: args.max_ops,
        gates: GateThresholds {
            ks: args.ks_max,
            skewness: args.skew_max,
            excess_kurtosis: args.kurt_max,
        },
        output: args.out.clone(),
        format: match (&args.out, &args.csv) {
            (_, None) => ReportFormat::Json,
            (None, Some(_)) => ReportFormat::Csv,
            (Some(_), Some(_)) => ReportFormat::Both,
        },
    };
    Ok((cfg, from_entropy))
}

fn run_clt_command(args: CltArgs) -> Result<ExitCode, Error> {
    let (cfg, _) = build_config(&args)?;
    let report = run_clt(&cfg)?;
    match &args.out {
        Some(path) if path != "-" => {
            std::fs::write(path, report.to_json()).map_err(|e| Error::Parse(e.to_string()))?;
            eprintln!("report written to {path}");
        }
        _ => println!("{}", report.to_json()),
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, report.to_csv()).map_err(|e| Error::Parse(e.to_string()))?;
        eprintln!("csv written to {path}");
    }
    Ok(if report.all_gates_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_variance_command(args: CltArgs) -> Result<ExitCode, Error> {
    let (cfg, _) = build_config(&args)?;
    let fit = estimate_limit_variance(&cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&fit).expect("fit serializes")
    );
    Ok(ExitCode::SUCCESS)
}

fn run_phi(args: PhiArgs) -> Result<ExitCode, Error> {
    if !args.pattern.is_classical() {
        return Err(Error::Parse(
            "phi is defined for classical patterns; drop the adjacency set".into(),
        ));
    }
    let (seed, from_entropy) = entropy_seed(args.seed);
    if from_entropy {
        println!("# seed: {seed}");
    }
    let est = phi_estimate(
        args.pattern.pattern(),
        args.p1,
        args.x,
        args.y,
        args.trials,
        RandomStream::new(seed, 0),
    )?;
    println!(
        "{{\"phi\": {}, \"stderr\": {}, \"trials\": {}}}",
        est.value, est.stderr, args.trials
    );
    Ok(ExitCode::SUCCESS)
}

fn default_lambdas(n: usize) -> Vec<IntegerPartition> {
    let mut two = vec![2; n / 2];
    two.extend(std::iter::repeat_n(1, n % 2));
    vec![
        IntegerPartition::new(vec![n]).expect("valid"),
        IntegerPartition::new(two).expect("valid"),
        IntegerPartition::new(vec![1; n]).expect("valid"),
    ]
}

fn run_wdg_audit(args: WdgAuditArgs) -> Result<ExitCode, Error> {
    if args.n_min < args.pattern.k() || args.n_min > args.n_max {
        return Err(Error::Parse("need pattern size <= n-min <= n-max".into()));
    }
    let mut csv = String::from("n,lambda,pattern,quantity,value,bound,ratio\n");
    let m = args.pattern.block_count() as i32;
    for n in args.n_min..=args.n_max {
        let pattern_name = args.pattern.to_string();
        match r_value(&args.pattern, n) {
            Ok(value) => {
                let bound = r_bound(&args.pattern, n);
                csv.push_str(&format!(
                    "{n},,{pattern_name},R,{value},{bound},{}\n",
                    value / bound
                ));
            }
            Err(Error::CostGuard { .. }) => {
                eprintln!("skipping R at n = {n}: cost guard");
            }
            Err(e) => return Err(e),
        }
        let t_bound = (n as f64).powi(m - 1);
        match t_ell_value(&args.pattern, n, 1, TellMode::Exact) {
            Ok(t1) => {
                csv.push_str(&format!(
                    "{n},,{pattern_name},T1,{},{t_bound},{}\n",
                    t1.value,
                    t1.value / t_bound
                ));
            }
            Err(Error::CostGuard { .. }) => {
                eprintln!("skipping exact T1 at n = {n}: cost guard");
            }
            Err(e) => return Err(e),
        }
        match t_ell_value(
            &args.pattern,
            n,
            args.ell,
            TellMode::Sampled {
                trials: args.trials,
                seed: args.seed,
            },
        ) {
            Ok(tl) => {
                csv.push_str(&format!(
                    "{n},,{pattern_name},Tl_sampled,{},{t_bound},{}\n",
                    tl.value,
                    tl.value / t_bound
                ));
            }
            Err(Error::CostGuard { .. }) => {
                eprintln!("skipping sampled T{} at n = {n}: cost guard", args.ell);
            }
            Err(e) => return Err(e),
        }

        let lambdas = if args.lambda.is_empty() {
            default_lambdas(n)
        } else {
            args.lambda.iter().filter(|l| l.n() == n).cloned().collect()
        };
        for lambda in lambdas {
            let engine = ClassCumulants::new(&lambda)?;
            let mut rng = RandomStream::new(args.seed, n as u64).rng();
            // (|κ|, envelope n^{1-#S}) at the worst observed ratio
            let mut best: Option<(f64, f64)> = None;
            for r in 1..=args.r_max {
                for _ in 0..args.alpha_samples {
                    let pairs: Vec<(usize, usize)> = (0..r)
                        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                        .collect();
                    let alpha = EdgeMultiset::new(n, pairs)?;
                    let kappa = engine
                        .mixed_cumulant_b(&alpha)?
                        .to_f64()
                        .unwrap_or(f64::NAN)
                        .abs();
                    let envelope = (n as f64).powi(1 - alpha.support().len() as i32);
                    if best.is_none_or(|(k, e)| kappa / envelope > k / e) {
                        best = Some((kappa, envelope));
                    }
                }
            }
            if let Some((value, bound)) = best {
                csv.push_str(&format!(
                    "{n},{lambda},,kappa_ratio,{value},{bound},{}\n",
                    value / bound
                ));
            }
        }
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| Error::Parse(e.to_string()))?;
            eprintln!("audit written to {path}");
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_cumulants(args: CumulantArgs) -> Result<ExitCode, Error> {
    let alpha = args.alpha.with_n(args.lambda.n())?;
    let engine = ClassCumulants::new(&args.lambda)?;
    let moment = engine.joint_moment(&alpha)?;
    let kappa = engine.mixed_cumulant_b(&alpha)?;
    let ratio = engine.bound_ratio(&alpha)?;
    println!(
        "{{\"lambda\": \"{}\", \"alpha\": \"{}\", \"moment\": \"{}\", \"moment_float\": {}, \"cumulant\": \"{}\", \"cumulant_float\": {}, \"bound_ratio\": {}}}",
        args.lambda,
        alpha,
        moment,
        moment.to_f64().unwrap_or(f64::NAN),
        kappa,
        kappa.to_f64().unwrap_or(f64::NAN),
        ratio
    );
    Ok(ExitCode::SUCCESS)
}
