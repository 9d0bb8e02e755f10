use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hardrods::analytics::{
    expected_lifetime, forward_y_model_a, green_function, predicted_density_model_c, predicted_gap,
    solve_v0, stationary_density, AnalyticProfile, DiffusionParams,
};
use hardrods::harness::criteria::{pooled_scaling, tagged_tracks};
use hardrods::harness::{run_experiment, verify, ExperimentConfig, Suite};
use hardrods::Result;

/// Hard Brownian rod simulator.
#[derive(Parser)]
#[command(name = "hardrods", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write profile, summary, snapshots and checkpoints.
    Simulate(SimulateArgs),
    /// Tabulate a closed-form quantity as CSV on stdout.
    Analytic(AnalyticArgs),
    /// Run an acceptance suite; exits non-zero if a gating check fails.
    Verify(VerifyArgs),
    /// Increment scaling of tagged rods in the influx-killed system.
    Tagged(TaggedArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long)]
    barrier_speed: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long)]
    snapshot_interval: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    profile_lo: Option<f64>,
    #[arg(long)]
    profile_hi: Option<f64>,
    /// Measurement windows, `lo:hi,lo:hi`.
    #[arg(long)]
    windows: Option<String>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `bridge-exact` or `grid-skorohod`.
    #[arg(long)]
    scheme: Option<String>,
    /// `push-at-origin` or `wait-for-vacancy` (jump-reset system).
    #[arg(long)]
    reinsertion: Option<String>,
    /// Run replicas on one thread.
    #[arg(long)]
    serial: bool,
    /// Output directory. Defaults to the `out` key of the configuration
    /// file, then to `$HARDRODS_OUT`, then to `hardrods-out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Function {
    StationaryDensity,
    Green,
    Lifetime,
    ProfileA,
    ProfileC,
    ForwardA,
    Gap,
    V0,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long, value_enum)]
    function: Function,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Mass budget of the barrier-pushed system.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Rate override for `forward-a` (defaults to 2a/sigma2).
    #[arg(long)]
    lambda: Option<f64>,
    /// Kill level for `green` and `lifetime`.
    #[arg(long, default_value_t = 0.5)]
    v1: f64,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 11)]
    points: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, env = "HARDRODS_OUT", default_value = "hardrods-out")]
    out: PathBuf,
}

#[derive(Args)]
struct TaggedArgs {
    #[arg(long, default_value_t = 0.5)]
    drift: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.002)]
    epsilon: f64,
    #[arg(long, default_value_t = 2e-4)]
    h: f64,
    #[arg(long, default_value_t = 20.0)]
    burn_in: f64,
    #[arg(long, default_value_t = 30.0)]
    t_end: f64,
    /// Track every k-th rod born after the burn-in.
    #[arg(long, default_value_t = 5)]
    every: u64,
    /// Comma-separated time lags.
    #[arg(long, default_value = "0.002,0.004,0.008,0.016,0.032")]
    lags: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "HARDRODS_OUT", default_value = "hardrods-out")]
    out: PathBuf,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig {
        out: default_out(),
        ..ExperimentConfig::default()
    };
    if let Some(path) = &args.config {
        cfg.apply_text(&fs::read_to_string(path)?)?;
    }
    let flags: [(&str, Option<String>); 20] = [
        ("model", args.model),
        ("epsilon", args.epsilon.map(|v| v.to_string())),
        ("sigma2", args.sigma2.map(|v| v.to_string())),
        ("drift", args.drift.map(|v| v.to_string())),
        ("barrier_speed", args.barrier_speed.map(|v| v.to_string())),
        ("n", args.n.map(|v| v.to_string())),
        ("b", args.b.map(|v| v.to_string())),
        ("h", args.h.map(|v| v.to_string())),
        ("t_end", args.t_end.map(|v| v.to_string())),
        ("burn_in", args.burn_in.map(|v| v.to_string())),
        (
            "snapshot_interval",
            args.snapshot_interval.map(|v| v.to_string()),
        ),
        ("bins", args.bins.map(|v| v.to_string())),
        ("profile_lo", args.profile_lo.map(|v| v.to_string())),
        ("profile_hi", args.profile_hi.map(|v| v.to_string())),
        ("windows", args.windows),
        ("replicas", args.replicas.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("scheme", args.scheme),
        ("reinsertion", args.reinsertion),
        ("parallel", args.serial.then(|| "false".to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    let outcome = run_experiment(&cfg)?;
    for r in &outcome.summary.reports {
        println!("{}", r.line());
    }
    println!(
        "{} snapshots, mean alive {:.2}; wrote {} files under {}",
        outcome.summary.snapshot_count,
        outcome.summary.mean_alive,
        outcome.files.len(),
        cfg.out.display()
    );
    Ok(())
}

fn default_out() -> PathBuf {
    std::env::var_os("HARDRODS_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("hardrods-out"))
}

fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![from];
    }
    (0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect()
}

fn analytic(args: AnalyticArgs) -> Result<()> {
    let p = DiffusionParams::new(args.a, args.sigma2, args.epsilon)?;
    let lambda = args.lambda.unwrap_or_else(|| p.rate());
    match args.function {
        Function::V0 => {
            println!("v0\n{}", solve_v0(&p)?);
            return Ok(());
        }
        Function::Lifetime => {
            println!(
                "v1,lifetime\n{},{}",
                args.v1,
                expected_lifetime(&p, args.v1)
            );
            return Ok(());
        }
        _ => {}
    }
    println!("x,value");
    let profile_a = AnalyticProfile::model_a(DiffusionParams {
        b: Some(args.b),
        ..p
    });
    for x in grid(args.from, args.to, args.points) {
        let v = match args.function {
            Function::StationaryDensity => stationary_density(&p, x)?,
            Function::Green => green_function(&p, args.v1, x)?,
            Function::ProfileA => profile_a.evaluate(x)?,
            Function::ProfileC => predicted_density_model_c(x, &p)?,
            Function::ForwardA => forward_y_model_a(x, args.b, lambda),
            Function::Gap => predicted_gap(x, &p)?,
            Function::V0 | Function::Lifetime => unreachable!(),
        };
        println!("{x},{v}");
    }
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let suite: Suite = args.suite.parse()?;
    let path = args.out.join(format!("verify-{}.json", args.suite));
    let report = verify(suite, Some(&path), |r| println!("{}", r.line()))?;
    println!("report written to {}", path.display());
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn tagged(args: TaggedArgs) -> Result<()> {
    let lags = args
        .lags
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| hardrods::Error::Config(format!("bad lag '{s}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let params = DiffusionParams::new(args.drift, args.sigma2, args.epsilon)?;
    let max_lag = lags.iter().cloned().fold(0.0, f64::max);
    let tracks = tagged_tracks(
        params,
        args.h,
        args.burn_in,
        args.t_end,
        args.every.max(1),
        10.0 * max_lag,
        args.seed,
    )?;
    let (slope, vars) = pooled_scaling(&tracks, &lags)?;
    fs::create_dir_all(&args.out)?;
    let mut csv = String::from("lag,variance\n");
    for (l, v) in lags.iter().zip(&vars) {
        csv.push_str(&format!("{l},{v}\n"));
    }
    write(&args.out.join("tagged-variances.csv"), &csv)?;
    let json = serde_json::json!({
        "slope": slope,
        "tracks": tracks.len(),
        "lags": lags,
        "variances": vars,
        "params": params,
        "h": args.h,
        "burn_in": args.burn_in,
        "t_end": args.t_end,
        "seed": args.seed,
    });
    write(
        &args.out.join("tagged.json"),
        &(serde_json::to_string_pretty(&json)? + "\n"),
    )?;
    println!("slope {slope:.4} from {} tracks", tracks.len());
    Ok(())
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| ExitCode::SUCCESS),
        Command::Analytic(a) => analytic(a).map(|_| ExitCode::SUCCESS),
        Command::Verify(a) => run_verify(a),
        Command::Tagged(a) => tagged(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
