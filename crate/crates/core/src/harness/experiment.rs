//! Replica scheduling and experiment artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{model_name, scheme_name, ExperimentConfig};
use crate::analytics::{AnalyticProfile, DiffusionParams};
use crate::error::Result;
use crate::measurement::{density_profile, density_window, gap_stats, DensityProfile};
use crate::particles::{
    init_model_a_pseudostationary, init_model_c, init_model_r, step_model_a, step_model_c,
    step_model_r, write_checkpoint, ModelKind, SystemState, PROJECTION_TOL,
};
use crate::sde_kernel::RandomStream;
use crate::statcheck::{profile_deviation, seed_digest, Orientation, StatReport};

/// Initial state of replica `stream` for `cfg`.
pub fn initial_state(cfg: &ExperimentConfig, stream: &mut RandomStream) -> Result<SystemState> {
    match cfg.model {
        ModelKind::BarrierPushed => init_model_a_pseudostationary(cfg.params, stream),
        ModelKind::InfluxKilled => init_model_c(cfg.params),
        ModelKind::JumpReset => init_model_r(cfg.params),
    }
}

/// Advance `state` by one step of size `cfg.h`.
pub fn advance(
    cfg: &ExperimentConfig,
    state: &mut SystemState,
    stream: &mut RandomStream,
) -> Result<()> {
    match cfg.model {
        ModelKind::BarrierPushed => step_model_a(state, cfg.h, stream, cfg.scheme),
        ModelKind::InfluxKilled => step_model_c(state, cfg.h, stream, cfg.scheme),
        ModelKind::JumpReset => step_model_r(state, cfg.h, stream, cfg.reinsertion),
    }
}

/// Check spacing, counts and (for the barrier-pushed system) the total mass
/// seen in a comoving window wide enough to hold every rod.
pub fn check_snapshot(state: &SystemState) -> Result<()> {
    state.check_invariants(PROJECTION_TOL)?;
    if state.model == ModelKind::BarrierPushed {
        let p = &state.params;
        let b = p.b.unwrap_or(state.alive() as f64 * p.epsilon);
        let reach = b + 10.0 * (p.sigma2 * state.t).sqrt() + 20.0 / p.rate();
        let mass = density_window(state, 0.0, reach)? * reach;
        if (mass - b).abs() > 1e-9 {
            return Err(crate::Error::Invariant(format!(
                "comoving mass {mass} differs from budget {b} at t = {}",
                state.t
            )));
        }
    }
    Ok(())
}

/// Per-replica measurements, averaged over the replica's snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaResult {
    pub replica: usize,
    pub profile: DensityProfile,
    pub snapshots: usize,
    pub window_density: Vec<f64>,
    /// Mean gap per window over the snapshots where it was defined.
    pub window_gap: Vec<Option<f64>>,
    pub mean_alive: f64,
    /// Right-end removals per unit time after the burn-in.
    pub exit_rate: f64,
    pub final_state: SystemState,
    pub snapshot_csv: String,
}

/// `t,k,center,left,right` rows of one state, `k` being the rod label.
pub fn snapshot_rows(state: &SystemState, out: &mut String) {
    let half = state.params.epsilon / 2.0;
    for (i, &c) in state.x.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            state.t,
            state.label(i),
            c,
            c - half,
            c + half
        )
        .unwrap();
    }
}

pub const SNAPSHOT_HEADER: &str = "t,k,center,left,right\n";

/// Simulate one replica on stream `replica` of the base seed.
pub fn run_replica(cfg: &ExperimentConfig, replica: usize) -> Result<ReplicaResult> {
    let mut stream = RandomStream::new(cfg.base_seed, replica as u64);
    let mut state = initial_state(cfg, &mut stream)?;
    let edges = cfg.bin_edges();
    let snaps = cfg.snapshot_steps();
    let nw = cfg.windows.len();

    let mut profiles = Vec::with_capacity(snaps.len());
    let mut wd = vec![0.0; nw];
    let mut gap_sum = vec![0.0; nw];
    let mut gap_n = vec![0usize; nw];
    let mut alive = 0.0;
    let mut csv = String::new();
    let mut exits_at_burn = None;
    let mut t_burn = 0.0;

    let mut step = 0u64;
    for &target in &snaps {
        while step < target {
            advance(cfg, &mut state, &mut stream)?;
            step += 1;
        }
        check_snapshot(&state)?;
        if exits_at_burn.is_none() {
            exits_at_burn = Some(state.killed);
            t_burn = state.t;
        }
        profiles.push(density_profile(&state, &edges)?);
        for (k, &(l, r)) in cfg.windows.iter().enumerate() {
            wd[k] += density_window(&state, l, r)?;
            if let Some(g) = gap_stats(&state, l, r) {
                gap_sum[k] += g;
                gap_n[k] += 1;
            }
        }
        alive += state.alive() as f64;
        if cfg.snapshots {
            snapshot_rows(&state, &mut csv);
        }
    }
    let total = cfg.total_steps();
    while step < total {
        advance(cfg, &mut state, &mut stream)?;
        step += 1;
    }

    let count = profiles.len();
    let weighted: Vec<(&DensityProfile, f64)> = profiles.iter().map(|p| (p, 1.0)).collect();
    let profile = DensityProfile::weighted_mean(&weighted)?;
    let span = state.t - t_burn;
    let exits = state.killed - exits_at_burn.unwrap_or(state.killed);
    Ok(ReplicaResult {
        replica,
        profile,
        snapshots: count,
        window_density: wd.iter().map(|v| v / count as f64).collect(),
        window_gap: gap_sum
            .iter()
            .zip(&gap_n)
            .map(|(s, &n)| (n > 0).then(|| s / n as f64))
            .collect(),
        mean_alive: alive / count as f64,
        exit_rate: if span > 0.0 { exits as f64 / span } else { 0.0 },
        final_state: state,
        snapshot_csv: csv,
    })
}

/// All replicas in replica order, on the rayon pool when `cfg.parallel`.
pub fn run_replicas(cfg: &ExperimentConfig) -> Result<Vec<ReplicaResult>> {
    if cfg.parallel {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|r| run_replica(cfg, r))
            .collect()
    } else {
        (0..cfg.replicas).map(|r| run_replica(cfg, r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub x1: f64,
    pub x2: f64,
    pub density: f64,
    pub mean_gap: Option<f64>,
}

/// Deterministic run summary written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub model: &'static str,
    pub params: DiffusionParams,
    pub scheme: &'static str,
    pub h: f64,
    pub t_end: f64,
    pub burn_in: f64,
    pub snapshot_interval: f64,
    pub replicas: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub seed_digest: String,
    pub snapshots_per_replica: usize,
    pub snapshot_count: usize,
    pub mean_alive: f64,
    /// Right-end removals per unit time, averaged over replicas.
    pub exit_rate: f64,
    pub windows: Vec<WindowSummary>,
    pub reports: Vec<StatReport>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub profile: DensityProfile,
    pub summary: Summary,
    pub replicas: Vec<ReplicaResult>,
    pub files: Vec<PathBuf>,
}

/// Merge replica results in replica order.
pub fn merge(
    cfg: &ExperimentConfig,
    results: &[ReplicaResult],
) -> Result<(DensityProfile, Summary)> {
    let items: Vec<(&DensityProfile, f64)> = results
        .iter()
        .map(|r| (&r.profile, r.snapshots as f64))
        .collect();
    let profile = DensityProfile::weighted_mean(&items)?;
    let n = results.len() as f64;
    let per = results.first().map_or(0, |r| r.snapshots);
    let windows = cfg
        .windows
        .iter()
        .enumerate()
        .map(|(k, &(x1, x2))| {
            let gaps: Vec<f64> = results.iter().filter_map(|r| r.window_gap[k]).collect();
            WindowSummary {
                x1,
                x2,
                density: results.iter().map(|r| r.window_density[k]).sum::<f64>() / n,
                mean_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
            }
        })
        .collect();
    let mean_alive = results.iter().map(|r| r.mean_alive).sum::<f64>() / n;
    let exit_rate = results.iter().map(|r| r.exit_rate).sum::<f64>() / n;
    let seeds: Vec<u64> = (0..cfg.replicas as u64).collect();

    let mut reports = Vec::new();
    let predicted = match cfg.model {
        ModelKind::BarrierPushed => Some(AnalyticProfile::model_a(cfg.params)),
        ModelKind::InfluxKilled => Some(AnalyticProfile::model_c(cfg.params)),
        ModelKind::JumpReset => {
            // influx rate a / epsilon matched to the observed exit rate
            let a_eff = exit_rate * cfg.params.epsilon;
            (a_eff > 0.0).then(|| {
                AnalyticProfile::model_c(DiffusionParams {
                    a: a_eff,
                    ..cfg.params
                })
            })
        }
    };
    if let Some(pred) = predicted {
        if let Ok((sup, l1)) = profile_deviation(&profile, &pred) {
            let name = format!("{}-profile-sup", model_name(cfg.model));
            reports.push(
                StatReport::new(
                    name,
                    sup,
                    f64::INFINITY,
                    Orientation::AtMost,
                    cfg.replicas,
                    &seeds,
                )
                .non_gating()
                .with_detail(format!("l1 = {l1}")),
            );
        }
    }

    let summary = Summary {
        model: model_name(cfg.model),
        params: cfg.params,
        scheme: scheme_name(cfg.scheme),
        h: cfg.h,
        t_end: cfg.t_end,
        burn_in: cfg.burn_in,
        snapshot_interval: cfg.snapshot_interval,
        replicas: cfg.replicas,
        base_seed: cfg.base_seed,
        seed_digest: seed_digest(&[cfg.base_seed]),
        seeds,
        snapshots_per_replica: per,
        snapshot_count: results.iter().map(|r| r.snapshots).sum(),
        mean_alive,
        exit_rate,
        windows,
        reports,
    };
    Ok((profile, summary))
}

#[derive(Serialize)]
struct Metadata<'a> {
    unix_time: u64,
    crate_version: &'a str,
    config: &'a str,
}

fn write(path: &Path, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, bytes)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Run every replica and write the artifacts under `cfg.out`:
/// `profile.csv`, `summary.json`, `metadata.json` (the only file with a
/// timestamp), `checkpoints/replica-<r>.bin` and, if enabled,
/// `snapshots/replica-<r>.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let cfg = cfg.clone().resolve()?;
    let results = run_replicas(&cfg)?;
    let (profile, summary) = merge(&cfg, &results)?;

    let out = &cfg.out;
    fs::create_dir_all(out.join("checkpoints"))?;
    let mut files = Vec::new();
    write(
        &out.join("profile.csv"),
        profile.to_csv().as_bytes(),
        &mut files,
    )?;
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write(&out.join("summary.json"), json.as_bytes(), &mut files)?;

    let unix_time = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let text = cfg.to_text();
    let meta = Metadata {
        unix_time,
        crate_version: env!("CARGO_PKG_VERSION"),
        config: &text,
    };
    write(
        &out.join("metadata.json"),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
        &mut files,
    )?;

    for r in &results {
        let mut buf = Vec::new();
        write_checkpoint(&r.final_state, &mut buf)?;
        write(
            &out.join(format!("checkpoints/replica-{}.bin", r.replica)),
            &buf,
            &mut files,
        )?;
    }
    if cfg.snapshots {
        fs::create_dir_all(out.join("snapshots"))?;
        for r in &results {
            let body = format!("{SNAPSHOT_HEADER}{}", r.snapshot_csv);
            write(
                &out.join(format!("snapshots/replica-{}.csv", r.replica)),
                body.as_bytes(),
                &mut files,
            )?;
        }
    }
    Ok(ExperimentOutcome {
        profile,
        summary,
        replicas: results,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::read_checkpoint;

    fn small(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::parse(
            "model = influx-killed\ndrift = 0.5\nepsilon = 0.02\nh = 0.004\nt_end = 3\nburn_in = 2\n\
             snapshot_interval = 0.5\nbins = 5\nwindows = 0.1:0.3,0.4:0.6\nreplicas = 4\nseed = 11",
        )
        .unwrap();
        cfg.out = out.to_path_buf();
        cfg
    }

    #[test]
    fn rerun_is_byte_identical_and_schedule_free() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(&dir.path().join("a"));
        cfg.parallel = false;
        run_experiment(&cfg).unwrap();
        cfg.out = dir.path().join("b");
        cfg.parallel = true;
        let b = run_experiment(&cfg).unwrap();
        for name in [
            "profile.csv",
            "summary.json",
            "snapshots/replica-3.csv",
            "checkpoints/replica-2.bin",
        ] {
            let x = fs::read(dir.path().join("a").join(name)).unwrap();
            let y = fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let csv = fs::read_to_string(dir.path().join("a/profile.csv")).unwrap();
        assert!(csv.starts_with("bin_left,bin_right,density\n"));
        assert_eq!(csv.lines().count(), 6);
        assert_eq!(b.summary.snapshots_per_replica, 3);
        let ck = fs::read(dir.path().join("b/checkpoints/replica-2.bin")).unwrap();
        assert_eq!(read_checkpoint(&ck[..]).unwrap(), b.replicas[2].final_state);
    }

    #[test]
    fn invalid_config_is_rejected_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(&dir.path().join("x"));
        cfg.h = 0.02 / 0.5 / 7.5;
        assert!(run_experiment(&cfg).is_err());
        assert!(!dir.path().join("x").exists());
    }

    #[test]
    fn barrier_and_jump_reset_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::parse(
            "model = barrier-pushed\ndrift = 1\nn = 50\nepsilon = 0.01\nh = 0.001\nt_end = 0.2\n\
             burn_in = 0\nsnapshot_interval = 0.1\nprofile_hi = 6\nbins = 12\nreplicas = 2",
        )
        .unwrap();
        cfg.out = dir.path().join("a");
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a.summary.snapshots_per_replica, 3);
        let mass: f64 = a
            .profile
            .values
            .iter()
            .zip(a.profile.widths())
            .map(|(v, w)| v * w)
            .sum();
        assert!((mass - 0.5).abs() < 1e-9);

        let mut cfg = ExperimentConfig::parse(
            "model = jump-reset\nn = 20\nepsilon = 0.01\nh = 0.001\nt_end = 1\nburn_in = 0.5\nreplicas = 1",
        )
        .unwrap();
        cfg.out = dir.path().join("r");
        let r = run_experiment(&cfg).unwrap();
        assert!(r.summary.exit_rate > 0.0);
    }
}
