//! Acceptance checks. Each function runs a fixed-seed Monte Carlo experiment
//! and returns one or more [`StatReport`]s.

use nalgebra::{DMatrix, DVector};

use super::config::ExperimentConfig;
use super::experiment::{check_snapshot, merge, run_replicas, Summary};
use crate::analytics::{
    expected_lifetime, predicted_gap, stationary_cdf, AnalyticProfile, DiffusionParams,
};
use crate::error::{Error, Result};
use crate::measurement::{
    density_profile, density_window, increment_variances, uniform_edges, DensityProfile,
    TaggedTrack,
};
use crate::particles::{
    init_model_a_pseudostationary, init_model_c, project_chain, step_model_a, step_model_a_direct,
    step_model_c, Reinsertion,
};
use crate::sde_kernel::{reflect_step_unchecked, RandomStream, StepScheme};
use crate::statcheck::{
    deviation_against, fraction_ci, ks_unsorted, profile_deviation, Orientation, StatReport,
};

/// Endpoints of independent reflected chains against the exponential law.
pub fn stationary_law() -> Result<Vec<StatReport>> {
    const BASE: u64 = 0x51;
    const CHAINS: usize = 10_000;
    let params = DiffusionParams::new(1.0, 1.0, 0.0)?;
    let h = 1e-3;
    let steps = 50_000;
    let mut ends = Vec::with_capacity(CHAINS);
    for chain in 0..CHAINS {
        let mut s = RandomStream::new(BASE, chain as u64);
        let mut z = 0.0;
        for _ in 0..steps {
            z = reflect_step_unchecked(
                z,
                h,
                params.a,
                params.sigma2,
                &mut s,
                StepScheme::BridgeExact,
            );
        }
        if !(z >= 0.0) {
            return Err(Error::Invariant(format!(
                "reflected chain left [0, inf): {z}"
            )));
        }
        ends.push(z);
    }
    let d = ks_unsorted(ends, |z| stationary_cdf(&params, z))?;
    Ok(vec![StatReport::new(
        "stationary-law-ks",
        d,
        0.02,
        Orientation::AtMost,
        CHAINS,
        &[BASE],
    )
    .with_detail("10^4 chains, t = 50, h = 1e-3")])
}

/// Occupation density of a diffusion started at 0, reflected at 0 and killed
/// at `v1`, on `bins` equal bins. Kills inside a step are detected with the
/// Brownian-bridge crossing probability `exp(-2 (v1 - z0)(v1 - z1) / (sigma2 h))`.
pub fn killed_occupation(
    params: &DiffusionParams,
    v1: f64,
    h: f64,
    paths: usize,
    bins: usize,
    base_seed: u64,
) -> Vec<f64> {
    let mut occ = vec![0.0; bins];
    let width = v1 / bins as f64;
    let bin = |z: f64| ((z / width) as usize).min(bins - 1);
    for path in 0..paths {
        let mut s = RandomStream::new(base_seed, path as u64);
        let mut z = 0.0;
        loop {
            let z1 = reflect_step_unchecked(
                z,
                h,
                params.a,
                params.sigma2,
                &mut s,
                StepScheme::BridgeExact,
            );
            occ[bin(z)] += 0.5 * h;
            if z1 >= v1 {
                break;
            }
            let cross = (-2.0 * (v1 - z) * (v1 - z1) / (params.sigma2 * h)).exp();
            if s.uniform() < cross {
                break;
            }
            occ[bin(z1)] += 0.5 * h;
            z = z1;
        }
    }
    occ.iter().map(|o| o / (paths as f64 * width)).collect()
}

/// Occupation histogram of the killed reflected diffusion against the Green
/// function, as a relative L1 distance.
pub fn green_function_occupation() -> Result<Vec<StatReport>> {
    const BASE: u64 = 0x62;
    const PATHS: usize = 20_000;
    const BINS: usize = 50;
    let params = DiffusionParams::new(0.5, 1.0, 0.0)?;
    let v1 = 0.5;
    let emp = killed_occupation(&params, v1, 1e-4, PATHS, BINS, BASE);
    let lambda = params.rate();
    let w = v1 / BINS as f64;
    // exact bin averages of G
    let antideriv = |v: f64| -((lambda * (v1 - v)).exp() / lambda + v) / params.a;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, e) in emp.iter().enumerate() {
        let (l, r) = (i as f64 * w, (i + 1) as f64 * w);
        let g = (antideriv(r) - antideriv(l)) / w;
        num += (e - g).abs() * w;
        den += g * w;
    }
    let total: f64 = emp.iter().sum::<f64>() * w;
    Ok(vec![StatReport::new(
        "green-function-relative-l1",
        num / den,
        0.03,
        Orientation::AtMost,
        PATHS,
        &[BASE],
    )
    .with_detail(format!(
        "mean lifetime {total:.5} vs {:.5}",
        expected_lifetime(&params, v1)
    ))])
}

/// Fraction-of-seeds gates for the dense and the empty window of the
/// barrier-pushed system, with Wilson 95% lower bounds.
fn transition_reports(
    tag: &str,
    dense: &[f64],
    sparse: &[f64],
    seeds: &[u64],
) -> Result<Vec<StatReport>> {
    let n = dense.len() as u64;
    let hits_dense = dense.iter().filter(|&&d| d >= 0.9).count() as u64;
    let hits_sparse = sparse.iter().filter(|&&d| d <= 0.1).count() as u64;
    let (lo_d, _) = fraction_ci(hits_dense, n, 0.95)?;
    let (lo_s, _) = fraction_ci(hits_sparse, n, 0.95)?;
    Ok(vec![
        StatReport::new(
            format!("barrier-transition-dense-{tag}"),
            lo_d,
            0.9,
            Orientation::AtLeast,
            n as usize,
            seeds,
        )
        .with_detail(format!("{hits_dense}/{n} seeds with d[0.1,0.6] >= 0.9")),
        StatReport::new(
            format!("barrier-transition-empty-{tag}"),
            lo_s,
            0.9,
            Orientation::AtLeast,
            n as usize,
            seeds,
        )
        .with_detail(format!("{hits_sparse}/{n} seeds with d[1.5,2.0] <= 0.1")),
    ])
}

/// Sharp density transition of the barrier-pushed system, at `t = 0` and
/// after stepping to `t = 1`.
pub fn barrier_transition() -> Result<Vec<StatReport>> {
    const BASE: u64 = 0x73;
    let params = DiffusionParams::barrier_pushed(30.0, 1.0, 1000, 1.0)?;
    let mut reports = Vec::new();

    let mut dense = Vec::new();
    let mut sparse = Vec::new();
    for r in 0..200u64 {
        let mut s = RandomStream::new(BASE, r);
        let state = init_model_a_pseudostationary(params, &mut s)?;
        check_snapshot(&state)?;
        dense.push(density_window(&state, 0.1, 0.6)?);
        sparse.push(density_window(&state, 1.5, 2.0)?);
    }
    reports.extend(transition_reports("t0", &dense, &sparse, &[BASE])?);

    let h = 1e-3;
    dense.clear();
    sparse.clear();
    for r in 0..50u64 {
        let mut s = RandomStream::new(BASE + 1, r);
        let mut state = init_model_a_pseudostationary(params, &mut s)?;
        for step in 1..=1000 {
            step_model_a(&mut state, h, &mut s, StepScheme::BridgeExact)?;
            if step % 100 == 0 {
                check_snapshot(&state)?;
            }
        }
        dense.push(density_window(&state, 0.1, 0.6)?);
        sparse.push(density_window(&state, 1.5, 2.0)?);
    }
    reports.extend(transition_reports("t1", &dense, &sparse, &[BASE + 1])?);
    Ok(reports)
}

/// Configuration of the stationary influx-killed run shared by the profile
/// and gap checks.
pub fn influx_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(
        "model = influx-killed\ndrift = 0.5\nsigma2 = 1\nepsilon = 0.002\nh = 0.0002\n\
         t_end = 40\nburn_in = 20\nsnapshot_interval = 0.5\nbins = 9\nprofile_lo = 0.05\n\
         profile_hi = 0.95\nwindows = 0.15:0.25,0.45:0.55,0.75:0.85\nreplicas = 20\nseed = 132",
    )
    .expect("static configuration");
    cfg.snapshots = false;
    cfg
}

pub fn influx_run() -> Result<(DensityProfile, Summary)> {
    let cfg = influx_config().resolve()?;
    let results = run_replicas(&cfg)?;
    merge(&cfg, &results)
}

/// Time-averaged influx-killed profile against the predicted density.
pub fn influx_profile(run: &(DensityProfile, Summary)) -> Result<Vec<StatReport>> {
    let (profile, summary) = run;
    let pred = AnalyticProfile::model_c(summary.params);
    let (sup, l1) = profile_deviation(profile, &pred)?;
    let values: Vec<String> = profile.values.iter().map(|v| format!("{v:.3}")).collect();
    Ok(vec![StatReport::new(
        "influx-profile-sup",
        sup,
        0.07,
        Orientation::AtMost,
        summary.replicas,
        &[summary.base_seed],
    )
    .with_detail(format!(
        "l1 {l1:.4}, mean alive {:.1}, bins [{}]",
        summary.mean_alive,
        values.join(" ")
    ))])
}

/// Mean gaps in three windows against the predicted gap law.
pub fn influx_gaps(run: &(DensityProfile, Summary)) -> Result<Vec<StatReport>> {
    let (_, summary) = run;
    let mut out = Vec::new();
    for w in &summary.windows {
        let x = 0.5 * (w.x1 + w.x2);
        let pred = predicted_gap(x, &summary.params)?;
        let gap = w
            .mean_gap
            .ok_or_else(|| Error::InsufficientData(format!("no rod pairs in window around {x}")))?;
        out.push(
            StatReport::new(
                format!("gap-law-x{x:.1}"),
                (gap - pred).abs() / pred,
                0.2,
                Orientation::AtMost,
                summary.replicas,
                &[summary.base_seed],
            )
            .non_gating()
            .with_detail(format!("mean gap {gap:.6} vs {pred:.6}")),
        );
    }
    Ok(out)
}

/// Order-statistics engine against the direct projection integrator for
/// the barrier-pushed system.
pub fn engine_agreement() -> Result<Vec<StatReport>> {
    const BASE: u64 = 0x86;
    const REPLICAS: usize = 500;
    let params = DiffusionParams::barrier_pushed(1.0, 1.0, 50, 0.5)?;
    let h = 1e-4;
    let edges = uniform_edges(0.0, 1.5, 20);
    let mut profiles = [Vec::new(), Vec::new()];
    for r in 0..REPLICAS as u64 {
        for (engine, acc) in profiles.iter_mut().enumerate() {
            let mut s = RandomStream::new(BASE + engine as u64, r);
            let mut state = init_model_a_pseudostationary(params, &mut s)?;
            for step in 1..=10_000 {
                if engine == 0 {
                    step_model_a(&mut state, h, &mut s, StepScheme::BridgeExact)?;
                } else {
                    step_model_a_direct(&mut state, h, &mut s)?;
                }
                if step % 1000 == 0 {
                    check_snapshot(&state)?;
                }
            }
            acc.push(density_profile(&state, &edges)?);
        }
    }
    let mean = |ps: &[DensityProfile]| {
        let items: Vec<(&DensityProfile, f64)> = ps.iter().map(|p| (p, 1.0)).collect();
        DensityProfile::weighted_mean(&items)
    };
    let a = mean(&profiles[0])?;
    let b = mean(&profiles[1])?;
    let (sup, l1) = deviation_against(&a, &b.values);
    Ok(vec![StatReport::new(
        "barrier-engines-l1",
        l1,
        0.05,
        Orientation::AtMost,
        REPLICAS,
        &[BASE, BASE + 1],
    )
    .with_detail(format!("sup {sup:.4}"))])
}

/// Exact projection by enumerating active sets: the feasible
/// equality-constrained minimiser closest to `p`.
pub fn projection_by_active_sets(p: &[f64], eps: f64, lo: f64, hi: f64) -> Option<Vec<f64>> {
    let n = p.len();
    // constraints g . x >= c
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    if lo.is_finite() {
        let mut g = vec![0.0; n];
        g[0] = 1.0;
        rows.push((g, lo));
    }
    for i in 0..n.saturating_sub(1) {
        let mut g = vec![0.0; n];
        g[i] = -1.0;
        g[i + 1] = 1.0;
        rows.push((g, eps));
    }
    if hi.is_finite() {
        let mut g = vec![0.0; n];
        g[n - 1] = -1.0;
        rows.push((g, -hi));
    }
    let feasible = |x: &[f64]| {
        rows.iter()
            .all(|(g, c)| g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() >= c - 1e-10)
    };
    let pv = DVector::from_column_slice(p);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << rows.len()) {
        let act: Vec<&(Vec<f64>, f64)> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, r)| r)
            .collect();
        let x = if act.is_empty() {
            pv.clone()
        } else {
            let a = DMatrix::from_fn(act.len(), n, |i, j| act[i].0[j]);
            let c = DVector::from_iterator(act.len(), act.iter().map(|r| r.1));
            let gram = &a * a.transpose();
            let Some(mu) = gram.lu().solve(&(&a * &pv - &c)) else {
                continue;
            };
            &pv - a.transpose() * mu
        };
        let xs: Vec<f64> = x.iter().copied().collect();
        if !xs.iter().all(|v| v.is_finite()) || !feasible(&xs) {
            continue;
        }
        let d = (&x - &pv).norm_squared();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, xs));
        }
    }
    best.map(|(_, x)| x)
}

/// Random small instances of the chain projection against active-set enumeration.
pub fn projection_oracle() -> Result<Vec<StatReport>> {
    const BASE: u64 = 0x95;
    let mut s = RandomStream::new(BASE, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = 1 + (s.uniform() * 6.0) as usize;
        let eps = 0.3 * s.uniform();
        let lo = if s.uniform() < 0.15 {
            f64::NEG_INFINITY
        } else {
            s.uniform() - 1.0
        };
        let hi = if s.uniform() < 0.15 {
            f64::INFINITY
        } else {
            lo.max(-1.0) + (n - 1) as f64 * eps + 2.0 * s.uniform()
        };
        let centre = if lo.is_finite() { lo } else { -1.0 };
        let p: Vec<f64> = (0..n).map(|_| centre - 1.0 + 4.0 * s.uniform()).collect();
        let fast = project_chain(&p, eps, lo, hi)?;
        let exact = projection_by_active_sets(&p, eps, lo, hi)
            .ok_or_else(|| Error::Invariant("active-set oracle found no feasible point".into()))?;
        for (a, b) in fast.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(vec![StatReport::new(
        "projection-oracle-max-error",
        worst,
        1e-8,
        Orientation::AtMost,
        1000,
        &[BASE],
    )])
}

/// Jump-reset system: fit the influx rate from the exit rate and compare
/// profiles under both reinsertion rules.
pub fn jump_reset_fit() -> Result<Vec<StatReport>> {
    const BASE: u64 = 0xa7;
    let mut out = Vec::new();
    let mut merged = Vec::new();
    for (tag, rule) in [
        ("push", Reinsertion::PushAtOrigin),
        ("wait", Reinsertion::WaitForVacancy),
    ] {
        let mut cfg = ExperimentConfig::parse(
            "model = jump-reset\ndrift = 1\nsigma2 = 1\nn = 150\nepsilon = 0.002\nh = 0.0002\n\
             t_end = 12\nburn_in = 4\nsnapshot_interval = 0.5\nbins = 10\nreplicas = 4",
        )
        .expect("static configuration");
        cfg.base_seed = BASE;
        cfg.reinsertion = rule;
        cfg.snapshots = false;
        let cfg = cfg.resolve()?;
        let results = run_replicas(&cfg)?;
        let (profile, summary) = merge(&cfg, &results)?;
        let a_eff = summary.exit_rate * cfg.params.epsilon;
        let pred = AnalyticProfile::model_c(DiffusionParams {
            a: a_eff,
            ..cfg.params
        });
        let (sup, l1) = profile_deviation(&profile, &pred)?;
        out.push(
            StatReport::new(
                format!("jump-reset-profile-sup-{tag}"),
                sup,
                0.1,
                Orientation::AtMost,
                cfg.replicas,
                &[BASE],
            )
            .non_gating()
            .with_detail(format!("a_eff {a_eff:.4}, l1 {l1:.4}")),
        );
        merged.push(profile);
    }
    let (sup, _) = deviation_against(&merged[0], &merged[1].values);
    out.push(
        StatReport::new(
            "jump-reset-rule-sensitivity-sup",
            sup,
            0.05,
            Orientation::AtMost,
            8,
            &[BASE],
        )
        .non_gating(),
    );
    Ok(out)
}

/// Lags (time units) used for the tagged-rod scaling fit.
pub const TAGGED_LAGS: [f64; 5] = [0.002, 0.004, 0.008, 0.016, 0.032];

/// Tracks of influx-killed rods born after the burn-in, sampled every step,
/// keeping those that lived at least `min_duration`.
pub fn tagged_tracks(
    params: DiffusionParams,
    h: f64,
    burn_in: f64,
    t_end: f64,
    every: u64,
    min_duration: f64,
    base_seed: u64,
) -> Result<Vec<TaggedTrack>> {
    let mut state = init_model_c(params)?;
    let mut s = RandomStream::new(base_seed, 0);
    let burn_steps = super::config::steps_for(burn_in, h);
    let end_steps = super::config::steps_for(t_end, h);
    for _ in 0..burn_steps {
        step_model_c(&mut state, h, &mut s, StepScheme::BridgeExact)?;
    }
    let first_label = state.injected + 1;
    let mut open: Vec<TaggedTrack> = Vec::new();
    let mut done = Vec::new();
    for step in burn_steps..end_steps {
        step_model_c(&mut state, h, &mut s, StepScheme::BridgeExact)?;
        if step % 1000 == 0 {
            check_snapshot(&state)?;
        }
        let newest = state.injected;
        if newest >= first_label
            && (newest - first_label) % every == 0
            && open.last().is_none_or(|t| t.label != newest)
        {
            open.push(TaggedTrack::new(newest, Vec::new(), Vec::new())?);
        }
        let mut still = Vec::with_capacity(open.len());
        for mut tr in open.drain(..) {
            match state.position_of(tr.label) {
                Some(i) => {
                    tr.push(state.t, state.x[i])?;
                    still.push(tr);
                }
                None => done.push(tr),
            }
        }
        open = still;
    }
    done.retain(|t| t.duration() >= min_duration);
    Ok(done)
}

/// Pooled increment variances of detrended tracks and the log-log slope.
pub fn pooled_scaling(tracks: &[TaggedTrack], lags: &[f64]) -> Result<(f64, Vec<f64>)> {
    if tracks.is_empty() {
        return Err(Error::InsufficientData("no tracks to pool".into()));
    }
    let mut acc = vec![0.0; lags.len()];
    for tr in tracks {
        let v = increment_variances(&tr.detrended_quadratic(), lags)?;
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b / tracks.len() as f64;
        }
    }
    let xs: Vec<f64> = lags.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = acc.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok((sxy / sxx, acc))
}

/// Increment scaling of tagged influx-killed rods, plus a free Brownian
/// control run that checks the estimator.
pub fn tagged_scaling() -> Result<Vec<StatReport>> {
    const BASE: u64 = 0xb9;
    let mut out = Vec::new();

    let dt = 1e-3;
    let mut s = RandomStream::new(BASE, 0);
    let mut track = TaggedTrack::new(
        0,
        Vec::with_capacity(1_000_001),
        Vec::with_capacity(1_000_001),
    )?;
    let mut x = 0.0;
    for i in 0..=1_000_000u64 {
        track.push(i as f64 * dt, x)?;
        x += dt.sqrt() * s.standard_normal();
    }
    let lags = [0.01, 0.03, 0.1, 0.3, 1.0];
    let slope = crate::measurement::increment_scaling(&track, &lags)?;
    out.push(
        StatReport::new(
            "free-track-scaling-control",
            (slope - 1.0).abs(),
            0.05,
            Orientation::AtMost,
            1,
            &[BASE],
        )
        .with_detail(format!("slope {slope:.4} over lags 0.01..1")),
    );

    let params = DiffusionParams::new(0.5, 1.0, 0.002)?;
    let max_lag = TAGGED_LAGS[TAGGED_LAGS.len() - 1];
    let tracks = tagged_tracks(params, 2e-4, 20.0, 30.0, 5, 10.0 * max_lag, BASE + 1)?;
    let (slope, _) = pooled_scaling(&tracks, &TAGGED_LAGS)?;
    out.push(
        StatReport::new(
            "tagged-rod-scaling-distance-from-half",
            (slope - 0.5).abs(),
            0.2,
            Orientation::AtMost,
            tracks.len(),
            &[BASE + 1],
        )
        .non_gating()
        .with_detail(format!(
            "slope {slope:.4} over lags 0.002..0.032, {} tracks",
            tracks.len()
        )),
    );
    Ok(out)
}

/// Suite a criterion belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Unit,
    Theorems,
    Exploratory,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Suite::Unit),
            "theorems" => Ok(Suite::Theorems),
            "exploratory" => Ok(Suite::Exploratory),
            "all" => Ok(Suite::All),
            _ => Err(Error::Config(format!("unknown suite '{s}'"))),
        }
    }
}

/// Run the checks of `suite` in a fixed order, handing each batch of reports
/// to `on_report` as soon as it is available.
pub fn run_suite(suite: Suite, mut on_report: impl FnMut(&StatReport)) -> Result<Vec<StatReport>> {
    let unit = matches!(suite, Suite::Unit | Suite::All);
    let theorems = matches!(suite, Suite::Theorems | Suite::All);
    let exploratory = matches!(suite, Suite::Exploratory | Suite::All);
    let mut all = Vec::new();
    let mut emit = |batch: Vec<StatReport>, all: &mut Vec<StatReport>| {
        for r in &batch {
            on_report(r);
        }
        all.extend(batch);
    };
    if unit {
        emit(stationary_law()?, &mut all);
        emit(green_function_occupation()?, &mut all);
        emit(projection_oracle()?, &mut all);
    }
    let influx = if theorems || exploratory {
        Some(influx_run()?)
    } else {
        None
    };
    if theorems {
        emit(barrier_transition()?, &mut all);
        emit(influx_profile(influx.as_ref().unwrap())?, &mut all);
        emit(engine_agreement()?, &mut all);
    }
    if exploratory {
        emit(jump_reset_fit()?, &mut all);
        emit(influx_gaps(influx.as_ref().unwrap())?, &mut all);
        emit(tagged_scaling()?, &mut all);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::green_function;

    #[test]
    fn active_set_oracle_small_cases() {
        let x =
            projection_by_active_sets(&[0.5, 0.4], 0.2, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((x[0] - 0.35).abs() < 1e-12 && (x[1] - 0.55).abs() < 1e-12);
        let x = projection_by_active_sets(&[-0.3, 0.05, 1.4], 0.1, 0.0, 1.0).unwrap();
        assert!(x[0].abs() < 1e-12 && (x[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn killed_occupation_shape() {
        // coarse run: mass near the reflecting end, vanishing at the kill level
        let params = DiffusionParams::new(0.5, 1.0, 0.0).unwrap();
        let occ = killed_occupation(&params, 0.5, 1e-3, 2000, 5, 3);
        let g0 = green_function(&params, 0.5, 0.05).unwrap();
        assert!((occ[0] - g0).abs() / g0 < 0.2, "{} vs {g0}", occ[0]);
        assert!(occ[4] < occ[0]);
    }

    #[test]
    fn tagged_tracks_are_alive_rods() {
        let params = DiffusionParams::new(0.5, 1.0, 0.02).unwrap();
        let tracks = tagged_tracks(params, 2e-3, 1.0, 4.0, 3, 0.1, 5).unwrap();
        assert!(!tracks.is_empty());
        for t in &tracks {
            assert!(t.positions.iter().all(|x| (-0.02..=1.0).contains(x)));
            assert_eq!((t.label - tracks[0].label) % 3, 0);
        }
    }
}
