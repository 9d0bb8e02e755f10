use serde::{Deserialize, Serialize};

use super::{project_chain, ModelKind, SystemState};
use crate::analytics::DiffusionParams;
use crate::error::{config, Error, Result};
use crate::sde_kernel::{reflect_step_unchecked, sample_exponential, RandomStream, StepScheme};

/// Relative slack when matching injection times and step sizes to the
/// `epsilon / a` grid.
const GRID_TOL: f64 = 1e-9;

/// Where a jump-reset rod goes after reaching the right end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Reinsertion {
    /// Insert at 0 immediately; if the origin is blocked the projection pushes
    /// the bulk to make room.
    #[default]
    PushAtOrigin,
    /// Hold the rod in a queue until the leftmost rod has moved at least
    /// `epsilon` away from 0.
    WaitForVacancy,
}

fn require(state: &SystemState, model: ModelKind) -> Result<()> {
    if state.model != model {
        return Err(Error::Config(format!(
            "expected a {model:?} state, got {:?}",
            state.model
        )));
    }
    Ok(())
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return config(format!("time step must be positive, got {h}"));
    }
    Ok(())
}

/// Barrier-pushed state at `t = 0` from given free coordinates.
pub fn init_model_a_from_z(params: DiffusionParams, mut z: Vec<f64>) -> Result<SystemState> {
    params.validate_allow_zero_noise()?;
    let n = params
        .n
        .ok_or_else(|| Error::Config("barrier-pushed system needs a rod count".into()))?;
    if z.len() != n {
        return config(format!("expected {n} free coordinates, got {}", z.len()));
    }
    if z.iter().any(|v| !(*v >= 0.0)) {
        return config("free coordinates must be non-negative");
    }
    z.sort_unstable_by(f64::total_cmp);
    let mut state = SystemState::empty(ModelKind::BarrierPushed, params);
    state.z = z;
    rebuild_model_a(&mut state);
    Ok(state)
}

/// Barrier-pushed state with iid stationary free coordinates.
pub fn init_model_a_pseudostationary(
    params: DiffusionParams,
    stream: &mut RandomStream,
) -> Result<SystemState> {
    params.validate()?;
    let n = params
        .n
        .ok_or_else(|| Error::Config("barrier-pushed system needs a rod count".into()))?;
    let rate = params.rate();
    let z = (0..n)
        .map(|_| sample_exponential(stream, rate))
        .collect::<Result<Vec<_>>>()?;
    init_model_a_from_z(params, z)
}

/// `x[k] = y[k] + k eps + eps/2 + c t` with `y = z` sorted ascending.
fn rebuild_model_a(state: &mut SystemState) {
    let eps = state.params.epsilon;
    let shift = state.params.barrier_speed() * state.t + eps / 2.0;
    state.x.clear();
    state.x.extend(
        state
            .z
            .iter()
            .enumerate()
            .map(|(k, y)| y + k as f64 * eps + shift),
    );
}

/// One step of the barrier-pushed system through the order-statistics coupling.
pub fn step_model_a(
    state: &mut SystemState,
    h: f64,
    stream: &mut RandomStream,
    scheme: StepScheme,
) -> Result<()> {
    require(state, ModelKind::BarrierPushed)?;
    check_step(h)?;
    let drift = state.params.barrier_speed();
    let sigma2 = state.params.sigma2;
    for z in state.z.iter_mut() {
        *z = reflect_step_unchecked(*z, h, drift, sigma2, stream, scheme);
    }
    state.z.sort_unstable_by(f64::total_cmp);
    state.t += h;
    rebuild_model_a(state);
    Ok(())
}

/// One step of the barrier-pushed system by direct projection: independent
/// Gaussian moves of the centers, then projection onto the feasible chain
/// behind the barrier at `c (t + h)`.
pub fn step_model_a_direct(
    state: &mut SystemState,
    h: f64,
    stream: &mut RandomStream,
) -> Result<()> {
    require(state, ModelKind::BarrierPushed)?;
    check_step(h)?;
    let eps = state.params.epsilon;
    let scale = (state.params.sigma2 * h).sqrt();
    for x in state.x.iter_mut() {
        *x += scale * stream.standard_normal();
    }
    let t = state.t + h;
    let c = state.params.barrier_speed();
    state.x = project_chain(&state.x, eps, c * t + eps / 2.0, f64::INFINITY)?;
    state.t = t;
    // keep the free coordinates consistent with the centers
    let shift = c * t + eps / 2.0;
    state.z.clear();
    state.z.extend(
        state
            .x
            .iter()
            .enumerate()
            .map(|(k, x)| (x - k as f64 * eps - shift).max(0.0)),
    );
    Ok(())
}

/// Empty influx-killed system at `t = 0`.
pub fn init_model_c(params: DiffusionParams) -> Result<SystemState> {
    params.validate_allow_zero_noise()?;
    if !(params.epsilon > 0.0) {
        return config("influx system needs a positive rod width");
    }
    Ok(SystemState::empty(ModelKind::InfluxKilled, params))
}

/// Number of steps of size `h` between injections; errors unless `h`
/// divides `epsilon / a`.
pub fn steps_per_injection(params: &DiffusionParams, h: f64) -> Result<u64> {
    check_step(h)?;
    let ratio = params.epsilon / (params.a * h);
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > GRID_TOL * ratio.max(1.0) {
        return config(format!(
            "step h = {h} must divide the injection interval epsilon/a = {} (ratio {ratio})",
            params.epsilon / params.a
        ));
    }
    Ok(rounded as u64)
}

/// One step of the influx-killed system.
///
/// Alive free coordinates are advanced first; rods whose injection time
/// `k epsilon / a` falls in `(t, t + h]` are then added with `z = 0` (they are
/// born at the step end, which the grid condition on `h` guarantees). Kills
/// are checked at the step end only, repeatedly, against the moving level
/// `1 - a t + killed * epsilon`.
pub fn step_model_c(
    state: &mut SystemState,
    h: f64,
    stream: &mut RandomStream,
    scheme: StepScheme,
) -> Result<()> {
    require(state, ModelKind::InfluxKilled)?;
    steps_per_injection(&state.params, h)?;
    if state.injected.checked_sub(state.killed) != Some(state.z.len() as u64) {
        return Err(Error::Invariant(format!(
            "bookkeeping broken: {} alive, {} injected, {} killed",
            state.z.len(),
            state.injected,
            state.killed
        )));
    }
    let DiffusionParams {
        a, sigma2, epsilon, ..
    } = state.params;

    for z in state.z.iter_mut() {
        *z = reflect_step_unchecked(*z, h, a, sigma2, stream, scheme);
    }
    let t = state.t + h;
    let due = ((t * a / epsilon) + GRID_TOL).floor() as u64;
    let born = due.saturating_sub(state.injected);
    state.z.extend(std::iter::repeat_n(0.0, born as usize));
    state.injected = state.injected.max(due);
    state.z.sort_unstable_by(f64::total_cmp);
    state.t = t;
    kill_exceeding(state);
    rebuild_model_c(state);
    Ok(())
}

/// Level the top free coordinate must reach for the next kill.
fn kill_level(state: &SystemState) -> f64 {
    1.0 - state.params.a * state.t + state.killed as f64 * state.params.epsilon
}

/// Remove maximal free coordinates while they sit at or above the kill level.
fn kill_exceeding(state: &mut SystemState) {
    while let Some(&top) = state.z.last() {
        if top >= kill_level(state) {
            state.z.pop();
            state.killed += 1;
        } else {
            break;
        }
    }
}

/// Centers from the reverse-ordered free coordinates: the rod with label `j`
/// sits at `y_j - j eps + eps/2 + a t`. With `z` ascending the rod at position
/// `i` has label `injected - i`.
fn rebuild_model_c(state: &mut SystemState) {
    let eps = state.params.epsilon;
    let base = state.params.a * state.t - state.injected as f64 * eps + eps / 2.0;
    state.x.clear();
    state.x.extend(
        state
            .z
            .iter()
            .enumerate()
            .map(|(i, z)| z + base + i as f64 * eps),
    );
}

/// Jump-reset system with `n` rods spread evenly over `[0, 1]`.
pub fn init_model_r(params: DiffusionParams) -> Result<SystemState> {
    params.validate_allow_zero_noise()?;
    let n = params
        .n
        .ok_or_else(|| Error::Config("jump-reset system needs a rod count".into()))?;
    let eps = params.epsilon;
    if (n as f64 - 1.0) * eps > 1.0 {
        return config(format!("{n} rods of width {eps} do not fit in [0, 1]"));
    }
    let spacing = (1.0 / n as f64).max(eps);
    let start = ((1.0 - (n as f64 - 1.0) * spacing) / 2.0).max(0.0);
    let mut state = SystemState::empty(ModelKind::JumpReset, params);
    state.x = (0..n)
        .map(|i| (start + i as f64 * spacing).min(1.0 - 1e-9))
        .collect();
    Ok(state)
}

/// Remove the rod at position `index` and reinsert it at the left end
/// according to `rule`, restoring feasibility on `[0, 1]`.
///
/// Returns whether the rod re-entered immediately (as opposed to being queued).
pub fn apply_jump_rule(
    x: &mut Vec<f64>,
    index: usize,
    epsilon: f64,
    rule: Reinsertion,
) -> Result<bool> {
    x.remove(index);
    match rule {
        Reinsertion::PushAtOrigin => {
            // the leftmost feasible slot is max(0, first - eps), which the
            // projection realises from 0 whether or not the origin is free
            x.insert(0, 0.0);
            *x = project_chain(x, epsilon, 0.0, 1.0)?;
            Ok(true)
        }
        Reinsertion::WaitForVacancy => Ok(false),
    }
}

/// One step of the jump-reset system: Gaussian proposals projected onto the
/// feasible chain in `[0, 1]`, rods pinned at 1 moved back to 0.
pub fn step_model_r(
    state: &mut SystemState,
    h: f64,
    stream: &mut RandomStream,
    rule: Reinsertion,
) -> Result<()> {
    require(state, ModelKind::JumpReset)?;
    check_step(h)?;
    let eps = state.params.epsilon;
    let scale = (state.params.sigma2 * h).sqrt();
    for x in state.x.iter_mut() {
        *x += scale * stream.standard_normal();
    }
    state.x = project_chain(&state.x, eps, 0.0, 1.0)?;

    while let Some(&last) = state.x.last() {
        if last < 1.0 - 1e-12 {
            break;
        }
        let index = state.x.len() - 1;
        state.killed += 1;
        if apply_jump_rule(&mut state.x, index, eps, rule)? {
            state.injected += 1;
        } else {
            state.queued += 1;
        }
    }
    while state.queued > 0 && state.x.first().is_none_or(|&f| f >= eps) {
        state.x.insert(0, 0.0);
        state.queued -= 1;
        state.injected += 1;
    }
    state.t += h;
    Ok(())
}
