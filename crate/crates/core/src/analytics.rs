//! Closed-form quantities for drifted Brownian motion reflected at zero and for
//! the hydrodynamic profiles of the rod systems built on top of it.
//!
//! Every function here is pure. Throughout, the single-particle coordinate
//! solves `dZ = sigma dB - a dt` reflected at `0`, so its stationary law is
//! exponential with rate `lambda = 2a / sigma2`.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Tolerance on `n * epsilon == b` for barrier-pushed parameters.
const BUDGET_TOL: f64 = 1e-12;

/// Physical parameters shared by all rod systems.
///
/// For the barrier-pushed system the drift of the free coordinates equals the
/// barrier speed, so `a == c` there; [`DiffusionParams::barrier_pushed`] keeps
/// the two in sync.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Drift magnitude (distance / time).
    pub a: f64,
    /// Diffusion coefficient (distance^2 / time).
    pub sigma2: f64,
    /// Rod width.
    pub epsilon: f64,
    /// Barrier speed, barrier-pushed system only.
    pub c: Option<f64>,
    /// Rod count, fixed-count systems only.
    pub n: Option<usize>,
    /// Mass budget `n * epsilon`, fixed-count systems only.
    pub b: Option<f64>,
}

impl DiffusionParams {
    pub fn new(a: f64, sigma2: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            a,
            sigma2,
            epsilon,
            c: None,
            n: None,
            b: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Barrier-pushed parameters: `n` rods of width `b / n`, barrier speed `c`.
    pub fn barrier_pushed(c: f64, sigma2: f64, n: usize, b: f64) -> Result<Self> {
        if n == 0 {
            return config("rod count must be at least 1");
        }
        let p = Self {
            a: c,
            sigma2,
            epsilon: b / n as f64,
            c: Some(c),
            n: Some(n),
            b: Some(b),
        };
        p.validate()?;
        Ok(p)
    }

    /// Fixed-count parameters without a barrier (jump-reset system).
    pub fn fixed_count(a: f64, sigma2: f64, n: usize, b: f64) -> Result<Self> {
        if n == 0 {
            return config("rod count must be at least 1");
        }
        let p = Self {
            a,
            sigma2,
            epsilon: b / n as f64,
            c: None,
            n: Some(n),
            b: Some(b),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return config(format!(
                "sigma2 must be positive and finite, got {}",
                self.sigma2
            ));
        }
        self.validate_allow_zero_noise()
    }

    /// [`validate`](Self::validate) without the `sigma2 > 0` requirement, for
    /// simulating the deterministic limit.
    pub fn validate_allow_zero_noise(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return config(format!(
                "drift a must be positive and finite, got {}",
                self.a
            ));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return config(format!(
                "sigma2 must be non-negative and finite, got {}",
                self.sigma2
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            ));
        }
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return config(format!("barrier speed must be positive, got {c}"));
            }
            if c != self.a {
                return config("barrier speed and drift must coincide");
            }
        }
        if let (Some(n), Some(b)) = (self.n, self.b) {
            if (n as f64 * self.epsilon - b).abs() > BUDGET_TOL {
                return config(format!(
                    "mass budget mismatch: n * epsilon = {} but b = {b}",
                    n as f64 * self.epsilon
                ));
            }
        }
        Ok(())
    }

    /// Replace the noise level without validation. Used for the deterministic
    /// `sigma2 = 0` limit, which `validate` rejects.
    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    /// Rate `2a / sigma2` of the stationary exponential law.
    pub fn rate(&self) -> f64 {
        2.0 * self.a / self.sigma2
    }

    /// The ratio `sigma2 / (2a)` that sets the shape of the influx profile.
    pub fn noise_ratio(&self) -> f64 {
        self.sigma2 / (2.0 * self.a)
    }

    pub fn barrier_speed(&self) -> f64 {
        self.c.unwrap_or(self.a)
    }
}

/// Stationary density `lambda * exp(-lambda z)` of the reflected coordinate.
pub fn stationary_density(params: &DiffusionParams, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return domain(format!("stationary density needs z >= 0, got {z}"));
    }
    let lambda = params.rate();
    Ok(lambda * (-lambda * z).exp())
}

/// Distribution function of the stationary law; zero for negative arguments.
pub fn stationary_cdf(params: &DiffusionParams, z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        -(-params.rate() * z).exp_m1()
    }
}

/// Occupation density at level `v` of the reflected coordinate started at `0`
/// and killed on first reaching `v1`: `(1/a) (exp(2a (v1 - v) / sigma2) - 1)`.
pub fn green_function(params: &DiffusionParams, v1: f64, v: f64) -> Result<f64> {
    if !(v1 > 0.0) {
        return domain(format!("killing level must be positive, got {v1}"));
    }
    if !(0.0..=v1).contains(&v) {
        return domain(format!(
            "green function needs 0 <= v <= v1, got v={v}, v1={v1}"
        ));
    }
    Ok((params.rate() * (v1 - v)).exp_m1() / params.a)
}

/// Expected lifetime of the killed process, the integral of [`green_function`].
pub fn expected_lifetime(params: &DiffusionParams, v1: f64) -> f64 {
    let lambda = params.rate();
    ((lambda * v1).exp_m1() / lambda - v1) / params.a
}

/// Level `v0` at which `(sigma2/2a)(exp(2a v0/sigma2) - 1) = 1`.
pub fn solve_v0(params: &DiffusionParams) -> Result<f64> {
    params.validate()?;
    let s = params.noise_ratio();
    Ok(s * (1.0 / s).ln_1p())
}

/// Predicted mass fraction `(1 - x) / (1 - x + sigma2/(2a))` of the influx system.
pub fn predicted_density_model_c(x: f64, params: &DiffusionParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("predicted density needs 0 <= x <= 1, got {x}"));
    }
    let u = 1.0 - x;
    Ok(u / (u + params.noise_ratio()))
}

/// `x = b (1 - exp(-lambda y)) + y`.
pub fn forward_y_model_a(y: f64, b: f64, lambda: f64) -> f64 {
    -b * (-lambda * y).exp_m1() + y
}

/// Root `y >= 0` of `x = b (1 - exp(-lambda y)) + y`.
pub fn invert_y_model_a(x: f64, b: f64, lambda: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("inverse map needs x >= 0, got {x}"));
    }
    if !(b >= 0.0 && lambda > 0.0) {
        return domain(format!(
            "inverse map needs b >= 0 and lambda > 0, got b={b}, lambda={lambda}"
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // forward(y) lies in [y, y + b]
    let lo = (x - b).max(0.0);
    Ok(bracketed_root(
        |y| forward_y_model_a(y, b, lambda) - x,
        |y| b * lambda * (-lambda * y).exp() + 1.0,
        lo,
        x,
        x.max(1.0),
    ))
}

/// `x = (sigma2/2a) (exp(2a v0/sigma2) - exp(2a (v0 - y)/sigma2))`, written
/// through `exp(2a v0 / sigma2) = 1 + 2a / sigma2`.
pub fn forward_y_model_c(y: f64, params: &DiffusionParams, v0: f64) -> f64 {
    let lambda = params.rate();
    (-(lambda * (v0 - y)).exp_m1() + lambda) / lambda
}

/// Root `y in [0, v0]` of the influx-system position map.
pub fn invert_y_model_c(x: f64, params: &DiffusionParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("inverse map needs 0 <= x <= 1, got {x}"));
    }
    let v0 = solve_v0(params)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(v0);
    }
    let lambda = params.rate();
    Ok(bracketed_root(
        |y| forward_y_model_c(y, params, v0) - x,
        |y| (lambda * (v0 - y)).exp(),
        0.0,
        v0,
        1.0,
    ))
}

/// Typical gap `epsilon * sigma2 / (2a (1 - x))` between neighbouring rods.
pub fn predicted_gap(x: f64, params: &DiffusionParams) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return domain(format!("predicted gap needs 0 <= x < 1, got {x}"));
    }
    Ok(params.epsilon * params.noise_ratio() / (1.0 - x))
}

/// Increasing root of `f` on `[lo, hi]`: bisection down to a 1e-6 bracket,
/// then Newton steps kept inside the bracket until `|f| <= 1e-13 * scale`.
fn bracketed_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    scale: f64,
) -> f64 {
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..50 {
        let r = f(y);
        if r.abs() <= 1e-13 * scale {
            break;
        }
        let next = y - r / df(y);
        if next == y {
            break;
        }
        y = next.clamp(lo, hi);
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// Barrier-comoving mass density of the pseudo-stationary barrier-pushed system.
    ModelAPseudoStationary,
    /// Static-frame mass density of the influx-killed system.
    ModelCPredicted,
}

/// A predicted mass-fraction profile that can be compared against simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticProfile {
    pub kind: ProfileKind,
    pub params: DiffusionParams,
}

impl AnalyticProfile {
    pub fn model_a(params: DiffusionParams) -> Self {
        Self {
            kind: ProfileKind::ModelAPseudoStationary,
            params,
        }
    }

    pub fn model_c(params: DiffusionParams) -> Self {
        Self {
            kind: ProfileKind::ModelCPredicted,
            params,
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        match self.kind {
            ProfileKind::ModelCPredicted => predicted_density_model_c(x, &self.params),
            ProfileKind::ModelAPseudoStationary => {
                // mass b*phi(y) dy is spread over dx = (b*phi(y) + 1) dy
                let b = self
                    .params
                    .b
                    .unwrap_or(self.params.n.unwrap_or(0) as f64 * self.params.epsilon);
                let lambda = self.params.rate();
                let y = invert_y_model_a(x, b, lambda)?;
                let m = b * lambda * (-lambda * y).exp();
                Ok(m / (m + 1.0))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use proptest::test_runner::{Config, RngSeed};

    fn p(a: f64, sigma2: f64) -> DiffusionParams {
        DiffusionParams::new(a, sigma2, 0.01).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
        let n = intervals + intervals % 2;
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn stationary_density_values() {
        assert_eq!(stationary_density(&p(1.0, 1.0), 0.0).unwrap(), 2.0);
        let v = stationary_density(&p(0.5, 1.0), 2f64.ln()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(stationary_density(&p(1.0, 1.0), -1e-9).is_err());
    }

    #[test]
    fn stationary_density_normalised_for_random_params() {
        let mut seed = 0x2545_f491_4f6c_dd1du64;
        let mut unif = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let params = p(0.05 + 5.0 * unif(), 0.1 + 4.0 * unif());
            let hi = 50.0 / params.rate();
            let mass = simpson(|z| stationary_density(&params, z).unwrap(), 0.0, hi, 20_000);
            assert!((mass - 1.0).abs() <= 1e-10, "mass {mass} for {params:?}");
        }
    }

    #[test]
    fn green_function_values() {
        let params = p(0.5, 1.0);
        let v1 = 2f64.ln();
        assert_eq!(green_function(&params, v1, v1).unwrap(), 0.0);
        assert!((green_function(&params, v1, 0.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(green_function(&params, v1, v1 + 1e-9).is_err());
        assert!(green_function(&params, v1, -1e-9).is_err());
    }

    #[test]
    fn green_function_shape_on_grid() {
        for &(a, s2, v1) in &[(0.5, 1.0, 0.5), (2.0, 0.3, 1.5), (0.01, 3.0, 0.2)] {
            let params = p(a, s2);
            let mut prev = f64::INFINITY;
            for i in 0..=1000 {
                let v = v1 * i as f64 / 1000.0;
                let g = green_function(&params, v1, v).unwrap();
                assert!(g >= 0.0);
                assert!(g < prev);
                prev = g;
            }
            assert_eq!(prev, 0.0);
        }
    }

    #[test]
    fn lifetime_is_integral_of_green_function() {
        let params = p(0.5, 1.0);
        let quad = simpson(|v| green_function(&params, 0.5, v).unwrap(), 0.0, 0.5, 2000);
        assert!((quad - expected_lifetime(&params, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn v0_values() {
        let v0 = solve_v0(&p(0.5, 1.0)).unwrap();
        assert!((v0 - std::f64::consts::LN_2).abs() < 1e-15);
        for s2 in [0.1, 1.0, 7.5] {
            assert!((solve_v0(&p(s2 / 2.0, s2)).unwrap() - 2f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn predicted_density_values() {
        let params = p(0.5, 1.0);
        assert_eq!(predicted_density_model_c(1.0, &params).unwrap(), 0.0);
        assert!((predicted_density_model_c(0.0, &params).unwrap() - 0.5).abs() < 1e-15);
        let v = predicted_density_model_c(0.25, &params).unwrap();
        assert!((v - 0.428_571_428_571_428_6).abs() < 1e-12);
        assert!(predicted_density_model_c(1.01, &params).is_err());
    }

    #[test]
    fn predicted_density_monotone_on_fine_grid() {
        let params = p(0.7, 1.3);
        let f0 = predicted_density_model_c(0.0, &params).unwrap();
        assert!((f0 - 1.0 / (1.0 + params.noise_ratio())).abs() < 1e-15);
        let mut prev = f0;
        for i in 1..=10_000 {
            let v = predicted_density_model_c(i as f64 / 10_000.0, &params).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            prev = v;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn invert_a_values() {
        assert_eq!(invert_y_model_a(0.0, 1.0, 2.0).unwrap(), 0.0);
        let x = forward_y_model_a(1.0, 1.0, 2.0);
        assert!((x - 1.864_664_716_763_387).abs() < 1e-12);
        assert!((invert_y_model_a(x, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((invert_y_model_a(50.0, 1.0, 2.0).unwrap() - 49.0).abs() < 1e-6);
        assert!(invert_y_model_a(-0.1, 1.0, 2.0).is_err());
    }

    #[test]
    fn invert_c_values() {
        let params = p(0.5, 1.0);
        let v0 = solve_v0(&params).unwrap();
        assert_eq!(invert_y_model_c(0.0, &params).unwrap(), 0.0);
        assert_eq!(invert_y_model_c(1.0, &params).unwrap(), v0);
        let y = invert_y_model_c(0.5, &params).unwrap();
        assert!((forward_y_model_c(y, &params, v0) - 0.5).abs() <= 1e-10);
        // closed-form inverse as an independent route
        let closed = v0 - params.noise_ratio() * (1.0 + 0.5 / params.noise_ratio()).ln();
        assert!((y - closed).abs() < 1e-12);
        assert!(invert_y_model_c(1.5, &params).is_err());
    }

    #[test]
    fn forward_c_hits_one_at_v0() {
        let params = p(1.3, 0.4);
        let v0 = solve_v0(&params).unwrap();
        assert!((forward_y_model_c(v0, &params, v0) - 1.0).abs() < 1e-12);
        assert!(forward_y_model_c(0.0, &params, v0).abs() < 1e-12);
    }

    #[test]
    fn predicted_gap_values() {
        let params = p(0.5, 1.0);
        assert!((predicted_gap(0.0, &params).unwrap() - 0.01).abs() < 1e-15);
        assert!((predicted_gap(0.5, &params).unwrap() - 0.02).abs() < 1e-15);
        assert!(predicted_gap(1.0, &params).is_err());
        let zero = DiffusionParams::new(0.5, 1.0, 0.0).unwrap();
        for x in [0.0, 0.3, 0.99] {
            assert_eq!(predicted_gap(x, &zero).unwrap(), 0.0);
        }
    }

    #[test]
    fn model_a_profile_saturates_near_barrier() {
        let params = DiffusionParams::barrier_pushed(30.0, 1.0, 1000, 1.0).unwrap();
        let prof = AnalyticProfile::model_a(params);
        let near = prof.evaluate(0.1).unwrap();
        let far = prof.evaluate(1.5).unwrap();
        assert!(near > 0.95 && near < 1.0);
        assert!(far < 1e-10);
    }

    #[test]
    fn parameter_validation() {
        assert!(DiffusionParams::new(0.0, 1.0, 0.1).is_err());
        assert!(DiffusionParams::new(1.0, -1.0, 0.1).is_err());
        assert!(DiffusionParams::new(1.0, 1.0, -0.1).is_err());
        assert!(DiffusionParams::barrier_pushed(1.0, 1.0, 0, 1.0).is_err());
        let mut bad = DiffusionParams::barrier_pushed(1.0, 1.0, 10, 1.0).unwrap();
        bad.epsilon += 1e-9;
        assert!(bad.validate().is_err());
    }

    fn fixed(cases: u32) -> Config {
        Config {
            cases,
            rng_seed: RngSeed::Fixed(0x5eed),
            ..Config::default()
        }
    }

    proptest! {
        #![proptest_config(fixed(100))]
        #[test]
        fn v0_residual(a in 1e-3f64..20.0, s2 in 1e-3f64..20.0) {
            let params = p(a, s2);
            let v0 = solve_v0(&params).unwrap();
            let resid = params.noise_ratio() * (params.rate() * v0).exp_m1() - 1.0;
            prop_assert!(resid.abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(fixed(1000))]
        #[test]
        fn model_a_round_trip(y in 0.0f64..30.0, b in 0.0f64..5.0, lambda in 0.05f64..100.0) {
            let x = forward_y_model_a(y, b, lambda);
            let back = invert_y_model_a(x, b, lambda).unwrap();
            prop_assert!((back - y).abs() <= 1e-8, "y={} back={}", y, back);
        }

        #[test]
        fn model_c_round_trip(frac in 0.0f64..=1.0, a in 0.05f64..5.0, s2 in 0.05f64..5.0) {
            let params = p(a, s2);
            let v0 = solve_v0(&params).unwrap();
            let y = frac * v0;
            let x = forward_y_model_c(y, &params, v0).clamp(0.0, 1.0);
            let back = invert_y_model_c(x, &params).unwrap();
            prop_assert!((back - y).abs() <= 1e-8, "y={} back={}", y, back);
            prop_assert!((0.0..=v0).contains(&back));
        }
    }
}
