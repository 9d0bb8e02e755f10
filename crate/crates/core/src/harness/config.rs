//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys accept either
//! `snake_case` or `kebab-case`. Unknown keys are rejected.
//!
//! ```text
//! model = influx-killed
//! drift = 0.5
//! sigma2 = 1
//! epsilon = 0.002
//! h = 0.0002
//! t_end = 40
//! burn_in = 20
//! windows = 0.15:0.25,0.45:0.55
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::analytics::DiffusionParams;
use crate::error::{config, Error, Result};
use crate::particles::{steps_per_injection, ModelKind, Reinsertion};
use crate::sde_kernel::StepScheme;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub params: DiffusionParams,
    pub scheme: StepScheme,
    pub reinsertion: Reinsertion,
    pub h: f64,
    pub t_end: f64,
    pub burn_in: f64,
    pub snapshot_interval: f64,
    pub bins: usize,
    pub profile_lo: f64,
    pub profile_hi: f64,
    pub windows: Vec<(f64, f64)>,
    pub replicas: usize,
    pub base_seed: u64,
    pub out: PathBuf,
    /// Write per-replica rod snapshots.
    pub snapshots: bool,
    /// Run replicas on the rayon pool. Outputs do not depend on this.
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::InfluxKilled,
            params: DiffusionParams {
                a: 0.5,
                sigma2: 1.0,
                epsilon: 0.002,
                c: None,
                n: None,
                b: None,
            },
            scheme: StepScheme::BridgeExact,
            reinsertion: Reinsertion::PushAtOrigin,
            h: 2e-4,
            t_end: 40.0,
            burn_in: 20.0,
            snapshot_interval: 0.5,
            bins: 10,
            profile_lo: 0.0,
            profile_hi: 1.0,
            windows: Vec::new(),
            replicas: 1,
            base_seed: 1,
            out: PathBuf::from("hardrods-out"),
            snapshots: true,
            parallel: true,
        }
    }
}

pub fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::BarrierPushed => "barrier-pushed",
        ModelKind::InfluxKilled => "influx-killed",
        ModelKind::JumpReset => "jump-reset",
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind> {
    match s.to_ascii_lowercase().as_str() {
        "barrier-pushed" | "a" => Ok(ModelKind::BarrierPushed),
        "influx-killed" | "c" => Ok(ModelKind::InfluxKilled),
        "jump-reset" | "r" => Ok(ModelKind::JumpReset),
        _ => config(format!("unknown model '{s}'")),
    }
}

pub fn scheme_name(s: StepScheme) -> &'static str {
    match s {
        StepScheme::GridSkorohod => "grid-skorohod",
        StepScheme::BridgeExact => "bridge-exact",
    }
}

pub fn parse_scheme(s: &str) -> Result<StepScheme> {
    match s.to_ascii_lowercase().as_str() {
        "grid-skorohod" => Ok(StepScheme::GridSkorohod),
        "bridge-exact" => Ok(StepScheme::BridgeExact),
        _ => config(format!("unknown scheme '{s}'")),
    }
}

fn reinsertion_name(r: Reinsertion) -> &'static str {
    match r {
        Reinsertion::PushAtOrigin => "push-at-origin",
        Reinsertion::WaitForVacancy => "wait-for-vacancy",
    }
}

fn parse_reinsertion(s: &str) -> Result<Reinsertion> {
    match s.to_ascii_lowercase().as_str() {
        "push-at-origin" => Ok(Reinsertion::PushAtOrigin),
        "wait-for-vacancy" => Ok(Reinsertion::WaitForVacancy),
        _ => config(format!("unknown reinsertion rule '{s}'")),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => config(format!("bad value '{v}' for {key}")),
    }
}

fn parse_windows(v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|w| {
            let (l, r) = w
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("window '{w}' is not lo:hi")))?;
            Ok((num("windows", l.trim())?, num("windows", r.trim())?))
        })
        .collect()
}

/// Step index for time `t` on the grid of size `h`.
pub(crate) fn steps_for(t: f64, h: f64) -> u64 {
    (t / h - 1e-9).ceil().max(0.0) as u64
}

impl ExperimentConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let p = &mut self.params;
        match key.as_str() {
            "model" => self.model = parse_model(v)?,
            "drift" | "a" => p.a = num(&key, v)?,
            "sigma2" => p.sigma2 = num(&key, v)?,
            "epsilon" => p.epsilon = num(&key, v)?,
            "barrier_speed" | "c" => {
                // the barrier-pushed rods drift at the barrier speed
                let c = num(&key, v)?;
                p.c = Some(c);
                p.a = c;
            }
            "n" => p.n = Some(num(&key, v)?),
            "b" => p.b = Some(num(&key, v)?),
            "scheme" => self.scheme = parse_scheme(v)?,
            "reinsertion" => self.reinsertion = parse_reinsertion(v)?,
            "h" => self.h = num(&key, v)?,
            "t_end" => self.t_end = num(&key, v)?,
            "burn_in" => self.burn_in = num(&key, v)?,
            "snapshot_interval" => self.snapshot_interval = num(&key, v)?,
            "bins" => self.bins = num(&key, v)?,
            "profile_lo" => self.profile_lo = num(&key, v)?,
            "profile_hi" => self.profile_hi = num(&key, v)?,
            "windows" => self.windows = parse_windows(v)?,
            "replicas" => self.replicas = num(&key, v)?,
            "seed" | "base_seed" => self.base_seed = num(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            "snapshots" => self.snapshots = parse_bool(&key, v)?,
            "parallel" => self.parallel = parse_bool(&key, v)?,
            _ => return config(format!("unknown configuration key '{key}'")),
        }
        Ok(())
    }

    /// Apply the lines of a configuration file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Parse a configuration file over the defaults. The result is not
    /// validated; call [`validate`](Self::validate) or [`resolve`](Self::resolve).
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("model", model_name(self.model).into());
        kv("drift", p.a.to_string());
        kv("sigma2", p.sigma2.to_string());
        kv("epsilon", p.epsilon.to_string());
        if let Some(c) = p.c {
            kv("barrier_speed", c.to_string());
        }
        if let Some(n) = p.n {
            kv("n", n.to_string());
        }
        if let Some(b) = p.b {
            kv("b", b.to_string());
        }
        kv("scheme", scheme_name(self.scheme).into());
        kv("reinsertion", reinsertion_name(self.reinsertion).into());
        kv("h", self.h.to_string());
        kv("t_end", self.t_end.to_string());
        kv("burn_in", self.burn_in.to_string());
        kv("snapshot_interval", self.snapshot_interval.to_string());
        kv("bins", self.bins.to_string());
        kv("profile_lo", self.profile_lo.to_string());
        kv("profile_hi", self.profile_hi.to_string());
        let w: Vec<String> = self
            .windows
            .iter()
            .map(|(l, r)| format!("{l}:{r}"))
            .collect();
        kv("windows", w.join(","));
        kv("replicas", self.replicas.to_string());
        kv("seed", self.base_seed.to_string());
        kv("out", self.out.display().to_string());
        kv("snapshots", self.snapshots.to_string());
        kv("parallel", self.parallel.to_string());
        s
    }

    /// Fill in derived parameters and validate. For the barrier-pushed system
    /// a missing barrier speed defaults to the drift; for fixed-count systems a
    /// missing budget defaults to `n * epsilon`.
    pub fn resolve(mut self) -> Result<Self> {
        if self.model == ModelKind::BarrierPushed && self.params.c.is_none() {
            self.params.c = Some(self.params.a);
        }
        if self.model != ModelKind::InfluxKilled && self.params.b.is_none() {
            if let Some(n) = self.params.n {
                self.params.b = Some(n as f64 * self.params.epsilon);
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let p = &self.params;
        if !(self.h > 0.0 && self.h.is_finite()) {
            return config(format!("h must be positive, got {}", self.h));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return config(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.burn_in >= 0.0 && self.burn_in <= self.t_end) {
            return config(format!(
                "burn_in {} must lie in [0, t_end = {}]",
                self.burn_in, self.t_end
            ));
        }
        if !(self.snapshot_interval > 0.0) {
            return config("snapshot_interval must be positive");
        }
        if self.bins == 0 {
            return config("need at least one bin");
        }
        if !(self.profile_lo < self.profile_hi) {
            return config("profile_lo must be below profile_hi");
        }
        if let Some(&(l, r)) = self.windows.iter().find(|(l, r)| !(l < r)) {
            return config(format!("window {l}:{r} is empty"));
        }
        if self.replicas == 0 {
            return config("replicas must be at least 1");
        }
        match self.model {
            ModelKind::BarrierPushed => {
                if p.c.is_none() || p.n.is_none() {
                    return config("barrier-pushed system needs barrier_speed and n");
                }
            }
            ModelKind::InfluxKilled => {
                steps_per_injection(p, self.h)?;
            }
            ModelKind::JumpReset => {
                let n =
                    p.n.ok_or_else(|| Error::Config("jump-reset system needs n".into()))?;
                if n as f64 * p.epsilon > 1.0 {
                    return config(format!(
                        "n * epsilon = {} exceeds the unit interval",
                        n as f64 * p.epsilon
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        steps_for(self.t_end, self.h)
    }

    /// Step indices at which snapshots are measured: from the burn-in on,
    /// every `snapshot_interval`, up to `t_end`.
    pub fn snapshot_steps(&self) -> Vec<u64> {
        let first = steps_for(self.burn_in, self.h);
        let every = steps_for(self.snapshot_interval, self.h).max(1);
        (first..=self.total_steps())
            .step_by(every as usize)
            .collect()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        crate::measurement::uniform_edges(self.profile_lo, self.profile_hi, self.bins)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use proptest::test_runner::{Config, RngSeed};

    #[test]
    fn rejects_misaligned_step() {
        // epsilon / (a h) = 7.5
        let cfg = ExperimentConfig::parse("drift = 1\nepsilon = 0.015\nh = 0.002\n").unwrap();
        let err = cfg.resolve().unwrap_err().to_string();
        assert!(err.contains("must divide"), "{err}");
    }

    #[test]
    fn barrier_defaults_and_capacity() {
        let cfg = ExperimentConfig::parse(
            "model = barrier-pushed\ndrift = 30\nn = 1000\nepsilon = 0.001",
        )
        .unwrap()
        .resolve()
        .unwrap();
        assert_eq!(cfg.params.c, Some(30.0));
        assert!((cfg.params.b.unwrap() - 1.0).abs() < 1e-12);
        let r = ExperimentConfig::parse("model = jump-reset\nn = 600\nepsilon = 0.002").unwrap();
        assert!(r.resolve().is_err());
        let bad =
            ExperimentConfig::parse("model = barrier-pushed\nbarrier-speed = 2\ndrift = 1\nn = 5");
        assert!(bad.unwrap().resolve().is_err());
        assert!(ExperimentConfig::parse("colour = blue").is_err());
        assert!(ExperimentConfig::parse("h 0.1").is_err());
    }

    #[test]
    fn snapshot_grid() {
        let cfg = ExperimentConfig::default();
        let s = cfg.snapshot_steps();
        assert_eq!(s.len(), 41);
        assert_eq!(s[0], 100_000);
        assert_eq!(*s.last().unwrap(), 200_000);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            0usize..3,
            (1e-3f64..10.0, 1e-3f64..10.0, 0.0f64..0.01),
            proptest::option::of(1usize..5000),
            proptest::option::of(0.0f64..2.0),
            (1e-5f64..1e-2, 0.0f64..100.0, 0.0f64..1.0, 1e-3f64..1.0),
            (1usize..200, -1.0f64..1.0, 1e-3f64..3.0),
            proptest::collection::vec((-2.0f64..2.0, 1e-3f64..1.0), 0..4),
            (
                1usize..64,
                any::<u64>(),
                any::<bool>(),
                any::<bool>(),
                any::<bool>(),
            ),
        )
            .prop_map(
                |(m, (a, s2, eps), n, b, (h, t, bf, si), (bins, lo, w), wins, misc)| {
                    ExperimentConfig {
                        model: ModelKind::from_id(m as u32).unwrap(),
                        params: DiffusionParams {
                            a,
                            sigma2: s2,
                            epsilon: eps,
                            c: (m == 0).then_some(a),
                            n,
                            b,
                        },
                        scheme: if misc.2 {
                            StepScheme::BridgeExact
                        } else {
                            StepScheme::GridSkorohod
                        },
                        reinsertion: if misc.3 {
                            Reinsertion::PushAtOrigin
                        } else {
                            Reinsertion::WaitForVacancy
                        },
                        h,
                        t_end: t,
                        burn_in: t * bf,
                        snapshot_interval: si,
                        bins,
                        profile_lo: lo,
                        profile_hi: lo + w,
                        windows: wins.into_iter().map(|(l, d)| (l, l + d)).collect(),
                        replicas: misc.0,
                        base_seed: misc.1,
                        out: PathBuf::from(format!("out/run-{}", misc.1 % 97)),
                        snapshots: misc.4,
                        parallel: !misc.4,
                    }
                },
            )
    }

    proptest! {
        #![proptest_config(Config { cases: 512, rng_seed: RngSeed::Fixed(0xc0f1), ..Config::default() })]

        #[test]
        fn text_round_trip(cfg in arb_config()) {
            let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
