//! Statistics used by the acceptance suite.

use serde::{Deserialize, Serialize};

use crate::analytics::AnalyticProfile;
use crate::error::{domain, Error, Result};
use crate::measurement::DensityProfile;

/// Which side of the threshold counts as a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    AtMost,
    AtLeast,
}

/// Outcome of one acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub orientation: Orientation,
    pub pass: bool,
    /// Non-gating reports never fail a run.
    pub gating: bool,
    pub replicas: usize,
    /// Hex digest of the seed set used, see [`seed_digest`].
    pub seed_digest: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl StatReport {
    pub fn new(
        test: impl Into<String>,
        statistic: f64,
        threshold: f64,
        orientation: Orientation,
        replicas: usize,
        seeds: &[u64],
    ) -> Self {
        let pass = match orientation {
            Orientation::AtMost => statistic <= threshold,
            Orientation::AtLeast => statistic >= threshold,
        };
        Self {
            test: test.into(),
            statistic,
            threshold,
            orientation,
            pass,
            gating: true,
            replicas,
            seed_digest: seed_digest(seeds),
            detail: String::new(),
        }
    }

    pub fn non_gating(mut self) -> Self {
        self.gating = false;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// One human-readable line: `PASS name: stat <= threshold`.
    pub fn line(&self) -> String {
        let status = match (self.pass, self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        let op = match self.orientation {
            Orientation::AtMost => "<=",
            Orientation::AtLeast => ">=",
        };
        let mut s = format!(
            "{status} {}: {:.6} {op} {}",
            self.test, self.statistic, self.threshold
        );
        if !self.gating {
            s.push_str(" (non-gating)");
        }
        if !self.detail.is_empty() {
            s.push_str(" | ");
            s.push_str(&self.detail);
        }
        s
    }
}

/// FNV-1a over the little-endian seed bytes, in the order given.
pub fn seed_digest(seeds: &[u64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for s in seeds {
        for byte in s.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// One-sample Kolmogorov-Smirnov distance of an ascending sample from `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientData(
            "KS statistic of an empty sample".into(),
        ));
    }
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above.abs()).max(below.abs());
    }
    Ok(d.min(1.0))
}

/// Sort `sample` and return its KS distance from `cdf`.
pub fn ks_unsorted(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    sample.sort_unstable_by(f64::total_cmp);
    ks_statistic(&sample, cdf)
}

/// Sup and width-weighted L1 deviation of a binned profile from a prediction
/// sampled at bin midpoints.
pub fn profile_deviation(
    empirical: &DensityProfile,
    predicted: &AnalyticProfile,
) -> Result<(f64, f64)> {
    let mids = empirical.midpoints();
    let predicted = mids
        .iter()
        .map(|&m| predicted.evaluate(m))
        .collect::<Result<Vec<_>>>()?;
    Ok(deviation_against(empirical, &predicted))
}

/// Sup and width-weighted L1 deviation between a profile and per-bin reference values.
pub fn deviation_against(empirical: &DensityProfile, reference: &[f64]) -> (f64, f64) {
    let widths = empirical.widths();
    let total: f64 = widths.iter().sum();
    let mut sup: f64 = 0.0;
    let mut l1 = 0.0;
    for ((v, r), w) in empirical.values.iter().zip(reference).zip(&widths) {
        let d = (v - r).abs();
        sup = sup.max(d);
        l1 += d * w;
    }
    (sup, l1 / total)
}

/// Two-sided standard normal quantile for the confidence levels used here.
pub fn z_quantile(level: f64) -> Result<f64> {
    const TABLE: [(f64, f64); 3] = [(0.90, 1.644854), (0.95, 1.959964), (0.99, 2.575829)];
    TABLE
        .iter()
        .find(|(l, _)| (l - level).abs() < 1e-9)
        .map(|&(_, z)| z)
        .ok_or_else(|| Error::Domain(format!("unsupported confidence level {level}")))
}

/// Wilson score interval for a binomial proportion.
pub fn fraction_ci(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return domain(format!("invalid counts {successes} of {trials}"));
    }
    let z = z_quantile(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::DiffusionParams;
    use crate::measurement::Frame;
    use crate::sde_kernel::{sample_exponential, RandomStream};

    fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
        move |x| {
            if x <= 0.0 {
                0.0
            } else {
                1.0 - (-rate * x).exp()
            }
        }
    }

    #[test]
    fn ks_single_point() {
        let d = ks_statistic(&[2f64.ln()], exp_cdf(1.0)).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_exact_quantiles() {
        let n = 200;
        let sample: Vec<f64> = (1..=n)
            .map(|i| -(1.0 - (i as f64 - 0.5) / n as f64).ln())
            .collect();
        let d = ks_statistic(&sample, exp_cdf(1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_wrong_law() {
        let mut s = RandomStream::new(11, 0);
        let sample: Vec<f64> = (0..10_000)
            .map(|_| sample_exponential(&mut s, 1.0).unwrap())
            .collect();
        let d = ks_unsorted(sample, exp_cdf(2.0)).unwrap();
        assert!(d >= 0.15, "d = {d}");
    }

    #[test]
    fn ks_empty_is_error() {
        assert!(ks_statistic(&[], exp_cdf(1.0)).is_err());
    }

    #[test]
    fn ks_invariant_under_monotone_map() {
        let mut s = RandomStream::new(5, 3);
        let mut sample: Vec<f64> = (0..500)
            .map(|_| sample_exponential(&mut s, 1.5).unwrap())
            .collect();
        sample.sort_unstable_by(f64::total_cmp);
        let d1 = ks_statistic(&sample, exp_cdf(1.5)).unwrap();
        // y = sqrt(x) is strictly increasing; its CDF is F(y^2)
        let mapped: Vec<f64> = sample.iter().map(|x| x.sqrt()).collect();
        let f = exp_cdf(1.5);
        let d2 = ks_statistic(&mapped, |y| f(y * y)).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&d1));
    }

    fn profile(values: Vec<f64>) -> DensityProfile {
        let n = values.len();
        let edges = (0..=n).map(|i| i as f64 / n as f64).collect();
        DensityProfile::new(edges, values, Frame::Static).unwrap()
    }

    #[test]
    fn deviation_zero_and_offset() {
        let params = DiffusionParams::new(0.5, 1.0, 0.01).unwrap();
        let pred = AnalyticProfile::model_c(params);
        let exact = profile(vec![0.0; 10]);
        let mids = exact.midpoints();
        let vals: Vec<f64> = mids.iter().map(|&m| pred.evaluate(m).unwrap()).collect();
        let (sup, l1) = profile_deviation(&profile(vals.clone()), &pred).unwrap();
        assert_eq!((sup, l1), (0.0, 0.0));
        let shifted: Vec<f64> = vals.iter().map(|v| v + 0.03).collect();
        let (sup, l1) = profile_deviation(&profile(shifted), &pred).unwrap();
        assert!((sup - 0.03).abs() < 1e-12 && (l1 - 0.03).abs() < 1e-12);
        assert!(sup >= l1);
    }

    #[test]
    fn wilson_values() {
        let (lo, _) = fraction_ci(0, 17, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        let (_, hi) = fraction_ci(17, 17, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        let (lo, hi) = fraction_ci(90, 100, 0.95).unwrap();
        // reference values from statsmodels proportion_confint(method="wilson")
        assert!((lo - 0.825_634_338).abs() < 1e-6, "lo = {lo}");
        assert!((hi - 0.944_770_863).abs() < 1e-6, "hi = {hi}");
        assert!(fraction_ci(3, 2, 0.95).is_err());
        assert!(fraction_ci(0, 0, 0.95).is_err());
        assert!(fraction_ci(1, 2, 0.5).is_err());
    }

    #[test]
    fn wilson_brackets_and_widens() {
        for trials in [1u64, 7, 50, 400] {
            for successes in 0..=trials {
                let p = successes as f64 / trials as f64;
                let mut prev_width = 0.0;
                for level in [0.90, 0.95, 0.99] {
                    let (lo, hi) = fraction_ci(successes, trials, level).unwrap();
                    assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
                    assert!(hi - lo >= prev_width);
                    prev_width = hi - lo;
                }
            }
        }
    }

    #[test]
    fn report_orientation() {
        let r = StatReport::new("x", 0.1, 0.2, Orientation::AtMost, 1, &[1]);
        assert!(r.pass);
        let r = StatReport::new("x", 0.1, 0.2, Orientation::AtLeast, 1, &[1]);
        assert!(!r.pass);
        assert!(r.line().starts_with("FAIL"));
        assert!(r.non_gating().line().starts_with("INFO"));
        assert_ne!(seed_digest(&[1, 2]), seed_digest(&[2, 1]));
    }
}
