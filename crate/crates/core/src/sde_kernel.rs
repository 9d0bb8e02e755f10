//! Random streams and one-step updates for drifted Brownian motion reflected at 0.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analytics::DiffusionParams;
use crate::error::{domain, Result};

/// A reproducible, splittable source of uniforms and Gaussians.
///
/// Backed by ChaCha8 keyed with `base_seed`; `stream_id` selects the ChaCha
/// stream and the counter is the ChaCha word position. The draws at a given
/// `(base_seed, stream_id, counter)` are fixed by the cipher alone, so they do
/// not depend on host, thread schedule or build. Replica `i` of an experiment
/// always uses `stream_id = i`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    base_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(stream_id);
        Self {
            base_seed,
            stream_id,
            rng,
        }
    }

    /// Restore a stream at an arbitrary counter position.
    pub fn at_counter(base_seed: u64, stream_id: u64, counter: u128) -> Self {
        let mut s = Self::new(base_seed, stream_id);
        s.rng.set_word_pos(counter);
        s
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StepScheme {
    /// Clamp the free endpoint at zero. One Gaussian per step.
    GridSkorohod,
    /// Push by the sampled in-step bridge minimum. One Gaussian and one uniform per step.
    #[default]
    BridgeExact,
}

/// Draw from `N(0, sigma2 * h)`.
#[inline]
pub fn gaussian_increment(stream: &mut RandomStream, h: f64, sigma2: f64) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("time step must be positive, got {h}"));
    }
    Ok(unchecked_gaussian(stream, h, sigma2))
}

#[inline]
fn unchecked_gaussian(stream: &mut RandomStream, h: f64, sigma2: f64) -> f64 {
    let g = stream.standard_normal();
    if sigma2 == 0.0 {
        0.0
    } else {
        (sigma2 * h).sqrt() * g
    }
}

/// Minimum over the step of a Brownian bridge from `w0` to `w1` given the
/// uniform `u`: `(w0 + w1 - sqrt((w1 - w0)^2 - 2 sigma2 h ln u)) / 2`.
#[inline]
pub fn bridge_minimum_from_uniform(w0: f64, w1: f64, h: f64, sigma2: f64, u: f64) -> f64 {
    let d = w1 - w0;
    let disc = d * d - 2.0 * sigma2 * h * u.ln();
    // disc >= d^2 so m <= min(w0, w1); the clamp only absorbs rounding
    (0.5 * (w0 + w1 - disc.sqrt())).min(w0.min(w1))
}

/// Sample the minimum of a Brownian bridge with variance rate `sigma2` over a
/// step of length `h` between `w0` and `w1`.
pub fn sample_bridge_minimum(
    w0: f64,
    w1: f64,
    h: f64,
    sigma2: f64,
    stream: &mut RandomStream,
) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("time step must be positive, got {h}"));
    }
    Ok(bridge_minimum_from_uniform(
        w0,
        w1,
        h,
        sigma2,
        stream.uniform(),
    ))
}

/// `-ln(u) / rate`.
#[inline]
pub fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

pub fn sample_exponential(stream: &mut RandomStream, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return domain(format!("exponential rate must be positive, got {rate}"));
    }
    Ok(exponential_from_uniform(stream.uniform(), rate))
}

/// Advance `z` by one step of `dZ = sigma dB - a dt` reflected at 0.
pub fn reflect_step(
    z: f64,
    h: f64,
    params: &DiffusionParams,
    stream: &mut RandomStream,
    scheme: StepScheme,
) -> Result<f64> {
    if !(z >= 0.0) {
        return domain(format!(
            "reflected coordinate must be non-negative, got {z}"
        ));
    }
    if !(h > 0.0) {
        return domain(format!("time step must be positive, got {h}"));
    }
    Ok(reflect_step_unchecked(
        z,
        h,
        params.a,
        params.sigma2,
        stream,
        scheme,
    ))
}

/// [`reflect_step`] without argument checks, for inner loops that have
/// already validated `z >= 0` and `h > 0`.
#[inline]
pub fn reflect_step_unchecked(
    z: f64,
    h: f64,
    drift: f64,
    sigma2: f64,
    stream: &mut RandomStream,
    scheme: StepScheme,
) -> f64 {
    let end = z + unchecked_gaussian(stream, h, sigma2) - drift * h;
    match scheme {
        StepScheme::GridSkorohod => end.max(0.0),
        StepScheme::BridgeExact => {
            let u = stream.uniform();
            let m = bridge_minimum_from_uniform(z, end, h, sigma2, u);
            (end - m.min(0.0)).max(0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statcheck::ks_unsorted;

    fn params(a: f64, sigma2: f64) -> DiffusionParams {
        DiffusionParams::new(a, sigma2, 0.0).unwrap()
    }

    #[test]
    fn degenerate_gaussian_is_zero() {
        let mut s = RandomStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(gaussian_increment(&mut s, 0.5, 0.0).unwrap(), 0.0);
        }
        assert!(gaussian_increment(&mut s, 0.0, 1.0).is_err());
        assert!(gaussian_increment(&mut s, -1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let mut s = RandomStream::new(2024, 0);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| gaussian_increment(&mut s, 1.0, 1.0).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() <= 0.004, "mean {mean}");

        let draws: Vec<f64> = (0..n)
            .map(|_| gaussian_increment(&mut s, 0.25, 4.0).unwrap())
            .collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.995..=1.005).contains(&var), "var {var}");
    }

    #[test]
    fn zero_noise_reflection() {
        let mut s = RandomStream::new(3, 0);
        for scheme in [StepScheme::GridSkorohod, StepScheme::BridgeExact] {
            let z =
                reflect_step(1.0, 1.0, &params(0.3, 1.0).with_sigma2(0.0), &mut s, scheme).unwrap();
            assert!((z - 0.7).abs() < 1e-15);
            let z = reflect_step(
                0.05,
                1.0,
                &params(1.0, 1.0).with_sigma2(0.0),
                &mut s,
                scheme,
            )
            .unwrap();
            assert_eq!(z, 0.0);
        }
        assert!(reflect_step(
            -0.1,
            1.0,
            &params(1.0, 1.0),
            &mut s,
            StepScheme::BridgeExact
        )
        .is_err());
        assert!(
            reflect_step(0.1, 0.0, &params(1.0, 1.0), &mut s, StepScheme::BridgeExact).is_err()
        );
    }

    #[test]
    fn reflect_step_never_negative() {
        let mut s = RandomStream::new(4, 9);
        for scheme in [StepScheme::GridSkorohod, StepScheme::BridgeExact] {
            let mut z = 0.0;
            for i in 0..200_000 {
                let h = if i % 2 == 0 { 1e-3 } else { 0.7 };
                z = reflect_step(z, h, &params(2.0, 1.5), &mut s, scheme).unwrap();
                assert!(z >= 0.0);
            }
        }
    }

    #[test]
    fn scheme_draw_counts() {
        let p = params(1.0, 1.0);
        let mut grid = RandomStream::new(8, 0);
        let mut bridge = RandomStream::new(8, 0);
        let mut reference = RandomStream::new(8, 0);
        reflect_step(0.3, 0.01, &p, &mut grid, StepScheme::GridSkorohod).unwrap();
        reflect_step(0.3, 0.01, &p, &mut bridge, StepScheme::BridgeExact).unwrap();
        reference.standard_normal();
        assert_eq!(grid.counter(), reference.counter());
        reference.uniform();
        assert_eq!(bridge.counter(), reference.counter());
    }

    #[test]
    fn bridge_minimum_degenerate_uniform() {
        for &(w0, w1) in &[(0.3, -0.2), (1.0, 2.5), (-1.0, -1.0)] {
            let m = bridge_minimum_from_uniform(w0, w1, 0.1, 1.0, 1.0);
            assert!((m - f64::min(w0, w1)).abs() < 1e-15);
        }
    }

    #[test]
    fn bridge_minimum_below_endpoints() {
        let mut s = RandomStream::new(77, 1);
        for _ in 0..100_000 {
            let w0 = 2.0 * s.uniform() - 1.0;
            let w1 = 2.0 * s.uniform() - 1.0;
            let m = sample_bridge_minimum(w0, w1, 0.01 + s.uniform(), 2.0, &mut s).unwrap();
            assert!(m <= w0.min(w1));
        }
    }

    #[test]
    fn bridge_minimum_law() {
        // P(min <= -x) = exp(-2 x^2) for a standard bridge from 0 to 0 on [0, 1]
        let mut s = RandomStream::new(99, 0);
        let sample: Vec<f64> = (0..100_000)
            .map(|_| -sample_bridge_minimum(0.0, 0.0, 1.0, 1.0, &mut s).unwrap())
            .collect();
        let d = ks_unsorted(sample, |x| {
            if x <= 0.0 {
                0.0
            } else {
                1.0 - (-2.0 * x * x).exp()
            }
        })
        .unwrap();
        assert!(d <= 0.01, "KS {d}");
    }

    #[test]
    fn exponential_inverse_cdf() {
        let e = exponential_from_uniform((-1f64).exp(), 4.0);
        assert!((e - 0.25).abs() < 1e-15);
        let mut s = RandomStream::new(0, 0);
        assert!(sample_exponential(&mut s, 0.0).is_err());
    }

    #[test]
    fn exponential_sample_law() {
        let mut s = RandomStream::new(31337, 0);
        let sample: Vec<f64> = (0..1_000_000)
            .map(|_| sample_exponential(&mut s, 2.0).unwrap())
            .collect();
        let mean = sample.iter().sum::<f64>() / sample.len() as f64;
        assert!((0.498..=0.502).contains(&mean), "mean {mean}");
        let d = ks_unsorted(sample, |x| {
            if x <= 0.0 {
                0.0
            } else {
                1.0 - (-2.0 * x).exp()
            }
        })
        .unwrap();
        assert!(d <= 0.002, "KS {d}");
    }

    #[test]
    fn streams_are_deterministic_and_restartable() {
        let mut a = RandomStream::new(42, 7);
        let mut b = RandomStream::new(42, 7);
        let xs: Vec<u64> = (0..1000).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..1000).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);

        let mut c = RandomStream::new(42, 7);
        for _ in 0..10 {
            c.standard_normal();
        }
        let pos = c.counter();
        let next = c.uniform();
        let mut d = RandomStream::at_counter(42, 7, pos);
        assert_eq!(d.uniform().to_bits(), next.to_bits());
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let mut a = RandomStream::new(42, 0);
        let mut b = RandomStream::new(42, 1);
        let n = 100_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (a.standard_normal(), b.standard_normal()))
            .collect();
        let (mx, my) = pairs
            .iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        let (mx, my) = (mx / n as f64, my / n as f64);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in &pairs {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        let rho = sxy / (sxx * syy).sqrt();
        assert!(rho.abs() <= 0.01, "rho {rho}");
        assert_ne!(
            RandomStream::new(42, 0).next_u64(),
            RandomStream::new(42, 1).next_u64()
        );
    }

    #[test]
    fn zero_drift_reflection_is_half_normal() {
        let mut s = RandomStream::new(5150, 0);
        let h = 0.01;
        let sample: Vec<f64> = (0..100_000)
            .map(|_| {
                let mut z = 0.0;
                for _ in 0..100 {
                    z = reflect_step_unchecked(z, h, 0.0, 1.0, &mut s, StepScheme::BridgeExact);
                }
                z
            })
            .collect();
        let half_normal = |x: f64| {
            if x <= 0.0 {
                0.0
            } else {
                erf(x / std::f64::consts::SQRT_2)
            }
        };
        let d = ks_unsorted(sample, half_normal).unwrap();
        assert!(d <= 0.01, "KS {d}");
    }

    // Maclaurin series; erf(3) = 1 - 2.2e-5 so the cut-off is harmless here.
    fn erf(x: f64) -> f64 {
        if x < 3.0 {
            let mut term = x;
            let mut sum = x;
            let mut k = 0.0;
            while term.abs() > 1e-17 * sum.abs() {
                k += 1.0;
                term *= -x * x / k;
                sum += term / (2.0 * k + 1.0);
            }
            2.0 / std::f64::consts::PI.sqrt() * sum
        } else {
            1.0
        }
    }
}
