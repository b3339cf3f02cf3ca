//! Time-series container, linear detrending, and seeded MPC simulation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Error;

/// Regularly sampled real-valued observations with an integer time origin.
///
/// The step between consecutive observations is always one time unit; time is
/// an abstract index, not a calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    t0: i64,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Build a series, rejecting empty or non-finite data.
    pub fn new(name: impl Into<String>, t0: i64, values: Vec<f64>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "series value" });
        }
        Ok(Self { name: name.into(), t0, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Time index of the first observation.
    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Integer time index of each observation, starting at `t0`.
    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.values.len()).map(move |i| self.t0 + i as i64)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }
}

/// A sine wave `amplitude · sin(2π t / period + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidModel {
    amplitude: f64,
    period: f64,
    phase: f64,
}

impl SinusoidModel {
    /// Build a sinusoid; the phase is normalized into `[0, 2π)`.
    pub fn new(amplitude: f64, period: f64, phase: f64) -> Result<Self, Error> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidParameter { what: "amplitude must be finite and nonnegative" });
        }
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidParameter { what: "period must be finite and positive" });
        }
        if !phase.is_finite() {
            return Err(Error::NonFinite { what: "phase" });
        }
        let mut phase = phase % TAU;
        if phase < 0.0 {
            phase += TAU;
        }
        Ok(Self { amplitude, period, phase })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Frequency in cycles per time step, the exact reciprocal of the period.
    pub fn frequency(&self) -> f64 {
        1.0 / self.period
    }

    /// Value at (integer or fractional) time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * libm::sin(TAU * t / self.period + self.phase)
    }
}

/// Linear trend `intercept + slope · t` in observation units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendLine {
    pub intercept: f64,
    pub slope: f64,
}

impl TrendLine {
    pub const ZERO: TrendLine = TrendLine { intercept: 0.0, slope: 0.0 };

    pub fn eval(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Simulate `X_t = Σ_j A_j sin(2π t / p_j + φ_j) + ε_t` for `t = 1..=n`,
/// with `ε_t` i.i.d. `N(0, noise_sd²)` drawn from a ChaCha8 stream seeded by
/// `seed`. Identical arguments give bit-identical output.
pub fn simulate_mpc(
    components: &[SinusoidModel],
    noise_sd: f64,
    n: usize,
    seed: u64,
) -> Result<TimeSeries, Error> {
    if n == 0 {
        return Err(Error::InvalidParameter { what: "simulation length must be at least 1" });
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidParameter { what: "noise_sd must be finite and nonnegative" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd)
        .map_err(|_| Error::InvalidParameter { what: "noise_sd must be finite and nonnegative" })?;
    let values = (1..=n)
        .map(|t| {
            let t = t as f64;
            let signal: f64 = components.iter().map(|c| c.eval(t)).sum();
            signal + noise.sample(&mut rng)
        })
        .collect();
    TimeSeries::new("simulated", 1, values)
}

/// Remove the ordinary-least-squares line fitted over `(t, value)`.
///
/// The residual series has sample mean zero and zero OLS slope; evaluating
/// the returned [`TrendLine`] at each `t` and adding it back reconstructs the
/// input exactly (same floating-point expression).
pub fn detrend_linear(series: &TimeSeries) -> Result<(TimeSeries, TrendLine), Error> {
    let n = series.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: n });
    }
    let mean_t = series.times().map(|t| t as f64).sum::<f64>() / n as f64;
    let mean_y = series.mean();
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, &y) in series.times().zip(series.values()) {
        let dt = t as f64 - mean_t;
        sxx += dt * dt;
        sxy += dt * (y - mean_y);
    }
    let slope = sxy / sxx;
    let trend = TrendLine { intercept: mean_y - slope * mean_t, slope };
    let residual: Vec<f64> = series
        .times()
        .zip(series.values())
        .map(|(t, &y)| y - trend.eval(t as f64))
        .collect();
    let residual = TimeSeries::new(series.name().to_string(), series.t0(), residual)?;
    Ok((residual, trend))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sinusoid(a: f64, p: f64, phi: f64) -> SinusoidModel {
        SinusoidModel::new(a, p, phi).unwrap()
    }

    #[test]
    fn simulate_rejects_bad_arguments() {
        assert!(simulate_mpc(&[], 0.0, 0, 1).is_err());
        assert!(simulate_mpc(&[], -1.0, 10, 1).is_err());
        assert!(SinusoidModel::new(5.0, 0.0, 0.0).is_err());
        assert!(SinusoidModel::new(5.0, -3.0, 0.0).is_err());
        assert!(SinusoidModel::new(-1.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn simulate_no_signal_no_noise_is_zero() {
        let s = simulate_mpc(&[], 0.0, 10, 7).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn simulate_noiseless_matches_direct_formula() {
        let comps = [sinusoid(5.0, 15.0, 0.0), sinusoid(10.0, 50.0, 0.25)];
        let s = simulate_mpc(&comps, 0.0, 300, 3).unwrap();
        for (t, &v) in s.times().zip(s.values()) {
            let expect: f64 = comps.iter().map(|c| c.eval(t as f64)).sum();
            assert!((v - expect).abs() <= 1e-12, "t={t}: {v} vs {expect}");
        }
    }

    #[test]
    fn simulate_double_pc_zero_crossing_at_t75() {
        // 5·sin(2π·75/15) + 10·sin(2π·75/50) = 5·sin(10π) + 10·sin(3π) = 0
        let comps = [sinusoid(5.0, 15.0, 0.0), sinusoid(10.0, 50.0, 0.0)];
        let s = simulate_mpc(&comps, 0.0, 300, 1).unwrap();
        let v = s.values()[74]; // t0 = 1, so t = 75 is index 74
        assert!(v.abs() < 1e-9, "value at t=75 was {v}");
    }

    #[test]
    fn simulate_is_deterministic() {
        let comps = [sinusoid(5.0, 15.0, 0.0)];
        let a = simulate_mpc(&comps, 10.0, 300, 42).unwrap();
        let b = simulate_mpc(&comps, 10.0, 300, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_mpc(&comps, 10.0, 300, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn simulate_noise_mean_is_near_zero() {
        let n = 100_000;
        let sd = 10.0;
        let s = simulate_mpc(&[], sd, n, 99).unwrap();
        let bound = 4.0 * sd / libm::sqrt(n as f64);
        assert!(s.mean().abs() < bound, "mean {} exceeds {}", s.mean(), bound);
    }

    #[test]
    fn detrend_exact_line() {
        let s = TimeSeries::new("line", 1, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let (resid, trend) = detrend_linear(&s).unwrap();
        assert!((trend.slope - 1.0).abs() < 1e-12);
        assert!(trend.intercept.abs() < 1e-12);
        assert!(resid.values().iter().all(|v| v.abs() < 1e-12));

        // Same values shifted to t0 = 7: v = t - 6.
        let s = TimeSeries::new("line", 7, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let (_, trend) = detrend_linear(&s).unwrap();
        assert!((trend.slope - 1.0).abs() < 1e-12);
        assert!((trend.intercept + 6.0).abs() < 1e-12);
    }

    #[test]
    fn detrend_rejects_single_point() {
        let s = TimeSeries::new("one", 0, vec![1.0]).unwrap();
        assert_eq!(detrend_linear(&s), Err(Error::SeriesTooShort { needed: 2, got: 1 }));
    }

    #[test]
    fn detrend_center_symmetric_sinusoid_has_zero_slope() {
        // A wave that is even about the window center carries no OLS slope.
        // (A plain phase-zero sine over whole periods does carry one: its
        // covariance with t is -(n/2)·cot(π/p) per unit amplitude.)
        let n = 300usize;
        let p = 15.0;
        let center = (n as f64 + 1.0) / 2.0;
        let values: Vec<f64> =
            (1..=n).map(|t| 5.0 * libm::cos(TAU * (t as f64 - center) / p)).collect();
        let s = TimeSeries::new("sym", 1, values).unwrap();
        let (resid, trend) = detrend_linear(&s).unwrap();
        assert!(trend.slope.abs() < 1e-9, "slope {}", trend.slope);
        // Residuals equal the input minus its mean.
        for (r, v) in resid.values().iter().zip(s.values()) {
            assert!((r - (v - s.mean())).abs() < 1e-9);
        }
    }

    #[test]
    fn detrend_milk_like_trend_is_positive() {
        // Rising series with a seasonal wiggle keeps a positive slope.
        let values: Vec<f64> =
            (1..=168).map(|t| 600.0 + 1.5 * t as f64 + 60.0 * libm::sin(TAU * t as f64 / 12.0)).collect();
        let s = TimeSeries::new("milk-like", 1, values).unwrap();
        let (_, trend) = detrend_linear(&s).unwrap();
        assert!(trend.slope > 1.0);
    }

    proptest! {
        #[test]
        fn detrend_reconstructs_and_is_idempotent(
            vals in proptest::collection::vec(-1e3f64..1e3, 2..120),
            t0 in -50i64..50,
        ) {
            let s = TimeSeries::new("p", t0, vals).unwrap();
            let (resid, trend) = detrend_linear(&s).unwrap();
            // residual + trend reconstructs the input
            for ((t, &r), &v) in resid.times().zip(resid.values()).zip(s.values()) {
                prop_assert!((r + trend.eval(t as f64) - v).abs() < 1e-9);
            }
            // residual mean is zero and a second pass changes nothing
            prop_assert!(resid.mean().abs() < 1e-9 * (1.0 + s.mean().abs()));
            let (resid2, trend2) = detrend_linear(&resid).unwrap();
            prop_assert!(trend2.slope.abs() < 1e-9);
            for (a, b) in resid2.values().iter().zip(resid.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
