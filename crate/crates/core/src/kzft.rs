//! Kolmogorov–Zurbenko Fourier Transform (KZFT) bandpass filtering.
//!
//! The filter demodulates a series at a center frequency ν and smooths it
//! with `k` passes of a length-`m` uniform moving average:
//! `Z(t) = Σ_s a_s · x(t+s) · e^{−i2πνs}`, where `a` is the k-fold
//! self-convolution of the uniform kernel. The real reconstruction
//! `y(t) = 2·Re(Z(t))` passes a sinusoid at ν with unit gain at interior
//! points; other frequencies are attenuated by the transfer function
//! `T(g) = |sin(πmg) / (m sin(πg))|^k` at offset `g` from the center.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::Error;
use crate::series::TimeSeries;

/// How the filter treats points whose kernel would reach past the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Renormalize the truncated kernel over the in-range samples; the
    /// output keeps the input length and time origin.
    Renormalize,
    /// Drop the `k(m−1)/2` points at each end where the kernel is truncated;
    /// the output is shorter and its `t0` shifts accordingly.
    Trim,
}

/// KZFT filter parameters: window length `m` (odd), iteration count `k`,
/// and center frequency ν in cycles per time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KzftParams {
    window_len: usize,
    iterations: usize,
    center_freq: f64,
}

impl KzftParams {
    pub fn new(window_len: usize, iterations: usize, center_freq: f64) -> Result<Self, Error> {
        if window_len < 3 || window_len % 2 == 0 {
            return Err(Error::InvalidWindow { window: window_len });
        }
        if iterations < 1 {
            return Err(Error::InvalidParameter { what: "iterations must be at least 1" });
        }
        if !center_freq.is_finite() || center_freq <= 0.0 || center_freq > 0.5 {
            return Err(Error::FrequencyOutOfRange { frequency: center_freq });
        }
        Ok(Self { window_len, iterations, center_freq })
    }

    /// Window chosen as the odd integer nearest `periods_per_window × period`
    /// (at least 3). Convenient when the window is easier to state in whole
    /// periods of the target component than in samples.
    pub fn from_periods_per_window(
        periods_per_window: f64,
        period: f64,
        iterations: usize,
        center_freq: f64,
    ) -> Result<Self, Error> {
        if !periods_per_window.is_finite() || periods_per_window <= 0.0 {
            return Err(Error::InvalidParameter { what: "periods_per_window must be positive" });
        }
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidParameter { what: "period must be positive" });
        }
        let target = periods_per_window * period;
        let half = libm::round((target - 1.0) / 2.0).max(1.0);
        let window = 2 * half as usize + 1;
        Self::new(window, iterations, center_freq)
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn center_freq(&self) -> f64 {
        self.center_freq
    }

    /// Total filter support `k(m−1)+1`.
    pub fn support_len(&self) -> usize {
        self.iterations * (self.window_len - 1) + 1
    }

    /// Kernel half-width `k(m−1)/2`.
    pub fn half_support(&self) -> usize {
        (self.support_len() - 1) / 2
    }
}

/// A single-PC series extracted by the KZFT at one center frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComponent {
    pub series: TimeSeries,
    pub params: KzftParams,
    pub source_name: String,
}

/// Coefficients of `((Σ_j z^j)/m)^k` indexed by offset `s = −k(m−1)/2 ..= k(m−1)/2`.
///
/// Computed by iterated convolution of the length-`m` ones kernel in exact
/// integer arithmetic (f64 integers stay exact below 2^53), then divided by
/// `m^k`, so each coefficient is the correctly rounded value of its rational
/// count. The sequence is exactly symmetric and sums to 1 within rounding.
pub fn kzft_coefficients(window_len: usize, iterations: usize) -> Result<Vec<f64>, Error> {
    if window_len < 3 || window_len % 2 == 0 {
        return Err(Error::InvalidWindow { window: window_len });
    }
    if iterations < 1 {
        return Err(Error::InvalidParameter { what: "iterations must be at least 1" });
    }
    let mut counts: Vec<f64> = vec![1.0; window_len];
    for _ in 1..iterations {
        counts = convolve_ones(&counts, window_len);
    }
    let mut denom = 1.0f64;
    for _ in 0..iterations {
        denom *= window_len as f64;
    }
    Ok(counts.into_iter().map(|c| c / denom).collect())
}

fn convolve_ones(a: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + m - 1];
    for (i, &v) in a.iter().enumerate() {
        for slot in &mut out[i..i + m] {
            *slot += v;
        }
    }
    out
}

/// Apply the KZFT and return the real bandpass reconstruction `2·Re(Z)`.
///
/// In [`BoundaryMode::Renormalize`] the kernel weights over the in-range
/// samples are rescaled to unit mass, keeping output length equal to input
/// length; in [`BoundaryMode::Trim`] the affected edges are dropped instead.
pub fn kzft_apply(
    series: &TimeSeries,
    params: &KzftParams,
    boundary: BoundaryMode,
) -> Result<FilteredComponent, Error> {
    let support = params.support_len();
    let n = series.len();
    if n < support {
        return Err(Error::SeriesTooShort { needed: support, got: n });
    }
    let coeffs = kzft_coefficients(params.window_len, params.iterations)?;
    let half = params.half_support();
    // Re(e^{−i2πνs}) per kernel offset; only the real projection feeds 2·Re(Z).
    let cos_s: Vec<f64> = (0..coeffs.len())
        .map(|i| libm::cos(TAU * params.center_freq * (i as f64 - half as f64)))
        .collect();
    let x = series.values();
    let (t_lo, t_hi, t0) = match boundary {
        BoundaryMode::Renormalize => (0usize, n, series.t0()),
        BoundaryMode::Trim => (half, n - half, series.t0() + half as i64),
    };
    let mut out = Vec::with_capacity(t_hi - t_lo);
    for t in t_lo..t_hi {
        let lo = t.saturating_sub(half);
        let hi = (t + half + 1).min(n);
        let mut zr = 0.0;
        let mut wsum = 0.0;
        for u in lo..hi {
            let idx = u + half - t;
            zr += coeffs[idx] * x[u] * cos_s[idx];
            wsum += coeffs[idx];
        }
        out.push(2.0 * zr / wsum);
    }
    let filtered = TimeSeries::new(series.name().to_string(), t0, out)?;
    Ok(FilteredComponent {
        series: filtered,
        params: *params,
        source_name: series.name().to_string(),
    })
}

/// Filter gain at frequency `f`: `T(g) = |sin(πmg)/(m sin(πg))|^k` with
/// `g = f − ν` and `T(0) = 1` by continuity. The expression has period 1 in
/// `g`, so image frequencies such as `2ν` may be evaluated directly.
pub fn transfer_gain(params: &KzftParams, f: f64) -> f64 {
    let d = dirichlet(params.window_len, f - params.center_freq).abs();
    let mut gain = 1.0;
    for _ in 0..params.iterations {
        gain *= d;
    }
    gain
}

fn dirichlet(m: usize, g: f64) -> f64 {
    let denom = libm::sin(PI * g);
    if denom.abs() < 1e-12 {
        // g at an integer; the limit is 1 for odd m.
        return 1.0;
    }
    libm::sin(PI * m as f64 * g) / (m as f64 * denom)
}

/// Width between the half-power points of the mainlobe (where the squared
/// gain drops to 1/2), found by bisection on `[0, 1/m]`.
pub fn half_power_bandwidth(params: &KzftParams) -> f64 {
    let target = 1.0 / libm::sqrt(2.0);
    let mut lo = 0.0f64;
    let mut hi = 1.0 / params.window_len as f64;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if transfer_gain(params, params.center_freq + mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + hi
}

/// For each center frequency, the smallest odd window whose gain at every
/// other center and at its own conjugate image `2ν` is at most
/// `max_sidelobe`, and whose half-power bandwidth is at most half the gap to
/// the nearest of the other centers and DC. `max_support` bounds the filter
/// support `k(m−1)+1`, normally by the series length.
///
/// Fails with [`Error::UnseparableFrequencies`] when no admissible window
/// exists, naming the offending pair.
pub fn choose_bandwidth(
    frequencies: &[f64],
    iterations: usize,
    max_sidelobe: f64,
    max_support: usize,
) -> Result<Vec<KzftParams>, Error> {
    if frequencies.is_empty() {
        return Err(Error::InvalidParameter { what: "at least one frequency is required" });
    }
    if iterations < 1 {
        return Err(Error::InvalidParameter { what: "iterations must be at least 1" });
    }
    if !max_sidelobe.is_finite() || max_sidelobe <= 0.0 || max_sidelobe >= 1.0 {
        return Err(Error::InvalidParameter { what: "max_sidelobe must lie in (0, 1)" });
    }
    for (i, &f) in frequencies.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 || f > 0.5 {
            return Err(Error::FrequencyOutOfRange { frequency: f });
        }
        if frequencies[..i].contains(&f) {
            return Err(Error::DuplicateFrequency { frequency: f });
        }
    }
    frequencies
        .iter()
        .map(|&center| {
            let others: Vec<f64> =
                frequencies.iter().copied().filter(|&f| f != center).collect();
            // Distance to the nearest competing line; the center's own
            // distance to DC (equally, to its conjugate image) always counts.
            let gap = others
                .iter()
                .map(|f| (f - center).abs())
                .fold(center, f64::min);
            let mut window = 3;
            while iterations * (window - 1) + 1 <= max_support {
                let params = KzftParams::new(window, iterations, center)?;
                let sidelobes_ok = others
                    .iter()
                    .all(|&f| transfer_gain(&params, f) <= max_sidelobe)
                    && transfer_gain(&params, 2.0 * center) <= max_sidelobe;
                if sidelobes_ok && half_power_bandwidth(&params) <= gap / 2.0 {
                    return Ok(params);
                }
                window += 2;
            }
            let conflict = others
                .iter()
                .copied()
                .min_by(|a, b| {
                    (a - center)
                        .abs()
                        .partial_cmp(&(b - center).abs())
                        .unwrap_or(core::cmp::Ordering::Equal)
                })
                .unwrap_or(2.0 * center);
            Err(Error::UnseparableFrequencies { center, conflict })
        })
        .collect()
}
