//! Periodogram computation and peak detection.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::Error;
use crate::series::TimeSeries;

/// Spectral power at the Fourier frequencies `j/n`, `j = 1..⌊n/2⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    freqs: Vec<f64>,
    power: Vec<f64>,
}

impl Periodogram {
    /// Frequencies in cycles per time step, strictly increasing in (0, 0.5].
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Power ordinates, same length as [`freqs`](Self::freqs).
    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Periodogram ordinates `I(j/n) = |Σ_t x_t e^{-i2π(j/n)t}|² / n`.
///
/// Evaluated with one Goertzel recurrence per frequency, which agrees with
/// the direct transform sum to within accumulated rounding. The modulus makes
/// the result independent of the series' time origin.
pub fn periodogram(series: &TimeSeries) -> Result<Periodogram, Error> {
    let n = series.len();
    if n < 4 {
        return Err(Error::SeriesTooShort { needed: 4, got: n });
    }
    let values = series.values();
    let half = n / 2;
    let mut freqs = Vec::with_capacity(half);
    let mut power = Vec::with_capacity(half);
    for j in 1..=half {
        let freq = j as f64 / n as f64;
        freqs.push(freq);
        power.push(goertzel_power(values, TAU * freq) / n as f64);
    }
    Ok(Periodogram { freqs, power })
}

/// Squared magnitude of `Σ_i x_i e^{-iωi}` by the Goertzel recurrence.
fn goertzel_power(values: &[f64], omega: f64) -> f64 {
    let coeff = 2.0 * libm::cos(omega);
    let mut s1 = 0.0f64;
    let mut s2 = 0.0f64;
    for &x in values {
        let s = x + coeff * s1 - s2;
        s2 = s1;
        s1 = s;
    }
    s1 * s1 + s2 * s2 - coeff * s1 * s2
}

/// Local maxima with power at least `min_prominence_ratio` times the median
/// ordinate, strongest first (ties break toward the lower frequency), at most
/// `max_peaks` entries. Boundary ordinates count as maxima against their one
/// neighbor. Ordinates below 1e-12 of the strongest are treated as numerical
/// zero so rounding ripple never registers as a peak. May return an empty
/// list.
pub fn find_peaks(
    pg: &Periodogram,
    max_peaks: usize,
    min_prominence_ratio: f64,
) -> Vec<(f64, f64)> {
    if pg.is_empty() || max_peaks == 0 {
        return Vec::new();
    }
    let power = pg.power();
    let max_power = power.iter().fold(0.0f64, |a, &b| a.max(b));
    let threshold = (min_prominence_ratio * median(power)).max(1e-12 * max_power);
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..power.len() {
        let left_ok = i == 0 || power[i] > power[i - 1];
        let right_ok = i + 1 == power.len() || power[i] > power[i + 1];
        if left_ok && right_ok && power[i] >= threshold && power[i] > 0.0 {
            peaks.push((pg.freqs()[i], power[i]));
        }
    }
    peaks.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal))
    });
    peaks.truncate(max_peaks);
    peaks
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
