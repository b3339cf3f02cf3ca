//! End-to-end decomposition: detrend, bandpass each center frequency,
//! bootstrap the filtered components, sample each amplitude posterior, and
//! assemble the summed reconstruction and forecast.
//!
//! Components are fitted independently (their frequencies are distinct, so
//! their posteriors are too); each derives its own RNG seeds from the master
//! seed and its frequency, which makes results independent of evaluation
//! order and lets drivers fan the per-component work out across threads.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::bootstrap::{make_block_plan, pbb_resample, periodic_mean_ci, PhaseInterval};
use crate::error::Error;
use crate::kzft::{choose_bandwidth, kzft_apply, BoundaryMode, FilteredComponent, KzftParams};
use crate::mcmc::{
    run_chain, summarize, AmplitudeEstimate, AmplitudeModel, McmcConfig, PosteriorChain,
};
use crate::series::{detrend_linear, TimeSeries, TrendLine};
use crate::spectral::{periodogram, Periodogram};

/// How the sinusoid phase of each component is chosen before sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Phase fixed at zero, matching the plain `A sin(2πt/p)` mean.
    Zero,
    /// Phase chosen to maximize the inner product of the filtered series
    /// with `sin(2πνt + φ)` over a 256-point grid.
    Aligned,
}

/// Options for [`decompose`]. `seed` drives every stochastic stage through
/// per-component derived seeds; the `mcmc.seed` field is ignored here.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    /// KZFT smoothing passes (k).
    pub filter_iterations: usize,
    /// Ceiling on the filter gain at competing frequencies and conjugate images.
    pub max_sidelobe: f64,
    /// Explicit odd window per frequency, bypassing the bandwidth rule.
    pub windows: Option<Vec<usize>>,
    /// Window stated in whole periods of each component (odd-rounded);
    /// used when `windows` is absent.
    pub periods_per_window: Option<f64>,
    pub boundary: BoundaryMode,
    /// Bootstrap resamples per component (B).
    pub resamples: usize,
    pub ci_level: f64,
    /// A component is significant when its CI band excludes zero at at least
    /// this fraction of phases.
    pub significance_min_phase_fraction: f64,
    pub mcmc: McmcConfig,
    pub jacobian_correction: bool,
    pub phase_mode: PhaseMode,
    pub detrend: bool,
    pub forecast_horizon: usize,
    /// Extend the linear trend into the forecast range; when off the
    /// forecast carries the sinusoids only.
    pub extrapolate_trend: bool,
    /// Also run a chain on every bootstrap resample and record the posterior
    /// mean amplitudes (a spread diagnostic; the headline estimate always
    /// comes from the filtered series itself).
    pub resample_chains: bool,
    pub seed: u64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            filter_iterations: 3,
            max_sidelobe: 0.05,
            windows: None,
            periods_per_window: None,
            boundary: BoundaryMode::Renormalize,
            resamples: 200,
            ci_level: 0.95,
            significance_min_phase_fraction: 0.25,
            mcmc: McmcConfig::default(),
            jacobian_correction: false,
            phase_mode: PhaseMode::Zero,
            detrend: true,
            forecast_horizon: 0,
            extrapolate_trend: true,
            resample_chains: false,
            seed: 0,
        }
    }
}

/// Everything recorded about one fitted component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFit {
    pub frequency: f64,
    /// Exact period 1/ν used in the sinusoid mean function.
    pub period: f64,
    /// Period rounded to the nearest integer, used as the bootstrap block length.
    pub block_period: usize,
    pub params: KzftParams,
    pub phase: f64,
    pub filtered: FilteredComponent,
    pub intervals: Vec<PhaseInterval>,
    pub significant: bool,
    /// Phases whose CI band excludes zero.
    pub phases_excluding_zero: usize,
    pub chain: PosteriorChain,
    pub estimate: AmplitudeEstimate,
    pub bootstrap_seed: u64,
    pub mcmc_seed: u64,
    /// Posterior mean amplitude per bootstrap resample, when requested.
    pub resample_amplitudes: Option<Vec<f64>>,
}

impl ComponentFit {
    /// The fitted sinusoid `Â sin(2πνt + φ)` at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.estimate.mean_amplitude * libm::sin(TAU * self.frequency * t + self.phase)
    }
}

/// Result of a full decomposition run.
#[derive(Debug, Clone, PartialEq)]
pub struct McpFit {
    /// Fitted components in ascending frequency order.
    pub components: Vec<ComponentFit>,
    pub trend: TrendLine,
    /// `trend(t) + Σ_{significant} Â_j sin(2πν_j t + φ_j)` over the sample range.
    pub fitted: TimeSeries,
    /// Forecast of `forecast_horizon` steps past the sample, when requested.
    pub forecast: Option<TimeSeries>,
    pub input_t0: i64,
    pub input_len: usize,
}

/// Deterministic seed derivation (splitmix64 mixing), used to hand every
/// component and stage its own independent RNG stream.
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(salt)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SALT_BOOTSTRAP: u64 = 0x626f_6f74;
const SALT_MCMC: u64 = 0x6d63_6d63;

/// Resolve per-frequency filter parameters from the options: explicit
/// windows win, then `periods_per_window`, then the bandwidth rule.
pub fn resolve_params(
    frequencies: &[f64],
    options: &DecomposeOptions,
    series_len: usize,
) -> Result<Vec<KzftParams>, Error> {
    if frequencies.is_empty() {
        return Err(Error::InvalidParameter { what: "at least one frequency is required" });
    }
    for (i, &f) in frequencies.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 || f > 0.5 {
            return Err(Error::FrequencyOutOfRange { frequency: f });
        }
        if frequencies[..i].contains(&f) {
            return Err(Error::DuplicateFrequency { frequency: f });
        }
    }
    if let Some(windows) = &options.windows {
        if windows.len() != frequencies.len() {
            return Err(Error::InvalidParameter {
                what: "windows must list one window per frequency",
            });
        }
        return frequencies
            .iter()
            .zip(windows)
            .map(|(&f, &m)| KzftParams::new(m, options.filter_iterations, f))
            .collect();
    }
    if let Some(ppw) = options.periods_per_window {
        return frequencies
            .iter()
            .map(|&f| {
                KzftParams::from_periods_per_window(ppw, 1.0 / f, options.filter_iterations, f)
            })
            .collect();
    }
    choose_bandwidth(frequencies, options.filter_iterations, options.max_sidelobe, series_len)
}

/// Detrend step shared by [`decompose`] and external drivers; a disabled
/// detrend returns the input unchanged with the zero trend line.
pub fn detrend_step(
    input: &TimeSeries,
    options: &DecomposeOptions,
) -> Result<(TimeSeries, TrendLine), Error> {
    if options.detrend {
        detrend_linear(input)
    } else {
        Ok((input.clone(), TrendLine::ZERO))
    }
}

/// Filter, bootstrap, and sample one component of the detrended series.
pub fn fit_component(
    detrended: &TimeSeries,
    frequency: f64,
    params: KzftParams,
    options: &DecomposeOptions,
) -> Result<ComponentFit, Error> {
    let filtered = kzft_apply(detrended, &params, options.boundary)?;
    let period = 1.0 / frequency;
    let block_period = libm::round(period).max(1.0) as usize;
    let plan = make_block_plan(filtered.series.len(), block_period)?;
    let bootstrap_seed = derive_seed(options.seed, frequency.to_bits() ^ SALT_BOOTSTRAP);
    let ensemble = pbb_resample(&filtered, &plan, options.resamples, bootstrap_seed)?;
    let intervals = periodic_mean_ci(&ensemble, options.ci_level)?;
    let phases_excluding_zero =
        intervals.iter().filter(|iv| iv.low > 0.0 || iv.high < 0.0).count();
    let significant = phases_excluding_zero as f64
        >= options.significance_min_phase_fraction * block_period as f64;

    let phase = match options.phase_mode {
        PhaseMode::Zero => 0.0,
        PhaseMode::Aligned => align_phase(&filtered.series, frequency),
    };
    let model = AmplitudeModel::new(period)?
        .with_phase(phase)
        .with_jacobian_correction(options.jacobian_correction);
    let mcmc_seed = derive_seed(options.seed, frequency.to_bits() ^ SALT_MCMC);
    let config = McmcConfig { seed: mcmc_seed, ..options.mcmc };
    let chain = run_chain(&filtered, &model, &config)?;
    let estimate = summarize(&chain)?;

    let resample_amplitudes = if options.resample_chains {
        let means = ensemble
            .resamples()
            .iter()
            .enumerate()
            .map(|(i, rs)| {
                let comp = FilteredComponent {
                    series: rs.clone(),
                    params,
                    source_name: filtered.source_name.clone(),
                };
                let cfg = McmcConfig { seed: derive_seed(mcmc_seed, i as u64 + 1), ..config };
                summarize(&run_chain(&comp, &model, &cfg)?).map(|e| e.mean_amplitude)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(means)
    } else {
        None
    };

    Ok(ComponentFit {
        frequency,
        period,
        block_period,
        params,
        phase,
        filtered,
        intervals,
        significant,
        phases_excluding_zero,
        chain,
        estimate,
        bootstrap_seed,
        mcmc_seed,
        resample_amplitudes,
    })
}

/// Phase maximizing `Σ_t y_t sin(2πνt + φ)` over a 256-point grid in `[0, 2π)`.
fn align_phase(series: &TimeSeries, frequency: f64) -> f64 {
    let mut best_phase = 0.0;
    let mut best_dot = f64::NEG_INFINITY;
    for i in 0..256 {
        let phase = TAU * i as f64 / 256.0;
        let dot: f64 = series
            .times()
            .zip(series.values())
            .map(|(t, &y)| y * libm::sin(TAU * frequency * t as f64 + phase))
            .sum();
        if dot > best_dot {
            best_dot = dot;
            best_phase = phase;
        }
    }
    best_phase
}

/// Combine fitted components into the reconstruction and forecast. The
/// component list may arrive in any order; it is sorted by frequency.
pub fn assemble(
    input: &TimeSeries,
    trend: TrendLine,
    mut components: Vec<ComponentFit>,
    options: &DecomposeOptions,
) -> Result<McpFit, Error> {
    components.sort_by(|a, b| {
        a.frequency.partial_cmp(&b.frequency).unwrap_or(core::cmp::Ordering::Equal)
    });
    let fitted_values: Vec<f64> =
        input.times().map(|t| eval_fit(&trend, &components, t as f64, true)).collect();
    let fitted = TimeSeries::new(input.name().to_string(), input.t0(), fitted_values)?;
    let forecast = if options.forecast_horizon > 0 {
        let start = input.t0() + input.len() as i64;
        let values: Vec<f64> = (0..options.forecast_horizon)
            .map(|i| {
                eval_fit(&trend, &components, (start + i as i64) as f64, options.extrapolate_trend)
            })
            .collect();
        Some(TimeSeries::new("forecast", start, values)?)
    } else {
        None
    };
    Ok(McpFit {
        components,
        trend,
        fitted,
        forecast,
        input_t0: input.t0(),
        input_len: input.len(),
    })
}

fn eval_fit(trend: &TrendLine, components: &[ComponentFit], t: f64, with_trend: bool) -> f64 {
    let base = if with_trend { trend.eval(t) } else { 0.0 };
    base + components.iter().filter(|c| c.significant).map(|c| c.eval(t)).sum::<f64>()
}

/// Run the full two-stage decomposition at the given center frequencies.
pub fn decompose(
    input: &TimeSeries,
    frequencies: &[f64],
    options: &DecomposeOptions,
) -> Result<McpFit, Error> {
    let params = resolve_params(frequencies, options, input.len())?;
    let (detrended, trend) = detrend_step(input, options)?;
    let components = frequencies
        .iter()
        .zip(params)
        .map(|(&f, p)| fit_component(&detrended, f, p, options))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(input, trend, components, options)
}

/// Evaluate the fitted trend plus the significant sinusoids over an
/// arbitrary time range; times beyond the sample extrapolate the fit.
pub fn reconstruct(fit: &McpFit, t_start: i64, len: usize) -> Result<TimeSeries, Error> {
    if len == 0 {
        return Err(Error::InvalidParameter { what: "reconstruction length must be at least 1" });
    }
    let values: Vec<f64> = (0..len)
        .map(|i| eval_fit(&fit.trend, &fit.components, (t_start + i as i64) as f64, true))
        .collect();
    TimeSeries::new("reconstruction", t_start, values)
}

/// Residual summary of a fit against the series it was produced from.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDiagnostics {
    pub residual: TimeSeries,
    pub residual_variance: f64,
    pub input_variance: f64,
    /// residual variance / input variance.
    pub variance_ratio: f64,
    pub periodogram: Periodogram,
}

/// `residual = input − fitted`, its variance ratio, and its periodogram.
pub fn residual_diagnostics(
    fit: &McpFit,
    input: &TimeSeries,
) -> Result<ResidualDiagnostics, Error> {
    if input.len() != fit.input_len || input.t0() != fit.input_t0 {
        return Err(Error::InputMismatch);
    }
    let values: Vec<f64> = input
        .values()
        .iter()
        .zip(fit.fitted.values())
        .map(|(y, f)| y - f)
        .collect();
    let residual = TimeSeries::new(input.name().to_string(), input.t0(), values)?;
    let residual_variance = residual.variance();
    let input_variance = input.variance();
    let pg = periodogram(&residual)?;
    Ok(ResidualDiagnostics {
        residual_variance,
        input_variance,
        variance_ratio: residual_variance / input_variance,
        periodogram: pg,
        residual,
    })
}
