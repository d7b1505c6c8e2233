//! Return-series observables.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Simulation,
    MarketData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    /// Return pairs dropped because one side had `M = 0`.
    pub skipped: usize,
    pub source: Source,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>, source: Source) -> Self {
        Self {
            values,
            skipped: 0,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfCurve {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
}

impl AcfCurve {
    pub fn at(&self, lag: usize) -> Option<f64> {
        self.lags.iter().position(|&l| l == lag).map(|i| self.values[i])
    }
}

/// `r(t) = ln|M(t)| - ln|M(t-1)|`, dropping pairs that touch `M = 0`.
pub fn log_returns(series: &[f64]) -> Result<ReturnSeries> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let mut values = Vec::with_capacity(series.len() - 1);
    let mut skipped = 0;
    for w in series.windows(2) {
        let (prev, cur) = (w[0].abs(), w[1].abs());
        if prev > 0.0 && cur > 0.0 {
            values.push(cur.ln() - prev.ln());
        } else {
            skipped += 1;
        }
    }
    Ok(ReturnSeries {
        values,
        skipped,
        source: Source::Simulation,
    })
}

/// Reference level subtracted from `|r(t)|` in the autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcfCentring {
    /// `|mean(r)|`. Returns average to nearly zero, so the curve keeps the
    /// squared mean of `|r|` as a plateau that decays with the overlap.
    #[default]
    AbsOfMean,
    /// `mean(|r|)`, the usual sample autocorrelation of `|r|`.
    MeanOfAbs,
}

impl AcfCentring {
    pub fn level(self, values: &[f64]) -> f64 {
        let t = values.len() as f64;
        match self {
            AcfCentring::AbsOfMean => (values.iter().sum::<f64>() / t).abs(),
            AcfCentring::MeanOfAbs => values.iter().map(|v| v.abs()).sum::<f64>() / t,
        }
    }
}

/// Centred absolute returns plus their sum of squares.
fn centred_abs(r: &ReturnSeries, centring: AcfCentring) -> Result<(Vec<f64>, f64)> {
    let level = centring.level(&r.values);
    let x: Vec<f64> = r.values.iter().map(|v| v.abs() - level).collect();
    let denom: f64 = x.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(Error::Degenerate("absolute returns are constant".into()));
    }
    Ok((x, denom))
}

fn lagged_sum(x: &[f64], lag: usize) -> f64 {
    x[lag..].iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Autocorrelation of absolute returns at the given lags.
///
/// The numerator at lag `tau` sums the `T - tau` overlapping products and the
/// denominator sums all `T` squared deviations, so `A(tau) -> 0` as
/// `tau -> T`. Each lag costs `O(T)`; lags are spread over `exec`.
pub fn abs_autocorrelation_at(
    r: &ReturnSeries,
    lags: &[usize],
    centring: AcfCentring,
    exec: Execution,
) -> Result<AcfCurve> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if r.len() < max_lag + 2 {
        return Err(Error::TooShort {
            needed: max_lag + 2,
            got: r.len(),
        });
    }
    let (x, denom) = centred_abs(r, centring)?;
    let values = exec.map(lags, |&lag| if lag == 0 { 1.0 } else { lagged_sum(&x, lag) / denom });
    Ok(AcfCurve {
        lags: lags.to_vec(),
        values,
    })
}

/// Autocorrelation at every lag `0..=max_lag`, computed with one FFT-based
/// circular correlation of the zero-padded series.
pub fn abs_autocorrelation_fft(r: &ReturnSeries, max_lag: usize, centring: AcfCentring) -> Result<AcfCurve> {
    if r.len() < max_lag + 2 {
        return Err(Error::TooShort {
            needed: max_lag + 2,
            got: r.len(),
        });
    }
    let (x, denom) = centred_abs(r, centring)?;
    let len = (2 * x.len()).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / (len as f64 * denom);
    let mut values: Vec<f64> = buf[..=max_lag]
        .iter()
        .map(|c| (c.re * scale).clamp(-1.0, 1.0))
        .collect();
    values[0] = 1.0;
    Ok(AcfCurve {
        lags: (0..=max_lag).collect(),
        values,
    })
}

/// Autocorrelation of absolute returns for lags `0..=max_lag`.
pub fn abs_autocorrelation(r: &ReturnSeries, max_lag: usize, centring: AcfCentring) -> Result<AcfCurve> {
    // Direct evaluation wins for short lag ranges.
    if max_lag <= 64 {
        let lags: Vec<usize> = (0..=max_lag).collect();
        abs_autocorrelation_at(r, &lags, centring, Execution::Sequential)
    } else {
        abs_autocorrelation_fft(r, max_lag, centring)
    }
}

/// Roughly log-spaced integer lags `1..=max_lag`, `per_decade` points per
/// decade, deduplicated. Lags below `per_decade` are all included.
pub fn log_lag_grid(max_lag: usize, per_decade: usize) -> Vec<usize> {
    let mut lags: Vec<usize> = (1..=max_lag.min(per_decade)).collect();
    if max_lag > per_decade {
        let decades = (max_lag as f64).log10();
        let steps = (decades * per_decade as f64).ceil() as usize;
        for s in 0..=steps {
            let lag = 10f64.powf(s as f64 / per_decade as f64).round() as usize;
            if lag >= 1 && lag <= max_lag {
                lags.push(lag);
            }
        }
        lags.push(max_lag);
    }
    lags.sort_unstable();
    lags.dedup();
    lags
}

/// Point-wise mean of several curves sampled on identical lags.
pub fn mean_acf(curves: &[AcfCurve]) -> Result<AcfCurve> {
    let first = curves.first().ok_or(Error::Empty)?;
    if curves.iter().any(|c| c.lags != first.lags) {
        return Err(Error::InvalidParameter("curves use different lag grids".into()));
    }
    let k = curves.len() as f64;
    let values = (0..first.lags.len())
        .map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / k)
        .collect();
    Ok(AcfCurve {
        lags: first.lags.clone(),
        values,
    })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn central_moment(x: &[f64], centre: f64, k: i32) -> f64 {
    x.iter().map(|v| (v - centre).powi(k)).sum::<f64>() / x.len() as f64
}

/// Pearson kurtosis `m4 / m2^2`; a normal sample gives 3.
pub fn kurtosis(r: &ReturnSeries) -> Result<f64> {
    if r.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: r.len(),
        });
    }
    let mu = mean(&r.values);
    let m2 = central_moment(&r.values, mu, 2);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok(central_moment(&r.values, mu, 4) / (m2 * m2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centres(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}

/// Equal-width bins spanning `[min, max]`, normalised to unit area.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + i as f64 * width })
        .collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = 1.0 / (values.len() as f64 * width);
    Ok(Histogram {
        edges,
        densities: counts.iter().map(|&c| c as f64 * norm).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    pub values: Vec<f64>,
    pub fractions: Vec<f64>,
}

pub fn ecdf(values: &[f64]) -> Result<Ecdf> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let t = sorted.len() as f64;
    let fractions = (1..=sorted.len()).map(|i| i as f64 / t).collect();
    Ok(Ecdf {
        values: sorted,
        fractions,
    })
}

/// Sorted standardised sample paired with standard normal quantiles at
/// plotting positions `(i - 0.5) / T`.
pub fn qq_points(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: values.len(),
        });
    }
    let mu = mean(values);
    let sd = central_moment(values, mu, 2).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let mut z: Vec<f64> = values.iter().map(|v| (v - mu) / sd).collect();
    z.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let t = z.len() as f64;
    Ok(z.into_iter()
        .enumerate()
        .map(|(i, s)| (normal.inverse_cdf((i as f64 + 0.5) / t), s))
        .collect())
}

/// Largest `|theoretical - sample|` over the central `fraction` of Q-Q points.
pub fn qq_max_central_deviation(points: &[(f64, f64)], fraction: f64) -> f64 {
    let t = points.len();
    let cut = ((1.0 - fraction) / 2.0 * t as f64).floor() as usize;
    points[cut..t - cut]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
