//! Dynamics analysis over spike logs.
//!
//! Every function here is a pure function of its inputs.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spikes::SpikeLog;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("undefined: {0}")]
    Undefined(String),
}

/// Smallest tail accepted by [`fit_power_law`].
pub const MIN_TAIL: usize = 50;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AvalancheSet {
    pub sizes: Vec<u64>,
    pub durations: Vec<u64>,
    pub bin_width: u64,
}

impl AvalancheSet {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// `(size, count)` pairs in ascending size order.
    pub fn size_histogram(&self) -> Vec<(u64, u64)> {
        let mut sorted = self.sizes.clone();
        sorted.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for s in sorted {
            match out.last_mut() {
                Some((v, c)) if *v == s => *c += 1,
                _ => out.push((s, 1)),
            }
        }
        out
    }
}

/// Mean population inter-spike interval in ps, at least 1. `None` with fewer than two spikes.
pub fn default_bin_width(log: &SpikeLog) -> Option<u64> {
    if log.len() < 2 {
        return None;
    }
    let span = log.last_time()?.0 - log.first_time()?.0;
    Some((span / (log.len() as u64 - 1)).max(1))
}

fn check_bin(bin_width: u64) -> Result<(), AnalysisError> {
    if bin_width == 0 {
        return Err(AnalysisError::Parameter("bin width must be > 0".into()));
    }
    Ok(())
}

/// Spike counts per bin from the first spike's bin to the last spike's bin.
/// Returns the index of the first bin and the counts.
pub fn binned_counts(log: &SpikeLog, bin_width: u64) -> Result<(u64, Vec<u64>), AnalysisError> {
    check_bin(bin_width)?;
    let (Some(first), Some(last)) = (log.first_time(), log.last_time()) else {
        return Ok((0, Vec::new()));
    };
    let b0 = first.0 / bin_width;
    let b1 = last.0 / bin_width;
    let mut counts = vec![0u64; (b1 - b0 + 1) as usize];
    for r in log.records() {
        counts[(r.time.0 / bin_width - b0) as usize] += 1;
    }
    Ok((b0, counts))
}

/// Avalanches as maximal runs of non-empty bins.
pub fn avalanches_from_counts(counts: &[u64], bin_width: u64) -> AvalancheSet {
    let mut set = AvalancheSet {
        bin_width,
        ..Default::default()
    };
    let (mut size, mut dur) = (0u64, 0u64);
    for &c in counts {
        if c > 0 {
            size += c;
            dur += 1;
        } else if dur > 0 {
            set.sizes.push(size);
            set.durations.push(dur);
            size = 0;
            dur = 0;
        }
    }
    if dur > 0 {
        set.sizes.push(size);
        set.durations.push(dur);
    }
    set
}

pub fn detect_avalanches(log: &SpikeLog, bin_width: u64) -> Result<AvalancheSet, AnalysisError> {
    let (_, counts) = binned_counts(log, bin_width)?;
    Ok(avalanches_from_counts(&counts, bin_width))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub xmin: u64,
    pub n_tail: usize,
    pub ks: f64,
}

/// Hurwitz zeta `sum_{k>=0} (a + k)^-s` for `s > 1`, `a > 0`, by Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const SHIFT: f64 = 12.0;
    // B_2j / (2j)!
    const COEF: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
        1.0 / 74_724_249_600.0,
    ];
    let mut sum = 0.0;
    let mut x = a;
    while x < SHIFT {
        sum += x.powf(-s);
        x += 1.0;
    }
    let xs = x.powf(-s);
    sum += x * xs / (s - 1.0) + 0.5 * xs;
    // rising factorial s (s+1) ... (s+2j-2) times x^(-s-2j+1)
    let mut fac = s;
    let mut pw = xs / x;
    let x2 = x * x;
    for (j, c) in COEF.iter().enumerate() {
        let term = c * fac * pw;
        sum += term;
        let m = 2.0 * j as f64 + 1.0;
        fac *= (s + m) * (s + m + 1.0);
        pw /= x2;
    }
    sum
}

/// `1 + n / sum ln(x / (xmin - 1/2))` over the tail `x >= xmin`.
fn discrete_alpha(tail: &[u64], xmin: u64) -> Option<f64> {
    let denom = xmin as f64 - 0.5;
    let s: f64 = tail.iter().map(|&x| (x as f64 / denom).ln()).sum();
    if !(s > 0.0) {
        return None;
    }
    Some(1.0 + tail.len() as f64 / s)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of the sorted tail
/// and the discrete power law `P(X >= x) = zeta(alpha, x) / zeta(alpha, xmin)`.
fn ks_distance(sorted_tail: &[u64], alpha: f64, xmin: u64) -> f64 {
    let n = sorted_tail.len() as f64;
    let norm = hurwitz_zeta(alpha, xmin as f64);
    // unique values with cumulative counts
    let mut uniq: Vec<(u64, usize)> = Vec::new();
    for (i, &x) in sorted_tail.iter().enumerate() {
        match uniq.last_mut() {
            Some((v, c)) if *v == x => *c = i + 1,
            _ => uniq.push((x, i + 1)),
        }
    }
    // zeta(alpha, v + 1) for descending v, reusing the previous value across small gaps
    let mut ks: f64 = 0.0;
    let mut z_next: Option<(u64, f64)> = None;
    for &(v, cum) in uniq.iter().rev() {
        let lo = v + 1;
        let z = match z_next {
            Some((from, z)) if from - lo <= 64 => {
                let mut acc = z;
                for k in lo..from {
                    acc += (k as f64).powf(-alpha);
                }
                acc
            }
            _ => hurwitz_zeta(alpha, lo as f64),
        };
        z_next = Some((lo, z));
        let model = 1.0 - z / norm;
        let emp = cum as f64 / n;
        ks = ks.max((emp - model).abs());
    }
    ks
}

fn fit_at(sorted: &[u64], xmin: u64) -> Result<PowerLawFit, AnalysisError> {
    let start = sorted.partition_point(|&x| x < xmin);
    let tail = &sorted[start..];
    if tail.len() < MIN_TAIL {
        return Err(AnalysisError::InsufficientData(format!(
            "{} samples >= xmin {xmin}, need {MIN_TAIL}",
            tail.len()
        )));
    }
    if tail.first() == tail.last() {
        return Err(AnalysisError::InsufficientData(
            "tail has a single distinct value".into(),
        ));
    }
    let alpha = discrete_alpha(tail, xmin)
        .ok_or_else(|| AnalysisError::InsufficientData("degenerate log sum".into()))?;
    Ok(PowerLawFit {
        alpha,
        xmin,
        n_tail: tail.len(),
        ks: ks_distance(tail, alpha, xmin),
    })
}

/// Discrete power-law maximum-likelihood fit.
///
/// With `xmin` given, fits the tail `x >= xmin`. Otherwise every distinct
/// sample value leaving at least [`MIN_TAIL`] samples in the tail is tried
/// and the one minimising the KS distance is kept.
pub fn fit_power_law(samples: &[u64], xmin: Option<u64>) -> Result<PowerLawFit, AnalysisError> {
    if samples.contains(&0) {
        return Err(AnalysisError::Parameter("samples must be positive".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    if let Some(x) = xmin {
        if x == 0 {
            return Err(AnalysisError::Parameter("xmin must be >= 1".into()));
        }
        return fit_at(&sorted, x);
    }
    if sorted.len() < MIN_TAIL {
        return Err(AnalysisError::InsufficientData(format!(
            "{} samples, need {MIN_TAIL}",
            sorted.len()
        )));
    }
    let last_allowed = sorted[sorted.len() - MIN_TAIL];
    let mut candidates: Vec<u64> = sorted.iter().copied().take_while(|&x| x <= last_allowed).collect();
    candidates.dedup();
    let mut best: Option<PowerLawFit> = None;
    for x in candidates {
        let Ok(fit) = fit_at(&sorted, x) else { continue };
        if best.as_ref().is_none_or(|b| fit.ks < b.ks) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| AnalysisError::InsufficientData("no usable xmin candidate".into()))
}

/// Mean ratio `n(t+1) / n(t)` over bins with `n(t) > 0` whose successor lies
/// inside the record (first to last spike). A trailing empty bin counts as a
/// ratio of zero; the bin holding the final spike has no successor.
pub fn branching_ratio_from_counts(counts: &[u64]) -> Result<f64, AnalysisError> {
    let mut sum = 0.0;
    let mut pairs = 0u64;
    for w in counts.windows(2) {
        if w[0] > 0 {
            sum += w[1] as f64 / w[0] as f64;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(AnalysisError::InsufficientData(
            "no avalanche bin has a successor bin".into(),
        ));
    }
    Ok(sum / pairs as f64)
}

pub fn branching_ratio(log: &SpikeLog, bin_width: u64) -> Result<f64, AnalysisError> {
    let (_, counts) = binned_counts(log, bin_width)?;
    branching_ratio_from_counts(&counts)
}

/// Golomb synchrony measure `chi` over `neurons`: the square root of the
/// variance of the population-mean binned signal divided by the mean
/// single-neuron variance.
pub fn synchrony_index(log: &SpikeLog, bin_width: u64, neurons: &[usize]) -> Result<f64, AnalysisError> {
    check_bin(bin_width)?;
    let index: std::collections::HashMap<usize, usize> =
        neurons.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let sub: Vec<_> = log
        .records()
        .iter()
        .filter(|r| index.contains_key(&r.neuron_id))
        .collect();
    let active: std::collections::HashSet<usize> = sub.iter().map(|r| r.neuron_id).collect();
    if neurons.len() < 2 || active.len() < 2 {
        return Err(AnalysisError::Undefined(
            "need at least two neurons with spikes in the subset".into(),
        ));
    }
    let b0 = sub.first().map(|r| r.time.0 / bin_width).unwrap_or(0);
    let b1 = sub.last().map(|r| r.time.0 / bin_width).unwrap_or(0);
    let t = (b1 - b0 + 1) as usize;
    let k = neurons.len();
    let mut x = vec![0f64; k * t];
    for r in &sub {
        let i = index[&r.neuron_id];
        x[i * t + (r.time.0 / bin_width - b0) as usize] += 1.0;
    }
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / v.len() as f64
    };
    let mean_single = (0..k).map(|i| var(&x[i * t..(i + 1) * t])).sum::<f64>() / k as f64;
    if !(mean_single > 0.0) {
        return Err(AnalysisError::Undefined("single-neuron variance is zero".into()));
    }
    let pop: Vec<f64> = (0..t)
        .map(|b| (0..k).map(|i| x[i * t + b]).sum::<f64>() / k as f64)
        .collect();
    Ok((var(&pop) / mean_single).sqrt())
}

/// One-sided power spectrum of the mean-subtracted series: `(frequency Hz, |X_k|^2)` for `k = 1..=N/2`.
pub fn power_spectrum(counts: &[f64], bin_width: u64) -> Vec<(f64, f64)> {
    let n = counts.len();
    if n < 2 || bin_width == 0 {
        return Vec::new();
    }
    let mean = counts.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = counts.iter().map(|&c| Complex::new(c - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * bin_width as f64 * 1e-12);
    (1..=n / 2).map(|k| (k as f64 * df, buf[k].norm_sqr())).collect()
}

/// Fraction of spectral power in each `[f_lo, f_hi)` band (Hz) for a binned rate series.
pub fn band_power_counts(
    counts: &[f64],
    bin_width: u64,
    bands: &[(f64, f64)],
) -> Result<Vec<f64>, AnalysisError> {
    check_bin(bin_width)?;
    for &(lo, hi) in bands {
        if !(lo >= 0.0 && hi > lo) {
            return Err(AnalysisError::Parameter(format!("band [{lo}, {hi}) is empty")));
        }
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Ok(vec![0.0; bands.len()]);
    }
    let record_s = counts.len() as f64 * bin_width as f64 * 1e-12;
    for &(lo, hi) in bands {
        if lo < 2.0 / record_s {
            return Err(AnalysisError::Parameter(format!(
                "band [{lo}, {hi}) Hz is below the resolution of a {record_s:e} s record (needs f_lo >= {:e})",
                2.0 / record_s
            )));
        }
    }
    let spec = power_spectrum(counts, bin_width);
    let total: f64 = spec.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return Ok(vec![0.0; bands.len()]);
    }
    Ok(bands
        .iter()
        .map(|&(lo, hi)| {
            spec.iter()
                .filter(|(f, _)| *f >= lo && *f < hi)
                .map(|p| p.1)
                .sum::<f64>()
                / total
        })
        .collect())
}

pub fn band_power(log: &SpikeLog, bin_width: u64, bands: &[(f64, f64)]) -> Result<Vec<f64>, AnalysisError> {
    let (_, counts) = binned_counts(log, bin_width)?;
    let counts: Vec<f64> = counts.into_iter().map(|c| c as f64).collect();
    band_power_counts(&counts, bin_width, bands)
}
