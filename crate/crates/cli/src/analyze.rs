use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use loopsim::analysis::{self, AnalysisError, PowerLawFit};
use loopsim::SpikeLog;
use serde::Serialize;

use crate::io::{print_json, write_atomic, write_json, CliError, CliResult};

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Spike log CSV (`t_ps,neuron_id`).
    #[arg(long)]
    pub spikes: PathBuf,
    /// Bin width in ps; defaults to the mean population inter-spike interval.
    #[arg(long)]
    pub bin_width_ps: Option<u64>,
    /// Fix the power-law lower cutoff instead of scanning for it.
    #[arg(long)]
    pub xmin: Option<u64>,
    /// Neurons for the synchrony index, e.g. `0-99` or `1,4,9`; default all.
    #[arg(long)]
    pub neurons: Option<String>,
    /// Frequency bands in Hz, e.g. `1e6:5e6,5e6:2e7`.
    #[arg(long)]
    pub bands: Option<String>,
    /// Directory for plot-ready CSV files.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
    /// Also write the report JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct AvalancheReport {
    count: usize,
    sizes: Vec<u64>,
    durations: Vec<u64>,
}

#[derive(Debug, Serialize)]
struct Band {
    f_lo_hz: f64,
    f_hi_hz: f64,
    fraction: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    spikes: usize,
    bin_width_ps: Option<u64>,
    avalanches: AvalancheReport,
    powerlaw_fit: Option<PowerLawFit>,
    powerlaw_note: Option<String>,
    branching_ratio: Option<f64>,
    synchrony: Option<f64>,
    band_power: Vec<Band>,
}

fn parse_bands(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(',')
        .map(|b| {
            let (lo, hi) = b
                .split_once(':')
                .ok_or_else(|| CliError::user(format!("band {b:?} is not lo:hi")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::user(format!("bad frequency {v:?}")))
            };
            Ok((num(lo)?, num(hi)?))
        })
        .collect()
}

fn parse_neurons(s: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let bad = || CliError::user(format!("bad neuron selection {part:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

fn optional<T>(r: Result<T, AnalysisError>) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(AnalysisError::Parameter(m)) => Err(CliError::user(m)),
        Err(e) => {
            log::info!("{e}");
            Ok(None)
        }
    }
}

pub fn run(a: &AnalyzeArgs) -> CliResult<()> {
    let file = File::open(&a.spikes).map_err(|e| CliError::user(format!("{}: {e}", a.spikes.display())))?;
    let log = SpikeLog::read_csv(BufReader::new(file))
        .map_err(|e| CliError::user(format!("{}: {e}", a.spikes.display())))?;
    let bands = a.bands.as_deref().map(parse_bands).transpose()?.unwrap_or_default();
    if a.bin_width_ps == Some(0) {
        return Err(CliError::user("--bin-width-ps must be > 0"));
    }
    let bin = a.bin_width_ps.or_else(|| analysis::default_bin_width(&log));

    let mut report = Report {
        spikes: log.len(),
        bin_width_ps: bin,
        avalanches: AvalancheReport {
            count: 0,
            sizes: Vec::new(),
            durations: Vec::new(),
        },
        powerlaw_fit: None,
        powerlaw_note: None,
        branching_ratio: None,
        synchrony: None,
        band_power: Vec::new(),
    };
    // with fewer than two spikes and no bin width, every metric below is empty
    let bw = bin.unwrap_or(1);
    let (_, counts) = analysis::binned_counts(&log, bw).map_err(|e| CliError::user(e.to_string()))?;
    let av = analysis::avalanches_from_counts(&counts, bw);
    match analysis::fit_power_law(&av.sizes, a.xmin) {
        Ok(fit) => report.powerlaw_fit = Some(fit),
        Err(AnalysisError::Parameter(m)) => return Err(CliError::user(m)),
        Err(e) => report.powerlaw_note = Some(e.to_string()),
    }
    report.branching_ratio = optional(analysis::branching_ratio_from_counts(&counts))?;
    let neurons = match &a.neurons {
        Some(s) => parse_neurons(s)?,
        None => (0..log.neuron_span()).collect(),
    };
    report.synchrony = optional(analysis::synchrony_index(&log, bw, &neurons))?;
    let rate: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    if !bands.is_empty() {
        let fractions = analysis::band_power_counts(&rate, bw, &bands)
            .map_err(|e| CliError::user(e.to_string()))?;
        report.band_power = bands
            .iter()
            .zip(fractions)
            .map(|(&(lo, hi), fraction)| Band {
                f_lo_hz: lo,
                f_hi_hz: hi,
                fraction,
            })
            .collect();
    }

    if let Some(dir) = &a.csv_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
        let mut hist = String::from("size,count\n");
        for (s, c) in av.size_histogram() {
            writeln!(hist, "{s},{c}").unwrap();
        }
        write_atomic(&dir.join("avalanche_sizes.csv"), hist.as_bytes())?;
        let first_bin = log.first_time().map_or(0, |t| t.0 / bw);
        let mut series = String::from("t_ps,count\n");
        for (i, c) in counts.iter().enumerate() {
            writeln!(series, "{},{c}", (first_bin + i as u64) * bw).unwrap();
        }
        write_atomic(&dir.join("rate.csv"), series.as_bytes())?;
        let mut spec = String::from("freq_hz,power\n");
        for (f, p) in analysis::power_spectrum(&rate, bw) {
            writeln!(spec, "{f:e},{p:e}").unwrap();
        }
        write_atomic(&dir.join("spectrum.csv"), spec.as_bytes())?;
    }

    report.avalanches = AvalancheReport {
        count: av.len(),
        sizes: av.sizes,
        durations: av.durations,
    };
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    print_json(&report)
}
