use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use loopsim::engine::{self, EngineError, RunOptions, RunStats};
use loopsim::model::SimTime;
use loopsim::plasticity::StdpRule;
use loopsim::spikes::stimulus_from_json;
use loopsim::{Network, Stimulus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generate::load_network;
use crate::io::{print_json, read_text, trial_path, write_atomic, write_json, CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlasticityOverrides {
    #[serde(default)]
    pub enabled: Option<bool>,
    #[serde(default)]
    pub overrides: Option<StdpRule>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub spike_log_path: PathBuf,
    #[serde(default)]
    pub state_path: Option<PathBuf>,
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

/// Everything one `simulate` invocation needs, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network_path: PathBuf,
    #[serde(default)]
    pub stimulus_path: Option<PathBuf>,
    pub t_end_ps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plasticity: PlasticityOverrides,
    pub outputs: Outputs,
}

impl RunConfig {
    /// Makes relative paths relative to `dir`, the directory holding the config file.
    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.network_path);
        fix(&mut self.outputs.spike_log_path);
        for p in [&mut self.stimulus_path, &mut self.outputs.state_path, &mut self.outputs.report_path]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn check(&self) -> CliResult<()> {
        if self.t_end_ps == 0 {
            return Err(CliError::user("t_end_ps must be > 0"));
        }
        let empty = |p: &Path| p.as_os_str().is_empty();
        if empty(&self.network_path)
            || self.stimulus_path.as_deref().is_some_and(empty)
            || empty(&self.outputs.spike_log_path)
            || self.outputs.state_path.as_deref().is_some_and(empty)
            || self.outputs.report_path.as_deref().is_some_and(empty)
        {
            return Err(CliError::user("paths must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Run configuration JSON; flags given alongside it take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Stimulus JSON: a list of {t_ps, neuron_id, amplitude}.
    #[arg(long)]
    pub stimulus: Option<PathBuf>,
    #[arg(long)]
    pub t_end_ps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub spikes_out: Option<PathBuf>,
    #[arg(long)]
    pub state_out: Option<PathBuf>,
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    /// Override the network's plasticity switch.
    #[arg(long)]
    pub plasticity: Option<bool>,
    /// Disable every form of plasticity for this run.
    #[arg(long)]
    pub freeze_plasticity: bool,
    /// Stop after this many processed events.
    #[arg(long)]
    pub max_events: Option<u64>,
    /// Abort with exit code 3 when more events than this are pending.
    #[arg(long, default_value_t = 50_000_000)]
    pub queue_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub somatic_latency_ps: u64,
    /// Independent runs with seeds seed..seed+N, outputs suffixed `.trialI`.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
}

fn resolve(a: &SimulateArgs) -> CliResult<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let mut cfg = serde_json::from_str::<RunConfig>(&read_text(p)?)
                .map_err(|e| CliError::user(format!("{}: {e}", p.display())))?;
            cfg.rebase(p.parent().unwrap_or(Path::new("")));
            cfg
        }
        None => RunConfig {
            network_path: a
                .network
                .clone()
                .ok_or_else(|| CliError::user("--network or --config is required"))?,
            stimulus_path: None,
            t_end_ps: a
                .t_end_ps
                .ok_or_else(|| CliError::user("--t-end-ps or --config is required"))?,
            seed: 0,
            plasticity: PlasticityOverrides::default(),
            outputs: Outputs {
                spike_log_path: a
                    .spikes_out
                    .clone()
                    .ok_or_else(|| CliError::user("--spikes-out or --config is required"))?,
                ..Default::default()
            },
        },
    };
    if let Some(p) = &a.network {
        cfg.network_path = p.clone();
    }
    if let Some(p) = &a.stimulus {
        cfg.stimulus_path = Some(p.clone());
    }
    if let Some(t) = a.t_end_ps {
        cfg.t_end_ps = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(p) = &a.spikes_out {
        cfg.outputs.spike_log_path = p.clone();
    }
    if let Some(p) = &a.state_out {
        cfg.outputs.state_path = Some(p.clone());
    }
    if let Some(p) = &a.report_out {
        cfg.outputs.report_path = Some(p.clone());
    }
    if let Some(on) = a.plasticity {
        cfg.plasticity.enabled = Some(on);
    }
    cfg.check()?;
    Ok(cfg)
}

/// Deterministic per-run report, also written to `report_path`.
#[derive(Debug, Serialize)]
struct RunReport {
    seed: u64,
    t_end_ps: u64,
    sim_time_ps: u64,
    spikes: usize,
    partial: bool,
    error: Option<String>,
    stats: RunStats,
}

#[derive(Debug, Serialize)]
struct Summary {
    #[serde(flatten)]
    report: RunReport,
    spike_log: PathBuf,
    wall_time_s: f64,
    events_per_s: f64,
}

fn one_trial(
    net: &Network,
    stimulus: &Stimulus,
    cfg: &RunConfig,
    opts: &RunOptions,
    trial: Option<usize>,
) -> (Summary, Option<CliError>) {
    let seed = cfg.seed.wrapping_add(trial.unwrap_or(0) as u64);
    let path = |p: &Path| match trial {
        Some(i) => trial_path(p, i),
        None => p.to_path_buf(),
    };
    let start = Instant::now();
    let result = engine::run(net, stimulus, SimTime(cfg.t_end_ps), seed, opts.clone());
    let wall = start.elapsed().as_secs_f64();
    let (out, err) = match result {
        Ok(out) => (Some(out), None),
        Err(e) => {
            let code = match e.error {
                EngineError::QueueOverflow { .. } | EngineError::TimeOverflow(_) => 3,
                _ => 2,
            };
            let msg = e.error.to_string();
            (e.partial.map(|b| *b), Some(CliError { code, msg }))
        }
    };
    let spike_path = path(&cfg.outputs.spike_log_path);
    let mut report = RunReport {
        seed,
        t_end_ps: cfg.t_end_ps,
        sim_time_ps: 0,
        spikes: 0,
        partial: err.is_some(),
        error: err.as_ref().map(|e| e.msg.clone()),
        stats: RunStats::default(),
    };
    let mut write_err = None;
    if let Some(out) = &out {
        report.sim_time_ps = out.state.time.0;
        report.spikes = out.log.len();
        report.stats = out.state.stats.clone();
        let mut writes = vec![write_atomic(&spike_path, out.log.to_csv().as_bytes())];
        if let Some(p) = &cfg.outputs.state_path {
            writes.push(write_json(&path(p), &out.state));
        }
        write_err = writes.into_iter().find_map(Result::err);
    }
    if let Some(p) = &cfg.outputs.report_path {
        if let Err(e) = write_json(&path(p), &report) {
            write_err.get_or_insert(e);
        }
    }
    let events = report.stats.events_processed;
    let summary = Summary {
        report,
        spike_log: spike_path,
        wall_time_s: wall,
        events_per_s: if wall > 0.0 { events as f64 / wall } else { 0.0 },
    };
    (summary, err.or(write_err))
}

pub fn run(a: &SimulateArgs) -> CliResult<()> {
    if a.trials == 0 {
        return Err(CliError::user("--trials must be >= 1"));
    }
    let cfg = resolve(a)?;
    let mut net = load_network(&cfg.network_path)?;
    if let Some(on) = cfg.plasticity.enabled {
        net.plasticity.enabled = on;
    }
    if let Some(rule) = &cfg.plasticity.overrides {
        net.plasticity.stdp = rule.clone();
    }
    let stimulus: Stimulus = match &cfg.stimulus_path {
        Some(p) => stimulus_from_json(&read_text(p)?)
            .map_err(|e| CliError::user(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let opts = RunOptions {
        freeze_plasticity: a.freeze_plasticity,
        queue_cap: Some(a.queue_cap),
        max_events: a.max_events,
        somatic_latency: SimTime(a.somatic_latency_ps),
    };

    let results: Vec<(Summary, Option<CliError>)> = if a.trials == 1 {
        vec![one_trial(&net, &stimulus, &cfg, &opts, None)]
    } else {
        (0..a.trials)
            .into_par_iter()
            .map(|i| one_trial(&net, &stimulus, &cfg, &opts, Some(i)))
            .collect()
    };
    let (summaries, errors): (Vec<Summary>, Vec<Option<CliError>>) = results.into_iter().unzip();
    if summaries.len() == 1 {
        print_json(&summaries[0])?;
    } else {
        print_json(&summaries)?;
    }
    // the most severe failure decides the exit code
    match errors.into_iter().flatten().max_by_key(|e| e.code) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
