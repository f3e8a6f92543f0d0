use std::path::PathBuf;

use clap::{Args, ValueEnum};
use loopsim::model::{SimTime, SynapseState};
use loopsim::topology::{self, BuildOptions};
use loopsim::Network;

use crate::io::{print_json, read_text, write_json, CliError, CliResult};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Generator {
    SmallWorld,
    ScaleFree,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    pub generator: Generator,
    #[arg(long)]
    pub n: usize,
    /// Ring-lattice degree (small-world).
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Rewiring probability (small-world).
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    /// Links per new node (scale-free).
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Layout area in µm²; 0 puts every neuron at the origin.
    #[arg(long, default_value_t = 1e6)]
    pub area: f64,
    /// Signal velocity in m/s.
    #[arg(long, default_value_t = 2e7)]
    pub velocity: f64,
    /// Fixed per-edge latency in ps.
    #[arg(long, default_value_t = 1_000)]
    pub latency_ps: u64,
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
    /// Somatic loop time constant in ps.
    #[arg(long, default_value_t = 10_000.0)]
    pub tau_ps: f64,
    #[arg(long, default_value_t = 50_000)]
    pub t_refractory_ps: u64,
    /// Maximum synaptic weight.
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
    #[arg(long, default_value_t = 200)]
    pub levels: u32,
    /// Detection efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    /// Fraction of neurons made inhibitory.
    #[arg(long, default_value_t = 0.0)]
    pub inhibitory: f64,
    /// Enable spike-timing plasticity in the emitted network.
    #[arg(long)]
    pub plasticity: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: &GenerateArgs) -> CliResult<()> {
    if a.levels < 2 {
        return Err(CliError::user("--levels must be >= 2"));
    }
    let mut synapse = SynapseState::<f64>::with_level(a.levels - 1, a.levels);
    synapse.w_max = a.weight;
    let opts = BuildOptions {
        threshold: a.threshold,
        soma_tau: a.tau_ps,
        t_refractory: SimTime(a.t_refractory_ps),
        synapse,
        latency: SimTime(a.latency_ps),
        signal_velocity: a.velocity,
        detection_efficiency: a.efficiency,
    };
    let user = |e: topology::TopologyError| CliError::user(e.to_string());
    let mut net = match a.generator {
        Generator::SmallWorld => topology::generate_small_world(a.n, a.k, a.p, a.seed, &opts),
        Generator::ScaleFree => topology::generate_scale_free(a.n, a.m, a.seed, &opts),
    }
    .map_err(user)?;
    net = topology::assign_layout_and_delays(&net, a.area, a.velocity, a.seed).map_err(user)?;
    net = topology::mix_inhibitory(&net, a.inhibitory, a.seed).map_err(user)?;
    net.plasticity.enabled = a.plasticity;

    let violations = loopsim::model::validate_network(&net);
    if let Some(v) = violations.first() {
        return Err(CliError::user(format!("generated network is invalid: {v}")));
    }
    write_json(&a.out, &net)?;
    log::info!("{} neurons, {} edges -> {}", net.neurons.len(), net.edges.len(), a.out.display());
    print_json(&topology::measure(&net))
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[arg(long)]
    pub network: PathBuf,
}

pub fn measure(a: &MeasureArgs) -> CliResult<()> {
    let net = load_network(&a.network)?;
    print_json(&topology::measure(&net))
}

pub fn load_network(path: &std::path::Path) -> CliResult<Network> {
    Network::from_json(&read_text(path)?)
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}
