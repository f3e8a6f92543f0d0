//! Shared domain types: simulation time, loops, synapses, neurons and networks.
//!
//! All loop currents are dimensionless signal units. Times are integer
//! picoseconds. Positions are micrometres and velocities metres per second.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;
use crate::plasticity::{StdpRule, StpConfig};

/// Simulation time in integer picoseconds.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("simulation time overflow: {0} ps + {1} ps")]
pub struct TimeOverflow(pub u64, pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * 1_000)
    }

    pub const fn ps(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, other: SimTime) -> Result<SimTime, TimeOverflow> {
        self.0
            .checked_add(other.0)
            .map(SimTime)
            .ok_or(TimeOverflow(self.0, other.0))
    }

    /// Signed difference `self - earlier` in picoseconds.
    pub fn signed_since(self, earlier: SimTime) -> i64 {
        self.0 as i64 - earlier.0 as i64
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-12
    }
}

impl Add for SimTime {
    type Output = SimTime;

    /// Panics on overflow; use [`SimTime::checked_add`] where overflow is reachable.
    fn add(self, rhs: SimTime) -> SimTime {
        match self.checked_add(rhs) {
            Ok(t) => t,
            Err(e) => panic!("{e}"),
        }
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ps", self.0)
    }
}

/// Coupling sign: excitatory (+1) or inhibitory (-1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    #[default]
    Excitatory,
    Inhibitory,
}

impl Sign {
    pub fn value<S: Scalar>(self) -> S {
        match self {
            Sign::Excitatory => S::one(),
            Sign::Inhibitory => -S::one(),
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Excitatory => Sign::Inhibitory,
            Sign::Inhibitory => Sign::Excitatory,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Excitatory => 1,
            Sign::Inhibitory => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Excitatory),
            -1 => Ok(Sign::Inhibitory),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopMode {
    #[default]
    AccumulatePassthrough,
    ThresholdFire,
}

/// Static configuration of one integrating loop; `tau` is the L/r decay constant in ps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LoopConfig<S: Scalar> {
    pub tau: S,
    #[serde(default = "one")]
    pub threshold: S,
    #[serde(default)]
    pub mode: LoopMode,
    #[serde(default)]
    pub sign: Sign,
}

fn one<S: Scalar>() -> S {
    S::one()
}

impl<S: Scalar> LoopConfig<S> {
    pub fn passthrough(tau: S) -> Self {
        LoopConfig {
            tau,
            threshold: S::one(),
            mode: LoopMode::AccumulatePassthrough,
            sign: Sign::Excitatory,
        }
    }

    pub fn threshold_fire(tau: S, threshold: S) -> Self {
        LoopConfig {
            tau,
            threshold,
            mode: LoopMode::ThresholdFire,
            sign: Sign::Excitatory,
        }
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }
}

/// Dynamic state of one loop: stored signal and the time it was last brought current.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LoopState<S: Scalar> {
    pub value: S,
    pub last_update: SimTime,
}

impl<S: Scalar> Default for LoopState<S> {
    fn default() -> Self {
        LoopState {
            value: S::zero(),
            last_update: SimTime::ZERO,
        }
    }
}

impl<S: Scalar> LoopState<S> {
    pub fn new(value: S, last_update: SimTime) -> Self {
        LoopState { value, last_update }
    }

    /// Value the loop would hold at `now` (no mutation). `now` before
    /// `last_update` is treated as no elapsed time.
    pub fn value_at(&self, tau: S, now: SimTime) -> S {
        if self.value == S::zero() || now <= self.last_update {
            return self.value;
        }
        let dt = S::lit((now.0 - self.last_update.0) as f64);
        self.value * (-dt / tau).exp()
    }
}

/// Discrete-level plastic synapse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SynapseState<S: Scalar> {
    pub level: u32,
    pub n_levels: u32,
    #[serde(default)]
    pub sign: Sign,
    pub w_max: S,
    #[serde(default)]
    pub meta_depth: u32,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    /// Prevailing direction of recent applied updates (+1, -1, or 0 when uncommitted).
    #[serde(default)]
    pub meta_dir: i8,
    #[serde(default = "one")]
    pub p0: S,
    #[serde(default = "default_chi")]
    pub chi: S,
    #[serde(default = "one")]
    pub stp_factor: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stp: Option<StpConfig<S>>,
    #[serde(default)]
    pub last_pre: Option<SimTime>,
    #[serde(default)]
    pub last_post: Option<SimTime>,
}

pub const DEFAULT_N_LEVELS: u32 = 200;
pub const DEFAULT_M_MAX: u32 = 5;

fn default_m_max() -> u32 {
    DEFAULT_M_MAX
}

fn default_chi<S: Scalar>() -> S {
    S::lit(0.5)
}

impl<S: Scalar> Default for SynapseState<S> {
    fn default() -> Self {
        SynapseState {
            level: DEFAULT_N_LEVELS - 1,
            n_levels: DEFAULT_N_LEVELS,
            sign: Sign::Excitatory,
            w_max: S::one(),
            meta_depth: 0,
            m_max: DEFAULT_M_MAX,
            meta_dir: 0,
            p0: S::one(),
            chi: default_chi(),
            stp_factor: S::one(),
            stp: None,
            last_pre: None,
            last_post: None,
        }
    }
}

impl<S: Scalar> SynapseState<S> {
    /// Synapse at `level` of `n_levels` with unit `w_max` and default metaplastic parameters.
    pub fn with_level(level: u32, n_levels: u32) -> Self {
        SynapseState {
            level,
            n_levels,
            ..Default::default()
        }
    }

    pub fn effective_weight(&self) -> S {
        effective_weight(self)
    }

    /// `p0 * chi^meta_depth`
    pub fn transition_probability(&self) -> S {
        self.p0 * self.chi.powi(self.meta_depth as i32)
    }

    pub fn max_level(&self) -> u32 {
        self.n_levels.saturating_sub(1)
    }
}

/// Signed efficacy `sign * w_max * stp_factor * level / (n_levels - 1)`.
pub fn effective_weight<S: Scalar>(s: &SynapseState<S>) -> S {
    if s.n_levels < 2 {
        return S::zero();
    }
    let frac = S::lit(s.level as f64) / S::lit((s.n_levels - 1) as f64);
    s.sign.value::<S>() * s.w_max * s.stp_factor * frac
}

/// Slow threshold adaptation driven by the averaged firing rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HomeostasisConfig<S: Scalar> {
    /// Target rate in Hz.
    pub r_target: S,
    /// Averaging time constant in ps.
    pub tau_avg: S,
    pub kappa: S,
    pub theta_min: S,
    pub theta_max: S,
}

/// One node of a dendritic tree. Node 0 is the somatic loop and has no parent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DendriteNode<S: Scalar> {
    #[serde(default)]
    pub parent: Option<usize>,
    #[serde(rename = "loop")]
    pub config: LoopConfig<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NeuronSpec<S: Scalar> {
    /// Position in micrometres.
    #[serde(default)]
    pub position: [S; 2],
    pub dendrite_tree: Vec<DendriteNode<S>>,
    pub threshold: S,
    /// Photons per firing; `None` means one per outgoing edge.
    #[serde(default)]
    pub gain: Option<u32>,
    pub t_refractory: SimTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homeostasis: Option<HomeostasisConfig<S>>,
    #[serde(default)]
    pub inhibitory: bool,
}

impl<S: Scalar> NeuronSpec<S> {
    /// Point neuron: synapses attach directly to the somatic loop.
    pub fn point(threshold: S, soma_tau: S, t_refractory: SimTime) -> Self {
        NeuronSpec {
            position: [S::zero(), S::zero()],
            dendrite_tree: vec![DendriteNode {
                parent: None,
                config: LoopConfig::threshold_fire(soma_tau, threshold),
            }],
            threshold,
            gain: None,
            t_refractory,
            homeostasis: None,
            inhibitory: false,
        }
    }

    pub fn at(mut self, x: S, y: S) -> Self {
        self.position = [x, y];
        self
    }
}

/// Directed photonic connection terminating on one synapse of `post`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub pre: usize,
    pub post: usize,
    pub synapse_id: usize,
    pub delay: SimTime,
    /// Fixed latency included in `delay` on top of the geometric flight time.
    #[serde(default)]
    pub latency: SimTime,
    /// Dendrite node of `post` the synapse couples into.
    #[serde(default)]
    pub dendrite: usize,
    #[serde(default)]
    pub autaptic: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlasticityConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub stdp: StdpRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyMeta {
    pub generator: String,
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NetworkSpec<S: Scalar> {
    pub neurons: Vec<NeuronSpec<S>>,
    pub edges: Vec<EdgeSpec>,
    pub synapses: Vec<SynapseState<S>>,
    /// Metres per second.
    pub signal_velocity: S,
    pub detection_efficiency: S,
    #[serde(default)]
    pub plasticity: PlasticityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyMeta>,
}

impl<S: Scalar> NetworkSpec<S> {
    pub fn empty(signal_velocity: S) -> Self {
        NetworkSpec {
            neurons: Vec::new(),
            edges: Vec::new(),
            synapses: Vec::new(),
            signal_velocity,
            detection_efficiency: S::one(),
            plasticity: PlasticityConfig::default(),
            topology: None,
        }
    }

    pub fn add_neuron(&mut self, neuron: NeuronSpec<S>) -> usize {
        self.neurons.push(neuron);
        self.neurons.len() - 1
    }

    /// Adds an edge onto the somatic loop of `post` with the geometric delay plus `latency`.
    pub fn connect(
        &mut self,
        pre: usize,
        post: usize,
        synapse: SynapseState<S>,
        latency: SimTime,
    ) -> usize {
        self.connect_to(pre, post, 0, synapse, latency)
    }

    pub fn connect_to(
        &mut self,
        pre: usize,
        post: usize,
        dendrite: usize,
        synapse: SynapseState<S>,
        latency: SimTime,
    ) -> usize {
        let flight = propagation_delay(
            &self.neurons[pre].position,
            &self.neurons[post].position,
            self.signal_velocity,
        );
        self.synapses.push(synapse);
        self.edges.push(EdgeSpec {
            pre,
            post,
            synapse_id: self.synapses.len() - 1,
            delay: flight + latency,
            latency,
            dendrite,
            autaptic: pre == post,
        });
        self.edges.len() - 1
    }

    /// Recomputes every edge delay from positions, velocity and per-edge latency.
    pub fn recompute_delays(&mut self) {
        for e in &mut self.edges {
            let flight = propagation_delay(
                &self.neurons[e.pre].position,
                &self.neurons[e.post].position,
                self.signal_velocity,
            );
            e.delay = flight + e.latency;
        }
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.neurons.len()];
        for e in &self.edges {
            if e.pre < d.len() {
                d[e.pre] += 1;
            }
        }
        d
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Flight time between two positions (µm) at `velocity` (m/s), rounded half-up to whole ps.
pub fn propagation_delay<S: Scalar>(a: &[S; 2], b: &[S; 2], velocity: S) -> SimTime {
    let dx = a[0].as_f64() - b[0].as_f64();
    let dy = a[1].as_f64() - b[1].as_f64();
    let dist_um = dx.hypot(dy);
    // µm / (m/s) = 1e-6 s / ... ; in ps that is 1e6 * dist / v
    let ps = dist_um * 1e6 / velocity.as_f64();
    SimTime((ps + 0.5).floor() as u64)
}

/// A broken invariant, naming the offending entity and the rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

struct Checker(Vec<Violation>);

impl Checker {
    fn check(&mut self, ok: bool, entity: impl FnOnce() -> String, rule: impl Into<String>) {
        if !ok {
            self.0.push(Violation {
                entity: entity(),
                rule: rule.into(),
            });
        }
    }
}

fn positive<S: Scalar>(v: S) -> bool {
    v > S::zero() && !v.is_nan()
}

fn check_loop<S: Scalar>(c: &mut Checker, who: &dyn Fn() -> String, cfg: &LoopConfig<S>, root: bool) {
    c.check(positive(cfg.tau), who, "loop tau must be > 0");
    if cfg.mode == LoopMode::ThresholdFire && !root {
        c.check(positive(cfg.threshold), who, "threshold-fire loop needs threshold > 0");
    }
}

/// Checks every structural and range invariant. Returns an empty list iff the network is well formed.
pub fn validate_network<S: Scalar>(spec: &NetworkSpec<S>) -> Vec<Violation> {
    let mut c = Checker(Vec::new());
    let net = || "network".to_string();
    c.check(
        positive(spec.signal_velocity) && spec.signal_velocity.is_finite(),
        net,
        "signal_velocity must be finite and > 0",
    );
    c.check(
        positive(spec.detection_efficiency) && spec.detection_efficiency <= S::one(),
        net,
        "detection_efficiency must be in (0, 1]",
    );
    let rule = &spec.plasticity.stdp;
    c.check(
        rule.t_plus.0 > 0 && rule.t_minus.0 > 0 && rule.step >= 1,
        || "plasticity.stdp".into(),
        "t_plus > 0, t_minus > 0 and step >= 1 required",
    );

    for (i, n) in spec.neurons.iter().enumerate() {
        let who = move || format!("neuron {i}");
        c.check(positive(n.threshold), who, "threshold must be > 0");
        c.check(
            n.position.iter().all(|p| p.is_finite()),
            who,
            "position must be finite",
        );
        if n.dendrite_tree.is_empty() {
            c.check(false, who, "dendrite tree must contain a somatic root");
        } else {
            for (d, node) in n.dendrite_tree.iter().enumerate() {
                let whod = move || format!("neuron {i} dendrite {d}");
                check_loop(&mut c, &whod, &node.config, d == 0);
                match (d, node.parent) {
                    (0, None) => {}
                    (0, Some(_)) => c.check(false, whod, "root dendrite must have no parent"),
                    (_, None) => c.check(false, whod, "only dendrite 0 may be a root"),
                    (_, Some(p)) => c.check(
                        p < n.dendrite_tree.len() && p != d,
                        whod,
                        "parent index out of range",
                    ),
                }
            }
            if let Err(e) = crate::engine::DendriteLayout::build(&n.dendrite_tree) {
                c.check(false, who, e.to_string());
            }
        }
        if let Some(h) = &n.homeostasis {
            c.check(
                positive(h.r_target) && positive(h.tau_avg) && h.kappa >= S::zero(),
                who,
                "homeostasis needs r_target > 0, tau_avg > 0, kappa >= 0",
            );
            c.check(
                positive(h.theta_min) && h.theta_min <= h.theta_max,
                who,
                "homeostasis needs 0 < theta_min <= theta_max",
            );
        }
    }

    for (i, s) in spec.synapses.iter().enumerate() {
        let who = move || format!("synapse {i}");
        c.check(s.n_levels >= 2, who, "n_levels must be >= 2");
        c.check(s.level < s.n_levels, who, "level must be in [0, n_levels-1]");
        c.check(s.w_max >= S::zero(), who, "w_max must be >= 0");
        c.check(s.meta_depth <= s.m_max, who, "meta_depth must be in [0, m_max]");
        c.check(
            positive(s.p0) && s.p0 <= S::one(),
            who,
            "p0 must be in (0, 1]",
        );
        c.check(
            positive(s.chi) && s.chi < S::one(),
            who,
            "chi must be in (0, 1)",
        );
        c.check(s.stp_factor >= S::zero(), who, "stp_factor must be >= 0");
        if let Some(stp) = &s.stp {
            if let Err(msg) = stp.check() {
                c.check(false, who, msg);
            }
        }
    }

    let n = spec.neurons.len();
    let mut uses = vec![0usize; spec.synapses.len()];
    for (i, e) in spec.edges.iter().enumerate() {
        let who = move || format!("edge {i}");
        if e.pre >= n || e.post >= n {
            c.check(false, who, "endpoint out of range");
            continue;
        }
        if e.synapse_id < uses.len() {
            uses[e.synapse_id] += 1;
        } else {
            c.check(false, who, "synapse_id out of range");
        }
        c.check(
            e.dendrite < spec.neurons[e.post].dendrite_tree.len(),
            who,
            "dendrite index out of range for post neuron",
        );
        c.check(
            e.pre != e.post || e.autaptic,
            who,
            "self-edge must be flagged autaptic",
        );
        if positive(spec.signal_velocity) {
            let flight = propagation_delay(
                &spec.neurons[e.pre].position,
                &spec.neurons[e.post].position,
                spec.signal_velocity,
            );
            let expected = flight.checked_add(e.latency);
            c.check(
                expected == Ok(e.delay),
                who,
                format!(
                    "delay {} != distance/velocity + latency ({})",
                    e.delay.0,
                    expected.map(|t| t.0.to_string()).unwrap_or_else(|_| "overflow".into())
                ),
            );
        }
    }
    for (i, u) in uses.iter().enumerate() {
        c.check(
            *u == 1,
            || format!("synapse {i}"),
            format!("must be referenced by exactly one edge (found {u})"),
        );
    }
    c.0
}
