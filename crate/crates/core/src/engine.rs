//! Discrete-event core.
//!
//! Events are processed in strict `(time, seq)` order, where `seq` is the
//! insertion ordinal. A photon arrival that is detected charges the
//! synapse's integration loop and schedules a fire check on the target at
//! the same instant, so coincident arrivals are integrated before the
//! threshold is compared. Firing resets the somatic integration domain,
//! starts the refractory period and fans the neuron's photons out over its
//! outgoing edges.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    effective_weight, validate_network, DendriteNode, LoopConfig, LoopMode, LoopState,
    NetworkSpec, SimTime, SynapseState, TimeOverflow, Violation,
};
use crate::num::Scalar;
use crate::plasticity::{homeostatic_update, stdp_update, stp_update, HomeostasisState};
use crate::rng::{streams, RngStream};
use crate::spikes::{ExternalInput, SpikeLog, SpikeRecord};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("dendrite tree is empty")]
    Empty,
    #[error("dendrite {0} has an invalid parent")]
    BadParent(usize),
    #[error("dendrite tree has a cycle through node {0}")]
    Cycle(usize),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("causality violation: update to {requested} before last update at {last}")]
pub struct CausalityError {
    pub last: SimTime,
    pub requested: SimTime,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid network ({} violation(s)); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidNetwork(Vec<Violation>),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),
    #[error("event queue overflow at {time}: cap of {cap} pending events reached")]
    QueueOverflow { time: SimTime, cap: usize },
    #[error(transparent)]
    TimeOverflow(#[from] TimeOverflow),
}

/// Precomputed shape of one dendritic tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DendriteLayout {
    pub children: Vec<Vec<usize>>,
    /// Children before parents; the root (0) is last.
    pub post_order: Vec<usize>,
}

impl DendriteLayout {
    pub fn build<S: Scalar>(tree: &[DendriteNode<S>]) -> Result<Self, StructureError> {
        let n = tree.len();
        if n == 0 {
            return Err(StructureError::Empty);
        }
        if tree[0].parent.is_some() {
            return Err(StructureError::BadParent(0));
        }
        let mut children = vec![Vec::new(); n];
        for (i, node) in tree.iter().enumerate().skip(1) {
            match node.parent {
                Some(p) if p < n && p != i => children[p].push(i),
                _ => return Err(StructureError::BadParent(i)),
            }
        }
        // every node must reach the root without revisiting
        for start in 1..n {
            let mut cur = start;
            let mut hops = 0;
            while let Some(p) = tree[cur].parent {
                cur = p;
                hops += 1;
                if hops > n {
                    return Err(StructureError::Cycle(start));
                }
            }
        }
        let mut post_order = Vec::with_capacity(n);
        let mut stack = vec![(0usize, false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded {
                post_order.push(node);
            } else {
                stack.push((node, true));
                for &c in children[node].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        debug_assert_eq!(post_order.len(), n);
        Ok(DendriteLayout {
            children,
            post_order,
        })
    }
}

/// Brings a loop current to `now`: `value * exp(-(now - last_update) / tau)`.
pub fn decay_loop<S: Scalar>(
    state: LoopState<S>,
    cfg: &LoopConfig<S>,
    now: SimTime,
) -> Result<LoopState<S>, CausalityError> {
    if now < state.last_update {
        return Err(CausalityError {
            last: state.last_update,
            requested: now,
        });
    }
    Ok(LoopState {
        value: state.value_at(cfg.tau, now),
        last_update: now,
    })
}

/// Binomial thinning of a photon pulse by the detector efficiency.
pub fn detect_photons<R: Rng + ?Sized>(count: u32, efficiency: f64, rng: &mut R) -> u32 {
    if count == 0 || efficiency >= 1.0 {
        return count;
    }
    if efficiency <= 0.0 {
        return 0;
    }
    Binomial::new(count as u64, efficiency)
        .map(|b| b.sample(rng) as u32)
        .unwrap_or(0)
}

/// One detector click: decay the synaptic loop to `t`, then add `|effective_weight|`.
/// Returns the new loop state and the new `last_pre`.
pub fn apply_synaptic_event<S: Scalar>(
    synapse: &SynapseState<S>,
    leaf_loop: LoopState<S>,
    leaf: &LoopConfig<S>,
    t: SimTime,
) -> Result<(LoopState<S>, SimTime), CausalityError> {
    let mut l = decay_loop(leaf_loop, leaf, t)?;
    l.value = l.value + effective_weight(synapse).abs();
    Ok((l, t))
}

/// Splits `gain` photons over `k` edges: `gain / k` each, remainder to the lowest indices.
pub fn allocate_photons(gain: u32, k: usize) -> Vec<u32> {
    if k == 0 {
        return Vec::new();
    }
    let k32 = k as u32;
    let (base, rem) = if k > u32::MAX as usize {
        (0, gain)
    } else {
        (gain / k32, gain % k32)
    };
    (0..k)
        .map(|i| base + u32::from((i as u64) < rem as u64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind<S: Scalar> {
    PhotonArrival { edge: usize, photons: u32 },
    FireCheck { neuron: usize },
    RefractoryEnd { neuron: usize },
    ExternalInput { neuron: usize, amplitude: S },
}

#[derive(Clone, Copy, Debug)]
pub struct Event<S: Scalar> {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind<S>,
}

impl<S: Scalar> PartialEq for Event<S> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl<S: Scalar> Eq for Event<S> {}

impl<S: Scalar> PartialOrd for Event<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Event<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Disable STDP, metaplasticity, short-term plasticity and homeostasis.
    pub freeze_plasticity: bool,
    /// Maximum pending events before the run aborts.
    pub queue_cap: Option<usize>,
    /// Stop cleanly after this many processed events.
    pub max_events: Option<u64>,
    /// Delay between a threshold crossing and photon emission.
    pub somatic_latency: SimTime,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            freeze_plasticity: false,
            queue_cap: Some(50_000_000),
            max_events: None,
            somatic_latency: SimTime::ZERO,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub events_processed: u64,
    pub spikes: u64,
    pub photon_arrivals: u64,
    pub photons_emitted: u64,
    pub photons_detected: u64,
    pub synaptic_events: u64,
    pub max_queue_len: usize,
    /// Stopped because `max_events` was reached.
    pub hit_event_limit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiringOutcome {
    pub spike: SpikeRecord,
    /// `(edge id, photons)` for every edge that received at least one photon.
    pub allocations: Vec<(usize, u32)>,
}

#[derive(Clone, Debug)]
struct NeuronState<S: Scalar> {
    /// Pulse/drive loop per dendrite node.
    loops: Vec<LoopState<S>>,
    threshold: S,
    refractory_until: Option<SimTime>,
    last_spike: Option<SimTime>,
    homeostasis: Option<HomeostasisState<S>>,
    check_pending: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NeuronSnapshot<S: Scalar> {
    pub threshold: S,
    pub somatic_drive: S,
    pub last_spike: Option<SimTime>,
    pub refractory_until: Option<SimTime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_estimate_hz: Option<S>,
    pub dendrite_loops: Vec<LoopState<S>>,
}

/// Final (or intermediate) simulator state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StateSnapshot<S: Scalar> {
    pub time: SimTime,
    pub pending_events: usize,
    pub stats: RunStats,
    pub neurons: Vec<NeuronSnapshot<S>>,
    pub synapses: Vec<SynapseState<S>>,
    pub synaptic_loops: Vec<LoopState<S>>,
}

/// Read-only wiring derived from the network description.
#[derive(Clone, Debug)]
struct Wiring {
    layouts: Vec<DendriteLayout>,
    /// `[neuron][node]` -> afferent edge ids attached there.
    node_edges: Vec<Vec<Vec<usize>>>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl Wiring {
    fn build<S: Scalar>(spec: &NetworkSpec<S>) -> Result<Self, StructureError> {
        let n = spec.neurons.len();
        let layouts = spec
            .neurons
            .iter()
            .map(|nr| DendriteLayout::build(&nr.dendrite_tree))
            .collect::<Result<Vec<_>, _>>()?;
        let mut node_edges: Vec<Vec<Vec<usize>>> = spec
            .neurons
            .iter()
            .map(|nr| vec![Vec::new(); nr.dendrite_tree.len()])
            .collect();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, e) in spec.edges.iter().enumerate() {
            out_edges[e.pre].push(i);
            in_edges[e.post].push(i);
            node_edges[e.post][e.dendrite].push(i);
        }
        Ok(Wiring {
            layouts,
            node_edges,
            out_edges,
            in_edges,
        })
    }
}

/// Sequential event-driven simulator for one network.
pub struct Simulator<S: Scalar> {
    spec: NetworkSpec<S>,
    wiring: Wiring,
    synapses: Vec<SynapseState<S>>,
    syn_loops: Vec<LoopState<S>>,
    neurons: Vec<NeuronState<S>>,
    queue: BinaryHeap<Reverse<Event<S>>>,
    next_seq: u64,
    now: SimTime,
    rng: RngStream,
    log: SpikeLog,
    opts: RunOptions,
    stats: RunStats,
    scratch: Vec<S>,
    efficiency: f64,
}

impl<S: Scalar> Simulator<S> {
    /// Validates `spec` and builds a simulator at time zero.
    pub fn new(spec: NetworkSpec<S>, seed: u64, opts: RunOptions) -> Result<Self, EngineError> {
        let violations = validate_network(&spec);
        if !violations.is_empty() {
            return Err(EngineError::InvalidNetwork(violations));
        }
        let wiring = Wiring::build(&spec)?;
        let neurons = spec
            .neurons
            .iter()
            .map(|nr| NeuronState {
                loops: vec![LoopState::default(); nr.dendrite_tree.len()],
                threshold: nr.threshold,
                refractory_until: None,
                last_spike: None,
                homeostasis: nr.homeostasis.as_ref().map(|_| HomeostasisState::default()),
                check_pending: false,
            })
            .collect();
        let synapses = spec.synapses.clone();
        let syn_loops = vec![LoopState::default(); synapses.len()];
        let efficiency = spec.detection_efficiency.as_f64();
        Ok(Simulator {
            spec,
            wiring,
            synapses,
            syn_loops,
            neurons,
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
            rng: RngStream::with_stream(seed, streams::ENGINE),
            log: SpikeLog::new(),
            opts,
            stats: RunStats::default(),
            scratch: Vec::new(),
            efficiency,
        })
    }

    pub fn spec(&self) -> &NetworkSpec<S> {
        &self.spec
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn spike_log(&self) -> &SpikeLog {
        &self.log
    }

    pub fn take_spike_log(&mut self) -> SpikeLog {
        std::mem::take(&mut self.log)
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn synapses(&self) -> &[SynapseState<S>] {
        &self.synapses
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn threshold(&self, neuron: usize) -> S {
        self.neurons[neuron].threshold
    }

    /// Overrides the detection efficiency used for subsequent arrivals.
    pub fn set_detection_efficiency(&mut self, efficiency: S) {
        self.spec.detection_efficiency = efficiency;
        self.efficiency = efficiency.as_f64();
    }

    fn push(&mut self, time: SimTime, kind: EventKind<S>) -> Result<(), EngineError> {
        if let Some(cap) = self.opts.queue_cap {
            if self.queue.len() >= cap {
                return Err(EngineError::QueueOverflow {
                    time: self.now,
                    cap,
                });
            }
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Event { time, seq, kind }));
        self.stats.max_queue_len = self.stats.max_queue_len.max(self.queue.len());
        Ok(())
    }

    /// Queues an external drive; its time must not precede the current time.
    pub fn schedule_input(&mut self, input: &ExternalInput<S>) -> Result<(), EngineError> {
        if input.neuron_id >= self.neurons.len() {
            return Err(EngineError::InvalidStimulus(format!(
                "neuron {} does not exist",
                input.neuron_id
            )));
        }
        if input.time() < self.now {
            return Err(CausalityError {
                last: self.now,
                requested: input.time(),
            }
            .into());
        }
        self.push(
            input.time(),
            EventKind::ExternalInput {
                neuron: input.neuron_id,
                amplitude: input.amplitude,
            },
        )
    }

    /// Processes events with `time <= t_end` until the queue drains or the event limit is hit.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<(), EngineError> {
        while let Some(Reverse(ev)) = self.queue.peek() {
            if ev.time > t_end {
                break;
            }
            if let Some(limit) = self.opts.max_events {
                if self.stats.events_processed >= limit {
                    self.stats.hit_event_limit = true;
                    break;
                }
            }
            let Reverse(ev) = self.queue.pop().expect("peeked");
            assert!(ev.time >= self.now, "event queue went backwards");
            self.now = ev.time;
            self.stats.events_processed += 1;
            self.process(ev)?;
        }
        Ok(())
    }

    pub fn run_until_idle(&mut self) -> Result<(), EngineError> {
        self.run_until(SimTime::MAX)
    }

    fn process(&mut self, ev: Event<S>) -> Result<(), EngineError> {
        let t = ev.time;
        match ev.kind {
            EventKind::PhotonArrival { edge, photons } => self.on_arrival(edge, photons, t),
            EventKind::ExternalInput { neuron, amplitude } => {
                let tau = self.spec.neurons[neuron].dendrite_tree[0].config.tau;
                let l = &mut self.neurons[neuron].loops[0];
                l.value = l.value_at(tau, t) + amplitude;
                l.last_update = t;
                self.request_check(neuron, t)
            }
            EventKind::FireCheck { neuron } => {
                self.neurons[neuron].check_pending = false;
                if self.is_refractory(neuron, t) {
                    return Ok(());
                }
                self.check_and_fire(neuron, t).map(|_| ())
            }
            EventKind::RefractoryEnd { neuron } => {
                if self.neurons[neuron].refractory_until != Some(t) {
                    // superseded by a later firing
                    return Ok(());
                }
                self.neurons[neuron].refractory_until = None;
                self.check_and_fire(neuron, t).map(|_| ())
            }
        }
    }

    fn is_refractory(&self, neuron: usize, t: SimTime) -> bool {
        matches!(self.neurons[neuron].refractory_until, Some(u) if t < u)
    }

    fn request_check(&mut self, neuron: usize, t: SimTime) -> Result<(), EngineError> {
        if self.neurons[neuron].check_pending {
            return Ok(());
        }
        self.neurons[neuron].check_pending = true;
        self.push(t, EventKind::FireCheck { neuron })
    }

    fn on_arrival(&mut self, edge: usize, photons: u32, t: SimTime) -> Result<(), EngineError> {
        self.stats.photon_arrivals += 1;
        let detected = detect_photons(photons, self.efficiency, &mut self.rng);
        self.stats.photons_detected += detected as u64;
        if detected == 0 {
            return Ok(());
        }
        self.stats.synaptic_events += 1;
        let e = &self.spec.edges[edge];
        let (post, sid, node) = (e.post, e.synapse_id, e.dendrite);
        let frozen = self.opts.freeze_plasticity;

        if !frozen && self.synapses[sid].stp.is_some() {
            if let Some(prev) = self.synapses[sid].last_pre {
                self.synapses[sid] = stp_update(&self.synapses[sid], t.0 - prev.0);
            }
        }
        let leaf = &self.spec.neurons[post].dendrite_tree[node].config;
        let (l, last_pre) =
            apply_synaptic_event(&self.synapses[sid], self.syn_loops[sid], leaf, t)?;
        self.syn_loops[sid] = l;
        if !frozen && self.spec.plasticity.enabled {
            if let Some(post_t) = self.synapses[sid].last_post {
                let dt = post_t.signed_since(t);
                self.synapses[sid] =
                    stdp_update(&self.synapses[sid], &self.spec.plasticity.stdp, dt, &mut self.rng);
            }
        }
        self.synapses[sid].last_pre = Some(last_pre);
        self.request_check(post, t)
    }

    /// Somatic drive of `neuron` at `t`, firing any thresholded dendrites on the way.
    ///
    /// Post-order traversal: each node's value is its own loop plus the
    /// signed synaptic loops attached to it plus the signed values of its
    /// passthrough children. A threshold-fire child whose value reaches its
    /// threshold resets its integration domain and adds a signed unit pulse
    /// to its parent's loop instead of contributing its value.
    pub fn propagate_dendrites(&mut self, neuron: usize, t: SimTime) -> S {
        let tree = &self.spec.neurons[neuron].dendrite_tree;
        let layout = &self.wiring.layouts[neuron];
        let mut vals = std::mem::take(&mut self.scratch);
        vals.clear();
        vals.resize(tree.len(), S::zero());
        for &node in &layout.post_order {
            let cfg = &tree[node].config;
            let mut v = self.neurons[neuron].loops[node].value_at(cfg.tau, t);
            for &e in &self.wiring.node_edges[neuron][node] {
                let sid = self.spec.edges[e].synapse_id;
                let s = self.synapses[sid].sign.value::<S>();
                v = v + s * self.syn_loops[sid].value_at(cfg.tau, t);
            }
            for &c in &layout.children[node] {
                let cc = &tree[c].config;
                if cc.mode == LoopMode::AccumulatePassthrough {
                    v = v + cc.sign.value::<S>() * vals[c];
                }
            }
            vals[node] = v;
            if node != 0 && cfg.mode == LoopMode::ThresholdFire && v >= cfg.threshold {
                reset_domain(
                    tree,
                    layout,
                    &self.wiring.node_edges[neuron],
                    &self.spec.edges,
                    &mut self.neurons[neuron].loops,
                    &mut self.syn_loops,
                    node,
                    t,
                );
                vals[node] = S::zero();
                let parent = tree[node].parent.expect("non-root node has a parent");
                let ptau = tree[parent].config.tau;
                let pl = &mut self.neurons[neuron].loops[parent];
                pl.value = pl.value_at(ptau, t) + cfg.sign.value::<S>();
                pl.last_update = t;
            }
        }
        let drive = vals[0];
        self.scratch = vals;
        drive
    }

    /// Compares the somatic drive with the threshold and fires if it is reached.
    pub fn check_and_fire(
        &mut self,
        neuron: usize,
        t: SimTime,
    ) -> Result<Option<FiringOutcome>, EngineError> {
        let drive = self.propagate_dendrites(neuron, t);
        if drive < self.neurons[neuron].threshold {
            return Ok(None);
        }
        self.fire(neuron, t).map(Some)
    }

    fn fire(&mut self, neuron: usize, t: SimTime) -> Result<FiringOutcome, EngineError> {
        let spike = SpikeRecord {
            time: t,
            neuron_id: neuron,
        };
        self.log.push(spike);
        self.stats.spikes += 1;

        {
            let tree = &self.spec.neurons[neuron].dendrite_tree;
            reset_domain(
                tree,
                &self.wiring.layouts[neuron],
                &self.wiring.node_edges[neuron],
                &self.spec.edges,
                &mut self.neurons[neuron].loops,
                &mut self.syn_loops,
                0,
                t,
            );
        }
        let spec_n = &self.spec.neurons[neuron];
        let t_ref = spec_n.t_refractory;
        let gain = spec_n.gain;
        self.neurons[neuron].last_spike = Some(t);
        if t_ref.0 > 0 {
            let until = t.checked_add(t_ref)?;
            self.neurons[neuron].refractory_until = Some(until);
            self.push(until, EventKind::RefractoryEnd { neuron })?;
        }

        let emit = t.checked_add(self.opts.somatic_latency)?;
        let k = self.wiring.out_edges[neuron].len();
        let g = gain.unwrap_or(k as u32);
        self.stats.photons_emitted += g as u64;
        let alloc = allocate_photons(g, k);
        let mut allocations = Vec::with_capacity(k);
        for (i, photons) in alloc.into_iter().enumerate() {
            if photons == 0 {
                continue;
            }
            let edge = self.wiring.out_edges[neuron][i];
            let at = emit.checked_add(self.spec.edges[edge].delay)?;
            self.push(at, EventKind::PhotonArrival { edge, photons })?;
            allocations.push((edge, photons));
        }

        let frozen = self.opts.freeze_plasticity;
        let stdp_on = !frozen && self.spec.plasticity.enabled;
        for idx in 0..self.wiring.in_edges[neuron].len() {
            let sid = self.spec.edges[self.wiring.in_edges[neuron][idx]].synapse_id;
            if stdp_on {
                if let Some(pre) = self.synapses[sid].last_pre {
                    let dt = t.signed_since(pre);
                    self.synapses[sid] = stdp_update(
                        &self.synapses[sid],
                        &self.spec.plasticity.stdp,
                        dt,
                        &mut self.rng,
                    );
                }
            }
            self.synapses[sid].last_post = Some(t);
        }

        if !frozen {
            let st = &mut self.neurons[neuron];
            if let (Some(cfg), Some(h)) = (
                self.spec.neurons[neuron].homeostasis.as_ref(),
                st.homeostasis.as_mut(),
            ) {
                st.threshold = homeostatic_update(cfg, h, st.threshold, t);
            }
        }

        Ok(FiringOutcome { spike, allocations })
    }

    /// Snapshot of all dynamic state at the current time.
    pub fn snapshot(&mut self) -> StateSnapshot<S> {
        let t = self.now;
        let mut neurons = Vec::with_capacity(self.neurons.len());
        for i in 0..self.neurons.len() {
            let drive = self.peek_drive(i, t);
            let st = &self.neurons[i];
            neurons.push(NeuronSnapshot {
                threshold: st.threshold,
                somatic_drive: drive,
                last_spike: st.last_spike,
                refractory_until: st.refractory_until,
                rate_estimate_hz: st.homeostasis.map(|h| h.r_bar),
                dendrite_loops: st.loops.clone(),
            });
        }
        StateSnapshot {
            time: t,
            pending_events: self.queue.len(),
            stats: self.stats.clone(),
            neurons,
            synapses: self.synapses.clone(),
            synaptic_loops: self.syn_loops.clone(),
        }
    }

    /// Somatic drive without firing dendrites or mutating state.
    pub fn peek_drive(&self, neuron: usize, t: SimTime) -> S {
        let tree = &self.spec.neurons[neuron].dendrite_tree;
        let layout = &self.wiring.layouts[neuron];
        let mut vals = vec![S::zero(); tree.len()];
        for &node in &layout.post_order {
            let cfg = &tree[node].config;
            let mut v = self.neurons[neuron].loops[node].value_at(cfg.tau, t);
            for &e in &self.wiring.node_edges[neuron][node] {
                let sid = self.spec.edges[e].synapse_id;
                v = v + self.synapses[sid].sign.value::<S>() * self.syn_loops[sid].value_at(cfg.tau, t);
            }
            for &c in &layout.children[node] {
                let cc = &tree[c].config;
                if cc.mode == LoopMode::AccumulatePassthrough {
                    v = v + cc.sign.value::<S>() * vals[c];
                }
            }
            vals[node] = v;
        }
        vals[0]
    }
}

/// Zeroes the loops integrated by `node`: its own loop, synaptic loops
/// attached to it, and recursively those of its passthrough children.
#[allow(clippy::too_many_arguments)]
fn reset_domain<S: Scalar>(
    tree: &[DendriteNode<S>],
    layout: &DendriteLayout,
    node_edges: &[Vec<usize>],
    edges: &[crate::model::EdgeSpec],
    loops: &mut [LoopState<S>],
    syn_loops: &mut [LoopState<S>],
    node: usize,
    t: SimTime,
) {
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        loops[n] = LoopState::new(S::zero(), t);
        for &e in &node_edges[n] {
            syn_loops[edges[e].synapse_id] = LoopState::new(S::zero(), t);
        }
        for &c in &layout.children[n] {
            if tree[c].config.mode == LoopMode::AccumulatePassthrough {
                stack.push(c);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput<S: Scalar> {
    pub log: SpikeLog,
    pub state: StateSnapshot<S>,
}

#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunError<S: Scalar> {
    pub error: EngineError,
    /// Log and state up to the failure, when the simulation had started.
    pub partial: Option<Box<RunOutput<S>>>,
}

/// Simulates `spec` driven by `stimulus` until `t_end` (inclusive) or the queue drains.
pub fn run<S: Scalar>(
    spec: &NetworkSpec<S>,
    stimulus: &[ExternalInput<S>],
    t_end: SimTime,
    seed: u64,
    opts: RunOptions,
) -> Result<RunOutput<S>, RunError<S>> {
    let fail = |error| RunError {
        error,
        partial: None,
    };
    let mut sim = Simulator::new(spec.clone(), seed, opts).map_err(fail)?;
    for (i, inp) in stimulus.iter().enumerate() {
        if inp.time() >= t_end {
            return Err(fail(EngineError::InvalidStimulus(format!(
                "input {i} at {} ps is not before t_end {} ps",
                inp.t_ps, t_end.0
            ))));
        }
        sim.schedule_input(inp).map_err(fail)?;
    }
    match sim.run_until(t_end) {
        Ok(()) => {
            let state = sim.snapshot();
            Ok(RunOutput {
                log: sim.take_spike_log(),
                state,
            })
        }
        Err(error) => {
            let state = sim.snapshot();
            Err(RunError {
                error,
                partial: Some(Box::new(RunOutput {
                    log: sim.take_spike_log(),
                    state,
                })),
            })
        }
    }
}
