//! Synaptic and neuronal adaptation rules.
//!
//! All functions here are pure transitions on per-synapse or per-neuron
//! state. The engine calls them from its sequential event loop; nothing
//! here schedules events.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{HomeostasisConfig, SimTime, SynapseState};
use crate::num::Scalar;

/// Rectangular nearest-spike STDP windows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StdpRule {
    pub t_plus: SimTime,
    pub t_minus: SimTime,
    #[serde(default = "default_step")]
    pub step: u32,
}

fn default_step() -> u32 {
    1
}

impl Default for StdpRule {
    fn default() -> Self {
        StdpRule {
            t_plus: SimTime::from_ns(10),
            t_minus: SimTime::from_ns(10),
            step: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Potentiate,
    Depress,
}

impl Direction {
    pub fn as_i8(self) -> i8 {
        match self {
            Direction::Potentiate => 1,
            Direction::Depress => -1,
        }
    }
}

/// Candidate step for `delta_t = t_post - t_pre` (ps), if it lies in a window.
pub fn stdp_candidate(rule: &StdpRule, delta_t: i64) -> Option<Direction> {
    if delta_t > 0 && delta_t as u64 <= rule.t_plus.0 {
        Some(Direction::Potentiate)
    } else if delta_t < 0 && delta_t.unsigned_abs() <= rule.t_minus.0 {
        Some(Direction::Depress)
    } else {
        None
    }
}

fn agrees<S: Scalar>(s: &SynapseState<S>, d: Direction) -> bool {
    s.meta_depth == 0 || s.meta_dir == 0 || s.meta_dir == d.as_i8()
}

/// Cascade bookkeeping after an STDP decision.
///
/// An applied update in the prevailing direction deepens the synapse (its
/// transition probability shrinks by `chi`). A candidate against the
/// prevailing direction makes it one step shallower.
pub fn metaplastic_update<S: Scalar>(
    s: &SynapseState<S>,
    applied: bool,
    direction_agrees: bool,
) -> SynapseState<S> {
    let mut out = s.clone();
    if !direction_agrees {
        out.meta_depth = out.meta_depth.saturating_sub(1);
    } else if applied {
        out.meta_depth = (out.meta_depth + 1).min(out.m_max);
    }
    out
}

/// One STDP pairing with cascade metaplasticity.
///
/// The candidate step is applied with probability `p0 * chi^meta_depth`,
/// evaluated after any depth reduction caused by an opposing candidate.
/// The level is clamped to `[0, n_levels - 1]`.
pub fn stdp_update<S: Scalar, R: Rng + ?Sized>(
    s: &SynapseState<S>,
    rule: &StdpRule,
    delta_t: i64,
    rng: &mut R,
) -> SynapseState<S> {
    let Some(dir) = stdp_candidate(rule, delta_t) else {
        return s.clone();
    };
    let mut out = if agrees(s, dir) {
        s.clone()
    } else {
        metaplastic_update(s, false, false)
    };
    let p = out.transition_probability().as_f64();
    let applied = if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    };
    if !applied {
        return out;
    }
    out.level = match dir {
        Direction::Potentiate => out.level.saturating_add(rule.step).min(out.max_level()),
        Direction::Depress => out.level.saturating_sub(rule.step),
    };
    if out.meta_depth == 0 {
        out.meta_dir = dir.as_i8();
    }
    if out.meta_dir == dir.as_i8() {
        out = metaplastic_update(&out, true, true);
    }
    out
}

/// Short-term presynaptic modulation of efficacy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "")]
pub enum StpConfig<S: Scalar> {
    /// Each spike multiplies the factor by `d`; recovery toward 1 with `tau` (ps).
    Depression { d: S, tau: S },
    /// Each spike multiplies the factor by `a`, capped at `cap`; decay toward 1 with `tau` (ps).
    Facilitation { a: S, cap: S, tau: S },
}

impl<S: Scalar> StpConfig<S> {
    pub fn check(&self) -> Result<(), String> {
        match *self {
            StpConfig::Depression { d, tau } => {
                if !(d > S::zero() && d <= S::one()) || !(tau > S::zero()) {
                    return Err("depression needs d in (0, 1] and tau > 0".into());
                }
            }
            StpConfig::Facilitation { a, cap, tau } => {
                if !(a >= S::one() && cap >= S::one() && tau > S::zero()) {
                    return Err("facilitation needs a >= 1, cap >= 1 and tau > 0".into());
                }
            }
        }
        Ok(())
    }
}

/// Advances the short-term factor across one inter-spike interval (ps):
/// apply the previous spike's multiplicative change, then relax toward 1.
pub fn stp_update<S: Scalar>(s: &SynapseState<S>, inter_spike_interval: u64) -> SynapseState<S> {
    let mut out = s.clone();
    let Some(cfg) = &s.stp else {
        return out;
    };
    let isi = S::lit(inter_spike_interval as f64);
    let f = s.stp_factor;
    out.stp_factor = match *cfg {
        StpConfig::Depression { d, tau } => S::one() - (S::one() - f * d) * (-isi / tau).exp(),
        StpConfig::Facilitation { a, cap, tau } => {
            S::one() + ((f * a).min(cap) - S::one()) * (-isi / tau).exp()
        }
    };
    out
}

/// Exponentially averaged post-synaptic rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HomeostasisState<S: Scalar> {
    /// Hz.
    pub r_bar: S,
    pub last_update: SimTime,
}

impl<S: Scalar> HomeostasisState<S> {
    /// Decays the average to `t` and adds one spike's contribution.
    pub fn observe_spike(&mut self, cfg: &HomeostasisConfig<S>, t: SimTime) {
        let dt = S::lit(t.0.saturating_sub(self.last_update.0) as f64);
        let ps_per_s = S::lit(1e12);
        self.r_bar = self.r_bar * (-dt / cfg.tau_avg).exp() + ps_per_s / cfg.tau_avg;
        self.last_update = t;
    }
}

/// `threshold * (1 + kappa * (r_bar - r_target) / r_target)`, clamped to `[theta_min, theta_max]`.
pub fn adjust_threshold<S: Scalar>(cfg: &HomeostasisConfig<S>, threshold: S, r_bar: S) -> S {
    let rel = (r_bar - cfg.r_target) / cfg.r_target;
    let t = threshold * (S::one() + cfg.kappa * rel);
    t.max(cfg.theta_min).min(cfg.theta_max)
}

/// Records a post-synaptic spike at `t` and returns the adapted threshold.
pub fn homeostatic_update<S: Scalar>(
    cfg: &HomeostasisConfig<S>,
    state: &mut HomeostasisState<S>,
    threshold: S,
    t: SimTime,
) -> S {
    state.observe_spike(cfg, t);
    adjust_threshold(cfg, threshold, state.r_bar)
}
