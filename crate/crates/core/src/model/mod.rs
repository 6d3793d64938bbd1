//! Network parameters, hybrid state and the flow/drift evaluation.

mod chain;
pub mod flows;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use chain::positive;
pub use chain::{InflowChain, Mode, ProductChain};
use flows::{discharge_split, diverge_flows, merge_flows_indicator, merge_flows_priority, sending_flow};

use crate::error::{Error, Result};

/// Tolerance on queue drift when deciding whether an empty queue stays empty (veh/hr).
pub const DRIFT_TOL: f64 = 1e-9;

/// Capacity split at the merge. Only the class-1 share is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PriorityVector {
    phi1: f64,
}

impl PriorityVector {
    pub fn new(phi1: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&phi1) {
            Ok(PriorityVector { phi1 })
        } else {
            Err(Error::InvalidParameter {
                name: "phi1",
                value: phi1,
                expected: "phi1 in [0, 1] so that phi1 + phi2 = 1 with both >= 0",
            })
        }
    }

    pub fn first(self) -> f64 {
        self.phi1
    }

    pub fn second(self) -> f64 {
        1.0 - self.phi1
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.first(), self.second()]
    }

    /// Same split with the classes exchanged.
    pub fn swapped(self) -> Self {
        PriorityVector { phi1: self.second() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MergeParams {
    /// Upstream capacities F1, F2 (veh/hr).
    pub capacity: [f64; 2],
    /// Receiving flow R3 of the common link below its storage (veh/hr).
    pub max_receiving: f64,
    pub priority: PriorityVector,
}

impl MergeParams {
    pub fn new(capacity: [f64; 2], max_receiving: f64, priority: PriorityVector) -> Result<Self> {
        let p = MergeParams {
            capacity,
            max_receiving,
            priority,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("F1", self.capacity[0])?;
        positive("F2", self.capacity[1])?;
        positive("R3", self.max_receiving)?;
        PriorityVector::new(self.priority.first()).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DivergeParams {
    /// Capacity F3 of the common link (veh/hr).
    pub capacity: f64,
    /// Storage of the common link (veh).
    pub storage: f64,
    /// Receiving flows R4, R5 of the downstream links (veh/hr).
    pub receiving: [f64; 2],
}

impl DivergeParams {
    pub fn new(capacity: f64, storage: f64, receiving: [f64; 2]) -> Result<Self> {
        let p = DivergeParams {
            capacity,
            storage,
            receiving,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("F3", self.capacity)?;
        positive("theta", self.storage)?;
        positive("R4", self.receiving[0])?;
        positive("R5", self.receiving[1])
    }

    /// R4 < F3, R5 < F3 and F3 < R4 + R5.
    pub fn check_standing_assumption(&self) -> Result<()> {
        let [r4, r5] = self.receiving;
        let f3 = self.capacity;
        if r4 < f3 && r5 < f3 && f3 < r4 + r5 {
            Ok(())
        } else {
            Err(Error::StandingAssumption {
                common: f3,
                first: r4,
                second: r5,
            })
        }
    }
}

/// How the link-5 demand term of the diverge is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DivergeRule {
    /// `psi2 * s3`, mirroring the link-4 term.
    #[default]
    Symmetric,
    /// `psi1 * s3` for both links. Flow evaluation only; the simulator rejects it.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FlowOptions {
    /// Queues within this distance of 0 or of the storage are snapped onto it (veh).
    pub eps_q: f64,
    pub diverge_rule: DivergeRule,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            eps_q: 1e-9,
            diverge_rule: DivergeRule::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Topology {
    Merge,
    MergeDiverge,
}

/// Hybrid state: inflow mode, upstream queues and the per-class queue on the
/// common link (always zero in the merge-only topology).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NetworkState {
    pub mode: Mode,
    pub upstream: [f64; 2],
    pub link3: [f64; 2],
}

impl NetworkState {
    pub fn new(mode: Mode, upstream: [f64; 2], link3: [f64; 2]) -> Self {
        NetworkState { mode, upstream, link3 }
    }

    pub fn empty(mode: Mode) -> Self {
        NetworkState::new(mode, [0.0; 2], [0.0; 2])
    }

    pub fn upstream_total(&self) -> f64 {
        self.upstream[0] + self.upstream[1]
    }

    pub fn link3_total(&self) -> f64 {
        self.link3[0] + self.link3[1]
    }

    pub fn total(&self) -> f64 {
        self.upstream_total() + self.link3_total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FlowVector {
    pub f13: f64,
    pub f23: f64,
    pub f34: f64,
    pub f35: f64,
}

impl FlowVector {
    pub fn merge(&self) -> [f64; 2] {
        [self.f13, self.f23]
    }

    pub fn diverge(&self) -> [f64; 2] {
        [self.f34, self.f35]
    }
}

/// Occupancy of the common link after snapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link3Regime {
    Empty,
    Partial,
    Full,
}

/// Flows on the regime the state actually follows from here on. `queued[k]`
/// is false only for an empty upstream queue that stays empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedFlows {
    pub queued: [bool; 2],
    pub flows: FlowVector,
    pub drift: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Network {
    pub merge: MergeParams,
    pub diverge: Option<DivergeParams>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub options: FlowOptions,
}

impl Network {
    pub fn merge_only(merge: MergeParams) -> Self {
        Network {
            merge,
            diverge: None,
            options: FlowOptions::default(),
        }
    }

    pub fn merge_diverge(merge: MergeParams, diverge: DivergeParams) -> Self {
        Network {
            merge,
            diverge: Some(diverge),
            options: FlowOptions::default(),
        }
    }

    pub fn with_options(mut self, options: FlowOptions) -> Self {
        self.options = options;
        self
    }

    pub fn topology(&self) -> Topology {
        if self.diverge.is_some() {
            Topology::MergeDiverge
        } else {
            Topology::Merge
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.merge.validate()?;
        if let Some(d) = &self.diverge {
            d.validate()?;
        }
        if !(self.options.eps_q >= 0.0 && self.options.eps_q.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eps_q",
                value: self.options.eps_q,
                expected: "a finite value >= 0",
            });
        }
        Ok(())
    }

    /// Checks queue signs and the storage bound, with `eps_q` slack.
    pub fn validate_state(&self, state: &NetworkState) -> Result<()> {
        let eps = self.options.eps_q;
        let all = [state.upstream[0], state.upstream[1], state.link3[0], state.link3[1]];
        for (name, q) in ["q1", "q2", "q3_1", "q3_2"].into_iter().zip(all) {
            if !(q.is_finite() && q >= -eps) {
                return Err(Error::InvalidParameter {
                    name,
                    value: q,
                    expected: "a finite queue >= 0",
                });
            }
        }
        match &self.diverge {
            Some(d) if state.link3_total() > d.storage + eps => Err(Error::StorageExceeded {
                queue: state.link3_total(),
                storage: d.storage,
            }),
            None if state.link3_total() > 0.0 => Err(Error::InvalidParameter {
                name: "q3",
                value: state.link3_total(),
                expected: "no common-link queue in the merge-only topology",
            }),
            _ => Ok(()),
        }
    }

    /// Moves queues within `eps_q` of a boundary onto it.
    pub fn snap(&self, state: &NetworkState) -> NetworkState {
        let eps = self.options.eps_q;
        let mut s = *state;
        for q in s.upstream.iter_mut().chain(s.link3.iter_mut()) {
            if *q <= eps {
                *q = 0.0;
            }
        }
        if let Some(d) = &self.diverge {
            let total = s.link3_total();
            if total >= d.storage - eps && total > 0.0 {
                let first = s.link3[0] / total * d.storage;
                s.link3 = [first, d.storage - first];
            }
        }
        s
    }

    /// Occupancy of the common link in an already snapped state.
    pub fn link3_regime(&self, state: &NetworkState) -> Link3Regime {
        match &self.diverge {
            None => Link3Regime::Empty,
            Some(d) => {
                let total = state.link3_total();
                if total <= 0.0 {
                    Link3Regime::Empty
                } else if total >= d.storage {
                    Link3Regime::Full
                } else {
                    Link3Regime::Partial
                }
            }
        }
    }

    /// Flow vector of the model at `state` for the given mode inflows, with
    /// sending flows read off the (snapped) upstream queues.
    pub fn flows(&self, state: &NetworkState, inflow: [f64; 2]) -> FlowVector {
        let s = self.snap(state);
        let queued = [s.upstream[0] > 0.0, s.upstream[1] > 0.0];
        self.flows_in_regime(inflow, queued, s.link3, self.link3_regime(&s))
    }

    /// Queue derivatives `(q1, q2, q3_1, q3_2)` at `state`.
    pub fn drift(&self, state: &NetworkState, inflow: [f64; 2]) -> [f64; 4] {
        self.drift_of(inflow, &self.flows(state, inflow))
    }

    /// Flows for an explicit upstream pattern and common-link regime.
    pub fn flows_in_regime(
        &self,
        inflow: [f64; 2],
        queued: [bool; 2],
        link3: [f64; 2],
        regime: Link3Regime,
    ) -> FlowVector {
        let cap = self.merge.capacity;
        let phi = self.merge.priority;
        let sending = [
            sending_flow(if queued[0] { 1.0 } else { 0.0 }, inflow[0], cap[0]),
            sending_flow(if queued[1] { 1.0 } else { 0.0 }, inflow[1], cap[1]),
        ];
        let Some(d) = &self.diverge else {
            let [f13, f23] = merge_flows_indicator(sending, queued, self.merge.max_receiving, phi);
            return FlowVector {
                f13,
                f23,
                f34: 0.0,
                f35: 0.0,
            };
        };
        let full = regime == Link3Regime::Full;
        let receiving = if full { d.capacity } else { self.merge.max_receiving };
        let mut merge = merge_flows_priority(sending, receiving, phi);
        let (psi, s3) = if regime == Link3Regime::Empty {
            (discharge_split([0.0; 2], merge), merge[0] + merge[1])
        } else {
            (discharge_split(link3, merge), d.capacity)
        };
        let [f34, f35] = diverge_flows(psi[0], s3, d, self.options.diverge_rule);
        if full && merge[0] + merge[1] > f34 + f35 {
            merge = merge_flows_priority(sending, f34 + f35, phi);
        }
        FlowVector {
            f13: merge[0],
            f23: merge[1],
            f34,
            f35,
        }
    }

    /// Resolves which empty upstream queues stay empty. Among the patterns in
    /// which held queues have non-positive drift and released queues positive
    /// drift, the one holding the most queues at zero wins.
    pub fn resolve(&self, state: &NetworkState, inflow: [f64; 2], regime: Link3Regime) -> ResolvedFlows {
        let empty = [state.upstream[0] <= 0.0, state.upstream[1] <= 0.0];
        // Candidate "held at zero" sets, largest first.
        let candidates: [[bool; 2]; 4] = [[true, true], [true, false], [false, true], [false, false]];
        let mut fallback = None;
        for held in candidates {
            if (held[0] && !empty[0]) || (held[1] && !empty[1]) {
                continue;
            }
            let queued = [!held[0], !held[1]];
            let flows = self.flows_in_regime(inflow, queued, state.link3, regime);
            let drift = self.drift_of(inflow, &flows);
            let consistent = (0..2).all(|k| {
                if held[k] {
                    drift[k] <= DRIFT_TOL
                } else if empty[k] {
                    drift[k] > DRIFT_TOL
                } else {
                    true
                }
            });
            let resolved = ResolvedFlows { queued, flows, drift };
            if consistent {
                return clamp_held(resolved, held);
            }
            fallback.get_or_insert((resolved, held));
        }
        // Unreachable for the flow rules above; keep the state on the boundary.
        let (resolved, held) = fallback.expect("at least one candidate");
        clamp_held(resolved, held)
    }
}

fn clamp_held(mut r: ResolvedFlows, held: [bool; 2]) -> ResolvedFlows {
    for (d, _) in r.drift.iter_mut().zip(held).filter(|(_, h)| *h) {
        *d = 0.0;
    }
    r
}

impl Network {
    /// Queue derivatives implied by a flow vector.
    pub fn drift_of(&self, inflow: [f64; 2], f: &FlowVector) -> [f64; 4] {
        let (d31, d32) = match self.diverge {
            Some(_) => (f.f13 - f.f34, f.f23 - f.f35),
            None => (0.0, 0.0),
        };
        [inflow[0] - f.f13, inflow[1] - f.f23, d31, d32]
    }
}
