//! Sending, receiving, merge, discharge-split and diverge flow functions.
//!
//! All functions are pure. Boundary cases that the model defines by exact
//! equality (an empty queue, a full buffer) are decided by the callers after
//! snapping queues with [`super::FlowOptions::eps_q`].

use super::{DivergeParams, DivergeRule, PriorityVector};
use crate::error::{Error, Result};

/// Flow offered downstream: the inflow while empty, the capacity while queued.
pub fn sending_flow(queue: f64, inflow: f64, capacity: f64) -> f64 {
    if queue > 0.0 {
        capacity
    } else {
        inflow
    }
}

/// Receiving flow of the common link: `max_receiving` below the storage,
/// the capacity once full. Queues within `eps_q` of the storage count as full.
pub fn receiving_flow_3(queue: f64, params: &DivergeParams, max_receiving: f64, eps_q: f64) -> Result<f64> {
    if queue > params.storage + eps_q {
        return Err(Error::StorageExceeded {
            queue,
            storage: params.storage,
        });
    }
    Ok(if queue >= params.storage - eps_q {
        params.capacity
    } else {
        max_receiving
    })
}

/// Merge-junction flows in indicator form: a class gets the whole receiving
/// flow while the other upstream queue is empty and its priority share otherwise.
pub fn merge_flows_indicator(
    sending: [f64; 2],
    queued: [bool; 2],
    receiving: f64,
    priority: PriorityVector,
) -> [f64; 2] {
    let phi = priority.as_array();
    let bound = |k: usize| {
        if queued[1 - k] {
            phi[k] * receiving
        } else {
            receiving
        }
    };
    [sending[0].min(bound(0)), sending[1].min(bound(1))]
}

/// Priority merge: each class is guaranteed its share `phi_k * r` and may use
/// whatever the other class leaves unused. The total never exceeds `r`.
pub fn merge_flows_priority(sending: [f64; 2], receiving: f64, priority: PriorityVector) -> [f64; 2] {
    let phi = priority.as_array();
    let bound = |k: usize| (phi[k] * receiving).max((receiving - sending[1 - k]).max(0.0));
    [sending[0].min(bound(0)), sending[1].min(bound(1))]
}

/// Positive-part merge `min{s_k, (r - phi_other * s_other)_+}`. Kept for
/// comparison only: it can hand out more than `r` in total.
pub fn merge_flows_positive_part(sending: [f64; 2], receiving: f64, priority: PriorityVector) -> [f64; 2] {
    let phi = priority.as_array();
    let bound = |k: usize| (receiving - phi[1 - k] * sending[1 - k]).max(0.0);
    [sending[0].min(bound(0)), sending[1].min(bound(1))]
}

/// Per-class share of the common link's discharge: queue composition when the
/// link holds vehicles, inflow composition when it is empty, half each otherwise.
pub fn discharge_split(link3: [f64; 2], merge: [f64; 2]) -> [f64; 2] {
    let share = |x: [f64; 2]| {
        let first = x[0] / (x[0] + x[1]);
        [first, 1.0 - first]
    };
    if link3[0] + link3[1] > 0.0 {
        share(link3)
    } else if merge[0] + merge[1] > 0.0 {
        share(merge)
    } else {
        [0.5, 0.5]
    }
}

/// `x / y` with `x / 0 = +inf`.
fn ratio(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        f64::INFINITY
    } else {
        x / y
    }
}

/// Flows from the common link into links 4 and 5 given the class-1 share.
pub fn diverge_flows(psi1: f64, sending: f64, params: &DivergeParams, rule: DivergeRule) -> [f64; 2] {
    let psi2 = 1.0 - psi1;
    let [r4, r5] = params.receiving;
    let f34 = (psi1 * sending).min(r4).min(ratio(psi1, psi2) * r5);
    let demand5 = match rule {
        DivergeRule::Symmetric => psi2 * sending,
        DivergeRule::AsPrinted => psi1 * sending,
    };
    let f35 = demand5.min(r5).min(ratio(psi2, psi1) * r4);
    [f34, f35]
}

/// Total discharge of a non-empty common link with class-1 share `psi1`:
/// `min{F3, R4/psi1, R5/psi2}`. Under the symmetric rule the two diverge flows
/// are exactly `psi_k` times this value.
pub fn discharge_envelope(psi1: f64, params: &DivergeParams) -> f64 {
    let [r4, r5] = params.receiving;
    params.capacity.min(ratio(r4, psi1)).min(ratio(r5, 1.0 - psi1))
}
