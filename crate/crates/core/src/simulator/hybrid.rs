//! Deterministic advance of the queues between inflow-mode jumps.

#[allow(unused_imports)]
use num_traits::Float;

use super::relax::{discharge, integrate, regime_at, regime_edges, share, LinkThree, Regime};
use crate::error::{Error, Result};
use crate::model::{DivergeParams, Link3Regime, Network, NetworkState, ResolvedFlows, Topology, DRIFT_TOL};

/// Below this rate of change of the class-1 common-link queue a full buffer
/// is treated as settled and advanced linearly (veh/hr).
const SETTLED_RATE: f64 = 1e-7;
/// Shares closer than this to their limit are treated as constant.
const SHARE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratorOptions {
    /// Longest single step in the full-buffer regime (hr).
    pub max_step: f64,
    /// Event localization tolerance on queue values (veh).
    pub event_tol: f64,
    /// Events closer than this to the step end are taken at the step end (hr).
    pub tie_tol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            max_step: 1e-3,
            event_tol: 1e-9,
            tie_tol: 1e-12,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_step", self.max_step),
            ("event_tol", self.event_tol),
            ("tie_tol", self.tie_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    expected: "a finite value > 0",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    UpstreamEmptied(usize),
    Link3Filled,
    Link3Emptied,
    DischargeRegime,
    LeavingFullBuffer,
}

/// Outcome of one deterministic advance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub elapsed: f64,
    /// The advance used the full `dt_max`.
    pub reached_end: bool,
    pub event: Option<Event>,
    /// Which upstream queues were positive on the open interval.
    pub queued: [bool; 2],
    /// Integrals of `q1, q2, q3_1, q3_2` over the step (veh hr).
    pub queue_integral: [f64; 4],
    /// Vehicles that entered links 1 and 2.
    pub arrivals: [f64; 2],
    /// Vehicles that left the modelled network.
    pub departures: f64,
}

/// Advances `state` under constant mode inflows for at most `dt_max` hours,
/// stopping early at the first boundary event.
pub fn advance(
    net: &Network,
    state: &mut NetworkState,
    inflow: [f64; 2],
    dt_max: f64,
    opts: &IntegratorOptions,
) -> Result<StepReport> {
    match net.topology() {
        Topology::Merge => Ok(advance_merge(net, state, inflow, dt_max, opts)),
        Topology::MergeDiverge => advance_merge_diverge(net, state, inflow, dt_max, opts),
    }
}

/// Merge-only advance: flows are constant between boundary events, so the
/// update is exact.
pub fn advance_merge(
    net: &Network,
    state: &mut NetworkState,
    inflow: [f64; 2],
    dt_max: f64,
    opts: &IntegratorOptions,
) -> StepReport {
    *state = net.snap(state);
    let r = net.resolve(state, inflow, Link3Regime::Empty);
    let drift = [r.drift[0], r.drift[1], 0.0, 0.0];
    let out = r.flows.f13 + r.flows.f23;
    linear_segment(state, &r, drift, out, None, inflow, dt_max, opts)
}

/// Merge-diverge advance.
pub fn advance_merge_diverge(
    net: &Network,
    state: &mut NetworkState,
    inflow: [f64; 2],
    dt_max: f64,
    opts: &IntegratorOptions,
) -> Result<StepReport> {
    let Some(d) = net.diverge else {
        return Err(Error::WrongTopology("merge-diverge"));
    };
    if net.options.diverge_rule != crate::model::DivergeRule::Symmetric {
        return Err(Error::Unsupported("the simulator requires the symmetric diverge rule"));
    }
    *state = net.snap(state);
    match net.link3_regime(state) {
        Link3Regime::Empty => {
            let r = net.resolve(state, inflow, Link3Regime::Empty);
            let merge = r.flows.merge();
            let fin = merge[0] + merge[1];
            if r.drift[2] <= DRIFT_TOL && r.drift[3] <= DRIFT_TOL {
                let drift = [r.drift[0], r.drift[1], 0.0, 0.0];
                let out = r.flows.f34 + r.flows.f35;
                return Ok(linear_segment(state, &r, drift, out, Some(&d), inflow, dt_max, opts));
            }
            // The common link starts to fill with the inflow composition.
            let psi = merge[0] / fin;
            let g = discharge([psi, 1.0 - psi], &d);
            let drift = [r.drift[0], r.drift[1], merge[0] - psi * g, merge[1] - (1.0 - psi) * g];
            if drift[2] + drift[3] <= 0.0 {
                let drift = [r.drift[0], r.drift[1], 0.0, 0.0];
                return Ok(linear_segment(state, &r, drift, fin, Some(&d), inflow, dt_max, opts));
            }
            Ok(linear_segment(state, &r, drift, g, Some(&d), inflow, dt_max, opts))
        }
        Link3Regime::Partial => {
            let r = net.resolve(state, inflow, Link3Regime::Partial);
            Ok(partial_segment(state, &r, &d, inflow, dt_max, opts))
        }
        Link3Regime::Full => {
            let r = net.resolve(state, inflow, Link3Regime::Full);
            let demand = sending_total(net, &r, inflow);
            let g = discharge(state.link3, &d);
            if demand < g - DRIFT_TOL {
                let r = net.resolve(state, inflow, Link3Regime::Partial);
                return Ok(partial_segment(state, &r, &d, inflow, dt_max, opts));
            }
            if r.drift[2].abs() <= SETTLED_RATE {
                let drift = [r.drift[0], r.drift[1], 0.0, 0.0];
                let out = r.flows.f34 + r.flows.f35;
                return Ok(linear_segment(state, &r, drift, out, Some(&d), inflow, dt_max, opts));
            }
            full_step(net, state, &r, demand, &d, inflow, dt_max, opts)
        }
    }
}

fn sending_total(net: &Network, r: &ResolvedFlows, inflow: [f64; 2]) -> f64 {
    (0..2)
        .map(|k| if r.queued[k] { net.merge.capacity[k] } else { inflow[k] })
        .sum()
}

/// Earliest upstream emptying time within the horizon, boundary-first on ties.
fn upstream_events(
    state: &NetworkState,
    drift: [f64; 4],
    dt_max: f64,
    opts: &IntegratorOptions,
) -> (f64, Option<Event>) {
    let mut best = (dt_max, None);
    #[allow(clippy::needless_range_loop)]
    for k in 0..2 {
        if state.upstream[k] > 0.0 && drift[k] < 0.0 {
            let t = state.upstream[k] / -drift[k];
            if t <= dt_max + opts.tie_tol && (best.1.is_none() || t < best.0) {
                best = (t.min(dt_max), Some(Event::UpstreamEmptied(k)));
            }
        }
    }
    best
}

/// Zeroes every upstream queue that reaches zero within the tie tolerance of `t`.
fn land_upstream(state: &mut NetworkState, start: [f64; 2], drift: [f64; 4], t: f64, opts: &IntegratorOptions) {
    for k in 0..2 {
        let q = start[k] + drift[k] * t;
        let hits = drift[k] < 0.0 && start[k] > 0.0 && start[k] / -drift[k] <= t + opts.tie_tol;
        state.upstream[k] = if hits { 0.0 } else { q.max(0.0) };
    }
}

#[allow(clippy::too_many_arguments)]
fn linear_segment(
    state: &mut NetworkState,
    r: &ResolvedFlows,
    drift: [f64; 4],
    departures: f64,
    diverge: Option<&DivergeParams>,
    inflow: [f64; 2],
    dt_max: f64,
    opts: &IntegratorOptions,
) -> StepReport {
    let start = *state;
    let (mut t, mut event) = upstream_events(state, drift, dt_max, opts);
    let q0 = start.link3_total();
    let dq = drift[2] + drift[3];
    if let Some(d) = diverge {
        let candidate = if dq > 0.0 {
            Some(((d.storage - q0) / dq, Event::Link3Filled))
        } else if dq < 0.0 && q0 > 0.0 {
            Some((q0 / -dq, Event::Link3Emptied))
        } else {
            None
        };
        if let Some((tc, ev)) = candidate {
            if tc <= t + opts.tie_tol && (event.is_none() || tc < t) {
                t = tc.min(dt_max);
                event = Some(ev);
            }
        }
    }
    land_upstream(state, start.upstream, drift, t, opts);
    for k in 0..2 {
        state.link3[k] = (start.link3[k] + drift[2 + k] * t).max(0.0);
    }
    match (event, diverge) {
        (Some(Event::Link3Filled), Some(d)) => fill(state, d.storage),
        (Some(Event::Link3Emptied), _) => state.link3 = [0.0; 2],
        _ => {}
    }
    let mut queue_integral = [0.0; 4];
    let end = [state.upstream[0], state.upstream[1], state.link3[0], state.link3[1]];
    let begin = [start.upstream[0], start.upstream[1], start.link3[0], start.link3[1]];
    for i in 0..4 {
        queue_integral[i] = 0.5 * (begin[i] + end[i]) * t;
    }
    StepReport {
        elapsed: t,
        reached_end: event.is_none() || t == dt_max,
        event,
        queued: r.queued,
        queue_integral,
        arrivals: [inflow[0] * t, inflow[1] * t],
        departures: departures * t,
    }
}

/// Rescales the common-link queues onto the storage.
fn fill(state: &mut NetworkState, storage: f64) {
    let first = share(state.link3) * storage;
    state.link3 = [first, storage - first];
}

/// Bisection for the first time in `(lo, hi]` at which `v >= 0`, given
/// `v(lo) < 0 <= v(hi)`. Stops once `v(hi) <= tol` or the bracket is at
/// floating-point resolution.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, v: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        if v(hi) <= tol || hi - lo <= 4.0 * f64::EPSILON * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if v(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Partly filled common link: closed-form relaxation within a discharge regime.
fn partial_segment(
    state: &mut NetworkState,
    r: &ResolvedFlows,
    d: &DivergeParams,
    inflow: [f64; 2],
    dt_max: f64,
    opts: &IntegratorOptions,
) -> StepReport {
    let merge = r.flows.merge();
    let fin = merge[0] + merge[1];
    let x0 = state.link3;
    let psi0 = share(x0);
    let target = if fin > 0.0 { merge[0] / fin } else { psi0 };

    if (target - psi0).abs() <= SHARE_TOL {
        let g = discharge(x0, d);
        let drift = [r.drift[0], r.drift[1], merge[0] - psi0 * g, merge[1] - (1.0 - psi0) * g];
        return linear_segment(state, r, drift, g, Some(d), inflow, dt_max, opts);
    }

    let direction = (target - psi0).signum();
    let probe = psi0 + direction * 1e-9_f64.max(1e-6 * (target - psi0).abs());
    let regime = regime_at(probe.clamp(0.0, 1.0), d);
    let path = LinkThree::build(regime, x0, merge, d);

    let start = *state;
    let (mut horizon, mut event) = upstream_events(state, r.drift, dt_max, opts);
    let limit = path.limit();
    if limit < horizon {
        horizon = limit;
        event = Some(Event::Link3Emptied);
    }
    // The closed form degenerates at its limit; probe just inside it.
    let probe_end = if horizon == limit {
        limit * (1.0 - 1e-9)
    } else {
        horizon
    };

    let psi_at = |t: f64| share(path.at(t));
    let total_at = |t: f64| {
        let x = path.at(t);
        x[0] + x[1]
    };
    let rate_at = |t: f64| fin - discharge(path.at(t), d);

    // Share leaves the regime interval.
    let (low, high) = regime_edges(d);
    let edge = match (regime, direction > 0.0) {
        (Regime::Second, true) => Some(low),
        (Regime::Capacity, true) => Some(high),
        (Regime::Capacity, false) => Some(low),
        (Regime::First, false) => Some(high),
        _ => None,
    };
    if let Some(edge) = edge {
        let crossed = |t: f64| direction * (psi_at(t) - edge);
        if (target - edge) * direction > 0.0 && crossed(probe_end) >= 0.0 {
            horizon = bisect(0.0, probe_end, SHARE_TOL, crossed);
            event = Some(Event::DischargeRegime);
        }
    }

    // Total crosses the storage or zero. Its derivative is monotone within a
    // regime, so split at the extremum and search each monotone piece.
    let end = if event == Some(Event::DischargeRegime) {
        horizon
    } else {
        probe_end
    };
    let mut pieces = [(0.0, end), (end, end)];
    let (r_lo, r_hi) = (rate_at(0.0), rate_at(end));
    if r_lo * r_hi < 0.0 {
        let s = r_lo.signum();
        let turn = bisect(0.0, end, 0.0, |t| -s * rate_at(t));
        pieces = [(0.0, turn), (turn, end)];
    }
    'search: for (a, b) in pieces {
        if b <= a {
            continue;
        }
        let (qa, qb) = (total_at(a), total_at(b));
        if qa < d.storage && qb >= d.storage {
            horizon = bisect(a, b, opts.event_tol, |t| total_at(t) - d.storage);
            event = Some(Event::Link3Filled);
            break 'search;
        }
        if qa > 0.0 && qb <= opts.event_tol {
            horizon = bisect(a, b, opts.event_tol, |t| -total_at(t));
            event = Some(Event::Link3Emptied);
            break 'search;
        }
    }

    let t = horizon;
    land_upstream(state, start.upstream, r.drift, t, opts);
    state.link3 = path.at(t);
    match event {
        Some(Event::Link3Filled) => fill(state, d.storage),
        Some(Event::Link3Emptied) => state.link3 = [0.0; 2],
        _ if state.link3[0] + state.link3[1] > d.storage => fill(state, d.storage),
        _ => {}
    }
    let panels = ((t * path.stiffness(t)).ceil() as usize).clamp(1, 64);
    let [i1, i2, out] = if t > 0.0 {
        integrate(t, panels, |s| {
            let x = path.at(s);
            [x[0], x[1], discharge(x, d)]
        })
    } else {
        [0.0; 3]
    };
    StepReport {
        elapsed: t,
        reached_end: event.is_none() || t == dt_max,
        event,
        queued: r.queued,
        queue_integral: [
            0.5 * (start.upstream[0] + state.upstream[0]) * t,
            0.5 * (start.upstream[1] + state.upstream[1]) * t,
            i1,
            i2,
        ],
        arrivals: [inflow[0] * t, inflow[1] * t],
        departures: out,
    }
}

/// One RK4 step on `(q1, q2, q3_1)` with the common link held full.
#[allow(clippy::too_many_arguments)]
fn full_step(
    net: &Network,
    state: &mut NetworkState,
    r: &ResolvedFlows,
    demand: f64,
    d: &DivergeParams,
    inflow: [f64; 2],
    dt_max: f64,
    opts: &IntegratorOptions,
) -> Result<StepReport> {
    let storage = d.storage;
    let queued = r.queued;
    let y0 = [state.upstream[0], state.upstream[1], state.link3[0]];
    // Derivative of (q1, q2, q3_1, cumulative departures).
    let rhs = |y: [f64; 3]| -> [f64; 4] {
        let x1 = y[2].clamp(0.0, storage);
        let f = net.flows_in_regime(inflow, queued, [x1, storage - x1], Link3Regime::Full);
        [
            if queued[0] { inflow[0] - f.f13 } else { 0.0 },
            if queued[1] { inflow[1] - f.f23 } else { 0.0 },
            f.f13 - f.f34,
            f.f34 + f.f35,
        ]
    };
    let step = |h: f64| -> ([f64; 3], f64) {
        let add = |y: [f64; 3], k: [f64; 4], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
        let k1 = rhs(y0);
        let k2 = rhs(add(y0, k1, h / 2.0));
        let k3 = rhs(add(y0, k2, h / 2.0));
        let k4 = rhs(add(y0, k3, h));
        let mut y = [0.0; 3];
        for i in 0..3 {
            y[i] = y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let out = h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]);
        (y, out)
    };
    // Positive once some event has happened by time h.
    let trigger = |h: f64| -> f64 {
        let (y, _) = step(h);
        let mut v = f64::NEG_INFINITY;
        for k in 0..2 {
            if queued[k] && y0[k] > 0.0 {
                v = v.max(-y[k]);
            }
        }
        let x1 = y[2].clamp(0.0, storage);
        v.max(discharge([x1, storage - x1], d) - demand - DRIFT_TOL)
    };

    let mut h = opts.max_step.min(dt_max);
    let mut event = None;
    if trigger(h) >= 0.0 {
        let found = bisect(0.0, h, opts.event_tol, trigger);
        if !(found > 0.0) {
            return Err(Error::StepUnderflow {
                time: 0.0,
                state: *state,
            });
        }
        h = found;
        let (y, _) = step(h);
        event = Some(if (0..2).any(|k| queued[k] && y0[k] > 0.0 && y[k] <= opts.event_tol) {
            let k = if queued[0] && y0[0] > 0.0 && y[0] <= opts.event_tol {
                0
            } else {
                1
            };
            Event::UpstreamEmptied(k)
        } else {
            Event::LeavingFullBuffer
        });
    }
    let (y, out) = step(h);
    let start = *state;
    for k in 0..2 {
        state.upstream[k] = if y[k] <= opts.event_tol && queued[k] && y0[k] > 0.0 {
            0.0
        } else {
            y[k].max(0.0)
        };
    }
    let x1 = y[2].clamp(0.0, storage);
    state.link3 = [x1, storage - x1];
    let i3 = 0.5 * (start.link3[0] + x1) * h;
    Ok(StepReport {
        elapsed: h,
        reached_end: h == dt_max,
        event,
        queued,
        queue_integral: [
            0.5 * (start.upstream[0] + state.upstream[0]) * h,
            0.5 * (start.upstream[1] + state.upstream[1]) * h,
            i3,
            storage * h - i3,
        ],
        arrivals: [inflow[0] * h, inflow[1] * h],
        departures: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DivergeParams, MergeParams, Mode, PriorityVector};
    use approx::assert_relative_eq;

    fn merge_net(cap: [f64; 2], r3: f64, phi: f64) -> Network {
        Network::merge_only(MergeParams::new(cap, r3, PriorityVector::new(phi).unwrap()).unwrap())
    }

    fn md_net(f3: f64) -> Network {
        Network::merge_diverge(
            MergeParams::new([1500.0, 1500.0], f3, PriorityVector::new(0.5).unwrap()).unwrap(),
            DivergeParams::new(f3, 40.0, [1400.0, 1400.0]).unwrap(),
        )
    }

    fn run(net: &Network, state: &mut NetworkState, inflow: [f64; 2], t_end: f64) -> Vec<(f64, StepReport)> {
        let opts = IntegratorOptions::default();
        let mut t = 0.0;
        let mut log = Vec::new();
        while t < t_end {
            let rep = advance(net, state, inflow, t_end - t, &opts).unwrap();
            t = if rep.reached_end { t_end } else { t + rep.elapsed };
            log.push((t, rep));
        }
        log
    }

    use std::vec::Vec;

    #[test]
    fn drain_example_has_exact_event_times() {
        let net = merge_net([1.0, 1.0], 2.0, 0.5);
        let mut s = NetworkState::new(Mode::Off, [5.0, 3.0], [0.0; 2]);
        let log = run(&net, &mut s, [0.0, 0.0], 10.0);
        assert_eq!(log[0].0, 3.0);
        assert_eq!(log[0].1.event, Some(Event::UpstreamEmptied(1)));
        assert_eq!(log[1].0, 5.0);
        assert_eq!(log[1].1.event, Some(Event::UpstreamEmptied(0)));
        assert_eq!(s.upstream, [0.0, 0.0]);
    }

    #[test]
    fn empty_network_without_inflow_is_absorbing() {
        let net = merge_net([1500.0, 1500.0], 2500.0, 0.5);
        let mut s = NetworkState::empty(Mode::Off);
        let rep = advance(&net, &mut s, [0.0; 2], 7.0, &IntegratorOptions::default()).unwrap();
        assert_eq!(rep.elapsed, 7.0);
        assert_eq!(s, NetworkState::empty(Mode::Off));
    }

    #[test]
    fn empty_queues_leave_zero_together() {
        let net = merge_net([1500.0, 1500.0], 2500.0, 0.5);
        let mut s = NetworkState::empty(Mode::Both);
        advance(&net, &mut s, [3000.0, 3000.0], 0.01, &IntegratorOptions::default()).unwrap();
        assert_relative_eq!(s.upstream[0], 17.5, max_relative = 1e-12);
        assert_relative_eq!(s.upstream[1], 17.5, max_relative = 1e-12);
    }

    #[test]
    fn merge_diverge_keeps_queues_in_bounds_and_conserves_mass() {
        let net = md_net(2600.0);
        let mut s = NetworkState::new(Mode::Both, [0.0, 30.0], [12.0, 3.0]);
        let start = s.total();
        let mut arrivals = 0.0;
        let mut departures = 0.0;
        for (inflow, dur) in [
            ([3000.0, 3000.0], 0.3),
            ([3000.0, 0.0], 0.2),
            ([0.0, 0.0], 1.0),
            ([0.0, 3000.0], 0.4),
        ] {
            for (_, rep) in run(&net, &mut s, inflow, dur) {
                arrivals += rep.arrivals[0] + rep.arrivals[1];
                departures += rep.departures;
                assert!(s.upstream.iter().chain(s.link3.iter()).all(|&q| q >= 0.0));
                assert!(s.link3_total() <= 40.0 + 1e-9);
            }
        }
        let change = s.total() - start;
        assert_relative_eq!(change, arrivals - departures, max_relative = 1e-6, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_common_link_tracks_merge_only_upstream() {
        let md = md_net(2600.0);
        let merge = merge_net([1500.0, 1500.0], 2600.0, 0.5);
        let mut a = NetworkState::new(Mode::Both, [10.0, 10.0], [5.0, 5.0]);
        let mut b = NetworkState::new(Mode::Both, [10.0, 10.0], [0.0; 2]);
        run(&md, &mut a, [1200.0, 1200.0], 0.05);
        run(&merge, &mut b, [1200.0, 1200.0], 0.05);
        assert_relative_eq!(a.link3[0], a.link3[1], max_relative = 1e-12);
        assert_relative_eq!(a.upstream[0], b.upstream[0], max_relative = 1e-12);
        assert_relative_eq!(a.upstream[1], b.upstream[1], max_relative = 1e-12);
    }

    #[test]
    fn full_buffer_never_overflows() {
        let net = md_net(2600.0);
        let mut s = NetworkState::new(Mode::Both, [50.0, 50.0], [35.0, 5.0]);
        for (_, rep) in run(&net, &mut s, [3000.0, 3000.0], 0.5) {
            assert!(s.link3_total() <= 40.0 + 1e-9, "{:?}", rep);
        }
        assert_relative_eq!(s.link3_total(), 40.0, max_relative = 1e-12);
        // Settles at the symmetric composition.
        assert_relative_eq!(s.link3[0], 20.0, max_relative = 1e-6);
    }

    #[test]
    fn as_printed_rule_is_rejected_by_the_simulator() {
        let mut net = md_net(2600.0);
        net.options.diverge_rule = crate::model::DivergeRule::AsPrinted;
        let mut s = NetworkState::empty(Mode::Both);
        assert!(advance(&net, &mut s, [3000.0, 0.0], 0.1, &IntegratorOptions::default()).is_err());
    }
}
