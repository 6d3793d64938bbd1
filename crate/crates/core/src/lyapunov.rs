//! Piecewise-quadratic Lyapunov certificates and numerical drift checks.
//!
//! Both certificates have the form `V(i, q) = s * y^2 + beta_i * y` with a
//! linear coordinate `y >= 0` and a mode-dependent offset `beta_i`. For the
//! merge junction `y = q1 + alpha * q2`; for the merge-diverge network
//! `y = x1 + alpha * x2` with `x_k = (q_k - hat_q_k)_+ + q3_k`.
//!
//! The offsets are chosen so that the jump part of the generator,
//! `sum_j rate(i, j) * (beta_j - beta_i)`, turns the mode inflow `a^i` into
//! the mean inflow. With `s = 1/2` the generator is then
//! `y * [(a1_mean - f1) + alpha * (a2_mean - f2)] + beta_i * y'`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mode, Network, NetworkState, ProductChain, Topology};
use crate::simulator::{SimConfig, Simulation};
use crate::stability::{check_uniform, guaranteed_discharge, in_phi2};

/// Coefficient of the quadratic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum QuadraticScale {
    /// `y^2 / 2`. The generator identity holds in this form.
    #[default]
    Half,
    /// `y^2`, i.e. `q^T P q` with `P = [[1, a], [a, a^2]]`.
    Unit,
}

impl QuadraticScale {
    fn factor(self) -> f64 {
        match self {
            QuadraticScale::Half => 0.5,
            QuadraticScale::Unit => 1.0,
        }
    }
}

/// Mode offsets in [`Mode::ALL`] order for weight `alpha` on class 2.
fn offsets(alpha: f64, chain: &ProductChain) -> [f64; 4] {
    let [a1, a2] = chain.mean_inflow();
    let first = a1 / chain.links[0].on_rate;
    let second = alpha * a2 / chain.links[1].on_rate;
    [1.0, first + 1.0, second + 1.0, first + second + 1.0]
}

/// `(a1/(m2 - a2) + (m1 - a1)/a2) / 2`.
fn balanced_weight(mean: [f64; 2], discharge: [f64; 2]) -> f64 {
    0.5 * (mean[0] / (discharge[1] - mean[1]) + (discharge[0] - mean[0]) / mean[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LyapunovV1 {
    pub alpha: f64,
    pub beta: [f64; 4],
    pub scale: QuadraticScale,
}

impl LyapunovV1 {
    /// Evaluates the parameter formulas without checking that they certify anything.
    pub fn from_formulas(chain: &ProductChain, capacity: [f64; 2]) -> Self {
        let alpha = balanced_weight(chain.mean_inflow(), capacity);
        LyapunovV1 {
            alpha,
            beta: offsets(alpha, chain),
            scale: QuadraticScale::Half,
        }
    }
}

/// Builds the merge-junction certificate; requires `a1/F1 + a2/F2 < 1`.
pub fn build_v1(chain: &ProductChain, capacity: [f64; 2]) -> Result<LyapunovV1> {
    let mean = chain.mean_inflow();
    if !check_uniform(mean, capacity) {
        return Err(Error::UniformConditionFails {
            ratio: mean[0] / capacity[0] + mean[1] / capacity[1],
        });
    }
    Ok(LyapunovV1::from_formulas(chain, capacity))
}

/// Upstream queue level beyond which the discharge share of a class is
/// guaranteed; `Unattainable` when the share never gets there.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HatThreshold {
    Finite(f64),
    Unattainable,
}

impl HatThreshold {
    /// `(q - hat)_+`, with an unattainable threshold acting as `+inf`.
    fn excess(self, q: f64) -> f64 {
        match self {
            HatThreshold::Finite(h) => (q - h).max(0.0),
            HatThreshold::Unattainable => 0.0,
        }
    }

    /// Right derivative of [`HatThreshold::excess`] along `dq`.
    fn excess_rate(self, q: f64, dq: f64) -> f64 {
        match self {
            HatThreshold::Finite(h) if q > h => dq,
            HatThreshold::Finite(h) if q == h => dq.max(0.0),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LyapunovV2 {
    pub alpha: f64,
    pub beta: [f64; 4],
    pub hat_q: [HatThreshold; 2],
    /// Guaranteed long-run discharge of each class.
    pub discharge: [f64; 2],
    pub scale: QuadraticScale,
}

/// Share of the common-link storage that class `k` is guaranteed to hold
/// after its upstream queue has been above capacity for `s` hours:
/// `theta_s = (theta m / F3) (1 - exp(-F3 s / theta))`, the solution of
/// `theta' = m - F3 theta / theta_max` from 0 with `m = min{F_k, phi_k F3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ThetaProfile {
    pub storage: f64,
    pub rate: f64,
    pub capacity: f64,
    /// Peak inflow of the class.
    pub peak: f64,
}

impl ThetaProfile {
    pub fn at(&self, s: f64) -> f64 {
        self.storage * self.rate / self.capacity * -(-self.capacity * s / self.storage).exp_m1()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.rate * (-self.capacity * s / self.storage).exp()
    }

    pub fn limit(&self) -> f64 {
        self.storage * self.rate / self.capacity
    }

    /// Time for an upstream queue growing at `peak - rate` to reach `q`.
    pub fn time_to(&self, q: f64) -> f64 {
        q / (self.peak - self.rate)
    }
}

fn require_network(net: &Network) -> Result<crate::model::DivergeParams> {
    net.diverge.ok_or(Error::WrongTopology("merge-diverge"))
}

fn require_phi2(net: &Network, chain: &ProductChain) -> Result<()> {
    let d = require_network(net)?;
    let phi = net.merge.priority;
    if in_phi2(phi, chain.mean_inflow(), net.merge.capacity, d.capacity, d.receiving) {
        Ok(())
    } else {
        Err(Error::NotStabilizing { phi1: phi.first() })
    }
}

/// Storage profile of class `k` (0 or 1).
pub fn theta_profile(k: usize, net: &Network, chain: &ProductChain) -> Result<ThetaProfile> {
    require_phi2(net, chain)?;
    let d = require_network(net)?;
    let phi = net.merge.priority.as_array();
    let rate = net.merge.capacity[k].min(phi[k] * d.capacity);
    let peak = chain.links[k].peak;
    if peak <= rate {
        return Err(Error::PeakBelowDischarge {
            link: k + 1,
            peak,
            discharge: rate,
        });
    }
    Ok(ThetaProfile {
        storage: d.storage,
        rate,
        capacity: d.capacity,
        peak,
    })
}

/// Lower bound on the discharge share of class `k` once its upstream queue
/// exceeds `q_tilde`.
pub fn psi_lower_bound(k: usize, q_tilde: f64, net: &Network, chain: &ProductChain) -> Result<f64> {
    let p = theta_profile(k, net, chain)?;
    Ok(p.at(p.time_to(q_tilde)) / p.storage)
}

/// Smallest upstream queue of class `k` that guarantees the share
/// `1 - R_other / F3` at which the other downstream link cannot block it.
pub fn hat_threshold(k: usize, net: &Network, chain: &ProductChain) -> Result<f64> {
    let p = theta_profile(k, net, chain)?;
    let d = require_network(net)?;
    let target = 1.0 - d.receiving[1 - k] / d.capacity;
    if target <= 0.0 {
        return Ok(0.0);
    }
    let fraction = target * p.capacity / p.rate;
    if fraction >= 1.0 {
        return Err(Error::ThresholdUnattainable {
            link: k + 1,
            target,
            fixed_point: p.rate / p.capacity,
        });
    }
    let s = -(p.storage / p.capacity) * (-fraction).ln_1p();
    Ok(s * (p.peak - p.rate))
}

pub fn hat_thresholds(net: &Network, chain: &ProductChain) -> Result<[f64; 2]> {
    Ok([hat_threshold(0, net, chain)?, hat_threshold(1, net, chain)?])
}

/// Builds the merge-diverge certificate; requires the split to lie in `Phi2`.
pub fn build_v2(net: &Network, chain: &ProductChain) -> Result<LyapunovV2> {
    require_phi2(net, chain)?;
    let d = require_network(net)?;
    let phi = net.merge.priority;
    let cap = net.merge.capacity;
    let discharge = [
        guaranteed_discharge(0, phi, cap, d.capacity, d.receiving),
        guaranteed_discharge(1, phi, cap, d.capacity, d.receiving),
    ];
    let alpha = balanced_weight(chain.mean_inflow(), discharge);
    let hat = |k: usize| match hat_threshold(k, net, chain) {
        Ok(h) => Ok(HatThreshold::Finite(h)),
        Err(Error::ThresholdUnattainable { .. }) => Ok(HatThreshold::Unattainable),
        Err(e) => Err(e),
    };
    Ok(LyapunovV2 {
        alpha,
        beta: offsets(alpha, chain),
        hat_q: [hat(0)?, hat(1)?],
        discharge,
        scale: QuadraticScale::Half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind"))]
pub enum Certificate {
    V1(LyapunovV1),
    V2(LyapunovV2),
}

impl Certificate {
    pub fn name(&self) -> &'static str {
        match self {
            Certificate::V1(_) => "V1",
            Certificate::V2(_) => "V2",
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Certificate::V1(v) => v.alpha,
            Certificate::V2(v) => v.alpha,
        }
    }

    pub fn beta(&self, mode: Mode) -> f64 {
        match self {
            Certificate::V1(v) => v.beta[mode.index()],
            Certificate::V2(v) => v.beta[mode.index()],
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Certificate::V1(v) => v.scale.factor(),
            Certificate::V2(v) => v.scale.factor(),
        }
    }

    /// Per-class coordinates whose weighted sum is `y`.
    pub fn coordinates(&self, state: &NetworkState) -> [f64; 2] {
        match self {
            Certificate::V1(_) => state.upstream,
            Certificate::V2(v) => [
                v.hat_q[0].excess(state.upstream[0]) + state.link3[0],
                v.hat_q[1].excess(state.upstream[1]) + state.link3[1],
            ],
        }
    }

    /// Right derivatives of [`Certificate::coordinates`] along `drift`.
    pub fn coordinate_rates(&self, state: &NetworkState, drift: &[f64; 4]) -> [f64; 2] {
        match self {
            Certificate::V1(_) => [drift[0], drift[1]],
            Certificate::V2(v) => [
                v.hat_q[0].excess_rate(state.upstream[0], drift[0]) + drift[2],
                v.hat_q[1].excess_rate(state.upstream[1], drift[1]) + drift[3],
            ],
        }
    }

    pub fn linear_coordinate(&self, state: &NetworkState) -> f64 {
        let x = self.coordinates(state);
        x[0] + self.alpha() * x[1]
    }

    /// `V(mode, state)`.
    pub fn value_in(&self, mode: Mode, state: &NetworkState) -> f64 {
        let y = self.linear_coordinate(state);
        self.scale() * y * y + self.beta(mode) * y
    }

    pub fn value(&self, state: &NetworkState) -> f64 {
        self.value_in(state.mode, state)
    }

    /// `sum_j rate(i, j) (beta_j - beta_i)`.
    pub fn jump_coefficient(&self, mode: Mode, chain: &ProductChain) -> f64 {
        chain
            .transitions(mode)
            .iter()
            .map(|&(j, rate)| rate * (self.beta(j) - self.beta(mode)))
            .sum()
    }

    /// Generator at `state` given the queue drift there, as `(k, b)` with
    /// `LV = k * y + b`.
    pub fn generator_parts(&self, state: &NetworkState, drift: &[f64; 4], chain: &ProductChain) -> (f64, f64) {
        let r = self.coordinate_rates(state, drift);
        let dy = r[0] + self.alpha() * r[1];
        (
            2.0 * self.scale() * dy + self.jump_coefficient(state.mode, chain),
            self.beta(state.mode) * dy,
        )
    }

    /// Generator at `state` given the queue drift there.
    pub fn generator_with_drift(&self, state: &NetworkState, drift: &[f64; 4], chain: &ProductChain) -> f64 {
        let (k, b) = self.generator_parts(state, drift, chain);
        self.linear_coordinate(state) * k + b
    }

    /// Generator on the flow regime the state actually follows, boundaries included.
    pub fn generator(&self, net: &Network, chain: &ProductChain, state: &NetworkState) -> f64 {
        let s = net.snap(state);
        let drift = effective_drift(net, chain, &s);
        self.generator_with_drift(&s, &drift, chain)
    }

    /// Generator at an interior state; rejects states within `eps_q` of a
    /// flow-regime boundary or of a threshold kink.
    pub fn numeric_generator(&self, net: &Network, chain: &ProductChain, state: &NetworkState) -> Result<f64> {
        let eps = net.options.eps_q.max(f64::EPSILON);
        let near = |q: f64, b: f64| (q - b).abs() <= eps;
        let mut boundary = state.upstream.iter().any(|&q| q <= eps);
        if let (Some(d), Topology::MergeDiverge) = (net.diverge, net.topology()) {
            let total = state.link3_total();
            boundary |= total <= eps || total >= d.storage - eps;
            boundary |= state.link3.iter().any(|&q| q <= eps);
        }
        if let Certificate::V2(v) = self {
            for k in 0..2 {
                if let HatThreshold::Finite(h) = v.hat_q[k] {
                    boundary |= near(state.upstream[k], h);
                }
            }
        }
        if boundary {
            return Err(Error::NearBoundary { tolerance: eps });
        }
        Ok(self.generator(net, chain, state))
    }

    /// `LV - y * [(a1_mean - g1) + alpha (a2_mean - g2)]`, where `g_k` is the
    /// outflow implied by the coordinate drift, `g_k = a_k - x_k'`.
    pub fn remainder(&self, net: &Network, chain: &ProductChain, state: &NetworkState) -> f64 {
        let s = net.snap(state);
        let drift = effective_drift(net, chain, &s);
        let (k, b) = self.generator_parts(&s, &drift, chain);
        let inflow = chain.inflow(s.mode);
        let mean = chain.mean_inflow();
        let r = self.coordinate_rates(&s, &drift);
        let g = [inflow[0] - r[0], inflow[1] - r[1]];
        // The linear parts cancel before the per-mode constant is added back.
        let y = self.linear_coordinate(&s);
        y * (k - ((mean[0] - g[0]) + self.alpha() * (mean[1] - g[1]))) + b
    }
}

fn effective_drift(net: &Network, chain: &ProductChain, state: &NetworkState) -> [f64; 4] {
    net.resolve(state, chain.inflow(state.mode), net.link3_regime(state))
        .drift
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DriftConstants {
    pub c: f64,
    pub d: f64,
}

/// `min{m1 - a1 - alpha a2, alpha m2 - a1 - alpha a2} * min{1, alpha}`.
fn linear_margin(alpha: f64, mean: [f64; 2], discharge: [f64; 2]) -> f64 {
    let load = mean[0] + alpha * mean[1];
    (discharge[0] - load).min(alpha * discharge[1] - load) * alpha.min(1.0)
}

/// `c` from the margin formula and `d` as the grid maximum of `LV + c |q|`
/// over `[0, bound]^2` with `divisions` cells per side, in every mode.
pub fn drift_constants_v1(
    cert: &LyapunovV1,
    net: &Network,
    chain: &ProductChain,
    bound: f64,
    divisions: usize,
) -> Result<DriftConstants> {
    let c = linear_margin(cert.alpha, chain.mean_inflow(), net.merge.capacity);
    if !(c > 0.0) {
        return Err(Error::NonPositiveDriftConstant { c });
    }
    let v = Certificate::V1(*cert);
    let mut d = f64::NEG_INFINITY;
    for mode in Mode::ALL {
        for i in 0..=divisions {
            for j in 0..=divisions {
                let q = [bound * i as f64 / divisions as f64, bound * j as f64 / divisions as f64];
                let s = NetworkState::new(mode, q, [0.0; 2]);
                d = d.max(v.generator(net, chain, &s) + c * (q[0] + q[1]));
            }
        }
    }
    Ok(DriftConstants { c, d: d.max(0.0) })
}

/// Where drift samples are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Region {
    /// Uniform modes and upstream queues in `[0, bound]^2`; the common link
    /// is uniform on its storage simplex when present.
    Box { bound: f64 },
    /// States visited by simulated runs started uniformly in `[0, bound]^2`,
    /// recorded after `warmup` hours.
    Trajectories {
        bound: f64,
        warmup: f64,
        horizon: f64,
        runs: usize,
    },
}

fn sample_box<R: Rng>(rng: &mut R, net: &Network, bound: f64) -> NetworkState {
    let mode = Mode::ALL[rng.random_range(0..4)];
    let q = [rng.random::<f64>() * bound, rng.random::<f64>() * bound];
    let link3 = match &net.diverge {
        Some(d) => {
            let total = rng.random::<f64>() * d.storage;
            let first = rng.random::<f64>() * total;
            [first, total - first]
        }
        None => [0.0; 2],
    };
    NetworkState::new(mode, q, link3)
}

/// Draws `samples` states from `region`.
pub fn sample_region(
    region: &Region,
    net: &Network,
    chain: &ProductChain,
    samples: usize,
    seed: u64,
) -> Result<Vec<NetworkState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *region {
        Region::Box { bound } => Ok((0..samples).map(|_| sample_box(&mut rng, net, bound)).collect()),
        Region::Trajectories {
            bound,
            warmup,
            horizon,
            runs,
        } => {
            let runs = runs.max(1);
            let per_run = samples.div_ceil(runs);
            let mut out = Vec::with_capacity(samples);
            for run in 0..runs {
                let start = sample_box(&mut rng, net, bound);
                let start = net.snap(&start);
                let config = SimConfig::new(*net, *chain, warmup + horizon, start, seed);
                let mut sim = Simulation::with_stream(&config, run as u64)?;
                for i in 0..per_run {
                    if out.len() == samples {
                        break;
                    }
                    sim.advance_to(warmup + horizon * (i + 1) as f64 / per_run as f64)?;
                    out.push(*sim.state());
                }
            }
            Ok(out)
        }
    }
}

/// Relative headroom added to a sampled maximum, which underestimates the
/// supremum it stands in for.
pub const SAMPLED_D_MARGIN: f64 = 0.1;

/// `c` from the margin formula with the guaranteed discharges and `d` as the
/// maximum of `LV + c |q|` over states drawn from `region`, widened by
/// [`SAMPLED_D_MARGIN`].
pub fn drift_constants_v2(
    cert: &LyapunovV2,
    net: &Network,
    chain: &ProductChain,
    region: &Region,
    samples: usize,
    seed: u64,
) -> Result<DriftConstants> {
    let c = linear_margin(cert.alpha, chain.mean_inflow(), cert.discharge);
    if !(c > 0.0) {
        return Err(Error::NonPositiveDriftConstant { c });
    }
    let v = Certificate::V2(*cert);
    let d = sample_region(region, net, chain, samples, seed)?
        .iter()
        .map(|s| v.generator(net, chain, s) + c * s.total())
        .fold(0.0, f64::max);
    Ok(DriftConstants {
        c,
        d: d * (1.0 + SAMPLED_D_MARGIN),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RemainderStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DriftReport {
    pub cert: &'static str,
    pub region: Region,
    pub c: f64,
    pub d: f64,
    /// Largest `LV + c |q|` over the samples.
    pub max_lhs: f64,
    pub samples: usize,
    pub pass: bool,
    /// Remainder statistics over interior samples, in [`Mode::ALL`] order.
    pub per_mode_remainder: [RemainderStats; 4],
}

impl RemainderStats {
    /// Moments about the first value, so identical inputs give `std == 0`
    /// regardless of their magnitude.
    pub fn from_values(values: &[f64]) -> Self {
        let Some(&shift) = values.first() else {
            return RemainderStats::default();
        };
        let n = values.len() as f64;
        let d_mean = values.iter().map(|v| v - shift).sum::<f64>() / n;
        let var = values.iter().map(|v| (v - shift - d_mean).powi(2)).sum::<f64>() / n;
        RemainderStats {
            count: values.len(),
            mean: shift + d_mean,
            std: var.sqrt(),
            max_abs: values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Checks `LV <= -c |q| + d` on `samples` states from `region`. `|q|` is
/// the sum of all queues.
pub fn verify_drift(
    cert: &Certificate,
    net: &Network,
    chain: &ProductChain,
    constants: DriftConstants,
    region: &Region,
    samples: usize,
    seed: u64,
) -> Result<DriftReport> {
    let states = sample_region(region, net, chain, samples, seed)?;
    let mut max_lhs = f64::NEG_INFINITY;
    let mut remainders: [Vec<f64>; 4] = Default::default();
    for s in &states {
        let lhs = cert.generator(net, chain, s) + constants.c * s.total();
        max_lhs = max_lhs.max(lhs);
        if cert.numeric_generator(net, chain, s).is_ok() {
            remainders[s.mode.index()].push(cert.remainder(net, chain, s));
        }
    }
    Ok(DriftReport {
        cert: cert.name(),
        region: *region,
        c: constants.c,
        d: constants.d,
        max_lhs,
        samples: states.len(),
        pass: max_lhs <= constants.d,
        per_mode_remainder: [
            RemainderStats::from_values(&remainders[0]),
            RemainderStats::from_values(&remainders[1]),
            RemainderStats::from_values(&remainders[2]),
            RemainderStats::from_values(&remainders[3]),
        ],
    })
}
