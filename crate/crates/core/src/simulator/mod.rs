//! Event-driven simulation of the switching fluid network.
//!
//! Inflow-mode jumps are sampled from the product chain; between jumps the
//! queues follow [`hybrid::advance`].

pub mod estimate;
pub mod hybrid;
pub mod platoon;
mod relax;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlowVector, Mode, Network, NetworkState, ProductChain};
pub use estimate::{estimate_stability, EmpiricalVerdict, EstimatorOptions, StabilityEstimate};
pub use hybrid::{advance, advance_merge, advance_merge_diverge, Event, IntegratorOptions, StepReport};
pub use platoon::{platoon_process, InflowPath, PlatoonProcess};

/// Samples the holding time in `mode` and the mode entered next.
pub fn sample_mode_holding<R: Rng + ?Sized>(mode: Mode, chain: &ProductChain, rng: &mut R) -> (f64, Mode) {
    let [(first, r1), (second, r2)] = chain.transitions(mode);
    let total = r1 + r2;
    let duration = Exp::new(total).expect("positive exit rate").sample(rng);
    let next = if rng.random::<f64>() * total < r1 {
        first
    } else {
        second
    };
    (duration, next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SimConfig {
    pub network: Network,
    pub chain: ProductChain,
    /// Simulated time (hr).
    pub horizon: f64,
    pub initial_state: NetworkState,
    pub seed: u64,
    pub integrator: IntegratorOptions,
    /// Fixed inflows that replace the chain; no mode jumps are sampled.
    pub constant_inflow: Option<[f64; 2]>,
}

impl SimConfig {
    pub fn new(network: Network, chain: ProductChain, horizon: f64, initial_state: NetworkState, seed: u64) -> Self {
        SimConfig {
            network,
            chain,
            horizon,
            initial_state,
            seed,
            integrator: IntegratorOptions::default(),
            constant_inflow: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.chain.validate()?;
        self.integrator.validate()?;
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: self.horizon,
                expected: "a finite value >= 0",
            });
        }
        if let Some(a) = self.constant_inflow {
            for (name, v) in ["constant_inflow[0]", "constant_inflow[1]"].into_iter().zip(a) {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name,
                        value: v,
                        expected: "a finite inflow >= 0",
                    });
                }
            }
        }
        self.network.validate_state(&self.initial_state)
    }

    pub fn inflow(&self, mode: Mode) -> [f64; 2] {
        self.constant_inflow.unwrap_or_else(|| self.chain.inflow(mode))
    }
}

/// Fractions of time by upstream emptiness: `p00` both empty, `p01` only
/// link 2 queued, `p10` only link 1 queued, `p11` both queued.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Occupancy {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl Occupancy {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrajectoryStats {
    pub horizon: f64,
    pub time_avg_q1: f64,
    pub time_avg_q2: f64,
    /// Total common-link queue.
    pub time_avg_q3: f64,
    pub occupancy: Occupancy,
    /// Fraction of time spent in each inflow mode, in [`Mode::ALL`] order.
    pub mode_occupancy: [f64; 4],
    /// Departures from the network per hour.
    pub mean_throughput: f64,
    /// Arrivals per hour on links 1 and 2.
    pub mean_inflow: [f64; 2],
    pub event_count: u64,
    pub final_state: NetworkState,
}

/// Snapshot of a run at an output instant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PathSample {
    pub time: f64,
    pub state: NetworkState,
    pub flows: FlowVector,
}

#[derive(Debug, Clone, Copy, Default)]
struct Totals {
    elapsed: f64,
    queue: [f64; 4],
    pattern: [f64; 4],
    mode: [f64; 4],
    arrivals: [f64; 2],
    departures: f64,
    events: u64,
}

/// Consecutive zero-length advances tolerated before giving up.
const STALL_LIMIT: u32 = 64;

/// A single run, advanced incrementally.
pub struct Simulation<'a> {
    config: &'a SimConfig,
    rng: ChaCha8Rng,
    time: f64,
    state: NetworkState,
    next_jump: (f64, Mode),
    totals: Totals,
}

impl<'a> Simulation<'a> {
    pub fn new(config: &'a SimConfig) -> Result<Self> {
        Simulation::with_stream(config, 0)
    }

    /// Run number `stream` of an ensemble sharing `config.seed`.
    pub fn with_stream(config: &'a SimConfig, stream: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let state = config.network.snap(&config.initial_state);
        let next_jump = if config.constant_inflow.is_some() {
            (f64::INFINITY, state.mode)
        } else {
            sample_mode_holding(state.mode, &config.chain, &mut rng)
        };
        Ok(Simulation {
            config,
            rng,
            time: 0.0,
            state,
            next_jump,
            totals: Totals::default(),
        })
    }

    /// Like [`Simulation::with_stream`] but from a different initial state.
    pub fn from_state(config: &'a SimConfig, stream: u64, state: NetworkState) -> Result<Self> {
        config.network.validate_state(&state)?;
        let mut sim = Simulation::with_stream(config, stream)?;
        sim.state = config.network.snap(&state);
        if config.constant_inflow.is_none() && sim.state.mode != config.initial_state.mode {
            sim.next_jump = sample_mode_holding(sim.state.mode, &config.chain, &mut sim.rng);
        }
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    /// Integral of `q1 + q2` so far (veh hr).
    pub fn upstream_integral(&self) -> f64 {
        self.totals.queue[0] + self.totals.queue[1]
    }

    /// Effective flows at the current state.
    pub fn flows(&self) -> FlowVector {
        let net = &self.config.network;
        net.resolve(
            &self.state,
            self.config.inflow(self.state.mode),
            net.link3_regime(&self.state),
        )
        .flows
    }

    /// Advances to absolute time `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let tie = self.config.integrator.tie_tol;
        let mut stalls = 0;
        while self.time < t_end {
            if self.next_jump.0 - self.time <= tie && self.next_jump.0 <= t_end {
                self.jump();
                continue;
            }
            let target = self.next_jump.0.min(t_end);
            let inflow = self.config.inflow(self.state.mode);
            let rep = advance(
                &self.config.network,
                &mut self.state,
                inflow,
                target - self.time,
                &self.config.integrator,
            )?;
            self.record(&rep);
            if rep.reached_end {
                self.time = target;
            } else {
                self.time += rep.elapsed;
            }
            if rep.elapsed <= 0.0 {
                stalls += 1;
                if stalls > STALL_LIMIT {
                    return Err(Error::StepUnderflow {
                        time: self.time,
                        state: self.state,
                    });
                }
            } else {
                stalls = 0;
            }
            if self.time >= self.next_jump.0 {
                self.jump();
            }
        }
        Ok(())
    }

    fn jump(&mut self) {
        self.time = self.time.max(self.next_jump.0);
        let mode = self.next_jump.1;
        self.state.mode = mode;
        let (dur, next) = sample_mode_holding(mode, &self.config.chain, &mut self.rng);
        self.next_jump = (self.time + dur, next);
        self.totals.events += 1;
    }

    fn record(&mut self, rep: &StepReport) {
        let t = &mut self.totals;
        let h = rep.elapsed;
        t.elapsed += h;
        for i in 0..4 {
            t.queue[i] += rep.queue_integral[i];
        }
        let pattern = match rep.queued {
            [false, false] => 0,
            [false, true] => 1,
            [true, false] => 2,
            [true, true] => 3,
        };
        t.pattern[pattern] += h;
        t.mode[self.state.mode.index()] += h;
        t.arrivals[0] += rep.arrivals[0];
        t.arrivals[1] += rep.arrivals[1];
        t.departures += rep.departures;
        if rep.event.is_some() {
            t.events += 1;
        }
    }

    pub fn stats(&self) -> TrajectoryStats {
        let t = &self.totals;
        let per = |x: f64| if t.elapsed > 0.0 { x / t.elapsed } else { 0.0 };
        TrajectoryStats {
            horizon: self.time,
            time_avg_q1: per(t.queue[0]),
            time_avg_q2: per(t.queue[1]),
            time_avg_q3: per(t.queue[2] + t.queue[3]),
            occupancy: Occupancy {
                p00: per(t.pattern[0]),
                p01: per(t.pattern[1]),
                p10: per(t.pattern[2]),
                p11: per(t.pattern[3]),
            },
            mode_occupancy: t.mode.map(per),
            mean_throughput: per(t.departures),
            mean_inflow: t.arrivals.map(per),
            event_count: t.events,
            final_state: self.state,
        }
    }

    /// Totals of arrivals and departures so far (veh).
    pub fn flow_totals(&self) -> (f64, f64) {
        (
            self.totals.arrivals[0] + self.totals.arrivals[1],
            self.totals.departures,
        )
    }
}

/// Runs `config` to its horizon.
pub fn simulate(config: &SimConfig) -> Result<TrajectoryStats> {
    let mut sim = Simulation::new(config)?;
    sim.advance_to(config.horizon)?;
    Ok(sim.stats())
}

/// Runs `config` and records the state every `interval` hours, including both ends.
pub fn simulate_with_path(config: &SimConfig, interval: f64) -> Result<(TrajectoryStats, Vec<PathSample>)> {
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Error::InvalidParameter {
            name: "output_interval",
            value: interval,
            expected: "a finite value > 0",
        });
    }
    let mut sim = Simulation::new(config)?;
    let mut path = Vec::new();
    let mut k = 0u64;
    loop {
        let t = (k as f64 * interval).min(config.horizon);
        sim.advance_to(t)?;
        path.push(PathSample {
            time: t,
            state: *sim.state(),
            flows: sim.flows(),
        });
        if t >= config.horizon {
            break;
        }
        k += 1;
    }
    Ok((sim.stats(), path))
}

/// Occupancy fractions of a finished run.
pub fn occupancy_fractions(stats: &TrajectoryStats) -> [f64; 4] {
    stats.occupancy.as_array()
}
