//! Monte Carlo stability estimate from the growth of the running average of
//! the upstream queues.
//!
//! Boundedness of a long-run average cannot be decided from a finite run, so
//! the verdict is a heuristic: the ensemble mean of the running average
//! `A(t) = (1/t) * integral of (Q1 + Q2)` is fitted by a line over the second
//! half of the horizon. A slope above the threshold means growth; a small
//! slope together with a small change of `A` over that half means settled.
//!
//! Over the second half, `A` changes by about one half under linear growth
//! and by about 0.29 under `sqrt(t)` growth. A settled average moves by the
//! transient time over the horizon plus ensemble noise, up to about 0.08
//! for the 96% loaded cases in the tests. The default `avg_tol` of 0.15
//! sits between the two.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{SimConfig, Simulation};
use crate::error::{Error, Result};
use crate::model::NetworkState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EmpiricalVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EstimatorOptions {
    pub ensemble: usize,
    /// Length of each run (hr).
    pub horizon: f64,
    /// Number of equally spaced points at which `A(t)` is recorded.
    pub checkpoints: usize,
    /// Growth threshold on `A` (veh/hr). `None` means 1% of the summed mean inflows.
    pub slope_threshold: Option<f64>,
    /// Largest relative change of `A` over the second half for a stable verdict.
    pub avg_tol: f64,
    /// Averages below this many vehicles count as this value when forming the
    /// relative change, so a draining transient does not read as unsettled.
    pub avg_floor: f64,
    /// Start odd-numbered runs from this state instead of the configured one.
    pub perturbed_initial: Option<NetworkState>,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            ensemble: 8,
            horizon: 5000.0,
            checkpoints: 100,
            slope_threshold: None,
            avg_tol: 0.15,
            avg_floor: 1.0,
            perturbed_initial: None,
        }
    }
}

impl EstimatorOptions {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble == 0 {
            return Err(Error::InvalidParameter {
                name: "ensemble",
                value: 0.0,
                expected: "at least one run",
            });
        }
        if self.checkpoints < 4 {
            return Err(Error::InvalidParameter {
                name: "checkpoints",
                value: self.checkpoints as f64,
                expected: "at least 4",
            });
        }
        for (name, v) in [
            ("horizon", self.horizon),
            ("avg_tol", self.avg_tol),
            ("avg_floor", self.avg_floor),
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

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StabilityEstimate {
    pub verdict: EmpiricalVerdict,
    /// Fitted growth rate of the ensemble-mean running average (veh/hr).
    pub slope: f64,
    pub slope_threshold: f64,
    /// Relative change of the running average over the second half.
    pub relative_change: f64,
    /// Largest ensemble-mean running average over the second half (veh).
    pub bound_estimate: f64,
    pub runs: usize,
    pub horizon: f64,
}

/// Running averages of `Q1 + Q2` at the checkpoints for run `index`.
pub fn ensemble_member(config: &SimConfig, opts: &EstimatorOptions, index: usize) -> Result<Vec<f64>> {
    let mut sim = match opts.perturbed_initial {
        Some(state) if index % 2 == 1 => Simulation::from_state(config, index as u64, state)?,
        _ => Simulation::with_stream(config, index as u64)?,
    };
    let mut out = Vec::with_capacity(opts.checkpoints);
    for j in 1..=opts.checkpoints {
        let t = opts.horizon * j as f64 / opts.checkpoints as f64;
        sim.advance_to(t)?;
        out.push(sim.upstream_integral() / t);
    }
    Ok(out)
}

/// Combines member curves in index order.
pub fn reduce_ensemble(config: &SimConfig, opts: &EstimatorOptions, members: &[Vec<f64>]) -> StabilityEstimate {
    let k = opts.checkpoints;
    let mut mean = alloc::vec![0.0; k];
    for m in members {
        for (a, v) in mean.iter_mut().zip(m) {
            *a += v;
        }
    }
    for a in &mut mean {
        *a /= members.len() as f64;
    }
    let times: Vec<f64> = (1..=k).map(|j| opts.horizon * j as f64 / k as f64).collect();
    let half = k / 2;
    let (ts, ys) = (&times[half - 1..], &mean[half - 1..]);
    let slope = least_squares_slope(ts, ys);
    let threshold = opts.slope_threshold.unwrap_or_else(|| {
        let [a1, a2] = config.constant_inflow.unwrap_or(config.chain.mean_inflow());
        0.01 * (a1 + a2)
    });
    let last = mean[k - 1];
    let relative_change = (last - mean[half - 1]).abs() / last.abs().max(opts.avg_floor);
    let bound_estimate = ys.iter().copied().fold(0.0, f64::max);
    let verdict = if slope > threshold {
        EmpiricalVerdict::Unstable
    } else if slope.abs() <= threshold && relative_change < opts.avg_tol {
        EmpiricalVerdict::Stable
    } else {
        EmpiricalVerdict::Inconclusive
    };
    StabilityEstimate {
        verdict,
        slope,
        slope_threshold: threshold,
        relative_change,
        bound_estimate,
        runs: members.len(),
        horizon: opts.horizon,
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the ensemble sequentially and returns the verdict.
pub fn estimate_stability(config: &SimConfig, opts: &EstimatorOptions) -> Result<StabilityEstimate> {
    opts.validate()?;
    let members = (0..opts.ensemble)
        .map(|i| ensemble_member(config, opts, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce_ensemble(config, opts, &members))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InflowChain, MergeParams, Mode, Network, PriorityVector, ProductChain};
    use approx::assert_relative_eq;

    fn config(r3: f64, phi: f64) -> SimConfig {
        let c = InflowChain::new(3000.0, 1.0, 1.5).unwrap();
        let net =
            Network::merge_only(MergeParams::new([1500.0, 1500.0], r3, PriorityVector::new(phi).unwrap()).unwrap());
        SimConfig::new(net, ProductChain::new(c, c), 1.0, NetworkState::empty(Mode::Off), 42)
    }

    #[test]
    fn slope_of_a_line() {
        assert_relative_eq!(least_squares_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), 2.0);
    }

    #[test]
    fn priority_inside_the_stabilizing_set_is_stable() {
        let opts = EstimatorOptions {
            ensemble: 4,
            horizon: 2000.0,
            ..EstimatorOptions::default()
        };
        let e = estimate_stability(&config(2500.0, 0.5), &opts).unwrap();
        assert_eq!(e.verdict, EmpiricalVerdict::Stable, "{e:?}");
    }

    #[test]
    fn priority_outside_the_necessary_set_is_unstable() {
        let opts = EstimatorOptions {
            ensemble: 4,
            horizon: 2000.0,
            ..EstimatorOptions::default()
        };
        let e = estimate_stability(&config(2500.0, 0.1), &opts).unwrap();
        assert_eq!(e.verdict, EmpiricalVerdict::Unstable, "{e:?}");
        assert!(e.slope > e.slope_threshold);
    }

    #[test]
    fn zero_inflow_drains_to_a_stable_verdict() {
        let mut cfg = config(2500.0, 0.5);
        cfg.constant_inflow = Some([0.0, 0.0]);
        cfg.initial_state = NetworkState::new(Mode::Off, [50.0, 30.0], [0.0; 2]);
        let opts = EstimatorOptions {
            ensemble: 2,
            horizon: 1000.0,
            slope_threshold: Some(1.0),
            ..EstimatorOptions::default()
        };
        let e = estimate_stability(&cfg, &opts).unwrap();
        assert_eq!(e.verdict, EmpiricalVerdict::Stable, "{e:?}");
        // Transient area 50^2/(2*1500) + ... spread over the horizon.
        assert!(e.bound_estimate < 1.0);
    }

    #[test]
    fn rejects_empty_ensemble() {
        let opts = EstimatorOptions {
            ensemble: 0,
            ..EstimatorOptions::default()
        };
        assert!(estimate_stability(&config(2500.0, 0.5), &opts).is_err());
    }
}
