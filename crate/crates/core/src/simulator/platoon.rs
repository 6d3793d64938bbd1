//! Platoon arrivals: exponential gaps at a background flow alternating with
//! exponential platoons at the platoon flow.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::InflowChain;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PlatoonProcess {
    /// Rate of the exponential gaps between platoons (1/hr).
    pub headway_rate: f64,
    /// Rate of the exponential platoon durations (1/hr).
    pub length_rate: f64,
    /// Inflow while a platoon passes (veh/hr).
    pub platoon_flow: f64,
    /// Inflow between platoons (veh/hr).
    pub background_flow: f64,
}

impl PlatoonProcess {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("headway_rate", self.headway_rate), ("length_rate", self.length_rate)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    expected: "a finite rate > 0",
                });
            }
        }
        if !(self.background_flow >= 0.0 && self.platoon_flow > self.background_flow && self.platoon_flow.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "platoon_flow",
                value: self.platoon_flow,
                expected: "platoon_flow > background_flow >= 0",
            });
        }
        Ok(())
    }

    /// On/off chain with the same switching law. The background flow is not
    /// part of the chain; it only shifts the low level of generated paths.
    pub fn equivalent_chain(&self) -> Result<InflowChain> {
        InflowChain::new(self.platoon_flow, self.headway_rate, self.length_rate)
    }

    /// Long-run mean inflow including the background.
    pub fn mean_inflow(&self) -> f64 {
        let high = self.headway_rate / (self.headway_rate + self.length_rate);
        self.background_flow + high * (self.platoon_flow - self.background_flow)
    }
}

/// Piecewise-constant inflow over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InflowPath {
    /// Segment start times; the first is 0.
    pub starts: Vec<f64>,
    pub levels: Vec<f64>,
    pub horizon: f64,
}

impl InflowPath {
    fn ends(&self) -> impl Iterator<Item = f64> + '_ {
        self.starts
            .iter()
            .skip(1)
            .copied()
            .chain(core::iter::once(self.horizon))
    }

    /// Time-averaged inflow.
    pub fn mean(&self) -> f64 {
        let total: f64 = self
            .starts
            .iter()
            .zip(self.ends())
            .zip(&self.levels)
            .map(|((a, b), v)| (b - a) * v)
            .sum();
        total / self.horizon
    }

    /// Fraction of time at or above `level`.
    pub fn fraction_at_least(&self, level: f64) -> f64 {
        let total: f64 = self
            .starts
            .iter()
            .zip(self.ends())
            .zip(&self.levels)
            .filter(|(_, v)| **v >= level)
            .map(|((a, b), _)| b - a)
            .sum();
        total / self.horizon
    }
}

/// Generates an inflow path over `horizon` hours, starting from the
/// stationary state, and returns it with the equivalent chain.
pub fn platoon_process<R: Rng + ?Sized>(
    p: &PlatoonProcess,
    horizon: f64,
    rng: &mut R,
) -> Result<(InflowPath, InflowChain)> {
    p.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
            expected: "a finite value > 0",
        });
    }
    let chain = p.equivalent_chain()?;
    let gap = Exp::new(p.headway_rate).expect("validated rate");
    let platoon = Exp::new(p.length_rate).expect("validated rate");
    let mut high = rng.random::<f64>() < chain.on_fraction();
    let mut t = 0.0;
    let mut starts = Vec::new();
    let mut levels = Vec::new();
    while t < horizon {
        starts.push(t);
        levels.push(if high { p.platoon_flow } else { p.background_flow });
        t += if high { platoon.sample(rng) } else { gap.sample(rng) };
        high = !high;
    }
    Ok((
        InflowPath {
            starts,
            levels,
            horizon,
        },
        chain,
    ))
}
