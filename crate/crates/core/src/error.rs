use crate::model::NetworkState;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error(
        "standing assumption R4 < F3, R5 < F3, F3 < R4 + R5 violated \
         (F3 = {common}, R4 = {first}, R5 = {second})"
    )]
    StandingAssumption { common: f64, first: f64, second: f64 },

    #[error("link-3 queue {queue} exceeds its storage {storage}")]
    StorageExceeded { queue: f64, storage: f64 },

    #[error("state lies within {tolerance} veh of a flow-regime boundary")]
    NearBoundary { tolerance: f64 },

    #[error("this operation requires the {0} topology")]
    WrongTopology(&'static str),

    #[error("uniform capacity condition fails: a1/F1 + a2/F2 = {ratio} >= 1")]
    UniformConditionFails { ratio: f64 },

    #[error("priority phi1 = {phi1} is outside the merge-diverge stabilizing set")]
    NotStabilizing { phi1: f64 },

    #[error("drift constant c = {c} is not positive")]
    NonPositiveDriftConstant { c: f64 },

    #[error(
        "discharge bound {target} for link {link} is not attainable \
         (profile fixed point {fixed_point})"
    )]
    ThresholdUnattainable { link: usize, target: f64, fixed_point: f64 },

    #[error("inflow peak {peak} does not exceed the guaranteed discharge {discharge} on link {link}")]
    PeakBelowDischarge { link: usize, peak: f64, discharge: f64 },

    #[error("step-size underflow at t = {time} hr; state {state:?}")]
    StepUnderflow { time: f64, state: NetworkState },

    #[error("{0}")]
    Unsupported(&'static str),
}
