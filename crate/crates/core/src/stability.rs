//! Closed-form stability conditions on the priority split.
//!
//! Three sets of class-1 priorities are computed from the mean inflows:
//! `Phi0` (necessary for bounded upstream queues), `Phi1` (sufficient for the
//! merge junction alone) and `Phi2` (sufficient for the merge-diverge network).
//! All inequalities are applied exactly, without tolerance.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PriorityVector;

/// `x / y` with `x / 0 = +inf` for `x > 0` and `0 / 0 = 0`.
fn ratio(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        if x == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        x / y
    }
}

/// `a1 < F1`, `a2 < F2` and `a1 + a2 < R3`.
pub fn check_existence_merge(mean: [f64; 2], capacity: [f64; 2], receiving: f64) -> bool {
    mean[0] < capacity[0] && mean[1] < capacity[1] && mean[0] + mean[1] < receiving
}

/// `a1/F1 + a2/F2 < 1`: every split is stabilizing.
pub fn check_uniform(mean: [f64; 2], capacity: [f64; 2]) -> bool {
    mean[0] / capacity[0] + mean[1] / capacity[1] < 1.0
}

/// `phi_k > a_k / R3` for both classes.
pub fn in_phi1(phi: PriorityVector, mean: [f64; 2], receiving: f64) -> bool {
    phi.first() > mean[0] / receiving && phi.second() > mean[1] / receiving
}

/// `a_k < min{F_k, phi_k R3}` for both classes.
pub fn merge_sufficient(phi: PriorityVector, mean: [f64; 2], capacity: [f64; 2], receiving: f64) -> bool {
    let phi = phi.as_array();
    (0..2).all(|k| mean[k] < capacity[k].min(phi[k] * receiving))
}

/// Left-hand side of the necessary condition:
/// `a1/F1 + a2/F2 + (1 - phi1 R/F1 - phi2 R/F2) * min{a1/(phi1 R), a2/(phi2 R)}`.
pub fn phi0_lhs(phi: PriorityVector, mean: [f64; 2], capacity: [f64; 2], receiving: f64) -> f64 {
    let p = phi.as_array();
    let base = mean[0] / capacity[0] + mean[1] / capacity[1];
    let slack = 1.0 - p[0] * receiving / capacity[0] - p[1] * receiving / capacity[1];
    let m = ratio(mean[0], p[0] * receiving).min(ratio(mean[1], p[1] * receiving));
    if m == 0.0 {
        base
    } else {
        base + slack * m
    }
}

/// Necessary condition for bounded upstream queues (`<=`, as a closed set).
pub fn in_phi0(phi: PriorityVector, mean: [f64; 2], capacity: [f64; 2], receiving: f64) -> bool {
    phi0_lhs(phi, mean, capacity, receiving) <= 1.0
}

/// `a1 < min{F1, R4}`, `a2 < min{F2, R5}` and `a1 + a2 < F3`.
pub fn check_existence_network(mean: [f64; 2], capacity: [f64; 2], common: f64, downstream: [f64; 2]) -> bool {
    mean[0] < capacity[0].min(downstream[0]) && mean[1] < capacity[1].min(downstream[1]) && mean[0] + mean[1] < common
}

/// Long-run discharge guaranteed to class `k` in the merge-diverge network:
/// `min{F_k, phi_k F3, R_k', (phi_k/phi_other) R_other'}` where `R_k'` is the
/// receiving flow of the class's own downstream link.
pub fn guaranteed_discharge(
    k: usize,
    phi: PriorityVector,
    capacity: [f64; 2],
    common: f64,
    downstream: [f64; 2],
) -> f64 {
    let p = phi.as_array();
    capacity[k]
        .min(p[k] * common)
        .min(downstream[k])
        .min(ratio(p[k], p[1 - k]) * downstream[1 - k])
}

/// `a_k` below the guaranteed discharge of both classes.
pub fn in_phi2(phi: PriorityVector, mean: [f64; 2], capacity: [f64; 2], common: f64, downstream: [f64; 2]) -> bool {
    (0..2).all(|k| mean[k] < guaranteed_discharge(k, phi, capacity, common, downstream))
}

/// Region of a priority split, ordered from worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum StabilityVerdict {
    #[cfg_attr(feature = "serde", serde(rename = "unstable"))]
    Unstable,
    #[cfg_attr(feature = "serde", serde(rename = "unknown"))]
    Unknown,
    #[cfg_attr(feature = "serde", serde(rename = "merge stable"))]
    MergeStable,
    #[cfg_attr(feature = "serde", serde(rename = "merge-diverge stable"))]
    MergeDivergeStable,
}

impl StabilityVerdict {
    pub fn label(self) -> &'static str {
        match self {
            StabilityVerdict::Unstable => "unstable",
            StabilityVerdict::Unknown => "unknown",
            StabilityVerdict::MergeStable => "merge stable",
            StabilityVerdict::MergeDivergeStable => "merge-diverge stable",
        }
    }

    /// Verdicts that guarantee bounded queues.
    pub fn is_stable(self) -> bool {
        self >= StabilityVerdict::MergeStable
    }
}

impl core::fmt::Display for StabilityVerdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Parameters that stay fixed across a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Template {
    pub mean_inflow: [f64; 2],
    /// F1, F2.
    pub capacity: [f64; 2],
    /// R4, R5.
    pub downstream: [f64; 2],
}

impl Template {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("mean_inflow[0]", self.mean_inflow[0]),
            ("mean_inflow[1]", self.mean_inflow[1]),
            ("F1", self.capacity[0]),
            ("F2", self.capacity[1]),
            ("R4", self.downstream[0]),
            ("R5", self.downstream[1]),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    expected: "a finite value > 0",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Classification {
    pub verdict: StabilityVerdict,
    pub in_phi0: bool,
    pub in_phi1: bool,
    pub in_phi2: bool,
    pub existence_merge: bool,
    pub existence_network: bool,
    pub uniform: bool,
}

/// Classifies a split in the merge-diverge network with common-link capacity
/// `common`. The merge-junction sets use `common` in place of R3, since the
/// common link cannot discharge faster than its capacity in the long run.
pub fn classify(phi: PriorityVector, t: &Template, common: f64) -> Classification {
    let existence_merge = check_existence_merge(t.mean_inflow, t.capacity, common);
    let existence_network = check_existence_network(t.mean_inflow, t.capacity, common, t.downstream);
    let uniform = check_uniform(t.mean_inflow, t.capacity);
    let phi0 = in_phi0(phi, t.mean_inflow, t.capacity, common);
    let phi1 = in_phi1(phi, t.mean_inflow, common);
    let phi2 = in_phi2(phi, t.mean_inflow, t.capacity, common, t.downstream);
    let merge_ok = existence_merge && (merge_sufficient(phi, t.mean_inflow, t.capacity, common) || uniform);
    let verdict = if phi2 && existence_network {
        StabilityVerdict::MergeDivergeStable
    } else if merge_ok {
        StabilityVerdict::MergeStable
    } else if phi0 {
        StabilityVerdict::Unknown
    } else {
        StabilityVerdict::Unstable
    };
    Classification {
        verdict,
        in_phi0: phi0,
        in_phi1: phi1,
        in_phi2: phi2,
        existence_merge,
        existence_network,
        uniform,
    }
}

/// Classifies a split for the merge junction alone; `Phi2` does not apply.
pub fn classify_merge(phi: PriorityVector, mean: [f64; 2], capacity: [f64; 2], receiving: f64) -> Classification {
    let existence_merge = check_existence_merge(mean, capacity, receiving);
    let uniform = check_uniform(mean, capacity);
    let phi0 = in_phi0(phi, mean, capacity, receiving);
    let phi1 = in_phi1(phi, mean, receiving);
    let verdict = if existence_merge && (merge_sufficient(phi, mean, capacity, receiving) || uniform) {
        StabilityVerdict::MergeStable
    } else if phi0 {
        StabilityVerdict::Unknown
    } else {
        StabilityVerdict::Unstable
    };
    Classification {
        verdict,
        in_phi0: phi0,
        in_phi1: phi1,
        in_phi2: false,
        existence_merge,
        existence_network: false,
        uniform,
    }
}

/// `n + 1` points from `lo` to `hi`, computed as `lo + (hi - lo) * i / n` so
/// that round grid values are exact.
pub fn grid_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepGrid {
    pub common_capacity: Vec<f64>,
    pub phi1: Vec<f64>,
    pub template: Template,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && !v.is_empty();
        if !ascending(&self.common_capacity) || self.common_capacity.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "sweep.F3",
                value: self.common_capacity.first().copied().unwrap_or(f64::NAN),
                expected: "non-empty, strictly ascending, positive values",
            });
        }
        if !ascending(&self.phi1) || self.phi1.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter {
                name: "sweep.phi1",
                value: self.phi1.first().copied().unwrap_or(f64::NAN),
                expected: "non-empty, strictly ascending values in [0, 1]",
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.common_capacity.len() * self.phi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell `i` in row-major order (F3 outer, phi1 inner).
    pub fn cell(&self, i: usize) -> SweepCell {
        let n = self.phi1.len();
        let (f3, phi1) = (self.common_capacity[i / n], self.phi1[i % n]);
        let c = classify(PriorityVector::new(phi1).expect("validated"), &self.template, f3);
        SweepCell {
            common_capacity: f3,
            phi1,
            in_phi0: c.in_phi0,
            in_phi1: c.in_phi1,
            in_phi2: c.in_phi2,
            verdict: c.verdict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepCell {
    pub common_capacity: f64,
    pub phi1: f64,
    pub in_phi0: bool,
    pub in_phi1: bool,
    pub in_phi2: bool,
    pub verdict: StabilityVerdict,
}

/// Classifies every cell, F3 outer and phi1 inner.
pub fn sweep(grid: &SweepGrid) -> Result<Vec<SweepCell>> {
    grid.validate()?;
    Ok((0..grid.len()).map(|i| grid.cell(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const A: [f64; 2] = [1200.0, 1200.0];
    const F: [f64; 2] = [1500.0, 1500.0];
    const R: [f64; 2] = [1400.0, 1400.0];

    fn phi(p: f64) -> PriorityVector {
        PriorityVector::new(p).unwrap()
    }

    fn table() -> Template {
        Template {
            mean_inflow: A,
            capacity: F,
            downstream: R,
        }
    }

    #[test]
    fn existence_merge_examples() {
        assert!(check_existence_merge(A, F, 2500.0));
        assert!(!check_existence_merge(A, F, 2400.0));
        assert!(!check_existence_merge([1500.0, 100.0], F, 5000.0));
    }

    #[test]
    fn uniform_examples() {
        assert!(check_uniform([500.0, 500.0], F));
        assert!(!check_uniform(A, F));
        assert!(check_uniform([0.0, 0.0], F));
    }

    #[test]
    fn phi1_examples() {
        assert!(in_phi1(phi(0.5), A, 2500.0));
        assert!(!in_phi1(phi(0.47), A, 2500.0));
        for i in 0..=100 {
            assert!(!in_phi1(phi(i as f64 / 100.0), A, 2400.0));
        }
    }

    #[test]
    fn merge_sufficient_examples() {
        assert!(merge_sufficient(phi(0.5), A, F, 2500.0));
        assert!(!merge_sufficient(phi(0.48), A, F, 2500.0));
    }

    #[test]
    fn phi0_examples() {
        assert_relative_eq!(phi0_lhs(phi(0.5), A, F, 2500.0), 0.96, max_relative = 1e-12);
        assert!(in_phi0(phi(0.5), A, F, 2500.0));
        assert_relative_eq!(
            phi0_lhs(phi(0.1), A, F, 2500.0),
            1.6 - (2.0 / 3.0) * 0.8 / 1.5,
            max_relative = 1e-12
        );
        assert!(!in_phi0(phi(0.1), A, F, 2500.0));
    }

    #[test]
    fn phi0_interval_by_grid_scan() {
        // Boundary solves 1.6 - (2/3) * 1200 / (2500 * phi) = 1 on the larger side.
        let edge = 1200.0 / (2500.0 * 0.9);
        let members: Vec<f64> = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .filter(|&p| in_phi0(phi(p), A, F, 2500.0))
            .collect();
        assert_relative_eq!(members[0], 1.0 - edge, epsilon = 1e-4);
        assert_relative_eq!(*members.last().unwrap(), edge, epsilon = 1e-4);
    }

    #[test]
    fn phi0_handles_zero_priority() {
        assert!(phi0_lhs(phi(0.0), A, F, 2500.0).is_finite());
        assert!(!in_phi0(phi(0.0), A, F, 2500.0));
        assert!(in_phi0(phi(0.0), [0.0, 300.0], F, 2500.0));
    }

    #[test]
    fn existence_network_examples() {
        assert!(check_existence_network(A, F, 2500.0, R));
        assert!(!check_existence_network(A, F, 2400.0, R));
        assert!(!check_existence_network([1400.0, 100.0], F, 5000.0, R));
    }

    #[test]
    fn phi2_examples() {
        assert!(in_phi2(phi(0.5), A, F, 3000.0, R));
        assert_relative_eq!(guaranteed_discharge(0, phi(0.45), F, 3000.0, R), 0.45 / 0.55 * 1400.0);
        assert!(!in_phi2(phi(0.45), A, F, 3000.0, R));
        for f3 in [2600.0, 2700.0, 3000.0, 3500.0] {
            for i in 0..=1000 {
                let p = i as f64 / 1000.0;
                let inside = p > 6.0 / 13.0 && p < 7.0 / 13.0;
                assert_eq!(in_phi2(phi(p), A, F, f3, R), inside, "F3 = {f3}, phi1 = {p}");
            }
        }
    }

    #[test]
    fn classify_examples() {
        let t = table();
        assert_eq!(
            classify(phi(0.5), &t, 3000.0).verdict,
            StabilityVerdict::MergeDivergeStable
        );
        assert_eq!(classify(phi(0.45), &t, 3000.0).verdict, StabilityVerdict::MergeStable);
        assert_eq!(classify(phi(0.53), &t, 2500.0).verdict, StabilityVerdict::Unknown);
        assert_eq!(classify(phi(0.1), &t, 2500.0).verdict, StabilityVerdict::Unstable);
        let c = classify(phi(0.5), &t, 3000.0);
        assert!(c.in_phi0 && c.in_phi1 && c.in_phi2);
    }

    #[test]
    fn verdict_labels_and_order() {
        assert_eq!(StabilityVerdict::MergeDivergeStable.label(), "merge-diverge stable");
        assert!(StabilityVerdict::Unstable < StabilityVerdict::Unknown);
        assert!(StabilityVerdict::MergeStable.is_stable());
        assert!(!StabilityVerdict::Unknown.is_stable());
    }

    #[test]
    fn sweep_rows_are_monotone_in_capacity() {
        let grid = SweepGrid {
            common_capacity: grid_points(2000.0, 3500.0, 15),
            phi1: grid_points(0.0, 1.0, 100),
            template: table(),
        };
        let cells = sweep(&grid).unwrap();
        let n = grid.phi1.len();
        for j in 0..n {
            for i in 1..grid.common_capacity.len() {
                assert!(cells[i * n + j].verdict >= cells[(i - 1) * n + j].verdict);
            }
        }
        for c in &cells {
            if c.common_capacity <= 2400.0 {
                assert!(!c.verdict.is_stable());
            }
        }
    }

    #[test]
    fn grid_points_are_exact() {
        let g = grid_points(0.0, 1.0, 1000);
        assert_eq!(g[400], 0.4);
        assert_eq!(g[1000], 1.0);
        assert_eq!(grid_points(2000.0, 3500.0, 15)[6], 2600.0);
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        let grid = SweepGrid {
            common_capacity: alloc::vec![3000.0, 2000.0],
            phi1: alloc::vec![0.5],
            template: table(),
        };
        assert!(sweep(&grid).is_err());
    }

    #[test]
    fn merge_only_classification() {
        let p = |x| PriorityVector::new(x).unwrap();
        let c = classify_merge(p(0.5), [1200.0, 1200.0], [1500.0, 1500.0], 2500.0);
        assert_eq!(c.verdict, StabilityVerdict::MergeStable);
        assert!(!c.in_phi2);
        let c = classify_merge(p(0.53), [1200.0, 1200.0], [1500.0, 1500.0], 2500.0);
        assert_eq!(c.verdict, StabilityVerdict::Unknown);
        let c = classify_merge(p(0.1), [1200.0, 1200.0], [1500.0, 1500.0], 2500.0);
        assert_eq!(c.verdict, StabilityVerdict::Unstable);
    }
}
