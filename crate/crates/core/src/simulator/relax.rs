//! Closed-form solutions for the common-link queues between regime changes.
//!
//! With constant merge inflows and a fixed discharge regime every per-class
//! queue on the common link obeys `x' = f - r * x / p(t)` where `p` is linear
//! in time: the total queue when capacity binds, or the other class's queue
//! when one downstream receiving flow binds.

#[allow(unused_imports)]
use num_traits::Float;

use crate::model::flows::discharge_envelope;
use crate::model::DivergeParams;

/// `ln(1 + u) / u`, continuous at 0.
fn ln1p_ratio(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - 0.5 * u
    } else {
        u.ln_1p() / u
    }
}

/// `(1 - exp(-z)) / z`, continuous at 0.
fn expm1_ratio(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// Solution of `x' = f - r x / (p0 + e t)` from `x(0) = x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Relaxation {
    pub x0: f64,
    pub p0: f64,
    pub e: f64,
    pub r: f64,
    pub f: f64,
}

impl Relaxation {
    pub fn p(&self, t: f64) -> f64 {
        self.p0 + self.e * t
    }

    /// First time the denominator reaches zero, if it does.
    pub fn p_zero(&self) -> Option<f64> {
        (self.e < 0.0).then(|| self.p0 / -self.e)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.x0;
        }
        let u = self.e * t / self.p0;
        if 1.0 + u <= 0.0 {
            return 0.0;
        }
        // tau = integral of 1/p over [0, t]
        let tau = t * ln1p_ratio(u) / self.p0;
        let h = (-self.r * tau).exp();
        let p = self.p(t);
        let k = self.r + self.e;
        let z = k * tau;
        let forced = if z.abs() <= 1.0 {
            p * tau * expm1_ratio(z)
        } else {
            (p - self.p0 * h) / k
        };
        (h * self.x0 + self.f * forced).max(0.0)
    }
}

/// Discharge regime: which term of `min{F3, R4/psi1, R5/psi2}` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Regime {
    /// Capacity binds.
    Capacity,
    /// Link 4 binds; class 1 drains at R4.
    First,
    /// Link 5 binds; class 2 drains at R5.
    Second,
}

/// Interval edges: `Second` for `psi <= low`, `First` for `psi >= high`.
pub(crate) fn regime_edges(d: &DivergeParams) -> (f64, f64) {
    let [r4, r5] = d.receiving;
    if d.capacity <= r4 + r5 {
        (1.0 - r5 / d.capacity, r4 / d.capacity)
    } else {
        let mid = r4 / (r4 + r5);
        (mid, mid)
    }
}

pub(crate) fn regime_at(psi: f64, d: &DivergeParams) -> Regime {
    let [r4, r5] = d.receiving;
    let first = if psi > 0.0 { r4 / psi } else { f64::INFINITY };
    let second = if psi < 1.0 { r5 / (1.0 - psi) } else { f64::INFINITY };
    if d.capacity <= first && d.capacity <= second {
        Regime::Capacity
    } else if first <= second {
        Regime::First
    } else {
        Regime::Second
    }
}

/// Common-link queues over one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LinkThree {
    /// Capacity binds; both classes relax against the total.
    Capacity([Relaxation; 2]),
    /// Class 1 drains at R4 (linear); class 2 relaxes against class 1.
    First { x0: f64, rate: f64, other: Relaxation },
    /// Class 2 drains at R5 (linear); class 1 relaxes against class 2.
    Second { x0: f64, rate: f64, other: Relaxation },
}

impl LinkThree {
    pub fn build(regime: Regime, x0: [f64; 2], merge: [f64; 2], d: &DivergeParams) -> LinkThree {
        let fin = merge[0] + merge[1];
        let total = x0[0] + x0[1];
        let [r4, r5] = d.receiving;
        match regime {
            Regime::Capacity => {
                let relax = |k: usize| Relaxation {
                    x0: x0[k],
                    p0: total,
                    e: fin - d.capacity,
                    r: d.capacity,
                    f: merge[k],
                };
                LinkThree::Capacity([relax(0), relax(1)])
            }
            Regime::First => {
                let rate = merge[0] - r4;
                LinkThree::First {
                    x0: x0[0],
                    rate,
                    other: Relaxation {
                        x0: x0[1],
                        p0: x0[0],
                        e: rate,
                        r: r4,
                        f: merge[1],
                    },
                }
            }
            Regime::Second => {
                let rate = merge[1] - r5;
                LinkThree::Second {
                    x0: x0[1],
                    rate,
                    other: Relaxation {
                        x0: x0[0],
                        p0: x0[1],
                        e: rate,
                        r: r5,
                        f: merge[0],
                    },
                }
            }
        }
    }

    pub fn at(&self, t: f64) -> [f64; 2] {
        match self {
            LinkThree::Capacity([a, b]) => [a.value(t), b.value(t)],
            LinkThree::First { x0, rate, other } => [(x0 + rate * t).max(0.0), other.value(t)],
            LinkThree::Second { x0, rate, other } => [other.value(t), (x0 + rate * t).max(0.0)],
        }
    }

    /// Time after which the closed form is no longer defined.
    pub fn limit(&self) -> f64 {
        let zero = match self {
            LinkThree::Capacity([a, _]) => a.p_zero(),
            LinkThree::First { other, .. } | LinkThree::Second { other, .. } => other.p_zero(),
        };
        zero.unwrap_or(f64::INFINITY)
    }

    /// Largest `r / p` over `[0, t]`; sets the quadrature resolution.
    pub fn stiffness(&self, t: f64) -> f64 {
        let rel = |r: &Relaxation| r.r / r.p0.min(r.p(t)).max(1e-12);
        match self {
            LinkThree::Capacity([a, _]) => rel(a),
            LinkThree::First { other, .. } | LinkThree::Second { other, .. } => rel(other),
        }
    }
}

/// Class-1 share of a common-link queue pair.
pub(crate) fn share(x: [f64; 2]) -> f64 {
    let total = x[0] + x[1];
    if total > 0.0 {
        x[0] / total
    } else {
        0.5
    }
}

/// Total discharge at a queue pair.
pub(crate) fn discharge(x: [f64; 2], d: &DivergeParams) -> f64 {
    discharge_envelope(share(x), d)
}

const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Composite four-point Gauss-Legendre rule over `[0, t]` with `panels` panels.
pub(crate) fn integrate<const N: usize>(t: f64, panels: usize, f: impl Fn(f64) -> [f64; N]) -> [f64; N] {
    let mut acc = [0.0; N];
    let width = t / panels as f64;
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * width;
        for (node, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            let v = f(mid + 0.5 * width * node);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += 0.5 * width * weight * x;
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Fine fixed-step RK4 for `x' = f - r x / p(t)`.
    fn reference(rel: &Relaxation, t: f64) -> f64 {
        let n = 200_000;
        let h = t / n as f64;
        let rhs = |s: f64, x: f64| rel.f - rel.r * x / rel.p(s);
        let mut x = rel.x0;
        for i in 0..n {
            let s = i as f64 * h;
            let k1 = rhs(s, x);
            let k2 = rhs(s + h / 2.0, x + h / 2.0 * k1);
            let k3 = rhs(s + h / 2.0, x + h / 2.0 * k2);
            let k4 = rhs(s + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    }

    #[test]
    fn relaxation_matches_reference_integration() {
        let cases = [
            Relaxation {
                x0: 10.0,
                p0: 25.0,
                e: 400.0,
                r: 2600.0,
                f: 1300.0,
            },
            Relaxation {
                x0: 10.0,
                p0: 25.0,
                e: -300.0,
                r: 2600.0,
                f: 900.0,
            },
            Relaxation {
                x0: 3.0,
                p0: 25.0,
                e: 0.0,
                r: 2600.0,
                f: 1300.0,
            },
            // r + e = 0
            Relaxation {
                x0: 3.0,
                p0: 5.0,
                e: -1400.0,
                r: 1400.0,
                f: 700.0,
            },
            Relaxation {
                x0: 3.0,
                p0: 5.0,
                e: -1400.0 + 1e-7,
                r: 1400.0,
                f: 700.0,
            },
            // e = r
            Relaxation {
                x0: 3.0,
                p0: 5.0,
                e: 1400.0,
                r: 1400.0,
                f: 700.0,
            },
        ];
        for rel in cases {
            let t = match rel.p_zero() {
                Some(z) => 0.5 * z,
                None => 0.02,
            };
            assert_relative_eq!(rel.value(t), reference(&rel, t), max_relative = 1e-9);
        }
    }

    #[test]
    fn relaxation_starts_at_initial_value_and_stays_nonnegative() {
        let rel = Relaxation {
            x0: 4.0,
            p0: 10.0,
            e: -100.0,
            r: 1400.0,
            f: 0.0,
        };
        assert_eq!(rel.value(0.0), 4.0);
        assert_eq!(rel.value(0.1), 0.0);
        assert!(rel.value(0.0999) >= 0.0);
    }

    #[test]
    fn capacity_regime_total_is_linear() {
        let d = DivergeParams::new(2600.0, 40.0, [1400.0, 1400.0]).unwrap();
        let l = LinkThree::build(Regime::Capacity, [12.0, 18.0], [1200.0, 1500.0], &d);
        for t in [0.001, 0.005, 0.01] {
            let [a, b] = l.at(t);
            assert_relative_eq!(a + b, 30.0 + 100.0 * t, max_relative = 1e-12);
        }
    }

    #[test]
    fn regimes_partition_the_share_axis() {
        let d = DivergeParams::new(2600.0, 40.0, [1400.0, 1400.0]).unwrap();
        let (lo, hi) = regime_edges(&d);
        assert_relative_eq!(lo, 1.0 - 1400.0 / 2600.0);
        assert_relative_eq!(hi, 1400.0 / 2600.0);
        assert_eq!(regime_at(0.2, &d), Regime::Second);
        assert_eq!(regime_at(0.5, &d), Regime::Capacity);
        assert_eq!(regime_at(0.8, &d), Regime::First);
        let wide = DivergeParams::new(3000.0, 40.0, [1400.0, 1400.0]).unwrap();
        assert_eq!(regime_edges(&wide), (0.5, 0.5));
        assert_eq!(regime_at(0.49, &wide), Regime::Second);
        assert_eq!(regime_at(0.51, &wide), Regime::First);
    }

    #[test]
    fn gauss_rule_is_exact_for_cubics() {
        let [v] = integrate(2.0, 1, |t| [t * t * t - t]);
        assert_relative_eq!(v, 2.0, max_relative = 1e-14);
    }
}
