//! On/off inflow chains and their four-mode product.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint inflow mode. The first digit of the label is link 1, the second link 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Mode {
    #[cfg_attr(feature = "serde", serde(rename = "00"))]
    Off,
    #[cfg_attr(feature = "serde", serde(rename = "10"))]
    First,
    #[cfg_attr(feature = "serde", serde(rename = "01"))]
    Second,
    #[cfg_attr(feature = "serde", serde(rename = "11"))]
    Both,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Off, Mode::First, Mode::Second, Mode::Both];

    pub fn from_bits(first: bool, second: bool) -> Mode {
        match (first, second) {
            (false, false) => Mode::Off,
            (true, false) => Mode::First,
            (false, true) => Mode::Second,
            (true, true) => Mode::Both,
        }
    }

    /// Position in [`Mode::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Whether the inflow on `link` (0 or 1) is in its high state.
    pub fn is_on(self, link: usize) -> bool {
        match link {
            0 => matches!(self, Mode::First | Mode::Both),
            1 => matches!(self, Mode::Second | Mode::Both),
            _ => panic!("link index {link} out of range"),
        }
    }

    pub fn toggled(self, link: usize) -> Mode {
        let mut bits = [self.is_on(0), self.is_on(1)];
        bits[link] = !bits[link];
        Mode::from_bits(bits[0], bits[1])
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Off => "00",
            Mode::First => "10",
            Mode::Second => "01",
            Mode::Both => "11",
        }
    }

    pub fn from_label(label: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.label() == label)
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Two-state inflow: zero while off, `peak` while on.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct InflowChain {
    /// Inflow in the high state (veh/hr).
    pub peak: f64,
    /// Off to on rate (1/hr).
    pub on_rate: f64,
    /// On to off rate (1/hr).
    pub off_rate: f64,
}

impl InflowChain {
    pub fn new(peak: f64, on_rate: f64, off_rate: f64) -> Result<Self> {
        let chain = InflowChain {
            peak,
            on_rate,
            off_rate,
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        positive("a_plus", self.peak)?;
        positive("lambda", self.on_rate)?;
        positive("mu", self.off_rate)
    }

    /// Long-run fraction of time in the high state.
    pub fn on_fraction(&self) -> f64 {
        self.on_rate / (self.on_rate + self.off_rate)
    }

    pub fn mean_inflow(&self) -> f64 {
        self.on_fraction() * self.peak
    }

    /// Chain with the given mean inflow and rates; the peak is back-computed.
    pub fn with_mean(mean: f64, on_rate: f64, off_rate: f64) -> Result<Self> {
        positive("mean inflow", mean)?;
        positive("lambda", on_rate)?;
        positive("mu", off_rate)?;
        InflowChain::new(mean * (on_rate + off_rate) / on_rate, on_rate, off_rate)
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected: "a finite value > 0",
        })
    }
}

/// Product of the two independent link chains.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ProductChain {
    pub links: [InflowChain; 2],
}

impl ProductChain {
    pub fn new(first: InflowChain, second: InflowChain) -> Self {
        ProductChain { links: [first, second] }
    }

    pub fn validate(&self) -> Result<()> {
        self.links[0].validate()?;
        self.links[1].validate()
    }

    /// Transition rate between two modes; zero unless exactly one link flips.
    pub fn rate(&self, from: Mode, to: Mode) -> f64 {
        let flips = [from.is_on(0) != to.is_on(0), from.is_on(1) != to.is_on(1)];
        match flips {
            [true, false] => self.link_rate(0, from),
            [false, true] => self.link_rate(1, from),
            _ => 0.0,
        }
    }

    fn link_rate(&self, link: usize, from: Mode) -> f64 {
        let chain = &self.links[link];
        if from.is_on(link) {
            chain.off_rate
        } else {
            chain.on_rate
        }
    }

    /// The two reachable modes with their rates, link 1 first.
    pub fn transitions(&self, from: Mode) -> [(Mode, f64); 2] {
        [
            (from.toggled(0), self.link_rate(0, from)),
            (from.toggled(1), self.link_rate(1, from)),
        ]
    }

    pub fn exit_rate(&self, from: Mode) -> f64 {
        self.link_rate(0, from) + self.link_rate(1, from)
    }

    pub fn inflow(&self, mode: Mode) -> [f64; 2] {
        let level = |k: usize| if mode.is_on(k) { self.links[k].peak } else { 0.0 };
        [level(0), level(1)]
    }

    pub fn mean_inflow(&self) -> [f64; 2] {
        [self.links[0].mean_inflow(), self.links[1].mean_inflow()]
    }

    pub fn stationary(&self, mode: Mode) -> f64 {
        let p = |k: usize| {
            let on = self.links[k].on_fraction();
            if mode.is_on(k) {
                on
            } else {
                1.0 - on
            }
        };
        p(0) * p(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain() -> ProductChain {
        ProductChain::new(
            InflowChain::new(3000.0, 1.0, 1.5).unwrap(),
            InflowChain::new(2000.0, 2.0, 0.5).unwrap(),
        )
    }

    #[test]
    fn mean_inflow_examples() {
        assert_relative_eq!(InflowChain::new(3000.0, 1.0, 1.5).unwrap().mean_inflow(), 1200.0);
        assert_relative_eq!(InflowChain::new(700.0, 2.5, 2.5).unwrap().mean_inflow(), 350.0);
        assert_relative_eq!(InflowChain::new(1000.0, 3.0, 1.0).unwrap().mean_inflow(), 750.0);
    }

    #[test]
    fn with_mean_round_trips() {
        let c = InflowChain::with_mean(1200.0, 1.0, 1.5).unwrap();
        assert_relative_eq!(c.peak, 3000.0);
        assert_relative_eq!(c.mean_inflow(), 1200.0);
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(InflowChain::new(3000.0, 0.0, 1.0).is_err());
        assert!(InflowChain::new(-1.0, 1.0, 1.0).is_err());
        assert!(InflowChain::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn product_rates_follow_the_chain_diagram() {
        let p = chain();
        let (l1, m1, l2, m2) = (1.0, 1.5, 2.0, 0.5);
        assert_eq!(p.rate(Mode::Off, Mode::First), l1);
        assert_eq!(p.rate(Mode::First, Mode::Off), m1);
        assert_eq!(p.rate(Mode::Off, Mode::Second), l2);
        assert_eq!(p.rate(Mode::Second, Mode::Off), m2);
        assert_eq!(p.rate(Mode::First, Mode::Both), l2);
        assert_eq!(p.rate(Mode::Both, Mode::First), m2);
        assert_eq!(p.rate(Mode::Second, Mode::Both), l1);
        assert_eq!(p.rate(Mode::Both, Mode::Second), m1);
        assert_eq!(p.rate(Mode::Off, Mode::Both), 0.0);
        assert_eq!(p.rate(Mode::First, Mode::Second), 0.0);
        assert_eq!(p.rate(Mode::Both, Mode::Both), 0.0);
    }

    #[test]
    fn stationary_distribution_balances_flux() {
        let p = chain();
        let total: f64 = Mode::ALL.iter().map(|&m| p.stationary(m)).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-15);
        for i in Mode::ALL {
            let out = p.stationary(i) * p.exit_rate(i);
            let inflow: f64 = Mode::ALL.iter().map(|&j| p.stationary(j) * p.rate(j, i)).sum();
            assert_relative_eq!(out, inflow, max_relative = 1e-12);
        }
    }

    #[test]
    fn labels_round_trip() {
        for m in Mode::ALL {
            assert_eq!(Mode::from_label(m.label()), Some(m));
            assert_eq!(Mode::ALL[m.index()], m);
        }
        assert_eq!(Mode::from_label("2"), None);
        assert_eq!(Mode::First.toggled(1), Mode::Both);
    }
}
