//! Ex-ante clearing price when only the distribution of advertiser values and
//! the mean budget are known.
//!
//! Expected spend at price `p` is `m * E(B) * (1 - F(p))`, non-increasing in
//! `p`, while the spend the supply can absorb, `p * S`, increases. The
//! clearing price is where the two meet.

use serde::{Deserialize, Serialize};

use crate::model::Supply;

const BISECTION_TOLERANCE: f64 = 1e-9;
const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ExAnteError {
    #[error("demand undefined at non-positive price {0}")]
    NonPositivePrice(f64),
    #[error("degenerate supply: clearing price is undefined when supply is zero")]
    DegenerateSupply,
    #[error("invalid value support [{lo}, {hi}]")]
    InvalidSupport { lo: f64, hi: f64 },
    #[error("bisection did not reach tolerance within {0} iterations")]
    NoConvergence(usize),
}

/// Distribution of advertiser values. Implement this to plug in any monotone
/// CDF with bounded support.
pub trait ValueDistribution {
    /// Non-decreasing, 0 below the support and 1 at its upper end.
    fn cdf(&self, x: f64) -> f64;
    /// `(lower, upper)` bounds of the support.
    fn support(&self) -> (f64, f64);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uniform {
    lo: f64,
    hi: f64,
}

impl Uniform {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ExAnteError> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(ExAnteError::InvalidSupport { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl ValueDistribution for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            (x - self.lo) / (self.hi - self.lo)
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExAnteMarket<D> {
    pub advertisers: usize,
    pub expected_budget: f64,
    pub value_dist: D,
    pub supply: Supply,
}

impl<D: ValueDistribution> ExAnteMarket<D> {
    fn expected_spend(&self, price: f64) -> f64 {
        self.advertisers as f64 * self.expected_budget * (1.0 - self.value_dist.cdf(price))
    }
}

/// `m * E(B) * (1 - F(p)) / p`.
pub fn expected_demand<D: ValueDistribution>(
    market: &ExAnteMarket<D>,
    price: f64,
) -> Result<f64, ExAnteError> {
    if price <= 0.0 || price.is_nan() {
        return Err(ExAnteError::NonPositivePrice(price));
    }
    Ok(market.expected_spend(price) / price)
}

/// Bisection root of `p * S - m * E(B) * (1 - F(p))` on `[0, upper support]`.
pub fn clearing_price_numeric<D: ValueDistribution>(
    market: &ExAnteMarket<D>,
) -> Result<f64, ExAnteError> {
    let s = market.supply.total();
    if s <= 0.0 {
        return Err(ExAnteError::DegenerateSupply);
    }
    if market.advertisers == 0 || market.expected_budget <= 0.0 {
        return Ok(0.0);
    }
    let excess = |p: f64| p * s - market.expected_spend(p);

    let (mut lo, mut hi) = (0.0, market.value_dist.support().1);
    if excess(lo) >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_TOLERANCE {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket is down to adjacent floats
            return Ok(mid);
        }
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(ExAnteError::NoConvergence(BISECTION_MAX_ITER))
}

/// How [`clearing_price_uniform`] obtained its price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformRegime {
    /// Closed form, inside the value support.
    Interior,
    /// Closed form fell below the support; the price came from bisection.
    BelowSupport,
    /// Zero-width support treated as a point mass.
    PointMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformClearing {
    pub price: f64,
    pub regime: UniformRegime,
}

/// Closed-form clearing price for values uniform on `[lo, hi]`:
/// `m E(B) hi / (m E(B) + S (hi - lo))`.
pub fn clearing_price_uniform(
    advertisers: usize,
    expected_budget: f64,
    lo: f64,
    hi: f64,
    supply: Supply,
) -> Result<UniformClearing, ExAnteError> {
    let dist = Uniform::new(lo, hi)?;
    if lo < 0.0 {
        return Err(ExAnteError::InvalidSupport { lo, hi });
    }
    let s = supply.total();
    if s <= 0.0 {
        return Err(ExAnteError::DegenerateSupply);
    }
    let spend = advertisers as f64 * expected_budget;
    let width = hi - lo;
    if width == 0.0 {
        return Ok(UniformClearing {
            price: hi.min(spend / s),
            regime: UniformRegime::PointMass,
        });
    }
    let closed = spend * hi / (spend + s * width);
    if closed >= lo {
        return Ok(UniformClearing {
            price: closed,
            regime: UniformRegime::Interior,
        });
    }
    let market = ExAnteMarket {
        advertisers,
        expected_budget,
        value_dist: dist,
        supply,
    };
    Ok(UniformClearing {
        price: clearing_price_numeric(&market)?,
        regime: UniformRegime::BelowSupport,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline(supply: f64) -> ExAnteMarket<Uniform> {
        ExAnteMarket {
            advertisers: 5,
            expected_budget: 4.0,
            value_dist: Uniform::new(18.0, 20.0).unwrap(),
            supply: Supply::new(supply).unwrap(),
        }
    }

    #[test]
    fn demand_below_support() {
        assert_eq!(expected_demand(&baseline(1.0), 10.0).unwrap(), 2.0);
    }

    #[test]
    fn demand_above_support_is_zero() {
        assert_eq!(expected_demand(&baseline(1.0), 20.0).unwrap(), 0.0);
        assert_eq!(expected_demand(&baseline(1.0), 25.0).unwrap(), 0.0);
    }

    #[test]
    fn demand_without_advertisers_is_zero() {
        let mut m = baseline(1.0);
        m.advertisers = 0;
        assert_eq!(expected_demand(&m, 19.0).unwrap(), 0.0);
    }

    #[test]
    fn demand_rejects_non_positive_price() {
        assert!(matches!(
            expected_demand(&baseline(1.0), 0.0),
            Err(ExAnteError::NonPositivePrice(_))
        ));
    }

    #[test]
    fn numeric_baseline_price() {
        // p = 10 (20 - p)  =>  p = 200 / 11
        let p = clearing_price_numeric(&baseline(1.0)).unwrap();
        assert!((p - 200.0 / 11.0).abs() < 1e-9);
    }

    #[test]
    fn numeric_price_with_huge_supply_drops_below_support() {
        let p = clearing_price_numeric(&baseline(1e9)).unwrap();
        assert!(p <= 18.0 + 1e-9);
        assert!((p - 20.0 / 1e9).abs() < 1e-9);
    }

    #[test]
    fn numeric_price_without_spend_is_zero() {
        let mut m = baseline(1.0);
        m.expected_budget = 0.0;
        assert_eq!(clearing_price_numeric(&m).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_baseline_price() {
        let c = clearing_price_uniform(5, 4.0, 18.0, 20.0, Supply::new(1.0).unwrap()).unwrap();
        assert_eq!(c.regime, UniformRegime::Interior);
        assert!((c.price - 400.0 / 22.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_with_vanishing_supply_tends_to_top() {
        let c = clearing_price_uniform(5, 4.0, 18.0, 20.0, Supply::new(1e-12).unwrap()).unwrap();
        assert!((c.price - 20.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_without_advertisers_is_zero() {
        let c = clearing_price_uniform(0, 4.0, 0.0, 20.0, Supply::new(1.0).unwrap()).unwrap();
        assert_eq!(c.price, 0.0);
        let c = clearing_price_uniform(0, 4.0, 18.0, 20.0, Supply::new(1.0).unwrap()).unwrap();
        assert_eq!(c.price, 0.0);
    }

    #[test]
    fn closed_form_below_support_falls_back() {
        let c = clearing_price_uniform(1, 1.0, 18.0, 20.0, Supply::new(1.0).unwrap()).unwrap();
        assert_eq!(c.regime, UniformRegime::BelowSupport);
        assert!((c.price - 1.0).abs() < 1e-9);
    }

    #[test]
    fn point_mass() {
        let s = Supply::new(1.0).unwrap();
        let c = clearing_price_uniform(2, 4.0, 19.0, 19.0, s).unwrap();
        assert_eq!(
            c,
            UniformClearing {
                price: 8.0,
                regime: UniformRegime::PointMass
            }
        );
        let c = clearing_price_uniform(10, 4.0, 19.0, 19.0, s).unwrap();
        assert_eq!(c.price, 19.0);
    }

    #[test]
    fn reversed_support_is_rejected() {
        assert!(Uniform::new(2.0, 1.0).is_err());
    }

    #[test]
    fn spend_is_non_increasing_in_price() {
        let m = baseline(1.0);
        let mut last = f64::INFINITY;
        for i in 1..=250 {
            let p = 0.1 * i as f64;
            let spend = p * expected_demand(&m, p).unwrap();
            assert!(spend <= last + 1e-12);
            last = spend;
        }
    }

    #[test]
    fn comparative_statics_on_grid() {
        let price = |m: usize, eb: f64, s: f64| {
            clearing_price_numeric(&ExAnteMarket {
                advertisers: m,
                expected_budget: eb,
                value_dist: Uniform::new(18.0, 20.0).unwrap(),
                supply: Supply::new(s).unwrap(),
            })
            .unwrap()
        };
        for m in 1..12 {
            assert!(price(m, 4.0, 1.0) <= price(m + 1, 4.0, 1.0) + 1e-9);
        }
        for k in 1..12 {
            let eb = k as f64 * 0.5;
            assert!(price(5, eb, 1.0) <= price(5, eb + 0.5, 1.0) + 1e-9);
        }
        for k in 1..12 {
            let s = k as f64 * 0.25;
            assert!(price(5, 4.0, s) >= price(5, 4.0, s + 0.25) - 1e-9);
        }
    }
}
