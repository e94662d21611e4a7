//! User market on the unit circle.
//!
//! Users are spread uniformly with unit density. The leader sits at 0 and
//! gives payoff `q` minus quadratic distance cost; the follower sits at `x2`
//! and gives `zeta * q` minus quadratic distance cost. The users indifferent
//! between the two bound the follower's arc.

use serde::{Deserialize, Serialize};

use crate::model::Supply;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum HotellingError {
    #[error("coincident locations: follower location {0} must lie strictly inside (0, 1)")]
    CoincidentLocations(f64),
    #[error("quality factor {0} outside [0, 1]")]
    QualityOutOfRange(f64),
    #[error("search payoff {0} must be positive")]
    NonPositivePayoff(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserMarket {
    zeta: f64,
    search_payoff: f64,
    follower_location: f64,
}

impl UserMarket {
    pub fn new(
        zeta: f64,
        search_payoff: f64,
        follower_location: f64,
    ) -> Result<Self, HotellingError> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(HotellingError::QualityOutOfRange(zeta));
        }
        if search_payoff.is_nan() || search_payoff <= 0.0 {
            return Err(HotellingError::NonPositivePayoff(search_payoff));
        }
        if !(follower_location > 0.0 && follower_location < 1.0) {
            return Err(HotellingError::CoincidentLocations(follower_location));
        }
        Ok(Self {
            zeta,
            search_payoff,
            follower_location,
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn search_payoff(&self) -> f64 {
        self.search_payoff
    }

    pub fn follower_location(&self) -> f64 {
        self.follower_location
    }

    /// Payoff the follower gives up relative to the leader, `(1 - zeta) q`.
    fn quality_gap(&self) -> f64 {
        (1.0 - self.zeta) * self.search_payoff
    }

    /// Utility of a user at `t` searching with the leader.
    pub fn leader_utility(&self, t: f64) -> f64 {
        self.search_payoff - (t * t).min((1.0 - t) * (1.0 - t))
    }

    /// Utility of a user at `t` searching with the follower.
    pub fn follower_utility(&self, t: f64) -> f64 {
        let d = t - self.follower_location;
        self.zeta * self.search_payoff - d * d
    }
}

/// Market shares and the attentions each engine can sell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareSplit {
    pub n1: f64,
    pub n2: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Locations `(xi1, xi2)` of the users indifferent between the two engines,
/// on either side of the follower.
pub fn indifference_points(market: &UserMarket) -> (f64, f64) {
    let x2 = market.follower_location;
    let gap = market.quality_gap();
    let xi1 = (gap + x2 * x2) / (2.0 * x2);
    let xi2 = (1.0 - x2 * x2 - gap) / (2.0 * (1.0 - x2));
    (xi1, xi2)
}

/// Follower's market share `xi2 - xi1`, clamped to `[0, 1/2]`.
pub fn share_of_follower(market: &UserMarket) -> f64 {
    let x2 = market.follower_location;
    let raw = 0.5 * (1.0 - market.quality_gap() / (x2 * (1.0 - x2)));
    raw.clamp(0.0, 0.5)
}

/// Follower location maximizing its share: the point opposite the leader.
pub fn optimal_location() -> f64 {
    0.5
}

/// Shares and supplies once the follower sits at [`optimal_location`].
pub fn equilibrium_shares(zeta: f64, search_payoff: f64, supply: Supply) -> ShareSplit {
    let n1 = (0.5 + 2.0 * (1.0 - zeta) * search_payoff).clamp(0.5, 1.0);
    let n2 = 1.0 - n1;
    let s = supply.total();
    ShareSplit {
        n1,
        n2,
        s1: s * n1,
        s2: s * n2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn indifference_points_hand_values() {
        let m = UserMarket::new(0.9, 0.5, 0.5).unwrap();
        let (a, b) = indifference_points(&m);
        assert!((a - 0.3).abs() < EPS);
        assert!((b - 0.7).abs() < EPS);
    }

    #[test]
    fn indifferent_users_really_are_indifferent() {
        let m = UserMarket::new(0.8, 0.3, 0.4).unwrap();
        let (a, b) = indifference_points(&m);
        assert!((m.leader_utility(a) - m.follower_utility(a)).abs() < EPS);
        assert!((m.leader_utility(b) - m.follower_utility(b)).abs() < EPS);
    }

    #[test]
    fn equal_quality_splits_by_distance() {
        let x2 = 0.3;
        let m = UserMarket::new(1.0, 0.7, x2).unwrap();
        let (a, b) = indifference_points(&m);
        assert!((a - x2 / 2.0).abs() < EPS);
        assert!((b - (1.0 + x2) / 2.0).abs() < EPS);
    }

    #[test]
    fn boundary_gap_closes_follower_arc() {
        // (1 - zeta) q = x2 (1 - x2) = 0.25 at x2 = 0.5
        let m = UserMarket::new(0.5, 0.5, 0.5).unwrap();
        let (a, b) = indifference_points(&m);
        assert!((a - b).abs() < EPS);
        assert_eq!(share_of_follower(&m), 0.0);
    }

    #[test]
    fn coincident_locations_rejected() {
        assert_eq!(
            UserMarket::new(0.9, 0.5, 0.0).unwrap_err(),
            HotellingError::CoincidentLocations(0.0)
        );
        assert!(UserMarket::new(0.9, 0.5, 1.0).is_err());
    }

    #[test]
    fn follower_share_values() {
        for x2 in [0.1, 0.5, 0.77] {
            assert_eq!(
                share_of_follower(&UserMarket::new(1.0, 0.4, x2).unwrap()),
                0.5
            );
        }
        let m = UserMarket::new(0.9, 0.5, 0.5).unwrap();
        assert!((share_of_follower(&m) - 0.4).abs() < EPS);
    }

    #[test]
    fn oversized_gap_clamps_to_extinction() {
        let m = UserMarket::new(0.0, 0.9, 0.5).unwrap();
        assert_eq!(share_of_follower(&m), 0.0);
    }

    #[test]
    fn grid_argmax_is_optimal_location() {
        let (zeta, q) = (0.85, 0.2);
        let best = (1..100)
            .map(|i| i as f64 / 100.0)
            .map(|x| (x, share_of_follower(&UserMarket::new(zeta, q, x).unwrap())))
            .fold(
                (0.0, f64::NEG_INFINITY),
                |acc, c| if c.1 > acc.1 { c } else { acc },
            );
        assert!((best.0 - optimal_location()).abs() <= 0.01);
    }

    #[test]
    fn equilibrium_share_values() {
        let unit = Supply::new(1.0).unwrap();
        let eq = equilibrium_shares(1.0, 0.5, unit);
        assert_eq!((eq.n1, eq.n2), (0.5, 0.5));

        let eq = equilibrium_shares(0.9, 0.5, unit);
        assert!((eq.n1 - 0.6).abs() < EPS && (eq.n2 - 0.4).abs() < EPS);
        assert!((eq.s1 - 0.6).abs() < EPS && (eq.s2 - 0.4).abs() < EPS);

        let eq = equilibrium_shares(0.5, 0.5, unit);
        assert_eq!((eq.n1, eq.n2), (1.0, 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn leader_never_smaller(zeta in 0.0..=1.0f64, q in 0.001..2.0f64, s in 0.0..10.0f64) {
                let eq = equilibrium_shares(zeta, q, Supply::new(s).unwrap());
                prop_assert!(eq.n1 >= eq.n2);
                prop_assert!(eq.s1 >= eq.s2);
                prop_assert!((eq.n1 + eq.n2 - 1.0).abs() < EPS);
                prop_assert!((eq.s1 + eq.s2 - s).abs() < 1e-9);
            }

            #[test]
            fn equilibrium_matches_share_at_midpoint(zeta in 0.0..=1.0f64, q in 0.001..2.0f64) {
                let eq = equilibrium_shares(zeta, q, Supply::new(1.0).unwrap());
                let m = UserMarket::new(zeta, q, 0.5).unwrap();
                prop_assert!((eq.n2 - share_of_follower(&m)).abs() < EPS);
            }

            #[test]
            fn share_shrinks_with_quality_gap(x2 in 0.01..0.99f64, q in 0.001..1.0f64, z1 in 0.0..=1.0f64, z2 in 0.0..=1.0f64) {
                let (lo, hi) = if z1 < z2 { (z1, z2) } else { (z2, z1) };
                // smaller zeta means a larger gap
                let wide = share_of_follower(&UserMarket::new(lo, q, x2).unwrap());
                let narrow = share_of_follower(&UserMarket::new(hi, q, x2).unwrap());
                prop_assert!(wide <= narrow + EPS);
            }
        }
    }
}
