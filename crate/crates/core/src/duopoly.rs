//! Price competition between a leader and a follower engine.
//!
//! Given prices `(p1, p2)`, advertiser `i` prefers the leader iff
//! `rho_i <= p2 / p1`. Sorting advertisers by discount, every candidate
//! partition is a prefix (leader) / suffix (follower) split at some `k`, and
//! each side then prices as a monopoly over its own advertisers. The induced
//! ratio `nu_k = p2 / p1` is non-increasing in `k`; a split is stable when it
//! reproduces itself. When no split is stable, exactly one advertiser keeps
//! flipping between engines, and the equilibrium has it divide its budget so
//! that the ratio lands on its own discount.

use serde::{Deserialize, Serialize};

use crate::model::{
    effective_pool, validate_pool, AdvertiserId, AdvertiserPool, Engine, InvalidPool, PoolEntry,
    Supply, TOLERANCE,
};
use crate::monopoly::{self, MonopolyError, MonopolyOutcome};

/// Residual allowed on `p2 / p1 - rho_l` for a budget split.
pub const SPLIT_TOLERANCE: f64 = 1e-6;
const SPLIT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DuopolyError {
    #[error(transparent)]
    InvalidPool(#[from] InvalidPool),
    #[error(transparent)]
    Monopoly(#[from] MonopolyError),
    #[error("degenerate supply: both engines need positive supply (got {s1}, {s2})")]
    DegenerateSupply { s1: f64, s2: f64 },
    #[error("unknown advertiser {0}")]
    UnknownAdvertiser(AdvertiserId),
    #[error("partition index {k} exceeds pool size {m}")]
    PartitionOutOfRange { k: usize, m: usize },
    #[error("not an undetermined advertiser: {0} does not bracket its discount")]
    NotUndetermined(AdvertiserId),
    #[error("budget split for {0} did not converge")]
    SplitNoConvergence(AdvertiserId),
    #[error("equilibrium scan failure: no stable partition and no undetermined advertiser")]
    ScanFailure,
}

/// An advertiser dividing its budget: `alpha` goes to the follower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub advertiser: AdvertiserId,
    pub alpha: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub engine1: Vec<AdvertiserId>,
    pub engine2: Vec<AdvertiserId>,
    pub split: Option<BudgetSplit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    PureNe,
    SplitEquilibrium,
    DegenerateZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuopolyEquilibrium {
    pub p1: f64,
    pub p2: f64,
    /// `p2 / p1`, with `0/0 = 0` and `x/0 = inf`.
    pub ratio: f64,
    pub partition: Partition,
    /// Leader's market as it sees it (split advertiser at its leader fraction).
    pub pool1: AdvertiserPool,
    /// Follower's market with discounted values.
    pub pool2: AdvertiserPool,
    pub outcome1: MonopolyOutcome,
    pub outcome2: MonopolyOutcome,
    pub kind: EquilibriumKind,
}

/// Both engines' optimal prices for one prefix/suffix split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub p1: f64,
    pub p2: f64,
    pub ratio: f64,
}

pub fn price_ratio(p1: f64, p2: f64) -> f64 {
    if p1 > 0.0 {
        p2 / p1
    } else if p2 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Payoff of buying at `price` with `budget` when each attention is worth
/// `value`: `max((value - price) * budget / price, 0)`.
pub fn engine_payoff(value: f64, budget: f64, price: f64) -> f64 {
    if price > 0.0 {
        ((value - price) * budget / price).max(0.0)
    } else if value > 0.0 && budget > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Leader takes every advertiser with `rho <= ratio`.
pub fn partition_by_ratio(pool: &AdvertiserPool, ratio: f64) -> Partition {
    let (engine1, engine2): (Vec<&PoolEntry>, Vec<&PoolEntry>) =
        pool.entries().iter().partition(|e| e.discount() <= ratio);
    Partition {
        engine1: engine1.into_iter().map(PoolEntry::id).collect(),
        engine2: engine2.into_iter().map(PoolEntry::id).collect(),
        split: None,
    }
}

fn check_supplies(s1: Supply, s2: Supply) -> Result<(), DuopolyError> {
    if s1.total() > 0.0 && s2.total() > 0.0 {
        Ok(())
    } else {
        Err(DuopolyError::DegenerateSupply {
            s1: s1.total(),
            s2: s2.total(),
        })
    }
}

/// Discount-sorted view of a pool with the per-split price computation.
struct Market<'a> {
    pool: &'a AdvertiserPool,
    order: Vec<usize>,
    s1: Supply,
    s2: Supply,
}

impl<'a> Market<'a> {
    fn new(pool: &'a AdvertiserPool, s1: Supply, s2: Supply) -> Self {
        Self {
            pool,
            order: pool.discount_order(),
            s1,
            s2,
        }
    }

    fn discount_at(&self, pos: usize) -> f64 {
        self.pool.entries()[self.order[pos]].discount()
    }

    fn engine_pools(&self, k: usize) -> (AdvertiserPool, AdvertiserPool) {
        let leader = self.pool.select(&self.order[..k]);
        let follower = effective_pool(&self.pool.select(&self.order[k..]), Engine::Follower);
        (leader, follower)
    }

    fn split_pools(&self, pos: usize, alpha: f64) -> (AdvertiserPool, AdvertiserPool) {
        let entries = self.pool.entries();
        let l = entries[self.order[pos]];
        let mut leader: Vec<PoolEntry> = self.order[..pos].iter().map(|&i| entries[i]).collect();
        leader.push(PoolEntry::partial(
            l.advertiser,
            (1.0 - alpha) * l.budget_fraction,
        ));
        let mut follower: Vec<PoolEntry> =
            vec![PoolEntry::partial(l.advertiser, alpha * l.budget_fraction)];
        follower.extend(self.order[pos + 1..].iter().map(|&i| entries[i]));
        (
            AdvertiserPool::new(leader),
            effective_pool(&AdvertiserPool::new(follower), Engine::Follower),
        )
    }

    fn prices(
        &self,
        leader: &AdvertiserPool,
        follower: &AdvertiserPool,
    ) -> Result<RatioPoint, DuopolyError> {
        let p1 = monopoly::optimal_price(leader, self.s1)?;
        let p2 = monopoly::optimal_price(follower, self.s2)?;
        Ok(RatioPoint {
            p1,
            p2,
            ratio: price_ratio(p1, p2),
        })
    }

    fn ratio_at(&self, k: usize) -> Result<RatioPoint, DuopolyError> {
        let (leader, follower) = self.engine_pools(k);
        self.prices(&leader, &follower)
    }

    fn split_residual(&self, pos: usize, alpha: f64) -> Result<(f64, RatioPoint), DuopolyError> {
        let (leader, follower) = self.split_pools(pos, alpha);
        let point = self.prices(&leader, &follower)?;
        Ok((point.ratio - self.discount_at(pos), point))
    }

    fn position_of(&self, id: AdvertiserId) -> Result<usize, DuopolyError> {
        self.order
            .iter()
            .position(|&i| self.pool.entries()[i].id() == id)
            .ok_or(DuopolyError::UnknownAdvertiser(id))
    }

    fn ids(&self, positions: std::ops::Range<usize>) -> Vec<AdvertiserId> {
        self.order[positions]
            .iter()
            .map(|&i| self.pool.entries()[i].id())
            .collect()
    }
}

/// `nu_k`: the price ratio induced when the `k` lowest-discount advertisers
/// go to the leader and the rest to the follower.
pub fn ratio_map(
    pool: &AdvertiserPool,
    s1: Supply,
    s2: Supply,
    k: usize,
) -> Result<RatioPoint, DuopolyError> {
    check_supplies(s1, s2)?;
    if k > pool.len() {
        return Err(DuopolyError::PartitionOutOfRange { k, m: pool.len() });
    }
    Market::new(pool, s1, s2).ratio_at(k)
}

/// `nu_0, ..., nu_m` for every prefix split.
pub fn ratio_profile(
    pool: &AdvertiserPool,
    s1: Supply,
    s2: Supply,
) -> Result<Vec<RatioPoint>, DuopolyError> {
    check_supplies(s1, s2)?;
    let market = Market::new(pool, s1, s2);
    (0..=pool.len()).map(|k| market.ratio_at(k)).collect()
}

/// Budget fraction `alpha` that advertiser `l` sends to the follower so the
/// price ratio equals its discount, with the resulting prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSolution {
    pub alpha: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Bisects `g(alpha) = p2(I2 + alpha l) / p1(I1 + (1 - alpha) l) - rho_l`,
/// where `I1` / `I2` hold the advertisers with lower / higher discount
/// position than `l`. `g` is continuous and non-decreasing, so a sign change
/// `g(0) < 0 <= g(1)` brackets a root.
pub fn split_budget(
    pool: &AdvertiserPool,
    s1: Supply,
    s2: Supply,
    l: AdvertiserId,
) -> Result<SplitSolution, DuopolyError> {
    check_supplies(s1, s2)?;
    let market = Market::new(pool, s1, s2);
    let pos = market.position_of(l)?;
    split_at(&market, pos)
}

fn split_at(market: &Market<'_>, pos: usize) -> Result<SplitSolution, DuopolyError> {
    let id = market.pool.entries()[market.order[pos]].id();
    let solution = |alpha: f64, point: RatioPoint| SplitSolution {
        alpha,
        p1: point.p1,
        p2: point.p2,
    };

    let (g0, _) = market.split_residual(pos, 0.0)?;
    let (g1, at_one) = market.split_residual(pos, 1.0)?;
    if !(g0 < 0.0 && g1 >= 0.0) {
        return Err(DuopolyError::NotUndetermined(id));
    }
    if g1 <= SPLIT_TOLERANCE {
        return Ok(solution(1.0, at_one));
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best: Option<(f64, RatioPoint)> = None;
    for _ in 0..SPLIT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (g, point) = market.split_residual(pos, mid)?;
        if g.abs() <= SPLIT_TOLERANCE {
            best = Some((mid, point));
            if g.abs() <= 1e-12 {
                break;
            }
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.map(|(alpha, point)| solution(alpha, point))
        .ok_or(DuopolyError::SplitNoConvergence(id))
}

/// Nash equilibrium of the pricing game.
///
/// Scans `k = m, m-1, ..., 0` and returns the first stable prefix split:
/// `rho_k <= nu_k` (the last leader advertiser still prefers the leader) and
/// `nu_k < rho_{k+1}` (the first follower advertiser still prefers the
/// follower). Without one, the advertiser `l` with
/// `nu_{l-1} >= rho_l > nu_l` splits its budget.
pub fn solve_equilibrium(
    pool: &AdvertiserPool,
    s1: Supply,
    s2: Supply,
) -> Result<DuopolyEquilibrium, DuopolyError> {
    validate_pool(pool)?;
    check_supplies(s1, s2)?;
    let market = Market::new(pool, s1, s2);
    let m = pool.len();

    if pool.total_effective_budget() <= 0.0 {
        let partition = partition_by_ratio(pool, 0.0);
        let k = partition.engine1.len();
        let (pool1, pool2) = market.engine_pools(k);
        return assemble(
            &market,
            pool1,
            pool2,
            RatioPoint {
                p1: 0.0,
                p2: 0.0,
                ratio: 0.0,
            },
            partition,
            EquilibriumKind::DegenerateZero,
        );
    }

    let profile: Vec<RatioPoint> = (0..=m)
        .map(|k| market.ratio_at(k))
        .collect::<Result<_, _>>()?;

    for k in (0..=m).rev() {
        let nu = profile[k].ratio;
        let leader_ok = k == 0 || market.discount_at(k - 1) <= nu;
        let follower_ok = k == m || nu < market.discount_at(k);
        if leader_ok && follower_ok {
            let (pool1, pool2) = market.engine_pools(k);
            let partition = Partition {
                engine1: market.ids(0..k),
                engine2: market.ids(k..m),
                split: None,
            };
            return assemble(
                &market,
                pool1,
                pool2,
                profile[k],
                partition,
                EquilibriumKind::PureNe,
            );
        }
    }

    // 1-based l in the bracket is position l - 1 here.
    for pos in 0..m {
        let rho = market.discount_at(pos);
        if profile[pos].ratio >= rho && rho > profile[pos + 1].ratio {
            let split = split_at(&market, pos)?;
            let (pool1, pool2) = market.split_pools(pos, split.alpha);
            let partition = Partition {
                engine1: market.ids(0..pos),
                engine2: market.ids(pos + 1..m),
                split: Some(BudgetSplit {
                    advertiser: pool.entries()[market.order[pos]].id(),
                    alpha: split.alpha,
                }),
            };
            let point = RatioPoint {
                p1: split.p1,
                p2: split.p2,
                ratio: price_ratio(split.p1, split.p2),
            };
            return assemble(
                &market,
                pool1,
                pool2,
                point,
                partition,
                EquilibriumKind::SplitEquilibrium,
            );
        }
    }
    Err(DuopolyError::ScanFailure)
}

fn assemble(
    market: &Market<'_>,
    pool1: AdvertiserPool,
    pool2: AdvertiserPool,
    point: RatioPoint,
    partition: Partition,
    kind: EquilibriumKind,
) -> Result<DuopolyEquilibrium, DuopolyError> {
    let outcome1 = monopoly::evaluate(&pool1, market.s1, point.p1)?;
    let outcome2 = monopoly::evaluate(&pool2, market.s2, point.p2)?;
    Ok(DuopolyEquilibrium {
        p1: point.p1,
        p2: point.p2,
        ratio: point.ratio,
        partition,
        pool1,
        pool2,
        outcome1,
        outcome2,
        kind,
    })
}

/// Checks that `(p1, p2)` reproduces itself: each engine's optimal price over
/// the advertisers that participate with it at these prices equals its price.
pub fn verify_ne(
    pool: &AdvertiserPool,
    s1: Supply,
    s2: Supply,
    p1: f64,
    p2: f64,
) -> Result<bool, DuopolyError> {
    check_supplies(s1, s2)?;
    let nu = price_ratio(p1, p2);
    let leader: AdvertiserPool = pool
        .entries()
        .iter()
        .filter(|e| e.discount() <= nu && e.value() >= p1)
        .copied()
        .collect();
    let follower: AdvertiserPool = effective_pool(pool, Engine::Follower)
        .into_entries()
        .into_iter()
        .filter(|e| e.discount() > nu && e.value() >= p2)
        .collect();
    let q1 = monopoly::optimal_price(&leader, s1)?;
    let q2 = monopoly::optimal_price(&follower, s2)?;
    Ok((q1 - p1).abs() <= TOLERANCE && (q2 - p2).abs() <= TOLERANCE)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DuopolyMetrics {
    pub r1: f64,
    pub r2: f64,
    pub advertiser_utility: f64,
    pub brand_utility: f64,
    pub social_welfare: f64,
}

impl DuopolyMetrics {
    pub fn total_revenue(&self) -> f64 {
        self.r1 + self.r2
    }
}

/// Revenues, advertiser utilities and welfare of an equilibrium. Brand
/// advertisers are those with discount above `brand_cutoff`; without a cutoff
/// the pool's mean discount is used.
pub fn duopoly_metrics(
    eq: &DuopolyEquilibrium,
    pool: &AdvertiserPool,
    brand_cutoff: Option<f64>,
) -> DuopolyMetrics {
    let cutoff = brand_cutoff.unwrap_or_else(|| mean_discount(pool));
    DuopolyMetrics {
        r1: eq.outcome1.revenue,
        r2: eq.outcome2.revenue,
        advertiser_utility: eq.outcome1.advertiser_utility + eq.outcome2.advertiser_utility,
        brand_utility: monopoly::brand_utility(&eq.pool1, &eq.outcome1, cutoff)
            + monopoly::brand_utility(&eq.pool2, &eq.outcome2, cutoff),
        social_welfare: eq.outcome1.social_welfare + eq.outcome2.social_welfare,
    }
}

pub fn mean_discount(pool: &AdvertiserPool) -> f64 {
    if pool.is_empty() {
        0.0
    } else {
        pool.entries().iter().map(PoolEntry::discount).sum::<f64>() / pool.len() as f64
    }
}
