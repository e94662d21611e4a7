//! Ex-post monopoly market: revenue-maximizing uniform price, the allocation
//! that clears it, and the revenue / utility / welfare bookkeeping.
//!
//! Advertisers buy `budget / price` attentions whenever their value is at
//! least the price. The engine's revenue `min(p * S, sum of budgets with
//! v >= p)` is maximized where demand meets supply, so the price search only
//! walks the value-sorted pool once using suffix sums of budgets.
//!
//! [`oracle_revenue`] and [`cswm_oracle`] are brute-force references kept
//! deliberately separate from the fast path.

use serde::{Deserialize, Serialize};

use crate::model::{AdvertiserId, AdvertiserPool, Supply, TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MonopolyError {
    #[error("degenerate supply: price is undefined when supply is zero")]
    DegenerateSupply,
    #[error(
        "free allocation undefined: price {0} is not positive but eligible advertisers have budget"
    )]
    FreeAllocation(f64),
}

/// Attentions handed to one advertiser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocated {
    pub id: AdvertiserId,
    pub quantity: f64,
}

/// Per-advertiser attentions, aligned with the entries of the pool they were
/// computed for.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Allocation(pub Vec<Allocated>);

impl Allocation {
    fn zeros(pool: &AdvertiserPool) -> Self {
        Self(
            pool.entries()
                .iter()
                .map(|e| Allocated {
                    id: e.id(),
                    quantity: 0.0,
                })
                .collect(),
        )
    }

    pub fn total(&self) -> f64 {
        self.0.iter().map(|a| a.quantity).sum()
    }

    pub fn quantity_of(&self, id: AdvertiserId) -> Option<f64> {
        self.0.iter().find(|a| a.id == id).map(|a| a.quantity)
    }

    pub fn quantities(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.quantity).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonopolyOutcome {
    pub price: f64,
    pub allocation: Allocation,
    pub revenue: f64,
    pub advertiser_utility: f64,
    pub social_welfare: f64,
    /// Aggregate demand at `price` reaches the supply.
    pub cleared: bool,
}

/// Revenue-maximizing price for `pool` selling `supply` attentions.
///
/// Scans advertisers by ascending value. At position `i` the candidate price
/// is the budget of everyone from `i` upward spread over the supply; the first
/// candidate not above `v_i` wins, lifted to the previous value if it fell
/// below it. If no candidate fits, the highest value is the price.
pub fn optimal_price(pool: &AdvertiserPool, supply: Supply) -> Result<f64, MonopolyError> {
    let s = supply.total();
    if s <= 0.0 {
        return Err(MonopolyError::DegenerateSupply);
    }
    let order = pool.value_order();
    let entries = pool.entries();

    let mut suffix = vec![0.0; order.len() + 1];
    for (pos, &idx) in order.iter().enumerate().rev() {
        suffix[pos] = suffix[pos + 1] + entries[idx].effective_budget();
    }

    let mut previous_value = 0.0;
    for (pos, &idx) in order.iter().enumerate() {
        let value = entries[idx].value();
        let candidate = suffix[pos] / s;
        if candidate <= value {
            return Ok(candidate.max(previous_value));
        }
        previous_value = value;
    }
    Ok(previous_value)
}

/// Attentions bought at `price`: eligible advertisers (`v >= price`) are
/// filled from the highest value down, each capped by `budget / price`, until
/// the supply runs out. Equal values fill the later entry first.
pub fn allocate(
    pool: &AdvertiserPool,
    supply: Supply,
    price: f64,
) -> Result<Allocation, MonopolyError> {
    let mut allocation = Allocation::zeros(pool);
    let mut remaining = supply.total();
    if remaining <= 0.0 {
        return Ok(allocation);
    }
    let entries = pool.entries();
    if price <= 0.0 {
        if entries
            .iter()
            .any(|e| e.value() >= price && e.effective_budget() > 0.0)
        {
            return Err(MonopolyError::FreeAllocation(price));
        }
        return Ok(allocation);
    }
    for idx in pool.value_order().into_iter().rev() {
        let entry = &entries[idx];
        if entry.value() < price || remaining <= 0.0 {
            break;
        }
        let quantity = (entry.effective_budget() / price).min(remaining);
        allocation.0[idx].quantity = quantity;
        remaining = (remaining - quantity).max(0.0);
    }
    Ok(allocation)
}

pub fn revenue(price: f64, allocation: &Allocation) -> f64 {
    price * allocation.total()
}

/// Sum of `(v_i - price) * q_i`; indifferent advertisers contribute zero.
pub fn aggregate_utility(pool: &AdvertiserPool, price: f64, allocation: &Allocation) -> f64 {
    pool.entries()
        .iter()
        .zip(&allocation.0)
        .map(|(e, a)| (e.value() - price) * a.quantity)
        .sum()
}

/// Utility of the advertisers whose discount exceeds `cutoff`.
pub fn brand_utility(pool: &AdvertiserPool, outcome: &MonopolyOutcome, cutoff: f64) -> f64 {
    pool.entries()
        .iter()
        .zip(&outcome.allocation.0)
        .filter(|(e, _)| e.discount() > cutoff)
        .map(|(e, a)| (e.value() - outcome.price) * a.quantity)
        .sum()
}

/// Realized value `sum v_i * q_i`.
pub fn social_welfare(pool: &AdvertiserPool, allocation: &Allocation) -> f64 {
    pool.entries()
        .iter()
        .zip(&allocation.0)
        .map(|(e, a)| e.value() * a.quantity)
        .sum()
}

/// Aggregate budget-constrained demand at `price`.
pub fn demand_at(pool: &AdvertiserPool, price: f64) -> f64 {
    let spend: f64 = pool
        .entries()
        .iter()
        .filter(|e| e.value() >= price)
        .map(|e| e.effective_budget())
        .sum();
    if price > 0.0 {
        spend / price
    } else if spend > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Full outcome of selling at a caller-chosen `price`.
pub fn evaluate(
    pool: &AdvertiserPool,
    supply: Supply,
    price: f64,
) -> Result<MonopolyOutcome, MonopolyError> {
    let allocation = allocate(pool, supply, price)?;
    let cleared = supply.total() > 0.0 && demand_at(pool, price) >= supply.total() - TOLERANCE;
    Ok(MonopolyOutcome {
        price,
        revenue: revenue(price, &allocation),
        advertiser_utility: aggregate_utility(pool, price, &allocation),
        social_welfare: social_welfare(pool, &allocation),
        allocation,
        cleared,
    })
}

/// Optimal price and the outcome it induces.
pub fn solve(pool: &AdvertiserPool, supply: Supply) -> Result<MonopolyOutcome, MonopolyError> {
    let price = optimal_price(pool, supply)?;
    evaluate(pool, supply, price)
}

/// Brute-force revenue maximization over the finite candidate set
/// `{v_i} ∪ {(budget of everyone valuing at least v_i) / S}`.
///
/// Returns `(price, revenue)` with the smallest price attaining the maximum.
pub fn oracle_revenue(pool: &AdvertiserPool, supply: Supply) -> Result<(f64, f64), MonopolyError> {
    let s = supply.total();
    if s <= 0.0 {
        return Err(MonopolyError::DegenerateSupply);
    }
    let entries = pool.entries();
    let budget_at_or_above = |p: f64| -> f64 {
        let mut sum = 0.0;
        for e in entries {
            if e.value() >= p {
                sum += e.effective_budget();
            }
        }
        sum
    };

    let mut candidates = Vec::with_capacity(2 * entries.len());
    for e in entries {
        candidates.push(e.value());
        candidates.push(budget_at_or_above(e.value()) / s);
    }

    let mut best = (0.0f64, 0.0f64);
    for p in candidates {
        let r = (p * s).min(budget_at_or_above(p));
        let slack = 1e-12 * (1.0 + best.1.abs());
        if r > best.1 + slack || ((r - best.1).abs() <= slack && p < best.0) {
            best = (p, r);
        }
    }
    Ok(best)
}

/// Largest attainable `sum v_i q_i` at a fixed `price` subject to
/// `price * q_i <= B_i`, `q_i = 0` when `v_i < price`, and `sum q_i <= S`.
///
/// Small pools are solved by enumerating the vertices of the feasible
/// polytope (every advertiser at zero or at its cap, plus at most one taking
/// the leftover supply).
pub fn cswm_oracle(pool: &AdvertiserPool, supply: Supply, price: f64) -> f64 {
    const VERTEX_LIMIT: usize = 20;

    let s = supply.total();
    let eligible: Vec<(f64, f64)> = pool
        .entries()
        .iter()
        .filter(|e| e.value() >= price && e.effective_budget() > 0.0)
        .map(|e| (e.value(), e.effective_budget()))
        .collect();
    if s <= 0.0 || eligible.is_empty() {
        return 0.0;
    }
    if price <= 0.0 {
        let top = eligible.iter().map(|&(v, _)| v).fold(0.0, f64::max);
        return top * s;
    }
    let caps: Vec<(f64, f64)> = eligible.iter().map(|&(v, b)| (v, b / price)).collect();

    if caps.len() > VERTEX_LIMIT {
        let mut by_value = caps;
        by_value.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut left = s;
        let mut welfare = 0.0;
        for (v, cap) in by_value {
            let q = cap.min(left);
            welfare += v * q;
            left -= q;
            if left <= 0.0 {
                break;
            }
        }
        return welfare;
    }

    let n = caps.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << n) {
        let mut used = 0.0;
        let mut welfare = 0.0;
        for (i, &(v, cap)) in caps.iter().enumerate() {
            if mask & (1 << i) != 0 {
                used += cap;
                welfare += v * cap;
            }
        }
        if used > s + TOLERANCE {
            continue;
        }
        best = best.max(welfare);
        let left = (s - used).max(0.0);
        for (i, &(v, cap)) in caps.iter().enumerate() {
            if mask & (1 << i) == 0 {
                best = best.max(welfare + v * cap.min(left));
            }
        }
    }
    best
}
