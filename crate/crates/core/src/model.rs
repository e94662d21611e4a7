//! Domain types shared by every solver: advertisers, pools and supply.
//!
//! Pools are immutable once built. Solvers read them through sorted index
//! views, and the follower engine sees them through [`effective_pool`].

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Absolute tolerance used by solver comparisons and invariant checks.
pub const TOLERANCE: f64 = 1e-9;

/// Opaque advertiser identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdvertiserId(pub usize);

impl fmt::Display for AdvertiserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One bidder's private parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Advertiser {
    pub id: AdvertiserId,
    /// Maximal willingness to pay per attention.
    pub value: f64,
    /// Spending cap per period.
    pub budget: f64,
    /// Multiplier on `value` at the follower engine.
    pub discount: f64,
}

impl Advertiser {
    pub fn new(id: usize, value: f64, budget: f64, discount: f64) -> Self {
        Self {
            id: AdvertiserId(id),
            value,
            budget,
            discount,
        }
    }
}

/// An advertiser together with the fraction of its budget committed to a
/// particular market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub advertiser: Advertiser,
    pub budget_fraction: f64,
}

impl PoolEntry {
    pub fn full(advertiser: Advertiser) -> Self {
        Self {
            advertiser,
            budget_fraction: 1.0,
        }
    }

    pub fn partial(advertiser: Advertiser, budget_fraction: f64) -> Self {
        Self {
            advertiser,
            budget_fraction,
        }
    }

    pub fn id(&self) -> AdvertiserId {
        self.advertiser.id
    }

    pub fn value(&self) -> f64 {
        self.advertiser.value
    }

    pub fn discount(&self) -> f64 {
        self.advertiser.discount
    }

    /// Budget actually spendable in this market.
    pub fn effective_budget(&self) -> f64 {
        self.budget_fraction * self.advertiser.budget
    }
}

/// An ordered collection of advertisers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdvertiserPool {
    entries: Vec<PoolEntry>,
}

impl AdvertiserPool {
    pub fn new(entries: Vec<PoolEntry>) -> Self {
        Self { entries }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a pool where every advertiser commits its full budget.
    pub fn from_advertisers<I>(advertisers: I) -> Self
    where
        I: IntoIterator<Item = Advertiser>,
    {
        Self::new(advertisers.into_iter().map(PoolEntry::full).collect())
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<PoolEntry> {
        self.entries
    }

    /// Entry indices ordered by ascending value; equal values keep input order.
    pub fn value_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| self.entries[a].value().total_cmp(&self.entries[b].value()));
        order
    }

    /// Entry indices ordered by ascending discount; equal discounts keep input order.
    pub fn discount_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| {
            self.entries[a]
                .discount()
                .total_cmp(&self.entries[b].discount())
        });
        order
    }

    /// New pool holding the entries at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self::new(indices.iter().map(|&i| self.entries[i]).collect())
    }

    pub fn total_effective_budget(&self) -> f64 {
        self.entries.iter().map(PoolEntry::effective_budget).sum()
    }
}

impl FromIterator<PoolEntry> for AdvertiserPool {
    fn from_iter<T: IntoIterator<Item = PoolEntry>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Attentions offered per period.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Supply(f64);

impl Supply {
    pub fn new(total: f64) -> Result<Self, InvalidSupply> {
        if total.is_finite() && total >= 0.0 {
            Ok(Self(total))
        } else {
            Err(InvalidSupply(total))
        }
    }

    pub fn total(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("supply must be a finite non-negative number, got {0}")]
pub struct InvalidSupply(pub f64);

/// Which engine a pool is viewed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// The technologically superior engine; advertisers value it at face value.
    Leader,
    /// The inferior engine; advertiser values are scaled by their discount.
    Follower,
}

/// The pool as seen by `engine`: the follower replaces each value by
/// `discount * value`. Budgets and fractions are untouched.
pub fn effective_pool(pool: &AdvertiserPool, engine: Engine) -> AdvertiserPool {
    match engine {
        Engine::Leader => pool.clone(),
        Engine::Follower => pool
            .entries()
            .iter()
            .map(|e| {
                let mut adv = e.advertiser;
                adv.value *= adv.discount;
                PoolEntry::partial(adv, e.budget_fraction)
            })
            .collect(),
    }
}

/// A single invariant violation found by [`validate_pool`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoolViolation {
    #[error("duplicate id {0}")]
    DuplicateId(AdvertiserId),
    #[error("advertiser {id}: negative value {value}")]
    NegativeValue { id: AdvertiserId, value: f64 },
    #[error("advertiser {id}: negative budget {budget}")]
    NegativeBudget { id: AdvertiserId, budget: f64 },
    #[error("advertiser {id}: discount {discount} outside [0, 1]")]
    DiscountOutOfRange { id: AdvertiserId, discount: f64 },
    #[error("advertiser {id}: budget fraction {fraction} outside [0, 1]")]
    FractionOutOfRange { id: AdvertiserId, fraction: f64 },
    #[error("advertiser {id}: non-finite parameter")]
    NonFinite { id: AdvertiserId },
}

/// Every violation in a rejected pool.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid advertiser pool: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidPool(pub Vec<PoolViolation>);

/// Checks every entry against the advertiser and pool-entry invariants.
pub fn validate_pool(pool: &AdvertiserPool) -> Result<(), InvalidPool> {
    let mut violations = Vec::new();
    let mut seen = HashSet::with_capacity(pool.len());
    for entry in pool.entries() {
        let adv = &entry.advertiser;
        let id = adv.id;
        if !seen.insert(id) {
            violations.push(PoolViolation::DuplicateId(id));
        }
        if ![adv.value, adv.budget, adv.discount, entry.budget_fraction]
            .iter()
            .all(|x| x.is_finite())
        {
            violations.push(PoolViolation::NonFinite { id });
            continue;
        }
        if adv.value < 0.0 {
            violations.push(PoolViolation::NegativeValue {
                id,
                value: adv.value,
            });
        }
        if adv.budget < 0.0 {
            violations.push(PoolViolation::NegativeBudget {
                id,
                budget: adv.budget,
            });
        }
        if !(0.0..=1.0).contains(&adv.discount) {
            violations.push(PoolViolation::DiscountOutOfRange {
                id,
                discount: adv.discount,
            });
        }
        if !(0.0..=1.0).contains(&entry.budget_fraction) {
            violations.push(PoolViolation::FractionOutOfRange {
                id,
                fraction: entry.budget_fraction,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(InvalidPool(violations))
    }
}
