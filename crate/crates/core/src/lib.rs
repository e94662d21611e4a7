//! Market-clearing prices, allocations and duopoly equilibria for
//! sponsored-search markets with budget-constrained advertisers.
//!
//! * [`monopoly`] prices a single engine ex post and allocates its supply.
//! * [`exante`] finds the clearing price from value distributions.
//! * [`hotelling`] splits users (and so supply) between two engines.
//! * [`duopoly`] finds the leader/follower pricing equilibrium.
//! * [`simulation`] runs Monte Carlo sweeps comparing the two regimes.

pub mod config;
pub mod duopoly;
pub mod exante;
pub mod hotelling;
pub mod model;
pub mod monopoly;
pub mod report;
pub mod simulation;
pub mod verify;

pub use model::{
    effective_pool, validate_pool, Advertiser, AdvertiserId, AdvertiserPool, Engine, PoolEntry,
    Supply, TOLERANCE,
};
