//! Monte Carlo comparison of monopoly and duopoly outcomes.
//!
//! Each instance draws a fresh advertiser population from the scenario's
//! uniform distributions, solves the monopoly (the leader owning the whole
//! supply) and the duopoly equilibrium, and records prices, revenues,
//! advertiser utilities and welfare. Sweeps average those records per
//! advertiser count.
//!
//! Every instance has its own RNG keyed by `(seed, m, index)` and records are
//! reduced in index order, so results do not depend on how many threads ran
//! the instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duopoly::{self, DuopolyError, EquilibriumKind};
use crate::exante::Uniform;
use crate::hotelling;
use crate::model::{Advertiser, AdvertiserPool, Supply};
use crate::monopoly::{self, MonopolyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("instances must be positive")]
    NoInstances,
    #[error("m_values must not be empty")]
    NoAdvertiserCounts,
    #[error("supply total must be positive, got {0}")]
    Supply(f64),
    #[error("n1_fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("hotelling split needs zeta in [0, 1] and q > 0, got zeta={zeta}, q={q}")]
    Hotelling { zeta: f64, q: f64 },
    #[error("{name} range [{lo}, {hi}] is invalid")]
    Range {
        name: &'static str,
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error(transparent)]
    Monopoly(#[from] MonopolyError),
    #[error(transparent)]
    Duopoly(#[from] DuopolyError),
}

/// How the total supply is divided between the engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SupplySplit {
    Fixed {
        n1_fraction: f64,
    },
    /// Shares from the user-market equilibrium with the follower opposite
    /// the leader.
    Hotelling {
        zeta: f64,
        q: f64,
    },
}

impl SupplySplit {
    pub fn leader_share(&self) -> f64 {
        match *self {
            SupplySplit::Fixed { n1_fraction } => n1_fraction,
            SupplySplit::Hotelling { zeta, q } => {
                hotelling::equilibrium_shares(zeta, q, Supply::new(1.0).expect("unit supply")).n1
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub instances: usize,
    pub m_values: Vec<usize>,
    pub supply_total: f64,
    pub supply_split: SupplySplit,
    pub value_dist: Uniform,
    pub budget_dist: Uniform,
    pub rho_dist: Uniform,
}

impl ScenarioConfig {
    /// Equal split of unit supply, values on (18, 20), budgets on (2, 6),
    /// discounts on (0.5, 0.9), 5000 instances for 1..=15 advertisers.
    pub fn baseline(seed: u64) -> Self {
        Self {
            seed,
            instances: 5000,
            m_values: (1..=15).collect(),
            supply_total: 1.0,
            supply_split: SupplySplit::Fixed { n1_fraction: 0.5 },
            value_dist: Uniform::new(18.0, 20.0).expect("ordered"),
            budget_dist: Uniform::new(2.0, 6.0).expect("ordered"),
            rho_dist: Uniform::new(0.5, 0.9).expect("ordered"),
        }
    }

    /// Baseline with a 9:1 supply split.
    pub fn skewed_supply(seed: u64) -> Self {
        Self {
            supply_split: SupplySplit::Fixed { n1_fraction: 0.9 },
            ..Self::baseline(seed)
        }
    }

    /// Baseline with discounts on (0.1, 0.5).
    pub fn low_discount(seed: u64) -> Self {
        Self {
            rho_dist: Uniform::new(0.1, 0.5).expect("ordered"),
            ..Self::baseline(seed)
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.instances == 0 {
            return Err(ScenarioError::NoInstances);
        }
        if self.m_values.is_empty() {
            return Err(ScenarioError::NoAdvertiserCounts);
        }
        if !(self.supply_total > 0.0 && self.supply_total.is_finite()) {
            return Err(ScenarioError::Supply(self.supply_total));
        }
        match self.supply_split {
            SupplySplit::Fixed { n1_fraction } if !(0.0..=1.0).contains(&n1_fraction) => {
                return Err(ScenarioError::Fraction(n1_fraction));
            }
            SupplySplit::Hotelling { zeta, q } if !((0.0..=1.0).contains(&zeta) && q > 0.0) => {
                return Err(ScenarioError::Hotelling { zeta, q });
            }
            _ => {}
        }
        let check = |name, d: &Uniform, max: f64| {
            if d.lo() < 0.0 || d.hi() > max {
                Err(ScenarioError::Range {
                    name,
                    lo: d.lo(),
                    hi: d.hi(),
                })
            } else {
                Ok(())
            }
        };
        check("value_dist", &self.value_dist, f64::MAX)?;
        check("budget_dist", &self.budget_dist, f64::MAX)?;
        check("rho_dist", &self.rho_dist, 1.0)
    }

    /// `(S1, S2)` with `S1 + S2 = S`.
    pub fn engine_supplies(&self) -> (Supply, Supply) {
        let n1 = self.supply_split.leader_share();
        let s1 = self.supply_total * n1;
        let s2 = self.supply_total - s1;
        (
            Supply::new(s1).expect("validated supply"),
            Supply::new(s2.max(0.0)).expect("validated supply"),
        )
    }

    /// Discount separating brand from performance advertisers.
    pub fn brand_cutoff(&self) -> f64 {
        self.rho_dist.mean()
    }
}

fn draw(rng: &mut ChaCha8Rng, d: &Uniform) -> f64 {
    if d.lo() < d.hi() {
        rng.gen_range(d.lo()..d.hi())
    } else {
        d.lo()
    }
}

fn instance_rng(seed: u64, m: usize, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(m as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Draws `m` advertisers for instance `index`; identical arguments give
/// identical pools.
pub fn sample_instance(config: &ScenarioConfig, m: usize, index: usize) -> AdvertiserPool {
    let mut rng = instance_rng(config.seed, m, index);
    AdvertiserPool::from_advertisers((0..m).map(|i| {
        let value = draw(&mut rng, &config.value_dist);
        let budget = draw(&mut rng, &config.budget_dist);
        let discount = draw(&mut rng, &config.rho_dist);
        Advertiser::new(i, value, budget, discount)
    }))
}

/// Per-instance comparison of both market structures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub p1: f64,
    pub p2: f64,
    pub p_mono: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_mono: f64,
    pub ua_duo: f64,
    pub ua_mono: f64,
    pub ua_brand_duo: f64,
    pub ua_brand_mono: f64,
    pub sw_duo: f64,
    pub sw_mono: f64,
    /// Equilibrium `p2 / p1`; the split advertiser's discount for split equilibria.
    pub ratio: f64,
    pub kind: EquilibriumKind,
}

impl InstanceRecord {
    pub fn r_duo(&self) -> f64 {
        self.r1 + self.r2
    }
}

pub fn run_instance(
    pool: &AdvertiserPool,
    config: &ScenarioConfig,
) -> Result<InstanceRecord, InstanceError> {
    let supply = Supply::new(config.supply_total).map_err(|_| MonopolyError::DegenerateSupply)?;
    let (s1, s2) = config.engine_supplies();
    let cutoff = config.brand_cutoff();

    let mono = monopoly::solve(pool, supply)?;
    let eq = duopoly::solve_equilibrium(pool, s1, s2)?;
    let duo = duopoly::duopoly_metrics(&eq, pool, Some(cutoff));

    Ok(InstanceRecord {
        p1: eq.p1,
        p2: eq.p2,
        p_mono: mono.price,
        r1: duo.r1,
        r2: duo.r2,
        r_mono: mono.revenue,
        ua_duo: duo.advertiser_utility,
        ua_mono: mono.advertiser_utility,
        ua_brand_duo: duo.brand_utility,
        ua_brand_mono: monopoly::brand_utility(pool, &mono, cutoff),
        sw_duo: duo.social_welfare,
        sw_mono: mono.social_welfare,
        ratio: if eq.ratio.is_finite() { eq.ratio } else { 0.0 },
        kind: eq.kind,
    })
}

/// Means over the instances of one advertiser count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub p1: f64,
    pub p2: f64,
    pub p_mono: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_duo: f64,
    pub r_mono: f64,
    pub ua_duo: f64,
    pub ua_mono: f64,
    pub ua_brand_duo: f64,
    pub ua_brand_mono: f64,
    pub sw_duo: f64,
    pub sw_mono: f64,
    /// Fraction of solved instances that needed a budget split.
    pub split_rate: f64,
    pub mean_ratio: f64,
    /// Instances whose solve failed; excluded from the means.
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn row(&self, m: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.m == m)
    }
}

/// Averages `results` in order. Failed instances only bump the error count.
pub fn aggregate(m: usize, results: &[Result<InstanceRecord, InstanceError>]) -> SweepRow {
    let ok: Vec<&InstanceRecord> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let n = ok.len();
    let mean = |f: fn(&InstanceRecord) -> f64| -> f64 {
        if n == 0 {
            0.0
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    SweepRow {
        m,
        p1: mean(|r| r.p1),
        p2: mean(|r| r.p2),
        p_mono: mean(|r| r.p_mono),
        r1: mean(|r| r.r1),
        r2: mean(|r| r.r2),
        r_duo: mean(|r| r.r_duo()),
        r_mono: mean(|r| r.r_mono),
        ua_duo: mean(|r| r.ua_duo),
        ua_mono: mean(|r| r.ua_mono),
        ua_brand_duo: mean(|r| r.ua_brand_duo),
        ua_brand_mono: mean(|r| r.ua_brand_mono),
        sw_duo: mean(|r| r.sw_duo),
        sw_mono: mean(|r| r.sw_mono),
        split_rate: mean(|r| f64::from(u8::from(r.kind == EquilibriumKind::SplitEquilibrium))),
        mean_ratio: mean(|r| r.ratio),
        errors: results.len() - n,
    }
}

/// Runs every `(m, instance)` pair of the scenario on the current rayon pool.
pub fn run_sweep(config: &ScenarioConfig) -> Result<SweepSummary, ScenarioError> {
    config.validate()?;
    let rows = config
        .m_values
        .iter()
        .map(|&m| {
            let results: Vec<_> = (0..config.instances)
                .into_par_iter()
                .map(|i| run_instance(&sample_instance(config, m, i), config))
                .collect();
            aggregate(m, &results)
        })
        .collect();
    Ok(SweepSummary { rows })
}
