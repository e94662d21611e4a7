//! Randomized property checks over the monopoly and duopoly solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duopoly::{self, EquilibriumKind, SPLIT_TOLERANCE};
use crate::model::{Advertiser, AdvertiserPool, PoolEntry, Supply, TOLERANCE};
use crate::monopoly;

const MAX_ADVERTISERS: usize = 8;
const CSWM_MAX_ADVERTISERS: usize = 5;
const EPSILONS: [f64; 2] = [1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("trials must be positive")]
    NoTrials,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCount {
    pub property: String,
    pub checks: u64,
    pub violations: u64,
    /// Solver errors hit while checking; counted separately from violations.
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub seed: u64,
    pub properties: Vec<PropertyCount>,
}

impl VerifyReport {
    pub fn total_violations(&self) -> u64 {
        self.properties.iter().map(|p| p.violations).sum()
    }

    pub fn total_errors(&self) -> u64 {
        self.properties.iter().map(|p| p.errors).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0 && self.total_errors() == 0
    }

    pub fn property(&self, name: &str) -> Option<&PropertyCount> {
        self.properties.iter().find(|p| p.property == name)
    }
}

#[derive(Default)]
struct Tally {
    counts: Vec<PropertyCount>,
}

impl Tally {
    fn slot(&mut self, name: &str) -> &mut PropertyCount {
        if let Some(i) = self.counts.iter().position(|p| p.property == name) {
            return &mut self.counts[i];
        }
        self.counts.push(PropertyCount {
            property: name.to_string(),
            checks: 0,
            violations: 0,
            errors: 0,
        });
        self.counts.last_mut().expect("just pushed")
    }

    fn check(&mut self, name: &str, holds: bool) {
        let slot = self.slot(name);
        slot.checks += 1;
        if !holds {
            slot.violations += 1;
        }
    }

    fn record<T, E>(&mut self, name: &str, result: Result<T, E>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(_) => {
                let slot = self.slot(name);
                slot.checks += 1;
                slot.errors += 1;
                None
            }
        }
    }
}

/// Random pool of 1..=`max_m` advertisers. About a third of pools draw
/// integer values and budgets so that ties occur.
pub fn random_pool<R: Rng>(rng: &mut R, max_m: usize) -> AdvertiserPool {
    let m = rng.gen_range(1..=max_m.max(1));
    let discrete = rng.gen_bool(0.3);
    (0..m)
        .map(|i| {
            let (v, b) = if discrete {
                (rng.gen_range(1..=5) as f64, rng.gen_range(1..=4) as f64)
            } else {
                (rng.gen_range(0.1..20.0), rng.gen_range(0.1..6.0))
            };
            PoolEntry::full(Advertiser::new(i, v, b, rng.gen_range(0.05..1.0)))
        })
        .collect()
}

fn random_supply<R: Rng>(rng: &mut R) -> Supply {
    Supply::new(rng.gen_range(0.1..3.0)).expect("positive supply")
}

fn with_budget(pool: &AdvertiserPool, index: usize, extra: f64) -> AdvertiserPool {
    let mut entries = pool.entries().to_vec();
    entries[index].advertiser.budget += extra;
    AdvertiserPool::new(entries)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOLERANCE * (1.0 + a.abs().max(b.abs()))
}

/// Runs every property on `trials` random instances drawn from `seed`.
pub fn verify_suite(trials: usize, seed: u64) -> Result<VerifyReport, VerifyError> {
    if trials == 0 {
        return Err(VerifyError::NoTrials);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for _ in 0..trials {
        monopoly_trial(&mut rng, &mut tally);
        duopoly_trial(&mut rng, &mut tally);
    }
    Ok(VerifyReport {
        trials,
        seed,
        properties: tally.counts,
    })
}

fn monopoly_trial(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let pool = random_pool(rng, MAX_ADVERTISERS);
    let supply = random_supply(rng);

    if let Some(outcome) = tally.record("oracle_revenue", monopoly::solve(&pool, supply)) {
        if let Some((_, best)) =
            tally.record("oracle_revenue", monopoly::oracle_revenue(&pool, supply))
        {
            tally.check("oracle_revenue", close(outcome.revenue, best));
        }
        let total = outcome.allocation.total();
        let capped = pool
            .entries()
            .iter()
            .zip(outcome.allocation.quantities())
            .all(|(e, q)| {
                q >= 0.0
                    && (q == 0.0 || e.value() >= outcome.price)
                    && outcome.price * q <= e.effective_budget() + TOLERANCE
            });
        tally.check(
            "allocation_feasible",
            capped && total <= supply.total() + TOLERANCE,
        );
        if outcome.cleared {
            tally.check(
                "cleared_sells_supply",
                (total - supply.total()).abs() <= TOLERANCE,
            );
        }
        tally.check(
            "welfare_identity",
            close(
                outcome.social_welfare,
                outcome.revenue + outcome.advertiser_utility,
            ),
        );
    }

    // A sub-pool never prices or earns above its superset.
    let keep: Vec<usize> = (0..pool.len()).filter(|_| rng.gen_bool(0.6)).collect();
    let sub = pool.select(&keep);
    if let (Some(small), Some(large)) = (
        tally.record("price_monotone_in_pool", monopoly::solve(&sub, supply)),
        tally.record("price_monotone_in_pool", monopoly::solve(&pool, supply)),
    ) {
        tally.check(
            "price_monotone_in_pool",
            small.price <= large.price + TOLERANCE,
        );
        tally.check(
            "revenue_monotone_in_pool",
            small.revenue <= large.revenue + TOLERANCE,
        );
    }

    // More supply never raises the price or lowers revenue.
    let more = Supply::new(supply.total() + rng.gen_range(0.01..2.0)).expect("positive supply");
    if let (Some(low), Some(high)) = (
        tally.record("price_monotone_in_supply", monopoly::solve(&pool, supply)),
        tally.record("price_monotone_in_supply", monopoly::solve(&pool, more)),
    ) {
        tally.check(
            "price_monotone_in_supply",
            high.price <= low.price + TOLERANCE,
        );
        tally.check(
            "revenue_monotone_in_supply",
            high.revenue + TOLERANCE >= low.revenue,
        );
    }

    // The price moves up by at most eps / S when a budget grows.
    if let Some(base) = tally.record("budget_continuity", monopoly::optimal_price(&pool, supply)) {
        for eps in EPSILONS {
            for i in 0..pool.len() {
                let bumped = with_budget(&pool, i, eps);
                if let Some(p) = tally.record(
                    "budget_continuity",
                    monopoly::optimal_price(&bumped, supply),
                ) {
                    let delta = p - base;
                    tally.check(
                        "budget_continuity",
                        delta >= -TOLERANCE && delta <= eps / supply.total() + TOLERANCE,
                    );
                }
            }
        }
    }

    // Welfare-maximal allocation on small pools, where the oracle enumerates vertices.
    let small = random_pool(rng, CSWM_MAX_ADVERTISERS);
    if let Some(outcome) = tally.record("cswm", monopoly::solve(&small, supply)) {
        let best = monopoly::cswm_oracle(&small, supply, outcome.price);
        tally.check("cswm", close(outcome.social_welfare, best));
    }
}

fn duopoly_trial(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let pool = random_pool(rng, MAX_ADVERTISERS);
    let total = rng.gen_range(0.2..3.0);
    let leader_share = rng.gen_range(0.5..0.95);
    let s1 = Supply::new(total * leader_share).expect("positive supply");
    let s2 = Supply::new(total * (1.0 - leader_share)).expect("positive supply");

    if let Some(profile) = tally.record(
        "ratio_non_increasing",
        duopoly::ratio_profile(&pool, s1, s2),
    ) {
        let monotone = profile
            .windows(2)
            .all(|w| w[1].ratio <= w[0].ratio + TOLERANCE);
        tally.check("ratio_non_increasing", monotone);
    }

    let Some(eq) = tally.record("equilibrium", duopoly::solve_equilibrium(&pool, s1, s2)) else {
        return;
    };
    tally.check("leader_price_dominates", eq.p1 + TOLERANCE >= eq.p2);
    tally.check(
        "leader_revenue_dominates",
        eq.outcome1.revenue + TOLERANCE >= eq.outcome2.revenue,
    );
    match eq.kind {
        EquilibriumKind::PureNe => {
            if let Some(ok) = tally.record(
                "pure_ne_verified",
                duopoly::verify_ne(&pool, s1, s2, eq.p1, eq.p2),
            ) {
                tally.check("pure_ne_verified", ok);
            }
        }
        EquilibriumKind::SplitEquilibrium => {
            let split = eq
                .partition
                .split
                .expect("split equilibrium names its advertiser");
            let rho = pool
                .entries()
                .iter()
                .find(|e| e.id() == split.advertiser)
                .map(PoolEntry::discount)
                .unwrap_or(f64::NAN);
            tally.check(
                "split_ratio_matches_discount",
                (duopoly::price_ratio(eq.p1, eq.p2) - rho).abs() <= SPLIT_TOLERANCE,
            );
        }
        EquilibriumKind::DegenerateZero => {}
    }
}
