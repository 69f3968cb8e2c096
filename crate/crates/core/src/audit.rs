//! Privacy and converse-bound auditors.
//!
//! Two independent routes are implemented and cross-checked:
//!
//! * [`feasible_tuples`] / [`posterior_for_query`] treat the download as an
//!   opaque coefficient matrix and find, by rank computations, every
//!   disjoint demand/side pair that could explain it. This works for any
//!   scalar-linear scheme.
//! * [`audit_exact`] conditions on the emitted query by Bayes: for every
//!   demand/side pair it enumerates the query generator's internal random
//!   choices with exact combinatorial weights and checks that the resulting
//!   posterior membership probability equals `D/K` for every index and
//!   every reachable query. No uniformity shortcut is assumed.
//!
//! Probabilities are exact rationals throughout; only the Monte-Carlo
//! estimator works in floating point.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::params::ProtocolParams;
use crate::protocol::{generate_query, validate_index_sets, Query};
use crate::rational::Rational;
use crate::rng::SeededRng;

/// An emitted query, keyed by its ordered list of sorted groups. The
/// generator is a public constant per parameter set, so it does not
/// participate in the key.
pub type GroupList = Vec<Vec<usize>>;

/// Default ceiling on exhaustive-audit work, in elementary enumeration
/// steps. Override with the `IPIR_AUDIT_BUDGET` environment variable.
pub const DEFAULT_AUDIT_BUDGET: u128 = 10_000_000;

fn audit_budget() -> u128 {
    std::env::var("IPIR_AUDIT_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_AUDIT_BUDGET)
}

// ---------------------------------------------------------------------------
// Query schemes
// ---------------------------------------------------------------------------

/// A query-generation strategy that can both sample a query and disclose its
/// exact conditional distribution for auditing.
pub trait QueryScheme {
    /// Draws one query for the given demand and side sets.
    fn sample(
        &self,
        params: &ProtocolParams,
        demand: &[usize],
        side: &[usize],
        rng: &mut SeededRng,
    ) -> Result<Query>;

    /// The full conditional distribution of the emitted group list given
    /// `(demand, side)`: every reachable list with its exact probability.
    fn enumerate(
        &self,
        params: &ProtocolParams,
        demand: &[usize],
        side: &[usize],
    ) -> Result<Vec<(GroupList, Rational)>>;

    /// Upper bound on the number of elementary steps one `enumerate` call
    /// takes, for the audit budget guard.
    fn enumeration_cost(&self, params: &ProtocolParams) -> u128;
}

/// The honest scheme: random grouping plus a fixed public code generator.
#[derive(Debug, Clone, Copy, Default)]
pub struct GroupAndCode;

/// Deliberately leaky fixture for auditor regression tests: the
/// demand-bearing groups always occupy the first slots, the lowest demand
/// index is pinned into the first group, and the final slot shuffle is
/// skipped. Both auditors must flag it.
#[derive(Debug, Clone, Copy, Default)]
pub struct PinnedDemand;

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).map(BigUint::from).product()
}

// Saturating count helpers for the budget guard: an overflow can only
// overestimate the cost, never sneak work past the budget.
fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        let Some(next) = acc.checked_mul((n - i) as u128) else {
            return u128::MAX;
        };
        acc = next / (i + 1) as u128;
    }
    acc
}

fn factorial_u128(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, i| acc.saturating_mul(i))
}

/// Number of ways to cut an `n`-set into `n / b` ordered blocks of size `b`,
/// computed as a product of binomials (saturating).
fn ordered_partition_count(n: usize, b: usize) -> u128 {
    let mut acc: u128 = 1;
    let mut remaining = n;
    while remaining > 0 {
        acc = acc.saturating_mul(binomial_u128(remaining, b));
        remaining -= b;
    }
    acc
}

/// All ways to cut `items` into an ordered sequence of unordered blocks of
/// size `block_size`. Blocks inherit ascending order from `items`.
fn ordered_partitions(items: &[usize], block_size: usize) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in items.iter().copied().combinations(block_size) {
        let remaining: Vec<usize> = items
            .iter()
            .copied()
            .filter(|i| !first.contains(i))
            .collect();
        for mut tail in ordered_partitions(&remaining, block_size) {
            let mut parts = Vec::with_capacity(tail.len() + 1);
            parts.push(first.clone());
            parts.append(&mut tail);
            out.push(parts);
        }
    }
    out
}

fn sorted_complement(k: usize, demand: &[usize], side: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; k];
    for &i in demand.iter().chain(side.iter()) {
        mask[i] = true;
    }
    (0..k).filter(|&i| !mask[i]).collect()
}

impl QueryScheme for GroupAndCode {
    fn sample(
        &self,
        params: &ProtocolParams,
        demand: &[usize],
        side: &[usize],
        rng: &mut SeededRng,
    ) -> Result<Query> {
        generate_query(params, demand, side, rng)
    }

    fn enumerate(
        &self,
        params: &ProtocolParams,
        demand: &[usize],
        side: &[usize],
    ) -> Result<Vec<(GroupList, Rational)>> {
        validate_index_sets(params, demand, side)?;
        let r = params.demand_groups();
        let d = params.demand_per_group();
        let m = params.side_per_group();
        let t = params.group_size();
        let p = params.group_count();
        let rest = sorted_complement(params.message_count(), demand, side);

        // Probability of one fully specified outcome: the product of the
        // uniform stage weights. Every enumerated (slot set, demand blocks,
        // side blocks, filler blocks, final order) tuple collapses
        // d!^R * m!^R * T!^(P-R) raw shuffle outcomes that produce the same
        // blocks.
        let numer = factorial(d).pow(r as u32)
            * factorial(m).pow(r as u32)
            * factorial(t).pow((p - r) as u32);
        let denom = BigUint::from(binomial_u128(p, r))
            * factorial(params.demand_size())
            * factorial(params.side_size())
            * factorial(rest.len())
            * factorial(p);
        let entry_prob = Rational::from_big(numer, denom);

        let demand_parts = ordered_partitions(demand, d);
        let side_parts = ordered_partitions(side, m);
        let rest_parts = ordered_partitions(&rest, t);

        let mut out = Vec::new();
        for slots in (0..p).combinations(r) {
            let free_slots: Vec<usize> = (0..p).filter(|s| !slots.contains(s)).collect();
            for wparts in &demand_parts {
                for sparts in &side_parts {
                    for rparts in &rest_parts {
                        let mut pre: Vec<Vec<usize>> = vec![Vec::new(); p];
                        for (j, &slot) in slots.iter().enumerate() {
                            let mut group = wparts[j].clone();
                            group.extend_from_slice(&sparts[j]);
                            group.sort_unstable();
                            pre[slot] = group;
                        }
                        for (j, &slot) in free_slots.iter().enumerate() {
                            pre[slot] = rparts[j].clone();
                        }
                        for order in (0..p).permutations(p) {
                            let key: GroupList = order.iter().map(|&i| pre[i].clone()).collect();
                            out.push((key, entry_prob.clone()));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn enumeration_cost(&self, params: &ProtocolParams) -> u128 {
        let r = params.demand_groups();
        let d = params.demand_per_group();
        let m = params.side_per_group();
        let t = params.group_size();
        let p = params.group_count();
        let rest = params.message_count() - params.demand_size() - params.side_size();
        binomial_u128(p, r)
            .saturating_mul(ordered_partition_count(params.demand_size(), d))
            .saturating_mul(ordered_partition_count(params.side_size(), m))
            .saturating_mul(ordered_partition_count(rest, t))
            .saturating_mul(factorial_u128(p))
    }
}

impl PinnedDemand {
    fn split_demand(demand: &[usize]) -> (usize, Vec<usize>) {
        let mut sorted = demand.to_vec();
        sorted.sort_unstable();
        let lowest = sorted[0];
        (lowest, sorted[1..].to_vec())
    }
}

impl QueryScheme for PinnedDemand {
    fn sample(
        &self,
        params: &ProtocolParams,
        demand: &[usize],
        side: &[usize],
        rng: &mut SeededRng,
    ) -> Result<Query> {
        validate_index_sets(params, demand, side)?;
        let r = params.demand_groups();
        let d = params.demand_per_group();
        let m = params.side_per_group();
        let t = params.group_size();
        let p = params.group_count();
        let k = params.message_count();

        let (lowest, mut w_rest) = Self::split_demand(demand);
        rng.shuffle(&mut w_rest);
        let mut side_perm = side.to_vec();
        rng.shuffle(&mut side_perm);
        let mut rest = sorted_complement(k, demand, side);
        rng.shuffle(&mut rest);

        let mut groups: Vec<Vec<usize>> = Vec::with_capacity(p);
        let mut group0 = vec![lowest];
        group0.extend_from_slice(&w_rest[..d - 1]);
        group0.extend_from_slice(&side_perm[..m]);
        groups.push(group0);
        for j in 1..r {
            let mut g: Vec<usize> = w_rest[(d - 1) + (j - 1) * d..(d - 1) + j * d].to_vec();
            g.extend_from_slice(&side_perm[j * m..(j + 1) * m]);
            groups.push(g);
        }
        for j in 0..p - r {
            groups.push(rest[j * t..(j + 1) * t].to_vec());
        }
        for g in &mut groups {
            g.sort_unstable();
        }
        Query::new(
            k,
            groups,
            crate::mds::build_generator(t, d, params.field_order())?,
        )
    }

    fn enumerate(
        &self,
        params: &ProtocolParams,
        demand: &[usize],
        side: &[usize],
    ) -> Result<Vec<(GroupList, Rational)>> {
        validate_index_sets(params, demand, side)?;
        let r = params.demand_groups();
        let d = params.demand_per_group();
        let m = params.side_per_group();
        let t = params.group_size();
        let p = params.group_count();
        let rest = sorted_complement(params.message_count(), demand, side);
        let (lowest, w_rest) = Self::split_demand(demand);

        let numer = factorial(d - 1)
            * factorial(d).pow((r - 1) as u32)
            * factorial(m).pow(r as u32)
            * factorial(t).pow((p - r) as u32);
        let denom = factorial(params.demand_size() - 1)
            * factorial(params.side_size())
            * factorial(rest.len());
        let entry_prob = Rational::from_big(numer, denom);

        let side_parts = ordered_partitions(side, m);
        let rest_parts = ordered_partitions(&rest, t);

        let mut out = Vec::new();
        for extra in w_rest.iter().copied().combinations(d - 1) {
            let remaining: Vec<usize> = w_rest
                .iter()
                .copied()
                .filter(|i| !extra.contains(i))
                .collect();
            for tail_parts in ordered_partitions(&remaining, d) {
                for sparts in &side_parts {
                    for rparts in &rest_parts {
                        let mut key: GroupList = Vec::with_capacity(p);
                        let mut group0 = vec![lowest];
                        group0.extend_from_slice(&extra);
                        group0.extend_from_slice(&sparts[0]);
                        group0.sort_unstable();
                        key.push(group0);
                        for j in 1..r {
                            let mut g = tail_parts[j - 1].clone();
                            g.extend_from_slice(&sparts[j]);
                            g.sort_unstable();
                            key.push(g);
                        }
                        for part in rparts {
                            key.push(part.clone());
                        }
                        out.push((key, entry_prob.clone()));
                    }
                }
            }
        }
        Ok(out)
    }

    fn enumeration_cost(&self, params: &ProtocolParams) -> u128 {
        // strictly fewer choices than the honest scheme
        GroupAndCode.enumeration_cost(params)
    }
}

// ---------------------------------------------------------------------------
// Feasibility and posteriors from the coefficient matrix
// ---------------------------------------------------------------------------

/// All disjoint `(demand*, side*)` pairs such that every demanded message is
/// determined by the download rows plus the side messages. Pure linear
/// algebra on the coefficient matrix; applies to any scalar-linear scheme.
pub fn feasible_tuples(
    coeffs: &FieldMatrix,
    demand_size: usize,
    side_size: usize,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let k = coeffs.cols();
    if demand_size + side_size > k {
        return Ok(Vec::new());
    }
    let mut tuples = Vec::new();
    for s_star in (0..k).combinations(side_size) {
        let recoverable: Vec<usize> = (0..k)
            .filter(|i| !s_star.contains(i))
            .filter(|&w| {
                coeffs
                    .in_rowspace_with_units(&s_star, w)
                    .expect("indices are in range")
            })
            .collect();
        for w_star in recoverable.into_iter().combinations(demand_size) {
            tuples.push((w_star, s_star.clone()));
        }
    }
    Ok(tuples)
}

/// Posterior over feasible tuples for one query, with per-index demand and
/// side membership marginals.
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    /// Feasible `(demand*, side*)` pairs, each sorted ascending.
    pub tuples: Vec<(Vec<usize>, Vec<usize>)>,
    /// Probability of each tuple; sums to one.
    pub probs: Vec<Rational>,
    /// Per-index probability of demand membership.
    pub alpha: Vec<Rational>,
    /// Per-index probability of side membership; sums to the side size.
    pub beta: Vec<Rational>,
}

impl PosteriorTable {
    pub fn tuple_count(&self) -> usize {
        self.tuples.len()
    }
}

/// Builds the posterior table for a query produced by the honest scheme.
///
/// The emitted query is a pure function of the unordered partition plus an
/// independent slot shuffle, and the generator stage weights are identical
/// for every feasible tuple, so the posterior is uniform over the feasible
/// tuples. [`audit_exact`] recomputes the same posterior without this
/// shortcut and the test suite asserts the two agree.
pub fn posterior_for_query(query: &Query, params: &ProtocolParams) -> Result<PosteriorTable> {
    let k = params.message_count();
    if query.message_count() != k
        || query.generator().dimension() != params.demand_per_group()
        || query.generator().code_length() != params.group_size()
        || query.generator().modulus() != params.field_order()
    {
        return Err(Error::Inconsistent(
            "query does not match parameters".into(),
        ));
    }
    let coeffs = query.coefficient_matrix();
    let tuples = feasible_tuples(&coeffs, params.demand_size(), params.side_size())?;
    if tuples.is_empty() {
        return Err(Error::Inconsistent("query admits no feasible tuple".into()));
    }
    let share = Rational::new(1, tuples.len() as i64);
    let probs = vec![share.clone(); tuples.len()];
    let mut alpha = vec![Rational::zero(); k];
    let mut beta = vec![Rational::zero(); k];
    for (w_star, s_star) in &tuples {
        for &i in w_star {
            alpha[i] += &share;
        }
        for &i in s_star {
            beta[i] += &share;
        }
    }
    Ok(PosteriorTable {
        tuples,
        probs,
        alpha,
        beta,
    })
}

// ---------------------------------------------------------------------------
// Privacy audits
// ---------------------------------------------------------------------------

/// Worst observed deviation of a privacy audit.
#[derive(Debug, Clone)]
pub enum Deviation {
    /// Exact audit: a rational distance from the target probability.
    Exact(Rational),
    /// Monte-Carlo audit: an estimated distance.
    Estimate(f64),
}

/// Outcome of a privacy audit.
#[derive(Debug, Clone)]
pub struct PrivacyReport {
    /// True iff every audited deviation was zero (exact mode) or within the
    /// tolerance (Monte-Carlo mode).
    pub pass: bool,
    pub worst_deviation: Deviation,
    /// Number of distinct queries (exact) or qualifying bins (Monte-Carlo)
    /// audited.
    pub queries_audited: usize,
}

/// Exhaustive privacy audit of the honest scheme; see [`audit_exact_with`].
pub fn audit_exact(params: &ProtocolParams) -> Result<PrivacyReport> {
    audit_exact_with(&GroupAndCode, params)
}

/// Exhaustive privacy audit of an arbitrary scheme.
///
/// Enumerates every demand/side pair under the uniform prior and every query
/// reachable from it, accumulates exact posterior numerators and
/// denominators per query, and passes iff the posterior demand-membership
/// probability equals `D/K` for every index and every query. Fails with
/// [`Error::BudgetExceeded`] when the enumeration would exceed the
/// configured budget.
pub fn audit_exact_with(
    scheme: &dyn QueryScheme,
    params: &ProtocolParams,
) -> Result<PrivacyReport> {
    let k = params.message_count();
    let dsize = params.demand_size();
    let msize = params.side_size();

    let pairs = binomial_u128(k, msize).saturating_mul(binomial_u128(k - msize, dsize));
    let needed = pairs.saturating_mul(scheme.enumeration_cost(params));
    let budget = audit_budget();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    struct Bin {
        total: Rational,
        demand_mass: Vec<Rational>,
    }
    let mut bins: BTreeMap<GroupList, Bin> = BTreeMap::new();

    // The prior is uniform over disjoint pairs, so it cancels from the
    // posterior ratio; only the generator likelihoods matter.
    for side in (0..k).combinations(msize) {
        let complement: Vec<usize> = (0..k).filter(|i| !side.contains(i)).collect();
        for demand in complement.iter().copied().combinations(dsize) {
            for (key, prob) in scheme.enumerate(params, &demand, &side)? {
                let bin = bins.entry(key).or_insert_with(|| Bin {
                    total: Rational::zero(),
                    demand_mass: vec![Rational::zero(); k],
                });
                bin.total += &prob;
                for &i in &demand {
                    bin.demand_mass[i] += &prob;
                }
            }
        }
    }

    let target = Rational::new(dsize as i64, k as i64);
    let mut worst = Rational::zero();
    for bin in bins.values() {
        for mass in &bin.demand_mass {
            let posterior = mass / &bin.total;
            let dev = (&posterior - &target).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    Ok(PrivacyReport {
        pass: worst.is_zero(),
        queries_audited: bins.len(),
        worst_deviation: Deviation::Exact(worst),
    })
}

/// Monte-Carlo privacy audit of the honest scheme; see
/// [`audit_montecarlo_with`].
pub fn audit_montecarlo(
    params: &ProtocolParams,
    trials: usize,
    tolerance: f64,
    rng: &mut SeededRng,
) -> Result<PrivacyReport> {
    audit_montecarlo_with(&GroupAndCode, params, trials, tolerance, rng)
}

/// Statistical privacy audit: samples demand/side pairs from the uniform
/// prior, generates one query each, bins queries by their emitted group
/// list, and estimates the per-index demand-membership probability in every
/// bin holding at least 30 samples. Passes iff every estimate is within
/// `tolerance` of `D/K`.
pub fn audit_montecarlo_with(
    scheme: &dyn QueryScheme,
    params: &ProtocolParams,
    trials: usize,
    tolerance: f64,
    rng: &mut SeededRng,
) -> Result<PrivacyReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("at least one trial required".into()));
    }
    let k = params.message_count();
    let dsize = params.demand_size();
    let msize = params.side_size();

    struct Bin {
        total: u64,
        demand_hits: Vec<u64>,
    }
    let mut bins: BTreeMap<GroupList, Bin> = BTreeMap::new();
    for _ in 0..trials {
        let side = rng.subset(msize, k);
        let complement: Vec<usize> = (0..k).filter(|i| !side.contains(i)).collect();
        let demand: Vec<usize> = rng
            .subset(dsize, complement.len())
            .into_iter()
            .map(|i| complement[i])
            .collect();
        let query = scheme.sample(params, &demand, &side, rng)?;
        let bin = bins.entry(query.groups().to_vec()).or_insert_with(|| Bin {
            total: 0,
            demand_hits: vec![0; k],
        });
        bin.total += 1;
        for &i in &demand {
            bin.demand_hits[i] += 1;
        }
    }

    let target = dsize as f64 / k as f64;
    let mut worst = 0.0f64;
    let mut audited = 0usize;
    for bin in bins.values() {
        if bin.total < 30 {
            continue;
        }
        audited += 1;
        for &hits in &bin.demand_hits {
            let dev = (hits as f64 / bin.total as f64 - target).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    Ok(PrivacyReport {
        pass: worst <= tolerance,
        worst_deviation: Deviation::Estimate(worst),
        queries_audited: audited,
    })
}

// ---------------------------------------------------------------------------
// Converse audit
// ---------------------------------------------------------------------------

/// Outcome of the converse-bound audit on one posterior table.
#[derive(Debug, Clone)]
pub struct ConverseReport {
    /// `sum_i beta_i / (alpha + beta_i)`, exactly.
    pub lhs: Rational,
    /// `M K / (D + M)`, the maximum of the left-hand side.
    pub bound: Rational,
    /// `ceil(D K / (D + M))`, the minimum download of any linear scheme.
    pub min_download: usize,
    /// The audited scheme's download.
    pub download: usize,
    pub pass: bool,
}

/// The functional `sum_i beta_i / (alpha + beta_i)`.
pub fn converse_lhs(alpha: &Rational, betas: &[Rational]) -> Rational {
    betas
        .iter()
        .fold(Rational::zero(), |acc, b| &acc + &(b / &(alpha + b)))
}

/// Evaluates the converse-bound quantities on a posterior table.
///
/// Requires the table to satisfy privacy exactly (`alpha_i = D/K` for every
/// index); rejects it otherwise. Passes iff the beta functional stays within
/// its maximum `M K / (D + M)` and the download meets the converse minimum
/// `ceil(D K / (D + M))`.
pub fn converse_audit(
    table: &PosteriorTable,
    params: &ProtocolParams,
    download: usize,
) -> Result<ConverseReport> {
    let k = params.message_count();
    let dsize = params.demand_size();
    let msize = params.side_size();
    let alpha = Rational::new(dsize as i64, k as i64);
    if table.alpha.len() != k {
        return Err(Error::Inconsistent(
            "table size does not match parameters".into(),
        ));
    }
    if let Some(i) = table.alpha.iter().position(|a| *a != alpha) {
        return Err(Error::AuditNotApplicable(format!(
            "index {i} has demand probability {} instead of {alpha}",
            table.alpha[i]
        )));
    }
    let lhs = converse_lhs(&alpha, &table.beta);
    let bound = Rational::new((msize * k) as i64, (dsize + msize) as i64);
    let min_download = (dsize * k).div_ceil(dsize + msize);
    let pass = lhs <= bound && download >= min_download;
    Ok(ConverseReport {
        lhs,
        bound,
        min_download,
        download,
        pass,
    })
}
