//! Top-versus-rest permutation tests on maximum rank shift and their
//! nonparametric combination across disciplines with Fisher's function.
//!
//! Every Monte Carlo iteration `b` draws from its own ChaCha8 stream, keyed
//! by `(seed, b)`, so results do not depend on how iterations are scheduled
//! across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{UdaId, UniversityId, Year};
use crate::sensitivity::Ranking;
use crate::stats;

/// Relative slack used when comparing permuted statistics with the observed
/// one, so that equal group sums accumulated in a different order still
/// count as ties.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NpcError {
    #[error("maximum rank shift needs at least one year besides the benchmark {0}")]
    NoComparisonYear(Year),
    #[error("benchmark year {0} missing")]
    MissingBenchmark(Year),
    #[error("percentile must lie in (0, 100], got {0}")]
    InvalidPercentile(f64),
    #[error("top/rest split needs at least 2 universities, got {0}")]
    TooFewUniversities(usize),
    #[error(
        "percentile {percentile} (boundary {boundary}) leaves an empty {} group: \
         {top} top, {rest} rest; the test is undefined",
        if *top == 0 { "top" } else { "rest" }
    )]
    EmptyPartition {
        percentile: f64,
        boundary: f64,
        top: usize,
        rest: usize,
    },
    #[error("both groups must be nonempty (top {top}, rest {rest})")]
    EmptyGroup { top: usize, rest: usize },
    #[error("number of permutations must be at least 1")]
    ZeroPermutations,
    #[error("non-finite value in test data")]
    NonFinite,
    #[error("top member {0} has no value")]
    UnknownTopMember(UniversityId),
    #[error("combination needs at least 2 usable disciplines, got {usable}{}", excluded_note(excluded))]
    TooFewUdas {
        usable: usize,
        excluded: Vec<(UdaId, String)>,
    },
}

fn excluded_note(excluded: &[(UdaId, String)]) -> String {
    excluded
        .iter()
        .map(|(u, why)| format!("; {u} excluded: {why}"))
        .collect()
}

/// Largest absolute rank difference between any year and the benchmark.
pub fn max_rank_shift(ranks: &BTreeMap<Year, u32>, benchmark: Year) -> Result<u32, NpcError> {
    let b = *ranks
        .get(&benchmark)
        .ok_or(NpcError::MissingBenchmark(benchmark))?;
    ranks
        .iter()
        .filter(|(y, _)| **y != benchmark)
        .map(|(_, r)| r.abs_diff(b))
        .max()
        .ok_or(NpcError::NoComparisonYear(benchmark))
}

/// Splits universities into those scoring strictly above the interpolated
/// `percentile` boundary and the rest.
pub fn top_partition(
    scores: &BTreeMap<UniversityId, f64>,
    percentile: f64,
) -> Result<(BTreeSet<UniversityId>, BTreeSet<UniversityId>), NpcError> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(NpcError::InvalidPercentile(percentile));
    }
    if scores.len() < 2 {
        return Err(NpcError::TooFewUniversities(scores.len()));
    }
    if scores.values().any(|s| !s.is_finite()) {
        return Err(NpcError::NonFinite);
    }
    let mut sorted: Vec<f64> = scores.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let boundary = stats::quantile_sorted(&sorted, percentile / 100.0).expect("valid quantile");
    let (top, rest): (BTreeSet<_>, BTreeSet<_>) = scores
        .keys()
        .cloned()
        .partition(|u| scores[u] > boundary);
    if top.is_empty() || rest.is_empty() {
        return Err(NpcError::EmptyPartition {
            percentile,
            boundary,
            top: top.len(),
            rest: rest.len(),
        });
    }
    Ok((top, rest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "=")]
    Equal,
}

impl Direction {
    fn of(t: f64) -> Self {
        if t < 0.0 {
            Self::Less
        } else if t > 0.0 {
            Self::Greater
        } else {
            Self::Equal
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Less => "<",
            Self::Greater => ">",
            Self::Equal => "=",
        })
    }
}

/// How label assignments are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermMode {
    /// Exhaustive when the number of distinct assignments is at most the
    /// permutation budget, Monte Carlo otherwise.
    #[default]
    Auto,
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermTestResult {
    pub scope: String,
    /// `mean(top) − mean(rest)`.
    pub observed: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub direction: Direction,
    /// Assignments evaluated: all of them in exhaustive mode, else `B`.
    pub n_perm: u64,
    pub seed: u64,
    pub exhaustive: bool,
    /// All pooled values identical; `p_value` is 1.
    pub degenerate: bool,
    pub n_top: usize,
    pub n_rest: usize,
}

/// Group statistic computed from the sum of the top group.
struct Pool {
    values: Vec<f64>,
    k: usize,
    total: f64,
    tol: f64,
}

impl Pool {
    fn new(top: &[f64], rest: &[f64]) -> Result<Self, NpcError> {
        if top.is_empty() || rest.is_empty() {
            return Err(NpcError::EmptyGroup {
                top: top.len(),
                rest: rest.len(),
            });
        }
        let values: Vec<f64> = top.iter().chain(rest).copied().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NpcError::NonFinite);
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            total: values.iter().sum(),
            k: top.len(),
            tol: TIE_TOLERANCE * scale.max(f64::MIN_POSITIVE),
            values,
        })
    }

    fn n(&self) -> usize {
        self.values.len()
    }

    fn stat(&self, sum_top: f64) -> f64 {
        sum_top / self.k as f64 - (self.total - sum_top) / (self.n() - self.k) as f64
    }

    fn observed(&self) -> f64 {
        self.stat(self.values[..self.k].iter().sum())
    }

    fn degenerate(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    fn at_least(&self, t: f64, obs: f64) -> bool {
        t.abs() >= obs.abs() - self.tol
    }

    fn random_stat(&self, seed: u64, b: u64) -> f64 {
        let mut rng = iteration_rng(seed, b);
        let sum = index::sample(&mut rng, self.n(), self.k)
            .into_iter()
            .map(|i| self.values[i])
            .sum();
        self.stat(sum)
    }
}

fn iteration_rng(seed: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b);
    rng
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Two-sided test of equal means between `top` and `rest`.
///
/// Exhaustive mode reports the share of all `C(n, k)` assignments (the
/// observed one included) at least as extreme as observed. Monte Carlo mode
/// uses `(b + 1) / (B + 1)`.
pub fn two_sample_perm_test(
    top: &[f64],
    rest: &[f64],
    n_perm: u64,
    seed: u64,
) -> Result<PermTestResult, NpcError> {
    two_sample_perm_test_with(top, rest, n_perm, seed, PermMode::Auto)
}

pub fn two_sample_perm_test_with(
    top: &[f64],
    rest: &[f64],
    n_perm: u64,
    seed: u64,
    mode: PermMode,
) -> Result<PermTestResult, NpcError> {
    if n_perm == 0 {
        return Err(NpcError::ZeroPermutations);
    }
    let pool = Pool::new(top, rest)?;
    let observed = pool.observed();
    let mut result = PermTestResult {
        scope: String::new(),
        observed,
        p_value: 1.0,
        direction: Direction::of(observed),
        n_perm,
        seed,
        exhaustive: false,
        degenerate: pool.degenerate(),
        n_top: top.len(),
        n_rest: rest.len(),
    };
    if result.degenerate {
        result.observed = 0.0;
        result.direction = Direction::Equal;
        return Ok(result);
    }
    let total = stats::binomial(pool.n(), pool.k);
    let exhaustive = match mode {
        PermMode::Auto => total <= u128::from(n_perm),
        PermMode::Exhaustive => true,
        PermMode::MonteCarlo => false,
    };
    if exhaustive {
        let mut hits: u64 = 0;
        let mut count: u64 = 0;
        for_each_combination(pool.n(), pool.k, |idx| {
            let t = pool.stat(idx.iter().map(|&i| pool.values[i]).sum());
            count += 1;
            if pool.at_least(t, observed) {
                hits += 1;
            }
        });
        result.exhaustive = true;
        result.n_perm = count;
        result.p_value = hits as f64 / count as f64;
    } else {
        let hits = (1..=n_perm)
            .into_par_iter()
            .filter(|&b| pool.at_least(pool.random_stat(seed, b), observed))
            .count() as u64;
        result.p_value = (hits + 1) as f64 / (n_perm + 1) as f64;
    }
    Ok(result)
}

/// Per-university test values of one discipline and its top group.
#[derive(Debug, Clone, PartialEq)]
pub struct UdaGroupData {
    uda: UdaId,
    values: BTreeMap<UniversityId, f64>,
    top: BTreeSet<UniversityId>,
}

impl UdaGroupData {
    pub fn new(
        uda: UdaId,
        values: BTreeMap<UniversityId, f64>,
        top: BTreeSet<UniversityId>,
    ) -> Result<Self, NpcError> {
        if let Some(u) = top.iter().find(|u| !values.contains_key(*u)) {
            return Err(NpcError::UnknownTopMember(u.clone()));
        }
        let rest = values.len() - top.len();
        if top.is_empty() || rest == 0 {
            return Err(NpcError::EmptyGroup {
                top: top.len(),
                rest,
            });
        }
        if values.values().any(|v| !v.is_finite()) {
            return Err(NpcError::NonFinite);
        }
        Ok(Self { uda, values, top })
    }

    /// Maximum rank shift of every university as the test value, with the
    /// top group taken from the benchmark-year scores.
    pub fn from_rankings(
        uda: UdaId,
        rankings: &[Ranking],
        benchmark: Year,
        percentile: f64,
    ) -> Result<Self, NpcError> {
        let bench = rankings
            .iter()
            .find(|r| r.obs_year() == benchmark)
            .ok_or(NpcError::MissingBenchmark(benchmark))?;
        let mut values = BTreeMap::new();
        for u in bench.universities() {
            let ranks: BTreeMap<Year, u32> = rankings
                .iter()
                .filter_map(|r| r.rank_of(u).map(|k| (r.obs_year(), k)))
                .collect();
            values.insert(u.clone(), f64::from(max_rank_shift(&ranks, benchmark)?));
        }
        let scores: BTreeMap<UniversityId, f64> = bench
            .entries()
            .iter()
            .map(|e| (e.university.clone(), e.score))
            .collect();
        let (top, _) = top_partition(&scores, percentile)?;
        Self::new(uda, values, top)
    }

    pub fn uda(&self) -> &UdaId {
        &self.uda
    }

    pub fn values(&self) -> &BTreeMap<UniversityId, f64> {
        &self.values
    }

    pub fn top(&self) -> &BTreeSet<UniversityId> {
        &self.top
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let (t, r): (Vec<_>, Vec<_>) = self
            .values
            .iter()
            .partition(|(u, _)| self.top.contains(*u));
        (
            t.into_iter().map(|(_, v)| *v).collect(),
            r.into_iter().map(|(_, v)| *v).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NpcCombinedResult {
    /// One row per combined discipline. `p_value` is the partial
    /// significance level of the observed statistic.
    pub partials: Vec<PermTestResult>,
    /// Fisher statistic `−2 Σ ln λ` of the observed data.
    pub statistic: f64,
    pub p_value: f64,
    /// Sign of the mean observed difference across disciplines.
    pub direction: Direction,
    pub n_perm: u64,
    pub seed: u64,
    /// Disciplines left out, with the reason.
    pub excluded: Vec<(UdaId, String)>,
}

/// Share of `sorted_abs` (ascending) at least as large as `t`, with the
/// add-one denominator implicit in `sorted_abs.len()`.
fn significance(sorted_abs: &[f64], t: f64, tol: f64) -> f64 {
    let below = sorted_abs.partition_point(|&x| x < t.abs() - tol);
    (sorted_abs.len() - below) as f64 / sorted_abs.len() as f64
}

/// Fisher-combined test over disciplines with synchronized relabeling.
///
/// Iteration `b` assigns one random priority key to every university that
/// appears anywhere; each discipline puts its `k` lowest-key universities in
/// the top group. A university present in several disciplines therefore
/// moves consistently, while each discipline alone still sees a uniformly
/// random `k`-subset.
pub fn npc_fisher_combine(
    groups: &[UdaGroupData],
    n_perm: u64,
    seed: u64,
) -> Result<NpcCombinedResult, NpcError> {
    if n_perm == 0 {
        return Err(NpcError::ZeroPermutations);
    }
    if groups.len() < 2 {
        return Err(NpcError::TooFewUdas {
            usable: groups.len(),
            excluded: Vec::new(),
        });
    }
    let universe: Vec<&UniversityId> = groups
        .iter()
        .flat_map(|g| g.values.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let position: BTreeMap<&UniversityId, usize> =
        universe.iter().enumerate().map(|(i, u)| (*u, i)).collect();

    struct Prepared {
        members: Vec<usize>,
        values: Vec<f64>,
        pool: Pool,
    }
    let prepared: Vec<Prepared> = groups
        .iter()
        .map(|g| {
            let (top, rest) = g.split();
            Ok(Prepared {
                members: g.values.keys().map(|u| position[u]).collect(),
                values: g.values.values().copied().collect(),
                pool: Pool::new(&top, &rest)?,
            })
        })
        .collect::<Result<_, NpcError>>()?;

    // stats[b][g]: statistic of group g at iteration b; b = 0 is observed.
    let iteration_stats = |b: u64| -> Vec<f64> {
        if b == 0 {
            return prepared.iter().map(|p| p.pool.observed()).collect();
        }
        let mut rng = iteration_rng(seed, b);
        let keys: Vec<u64> = (0..universe.len()).map(|_| rng.random()).collect();
        prepared
            .iter()
            .map(|p| {
                let mut order: Vec<usize> = (0..p.members.len()).collect();
                order.sort_by_key(|&i| (keys[p.members[i]], i));
                let sum = order[..p.pool.k].iter().map(|&i| p.values[i]).sum();
                p.pool.stat(sum)
            })
            .collect()
    };
    let table: Vec<Vec<f64>> = (0..=n_perm).into_par_iter().map(iteration_stats).collect();

    let sorted_abs: Vec<Vec<f64>> = (0..prepared.len())
        .map(|g| {
            let mut col: Vec<f64> = table.iter().map(|row| row[g].abs()).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    let fisher: Vec<f64> = table
        .par_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(g, &t)| -2.0 * significance(&sorted_abs[g], t, prepared[g].pool.tol).ln())
                .sum()
        })
        .collect();
    let observed = fisher[0];
    let tol = TIE_TOLERANCE * observed.abs().max(1.0);
    let hits = fisher[1..].iter().filter(|&&f| f >= observed - tol).count();

    let partials = groups
        .iter()
        .zip(&prepared)
        .enumerate()
        .map(|(g, (group, p))| {
            let obs = table[0][g];
            let degenerate = p.pool.degenerate();
            PermTestResult {
                scope: group.uda.to_string(),
                observed: if degenerate { 0.0 } else { obs },
                p_value: significance(&sorted_abs[g], obs, p.pool.tol),
                direction: if degenerate { Direction::Equal } else { Direction::of(obs) },
                n_perm,
                seed,
                exhaustive: false,
                degenerate,
                n_top: p.pool.k,
                n_rest: p.pool.n() - p.pool.k,
            }
        })
        .collect::<Vec<_>>();
    let mean_obs = partials.iter().map(|r| r.observed).sum::<f64>() / partials.len() as f64;
    Ok(NpcCombinedResult {
        partials,
        statistic: observed,
        p_value: (hits + 1) as f64 / (n_perm + 1) as f64,
        direction: Direction::of(mean_obs),
        n_perm,
        seed,
        excluded: Vec::new(),
    })
}

/// Builds group data per discipline from its yearly rankings, drops the ones
/// that cannot be split, and combines the rest.
pub fn npc_from_rankings(
    rankings: &BTreeMap<UdaId, Vec<Ranking>>,
    benchmark: Year,
    percentile: f64,
    n_perm: u64,
    seed: u64,
) -> Result<NpcCombinedResult, NpcError> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(NpcError::InvalidPercentile(percentile));
    }
    let mut groups = Vec::new();
    let mut excluded = Vec::new();
    for (uda, r) in rankings {
        match UdaGroupData::from_rankings(uda.clone(), r, benchmark, percentile) {
            Ok(g) => groups.push(g),
            Err(e) => {
                log::warn!("discipline {uda} excluded from the combined test: {e}");
                excluded.push((uda.clone(), e.to_string()));
            }
        }
    }
    if groups.len() < 2 {
        return Err(NpcError::TooFewUdas {
            usable: groups.len(),
            excluded,
        });
    }
    let mut result = npc_fisher_combine(&groups, n_perm, seed)?;
    result.excluded = excluded;
    Ok(result)
}
