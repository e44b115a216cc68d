//! Rankings per observation year and the statistics describing how they move
//! relative to a benchmark year.
//!
//! Ties are handled two ways and both are stored on every [`Ranking`]:
//! competition ranks ("1224") drive rank shifts and ranges, fractional
//! (average) ranks drive correlations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{SdsId, UdaId, UniversityId, Year};
use crate::stats::{self, CentralMoments};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error("cannot rank an empty set of universities")]
    EmptyRanking,
    #[error("university {university} has non-finite score {score}")]
    NonFiniteScore { university: UniversityId, score: f64 },
    #[error(
        "rankings cover different universities (only in first: {}; only in second: {})",
        join(only_first), join(only_second)
    )]
    UniversityMismatch {
        only_first: Vec<UniversityId>,
        only_second: Vec<UniversityId>,
    },
    #[error("no values to describe")]
    EmptyInput,
    #[error("Spearman correlation needs at least 2 universities, got {0}")]
    TooFewForCorrelation(usize),
    #[error("Spearman correlation undefined: all universities tied in one ranking")]
    UndefinedCorrelation,
    #[error("quartile classes need at least 4 universities, got {0}")]
    TooFewForQuartiles(usize),
    #[error("benchmark year {0} has no ranking")]
    MissingBenchmark(Year),
    #[error("need rankings for at least 2 observation years, got {0}")]
    TooFewYears(usize),
}

fn join(ids: &[UniversityId]) -> String {
    if ids.is_empty() {
        "-".to_owned()
    } else {
        ids.iter().map(|u| u.as_str()).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeLevel {
    Sds,
    Uda,
}

impl fmt::Display for ScopeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sds => "sds",
            Self::Uda => "uda",
        })
    }
}

impl FromStr for ScopeLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sds" => Ok(Self::Sds),
            "uda" => Ok(Self::Uda),
            other => Err(format!("unknown level {other:?} (expected uda or sds)")),
        }
    }
}

/// The field or discipline a ranking is computed for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Sds(SdsId),
    Uda(UdaId),
}

impl Scope {
    pub fn level(&self) -> ScopeLevel {
        match self {
            Self::Sds(_) => ScopeLevel::Sds,
            Self::Uda(_) => ScopeLevel::Uda,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Self::Sds(s) => s.as_str(),
            Self::Uda(u) => u.as_str(),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level(), self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub university: UniversityId,
    pub score: f64,
    /// Competition rank, 1 = highest score.
    pub rank: u32,
    /// Average rank over tied positions.
    pub fractional_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    scope: Scope,
    obs_year: Year,
    entries: Vec<RankEntry>,
    positions: BTreeMap<UniversityId, usize>,
}

impl Ranking {
    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn obs_year(&self) -> Year {
        self.obs_year
    }

    /// Entries ordered by rank, then university id.
    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, university: &UniversityId) -> Option<&RankEntry> {
        self.positions.get(university).map(|&i| &self.entries[i])
    }

    pub fn rank_of(&self, university: &UniversityId) -> Option<u32> {
        self.get(university).map(|e| e.rank)
    }

    pub fn universities(&self) -> impl Iterator<Item = &UniversityId> {
        self.positions.keys()
    }

    fn check_same_universities(&self, other: &Ranking) -> Result<(), SensitivityError> {
        let a: BTreeSet<_> = self.positions.keys().collect();
        let b: BTreeSet<_> = other.positions.keys().collect();
        if a == b {
            return Ok(());
        }
        Err(SensitivityError::UniversityMismatch {
            only_first: a.difference(&b).map(|u| (*u).clone()).collect(),
            only_second: b.difference(&a).map(|u| (*u).clone()).collect(),
        })
    }
}

/// Orders universities by descending score.
pub fn rank_universities(
    scope: Scope,
    obs_year: Year,
    scores: &BTreeMap<UniversityId, f64>,
) -> Result<Ranking, SensitivityError> {
    if scores.is_empty() {
        return Err(SensitivityError::EmptyRanking);
    }
    if let Some((u, &s)) = scores.iter().find(|(_, s)| !s.is_finite()) {
        return Err(SensitivityError::NonFiniteScore {
            university: u.clone(),
            score: s,
        });
    }
    let ids: Vec<&UniversityId> = scores.keys().collect();
    let values: Vec<f64> = scores.values().copied().collect();
    let ranks = stats::competition_ranks_desc(&values);
    let fractional = stats::fractional_ranks_desc(&values);
    let mut entries: Vec<RankEntry> = ids
        .into_iter()
        .enumerate()
        .map(|(i, u)| RankEntry {
            university: u.clone(),
            score: values[i],
            rank: ranks[i],
            fractional_rank: fractional[i],
        })
        .collect();
    entries.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.university.cmp(&b.university)));
    let positions = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.university.clone(), i))
        .collect();
    Ok(Ranking {
        scope,
        obs_year,
        entries,
        positions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankShift {
    /// `rank_year − rank_benchmark`; positive means ranked worse in that year.
    pub signed: i64,
    pub absolute: u32,
}

pub fn rank_shifts(
    ranking: &Ranking,
    benchmark: &Ranking,
) -> Result<BTreeMap<UniversityId, RankShift>, SensitivityError> {
    ranking.check_same_universities(benchmark)?;
    Ok(ranking
        .entries
        .iter()
        .map(|e| {
            let b = benchmark.rank_of(&e.university).expect("same university set");
            let signed = i64::from(e.rank) - i64::from(b);
            (
                e.university.clone(),
                RankShift {
                    signed,
                    absolute: signed.unsigned_abs() as u32,
                },
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    /// `None` when the variance is zero.
    pub skewness: Option<f64>,
    /// Excess kurtosis; `None` when the variance is zero.
    pub kurtosis: Option<f64>,
}

/// Mean, median, population standard deviation, skewness and excess kurtosis.
pub fn shift_descriptives(values: &[f64]) -> Result<ShiftStats, SensitivityError> {
    let m = CentralMoments::from_slice(values).ok_or(SensitivityError::EmptyInput)?;
    Ok(ShiftStats {
        n: m.n,
        mean: m.mean,
        median: stats::median(values).ok_or(SensitivityError::EmptyInput)?,
        std_dev: m.std_dev(),
        skewness: m.skewness(),
        kurtosis: m.excess_kurtosis(),
    })
}

/// Pearson correlation of the fractional ranks of the two rankings.
pub fn spearman_rho(a: &Ranking, b: &Ranking) -> Result<f64, SensitivityError> {
    a.check_same_universities(b)?;
    if a.len() < 2 {
        return Err(SensitivityError::TooFewForCorrelation(a.len()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .positions
        .keys()
        .map(|u| {
            (
                a.get(u).expect("present").fractional_rank,
                b.get(u).expect("present").fractional_rank,
            )
        })
        .unzip();
    stats::pearson(&x, &y).ok_or(SensitivityError::UndefinedCorrelation)
}

fn by_year(rankings: &[Ranking]) -> BTreeMap<Year, &Ranking> {
    rankings.iter().map(|r| (r.obs_year, r)).collect()
}

/// Fraction of universities whose rank is not constant across all rankings.
pub fn pct_any_change(rankings: &[Ranking]) -> Result<f64, SensitivityError> {
    let first = rankings.first().ok_or(SensitivityError::EmptyInput)?;
    for r in &rankings[1..] {
        first.check_same_universities(r)?;
    }
    let changed = first
        .universities()
        .filter(|u| {
            let r0 = first.rank_of(u);
            rankings.iter().any(|r| r.rank_of(u) != r0)
        })
        .count();
    Ok(changed as f64 / first.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySummary {
    pub universities: usize,
    /// Fraction in [0, 1].
    pub pct_any_change: f64,
    /// Mean, median and standard deviation over universities of each
    /// university's mean absolute shift against the benchmark.
    pub average: f64,
    pub median: f64,
    pub std_dev: f64,
    /// Largest rank range (max − min) of any university across all years.
    pub max_ranking_variation: u32,
    pub per_university_mean_shift: BTreeMap<UniversityId, f64>,
}

pub fn stability_summary(
    rankings: &[Ranking],
    benchmark_year: Year,
) -> Result<StabilitySummary, SensitivityError> {
    let years = by_year(rankings);
    if years.len() < 2 {
        return Err(SensitivityError::TooFewYears(years.len()));
    }
    let bench = *years
        .get(&benchmark_year)
        .ok_or(SensitivityError::MissingBenchmark(benchmark_year))?;
    let others: Vec<&Ranking> = years
        .iter()
        .filter(|(y, _)| **y != benchmark_year)
        .map(|(_, r)| *r)
        .collect();
    let shifts = others
        .iter()
        .map(|r| rank_shifts(r, bench))
        .collect::<Result<Vec<_>, _>>()?;
    let per_university_mean_shift: BTreeMap<UniversityId, f64> = bench
        .universities()
        .map(|u| {
            let total: f64 = shifts.iter().map(|s| f64::from(s[u].absolute)).sum();
            (u.clone(), total / shifts.len() as f64)
        })
        .collect();
    let means: Vec<f64> = per_university_mean_shift.values().copied().collect();
    let d = shift_descriptives(&means)?;
    let ranges = rank_ranges(rankings)?;
    Ok(StabilitySummary {
        universities: bench.len(),
        pct_any_change: pct_any_change(rankings)?,
        average: d.mean,
        median: d.median,
        std_dev: d.std_dev,
        max_ranking_variation: ranges
            .iter()
            .map(|r| r.max_rank - r.min_rank)
            .max()
            .unwrap_or(0),
        per_university_mean_shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallShiftPcts {
    /// Fraction of universities with no shift.
    pub no_change: f64,
    /// Fraction of universities shifting at most three positions.
    pub leq_three: f64,
}

impl SmallShiftPcts {
    /// Both fractions as whole percentages.
    pub fn rounded_percent(&self) -> (u32, u32) {
        (
            (self.no_change * 100.0).round() as u32,
            (self.leq_three * 100.0).round() as u32,
        )
    }
}

pub fn no_change_and_small_shift_pcts(
    ranking: &Ranking,
    benchmark: &Ranking,
) -> Result<SmallShiftPcts, SensitivityError> {
    let shifts = rank_shifts(ranking, benchmark)?;
    let n = shifts.len() as f64;
    let zero = shifts.values().filter(|s| s.absolute == 0).count() as f64;
    let small = shifts.values().filter(|s| s.absolute <= 3).count() as f64;
    Ok(SmallShiftPcts {
        no_change: zero / n,
        leq_three: small / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuartileAssignment {
    /// Class 4 is the top quartile, class 1 the bottom.
    pub classes: BTreeMap<UniversityId, u8>,
    /// 25th, 50th and 75th percentile boundaries.
    pub boundaries: [f64; 3],
}

/// Assigns class 4 to scores strictly above the 75th percentile, 3 above the
/// median, 2 above the 25th percentile and 1 otherwise. Percentiles use
/// linear interpolation, so tied scores always share a class.
pub fn quartile_classes(
    scores: &BTreeMap<UniversityId, f64>,
) -> Result<QuartileAssignment, SensitivityError> {
    if scores.len() < 4 {
        return Err(SensitivityError::TooFewForQuartiles(scores.len()));
    }
    let mut sorted: Vec<f64> = scores.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let q = |p| stats::quantile_sorted(&sorted, p).expect("nonempty");
    let boundaries = [q(0.25), q(0.5), q(0.75)];
    let classes = scores
        .iter()
        .map(|(u, &s)| {
            let class = 1 + boundaries.iter().filter(|&&b| s > b).count() as u8;
            (u.clone(), class)
        })
        .collect();
    Ok(QuartileAssignment {
        classes,
        boundaries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuartileShiftRow {
    pub year: Year,
    pub average_shift: f64,
    /// Universities moving two or three classes.
    pub outliers: usize,
    pub max_shift: u8,
}

pub fn quartile_shift_stats(
    assignments: &BTreeMap<Year, QuartileAssignment>,
    benchmark_year: Year,
) -> Result<Vec<QuartileShiftRow>, SensitivityError> {
    let bench = assignments
        .get(&benchmark_year)
        .ok_or(SensitivityError::MissingBenchmark(benchmark_year))?;
    let bench_set: BTreeSet<&UniversityId> = bench.classes.keys().collect();
    let mut rows = Vec::new();
    for (&year, a) in assignments {
        if year == benchmark_year {
            continue;
        }
        let set: BTreeSet<&UniversityId> = a.classes.keys().collect();
        if set != bench_set {
            return Err(SensitivityError::UniversityMismatch {
                only_first: set.difference(&bench_set).map(|u| (*u).clone()).collect(),
                only_second: bench_set.difference(&set).map(|u| (*u).clone()).collect(),
            });
        }
        let shifts: Vec<u8> = bench
            .classes
            .iter()
            .map(|(u, &c)| a.classes[u].abs_diff(c))
            .collect();
        let total: u32 = shifts.iter().map(|&s| u32::from(s)).sum();
        rows.push(QuartileShiftRow {
            year,
            average_shift: f64::from(total) / shifts.len() as f64,
            outliers: shifts.iter().filter(|&&s| s >= 2).count(),
            max_shift: shifts.iter().copied().max().unwrap_or(0),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankRange {
    pub university: UniversityId,
    pub min_rank: u32,
    pub max_rank: u32,
}

/// Best and worst rank of each university across the given rankings.
pub fn rank_ranges(rankings: &[Ranking]) -> Result<Vec<RankRange>, SensitivityError> {
    let first = rankings.first().ok_or(SensitivityError::EmptyInput)?;
    for r in &rankings[1..] {
        first.check_same_universities(r)?;
    }
    Ok(first
        .universities()
        .map(|u| {
            let ranks = rankings.iter().map(|r| r.rank_of(u).expect("same set"));
            let (lo, hi) = ranks.fold((u32::MAX, 0), |(lo, hi), r| (lo.min(r), hi.max(r)));
            RankRange {
                university: u.clone(),
                min_rank: lo,
                max_rank: hi,
            }
        })
        .collect())
}

/// All sensitivity statistics of one scope.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeSensitivity {
    pub scope: Scope,
    pub benchmark_year: Year,
    /// Shift statistics per non-benchmark year.
    pub descriptives: BTreeMap<Year, ShiftStats>,
    /// `None` where the correlation is undefined.
    pub spearman: BTreeMap<Year, Option<f64>>,
    pub summary: StabilitySummary,
    /// Earliest year against the benchmark.
    pub small_shifts: (Year, SmallShiftPcts),
    /// `None` when the scope has fewer than four universities.
    pub quartiles: Option<Vec<QuartileShiftRow>>,
    pub ranges: Vec<RankRange>,
}

pub fn analyze_scope(
    rankings: &[Ranking],
    benchmark_year: Year,
) -> Result<ScopeSensitivity, SensitivityError> {
    let years = by_year(rankings);
    let bench = *years
        .get(&benchmark_year)
        .ok_or(SensitivityError::MissingBenchmark(benchmark_year))?;
    let summary = stability_summary(rankings, benchmark_year)?;

    let mut descriptives = BTreeMap::new();
    let mut spearman = BTreeMap::new();
    for (&year, r) in years.iter().filter(|(y, _)| **y != benchmark_year) {
        let shifts = rank_shifts(r, bench)?;
        let abs: Vec<f64> = shifts.values().map(|s| f64::from(s.absolute)).collect();
        descriptives.insert(year, shift_descriptives(&abs)?);
        let rho = match spearman_rho(r, bench) {
            Ok(v) => Some(v),
            Err(SensitivityError::TooFewForCorrelation(_))
            | Err(SensitivityError::UndefinedCorrelation) => None,
            Err(e) => return Err(e),
        };
        spearman.insert(year, rho);
    }

    let (&first_year, first) = years
        .iter()
        .find(|(y, _)| **y != benchmark_year)
        .expect("at least two years");
    let small_shifts = (first_year, no_change_and_small_shift_pcts(first, bench)?);

    let quartiles = if bench.len() >= 4 {
        let assignments = years
            .iter()
            .map(|(&y, r)| {
                let scores: BTreeMap<UniversityId, f64> = r
                    .entries()
                    .iter()
                    .map(|e| (e.university.clone(), e.score))
                    .collect();
                Ok((y, quartile_classes(&scores)?))
            })
            .collect::<Result<BTreeMap<_, _>, SensitivityError>>()?;
        Some(quartile_shift_stats(&assignments, benchmark_year)?)
    } else {
        None
    };

    Ok(ScopeSensitivity {
        scope: bench.scope().clone(),
        benchmark_year,
        descriptives,
        spearman,
        summary,
        small_shifts,
        quartiles,
        ranges: rank_ranges(rankings)?,
    })
}
