//! Scientific Strength, SDS productivity, national baselines and
//! discipline-level productivity.
//!
//! For a university × SDS cell, Scientific Strength `SS` is the sum of the AII
//! of the distinct publications its researchers authored in the publication
//! period, and productivity is `p = SS / RS` with `RS` the cell's staff count.
//! Discipline (UDA) productivity weights each SDS by its share of the
//! university's UDA staff after normalizing by the national baseline `p̄`:
//!
//! ```text
//! P = Σ_w (p_w / p̄_w) · (RS_w / RS)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CellKey, Corpus, PubId, SdsId, UdaId, UniversityId, Year, YearRange};
use crate::impact::{self, ImpactError, MedianTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductivityError {
    #[error(transparent)]
    Impact(#[from] ImpactError),
    #[error("university {university} has no staff in SDS {sds}")]
    InactiveCell {
        university: UniversityId,
        sds: SdsId,
    },
    #[error("no university is active in SDS {sds}")]
    NoActiveUniversity { sds: SdsId },
    #[error("cell of SDS {found} passed to the baseline of SDS {expected}")]
    CellMismatch { expected: SdsId, found: SdsId },
    #[error("university {university} has no staff in UDA {uda}")]
    NoStaff {
        university: UniversityId,
        uda: UdaId,
    },
    #[error("no national baseline for SDS {sds}")]
    MissingBaseline { sds: SdsId },
    #[error("SDS {sds}: baseline is 0 but university productivity is {productivity}")]
    InconsistentBaseline { sds: SdsId, productivity: f64 },
}

/// How the national baseline `p̄` of an SDS is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineRule {
    /// `Σ SS / Σ RS` over active universities.
    #[default]
    Aggregate,
    /// Unweighted mean of the universities' `p`.
    #[serde(rename = "mean")]
    UnweightedMean,
}

impl fmt::Display for BaselineRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Aggregate => "aggregate",
            Self::UnweightedMean => "mean",
        })
    }
}

impl FromStr for BaselineRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aggregate" => Ok(Self::Aggregate),
            "mean" | "unweighted-mean" => Ok(Self::UnweightedMean),
            other => Err(format!(
                "unknown baseline rule {other:?} (expected aggregate or mean)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellInputs {
    pub university: UniversityId,
    pub sds: SdsId,
    pub obs_year: Year,
    pub strength: f64,
    pub staff: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductivityCell {
    pub university: UniversityId,
    pub sds: SdsId,
    pub obs_year: Year,
    /// Scientific Strength (SS).
    pub strength: f64,
    /// Research staff (RS).
    pub staff: u32,
    /// `SS / RS`.
    pub productivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NationalBaseline {
    pub sds: SdsId,
    pub obs_year: Year,
    pub value: f64,
    pub universities: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdsContribution {
    pub sds: SdsId,
    pub staff: u32,
    pub productivity: f64,
    pub baseline: f64,
    /// `(p / p̄) · (RS_w / RS)`.
    pub value: f64,
    /// Set when `p̄ = 0`; the contribution is then 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UdaProductivity {
    pub university: UniversityId,
    pub uda: UdaId,
    pub obs_year: Year,
    pub score: f64,
    pub staff: u32,
    pub contributions: Vec<SdsContribution>,
}

/// Sum of the AII of the distinct publications in `period` authored by staff
/// of `(university, sds)`.
pub fn scientific_strength(
    corpus: &Corpus,
    university: &UniversityId,
    sds: &SdsId,
    period: YearRange,
    obs_year: Year,
    medians: &MedianTable,
) -> Result<f64, ImpactError> {
    let Some(cell) = corpus.cell(university, sds) else {
        return Ok(0.0);
    };
    let mut total = 0.0;
    for id in &cell.publications {
        let p = corpus.publication(id).expect("corpus index is consistent");
        if period.contains(p.year()) {
            total += impact::article_impact_index(p, obs_year, medians)?.value();
        }
    }
    Ok(total)
}

fn strength_from_scores(
    corpus: &Corpus,
    pubs: &BTreeSet<PubId>,
    period: YearRange,
    scores: &BTreeMap<PubId, f64>,
) -> f64 {
    pubs.iter()
        .filter(|id| {
            corpus
                .publication(id)
                .is_some_and(|p| period.contains(p.year()))
        })
        .map(|id| scores[id])
        .sum()
}

pub fn sds_productivity(inputs: CellInputs) -> Result<ProductivityCell, ProductivityError> {
    if inputs.staff == 0 {
        return Err(ProductivityError::InactiveCell {
            university: inputs.university,
            sds: inputs.sds,
        });
    }
    Ok(ProductivityCell {
        productivity: inputs.strength / f64::from(inputs.staff),
        university: inputs.university,
        sds: inputs.sds,
        obs_year: inputs.obs_year,
        strength: inputs.strength,
        staff: inputs.staff,
    })
}

pub fn national_baseline<'a>(
    sds: &SdsId,
    obs_year: Year,
    cells: impl IntoIterator<Item = &'a ProductivityCell>,
    rule: BaselineRule,
) -> Result<NationalBaseline, ProductivityError> {
    let (mut ss, mut rs, mut p_sum, mut n) = (0.0, 0u64, 0.0, 0usize);
    for c in cells {
        if &c.sds != sds {
            return Err(ProductivityError::CellMismatch {
                expected: sds.clone(),
                found: c.sds.clone(),
            });
        }
        ss += c.strength;
        rs += u64::from(c.staff);
        p_sum += c.productivity;
        n += 1;
    }
    if n == 0 {
        return Err(ProductivityError::NoActiveUniversity { sds: sds.clone() });
    }
    let value = match rule {
        BaselineRule::Aggregate => ss / rs as f64,
        BaselineRule::UnweightedMean => p_sum / n as f64,
    };
    Ok(NationalBaseline {
        sds: sds.clone(),
        obs_year,
        value,
        universities: n,
    })
}

/// Discipline productivity of one university from its SDS cells in the UDA.
pub fn uda_productivity(
    university: &UniversityId,
    uda: &UdaId,
    cells: &[&ProductivityCell],
    baselines: &BTreeMap<SdsId, NationalBaseline>,
) -> Result<UdaProductivity, ProductivityError> {
    let staff: u32 = cells.iter().map(|c| c.staff).sum();
    if staff == 0 {
        return Err(ProductivityError::NoStaff {
            university: university.clone(),
            uda: uda.clone(),
        });
    }
    let obs_year = cells.first().map_or(0, |c| c.obs_year);
    let mut contributions = Vec::with_capacity(cells.len());
    let mut score = 0.0;
    for c in cells {
        let baseline = baselines
            .get(&c.sds)
            .ok_or_else(|| ProductivityError::MissingBaseline { sds: c.sds.clone() })?
            .value;
        let (value, undefined) = if baseline > 0.0 {
            (
                (c.productivity / baseline) * (f64::from(c.staff) / f64::from(staff)),
                false,
            )
        } else if c.productivity == 0.0 {
            (0.0, true)
        } else {
            return Err(ProductivityError::InconsistentBaseline {
                sds: c.sds.clone(),
                productivity: c.productivity,
            });
        };
        score += value;
        contributions.push(SdsContribution {
            sds: c.sds.clone(),
            staff: c.staff,
            productivity: c.productivity,
            baseline,
            value,
            undefined,
        });
    }
    Ok(UdaProductivity {
        university: university.clone(),
        uda: uda.clone(),
        obs_year,
        score,
        staff,
        contributions,
    })
}

/// Every productivity figure of one observation year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearProductivity {
    pub obs_year: Year,
    pub cells: BTreeMap<CellKey, ProductivityCell>,
    pub baselines: BTreeMap<SdsId, NationalBaseline>,
    pub udas: BTreeMap<UdaId, BTreeMap<UniversityId, UdaProductivity>>,
    pub warnings: Vec<String>,
}

impl YearProductivity {
    /// University `p` per retained SDS.
    pub fn sds_scores(&self) -> BTreeMap<SdsId, BTreeMap<UniversityId, f64>> {
        let mut out: BTreeMap<SdsId, BTreeMap<UniversityId, f64>> = BTreeMap::new();
        for (key, cell) in &self.cells {
            out.entry(key.sds.clone())
                .or_default()
                .insert(key.university.clone(), cell.productivity);
        }
        out
    }

    /// University `P` per UDA.
    pub fn uda_scores(&self) -> BTreeMap<UdaId, BTreeMap<UniversityId, f64>> {
        self.udas
            .iter()
            .map(|(uda, rows)| {
                (
                    uda.clone(),
                    rows.iter().map(|(u, p)| (u.clone(), p.score)).collect(),
                )
            })
            .collect()
    }
}

/// Runs medians → AII → SS → p → p̄ → P for one observation year over the
/// retained SDSs.
pub fn evaluate_year(
    corpus: &Corpus,
    retained: &BTreeSet<SdsId>,
    period: YearRange,
    obs_year: Year,
    rule: BaselineRule,
) -> Result<YearProductivity, ProductivityError> {
    let medians = impact::compute_median_table(corpus, obs_year)?;
    let scores = impact::impact_scores(corpus, obs_year, &medians)?;

    let active: Vec<(&CellKey, &crate::corpus::CellMembers)> = corpus
        .cells()
        .filter(|(k, m)| retained.contains(&k.sds) && !m.researchers.is_empty())
        .collect();
    let cells: BTreeMap<CellKey, ProductivityCell> = active
        .par_iter()
        .map(|(key, members)| {
            let strength = strength_from_scores(corpus, &members.publications, period, &scores);
            let cell = sds_productivity(CellInputs {
                university: key.university.clone(),
                sds: key.sds.clone(),
                obs_year,
                strength,
                staff: members.researchers.len() as u32,
            })?;
            Ok(((*key).clone(), cell))
        })
        .collect::<Result<_, ProductivityError>>()?;

    let mut by_sds: BTreeMap<&SdsId, Vec<&ProductivityCell>> = BTreeMap::new();
    for (key, cell) in &cells {
        by_sds.entry(&key.sds).or_default().push(cell);
    }
    let mut warnings = Vec::new();
    let mut baselines = BTreeMap::new();
    for sds in retained {
        match by_sds.get(sds) {
            Some(list) => {
                let b = national_baseline(sds, obs_year, list.iter().copied(), rule)?;
                if b.value == 0.0 {
                    warnings.push(format!(
                        "SDS {sds}: national baseline is 0 in {obs_year}; its contributions are undefined"
                    ));
                }
                baselines.insert(sds.clone(), b);
            }
            None => warnings.push(format!(
                "SDS {sds}: no active university, dropped from UDA aggregation"
            )),
        }
    }

    let taxonomy = corpus.taxonomy();
    let mut grouped: BTreeMap<(&UdaId, &UniversityId), Vec<&ProductivityCell>> = BTreeMap::new();
    for (key, cell) in &cells {
        if let Some(uda) = taxonomy.uda_of(&key.sds) {
            grouped.entry((uda, &key.university)).or_default().push(cell);
        }
    }
    let mut udas: BTreeMap<UdaId, BTreeMap<UniversityId, UdaProductivity>> = BTreeMap::new();
    for ((uda, university), list) in grouped {
        let p = uda_productivity(university, uda, &list, &baselines)?;
        udas.entry(uda.clone())
            .or_default()
            .insert(university.clone(), p);
    }

    Ok(YearProductivity {
        obs_year,
        cells,
        baselines,
        udas,
        warnings,
    })
}
