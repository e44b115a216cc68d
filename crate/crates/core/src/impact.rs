//! Citation medians per (publication year, category, observation year) and the
//! Article Impact Index.
//!
//! The reference set for a median is every publication of the loaded corpus
//! sharing the publication year and category. Uncited publications are left
//! out of the median, so a stored median is always positive.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{CategoryId, Corpus, PubId, PublicationRecord, Year};
use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImpactError {
    #[error("publication {pub_id} has no citation count for {obs_year}")]
    MissingCitations { pub_id: PubId, obs_year: Year },
    #[error(
        "median table has no entry for publication {pub_id} in category {category} \
         (published {pub_year}, observed {obs_year})"
    )]
    MissingMedian {
        pub_id: PubId,
        category: CategoryId,
        pub_year: Year,
        obs_year: Year,
    },
}

/// Medians of citation counts over cited publications.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MedianTable {
    entries: BTreeMap<(Year, CategoryId, Year), f64>,
}

impl MedianTable {
    pub fn get(&self, pub_year: Year, category: &CategoryId, obs_year: Year) -> Option<f64> {
        self.entries
            .get(&(pub_year, category.clone(), obs_year))
            .copied()
    }

    pub fn insert(&mut self, pub_year: Year, category: CategoryId, obs_year: Year, median: f64) {
        self.entries.insert((pub_year, category, obs_year), median);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(pub_year, category, obs_year, median)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (Year, &CategoryId, Year, f64)> {
        self.entries.iter().map(|((py, c, oy), m)| (*py, c, *oy, *m))
    }

    /// Adds every entry of `other`, replacing existing keys.
    pub fn extend(&mut self, other: MedianTable) {
        self.entries.extend(other.entries);
    }

    /// Diagnostic dump: `pub_year,category_id,obs_year,median`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["pub_year", "category_id", "obs_year", "median"])?;
        for (py, c, oy, m) in self.iter() {
            out.write_record([py.to_string(), c.to_string(), oy.to_string(), format!("{m}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Field-normalized impact of a single publication.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ImpactScore(f64);

impl ImpactScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

fn citations_at(p: &PublicationRecord, obs_year: Year) -> Result<u64, ImpactError> {
    p.citations_at(obs_year)
        .ok_or_else(|| ImpactError::MissingCitations {
            pub_id: p.id().clone(),
            obs_year,
        })
}

/// Builds the median table for one observation year over the whole corpus.
pub fn compute_median_table(corpus: &Corpus, obs_year: Year) -> Result<MedianTable, ImpactError> {
    let mut cells: BTreeMap<(Year, &CategoryId), Vec<u64>> = BTreeMap::new();
    for p in corpus.publications() {
        let c = citations_at(p, obs_year)?;
        for cw in p.categories() {
            let cell = cells.entry((p.year(), &cw.category)).or_default();
            if c > 0 {
                cell.push(c);
            }
        }
    }
    let entries = cells
        .into_par_iter()
        .filter_map(|((pub_year, cat), mut counts)| {
            if counts.is_empty() {
                return None;
            }
            counts.sort_unstable();
            let sorted: Vec<f64> = counts.into_iter().map(|c| c as f64).collect();
            let m = stats::median_sorted(&sorted)?;
            Some(((pub_year, cat.clone(), obs_year), m))
        })
        .collect();
    Ok(MedianTable { entries })
}

/// `Σ_j weight_j · c / median_j`; zero for an uncited publication.
pub fn article_impact_index(
    publication: &PublicationRecord,
    obs_year: Year,
    medians: &MedianTable,
) -> Result<ImpactScore, ImpactError> {
    let c = citations_at(publication, obs_year)?;
    if c == 0 {
        return Ok(ImpactScore(0.0));
    }
    let c = c as f64;
    let mut total = 0.0;
    for cw in publication.categories() {
        let m = medians
            .get(publication.year(), &cw.category, obs_year)
            .ok_or_else(|| ImpactError::MissingMedian {
                pub_id: publication.id().clone(),
                category: cw.category.clone(),
                pub_year: publication.year(),
                obs_year,
            })?;
        total += cw.weight * (c / m);
    }
    Ok(ImpactScore(total))
}

/// AII of every publication in the corpus at `obs_year`.
pub fn impact_scores(
    corpus: &Corpus,
    obs_year: Year,
    medians: &MedianTable,
) -> Result<BTreeMap<PubId, f64>, ImpactError> {
    corpus
        .publications()
        .map(|p| Ok((p.id().clone(), article_impact_index(p, obs_year, medians)?.value())))
        .collect()
}
