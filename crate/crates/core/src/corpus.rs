//! Domain model: publications, researchers, authorship and the field taxonomy.
//!
//! A [`Corpus`] is immutable once built. Construction checks every
//! cross-reference and derives two indexes: the members and publications of
//! each university × SDS cell, and the publications of each researcher.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Calendar year.
pub type Year = i32;

/// Tolerance on the sum of a publication's category weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Publication identifier.
    PubId
);
id_type!(
    /// Researcher identifier.
    ResearcherId
);
id_type!(
    /// University identifier.
    UniversityId
);
id_type!(
    /// Scientific disciplinary sector (field) identifier.
    SdsId
);
id_type!(
    /// University disciplinary area (discipline) identifier.
    UdaId
);
id_type!(
    /// Subject category identifier used for citation normalization.
    CategoryId
);

/// Inclusive range of publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: Year,
    pub end: Year,
}

impl YearRange {
    pub fn new(start: Year, end: Year) -> Result<Self, CorpusError> {
        if start > end {
            return Err(CorpusError::EmptyPeriod { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, year: Year) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

impl FromStr for YearRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<Year>()
                .map_err(|e| format!("invalid year {t:?} in period {s:?}: {e}"))
        };
        let (start, end) = match s.split_once('-') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let y = parse(s)?;
                (y, y)
            }
        };
        YearRange::new(start, end).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("publication period {start}-{end} is empty")]
    EmptyPeriod { start: Year, end: Year },
    #[error("publication {pub_id} has no subject categories")]
    EmptyCategories { pub_id: PubId },
    #[error("publication {pub_id}: weight {weight} of category {category} is outside (0, 1]")]
    InvalidWeight {
        pub_id: PubId,
        category: CategoryId,
        weight: f64,
    },
    #[error("publication {pub_id}: category weights sum to {sum}, expected 1")]
    WeightSum { pub_id: PubId, sum: f64 },
    #[error("publication {pub_id}: category {category} listed twice")]
    DuplicateCategory { pub_id: PubId, category: CategoryId },
    #[error("publication {pub_id} (published {pub_year}) has citations observed in {obs_year}")]
    ObservationBeforePublication {
        pub_id: PubId,
        pub_year: Year,
        obs_year: Year,
    },
    #[error(
        "publication {pub_id}: cumulative citations decrease from {earlier} in {earlier_year} \
         to {later} in {later_year}"
    )]
    DecreasingCitations {
        pub_id: PubId,
        earlier_year: Year,
        earlier: u64,
        later_year: Year,
        later: u64,
    },
    #[error("duplicate publication {pub_id}")]
    DuplicatePublication { pub_id: PubId, index: usize },
    #[error("duplicate researcher {researcher_id}")]
    DuplicateResearcher {
        researcher_id: ResearcherId,
        index: usize,
    },
    #[error("SDS {sds_id} is mapped to more than one UDA")]
    DuplicateSds { sds_id: SdsId, index: usize },
    #[error("researcher {researcher_id} references unknown SDS {sds_id}")]
    UnknownSds {
        researcher_id: ResearcherId,
        sds_id: SdsId,
        index: usize,
    },
    #[error("authorship references unknown publication {pub_id}")]
    UnknownPublication { pub_id: PubId, index: usize },
    #[error("authorship references unknown researcher {researcher_id}")]
    UnknownResearcher {
        researcher_id: ResearcherId,
        index: usize,
    },
    #[error("duplicate authorship ({pub_id}, {researcher_id})")]
    DuplicateAuthorship {
        pub_id: PubId,
        researcher_id: ResearcherId,
        index: usize,
    },
}

impl CorpusError {
    /// Position of the offending record in its input collection, when the
    /// error points at one.
    pub fn record_index(&self) -> Option<usize> {
        match self {
            Self::DuplicatePublication { index, .. }
            | Self::DuplicateResearcher { index, .. }
            | Self::DuplicateSds { index, .. }
            | Self::UnknownSds { index, .. }
            | Self::UnknownPublication { index, .. }
            | Self::UnknownResearcher { index, .. }
            | Self::DuplicateAuthorship { index, .. } => Some(*index),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryWeight {
    pub category: CategoryId,
    pub weight: f64,
}

impl CategoryWeight {
    pub fn new(category: impl Into<CategoryId>, weight: f64) -> Self {
        Self {
            category: category.into(),
            weight,
        }
    }
}

/// A publication with its subject categories and cumulative citation counts
/// observed at December 31 of each observation year.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicationRecord {
    id: PubId,
    year: Year,
    categories: Vec<CategoryWeight>,
    citations: BTreeMap<Year, u64>,
}

impl PublicationRecord {
    pub fn new(
        id: impl Into<PubId>,
        year: Year,
        categories: Vec<CategoryWeight>,
        citations: BTreeMap<Year, u64>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if categories.is_empty() {
            return Err(CorpusError::EmptyCategories { pub_id: id });
        }
        let mut seen = BTreeSet::new();
        for c in &categories {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(CorpusError::InvalidWeight {
                    pub_id: id,
                    category: c.category.clone(),
                    weight: c.weight,
                });
            }
            if !seen.insert(&c.category) {
                return Err(CorpusError::DuplicateCategory {
                    pub_id: id.clone(),
                    category: c.category.clone(),
                });
            }
        }
        let sum: f64 = categories.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(CorpusError::WeightSum { pub_id: id, sum });
        }
        if let Some((&first, _)) = citations.iter().next() {
            if first < year {
                return Err(CorpusError::ObservationBeforePublication {
                    pub_id: id,
                    pub_year: year,
                    obs_year: first,
                });
            }
        }
        for ((&y0, &c0), (&y1, &c1)) in citations.iter().zip(citations.iter().skip(1)) {
            if c1 < c0 {
                return Err(CorpusError::DecreasingCitations {
                    pub_id: id,
                    earlier_year: y0,
                    earlier: c0,
                    later_year: y1,
                    later: c1,
                });
            }
        }
        Ok(Self {
            id,
            year,
            categories,
            citations,
        })
    }

    /// Builds a record whose `k` categories each carry weight `1/k`.
    pub fn with_uniform_weights(
        id: impl Into<PubId>,
        year: Year,
        categories: Vec<CategoryId>,
        citations: BTreeMap<Year, u64>,
    ) -> Result<Self, CorpusError> {
        let k = categories.len() as f64;
        let weighted = categories
            .into_iter()
            .map(|c| CategoryWeight {
                category: c,
                weight: 1.0 / k,
            })
            .collect();
        Self::new(id, year, weighted, citations)
    }

    pub fn id(&self) -> &PubId {
        &self.id
    }

    pub fn year(&self) -> Year {
        self.year
    }

    pub fn categories(&self) -> &[CategoryWeight] {
        &self.categories
    }

    pub fn citations(&self) -> &BTreeMap<Year, u64> {
        &self.citations
    }

    pub fn citations_at(&self, obs_year: Year) -> Option<u64> {
        self.citations.get(&obs_year).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearcherRecord {
    pub id: ResearcherId,
    pub university: UniversityId,
    pub sds: SdsId,
}

impl ResearcherRecord {
    pub fn new(
        id: impl Into<ResearcherId>,
        university: impl Into<UniversityId>,
        sds: impl Into<SdsId>,
    ) -> Self {
        Self {
            id: id.into(),
            university: university.into(),
            sds: sds.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuthorshipLink {
    pub publication: PubId,
    pub researcher: ResearcherId,
}

impl AuthorshipLink {
    pub fn new(publication: impl Into<PubId>, researcher: impl Into<ResearcherId>) -> Self {
        Self {
            publication: publication.into(),
            researcher: researcher.into(),
        }
    }
}

/// Mapping from each SDS to the UDA that contains it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldTaxonomy {
    sds_to_uda: BTreeMap<SdsId, UdaId>,
}

impl FieldTaxonomy {
    pub fn new<I, S, U>(pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, U)>,
        S: Into<SdsId>,
        U: Into<UdaId>,
    {
        let mut sds_to_uda = BTreeMap::new();
        for (index, (sds, uda)) in pairs.into_iter().enumerate() {
            let sds = sds.into();
            if sds_to_uda.contains_key(&sds) {
                return Err(CorpusError::DuplicateSds { sds_id: sds, index });
            }
            sds_to_uda.insert(sds, uda.into());
        }
        Ok(Self { sds_to_uda })
    }

    pub fn uda_of(&self, sds: &SdsId) -> Option<&UdaId> {
        self.sds_to_uda.get(sds)
    }

    pub fn contains(&self, sds: &SdsId) -> bool {
        self.sds_to_uda.contains_key(sds)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SdsId, &UdaId)> {
        self.sds_to_uda.iter()
    }

    pub fn sds_ids(&self) -> impl Iterator<Item = &SdsId> {
        self.sds_to_uda.keys()
    }

    pub fn udas(&self) -> BTreeSet<&UdaId> {
        self.sds_to_uda.values().collect()
    }

    pub fn sds_in<'a>(&'a self, uda: &'a UdaId) -> impl Iterator<Item = &'a SdsId> + 'a {
        self.sds_to_uda
            .iter()
            .filter(move |(_, u)| *u == uda)
            .map(|(s, _)| s)
    }

    pub fn len(&self) -> usize {
        self.sds_to_uda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sds_to_uda.is_empty()
    }
}

/// A university × SDS pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub university: UniversityId,
    pub sds: SdsId,
}

impl CellKey {
    pub fn new(university: impl Into<UniversityId>, sds: impl Into<SdsId>) -> Self {
        Self {
            university: university.into(),
            sds: sds.into(),
        }
    }
}

/// Staff and distinct publications of one university × SDS cell.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellMembers {
    pub researchers: BTreeSet<ResearcherId>,
    pub publications: BTreeSet<PubId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusIndex {
    pub cells: BTreeMap<CellKey, CellMembers>,
    pub pubs_by_researcher: BTreeMap<ResearcherId, BTreeSet<PubId>>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    publications: BTreeMap<PubId, PublicationRecord>,
    researchers: BTreeMap<ResearcherId, ResearcherRecord>,
    authorships: Vec<AuthorshipLink>,
    taxonomy: FieldTaxonomy,
    index: CorpusIndex,
}

impl Corpus {
    /// Checks every cross-reference and builds the cell indexes.
    ///
    /// Authorship links are kept in input order. A publication co-authored by
    /// several researchers of one cell is listed once in that cell, and once
    /// in every other cell one of its authors belongs to.
    pub fn build(
        publications: Vec<PublicationRecord>,
        researchers: Vec<ResearcherRecord>,
        authorships: Vec<AuthorshipLink>,
        taxonomy: FieldTaxonomy,
    ) -> Result<Self, CorpusError> {
        let mut pubs = BTreeMap::new();
        for (index, p) in publications.into_iter().enumerate() {
            if pubs.contains_key(p.id()) {
                return Err(CorpusError::DuplicatePublication {
                    pub_id: p.id().clone(),
                    index,
                });
            }
            pubs.insert(p.id().clone(), p);
        }

        let mut staff = BTreeMap::new();
        for (index, r) in researchers.into_iter().enumerate() {
            if staff.contains_key(&r.id) {
                return Err(CorpusError::DuplicateResearcher {
                    researcher_id: r.id,
                    index,
                });
            }
            if !taxonomy.contains(&r.sds) {
                return Err(CorpusError::UnknownSds {
                    researcher_id: r.id,
                    sds_id: r.sds,
                    index,
                });
            }
            staff.insert(r.id.clone(), r);
        }

        let mut seen = BTreeSet::new();
        for (index, link) in authorships.iter().enumerate() {
            if !pubs.contains_key(&link.publication) {
                return Err(CorpusError::UnknownPublication {
                    pub_id: link.publication.clone(),
                    index,
                });
            }
            if !staff.contains_key(&link.researcher) {
                return Err(CorpusError::UnknownResearcher {
                    researcher_id: link.researcher.clone(),
                    index,
                });
            }
            if !seen.insert((&link.publication, &link.researcher)) {
                return Err(CorpusError::DuplicateAuthorship {
                    pub_id: link.publication.clone(),
                    researcher_id: link.researcher.clone(),
                    index,
                });
            }
        }

        let mut corpus = Self {
            publications: pubs,
            researchers: staff,
            authorships,
            taxonomy,
            index: CorpusIndex::default(),
        };
        corpus.index = corpus.rebuild_index();
        Ok(corpus)
    }

    /// Recomputes the derived indexes from the raw collections.
    pub fn rebuild_index(&self) -> CorpusIndex {
        let mut index = CorpusIndex::default();
        for r in self.researchers.values() {
            index
                .cells
                .entry(CellKey::new(r.university.clone(), r.sds.clone()))
                .or_default()
                .researchers
                .insert(r.id.clone());
            index.pubs_by_researcher.entry(r.id.clone()).or_default();
        }
        for link in &self.authorships {
            let r = &self.researchers[&link.researcher];
            index
                .cells
                .entry(CellKey::new(r.university.clone(), r.sds.clone()))
                .or_default()
                .publications
                .insert(link.publication.clone());
            index
                .pubs_by_researcher
                .entry(link.researcher.clone())
                .or_default()
                .insert(link.publication.clone());
        }
        index
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    pub fn publications(&self) -> impl Iterator<Item = &PublicationRecord> {
        self.publications.values()
    }

    pub fn publication(&self, id: &PubId) -> Option<&PublicationRecord> {
        self.publications.get(id)
    }

    pub fn num_publications(&self) -> usize {
        self.publications.len()
    }

    pub fn researchers(&self) -> impl Iterator<Item = &ResearcherRecord> {
        self.researchers.values()
    }

    pub fn researcher(&self, id: &ResearcherId) -> Option<&ResearcherRecord> {
        self.researchers.get(id)
    }

    pub fn num_researchers(&self) -> usize {
        self.researchers.len()
    }

    pub fn authorships(&self) -> &[AuthorshipLink] {
        &self.authorships
    }

    pub fn taxonomy(&self) -> &FieldTaxonomy {
        &self.taxonomy
    }

    pub fn cell(&self, university: &UniversityId, sds: &SdsId) -> Option<&CellMembers> {
        self.index
            .cells
            .get(&CellKey::new(university.clone(), sds.clone()))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &CellMembers)> {
        self.index.cells.iter()
    }

    /// Roster size of a university × SDS cell.
    pub fn staff_count(&self, university: &UniversityId, sds: &SdsId) -> usize {
        self.cell(university, sds)
            .map_or(0, |c| c.researchers.len())
    }

    pub fn publications_of(&self, researcher: &ResearcherId) -> Option<&BTreeSet<PubId>> {
        self.index.pubs_by_researcher.get(researcher)
    }

    pub fn universities(&self) -> BTreeSet<&UniversityId> {
        self.researchers.values().map(|r| &r.university).collect()
    }

    /// Every observation year recorded for at least one publication.
    pub fn observation_years(&self) -> BTreeSet<Year> {
        self.publications
            .values()
            .flat_map(|p| p.citations.keys().copied())
            .collect()
    }

    /// Observation years recorded for every publication.
    pub fn complete_observation_years(&self) -> BTreeSet<Year> {
        let mut it = self.publications.values();
        let Some(first) = it.next() else {
            return BTreeSet::new();
        };
        let mut years: BTreeSet<Year> = first.citations.keys().copied().collect();
        for p in it {
            years.retain(|y| p.citations.contains_key(y));
        }
        years
    }
}

/// Free-function form of [`Corpus::build`].
pub fn build_corpus(
    publications: Vec<PublicationRecord>,
    researchers: Vec<ResearcherRecord>,
    authorships: Vec<AuthorshipLink>,
    taxonomy: FieldTaxonomy,
) -> Result<Corpus, CorpusError> {
    Corpus::build(publications, researchers, authorships, taxonomy)
}
