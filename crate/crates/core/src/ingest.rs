//! Loading the five-file CSV corpus and selecting representative SDSs.
//!
//! Every file is UTF-8, comma separated, with a header row:
//!
//! | file               | columns                              |
//! |--------------------|--------------------------------------|
//! | `publications.csv` | `pub_id,pub_year,categories`         |
//! | `citations.csv`    | `pub_id,obs_year,cum_citations`      |
//! | `authorship.csv`   | `pub_id,researcher_id`               |
//! | `researchers.csv`  | `researcher_id,university_id,sds_id` |
//! | `fields.csv`       | `sds_id,uda_id`                      |
//!
//! `categories` is a `;`-joined list of `cat` or `cat:weight`. When no weight
//! is given every category gets `1/k`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use csv::StringRecord;
use thiserror::Error;

use crate::corpus::{
    AuthorshipLink, CategoryWeight, Corpus, CorpusError, FieldTaxonomy, PubId,
    PublicationRecord, ResearcherRecord, SdsId, Year, YearRange,
};

pub const PUBLICATIONS_FILE: &str = "publications.csv";
pub const CITATIONS_FILE: &str = "citations.csv";
pub const AUTHORSHIP_FILE: &str = "authorship.csv";
pub const RESEARCHERS_FILE: &str = "researchers.csv";
pub const FIELDS_FILE: &str = "fields.csv";

pub const INPUT_FILES: [&str; 5] = [
    PUBLICATIONS_FILE,
    CITATIONS_FILE,
    AUTHORSHIP_FILE,
    RESEARCHERS_FILE,
    FIELDS_FILE,
];

const PUBLICATIONS_HEADER: [&str; 3] = ["pub_id", "pub_year", "categories"];
const CITATIONS_HEADER: [&str; 3] = ["pub_id", "obs_year", "cum_citations"];
const AUTHORSHIP_HEADER: [&str; 2] = ["pub_id", "researcher_id"];
const RESEARCHERS_HEADER: [&str; 3] = ["researcher_id", "university_id", "sds_id"];
const FIELDS_HEADER: [&str; 2] = ["sds_id", "uda_id"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing input file(s) in {}: {}", dir.display(), files.join(", "))]
    MissingFiles {
        dir: PathBuf,
        files: Vec<&'static str>,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: &'static str,
        line: u64,
        message: String,
    },
    #[error("{file}:{line}: {source}")]
    Integrity {
        file: &'static str,
        line: u64,
        #[source]
        source: CorpusError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("reading {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("representativity threshold {0} must lie in [0, 1]")]
    InvalidThreshold(f64),
}

impl IngestError {
    /// True when the failure is caused by absent input rather than bad data.
    pub fn is_missing_input(&self) -> bool {
        matches!(self, Self::MissingFiles { .. } | Self::Io { .. })
    }
}

fn parse_err(file: &'static str, line: u64, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        file,
        line,
        message: message.into(),
    }
}

/// Rows of one CSV file with their 1-based line numbers.
struct Table {
    file: &'static str,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read(dir: &Path, file: &'static str, header: &[&str]) -> Result<Self, IngestError> {
        let path = dir.join(file);
        let handle = File::open(&path).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(handle);
        let found = reader
            .headers()
            .map_err(|e| parse_err(file, 1, e.to_string()))?
            .clone();
        if found.len() != header.len() || found.iter().zip(header).any(|(a, b)| a != *b) {
            return Err(parse_err(
                file,
                1,
                format!(
                    "expected header {:?}, found {:?}",
                    header.join(","),
                    found.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut rows = Vec::new();
        for result in reader.records() {
            let record = result.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(file, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != header.len() {
                return Err(parse_err(
                    file,
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            if let Some(i) = record.iter().position(str::is_empty) {
                return Err(parse_err(file, line, format!("empty field {:?}", header[i])));
            }
            rows.push((line, record));
        }
        Ok(Self { file, rows })
    }

    fn line_of(&self, index: usize) -> u64 {
        self.rows.get(index).map_or(0, |(l, _)| *l)
    }

    fn integrity(&self, index: usize, source: CorpusError) -> IngestError {
        IngestError::Integrity {
            file: self.file,
            line: self.line_of(index),
            source,
        }
    }
}

fn parse_num<T: std::str::FromStr>(
    file: &'static str,
    line: u64,
    field: &str,
    raw: &str,
) -> Result<T, IngestError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| parse_err(file, line, format!("invalid {field} {raw:?}: {e}")))
}

/// Parses a `categories` field: `A:0.5;B:0.5` or `A;B` (uniform weights).
pub fn parse_categories(raw: &str) -> Result<Vec<CategoryWeight>, String> {
    let parts: Vec<&str> = raw.split(';').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("empty category in {raw:?}"));
    }
    let weighted = parts.iter().filter(|p| p.contains(':')).count();
    if weighted == 0 {
        let w = 1.0 / parts.len() as f64;
        return Ok(parts
            .into_iter()
            .map(|p| CategoryWeight::new(p, w))
            .collect());
    }
    if weighted != parts.len() {
        return Err(format!(
            "categories {raw:?} mix weighted and unweighted entries"
        ));
    }
    parts
        .into_iter()
        .map(|p| {
            let (cat, w) = p.split_once(':').expect("checked above");
            let weight: f64 = w
                .trim()
                .parse()
                .map_err(|e| format!("invalid weight {w:?} for category {cat:?}: {e}"))?;
            Ok(CategoryWeight::new(cat.trim(), weight))
        })
        .collect()
}

/// Reads and validates the five-file corpus in `dir`.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus, IngestError> {
    let dir = dir.as_ref();
    let missing: Vec<&'static str> = INPUT_FILES
        .iter()
        .copied()
        .filter(|f| !dir.join(f).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingFiles {
            dir: dir.to_path_buf(),
            files: missing,
        });
    }

    let fields = Table::read(dir, FIELDS_FILE, &FIELDS_HEADER)?;
    let taxonomy = FieldTaxonomy::new(
        fields
            .rows
            .iter()
            .map(|(_, r)| (SdsId::new(&r[0]), crate::corpus::UdaId::new(&r[1]))),
    )
    .map_err(|e| {
        let index = e.record_index().unwrap_or(0);
        fields.integrity(index, e)
    })?;

    let researchers_t = Table::read(dir, RESEARCHERS_FILE, &RESEARCHERS_HEADER)?;
    let researchers: Vec<ResearcherRecord> = researchers_t
        .rows
        .iter()
        .map(|(_, r)| ResearcherRecord::new(&r[0], &r[1], &r[2]))
        .collect();

    let citations = read_citations(dir)?;

    let pubs_t = Table::read(dir, PUBLICATIONS_FILE, &PUBLICATIONS_HEADER)?;
    let mut publications = Vec::with_capacity(pubs_t.rows.len());
    let mut pub_lines = BTreeMap::new();
    for (line, r) in &pubs_t.rows {
        let file = PUBLICATIONS_FILE;
        let id = PubId::new(&r[0]);
        let year: Year = parse_num(file, *line, "pub_year", &r[1])?;
        let categories =
            parse_categories(&r[2]).map_err(|m| parse_err(file, *line, format!("{id}: {m}")))?;
        let cites = citations
            .by_pub
            .get(&id)
            .map(|m| m.iter().map(|(y, (c, _))| (*y, *c)).collect())
            .unwrap_or_default();
        let record = PublicationRecord::new(id.clone(), year, categories, cites).map_err(|e| {
            // Citation-side violations are reported at the citations.csv row.
            match &e {
                CorpusError::DecreasingCitations { later_year, .. } => IngestError::Integrity {
                    file: CITATIONS_FILE,
                    line: citations.line(&id, *later_year),
                    source: e,
                },
                CorpusError::ObservationBeforePublication { obs_year, .. } => {
                    IngestError::Integrity {
                        file: CITATIONS_FILE,
                        line: citations.line(&id, *obs_year),
                        source: e,
                    }
                }
                _ => IngestError::Integrity {
                    file,
                    line: *line,
                    source: e,
                },
            }
        })?;
        pub_lines.insert(id, *line);
        publications.push(record);
    }
    for (id, years) in &citations.by_pub {
        if !pub_lines.contains_key(id) {
            let line = years.values().map(|(_, l)| *l).min().unwrap_or(0);
            return Err(parse_err(
                CITATIONS_FILE,
                line,
                format!("citations for unknown publication {id}"),
            ));
        }
    }

    let authorship_t = Table::read(dir, AUTHORSHIP_FILE, &AUTHORSHIP_HEADER)?;
    let authorships: Vec<AuthorshipLink> = authorship_t
        .rows
        .iter()
        .map(|(_, r)| AuthorshipLink::new(&r[0], &r[1]))
        .collect();

    Corpus::build(publications, researchers, authorships, taxonomy).map_err(|e| {
        let index = e.record_index().unwrap_or(0);
        match &e {
            CorpusError::DuplicatePublication { .. } => pubs_t.integrity(index, e),
            CorpusError::DuplicateResearcher { .. } | CorpusError::UnknownSds { .. } => {
                researchers_t.integrity(index, e)
            }
            CorpusError::UnknownPublication { .. }
            | CorpusError::UnknownResearcher { .. }
            | CorpusError::DuplicateAuthorship { .. } => authorship_t.integrity(index, e),
            _ => IngestError::Corpus(e),
        }
    })
}

struct Citations {
    /// pub → obs_year → (count, line)
    by_pub: BTreeMap<PubId, BTreeMap<Year, (u64, u64)>>,
}

impl Citations {
    fn line(&self, id: &PubId, year: Year) -> u64 {
        self.by_pub
            .get(id)
            .and_then(|m| m.get(&year))
            .map_or(0, |(_, l)| *l)
    }
}

fn read_citations(dir: &Path) -> Result<Citations, IngestError> {
    let t = Table::read(dir, CITATIONS_FILE, &CITATIONS_HEADER)?;
    let file = CITATIONS_FILE;
    let mut by_pub: BTreeMap<PubId, BTreeMap<Year, (u64, u64)>> = BTreeMap::new();
    for (line, r) in &t.rows {
        let id = PubId::new(&r[0]);
        let year: Year = parse_num(file, *line, "obs_year", &r[1])?;
        let count: u64 = parse_num(file, *line, "cum_citations", &r[2])?;
        let entry = by_pub.entry(id.clone()).or_default();
        if let Some((_, first)) = entry.get(&year) {
            return Err(parse_err(
                file,
                *line,
                format!("duplicate citation count for {id} in {year} (first at line {first})"),
            ));
        }
        entry.insert(year, (count, *line));
    }
    Ok(Citations { by_pub })
}

/// Coverage of one SDS by publishing staff.
#[derive(Debug, Clone, PartialEq)]
pub struct SdsCoverage {
    pub sds: SdsId,
    pub staff: usize,
    pub publishing_staff: usize,
    /// `None` when the SDS has no staff.
    pub coverage: Option<f64>,
    pub retained: bool,
}

impl SdsCoverage {
    pub fn is_empty(&self) -> bool {
        self.staff == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativityReport {
    pub period: YearRange,
    pub threshold: f64,
    pub rows: Vec<SdsCoverage>,
}

impl RepresentativityReport {
    pub fn retained(&self) -> BTreeSet<SdsId> {
        self.rows
            .iter()
            .filter(|r| r.retained)
            .map(|r| r.sds.clone())
            .collect()
    }

    pub fn get(&self, sds: &SdsId) -> Option<&SdsCoverage> {
        self.rows.iter().find(|r| &r.sds == sds)
    }

    /// `sds_id,staff,publishing_staff,coverage,retained`; coverage is blank
    /// for SDSs without staff.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sds_id", "staff", "publishing_staff", "coverage", "retained"])?;
        for r in &self.rows {
            out.write_record([
                r.sds.to_string(),
                r.staff.to_string(),
                r.publishing_staff.to_string(),
                r.coverage.map_or_else(String::new, |c| format!("{c:.6}")),
                r.retained.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Retains each SDS whose share of staff with at least one publication dated
/// in `period` is at least `threshold`. Every SDS of the taxonomy gets a row;
/// SDSs with no staff are never retained.
pub fn representativity_filter(
    corpus: &Corpus,
    period: YearRange,
    threshold: f64,
) -> Result<RepresentativityReport, IngestError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(IngestError::InvalidThreshold(threshold));
    }
    let mut counts: BTreeMap<&SdsId, (usize, usize)> =
        corpus.taxonomy().sds_ids().map(|s| (s, (0, 0))).collect();
    for r in corpus.researchers() {
        let publishes = corpus.publications_of(&r.id).is_some_and(|pubs| {
            pubs.iter().any(|p| {
                corpus
                    .publication(p)
                    .is_some_and(|rec| period.contains(rec.year()))
            })
        });
        let entry = counts.entry(&r.sds).or_default();
        entry.0 += 1;
        entry.1 += usize::from(publishes);
    }
    let rows = counts
        .into_iter()
        .map(|(sds, (staff, publishing))| {
            let coverage = (staff > 0).then(|| publishing as f64 / staff as f64);
            SdsCoverage {
                sds: sds.clone(),
                staff,
                publishing_staff: publishing,
                coverage,
                retained: coverage.is_some_and(|c| c >= threshold),
            }
        })
        .collect();
    Ok(RepresentativityReport {
        period,
        threshold,
        rows,
    })
}
