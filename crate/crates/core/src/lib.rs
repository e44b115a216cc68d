//! Field-normalized research productivity rankings of institutions and the
//! sensitivity of those rankings to the year in which citations are counted.
//!
//! The pipeline runs bottom-up:
//!
//! * [`corpus`]: publications, researchers, authorship links and the
//!   SDS → UDA taxonomy, with referential integrity checks.
//! * [`ingest`]: the five-file CSV contract and the representativity filter.
//! * [`impact`]: per-cell citation medians and the Article Impact Index (AII).
//! * [`productivity`]: Scientific Strength, SDS productivity, national
//!   baselines and discipline-level productivity.
//! * [`sensitivity`]: rankings, rank shifts, Spearman correlation, stability
//!   summaries and quartile transitions across observation years.
//! * [`npc`]: two-sample permutation tests and their nonparametric
//!   combination with Fisher's function.
//! * [`synth`]: seeded synthetic corpora with field-specific citation accrual.
//! * [`report`]: the command layer behind the `citewin` binary.

pub mod corpus;
pub mod impact;
pub mod ingest;
pub mod npc;
pub mod productivity;
pub mod report;
pub mod sensitivity;
pub mod stats;
pub mod synth;

pub use corpus::{
    AuthorshipLink, CategoryId, CategoryWeight, Corpus, CorpusError, FieldTaxonomy, PubId,
    PublicationRecord, ResearcherId, ResearcherRecord, SdsId, UdaId, UniversityId, Year,
    YearRange,
};
pub use impact::{ImpactError, ImpactScore, MedianTable};
pub use ingest::{IngestError, RepresentativityReport};
pub use npc::{NpcCombinedResult, NpcError, PermTestResult};
pub use productivity::{BaselineRule, ProductivityCell, ProductivityError, UdaProductivity};
pub use sensitivity::{Ranking, Scope, ScopeLevel, SensitivityError};
