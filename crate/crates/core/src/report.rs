//! Command layer: runs the pipeline for each CLI subcommand and writes the
//! report tables plus a `manifest.json` describing the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, UdaId, UniversityId, Year, YearRange};
use crate::ingest::{self, IngestError, RepresentativityReport};
use crate::npc::{self, NpcCombinedResult, NpcError};
use crate::productivity::{self, BaselineRule, ProductivityError, YearProductivity};
use crate::sensitivity::{self, Ranking, Scope, ScopeLevel, ScopeSensitivity, SensitivityError};
use crate::synth::{self, SynthConfig, SynthError};

pub const RANKINGS_CSV: &str = "rankings.csv";
pub const REPRESENTATIVITY_CSV: &str = "representativity.csv";
pub const SHIFT_DESCRIPTIVES_CSV: &str = "shift_descriptives.csv";
pub const STABILITY_SUMMARY_CSV: &str = "stability_summary.csv";
pub const SPEARMAN_CSV: &str = "spearman.csv";
pub const SMALL_SHIFT_CSV: &str = "small_shift_pcts.csv";
pub const QUARTILE_STATS_CSV: &str = "quartile_stats.csv";
pub const RANK_RANGES_CSV: &str = "rank_ranges.csv";
pub const NPC_RESULTS_CSV: &str = "npc_results.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

const NA: &str = "NA";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Productivity(#[from] ProductivityError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Npc(#[from] NpcError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("observation year {year} not available for every publication (available: {})", years_list(available))]
    MissingObsYear { year: Year, available: Vec<Year> },
    #[error("benchmark year {benchmark} is not among the requested years {}", years_list(years))]
    BenchmarkNotRequested { benchmark: Year, years: Vec<Year> },
    #[error("need at least 2 distinct observation years, got {0}")]
    TooFewYears(usize),
    #[error("no {level} scope has any ranked university")]
    NothingToRank { level: ScopeLevel },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl ReportError {
    /// Process exit status: 2 for missing input, 1 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Ingest(e) if e.is_missing_input() => 2,
            Self::Synth(SynthError::ReadConfig { .. }) => 2,
            _ => 1,
        }
    }
}

fn years_list(years: &[Year]) -> String {
    if years.is_empty() {
        return "none".to_owned();
    }
    years
        .iter()
        .map(Year::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Options shared by every analysis command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub period: YearRange,
    pub threshold: f64,
    pub baseline: BaselineRule,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            period: YearRange {
                start: 2001,
                end: 2003,
            },
            threshold: 0.5,
            baseline: BaselineRule::Aggregate,
        }
    }
}

/// Everything needed to reproduce a run. No timestamps or host details, so
/// identical runs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input_dir: String,
    pub pub_period: String,
    pub obs_years: Vec<Year>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark_year: Option<Year>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<ScopeLevel>,
    pub baseline: BaselineRule,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_percentile: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, dir: &Path, opts: &AnalysisOptions, obs_years: Vec<Year>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            input_dir: dir.display().to_string(),
            pub_period: opts.period.to_string(),
            obs_years,
            benchmark_year: None,
            level: None,
            baseline: opts.baseline,
            threshold: opts.threshold,
            top_percentile: None,
            permutations: None,
            seed: None,
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Fixed-point formatting that never prints a negative zero.
pub fn fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_owned(),
        _ => s,
    }
}

fn opt_fixed(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(|| NA.to_owned(), |v| fixed(v, decimals))
}

fn percent(fraction: f64) -> String {
    ((fraction * 100.0).round() as i64).to_string()
}

struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self, ReportError> {
        fs::create_dir_all(root).map_err(|e| ReportError::Output {
            path: root.to_owned(),
            message: e.to_string(),
        })?;
        Ok(Self {
            root: root.to_owned(),
            written: Vec::new(),
        })
    }

    fn csv(
        &mut self,
        name: &str,
        header: &[String],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), ReportError> {
        let path = self.root.join(name);
        let err = |e: csv::Error| ReportError::Output {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| err(e.into()))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    fn representativity(&mut self, report: &RepresentativityReport) -> Result<(), ReportError> {
        let path = self.root.join(REPRESENTATIVITY_CSV);
        let file = fs::File::create(&path).map_err(|e| ReportError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        report.write_csv(file).map_err(|e| ReportError::Output {
            path,
            message: e.to_string(),
        })?;
        self.written.push(REPRESENTATIVITY_CSV.to_owned());
        Ok(())
    }

    fn manifest(mut self, mut manifest: RunManifest) -> Result<Vec<String>, ReportError> {
        self.written.push(MANIFEST_JSON.to_owned());
        manifest.outputs = self.written.clone();
        let path = self.root.join(MANIFEST_JSON);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| ReportError::Output {
            path,
            message: e.to_string(),
        })?;
        Ok(self.written)
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| (*c).to_owned()).collect()
}

/// A loaded corpus with its representativity filter applied.
pub struct Pipeline {
    pub corpus: Corpus,
    pub representativity: RepresentativityReport,
    pub options: AnalysisOptions,
}

impl Pipeline {
    pub fn load(dir: &Path, options: AnalysisOptions) -> Result<Self, ReportError> {
        let corpus = ingest::load_corpus(dir)?;
        let representativity =
            ingest::representativity_filter(&corpus, options.period, options.threshold)?;
        Ok(Self {
            corpus,
            representativity,
            options,
        })
    }

    fn check_year(&self, year: Year) -> Result<(), ReportError> {
        let available = self.corpus.complete_observation_years();
        if self.corpus.num_publications() > 0 && !available.contains(&year) {
            return Err(ReportError::MissingObsYear {
                year,
                available: available.into_iter().collect(),
            });
        }
        Ok(())
    }

    /// Productivity at each of `years`, evaluated in parallel.
    pub fn evaluate(&self, years: &[Year]) -> Result<BTreeMap<Year, YearProductivity>, ReportError> {
        for &y in years {
            self.check_year(y)?;
        }
        let retained = self.representativity.retained();
        years
            .par_iter()
            .map(|&y| {
                productivity::evaluate_year(
                    &self.corpus,
                    &retained,
                    self.options.period,
                    y,
                    self.options.baseline,
                )
                .map(|p| (y, p))
                .map_err(ReportError::from)
            })
            .collect()
    }
}

/// Rankings per scope, one per evaluated year in ascending year order.
pub fn rankings_by_scope(
    yearly: &BTreeMap<Year, YearProductivity>,
    level: ScopeLevel,
) -> Result<BTreeMap<Scope, Vec<Ranking>>, ReportError> {
    let mut out: BTreeMap<Scope, Vec<Ranking>> = BTreeMap::new();
    for (&year, p) in yearly {
        let scores: Vec<(Scope, BTreeMap<UniversityId, f64>)> = match level {
            ScopeLevel::Uda => p
                .uda_scores()
                .into_iter()
                .map(|(u, s)| (Scope::Uda(u), s))
                .collect(),
            ScopeLevel::Sds => p
                .sds_scores()
                .into_iter()
                .map(|(s, v)| (Scope::Sds(s), v))
                .collect(),
        };
        for (scope, s) in scores {
            if s.is_empty() {
                continue;
            }
            let r = sensitivity::rank_universities(scope.clone(), year, &s)?;
            out.entry(scope).or_default().push(r);
        }
    }
    Ok(out)
}

fn ranking_rows(rankings: &BTreeMap<Scope, Vec<Ranking>>) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (scope, list) in rankings {
        for r in list {
            for e in r.entries() {
                rows.push(vec![
                    scope.level().to_string(),
                    scope.id().to_owned(),
                    r.obs_year().to_string(),
                    e.university.to_string(),
                    fixed(e.score, 6),
                    e.rank.to_string(),
                ]);
            }
        }
    }
    rows
}

fn collect_warnings(yearly: &BTreeMap<Year, YearProductivity>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    yearly
        .values()
        .flat_map(|p| p.warnings.iter())
        .filter(|w| seen.insert((*w).clone()))
        .cloned()
        .collect()
}

/// Outcome of a command: the files written and a short human summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<String>,
    pub summary: String,
    pub warnings: Vec<String>,
}

/// Findings of `validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub publications: usize,
    pub researchers: usize,
    pub universities: usize,
    pub sds: usize,
    pub udas: usize,
    pub observation_years: Vec<Year>,
    pub complete_observation_years: Vec<Year>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "ok: {} publications, {} researchers, {} universities, {} SDS in {} UDA\n\
             observation years: {}\n",
            self.publications,
            self.researchers,
            self.universities,
            self.sds,
            self.udas,
            years_list(&self.observation_years),
        );
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

/// Loads the corpus, which runs every integrity check, and reports
/// non-fatal oddities.
pub fn cmd_validate(dir: &Path) -> Result<ValidationReport, ReportError> {
    let corpus = ingest::load_corpus(dir)?;
    let mut warnings = Vec::new();
    let all = corpus.observation_years();
    let complete = corpus.complete_observation_years();
    let partial: Vec<Year> = all.difference(&complete).copied().collect();
    if !partial.is_empty() {
        warnings.push(format!(
            "observation years {} lack counts for some publications",
            years_list(&partial)
        ));
    }
    let authored: BTreeSet<_> = corpus.authorships().iter().map(|a| &a.publication).collect();
    let orphans = corpus
        .publications()
        .filter(|p| !authored.contains(p.id()))
        .count();
    if orphans > 0 {
        warnings.push(format!("{orphans} publications have no listed author"));
    }
    let staffed: BTreeSet<_> = corpus.researchers().map(|r| &r.sds).collect();
    for sds in corpus.taxonomy().sds_ids().filter(|s| !staffed.contains(s)) {
        warnings.push(format!("SDS {sds} has no researchers"));
    }
    Ok(ValidationReport {
        publications: corpus.num_publications(),
        researchers: corpus.num_researchers(),
        universities: corpus.universities().len(),
        sds: corpus.taxonomy().len(),
        udas: corpus.taxonomy().udas().len(),
        observation_years: all.into_iter().collect(),
        complete_observation_years: complete.into_iter().collect(),
        warnings,
    })
}

/// Rankings of one observation year at the requested level.
pub fn cmd_rankings(
    dir: &Path,
    opts: AnalysisOptions,
    obs_year: Year,
    level: ScopeLevel,
    out: &Path,
) -> Result<CommandOutput, ReportError> {
    let pipeline = Pipeline::load(dir, opts)?;
    let yearly = pipeline.evaluate(&[obs_year])?;
    let rankings = rankings_by_scope(&yearly, level)?;
    let mut dir_out = OutDir::create(out)?;
    dir_out.csv(
        RANKINGS_CSV,
        &header(&["scope_level", "scope_id", "obs_year", "university_id", "score", "rank"]),
        ranking_rows(&rankings),
    )?;
    dir_out.representativity(&pipeline.representativity)?;
    let warnings = collect_warnings(&yearly);
    let mut manifest = RunManifest::new("rankings", dir, &opts, vec![obs_year]);
    manifest.level = Some(level);
    manifest.warnings = warnings.clone();
    let files = dir_out.manifest(manifest)?;
    Ok(CommandOutput {
        files,
        summary: format!(
            "{} {level} rankings for {obs_year} written to {}",
            rankings.len(),
            out.display()
        ),
        warnings,
    })
}

fn check_years(years: &[Year], benchmark: Year) -> Result<Vec<Year>, ReportError> {
    let set: BTreeSet<Year> = years.iter().copied().collect();
    if set.len() < 2 {
        return Err(ReportError::TooFewYears(set.len()));
    }
    if !set.contains(&benchmark) {
        return Err(ReportError::BenchmarkNotRequested {
            benchmark,
            years: set.into_iter().collect(),
        });
    }
    Ok(set.into_iter().collect())
}

/// Year columns of the wide tables: `<year>_vs_<benchmark>`.
fn comparison_columns(years: &[Year], benchmark: Year) -> Vec<Year> {
    years.iter().copied().filter(|&y| y != benchmark).collect()
}

/// Full sensitivity battery across observation years.
pub fn cmd_sensitivity(
    dir: &Path,
    opts: AnalysisOptions,
    years: &[Year],
    benchmark: Year,
    level: ScopeLevel,
    out: &Path,
) -> Result<CommandOutput, ReportError> {
    let years = check_years(years, benchmark)?;
    let pipeline = Pipeline::load(dir, opts)?;
    let yearly = pipeline.evaluate(&years)?;
    let rankings = rankings_by_scope(&yearly, level)?;
    if rankings.is_empty() {
        return Err(ReportError::NothingToRank { level });
    }
    let analyses: Vec<ScopeSensitivity> = rankings
        .par_iter()
        .map(|(_, r)| sensitivity::analyze_scope(r, benchmark))
        .collect::<Result<_, _>>()?;
    let compared = comparison_columns(&years, benchmark);
    let mut dir_out = OutDir::create(out)?;
    write_sensitivity_tables(&mut dir_out, &analyses, &compared, benchmark)?;
    dir_out.csv(
        RANKINGS_CSV,
        &header(&["scope_level", "scope_id", "obs_year", "university_id", "score", "rank"]),
        ranking_rows(&rankings),
    )?;
    dir_out.representativity(&pipeline.representativity)?;
    let warnings = collect_warnings(&yearly);
    let mut manifest = RunManifest::new("sensitivity", dir, &opts, years.clone());
    manifest.benchmark_year = Some(benchmark);
    manifest.level = Some(level);
    manifest.warnings = warnings.clone();
    let files = dir_out.manifest(manifest)?;
    Ok(CommandOutput {
        files,
        summary: format!(
            "sensitivity of {} {level} scopes over {} written to {}",
            analyses.len(),
            years_list(&years),
            out.display()
        ),
        warnings,
    })
}

fn write_sensitivity_tables(
    out: &mut OutDir,
    analyses: &[ScopeSensitivity],
    compared: &[Year],
    benchmark: Year,
) -> Result<(), ReportError> {
    let scope_cols = |s: &Scope| vec![s.level().to_string(), s.id().to_owned()];
    let year_cols: Vec<String> = compared
        .iter()
        .map(|y| format!("{y}_vs_{benchmark}"))
        .collect();
    let wide_header = |lead: &[&str]| {
        let mut h = header(lead);
        h.extend(year_cols.iter().cloned());
        h
    };

    let mut rows = Vec::new();
    for a in analyses {
        for (year, d) in &a.descriptives {
            let mut row = scope_cols(&a.scope);
            row.extend([
                year.to_string(),
                benchmark.to_string(),
                d.n.to_string(),
                fixed(d.mean, 6),
                fixed(d.median, 6),
                fixed(d.std_dev, 6),
                opt_fixed(d.skewness, 6),
                opt_fixed(d.kurtosis, 6),
            ]);
            rows.push(row);
        }
    }
    out.csv(
        SHIFT_DESCRIPTIVES_CSV,
        &header(&[
            "scope_level",
            "scope_id",
            "comparison_year",
            "benchmark_year",
            "n",
            "mean",
            "median",
            "std_dev",
            "skewness",
            "kurtosis",
        ]),
        rows,
    )?;

    let rows = analyses.iter().map(|a| {
        let s = &a.summary;
        let mut row = scope_cols(&a.scope);
        row.extend([
            s.universities.to_string(),
            percent(s.pct_any_change),
            fixed(s.average, 6),
            fixed(s.median, 6),
            fixed(s.std_dev, 6),
            s.max_ranking_variation.to_string(),
        ]);
        row
    });
    out.csv(
        STABILITY_SUMMARY_CSV,
        &header(&[
            "scope_level",
            "scope_id",
            "universities",
            "pct_any_change",
            "average",
            "median",
            "std_dev",
            "max_ranking_variation",
        ]),
        rows.collect::<Vec<_>>(),
    )?;

    let mut rows: Vec<Vec<String>> = analyses
        .iter()
        .map(|a| {
            let mut row = scope_cols(&a.scope);
            row.extend(
                compared
                    .iter()
                    .map(|y| opt_fixed(a.spearman.get(y).copied().flatten(), 6)),
            );
            row
        })
        .collect();
    let level = analyses
        .first()
        .map_or_else(String::new, |a| a.scope.level().to_string());
    let mut avg = vec![level.clone(), "Average".to_owned()];
    avg.extend(compared.iter().map(|y| {
        let vals: Vec<f64> = analyses
            .iter()
            .filter_map(|a| a.spearman.get(y).copied().flatten())
            .collect();
        opt_fixed(crate::stats::mean(&vals), 6)
    }));
    rows.push(avg);
    out.csv(SPEARMAN_CSV, &wide_header(&["scope_level", "scope_id"]), rows)?;

    let rows = analyses.iter().map(|a| {
        let (year, p) = a.small_shifts;
        let (zero, small) = p.rounded_percent();
        let mut row = scope_cols(&a.scope);
        row.extend([
            year.to_string(),
            benchmark.to_string(),
            zero.to_string(),
            small.to_string(),
        ]);
        row
    });
    out.csv(
        SMALL_SHIFT_CSV,
        &header(&[
            "scope_level",
            "scope_id",
            "comparison_year",
            "benchmark_year",
            "pct_no_change",
            "pct_leq_3",
        ]),
        rows.collect::<Vec<_>>(),
    )?;

    let mut rows = Vec::new();
    for a in analyses {
        let by_year: BTreeMap<Year, &sensitivity::QuartileShiftRow> = a
            .quartiles
            .iter()
            .flatten()
            .map(|r| (r.year, r))
            .collect();
        for metric in ["average_class_shift", "outliers"] {
            let mut row = scope_cols(&a.scope);
            row.push(metric.to_owned());
            row.extend(compared.iter().map(|y| match by_year.get(y) {
                None => NA.to_owned(),
                Some(r) if metric == "outliers" => r.outliers.to_string(),
                Some(r) => fixed(r.average_shift, 3),
            }));
            rows.push(row);
        }
    }
    out.csv(
        QUARTILE_STATS_CSV,
        &wide_header(&["scope_level", "scope_id", "metric"]),
        rows,
    )?;

    let mut rows = Vec::new();
    for a in analyses {
        for r in &a.ranges {
            let mut row = scope_cols(&a.scope);
            row.extend([
                r.university.to_string(),
                r.min_rank.to_string(),
                r.max_rank.to_string(),
            ]);
            rows.push(row);
        }
    }
    out.csv(
        RANK_RANGES_CSV,
        &header(&["scope_level", "scope_id", "university_id", "min_rank", "max_rank"]),
        rows,
    )?;
    Ok(())
}

/// Parameters of the permutation test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpcOptions {
    pub top_percentile: f64,
    pub permutations: u64,
    pub seed: u64,
}

impl Default for NpcOptions {
    fn default() -> Self {
        Self {
            top_percentile: 80.0,
            permutations: 10_000,
            seed: 42,
        }
    }
}

pub fn npc_rows(result: &NpcCombinedResult) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = result
        .partials
        .iter()
        .map(|p| {
            vec![
                p.scope.clone(),
                fixed(p.observed, 6),
                fixed(p.p_value, 3),
                p.direction.to_string(),
                p.n_perm.to_string(),
                p.seed.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        "COMBINED".to_owned(),
        fixed(result.statistic, 6),
        fixed(result.p_value, 3),
        result.direction.to_string(),
        result.n_perm.to_string(),
        result.seed.to_string(),
    ]);
    rows
}

/// Top-versus-rest test on maximum rank shift per UDA and its combination.
pub fn cmd_npc(
    dir: &Path,
    opts: AnalysisOptions,
    years: &[Year],
    benchmark: Year,
    npc_opts: NpcOptions,
    out: &Path,
) -> Result<CommandOutput, ReportError> {
    let years = check_years(years, benchmark)?;
    if !(npc_opts.top_percentile > 0.0 && npc_opts.top_percentile <= 100.0) {
        return Err(NpcError::InvalidPercentile(npc_opts.top_percentile).into());
    }
    let pipeline = Pipeline::load(dir, opts)?;
    let yearly = pipeline.evaluate(&years)?;
    let rankings: BTreeMap<UdaId, Vec<Ranking>> = rankings_by_scope(&yearly, ScopeLevel::Uda)?
        .into_iter()
        .filter_map(|(scope, r)| match scope {
            Scope::Uda(u) => Some((u, r)),
            Scope::Sds(_) => None,
        })
        .collect();
    let result = npc::npc_from_rankings(
        &rankings,
        benchmark,
        npc_opts.top_percentile,
        npc_opts.permutations,
        npc_opts.seed,
    )?;
    let mut dir_out = OutDir::create(out)?;
    dir_out.csv(
        NPC_RESULTS_CSV,
        &header(&["uda_id", "observed_stat", "p_value", "direction", "n_perm", "seed"]),
        npc_rows(&result),
    )?;
    let mut warnings = collect_warnings(&yearly);
    warnings.extend(
        result
            .excluded
            .iter()
            .map(|(u, why)| format!("UDA {u} excluded from the combined test: {why}")),
    );
    let mut manifest = RunManifest::new("npc", dir, &opts, years);
    manifest.benchmark_year = Some(benchmark);
    manifest.level = Some(ScopeLevel::Uda);
    manifest.top_percentile = Some(npc_opts.top_percentile);
    manifest.permutations = Some(npc_opts.permutations);
    manifest.seed = Some(npc_opts.seed);
    manifest.warnings = warnings.clone();
    let files = dir_out.manifest(manifest)?;
    Ok(CommandOutput {
        files,
        summary: format!(
            "combined test over {} UDAs: p = {} ({})",
            result.partials.len(),
            fixed(result.p_value, 3),
            result.direction
        ),
        warnings,
    })
}

/// Generates a synthetic corpus. `seed` overrides the config's seed.
pub fn cmd_synth(
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<CommandOutput, ReportError> {
    let mut cfg = match config {
        Some(p) => SynthConfig::from_json_file(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    synth::generate(&cfg, out)?;
    Ok(CommandOutput {
        files: ingest::INPUT_FILES.iter().map(|f| (*f).to_owned()).collect(),
        summary: format!(
            "synthetic corpus (seed {}) written to {}",
            cfg.seed,
            out.display()
        ),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_drops_negative_zero() {
        assert_eq!(fixed(-0.0, 6), "0.000000");
        assert_eq!(fixed(-1e-9, 6), "0.000000");
        assert_eq!(fixed(-0.5, 3), "-0.500");
        assert_eq!(fixed(0.5764, 3), "0.576");
    }

    #[test]
    fn percent_rounds_to_whole_numbers() {
        assert_eq!(percent(2.0 / 3.0), "67");
        assert_eq!(percent(0.0), "0");
        assert_eq!(percent(1.0), "100");
    }

    #[test]
    fn year_checks() {
        assert!(matches!(check_years(&[2008], 2008), Err(ReportError::TooFewYears(1))));
        assert!(matches!(
            check_years(&[2004, 2005], 2008),
            Err(ReportError::BenchmarkNotRequested { .. })
        ));
        assert_eq!(check_years(&[2008, 2004, 2004], 2008).unwrap(), vec![2004, 2008]);
    }

    #[test]
    fn exit_codes() {
        let missing = ReportError::Ingest(IngestError::MissingFiles {
            dir: "x".into(),
            files: vec!["fields.csv"],
        });
        assert_eq!(missing.exit_code(), 2);
        assert_eq!(ReportError::TooFewYears(1).exit_code(), 1);
    }
}
