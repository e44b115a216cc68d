//! Seeded synthetic corpora with field-specific citation accrual.
//!
//! Researchers get a lognormal quality multiplied by a lognormal effect of
//! their university. Each researcher-year yields a Poisson number of
//! publications with mean `pub_rate · quality`, and each publication gains a
//! Poisson number of citations per year with mean
//! `citation_scale · paper_quality · profile[year − pub_year]`. Years past the
//! end of a profile reuse its last multiplier.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Year;
use crate::ingest::{
    AUTHORSHIP_FILE, CITATIONS_FILE, FIELDS_FILE, PUBLICATIONS_FILE, RESEARCHERS_FILE,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    ParseConfig {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: csv::Error },
    #[error("cannot create {path}: {source}")]
    CreateDir {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdsSpec {
    pub id: String,
    /// Subject category of publications authored in this SDS.
    pub category: String,
    /// Key into [`SynthConfig::profiles`].
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UdaSpec {
    pub id: String,
    pub sds: Vec<SdsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_universities: usize,
    /// Inclusive range of staff per university and SDS.
    pub staff_range: [u32; 2],
    pub udas: Vec<UdaSpec>,
    /// Yearly citation-rate multipliers indexed by years since publication.
    pub profiles: BTreeMap<String, Vec<f64>>,
    /// Inclusive publication years.
    pub pub_period: [Year; 2],
    pub obs_years: Vec<Year>,
    /// Poisson mean of publications per researcher-year at quality 1.
    pub pub_rate: f64,
    pub citation_scale: f64,
    /// Lognormal parameters of researcher quality.
    pub quality_mu: f64,
    pub quality_sigma: f64,
    /// Lognormal sigma of the per-university quality effect.
    pub university_sigma: f64,
    /// Lognormal sigma of per-publication quality around the author's.
    pub paper_sigma: f64,
    /// Chance that a publication gets one co-author from another university
    /// in the same SDS.
    pub coauthor_prob: f64,
    /// Chance that a publication also carries the category of another SDS
    /// in the same UDA.
    pub multi_category_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let profiles = BTreeMap::from([
            ("fast".to_owned(), vec![1.0, 0.5, 0.2, 0.1, 0.05]),
            ("medium".to_owned(), vec![0.4, 0.8, 0.6, 0.4, 0.3]),
            ("slow".to_owned(), vec![0.1, 0.3, 0.6, 0.8, 1.0]),
        ]);
        let uda = |id: &str, prefix: &str, profile: &str| UdaSpec {
            id: id.to_owned(),
            sds: (1..=3)
                .map(|i| SdsSpec {
                    id: format!("{prefix}/0{i}"),
                    category: format!("{prefix}-C{i}"),
                    profile: profile.to_owned(),
                })
                .collect(),
        };
        Self {
            n_universities: 40,
            staff_range: [2, 12],
            udas: vec![
                uda("MATH", "MAT", "slow"),
                uda("CHEM", "CHIM", "medium"),
                uda("PHYS", "FIS", "fast"),
            ],
            profiles,
            pub_period: [2001, 2003],
            obs_years: (2004..=2008).collect(),
            pub_rate: 1.0,
            citation_scale: 3.0,
            quality_mu: -0.125,
            quality_sigma: 0.5,
            university_sigma: 0.4,
            paper_sigma: 0.6,
            coauthor_prob: 0.2,
            multi_category_prob: 0.2,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SynthError::ReadConfig {
            path: path.to_owned(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| SynthError::ParseConfig {
            path: path.to_owned(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_universities == 0 {
            return bad("n_universities must be positive".into());
        }
        if self.udas.is_empty() || self.udas.iter().any(|u| u.sds.is_empty()) {
            return bad("need at least one UDA and every UDA needs an SDS".into());
        }
        let [lo, hi] = self.staff_range;
        if lo > hi {
            return bad(format!("staff_range {lo}..{hi} is empty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in self.udas.iter().flat_map(|u| &u.sds) {
            if !seen.insert(&s.id) {
                return bad(format!("SDS {} listed twice", s.id));
            }
            match self.profiles.get(&s.profile) {
                None => return bad(format!("SDS {} uses unknown profile {}", s.id, s.profile)),
                Some(p) if p.is_empty() => return bad(format!("profile {} is empty", s.profile)),
                Some(_) => {}
            }
        }
        for (name, p) in &self.profiles {
            if p.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                return bad(format!("profile {name} has a negative or non-finite multiplier"));
            }
        }
        let [start, end] = self.pub_period;
        if start > end {
            return bad(format!("pub_period {start}-{end} is empty"));
        }
        if self.obs_years.is_empty() {
            return bad("obs_years is empty".into());
        }
        if self.obs_years.windows(2).any(|w| w[0] >= w[1]) {
            return bad("obs_years must be strictly increasing".into());
        }
        if self.obs_years[0] < end {
            return bad(format!(
                "observation year {} precedes the last publication year {end}",
                self.obs_years[0]
            ));
        }
        for (name, v) in [
            ("pub_rate", self.pub_rate),
            ("citation_scale", self.citation_scale),
            ("quality_sigma", self.quality_sigma),
            ("university_sigma", self.university_sigma),
            ("paper_sigma", self.paper_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and nonnegative"));
            }
        }
        if !self.quality_mu.is_finite() {
            return bad("quality_mu must be finite".into());
        }
        for (name, v) in [
            ("coauthor_prob", self.coauthor_prob),
            ("multi_category_prob", self.multi_category_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

struct Researcher {
    id: String,
    university: usize,
    sds: usize,
    quality: f64,
}

struct Publication {
    year: Year,
    categories: Vec<usize>,
    authors: Vec<usize>,
    citations: Vec<u64>,
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

fn lognormal(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return mu.exp();
    }
    LogNormal::new(mu, sigma).expect("valid lognormal").sample(rng)
}

/// Writes the five input tables for `config` into `out_dir`, which is
/// created if needed. The output depends only on the config.
pub fn generate(config: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<(), SynthError> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|source| SynthError::CreateDir {
        path: out_dir.to_owned(),
        source,
    })?;

    let sds: Vec<(&UdaSpec, &SdsSpec)> = config
        .udas
        .iter()
        .flat_map(|u| u.sds.iter().map(move |s| (u, s)))
        .collect();
    let sds_uda: Vec<usize> = config
        .udas
        .iter()
        .enumerate()
        .flat_map(|(i, u)| std::iter::repeat_n(i, u.sds.len()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let width = config.n_universities.to_string().len().max(3);
    let universities: Vec<String> = (1..=config.n_universities)
        .map(|i| format!("U{i:0width$}"))
        .collect();

    let mut researchers = Vec::new();
    for u in 0..config.n_universities {
        let effect = lognormal(&mut rng, 0.0, config.university_sigma);
        for s in 0..sds.len() {
            let staff = rng.random_range(config.staff_range[0]..=config.staff_range[1]);
            for _ in 0..staff {
                let quality = effect * lognormal(&mut rng, config.quality_mu, config.quality_sigma);
                researchers.push(Researcher {
                    id: format!("R{:06}", researchers.len() + 1),
                    university: u,
                    sds: s,
                    quality,
                });
            }
        }
    }
    let mut by_sds: Vec<Vec<usize>> = vec![Vec::new(); sds.len()];
    for (i, r) in researchers.iter().enumerate() {
        by_sds[r.sds].push(i);
    }

    let last_obs = *config.obs_years.last().expect("validated");
    let profile_at = |sds_index: usize, age: i32| -> f64 {
        let p = &config.profiles[&sds[sds_index].1.profile];
        p[(age as usize).min(p.len() - 1)]
    };
    let mut pubs = Vec::new();
    for (ri, r) in researchers.iter().enumerate() {
        for year in config.pub_period[0]..=config.pub_period[1] {
            for _ in 0..poisson(&mut rng, config.pub_rate * r.quality) {
                let mut categories = vec![r.sds];
                let siblings: Vec<usize> = (0..sds.len())
                    .filter(|&s| s != r.sds && sds_uda[s] == sds_uda[r.sds])
                    .collect();
                if rng.random_bool(config.multi_category_prob) && !siblings.is_empty() {
                    let other = siblings[rng.random_range(0..siblings.len())];
                    if sds[other].1.category != sds[r.sds].1.category {
                        categories.push(other);
                    }
                }
                let mut authors = vec![ri];
                if rng.random_bool(config.coauthor_prob) {
                    let candidates: Vec<usize> = by_sds[r.sds]
                        .iter()
                        .copied()
                        .filter(|&c| researchers[c].university != r.university)
                        .collect();
                    if !candidates.is_empty() {
                        authors.push(candidates[rng.random_range(0..candidates.len())]);
                    }
                }
                let quality = r.quality * lognormal(&mut rng, 0.0, config.paper_sigma);
                let mut cum = 0u64;
                let mut citations = Vec::with_capacity(config.obs_years.len());
                for t in year..=last_obs {
                    let rate: f64 = categories
                        .iter()
                        .map(|&c| profile_at(c, t - year))
                        .sum::<f64>()
                        / categories.len() as f64;
                    cum += poisson(&mut rng, config.citation_scale * quality * rate);
                    if config.obs_years.contains(&t) {
                        citations.push(cum);
                    }
                }
                pubs.push(Publication {
                    year,
                    categories,
                    authors,
                    citations,
                });
            }
        }
    }

    let write = |file: &str, rows: &mut dyn FnMut(&mut csv::Writer<fs::File>) -> csv::Result<()>| {
        let path = out_dir.join(file);
        let wrap = |source| SynthError::Write {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(wrap)?;
        rows(&mut w).map_err(wrap)?;
        w.flush().map_err(|e| wrap(e.into()))
    };

    write(FIELDS_FILE, &mut |w| {
        w.write_record(["sds_id", "uda_id"])?;
        for (u, s) in &sds {
            w.write_record([s.id.as_str(), u.id.as_str()])?;
        }
        Ok(())
    })?;
    write(RESEARCHERS_FILE, &mut |w| {
        w.write_record(["researcher_id", "university_id", "sds_id"])?;
        for r in &researchers {
            w.write_record([&r.id, &universities[r.university], &sds[r.sds].1.id])?;
        }
        Ok(())
    })?;
    let pub_id = |i: usize| format!("P{:07}", i + 1);
    write(PUBLICATIONS_FILE, &mut |w| {
        w.write_record(["pub_id", "pub_year", "categories"])?;
        for (i, p) in pubs.iter().enumerate() {
            let cats: Vec<&str> = p.categories.iter().map(|&c| sds[c].1.category.as_str()).collect();
            w.write_record([pub_id(i), p.year.to_string(), cats.join(";")])?;
        }
        Ok(())
    })?;
    write(CITATIONS_FILE, &mut |w| {
        w.write_record(["pub_id", "obs_year", "cum_citations"])?;
        for (i, p) in pubs.iter().enumerate() {
            for (y, c) in config.obs_years.iter().zip(&p.citations) {
                w.write_record([pub_id(i), y.to_string(), c.to_string()])?;
            }
        }
        Ok(())
    })?;
    write(AUTHORSHIP_FILE, &mut |w| {
        w.write_record(["pub_id", "researcher_id"])?;
        for (i, p) in pubs.iter().enumerate() {
            for &a in &p.authors {
                w.write_record([pub_id(i).as_str(), researchers[a].id.as_str()])?;
            }
        }
        Ok(())
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{load_corpus, INPUT_FILES};

    fn small() -> SynthConfig {
        SynthConfig {
            n_universities: 6,
            staff_range: [1, 4],
            ..SynthConfig::default()
        }
    }

    #[test]
    fn output_loads_and_is_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate(&small(), a.path()).unwrap();
        generate(&small(), b.path()).unwrap();
        for f in INPUT_FILES {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let corpus = load_corpus(a.path()).unwrap();
        assert!(corpus.num_publications() > 0);
        assert_eq!(corpus.universities().len(), 6);
    }

    #[test]
    fn seed_changes_output() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate(&small(), a.path()).unwrap();
        generate(&SynthConfig { seed: 43, ..small() }, b.path()).unwrap();
        assert_ne!(
            fs::read(a.path().join(CITATIONS_FILE)).unwrap(),
            fs::read(b.path().join(CITATIONS_FILE)).unwrap()
        );
    }

    #[test]
    fn zero_profiles_give_no_citations() {
        let mut c = small();
        for p in c.profiles.values_mut() {
            p.iter_mut().for_each(|m| *m = 0.0);
        }
        let dir = tempfile::tempdir().unwrap();
        generate(&c, dir.path()).unwrap();
        let corpus = load_corpus(dir.path()).unwrap();
        for p in corpus.publications() {
            assert!(p.citations().values().all(|&n| n == 0));
        }
    }

    #[test]
    fn invalid_configs() {
        let cases = [
            SynthConfig { n_universities: 0, ..small() },
            SynthConfig { udas: vec![], ..small() },
            SynthConfig { staff_range: [3, 1], ..small() },
            SynthConfig { pub_rate: -1.0, ..small() },
            SynthConfig { obs_years: vec![2002], ..small() },
            SynthConfig { coauthor_prob: 1.5, ..small() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(SynthError::InvalidConfig(_))));
        }
        let mut neg = small();
        neg.profiles.insert("fast".into(), vec![1.0, -0.5]);
        assert!(neg.validate().is_err());
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"n_universities": 5, "seed": 9}"#).unwrap();
        let c = SynthConfig::from_json_file(&path).unwrap();
        assert_eq!(c.n_universities, 5);
        assert_eq!(c.seed, 9);
        assert_eq!(c.udas, SynthConfig::default().udas);
        fs::write(&path, r#"{"bogus": 1}"#).unwrap();
        assert!(matches!(
            SynthConfig::from_json_file(&path),
            Err(SynthError::ParseConfig { .. })
        ));
    }
}
