//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use citewin::corpus::{build_corpus, CategoryWeight, FieldTaxonomy, PublicationRecord};
use citewin::impact::{article_impact_index, compute_median_table, impact_scores, MedianTable};
use citewin::npc::{npc_fisher_combine, two_sample_perm_test_with, PermMode, UdaGroupData};
use citewin::productivity::{
    sds_productivity, uda_productivity, CellInputs, NationalBaseline, ProductivityCell,
};
use citewin::report::{self, AnalysisOptions, NpcOptions, Pipeline};
use citewin::sensitivity::{self, quartile_classes, rank_universities, spearman_rho};
use citewin::{ScopeLevel, SdsId, UniversityId, Year};

// Tolerances and budgets.
const GOLDEN_TOL: f64 = 1e-3;
const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
const AII_BUDGET: Duration = Duration::from_secs(10);
const IDENTITY_TOL: f64 = 1e-9;
const SPEARMAN_TOL: f64 = 1e-12;
const MC_VS_EXACT_TOL: f64 = 0.01;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const CALIBRATION_BAND: (f64, f64) = (0.03, 0.07);
const CALIBRATION_BUDGET: Duration = Duration::from_secs(120);
const TREND_STEP_TOL: f64 = 0.02;
const TREND_FINAL_MIN: f64 = 0.95;
const TREND_BUDGET: Duration = Duration::from_secs(120);
const SUMMARY_TOL: f64 = 1e-12;

const YEARS: [Year; 5] = [2004, 2005, 2006, 2007, 2008];
const BENCHMARK: Year = 2008;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took <= budget, format!("took {took:?}, budget {budget:?}"))
}

// ---------------------------------------------------------------------------
// 1. Worked-example golden values.

fn worked_example() -> Outcome {
    let start = Instant::now();
    // sds, RS, SS, national p̄, expected contribution
    let rows = [
        ("MAT/02", 13, 4.128, 0.432, 0.059),
        ("MAT/03", 31, 7.810, 0.633, 0.076),
        ("MAT/05", 60, 33.791, 0.922, 0.226),
        ("MAT/06", 5, 3.840, 0.624, 0.038),
        ("MAT/07", 23, 13.973, 0.884, 0.098),
        ("MAT/08", 13, 6.107, 1.062, 0.035),
        ("MAT/09", 3, 1.011, 0.875, 0.007),
        ("INF/01", 14, 4.996, 0.841, 0.037),
    ];
    let cells: Vec<ProductivityCell> = rows
        .iter()
        .map(|(sds, rs, ss, _, _)| {
            sds_productivity(CellInputs {
                university: "NA".into(),
                sds: (*sds).into(),
                obs_year: 2008,
                strength: *ss,
                staff: *rs,
            })
            .unwrap()
        })
        .collect();
    let baselines: BTreeMap<SdsId, NationalBaseline> = rows
        .iter()
        .map(|(sds, _, _, pbar, _)| {
            (
                SdsId::new(*sds),
                NationalBaseline {
                    sds: (*sds).into(),
                    obs_year: 2008,
                    value: *pbar,
                    universities: 1,
                },
            )
        })
        .collect();
    let refs: Vec<&ProductivityCell> = cells.iter().collect();
    let p = uda_productivity(&"NA".into(), &"MATH".into(), &refs, &baselines).map_err(|e| e.to_string())?;
    check(p.staff == 162, format!("RS total {}", p.staff))?;
    check(
        (p.score - 0.576).abs() <= GOLDEN_TOL,
        format!("P = {:.5}, expected 0.576", p.score),
    )?;
    let mut worst: f64 = 0.0;
    for ((sds, _, _, _, expected), c) in rows.iter().zip(&p.contributions) {
        let d = (c.value - expected).abs();
        worst = worst.max(d);
        check(d <= GOLDEN_TOL, format!("{sds}: {:.5} vs {expected}", c.value))?;
    }
    within_budget(start, GOLDEN_BUDGET)?;
    Ok(format!("P = {:.4}, max contribution deviation {worst:.4}", p.score))
}

// ---------------------------------------------------------------------------
// 2. AII fixtures and scale invariance.

fn single_cat(id: String, year: Year, cat: &str, c: u64) -> PublicationRecord {
    PublicationRecord::new(
        id,
        year,
        vec![CategoryWeight::new(cat, 1.0)],
        [(2008, c)].into_iter().collect(),
    )
    .unwrap()
}

fn aii_suite() -> Outcome {
    let start = Instant::now();

    // Weighted average over categories.
    let mut t = MedianTable::default();
    t.insert(2002, "A".into(), 2008, 2.0);
    t.insert(2002, "B".into(), 2008, 8.0);
    let p = PublicationRecord::new(
        "p",
        2002,
        vec![CategoryWeight::new("A", 0.5), CategoryWeight::new("B", 0.5)],
        [(2008, 4)].into_iter().collect(),
    )
    .unwrap();
    let v = article_impact_index(&p, 2008, &t).unwrap().value();
    check(v == 1.25, format!("weighted AII {v}, expected 1.25"))?;

    // Median over cited publications only.
    let pubs = [0, 0, 3, 5]
        .iter()
        .enumerate()
        .map(|(i, &c)| single_cat(format!("m{i}"), 2002, "X", c))
        .collect();
    let corpus = build_corpus(pubs, vec![], vec![], FieldTaxonomy::default()).unwrap();
    let m = compute_median_table(&corpus, 2008).unwrap();
    check(
        m.get(2002, &"X".into(), 2008) == Some(4.0),
        "median of {0,0,3,5} is not 4",
    )?;

    // Scale invariance: every cell scaled by its own k ∈ {2, 3}.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let n_pubs = rng.random_range(5..60);
        let cats = ["A", "B", "C"];
        let layout: Vec<(Year, &str, u64)> = (0..n_pubs)
            .map(|_| {
                (
                    rng.random_range(2001..=2003),
                    cats[rng.random_range(0..cats.len())],
                    if rng.random_bool(0.25) { 0 } else { rng.random_range(1..40) },
                )
            })
            .collect();
        let factors: BTreeMap<(Year, &str), u64> = layout
            .iter()
            .map(|(y, c, _)| ((*y, *c), rng.random_range(2..=3)))
            .collect();
        let build = |scaled: bool| {
            let pubs = layout
                .iter()
                .enumerate()
                .map(|(i, (y, cat, c))| {
                    let k = if scaled { factors[&(*y, *cat)] } else { 1 };
                    single_cat(format!("p{i}"), *y, cat, c * k)
                })
                .collect();
            build_corpus(pubs, vec![], vec![], FieldTaxonomy::default()).unwrap()
        };
        let score = |c: &citewin::Corpus| {
            let t = compute_median_table(c, 2008).unwrap();
            impact_scores(c, 2008, &t).unwrap()
        };
        let (a, b) = (score(&build(false)), score(&build(true)));
        check(a == b, format!("case {case}: AII changed under scaling"))?;
        // Rankings built from the scores must match bit for bit.
        let ra = rank_universities(
            sensitivity::Scope::Uda("X".into()),
            2008,
            &a.iter().map(|(k, v)| (UniversityId::new(k.as_str()), *v)).collect(),
        )
        .unwrap();
        let rb = rank_universities(
            sensitivity::Scope::Uda("X".into()),
            2008,
            &b.iter().map(|(k, v)| (UniversityId::new(k.as_str()), *v)).collect(),
        )
        .unwrap();
        check(ra == rb, format!("case {case}: ranking changed under scaling"))?;
    }

    // P rankings with every count of a synthetic corpus scaled by k.
    for seed in 0..5 {
        let dir = tempfile::tempdir().unwrap();
        common::generate_into(&common::small_synth(15, 40 + seed), dir.path());
        let rank_all = |d: &Path| {
            let p = Pipeline::load(d, AnalysisOptions::default()).unwrap();
            let y = p.evaluate(&[2008]).unwrap();
            report::rankings_by_scope(&y, ScopeLevel::Uda).unwrap()
        };
        let base = rank_all(dir.path());
        for k in [2u64, 3] {
            let scaled = tempfile::tempdir().unwrap();
            for f in citewin::ingest::INPUT_FILES {
                fs::copy(dir.path().join(f), scaled.path().join(f)).unwrap();
            }
            let cites = fs::read_to_string(dir.path().join("citations.csv")).unwrap();
            let mut out = String::new();
            for (i, line) in cites.lines().enumerate() {
                if i == 0 {
                    out.push_str(line);
                } else {
                    let (head, n) = line.rsplit_once(',').unwrap();
                    out.push_str(&format!("{head},{}", n.parse::<u64>().unwrap() * k));
                }
                out.push('\n');
            }
            fs::write(scaled.path().join("citations.csv"), out).unwrap();
            check(
                rank_all(scaled.path()) == base,
                format!("seed {seed}: P rankings changed with k = {k}"),
            )?;
        }
    }
    within_budget(start, AII_BUDGET)?;
    Ok("fixtures exact; 50 scaled corpora and 10 scaled P rankings bit-identical".into())
}

// ---------------------------------------------------------------------------
// 3. Normalization identity on synthetic corpora.

fn normalization_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..5 {
        let dir = tempfile::tempdir().unwrap();
        common::generate_into(&common::small_synth(25, seed), dir.path());
        let pipeline = Pipeline::load(dir.path(), AnalysisOptions::default()).map_err(|e| e.to_string())?;
        let yearly = pipeline.evaluate(&YEARS).map_err(|e| e.to_string())?;
        for (year, p) in &yearly {
            for (uda, rows) in &p.udas {
                let rs: f64 = rows.values().map(|r| f64::from(r.staff)).sum();
                let weighted: f64 = rows.values().map(|r| f64::from(r.staff) * r.score).sum();
                let d = (weighted / rs - 1.0).abs();
                worst = worst.max(d);
                checked += 1;
                check(d <= IDENTITY_TOL, format!("seed {seed} {year} {uda}: {}", weighted / rs))?;
            }
        }
    }
    check(checked > 0, "no UDA evaluated")?;
    Ok(format!("{checked} UDA-years, max deviation {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 4. Statistical oracles.

fn brute_fractional_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let greater = x.iter().filter(|&&w| w > v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            greater + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Exact two-sided p over all `C(n, k)` splits, enumerated with bit masks.
fn brute_perm_p(top: &[f64], rest: &[f64]) -> f64 {
    let all: Vec<f64> = top.iter().chain(rest).copied().collect();
    let (n, k) = (all.len(), top.len());
    let stat = |mask: u32| {
        let (mut st, mut sr) = (0.0, 0.0);
        for (i, v) in all.iter().enumerate() {
            if mask & (1 << i) != 0 {
                st += v;
            } else {
                sr += v;
            }
        }
        st / k as f64 - sr / (n - k) as f64
    };
    let obs = stat((1 << k) - 1).abs();
    let (mut hits, mut total) = (0u32, 0u32);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            total += 1;
            if stat(mask).abs() >= obs - 1e-9 {
                hits += 1;
            }
        }
    }
    f64::from(hits) / f64::from(total)
}

fn statistical_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    for case in 0..1000 {
        let n = rng.random_range(2..=10);
        let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5))).collect();
        let b: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5))).collect();
        let ids: Vec<UniversityId> = (0..n).map(|i| UniversityId::new(format!("U{i}"))).collect();
        let mk = |v: &[f64]| {
            rank_universities(
                sensitivity::Scope::Uda("X".into()),
                2008,
                &ids.iter().cloned().zip(v.iter().copied()).collect(),
            )
            .unwrap()
        };
        let (fa, fb) = (brute_fractional_ranks(&a), brute_fractional_ranks(&b));
        let oracle = brute_pearson(&fa, &fb);
        match spearman_rho(&mk(&a), &mk(&b)) {
            Ok(rho) => {
                let d = (rho - oracle).abs();
                worst = worst.max(d);
                evaluated += 1;
                check(d <= SPEARMAN_TOL, format!("case {case}: {rho} vs {oracle}"))?;
            }
            Err(_) => check(!oracle.is_finite(), format!("case {case}: undefined but oracle {oracle}"))?,
        }
    }

    // Every (n, k) with at most 12 assignments.
    let shapes = [(2, 1), (3, 1), (4, 1), (4, 2), (5, 1), (5, 2), (6, 1), (8, 1), (12, 1), (4, 3), (5, 4), (12, 11)];
    let mut max_mc_gap: f64 = 0.0;
    for (i, &(n, k)) in shapes.iter().enumerate() {
        for rep in 0..3 {
            let values: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6))).collect();
            let (top, rest) = values.split_at(k);
            let exact = brute_perm_p(top, rest);
            let ex = two_sample_perm_test_with(top, rest, 12, 1, PermMode::Auto).unwrap();
            check(
                ex.exhaustive || ex.degenerate,
                format!("shape {n}/{k} did not enumerate"),
            )?;
            check(
                ex.p_value == exact,
                format!("shape {n}/{k}: exhaustive {} vs oracle {exact}", ex.p_value),
            )?;
            let mc = two_sample_perm_test_with(top, rest, 100_000, (i * 10 + rep) as u64, PermMode::MonteCarlo)
                .unwrap();
            let gap = (mc.p_value - exact).abs();
            max_mc_gap = max_mc_gap.max(gap);
            check(
                gap <= MC_VS_EXACT_TOL,
                format!("shape {n}/{k}: Monte Carlo {} vs exact {exact}", mc.p_value),
            )?;
        }
    }
    within_budget(start, ORACLE_BUDGET)?;
    Ok(format!(
        "{evaluated} Spearman cases (max err {worst:.1e}); {} exact tests; max MC gap {max_mc_gap:.4}",
        shapes.len() * 3
    ))
}

// ---------------------------------------------------------------------------
// 5. Calibration under a simulated null.

fn calibration() -> Outcome {
    let start = Instant::now();
    let dist = LogNormal::new(0.0, 1.0).unwrap();
    let ids: Vec<UniversityId> = (0..20).map(|i| UniversityId::new(format!("U{i:02}"))).collect();
    let (mut rejections, mut total) = (0usize, 0usize);
    for dataset in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + dataset);
        // Three disciplines over overlapping university sets; the top group
        // is a fixed label unrelated to the values.
        let groups: Vec<UdaGroupData> = ["A", "B", "C"]
            .iter()
            .enumerate()
            .map(|(g, uda)| {
                let members = &ids[g * 2..g * 2 + 16];
                let values = members
                    .iter()
                    .map(|u| (u.clone(), dist.sample(&mut rng)))
                    .collect();
                let top = members[..4].iter().cloned().collect();
                UdaGroupData::new((*uda).into(), values, top).unwrap()
            })
            .collect();
        let r = npc_fisher_combine(&groups, 999, dataset).map_err(|e| e.to_string())?;
        check(
            r.p_value > 0.0 && r.p_value <= 1.0,
            format!("dataset {dataset}: combined p {}", r.p_value),
        )?;
        for p in &r.partials {
            check(p.p_value > 0.0 && p.p_value <= 1.0, "partial p outside (0, 1]")?;
            total += 1;
            rejections += usize::from(p.p_value <= 0.05);
        }
    }
    let rate = rejections as f64 / total as f64;
    check(
        (CALIBRATION_BAND.0..=CALIBRATION_BAND.1).contains(&rate),
        format!("rejection rate {rate:.4} outside {CALIBRATION_BAND:?}"),
    )?;
    within_budget(start, CALIBRATION_BUDGET)?;
    Ok(format!("rejection rate {rate:.4} over {total} partial tests"))
}

// ---------------------------------------------------------------------------
// 6. Rankings stabilize toward the benchmark.

fn stability_trend() -> Outcome {
    let start = Instant::now();
    let compared = &YEARS[..4];
    let mut sums = vec![0.0; compared.len()];
    let seeds = 20;
    for seed in 0..seeds {
        let dir = tempfile::tempdir().unwrap();
        let cfg = citewin::synth::SynthConfig {
            seed: 500 + seed,
            ..Default::default()
        };
        common::generate_into(&cfg, dir.path());
        let pipeline = Pipeline::load(dir.path(), AnalysisOptions::default()).map_err(|e| e.to_string())?;
        let yearly = pipeline.evaluate(&YEARS).map_err(|e| e.to_string())?;
        let rankings = report::rankings_by_scope(&yearly, ScopeLevel::Uda).map_err(|e| e.to_string())?;
        for (i, &y) in compared.iter().enumerate() {
            let rhos: Vec<f64> = rankings
                .values()
                .map(|r| {
                    let by_year = |yy| r.iter().find(|x| x.obs_year() == yy).unwrap();
                    spearman_rho(by_year(y), by_year(BENCHMARK)).unwrap()
                })
                .collect();
            sums[i] += rhos.iter().sum::<f64>() / rhos.len() as f64;
        }
    }
    let avg: Vec<f64> = sums.iter().map(|s| s / seeds as f64).collect();
    for w in avg.windows(2) {
        check(
            w[1] >= w[0] - TREND_STEP_TOL,
            format!("average rho decreases: {avg:.4?}"),
        )?;
    }
    let last = *avg.last().unwrap();
    check(
        last >= TREND_FINAL_MIN,
        format!("final-step rho {last:.4} < {TREND_FINAL_MIN}"),
    )?;
    within_budget(start, TREND_BUDGET)?;
    Ok(format!("seed-averaged rho {avg:.3?}"))
}

// ---------------------------------------------------------------------------
// 7. Quartile class shifts and table shape.

fn quartile_bounds() -> Outcome {
    let mut max_shift = 0u8;
    let mut tables = 0;
    for seed in 0..5 {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        common::generate_into(&common::small_synth(30, 900 + seed), dir.path());
        report::cmd_sensitivity(dir.path(), AnalysisOptions::default(), &YEARS, BENCHMARK, ScopeLevel::Uda, out.path())
            .map_err(|e| e.to_string())?;

        // Recompute every class shift directly from the rankings.
        let pipeline = Pipeline::load(dir.path(), AnalysisOptions::default()).map_err(|e| e.to_string())?;
        let yearly = pipeline.evaluate(&YEARS).map_err(|e| e.to_string())?;
        let rankings = report::rankings_by_scope(&yearly, ScopeLevel::Uda).map_err(|e| e.to_string())?;
        for list in rankings.values() {
            let classes: Vec<_> = list
                .iter()
                .map(|r| {
                    quartile_classes(&r.entries().iter().map(|e| (e.university.clone(), e.score)).collect())
                        .unwrap()
                })
                .collect();
            let bench = classes.last().unwrap();
            for c in &classes {
                for (u, &k) in &c.classes {
                    let s = k.abs_diff(bench.classes[u]);
                    check(s <= 3, format!("class shift {s}"))?;
                    max_shift = max_shift.max(s);
                }
            }
        }

        let text = fs::read_to_string(out.path().join(report::QUARTILE_STATS_CSV)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        check(
            lines[0] == "scope_level,scope_id,metric,2004_vs_2008,2005_vs_2008,2006_vs_2008,2007_vs_2008",
            format!("header {}", lines[0]),
        )?;
        check(
            lines.len() == 1 + 2 * rankings.len(),
            format!("{} rows for {} UDAs", lines.len() - 1, rankings.len()),
        )?;
        for pair in lines[1..].chunks(2) {
            let a: Vec<&str> = pair[0].split(',').collect();
            let b: Vec<&str> = pair[1].split(',').collect();
            check(a.len() == 7 && b.len() == 7, "row width")?;
            check(a[2] == "average_class_shift" && b[2] == "outliers", "metric order")?;
            check(a[1] == b[1], "rows of one UDA must be adjacent")?;
            for v in &a[3..] {
                let x: f64 = v.parse().map_err(|_| format!("bad average {v}"))?;
                check((0.0..=3.0).contains(&x), format!("average {x}"))?;
            }
            for v in &b[3..] {
                v.parse::<usize>().map_err(|_| format!("bad count {v}"))?;
            }
        }
        tables += 1;
    }
    Ok(format!("{tables} tables well formed; largest class shift {max_shift}"))
}

// ---------------------------------------------------------------------------
// 8. Byte-identical outputs.

fn read_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let data = tempfile::tempdir().unwrap();
    common::generate_into(&common::small_synth(20, 77), data.path());
    let npc_opts = NpcOptions {
        top_percentile: 80.0,
        permutations: 2000,
        seed: 42,
    };
    let run = |threads: usize| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = tempfile::tempdir().unwrap();
        let sens = out.path().join("sens");
        let npc = out.path().join("npc");
        pool.install(|| {
            report::cmd_sensitivity(data.path(), AnalysisOptions::default(), &YEARS, BENCHMARK, ScopeLevel::Uda, &sens)?;
            report::cmd_sensitivity(data.path(), AnalysisOptions::default(), &YEARS, BENCHMARK, ScopeLevel::Sds, &sens.join("sds"))?;
            report::cmd_npc(data.path(), AnalysisOptions::default(), &YEARS, BENCHMARK, npc_opts, &npc)
        })
        .map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        for (prefix, dir) in [("sens/", sens.clone()), ("sens/sds/", sens.join("sds")), ("npc/", npc)] {
            for (name, bytes) in read_all(&dir) {
                files.insert(format!("{prefix}{name}"), bytes);
            }
        }
        Ok(files)
    };
    let first = run(1)?;
    let again = run(1)?;
    let parallel = run(4)?;
    check(first.len() >= 10, format!("only {} files", first.len()))?;
    check(first == again, "two single-threaded runs differ")?;
    for (name, bytes) in &first {
        check(
            parallel.get(name) == Some(bytes),
            format!("{name} differs between 1 and 4 threads"),
        )?;
    }
    Ok(format!("{} files identical across runs and thread counts", first.len()))
}

// ---------------------------------------------------------------------------
// 9. Stability-summary average equals the mean of yearly mean shifts.

fn summary_semantics() -> Outcome {
    let chemistry: f64 = [2.707, 1.879, 1.448, 0.896].iter().sum::<f64>() / 4.0;
    check(
        (chemistry - 1.732).abs() <= 0.001,
        format!("yearly means average to {chemistry}"),
    )?;
    let mut scopes = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..4 {
        let dir = tempfile::tempdir().unwrap();
        common::generate_into(&common::small_synth(25, 300 + seed), dir.path());
        let pipeline = Pipeline::load(dir.path(), AnalysisOptions::default()).map_err(|e| e.to_string())?;
        let yearly = pipeline.evaluate(&YEARS).map_err(|e| e.to_string())?;
        for level in [ScopeLevel::Uda, ScopeLevel::Sds] {
            let rankings = report::rankings_by_scope(&yearly, level).map_err(|e| e.to_string())?;
            for list in rankings.values() {
                let a = sensitivity::analyze_scope(list, BENCHMARK).map_err(|e| e.to_string())?;
                let yearly_means: Vec<f64> = a.descriptives.values().map(|d| d.mean).collect();
                let mean_of_means = yearly_means.iter().sum::<f64>() / yearly_means.len() as f64;
                let d = (a.summary.average - mean_of_means).abs();
                worst = worst.max(d);
                check(d <= SUMMARY_TOL, format!("{}: {} vs {mean_of_means}", a.scope, a.summary.average))?;
                scopes += 1;
            }
        }
    }
    Ok(format!("{scopes} scopes, max deviation {worst:.1e}; yearly means average to {chemistry:.4}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("worked-example golden values", worked_example),
        ("AII fixtures and scale invariance", aii_suite),
        ("normalization identity", normalization_identity),
        ("statistical oracles", statistical_oracles),
        ("permutation calibration", calibration),
        ("stability trend", stability_trend),
        ("quartile bounds", quartile_bounds),
        ("determinism", determinism),
        ("stability summary semantics", summary_semantics),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({took:.2}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({took:.2}s) {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
