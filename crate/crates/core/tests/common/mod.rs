#![allow(dead_code)]

use std::fs;
use std::path::Path;

use citewin::synth::{self, SdsSpec, SynthConfig, UdaSpec};

/// Writes `(file name, contents)` pairs into `dir`.
pub fn write_files(dir: &Path, files: &[(&str, String)]) {
    for (name, body) in files {
        fs::write(dir.join(name), body).unwrap();
    }
}

/// A small valid corpus: two UDAs, three SDSs, three universities,
/// observation years 2004 to 2008.
pub fn small_corpus_files() -> Vec<(&'static str, String)> {
    let fields = "sds_id,uda_id\nMAT/01,MATH\nMAT/02,MATH\nFIS/01,PHYS\n";
    let mut researchers = String::from("researcher_id,university_id,sds_id\n");
    let mut pubs = String::from("pub_id,pub_year,categories\n");
    let mut cites = String::from("pub_id,obs_year,cum_citations\n");
    let mut auth = String::from("pub_id,researcher_id\n");
    let sds = [("MAT/01", "ALG"), ("MAT/02", "GEO"), ("FIS/01", "PHY")];
    let mut n_pub = 0;
    for (u, uni) in ["UA", "UB", "UC"].iter().enumerate() {
        for (s, (sds_id, cat)) in sds.iter().enumerate() {
            for r in 0..2 {
                let rid = format!("{uni}-{s}-{r}");
                researchers.push_str(&format!("{rid},{uni},{sds_id}\n"));
                for k in 0..(1 + (u + r + s) % 3) {
                    n_pub += 1;
                    let pid = format!("P{n_pub:03}");
                    let year = 2001 + (k + u) as i32 % 3;
                    let cats = if (n_pub % 4) == 0 && *cat != "PHY" {
                        "ALG:0.5;GEO:0.5".to_string()
                    } else {
                        cat.to_string()
                    };
                    pubs.push_str(&format!("{pid},{year},{cats}\n"));
                    let base = ((n_pub * 7 + u * 3) % 5) as u64;
                    for (i, obs) in (2004..=2008).enumerate() {
                        let c = base * (i as u64 + 1) / 2 + (n_pub % 3 == 0) as u64 * i as u64;
                        cites.push_str(&format!("{pid},{obs},{c}\n"));
                    }
                    auth.push_str(&format!("{pid},{rid}\n"));
                }
            }
        }
    }
    vec![
        ("fields.csv", fields.to_string()),
        ("researchers.csv", researchers),
        ("publications.csv", pubs),
        ("citations.csv", cites),
        ("authorship.csv", auth),
    ]
}

/// Replaces the contents of one named file in a fixture set.
pub fn with_file(
    mut files: Vec<(&'static str, String)>,
    name: &str,
    body: &str,
) -> Vec<(&'static str, String)> {
    for f in files.iter_mut() {
        if f.0 == name {
            f.1 = body.to_string();
        }
    }
    files
}

/// Default synthetic settings shrunk for fast tests.
pub fn small_synth(n_universities: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        n_universities,
        staff_range: [2, 8],
        seed,
        ..SynthConfig::default()
    }
}

/// Two UDAs of one SDS each, all universities drawn from one distribution.
pub fn null_synth(n_universities: usize, seed: u64) -> SynthConfig {
    let uda = |id: &str, sds: &str, profile: &str| UdaSpec {
        id: id.to_string(),
        sds: vec![SdsSpec {
            id: sds.to_string(),
            category: format!("{sds}-C"),
            profile: profile.to_string(),
        }],
    };
    SynthConfig {
        n_universities,
        staff_range: [3, 8],
        udas: vec![uda("A", "A/01", "slow"), uda("B", "B/01", "fast")],
        university_sigma: 0.0,
        coauthor_prob: 0.0,
        multi_category_prob: 0.0,
        seed,
        ..SynthConfig::default()
    }
}

pub fn generate_into(config: &SynthConfig, dir: &Path) {
    synth::generate(config, dir).unwrap();
}
