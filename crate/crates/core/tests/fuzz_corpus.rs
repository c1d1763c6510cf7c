//! Replays the checked-in fuzz corpus and random mutations of it through
//! the invariants the fuzz targets assert.

use std::fs;
use std::path::{Path, PathBuf};

use infheat_core::config::ExperimentConfig;
use infheat_core::io::{parse_snapshot_csv, FieldDump};
use proptest::prelude::*;

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<Vec<u8>> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

fn check_config(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match ExperimentConfig::parse(text) {
        Ok(cfg) => {
            let canonical = cfg.to_canonical();
            let again = ExperimentConfig::parse(&canonical).expect("canonical form parses");
            assert_eq!(again.to_canonical(), canonical);
            assert_eq!(again.hash(), cfg.hash());
            true
        }
        Err(_) => false,
    }
}

fn check_dump(data: &[u8]) -> bool {
    match FieldDump::decode(data) {
        Ok(dump) => {
            assert_eq!(dump.values.len(), dump.header.dims.iter().product::<usize>());
            let back = FieldDump::decode(&dump.encode()).expect("re-encoded dump decodes");
            assert_eq!(back.header, dump.header);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&back.values), bits(&dump.values));
            true
        }
        Err(_) => false,
    }
}

fn check_csv(data: &[u8]) -> bool {
    match parse_snapshot_csv(data) {
        Ok(frames) => {
            assert!(frames.windows(2).all(|w| w[0].t < w[1].t));
            for f in &frames {
                assert!((1..=3).contains(&f.dim));
                assert_eq!(f.coords.len(), f.dim * f.values.len());
                assert!(f.values.iter().chain(&f.coords).chain([&f.t]).all(|v| v.is_finite()));
            }
            true
        }
        Err(_) => false,
    }
}

#[test]
fn corpus_seeds_hold_invariants() {
    let accepted = |target: &str, check: fn(&[u8]) -> bool| corpus(target).iter().filter(|d| check(d)).count();
    // every corpus has both accepted and rejected seeds
    for (target, check) in [
        ("config_parse", check_config as fn(&[u8]) -> bool),
        ("field_dump_decode", check_dump),
        ("snapshot_csv_parse", check_csv),
    ] {
        let total = corpus(target).len();
        let ok = accepted(target, check);
        assert!(ok > 0 && ok < total, "{target}: {ok} of {total} accepted");
    }
}

fn mutate(seed: &[u8], edits: &[(usize, u8, u8)]) -> Vec<u8> {
    let mut d = seed.to_vec();
    for &(pos, byte, op) in edits {
        if d.is_empty() {
            d.push(byte);
            continue;
        }
        let i = pos % d.len();
        match op % 3 {
            0 => d[i] = byte,
            1 => d.insert(i, byte),
            _ => {
                d.remove(i);
            }
        }
    }
    d
}

fn edits() -> impl Strategy<Value = (usize, Vec<(usize, u8, u8)>)> {
    (any::<usize>(), prop::collection::vec((any::<usize>(), any::<u8>(), any::<u8>()), 1..6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn mutated_configs((pick, e) in edits()) {
        let seeds = corpus("config_parse");
        check_config(&mutate(&seeds[pick % seeds.len()], &e));
    }

    #[test]
    fn mutated_dumps((pick, e) in edits()) {
        let seeds = corpus("field_dump_decode");
        check_dump(&mutate(&seeds[pick % seeds.len()], &e));
    }

    #[test]
    fn mutated_csv((pick, e) in edits()) {
        let seeds = corpus("snapshot_csv_parse");
        check_csv(&mutate(&seeds[pick % seeds.len()], &e));
    }

    #[test]
    fn arbitrary_bytes(data in prop::collection::vec(any::<u8>(), 0..256)) {
        check_config(&data);
        check_dump(&data);
        check_csv(&data);
    }
}
