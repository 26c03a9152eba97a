#![allow(dead_code)]

use std::path::PathBuf;

use p53qpn::dataset::{load_records, UmdRecord};
use p53qpn::seqio::{parse_fasta, DnaSequence};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture_records() -> Vec<UmdRecord> {
    load_records(std::fs::File::open(fixture_path("umd_sample.csv")).unwrap()).unwrap()
}

pub fn fixture_sequence(name: &str) -> DnaSequence {
    let file = std::fs::File::open(fixture_path(name)).unwrap();
    let mut records = parse_fasta(std::io::BufReader::new(file)).unwrap();
    assert_eq!(records.len(), 1);
    records.remove(0)
}
