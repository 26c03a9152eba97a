mod common;

use common::fixture_sequence;
use p53qpn::seqio::gc_percent;

/// Reference GC content published for the TP53 coding sequence.
const REFERENCE_GC: f64 = 54.85;
const TOLERANCE: f64 = 0.5;

#[test]
fn normal_cds_gc_matches_reference() {
    let gc = gc_percent(&fixture_sequence("tp53_normal_cds.fasta")).unwrap();
    assert!(
        (gc - REFERENCE_GC).abs() <= TOLERANCE,
        "GC {gc:.4}% differs from the reference {REFERENCE_GC}% by more than {TOLERANCE}"
    );
}

#[test]
fn normal_cds_gc_exact() {
    let gc = gc_percent(&fixture_sequence("tp53_normal_cds.fasta")).unwrap();
    // 672 G/C over 1182 bases
    assert!((gc - 100.0 * 672.0 / 1182.0).abs() < 1e-12, "{gc}");
}
