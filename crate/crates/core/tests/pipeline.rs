mod common;

use common::fixture_sequence;
use p53qpn::mutscan::*;
use p53qpn::seqio::{gc_gate, DEFAULT_GC_THRESHOLD};

#[test]
fn normal_cds_translates_to_a_full_length_protein() {
    let normal = fixture_sequence("tp53_normal_cds.fasta");
    assert_eq!(normal.len(), 1182);
    let res = normal.residues();
    let protein: String = res.chunks(3).map(|c| translate(c).unwrap()).collect();
    assert!(protein.starts_with("MEEPQSDPSV"));
    assert_eq!(protein.find(STOP), Some(393));
    assert_eq!(&protein[247..248], "R");
}

#[test]
fn both_fixtures_pass_the_gc_gate() {
    for name in ["tp53_normal_cds.fasta", "tp53_r248w_cds.fasta"] {
        assert!(gc_gate(&fixture_sequence(name), DEFAULT_GC_THRESHOLD).unwrap(), "{name}");
    }
}

#[test]
fn r248w_patient_yields_one_missense_finding() {
    let normal = fixture_sequence("tp53_normal_cds.fasta");
    let patient = fixture_sequence("tp53_r248w_cds.fasta");
    let alignment = align_global(&normal, &patient, Scoring::default());
    assert_eq!(alignment.gap_count(), 0);
    assert_eq!(alignment.score, 1181 - 1);
    let findings = scan_mutations(&alignment, DEFAULT_UTR_OFFSET).unwrap();
    assert_eq!(findings.len(), 1);
    let f = &findings[0];
    assert_eq!((f.codon_number, f.wt_codon.as_str(), f.mutant_codon.as_str()), (248, "CGG", "TGG"));
    assert_eq!((f.wt_aa, f.mutant_aa, f.mutation_position), ('R', Some('W'), 805));
    assert_eq!(f.mutation_class, MutationClass::Missense);

    let mut buf = Vec::new();
    write_report(&mut buf, &findings).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().contains("805"));
}

#[test]
fn identical_fixtures_have_no_findings() {
    let normal = fixture_sequence("tp53_normal_cds.fasta");
    let alignment = align_global(&normal, &normal, Scoring::default());
    assert!(scan_mutations(&alignment, DEFAULT_UTR_OFFSET).unwrap().is_empty());
}
