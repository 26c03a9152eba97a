//! FASTA input/output for nucleotide sequences and the GC% admission gate.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Column width used when writing sequence lines.
pub const FASTA_LINE_WIDTH: usize = 70;

/// Default minimum GC% for a reference sequence to be accepted.
pub const DEFAULT_GC_THRESHOLD: f64 = 38.0;

const DNA_ALPHABET: &[u8] = b"ACGTN";
const PROTEIN_ALPHABET: &[u8] = b"ACDEFGHIKLMNPQRSTVWY*";

/// A labelled nucleotide sequence over `A`, `C`, `G`, `T` and `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnaSequence {
    id: String,
    residues: Vec<u8>,
}

impl DnaSequence {
    /// Builds a sequence, uppercasing the residues and rejecting anything outside `ACGTN`.
    pub fn new(id: impl Into<String>, residues: impl AsRef<[u8]>) -> Result<Self> {
        let id = clean_id(id.into());
        let residues = validate(&id, residues.as_ref(), DNA_ALPHABET)?;
        Ok(Self { id, residues })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &[u8] {
        &self.residues
    }

    /// Residues as text. Always valid ASCII.
    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.residues).expect("residues are ASCII")
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

impl fmt::Display for DnaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_record(f, &self.id, &self.residues)
    }
}

/// A labelled protein sequence over the 20 standard amino acids plus `*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProteinSequence {
    id: String,
    residues: Vec<u8>,
}

impl ProteinSequence {
    pub fn new(id: impl Into<String>, residues: impl AsRef<[u8]>) -> Result<Self> {
        let id = clean_id(id.into());
        let residues = validate(&id, residues.as_ref(), PROTEIN_ALPHABET)?;
        Ok(Self { id, residues })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &[u8] {
        &self.residues
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.residues).expect("residues are ASCII")
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

impl fmt::Display for ProteinSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_record(f, &self.id, &self.residues)
    }
}

fn clean_id(id: String) -> String {
    if id.contains(['\n', '\r']) {
        id.replace(['\n', '\r'], " ").trim().to_string()
    } else {
        id
    }
}

fn validate(id: &str, raw: &[u8], alphabet: &[u8]) -> Result<Vec<u8>> {
    if raw.is_empty() {
        return Err(Error::EmptyRecord { id: id.to_string() });
    }
    raw.iter()
        .enumerate()
        .map(|(i, &b)| {
            let up = b.to_ascii_uppercase();
            if alphabet.contains(&up) {
                Ok(up)
            } else {
                Err(Error::InvalidSymbol { id: id.to_string(), symbol: b as char, position: i + 1 })
            }
        })
        .collect()
}

fn write_record(f: &mut impl fmt::Write, id: &str, residues: &[u8]) -> fmt::Result {
    writeln!(f, ">{id}")?;
    for line in residues.chunks(FASTA_LINE_WIDTH) {
        // chunks of validated ASCII
        writeln!(f, "{}", std::str::from_utf8(line).unwrap())?;
    }
    Ok(())
}

/// Parses every record of a FASTA stream.
///
/// Sequence lines are concatenated with all whitespace removed and uppercased.
/// Blank lines are ignored anywhere; any other text before the first header is an error.
pub fn parse_fasta<R: BufRead>(input: R) -> Result<Vec<DnaSequence>> {
    let mut records = Vec::new();
    let mut current: Option<(String, Vec<u8>)> = None;

    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if let Some(header) = line.strip_prefix('>') {
            if let Some((id, body)) = current.take() {
                records.push(DnaSequence::new(id, body)?);
            }
            current = Some((header.trim().to_string(), Vec::new()));
            continue;
        }
        let data: Vec<u8> = line.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        if data.is_empty() {
            continue;
        }
        match current.as_mut() {
            Some((_, body)) => body.extend_from_slice(&data),
            None => return Err(Error::DataBeforeHeader { line: lineno + 1 }),
        }
    }
    if let Some((id, body)) = current.take() {
        records.push(DnaSequence::new(id, body)?);
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(records)
}

/// Parses FASTA from an in-memory string.
pub fn parse_fasta_str(input: &str) -> Result<Vec<DnaSequence>> {
    parse_fasta(input.as_bytes())
}

/// Writes records with sequence lines folded at [`FASTA_LINE_WIDTH`].
pub fn write_fasta<W: Write>(mut out: W, records: &[DnaSequence]) -> Result<()> {
    let mut buf = String::new();
    for rec in records {
        write_record(&mut buf, &rec.id, &rec.residues).expect("writing to a String");
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// GC content as a percentage of the informative (non-`N`) residues.
pub fn gc_percent(seq: &DnaSequence) -> Result<f64> {
    let mut gc = 0usize;
    let mut informative = 0usize;
    for &b in seq.residues() {
        match b {
            b'G' | b'C' => {
                gc += 1;
                informative += 1;
            }
            b'A' | b'T' => informative += 1,
            _ => {}
        }
    }
    if informative == 0 {
        return Err(Error::NoInformativeResidues(seq.id.clone()));
    }
    Ok(100.0 * gc as f64 / informative as f64)
}

/// True when the sequence's GC% is at least `threshold` (inclusive).
pub fn gc_gate(seq: &DnaSequence, threshold: f64) -> Result<bool> {
    Ok(gc_percent(seq)? >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dna(s: &str) -> DnaSequence {
        DnaSequence::new("t", s).unwrap()
    }

    fn at_percent(seq: &DnaSequence) -> f64 {
        let r = seq.residues();
        let at = r.iter().filter(|&&b| b == b'A' || b == b'T').count();
        let inf = r.iter().filter(|&&b| b != b'N').count();
        100.0 * at as f64 / inf as f64
    }

    #[test]
    fn minimal_record() {
        let recs = parse_fasta_str(">x\nACGT").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].id(), "x");
        assert_eq!(recs[0].as_str(), "ACGT");
    }

    #[test]
    fn multi_record_line_folding() {
        let recs = parse_fasta_str(">a\nAC\nGT\n>b\nTTTT").unwrap();
        let seqs: Vec<_> = recs.iter().map(|r| r.as_str()).collect();
        assert_eq!(seqs, ["ACGT", "TTTT"]);
        assert_eq!(recs[1].id(), "b");
    }

    #[test]
    fn lowercase_and_inner_whitespace() {
        let recs = parse_fasta_str(">a desc\r\nac gt\r\n\r\nnn\n").unwrap();
        assert_eq!(recs[0].as_str(), "ACGTNN");
        assert_eq!(recs[0].id(), "a desc");
    }

    #[test]
    fn rejects_invalid_symbol() {
        let err = parse_fasta_str(">x\nACXT").unwrap_err();
        assert!(matches!(err, Error::InvalidSymbol { symbol: 'X', position: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(matches!(parse_fasta_str(""), Err(Error::EmptyInput)));
        assert!(matches!(parse_fasta_str("\n\n"), Err(Error::EmptyInput)));
        assert!(matches!(parse_fasta_str("ACGT\n>x\nA"), Err(Error::DataBeforeHeader { line: 1 })));
        assert!(matches!(parse_fasta_str(">x\n>y\nAC"), Err(Error::EmptyRecord { .. })));
        assert!(matches!(parse_fasta_str(">x\nAC\n>y"), Err(Error::EmptyRecord { .. })));
    }

    #[test]
    fn output_lines_are_folded_at_70() {
        let seq = DnaSequence::new("long", "A".repeat(150)).unwrap();
        let text = seq.to_string();
        let lens: Vec<_> = text.lines().skip(1).map(str::len).collect();
        assert_eq!(lens, [70, 70, 10]);
    }

    #[test]
    fn gc_examples() {
        assert_eq!(gc_percent(&dna("GCGC")).unwrap(), 100.0);
        assert_eq!(gc_percent(&dna("ATGC")).unwrap(), 50.0);
        assert_eq!(gc_percent(&dna("GNNC")).unwrap(), 100.0);
        assert!(matches!(gc_percent(&dna("NNN")), Err(Error::NoInformativeResidues(_))));
    }

    #[test]
    fn gate_examples() {
        assert!(gc_gate(&dna("GCGC"), DEFAULT_GC_THRESHOLD).unwrap());
        assert!(!gc_gate(&dna("AAAT"), DEFAULT_GC_THRESHOLD).unwrap());
        assert!(gc_gate(&dna("ATGC"), 50.0).unwrap());
        assert!(gc_gate(&dna("NNNN"), 38.0).is_err());
    }

    #[test]
    fn protein_alphabet() {
        assert!(ProteinSequence::new("p", "MEEPQ*").is_ok());
        assert!(ProteinSequence::new("p", "MEBX").is_err());
        assert!(ProteinSequence::new("p", "").is_err());
    }

    fn dna_strategy(n: std::ops::Range<usize>) -> impl Strategy<Value = String> {
        proptest::collection::vec(prop::sample::select(vec!['A', 'C', 'G', 'T', 'N', 'a', 'g']), n)
            .prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn fasta_round_trip(seqs in proptest::collection::vec(dna_strategy(1..300), 1..5)) {
            let recs: Vec<_> = seqs
                .iter()
                .enumerate()
                .map(|(i, s)| DnaSequence::new(format!("r{i} some description"), s).unwrap())
                .collect();
            let mut out = Vec::new();
            write_fasta(&mut out, &recs).unwrap();
            let back = parse_fasta(out.as_slice()).unwrap();
            prop_assert_eq!(back, recs);
        }

        #[test]
        fn gc_of_concatenation_is_between_parts(a in "[ACGT]{1,100}", b in "[ACGT]{1,100}") {
            let (ga, gb) = (gc_percent(&dna(&a)).unwrap(), gc_percent(&dna(&b)).unwrap());
            let both = gc_percent(&dna(&format!("{a}{b}"))).unwrap();
            let rev = gc_percent(&dna(&format!("{b}{a}"))).unwrap();
            prop_assert!(both >= ga.min(gb) - 1e-9 && both <= ga.max(gb) + 1e-9);
            prop_assert!((both - rev).abs() < 1e-9);
            if ga == gb {
                prop_assert!((both - ga).abs() < 1e-9);
            }
        }

        #[test]
        fn gc_and_at_sum_to_100(s in "[ACGT]{1,200}") {
            let seq = dna(&s);
            prop_assert!((gc_percent(&seq).unwrap() + at_percent(&seq) - 100.0).abs() < 1e-9);
        }
    }
}
