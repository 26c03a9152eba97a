//! Codon-level mutation detection between a normal CDS and a patient CDS.
//!
//! The patient sequence is globally aligned against the normal coding sequence, the
//! alignment is cut into the normal sequence's codons, and every codon where the patient
//! differs becomes a [`MutationFinding`]. Codons touched by an alignment gap are reported
//! as [`MutationClass::FrameshiftSuspect`] and left untranslated on the patient side.

mod align;
mod code;

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use align::{align_global, AlignmentResult, Scoring, GAP};
pub use code::{translate, Codon, STOP};

use crate::error::{Error, Result};

/// Offset between CDS coordinates and the mutation-position column of the UMD records.
pub const DEFAULT_UTR_OFFSET: i64 = 63;

pub const REPORT_HEADER: [&str; 8] =
    ["codon", "wt_codon", "mutant_codon", "base_index", "wt_aa", "mutant_aa", "position", "class"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationClass {
    Silent,
    Missense,
    Nonsense,
    FrameshiftSuspect,
}

impl MutationClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            MutationClass::Silent => "silent",
            MutationClass::Missense => "missense",
            MutationClass::Nonsense => "nonsense",
            MutationClass::FrameshiftSuspect => "frameshift_suspect",
        }
    }

    fn from_amino_acids(wt: char, mutant: char) -> Self {
        if wt == mutant {
            MutationClass::Silent
        } else if mutant == STOP {
            MutationClass::Nonsense
        } else {
            MutationClass::Missense
        }
    }
}

impl fmt::Display for MutationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One differing codon.
///
/// `mutant_codon` holds the aligned patient symbols for the codon. It is a clean triplet
/// for substitutions; for frameshift suspects it may contain gaps or inserted bases, and
/// `mutant_aa` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationFinding {
    pub codon_number: usize,
    pub wt_codon: Codon,
    pub mutant_codon: String,
    pub base_index: usize,
    pub wt_aa: char,
    pub mutant_aa: Option<char>,
    pub mutation_position: i64,
    pub mutation_class: MutationClass,
}

impl MutationFinding {
    /// The patient codon when it is a clean substitution.
    pub fn mutant_triplet(&self) -> Option<Codon> {
        match self.mutation_class {
            MutationClass::FrameshiftSuspect => None,
            _ => self.mutant_codon.parse().ok(),
        }
    }

    pub fn is_malignant(&self) -> bool {
        self.mutation_class != MutationClass::Silent
    }
}

/// UMD mutation-position coordinate of base `base_index` of codon `codon_number`.
pub fn position_of(codon_number: usize, base_index: usize, utr_offset: i64) -> Result<i64> {
    if codon_number == 0 {
        return Err(Error::CodonNumber);
    }
    if !(1..=3).contains(&base_index) {
        return Err(Error::BaseIndex(base_index));
    }
    Ok(3 * (codon_number as i64 - 1) + base_index as i64 + utr_offset)
}

struct CodonColumns {
    patient: Vec<u8>,
    gapped: bool,
}

/// Finds every codon of the normal CDS where the patient alignment row differs.
pub fn scan_mutations(alignment: &AlignmentResult, utr_offset: i64) -> Result<Vec<MutationFinding>> {
    let normal = alignment.ungapped_normal();
    if !normal.len().is_multiple_of(3) {
        return Err(Error::IncompleteCodons(normal.len()));
    }
    let n_codons = normal.len() / 3;
    let mut columns: Vec<CodonColumns> =
        (0..n_codons).map(|_| CodonColumns { patient: Vec::with_capacity(3), gapped: false }).collect();

    let mut consumed = 0usize;
    for (&nb, &pb) in alignment.aligned_normal.iter().zip(&alignment.aligned_patient) {
        let codon = if nb == GAP {
            // insertions belong to the codon holding the preceding normal base
            consumed.saturating_sub(1) / 3
        } else {
            consumed / 3
        };
        if codon >= n_codons {
            continue;
        }
        let col = &mut columns[codon];
        col.patient.push(pb);
        if nb == GAP || pb == GAP {
            col.gapped = true;
        }
        if nb != GAP {
            consumed += 1;
        }
    }

    let mut findings = Vec::new();
    for (k, col) in columns.iter().enumerate() {
        let wt_bases = &normal[3 * k..3 * k + 3];
        if !col.gapped && col.patient == wt_bases {
            continue;
        }
        let wt_codon = Codon::new([wt_bases[0], wt_bases[1], wt_bases[2]])?;
        let wt_aa = wt_codon.amino_acid();
        let base_index = (0..3).find(|&i| col.patient.get(i) != Some(&wt_bases[i])).map_or(3, |i| i + 1);
        let (mutant_aa, class) = if col.gapped {
            (None, MutationClass::FrameshiftSuspect)
        } else {
            let aa = translate(&col.patient)?;
            (Some(aa), MutationClass::from_amino_acids(wt_aa, aa))
        };
        findings.push(MutationFinding {
            codon_number: k + 1,
            wt_codon,
            mutant_codon: String::from_utf8_lossy(&col.patient).into_owned(),
            base_index,
            wt_aa,
            mutant_aa,
            mutation_position: position_of(k + 1, base_index, utr_offset)?,
            mutation_class: class,
        });
    }
    Ok(findings)
}

/// Writes findings as the `codon,wt_codon,...,class` CSV report.
pub fn write_report<W: Write>(out: W, findings: &[MutationFinding]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for f in findings {
        w.write_record([
            f.codon_number.to_string(),
            f.wt_codon.to_string(),
            f.mutant_codon.clone(),
            f.base_index.to_string(),
            f.wt_aa.to_string(),
            f.mutant_aa.map(String::from).unwrap_or_default(),
            f.mutation_position.to_string(),
            f.mutation_class.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
