//! Cancer-diagnosis queries against a trained network and the mutation records.
//!
//! A query is answered two ways. Retrieval lists the cancers of records with the same codon and
//! codon change. Inversion ranking supplies every cancer label of the schema as input together
//! with the query fields and orders the labels by how close the decoded prediction comes to the
//! observed mutation position.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::dataset::{codon_exon_map, denormalize, encode_features, EncodingSchema, FeatureFields, UmdRecord};
use crate::error::{Error, Result};
use crate::mutscan::{
    align_global, position_of, scan_mutations, Codon, MutationClass, MutationFinding, Scoring, DEFAULT_UTR_OFFSET,
};
use crate::qpn::QpnNetwork;
use crate::seqio::DnaSequence;

pub const RESULT_HEADER: &str = "row,status,top_cancer,top_score,retrieval_cancers";

/// A codon change given directly instead of as sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredQuery {
    pub codon: i64,
    pub wt_codon: Codon,
    pub mutant_codon: Codon,
    pub exon: Option<i64>,
    /// Observed mutation position; derived from the codon and first changed base when absent.
    pub position: Option<i64>,
}

impl StructuredQuery {
    pub fn new(codon: i64, wt_codon: Codon, mutant_codon: Codon) -> Result<Self> {
        let q = Self { codon, wt_codon, mutant_codon, exon: None, position: None };
        q.validate()?;
        Ok(q)
    }

    /// Parses `codon,wt_codon,mutant_codon`.
    pub fn parse_triple(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let [codon, wt, mutant] = parts[..] else {
            return Err(Error::Query(format!("expected 'codon,wt_codon,mutant_codon', got '{text}'")));
        };
        let codon = codon.parse().map_err(|_| Error::Query(format!("codon number '{codon}' is not an integer")))?;
        Self::new(codon, wt.parse()?, mutant.parse()?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.codon < 1 {
            return Err(Error::Query(format!("codon number {} must be at least 1", self.codon)));
        }
        if self.wt_codon == self.mutant_codon {
            return Err(Error::Query(format!("wild-type and mutant codon are both {}", self.wt_codon)));
        }
        if self.exon.is_some_and(|e| e < 1) {
            return Err(Error::Query("exon must be at least 1".into()));
        }
        Ok(())
    }

    fn finding(&self, utr_offset: i64) -> Result<MutationFinding> {
        let base_index = self.wt_codon.first_difference(&self.mutant_codon).unwrap_or(3);
        let mutation_position = match self.position {
            Some(p) => p,
            None => position_of(self.codon as usize, base_index, utr_offset)?,
        };
        let (wt_aa, mutant_aa) = (self.wt_codon.amino_acid(), self.mutant_codon.amino_acid());
        let mutation_class = if wt_aa == mutant_aa {
            MutationClass::Silent
        } else if mutant_aa == crate::mutscan::STOP {
            MutationClass::Nonsense
        } else {
            MutationClass::Missense
        };
        Ok(MutationFinding {
            codon_number: self.codon as usize,
            wt_codon: self.wt_codon,
            mutant_codon: self.mutant_codon.as_str().to_string(),
            base_index,
            wt_aa,
            mutant_aa: Some(mutant_aa),
            mutation_position,
            mutation_class,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryInput {
    Raw { normal: DnaSequence, patient: DnaSequence },
    Structured(StructuredQuery),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosisQuery {
    pub input: QueryInput,
    /// Defaults to the midpoint of the schema's file-number range.
    pub file_no: Option<i64>,
}

impl DiagnosisQuery {
    pub fn raw(normal: DnaSequence, patient: DnaSequence) -> Self {
        Self { input: QueryInput::Raw { normal, patient }, file_no: None }
    }

    pub fn structured(query: StructuredQuery) -> Self {
        Self { input: QueryInput::Structured(query), file_no: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosisConfig {
    pub utr_offset: i64,
    pub scoring: Scoring,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        Self { utr_offset: DEFAULT_UTR_OFFSET, scoring: Scoring::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosisStatus {
    NoRisk,
    Diagnosed,
    UnknownMutation,
}

impl DiagnosisStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagnosisStatus::NoRisk => "no_risk",
            DiagnosisStatus::Diagnosed => "diagnosed",
            DiagnosisStatus::UnknownMutation => "unknown_mutation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisResult {
    pub status: DiagnosisStatus,
    /// Cancer labels of exactly matching records with their counts, most frequent first.
    pub retrieval_hits: Vec<(String, usize)>,
    /// Every schema cancer label with its score, best first.
    pub ranked_cancers: Vec<(String, f64)>,
    pub finding: Option<MutationFinding>,
}

impl DiagnosisResult {
    fn no_risk() -> Self {
        Self { status: DiagnosisStatus::NoRisk, retrieval_hits: Vec::new(), ranked_cancers: Vec::new(), finding: None }
    }

    pub fn top_cancer(&self) -> Option<&(String, f64)> {
        self.ranked_cancers.first()
    }
}

/// Malignant findings of the patient sequence; silent changes are dropped.
pub fn classify_patient(normal: &DnaSequence, patient: &DnaSequence, utr_offset: i64) -> Result<Vec<MutationFinding>> {
    classify_with(normal, patient, utr_offset, Scoring::default())
}

fn classify_with(
    normal: &DnaSequence,
    patient: &DnaSequence,
    utr_offset: i64,
    scoring: Scoring,
) -> Result<Vec<MutationFinding>> {
    let alignment = align_global(normal, patient, scoring);
    let mut findings = scan_mutations(&alignment, utr_offset)?;
    findings.retain(MutationFinding::is_malignant);
    Ok(findings)
}

/// Counts of cancer labels among records with the same codon, wild-type and mutant triplet.
pub fn retrieve(records: &[UmdRecord], codon: i64, wt: &Codon, mutant: &Codon) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        if r.codon == codon && r.wt_codon == *wt && r.mutant_codon == *mutant {
            *counts.entry(&r.cancer).or_default() += 1;
        }
    }
    let mut hits: Vec<(String, usize)> = counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    hits.sort_by_key(|h| std::cmp::Reverse(h.1));
    hits
}

/// Scores every cancer label by `|predicted - observed|` in position units; the sort is stable,
/// so equal scores stay in dictionary order.
pub fn rank_cancers(
    net: &QpnNetwork,
    schema: &EncodingSchema,
    fields: &FeatureFields<'_>,
    observed_position: i64,
) -> Result<Vec<(String, f64)>> {
    let mut ranked = Vec::with_capacity(schema.cancer_dict().len());
    for cancer in schema.cancer_dict() {
        let features = encode_features(&FeatureFields { cancer, ..*fields }, schema)?;
        let predicted = denormalize(net.predict(&features)?, schema);
        ranked.push((cancer.clone(), (predicted - observed_position as f64).abs()));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(ranked)
}

/// Answers one query. A raw query is diagnosed from its first malignant finding.
pub fn diagnose_one(
    query: &DiagnosisQuery,
    net: &QpnNetwork,
    schema: &EncodingSchema,
    records: &[UmdRecord],
    config: &DiagnosisConfig,
) -> Result<DiagnosisResult> {
    let exons = codon_exon_map(records);
    diagnose_with_exons(query, net, schema, records, config, &exons)
}

fn diagnose_with_exons(
    query: &DiagnosisQuery,
    net: &QpnNetwork,
    schema: &EncodingSchema,
    records: &[UmdRecord],
    config: &DiagnosisConfig,
    exons: &BTreeMap<i64, i64>,
) -> Result<DiagnosisResult> {
    let (finding, exon) = match &query.input {
        QueryInput::Raw { normal, patient } => {
            let findings = classify_with(normal, patient, config.utr_offset, config.scoring)?;
            match findings.into_iter().next() {
                Some(f) => (f, None),
                None => return Ok(DiagnosisResult::no_risk()),
            }
        }
        QueryInput::Structured(q) => {
            q.validate()?;
            let f = q.finding(config.utr_offset)?;
            if !f.is_malignant() {
                return Ok(DiagnosisResult::no_risk());
            }
            (f, q.exon)
        }
    };

    let codon = finding.codon_number as i64;
    let Some(mutant) = finding.mutant_triplet() else {
        return Ok(DiagnosisResult {
            status: DiagnosisStatus::UnknownMutation,
            retrieval_hits: Vec::new(),
            ranked_cancers: Vec::new(),
            finding: Some(finding),
        });
    };
    let retrieval_hits = retrieve(records, codon, &finding.wt_codon, &mutant);
    let known = schema.wt_index(finding.wt_codon.as_str()).is_ok() && schema.mut_index(mutant.as_str()).is_ok();
    if !known {
        return Ok(DiagnosisResult {
            status: DiagnosisStatus::UnknownMutation,
            retrieval_hits,
            ranked_cancers: Vec::new(),
            finding: Some(finding),
        });
    }
    let exon = match exon.or_else(|| exons.get(&codon).copied()) {
        Some(e) => e,
        None => return Err(Error::NoExon(codon)),
    };
    let fields = FeatureFields {
        file_no: query.file_no,
        codon,
        exon,
        wt_codon: finding.wt_codon.as_str(),
        mutant_codon: mutant.as_str(),
        cancer: "",
    };
    let ranked_cancers = rank_cancers(net, schema, &fields, finding.mutation_position)?;
    Ok(DiagnosisResult { status: DiagnosisStatus::Diagnosed, retrieval_hits, ranked_cancers, finding: Some(finding) })
}

/// Outcome of one batch row; `row` is 1-based over the data rows.
#[derive(Debug)]
pub struct BatchOutcome {
    pub row: usize,
    pub result: Result<DiagnosisResult>,
}

const BATCH_REQUIRED: [&str; 3] = ["codon", "wt_codon", "mutant_codon"];
const BATCH_OPTIONAL: [&str; 3] = ["exon", "position", "file_no"];

fn parse_batch_row(fields: &BTreeMap<&str, &str>) -> Result<DiagnosisQuery> {
    let int = |name: &str| -> Result<Option<i64>> {
        match fields.get(name).map(|s| s.trim()) {
            None | Some("") => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Query(format!("{name} '{v}' is not an integer"))),
        }
    };
    let codon = int("codon")?.ok_or_else(|| Error::Query("codon is empty".into()))?;
    let wt: Codon = fields["wt_codon"].trim().parse()?;
    let mutant: Codon = fields["mutant_codon"].trim().parse()?;
    let mut q = StructuredQuery::new(codon, wt, mutant)?;
    q.exon = int("exon")?;
    q.position = int("position")?;
    q.validate()?;
    Ok(DiagnosisQuery { input: QueryInput::Structured(q), file_no: int("file_no")? })
}

/// Runs every query row of a CSV file; a bad row yields an error outcome without stopping the batch.
pub fn diagnose_batch<R: Read>(
    input: R,
    net: &QpnNetwork,
    schema: &EncodingSchema,
    records: &[UmdRecord],
    config: &DiagnosisConfig,
) -> Result<Vec<BatchOutcome>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    for name in BATCH_REQUIRED {
        if !header.iter().any(|h| h == name) {
            return Err(Error::MissingColumn(name.into()));
        }
    }
    if let Some(extra) =
        header.iter().find(|h| !BATCH_REQUIRED.contains(&h.as_str()) && !BATCH_OPTIONAL.contains(&h.as_str()))
    {
        return Err(Error::Query(format!("unexpected batch column '{extra}'")));
    }

    let exons = codon_exon_map(records);
    let mut outcomes = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let result = row.map_err(Error::from).and_then(|row| {
            if row.len() != header.len() {
                return Err(Error::Query(format!("expected {} fields, found {}", header.len(), row.len())));
            }
            let fields: BTreeMap<&str, &str> = header.iter().map(String::as_str).zip(row.iter()).collect();
            let query = parse_batch_row(&fields)?;
            diagnose_with_exons(&query, net, schema, records, config, &exons)
        });
        outcomes.push(BatchOutcome { row: row_no, result });
    }
    Ok(outcomes)
}

fn retrieval_cell(hits: &[(String, usize)]) -> String {
    hits.iter().map(|(c, n)| format!("{c}:{n}")).collect::<Vec<_>>().join("|")
}

/// Writes `row,status,top_cancer,top_score,retrieval_cancers`; failed rows get status `error`.
pub fn write_results<W: Write>(out: W, outcomes: &[BatchOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER.split(','))?;
    for o in outcomes {
        match &o.result {
            Ok(r) => {
                let (top, score) = r.top_cancer().map(|(c, s)| (c.clone(), s.to_string())).unwrap_or_default();
                w.write_record([
                    o.row.to_string(),
                    r.status.as_str().into(),
                    top,
                    score,
                    retrieval_cell(&r.retrieval_hits),
                ])?;
            }
            Err(_) => {
                w.write_record([o.row.to_string(), "error".into(), String::new(), String::new(), String::new()])?
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_schema, SplitTag};
    use crate::qpn::{init_network, LayerSizes, TrainConfig};

    fn rec(file_no: i64, codon: i64, exon: i64, wt: &str, mt: &str, cancer: &str) -> UmdRecord {
        let wt_codon: Codon = wt.parse().unwrap();
        let mutant_codon: Codon = mt.parse().unwrap();
        let base = wt_codon.first_difference(&mutant_codon).unwrap();
        UmdRecord {
            split: SplitTag::Train,
            file_no,
            mutation_position: position_of(codon as usize, base, 63).unwrap(),
            codon,
            exon,
            wt_codon,
            mutant_codon,
            cancer: cancer.into(),
        }
    }

    fn records() -> Vec<UmdRecord> {
        vec![
            rec(1, 248, 7, "CGG", "CAG", "Colon"),
            rec(2, 248, 7, "CGG", "CAG", "Leukemia"),
            rec(3, 248, 7, "CGG", "CAG", "Colon"),
            rec(4, 175, 5, "CGC", "CAC", "Breast"),
            rec(5, 273, 8, "CGT", "TGT", "Lung"),
        ]
    }

    fn setup() -> (QpnNetwork, EncodingSchema, Vec<UmdRecord>) {
        let recs = records();
        let schema = build_schema(&recs).unwrap();
        let net = init_network(LayerSizes::new(schema.feature_width(), 3, 1), &TrainConfig::default()).unwrap();
        (net, schema, recs)
    }

    fn structured(text: &str) -> DiagnosisQuery {
        DiagnosisQuery::structured(StructuredQuery::parse_triple(text).unwrap())
    }

    #[test]
    fn parse_triple_validates() {
        let q = StructuredQuery::parse_triple(" 248, cgg ,CAG").unwrap();
        assert_eq!((q.codon, q.wt_codon.as_str(), q.mutant_codon.as_str()), (248, "CGG", "CAG"));
        assert!(StructuredQuery::parse_triple("248,CGG,CGG").is_err());
        assert!(StructuredQuery::parse_triple("248,CGG").is_err());
        assert!(StructuredQuery::parse_triple("x,CGG,CAG").is_err());
        assert!(StructuredQuery::parse_triple("0,CGG,CAG").is_err());
        assert!(StructuredQuery::parse_triple("248,CGN,CAG").is_err());
    }

    #[test]
    fn retrieval_counts_exact_matches() {
        let (net, schema, recs) = setup();
        let r = diagnose_one(&structured("248,CGG,CAG"), &net, &schema, &recs, &DiagnosisConfig::default()).unwrap();
        assert_eq!(r.status, DiagnosisStatus::Diagnosed);
        assert_eq!(r.retrieval_hits, vec![("Colon".to_string(), 2), ("Leukemia".to_string(), 1)]);
        assert_eq!(r.ranked_cancers.len(), schema.cancer_dict().len());
        assert!(r.ranked_cancers.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(r.finding.unwrap().mutation_position, 806);
    }

    #[test]
    fn ranking_scores_match_manual_forward_pass() {
        let (net, schema, recs) = setup();
        let r = diagnose_one(&structured("175,CGC,CAC"), &net, &schema, &recs, &DiagnosisConfig::default()).unwrap();
        for (cancer, score) in &r.ranked_cancers {
            let f = FeatureFields { file_no: None, codon: 175, exon: 5, wt_codon: "CGC", mutant_codon: "CAC", cancer };
            let pred = denormalize(net.predict(&encode_features(&f, &schema).unwrap()).unwrap(), &schema);
            assert_eq!(*score, (pred - 587.0).abs());
        }
    }

    #[test]
    fn equal_scores_keep_dictionary_order() {
        let (net, schema, recs) = setup();
        let flat = QpnNetwork::from_weights(
            net.sizes(),
            crate::qpn::Matrix::zeros(3, schema.feature_width() + 1),
            crate::qpn::Matrix::zeros(1, 4),
        )
        .unwrap();
        let r = diagnose_one(&structured("248,CGG,CAG"), &flat, &schema, &recs, &DiagnosisConfig::default()).unwrap();
        let order: Vec<&str> = r.ranked_cancers.iter().map(|(c, _)| c.as_str()).collect();
        assert_eq!(order, schema.cancer_dict().iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn silent_and_identical_inputs_are_no_risk() {
        let (net, schema, recs) = setup();
        let cfg = DiagnosisConfig::default();
        let r = diagnose_one(&structured("100,CTG,TTG"), &net, &schema, &recs, &cfg).unwrap();
        assert_eq!(r, DiagnosisResult::no_risk());
        let s = DnaSequence::new("n", "ATGCGGTAA").unwrap();
        let r = diagnose_one(&DiagnosisQuery::raw(s.clone(), s), &net, &schema, &recs, &cfg).unwrap();
        assert_eq!(r.status, DiagnosisStatus::NoRisk);
        assert!(r.finding.is_none());
    }

    #[test]
    fn classify_filters_silent_findings() {
        let normal = DnaSequence::new("n", "ATGCTGCGGTAA").unwrap();
        let silent = DnaSequence::new("p", "ATGTTGCGGTAA").unwrap();
        assert!(classify_patient(&normal, &silent, 63).unwrap().is_empty());
        let missense = DnaSequence::new("p", "ATGCTGTGGTAA").unwrap();
        let f = classify_patient(&normal, &missense, 63).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].codon_number, f[0].wt_aa, f[0].mutant_aa), (3, 'R', Some('W')));
    }

    #[test]
    fn unseen_codon_change_is_unknown() {
        let (net, schema, recs) = setup();
        let r = diagnose_one(&structured("248,CGG,TGG"), &net, &schema, &recs, &DiagnosisConfig::default()).unwrap();
        assert_eq!(r.status, DiagnosisStatus::UnknownMutation);
        assert!(r.retrieval_hits.is_empty());
        assert!(r.ranked_cancers.is_empty());
    }

    #[test]
    fn missing_exon_is_an_error_unless_supplied() {
        let (net, schema, recs) = setup();
        let cfg = DiagnosisConfig::default();
        let q = structured("249,CGG,CAG");
        assert!(matches!(diagnose_one(&q, &net, &schema, &recs, &cfg), Err(Error::NoExon(249))));
        let mut s = StructuredQuery::parse_triple("249,CGG,CAG").unwrap();
        s.exon = Some(7);
        let r = diagnose_one(&DiagnosisQuery::structured(s), &net, &schema, &recs, &cfg).unwrap();
        assert_eq!(r.status, DiagnosisStatus::Diagnosed);
    }

    #[test]
    fn batch_matches_single_queries_and_isolates_errors() {
        let (net, schema, recs) = setup();
        let cfg = DiagnosisConfig::default();
        let text =
            "codon,wt_codon,mutant_codon,exon\n248,CGG,CAG,\n175,CGC,CAC,5\n248,CGG,CGG,\n273,CGT,TGT,\nabc,CGT,TGT,\n";
        let out = diagnose_batch(text.as_bytes(), &net, &schema, &recs, &cfg).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(out.iter().map(|o| o.row).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert!(out[2].result.is_err() && out[4].result.is_err());
        for (o, q) in [(0, "248,CGG,CAG"), (1, "175,CGC,CAC"), (3, "273,CGT,TGT")] {
            let single = diagnose_one(&structured(q), &net, &schema, &recs, &cfg).unwrap();
            assert_eq!(out[o].result.as_ref().unwrap(), &single);
        }
        let mut buf = Vec::new();
        write_results(&mut buf, &out).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RESULT_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("1,diagnosed,") && lines[1].ends_with(",Colon:2|Leukemia:1"));
        assert_eq!(lines[3], "3,error,,,");
    }

    #[test]
    fn batch_header_errors() {
        let (net, schema, recs) = setup();
        let cfg = DiagnosisConfig::default();
        let missing = diagnose_batch("codon,wt_codon\n248,CGG\n".as_bytes(), &net, &schema, &recs, &cfg);
        assert!(matches!(missing, Err(Error::MissingColumn(c)) if c == "mutant_codon"));
        let extra = diagnose_batch("codon,wt_codon,mutant_codon,colour\n".as_bytes(), &net, &schema, &recs, &cfg);
        assert!(matches!(extra, Err(Error::Query(_))));
    }
}
