//! UMD-style TP53 mutation records and their numeric encoding.
//!
//! A record carries six effective fields (file number, codon, exon, wild-type codon,
//! mutant codon, cancer) and the mutation position, which is the regression target.
//! Encoded feature vectors are laid out as
//!
//! ```text
//! [file_no] codon exon | one-hot wt codon | one-hot mutant codon | one-hot cancer
//! ```
//!
//! with numeric columns min-max scaled to `[-1, 1]` and the target scaled to `[0, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mutscan::Codon;

pub const DATASET_COLUMNS: [&str; 8] =
    ["split", "file_no", "mutation_position", "codon", "exon", "wt_codon", "mutant_codon", "cancer"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SplitTag {
    #[serde(rename = "TRN")]
    Train,
    #[serde(rename = "VLD")]
    Validation,
    #[serde(rename = "TST")]
    Test,
    #[serde(rename = "")]
    Unassigned,
}

impl SplitTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitTag::Train => "TRN",
            SplitTag::Validation => "VLD",
            SplitTag::Test => "TST",
            SplitTag::Unassigned => "",
        }
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TRN" => Ok(SplitTag::Train),
            "VLD" => Ok(SplitTag::Validation),
            "TST" => Ok(SplitTag::Test),
            "" | "-" => Ok(SplitTag::Unassigned),
            other => Err(Error::Query(format!("unknown split tag '{other}'"))),
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of the mutation database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UmdRecord {
    pub split: SplitTag,
    pub file_no: i64,
    pub mutation_position: i64,
    pub codon: i64,
    pub exon: i64,
    pub wt_codon: Codon,
    pub mutant_codon: Codon,
    pub cancer: String,
}

impl UmdRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if self.wt_codon == self.mutant_codon {
            return Err(format!("wild-type and mutant codon are both {}", self.wt_codon));
        }
        if self.codon < 1 || self.exon < 1 || self.mutation_position < 1 {
            return Err("codon, exon and mutation_position must be at least 1".into());
        }
        if self.cancer.trim().is_empty() {
            return Err("empty cancer label".into());
        }
        Ok(())
    }
}

fn column_index(header: &csv::StringRecord, name: &str) -> Option<usize> {
    header.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Reads records from CSV or TSV text; the delimiter is taken from the header line.
///
/// The `split` column is optional. Line numbers in errors count the header as line 1.
pub fn load_records<R: Read>(mut input: R) -> Result<Vec<UmdRecord>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let header_line = text.lines().next().unwrap_or_default();
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader =
        csv::ReaderBuilder::new().delimiter(delimiter).has_headers(true).flexible(true).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::NoRecords);
    }

    let split_col = column_index(&header, "split");
    let mut cols = [0usize; 7];
    for (slot, name) in cols.iter_mut().zip(&DATASET_COLUMNS[1..]) {
        *slot = column_index(&header, name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let [c_file, c_pos, c_codon, c_exon, c_wt, c_mut, c_cancer] = cols;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 2, |p| p.line()) as usize;
        let bad = |message: String| Error::InvalidRow { row: line, message };
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |c: usize| row.get(c).map(str::trim).unwrap_or("");
        let int = |c: usize, name: &str| {
            field(c).parse::<i64>().map_err(|_| bad(format!("{name} '{}' is not an integer", field(c))))
        };
        let triplet = |c: usize, name: &str| {
            let raw = field(c);
            if raw.len() != 3 {
                return Err(bad(format!("{name} '{raw}' is not a 3-base triplet")));
            }
            raw.parse::<Codon>().map_err(|_| bad(format!("{name} '{raw}' is not a DNA triplet")))
        };
        let split = match split_col {
            Some(c) => field(c).parse().map_err(|e: Error| bad(e.to_string()))?,
            None => SplitTag::Unassigned,
        };
        let rec = UmdRecord {
            split,
            file_no: int(c_file, "file_no")?,
            mutation_position: int(c_pos, "mutation_position")?,
            codon: int(c_codon, "codon")?,
            exon: int(c_exon, "exon")?,
            wt_codon: triplet(c_wt, "wt_codon")?,
            mutant_codon: triplet(c_mut, "mutant_codon")?,
            cancer: field(c_cancer).to_string(),
        };
        rec.check().map_err(bad)?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(records)
}

/// Writes records back out with the canonical comma-separated header.
pub fn write_records<W: std::io::Write>(out: W, records: &[UmdRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_COLUMNS)?;
    for r in records {
        w.write_record([
            r.split.to_string(),
            r.file_no.to_string(),
            r.mutation_position.to_string(),
            r.codon.to_string(),
            r.exon.to_string(),
            r.wt_codon.to_string(),
            r.mutant_codon.to_string(),
            r.cancer.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Closed integer interval observed for a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: i64,
    pub max: i64,
}

impl ValueRange {
    fn observe<I: IntoIterator<Item = i64>>(values: I) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(ValueRange { min: v, max: v }),
            Some(r) => Some(ValueRange { min: r.min.min(v), max: r.max.max(v) }),
        })
    }

    pub fn span(&self) -> i64 {
        self.max - self.min
    }

    /// Maps `[min, max]` onto `[-1, 1]`; values outside the range are clamped.
    fn to_symmetric(self, v: f64) -> f64 {
        if self.span() == 0 {
            return 0.0;
        }
        (2.0 * (v - self.min as f64) / self.span() as f64 - 1.0).clamp(-1.0, 1.0)
    }

    fn midpoint(&self) -> f64 {
        (self.min as f64 + self.max as f64) / 2.0
    }
}

/// Numeric input ranges, one per numeric column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericRanges {
    /// `None` when the file number is excluded from the inputs.
    pub file_no: Option<ValueRange>,
    pub codon: ValueRange,
    pub exon: ValueRange,
}

/// Dictionaries and scaling ranges that define the feature layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSchema {
    wt_dict: Vec<String>,
    mut_dict: Vec<String>,
    cancer_dict: Vec<String>,
    numeric_ranges: NumericRanges,
    target_range: ValueRange,
}

fn check_dictionary(name: &str, dict: &[String]) -> Result<()> {
    if dict.is_empty() {
        return Err(Error::Schema(format!("{name} dictionary is empty")));
    }
    if dict.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Schema(format!("{name} dictionary is not sorted and duplicate-free")));
    }
    Ok(())
}

fn check_range(name: &str, r: &ValueRange) -> Result<()> {
    if r.min > r.max {
        return Err(Error::Schema(format!("{name} range has min > max")));
    }
    Ok(())
}

impl EncodingSchema {
    pub fn new(
        wt_dict: Vec<String>,
        mut_dict: Vec<String>,
        cancer_dict: Vec<String>,
        numeric_ranges: NumericRanges,
        target_range: ValueRange,
    ) -> Result<Self> {
        let schema = Self { wt_dict, mut_dict, cancer_dict, numeric_ranges, target_range };
        schema.validate()?;
        Ok(schema)
    }

    /// Checks the sortedness and range invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        check_dictionary("wt_codon", &self.wt_dict)?;
        check_dictionary("mutant_codon", &self.mut_dict)?;
        check_dictionary("cancer", &self.cancer_dict)?;
        if let Some(r) = &self.numeric_ranges.file_no {
            check_range("file_no", r)?;
        }
        check_range("codon", &self.numeric_ranges.codon)?;
        check_range("exon", &self.numeric_ranges.exon)?;
        check_range("target", &self.target_range)
    }

    /// Same schema with the file number removed from the inputs.
    pub fn without_file_no(mut self) -> Self {
        self.numeric_ranges.file_no = None;
        self
    }

    pub fn includes_file_no(&self) -> bool {
        self.numeric_ranges.file_no.is_some()
    }

    pub fn numeric_width(&self) -> usize {
        2 + usize::from(self.includes_file_no())
    }

    pub fn feature_width(&self) -> usize {
        self.numeric_width() + self.wt_dict.len() + self.mut_dict.len() + self.cancer_dict.len()
    }

    pub fn wt_dict(&self) -> &[String] {
        &self.wt_dict
    }

    pub fn mut_dict(&self) -> &[String] {
        &self.mut_dict
    }

    pub fn cancer_dict(&self) -> &[String] {
        &self.cancer_dict
    }

    pub fn numeric_ranges(&self) -> &NumericRanges {
        &self.numeric_ranges
    }

    pub fn target_range(&self) -> ValueRange {
        self.target_range
    }

    /// Offsets of the wild-type, mutant and cancer one-hot blocks.
    pub fn block_offsets(&self) -> [usize; 3] {
        let wt = self.numeric_width();
        let mutant = wt + self.wt_dict.len();
        [wt, mutant, mutant + self.mut_dict.len()]
    }

    fn lookup(dict: &[String], name: &'static str, value: &str) -> Result<usize> {
        dict.binary_search_by(|d| d.as_str().cmp(value))
            .map_err(|_| Error::UnseenCategory { dictionary: name, value: value.to_string() })
    }

    pub fn wt_index(&self, codon: &str) -> Result<usize> {
        Self::lookup(&self.wt_dict, "wt_codon", codon)
    }

    pub fn mut_index(&self, codon: &str) -> Result<usize> {
        Self::lookup(&self.mut_dict, "mutant_codon", codon)
    }

    pub fn cancer_index(&self, cancer: &str) -> Result<usize> {
        Self::lookup(&self.cancer_dict, "cancer", cancer)
    }

    /// Fails on the first record whose categories are missing from this schema.
    pub fn check_covers(&self, records: &[UmdRecord]) -> Result<()> {
        for r in records {
            self.wt_index(r.wt_codon.as_str())?;
            self.mut_index(r.mutant_codon.as_str())?;
            self.cancer_index(&r.cancer)?;
        }
        Ok(())
    }
}

/// Dictionaries are the sorted distinct values; ranges are the observed extremes.
pub fn build_schema(records: &[UmdRecord]) -> Result<EncodingSchema> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let dict = |f: &dyn Fn(&UmdRecord) -> String| -> Vec<String> {
        records.iter().map(f).collect::<BTreeSet<_>>().into_iter().collect()
    };
    let range = |f: &dyn Fn(&UmdRecord) -> i64| ValueRange::observe(records.iter().map(f)).expect("non-empty");
    EncodingSchema::new(
        dict(&|r| r.wt_codon.to_string()),
        dict(&|r| r.mutant_codon.to_string()),
        dict(&|r| r.cancer.clone()),
        NumericRanges { file_no: Some(range(&|r| r.file_no)), codon: range(&|r| r.codon), exon: range(&|r| r.exon) },
        range(&|r| r.mutation_position),
    )
}

/// Input fields of one feature vector. A missing `file_no` encodes as the range midpoint.
#[derive(Debug, Clone, Copy)]
pub struct FeatureFields<'a> {
    pub file_no: Option<i64>,
    pub codon: i64,
    pub exon: i64,
    pub wt_codon: &'a str,
    pub mutant_codon: &'a str,
    pub cancer: &'a str,
}

impl<'a> From<&'a UmdRecord> for FeatureFields<'a> {
    fn from(r: &'a UmdRecord) -> Self {
        FeatureFields {
            file_no: Some(r.file_no),
            codon: r.codon,
            exon: r.exon,
            wt_codon: r.wt_codon.as_str(),
            mutant_codon: r.mutant_codon.as_str(),
            cancer: &r.cancer,
        }
    }
}

/// Builds just the input vector.
pub fn encode_features(fields: &FeatureFields<'_>, schema: &EncodingSchema) -> Result<Vec<f64>> {
    let [wt_off, mut_off, cancer_off] = schema.block_offsets();
    let wt = schema.wt_index(fields.wt_codon)?;
    let mutant = schema.mut_index(fields.mutant_codon)?;
    let cancer = schema.cancer_index(fields.cancer)?;

    let mut features = vec![0.0; schema.feature_width()];
    let ranges = &schema.numeric_ranges;
    let mut k = 0;
    if let Some(r) = &ranges.file_no {
        let v = fields.file_no.map_or(r.midpoint(), |v| v as f64);
        features[k] = r.to_symmetric(v);
        k += 1;
    }
    features[k] = ranges.codon.to_symmetric(fields.codon as f64);
    features[k + 1] = ranges.exon.to_symmetric(fields.exon as f64);
    features[wt_off + wt] = 1.0;
    features[mut_off + mutant] = 1.0;
    features[cancer_off + cancer] = 1.0;
    Ok(features)
}

/// Feature vector and normalized target for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedRow {
    pub features: Vec<f64>,
    pub target: f64,
    pub source: UmdRecord,
}

/// Normalized target of a mutation position; positions outside the schema range are errors.
pub fn encode_target(position: i64, schema: &EncodingSchema) -> Result<f64> {
    let r = schema.target_range;
    if position < r.min || position > r.max {
        return Err(Error::TargetOutOfRange { position, min: r.min, max: r.max });
    }
    if r.span() == 0 {
        return Ok(0.0);
    }
    Ok(((position - r.min) as f64 / r.span() as f64).clamp(0.0, 1.0))
}

pub fn encode(record: &UmdRecord, schema: &EncodingSchema) -> Result<EncodedRow> {
    Ok(EncodedRow {
        features: encode_features(&FeatureFields::from(record), schema)?,
        target: encode_target(record.mutation_position, schema)?,
        source: record.clone(),
    })
}

pub fn encode_all(records: &[UmdRecord], schema: &EncodingSchema) -> Result<Vec<EncodedRow>> {
    records.iter().map(|r| encode(r, schema)).collect()
}

/// Maps a network output back to position units without rounding or range checks.
pub fn denormalize(value: f64, schema: &EncodingSchema) -> f64 {
    let r = schema.target_range;
    value * r.span() as f64 + r.min as f64
}

/// Inverse of the target scaling, rounded to the nearest position.
pub fn decode_target(value: f64, schema: &EncodingSchema) -> Result<i64> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::NormalizedOutOfRange(value));
    }
    Ok(denormalize(value, schema).round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.70, validation: 0.15, test: 0.15 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|&f| f <= 0.0 || !f.is_finite()) {
            return Err(Error::SplitFractions(format!("{parts:?} must all be positive")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::SplitFractions(format!("{parts:?} sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<UmdRecord>,
    pub validation: Vec<UmdRecord>,
    pub test: Vec<UmdRecord>,
}

impl Splits {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }

    /// Records of all three partitions.
    pub fn all(&self) -> Vec<UmdRecord> {
        self.train.iter().chain(&self.validation).chain(&self.test).cloned().collect()
    }
}

/// Groups records by their split tags, preserving input order. Untagged records are dropped.
pub fn group_by_tag(records: &[UmdRecord]) -> Splits {
    let pick = |t: SplitTag| records.iter().filter(|r| r.split == t).cloned().collect();
    Splits { train: pick(SplitTag::Train), validation: pick(SplitTag::Validation), test: pick(SplitTag::Test) }
}

/// Partitions records into TRN/VLD/TST.
///
/// Fully tagged inputs keep their tags. Untagged inputs are shuffled with `seed` and cut by
/// `fractions`, rounding validation and test sizes down so the remainder lands in TRN.
pub fn split(records: &[UmdRecord], fractions: SplitFractions, seed: u64) -> Result<Splits> {
    fractions.validate()?;
    let tagged = records.iter().filter(|r| r.split != SplitTag::Unassigned).count();
    let splits = if tagged == records.len() {
        group_by_tag(records)
    } else if tagged == 0 {
        let mut shuffled = records.to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = shuffled.len() as f64;
        let n_vld = (n * fractions.validation + 1e-9).floor() as usize;
        let n_tst = (n * fractions.test + 1e-9).floor() as usize;
        let n_trn = shuffled.len() - n_vld - n_tst;
        let tag = |mut v: Vec<UmdRecord>, t: SplitTag| {
            v.iter_mut().for_each(|r| r.split = t);
            v
        };
        let test = shuffled.split_off(n_trn + n_vld);
        let validation = shuffled.split_off(n_trn);
        Splits {
            train: tag(shuffled, SplitTag::Train),
            validation: tag(validation, SplitTag::Validation),
            test: tag(test, SplitTag::Test),
        }
    } else {
        return Err(Error::MixedSplitTags);
    };
    for (part, name) in [(&splits.train, "TRN"), (&splits.validation, "VLD"), (&splits.test, "TST")] {
        if part.is_empty() {
            return Err(Error::EmptySplit(name));
        }
    }
    Ok(splits)
}

/// Majority exon for each codon; ties go to the smaller exon number.
pub fn codon_exon_map(records: &[UmdRecord]) -> BTreeMap<i64, i64> {
    let mut counts: BTreeMap<i64, BTreeMap<i64, usize>> = BTreeMap::new();
    for r in records {
        *counts.entry(r.codon).or_default().entry(r.exon).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(codon, exons)| {
            // max_by_key keeps the last maximum; iterate descending so ties favour the smaller exon
            let exon = exons.iter().rev().max_by_key(|(_, &n)| n).map(|(&e, _)| e).expect("at least one exon");
            (codon, exon)
        })
        .collect()
}
