mod config;

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use p53qpn::dataset::{
    build_schema, encode_all, group_by_tag, load_records, split, EncodedRow, EncodingSchema, SplitFractions, SplitTag,
    Splits, UmdRecord,
};
use p53qpn::diagnose::{
    diagnose_batch, diagnose_one, write_results, BatchOutcome, DiagnosisConfig, DiagnosisQuery, DiagnosisResult,
    StructuredQuery,
};
use p53qpn::metrics::{evaluate_split, write_eval_csv, write_eval_table, EvalResult};
use p53qpn::mutscan::{align_global, scan_mutations, write_report, Scoring, DEFAULT_UTR_OFFSET};
use p53qpn::qpn::{
    init_network, load_checkpoint, save_checkpoint, train, Checkpoint, LayerSizes, TrainConfig, DEFAULT_HIDDEN,
};
use p53qpn::seqio::{gc_gate, gc_percent, parse_fasta, DnaSequence, DEFAULT_GC_THRESHOLD};

use config::{open, parse_optimizer, pick, require_path, FileConfig};

/// Bad flags, missing or unreadable files. Exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "p53qpn",
    version,
    about = "TP53 mutation scanning, Quickprop regression training and cancer diagnosis"
)]
struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, env = "P53QPN_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align a patient CDS to the normal CDS and report codon mutations.
    Scan(ScanArgs),
    /// Train the regression network on a mutation table and write a checkpoint.
    Train(TrainArgs),
    /// Answer diagnosis queries with a trained checkpoint.
    Diagnose(DiagnoseArgs),
    /// Evaluate a checkpoint on a mutation table.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, env = "P53QPN_NORMAL")]
    normal: Option<PathBuf>,
    #[arg(long, env = "P53QPN_PATIENT")]
    patient: Option<PathBuf>,
    #[arg(long, env = "P53QPN_UTR_OFFSET", allow_negative_numbers = true)]
    utr_offset: Option<i64>,
    #[arg(long, env = "P53QPN_GC_THRESHOLD")]
    gc_threshold: Option<f64>,
    /// Report GC-gate failures as warnings instead of errors.
    #[arg(long, env = "P53QPN_SKIP_GC_GATE")]
    skip_gc_gate: bool,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoringArgs {
    #[arg(long, env = "P53QPN_MATCH_SCORE", allow_negative_numbers = true)]
    match_score: Option<i32>,
    #[arg(long, env = "P53QPN_MISMATCH", allow_negative_numbers = true)]
    mismatch: Option<i32>,
    #[arg(long, env = "P53QPN_GAP", allow_negative_numbers = true)]
    gap: Option<i32>,
}

impl ScoringArgs {
    fn resolve(&self, file: &FileConfig) -> Scoring {
        let d = Scoring::default();
        Scoring {
            match_score: pick(self.match_score, file.match_score, d.match_score),
            mismatch: pick(self.mismatch, file.mismatch, d.mismatch),
            gap: pick(self.gap, file.gap, d.gap),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum TableFormat {
    #[default]
    Csv,
    Table,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, env = "P53QPN_DATA")]
    data: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long, env = "P53QPN_CHECKPOINT")]
    out: Option<PathBuf>,
    /// Per-epoch error trace; defaults to the checkpoint path with extension `.trace.csv`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write the evaluation CSV here.
    #[arg(long)]
    eval_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: TableFormat,
    #[arg(long, env = "P53QPN_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "P53QPN_EPSILON")]
    epsilon: Option<f64>,
    #[arg(long, env = "P53QPN_MU")]
    mu: Option<f64>,
    #[arg(long, env = "P53QPN_MAX_EPOCHS")]
    max_epochs: Option<usize>,
    #[arg(long, env = "P53QPN_MIN_ERROR_IMPROVEMENT")]
    min_error_improvement: Option<f64>,
    #[arg(long, env = "P53QPN_DENOM_FLOOR")]
    denom_floor: Option<f64>,
    #[arg(long, env = "P53QPN_INIT_RANGE")]
    init_range: Option<f64>,
    /// quickprop or gradient_descent.
    #[arg(long, env = "P53QPN_OPTIMIZER")]
    optimizer: Option<String>,
    #[arg(long, env = "P53QPN_HIDDEN")]
    hidden: Option<usize>,
    #[arg(long, env = "P53QPN_TRAIN_FRACTION")]
    train_fraction: Option<f64>,
    #[arg(long, env = "P53QPN_VALIDATION_FRACTION")]
    validation_fraction: Option<f64>,
    #[arg(long, env = "P53QPN_TEST_FRACTION")]
    test_fraction: Option<f64>,
    /// Leave the file number out of the network inputs.
    #[arg(long, env = "P53QPN_DROP_FILE_NO")]
    drop_file_no: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["query", "batch", "patient"])))]
struct DiagnoseArgs {
    #[arg(long, env = "P53QPN_CHECKPOINT")]
    checkpoint: Option<PathBuf>,
    #[arg(long, env = "P53QPN_DATA")]
    data: Option<PathBuf>,
    /// Single query `codon,wt_codon,mutant_codon`.
    #[arg(long)]
    query: Option<String>,
    /// CSV of queries: `codon,wt_codon,mutant_codon[,exon][,position][,file_no]`.
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Patient CDS FASTA, diagnosed against --normal.
    #[arg(long, requires = "normal")]
    patient: Option<PathBuf>,
    #[arg(long)]
    normal: Option<PathBuf>,
    #[arg(long, conflicts_with = "batch")]
    exon: Option<i64>,
    #[arg(long, conflicts_with = "batch")]
    position: Option<i64>,
    #[arg(long, conflicts_with = "batch")]
    file_no: Option<i64>,
    #[arg(long, env = "P53QPN_UTR_OFFSET", allow_negative_numbers = true)]
    utr_offset: Option<i64>,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Write the result CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, env = "P53QPN_CHECKPOINT")]
    checkpoint: Option<PathBuf>,
    #[arg(long, env = "P53QPN_DATA")]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: TableFormat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<p53qpn::Error>() {
            return match err {
                p53qpn::Error::Divergence { .. } => 4,
                p53qpn::Error::Config(_) => 2,
                p53qpn::Error::Io(_) => 2,
                _ => 3,
            };
        }
        if cause.is::<io::Error>() {
            return 2;
        }
    }
    3
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Scan(a) => cmd_scan(a, &file),
        Command::Train(a) => cmd_train(a, &file),
        Command::Diagnose(a) => cmd_diagnose(a, &file),
        Command::Eval(a) => cmd_eval(a, &file),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| UsageError(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_sequence(path: &Path) -> Result<DnaSequence> {
    let mut records =
        parse_fasta(BufReader::new(open(path)?)).with_context(|| format!("parsing {}", path.display()))?;
    if records.len() != 1 {
        eprintln!("warning: {} holds {} records; using the first", path.display(), records.len());
    }
    Ok(records.swap_remove(0))
}

fn read_records(path: &Path) -> Result<Vec<UmdRecord>> {
    load_records(open(path)?).with_context(|| format!("loading {}", path.display()))
}

fn cmd_scan(a: ScanArgs, file: &FileConfig) -> Result<()> {
    let normal = read_sequence(&require_path(a.normal, file.normal.clone(), "normal")?)?;
    let patient = read_sequence(&require_path(a.patient, file.patient.clone(), "patient")?)?;
    let threshold = pick(a.gc_threshold, file.gc_threshold, DEFAULT_GC_THRESHOLD);
    for seq in [&normal, &patient] {
        if !gc_gate(seq, threshold)? {
            let msg = format!("'{}' has GC {:.2}%, below the {threshold}% gate", seq.id(), gc_percent(seq)?);
            if a.skip_gc_gate {
                eprintln!("warning: {msg}");
            } else {
                bail!(p53qpn::Error::Query(msg));
            }
        }
    }
    let offset = pick(a.utr_offset, file.utr_offset, DEFAULT_UTR_OFFSET);
    let alignment = align_global(&normal, &patient, a.scoring.resolve(file));
    let findings = scan_mutations(&alignment, offset)?;
    write_report(output(a.out.as_deref())?, &findings)?;
    if !findings.iter().any(|f| f.is_malignant()) {
        eprintln!("NO RISK: no malignant mutation found");
    }
    Ok(())
}

fn train_config(a: &TrainArgs, file: &FileConfig) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let optimizer = match a.optimizer.as_deref().or(file.optimizer.as_deref()) {
        Some(name) => parse_optimizer(name)?,
        None => d.optimizer,
    };
    let config = TrainConfig {
        epsilon: pick(a.epsilon, file.epsilon, d.epsilon),
        mu: pick(a.mu, file.mu, d.mu),
        max_epochs: pick(a.max_epochs, file.max_epochs, d.max_epochs),
        min_error_improvement: pick(a.min_error_improvement, file.min_error_improvement, d.min_error_improvement),
        denom_floor: pick(a.denom_floor, file.denom_floor, d.denom_floor),
        seed: pick(a.seed, file.seed, d.seed),
        init_range: pick(a.init_range, file.init_range, d.init_range),
        optimizer,
        stop_at_mse: None,
    };
    config.validate()?;
    Ok(config)
}

fn fractions(a: &TrainArgs, file: &FileConfig) -> Result<SplitFractions> {
    let d = SplitFractions::default();
    let f = SplitFractions {
        train: pick(a.train_fraction, file.train_fraction, d.train),
        validation: pick(a.validation_fraction, file.validation_fraction, d.validation),
        test: pick(a.test_fraction, file.test_fraction, d.test),
    };
    f.validate()?;
    Ok(f)
}

fn is_tagged(records: &[UmdRecord]) -> bool {
    records.iter().all(|r| r.split != SplitTag::Unassigned)
}

/// TRN/VLD/TST/ALL rows; splits that are empty or cannot be scored are skipped with a warning.
fn evaluation_rows(
    net: &p53qpn::qpn::QpnNetwork,
    schema: &EncodingSchema,
    splits: &Splits,
) -> Result<Vec<(&'static str, EvalResult)>> {
    let all = splits.all();
    let parts: [(&'static str, &[UmdRecord]); 4] =
        [("TRN", &splits.train), ("VLD", &splits.validation), ("TST", &splits.test), ("ALL", &all)];
    let mut rows = Vec::new();
    for (name, records) in parts {
        if records.is_empty() {
            eprintln!("warning: {name} split is empty; row omitted");
            continue;
        }
        let encoded = encode_all(records, schema)?;
        match evaluate_split(net, &encoded, schema) {
            Ok(r) => rows.push((name, r)),
            Err(e) => eprintln!("warning: {name} split cannot be scored ({e}); row omitted"),
        }
    }
    Ok(rows)
}

fn print_table(rows: &[(&str, EvalResult)], format: TableFormat) -> Result<()> {
    let out = io::stdout().lock();
    match format {
        TableFormat::Csv => write_eval_csv(out, rows)?,
        TableFormat::Table => write_eval_table(out, rows)?,
    }
    Ok(())
}

fn cmd_train(a: TrainArgs, file: &FileConfig) -> Result<()> {
    let data = require_path(a.data.clone(), file.data.clone(), "data")?;
    let out_path = require_path(a.out.clone(), file.checkpoint.clone(), "out")?;
    let config = train_config(&a, file)?;
    let fractions = fractions(&a, file)?;
    let hidden = pick(a.hidden, file.hidden, DEFAULT_HIDDEN);
    if hidden == 0 {
        bail!(UsageError("--hidden must be at least 1".into()));
    }
    let drop_file_no = a.drop_file_no || file.drop_file_no.unwrap_or(false);

    let records = read_records(&data)?;
    let mut schema = build_schema(&records)?;
    if drop_file_no {
        schema = schema.without_file_no();
    }
    let splits = split(&records, fractions, config.seed)?;
    let trn: Vec<EncodedRow> = encode_all(&splits.train, &schema)?;
    let vld: Vec<EncodedRow> = encode_all(&splits.validation, &schema)?;

    let net = init_network(LayerSizes::new(schema.feature_width(), hidden, 1), &config)?;
    let (best, report) = train(&net, &trn, &vld, &config)?;
    eprintln!("trained {} epochs ({:?}); returning epoch {}", report.epochs_run, report.stop_reason, report.best_epoch);

    let checkpoint = Checkpoint { network: best, schema, config, split: (!is_tagged(&records)).then_some(fractions) };
    let mut w = output(Some(&out_path))?;
    save_checkpoint(&mut w, &checkpoint)?;
    w.flush()?;
    let trace_path = a.trace.clone().unwrap_or_else(|| out_path.with_extension("trace.csv"));
    let mut w = output(Some(&trace_path))?;
    report.write_trace_csv(&mut w)?;
    w.flush()?;

    let rows = evaluation_rows(&checkpoint.network, &checkpoint.schema, &splits)?;
    if let Some(p) = &a.eval_out {
        let mut w = output(Some(p))?;
        write_eval_csv(&mut w, &rows)?;
        w.flush()?;
    }
    print_table(&rows, a.format)
}

fn load_model(path: Option<PathBuf>, file: &FileConfig) -> Result<Checkpoint> {
    let path = require_path(path, file.checkpoint.clone(), "checkpoint")?;
    load_checkpoint(BufReader::new(open(&path)?)).with_context(|| format!("loading {}", path.display()))
}

fn cmd_eval(a: EvalArgs, file: &FileConfig) -> Result<()> {
    let checkpoint = load_model(a.checkpoint, file)?;
    let records = read_records(&require_path(a.data, file.data.clone(), "data")?)?;
    checkpoint.schema.check_covers(&records).context("schema drift between checkpoint and data")?;
    let splits = if is_tagged(&records) {
        group_by_tag(&records)
    } else {
        let fractions = checkpoint.split.unwrap_or_default();
        split(&records, fractions, checkpoint.config.seed)?
    };
    let rows = evaluation_rows(&checkpoint.network, &checkpoint.schema, &splits)?;
    print_table(&rows, a.format)
}

fn print_result(r: &DiagnosisResult) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "status: {}", r.status.as_str())?;
    if let Some(f) = &r.finding {
        writeln!(
            out,
            "finding: codon {} {}>{} ({}>{}) position {} {}",
            f.codon_number,
            f.wt_codon,
            f.mutant_codon,
            f.wt_aa,
            f.mutant_aa.unwrap_or('?'),
            f.mutation_position,
            f.mutation_class
        )?;
    }
    if r.status == p53qpn::diagnose::DiagnosisStatus::NoRisk {
        writeln!(out, "NO RISK: no malignant mutation found")?;
        return Ok(());
    }
    writeln!(out, "retrieval hits:")?;
    if r.retrieval_hits.is_empty() {
        writeln!(out, "  (none)")?;
    }
    for (cancer, n) in &r.retrieval_hits {
        writeln!(out, "  {cancer}: {n}")?;
    }
    if !r.ranked_cancers.is_empty() {
        writeln!(out, "ranked cancers (|predicted - observed position|):")?;
        for (i, (cancer, score)) in r.ranked_cancers.iter().enumerate() {
            writeln!(out, "  {:>2}. {cancer} {score:.4}", i + 1)?;
        }
    }
    Ok(())
}

fn cmd_diagnose(a: DiagnoseArgs, file: &FileConfig) -> Result<()> {
    let checkpoint = load_model(a.checkpoint, file)?;
    let records = read_records(&require_path(a.data, file.data.clone(), "data")?)?;
    let config = DiagnosisConfig {
        utr_offset: pick(a.utr_offset, file.utr_offset, DEFAULT_UTR_OFFSET),
        scoring: a.scoring.resolve(file),
    };
    let (net, schema) = (&checkpoint.network, &checkpoint.schema);

    if let Some(batch) = &a.batch {
        let outcomes: Vec<BatchOutcome> = diagnose_batch(open(batch)?, net, schema, &records, &config)
            .with_context(|| format!("reading {}", batch.display()))?;
        for o in &outcomes {
            if let Err(e) = &o.result {
                eprintln!("warning: row {}: {e}", o.row);
            }
        }
        let mut w = output(a.out.as_deref())?;
        write_results(&mut w, &outcomes)?;
        w.flush()?;
        return Ok(());
    }

    let mut query = if let Some(text) = &a.query {
        let mut q = StructuredQuery::parse_triple(text)?;
        q.exon = a.exon;
        q.position = a.position;
        q.validate()?;
        DiagnosisQuery::structured(q)
    } else {
        let normal = read_sequence(a.normal.as_deref().expect("clap requires --normal"))?;
        let patient = read_sequence(a.patient.as_deref().expect("input group"))?;
        DiagnosisQuery::raw(normal, patient)
    };
    query.file_no = a.file_no;
    let result = diagnose_one(&query, net, schema, &records, &config)?;
    print_result(&result)?;
    if let Some(p) = &a.out {
        let mut w = output(Some(p))?;
        write_results(&mut w, &[BatchOutcome { row: 1, result: Ok(result) }])?;
        w.flush()?;
    }
    Ok(())
}
