use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use lutqec::clut::{compress_frame, compress_rank, default_scheme, memory_report, Clut, Scheme};
use lutqec::decoder::{decode_trial, OracleBackend};
use lutqec::error::{Error, Result};
use lutqec::format::{self, Table};
use lutqec::harness::{
    self, BackendKind, BackendOptions, Backends, ExperimentSpec, LerPoint, DEFAULT_CYCLES, DEFAULT_TRIALS,
};
use lutqec::layout::{CodeLayout, StabType};
use lutqec::lut::{size_report, LutBuilder, SparseLut, DEFAULT_ADDRESS_LIMIT, DEFAULT_WEIGHT_CUTOFF};
use lutqec::noise::{self, sample_trial, NoiseParams, TraceHeader, TraceRecord};

#[derive(Parser, Debug)]
#[command(name = "lutqec", version, about = "Lookup-table decoding for small rotated surface codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Program a lookup table and write it to disk.
    BuildLut(BuildArgs),
    /// Compress a table (read with --in, or built from --distance/--rounds).
    CompressLut(CompressArgs),
    /// Print table sizes for decoder configurations.
    ReportSizes(SizeArgs),
    /// Monte Carlo logical error rate at one or more physical error rates.
    Run(RunArgs),
    /// Sweep physical error rate, rounds and cycle counts on paired trials.
    Sweep(SweepArgs),
    /// Replay a trace through a backend and the matching oracle.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TypeArg {
    X,
    Z,
    Both,
}

impl TypeArg {
    fn types(self) -> Vec<StabType> {
        match self {
            TypeArg::X => vec![StabType::X],
            TypeArg::Z => vec![StabType::Z],
            TypeArg::Both => StabType::BOTH.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Lut,
    Clut,
    Oracle,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Lut => BackendKind::Lut,
            BackendArg::Clut => BackendKind::Clut,
            BackendArg::Oracle => BackendKind::Oracle,
        }
    }
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub distance: usize,
    #[arg(long)]
    pub rounds: usize,
    #[arg(long = "type", value_enum, default_value = "both")]
    pub stab_type: TypeArg,
    /// Keep only addresses up to this Hamming weight.
    #[arg(long)]
    pub weight_cutoff: Option<u32>,
    /// Build a dense table even above the address-bit limit.
    #[arg(long)]
    pub force_full: bool,
    /// Output file; with --type both, `.x`/`.z` is inserted before the extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub distance: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long = "type", value_enum, default_value = "both")]
    pub stab_type: TypeArg,
    /// Rank-compress at this cutoff instead of the default scheme.
    #[arg(long)]
    pub weight_cutoff: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SizeArgs {
    #[arg(long)]
    pub distance: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CommonRun {
    #[arg(long, default_value_t = 3)]
    pub distance: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "lut")]
    pub backend: BackendArg,
    #[arg(long)]
    pub weight_cutoff: Option<u32>,
    #[arg(long)]
    pub force_full: bool,
    /// Physical error rate; repeat for several points.
    #[arg(long = "pphys", required = true)]
    pub pphys: Vec<f64>,
    /// CSV output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonRun {
    fn backend(&self) -> BackendOptions {
        BackendOptions {
            kind: self.backend.into(),
            weight_cutoff: self.weight_cutoff,
            force_full: self.force_full,
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonRun,
    #[arg(long, default_value_t = 2)]
    pub rounds: usize,
    #[arg(long, default_value_t = DEFAULT_CYCLES)]
    pub cycles: usize,
    /// Also write the sampled trials as a trace (single --pphys only).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonRun,
    /// Window size; repeat to compare several on the same trials.
    #[arg(long, default_values_t = [2])]
    pub rounds: Vec<usize>,
    /// Cycle count; repeat for several.
    #[arg(long, default_values_t = [DEFAULT_CYCLES])]
    pub cycles: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Trace file written by `run --trace`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub rounds: usize,
    #[arg(long, value_enum, default_value = "lut")]
    pub backend: BackendArg,
    #[arg(long)]
    pub weight_cutoff: Option<u32>,
    #[arg(long)]
    pub force_full: bool,
    /// Per-trial output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Outcome of a command that ran to completion but found a data problem.
pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult = std::result::Result<(), Failure>;

pub fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::BuildLut(a) => build_lut(a),
        Command::CompressLut(a) => compress_lut(a),
        Command::ReportSizes(a) => report_sizes(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `table.lut` -> `table.x.lut` when several types share one --out.
fn typed_path(out: &Path, t: StabType, several: bool) -> PathBuf {
    if !several {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{}.{}", t.as_str(), ext.to_string_lossy()),
        None => format!("{stem}.{}", t.as_str()),
    };
    out.with_file_name(name)
}

fn build_lut(a: BuildArgs) -> CliResult {
    let layout = CodeLayout::build(a.distance)?;
    let types = a.stab_type.types();
    for &t in &types {
        let builder = LutBuilder::new(&layout, a.rounds, t)?;
        let bits = builder.config().address_bits();
        let cutoff = match a.weight_cutoff {
            Some(w) => Some(w),
            None if bits > DEFAULT_ADDRESS_LIMIT && !a.force_full => Some(DEFAULT_WEIGHT_CUTOFF),
            None => None,
        };
        let table = match cutoff {
            Some(w) => Table::Sparse(builder.build_weight_bounded(w)?),
            None => Table::Dense(builder.build_full(a.force_full)?),
        };
        let path = typed_path(&a.out, t, types.len() > 1);
        format::save(&path, &table)?;
        println!("{}\t{}\t{}", builder.config(), table.kind(), path.display());
    }
    Ok(())
}

fn compress_table(table: Table, cutoff: Option<u32>) -> Result<Clut> {
    match table {
        Table::Dense(lut) => match (default_scheme(lut.config()), cutoff) {
            (Scheme::Frame, None) => Ok(Clut::Frame(compress_frame(&lut)?)),
            (_, w) => {
                let w = w.unwrap_or(DEFAULT_WEIGHT_CUTOFF);
                Ok(Clut::Rank(compress_rank(&SparseLut::from_dense(&lut, w), w)?))
            }
        },
        Table::Sparse(s) => {
            let w = cutoff.unwrap_or(s.weight_cutoff());
            Ok(Clut::Rank(compress_rank(&s, w)?))
        }
        Table::Compressed(_) => Err(Error::InvalidConfig("table is already compressed".into())),
    }
}

fn compress_lut(a: CompressArgs) -> CliResult {
    let mut cluts = Vec::new();
    if let Some(input) = &a.input {
        cluts.push(compress_table(format::load(input)?, a.weight_cutoff)?);
    } else {
        let (Some(d), Some(m)) = (a.distance, a.rounds) else {
            return Err(Failure::Usage("compress-lut needs --in or both --distance and --rounds".into()));
        };
        let layout = CodeLayout::build(d)?;
        for t in a.stab_type.types() {
            let builder = LutBuilder::new(&layout, m, t)?;
            cluts.push(harness::build_clut(&builder, a.weight_cutoff, false)?);
        }
    }
    if let Some(out) = &a.out {
        let several = cluts.len() > 1;
        for c in &cluts {
            let path = typed_path(out, c.base().stab_type, several);
            format::save(&path, &Table::Compressed(c.clone()))?;
        }
    }
    let refs: Vec<&Clut> = cluts.iter().collect();
    println!("{}", memory_report(&refs)?);
    Ok(())
}

/// Configurations listed by `report-sizes` with no arguments.
const SIZE_ROWS: [(usize, usize); 5] = [(3, 2), (3, 3), (4, 2), (4, 3), (5, 2)];

fn report_sizes(a: SizeArgs) -> CliResult {
    let rows: Vec<(usize, usize)> = match (a.distance, a.rounds) {
        (None, None) => SIZE_ROWS.to_vec(),
        (Some(d), Some(m)) => vec![(d, m)],
        (Some(d), None) => SIZE_ROWS.iter().copied().filter(|r| r.0 == d).collect(),
        (None, Some(m)) => SIZE_ROWS.iter().copied().filter(|r| r.1 == m).collect(),
    };
    for (d, m) in rows {
        println!("{}", size_report(d, m)?);
    }
    Ok(())
}

fn run(a: RunArgs) -> CliResult {
    let c = &a.common;
    if a.trace.is_some() && c.pphys.len() != 1 {
        return Err(Failure::Usage("--trace needs exactly one --pphys".into()));
    }
    let spec = ExperimentSpec {
        distance: c.distance,
        rounds: a.rounds,
        cycles: a.cycles,
        trials: c.trials,
        seed: c.seed,
        p_list: c.pphys.clone(),
        backend: c.backend(),
    };
    spec.validate()?;
    let layout = CodeLayout::build(c.distance)?;
    for t in StabType::BOTH {
        let cfg = lutqec::lut::DecoderConfig::new(&layout, a.rounds, t)?;
        harness::check_buildable(&cfg, &spec.backend)?;
    }
    let report = harness::run_experiment(&spec)?;
    if let Some(path) = &a.trace {
        let params = NoiseParams::new(c.pphys[0], a.cycles, c.seed)?;
        let mut w = BufWriter::new(File::create(path)?);
        noise::write_trace_header(&mut w, &TraceHeader { distance: c.distance, cycles: a.cycles })?;
        for i in 0..c.trials {
            noise::write_trace_record(&mut w, &TraceRecord::from_trial(i, &sample_trial(&layout, &params, i)))?;
        }
        w.flush()?;
    }
    harness::write_csv(output(c.out.as_deref())?, &report.points)?;
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult {
    let c = &a.common;
    let opts = c.backend();
    let base = ExperimentSpec {
        distance: c.distance,
        rounds: a.rounds[0],
        cycles: a.cycles[0],
        trials: c.trials,
        seed: c.seed,
        p_list: c.pphys.clone(),
        backend: opts,
    };
    base.validate()?;
    let layout = CodeLayout::build(c.distance)?;
    for &m in &a.rounds {
        for t in StabType::BOTH {
            harness::check_buildable(&lutqec::lut::DecoderConfig::new(&layout, m, t)?, &opts)?;
        }
    }
    let mut points: Vec<LerPoint> = Vec::new();
    for &cycles in &a.cycles {
        for &p in &c.pphys {
            let params = NoiseParams::new(p, cycles, c.seed)?;
            let r = harness::sweep_rounds(c.distance, &a.rounds, &params, c.trials, &opts)?;
            for q in &r.ratios {
                eprintln!(
                    "p={p} cycles={cycles} LER(m={})/LER(m={}) = {:.3} +- {:.3}",
                    q.m_from, q.m_to, q.ratio, q.stderr
                );
            }
            points.extend(r.points);
        }
    }
    if c.pphys.len() >= 3 && a.rounds.len() == 1 && a.cycles.len() == 1 {
        let curve: Vec<_> = points.iter().map(|pt| (pt.p, pt.ler())).collect();
        match harness::fit_scaling_exponent(&curve) {
            Ok(e) => eprintln!("fitted exponent {e:.3}"),
            Err(e) => eprintln!("no exponent fit: {e}"),
        }
    }
    harness::write_csv(output(c.out.as_deref())?, &points)?;
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult {
    let (header, records) = noise::read_trace(BufReader::new(File::open(&a.input)?))?;
    let layout = CodeLayout::build(header.distance)?;
    let opts = BackendOptions {
        kind: a.backend.into(),
        weight_cutoff: a.weight_cutoff,
        force_full: a.force_full,
    };
    let backends = Backends::build(&layout, a.rounds, &opts)?;
    let ox = OracleBackend::new(&layout, a.rounds, StabType::X)?;
    let oz = OracleBackend::new(&layout, a.rounds, StabType::Z)?;
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "trial_index,logical_error,decoder_failures")?;
    let mut mismatches = 0usize;
    for rec in &records {
        let trial = rec.to_trial();
        let got = backends.decode(&layout, &trial)?;
        let want = decode_trial(&layout, &ox, &oz, &trial)?;
        if got.logical_error != want.logical_error {
            mismatches += 1;
        }
        writeln!(out, "{},{},{}", rec.trial_index, u8::from(got.logical_error), got.decoder_failures)?;
    }
    out.flush()?;
    eprintln!("{} trials, {mismatches} mismatches against the oracle", records.len());
    if mismatches > 0 {
        return Err(Failure::Data(Error::Trace(format!("{mismatches} trials disagree with the oracle"))));
    }
    Ok(())
}
