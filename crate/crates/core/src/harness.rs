//! Monte Carlo experiments: logical error rates over `p`, rounds and cycle
//! counts, with deterministic per-trial RNG streams so results do not depend
//! on the number of workers.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clut::{compress_frame, compress_rank, default_scheme, Clut, Scheme};
use crate::decoder::{decode_trial, Backend, OracleBackend, TrialOutcome};
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, StabType};
use crate::lut::{DecoderConfig, LutBuilder, DEFAULT_WEIGHT_CUTOFF};
use crate::noise::{sample_trial, NoiseParams, SWEEP_P_RANGE};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "LUTQEC_WORKERS";

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_CYCLES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Lut,
    Clut,
    Oracle,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lut" => Ok(BackendKind::Lut),
            "clut" => Ok(BackendKind::Clut),
            "oracle" => Ok(BackendKind::Oracle),
            _ => Err(Error::InvalidConfig(format!("unknown backend {s:?}"))),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Lut => "lut",
            BackendKind::Clut => "clut",
            BackendKind::Oracle => "oracle",
        })
    }
}

/// How to obtain the table for one stabilizer type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BackendOptions {
    pub kind: BackendKind,
    /// Cutoff for rank-compressed tables (frame tables always use 3).
    pub weight_cutoff: Option<u32>,
    /// Allow dense builds above the default address-bit limit.
    pub force_full: bool,
}

impl BackendOptions {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            weight_cutoff: None,
            force_full: false,
        }
    }
}

pub fn build_backend(
    layout: &CodeLayout,
    rounds: usize,
    t: StabType,
    opts: &BackendOptions,
) -> Result<Box<dyn Backend>> {
    let builder = LutBuilder::new(layout, rounds, t)?;
    Ok(match opts.kind {
        BackendKind::Lut => Box::new(builder.build_full(opts.force_full)?),
        BackendKind::Oracle => Box::new(OracleBackend::from_builder(builder)),
        BackendKind::Clut => Box::new(build_clut(&builder, opts.weight_cutoff, opts.force_full)?),
    })
}

/// Compressed table with the default scheme for the configuration.
pub fn build_clut(builder: &LutBuilder, weight_cutoff: Option<u32>, force_full: bool) -> Result<Clut> {
    match default_scheme(builder.config()) {
        Scheme::Frame if weight_cutoff.is_none() => {
            Ok(Clut::Frame(compress_frame(&builder.build_full(force_full)?)?))
        }
        _ => {
            let w = weight_cutoff.unwrap_or(DEFAULT_WEIGHT_CUTOFF);
            Ok(Clut::Rank(compress_rank(&builder.build_weight_bounded(w)?, w)?))
        }
    }
}

/// X and Z backends of one configuration.
pub struct Backends {
    pub x: Box<dyn Backend>,
    pub z: Box<dyn Backend>,
}

impl Backends {
    pub fn build(layout: &CodeLayout, rounds: usize, opts: &BackendOptions) -> Result<Self> {
        Ok(Self {
            x: build_backend(layout, rounds, StabType::X, opts)?,
            z: build_backend(layout, rounds, StabType::Z, opts)?,
        })
    }

    pub fn decode(&self, layout: &CodeLayout, rec: &crate::noise::TrialRecord) -> Result<TrialOutcome> {
        decode_trial(layout, self.x.as_ref(), self.z.as_ref(), rec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub distance: usize,
    pub rounds: usize,
    pub cycles: usize,
    pub trials: u64,
    pub seed: u64,
    pub p_list: Vec<f64>,
    pub backend: BackendOptions,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.p_list.is_empty() {
            return Err(Error::InvalidConfig("need at least one physical error rate".into()));
        }
        for &p in &self.p_list {
            if !(p > 0.0 && p < 0.5) {
                return Err(Error::InvalidNoise(format!("p = {p} outside (0, 0.5)")));
            }
            if p < SWEEP_P_RANGE.0 || p > SWEEP_P_RANGE.1 {
                log::warn!("p = {p} outside the usual sweep range {SWEEP_P_RANGE:?}");
            }
        }
        NoiseParams::new(self.p_list[0], self.cycles, self.seed)?;
        Ok(())
    }
}

/// Aggregated result for one `(p, configuration)` point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LerPoint {
    pub p: f64,
    pub distance: usize,
    pub rounds: usize,
    pub cycles: usize,
    pub trials: u64,
    pub logical_errors: u64,
    /// Trials with at least one table miss.
    pub decoder_failures: u64,
}

impl LerPoint {
    pub fn ler(&self) -> f64 {
        self.logical_errors as f64 / self.trials as f64
    }

    pub fn stderr(&self) -> f64 {
        let l = self.ler();
        (l * (1.0 - l) / self.trials as f64).sqrt()
    }

    pub fn failure_rate(&self) -> f64 {
        self.decoder_failures as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LerReport {
    pub points: Vec<LerPoint>,
}

impl LerReport {
    /// `(p, ler)` pairs for exponent fits.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|pt| (pt.p, pt.ler())).collect()
    }
}

/// Pool sized from [`WORKERS_ENV`], or the machine's parallelism.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("{WORKERS_ENV}={v:?} is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Counts of logical errors and failing trials over `trials` paired trials.
pub fn run_point(layout: &CodeLayout, backends: &Backends, params: &NoiseParams, trials: u64) -> Result<(u64, u64)> {
    params.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let out = backends.decode(layout, &sample_trial(layout, params, i))?;
            Ok((u64::from(out.logical_error), u64::from(out.decoder_failures > 0)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<LerReport> {
    spec.validate()?;
    let layout = CodeLayout::build(spec.distance)?;
    let backends = Backends::build(&layout, spec.rounds, &spec.backend)?;
    let pool = worker_pool()?;
    let mut points = Vec::with_capacity(spec.p_list.len());
    for &p in &spec.p_list {
        let params = NoiseParams::new(p, spec.cycles, spec.seed)?;
        let (errors, failures) = pool.install(|| run_point(&layout, &backends, &params, spec.trials))?;
        points.push(LerPoint {
            p,
            distance: spec.distance,
            rounds: spec.rounds,
            cycles: spec.cycles,
            trials: spec.trials,
            logical_errors: errors,
            decoder_failures: failures,
        });
    }
    Ok(LerReport { points })
}

/// Least-squares slope of `ln(ler)` against `ln(p)` over points with
/// nonzero error rate.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(p, l)| p > 0.0 && l > 0.0)
        .map(|&(p, l)| (p.ln(), l.ln()))
        .collect();
    if xy.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: xy.len() });
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|v| v.0).sum::<f64>() / n;
    let my = xy.iter().map(|v| v.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// `LER(m_from) / LER(m_to)` measured on the same trials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundsRatio {
    pub m_from: usize,
    pub m_to: usize,
    pub ler_from: f64,
    pub ler_to: f64,
    pub ratio: f64,
    /// Delta-method standard error, including the covariance of the paired
    /// estimates.
    pub stderr: f64,
}

impl RoundsRatio {
    /// Distance of the ratio above 1 in standard errors.
    pub fn sigma_above_one(&self) -> f64 {
        (self.ratio - 1.0) / self.stderr
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundsReport {
    pub points: Vec<LerPoint>,
    pub ratios: Vec<RoundsRatio>,
}

/// Runs every `m` in `rounds` on the same sampled trials and reports the
/// ratio between consecutive entries.
pub fn sweep_rounds(
    distance: usize,
    rounds: &[usize],
    params: &NoiseParams,
    trials: u64,
    backend: &BackendOptions,
) -> Result<RoundsReport> {
    params.validate()?;
    if rounds.is_empty() || trials == 0 {
        return Err(Error::InvalidConfig("need rounds and at least one trial".into()));
    }
    let layout = CodeLayout::build(distance)?;
    let backends = rounds
        .iter()
        .map(|&m| Backends::build(&layout, m, backend))
        .collect::<Result<Vec<_>>>()?;
    let k = rounds.len();
    // Per m: errors, failures; per consecutive pair: joint errors.
    let zero = || (vec![0u64; k], vec![0u64; k], vec![0u64; k.saturating_sub(1)]);
    let pool = worker_pool()?;
    let (errors, failures, joint) = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let rec = sample_trial(&layout, params, i);
                let mut acc = zero();
                let mut prev = false;
                for (j, b) in backends.iter().enumerate() {
                    let out = b.decode(&layout, &rec)?;
                    acc.0[j] = u64::from(out.logical_error);
                    acc.1[j] = u64::from(out.decoder_failures > 0);
                    if j > 0 {
                        acc.2[j - 1] = u64::from(prev && out.logical_error);
                    }
                    prev = out.logical_error;
                }
                Ok::<_, Error>(acc)
            })
            .try_reduce(zero, |mut a, b| {
                for (x, y) in a.0.iter_mut().zip(b.0) {
                    *x += y;
                }
                for (x, y) in a.1.iter_mut().zip(b.1) {
                    *x += y;
                }
                for (x, y) in a.2.iter_mut().zip(b.2) {
                    *x += y;
                }
                Ok(a)
            })
    })?;

    let points: Vec<LerPoint> = rounds
        .iter()
        .enumerate()
        .map(|(j, &m)| LerPoint {
            p: params.p,
            distance,
            rounds: m,
            cycles: params.cycles,
            trials,
            logical_errors: errors[j],
            decoder_failures: failures[j],
        })
        .collect();
    let n = trials as f64;
    let ratios = (1..k)
        .map(|j| {
            let (a, b) = (points[j - 1].ler(), points[j].ler());
            let ab = joint[j - 1] as f64 / n;
            let ratio = a / b;
            let rel_var = (a * (1.0 - a)) / (n * a * a) + (b * (1.0 - b)) / (n * b * b)
                - 2.0 * (ab - a * b) / (n * a * b);
            RoundsRatio {
                m_from: rounds[j - 1],
                m_to: rounds[j],
                ler_from: a,
                ler_to: b,
                ratio,
                stderr: ratio * rel_var.max(0.0).sqrt(),
            }
        })
        .collect();
    Ok(RoundsReport { points, ratios })
}

/// LER for each cycle count, same seed throughout.
pub fn sweep_cycles(
    distance: usize,
    rounds: usize,
    p: f64,
    cycles: &[usize],
    trials: u64,
    seed: u64,
    backend: &BackendOptions,
) -> Result<Vec<LerPoint>> {
    if cycles.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("cycle counts must be increasing".into()));
    }
    let layout = CodeLayout::build(distance)?;
    let backends = Backends::build(&layout, rounds, backend)?;
    let pool = worker_pool()?;
    cycles
        .iter()
        .map(|&c| {
            let params = NoiseParams::new(p, c, seed)?;
            let (errors, failures) = pool.install(|| run_point(&layout, &backends, &params, trials))?;
            Ok(LerPoint {
                p,
                distance,
                rounds,
                cycles: c,
                trials,
                logical_errors: errors,
                decoder_failures: failures,
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    p: f64,
    d: usize,
    m: usize,
    cycles: usize,
    trials: u64,
    logical_errors: u64,
    ler: f64,
    stderr: f64,
    decoder_failures: u64,
}

pub fn write_csv<W: Write>(w: W, points: &[LerPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for pt in points {
        out.serialize(CsvRow {
            p: pt.p,
            d: pt.distance,
            m: pt.rounds,
            cycles: pt.cycles,
            trials: pt.trials,
            logical_errors: pt.logical_errors,
            ler: pt.ler(),
            stderr: pt.stderr(),
            decoder_failures: pt.decoder_failures,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<LerPoint>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| {
            let row: CsvRow = row?;
            Ok(LerPoint {
                p: row.p,
                distance: row.d,
                rounds: row.m,
                cycles: row.cycles,
                trials: row.trials,
                logical_errors: row.logical_errors,
                decoder_failures: row.decoder_failures,
            })
        })
        .collect()
}

/// Checks a configuration can be decoded with the given backend before
/// spending time on trials.
pub fn check_buildable(cfg: &DecoderConfig, opts: &BackendOptions) -> Result<()> {
    if opts.kind == BackendKind::Lut && !opts.force_full && cfg.address_bits() > crate::lut::DEFAULT_ADDRESS_LIMIT {
        return Err(Error::TableTooLarge {
            bits: cfg.address_bits(),
            limit: crate::lut::DEFAULT_ADDRESS_LIMIT,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p_list: Vec<f64>, trials: u64) -> ExperimentSpec {
        ExperimentSpec {
            distance: 3,
            rounds: 2,
            cycles: 5,
            trials,
            seed: 11,
            p_list,
            backend: BackendOptions::new(BackendKind::Lut),
        }
    }

    #[test]
    fn exponent_fit_on_exact_power_laws() {
        let ps = [1e-3, 2e-3, 5e-3, 1e-2];
        let quad: Vec<_> = ps.iter().map(|&p| (p, 7.0 * p * p)).collect();
        let lin: Vec<_> = ps.iter().map(|&p| (p, 0.3 * p)).collect();
        assert!((fit_scaling_exponent(&quad).unwrap() - 2.0).abs() < 1e-12);
        assert!((fit_scaling_exponent(&lin).unwrap() - 1.0).abs() < 1e-12);
        let sparse = [(1e-3, 0.0), (1e-2, 1e-3), (2e-2, 4e-3)];
        assert!(matches!(
            fit_scaling_exponent(&sparse),
            Err(Error::InsufficientPoints { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn validation() {
        assert!(spec(vec![], 10).validate().is_err());
        assert!(spec(vec![0.5], 10).validate().is_err());
        assert!(spec(vec![0.0], 10).validate().is_err());
        assert!(spec(vec![0.01], 0).validate().is_err());
        assert!(spec(vec![0.01], 10).validate().is_ok());
    }

    #[test]
    fn deterministic_and_monotone() {
        let s = spec(vec![1e-6, 3e-3, 2e-2], 4000);
        let a = run_experiment(&s).unwrap();
        assert_eq!(a, run_experiment(&s).unwrap());
        assert_eq!(a.points[0].logical_errors, 0);
        assert!(a.points[2].ler() > a.points[1].ler());
        assert_eq!(a.points[2].decoder_failures, 0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let layout = CodeLayout::build(3).unwrap();
        let b = Backends::build(&layout, 2, &BackendOptions::new(BackendKind::Lut)).unwrap();
        let params = NoiseParams::new(0.02, 5, 4).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r1 = one.install(|| run_point(&layout, &b, &params, 3000)).unwrap();
        let r4 = four.install(|| run_point(&layout, &b, &params, 3000)).unwrap();
        assert_eq!(r1, r4);
    }

    #[test]
    fn rounds_ratio_bookkeeping() {
        let params = NoiseParams::new(0.02, 5, 5).unwrap();
        let r = sweep_rounds(3, &[1, 2, 2], &params, 3000, &BackendOptions::new(BackendKind::Lut)).unwrap();
        assert_eq!(r.points.len(), 3);
        // Identical decoders: ratio exactly 1 with zero variance.
        assert_eq!(r.ratios[1].ratio, 1.0);
        assert!(r.ratios[1].stderr.abs() < 1e-12);
        assert!(r.ratios[0].stderr > 0.0);
    }

    #[test]
    fn cycle_sweep() {
        let opts = BackendOptions::new(BackendKind::Lut);
        let pts = sweep_cycles(3, 2, 0.02, &[1, 1, 10], 3000, 2, &opts).unwrap();
        assert_eq!(pts[0], pts[1]);
        assert!(pts[2].ler() > pts[0].ler());
        let zero = sweep_cycles(3, 2, 1e-9, &[1, 4], 500, 2, &opts).unwrap();
        assert!(zero.iter().all(|pt| pt.logical_errors == 0));
        assert!(sweep_cycles(3, 2, 0.01, &[4, 1], 10, 2, &opts).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![
            LerPoint { p: 1e-3, distance: 3, rounds: 2, cycles: 5, trials: 100_000, logical_errors: 17, decoder_failures: 0 },
            LerPoint { p: 0.0123, distance: 4, rounds: 3, cycles: 7, trials: 9, logical_errors: 9, decoder_failures: 2 },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("p,d,m,cycles,trials,logical_errors,ler,stderr,decoder_failures\n"));
        assert_eq!(read_csv(&buf[..]).unwrap(), pts);
    }

    #[test]
    fn large_dense_tables_need_override() {
        let cfg = DecoderConfig::for_distance(5, 2, StabType::Z).unwrap();
        assert!(matches!(
            check_buildable(&cfg, &BackendOptions::new(BackendKind::Lut)),
            Err(Error::TableTooLarge { bits: 24, limit: 16 })
        ));
        assert!(check_buildable(&cfg, &BackendOptions::new(BackendKind::Oracle)).is_ok());
    }
}
