//! Phenomenological noise: Pauli-frame sampling of data errors and
//! measurement flips, one trial at a time.
//!
//! Each cycle, every data qubit independently picks up X, Y or Z (uniformly)
//! with probability `p`, then every stabilizer is measured and each outcome
//! is flipped with probability `p`. After the last cycle all data qubits
//! are measured in the Z basis and each outcome flips with probability `p`.
//!
//! Trials draw from a ChaCha8 stream selected by `(seed, trial_index)`, so a
//! trial is reproducible regardless of which worker runs it.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits;
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, StabType};

/// Physical error rates used by parameter sweeps.
pub const SWEEP_P_RANGE: (f64, f64) = (1e-3, 5e-2);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    pub p: f64,
    pub cycles: usize,
    pub seed: u64,
}

impl NoiseParams {
    pub fn new(p: f64, cycles: usize, seed: u64) -> Result<Self> {
        let params = Self { p, cycles, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::InvalidNoise(format!("p = {} not in [0, 0.5)", self.p)));
        }
        if self.cycles == 0 {
            return Err(Error::InvalidNoise("cycles must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn components(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

/// A deterministic error applied on top of the sampled noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForcedError {
    /// 0-based cycle; the error lands before that cycle's measurement.
    pub cycle: usize,
    pub qubit: usize,
    pub pauli: Pauli,
}

/// Switches for tests and controlled experiments. The default samples the
/// full noise model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectionHooks {
    pub data_errors: bool,
    pub measurement_flips: bool,
    pub final_flips: bool,
    /// Keep the X component of sampled data errors.
    pub x_components: bool,
    /// Keep the Z component of sampled data errors.
    pub z_components: bool,
    pub forced_errors: Vec<ForcedError>,
    /// Extra flips XORed into the final data measurement.
    pub forced_final_flips: u64,
}

impl Default for InjectionHooks {
    fn default() -> Self {
        Self {
            data_errors: true,
            measurement_flips: true,
            final_flips: true,
            x_components: true,
            z_components: true,
            forced_errors: Vec::new(),
            forced_final_flips: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    /// X-stabilizer outcomes, one row per cycle, oldest first.
    pub x_syndromes: Vec<u64>,
    /// Z-stabilizer outcomes, one row per cycle, oldest first.
    pub z_syndromes: Vec<u64>,
    /// Z-basis data measurement after the last cycle.
    pub final_data_measurement: u64,
    /// Cumulative X component of injected data errors.
    pub truth_x_log: u64,
    /// Cumulative Z component of injected data errors.
    pub truth_z_log: u64,
    pub x_measurement_flips: Vec<u64>,
    pub z_measurement_flips: Vec<u64>,
    pub final_measurement_flips: u64,
}

impl TrialRecord {
    pub fn cycles(&self) -> usize {
        self.z_syndromes.len()
    }

    pub fn syndromes(&self, t: StabType) -> &[u64] {
        match t {
            StabType::X => &self.x_syndromes,
            StabType::Z => &self.z_syndromes,
        }
    }
}

/// RNG for one trial.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

pub fn sample_trial(layout: &CodeLayout, params: &NoiseParams, trial_index: u64) -> TrialRecord {
    sample_trial_with(layout, params, trial_index, &InjectionHooks::default())
}

pub fn sample_trial_with(
    layout: &CodeLayout,
    params: &NoiseParams,
    trial_index: u64,
    hooks: &InjectionHooks,
) -> TrialRecord {
    let mut rng = trial_rng(params.seed, trial_index);
    let p = params.p;
    let n = layout.num_data();
    let nx = layout.num_stabilizers(StabType::X);
    let nz = layout.num_stabilizers(StabType::Z);

    let mut frame_x = 0u64;
    let mut frame_z = 0u64;
    let mut rec = TrialRecord {
        x_syndromes: Vec::with_capacity(params.cycles),
        z_syndromes: Vec::with_capacity(params.cycles),
        final_data_measurement: 0,
        truth_x_log: 0,
        truth_z_log: 0,
        x_measurement_flips: Vec::with_capacity(params.cycles),
        z_measurement_flips: Vec::with_capacity(params.cycles),
        final_measurement_flips: 0,
    };

    for cycle in 0..params.cycles {
        for q in 0..n {
            if rng.random::<f64>() < p {
                let pauli = match rng.random_range(0..3u8) {
                    0 => Pauli::X,
                    1 => Pauli::Y,
                    _ => Pauli::Z,
                };
                if hooks.data_errors {
                    let (x, z) = pauli.components();
                    frame_x ^= u64::from(x && hooks.x_components) << q;
                    frame_z ^= u64::from(z && hooks.z_components) << q;
                }
            }
        }
        for f in hooks.forced_errors.iter().filter(|f| f.cycle == cycle) {
            let (x, z) = f.pauli.components();
            frame_x ^= u64::from(x) << f.qubit;
            frame_z ^= u64::from(z) << f.qubit;
        }

        let x_flips = sample_flips(&mut rng, nx, p) & flip_gate(hooks.measurement_flips);
        let z_flips = sample_flips(&mut rng, nz, p) & flip_gate(hooks.measurement_flips);
        // X stabilizers see the Z frame, Z stabilizers the X frame.
        rec.x_syndromes.push(layout.syndrome(StabType::X, frame_z) ^ x_flips);
        rec.z_syndromes.push(layout.syndrome(StabType::Z, frame_x) ^ z_flips);
        rec.x_measurement_flips.push(x_flips);
        rec.z_measurement_flips.push(z_flips);
    }

    let final_flips =
        (sample_flips(&mut rng, n, p) & flip_gate(hooks.final_flips)) ^ hooks.forced_final_flips;
    rec.truth_x_log = frame_x;
    rec.truth_z_log = frame_z;
    rec.final_measurement_flips = final_flips;
    rec.final_data_measurement = frame_x ^ final_flips;
    rec
}

fn flip_gate(enabled: bool) -> u64 {
    if enabled {
        u64::MAX
    } else {
        0
    }
}

fn sample_flips(rng: &mut ChaCha8Rng, n: usize, p: f64) -> u64 {
    (0..n).fold(0u64, |acc, i| acc | (u64::from(rng.random::<f64>() < p) << i))
}

/// Probability that one matching-graph edge fires in one cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeProbabilities {
    /// A data qubit acquires the detected component (X or Y, resp. Z or Y).
    pub space: f64,
    /// A stabilizer measurement flips.
    pub time: f64,
}

pub fn effective_edge_probabilities(p: f64) -> EdgeProbabilities {
    EdgeProbabilities {
        space: 2.0 * p / 3.0,
        time: p,
    }
}

// Trace files: a `#` header line, then one line per trial:
//   <trial_index> x=<hex>,<hex>,... z=<hex>,... meas=<hex>
// Syndrome rows are oldest first; each value is the bit-vector as a hex
// integer (bit i = stabilizer i).

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceHeader {
    pub distance: usize,
    pub cycles: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub trial_index: u64,
    pub x_syndromes: Vec<u64>,
    pub z_syndromes: Vec<u64>,
    pub final_data_measurement: u64,
}

impl TraceRecord {
    pub fn from_trial(trial_index: u64, rec: &TrialRecord) -> Self {
        Self {
            trial_index,
            x_syndromes: rec.x_syndromes.clone(),
            z_syndromes: rec.z_syndromes.clone(),
            final_data_measurement: rec.final_data_measurement,
        }
    }

    /// Trial with the observed data only; ground-truth fields are zero.
    pub fn to_trial(&self) -> TrialRecord {
        let cycles = self.z_syndromes.len();
        TrialRecord {
            x_syndromes: self.x_syndromes.clone(),
            z_syndromes: self.z_syndromes.clone(),
            final_data_measurement: self.final_data_measurement,
            truth_x_log: 0,
            truth_z_log: 0,
            x_measurement_flips: vec![0; cycles],
            z_measurement_flips: vec![0; cycles],
            final_measurement_flips: 0,
        }
    }
}

pub fn write_trace_header<W: Write>(w: &mut W, header: &TraceHeader) -> Result<()> {
    writeln!(w, "# lutqec-trace v1 d={} cycles={}", header.distance, header.cycles)?;
    Ok(())
}

pub fn write_trace_record<W: Write>(w: &mut W, rec: &TraceRecord) -> Result<()> {
    let join = |rows: &[u64]| rows.iter().map(|&r| bits::to_hex(r)).collect::<Vec<_>>().join(",");
    writeln!(
        w,
        "{} x={} z={} meas={}",
        rec.trial_index,
        join(&rec.x_syndromes),
        join(&rec.z_syndromes),
        bits::to_hex(rec.final_data_measurement)
    )?;
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<(TraceHeader, Vec<TraceRecord>)> {
    let mut lines = r.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Trace("empty trace".into()))??;
    let header = parse_header(&header_line)?;
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let rec = parse_record(&line)?;
        if rec.x_syndromes.len() != header.cycles || rec.z_syndromes.len() != header.cycles {
            return Err(Error::Trace(format!(
                "trial {} has {} rows, header says {}",
                rec.trial_index,
                rec.z_syndromes.len(),
                header.cycles
            )));
        }
        records.push(rec);
    }
    Ok((header, records))
}

fn parse_header(line: &str) -> Result<TraceHeader> {
    let rest = line
        .strip_prefix("# lutqec-trace v1")
        .ok_or_else(|| Error::Trace(format!("bad header: {line}")))?;
    let mut distance = None;
    let mut cycles = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("d", v)) => distance = v.parse().ok(),
            Some(("cycles", v)) => cycles = v.parse().ok(),
            _ => {}
        }
    }
    match (distance, cycles) {
        (Some(distance), Some(cycles)) => Ok(TraceHeader { distance, cycles }),
        _ => Err(Error::Trace(format!("header missing d or cycles: {line}"))),
    }
}

fn parse_record(line: &str) -> Result<TraceRecord> {
    let bad = || Error::Trace(format!("bad record: {line}"));
    let mut fields = line.split_whitespace();
    let trial_index = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let mut x = None;
    let mut z = None;
    let mut meas = None;
    for field in fields {
        let (key, value) = field.split_once('=').ok_or_else(bad)?;
        let rows = || -> Result<Vec<u64>> {
            if value.is_empty() {
                return Ok(Vec::new());
            }
            value.split(',').map(|h| bits::from_hex(h).ok_or_else(bad)).collect()
        };
        match key {
            "x" => x = Some(rows()?),
            "z" => z = Some(rows()?),
            "meas" => meas = Some(bits::from_hex(value).ok_or_else(bad)?),
            _ => return Err(bad()),
        }
    }
    Ok(TraceRecord {
        trial_index,
        x_syndromes: x.ok_or_else(bad)?,
        z_syndromes: z.ok_or_else(bad)?,
        final_data_measurement: meas.ok_or_else(bad)?,
    })
}
