//! Streaming sliding-window decoder.
//!
//! Each cycle the decoder turns a syndrome into detection events (XOR with
//! the previous syndrome) and pushes them onto a FIFO of `m` layers. Once the
//! FIFO is full, the layers form a table address (oldest layer in the low
//! bits, XORed with the internal state), the entry's correction is added to
//! the error log, the entry's state delta becomes the new internal state,
//! and the oldest layer is dropped.

use std::collections::VecDeque;

use crate::bits;
use crate::clut::Clut;
use crate::error::{Error, Result};
use crate::layout::{check_len, CodeLayout, StabType};
use crate::lut::{DecoderConfig, Lut, LutBuilder, LutEntry, SparseLut};
use crate::matching::{commit_oldest_layer, DecodingGraph};
use crate::noise::TrialRecord;

/// Source of table entries. `None` means the address is not stored.
pub trait Backend: Sync {
    fn config(&self) -> &DecoderConfig;
    fn lookup(&self, address: u64) -> Option<LutEntry>;
}

impl Backend for Lut {
    fn config(&self) -> &DecoderConfig {
        Lut::config(self)
    }

    fn lookup(&self, address: u64) -> Option<LutEntry> {
        (address < self.len() as u64).then(|| self.get(address))
    }
}

impl Backend for SparseLut {
    fn config(&self) -> &DecoderConfig {
        SparseLut::config(self)
    }

    fn lookup(&self, address: u64) -> Option<LutEntry> {
        self.get(address)
    }
}

impl Backend for Clut {
    fn config(&self) -> &DecoderConfig {
        self.base()
    }

    fn lookup(&self, address: u64) -> Option<LutEntry> {
        Clut::lookup(self, address)
    }
}

impl Backend for crate::format::Table {
    fn config(&self) -> &DecoderConfig {
        crate::format::Table::config(self)
    }

    fn lookup(&self, address: u64) -> Option<LutEntry> {
        match self {
            crate::format::Table::Dense(t) => Backend::lookup(t, address),
            crate::format::Table::Sparse(t) => t.get(address),
            crate::format::Table::Compressed(t) => t.lookup(address),
        }
    }
}

/// Runs the matcher on every lookup instead of reading a table.
#[derive(Clone, Debug)]
pub struct OracleBackend {
    builder: LutBuilder,
}

impl OracleBackend {
    pub fn new(layout: &CodeLayout, rounds: usize, stab_type: StabType) -> Result<Self> {
        Ok(Self {
            builder: LutBuilder::new(layout, rounds, stab_type)?,
        })
    }

    pub fn from_builder(builder: LutBuilder) -> Self {
        Self { builder }
    }

    pub fn graph(&self) -> &DecodingGraph {
        self.builder.graph()
    }
}

impl Backend for OracleBackend {
    fn config(&self) -> &DecoderConfig {
        self.builder.config()
    }

    fn lookup(&self, address: u64) -> Option<LutEntry> {
        // Every address of the configuration has an entry; a failure here
        // would be an out-of-range address, which the decoder never forms.
        self.builder.entry_for_address(address).ok()
    }
}

pub fn detect_events(prev: u64, curr: u64, len: usize) -> Result<u64> {
    check_len(prev, len)?;
    check_len(curr, len)?;
    Ok(prev ^ curr)
}

/// Z-type syndrome implied by a Z-basis data measurement.
pub fn final_syndrome_from_data(layout: &CodeLayout, data_measurement: u64) -> Result<u64> {
    layout.syndrome_of(StabType::Z, data_measurement)
}

/// Parity of the corrected measurement over the logical Z support. `true`
/// is a logical error for a `|0_L>` memory experiment.
pub fn logical_outcome(layout: &CodeLayout, data_measurement: u64, x_error_log: u64) -> bool {
    bits::parity((data_measurement ^ x_error_log) & layout.logical_z_support())
}

pub struct DecoderState<'a> {
    backend: &'a dyn Backend,
    config: DecoderConfig,
    fifo: VecDeque<u64>,
    internal_state: u64,
    error_log: u64,
    prev_syndrome: u64,
    cycles_consumed: usize,
    failures: usize,
    corrections_applied: usize,
    finished: bool,
    address_log: Option<Vec<u64>>,
}

impl<'a> DecoderState<'a> {
    pub fn new(backend: &'a dyn Backend) -> Self {
        let config = *backend.config();
        Self {
            backend,
            config,
            fifo: VecDeque::with_capacity(config.rounds),
            internal_state: 0,
            error_log: 0,
            prev_syndrome: 0,
            cycles_consumed: 0,
            failures: 0,
            corrections_applied: 0,
            finished: false,
            address_log: None,
        }
    }

    /// Also keep every address looked up, in order.
    pub fn with_address_log(mut self) -> Self {
        self.address_log = Some(Vec::new());
        self
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn error_log(&self) -> u64 {
        self.error_log
    }

    pub fn internal_state(&self) -> u64 {
        self.internal_state
    }

    pub fn fifo_len(&self) -> usize {
        self.fifo.len()
    }

    pub fn cycles_consumed(&self) -> usize {
        self.cycles_consumed
    }

    /// Number of lookups that missed.
    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn failure_flag(&self) -> bool {
        self.failures > 0
    }

    /// Number of lookups that applied a nonzero correction.
    pub fn corrections_applied(&self) -> usize {
        self.corrections_applied
    }

    pub fn address_log(&self) -> Option<&[u64]> {
        self.address_log.as_deref()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Consumes one cycle's syndrome. Returns the committed correction once
    /// the window is full, `None` during warm-up.
    pub fn step(&mut self, syndrome: u64) -> Result<Option<u64>> {
        if self.finished {
            return Err(Error::AlreadyFinished);
        }
        let events = detect_events(self.prev_syndrome, syndrome, self.config.syndrome_len)?;
        self.prev_syndrome = syndrome;
        self.cycles_consumed += 1;
        Ok(self.push_layer(events))
    }

    fn push_layer(&mut self, events: u64) -> Option<u64> {
        self.fifo.push_back(events);
        if self.fifo.len() < self.config.rounds {
            return None;
        }
        let s = self.config.syndrome_len;
        let address = self
            .fifo
            .iter()
            .enumerate()
            .fold(self.internal_state, |acc, (i, &layer)| acc ^ layer << (i * s));
        if let Some(log) = &mut self.address_log {
            log.push(address);
        }
        let correction = match self.backend.lookup(address) {
            Some(e) => {
                self.internal_state = e.state_delta;
                e.correction
            }
            None => {
                self.failures += 1;
                self.internal_state = 0;
                0
            }
        };
        if correction != 0 {
            self.corrections_applied += 1;
        }
        self.error_log ^= correction;
        self.fifo.pop_front();
        Some(correction)
    }

    /// Ends the stream. `final_syndrome` is the constructed last round (Z
    /// decoder in a Z-basis experiment); the window is then flushed with
    /// `m - 1` empty layers so every real layer is committed once.
    pub fn finish(&mut self, final_syndrome: Option<u64>) -> Result<u64> {
        if self.finished {
            return Err(Error::AlreadyFinished);
        }
        if let Some(s) = final_syndrome {
            self.step(s)?;
        }
        for _ in 1..self.config.rounds {
            self.push_layer(0);
        }
        self.fifo.clear();
        self.finished = true;
        Ok(self.error_log)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub logical_error: bool,
    pub decoder_failures: usize,
    pub corrections_applied: usize,
}

fn check_type(backend: &dyn Backend, t: StabType) -> Result<()> {
    let got = backend.config().stab_type;
    if got != t {
        return Err(Error::WrongStabType { stab_type: t, got });
    }
    Ok(())
}

/// Feeds one stabilizer type of a trial through a decoder and finishes it.
pub fn run_stream<'a>(
    layout: &CodeLayout,
    backend: &'a dyn Backend,
    record: &TrialRecord,
    log_addresses: bool,
) -> Result<DecoderState<'a>> {
    let t = backend.config().stab_type;
    let mut state = DecoderState::new(backend);
    if log_addresses {
        state = state.with_address_log();
    }
    for &s in record.syndromes(t) {
        state.step(s)?;
    }
    let last = match t {
        StabType::Z => Some(final_syndrome_from_data(layout, record.final_data_measurement)?),
        StabType::X => None,
    };
    state.finish(last)?;
    Ok(state)
}

/// Decodes both stabilizer types of a Z-basis memory trial.
pub fn decode_trial(
    layout: &CodeLayout,
    x_backend: &dyn Backend,
    z_backend: &dyn Backend,
    record: &TrialRecord,
) -> Result<TrialOutcome> {
    check_type(x_backend, StabType::X)?;
    check_type(z_backend, StabType::Z)?;
    let z = run_stream(layout, z_backend, record, false)?;
    let x = run_stream(layout, x_backend, record, false)?;
    Ok(TrialOutcome {
        logical_error: logical_outcome(layout, record.final_data_measurement, z.error_log()),
        decoder_failures: z.failures() + x.failures(),
        corrections_applied: z.corrections_applied() + x.corrections_applied(),
    })
}

/// Detection layers of one stabilizer type, including the constructed final
/// round for Z.
pub fn detection_layers(layout: &CodeLayout, t: StabType, record: &TrialRecord) -> Result<Vec<u64>> {
    let mut rows = record.syndromes(t).to_vec();
    if t == StabType::Z {
        rows.push(final_syndrome_from_data(layout, record.final_data_measurement)?);
    }
    let mut prev = 0;
    Ok(rows
        .into_iter()
        .map(|s| {
            let d = prev ^ s;
            prev = s;
            d
        })
        .collect())
}

/// Replays a logged address sequence through the matcher and returns, per
/// global layer, the stabilizers of odd degree among all committed edges.
/// Step `k` commits the window whose oldest layer is global layer `k`.
pub fn committed_odd_degree(graph: &DecodingGraph, addresses: &[u64]) -> Result<Vec<u64>> {
    let s = graph.num_stabilizers();
    let mut layers = vec![0u64; addresses.len() + graph.layers()];
    for (k, &a) in addresses.iter().enumerate() {
        let result = graph.min_weight_match(&graph.events_from_address(a))?;
        let commit = commit_oldest_layer(graph, &result);
        for &e in &commit.edges {
            let edge = &graph.edges()[e];
            for v in [edge.a, edge.b] {
                if v != graph.boundary() {
                    layers[k + v / s] ^= 1 << (v % s);
                }
            }
        }
    }
    Ok(layers)
}

/// Fraction of lookups at each address weight (index = popcount), over the
/// given trials.
pub fn access_weight_histogram(
    layout: &CodeLayout,
    backend: &dyn Backend,
    records: &[TrialRecord],
) -> Result<Vec<f64>> {
    let bits = backend.config().address_bits() as usize;
    let mut counts = vec![0u64; bits + 1];
    for rec in records {
        let state = run_stream(layout, backend, rec, true)?;
        for &a in state.address_log().unwrap_or_default() {
            counts[a.count_ones() as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    Ok(counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_trial, sample_trial_with, ForcedError, InjectionHooks, NoiseParams, Pauli};

    fn quiet() -> InjectionHooks {
        InjectionHooks {
            data_errors: false,
            measurement_flips: false,
            final_flips: false,
            ..InjectionHooks::default()
        }
    }

    fn lut(layout: &CodeLayout, m: usize, t: StabType) -> Lut {
        LutBuilder::new(layout, m, t).unwrap().build_full(false).unwrap()
    }

    #[test]
    fn event_detection() {
        assert_eq!(detect_events(0b0110, 0b0110, 4).unwrap(), 0);
        assert_eq!(detect_events(0b0110, 0b0100, 4).unwrap(), 0b0010);
        assert_eq!(detect_events(0, 0b1000, 4).unwrap(), 0b1000);
        assert!(detect_events(0, 0b10000, 4).is_err());
    }

    #[test]
    fn final_syndrome_and_outcome() {
        let l = CodeLayout::build(3).unwrap();
        assert_eq!(final_syndrome_from_data(&l, 0).unwrap(), 0);
        // Qubit 4 is interior: two Z stabilizers.
        assert_eq!(final_syndrome_from_data(&l, 1 << 4).unwrap().count_ones(), 2);
        assert!(!logical_outcome(&l, 0, 0));
        assert!(!logical_outcome(&l, 0b101_110_011, 0b101_110_011));
        assert!(logical_outcome(&l, l.logical_z_support(), 0));
    }

    #[test]
    fn warm_up_and_quiet_stream() {
        let l = CodeLayout::build(3).unwrap();
        let table = lut(&l, 3, StabType::Z);
        let mut st = DecoderState::new(&table);
        assert_eq!(st.step(0).unwrap(), None);
        assert_eq!(st.step(0).unwrap(), None);
        assert_eq!(st.internal_state(), 0);
        assert_eq!(st.step(0).unwrap(), Some(0));
        assert_eq!(st.finish(Some(0)).unwrap(), 0);
        assert!(matches!(st.finish(None), Err(Error::AlreadyFinished)));
        assert!(matches!(st.step(0), Err(Error::AlreadyFinished)));
    }

    #[test]
    fn single_forced_error_is_undone() {
        let l = CodeLayout::build(3).unwrap();
        for m in 1..=3 {
            let table = lut(&l, m, StabType::Z);
            for q in 0..9 {
                for cycle in 0..4 {
                    let hooks = InjectionHooks {
                        forced_errors: vec![ForcedError { cycle, qubit: q, pauli: Pauli::X }],
                        ..quiet()
                    };
                    let params = NoiseParams::new(0.0, 4, 1).unwrap();
                    let rec = sample_trial_with(&l, &params, 0, &hooks);
                    let st = run_stream(&l, &table, &rec, false).unwrap();
                    // Qubits sharing all their Z checks (e.g. 0 and 1) are
                    // interchangeable: the residual must be a stabilizer.
                    let residual = st.error_log() ^ 1 << q;
                    assert_eq!(l.syndrome(StabType::Z, residual), 0, "m={m} q={q} cycle={cycle}");
                    assert!(!logical_outcome(&l, residual, 0));
                    if [3, 4, 5].contains(&q) {
                        assert_eq!(st.error_log(), 1 << q);
                    }
                    assert_eq!(st.internal_state(), 0);
                }
            }
        }
    }

    #[test]
    fn measurement_flip_leaves_no_net_correction() {
        let l = CodeLayout::build(3).unwrap();
        for m in 2..=3 {
            let table = lut(&l, m, StabType::Z);
            for stab in 0..4 {
                for cycle in 0..4 {
                    let params = NoiseParams::new(0.0, 5, 1).unwrap();
                    let mut rec = sample_trial_with(&l, &params, 0, &quiet());
                    rec.z_syndromes[cycle] ^= 1 << stab;
                    let st = run_stream(&l, &table, &rec, false).unwrap();
                    assert_eq!(st.error_log(), 0, "m={m} stab={stab} cycle={cycle}");
                }
            }
        }
    }

    #[test]
    fn final_measurement_flip_does_not_flip_logical() {
        let l = CodeLayout::build(3).unwrap();
        let z = lut(&l, 2, StabType::Z);
        let x = lut(&l, 2, StabType::X);
        for q in 0..9 {
            let hooks = InjectionHooks {
                forced_final_flips: 1 << q,
                ..quiet()
            };
            let params = NoiseParams::new(0.0, 3, 1).unwrap();
            let rec = sample_trial_with(&l, &params, 0, &hooks);
            let out = decode_trial(&l, &x, &z, &rec).unwrap();
            assert!(!out.logical_error, "q={q}");
        }
    }

    #[test]
    fn lut_and_oracle_agree_and_are_deterministic() {
        let l = CodeLayout::build(3).unwrap();
        let (x, z) = (lut(&l, 2, StabType::X), lut(&l, 2, StabType::Z));
        let (ox, oz) = (
            OracleBackend::new(&l, 2, StabType::X).unwrap(),
            OracleBackend::new(&l, 2, StabType::Z).unwrap(),
        );
        let params = NoiseParams::new(0.03, 5, 9).unwrap();
        for i in 0..300 {
            let rec = sample_trial(&l, &params, i);
            let a = decode_trial(&l, &x, &z, &rec).unwrap();
            let b = decode_trial(&l, &ox, &oz, &rec).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.decoder_failures, 0);
            assert_eq!(a, decode_trial(&l, &x, &z, &sample_trial(&l, &params, i)).unwrap());
        }
        assert!(matches!(
            decode_trial(&l, &z, &z, &sample_trial(&l, &params, 0)),
            Err(Error::WrongStabType { .. })
        ));
    }

    #[test]
    fn committed_edges_explain_all_events() {
        let l = CodeLayout::build(3).unwrap();
        let params = NoiseParams::new(0.04, 4, 3).unwrap();
        for t in StabType::BOTH {
            let oracle = OracleBackend::new(&l, 2, t).unwrap();
            for i in 0..100 {
                let rec = sample_trial(&l, &params, i);
                let st = run_stream(&l, &oracle, &rec, true).unwrap();
                let odd = committed_odd_degree(oracle.graph(), st.address_log().unwrap()).unwrap();
                let mut det = detection_layers(&l, t, &rec).unwrap();
                det.resize(odd.len(), 0);
                assert_eq!(odd, det);
            }
        }
    }

    #[test]
    fn miss_falls_back_to_zero_and_counts() {
        let l = CodeLayout::build(3).unwrap();
        let full = lut(&l, 2, StabType::Z);
        let sparse = SparseLut::from_dense(&full, 0);
        let mut st = DecoderState::new(&sparse);
        st.step(0b0001).unwrap();
        assert_eq!(st.step(0b0001).unwrap(), Some(0));
        assert_eq!(st.failures(), 1);
        assert!(st.failure_flag());
        assert_eq!(st.internal_state(), 0);
    }

    #[test]
    fn histogram_sums_to_one() {
        let l = CodeLayout::build(3).unwrap();
        let table = lut(&l, 2, StabType::Z);
        let quiet_recs: Vec<_> = (0..20)
            .map(|i| sample_trial(&l, &NoiseParams::new(0.0, 5, 1).unwrap(), i))
            .collect();
        let h = access_weight_histogram(&l, &table, &quiet_recs).unwrap();
        assert_eq!(h[0], 1.0);
        let noisy: Vec<_> = (0..200)
            .map(|i| sample_trial(&l, &NoiseParams::new(0.02, 5, 1).unwrap(), i))
            .collect();
        let h = access_weight_histogram(&l, &table, &noisy).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(h[0] > h[1] && h[1] > h[3]);
    }
}
