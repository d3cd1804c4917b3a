//! Pluggable synthesis backend and the invocation ledger.
//!
//! The backend stands in for the HLS tool / memory generator pair: given a
//! component and a knob setting it returns latency, area and the number of
//! scheduled states per loop iteration. Two implementations ship here:
//!
//! * [`SimulatedBackend`] — a deterministic parametric model. Scheduling
//!   "unpredictability" is injected as extra states drawn from a seeded
//!   hash, so runs are reproducible bit for bit.
//! * [`TableBackend`] — replays measured results from a table, optionally
//!   interpolating between known unroll counts.
//!
//! All calls go through the [`InvocationLedger`], which memoizes on
//! (component, unrolls, ports, clock) so the same synthesis is never paid
//! for twice, and tags each unique invocation with the phase that caused
//! it. Failed syntheses are memoized too.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::characterize::lambda_bound;
use crate::math;
use crate::model::{effective_latency_ms, ComponentDescriptor, KnobSetting, SynthesisResult};

/// Errors surfaced by backend invocations.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendError {
    UnknownComponent(String),
    NotSynthesizable(String),
    PortsNotPowerOfTwo(u32),
    KnobOutOfBounds { component: String, what: &'static str },
    /// Exact-lookup miss in the replay table (interpolation disabled or no
    /// bracketing rows).
    MissingTableRow { component: String, unrolls: u32, ports: u32, clock_ns: f64 },
}

impl fmt::Display for BackendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendError::UnknownComponent(name) => write!(f, "unknown component '{name}'"),
            BackendError::NotSynthesizable(name) => {
                write!(f, "component '{name}' has a fixed latency and cannot be synthesized")
            }
            BackendError::PortsNotPowerOfTwo(p) => {
                write!(f, "ports must be a power of two, got {p}")
            }
            BackendError::KnobOutOfBounds { component, what } => {
                write!(f, "knob setting out of bounds for component '{component}': {what}")
            }
            BackendError::MissingTableRow { component, unrolls, ports, clock_ns } => {
                write!(
                    f,
                    "no table row for component '{component}' at unrolls={unrolls} ports={ports} clock={clock_ns}ns"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BackendError {}

/// The synthesis tool pair seen by the rest of the engine.
///
/// Implementations must be deterministic: identical (component, knobs)
/// inputs yield identical results for one configured backend.
pub trait SynthesisBackend {
    /// Runs HLS for one knob setting. When `state_bound` is given, the
    /// result's `constraint_satisfied` reports whether the schedule fit;
    /// latency and area are populated either way but a failed point must
    /// not be used as a design point.
    fn hls_synthesize(
        &self,
        component: &ComponentDescriptor,
        knobs: KnobSetting,
        state_bound: Option<u32>,
    ) -> Result<SynthesisResult, BackendError>;

    /// Generates the multi-bank memory for `ports` parallel accesses and
    /// returns its area in mm².
    fn plm_generate(&self, component: &ComponentDescriptor, ports: u32)
        -> Result<f64, BackendError>;
}

fn validate_knobs(component: &ComponentDescriptor, knobs: KnobSetting) -> Result<(), BackendError> {
    let params = component
        .synth
        .as_ref()
        .ok_or_else(|| BackendError::NotSynthesizable(component.name.clone()))?;
    if !knobs.ports.is_power_of_two() {
        return Err(BackendError::PortsNotPowerOfTwo(knobs.ports));
    }
    if !params.ports_options.contains(&knobs.ports) {
        return Err(BackendError::KnobOutOfBounds {
            component: component.name.clone(),
            what: "ports not in ports_options",
        });
    }
    if knobs.unrolls < 1 || knobs.unrolls > params.max_unrolls {
        return Err(BackendError::KnobOutOfBounds {
            component: component.name.clone(),
            what: "unrolls outside [1, max_unrolls]",
        });
    }
    if !(knobs.clock_ns > 0.0) {
        return Err(BackendError::KnobOutOfBounds {
            component: component.name.clone(),
            what: "clock must be positive",
        });
    }
    Ok(())
}

fn ceil_div_u64(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// FNV-1a over the invocation key, finished with a splitmix64 avalanche.
/// Stable across platforms and releases, unlike the std hasher.
fn noise_hash(seed: u64, name: &str, unrolls: u32, ports: u32) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&seed.to_le_bytes());
    eat(name.as_bytes());
    eat(&unrolls.to_le_bytes());
    eat(&ports.to_le_bytes());
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Deterministic parametric synthesis model.
///
/// States per innermost-loop iteration follow the read/write port pressure
/// plus a seeded disturbance; cycles and logic area follow the component's
/// trip count and area coefficients.
#[derive(Debug, Clone, Copy)]
pub struct SimulatedBackend {
    pub seed: u64,
}

impl SimulatedBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Scheduled states for one loop iteration:
    /// `⌈γ_r·u/p⌉ + ⌈γ_w/p⌉ + η + noise`, where `noise ∈ {0, 1, 2}` is
    /// nonzero with probability `noise_rate`, drawn from a hash of
    /// (seed, component, unrolls, ports).
    pub fn simulate_schedule_states(
        &self,
        component: &ComponentDescriptor,
        unrolls: u32,
        ports: u32,
    ) -> Result<u32, BackendError> {
        let params = component
            .synth
            .as_ref()
            .ok_or_else(|| BackendError::NotSynthesizable(component.name.clone()))?;
        let base = lambda_bound(params.gamma_r, params.gamma_w, params.eta, ports, unrolls);
        Ok(base + self.noise(component, unrolls, ports))
    }

    fn noise(&self, component: &ComponentDescriptor, unrolls: u32, ports: u32) -> u32 {
        let rate = component.synth.as_ref().map_or(0.0, |p| p.noise_rate);
        if rate <= 0.0 {
            return 0;
        }
        let h = noise_hash(self.seed, &component.name, unrolls, ports);
        let uniform = (h >> 11) as f64 / (1u64 << 53) as f64;
        if uniform < rate {
            1 + ((h >> 7) & 1) as u32
        } else {
            0
        }
    }
}

impl SynthesisBackend for SimulatedBackend {
    fn hls_synthesize(
        &self,
        component: &ComponentDescriptor,
        knobs: KnobSetting,
        state_bound: Option<u32>,
    ) -> Result<SynthesisResult, BackendError> {
        validate_knobs(component, knobs)?;
        let params = component.synth.as_ref().unwrap();
        let states = self.simulate_schedule_states(component, knobs.unrolls, knobs.ports)?;
        let iterations = ceil_div_u64(params.trip_count, knobs.unrolls as u64);
        let latency_cycles = params.base_cycles + iterations * states as u64;
        let logic_area_mm2 = params.area.base_mm2
            + params.area.per_unroll_mm2 * knobs.unrolls as f64
            + params.area.per_port_mm2 * knobs.ports as f64;
        Ok(SynthesisResult {
            latency_cycles,
            effective_latency_ms: effective_latency_ms(latency_cycles, knobs.clock_ns),
            logic_area_mm2,
            states_per_iteration: states,
            constraint_satisfied: state_bound.map_or(true, |b| states <= b),
        })
    }

    fn plm_generate(
        &self,
        component: &ComponentDescriptor,
        ports: u32,
    ) -> Result<f64, BackendError> {
        if !ports.is_power_of_two() {
            return Err(BackendError::PortsNotPowerOfTwo(ports));
        }
        let params = component
            .synth
            .as_ref()
            .ok_or_else(|| BackendError::NotSynthesizable(component.name.clone()))?;
        // Bank overhead grows with ports, storage cost is constant.
        Ok(params.plm.bank_mm2 * ports as f64 + params.plm.word_mm2 * params.plm.capacity_words as f64)
    }
}

/// One measured synthesis outcome in a replay table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub component: String,
    pub unrolls: u32,
    pub ports: u32,
    pub clock_ns: f64,
    pub latency_cycles: u64,
    pub logic_area_mm2: f64,
    pub plm_area_mm2: f64,
}

/// Replays synthesis results recorded in a table (e.g. from a real tool
/// run). With interpolation enabled, unknown unroll counts between two
/// known rows of the same port count are filled in: latency as a power law
/// in unrolls, area linearly. States are reported at the analytic schedule
/// bound and assumed satisfied.
#[derive(Debug, Clone)]
pub struct TableBackend {
    rows: Vec<TableRow>,
    interpolate: bool,
}

impl TableBackend {
    pub fn new(mut rows: Vec<TableRow>, interpolate: bool) -> Self {
        rows.sort_by(|a, b| {
            (&a.component, a.ports, a.unrolls)
                .partial_cmp(&(&b.component, b.ports, b.unrolls))
                .unwrap()
        });
        Self { rows, interpolate }
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    fn rows_for(&self, component: &str, ports: u32, clock_ns: f64) -> Vec<&TableRow> {
        self.rows
            .iter()
            .filter(|r| r.component == component && r.ports == ports && r.clock_ns == clock_ns)
            .collect()
    }

    /// Exact row lookup, or interpolation when enabled.
    pub fn table_lookup(
        &self,
        component: &ComponentDescriptor,
        knobs: KnobSetting,
    ) -> Result<(u64, f64), BackendError> {
        if !self.rows.iter().any(|r| r.component == component.name) {
            return Err(BackendError::UnknownComponent(component.name.clone()));
        }
        let rows = self.rows_for(&component.name, knobs.ports, knobs.clock_ns);
        let miss = || BackendError::MissingTableRow {
            component: component.name.clone(),
            unrolls: knobs.unrolls,
            ports: knobs.ports,
            clock_ns: knobs.clock_ns,
        };
        if let Some(row) = rows.iter().find(|r| r.unrolls == knobs.unrolls) {
            return Ok((row.latency_cycles, row.logic_area_mm2));
        }
        if !self.interpolate {
            return Err(miss());
        }
        let below = rows.iter().filter(|r| r.unrolls < knobs.unrolls).last();
        let above = rows.iter().find(|r| r.unrolls > knobs.unrolls);
        let (lo, hi) = match (below, above) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(miss()),
        };
        let t = (math::ln(knobs.unrolls as f64) - math::ln(lo.unrolls as f64))
            / (math::ln(hi.unrolls as f64) - math::ln(lo.unrolls as f64));
        let lambda_lo = effective_latency_ms(lo.latency_cycles, knobs.clock_ns);
        let lambda_hi = effective_latency_ms(hi.latency_cycles, knobs.clock_ns);
        let lambda = math::exp(math::ln(lambda_lo) + t * (math::ln(lambda_hi) - math::ln(lambda_lo)));
        let cycles = (math::round(lambda / (knobs.clock_ns * 1e-6)) as u64).max(1);
        let frac = (knobs.unrolls - lo.unrolls) as f64 / (hi.unrolls - lo.unrolls) as f64;
        let area = lo.logic_area_mm2 + frac * (hi.logic_area_mm2 - lo.logic_area_mm2);
        Ok((cycles, area))
    }
}

impl SynthesisBackend for TableBackend {
    fn hls_synthesize(
        &self,
        component: &ComponentDescriptor,
        knobs: KnobSetting,
        state_bound: Option<u32>,
    ) -> Result<SynthesisResult, BackendError> {
        validate_knobs(component, knobs)?;
        let params = component.synth.as_ref().unwrap();
        let (latency_cycles, logic_area_mm2) = self.table_lookup(component, knobs)?;
        let states = lambda_bound(params.gamma_r, params.gamma_w, params.eta, knobs.ports, knobs.unrolls);
        let _ = state_bound; // replayed schedules met their bound by construction
        Ok(SynthesisResult {
            latency_cycles,
            effective_latency_ms: effective_latency_ms(latency_cycles, knobs.clock_ns),
            logic_area_mm2,
            states_per_iteration: states,
            constraint_satisfied: true,
        })
    }

    fn plm_generate(
        &self,
        component: &ComponentDescriptor,
        ports: u32,
    ) -> Result<f64, BackendError> {
        if !ports.is_power_of_two() {
            return Err(BackendError::PortsNotPowerOfTwo(ports));
        }
        self.rows
            .iter()
            .find(|r| r.component == component.name && r.ports == ports)
            .map(|r| r.plm_area_mm2)
            .ok_or_else(|| BackendError::MissingTableRow {
                component: component.name.clone(),
                unrolls: 0,
                ports,
                clock_ns: 0.0,
            })
    }
}

/// Which flow step asked for a synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Characterization,
    Mapping,
}

/// Phase attribution of a unique invocation. A bounded run that misses its
/// state bound is counted as a constraint failure regardless of the
/// activity that requested it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Characterization,
    ConstraintFailure,
    Mapping,
}

/// One memoized HLS invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlsEntry {
    pub component: String,
    pub unrolls: u32,
    pub ports: u32,
    pub clock_ns: f64,
    pub latency_cycles: u64,
    pub effective_latency_ms: f64,
    pub logic_area_mm2: f64,
    pub states_per_iteration: u32,
    /// The state bound of the first invocation, if any.
    pub state_bound: Option<u32>,
    /// Outcome of the first invocation (bounded runs only fail).
    pub success: bool,
    pub phase: Phase,
}

/// One memoized memory-generator invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlmEntry {
    pub component: String,
    pub ports: u32,
    pub area_mm2: f64,
}

type HlsKey = (String, u32, u32, u64); // clock carried as bits for exact keying

/// Memoization table and invocation accounting for both tools.
///
/// `hls_count` equals the number of distinct keys ever synthesized;
/// repeated queries for an existing key return the recorded result without
/// growing the count.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(into = "LedgerSnapshot", from = "LedgerSnapshot")]
pub struct InvocationLedger {
    hls: BTreeMap<HlsKey, HlsEntry>,
    plm: BTreeMap<(String, u32), PlmEntry>,
}

/// Flat serialized form of the ledger; entry order is the key order, so
/// serialization is canonical.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LedgerSnapshot {
    hls: Vec<HlsEntry>,
    plm: Vec<PlmEntry>,
}

impl From<InvocationLedger> for LedgerSnapshot {
    fn from(ledger: InvocationLedger) -> Self {
        Self {
            hls: ledger.hls.into_values().collect(),
            plm: ledger.plm.into_values().collect(),
        }
    }
}

impl From<LedgerSnapshot> for InvocationLedger {
    fn from(snap: LedgerSnapshot) -> Self {
        let mut ledger = InvocationLedger::new();
        for e in snap.hls {
            let key = (e.component.clone(), e.unrolls, e.ports, e.clock_ns.to_bits());
            ledger.hls.insert(key, e);
        }
        for e in snap.plm {
            ledger.plm.insert((e.component.clone(), e.ports), e);
        }
        ledger
    }
}

impl InvocationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Memoized HLS synthesis. A cached key is served from the ledger with
    /// `constraint_satisfied` re-evaluated against this query's bound; a
    /// fresh key invokes the backend and records the outcome under the
    /// given activity.
    pub fn synthesize(
        &mut self,
        backend: &dyn SynthesisBackend,
        component: &ComponentDescriptor,
        knobs: KnobSetting,
        state_bound: Option<u32>,
        activity: Activity,
    ) -> Result<SynthesisResult, BackendError> {
        let key = (component.name.clone(), knobs.unrolls, knobs.ports, knobs.clock_ns.to_bits());
        if let Some(entry) = self.hls.get(&key) {
            return Ok(SynthesisResult {
                latency_cycles: entry.latency_cycles,
                effective_latency_ms: entry.effective_latency_ms,
                logic_area_mm2: entry.logic_area_mm2,
                states_per_iteration: entry.states_per_iteration,
                constraint_satisfied: state_bound
                    .map_or(true, |b| entry.states_per_iteration <= b),
            });
        }
        let result = backend.hls_synthesize(component, knobs, state_bound)?;
        let phase = if result.constraint_satisfied {
            match activity {
                Activity::Characterization => Phase::Characterization,
                Activity::Mapping => Phase::Mapping,
            }
        } else {
            Phase::ConstraintFailure
        };
        self.hls.insert(
            key,
            HlsEntry {
                component: component.name.clone(),
                unrolls: knobs.unrolls,
                ports: knobs.ports,
                clock_ns: knobs.clock_ns,
                latency_cycles: result.latency_cycles,
                effective_latency_ms: result.effective_latency_ms,
                logic_area_mm2: result.logic_area_mm2,
                states_per_iteration: result.states_per_iteration,
                state_bound,
                success: result.constraint_satisfied,
                phase,
            },
        );
        Ok(result)
    }

    /// Memoized memory generation.
    pub fn plm_generate(
        &mut self,
        backend: &dyn SynthesisBackend,
        component: &ComponentDescriptor,
        ports: u32,
    ) -> Result<f64, BackendError> {
        let key = (component.name.clone(), ports);
        if let Some(entry) = self.plm.get(&key) {
            return Ok(entry.area_mm2);
        }
        let area_mm2 = backend.plm_generate(component, ports)?;
        self.plm.insert(key, PlmEntry { component: component.name.clone(), ports, area_mm2 });
        Ok(area_mm2)
    }

    /// Unique HLS invocations so far.
    pub fn hls_count(&self) -> usize {
        self.hls.len()
    }

    /// Folds another ledger in; existing entries win (both sides recorded
    /// the same deterministic backend results, so order only matters for
    /// the phase tag of entries invoked in both).
    pub fn merge(&mut self, other: InvocationLedger) {
        for (k, v) in other.hls {
            self.hls.entry(k).or_insert(v);
        }
        for (k, v) in other.plm {
            self.plm.entry(k).or_insert(v);
        }
    }

    /// Unique memory-generator invocations so far.
    pub fn plm_count(&self) -> usize {
        self.plm.len()
    }

    pub fn hls_entries(&self) -> impl Iterator<Item = &HlsEntry> {
        self.hls.values()
    }

    pub fn plm_entries(&self) -> impl Iterator<Item = &PlmEntry> {
        self.plm.values()
    }

    /// Per-component, per-phase invocation counts.
    pub fn report(&self) -> LedgerReport {
        let mut per: BTreeMap<String, ComponentCounts> = BTreeMap::new();
        for entry in self.hls.values() {
            let counts = per.entry(entry.component.clone()).or_insert_with(|| ComponentCounts {
                component: entry.component.clone(),
                ..Default::default()
            });
            match entry.phase {
                Phase::Characterization => counts.characterization += 1,
                Phase::ConstraintFailure => counts.constraint_failure += 1,
                Phase::Mapping => counts.mapping += 1,
            }
        }
        for entry in self.plm.values() {
            per.entry(entry.component.clone())
                .or_insert_with(|| ComponentCounts {
                    component: entry.component.clone(),
                    ..Default::default()
                })
                .plm += 1;
        }
        let mut report = LedgerReport::default();
        for counts in per.into_values() {
            report.totals.characterization += counts.characterization;
            report.totals.constraint_failure += counts.constraint_failure;
            report.totals.mapping += counts.mapping;
            report.totals.plm += counts.plm;
            report.per_component.push(counts);
        }
        report
    }
}

/// Invocation counts for one component.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCounts {
    pub component: String,
    pub characterization: usize,
    pub constraint_failure: usize,
    pub mapping: usize,
    pub plm: usize,
}

impl ComponentCounts {
    pub fn hls_total(&self) -> usize {
        self.characterization + self.constraint_failure + self.mapping
    }
}

/// Invocation breakdown across all components.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub per_component: Vec<ComponentCounts>,
    pub totals: ComponentCounts,
}
