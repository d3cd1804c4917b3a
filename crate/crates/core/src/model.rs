//! Shared domain types, Pareto-dominance utilities and scalar metrics.
//!
//! Components are compared on (effective latency λ, area α) with both axes
//! minimized; assembled systems are compared on (effective throughput θ,
//! area α) with θ maximized. [`Axis`] records which convention a point uses
//! so the two are never mixed by accident.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Which performance convention a [`DesignPoint`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Component level: effective latency in milliseconds, minimized.
    Latency,
    /// System level: effective throughput in 1/ms, maximized.
    Throughput,
}

/// One point in a two-objective design space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    /// Latency (ms) or throughput (1/ms) depending on `axis`.
    pub perf: f64,
    /// Area cost in mm², always minimized.
    pub area: f64,
    pub axis: Axis,
}

impl DesignPoint {
    pub fn latency(lambda_ms: f64, area_mm2: f64) -> Self {
        Self { perf: lambda_ms, area: area_mm2, axis: Axis::Latency }
    }

    pub fn throughput(theta_per_ms: f64, area_mm2: f64) -> Self {
        Self { perf: theta_per_ms, area: area_mm2, axis: Axis::Throughput }
    }
}

/// One synthesis knob configuration handed to the HLS tool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnobSetting {
    /// Loop-unroll factor μ.
    pub unrolls: u32,
    /// Parallel read/write ports of the private local memory.
    pub ports: u32,
    /// Target clock period in nanoseconds.
    pub clock_ns: f64,
}

impl KnobSetting {
    pub fn new(unrolls: u32, ports: u32, clock_ns: f64) -> Self {
        Self { unrolls, ports, clock_ns }
    }
}

/// Outcome of one HLS run for a knob setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    /// Clock cycles needed to process one block of data.
    pub latency_cycles: u64,
    /// Effective latency λ in milliseconds: `latency_cycles × clock`.
    pub effective_latency_ms: f64,
    /// Datapath area in mm², excluding the private local memory.
    pub logic_area_mm2: f64,
    /// Scheduled states in the innermost loop body.
    pub states_per_iteration: u32,
    /// Whether the schedule met the state bound it was run under
    /// (always true for unconstrained runs).
    pub constraint_satisfied: bool,
}

/// Effective latency in ms for a cycle count at a clock period in ns.
pub fn effective_latency_ms(latency_cycles: u64, clock_ns: f64) -> f64 {
    latency_cycles as f64 * clock_ns * 1e-6
}

/// Parameters of the simulated-synthesis latency/area model for one
/// synthesizable component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// γ_r: max reads to one array per innermost-loop iteration.
    pub gamma_r: u32,
    /// γ_w: max writes to one array per innermost-loop iteration.
    pub gamma_w: u32,
    /// η: states needed by operations that do not touch the memory.
    pub eta: u32,
    /// Iterations of the innermost loop per processed block.
    pub trip_count: u64,
    /// Cycles spent outside the innermost loop per processed block.
    pub base_cycles: u64,
    /// Largest legal unroll factor.
    pub max_unrolls: u32,
    /// Port counts the memory generator may be asked for; powers of two.
    pub ports_options: Vec<u32>,
    /// Simulated-backend coefficients; table replay ignores them.
    #[serde(default)]
    pub area: AreaModel,
    #[serde(default)]
    pub plm: PlmModel,
    /// Probability in [0, 1] that the scheduler needs extra states for a
    /// given knob setting (drawn deterministically from the run seed).
    pub noise_rate: f64,
}

/// Logic-area model: `base + per_unroll · μ + per_port · p`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AreaModel {
    pub base_mm2: f64,
    pub per_unroll_mm2: f64,
    pub per_port_mm2: f64,
}

/// Memory-area model: `bank · p + word · capacity_words`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlmModel {
    pub bank_mm2: f64,
    pub word_mm2: f64,
    pub capacity_words: u64,
}

/// One accelerator component as supplied by the designer.
///
/// Exactly one of `fixed_latency_ms` (software components that are not
/// synthesized) and `synth` (hardware components) must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDescriptor {
    pub name: String,
    #[serde(default)]
    pub fixed_latency_ms: Option<f64>,
    #[serde(default)]
    pub synth: Option<SynthParams>,
}

impl ComponentDescriptor {
    pub fn is_synthesizable(&self) -> bool {
        self.synth.is_some()
    }

    /// Checks the descriptor invariants, returning a message per violation.
    pub fn validate(&self) -> Vec<String> {
        use alloc::format;
        let mut errs = Vec::new();
        match (&self.fixed_latency_ms, &self.synth) {
            (Some(_), Some(_)) => {
                errs.push(format!("component '{}': both fixed latency and synthesis parameters set", self.name))
            }
            (None, None) => {
                errs.push(format!("component '{}': neither fixed latency nor synthesis parameters set", self.name))
            }
            (Some(l), None) if *l <= 0.0 => {
                errs.push(format!("component '{}': fixed latency must be positive", self.name))
            }
            _ => {}
        }
        if let Some(p) = &self.synth {
            if p.ports_options.is_empty() {
                errs.push(format!("component '{}': empty ports_options", self.name));
            }
            for &ports in &p.ports_options {
                if !ports.is_power_of_two() {
                    errs.push(format!("component '{}': ports option {} is not a power of two", self.name, ports));
                }
            }
            if let Some(&max_ports) = p.ports_options.iter().max() {
                if p.max_unrolls < max_ports {
                    errs.push(format!(
                        "component '{}': max_unrolls {} below largest ports option {}",
                        self.name, p.max_unrolls, max_ports
                    ));
                }
            }
            if p.trip_count == 0 {
                errs.push(format!("component '{}': trip_count must be positive", self.name));
            }
            if !(0.0..=1.0).contains(&p.noise_rate) {
                errs.push(format!("component '{}': noise_rate outside [0, 1]", self.name));
            }
        }
        errs
    }
}

/// One design-space region of a component: all points sharing a port count,
/// bounded by the corners (λ_max, α_min) and (λ_min, α_max).
///
/// Areas are memory-inclusive; `plm_area_mm2` records the memory share so
/// the logic contribution stays auditable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub ports: u32,
    /// Unrolls at the lower-right corner; always equals `ports`.
    pub mu_min: u32,
    /// Unrolls at the upper-left corner.
    pub mu_max: u32,
    pub lambda_max_ms: f64,
    pub lambda_min_ms: f64,
    pub alpha_min_mm2: f64,
    pub alpha_max_mm2: f64,
    pub plm_area_mm2: f64,
}

impl Region {
    /// A region that found no constrained point: both corners collapse onto
    /// the lower-right one.
    pub fn is_degenerate(&self) -> bool {
        self.mu_min == self.mu_max
    }

    pub fn contains_lambda(&self, lambda_ms: f64) -> bool {
        lambda_ms >= self.lambda_min_ms && lambda_ms <= self.lambda_max_ms
    }
}

/// Errors raised by the metric and dominance operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// Points on different performance axes were compared.
    AxisMismatch,
    EmptyInput,
    /// A quantity that must be strictly positive was not.
    NonPositive(&'static str),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::AxisMismatch => write!(f, "design points use different performance axes"),
            ModelError::EmptyInput => write!(f, "operation requires a nonempty point set"),
            ModelError::NonPositive(what) => write!(f, "{what} must be strictly positive"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// True iff `a` is no worse than `b` on both axes and strictly better on at
/// least one. Latency and area are minimized, throughput is maximized.
pub fn dominates(a: &DesignPoint, b: &DesignPoint) -> Result<bool, ModelError> {
    if a.axis != b.axis {
        return Err(ModelError::AxisMismatch);
    }
    let (perf_no_worse, perf_better) = match a.axis {
        Axis::Latency => (a.perf <= b.perf, a.perf < b.perf),
        Axis::Throughput => (a.perf >= b.perf, a.perf > b.perf),
    };
    let area_no_worse = a.area <= b.area;
    let area_better = a.area < b.area;
    Ok(perf_no_worse && area_no_worse && (perf_better || area_better))
}

/// Indices of the non-dominated points, sorted by increasing latency
/// (or decreasing throughput). Exact duplicates keep the first occurrence.
///
/// Index form lets callers keep provenance in parallel arrays.
pub fn pareto_indices(points: &[DesignPoint]) -> Result<Vec<usize>, ModelError> {
    if points.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let axis = points[0].axis;
    if points.iter().any(|p| p.axis != axis) {
        return Err(ModelError::AxisMismatch);
    }
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            // Unwraps are fine: the axis was checked above.
            if dominates(q, p).unwrap() {
                continue 'outer;
            }
            if q.perf == p.perf && q.area == p.area && j < i {
                continue 'outer; // duplicate; an earlier copy represents it
            }
        }
        keep.push(i);
    }
    keep.sort_by(|&i, &j| {
        let (a, b) = (&points[i], &points[j]);
        let ord = a.perf.partial_cmp(&b.perf).expect("finite perf");
        match axis {
            Axis::Latency => ord,
            Axis::Throughput => ord.reverse(),
        }
    });
    Ok(keep)
}

/// The non-dominated subset of `points`; see [`pareto_indices`].
pub fn pareto_filter(points: &[DesignPoint]) -> Result<Vec<DesignPoint>, ModelError> {
    Ok(pareto_indices(points)?.into_iter().map(|i| points[i]).collect())
}

/// Performance and cost spread of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    /// max perf / min perf (λ or θ depending on the axis).
    pub perf: f64,
    /// max area / min area.
    pub area: f64,
}

/// Ratio of extreme performance values and of extreme areas; both ≥ 1.
pub fn span(points: &[DesignPoint]) -> Result<Span, ModelError> {
    if points.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let mut perf = (f64::INFINITY, f64::NEG_INFINITY);
    let mut area = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        if p.perf <= 0.0 {
            return Err(ModelError::NonPositive("performance"));
        }
        if p.area <= 0.0 {
            return Err(ModelError::NonPositive("area"));
        }
        perf = (perf.0.min(p.perf), perf.1.max(p.perf));
        area = (area.0.min(p.area), area.1.max(p.area));
    }
    Ok(Span { perf: perf.1 / perf.0, area: area.1 / area.0 })
}

/// Plan-vs-map mismatch ratio: `|mapped − planned| / planned`.
pub fn mismatch(planned_area: f64, mapped_area: f64) -> Result<f64, ModelError> {
    if planned_area <= 0.0 {
        return Err(ModelError::NonPositive("planned area"));
    }
    Ok(crate::math::abs(mapped_area - planned_area) / planned_area)
}
