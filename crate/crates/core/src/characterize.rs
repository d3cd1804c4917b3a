//! Per-component characterization: discover the design-space regions that
//! bound the Pareto-optimal implementations.
//!
//! For each port count the flow synthesizes two extreme points. The
//! lower-right corner (λ_max, α_min) sets unrolls equal to ports so every
//! memory port is exploited. The upper-left corner (λ_min, α_max) walks
//! unrolls downward from the maximum, accepting the first schedule that
//! fits the analytic state bound of [`lambda_bound`] — this rejects the
//! unroll counts where the scheduler needs extra states and would leave the
//! Pareto front. The generated memory area is then added to both corners.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{Activity, BackendError, InvocationLedger, SynthesisBackend};
use crate::model::{ComponentDescriptor, DesignPoint, KnobSetting, Region};

/// States sufficient to schedule one loop iteration:
/// `⌈γ_r·unrolls/ports⌉ + ⌈γ_w/ports⌉ + η`.
///
/// Used as the upper bound on the states the scheduler may insert; a
/// schedule that needs more is discarded as unpredictable.
pub fn lambda_bound(gamma_r: u32, gamma_w: u32, eta: u32, ports: u32, unrolls: u32) -> u32 {
    let reads = (gamma_r as u64 * unrolls as u64).div_ceil(ports as u64) as u32;
    let writes = gamma_w.div_ceil(ports);
    reads + writes + eta
}

/// Knob-sweep limits for a characterization run. `None` caps default to
/// the component's own declared limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationConfig {
    pub clock_ns: f64,
    #[serde(default)]
    pub max_ports: Option<u32>,
    #[serde(default)]
    pub max_unrolls: Option<u32>,
    /// When set, refine each upper-left corner by synthesizing this many
    /// unroll counts below the corner and keeping the fastest local
    /// Pareto-optimal point.
    #[serde(default)]
    pub neighborhood_radius: Option<u32>,
}

impl Default for CharacterizationConfig {
    fn default() -> Self {
        Self { clock_ns: 1.0, max_ports: None, max_unrolls: None, neighborhood_radius: None }
    }
}

/// Why a synthesized point exists in a characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRole {
    LowerRight,
    UpperLeft,
    Neighborhood,
}

/// A synthesized design point with its knob provenance. Area is
/// memory-inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPoint {
    pub knobs: KnobSetting,
    pub lambda_ms: f64,
    pub area_mm2: f64,
    pub states_per_iteration: u32,
    pub role: PointRole,
}

/// A per-ports region that could not be characterized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRegion {
    pub ports: u32,
    pub reason: String,
}

/// The characterization of one component: its regions in increasing port
/// order and every synthesized point with knob provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub component: String,
    pub regions: Vec<Region>,
    pub points: Vec<CharPoint>,
    pub skipped: Vec<SkippedRegion>,
}

impl Characterization {
    /// Global latency extremes over all regions (ms).
    pub fn lambda_extremes(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in &self.regions {
            lo = lo.min(r.lambda_min_ms);
            hi = hi.max(r.lambda_max_ms);
        }
        self.regions.first().map(|_| (lo, hi))
    }

    /// All synthesized points as latency-axis design points.
    pub fn design_points(&self) -> Vec<DesignPoint> {
        self.points.iter().map(|p| DesignPoint::latency(p.lambda_ms, p.area_mm2)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CharacterizeError {
    NotSynthesizable(String),
    InvalidComponent(Vec<String>),
    InvalidConfig(String),
}

impl fmt::Display for CharacterizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharacterizeError::NotSynthesizable(name) => {
                write!(f, "component '{name}' is not synthesizable")
            }
            CharacterizeError::InvalidComponent(errs) => {
                write!(f, "invalid component descriptor: {}", errs.join("; "))
            }
            CharacterizeError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CharacterizeError {}

/// Ports to sweep and the unroll ceiling, after applying the config caps to
/// the component's declared knob space.
fn effective_limits(
    component: &ComponentDescriptor,
    cfg: &CharacterizationConfig,
) -> Result<(Vec<u32>, u32), CharacterizeError> {
    let params = component
        .synth
        .as_ref()
        .ok_or_else(|| CharacterizeError::NotSynthesizable(component.name.clone()))?;
    let errs = component.validate();
    if !errs.is_empty() {
        return Err(CharacterizeError::InvalidComponent(errs));
    }
    if let Some(mp) = cfg.max_ports {
        let largest = params.ports_options.iter().max().copied().unwrap_or(0);
        if mp > largest {
            return Err(CharacterizeError::InvalidConfig(alloc::format!(
                "max_ports {mp} exceeds component '{}' largest ports option {largest}",
                component.name
            )));
        }
    }
    let mut ports: Vec<u32> = params
        .ports_options
        .iter()
        .copied()
        .filter(|&p| cfg.max_ports.map_or(true, |mp| p <= mp))
        .collect();
    ports.sort_unstable();
    ports.dedup();
    let max_unrolls = cfg.max_unrolls.map_or(params.max_unrolls, |m| m.min(params.max_unrolls));
    if let Some(&largest) = ports.last() {
        if max_unrolls < largest {
            return Err(CharacterizeError::InvalidConfig(alloc::format!(
                "max_unrolls {max_unrolls} below largest swept ports {largest}"
            )));
        }
    }
    if !(cfg.clock_ns > 0.0) {
        return Err(CharacterizeError::InvalidConfig("clock must be positive".to_string()));
    }
    Ok((ports, max_unrolls))
}

/// Characterizes one component: for each port count, synthesize the two
/// region corners under the state-bound discipline, add the generated
/// memory area, and record the region. Backend failures skip only the
/// affected port count.
pub fn characterize_component(
    component: &ComponentDescriptor,
    cfg: &CharacterizationConfig,
    backend: &dyn SynthesisBackend,
    ledger: &mut InvocationLedger,
) -> Result<Characterization, CharacterizeError> {
    let (ports_list, max_unrolls) = effective_limits(component, cfg)?;
    let params = component.synth.as_ref().unwrap();
    let mut out = Characterization {
        component: component.name.clone(),
        regions: Vec::new(),
        points: Vec::new(),
        skipped: Vec::new(),
    };
    for &ports in &ports_list {
        // Lower-right corner: unrolls = ports, no state bound.
        let lr_knobs = KnobSetting::new(ports, ports, cfg.clock_ns);
        let lower_right =
            match ledger.synthesize(backend, component, lr_knobs, None, Activity::Characterization)
            {
                Ok(r) => r,
                Err(e) => {
                    out.skipped.push(SkippedRegion {
                        ports,
                        reason: skipped_reason(&e),
                    });
                    continue;
                }
            };
        // Upper-left corner: first bound-satisfying schedule from the top.
        let mut upper_left: Option<(u32, crate::model::SynthesisResult)> = None;
        let mut u = max_unrolls;
        while u >= ports + 1 {
            let bound = lambda_bound(params.gamma_r, params.gamma_w, params.eta, ports, u);
            let knobs = KnobSetting::new(u, ports, cfg.clock_ns);
            match ledger.synthesize(backend, component, knobs, Some(bound), Activity::Characterization)
            {
                Ok(r) if r.constraint_satisfied => {
                    upper_left = Some((u, r));
                    break;
                }
                Ok(_) => {}
                Err(e) => {
                    // A hard backend failure on a candidate behaves like a
                    // discarded point; keep descending.
                    let _ = e;
                }
            }
            u -= 1;
        }
        let plm_area = match ledger.plm_generate(backend, component, ports) {
            Ok(a) => a,
            Err(e) => {
                out.skipped.push(SkippedRegion { ports, reason: skipped_reason(&e) });
                continue;
            }
        };
        let (mu_max, ul) = match &upper_left {
            Some((u, r)) => (*u, *r),
            None => (ports, lower_right), // degenerate: single corner
        };
        let region = Region {
            ports,
            mu_min: ports,
            mu_max,
            lambda_max_ms: lower_right.effective_latency_ms,
            lambda_min_ms: ul.effective_latency_ms,
            alpha_min_mm2: lower_right.logic_area_mm2 + plm_area,
            alpha_max_mm2: ul.logic_area_mm2 + plm_area,
            plm_area_mm2: plm_area,
        };
        out.points.push(CharPoint {
            knobs: lr_knobs,
            lambda_ms: lower_right.effective_latency_ms,
            area_mm2: lower_right.logic_area_mm2 + plm_area,
            states_per_iteration: lower_right.states_per_iteration,
            role: PointRole::LowerRight,
        });
        if !region.is_degenerate() {
            out.points.push(CharPoint {
                knobs: KnobSetting::new(mu_max, ports, cfg.clock_ns),
                lambda_ms: ul.effective_latency_ms,
                area_mm2: ul.logic_area_mm2 + plm_area,
                states_per_iteration: ul.states_per_iteration,
                role: PointRole::UpperLeft,
            });
        }
        let region = match cfg.neighborhood_radius {
            Some(radius) if !region.is_degenerate() => neighborhood_refine(
                component,
                &region,
                radius,
                cfg.clock_ns,
                backend,
                ledger,
                &mut out.points,
            ),
            _ => region,
        };
        out.regions.push(region);
    }
    Ok(out)
}

fn skipped_reason(e: &BackendError) -> String {
    use alloc::format;
    format!("{e}")
}

/// Re-synthesizes the unroll counts within `radius` below the upper-left
/// corner and moves the corner to the fastest local Pareto-optimal point.
/// The corner never gets slower: the current corner competes too.
pub fn neighborhood_refine(
    component: &ComponentDescriptor,
    region: &Region,
    radius: u32,
    clock_ns: f64,
    backend: &dyn SynthesisBackend,
    ledger: &mut InvocationLedger,
    points: &mut Vec<CharPoint>,
) -> Region {
    let mut refined = *region;
    if region.is_degenerate() || radius == 0 {
        return refined;
    }
    let lo = region.mu_max.saturating_sub(radius).max(region.mu_min + 1);
    let mut best = (region.lambda_min_ms, region.alpha_max_mm2, region.mu_max);
    for u in lo..region.mu_max {
        let knobs = KnobSetting::new(u, region.ports, clock_ns);
        let r = match ledger.synthesize(backend, component, knobs, None, Activity::Characterization)
        {
            Ok(r) => r,
            Err(_) => continue, // failures leave the corner unchanged
        };
        let area = r.logic_area_mm2 + region.plm_area_mm2;
        points.push(CharPoint {
            knobs,
            lambda_ms: r.effective_latency_ms,
            area_mm2: area,
            states_per_iteration: r.states_per_iteration,
            role: PointRole::Neighborhood,
        });
        let better_lambda = r.effective_latency_ms < best.0;
        let same_lambda_cheaper = r.effective_latency_ms == best.0 && area < best.1;
        if better_lambda || same_lambda_cheaper {
            best = (r.effective_latency_ms, area, u);
        }
    }
    refined.lambda_min_ms = best.0;
    refined.alpha_max_mm2 = best.1;
    refined.mu_max = best.2;
    refined
}
