//! Synthesis mapping: invert planned latency budgets into knob settings.
//!
//! Within a region the unroll count for a latency target comes from a
//! diminishing-returns model (a rearranged Amdahl speedup curve) solved for
//! the unroll count and rounded up. The resulting synthesis must both meet
//! the schedule-state bound and actually reach the target; otherwise
//! unrolls are increased one step at a time, and as a last resort a
//! characterized corner is reused, trading area to preserve throughput.
//! Targets that fall between regions reuse the slowest corner of the next
//! faster region, which costs no new synthesis.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{Activity, BackendError, InvocationLedger, SynthesisBackend};
use crate::characterize::{lambda_bound, Characterization};
use crate::math;
use crate::model::{mismatch, ComponentDescriptor, KnobSetting, Region};
use crate::planner::PlannedPoint;
use crate::tmg::{self, Binding, TimedMarkedGraph, TmgError};

#[derive(Debug, Clone, PartialEq)]
pub enum MapError {
    EmptyCharacterization(String),
    UnknownComponent(String),
    /// φ is undefined on a region whose corners share one latency.
    DegenerateRegion { component: String, ports: u32 },
    PhiDomain(&'static str),
    Backend(BackendError),
    Graph(TmgError),
    /// The planned point references a transition the graph does not have.
    UnknownTransition(String),
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::EmptyCharacterization(c) => {
                write!(f, "component '{c}' has no characterized regions to map into")
            }
            MapError::UnknownComponent(c) => write!(f, "unknown component '{c}'"),
            MapError::DegenerateRegion { component, ports } => {
                write!(f, "region ports={ports} of '{component}' is degenerate; reuse its corner")
            }
            MapError::PhiDomain(what) => write!(f, "mapping function domain error: {what}"),
            MapError::Backend(e) => write!(f, "backend error: {e}"),
            MapError::Graph(e) => write!(f, "graph error: {e}"),
            MapError::UnknownTransition(t) => write!(f, "planned transition '{t}' not in graph"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MapError {}

impl From<BackendError> for MapError {
    fn from(e: BackendError) -> Self {
        MapError::Backend(e)
    }
}

impl From<TmgError> for MapError {
    fn from(e: TmgError) -> Self {
        MapError::Graph(e)
    }
}

/// Unroll count that should hit `lambda_target` inside a region, from the
/// diminishing-returns curve through the region corners:
///
/// ```text
/// φ = (λ_min·λ_max·μ_max + λ_t·λ_max·μ_min − λ_min·λ_max·μ_min − λ_t·λ_min·μ_max)
///     / (λ_t·(λ_max − λ_min))
/// ```
///
/// φ equals μ_max at λ_min and μ_min at λ_max, decreasing strictly in
/// between.
pub fn phi(
    lambda_target: f64,
    lambda_min: f64,
    lambda_max: f64,
    mu_min: u32,
    mu_max: u32,
) -> Result<f64, MapError> {
    if !(lambda_min < lambda_max) {
        return Err(MapError::PhiDomain("lambda_min must be below lambda_max"));
    }
    if mu_min >= mu_max {
        return Err(MapError::PhiDomain("mu_min must be below mu_max"));
    }
    if !(lambda_target >= lambda_min && lambda_target <= lambda_max) {
        return Err(MapError::PhiDomain("lambda_target outside [lambda_min, lambda_max]"));
    }
    let (mu_min, mu_max) = (mu_min as f64, mu_max as f64);
    let numerator = lambda_min * lambda_max * mu_max + lambda_target * lambda_max * mu_min
        - lambda_min * lambda_max * mu_min
        - lambda_target * lambda_min * mu_max;
    Ok(numerator / (lambda_target * (lambda_max - lambda_min)))
}

/// ⌈φ⌉ with a snap to the nearest integer when φ sits within rounding
/// error of it, so exact corner targets map to the corner unrolls.
pub fn ceil_unrolls(phi_value: f64) -> u32 {
    let nearest = math::round(phi_value);
    if math::abs(phi_value - nearest) < 1e-9 * if phi_value > 1.0 { phi_value } else { 1.0 } {
        nearest as u32
    } else {
        math::ceil(phi_value) as u32
    }
}

/// Which fallback rule the mapper had to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    None,
    /// The φ estimate missed; unrolls were increased (possibly up to the
    /// region corner).
    UnrollIncrease,
    /// The target fell outside every region; a characterized corner of
    /// another region was reused.
    NextRegionCorner,
}

/// Result of mapping one latency target onto a knob setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingOutcome {
    pub transition: String,
    pub component: String,
    pub lambda_target_ms: f64,
    /// Ports of the region the target mapped into.
    pub region_ports: u32,
    /// The φ-derived unroll estimate, when the in-region path applied.
    pub mu_target: Option<u32>,
    pub knobs: KnobSetting,
    pub realized_lambda_ms: f64,
    /// Memory-inclusive area of the realized point.
    pub realized_area_mm2: f64,
    pub new_invocations: usize,
    pub fallback: Fallback,
    /// Set when even the fastest usable point is slower than the target.
    pub shortfall: bool,
}

fn region_tol(region: &Region) -> f64 {
    1e-9 * if region.lambda_max_ms > 1.0 { region.lambda_max_ms } else { 1.0 }
}

/// Maps one latency target into the characterized knob space of a
/// component. See the module docs for the rule order.
pub fn map_component(
    component: &ComponentDescriptor,
    char: &Characterization,
    lambda_target_ms: f64,
    clock_ns: f64,
    backend: &dyn SynthesisBackend,
    ledger: &mut InvocationLedger,
) -> Result<MappingOutcome, MapError> {
    map_component_for(component, char, "", lambda_target_ms, clock_ns, backend, ledger)
}

fn map_component_for(
    component: &ComponentDescriptor,
    char: &Characterization,
    transition: &str,
    lambda_target_ms: f64,
    clock_ns: f64,
    backend: &dyn SynthesisBackend,
    ledger: &mut InvocationLedger,
) -> Result<MappingOutcome, MapError> {
    if char.regions.is_empty() {
        return Err(MapError::EmptyCharacterization(char.component.clone()));
    }
    let invocations_before = ledger.hls_count();
    let outcome = |region: &Region,
                   mu_target: Option<u32>,
                   knobs: KnobSetting,
                   realized_lambda: f64,
                   realized_area: f64,
                   fallback: Fallback,
                   ledger: &InvocationLedger| MappingOutcome {
        transition: transition.into(),
        component: char.component.clone(),
        lambda_target_ms,
        region_ports: region.ports,
        mu_target,
        knobs,
        realized_lambda_ms: realized_lambda,
        realized_area_mm2: realized_area,
        new_invocations: ledger.hls_count() - invocations_before,
        fallback,
        shortfall: realized_lambda > lambda_target_ms + region_tol(region),
    };

    // (0) corner coincidence: a target sitting on a characterized corner
    // reuses that memoized synthesis outright. Several corners can match
    // (regions may overlap in latency); take the cheapest.
    let corner_hit = char
        .regions
        .iter()
        .flat_map(|r| {
            let tol = region_tol(r);
            let mut hits = Vec::new();
            if math::abs(lambda_target_ms - r.lambda_max_ms) <= tol {
                hits.push((r, r.mu_min, r.alpha_min_mm2));
            }
            if !r.is_degenerate() && math::abs(lambda_target_ms - r.lambda_min_ms) <= tol {
                hits.push((r, r.mu_max, r.alpha_max_mm2));
            }
            hits
        })
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    if let Some((region, unrolls, _)) = corner_hit {
        let knobs = KnobSetting::new(unrolls, region.ports, clock_ns);
        let r = ledger.synthesize(backend, component, knobs, None, Activity::Mapping)?;
        return Ok(outcome(
            region,
            None,
            knobs,
            r.effective_latency_ms,
            r.logic_area_mm2 + region.plm_area_mm2,
            Fallback::None,
            ledger,
        ));
    }

    // (a) the target falls inside a region: estimate unrolls with φ and
    // synthesize under the region's state bound, stepping unrolls up on a
    // miss, with the characterized corner as the last resort.
    let containing = char
        .regions
        .iter()
        .find(|r| {
            let tol = region_tol(r);
            lambda_target_ms >= r.lambda_min_ms - tol && lambda_target_ms <= r.lambda_max_ms + tol
        });
    if let Some(region) = containing {
        let params = component.synth.as_ref().expect("characterized components are synthesizable");
        let tol = region_tol(region);
        if region.is_degenerate() || region.lambda_max_ms - region.lambda_min_ms <= tol {
            // single usable point; corner reuse
            let knobs = KnobSetting::new(region.mu_min, region.ports, clock_ns);
            let r = ledger.synthesize(backend, component, knobs, None, Activity::Mapping)?;
            return Ok(outcome(
                region,
                None,
                knobs,
                r.effective_latency_ms,
                r.logic_area_mm2 + region.plm_area_mm2,
                Fallback::None,
                ledger,
            ));
        }
        let estimate = ceil_unrolls(phi(
            lambda_target_ms.clamp(region.lambda_min_ms, region.lambda_max_ms),
            region.lambda_min_ms,
            region.lambda_max_ms,
            region.mu_min,
            region.mu_max,
        )?)
        .clamp(region.mu_min, region.mu_max);
        for unrolls in estimate..=region.mu_max {
            let bound = lambda_bound(params.gamma_r, params.gamma_w, params.eta, region.ports, unrolls);
            let knobs = KnobSetting::new(unrolls, region.ports, clock_ns);
            let r = ledger.synthesize(backend, component, knobs, Some(bound), Activity::Mapping)?;
            if r.constraint_satisfied && r.effective_latency_ms <= lambda_target_ms + tol {
                let fallback =
                    if unrolls > estimate { Fallback::UnrollIncrease } else { Fallback::None };
                return Ok(outcome(
                    region,
                    Some(estimate),
                    knobs,
                    r.effective_latency_ms,
                    r.logic_area_mm2 + region.plm_area_mm2,
                    fallback,
                    ledger,
                ));
            }
        }
        // every attempt missed: reuse the upper-left corner, flagging a
        // shortfall when even that is slower than the target
        let knobs = KnobSetting::new(region.mu_max, region.ports, clock_ns);
        let r = ledger.synthesize(backend, component, knobs, None, Activity::Mapping)?;
        return Ok(outcome(
            region,
            Some(estimate),
            knobs,
            r.effective_latency_ms,
            r.logic_area_mm2 + region.plm_area_mm2,
            Fallback::UnrollIncrease,
            ledger,
        ));
    }

    // (b) gap between regions (or slower than every region): reuse the
    // lower-right corner of the nearest region below the target.
    let below = char
        .regions
        .iter()
        .filter(|r| r.lambda_max_ms <= lambda_target_ms)
        .max_by(|a, b| a.lambda_max_ms.partial_cmp(&b.lambda_max_ms).unwrap());
    if let Some(region) = below {
        let knobs = KnobSetting::new(region.mu_min, region.ports, clock_ns);
        let r = ledger.synthesize(backend, component, knobs, None, Activity::Mapping)?;
        return Ok(outcome(
            region,
            None,
            knobs,
            r.effective_latency_ms,
            r.logic_area_mm2 + region.plm_area_mm2,
            Fallback::NextRegionCorner,
            ledger,
        ));
    }

    // (c) faster than every region: reuse the globally fastest corner and
    // flag the shortfall.
    let fastest = char
        .regions
        .iter()
        .min_by(|a, b| a.lambda_min_ms.partial_cmp(&b.lambda_min_ms).unwrap())
        .expect("regions nonempty");
    let knobs = KnobSetting::new(fastest.mu_max, fastest.ports, clock_ns);
    let r = ledger.synthesize(backend, component, knobs, None, Activity::Mapping)?;
    Ok(outcome(
        fastest,
        None,
        knobs,
        r.effective_latency_ms,
        r.logic_area_mm2 + fastest.plm_area_mm2,
        Fallback::NextRegionCorner,
        ledger,
    ))
}

/// One realized system implementation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDesignPoint {
    pub theta_planned_per_ms: f64,
    pub theta_realized_per_ms: f64,
    pub planned_area_mm2: f64,
    pub realized_area_mm2: f64,
    /// Plan-vs-map area mismatch |realized − planned| / planned.
    pub sigma: f64,
    pub shortfall: bool,
    pub components: Vec<MappingOutcome>,
}

/// Maps every planned latency budget of one planned point and assembles
/// the realized system design point.
pub fn map_solution(
    planned: &PlannedPoint,
    g: &TimedMarkedGraph,
    components: &BTreeMap<String, ComponentDescriptor>,
    chars: &BTreeMap<String, Characterization>,
    clock_ns: f64,
    backend: &dyn SynthesisBackend,
    ledger: &mut InvocationLedger,
) -> Result<SystemDesignPoint, MapError> {
    let mut outcomes = Vec::new();
    let mut realized_tau = Vec::with_capacity(g.transitions.len());
    let mut realized_area = 0.0;
    for t in &g.transitions {
        match planned.lambda_ms.get(&t.name) {
            Some(&target) => {
                let comp_name = match &t.binding {
                    Binding::Component(name) => name,
                    Binding::FixedMs(_) => {
                        return Err(MapError::UnknownTransition(t.name.clone()))
                    }
                };
                let comp = components
                    .get(comp_name)
                    .ok_or_else(|| MapError::UnknownComponent(comp_name.clone()))?;
                let char = chars
                    .get(comp_name)
                    .ok_or_else(|| MapError::EmptyCharacterization(comp_name.clone()))?;
                let outcome = map_component_for(
                    comp, char, &t.name, target, clock_ns, backend, ledger,
                )?;
                realized_tau.push(outcome.realized_lambda_ms);
                realized_area += outcome.realized_area_mm2;
                outcomes.push(outcome);
            }
            None => {
                // fixed delay, either inline or via a fixed-latency component
                let delay = match &t.binding {
                    Binding::FixedMs(d) => *d,
                    Binding::Component(name) => components
                        .get(name)
                        .and_then(|c| c.fixed_latency_ms)
                        .ok_or_else(|| MapError::UnknownTransition(t.name.clone()))?,
                };
                realized_tau.push(delay);
            }
        }
    }
    let realized =
        tmg::effective_throughput(g, &tmg::DelayVector::new(realized_tau))?;
    let sigma = mismatch(planned.planned_cost_mm2, realized_area).unwrap_or(0.0);
    Ok(SystemDesignPoint {
        theta_planned_per_ms: planned.theta_per_ms,
        theta_realized_per_ms: realized.theta_per_ms,
        planned_area_mm2: planned.planned_cost_mm2,
        realized_area_mm2: realized_area,
        sigma,
        shortfall: outcomes.iter().any(|o| o.shortfall),
        components: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{SimulatedBackend, TableBackend, TableRow};
    use crate::characterize::{characterize_component, CharacterizationConfig};
    use crate::model::{AreaModel, PlmModel, SynthParams};
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn phi_golden_example() {
        let v = phi(20.0, 10.0, 40.0, 1, 30).unwrap();
        assert!((v - 32.0 / 3.0).abs() < 1e-12);
        assert_eq!(ceil_unrolls(v), 11);
    }

    #[test]
    fn phi_endpoint_identities() {
        assert!((phi(40.0, 10.0, 40.0, 1, 30).unwrap() - 1.0).abs() < 1e-12);
        assert!((phi(10.0, 10.0, 40.0, 1, 30).unwrap() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn phi_rejects_degenerate_region() {
        assert!(matches!(phi(10.0, 10.0, 10.0, 1, 8), Err(MapError::PhiDomain(_))));
        assert!(matches!(phi(10.0, 10.0, 40.0, 8, 8), Err(MapError::PhiDomain(_))));
    }

    #[test]
    fn phi_matches_amdahl_inversion_on_random_tuples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let lambda_min = rng.gen_range(0.1..50.0);
            let lambda_max = lambda_min * rng.gen_range(1.1..20.0);
            let mu_min = rng.gen_range(1..16u32);
            let mu_max = mu_min + rng.gen_range(1..32u32);
            let t = rng.gen_range(lambda_min..lambda_max);
            let direct = phi(t, lambda_min, lambda_max, mu_min, mu_max).unwrap();
            // Solving the speedup curve λt/λmax = 1/((1-x) + x·λmax/λmin)
            // for x = (μt - μmin)/(μmax - μmin):
            let x = lambda_min * (lambda_max - t) / (t * (lambda_max - lambda_min));
            let solved = mu_min as f64 + x * (mu_max - mu_min) as f64;
            assert!(
                math::rel_diff(direct, solved) < 1e-12,
                "phi {direct} vs inversion {solved}"
            );
        }
    }

    #[test]
    fn phi_is_strictly_decreasing() {
        let mut last = f64::INFINITY;
        for i in 1..=10 {
            let t = 10.0 + 30.0 * i as f64 / 11.0;
            let v = phi(t, 10.0, 40.0, 1, 30).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    fn demo_component() -> ComponentDescriptor {
        ComponentDescriptor {
            name: "demo".to_string(),
            fixed_latency_ms: None,
            synth: Some(SynthParams {
                gamma_r: 1,
                gamma_w: 1,
                eta: 1,
                trip_count: 64,
                base_cycles: 10,
                max_unrolls: 8,
                ports_options: vec![1, 2],
                area: AreaModel { base_mm2: 0.02, per_unroll_mm2: 0.004, per_port_mm2: 0.006 },
                plm: PlmModel { bank_mm2: 0.01, word_mm2: 1e-5, capacity_words: 4096 },
                noise_rate: 0.0,
            }),
        }
    }

    fn characterize_demo() -> (ComponentDescriptor, Characterization, SimulatedBackend, InvocationLedger) {
        let comp = demo_component();
        let backend = SimulatedBackend::new(0);
        let mut ledger = InvocationLedger::new();
        let cfg = CharacterizationConfig { clock_ns: 1.0, ..Default::default() };
        let ch = characterize_component(&comp, &cfg, &backend, &mut ledger).unwrap();
        (comp, ch, backend, ledger)
    }

    #[test]
    fn corner_target_reuses_memoized_corner() {
        let (comp, ch, backend, mut ledger) = characterize_demo();
        let target = ch.regions[1].lambda_max_ms; // 106e-6, the (2,2) corner
        let out =
            map_component(&comp, &ch, target, 1.0, &backend, &mut ledger).unwrap();
        assert_eq!(out.new_invocations, 0);
        assert_eq!((out.knobs.unrolls, out.knobs.ports), (2, 2));
        assert_eq!(out.fallback, Fallback::None);
        assert!(!out.shortfall);
    }

    #[test]
    fn interior_target_needs_one_new_synthesis() {
        let (comp, ch, backend, mut ledger) = characterize_demo();
        // inside the ports=2 region [58e-6, 106e-6]
        let out = map_component(&comp, &ch, 80e-6, 1.0, &backend, &mut ledger).unwrap();
        assert_eq!(out.mu_target, Some(5));
        assert_eq!(out.new_invocations, 1);
        assert_eq!(out.fallback, Fallback::None);
        assert!(out.realized_lambda_ms <= 80e-6);
        // the realized point matches the simulated model exactly
        let check = backend
            .hls_synthesize(&comp, KnobSetting::new(5, 2, 1.0), None)
            .unwrap();
        assert_eq!(out.realized_lambda_ms, check.effective_latency_ms);
    }

    #[test]
    fn slow_estimate_triggers_unroll_increase() {
        let (comp, ch, backend, mut ledger) = characterize_demo();
        // target 99e-6 in the ports=1 region [90e-6, 202e-6]: φ picks u=7,
        // whose iteration ceiling makes it 100 cycles — one step up fixes it
        let out = map_component(&comp, &ch, 99e-6, 1.0, &backend, &mut ledger).unwrap();
        assert_eq!(out.mu_target, Some(7));
        assert_eq!((out.knobs.unrolls, out.knobs.ports), (8, 1));
        assert_eq!(out.fallback, Fallback::UnrollIncrease);
        assert!(out.realized_lambda_ms <= 99e-6);
        assert_eq!(out.new_invocations, 1); // u=7 was new, u=8 memoized
    }

    fn gapped_characterization() -> (ComponentDescriptor, Characterization, TableBackend, InvocationLedger)
    {
        // ports=1 spans [30, 40] ms, ports=2 spans [10, 20] ms: gap (20, 30)
        let mut comp = demo_component();
        comp.name = "gapped".into();
        let rows = vec![
            TableRow { component: "gapped".into(), unrolls: 1, ports: 1, clock_ns: 1.0, latency_cycles: 40_000_000, logic_area_mm2: 1.0, plm_area_mm2: 0.5 },
            TableRow { component: "gapped".into(), unrolls: 8, ports: 1, clock_ns: 1.0, latency_cycles: 30_000_000, logic_area_mm2: 1.5, plm_area_mm2: 0.5 },
            TableRow { component: "gapped".into(), unrolls: 2, ports: 2, clock_ns: 1.0, latency_cycles: 20_000_000, logic_area_mm2: 2.0, plm_area_mm2: 0.8 },
            TableRow { component: "gapped".into(), unrolls: 8, ports: 2, clock_ns: 1.0, latency_cycles: 10_000_000, logic_area_mm2: 2.8, plm_area_mm2: 0.8 },
        ];
        let backend = TableBackend::new(rows, true);
        let mut ledger = InvocationLedger::new();
        let cfg = CharacterizationConfig { clock_ns: 1.0, ..Default::default() };
        let ch = characterize_component(&comp, &cfg, &backend, &mut ledger).unwrap();
        (comp, ch, backend, ledger)
    }

    #[test]
    fn gap_target_reuses_next_region_corner_for_free() {
        let (comp, ch, backend, mut ledger) = gapped_characterization();
        assert_eq!(ch.regions.len(), 2);
        let out = map_component(&comp, &ch, 25.0, 1.0, &backend, &mut ledger).unwrap();
        assert_eq!(out.fallback, Fallback::NextRegionCorner);
        assert_eq!(out.region_ports, 2);
        assert_eq!(out.realized_lambda_ms, 20.0);
        assert_eq!(out.new_invocations, 0);
        assert!(!out.shortfall);
    }

    #[test]
    fn target_beyond_the_slowest_region_reuses_the_slowest_corner() {
        let (comp, ch, backend, mut ledger) = gapped_characterization();
        let out = map_component(&comp, &ch, 55.0, 1.0, &backend, &mut ledger).unwrap();
        assert_eq!(out.fallback, Fallback::NextRegionCorner);
        assert_eq!(out.realized_lambda_ms, 40.0);
        assert_eq!(out.new_invocations, 0);
        assert!(!out.shortfall);
    }

    #[test]
    fn target_below_every_region_shortfalls_on_the_fastest_corner() {
        let (comp, ch, backend, mut ledger) = gapped_characterization();
        let out = map_component(&comp, &ch, 5.0, 1.0, &backend, &mut ledger).unwrap();
        assert_eq!(out.fallback, Fallback::NextRegionCorner);
        assert_eq!(out.realized_lambda_ms, 10.0);
        assert!(out.shortfall);
        assert_eq!(out.new_invocations, 0);
    }

    #[test]
    fn empty_characterization_is_an_error() {
        let (comp, _, backend, mut ledger) = characterize_demo();
        let empty = Characterization {
            component: "demo".into(),
            regions: vec![],
            points: vec![],
            skipped: vec![],
        };
        assert!(matches!(
            map_component(&comp, &empty, 1.0, 1.0, &backend, &mut ledger),
            Err(MapError::EmptyCharacterization(_))
        ));
    }
}
