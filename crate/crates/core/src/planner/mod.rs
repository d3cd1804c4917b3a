//! System-level synthesis planning.
//!
//! Each characterized component contributes a convex piecewise-linear cost
//! envelope (area as a function of its latency budget). Planning at a
//! target throughput θ solves the cost-minimization LP
//!
//! ```text
//!   min Σ f_i(τ_i)   s.t.   Aσ + M0/θ ≥ τ⁻,   τ_min ≤ τ ≤ τ_max
//! ```
//!
//! over the timed marked graph (A is the incidence matrix, σ the
//! transition initiation times, τ⁻ the input-transition delay of each
//! place). Sweeping θ between the throughput extremes produces the planned
//! Pareto curve; convex cost terms are linearized exactly with epigraph
//! variables.

pub mod lp;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::characterize::Characterization;
use crate::math;
use crate::model::{pareto_indices, DesignPoint};
use crate::tmg::{self, Binding, DelayVector, Throughput, TimedMarkedGraph, TmgError};
use lp::{Cmp, LinearProgram, LpError, LpOutcome, Row};

/// Convex piecewise-linear area cost of one component as a function of its
/// latency budget. Breakpoints are strictly increasing in λ and strictly
/// decreasing in α; beyond the last breakpoint the cost stays flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearCost {
    pub breakpoints: Vec<(f64, f64)>,
}

impl PiecewiseLinearCost {
    /// Lower convex envelope of a point cloud in the (λ, α) plane.
    pub fn from_points(points: &[DesignPoint]) -> Result<Self, PlanError> {
        let idx = pareto_indices(points).map_err(|_| PlanError::NoPoints)?;
        let frontier: Vec<(f64, f64)> = idx.iter().map(|&i| (points[i].perf, points[i].area)).collect();
        // Monotone-chain lower hull; the frontier is already sorted by λ.
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(frontier.len());
        for p in frontier {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= 0.0 {
                    hull.pop(); // b lies on or above chord a—p
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Ok(Self { breakpoints: hull })
    }

    /// Envelope over the corner points of a characterization.
    pub fn from_characterization(ch: &Characterization) -> Result<Self, PlanError> {
        let mut corners = Vec::new();
        for r in &ch.regions {
            corners.push(DesignPoint::latency(r.lambda_max_ms, r.alpha_min_mm2));
            if !r.is_degenerate() {
                corners.push(DesignPoint::latency(r.lambda_min_ms, r.alpha_max_mm2));
            }
        }
        if corners.is_empty() {
            return Err(PlanError::NoRegions(ch.component.clone()));
        }
        Self::from_points(&corners)
    }

    pub fn lambda_min(&self) -> f64 {
        self.breakpoints.first().map(|b| b.0).unwrap_or(f64::NAN)
    }

    pub fn lambda_max(&self) -> f64 {
        self.breakpoints.last().map(|b| b.0).unwrap_or(f64::NAN)
    }

    /// Envelope value, clamped flat outside the breakpoint range.
    pub fn eval(&self, lambda_ms: f64) -> f64 {
        let bps = &self.breakpoints;
        if lambda_ms <= bps[0].0 {
            return bps[0].1;
        }
        for w in bps.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if lambda_ms <= x1 {
                return y0 + (lambda_ms - x0) / (x1 - x0) * (y1 - y0);
            }
        }
        bps[bps.len() - 1].1
    }

    /// The supporting lines (slope, intercept) of every segment, including
    /// the flat tail; the envelope equals their pointwise maximum.
    pub fn supports(&self) -> Vec<(f64, f64)> {
        let bps = &self.breakpoints;
        let mut out = Vec::new();
        for w in bps.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            out.push((slope, w[0].1 - slope * w[0].0));
        }
        let last = bps[bps.len() - 1];
        out.push((0.0, last.1));
        out
    }
}

/// Planning failures.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanError {
    Graph(TmgError),
    NoPoints,
    NoRegions(String),
    /// A transition is bound to a component with no characterization or
    /// fixed latency.
    UnresolvedBinding { transition: String, component: String },
    /// θ exceeds what the binding cycle allows even at minimum latencies.
    InfeasibleTheta { theta_per_ms: f64, theta_max_per_ms: f64, cycle: Vec<String> },
    /// The LP was unbounded, which indicates a modeling bug.
    Unbounded,
    Solver(LpError),
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::Graph(e) => write!(f, "graph error: {e}"),
            PlanError::NoPoints => write!(f, "no design points to build a cost function from"),
            PlanError::NoRegions(c) => write!(f, "component '{c}' has no characterized regions"),
            PlanError::UnresolvedBinding { transition, component } => {
                write!(f, "transition '{transition}' is bound to '{component}' which has neither a characterization nor a fixed latency")
            }
            PlanError::InfeasibleTheta { theta_per_ms, theta_max_per_ms, cycle } => {
                write!(
                    f,
                    "target throughput {theta_per_ms} 1/ms is infeasible (max {theta_max_per_ms}); binding cycle: ["
                )?;
                for (i, t) in cycle.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "]")
            }
            PlanError::Unbounded => write!(f, "planning LP is unbounded (modeling bug)"),
            PlanError::Solver(e) => write!(f, "LP solver error: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PlanError {}

impl From<TmgError> for PlanError {
    fn from(e: TmgError) -> Self {
        PlanError::Graph(e)
    }
}

impl From<LpError> for PlanError {
    fn from(e: LpError) -> Self {
        PlanError::Solver(e)
    }
}

/// How each transition enters the plan.
#[derive(Debug, Clone)]
enum TransitionKind {
    /// Planned with a latency budget over [λ_min, λ_max] and a cost envelope.
    Planned { cost: PiecewiseLinearCost },
    Fixed(f64),
}

/// Per-transition planning inputs resolved from bindings: a cost envelope
/// for characterized components, a constant for fixed delays.
#[derive(Debug, Clone)]
pub struct PlanningInputs {
    kinds: Vec<TransitionKind>,
}

impl PlanningInputs {
    /// Resolves every binding of the graph. `chars` maps component names to
    /// characterizations; `fixed_components` supplies delays for components
    /// modeled with a fixed latency.
    pub fn resolve(
        g: &TimedMarkedGraph,
        chars: &BTreeMap<String, Characterization>,
        fixed_components: &BTreeMap<String, f64>,
    ) -> Result<Self, PlanError> {
        let mut kinds = Vec::with_capacity(g.transitions.len());
        for t in &g.transitions {
            let kind = match &t.binding {
                Binding::FixedMs(d) => TransitionKind::Fixed(*d),
                Binding::Component(name) => {
                    if let Some(ch) = chars.get(name) {
                        TransitionKind::Planned { cost: PiecewiseLinearCost::from_characterization(ch)? }
                    } else if let Some(d) = fixed_components.get(name) {
                        TransitionKind::Fixed(*d)
                    } else {
                        return Err(PlanError::UnresolvedBinding {
                            transition: t.name.clone(),
                            component: name.clone(),
                        });
                    }
                }
            };
            kinds.push(kind);
        }
        Ok(Self { kinds })
    }

    /// Delay vector with every planned transition pinned to one extreme of
    /// its envelope.
    fn extreme_delays(&self, g: &TimedMarkedGraph, use_max: bool) -> DelayVector {
        let tau = g
            .transitions
            .iter()
            .zip(&self.kinds)
            .map(|(_, k)| match k {
                TransitionKind::Fixed(d) => *d,
                TransitionKind::Planned { cost } => {
                    if use_max {
                        cost.lambda_max()
                    } else {
                        cost.lambda_min()
                    }
                }
            })
            .collect();
        DelayVector::new(tau)
    }

    fn planned_indices(&self) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter_map(|(i, k)| matches!(k, TransitionKind::Planned { .. }).then_some(i))
            .collect()
    }
}

/// Feasible throughput range of the system: θ_min with every component at
/// its slowest characterized corner, θ_max with every component at its
/// fastest. Unconstrained (acyclic) systems report infinite bounds.
pub fn theta_bounds(
    g: &TimedMarkedGraph,
    inputs: &PlanningInputs,
) -> Result<(Throughput, Throughput), PlanError> {
    let slow = tmg::effective_throughput(g, &inputs.extreme_delays(g, true))?;
    let fast = tmg::effective_throughput(g, &inputs.extreme_delays(g, false))?;
    Ok((slow, fast))
}

/// One LP solution of the plan: a latency budget per planned transition and
/// the minimized total planned area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPoint {
    pub theta_per_ms: f64,
    /// Planned latency per planned transition, keyed by transition name.
    pub lambda_ms: BTreeMap<String, f64>,
    /// Transition initiation times, in transition declaration order.
    pub initiation_ms: Vec<f64>,
    pub planned_cost_mm2: f64,
}

impl PlannedPoint {
    /// Full delay vector over all transitions, fixed delays included.
    pub fn full_delays(&self, g: &TimedMarkedGraph, inputs: &PlanningInputs) -> DelayVector {
        let tau = g
            .transitions
            .iter()
            .zip(&inputs.kinds)
            .map(|(t, k)| match k {
                TransitionKind::Fixed(d) => *d,
                TransitionKind::Planned { .. } => self.lambda_ms[&t.name],
            })
            .collect();
        DelayVector::new(tau)
    }
}

/// The Eq-style LP for one θ, kept around for inspection in tests.
#[derive(Debug, Clone)]
pub struct LpInstance {
    pub lp: LinearProgram,
    /// Variable index of τ per planned transition (graph order).
    pub tau_vars: BTreeMap<usize, usize>,
    /// Variable index of σ per transition.
    pub sigma_vars: Vec<usize>,
    /// Variable index of the epigraph cost per planned transition.
    pub cost_vars: BTreeMap<usize, usize>,
}

/// Builds the θ-constrained cost LP: place rows `Aσ + M0/θ ≥ τ⁻`, box
/// bounds on τ, and epigraph rows `c_i ≥ slope·τ_i + intercept` per
/// envelope segment.
pub fn build_lp_instance(
    g: &TimedMarkedGraph,
    inputs: &PlanningInputs,
    theta_per_ms: f64,
) -> Result<LpInstance, PlanError> {
    let resolved = tmg::resolve(g)?;
    let planned = inputs.planned_indices();
    let n = g.transitions.len();

    let mut bounds: Vec<(f64, f64)> = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut tau_vars = BTreeMap::new();
    for &t in &planned {
        let TransitionKind::Planned { cost } = &inputs.kinds[t] else { unreachable!() };
        tau_vars.insert(t, bounds.len());
        bounds.push((cost.lambda_min(), cost.lambda_max()));
        objective.push(0.0);
    }
    let sigma_vars: Vec<usize> = (0..n)
        .map(|_| {
            bounds.push((f64::NEG_INFINITY, f64::INFINITY));
            objective.push(0.0);
            bounds.len() - 1
        })
        .collect();
    let mut cost_vars = BTreeMap::new();
    for &t in &planned {
        cost_vars.insert(t, bounds.len());
        bounds.push((f64::NEG_INFINITY, f64::INFINITY));
        objective.push(1.0);
    }

    let mut rows: Vec<Row> = Vec::new();
    // Place rows: σ_out − σ_in − [τ_in] ≥ −M0/θ − [fixed τ_in].
    for p in 0..g.places.len() {
        let t_in = resolved.place_in[p];
        let t_out = resolved.place_out[p];
        let slack = g.initial_marking[p] as f64 / theta_per_ms;
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        if t_in != t_out {
            coeffs.push((sigma_vars[t_out], 1.0));
            coeffs.push((sigma_vars[t_in], -1.0));
        }
        let mut rhs = -slack;
        match &inputs.kinds[t_in] {
            TransitionKind::Fixed(d) => rhs += d,
            TransitionKind::Planned { .. } => coeffs.push((tau_vars[&t_in], -1.0)),
        }
        rows.push(Row { coeffs, cmp: Cmp::Ge, rhs });
    }
    // Epigraph rows per envelope segment: c − slope·τ ≥ intercept.
    for &t in &planned {
        let TransitionKind::Planned { cost } = &inputs.kinds[t] else { unreachable!() };
        for (slope, intercept) in cost.supports() {
            rows.push(Row {
                coeffs: vec![(cost_vars[&t], 1.0), (tau_vars[&t], -slope)],
                cmp: Cmp::Ge,
                rhs: intercept,
            });
        }
    }

    Ok(LpInstance {
        lp: LinearProgram { num_vars: bounds.len(), objective, rows, bounds },
        tau_vars,
        sigma_vars,
        cost_vars,
    })
}

/// Solves the plan for one target throughput.
pub fn plan_at_theta(
    g: &TimedMarkedGraph,
    inputs: &PlanningInputs,
    theta_per_ms: f64,
) -> Result<PlannedPoint, PlanError> {
    let instance = build_lp_instance(g, inputs, theta_per_ms)?;
    let solution = match lp::solve(&instance.lp)? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Err(infeasibility_report(g, inputs, theta_per_ms)),
        LpOutcome::Unbounded => return Err(PlanError::Unbounded),
    };

    // Transitions on no cycle never bind a throughput constraint; pin them
    // to the cheap end of their envelope so the output is canonical.
    let sccs = scc_cyclic_transitions(g)?;
    let mut lambda_ms = BTreeMap::new();
    for (&t, &var) in &instance.tau_vars {
        let TransitionKind::Planned { cost } = &inputs.kinds[t] else { unreachable!() };
        let tau = if sccs[t] {
            solution.x[var].clamp(cost.lambda_min(), cost.lambda_max())
        } else {
            cost.lambda_max()
        };
        lambda_ms.insert(g.transitions[t].name.clone(), tau);
    }
    let planned_cost_mm2 = instance
        .cost_vars
        .iter()
        .map(|(_, &var)| solution.x[var])
        .sum::<f64>();

    let point = PlannedPoint {
        theta_per_ms,
        lambda_ms,
        initiation_ms: Vec::new(),
        planned_cost_mm2,
    };
    let initiation_ms = initiation_times(g, &point.full_delays(g, inputs), theta_per_ms)?;
    Ok(PlannedPoint { initiation_ms, ..point })
}

fn scc_cyclic_transitions(g: &TimedMarkedGraph) -> Result<Vec<bool>, PlanError> {
    let mut cyclic = vec![false; g.transitions.len()];
    for scc in tmg::scc_decompose(g)? {
        if scc.cyclic {
            for t in scc.transitions {
                cyclic[t] = true;
            }
        }
    }
    Ok(cyclic)
}

/// Consistent transition initiation times for fixed delays at θ: the least
/// fixpoint of `σ_out ≥ σ_in + τ_in − M0/θ` from zero, computed with a
/// fixed number of relaxation rounds so results are deterministic.
fn initiation_times(
    g: &TimedMarkedGraph,
    tau: &DelayVector,
    theta_per_ms: f64,
) -> Result<Vec<f64>, PlanError> {
    let resolved = tmg::resolve(g)?;
    let n = g.transitions.len();
    let mut sigma = vec![0.0f64; n];
    for _ in 0..2 * (n + 1) {
        for p in 0..g.places.len() {
            let t_in = resolved.place_in[p];
            let t_out = resolved.place_out[p];
            if t_in == t_out {
                continue;
            }
            let w = tau.tau_ms[t_in] - g.initial_marking[p] as f64 / theta_per_ms;
            if sigma[t_in] + w > sigma[t_out] {
                sigma[t_out] = sigma[t_in] + w;
            }
        }
    }
    Ok(sigma)
}

/// Explains an infeasible θ by naming the cycle that binds even at minimum
/// latencies.
fn infeasibility_report(
    g: &TimedMarkedGraph,
    inputs: &PlanningInputs,
    theta_per_ms: f64,
) -> PlanError {
    let fastest = inputs.extreme_delays(g, false);
    match tmg::min_cycle_time_detailed(g, &fastest, tmg::DEFAULT_CYCLE_CAP) {
        Ok((mct, cycle)) => PlanError::InfeasibleTheta {
            theta_per_ms,
            theta_max_per_ms: 1.0 / mct,
            cycle: cycle.map(|c| c.transitions).unwrap_or_default(),
        },
        Err(e) => PlanError::Graph(e),
    }
}

/// Plans the whole Pareto curve: θ sweeps from θ_min to θ_max in equal
/// log-steps sized so that consecutive points stay strictly within a
/// (1+δ) ratio, with θ_max always included as the final point.
pub fn sweep(
    g: &TimedMarkedGraph,
    inputs: &PlanningInputs,
    delta: f64,
) -> Result<Vec<PlannedPoint>, PlanError> {
    assert!(delta > 0.0, "sweep granularity must be positive");
    let (theta_min, theta_max) = theta_bounds(g, inputs)?;
    let (lo, hi) = (theta_min.theta_per_ms, theta_max.theta_per_ms);
    if theta_min.unconstrained || lo == hi {
        return Ok(vec![plan_at_theta(g, inputs, lo)?]);
    }
    let ratio = hi / lo;
    // floor + 1 intervals keeps every gap strictly below (1+δ), including
    // the case where the range is an exact power of (1+δ).
    let intervals = math::floor(math::ln(ratio) / math::ln(1.0 + delta)) as usize + 1;
    let step = math::ln(ratio) / intervals as f64;
    let mut points = Vec::with_capacity(intervals + 1);
    for k in 0..=intervals {
        let theta = if k == intervals { hi } else { lo * math::exp(step * k as f64) };
        points.push(plan_at_theta(g, inputs, theta)?);
    }
    Ok(points)
}

/// Minimum cycle time via LP feasibility bisection: a candidate cycle time
/// `c` is feasible iff the place constraints `Aσ + M0·c ≥ τ⁻` admit
/// initiation times. Serves as an independent check of the enumeration
/// route in [`tmg::min_cycle_time`].
pub fn min_cycle_time_by_lp(
    g: &TimedMarkedGraph,
    tau: &DelayVector,
) -> Result<f64, PlanError> {
    let resolved = tmg::resolve(g)?;
    if tau.tau_ms.len() != g.transitions.len() {
        return Err(PlanError::Graph(TmgError::DelayLength {
            expected: g.transitions.len(),
            actual: tau.tau_ms.len(),
        }));
    }
    let n = g.transitions.len();
    let feasible = |c: f64| -> Result<bool, PlanError> {
        let bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
        let objective = vec![0.0; n];
        let mut rows = Vec::with_capacity(g.places.len());
        for p in 0..g.places.len() {
            let t_in = resolved.place_in[p];
            let t_out = resolved.place_out[p];
            let mut coeffs = Vec::new();
            if t_in != t_out {
                coeffs.push((t_out, 1.0));
                coeffs.push((t_in, -1.0));
            }
            rows.push(Row {
                coeffs,
                cmp: Cmp::Ge,
                rhs: tau.tau_ms[t_in] - g.initial_marking[p] as f64 * c,
            });
        }
        let lp_prob = LinearProgram { num_vars: n, objective, rows, bounds };
        Ok(matches!(lp::solve(&lp_prob)?, LpOutcome::Optimal(_)))
    };
    let mut hi = tau.tau_ms.iter().sum::<f64>() + 1.0;
    if !feasible(hi)? {
        return Err(PlanError::Graph(TmgError::Deadlock { transitions: Vec::new() }));
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if (hi - lo) <= 1e-13 * if hi > 1.0 { hi } else { 1.0 } {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Region;
    use alloc::string::ToString;
    use crate::tmg::TransitionDecl;

    fn char_with_regions(name: &str, regions: Vec<Region>) -> Characterization {
        Characterization {
            component: name.to_string(),
            regions,
            points: Vec::new(),
            skipped: Vec::new(),
        }
    }

    fn region(lambda_min: f64, lambda_max: f64, alpha_min: f64, alpha_max: f64) -> Region {
        Region {
            ports: 1,
            mu_min: 1,
            mu_max: 8,
            lambda_max_ms: lambda_max,
            lambda_min_ms: lambda_min,
            alpha_min_mm2: alpha_min,
            alpha_max_mm2: alpha_max,
            plm_area_mm2: 0.1,
        }
    }

    /// A ↔ B ring: a -> p1 -> b -> p2 -> a, one token on p2.
    fn ring() -> TimedMarkedGraph {
        TimedMarkedGraph {
            places: vec!["p1".into(), "p2".into()],
            transitions: vec![
                TransitionDecl { name: "a".into(), binding: Binding::Component("A".into()) },
                TransitionDecl { name: "b".into(), binding: Binding::Component("B".into()) },
            ],
            arcs: vec![
                ("a".into(), "p1".into()),
                ("p1".into(), "b".into()),
                ("b".into(), "p2".into()),
                ("p2".into(), "a".into()),
            ],
            initial_marking: vec![0, 1],
        }
    }

    fn ring_inputs() -> (TimedMarkedGraph, PlanningInputs) {
        let g = ring();
        let mut chars = BTreeMap::new();
        // f_A on [10, 40] with slope -0.1; f_B on [20, 30] with slope -0.3
        chars.insert("A".to_string(), char_with_regions("A", vec![region(10.0, 40.0, 2.0, 5.0)]));
        chars.insert("B".to_string(), char_with_regions("B", vec![region(20.0, 30.0, 1.0, 4.0)]));
        let inputs = PlanningInputs::resolve(&g, &chars, &BTreeMap::new()).unwrap();
        (g, inputs)
    }

    #[test]
    fn envelope_two_points() {
        let pts = vec![DesignPoint::latency(10.0, 5.0), DesignPoint::latency(40.0, 2.0)];
        let f = PiecewiseLinearCost::from_points(&pts).unwrap();
        assert_eq!(f.breakpoints.len(), 2);
        let supports = f.supports();
        assert!((supports[0].0 - (-0.1)).abs() < 1e-12);
        assert!((f.eval(25.0) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn envelope_collinear_middle_changes_nothing() {
        let with = vec![
            DesignPoint::latency(10.0, 5.0),
            DesignPoint::latency(25.0, 3.5),
            DesignPoint::latency(40.0, 2.0),
        ];
        let without = vec![DesignPoint::latency(10.0, 5.0), DesignPoint::latency(40.0, 2.0)];
        let fa = PiecewiseLinearCost::from_points(&with).unwrap();
        let fb = PiecewiseLinearCost::from_points(&without).unwrap();
        for q in [10.0, 17.3, 25.0, 33.0, 40.0] {
            assert!((fa.eval(q) - fb.eval(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_excludes_points_above_a_chord() {
        let pts = vec![
            DesignPoint::latency(10.0, 5.0),
            DesignPoint::latency(20.0, 4.5), // above the (10,5)-(40,2) chord
            DesignPoint::latency(40.0, 2.0),
        ];
        let f = PiecewiseLinearCost::from_points(&pts).unwrap();
        assert_eq!(f.breakpoints.len(), 2);
        // hull oracle: envelope at any λ is the min over all chords
        for q in [12.0, 20.0, 31.0] {
            let mut chord_min = f64::INFINITY;
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    let (a, b) = (pts[i], pts[j]);
                    if a.perf < b.perf && a.perf <= q && q <= b.perf {
                        let v = a.area + (q - a.perf) / (b.perf - a.perf) * (b.area - a.area);
                        chord_min = chord_min.min(v);
                    }
                }
            }
            assert!((f.eval(q) - chord_min).abs() < 1e-12);
        }
        // every input point lies on or above the envelope
        for p in &pts {
            assert!(p.area >= f.eval(p.perf) - 1e-12);
        }
    }

    #[test]
    fn theta_bounds_two_component_ring() {
        let (g, inputs) = ring_inputs();
        let (lo, hi) = theta_bounds(&g, &inputs).unwrap();
        assert!((lo.theta_per_ms - 1.0 / 70.0).abs() < 1e-15);
        assert!((hi.theta_per_ms - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn theta_bounds_all_fixed_collapse() {
        let mut g = ring();
        g.transitions[0].binding = Binding::FixedMs(3.0);
        g.transitions[1].binding = Binding::FixedMs(2.0);
        let inputs = PlanningInputs::resolve(&g, &BTreeMap::new(), &BTreeMap::new()).unwrap();
        let (lo, hi) = theta_bounds(&g, &inputs).unwrap();
        assert_eq!(lo.theta_per_ms, hi.theta_per_ms);
        assert_eq!(lo.theta_per_ms, 0.2);
    }

    #[test]
    fn plan_matches_grid_search_oracle() {
        let (g, inputs) = ring_inputs();
        let theta = 1.0 / 50.0;
        let point = plan_at_theta(&g, &inputs, theta).unwrap();
        assert!((point.lambda_ms["a"] - 20.0).abs() < 1e-6);
        assert!((point.lambda_ms["b"] - 30.0).abs() < 1e-6);
        assert!((point.planned_cost_mm2 - 5.0).abs() < 1e-6);

        // brute-force grid oracle over τ_a + τ_b ≤ 50
        let fa = PiecewiseLinearCost::from_points(&[
            DesignPoint::latency(10.0, 5.0),
            DesignPoint::latency(40.0, 2.0),
        ])
        .unwrap();
        let fb = PiecewiseLinearCost::from_points(&[
            DesignPoint::latency(20.0, 4.0),
            DesignPoint::latency(30.0, 1.0),
        ])
        .unwrap();
        let mut best = f64::INFINITY;
        let mut ta = 10.0;
        while ta <= 40.0 {
            let mut tb = 20.0f64;
            while tb <= 30.0 {
                if ta + tb <= 50.0 + 1e-12 {
                    best = best.min(fa.eval(ta) + fb.eval(tb));
                }
                tb += 0.01;
            }
            ta += 0.01;
        }
        assert!(point.planned_cost_mm2 <= best + 1e-6);
    }

    #[test]
    fn plan_at_extremes() {
        let (g, inputs) = ring_inputs();
        let at_min = plan_at_theta(&g, &inputs, 1.0 / 70.0).unwrap();
        assert!((at_min.lambda_ms["a"] - 40.0).abs() < 1e-6);
        assert!((at_min.lambda_ms["b"] - 30.0).abs() < 1e-6);
        assert!((at_min.planned_cost_mm2 - 3.0).abs() < 1e-6);

        let at_max = plan_at_theta(&g, &inputs, 1.0 / 30.0).unwrap();
        assert!((at_max.lambda_ms["a"] - 10.0).abs() < 1e-6);
        assert!((at_max.lambda_ms["b"] - 20.0).abs() < 1e-6);
    }

    #[test]
    fn planned_point_is_feasible_for_the_graph() {
        let (g, inputs) = ring_inputs();
        for theta in [1.0 / 70.0, 1.0 / 52.3, 1.0 / 30.0] {
            let point = plan_at_theta(&g, &inputs, theta).unwrap();
            let tau = point.full_delays(&g, &inputs);
            let realized = tmg::effective_throughput(&g, &tau).unwrap();
            assert!(realized.theta_per_ms >= theta * (1.0 - 1e-9));
        }
    }

    #[test]
    fn infeasible_theta_names_the_binding_cycle() {
        let (g, inputs) = ring_inputs();
        let err = plan_at_theta(&g, &inputs, 1.0 / 29.0).unwrap_err();
        match err {
            PlanError::InfeasibleTheta { cycle, theta_max_per_ms, .. } => {
                assert!((theta_max_per_ms - 1.0 / 30.0).abs() < 1e-9);
                assert_eq!(cycle.len(), 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sweep_point_counts() {
        let (g, inputs) = ring_inputs();
        let points = sweep(&g, &inputs, 0.1).unwrap();
        assert_eq!(points.len(), 10);
        assert!((points[0].theta_per_ms - 1.0 / 70.0).abs() < 1e-15);
        assert!((points[9].theta_per_ms - 1.0 / 30.0).abs() < 1e-15);
        for w in points.windows(2) {
            let gap = w[1].theta_per_ms / w[0].theta_per_ms - 1.0;
            assert!(gap < 0.1, "gap {gap}");
            assert!(gap > 0.0);
        }

        let coarse = sweep(&g, &inputs, 10.0).unwrap();
        assert_eq!(coarse.len(), 2);
    }

    #[test]
    fn sweep_single_point_when_bounds_collapse() {
        let mut g = ring();
        g.transitions[0].binding = Binding::FixedMs(3.0);
        g.transitions[1].binding = Binding::FixedMs(2.0);
        let inputs = PlanningInputs::resolve(&g, &BTreeMap::new(), &BTreeMap::new()).unwrap();
        let points = sweep(&g, &inputs, 0.1).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].planned_cost_mm2, 0.0);
    }

    #[test]
    fn sweep_cost_is_monotone_in_theta() {
        let (g, inputs) = ring_inputs();
        let points = sweep(&g, &inputs, 0.07).unwrap();
        for w in points.windows(2) {
            assert!(w[1].planned_cost_mm2 >= w[0].planned_cost_mm2 - 1e-9);
        }
    }

    #[test]
    fn acyclic_transitions_plan_at_lambda_max() {
        // ring of a, b plus a dangling downstream consumer c
        let mut g = ring();
        g.places.push("p3".into());
        g.transitions.push(TransitionDecl {
            name: "c".into(),
            binding: Binding::Component("C".into()),
        });
        g.arcs.push(("b".into(), "p3".into()));
        g.arcs.push(("p3".into(), "c".into()));
        g.initial_marking.push(0);
        let mut chars = BTreeMap::new();
        chars.insert("A".to_string(), char_with_regions("A", vec![region(10.0, 40.0, 2.0, 5.0)]));
        chars.insert("B".to_string(), char_with_regions("B", vec![region(20.0, 30.0, 1.0, 4.0)]));
        chars.insert("C".to_string(), char_with_regions("C", vec![region(5.0, 9.0, 1.0, 3.0)]));
        let inputs = PlanningInputs::resolve(&g, &chars, &BTreeMap::new()).unwrap();
        let point = plan_at_theta(&g, &inputs, 1.0 / 50.0).unwrap();
        assert_eq!(point.lambda_ms["c"], 9.0);
        // and c never binds: realized throughput is still the ring's
        let tau = point.full_delays(&g, &inputs);
        let realized = tmg::effective_throughput(&g, &tau).unwrap();
        assert!(realized.theta_per_ms >= 1.0 / 50.0 - 1e-12);
    }

    #[test]
    fn lp_bisection_agrees_with_enumeration_on_the_ring() {
        let g = ring();
        let tau = DelayVector::new(vec![3.0, 2.0]);
        let by_enum = tmg::min_cycle_time(&g, &tau).unwrap();
        let by_lp = min_cycle_time_by_lp(&g, &tau).unwrap();
        assert!(math::rel_diff(by_enum, by_lp) < 1e-9);
    }

    #[test]
    fn unresolved_binding_is_reported() {
        let g = ring();
        let err = PlanningInputs::resolve(&g, &BTreeMap::new(), &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, PlanError::UnresolvedBinding { .. }));
    }
}
