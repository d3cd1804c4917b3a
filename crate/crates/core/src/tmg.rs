//! Timed-marked-graph model of an assembled accelerator and its
//! throughput analysis.
//!
//! A timed marked graph is a Petri net in which every place has exactly one
//! input and one output transition and every arc has weight 1. Transitions
//! model components (firing delay = effective latency), places model data
//! dependencies, and tokens model buffered blocks. The maximum sustainable
//! throughput is the reciprocal of the minimum cycle time
//! `max { D_k / N_k }` over the simple cycles `k`, where `D_k` sums the
//! transition delays and `N_k` counts the tokens of the cycle.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Default cap on enumerated simple cycles before the analysis falls back
/// to feasibility bisection.
pub const DEFAULT_CYCLE_CAP: usize = 1_000_000;

/// What a transition stands for: a named component to be characterized, or
/// a fixed firing delay (software / pre-characterized blocks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Component(String),
    FixedMs(f64),
}

/// A transition declaration; the declaration index fixes the position of
/// the transition in every delay vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDecl {
    pub name: String,
    pub binding: Binding,
}

/// The system performance model: places, transitions, unit-weight arcs and
/// the initial marking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedMarkedGraph {
    pub places: Vec<String>,
    pub transitions: Vec<TransitionDecl>,
    /// Arcs as (source, target) name pairs; each endpoint pair must join a
    /// place and a transition.
    pub arcs: Vec<(String, String)>,
    /// Tokens per place, aligned with `places`.
    pub initial_marking: Vec<u64>,
}

/// Per-transition firing delays in milliseconds, aligned with the
/// transition declarations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayVector {
    pub tau_ms: Vec<f64>,
}

impl DelayVector {
    pub fn new(tau_ms: Vec<f64>) -> Self {
        Self { tau_ms }
    }
}

/// A well-formedness violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    DuplicatePlace { place: String },
    DuplicateTransition { transition: String },
    /// An arc endpoint names neither a declared place nor transition.
    UnknownEndpoint { arc: (String, String), endpoint: String },
    /// An arc joins two places or two transitions.
    NonBipartiteArc { arc: (String, String) },
    DuplicateArc { arc: (String, String) },
    PlaceInputCount { place: String, count: usize },
    PlaceOutputCount { place: String, count: usize },
    MarkingLength { expected: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicatePlace { place } => write!(f, "duplicate place '{place}'"),
            Violation::DuplicateTransition { transition } => {
                write!(f, "duplicate transition '{transition}'")
            }
            Violation::UnknownEndpoint { arc, endpoint } => {
                write!(f, "arc ({}, {}) references undeclared node '{endpoint}'", arc.0, arc.1)
            }
            Violation::NonBipartiteArc { arc } => {
                write!(f, "arc ({}, {}) must join a place and a transition", arc.0, arc.1)
            }
            Violation::DuplicateArc { arc } => write!(f, "duplicate arc ({}, {})", arc.0, arc.1),
            Violation::PlaceInputCount { place, count } => {
                write!(f, "place '{place}' has {count} input transitions, expected exactly 1")
            }
            Violation::PlaceOutputCount { place, count } => {
                write!(f, "place '{place}' has {count} output transitions, expected exactly 1")
            }
            Violation::MarkingLength { expected, actual } => {
                write!(f, "initial marking has {actual} entries for {expected} places")
            }
        }
    }
}

/// Analysis errors; invalid graphs are reported through [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum TmgError {
    Invalid(Vec<Violation>),
    NotStronglyConnected,
    /// The graph (or component) contains no cycle, so no cycle time exists.
    Acyclic,
    /// A cycle without tokens can never fire: the system deadlocks.
    Deadlock { transitions: Vec<String> },
    DelayLength { expected: usize, actual: usize },
    NonPositiveDelay { transition: String },
    /// Simple-cycle enumeration gave up at the cap.
    CycleCapExceeded { cap: usize },
}

impl fmt::Display for TmgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TmgError::Invalid(vs) => {
                write!(f, "invalid timed marked graph ({} violations)", vs.len())
            }
            TmgError::NotStronglyConnected => {
                write!(f, "graph is not strongly connected; decompose it first")
            }
            TmgError::Acyclic => write!(f, "graph contains no cycle"),
            TmgError::Deadlock { transitions } => {
                write!(f, "token-free cycle through [")?;
                for (i, t) in transitions.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "]: the system deadlocks")
            }
            TmgError::DelayLength { expected, actual } => {
                write!(f, "delay vector has {actual} entries for {expected} transitions")
            }
            TmgError::NonPositiveDelay { transition } => {
                write!(f, "transition '{transition}' has a non-positive firing delay")
            }
            TmgError::CycleCapExceeded { cap } => {
                write!(f, "more than {cap} simple cycles; enumeration gave up")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TmgError {}

/// Checks every structural invariant; an empty list means the graph is a
/// well-formed timed marked graph.
pub fn validate(g: &TimedMarkedGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut place_idx: BTreeMap<&str, usize> = BTreeMap::new();
    let mut trans_idx: BTreeMap<&str, usize> = BTreeMap::new();

    for (i, p) in g.places.iter().enumerate() {
        if place_idx.insert(p.as_str(), i).is_some() {
            violations.push(Violation::DuplicatePlace { place: p.clone() });
        }
    }
    for (i, t) in g.transitions.iter().enumerate() {
        if trans_idx.insert(t.name.as_str(), i).is_some() {
            violations.push(Violation::DuplicateTransition { transition: t.name.clone() });
        }
    }
    if g.initial_marking.len() != g.places.len() {
        violations.push(Violation::MarkingLength {
            expected: g.places.len(),
            actual: g.initial_marking.len(),
        });
    }

    let mut seen_arcs: BTreeMap<(&str, &str), ()> = BTreeMap::new();
    let mut place_inputs = vec![0usize; g.places.len()];
    let mut place_outputs = vec![0usize; g.places.len()];
    for arc in &g.arcs {
        let (src, dst) = (arc.0.as_str(), arc.1.as_str());
        if seen_arcs.insert((src, dst), ()).is_some() {
            violations.push(Violation::DuplicateArc { arc: arc.clone() });
            continue;
        }
        let src_kind = (place_idx.get(src), trans_idx.get(src));
        let dst_kind = (place_idx.get(dst), trans_idx.get(dst));
        match (src_kind, dst_kind) {
            ((Some(&p), _), (_, Some(_t))) => place_outputs[p] += 1,
            ((_, Some(_t)), (Some(&p), _)) => place_inputs[p] += 1,
            ((Some(_), _), (Some(_), _)) | ((_, Some(_)), (_, Some(_))) => {
                violations.push(Violation::NonBipartiteArc { arc: arc.clone() });
            }
            ((None, None), _) => {
                violations.push(Violation::UnknownEndpoint { arc: arc.clone(), endpoint: arc.0.clone() });
            }
            (_, (None, None)) => {
                violations.push(Violation::UnknownEndpoint { arc: arc.clone(), endpoint: arc.1.clone() });
            }
        }
    }
    for (i, p) in g.places.iter().enumerate() {
        if place_inputs[i] != 1 {
            violations.push(Violation::PlaceInputCount { place: p.clone(), count: place_inputs[i] });
        }
        if place_outputs[i] != 1 {
            violations.push(Violation::PlaceOutputCount { place: p.clone(), count: place_outputs[i] });
        }
    }
    violations
}

/// Index view of a validated graph: for each place, its unique producer and
/// consumer transition.
#[derive(Debug, Clone)]
pub(crate) struct Resolved {
    pub place_in: Vec<usize>,
    pub place_out: Vec<usize>,
}

pub(crate) fn resolve(g: &TimedMarkedGraph) -> Result<Resolved, TmgError> {
    let violations = validate(g);
    if !violations.is_empty() {
        return Err(TmgError::Invalid(violations));
    }
    let place_idx: BTreeMap<&str, usize> =
        g.places.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let trans_idx: BTreeMap<&str, usize> =
        g.transitions.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
    let mut place_in = vec![usize::MAX; g.places.len()];
    let mut place_out = vec![usize::MAX; g.places.len()];
    for (src, dst) in &g.arcs {
        if let (Some(&t), Some(&p)) = (trans_idx.get(src.as_str()), place_idx.get(dst.as_str())) {
            place_in[p] = t;
        }
        if let (Some(&p), Some(&t)) = (place_idx.get(src.as_str()), trans_idx.get(dst.as_str())) {
            place_out[p] = t;
        }
    }
    Ok(Resolved { place_in, place_out })
}

fn check_delays(g: &TimedMarkedGraph, tau: &DelayVector) -> Result<(), TmgError> {
    if tau.tau_ms.len() != g.transitions.len() {
        return Err(TmgError::DelayLength {
            expected: g.transitions.len(),
            actual: tau.tau_ms.len(),
        });
    }
    for (i, &d) in tau.tau_ms.iter().enumerate() {
        if !(d > 0.0) {
            return Err(TmgError::NonPositiveDelay { transition: g.transitions[i].name.clone() });
        }
    }
    Ok(())
}

/// The m×n incidence matrix: `A[i][j] = +1` when transition j consumes from
/// place i, `-1` when it produces into it, 0 otherwise. A place whose
/// producer equals its consumer (self-loop) yields an all-zero row.
pub fn incidence_matrix(g: &TimedMarkedGraph) -> Result<Vec<Vec<i64>>, TmgError> {
    let r = resolve(g)?;
    let mut a = vec![vec![0i64; g.transitions.len()]; g.places.len()];
    for p in 0..g.places.len() {
        if r.place_in[p] == r.place_out[p] {
            continue; // +1 and -1 on the same column cancel
        }
        a[p][r.place_out[p]] = 1;
        a[p][r.place_in[p]] = -1;
    }
    Ok(a)
}

/// One strongly-connected component of the underlying directed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scc {
    pub transitions: Vec<usize>,
    pub places: Vec<usize>,
    /// Whether the component contains at least one cycle. In a bipartite
    /// graph this is exactly "has more than one node".
    pub cyclic: bool,
}

/// Node ids: transitions occupy `0..n`, places `n..n+m`.
fn adjacency(g: &TimedMarkedGraph, r: &Resolved) -> Vec<Vec<usize>> {
    let n = g.transitions.len();
    let mut adj = vec![Vec::new(); n + g.places.len()];
    for p in 0..g.places.len() {
        adj[r.place_in[p]].push(n + p); // producer -> place
        adj[n + p].push(r.place_out[p]); // place -> consumer
    }
    adj
}

/// Partitions all nodes into strongly-connected components, ordered by
/// their smallest transition (then place) index.
pub fn scc_decompose(g: &TimedMarkedGraph) -> Result<Vec<Scc>, TmgError> {
    let r = resolve(g)?;
    let n = g.transitions.len();
    let adj = adjacency(g, &r);
    let comps = tarjan(&adj);
    let mut sccs: Vec<Scc> = comps
        .into_iter()
        .map(|nodes| {
            let cyclic = nodes.len() > 1;
            let mut transitions: Vec<usize> =
                nodes.iter().copied().filter(|&v| v < n).collect();
            let mut places: Vec<usize> =
                nodes.iter().copied().filter(|&v| v >= n).map(|v| v - n).collect();
            transitions.sort_unstable();
            places.sort_unstable();
            Scc { transitions, places, cyclic }
        })
        .collect();
    sccs.sort_by_key(|c| {
        (c.transitions.first().copied().unwrap_or(usize::MAX), c.places.first().copied().unwrap_or(usize::MAX))
    });
    Ok(sccs)
}

/// Iterative Tarjan over an adjacency list; returns the components.
fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps = Vec::new();

    // Explicit DFS frames: (node, next child position).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child == 0 {
                index[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&mut (parent, _)) = frames.last_mut() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// A simple cycle with its delay sum and token count.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// Transition names along the cycle, in traversal order.
    pub transitions: Vec<String>,
    pub delay_ms: f64,
    pub tokens: u64,
}

/// Enumerates the elementary cycles of `adj` restricted to `active` nodes,
/// giving up (returning `None`) once more than `cap` cycles are found.
///
/// Johnson-style search: each cycle is discovered exactly once, rooted at
/// its smallest node id.
fn simple_cycles(adj: &[Vec<usize>], active: &[bool], cap: usize) -> Option<Vec<Vec<usize>>> {
    let n = adj.len();
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if !active[start] {
            continue;
        }
        let neigh = |v: usize| -> Vec<usize> {
            adj[v].iter().copied().filter(|&w| w >= start && active[w]).collect()
        };
        let mut blocked = vec![false; n];
        let mut blist: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut closed = vec![false; n];
        let mut path = vec![start];
        blocked[start] = true;
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(start, neigh(start))];
        while let Some((v, frontier)) = stack.last_mut() {
            let v = *v;
            if let Some(w) = frontier.pop() {
                if w == start {
                    if cycles.len() == cap {
                        return None;
                    }
                    cycles.push(path.clone());
                    for &u in &path {
                        closed[u] = true;
                    }
                } else if !blocked[w] {
                    path.push(w);
                    blocked[w] = true;
                    closed[w] = false;
                    stack.push((w, neigh(w)));
                }
            } else {
                if closed[v] {
                    unblock(v, &mut blocked, &mut blist);
                } else {
                    for w in neigh(v) {
                        if !blist[w].contains(&v) {
                            blist[w].push(v);
                        }
                    }
                }
                stack.pop();
                path.pop();
            }
        }
    }
    Some(cycles)
}

fn unblock(v: usize, blocked: &mut [bool], blist: &mut [Vec<usize>]) {
    let mut todo = vec![v];
    while let Some(u) = todo.pop() {
        blocked[u] = false;
        todo.append(&mut blist[u]);
    }
}

struct SubgraphView {
    n: usize,
    adj: Vec<Vec<usize>>,
    active: Vec<bool>,
}

fn whole_graph_view(g: &TimedMarkedGraph, r: &Resolved) -> SubgraphView {
    let n = g.transitions.len();
    SubgraphView { n, adj: adjacency(g, r), active: vec![true; n + g.places.len()] }
}

/// Max over enumerated cycles of D_k/N_k; `None` if the cap was exceeded.
fn mct_by_enumeration(
    g: &TimedMarkedGraph,
    view: &SubgraphView,
    tau: &[f64],
    cap: usize,
) -> Option<Result<(f64, Cycle), TmgError>> {
    let node_cycles = simple_cycles(&view.adj, &view.active, cap)?;
    if node_cycles.is_empty() {
        return Some(Err(TmgError::Acyclic));
    }
    let mut best: Option<(f64, Cycle)> = None;
    for nodes in &node_cycles {
        let mut delay = 0.0;
        let mut tokens = 0u64;
        let mut names = Vec::new();
        for &v in nodes {
            if v < view.n {
                delay += tau[v];
                names.push(g.transitions[v].name.clone());
            } else {
                tokens += g.initial_marking[v - view.n];
            }
        }
        if tokens == 0 {
            return Some(Err(TmgError::Deadlock { transitions: names }));
        }
        let ratio = delay / tokens as f64;
        if best.as_ref().map_or(true, |(b, _)| ratio > *b) {
            best = Some((ratio, Cycle { transitions: names, delay_ms: delay, tokens }));
        }
    }
    Some(best.map(Ok).unwrap())
}

/// Minimum cycle time by feasibility bisection over the difference
/// constraints `σ_out(p) − σ_in(p) ≥ τ_in(p) − M0(p)·c`: a candidate cycle
/// time `c` is feasible iff no positive-weight cycle exists.
fn mct_by_bisection(
    g: &TimedMarkedGraph,
    r: &Resolved,
    active: &[bool],
    tau: &[f64],
) -> Result<f64, TmgError> {
    let n = g.transitions.len();
    // Edges of the constraint graph, between transitions of the subgraph.
    let mut edges: Vec<(usize, usize, f64, u64)> = Vec::new(); // (from, to, tau_in, tokens)
    let mut trans_active = vec![false; n];
    for p in 0..g.places.len() {
        if active[n + p] && active[r.place_in[p]] && active[r.place_out[p]] {
            edges.push((r.place_in[p], r.place_out[p], tau[r.place_in[p]], g.initial_marking[p]));
            trans_active[r.place_in[p]] = true;
            trans_active[r.place_out[p]] = true;
        }
    }
    let feasible = |c: f64| -> bool {
        // Bellman-Ford longest-path relaxation; a relaxation still possible
        // after n rounds reveals a positive cycle.
        let mut dist = vec![0.0f64; n];
        let rounds = trans_active.iter().filter(|&&a| a).count();
        for _ in 0..rounds {
            let mut changed = false;
            for &(u, v, t, m) in &edges {
                let w = t - m as f64 * c;
                if dist[u] + w > dist[v] + 1e-15 {
                    dist[v] = dist[u] + w;
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
        let mut still = false;
        for &(u, v, t, m) in &edges {
            let w = t - m as f64 * c;
            if dist[u] + w > dist[v] + 1e-15 {
                still = true;
            }
        }
        !still
    };
    let mut hi = tau.iter().sum::<f64>() + 1.0;
    if !feasible(hi) {
        // Only a token-free cycle stays infeasible above the delay sum.
        return Err(TmgError::Deadlock { transitions: Vec::new() });
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        if (hi - lo) <= 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Minimum cycle time of a strongly-connected graph, with the critical
/// cycle when it was found by enumeration (the fallback cannot name one).
pub fn min_cycle_time_detailed(
    g: &TimedMarkedGraph,
    tau: &DelayVector,
    cap: usize,
) -> Result<(f64, Option<Cycle>), TmgError> {
    let r = resolve(g)?;
    check_delays(g, tau)?;
    let sccs = scc_decompose(g)?;
    if sccs.len() != 1 {
        return Err(TmgError::NotStronglyConnected);
    }
    if !sccs[0].cyclic {
        return Err(TmgError::Acyclic);
    }
    let view = whole_graph_view(g, &r);
    match mct_by_enumeration(g, &view, &tau.tau_ms, cap) {
        Some(res) => res.map(|(v, c)| (v, Some(c))),
        None => mct_by_bisection(g, &r, &view.active, &tau.tau_ms).map(|v| (v, None)),
    }
}

/// Minimum cycle time `max { D_k/N_k }` of a strongly-connected graph.
pub fn min_cycle_time(g: &TimedMarkedGraph, tau: &DelayVector) -> Result<f64, TmgError> {
    min_cycle_time_detailed(g, tau, DEFAULT_CYCLE_CAP).map(|(v, _)| v)
}

/// Maximum sustainable throughput of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    /// 1/ms; `f64::INFINITY` when nothing constrains the rate.
    pub theta_per_ms: f64,
    /// Set when the graph has no cyclic component, so the reported value is
    /// a sentinel rather than a cycle-time reciprocal.
    pub unconstrained: bool,
}

/// Reciprocal of the minimum cycle time; for a graph that is not strongly
/// connected, the minimum throughput over its cyclic components.
pub fn effective_throughput(
    g: &TimedMarkedGraph,
    tau: &DelayVector,
) -> Result<Throughput, TmgError> {
    effective_throughput_capped(g, tau, DEFAULT_CYCLE_CAP)
}

pub fn effective_throughput_capped(
    g: &TimedMarkedGraph,
    tau: &DelayVector,
    cap: usize,
) -> Result<Throughput, TmgError> {
    let r = resolve(g)?;
    check_delays(g, tau)?;
    let n = g.transitions.len();
    let sccs = scc_decompose(g)?;
    let mut worst: Option<f64> = None;
    for scc in sccs.iter().filter(|c| c.cyclic) {
        let mut active = vec![false; n + g.places.len()];
        for &t in &scc.transitions {
            active[t] = true;
        }
        for &p in &scc.places {
            active[n + p] = true;
        }
        let view = SubgraphView { n, adj: adjacency(g, &r), active };
        let mct = match mct_by_enumeration(g, &view, &tau.tau_ms, cap) {
            Some(res) => res?.0,
            None => mct_by_bisection(g, &r, &view.active, &tau.tau_ms)?,
        };
        worst = Some(worst.map_or(mct, |w: f64| w.max(mct)));
    }
    match worst {
        Some(mct) => Ok(Throughput { theta_per_ms: 1.0 / mct, unconstrained: false }),
        None => Ok(Throughput { theta_per_ms: f64::INFINITY, unconstrained: true }),
    }
}

/// Pre-extracted cycle structure for evaluating the throughput of one
/// graph under many different delay vectors (each evaluation is then a max
/// of cycle delay sums instead of a fresh enumeration).
#[derive(Debug, Clone)]
pub struct CycleBasis {
    /// (transition indices, token count) per simple cycle.
    cycles: Vec<(Vec<usize>, u64)>,
}

/// Enumerates every simple cycle of the graph once. Token-free cycles are
/// rejected as deadlocks; exceeding `cap` reports an error rather than
/// falling back, since callers of the basis need the explicit list.
pub fn cycle_basis(g: &TimedMarkedGraph, cap: usize) -> Result<CycleBasis, TmgError> {
    let r = resolve(g)?;
    let n = g.transitions.len();
    let adj = adjacency(g, &r);
    let active = vec![true; n + g.places.len()];
    let node_cycles =
        simple_cycles(&adj, &active, cap).ok_or(TmgError::CycleCapExceeded { cap })?;
    let mut cycles = Vec::with_capacity(node_cycles.len());
    for nodes in node_cycles {
        let mut transitions = Vec::new();
        let mut tokens = 0u64;
        for v in nodes {
            if v < n {
                transitions.push(v);
            } else {
                tokens += g.initial_marking[v - n];
            }
        }
        if tokens == 0 {
            let names = transitions.iter().map(|&t| g.transitions[t].name.clone()).collect();
            return Err(TmgError::Deadlock { transitions: names });
        }
        cycles.push((transitions, tokens));
    }
    Ok(CycleBasis { cycles })
}

impl CycleBasis {
    /// Throughput under the given per-transition delays.
    pub fn effective_throughput(&self, tau_ms: &[f64]) -> Throughput {
        let mut worst: Option<f64> = None;
        for (transitions, tokens) in &self.cycles {
            let delay: f64 = transitions.iter().map(|&t| tau_ms[t]).sum();
            let ratio = delay / *tokens as f64;
            worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
        }
        match worst {
            Some(mct) => Throughput { theta_per_ms: 1.0 / mct, unconstrained: false },
            None => Throughput { theta_per_ms: f64::INFINITY, unconstrained: true },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn fixed(name: &str) -> TransitionDecl {
        TransitionDecl { name: name.to_string(), binding: Binding::FixedMs(1.0) }
    }

    /// t1 -> p1 -> t2 -> p2 -> t1 with the given marking.
    fn ring(m0: [u64; 2]) -> TimedMarkedGraph {
        TimedMarkedGraph {
            places: vec!["p1".into(), "p2".into()],
            transitions: vec![fixed("t1"), fixed("t2")],
            arcs: vec![
                ("t1".into(), "p1".into()),
                ("p1".into(), "t2".into()),
                ("t2".into(), "p2".into()),
                ("p2".into(), "t1".into()),
            ],
            initial_marking: m0.to_vec(),
        }
    }

    #[test]
    fn validate_accepts_ring() {
        assert!(validate(&ring([0, 1])).is_empty());
    }

    #[test]
    fn validate_flags_place_with_two_consumers() {
        let mut g = ring([0, 1]);
        g.arcs.push(("p1".into(), "t1".into()));
        let vs = validate(&g);
        assert_eq!(vs.len(), 1);
        assert!(matches!(&vs[0], Violation::PlaceOutputCount { place, count: 2 } if place == "p1"));
    }

    #[test]
    fn validate_flags_unknown_endpoint() {
        let mut g = ring([0, 1]);
        g.arcs.push(("p2".into(), "nope".into()));
        let vs = validate(&g);
        assert!(vs
            .iter()
            .any(|v| matches!(v, Violation::UnknownEndpoint { endpoint, .. } if endpoint == "nope")));
    }

    #[test]
    fn validate_flags_marking_length() {
        let mut g = ring([0, 1]);
        g.initial_marking.pop();
        assert!(validate(&g).iter().any(|v| matches!(v, Violation::MarkingLength { .. })));
    }

    #[test]
    fn incidence_ring() {
        let a = incidence_matrix(&ring([0, 1])).unwrap();
        assert_eq!(a, vec![vec![-1, 1], vec![1, -1]]);
    }

    #[test]
    fn incidence_self_loop_row_is_zero() {
        let g = TimedMarkedGraph {
            places: vec!["p".into()],
            transitions: vec![fixed("t1")],
            arcs: vec![("t1".into(), "p".into()), ("p".into(), "t1".into())],
            initial_marking: vec![1],
        };
        assert_eq!(incidence_matrix(&g).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn incidence_rows_sum_to_zero_on_chain_loop() {
        // t1 -> p1 -> t2 -> p2 -> t3 -> p3 -> t1
        let g = TimedMarkedGraph {
            places: vec!["p1".into(), "p2".into(), "p3".into()],
            transitions: vec![fixed("t1"), fixed("t2"), fixed("t3")],
            arcs: vec![
                ("t1".into(), "p1".into()),
                ("p1".into(), "t2".into()),
                ("t2".into(), "p2".into()),
                ("p2".into(), "t3".into()),
                ("t3".into(), "p3".into()),
                ("p3".into(), "t1".into()),
            ],
            initial_marking: vec![1, 0, 0],
        };
        for row in incidence_matrix(&g).unwrap() {
            assert_eq!(row.iter().sum::<i64>(), 0);
        }
    }

    #[test]
    fn scc_ring_is_single_component() {
        let sccs = scc_decompose(&ring([0, 1])).unwrap();
        assert_eq!(sccs.len(), 1);
        assert!(sccs[0].cyclic);
        assert_eq!(sccs[0].transitions, vec![0, 1]);
    }

    #[test]
    fn scc_pipeline_is_singletons() {
        let g = TimedMarkedGraph {
            places: vec!["p1".into()],
            transitions: vec![fixed("t1"), fixed("t2")],
            arcs: vec![("t1".into(), "p1".into()), ("p1".into(), "t2".into())],
            initial_marking: vec![0],
        };
        let sccs = scc_decompose(&g).unwrap();
        assert_eq!(sccs.len(), 3);
        assert!(sccs.iter().all(|c| !c.cyclic));
    }

    /// Reachability oracle: u, v in the same SCC iff reach(u, v) && reach(v, u).
    fn scc_oracle(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let n = adj.len();
        let mut reach = vec![vec![false; n]; n];
        for s in 0..n {
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !reach[s][w] {
                        reach[s][w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for v in 0..n {
            if comp[v] != usize::MAX {
                continue;
            }
            comp[v] = next;
            for w in v + 1..n {
                if reach[v][w] && reach[w][v] {
                    comp[w] = next;
                }
            }
            next += 1;
        }
        let mut out = vec![Vec::new(); next];
        for v in 0..n {
            out[comp[v]].push(v);
        }
        out
    }

    #[test]
    fn scc_matches_reachability_oracle_on_branching_graph() {
        // Two parallel branches t2/t3 between t1 and t4, with a back edge.
        let g = TimedMarkedGraph {
            places: (1..=5).map(|i| alloc::format!("p{i}")).collect(),
            transitions: vec![fixed("t1"), fixed("t2"), fixed("t3"), fixed("t4")],
            arcs: vec![
                ("t1".into(), "p1".into()),
                ("p1".into(), "t2".into()),
                ("t1".into(), "p2".into()),
                ("p2".into(), "t3".into()),
                ("t2".into(), "p3".into()),
                ("p3".into(), "t4".into()),
                ("t3".into(), "p4".into()),
                ("p4".into(), "t4".into()),
                ("t4".into(), "p5".into()),
                ("p5".into(), "t1".into()),
            ],
            initial_marking: vec![0, 0, 0, 0, 1],
        };
        let r = resolve(&g).unwrap();
        let adj = adjacency(&g, &r);
        let mut got: Vec<Vec<usize>> = scc_decompose(&g)
            .unwrap()
            .into_iter()
            .map(|c| {
                let mut nodes = c.transitions.clone();
                nodes.extend(c.places.iter().map(|p| p + g.transitions.len()));
                nodes.sort_unstable();
                nodes
            })
            .collect();
        let mut want = scc_oracle(&adj);
        for c in want.iter_mut() {
            c.sort_unstable();
        }
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn mct_ring_single_token() {
        let v = min_cycle_time(&ring([0, 1]), &DelayVector::new(vec![3.0, 2.0])).unwrap();
        assert_eq!(v, 5.0);
    }

    #[test]
    fn mct_ring_two_tokens() {
        let v = min_cycle_time(&ring([1, 1]), &DelayVector::new(vec![3.0, 2.0])).unwrap();
        assert_eq!(v, 2.5);
    }

    #[test]
    fn mct_self_loop() {
        let g = TimedMarkedGraph {
            places: vec!["p".into()],
            transitions: vec![fixed("t1")],
            arcs: vec![("t1".into(), "p".into()), ("p".into(), "t1".into())],
            initial_marking: vec![1],
        };
        assert_eq!(min_cycle_time(&g, &DelayVector::new(vec![4.0])).unwrap(), 4.0);
    }

    #[test]
    fn mct_token_free_cycle_is_deadlock() {
        let err = min_cycle_time(&ring([0, 0]), &DelayVector::new(vec![3.0, 2.0])).unwrap_err();
        assert!(matches!(err, TmgError::Deadlock { .. }));
    }

    #[test]
    fn mct_requires_strong_connectivity() {
        let g = TimedMarkedGraph {
            places: vec!["p1".into()],
            transitions: vec![fixed("t1"), fixed("t2")],
            arcs: vec![("t1".into(), "p1".into()), ("p1".into(), "t2".into())],
            initial_marking: vec![0],
        };
        let err = min_cycle_time(&g, &DelayVector::new(vec![1.0, 1.0])).unwrap_err();
        assert_eq!(err, TmgError::NotStronglyConnected);
    }

    #[test]
    fn mct_bisection_fallback_agrees_with_enumeration() {
        let g = ring([1, 1]);
        let tau = DelayVector::new(vec![3.0, 2.0]);
        // cap 0 forces the fallback
        let (by_bisect, cycle) = min_cycle_time_detailed(&g, &tau, 0).unwrap();
        assert!(cycle.is_none());
        assert!((by_bisect - 2.5).abs() < 1e-9);
    }

    #[test]
    fn throughput_ring() {
        let t = effective_throughput(&ring([0, 1]), &DelayVector::new(vec![3.0, 2.0])).unwrap();
        assert_eq!(t.theta_per_ms, 0.2);
        assert!(!t.unconstrained);
    }

    #[test]
    fn throughput_two_independent_rings_takes_min() {
        let g = TimedMarkedGraph {
            places: vec!["p1".into(), "p2".into()],
            transitions: vec![fixed("a"), fixed("b")],
            arcs: vec![
                ("a".into(), "p1".into()),
                ("p1".into(), "a".into()),
                ("b".into(), "p2".into()),
                ("p2".into(), "b".into()),
            ],
            initial_marking: vec![1, 1],
        };
        let t = effective_throughput(&g, &DelayVector::new(vec![5.0, 8.0])).unwrap();
        assert_eq!(t.theta_per_ms, 0.125);
    }

    #[test]
    fn throughput_acyclic_chain_is_unconstrained() {
        let g = TimedMarkedGraph {
            places: vec!["p1".into()],
            transitions: vec![fixed("t1"), fixed("t2")],
            arcs: vec![("t1".into(), "p1".into()), ("p1".into(), "t2".into())],
            initial_marking: vec![0],
        };
        let t = effective_throughput(&g, &DelayVector::new(vec![1.0, 2.0])).unwrap();
        assert!(t.theta_per_ms.is_infinite());
        assert!(t.unconstrained);
    }

    #[test]
    fn cycle_basis_matches_effective_throughput() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let g = ring([1, rng.gen_range(0..3)]);
            let tau = vec![rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)];
            let basis = cycle_basis(&g, DEFAULT_CYCLE_CAP).unwrap();
            let fast = basis.effective_throughput(&tau);
            let slow = effective_throughput(&g, &DelayVector::new(tau)).unwrap();
            assert!((fast.theta_per_ms - slow.theta_per_ms).abs() < 1e-12 * slow.theta_per_ms);
        }
    }

    #[test]
    fn cycle_basis_rejects_token_free_cycles_and_caps() {
        assert!(matches!(
            cycle_basis(&ring([0, 0]), DEFAULT_CYCLE_CAP),
            Err(TmgError::Deadlock { .. })
        ));
        assert!(matches!(
            cycle_basis(&ring([0, 1]), 0),
            Err(TmgError::CycleCapExceeded { cap: 0 })
        ));
    }

    #[test]
    fn mct_is_monotone_in_delays_and_scales_linearly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = ring([1, rng.gen_range(0..3)]);
            let a = rng.gen_range(0.5..5.0);
            let b = rng.gen_range(0.5..5.0);
            let base = min_cycle_time(&g, &DelayVector::new(vec![a, b])).unwrap();
            let bumped = min_cycle_time(&g, &DelayVector::new(vec![a + 1.0, b])).unwrap();
            assert!(bumped >= base);
            let scaled = min_cycle_time(&g, &DelayVector::new(vec![3.0 * a, 3.0 * b])).unwrap();
            assert!((scaled - 3.0 * base).abs() < 1e-9 * scaled);
        }
    }
}
