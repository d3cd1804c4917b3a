//! The four batch commands: characterize, explore, exhaustive, report.
//!
//! Each command reads the run configuration, works through the library
//! crate, and leaves canonical JSON/CSV artifacts in the output directory.
//! `characterize` must run first; `explore` extends its invocation ledger
//! so that corner reuse during mapping stays free.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cosmos_core::backend::{InvocationLedger, SynthesisBackend};
use cosmos_core::characterize::{characterize_component, Characterization};
use cosmos_core::mapper::{map_solution, SystemDesignPoint};
use cosmos_core::model::{pareto_indices, ComponentDescriptor, DesignPoint, KnobSetting};
use cosmos_core::planner::{sweep, theta_bounds, PlannedPoint, PlanningInputs};
use cosmos_core::tmg::{cycle_basis, Binding, DEFAULT_CYCLE_CAP};

use crate::config::ExplorationConfig;
use crate::format::{fmt_f64, read_text, write_json, write_text, CsvBuilder};
use crate::CliError;

pub const REGIONS_FILE: &str = "regions.json";
pub const LEDGER_FILE: &str = "ledger.json";
pub const PLANNED_JSON: &str = "planned.json";
pub const PLANNED_CSV: &str = "planned.csv";
pub const PARETO_JSON: &str = "pareto.json";
pub const PARETO_CSV: &str = "pareto.csv";
pub const EXHAUSTIVE_JSON: &str = "exhaustive.json";
pub const EXHAUSTIVE_CSV: &str = "exhaustive_pareto.csv";

/// Everything a command needs at run time.
pub struct RunContext {
    pub config: ExplorationConfig,
    pub backend: Box<dyn SynthesisBackend + Send + Sync>,
    pub seed: u64,
    pub jobs: usize,
}

/// `regions.json`: the characterizations plus the knob-sweep clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionsFile {
    pub clock_ns: f64,
    pub seed: u64,
    pub components: Vec<Characterization>,
}

/// Runs the characterization for every synthesizable component and writes
/// `regions.json` and `ledger.json`.
pub fn cmd_characterize(ctx: &RunContext, out_dir: &Path) -> Result<RegionsFile, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let cfg = ctx.config.characterization();
    let components: Vec<&ComponentDescriptor> = ctx.config.synthesizable().collect();

    let mut results: Vec<(Characterization, InvocationLedger)> = Vec::new();
    if ctx.jobs > 1 && components.len() > 1 {
        // Components are independent; give each worker its own ledger and
        // merge in declaration order so output is schedule-independent.
        let chunks: Vec<Vec<&ComponentDescriptor>> = {
            let mut buckets: Vec<Vec<&ComponentDescriptor>> = vec![Vec::new(); ctx.jobs];
            for (i, c) in components.iter().enumerate() {
                buckets[i % ctx.jobs].push(c);
            }
            buckets
        };
        let outcome: Vec<Vec<(usize, Characterization, InvocationLedger)>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunks
                    .iter()
                    .enumerate()
                    .map(|(b, bucket)| {
                        let cfg = &cfg;
                        let backend = &*ctx.backend;
                        scope.spawn(move || {
                            bucket
                                .iter()
                                .map(|comp| {
                                    let mut ledger = InvocationLedger::new();
                                    let ch = characterize_component(comp, cfg, backend, &mut ledger)
                                        .map_err(|e| (comp.name.clone(), e));
                                    (b, ch, ledger)
                                })
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .expect("characterization worker panicked")
                            .into_iter()
                            .map(|(b, ch, ledger)| ch.map(|c| (b, c, ledger)))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .map_err(|(name, e)| CliError::Config(format!("component '{name}': {e}")))?;
        let mut flat: BTreeMap<String, (Characterization, InvocationLedger)> = BTreeMap::new();
        for bucket in outcome {
            for (_, ch, ledger) in bucket {
                flat.insert(ch.component.clone(), (ch, ledger));
            }
        }
        for comp in &components {
            let entry = flat.remove(&comp.name).expect("every component characterized");
            results.push(entry);
        }
    } else {
        for comp in &components {
            let mut ledger = InvocationLedger::new();
            let ch = characterize_component(comp, &cfg, &*ctx.backend, &mut ledger)
                .map_err(|e| CliError::Config(format!("component '{}': {e}", comp.name)))?;
            results.push((ch, ledger));
        }
    }

    let mut ledger = InvocationLedger::new();
    let mut chars = Vec::new();
    for (ch, part) in results {
        for skipped in &ch.skipped {
            eprintln!(
                "warning: component '{}' ports={}: {}",
                ch.component, skipped.ports, skipped.reason
            );
        }
        ledger.merge(part);
        chars.push(ch);
    }
    let regions = RegionsFile { clock_ns: ctx.config.clock_ns, seed: ctx.seed, components: chars };
    write_json(&out_dir.join(REGIONS_FILE), &regions)?;
    write_json(&out_dir.join(LEDGER_FILE), &ledger)?;
    Ok(regions)
}

fn load_regions(out_dir: &Path) -> Result<RegionsFile, CliError> {
    let path = out_dir.join(REGIONS_FILE);
    if !path.exists() {
        return Err(CliError::MissingInputs(vec![REGIONS_FILE.into()]));
    }
    serde_json::from_str(&read_text(&path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_ledger(out_dir: &Path) -> Result<InvocationLedger, CliError> {
    let path = out_dir.join(LEDGER_FILE);
    if !path.exists() {
        return Err(CliError::MissingInputs(vec![LEDGER_FILE.into()]));
    }
    serde_json::from_str(&read_text(&path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `planned.json`: the sweep with its θ range and the α gaps between
/// consecutive points (the sweep controls θ spacing; α spacing is reported,
/// not enforced).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannedFile {
    pub delta: f64,
    pub theta_min_per_ms: f64,
    pub theta_max_per_ms: f64,
    pub unconstrained: bool,
    pub points: Vec<PlannedPoint>,
    pub alpha_gaps: Vec<AlphaGap>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaGap {
    pub from_theta_per_ms: f64,
    pub to_theta_per_ms: f64,
    pub ratio_minus_one: f64,
    pub exceeds_delta: bool,
}

/// `pareto.json`: every mapped point plus the subset that is still
/// Pareto-optimal after mapping (area inflation can demote neighbors).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParetoFile {
    pub points: Vec<SystemDesignPoint>,
    pub pareto_indices: Vec<usize>,
}

/// Plans the throughput sweep and maps every planned point; writes
/// `planned.json/csv`, `pareto.json/csv` and the updated ledger.
pub fn cmd_explore(
    ctx: &RunContext,
    out_dir: &Path,
    delta_override: Option<f64>,
) -> Result<(PlannedFile, ParetoFile), CliError> {
    let regions = load_regions(out_dir)?;
    let mut ledger = load_ledger(out_dir)?;
    let delta = delta_override.unwrap_or(ctx.config.delta);
    if !(delta > 0.0) {
        return Err(CliError::Config("delta must be positive".into()));
    }
    let chars: BTreeMap<String, Characterization> =
        regions.components.iter().map(|c| (c.component.clone(), c.clone())).collect();
    let fixed = ctx.config.fixed_components();
    let graph = &ctx.config.graph;
    let inputs = PlanningInputs::resolve(graph, &chars, &fixed)?;

    let (theta_min, theta_max) = theta_bounds(graph, &inputs)?;
    let points = sweep(graph, &inputs, delta)?;
    let mut alpha_gaps = Vec::new();
    for w in points.windows(2) {
        let ratio_minus_one = if w[0].planned_cost_mm2 > 0.0 {
            w[1].planned_cost_mm2 / w[0].planned_cost_mm2 - 1.0
        } else {
            0.0
        };
        alpha_gaps.push(AlphaGap {
            from_theta_per_ms: w[0].theta_per_ms,
            to_theta_per_ms: w[1].theta_per_ms,
            ratio_minus_one,
            exceeds_delta: ratio_minus_one >= delta,
        });
    }
    let planned = PlannedFile {
        delta,
        theta_min_per_ms: theta_min.theta_per_ms,
        theta_max_per_ms: theta_max.theta_per_ms,
        unconstrained: theta_min.unconstrained,
        points,
        alpha_gaps,
    };

    let comp_map = ctx.config.component_map();
    let mut mapped = Vec::new();
    for point in &planned.points {
        mapped.push(map_solution(
            point,
            graph,
            &comp_map,
            &chars,
            ctx.config.clock_ns,
            &*ctx.backend,
            &mut ledger,
        )?);
    }
    let cloud: Vec<DesignPoint> = mapped
        .iter()
        .map(|m| DesignPoint::throughput(m.theta_realized_per_ms, m.realized_area_mm2))
        .collect();
    let pareto_idx = if cloud.is_empty() { Vec::new() } else { pareto_indices(&cloud)? };
    let pareto = ParetoFile { points: mapped, pareto_indices: pareto_idx };

    write_json(&out_dir.join(PLANNED_JSON), &planned)?;
    write_text(&out_dir.join(PLANNED_CSV), &planned_csv(&planned, graph))?;
    write_json(&out_dir.join(PARETO_JSON), &pareto)?;
    write_text(&out_dir.join(PARETO_CSV), &pareto_csv(&pareto))?;
    write_json(&out_dir.join(LEDGER_FILE), &ledger)?;
    Ok((planned, pareto))
}

fn planned_csv(planned: &PlannedFile, graph: &cosmos_core::tmg::TimedMarkedGraph) -> String {
    let planned_transitions: Vec<&str> = graph
        .transitions
        .iter()
        .filter(|t| planned.points.first().map_or(false, |p| p.lambda_ms.contains_key(&t.name)))
        .map(|t| t.name.as_str())
        .collect();
    let mut header = vec!["theta_per_ms".to_string(), "planned_area_mm2".to_string()];
    header.extend(planned_transitions.iter().map(|t| format!("lambda_{t}_ms")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvBuilder::new(&header_refs);
    for p in &planned.points {
        let mut row = vec![fmt_f64(p.theta_per_ms), fmt_f64(p.planned_cost_mm2)];
        row.extend(planned_transitions.iter().map(|t| fmt_f64(p.lambda_ms[*t])));
        csv.row(&row);
    }
    csv.finish()
}

fn pareto_csv(pareto: &ParetoFile) -> String {
    let mut csv = CsvBuilder::new(&[
        "theta_planned_per_ms",
        "theta_realized_per_ms",
        "planned_area_mm2",
        "realized_area_mm2",
        "sigma",
        "shortfall",
        "pareto_optimal",
    ]);
    for (i, p) in pareto.points.iter().enumerate() {
        csv.row(&[
            fmt_f64(p.theta_planned_per_ms),
            fmt_f64(p.theta_realized_per_ms),
            fmt_f64(p.planned_area_mm2),
            fmt_f64(p.realized_area_mm2),
            fmt_f64(p.sigma),
            p.shortfall.to_string(),
            pareto.pareto_indices.contains(&i).to_string(),
        ]);
    }
    csv.finish()
}

/// `exhaustive.json`: grid sizes, per-component Pareto counts, and either
/// the composed system Pareto set or the refusal record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustiveFile {
    pub max_combinations: u64,
    /// Product of per-transition Pareto point counts (exact, as a string:
    /// it overflows 64-bit integers at realistic scale).
    pub combination_count: String,
    pub refused: bool,
    pub per_component: Vec<ExhaustiveComponent>,
    pub total_grid_invocations: u64,
    pub system_pareto: Option<Vec<ExhaustivePoint>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustiveComponent {
    pub component: String,
    /// |ports_options| × max_unrolls synthesis runs of the naive flow.
    pub grid_invocations: u64,
    /// Grid points that failed to synthesize (replay tables may be sparse).
    pub skipped_points: u64,
    pub pareto_points: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustivePoint {
    pub theta_per_ms: f64,
    pub area_mm2: f64,
    /// (transition, unrolls, ports) choices behind the point.
    pub choices: Vec<(String, u32, u32)>,
}

/// The naive baseline: synthesize the full knob grid per component,
/// Pareto-filter per component, then compose every combination at the
/// system level — refusing when the combination count exceeds the guard.
pub fn cmd_exhaustive(ctx: &RunContext, out_dir: &Path) -> Result<ExhaustiveFile, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let cfg = ctx.config.characterization();
    let clock = ctx.config.clock_ns;

    struct GridPareto {
        points: Vec<(f64, f64, u32, u32)>, // (lambda, area incl plm, unrolls, ports)
    }
    let mut per_component = Vec::new();
    let mut grids: BTreeMap<String, GridPareto> = BTreeMap::new();
    let mut total_grid: u64 = 0;
    for comp in ctx.config.synthesizable() {
        let params = comp.synth.as_ref().unwrap();
        let max_unrolls = cfg.max_unrolls.map_or(params.max_unrolls, |m| m.min(params.max_unrolls));
        let ports: Vec<u32> = params
            .ports_options
            .iter()
            .copied()
            .filter(|&p| cfg.max_ports.map_or(true, |mp| p <= mp))
            .collect();
        let grid_invocations = ports.len() as u64 * max_unrolls as u64;
        total_grid += grid_invocations;
        let mut cloud = Vec::new();
        let mut skipped = 0u64;
        for &p in &ports {
            let plm = match ctx.backend.plm_generate(comp, p) {
                Ok(a) => a,
                Err(_) => {
                    skipped += max_unrolls as u64;
                    continue;
                }
            };
            for u in 1..=max_unrolls {
                match ctx.backend.hls_synthesize(comp, KnobSetting::new(u, p, clock), None) {
                    Ok(r) => cloud.push((r.effective_latency_ms, r.logic_area_mm2 + plm, u, p)),
                    Err(_) => skipped += 1,
                }
            }
        }
        let design: Vec<DesignPoint> =
            cloud.iter().map(|&(l, a, _, _)| DesignPoint::latency(l, a)).collect();
        let keep = if design.is_empty() { Vec::new() } else { pareto_indices(&design)? };
        let points: Vec<_> = keep.iter().map(|&i| cloud[i]).collect();
        per_component.push(ExhaustiveComponent {
            component: comp.name.clone(),
            grid_invocations,
            skipped_points: skipped,
            pareto_points: points.len() as u64,
        });
        grids.insert(comp.name.clone(), GridPareto { points });
    }

    // Combination count over synthesizable transitions (a component bound
    // to several transitions is chosen independently per instance).
    let graph = &ctx.config.graph;
    let fixed = ctx.config.fixed_components();
    let mut choice_sets: Vec<(usize, &GridPareto)> = Vec::new();
    let mut fixed_tau: Vec<Option<f64>> = Vec::new();
    for (i, t) in graph.transitions.iter().enumerate() {
        match &t.binding {
            Binding::FixedMs(d) => fixed_tau.push(Some(*d)),
            Binding::Component(name) => {
                if let Some(grid) = grids.get(name) {
                    choice_sets.push((i, grid));
                    fixed_tau.push(None);
                } else if let Some(d) = fixed.get(name) {
                    fixed_tau.push(Some(*d));
                } else {
                    return Err(CliError::Config(format!(
                        "transition '{}' binds unknown component '{name}'",
                        t.name
                    )));
                }
            }
        }
    }
    let mut combination_count: u128 = 1;
    for (_, grid) in &choice_sets {
        combination_count = combination_count.saturating_mul(grid.points.len().max(1) as u128);
    }

    if combination_count > ctx.config.max_combinations as u128 {
        let file = ExhaustiveFile {
            max_combinations: ctx.config.max_combinations,
            combination_count: combination_count.to_string(),
            refused: true,
            per_component,
            total_grid_invocations: total_grid,
            system_pareto: None,
        };
        write_json(&out_dir.join(EXHAUSTIVE_JSON), &file)?;
        return Err(CliError::Refusal {
            combinations: combination_count,
            max: ctx.config.max_combinations,
        });
    }

    // Compose every combination; the cycle structure is extracted once.
    let basis = cycle_basis(graph, DEFAULT_CYCLE_CAP)?;
    let mut tau: Vec<f64> = fixed_tau.iter().map(|d| d.unwrap_or(0.0)).collect();
    let mut counter = vec![0usize; choice_sets.len()];
    let mut cloud: Vec<(f64, f64)> = Vec::new();
    let mut choices_per_point: Vec<Vec<(String, u32, u32)>> = Vec::new();
    loop {
        let mut area = 0.0;
        let mut choices = Vec::with_capacity(choice_sets.len());
        for (k, &(t, grid)) in choice_sets.iter().enumerate() {
            let (lambda, a, u, p) = grid.points[counter[k]];
            tau[t] = lambda;
            area += a;
            choices.push((graph.transitions[t].name.clone(), u, p));
        }
        let theta = basis.effective_throughput(&tau);
        cloud.push((theta.theta_per_ms, area));
        choices_per_point.push(choices);

        let mut k = 0;
        loop {
            if k == counter.len() {
                break;
            }
            counter[k] += 1;
            if counter[k] < choice_sets[k].1.points.len() {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
        if k == counter.len() {
            break;
        }
    }
    let design: Vec<DesignPoint> =
        cloud.iter().map(|&(t, a)| DesignPoint::throughput(t, a)).collect();
    let keep = pareto_indices(&design)?;
    let system_pareto: Vec<ExhaustivePoint> = keep
        .iter()
        .map(|&i| ExhaustivePoint {
            theta_per_ms: cloud[i].0,
            area_mm2: cloud[i].1,
            choices: choices_per_point[i].clone(),
        })
        .collect();

    let mut csv = CsvBuilder::new(&["theta_per_ms", "area_mm2"]);
    for p in &system_pareto {
        csv.row(&[fmt_f64(p.theta_per_ms), fmt_f64(p.area_mm2)]);
    }
    write_text(&out_dir.join(EXHAUSTIVE_CSV), &csv.finish())?;

    let file = ExhaustiveFile {
        max_combinations: ctx.config.max_combinations,
        combination_count: combination_count.to_string(),
        refused: false,
        per_component,
        total_grid_invocations: total_grid,
        system_pareto: Some(system_pareto),
    };
    write_json(&out_dir.join(EXHAUSTIVE_JSON), &file)?;
    Ok(file)
}

pub(crate) fn load_artifacts(
    out_dir: &Path,
) -> Result<(RegionsFile, InvocationLedger, Option<PlannedFile>, Option<ParetoFile>, Option<ExhaustiveFile>), CliError>
{
    let mut missing = Vec::new();
    if !out_dir.join(REGIONS_FILE).exists() {
        missing.push(REGIONS_FILE.to_string());
    }
    if !out_dir.join(LEDGER_FILE).exists() {
        missing.push(LEDGER_FILE.to_string());
    }
    if !missing.is_empty() {
        return Err(CliError::MissingInputs(missing));
    }
    let regions = load_regions(out_dir)?;
    let ledger = load_ledger(out_dir)?;
    let planned = maybe_json(&out_dir.join(PLANNED_JSON))?;
    let pareto = maybe_json(&out_dir.join(PARETO_JSON))?;
    let exhaustive = maybe_json(&out_dir.join(EXHAUSTIVE_JSON))?;
    Ok((regions, ledger, planned, pareto, exhaustive))
}

fn maybe_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    serde_json::from_str(&read_text(path)?)
        .map(Some)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
