//! Report generation: span tables, invocation breakdowns, plot-ready CSVs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cosmos_core::backend::Phase;
use cosmos_core::model::{span, DesignPoint};

use crate::commands::load_artifacts;
use crate::format::{fmt_f64, write_json, write_text, CsvBuilder};
use crate::CliError;

pub const SUMMARY_JSON: &str = "summary.json";
pub const SCATTER_CSV: &str = "component_scatter.csv";
pub const SYSTEM_CSV: &str = "system_pareto.csv";
pub const INVOCATIONS_CSV: &str = "invocations.csv";

/// The port count treated as the "standard memory" baseline when reporting
/// restricted spans next to the full ones.
pub const DUAL_PORT: u32 = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub component: String,
    pub regions: u64,
    pub lambda_span: f64,
    pub alpha_span: f64,
    /// Spans over the dual-port points only (or the smallest characterized
    /// port count when no dual-port region exists).
    pub dual_port_lambda_span: f64,
    pub dual_port_alpha_span: f64,
    pub characterization_invocations: u64,
    pub constraint_failures: u64,
    pub mapping_invocations: u64,
    pub unique_invocations: u64,
    pub exhaustive_grid_invocations: Option<u64>,
    /// exhaustive grid / unique invocations, the per-component saving.
    pub reduction_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub components: Vec<ComponentSummary>,
    pub average_lambda_span: f64,
    pub average_alpha_span: f64,
    pub average_dual_port_lambda_span: f64,
    pub average_dual_port_alpha_span: f64,
    pub total_unique_invocations: u64,
    pub total_exhaustive_invocations: Option<u64>,
    pub aggregate_reduction_ratio: Option<f64>,
    pub exhaustive_combinations: Option<String>,
    pub exhaustive_refused: Option<bool>,
    pub planned_points: Option<u64>,
    pub mapped_points: Option<u64>,
    pub mean_sigma: Option<f64>,
    pub max_sigma: Option<f64>,
    pub alpha_gap_violations: Option<u64>,
}

/// Builds `summary.json` and the plot CSVs from whatever artifacts exist in
/// the output directory (`regions.json` and `ledger.json` are required).
pub fn cmd_report(out_dir: &Path) -> Result<Summary, CliError> {
    let (regions, ledger, planned, pareto, exhaustive) = load_artifacts(out_dir)?;

    let mut phase_counts: BTreeMap<&str, (u64, u64, u64)> = BTreeMap::new();
    for entry in ledger.hls_entries() {
        let slot = phase_counts.entry(entry.component.as_str()).or_default();
        match entry.phase {
            Phase::Characterization => slot.0 += 1,
            Phase::ConstraintFailure => slot.1 += 1,
            Phase::Mapping => slot.2 += 1,
        }
    }
    let grid_sizes: BTreeMap<&str, u64> = exhaustive
        .as_ref()
        .map(|e| {
            e.per_component
                .iter()
                .map(|c| (c.component.as_str(), c.grid_invocations))
                .collect()
        })
        .unwrap_or_default();

    let mut components = Vec::new();
    let mut scatter = CsvBuilder::new(&[
        "component",
        "ports",
        "unrolls",
        "lambda_ms",
        "area_mm2",
        "role",
    ]);
    for ch in &regions.components {
        let all: Vec<DesignPoint> = ch.design_points();
        let full = span(&all).map_err(|e| CliError::Config(format!("span: {e}")))?;
        let restricted_ports = if ch.points.iter().any(|p| p.knobs.ports == DUAL_PORT) {
            DUAL_PORT
        } else {
            ch.points.iter().map(|p| p.knobs.ports).min().unwrap_or(DUAL_PORT)
        };
        let restricted: Vec<DesignPoint> = ch
            .points
            .iter()
            .filter(|p| p.knobs.ports == restricted_ports)
            .map(|p| DesignPoint::latency(p.lambda_ms, p.area_mm2))
            .collect();
        let dual = span(&restricted).map_err(|e| CliError::Config(format!("span: {e}")))?;
        let (c, f, m) = phase_counts.get(ch.component.as_str()).copied().unwrap_or_default();
        let grid = grid_sizes.get(ch.component.as_str()).copied();
        let unique = c + f + m;
        components.push(ComponentSummary {
            component: ch.component.clone(),
            regions: ch.regions.len() as u64,
            lambda_span: full.perf,
            alpha_span: full.area,
            dual_port_lambda_span: dual.perf,
            dual_port_alpha_span: dual.area,
            characterization_invocations: c,
            constraint_failures: f,
            mapping_invocations: m,
            unique_invocations: unique,
            exhaustive_grid_invocations: grid,
            reduction_ratio: grid.map(|g| g as f64 / unique.max(1) as f64),
        });
        for p in &ch.points {
            scatter.row(&[
                ch.component.clone(),
                p.knobs.ports.to_string(),
                p.knobs.unrolls.to_string(),
                fmt_f64(p.lambda_ms),
                fmt_f64(p.area_mm2),
                format!("{:?}", p.role).to_lowercase(),
            ]);
        }
    }

    let n = components.len().max(1) as f64;
    let total_unique: u64 = components.iter().map(|c| c.unique_invocations).sum();
    let total_grid = exhaustive.as_ref().map(|e| e.total_grid_invocations);
    let sigmas: Option<Vec<f64>> =
        pareto.as_ref().map(|p| p.points.iter().map(|m| m.sigma).collect());
    let summary = Summary {
        average_lambda_span: components.iter().map(|c| c.lambda_span).sum::<f64>() / n,
        average_alpha_span: components.iter().map(|c| c.alpha_span).sum::<f64>() / n,
        average_dual_port_lambda_span: components.iter().map(|c| c.dual_port_lambda_span).sum::<f64>()
            / n,
        average_dual_port_alpha_span: components.iter().map(|c| c.dual_port_alpha_span).sum::<f64>()
            / n,
        total_unique_invocations: total_unique,
        total_exhaustive_invocations: total_grid,
        aggregate_reduction_ratio: total_grid.map(|g| g as f64 / total_unique.max(1) as f64),
        exhaustive_combinations: exhaustive.as_ref().map(|e| e.combination_count.clone()),
        exhaustive_refused: exhaustive.as_ref().map(|e| e.refused),
        planned_points: planned.as_ref().map(|p| p.points.len() as u64),
        mapped_points: pareto.as_ref().map(|p| p.points.len() as u64),
        mean_sigma: sigmas
            .as_ref()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().sum::<f64>() / s.len() as f64),
        max_sigma: sigmas
            .as_ref()
            .and_then(|s| s.iter().copied().reduce(f64::max)),
        alpha_gap_violations: planned
            .as_ref()
            .map(|p| p.alpha_gaps.iter().filter(|g| g.exceeds_delta).count() as u64),
        components,
    };

    write_json(&out_dir.join(SUMMARY_JSON), &summary)?;
    write_text(&out_dir.join(SCATTER_CSV), &scatter.finish())?;

    if let Some(pareto) = &pareto {
        let mut csv = CsvBuilder::new(&[
            "theta_planned_per_ms",
            "theta_realized_per_ms",
            "planned_area_mm2",
            "realized_area_mm2",
            "sigma",
        ]);
        for p in &pareto.points {
            csv.row(&[
                fmt_f64(p.theta_planned_per_ms),
                fmt_f64(p.theta_realized_per_ms),
                fmt_f64(p.planned_area_mm2),
                fmt_f64(p.realized_area_mm2),
                fmt_f64(p.sigma),
            ]);
        }
        write_text(&out_dir.join(SYSTEM_CSV), &csv.finish())?;
    }

    let mut csv = CsvBuilder::new(&[
        "component",
        "characterization",
        "constraint_failure",
        "mapping",
        "unique_total",
        "exhaustive_grid",
    ]);
    for c in &summary.components {
        csv.row(&[
            c.component.clone(),
            c.characterization_invocations.to_string(),
            c.constraint_failures.to_string(),
            c.mapping_invocations.to_string(),
            c.unique_invocations.to_string(),
            c.exhaustive_grid_invocations.map_or_else(String::new, |g| g.to_string()),
        ]);
    }
    write_text(&out_dir.join(INVOCATIONS_CSV), &csv.finish())?;

    print_summary(&summary);
    Ok(summary)
}

fn print_summary(summary: &Summary) {
    println!(
        "{:<16} {:>4} {:>9} {:>9} {:>9} {:>9} {:>7} {:>6} {:>5} {:>6} {:>7}",
        "component", "reg", "λ-span", "α-span", "λ-span2p", "α-span2p", "char", "fail", "map", "grid", "ratio"
    );
    for c in &summary.components {
        println!(
            "{:<16} {:>4} {:>8.2}x {:>8.2}x {:>8.2}x {:>8.2}x {:>7} {:>6} {:>5} {:>6} {:>7}",
            c.component,
            c.regions,
            c.lambda_span,
            c.alpha_span,
            c.dual_port_lambda_span,
            c.dual_port_alpha_span,
            c.characterization_invocations,
            c.constraint_failures,
            c.mapping_invocations,
            c.exhaustive_grid_invocations.map_or_else(|| "-".into(), |g| g.to_string()),
            c.reduction_ratio.map_or_else(|| "-".into(), |r| format!("{r:.1}x")),
        );
    }
    println!(
        "average spans: λ {:.2}x α {:.2}x (dual-port λ {:.2}x α {:.2}x)",
        summary.average_lambda_span,
        summary.average_alpha_span,
        summary.average_dual_port_lambda_span,
        summary.average_dual_port_alpha_span
    );
    if let (Some(total), Some(ratio)) =
        (summary.total_exhaustive_invocations, summary.aggregate_reduction_ratio)
    {
        println!(
            "invocations: {} unique vs {} exhaustive ({:.1}x reduction)",
            summary.total_unique_invocations, total, ratio
        );
    }
    if let Some(combos) = &summary.exhaustive_combinations {
        let refused = summary.exhaustive_refused.unwrap_or(false);
        println!(
            "exhaustive composition: {combos} combinations{}",
            if refused { " (refused: exceeds the guard)" } else { "" }
        );
    }
}
