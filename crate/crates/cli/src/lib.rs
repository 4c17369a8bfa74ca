//! Batch runner for the coexistence analysis: sweeps a grid of cells through the
//! analytic fixed point and the simulator, then writes CSV tables and a manifest.

pub mod report;
pub mod run;
pub mod spec;

use std::fs;
use std::path::Path;
use std::time::Instant;

use laa_core::{Result, RsfChoice};
use serde::Serialize;

use report::{ComparisonRow, IdentityRow, Manifest};
use run::CellResult;
use spec::{CellKey, Engine, ExperimentSpec, Mode, RsfAxis};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Wi-Fi transmission lengths of the published grids.
pub const TABLE_T_WIFI: [f64; 5] = [4.0, 54.0, 104.0, 154.0, 204.0];

/// Everything produced by one experiment.
#[derive(Debug)]
pub struct Outcome {
    pub results: Vec<CellResult>,
    pub comparisons: Vec<ComparisonRow>,
    pub identities: Vec<IdentityRow>,
    pub files: Vec<String>,
    pub exit_code: i32,
}

/// Extra artifacts beyond the metric tables.
#[derive(Debug, Clone, Default)]
pub struct Extras {
    /// Figure data to emit, by name (`fig7` ... `fig14`).
    pub figures: Vec<String>,
    /// Write `<name>.txt` with a grid of `avg_collided_sf` (and z2 for the simulator).
    pub table: Option<String>,
}

#[derive(Serialize)]
struct SimStatsEntry<'a> {
    key: CellKey,
    stats: &'a laa_core::SimStats,
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), text)?;
    files.push(name.to_string());
    Ok(())
}

/// Runs every cell of `spec` and writes the artifacts into `spec.out`.
pub fn execute(command: &str, spec: &ExperimentSpec, extras: &Extras) -> Result<Outcome> {
    spec.validate()?;
    let start = Instant::now();
    let results = run::run_cells(spec)?;
    let dir = spec.out.as_path();
    let mut files = report::write_metric_csvs(dir, &results)?;

    let comparisons = report::comparison_rows(&results, &spec.tol_profile);
    if spec.engines.contains(&Engine::Analytic) && spec.engines.contains(&Engine::Simulation) {
        let rows: Vec<String> = comparisons.iter().map(ComparisonRow::csv).collect();
        write(dir, "compare.csv", &report::render_csv(report::COMPARE_HEADER, &rows), &mut files)?;
    }

    let identities = report::identity_rows(&results, |k| k.n_sf as f64);
    let rows: Vec<String> = identities.iter().map(IdentityRow::csv).collect();
    write(dir, "identities.csv", &report::render_csv(report::IDENTITY_HEADER, &rows), &mut files)?;

    let sims: Vec<SimStatsEntry> = results
        .iter()
        .filter_map(|r| r.sim_stats.as_ref().map(|stats| SimStatsEntry { key: r.key, stats }))
        .collect();
    if !sims.is_empty() {
        write(dir, "simstats.json", &serde_json::to_string_pretty(&sims)?, &mut files)?;
    }

    let mut missing = Vec::new();
    for name in &extras.figures {
        let fig = report::figure(name)
            .ok_or_else(|| laa_core::Error::InvalidArgument(format!("unknown figure '{name}'")))?;
        let (data, miss) = report::emit_figure_data(&results, fig);
        for (file, text) in data {
            write(dir, &file, &text, &mut files)?;
        }
        missing.extend(miss);
    }
    if !missing.is_empty() {
        write(dir, "missing_series.txt", &(missing.join("\n") + "\n"), &mut files)?;
    }
    if let Some(table) = &extras.table {
        let mut text = format!("average collided subframes per MCOT\n{}", report::grid_text(&results, "avg_collided_sf"));
        if spec.engines.contains(&Engine::Simulation) {
            text += &format!("\noverlap fraction z2\n{}", report::grid_text(&results, "z2"));
        }
        write(dir, &format!("{table}.txt"), &text, &mut files)?;
    }

    let failed_cells = results.iter().filter(|r| !r.ok()).count();
    if failed_cells > 0 {
        write(dir, "errors.csv", &report::errors_csv(&results), &mut files)?;
    }
    let failed_checks = comparisons.iter().filter(|c| c.pass == Some(false)).count()
        + identities.iter().filter(|i| !i.pass).count();

    files.push("manifest.json".into());
    let manifest = Manifest::new(command, spec, &results, files.clone(), failed_checks, start.elapsed().as_secs_f64());
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;

    let exit_code = if failed_cells > 0 {
        EXIT_ERROR
    } else if failed_checks > 0 {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    };
    Ok(Outcome { results, comparisons, identities, files, exit_code })
}

/// Runs an experiment and maps any error to [`EXIT_ERROR`].
pub fn run_experiment(command: &str, spec: &ExperimentSpec, extras: &Extras) -> i32 {
    match execute(command, spec, extras) {
        Ok(o) => o.exit_code,
        Err(e) => {
            log::error!("{e}");
            EXIT_ERROR
        }
    }
}

fn both_rsf() -> Vec<RsfAxis> {
    vec![RsfAxis::Choice(RsfChoice::First), RsfAxis::Choice(RsfChoice::LastEligible)]
}

/// 8 ms MCOT, first and last reference subframe, both engines.
pub fn table4_spec(mut spec: ExperimentSpec) -> ExperimentSpec {
    spec.mode = Mode::Sweep;
    spec.engines = vec![Engine::Analytic, Engine::Simulation];
    spec.n_sf = vec![8];
    spec.rsf = both_rsf();
    spec.t_wifi = TABLE_T_WIFI.to_vec();
    spec
}

/// Overlap fraction from the simulator on both MCOT lengths.
pub fn table5_spec(mut spec: ExperimentSpec) -> ExperimentSpec {
    spec.mode = Mode::Simulate;
    spec.engines = vec![Engine::Simulation];
    spec.n_sf = vec![8, 10];
    spec.rsf = both_rsf();
    spec.t_wifi = TABLE_T_WIFI.to_vec();
    spec
}

/// Grid behind the figure panels: both MCOT lengths, both reference subframes and
/// T from 4 to 204 in steps of 25.
pub fn figure_spec(mut spec: ExperimentSpec, engines: Vec<Engine>) -> ExperimentSpec {
    spec.mode = Mode::Sweep;
    spec.engines = engines;
    spec.n_sf = vec![8, 10];
    spec.rsf = both_rsf();
    spec.t_wifi = (0..9).map(|i| 4.0 + 25.0 * i as f64).collect();
    spec
}
