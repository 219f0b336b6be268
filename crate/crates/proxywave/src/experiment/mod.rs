//! Benchmark harness: runs the selected evaluation methods against
//! oracle-supplied boundary data, times them, measures per-cell errors and
//! writes the report files.

mod config;
mod report;

pub use config::{ExperimentConfig, YPlan};
pub use report::emit_field_grid;

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evaluator::{
    ErrorReport, FieldResult, Method, error_report, eval_conv, eval_fast_u, eval_fast_uv,
};
use crate::geometry::{
    BoundaryMesh, EvalGrid, FrameSpec, Point, build_cluster_tree, build_eval_grid,
    build_proxy_for_cell, discretize_circle,
};
use crate::oracle::{BoundaryData, MediumParams, boundary_data, oracle_field, solve_series_at};
use crate::skeleton::{XSkeleton, build_all_y_skeletons, build_x_skeleton};

/// Everything one method produced: field values, timing and error report.
pub struct MethodOutcome {
    pub result: FieldResult,
    pub report: ErrorReport,
    pub s_x: Option<usize>,
    pub s_y_total: Option<usize>,
}

/// A completed experiment: per-method outcomes plus the shared ground truth.
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub grid: EvalGrid,
    pub oracle: Vec<Complex64>,
    pub outcomes: Vec<MethodOutcome>,
}

impl ExperimentRun {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.result.method == method)
    }
}

/// Shared problem state every method evaluates against.
pub struct Problem {
    pub mesh: BoundaryMesh,
    pub grid: EvalGrid,
    pub params: MediumParams,
    pub data: BoundaryData,
    pub oracle: Vec<Complex64>,
}

/// Build mesh, grid and oracle boundary data for a configuration.
pub fn prepare(config: &ExperimentConfig) -> Result<Problem> {
    let params = MediumParams::new(config.medium.omega, config.medium.eps1, config.medium.eps2)?;
    let center = Point::new(config.scatterer.center[0], config.scatterer.center[1]);
    let mesh = discretize_circle(center, config.scatterer.radius, config.scatterer.n_elements)?;
    let grid = build_eval_grid(
        FrameSpec {
            inner_half_width: config.grid.inner_half_width,
            outer_half_width: config.grid.outer_half_width,
        },
        config.grid.cell_size,
        config.grid.points_per_cell,
        config.grid.layout,
    )?;
    let coeffs = solve_series_at(&params, center, config.scatterer.radius, 0)?;
    let data = boundary_data(&mesh, &coeffs, &params)?;
    let oracle: Vec<Complex64> = grid
        .all_points()
        .iter()
        .map(|&p| oracle_field(p, &coeffs, &params))
        .collect();
    Ok(Problem {
        mesh,
        grid,
        params,
        data,
        oracle,
    })
}

fn needs_x_skeleton(methods: &[Method]) -> bool {
    methods.iter().any(|m| *m != Method::Conv)
}

fn build_shared_x(config: &ExperimentConfig, problem: &Problem) -> Result<(XSkeleton, f64)> {
    let start = Instant::now();
    let cell = &problem.grid.cells()[0];
    let proxy = build_proxy_for_cell(
        cell,
        config.grid.cell_size,
        config.x_side.proxy_factor,
        config.x_side.n_proxy,
    )?;
    let xskel = build_x_skeleton(cell, &proxy, problem.params.k1(), config.x_side.tol)?;
    Ok((xskel, start.elapsed().as_secs_f64()))
}

/// Run the configured methods without touching the filesystem.
pub fn run_experiment_core(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let problem = prepare(config)?;
    let xskel = if needs_x_skeleton(&config.run.methods) {
        Some(build_shared_x(config, &problem)?)
    } else {
        None
    };
    let mut outcomes = Vec::new();
    for &method in &config.run.methods {
        let outcome = run_method(config, &problem, method, xskel.as_ref())?;
        outcomes.push(outcome);
    }
    Ok(ExperimentRun {
        config: config.clone(),
        grid: problem.grid,
        oracle: problem.oracle,
        outcomes,
    })
}

fn run_method(
    config: &ExperimentConfig,
    problem: &Problem,
    method: Method,
    xskel: Option<&(XSkeleton, f64)>,
) -> Result<MethodOutcome> {
    let repeat = config.run.repeat.max(1);
    let run_eval = |setup: &mut f64, s_y: &mut Option<usize>| -> Result<FieldResult> {
        match method {
            Method::Conv => eval_conv(&problem.mesh, &problem.data, &problem.grid, &problem.params),
            Method::FastU => {
                let (xs, xt) = xskel.expect("x skeleton prepared");
                *setup = *xt;
                eval_fast_u(&problem.mesh, &problem.data, &problem.grid, &problem.params, xs)
            }
            Method::FastUv | Method::FastUvVtailored => {
                let (xs, xt) = xskel.expect("x skeleton prepared");
                let plan = config.y_plan(method)?;
                let ystart = Instant::now();
                let tree = build_cluster_tree(&problem.mesh, config.y_side.leaf_size)?;
                let yskels = build_all_y_skeletons(
                    &problem.mesh,
                    &tree,
                    problem.params.k1(),
                    plan.tol,
                    plan.variant,
                    plan.scheme,
                    config.y_side.proxy_factor,
                    config.y_side.n_proxy,
                )?;
                *setup = *xt + ystart.elapsed().as_secs_f64();
                *s_y = Some(yskels.iter().map(|s| s.rank()).sum());
                eval_fast_uv(
                    &problem.mesh,
                    &problem.data,
                    &problem.grid,
                    &problem.params,
                    xs,
                    &yskels,
                )
            }
        }
    };
    let mut setup = 0.0;
    let mut s_y = None;
    let mut best: Option<FieldResult> = None;
    for _ in 0..repeat {
        let r = run_eval(&mut setup, &mut s_y)?;
        best = Some(match best.take() {
            Some(prev) if prev.elapsed <= r.elapsed => prev,
            _ => r,
        });
    }
    let result = best.expect("at least one repetition").with_setup(setup);
    let report = error_report(&result, &problem.oracle, &problem.grid)?;
    let s_x = if method == Method::Conv {
        None
    } else {
        xskel.map(|(xs, _)| xs.rank())
    };
    Ok(MethodOutcome {
        result,
        report,
        s_x,
        s_y_total: s_y,
    })
}

fn with_thread_cap<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {threads}-thread pool: {e}")))?;
    pool.install(f)
}

/// Run the experiment and write summary JSON, per-point and per-cell CSVs and
/// one field-grid file per method into the configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let run = with_thread_cap(config.run.threads, || run_experiment_core(config))?;
    let dir = &config.output.out_dir;
    std::fs::create_dir_all(dir)?;
    report::write_summary_json(&run, &dir.join("summary.json"))?;
    report::write_field_csv(&run, &dir.join("field_points.csv"))?;
    report::write_cell_csv(&run, &dir.join("cell_errors.csv"))?;
    for o in &run.outcomes {
        emit_field_grid(
            &o.result,
            &run.oracle,
            &run.grid,
            &report::method_grid_path(dir, o),
        )?;
    }
    Ok(run)
}

/// Which knob a convergence sweep varies.
#[derive(Debug, Clone)]
pub enum SweepParam {
    NElements(Vec<usize>),
    XTol(Vec<f64>),
    YTol(Vec<f64>),
}

impl SweepParam {
    fn name(&self) -> &'static str {
        match self {
            SweepParam::NElements(_) => "n_elements",
            SweepParam::XTol(_) => "x_tol",
            SweepParam::YTol(_) => "y_tol",
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            SweepParam::NElements(v) => v.iter().map(|&n| n as f64).collect(),
            SweepParam::XTol(v) | SweepParam::YTol(v) => v.clone(),
        }
    }

    fn check_monotone(&self) -> Result<()> {
        let v = self.values();
        if v.len() < 2 {
            return Err(Error::InvalidArgument(
                "sweep needs at least two parameter values".into(),
            ));
        }
        let inc = v.windows(2).all(|w| w[1] > w[0]);
        let dec = v.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::InvalidArgument(format!(
                "sweep values must be strictly monotone, got {v:?}"
            )));
        }
        Ok(())
    }
}

/// One sweep measurement.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub param: &'static str,
    pub value: f64,
    pub method: &'static str,
    pub max_l2_cell_error: f64,
    pub elapsed: f64,
    pub setup_elapsed: f64,
    pub s_x: Option<usize>,
    pub s_y_total: Option<usize>,
}

/// Run the experiment once per parameter value and collect a table; also
/// writes `sweep.csv` in the output directory.
pub fn convergence_sweep(config: &ExperimentConfig, param: SweepParam) -> Result<Vec<SweepRow>> {
    config.validate()?;
    param.check_monotone()?;
    let rows = with_thread_cap(config.run.threads, || {
        let mut rows = Vec::new();
        for v in param.values() {
            let mut cfg = config.clone();
            match param {
                SweepParam::NElements(_) => cfg.scatterer.n_elements = v as usize,
                SweepParam::XTol(_) => cfg.x_side.tol = v,
                SweepParam::YTol(_) => cfg.y_side.tol = Some(v),
            }
            let run = run_experiment_core(&cfg)?;
            for o in &run.outcomes {
                rows.push(SweepRow {
                    param: param.name(),
                    value: v,
                    method: o.result.method.as_str(),
                    max_l2_cell_error: o.report.max_cell_error,
                    elapsed: o.result.elapsed,
                    setup_elapsed: o.result.setup_elapsed,
                    s_x: o.s_x,
                    s_y_total: o.s_y_total,
                });
            }
        }
        Ok(rows)
    })?;
    let dir = &config.output.out_dir;
    std::fs::create_dir_all(dir)?;
    write_sweep_csv(&rows, &dir.join("sweep.csv"))?;
    Ok(rows)
}

fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "param,value,method,max_l2_cell_error,elapsed,setup_elapsed,s_x,s_y_total"
    )?;
    for r in rows {
        writeln!(
            f,
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{}",
            r.param,
            r.value,
            r.method,
            r.max_l2_cell_error,
            r.elapsed,
            r.setup_elapsed,
            r.s_x.map(|v| v.to_string()).unwrap_or_default(),
            r.s_y_total.map(|v| v.to_string()).unwrap_or_default()
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small but complete configuration for harness tests.
    fn small_config(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.scatterer.n_elements = 800;
        cfg.grid.outer_half_width = 2.0;
        cfg.grid.points_per_cell = 25;
        cfg.y_side.leaf_size = 100;
        cfg.output.out_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn run_writes_all_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        let run = run_experiment(&cfg).unwrap();
        assert_eq!(run.outcomes.len(), 4);
        for name in [
            "summary.json",
            "field_points.csv",
            "cell_errors.csv",
            "field_grid_conv.txt",
            "field_grid_fast_u.txt",
            "field_grid_fast_uv.txt",
            "field_grid_fast_uv_vtailored.txt",
        ] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        for m in ["conv", "fast_u", "fast_uv", "fast_uv_vtailored"] {
            let entry = &summary["methods"][m];
            assert!(entry["elapsed"].is_number(), "{m} elapsed");
            assert!(entry["setup_elapsed"].is_number());
            assert!(entry["max_l2_cell_error"].is_number());
            assert!(entry["normalized_time_vs_conv"].is_number());
            if m == "conv" {
                assert!(entry.get("s_x").is_none());
                assert!(entry.get("s_y_total").is_none());
            } else {
                assert!(entry["s_x"].is_number(), "{m} s_x");
            }
            if m.starts_with("fast_uv") {
                assert!(entry["s_y_total"].is_number(), "{m} s_y_total");
            }
        }
        // the field grid has one record per point plus header lines
        let grid_text =
            std::fs::read_to_string(dir.path().join("field_grid_conv.txt")).unwrap();
        let records = grid_text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(records, run.grid.num_points());
    }

    #[test]
    fn conv_only_summary_has_no_skeleton_fields() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.run.methods = vec![Method::Conv];
        run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(!text.contains("s_x"));
        assert!(!text.contains("s_y_total"));
    }

    #[test]
    fn reruns_are_bit_identical() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let mut c1 = small_config(dir1.path());
        c1.run.methods = vec![Method::Conv, Method::FastUv];
        let mut c2 = c1.clone();
        c2.output.out_dir = dir2.path().to_path_buf();
        run_experiment(&c1).unwrap();
        run_experiment(&c2).unwrap();
        for name in ["field_points.csv", "cell_errors.csv", "field_grid_conv.txt"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn sweep_requires_monotone_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        let bad = SweepParam::NElements(vec![800, 400, 1600]);
        assert!(convergence_sweep(&cfg, bad).is_err());
        let single = SweepParam::XTol(vec![1e-6]);
        assert!(convergence_sweep(&cfg, single).is_err());
    }

    #[test]
    fn x_tol_sweep_skeleton_monotone() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.run.methods = vec![Method::FastU];
        let rows = convergence_sweep(&cfg, SweepParam::XTol(vec![1e-3, 1e-6, 1e-9])).unwrap();
        let s: Vec<usize> = rows.iter().map(|r| r.s_x.unwrap()).collect();
        assert_eq!(s.len(), 3);
        assert!(s[0] <= s[1] && s[1] <= s[2], "s_x not monotone: {s:?}");
        assert!(dir.path().join("sweep.csv").exists());
    }

    #[test]
    fn y_tol_sweep_error_tracks_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.run.methods = vec![Method::Conv, Method::FastUvVtailored];
        let tols = [1e-4, 1e-6, 1e-8];
        let rows = convergence_sweep(&cfg, SweepParam::YTol(tols.to_vec())).unwrap();
        for (i, &tol) in tols.iter().enumerate() {
            let conv = &rows[2 * i];
            let vt = &rows[2 * i + 1];
            assert_eq!(conv.method, "conv");
            assert_eq!(vt.method, "fast_uv_vtailored");
            let added = (vt.max_l2_cell_error - conv.max_l2_cell_error).abs();
            let slack = 100.0 * tol + 10.0 * cfg.x_side.tol;
            assert!(
                added <= slack,
                "y-tol {tol}: added error {added} above slack {slack}"
            );
        }
    }
}
