//! Report files: summary JSON, per-point and per-cell CSVs, and the
//! heatmap-ready field grid. All numeric fields print with 17 significant
//! digits so reruns are byte-comparable.

use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::{ExperimentRun, MethodOutcome};
use crate::error::Result;
use crate::evaluator::FieldResult;
use crate::geometry::EvalGrid;
use num_complex::Complex64;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct MethodSummary {
    elapsed: f64,
    setup_elapsed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalized_time_vs_conv: Option<f64>,
    max_l2_cell_error: f64,
    max_error_cell: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_y_total: Option<usize>,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a super::ExperimentConfig,
    methods: BTreeMap<&'static str, MethodSummary>,
}

pub(super) fn write_summary_json(run: &ExperimentRun, path: &Path) -> Result<()> {
    let conv_time = run
        .outcomes
        .iter()
        .find(|o| o.result.method == crate::evaluator::Method::Conv)
        .map(|o| o.result.elapsed);
    let mut methods = BTreeMap::new();
    for o in &run.outcomes {
        methods.insert(
            o.result.method.as_str(),
            MethodSummary {
                elapsed: o.result.elapsed,
                setup_elapsed: o.result.setup_elapsed,
                normalized_time_vs_conv: conv_time.map(|t| o.result.elapsed / t),
                max_l2_cell_error: o.report.max_cell_error,
                max_error_cell: o.report.max_cell,
                s_x: o.s_x,
                s_y_total: o.s_y_total,
            },
        );
    }
    let file = SummaryFile {
        config: &run.config,
        methods,
    };
    let mut out = serde_json::to_string_pretty(&file)
        .map_err(|e| crate::error::Error::Numerical(format!("summary serialization: {e}")))?;
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

pub(super) fn write_field_csv(run: &ExperimentRun, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let pts = run.grid.all_points();
    write!(f, "x1,x2,re_oracle,im_oracle")?;
    for o in &run.outcomes {
        let m = o.result.method.as_str();
        write!(f, ",re_{m},im_{m},rel_err_{m}")?;
    }
    writeln!(f)?;
    for (i, p) in pts.iter().enumerate() {
        write!(
            f,
            "{},{},{},{}",
            fmt(p.x),
            fmt(p.y),
            fmt(run.oracle[i].re),
            fmt(run.oracle[i].im)
        )?;
        for o in &run.outcomes {
            write!(
                f,
                ",{},{},{}",
                fmt(o.result.values[i].re),
                fmt(o.result.values[i].im),
                fmt(o.report.per_point[i])
            )?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

pub(super) fn write_cell_csv(run: &ExperimentRun, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "cell,center_x1,center_x2")?;
    for o in &run.outcomes {
        write!(f, ",err_{}", o.result.method.as_str())?;
    }
    writeln!(f)?;
    for (c, cell) in run.grid.cells().iter().enumerate() {
        write!(f, "{c},{},{}", fmt(cell.center.x), fmt(cell.center.y))?;
        for o in &run.outcomes {
            write!(f, ",{}", fmt(o.report.per_cell[c]))?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

/// One record per evaluation point, sorted row-major over the plane
/// (by x2, then x1): `x1 x2 rel_err re_u`. The header carries the counts
/// and bounds any plotting tool needs.
pub fn emit_field_grid(
    result: &FieldResult,
    oracle: &[Complex64],
    grid: &EvalGrid,
    path: &Path,
) -> Result<()> {
    if result.values.len() != grid.num_points() || oracle.len() != grid.num_points() {
        return Err(crate::error::Error::InvalidArgument(format!(
            "field grid size mismatch: {} values, {} oracle, {} points",
            result.values.len(),
            oracle.len(),
            grid.num_points()
        )));
    }
    let pts = grid.all_points();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        (pts[a].y, pts[a].x)
            .partial_cmp(&(pts[b].y, pts[b].x))
            .unwrap()
    });
    let frame = grid.frame();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# proxywave field grid")?;
    writeln!(f, "# method {}", result.method.as_str())?;
    writeln!(
        f,
        "# cells {} points_per_cell {} points {}",
        grid.num_cells(),
        grid.points_per_cell(),
        grid.num_points()
    )?;
    writeln!(
        f,
        "# bounds {} {} {} {}",
        fmt(-frame.outer_half_width),
        fmt(frame.outer_half_width),
        fmt(-frame.outer_half_width),
        fmt(frame.outer_half_width)
    )?;
    writeln!(f, "# columns x1 x2 rel_err re_u")?;
    for &i in &order {
        let rel = (result.values[i] - oracle[i]).norm() / oracle[i].norm().max(1e-300);
        writeln!(
            f,
            "{} {} {} {}",
            fmt(pts[i].x),
            fmt(pts[i].y),
            fmt(rel),
            fmt(result.values[i].re)
        )?;
    }
    f.flush()?;
    Ok(())
}

pub(super) fn method_grid_path(dir: &Path, o: &MethodOutcome) -> std::path::PathBuf {
    dir.join(format!("field_grid_{}.txt", o.result.method.as_str()))
}
