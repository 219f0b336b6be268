//! The four wavefield evaluation pipelines plus the interior representation
//! and per-cell error reporting.
//!
//! Exterior representation (per element, midpoint quadrature):
//! u(x) = sum_j D1(x, y_j) w_j u_j - sum_j G1(x - y_j) w_j q_j + uI(x),
//! with D1 the double-layer kernel of `kernel`. The fast variants evaluate
//! the sums only at skeleton points or skeleton elements and interpolate.
//!
//! Evaluation across unit cells runs in parallel; each cell writes a
//! disjoint slice of the output and sums in a fixed order (cluster, then
//! element), so results are bit-reproducible for any thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, EvalGrid, Point};
use crate::kernel::layer_pair;
use crate::oracle::{BoundaryData, MediumParams, incident_wave};
use crate::skeleton::{Variant, XSkeleton, YSkeleton, layout_hash};

/// Evaluation pipeline identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Conv,
    FastU,
    FastUv,
    FastUvVtailored,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Conv => "conv",
            Method::FastU => "fast_u",
            Method::FastUv => "fast_uv",
            Method::FastUvVtailored => "fast_uv_vtailored",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conv" => Ok(Method::Conv),
            "fast_u" => Ok(Method::FastU),
            "fast_uv" => Ok(Method::FastUv),
            "fast_uv_vtailored" => Ok(Method::FastUvVtailored),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected conv, fast_u, fast_uv or fast_uv_vtailored)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Field values over the whole grid in global point order, plus timing.
#[derive(Debug, Clone)]
pub struct FieldResult {
    pub values: Vec<Complex64>,
    pub method: Method,
    /// Wall-clock seconds of the evaluation phase.
    pub elapsed: f64,
    /// Seconds spent building the skeletons this evaluation used.
    pub setup_elapsed: f64,
}

impl FieldResult {
    pub fn with_setup(mut self, setup: f64) -> Self {
        self.setup_elapsed = setup;
        self
    }
}

fn finite_check(values: &[Complex64], method: Method) -> Result<()> {
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical(format!(
            "{method} produced non-finite field values"
        )));
    }
    Ok(())
}

/// Discretized layer-potential sums (no incident term) at arbitrary points.
/// `min_dist` rejects points closer to an element midpoint than the
/// quadrature can tolerate.
fn potential_at_points(
    mesh: &BoundaryMesh,
    data: &BoundaryData,
    points: &[Point],
    k: f64,
    min_dist: f64,
) -> Result<Vec<Complex64>> {
    let mids = mesh.midpoints();
    let nrms = mesh.normals();
    let ws = mesh.weights();
    let mut out = Vec::with_capacity(points.len());
    for &x in points {
        let mut acc = Complex64::default();
        for j in 0..mesh.len() {
            let y = mids[j];
            if x.dist(y) < min_dist {
                return Err(Error::PointRejected(format!(
                    "point ({}, {}) is within {min_dist:.3e} of the boundary",
                    x.x, x.y
                )));
            }
            let (g, d) = layer_pair(k, x, y, nrms[j])?;
            acc += (d * data.u[j] - g * data.q[j]) * ws[j];
        }
        out.push(acc);
    }
    Ok(out)
}

fn check_sizes(mesh: &BoundaryMesh, data: &BoundaryData) -> Result<()> {
    if mesh.len() != data.len() {
        return Err(Error::MeshMismatch(format!(
            "boundary data has {} entries for a mesh of {} elements",
            data.len(),
            mesh.len()
        )));
    }
    Ok(())
}

/// Direct summation of the discretized representation at every grid point.
pub fn eval_conv(
    mesh: &BoundaryMesh,
    data: &BoundaryData,
    grid: &EvalGrid,
    params: &MediumParams,
) -> Result<FieldResult> {
    check_sizes(mesh, data)?;
    let k1 = params.k1();
    let min_dist = 10.0 * mesh.mean_weight();
    let m = grid.points_per_cell();
    let start = Instant::now();
    let mut values = vec![Complex64::default(); grid.num_points()];
    let results: Result<Vec<()>> = values
        .par_chunks_mut(m)
        .zip(grid.cells().par_iter())
        .map(|(chunk, cell)| {
            let vals = potential_at_points(mesh, data, &cell.points, k1, min_dist)?;
            for (i, v) in vals.into_iter().enumerate() {
                chunk[i] = v + incident_wave(cell.points[i], k1);
            }
            Ok(())
        })
        .collect();
    results?;
    let elapsed = start.elapsed().as_secs_f64();
    finite_check(&values, Method::Conv)?;
    Ok(FieldResult {
        values,
        method: Method::Conv,
        elapsed,
        setup_elapsed: 0.0,
    })
}

/// Skeletonized x-side: evaluate the sums at the cell's skeleton points only,
/// interpolate with U, then add the incident wave at all points.
pub fn eval_fast_u(
    mesh: &BoundaryMesh,
    data: &BoundaryData,
    grid: &EvalGrid,
    params: &MediumParams,
    xskel: &XSkeleton,
) -> Result<FieldResult> {
    check_sizes(mesh, data)?;
    check_layout(grid, xskel)?;
    let k1 = params.k1();
    let min_dist = 10.0 * mesh.mean_weight();
    let m = grid.points_per_cell();
    let start = Instant::now();
    let mut values = vec![Complex64::default(); grid.num_points()];
    let results: Result<Vec<()>> = values
        .par_chunks_mut(m)
        .zip(grid.cells().par_iter())
        .map(|(chunk, cell)| {
            let pts: Vec<Point> = xskel.indices.iter().map(|&i| cell.points[i]).collect();
            let phi = potential_at_points(mesh, data, &pts, k1, min_dist)?;
            let phi = ndarray::Array1::from_vec(phi);
            let interp = xskel.interp.dot(&phi);
            for i in 0..m {
                chunk[i] = interp[i] + incident_wave(cell.points[i], k1);
            }
            Ok(())
        })
        .collect();
    results?;
    let elapsed = start.elapsed().as_secs_f64();
    finite_check(&values, Method::FastU)?;
    Ok(FieldResult {
        values,
        method: Method::FastU,
        elapsed,
        setup_elapsed: 0.0,
    })
}

fn check_layout(grid: &EvalGrid, xskel: &XSkeleton) -> Result<()> {
    let offsets = grid.cells()[0].offsets();
    if layout_hash(&offsets) != xskel.layout_id {
        return Err(Error::LayoutMismatch(
            "x-skeleton was built for a different unit-cell layout".into(),
        ));
    }
    Ok(())
}

/// Skeletonized x- and y-sides. The density coefficients are compressed once
/// (V q and W u per cluster), then the layer sums run over skeleton elements
/// at skeleton points only. The method label follows the y-side variant.
pub fn eval_fast_uv(
    mesh: &BoundaryMesh,
    data: &BoundaryData,
    grid: &EvalGrid,
    params: &MediumParams,
    xskel: &XSkeleton,
    yskels: &[YSkeleton],
) -> Result<FieldResult> {
    check_sizes(mesh, data)?;
    check_layout(grid, xskel)?;
    let method = match coverage_and_variant(mesh, yskels)? {
        Variant::Original => Method::FastUv,
        Variant::Tailored => Method::FastUvVtailored,
    };
    let k1 = params.k1();
    let min_dist = 10.0 * mesh.mean_weight();
    let m = grid.points_per_cell();
    let mids = mesh.midpoints();
    let nrms = mesh.normals();
    let ws = mesh.weights();
    let start = Instant::now();
    // compress the densities once; they do not depend on the target point
    let mut compressed: Vec<(usize, Complex64, Complex64)> = Vec::new();
    for ys in yskels {
        let q = ndarray::Array1::from_iter(data.q[ys.start..ys.end].iter().copied());
        let u = ndarray::Array1::from_iter(data.u[ys.start..ys.end].iter().copied());
        let vq = ys.v.dot(&q);
        let wu = ys.w.dot(&u);
        for (pos, &l) in ys.indices.iter().enumerate() {
            compressed.push((l, vq[pos], wu[pos]));
        }
    }
    let mut values = vec![Complex64::default(); grid.num_points()];
    let results: Result<Vec<()>> = values
        .par_chunks_mut(m)
        .zip(grid.cells().par_iter())
        .map(|(chunk, cell)| {
            let mut phi = ndarray::Array1::<Complex64>::zeros(xskel.rank());
            for (pos, &i) in xskel.indices.iter().enumerate() {
                let x = cell.points[i];
                let mut acc = Complex64::default();
                for &(l, vq, wu) in &compressed {
                    let y = mids[l];
                    if x.dist(y) < min_dist {
                        return Err(Error::PointRejected(format!(
                            "point ({}, {}) is within {min_dist:.3e} of the boundary",
                            x.x, x.y
                        )));
                    }
                    let (g, d) = layer_pair(k1, x, y, nrms[l])?;
                    acc += (d * wu - g * vq) * ws[l];
                }
                phi[pos] = acc;
            }
            let interp = xskel.interp.dot(&phi);
            for i in 0..m {
                chunk[i] = interp[i] + incident_wave(cell.points[i], k1);
            }
            Ok(())
        })
        .collect();
    results?;
    let elapsed = start.elapsed().as_secs_f64();
    finite_check(&values, method)?;
    Ok(FieldResult {
        values,
        method,
        elapsed,
        setup_elapsed: 0.0,
    })
}

/// Leaf coverage must partition the mesh and all skeletons must share one
/// variant.
fn coverage_and_variant(mesh: &BoundaryMesh, yskels: &[YSkeleton]) -> Result<Variant> {
    if yskels.is_empty() {
        return Err(Error::InvalidArgument("no y-side skeletons supplied".into()));
    }
    let mut covered = 0usize;
    let mut sorted: Vec<&YSkeleton> = yskels.iter().collect();
    sorted.sort_by_key(|s| s.start);
    for s in &sorted {
        if s.start != covered {
            return Err(Error::InvalidArgument(format!(
                "y-side coverage gap before element {}",
                s.start
            )));
        }
        covered = s.end;
    }
    if covered != mesh.len() {
        return Err(Error::InvalidArgument(format!(
            "y-side skeletons cover {covered} of {} elements",
            mesh.len()
        )));
    }
    let variant = yskels[0].variant;
    if yskels.iter().any(|s| s.variant != variant) {
        return Err(Error::InvalidArgument(
            "y-side skeletons mix original and tailored variants".into(),
        ));
    }
    Ok(variant)
}

/// Interior representation with the k2 kernels:
/// u(x) = -sum_j D2(x, y_j) w_j u_j + eps2 * sum_j G2(x - y_j) w_j q_j.
/// q stores the permittivity-scaled flux, so the single-layer density
/// (the raw normal derivative of the interior trace) is eps2 * q.
pub fn eval_interior(
    mesh: &BoundaryMesh,
    data: &BoundaryData,
    x: Point,
    params: &MediumParams,
) -> Result<Complex64> {
    check_sizes(mesh, data)?;
    let min_dist = 10.0 * mesh.mean_weight();
    let mids = mesh.midpoints();
    let (nearest, dist) = mids
        .iter()
        .enumerate()
        .map(|(j, y)| (j, x.dist(*y)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    if dist < min_dist {
        return Err(Error::PointRejected(format!(
            "interior point ({}, {}) is within {min_dist:.3e} of the boundary",
            x.x, x.y
        )));
    }
    if mesh.normals()[nearest].dot(x.sub(mids[nearest])) > 0.0 {
        return Err(Error::PointRejected(format!(
            "point ({}, {}) lies outside the scatterer",
            x.x, x.y
        )));
    }
    let k2 = params.k2();
    let mut acc = Complex64::default();
    for j in 0..mesh.len() {
        let (g, d) = layer_pair(k2, x, mids[j], mesh.normals()[j])?;
        acc += (-d * data.u[j] + g * data.q[j] * params.eps2) * mesh.weights()[j];
    }
    Ok(acc)
}

/// Per-cell l2 relative errors against reference values, plus the per-point
/// relative error field for heat maps.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub per_cell: Vec<f64>,
    pub max_cell_error: f64,
    pub max_cell: usize,
    pub per_point: Vec<f64>,
}

pub fn error_report(
    result: &FieldResult,
    oracle: &[Complex64],
    grid: &EvalGrid,
) -> Result<ErrorReport> {
    if result.values.len() != oracle.len() || oracle.len() != grid.num_points() {
        return Err(Error::InvalidArgument(format!(
            "error report size mismatch: {} values, {} oracle, {} grid points",
            result.values.len(),
            oracle.len(),
            grid.num_points()
        )));
    }
    let m = grid.points_per_cell();
    let mut per_cell = Vec::with_capacity(grid.num_cells());
    let mut per_point = Vec::with_capacity(oracle.len());
    for (i, (v, o)) in result.values.iter().zip(oracle).enumerate() {
        if o.norm() == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "oracle value vanishes at point {i}; relative error undefined"
            )));
        }
        per_point.push((v - o).norm() / o.norm());
    }
    for c in 0..grid.num_cells() {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in c * m..(c + 1) * m {
            num += (result.values[i] - oracle[i]).norm_sqr();
            den += oracle[i].norm_sqr();
        }
        if den == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "oracle norm vanishes over cell {c}"
            )));
        }
        per_cell.push((num / den).sqrt());
    }
    let (max_cell, max_cell_error) = per_cell
        .iter()
        .enumerate()
        .map(|(i, &e)| (i, e))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    Ok(ErrorReport {
        per_cell,
        max_cell_error,
        max_cell,
        per_point,
    })
}
