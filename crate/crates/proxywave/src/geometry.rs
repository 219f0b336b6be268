//! Boundary discretization, evaluation-point unit cells, proxy circles and
//! the binary cluster tree over boundary elements.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub const ORIGIN: Point = Point::new(0.0, 0.0);

    #[inline]
    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    #[inline]
    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        self.sub(other).norm()
    }

    /// Chebyshev (max) norm, the `||x||_inf` of the frame bounds.
    #[inline]
    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

/// Discretized closed boundary: element midpoints, outward unit normals and
/// arc-length weights, ordered counterclockwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryMesh {
    midpoints: Vec<Point>,
    normals: Vec<Point>,
    weights: Vec<f64>,
}

impl BoundaryMesh {
    pub fn len(&self) -> usize {
        self.midpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.midpoints.is_empty()
    }

    pub fn midpoints(&self) -> &[Point] {
        &self.midpoints
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.len() as f64
    }

    /// FNV-1a over the raw coordinate bits; keys skeleton cache files.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for ((m, n), w) in self.midpoints.iter().zip(&self.normals).zip(&self.weights) {
            eat(m.x);
            eat(m.y);
            eat(n.x);
            eat(n.y);
            eat(*w);
        }
        h
    }
}

/// Uniform discretization of a circle into `n` equal arc elements.
/// Element j has its midpoint at angle 2*pi*(j + 1/2)/n, weight 2*pi*r/n and
/// a radially outward normal.
pub fn discretize_circle(center: Point, radius: f64, n: usize) -> Result<BoundaryMesh> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "circle discretization needs at least 4 elements, got {n}"
        )));
    }
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    let w = 2.0 * PI * radius / n as f64;
    let mut midpoints = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for j in 0..n {
        let theta = 2.0 * PI * (j as f64 + 0.5) / n as f64;
        let (s, c) = theta.sin_cos();
        normals.push(Point::new(c, s));
        midpoints.push(Point::new(center.x + radius * c, center.y + radius * s));
    }
    Ok(BoundaryMesh {
        midpoints,
        normals,
        weights: vec![w; n],
    })
}

/// Placement of evaluation points within a unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLayout {
    /// g x g points with half-spacing inset from the cell edges.
    UniformGrid,
    /// Tensor grid of Chebyshev-Gauss nodes.
    TensorChebyshev,
}

/// One unit cell: a center plus `m` evaluation points sharing a layout that
/// is identical across cells up to translation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitCell {
    pub center: Point,
    pub points: Vec<Point>,
}

impl UnitCell {
    /// Offsets of the points from the cell center.
    pub fn offsets(&self) -> Vec<Point> {
        self.points.iter().map(|p| p.sub(self.center)).collect()
    }
}

/// The annular square frame `inner < ||x||_inf < outer` tiled by unit cells.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrameSpec {
    pub inner_half_width: f64,
    pub outer_half_width: f64,
}

/// Evaluation grid: cells in a fixed row-major order (by cell center y, then x),
/// each holding the same translated point layout. Global point index is
/// `cell_index * points_per_cell + local_index`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalGrid {
    cells: Vec<UnitCell>,
    points_per_cell: usize,
    cell_size: f64,
    layout: CellLayout,
    frame: FrameSpec,
}

impl EvalGrid {
    pub fn cells(&self) -> &[UnitCell] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    pub fn num_points(&self) -> usize {
        self.cells.len() * self.points_per_cell
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn layout(&self) -> CellLayout {
        self.layout
    }

    pub fn frame(&self) -> FrameSpec {
        self.frame
    }

    /// All evaluation points in global order.
    pub fn all_points(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.num_points());
        for cell in &self.cells {
            out.extend_from_slice(&cell.points);
        }
        out
    }

    /// Cells whose square touches the inner frame boundary (the ring nearest
    /// the scatterer).
    pub fn inner_ring_cells(&self) -> Vec<usize> {
        let half = 0.5 * self.cell_size;
        let inner = self.frame.inner_half_width;
        (0..self.cells.len())
            .filter(|&i| {
                let c = self.cells[i].center;
                (c.norm_inf() - half - inner).abs() < 1e-9 * self.cell_size
            })
            .collect()
    }
}

fn local_offsets(cell_size: f64, points_per_cell: usize, layout: CellLayout) -> Result<Vec<Point>> {
    let g = (points_per_cell as f64).sqrt().round() as usize;
    if g * g != points_per_cell {
        return Err(Error::InvalidArgument(format!(
            "points_per_cell must be a perfect square for grid layouts, got {points_per_cell}"
        )));
    }
    let nodes: Vec<f64> = match layout {
        CellLayout::UniformGrid => (0..g).map(|i| (i as f64 + 0.5) / g as f64 - 0.5).collect(),
        CellLayout::TensorChebyshev => (0..g)
            .map(|i| -0.5 * (PI * (2.0 * i as f64 + 1.0) / (2.0 * g as f64)).cos())
            .collect(),
    };
    let mut out = Vec::with_capacity(points_per_cell);
    for iy in 0..g {
        for ix in 0..g {
            out.push(Point::new(cell_size * nodes[ix], cell_size * nodes[iy]));
        }
    }
    Ok(out)
}

/// Tile the frame with square cells of side `cell_size`, each carrying
/// `points_per_cell` points in the given layout.
pub fn build_eval_grid(
    frame: FrameSpec,
    cell_size: f64,
    points_per_cell: usize,
    layout: CellLayout,
) -> Result<EvalGrid> {
    let FrameSpec {
        inner_half_width: inner,
        outer_half_width: outer,
    } = frame;
    if !(cell_size > 0.0) || !(inner > 0.0) || outer <= inner {
        return Err(Error::InvalidArgument(format!(
            "frame must satisfy 0 < inner < outer with positive cell size (inner={inner}, outer={outer}, cell={cell_size})"
        )));
    }
    let fits = |span: f64| {
        let n = span / cell_size;
        (n - n.round()).abs() < 1e-9 && n.round() >= 1.0
    };
    if !fits(outer - inner) || !fits(2.0 * inner) {
        return Err(Error::InvalidArgument(format!(
            "cells of size {cell_size} do not tile the frame [{inner}, {outer}] exactly"
        )));
    }
    let offsets = local_offsets(cell_size, points_per_cell, layout)?;
    let n_across = (2.0 * outer / cell_size).round() as i64;
    let mut centers = Vec::new();
    for iy in 0..n_across {
        for ix in 0..n_across {
            let lo = Point::new(
                -outer + ix as f64 * cell_size,
                -outer + iy as f64 * cell_size,
            );
            let inside_hole = lo.x > -inner - 1e-12
                && lo.x + cell_size < inner + 1e-12
                && lo.y > -inner - 1e-12
                && lo.y + cell_size < inner + 1e-12;
            if !inside_hole {
                centers.push(Point::new(lo.x + 0.5 * cell_size, lo.y + 0.5 * cell_size));
            }
        }
    }
    centers.sort_by(|a, b| (a.y, a.x).partial_cmp(&(b.y, b.x)).unwrap());
    let cells = centers
        .into_iter()
        .map(|c| UnitCell {
            center: c,
            points: offsets.iter().map(|o| c.add(*o)).collect(),
        })
        .collect();
    Ok(EvalGrid {
        cells,
        points_per_cell,
        cell_size,
        layout,
        frame,
    })
}

/// A virtual circle strictly enclosing a cell or cluster, discretized with
/// equispaced points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxySurface {
    pub center: Point,
    pub radius: f64,
    pub points: Vec<Point>,
}

impl ProxySurface {
    /// Outward unit normal at discretization point `i`.
    pub fn normal(&self, i: usize) -> Point {
        let p = self.points[i].sub(self.center);
        let r = p.norm();
        Point::new(p.x / r, p.y / r)
    }
}

fn proxy_circle(
    center: Point,
    radius: f64,
    n_points: usize,
    enclosed: &[Point],
) -> Result<ProxySurface> {
    if n_points < 4 || radius <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "proxy needs n_points >= 4 and a positive radius, got {n_points}, {radius}"
        )));
    }
    let circumradius = enclosed
        .iter()
        .map(|p| p.dist(center))
        .fold(0.0f64, f64::max);
    if radius <= circumradius {
        return Err(Error::Enclosure(format!(
            "proxy radius {radius:.6} does not strictly enclose points (circumradius {circumradius:.6})"
        )));
    }
    let points = (0..n_points)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n_points as f64;
            Point::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect();
    Ok(ProxySurface {
        center,
        radius,
        points,
    })
}

/// Proxy circle around a cluster of points: centered at their centroid with
/// radius = `radius_factor` times the mean bounding-box side length.
pub fn build_proxy(enclosed: &[Point], radius_factor: f64, n_points: usize) -> Result<ProxySurface> {
    if enclosed.is_empty() {
        return Err(Error::InvalidArgument("proxy needs enclosed points".into()));
    }
    if radius_factor <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "proxy factor must be positive, got {radius_factor}"
        )));
    }
    let n = enclosed.len() as f64;
    let mut center = Point::ORIGIN;
    let (mut lo, mut hi) = (enclosed[0], enclosed[0]);
    for p in enclosed {
        center.x += p.x / n;
        center.y += p.y / n;
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let size = 0.5 * ((hi.x - lo.x) + (hi.y - lo.y));
    proxy_circle(center, radius_factor * size, n_points, enclosed)
}

/// Proxy circle around a unit cell: centered at the cell center with radius
/// = `radius_factor` times the cell side length (the cell's bounding box,
/// not the point cloud's).
pub fn build_proxy_for_cell(
    cell: &UnitCell,
    cell_size: f64,
    radius_factor: f64,
    n_points: usize,
) -> Result<ProxySurface> {
    if cell_size <= 0.0 || radius_factor <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "cell proxy needs positive size and factor, got {cell_size}, {radius_factor}"
        )));
    }
    proxy_circle(
        cell.center,
        radius_factor * cell_size,
        n_points,
        &cell.points,
    )
}

/// Node of the binary cluster tree; leaves hold contiguous element ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterNode {
    pub start: usize,
    pub end: usize,
    pub children: Option<(usize, usize)>,
    pub level: usize,
}

impl ClusterNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// Binary tree over the contiguous boundary element index range, split by
/// bisection until leaves hold at most `leaf_size` elements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterTree {
    nodes: Vec<ClusterNode>,
    leaves: Vec<usize>,
    depth: usize,
}

impl ClusterTree {
    pub fn nodes(&self) -> &[ClusterNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &ClusterNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &ClusterNode {
        &self.nodes[0]
    }

    /// Leaf node ids enumerated left to right along the boundary.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Node ids at `level` (root is level 0), left to right.
    pub fn level_nodes(&self, level: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].level == level)
            .collect();
        out.sort_by_key(|&i| self.nodes[i].start);
        out
    }
}

pub fn build_cluster_tree(mesh: &BoundaryMesh, leaf_size: usize) -> Result<ClusterTree> {
    if leaf_size < 8 {
        return Err(Error::InvalidArgument(format!(
            "leaf_size must be at least 8, got {leaf_size}"
        )));
    }
    let n = mesh.len();
    let mut nodes = vec![ClusterNode {
        start: 0,
        end: n,
        children: None,
        level: 0,
    }];
    let mut stack = vec![0usize];
    let mut depth = 0;
    while let Some(id) = stack.pop() {
        let (start, end, level) = {
            let nd = &nodes[id];
            (nd.start, nd.end, nd.level)
        };
        depth = depth.max(level);
        if end - start <= leaf_size {
            continue;
        }
        let mid = start + (end - start).div_ceil(2);
        let left = nodes.len();
        nodes.push(ClusterNode {
            start,
            end: mid,
            children: None,
            level: level + 1,
        });
        let right = nodes.len();
        nodes.push(ClusterNode {
            start: mid,
            end,
            children: None,
            level: level + 1,
        });
        nodes[id].children = Some((left, right));
        stack.push(right);
        stack.push(left);
    }
    let mut leaves: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].is_leaf()).collect();
    leaves.sort_by_key(|&i| nodes[i].start);
    Ok(ClusterTree {
        nodes,
        leaves,
        depth,
    })
}
