//! Experiment configuration: a TOML file with CLI flag overrides on top.
//! Defaults reproduce the benchmark configuration (dielectric circle of
//! radius 0.99 in a 32-cell frame, 12800 boundary elements).

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluator::Method;
use crate::geometry::CellLayout;
use crate::skeleton::{Scheme, Variant};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScattererConfig {
    pub center: [f64; 2],
    pub radius: f64,
    pub n_elements: usize,
}

impl Default for ScattererConfig {
    fn default() -> Self {
        Self {
            center: [0.0, 0.0],
            radius: 0.99,
            n_elements: 12800,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    pub omega: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            omega: 10.0,
            eps1: 1.0,
            eps2: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub inner_half_width: f64,
    pub outer_half_width: f64,
    pub cell_size: f64,
    pub points_per_cell: usize,
    pub layout: CellLayout,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            inner_half_width: 1.0,
            outer_half_width: 3.0,
            cell_size: 1.0,
            points_per_cell: 100,
            layout: CellLayout::UniformGrid,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XSideConfig {
    pub tol: f64,
    pub proxy_factor: f64,
    pub n_proxy: usize,
}

impl Default for XSideConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            proxy_factor: 1.5,
            n_proxy: 64,
        }
    }
}

/// Shared y-side geometry knobs plus optional overrides of the per-method
/// defaults (fast_uv: original/multi-level at 1e-12; fast_uv_vtailored:
/// tailored/single-level at 1e-10).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YSideConfig {
    pub leaf_size: usize,
    pub proxy_factor: f64,
    pub n_proxy: usize,
    pub tol: Option<f64>,
    pub variant: Option<Variant>,
    pub scheme: Option<Scheme>,
}

impl Default for YSideConfig {
    fn default() -> Self {
        Self {
            leaf_size: 200,
            proxy_factor: 1.5,
            n_proxy: 64,
            tol: None,
            variant: None,
            scheme: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub repeat: usize,
    /// Worker thread cap; 0 keeps the default pool.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: vec![
                Method::Conv,
                Method::FastU,
                Method::FastUv,
                Method::FastUvVtailored,
            ],
            repeat: 1,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub out_dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scatterer: ScattererConfig,
    pub medium: MediumConfig,
    pub grid: GridConfig,
    pub x_side: XSideConfig,
    pub y_side: YSideConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

/// Resolved y-side plan for one Eq.(12)-style method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YPlan {
    pub tol: f64,
    pub variant: Variant,
    pub scheme: Scheme,
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Field-precise validation of everything the builders rely on.
    pub fn validate(&self) -> Result<()> {
        let c = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::Config(msg)) };
        c(
            self.scatterer.radius > 0.0,
            format!("scatterer.radius must be positive, got {}", self.scatterer.radius),
        )?;
        c(
            self.scatterer.n_elements >= 4,
            format!(
                "scatterer.n_elements must be at least 4, got {}",
                self.scatterer.n_elements
            ),
        )?;
        c(
            self.medium.omega > 0.0 && self.medium.eps1 > 0.0 && self.medium.eps2 > 0.0,
            format!(
                "medium parameters must be positive (omega={}, eps1={}, eps2={})",
                self.medium.omega, self.medium.eps1, self.medium.eps2
            ),
        )?;
        let reach = self.scatterer.center[0]
            .abs()
            .max(self.scatterer.center[1].abs())
            + self.scatterer.radius;
        c(
            reach <= self.grid.inner_half_width + 1e-12,
            format!(
                "grid.inner_half_width = {} does not exclude the scatterer (reach {reach})",
                self.grid.inner_half_width
            ),
        )?;
        c(
            self.x_side.tol > 0.0 && self.x_side.tol < 1.0,
            format!("x_side.tol must lie in (0, 1), got {}", self.x_side.tol),
        )?;
        if let Some(t) = self.y_side.tol {
            c(
                t > 0.0 && t < 1.0,
                format!("y_side.tol must lie in (0, 1), got {t}"),
            )?;
        }
        c(
            self.x_side.n_proxy >= 4 && self.y_side.n_proxy >= 4,
            format!(
                "proxy discretizations need at least 4 points (x: {}, y: {})",
                self.x_side.n_proxy, self.y_side.n_proxy
            ),
        )?;
        c(
            self.x_side.proxy_factor > 0.0 && self.y_side.proxy_factor > 0.0,
            "proxy factors must be positive".into(),
        )?;
        c(
            self.y_side.leaf_size >= 8,
            format!("y_side.leaf_size must be at least 8, got {}", self.y_side.leaf_size),
        )?;
        c(
            !self.run.methods.is_empty(),
            "run.methods must not be empty".into(),
        )?;
        c(
            self.run.repeat >= 1,
            format!("run.repeat must be at least 1, got {}", self.run.repeat),
        )?;
        let ppc = self.grid.points_per_cell;
        let g = (ppc as f64).sqrt().round() as usize;
        c(
            g * g == ppc && ppc > 0,
            format!("grid.points_per_cell must be a positive perfect square, got {ppc}"),
        )?;
        // both Eq.(12) methods under a variant override would collapse to one label
        let uv = self.run.methods.contains(&Method::FastUv);
        let uvt = self.run.methods.contains(&Method::FastUvVtailored);
        if uv && uvt && self.y_side.variant.is_some() {
            return Err(Error::Config(
                "y_side.variant override makes fast_uv and fast_uv_vtailored identical; \
                 run them separately"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Per-method y-side configuration, applying any config overrides.
    pub fn y_plan(&self, method: Method) -> Result<YPlan> {
        let defaults = match method {
            Method::FastUv => YPlan {
                tol: 1e-12,
                variant: Variant::Original,
                scheme: Scheme::MultiLevel,
            },
            Method::FastUvVtailored => YPlan {
                tol: 1e-10,
                variant: Variant::Tailored,
                scheme: Scheme::SingleLevel,
            },
            other => {
                return Err(Error::Config(format!(
                    "method {other} does not take a y-side plan"
                )));
            }
        };
        Ok(YPlan {
            tol: self.y_side.tol.unwrap_or(defaults.tol),
            variant: self.y_side.variant.unwrap_or(defaults.variant),
            scheme: self.y_side.scheme.unwrap_or(defaults.scheme),
        })
    }
}
