use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::fusion::ScaleSchedule;
use crate::metrics::{AggregationOrder, BoundaryParams, FrameExclusion};
use crate::morphology::{SeShape, StructuringElement};
use crate::postprocess::GapFillConfig;

use super::{CliError, CommonArgs};

/// Every knob a batch command can read. Defaults follow the best settings
/// reported for the method: square radius 2 and seven scales from 1 to 1.75.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input_roots: Vec<PathBuf>,
    pub output_root: Option<PathBuf>,
    pub gt_root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub kernel_radius: usize,
    pub se_shape: SeShape,
    pub fill_background_only: bool,
    pub scales: ScaleSchedule,
    pub boundary: BoundaryParams,
    pub exclusion: FrameExclusion,
    pub aggregation: AggregationOrder,
    pub worker_count: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_roots: Vec::new(),
            output_root: None,
            gt_root: None,
            manifest: None,
            report: None,
            kernel_radius: 2,
            se_shape: SeShape::Square,
            fill_background_only: true,
            scales: ScaleSchedule::default(),
            boundary: BoundaryParams::default(),
            exclusion: FrameExclusion::default(),
            aggregation: AggregationOrder::Hierarchical,
            worker_count: default_workers(),
            seed: 0,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Optional `key = value` (TOML) file; any key may be omitted.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    input: Option<Vec<PathBuf>>,
    output: Option<PathBuf>,
    gt: Option<PathBuf>,
    manifest: Option<PathBuf>,
    report: Option<PathBuf>,
    kernel_radius: Option<usize>,
    se_shape: Option<SeShape>,
    fill_background_only: Option<bool>,
    scales: Option<ScaleSchedule>,
    tolerance_fraction: Option<f64>,
    min_tolerance_px: Option<usize>,
    exclude_first_frame: Option<bool>,
    exclude_last_frame: Option<bool>,
    aggregation: Option<AggregationOrder>,
    workers: Option<usize>,
    seed: Option<u64>,
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::bad_args(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::bad_args(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Config file first, then command-line flags on top.
    pub fn resolve(args: &CommonArgs) -> Result<RunConfig, CliError> {
        let file = match &args.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };
        let mut cfg = RunConfig::default();

        macro_rules! layer {
            ($field:ident, $file:expr, $flag:expr) => {
                if let Some(v) = $file {
                    cfg.$field = v;
                }
                if let Some(v) = $flag {
                    cfg.$field = v;
                }
            };
        }

        if let Some(v) = file.input {
            cfg.input_roots = v;
        }
        if !args.input.is_empty() {
            cfg.input_roots = args.input.clone();
        }
        cfg.output_root = args.output.clone().or(file.output);
        cfg.gt_root = args.gt.clone().or(file.gt);
        cfg.manifest = args.manifest.clone().or(file.manifest);
        cfg.report = args.report.clone().or(file.report);
        layer!(kernel_radius, file.kernel_radius, args.kernel_radius);
        layer!(se_shape, file.se_shape, args.se_shape);
        layer!(fill_background_only, file.fill_background_only, args.fill_background_only);
        layer!(aggregation, file.aggregation, args.aggregation);
        layer!(worker_count, file.workers, args.workers);
        layer!(seed, file.seed, args.seed);
        if let Some(s) = file.scales {
            cfg.scales = s;
        }
        if let Some(s) = &args.scales {
            cfg.scales = s.parse().map_err(|e| CliError::bad_args(format!("--scales: {e}")))?;
        }

        let fraction = args
            .tolerance_fraction
            .or(file.tolerance_fraction)
            .unwrap_or(cfg.boundary.tolerance_fraction);
        let min_px = args
            .min_tolerance_px
            .or(file.min_tolerance_px)
            .unwrap_or(cfg.boundary.min_tolerance_px);
        cfg.boundary =
            BoundaryParams::new(fraction, min_px).map_err(|e| CliError::bad_args(e.to_string()))?;
        if let Some(v) = args.exclude_first_frame.or(file.exclude_first_frame) {
            cfg.exclusion.first = v;
        }
        if let Some(v) = args.exclude_last_frame.or(file.exclude_last_frame) {
            cfg.exclusion.last = v;
        }

        if cfg.worker_count == 0 {
            return Err(CliError::bad_args("--workers must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn se(&self) -> StructuringElement {
        StructuringElement::new(self.se_shape, self.kernel_radius)
    }

    pub fn gap_fill(&self) -> GapFillConfig {
        GapFillConfig {
            se: self.se(),
            fill_background_only: self.fill_background_only,
        }
    }

    pub(crate) fn require_input(&self) -> Result<&Path, CliError> {
        let p = self
            .input_roots
            .first()
            .ok_or_else(|| CliError::bad_args("--input is required"))?;
        require_dir(p)?;
        Ok(p)
    }

    pub(crate) fn require_output(&self) -> Result<&Path, CliError> {
        self.output_root
            .as_deref()
            .ok_or_else(|| CliError::bad_args("--output is required"))
    }

    pub(crate) fn require_gt(&self) -> Result<&Path, CliError> {
        let p = self
            .gt_root
            .as_deref()
            .ok_or_else(|| CliError::bad_args("--gt is required"))?;
        require_dir(p)?;
        Ok(p)
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.worker_count)
            .build()
            .map_err(|e| CliError::internal(format!("could not start worker pool: {e}")))
    }
}

pub(crate) fn require_dir(p: &Path) -> Result<(), CliError> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(CliError::bad_args(format!("{}: no such directory", p.display())))
    }
}
