//! Setup/config file loading.
//!
//! A single TOML file declares the part volume, the machining setup (platform,
//! fixtures, tools with their sharp points and rotation sets), and the
//! pipeline parameters. Volume paths are relative to the config file; every
//! volume must carry the spacing declared once at the top.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::Vector3;
use serde::Deserialize;

use nearnet_core::grid::Rotation;
use nearnet_core::machine::{default_sharp_points, orientation_set, uniform_2d_rotations};
use nearnet_core::orient::SamplingMode;
use nearnet_core::{
    io, FixtureConfig, IndicatorGrid, MachineSetup, OptimizeConfig, PlanConfig, Platform,
    ToolAssembly,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Lattice spacing every referenced volume must match (mm).
    pub spacing: f64,
    pub part: PartSection,
    pub platform: PlatformSection,
    #[serde(default)]
    pub fixtures: Vec<FixtureSection>,
    pub tools: Vec<ToolSection>,
    #[serde(default)]
    pub params: ParamsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSection {
    pub volume: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSection {
    /// Slab thickness in cells, generated under the near-net bounding box.
    pub layers: Option<usize>,
    /// Explicit platform geometry instead of a slab.
    pub volume: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSection {
    pub name: String,
    /// Omitted volume means machining without a fixture body.
    pub volume: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolSection {
    pub name: String,
    pub holder: PathBuf,
    pub cutter: PathBuf,
    /// Automatic sharp-point count; ignored when `points` is given.
    #[serde(default = "default_sharp_count")]
    pub sharp_points: usize,
    /// Explicit sharp points as cutter-lattice cell indices.
    pub points: Option<Vec<[usize; 3]>>,
    /// Either "uniform2d:N" or a list of axis/angle entries.
    pub rotations: RotationSpec,
}

fn default_sharp_count() -> usize {
    10
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RotationSpec {
    Named(String),
    List(Vec<AxisAngle>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub alpha_deg: f64,
    pub lambda: f64,
    pub w_acc: f64,
    pub samples: usize,
    pub keep: usize,
    pub sampling: String,
    pub halt_fraction: f64,
    pub roll_steps: usize,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            alpha_deg: 45.0,
            lambda: 1e-3,
            w_acc: 0.5,
            samples: 100,
            keep: 5,
            sampling: "sphere_fibonacci".into(),
            halt_fraction: 5e-3,
            roll_steps: 1,
        }
    }
}

/// Everything a command needs, loaded and validated.
pub struct LoadedSetup {
    pub part: IndicatorGrid,
    pub setup: MachineSetup,
    pub params: ParamsSection,
}

pub fn load(path: &Path) -> Result<LoadedSetup> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg: ConfigFile =
        toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    if !(cfg.spacing > 0.0) {
        bail!("spacing must be > 0");
    }
    let base = path.parent().unwrap_or(Path::new("."));

    let part = load_volume(base, &cfg.part.volume, cfg.spacing)?;

    let platform = match (&cfg.platform.layers, &cfg.platform.volume) {
        (Some(layers), None) => Platform::Slab { layers: *layers },
        (None, Some(vol)) => Platform::Grid(load_volume(base, vol, cfg.spacing)?),
        _ => bail!("platform needs exactly one of `layers` or `volume`"),
    };

    let mut fixtures = Vec::new();
    for f in &cfg.fixtures {
        let body = match &f.volume {
            Some(vol) => load_volume(base, vol, cfg.spacing)?,
            None => IndicatorGrid::empty(part.lattice().clone()),
        };
        fixtures.push(FixtureConfig::new(f.name.clone(), body));
    }
    if fixtures.is_empty() {
        // no fixturing section: machine in free space
        fixtures.push(FixtureConfig::new(
            "none",
            IndicatorGrid::empty(part.lattice().clone()),
        ));
    }

    let mut tools = Vec::new();
    for t in &cfg.tools {
        let holder = load_volume(base, &t.holder, cfg.spacing)?;
        let cutter = load_volume(base, &t.cutter, cfg.spacing)?;
        let rotations = parse_rotations(&t.rotations)
            .with_context(|| format!("tool {:?} rotations", t.name))?;
        let points = match &t.points {
            Some(p) => p.clone(),
            None => default_sharp_points(&holder, &cutter, t.sharp_points)
                .map_err(|e| anyhow!("tool {:?}: {e}", t.name))?,
        };
        tools.push(
            ToolAssembly::new(t.name.clone(), holder, cutter, points, rotations)
                .map_err(|e| anyhow!("tool {:?}: {e}", t.name))?,
        );
    }

    let setup = MachineSetup::new(platform, fixtures, tools)?;
    Ok(LoadedSetup {
        part,
        setup,
        params: cfg.params,
    })
}

fn load_volume(base: &Path, rel: &Path, spacing: f64) -> Result<IndicatorGrid> {
    let path = if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        base.join(rel)
    };
    let grid = io::read_indicator::<f64>(&path)
        .with_context(|| format!("loading volume {}", path.display()))?;
    let got = grid.lattice().spacing();
    if (got - spacing).abs() > 1e-9 * spacing {
        bail!(
            "{}: spacing {} does not match the declared {}",
            path.display(),
            got,
            spacing
        );
    }
    Ok(grid)
}

fn parse_rotations(spec: &RotationSpec) -> Result<Vec<Rotation<f64>>> {
    match spec {
        RotationSpec::Named(s) => {
            let rest = s.strip_prefix("uniform2d:").ok_or_else(|| {
                anyhow!("unknown rotation spec {s:?}; use \"uniform2d:N\" or a list")
            })?;
            let n: usize = rest
                .parse()
                .with_context(|| format!("bad count in {s:?}"))?;
            Ok(uniform_2d_rotations(n)?)
        }
        RotationSpec::List(list) => {
            let pairs: Vec<(Vector3<f64>, f64)> = list
                .iter()
                .map(|aa| {
                    (
                        Vector3::new(aa.axis[0], aa.axis[1], aa.axis[2]),
                        aa.deg.to_radians(),
                    )
                })
                .collect();
            Ok(orientation_set(&pairs)?)
        }
    }
}

impl ParamsSection {
    pub fn sampling_mode(&self) -> Result<SamplingMode> {
        match self.sampling.as_str() {
            "sphere_fibonacci" => Ok(SamplingMode::SphereFibonacci),
            "circle_uniform" => Ok(SamplingMode::CircleUniform),
            other => bail!("unknown sampling mode {other:?}"),
        }
    }

    pub fn optimize_config(&self) -> Result<OptimizeConfig> {
        Ok(OptimizeConfig {
            w_acc: self.w_acc,
            n_b: self.samples,
            n_b_star: self.keep,
            lambda: self.lambda,
            alpha_deg: self.alpha_deg,
            sampling: self.sampling_mode()?,
            roll_steps: self.roll_steps,
        })
    }

    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig {
            lambda: self.lambda,
            halt_fraction: self.halt_fraction,
        }
    }
}
