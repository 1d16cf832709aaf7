//! Run configuration: a TOML file overlaid by command-line flags, validated
//! into a [`Resolved`] before any computation starts.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use supremal::{builtin, DescentOptions, Domain, GridSpec, ScalarField, SolveOptions, ToleranceConfig};

pub const DEFAULT_WINDOW: [f64; 2] = [-2.0, 2.0];
pub const DEFAULT_NODES_1D: usize = 401;
pub const DEFAULT_NODES_2D: usize = 65;
pub const DEFAULT_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub datum: DatumConfig,
    pub omega: Option<Domain>,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

/// Exactly one of `builtin` and `file` must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub builtin: Option<String>,
    /// JSON field file.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Nodes per axis.
    pub nodes: Option<usize>,
    /// Per-axis interval `[lo, hi]`.
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    pub xi0: Option<Vec<f64>>,
    #[serde(default)]
    pub offset: f64,
    /// Mesh file checked by `verify`.
    pub mesh: Option<PathBuf>,
    /// Bound checked by `verify`; defaults to the relaxed value at the mesh datum.
    pub claimed: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub range: Option<[f64; 2]>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub enabled: bool,
    /// Segments of the 1D sawtooth.
    pub segments: usize,
    /// Options of the 2D descent; its seed is replaced by the top-level seed.
    pub descent: DescentOptions,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            segments: DEFAULT_SEGMENTS,
            descent: DescentOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// What a subcommand needs beyond the field and grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    Nothing,
    Xi0,
    Sweep,
    Mesh,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub field: ScalarField,
    pub grid: GridSpec,
    pub tol: ToleranceConfig,
    pub omega: Domain,
    pub xi0: Option<Vec<f64>>,
    pub offset: f64,
    pub solve: SolveOptions,
    pub sweep_points: Vec<Vec<f64>>,
    pub mesh: PathBuf,
    pub claimed: Option<f64>,
    pub oracle: Option<OracleConfig>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(&self, needs: Needs) -> Result<Resolved> {
        let field = self.load_field()?;
        let dim = field.dim();
        let grid = self.grid_for(&field)?;
        let tol = check_tolerances(self.tolerances)?;
        let omega = match &self.omega {
            Some(d) if d.dim() != dim => bail!("omega is {}-dimensional but the field is {dim}-dimensional", d.dim()),
            Some(d) => d.clone(),
            None if dim == 1 => Domain::interval(0.0, 1.0)?,
            None => Domain::unit_square(),
        };
        let xi0 = match &self.datum.xi0 {
            Some(x) if x.len() != dim => bail!("xi0 has {} components but the field is {dim}-dimensional", x.len()),
            Some(x) if x.iter().any(|v| !v.is_finite()) => bail!("xi0 must be finite"),
            other => other.clone(),
        };
        if needs == Needs::Xi0 && xi0.is_none() {
            bail!("xi0 is required (flag --xi0 or [datum] xi0)");
        }
        if !self.datum.offset.is_finite() {
            bail!("the datum offset must be finite");
        }
        let solve = check_solve(self.solve)?;
        let sweep_points = if needs == Needs::Sweep {
            self.sweep_points(dim)?
        } else {
            Vec::new()
        };
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        let mesh = self.datum.mesh.clone().unwrap_or_else(|| out.join("mesh.json"));
        if let Some(c) = self.datum.claimed {
            if !c.is_finite() {
                bail!("the claimed bound must be finite");
            }
        }
        let oracle = if self.oracle.enabled {
            let seed = self
                .seed
                .ok_or_else(|| anyhow!("the oracle needs a seed (flag --seed or top-level `seed`)"))?;
            if self.oracle.segments < 2 || !self.oracle.segments.is_multiple_of(2) {
                bail!("oracle segments must be even and at least 2");
            }
            let mut o = self.oracle.clone();
            o.descent.seed = seed;
            Some(o)
        } else {
            None
        };
        Ok(Resolved {
            field,
            grid,
            tol,
            omega,
            xi0,
            offset: self.datum.offset,
            solve,
            sweep_points,
            mesh,
            claimed: self.datum.claimed,
            oracle,
            out,
        })
    }

    fn load_field(&self) -> Result<ScalarField> {
        match (&self.field.builtin, &self.field.file) {
            (Some(name), None) => Ok(builtin(name)?),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing field file {}", path.display()))
            }
            (Some(_), Some(_)) => bail!("give either a builtin field or a field file, not both"),
            (None, None) => bail!("no field given (flag --builtin/--field or [field])"),
        }
    }

    /// A sampled field with no explicit grid is decided on its own sampling grid.
    fn grid_for(&self, field: &ScalarField) -> Result<GridSpec> {
        let dim = field.dim();
        if let (Some(g), None, None) = (field.grid(), self.grid.nodes, self.grid.window) {
            return Ok(g.clone());
        }
        let [lo, hi] = self.grid.window.unwrap_or(DEFAULT_WINDOW);
        let nodes = self
            .grid
            .nodes
            .unwrap_or(if dim == 1 { DEFAULT_NODES_1D } else { DEFAULT_NODES_2D });
        Ok(GridSpec::uniform(dim, lo, hi, nodes)?)
    }

    fn sweep_points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let [a, b] = self
            .sweep
            .range
            .ok_or_else(|| anyhow!("sweep needs a range (flag --range or [sweep] range)"))?;
        let steps = self
            .sweep
            .steps
            .ok_or_else(|| anyhow!("sweep needs a step count (flag --steps or [sweep] steps)"))?;
        if !(a.is_finite() && b.is_finite() && a < b) {
            bail!("sweep range needs finite a < b");
        }
        if steps < 2 {
            bail!("sweep needs at least 2 steps");
        }
        let line: Vec<f64> = (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    b
                } else {
                    a + (b - a) * (i as f64 / (steps - 1) as f64)
                }
            })
            .collect();
        Ok(match dim {
            1 => line.iter().map(|&s| vec![s]).collect(),
            _ => line
                .iter()
                .flat_map(|&s| line.iter().map(move |&t| vec![s, t]))
                .collect(),
        })
    }
}

fn check_tolerances(t: ToleranceConfig) -> Result<ToleranceConfig> {
    let positive = [t.geom, t.level, t.edge_threshold, t.exposure_angle];
    if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        bail!("tolerances must be finite and positive");
    }
    if !(t.margin_factor.is_finite() && t.margin_factor >= 1.0) {
        bail!("margin_factor must be at least 1");
    }
    Ok(t)
}

fn check_solve(s: SolveOptions) -> Result<SolveOptions> {
    if s.pieces < 2 || !s.pieces.is_multiple_of(2) {
        bail!("pieces must be even and at least 2");
    }
    let v = s.vitali;
    if !(v.residual_tol.is_finite() && v.residual_tol > 0.0 && v.residual_tol < 1.0) {
        bail!("residual_tol must lie in (0, 1)");
    }
    if v.max_cells == 0 {
        bail!("max_cells must be positive");
    }
    if let Some(d) = v.max_diameter {
        if !(d.is_finite() && d > 0.0) {
            bail!("max_diameter must be finite and positive");
        }
    }
    Ok(s)
}

/// `a:b` with finite ends.
pub fn parse_pair(text: &str) -> Result<[f64; 2]> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("expected `a:b`, got `{text}`"))?;
    Ok([parse_num(a)?, parse_num(b)?])
}

/// Comma-separated numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_num).collect()
}

/// `a:b` for an interval, `x0:x1,y0:y1` for a rectangle.
pub fn parse_omega(text: &str) -> Result<Domain> {
    match text.split_once(',') {
        None => {
            let [a, b] = parse_pair(text)?;
            Ok(Domain::interval(a, b)?)
        }
        Some((x, y)) => {
            let [x0, x1] = parse_pair(x)?;
            let [y0, y1] = parse_pair(y)?;
            Ok(Domain::square([x0, y0], [x1, y1])?)
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        bail!("`{s}` is not finite");
    }
    Ok(v)
}
