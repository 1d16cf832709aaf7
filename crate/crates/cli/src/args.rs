use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_list, parse_omega, parse_pair, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "supremal",
    version,
    about = "Envelopes, existence verdicts and minimizers for scalar supremal problems"
)]
pub struct Cli {
    /// TOML run configuration; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_geom: Option<f64>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_level: Option<f64>,
    /// Seed for randomized oracle restarts.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct FieldArgs {
    /// Builtin field name.
    #[arg(long, conflicts_with = "field")]
    pub builtin: Option<String>,
    /// JSON field file.
    #[arg(long, value_name = "FILE")]
    pub field: Option<PathBuf>,
    /// Grid nodes per axis.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Grid window `lo:hi`, applied to every axis.
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true)]
    pub window: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level-convex envelope on the grid.
    Envelope {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Existence verdict for the affine datum with gradient xi0.
    Decide {
        #[command(flatten)]
        field: FieldArgs,
        /// Datum gradient, comma separated.
        #[arg(long, value_name = "A[,B]", allow_hyphen_values = true)]
        xi0: Option<String>,
        /// Domain `a:b` or `x0:x1,y0:y1`.
        #[arg(long, value_name = "DOMAIN", allow_hyphen_values = true)]
        omega: Option<String>,
        /// Also run the minimax oracle (requires a seed).
        #[arg(long)]
        oracle: bool,
    },
    /// Explicit piecewise-affine minimizer.
    Solve {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_name = "A[,B]", allow_hyphen_values = true)]
        xi0: Option<String>,
        /// Constant term of the affine datum.
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        #[arg(long, value_name = "DOMAIN", allow_hyphen_values = true)]
        omega: Option<String>,
        /// Teeth of the 1D sawtooth (even).
        #[arg(long)]
        pieces: Option<usize>,
        /// Residual area fraction left uncovered in 2D.
        #[arg(long)]
        residual_tol: Option<f64>,
        /// Triangle budget in 2D.
        #[arg(long)]
        max_cells: Option<usize>,
        /// Diameter bound on placed copies in 2D.
        #[arg(long)]
        max_diameter: Option<f64>,
    },
    /// Audits a mesh against the field and the supremal Jensen inequality.
    Verify {
        #[command(flatten)]
        field: FieldArgs,
        /// Mesh file (default OUT/mesh.json).
        #[arg(long, value_name = "FILE")]
        mesh: Option<PathBuf>,
        /// Bound to audit against (default the relaxed value at the mesh datum).
        #[arg(long, allow_hyphen_values = true)]
        claimed: Option<f64>,
    },
    /// Verdicts over a lattice of xi0 (a square lattice in 2D).
    Sweep {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_name = "A:B", allow_hyphen_values = true)]
        range: Option<String>,
        /// Lattice points per axis.
        #[arg(long)]
        steps: Option<usize>,
    },
}

impl Cli {
    /// The config file (if any) with every given flag written over it.
    pub fn merged_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if let Some(g) = self.tol_geom {
            cfg.tolerances.geom = g;
        }
        if let Some(l) = self.tol_level {
            cfg.tolerances.level = l;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        let field = match &self.command {
            Command::Envelope { field }
            | Command::Decide { field, .. }
            | Command::Solve { field, .. }
            | Command::Verify { field, .. }
            | Command::Sweep { field, .. } => field,
        };
        if field.builtin.is_some() || field.field.is_some() {
            cfg.field.builtin = field.builtin.clone();
            cfg.field.file = field.field.clone();
        }
        if field.grid.is_some() {
            cfg.grid.nodes = field.grid;
        }
        if let Some(w) = &field.window {
            cfg.grid.window = Some(parse_pair(w)?);
        }
        match &self.command {
            Command::Envelope { .. } => {}
            Command::Decide { xi0, omega, oracle, .. } => {
                set_xi0(&mut cfg, xi0)?;
                set_omega(&mut cfg, omega)?;
                cfg.oracle.enabled |= *oracle;
            }
            Command::Solve {
                xi0,
                offset,
                omega,
                pieces,
                residual_tol,
                max_cells,
                max_diameter,
                ..
            } => {
                set_xi0(&mut cfg, xi0)?;
                set_omega(&mut cfg, omega)?;
                if let Some(c) = offset {
                    cfg.datum.offset = *c;
                }
                if let Some(p) = pieces {
                    cfg.solve.pieces = *p;
                }
                if let Some(r) = residual_tol {
                    cfg.solve.vitali.residual_tol = *r;
                }
                if let Some(m) = max_cells {
                    cfg.solve.vitali.max_cells = *m;
                }
                if max_diameter.is_some() {
                    cfg.solve.vitali.max_diameter = *max_diameter;
                }
            }
            Command::Verify { mesh, claimed, .. } => {
                if mesh.is_some() {
                    cfg.datum.mesh = mesh.clone();
                }
                if claimed.is_some() {
                    cfg.datum.claimed = *claimed;
                }
            }
            Command::Sweep { range, steps, .. } => {
                if let Some(r) = range {
                    cfg.sweep.range = Some(parse_pair(r)?);
                }
                if steps.is_some() {
                    cfg.sweep.steps = *steps;
                }
            }
        }
        Ok(cfg)
    }
}

fn set_xi0(cfg: &mut RunConfig, xi0: &Option<String>) -> Result<()> {
    if let Some(x) = xi0 {
        cfg.datum.xi0 = Some(parse_list(x)?);
    }
    Ok(())
}

fn set_omega(cfg: &mut RunConfig, omega: &Option<String>) -> Result<()> {
    if let Some(o) = omega {
        cfg.omega = Some(parse_omega(o)?);
    }
    Ok(())
}
