//! Existence verdicts for the supremal problem with affine or piecewise-affine
//! boundary data.
//!
//! For affine data with gradient `xi0` the relaxed value is `v = f^lslc(xi0)`
//! and a minimizer exists iff `xi0 ∈ L_v(f) ∪ int L_v(f^lslc)`. The sampled
//! `L_v(f^lslc)` is the hull of the nodes with `f <= v + level tol`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{LevelConvexStatus, StrictnessReport};
use crate::envelope::{Certificate, GridEnvelope};
use crate::error::{Error, Result};
use crate::fields::{FieldKind, GridSpec, ScalarField};
use crate::geometry::{ConvexBody, PointLocation};
use crate::inclusion::PiecewiseAffineFunction;
use crate::tol::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    InLevelSetOfF,
    InteriorOfEnvelopeLevelSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Decision {
    Exists { branch: Branch },
    NotExists { nu: Vec<f64>, strictness: StrictnessReport },
    Unknown { reason: String },
}

impl Decision {
    pub fn is_exists(&self) -> bool {
        matches!(self, Decision::Exists { .. })
    }

    pub fn is_not_exists(&self) -> bool {
        matches!(self, Decision::NotExists { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Decision::Unknown { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Decision::Exists { .. } => "exists",
            Decision::NotExists { .. } => "not-exists",
            Decision::Unknown { .. } => "unknown",
        }
    }
}

/// Distances of the deciding quantities from their thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `f(xi0) - v`.
    pub level_gap: f64,
    /// Signed distance of `xi0` to the boundary of the sampled `L_v(f^lslc)`.
    pub depth: f64,
    /// Distance below which `xi0` counts as on the boundary.
    pub boundary_tol: f64,
    pub level_tol: f64,
    /// Largest grid spacing in 2D (zero in 1D); interior depths below it are not resolved.
    pub grid_resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceVerdict {
    pub xi0: Vec<f64>,
    pub field_value: f64,
    pub relaxed_value: f64,
    pub decision: Decision,
    pub margins: Margins,
    pub certificate: Certificate,
    pub grid: GridSpec,
}

fn require_coercive(field: &ScalarField) -> Result<()> {
    if matches!(field.kind(), FieldKind::Analytic(_)) && field.coercivity().is_none() {
        return Err(Error::NotCoercive);
    }
    Ok(())
}

/// Envelope-backed decision procedure, reusable across many `xi0`.
#[derive(Debug, Clone)]
pub struct Decider {
    env: GridEnvelope,
    tol: ToleranceConfig,
}

impl Decider {
    pub fn new(field: &ScalarField, grid: &GridSpec, tol: &ToleranceConfig) -> Result<Self> {
        require_coercive(field)?;
        Ok(Self {
            env: GridEnvelope::build(field, grid, tol)?,
            tol: *tol,
        })
    }

    pub fn envelope(&self) -> &GridEnvelope {
        &self.env
    }

    pub fn relaxed_value(&self, xi0: &[f64]) -> Result<(f64, Certificate)> {
        self.env.certified_value_at(xi0)
    }

    /// Sampled `L_v(f^lslc)`.
    pub fn envelope_level_hull(&self, v: f64) -> Option<&ConvexBody> {
        self.env.sublevel_hull(v)
    }

    pub fn decide(&self, xi0: &[f64]) -> Result<ExistenceVerdict> {
        let field = self.env.field();
        if xi0.len() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                got: xi0.len(),
            });
        }
        let fx = field.eval(xi0)?;
        let (v, certificate) = self.relaxed_value(xi0)?;
        let ltol = self.tol.level;
        let mf = self.tol.margin_factor;
        let gap = fx - v;
        let body = self.envelope_level_hull(v);
        let (depth, eps) = body.map_or((f64::NEG_INFINITY, 0.0), |b| {
            let d = if b.is_degenerate() {
                b.depth(xi0).min(0.0)
            } else {
                b.depth(xi0)
            };
            (d, b.effective_tol())
        });
        // In 1D every point of the open envelope interval is interior, so only
        // 2D verdicts carry the resolution band.
        let grid = self.env.grid();
        let h = match grid.dim() {
            1 => 0.0,
            _ => (0..2).map(|k| grid.spacing(k)).fold(0.0, f64::max),
        };
        let margins = Margins {
            level_gap: gap,
            depth,
            boundary_tol: eps,
            level_tol: ltol,
            grid_resolution: h,
        };
        let decision = if gap <= ltol {
            Decision::Exists {
                branch: Branch::InLevelSetOfF,
            }
        } else if depth > (mf * eps).max(h) {
            Decision::Exists {
                branch: Branch::InteriorOfEnvelopeLevelSet,
            }
        } else if depth > mf * eps {
            // A sampled level set may miss the continuum one by up to a grid step.
            Decision::Unknown {
                reason: format!("xi0 lies {depth:e} inside the envelope level set, within one grid spacing {h:e}"),
            }
        } else if depth > eps {
            Decision::Unknown {
                reason: format!("xi0 lies {depth:e} inside the envelope level set, within {mf} boundary tolerances"),
            }
        } else if gap <= mf * ltol {
            Decision::Unknown {
                reason: format!("f(xi0) exceeds the relaxed value by only {gap:e}"),
            }
        } else {
            match body {
                Some(b) if b.locate(xi0) == PointLocation::Boundary => Decision::NotExists {
                    nu: b.separating_direction(xi0)?,
                    strictness: StrictnessReport::from_hull(b, xi0, LevelConvexStatus::ByConstruction)?,
                },
                _ => Decision::Unknown {
                    reason: "xi0 is not in the sampled envelope level set".into(),
                },
            }
        };
        Ok(ExistenceVerdict {
            xi0: xi0.to_vec(),
            field_value: fx,
            relaxed_value: v,
            decision,
            margins,
            certificate,
            grid: self.env.grid().clone(),
        })
    }
}

/// `f^lslc(xi0)` with its certificate.
pub fn relaxed_value_affine(
    field: &ScalarField,
    xi0: &[f64],
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<(f64, Certificate)> {
    Decider::new(field, grid, tol)?.relaxed_value(xi0)
}

pub fn decide_affine(
    field: &ScalarField,
    xi0: &[f64],
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<ExistenceVerdict> {
    Decider::new(field, grid, tol)?.decide(xi0)
}

/// Decides every point of `points` against one envelope.
pub fn sweep(
    field: &ScalarField,
    points: &[Vec<f64>],
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<Vec<ExistenceVerdict>> {
    let decider = Decider::new(field, grid, tol)?;
    points.par_iter().map(|p| decider.decide(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    /// Cell index, `None` for the residual set carrying `xi0`.
    pub cell: Option<usize>,
    pub gradient: Vec<f64>,
    pub field_value: f64,
    pub in_level_set: bool,
    pub in_envelope_interior: bool,
}

impl CellCheck {
    pub fn pass(&self) -> bool {
        self.in_level_set || self.in_envelope_interior
    }
}

/// A connected component of the sampled set `{f^lslc < f}` and the spread of
/// the envelope over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFlatness {
    pub nodes: usize,
    pub min_envelope: f64,
    pub max_envelope: f64,
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum GeneralDecision {
    /// Every gradient satisfies the sufficient condition.
    SufficientExists,
    Unknown {
        failing_cells: Vec<Option<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralVerdict {
    pub relaxed_value: f64,
    pub decision: GeneralDecision,
    pub cells: Vec<CellCheck>,
    pub components: Vec<ComponentFlatness>,
}

/// Checks every cell gradient of `u0` against `L_v(f) ∪ int L_v(f^lslc)`
/// for the supplied relaxed value `v`.
pub fn decide_general(
    field: &ScalarField,
    u0: &PiecewiseAffineFunction,
    relaxed_value: f64,
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<GeneralVerdict> {
    if u0.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: u0.dim(),
        });
    }
    let decider = Decider::new(field, grid, tol)?;
    let body = decider.envelope_level_hull(relaxed_value);
    let check = |cell: Option<usize>, g: Vec<f64>| -> Result<CellCheck> {
        let fv = field.eval(&g)?;
        let interior = body.is_some_and(|b| !b.is_degenerate() && b.depth(&g) > tol.margin_factor * b.effective_tol());
        Ok(CellCheck {
            cell,
            field_value: fv,
            in_level_set: fv <= relaxed_value + tol.level,
            in_envelope_interior: interior,
            gradient: g,
        })
    };
    let mut cells = (0..u0.cell_count())
        .map(|k| check(Some(k), u0.cell_gradient(k)))
        .collect::<Result<Vec<_>>>()?;
    if u0.residual_fraction() > 0.0 {
        cells.push(check(None, u0.datum().xi0.clone())?);
    }
    let failing: Vec<Option<usize>> = cells.iter().filter(|c| !c.pass()).map(|c| c.cell).collect();
    Ok(GeneralVerdict {
        relaxed_value,
        decision: if failing.is_empty() {
            GeneralDecision::SufficientExists
        } else {
            GeneralDecision::Unknown { failing_cells: failing }
        },
        cells,
        components: flatness_components(decider.envelope(), tol)?,
    })
}

/// Grid-connected components of `{f^lslc < f - level tol}`.
fn flatness_components(env: &GridEnvelope, tol: &ToleranceConfig) -> Result<Vec<ComponentFlatness>> {
    let grid = env.grid();
    let f = env.field_values();
    let e: Vec<f64> = (0..grid.len())
        .map(|i| env.value_at(&grid.node(i)))
        .collect::<Result<_>>()?;
    let in_k: Vec<bool> = (0..grid.len()).map(|i| e[i] < f[i] - tol.level).collect();
    let mut seen = vec![false; grid.len()];
    let mut out = Vec::new();
    for start in 0..grid.len() {
        if !in_k[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let (mut count, mut lo, mut hi) = (0, f64::INFINITY, f64::NEG_INFINITY);
        while let Some(i) = stack.pop() {
            count += 1;
            lo = lo.min(e[i]);
            hi = hi.max(e[i]);
            let m = grid.multi_index(i);
            for axis in 0..grid.dim() {
                for step in [-1i64, 1] {
                    let k = m[axis] as i64 + step;
                    if k < 0 || k >= grid.counts()[axis] as i64 {
                        continue;
                    }
                    let mut n = m.clone();
                    n[axis] = k as usize;
                    let j = grid.flat_index(&n);
                    if in_k[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(ComponentFlatness {
            nodes: count,
            min_envelope: lo,
            max_envelope: hi,
            flat: hi - lo <= tol.level,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub epsilon: f64,
    /// Direction whose half-ball `{<xi - xi0, nu> >= 0}` shows the least
    /// envelope variation.
    pub best_direction: Vec<f64>,
    pub half_ball_deviation: f64,
    pub half_ball_constant: bool,
    /// Direction of the segment through `xi0` with the least variation.
    pub line_direction: Vec<f64>,
    pub line_deviation: f64,
    pub line_constant: bool,
    /// Sample points dropped for lying outside the grid window.
    pub skipped: usize,
}

const FAN: usize = 72;
const RINGS: usize = 8;

/// Searches a fan of unit directions for a half-ball of radius `eps` on which
/// the envelope is constant.
pub fn flatness_necessary_check(
    field: &ScalarField,
    xi0: &[f64],
    eps: f64,
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<FlatnessReport> {
    let decider = Decider::new(field, grid, tol)?;
    let env = decider.envelope();
    let v0 = env.value_at(xi0)?;
    if field.eval(xi0)? - v0 <= tol.level {
        return Err(Error::NotApplicable("f equals its envelope at xi0".into()));
    }
    let dirs: Vec<Vec<f64>> = match xi0.len() {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..FAN)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / FAN as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
    };
    // samples on rays at RINGS radii, shared by all half-balls
    let mut samples: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut skipped = 0;
    for d in &dirs {
        for r in 1..=RINGS {
            let p: Vec<f64> = xi0
                .iter()
                .zip(d)
                .map(|(x, u)| x + eps * r as f64 / RINGS as f64 * u)
                .collect();
            if grid.contains(&p) {
                samples.push((p.clone(), env.value_at(&p)?));
            } else {
                skipped += 1;
            }
        }
    }
    let offset = |p: &[f64], nu: &[f64]| p.iter().zip(xi0).zip(nu).map(|((p, x), n)| (p - x) * n).sum::<f64>();
    let mut best = (f64::INFINITY, dirs[0].clone());
    let mut best_line = (f64::INFINITY, dirs[0].clone());
    for nu in &dirs {
        let dev = samples
            .iter()
            .filter(|(p, _)| offset(p, nu) >= -1e-12)
            .map(|(_, e)| (e - v0).abs())
            .fold(0.0, f64::max);
        if dev < best.0 {
            best = (dev, nu.clone());
        }
        let line = samples
            .iter()
            .filter(|(p, _)| {
                let along = offset(p, nu);
                let dist2: f64 = p.iter().zip(xi0).map(|(p, x)| (p - x).powi(2)).sum::<f64>() - along * along;
                dist2.abs() <= 1e-18_f64.max(1e-12 * eps * eps)
            })
            .map(|(_, e)| (e - v0).abs())
            .fold(0.0, f64::max);
        if line < best_line.0 {
            best_line = (line, nu.clone());
        }
    }
    Ok(FlatnessReport {
        epsilon: eps,
        half_ball_constant: best.0 <= tol.level,
        best_direction: best.1,
        half_ball_deviation: best.0,
        line_constant: best_line.0 <= tol.level,
        line_direction: best_line.1,
        line_deviation: best_line.0,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Uniqueness {
    /// The affine map is the only minimizer of the level-convex problem.
    UniqueAffine {
        alpha: Vec<f64>,
    },
    PossiblyNonUnique,
}

/// Uniqueness of the affine minimizer for a level-convex density.
pub fn uniqueness_probe(
    field: &ScalarField,
    xi0: &[f64],
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<Uniqueness> {
    Ok(
        match crate::convexity::strict_in_one_direction(field, xi0, grid, tol)? {
            Some(alpha) => Uniqueness::UniqueAffine { alpha },
            None => Uniqueness::PossiblyNonUnique,
        },
    )
}
