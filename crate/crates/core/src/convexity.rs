//! Sampled convexity classification of densities.
//!
//! All verdicts are computed on grid samples of the density and are labelled
//! as such. Sublevel membership uses `f <= c + level tol`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldKind, GridSpec, ScalarField};
use crate::geometry::{hull, ConvexBody, PointLocation};
use crate::tol::ToleranceConfig;

/// `f(t a + (1 - t) b) > max(f(a), f(b)) + level tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub mid_value: f64,
    pub end_value: f64,
}

impl Violation {
    pub fn point(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| self.t * a + (1.0 - self.t) * b)
            .collect()
    }

    pub fn gap(&self) -> f64 {
        self.mid_value - self.end_value
    }

    /// Re-evaluates the triple against `field`.
    pub fn replays(&self, field: &ScalarField, tol: &ToleranceConfig) -> Result<bool> {
        let mid = field.eval(&self.point())?;
        let end = field.eval(&self.a)?.max(field.eval(&self.b)?);
        Ok(mid > end + tol.level)
    }

    fn into_error(self) -> Error {
        let mid = self.point();
        Error::NotLevelConvex {
            a: self.a,
            b: self.b,
            mid,
            mid_value: self.mid_value,
            end_value: self.end_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConvexCheck {
    pub level_convex: bool,
    /// The violation with the largest gap; ties go to the lowest level, then to scan order.
    pub witness: Option<Violation>,
}

const FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// Index-space offset of `t a + (1 - t) b` from `b`, when it is a node.
fn snapped(ma: &[usize], mb: &[usize], quarters: usize) -> Option<Vec<usize>> {
    ma.iter()
        .zip(mb)
        .map(|(&a, &b)| {
            let d = (a as i64 - b as i64) * quarters as i64;
            (d % 4 == 0).then(|| (b as i64 + d / 4) as usize)
        })
        .collect()
}

/// Scans all node pairs at `t ∈ {1/4, 1/2, 3/4}`.
///
/// For sampled fields only intermediate points that are themselves nodes are
/// tested, so that interpolation artefacts are never reported.
pub fn check_level_convex(field: &ScalarField, grid: &GridSpec, tol: &ToleranceConfig) -> Result<LevelConvexCheck> {
    if grid.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: grid.dim(),
        });
    }
    let vals = field.sample_values(grid)?;
    let nodes = grid.nodes();
    let multi: Vec<Vec<usize>> = (0..grid.len()).map(|i| grid.multi_index(i)).collect();
    let sampled = matches!(field.kind(), FieldKind::Sampled { .. });
    let n = grid.len();
    let worst = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(f64, Violation)> = None;
            for j in i + 1..n {
                let end = vals[i].max(vals[j]);
                for (q, &t) in FRACTIONS.iter().enumerate() {
                    let mid_value = if sampled {
                        match snapped(&multi[i], &multi[j], q + 1) {
                            Some(m) => vals[grid.flat_index(&m)],
                            None => continue,
                        }
                    } else {
                        let p: Vec<f64> = nodes[i]
                            .iter()
                            .zip(&nodes[j])
                            .map(|(a, b)| t * a + (1.0 - t) * b)
                            .collect();
                        field.eval(&p)?
                    };
                    let gap = mid_value - end;
                    let better = |(g, v): &(f64, Violation)| gap > *g || (gap == *g && end < v.end_value);
                    if gap > tol.level && best.as_ref().is_none_or(better) {
                        best = Some((
                            gap,
                            Violation {
                                a: nodes[i].clone(),
                                b: nodes[j].clone(),
                                t,
                                mid_value,
                                end_value: end,
                            },
                        ));
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .fold(None::<(f64, Violation)>, |acc, cur| match acc {
            Some(a) if a.0 > cur.0 || (a.0 == cur.0 && a.1.end_value <= cur.1.end_value) => Some(a),
            _ => Some(cur),
        });
    Ok(match worst {
        Some((_, v)) => LevelConvexCheck {
            level_convex: false,
            witness: Some(v),
        },
        None => LevelConvexCheck {
            level_convex: true,
            witness: None,
        },
    })
}

fn require_level_convex(field: &ScalarField, grid: &GridSpec, tol: &ToleranceConfig) -> Result<()> {
    match check_level_convex(field, grid, tol)?.witness {
        Some(v) => Err(v.into_error()),
        None => Ok(()),
    }
}

/// Hull of the sampled sublevel set `{f <= f(xi0) + level tol}` together with `xi0`.
pub fn own_level_hull(field: &ScalarField, xi0: &[f64], grid: &GridSpec, tol: &ToleranceConfig) -> Result<ConvexBody> {
    let c = field.eval(xi0)?;
    let vals = field.sample_values(grid)?;
    let mut pts: Vec<Vec<f64>> = (0..grid.len())
        .filter(|&i| vals[i] <= c + tol.level)
        .map(|i| grid.node(i))
        .collect();
    pts.push(xi0.to_vec());
    hull(&pts, tol.geom)
}

/// Whether `xi0` is an extreme point of its own sampled sublevel set.
pub fn strict_at_point(field: &ScalarField, xi0: &[f64], grid: &GridSpec, tol: &ToleranceConfig) -> Result<bool> {
    require_level_convex(field, grid, tol)?;
    Ok(own_level_hull(field, xi0, grid, tol)?.is_extreme(xi0))
}

/// `Some(alpha)` when `xi0` lies on the boundary of its own sampled sublevel
/// set, with `alpha` the unit outward normal there; `None` when interior.
pub fn strict_in_one_direction(
    field: &ScalarField,
    xi0: &[f64],
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<Option<Vec<f64>>> {
    require_level_convex(field, grid, tol)?;
    direction_in(&own_level_hull(field, xi0, grid, tol)?, xi0)
}

fn direction_in(body: &ConvexBody, xi0: &[f64]) -> Result<Option<Vec<f64>>> {
    match body.locate(xi0) {
        PointLocation::Interior => Ok(None),
        _ => body.separating_direction(xi0).map(Some),
    }
}

/// Whether `f(t xi0 + (1 - t) xi) < max(f(xi0), f(xi))` for every node
/// `xi != xi0` and `t ∈ {1/4, 1/2, 3/4}`.
pub fn endpoint_strict(field: &ScalarField, xi0: &[f64], grid: &GridSpec) -> Result<bool> {
    let f0 = field.eval(xi0)?;
    (0..grid.len())
        .into_par_iter()
        .try_fold(
            || true,
            |ok, i| {
                let xi = grid.node(i);
                if !ok || xi.as_slice() == xi0 {
                    return Ok(ok);
                }
                let end = f0.max(field.eval(&xi)?);
                for t in FRACTIONS {
                    let p: Vec<f64> = xi0.iter().zip(&xi).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                    if field.eval(&p)? >= end {
                        return Ok(false);
                    }
                }
                Ok(true)
            },
        )
        .try_reduce(|| true, |a, b| Ok(a && b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DanaoLevel {
    pub level: f64,
    /// Nodes with `|f - c| <= level tol`.
    pub level_nodes: usize,
    /// Level-set nodes that are not extreme points of the sublevel hull.
    pub non_extreme: Vec<Vec<f64>>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DanaoReport {
    pub levels: Vec<DanaoLevel>,
    pub all_pass: bool,
}

/// For each level `c`, checks that every sampled point of `{f = c}` is an
/// extreme point of the hull of the sampled `{f <= c}`.
pub fn danao_consistency(
    field: &ScalarField,
    grid: &GridSpec,
    levels: &[f64],
    tol: &ToleranceConfig,
) -> Result<DanaoReport> {
    let vals = field.sample_values(grid)?;
    let levels = levels
        .iter()
        .map(|&c| {
            let sub: Vec<Vec<f64>> = (0..grid.len())
                .filter(|&i| vals[i] <= c + tol.level)
                .map(|i| grid.node(i))
                .collect();
            let on: Vec<Vec<f64>> = (0..grid.len())
                .filter(|&i| (vals[i] - c).abs() <= tol.level)
                .map(|i| grid.node(i))
                .collect();
            let non_extreme = if sub.is_empty() {
                Vec::new()
            } else {
                let body = hull(&sub, tol.geom)?;
                on.iter().filter(|p| !body.is_extreme(p)).cloned().collect()
            };
            Ok(DanaoLevel {
                level: c,
                level_nodes: on.len(),
                pass: non_extreme.is_empty(),
                non_extreme,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DanaoReport {
        all_pass: levels.iter().all(|l| l.pass),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCheck {
    pub strict: bool,
    /// `(xi, eta)` with `f(xi + eta/2) = max(f(xi), f(xi + eta))` and `eta != 0`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Scans node pairs `(xi, xi + eta)` whose midpoint is a node for equality
/// of the midpoint value with the larger endpoint value.
pub fn strict_via_perturbation(
    field: &ScalarField,
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<PerturbationCheck> {
    let vals = field.sample_values(grid)?;
    let n = grid.len();
    let multi: Vec<Vec<usize>> = (0..n).map(|i| grid.multi_index(i)).collect();
    let hit = (0..n).into_par_iter().find_map_first(|i| {
        let mut partners: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        // nearest partners first, so the reported eta is the shortest at this xi
        let d2 = |j: usize| -> i64 {
            multi[i]
                .iter()
                .zip(&multi[j])
                .map(|(&a, &b)| (a as i64 - b as i64).pow(2))
                .sum()
        };
        partners.sort_by_key(|&j| (d2(j), j));
        partners.into_iter().find_map(|j| {
            let m = snapped(&multi[i], &multi[j], 2)?;
            let mid = vals[grid.flat_index(&m)];
            ((mid - vals[i].max(vals[j])).abs() <= tol.level).then(|| {
                let (xi, other) = (grid.node(i), grid.node(j));
                let eta = other.iter().zip(&xi).map(|(b, a)| b - a).collect();
                (xi, eta)
            })
        })
    });
    Ok(PerturbationCheck {
        strict: hit.is_none(),
        witness: hit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum LevelConvexStatus {
    /// The field is an envelope, level convex by construction.
    ByConstruction,
    Checked(LevelConvexCheck),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictnessReport {
    pub level_convex: LevelConvexStatus,
    pub strict_at_point: bool,
    pub strict_in_one_direction: Option<Vec<f64>>,
    pub boundary_location: PointLocation,
    pub sampled: bool,
}

impl StrictnessReport {
    /// Report for `xi0` relative to a sublevel hull of a level-convex function.
    pub fn from_hull(body: &ConvexBody, xi0: &[f64], level_convex: LevelConvexStatus) -> Result<Self> {
        Ok(Self {
            level_convex,
            strict_at_point: body.is_extreme(xi0),
            strict_in_one_direction: direction_in(body, xi0)?,
            boundary_location: body.locate(xi0),
            sampled: true,
        })
    }
}

/// Full classification of `field` at `xi0`. Strictness entries are only
/// meaningful when the level-convexity check holds.
pub fn strictness_report(
    field: &ScalarField,
    xi0: &[f64],
    grid: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<StrictnessReport> {
    let check = check_level_convex(field, grid, tol)?;
    StrictnessReport::from_hull(
        &own_level_hull(field, xi0, grid, tol)?,
        xi0,
        LevelConvexStatus::Checked(check),
    )
}
