//! Densities, sampling grids, domains and boundary data.
//!
//! A [`ScalarField`] is either an analytic expression (a closed [`Expr`]
//! tree, so that field files stay data and never code) or a grid-sampled
//! array interpolated multilinearly between nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inclusion::PiecewiseAffineFunction;

/// Indices closer than this (in units of the grid spacing) to a node snap onto it.
const NODE_SNAP: f64 = 1e-9;

/// A tensor grid over `[lo, hi]`, `counts[k]` nodes along axis `k`.
///
/// Nodal arrays are stored row-major with axis 0 slowest:
/// `index = i0 * counts[1] + i1` in two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRaw")]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpecRaw {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
}

impl TryFrom<GridSpecRaw> for GridSpec {
    type Error = Error;
    fn try_from(raw: GridSpecRaw) -> Result<Self> {
        GridSpec::new(raw.lo, raw.hi, raw.counts)
    }
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let dim = lo.len();
        if !(1..=2).contains(&dim) || hi.len() != dim || counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "lo/hi/counts must all have length 1 or 2 (got {}, {}, {})",
                lo.len(),
                hi.len(),
                counts.len()
            )));
        }
        for k in 0..dim {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: need finite lo < hi, got [{}, {}]",
                    lo[k], hi[k]
                )));
            }
            if counts[k] < 2 {
                return Err(Error::InvalidGrid(format!("axis {k}: need at least 2 nodes")));
            }
        }
        Ok(Self { lo, hi, counts })
    }

    /// `n` nodes per axis over the cube `[lo, hi]^dim`.
    pub fn uniform(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `i` along `axis`; the last node is exactly `hi`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.counts[axis] - 1;
        if i == n {
            self.hi[axis]
        } else {
            self.lo[axis] + (self.hi[axis] - self.lo[axis]) * (i as f64 / n as f64)
        }
    }

    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![index],
            _ => vec![index / self.counts[1], index % self.counts[1]],
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        match self.dim() {
            1 => multi[0],
            _ => multi[0] * self.counts[1] + multi[1],
        }
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coord(axis, i))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|k| {
                let slack = NODE_SNAP * self.spacing(k);
                p[k] >= self.lo[k] - slack && p[k] <= self.hi[k] + slack
            })
    }

    /// Diameter of the grid box.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|k| (self.hi[k] - self.lo[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Cell index and local coordinate in `[0, 1]` along `axis`, with nodes snapped.
    fn locate_axis(&self, axis: usize, x: f64) -> (usize, f64) {
        let n = self.counts[axis] - 1;
        let s = (x - self.lo[axis]) / self.spacing(axis);
        let r = s.round();
        if (s - r).abs() < NODE_SNAP {
            let i = (r.max(0.0) as usize).min(n);
            return if i == n { (n - 1, 1.0) } else { (i, 0.0) };
        }
        let i = (s.floor().max(0.0) as usize).min(n - 1);
        (i, (s - i as f64).clamp(0.0, 1.0))
    }
}

/// Coercivity bound `gamma(t) = scale * t^power - offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coercivity {
    pub scale: f64,
    pub power: f64,
    pub offset: f64,
}

impl Coercivity {
    pub fn power_law(scale: f64, power: f64, offset: f64) -> Self {
        Self { scale, power, offset }
    }

    pub fn gamma(&self, t: f64) -> f64 {
        self.scale * t.powf(self.power) - self.offset
    }
}

/// Closed-form densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expr {
    /// `(x^2 - 1)^2`
    DoubleWell,
    /// `(x1^2 - 1)^2 + x2^2`
    TwoWellParabolic,
    /// `-x` for `x <= 0`, else `0`
    HalflineKink,
    /// distance to the half-plane `{x1 >= 0}`
    DistHalfplane,
    /// Euclidean norm
    Norm,
    /// squared Euclidean norm
    SquaredNorm,
    /// max-norm `max_k |x_k|`
    MaxNorm,
    Constant {
        value: f64,
    },
    /// `x1`
    Linear,
    /// `max(x1, 0)`
    Ramp,
    /// `min_i |x - w_i|^power`
    MultiWell {
        wells: Vec<Vec<f64>>,
        power: f64,
    },
    /// `tail * |x|^2 + sum_k amps[k] * sin(freqs[k] * x1 + phases[k])`
    FourierBumps {
        amps: Vec<f64>,
        freqs: Vec<f64>,
        phases: Vec<f64>,
        tail: f64,
    },
    /// `scale * inner(x) + shift`
    Affine {
        scale: f64,
        shift: f64,
        inner: Box<Expr>,
    },
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::DoubleWell => (x[0] * x[0] - 1.0).powi(2),
            Expr::TwoWellParabolic => (x[0] * x[0] - 1.0).powi(2) + x[1] * x[1],
            Expr::HalflineKink => {
                if x[0] <= 0.0 {
                    -x[0]
                } else {
                    0.0
                }
            }
            Expr::DistHalfplane => (-x[0]).max(0.0),
            Expr::Norm => norm(x),
            Expr::SquaredNorm => x.iter().map(|v| v * v).sum(),
            Expr::MaxNorm => x.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            Expr::Constant { value } => *value,
            Expr::Linear => x[0],
            Expr::Ramp => x[0].max(0.0),
            Expr::MultiWell { wells, power } => wells
                .iter()
                .map(|w| {
                    let d = x.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    d.powf(*power)
                })
                .fold(f64::INFINITY, f64::min),
            Expr::FourierBumps {
                amps,
                freqs,
                phases,
                tail,
            } => {
                let mut v = tail * x.iter().map(|t| t * t).sum::<f64>();
                for k in 0..amps.len() {
                    v += amps[k] * (freqs[k] * x[0] + phases[k]).sin();
                }
                v
            }
            Expr::Affine { scale, shift, inner } => scale * inner.eval(x) + shift,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let need = |d: usize| {
            if d == dim {
                Ok(())
            } else {
                Err(Error::InvalidField(format!(
                    "expression is defined in dimension {d}, field declares {dim}"
                )))
            }
        };
        match self {
            Expr::DoubleWell | Expr::HalflineKink | Expr::FourierBumps { .. } => need(1)?,
            Expr::TwoWellParabolic | Expr::DistHalfplane => need(2)?,
            Expr::MultiWell { wells, .. } => {
                if wells.is_empty() || wells.iter().any(|w| w.len() != dim) {
                    return Err(Error::InvalidField(
                        "multi-well: wells must be nonempty points of the field dimension".into(),
                    ));
                }
            }
            Expr::Affine { scale, inner, .. } => {
                if scale.is_nan() || *scale <= 0.0 {
                    return Err(Error::InvalidField("affine rescaling needs a positive scale".into()));
                }
                inner.check(dim)?;
            }
            _ => {}
        }
        if let Expr::FourierBumps {
            amps, freqs, phases, ..
        } = self
        {
            if amps.len() != freqs.len() || amps.len() != phases.len() {
                return Err(Error::InvalidField(
                    "fourier-bumps: amps/freqs/phases lengths differ".into(),
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A limiting value attached to a grid node, used by the lsc envelope of a
/// sampled field with jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitAnnotation {
    pub node: usize,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Analytic(Expr),
    Sampled {
        grid: GridSpec,
        values: Vec<f64>,
        limits: Vec<LimitAnnotation>,
    },
}

/// A density `f: R^n -> R`, `n` in {1, 2}. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldFile", into = "FieldFile")]
pub struct ScalarField {
    dim: usize,
    kind: FieldKind,
    coercivity: Option<Coercivity>,
}

/// On-disk layout of a field definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub dim: usize,
    pub kind: FieldFileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub limits: Vec<LimitAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<Coercivity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFileKind {
    Analytic,
    GridSampled,
}

impl TryFrom<FieldFile> for ScalarField {
    type Error = Error;
    fn try_from(file: FieldFile) -> Result<Self> {
        match file.kind {
            FieldFileKind::Analytic => {
                let expr = file
                    .expression
                    .ok_or_else(|| Error::InvalidField("analytic field needs `expression`".into()))?;
                ScalarField::analytic(file.dim, expr, file.coercivity)
            }
            FieldFileKind::GridSampled => {
                let grid = file
                    .grid
                    .ok_or_else(|| Error::InvalidField("sampled field needs `grid`".into()))?;
                let values = file
                    .values
                    .ok_or_else(|| Error::InvalidField("sampled field needs `values`".into()))?;
                if grid.dim() != file.dim {
                    return Err(Error::DimensionMismatch {
                        expected: file.dim,
                        got: grid.dim(),
                    });
                }
                ScalarField::sampled(grid, values, file.coercivity)?.with_limits(file.limits)
            }
        }
    }
}

impl From<ScalarField> for FieldFile {
    fn from(f: ScalarField) -> Self {
        let mut file = FieldFile {
            dim: f.dim,
            kind: FieldFileKind::Analytic,
            expression: None,
            grid: None,
            values: None,
            limits: Vec::new(),
            coercivity: f.coercivity,
        };
        match f.kind {
            FieldKind::Analytic(e) => file.expression = Some(e),
            FieldKind::Sampled { grid, values, limits } => {
                file.kind = FieldFileKind::GridSampled;
                file.grid = Some(grid);
                file.values = Some(values);
                file.limits = limits;
            }
        }
        file
    }
}

impl ScalarField {
    pub fn analytic(dim: usize, expr: Expr, coercivity: Option<Coercivity>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidField(format!("dimension {dim} not supported")));
        }
        expr.check(dim)?;
        Ok(Self {
            dim,
            kind: FieldKind::Analytic(expr),
            coercivity,
        })
    }

    /// Builds a sampled field; values must be finite and respect the coercivity tag.
    pub fn sampled(grid: GridSpec, values: Vec<f64>, coercivity: Option<Coercivity>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "grid has {} nodes but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value at node {:?}",
                grid.node(i)
            )));
        }
        let field = Self {
            dim: grid.dim(),
            kind: FieldKind::Sampled {
                grid,
                values,
                limits: Vec::new(),
            },
            coercivity,
        };
        field.check_coercivity_on_nodes()?;
        Ok(field)
    }

    /// Attaches limiting-value annotations to a sampled field.
    pub fn with_limits(mut self, new_limits: Vec<LimitAnnotation>) -> Result<Self> {
        match &mut self.kind {
            FieldKind::Sampled { grid, limits, .. } => {
                if let Some(a) = new_limits.iter().find(|a| a.node >= grid.len() || !a.limit.is_finite()) {
                    return Err(Error::InvalidField(format!("bad limit annotation {a:?}")));
                }
                *limits = new_limits;
                Ok(self)
            }
            FieldKind::Analytic(_) if new_limits.is_empty() => Ok(self),
            FieldKind::Analytic(_) => Err(Error::InvalidField(
                "limit annotations only apply to sampled fields".into(),
            )),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn coercivity(&self) -> Option<&Coercivity> {
        self.coercivity.as_ref()
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        match &self.kind {
            FieldKind::Sampled { grid, .. } => Some(grid),
            FieldKind::Analytic(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.kind {
            FieldKind::Sampled { values, .. } => Some(values),
            FieldKind::Analytic(_) => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {x:?}")));
        }
        match &self.kind {
            FieldKind::Analytic(e) => Ok(e.eval(x)),
            FieldKind::Sampled { grid, values, .. } => {
                if !grid.contains(x) {
                    return Err(Error::OutOfBounds { point: x.to_vec() });
                }
                Ok(interpolate(grid, values, x))
            }
        }
    }

    /// Nodal values of the field on `grid`.
    pub fn sample_values(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grid.dim(),
            });
        }
        (0..grid.len()).map(|i| self.eval(&grid.node(i))).collect()
    }

    /// Checks `f >= gamma(|x|)` at every node of `grid` (a no-op without a tag).
    pub fn check_coercivity(&self, grid: &GridSpec) -> Result<()> {
        let Some(c) = self.coercivity else { return Ok(()) };
        for i in 0..grid.len() {
            let p = grid.node(i);
            let value = self.eval(&p)?;
            let bound = c.gamma(norm(&p));
            // rounding slack relative to the bound
            if value < bound - 1e-12 * bound.abs().max(1.0) {
                return Err(Error::CoercivityViolated { point: p, value, bound });
            }
        }
        Ok(())
    }

    fn check_coercivity_on_nodes(&self) -> Result<()> {
        match &self.kind {
            FieldKind::Sampled { grid, .. } => self.check_coercivity(grid),
            FieldKind::Analytic(_) => Ok(()),
        }
    }
}

fn interpolate(grid: &GridSpec, values: &[f64], x: &[f64]) -> f64 {
    match grid.dim() {
        1 => {
            let (i, t) = grid.locate_axis(0, x[0]);
            lerp(values[i], values[i + 1], t)
        }
        _ => {
            let (i, s) = grid.locate_axis(0, x[0]);
            let (j, t) = grid.locate_axis(1, x[1]);
            let at = |a: usize, b: usize| values[grid.flat_index(&[a, b])];
            let lower = lerp(at(i, j), at(i, j + 1), t);
            let upper = lerp(at(i + 1, j), at(i + 1, j + 1), t);
            lerp(lower, upper, s)
        }
    }
}

// exact at both ends
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a * (1.0 - t) + b * t
    }
}

/// Samples an analytic field on `grid`; the coercivity tag is carried over and re-checked.
pub fn sample(field: &ScalarField, grid: &GridSpec) -> Result<ScalarField> {
    if let FieldKind::Sampled { .. } = field.kind {
        return Err(Error::InvalidArgument("field is already grid-sampled".into()));
    }
    let values = field.sample_values(grid)?;
    ScalarField::sampled(grid.clone(), values, field.coercivity)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "double-well-1d",
    "example-4-5",
    "halfline-kink",
    "dist-halfplane",
    "abs",
    "square-1d",
    "square-2d",
    "max-norm",
    "four-well",
    "two-well-2d",
    "ramp",
    "identity",
];

/// The registry of named analytic densities.
pub fn builtin(name: &str) -> Result<ScalarField> {
    let pl = Coercivity::power_law;
    let (dim, expr, coercivity) = match name {
        "double-well-1d" => (1, Expr::DoubleWell, Some(pl(1.0, 2.0, 2.0))),
        "example-4-5" => (2, Expr::TwoWellParabolic, Some(pl(1.0, 2.0, 2.0))),
        "halfline-kink" => (1, Expr::HalflineKink, None),
        "dist-halfplane" => (2, Expr::DistHalfplane, None),
        "abs" => (1, Expr::Norm, Some(pl(1.0, 1.0, 0.0))),
        "square-1d" => (1, Expr::SquaredNorm, Some(pl(1.0, 2.0, 0.0))),
        "square-2d" => (2, Expr::SquaredNorm, Some(pl(1.0, 2.0, 0.0))),
        "max-norm" => (2, Expr::MaxNorm, Some(pl(0.7, 1.0, 0.0))),
        "four-well" => (
            2,
            Expr::MultiWell {
                wells: vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
                power: 2.0,
            },
            Some(pl(0.5, 2.0, 1.0)),
        ),
        "two-well-2d" => (
            2,
            Expr::MultiWell {
                wells: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
                power: 1.0,
            },
            Some(pl(1.0, 1.0, 1.0)),
        ),
        "ramp" => (1, Expr::Ramp, None),
        "identity" => (1, Expr::Linear, None),
        other => return Err(Error::UnknownField(other.to_string())),
    };
    ScalarField::analytic(dim, expr, coercivity)
}

/// The open set on which the variational problem is posed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Interval {
        a: f64,
        b: f64,
    },
    /// Convex polygon, vertices counter-clockwise.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDomain(format!("interval [{a}, {b}] has empty interior")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn square(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        Self::polygon(vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]])
    }

    pub fn unit_square() -> Self {
        Domain::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross.is_nan() || cross <= 0.0 {
                return Err(Error::InvalidDomain(
                    "polygon must be strictly convex and counter-clockwise".into(),
                ));
            }
        }
        let d = Domain::Polygon { vertices };
        // a star-shaped turn sequence can still wind twice
        let turning: f64 = match &d {
            Domain::Polygon { vertices } => (0..n)
                .map(|i| {
                    let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                    let e1 = (b[0] - a[0], b[1] - a[1]);
                    let e2 = (c[0] - b[0], c[1] - b[1]);
                    (e1.0 * e2.1 - e1.1 * e2.0).atan2(e1.0 * e2.0 + e1.1 * e2.1)
                })
                .sum(),
            _ => unreachable!(),
        };
        if (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(Error::InvalidDomain("polygon is not simple".into()));
        }
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Polygon { .. } => 2,
        }
    }

    /// Length or area.
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Interval { a, b } => b - a,
            Domain::Polygon { vertices } => polygon_area(vertices),
        }
    }

    /// Fan triangulation from the first vertex.
    pub fn triangles(&self) -> Vec<[[f64; 2]; 3]> {
        match self {
            Domain::Interval { .. } => Vec::new(),
            Domain::Polygon { vertices } => (1..vertices.len() - 1)
                .map(|i| [vertices[0], vertices[i], vertices[i + 1]])
                .collect(),
        }
    }
}

pub(crate) fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// `u(x) = <xi0, x> + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineDatum {
    pub xi0: Vec<f64>,
    pub c: f64,
}

impl AffineDatum {
    pub fn new(xi0: Vec<f64>, c: f64) -> Self {
        Self { xi0, c }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c + self.xi0.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn gradient(&self) -> &[f64] {
        &self.xi0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryDatum {
    Affine(AffineDatum),
    PiecewiseAffine(Box<PiecewiseAffineFunction>),
}
