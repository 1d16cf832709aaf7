//! Level-convex envelopes of gridded densities.
//!
//! The sublevel sets of the envelope are the convex hulls of the sublevel
//! sets of the density, so on a grid the envelope at a point is the smallest
//! nodal level whose sublevel hull contains it. Three routes compute it:
//!
//! * [`envelope_1d`]: running minima from both ends, exact in one dimension;
//! * [`envelope_levelsweep`]: a nested sequence of hulls, one per distinct level;
//! * [`envelope_caratheodory`]: exhaustive search over `n + 1`-tuples, for spot checks.
//!
//! For continuous coercive inputs the level-convex envelope is already lower
//! semicontinuous, so the computed values are labelled as the lsc envelope.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldKind, GridSpec, ScalarField};
use crate::geometry::{hull, hull_2d, ConvexBody, P2};
use crate::tol::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeMethod {
    Levelsweep,
    Caratheodory,
    RunningMin1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub weight: f64,
    pub value: f64,
}

/// Exactly `n + 1` witnesses; degenerate cases repeat a witness with weight 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub witnesses: Vec<Witness>,
}

impl Certificate {
    /// Largest density value among the witnesses carrying positive weight.
    pub fn max_value(&self) -> f64 {
        self.witnesses
            .iter()
            .filter(|w| w.weight > 0.0)
            .map(|w| w.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Barycenter, weight sum, non-negativity and attained level.
    pub fn verify(&self, node: &[f64], value: f64, geom: f64, level: f64) -> bool {
        let sum: f64 = self.witnesses.iter().map(|w| w.weight).sum();
        let centre_ok = (0..node.len()).all(|k| {
            let c: f64 = self.witnesses.iter().map(|w| w.weight * w.point[k]).sum();
            (c - node[k]).abs() <= geom
        });
        (sum - 1.0).abs() <= 1e-9
            && self.witnesses.iter().all(|w| w.weight >= 0.0)
            && centre_ok
            && (self.max_value() - value).abs() <= level
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub grid: GridSpec,
    pub field_values: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<Vec<Certificate>>,
    pub method: EnvelopeMethod,
}

impl EnvelopeResult {
    /// The envelope as a sampled field (interpolated between nodes).
    pub fn to_field(&self, coercivity_from: Option<&ScalarField>) -> Result<ScalarField> {
        ScalarField::sampled(
            self.grid.clone(),
            self.values.clone(),
            coercivity_from.and_then(|f| f.coercivity().copied()),
        )
    }

    /// `x1[,x2],f,envelope` rows, one per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.grid.dim() == 1 {
            "x1,f,envelope\n"
        } else {
            "x1,x2,f,envelope\n"
        });
        for i in 0..self.grid.len() {
            for c in self.grid.node(i) {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{},{}\n", self.field_values[i], self.values[i]));
        }
        out
    }

    /// Whitespace columns; in 2D rows of constant `x1` are separated by blank lines.
    pub fn to_plot_columns(&self) -> String {
        let mut out = String::from("# x1 [x2] f envelope\n");
        for i in 0..self.grid.len() {
            let node = self.grid.node(i);
            if self.grid.dim() == 2 && i > 0 && i % self.grid.counts()[1] == 0 {
                out.push('\n');
            }
            let coords: Vec<String> = node.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(
                "{} {} {}\n",
                coords.join(" "),
                self.field_values[i],
                self.values[i]
            ));
        }
        out
    }

    pub fn from_csv(text: &str, grid: GridSpec, method: EnvelopeMethod) -> Result<Self> {
        let mut field_values = Vec::with_capacity(grid.len());
        let mut values = Vec::with_capacity(grid.len());
        for (ln, line) in text.lines().skip(1).enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != grid.dim() + 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected {} columns",
                    ln + 2,
                    grid.dim() + 2
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))
            };
            field_values.push(num(cols[grid.dim()])?);
            values.push(num(cols[grid.dim() + 1])?);
        }
        if values.len() != grid.len() {
            return Err(Error::Parse(format!(
                "expected {} rows, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            field_values,
            values,
            certificates: None,
            method,
        })
    }

    /// Value at the node nearest to `x`.
    pub fn value_near(&self, x: &[f64]) -> f64 {
        let multi: Vec<usize> = (0..self.grid.dim())
            .map(|k| {
                let s = ((x[k] - self.grid.lo()[k]) / self.grid.spacing(k)).round();
                (s.max(0.0) as usize).min(self.grid.counts()[k] - 1)
            })
            .collect();
        self.values[self.grid.flat_index(&multi)]
    }
}

/// Nested convex hulls of the sublevel sets `{node : f(node) <= c_k}`, one per
/// distinct nodal level `c_k`, ascending.
#[derive(Debug, Clone)]
pub struct SublevelHulls {
    levels: Vec<f64>,
    bodies: Vec<ConvexBody>,
}

impl SublevelHulls {
    pub fn build(points: &[Vec<f64>], values: &[f64], tol: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let dim = points[0].len();
        let mut levels = Vec::new();
        let mut bodies: Vec<ConvexBody> = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let c = values[order[start]];
            let mut end = start;
            while end < order.len() && values[order[end]] == c {
                end += 1;
            }
            let body = match (dim, bodies.last()) {
                (1, prev) => {
                    let mut pts: Vec<Vec<f64>> = order[start..end].iter().map(|&i| points[i].clone()).collect();
                    if let Some(prev) = prev {
                        pts.extend(prev.vertices());
                    }
                    hull(&pts, tol)?
                }
                (_, prev) => {
                    let mut pts: Vec<P2> = order[start..end]
                        .iter()
                        .map(|&i| [points[i][0], points[i][1]])
                        .collect();
                    if let Some(prev) = prev {
                        pts.extend(prev.vertices().iter().map(|v| [v[0], v[1]]));
                    }
                    hull_2d(&pts, tol)?
                }
            };
            levels.push(c);
            bodies.push(body);
            start = end;
        }
        Ok(Self { levels, bodies })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn body(&self, k: usize) -> &ConvexBody {
        &self.bodies[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Smallest level index whose hull contains `x`.
    pub fn first_containing(&self, x: &[f64]) -> Option<usize> {
        let last = self.bodies.len() - 1;
        if !self.bodies[last].contains(x) {
            return None;
        }
        let (mut lo, mut hi) = (0, last);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.bodies[mid].contains(x) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    /// Hull of the nodes with `f <= c`, if any node qualifies.
    pub fn body_at_or_below(&self, c: f64) -> Option<&ConvexBody> {
        let n = self.levels.partition_point(|&l| l <= c);
        (n > 0).then(|| &self.bodies[n - 1])
    }
}

/// The grid envelope of a field as a function on the whole plane (or line):
/// the smallest level whose sublevel hull contains the query point, capped
/// by the density itself.
#[derive(Debug, Clone)]
pub struct GridEnvelope {
    field: ScalarField,
    grid: GridSpec,
    field_values: Vec<f64>,
    hulls: SublevelHulls,
    tol: ToleranceConfig,
}

impl GridEnvelope {
    pub fn build(field: &ScalarField, grid: &GridSpec, tol: &ToleranceConfig) -> Result<Self> {
        if grid.dim() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                got: grid.dim(),
            });
        }
        let field_values = field.sample_values(grid)?;
        let hulls = SublevelHulls::build(&grid.nodes(), &field_values, tol.geom)?;
        Ok(Self {
            field: field.clone(),
            grid: grid.clone(),
            field_values,
            hulls,
            tol: *tol,
        })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn hulls(&self) -> &SublevelHulls {
        &self.hulls
    }

    pub fn field_values(&self) -> &[f64] {
        &self.field_values
    }

    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let fx = self.field.eval(x)?;
        Ok(match self.hulls.first_containing(x) {
            Some(k) => fx.min(self.hulls.levels()[k]),
            None => fx,
        })
    }

    /// Value and certificate at `x`.
    pub fn certified_value_at(&self, x: &[f64]) -> Result<(f64, Certificate)> {
        let fx = self.field.eval(x)?;
        let n = x.len();
        let own = || Certificate {
            witnesses: (0..=n)
                .map(|i| Witness {
                    point: x.to_vec(),
                    weight: if i == 0 { 1.0 } else { 0.0 },
                    value: fx,
                })
                .collect(),
        };
        let Some(k) = self.hulls.first_containing(x) else {
            return Ok((fx, own()));
        };
        let level = self.hulls.levels()[k];
        if fx <= level {
            return Ok((fx, own()));
        }
        let weights = self
            .hulls
            .body(k)
            .convex_weights(x)
            .ok_or_else(|| Error::NotInHull(x.to_vec()))?;
        let witnesses = weights
            .into_iter()
            .map(|(point, weight)| {
                let value = self.field.eval(&point)?;
                Ok(Witness { point, weight, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((level, Certificate { witnesses }))
    }

    /// Hull of the sampled sublevel set `{f <= c + level tol}`.
    pub fn sublevel_hull(&self, c: f64) -> Option<&ConvexBody> {
        self.hulls.body_at_or_below(c + self.tol.level)
    }

    /// Nodes with `f <= c + level tol`.
    pub fn sublevel_nodes(&self, c: f64) -> Vec<Vec<f64>> {
        (0..self.grid.len())
            .filter(|&i| self.field_values[i] <= c + self.tol.level)
            .map(|i| self.grid.node(i))
            .collect()
    }
}

/// Exact grid envelope in one dimension: the larger of the running minima
/// taken from the left and from the right.
pub fn envelope_1d(field: &ScalarField, grid: &GridSpec) -> Result<EnvelopeResult> {
    if field.dim() != 1 || grid.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: field.dim().max(grid.dim()),
        });
    }
    let f = field.sample_values(grid)?;
    let n = f.len();
    // nearest index attaining the running minimum on each side
    let mut left = vec![0usize; n];
    for i in 0..n {
        left[i] = if i > 0 && f[left[i - 1]] < f[i] { left[i - 1] } else { i };
    }
    let mut right = vec![0usize; n];
    for i in (0..n).rev() {
        right[i] = if i + 1 < n && f[right[i + 1]] < f[i] {
            right[i + 1]
        } else {
            i
        };
    }
    let mut values = Vec::with_capacity(n);
    let mut certs = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (left[i], right[i]);
        values.push(f[a].max(f[b]));
        let (xa, xb, x) = (grid.coord(0, a), grid.coord(0, b), grid.coord(0, i));
        let wa = if a == b { 1.0 } else { (xb - x) / (xb - xa) };
        certs.push(Certificate {
            witnesses: vec![
                Witness {
                    point: vec![xa],
                    weight: wa,
                    value: f[a],
                },
                Witness {
                    point: vec![xb],
                    weight: 1.0 - wa,
                    value: f[b],
                },
            ],
        });
    }
    Ok(EnvelopeResult {
        grid: grid.clone(),
        field_values: f,
        values,
        certificates: Some(certs),
        method: EnvelopeMethod::RunningMin1d,
    })
}

/// One-dimensional grid envelope at an arbitrary point of the grid window.
pub fn envelope_1d_at(field: &ScalarField, grid: &GridSpec, x: f64) -> Result<f64> {
    let fx = field.eval(&[x])?;
    let mut left = fx;
    let mut right = fx;
    for i in 0..grid.len() {
        let c = grid.coord(0, i);
        let v = field.eval(&[c])?;
        if c <= x {
            left = left.min(v);
        }
        if c >= x {
            right = right.min(v);
        }
    }
    Ok(left.max(right))
}

/// Two-dimensional envelope by sweeping levels over nested sublevel hulls.
pub fn envelope_levelsweep(field: &ScalarField, grid: &GridSpec, tol: &ToleranceConfig) -> Result<EnvelopeResult> {
    if field.dim() != 2 || grid.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: field.dim().min(grid.dim()),
        });
    }
    if matches!(field.kind(), FieldKind::Analytic(_)) && field.coercivity().is_none() {
        return Err(Error::NotCoercive);
    }
    let env = GridEnvelope::build(field, grid, tol)?;
    if env.hulls.len() < 4 {
        return Err(Error::GridTooCoarse(env.hulls.len()));
    }
    let results: Vec<(f64, Certificate)> = (0..grid.len())
        .into_par_iter()
        .map(|i| env.certified_value_at(&grid.node(i)))
        .collect::<Result<_>>()?;
    let (values, certs) = results.into_iter().unzip();
    Ok(EnvelopeResult {
        grid: grid.clone(),
        field_values: env.field_values,
        values,
        certificates: Some(certs),
        method: EnvelopeMethod::Levelsweep,
    })
}

/// Exhaustive search for the cheapest `n + 1`-tuple of candidates whose hull
/// contains `x`, cost measured by the largest density value in the tuple.
///
/// Candidates are scanned in increasing order of value, so the first tuple
/// found whose most expensive member is the current candidate is optimal.
pub fn envelope_caratheodory(
    field: &ScalarField,
    x: &[f64],
    candidates: &[Vec<f64>],
    tol: &ToleranceConfig,
) -> Result<(f64, Certificate)> {
    if x.len() != field.dim() || candidates.iter().any(|c| c.len() != x.len()) {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: x.len(),
        });
    }
    let mut cands: Vec<(Vec<f64>, f64)> = candidates
        .iter()
        .map(|c| Ok((c.clone(), field.eval(c)?)))
        .collect::<Result<_>>()?;
    cands.sort_by(|a, b| a.1.total_cmp(&b.1));
    let scale = candidates
        .iter()
        .flat_map(|c| c.iter())
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    let eps = tol.geom * scale;
    let w = |p: &Vec<f64>, weight: f64, value: f64| Witness {
        point: p.clone(),
        weight,
        value,
    };
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() <= eps;
    match x.len() {
        1 => {
            for k in 0..cands.len() {
                let (pk, vk) = (&cands[k].0, cands[k].1);
                if close(pk, x) {
                    return Ok((
                        vk,
                        Certificate {
                            witnesses: vec![w(pk, 1.0, vk), w(pk, 0.0, vk)],
                        },
                    ));
                }
                for (pi, vi) in cands[..k].iter().map(|c| (&c.0, c.1)) {
                    let (a, b) = (pi[0], pk[0]);
                    if (a - x[0]) * (b - x[0]) <= 0.0 {
                        let t = (x[0] - a) / (b - a);
                        return Ok((
                            vk,
                            Certificate {
                                witnesses: vec![w(pi, 1.0 - t, vi), w(pk, t, vk)],
                            },
                        ));
                    }
                }
            }
        }
        _ => {
            let p = [x[0], x[1]];
            for k in 0..cands.len() {
                let (pk, vk) = (&cands[k].0, cands[k].1);
                if close(pk, x) {
                    return Ok((
                        vk,
                        Certificate {
                            witnesses: vec![w(pk, 1.0, vk), w(pk, 0.0, vk), w(pk, 0.0, vk)],
                        },
                    ));
                }
                let bk = [pk[0], pk[1]];
                for i in 0..k {
                    let (pi, vi) = (&cands[i].0, cands[i].1);
                    let bi = [pi[0], pi[1]];
                    if let Some(t) = on_segment(p, bi, bk, eps) {
                        return Ok((
                            vk,
                            Certificate {
                                witnesses: vec![w(pi, 1.0 - t, vi), w(pk, t, vk), w(pk, 0.0, vk)],
                            },
                        ));
                    }
                    for (pj, vj) in cands[i + 1..k].iter().map(|c| (&c.0, c.1)) {
                        let bj = [pj[0], pj[1]];
                        let area = (bj[0] - bi[0]) * (bk[1] - bi[1]) - (bj[1] - bi[1]) * (bk[0] - bi[0]);
                        if area.abs() <= eps * eps {
                            continue;
                        }
                        let l = crate::geometry::barycentric(p, bi, bj, bk);
                        if l.iter().all(|&v| v >= -1e-12) {
                            let l = [l[0].max(0.0), l[1].max(0.0), l[2].max(0.0)];
                            let s = l[0] + l[1] + l[2];
                            return Ok((
                                vk,
                                Certificate {
                                    witnesses: vec![w(pi, l[0] / s, vi), w(pj, l[1] / s, vj), w(pk, l[2] / s, vk)],
                                },
                            ));
                        }
                    }
                }
            }
        }
    }
    Err(Error::NotInHull(x.to_vec()))
}

/// Parameter `t` with `p = (1-t) a + t b` when `p` lies on the segment within `eps`.
fn on_segment(p: P2, a: P2, b: P2, eps: f64) -> Option<f64> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    if l2 == 0.0 {
        return None;
    }
    let q = [p[0] - a[0], p[1] - a[1]];
    let t = (q[0] * d[0] + q[1] * d[1]) / l2;
    let off = (q[0] * d[1] - q[1] * d[0]).abs() / l2.sqrt();
    (off <= eps && (-1e-12..=1.0 + 1e-12).contains(&t)).then(|| t.clamp(0.0, 1.0))
}

/// Lower-semicontinuous envelope of a sampled field: each node is lowered to
/// the smallest of its value and its annotated limiting values. Continuous
/// sampled fields without annotations come back unchanged.
pub fn lsc_envelope_grid(field: &ScalarField) -> Result<ScalarField> {
    let FieldKind::Sampled { grid, values, limits } = field.kind() else {
        return Err(Error::InvalidArgument("lsc envelope needs a grid-sampled field".into()));
    };
    let mut lowered = values.clone();
    for a in limits {
        lowered[a.node] = lowered[a.node].min(a.limit);
    }
    ScalarField::sampled(grid.clone(), lowered, field.coercivity().copied())?.with_limits(limits.clone())
}
