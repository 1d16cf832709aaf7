//! Explicit piecewise-affine solutions of `grad u ∈ E` with affine boundary data.
//!
//! In one dimension a sawtooth alternating two bracketing slopes solves the
//! inclusion exactly. In two dimensions a pyramid over the polar polygon of
//! `E - xi0` realizes every gradient in `E` with affine trace, and a greedy
//! packing of homothetic pyramids covers the domain up to a small residual on
//! which the affine datum is kept.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::existence::{decide_affine, Branch, Decision, ExistenceVerdict};
use crate::fields::{polygon_area, AffineDatum, Domain, GridSpec, ScalarField};
use crate::geometry::{hull, hull_2d, ConvexBody, PointLocation, Shape, P2};
use crate::tol::ToleranceConfig;

/// Continuous piecewise-affine function on intervals (1D) or triangles (2D).
///
/// Outside the cells the function equals its affine datum, so the uncovered
/// part of the domain carries gradient `xi0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshFile", into = "MeshFile")]
pub struct PiecewiseAffineFunction {
    dim: usize,
    domain: Domain,
    datum: AffineDatum,
    nodes: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    values: Vec<f64>,
    residual_fraction: f64,
}

/// On-disk mesh layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub dim: usize,
    pub domain: Domain,
    pub datum: AffineDatum,
    pub nodes: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    pub residual_fraction: f64,
}

impl TryFrom<MeshFile> for PiecewiseAffineFunction {
    type Error = Error;

    fn try_from(m: MeshFile) -> Result<Self> {
        if m.dim != m.domain.dim() {
            return Err(Error::MalformedMesh(format!(
                "dim {} but domain of dim {}",
                m.dim,
                m.domain.dim()
            )));
        }
        let u = PiecewiseAffineFunction::new(m.domain, m.datum, m.nodes, m.cells, m.values)?;
        if (u.residual_fraction - m.residual_fraction).abs() > 1e-9 {
            return Err(Error::MalformedMesh(format!(
                "stated residual fraction {} but cells leave {}",
                m.residual_fraction, u.residual_fraction
            )));
        }
        Ok(u)
    }
}

impl From<PiecewiseAffineFunction> for MeshFile {
    fn from(u: PiecewiseAffineFunction) -> Self {
        MeshFile {
            dim: u.dim,
            domain: u.domain,
            datum: u.datum,
            nodes: u.nodes,
            cells: u.cells,
            values: u.values,
            residual_fraction: u.residual_fraction,
        }
    }
}

/// Residual fractions below this are rounding noise and reported as zero.
const RESIDUAL_FLOOR: f64 = 1e-12;

impl PiecewiseAffineFunction {
    pub fn new(
        domain: Domain,
        datum: AffineDatum,
        nodes: Vec<Vec<f64>>,
        cells: Vec<Vec<usize>>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let dim = domain.dim();
        let bad = |m: String| Err(Error::MalformedMesh(m));
        if datum.xi0.len() != dim {
            return bad(format!(
                "datum gradient has {} components, domain has dim {dim}",
                datum.xi0.len()
            ));
        }
        if values.len() != nodes.len() {
            return bad(format!("{} values for {} nodes", values.len(), nodes.len()));
        }
        if nodes.iter().any(|p| p.len() != dim || p.iter().any(|c| !c.is_finite())) {
            return bad("node with wrong dimension or non-finite coordinate".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return bad("non-finite nodal value".into());
        }
        let body = domain_body(&domain);
        let slack = 1e-9 * body.diameter();
        if let Some(p) = nodes.iter().find(|p| body.depth(p) < -slack) {
            return bad(format!("node {p:?} lies outside the domain"));
        }
        for (k, c) in cells.iter().enumerate() {
            if c.len() != dim + 1 || c.iter().any(|&i| i >= nodes.len()) {
                return bad(format!("cell {k} has invalid node indices"));
            }
        }
        let mut u = Self {
            dim,
            domain,
            datum,
            nodes,
            cells,
            values,
            residual_fraction: 0.0,
        };
        let total = u.domain.measure();
        for k in 0..u.cells.len() {
            if u.cell_measure(k) <= 1e-14 * total {
                return bad(format!("cell {k} is degenerate"));
            }
        }
        let covered = u.covered_measure();
        if covered > total * (1.0 + 1e-9) {
            return bad(format!("cells cover {covered}, more than the domain measure {total}"));
        }
        let r = 1.0 - covered / total;
        u.residual_fraction = if r.abs() <= RESIDUAL_FLOOR { 0.0 } else { r.max(0.0) };
        Ok(u)
    }

    /// The datum itself, meshed with a single interval or a fan of triangles.
    pub fn affine(domain: &Domain, datum: &AffineDatum) -> Result<Self> {
        let (nodes, cells) = match domain {
            Domain::Interval { a, b } => (vec![vec![*a], vec![*b]], vec![vec![0, 1]]),
            Domain::Polygon { vertices } => (
                vertices.iter().map(|v| v.to_vec()).collect(),
                (1..vertices.len() - 1).map(|i| vec![0, i, i + 1]).collect(),
            ),
        };
        let values = nodes.iter().map(|p| datum.eval(p)).collect();
        Self::new(domain.clone(), datum.clone(), nodes, cells, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn datum(&self) -> &AffineDatum {
        &self.datum
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn residual_fraction(&self) -> f64 {
        self.residual_fraction
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    fn p2(&self, i: usize) -> P2 {
        [self.nodes[i][0], self.nodes[i][1]]
    }

    pub fn cell_measure(&self, k: usize) -> f64 {
        let c = &self.cells[k];
        match self.dim {
            1 => (self.nodes[c[1]][0] - self.nodes[c[0]][0]).abs(),
            _ => polygon_area(&[self.p2(c[0]), self.p2(c[1]), self.p2(c[2])]).abs(),
        }
    }

    /// Exact gradient of the affine interpolant of the cell's nodal values.
    pub fn cell_gradient(&self, k: usize) -> Vec<f64> {
        let c = &self.cells[k];
        let v = |i: usize| self.values[c[i]];
        match self.dim {
            1 => vec![(v(1) - v(0)) / (self.nodes[c[1]][0] - self.nodes[c[0]][0])],
            _ => {
                let (a, b, d) = (self.p2(c[0]), self.p2(c[1]), self.p2(c[2]));
                let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [d[0] - a[0], d[1] - a[1]]);
                let (dv1, dv2) = (v(1) - v(0), v(2) - v(0));
                let det = e1[0] * e2[1] - e1[1] * e2[0];
                vec![(dv1 * e2[1] - dv2 * e1[1]) / det, (e1[0] * dv2 - e2[0] * dv1) / det]
            }
        }
    }

    pub fn gradients(&self) -> Vec<Vec<f64>> {
        (0..self.cells.len()).map(|k| self.cell_gradient(k)).collect()
    }

    pub fn covered_measure(&self) -> f64 {
        (0..self.cells.len()).map(|k| self.cell_measure(k)).sum()
    }

    pub fn max_cell_diameter(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                let mut d: f64 = 0.0;
                for &i in c {
                    for &j in c {
                        d = d.max(norm_diff(&self.nodes[i], &self.nodes[j]));
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Value at `x`; the affine datum where no cell contains `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for (k, c) in self.cells.iter().enumerate() {
            let g = self.cell_gradient(k);
            let inside = match self.dim {
                1 => {
                    let (a, b) = (self.nodes[c[0]][0], self.nodes[c[1]][0]);
                    a.min(b) <= x[0] && x[0] <= a.max(b)
                }
                _ => {
                    let w = crate::geometry::barycentric([x[0], x[1]], self.p2(c[0]), self.p2(c[1]), self.p2(c[2]));
                    w.iter().all(|&t| t >= -1e-12)
                }
            };
            if inside {
                let base = &self.nodes[c[0]];
                return Ok(self.values[c[0]] + g.iter().zip(x).zip(base).map(|((g, x), b)| g * (x - b)).sum::<f64>());
            }
        }
        Ok(self.datum.eval(x))
    }

    /// Area-weighted mean gradient over the domain, residual counted at `xi0`.
    pub fn mean_gradient(&self) -> Vec<f64> {
        let total = self.domain.measure();
        let mut acc = vec![0.0; self.dim];
        let mut covered = 0.0;
        for k in 0..self.cells.len() {
            let m = self.cell_measure(k);
            covered += m;
            for (a, g) in acc.iter_mut().zip(self.cell_gradient(k)) {
                *a += m * g;
            }
        }
        let residual = total - covered;
        acc.iter()
            .zip(&self.datum.xi0)
            .map(|(a, x)| (a + residual * x) / total)
            .collect()
    }

    /// `max |u - datum|`, attained at a node.
    pub fn sup_distance(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(p, v)| (v - self.datum.eval(p)).abs())
            .fold(0.0, f64::max)
    }

    /// `max |u - datum|` over nodes on the boundary of the domain.
    pub fn trace_error(&self) -> f64 {
        let body = domain_body(&self.domain);
        let eps = 1e-9 * body.diameter();
        self.nodes
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| body.depth(p).abs() <= eps)
            .map(|(p, v)| (v - self.datum.eval(p)).abs())
            .fold(0.0, f64::max)
    }

    /// `cell,g1[,g2],measure` rows.
    pub fn gradient_csv(&self) -> String {
        let mut out = String::from(if self.dim == 1 {
            "cell,g1,measure\n"
        } else {
            "cell,g1,g2,measure\n"
        });
        for k in 0..self.cells.len() {
            let g: Vec<String> = self.cell_gradient(k).iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{k},{},{}\n", g.join(","), self.cell_measure(k)));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn domain_body(domain: &Domain) -> ConvexBody {
    match domain {
        Domain::Interval { a, b } => hull(&[vec![*a], vec![*b]], 1e-9).expect("interval hull"),
        Domain::Polygon { vertices } => hull_2d(vertices, 1e-9).expect("polygon hull"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSource {
    Points,
    Sublevel { level: f64 },
}

/// Gradient set `E` and the boundary gradient `xi0`, validated against the
/// necessary condition `xi0 ∈ E ∪ int co E`.
#[derive(Debug, Clone)]
pub struct InclusionTarget {
    points: Vec<Vec<f64>>,
    xi0: Vec<f64>,
    hull: ConvexBody,
    member: Option<usize>,
    source: TargetSource,
}

impl InclusionTarget {
    pub fn new(points: Vec<Vec<f64>>, xi0: Vec<f64>, tol: &ToleranceConfig) -> Result<Self> {
        Self::build(points, xi0, tol, TargetSource::Points)
    }

    /// `E` = hull vertices of the sampled sublevel set `{f <= level}` plus the
    /// sampled points of that set lying on the hull boundary.
    pub fn from_sublevel(
        field: &ScalarField,
        grid: &GridSpec,
        level: f64,
        xi0: Vec<f64>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let vals = field.sample_values(grid)?;
        let members: Vec<Vec<f64>> = (0..grid.len())
            .filter(|&i| vals[i] <= level + tol.level)
            .map(|i| grid.node(i))
            .collect();
        if members.is_empty() {
            return Err(Error::EmptyInput);
        }
        let body = hull(&members, tol.geom)?;
        let mut points = body.vertices();
        for p in &members {
            if body.locate(p) == PointLocation::Boundary && !points.contains(p) {
                points.push(p.clone());
            }
        }
        Self::build(points, xi0, tol, TargetSource::Sublevel { level })
    }

    fn build(points: Vec<Vec<f64>>, xi0: Vec<f64>, tol: &ToleranceConfig, source: TargetSource) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if points.iter().any(|p| p.len() != xi0.len()) {
            return Err(Error::DimensionMismatch {
                expected: xi0.len(),
                got: points.iter().find(|p| p.len() != xi0.len()).map_or(0, |p| p.len()),
            });
        }
        let body = hull(&points, tol.geom)?;
        let eps = tol.geom * body.diameter().max(1.0);
        let member = points.iter().position(|p| norm_diff(p, &xi0) <= eps);
        if member.is_none() {
            match body.locate(&xi0) {
                PointLocation::Interior => {}
                PointLocation::Boundary => return Err(Error::NotInteriorPoint(xi0)),
                PointLocation::Exterior => return Err(Error::NecessaryConditionViolated(xi0)),
            }
        }
        Ok(Self {
            points,
            xi0,
            hull: body,
            member,
            source,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn xi0(&self) -> &[f64] {
        &self.xi0
    }

    pub fn hull(&self) -> &ConvexBody {
        &self.hull
    }

    pub fn contains_xi0(&self) -> bool {
        self.member.is_some()
    }

    pub fn source(&self) -> &TargetSource {
        &self.source
    }

    /// Whether `g` is within `eps` of some point of `E`.
    pub fn admits(&self, g: &[f64], eps: f64) -> bool {
        self.points.iter().any(|p| norm_diff(p, g) <= eps)
    }
}

/// Sawtooth on an interval with zero trace relative to `<xi0, x> + c`.
///
/// Each of the `pieces` teeth spends a fraction `t` of its length at slope
/// `alpha` and the rest at `beta`, where `xi0 = t alpha + (1 - t) beta`.
pub fn zigzag_1d(target: &InclusionTarget, omega: &Domain, c: f64, pieces: usize) -> Result<PiecewiseAffineFunction> {
    let Domain::Interval { a, b } = *omega else {
        return Err(Error::DimensionMismatch { expected: 1, got: 2 });
    };
    if target.xi0.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: target.xi0.len(),
        });
    }
    let x0 = target.xi0[0];
    let datum = AffineDatum::new(vec![x0], c);
    if target.contains_xi0() {
        return PiecewiseAffineFunction::affine(omega, &datum);
    }
    if pieces == 0 || !pieces.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "pieces must be a positive even integer, got {pieces}"
        )));
    }
    let alpha = target
        .points
        .iter()
        .map(|p| p[0])
        .filter(|&p| p < x0)
        .fold(f64::NEG_INFINITY, f64::max);
    let beta = target
        .points
        .iter()
        .map(|p| p[0])
        .filter(|&p| p > x0)
        .fold(f64::INFINITY, f64::min);
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::NotBracketed(x0));
    }
    let t = (beta - x0) / (beta - alpha);
    let len = (b - a) / pieces as f64;
    let mut nodes = Vec::with_capacity(2 * pieces + 1);
    let mut values = Vec::with_capacity(2 * pieces + 1);
    for k in 0..pieces {
        let start = if k == 0 { a } else { a + k as f64 * len };
        let mid = start + t * len;
        nodes.push(vec![start]);
        values.push(datum.eval(&[start]));
        nodes.push(vec![mid]);
        values.push(datum.eval(&[start]) + alpha * (mid - start));
    }
    nodes.push(vec![b]);
    values.push(datum.eval(&[b]));
    let cells = (0..2 * pieces).map(|k| vec![k, k + 1]).collect();
    PiecewiseAffineFunction::new(omega.clone(), datum, nodes, cells, values)
}

/// Polar pyramid cell: a polygon `P` containing the origin and the edge
/// gradients realized on the fan from the origin.
#[derive(Debug, Clone)]
pub struct PyramidCell {
    /// Vertices of `P`, counter-clockwise.
    pub vertices: Vec<P2>,
    /// Gradient carried by the triangle over edge `j`, from `vertices[j]` to `vertices[j + 1]`.
    pub gradients: Vec<P2>,
    pub xi0: P2,
}

impl PyramidCell {
    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for p in &self.vertices {
            for q in &self.vertices {
                d = d.max(norm_diff(p, q));
            }
        }
        d
    }

    /// `u = <xi0, x> + c + σ s max(0, min_i <eta_i, σ (x - centre)/s> + 1)` on
    /// `centre + σ s P`. The reflected copy (`σ = -1`) is a pit with the same
    /// face gradients as the upright pyramid.
    #[allow(clippy::too_many_arguments)]
    fn mesh(
        &self,
        centre: P2,
        s: f64,
        sigma: f64,
        datum: &AffineDatum,
        nodes: &mut Vec<Vec<f64>>,
        cells: &mut Vec<Vec<usize>>,
        values: &mut Vec<f64>,
    ) {
        let base = nodes.len();
        nodes.push(centre.to_vec());
        values.push(datum.eval(&centre) + sigma * s);
        for v in &self.vertices {
            let p = vec![centre[0] + sigma * s * v[0], centre[1] + sigma * s * v[1]];
            values.push(datum.eval(&p));
            nodes.push(p);
        }
        let m = self.vertices.len();
        for j in 0..m {
            cells.push(vec![base, base + 1 + j, base + 1 + (j + 1) % m]);
        }
    }
}

/// Pyramid over `P = {x : min_i <xi_i - xi0, x> + 1 > 0}`.
///
/// Returns the cell body and the function on it with datum `<xi0, x>`.
/// When `xi0 ∈ E` the cell is the box `[-1, 1]^2` carrying the datum.
pub fn pyramid_cell(target: &InclusionTarget) -> Result<(ConvexBody, PiecewiseAffineFunction)> {
    let (body, u, _) = pyramid_parts(target)?;
    Ok((body, u))
}

fn pyramid_parts(target: &InclusionTarget) -> Result<(ConvexBody, PiecewiseAffineFunction, Option<PyramidCell>)> {
    if target.xi0.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: target.xi0.len(),
        });
    }
    let xi0 = [target.xi0[0], target.xi0[1]];
    let datum = AffineDatum::new(xi0.to_vec(), 0.0);
    if target.contains_xi0() {
        let domain = Domain::square([-1.0, -1.0], [1.0, 1.0])?;
        let u = PiecewiseAffineFunction::affine(&domain, &datum)?;
        return Ok((domain_body(&domain), u, None));
    }
    let cell = polar_cell(target)?;
    let domain = Domain::polygon(cell.vertices.clone())?;
    let (mut nodes, mut cells, mut values) = (Vec::new(), Vec::new(), Vec::new());
    cell.mesh([0.0, 0.0], 1.0, 1.0, &datum, &mut nodes, &mut cells, &mut values);
    let u = PiecewiseAffineFunction::new(domain.clone(), datum, nodes, cells, values)?;
    Ok((domain_body(&domain), u, Some(cell)))
}

fn polar_cell(target: &InclusionTarget) -> Result<PyramidCell> {
    let xi0 = [target.xi0[0], target.xi0[1]];
    let etas: Vec<P2> = target.points.iter().map(|p| [p[0] - xi0[0], p[1] - xi0[1]]).collect();
    let eta_hull = hull_2d(&etas, target.hull.tol())?;
    let Shape::Polygon(v) = eta_hull.shape() else {
        return Err(Error::NotInteriorPoint(target.xi0.clone()));
    };
    if eta_hull.locate(&[0.0, 0.0]) != PointLocation::Interior {
        return Err(Error::NotInteriorPoint(target.xi0.clone()));
    }
    // vertex j of P solves <v_j, x> = <v_{j+1}, x> = -1
    let m = v.len();
    let corner = |j: usize| -> P2 {
        let (p, q) = (v[j], v[(j + 1) % m]);
        let det = p[0] * q[1] - p[1] * q[0];
        [(-q[1] + p[1]) / det, (q[0] - p[0]) / det]
    };
    let vertices: Vec<P2> = (0..m).map(corner).collect();
    // the edge from corner(j) to corner(j+1) lies on <v_{j+1}, x> = -1
    let gradients = (0..m)
        .map(|j| {
            let e = v[(j + 1) % m];
            [xi0[0] + e[0], xi0[1] + e[1]]
        })
        .collect();
    Ok(PyramidCell {
        vertices,
        gradients,
        xi0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VitaliOptions {
    pub residual_tol: f64,
    /// Limit on the number of triangles.
    pub max_cells: usize,
    /// Upper bound on the diameter of each placed copy.
    pub max_diameter: Option<f64>,
    /// Constant term of the affine datum.
    pub offset: f64,
}

impl Default for VitaliOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-2,
            max_cells: 200_000,
            max_diameter: None,
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VitaliFill {
    pub function: PiecewiseAffineFunction,
    pub placements: usize,
    pub generations: usize,
    /// Set when `max_cells` ran out before the residual target was met.
    pub residual_too_large: bool,
}

/// Orientations of the placed copies: `P` and its point reflection `-P`.
const ORIENTATIONS: [f64; 2] = [1.0, -1.0];

fn oriented(lo: f64, hi: f64, sigma: f64) -> (f64, f64) {
    if sigma > 0.0 {
        (lo, hi)
    } else {
        (-hi, -lo)
    }
}

/// A copy `centre + sigma * scale * P`.
#[derive(Clone, Copy)]
struct Copy2 {
    centre: P2,
    scale: f64,
    sigma: f64,
}

struct Packing {
    /// Outward unit normals of the cell edges with the extent of `P` along each.
    axes: Vec<(P2, f64, f64)>,
    /// Domain constraints `<n, c> + s h_sigma <= b`, stored as `(n, b, low, support)` of `P`.
    walls: Vec<(P2, f64, f64, f64)>,
    bbox_unit: [f64; 4],
    copies: Vec<Copy2>,
    buckets: Vec<Vec<usize>>,
    bucket_n: usize,
    lo: P2,
    span: P2,
}

impl Packing {
    fn new(cell: &PyramidCell, omega: &[P2]) -> Self {
        let support = |n: P2| {
            cell.vertices
                .iter()
                .map(|p| dot(n, *p))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let low = |n: P2| cell.vertices.iter().map(|p| dot(n, *p)).fold(f64::INFINITY, f64::min);
        let m = cell.vertices.len();
        let axes = (0..m)
            .map(|j| {
                let n = outward_normal(cell.vertices[j], cell.vertices[(j + 1) % m]);
                (n, low(n), support(n))
            })
            .collect();
        let k = omega.len();
        let walls = (0..k)
            .map(|i| {
                let n = outward_normal(omega[i], omega[(i + 1) % k]);
                (n, dot(n, omega[i]), low(n), support(n))
            })
            .collect();
        let xs = cell.vertices.iter().map(|p| p[0]);
        let ys = cell.vertices.iter().map(|p| p[1]);
        let bbox_unit = [
            xs.clone().fold(f64::INFINITY, f64::min),
            xs.fold(f64::NEG_INFINITY, f64::max),
            ys.clone().fold(f64::INFINITY, f64::min),
            ys.fold(f64::NEG_INFINITY, f64::max),
        ];
        let lo = [
            omega.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
            omega.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
        ];
        let hi = [
            omega.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
            omega.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
        ];
        let bucket_n = 64;
        Self {
            axes,
            walls,
            bbox_unit,
            copies: Vec::new(),
            buckets: vec![Vec::new(); bucket_n * bucket_n],
            bucket_n,
            lo,
            span: [hi[0] - lo[0], hi[1] - lo[1]],
        }
    }

    /// Largest `s` with `c + σ s P` inside the domain.
    fn wall_bound(&self, c: P2, sigma: f64) -> f64 {
        self.walls
            .iter()
            .map(|&(n, b, lo, hi)| (b - dot(n, c)) / oriented(lo, hi, sigma).1)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `s` with `c + σ s P` interior-disjoint from `other`. Sums of
    /// homothets of `P` and `-P` only have edge normals of `P`, so these axes
    /// separate exactly.
    fn copy_bound(&self, c: P2, sigma: f64, other: &Copy2) -> f64 {
        let (d, t) = (other.centre, other.scale);
        self.axes
            .iter()
            .map(|&(n, lo, hi)| {
                let (lo_c, hi_c) = oriented(lo, hi, sigma);
                let (lo_d, hi_d) = oriented(lo, hi, other.sigma);
                let gap = dot(n, [d[0] - c[0], d[1] - c[1]]);
                ((gap + t * lo_d) / hi_c).max((-gap - t * hi_d) / -lo_c)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn bucket_range(&self, c: P2, s: f64, sigma: f64) -> (usize, usize, usize, usize) {
        let u = self.bbox_unit;
        let b = if sigma > 0.0 { u } else { [-u[1], -u[0], -u[3], -u[2]] };
        let idx = |v: f64, lo: f64, span: f64| {
            (((v - lo) / span * self.bucket_n as f64).floor().max(0.0) as usize).min(self.bucket_n - 1)
        };
        (
            idx(c[0] + s * b[0], self.lo[0], self.span[0]),
            idx(c[0] + s * b[1], self.lo[0], self.span[0]),
            idx(c[1] + s * b[2], self.lo[1], self.span[1]),
            idx(c[1] + s * b[3], self.lo[1], self.span[1]),
        )
    }

    /// Largest admissible scale at centre `c`; copies spanning several
    /// buckets are visited more than once, which the minimum absorbs.
    fn bound(&self, c: P2, sigma: f64, cap: f64) -> f64 {
        let mut s = self.wall_bound(c, sigma).min(cap);
        if s <= 0.0 {
            return 0.0;
        }
        let (x0, x1, y0, y1) = self.bucket_range(c, s, sigma);
        for bx in x0..=x1 {
            for by in y0..=y1 {
                for &id in &self.buckets[bx * self.bucket_n + by] {
                    s = s.min(self.copy_bound(c, sigma, &self.copies[id]));
                    if s <= 0.0 {
                        return 0.0;
                    }
                }
            }
        }
        s
    }

    /// Compass search for a nearby centre admitting a larger copy.
    fn refine(&self, mut c: P2, sigma: f64, mut s: f64, cap: f64, mut step: f64) -> (P2, f64) {
        const D: f64 = std::f64::consts::FRAC_1_SQRT_2;
        const DIRS: [P2; 8] = [
            [1.0, 0.0],
            [-1.0, 0.0],
            [0.0, 1.0],
            [0.0, -1.0],
            [D, D],
            [-D, D],
            [D, -D],
            [-D, -D],
        ];
        let stop = step / 256.0;
        while step >= stop && s < cap {
            let best = DIRS
                .iter()
                .map(|d| {
                    let q = [c[0] + step * d[0], c[1] + step * d[1]];
                    (q, self.bound(q, sigma, cap))
                })
                .fold((c, s), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best.1 > s {
                (c, s) = best;
            } else {
                step *= 0.5;
            }
        }
        (c, s)
    }

    fn place(&mut self, copy: Copy2) {
        let id = self.copies.len();
        self.copies.push(copy);
        let (x0, x1, y0, y1) = self.bucket_range(copy.centre, copy.scale, copy.sigma);
        for bx in x0..=x1 {
            for by in y0..=y1 {
                self.buckets[bx * self.bucket_n + by].push(id);
            }
        }
    }

    /// Largest inscribed homothet: maximize `s` subject to the wall constraints,
    /// by enumerating vertices of the 3-variable feasible polytope.
    fn largest_inscribed(&self) -> Option<Copy2> {
        let mut best: Option<Copy2> = None;
        for sigma in ORIENTATIONS {
            let w: Vec<(P2, f64, f64)> = self
                .walls
                .iter()
                .map(|&(n, b, lo, hi)| (n, b, oriented(lo, hi, sigma).1))
                .collect();
            for i in 0..w.len() {
                for j in i + 1..w.len() {
                    for k in j + 1..w.len() {
                        let rows = [w[i], w[j], w[k]];
                        let a: Vec<[f64; 3]> = rows.iter().map(|(n, _, h)| [n[0], n[1], *h]).collect();
                        let rhs: Vec<f64> = rows.iter().map(|(_, b, _)| *b).collect();
                        let Some(x) = solve3([a[0], a[1], a[2]], [rhs[0], rhs[1], rhs[2]]) else {
                            continue;
                        };
                        let (c, s) = ([x[0], x[1]], x[2]);
                        let feasible = w
                            .iter()
                            .all(|(n, b, h)| dot(*n, c) + s * h <= b + 1e-12 * b.abs().max(1.0));
                        if feasible && s > 0.0 && best.is_none_or(|b| s > b.scale) {
                            best = Some(Copy2 {
                                centre: c,
                                scale: s,
                                sigma,
                            });
                        }
                    }
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    bound: f64,
    idx: usize,
    sigma: f64,
    version: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(other.idx.cmp(&self.idx))
            .then(self.sigma.total_cmp(&other.sigma))
    }
}

/// Greedy packing of homothetic pyramid cells and their reflected pits into
/// a convex polygon.
///
/// The first copy is the largest inscribed one; later copies are centred on
/// lattices whose spacing halves every generation, largest feasible copy first.
pub fn vitali_fill(target: &InclusionTarget, omega: &Domain, opts: &VitaliOptions) -> Result<VitaliFill> {
    let Domain::Polygon { vertices: omega_v } = omega else {
        return Err(Error::DimensionMismatch { expected: 2, got: 1 });
    };
    let (_, _, cell) = pyramid_parts(target)?;
    let datum = AffineDatum::new(target.xi0.clone(), opts.offset);
    let Some(cell) = cell else {
        let function = PiecewiseAffineFunction::affine(omega, &datum)?;
        return Ok(VitaliFill {
            function,
            placements: 0,
            generations: 0,
            residual_too_large: false,
        });
    };
    let total = omega.measure();
    let cell_area = cell.area();
    let cell_diam = cell.diameter();
    let m = cell.vertices.len();
    let cap = opts.max_diameter.map_or(f64::INFINITY, |d| d / cell_diam);
    let mut pack = Packing::new(&cell, omega_v);
    let mut covered = 0.0;
    let residual = |covered: f64| {
        let r = 1.0 - covered / total;
        if r.abs() <= RESIDUAL_FLOOR {
            0.0
        } else {
            r
        }
    };
    let mut cells_used = 0;
    let mut exhausted = false;
    if let Some(first) = pack.largest_inscribed() {
        let s = first.scale.min(cap);
        if m <= opts.max_cells {
            pack.place(Copy2 { scale: s, ..first });
            covered += s * s * cell_area;
            cells_used += m;
        } else {
            exhausted = true;
        }
    }
    let omega_diam = domain_body(omega).diameter();
    let mut h = (omega_diam / 4.0).min(if cap.is_finite() {
        cap * cell_diam
    } else {
        f64::INFINITY
    });
    let mut generations = 0;
    while !exhausted && residual(covered) > opts.residual_tol && h > 1e-7 * omega_diam && generations < 40 {
        generations += 1;
        let accept = 0.5 * h / cell_diam;
        let nx = (pack.span[0] / h).floor() as usize + 1;
        let ny = (pack.span[1] / h).floor() as usize + 1;
        let centres: Vec<P2> = (0..nx * ny)
            .map(|k| [pack.lo[0] + (k / ny) as f64 * h, pack.lo[1] + (k % ny) as f64 * h])
            .filter(|&c| ORIENTATIONS.iter().any(|&o| pack.wall_bound(c, o) > 0.0))
            .collect();
        let snapshot = &pack;
        let initial: Vec<[f64; 2]> = centres
            .par_iter()
            .map(|&c| ORIENTATIONS.map(|o| snapshot.bound(c, o, cap)))
            .collect();
        let mut heap: BinaryHeap<Candidate> = initial
            .iter()
            .enumerate()
            .flat_map(|(idx, b)| (0..2).map(move |k| (idx, ORIENTATIONS[k], b[k])))
            .filter(|&(_, _, b)| b >= accept)
            .map(|(idx, sigma, bound)| Candidate {
                bound,
                idx,
                sigma,
                version: pack.copies.len(),
            })
            .collect();
        while let Some(top) = heap.pop() {
            if residual(covered) <= opts.residual_tol {
                break;
            }
            let c = centres[top.idx];
            let bound = if top.version == pack.copies.len() {
                top.bound
            } else {
                pack.bound(c, top.sigma, cap)
            };
            if bound < accept {
                continue;
            }
            if top.version != pack.copies.len() && heap.peek().is_some_and(|next| next.bound > bound) {
                heap.push(Candidate {
                    bound,
                    version: pack.copies.len(),
                    ..top
                });
                continue;
            }
            if cells_used + m > opts.max_cells {
                exhausted = true;
                break;
            }
            let (c, bound) = pack.refine(c, top.sigma, bound, cap, 0.5 * h);
            pack.place(Copy2 {
                centre: c,
                scale: bound,
                sigma: top.sigma,
            });
            covered += bound * bound * cell_area;
            cells_used += m;
        }
        h *= 0.5;
    }
    let (mut nodes, mut cells, mut values) = (Vec::new(), Vec::new(), Vec::new());
    for c in &pack.copies {
        cell.mesh(c.centre, c.scale, c.sigma, &datum, &mut nodes, &mut cells, &mut values);
    }
    let function = PiecewiseAffineFunction::new(omega.clone(), datum, nodes, cells, values)?;
    let residual_too_large = function.residual_fraction() > opts.residual_tol;
    Ok(VitaliFill {
        placements: pack.copies.len(),
        function,
        generations,
        residual_too_large,
    })
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn outward_normal(a: P2, b: P2) -> P2 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l = (dx * dx + dy * dy).sqrt();
    [dy / l, -dx / l]
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if d.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][col] = b[r];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Teeth of the 1D sawtooth.
    pub pieces: usize,
    pub vitali: VitaliOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            pieces: 8,
            vitali: VitaliOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub relaxed_value: f64,
    pub branch: Branch,
    /// Largest `f(grad u)` over the cells; the residual set is excluded.
    pub ess_sup_covered: f64,
    pub residual_fraction: f64,
    pub sup_distance: f64,
    pub target_size: usize,
    pub cells: usize,
    pub residual_too_large: bool,
    /// Whether `f(xi0) <= relaxed value + level tol`, i.e. whether the residual
    /// gradient also satisfies the bound.
    pub residual_gradient_admissible: bool,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub function: PiecewiseAffineFunction,
    pub verdict: ExistenceVerdict,
    pub report: SolveReport,
}

/// Builds a minimizer for the affine datum `<xi0, x> + c` on `omega`.
#[allow(non_snake_case)]
pub fn solve_P(
    field: &ScalarField,
    xi0: &[f64],
    c: f64,
    grid: &GridSpec,
    omega: &Domain,
    opts: &SolveOptions,
    tol: &ToleranceConfig,
) -> Result<Solution> {
    if omega.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: omega.dim(),
        });
    }
    let verdict = decide_affine(field, xi0, grid, tol)?;
    let branch = match &verdict.decision {
        Decision::Exists { branch } => *branch,
        Decision::NotExists { .. } => return Err(Error::VerdictWasNotExists),
        Decision::Unknown { reason } => return Err(Error::VerdictUnknown(reason.clone())),
    };
    let v = verdict.relaxed_value;
    let datum = AffineDatum::new(xi0.to_vec(), c);
    let (function, target_size, residual_too_large) = match branch {
        Branch::InLevelSetOfF => (PiecewiseAffineFunction::affine(omega, &datum)?, 1, false),
        Branch::InteriorOfEnvelopeLevelSet => {
            let target = InclusionTarget::from_sublevel(field, grid, v, xi0.to_vec(), tol)?;
            let size = target.points().len();
            match field.dim() {
                1 => (zigzag_1d(&target, omega, c, opts.pieces)?, size, false),
                _ => {
                    let fill = vitali_fill(
                        &target,
                        omega,
                        &VitaliOptions {
                            offset: c,
                            ..opts.vitali
                        },
                    )?;
                    (fill.function, size, fill.residual_too_large)
                }
            }
        }
    };
    let ess_sup_covered = function
        .gradients()
        .iter()
        .map(|g| field.eval(g))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let report = SolveReport {
        relaxed_value: v,
        branch,
        ess_sup_covered,
        residual_fraction: function.residual_fraction(),
        sup_distance: function.sup_distance(),
        target_size,
        cells: function.cell_count(),
        residual_too_large,
        residual_gradient_admissible: field.eval(xi0)? <= v + tol.level,
    };
    Ok(Solution {
        function,
        verdict,
        report,
    })
}
