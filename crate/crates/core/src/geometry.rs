//! Planar convex geometry: hulls, point location, extreme and exposed points,
//! supporting directions.
//!
//! Tolerances are scale-free: a body with diameter `d` and tolerance `tol`
//! treats distances below `tol * d` as zero. Degenerate bodies (a point or
//! a segment in the plane) are first-class and have empty interior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type P2 = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Strictly convex vertex cycle, counter-clockwise, at least 3 vertices.
    Polygon(Vec<P2>),
    Segment(P2, P2),
    Point(P2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyFile", into = "BodyFile")]
pub struct ConvexBody {
    shape: Shape,
    tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointLocation {
    Interior,
    Boundary,
    Exterior,
}

/// Serialized form of a [`ConvexBody`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub dim: usize,
    pub kind: BodyKind,
    pub vertices: Vec<Vec<f64>>,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyKind {
    Interval,
    Polygon,
    Segment,
    Point,
}

impl From<ConvexBody> for BodyFile {
    fn from(b: ConvexBody) -> Self {
        let (dim, kind, vertices) = match b.shape {
            Shape::Interval { lo, hi } => (1, BodyKind::Interval, vec![vec![lo], vec![hi]]),
            Shape::Polygon(v) => (2, BodyKind::Polygon, v.iter().map(|p| p.to_vec()).collect()),
            Shape::Segment(a, c) => (2, BodyKind::Segment, vec![a.to_vec(), c.to_vec()]),
            Shape::Point(p) => (2, BodyKind::Point, vec![p.to_vec()]),
        };
        BodyFile {
            dim,
            kind,
            vertices,
            tol: b.tol,
        }
    }
}

impl TryFrom<BodyFile> for ConvexBody {
    type Error = Error;
    fn try_from(f: BodyFile) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("body: {m}"));
        if f.vertices.iter().any(|v| v.len() != f.dim) {
            return Err(bad("vertex dimension mismatch"));
        }
        let p2 = |v: &Vec<f64>| [v[0], v[1]];
        let shape = match (f.kind, f.vertices.len()) {
            (BodyKind::Interval, 2) if f.dim == 1 => {
                if f.vertices[0][0] > f.vertices[1][0] {
                    return Err(bad("interval with lo > hi"));
                }
                Shape::Interval {
                    lo: f.vertices[0][0],
                    hi: f.vertices[1][0],
                }
            }
            (BodyKind::Polygon, n) if f.dim == 2 && n >= 3 => Shape::Polygon(f.vertices.iter().map(p2).collect()),
            (BodyKind::Segment, 2) if f.dim == 2 => Shape::Segment(p2(&f.vertices[0]), p2(&f.vertices[1])),
            (BodyKind::Point, 1) if f.dim == 2 => Shape::Point(p2(&f.vertices[0])),
            _ => return Err(bad("kind/vertex count mismatch")),
        };
        Ok(ConvexBody { shape, tol: f.tol })
    }
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn len(a: P2) -> f64 {
    a[0].hypot(a[1])
}

fn dist(a: P2, b: P2) -> f64 {
    len(sub(a, b))
}

/// Distance from `p` to the closed segment `[a, b]`.
fn dist_to_segment(p: P2, a: P2, b: P2) -> f64 {
    let d = sub(b, a);
    let l2 = dot(d, d);
    if l2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), d) / l2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Convex hull of a point set of dimension 1 or 2.
pub fn hull(points: &[Vec<f64>], tol: f64) -> Result<ConvexBody> {
    let Some(first) = points.first() else {
        return Err(Error::EmptyInput);
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: points.iter().find(|p| p.len() != dim).map_or(0, |p| p.len()),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite point".into()));
    }
    match dim {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            Ok(ConvexBody {
                shape: Shape::Interval { lo, hi },
                tol,
            })
        }
        2 => hull_2d(&points.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>(), tol),
        d => Err(Error::DimensionMismatch { expected: 2, got: d }),
    }
}

/// Monotone-chain hull followed by canonicalization.
pub fn hull_2d(points: &[P2], tol: f64) -> Result<ConvexBody> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() == 1 {
        return Ok(ConvexBody {
            shape: Shape::Point(pts[0]),
            tol,
        });
    }
    let mut chain: Vec<P2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = chain.len();
        let iter: Box<dyn Iterator<Item = &P2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while chain.len() >= start + 2 {
                let (a, b) = (chain[chain.len() - 2], chain[chain.len() - 1]);
                if cross(sub(b, a), sub(p, b)) <= 0.0 {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(p);
        }
        chain.pop();
    }
    Ok(ConvexBody {
        shape: canonical_shape(chain, tol),
        tol,
    })
}

fn canonical_shape(mut v: Vec<P2>, tol: f64) -> Shape {
    let diameter = polygon_diameter(&v);
    if v.len() == 1 || diameter == 0.0 {
        return Shape::Point(v[0]);
    }
    let eps = tol * diameter;
    // thin bodies collapse to their longest chord
    let (i, j) = farthest_pair(&v);
    let (a, b) = (v[i], v[j]);
    let width = v
        .iter()
        .map(|&p| cross(sub(b, a), sub(p, a)).abs() / dist(a, b))
        .fold(0.0, f64::max);
    if v.len() == 2 || width <= eps {
        let (a, b) = if (a[0], a[1]) <= (b[0], b[1]) { (a, b) } else { (b, a) };
        return Shape::Segment(a, b);
    }
    loop {
        let n = v.len();
        let drop = (0..n).find(|&k| {
            let (p, q, r) = (v[(k + n - 1) % n], v[k], v[(k + 1) % n]);
            cross(sub(r, p), sub(q, p)).abs() / dist(p, r) <= eps
        });
        match drop {
            Some(k) if n > 3 => {
                v.remove(k);
            }
            _ => break,
        }
    }
    Shape::Polygon(v)
}

fn polygon_diameter(v: &[P2]) -> f64 {
    let (i, j) = farthest_pair(v);
    dist(v[i], v[j])
}

fn farthest_pair(v: &[P2]) -> (usize, usize) {
    let mut best = (0, 0, -1.0);
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d = dist(v[i], v[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    (best.0, best.1)
}

impl ConvexBody {
    pub fn interval(lo: f64, hi: f64, tol: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!("interval [{lo}, {hi}]")));
        }
        Ok(Self {
            shape: Shape::Interval { lo, hi },
            tol,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Points and segments in the plane, and single-point intervals.
    pub fn is_degenerate(&self) -> bool {
        match self.shape {
            Shape::Interval { lo, hi } => lo == hi,
            Shape::Polygon(_) => false,
            Shape::Segment(..) | Shape::Point(_) => true,
        }
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match &self.shape {
            Shape::Interval { lo, hi } if lo == hi => vec![vec![*lo]],
            Shape::Interval { lo, hi } => vec![vec![*lo], vec![*hi]],
            Shape::Polygon(v) => v.iter().map(|p| p.to_vec()).collect(),
            Shape::Segment(a, b) => vec![a.to_vec(), b.to_vec()],
            Shape::Point(p) => vec![p.to_vec()],
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Interval { lo, hi } => hi - lo,
            Shape::Polygon(v) => polygon_diameter(v),
            Shape::Segment(a, b) => dist(*a, *b),
            Shape::Point(_) => 0.0,
        }
    }

    /// Length (1D) or area (2D); zero for degenerate planar bodies.
    pub fn measure(&self) -> f64 {
        match &self.shape {
            Shape::Interval { lo, hi } => hi - lo,
            Shape::Polygon(v) => crate::fields::polygon_area(v),
            _ => 0.0,
        }
    }

    /// Absolute distance below which points are considered on the boundary.
    pub fn effective_tol(&self) -> f64 {
        let d = self.diameter();
        if d > 0.0 {
            self.tol * d
        } else {
            let m = self.vertices()[0].iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            self.tol * m
        }
    }

    /// Distance from `x` to the boundary, positive inside and negative outside.
    ///
    /// Exact inside; outside a polygon it is the largest violated edge
    /// distance, which never exceeds the true distance.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Interval { lo, hi } => (x[0] - lo).min(hi - x[0]),
            Shape::Polygon(v) => {
                let n = v.len();
                let p = [x[0], x[1]];
                (0..n)
                    .map(|i| {
                        let (a, b) = (v[i], v[(i + 1) % n]);
                        cross(sub(b, a), sub(p, a)) / dist(a, b)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::Segment(a, b) => -dist_to_segment([x[0], x[1]], *a, *b),
            Shape::Point(a) => -dist([x[0], x[1]], *a),
        }
    }

    pub fn locate(&self, x: &[f64]) -> PointLocation {
        let d = self.depth(x);
        let eps = self.effective_tol();
        if d > eps && !self.is_degenerate() {
            PointLocation::Interior
        } else if d >= -eps {
            PointLocation::Boundary
        } else {
            PointLocation::Exterior
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.locate(x) != PointLocation::Exterior
    }

    pub fn extreme_points(&self) -> Vec<Vec<f64>> {
        self.vertices()
    }

    /// Whether `x` coincides (within tolerance) with an extreme point.
    pub fn is_extreme(&self, x: &[f64]) -> bool {
        let eps = self.effective_tol();
        self.extreme_points()
            .iter()
            .any(|v| v.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= eps)
    }

    /// Vertices whose normal cone has opening angle above `angle_tol`.
    ///
    /// On a canonical polygon every vertex turns by a positive angle, so with
    /// a tiny `angle_tol` this coincides with [`Self::extreme_points`]. A
    /// coarse `angle_tol` discards vertices that are only barely exposed,
    /// the sampled analogue of extreme points that are not exposed.
    pub fn exposed_points(&self, angle_tol: f64) -> Vec<Vec<f64>> {
        match &self.shape {
            Shape::Polygon(v) => {
                let n = v.len();
                (0..n)
                    .filter(|&i| {
                        let e1 = sub(v[i], v[(i + n - 1) % n]);
                        let e2 = sub(v[(i + 1) % n], v[i]);
                        cross(e1, e2).atan2(dot(e1, e2)) > angle_tol
                    })
                    .map(|i| v[i].to_vec())
                    .collect()
            }
            _ => self.vertices(),
        }
    }

    /// Vertices maximizing `<nu, .>` within tolerance: the contact set of the
    /// supporting line with outward normal `nu`.
    pub fn supporting_contact(&self, nu: &[f64]) -> Vec<Vec<f64>> {
        let verts = self.vertices();
        let h = |v: &Vec<f64>| v.iter().zip(nu).map(|(a, b)| a * b).sum::<f64>();
        let top = verts.iter().map(h).fold(f64::NEG_INFINITY, f64::max);
        let eps = self.effective_tol() * nu.iter().map(|a| a * a).sum::<f64>().sqrt();
        verts.into_iter().filter(|v| h(v) >= top - eps).collect()
    }

    /// Unit outward normal of a supporting line through the boundary point `x0`.
    ///
    /// For a planar segment the two normals are both valid; the
    /// lexicographically larger one is returned.
    pub fn separating_direction(&self, x0: &[f64]) -> Result<Vec<f64>> {
        if self.locate(x0) != PointLocation::Boundary {
            return Err(Error::NotOnBoundary(x0.to_vec()));
        }
        let eps = self.effective_tol();
        let nu = match &self.shape {
            Shape::Interval { lo, hi } => {
                if lo < hi && (x0[0] - lo).abs() < (x0[0] - hi).abs() {
                    vec![-1.0]
                } else {
                    vec![1.0]
                }
            }
            Shape::Point(_) => vec![1.0, 0.0],
            Shape::Segment(a, b) => {
                let d = sub(*b, *a);
                let l = len(d);
                let n = [clean(-d[1] / l), clean(d[0] / l)];
                let m = [clean(-n[0]), clean(-n[1])];
                if (n[0], n[1]) >= (m[0], m[1]) {
                    n.to_vec()
                } else {
                    m.to_vec()
                }
            }
            Shape::Polygon(v) => {
                let n = v.len();
                let p = [x0[0], x0[1]];
                let mut acc = [0.0, 0.0];
                let mut best = (f64::INFINITY, [0.0, 0.0]);
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let e = sub(b, a);
                    let l = len(e);
                    let outward = [e[1] / l, -e[0] / l];
                    let d = (cross(e, sub(p, a)) / l).abs();
                    if d <= eps {
                        acc = [acc[0] + outward[0], acc[1] + outward[1]];
                    }
                    if d < best.0 {
                        best = (d, outward);
                    }
                }
                let l = len(acc);
                if l > 1e-12 {
                    vec![clean(acc[0] / l), clean(acc[1] / l)]
                } else {
                    vec![clean(best.1[0]), clean(best.1[1])]
                }
            }
        };
        Ok(nu)
    }

    /// Sampled proxy for strict convexity: every canonical edge shorter than
    /// `threshold`. No polygon is strictly convex in the continuum sense.
    pub fn is_strictly_convex_sampled(&self, threshold: f64) -> bool {
        match &self.shape {
            Shape::Interval { lo, hi } => lo < hi,
            Shape::Polygon(v) => {
                let n = v.len();
                (0..n).all(|i| dist(v[i], v[(i + 1) % n]) < threshold)
            }
            Shape::Segment(..) | Shape::Point(_) => false,
        }
    }

    pub fn max_edge_length(&self) -> f64 {
        match &self.shape {
            Shape::Polygon(v) => {
                let n = v.len();
                (0..n).map(|i| dist(v[i], v[(i + 1) % n])).fold(0.0, f64::max)
            }
            _ => self.diameter(),
        }
    }

    /// Writes `x` as a convex combination of at most `dim + 1` vertices.
    ///
    /// Returns `(point, weight)` pairs, padded by repeating a vertex with
    /// weight zero so that there are always exactly `dim + 1` entries.
    /// `None` when `x` is outside the body.
    pub fn convex_weights(&self, x: &[f64]) -> Option<Vec<(Vec<f64>, f64)>> {
        if !self.contains(x) {
            return None;
        }
        let out = match &self.shape {
            Shape::Interval { lo, hi } => {
                if lo == hi {
                    vec![(vec![*lo], 1.0), (vec![*lo], 0.0)]
                } else {
                    let t = ((x[0] - lo) / (hi - lo)).clamp(0.0, 1.0);
                    vec![(vec![*lo], 1.0 - t), (vec![*hi], t)]
                }
            }
            Shape::Point(p) => vec![(p.to_vec(), 1.0), (p.to_vec(), 0.0), (p.to_vec(), 0.0)],
            Shape::Segment(a, b) => {
                let d = sub(*b, *a);
                let t = (dot(sub([x[0], x[1]], *a), d) / dot(d, d)).clamp(0.0, 1.0);
                vec![(a.to_vec(), 1.0 - t), (b.to_vec(), t), (a.to_vec(), 0.0)]
            }
            Shape::Polygon(v) => {
                let p = [x[0], x[1]];
                let mut best: Option<([f64; 3], usize)> = None;
                for i in 1..v.len() - 1 {
                    let w = barycentric(p, v[0], v[i], v[i + 1]);
                    let score = w[0].min(w[1]).min(w[2]);
                    if best.is_none_or(|(bw, _)| score > bw[0].min(bw[1]).min(bw[2])) {
                        best = Some((w, i));
                    }
                    if score >= 0.0 {
                        break;
                    }
                }
                let (w, i) = best?;
                let w = [w[0].max(0.0), w[1].max(0.0), w[2].max(0.0)];
                let s = w[0] + w[1] + w[2];
                vec![
                    (v[0].to_vec(), w[0] / s),
                    (v[i].to_vec(), w[1] / s),
                    (v[i + 1].to_vec(), w[2] / s),
                ]
            }
        };
        Some(out)
    }
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else {
        v
    }
}

pub(crate) fn barycentric(p: P2, a: P2, b: P2, c: P2) -> [f64; 3] {
    let det = cross(sub(b, a), sub(c, a));
    let wb = cross(sub(p, a), sub(c, a)) / det;
    let wc = cross(sub(b, a), sub(p, a)) / det;
    [1.0 - wb - wc, wb, wc]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    const TOL: f64 = 1e-9;

    fn circle(n: usize) -> Vec<P2> {
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                [t.cos(), t.sin()]
            })
            .collect()
    }

    fn unit_square() -> ConvexBody {
        hull_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], TOL).unwrap()
    }

    fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn hull_drops_interior_point() {
        let b = hull_2d(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.25, 0.25]], TOL).unwrap();
        assert_eq!(
            sorted(b.vertices()),
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]
        );
    }

    #[test]
    fn hull_1d() {
        let b = hull(&[vec![-1.0], vec![0.3], vec![1.0]], TOL).unwrap();
        assert_eq!(b.shape(), &Shape::Interval { lo: -1.0, hi: 1.0 });
        assert!(matches!(hull(&[], TOL), Err(Error::EmptyInput)));
    }

    #[test]
    fn wells_give_degenerate_segment() {
        let b = hull_2d(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]], TOL).unwrap();
        assert_eq!(b.shape(), &Shape::Segment([-1.0, 0.0], [1.0, 0.0]));
        assert!(b.is_degenerate());
        assert_eq!(b.locate(&[0.0, 0.0]), PointLocation::Boundary);
        assert_eq!(b.locate(&[0.0, 0.1]), PointLocation::Exterior);
        assert_eq!(sorted(b.extreme_points()), vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(b.separating_direction(&[0.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        assert!(!b.is_strictly_convex_sampled(0.1));
    }

    #[test]
    fn locate_cases() {
        let sq = unit_square();
        assert_eq!(sq.locate(&[0.5, 0.5]), PointLocation::Interior);
        assert_eq!(sq.locate(&[1.0, 0.5]), PointLocation::Boundary);
        assert_eq!(sq.locate(&[1.5, 0.5]), PointLocation::Exterior);
        let iv = ConvexBody::interval(-1.0, 1.0, TOL).unwrap();
        assert_eq!(iv.locate(&[1.0]), PointLocation::Boundary);
        assert_eq!(iv.locate(&[0.0]), PointLocation::Interior);
        assert_eq!(iv.separating_direction(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(iv.separating_direction(&[-1.0]).unwrap(), vec![-1.0]);
        assert!(matches!(iv.separating_direction(&[0.0]), Err(Error::NotOnBoundary(_))));
    }

    #[test]
    fn square_extreme_equals_exposed() {
        let sq = unit_square();
        let ext = sorted(sq.extreme_points());
        assert_eq!(
            ext,
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
        assert_eq!(sorted(sq.exposed_points(TOL)), ext);
        assert!(!sq.is_strictly_convex_sampled(0.1));
    }

    #[test]
    fn point_body() {
        let p = hull_2d(&[[0.5, 0.5], [0.5, 0.5]], TOL).unwrap();
        assert_eq!(p.extreme_points(), vec![vec![0.5, 0.5]]);
        assert_eq!(p.exposed_points(TOL), vec![vec![0.5, 0.5]]);
        assert_eq!(p.locate(&[0.5, 0.5]), PointLocation::Boundary);
    }

    #[test]
    fn disc_outward_normal() {
        let b = hull_2d(&circle(256), TOL).unwrap();
        let nu = b.separating_direction(&[1.0, 0.0]).unwrap();
        assert!((nu[0] - 1.0).abs() < 1e-3 && nu[1].abs() < 0.05);
    }

    #[test]
    fn circle_256_is_strict_proxy() {
        let b = hull_2d(&circle(256), TOL).unwrap();
        // 2 sin(pi/256) ~ 0.0245
        assert!(b.max_edge_length() < 0.1);
        assert!(b.is_strictly_convex_sampled(0.1));
        assert_eq!(sorted(b.exposed_points(TOL)), sorted(b.extreme_points()));
    }

    #[test]
    fn stadium_has_barely_exposed_corners() {
        // disc union [0,1]x[-1,1]: (0, +-1) are extreme, not exposed in the continuum
        let mut pts = circle(64);
        pts.extend([[0.0, -1.0], [1.0, -1.0], [1.0, 1.0], [0.0, 1.0]]);
        let b = hull_2d(&pts, TOL).unwrap();
        assert!(b.is_extreme(&[0.0, 1.0]));
        assert!(b.is_extreme(&[0.0, -1.0]));
        // the horizontal supporting line touches a whole edge, not just the corner
        let contact = b.supporting_contact(&[0.0, 1.0]);
        assert_eq!(contact.len(), 2);
        // direct enumeration: the corner's turn angle is half a sample step
        let step = TAU / 64.0;
        let fine = b.exposed_points(TOL);
        let coarse = b.exposed_points(step);
        let has = |s: &Vec<Vec<f64>>, p: [f64; 2]| {
            s.iter()
                .any(|v| (v[0] - p[0]).abs() < 1e-12 && (v[1] - p[1]).abs() < 1e-12)
        };
        assert!(has(&fine, [0.0, 1.0]));
        assert!(!has(&coarse, [0.0, 1.0]));
        assert!(!has(&coarse, [0.0, -1.0]));
        // square corners stay exposed at the coarse tolerance
        assert!(has(&coarse, [1.0, 1.0]));
        assert!(coarse.len() < fine.len());
    }

    #[test]
    fn collinear_points_are_canonicalized() {
        let b = hull_2d(
            &[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 1.0], [0.0, 1.0]],
            TOL,
        )
        .unwrap();
        assert_eq!(b.vertices().len(), 4);
    }

    #[test]
    fn convex_weights_reconstruct() {
        let sq = unit_square();
        let w = sq.convex_weights(&[0.3, 0.6]).unwrap();
        assert_eq!(w.len(), 3);
        let s: f64 = w.iter().map(|p| p.1).sum();
        let x: f64 = w.iter().map(|p| p.1 * p.0[0]).sum();
        let y: f64 = w.iter().map(|p| p.1 * p.0[1]).sum();
        assert!((s - 1.0).abs() < 1e-12 && (x - 0.3).abs() < 1e-12 && (y - 0.6).abs() < 1e-12);
        assert!(sq.convex_weights(&[2.0, 0.0]).is_none());
    }

    #[test]
    fn body_serialization_round_trip() {
        for b in [
            unit_square(),
            ConvexBody::interval(-1.0, 2.0, TOL).unwrap(),
            hull_2d(&[[1.0, 0.0], [-1.0, 0.0]], TOL).unwrap(),
        ] {
            let s = serde_json::to_string(&b).unwrap();
            assert_eq!(serde_json::from_str::<ConvexBody>(&s).unwrap(), b);
        }
    }
}
