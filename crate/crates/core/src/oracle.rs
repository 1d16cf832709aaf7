//! Independent brute-force checks: direct minimax minimization of
//! `max_T f(grad u|_T)` over piecewise-affine `u`, and audits of constructed
//! solutions.
//!
//! The one-dimensional oracle is exact on its slope grid. The two-dimensional
//! oracle is a local descent and only ever yields an upper bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{AffineDatum, Domain, GridSpec, ScalarField};
use crate::inclusion::{zigzag_1d, InclusionTarget, PiecewiseAffineFunction};
use crate::tol::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimaxMethod {
    BisectionReachability1d,
    LocalDescent2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxResult {
    pub value: f64,
    pub minimizer: PiecewiseAffineFunction,
    pub method: MinimaxMethod,
    pub iterations: usize,
    pub converged: bool,
    /// Whether `value` is only an upper bound for the infimum.
    pub upper_bound_only: bool,
}

const BISECTION_STEPS: usize = 60;

/// Bisection on the level `c`: with fixed endpoint values a sawtooth whose
/// slopes lie in `S_c = {slope-grid nodes with f <= c}` exists iff
/// `xi0 ∈ [min S_c, max S_c]`. `xi0` itself counts as a slope.
pub fn relaxed_min_1d(
    field: &ScalarField,
    xi0: f64,
    omega: &Domain,
    segments: usize,
    slopes: &GridSpec,
    tol: &ToleranceConfig,
) -> Result<MinimaxResult> {
    if field.dim() != 1 || slopes.dim() != 1 || omega.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: 2 });
    }
    let mut cand: Vec<(f64, f64)> = (0..slopes.len())
        .map(|i| {
            let s = slopes.coord(0, i);
            Ok((s, field.eval(&[s])?))
        })
        .collect::<Result<_>>()?;
    cand.push((xi0, field.eval(&[xi0])?));
    let reachable = |c: f64| {
        let (lo, hi) = cand
            .iter()
            .filter(|(_, v)| *v <= c)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (s, _)| {
                (lo.min(*s), hi.max(*s))
            });
        lo <= xi0 && xi0 <= hi
    };
    let mut hi = cand.last().unwrap().1;
    let mut lo = cand.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    if !reachable(lo) {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if reachable(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    } else {
        hi = lo;
    }
    // the optimal level is attained by some candidate; snap to it
    let value = cand
        .iter()
        .map(|c| c.1)
        .filter(|&v| v <= hi)
        .fold(f64::NEG_INFINITY, f64::max);
    let value = if reachable(value) { value } else { hi };
    let alpha = cand
        .iter()
        .filter(|(s, v)| *v <= value && *s <= xi0)
        .map(|c| c.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let beta = cand
        .iter()
        .filter(|(s, v)| *v <= value && *s >= xi0)
        .map(|c| c.0)
        .fold(f64::INFINITY, f64::min);
    let pieces = segments.max(2).div_ceil(2) * 2;
    let target = InclusionTarget::new(vec![vec![alpha], vec![beta]], vec![xi0], tol)?;
    let minimizer = zigzag_1d(&target, omega, 0.0, pieces)?;
    Ok(MinimaxResult {
        value,
        minimizer,
        method: MinimaxMethod::BisectionReachability1d,
        iterations: BISECTION_STEPS,
        converged: true,
        upper_bound_only: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentOptions {
    /// Nodes per side of the structured mesh.
    pub nodes_per_side: usize,
    pub restarts: usize,
    pub seed: u64,
    pub epochs_per_temperature: usize,
    pub initial_temperature: f64,
    pub final_temperature: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            nodes_per_side: 9,
            restarts: 8,
            seed: 0,
            epochs_per_temperature: 50,
            initial_temperature: 1.0,
            final_temperature: 1e-4,
        }
    }
}

struct Mesh {
    nodes: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    free: Vec<usize>,
    /// Triangles incident to each node.
    star: Vec<Vec<usize>>,
    h: f64,
}

fn structured_mesh(lo: [f64; 2], hi: [f64; 2], m: usize) -> Mesh {
    let idx = |i: usize, j: usize| i * m + j;
    let mut nodes = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let t = |k: usize, a: f64, b: f64| {
                if k == m - 1 {
                    b
                } else {
                    a + (b - a) * k as f64 / (m - 1) as f64
                }
            };
            nodes.push([t(i, lo[0], hi[0]), t(j, lo[1], hi[1])]);
        }
    }
    let mut tris = Vec::with_capacity(2 * (m - 1) * (m - 1));
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    let free = (0..m * m)
        .filter(|k| (1..m - 1).contains(&(k / m)) && (1..m - 1).contains(&(k % m)))
        .collect();
    let mut star = vec![Vec::new(); m * m];
    for (t, tri) in tris.iter().enumerate() {
        for &v in tri {
            star[v].push(t);
        }
    }
    let h = ((hi[0] - lo[0]) / (m - 1) as f64).min((hi[1] - lo[1]) / (m - 1) as f64);
    Mesh {
        nodes,
        tris,
        free,
        star,
        h,
    }
}

fn tri_gradient(mesh: &Mesh, u: &[f64], t: usize) -> [f64; 2] {
    let [a, b, c] = mesh.tris[t];
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    let (e1, e2) = ([pb[0] - pa[0], pb[1] - pa[1]], [pc[0] - pa[0], pc[1] - pa[1]]);
    let (d1, d2) = (u[b] - u[a], u[c] - u[a]);
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    [(d1 * e2[1] - d2 * e1[1]) / det, (e1[0] * d2 - e2[0] * d1) / det]
}

fn rectangle(omega: &Domain) -> Option<([f64; 2], [f64; 2])> {
    let Domain::Polygon { vertices } = omega else {
        return None;
    };
    let lo = [
        vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min),
        vertices.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min),
    ];
    let hi = [
        vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max),
        vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max),
    ];
    let is_box = vertices.len() == 4
        && vertices
            .iter()
            .all(|v| (v[0] == lo[0] || v[0] == hi[0]) && (v[1] == lo[1] || v[1] == hi[1]));
    is_box.then_some((lo, hi))
}

struct Descent<'a> {
    field: &'a ScalarField,
    mesh: &'a Mesh,
    u: Vec<f64>,
    fv: Vec<f64>,
}

impl Descent<'_> {
    fn max(&self) -> f64 {
        self.fv.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn refresh(&mut self, t: usize) -> Result<()> {
        let g = tri_gradient(self.mesh, &self.u, t);
        self.fv[t] = self.field.eval(&g)?;
        Ok(())
    }

    /// Smoothed max with node `i` set to `x`, given the other triangles' contribution.
    fn local(&mut self, i: usize, x: f64, tau: f64, shift: f64, rest: f64) -> Result<f64> {
        self.u[i] = x;
        let mut s = rest;
        for k in 0..self.mesh.star[i].len() {
            let t = self.mesh.star[i][k];
            self.refresh(t)?;
            s += ((self.fv[t] - shift) / tau).exp();
        }
        Ok(shift + tau * s.ln())
    }

    /// One golden-section sweep of coordinate descent over the free nodes.
    fn epoch(&mut self, tau: f64, radius: f64) -> Result<()> {
        const GOLD: f64 = 0.618_033_988_749_894_8;
        for fi in 0..self.mesh.free.len() {
            let i = self.mesh.free[fi];
            let shift = self.max();
            let star = &self.mesh.star[i];
            let total: f64 = self.fv.iter().map(|v| ((v - shift) / tau).exp()).sum();
            let own: f64 = star.iter().map(|&t| ((self.fv[t] - shift) / tau).exp()).sum();
            let rest = (total - own).max(0.0);
            let x0 = self.u[i];
            let base = self.local(i, x0, tau, shift, rest)?;
            let (mut a, mut b) = (x0 - radius, x0 + radius);
            let mut c = b - GOLD * (b - a);
            let mut d = a + GOLD * (b - a);
            let mut fc = self.local(i, c, tau, shift, rest)?;
            let mut fd = self.local(i, d, tau, shift, rest)?;
            for _ in 0..40 {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - GOLD * (b - a);
                    fc = self.local(i, c, tau, shift, rest)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + GOLD * (b - a);
                    fd = self.local(i, d, tau, shift, rest)?;
                }
            }
            let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
            let keep = if fx < base { x } else { x0 };
            self.local(i, keep, tau, shift, rest)?;
        }
        Ok(())
    }
}

/// Smoothed-max coordinate descent on a structured triangulation of a
/// rectangle, boundary nodes pinned to `<xi0, x>`, with random restarts.
pub fn relaxed_min_2d(
    field: &ScalarField,
    xi0: &[f64],
    omega: &Domain,
    opts: &DescentOptions,
    tol: &ToleranceConfig,
) -> Result<MinimaxResult> {
    if field.dim() != 2 || xi0.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: xi0.len(),
        });
    }
    let (lo, hi) = rectangle(omega)
        .ok_or_else(|| Error::InvalidArgument("the descent oracle meshes axis-aligned rectangles only".into()))?;
    if opts.nodes_per_side < 3 || opts.nodes_per_side > 20 {
        return Err(Error::InvalidArgument("nodes per side must lie in 3..=20".into()));
    }
    let mesh = structured_mesh(lo, hi, opts.nodes_per_side);
    let datum = AffineDatum::new(xi0.to_vec(), 0.0);
    let base: Vec<f64> = mesh.nodes.iter().map(|p| datum.eval(p)).collect();
    let runs: Vec<(f64, Vec<f64>, usize, bool)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            let mut u = base.clone();
            if r > 0 {
                for &i in &mesh.free {
                    u[i] += rng.gen_range(-1.0..1.0) * mesh.h;
                }
            }
            let mut run = Descent {
                field,
                mesh: &mesh,
                fv: vec![0.0; mesh.tris.len()],
                u,
            };
            for t in 0..mesh.tris.len() {
                run.refresh(t)?;
            }
            let mut best = (run.max(), run.u.clone());
            let mut tau = opts.initial_temperature;
            let mut epochs = 0;
            let mut last_gain = f64::INFINITY;
            while tau >= opts.final_temperature * (1.0 - 1e-12) {
                for _ in 0..opts.epochs_per_temperature {
                    let before = run.max();
                    run.epoch(tau, mesh.h * tau.sqrt().max(0.05))?;
                    epochs += 1;
                    let now = run.max();
                    last_gain = before - now;
                    if now < best.0 {
                        best = (now, run.u.clone());
                    }
                }
                tau *= 0.5;
            }
            Ok((best.0, best.1, epochs, last_gain.abs() < tol.level))
        })
        .collect::<Result<_>>()?;
    let (value, u, iterations, converged) = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    let nodes = mesh.nodes.iter().map(|p| p.to_vec()).collect();
    let cells = mesh.tris.iter().map(|t| t.to_vec()).collect();
    let minimizer = PiecewiseAffineFunction::new(omega.clone(), datum, nodes, cells, u)?;
    Ok(MinimaxResult {
        value,
        minimizer,
        method: MinimaxMethod::LocalDescent2d,
        iterations,
        converged,
        upper_bound_only: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Largest `f(grad u)` over the cells.
    pub max_value: f64,
    pub worst_cell: Option<usize>,
    pub claimed: f64,
    pub pass: bool,
    pub residual_fraction: f64,
}

/// Checks `f(grad u) <= claimed + level tol` on every cell.
pub fn audit_solution(
    field: &ScalarField,
    u: &PiecewiseAffineFunction,
    claimed: f64,
    tol: &ToleranceConfig,
) -> Result<AuditReport> {
    if u.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: u.dim(),
        });
    }
    let values = cell_values(field, u)?;
    let (worst_cell, max_value) =
        values.iter().enumerate().fold(
            (None, f64::NEG_INFINITY),
            |(w, m), (k, &v)| if v > m { (Some(k), v) } else { (w, m) },
        );
    Ok(AuditReport {
        max_value,
        worst_cell,
        claimed,
        pass: max_value <= claimed + tol.level,
        residual_fraction: u.residual_fraction(),
    })
}

fn cell_values(field: &ScalarField, u: &PiecewiseAffineFunction) -> Result<Vec<f64>> {
    (0..u.cell_count())
        .into_par_iter()
        .map(|k| {
            let g = u.cell_gradient(k);
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedMesh(format!("cell {k} has a non-finite gradient")));
            }
            field.eval(&g)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    /// `f` at the mean gradient.
    pub mean_value: f64,
    /// Largest `f(grad u)` over cells, and over the residual set when present.
    pub max_value: f64,
    pub holds: bool,
    /// Cells attaining the maximum when the inequality fails.
    pub witness_cells: Vec<usize>,
}

/// Checks `f(mean grad u) <= ess sup f(grad u)` for `u` with affine trace.
pub fn jensen_audit(field: &ScalarField, u: &PiecewiseAffineFunction, tol: &ToleranceConfig) -> Result<JensenReport> {
    let scale = u.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if u.trace_error() > 1e-9 * scale {
        return Err(Error::InvalidArgument(
            "the function does not match its datum on the boundary".into(),
        ));
    }
    let values = cell_values(field, u)?;
    let mean_value = field.eval(u.datum().gradient())?;
    let mut max_value = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if u.residual_fraction() > 0.0 {
        max_value = max_value.max(mean_value);
    }
    let holds = mean_value <= max_value + tol.level;
    let witness_cells = if holds {
        Vec::new()
    } else {
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= max_value)
            .map(|(k, _)| k)
            .collect()
    };
    Ok(JensenReport {
        mean_value,
        max_value,
        holds,
        witness_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{envelope_1d, envelope_1d_at};
    use crate::fields::{builtin, Expr};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn slopes() -> GridSpec {
        GridSpec::uniform(1, -3.0, 3.0, 601).unwrap()
    }

    fn unit() -> Domain {
        Domain::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn one_dimensional_values() {
        let dw = builtin("double-well-1d").unwrap();
        let r = relaxed_min_1d(&dw, 0.0, &unit(), 8, &slopes(), &tol()).unwrap();
        assert_eq!(r.value, 0.0);
        let mut g: Vec<f64> = r.minimizer.gradients().into_iter().map(|g| g[0]).collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        assert_eq!(g, vec![-1.0, 1.0]);
        let r = relaxed_min_1d(&builtin("abs").unwrap(), 2.0, &unit(), 8, &slopes(), &tol()).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.minimizer.cell_count(), 1);
        let r = relaxed_min_1d(&dw, 2.0, &unit(), 8, &slopes(), &tol()).unwrap();
        assert_eq!(r.value, 9.0);
    }

    #[test]
    fn one_dimensional_matches_envelope() {
        let grid = slopes();
        let dw = builtin("double-well-1d").unwrap();
        let env = envelope_1d(&dw, &grid).unwrap();
        for i in (0..grid.len()).step_by(37) {
            let x = grid.coord(0, i);
            let r = relaxed_min_1d(&dw, x, &unit(), 4, &grid, &tol()).unwrap();
            assert!((r.value - env.values[i]).abs() <= 1e-12, "at {x}");
        }
        let r = relaxed_min_1d(&dw, 0.123, &unit(), 4, &grid, &tol()).unwrap();
        assert_eq!(r.value, envelope_1d_at(&dw, &grid, 0.123).unwrap());
    }

    #[test]
    fn descent_level_convex_floor() {
        let f = builtin("max-norm").unwrap();
        let opts = DescentOptions {
            restarts: 2,
            nodes_per_side: 5,
            ..Default::default()
        };
        let r = relaxed_min_2d(&f, &[0.3, 0.2], &Domain::unit_square(), &opts, &tol()).unwrap();
        assert!((r.value - 0.3).abs() <= 1e-7, "{}", r.value);
        assert!(r.upper_bound_only);
    }

    #[test]
    fn descent_constant_field() {
        let f = ScalarField::analytic(2, Expr::Constant { value: 0.75 }, None).unwrap();
        let opts = DescentOptions {
            restarts: 2,
            nodes_per_side: 4,
            ..Default::default()
        };
        let r = relaxed_min_2d(&f, &[0.1, -0.4], &Domain::unit_square(), &opts, &tol()).unwrap();
        assert_eq!(r.value, 0.75);
    }

    #[test]
    fn descent_is_deterministic() {
        let f = builtin("four-well").unwrap();
        let opts = DescentOptions {
            restarts: 3,
            nodes_per_side: 4,
            seed: 7,
            ..Default::default()
        };
        let a = relaxed_min_2d(&f, &[0.0, 0.0], &Domain::unit_square(), &opts, &tol()).unwrap();
        let b = relaxed_min_2d(&f, &[0.0, 0.0], &Domain::unit_square(), &opts, &tol()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn audits() {
        let dw = builtin("double-well-1d").unwrap();
        let t = InclusionTarget::new(vec![vec![-1.0], vec![1.0]], vec![0.0], &tol()).unwrap();
        let zz = zigzag_1d(&t, &unit(), 0.0, 8).unwrap();
        let a = audit_solution(&dw, &zz, 0.0, &tol()).unwrap();
        assert!(a.pass && a.max_value == 0.0);
        assert!(audit_solution(&dw, &zz, 1e6, &tol()).unwrap().pass);
        let flat =
            PiecewiseAffineFunction::affine(&Domain::unit_square(), &AffineDatum::new(vec![0.0, 0.0], 0.0)).unwrap();
        let a = audit_solution(&builtin("example-4-5").unwrap(), &flat, 0.0, &tol()).unwrap();
        assert!(!a.pass && a.max_value == 1.0);

        let j = jensen_audit(&dw, &zz, &tol()).unwrap();
        assert!(!j.holds && j.mean_value == 1.0 && j.max_value == 0.0);
        assert_eq!(j.witness_cells.len(), zz.cell_count());
        let grid = GridSpec::uniform(1, -2.0, 2.0, 401).unwrap();
        let env = envelope_1d(&dw, &grid).unwrap().to_field(None).unwrap();
        let j = jensen_audit(&env, &zz, &tol()).unwrap();
        assert!(j.holds && j.mean_value == 0.0 && j.max_value == 0.0);
        let c = ScalarField::analytic(1, Expr::Constant { value: 2.0 }, None).unwrap();
        let j = jensen_audit(&c, &zz, &tol()).unwrap();
        assert!(j.holds && j.mean_value == j.max_value);
    }
}
