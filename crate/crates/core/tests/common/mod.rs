//! Randomized property suites shared by the property tests and the acceptance run.
//! Each suite draws its instances from a fixed-seed runner.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use supremal::fields::FieldKind;
use supremal::{
    builtin, envelope_1d, hull, jensen_audit, solve_P, vitali_fill, zigzag_1d, AffineDatum, Coercivity, Decider,
    Decision, Domain, Error, Expr, GridSpec, InclusionTarget, PiecewiseAffineFunction, ScalarField, SolveOptions,
    ToleranceConfig, VitaliOptions,
};

pub const CASES: u32 = 200;
pub const SEED: [u8; 32] = [42; 32];

pub fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

pub fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &SEED))
}

fn fail<E: std::fmt::Debug>(e: E) -> TestCaseError {
    TestCaseError::fail(format!("{e:?}"))
}

/// A random coercive 1D density `tail x^2 + sum a_k sin(w_k x + p_k)`.
#[derive(Debug, Clone)]
pub struct Bumps {
    pub amps: Vec<f64>,
    pub freqs: Vec<f64>,
    pub phases: Vec<f64>,
    pub tail: f64,
}

impl Bumps {
    pub fn field(&self) -> ScalarField {
        let mass: f64 = self.amps.iter().map(|a| a.abs()).sum();
        ScalarField::analytic(
            1,
            Expr::FourierBumps {
                amps: self.amps.clone(),
                freqs: self.freqs.clone(),
                phases: self.phases.clone(),
                tail: self.tail,
            },
            Some(Coercivity::power_law(self.tail, 2.0, mass)),
        )
        .unwrap()
    }

    /// Draws from a seeded generator; bounded so that every sublevel set
    /// reached from `|xi0| <= 1.5` stays inside `[-5, 5]`.
    pub fn draw<R: rand::Rng>(rng: &mut R) -> Self {
        let k = rng.gen_range(1..=4);
        Self {
            amps: (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            freqs: (0..k).map(|_| rng.gen_range(0.5..6.0)).collect(),
            phases: (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
            tail: rng.gen_range(0.5..2.0),
        }
    }
}

type Mesh = (Domain, Vec<Vec<f64>>, Vec<Vec<usize>>, Vec<bool>);

/// Structured triangulation of `[0,1]^2` (or `m` cells of `[0,1]`) with
/// interior nodal values perturbed away from the affine datum.
pub fn perturbed_affine(xi: &[f64], m: usize, perturb: &[f64]) -> PiecewiseAffineFunction {
    let datum = AffineDatum::new(xi.to_vec(), 0.0);
    let h = 1.0 / m as f64;
    let (domain, nodes, cells, interior): Mesh = if xi.len() == 1 {
        let nodes = (0..=m).map(|i| vec![i as f64 * h]).collect();
        let cells = (0..m).map(|i| vec![i, i + 1]).collect();
        let interior = (0..=m).map(|i| i > 0 && i < m).collect();
        (Domain::interval(0.0, 1.0).unwrap(), nodes, cells, interior)
    } else {
        let id = |i: usize, j: usize| i * (m + 1) + j;
        let mut nodes = Vec::new();
        let mut interior = Vec::new();
        for i in 0..=m {
            for j in 0..=m {
                nodes.push(vec![i as f64 * h, j as f64 * h]);
                interior.push(i > 0 && i < m && j > 0 && j < m);
            }
        }
        let mut cells = Vec::new();
        for i in 0..m {
            for j in 0..m {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        (Domain::unit_square(), nodes, cells, interior)
    };
    let values = nodes
        .iter()
        .enumerate()
        .map(|(k, p)| datum.eval(p) + if interior[k] { perturb[k % perturb.len()] } else { 0.0 })
        .collect();
    PiecewiseAffineFunction::new(domain, datum, nodes, cells, values).unwrap()
}

fn same_vertex_sets(a: &[Vec<f64>], b: &[Vec<f64>], eps: f64) -> bool {
    let close = |p: &Vec<f64>, q: &Vec<f64>| p.iter().zip(q).all(|(x, y)| (x - y).abs() <= eps);
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| close(p, q)))
}

fn point_sets() -> impl Strategy<Value = Vec<Vec<f64>>> {
    let continuous = prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..30);
    let lattice = prop::collection::vec((-3i32..=3, -3i32..=3), 1..30)
        .prop_map(|v| v.into_iter().map(|(a, b)| (a as f64, b as f64)).collect::<Vec<_>>());
    let collinear = (prop::collection::vec(-5.0..5.0f64, 2..12), -2.0..2.0f64, -1.0..1.0f64)
        .prop_map(|(ts, slope, off)| ts.into_iter().map(|t| (t, slope * t + off)).collect::<Vec<_>>());
    prop_oneof![continuous, lattice, collinear].prop_map(|v| v.into_iter().map(|(a, b)| vec![a, b]).collect())
}

/// `hull(vertices(hull(S))) = hull(S)`, and every input point lies in its hull.
pub fn hull_idempotence() -> Result<(), String> {
    runner()
        .run(&point_sets(), |pts| {
            let t = tol();
            let h1 = hull(&pts, t.geom).map_err(fail)?;
            let h2 = hull(&h1.vertices(), t.geom).map_err(fail)?;
            prop_assert!(same_vertex_sets(&h1.vertices(), &h2.vertices(), 1e-12));
            for p in &pts {
                prop_assert!(h1.contains(p), "input point {:?} outside its hull", p);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Exposed points are extreme, and separating directions support the body.
pub fn extreme_contains_exposed() -> Result<(), String> {
    runner()
        .run(&point_sets(), |pts| {
            let t = tol();
            let body = hull(&pts, t.geom).map_err(fail)?;
            let ext = body.extreme_points();
            for e in body.exposed_points(t.exposure_angle) {
                prop_assert!(ext.contains(&e), "exposed {:?} not extreme", e);
            }
            let slack = 1e-9 * body.diameter().max(1.0);
            for x0 in ext.iter().take(4) {
                let nu = body.separating_direction(x0).map_err(fail)?;
                let excess = body
                    .vertices()
                    .iter()
                    .map(|v| nu.iter().zip(v).zip(x0).map(|((n, a), b)| n * (a - b)).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(
                    excess <= slack,
                    "direction {:?} at {:?} overshoots by {}",
                    nu,
                    x0,
                    excess
                );
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// The supremal Jensen inequality for level convex densities and random
/// piecewise-affine maps, with the double-well as a negative control.
pub fn jensen_audits() -> Result<(), String> {
    let t = tol();
    let dw = builtin("double-well-1d").unwrap();
    let target = InclusionTarget::new(vec![vec![-1.0], vec![1.0]], vec![0.0], &t).map_err(|e| e.to_string())?;
    let zz = zigzag_1d(&target, &Domain::interval(0.0, 1.0).unwrap(), 0.0, 4).map_err(|e| e.to_string())?;
    if jensen_audit(&dw, &zz, &t).map_err(|e| e.to_string())?.holds {
        return Err("double-well zigzag should violate the Jensen inequality".into());
    }
    let wide = GridSpec::uniform(1, -6.0, 6.0, 481).unwrap();
    let env_dw = envelope_1d(&dw, &wide).unwrap().to_field(Some(&dw)).unwrap();
    let fields: Vec<ScalarField> = vec![
        builtin("square-2d").unwrap(),
        builtin("max-norm").unwrap(),
        builtin("dist-halfplane").unwrap(),
        builtin("abs").unwrap(),
        builtin("halfline-kink").unwrap(),
        env_dw,
    ];
    let strategy = (
        0..fields.len(),
        (-2.0..2.0f64, -2.0..2.0f64),
        prop::collection::vec(-0.05..0.05f64, 1..40),
    );
    runner()
        .run(&strategy, |(k, (a, b), perturb)| {
            let f = &fields[k];
            let xi = if f.dim() == 1 { vec![a] } else { vec![a, b] };
            let m = if f.dim() == 1 { 8 } else { 4 };
            let u = perturbed_affine(&xi, m, &perturb);
            let r = jensen_audit(f, &u, &tol()).map_err(fail)?;
            prop_assert!(r.holds, "field {} at {:?}: {:?}", k, xi, r);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn expr_of(f: &ScalarField) -> Expr {
    match f.kind() {
        FieldKind::Analytic(e) => e.clone(),
        FieldKind::Sampled { .. } => unreachable!("builtins are analytic"),
    }
}

/// `a f + b` with the matching coercivity bound.
pub fn rescaled(f: &ScalarField, a: f64, b: f64) -> ScalarField {
    let c = f
        .coercivity()
        .copied()
        .map(|c| Coercivity::power_law(a * c.scale, c.power, a * c.offset - b));
    ScalarField::analytic(
        f.dim(),
        Expr::Affine {
            scale: a,
            shift: b,
            inner: Box::new(expr_of(f)),
        },
        c,
    )
    .unwrap()
}

pub const DECIDABLE: &[&str] = &[
    "example-4-5",
    "four-well",
    "two-well-2d",
    "square-2d",
    "max-norm",
    "double-well-1d",
    "abs",
    "square-1d",
];

pub fn decision_grid(dim: usize) -> GridSpec {
    match dim {
        1 => GridSpec::uniform(1, -3.0, 3.0, 241).unwrap(),
        _ => GridSpec::uniform(2, -2.0, 2.0, 33).unwrap(),
    }
}

/// Decisions agree for `f` and `a f + b` whenever both are decisive.
pub fn verdict_invariance() -> Result<(), String> {
    let t = tol();
    let originals: Vec<(ScalarField, Decider)> = DECIDABLE
        .iter()
        .map(|n| {
            let f = builtin(n).unwrap();
            let d = Decider::new(&f, &decision_grid(f.dim()), &t).unwrap();
            (f, d)
        })
        .collect();
    let strategy = (
        0..originals.len(),
        (-1.5..1.5f64, -1.5..1.5f64, prop::bool::weighted(0.3)),
        0.5..4.0f64,
        -3.0..3.0f64,
    );
    runner()
        .run(&strategy, |(k, (x, y, on_axis), a, b)| {
            let (f, d) = &originals[k];
            let y = if on_axis { 0.0 } else { y };
            let xi0 = if f.dim() == 1 { vec![x] } else { vec![x, y] };
            let g = rescaled(f, a, b);
            let dg = Decider::new(&g, &decision_grid(f.dim()), &tol()).map_err(fail)?;
            let v1 = d.decide(&xi0).map_err(fail)?;
            let v2 = dg.decide(&xi0).map_err(fail)?;
            if v1.decision.is_unknown() || v2.decision.is_unknown() {
                return Ok(());
            }
            match (&v1.decision, &v2.decision) {
                (Decision::Exists { branch: b1 }, Decision::Exists { branch: b2 }) => {
                    prop_assert_eq!(b1, b2, "{} at {:?}", DECIDABLE[k], xi0)
                }
                (Decision::NotExists { nu: n1, .. }, Decision::NotExists { nu: n2, .. }) => {
                    prop_assert!(n1.iter().zip(n2).all(|(p, q)| (p - q).abs() <= 1e-9))
                }
                _ => prop_assert!(
                    false,
                    "{} at {:?} with a={} b={}: {} vs {}",
                    DECIDABLE[k],
                    xi0,
                    a,
                    b,
                    v1.decision.label(),
                    v2.decision.label()
                ),
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Targets with `xi0` outside `E ∪ int co E` are refused, and so is solving
/// The two-well field on its non-existence segment.
pub fn necessity_rejection() -> Result<(), String> {
    let e45 = builtin("example-4-5").unwrap();
    let grid = decision_grid(2);
    let strategy = (
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 3..8),
        0.0..std::f64::consts::TAU,
        0.05..2.0f64,
        -0.85..0.85f64,
        0.0..1.0f64,
    );
    runner()
        .run(&strategy, |(raw, theta, d, s, lam)| {
            let t = tol();
            let pts: Vec<Vec<f64>> = raw.iter().map(|&(a, b)| vec![a, b]).collect();
            let n = pts.len() as f64;
            let c = [
                pts.iter().map(|p| p[0]).sum::<f64>() / n,
                pts.iter().map(|p| p[1]).sum::<f64>() / n,
            ];
            let u = [theta.cos(), theta.sin()];
            let reach = pts
                .iter()
                .map(|p| u[0] * (p[0] - c[0]) + u[1] * (p[1] - c[1]))
                .fold(f64::NEG_INFINITY, f64::max);
            let outside = vec![c[0] + (reach + d) * u[0], c[1] + (reach + d) * u[1]];
            let r = InclusionTarget::new(pts.clone(), outside.clone(), &t);
            prop_assert!(matches!(r, Err(Error::NecessaryConditionViolated(_))), "{:?}", r.err());

            let body = hull(&pts, t.geom).map_err(fail)?;
            let vs = body.vertices();
            if !body.is_degenerate() {
                let (p, q) = (&vs[0], &vs[1]);
                let on_edge = vec![p[0] + lam * (q[0] - p[0]), p[1] + lam * (q[1] - p[1])];
                let r = InclusionTarget::new(pts.clone(), on_edge.clone(), &t);
                let member = pts
                    .iter()
                    .any(|x| (x[0] - on_edge[0]).abs() + (x[1] - on_edge[1]).abs() <= 1e-9);
                prop_assert!(member || matches!(r, Err(Error::NotInteriorPoint(_))), "{:?}", r.err());
            }

            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let r = InclusionTarget::new(pts.iter().map(|p| vec![p[0]]).collect(), vec![lo - d], &t);
            prop_assert!(matches!(r, Err(Error::NecessaryConditionViolated(_))));

            let r = solve_P(
                &e45,
                &[s, 0.0],
                0.0,
                &grid,
                &Domain::unit_square(),
                &SolveOptions::default(),
                &t,
            );
            prop_assert!(
                matches!(r, Err(Error::VerdictWasNotExists)),
                "solve at ({}, 0): {:?}",
                s,
                r.err()
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Star-shaped polygon around `xi0` with one vertex per angular sector.
fn star_target(xi0: [f64; 2], radii: &[f64], jitter: &[f64]) -> Vec<Vec<f64>> {
    let k = radii.len();
    (0..k)
        .map(|j| {
            let a = (j as f64 + 0.2 * jitter[j]) * std::f64::consts::TAU / k as f64;
            vec![xi0[0] + radii[j] * a.cos(), xi0[1] + radii[j] * a.sin()]
        })
        .collect()
}

/// Doubling the teeth (1D) or halving the copy diameter (2D) halves the
/// distance to the datum, within 10%.
pub fn epsilon_closeness() -> Result<(), String> {
    let strategy = (
        (0.1..3.0f64, 0.1..3.0f64, -2.0..2.0f64, 1usize..16),
        (
            (-1.0..1.0f64, -1.0..1.0f64),
            prop::collection::vec((1.0..2.0f64, -1.0..1.0f64), 3..7),
            0.1..0.3f64,
        ),
    );
    runner()
        .run(&strategy, |((down, up, xi, half), (centre, spokes, d))| {
            let t = tol();
            let target = InclusionTarget::new(vec![vec![xi - down], vec![xi + up]], vec![xi], &t).map_err(fail)?;
            let omega = Domain::interval(0.0, 1.0).unwrap();
            let a = zigzag_1d(&target, &omega, 0.0, 2 * half).map_err(fail)?.sup_distance();
            let b = zigzag_1d(&target, &omega, 0.0, 4 * half).map_err(fail)?.sup_distance();
            prop_assert!((b / a - 0.5).abs() <= 0.05, "1D ratio {}", b / a);

            let xi0 = [centre.0, centre.1];
            let radii: Vec<f64> = spokes.iter().map(|s| s.0).collect();
            let jitter: Vec<f64> = spokes.iter().map(|s| s.1).collect();
            let target = InclusionTarget::new(star_target(xi0, &radii, &jitter), xi0.to_vec(), &t).map_err(fail)?;
            let fill = |cap: f64| {
                let opts = VitaliOptions {
                    residual_tol: 0.7,
                    max_diameter: Some(cap),
                    ..VitaliOptions::default()
                };
                vitali_fill(&target, &Domain::unit_square(), &opts).map(|f| f.function.sup_distance())
            };
            let a = fill(d).map_err(fail)?;
            let b = fill(d / 2.0).map_err(fail)?;
            prop_assert!((b / a - 0.5).abs() <= 0.05, "2D ratio {}", b / a);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub type Suite = fn() -> Result<(), String>;

pub const SUITES: &[(&str, Suite)] = &[
    ("hull idempotence", hull_idempotence),
    ("extreme contains exposed", extreme_contains_exposed),
    ("Jensen audits", jensen_audits),
    ("verdict scale/translation invariance", verdict_invariance),
    ("necessity rejection", necessity_rejection),
    ("epsilon-closeness scaling", epsilon_closeness),
];
