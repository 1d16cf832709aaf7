use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use supremal::oracle::{AuditReport, JensenReport};
use supremal::{
    audit_solution, decide_affine, envelope_1d, envelope_levelsweep, jensen_audit, relaxed_min_1d, relaxed_min_2d,
    relaxed_value_affine, solve_P, sweep, Decision, EnvelopeResult, Error, ExistenceVerdict, PiecewiseAffineFunction,
};

use crate::config::Resolved;

/// Process outcome; the numeric codes are the CLI contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotExists,
    Unknown,
    /// `solve` declined to build a mesh.
    Refused,
    /// `verify` found a violated bound.
    AuditFailed,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::NotExists => 10,
            Outcome::Unknown => 11,
            Outcome::Refused => 12,
            Outcome::AuditFailed => 13,
        }
    }

    pub fn of(decision: &Decision) -> Self {
        match decision {
            Decision::Exists { .. } => Outcome::Success,
            Decision::NotExists { .. } => Outcome::NotExists,
            Decision::Unknown { .. } => Outcome::Unknown,
        }
    }
}

pub const CONFIG_ERROR: u8 = 2;
pub const COMPUTE_ERROR: u8 = 3;

pub fn envelope(r: &Resolved) -> Result<Outcome> {
    let env = compute_envelope(r)?;
    let out = prepare(&r.out)?;
    write(&out.join("envelope.csv"), &env.to_csv())?;
    write(
        &out.join("envelope.certificates.json"),
        &serde_json::to_string_pretty(&env.certificates)?,
    )?;
    write(&out.join("envelope.dat"), &env.to_plot_columns())?;
    let (lo, hi) = env
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!(
        "envelope nodes={} min={lo} max={hi} out={}",
        env.values.len(),
        out.display()
    );
    Ok(Outcome::Success)
}

fn compute_envelope(r: &Resolved) -> Result<EnvelopeResult> {
    Ok(match r.field.dim() {
        1 => envelope_1d(&r.field, &r.grid)?,
        _ => envelope_levelsweep(&r.field, &r.grid, &r.tol)?,
    })
}

pub fn decide(r: &Resolved) -> Result<Outcome> {
    let xi0 = r.xi0.as_deref().ok_or_else(|| anyhow!("xi0 is required"))?;
    let verdict = decide_affine(&r.field, xi0, &r.grid, &r.tol)?;
    let out = prepare(&r.out)?;
    write_json(&out.join("verdict.json"), &verdict)?;
    let mut line = verdict_line(&verdict);
    if let Some(o) = &r.oracle {
        let result = match r.field.dim() {
            1 => relaxed_min_1d(&r.field, xi0[0], &r.omega, o.segments, &r.grid, &r.tol)?,
            _ => relaxed_min_2d(&r.field, xi0, &r.omega, &o.descent, &r.tol)?,
        };
        write_json(&out.join("oracle.json"), &result)?;
        let _ = write!(line, " oracle={}", result.value);
    }
    println!("{line}");
    Ok(Outcome::of(&verdict.decision))
}

/// Stale outputs are removed on refusal so that no mesh outlives its verdict.
const SOLVE_OUTPUTS: [&str; 3] = ["mesh.json", "solve_report.json", "gradients.csv"];

pub fn solve(r: &Resolved) -> Result<Outcome> {
    let xi0 = r.xi0.as_deref().ok_or_else(|| anyhow!("xi0 is required"))?;
    let out = prepare(&r.out)?;
    match solve_P(&r.field, xi0, r.offset, &r.grid, &r.omega, &r.solve, &r.tol) {
        Ok(sol) => {
            write_json(&out.join("verdict.json"), &sol.verdict)?;
            write(&out.join("mesh.json"), &sol.function.to_json()?)?;
            write_json(&out.join("solve_report.json"), &sol.report)?;
            write(&out.join("gradients.csv"), &sol.function.gradient_csv())?;
            let rep = &sol.report;
            println!(
                "solved cells={} ess_sup={} relaxed={} residual={} out={}",
                rep.cells,
                rep.ess_sup_covered,
                rep.relaxed_value,
                rep.residual_fraction,
                out.display()
            );
            Ok(Outcome::Success)
        }
        Err(Error::VerdictWasNotExists) | Err(Error::VerdictUnknown(_)) => {
            for name in SOLVE_OUTPUTS {
                let p = out.join(name);
                if p.exists() {
                    fs::remove_file(&p).with_context(|| format!("removing stale {}", p.display()))?;
                }
            }
            let verdict = decide_affine(&r.field, xi0, &r.grid, &r.tol)?;
            write_json(&out.join("verdict.json"), &verdict)?;
            println!("refused: {}", verdict_line(&verdict));
            Ok(Outcome::Refused)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mesh: PathBuf,
    pub claimed: f64,
    pub audit: AuditReport,
    /// Jensen audit of the grid envelope; absent when a gradient leaves the grid window.
    pub jensen: Option<JensenReport>,
    pub jensen_skipped: Option<String>,
    pub pass: bool,
}

pub fn verify(r: &Resolved) -> Result<Outcome> {
    let text = fs::read_to_string(&r.mesh).with_context(|| format!("reading {}", r.mesh.display()))?;
    let u = PiecewiseAffineFunction::from_json(&text).with_context(|| format!("parsing {}", r.mesh.display()))?;
    if u.dim() != r.field.dim() {
        bail!(
            "the mesh is {}-dimensional but the field is {}-dimensional",
            u.dim(),
            r.field.dim()
        );
    }
    let claimed = match r.claimed {
        Some(c) => c,
        None => relaxed_value_affine(&r.field, u.datum().gradient(), &r.grid, &r.tol)?.0,
    };
    let audit = audit_solution(&r.field, &u, claimed, &r.tol)?;
    let envelope = compute_envelope(r)?.to_field(Some(&r.field))?;
    let (jensen, jensen_skipped) = match jensen_audit(&envelope, &u, &r.tol) {
        Ok(j) => (Some(j), None),
        Err(e @ Error::OutOfBounds { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let pass = audit.pass && jensen.as_ref().is_none_or(|j| j.holds);
    let report = VerifyReport {
        mesh: r.mesh.clone(),
        claimed,
        audit,
        jensen,
        jensen_skipped,
        pass,
    };
    let out = prepare(&r.out)?;
    write_json(&out.join("verify.json"), &report)?;
    println!(
        "verify {} ess_sup={} claimed={} jensen={}",
        if pass { "pass" } else { "fail" },
        report.audit.max_value,
        claimed,
        match &report.jensen {
            Some(j) if j.holds => "holds",
            Some(_) => "violated",
            None => "skipped",
        }
    );
    Ok(if pass { Outcome::Success } else { Outcome::AuditFailed })
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub xi0: Vec<f64>,
    pub relaxed_value: f64,
    /// `exists`, `not-exists` or `unknown`.
    pub verdict: String,
    pub level_gap: f64,
    pub depth: f64,
}

impl SweepRow {
    pub fn from_verdict(v: &ExistenceVerdict) -> Self {
        Self {
            xi0: v.xi0.clone(),
            relaxed_value: v.relaxed_value,
            verdict: v.decision.label().to_string(),
            level_gap: v.margins.level_gap,
            depth: v.margins.depth,
        }
    }

    pub fn to_csv(rows: &[SweepRow], dim: usize) -> String {
        let mut out = String::from(if dim == 1 { "xi1" } else { "xi1,xi2" });
        out.push_str(",relaxed_value,verdict,level_gap,depth\n");
        for r in rows {
            for x in &r.xi0 {
                let _ = write!(out, "{x},");
            }
            let _ = writeln!(out, "{},{},{},{}", r.relaxed_value, r.verdict, r.level_gap, r.depth);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Vec<SweepRow>> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| anyhow!("empty sweep table"))?;
        let dim = match header.split(',').next() {
            Some("xi1") if header.starts_with("xi1,xi2,") => 2,
            Some("xi1") => 1,
            _ => bail!("unrecognised sweep header `{header}`"),
        };
        lines
            .enumerate()
            .map(|(i, line)| {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() != dim + 4 {
                    bail!("row {}: expected {} columns", i + 1, dim + 4);
                }
                let num = |s: &str| s.parse::<f64>().with_context(|| format!("row {}: `{s}`", i + 1));
                Ok(SweepRow {
                    xi0: cols[..dim].iter().map(|s| num(s)).collect::<Result<_>>()?,
                    relaxed_value: num(cols[dim])?,
                    verdict: cols[dim + 1].to_string(),
                    level_gap: num(cols[dim + 2])?,
                    depth: num(cols[dim + 3])?,
                })
            })
            .collect()
    }
}

pub fn sweep_cmd(r: &Resolved) -> Result<Outcome> {
    let verdicts = sweep(&r.field, &r.sweep_points, &r.grid, &r.tol)?;
    let rows: Vec<SweepRow> = verdicts.iter().map(SweepRow::from_verdict).collect();
    let out = prepare(&r.out)?;
    write(&out.join("sweep.csv"), &SweepRow::to_csv(&rows, r.field.dim()))?;
    let count = |label: &str| rows.iter().filter(|row| row.verdict == label).count();
    println!(
        "sweep points={} exists={} not-exists={} unknown={} out={}",
        rows.len(),
        count("exists"),
        count("not-exists"),
        count("unknown"),
        out.display()
    );
    Ok(Outcome::Success)
}

fn verdict_line(v: &ExistenceVerdict) -> String {
    let tuple = |x: &[f64]| format!("({})", x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
    let head = format!("xi0={} f={} v={}", tuple(&v.xi0), v.field_value, v.relaxed_value);
    match &v.decision {
        Decision::Exists { branch } => {
            format!(
                "exists {head} branch={}",
                serde_json::to_value(branch).map(|b| b.to_string()).unwrap_or_default()
            )
        }
        Decision::NotExists { nu, .. } => format!("not-exists {head} nu={}", tuple(nu)),
        Decision::Unknown { reason } => format!("unknown {head} reason={reason:?}"),
    }
}

fn prepare(out: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out.to_path_buf())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &serde_json::to_string_pretty(value)?)
}
