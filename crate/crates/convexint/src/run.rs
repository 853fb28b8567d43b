//! Executes the queries of an instance file and collects their reports.

use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use convexint_core::approx::{check_approx_run, halving_schedule};
use convexint_core::calculus::{
    build_epigraph_sets, check_conjugate_formula, check_epigraph_formula, check_sum_rule,
    gateaux_correspondence, normal_set_four_ways_with, verify_certificate, NormalSetCones,
    RestrictedCheck,
};
use convexint_core::{
    CalcError, CheckReport, IntegralInstance, Rational, SubspaceRestriction, Vector, Witness,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::format::{to_vector, CertificateFile, InstanceFile, QuerySpec};
use crate::generate::coefficient;
use crate::render::{report_json, report_text};

/// Schedule length used by `br_run` queries that give none.
pub const DEFAULT_SCHEDULE_LEN: usize = 12;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub seed: u64,
    pub eps_schedule: Option<Vec<Rational>>,
    pub lambda_schedule: Option<Vec<Rational>>,
    pub override_limits: bool,
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryStatus {
    Pass,
    Fail,
    Error,
}

impl QueryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryStatus::Pass => "pass",
            QueryStatus::Fail => "fail",
            QueryStatus::Error => "error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct QueryOutcome {
    pub index: usize,
    pub kind: &'static str,
    pub status: QueryStatus,
    pub reports: Vec<CheckReport>,
    pub error: Option<String>,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcomes: Vec<QueryOutcome>,
    pub timing: bool,
}

impl RunReport {
    pub fn status(&self) -> QueryStatus {
        let any = |s| self.outcomes.iter().any(|o| o.status == s);
        if any(QueryStatus::Error) {
            QueryStatus::Error
        } else if any(QueryStatus::Fail) {
            QueryStatus::Fail
        } else {
            QueryStatus::Pass
        }
    }

    /// 0 when everything passes, 2 on any error, otherwise 1.
    pub fn exit_code(&self) -> i32 {
        exit_code(self.status())
    }

    pub fn to_json(&self) -> Value {
        let queries: Vec<Value> = self
            .outcomes
            .iter()
            .map(|o| {
                let mut v = json!({
                    "index": o.index,
                    "kind": o.kind,
                    "status": o.status.as_str(),
                    "reports": o.reports.iter().map(report_json).collect::<Vec<_>>(),
                });
                if let Some(e) = &o.error {
                    v["error"] = json!(e);
                }
                if self.timing {
                    v["elapsed_ms"] = json!(o.elapsed.as_secs_f64() * 1e3);
                }
                v
            })
            .collect();
        json!({
            "arithmetic": "exact",
            "status": self.status().as_str(),
            "queries": queries,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            out.push_str(&format!("[{}] {}: {}", o.index, o.kind, o.status.as_str()));
            if self.timing {
                out.push_str(&format!(" ({:.1} ms)", o.elapsed.as_secs_f64() * 1e3));
            }
            out.push('\n');
            if let Some(e) = &o.error {
                out.push_str(&format!("  error: {e}\n"));
            }
            for r in &o.reports {
                for line in report_text(r).lines() {
                    out.push_str(&format!("  {line}\n"));
                }
            }
        }
        out.push_str(&format!("overall: {}\n", self.status().as_str()));
        out
    }
}

pub fn exit_code(status: QueryStatus) -> i32 {
    match status {
        QueryStatus::Pass => 0,
        QueryStatus::Fail => 1,
        QueryStatus::Error => 2,
    }
}

/// `count` dual points: half drawn from the box `[−4, 4]^d`, half as
/// weighted sums of one piece slope per atom (inside `dom (I_f)*` when the
/// atoms have full domains), shifted by a small random vector.
pub fn random_dual_points<R: Rng>(inst: &IntegralInstance, count: usize, rng: &mut R) -> Vec<Vector> {
    let d = inst.dim();
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                return Vector::new((0..d).map(|_| coefficient(rng, -4, 4)).collect());
            }
            let slopes: Vec<Vector> = inst
                .functions()
                .iter()
                .map(|f| f.pieces().choose(rng).expect("pieces").slope.clone())
                .collect();
            let base = inst.space().integrate_vectors(&slopes);
            let shift = Vector::new((0..d).map(|_| coefficient(rng, -1, 1)).collect());
            if rng.gen_bool(0.5) {
                base
            } else {
                &base + &shift
            }
        })
        .collect()
}

fn schedule(
    q_eps: &[Rational],
    q_lambda: &[Rational],
    opts: &RunOptions,
) -> Result<Vec<(Rational, Rational)>, CalcError> {
    let eps = if q_eps.is_empty() { opts.eps_schedule.clone() } else { Some(q_eps.to_vec()) };
    let lambda = if q_lambda.is_empty() { opts.lambda_schedule.clone() } else { Some(q_lambda.to_vec()) };
    let default = halving_schedule(DEFAULT_SCHEDULE_LEN);
    let eps = eps.unwrap_or_else(|| default.iter().map(|p| p.0.clone()).collect());
    let lambda = lambda.unwrap_or_else(|| default.iter().map(|p| p.1.clone()).collect());
    if eps.is_empty() || eps.len() != lambda.len() {
        return Err(CalcError::InvalidSchedule);
    }
    Ok(eps.into_iter().zip(lambda).collect())
}

fn rationals(v: &[crate::format::Q]) -> Vec<Rational> {
    v.iter().map(|q| q.0.clone()).collect()
}

fn execute(inst: &IntegralInstance, query: &QuerySpec, opts: &RunOptions, rng: &mut ChaCha8Rng) -> Result<Vec<CheckReport>, CalcError> {
    Ok(match query {
        QuerySpec::SumRule { x, eps, samples } => {
            let x = to_vector(x);
            rationals(eps)
                .iter()
                .map(|e| check_sum_rule(inst, &x, e, *samples, rng))
                .collect::<Result<_, _>>()?
        }
        QuerySpec::Conjugate { points, random } => {
            let mut pts: Vec<Vector> = points.iter().map(|p| to_vector(p)).collect();
            pts.extend(random_dual_points(inst, *random, rng));
            vec![check_conjugate_formula(inst, &pts)]
        }
        QuerySpec::Epigraph {} => vec![check_epigraph_formula(inst)],
        QuerySpec::NormalSets { x, eps } => {
            let x = to_vector(x);
            let cones = NormalSetCones::new(inst, &build_epigraph_sets(inst))?;
            rationals(eps)
                .iter()
                .map(|e| normal_set_four_ways_with(inst, &cones, &x, e))
                .collect::<Result<_, _>>()?
        }
        QuerySpec::Restricted { x, eps, basis, samples } => {
            let x = to_vector(x);
            let l = SubspaceRestriction::new(inst.dim(), basis.iter().map(|b| to_vector(b)).collect())?;
            let restricted = RestrictedCheck::new(inst, &l)?;
            rationals(eps)
                .iter()
                .map(|e| restricted.check(&x, e, *samples, rng))
                .collect::<Result<_, _>>()?
        }
        QuerySpec::BrRun {
            x,
            xstar,
            eps_schedule,
            lambda_schedule,
        } => {
            let sched = schedule(&rationals(eps_schedule), &rationals(lambda_schedule), opts)?;
            vec![check_approx_run(inst, &to_vector(x), &to_vector(xstar), &sched)?]
        }
        QuerySpec::Gateaux { x } => vec![gateaux_correspondence(inst, &to_vector(x))?],
    })
}

/// Runs one query with its own random stream, so results do not depend on
/// scheduling.
pub fn run_query(inst: &IntegralInstance, query: &QuerySpec, index: usize, opts: &RunOptions) -> QueryOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let start = Instant::now();
    let result = execute(inst, query, opts, &mut rng);
    let elapsed = start.elapsed();
    let (status, reports, error) = match result {
        Ok(reports) => {
            let status = if reports.iter().all(CheckReport::passed) {
                QueryStatus::Pass
            } else {
                QueryStatus::Fail
            };
            (status, reports, None)
        }
        Err(e) => (QueryStatus::Error, vec![], Some(e.to_string())),
    };
    QueryOutcome {
        index,
        kind: query.kind(),
        status,
        reports,
        error,
        elapsed,
    }
}

/// Validates the file and runs its queries on a pool of `opts.jobs`
/// workers; outcomes keep the input order.
pub fn run_file(file: &InstanceFile, opts: &RunOptions) -> Result<RunReport> {
    use rayon::prelude::*;
    file.check_limits(opts.override_limits)?;
    let inst = file.to_instance()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .context("cannot start worker pool")?;
    let outcomes = pool.install(|| {
        file.queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| run_query(&inst, q, i, opts))
            .collect()
    });
    Ok(RunReport {
        outcomes,
        timing: opts.timing,
    })
}

/// Re-checks a certificate file by evaluation.
pub fn verify_file(file: &CertificateFile, override_limits: bool) -> Result<CheckReport> {
    file.instance.check_limits(override_limits)?;
    let inst = file.instance.to_instance()?;
    let d = inst.dim();
    ensure!(file.x.len() == d && file.xstar.len() == d, "x and xstar must have length {d}");
    let x = to_vector(&file.x);
    let xstar = to_vector(&file.xstar);
    let cert = file.certificate.to_certificate();
    let mut report = CheckReport::new("certificate");
    if verify_certificate(&inst, &x, &xstar, &file.eps.0, &cert) {
        report.witnesses.push(cert.witness(&xstar));
    } else {
        report.fail(
            "certificate does not decompose xstar within the budget".to_string(),
            Some(xstar),
            Some(file.eps.0.clone()),
        );
    }
    Ok(report)
}

/// Number of certificate witnesses in a report.
pub fn certificate_count(report: &CheckReport) -> usize {
    report
        .witnesses
        .iter()
        .filter(|w| matches!(w, Witness::Certificate { .. }))
        .count()
}
