//! Exact subgradient pairs near ε-subgradients, atom by atom.

use alloc::vec::Vec;

use alloc::format;
use alloc::string::ToString;

use crate::calculus::{decompose_with, verify_certificate, DecompositionCertificate, Splitting};
use crate::error::{check_dim, CalcError, Result};
use crate::function::PolyhedralConvexFunction;
use crate::integral::IntegralInstance;
use crate::lp::{LinearProgram, Relation, Sense};
use crate::rational::{Extended, Rational, Vector};
use crate::report::{CheckReport, Witness, NORM_NOTE, PROJECTION_NOTE};

/// An exact subgradient pair `(x_t, x*_t)` produced from an
/// `ℓ`-subgradient `z*` at `x₀`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxPair {
    pub atom: usize,
    pub x_t: Vector,
    pub xstar_t: Vector,
    /// `|f(x_t) − ⟨x*_t, x_t − x₀⟩ − f(x₀)|`.
    pub residual_value: Rational,
    /// `‖x_t − x₀‖_∞`.
    pub displacement: Rational,
    /// `‖x*_t − z*‖_1`.
    pub dual_shift: Rational,
}

impl ApproxPair {
    /// Re-checks the four bounds by evaluation: `x*_t ∈ ∂f(x_t)`,
    /// `residual <= 2ℓ`, `displacement <= λ` and `dual shift <= ℓ/λ`.
    pub fn satisfies_bounds(
        &self,
        f: &PolyhedralConvexFunction,
        x0: &Vector,
        zstar: &Vector,
        ell: &Rational,
        lambda: &Rational,
    ) -> bool {
        let exact = f.fenchel_gap(&self.x_t, &self.xstar_t) == Extended::Finite(Rational::zero());
        let (Extended::Finite(fx), Extended::Finite(f0)) = (f.value(&self.x_t), f.value(x0)) else {
            return false;
        };
        let residual = (&(&fx - &self.xstar_t.dot(&(&self.x_t - x0))) - &f0).abs();
        let two_ell = ell + ell;
        exact
            && residual == self.residual_value
            && residual <= two_ell
            && (&self.x_t - x0).norm_inf() <= *lambda
            && (&self.xstar_t - zstar).norm_1() * lambda.clone() <= *ell
    }
}

/// Minimizes `f(y) − ⟨z*, y⟩ + (ℓ/λ)‖y − x₀‖_∞`, preferring the minimizer
/// closest to `x₀`, then takes the subgradient at it closest to `z*`.
pub fn br_step(
    f: &PolyhedralConvexFunction,
    x0: &Vector,
    zstar: &Vector,
    ell: &Rational,
    lambda: &Rational,
) -> Result<ApproxPair> {
    let d = f.dim();
    check_dim(d, x0.dim())?;
    check_dim(d, zstar.dim())?;
    if !lambda.is_positive() {
        return Err(CalcError::NegativeParameter("lambda"));
    }
    if ell.is_negative() {
        return Err(CalcError::NegativeParameter("ell"));
    }
    match f.fenchel_gap(x0, zstar) {
        Extended::Finite(g) if g <= *ell => {}
        _ => return Err(CalcError::NotEpsSubgradient(zstar.clone())),
    }
    if ell.is_zero() {
        return Ok(ApproxPair {
            atom: 0,
            x_t: x0.clone(),
            xstar_t: zstar.clone(),
            residual_value: Rational::zero(),
            displacement: Rational::zero(),
            dual_shift: Rational::zero(),
        });
    }

    let rate = ell / lambda;
    let build = || {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let y = lp.free_vars(d);
        let u = lp.free_var();
        let tau = lp.nonneg_var();
        for p in f.pieces() {
            lp.add_row(
                y.iter()
                    .zip(p.slope.iter())
                    .map(|(&v, a)| (v, a.clone()))
                    .chain([(u, -Rational::one())]),
                Relation::Le,
                -&p.intercept,
            );
        }
        for h in f.domain().h_rep() {
            lp.add_row(
                y.iter().zip(h.normal.iter()).map(|(&v, a)| (v, a.clone())),
                Relation::Le,
                h.offset.clone(),
            );
        }
        for j in 0..d {
            lp.add_row([(y[j], Rational::one()), (tau, -Rational::one())], Relation::Le, x0[j].clone());
            lp.add_row([(y[j], -Rational::one()), (tau, -Rational::one())], Relation::Le, -&x0[j]);
        }
        let objective: Vec<(usize, Rational)> = y
            .iter()
            .zip(zstar.iter())
            .map(|(&v, z)| (v, -z))
            .chain([(u, Rational::one()), (tau, rate.clone())])
            .collect();
        (lp, y, tau, objective)
    };

    let (mut first, _, _, objective) = build();
    for (v, c) in &objective {
        first.set_objective(*v, c.clone());
    }
    let (_, best) = first
        .solve()
        .optimal()
        .expect("regularized problem is bounded below by the subgradient inequality");

    let (mut second, y, tau, objective) = build();
    second.add_row(objective, Relation::Le, best);
    second.set_objective(tau, Rational::one());
    let (sol, _) = second.solve().optimal().expect("the first optimum is feasible");
    let x_t: Vector = y.iter().map(|&v| sol[v].clone()).collect();

    let xstar_t = f
        .nearest_eps_subgradient(&x_t, &Rational::zero(), zstar)?
        .expect("minimizer lies in the domain");
    let fx = f.finite_value(&x_t)?;
    let f0 = f.finite_value(x0)?;
    let residual_value = (&(&fx - &xstar_t.dot(&(&x_t - x0))) - &f0).abs();
    Ok(ApproxPair {
        atom: 0,
        displacement: (&x_t - x0).norm_inf(),
        dual_shift: (&xstar_t - zstar).norm_1(),
        x_t,
        xstar_t,
        residual_value,
    })
}

/// One schedule entry of a run.
#[derive(Clone, Debug)]
pub struct ApproxStep {
    pub eps: Rational,
    pub lambda: Rational,
    pub certificate: DecompositionCertificate,
    pub pairs: Vec<ApproxPair>,
    /// `Σ μ_t x*_t + λ* − x*`.
    pub aggregate_gap: Vector,
    /// `Σ μ_t |f_t(x_t) − ⟨x*_t, x_t − x⟩ − f_t(x)|`.
    pub residual_integral: Rational,
    /// `max_t ‖x_t − x‖_∞`.
    pub displacement: Rational,
}

#[derive(Clone, Debug)]
pub struct ApproxRun {
    pub schedule: Vec<(Rational, Rational)>,
    pub steps: Vec<ApproxStep>,
}

impl ApproxRun {
    pub fn residual_integrals(&self) -> Vec<Rational> {
        self.steps.iter().map(|s| s.residual_integral.clone()).collect()
    }

    pub fn displacements(&self) -> Vec<Rational> {
        self.steps.iter().map(|s| s.displacement.clone()).collect()
    }

    pub fn aggregate_gaps(&self) -> Vec<Rational> {
        self.steps.iter().map(|s| s.aggregate_gap.norm_1()).collect()
    }
}

/// `ε_k = 2^{−k}`, `λ_k = 2^{−k/2}` for `k = 1..=n`, with `λ_k` rounded
/// up to a power of two so it stays rational.
pub fn halving_schedule(n: usize) -> Vec<(Rational, Rational)> {
    (1..=n)
        .map(|k| {
            let eps = Rational::new(1, 1i64 << k);
            let lambda = Rational::new(1, 1i64 << (k / 2));
            (eps, lambda)
        })
        .collect()
}

/// For each `(ε_k, λ_k)`: decompose `x*` with budget `ε_k`, then move each
/// atom's selection to an exact subgradient pair with radius `λ_k`.
pub fn br_decompose_run(
    inst: &IntegralInstance,
    x: &Vector,
    xstar: &Vector,
    schedule: &[(Rational, Rational)],
) -> Result<ApproxRun> {
    if schedule.is_empty() {
        return Err(CalcError::InvalidSchedule);
    }
    let mut steps = Vec::with_capacity(schedule.len());
    for (eps, lambda) in schedule {
        let certificate = decompose_with(inst, x, xstar, eps, Splitting::Spread)?;
        let mut pairs = Vec::with_capacity(inst.num_atoms());
        for (t, ((f, y), ell)) in inst
            .functions()
            .iter()
            .zip(&certificate.selections)
            .zip(&certificate.alloc.ell)
            .enumerate()
        {
            let mut pair = br_step(f, x, y, ell, lambda)?;
            pair.atom = t;
            pairs.push(pair);
        }
        let duals: Vec<Vector> = pairs.iter().map(|p| p.xstar_t.clone()).collect();
        let aggregate_gap = &(&inst.space().integrate_vectors(&duals) + &certificate.normal) - xstar;
        let residuals: Vec<Rational> = pairs.iter().map(|p| p.residual_value.clone()).collect();
        let residual_integral = inst.space().integrate(&residuals);
        let displacement = pairs
            .iter()
            .map(|p| p.displacement.clone())
            .fold(Rational::zero(), Rational::max);
        steps.push(ApproxStep {
            eps: eps.clone(),
            lambda: lambda.clone(),
            certificate,
            pairs,
            aggregate_gap,
            residual_integral,
            displacement,
        });
    }
    Ok(ApproxRun {
        schedule: schedule.to_vec(),
        steps,
    })
}

fn nonincreasing(values: &[Rational]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

/// Runs the schedule and re-checks every bound: certificates verify, each
/// pair meets the four per-atom bounds, the residual integral is at most
/// `2ε_k`, the displacement at most `λ_k`, the aggregate gap at most
/// `ε_k/λ_k` in the 1-norm, and both residual and displacement sequences
/// are nonincreasing.
pub fn check_approx_run(
    inst: &IntegralInstance,
    x: &Vector,
    xstar: &Vector,
    schedule: &[(Rational, Rational)],
) -> Result<CheckReport> {
    let run = br_decompose_run(inst, x, xstar, schedule)?;
    let mut report = CheckReport::new("approximation").with_notes(&[NORM_NOTE, PROJECTION_NOTE]);
    for (k, step) in run.steps.iter().enumerate() {
        let eps = Some(step.eps.clone());
        if !verify_certificate(inst, x, xstar, &step.eps, &step.certificate) {
            report.fail(format!("step {k}: decomposition does not verify"), Some(xstar.clone()), eps.clone());
        }
        for (pair, (f, (y, ell))) in step.pairs.iter().zip(
            inst.functions()
                .iter()
                .zip(step.certificate.selections.iter().zip(&step.certificate.alloc.ell)),
        ) {
            if !pair.satisfies_bounds(f, x, y, ell, &step.lambda) {
                report.fail(
                    format!("step {k}: atom {} violates a pair bound", pair.atom),
                    Some(pair.x_t.clone()),
                    eps.clone(),
                );
            }
        }
        if step.residual_integral > &step.eps + &step.eps {
            report.fail(format!("step {k}: residual integral above 2 eps"), Some(x.clone()), eps.clone());
        }
        if step.displacement > step.lambda {
            report.fail(format!("step {k}: displacement above lambda"), Some(x.clone()), eps.clone());
        }
        if step.aggregate_gap.norm_1() * step.lambda.clone() > step.eps {
            report.fail(
                format!("step {k}: aggregate gap above eps / lambda"),
                Some(step.aggregate_gap.clone()),
                eps.clone(),
            );
        }
        report.witnesses.push(Witness::Step {
            index: k,
            eps: step.eps.clone(),
            lambda: step.lambda.clone(),
            residual_integral: step.residual_integral.clone(),
            displacement: step.displacement.clone(),
            normal: step.certificate.normal.clone(),
        });
    }
    if !nonincreasing(&run.residual_integrals()) {
        report.fail("residual integrals are not nonincreasing".to_string(), Some(x.clone()), None);
    }
    if !nonincreasing(&run.displacements()) {
        report.fail("displacements are not nonincreasing".to_string(), Some(x.clone()), None);
    }
    Ok(report)
}

/// Moves `z*` toward a relative-interior point of `dom f*`:
/// `z*_λ = (1 − λ) z* + λ x₀*`, with its Fenchel gap `ℓ_λ` at `x`.
pub fn interior_shift(
    f: &PolyhedralConvexFunction,
    x: &Vector,
    zstar: &Vector,
    x0star: &Vector,
    lambda: &Rational,
) -> Result<(Vector, Rational)> {
    check_dim(f.dim(), x.dim())?;
    check_dim(f.dim(), zstar.dim())?;
    check_dim(f.dim(), x0star.dim())?;
    if !lambda.is_positive() || *lambda >= Rational::one() {
        return Err(CalcError::NegativeParameter("lambda"));
    }
    f.finite_value(x)?;
    let dom = f.conjugate_function().domain();
    if !dom.contains(zstar) {
        return Err(CalcError::PointNotInSet(zstar.clone()));
    }
    if !dom.in_relative_interior(x0star) {
        return Err(CalcError::NotInteriorPoint(x0star.clone()));
    }
    let shifted = zstar.scale(&(&Rational::one() - lambda)).add_scaled(lambda, x0star);
    let gap = f
        .fenchel_gap(x, &shifted)
        .into_finite()
        .expect("convex combination stays in the conjugate domain");
    Ok((shifted, gap))
}
