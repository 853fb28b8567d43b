//! Exact checks of the calculus rules for integral functionals: the
//! ε-subdifferential sum rule, the conjugate and epigraph formulas, and the
//! characterizations of ε-normal sets to the domain.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{check_dim, CalcError, Result};
use crate::function::{eps_normal, PolyhedralConvexFunction};
use crate::integral::{ErrorAllocation, IntegralInstance, SubspaceRestriction};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::polyhedron::Polyhedron;
use crate::rational::{Extended, Rational, Vector};
use crate::report::{CheckReport, Witness, CLOSURE_NOTE, LIMIT_NOTE, SELECTION_NOTE};

/// A witness that `Σ_t μ_t y*_t + λ*` lies in the right-hand side of the
/// sum rule with budgets `eps1` (atoms) and `eps2` (normal set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionCertificate {
    pub eps1: Rational,
    pub eps2: Rational,
    pub alloc: ErrorAllocation,
    pub selections: Vec<Vector>,
    pub normal: Vector,
}

impl DecompositionCertificate {
    pub fn witness(&self, target: &Vector) -> Witness {
        Witness::Certificate {
            target: target.clone(),
            eps1: self.eps1.clone(),
            eps2: self.eps2.clone(),
            ell: self.alloc.ell.clone(),
            selections: self.selections.clone(),
            normal: self.normal.clone(),
        }
    }
}

/// `E = Σ_t μ_t epi f_t*` and `G = Σ_t μ_t co(graph generators of f_t*)`,
/// both in dimension `d + 1`.
#[derive(Clone, Debug)]
pub struct EpigraphSumSet {
    pub e: Polyhedron,
    pub g: Polyhedron,
}

/// How `decompose` picks among feasible splittings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Splitting {
    /// Smallest atom budget `ε₁`.
    #[default]
    Tight,
    /// Pushes selections apart, which tends to spend the atom budget.
    /// Falls back to `Tight` when that objective is unbounded.
    Spread,
}

/// `∂_ε I_f(x)`.
pub fn lhs_eps_subdifferential(inst: &IntegralInstance, x: &Vector, eps: &Rational) -> Result<Polyhedron> {
    inst.integral().finite_value(x)?;
    Ok(inst.integral().eps_subdifferential(x, eps)?.set)
}

pub fn decompose(
    inst: &IntegralInstance,
    x: &Vector,
    xstar: &Vector,
    eps: &Rational,
) -> Result<DecompositionCertificate> {
    decompose_with(inst, x, xstar, eps, Splitting::Tight)
}

/// Finds `y*_t ∈ ∂_{ℓ_t} f_t(x)` and `λ* ∈ N^{ε₂}_{dom I_f}(x)` with
/// `Σ μ_t ℓ_t + ε₂ <= ε` and `Σ μ_t y*_t + λ* = x*`, by one LP in the
/// selections and `ε₁` (with `λ*` eliminated by the sum constraint).
pub fn decompose_with(
    inst: &IntegralInstance,
    x: &Vector,
    xstar: &Vector,
    eps: &Rational,
    splitting: Splitting,
) -> Result<DecompositionCertificate> {
    let d = inst.dim();
    check_dim(d, x.dim())?;
    check_dim(d, xstar.dim())?;
    if eps.is_negative() {
        return Err(CalcError::NegativeParameter("eps"));
    }
    let infeasible = || CalcError::NotInSubdifferential {
        xstar: xstar.clone(),
        eps: eps.to_string(),
    };
    match splitting {
        Splitting::Tight => solve_decomposition(inst, x, xstar, eps, None)?
            .ok_or_else(infeasible),
        Splitting::Spread => {
            let mut best: Option<DecompositionCertificate> = None;
            for flip in [false, true] {
                let Some(cert) = solve_decomposition(inst, x, xstar, eps, Some(flip))? else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| cert.eps1 > b.eps1) {
                    best = Some(cert);
                }
            }
            match best {
                Some(cert) => Ok(cert),
                None => solve_decomposition(inst, x, xstar, eps, None)?.ok_or_else(infeasible),
            }
        }
    }
}

/// `Ok(None)` when the objective is unbounded; `spread` selects the
/// alternating-sign objective and its orientation.
fn solve_decomposition(
    inst: &IntegralInstance,
    x: &Vector,
    xstar: &Vector,
    eps: &Rational,
    spread: Option<bool>,
) -> Result<Option<DecompositionCertificate>> {
    let d = inst.dim();
    let values: Vec<Rational> = inst
        .functions()
        .iter()
        .map(|f| f.finite_value(x))
        .collect::<Result<_>>()?;
    let weights = inst.weights();

    // Each selection is written as y_t = Σ_i λ_ti a_ti + Σ_j m_tj n_tj with λ_t
    // in the simplex and m_t >= 0, which bounds f_t*(y_t) by
    // Σ_i λ_ti (−b_ti) + Σ_j m_tj c_tj. The normal part is Σ_k ν_k N_k over the
    // facets of dom I_f, with ε-slack Σ_k ν_k (C_k − ⟨N_k, x⟩).
    let sense = if spread.is_some() { Sense::Maximize } else { Sense::Minimize };
    let mut lp = LinearProgram::new(sense);
    let mut gens: Vec<Vec<(usize, &Vector)>> = Vec::with_capacity(inst.num_atoms());
    let mut budget_row: Vec<(usize, Rational)> = Vec::new();
    for (f, w) in inst.functions().iter().zip(weights) {
        let mut atom = Vec::new();
        let mut simplex = Vec::new();
        for p in f.pieces() {
            let v = lp.nonneg_var();
            simplex.push((v, Rational::one()));
            budget_row.push((v, -(w * &p.eval(x))));
            atom.push((v, &p.slope));
        }
        lp.add_row(simplex, Relation::Eq, Rational::one());
        for h in f.domain().h_rep() {
            let v = lp.nonneg_var();
            budget_row.push((v, w * &h.slack(x)));
            atom.push((v, &h.normal));
        }
        gens.push(atom);
    }
    let e1 = lp.nonneg_var();

    // Σ μ_t (f_t*(y_t) + f_t(x) − ⟨y_t, x⟩) <= ε₁
    budget_row.push((e1, -Rational::one()));
    let fx_total: Rational = weights.iter().zip(&values).map(|(w, v)| w * v).sum();
    lp.add_row(budget_row, Relation::Le, -fx_total);

    // x* − Σ μ_t y_t = Σ_k ν_k N_k with Σ_k ν_k slack_k(x) <= ε − ε₁
    let dom = inst.domain();
    let nus: Vec<usize> = dom.h_rep().iter().map(|_| lp.nonneg_var()).collect();
    for c in 0..d {
        let mut row: Vec<(usize, Rational)> = Vec::new();
        for (atom, w) in gens.iter().zip(weights) {
            row.extend(atom.iter().map(|(v, g)| (*v, w * &g[c])));
        }
        row.extend(nus.iter().zip(dom.h_rep()).map(|(&v, h)| (v, h.normal[c].clone())));
        lp.add_row(row, Relation::Eq, xstar[c].clone());
    }
    let mut slack_row: Vec<(usize, Rational)> =
        nus.iter().zip(dom.h_rep()).map(|(&v, h)| (v, h.slack(x))).collect();
    slack_row.push((e1, Rational::one()));
    lp.add_row(slack_row, Relation::Le, eps.clone());
    lp.add_row([(e1, Rational::one())], Relation::Le, eps.clone());

    match spread {
        None => lp.set_objective(e1, Rational::one()),
        Some(flip) => {
            for (t, atom) in gens.iter().enumerate() {
                let sign = if (t % 2 == 0) != flip { Rational::one() } else { -Rational::one() };
                for (v, g) in atom {
                    let total: Rational = g.iter().cloned().sum();
                    lp.set_objective(*v, &sign * &total);
                }
            }
        }
    }

    let sol = match lp.solve() {
        LpOutcome::Optimal { x: sol, .. } => sol,
        LpOutcome::Unbounded => return Ok(None),
        LpOutcome::Infeasible => {
            return Err(CalcError::NotInSubdifferential {
                xstar: xstar.clone(),
                eps: eps.to_string(),
            })
        }
    };
    let selections: Vec<Vector> = gens
        .iter()
        .map(|atom| {
            let mut y = Vector::zeros(d);
            for (v, g) in atom {
                if !sol[*v].is_zero() {
                    y = y.add_scaled(&sol[*v], g);
                }
            }
            y
        })
        .collect();
    Ok(Some(tight_certificate(inst, x, xstar, selections)))
}

/// Certificate with the smallest budgets compatible with `selections`.
fn tight_certificate(
    inst: &IntegralInstance,
    x: &Vector,
    xstar: &Vector,
    selections: Vec<Vector>,
) -> DecompositionCertificate {
    let ell: Vec<Rational> = inst
        .functions()
        .iter()
        .zip(&selections)
        .map(|(f, y)| {
            f.fenchel_gap(x, y)
                .into_finite()
                .expect("selection lies in the conjugate domain")
        })
        .collect();
    let eps1 = inst.space().integrate(&ell);
    let normal = xstar - &inst.space().integrate_vectors(&selections);
    let eps2 = inst
        .domain()
        .vertices()
        .iter()
        .map(|v| normal.dot(&(v - x)))
        .fold(Rational::zero(), Rational::max);
    DecompositionCertificate {
        alloc: ErrorAllocation::new(ell, eps1.clone()),
        eps1,
        eps2,
        selections,
        normal,
    }
}

/// Checks every invariant of a certificate by evaluation only.
pub fn verify_certificate(
    inst: &IntegralInstance,
    x: &Vector,
    xstar: &Vector,
    eps: &Rational,
    cert: &DecompositionCertificate,
) -> bool {
    let d = inst.dim();
    let n = inst.num_atoms();
    if x.dim() != d
        || xstar.dim() != d
        || cert.normal.dim() != d
        || cert.selections.len() != n
        || cert.alloc.ell.len() != n
        || cert.selections.iter().any(|y| y.dim() != d)
    {
        return false;
    }
    if cert.eps1.is_negative() || cert.eps2.is_negative() || &(&cert.eps1 + &cert.eps2) > eps {
        return false;
    }
    if cert.alloc.budget > cert.eps1 || !cert.alloc.is_valid_for(inst.space()) {
        return false;
    }
    let dom = inst.domain();
    if !dom.contains(x) {
        return false;
    }
    for ((f, y), ell) in inst.functions().iter().zip(&cert.selections).zip(&cert.alloc.ell) {
        match f.fenchel_gap(x, y) {
            Extended::Finite(g) if g <= *ell => {}
            _ => return false,
        }
    }
    if dom.vertices().iter().any(|v| cert.normal.dot(&(v - x)) > cert.eps2)
        || dom.rays().iter().any(|r| cert.normal.dot(r).is_positive())
    {
        return false;
    }
    &inst.space().integrate_vectors(&cert.selections) + &cert.normal == *xstar
}

/// A generator-level point in one polyhedron but not the other, if any.
fn distinguishing_point(a: &Polyhedron, b: &Polyhedron) -> Option<Vector> {
    for (p, other) in [(a, b), (b, a)] {
        if let Some(v) = p.vertices().iter().find(|v| !other.contains(v)) {
            return Some(v.clone());
        }
        if let Some(v0) = p.vertices().first() {
            if let Some(r) = p.rays().iter().find(|r| !other.recedes_along(r)) {
                return Some(v0 + r);
            }
        }
    }
    None
}

fn compare_sets(
    report: &mut CheckReport,
    left: (&'static str, &Polyhedron),
    right: (&'static str, &Polyhedron),
    eps: Option<&Rational>,
) {
    if left.1.equals(right.1) {
        report.witnesses.push(Witness::SetEquality {
            left: left.0,
            right: right.0,
        });
    } else {
        report.fail(
            format!("{} differs from {}", left.0, right.0),
            distinguishing_point(left.1, right.1),
            eps.cloned(),
        );
    }
}

fn random_index<R: RngCore>(rng: &mut R, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

fn random_rational<R: RngCore>(rng: &mut R, lo: i64, hi: i64, den: i64) -> Rational {
    let span = ((hi - lo) * den + 1) as usize;
    Rational::new(lo * den + random_index(rng, span) as i64, den)
}

/// Verifies `∂_ε I_f(x) = ⋃ { Σ μ_t ∂_{ℓ_t} f_t(x) + N^{ε₂}_{dom I_f}(x) }`.
///
/// `⊆`: every vertex of the left side gets a verified certificate and every
/// ray is matched by the normal set. `⊇`: `samples` random certificates are
/// assembled and their points checked through the Fenchel gap of `I_f`.
pub fn check_sum_rule<R: RngCore>(
    inst: &IntegralInstance,
    x: &Vector,
    eps: &Rational,
    samples: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("sum_rule").with_notes(&[CLOSURE_NOTE, LIMIT_NOTE, SELECTION_NOTE]);
    let lhs = lhs_eps_subdifferential(inst, x, eps)?;
    let dom = inst.domain();

    for v in lhs.vertices() {
        match decompose(inst, x, v, eps) {
            Ok(cert) if verify_certificate(inst, x, v, eps, &cert) => {
                report.witnesses.push(cert.witness(v));
            }
            Ok(_) => report.fail(
                "decomposition of a left-hand vertex failed verification".to_string(),
                Some(v.clone()),
                Some(eps.clone()),
            ),
            Err(e) => report.fail(
                format!("left-hand vertex has no decomposition: {e}"),
                Some(v.clone()),
                Some(eps.clone()),
            ),
        }
    }
    let base = lhs.vertices().first().cloned();
    for w in lhs.rays() {
        let in_normal_cone = dom.vertices().iter().all(|v| !w.dot(&(v - x)).is_positive())
            && dom.rays().iter().all(|r| !w.dot(r).is_positive());
        let shifted = base.as_ref().map(|b| b + w).expect("nonempty left side");
        let decomposed = decompose(inst, x, &shifted, eps)
            .map(|c| verify_certificate(inst, x, &shifted, eps, &c))
            .unwrap_or(false);
        if in_normal_cone && decomposed {
            report.witnesses.push(Witness::Ray { direction: w.clone() });
        } else {
            report.fail(
                "unbounded direction of the left side is not matched on the right".to_string(),
                Some(shifted),
                Some(eps.clone()),
            );
        }
    }

    let exact: Vec<Vector> = inst
        .functions()
        .iter()
        .enumerate()
        .map(|(t, f)| {
            f.nearest_eps_subgradient(x, &Rational::zero(), &Vector::zeros(inst.dim()))?
                .ok_or(CalcError::EmptySummand { atom: t })
        })
        .collect::<Result<_>>()?;
    let normal_set = inst.eps_normal_dom(x, eps)?;
    for _ in 0..samples {
        let cert = sample_certificate(inst, x, eps, &exact, &normal_set, rng);
        let point = &inst.space().integrate_vectors(&cert.selections) + &cert.normal;
        let gap = inst.integral().fenchel_gap(x, &point);
        match gap {
            Extended::Finite(g) if g <= *eps && verify_certificate(inst, x, &point, eps, &cert) => {
                report.witnesses.push(Witness::Sample { point, gap: g });
            }
            _ => report.fail(
                "assembled right-hand point lies outside the left side".to_string(),
                Some(point),
                Some(eps.clone()),
            ),
        }
    }
    Ok(report)
}

fn sample_certificate<R: RngCore>(
    inst: &IntegralInstance,
    x: &Vector,
    eps: &Rational,
    exact: &[Vector],
    normal_set: &Polyhedron,
    rng: &mut R,
) -> DecompositionCertificate {
    let n = inst.num_atoms();
    let eps1 = eps * &Rational::new(random_index(rng, 9) as i64, 8);
    let eps2 = eps - &eps1;
    let shares: Vec<i64> = (0..n).map(|_| 1 + random_index(rng, 4) as i64).collect();
    let total: i64 = shares.iter().sum();
    let ell: Vec<Rational> = shares
        .iter()
        .zip(inst.weights())
        .map(|(&s, w)| &(&eps1 * &Rational::new(s, total)) / w)
        .collect();

    let mut selections = Vec::with_capacity(n);
    for ((f, s0), l) in inst.functions().iter().zip(exact).zip(&ell) {
        let conj = f.conjugate_function();
        let mut p = f.pieces()[random_index(rng, f.pieces().len())].slope.clone();
        for r in conj.domain().rays() {
            p = p.add_scaled(&random_rational(rng, 0, 2, 4), r);
        }
        let gap = f
            .fenchel_gap(x, &p)
            .into_finite()
            .expect("piece slopes lie in the conjugate domain");
        let theta = if gap <= *l { Rational::one() } else { l / &gap };
        selections.push(s0.add_scaled(&theta, &(&p - s0)));
    }

    let verts = normal_set.vertices();
    let coeffs: Vec<Rational> = verts.iter().map(|_| Rational::from_int(random_index(rng, 5) as i64)).collect();
    let sum: Rational = coeffs.iter().cloned().sum();
    let mut normal = Vector::zeros(inst.dim());
    if !eps.is_zero() {
        let theta = &eps2 / eps;
        if sum.is_zero() {
            normal = verts[0].scale(&theta);
        } else {
            for (v, c) in verts.iter().zip(&coeffs) {
                normal = normal.add_scaled(&(&theta * &(c / &sum)), v);
            }
        }
    }
    for r in normal_set.rays() {
        normal = normal.add_scaled(&random_rational(rng, 0, 2, 4), r);
    }
    DecompositionCertificate {
        alloc: ErrorAllocation::new(ell, eps1.clone()),
        eps1,
        eps2,
        selections,
        normal,
    }
}

/// `inf { Σ μ_t f_t*(x*_t) : Σ μ_t x*_t = x* }` by one LP over the
/// generators of each `epi f_t*`: every `(x*_t, r_t)` is a convex
/// combination of its vertices plus a nonnegative combination of its rays.
pub fn inf_convolution_value(inst: &IntegralInstance, xstar: &Vector) -> Extended {
    let d = inst.dim();
    assert_eq!(xstar.dim(), d, "dimension mismatch");
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut columns: Vec<(usize, Rational, &Vector)> = Vec::new();
    for (f, w) in inst.functions().iter().zip(inst.weights()) {
        let epi = f.conjugate_function().epigraph();
        let mut simplex = Vec::with_capacity(epi.vertices().len());
        for v in epi.vertices() {
            let var = lp.nonneg_var();
            simplex.push((var, Rational::one()));
            columns.push((var, w.clone(), v));
        }
        lp.add_row(simplex, Relation::Eq, Rational::one());
        for r in epi.rays() {
            columns.push((lp.nonneg_var(), w.clone(), r));
        }
    }
    for (var, w, g) in &columns {
        lp.set_objective(*var, w * &g[d]);
    }
    for c in 0..d {
        lp.add_row(
            columns.iter().map(|(var, w, g)| (*var, w * &g[c])),
            Relation::Eq,
            xstar[c].clone(),
        );
    }
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => Extended::Finite(value),
        LpOutcome::Infeasible => Extended::PosInf,
        LpOutcome::Unbounded => Extended::NegInf,
    }
}

/// Compares the inf-convolution of the conjugates with `(I_f)*` at each point.
pub fn check_conjugate_formula(inst: &IntegralInstance, points: &[Vector]) -> CheckReport {
    let mut report = CheckReport::new("conjugate_formula").with_notes(&[CLOSURE_NOTE]);
    for p in points {
        let conv = inf_convolution_value(inst, p);
        let direct = inst.integral().conjugate_value(p);
        if conv == direct {
            report.witnesses.push(Witness::ValueMatch {
                point: p.clone(),
                value: direct,
            });
        } else {
            report.fail(
                format!("inf-convolution gives {conv}, conjugate gives {direct}"),
                Some(p.clone()),
                None,
            );
        }
    }
    report
}

/// Builds `E` and `G`. For `G`, each atom contributes the vertices of
/// `epi f_t*` (which lie on the graph) and its non-vertical rays lowered to
/// the recession function of `f_t*`.
pub fn build_epigraph_sets(inst: &IntegralInstance) -> EpigraphSumSet {
    let d = inst.dim();
    let mut e_parts = Vec::with_capacity(inst.num_atoms());
    let mut g_parts = Vec::with_capacity(inst.num_atoms());
    for (f, w) in inst.functions().iter().zip(inst.weights()) {
        let conj = f.conjugate_function();
        let epi = conj.epigraph();
        let rays: Vec<Vector> = epi
            .rays()
            .iter()
            .filter_map(|r| {
                let (dir, _) = r.split_last();
                if dir.is_zero() {
                    return None;
                }
                let height = conj
                    .pieces()
                    .iter()
                    .map(|p| p.slope.dot(&dir))
                    .max()
                    .expect("pieces");
                Some(dir.lifted(height))
            })
            .collect();
        let graph = Polyhedron::from_v(d + 1, epi.vertices().to_vec(), rays);
        e_parts.push(epi.scale(w));
        g_parts.push(graph.scale(w));
    }
    EpigraphSumSet {
        e: Polyhedron::minkowski_sum_all(d + 1, &e_parts),
        g: Polyhedron::minkowski_sum_all(d + 1, &g_parts),
    }
}

fn vertical_cone(d: usize) -> Polyhedron {
    Polyhedron::cone(d + 1, vec![Vector::unit(d + 1, d)])
}

/// `E = G + {0}×ℝ₊` and `E = epi (I_f)*`.
pub fn check_epigraph_formula(inst: &IntegralInstance) -> CheckReport {
    let mut report = CheckReport::new("epigraph_formula").with_notes(&[CLOSURE_NOTE]);
    let sets = build_epigraph_sets(inst);
    let lifted_g = sets.g.minkowski_sum(&vertical_cone(inst.dim()));
    compare_sets(&mut report, ("E", &sets.e), ("G + vertical", &lifted_g), None);
    let epi_conj = inst.integral().conjugate_function().epigraph();
    compare_sets(&mut report, ("E", &sets.e), ("epi conjugate", epi_conj), None);
    report
}

pub fn normal_set_four_ways(inst: &IntegralInstance, x: &Vector, eps: &Rational) -> Result<CheckReport> {
    let cones = NormalSetCones::new(inst, &build_epigraph_sets(inst))?;
    normal_set_four_ways_with(inst, &cones, x, eps)
}

/// `{0} × [0, ε]` in dimension `d + 1`.
fn vertical_segment(d: usize, eps: &Rational) -> Polyhedron {
    Polyhedron::from_v(
        d + 1,
        vec![Vector::zeros(d + 1), Vector::unit(d + 1, d).scale(eps)],
        vec![],
    )
}

/// The cones whose slices give `N^ε_{dom I_f}(x)`; they do not depend on
/// `x` or `ε`.
#[derive(Clone, Debug)]
pub struct NormalSetCones {
    /// `epi σ_dom`.
    pub support_epi: Polyhedron,
    /// Recession cone of `epi (I_f)*`, from its constraints.
    pub conjugate_recession: Polyhedron,
    pub e_recession: Polyhedron,
    pub g_recession: Polyhedron,
}

impl NormalSetCones {
    pub fn new(inst: &IntegralInstance, sets: &EpigraphSumSet) -> Result<Self> {
        let support_epi = PolyhedralConvexFunction::indicator(inst.domain().clone())?
            .conjugate_function()
            .epigraph()
            .clone();
        let conjugate_recession = inst.integral().conjugate_function().epigraph_recession_cone();
        Ok(NormalSetCones {
            support_epi,
            conjugate_recession,
            e_recession: sets.e.recession_cone()?,
            g_recession: sets.g.recession_cone()?,
        })
    }
}

/// `N^ε_{dom I_f}(x)` computed directly and as slices at height
/// `⟨x*, x⟩ + ε` of `epi σ_dom`, of the recession cone of `epi (I_f)*`,
/// of the recession cone of `E`, and of `(co G)_∞ + {0}×[0, ε]`.
pub fn normal_set_four_ways_with(
    inst: &IntegralInstance,
    cones: &NormalSetCones,
    x: &Vector,
    eps: &Rational,
) -> Result<CheckReport> {
    let d = inst.dim();
    let mut report = CheckReport::new("normal_sets").with_notes(&[CLOSURE_NOTE]);
    let direct = inst.eps_normal_dom(x, eps)?;

    let via_support = cones.support_epi.slice_at_height(x, eps)?;
    let via_conjugate = cones.conjugate_recession.slice_at_height(x, eps)?;
    let via_e = cones.e_recession.slice_at_height(x, eps)?;
    let via_g = cones
        .g_recession
        .minkowski_sum(&vertical_segment(d, eps))
        .slice_at_height(x, eps)?;

    let base = ("eps_normal", &direct);
    compare_sets(&mut report, base, ("support_epigraph", &via_support), Some(eps));
    compare_sets(&mut report, base, ("conjugate_recession", &via_conjugate), Some(eps));
    compare_sets(&mut report, base, ("E_recession", &via_e), Some(eps));
    compare_sets(&mut report, base, ("G_recession", &via_g), Some(eps));
    Ok(report)
}

/// The sum rule and normal-set identities for `I_f + δ_L`, through the
/// instance augmented by an atom carrying `δ_L`. Everything that does not
/// depend on `x` or `ε` is built once.
#[derive(Clone, Debug)]
pub struct RestrictedCheck {
    restricted_domain: Polyhedron,
    subspace: Polyhedron,
    aug: IntegralInstance,
    aug_e: Polyhedron,
    aug_cones: NormalSetCones,
    /// `(E + L^⊥ × ℝ₊)_∞`.
    a_cone: Polyhedron,
    /// `(co G + L^⊥ × {0})_∞`.
    b_cone: Polyhedron,
    /// `E + L^⊥ × ℝ₊`.
    e_plus_perp: Polyhedron,
}

impl RestrictedCheck {
    pub fn new(inst: &IntegralInstance, l: &SubspaceRestriction) -> Result<Self> {
        Self::with_sets(inst, &build_epigraph_sets(inst), l)
    }

    /// Reuses `E` and `G` already built for `inst`.
    pub fn with_sets(inst: &IntegralInstance, sets: &EpigraphSumSet, l: &SubspaceRestriction) -> Result<Self> {
        let d = inst.dim();
        check_dim(d, l.set().dim())?;
        let aug = inst.augment_with_indicator(l)?;
        let aug_sets = build_epigraph_sets(&aug);
        let aug_cones = NormalSetCones::new(&aug, &aug_sets)?;

        let perp = l.orthogonal_complement();
        let perp_rays: Vec<Vector> = perp.rays().iter().map(|r| r.lifted(Rational::zero())).collect();
        let mut perp_up_rays = perp_rays.clone();
        perp_up_rays.push(Vector::unit(d + 1, d));
        let perp_flat = Polyhedron::cone(d + 1, perp_rays);
        let perp_up = Polyhedron::cone(d + 1, perp_up_rays);

        let e_plus_perp = sets.e.minkowski_sum(&perp_up);
        let a_cone = e_plus_perp.recession_cone()?;
        let b_cone = sets.g.minkowski_sum(&perp_flat).recession_cone()?;
        Ok(RestrictedCheck {
            restricted_domain: inst.domain().intersect(l.set()),
            subspace: l.set().clone(),
            aug,
            aug_e: aug_sets.e,
            aug_cones,
            a_cone,
            b_cone,
            e_plus_perp,
        })
    }

    pub fn augmented(&self) -> &IntegralInstance {
        &self.aug
    }

    pub fn check<R: RngCore>(
        &self,
        x: &Vector,
        eps: &Rational,
        samples: usize,
        rng: &mut R,
    ) -> Result<CheckReport> {
        let d = self.aug.dim();
        check_dim(d, x.dim())?;
        if !self.subspace.contains(x) || !self.restricted_domain.contains(x) {
            return Err(CalcError::PointNotInSet(x.clone()));
        }
        let mut report = CheckReport::new("restricted").with_notes(&[CLOSURE_NOTE]);
        report.absorb(check_sum_rule(&self.aug, x, eps, samples, rng)?);
        report.absorb(normal_set_four_ways_with(&self.aug, &self.aug_cones, x, eps)?);

        let direct = eps_normal(&self.restricted_domain, x, eps)?;
        let a_form = self.a_cone.slice_at_height(x, eps)?;
        let b_form = self
            .b_cone
            .minkowski_sum(&vertical_segment(d, eps))
            .slice_at_height(x, eps)?;
        let augmented = self.aug.eps_normal_dom(x, eps)?;

        let base = ("eps_normal_restricted", &direct);
        compare_sets(&mut report, base, ("augmented_domain", &augmented), Some(eps));
        compare_sets(&mut report, base, ("A_L", &a_form), Some(eps));
        compare_sets(&mut report, base, ("B_L", &b_form), Some(eps));
        compare_sets(&mut report, ("E_augmented", &self.aug_e), ("E + perp", &self.e_plus_perp), Some(eps));
        Ok(report)
    }
}

/// One-shot form of [`RestrictedCheck`].
pub fn check_restricted_formula<R: RngCore>(
    inst: &IntegralInstance,
    l: &SubspaceRestriction,
    x: &Vector,
    eps: &Rational,
    samples: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    check_dim(inst.dim(), x.dim())?;
    RestrictedCheck::new(inst, l)?.check(x, eps, samples, rng)
}

/// `I_f` is differentiable at an interior point exactly when every `f_t`
/// is, and then its gradient is `Σ μ_t ∇f_t(x)`.
pub fn gateaux_correspondence(inst: &IntegralInstance, x: &Vector) -> Result<CheckReport> {
    check_dim(inst.dim(), x.dim())?;
    let dom = inst.domain();
    if !dom.is_full_dimensional() || !dom.in_relative_interior(x) {
        return Err(CalcError::NotInteriorPoint(x.clone()));
    }
    let mut report = CheckReport::new("gateaux");
    let whole = inst.integral().gradient_at(x)?;
    let parts: Vec<Option<Vector>> = inst
        .functions()
        .iter()
        .map(|f| f.gradient_at(x))
        .collect::<Result<_>>()?;
    let all_parts = parts.iter().all(Option::is_some);
    report.witnesses.push(Witness::Differentiability {
        point: x.clone(),
        differentiable: whole.is_some(),
        gradient: whole.clone(),
    });
    match (&whole, all_parts) {
        (Some(g), true) => {
            let grads: Vec<Vector> = parts.into_iter().map(|p| p.expect("checked")).collect();
            let sum = inst.space().integrate_vectors(&grads);
            if sum != *g {
                report.fail(
                    format!("gradient {g} differs from the integrated gradients {sum}"),
                    Some(x.clone()),
                    None,
                );
            }
        }
        (None, false) => {}
        (Some(_), false) => report.fail(
            "integral is differentiable while some atom is not".to_string(),
            Some(x.clone()),
            None,
        ),
        (None, true) => report.fail(
            "every atom is differentiable but the integral is not".to_string(),
            Some(x.clone()),
            None,
        ),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::AffinePiece;
    use crate::integral::{DiscreteMeasureSpace, IntegrandFamily};
    use crate::polyhedron::HalfSpace;
    use crate::rational::q;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[i64]) -> Vector {
        Vector::from_ints(xs)
    }

    fn abs_shifted(c: i64) -> PolyhedralConvexFunction {
        PolyhedralConvexFunction::max_affine(
            1,
            vec![
                AffinePiece::new(v(&[1]), Rational::from_int(-c)),
                AffinePiece::new(v(&[-1]), Rational::from_int(c)),
            ],
        )
        .unwrap()
    }

    fn instance(weights: Vec<Rational>, fs: Vec<PolyhedralConvexFunction>) -> IntegralInstance {
        let d = fs[0].dim();
        IntegralInstance::assemble(
            DiscreteMeasureSpace::numbered(weights).unwrap(),
            IntegrandFamily::new(d, fs).unwrap(),
        )
        .unwrap()
    }

    fn instance_a() -> IntegralInstance {
        instance(vec![q(1, 1), q(1, 1)], vec![abs_shifted(0), abs_shifted(1)])
    }

    fn interval(lo: Rational, hi: Rational) -> Polyhedron {
        Polyhedron::from_v(1, vec![Vector::new(vec![lo]), Vector::new(vec![hi])], vec![])
    }

    fn unit_box(d: usize) -> Polyhedron {
        let mut hs = Vec::new();
        for i in 0..d {
            hs.push(HalfSpace::new(Vector::unit(d, i), q(1, 1)));
            hs.push(HalfSpace::new(-&Vector::unit(d, i), q(0, 1)));
        }
        Polyhedron::from_h(d, hs)
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn lhs_of_instance_a() {
        let inst = instance_a();
        let x = v(&[0]);
        assert!(lhs_eps_subdifferential(&inst, &x, &q(0, 1))
            .unwrap()
            .equals(&interval(q(-2, 1), q(0, 1))));
        assert!(lhs_eps_subdifferential(&inst, &x, &q(1, 2))
            .unwrap()
            .equals(&interval(q(-2, 1), q(1, 2))));
        let affine = instance(
            vec![q(1, 2), q(3, 1)],
            vec![
                PolyhedralConvexFunction::affine(v(&[2, -1]), q(1, 1)),
                PolyhedralConvexFunction::affine(v(&[0, 1]), q(0, 1)),
            ],
        );
        let lhs = lhs_eps_subdifferential(&affine, &v(&[1, 1]), &q(3, 1)).unwrap();
        assert_eq!(lhs.as_singleton(), Some(&Vector::new(vec![q(1, 1), q(5, 2)])));
    }

    #[test]
    fn decomposes_instance_a() {
        let inst = instance_a();
        let x = v(&[0]);
        let xstar = Vector::new(vec![q(1, 2)]);
        let cert = decompose(&inst, &x, &xstar, &q(1, 2)).unwrap();
        assert!(verify_certificate(&inst, &x, &xstar, &q(1, 2), &cert));
        assert_eq!(cert.eps1, q(1, 2));
        assert_eq!(cert.selections, vec![v(&[1]), Vector::new(vec![q(-1, 2)])]);
        assert_eq!(cert.alloc.ell, vec![q(0, 1), q(1, 2)]);
        assert!(cert.normal.is_zero());

        let err = decompose(&inst, &x, &v(&[1]), &q(1, 2)).unwrap_err();
        assert!(matches!(err, CalcError::NotInSubdifferential { .. }));
    }

    #[test]
    fn domain_active_decomposition() {
        let inst = instance(
            vec![q(1, 1), q(1, 1)],
            vec![
                PolyhedralConvexFunction::indicator(interval(q(0, 1), q(1, 1))).unwrap(),
                PolyhedralConvexFunction::affine(v(&[0]), q(0, 1)),
            ],
        );
        let x = v(&[0]);
        let xstar = v(&[-3]);
        let cert = decompose(&inst, &x, &xstar, &q(0, 1)).unwrap();
        assert!(verify_certificate(&inst, &x, &xstar, &q(0, 1), &cert));
        assert_eq!(cert.selections[1], v(&[0]));
        assert!(!cert.selections[0].is_zero() || cert.normal == v(&[-3]));
    }

    #[test]
    fn verification_rejects_broken_certificates() {
        let inst = instance_a();
        let x = v(&[0]);
        let xstar = Vector::new(vec![q(1, 2)]);
        let eps = q(1, 2);
        let cert = decompose(&inst, &x, &xstar, &eps).unwrap();

        let mut moved = cert.clone();
        moved.selections[0] = &moved.selections[0] + &v(&[1]);
        assert!(!verify_certificate(&inst, &x, &xstar, &eps, &moved));

        let mut greedy = cert.clone();
        greedy.alloc.ell[1] = q(1, 1);
        assert!(!verify_certificate(&inst, &x, &xstar, &eps, &greedy));

        let mut over = cert;
        over.eps2 = q(1, 4);
        assert!(!verify_certificate(&inst, &x, &xstar, &eps, &over));
    }

    #[test]
    fn sum_rule_passes_on_examples() {
        let mut rng = rng();
        let inst = instance_a();
        for eps in [q(0, 1), q(1, 2), q(2, 1)] {
            let r = check_sum_rule(&inst, &v(&[0]), &eps, 50, &mut rng).unwrap();
            assert!(r.passed(), "{:?}", r.counterexample);
        }
        let boxes = instance(
            vec![q(1, 2), q(2, 1)],
            vec![
                PolyhedralConvexFunction::indicator(unit_box(2)).unwrap(),
                PolyhedralConvexFunction::indicator(Polyhedron::from_h(
                    2,
                    vec![HalfSpace::new(v(&[1, 1]), q(3, 2))],
                ))
                .unwrap(),
            ],
        );
        for eps in [q(0, 1), q(1, 4), q(1, 1)] {
            let r = check_sum_rule(&boxes, &v(&[1, 0]), &eps, 50, &mut rng).unwrap();
            assert!(r.passed(), "{:?}", r.counterexample);
        }
    }

    #[test]
    fn conjugate_formula_on_instance_a() {
        let inst = instance_a();
        assert_eq!(inf_convolution_value(&inst, &v(&[0])), Extended::Finite(q(-1, 1)));
        assert_eq!(inf_convolution_value(&inst, &v(&[3])), Extended::PosInf);
        let single = instance(vec![q(1, 1)], vec![abs_shifted(1)]);
        let p = Vector::new(vec![q(1, 3)]);
        assert_eq!(inf_convolution_value(&single, &p), abs_shifted(1).conjugate_value(&p));
        let points: Vec<Vector> = (-10..=10).map(|k| Vector::new(vec![q(k, 4)])).collect();
        assert!(check_conjugate_formula(&inst, &points).passed());
    }

    #[test]
    fn epigraph_sets() {
        let single = instance(vec![q(1, 1)], vec![abs_shifted(0)]);
        let sets = build_epigraph_sets(&single);
        let band = Polyhedron::from_v(2, vec![v(&[-1, 0]), v(&[1, 0])], vec![v(&[0, 1])]);
        assert!(sets.e.equals(&band));
        let flat = Polyhedron::from_v(2, vec![v(&[-1, 0]), v(&[1, 0])], vec![]);
        assert!(sets.g.equals(&flat));
        assert!(check_epigraph_formula(&instance_a()).passed());
    }

    #[test]
    fn normal_sets_agree() {
        let whole = instance_a();
        let r = normal_set_four_ways(&whole, &v(&[0]), &q(1, 1)).unwrap();
        assert!(r.passed(), "{:?}", r.counterexample);

        let boxed = instance(
            vec![q(1, 1)],
            vec![PolyhedralConvexFunction::indicator(unit_box(2)).unwrap()],
        );
        for eps in [q(0, 1), q(1, 4), q(10, 1)] {
            let r = normal_set_four_ways(&boxed, &v(&[0, 0]), &eps).unwrap();
            assert!(r.passed(), "{:?}", r.counterexample);
        }
    }

    #[test]
    fn restricted_formula_on_a_line() {
        let boxed = instance(
            vec![q(1, 1), q(1, 2)],
            vec![
                PolyhedralConvexFunction::indicator(unit_box(2)).unwrap(),
                PolyhedralConvexFunction::max_affine(
                    2,
                    vec![
                        AffinePiece::new(v(&[1, 0]), q(0, 1)),
                        AffinePiece::new(v(&[0, 1]), q(0, 1)),
                    ],
                )
                .unwrap(),
            ],
        );
        let line = SubspaceRestriction::new(2, vec![v(&[1, 0])]).unwrap();
        let mut rng = rng();
        for eps in [q(0, 1), q(1, 4)] {
            let r = check_restricted_formula(&boxed, &line, &v(&[0, 0]), &eps, 20, &mut rng).unwrap();
            assert!(r.passed(), "{:?}", r.counterexample);
        }
        let direct = eps_normal(
            &boxed.domain().intersect(line.set()),
            &Vector::new(vec![q(1, 2), q(0, 1)]),
            &q(0, 1),
        )
        .unwrap();
        assert!(direct.equals(&Polyhedron::subspace(2, &[v(&[0, 1])])));
        let full = SubspaceRestriction::full(2);
        let r = check_restricted_formula(&boxed, &full, &v(&[0, 0]), &q(1, 1), 10, &mut rng).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn gateaux_on_instance_a() {
        let inst = instance_a();
        let r = gateaux_correspondence(&inst, &Vector::new(vec![q(1, 2)])).unwrap();
        assert!(r.passed());
        assert_eq!(
            r.witnesses,
            vec![Witness::Differentiability {
                point: Vector::new(vec![q(1, 2)]),
                differentiable: true,
                gradient: Some(v(&[0])),
            }]
        );
        let r = gateaux_correspondence(&inst, &v(&[0])).unwrap();
        assert!(r.passed());
        assert!(matches!(
            r.witnesses[0],
            Witness::Differentiability { differentiable: false, .. }
        ));
        let boxed = instance(
            vec![q(1, 1)],
            vec![PolyhedralConvexFunction::indicator(interval(q(0, 1), q(1, 1))).unwrap()],
        );
        assert!(matches!(
            gateaux_correspondence(&boxed, &v(&[0])),
            Err(CalcError::NotInteriorPoint(_))
        ));
    }
}
