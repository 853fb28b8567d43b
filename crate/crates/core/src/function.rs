//! Polyhedral convex functions: max of affine pieces on a polyhedral domain.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use once_cell::race::OnceBox;

use crate::error::{check_dim, CalcError, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::polyhedron::{HalfSpace, Polyhedron};
use crate::rational::{Extended, Rational, Vector};

/// The affine map `y ↦ ⟨slope, y⟩ + intercept`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffinePiece {
    pub slope: Vector,
    pub intercept: Rational,
}

impl AffinePiece {
    pub fn new(slope: Vector, intercept: Rational) -> Self {
        AffinePiece { slope, intercept }
    }

    pub fn eval(&self, y: &Vector) -> Rational {
        &self.slope.dot(y) + &self.intercept
    }
}

/// `f(y) = max_i ⟨a_i, y⟩ + b_i` on `domain`, `+∞` elsewhere.
///
/// Always proper, convex and lower semicontinuous. The conjugate is computed
/// on first use and cached.
pub struct PolyhedralConvexFunction {
    dim: usize,
    pieces: Vec<AffinePiece>,
    domain: Polyhedron,
    conjugate: OnceBox<PolyhedralConvexFunction>,
    epigraph: OnceBox<Polyhedron>,
}

impl Clone for PolyhedralConvexFunction {
    fn clone(&self) -> Self {
        let conjugate = OnceBox::new();
        if let Some(c) = self.conjugate.get() {
            let _ = conjugate.set(Box::new(c.clone()));
        }
        let epigraph = OnceBox::new();
        if let Some(e) = self.epigraph.get() {
            let _ = epigraph.set(Box::new(e.clone()));
        }
        PolyhedralConvexFunction {
            dim: self.dim,
            pieces: self.pieces.clone(),
            domain: self.domain.clone(),
            conjugate,
            epigraph,
        }
    }
}

impl fmt::Debug for PolyhedralConvexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolyhedralConvexFunction")
            .field("dim", &self.dim)
            .field("pieces", &self.pieces)
            .field("domain", &self.domain)
            .finish()
    }
}

/// `∂_ε f(x)` as a polyhedron of dual vectors.
#[derive(Clone, Debug)]
pub struct EpsSubdiffSet {
    pub set: Polyhedron,
    pub base_point: Vector,
    pub eps: Rational,
}

impl PolyhedralConvexFunction {
    pub fn new(pieces: Vec<AffinePiece>, domain: Polyhedron) -> Result<Self> {
        let dim = domain.dim();
        if pieces.is_empty() {
            return Err(CalcError::NoPieces);
        }
        for p in &pieces {
            check_dim(dim, p.slope.dim())?;
        }
        if domain.is_empty() {
            return Err(CalcError::ImproperFunction);
        }
        let mut pieces = pieces;
        pieces.sort();
        pieces.dedup();
        Ok(PolyhedralConvexFunction {
            dim,
            pieces,
            domain,
            conjugate: OnceBox::new(),
            epigraph: OnceBox::new(),
        })
    }

    /// Finite max-of-affine function on all of `Q^d`.
    pub fn max_affine(dim: usize, pieces: Vec<AffinePiece>) -> Result<Self> {
        Self::new(pieces, Polyhedron::whole_space(dim))
    }

    pub fn affine(slope: Vector, intercept: Rational) -> Self {
        let dim = slope.dim();
        Self::max_affine(dim, alloc::vec![AffinePiece::new(slope, intercept)])
            .expect("one piece on the whole space")
    }

    /// The indicator function `δ_P`.
    pub fn indicator(domain: Polyhedron) -> Result<Self> {
        let dim = domain.dim();
        Self::new(
            alloc::vec![AffinePiece::new(Vector::zeros(dim), Rational::zero())],
            domain,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn domain(&self) -> &Polyhedron {
        &self.domain
    }

    pub fn value(&self, y: &Vector) -> Extended {
        assert_eq!(y.dim(), self.dim, "dimension mismatch");
        if !self.domain.contains(y) {
            return Extended::PosInf;
        }
        Extended::Finite(self.max_piece(y))
    }

    /// Max over pieces, ignoring the domain.
    pub(crate) fn max_piece(&self, y: &Vector) -> Rational {
        self.pieces
            .iter()
            .map(|p| p.eval(y))
            .max()
            .expect("at least one piece")
    }

    pub(crate) fn finite_value(&self, y: &Vector) -> Result<Rational> {
        self.value(y)
            .into_finite()
            .ok_or_else(|| CalcError::NotInDomain(y.clone()))
    }

    /// `epi f ⊂ Q^{d+1}`.
    /// `epi f` in `Q^{d+1}`, computed on first use.
    pub fn epigraph(&self) -> &Polyhedron {
        self.epigraph.get_or_init(|| Box::new(self.build_epigraph()))
    }

    fn epigraph_constraints(&self) -> Vec<HalfSpace> {
        let mut hs: Vec<HalfSpace> = self
            .pieces
            .iter()
            .map(|p| HalfSpace::new(p.slope.lifted(-Rational::one()), -&p.intercept))
            .collect();
        hs.extend(
            self.domain
                .h_rep()
                .iter()
                .map(|h| HalfSpace::new(h.normal.lifted(Rational::zero()), h.offset.clone())),
        );
        hs
    }

    fn build_epigraph(&self) -> Polyhedron {
        Polyhedron::from_h(self.dim + 1, self.epigraph_constraints())
    }

    /// `(epi f)_∞`, read off the constraints of `epi f` without its vertices.
    pub fn epigraph_recession_cone(&self) -> Polyhedron {
        let hs = self
            .epigraph_constraints()
            .into_iter()
            .map(|h| HalfSpace::new(h.normal, Rational::zero()))
            .collect();
        Polyhedron::from_h(self.dim + 1, hs)
    }

    /// `f*(x*)` by the dual of the epigraph LP:
    /// `min Σ λ_i (−b_i) + Σ m_j c_j` over `Σ λ_i a_i + Σ m_j n_j = x*`,
    /// `λ` in the simplex and `m >= 0`. Infeasibility means `+∞`.
    pub fn conjugate_value(&self, xstar: &Vector) -> Extended {
        assert_eq!(xstar.dim(), self.dim, "dimension mismatch");
        let mut lp = LinearProgram::new(Sense::Minimize);
        let mut cols: Vec<(usize, &Vector)> = Vec::new();
        for p in &self.pieces {
            let v = lp.nonneg_var();
            lp.set_objective(v, -&p.intercept);
            cols.push((v, &p.slope));
        }
        let simplex: Vec<(usize, Rational)> = cols.iter().map(|(v, _)| (*v, Rational::one())).collect();
        for h in self.domain.h_rep() {
            let v = lp.nonneg_var();
            lp.set_objective(v, h.offset.clone());
            cols.push((v, &h.normal));
        }
        lp.add_row(simplex, Relation::Eq, Rational::one());
        for c in 0..self.dim {
            lp.add_row(
                cols.iter().map(|(v, g)| (*v, g[c].clone())),
                Relation::Eq,
                xstar[c].clone(),
            );
        }
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => Extended::Finite(value),
            LpOutcome::Infeasible => Extended::PosInf,
            LpOutcome::Unbounded => unreachable!("proper function has a feasible epigraph"),
        }
    }

    /// Explicit polyhedral representation of `f*`, built from the vertices
    /// and rays of `epi f`.
    pub fn conjugate_function(&self) -> &PolyhedralConvexFunction {
        self.conjugate.get_or_init(|| Box::new(self.build_conjugate()))
    }

    fn build_conjugate(&self) -> PolyhedralConvexFunction {
        let epi = self.epigraph();
        let pieces = epi
            .vertices()
            .iter()
            .map(|v| {
                let (y, height) = v.split_last();
                AffinePiece::new(y, -height)
            })
            .collect();
        let domain = Polyhedron::from_h(
            self.dim,
            epi.rays()
                .iter()
                .map(|w| {
                    let (dir, s) = w.split_last();
                    HalfSpace::new(dir, s)
                })
                .collect(),
        );
        PolyhedralConvexFunction::new(pieces, domain).expect("conjugate of a proper polyhedral function is proper")
    }

    /// Fenchel gap `f(x) + f*(x*) − ⟨x*, x⟩`, evaluated through the cached conjugate.
    pub fn fenchel_gap(&self, x: &Vector, xstar: &Vector) -> Extended {
        let fx = self.value(x);
        let fs = self.conjugate_function().value(xstar);
        match (fx, fs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(&(&a + &b) - &xstar.dot(x)),
            _ => Extended::PosInf,
        }
    }

    /// `∂_ε f(x) = {x* : f*(x*) + f(x) − ⟨x*, x⟩ <= ε}`; empty off the domain.
    pub fn eps_subdifferential(&self, x: &Vector, eps: &Rational) -> Result<EpsSubdiffSet> {
        check_dim(self.dim, x.dim())?;
        if eps.is_negative() {
            return Err(CalcError::NegativeParameter("eps"));
        }
        let set = match self.value(x) {
            Extended::Finite(fx) => {
                let conj = self.conjugate_function();
                let mut hs: Vec<HalfSpace> = conj
                    .pieces
                    .iter()
                    .map(|p| {
                        HalfSpace::new(&p.slope - x, &(eps - &p.intercept) - &fx)
                    })
                    .collect();
                hs.extend_from_slice(conj.domain.h_rep());
                Polyhedron::from_h(self.dim, hs)
            }
            _ => Polyhedron::empty(self.dim),
        };
        Ok(EpsSubdiffSet {
            set,
            base_point: x.clone(),
            eps: eps.clone(),
        })
    }

    /// `inf_{λ>0} (f(x + λu) − f(x) + ℓ) / λ`, minimized exactly over the
    /// breakpoints of `λ ↦ f(x + λu)` and the limits at `0+` and `∞`.
    pub fn support_via_quotient(&self, x: &Vector, ell: &Rational, u: &Vector) -> Result<Extended> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, u.dim())?;
        if ell.is_negative() {
            return Err(CalcError::NegativeParameter("ell"));
        }
        let fx = self.finite_value(x)?;

        // Feasible step lengths form [0, lambda_max].
        let mut lambda_max: Option<Rational> = None;
        for h in self.domain.h_rep() {
            let rate = h.normal.dot(u);
            if rate.is_positive() {
                let limit = &h.slack(x) / &rate;
                lambda_max = Some(match lambda_max {
                    Some(m) => m.min(limit),
                    None => limit,
                });
            }
        }
        if lambda_max.as_ref().is_some_and(Rational::is_zero) {
            return Ok(Extended::PosInf);
        }

        let lines: Vec<(Rational, Rational)> = self
            .pieces
            .iter()
            .map(|p| (p.eval(x), p.slope.dot(u)))
            .collect();
        let g = |lambda: &Rational| -> Rational {
            lines
                .iter()
                .map(|(c, s)| c + &(s * lambda))
                .max()
                .expect("pieces")
        };
        let quotient = |lambda: &Rational| -> Rational { &(&(&g(lambda) - &fx) + ell) / lambda };

        let mut best = Extended::PosInf;
        let mut consider = |v: Rational| {
            let v = Extended::Finite(v);
            if v < best {
                best = v;
            }
        };
        if let Some(m) = &lambda_max {
            consider(quotient(m));
        }
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                let ds = &lines[j].1 - &lines[i].1;
                if ds.is_zero() {
                    continue;
                }
                let lambda = &(&lines[i].0 - &lines[j].0) / &ds;
                let inside = lambda.is_positive()
                    && lambda_max.as_ref().is_none_or(|m| lambda < *m);
                if inside {
                    consider(quotient(&lambda));
                }
            }
        }
        if ell.is_zero() {
            let right_derivative = lines
                .iter()
                .filter(|(c, _)| *c == fx)
                .map(|(_, s)| s.clone())
                .max()
                .expect("an active piece at x");
            consider(right_derivative);
        }
        if lambda_max.is_none() {
            let slope_at_infinity = lines.iter().map(|(_, s)| s.clone()).max().expect("pieces");
            consider(slope_at_infinity);
        }
        Ok(best)
    }

    /// `f'(x; u)`.
    pub fn directional_derivative(&self, x: &Vector, u: &Vector) -> Result<Extended> {
        self.support_via_quotient(x, &Rational::zero(), u)
    }

    /// The gradient when `∂f(x)` is a singleton, `None` otherwise.
    pub fn gradient_at(&self, x: &Vector) -> Result<Option<Vector>> {
        self.finite_value(x)?;
        let sub = self.eps_subdifferential(x, &Rational::zero())?;
        Ok(sub.set.as_singleton().cloned())
    }

    pub fn is_differentiable_at(&self, x: &Vector) -> Result<bool> {
        Ok(self.gradient_at(x)?.is_some())
    }

    /// An element of `∂_ε f(x)` closest to `target` in the 1-norm, or `None`
    /// when the set is empty.
    pub fn nearest_eps_subgradient(
        &self,
        x: &Vector,
        eps: &Rational,
        target: &Vector,
    ) -> Result<Option<Vector>> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, target.dim())?;
        if eps.is_negative() {
            return Err(CalcError::NegativeParameter("eps"));
        }
        let fx = match self.value(x) {
            Extended::Finite(v) => v,
            _ => return Ok(None),
        };
        let conj = self.conjugate_function();
        let mut lp = LinearProgram::new(Sense::Minimize);
        let s = lp.free_vars(self.dim);
        let t: Vec<usize> = (0..self.dim).map(|_| lp.nonneg_var()).collect();
        for &tj in &t {
            lp.set_objective(tj, Rational::one());
        }
        for p in conj.pieces() {
            let normal = &p.slope - x;
            lp.add_row(
                s.iter().zip(normal.iter()).map(|(&v, a)| (v, a.clone())),
                Relation::Le,
                &(eps - &p.intercept) - &fx,
            );
        }
        for h in conj.domain().h_rep() {
            lp.add_row(
                s.iter().zip(h.normal.iter()).map(|(&v, a)| (v, a.clone())),
                Relation::Le,
                h.offset.clone(),
            );
        }
        for j in 0..self.dim {
            let one = Rational::one();
            lp.add_row([(s[j], one.clone()), (t[j], -&one)], Relation::Le, target[j].clone());
            lp.add_row([(s[j], -&one), (t[j], -&one)], Relation::Le, -&target[j]);
        }
        Ok(lp
            .solve()
            .optimal()
            .map(|(sol, _)| s.iter().map(|&v| sol[v].clone()).collect()))
    }

    /// Same function, as sets: equal epigraphs.
    pub fn same_function(&self, other: &PolyhedralConvexFunction) -> bool {
        self.dim == other.dim && self.epigraph().equals(other.epigraph())
    }

    /// Drops pieces that never attain the maximum on the domain.
    pub fn pruned(&self) -> PolyhedralConvexFunction {
        let keep: Vec<AffinePiece> = (0..self.pieces.len())
            .filter(|&i| self.piece_is_active(i))
            .map(|i| self.pieces[i].clone())
            .collect();
        PolyhedralConvexFunction::new(keep, self.domain.clone()).expect("an active piece exists")
    }

    fn piece_is_active(&self, i: usize) -> bool {
        let mut extra: Vec<HalfSpace> = Vec::new();
        let pi = &self.pieces[i];
        for (j, pj) in self.pieces.iter().enumerate() {
            if j != i {
                extra.push(HalfSpace::new(&pj.slope - &pi.slope, &pi.intercept - &pj.intercept));
            }
        }
        cell_is_nonempty(&self.domain, &extra)
    }
}

/// Feasibility of `domain ∩ extra` by a phase-one LP.
pub(crate) fn cell_is_nonempty(domain: &Polyhedron, extra: &[HalfSpace]) -> bool {
    let dim = domain.dim();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let y = lp.free_vars(dim);
    for h in domain.h_rep().iter().chain(extra) {
        lp.add_row(
            y.iter().zip(h.normal.iter()).map(|(&v, a)| (v, a.clone())),
            Relation::Le,
            h.offset.clone(),
        );
    }
    !matches!(lp.solve(), LpOutcome::Infeasible)
}

/// `N^ε_P(x) = {x* : ⟨x*, y − x⟩ <= ε for all y in P}`.
pub fn eps_normal(domain: &Polyhedron, x: &Vector, eps: &Rational) -> Result<Polyhedron> {
    check_dim(domain.dim(), x.dim())?;
    if eps.is_negative() {
        return Err(CalcError::NegativeParameter("eps"));
    }
    if !domain.contains(x) {
        return Err(CalcError::PointNotInSet(x.clone()));
    }
    let mut hs: Vec<HalfSpace> = domain
        .vertices()
        .iter()
        .map(|v| HalfSpace::new(v - x, eps.clone()))
        .collect();
    hs.extend(
        domain
            .rays()
            .iter()
            .map(|r| HalfSpace::new(r.clone(), Rational::zero())),
    );
    Ok(Polyhedron::from_h(domain.dim(), hs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use alloc::vec;

    fn v(xs: &[i64]) -> Vector {
        Vector::from_ints(xs)
    }

    fn s(x: Rational) -> Vector {
        Vector::new(vec![x])
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

    fn interval(lo: Rational, hi: Rational) -> Polyhedron {
        Polyhedron::from_v(1, vec![s(lo), s(hi)], vec![])
    }

    #[test]
    fn values() {
        assert_eq!(abs_shifted(0).value(&v(&[-3])), Extended::Finite(q(3, 1)));
        let boxed = PolyhedralConvexFunction::indicator(interval(q(0, 1), q(1, 1))).unwrap();
        assert_eq!(boxed.value(&v(&[2])), Extended::PosInf);
        assert_eq!(abs_shifted(1).value(&v(&[0])), Extended::Finite(q(1, 1)));
    }

    #[test]
    fn conjugate_values() {
        let abs = abs_shifted(0);
        assert_eq!(abs.conjugate_value(&s(q(1, 2))), Extended::Finite(Rational::zero()));
        assert_eq!(abs.conjugate_value(&s(q(2, 1))), Extended::PosInf);
        let f2 = abs_shifted(1);
        for k in -2..=2 {
            let x = q(k, 2);
            assert_eq!(f2.conjugate_value(&s(x.clone())), Extended::Finite(x));
        }
        let aff = PolyhedralConvexFunction::affine(v(&[2, -1]), q(3, 1));
        assert_eq!(aff.conjugate_value(&v(&[2, -1])), Extended::Finite(q(-3, 1)));
        assert_eq!(aff.conjugate_value(&v(&[2, 0])), Extended::PosInf);
    }

    #[test]
    fn conjugate_function_shapes() {
        let abs_conj = abs_shifted(0).conjugate_function().clone();
        let expected = PolyhedralConvexFunction::indicator(interval(q(-1, 1), q(1, 1))).unwrap();
        assert!(abs_conj.same_function(&expected));

        // max(y, 2y - 1): conjugate is s - 1 on [1, 2]
        let f = PolyhedralConvexFunction::max_affine(
            1,
            vec![
                AffinePiece::new(v(&[1]), Rational::zero()),
                AffinePiece::new(v(&[2]), q(-1, 1)),
            ],
        )
        .unwrap();
        let conj = f.conjugate_function();
        for x in [q(1, 1), q(3, 2), q(2, 1), q(5, 2), q(0, 1)] {
            assert_eq!(conj.value(&s(x.clone())), f.conjugate_value(&s(x)));
        }
        assert_eq!(conj.value(&s(q(3, 2))), Extended::Finite(q(1, 2)));
        assert!(conj.conjugate_function().same_function(&f));
    }

    #[test]
    fn eps_subdifferentials_in_one_dimension() {
        let abs = abs_shifted(0);
        for eps in [q(0, 1), q(1, 3), q(5, 1)] {
            let sub = abs.eps_subdifferential(&v(&[0]), &eps).unwrap();
            assert!(sub.set.equals(&interval(q(-1, 1), q(1, 1))));
        }
        let f2 = abs_shifted(1);
        for eps in [q(0, 1), q(1, 2), q(3, 2), q(2, 1)] {
            let sub = f2.eps_subdifferential(&v(&[0]), &eps).unwrap();
            assert!(sub.set.equals(&interval(q(-1, 1), &eps - &q(1, 1))), "eps = {eps}");
        }
        let boxed = PolyhedralConvexFunction::indicator(interval(q(0, 1), q(1, 1))).unwrap();
        assert!(boxed
            .eps_subdifferential(&v(&[3]), &q(1, 1))
            .unwrap()
            .set
            .is_empty());
    }

    #[test]
    fn eps_normal_sets() {
        let unit = interval(q(0, 1), q(1, 1));
        let n = eps_normal(&unit, &v(&[0]), &q(1, 4)).unwrap();
        assert!(n.equals(&Polyhedron::from_h(1, vec![HalfSpace::new(v(&[1]), q(1, 4))])));
        let whole = Polyhedron::whole_space(2);
        assert!(eps_normal(&whole, &v(&[3, 1]), &q(7, 1)).unwrap().equals(&Polyhedron::origin(2)));
        let interior = eps_normal(&unit, &s(q(1, 2)), &Rational::zero()).unwrap();
        assert!(interior.equals(&Polyhedron::origin(1)));
        assert_eq!(
            eps_normal(&unit, &v(&[2]), &Rational::zero()),
            Err(CalcError::PointNotInSet(v(&[2])))
        );
    }

    #[test]
    fn quotient_support() {
        let abs = abs_shifted(0);
        let one = q(1, 1);
        assert_eq!(abs.support_via_quotient(&v(&[0]), &one, &v(&[1])).unwrap(), Extended::Finite(one.clone()));
        assert_eq!(
            abs.support_via_quotient(&v(&[0]), &one, &v(&[0])).unwrap(),
            Extended::Finite(Rational::zero())
        );
        let f2 = abs_shifted(1);
        assert_eq!(
            f2.support_via_quotient(&v(&[0]), &q(1, 2), &v(&[1])).unwrap(),
            Extended::Finite(q(-1, 2))
        );
    }

    #[test]
    fn differentiability() {
        let abs = abs_shifted(0);
        assert_eq!(abs.gradient_at(&v(&[0])).unwrap(), None);
        assert_eq!(abs.gradient_at(&v(&[1])).unwrap(), Some(v(&[1])));
        let max2 = PolyhedralConvexFunction::max_affine(
            2,
            vec![
                AffinePiece::new(v(&[1, 0]), Rational::zero()),
                AffinePiece::new(v(&[0, 1]), Rational::zero()),
            ],
        )
        .unwrap();
        assert!(!max2.is_differentiable_at(&v(&[0, 0])).unwrap());
        for u in [v(&[1, 2]), v(&[-3, -1]), v(&[2, -5])] {
            let expected = u[0].clone().max(u[1].clone());
            assert_eq!(
                max2.directional_derivative(&v(&[0, 0]), &u).unwrap(),
                Extended::Finite(expected)
            );
        }
    }

    #[test]
    fn pruning_removes_dominated_pieces() {
        let f = PolyhedralConvexFunction::new(
            vec![
                AffinePiece::new(v(&[1]), Rational::zero()),
                AffinePiece::new(v(&[-1]), Rational::zero()),
                AffinePiece::new(v(&[0]), q(-5, 1)),
            ],
            Polyhedron::whole_space(1),
        )
        .unwrap();
        assert_eq!(f.pruned().pieces().len(), 2);
        assert!(f.pruned().same_function(&f));
    }
}
