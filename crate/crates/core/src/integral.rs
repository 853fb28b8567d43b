//! Integral functionals `I_f(x) = Σ_t μ_t f_t(x)` over a finite atomic measure.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{check_dim, CalcError, Result};
use crate::function::{cell_is_nonempty, eps_normal, AffinePiece, PolyhedralConvexFunction};
use crate::polyhedron::{HalfSpace, Polyhedron};
use crate::rational::{Extended, Rational, Vector};

/// Finitely many atoms with strictly positive weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteMeasureSpace {
    atoms: Vec<String>,
    weights: Vec<Rational>,
}

impl DiscreteMeasureSpace {
    pub fn new(atoms: Vec<String>, weights: Vec<Rational>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(CalcError::NoAtoms);
        }
        check_dim(atoms.len(), weights.len())?;
        if weights.iter().any(|w| !w.is_positive()) {
            return Err(CalcError::NonPositiveWeight);
        }
        Ok(DiscreteMeasureSpace { atoms, weights })
    }

    /// Atoms named `1..=n` with the given weights.
    pub fn numbered(weights: Vec<Rational>) -> Result<Self> {
        let atoms = (1..=weights.len()).map(|i| i.to_string()).collect();
        Self::new(atoms, weights)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// `∫ g dμ` for a function given by its atom values.
    pub fn integrate(&self, values: &[Rational]) -> Rational {
        assert_eq!(values.len(), self.len(), "one value per atom");
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `∫ g dμ` for vector-valued `g`.
    pub fn integrate_vectors(&self, values: &[Vector]) -> Vector {
        assert_eq!(values.len(), self.len(), "one value per atom");
        let dim = values.first().map_or(0, Vector::dim);
        values
            .iter()
            .zip(&self.weights)
            .fold(Vector::zeros(dim), |acc, (v, w)| acc.add_scaled(w, v))
    }
}

/// One polyhedral convex function per atom, all of the same dimension.
#[derive(Clone, Debug)]
pub struct IntegrandFamily {
    dim: usize,
    functions: Vec<PolyhedralConvexFunction>,
}

impl IntegrandFamily {
    pub fn new(dim: usize, functions: Vec<PolyhedralConvexFunction>) -> Result<Self> {
        for f in &functions {
            check_dim(dim, f.dim())?;
        }
        Ok(IntegrandFamily { dim, functions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn functions(&self) -> &[PolyhedralConvexFunction] {
        &self.functions
    }
}

/// Nonnegative per-atom budgets `ℓ` with `∫ ℓ dμ <= budget`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorAllocation {
    pub ell: Vec<Rational>,
    pub budget: Rational,
}

impl ErrorAllocation {
    pub fn new(ell: Vec<Rational>, budget: Rational) -> Self {
        ErrorAllocation { ell, budget }
    }

    pub fn zero(atoms: usize) -> Self {
        ErrorAllocation {
            ell: alloc::vec![Rational::zero(); atoms],
            budget: Rational::zero(),
        }
    }

    pub fn is_valid_for(&self, space: &DiscreteMeasureSpace) -> bool {
        self.ell.len() == space.len()
            && self.ell.iter().all(|l| !l.is_negative())
            && !self.budget.is_negative()
            && space.integrate(&self.ell) <= self.budget
    }
}

/// A linear subspace `L`, kept with a spanning set.
#[derive(Clone, Debug)]
pub struct SubspaceRestriction {
    basis: Vec<Vector>,
    set: Polyhedron,
}

impl SubspaceRestriction {
    pub fn new(dim: usize, basis: Vec<Vector>) -> Result<Self> {
        for b in &basis {
            check_dim(dim, b.dim())?;
        }
        let set = Polyhedron::subspace(dim, &basis);
        Ok(SubspaceRestriction { basis, set })
    }

    pub fn full(dim: usize) -> Self {
        let basis = (0..dim).map(|i| Vector::unit(dim, i)).collect();
        Self::new(dim, basis).expect("unit basis")
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn set(&self) -> &Polyhedron {
        &self.set
    }

    /// `L^⊥` as a polyhedron.
    pub fn orthogonal_complement(&self) -> Polyhedron {
        let dim = self.set.dim();
        let hs = self
            .basis
            .iter()
            .flat_map(|b| {
                [
                    HalfSpace::new(b.clone(), Rational::zero()),
                    HalfSpace::new(-b, Rational::zero()),
                ]
            })
            .collect();
        Polyhedron::from_h(dim, hs)
    }
}

/// A measure space, an integrand family and the assembled `I_f`.
#[derive(Clone, Debug)]
pub struct IntegralInstance {
    space: DiscreteMeasureSpace,
    family: IntegrandFamily,
    integral: PolyhedralConvexFunction,
    domain: Polyhedron,
}

impl IntegralInstance {
    /// Materializes `I_f` as a single polyhedral function whose pieces are
    /// the weighted sums of per-atom pieces that are simultaneously active
    /// somewhere on `dom I_f = ∩_t dom f_t`.
    pub fn assemble(space: DiscreteMeasureSpace, family: IntegrandFamily) -> Result<Self> {
        check_dim(space.len(), family.functions.len())?;
        let dim = family.dim;
        let mut domain = Polyhedron::whole_space(dim);
        for f in &family.functions {
            domain = domain.intersect(f.domain());
            if domain.is_empty() {
                return Err(CalcError::ImproperSum);
            }
        }

        struct Partial {
            slope: Vector,
            intercept: Rational,
            cell: Vec<HalfSpace>,
        }
        let mut partials = alloc::vec![Partial {
            slope: Vector::zeros(dim),
            intercept: Rational::zero(),
            cell: Vec::new(),
        }];
        for (f, w) in family.functions.iter().zip(space.weights()) {
            let pieces = f.pieces();
            let mut next = Vec::new();
            for part in &partials {
                for (i, p) in pieces.iter().enumerate() {
                    let mut cell = part.cell.clone();
                    for (j, other) in pieces.iter().enumerate() {
                        if j != i {
                            cell.push(HalfSpace::new(
                                &other.slope - &p.slope,
                                &p.intercept - &other.intercept,
                            ));
                        }
                    }
                    if pieces.len() > 1 && !cell_is_nonempty(&domain, &cell) {
                        continue;
                    }
                    next.push(Partial {
                        slope: part.slope.add_scaled(w, &p.slope),
                        intercept: &part.intercept + &(w * &p.intercept),
                        cell,
                    });
                }
            }
            partials = next;
        }
        let pieces: Vec<AffinePiece> = partials
            .into_iter()
            .map(|p| AffinePiece::new(p.slope, p.intercept))
            .collect();
        let integral = PolyhedralConvexFunction::new(pieces, domain.clone())?;
        Ok(IntegralInstance {
            space,
            family,
            integral,
            domain,
        })
    }

    pub fn space(&self) -> &DiscreteMeasureSpace {
        &self.space
    }

    pub fn family(&self) -> &IntegrandFamily {
        &self.family
    }

    pub fn functions(&self) -> &[PolyhedralConvexFunction] {
        &self.family.functions
    }

    pub fn weights(&self) -> &[Rational] {
        self.space.weights()
    }

    pub fn dim(&self) -> usize {
        self.family.dim
    }

    pub fn num_atoms(&self) -> usize {
        self.space.len()
    }

    /// `I_f` as a polyhedral function.
    pub fn integral(&self) -> &PolyhedralConvexFunction {
        &self.integral
    }

    /// `dom I_f`.
    pub fn domain(&self) -> &Polyhedron {
        &self.domain
    }

    /// `Σ_t μ_t f_t(y)` evaluated atom by atom.
    pub fn value_by_atoms(&self, y: &Vector) -> Extended {
        let mut total = Extended::Finite(Rational::zero());
        for (f, w) in self.functions().iter().zip(self.weights()) {
            total = total + f.value(y).scale(w);
        }
        total
    }

    /// `Σ_t μ_t ∂_{ℓ(t)} f_t(x)` as an iterated Minkowski sum.
    pub fn aumann_integral(&self, x: &Vector, alloc: &ErrorAllocation) -> Result<Polyhedron> {
        check_dim(self.dim(), x.dim())?;
        check_dim(self.num_atoms(), alloc.ell.len())?;
        self.integral.finite_value(x)?;
        let mut acc = Polyhedron::origin(self.dim());
        for (t, ((f, w), ell)) in self
            .functions()
            .iter()
            .zip(self.weights())
            .zip(&alloc.ell)
            .enumerate()
        {
            let sub = f.eps_subdifferential(x, ell)?.set;
            if sub.is_empty() {
                return Err(CalcError::EmptySummand { atom: t });
            }
            acc = acc.minkowski_sum(&sub.scale(w));
        }
        Ok(acc)
    }

    /// `N^ε_{dom I_f}(x)`.
    pub fn eps_normal_dom(&self, x: &Vector, eps: &Rational) -> Result<Polyhedron> {
        eps_normal(&self.domain, x, eps)
    }

    /// Adds an atom `ω₀` of weight 1 carrying `δ_L`.
    pub fn augment_with_indicator(&self, l: &SubspaceRestriction) -> Result<IntegralInstance> {
        check_dim(self.dim(), l.set().dim())?;
        let mut atoms = self.space.atoms.clone();
        atoms.push("omega0".to_string());
        let mut weights = self.space.weights.clone();
        weights.push(Rational::one());
        let mut functions = self.family.functions.clone();
        functions.push(PolyhedralConvexFunction::indicator(l.set().clone())?);
        IntegralInstance::assemble(
            DiscreteMeasureSpace::new(atoms, weights)?,
            IntegrandFamily::new(self.dim(), functions)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use alloc::vec;

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

    fn instance_a() -> IntegralInstance {
        IntegralInstance::assemble(
            DiscreteMeasureSpace::numbered(vec![q(1, 1), q(1, 1)]).unwrap(),
            IntegrandFamily::new(1, vec![abs_shifted(0), abs_shifted(1)]).unwrap(),
        )
        .unwrap()
    }

    fn interval(lo: Rational, hi: Rational) -> Polyhedron {
        Polyhedron::from_v(1, vec![Vector::new(vec![lo]), Vector::new(vec![hi])], vec![])
    }

    #[test]
    fn assembles_instance_a() {
        let inst = instance_a();
        assert_eq!(inst.integral().value(&v(&[0])), Extended::Finite(q(1, 1)));
        for k in -16..=16 {
            let y = Vector::new(vec![q(k, 4)]);
            assert_eq!(inst.integral().value(&y), inst.value_by_atoms(&y));
        }
        // the (+1, -1) piece pair is active only on [0, 1]; (-1, +1) never is
        assert_eq!(inst.integral().pieces().len(), 3);
    }

    #[test]
    fn single_atom_and_domain_intersection() {
        let f = abs_shifted(2);
        let inst = IntegralInstance::assemble(
            DiscreteMeasureSpace::numbered(vec![q(1, 1)]).unwrap(),
            IntegrandFamily::new(1, vec![f.clone()]).unwrap(),
        )
        .unwrap();
        assert!(inst.integral().same_function(&f));

        let g1 = PolyhedralConvexFunction::indicator(interval(q(0, 1), q(1, 1))).unwrap();
        let g2 = PolyhedralConvexFunction::indicator(interval(q(1, 1), q(2, 1))).unwrap();
        let inst = IntegralInstance::assemble(
            DiscreteMeasureSpace::numbered(vec![q(1, 2), q(3, 1)]).unwrap(),
            IntegrandFamily::new(1, vec![g1, g2]).unwrap(),
        )
        .unwrap();
        assert!(inst.domain().equals(&Polyhedron::point(v(&[1]))));

        let g3 = PolyhedralConvexFunction::indicator(interval(q(2, 1), q(3, 1))).unwrap();
        let g1 = PolyhedralConvexFunction::indicator(interval(q(0, 1), q(1, 1))).unwrap();
        let err = IntegralInstance::assemble(
            DiscreteMeasureSpace::numbered(vec![q(1, 1), q(1, 1)]).unwrap(),
            IntegrandFamily::new(1, vec![g1, g3]).unwrap(),
        );
        assert_eq!(err.unwrap_err(), CalcError::ImproperSum);
    }

    #[test]
    fn aumann_integrals_of_instance_a() {
        let inst = instance_a();
        let x = v(&[0]);
        let half = ErrorAllocation::new(vec![q(0, 1), q(1, 2)], q(1, 2));
        assert!(half.is_valid_for(inst.space()));
        assert!(inst
            .aumann_integral(&x, &half)
            .unwrap()
            .equals(&interval(q(-2, 1), q(1, 2))));
        assert!(inst
            .aumann_integral(&x, &ErrorAllocation::zero(2))
            .unwrap()
            .equals(&interval(q(-2, 1), q(0, 1))));
    }

    #[test]
    fn normal_sets_of_domain() {
        let inst = instance_a();
        assert!(inst
            .eps_normal_dom(&v(&[5]), &q(3, 1))
            .unwrap()
            .equals(&Polyhedron::origin(1)));
        let boxed = IntegralInstance::assemble(
            DiscreteMeasureSpace::numbered(vec![q(1, 1)]).unwrap(),
            IntegrandFamily::new(
                1,
                vec![PolyhedralConvexFunction::indicator(interval(q(0, 1), q(1, 1))).unwrap()],
            )
            .unwrap(),
        )
        .unwrap();
        let n = boxed.eps_normal_dom(&v(&[0]), &q(1, 4)).unwrap();
        assert!(n.equals(&Polyhedron::from_h(1, vec![HalfSpace::new(v(&[1]), q(1, 4))])));
        let mid = boxed
            .eps_normal_dom(&Vector::new(vec![q(1, 2)]), &Rational::zero())
            .unwrap();
        assert!(mid.equals(&Polyhedron::origin(1)));
    }

    #[test]
    fn indicator_augmentation() {
        let inst = instance_a();
        let full = inst.augment_with_indicator(&SubspaceRestriction::full(1)).unwrap();
        assert!(full.integral().same_function(inst.integral()));
        assert_eq!(full.num_atoms(), 3);
        let pinned = inst
            .augment_with_indicator(&SubspaceRestriction::new(1, vec![]).unwrap())
            .unwrap();
        assert!(pinned.domain().equals(&Polyhedron::origin(1)));
    }
}
