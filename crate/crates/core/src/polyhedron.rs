//! Convex polyhedra in `Q^d` with both representations kept in sync.
//!
//! Every constructor runs the double-description method in both directions,
//! so the stored H-representation is irredundant (facets plus equality
//! pairs) and the V-representation is minimal (one representative per
//! minimal face, extreme rays, and lineality directions as `±` ray pairs).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dd::{cone_generators, ConeGenerators};
use crate::error::{check_dim, CalcError, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::rational::{primitive_integer, Extended, Rational, Vector};

/// The closed half-space `{y : ⟨normal, y⟩ <= offset}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfSpace {
    pub normal: Vector,
    pub offset: Rational,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: Rational) -> Self {
        HalfSpace { normal, offset }
    }

    pub fn contains(&self, y: &Vector) -> bool {
        self.normal.dot(y) <= self.offset
    }

    /// Slack `offset - ⟨normal, y⟩`; nonnegative on the half-space.
    pub fn slack(&self, y: &Vector) -> Rational {
        &self.offset - &self.normal.dot(y)
    }

    fn canonical(&self) -> HalfSpace {
        let mut coords = self.normal.coords().to_vec();
        coords.push(self.offset.clone());
        let mut scaled = primitive_integer(&coords);
        let offset = scaled.pop().expect("offset present");
        HalfSpace {
            normal: Vector::new(scaled),
            offset,
        }
    }
}

impl fmt::Display for HalfSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·y <= {}", self.normal, self.offset)
    }
}

/// `conv(vertices) + cone(rays)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Generators {
    pub vertices: Vec<Vector>,
    pub rays: Vec<Vector>,
}

#[derive(Clone, PartialEq, Eq)]
pub struct Polyhedron {
    dim: usize,
    h_rep: Vec<HalfSpace>,
    v_rep: Generators,
    empty: bool,
}

impl fmt::Debug for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return write!(f, "Polyhedron(dim={}, empty)", self.dim);
        }
        f.debug_struct("Polyhedron")
            .field("dim", &self.dim)
            .field("vertices", &self.v_rep.vertices)
            .field("rays", &self.v_rep.rays)
            .field("h_rep", &self.h_rep)
            .finish()
    }
}

fn homogenize_halfspace(h: &HalfSpace) -> Vec<Rational> {
    let mut row = h.normal.coords().to_vec();
    row.push(-&h.offset);
    row
}

/// V-representation of `{y : h_rep}` from the homogenized cone.
fn generators_of(dim: usize, h_rep: &[HalfSpace]) -> Generators {
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(h_rep.len() + 1);
    let mut t_nonneg = vec![Rational::zero(); dim + 1];
    t_nonneg[dim] = -Rational::one();
    rows.push(t_nonneg);
    rows.extend(h_rep.iter().map(homogenize_halfspace));
    let ConeGenerators { lineality, rays } = cone_generators(dim + 1, &rows);
    let mut gens = Generators::default();
    for r in rays {
        let t = r[dim].clone();
        if t.is_positive() {
            gens.vertices
                .push(r[..dim].iter().map(|x| x / &t).collect());
        } else {
            gens.rays.push(Vector::new(r[..dim].to_vec()));
        }
    }
    for l in lineality {
        debug_assert!(l[dim].is_zero());
        let v = Vector::new(l[..dim].to_vec());
        gens.rays.push(-&v);
        gens.rays.push(v);
    }
    gens.vertices.sort();
    gens.rays.sort();
    gens.rays.dedup();
    gens
}

/// Extreme rays of the tangent cone `{u : ⟨n, u⟩ <= 0}` over the tight
/// normals at a vertex; these are its edge directions.
fn edge_directions(dim: usize, tight: &[&HalfSpace]) -> Vec<Vector> {
    let rows: Vec<Vec<Rational>> = tight.iter().map(|h| h.normal.coords().to_vec()).collect();
    let ConeGenerators { lineality, rays } = cone_generators(dim, &rows);
    debug_assert!(lineality.is_empty(), "tangent cone at a vertex is pointed");
    rays.into_iter().map(Vector::new).collect()
}

/// Whether some `c` is negative on every direction in `groups`. By Farkas
/// this fails exactly when `0` is a convex combination of the directions.
/// With the edge directions at vertices `a_s` of pointed `P_s`, it says that
/// `c` is uniquely maximized at every `a_s`, so `Σ a_s` is a vertex of `Σ P_s`.
fn strictly_separable(dim: usize, groups: &[&[Vector]]) -> bool {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut cols: Vec<(usize, &Vector)> = Vec::new();
    for g in groups.iter().flat_map(|g| g.iter()) {
        cols.push((lp.nonneg_var(), g));
    }
    if cols.is_empty() {
        return true;
    }
    lp.add_row(cols.iter().map(|(v, _)| (*v, Rational::one())), Relation::Eq, Rational::one());
    for c in 0..dim {
        lp.add_row(cols.iter().map(|(v, g)| (*v, g[c].clone())), Relation::Eq, Rational::zero());
    }
    matches!(lp.solve(), LpOutcome::Infeasible)
}

/// Rank of a list of rows, by exact elimination.
fn rank<'a>(dim: usize, rows: impl Iterator<Item = &'a Vector>) -> usize {
    let mut basis: Vec<(usize, Vec<Rational>)> = Vec::new();
    for row in rows {
        let mut r = row.coords().to_vec();
        for (p, b) in &basis {
            if !r[*p].is_zero() {
                let f = &r[*p] / &b[*p];
                for (x, y) in r.iter_mut().zip(b) {
                    *x = x.sub_mul(&f, y);
                }
            }
        }
        if let Some(p) = r.iter().position(|x| !x.is_zero()) {
            basis.push((p, r));
            if basis.len() == dim {
                break;
            }
        }
    }
    basis.len()
}

/// The minimal V-representation read off the facets, for pointed
/// polyhedra: a generator is a vertex when its tight facet normals have
/// full rank, and a ray is extreme when they have rank `dim − 1`. `None`
/// when the facet normals do not span, so lineality needs the full
/// conversion.
fn extreme_generators(dim: usize, gens: &Generators, h_rep: &[HalfSpace]) -> Option<Generators> {
    if rank(dim, h_rep.iter().map(|h| &h.normal)) < dim {
        return None;
    }
    let tight_rank = |pred: &dyn Fn(&HalfSpace) -> bool| {
        rank(dim, h_rep.iter().filter(|h| pred(h)).map(|h| &h.normal))
    };
    let mut out = Generators {
        vertices: gens
            .vertices
            .iter()
            .filter(|v| tight_rank(&|h| h.normal.dot(v) == h.offset) == dim)
            .cloned()
            .collect(),
        rays: gens
            .rays
            .iter()
            .filter(|r| tight_rank(&|h| h.normal.dot(r).is_zero()) + 1 == dim)
            .cloned()
            .collect(),
    };
    out.vertices.sort();
    out.rays.sort();
    Some(out)
}

/// Rank of the directions spanned by `vertices` (as differences) and `rays`.
fn affine_rank<'a>(dim: usize, vertices: &[&'a Vector], rays: impl Iterator<Item = &'a Vector>) -> usize {
    let Some((first, rest)) = vertices.split_first() else {
        return 0;
    };
    let diffs: Vec<Vector> = rest.iter().map(|v| *v - *first).collect();
    let rays: Vec<&Vector> = rays.collect();
    rank(dim, diffs.iter().chain(rays.iter().copied()))
}

/// The facets among canonical `halfspaces` of a full-dimensional
/// polyhedron with generators `gens`: those whose tight generators span a
/// hyperplane. `None` when the polyhedron is not full-dimensional, where
/// equality rows need the full conversion.
fn facets_from_incidence(dim: usize, gens: &Generators, halfspaces: &[HalfSpace]) -> Option<Vec<HalfSpace>> {
    let all: Vec<&Vector> = gens.vertices.iter().collect();
    if affine_rank(dim, &all, gens.rays.iter()) < dim {
        return None;
    }
    let facets = halfspaces
        .iter()
        .filter(|h| {
            let tight: Vec<&Vector> = gens.vertices.iter().filter(|v| h.normal.dot(v) == h.offset).collect();
            !tight.is_empty()
                && affine_rank(dim, &tight, gens.rays.iter().filter(|r| h.normal.dot(r).is_zero())) + 1 == dim
        })
        .cloned()
        .collect();
    Some(facets)
}

/// Irredundant H-representation of `conv(vertices) + cone(rays)`.
fn facets_of(dim: usize, gens: &Generators) -> Vec<HalfSpace> {
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for v in &gens.vertices {
        let mut row = v.coords().to_vec();
        row.push(Rational::one());
        rows.push(row);
    }
    for r in &gens.rays {
        let mut row = r.coords().to_vec();
        row.push(Rational::zero());
        rows.push(row);
    }
    let ConeGenerators { lineality, rays } = cone_generators(dim + 1, &rows);
    let mut out = Vec::new();
    let to_half = |h: &[Rational]| HalfSpace {
        normal: Vector::new(h[..dim].to_vec()),
        offset: -&h[dim],
    };
    for h in &rays {
        let hs = to_half(h);
        if hs.normal.is_zero() {
            continue;
        }
        out.push(hs.canonical());
    }
    for l in &lineality {
        let hs = to_half(l);
        if hs.normal.is_zero() {
            continue;
        }
        let neg = HalfSpace {
            normal: -&hs.normal,
            offset: -&hs.offset,
        };
        out.push(hs.canonical());
        out.push(neg.canonical());
    }
    out.sort();
    out.dedup();
    out
}

impl Polyhedron {
    pub fn empty(dim: usize) -> Self {
        Polyhedron {
            dim,
            h_rep: vec![HalfSpace::new(Vector::zeros(dim), -Rational::one())],
            v_rep: Generators::default(),
            empty: true,
        }
    }

    pub fn whole_space(dim: usize) -> Self {
        Polyhedron::from_h(dim, Vec::new())
    }

    pub fn point(v: Vector) -> Self {
        let dim = v.dim();
        Polyhedron::from_v(dim, vec![v], Vec::new())
    }

    pub fn origin(dim: usize) -> Self {
        Polyhedron::point(Vector::zeros(dim))
    }

    /// `cone(rays)` with apex at the origin.
    pub fn cone(dim: usize, rays: Vec<Vector>) -> Self {
        Polyhedron::from_v(dim, vec![Vector::zeros(dim)], rays)
    }

    /// The linear span of `basis`.
    pub fn subspace(dim: usize, basis: &[Vector]) -> Self {
        let rays = basis.iter().flat_map(|b| [b.clone(), -b]).collect();
        Polyhedron::cone(dim, rays)
    }

    /// Builds `{y : ⟨a, y⟩ <= b for every (a, b)}`.
    pub fn from_h(dim: usize, halfspaces: Vec<HalfSpace>) -> Self {
        let mut cleaned = Vec::with_capacity(halfspaces.len());
        for h in halfspaces {
            assert_eq!(h.normal.dim(), dim, "half-space dimension mismatch");
            if h.normal.is_zero() {
                if h.offset.is_negative() {
                    return Polyhedron::empty(dim);
                }
                continue;
            }
            cleaned.push(h.canonical());
        }
        cleaned.sort();
        cleaned.dedup();
        let v_rep = generators_of(dim, &cleaned);
        if v_rep.vertices.is_empty() {
            return Polyhedron::empty(dim);
        }
        let h_rep = facets_from_incidence(dim, &v_rep, &cleaned).unwrap_or_else(|| facets_of(dim, &v_rep));
        Polyhedron {
            dim,
            h_rep,
            v_rep,
            empty: false,
        }
    }

    /// Builds `conv(vertices) + cone(rays)`; empty when `vertices` is empty.
    pub fn from_v(dim: usize, vertices: Vec<Vector>, rays: Vec<Vector>) -> Self {
        for g in vertices.iter().chain(&rays) {
            assert_eq!(g.dim(), dim, "generator dimension mismatch");
        }
        if vertices.is_empty() {
            return Polyhedron::empty(dim);
        }
        let mut gens = Generators {
            vertices,
            rays: rays
                .into_iter()
                .filter(|r| !r.is_zero())
                .map(|r| Vector::new(primitive_integer(r.coords())))
                .collect(),
        };
        gens.vertices.sort();
        gens.vertices.dedup();
        gens.rays.sort();
        gens.rays.dedup();
        let h_rep = facets_of(dim, &gens);
        let v_rep = extreme_generators(dim, &gens, &h_rep).unwrap_or_else(|| generators_of(dim, &h_rep));
        Polyhedron {
            dim,
            h_rep,
            v_rep,
            empty: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn is_bounded(&self) -> bool {
        self.v_rep.rays.is_empty()
    }

    pub fn h_rep(&self) -> &[HalfSpace] {
        &self.h_rep
    }

    pub fn v_rep(&self) -> &Generators {
        &self.v_rep
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.v_rep.vertices
    }

    pub fn rays(&self) -> &[Vector] {
        &self.v_rep.rays
    }

    /// Both representations are maintained eagerly, so this is a copy.
    pub fn to_v_rep(&self) -> Polyhedron {
        self.clone()
    }

    /// Rebuilds the set from its H-representation alone.
    pub fn reconstruct_from_h(&self) -> Polyhedron {
        if self.empty {
            return Polyhedron::empty(self.dim);
        }
        Polyhedron::from_h(self.dim, self.h_rep.clone())
    }

    /// Rebuilds the set from its V-representation alone.
    pub fn reconstruct_from_v(&self) -> Polyhedron {
        Polyhedron::from_v(self.dim, self.v_rep.vertices.clone(), self.v_rep.rays.clone())
    }

    /// A singleton `{a}`: one vertex and no rays.
    pub fn as_singleton(&self) -> Option<&Vector> {
        match (self.v_rep.vertices.as_slice(), self.v_rep.rays.is_empty()) {
            ([v], true) => Some(v),
            _ => None,
        }
    }

    pub fn contains(&self, y: &Vector) -> bool {
        assert_eq!(y.dim(), self.dim, "dimension mismatch");
        !self.empty && self.h_rep.iter().all(|h| h.contains(y))
    }

    /// Whether `u` lies in the recession cone.
    pub fn recedes_along(&self, u: &Vector) -> bool {
        assert_eq!(u.dim(), self.dim, "dimension mismatch");
        self.h_rep.iter().all(|h| !h.normal.dot(u).is_positive())
    }

    pub fn is_subset_of(&self, other: &Polyhedron) -> bool {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        if self.empty {
            return true;
        }
        if other.empty {
            return false;
        }
        self.v_rep.vertices.iter().all(|v| other.contains(v))
            && self.v_rep.rays.iter().all(|r| other.recedes_along(r))
    }

    /// Exact set equality by mutual containment of generators.
    pub fn equals(&self, other: &Polyhedron) -> bool {
        if self.dim != other.dim {
            return false;
        }
        if self.empty || other.empty {
            return self.empty == other.empty;
        }
        if self.h_rep == other.h_rep && self.v_rep == other.v_rep {
            return true;
        }
        self.is_subset_of(other) && other.is_subset_of(self)
    }

    /// `sup_{y in P} ⟨u, y⟩`; `NegInf` for the empty set.
    pub fn support(&self, u: &Vector) -> Extended {
        assert_eq!(u.dim(), self.dim, "dimension mismatch");
        if self.empty {
            return Extended::NegInf;
        }
        if self.v_rep.rays.iter().any(|r| r.dot(u).is_positive()) {
            return Extended::PosInf;
        }
        let best = self
            .v_rep
            .vertices
            .iter()
            .map(|v| v.dot(u))
            .max()
            .expect("nonempty polyhedron has a vertex");
        Extended::Finite(best)
    }

    pub fn minkowski_sum(&self, other: &Polyhedron) -> Polyhedron {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        if self.empty || other.empty {
            return Polyhedron::empty(self.dim);
        }
        if let Some(v) = other.as_singleton() {
            return self.translate(v);
        }
        if let Some(v) = self.as_singleton() {
            return other.translate(v);
        }
        let mut vertices = Vec::with_capacity(self.vertices().len() * other.vertices().len());
        for a in self.vertices() {
            for b in other.vertices() {
                vertices.push(a + b);
            }
        }
        let mut rays = self.rays().to_vec();
        rays.extend_from_slice(other.rays());
        Polyhedron::from_v(self.dim, vertices, rays)
    }

    fn is_pointed(&self) -> bool {
        !self.empty && rank(self.dim, self.h_rep.iter().map(|h| &h.normal)) == self.dim
    }

    /// `Σ parts`. When every part is pointed, only vertex tuples whose
    /// normal cones meet are kept and a single conversion is done at the end.
    pub fn minkowski_sum_all(dim: usize, parts: &[Polyhedron]) -> Polyhedron {
        for p in parts {
            assert_eq!(p.dim, dim, "dimension mismatch");
        }
        if parts.iter().any(|p| p.empty) {
            return Polyhedron::empty(dim);
        }
        let fold = || parts.iter().fold(Polyhedron::origin(dim), |acc, p| acc.minkowski_sum(p));
        if parts.len() <= 1 || !parts.iter().all(|p| p.is_pointed()) {
            return fold();
        }
        let edges: Vec<Vec<Vec<Vector>>> = parts
            .iter()
            .map(|p| {
                p.vertices()
                    .iter()
                    .map(|v| {
                        let tight: Vec<&HalfSpace> = p.h_rep.iter().filter(|h| h.normal.dot(v) == h.offset).collect();
                        edge_directions(dim, &tight)
                    })
                    .collect()
            })
            .collect();
        let mut states: Vec<(Vector, Vec<usize>)> = parts[0]
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), vec![i]))
            .collect();
        for (t, part) in parts.iter().enumerate().skip(1) {
            let mut next = Vec::new();
            for (sum, picks) in &states {
                for (j, v) in part.vertices().iter().enumerate() {
                    let mut groups: Vec<&[Vector]> = picks.iter().enumerate().map(|(s, &i)| edges[s][i].as_slice()).collect();
                    groups.push(&edges[t][j]);
                    if strictly_separable(dim, &groups) {
                        let mut picks = picks.clone();
                        picks.push(j);
                        next.push((sum + v, picks));
                    }
                }
            }
            states = next;
        }
        if states.is_empty() {
            // the sum contains a line
            return fold();
        }
        let vertices = states.into_iter().map(|(v, _)| v).collect();
        let rays = parts.iter().flat_map(|p| p.rays().iter().cloned()).collect();
        Polyhedron::from_v(dim, vertices, rays)
    }

    /// `P + {v}`, computed without a conversion.
    pub fn translate(&self, v: &Vector) -> Polyhedron {
        assert_eq!(v.dim(), self.dim, "dimension mismatch");
        if self.empty {
            return self.clone();
        }
        let h_rep = self
            .h_rep
            .iter()
            .map(|h| HalfSpace::new(h.normal.clone(), &h.offset + &h.normal.dot(v)).canonical())
            .collect::<Vec<_>>();
        let mut vertices: Vec<Vector> = self.v_rep.vertices.iter().map(|w| w + v).collect();
        vertices.sort();
        let mut h_sorted = h_rep;
        h_sorted.sort();
        Polyhedron {
            dim: self.dim,
            h_rep: h_sorted,
            v_rep: Generators {
                vertices,
                rays: self.v_rep.rays.clone(),
            },
            empty: false,
        }
    }

    /// `c·P` for `c >= 0`, with `0·P = {0}` for nonempty `P`.
    pub fn scale(&self, c: &Rational) -> Polyhedron {
        assert!(!c.is_negative(), "scale factor must be nonnegative");
        if self.empty {
            return self.clone();
        }
        if c.is_zero() {
            return Polyhedron::origin(self.dim);
        }
        let mut h_rep: Vec<HalfSpace> = self
            .h_rep
            .iter()
            .map(|h| HalfSpace::new(h.normal.clone(), &h.offset * c).canonical())
            .collect();
        h_rep.sort();
        let mut vertices: Vec<Vector> = self.v_rep.vertices.iter().map(|v| v.scale(c)).collect();
        vertices.sort();
        Polyhedron {
            dim: self.dim,
            h_rep,
            v_rep: Generators {
                vertices,
                rays: self.v_rep.rays.clone(),
            },
            empty: false,
        }
    }

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        if self.empty || other.empty {
            return Polyhedron::empty(self.dim);
        }
        let mut hs = self.h_rep.clone();
        hs.extend_from_slice(&other.h_rep);
        Polyhedron::from_h(self.dim, hs)
    }

    /// Adds constraints to the H-representation.
    pub fn with_constraints(&self, extra: &[HalfSpace]) -> Polyhedron {
        if self.empty {
            return self.clone();
        }
        let mut hs = self.h_rep.clone();
        hs.extend_from_slice(extra);
        Polyhedron::from_h(self.dim, hs)
    }

    /// The cone of rays of `P`, built from the V-representation.
    pub fn recession_cone(&self) -> Result<Polyhedron> {
        if self.empty {
            return Err(CalcError::EmptyPolyhedron);
        }
        Ok(Polyhedron::cone(self.dim, self.v_rep.rays.clone()))
    }

    /// `{u : ⟨a, u⟩ <= 0 for every constraint (a, b)}`, from the H-representation.
    pub fn recession_cone_from_h(&self) -> Result<Polyhedron> {
        if self.empty {
            return Err(CalcError::EmptyPolyhedron);
        }
        let hs = self
            .h_rep
            .iter()
            .map(|h| HalfSpace::new(h.normal.clone(), Rational::zero()))
            .collect();
        Ok(Polyhedron::from_h(self.dim, hs))
    }

    /// `{u : ⟨u, y⟩ <= 1 for all y in P}`.
    pub fn polar(&self) -> Result<Polyhedron> {
        if self.empty {
            return Err(CalcError::EmptyPolyhedron);
        }
        let mut hs: Vec<HalfSpace> = self
            .v_rep
            .vertices
            .iter()
            .map(|v| HalfSpace::new(v.clone(), Rational::one()))
            .collect();
        hs.extend(
            self.v_rep
                .rays
                .iter()
                .map(|r| HalfSpace::new(r.clone(), Rational::zero())),
        );
        Ok(Polyhedron::from_h(self.dim, hs))
    }

    /// Preimage under `y ↦ (y, ⟨slope, y⟩ + shift)` of a polyhedron in one
    /// more dimension. Used to slice epigraph-type sets at a moving height.
    pub fn slice_at_height(&self, slope: &Vector, shift: &Rational) -> Result<Polyhedron> {
        check_dim(self.dim, slope.dim() + 1)?;
        let d = slope.dim();
        if self.empty {
            return Ok(Polyhedron::empty(d));
        }
        let hs = self
            .h_rep
            .iter()
            .map(|h| {
                let (a, beta) = h.normal.split_last();
                HalfSpace::new(a.add_scaled(&beta, slope), &h.offset - &(&beta * shift))
            })
            .collect();
        Ok(Polyhedron::from_h(d, hs))
    }

    /// Whether every generator of `self` is tight on the constraint.
    pub(crate) fn is_implicit_equality(&self, h: &HalfSpace) -> bool {
        self.v_rep.vertices.iter().all(|v| h.slack(v).is_zero())
            && self.v_rep.rays.iter().all(|r| h.normal.dot(r).is_zero())
    }

    /// Relative-interior test against the H-representation.
    pub fn in_relative_interior(&self, y: &Vector) -> bool {
        self.contains(y)
            && self
                .h_rep
                .iter()
                .all(|h| h.slack(y).is_positive() || self.is_implicit_equality(h))
    }

    pub fn is_full_dimensional(&self) -> bool {
        !self.empty && self.h_rep.iter().all(|h| !self.is_implicit_equality(h))
    }
}
