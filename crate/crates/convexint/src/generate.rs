//! Seeded random instances for the regression corpus.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use convexint_core::{
    AffinePiece, DiscreteMeasureSpace, HalfSpace, IntegralInstance, IntegrandFamily,
    PolyhedralConvexFunction, Polyhedron, Rational, Vector,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::format::{from_vector, InstanceFile, QuerySpec, Q, MAX_ATOMS, MAX_DIMENSION, MAX_PIECES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    BoxDomains,
    IndicatorHeavy,
    AffineOnly,
    Kinked,
    RestrictedSubspace,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::BoxDomains,
        Profile::IndicatorHeavy,
        Profile::AffineOnly,
        Profile::Kinked,
        Profile::RestrictedSubspace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::BoxDomains => "box-domains",
            Profile::IndicatorHeavy => "indicator-heavy",
            Profile::AffineOnly => "affine-only",
            Profile::Kinked => "kinked",
            Profile::RestrictedSubspace => "restricted-subspace",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match Profile::ALL.iter().find(|p| p.name() == s) {
            Some(p) => Ok(*p),
            None => bail!(
                "unknown profile {s:?}; expected one of {}",
                Profile::ALL.map(Profile::name).join(", ")
            ),
        }
    }
}

/// Size caps for generated instances; never above the file-format limits.
#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_dim: usize,
    pub max_atoms: usize,
    pub max_pieces: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_dim: MAX_DIMENSION,
            max_atoms: MAX_ATOMS,
            max_pieces: MAX_PIECES,
        }
    }
}

impl GenConfig {
    fn clamped(self) -> Self {
        GenConfig {
            max_dim: self.max_dim.clamp(1, MAX_DIMENSION),
            max_atoms: self.max_atoms.clamp(1, MAX_ATOMS),
            max_pieces: self.max_pieces.clamp(1, MAX_PIECES),
        }
    }
}

/// A rational in `[lo, hi]` with denominator at most 8.
pub fn coefficient<R: Rng>(rng: &mut R, lo: i64, hi: i64) -> Rational {
    let den = rng.gen_range(1..=8);
    Rational::new(rng.gen_range(lo * den..=hi * den), den)
}

fn int_vector<R: Rng>(rng: &mut R, d: usize, bound: i64) -> Vector {
    Vector::new((0..d).map(|_| Rational::from_int(rng.gen_range(-bound..=bound))).collect())
}

fn rational_vector<R: Rng>(rng: &mut R, d: usize) -> Vector {
    Vector::new((0..d).map(|_| coefficient(rng, -4, 4)).collect())
}

fn weight<R: Rng>(rng: &mut R) -> Rational {
    [
        Rational::new(1, 4),
        Rational::new(1, 2),
        Rational::one(),
        Rational::new(3, 2),
        Rational::from_int(2),
        Rational::from_int(3),
    ]
    .choose(rng)
    .expect("nonempty")
    .clone()
}

/// A box `∏ [−lo_i, hi_i]` around the origin, sides possibly open.
fn box_domain<R: Rng>(rng: &mut R, d: usize, open_prob: f64) -> Polyhedron {
    let mut hs = Vec::new();
    for i in 0..d {
        let e = Vector::unit(d, i);
        if !rng.gen_bool(open_prob) {
            hs.push(HalfSpace::new(e.clone(), coefficient(rng, 1, 3)));
        }
        if !rng.gen_bool(open_prob) {
            hs.push(HalfSpace::new(-&e, coefficient(rng, 1, 3)));
        }
    }
    Polyhedron::from_h(d, hs)
}

/// A pointed cone or wedge with apex at the origin.
fn cone_domain<R: Rng>(rng: &mut R, d: usize) -> Polyhedron {
    let k = rng.gen_range(1..=d);
    let hs = (0..k)
        .map(|_| {
            let mut a = int_vector(rng, d, 2);
            if a.is_zero() {
                a = Vector::unit(d, rng.gen_range(0..d));
            }
            HalfSpace::new(a, Rational::zero())
        })
        .collect();
    Polyhedron::from_h(d, hs)
}

/// A polytope spanned by the origin and a few random points.
fn polytope_domain<R: Rng>(rng: &mut R, d: usize) -> Polyhedron {
    let mut vs = vec![Vector::zeros(d)];
    for _ in 0..=d {
        vs.push(Vector::new((0..d).map(|_| coefficient(rng, -2, 2)).collect()));
    }
    Polyhedron::from_v(d, vs, vec![])
}

fn pieces<R: Rng>(rng: &mut R, d: usize, count: usize, through_origin: bool) -> Vec<AffinePiece> {
    (0..count)
        .map(|_| {
            let b = if through_origin {
                Rational::zero()
            } else {
                coefficient(rng, -4, 4)
            };
            AffinePiece::new(rational_vector(rng, d), b)
        })
        .collect()
}

fn atom<R: Rng>(rng: &mut R, profile: Profile, d: usize, cfg: &GenConfig) -> PolyhedralConvexFunction {
    let count = rng.gen_range(1..=cfg.max_pieces);
    let (ps, dom) = match profile {
        Profile::AffineOnly => (pieces(rng, d, 1, false), Polyhedron::whole_space(d)),
        Profile::BoxDomains | Profile::RestrictedSubspace => {
            let dom = if rng.gen_bool(0.3) {
                Polyhedron::whole_space(d)
            } else {
                box_domain(rng, d, 0.25)
            };
            (pieces(rng, d, count, false), dom)
        }
        Profile::IndicatorHeavy => {
            let dom = match rng.gen_range(0..3) {
                0 => box_domain(rng, d, 0.4),
                1 => cone_domain(rng, d),
                _ => polytope_domain(rng, d),
            };
            if rng.gen_bool(0.6) {
                (vec![AffinePiece::new(Vector::zeros(d), Rational::zero())], dom)
            } else {
                (pieces(rng, d, count.min(2), false), dom)
            }
        }
        Profile::Kinked => {
            let count = rng.gen_range(cfg.max_pieces.min(2)..=cfg.max_pieces);
            let dom = if rng.gen_bool(0.7) {
                Polyhedron::whole_space(d)
            } else {
                box_domain(rng, d, 0.5)
            };
            let through_origin = rng.gen_bool(0.5);
            (pieces(rng, d, count, through_origin), dom)
        }
    };
    PolyhedralConvexFunction::new(ps, dom).expect("generated domains contain the origin")
}

/// A random instance of the profile; every domain contains the origin.
pub fn random_instance<R: Rng>(rng: &mut R, profile: Profile, cfg: GenConfig) -> IntegralInstance {
    let cfg = cfg.clamped();
    let d = rng.gen_range(1..=cfg.max_dim);
    let n = rng.gen_range(1..=cfg.max_atoms);
    let weights = (0..n).map(|_| weight(rng)).collect();
    let fs = (0..n).map(|_| atom(rng, profile, d, &cfg)).collect();
    IntegralInstance::assemble(
        DiscreteMeasureSpace::numbered(weights).expect("positive weights"),
        IntegrandFamily::new(d, fs).expect("common dimension"),
    )
    .expect("the origin lies in every domain")
}

/// Base points for queries: the origin and up to two vertices of the domain.
pub fn base_points<R: Rng>(rng: &mut R, inst: &IntegralInstance) -> Vec<Vector> {
    let d = inst.dim();
    let mut pts = vec![Vector::zeros(d)];
    let mut vs: Vec<Vector> = inst.domain().vertices().iter().filter(|v| !v.is_zero()).cloned().collect();
    vs.shuffle(rng);
    pts.extend(vs.into_iter().take(2));
    pts
}

/// A point in the relative interior of the domain: the average of all
/// vertices plus the sum of all rays.
pub fn interior_point(dom: &Polyhedron) -> Option<Vector> {
    let vs = dom.vertices();
    if vs.is_empty() {
        return None;
    }
    let d = dom.dim();
    let inv = Rational::new(1, vs.len() as i64);
    let mut p = Vector::zeros(d);
    for v in vs {
        p = p.add_scaled(&inv, v);
    }
    for r in dom.rays() {
        p = &p + r;
    }
    dom.in_relative_interior(&p).then_some(p)
}

/// An exact subgradient of `I_f` at `x`, preferring a vertex of `∂I_f(x)`.
pub fn exact_subgradient(inst: &IntegralInstance, x: &Vector) -> Option<Vector> {
    let set = inst.integral().eps_subdifferential(x, &Rational::zero()).ok()?.set;
    if let Some(v) = set.vertices().first() {
        return Some(v.clone());
    }
    inst.integral()
        .nearest_eps_subgradient(x, &Rational::zero(), &Vector::zeros(inst.dim()))
        .ok()
        .flatten()
}

fn q_list(values: &[Rational]) -> Vec<Q> {
    values.iter().map(Q::from).collect()
}

/// A random basis of a proper subspace (or the whole space when `d = 1`).
pub fn subspace_basis<R: Rng>(rng: &mut R, d: usize) -> Vec<Vector> {
    let k = if d == 1 { 1 } else { rng.gen_range(1..d) };
    (0..k)
        .map(|_| {
            let mut v = int_vector(rng, d, 2);
            if v.is_zero() {
                v = Vector::unit(d, rng.gen_range(0..d));
            }
            v
        })
        .collect()
}

/// The query set attached to a generated instance.
pub fn queries<R: Rng>(rng: &mut R, inst: &IntegralInstance, profile: Profile) -> Vec<QuerySpec> {
    let d = inst.dim();
    let points = base_points(rng, inst);
    let sum_eps = q_list(&[Rational::zero(), Rational::new(1, 4), Rational::one(), Rational::from_int(3)]);
    let normal_eps = q_list(&[Rational::zero(), Rational::new(1, 4), Rational::one()]);
    let x = points.choose(rng).expect("origin").clone();
    let mut out = vec![
        QuerySpec::SumRule {
            x: from_vector(&x),
            eps: sum_eps,
            samples: 50,
        },
        QuerySpec::Conjugate {
            points: vec![],
            random: 50,
        },
        QuerySpec::Epigraph {},
    ];
    for p in &points {
        out.push(QuerySpec::NormalSets {
            x: from_vector(p),
            eps: normal_eps.clone(),
        });
    }
    if profile == Profile::RestrictedSubspace {
        out.push(QuerySpec::Restricted {
            x: from_vector(&Vector::zeros(d)),
            eps: normal_eps,
            basis: subspace_basis(rng, d).iter().map(from_vector).collect(),
            samples: 50,
        });
    }
    if let Some(xstar) = exact_subgradient(inst, &x) {
        out.push(QuerySpec::BrRun {
            x: from_vector(&x),
            xstar: from_vector(&xstar),
            eps_schedule: vec![],
            lambda_schedule: vec![],
        });
    }
    if inst.domain().is_full_dimensional() {
        let origin = Vector::zeros(d);
        let x = if inst.domain().in_relative_interior(&origin) {
            Some(origin)
        } else {
            interior_point(inst.domain())
        };
        if let Some(x) = x {
            out.push(QuerySpec::Gateaux { x: from_vector(&x) });
        }
    }
    out
}

/// The instance file for `(seed, profile)`; byte-identical across runs.
pub fn generate(seed: u64, profile: Profile) -> InstanceFile {
    generate_with(seed, profile, GenConfig::default())
}

pub fn generate_with(seed: u64, profile: Profile, cfg: GenConfig) -> InstanceFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = random_instance(&mut rng, profile, cfg);
    let qs = queries(&mut rng, &inst, profile);
    InstanceFile::from_instance(&inst, qs)
}
