//! JSON instance files. Rationals are strings matching
//! `-?[0-9]+(/[1-9][0-9]*)?`.

use std::fmt;

use anyhow::{bail, ensure, Context, Result};
use convexint_core::{
    AffinePiece, DecompositionCertificate, DiscreteMeasureSpace, ErrorAllocation, HalfSpace, IntegralInstance, IntegrandFamily,
    PolyhedralConvexFunction, Polyhedron, Rational, Vector,
};
use serde::{Deserialize, Serialize};

/// Default caps on instance size, lifted by `--override-limits`.
pub const MAX_DIMENSION: usize = 4;
pub const MAX_ATOMS: usize = 6;
pub const MAX_PIECES: usize = 5;

/// A rational carried as its canonical string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Q(pub Rational);

impl TryFrom<String> for Q {
    type Error = convexint_core::error::ParseRationalError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse().map(Q)
    }
}

impl From<Q> for String {
    fn from(q: Q) -> String {
        q.0.to_string()
    }
}

impl From<&Rational> for Q {
    fn from(r: &Rational) -> Self {
        Q(r.clone())
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub type QVec = Vec<Q>;

pub fn to_vector(v: &[Q]) -> Vector {
    v.iter().map(|q| q.0.clone()).collect()
}

pub fn from_vector(v: &Vector) -> QVec {
    v.iter().map(Q::from).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolyhedronSpec {
    H {
        #[serde(rename = "A")]
        a: Vec<QVec>,
        b: QVec,
    },
    V {
        vertices: Vec<QVec>,
        #[serde(default)]
        rays: Vec<QVec>,
    },
}

impl PolyhedronSpec {
    pub fn to_polyhedron(&self, dim: usize) -> Result<Polyhedron> {
        let check = |rows: &[QVec], what: &str| -> Result<()> {
            for r in rows {
                ensure!(r.len() == dim, "{what} has length {}, expected {dim}", r.len());
            }
            Ok(())
        };
        Ok(match self {
            PolyhedronSpec::H { a, b } => {
                check(a, "row of A")?;
                ensure!(a.len() == b.len(), "A has {} rows but b has {}", a.len(), b.len());
                let hs = a
                    .iter()
                    .zip(b)
                    .map(|(row, rhs)| HalfSpace::new(to_vector(row), rhs.0.clone()))
                    .collect();
                Polyhedron::from_h(dim, hs)
            }
            PolyhedronSpec::V { vertices, rays } => {
                check(vertices, "vertex")?;
                check(rays, "ray")?;
                ensure!(!vertices.is_empty(), "a V-representation needs a vertex");
                Polyhedron::from_v(
                    dim,
                    vertices.iter().map(|v| to_vector(v)).collect(),
                    rays.iter().map(|r| to_vector(r)).collect(),
                )
            }
        })
    }

    pub fn from_polyhedron(p: &Polyhedron) -> Self {
        PolyhedronSpec::H {
            a: p.h_rep().iter().map(|h| from_vector(&h.normal)).collect(),
            b: p.h_rep().iter().map(|h| Q::from(&h.offset)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub a: QVec,
    pub b: Q,
}

/// `max_i ⟨a_i, y⟩ + b_i` on `domain` (the whole space when absent).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub pieces: Vec<PieceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<PolyhedronSpec>,
}

impl FunctionSpec {
    pub fn to_function(&self, dim: usize) -> Result<PolyhedralConvexFunction> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            ensure!(p.a.len() == dim, "slope has length {}, expected {dim}", p.a.len());
            pieces.push(AffinePiece::new(to_vector(&p.a), p.b.0.clone()));
        }
        let domain = match &self.domain {
            Some(spec) => spec.to_polyhedron(dim)?,
            None => Polyhedron::whole_space(dim),
        };
        Ok(PolyhedralConvexFunction::new(pieces, domain)?)
    }

    pub fn from_function(f: &PolyhedralConvexFunction) -> Self {
        let domain = f.domain();
        FunctionSpec {
            pieces: f
                .pieces()
                .iter()
                .map(|p| PieceSpec {
                    a: from_vector(&p.slope),
                    b: Q::from(&p.intercept),
                })
                .collect(),
            domain: (!domain.h_rep().is_empty()).then(|| PolyhedronSpec::from_polyhedron(domain)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub id: String,
    pub weight: Q,
    pub function: FunctionSpec,
}

fn default_samples() -> usize {
    50
}

fn is_default_samples(n: &usize) -> bool {
    *n == default_samples()
}

/// One check to run against the instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuerySpec {
    SumRule {
        x: QVec,
        eps: Vec<Q>,
        #[serde(default = "default_samples", skip_serializing_if = "is_default_samples")]
        samples: usize,
    },
    Conjugate {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        points: Vec<QVec>,
        #[serde(default, skip_serializing_if = "is_zero")]
        random: usize,
    },
    Epigraph {},
    NormalSets {
        x: QVec,
        eps: Vec<Q>,
    },
    Restricted {
        x: QVec,
        eps: Vec<Q>,
        basis: Vec<QVec>,
        #[serde(default = "default_samples", skip_serializing_if = "is_default_samples")]
        samples: usize,
    },
    BrRun {
        x: QVec,
        xstar: QVec,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        eps_schedule: Vec<Q>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        lambda_schedule: Vec<Q>,
    },
    Gateaux {
        x: QVec,
    },
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl QuerySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            QuerySpec::SumRule { .. } => "sum_rule",
            QuerySpec::Conjugate { .. } => "conjugate",
            QuerySpec::Epigraph {} => "epigraph",
            QuerySpec::NormalSets { .. } => "normal_sets",
            QuerySpec::Restricted { .. } => "restricted",
            QuerySpec::BrRun { .. } => "br_run",
            QuerySpec::Gateaux { .. } => "gateaux",
        }
    }

    fn vectors(&self) -> Vec<&QVec> {
        match self {
            QuerySpec::SumRule { x, .. }
            | QuerySpec::NormalSets { x, .. }
            | QuerySpec::Gateaux { x } => vec![x],
            QuerySpec::Conjugate { points, .. } => points.iter().collect(),
            QuerySpec::Epigraph {} => vec![],
            QuerySpec::Restricted { x, basis, .. } => std::iter::once(x).chain(basis).collect(),
            QuerySpec::BrRun { x, xstar, .. } => vec![x, xstar],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dimension: usize,
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid instance document")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Enforces the size caps unless `override_limits` is set.
    pub fn check_limits(&self, override_limits: bool) -> Result<()> {
        if override_limits {
            return Ok(());
        }
        ensure!(
            self.dimension <= MAX_DIMENSION,
            "dimension {} exceeds {MAX_DIMENSION} (use --override-limits)",
            self.dimension
        );
        ensure!(
            self.atoms.len() <= MAX_ATOMS,
            "{} atoms exceed {MAX_ATOMS} (use --override-limits)",
            self.atoms.len()
        );
        for a in &self.atoms {
            ensure!(
                a.function.pieces.len() <= MAX_PIECES,
                "atom {} has {} pieces, more than {MAX_PIECES} (use --override-limits)",
                a.id,
                a.function.pieces.len()
            );
        }
        Ok(())
    }

    /// Validates shapes and assembles the integral functional.
    pub fn to_instance(&self) -> Result<IntegralInstance> {
        let d = self.dimension;
        ensure!(d >= 1, "dimension must be at least 1");
        ensure!(!self.atoms.is_empty(), "an instance needs at least one atom");
        let mut ids = Vec::new();
        let mut weights = Vec::new();
        let mut functions = Vec::new();
        for a in &self.atoms {
            ensure!(!ids.contains(&a.id), "duplicate atom id {:?}", a.id);
            ensure!(a.weight.0.is_positive(), "atom {} has nonpositive weight", a.id);
            let f = a
                .function
                .to_function(d)
                .with_context(|| format!("atom {}", a.id))?;
            ids.push(a.id.clone());
            weights.push(a.weight.0.clone());
            functions.push(f);
        }
        for (i, q) in self.queries.iter().enumerate() {
            for v in q.vectors() {
                if v.len() != d {
                    bail!("query {i} ({}) has a vector of length {}, expected {d}", q.kind(), v.len());
                }
            }
        }
        Ok(IntegralInstance::assemble(
            DiscreteMeasureSpace::new(ids, weights)?,
            IntegrandFamily::new(d, functions)?,
        )?)
    }

    pub fn from_instance(inst: &IntegralInstance, queries: Vec<QuerySpec>) -> Self {
        InstanceFile {
            dimension: inst.dim(),
            atoms: inst
                .space()
                .atoms()
                .iter()
                .zip(inst.weights())
                .zip(inst.functions())
                .map(|((id, w), f)| AtomSpec {
                    id: id.clone(),
                    weight: Q::from(w),
                    function: FunctionSpec::from_function(f),
                })
                .collect(),
            queries,
        }
    }
}

/// A decomposition to re-check with `verify`: the instance, the point, the
/// target slope, the budget and the claimed certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub instance: InstanceFile,
    pub x: QVec,
    pub xstar: QVec,
    pub eps: Q,
    pub certificate: CertificateSpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub eps1: Q,
    pub eps2: Q,
    pub ell: Vec<Q>,
    /// Defaults to `eps1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Q>,
    pub selections: Vec<QVec>,
    pub normal: QVec,
}

impl CertificateSpec {
    pub fn to_certificate(&self) -> DecompositionCertificate {
        DecompositionCertificate {
            eps1: self.eps1.0.clone(),
            eps2: self.eps2.0.clone(),
            alloc: ErrorAllocation::new(
                self.ell.iter().map(|q| q.0.clone()).collect(),
                self.budget.as_ref().unwrap_or(&self.eps1).0.clone(),
            ),
            selections: self.selections.iter().map(|v| to_vector(v)).collect(),
            normal: to_vector(&self.normal),
        }
    }

    pub fn from_certificate(c: &DecompositionCertificate) -> Self {
        CertificateSpec {
            eps1: Q::from(&c.eps1),
            eps2: Q::from(&c.eps2),
            ell: c.alloc.ell.iter().map(Q::from).collect(),
            budget: (c.alloc.budget != c.eps1).then(|| Q::from(&c.alloc.budget)),
            selections: c.selections.iter().map(from_vector).collect(),
            normal: from_vector(&c.normal),
        }
    }
}

impl CertificateFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid certificate document")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }
}

pub fn parse_rational_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .map(|t| t.trim().parse::<Rational>().with_context(|| format!("bad rational {t:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const INSTANCE_A: &str = r#"{
        "dimension": 1,
        "atoms": [
            {"id": "1", "weight": "1", "function": {"pieces": [{"a": ["1"], "b": "0"}, {"a": ["-1"], "b": "0"}]}},
            {"id": "2", "weight": "1", "function": {"pieces": [{"a": ["1"], "b": "-1"}, {"a": ["-1"], "b": "1"}]}}
        ],
        "queries": [{"kind": "sum_rule", "x": ["0"], "eps": ["0", "1/2"]}]
    }"#;

    #[test]
    fn parses_and_assembles() {
        let file = InstanceFile::parse(INSTANCE_A).unwrap();
        let inst = file.to_instance().unwrap();
        assert_eq!(inst.integral().value(&Vector::from_ints(&[0])).finite(), Some(&Rational::one()));
        let again = InstanceFile::parse(&file.to_json()).unwrap();
        assert_eq!(again, file);
    }

    #[test]
    fn round_trips_domains() {
        let text = r#"{"dimension": 2, "atoms": [{"id": "a", "weight": "3/2", "function": {
            "pieces": [{"a": ["0", "0"], "b": "0"}],
            "domain": {"vertices": [["0", "0"], ["1", "0"]], "rays": [["0", "1"]]}}}]}"#;
        let file = InstanceFile::parse(text).unwrap();
        let inst = file.to_instance().unwrap();
        let back = InstanceFile::from_instance(&inst, vec![]);
        let inst2 = back.to_instance().unwrap();
        assert!(inst2.domain().equals(inst.domain()));
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            r#"{"dimension": 1, "atoms": [{"id": "1", "weight": "1.5", "function": {"pieces": [{"a": ["1"], "b": "0"}]}}]}"#,
            r#"{"dimension": 1, "atoms": [{"id": "1", "weight": "1/0", "function": {"pieces": [{"a": ["1"], "b": "0"}]}}]}"#,
            r#"{"dimension": 1, "atoms": [{"id": "1", "weight": "1", "function": {"pieces": [{"a": ["1"], "b": "0"}]}}], "extra": 1}"#,
            r#"{"dimension": 1, "atoms": [{"id": "1", "weight": "1", "function": {"pieces": [{"a": [1], "b": "0"}]}}]}"#,
            r#"{"dimension": 1, "atoms": [ "#,
        ] {
            assert!(InstanceFile::parse(bad).is_err(), "{bad}");
        }
        let wrong_len = r#"{"dimension": 2, "atoms": [{"id": "1", "weight": "1", "function": {"pieces": [{"a": ["1"], "b": "0"}]}}]}"#;
        assert!(InstanceFile::parse(wrong_len).unwrap().to_instance().is_err());
        let negative = r#"{"dimension": 1, "atoms": [{"id": "1", "weight": "-1", "function": {"pieces": [{"a": ["1"], "b": "0"}]}}]}"#;
        assert!(InstanceFile::parse(negative).unwrap().to_instance().is_err());
    }

    #[test]
    fn limits() {
        let mut file = InstanceFile::parse(INSTANCE_A).unwrap();
        file.dimension = 5;
        assert!(file.check_limits(false).is_err());
        assert!(file.check_limits(true).is_ok());
    }
}
