//! Double-description method for polyhedral cones.
//!
//! Given homogeneous constraints `h·z <= 0`, computes a lineality basis and
//! the extreme rays of the cone, inserting one constraint at a time. Rays are
//! combined only when adjacent. Adjacency is first tried algebraically over
//! a prime field: a rank of `n − 2` modulo `p` certifies it, since reduction
//! never raises the rank. Otherwise the combinatorial zero-set test decides,
//! which is exact because the ray list is kept minimal.

use alloc::vec;
use alloc::vec::Vec;

use crate::rational::{dot, mul_mod, pow_mod, primitive_integer, Rational};

const PRIME: u64 = (1 << 61) - 1;

#[derive(Clone, Debug, Default)]
pub(crate) struct ConeGenerators {
    pub lineality: Vec<Vec<Rational>>,
    pub rays: Vec<Vec<Rational>>,
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn and_count(&self, other: &Bits) -> u32 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones()).sum()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b)
        })
    }
}

/// Whether the rows reach rank `target` modulo [`PRIME`].
fn rank_reaches(rows: impl Iterator<Item = usize>, residues: &[Option<Vec<u64>>], target: usize) -> bool {
    if target == 0 {
        return true;
    }
    // echelon rows, each with its pivot column normalized to 1
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::with_capacity(target);
    for i in rows {
        let Some(row) = &residues[i] else {
            return false;
        };
        let mut r = row.clone();
        for (col, b) in &basis {
            let f = r[*col];
            if f != 0 {
                for (x, y) in r.iter_mut().zip(b) {
                    *x = (*x + PRIME - mul_mod(f, *y, PRIME)) % PRIME;
                }
            }
        }
        let Some(col) = r.iter().position(|&x| x != 0) else {
            continue;
        };
        let inv = pow_mod(r[col], PRIME - 2, PRIME);
        for x in r.iter_mut() {
            *x = mul_mod(*x, inv, PRIME);
        }
        basis.push((col, r));
        if basis.len() >= target {
            return true;
        }
    }
    false
}

struct Ray {
    v: Vec<Rational>,
    zeros: Bits,
}

/// Generators of `{z in Q^dim : h·z <= 0 for every h in constraints}`.
pub(crate) fn cone_generators(dim: usize, constraints: &[Vec<Rational>]) -> ConeGenerators {
    let m = constraints.len();
    let mut lineality: Vec<Vec<Rational>> = (0..dim)
        .map(|i| {
            let mut e = vec![Rational::zero(); dim];
            e[i] = Rational::one();
            e
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();
    let mut processed = Bits::new(m);
    let residues: Vec<Option<Vec<u64>>> = constraints
        .iter()
        .map(|h| h.iter().map(|x| x.residue(PRIME)).collect())
        .collect();

    // Lexicographic insertion keeps intermediate ray lists small on
    // degenerate inputs.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| constraints[a].cmp(&constraints[b]));
    for k in order {
        let h = &constraints[k];
        debug_assert_eq!(h.len(), dim);
        if h.iter().all(Rational::is_zero) {
            processed.set(k);
            for r in rays.iter_mut() {
                r.zeros.set(k);
            }
            continue;
        }
        let pivot = lineality.iter().position(|l| !dot(h, l).is_zero());
        if let Some(p) = pivot {
            let mut l0 = lineality.swap_remove(p);
            let mut v0 = dot(h, &l0);
            if v0.is_positive() {
                l0 = l0.iter().map(|x| -x).collect();
                v0 = -v0;
            }
            for l in lineality.iter_mut() {
                let c = dot(h, l);
                if !c.is_zero() {
                    let f = &c / &v0;
                    *l = primitive_integer(
                        &l.iter().zip(&l0).map(|(a, b)| a.sub_mul(&f, b)).collect::<Vec<_>>(),
                    );
                }
            }
            for r in rays.iter_mut() {
                let c = dot(h, &r.v);
                if !c.is_zero() {
                    let f = &c / &v0;
                    r.v = primitive_integer(
                        &r.v.iter().zip(&l0).map(|(a, b)| a.sub_mul(&f, b)).collect::<Vec<_>>(),
                    );
                }
                r.zeros.set(k);
            }
            rays.push(Ray {
                v: primitive_integer(&l0),
                zeros: processed.clone(),
            });
            processed.set(k);
            continue;
        }

        let vals: Vec<Rational> = rays.iter().map(|r| dot(h, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        if pos.is_empty() {
            for (r, val) in rays.iter_mut().zip(&vals) {
                if val.is_zero() {
                    r.zeros.set(k);
                }
            }
            processed.set(k);
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        let pointed_dim = dim - lineality.len();
        let mut created: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &n in &neg {
                if pointed_dim >= 2
                    && (rays[p].zeros.and_count(&rays[n].zeros) as usize) + 2 < pointed_dim
                {
                    continue;
                }
                let common = rays[p].zeros.and(&rays[n].zeros);
                let adjacent = (pointed_dim >= 2
                    && rank_reaches(common.ones(), &residues, pointed_dim - 2))
                    || (0..rays.len()).all(|r| r == p || r == n || !common.subset_of(&rays[r].zeros));
                if !adjacent {
                    continue;
                }
                let (hp, hn) = (&vals[p], &vals[n]);
                let w: Vec<Rational> = rays[n]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(a, b)| &(hp * a) - &(hn * b))
                    .collect();
                let mut zeros = common;
                zeros.set(k);
                created.push(Ray {
                    v: primitive_integer(&w),
                    zeros,
                });
            }
        }
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + created.len());
        for (mut r, val) in rays.into_iter().zip(vals) {
            if val.is_positive() {
                continue;
            }
            if val.is_zero() {
                r.zeros.set(k);
            }
            next.push(r);
        }
        next.extend(created);
        rays = next;
        processed.set(k);
    }

    ConeGenerators {
        lineality: lineality.iter().map(|l| primitive_integer(l)).collect(),
        rays: rays.into_iter().map(|r| r.v).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_int(x)).collect()
    }

    #[test]
    fn nonnegative_orthant() {
        let cons = vec![ints(&[-1, 0, 0]), ints(&[0, -1, 0]), ints(&[0, 0, -1])];
        let g = cone_generators(3, &cons);
        assert!(g.lineality.is_empty());
        let mut rays = g.rays.clone();
        rays.sort();
        assert_eq!(rays, vec![ints(&[0, 0, 1]), ints(&[0, 1, 0]), ints(&[1, 0, 0])]);
    }

    #[test]
    fn square_pyramid_has_four_rays() {
        // cone over the square |x|<=t, |y|<=t
        let cons = vec![
            ints(&[1, 0, -1]),
            ints(&[-1, 0, -1]),
            ints(&[0, 1, -1]),
            ints(&[0, -1, -1]),
        ];
        let g = cone_generators(3, &cons);
        assert!(g.lineality.is_empty());
        let mut rays = g.rays.clone();
        rays.sort();
        assert_eq!(
            rays,
            vec![
                ints(&[-1, -1, 1]),
                ints(&[-1, 1, 1]),
                ints(&[1, -1, 1]),
                ints(&[1, 1, 1])
            ]
        );
    }

    #[test]
    fn halfspace_keeps_lineality() {
        let g = cone_generators(3, &[ints(&[1, 0, 0])]);
        assert_eq!(g.lineality.len(), 2);
        assert_eq!(g.rays, vec![ints(&[-1, 0, 0])]);
    }
}
