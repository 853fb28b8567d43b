//! Dense two-phase primal simplex over exact rationals.
//!
//! Pivoting prices by the largest reduced cost and falls back to Bland's
//! rule after a run of degenerate pivots, so degenerate problems terminate. Free
//! variables are handled without splitting: a free column entering in the
//! negative direction is negated in place, and a basic free variable never
//! leaves the basis.

use alloc::vec;
use alloc::vec::Vec;

use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, Rational)>,
    rel: Relation,
    rhs: Rational,
}

/// A linear program built incrementally: variables first, then rows.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    free: Vec<bool>,
    objective: Vec<Rational>,
    sense: Sense,
    rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<Rational>, Rational)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            free: Vec::new(),
            objective: Vec::new(),
            sense,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.free.len()
    }

    /// Adds an unrestricted variable and returns its index.
    pub fn free_var(&mut self) -> usize {
        self.free.push(true);
        self.objective.push(Rational::zero());
        self.free.len() - 1
    }

    /// Adds a variable constrained to be `>= 0`.
    pub fn nonneg_var(&mut self) -> usize {
        self.free.push(false);
        self.objective.push(Rational::zero());
        self.free.len() - 1
    }

    pub fn free_vars(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.free_var()).collect()
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rational) {
        self.objective[var] = coeff;
    }

    /// Adds `Σ coeff·x_var (rel) rhs`; repeated indices are summed.
    pub fn add_row<I>(&mut self, coeffs: I, rel: Relation, rhs: Rational)
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut merged: Vec<(usize, Rational)> = Vec::new();
        for (j, c) in coeffs {
            assert!(j < self.num_vars(), "unknown variable {j}");
            if c.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some((_, acc)) => *acc += c,
                None => merged.push((j, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.rows.push(Row {
            coeffs: merged,
            rel,
            rhs,
        });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

const BLAND_AFTER: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `rows[i][ncols]` holds the right-hand side.
    rows: Vec<Vec<Rational>>,
    cost: Vec<Rational>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    free: Vec<bool>,
    negated: Vec<bool>,
    dead: Vec<bool>,
    ncols: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let nslack = lp.rows.iter().filter(|r| r.rel != Relation::Eq).count();
        let m = lp.rows.len();

        // Decide per row whether its slack can start basic.
        let mut needs_art = Vec::with_capacity(m);
        for r in &lp.rows {
            let flip = r.rhs.is_negative();
            let slack_sign_positive = match r.rel {
                Relation::Le => !flip,
                Relation::Ge => flip,
                Relation::Eq => false,
            };
            needs_art.push(!slack_sign_positive);
        }
        let nart = needs_art.iter().filter(|&&a| a).count();
        let ncols = n + nslack + nart;

        let mut kinds = vec![ColKind::Structural; n];
        kinds.extend(core::iter::repeat_n(ColKind::Slack, nslack));
        kinds.extend(core::iter::repeat_n(ColKind::Artificial, nart));
        let mut free = lp.free.clone();
        free.extend(core::iter::repeat_n(false, nslack + nart));

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack_col = n;
        let mut art_col = n + nslack;
        for (r, &art) in lp.rows.iter().zip(&needs_art) {
            let mut row = vec![Rational::zero(); ncols + 1];
            let flip = r.rhs.is_negative();
            for (j, c) in &r.coeffs {
                row[*j] = if flip { -c } else { c.clone() };
            }
            let mut slack_here = None;
            match r.rel {
                Relation::Le => {
                    row[slack_col] = if flip { -Rational::one() } else { Rational::one() };
                    slack_here = Some(slack_col);
                    slack_col += 1;
                }
                Relation::Ge => {
                    row[slack_col] = if flip { Rational::one() } else { -Rational::one() };
                    slack_here = Some(slack_col);
                    slack_col += 1;
                }
                Relation::Eq => {}
            }
            row[ncols] = r.rhs.abs();
            if art {
                row[art_col] = Rational::one();
                basis.push(art_col);
                art_col += 1;
            } else {
                basis.push(slack_here.expect("slack present"));
            }
            rows.push(row);
        }

        Tableau {
            rows,
            cost: vec![Rational::zero(); ncols + 1],
            basis,
            kinds,
            free,
            negated: vec![false; ncols],
            dead: vec![false; ncols],
            ncols,
        }
    }

    /// Loads `min Σ c_j x_j` into the cost row, pricing out basic columns.
    fn load_cost(&mut self, c: &[Rational]) {
        self.cost = vec![Rational::zero(); self.ncols + 1];
        for (j, cj) in c.iter().enumerate() {
            self.cost[j] = if self.negated[j] { -cj } else { cj.clone() };
        }
        for i in 0..self.rows.len() {
            let b = self.basis[i];
            let cb = self.cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.ncols {
                let a = &self.rows[i][j];
                if !a.is_zero() {
                    self.cost[j] = self.cost[j].sub_mul(&cb, a);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        if p != Rational::one() {
            let inv = p.recip();
            for x in self.rows[r].iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &inv;
                }
            }
        }
        let support: Vec<usize> = (0..=self.ncols)
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let prow: Vec<Rational> = support.iter().map(|&j| self.rows[r][j].clone()).collect();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col].clone();
            if f.is_zero() {
                continue;
            }
            let row = &mut self.rows[i];
            for (&j, a) in support.iter().zip(&prow) {
                row[j] = row[j].sub_mul(&f, a);
            }
        }
        let f = self.cost[col].clone();
        if !f.is_zero() {
            for (&j, a) in support.iter().zip(&prow) {
                self.cost[j] = self.cost[j].sub_mul(&f, a);
            }
        }
        self.basis[r] = col;
    }

    fn negate_column(&mut self, col: usize) {
        for row in self.rows.iter_mut() {
            if !row[col].is_zero() {
                row[col] = -&row[col];
            }
        }
        self.cost[col] = -&self.cost[col];
        self.negated[col] = !self.negated[col];
    }

    fn iterate(&mut self) -> PhaseEnd {
        let mut in_basis = vec![false; self.ncols];
        for &b in &self.basis {
            in_basis[b] = true;
        }
        let mut degenerate_streak = 0usize;
        loop {
            // Dantzig pricing until degeneracy stalls, then Bland.
            let bland = degenerate_streak >= BLAND_AFTER;
            let mut entering: Option<(usize, Rational)> = None;
            for (j, &basic) in in_basis.iter().enumerate().take(self.ncols) {
                if basic || self.dead[j] {
                    continue;
                }
                let d = &self.cost[j];
                let score = if d.is_negative() {
                    -d
                } else if self.free[j] && d.is_positive() {
                    d.clone()
                } else {
                    continue;
                };
                if entering.as_ref().is_none_or(|(_, s)| score > *s) {
                    entering = Some((j, score));
                }
                if bland {
                    break;
                }
            }
            let Some((col, _)) = entering else {
                return PhaseEnd::Optimal;
            };
            if self.cost[col].is_positive() {
                self.negate_column(col);
            }
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() || self.free[self.basis[i]] {
                    continue;
                }
                let ratio = &self.rows[i][self.ncols] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return PhaseEnd::Unbounded;
            };
            if ratio.is_zero() {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            let out = self.basis[r];
            self.pivot(r, col);
            in_basis[out] = false;
            in_basis[col] = true;
            if self.kinds[out] == ColKind::Artificial {
                self.dead[out] = true;
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let has_art = self.kinds.contains(&ColKind::Artificial);
        if has_art {
            let phase1: Vec<Rational> = (0..self.ncols)
                .map(|j| {
                    if self.kinds[j] == ColKind::Artificial {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            self.load_cost(&phase1);
            self.iterate();
            // cost rhs holds -(phase-one objective)
            if !self.cost[self.ncols].is_zero() {
                return LpOutcome::Infeasible;
            }
            self.drive_out_artificials();
            for j in 0..self.ncols {
                if self.kinds[j] == ColKind::Artificial {
                    self.dead[j] = true;
                }
            }
        }
        let mut c = vec![Rational::zero(); self.ncols];
        for (j, cj) in lp.objective.iter().enumerate() {
            c[j] = match lp.sense {
                Sense::Minimize => cj.clone(),
                Sense::Maximize => -cj,
            };
        }
        self.load_cost(&c);
        match self.iterate() {
            PhaseEnd::Unbounded => LpOutcome::Unbounded,
            PhaseEnd::Optimal => {
                let n = lp.num_vars();
                let mut x = vec![Rational::zero(); n];
                for (i, &b) in self.basis.iter().enumerate() {
                    if b < n {
                        let v = self.rows[i][self.ncols].clone();
                        x[b] = if self.negated[b] { -v } else { v };
                    }
                }
                let min_value = -&self.cost[self.ncols];
                let value = match lp.sense {
                    Sense::Minimize => min_value,
                    Sense::Maximize => -min_value,
                };
                LpOutcome::Optimal { x, value }
            }
        }
    }

    fn drive_out_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            let b = self.basis[i];
            if self.kinds[b] != ColKind::Artificial {
                i += 1;
                continue;
            }
            let replacement = (0..self.ncols).find(|&j| {
                self.kinds[j] != ColKind::Artificial
                    && !self.basis.contains(&j)
                    && !self.rows[i][j].is_zero()
            });
            match replacement {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    // redundant equality
                    self.rows.swap_remove(i);
                    self.basis.swap_remove(i);
                }
            }
        }
    }
}
