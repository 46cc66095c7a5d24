//! Two-phase tableau simplex over exact rationals.
//!
//! Minimises `c.x` subject to linear rows and `x >= 0`. Entering columns are
//! priced by most negative reduced cost; after a run of degenerate pivots the
//! entering choice falls back to Bland's rule (the leaving choice always uses
//! it), so the method terminates on degenerate problems, which cut-set LPs
//! routinely are.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// consecutive degenerate pivots tolerated before switching to Bland's rule
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, Q)>,
    pub rel: Relation,
    pub rhs: Q,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Q>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub value: Q,
    pub x: Vec<Q>,
}

impl LinearProgram {
    pub fn new(objective: Vec<Q>) -> Self {
        LinearProgram { num_vars: objective.len(), objective, rows: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Q)>, rel: Relation, rhs: Q) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.rows.push(Row { coeffs, rel, rhs });
    }

    /// True if `x` satisfies every row and the sign constraints.
    pub fn is_feasible(&self, x: &[Q]) -> bool {
        if x.len() != self.num_vars || x.iter().any(|v| v.is_negative()) {
            return false;
        }
        self.rows.iter().all(|r| {
            let lhs: Q = r.coeffs.iter().map(|(j, c)| c * &x[*j]).sum();
            match r.rel {
                Relation::Le => lhs <= r.rhs,
                Relation::Ge => lhs >= r.rhs,
                Relation::Eq => lhs == r.rhs,
            }
        })
    }

    pub fn minimize(&self) -> Result<Solution> {
        Tableau::build(self).solve(&self.objective)
    }
}

/// Revised simplex for `min c.w` subject to `A w <= b`, `w >= 0` with `b >= 0`.
/// The slack basis is feasible, so there is no phase 1, and columns may be
/// appended between solves: the last basis stays feasible and the next solve
/// starts from it.
#[derive(Debug, Clone)]
pub struct PackingLp {
    rhs: Vec<Q>,
    columns: Vec<(Vec<(usize, Q)>, Q)>,
    binv: Vec<Vec<Q>>,
    values: Vec<Q>,
    basis: Vec<Var>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Var {
    Col(usize),
    Slack(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingSolution {
    pub value: Q,
    pub w: Vec<Q>,
    /// optimal row duals, all nonpositive
    pub duals: Vec<Q>,
}

impl PackingLp {
    pub fn new(rhs: Vec<Q>) -> Self {
        assert!(rhs.iter().all(|b| !b.is_negative()), "packing rows need a nonnegative rhs");
        let m = rhs.len();
        let binv = (0..m).map(|i| (0..m).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
        PackingLp { values: rhs.clone(), rhs, columns: Vec::new(), binv, basis: (0..m).map(Var::Slack).collect() }
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    /// Append a column (sparse row entries) with objective coefficient `cost`.
    pub fn add_column(&mut self, entries: Vec<(usize, Q)>, cost: Q) -> usize {
        debug_assert!(entries.iter().all(|(i, _)| *i < self.rows()));
        self.columns.push((entries, cost));
        self.columns.len() - 1
    }

    fn cost(&self, v: Var) -> Q {
        match v {
            Var::Col(j) => self.columns[j].1.clone(),
            Var::Slack(_) => Q::zero(),
        }
    }

    fn duals(&self) -> Vec<Q> {
        let m = self.rows();
        let mut y = vec![Q::zero(); m];
        for (r, &v) in self.basis.iter().enumerate() {
            let c = self.cost(v);
            if c.is_zero() {
                continue;
            }
            for (yi, b) in y.iter_mut().zip(&self.binv[r]) {
                if !b.is_zero() {
                    *yi += &c * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, v: Var, y: &[Q]) -> Q {
        match v {
            Var::Col(j) => {
                let (entries, c) = &self.columns[j];
                entries.iter().fold(c.clone(), |acc, (i, a)| acc - &y[*i] * a)
            }
            Var::Slack(i) => -y[i].clone(),
        }
    }

    fn ftran(&self, v: Var) -> Vec<Q> {
        match v {
            Var::Col(j) => self
                .binv
                .iter()
                .map(|row| self.columns[j].0.iter().fold(Q::zero(), |acc, (i, a)| acc + &row[*i] * a))
                .collect(),
            Var::Slack(i) => self.binv.iter().map(|row| row[i].clone()).collect(),
        }
    }

    pub fn solve(&mut self) -> Result<PackingSolution> {
        let m = self.rows();
        let mut stalled = 0;
        loop {
            let y = self.duals();
            let candidates = (0..self.columns.len())
                .map(Var::Col)
                .chain((0..m).map(Var::Slack))
                .filter(|v| !self.basis.contains(v))
                .map(|v| (self.reduced_cost(v, &y), v))
                .filter(|(d, _)| d.is_negative());
            let pick = if stalled < STALL_LIMIT {
                candidates.min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
            } else {
                candidates.min_by_key(|(_, v)| *v)
            };
            let Some((_, entering)) = pick else {
                break;
            };
            let u = self.ftran(entering);
            let mut best: Option<(usize, Q)> = None;
            for r in 0..m {
                if !u[r].is_positive() {
                    continue;
                }
                let ratio = &self.values[r] / &u[r];
                let better = match &best {
                    None => true,
                    Some((br, bq)) => ratio < *bq || (ratio == *bq && self.basis[r] < self.basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((r, step)) = best else {
                return Err(Error::Unbounded);
            };
            stalled = if step.is_zero() { stalled + 1 } else { 0 };
            let p = u[r].clone();
            for v in self.binv[r].iter_mut() {
                *v /= &p;
            }
            self.values[r] /= &p;
            let (prow, pval) = (self.binv[r].clone(), self.values[r].clone());
            for i in 0..m {
                if i == r || u[i].is_zero() {
                    continue;
                }
                for (b, pb) in self.binv[i].iter_mut().zip(&prow) {
                    if !pb.is_zero() {
                        *b -= &u[i] * pb;
                    }
                }
                self.values[i] -= &u[i] * &pval;
            }
            self.basis[r] = entering;
        }
        let mut w = vec![Q::zero(); self.columns.len()];
        for (r, &v) in self.basis.iter().enumerate() {
            if let Var::Col(j) = v {
                w[j] = self.values[r].clone();
            }
        }
        let value = self.columns.iter().zip(&w).map(|((_, c), x)| c * x).sum();
        Ok(PackingSolution { value, w, duals: self.duals() })
    }
}

struct Tableau {
    /// constraint rows: `cols` coefficients followed by the rhs
    t: Vec<Vec<Q>>,
    basis: Vec<usize>,
    n_struct: usize,
    cols: usize,
    artificial: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars;
        let m = lp.rows.len();
        let mut extra = 0;
        for r in &lp.rows {
            let flip = r.rhs.is_negative();
            extra += match (r.rel, flip) {
                (Relation::Eq, _) => 1,
                (Relation::Le, false) | (Relation::Ge, true) => 1,
                _ => 2,
            };
        }
        let cols = n + extra;
        let mut t = vec![vec![Q::zero(); cols + 1]; m];
        let mut basis = vec![0; m];
        let mut artificial = vec![false; cols];
        let mut next = n;
        for (i, r) in lp.rows.iter().enumerate() {
            let flip = r.rhs.is_negative();
            let sign = if flip { -Q::one() } else { Q::one() };
            for (j, c) in &r.coeffs {
                t[i][*j] += c * &sign;
            }
            t[i][cols] = &r.rhs * &sign;
            let rel = match (r.rel, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            };
            match rel {
                Relation::Le => {
                    t[i][next] = Q::one();
                    basis[i] = next;
                    next += 1;
                }
                Relation::Ge => {
                    t[i][next] = -Q::one();
                    t[i][next + 1] = Q::one();
                    artificial[next + 1] = true;
                    basis[i] = next + 1;
                    next += 2;
                }
                Relation::Eq => {
                    t[i][next] = Q::one();
                    artificial[next] = true;
                    basis[i] = next;
                    next += 1;
                }
            }
        }
        Tableau { t, basis, n_struct: n, cols, artificial }
    }

    fn reduced_costs(&self, cost: &[Q]) -> Vec<Q> {
        let mut d: Vec<Q> = (0..self.cols).map(|j| cost.get(j).cloned().unwrap_or_else(Q::zero)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost.get(b).cloned().unwrap_or_else(Q::zero);
            if cb.is_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                if !self.t[i][j].is_zero() {
                    *dj -= &cb * &self.t[i][j];
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        if !p.is_one() {
            for v in self.t[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let prow = self.t[r].clone();
        let nz: Vec<usize> = (0..=self.cols).filter(|&j| !prow[j].is_zero()).collect();
        for i in 0..self.t.len() {
            if i == r || self.t[i][c].is_zero() {
                continue;
            }
            let f = self.t[i][c].clone();
            for &j in &nz {
                let delta = &f * &prow[j];
                self.t[i][j] -= delta;
            }
        }
        self.basis[r] = c;
    }

    /// Run simplex iterations for `cost`; columns with `allowed[j] == false` never enter.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> Result<()> {
        let mut d = self.reduced_costs(cost);
        let mut stalled = 0;
        loop {
            let entering = (0..self.cols).filter(|&j| allowed[j] && d[j].is_negative());
            let pick = if stalled < STALL_LIMIT {
                entering.min_by(|&a, &b| d[a].cmp(&d[b]).then(a.cmp(&b)))
            } else {
                entering.min()
            };
            let Some(c) = pick else {
                return Ok(());
            };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][self.cols] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, step)) = best else {
                return Err(Error::Unbounded);
            };
            stalled = if step.is_zero() { stalled + 1 } else { 0 };
            self.pivot(r, c);
            // update reduced costs from the new pivot row
            let f = d[c].clone();
            for j in 0..self.cols {
                if !self.t[r][j].is_zero() {
                    d[j] -= &f * &self.t[r][j];
                }
            }
        }
    }

    fn solve(mut self, objective: &[Q]) -> Result<Solution> {
        let all = vec![true; self.cols];
        if self.artificial.iter().any(|&a| a) {
            let phase1: Vec<Q> =
                (0..self.cols).map(|j| if self.artificial[j] { Q::one() } else { Q::zero() }).collect();
            self.optimize(&phase1, &all)?;
            let infeas: Q = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| self.artificial[b])
                .map(|(i, _)| self.t[i][self.cols].clone())
                .sum();
            if infeas.is_positive() {
                return Err(Error::Infeasible);
            }
            // drive zero-valued artificials out of the basis, dropping redundant rows
            let mut i = 0;
            while i < self.t.len() {
                if self.artificial[self.basis[i]] {
                    match (0..self.cols).find(|&j| !self.artificial[j] && !self.t[i][j].is_zero()) {
                        Some(j) => self.pivot(i, j),
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let allowed: Vec<bool> = self.artificial.iter().map(|a| !a).collect();
        self.optimize(objective, &allowed)?;
        let mut x = vec![Q::zero(); self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.t[i][self.cols].clone();
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(Solution { value, x })
    }
}
