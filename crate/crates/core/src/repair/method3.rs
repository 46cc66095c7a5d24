//! Distance-weighted download baseline: the new node pulls y_i units directly
//! from helper i over a shortest path, paying d_i per unit, subject to every
//! k helpers jointly covering the file. Only the cost matters here, so this
//! solves the LP rather than building a transcript.
//!
//! The covering constraints say: for each (k-1)-subset S of helpers, the other
//! helpers deliver at least M/k. That is "the d-k+1 smallest y_i sum to at
//! least M/k", so the LP is solved by adding only the currently most violated
//! subset until none is violated.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::bound::simplex::{LinearProgram, Relation, Q};
use crate::bound::{combinations, fraction};
use crate::error::{Error, Result};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method3Helpers {
    /// every survivor may be downloaded from
    #[default]
    All,
    /// only the `d` survivors nearest the failed node, by (distance, id)
    Nearest(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Method3Result {
    pub cost: Q,
    pub downloads: BTreeMap<usize, Q>,
}

impl Method3Result {
    pub fn cost_string(&self) -> String {
        fraction(&self.cost)
    }
}

fn helper_set(topology: &Topology, failed: usize, which: Method3Helpers) -> Result<Vec<(usize, usize)>> {
    let dist = topology.distances(failed);
    let mut hs: Vec<(usize, usize)> = topology
        .nodes()
        .filter(|&u| u != failed)
        .map(|u| dist[u].map(|d| (d, u)).ok_or_else(|| Error::Topology(format!("node {u} unreachable"))))
        .collect::<Result<_>>()?;
    hs.sort_unstable();
    if let Method3Helpers::Nearest(d) = which {
        hs.truncate(d);
    }
    Ok(hs)
}

pub fn method3_baseline(topology: &Topology, k: usize, m: usize, failed: usize, which: Method3Helpers) -> Result<Method3Result> {
    if !topology.contains(failed) {
        return Err(Error::NoSuchNode(failed));
    }
    if k == 0 || !m.is_multiple_of(k) {
        return Err(Error::Params(format!("k={k} must divide M={m}")));
    }
    let hs = helper_set(topology, failed, which)?;
    let d = hs.len();
    if d < k {
        return Err(Error::Params(format!("{d} helpers cannot cover k={k}")));
    }
    let cap = Q::new(BigInt::from(m), BigInt::from(k));
    let mut lp = LinearProgram::new(hs.iter().map(|&(dist, _)| Q::from_integer(BigInt::from(dist))).collect());
    for i in 0..d {
        lp.add(vec![(i, Q::from_integer(1.into()))], Relation::Le, cap.clone());
    }
    let width = d - k + 1;
    loop {
        let sol = lp.minimize()?;
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&a, &b| sol.x[a].cmp(&sol.x[b]).then(a.cmp(&b)));
        let smallest = &idx[..width];
        let got: Q = smallest.iter().map(|&i| sol.x[i].clone()).sum();
        if got >= cap {
            let downloads = hs
                .iter()
                .zip(&sol.x)
                .filter(|(_, y)| !y.is_zero())
                .map(|(&(_, u), y)| (u, y.clone()))
                .collect();
            return Ok(Method3Result { cost: sol.value, downloads });
        }
        lp.add(smallest.iter().map(|&i| (i, Q::from_integer(1.into()))).collect(), Relation::Ge, cap.clone());
    }
}

/// Same LP with every covering constraint written out; for cross-checking.
pub fn method3_explicit(topology: &Topology, k: usize, m: usize, failed: usize, which: Method3Helpers) -> Result<Q> {
    let hs = helper_set(topology, failed, which)?;
    let d = hs.len();
    let cap = Q::new(BigInt::from(m), BigInt::from(k));
    let mut lp = LinearProgram::new(hs.iter().map(|&(dist, _)| Q::from_integer(BigInt::from(dist))).collect());
    for i in 0..d {
        lp.add(vec![(i, Q::from_integer(1.into()))], Relation::Le, cap.clone());
    }
    let all: Vec<usize> = (0..d).collect();
    for s in combinations(&all, k - 1) {
        let rest = all.iter().filter(|i| !s.contains(i)).map(|&i| (i, Q::from_integer(1.into()))).collect();
        lp.add(rest, Relation::Ge, cap.clone());
    }
    Ok(lp.minimize()?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(BigInt::from(n))
    }

    #[test]
    fn two_by_two_corner() {
        let topo = Topology::grid(2, 2).unwrap();
        assert_eq!(method3_baseline(&topo, 2, 4, 1, Method3Helpers::All).unwrap().cost, q(4));
    }

    #[test]
    fn agrees_with_explicit_constraints() {
        for (r, s) in [(2, 2), (2, 3), (2, 4), (3, 3)] {
            let topo = Topology::grid(r, s).unwrap();
            let n = r * s;
            let k = n / 2;
            for t in [1, n / 2, n] {
                for which in [Method3Helpers::All, Method3Helpers::Nearest(k + 1)] {
                    let a = method3_baseline(&topo, k, 2 * k, t, which).unwrap().cost;
                    let b = method3_explicit(&topo, k, 2 * k, t, which).unwrap();
                    assert_eq!(a, b, "{r}x{s} node {t} {which:?}");
                }
            }
        }
    }

    #[test]
    fn downloads_cover_every_collector() {
        let topo = Topology::grid(3, 4).unwrap();
        let res = method3_baseline(&topo, 6, 12, 1, Method3Helpers::All).unwrap();
        let ys: Vec<Q> = (2..=12).map(|u| res.downloads.get(&u).cloned().unwrap_or_default()).collect();
        let mut sorted = ys.clone();
        sorted.sort();
        let smallest: Q = sorted[..11 - 6 + 1].iter().cloned().sum();
        assert!(smallest >= q(2));
        assert!(ys.iter().all(|y| *y <= q(2)));
    }

    #[test]
    fn too_few_helpers() {
        let topo = Topology::grid(2, 3).unwrap();
        assert!(method3_baseline(&topo, 3, 6, 1, Method3Helpers::Nearest(2)).is_err());
    }
}
