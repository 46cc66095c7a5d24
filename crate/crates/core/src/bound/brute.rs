//! Exhaustive search for the cheapest feasible traffic vector on a lattice of
//! step 1/g.
//!
//! Shares nothing with the LP path beyond the scenario description: instead of
//! max-flow separation it writes down every collector cut explicitly (each
//! (k-1)-subset S and each set X of survivors on the source side) and then
//! enumerates integer traffic vectors by increasing total, so agreement between
//! the two is meaningful.

use num_bigint::BigInt;

use super::simplex::Q;
use super::{combinations, RepairScenario};
use crate::error::{Error, Result};

/// Hard limits on what the oracle will attempt.
pub const MAX_NODES: usize = 8;
pub const MAX_UNITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Cut {
    /// links crossing the cut, as indices into the variable order
    vars: Vec<usize>,
    need: i64,
}

/// All nontrivial cut constraints `sum_{vars} z >= need`, in units of 1/g.
fn cuts(sc: &RepairScenario, links: &[(usize, usize)], node_units: i64, total: i64) -> Vec<Cut> {
    let survivors = sc.survivors();
    let mut out: Vec<Cut> = Vec::new();
    for s in combinations(&survivors, sc.k - 1) {
        let free: Vec<usize> = survivors.iter().copied().filter(|u| !s.contains(u)).collect();
        for mask in 0u32..(1 << free.len()) {
            let in_x = |u: usize| free.iter().position(|&f| f == u).is_some_and(|p| mask >> p & 1 == 1);
            // stored data cut off from the source: every fed node outside X
            let cut_sources = survivors
                .iter()
                .filter(|&&u| (sc.helpers.contains(&u) || s.contains(&u)) && !in_x(u))
                .count() as i64;
            let need = total - node_units * cut_sources;
            if need <= 0 {
                continue;
            }
            let vars: Vec<usize> =
                links.iter().enumerate().filter(|(_, &(u, v))| in_x(u) && !in_x(v)).map(|(j, _)| j).collect();
            out.push(Cut { vars, need });
        }
    }
    // keep the strongest requirement per crossing set
    out.sort_by(|a, b| a.vars.cmp(&b.vars).then(b.need.cmp(&a.need)));
    out.dedup_by(|a, b| a.vars == b.vars);
    out
}

struct Search {
    cuts: Vec<Cut>,
    /// cuts touching each variable
    touching: Vec<Vec<usize>>,
    /// cuts whose last variable sits at each position
    closing: Vec<Vec<usize>>,
}

impl Search {
    fn new(cuts: Vec<Cut>, nvars: usize) -> Self {
        let mut touching = vec![Vec::new(); nvars];
        let mut closing = vec![Vec::new(); nvars];
        for (c, cut) in cuts.iter().enumerate() {
            for &j in &cut.vars {
                touching[j].push(c);
            }
            if let Some(&last) = cut.vars.iter().max() {
                closing[last].push(c);
            }
        }
        Search { cuts, touching, closing }
    }

    /// Can positions `i..` be filled with exactly `left` units so every cut is met?
    fn dfs(&self, deficit: &mut [i64], i: usize, left: i64) -> bool {
        // a cut still short by more than everything left to spend is hopeless
        if deficit.iter().any(|&d| d > left) {
            return false;
        }
        if i == self.touching.len() {
            return left == 0 && deficit.iter().all(|&d| d <= 0);
        }
        let lo = if i + 1 == self.touching.len() { left } else { 0 };
        for v in (lo..=left).rev() {
            for &c in &self.touching[i] {
                deficit[c] -= v;
            }
            let closed_ok = self.closing[i].iter().all(|&c| deficit[c] <= 0);
            let found = closed_ok && self.dfs(deficit, i + 1, left - v);
            for &c in &self.touching[i] {
                deficit[c] += v;
            }
            if found {
                return true;
            }
        }
        false
    }
}

/// Least total traffic, in multiples of 1/g, meeting every collector cut.
pub fn brute_force_bound(sc: &RepairScenario, g: usize) -> Result<Q> {
    let n = sc.topology.n();
    if n > MAX_NODES {
        return Err(Error::TooLarge(format!("{n} nodes (limit {MAX_NODES})")));
    }
    if g == 0 || !(sc.m * g).is_multiple_of(sc.k) {
        return Err(Error::Params(format!("granularity {g} does not divide node storage M/k")));
    }
    let node_units = (sc.m * g / sc.k) as i64;
    let total = (sc.m * g) as i64;

    // Every helper shipping its whole store along a shortest path to the new
    // node is feasible whenever k helpers exist, which caps the search.
    let dist = sc.topology.distances(sc.failed);
    let mut d: Vec<usize> = sc.helpers.iter().map(|&h| dist[h].expect("connected")).collect();
    d.sort_unstable();
    if d.len() < sc.k {
        return Err(Error::Params(format!("only {} helpers for k={}", d.len(), sc.k)));
    }
    let cap = d[..sc.k].iter().sum::<usize>() * node_units as usize;
    if cap > MAX_UNITS {
        return Err(Error::TooLarge(format!("search cap of {cap} units (limit {MAX_UNITS})")));
    }

    let links: Vec<(usize, usize)> =
        sc.topology.directed_links().iter().filter(|l| l.from != sc.failed).map(|l| (l.from, l.to)).collect();
    // most constrained links first so cuts close early
    let mut weight = vec![0usize; links.len()];
    for c in cuts(sc, &links, node_units, total) {
        for j in c.vars {
            weight[j] += 1;
        }
    }
    let mut order: Vec<usize> = (0..links.len()).collect();
    order.sort_by_key(|&j| (std::cmp::Reverse(weight[j]), j));
    let links: Vec<(usize, usize)> = order.iter().map(|&j| links[j]).collect();
    let cs = cuts(sc, &links, node_units, total);
    if cs.iter().any(|c| c.vars.is_empty()) {
        return Err(Error::Infeasible);
    }

    let search = Search::new(cs, links.len());
    for budget in 0..=cap as i64 {
        let mut deficit: Vec<i64> = search.cuts.iter().map(|c| c.need).collect();
        if search.dfs(&mut deficit, 0, budget) {
            return Ok(Q::new(BigInt::from(budget), BigInt::from(g)));
        }
    }
    Err(Error::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Topology;

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn trivial_pair() {
        let sc = RepairScenario::new(Topology::tandem(2).unwrap(), 1, 1, 2).unwrap();
        assert_eq!(brute_force_bound(&sc, 1).unwrap(), q(1, 1));
    }

    #[test]
    fn tandem_four() {
        for t in 1..=4 {
            let sc = RepairScenario::new(Topology::tandem(4).unwrap(), 2, 2, t).unwrap();
            assert_eq!(brute_force_bound(&sc, 2).unwrap(), q(2, 1), "t={t}");
        }
    }

    #[test]
    fn triangle() {
        // each collector {1, x} needs one fragment from the other survivor
        let tri = Topology::from_edges(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        let sc = RepairScenario::new(tri, 2, 2, 1).unwrap();
        assert_eq!(brute_force_bound(&sc, 2).unwrap(), q(2, 1));
    }

    #[test]
    fn cut_listing_tandem() {
        // tandem 3, failed 2, k=2, M=2: collectors {2,1} and {2,3}; each needs
        // the far end's fragment over its only link
        let sc = RepairScenario::new(Topology::tandem(3).unwrap(), 2, 2, 2).unwrap();
        let cs = cuts(&sc, &[(1, 2), (3, 2)], 1, 2);
        assert_eq!(cs, vec![Cut { vars: vec![0], need: 1 }, Cut { vars: vec![1], need: 1 }]);
    }

    #[test]
    fn grid_center_depends_on_granularity() {
        let sc = RepairScenario::new(Topology::grid(2, 3).unwrap(), 3, 6, 5).unwrap();
        assert_eq!(brute_force_bound(&sc, 1).unwrap(), q(5, 1));
        assert_eq!(brute_force_bound(&sc, 3).unwrap(), q(14, 3));
    }

    #[test]
    fn guards() {
        let big = RepairScenario::new(Topology::grid(3, 3).unwrap(), 2, 2, 1).unwrap();
        assert!(matches!(brute_force_bound(&big, 1), Err(Error::TooLarge(_))));
        let sc = RepairScenario::new(Topology::tandem(4).unwrap(), 3, 3, 1).unwrap();
        assert!(matches!(brute_force_bound(&sc, 0), Err(Error::Params(_))));
    }
}
