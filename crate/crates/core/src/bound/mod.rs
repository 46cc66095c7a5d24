//! Cut-set lower bound on repair cost.
//!
//! A repair of node `t` is modelled as an information-flow problem: a virtual
//! source feeds every helper with its M/k stored fragments, each directed link
//! carries `z` fragments, and a data collector reading the new node plus any
//! k-1 survivors must be able to pull M fragments. The bound is the least total
//! traffic `sum z` meeting every such cut.

pub mod brute;
pub mod flow;
pub mod simplex;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::topology::{DirectedLink, Topology};
use flow::FlowNetwork;
use simplex::{LinearProgram, PackingLp, Relation, Q};

/// Exact rational as a `"p/q"` string.
pub fn fraction(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn int(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone)]
pub struct RepairScenario {
    pub topology: Topology,
    pub k: usize,
    pub m: usize,
    pub failed: usize,
    pub helpers: Vec<usize>,
}

impl RepairScenario {
    /// Repair of `failed` with every survivor available as a helper.
    pub fn new(topology: Topology, k: usize, m: usize, failed: usize) -> Result<Self> {
        let helpers = topology.nodes().filter(|&u| u != failed).collect();
        Self::with_helpers(topology, k, m, failed, helpers)
    }

    pub fn with_helpers(topology: Topology, k: usize, m: usize, failed: usize, helpers: Vec<usize>) -> Result<Self> {
        let n = topology.n();
        if !topology.contains(failed) {
            return Err(Error::NoSuchNode(failed));
        }
        if k == 0 || k >= n || !m.is_multiple_of(k) {
            return Err(Error::Params(format!("invalid k={k}, M={m} for n={n}")));
        }
        let mut seen = BTreeSet::new();
        for &h in &helpers {
            if h == failed || !topology.contains(h) || !seen.insert(h) {
                return Err(Error::Params(format!("invalid helper {h}")));
            }
        }
        Ok(RepairScenario { topology, k, m, failed, helpers })
    }

    pub fn survivors(&self) -> Vec<usize> {
        self.topology.nodes().filter(|&u| u != self.failed).collect()
    }

    /// Per-node storage M/k.
    pub fn node_capacity(&self) -> Q {
        Q::new(BigInt::from(self.m), BigInt::from(self.k))
    }

    /// Links that can carry useful traffic: everything except links out of the new node.
    pub fn links(&self) -> Vec<DirectedLink> {
        self.topology.directed_links().into_iter().filter(|l| l.from != self.failed).collect()
    }
}

/// All (k-1)-subsets of survivors, in lexicographic order.
pub fn enumerate_scenarios(sc: &RepairScenario) -> Vec<Vec<usize>> {
    combinations(&sc.survivors(), sc.k - 1)
}

pub fn combinations<T: Clone>(items: &[T], r: usize) -> Vec<Vec<T>> {
    fn go<T: Clone>(items: &[T], r: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < r - cur.len() {
                break;
            }
            cur.push(items[i].clone());
            go(items, r, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if r <= items.len() {
        go(items, r, 0, &mut Vec::with_capacity(r), &mut out);
    }
    out
}

/// Traffic per directed link.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Subgraph {
    pub traffic: BTreeMap<DirectedLink, Q>,
}

#[derive(Debug, Serialize)]
pub struct TrafficEntry {
    pub from: usize,
    pub to: usize,
    pub amount: String,
}

impl Subgraph {
    pub fn from_pairs(pairs: &[((usize, usize), Q)]) -> Self {
        let mut traffic = BTreeMap::new();
        for ((u, v), z) in pairs {
            *traffic.entry(DirectedLink::new(*u, *v)).or_insert_with(Q::zero) += z;
        }
        Subgraph { traffic }
    }

    pub fn get(&self, l: DirectedLink) -> Q {
        self.traffic.get(&l).cloned().unwrap_or_else(Q::zero)
    }

    pub fn cost(&self) -> Q {
        self.traffic.values().sum()
    }

    /// Nonzero entries, sorted by link.
    pub fn entries(&self) -> Vec<TrafficEntry> {
        self.traffic
            .iter()
            .filter(|(_, z)| !z.is_zero())
            .map(|(l, z)| TrafficEntry { from: l.from, to: l.to, amount: fraction(z) })
            .collect()
    }
}

/// Max-flow from the stored data to a collector at `failed` plus `subset`.
/// Returns the flow value and the source side of a minimum cut (indexed by
/// node id; index 0 is the source).
fn collector_flow(sc: &RepairScenario, subset: &[usize], z: &Subgraph) -> (Q, Vec<bool>) {
    let n = sc.topology.n();
    let (src, sink) = (0, n + 1);
    let cap = sc.node_capacity();
    let mut fed: BTreeSet<usize> = sc.helpers.iter().copied().collect();
    fed.extend(subset.iter().copied());
    // larger than any finite cut
    let big = &cap * int(fed.len()) + Q::one();
    let mut net = FlowNetwork::new(n + 2);
    for &h in &fed {
        net.add_arc(src, h, cap.clone());
    }
    for (l, amount) in &z.traffic {
        if l.from != sc.failed {
            net.add_arc(l.from, l.to, amount.clone());
        }
    }
    for &x in subset.iter().chain(std::iter::once(&sc.failed)) {
        net.add_arc(x, sink, big.clone());
    }
    let f = net.max_flow(src, sink);
    (f.value, f.source_side)
}

/// Check every collector cut against the traffic `z`. Traffic on links that are
/// not in the topology makes the subgraph invalid.
pub fn validate_subgraph(sc: &RepairScenario, z: &Subgraph) -> bool {
    if z.traffic.iter().any(|(l, a)| a.is_negative() || !sc.topology.has_edge(l.from, l.to)) {
        return false;
    }
    let need = int(sc.m);
    enumerate_scenarios(sc).par_iter().all(|s| collector_flow(sc, s, z).0 >= need)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    /// Iteratively add violated min-cut constraints found by max-flow.
    #[default]
    CutGeneration,
    /// One LP with a flow-conservation block per collector subset.
    FlowConservation,
}

#[derive(Debug, Clone)]
pub struct BoundResult {
    pub lower_bound: Q,
    pub subgraph: Subgraph,
}

pub fn min_cost_lp(sc: &RepairScenario) -> Result<BoundResult> {
    min_cost_lp_with(sc, Formulation::default())
}

pub fn min_cost_lp_with(sc: &RepairScenario, form: Formulation) -> Result<BoundResult> {
    let links = sc.links();
    let res = match form {
        Formulation::CutGeneration => cut_generation(sc, &links)?,
        Formulation::FlowConservation => flow_lp(sc, &links)?,
    };
    debug_assert!(validate_subgraph(sc, &res.subgraph));
    Ok(res)
}

fn to_subgraph(links: &[DirectedLink], x: &[Q]) -> Subgraph {
    let traffic = links.iter().zip(x).filter(|(_, v)| !v.is_zero()).map(|(l, v)| (*l, v.clone())).collect();
    Subgraph { traffic }
}

const CUTS_PER_ROUND: usize = 32;

/// The master problem `min sum z` over the cuts found so far is solved through
/// its dual, a packing LP (one weight per cut, one `<= 1` row per link) that
/// warm-starts from the previous round's basis; the link traffic is read off
/// its row duals.
fn cut_generation(sc: &RepairScenario, links: &[DirectedLink]) -> Result<BoundResult> {
    let subsets = enumerate_scenarios(sc);
    let cap = sc.node_capacity();
    let need = int(sc.m);
    let mut master = PackingLp::new(vec![Q::one(); links.len()]);
    let mut known: BTreeSet<(Vec<usize>, Q)> = BTreeSet::new();
    loop {
        let sol = master.solve().map_err(|e| match e {
            Error::Unbounded => Error::Infeasible,
            e => e,
        })?;
        let x: Vec<Q> = sol.duals.into_iter().map(|v| -v).collect();
        let z = to_subgraph(links, &x);
        let mut found: Vec<(Q, Vec<usize>, Q)> = subsets
            .par_iter()
            .filter_map(|s| {
                let (value, side) = collector_flow(sc, s, &z);
                if value >= need {
                    return None;
                }
                let crossing: Vec<usize> = links
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| side[l.from] && !side[l.to])
                    .map(|(j, _)| j)
                    .collect();
                let mut fed: BTreeSet<usize> = sc.helpers.iter().copied().collect();
                fed.extend(s.iter().copied());
                let cut_sources = fed.iter().filter(|&&h| !side[h]).count();
                Some((&need - &value, crossing, &need - &cap * int(cut_sources)))
            })
            .collect();
        if found.is_empty() {
            return Ok(BoundResult { lower_bound: -sol.value, subgraph: z });
        }
        // a wide master is far slower than a few extra rounds
        found.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        found.dedup_by(|a, b| a.1 == b.1 && a.2 == b.2);
        found.truncate(CUTS_PER_ROUND.max(links.len()));
        let mut added = false;
        for (_, crossing, rhs) in found {
            if !rhs.is_positive() {
                continue;
            }
            if crossing.is_empty() {
                return Err(Error::Infeasible);
            }
            if known.insert((crossing.clone(), rhs.clone())) {
                master.add_column(crossing.into_iter().map(|j| (j, Q::one())).collect(), -rhs);
                added = true;
            }
        }
        if !added {
            // a violated cut that is already present means the master is inconsistent
            return Err(Error::Infeasible);
        }
    }
}

fn flow_lp(sc: &RepairScenario, links: &[DirectedLink]) -> Result<BoundResult> {
    let n = sc.topology.n();
    let nl = links.len();
    let cap = sc.node_capacity();
    let subsets = enumerate_scenarios(sc);
    let mut objective = vec![Q::one(); nl];
    let mut rows: Vec<(Vec<(usize, Q)>, Relation, Q)> = Vec::new();
    for s in &subsets {
        let base = objective.len();
        let mut fed: BTreeSet<usize> = sc.helpers.iter().copied().collect();
        fed.extend(s.iter().copied());
        let fed: Vec<usize> = fed.into_iter().collect();
        let sinks: Vec<usize> = s.iter().copied().chain(std::iter::once(sc.failed)).collect();
        // variable layout: source arcs, link arcs, sink arcs
        let v_src = |i: usize| base + i;
        let v_link = |j: usize| base + fed.len() + j;
        let v_sink = |i: usize| base + fed.len() + nl + i;
        objective.extend(std::iter::repeat_n(Q::zero(), fed.len() + nl + sinks.len()));
        for i in 0..fed.len() {
            rows.push((vec![(v_src(i), Q::one())], Relation::Le, cap.clone()));
        }
        for j in 0..nl {
            rows.push((vec![(v_link(j), Q::one()), (j, -Q::one())], Relation::Le, Q::zero()));
        }
        for u in 1..=n {
            let mut c: Vec<(usize, Q)> = Vec::new();
            if let Some(i) = fed.iter().position(|&h| h == u) {
                c.push((v_src(i), Q::one()));
            }
            for (j, l) in links.iter().enumerate() {
                if l.to == u {
                    c.push((v_link(j), Q::one()));
                }
                if l.from == u {
                    c.push((v_link(j), -Q::one()));
                }
            }
            if let Some(i) = sinks.iter().position(|&x| x == u) {
                c.push((v_sink(i), -Q::one()));
            }
            if !c.is_empty() {
                rows.push((c, Relation::Eq, Q::zero()));
            }
        }
        let total = (0..sinks.len()).map(|i| (v_sink(i), Q::one())).collect();
        rows.push((total, Relation::Ge, int(sc.m)));
    }
    let mut lp = LinearProgram::new(objective);
    for (c, rel, rhs) in rows {
        lp.add(c, rel, rhs);
    }
    let sol = lp.minimize()?;
    Ok(BoundResult { lower_bound: sol.value, subgraph: to_subgraph(links, &sol.x[..nl]) })
}
