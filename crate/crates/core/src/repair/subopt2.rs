//! Partner-parity baseline for the systematic grid code.
//!
//! The failed systematic node N (index t) gets two equations:
//!
//! * from its partner P1: `p1(P1) = m2_t + sum_u xi_{t,u} m1_u`; every other
//!   systematic node cancels its own `m1_u` term on the way, leaving
//!   `m2_t + xi_{t,t} m1_t`;
//! * from the partner P2 of the systematic node Q one row further down
//!   (cyclically): `p1(P2) = m2_{tQ} + sum_u xi_{tQ,u} m1_u`, cancelled by Q's
//!   whole content and the other systematic nodes, leaving `xi_{tQ,t} m1_t`.
//!
//! Traffic follows a shortest-path tree into N, except that P2 is routed
//! through Q. Each link carries a basis of whatever the two running sums of
//! its subtree span, so cancellations that complete inside a subtree cost
//! nothing further up.

use std::collections::BTreeMap;

use super::{unscale, Engine, RepairTranscript, Step};
use crate::codebook::{CodeKind, Role, StorageState};
use crate::error::{Error, Result};
use crate::linalg::{express_in_span, CoeffVector};
use crate::topology::Topology;

pub fn suboptimal2_repair(state: &StorageState, failed: usize) -> Result<RepairTranscript> {
    let CodeKind::GridGeneral { layout } = state.kind() else {
        return Err(Error::Unsupported(format!("subopt2 needs the systematic grid code, got {}", state.kind().name())));
    };
    let layout = *layout;
    let p = state.params();
    let (n, k) = (p.n, p.k);
    if !(1..=n).contains(&failed) {
        return Err(Error::NoSuchNode(failed));
    }
    if layout.role(failed) != Role::Systematic {
        return Err(Error::Unsupported(format!("node {failed} holds parity; subopt2 repairs systematic nodes")));
    }
    if layout.r() < 2 {
        return Err(Error::Unsupported("subopt2 needs at least two layout rows".into()));
    }
    let (rows, cols) = layout.dims();
    let topo = Topology::grid(rows, cols)?;

    let (i, j) = layout.coords(failed);
    let t = layout.t_index(failed).expect("systematic");
    let p1 = layout.partner(failed);
    let q = layout.node(i % layout.r() + 1, j);
    let p2 = layout.partner(q);

    // routing: BFS toward N, lowest-numbered next hop; P2 detours through Q
    let dist = topo.distances(failed);
    let mut parent: BTreeMap<usize, usize> = (1..=n)
        .filter(|&u| u != failed)
        .map(|u| {
            let d = dist[u].expect("grid is connected");
            (u, topo.neighbors(u).iter().copied().filter(|&v| dist[v] == Some(d - 1)).min().expect("bfs parent"))
        })
        .collect();
    let detour = topo.shortest_path(p2, q)?;
    for w in detour.windows(2) {
        parent.insert(w[0], w[1]);
    }
    let mut depth: BTreeMap<usize, usize> = BTreeMap::new();
    for &u in parent.keys() {
        let (mut v, mut d) = (u, 0);
        while v != failed {
            v = parent[&v];
            d += 1;
            if d > n {
                return Err(Error::Topology("routing tree has a cycle".into()));
            }
        }
        depth.insert(u, d);
    }

    let f = p.field;
    let m1 = |u: usize| state.node(u)[0].clone();
    let eq1 = m1(p1);
    let eq2 = m1(p2);
    let contrib = |u: usize| -> (CoeffVector, CoeffVector) {
        let zero = CoeffVector::zero(f, p.m);
        if u == p1 {
            return (eq1.clone(), zero);
        }
        if u == p2 {
            return (zero, eq2.clone());
        }
        if u == failed || layout.role(u) != Role::Systematic {
            return (zero.clone(), zero);
        }
        let tu = layout.t_index(u).expect("systematic") - 1;
        let c1 = m1(u).scale(-eq1.get(tu));
        let mut c2 = m1(u).scale(-eq2.get(tu));
        if u == q {
            c2 = c2.sub(&state.node(u)[1]);
        }
        (c1, c2)
    };

    let mut order: Vec<(usize, usize)> = depth.iter().map(|(&u, &d)| (d, u)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut sums: BTreeMap<usize, (CoeffVector, CoeffVector)> = BTreeMap::new();
    let mut steps = Vec::new();
    for (_, u) in order {
        let (mut c1, mut c2) = contrib(u);
        if let Some((a, b)) = sums.remove(&u) {
            c1 = c1.add(&a);
            c2 = c2.add(&b);
        }
        let payload = if c1.is_zero() {
            if c2.is_zero() { vec![] } else { vec![c2.clone()] }
        } else if express_in_span(&[&c1], &c2).is_some() {
            vec![c1.clone()]
        } else {
            vec![c1.clone(), c2.clone()]
        };
        let up = parent[&u];
        let slot = sums.entry(up).or_insert_with(|| (CoeffVector::zero(f, p.m), CoeffVector::zero(f, p.m)));
        slot.0 = slot.0.add(&c1);
        slot.1 = slot.1.add(&c2);
        if !payload.is_empty() {
            steps.push(Step { from: u, to: up, payload });
        }
    }
    let (e1, e2) = sums.remove(&failed).ok_or(Error::ResidualInterference(failed))?;
    let a1 = unscale(&e2, &CoeffVector::unit(f, p.m, t - 1), failed)?;
    let a2 = e1.sub(&a1.scale(e1.get(t - 1)));
    if a2 != CoeffVector::unit(f, p.m, k + t - 1) {
        return Err(Error::ResidualInterference(failed));
    }
    Ok(RepairTranscript { engine: Engine::Suboptimal2, failed, steps, recovered: vec![a1, a2] })
}
