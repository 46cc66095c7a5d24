//! Nearest-helper baseline: the k survivors closest to the failed node each
//! scale their fragments by the repair coefficients and the sums travel up a
//! shortest-path tree. Every stripe costs one unit per helper, so the total is
//! always M.

use std::collections::BTreeMap;

use super::tandem::repair_coefficients;
use super::{convergecast, Engine, RepairTranscript};
use crate::codebook::{CodeKind, StorageState};
use crate::error::{Error, Result};
use crate::linalg::CoeffVector;
use crate::topology::Topology;

/// Survivors ordered by (hop distance, id), truncated to `count`, with the
/// BFS parent of each (lowest-numbered neighbour one hop closer).
pub(crate) fn nearest_with_parents(topology: &Topology, failed: usize, count: usize) -> Result<Vec<(usize, usize)>> {
    let dist = topology.distances(failed);
    let mut order: Vec<(usize, usize)> = topology
        .nodes()
        .filter(|&u| u != failed)
        .map(|u| dist[u].map(|d| (d, u)).ok_or_else(|| Error::Topology(format!("node {u} unreachable"))))
        .collect::<Result<_>>()?;
    order.sort_unstable();
    order.truncate(count);
    order
        .into_iter()
        .map(|(d, u)| {
            let p = topology.neighbors(u).iter().copied().filter(|&v| dist[v] == Some(d - 1)).min().expect("bfs parent");
            Ok((u, p))
        })
        .collect()
}

pub fn suboptimal1_repair(state: &StorageState, topology: &Topology, failed: usize) -> Result<RepairTranscript> {
    let evals = match state.kind() {
        CodeKind::Tandem { evals } | CodeKind::Striped { evals } => evals,
        other => return Err(Error::Unsupported(format!("subopt1 needs a Vandermonde code, got {}", other.name()))),
    };
    let p = state.params();
    if topology.n() != p.n {
        return Err(Error::Topology(format!("topology has {} nodes, code has {}", topology.n(), p.n)));
    }
    if !topology.contains(failed) {
        return Err(Error::NoSuchNode(failed));
    }
    let tree = nearest_with_parents(topology, failed, p.k)?;
    let helpers: Vec<usize> = tree.iter().map(|&(u, _)| u).collect();
    let xi = repair_coefficients(evals, p.k, &helpers, failed)?;
    let parent: BTreeMap<usize, usize> = tree.into_iter().collect();
    let contrib: BTreeMap<usize, Vec<CoeffVector>> = helpers
        .iter()
        .zip(&xi)
        .map(|(&h, c)| (h, state.node(h).iter().map(|v| v.scale(*c)).collect()))
        .collect();
    let zero = CoeffVector::zero(p.field, p.m);
    let (steps, recovered) = convergecast(failed, &parent, &contrib, &zero, p.alpha())?;
    Ok(RepairTranscript { engine: Engine::Suboptimal1, failed, steps, recovered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{striped_grid_code, tandem_code};
    use crate::repair::{replay, tandem_exact_repair, verify_exactness};

    #[test]
    fn nearest_helpers_on_grid() {
        let topo = Topology::grid(2, 3).unwrap();
        assert_eq!(nearest_with_parents(&topo, 1, 3).unwrap(), vec![(2, 1), (4, 1), (3, 2)]);
        assert_eq!(nearest_with_parents(&topo, 5, 3).unwrap(), vec![(2, 5), (4, 5), (6, 5)]);
    }

    #[test]
    fn costs_m_on_every_grid_node() {
        for (r, s) in [(2, 2), (2, 3), (2, 4), (3, 4)] {
            let st = striped_grid_code(r, s).unwrap();
            let topo = Topology::grid(r, s).unwrap();
            for t in 1..=r * s {
                let tr = suboptimal1_repair(&st, &topo, t).unwrap();
                assert_eq!(tr.cost(), st.params().m, "{r}x{s} node {t}");
                assert!(verify_exactness(&st, t, &tr));
                assert_eq!(replay(&st, &topo, &tr), Ok(()));
            }
        }
    }

    #[test]
    fn matches_tandem_engine_on_a_line() {
        let st = tandem_code(7, 3).unwrap();
        let topo = Topology::tandem(7).unwrap();
        for t in 1..=7 {
            let a = suboptimal1_repair(&st, &topo, t).unwrap();
            let b = tandem_exact_repair(&st, t, None).unwrap();
            assert_eq!(a.recovered, b.recovered);
            assert_eq!(a.traffic(), b.traffic());
        }
    }
}
