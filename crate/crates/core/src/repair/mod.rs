//! Repair protocols, executed symbolically.
//!
//! Every engine returns a [`RepairTranscript`]: the ordered transmissions with
//! their payloads as coefficient vectors, and the fragments assembled at the
//! new node. [`replay`] re-checks a transcript hop by hop; [`verify_exactness`]
//! compares what was rebuilt with what was lost.

pub mod grid2x3;
pub mod method3;
pub mod subopt1;
pub mod subopt2;
pub mod tandem;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::Serialize;

use crate::bound::simplex::Q;
use crate::bound::Subgraph;
use crate::codebook::StorageState;
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::linalg::{express_in_span, CoeffVector};
use crate::topology::{DirectedLink, Topology};

pub use grid2x3::grid_2x3_exact_repair;
pub use method3::{method3_baseline, Method3Helpers};
pub use subopt1::suboptimal1_repair;
pub use subopt2::suboptimal2_repair;
pub use tandem::{default_split, tandem_exact_repair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Engine {
    #[serde(rename = "tandem")]
    TandemExact,
    #[serde(rename = "grid2x3")]
    GridExact2x3,
    #[serde(rename = "subopt1")]
    Suboptimal1,
    #[serde(rename = "subopt2")]
    Suboptimal2,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::TandemExact, Engine::GridExact2x3, Engine::Suboptimal1, Engine::Suboptimal2];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::TandemExact => "tandem",
            Engine::GridExact2x3 => "grid2x3",
            Engine::Suboptimal1 => "subopt1",
            Engine::Suboptimal2 => "subopt2",
        }
    }

    /// Engines whose cost is claimed to meet the cut-set bound.
    pub fn claims_optimal(&self) -> bool {
        matches!(self, Engine::TandemExact | Engine::GridExact2x3)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Engine> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown engine {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub from: usize,
    pub to: usize,
    pub payload: Vec<CoeffVector>,
}

impl Step {
    pub fn link(&self) -> DirectedLink {
        DirectedLink::new(self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairTranscript {
    pub engine: Engine,
    pub failed: usize,
    pub steps: Vec<Step>,
    pub recovered: Vec<CoeffVector>,
}

impl RepairTranscript {
    /// Fragment-hops: one unit per payload vector per step.
    pub fn cost(&self) -> usize {
        self.steps.iter().map(|s| s.payload.len()).sum()
    }

    /// Traffic per directed link.
    pub fn traffic(&self) -> Subgraph {
        let mut t: BTreeMap<DirectedLink, Q> = BTreeMap::new();
        for s in &self.steps {
            *t.entry(s.link()).or_default() += Q::from_integer(BigInt::from(s.payload.len()));
        }
        Subgraph { traffic: t }
    }
}

/// Does the new node end up with exactly the failed node's fragments?
pub fn verify_exactness(state: &StorageState, failed: usize, tr: &RepairTranscript) -> bool {
    (1..=state.params().n).contains(&failed) && tr.recovered.as_slice() == state.node(failed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CausalityViolation {
    NotALink { step: usize, link: DirectedLink },
    WrongLength { step: usize },
    NotDerivable { step: usize, from: usize, index: usize },
    RecoveredNotDerivable { index: usize },
}

impl fmt::Display for CausalityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CausalityViolation::NotALink { step, link } => write!(f, "step {step}: {link} is not a network link"),
            CausalityViolation::WrongLength { step } => write!(f, "step {step}: payload of wrong length"),
            CausalityViolation::NotDerivable { step, from, index } => {
                write!(f, "step {step}: payload {index} is not computable at node {from}")
            }
            CausalityViolation::RecoveredNotDerivable { index } => {
                write!(f, "recovered fragment {index} is not computable at the new node")
            }
        }
    }
}

/// Replay a transcript: each payload must be a linear combination of what its
/// sender stores plus what it has received earlier in the transcript. The new
/// node starts empty.
pub fn replay(state: &StorageState, topology: &Topology, tr: &RepairTranscript) -> std::result::Result<(), CausalityViolation> {
    let n = state.params().n;
    let m = state.params().m;
    let mut known: Vec<Vec<CoeffVector>> = (0..=n)
        .map(|u| if u == 0 || u == tr.failed { Vec::new() } else { state.node(u).to_vec() })
        .collect();
    for (i, step) in tr.steps.iter().enumerate() {
        if !topology.has_edge(step.from, step.to) || step.from > n || step.to > n {
            return Err(CausalityViolation::NotALink { step: i, link: step.link() });
        }
        let basis: Vec<&CoeffVector> = known[step.from].iter().collect();
        for (j, v) in step.payload.iter().enumerate() {
            if v.len() != m || v.field() != state.field() {
                return Err(CausalityViolation::WrongLength { step: i });
            }
            if express_in_span(&basis, v).is_none() {
                return Err(CausalityViolation::NotDerivable { step: i, from: step.from, index: j });
            }
        }
        known[step.to].extend(step.payload.iter().cloned());
    }
    let basis: Vec<&CoeffVector> = known[tr.failed].iter().collect();
    for (j, v) in tr.recovered.iter().enumerate() {
        if express_in_span(&basis, v).is_none() {
            return Err(CausalityViolation::RecoveredNotDerivable { index: j });
        }
    }
    Ok(())
}

/// Convergecast along a tree rooted at the new node.
///
/// `parent` maps each transmitting node to its next hop; every node sends once,
/// after all of its children, the sum of its own contribution and what its
/// children sent. Contributions are lists of `width` vectors (one per stripe).
pub(crate) fn convergecast(
    root: usize,
    parent: &BTreeMap<usize, usize>,
    contributions: &BTreeMap<usize, Vec<CoeffVector>>,
    zero: &CoeffVector,
    width: usize,
) -> Result<(Vec<Step>, Vec<CoeffVector>)> {
    let depth = |mut u: usize| -> Result<usize> {
        let mut d = 0;
        while u != root {
            u = *parent.get(&u).ok_or(Error::NoSuchNode(u))?;
            d += 1;
            if d > parent.len() + 1 {
                return Err(Error::Topology("routing tree has a cycle".into()));
            }
        }
        Ok(d)
    };
    let mut order: Vec<(usize, usize)> = Vec::new();
    for &u in parent.keys() {
        order.push((depth(u)?, u));
    }
    // deepest first, so children always send before their parent
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut acc: BTreeMap<usize, Vec<CoeffVector>> = BTreeMap::new();
    let mut steps = Vec::new();
    for (_, u) in order {
        let mut sum = acc.remove(&u).unwrap_or_else(|| vec![zero.clone(); width]);
        if let Some(own) = contributions.get(&u) {
            for (s, v) in sum.iter_mut().zip(own) {
                *s = s.add(v);
            }
        }
        let p = parent[&u];
        let slot = acc.entry(p).or_insert_with(|| vec![zero.clone(); width]);
        for (s, v) in slot.iter_mut().zip(&sum) {
            *s = s.add(v);
        }
        steps.push(Step { from: u, to: p, payload: sum });
    }
    let at_root = acc.remove(&root).unwrap_or_else(|| vec![zero.clone(); width]);
    Ok((steps, at_root))
}

/// Scale `v` so that it equals `target`, given `v = c * target` for a nonzero c.
pub(crate) fn unscale(v: &CoeffVector, target: &CoeffVector, at: usize) -> Result<CoeffVector> {
    let idx = (0..target.len()).find(|&i| !target.get(i).is_zero()).ok_or(Error::ResidualInterference(at))?;
    let c: FieldElement = v.get(idx);
    if c.is_zero() {
        return Err(Error::ResidualInterference(at));
    }
    let out = v.scale(c.inv()?);
    if &out != target {
        return Err(Error::ResidualInterference(at));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::tandem_code;
    use crate::field::PrimeField;

    #[test]
    fn engine_names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.name().parse::<Engine>().unwrap(), e);
        }
        assert!("nope".parse::<Engine>().is_err());
    }

    #[test]
    fn convergecast_on_a_path() {
        let f = PrimeField::new(7).unwrap();
        let z = CoeffVector::zero(f, 3);
        let parent = BTreeMap::from([(1, 2), (2, 3)]);
        let contrib = BTreeMap::from([(1, vec![CoeffVector::unit(f, 3, 0)]), (2, vec![CoeffVector::unit(f, 3, 1)])]);
        let (steps, root) = convergecast(3, &parent, &contrib, &z, 1).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!((steps[0].from, steps[0].to), (1, 2));
        assert_eq!(root[0].values(), &[1, 1, 0]);
        let cyclic = BTreeMap::from([(1, 2), (2, 1)]);
        assert!(convergecast(3, &cyclic, &contrib, &z, 1).is_err());
    }

    #[test]
    fn replay_catches_forged_payloads() {
        let st = tandem_code(4, 2).unwrap();
        let topo = Topology::tandem(4).unwrap();
        let f = st.field();
        // node 3 cannot send node 1's fragment before hearing from it
        let tr = RepairTranscript {
            engine: Engine::TandemExact,
            failed: 2,
            steps: vec![Step { from: 3, to: 2, payload: vec![st.node(1)[0].clone()] }],
            recovered: vec![st.node(2)[0].clone()],
        };
        assert_eq!(replay(&st, &topo, &tr), Err(CausalityViolation::NotDerivable { step: 0, from: 3, index: 0 }));
        let tr = RepairTranscript {
            steps: vec![Step { from: 1, to: 3, payload: vec![CoeffVector::zero(f, 2)] }],
            ..tr
        };
        assert!(matches!(replay(&st, &topo, &tr), Err(CausalityViolation::NotALink { .. })));
    }
}
