//! Exact max-flow (Edmonds-Karp) on rational capacities.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use super::simplex::Q;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: Q,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

pub struct MaxFlow {
    pub value: Q,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { arcs: Vec::new(), out: vec![Vec::new(); nodes] }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: Q) {
        if !cap.is_positive() {
            return;
        }
        self.out[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.out[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: Q::zero() });
    }

    pub fn max_flow(mut self, s: usize, t: usize) -> MaxFlow {
        let n = self.out.len();
        let mut value = Q::zero();
        loop {
            let mut prev: Vec<Option<usize>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &a in &self.out[u] {
                    let v = self.arcs[a].to;
                    if !seen[v] && self.arcs[a].cap.is_positive() {
                        seen[v] = true;
                        prev[v] = Some(a);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return MaxFlow { value, source_side: seen_from(&self, s) };
            }
            let mut path = Vec::new();
            let mut v = t;
            while let Some(a) = prev[v] {
                path.push(a);
                v = self.arcs[a ^ 1].to;
            }
            let push = path.iter().map(|&a| self.arcs[a].cap.clone()).min().expect("nonempty path");
            for &a in &path {
                self.arcs[a].cap -= &push;
                self.arcs[a ^ 1].cap += &push;
            }
            value += push;
        }
    }
}

fn seen_from(net: &FlowNetwork, s: usize) -> Vec<bool> {
    let mut seen = vec![false; net.out.len()];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for &a in &net.out[u] {
            let v = net.arcs[a].to;
            if !seen[v] && net.arcs[a].cap.is_positive() {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}
