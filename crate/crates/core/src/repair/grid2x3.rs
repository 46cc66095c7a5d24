//! Scripted exact repair of the systematic nodes of the 2x3 grid code.
//!
//! Layout (node ids):
//!
//! ```text
//!   1 - 2 - 3      parities p_i1, p_i2
//!   |   |   |
//!   4 - 5 - 6      (a1,a2) (b1,b2) (c1,c2)
//! ```
//!
//! The middle parity p21 carries `rho_2 b2` as interference; node 5 strips it
//! (and everything else it knows) to isolate the one missing first-stripe
//! fragment, then forwards it with a partial sum that lets the new node cancel
//! its neighbour parity down to its own second fragment. Five fragment-hops in
//! each case.

use super::{unscale, Engine, RepairTranscript, Step};
use crate::codebook::{CodeKind, StorageState};
use crate::error::{Error, Result};
use crate::linalg::CoeffVector;

// message coordinates
const A1: usize = 0;
const B1: usize = 1;
const C1: usize = 2;
const A2: usize = 3;
const B2: usize = 4;
const C2: usize = 5;

/// Zero every coordinate outside `coords`.
fn keep(v: &CoeffVector, coords: &[usize]) -> CoeffVector {
    let vals: Vec<u64> = (0..v.len()).map(|i| if coords.contains(&i) { v.values()[i] } else { 0 }).collect();
    CoeffVector::from_values(v.field(), &vals)
}

/// `v` minus its component on known unit fragments.
fn strip(v: &CoeffVector, known: &[usize]) -> CoeffVector {
    v.sub(&keep(v, known))
}

pub fn grid_2x3_exact_repair(state: &StorageState, failed: usize) -> Result<RepairTranscript> {
    if !matches!(state.kind(), CodeKind::Grid2x3 { .. }) {
        return Err(Error::Unsupported(format!("grid2x3 repair needs the 2x3 code, got {}", state.kind().name())));
    }
    let f = state.field();
    let unit = |i| CoeffVector::unit(f, 6, i);
    let p = |i: usize, j: usize| state.node(i)[j - 1].clone();
    let coef = |v: &CoeffVector, i: usize| v.get(i);
    let step = |from, to, payload| Step { from, to, payload };

    let (steps, recovered) = match failed {
        6 => {
            let p21 = p(2, 1);
            let c1 = unscale(&strip(&p21, &[A1, B1, B2]), &unit(C1), 5)?;
            let partial = keep(&p(3, 1), &[A1, B1]);
            let p31 = p(3, 1);
            let c2 = unscale(&p31.sub(&partial).sub(&c1.scale(coef(&p31, C1))), &unit(C2), 6)?;
            (
                vec![
                    step(4, 5, vec![unit(A1)]),
                    step(2, 5, vec![p21]),
                    step(5, 6, vec![c1.clone(), partial]),
                    step(3, 6, vec![p31]),
                ],
                vec![c1, c2],
            )
        }
        4 => {
            let p21 = p(2, 1);
            let a1 = unscale(&strip(&p21, &[B1, C1, B2]), &unit(A1), 5)?;
            let partial = keep(&p(1, 1), &[B1, C1]);
            let p11 = p(1, 1);
            let a2 = unscale(&p11.sub(&partial).sub(&a1.scale(coef(&p11, A1))), &unit(A2), 4)?;
            (
                vec![
                    step(6, 5, vec![unit(C1)]),
                    step(2, 5, vec![p21]),
                    step(5, 4, vec![a1.clone(), partial]),
                    step(1, 4, vec![p11]),
                ],
                vec![a1, a2],
            )
        }
        5 => {
            let p31 = p(3, 1);
            // node 6 removes its own terms from p31, leaving xi_31 a1 + xi_32 b1
            let partial = keep(&p31, &[A1, B1]);
            let b1 = unscale(&partial.sub(&unit(A1).scale(coef(&partial, A1))), &unit(B1), 5)?;
            let p21 = p(2, 1);
            let rest = p21.sub(&keep(&p21, &[A1, B1, C1]));
            let b2 = unscale(&rest, &unit(B2), 5)?;
            (
                vec![
                    step(3, 6, vec![p31]),
                    step(6, 5, vec![partial, unit(C1)]),
                    step(4, 5, vec![unit(A1)]),
                    step(2, 5, vec![p21]),
                ],
                vec![b1, b2],
            )
        }
        1..=3 => return Err(Error::Unsupported(format!("node {failed} holds parity; only nodes 4, 5, 6 are scripted"))),
        _ => return Err(Error::NoSuchNode(failed)),
    };
    Ok(RepairTranscript { engine: Engine::GridExact2x3, failed, steps, recovered })
}
