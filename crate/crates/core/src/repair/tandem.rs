//! Exact repair on a line: the k nearest survivors accumulate
//! `sum xi_i v_i = v_t` in two chains, one from each side of the failed node.

use std::collections::BTreeMap;

use super::{convergecast, Engine, RepairTranscript};
use crate::codebook::{CodeKind, StorageState};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::linalg::{CoeffVector, Matrix};

/// (k1, k2): helpers on the left and right of `t` when the k nearest survivors
/// are used, ties going left.
pub fn default_split(n: usize, k: usize, t: usize) -> Result<(usize, usize)> {
    if !(1..=n).contains(&t) {
        return Err(Error::NoSuchNode(t));
    }
    if k > n - 1 {
        return Err(Error::NoSplit(format!("k={k} exceeds the {} survivors", n - 1)));
    }
    let (mut k1, mut k2) = (0, 0);
    for _ in 0..k {
        let left_ok = k1 < t - 1;
        let right_ok = k2 < n - t;
        // next candidates are at distance k1+1 (left) and k2+1 (right)
        if left_ok && (!right_ok || k1 <= k2) {
            k1 += 1;
        } else {
            k2 += 1;
        }
    }
    Ok((k1, k2))
}

/// Coefficients xi with `sum_h xi_h G_h = G_t` for the given helpers.
pub(crate) fn repair_coefficients(
    evals: &[FieldElement],
    k: usize,
    helpers: &[usize],
    t: usize,
) -> Result<Vec<FieldElement>> {
    let f = evals[0].field();
    let col = |u: usize| -> Vec<u64> { (0..k as u64).map(|r| evals[u - 1].pow(r).value()).collect() };
    let rows: Vec<Vec<u64>> = (0..k).map(|r| helpers.iter().map(|&h| col(h)[r]).collect()).collect();
    let a = Matrix::from_rows(f, &rows)?;
    let b: Vec<FieldElement> = col(t).into_iter().map(|v| f.elem(v)).collect();
    a.solve(&b)
}

pub fn tandem_exact_repair(state: &StorageState, t: usize, split: Option<(usize, usize)>) -> Result<RepairTranscript> {
    let CodeKind::Tandem { evals } = state.kind() else {
        return Err(Error::Unsupported(format!("tandem repair needs a tandem code, got {}", state.kind().name())));
    };
    let p = state.params();
    let n = p.n;
    let (k1, k2) = match split {
        Some(s) => s,
        None => default_split(n, p.k, t)?,
    };
    if !(1..=n).contains(&t) {
        return Err(Error::NoSuchNode(t));
    }
    if k1 + k2 != p.k {
        return Err(Error::NoSplit(format!("k1 + k2 = {} but k = {}", k1 + k2, p.k)));
    }
    if k1 > t - 1 || k2 > n - t {
        return Err(Error::NoSplit(format!("({k1}, {k2}) does not fit around node {t} of {n}")));
    }
    let helpers: Vec<usize> = (t - k1..t).chain(t + 1..=t + k2).collect();
    let xi = repair_coefficients(evals, p.k, &helpers, t)?;
    let mut parent = BTreeMap::new();
    let mut contrib = BTreeMap::new();
    for (&h, c) in helpers.iter().zip(&xi) {
        parent.insert(h, if h < t { h + 1 } else { h - 1 });
        contrib.insert(h, vec![state.node(h)[0].scale(*c)]);
    }
    let zero = CoeffVector::zero(p.field, p.m);
    let (mut steps, recovered) = convergecast(t, &parent, &contrib, &zero, 1)?;
    // left chain first, then right chain, each in travel order
    steps.sort_by_key(|s| (s.from > t, if s.from < t { s.from } else { n - s.from }));
    Ok(RepairTranscript { engine: Engine::TandemExact, failed: t, steps, recovered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_tandem_code, tandem_code, SystemParams};
    use crate::field::PrimeField;
    use crate::repair::{replay, verify_exactness};
    use crate::topology::Topology;
    use proptest::prelude::*;

    #[test]
    fn splits() {
        assert_eq!(default_split(6, 3, 3).unwrap(), (2, 1));
        assert_eq!(default_split(6, 3, 1).unwrap(), (0, 3));
        assert_eq!(default_split(6, 3, 6).unwrap(), (3, 0));
        assert_eq!(default_split(5, 4, 2).unwrap(), (1, 3));
        assert_eq!(default_split(7, 2, 4).unwrap(), (1, 1));
        assert!(default_split(3, 3, 1).is_err());
    }

    #[test]
    fn example_six_three() {
        let st = tandem_code(6, 3).unwrap();
        let tr = tandem_exact_repair(&st, 3, Some((2, 1))).unwrap();
        let hops: Vec<(usize, usize)> = tr.steps.iter().map(|s| (s.from, s.to)).collect();
        assert_eq!(hops, vec![(1, 2), (2, 3), (4, 3)]);
        assert_eq!(tr.cost(), 3);
        assert!(verify_exactness(&st, 3, &tr));
        assert_eq!(replay(&st, &Topology::tandem(6).unwrap(), &tr), Ok(()));
    }

    #[test]
    fn end_node_uses_one_side() {
        let st = tandem_code(6, 3).unwrap();
        let tr = tandem_exact_repair(&st, 1, Some((0, 3))).unwrap();
        assert!(tr.steps.iter().all(|s| s.from > 1));
        assert_eq!(tr.cost(), 3);
        assert!(verify_exactness(&st, 1, &tr));
    }

    #[test]
    fn bad_splits() {
        let st = tandem_code(6, 3).unwrap();
        assert!(matches!(tandem_exact_repair(&st, 1, Some((1, 2))), Err(Error::NoSplit(_))));
        assert!(matches!(tandem_exact_repair(&st, 3, Some((1, 1))), Err(Error::NoSplit(_))));
        assert!(matches!(tandem_exact_repair(&st, 5, Some((0, 3))), Err(Error::NoSplit(_))));
    }

    #[test]
    fn every_instance_is_exact_at_cost_m() {
        for n in 3..=8 {
            for k in 2..n {
                let st = tandem_code(n, k).unwrap();
                let topo = Topology::tandem(n).unwrap();
                for t in 1..=n {
                    let tr = tandem_exact_repair(&st, t, None).unwrap();
                    assert_eq!(tr.cost(), k);
                    assert!(verify_exactness(&st, t, &tr), "n={n} k={k} t={t}");
                    assert_eq!(replay(&st, &topo, &tr), Ok(()));
                }
            }
        }
    }

    fn instance() -> impl Strategy<Value = (usize, usize, usize, usize, u64, Vec<u64>)> {
        (3usize..=8)
            .prop_flat_map(|n| (Just(n), 2..n, 1..=n, prop::sample::select(vec![11u64, 13, 17, 101])))
            .prop_flat_map(|(n, k, t, q)| {
                let lo = k.saturating_sub(n - t);
                let hi = k.min(t - 1);
                (Just(n), Just(k), Just(t), lo..=hi, Just(q), prop::sample::subsequence((1..q).collect::<Vec<_>>(), n))
            })
            .prop_flat_map(|(n, k, t, k1, q, pts)| (Just(n), Just(k), Just(t), Just(k1), Just(q), Just(pts).prop_shuffle()))
    }

    proptest! {
        #[test]
        fn any_fitting_split_is_exact((n, k, t, k1, q, pts) in instance()) {
            let f = PrimeField::new(q).unwrap();
            let evals: Vec<FieldElement> = pts.iter().map(|&v| f.elem(v)).collect();
            let st = build_tandem_code(SystemParams::new(n, k, k, f).unwrap(), &evals).unwrap();
            let tr = tandem_exact_repair(&st, t, Some((k1, k - k1))).unwrap();
            prop_assert_eq!(tr.cost(), k);
            prop_assert!(verify_exactness(&st, t, &tr));
            prop_assert_eq!(replay(&st, &Topology::tandem(n).unwrap(), &tr), Ok(()));
        }
    }
}
