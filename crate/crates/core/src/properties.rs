use proptest::prelude::*;

use crate::combin::{binomial, combinations, factorial};
use crate::homomorphism::{finner_bound_check, hom_block, quotient_hom_expectation};
use crate::hypergraph::RGraph;
use crate::norm::dual_norm_exact;
use crate::stats::binomial_upper_tail;
use crate::tails::{enumerate_counts, tail_exact_enum};
use crate::tensor::TensorJson;
use crate::{
    dual_norm_heuristic, hom_count, hom_signed, jay, lin_form, relent, DenseTensor, SignedRGraph, SymTensor,
    TailProblem, TestTensor, WeightedBase,
};

fn graph_strategy(max_edges: usize) -> impl Strategy<Value = RGraph> {
    (2usize..=3, 3usize..=6).prop_flat_map(move |(r, v)| {
        let all: Vec<Vec<usize>> = combinations(v, r);
        proptest::sample::subsequence(all.clone(), 1..=max_edges.min(all.len()))
            .prop_map(move |edges| RGraph::new(r, v, edges).unwrap())
    })
}

fn sym_strategy(n: usize, r: usize) -> impl Strategy<Value = SymTensor> {
    let len = binomial(n, r) as usize;
    proptest::collection::vec(-1.0f64..1.0, len).prop_map(move |v| SymTensor::from_values(n, r, v).unwrap())
}

fn weight_strategy(n: usize, r: usize) -> impl Strategy<Value = SymTensor> {
    let len = binomial(n, r) as usize;
    proptest::collection::vec(0.0f64..=1.0, len).prop_map(move |v| SymTensor::from_values(n, r, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_delta_prime_is_exact(h in graph_strategy(5)) {
        let cert = h.delta_prime().unwrap();
        prop_assert_eq!(cert.value, h.delta_prime_exhaustive().unwrap());
        for e in &cert.per_edge {
            prop_assert!(e.base.is_antichain());
            prop_assert!(e.base.is_dominating(&h));
        }
    }

    #[test]
    fn delta_prime_range(h in graph_strategy(6)) {
        let cert = h.delta_prime().unwrap();
        let r = h.r() as i64;
        let big = h.max_degree() as i64;
        prop_assert!(cert.value <= crate::Rational::from_integer(big + 1));
        prop_assert!(cert.value >= crate::Rational::new(big + 1, r));
        for e in &cert.per_edge {
            let local = e.base.edge.iter().map(|&v| h.degree(v)).max().unwrap() as i64;
            prop_assert!(e.value <= crate::Rational::from_integer(big + 1));
            prop_assert!(e.value >= crate::Rational::new(local + 1, r));
        }
    }

    #[test]
    fn dominated_boundary_identity(h in graph_strategy(8), u_mask in 1u32..64, b_mask in 0u32..64) {
        let v = h.num_vertices();
        let u: Vec<usize> = (0..v).filter(|&i| u_mask >> i & 1 == 1).take(h.r()).collect();
        prop_assume!(!u.is_empty());
        let b: Vec<usize> = u.iter().copied().enumerate().filter(|(k, _)| b_mask >> k & 1 == 1).map(|(_, x)| x).collect();
        let rest: Vec<usize> = u.iter().copied().filter(|x| !b.contains(x)).collect();
        let mut want: Vec<usize> = h.edge_boundary(&u).into_iter().filter(|e| !h.edge_boundary(&rest).contains(e)).collect();
        want.sort_unstable();
        let mut got = h.dominated_boundary(&u, &b).unwrap();
        got.sort_unstable();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn seminorm_axioms(x in sym_strategy(4, 2), y in sym_strategy(4, 2), c in -3.0f64..3.0) {
        let wb = WeightedBase::matrix(2).unwrap();
        let (dx, dy) = (x.to_dense(), y.to_dense());
        let mut s = dx.clone();
        s.axpy(1.0, &dy);
        let nx = dual_norm_exact(&dx, &wb, 0.5).unwrap().value;
        let ny = dual_norm_exact(&dy, &wb, 0.5).unwrap().value;
        prop_assert!(dual_norm_exact(&s, &wb, 0.5).unwrap().value <= nx + ny + 1e-12);
        let mut cx = dx.clone();
        cx.scale(c);
        let ncx = dual_norm_exact(&cx, &wb, 0.5).unwrap().value;
        prop_assert!((ncx - c.abs() * nx).abs() <= 1e-12 * (1.0 + nx));
        // ‖Z‖* ≤ ‖Z‖_∞ n^r / (n^r p^{d*})
        prop_assert!(nx <= dx.max_abs() / 0.5f64.powi(2) + 1e-12);
    }

    #[test]
    fn heuristic_never_exceeds_exact(x in sym_strategy(5, 2), seed in 0u64..1000) {
        let wb = WeightedBase::matrix(1).unwrap();
        let z = x.to_dense();
        let h = dual_norm_heuristic(&z, &wb, 0.3, 4, seed).unwrap();
        let e = dual_norm_exact(&z, &wb, 0.3).unwrap();
        prop_assert!(h.value <= e.value * (1.0 + 1e-12) + 1e-15);
        prop_assert!((h.recompute(&z, 0.3).unwrap() - h.value).abs() <= 1e-12 * (1.0 + h.value));
    }

    #[test]
    fn boolean_test_tensor_sizes(mask_i in 1u32..32, mask_j in 1u32..32, p in 0.05f64..1.0) {
        let n = 5;
        let wb = WeightedBase::matrix(2).unwrap();
        let fi: Vec<bool> = (0..n).map(|i| mask_i >> i & 1 == 1).collect();
        let fj: Vec<bool> = (0..n).map(|i| mask_j >> i & 1 == 1).collect();
        let t = TestTensor::new(n, wb, vec![vec![true], fi.clone(), fj.clone()]).unwrap();
        let d = t.to_dense();
        prop_assert_eq!(d.norm2_sq(), t.l1());
        prop_assert!(t.size(p) >= (n * n) as f64 * p.powi(2) * (1.0 - 1e-12));
        let (a, b) = (fi.iter().filter(|&&x| x).count() as f64, fj.iter().filter(|&&x| x).count() as f64);
        let n0 = n as f64 * p;
        prop_assert!((t.size(p) - a.max(n0) * b.max(n0)).abs() <= 1e-9 * t.size(p));
    }

    #[test]
    fn lin_form_with_jay(z in sym_strategy(5, 3)) {
        let j = jay(5, 3).unwrap().to_dense();
        let got = lin_form(&z.to_dense(), &j).unwrap();
        prop_assert!((got - factorial(3) as f64 * z.subset_sum()).abs() < 1e-9);
    }

    #[test]
    fn relent_nonnegative(q in weight_strategy(4, 2), p in 0.01f64..0.99) {
        prop_assert!(relent(p, &q).unwrap() >= -1e-12);
        prop_assert!(relent(p, &SymTensor::constant(4, 2, p).unwrap()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn finner_holds(z in weight_strategy(5, 2), which in 0usize..3) {
        let h = [RGraph::builtin("clique:3:2").unwrap(), RGraph::builtin("cycle:4").unwrap(), RGraph::builtin("path:3").unwrap()][which].clone();
        prop_assert!(finner_bound_check(&h, &z).unwrap().holds);
    }

    #[test]
    fn expectation_dominates_count(q in weight_strategy(4, 2), which in 0usize..3) {
        let h = [RGraph::builtin("clique:3:2").unwrap(), RGraph::builtin("cycle:4").unwrap(), RGraph::builtin("matching:2").unwrap()][which].clone();
        prop_assert!(quotient_hom_expectation(&h, &q).unwrap() >= hom_count(&h, &q).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn block_count_matches_direct(m in 1usize..5, vals in proptest::collection::vec(0.0f64..1.0, 3)) {
        let n = 5;
        let h = RGraph::builtin("cycle:4").unwrap();
        let q = SymTensor::from_fn(n, 2, |s| vals[s.iter().filter(|&&v| v < m).count()]).unwrap();
        let sh = SignedRGraph::all_positive(h.clone());
        let got = hom_block(&sh, &[m, n - m], &|labels| vals[labels.iter().filter(|&&l| l == 0).count()]);
        let want = hom_count(&h, &q).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want));
    }

    #[test]
    fn single_edge_tail_is_binomial(n in 2usize..=6, p in 0.05f64..0.95, delta in 0.05f64..3.0) {
        let k2 = RGraph::builtin("clique:2:2").unwrap();
        prop_assume!((1.0 + delta) * p <= 1.0);
        let pr = TailProblem::upper(&k2, n, p, delta).unwrap();
        let exact = tail_exact_enum(&pr).unwrap();
        let target = (1.0 + delta) * (n * n) as f64 * p;
        let m = (0..=binomial(n, 2) as usize).find(|&m| 2.0 * m as f64 >= target * (1.0 - 1e-12)).unwrap_or(usize::MAX);
        let want = if m == usize::MAX { 0.0 } else { binomial_upper_tail(binomial(n, 2) as usize, p, m) };
        prop_assert!((exact.prob - want).abs() <= 1e-12 + 1e-10 * want);
    }

    #[test]
    fn json_round_trips(h in graph_strategy(6), q in weight_strategy(4, 3)) {
        let text = serde_json::to_string(&h).unwrap();
        prop_assert_eq!(serde_json::from_str::<RGraph>(&text).unwrap(), h);
        let text = serde_json::to_string(&q.to_json()).unwrap();
        let back: TensorJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(SymTensor::from_json(&back).unwrap(), q);
        let wb = WeightedBase::maximal(3, 4, 2).unwrap();
        let text = serde_json::to_string(&wb).unwrap();
        prop_assert_eq!(serde_json::from_str::<WeightedBase>(&text).unwrap(), wb);
    }
}

#[test]
fn gray_code_counts_match_direct() {
    let h = RGraph::builtin("cycle:4").unwrap();
    let sh = SignedRGraph::complete_signing(&h);
    let graphs = vec![SignedRGraph::all_positive(h.clone()), sh.clone()];
    enumerate_counts(&graphs, 4, 2, |bits, counts| {
        let vals: Vec<f64> = (0..6).map(|i| (bits >> i & 1) as f64).collect();
        let a = SymTensor::from_values(4, 2, vals).unwrap();
        assert_eq!(counts[0], hom_count(&h, &a).unwrap());
        assert_eq!(counts[1], hom_signed(&sh, &vec![a.clone(); 6]).unwrap());
    })
    .unwrap();
}

#[test]
fn dense_round_trip_shape() {
    let d = DenseTensor::zeros(3, 2);
    assert_eq!(d.data.len(), 9);
}
