//! Homomorphism, multilinear, signed and induced counts; counting-lemma and Finner checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BaseSystem;
use crate::combin::{falling, for_each_partition};
use crate::error::{Error, Result};
use crate::hypergraph::{RGraph, SignedRGraph};
use crate::norm::{system_norm, NormMode};
use crate::stats::derive_seed;
use crate::tensor::{ErModel, SymTensor};

/// Vertex order and the edges completed at each depth.
pub(crate) struct Plan {
    pub order: Vec<usize>,
    pub checks: Vec<Vec<usize>>,
}

pub(crate) fn plan(h: &RGraph) -> Plan {
    let v = h.num_vertices();
    let mut placed = vec![false; v];
    let mut order = Vec::with_capacity(v);
    for _ in 0..v {
        let score = |x: usize| -> (usize, usize) {
            let touching = h.edges().iter().filter(|e| e.contains(&x) && e.iter().any(|&y| placed[y])).count();
            (touching, h.degree(x))
        };
        let next = (0..v).filter(|&x| !placed[x]).max_by_key(|&x| (score(x), std::cmp::Reverse(x))).expect("unplaced");
        placed[next] = true;
        order.push(next);
    }
    let mut pos = vec![0; v];
    for (k, &x) in order.iter().enumerate() {
        pos[x] = k;
    }
    let mut checks = vec![Vec::new(); v];
    for (i, e) in h.edges().iter().enumerate() {
        let last = e.iter().map(|&x| pos[x]).max().expect("nonempty edge");
        checks[last].push(i);
    }
    Plan { order, checks }
}

/// Σ over maps φ: V(H) → [n] of Π_e val(e, φ(e)); `val` sees the ordered image tuple.
pub(crate) fn hom_generic<F>(h: &RGraph, n: usize, injective: bool, val: F) -> f64
where
    F: Fn(usize, &[usize]) -> f64 + Sync,
{
    let pl = plan(h);
    let v = h.num_vertices();
    if v == 0 {
        return 1.0;
    }
    let r = h.r();
    // parallelize over the image of the first vertex
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut phi = vec![usize::MAX; v];
            let mut img = vec![0usize; r];
            phi[pl.order[0]] = first;
            let w = first_weight(h, &pl, &val, &phi, &mut img);
            rec(1, h, &pl, n, injective, &val, &mut phi, &mut img, w)
        })
        .sum()
}

fn first_weight<F: Fn(usize, &[usize]) -> f64>(
    h: &RGraph,
    pl: &Plan,
    val: &F,
    phi: &[usize],
    img: &mut [usize],
) -> f64 {
    let mut w = 1.0;
    for &ei in &pl.checks[0] {
        for (slot, &x) in img.iter_mut().zip(&h.edges()[ei]) {
            *slot = phi[x];
        }
        w *= val(ei, img);
    }
    w
}

#[allow(clippy::too_many_arguments)]
fn rec<F: Fn(usize, &[usize]) -> f64>(
    depth: usize,
    h: &RGraph,
    pl: &Plan,
    n: usize,
    injective: bool,
    val: &F,
    phi: &mut [usize],
    img: &mut [usize],
    acc: f64,
) -> f64 {
    if acc == 0.0 {
        return 0.0;
    }
    if depth == pl.order.len() {
        return acc;
    }
    let x = pl.order[depth];
    let mut total = 0.0;
    for i in 0..n {
        if injective && pl.order[..depth].iter().any(|&y| phi[y] == i) {
            continue;
        }
        phi[x] = i;
        let mut w = acc;
        for &ei in &pl.checks[depth] {
            for (slot, &y) in img.iter_mut().zip(&h.edges()[ei]) {
                *slot = phi[y];
            }
            w *= val(ei, img);
            if w == 0.0 {
                break;
            }
        }
        if w != 0.0 {
            total += rec(depth + 1, h, pl, n, injective, val, phi, img, w);
        }
    }
    phi[x] = usize::MAX;
    total
}

fn check_shape(h: &RGraph, s: &SymTensor) -> Result<()> {
    if h.r() != s.r() {
        return Err(Error::ShapeMismatch(format!("graph has r={}, tensor has r={}", h.r(), s.r())));
    }
    Ok(())
}

/// hom(H, S).
pub fn hom_count(h: &RGraph, s: &SymTensor) -> Result<f64> {
    check_shape(h, s)?;
    Ok(hom_generic(h, s.n(), false, |_, t| s.get(t)))
}

/// Injective homomorphisms.
pub fn inj_hom_count(h: &RGraph, s: &SymTensor) -> Result<f64> {
    check_shape(h, s)?;
    Ok(hom_generic(h, s.n(), true, |_, t| s.get(t)))
}

pub fn t_density(h: &RGraph, s: &SymTensor) -> Result<f64> {
    Ok(hom_count(h, s)? / (s.n() as f64).powi(h.num_vertices() as i32))
}

pub fn tp_density(h: &RGraph, s: &SymTensor, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::Parameter("p must be positive".into()));
    }
    Ok(t_density(h, s)? / p.powi(h.num_edges() as i32))
}

fn check_assignment(h: &RGraph, tensors: &[SymTensor]) -> Result<usize> {
    if tensors.len() != h.num_edges() {
        return Err(Error::ShapeMismatch(format!("{} tensors for {} edges", tensors.len(), h.num_edges())));
    }
    let n = match tensors.first() {
        Some(t) => {
            check_shape(h, t)?;
            t.n()
        }
        None => h.num_vertices(),
    };
    for t in tensors {
        if t.n() != n || t.r() != h.r() {
            return Err(Error::ShapeMismatch("edge tensors differ in shape".into()));
        }
    }
    Ok(n)
}

/// Σ_φ Π_e S^e(φ(e)).
pub fn hom_multilinear(h: &RGraph, tensors: &[SymTensor]) -> Result<f64> {
    let n = check_assignment(h, tensors)?;
    Ok(hom_generic(h, n, false, |ei, t| tensors[ei].get(t)))
}

/// Signed count with negative edges weighted by J − S (zero on repeated coordinates).
pub fn hom_signed(sh: &SignedRGraph, tensors: &[SymTensor]) -> Result<f64> {
    let n = check_assignment(&sh.graph, tensors)?;
    Ok(hom_generic(&sh.graph, n, false, |ei, t| {
        let s = &tensors[ei];
        match s.index().rank_tuple(t) {
            None => 0.0,
            Some(k) => {
                if sh.signs[ei] > 0 {
                    s.get_rank(k)
                } else {
                    1.0 - s.get_rank(k)
                }
            }
        }
    }))
}

/// The family S̃: S on positive edges, J − S on negative edges.
pub fn tilde(sh: &SignedRGraph, tensors: &[SymTensor]) -> Vec<SymTensor> {
    tensors
        .iter()
        .zip(&sh.signs)
        .map(|(t, &s)| if s > 0 { t.clone() } else { t.map(|x| 1.0 - x) })
        .collect()
}

/// Induced homomorphism count of H in Q.
pub fn induced_hom(h: &RGraph, q: &SymTensor) -> Result<f64> {
    check_shape(h, q)?;
    if h.num_vertices() < h.r() {
        return Err(Error::Parameter("induced count needs v(H) ≥ r".into()));
    }
    let sh = SignedRGraph::complete_signing(h);
    let tensors = vec![q.clone(); sh.graph.num_edges()];
    hom_signed(&sh, &tensors)
}

/// C(0,r) = 0, C(m,r) = m 2^r (1 + C(m−1,r)).
pub fn counting_constant(m: usize, r: usize) -> f64 {
    (1..=m).fold(0.0, |c, k| k as f64 * 2f64.powi(r as i32) * (1.0 + c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinnerReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// n^{−v} hom(H,Z) ≤ (n^{−r} Σ_ordered Z^Δ)^{e/Δ}.
pub fn finner_bound_check(h: &RGraph, z: &SymTensor) -> Result<FinnerReport> {
    check_shape(h, z)?;
    if z.values().iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidTensor("Finner check needs a nonnegative tensor".into()));
    }
    let delta = h.max_degree();
    if delta == 0 {
        return Err(Error::Parameter("Finner check needs Δ ≥ 1".into()));
    }
    let n = z.n() as f64;
    let lhs = hom_count(h, z)? / n.powi(h.num_vertices() as i32);
    let ordered: f64 = z.values().iter().map(|x| x.powi(delta as i32)).sum::<f64>()
        * crate::combin::factorial(h.r()) as f64;
    let rhs = (ordered / n.powi(h.r() as i32)).powf(h.num_edges() as f64 / delta as f64);
    Ok(FinnerReport { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) })
}

/// Exact E_Q hom(H, A) for A ~ μ_Q.
pub fn quotient_hom_expectation(h: &RGraph, q: &SymTensor) -> Result<f64> {
    check_shape(h, q)?;
    q.check_weight()?;
    let cap = crate::hypergraph::DEFAULT_QUOTIENT_CAP;
    if h.num_vertices() > cap {
        return Err(Error::CapExceeded { vertices: h.num_vertices(), cap });
    }
    let mut total = 0.0;
    let mut err = None;
    for_each_partition(h.num_vertices(), |map, blocks| {
        if err.is_some() {
            return;
        }
        if let Some(g) = h.image(map, blocks) {
            match inj_hom_count(&g, q) {
                Ok(v) => total += v,
                Err(e) => err = Some(e),
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Number of maps V(H) → [n] that are injective on every edge.
pub fn edge_injective_maps(h: &RGraph, n: usize) -> f64 {
    let mut total = 0.0;
    for_each_partition(h.num_vertices(), |map, blocks| {
        if h.image(map, blocks).is_some() {
            total += falling(n, blocks);
        }
    });
    total
}

/// Exact hom for a tensor constant on blocks: vertex `i` of block `b` for `sizes[b]` vertices,
/// with `f(labels)` the value on an r-set whose sorted block labels are `labels`.
pub fn hom_block(sh: &SignedRGraph, sizes: &[usize], f: &dyn Fn(&[usize]) -> f64) -> f64 {
    let h = &sh.graph;
    let nb = sizes.len();
    let mut total = 0.0;
    for_each_partition(h.num_vertices(), |map, m| {
        if h.image(map, m).is_none() {
            return;
        }
        let mut labels = vec![0usize; m];
        let mut counts = vec![0usize; nb];
        let mut buf = vec![0usize; h.r()];
        loop {
            counts.iter_mut().for_each(|c| *c = 0);
            labels.iter().for_each(|&l| counts[l] += 1);
            let mult: f64 = counts.iter().zip(sizes).map(|(&c, &s)| falling(s, c)).product();
            if mult > 0.0 {
                let mut w = mult;
                for (ei, e) in h.edges().iter().enumerate() {
                    for (slot, &x) in buf.iter_mut().zip(e) {
                        *slot = labels[map[x]];
                    }
                    buf.sort_unstable();
                    let v = f(&buf);
                    w *= if sh.signs[ei] > 0 { v } else { 1.0 - v };
                    if w == 0.0 {
                        break;
                    }
                }
                total += w;
            }
            // next label assignment
            let mut i = 0;
            loop {
                if i == m {
                    return;
                }
                labels[i] += 1;
                if labels[i] < nb {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
        }
    });
    total
}

/// hom together with ∂hom/∂Q(I) for every r-subset I.
pub fn hom_with_gradient(h: &RGraph, q: &SymTensor) -> Result<(f64, Vec<f64>)> {
    signed_hom_with_gradient(&SignedRGraph::all_positive(h.clone()), q)
}

/// Signed count (negative edges weighted by 1 − Q) with its gradient in Q.
pub fn signed_hom_with_gradient(sh: &SignedRGraph, q: &SymTensor) -> Result<(f64, Vec<f64>)> {
    let h = &sh.graph;
    check_shape(h, q)?;
    let n = q.n();
    let pl = plan(h);
    let v = h.num_vertices();
    let e = h.num_edges();
    let results: Vec<(f64, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut st = GradState {
                h,
                signs: &sh.signs,
                pl: &pl,
                q,
                n,
                phi: vec![usize::MAX; v],
                ranks: vec![usize::MAX; e],
                vals: vec![0.0; e],
                hom: 0.0,
                grad: vec![0.0; q.len()],
            };
            st.phi[pl.order[0]] = first;
            st.run(0, 0);
            (st.hom, st.grad)
        })
        .collect();
    let mut hom = 0.0;
    let mut grad = vec![0.0; q.len()];
    for (hv, g) in results {
        hom += hv;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    Ok((hom, grad))
}

struct GradState<'a> {
    h: &'a RGraph,
    signs: &'a [i8],
    pl: &'a Plan,
    q: &'a SymTensor,
    n: usize,
    phi: Vec<usize>,
    ranks: Vec<usize>,
    vals: Vec<f64>,
    hom: f64,
    grad: Vec<f64>,
}

impl GradState<'_> {
    fn run(&mut self, depth: usize, zeros: usize) {
        let x = self.pl.order[depth];
        let range = if depth == 0 { self.phi[x]..self.phi[x] + 1 } else { 0..self.n };
        let mut buf = [0usize; 16];
        for i in range {
            self.phi[x] = i;
            let mut z = zeros;
            let mut dead = false;
            for &ei in &self.pl.checks[depth] {
                let e = &self.h.edges()[ei];
                for (slot, &y) in buf.iter_mut().zip(e) {
                    *slot = self.phi[y];
                }
                match self.q.index().rank_tuple(&buf[..e.len()]) {
                    None => {
                        dead = true;
                        break;
                    }
                    Some(k) => {
                        self.ranks[ei] = k;
                        let qv = self.q.get_rank(k);
                        self.vals[ei] = if self.signs[ei] > 0 { qv } else { 1.0 - qv };
                        if self.vals[ei] == 0.0 {
                            z += 1;
                        }
                    }
                }
            }
            if dead || z >= 2 {
                continue;
            }
            if depth + 1 == self.pl.order.len() {
                let m = self.vals.len();
                if z == 0 {
                    self.hom += self.vals.iter().product::<f64>();
                }
                let mut prefix = 1.0;
                let mut suffix = vec![1.0; m + 1];
                for j in (0..m).rev() {
                    suffix[j] = suffix[j + 1] * self.vals[j];
                }
                for j in 0..m {
                    let d = prefix * suffix[j + 1];
                    self.grad[self.ranks[j]] += if self.signs[j] > 0 { d } else { -d };
                    prefix *= self.vals[j];
                }
            } else {
                self.run(depth + 1, z);
            }
        }
        if depth > 0 {
            self.phi[x] = usize::MAX;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingTrial {
    pub seed: u64,
    pub strategy: String,
    pub distance: f64,
    pub lhs: f64,
    pub bound: f64,
    pub l: f64,
    pub within_hypothesis: bool,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub graph_edges: usize,
    pub constant: f64,
    pub n: usize,
    pub p: f64,
    pub trials: usize,
    pub violations: usize,
    pub outside_hypothesis: usize,
    pub max_ratio: f64,
    pub norm_mode: String,
    pub seed: u64,
    pub details: Vec<CountingTrial>,
}

/// L = max(1, max over proper edge-subsets H' of t_p(H', A)).
pub fn crude_subgraph_bound(h: &RGraph, a: &SymTensor, p: f64) -> Result<f64> {
    let e = h.num_edges();
    let mut l = 1.0f64;
    for mask in 0u64..(1u64 << e) - 1 {
        if mask == 0 {
            continue;
        }
        let sub = h.edge_subgraph(|i| mask >> i & 1 == 1);
        l = l.max(tp_density(&sub, a, p)?);
    }
    Ok(l)
}

/// One counting-lemma comparison of a pair of tensors.
#[allow(clippy::too_many_arguments)]
pub fn counting_pair(
    h: &RGraph,
    sys: &BaseSystem,
    a1: &SymTensor,
    a2: &SymTensor,
    p: f64,
    mode: NormMode,
    seed: u64,
    strategy: &str,
) -> Result<CountingTrial> {
    let z = a1.zip(a2, |x, y| x - y)?.to_dense();
    let d = system_norm(&z, sys, p, mode)?.value;
    let lhs = (tp_density(h, a1, p)? - tp_density(h, a2, p)?).abs();
    let l = crude_subgraph_bound(h, a1, p)?;
    let bound = counting_constant(h.num_edges(), h.r()) * l * d / p;
    Ok(CountingTrial {
        seed,
        strategy: strategy.into(),
        distance: d,
        lhs,
        bound,
        l,
        within_hypothesis: d <= p,
        violated: lhs > bound * (1.0 + 1e-9) + 1e-12,
    })
}

/// Randomized perturbation check of the counting lemma.
#[allow(clippy::too_many_arguments)]
pub fn counting_lemma_check(
    h: &RGraph,
    sys: &BaseSystem,
    n: usize,
    p: f64,
    eps: f64,
    trials: usize,
    seed: u64,
    mode: NormMode,
) -> Result<CountingReport> {
    let model = ErModel::scalar(n, h.r(), p)?;
    let details: Vec<CountingTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let a1 = model.sample_with(&mut rng);
            let mut a2 = a1.clone();
            let strategy = match t % 4 {
                0 => {
                    let rate = eps * p * rng.gen::<f64>();
                    a2.values_mut().iter_mut().for_each(|x| {
                        if rng.gen::<f64>() < rate {
                            *x = 1.0 - *x
                        }
                    });
                    "flip"
                }
                1 => {
                    let k = rng.gen_range(1..=a2.len().clamp(1, 4));
                    for _ in 0..k {
                        let i = rng.gen_range(0..a2.len());
                        a2.values_mut()[i] = 1.0 - a2.values_mut()[i];
                    }
                    "few-flips"
                }
                2 => {
                    let keep: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.5).collect();
                    for k in 0..a2.len() {
                        if a2.subset(k).iter().all(|&v| keep[v]) {
                            a2.values_mut()[k] = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
                        }
                    }
                    "resample-block"
                }
                _ => {
                    let size = ((n as f64 * p).ceil() as usize).clamp(h.r(), n);
                    let fill = if rng.gen::<bool>() { 1.0 } else { 0.0 };
                    for k in 0..a2.len() {
                        if a2.subset(k).iter().all(|&v| v < size) {
                            a2.values_mut()[k] = fill;
                        }
                    }
                    "block"
                }
            };
            counting_pair(h, sys, &a1, &a2, p, mode, s, strategy)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = details.iter().filter(|d| d.violated).count();
    let outside = details.iter().filter(|d| !d.within_hypothesis).count();
    let max_ratio = details
        .iter()
        .filter(|d| d.bound > 0.0)
        .map(|d| d.lhs / d.bound)
        .fold(0.0, f64::max);
    Ok(CountingReport {
        graph_edges: h.num_edges(),
        constant: counting_constant(h.num_edges(), h.r()),
        n,
        p,
        trials,
        violations,
        outside_hypothesis: outside,
        max_ratio,
        norm_mode: match mode {
            NormMode::Exact => "exact".into(),
            NormMode::Heuristic { .. } => "heuristic-lower-bound".into(),
        },
        seed,
        details,
    })
}

/// Localization instance: a block of ⌈np⌉ vertices empty in A₁ and full in A₂.
pub fn localization_pair(n: usize, r: usize, p: f64, seed: u64) -> Result<(SymTensor, SymTensor)> {
    let base = ErModel::scalar(n, r, p)?.sample(seed);
    let size = ((n as f64 * p).ceil() as usize).clamp(r, n);
    let mut a1 = base.clone();
    let mut a2 = base;
    for k in 0..a1.len() {
        if a1.subset(k).iter().all(|&v| v < size) {
            a1.values_mut()[k] = 0.0;
            a2.values_mut()[k] = 1.0;
        }
    }
    Ok((a1, a2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidorenkoSearch {
    pub trials: usize,
    pub seed: u64,
    /// smallest t(H,Q) / t(edge,Q)^{e(H)} seen
    pub min_ratio: f64,
    /// first Q with t(H,Q) < t(edge,Q)^{e(H)}, if any
    pub counterexample: Option<crate::tensor::TensorJson>,
}

impl SidorenkoSearch {
    pub fn violation_found(&self) -> bool {
        self.counterexample.is_some()
    }
}

/// Randomized falsification of t(H,Q) ≥ t(K_r^(r),Q)^{e(H)}: uniform, sparse Boolean and
/// r-partite-supported Q. Finding nothing proves nothing.
pub fn is_sidorenko_candidate(h: &RGraph, n: usize, samples: usize, seed: u64) -> Result<SidorenkoSearch> {
    let r = h.r();
    if n < r {
        return Err(Error::Parameter(format!("n = {n} < r = {r}")));
    }
    if h.num_edges() == 0 {
        return Err(Error::NoEdges);
    }
    let edge = RGraph::new(r, r, vec![(0..r).collect()])?;
    let results: Vec<(f64, Option<SymTensor>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let q = match i % 3 {
                0 => SymTensor::from_values(n, r, (0..crate::combin::binomial(n, r)).map(|_| rng.gen::<f64>()).collect()),
                1 => {
                    let d: f64 = rng.gen_range(0.1..0.9);
                    SymTensor::from_values(
                        n,
                        r,
                        (0..crate::combin::binomial(n, r)).map(|_| if rng.gen::<f64>() < d { 1.0 } else { 0.0 }).collect(),
                    )
                }
                _ => {
                    let part: Vec<usize> = (0..n).map(|_| rng.gen_range(0..r)).collect();
                    let w: Vec<f64> = (0..crate::combin::binomial(n, r)).map(|_| rng.gen_range(0.5..1.0)).collect();
                    SymTensor::from_values(n, r, w).map(|t| {
                        SymTensor::from_fn(n, r, |s| {
                            let mut seen = vec![false; r];
                            s.iter().for_each(|&v| seen[part[v]] = true);
                            if seen.iter().all(|&b| b) {
                                t.get(s)
                            } else {
                                0.0
                            }
                        })
                        .expect("valid shape")
                    })
                }
            }
            .expect("valid shape");
            let te = t_density(&edge, &q).expect("shape checked");
            if te == 0.0 {
                return (f64::INFINITY, None);
            }
            let th = t_density(h, &q).expect("shape checked");
            let ratio = th / te.powi(h.num_edges() as i32);
            let bad = th < te.powi(h.num_edges() as i32) * (1.0 - 1e-12);
            (ratio, bad.then_some(q))
        })
        .collect();
    let min_ratio = results.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let counterexample = results.into_iter().find_map(|x| x.1).map(|q| q.to_json());
    Ok(SidorenkoSearch { trials: samples, seed, min_ratio, counterexample })
}
