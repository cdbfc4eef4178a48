//! Exact and Monte Carlo tail probabilities, exponential tilting, and exact checks
//! of the probabilistic inequalities at desk scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, falling};
use crate::error::{Error, Result};
use crate::homomorphism::{hom_count, hom_signed, quotient_hom_expectation};
use crate::hypergraph::{RGraph, SignedRGraph};
use crate::stats::{derive_seed, logsumexp, wilson_interval, CompensatedSum};
use crate::tensor::{check_p, relent, relent_unchecked, ErModel, SymTensor};
use crate::variational::{hub_profile, Direction, TailProblem};

/// Largest C(n,r) accepted by exact enumeration.
pub const MAX_ENUM_ENTRIES: usize = 22;

const EVENT_TOL: f64 = 1e-12;
const MC_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    ExactEnumeration,
    NaiveMc,
    TiltedIs,
    BinomialClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub log_prob: f64,
    pub prob: f64,
    pub method: TailMethod,
    pub exact: bool,
    /// standard error of `prob`; zero for exact methods
    pub stderr: f64,
    pub samples: u64,
    pub hits: u64,
    pub seed: Option<u64>,
    /// Wilson 95% interval (naive MC only)
    pub ci95: Option<(f64, f64)>,
    /// effective sample size (tilted only)
    pub ess: Option<f64>,
}

impl TailEstimate {
    /// Whether `value` lies within `k` standard errors.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.prob - value).abs() <= k * self.stderr + 1e-15
    }
}

/// Whether counts satisfy the joint tail event.
pub fn event_holds(problem: &TailProblem, counts: &[f64]) -> bool {
    counts.iter().enumerate().all(|(k, &c)| {
        let t = problem.target(k);
        match problem.constraints[k].direction {
            Direction::Upper => c >= t * (1.0 - EVENT_TOL),
            Direction::Lower => c <= t * (1.0 + EVENT_TOL),
        }
    })
}

fn counted_graphs(problem: &TailProblem) -> Vec<SignedRGraph> {
    (0..problem.constraints.len()).map(|k| problem.counted(k)).collect()
}

/// Computes f(A with entry I set to 1) − f(A with entry I set to 0) for a signed count f.
struct FlipCounter {
    graph: SignedRGraph,
    /// per edge j: vertex order beginning with edge j, and edges completed at each depth
    plans: Vec<(Vec<usize>, Vec<Vec<usize>>)>,
    perms: Vec<Vec<usize>>,
}

fn permutations(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..r.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..r).rev().find(|&j| cur[j] > cur[i]).expect("exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

impl FlipCounter {
    fn new(graph: SignedRGraph) -> Self {
        let h = &graph.graph;
        let v = h.num_vertices();
        let plans = h
            .edges()
            .iter()
            .enumerate()
            .map(|(j, ej)| {
                let mut order = ej.clone();
                let mut placed = vec![false; v];
                ej.iter().for_each(|&x| placed[x] = true);
                while order.len() < v {
                    let next = (0..v)
                        .filter(|&x| !placed[x])
                        .max_by_key(|&x| {
                            let links = h
                                .edges()
                                .iter()
                                .filter(|e| e.contains(&x))
                                .map(|e| e.iter().filter(|&&y| placed[y]).count())
                                .sum::<usize>();
                            (links, std::cmp::Reverse(x))
                        })
                        .expect("unplaced vertex");
                    placed[next] = true;
                    order.push(next);
                }
                let mut pos = vec![0; v];
                order.iter().enumerate().for_each(|(i, &x)| pos[x] = i);
                let mut checks = vec![Vec::new(); v];
                for (ei, e) in h.edges().iter().enumerate() {
                    if ei != j {
                        let d = e.iter().map(|&x| pos[x]).max().expect("nonempty edge");
                        checks[d].push(ei);
                    }
                }
                (order, checks)
            })
            .collect();
        let perms = permutations(h.r());
        FlipCounter { graph, plans, perms }
    }

    fn value(&self, a: &SymTensor, idx: usize, j: usize, ei: usize, phi: &[usize]) -> f64 {
        let e = &self.graph.graph.edges()[ei];
        let mut buf = [0usize; 16];
        for (slot, &y) in buf.iter_mut().zip(e) {
            *slot = phi[y];
        }
        let x = match a.index().rank_tuple(&buf[..e.len()]) {
            None => return 0.0,
            Some(k) if k == idx => {
                if ei < j {
                    0.0
                } else {
                    1.0
                }
            }
            Some(k) => a.get_rank(k),
        };
        if self.graph.signs[ei] > 0 {
            x
        } else {
            1.0 - x
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(&self, a: &SymTensor, idx: usize, j: usize, depth: usize, phi: &mut [usize]) -> f64 {
        let (order, checks) = &self.plans[j];
        if depth == order.len() {
            return 1.0;
        }
        let x = order[depth];
        let mut total = 0.0;
        for i in 0..a.n() {
            phi[x] = i;
            let mut prod = 1.0;
            for &ei in &checks[depth] {
                prod *= self.value(a, idx, j, ei, phi);
                if prod == 0.0 {
                    break;
                }
            }
            if prod != 0.0 {
                total += prod * self.rec(a, idx, j, depth + 1, phi);
            }
        }
        total
    }

    fn delta(&self, a: &SymTensor, idx: usize, subset: &[usize]) -> f64 {
        let h = &self.graph.graph;
        let r = h.r();
        let mut phi = vec![usize::MAX; h.num_vertices()];
        let mut total = 0.0;
        for (j, ej) in h.edges().iter().enumerate() {
            let mut part = 0.0;
            for perm in &self.perms {
                for t in 0..r {
                    phi[ej[t]] = subset[perm[t]];
                }
                part += self.rec(a, idx, j, r, &mut phi);
            }
            total += if self.graph.signs[j] > 0 { part } else { -part };
        }
        total
    }
}

/// Edge-connected components of a signed graph, and n^{#isolated vertices}.
fn components(g: &SignedRGraph, n: usize) -> Result<(Vec<SignedRGraph>, f64)> {
    let h = &g.graph;
    let v = h.num_vertices();
    let mut comp = vec![usize::MAX; v];
    let mut count = 0;
    for start in 0..v {
        if comp[start] != usize::MAX || h.degree(start) == 0 {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = count;
        while let Some(x) = stack.pop() {
            for e in h.edges().iter().filter(|e| e.contains(&x)) {
                for &y in e {
                    if comp[y] == usize::MAX {
                        comp[y] = count;
                        stack.push(y);
                    }
                }
            }
        }
        count += 1;
    }
    let isolated = (0..v).filter(|&x| h.degree(x) == 0).count();
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let mut label = vec![usize::MAX; v];
        let mut size = 0;
        for x in 0..v {
            if comp[x] == c {
                label[x] = size;
                size += 1;
            }
        }
        let (edges, signs): (Vec<Vec<usize>>, Vec<i8>) = h
            .edges()
            .iter()
            .zip(&g.signs)
            .filter(|(e, _)| comp[e[0]] == c)
            .map(|(e, &s)| (e.iter().map(|&x| label[x]).collect(), s))
            .unzip();
        out.push(SignedRGraph::new(RGraph::new(h.r(), size, edges)?, signs)?);
    }
    Ok((out, (n as f64).powi(isolated as i32)))
}

/// Visits every Boolean tensor in Gray-code order with the signed counts of each graph.
/// The visitor receives the entry bitmask (bit k = entry of colex rank k).
pub fn enumerate_counts(
    graphs: &[SignedRGraph],
    n: usize,
    r: usize,
    mut visit: impl FnMut(u32, &[f64]),
) -> Result<()> {
    let entries = binomial(n, r) as usize;
    if entries > MAX_ENUM_ENTRIES {
        return Err(Error::TooLarge(format!("C({n},{r}) = {entries} entries exceeds {MAX_ENUM_ENTRIES}")));
    }
    if graphs.iter().any(|g| g.graph.r() != r) {
        return Err(Error::ShapeMismatch("graph arity differs from r".into()));
    }
    let mut a = SymTensor::zeros(n, r)?;
    let split: Vec<(Vec<SignedRGraph>, f64)> =
        graphs.iter().map(|g| components(g, n)).collect::<Result<_>>()?;
    let counters: Vec<Vec<FlipCounter>> =
        split.iter().map(|(cs, _)| cs.iter().map(|c| FlipCounter::new(c.clone())).collect()).collect();
    let mut parts: Vec<Vec<f64>> = split
        .iter()
        .map(|(cs, _)| cs.iter().map(|c| hom_signed(c, &vec![a.clone(); c.graph.num_edges()])).collect())
        .collect::<Result<_>>()?;
    let total = |parts: &[Vec<f64>], out: &mut Vec<f64>| {
        out.clear();
        out.extend(parts.iter().zip(&split).map(|(ps, (_, iso))| iso * ps.iter().product::<f64>()));
    };
    let mut counts = Vec::with_capacity(graphs.len());
    total(&parts, &mut counts);
    let subsets: Vec<Vec<usize>> = (0..entries).map(|k| a.subset(k)).collect();
    let mut bits = 0u32;
    visit(bits, &counts);
    for step in 1u64..(1u64 << entries) {
        let b = step.trailing_zeros() as usize;
        let cur = a.get_rank(b);
        for (ps, fcs) in parts.iter_mut().zip(&counters) {
            for (c, fc) in ps.iter_mut().zip(fcs) {
                let d = fc.delta(&a, b, &subsets[b]);
                *c += if cur == 0.0 { d } else { -d };
            }
        }
        a.values_mut()[b] = 1.0 - cur;
        bits ^= 1 << b;
        total(&parts, &mut counts);
        visit(bits, &counts);
    }
    Ok(())
}

/// Per-entry Bernoulli product weights with O(1) evaluation by table lookup.
struct ProductWeights {
    lo_bits: u32,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ProductWeights {
    fn new(q: &[f64]) -> Self {
        let n = q.len();
        let lo_bits = (n / 2) as u32;
        let table = |off: usize, len: usize| -> Vec<f64> {
            (0..1usize << len)
                .map(|m| (0..len).map(|i| if m >> i & 1 == 1 { q[off + i] } else { 1.0 - q[off + i] }).product())
                .collect()
        };
        ProductWeights { lo_bits, lo: table(0, lo_bits as usize), hi: table(lo_bits as usize, n - lo_bits as usize) }
    }

    fn weight(&self, bits: u32) -> f64 {
        let mask = (1u32 << self.lo_bits) - 1;
        self.lo[(bits & mask) as usize] * self.hi[(bits >> self.lo_bits) as usize]
    }
}

fn log_of_popcount_sum(hits: &[u64], p: f64) -> f64 {
    let total = hits.len() - 1;
    let terms: Vec<f64> = hits
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(m, &c)| (c as f64).ln() + m as f64 * p.ln() + (total - m) as f64 * (1.0 - p).ln())
        .collect();
    if terms.is_empty() {
        f64::NEG_INFINITY
    } else {
        logsumexp(&terms)
    }
}

/// Number of event configurations grouped by edge count.
pub fn event_hits_by_edges(problem: &TailProblem) -> Result<Vec<u64>> {
    let (n, r) = (problem.n, problem.r());
    let entries = binomial(n, r) as usize;
    let mut hits = vec![0u64; entries + 1];
    enumerate_counts(&counted_graphs(problem), n, r, |bits, counts| {
        if event_holds(problem, counts) {
            hits[bits.count_ones() as usize] += 1;
        }
    })?;
    Ok(hits)
}

/// Exact μ_p probability by enumerating all 2^{C(n,r)} Boolean tensors.
pub fn tail_exact_enum(problem: &TailProblem) -> Result<TailEstimate> {
    let hits = event_hits_by_edges(problem)?;
    let log_prob = log_of_popcount_sum(&hits, problem.p).min(0.0);
    let total = (hits.len() - 1) as i32;
    let prob = hits
        .iter()
        .enumerate()
        .map(|(m, &c)| c as f64 * problem.p.powi(m as i32) * (1.0 - problem.p).powi(total - m as i32))
        .sum::<f64>()
        .min(1.0);
    Ok(TailEstimate {
        log_prob,
        prob,
        method: TailMethod::ExactEnumeration,
        exact: true,
        stderr: 0.0,
        samples: 1u64 << total,
        hits: hits.iter().sum(),
        seed: None,
        ci95: None,
        ess: None,
    })
}

/// Closed form for a single-edge H: t_p is a function of the edge count alone.
pub fn tail_binomial(problem: &TailProblem) -> Result<TailEstimate> {
    if problem.constraints.len() != 1 || problem.induced || problem.constraints[0].graph.num_edges() != 1 {
        return Err(Error::Parameter("closed form needs a single plain single-edge constraint".into()));
    }
    let (n, r, p) = (problem.n, problem.r(), problem.p);
    let entries = binomial(n, r) as usize;
    let per_edge: f64 = (1..=r).map(|i| i as f64).product();
    let sh = problem.counted(0);
    // hom(edge, A) = r! · m
    let hits: Vec<u64> = (0..=entries)
        .map(|m| {
            let c = per_edge * m as f64 * (n as f64).powi(sh.graph.num_vertices() as i32 - r as i32);
            if event_holds(problem, &[c]) {
                binomial(entries, m)
            } else {
                0
            }
        })
        .collect();
    let prob = hits
        .iter()
        .enumerate()
        .map(|(m, &c)| c as f64 * p.powi(m as i32) * (1.0 - p).powi((entries - m) as i32))
        .sum::<f64>()
        .min(1.0);
    Ok(TailEstimate {
        log_prob: log_of_popcount_sum(&hits, p).min(0.0),
        prob,
        method: TailMethod::BinomialClosedForm,
        exact: true,
        stderr: 0.0,
        samples: 0,
        hits: hits.iter().sum(),
        seed: None,
        ci95: None,
        ess: None,
    })
}

/// Samples A ~ μ_Q in fixed-size chunks with per-chunk seeds; returns per-sample values in order.
fn sample_map<T: Send>(
    q: &SymTensor,
    samples: usize,
    seed: u64,
    f: impl Fn(&SymTensor) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let model = ErModel::per_edge(q.clone())?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let out: Vec<Result<Vec<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            (0..len).map(|_| f(&model.sample_with(&mut rng))).collect()
        })
        .collect();
    let mut all = Vec::with_capacity(samples);
    for chunk in out {
        all.extend(chunk?);
    }
    Ok(all)
}

/// Naive Monte Carlo under μ_p.
pub fn tail_mc(problem: &TailProblem, samples: usize, seed: u64) -> Result<TailEstimate> {
    let q = SymTensor::constant(problem.n, problem.r(), problem.p)?;
    let mut est = tail_tilted(problem, &q, samples, seed)?;
    let hits = est.hits;
    let (lo, hi) = wilson_interval(hits, samples as u64, 1.959963984540054);
    est.method = TailMethod::NaiveMc;
    est.ci95 = Some((lo, hi));
    est.ess = None;
    Ok(est)
}

/// Importance sampling: A ~ μ_{Q*}, weight 1_E(A) exp(−W(A)) with W = log dμ_{Q*}/dμ_p.
pub fn tail_tilted(problem: &TailProblem, q_star: &SymTensor, samples: usize, seed: u64) -> Result<TailEstimate> {
    if samples == 0 {
        return Err(Error::Parameter("samples must be positive".into()));
    }
    q_star.check_weight()?;
    if q_star.n() != problem.n || q_star.r() != problem.r() {
        return Err(Error::ShapeMismatch("tilting tensor shape differs from the problem".into()));
    }
    let graphs = counted_graphs(problem);
    let p = problem.p;
    let vals = sample_map(q_star, samples, seed, |a| {
        let counts: Vec<f64> = graphs
            .iter()
            .map(|g| hom_signed(g, &vec![a.clone(); g.graph.num_edges()]))
            .collect::<Result<_>>()?;
        if event_holds(problem, &counts) {
            Ok(Some(-crate::tensor::loglik_ratio(a, q_star, p)?))
        } else {
            Ok(None)
        }
    })?;
    let hits = vals.iter().filter(|v| v.is_some()).count() as u64;
    let logw: Vec<f64> = vals.iter().flatten().copied().collect();
    let nf = samples as f64;
    let (prob, stderr, ess, log_prob) = if logw.is_empty() {
        (0.0, 0.0, 0.0, f64::NEG_INFINITY)
    } else {
        let w: Vec<f64> = logw.iter().map(|x| x.exp()).collect();
        let mut s = CompensatedSum::new();
        w.iter().for_each(|&x| s.add(x));
        let mean = s.value() / nf;
        let mut s2 = CompensatedSum::new();
        w.iter().for_each(|&x| s2.add((x - mean).powi(2)));
        let var = (s2.value() + (nf - w.len() as f64) * mean * mean) / (nf - 1.0).max(1.0);
        let sq: f64 = w.iter().map(|x| x * x).sum();
        let ess = s.value().powi(2) / sq;
        (mean, (var / nf).sqrt(), ess, logsumexp(&logw) - nf.ln())
    };
    Ok(TailEstimate {
        log_prob,
        prob,
        method: TailMethod::TiltedIs,
        exact: false,
        stderr,
        samples: samples as u64,
        hits,
        seed: Some(seed),
        ci95: None,
        ess: Some(ess),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub n: usize,
    pub relent: f64,
    pub mean: f64,
    pub variance: f64,
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub points: Vec<ConcentrationPoint>,
    pub decreasing: bool,
}

/// Which Q to sample from at each ladder point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiltChoice {
    Constant(f64),
    /// hub-profile optimizer of the upper tail with this δ
    HubProfile(f64),
}

/// Empirical Var_Q(t_p(H,A)) / (E_Q t_p(H,A))² along an n-ladder.
pub fn tilted_concentration_check(
    h: &RGraph,
    choice: TiltChoice,
    p: f64,
    samples: usize,
    ladder: &[usize],
    seed: u64,
) -> Result<ConcentrationReport> {
    check_p(p)?;
    if samples < 2 {
        return Err(Error::Parameter("need at least two samples".into()));
    }
    let mut points = Vec::new();
    for (i, &n) in ladder.iter().enumerate() {
        let q = match choice {
            TiltChoice::Constant(c) => SymTensor::constant(n, h.r(), c)?,
            TiltChoice::HubProfile(delta) => hub_profile(&TailProblem::upper(h, n, p, delta)?)?.q,
        };
        let s = derive_seed(seed, i as u64);
        let norm = (n as f64).powi(h.num_vertices() as i32) * p.powi(h.num_edges() as i32);
        let t: Vec<f64> = sample_map(&q, samples, s, |a| Ok(hom_count(h, a)? / norm))?;
        let nf = samples as f64;
        let mean = t.iter().sum::<f64>() / nf;
        let variance = t.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let ratio = if mean > 0.0 { variance / (mean * mean) } else { f64::INFINITY };
        let relent = q.values().iter().map(|&x| relent_unchecked(p, x)).sum();
        points.push(ConcentrationPoint { n, relent, mean, variance, ratio, seed: s });
    }
    let decreasing = points.windows(2).all(|w| w[1].ratio < w[0].ratio);
    Ok(ConcentrationReport { points, decreasing })
}

/// {A : Σ_I w_I A_I ≥ threshold}, entries indexed by colex rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl HalfSpace {
    fn holds(&self, lin: f64) -> bool {
        lin >= self.threshold - 1e-12 * self.threshold.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBoundReport {
    pub prob: f64,
    /// relent(p, Q) at the final iterate: an upper bound on the infimum
    pub entropy_upper: f64,
    /// Frank–Wolfe duality lower bound on the infimum
    pub entropy_lower: f64,
    pub bound: f64,
    pub iterations: usize,
    pub holds: bool,
}

fn fw_grad(p: f64, x: f64) -> f64 {
    (x * (1.0 - p) / (p * (1.0 - x))).ln()
}

/// μ_p(B) ≤ exp(−inf_{Q ∈ hull(B ∩ {0,1}^N)} I_p(Q)) for an intersection of half-spaces B.
pub fn convex_entropy_bound_check(halfspaces: &[HalfSpace], n: usize, r: usize, p: f64) -> Result<ConvexBoundReport> {
    check_p(p)?;
    let entries = binomial(n, r) as usize;
    if entries > MAX_ENUM_ENTRIES {
        return Err(Error::TooLarge(format!("C({n},{r}) = {entries} entries exceeds {MAX_ENUM_ENTRIES}")));
    }
    if halfspaces.is_empty() || halfspaces.len() > 3 {
        return Err(Error::Parameter("between one and three half-spaces".into()));
    }
    if halfspaces.iter().any(|h| h.weights.len() != entries) {
        return Err(Error::ShapeMismatch(format!("half-space weights must have {entries} entries")));
    }
    // Gray-code walk keeping linear forms incrementally
    let mut lin = vec![0.0; halfspaces.len()];
    let mut bits = 0u32;
    let mut points: Vec<u32> = Vec::new();
    let pw = ProductWeights::new(&vec![p; entries]);
    let mut prob = CompensatedSum::new();
    let mut visit = |bits: u32, lin: &[f64]| {
        if halfspaces.iter().zip(lin).all(|(h, &l)| h.holds(l)) {
            points.push(bits);
            prob.add(pw.weight(bits));
        }
    };
    visit(0, &lin);
    for step in 1u64..(1u64 << entries) {
        let b = step.trailing_zeros() as usize;
        let on = bits >> b & 1 == 0;
        for (l, h) in lin.iter_mut().zip(halfspaces) {
            *l += if on { h.weights[b] } else { -h.weights[b] };
        }
        bits ^= 1 << b;
        visit(bits, &lin);
    }
    let prob = prob.value().min(1.0);
    if points.is_empty() {
        return Ok(ConvexBoundReport {
            prob,
            entropy_upper: f64::INFINITY,
            entropy_lower: f64::INFINITY,
            bound: 0.0,
            iterations: 0,
            holds: prob == 0.0,
        });
    }
    // coordinates shared by every point stay fixed
    let and = points.iter().fold(u32::MAX, |a, &b| a & b);
    let or = points.iter().fold(0u32, |a, &b| a | b);
    let free: Vec<bool> = (0..entries).map(|i| (and >> i & 1) != (or >> i & 1)).collect();
    let mut x: Vec<f64> = (0..entries)
        .map(|i| points.iter().filter(|&&b| b >> i & 1 == 1).count() as f64 / points.len() as f64)
        .collect();
    let mut weights = vec![1.0 / points.len() as f64; points.len()];
    let f = |x: &[f64]| x.iter().map(|&v| relent_unchecked(p, v)).sum::<f64>();
    let lo_bits = entries / 2;
    let mut iterations = 0;
    let mut lower = f64::NEG_INFINITY;
    for it in 0..2000 {
        iterations = it + 1;
        let g: Vec<f64> = (0..entries).map(|i| if free[i] { fw_grad(p, x[i]) } else { 0.0 }).collect();
        let table = |off: usize, len: usize| -> Vec<f64> {
            (0..1usize << len).map(|m| (0..len).filter(|&i| m >> i & 1 == 1).map(|i| g[off + i]).sum()).collect()
        };
        let (tl, th) = (table(0, lo_bits), table(lo_bits, entries - lo_bits));
        let mask = (1u32 << lo_bits) - 1;
        let val = |b: u32| tl[(b & mask) as usize] + th[(b >> lo_bits) as usize];
        let si = (0..points.len())
            .min_by(|&a, &b| val(points[a]).partial_cmp(&val(points[b])).unwrap())
            .expect("nonempty");
        let vi = (0..points.len())
            .filter(|&i| weights[i] > 0.0)
            .max_by(|&a, &b| val(points[a]).partial_cmp(&val(points[b])).unwrap())
            .expect("active atom");
        let (s, v) = (points[si], points[vi]);
        let gap: f64 = (0..entries).map(|i| g[i] * (x[i] - (s >> i & 1) as f64)).sum();
        let fx = f(&x);
        lower = lower.max(fx - gap);
        if gap <= 1e-12 * fx.max(1e-300) || gap <= 1e-15 || si == vi {
            break;
        }
        // pairwise step: move weight from atom v to atom s
        let dir: Vec<f64> = (0..entries).map(|i| (s >> i & 1) as f64 - (v >> i & 1) as f64).collect();
        let slope = |t: f64| -> f64 {
            (0..entries).filter(|&i| dir[i] != 0.0).map(|i| dir[i] * fw_grad(p, x[i] + t * dir[i])).sum()
        };
        let gmax = weights[vi];
        let (mut a, mut b) = (0.0f64, gmax);
        if slope(gmax * (1.0 - 1e-15)) <= 0.0 {
            a = gmax;
        } else {
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if slope(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
        }
        for i in 0..entries {
            x[i] = (x[i] + a * dir[i]).clamp(0.0, 1.0);
        }
        weights[si] += a;
        weights[vi] = if a == gmax { 0.0 } else { weights[vi] - a };
    }
    let upper = f(&x);
    let lower = lower.max(0.0).min(upper);
    let bound = (-upper).exp();
    Ok(ConvexBoundReport {
        prob,
        entropy_upper: upper,
        entropy_lower: lower,
        bound,
        iterations,
        holds: prob <= bound * (1.0 + 1e-9),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTiltReport {
    pub log_mu_p: f64,
    pub log_nu: f64,
    pub kl: f64,
    pub dim: usize,
    /// smallest C for which the inequality holds (0 when it holds without correction)
    pub c_min: f64,
    pub holds_with: f64,
    pub holds: bool,
}

/// log μ_p(E) ≥ −D(ν‖μ_p) + log ν(E) − C √d |log((1−p)/p)| / √ν(E), reporting the smallest C.
pub fn product_tilt_lower_bound_check(
    event: &TailProblem,
    nu: &SymTensor,
    c_allowed: f64,
) -> Result<ProductTiltReport> {
    let (n, r, p) = (event.n, event.r(), event.p);
    nu.check_weight()?;
    if nu.n() != n || nu.r() != r {
        return Err(Error::ShapeMismatch("ν shape differs from the event".into()));
    }
    let pw_p = ProductWeights::new(&vec![p; nu.len()]);
    let pw_nu = ProductWeights::new(nu.values());
    let (mut mp, mut mn) = (CompensatedSum::new(), CompensatedSum::new());
    enumerate_counts(&counted_graphs(event), n, r, |bits, counts| {
        if event_holds(event, counts) {
            mp.add(pw_p.weight(bits));
            mn.add(pw_nu.weight(bits));
        }
    })?;
    let log_mu_p = mp.value().ln();
    let nu_e = mn.value();
    let log_nu = nu_e.ln();
    let kl = relent(p, nu)?;
    let dim = nu.len();
    let deficit = log_nu - kl - log_mu_p;
    let scale = (dim as f64).sqrt() * ((1.0 - p) / p).ln().abs() / nu_e.sqrt();
    let c_min = if nu_e == 0.0 || deficit <= 1e-12 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        deficit / scale
    };
    Ok(ProductTiltReport { log_mu_p, log_nu, kl, dim, c_min, holds_with: c_allowed, holds: c_min <= c_allowed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkgReport {
    pub c_cap: f64,
    pub p_l: f64,
    pub p_m: f64,
    pub p_lm: f64,
    /// P(L) ≤ 2 P(L ∩ M)
    pub restriction_holds: bool,
    /// P(L ∩ M) ≥ P(L) P(M)
    pub fkg_holds: bool,
}

/// Proper nonempty edge-subgraphs of h, isolated vertices removed.
pub fn proper_subgraphs(h: &RGraph) -> Vec<RGraph> {
    let e = h.num_edges();
    (1..(1u64 << e) - 1).map(|mask| h.edge_subgraph(|i| mask >> i & 1 == 1).without_isolated()).collect()
}

/// Markov choice: C = 2 · #F · max_F E t_p(F, A), so P(not M) ≤ 1/2.
pub fn fkg_markov_cap(graphs: &[RGraph], n: usize, p: f64) -> Result<f64> {
    let mut count = 0usize;
    let mut worst: f64 = 0.0;
    for h in graphs {
        for f in proper_subgraphs(h) {
            let q = SymTensor::constant(n, f.r(), p)?;
            let e = quotient_hom_expectation(&f, &q)?;
            worst = worst.max(e / ((n as f64).powi(f.num_vertices() as i32) * p.powi(f.num_edges() as i32)));
            count += 1;
        }
    }
    Ok(2.0 * count as f64 * worst)
}

/// Exact P(L) ≤ 2 P(L ∩ M) with L the joint lower tail and M = {t_p(F,A) ≤ C for all proper F}.
pub fn fkg_restriction_check(problem: &TailProblem, c_cap: f64) -> Result<FkgReport> {
    if problem.induced || problem.constraints.iter().any(|c| c.direction != Direction::Lower) {
        return Err(Error::Parameter("restriction check applies to plain lower tails".into()));
    }
    let (n, r, p) = (problem.n, problem.r(), problem.p);
    let mut graphs = counted_graphs(problem);
    let k = graphs.len();
    let subs: Vec<RGraph> = problem.constraints.iter().flat_map(|c| proper_subgraphs(&c.graph)).collect();
    let norms: Vec<f64> =
        subs.iter().map(|f| (n as f64).powi(f.num_vertices() as i32) * p.powi(f.num_edges() as i32)).collect();
    graphs.extend(subs.into_iter().map(SignedRGraph::all_positive));
    let pw = ProductWeights::new(&vec![p; binomial(n, r) as usize]);
    let (mut pl, mut pm, mut plm) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    enumerate_counts(&graphs, n, r, |bits, counts| {
        let w = pw.weight(bits);
        let l = event_holds(problem, &counts[..k]);
        let m = counts[k..].iter().zip(&norms).all(|(&c, &z)| c / z <= c_cap * (1.0 + EVENT_TOL));
        if l {
            pl.add(w);
        }
        if m {
            pm.add(w);
        }
        if l && m {
            plm.add(w);
        }
    })?;
    let (p_l, p_m, p_lm) = (pl.value(), pm.value(), plm.value());
    Ok(FkgReport {
        c_cap,
        p_l,
        p_m,
        p_lm,
        restriction_holds: p_l <= 2.0 * p_lm * (1.0 + 1e-12),
        fkg_holds: p_lm >= p_l * p_m * (1.0 - 1e-12),
    })
}

/// Single edges, matchings, paths and even cycles (r = 2).
pub fn is_verified_sidorenko(h: &RGraph) -> bool {
    let h = h.without_isolated();
    let v = h.num_vertices();
    let e = h.num_edges();
    if e == 0 {
        return false;
    }
    let max_deg = (0..v).map(|x| h.degree(x)).max().unwrap_or(0);
    if max_deg == 1 {
        return true;
    }
    if h.r() != 2 || !h.is_connected() {
        return false;
    }
    let is_path = max_deg <= 2 && e + 1 == v;
    let is_even_cycle = (0..v).all(|x| h.degree(x) == 2) && e == v && v.is_multiple_of(2);
    is_path || is_even_cycle
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidorenkoTailReport {
    pub verified_sidorenko: bool,
    pub q: f64,
    pub lt: f64,
    pub rhs: f64,
    /// None when H is not on the verified list (advisory only)
    pub holds: Option<bool>,
    pub note: String,
}

/// LT = −log P(t_p(H,A) ≤ 1−δ) ≥ C(n,r) I_p(q), q = (1−δ)^{1/e} p n^r / (n)_r.
pub fn sidorenko_lower_tail_check(h: &RGraph, n: usize, p: f64, delta: f64) -> Result<SidorenkoTailReport> {
    let problem = TailProblem::lower(h, n, p, delta)?;
    let r = h.r();
    let verified = is_verified_sidorenko(h);
    let est = tail_exact_enum(&problem)?;
    let lt = -est.log_prob;
    let q_hat = (1.0 - delta).powf(1.0 / h.num_edges() as f64) * p;
    let q = q_hat * (n as f64).powi(r as i32) / falling(n, r);
    let entries = binomial(n, r) as f64;
    let (rhs, note) = if q >= p {
        (0.0, "q ≥ p: the entropy term vanishes and only LT ≥ 0 is asserted".to_string())
    } else {
        (entries * relent_unchecked(p, q), String::new())
    };
    let holds = lt >= rhs * (1.0 - 1e-12) - 1e-12;
    Ok(SidorenkoTailReport {
        verified_sidorenko: verified,
        q,
        lt,
        rhs,
        holds: verified.then_some(holds),
        note: if verified { note } else { "not on the verified list: advisory only".into() },
    })
}

/// One random half-space with ±1 weights and a threshold at the given quantile of its range.
pub fn random_halfspace<R: Rng>(rng: &mut R, entries: usize, level: f64) -> HalfSpace {
    let weights: Vec<f64> = (0..entries).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let pos = weights.iter().filter(|&&w| w > 0.0).count() as f64;
    let neg = entries as f64 - pos;
    HalfSpace { weights, threshold: (-neg + level * entries as f64).round() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{clique, cycle};
    use crate::stats::binomial_upper_tail;

    #[test]
    fn k2_exact_matches_binomial() {
        let k2 = clique(2, 2).unwrap();
        for &p in &[0.3, 0.5] {
            let pr = TailProblem::upper(&k2, 5, p, 0.4).unwrap();
            let ex = tail_exact_enum(&pr).unwrap();
            let bf = tail_binomial(&pr).unwrap();
            assert!((ex.prob - bf.prob).abs() < 1e-14);
            // 2m ≥ 1.4 · 25 p
            let m = (1.4 * 25.0 * p / 2.0f64).ceil() as usize;
            assert!((ex.prob - binomial_upper_tail(10, p, m)).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_counts_match_direct() {
        let k3 = clique(3, 2).unwrap();
        let c4 = SignedRGraph::complete_signing(&cycle(4).unwrap());
        let graphs = vec![SignedRGraph::all_positive(k3.clone()), c4.clone()];
        let mut seen = 0;
        enumerate_counts(&graphs, 4, 2, |bits, counts| {
            let vals: Vec<f64> = (0..6).map(|i| (bits >> i & 1) as f64).collect();
            let a = SymTensor::from_values(4, 2, vals).unwrap();
            assert_eq!(counts[0], hom_count(&k3, &a).unwrap());
            assert_eq!(counts[1], hom_signed(&c4, &vec![a.clone(); 6]).unwrap());
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 64);
    }

    #[test]
    fn enumeration_disconnected_graphs() {
        let two = RGraph::new(2, 6, vec![vec![0, 1], vec![1, 2], vec![3, 4]]).unwrap();
        let signed = SignedRGraph::new(two.clone(), vec![1, -1, 1]).unwrap();
        let graphs = vec![SignedRGraph::all_positive(two.clone()), signed.clone()];
        enumerate_counts(&graphs, 4, 2, |bits, counts| {
            let vals: Vec<f64> = (0..6).map(|i| (bits >> i & 1) as f64).collect();
            let a = SymTensor::from_values(4, 2, vals).unwrap();
            assert_eq!(counts[0], hom_count(&two, &a).unwrap());
            assert_eq!(counts[1], hom_signed(&signed, &vec![a.clone(); 3]).unwrap());
        })
        .unwrap();
    }

    #[test]
    fn tilted_at_p_equals_mc() {
        let k3 = clique(3, 2).unwrap();
        let pr = TailProblem::upper(&k3, 5, 0.4, 0.5).unwrap();
        let q = SymTensor::constant(5, 2, 0.4).unwrap();
        let a = tail_mc(&pr, 500, 9).unwrap();
        let b = tail_tilted(&pr, &q, 500, 9).unwrap();
        assert_eq!(a.hits, b.hits);
        assert!((a.prob - b.prob).abs() < 1e-12);
    }

    #[test]
    fn trivial_events() {
        let k2 = clique(2, 2).unwrap();
        let pr = TailProblem::lower(&k2, 4, 0.5, 0.01).unwrap();
        let sure = TailProblem { constraints: vec![], ..pr.clone() };
        assert!(event_holds(&sure, &[]));
        let pr = TailProblem::upper(&k2, 4, 0.1, 9.0).unwrap();
        // target 10 · 16 · 0.1 = 16 > 12 = max count
        assert_eq!(tail_exact_enum(&pr).unwrap().prob, 0.0);
    }

    #[test]
    fn chernoff_halfspace() {
        let hs = HalfSpace { weights: vec![1.0; 10], threshold: 6.0 };
        let rep = convex_entropy_bound_check(&[hs], 5, 2, 0.3).unwrap();
        let expect = 10.0 * relent_unchecked(0.3, 0.6);
        assert!((rep.entropy_upper - expect).abs() < 1e-6, "{} vs {expect}", rep.entropy_upper);
        assert!(rep.holds);
    }

    #[test]
    fn sidorenko_c4() {
        let rep = sidorenko_lower_tail_check(&cycle(4).unwrap(), 5, 0.5, 0.3).unwrap();
        assert_eq!(rep.holds, Some(true));
        let rep = sidorenko_lower_tail_check(&clique(3, 2).unwrap(), 5, 0.5, 0.3).unwrap();
        assert_eq!(rep.holds, None);
    }

    #[test]
    fn fkg_k3() {
        let k3 = clique(3, 2).unwrap();
        let pr = TailProblem::lower(&k3, 5, 0.5, 0.5).unwrap();
        let cap = fkg_markov_cap(&[k3], 5, 0.5).unwrap();
        let rep = fkg_restriction_check(&pr, cap).unwrap();
        assert!(rep.restriction_holds && rep.fkg_holds);
        let inf = fkg_restriction_check(&pr, f64::INFINITY).unwrap();
        assert_eq!(inf.p_l, inf.p_lm);
    }

    #[test]
    fn product_tilt_identity() {
        let k3 = clique(3, 2).unwrap();
        let pr = TailProblem::upper(&k3, 5, 0.3, 1.0).unwrap();
        let nu = SymTensor::constant(5, 2, 0.3).unwrap();
        let rep = product_tilt_lower_bound_check(&pr, &nu, 10.0).unwrap();
        assert_eq!(rep.c_min, 0.0);
        assert!(rep.kl.abs() < 1e-12);
    }
}
