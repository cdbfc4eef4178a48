//! Entropic variational problems for upper and lower tails of homomorphism densities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combin::{binomial_f, falling};
use crate::error::{Error, Result};
use crate::homomorphism::{edge_injective_maps, hom_block, signed_hom_with_gradient};
use crate::hypergraph::{RGraph, SignedRGraph};
use crate::stats::derive_seed;
use crate::tensor::{check_p, relent, relent_unchecked, SymTensor};

/// Relative feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub graph: RGraph,
    pub delta: f64,
    pub direction: Direction,
}

/// Φ / Ψ problem: minimize I_p(Q) subject to density constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProblem {
    pub n: usize,
    pub p: f64,
    pub constraints: Vec<Constraint>,
    pub induced: bool,
}

impl TailProblem {
    pub fn new(
        graphs: Vec<RGraph>,
        deltas: Vec<f64>,
        directions: Vec<Direction>,
        n: usize,
        p: f64,
        induced: bool,
    ) -> Result<Self> {
        check_p(p)?;
        if graphs.is_empty() || graphs.len() != deltas.len() || graphs.len() != directions.len() {
            return Err(Error::Parameter("graphs, deltas and directions must have equal nonzero length".into()));
        }
        let r = graphs[0].r();
        if n < r {
            return Err(Error::Parameter(format!("n = {n} < r = {r}")));
        }
        if induced && graphs.len() != 1 {
            return Err(Error::Parameter("induced problems take a single graph".into()));
        }
        let mut constraints = Vec::new();
        for ((g, d), dir) in graphs.into_iter().zip(deltas).zip(directions) {
            if g.r() != r {
                return Err(Error::ShapeMismatch("all graphs must share r".into()));
            }
            if g.num_edges() == 0 {
                return Err(Error::NoEdges);
            }
            match dir {
                Direction::Upper => {
                    if !d.is_finite() || d <= 0.0 {
                        return Err(Error::Parameter(format!("upper-tail δ = {d} must lie in (0,∞)")));
                    }
                    if !induced && (1.0 + d) * p.powi(g.num_edges() as i32) > 1.0 {
                        return Err(Error::Parameter("(1+δ)p^e > 1: the bound holds vacuously".into()));
                    }
                }
                Direction::Lower => {
                    if !(d > 0.0 && d < 1.0) {
                        return Err(Error::Parameter(format!("lower-tail δ = {d} must lie in (0,1)")));
                    }
                    if induced {
                        return Err(Error::Parameter("induced problems are upper-tail only".into()));
                    }
                }
            }
            constraints.push(Constraint { graph: g, delta: d, direction: dir });
        }
        Ok(TailProblem { n, p, constraints, induced })
    }

    pub fn upper(h: &RGraph, n: usize, p: f64, delta: f64) -> Result<Self> {
        Self::new(vec![h.clone()], vec![delta], vec![Direction::Upper], n, p, false)
    }

    pub fn lower(h: &RGraph, n: usize, p: f64, delta: f64) -> Result<Self> {
        Self::new(vec![h.clone()], vec![delta], vec![Direction::Lower], n, p, false)
    }

    pub fn induced(h: &RGraph, n: usize, p: f64, delta: f64) -> Result<Self> {
        Self::new(vec![h.clone()], vec![delta], vec![Direction::Upper], n, p, true)
    }

    pub fn r(&self) -> usize {
        self.constraints[0].graph.r()
    }

    /// Signed graph whose count is constrained.
    pub fn counted(&self, k: usize) -> SignedRGraph {
        let g = &self.constraints[k].graph;
        if self.induced {
            SignedRGraph::complete_signing(g)
        } else {
            SignedRGraph::all_positive(g.clone())
        }
    }

    /// Target count for constraint k.
    pub fn target(&self, k: usize) -> f64 {
        let c = &self.constraints[k];
        let g = &c.graph;
        let nv = (self.n as f64).powi(g.num_vertices() as i32);
        let pe = self.p.powi(g.num_edges() as i32);
        let factor = match c.direction {
            Direction::Upper => 1.0 + c.delta,
            Direction::Lower => 1.0 - c.delta,
        };
        if self.induced {
            let miss = binomial_f(g.num_vertices(), g.r()) - g.num_edges() as f64;
            factor * nv * pe * (1.0 - self.p).powf(miss)
        } else {
            factor * nv * pe
        }
    }

    /// Relative slack per constraint (≥ 0 means satisfied).
    pub fn slacks(&self, counts: &[f64]) -> Vec<f64> {
        counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let t = self.target(k);
                match self.constraints[k].direction {
                    Direction::Upper => (c - t) / t,
                    Direction::Lower => (t - c) / t,
                }
            })
            .collect()
    }

    pub fn feasible(&self, counts: &[f64]) -> bool {
        self.slacks(counts).iter().all(|&s| s >= -FEAS_TOL)
    }

    /// Constrained counts of a general weight tensor.
    pub fn counts(&self, q: &SymTensor) -> Result<Vec<f64>> {
        (0..self.constraints.len())
            .map(|k| {
                let sh = self.counted(k);
                let tensors = vec![q.clone(); sh.graph.num_edges()];
                crate::homomorphism::hom_signed(&sh, &tensors)
            })
            .collect()
    }

    fn block_counts(&self, b: &BlockSpec) -> Vec<f64> {
        (0..self.constraints.len()).map(|k| hom_block(&self.counted(k), &b.sizes, &|l| b.value(l))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Constant,
    PlantedHub,
    PlantedClique,
    HubProfile,
    CliqueProfile,
    HalfDensityHub,
    ProjectedDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub method: Method,
    pub value: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct VariationalSolution {
    pub q: SymTensor,
    pub value: f64,
    /// relative slack per constraint (≥ −1e-8 when feasible)
    pub residuals: Vec<f64>,
    pub method: Method,
    /// block size for planted constructions
    pub block: Option<usize>,
    /// every candidate tried by `solve`
    pub candidates: Vec<Candidate>,
}

/// Two-block tensor: vertices [0, m) form block 0, the rest block 1.
#[derive(Debug, Clone)]
struct BlockSpec {
    sizes: Vec<usize>,
    /// value indexed by the number of block-0 vertices in the r-set
    by_hub_count: Vec<f64>,
}

impl BlockSpec {
    fn value(&self, sorted_labels: &[usize]) -> f64 {
        self.by_hub_count[sorted_labels.iter().filter(|&&l| l == 0).count()]
    }

    fn entropy(&self, p: f64, r: usize) -> f64 {
        let (m, rest) = (self.sizes[0], self.sizes[1]);
        (0..=r).map(|j| binomial_f(m, j) * binomial_f(rest, r - j) * relent_unchecked(p, self.by_hub_count[j])).sum()
    }

    fn tensor(&self, n: usize, r: usize) -> SymTensor {
        let m = self.sizes[0];
        SymTensor::from_fn(n, r, |s| self.by_hub_count[s.iter().filter(|&&v| v < m).count()])
            .expect("valid shape")
    }

    fn hub(n: usize, r: usize, m: usize, x: f64, p: f64) -> Self {
        let mut v = vec![x; r + 1];
        v[0] = p;
        BlockSpec { sizes: vec![m, n - m], by_hub_count: v }
    }

    fn clique(n: usize, r: usize, m: usize, x: f64, p: f64) -> Self {
        let mut v = vec![p; r + 1];
        v[r] = x;
        BlockSpec { sizes: vec![m, n - m], by_hub_count: v }
    }
}

fn block_solution(
    problem: &TailProblem,
    b: &BlockSpec,
    method: Method,
    block: Option<usize>,
) -> VariationalSolution {
    let counts = problem.block_counts(b);
    VariationalSolution {
        q: b.tensor(problem.n, problem.r()),
        value: b.entropy(problem.p, problem.r()),
        residuals: problem.slacks(&counts),
        method,
        block,
        candidates: Vec::new(),
    }
}

fn all_upper(problem: &TailProblem) -> Result<()> {
    if problem.constraints.iter().any(|c| c.direction != Direction::Upper) || problem.induced {
        return Err(Error::Parameter("planted constructions need plain upper-tail constraints".into()));
    }
    Ok(())
}

/// Smallest m in [1, n] with `feasible(m)`, assuming monotonicity in m.
fn smallest_feasible(n: usize, feasible: impl Fn(usize) -> bool) -> Option<usize> {
    if !feasible(n) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Q = 1 on r-sets meeting [m], p elsewhere, with the smallest feasible m.
pub fn planted_hub(problem: &TailProblem) -> Result<VariationalSolution> {
    all_upper(problem)?;
    let (n, r, p) = (problem.n, problem.r(), problem.p);
    let m = smallest_feasible(n, |m| problem.feasible(&problem.block_counts(&BlockSpec::hub(n, r, m, 1.0, p))))
        .ok_or_else(|| Error::Infeasible("planted hub infeasible even at m = n".into()))?;
    Ok(block_solution(problem, &BlockSpec::hub(n, r, m, 1.0, p), Method::PlantedHub, Some(m)))
}

/// Q = 1 inside [m], p elsewhere, with the smallest feasible m.
pub fn planted_clique(problem: &TailProblem) -> Result<VariationalSolution> {
    all_upper(problem)?;
    let (n, r, p) = (problem.n, problem.r(), problem.p);
    let m = smallest_feasible(n, |m| {
        m >= r && problem.feasible(&problem.block_counts(&BlockSpec::clique(n, r, m, 1.0, p)))
    })
    .ok_or_else(|| Error::Infeasible("planted clique infeasible even at m = n".into()))?;
    Ok(block_solution(problem, &BlockSpec::clique(n, r, m, 1.0, p), Method::PlantedClique, Some(m)))
}

/// Q ≡ q solving the density constraint(s) with equality.
pub fn constant_solution(problem: &TailProblem) -> Result<VariationalSolution> {
    let (n, r) = (problem.n, problem.r());
    let q = if problem.induced {
        induced_constant(problem)?
    } else {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for (k, c) in problem.constraints.iter().enumerate() {
            let e = c.graph.num_edges() as f64;
            let maps = edge_injective_maps(&c.graph, n);
            let q = (problem.target(k) / maps).powf(1.0 / e);
            match c.direction {
                Direction::Upper => lo = lo.max(q),
                Direction::Lower => hi = hi.min(q),
            }
        }
        let has_upper = problem.constraints.iter().any(|c| c.direction == Direction::Upper);
        let q = if has_upper { lo } else { hi };
        if q > hi * (1.0 + 1e-12) || lo > 1.0 {
            return Err(Error::Infeasible(format!("no constant q satisfies all constraints (need q ∈ [{lo}, {hi}])")));
        }
        q.min(1.0)
    };
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Infeasible(format!("constant solution q = {q} outside [0,1]")));
    }
    let b = BlockSpec { sizes: vec![0, n], by_hub_count: vec![q; r + 1] };
    Ok(block_solution(problem, &b, Method::Constant, None))
}

/// Constant q nearest p with (n)_v q^e (1−q)^{M−e} hitting the induced target.
fn induced_constant(problem: &TailProblem) -> Result<f64> {
    let g = &problem.constraints[0].graph;
    let e = g.num_edges() as f64;
    let miss = binomial_f(g.num_vertices(), g.r()) - e;
    let maps = falling(problem.n, g.num_vertices());
    let target = problem.target(0);
    let f = |q: f64| maps * q.powf(e) * (1.0 - q).powf(miss);
    let peak = if miss == 0.0 { 1.0 } else { e / (e + miss) };
    if f(peak) < target {
        return Err(Error::Infeasible("constant tensor cannot reach the induced target".into()));
    }
    let p = problem.p;
    if f(p) >= target {
        return Ok(p);
    }
    // lo infeasible, hi feasible
    let (mut lo, mut hi) = (p, peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Best value over x-weighted hub or clique profiles, scanning the block size.
fn profile_search(problem: &TailProblem, clique: bool) -> Result<VariationalSolution> {
    all_upper(problem)?;
    let (n, r, p) = (problem.n, problem.r(), problem.p);
    let make = |m: usize, x: f64| {
        if clique {
            BlockSpec::clique(n, r, m, x, p)
        } else {
            BlockSpec::hub(n, r, m, x, p)
        }
    };
    let lo_m = if clique { r } else { 1 };
    let best = (lo_m..=n)
        .into_par_iter()
        .filter_map(|m| {
            if !problem.feasible(&problem.block_counts(&make(m, 1.0))) {
                return None;
            }
            let (mut lo, mut hi) = (p, 1.0f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if problem.feasible(&problem.block_counts(&make(m, mid))) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let b = make(m, hi);
            Some((b.entropy(p, r), m, hi))
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let (_, m, x) = best.ok_or_else(|| Error::Infeasible("no feasible profile".into()))?;
    let method = if clique { Method::CliqueProfile } else { Method::HubProfile };
    Ok(block_solution(problem, &make(m, x), method, Some(m)))
}

/// x on r-sets meeting [m], p elsewhere; best (m, x) by entropy.
pub fn hub_profile(problem: &TailProblem) -> Result<VariationalSolution> {
    profile_search(problem, false)
}

/// x inside [m], p elsewhere; best (m, x) by entropy.
pub fn clique_profile(problem: &TailProblem) -> Result<VariationalSolution> {
    profile_search(problem, true)
}

/// Q = 1/2 on r-sets meeting [m], p elsewhere; best feasible m.
pub fn half_density_hub(problem: &TailProblem) -> Result<VariationalSolution> {
    let (n, r, p) = (problem.n, problem.r(), problem.p);
    let best = (1..=n)
        .filter_map(|m| {
            let b = BlockSpec::hub(n, r, m, 0.5, p);
            problem.feasible(&problem.block_counts(&b)).then(|| (b.entropy(p, r), m))
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (_, m) = best.ok_or_else(|| Error::Infeasible("half-density hub infeasible for every size".into()))?;
    Ok(block_solution(problem, &BlockSpec::hub(n, r, m, 0.5, p), Method::HalfDensityHub, Some(m)))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    pub seed: u64,
    /// number of random-start descents
    pub restarts: usize,
    /// projected-gradient steps per start
    pub iters: usize,
    /// skip descent when n^{v(H)} · e(H) summed over constraints exceeds this
    pub descent_cap: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { seed: 0, restarts: 2, iters: 600, descent_cap: 2.5e5 }
    }
}

fn descent_cost(problem: &TailProblem) -> f64 {
    (0..problem.constraints.len())
        .map(|k| {
            let g = problem.counted(k).graph;
            (problem.n as f64).powi(g.num_vertices() as i32) * g.num_edges() as f64
        })
        .sum()
}

/// Augmented-Lagrangian projected gradient descent from `x0`.
pub fn projected_descent(
    problem: &TailProblem,
    x0: &SymTensor,
    iters: usize,
    fallback: Option<&SymTensor>,
) -> Result<VariationalSolution> {
    let p = problem.p;
    let kc = problem.constraints.len();
    let signs: Vec<f64> =
        problem.constraints.iter().map(|c| if c.direction == Direction::Upper { 1.0 } else { -1.0 }).collect();
    let targets: Vec<f64> = (0..kc).map(|k| problem.target(k)).collect();
    let counted: Vec<SignedRGraph> = (0..kc).map(|k| problem.counted(k)).collect();
    let scale = relent(p, x0)?.max(1.0);
    let eval = |x: &SymTensor, grad: bool| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut gs = Vec::new();
        let mut grads = Vec::new();
        for k in 0..kc {
            if grad {
                let (h, g) = signed_hom_with_gradient(&counted[k], x)?;
                gs.push(signs[k] * (h / targets[k] - 1.0));
                grads.push(g.into_iter().map(|d| signs[k] * d / targets[k]).collect());
            } else {
                let tensors = vec![x.clone(); counted[k].graph.num_edges()];
                let h = crate::homomorphism::hom_signed(&counted[k], &tensors)?;
                gs.push(signs[k] * (h / targets[k] - 1.0));
            }
        }
        Ok((gs, grads))
    };
    let lagr = |x: &SymTensor, gs: &[f64], lam: &[f64], rho: f64| -> f64 {
        let f: f64 = x.values().iter().map(|&v| relent_unchecked(p, v)).sum::<f64>() / scale;
        f + gs
            .iter()
            .zip(lam)
            .map(|(&g, &l)| ((l - rho * g).max(0.0).powi(2) - l * l) / (2.0 * rho))
            .sum::<f64>()
    };
    let mut x = x0.clone();
    let mut lam = vec![0.0; kc];
    let mut rho = 10.0;
    let mut eta = 1e-2;
    let mut prev_viol = f64::INFINITY;
    let schedule = [1e-3, 1e-5, 1e-9];
    let per_stage = (iters / schedule.len()).max(1);
    'outer: for &gamma in &schedule {
        let (lo, hi) = (gamma, 1.0 - gamma);
        x.values_mut().iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        for step in 0..per_stage {
            let (gs, grads) = eval(&x, true)?;
            let cur = lagr(&x, &gs, &lam, rho);
            let mult: Vec<f64> = gs.iter().zip(&lam).map(|(&g, &l)| (l - rho * g).max(0.0)).collect();
            let grad: Vec<f64> = (0..x.len())
                .map(|i| {
                    let v = x.values()[i];
                    let df = ((v * (1.0 - p)) / (p * (1.0 - v))).ln() / scale;
                    df - (0..kc).map(|k| mult[k] * grads[k][i]).sum::<f64>()
                })
                .collect();
            let mut accepted = false;
            let mut cand = x.clone();
            for _ in 0..40 {
                for (c, (&v, &g)) in cand.values_mut().iter_mut().zip(x.values().iter().zip(&grad)) {
                    *c = (v - eta * g).clamp(lo, hi);
                }
                let (gc, _) = eval(&cand, false)?;
                let lc = lagr(&cand, &gc, &lam, rho);
                let dec: f64 = cand.values().iter().zip(x.values()).zip(&grad).map(|((c, v), g)| g * (v - c)).sum();
                if lc <= cur - 1e-4 * dec {
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            let moved: f64 = cand.values().iter().zip(x.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if accepted {
                x = cand;
                eta = (eta * 2.0).min(1e3);
            }
            if (step + 1) % 50 == 0 || !accepted || moved / eta.max(1e-300) < 1e-7 {
                let (gs, _) = eval(&x, false)?;
                let viol = gs.iter().map(|&g| (-g).max(0.0)).fold(0.0, f64::max);
                for k in 0..kc {
                    lam[k] = (lam[k] - rho * gs[k]).max(0.0);
                }
                if viol > 0.25 * prev_viol {
                    rho = (rho * 2.0).min(1e8);
                }
                prev_viol = viol;
                if (!accepted || moved / eta.max(1e-300) < 1e-7) && viol <= 1e-10 {
                    if gamma == schedule[schedule.len() - 1] {
                        break 'outer;
                    }
                    break;
                }
            }
        }
    }
    // post-hoc feasibility: move toward a feasible point
    let counts = problem.counts(&x)?;
    if !problem.feasible(&counts) {
        if let Some(f) = fallback {
            let mix = |tau: f64| x.zip(f, |a, b| (1.0 - tau) * a + tau * b).expect("same shape");
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if problem.slacks(&problem.counts(&mix(mid))?).iter().all(|&s| s >= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            x = mix(hi);
        }
    }
    let counts = problem.counts(&x)?;
    Ok(VariationalSolution {
        value: relent(p, &x)?,
        residuals: problem.slacks(&counts),
        q: x,
        method: Method::ProjectedDescent,
        block: None,
        candidates: Vec::new(),
    })
}

fn is_feasible(s: &VariationalSolution) -> bool {
    s.residuals.iter().all(|&r| r >= -FEAS_TOL)
}

/// Best of the closed-form constructions and projected descent from several starts.
pub fn solve(problem: &TailProblem, opts: &SolveOptions) -> Result<VariationalSolution> {
    let upper_only = !problem.induced && problem.constraints.iter().all(|c| c.direction == Direction::Upper);
    let mut cands: Vec<(Method, Result<VariationalSolution>)> = Vec::new();
    cands.push((Method::Constant, constant_solution(problem)));
    if upper_only {
        cands.push((Method::PlantedHub, planted_hub(problem)));
        cands.push((Method::PlantedClique, planted_clique(problem)));
        cands.push((Method::HubProfile, hub_profile(problem)));
        cands.push((Method::CliqueProfile, clique_profile(problem)));
    }
    if problem.induced {
        cands.push((Method::HalfDensityHub, half_density_hub(problem)));
    }
    let mut best_feasible: Option<VariationalSolution> = None;
    for (_, c) in &cands {
        if let Ok(s) = c {
            if is_feasible(s) && best_feasible.as_ref().is_none_or(|b| s.value < b.value) {
                best_feasible = Some(s.clone());
            }
        }
    }
    if descent_cost(problem) <= opts.descent_cap {
        let n = problem.n;
        let r = problem.r();
        let p = problem.p;
        let mut starts: Vec<SymTensor> = Vec::new();
        if let Some(b) = &best_feasible {
            starts.push(b.q.clone());
        }
        for i in 0..opts.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, i as u64));
            let (lo, hi) = if upper_only { (p, 1.0) } else { (0.0, p) };
            let len = binomial_f(n, r) as usize;
            let vals = (0..len).map(|_| rng.gen_range(lo..hi)).collect();
            starts.push(SymTensor::from_values(n, r, vals).expect("valid shape"));
        }
        let fallback = best_feasible.as_ref().map(|b| b.q.clone());
        let runs: Vec<Result<VariationalSolution>> = starts
            .par_iter()
            .map(|s| projected_descent(problem, s, opts.iters, fallback.as_ref()))
            .collect();
        for r in runs {
            cands.push((Method::ProjectedDescent, r));
        }
    }
    let candidates: Vec<Candidate> = cands
        .iter()
        .map(|(m, c)| match c {
            Ok(s) if is_feasible(s) => Candidate { method: *m, value: Some(s.value), note: String::new() },
            Ok(s) => Candidate { method: *m, value: None, note: format!("infeasible: slacks {:?}", s.residuals) },
            Err(e) => Candidate { method: *m, value: None, note: e.to_string() },
        })
        .collect();
    let mut best: Option<VariationalSolution> = None;
    for (_, c) in cands {
        if let Ok(s) = c {
            if is_feasible(&s) && best.as_ref().is_none_or(|b| s.value < b.value) {
                best = Some(s);
            }
        }
    }
    let mut best = best.ok_or_else(|| Error::Infeasible("no feasible candidate".into()))?;
    best.candidates = candidates;
    Ok(best)
}

/// n^r p^Δ log(1/p).
pub fn phi_lower_bound_reference(h: &RGraph, n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    let delta = h.max_degree();
    if delta < 2 {
        return Err(Error::Parameter("reference scale needs Δ(H) ≥ 2".into()));
    }
    Ok((n as f64).powi(h.r() as i32) * p.powi(delta as i32) * (1.0 / p).ln())
}

/// Φ^ind via the same solver.
pub fn phi_induced(h: &RGraph, n: usize, p: f64, delta: f64, opts: &SolveOptions) -> Result<VariationalSolution> {
    solve(&TailProblem::induced(h, n, p, delta)?, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiLadderPoint {
    pub n: usize,
    pub value: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub clamp_feasible: bool,
    pub clamp_value_before: f64,
    pub clamp_value_after: f64,
    pub ladder: Vec<PsiLadderPoint>,
    /// max/min of value/(n^r p) across the ladder
    pub band_ratio: f64,
    pub band_ok: bool,
    pub passed: bool,
}

/// Clamping check and n-ladder scale check for a lower-tail problem.
pub fn psi_properties_check(
    h: &RGraph,
    n: usize,
    p: f64,
    delta: f64,
    ladder: &[usize],
    opts: &SolveOptions,
) -> Result<PsiReport> {
    let problem = TailProblem::lower(h, n, p, delta)?;
    let sol = solve(&problem, opts)?;
    let clamped = sol.q.map(|x| x.min(p));
    let after = relent(p, &clamped)?;
    let clamp_feasible = problem.feasible(&problem.counts(&clamped)?);
    let mut points = Vec::new();
    for &m in ladder {
        let pr = TailProblem::lower(h, m, p, delta)?;
        let v = solve(&pr, opts)?.value;
        points.push(PsiLadderPoint {
            n: m,
            value: v,
            normalized: v / ((m as f64).powi(h.r() as i32) * p),
        });
    }
    let hi = points.iter().map(|x| x.normalized).fold(0.0, f64::max);
    let lo = points.iter().map(|x| x.normalized).fold(f64::INFINITY, f64::min);
    let band_ratio = if points.is_empty() { 1.0 } else { hi / lo };
    let band_ok = points.is_empty() || (lo > 0.0 && band_ratio <= 2.0);
    let clamp_ok = clamp_feasible && after <= sol.value * (1.0 + 1e-12) + 1e-15;
    Ok(PsiReport {
        clamp_feasible,
        clamp_value_before: sol.value,
        clamp_value_after: after,
        ladder: points,
        band_ratio,
        band_ok,
        passed: clamp_ok && band_ok,
    })
}
