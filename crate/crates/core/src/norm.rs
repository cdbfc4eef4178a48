//! Dual seminorms ‖Z‖_B* and ‖Z‖_𝔅* over test tensors.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{BaseSystem, TestTensor, WeightedBase};
use crate::combin::next_tuple;
use crate::error::{Error, Result};
use crate::stats::derive_seed;
use crate::tensor::{lin_form, DenseTensor, SymTensor};

/// Largest number of enumerated factor configurations for the exact oracle.
pub const EXACT_CONFIG_LIMIT: f64 = (1u64 << 24) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    Exact,
    HeuristicLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Exact,
    Heuristic { restarts: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormCertificate {
    pub value: f64,
    /// ⟨Z, witness⟩
    pub inner: f64,
    /// ‖witness‖_B
    pub size: f64,
    pub witness: TestTensor,
    pub mode: CertMode,
}

impl NormCertificate {
    fn from_witness(z: &DenseTensor, witness: TestTensor, p: f64, mode: CertMode) -> Result<Self> {
        let inner = lin_form(z, &witness.to_dense())?;
        let size = witness.size(p);
        Ok(NormCertificate { value: inner.abs() / size, inner, size, witness, mode })
    }

    /// Recompute |⟨Z,T⟩|/‖T‖_B from the witness.
    pub fn recompute(&self, z: &DenseTensor, p: f64) -> Result<f64> {
        Ok(lin_form(z, &self.witness.to_dense())?.abs() / self.witness.size(p))
    }
}

/// Precomputed projections of every ordered tuple onto each member.
struct Problem<'a> {
    z: &'a [f64],
    fidx: Vec<Vec<u32>>,
    flen: Vec<usize>,
    coef: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(z: &'a DenseTensor, wb: &'a WeightedBase, p: f64) -> Result<Self> {
        if z.r != wb.r() {
            return Err(Error::ShapeMismatch(format!("tensor has r={}, base has r={}", z.r, wb.r())));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Parameter(format!("p = {p} must lie in (0,1]")));
        }
        let n = z.n;
        let r = z.r;
        let total = z.data.len();
        let mut fidx = vec![Vec::with_capacity(total); wb.members().len()];
        let mut t = vec![0usize; r];
        for _ in 0..total {
            for (k, pos) in wb.positions().iter().enumerate() {
                fidx[k].push(pos.iter().fold(0usize, |a, &q| a * n + t[q]) as u32);
            }
            next_tuple(&mut t, n);
        }
        let flen = wb.positions().iter().map(|p| n.pow(p.len() as u32)).collect();
        let coef = (0..wb.members().len()).map(|k| wb.coefficient(k, n, p)).collect();
        Ok(Problem { z: &z.data, fidx, flen, coef })
    }

    /// Best replacement for factor `k` with the others fixed: (value, factor).
    fn best_factor(&self, factors: &[Vec<bool>], k: usize, exact: bool) -> Option<(f64, Vec<bool>)> {
        let nk = self.flen[k];
        let mut w = vec![0.0f64; nk];
        let mut m = vec![0.0f64; nk];
        let others: Vec<usize> = (0..factors.len()).filter(|&j| j != k).collect();
        for t in 0..self.z.len() {
            if others.iter().all(|&j| factors[j][self.fidx[j][t] as usize]) {
                let x = self.fidx[k][t] as usize;
                w[x] += 1.0;
                m[x] += self.z[t];
            }
        }
        let mut kconst = 0.0f64;
        for &j in &others {
            kconst = kconst.max(self.coef[j] * factors[j].iter().filter(|&&b| b).count() as f64);
        }
        solve_factor(&m, &w, self.coef[k], kconst, exact)
    }

    fn ratio(&self, factors: &[Vec<bool>]) -> f64 {
        let mut inner = 0.0f64;
        let mut l1 = 0.0f64;
        for t in 0..self.z.len() {
            if (0..factors.len()).all(|j| factors[j][self.fidx[j][t] as usize]) {
                inner += self.z[t];
                l1 += 1.0;
            }
        }
        if l1 == 0.0 {
            return 0.0;
        }
        let mut size = l1;
        for (j, f) in factors.iter().enumerate() {
            size = size.max(self.coef[j] * f.iter().filter(|&&b| b).count() as f64);
        }
        inner.abs() / size
    }

    fn ones(&self) -> Vec<Vec<bool>> {
        self.flen.iter().map(|&l| vec![true; l]).collect()
    }
}

/// Maximize |Σ_{x∈S} m(x)| / max(Σ_{x∈S} w(x), a|S|, K) over S with Σ w > 0.
fn solve_factor(m: &[f64], w: &[f64], a: f64, kconst: f64, exact: bool) -> Option<(f64, Vec<bool>)> {
    let items: Vec<usize> = (0..m.len()).filter(|&x| w[x] > 0.0).collect();
    if items.is_empty() {
        return None;
    }
    let den = |ws: f64, s: usize| ws.max(a * s as f64).max(kconst);
    let w0 = w[items[0]];
    let uniform = items.iter().all(|&x| w[x] == w0);
    let wt: f64 = items.iter().map(|&x| w[x]).sum();
    let states = (items.len() + 1) as f64 * (wt + 1.0) * items.len() as f64;
    if uniform || (!exact && states > 4e6) {
        // sorted prefixes: exact when weights are uniform
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut orders: Vec<Vec<usize>> = Vec::new();
        let mut desc = items.clone();
        desc.sort_by(|&x, &y| m[y].partial_cmp(&m[x]).unwrap().then(x.cmp(&y)));
        let mut asc = items.clone();
        asc.sort_by(|&x, &y| m[x].partial_cmp(&m[y]).unwrap().then(x.cmp(&y)));
        orders.push(desc);
        orders.push(asc);
        if !uniform {
            let mut d = items.clone();
            d.sort_by(|&x, &y| (m[y] / w[y]).partial_cmp(&(m[x] / w[x])).unwrap().then(x.cmp(&y)));
            let mut u = items.clone();
            u.sort_by(|&x, &y| (m[x] / w[x]).partial_cmp(&(m[y] / w[y])).unwrap().then(x.cmp(&y)));
            orders.push(d);
            orders.push(u);
        }
        for ord in &orders {
            let (mut sm, mut sw) = (0.0, 0.0);
            for (s, &x) in ord.iter().enumerate() {
                sm += m[x];
                sw += w[x];
                let v = sm.abs() / den(sw, s + 1);
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, ord[..=s].to_vec()));
                }
            }
        }
        let (v, set) = best?;
        let mut f = vec![false; m.len()];
        set.into_iter().for_each(|x| f[x] = true);
        return Some((v, f));
    }
    // knapsack over (count, weight)
    let ni = items.len();
    let wi: Vec<usize> = items.iter().map(|&x| w[x] as usize).collect();
    let wmax: usize = wi.iter().sum();
    let width = wmax + 1;
    let mut best: Option<(f64, Vec<bool>)> = None;
    for sign in [1.0f64, -1.0] {
        let mut dp = vec![f64::NEG_INFINITY; (ni + 1) * width];
        dp[0] = 0.0;
        let mut take = vec![false; ni * (ni + 1) * width];
        let mut wsum = 0;
        for (i, &x) in items.iter().enumerate() {
            let v = sign * m[x];
            wsum += wi[i];
            for s in (1..=i + 1).rev() {
                for ww in (wi[i]..=wsum).rev() {
                    let prev = dp[(s - 1) * width + ww - wi[i]];
                    if prev == f64::NEG_INFINITY {
                        continue;
                    }
                    let cand = prev + v;
                    if cand > dp[s * width + ww] {
                        dp[s * width + ww] = cand;
                        take[(i * (ni + 1) + s) * width + ww] = true;
                    }
                }
            }
        }
        let mut arg: Option<(f64, usize, usize)> = None;
        for s in 1..=ni {
            for ww in 1..=wmax {
                let val = dp[s * width + ww];
                if val == f64::NEG_INFINITY || val < 0.0 {
                    continue;
                }
                let r = val / den(ww as f64, s);
                if arg.is_none_or(|(b, _, _)| r > b) {
                    arg = Some((r, s, ww));
                }
            }
        }
        if let Some((r, mut s, mut ww)) = arg {
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                let mut f = vec![false; m.len()];
                for i in (0..ni).rev() {
                    if s > 0 && take[(i * (ni + 1) + s) * width + ww] {
                        f[items[i]] = true;
                        s -= 1;
                        ww -= wi[i];
                    }
                }
                best = Some((r, f));
            }
        }
    }
    best
}

/// Number of configurations the exact oracle would enumerate.
pub fn exact_config_count(wb: &WeightedBase, n: usize) -> f64 {
    let lens: Vec<usize> = wb.positions().iter().map(|p| p.len()).filter(|&l| l > 0).collect();
    if lens.is_empty() {
        return 1.0;
    }
    let biggest = *lens.iter().max().expect("nonempty");
    let total: f64 = lens.iter().map(|&l| (n as f64).powi(l as i32)).sum();
    2f64.powf(total - (n as f64).powi(biggest as i32))
}

/// Exact ‖Z‖_B* with an argmax witness.
pub fn dual_norm_exact(z: &DenseTensor, wb: &WeightedBase, p: f64) -> Result<NormCertificate> {
    let configs = exact_config_count(wb, z.n);
    if configs > EXACT_CONFIG_LIMIT {
        return Err(Error::ExactInfeasible { configs });
    }
    let prob = Problem::new(z, wb, p)?;
    let nonempty: Vec<usize> = (0..wb.members().len()).filter(|&k| !wb.positions()[k].is_empty()).collect();
    if nonempty.is_empty() {
        return NormCertificate::from_witness(z, TestTensor::all_ones(z.n, wb.clone()), p, CertMode::Exact);
    }
    let kstar = *nonempty.iter().max_by_key(|&&k| (prob.flen[k], std::cmp::Reverse(k))).expect("nonempty");
    let enumerated: Vec<usize> = nonempty.iter().copied().filter(|&k| k != kstar).collect();
    let total = configs as u64;
    let decode = |mut idx: u64| -> Option<Vec<Vec<bool>>> {
        let mut f = prob.ones();
        for &k in &enumerated {
            let len = prob.flen[k];
            let bits = idx & ((1u64 << len) - 1);
            idx >>= len;
            if bits == 0 {
                return None;
            }
            f[k] = (0..len).map(|i| bits >> i & 1 == 1).collect();
        }
        Some(f)
    };
    let chunk = 1u64 << 10;
    let nchunks = total.div_ceil(chunk);
    let best = (0..nchunks)
        .into_par_iter()
        .filter_map(|c| {
            let mut best: Option<(f64, u64, Vec<bool>)> = None;
            for idx in c * chunk..((c + 1) * chunk).min(total) {
                let Some(f) = decode(idx) else { continue };
                if let Some((v, fk)) = prob.best_factor(&f, kstar, true) {
                    if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                        best = Some((v, idx, fk));
                    }
                }
            }
            best
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let factors = match best {
        Some((_, idx, fk)) => {
            let mut f = decode(idx).expect("valid configuration");
            f[kstar] = fk;
            f
        }
        None => prob.ones(),
    };
    let witness = TestTensor::new(z.n, wb.clone(), factors)?;
    NormCertificate::from_witness(z, witness, p, CertMode::Exact)
}

/// Certified lower bound on ‖Z‖_B* by alternating exact single-factor maximization.
pub fn dual_norm_heuristic(
    z: &DenseTensor,
    wb: &WeightedBase,
    p: f64,
    restarts: usize,
    seed: u64,
) -> Result<NormCertificate> {
    let prob = Problem::new(z, wb, p)?;
    let nonempty: Vec<usize> = (0..wb.members().len()).filter(|&k| !wb.positions()[k].is_empty()).collect();
    if nonempty.is_empty() {
        return NormCertificate::from_witness(
            z,
            TestTensor::all_ones(z.n, wb.clone()),
            p,
            CertMode::HeuristicLowerBound,
        );
    }
    let runs: Vec<(f64, usize, Vec<Vec<bool>>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let mut f = prob.ones();
            if i > 0 {
                for _ in 0..20 {
                    for &k in &nonempty {
                        let dens: f64 = rng.gen_range(0.1..0.9);
                        let mut v: Vec<bool> = (0..prob.flen[k]).map(|_| rng.gen::<f64>() < dens).collect();
                        if !v.iter().any(|&b| b) {
                            let j = rng.gen_range(0..v.len());
                            v[j] = true;
                        }
                        f[k] = v;
                    }
                    if prob.ratio(&f) > 0.0 || prob.z.iter().all(|&x| x == 0.0) {
                        break;
                    }
                }
            }
            let mut cur = prob.ratio(&f);
            for _ in 0..200 {
                let mut improved = false;
                for &k in &nonempty {
                    if let Some((v, fk)) = prob.best_factor(&f, k, false) {
                        if v > cur * (1.0 + 1e-12) + 1e-300 {
                            f[k] = fk;
                            cur = prob.ratio(&f);
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            (cur, i, f)
        })
        .collect();
    let mut best = &runs[0];
    for run in &runs[1..] {
        if run.0 > best.0 {
            best = run;
        }
    }
    let witness = match TestTensor::new(z.n, wb.clone(), best.2.clone()) {
        Ok(t) => t,
        Err(_) => TestTensor::all_ones(z.n, wb.clone()),
    };
    NormCertificate::from_witness(z, witness, p, CertMode::HeuristicLowerBound)
}

pub fn dual_norm(z: &DenseTensor, wb: &WeightedBase, p: f64, mode: NormMode) -> Result<NormCertificate> {
    match mode {
        NormMode::Exact => dual_norm_exact(z, wb, p),
        NormMode::Heuristic { restarts, seed } => dual_norm_heuristic(z, wb, p, restarts, seed),
    }
}

#[derive(Debug, Clone)]
pub struct SystemNorm {
    pub value: f64,
    pub argmax: usize,
    pub per_edge: Vec<NormCertificate>,
}

/// ‖Z‖_𝔅* = max over the system's bases; bases of identical shape share one computation.
pub fn system_norm(z: &DenseTensor, sys: &BaseSystem, p: f64, mode: NormMode) -> Result<SystemNorm> {
    let mut cache: HashMap<_, NormCertificate> = HashMap::new();
    let mut per_edge = Vec::with_capacity(sys.bases.len());
    for wb in &sys.bases {
        let key = wb.shape_key();
        let cert = match cache.get(&key) {
            Some(c) => c.clone(),
            None => {
                let c = dual_norm(z, wb, p, mode)?;
                cache.insert(key, c.clone());
                c
            }
        };
        let witness = TestTensor::new(z.n, wb.clone(), cert.witness.factors().to_vec())
            .unwrap_or_else(|_| TestTensor::all_ones(z.n, wb.clone()));
        per_edge.push(NormCertificate { witness, ..cert });
    }
    let mut argmax = 0;
    for (i, c) in per_edge.iter().enumerate() {
        if c.value > per_edge[argmax].value {
            argmax = i;
        }
    }
    Ok(SystemNorm { value: per_edge[argmax].value, argmax, per_edge })
}

#[derive(Debug, Clone)]
pub enum BallStatus {
    Inside,
    Outside(NormCertificate),
    Inconclusive { best_lower_bound: f64 },
}

/// Is ‖Q − A‖_𝔅* ≤ δ?
pub fn ball_membership(
    a: &SymTensor,
    q: &SymTensor,
    sys: &BaseSystem,
    p: f64,
    delta: f64,
    mode: NormMode,
) -> Result<BallStatus> {
    a.same_shape(q)?;
    if delta == f64::INFINITY {
        return Ok(BallStatus::Inside);
    }
    let z = q.zip(a, |x, y| x - y)?.to_dense();
    let s = system_norm(&z, sys, p, mode)?;
    let cert = s.per_edge[s.argmax].clone();
    if s.value > delta {
        return Ok(BallStatus::Outside(cert));
    }
    match mode {
        NormMode::Exact => Ok(BallStatus::Inside),
        NormMode::Heuristic { .. } => Ok(BallStatus::Inconclusive { best_lower_bound: s.value }),
    }
}
