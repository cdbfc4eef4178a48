//! Weighted bases, base systems and product test tensors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::combin::combinations;
use crate::error::{Error, Result};
use crate::hypergraph::{RGraph, SignedRGraph};
use crate::tensor::DenseTensor;

/// A weighted base over an edge: antichain of proper subsets plus ∅, with weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BaseJson", into = "BaseJson")]
pub struct WeightedBase {
    r: usize,
    edge: Vec<usize>,
    iota: Vec<usize>,
    members: Vec<Vec<usize>>,
    positions: Vec<Vec<usize>>,
    d_star: u32,
    d_b: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseJson {
    pub edge: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iota: Option<Vec<usize>>,
    pub members: Vec<Vec<usize>>,
    pub d_star: u32,
    pub d_b: BTreeMap<String, u32>,
}

pub fn member_key(b: &[usize]) -> String {
    b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl TryFrom<BaseJson> for WeightedBase {
    type Error = Error;
    fn try_from(j: BaseJson) -> Result<Self> {
        let iota = j.iota.unwrap_or_else(|| {
            let mut e = j.edge.clone();
            e.sort_unstable();
            e
        });
        let mut members = j.members.clone();
        if !members.iter().any(|m| m.is_empty()) {
            members.insert(0, Vec::new());
        }
        let d_b = members
            .iter()
            .map(|m| {
                let mut s = m.clone();
                s.sort_unstable();
                if s.is_empty() {
                    return Ok(j.d_b.get("").copied().unwrap_or(0));
                }
                j.d_b
                    .get(&member_key(&s))
                    .copied()
                    .ok_or_else(|| Error::InvalidBase(format!("missing weight for member {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        WeightedBase::with_iota(j.edge, iota, members, j.d_star, d_b)
    }
}

impl From<WeightedBase> for BaseJson {
    fn from(w: WeightedBase) -> Self {
        let d_b = w.members.iter().zip(&w.d_b).map(|(m, &d)| (member_key(m), d)).collect();
        let mut sorted_edge = w.edge.clone();
        sorted_edge.sort_unstable();
        let iota = if w.iota == sorted_edge { None } else { Some(w.iota.clone()) };
        BaseJson { edge: w.edge, iota, members: w.members, d_star: w.d_star, d_b }
    }
}

impl WeightedBase {
    /// Base with ι mapping coordinate k to the k-th smallest vertex of the edge.
    pub fn new(edge: Vec<usize>, members: Vec<Vec<usize>>, d_star: u32, d_b: Vec<u32>) -> Result<Self> {
        let mut iota = edge.clone();
        iota.sort_unstable();
        Self::with_iota(edge, iota, members, d_star, d_b)
    }

    pub fn with_iota(
        edge: Vec<usize>,
        iota: Vec<usize>,
        members: Vec<Vec<usize>>,
        d_star: u32,
        d_b: Vec<u32>,
    ) -> Result<Self> {
        let r = edge.len();
        if r == 0 {
            return Err(Error::InvalidBase("edge must be nonempty".into()));
        }
        let mut edge_s = edge.clone();
        edge_s.sort_unstable();
        if edge_s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidBase("edge has repeated vertices".into()));
        }
        let mut iota_s = iota.clone();
        iota_s.sort_unstable();
        if iota_s != edge_s {
            return Err(Error::InvalidBase("ι must be a bijection onto the edge".into()));
        }
        if members.len() != d_b.len() {
            return Err(Error::InvalidBase("one weight per member required".into()));
        }
        let mut ms: Vec<Vec<usize>> = Vec::with_capacity(members.len());
        for m in &members {
            let mut s = m.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != m.len() || !s.iter().all(|x| edge_s.contains(x)) || s.len() >= r {
                return Err(Error::InvalidBase(format!("member {m:?} is not a proper subset of the edge")));
            }
            if ms.contains(&s) {
                return Err(Error::InvalidBase(format!("member {m:?} repeated")));
            }
            ms.push(s);
        }
        let empties = ms.iter().filter(|m| m.is_empty()).count();
        if empties != 1 {
            return Err(Error::InvalidBase("∅ must be a member exactly once".into()));
        }
        for a in ms.iter().filter(|m| !m.is_empty()) {
            for b in ms.iter().filter(|m| !m.is_empty()) {
                if a != b && a.iter().all(|x| b.contains(x)) {
                    return Err(Error::InvalidBase(format!("{a:?} ⊂ {b:?}: members must form an antichain")));
                }
            }
        }
        // ∅ first
        let mut order: Vec<usize> = (0..ms.len()).collect();
        order.sort_by_key(|&k| (!ms[k].is_empty(), k));
        let ms: Vec<Vec<usize>> = order.iter().map(|&k| ms[k].clone()).collect();
        let d_b: Vec<u32> = order.iter().map(|&k| d_b[k]).collect();
        if d_b[0] != 0 {
            return Err(Error::InvalidBase("d_∅ must be 0".into()));
        }
        if let Some(d) = d_b.iter().find(|&&d| d > d_star) {
            return Err(Error::InvalidBase(format!("d_b = {d} exceeds d* = {d_star}")));
        }
        let positions = ms
            .iter()
            .map(|m| (0..r).filter(|&k| m.contains(&iota[k])).collect())
            .collect();
        Ok(WeightedBase { r, edge, iota, members: ms, positions, d_star, d_b })
    }

    /// Matrix base {∅,{1},{2}} with d* = 2Δ−2 and d_b = Δ−1.
    pub fn matrix(delta: u32) -> Result<Self> {
        if delta == 0 {
            return Err(Error::Parameter("Δ must be positive".into()));
        }
        Self::new(vec![0, 1], vec![vec![], vec![0], vec![1]], 2 * delta - 2, vec![0, delta - 1, delta - 1])
    }

    /// Star base {∅,{1}} with d* = d_1 = Δ−1.
    pub fn star(delta: u32) -> Result<Self> {
        if delta == 0 {
            return Err(Error::Parameter("Δ must be positive".into()));
        }
        Self::new(vec![0, 1], vec![vec![], vec![0]], delta - 1, vec![0, delta - 1])
    }

    /// All (r−1)-subsets plus ∅, with uniform weights.
    pub fn maximal(r: usize, d_star: u32, d_sub: u32) -> Result<Self> {
        let mut members = vec![vec![]];
        members.extend(combinations(r, r.saturating_sub(1)).into_iter().filter(|m| !m.is_empty()));
        let mut d_b = vec![0];
        d_b.extend(std::iter::repeat_n(d_sub, members.len() - 1));
        Self::new((0..r).collect(), members, d_star, d_b)
    }

    /// Default weights d^H(e), d^H_b(e) taken from `weights` for a base over an edge of a host graph.
    pub fn from_host(weights: &RGraph, edge: &[usize], members: &[Vec<usize>]) -> Result<Self> {
        let d_star = weights.edge_degree(edge) as u32;
        let d_b = members
            .iter()
            .map(|b| weights.dominated_degree(edge, b).map(|d| d as u32))
            .collect::<Result<Vec<_>>>()?;
        Self::new(edge.to_vec(), members.to_vec(), d_star, d_b)
    }

    pub fn r(&self) -> usize {
        self.r
    }
    pub fn edge(&self) -> &[usize] {
        &self.edge
    }
    pub fn iota(&self) -> &[usize] {
        &self.iota
    }
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }
    /// Coordinate positions of each member, aligned with `members()`.
    pub fn positions(&self) -> &[Vec<usize>] {
        &self.positions
    }
    pub fn d_star(&self) -> u32 {
        self.d_star
    }
    pub fn d_b(&self) -> &[u32] {
        &self.d_b
    }

    pub fn member_index(&self, b: &[usize]) -> Result<usize> {
        let mut s = b.to_vec();
        s.sort_unstable();
        self.members
            .iter()
            .position(|m| *m == s)
            .ok_or_else(|| Error::InvalidBase(format!("{b:?} is not a member")))
    }

    /// Prefactor n^{r−|b|} p^{d*−d_b} of member k.
    pub fn coefficient(&self, k: usize, n: usize, p: f64) -> f64 {
        (n as f64).powi((self.r - self.positions[k].len()) as i32) * p.powi((self.d_star - self.d_b[k]) as i32)
    }

    /// Key identifying the norm up to relabeling of the edge.
    pub fn shape_key(&self) -> (Vec<Vec<usize>>, u32, Vec<u32>) {
        (self.positions.clone(), self.d_star, self.d_b.clone())
    }
}

/// W_{n,p}(𝔅) = min over members of n^{r−|b|} p^{d*−d_b+2}.
pub fn growing(wb: &WeightedBase, n: usize, p: f64) -> Result<f64> {
    crate::tensor::check_p(p)?;
    Ok((0..wb.members().len()).map(|k| wb.coefficient(k, n, p) * p * p).fold(f64::INFINITY, f64::min))
}

/// One weighted base per edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSystem {
    pub bases: Vec<WeightedBase>,
}

impl BaseSystem {
    pub fn new(bases: Vec<WeightedBase>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::InvalidBase("empty base system".into()));
        }
        let r = bases[0].r();
        if bases.iter().any(|b| b.r() != r) {
            return Err(Error::InvalidBase("mixed uniformities".into()));
        }
        Ok(BaseSystem { bases })
    }

    /// Δ′-optimal dominating bases with weights d^H, d^H_b.
    pub fn default_for(h: &RGraph) -> Result<Self> {
        Self::dominating_with_weights(h, h)
    }

    /// Bases dominating w.r.t. H, weighted by the positive part H₊.
    pub fn signed_for(sh: &SignedRGraph) -> Result<Self> {
        Self::dominating_with_weights(&sh.graph, &sh.positive_part())
    }

    fn dominating_with_weights(h: &RGraph, weights: &RGraph) -> Result<Self> {
        let cert = h.delta_prime()?;
        let bases = cert
            .per_edge
            .iter()
            .map(|pe| WeightedBase::from_host(weights, &pe.base.edge, &pe.base.members))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bases)
    }

    /// All (r−1)-subsets of each edge, weighted by H.
    pub fn maximal_for(h: &RGraph) -> Result<Self> {
        let r = h.r();
        let bases = h
            .edges()
            .iter()
            .map(|e| {
                let mut members = vec![vec![]];
                members.extend(combinations(r, r - 1).into_iter().filter(|c| !c.is_empty()).map(|c| c.iter().map(|&k| e[k]).collect()));
                WeightedBase::from_host(h, e, &members)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bases)
    }
}

/// Product of Boolean factors over coordinate projections.
#[derive(Debug, Clone, PartialEq)]
pub struct TestTensor {
    n: usize,
    base: WeightedBase,
    factors: Vec<Vec<bool>>,
}

impl TestTensor {
    /// `factors[k]` is the indicator on [n]^{|b_k|} (row-major over the member's positions).
    pub fn new(n: usize, base: WeightedBase, factors: Vec<Vec<bool>>) -> Result<Self> {
        if factors.len() != base.members().len() {
            return Err(Error::InvalidTensor("one factor per member required".into()));
        }
        for (k, f) in factors.iter().enumerate() {
            let want = n.pow(base.positions()[k].len() as u32);
            if f.len() != want {
                return Err(Error::InvalidTensor(format!("factor {k} has {} entries, expected {want}", f.len())));
            }
            if !f.iter().any(|&x| x) {
                return Err(Error::InvalidTensor("test tensor is identically zero".into()));
            }
        }
        let t = TestTensor { n, base, factors };
        if t.l1() == 0.0 {
            return Err(Error::InvalidTensor("test tensor is identically zero".into()));
        }
        Ok(t)
    }

    pub fn all_ones(n: usize, base: WeightedBase) -> Self {
        let factors = base.positions().iter().map(|p| vec![true; n.pow(p.len() as u32)]).collect();
        TestTensor { n, base, factors }
    }

    /// Build from explicit supports per member (lists of coordinate tuples).
    pub fn from_supports(n: usize, base: WeightedBase, supports: &[Vec<Vec<usize>>]) -> Result<Self> {
        if supports.len() != base.members().len() {
            return Err(Error::InvalidTensor("one support per member required".into()));
        }
        let mut factors = Vec::with_capacity(supports.len());
        for (k, s) in supports.iter().enumerate() {
            let len = base.positions()[k].len();
            let mut f = vec![false; n.pow(len as u32)];
            if len == 0 {
                f[0] = true;
            }
            for x in s {
                if x.len() != len || x.iter().any(|&i| i >= n) {
                    return Err(Error::InvalidTensor(format!("support tuple {x:?} has wrong shape")));
                }
                f[x.iter().fold(0, |a, &i| a * n + i)] = true;
            }
            factors.push(f);
        }
        Self::new(n, base, factors)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn base(&self) -> &WeightedBase {
        &self.base
    }
    pub fn factors(&self) -> &[Vec<bool>] {
        &self.factors
    }

    #[inline]
    fn factor_offset(&self, k: usize, tuple: &[usize]) -> usize {
        self.base.positions()[k].iter().fold(0, |a, &pos| a * self.n + tuple[pos])
    }

    pub fn eval(&self, tuple: &[usize]) -> bool {
        (0..self.factors.len()).all(|k| self.factors[k][self.factor_offset(k, tuple)])
    }

    pub fn to_dense(&self) -> DenseTensor {
        let r = self.base.r();
        let mut d = DenseTensor::zeros(self.n, r);
        let mut t = vec![0usize; r];
        for v in d.data.iter_mut() {
            *v = if self.eval(&t) { 1.0 } else { 0.0 };
            crate::combin::next_tuple(&mut t, self.n);
        }
        d
    }

    /// Number of ordered tuples where T = 1.
    pub fn l1(&self) -> f64 {
        self.to_dense().data.iter().sum()
    }

    pub fn factor_l1(&self, k: usize) -> f64 {
        self.factors[k].iter().filter(|&&x| x).count() as f64
    }

    /// ‖T‖_b for member index k.
    pub fn factor_size_at(&self, k: usize, p: f64) -> f64 {
        self.base.coefficient(k, self.n, p) * self.factor_l1(k)
    }

    pub fn factor_size(&self, b: &[usize], p: f64) -> Result<f64> {
        Ok(self.factor_size_at(self.base.member_index(b)?, p))
    }

    /// ‖T‖_B = max(‖T‖_1, max_b ‖T‖_b).
    pub fn size(&self, p: f64) -> f64 {
        (0..self.factors.len()).map(|k| self.factor_size_at(k, p)).fold(self.l1(), f64::max)
    }

    /// Supports of each factor as coordinate tuples.
    pub fn supports(&self) -> Vec<Vec<Vec<usize>>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let len = self.base.positions()[k].len();
                f.iter()
                    .enumerate()
                    .filter(|(_, &x)| x)
                    .map(|(mut i, _)| {
                        let mut t = vec![0; len];
                        for slot in t.iter_mut().rev() {
                            *slot = i % self.n;
                            i /= self.n;
                        }
                        t
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{clique, fano};

    #[test]
    fn validation() {
        assert!(WeightedBase::new(vec![0, 1], vec![vec![], vec![0]], 1, vec![0, 2]).is_err());
        assert!(WeightedBase::new(vec![0, 1, 2], vec![vec![], vec![0], vec![0, 1]], 2, vec![0, 1, 1]).is_err());
        assert!(WeightedBase::new(vec![0, 1], vec![vec![], vec![0, 1]], 2, vec![0, 1]).is_err());
        assert!(WeightedBase::new(vec![0, 1], vec![vec![0]], 2, vec![1]).is_err());
        let wb = WeightedBase::new(vec![3, 7], vec![vec![7], vec![]], 2, vec![1, 0]).unwrap();
        assert_eq!(wb.members()[0], Vec::<usize>::new());
        assert_eq!(wb.positions()[1], vec![1]);
    }

    #[test]
    fn sizes() {
        let n = 5;
        let wb = WeightedBase::matrix(2).unwrap();
        let mut rows = vec![false; n];
        rows[..2].iter_mut().for_each(|x| *x = true);
        let mut cols = vec![false; n];
        cols[1..4].iter_mut().for_each(|x| *x = true);
        let t = TestTensor::new(n, wb, vec![vec![true], rows, cols]).unwrap();
        assert_eq!(t.l1(), 6.0);
        let p: f64 = 0.5;
        assert_eq!(t.factor_size(&[], p).unwrap(), 25.0 * p.powi(2));
        assert_eq!(t.factor_size(&[0], p).unwrap(), 5.0 * p * 2.0);
        let n0 = n as f64 * p;
        assert!((t.size(p) - 2f64.max(n0) * 3f64.max(n0)).abs() < 1e-12);
        assert_eq!(t.factor_size(&[0], 1.0).unwrap(), 10.0);
        assert!(t.factor_size(&[0, 1], p).is_err());
    }

    #[test]
    fn systems() {
        let k4 = clique(4, 2).unwrap();
        let sys = BaseSystem::default_for(&k4).unwrap();
        assert_eq!(sys.bases.len(), 6);
        for b in &sys.bases {
            assert_eq!(b.d_star(), 4);
            assert!(growing(b, 20, 0.5).unwrap() > 0.0);
        }
        let f = BaseSystem::maximal_for(&fano().unwrap()).unwrap();
        assert_eq!(f.bases[0].members().len(), 4);
    }

    #[test]
    fn json() {
        let wb = WeightedBase::matrix(3).unwrap();
        let s = serde_json::to_string(&wb).unwrap();
        assert!(s.contains("\"d_star\":4"));
        let back: WeightedBase = serde_json::from_str(&s).unwrap();
        assert_eq!(back, wb);
    }

    #[test]
    fn supports_roundtrip() {
        let wb = WeightedBase::maximal(3, 2, 1).unwrap();
        let t = TestTensor::all_ones(3, wb.clone());
        let s = t.supports();
        assert_eq!(TestTensor::from_supports(3, wb, &s).unwrap(), t);
        assert_eq!(t.l1(), 27.0);
    }
}
