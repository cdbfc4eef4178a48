//! Symmetric tensors with distinct-coordinate support, dense ordered tensors,
//! Bernoulli product measures and relative entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combin::{factorial, next_tuple, SubsetIndex};
use crate::error::{Error, Result};
use crate::hypergraph::RGraph;
use crate::stats::{xlny, CompensatedSum};

/// Symmetric r-tensor on [n]^r, stored by r-subset (colex rank).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    n: usize,
    r: usize,
    index: SubsetIndex,
    values: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(n: usize, r: usize) -> Result<Self> {
        if r == 0 || n < r {
            return Err(Error::Parameter(format!("need n ≥ r ≥ 1, got n={n}, r={r}")));
        }
        let index = SubsetIndex::new(n, r);
        let values = vec![0.0; index.len()];
        Ok(SymTensor { n, r, index, values })
    }

    pub fn constant(n: usize, r: usize, c: f64) -> Result<Self> {
        let mut t = Self::zeros(n, r)?;
        t.values.fill(c);
        Ok(t)
    }

    /// The all-ones tensor on distinct coordinates.
    pub fn jay(n: usize, r: usize) -> Result<Self> {
        Self::constant(n, r, 1.0)
    }

    pub fn from_values(n: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        let mut t = Self::zeros(n, r)?;
        if values.len() != t.values.len() {
            return Err(Error::ShapeMismatch(format!("expected {} values, got {}", t.values.len(), values.len())));
        }
        t.values = values;
        Ok(t)
    }

    pub fn from_fn(n: usize, r: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(n, r)?;
        for k in 0..t.values.len() {
            let s = t.index.unrank(k);
            t.values[k] = f(&s);
        }
        Ok(t)
    }

    /// Boolean tensor of a hypergraph on [n] (n ≥ number of vertices).
    pub fn from_graph(g: &RGraph, n: usize) -> Result<Self> {
        if n < g.num_vertices() {
            return Err(Error::ShapeMismatch(format!("graph has {} vertices, n={n}", g.num_vertices())));
        }
        let mut t = Self::zeros(n, g.r())?;
        for e in g.edges() {
            t.set(e, 1.0)?;
        }
        Ok(t)
    }

    /// Hypergraph whose edges are the nonzero entries.
    pub fn support_graph(&self) -> RGraph {
        let edges = self.nonzero().map(|(s, _)| s).collect();
        RGraph::new(self.r, self.n, edges).expect("support of a tensor is simple")
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn index(&self) -> &SubsetIndex {
        &self.index
    }

    /// Value at an ordered tuple; 0 on repeated coordinates.
    #[inline]
    pub fn get(&self, tuple: &[usize]) -> f64 {
        match self.index.rank_tuple(tuple) {
            Some(k) => self.values[k],
            None => 0.0,
        }
    }

    #[inline]
    pub fn get_rank(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn set(&mut self, subset: &[usize], v: f64) -> Result<()> {
        if subset.len() != self.r || subset.iter().any(|&i| i >= self.n) {
            return Err(Error::InvalidTensor(format!("index {subset:?} out of shape")));
        }
        let k = self
            .index
            .rank_tuple(subset)
            .ok_or_else(|| Error::InvalidTensor(format!("index {subset:?} has repeated coordinates")))?;
        self.values[k] = v;
        Ok(())
    }

    pub fn subset(&self, k: usize) -> Vec<usize> {
        self.index.unrank(k)
    }

    /// Iterator over (subset, value) for nonzero entries.
    pub fn nonzero(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, &v)| (self.index.unrank(k), v))
    }

    pub fn is_weight(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn is_boolean(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn check_weight(&self) -> Result<()> {
        match self.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            None => Ok(()),
            Some(k) => Err(Error::InvalidTensor(format!(
                "entry {:?} = {} outside [0,1]",
                self.index.unrank(k),
                self.values[k]
            ))),
        }
    }

    pub fn same_shape(&self, other: &SymTensor) -> Result<()> {
        if self.n != other.n || self.r != other.r {
            return Err(Error::ShapeMismatch(format!(
                "(n={}, r={}) vs (n={}, r={})",
                self.n, self.r, other.n, other.r
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymTensor {
        let mut t = self.clone();
        t.values.iter_mut().for_each(|v| *v = f(*v));
        t
    }

    pub fn zip(&self, other: &SymTensor, f: impl Fn(f64, f64) -> f64) -> Result<SymTensor> {
        self.same_shape(other)?;
        let mut t = self.clone();
        t.values.iter_mut().zip(&other.values).for_each(|(a, &b)| *a = f(*a, b));
        Ok(t)
    }

    /// Sum over r-subsets.
    pub fn subset_sum(&self) -> f64 {
        crate::stats::compensated_sum(self.values.iter().copied())
    }

    /// Dense ordered-tuple representation.
    pub fn to_dense(&self) -> DenseTensor {
        let mut d = DenseTensor::zeros(self.n, self.r);
        let mut t = vec![0usize; self.r];
        let mut i = 0;
        loop {
            d.data[i] = self.get(&t);
            i += 1;
            if !next_tuple(&mut t, self.n) {
                break;
            }
        }
        d
    }

    /// Number of ordered tuples where the tensor equals 1 (Boolean tensors).
    pub fn ordered_l1(&self) -> f64 {
        self.subset_sum() * factorial(self.r) as f64
    }
}

/// The all-ones tensor J on distinct coordinates.
pub fn jay(n: usize, r: usize) -> Result<SymTensor> {
    SymTensor::jay(n, r)
}

/// General tensor on ordered tuples [n]^r, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    pub n: usize,
    pub r: usize,
    pub data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(n: usize, r: usize) -> Self {
        DenseTensor { n, r, data: vec![0.0; n.pow(r as u32)] }
    }

    #[inline]
    pub fn offset(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    #[inline]
    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.data[self.offset(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], v: f64) {
        let o = self.offset(tuple);
        self.data[o] = v;
    }

    pub fn same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.n != other.n || self.r != other.r {
            return Err(Error::ShapeMismatch(format!(
                "(n={}, r={}) vs (n={}, r={})",
                self.n, self.r, other.n, other.r
            )));
        }
        Ok(())
    }

    pub fn dot(&self, other: &DenseTensor) -> Result<f64> {
        self.same_shape(other)?;
        let mut s = CompensatedSum::new();
        for (a, b) in self.data.iter().zip(&other.data) {
            s.add(a * b);
        }
        Ok(s.value())
    }

    pub fn norm2_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &DenseTensor) {
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += c * b);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }
}

/// ⟨Z, T⟩ over ordered tuples.
pub fn lin_form(z: &DenseTensor, t: &DenseTensor) -> Result<f64> {
    z.dot(t)
}

/// Density profile of a Bernoulli product measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Scalar(f64),
    PerEdge(SymTensor),
}

/// μ_p or μ_Q on r-subsets of [n].
#[derive(Debug, Clone, PartialEq)]
pub struct ErModel {
    pub n: usize,
    pub r: usize,
    pub density: Density,
}

impl ErModel {
    pub fn scalar(n: usize, r: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("density {p} outside [0,1]")));
        }
        SymTensor::zeros(n, r)?;
        Ok(ErModel { n, r, density: Density::Scalar(p) })
    }

    pub fn per_edge(q: SymTensor) -> Result<Self> {
        q.check_weight()?;
        Ok(ErModel { n: q.n(), r: q.r(), density: Density::PerEdge(q) })
    }

    pub fn sample(&self, seed: u64) -> SymTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> SymTensor {
        let mut t = SymTensor::zeros(self.n, self.r).expect("validated shape");
        match &self.density {
            Density::Scalar(p) => t.values.iter_mut().for_each(|v| *v = bern(rng, *p)),
            Density::PerEdge(q) => {
                t.values.iter_mut().zip(q.values()).for_each(|(v, &p)| *v = bern(rng, p))
            }
        }
        t
    }
}

#[inline]
fn bern<R: Rng>(rng: &mut R, p: f64) -> f64 {
    if rng.gen::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p = {p} must lie in (0,1)")))
    }
}

/// Bernoulli relative entropy I_p(x).
pub fn relent_scalar(p: f64, x: f64) -> Result<f64> {
    check_p(p)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Parameter(format!("x = {x} must lie in [0,1]")));
    }
    Ok(relent_unchecked(p, x))
}

#[inline]
pub(crate) fn relent_unchecked(p: f64, x: f64) -> f64 {
    let v = xlny(x, x / p) + xlny(1.0 - x, (1.0 - x) / (1.0 - p));
    v.max(0.0)
}

/// I_p(Q) summed over r-subsets.
pub fn relent(p: f64, q: &SymTensor) -> Result<f64> {
    check_p(p)?;
    q.check_weight()?;
    let mut s = CompensatedSum::new();
    for &x in q.values() {
        s.add(relent_unchecked(p, x));
    }
    Ok(s.value())
}

/// W(A) = log dμ_Q/dμ_p at A.
pub fn loglik_ratio(a: &SymTensor, q: &SymTensor, p: f64) -> Result<f64> {
    check_p(p)?;
    a.same_shape(q)?;
    q.check_weight()?;
    let mut s = CompensatedSum::new();
    for (&ai, &qi) in a.values().iter().zip(q.values()) {
        let term = if ai != 0.0 {
            if qi == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            (qi / p).ln()
        } else {
            if qi == 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            ((1.0 - qi) / (1.0 - p)).ln()
        };
        s.add(term);
    }
    Ok(s.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub n: usize,
    pub r: usize,
    pub entries: Vec<Vec<f64>>,
}

impl SymTensor {
    pub fn to_json(&self) -> TensorJson {
        let entries = self
            .nonzero()
            .map(|(s, v)| s.into_iter().map(|i| i as f64).chain(std::iter::once(v)).collect())
            .collect();
        TensorJson { n: self.n, r: self.r, entries }
    }

    pub fn from_json(j: &TensorJson) -> Result<Self> {
        let mut t = SymTensor::zeros(j.n, j.r)?;
        for e in &j.entries {
            if e.len() != j.r + 1 {
                return Err(Error::InvalidTensor(format!("entry {e:?} must have r indices and a value")));
            }
            let idx: Vec<usize> = e[..j.r]
                .iter()
                .map(|&x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(Error::InvalidTensor(format!("index {x} is not a nonnegative integer")))
                    }
                })
                .collect::<Result<_>>()?;
            t.set(&idx, e[j.r])?;
        }
        Ok(t)
    }
}
