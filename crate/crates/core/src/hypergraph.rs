//! r-uniform hypergraphs, degree statistics, dominating bases and the parameter Δ′.

use std::collections::{BTreeMap, HashSet};

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, combinations, for_each_partition};
use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// A finite simple r-uniform hypergraph on vertices `0..num_vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct RGraph {
    r: usize,
    num_vertices: usize,
    edges: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub r: usize,
    pub vertices: usize,
    pub edges: Vec<Vec<usize>>,
}

impl TryFrom<GraphJson> for RGraph {
    type Error = Error;
    fn try_from(g: GraphJson) -> Result<Self> {
        RGraph::new(g.r, g.vertices, g.edges)
    }
}

impl From<RGraph> for GraphJson {
    fn from(g: RGraph) -> Self {
        GraphJson { r: g.r, vertices: g.num_vertices, edges: g.edges }
    }
}

impl RGraph {
    pub fn new(r: usize, num_vertices: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidGraph("uniformity must be positive".into()));
        }
        if num_vertices == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut out = Vec::with_capacity(edges.len());
        for mut e in edges {
            if e.len() != r {
                return Err(Error::InvalidGraph(format!("edge {e:?} does not have {r} vertices")));
            }
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("edge {e:?} has repeated vertices")));
            }
            if e[r - 1] >= num_vertices {
                return Err(Error::InvalidGraph(format!("edge {e:?} uses a label >= {num_vertices}")));
            }
            out.push(e);
        }
        out.sort();
        if out.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("repeated edge".into()));
        }
        Ok(RGraph { r, num_vertices, edges: out })
    }

    pub fn r(&self) -> usize {
        self.r
    }
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }
    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.contains(&v)).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, e: &[usize]) -> bool {
        let mut s = e.to_vec();
        s.sort_unstable();
        self.edges.binary_search(&s).is_ok()
    }

    /// Δ_s: max over edges e and s-subsets U of e of the number of edges meeting U.
    pub fn s_degree(&self, s: usize) -> Result<usize> {
        if self.edges.is_empty() {
            return Err(Error::NoEdges);
        }
        if s == 0 || s > self.r {
            return Err(Error::Parameter(format!("s must lie in [1, {}]", self.r)));
        }
        let mut best = 0;
        for e in &self.edges {
            for pos in combinations(self.r, s) {
                let u: Vec<usize> = pos.iter().map(|&k| e[k]).collect();
                let c = self.edges.iter().filter(|f| intersects(f, &u)).count();
                best = best.max(c);
            }
        }
        Ok(best)
    }

    /// Edge boundary: indices of edges e != U meeting U.
    pub fn edge_boundary(&self, u: &[usize]) -> Vec<usize> {
        let us = sorted(u);
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| **e != us && intersects(e, &us))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn edge_degree(&self, u: &[usize]) -> usize {
        self.edge_boundary(u).len()
    }

    /// Dominated boundary: edges e' != U with nonempty overlap e'∩U contained in b.
    pub fn dominated_boundary(&self, u: &[usize], b: &[usize]) -> Result<Vec<usize>> {
        let us = sorted(u);
        if !b.iter().all(|x| us.contains(x)) {
            return Err(Error::Parameter(format!("{b:?} is not a subset of {us:?}")));
        }
        if b.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                **e != us && intersects(e, &us) && e.iter().filter(|x| us.contains(x)).all(|x| b.contains(x))
            })
            .map(|(i, _)| i)
            .collect())
    }

    pub fn dominated_degree(&self, u: &[usize], b: &[usize]) -> Result<usize> {
        Ok(self.dominated_boundary(u, b)?.len())
    }

    /// Nonempty overlaps e∩e' (e' != e) of edge `ei`, as position bitmasks in the edge.
    fn overlap_masks(&self, ei: usize) -> Vec<u32> {
        let e = &self.edges[ei];
        let mut out: Vec<u32> = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != ei)
            .map(|(_, f)| mask_of(e, f))
            .filter(|&m| m != 0)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// δ′_b(e) for a position bitmask b of edge `ei`.
    fn delta_cost(&self, ei: usize, bmask: u32) -> Rational {
        let e = &self.edges[ei];
        let r = self.r as i64;
        let d = self.edge_degree(e) as i64;
        if bmask == 0 {
            return Rational::new(d + 2, r);
        }
        let b = members_of(e, bmask);
        let db = self.dominated_degree(e, &b).expect("b is a subset of e") as i64;
        Rational::new(d - db + 2, r - b.len() as i64)
    }

    /// Δ′ with an optimal dominating base per edge.
    pub fn delta_prime(&self) -> Result<DeltaPrimeCertificate> {
        if self.edges.is_empty() {
            return Err(Error::NoEdges);
        }
        let full = (1u32 << self.r) - 1;
        let mut per_edge = Vec::with_capacity(self.edges.len());
        for ei in 0..self.edges.len() {
            let mut chosen: Vec<u32> = Vec::new();
            for o in self.overlap_masks(ei) {
                let mut best: Option<(Rational, u32)> = None;
                for b in 1..full {
                    if b & o != o {
                        continue;
                    }
                    let c = self.delta_cost(ei, b);
                    let better = match &best {
                        None => true,
                        Some((bc, bb)) => {
                            c < *bc || (c == *bc && (b.count_ones(), b) < (bb.count_ones(), *bb))
                        }
                    };
                    if better {
                        best = Some((c, b));
                    }
                }
                chosen.push(best.expect("overlap is a proper subset").1);
            }
            chosen.sort_unstable();
            chosen.dedup();
            let reduced: Vec<u32> = chosen
                .iter()
                .copied()
                .filter(|&b| !chosen.iter().any(|&c| c != b && c & b == b))
                .collect();
            let mut value = self.delta_cost(ei, 0);
            for &b in &reduced {
                value = value.max(self.delta_cost(ei, b));
            }
            let e = &self.edges[ei];
            let mut members = vec![Vec::new()];
            members.extend(reduced.iter().map(|&b| members_of(e, b)));
            per_edge.push(EdgeDeltaPrime { base: DominatingBase { edge: e.clone(), members }, value });
        }
        let value = per_edge.iter().map(|p| p.value).max().expect("nonempty");
        Ok(DeltaPrimeCertificate { value, per_edge })
    }

    /// Δ′ by exhaustive enumeration over all dominating antichains (r ≤ 4).
    pub fn delta_prime_exhaustive(&self) -> Result<Rational> {
        if self.edges.is_empty() {
            return Err(Error::NoEdges);
        }
        if self.r > 4 {
            return Err(Error::TooLarge("exhaustive Δ′ supports r ≤ 4".into()));
        }
        let full = (1u32 << self.r) - 1;
        let items: Vec<u32> = (1..full).collect();
        let mut value: Option<Rational> = None;
        for ei in 0..self.edges.len() {
            let overlaps = self.overlap_masks(ei);
            let costs: Vec<Rational> = items.iter().map(|&b| self.delta_cost(ei, b)).collect();
            let base_cost = self.delta_cost(ei, 0);
            let mut best: Option<Rational> = None;
            for sel in 0u64..(1u64 << items.len()) {
                let chosen: Vec<usize> = (0..items.len()).filter(|&k| sel >> k & 1 == 1).collect();
                let antichain = chosen.iter().all(|&a| {
                    chosen.iter().all(|&b| a == b || items[a] & items[b] != items[a])
                });
                if !antichain {
                    continue;
                }
                let dominating =
                    overlaps.iter().all(|&o| chosen.iter().any(|&k| items[k] & o == o));
                if !dominating {
                    continue;
                }
                let c = chosen.iter().fold(base_cost, |acc, &k| acc.max(costs[k]));
                if best.is_none_or(|b| c < b) {
                    best = Some(c);
                }
            }
            let b = best.expect("the maximal antichain always dominates");
            value = Some(value.map_or(b, |v: Rational| v.max(b)));
        }
        Ok(value.expect("nonempty"))
    }

    /// Subgraph on the same vertex set keeping the edges selected by `keep`.
    pub fn edge_subgraph(&self, keep: impl Fn(usize) -> bool) -> RGraph {
        let edges = self.edges.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, e)| e.clone()).collect();
        RGraph { r: self.r, num_vertices: self.num_vertices, edges }
    }

    /// Drop isolated vertices and relabel densely.
    pub fn without_isolated(&self) -> RGraph {
        let mut used = vec![false; self.num_vertices];
        for e in &self.edges {
            for &v in e {
                used[v] = true;
            }
        }
        let mut map = vec![usize::MAX; self.num_vertices];
        let mut next = 0;
        for v in 0..self.num_vertices {
            if used[v] {
                map[v] = next;
                next += 1;
            }
        }
        let edges = self.edges.iter().map(|e| e.iter().map(|&v| map[v]).collect()).collect();
        RGraph::new(self.r, next.max(1), edges).expect("relabeling preserves simplicity")
    }

    pub fn disjoint_union(&self, other: &RGraph) -> Result<RGraph> {
        if self.r != other.r {
            return Err(Error::ShapeMismatch("uniformities differ".into()));
        }
        let shift = self.num_vertices;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| e.iter().map(|&v| v + shift).collect()));
        RGraph::new(self.r, self.num_vertices + other.num_vertices, edges)
    }

    pub fn is_connected(&self) -> bool {
        let used: Vec<usize> = (0..self.num_vertices).filter(|&v| self.degree(v) > 0).collect();
        if used.is_empty() {
            return self.num_vertices == 1;
        }
        if used.len() != self.num_vertices {
            return false;
        }
        let mut seen = vec![false; self.num_vertices];
        let mut stack = vec![used[0]];
        seen[used[0]] = true;
        while let Some(v) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.contains(&v)) {
                for &w in e {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Image graph of a vertex map; `None` if some edge image has repeated vertices.
    pub fn image(&self, map: &[usize], target_vertices: usize) -> Option<RGraph> {
        let mut edges: Vec<Vec<usize>> = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let mut f: Vec<usize> = e.iter().map(|&v| map[v]).collect();
            f.sort_unstable();
            if f.windows(2).any(|w| w[0] == w[1]) {
                return None;
            }
            edges.push(f);
        }
        edges.sort();
        edges.dedup();
        Some(RGraph { r: self.r, num_vertices: target_vertices, edges })
    }

    /// All non-isomorphic images under surjections with nondegenerate edge images.
    pub fn quotient_family(&self) -> Result<Vec<Quotient>> {
        self.quotient_family_capped(DEFAULT_QUOTIENT_CAP)
    }

    pub fn quotient_family_capped(&self, cap: usize) -> Result<Vec<Quotient>> {
        if self.num_vertices > cap {
            return Err(Error::CapExceeded { vertices: self.num_vertices, cap });
        }
        let mut out: Vec<Quotient> = Vec::new();
        let mut buckets: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for_each_partition(self.num_vertices, |map, blocks| {
            let Some(g) = self.image(map, blocks) else { return };
            let key = g.invariant();
            let bucket = buckets.entry(key).or_default();
            if bucket.iter().any(|&k| out[k].graph.is_isomorphic(&g)) {
                return;
            }
            bucket.push(out.len());
            out.push(Quotient { graph: g, map: map.to_vec() });
        });
        // identity partition first
        out.sort_by_key(|q| std::cmp::Reverse(q.graph.num_vertices));
        Ok(out)
    }

    /// Cheap isomorphism invariant.
    pub fn invariant(&self) -> Vec<usize> {
        let mut degs: Vec<usize> = (0..self.num_vertices).map(|v| self.degree(v)).collect();
        degs.sort_unstable();
        let mut eds: Vec<usize> = self.edges.iter().map(|e| self.edge_degree(e)).collect();
        eds.sort_unstable();
        let mut key = vec![self.r, self.num_vertices, self.edges.len()];
        key.extend(degs);
        key.extend(eds);
        key
    }

    pub fn is_isomorphic(&self, other: &RGraph) -> bool {
        if self.invariant() != other.invariant() {
            return false;
        }
        let v = self.num_vertices;
        let union = self.disjoint_union(other).expect("same r");
        let colors = refine_colors(&union);
        let (c1, c2) = colors.split_at(v);
        let mut h1 = c1.to_vec();
        let mut h2 = c2.to_vec();
        h1.sort_unstable();
        h2.sort_unstable();
        if h1 != h2 {
            return false;
        }
        let target: HashSet<Vec<usize>> = other.edges.iter().cloned().collect();
        let mut order: Vec<usize> = (0..v).collect();
        let class_size = |c: usize| c1.iter().filter(|&&x| x == c).count();
        order.sort_by_key(|&x| (class_size(c1[x]), x));
        // edges that become fully mapped at each depth
        let mut pos = vec![0; v];
        for (k, &x) in order.iter().enumerate() {
            pos[x] = k;
        }
        let mut checks: Vec<Vec<usize>> = vec![Vec::new(); v];
        for (i, e) in self.edges.iter().enumerate() {
            let last = e.iter().map(|&x| pos[x]).max().expect("nonempty edge");
            checks[last].push(i);
        }
        let mut map = vec![usize::MAX; v];
        let mut used = vec![false; v];
        #[allow(clippy::too_many_arguments)]
        fn rec(
            k: usize,
            order: &[usize],
            c1: &[usize],
            c2: &[usize],
            map: &mut [usize],
            used: &mut [bool],
            g: &RGraph,
            checks: &[Vec<usize>],
            target: &HashSet<Vec<usize>>,
        ) -> bool {
            if k == order.len() {
                return true;
            }
            let x = order[k];
            for y in 0..c2.len() {
                if used[y] || c2[y] != c1[x] {
                    continue;
                }
                map[x] = y;
                let ok = checks[k].iter().all(|&i| {
                    let mut f: Vec<usize> = g.edges[i].iter().map(|&u| map[u]).collect();
                    f.sort_unstable();
                    target.contains(&f)
                });
                if ok {
                    used[y] = true;
                    if rec(k + 1, order, c1, c2, map, used, g, checks, target) {
                        return true;
                    }
                    used[y] = false;
                }
            }
            map[x] = usize::MAX;
            false
        }
        rec(0, &order, c1, c2, &mut map, &mut used, self, &checks, &target)
    }

    /// Parse a built-in name such as `clique:4:3`, `fano` or `fig1`.
    pub fn builtin(name: &str) -> Result<RGraph> {
        let parts: Vec<&str> = name.trim().split(':').collect();
        let num = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer '{s}' in '{name}'")))
        };
        match parts.as_slice() {
            ["clique", k, r] => clique(num(k)?, num(r)?),
            ["star", arms, r] => sunflower(num(arms)?, 1, num(r)?),
            ["sunflower", petals, kernel, r] => sunflower(num(petals)?, num(kernel)?, num(r)?),
            ["cycle", len] => cycle(num(len)?),
            ["path", len] => path(num(len)?),
            ["matching", k] => matching(num(k)?, 2),
            ["matching", k, r] => matching(num(k)?, num(r)?),
            ["edge", r] => clique(num(r)?, num(r)?),
            ["fano"] => fano(),
            ["fig1"] => fig1(),
            _ => Err(Error::Parse(format!("unknown built-in hypergraph '{name}'"))),
        }
    }
}

pub const DEFAULT_QUOTIENT_CAP: usize = 10;

/// A quotient image with a verifying surjection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    pub graph: RGraph,
    pub map: Vec<usize>,
}

/// A collection of proper subsets of an edge including ∅.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominatingBase {
    pub edge: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl DominatingBase {
    pub fn is_antichain(&self) -> bool {
        let ne: Vec<&Vec<usize>> = self.members.iter().filter(|m| !m.is_empty()).collect();
        ne.iter().all(|a| ne.iter().all(|b| a == b || !a.iter().all(|x| b.contains(x))))
    }

    pub fn is_dominating(&self, g: &RGraph) -> bool {
        g.edges().iter().filter(|f| **f != self.edge).all(|f| {
            let o: Vec<usize> = f.iter().copied().filter(|x| self.edge.contains(x)).collect();
            o.is_empty() || self.members.iter().any(|m| o.iter().all(|x| m.contains(x)))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDeltaPrime {
    pub base: DominatingBase,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaPrimeCertificate {
    pub value: Rational,
    pub per_edge: Vec<EdgeDeltaPrime>,
}

/// A hypergraph with a ±1 sign on each edge (aligned with `graph.edges()`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedRGraph {
    pub graph: RGraph,
    pub signs: Vec<i8>,
}

impl SignedRGraph {
    pub fn new(graph: RGraph, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != graph.num_edges() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidGraph("one ±1 sign per edge required".into()));
        }
        Ok(SignedRGraph { graph, signs })
    }

    pub fn all_positive(graph: RGraph) -> Self {
        let signs = vec![1; graph.num_edges()];
        SignedRGraph { graph, signs }
    }

    /// Complete r-graph on V(H) with + on E(H) and − elsewhere.
    pub fn complete_signing(h: &RGraph) -> Self {
        let graph = clique(h.num_vertices(), h.r()).expect("v(H) ≥ r");
        let signs = graph.edges().iter().map(|e| if h.has_edge(e) { 1 } else { -1 }).collect();
        SignedRGraph { graph, signs }
    }

    pub fn positive_part(&self) -> RGraph {
        self.graph.edge_subgraph(|i| self.signs[i] > 0)
    }

    pub fn negative_part(&self) -> RGraph {
        self.graph.edge_subgraph(|i| self.signs[i] < 0)
    }
}

fn sorted(u: &[usize]) -> Vec<usize> {
    let mut s = u.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

fn intersects(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|x| b.contains(x))
}

fn mask_of(e: &[usize], f: &[usize]) -> u32 {
    e.iter().enumerate().filter(|(_, x)| f.contains(x)).fold(0, |m, (k, _)| m | 1 << k)
}

fn members_of(e: &[usize], mask: u32) -> Vec<usize> {
    e.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &x)| x).collect()
}

/// Color refinement on a hypergraph; colors are canonical for the whole vertex set.
fn refine_colors(g: &RGraph) -> Vec<usize> {
    let v = g.num_vertices();
    let mut colors = vec![0usize; v];
    let mut count = 1;
    loop {
        let sigs: Vec<(usize, Vec<Vec<usize>>)> = (0..v)
            .map(|x| {
                let mut inc: Vec<Vec<usize>> = g
                    .edges()
                    .iter()
                    .filter(|e| e.contains(&x))
                    .map(|e| {
                        let mut c: Vec<usize> = e.iter().filter(|&&y| y != x).map(|&y| colors[y]).collect();
                        c.sort_unstable();
                        c
                    })
                    .collect();
                inc.sort();
                (colors[x], inc)
            })
            .collect();
        let mut uniq: Vec<&(usize, Vec<Vec<usize>>)> = sigs.iter().collect();
        uniq.sort();
        uniq.dedup();
        let next: Vec<usize> = sigs.iter().map(|s| uniq.binary_search(&s).expect("present")).collect();
        colors = next;
        if uniq.len() == count {
            return colors;
        }
        count = uniq.len();
    }
}

pub fn clique(k: usize, r: usize) -> Result<RGraph> {
    if k < r || r == 0 {
        return Err(Error::Parameter(format!("clique needs k ≥ r ≥ 1, got k={k}, r={r}")));
    }
    RGraph::new(r, k, combinations(k, r))
}

/// Sunflower with `petals` petals sharing a kernel of size `kernel`.
pub fn sunflower(petals: usize, kernel: usize, r: usize) -> Result<RGraph> {
    if kernel >= r || petals == 0 {
        return Err(Error::Parameter("sunflower needs petals ≥ 1 and kernel < r".into()));
    }
    let rest = r - kernel;
    let edges = (0..petals)
        .map(|i| (0..kernel).chain((0..rest).map(|j| kernel + i * rest + j)).collect())
        .collect();
    RGraph::new(r, kernel + petals * rest, edges)
}

pub fn cycle(len: usize) -> Result<RGraph> {
    if len < 3 {
        return Err(Error::Parameter("cycle length must be at least 3".into()));
    }
    RGraph::new(2, len, (0..len).map(|i| vec![i, (i + 1) % len]).collect())
}

/// Path with `len` edges.
pub fn path(len: usize) -> Result<RGraph> {
    if len == 0 {
        return Err(Error::Parameter("path needs at least one edge".into()));
    }
    RGraph::new(2, len + 1, (0..len).map(|i| vec![i, i + 1]).collect())
}

pub fn matching(k: usize, r: usize) -> Result<RGraph> {
    if k == 0 || r == 0 {
        return Err(Error::Parameter("matching needs k, r ≥ 1".into()));
    }
    RGraph::new(r, k * r, (0..k).map(|i| (i * r..(i + 1) * r).collect()).collect())
}

pub fn fano() -> Result<RGraph> {
    RGraph::new(
        3,
        7,
        vec![
            vec![0, 1, 2],
            vec![0, 3, 4],
            vec![0, 5, 6],
            vec![1, 3, 5],
            vec![1, 4, 6],
            vec![2, 3, 6],
            vec![2, 4, 5],
        ],
    )
}

/// The 3-graph obtained by transposing the incidence matrix of K_4.
pub fn fig1() -> Result<RGraph> {
    let pairs = combinations(4, 2);
    let edges = (0..4)
        .map(|a| pairs.iter().enumerate().filter(|(_, p)| p.contains(&a)).map(|(i, _)| i).collect())
        .collect();
    RGraph::new(3, 6, edges)
}

/// Random r-graph with `m` distinct edges on `v` vertices.
pub fn random_graph<R: Rng>(rng: &mut R, r: usize, v: usize, m: usize) -> Result<RGraph> {
    let total = binomial(v, r) as usize;
    if m > total {
        return Err(Error::Parameter("more edges than r-subsets".into()));
    }
    let all = combinations(v, r);
    let picked = rand::seq::index::sample(rng, total, m);
    RGraph::new(r, v, picked.into_iter().map(|i| all[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn degrees() {
        let k43 = clique(4, 3).unwrap();
        assert_eq!(k43.max_degree(), 3);
        assert_eq!(fano().unwrap().max_degree(), 3);
        assert_eq!(clique(3, 3).unwrap().max_degree(), 1);
        assert_eq!(clique(4, 2).unwrap().s_degree(2).unwrap(), 5);
        assert_eq!(clique(3, 3).unwrap().s_degree(3).unwrap(), 1);
        assert_eq!(fig1().unwrap().s_degree(2).unwrap(), 3);
        assert!(matches!(RGraph::new(2, 3, vec![]).unwrap().s_degree(1), Err(Error::NoEdges)));
    }

    #[test]
    fn boundaries() {
        let tri = cycle(3).unwrap();
        assert_eq!(tri.edge_boundary(&[0]).len(), 2);
        assert!(tri.edge_boundary(&[]).is_empty());
        let k43 = clique(4, 3).unwrap();
        assert_eq!(k43.edge_boundary(&[0, 1, 2]).len(), 3);
        let star = sunflower(3, 1, 2).unwrap();
        assert_eq!(star.dominated_boundary(&[0, 1], &[0]).unwrap().len(), 2);
        assert!(star.dominated_boundary(&[0, 1], &[]).unwrap().is_empty());
        assert!(star.dominated_boundary(&[0, 1], &[2]).is_err());
        let sf = sunflower(4, 2, 4).unwrap();
        let petal = sf.edges()[0].clone();
        assert_eq!(sf.dominated_boundary(&petal, &[0, 1]).unwrap().len(), 3);
    }

    #[test]
    fn delta_prime_examples() {
        assert_eq!(clique(4, 2).unwrap().delta_prime().unwrap().value, r(4, 1));
        assert_eq!(clique(4, 3).unwrap().delta_prime().unwrap().value, r(4, 1));
        assert_eq!(clique(5, 3).unwrap().delta_prime().unwrap().value, r(7, 1));
        assert_eq!(fano().unwrap().delta_prime().unwrap().value, r(3, 1));
        assert_eq!(fig1().unwrap().delta_prime().unwrap().value, r(2, 1));
        assert_eq!(cycle(5).unwrap().delta_prime().unwrap().value, r(3, 1));
        assert_eq!(sunflower(3, 1, 3).unwrap().delta_prime().unwrap().value, r(4, 3));
        assert_eq!(sunflower(5, 1, 4).unwrap().delta_prime().unwrap().value, r(6, 4));
    }

    #[test]
    fn sunflower_formula() {
        for (petals, kernel, rr) in [(3, 1, 3), (4, 2, 3), (2, 1, 3), (5, 2, 4), (3, 1, 2)] {
            let g = sunflower(petals, kernel, rr).unwrap();
            let a = r(petals as i64 + 1, rr as i64);
            let b = r(2, (rr - kernel) as i64);
            assert_eq!(g.delta_prime().unwrap().value, a.max(b), "{petals} {kernel} {rr}");
        }
    }

    #[test]
    fn certificate_bases_are_dominating() {
        for g in [clique(5, 3).unwrap(), fano().unwrap(), fig1().unwrap(), cycle(6).unwrap()] {
            let cert = g.delta_prime().unwrap();
            for p in &cert.per_edge {
                assert!(p.base.is_antichain());
                assert!(p.base.is_dominating(&g));
                assert!(p.base.members.contains(&vec![]));
            }
            assert_eq!(g.delta_prime_exhaustive().unwrap(), cert.value);
        }
    }

    #[test]
    fn quotients() {
        let e = clique(2, 2).unwrap();
        assert_eq!(e.quotient_family().unwrap().len(), 1);
        let p3 = path(2).unwrap();
        let q = p3.quotient_family().unwrap();
        assert_eq!(q.len(), 2);
        assert!(q[0].graph.is_isomorphic(&p3));
        let two = matching(2, 2).unwrap();
        let q = two.quotient_family().unwrap();
        assert_eq!(q.len(), 3);
        assert!(q.iter().any(|x| x.graph.is_isomorphic(&p3)));
        assert!(q.iter().any(|x| x.graph.is_isomorphic(&e)));
        for x in &q {
            assert_eq!(two.image(&x.map, x.graph.num_vertices()).unwrap(), x.graph);
        }
        assert!(matches!(
            clique(11, 2).unwrap().quotient_family(),
            Err(Error::CapExceeded { vertices: 11, cap: 10 })
        ));
    }

    #[test]
    fn isomorphism() {
        let c = cycle(5).unwrap();
        let d = RGraph::new(2, 5, vec![vec![0, 2], vec![2, 4], vec![4, 1], vec![1, 3], vec![3, 0]]).unwrap();
        assert!(c.is_isomorphic(&d));
        let two_tri = cycle(3).unwrap().disjoint_union(&cycle(3).unwrap()).unwrap();
        assert!(!two_tri.is_isomorphic(&cycle(6).unwrap()));
    }

    #[test]
    fn builtins_and_json() {
        let g = RGraph::builtin("sunflower:3:1:3").unwrap();
        assert_eq!(g.num_vertices(), 7);
        assert!(RGraph::builtin("wheel:5").is_err());
        let s = serde_json::to_string(&g).unwrap();
        let back: RGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<RGraph>(r#"{"r":2,"vertices":3,"edges":[[0,0]]}"#).is_err());
    }
}
