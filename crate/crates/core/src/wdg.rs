//! The weighted-graph calculus used to bound cumulants: maximal-weight
//! spanning trees, the normalization `Ψ(α) = n^{CC(α) - #S(α)}` attached to
//! an edge multiset `α` of indicator indices, the weighted graph `L` on
//! `[n]²` and its powers, the proof graphs on `[r] × {1,2}`, and the sums
//! `R` and `T_ℓ` controlling the cumulant growth of pattern counts.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pattern::{binomial_f64, VincularPattern};
use crate::perm::Permutation;

/// Refuse exact `R`/`T_ℓ` computations above this many enumerated terms.
pub const COST_GUARD: f64 = 1e8;

// ---------------------------------------------------------------------------
// weighted graphs and maximal-weight spanning trees
// ---------------------------------------------------------------------------

/// A small dense weighted graph; weight 0 means "no edge", weights live in
/// `[0, 1]`. Self-weights are ignored by every operation.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    n: usize,
    w: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            n,
            w: vec![0.0; n * n],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Sets the (symmetric) weight of `{u, v}`. Panics on weights outside
    /// `[0, 1]`; setting the diagonal is a no-op.
    pub fn set_weight(&mut self, u: usize, v: usize, weight: f64) {
        assert!(
            (0.0..=1.0).contains(&weight),
            "weight {weight} outside [0,1]"
        );
        if u == v {
            return;
        }
        self.w[u * self.n + v] = weight;
        self.w[v * self.n + u] = weight;
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.w[u * self.n + v]
    }
}

/// Result of a maximal-weight spanning tree computation.
///
/// `weight` is the product of the tree's edge weights (0 when the graph is
/// disconnected, 1 for a single vertex). `log_weight` carries the same
/// information without underflow, and the tree edges let callers recover
/// exact exponents when all weights are powers of `1/n`.
#[derive(Clone, Debug)]
pub struct MwstOutcome {
    pub weight: f64,
    pub log_weight: f64,
    pub edges: Vec<(usize, usize)>,
}

impl MwstOutcome {
    pub fn connected(&self, vertex_count: usize) -> bool {
        vertex_count == 0 || self.edges.len() + 1 == vertex_count
    }
}

/// Maximal product of edge weights over spanning trees, by greedy selection
/// (log is monotone, so sorting by weight maximizes the product too).
pub fn mwst(g: &WeightedGraph) -> MwstOutcome {
    let n = g.vertex_count();
    let mut edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .filter(|&(u, v)| g.weight(u, v) > 0.0)
        .collect();
    edges.sort_by(|&(a, b), &(c, d)| {
        g.weight(c, d)
            .partial_cmp(&g.weight(a, b))
            .unwrap()
            .then(a.cmp(&c))
            .then(b.cmp(&d))
    });
    let mut sets = DisjointSets::new(n);
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    let mut weight = 1.0f64;
    let mut log_weight = 0.0f64;
    for (u, v) in edges {
        if sets.union(u, v) {
            weight *= g.weight(u, v);
            log_weight += g.weight(u, v).ln();
            tree.push((u, v));
            if tree.len() + 1 == n {
                break;
            }
        }
    }
    if n > 0 && tree.len() + 1 != n {
        weight = 0.0;
        log_weight = f64::NEG_INFINITY;
    }
    MwstOutcome {
        weight,
        log_weight,
        edges: tree,
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when the union merged two distinct components.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        self.parent[rx] = ry;
        true
    }
}

// ---------------------------------------------------------------------------
// unweighted graphs (proof graphs, cc computations)
// ---------------------------------------------------------------------------

/// An unweighted loop-free graph given by its edge set over `{0, .., n-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        SimpleGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = SimpleGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Loops and duplicates are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u < self.n && v < self.n);
        if u != v {
            self.edges.insert((u.min(v), u.max(v)));
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// Number of connected components, isolated vertices included.
    pub fn cc(&self) -> usize {
        let mut sets = DisjointSets::new(self.n);
        let mut components = self.n;
        for &(u, v) in &self.edges {
            if sets.union(u, v) {
                components -= 1;
            }
        }
        components
    }

    pub fn union(&self, other: &SimpleGraph) -> SimpleGraph {
        assert_eq!(self.n, other.n);
        SimpleGraph {
            n: self.n,
            edges: self.edges.union(&other.edges).copied().collect(),
        }
    }

    pub fn intersection(&self, other: &SimpleGraph) -> SimpleGraph {
        assert_eq!(self.n, other.n);
        SimpleGraph {
            n: self.n,
            edges: self.edges.intersection(&other.edges).copied().collect(),
        }
    }

    pub fn is_subgraph_of(&self, other: &SimpleGraph) -> bool {
        self.edges.is_subset(&other.edges)
    }
}

/// `cc(V, E1 ∪ E2) + cc(V, E1 ∩ E2) >= cc(V, E1) + cc(V, E2)`; returns
/// whether the inequality holds for the given instance (it always should).
pub fn cc_inclusion_exclusion_check(
    vertex_count: usize,
    e1: &[(usize, usize)],
    e2: &[(usize, usize)],
) -> bool {
    let g1 = SimpleGraph::from_edges(vertex_count, e1);
    let g2 = SimpleGraph::from_edges(vertex_count, e2);
    g1.union(&g2).cc() + g1.intersection(&g2).cc() >= g1.cc() + g2.cc()
}

// ---------------------------------------------------------------------------
// edge multisets and Ψ
// ---------------------------------------------------------------------------

/// A multiset of ordered pairs in `[n]²` (0-based), indexing a family of
/// indicators `B_{i,j}`. Loops and repeated pairs are allowed. Pairs are
/// kept sorted, so equal multisets compare equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeMultiset {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl EdgeMultiset {
    pub fn new(n: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &pairs {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), n });
            }
        }
        pairs.sort_unstable();
        Ok(EdgeMultiset { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Multiset size `r` (with multiplicity).
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The set `S(α)` of coordinates appearing in some pair.
    pub fn support(&self) -> BTreeSet<usize> {
        self.pairs.iter().flat_map(|&(i, j)| [i, j]).collect()
    }

    /// `CC(α)`: components of the graph on `S(α)` with (undirected) edge
    /// set `α` and no isolated vertices. Errors on the empty multiset.
    pub fn cc_count(&self) -> Result<usize> {
        if self.pairs.is_empty() {
            return Err(Error::EmptyEdgeMultiset);
        }
        let support: Vec<usize> = self.support().into_iter().collect();
        let mut sets = DisjointSets::new(support.len());
        let mut components = support.len();
        for &(i, j) in &self.pairs {
            let a = support.binary_search(&i).unwrap();
            let b = support.binary_search(&j).unwrap();
            if sets.union(a, b) {
                components -= 1;
            }
        }
        Ok(components)
    }

    /// The exponent of `Ψ(α) = n^{CC(α) - #S(α)}`. Insensitive to the order
    /// and multiplicity of the pairs.
    pub fn psi_exponent(&self) -> Result<i64> {
        Ok(self.cc_count()? as i64 - self.support().len() as i64)
    }

    /// Multiset disjoint union.
    pub fn union(&self, other: &EdgeMultiset) -> Result<EdgeMultiset> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        EdgeMultiset::new(self.n, pairs)
    }

    /// The sub-multiset selected by a bitmask over the (sorted) pair list.
    pub fn subset(&self, mask: u32) -> EdgeMultiset {
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .filter_map(|(t, &p)| (mask >> t & 1 == 1).then_some(p))
            .collect();
        EdgeMultiset { n: self.n, pairs }
    }

    /// Same pairs over a different ambient `[n]²`.
    pub fn with_n(&self, n: usize) -> Result<EdgeMultiset> {
        EdgeMultiset::new(n, self.pairs.clone())
    }
}

impl fmt::Display for EdgeMultiset {
    /// 1-based `"i:j"` pairs joined with commas, e.g. `"1:2,3:4"`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .pairs
            .iter()
            .map(|&(i, j)| format!("{}:{}", i + 1, j + 1))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

impl fmt::Debug for EdgeMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EdgeMultiset[n={}]({})", self.n, self)
    }
}

impl FromStr for EdgeMultiset {
    type Err = Error;

    /// Parses 1-based `"1:2,3:4"`; the ambient `n` is the largest coordinate
    /// mentioned (re-target with [`EdgeMultiset::with_n`]).
    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for tok in s.split(',') {
            let (a, b) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad pair {:?}, want i:j", tok)))?;
            let i: usize = a
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate {:?}", a)))?;
            let j: usize = b
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate {:?}", b)))?;
            if i == 0 || j == 0 {
                return Err(Error::Parse("coordinates are 1-based".into()));
            }
            pairs.push((i - 1, j - 1));
        }
        let n = pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        EdgeMultiset::new(n, pairs)
    }
}

// ---------------------------------------------------------------------------
// the weighted graph L on [n]² and its powers
// ---------------------------------------------------------------------------

/// Edge weight of `L`: `1/n` when `{i,j}` and `{k,l}` are disjoint, else 1.
/// Never materializes the `n² × n²` graph.
pub fn l_weight(n: usize, a: (usize, usize), b: (usize, usize)) -> f64 {
    let (i, j) = a;
    let (k, l) = b;
    if i == k || i == l || j == k || j == l {
        1.0
    } else {
        1.0 / n as f64
    }
}

/// Power-graph weight `W(I, J) = max l_weight over cross pairs`: equals
/// `1/n` exactly when the supports of `I` and `J` are disjoint.
pub fn power_weight(i_list: &[(usize, usize)], j_list: &[(usize, usize)], n: usize) -> f64 {
    let disjoint = i_list.iter().all(|&(a, b)| {
        j_list
            .iter()
            .all(|&(c, d)| a != c && a != d && b != c && b != d)
    });
    if disjoint {
        1.0 / n as f64
    } else {
        1.0
    }
}

/// The restriction `L[α]`: one vertex per multiset element, weights from
/// `l_weight` (repeated pairs share support, hence weight 1).
pub fn explicit_l_restriction(alpha: &EdgeMultiset) -> WeightedGraph {
    let r = alpha.len();
    let mut g = WeightedGraph::new(r);
    for s in 0..r {
        for t in (s + 1)..r {
            g.set_weight(
                s,
                t,
                l_weight(alpha.n(), alpha.pairs()[s], alpha.pairs()[t]),
            );
        }
    }
    g
}

/// Exponent of `M(L[α]) = n^{-CC(α)+1}` (maximal spanning-tree weight of the
/// restriction), computed without building the graph.
pub fn mwst_l_restriction_exponent(alpha: &EdgeMultiset) -> Result<i64> {
    Ok(1 - alpha.cc_count()? as i64)
}

// ---------------------------------------------------------------------------
// proof graphs
// ---------------------------------------------------------------------------

/// The five graphs associated with index lists `(i, j, k)` and a fixed `ρ`:
/// `g1`, `g2`, `g_or`, `g_and` live on `[r] × {1,2}` (vertex `(s, side)` is
/// stored as `2s + side`), and `g_a` lives on `[r]`.
///
/// Vertex `(s, 0)` carries the label `(i_s, k_s)` and `(s, 1)` the label
/// `(j_s, ρ(k_s))`. `g1` joins equal first coordinates, `g2` equal second
/// coordinates plus the pairing edges `{(s,0), (s,1)}`, `g_and` equal
/// labels, `g_or` any equal coordinate plus the pairing edges. `g_a` joins
/// `s ~ t` when `{i_s,j_s}` meets `{i_t,j_t}` or `{k_s,ρ(k_s)}` meets
/// `{k_t,ρ(k_t)}`; it is `g_or` with each pair of stacked vertices merged.
#[derive(Clone, Debug)]
pub struct ProofGraphBundle {
    pub g1: SimpleGraph,
    pub g2: SimpleGraph,
    pub g_or: SimpleGraph,
    pub g_and: SimpleGraph,
    pub g_a: SimpleGraph,
}

pub fn proof_graphs(
    i_list: &[usize],
    j_list: &[usize],
    k_list: &[usize],
    rho: &Permutation,
) -> Result<ProofGraphBundle> {
    let r = i_list.len();
    if j_list.len() != r || k_list.len() != r {
        return Err(Error::SizeMismatch {
            left: r,
            right: j_list.len().max(k_list.len()),
        });
    }
    let n = rho.size();
    for &v in i_list.iter().chain(j_list).chain(k_list) {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, n });
        }
    }

    let mut labels = Vec::with_capacity(2 * r);
    for s in 0..r {
        labels.push((i_list[s], k_list[s]));
        labels.push((j_list[s], rho.apply(k_list[s])));
    }

    let mut g1 = SimpleGraph::new(2 * r);
    let mut g2 = SimpleGraph::new(2 * r);
    let mut g_or = SimpleGraph::new(2 * r);
    let mut g_and = SimpleGraph::new(2 * r);
    for u in 0..2 * r {
        for v in (u + 1)..2 * r {
            let (x, y) = labels[u];
            let (x2, y2) = labels[v];
            if x == x2 {
                g1.add_edge(u, v);
                g_or.add_edge(u, v);
            }
            if y == y2 {
                g2.add_edge(u, v);
                g_or.add_edge(u, v);
            }
            if x == x2 && y == y2 {
                g_and.add_edge(u, v);
            }
        }
    }
    for s in 0..r {
        g2.add_edge(2 * s, 2 * s + 1);
        g_or.add_edge(2 * s, 2 * s + 1);
    }

    let mut g_a = SimpleGraph::new(r);
    for s in 0..r {
        for t in (s + 1)..r {
            let ij = {
                let (a, b) = (i_list[s], j_list[s]);
                let (c, d) = (i_list[t], j_list[t]);
                a == c || a == d || b == c || b == d
            };
            let kk = {
                let (a, b) = (k_list[s], rho.apply(k_list[s]));
                let (c, d) = (k_list[t], rho.apply(k_list[t]));
                a == c || a == d || b == c || b == d
            };
            if ij || kk {
                g_a.add_edge(s, t);
            }
        }
    }

    Ok(ProofGraphBundle {
        g1,
        g2,
        g_or,
        g_and,
        g_a,
    })
}

// ---------------------------------------------------------------------------
// R and T_ℓ
// ---------------------------------------------------------------------------

/// A member of `I^{(π,A)}`: the `k` pairs `(i_t, j_t)` plus the support
/// bitmask used for the disjointness tests.
#[derive(Clone, Debug)]
struct IndexedTuple {
    pairs: Vec<(usize, usize)>,
    mask: u64,
}

/// Scratch union-find keyed by coordinate value, reset by version stamps.
struct CoordSets {
    parent: Vec<usize>,
    stamp: Vec<u32>,
    version: u32,
}

impl CoordSets {
    fn new(n: usize) -> Self {
        CoordSets {
            parent: vec![0; n],
            stamp: vec![0; n],
            version: 0,
        }
    }

    fn begin(&mut self) {
        self.version = self.version.wrapping_add(1);
        if self.version == 0 {
            self.stamp.fill(0);
            self.version = 1;
        }
    }

    #[inline]
    fn touch(&mut self, x: usize) -> bool {
        if self.stamp[x] != self.version {
            self.stamp[x] = self.version;
            self.parent[x] = x;
            true
        } else {
            false
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            let p = self.parent[x];
            self.parent[x] = self.parent[p];
            x = self.parent[x];
        }
        x
    }

    /// Adds the edge; returns 1 if it merged two components.
    fn union(&mut self, x: usize, y: usize) -> u32 {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            0
        } else {
            self.parent[rx] = ry;
            1
        }
    }
}

/// `(CC, #S)` of a pair list, using the shared scratch.
fn cc_support(pairs: &[(usize, usize)], scratch: &mut CoordSets) -> (u32, u32) {
    scratch.begin();
    let mut support = 0u32;
    let mut merges = 0u32;
    for &(i, j) in pairs {
        if scratch.touch(i) {
            support += 1;
        }
        if scratch.touch(j) {
            support += 1;
        }
        merges += scratch.union(i, j);
    }
    (support - merges, support)
}

pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let mut t = k;
        loop {
            if t == 0 {
                return;
            }
            t -= 1;
            if c[t] < n - (k - t) {
                c[t] += 1;
                for u in t + 1..k {
                    c[u] = c[u - 1] + 1;
                }
                break;
            }
        }
    }
}

fn enumerate_tuples(p: &VincularPattern, n: usize) -> Vec<IndexedTuple> {
    let k = p.k();
    let mut tuples = Vec::new();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for_each_combination(n, k, |c| subsets.push(c.to_vec()));
    p.for_each_index_tuple(n, |i_tuple| {
        for values in &subsets {
            // j_{π⁻¹(s)} takes the s-th smallest value, i.e. j_t = v_{π(t)}
            let pairs: Vec<(usize, usize)> = (0..k)
                .map(|t| (i_tuple[t], values[p.pattern().apply(t)]))
                .collect();
            let mask = pairs
                .iter()
                .fold(0u64, |m, &(i, j)| m | (1 << i) | (1 << j));
            tuples.push(IndexedTuple { pairs, mask });
        }
    });
    tuples
}

fn guard_terms(estimated: f64) -> Result<()> {
    if estimated > COST_GUARD {
        return Err(Error::CostGuard {
            estimated,
            limit: COST_GUARD,
        });
    }
    Ok(())
}

fn npow(n: usize, e: i64) -> f64 {
    (n as f64).powi(e as i32)
}

/// The sum `R = Σ_{α ∈ I^{(π,A)}} n^{CC(α) - #S(α)}`, exactly enumerated.
pub fn r_value(p: &VincularPattern, n: usize) -> Result<f64> {
    let k = p.k();
    guard_terms(p.index_tuple_count(n) * binomial_f64(n, k))?;
    let mut scratch = CoordSets::new(n);
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for_each_combination(n, k, |c| subsets.push(c.to_vec()));
    let mut total = 0.0f64;
    let mut pairs = vec![(0usize, 0usize); k];
    p.for_each_index_tuple(n, |i_tuple| {
        for values in &subsets {
            for t in 0..k {
                pairs[t] = (i_tuple[t], values[p.pattern().apply(t)]);
            }
            let (cc, support) = cc_support(&pairs, &mut scratch);
            total += npow(n, cc as i64 - support as i64);
        }
    });
    Ok(total)
}

/// The explicit bound on `R` for a pattern of size `k` with `m` blocks:
/// `2^{C(2k,2)} n^m`.
pub fn r_bound(p: &VincularPattern, n: usize) -> f64 {
    let k = p.k() as u32;
    let exponent = (2 * k) * (2 * k - 1) / 2;
    2f64.powi(exponent as i32) * (n as f64).powi(p.block_count() as i32)
}

/// How to evaluate `T_ℓ`.
#[derive(Clone, Copy, Debug)]
pub enum TellMode {
    /// Full maximization over tuples; only allowed for `ℓ = 1`.
    Exact,
    /// Maximize over `trials` random `ℓ`-tuples: a lower bound on the max.
    Sampled { trials: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct TellValue {
    pub value: f64,
    /// True when the maximization was sampled rather than exhaustive.
    pub is_lower_bound: bool,
}

/// `T_ℓ = max over ℓ-tuples of Σ_β W(β, tuple) · Ψ(tuple ⊎ β) / Ψ(tuple)`,
/// restricted to `I^{(π,A)}`. Exact mode enumerates all `|I|²` pairs
/// (`ℓ = 1` only); sampled mode reports a lower bound on the true max. The
/// inner sum is always computed exactly.
pub fn t_ell_value(p: &VincularPattern, n: usize, ell: usize, mode: TellMode) -> Result<TellValue> {
    if ell == 0 {
        return Err(Error::Constraint("ell must be >= 1".into()));
    }
    if n > 64 {
        return Err(Error::Constraint(
            "T_ell computations require n <= 64".into(),
        ));
    }
    let tuple_count = p.index_tuple_count(n) * binomial_f64(n, p.k());
    match mode {
        TellMode::Exact => {
            if ell != 1 {
                return Err(Error::CostGuard {
                    estimated: tuple_count.powi(ell as i32 + 1),
                    limit: COST_GUARD,
                });
            }
            guard_terms(tuple_count * tuple_count)?;
            let tuples = enumerate_tuples(p, n);
            let value = tuples
                .par_iter()
                .map(|alpha| inner_sum(std::slice::from_ref(alpha), &tuples, n))
                .reduce(|| 0.0, f64::max);
            Ok(TellValue {
                value,
                is_lower_bound: false,
            })
        }
        TellMode::Sampled { trials, seed } => {
            guard_terms(tuple_count * trials as f64 + tuple_count)?;
            let tuples = enumerate_tuples(p, n);
            let mut rng = crate::sampler::RandomStream::new(seed, 0).rng();
            let mut best = 0.0f64;
            for _ in 0..trials {
                let chosen: Vec<IndexedTuple> = (0..ell)
                    .map(|_| tuples[rng.gen_range(0..tuples.len())].clone())
                    .collect();
                best = best.max(inner_sum(&chosen, &tuples, n));
            }
            Ok(TellValue {
                value: best,
                is_lower_bound: true,
            })
        }
    }
}

/// `Σ_β W({β}, tuple) Ψ(tuple ⊎ β)/Ψ(tuple)` for a fixed `ℓ`-tuple.
fn inner_sum(tuple: &[IndexedTuple], all: &[IndexedTuple], n: usize) -> f64 {
    let mut scratch = CoordSets::new(n);
    let combined: Vec<(usize, usize)> =
        tuple.iter().flat_map(|t| t.pairs.iter().copied()).collect();
    let mask: u64 = tuple.iter().fold(0, |m, t| m | t.mask);
    let (cc_base, support_base) = cc_support(&combined, &mut scratch);
    let base_exponent = cc_base as i64 - support_base as i64;
    let mut with_beta = combined.clone();
    let inv_n = 1.0 / n as f64;
    let mut sum = 0.0;
    for beta in all {
        let w = if beta.mask & mask == 0 { inv_n } else { 1.0 };
        with_beta.truncate(combined.len());
        with_beta.extend_from_slice(&beta.pairs);
        let (cc_all, support_all) = cc_support(&with_beta, &mut scratch);
        let exponent = cc_all as i64 - support_all as i64 - base_exponent;
        sum += w * npow(n, exponent);
    }
    sum
}

/// Samples a uniform member of `I^{(π,A)}` as an edge multiset.
pub fn sample_index_tuple<R: Rng>(p: &VincularPattern, n: usize, rng: &mut R) -> EdgeMultiset {
    let k = p.k();
    let blocks = p.blocks();
    let m = blocks.len();
    // random m-combination of [n-k+m], then re-expand the block lengths
    let slots = n - k + m;
    let mut starts: Vec<usize> = rand::seq::index::sample(rng, slots, m).into_vec();
    starts.sort_unstable();
    let mut i_tuple = Vec::with_capacity(k);
    let mut shift = 0;
    for (b, &len) in blocks.iter().enumerate() {
        let start = starts[b] + shift;
        for u in 0..len {
            i_tuple.push(start + u);
        }
        shift += len - 1;
    }
    let mut values: Vec<usize> = rand::seq::index::sample(rng, n, k).into_vec();
    values.sort_unstable();
    let pairs: Vec<(usize, usize)> = (0..k)
        .map(|t| (i_tuple[t], values[p.pattern().apply(t)]))
        .collect();
    EdgeMultiset::new(n, pairs).expect("coordinates in range")
}
